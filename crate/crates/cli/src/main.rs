mod args;
mod commands;
mod provenance;

use std::io::Write;
use std::panic::{self, AssertUnwindSafe};
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::Parser;
use serde_json::json;

use args::{Cli, Command};

fn report_error(kind: &str, message: &str) {
    eprintln!("{}", json!({"error": kind, "message": message}));
}

fn dispatch(cli: &Cli) -> specfuse::Result<commands::Run> {
    match &cli.command {
        Command::Fuse(a) => commands::fuse(a),
        Command::Metrics(a) => commands::metrics(a),
        Command::Ndvi(a) => commands::ndvi(a),
        Command::Plot(a) => commands::plot(a),
        Command::Train(a) => commands::train_cmd(a),
        Command::Eval(a) => commands::eval(a),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                let _ = e.print();
                return ExitCode::SUCCESS;
            }
            report_error("usage", e.to_string().trim_end());
            return ExitCode::from(2);
        }
    };

    panic::set_hook(Box::new(|_| {}));
    let outcome = panic::catch_unwind(AssertUnwindSafe(|| {
        let run = dispatch(&cli)?;
        run.provenance.write(&run.provenance_path)?;
        Ok::<_, specfuse::Error>(run)
    }));

    match outcome {
        Ok(Ok(run)) => {
            let mut out = std::io::stdout().lock();
            let _ = out.write_all(run.stdout.as_bytes());
            let _ = out.flush();
            eprintln!("provenance: {}", run.provenance_path.display());
            ExitCode::SUCCESS
        }
        Ok(Err(e)) => {
            report_error(e.kind(), &e.to_string());
            ExitCode::from(if e.is_user_error() { 2 } else { 1 })
        }
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unexpected failure".into());
            report_error("internal", &msg);
            ExitCode::from(1)
        }
    }
}
