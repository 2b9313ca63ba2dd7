use std::path::{Path, PathBuf};

use serde_json::{json, Value};
use specfuse::fusion::{build_sample_set, fuse_datasets, split_shuffle, FusionConfig, GridRule};
use specfuse::interp::resample_pixel;
use specfuse::io::{
    container_paths, export_pixel_plot, export_surface_plot, read_cube, read_manifest, read_samples, write_cube,
    write_labels, write_samples, BandReduction, CUBE_SUFFIX, LABEL_SUFFIX,
};
use specfuse::metrics::{cmse_cube, ndvi_map, ndvi_mse, nearest_band, surface_avg_difference, NdviClass, NdviConfig, SurfaceNormalization};
use specfuse::mlp::{evaluate, history_to_csv, load_checkpoint, samples_to_arrays, save_checkpoint, train, Mlp, MlpArchitecture, TrainConfig};
use specfuse::{Error, InterpolationMethod, MergedClass, Result, SpectralCube, SplineBoundary, WavelengthGrid};

use crate::args::{EvalArgs, FuseArgs, Metric, MetricsArgs, NdviArgs, Normalization, PlotArgs, PlotFormat, PlotKindArg, Reduction, TrainArgs};
use crate::provenance::{beside, write_file, GridSummary, Provenance};

/// Result of a successful subcommand.
pub struct Run {
    pub provenance: Provenance,
    pub provenance_path: PathBuf,
    pub stdout: String,
}

fn default_provenance_path(subcommand: &str) -> PathBuf {
    PathBuf::from(format!("specfuse-{subcommand}.provenance.json"))
}

fn pretty(v: &Value) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("json value serializes");
    s.push('\n');
    s
}

fn parse_method(name: &str, boundary: &str) -> Result<InterpolationMethod> {
    InterpolationMethod::parse(name, boundary.parse::<SplineBoundary>()?)
}

fn parse_grid(spec: &str) -> Result<(f64, f64, f64)> {
    let parts: Vec<&str> = spec.split(':').collect();
    let bad = || Error::Config(format!("grid must be START:STEP:STOP, got {spec:?}"));
    if parts.len() != 3 {
        return Err(bad());
    }
    let v: Vec<f64> = parts
        .iter()
        .map(|p| p.trim().parse::<f64>().map_err(|_| bad()))
        .collect::<Result<_>>()?;
    Ok((v[0], v[1], v[2]))
}

fn hash_cube(prov: &mut Provenance, path: &Path) -> Result<()> {
    let (header, payload) = container_paths(path, CUBE_SUFFIX);
    prov.input(&header)?;
    prov.input(&payload)?;
    Ok(())
}

fn stem(path: &Path) -> String {
    let name = path.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
    for suffix in [".scube.json", ".scube.bin", ".scube"] {
        if let Some(s) = name.strip_suffix(suffix) {
            return s.to_string();
        }
    }
    name
}

/// Dataset names become file names inside the output directory.
fn check_dataset_name(name: &str) -> Result<()> {
    let ok = !name.is_empty()
        && !name.starts_with('.')
        && name.chars().all(|c| c.is_ascii_alphanumeric() || matches!(c, '-' | '_' | '.'));
    if ok {
        Ok(())
    } else {
        Err(Error::Manifest(format!(
            "dataset name {name:?} must use only letters, digits, '-', '_' and '.'"
        )))
    }
}

pub fn fuse(a: &FuseArgs) -> Result<Run> {
    let mut prov = Provenance::new("fuse");
    let manifest = read_manifest(&a.manifest)?;
    prov.manifest_sha256 = Some(prov.input(&a.manifest)?);
    manifest.validate()?;
    for e in &manifest.entries {
        check_dataset_name(&e.name)?;
    }
    let method = parse_method(&a.method, &a.boundary)?;
    let grid_rule = match &a.grid {
        Some(spec) => {
            let (start, step, stop) = parse_grid(spec)?;
            GridRule::Explicit { start, step, stop }
        }
        None => GridRule::FromReference,
    };
    let cfg = FusionConfig {
        method,
        grid_rule,
        max_wavelength_cap: a.cap,
        seed: a.seed,
        train_fraction: a.train_fraction,
        normalize: a.normalize,
    };
    let base = a.manifest.parent().unwrap_or(Path::new(""));
    for e in &manifest.entries {
        hash_cube(&mut prov, &base.join(&e.cube_path))?;
        if let Some(l) = &e.label_path {
            let (header, payload) = container_paths(&base.join(l), LABEL_SUFFIX);
            prov.input(&header)?;
            prov.input(&payload)?;
        }
    }
    let (grid, fused) = fuse_datasets(&manifest, base, &cfg)?;

    let mut datasets = Vec::new();
    for d in &fused {
        let cube_out = a.out.join(&d.name);
        write_cube(&d.cube, &cube_out)?;
        prov.output(&container_paths(&cube_out, CUBE_SUFFIX).0);
        let mut labelled = Value::Null;
        if let Some(labels) = &d.labels {
            write_labels(labels, &cube_out)?;
            prov.output(&container_paths(&cube_out, LABEL_SUFFIX).0);
            let merged = labels.merged_classes()?;
            labelled = json!(merged.iter().filter(|c| **c != MergedClass::Unknown).count());
        }
        datasets.push(json!({
            "name": d.name,
            "width": d.cube.width(),
            "height": d.cube.height(),
            "bands": d.cube.bands(),
            "labelled_pixels": labelled,
        }));
    }

    let labelled: Vec<&str> = fused.iter().filter(|d| d.labels.is_some()).map(|d| d.name.as_str()).collect();
    let mut counts = json!(null);
    if !labelled.is_empty() {
        let samples = build_sample_set(&fused, &labelled)?;
        let (train_set, test_set) = split_shuffle(&samples, cfg.seed, cfg.train_fraction)?;
        for (file, set) in [("samples.csv", &samples), ("train.csv", &train_set), ("test.csv", &test_set)] {
            let p = a.out.join(file);
            write_samples(set, &p)?;
            prov.output(&p);
        }
        counts = json!({"samples": samples.len(), "train": train_set.len(), "test": test_set.len()});
    }

    prov.grid = Some(GridSummary::from(&grid));
    prov.method = Some(method.to_string());
    prov.seed = Some(cfg.seed);
    prov.cap = cfg.max_wavelength_cap;
    prov.normalization = Some(if cfg.normalize { "min-max" } else { "none" }.into());
    let summary = json!({
        "grid": {"count": grid.len(), "first": grid.first(), "last": grid.last()},
        "method": method.to_string(),
        "datasets": datasets,
        "samples": counts,
    });
    Ok(Run {
        provenance: prov,
        provenance_path: a.out.join("provenance.json"),
        stdout: pretty(&summary),
    })
}

pub fn metrics(a: &MetricsArgs) -> Result<Run> {
    let mut prov = Provenance::new("metrics");
    hash_cube(&mut prov, &a.cube)?;
    hash_cube(&mut prov, &a.against)?;
    let reference = read_cube(&a.cube)?;
    let other = read_cube(&a.against)?;
    let method = a.method.as_deref().map(|m| parse_method(m, &a.boundary)).transpose()?;
    let ndvi_cfg = NdviConfig {
        red_target_nm: a.red_nm,
        nir_target_nm: a.nir_nm,
    };
    let norm = match a.normalization {
        Normalization::Span => SurfaceNormalization::Span,
        Normalization::Raw => SurfaceNormalization::Raw,
    };
    let (value, normalization) = match a.metric {
        Metric::Cmse => {
            let m = method.ok_or_else(|| Error::Config("--method is required for cmse".into()))?;
            (cmse_cube(&reference, other.grid(), m)?, None)
        }
        Metric::Surface => {
            let label = match norm {
                SurfaceNormalization::Span => "span",
                SurfaceNormalization::Raw => "raw",
            };
            (surface_avg_difference(&reference, &other, norm)?, Some(label))
        }
        Metric::MseNdvi => (ndvi_mse(&reference, &other, &ndvi_cfg)?, None),
    };
    if !value.is_finite() {
        return Err(Error::Internal(format!("{} produced a non-finite value", a.metric.name())));
    }
    let report = json!({
        "dataset": a.dataset.clone().unwrap_or_else(|| stem(&a.cube)),
        "method": method.map(|m| m.to_string()),
        "metric": a.metric.name(),
        "value": value,
        "normalization": normalization,
        "config": {
            "against": a.against.display().to_string(),
            "red_target_nm": a.red_nm,
            "nir_target_nm": a.nir_nm,
        },
    });
    let text = pretty(&report);
    let provenance_path = match &a.out {
        Some(out) => {
            write_file(out, text.as_bytes())?;
            prov.output(out);
            beside(out)
        }
        None => default_provenance_path("metrics"),
    };
    prov.method = method.map(|m| m.to_string());
    prov.normalization = normalization.map(str::to_string);
    if a.metric == Metric::Cmse {
        prov.grid = Some(GridSummary::from(other.grid()));
    }
    Ok(Run {
        provenance: prov,
        provenance_path,
        stdout: text,
    })
}

fn ndvi_class_name(c: NdviClass) -> &'static str {
    match c {
        NdviClass::NonVegetated => "non_vegetated",
        NdviClass::BareSoil => "bare_soil",
        NdviClass::SparseVegetation => "sparse_vegetation",
        NdviClass::DenseVegetation => "dense_vegetation",
    }
}

pub fn ndvi(a: &NdviArgs) -> Result<Run> {
    let mut prov = Provenance::new("ndvi");
    hash_cube(&mut prov, &a.cube)?;
    let cube = read_cube(&a.cube)?;
    let cfg = NdviConfig {
        red_target_nm: a.red_nm,
        nir_target_nm: a.nir_nm,
    };
    let map = ndvi_map(&cube, &cfg)?;
    let red = cube.grid().as_slice()[nearest_band(cube.grid(), a.red_nm)?];
    let nir = cube.grid().as_slice()[nearest_band(cube.grid(), a.nir_nm)?];
    let mut classes = serde_json::Map::new();
    for c in [
        NdviClass::NonVegetated,
        NdviClass::BareSoil,
        NdviClass::SparseVegetation,
        NdviClass::DenseVegetation,
    ] {
        let n = map.values.iter().filter(|v| NdviClass::of(**v) == c).count();
        classes.insert(ndvi_class_name(c).into(), json!(n));
    }
    let mean = map.values.iter().sum::<f64>() / map.values.len() as f64;
    let summary = json!({
        "width": map.width,
        "height": map.height,
        "red_band_nm": red,
        "nir_band_nm": nir,
        "mean": mean,
        "classes": classes,
    });
    let provenance_path = match &a.out {
        Some(out) => {
            let mut full = summary.clone();
            full["values"] = json!(map.values);
            write_file(out, pretty(&full).as_bytes())?;
            prov.output(out);
            beside(out)
        }
        None => default_provenance_path("ndvi"),
    };
    Ok(Run {
        provenance: prov,
        provenance_path,
        stdout: pretty(&summary),
    })
}

fn parse_pixel(spec: &str) -> Result<(usize, usize)> {
    let bad = || Error::Config(format!("pixel must be ROW,COL, got {spec:?}"));
    let (r, c) = spec.split_once(',').ok_or_else(bad)?;
    Ok((r.trim().parse().map_err(|_| bad())?, c.trim().parse().map_err(|_| bad())?))
}

pub fn plot(a: &PlotArgs) -> Result<Run> {
    let mut prov = Provenance::new("plot");
    hash_cube(&mut prov, &a.cube)?;
    let cube: SpectralCube = read_cube(&a.cube)?;
    let dataset = stem(&a.cube);
    let bundle = match a.kind {
        PlotKindArg::Pixel2d => {
            if a.pixels.is_empty() {
                return Err(Error::Config("pixel2d needs at least one --pixel ROW,COL".into()));
            }
            let methods = a
                .methods
                .iter()
                .map(|m| parse_method(m, &a.boundary))
                .collect::<Result<Vec<_>>>()?;
            let target = match (&a.grid, methods.is_empty()) {
                (Some(spec), _) => {
                    let (start, step, stop) = parse_grid(spec)?;
                    Some(WavelengthGrid::arithmetic(start, step, stop)?)
                }
                (None, false) => return Err(Error::Config("--method series need a --grid".into())),
                (None, true) => None,
            };
            let mut series = Vec::new();
            for spec in &a.pixels {
                let (r, c) = parse_pixel(spec)?;
                let p = cube.pixel_at(r, c)?;
                let prefix = if a.pixels.len() > 1 { format!("({r},{c}) ") } else { String::new() };
                if let Some(t) = &target {
                    for m in &methods {
                        series.push((format!("{prefix}{m}"), resample_pixel(&p, t, *m)?));
                    }
                }
                series.insert(series.len() - methods.len(), (format!("{prefix}reference"), p));
            }
            if let Some(t) = &target {
                prov.grid = Some(GridSummary::from(t));
            }
            export_pixel_plot(&series)?.with_metadata("pixels", a.pixels.join(" "))
        }
        PlotKindArg::Surface3d => {
            let reduction = match a.reduction {
                Reduction::Sum => BandReduction::Sum,
                Reduction::Mean => BandReduction::Mean,
            };
            export_surface_plot(&cube, reduction)
        }
    }
    .with_metadata("dataset", &dataset);
    let text = match a.format {
        PlotFormat::Csv => bundle.to_csv(),
        PlotFormat::Json => bundle.to_json(),
    };
    write_file(&a.out, text.as_bytes())?;
    prov.output(&a.out);
    if !a.methods.is_empty() {
        prov.method = Some(a.methods.join(","));
    }
    let summary = json!({
        "kind": match a.kind { PlotKindArg::Pixel2d => "pixel2d", PlotKindArg::Surface3d => "surface3d" },
        "series": bundle.series.iter().map(|s| s.name.clone()).collect::<Vec<_>>(),
        "out": a.out.display().to_string(),
    });
    Ok(Run {
        provenance: prov,
        provenance_path: beside(&a.out),
        stdout: pretty(&summary),
    })
}

fn parse_arch(spec: &str, bands: usize) -> Result<MlpArchitecture> {
    let arch = match spec {
        "66" => MlpArchitecture::bands66(),
        "103" => MlpArchitecture::bands103(),
        other => {
            let hidden = other
                .strip_prefix("custom:")
                .ok_or_else(|| Error::Config(format!("unknown architecture {other:?}; use 66, 103 or custom:H1,H2,...")))?;
            let sizes = hidden
                .split(',')
                .filter(|s| !s.is_empty())
                .map(|s| {
                    s.trim()
                        .parse::<usize>()
                        .map_err(|_| Error::Config(format!("bad hidden layer size {s:?}")))
                })
                .collect::<Result<Vec<_>>>()?;
            MlpArchitecture::new(bands, sizes, 2)?
        }
    };
    if arch.input_size != bands {
        return Err(Error::Shape(format!(
            "architecture {spec} expects {} bands, training data has {bands}",
            arch.input_size
        )));
    }
    Ok(arch)
}

pub fn train_cmd(a: &TrainArgs) -> Result<Run> {
    let mut prov = Provenance::new("train");
    prov.input(&a.train_data)?;
    let samples = read_samples(&a.train_data)?;
    let arch = parse_arch(&a.arch, samples.n_bands())?;
    let cfg = TrainConfig {
        epochs: a.epochs,
        learning_rate: a.lr,
        batch_size: a.batch,
        seed: a.seed,
        ..TrainConfig::default()
    };
    cfg.validate()?;
    let (x, t) = samples_to_arrays(&samples)?;
    let mut model = Mlp::<f32>::init(&arch, a.seed)?;
    let history = train(&mut model, x.view(), &t, &cfg)?;
    save_checkpoint(&model, &cfg, &a.out)?;
    prov.output(&a.out);
    let mut history_path = a.out.as_os_str().to_owned();
    history_path.push(".history.csv");
    let history_path = PathBuf::from(history_path);
    write_file(&history_path, history_to_csv(&history).as_bytes())?;
    prov.output(&history_path);
    prov.seed = Some(a.seed);
    prov.grid = Some(GridSummary {
        count: samples.n_bands(),
        first: samples.wavelengths[0],
        last: samples.wavelengths[samples.n_bands() - 1],
        wavelengths: samples.wavelengths.clone(),
    });
    let last = history.last().expect("at least one epoch");
    let summary = json!({
        "samples": samples.len(),
        "bands": samples.n_bands(),
        "parameters": model.parameter_count(),
        "epochs": cfg.epochs,
        "final_loss": last.loss,
        "final_accuracy": last.accuracy,
        "checkpoint": a.out.display().to_string(),
    });
    Ok(Run {
        provenance: prov,
        provenance_path: beside(&a.out),
        stdout: pretty(&summary),
    })
}

pub fn eval(a: &EvalArgs) -> Result<Run> {
    let mut prov = Provenance::new("eval");
    prov.input(&a.checkpoint)?;
    prov.input(&a.data)?;
    let (model, header) = load_checkpoint(&a.checkpoint)?;
    let samples = read_samples(&a.data)?;
    if samples.n_bands() != header.architecture.input_size {
        return Err(Error::Shape(format!(
            "checkpoint expects {} bands, data has {}",
            header.architecture.input_size,
            samples.n_bands()
        )));
    }
    let (x, t) = samples_to_arrays(&samples)?;
    let e = evaluate(&model, x.view(), &t)?;
    let report = json!({
        "accuracy": e.accuracy,
        "total": e.total,
        "correct": e.correct,
        "classes": ["vegetation", "non-vegetation"],
        "confusion": e.confusion,
    });
    let text = pretty(&report);
    let provenance_path = match &a.out {
        Some(out) => {
            write_file(out, text.as_bytes())?;
            prov.output(out);
            beside(out)
        }
        None => default_provenance_path("eval"),
    };
    prov.seed = Some(header.config.seed);
    Ok(Run {
        provenance: prov,
        provenance_path,
        stdout: text,
    })
}
