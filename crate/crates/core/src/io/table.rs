//! Sample sets as CSV: `dataset,label,<wavelength>...`, one row per pixel.

use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::fusion::SampleSet;

pub fn samples_to_csv(s: &SampleSet) -> String {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new());
    let mut header = vec!["dataset".to_string(), "label".to_string()];
    header.extend(s.wavelengths.iter().map(|w| w.to_string()));
    w.write_record(&header).expect("in-memory write");
    for i in 0..s.len() {
        let mut rec = vec![s.provenance[i].clone(), s.labels[i].to_string()];
        rec.extend(s.row(i).iter().map(|v| v.to_string()));
        w.write_record(&rec).expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8 csv")
}

pub fn write_samples(s: &SampleSet, path: &Path) -> Result<()> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
    }
    fs::write(path, samples_to_csv(s)).map_err(|e| Error::io(path, e))
}

pub fn read_samples(path: &Path) -> Result<SampleSet> {
    let mut r = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_path(path)
        .map_err(|e| Error::format(path, "csv", e.to_string()))?;
    let header = r.headers().map_err(|e| Error::format(path, "header", e.to_string()))?.clone();
    if header.len() < 3 || &header[0] != "dataset" || &header[1] != "label" {
        return Err(Error::format(path, "header", "expected dataset,label,<wavelengths...>"));
    }
    let wavelengths = header
        .iter()
        .skip(2)
        .map(|h| h.parse::<f64>())
        .collect::<std::result::Result<Vec<_>, _>>()
        .map_err(|e| Error::format(path, "header", format!("wavelength column: {e}")))?;
    let mut features = Vec::new();
    let mut labels = Vec::new();
    let mut provenance = Vec::new();
    for (line, rec) in r.records().enumerate() {
        let rec = rec.map_err(|e| Error::format(path, "row", e.to_string()))?;
        if rec.len() != header.len() {
            return Err(Error::format(path, "row", format!("row {} has {} columns", line + 1, rec.len())));
        }
        provenance.push(rec[0].to_string());
        labels.push(
            rec[1]
                .parse::<u8>()
                .map_err(|e| Error::format(path, "label", format!("row {}: {e}", line + 1)))?,
        );
        for v in rec.iter().skip(2) {
            features.push(
                v.parse::<f32>()
                    .map_err(|e| Error::format(path, "row", format!("row {}: {e}", line + 1)))?,
            );
        }
    }
    SampleSet::new(wavelengths, features, labels, provenance)
}
