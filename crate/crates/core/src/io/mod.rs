//! File formats: cube and label containers, sample tables and plot bundles.

mod container;
mod plot;
mod table;

pub use container::{
    container_paths, read_cube, read_cube_header, read_labels, write_cube, write_labels, CubeHeader, CUBE_SUFFIX,
    LABEL_SUFFIX,
};
pub use plot::{export_pixel_plot, export_surface_plot, BandReduction, PlotBundle, PlotKind, Series};
pub use table::{read_samples, samples_to_csv, write_samples};

use std::path::Path;

use crate::error::{Error, Result};
use crate::model::DatasetManifest;

pub fn read_manifest(path: &Path) -> Result<DatasetManifest> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    DatasetManifest::from_json(&text)
}
