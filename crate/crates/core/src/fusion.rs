//! Dataset fusion: choose the common wavelength grid, resample every dataset
//! onto it, merge labels and assemble shuffled train/test pixel sets.

use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::interp::{resample_cube, InterpolationMethod};
use crate::model::{merge_labels, DatasetManifest, LabelMap, MergedClass, SpectralCube, WavelengthGrid};

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "rule")]
pub enum GridRule {
    /// The reference dataset's own wavelengths.
    #[default]
    FromReference,
    /// `start, start + step, ..., stop`.
    Explicit { start: f64, step: f64, stop: f64 },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FusionConfig {
    pub method: InterpolationMethod,
    pub grid_rule: GridRule,
    pub max_wavelength_cap: Option<f64>,
    pub seed: u64,
    pub train_fraction: f64,
    /// Min-max scale each dataset to [0, 1] before resampling.
    pub normalize: bool,
}

impl Default for FusionConfig {
    fn default() -> Self {
        FusionConfig {
            method: InterpolationMethod::Linear,
            grid_rule: GridRule::FromReference,
            max_wavelength_cap: None,
            seed: 0,
            train_fraction: 0.8,
            normalize: false,
        }
    }
}

impl FusionConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.train_fraction > 0.0 && self.train_fraction < 1.0) {
            return Err(Error::Config(format!(
                "train_fraction must lie in (0, 1), got {}",
                self.train_fraction
            )));
        }
        if let GridRule::Explicit { step, .. } = self.grid_rule {
            if !(step > 0.0) {
                return Err(Error::Config(format!("grid step must be positive, got {step}")));
            }
        }
        if let Some(cap) = self.max_wavelength_cap {
            if !(cap > 0.0) || !cap.is_finite() {
                return Err(Error::Config(format!("wavelength cap must be positive, got {cap}")));
            }
        }
        Ok(())
    }
}

/// Common grid from per-dataset spans and the reference dataset's grid.
///
/// The candidate grid (reference wavelengths or the explicit arithmetic grid)
/// is clipped to `[max of minima, min(cap, min of maxima)]`.
pub fn derive_grid(spans: &[(String, (f64, f64))], reference: &WavelengthGrid, cfg: &FusionConfig) -> Result<WavelengthGrid> {
    cfg.validate()?;
    let lo = spans.iter().map(|(_, s)| s.0).fold(f64::NEG_INFINITY, f64::max);
    let mut hi = spans.iter().map(|(_, s)| s.1).fold(f64::INFINITY, f64::min);
    if let Some(cap) = cfg.max_wavelength_cap {
        hi = hi.min(cap);
    }
    let describe = || {
        let mut s: Vec<String> = spans.iter().map(|(n, (a, b))| format!("{n}: [{a}, {b}]")).collect();
        if let Some(cap) = cfg.max_wavelength_cap {
            s.push(format!("cap {cap}"));
        }
        s.join(", ")
    };
    if !(lo < hi) {
        return Err(Error::NoCommonRange(describe()));
    }
    let candidate = match cfg.grid_rule {
        GridRule::FromReference => reference.clone(),
        GridRule::Explicit { start, step, stop } => WavelengthGrid::arithmetic(start, step, stop)?,
    };
    candidate
        .clip(lo, hi)
        .map_err(|_| Error::NoCommonRange(format!("fewer than two grid wavelengths survive clipping ({})", describe())))
}

/// Reads the cube headers named by the manifest and derives the common grid.
pub fn derive_reference_grid(manifest: &DatasetManifest, base_dir: &Path, cfg: &FusionConfig) -> Result<WavelengthGrid> {
    manifest.validate()?;
    let mut spans = Vec::new();
    let mut reference = None;
    for e in &manifest.entries {
        let header = crate::io::read_cube_header(&base_dir.join(&e.cube_path)).map_err(|err| err.in_dataset(&e.name))?;
        let grid = header.grid()?;
        spans.push((e.name.clone(), grid.span()));
        if e.name == manifest.reference_name {
            reference = Some(grid);
        }
    }
    derive_grid(&spans, reference.as_ref().expect("validated manifest"), cfg)
}

#[derive(Clone, Debug, PartialEq)]
pub struct DatasetInput {
    pub name: String,
    pub cube: SpectralCube,
    pub labels: Option<LabelMap>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct FusedDataset {
    pub name: String,
    pub cube: SpectralCube,
    /// Merged labels (codes 0/1/2), when the dataset has ground truth.
    pub labels: Option<LabelMap>,
}

fn min_max_normalize(cube: &SpectralCube) -> Result<SpectralCube> {
    let (lo, hi) = cube
        .data()
        .iter()
        .fold((f32::INFINITY, f32::NEG_INFINITY), |(a, b), v| (a.min(*v), b.max(*v)));
    let range = hi - lo;
    let data = cube
        .data()
        .iter()
        .map(|v| if range > 0.0 { (v - lo) / range } else { 0.0 })
        .collect();
    SpectralCube::new(cube.width(), cube.height(), cube.grid().clone(), data)
}

/// Resamples in-memory datasets onto the grid derived from them.
pub fn fuse_cubes(inputs: Vec<DatasetInput>, reference_name: &str, cfg: &FusionConfig) -> Result<(WavelengthGrid, Vec<FusedDataset>)> {
    cfg.validate()?;
    let reference = inputs
        .iter()
        .find(|d| d.name == reference_name)
        .ok_or_else(|| Error::Manifest(format!("reference {reference_name:?} not among datasets")))?;
    let spans: Vec<_> = inputs.iter().map(|d| (d.name.clone(), d.cube.grid().span())).collect();
    let grid = derive_grid(&spans, reference.cube.grid(), cfg)?;

    let mut fused = Vec::with_capacity(inputs.len());
    for d in inputs {
        let name = d.name;
        let tag = |e: Error| e.in_dataset(&name);
        if let Some(l) = &d.labels {
            if (l.width(), l.height()) != (d.cube.width(), d.cube.height()) {
                return Err(tag(Error::Shape(format!(
                    "labels {}x{} vs cube {}x{}",
                    l.width(),
                    l.height(),
                    d.cube.width(),
                    d.cube.height()
                ))));
            }
        }
        let source = if cfg.normalize {
            min_max_normalize(&d.cube).map_err(tag)?
        } else {
            d.cube
        };
        let cube = resample_cube(&source, &grid, cfg.method).map_err(tag)?;
        let labels = d.labels.as_ref().map(merge_labels).transpose().map_err(tag)?;
        fused.push(FusedDataset { name, cube, labels });
    }
    Ok((grid, fused))
}

/// Loads every manifest entry (paths relative to `base_dir`) and fuses them.
pub fn fuse_datasets(manifest: &DatasetManifest, base_dir: &Path, cfg: &FusionConfig) -> Result<(WavelengthGrid, Vec<FusedDataset>)> {
    manifest.validate()?;
    let mut inputs = Vec::with_capacity(manifest.entries.len());
    for e in &manifest.entries {
        let cube = crate::io::read_cube(&base_dir.join(&e.cube_path)).map_err(|err| err.in_dataset(&e.name))?;
        let labels = e
            .label_path
            .as_ref()
            .map(|p| crate::io::read_labels(&base_dir.join(p)))
            .transpose()
            .map_err(|err| err.in_dataset(&e.name))?;
        inputs.push(DatasetInput {
            name: e.name.clone(),
            cube,
            labels,
        });
    }
    fuse_cubes(inputs, &manifest.reference_name, cfg)
}

/// Labelled pixels as a flat feature matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct SampleSet {
    pub wavelengths: Vec<f64>,
    /// Row-major `len() × n_bands()`.
    pub features: Vec<f32>,
    /// Merged class codes, always 1 (vegetation) or 2 (non-vegetation).
    pub labels: Vec<u8>,
    /// Source dataset of each sample.
    pub provenance: Vec<String>,
}

impl SampleSet {
    pub fn new(wavelengths: Vec<f64>, features: Vec<f32>, labels: Vec<u8>, provenance: Vec<String>) -> Result<Self> {
        let nb = wavelengths.len();
        if nb == 0 {
            return Err(Error::Shape("sample set needs at least one band".into()));
        }
        if features.len() != labels.len() * nb {
            return Err(Error::LengthMismatch {
                what: "sample features vs labels × bands",
                expected: labels.len() * nb,
                actual: features.len(),
            });
        }
        if provenance.len() != labels.len() {
            return Err(Error::LengthMismatch {
                what: "sample provenance vs labels",
                expected: labels.len(),
                actual: provenance.len(),
            });
        }
        if let Some(bad) = labels.iter().find(|l| !matches!(l, 1 | 2)) {
            return Err(Error::Config(format!("sample labels must be 1 or 2, found {bad}")));
        }
        Ok(SampleSet {
            wavelengths,
            features,
            labels,
            provenance,
        })
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn n_bands(&self) -> usize {
        self.wavelengths.len()
    }

    pub fn row(&self, i: usize) -> &[f32] {
        let nb = self.n_bands();
        &self.features[i * nb..(i + 1) * nb]
    }

    /// Samples at `indices`, in that order.
    pub fn subset(&self, indices: &[usize]) -> SampleSet {
        let mut features = Vec::with_capacity(indices.len() * self.n_bands());
        for &i in indices {
            features.extend_from_slice(self.row(i));
        }
        SampleSet {
            wavelengths: self.wavelengths.clone(),
            features,
            labels: indices.iter().map(|&i| self.labels[i]).collect(),
            provenance: indices.iter().map(|&i| self.provenance[i].clone()).collect(),
        }
    }
}

/// One sample per labelled (non-unknown) pixel of each selected dataset.
pub fn build_sample_set(fused: &[FusedDataset], selected: &[&str]) -> Result<SampleSet> {
    if selected.is_empty() {
        return Err(Error::EmptySamples("no datasets selected".into()));
    }
    let mut grid: Option<&WavelengthGrid> = None;
    let mut features = Vec::new();
    let mut labels = Vec::new();
    let mut provenance = Vec::new();
    for name in selected {
        let d = fused
            .iter()
            .find(|d| d.name == *name)
            .ok_or_else(|| Error::Config(format!("unknown dataset {name:?}")))?;
        match grid {
            None => grid = Some(d.cube.grid()),
            Some(g) if g != d.cube.grid() => {
                return Err(Error::Shape(format!("dataset {name} is not on the shared fused grid")));
            }
            Some(_) => {}
        }
        let map = d
            .labels
            .as_ref()
            .ok_or_else(|| Error::EmptySamples(format!("dataset {name} has no labels")))?;
        let merged = map.merged_classes().map_err(|e| e.in_dataset(name))?;
        let mut spectrum = Vec::new();
        for (idx, class) in merged.into_iter().enumerate() {
            if class == MergedClass::Unknown {
                continue;
            }
            d.cube.spectrum(idx, &mut spectrum);
            features.extend(spectrum.iter().map(|v| *v as f32));
            labels.push(class.code());
            provenance.push(name.to_string());
        }
    }
    if labels.is_empty() {
        return Err(Error::EmptySamples("selected datasets contain no labelled pixels".into()));
    }
    SampleSet::new(grid.expect("non-empty selection").as_slice().to_vec(), features, labels, provenance)
}

/// Seeded Fisher–Yates permutation of `0..n` driven by ChaCha8.
pub fn shuffled_indices(n: usize, rng: &mut ChaCha8Rng) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..n).collect();
    for i in (1..n).rev() {
        let j = rng.gen_range(0..=i);
        idx.swap(i, j);
    }
    idx
}

/// Shuffles with `ChaCha8Rng::seed_from_u64(seed)` and splits off the first
/// `floor(train_fraction · n)` samples for training.
pub fn split_shuffle(s: &SampleSet, seed: u64, train_fraction: f64) -> Result<(SampleSet, SampleSet)> {
    if !(train_fraction > 0.0 && train_fraction < 1.0) {
        return Err(Error::Config(format!("train_fraction must lie in (0, 1), got {train_fraction}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let order = shuffled_indices(s.len(), &mut rng);
    let n_train = (train_fraction * s.len() as f64).floor() as usize;
    Ok((s.subset(&order[..n_train]), s.subset(&order[n_train..])))
}
