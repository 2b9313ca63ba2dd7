//! Shared data types: wavelength grids, spectral cubes and pixels, label maps
//! and dataset manifests.
//!
//! Cubes are stored band-sequential: the flat index of `(band, row, col)` is
//! `band * width * height + row * width + col`. Intensities are kept as `f32`;
//! per-pixel work (interpolation, metrics) happens in `f64`.

use std::collections::{BTreeMap, HashSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One broken invariant, as reported by the validators.
#[derive(Clone, Debug, PartialEq)]
pub struct Violation {
    pub invariant: &'static str,
    pub index: Option<usize>,
    pub detail: String,
}

impl Violation {
    fn new(invariant: &'static str, index: Option<usize>, detail: impl Into<String>) -> Self {
        Violation {
            invariant,
            index,
            detail: detail.into(),
        }
    }
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.index {
            Some(i) => write!(f, "{} violated at index {}: {}", self.invariant, i, self.detail),
            None => write!(f, "{} violated: {}", self.invariant, self.detail),
        }
    }
}

pub const INV_GRID_LENGTH: &str = "grid length >= 2";
pub const INV_GRID_FINITE: &str = "finite positive wavelengths";
pub const INV_GRID_INCREASING: &str = "strictly increasing";
pub const INV_CUBE_DIMS: &str = "nonzero dimensions";
pub const INV_CUBE_LENGTH: &str = "data length";
pub const INV_CUBE_FINITE: &str = "finite intensities";

/// Checks the wavelength-axis invariants, reporting the first offender of each kind.
pub fn validate_grid(wavelengths: &[f64]) -> Vec<Violation> {
    let mut report = Vec::new();
    if wavelengths.len() < 2 {
        report.push(Violation::new(
            INV_GRID_LENGTH,
            None,
            format!("got {} wavelengths", wavelengths.len()),
        ));
    }
    if let Some(i) = wavelengths.iter().position(|w| !w.is_finite() || *w <= 0.0) {
        report.push(Violation::new(
            INV_GRID_FINITE,
            Some(i),
            format!("wavelength {}", wavelengths[i]),
        ));
    }
    if let Some(i) = wavelengths.windows(2).position(|w| !(w[1] > w[0])) {
        report.push(Violation::new(
            INV_GRID_INCREASING,
            Some(i + 1),
            format!("{} follows {}", wavelengths[i + 1], wavelengths[i]),
        ));
    }
    report
}

/// Validates raw cube parts. An empty report means `SpectralCube::new` will accept them.
pub fn validate_cube(width: usize, height: usize, wavelengths: &[f64], data: &[f32]) -> Vec<Violation> {
    let mut report = validate_grid(wavelengths);
    if width == 0 || height == 0 {
        report.push(Violation::new(
            INV_CUBE_DIMS,
            None,
            format!("width {width}, height {height}"),
        ));
    }
    let expected = width * height * wavelengths.len();
    if data.len() != expected {
        report.push(Violation::new(
            INV_CUBE_LENGTH,
            None,
            format!("expected {expected} values, got {}", data.len()),
        ));
    }
    if let Some(i) = data.iter().position(|v| !v.is_finite()) {
        report.push(Violation::new(INV_CUBE_FINITE, Some(i), format!("value {}", data[i])));
    }
    report
}

/// Strictly increasing wavelength axis in nanometres.
#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(transparent)]
pub struct WavelengthGrid(Vec<f64>);

impl WavelengthGrid {
    pub fn new(wavelengths: Vec<f64>) -> Result<Self> {
        match validate_grid(&wavelengths).into_iter().next() {
            Some(v) => Err(Error::InvalidGrid(v)),
            None => Ok(WavelengthGrid(wavelengths)),
        }
    }

    /// `start, start + step, ...` up to and including `stop` (within 1e-9 step).
    pub fn arithmetic(start: f64, step: f64, stop: f64) -> Result<Self> {
        if !(step > 0.0) || !start.is_finite() || !stop.is_finite() || !step.is_finite() {
            return Err(Error::Config(format!(
                "arithmetic grid needs finite start/stop and step > 0, got {start}:{step}:{stop}"
            )));
        }
        if stop < start {
            return Err(Error::Config(format!("grid stop {stop} below start {start}")));
        }
        let count = ((stop - start) / step + 1e-9).floor() as usize + 1;
        WavelengthGrid::new((0..count).map(|k| start + k as f64 * step).collect())
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn first(&self) -> f64 {
        self.0[0]
    }

    pub fn last(&self) -> f64 {
        self.0[self.0.len() - 1]
    }

    pub fn span(&self) -> (f64, f64) {
        (self.first(), self.last())
    }

    /// Wavelengths inside `[lo, hi]`; errors if fewer than two survive.
    pub fn clip(&self, lo: f64, hi: f64) -> Result<Self> {
        WavelengthGrid::new(self.0.iter().copied().filter(|w| *w >= lo && *w <= hi).collect())
    }

    /// Indices of the wavelengths inside `[lo, hi]`.
    pub fn indices_within(&self, lo: f64, hi: f64) -> Vec<usize> {
        (0..self.0.len()).filter(|&i| self.0[i] >= lo && self.0[i] <= hi).collect()
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.0
    }
}

impl<'de> Deserialize<'de> for WavelengthGrid {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let v = Vec::<f64>::deserialize(d)?;
        WavelengthGrid::new(v).map_err(serde::de::Error::custom)
    }
}

/// A `width × height × bands` image on a wavelength grid, band-sequential.
#[derive(Clone, Debug, PartialEq)]
pub struct SpectralCube {
    width: usize,
    height: usize,
    grid: WavelengthGrid,
    data: Vec<f32>,
}

impl SpectralCube {
    pub fn new(width: usize, height: usize, grid: WavelengthGrid, data: Vec<f32>) -> Result<Self> {
        let report = validate_cube(width, height, grid.as_slice(), &data);
        if !report.is_empty() {
            return Err(Error::InvalidCube(report));
        }
        Ok(SpectralCube {
            width,
            height,
            grid,
            data,
        })
    }

    /// Builds a cube by evaluating `f(band, row, col)` at every sample.
    pub fn from_fn(
        width: usize,
        height: usize,
        grid: WavelengthGrid,
        mut f: impl FnMut(usize, usize, usize) -> f32,
    ) -> Result<Self> {
        let mut data = Vec::with_capacity(width * height * grid.len());
        for b in 0..grid.len() {
            for r in 0..height {
                for c in 0..width {
                    data.push(f(b, r, c));
                }
            }
        }
        SpectralCube::new(width, height, grid, data)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn bands(&self) -> usize {
        self.grid.len()
    }

    pub fn pixel_count(&self) -> usize {
        self.width * self.height
    }

    pub fn grid(&self) -> &WavelengthGrid {
        &self.grid
    }

    pub fn data(&self) -> &[f32] {
        &self.data
    }

    pub fn into_parts(self) -> (usize, usize, WavelengthGrid, Vec<f32>) {
        (self.width, self.height, self.grid, self.data)
    }

    /// All pixels of one band, row-major.
    pub fn band(&self, band: usize) -> &[f32] {
        let plane = self.pixel_count();
        &self.data[band * plane..(band + 1) * plane]
    }

    pub fn value(&self, band: usize, row: usize, col: usize) -> f32 {
        self.data[band * self.pixel_count() + row * self.width + col]
    }

    fn check_position(&self, row: usize, col: usize) -> Result<()> {
        if row >= self.height {
            return Err(Error::OutOfBounds {
                axis: "row",
                index: row,
                len: self.height,
            });
        }
        if col >= self.width {
            return Err(Error::OutOfBounds {
                axis: "col",
                index: col,
                len: self.width,
            });
        }
        Ok(())
    }

    /// Spectrum of pixel `index = row * width + col`, widened to f64.
    pub(crate) fn spectrum(&self, index: usize, out: &mut Vec<f64>) {
        let plane = self.pixel_count();
        out.clear();
        out.extend((0..self.bands()).map(|b| self.data[b * plane + index] as f64));
    }

    pub fn pixel_at(&self, row: usize, col: usize) -> Result<SpectralPixel> {
        self.check_position(row, col)?;
        let mut values = Vec::with_capacity(self.bands());
        self.spectrum(row * self.width + col, &mut values);
        Ok(SpectralPixel {
            grid: self.grid.clone(),
            values,
        })
    }

    /// Keeps only the listed bands, in the given order.
    pub fn select_bands(&self, bands: &[usize]) -> Result<SpectralCube> {
        let grid = WavelengthGrid::new(bands.iter().map(|&b| self.grid.as_slice()[b]).collect())?;
        let mut data = Vec::with_capacity(bands.len() * self.pixel_count());
        for &b in bands {
            data.extend_from_slice(self.band(b));
        }
        SpectralCube::new(self.width, self.height, grid, data)
    }
}

/// `pixel_at` as a free function.
pub fn pixel_at(cube: &SpectralCube, row: usize, col: usize) -> Result<SpectralPixel> {
    cube.pixel_at(row, col)
}

/// One spectral signature.
#[derive(Clone, Debug, PartialEq)]
pub struct SpectralPixel {
    grid: WavelengthGrid,
    values: Vec<f64>,
}

impl SpectralPixel {
    pub fn new(grid: WavelengthGrid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::LengthMismatch {
                what: "pixel values vs grid",
                expected: grid.len(),
                actual: values.len(),
            });
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidCube(vec![Violation::new(
                INV_CUBE_FINITE,
                Some(i),
                format!("value {}", values[i]),
            )]));
        }
        Ok(SpectralPixel { grid, values })
    }

    pub fn grid(&self) -> &WavelengthGrid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }
}

/// Merged ground-truth category. The numeric codes are stable on disk.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(into = "u8", try_from = "u8")]
pub enum MergedClass {
    Unknown = 0,
    Vegetation = 1,
    NonVegetation = 2,
}

impl MergedClass {
    pub fn code(self) -> u8 {
        self as u8
    }

    /// Display colour used for label rasters: black, green, red.
    pub fn color(self) -> [u8; 3] {
        match self {
            MergedClass::Unknown => [0, 0, 0],
            MergedClass::Vegetation => [0, 255, 0],
            MergedClass::NonVegetation => [255, 0, 0],
        }
    }
}

impl From<MergedClass> for u8 {
    fn from(c: MergedClass) -> u8 {
        c.code()
    }
}

impl TryFrom<u8> for MergedClass {
    type Error = String;

    fn try_from(v: u8) -> std::result::Result<Self, String> {
        match v {
            0 => Ok(MergedClass::Unknown),
            1 => Ok(MergedClass::Vegetation),
            2 => Ok(MergedClass::NonVegetation),
            other => Err(format!("merged class must be 0, 1 or 2, got {other}")),
        }
    }
}

pub type MergeTable = BTreeMap<u32, MergedClass>;

/// Identity table over the merged codes.
pub fn identity_merge_table() -> MergeTable {
    [MergedClass::Unknown, MergedClass::Vegetation, MergedClass::NonVegetation]
        .into_iter()
        .map(|c| (c.code() as u32, c))
        .collect()
}

/// Pavia University ground truth (0 unlabeled, 1..=9 classes): meadows (2) and
/// trees (4) are vegetation, every other labelled class is non-vegetation.
pub fn pavia_university_merge_table() -> MergeTable {
    let mut t = MergeTable::new();
    t.insert(0, MergedClass::Unknown);
    for id in 1..=9 {
        let class = if id == 2 || id == 4 {
            MergedClass::Vegetation
        } else {
            MergedClass::NonVegetation
        };
        t.insert(id, class);
    }
    t
}

/// Per-pixel class raster (row-major) with the table that merges it into
/// unknown / vegetation / non-vegetation.
#[derive(Clone, Debug, PartialEq)]
pub struct LabelMap {
    width: usize,
    height: usize,
    classes: Vec<u32>,
    merge_table: MergeTable,
}

impl LabelMap {
    pub fn new(width: usize, height: usize, classes: Vec<u32>, merge_table: MergeTable) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::Shape(format!("label map {width}x{height}")));
        }
        if classes.len() != width * height {
            return Err(Error::LengthMismatch {
                what: "label classes vs width*height",
                expected: width * height,
                actual: classes.len(),
            });
        }
        Ok(LabelMap {
            width,
            height,
            classes,
            merge_table,
        })
    }

    /// A map whose classes are already merged codes.
    pub fn merged(width: usize, height: usize, classes: Vec<MergedClass>) -> Result<Self> {
        LabelMap::new(
            width,
            height,
            classes.into_iter().map(|c| c.code() as u32).collect(),
            identity_merge_table(),
        )
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn classes(&self) -> &[u32] {
        &self.classes
    }

    pub fn merge_table(&self) -> &MergeTable {
        &self.merge_table
    }

    /// First class id without a merge-table entry, if any.
    pub fn first_unmapped(&self) -> Option<u32> {
        self.classes
            .iter()
            .copied()
            .find(|c| !self.merge_table.contains_key(c))
    }

    /// Merged class of every pixel; fails on the first unmapped id.
    pub fn merged_classes(&self) -> Result<Vec<MergedClass>> {
        self.classes
            .iter()
            .map(|c| self.merge_table.get(c).copied().ok_or(Error::UnmappedClass(*c)))
            .collect()
    }

    /// RGB raster of the merged classes.
    pub fn to_rgb(&self) -> Result<Vec<[u8; 3]>> {
        Ok(self.merged_classes()?.into_iter().map(MergedClass::color).collect())
    }
}

/// Replaces every class with its merged code; the result carries the identity table.
pub fn merge_labels(labels: &LabelMap) -> Result<LabelMap> {
    let merged = labels.merged_classes()?;
    LabelMap::merged(labels.width, labels.height, merged)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ManifestEntry {
    pub cube_path: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label_path: Option<String>,
    pub name: String,
    pub native_resolution_nm: f64,
}

/// The datasets to fuse and which of them supplies the reference grid.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatasetManifest {
    pub entries: Vec<ManifestEntry>,
    pub reference_name: String,
}

impl DatasetManifest {
    pub fn from_json(text: &str) -> Result<Self> {
        let m: DatasetManifest = serde_json::from_str(text).map_err(|e| Error::Manifest(e.to_string()))?;
        m.validate()?;
        Ok(m)
    }

    pub fn validate(&self) -> Result<()> {
        if self.entries.is_empty() {
            return Err(Error::Manifest("no entries".into()));
        }
        let mut names = HashSet::new();
        for (i, e) in self.entries.iter().enumerate() {
            if e.name.is_empty() || e.cube_path.is_empty() {
                return Err(Error::Manifest(format!("entry {i}: name and cube_path must be non-empty")));
            }
            if e.label_path.as_deref() == Some("") {
                return Err(Error::Manifest(format!("entry {i}: label_path must be non-empty when present")));
            }
            if !(e.native_resolution_nm > 0.0) {
                return Err(Error::Manifest(format!(
                    "entry {i}: native_resolution_nm must be positive"
                )));
            }
            if !names.insert(e.name.as_str()) {
                return Err(Error::Manifest(format!("duplicate entry name {:?}", e.name)));
            }
        }
        if !names.contains(self.reference_name.as_str()) {
            return Err(Error::Manifest(format!(
                "reference_name {:?} matches no entry",
                self.reference_name
            )));
        }
        Ok(())
    }

    pub fn reference(&self) -> &ManifestEntry {
        self.entries
            .iter()
            .find(|e| e.name == self.reference_name)
            .expect("validated manifest has its reference entry")
    }
}
