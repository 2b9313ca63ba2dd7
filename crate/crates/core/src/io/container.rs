//! On-disk containers for cubes and label maps.
//!
//! A cube is a JSON header `<name>.scube.json` next to a raw payload
//! `<name>.scube.bin` holding little-endian `f32` values, band-major then
//! row-major. Label maps use `<name>.slabel.json` / `<name>.slabel.bin` with
//! little-endian `u32` class ids, row-major.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::{Map, Value};

use crate::error::{Error, Result};
use crate::model::{validate_grid, LabelMap, MergeTable, MergedClass, SpectralCube, WavelengthGrid};

pub const CUBE_SUFFIX: &str = ".scube";
pub const LABEL_SUFFIX: &str = ".slabel";
pub const DTYPE_F32: &str = "f32";
pub const DTYPE_U32: &str = "u32";
pub const LAYOUT_BSQ: &str = "band-sequential";
pub const BYTE_ORDER: &str = "little-endian";

/// Header and payload paths for a container. `path` may name the header, the
/// payload, or the bare stem.
pub fn container_paths(path: &Path, suffix: &str) -> (PathBuf, PathBuf) {
    let s = path.to_string_lossy();
    let stem = s
        .strip_suffix(".json")
        .or_else(|| s.strip_suffix(".bin"))
        .filter(|st| st.ends_with(suffix))
        .map(str::to_string)
        .unwrap_or_else(|| format!("{s}{suffix}"));
    (PathBuf::from(format!("{stem}.json")), PathBuf::from(format!("{stem}.bin")))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CubeHeader {
    pub width: usize,
    pub height: usize,
    pub wavelengths: Vec<f64>,
    pub dtype: String,
    pub layout: String,
    pub byte_order: String,
}

impl CubeHeader {
    pub fn for_cube(cube: &SpectralCube) -> Self {
        CubeHeader {
            width: cube.width(),
            height: cube.height(),
            wavelengths: cube.grid().as_slice().to_vec(),
            dtype: DTYPE_F32.into(),
            layout: LAYOUT_BSQ.into(),
            byte_order: BYTE_ORDER.into(),
        }
    }

    pub fn grid(&self) -> Result<WavelengthGrid> {
        WavelengthGrid::new(self.wavelengths.clone())
    }

    pub fn payload_len(&self) -> usize {
        4 * self.width * self.height * self.wavelengths.len()
    }
}

struct Fields<'a> {
    path: &'a Path,
    map: Map<String, Value>,
}

impl<'a> Fields<'a> {
    fn parse(path: &'a Path, text: &str, known: &[&str]) -> Result<Self> {
        let value: Value = serde_json::from_str(text).map_err(|e| Error::format(path, "header", e.to_string()))?;
        let Value::Object(map) = value else {
            return Err(Error::format(path, "header", "expected a JSON object"));
        };
        if let Some(k) = map.keys().find(|k| !known.contains(&k.as_str())) {
            return Err(Error::format(path, "header", format!("unknown field {k:?}")));
        }
        Ok(Fields { path, map })
    }

    fn get(&self, field: &'static str) -> Result<&Value> {
        self.map
            .get(field)
            .ok_or_else(|| Error::format(self.path, field, "missing"))
    }

    fn usize(&self, field: &'static str) -> Result<usize> {
        self.get(field)?
            .as_u64()
            .map(|v| v as usize)
            .ok_or_else(|| Error::format(self.path, field, "expected a non-negative integer"))
    }

    fn exact(&self, field: &'static str, want: &str) -> Result<String> {
        match self.get(field)?.as_str() {
            Some(v) if v == want => Ok(v.to_string()),
            Some(v) => Err(Error::format(self.path, field, format!("unsupported value {v:?}, expected {want:?}"))),
            None => Err(Error::format(self.path, field, "expected a string")),
        }
    }
}

fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<()> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
    }
    fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

fn header_json<T: Serialize>(header: &T) -> Vec<u8> {
    let mut text = serde_json::to_string_pretty(header).expect("header serializes");
    text.push('\n');
    text.into_bytes()
}

/// Reads and checks only the header of a cube container.
pub fn read_cube_header(path: &Path) -> Result<CubeHeader> {
    let (hpath, _) = container_paths(path, CUBE_SUFFIX);
    let text = read_text(&hpath)?;
    let f = Fields::parse(
        &hpath,
        &text,
        &["width", "height", "wavelengths", "dtype", "layout", "byte_order"],
    )?;
    let wavelengths: Vec<f64> = f
        .get("wavelengths")?
        .as_array()
        .and_then(|a| a.iter().map(Value::as_f64).collect::<Option<Vec<_>>>())
        .ok_or_else(|| Error::format(&hpath, "wavelengths", "expected an array of numbers"))?;
    if let Some(v) = validate_grid(&wavelengths).into_iter().next() {
        return Err(Error::format(&hpath, "wavelengths", v.to_string()));
    }
    let header = CubeHeader {
        width: f.usize("width")?,
        height: f.usize("height")?,
        wavelengths,
        dtype: f.exact("dtype", DTYPE_F32)?,
        layout: f.exact("layout", LAYOUT_BSQ)?,
        byte_order: f.exact("byte_order", BYTE_ORDER)?,
    };
    if header.width == 0 {
        return Err(Error::format(&hpath, "width", "must be positive"));
    }
    if header.height == 0 {
        return Err(Error::format(&hpath, "height", "must be positive"));
    }
    Ok(header)
}

pub fn write_cube(cube: &SpectralCube, path: &Path) -> Result<()> {
    let (hpath, bpath) = container_paths(path, CUBE_SUFFIX);
    let mut payload = Vec::with_capacity(cube.data().len() * 4);
    for v in cube.data() {
        payload.extend_from_slice(&v.to_le_bytes());
    }
    write_file(&bpath, &payload)?;
    write_file(&hpath, &header_json(&CubeHeader::for_cube(cube)))
}

pub fn read_cube(path: &Path) -> Result<SpectralCube> {
    let header = read_cube_header(path)?;
    let (_, bpath) = container_paths(path, CUBE_SUFFIX);
    let bytes = fs::read(&bpath).map_err(|e| Error::io(&bpath, e))?;
    if bytes.len() != header.payload_len() {
        return Err(Error::format(
            &bpath,
            "payload",
            format!("payload length mismatch: expected {} bytes, found {}", header.payload_len(), bytes.len()),
        ));
    }
    let data: Vec<f32> = bytes
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]))
        .collect();
    let grid = header.grid()?;
    SpectralCube::new(header.width, header.height, grid, data).map_err(|e| match e {
        Error::InvalidCube(v) => Error::format(&bpath, "payload", v[0].to_string()),
        other => other,
    })
}

#[derive(Serialize)]
struct LabelHeader<'a> {
    width: usize,
    height: usize,
    dtype: &'a str,
    byte_order: &'a str,
    merge_table: BTreeMap<String, u8>,
}

pub fn write_labels(labels: &LabelMap, path: &Path) -> Result<()> {
    let (hpath, bpath) = container_paths(path, LABEL_SUFFIX);
    let header = LabelHeader {
        width: labels.width(),
        height: labels.height(),
        dtype: DTYPE_U32,
        byte_order: BYTE_ORDER,
        merge_table: labels
            .merge_table()
            .iter()
            .map(|(k, v)| (k.to_string(), v.code()))
            .collect(),
    };
    let mut payload = Vec::with_capacity(labels.classes().len() * 4);
    for c in labels.classes() {
        payload.extend_from_slice(&c.to_le_bytes());
    }
    write_file(&bpath, &payload)?;
    write_file(&hpath, &header_json(&header))
}

pub fn read_labels(path: &Path) -> Result<LabelMap> {
    let (hpath, bpath) = container_paths(path, LABEL_SUFFIX);
    let text = read_text(&hpath)?;
    let f = Fields::parse(&hpath, &text, &["width", "height", "dtype", "byte_order", "merge_table"])?;
    let (width, height) = (f.usize("width")?, f.usize("height")?);
    f.exact("dtype", DTYPE_U32)?;
    f.exact("byte_order", BYTE_ORDER)?;
    let table_obj = f
        .get("merge_table")?
        .as_object()
        .ok_or_else(|| Error::format(&hpath, "merge_table", "expected an object"))?;
    let mut table = MergeTable::new();
    for (k, v) in table_obj {
        let id: u32 = k
            .parse()
            .map_err(|_| Error::format(&hpath, "merge_table", format!("class id {k:?} is not an integer")))?;
        let code = v
            .as_u64()
            .and_then(|c| u8::try_from(c).ok())
            .and_then(|c| MergedClass::try_from(c).ok())
            .ok_or_else(|| Error::format(&hpath, "merge_table", format!("class {k} maps to {v}, expected 0, 1 or 2")))?;
        table.insert(id, code);
    }
    let bytes = fs::read(&bpath).map_err(|e| Error::io(&bpath, e))?;
    if bytes.len() != 4 * width * height {
        return Err(Error::format(
            &bpath,
            "payload",
            format!("payload length mismatch: expected {} bytes, found {}", 4 * width * height, bytes.len()),
        ));
    }
    let classes = bytes
        .chunks_exact(4)
        .map(|c| u32::from_le_bytes([c[0], c[1], c[2], c[3]]))
        .collect();
    LabelMap::new(width, height, classes, table)
}
