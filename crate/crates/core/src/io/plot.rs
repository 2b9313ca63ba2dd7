//! Plot-ready data for spectral signature plots and per-pixel surface plots.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{SpectralCube, SpectralPixel};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PlotKind {
    Pixel2d,
    Surface3d,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Series {
    pub name: String,
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub z: Option<Vec<f64>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PlotBundle {
    pub kind: PlotKind,
    pub series: Vec<Series>,
    pub metadata: BTreeMap<String, String>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BandReduction {
    Sum,
    Mean,
}

/// One series per named pixel: x in nm, y the intensity.
pub fn export_pixel_plot(pixels: &[(String, SpectralPixel)]) -> Result<PlotBundle> {
    if pixels.is_empty() {
        return Err(Error::Config("pixel plot needs at least one pixel".into()));
    }
    let series = pixels
        .iter()
        .map(|(name, p)| Series {
            name: name.clone(),
            x: p.grid().as_slice().to_vec(),
            y: p.values().to_vec(),
            z: None,
        })
        .collect();
    Ok(PlotBundle {
        kind: PlotKind::Pixel2d,
        series,
        metadata: BTreeMap::new(),
    })
}

/// Surface of the per-pixel band reduction: x is the column, y the row.
pub fn export_surface_plot(cube: &SpectralCube, reduction: BandReduction) -> PlotBundle {
    let (w, h) = (cube.width(), cube.height());
    let mut sums = vec![0.0f64; w * h];
    for b in 0..cube.bands() {
        for (s, v) in sums.iter_mut().zip(cube.band(b)) {
            *s += *v as f64;
        }
    }
    if reduction == BandReduction::Mean {
        let n = cube.bands() as f64;
        sums.iter_mut().for_each(|s| *s /= n);
    }
    let mut x = Vec::with_capacity(w * h);
    let mut y = Vec::with_capacity(w * h);
    for r in 0..h {
        for c in 0..w {
            x.push(c as f64);
            y.push(r as f64);
        }
    }
    let mut metadata = BTreeMap::new();
    metadata.insert("rows".into(), h.to_string());
    metadata.insert("cols".into(), w.to_string());
    metadata.insert(
        "reduction".into(),
        match reduction {
            BandReduction::Sum => "sum",
            BandReduction::Mean => "mean",
        }
        .into(),
    );
    PlotBundle {
        kind: PlotKind::Surface3d,
        series: vec![Series {
            name: "surface".into(),
            x,
            y,
            z: Some(sums),
        }],
        metadata,
    }
}

impl PlotBundle {
    pub fn with_metadata(mut self, key: &str, value: impl ToString) -> Self {
        self.metadata.insert(key.to_string(), value.to_string());
        self
    }

    pub fn validate(&self) -> Result<()> {
        for s in &self.series {
            let zl = s.z.as_ref().map_or(s.x.len(), Vec::len);
            if s.x.len() != s.y.len() || zl != s.x.len() {
                return Err(Error::Shape(format!("series {} has inconsistent lengths", s.name)));
            }
            if (self.kind == PlotKind::Surface3d) != s.z.is_some() {
                return Err(Error::Shape(format!("series {} does not match plot kind", s.name)));
            }
        }
        Ok(())
    }

    /// z values of a surface bundle as `rows × cols`.
    pub fn surface_grid(&self) -> Option<Vec<Vec<f64>>> {
        let z = self.series.first()?.z.as_ref()?;
        let cols: usize = self.metadata.get("cols")?.parse().ok()?;
        Some(z.chunks(cols).map(<[f64]>::to_vec).collect())
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("plot bundle serializes");
        s.push('\n');
        s
    }

    /// Long-format CSV: `series,x,y` (plus `z` for surfaces), shortest
    /// round-trip float formatting.
    pub fn to_csv(&self) -> String {
        let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new());
        let surface = self.kind == PlotKind::Surface3d;
        if surface {
            w.write_record(["series", "x", "y", "z"]).expect("in-memory write");
        } else {
            w.write_record(["series", "x", "y"]).expect("in-memory write");
        }
        for s in &self.series {
            for i in 0..s.x.len() {
                let mut rec = vec![s.name.clone(), s.x[i].to_string(), s.y[i].to_string()];
                if let Some(z) = &s.z {
                    rec.push(z[i].to_string());
                }
                w.write_record(&rec).expect("in-memory write");
            }
        }
        String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8 csv")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::WavelengthGrid;

    #[test]
    fn constant_pixel_constant_series() {
        let g = WavelengthGrid::arithmetic(400.0, 10.0, 450.0).unwrap();
        let p = SpectralPixel::new(g, vec![2.5; 6]).unwrap();
        let b = export_pixel_plot(&[("reference".into(), p)]).unwrap();
        assert_eq!(b.series.len(), 1);
        assert!(b.series[0].y.iter().all(|v| *v == 2.5));
        assert_eq!(b.series[0].x[5], 450.0);
        assert!(export_pixel_plot(&[]).is_err());
    }

    #[test]
    fn surface_shapes_and_reductions() {
        let g = WavelengthGrid::arithmetic(400.0, 10.0, 430.0).unwrap();
        let cube = SpectralCube::from_fn(3, 2, g, |b, r, c| (b + r * 3 + c) as f32).unwrap();
        let mean = export_surface_plot(&cube, BandReduction::Mean);
        let sum = export_surface_plot(&cube, BandReduction::Sum);
        mean.validate().unwrap();
        let zm = mean.surface_grid().unwrap();
        let zs = sum.surface_grid().unwrap();
        assert_eq!((zm.len(), zm[0].len()), (2, 3));
        for (a, b) in zm.iter().flatten().zip(zs.iter().flatten()) {
            assert_eq!(*a * 4.0, *b);
        }
        let flat = SpectralCube::new(2, 2, WavelengthGrid::arithmetic(400.0, 10.0, 420.0).unwrap(), vec![1.5; 12]).unwrap();
        let z = export_surface_plot(&flat, BandReduction::Mean).surface_grid().unwrap();
        assert!(z.iter().flatten().all(|v| *v == 1.5));
    }

    #[test]
    fn csv_and_json_are_deterministic() {
        let g = WavelengthGrid::arithmetic(400.0, 10.0, 430.0).unwrap();
        let cube = SpectralCube::from_fn(2, 2, g, |b, r, c| (b + r + c) as f32 * 0.1).unwrap();
        let a = export_surface_plot(&cube, BandReduction::Sum);
        let b = export_surface_plot(&cube, BandReduction::Sum);
        assert_eq!(a.to_csv(), b.to_csv());
        assert_eq!(a.to_json(), b.to_json());
        assert!(a.to_csv().starts_with("series,x,y,z\n"));
        let back: PlotBundle = serde_json::from_str(&a.to_json()).unwrap();
        assert_eq!(back, a);
    }
}
