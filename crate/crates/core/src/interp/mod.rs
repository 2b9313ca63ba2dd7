//! One-dimensional interpolation kernels and spectral resampling.
//!
//! Four kernels are available: piecewise linear, sliding three-point Lagrange
//! (quadratic), cubic spline (not-a-knot or natural ends) and the
//! shape-preserving cubic Hermite (PCHIP). None of them extrapolates; a query
//! outside the knot span is an error.

mod pchip;
mod quadratic;
mod spline;

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{SpectralCube, SpectralPixel, WavelengthGrid};

pub use pchip::pchip_derivatives;
pub use quadratic::select_quadratic_window;
pub use spline::{fit_cubic_spline, SplineCoefficients};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SplineBoundary {
    /// Third derivative continuous across the second and penultimate knots.
    #[default]
    NotAKnot,
    /// Zero second derivative at both ends.
    Natural,
}

impl FromStr for SplineBoundary {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "notaknot" | "not-a-knot" => Ok(SplineBoundary::NotAKnot),
            "natural" => Ok(SplineBoundary::Natural),
            other => Err(Error::Config(format!("unknown spline boundary {other:?}"))),
        }
    }
}

impl fmt::Display for SplineBoundary {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SplineBoundary::NotAKnot => "notaknot",
            SplineBoundary::Natural => "natural",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase", tag = "kind", content = "boundary")]
pub enum InterpolationMethod {
    Linear,
    Quadratic,
    #[serde(rename = "cubic")]
    CubicSpline(SplineBoundary),
    Pchip,
}

impl InterpolationMethod {
    pub const ALL: [InterpolationMethod; 4] = [
        InterpolationMethod::Linear,
        InterpolationMethod::Quadratic,
        InterpolationMethod::CubicSpline(SplineBoundary::NotAKnot),
        InterpolationMethod::Pchip,
    ];

    /// Parses `linear | quadratic | cubic | pchip`; `cubic` takes `boundary`.
    pub fn parse(name: &str, boundary: SplineBoundary) -> Result<Self> {
        match name {
            "linear" => Ok(InterpolationMethod::Linear),
            "quadratic" => Ok(InterpolationMethod::Quadratic),
            "cubic" => Ok(InterpolationMethod::CubicSpline(boundary)),
            "pchip" => Ok(InterpolationMethod::Pchip),
            other => Err(Error::Config(format!("unknown method {other:?}"))),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            InterpolationMethod::Linear => "linear",
            InterpolationMethod::Quadratic => "quadratic",
            InterpolationMethod::CubicSpline(_) => "cubic",
            InterpolationMethod::Pchip => "pchip",
        }
    }

    pub fn min_points(&self) -> usize {
        match self {
            InterpolationMethod::Linear | InterpolationMethod::Pchip => 2,
            InterpolationMethod::Quadratic => 3,
            InterpolationMethod::CubicSpline(SplineBoundary::Natural) => 3,
            InterpolationMethod::CubicSpline(SplineBoundary::NotAKnot) => 4,
        }
    }
}

impl FromStr for InterpolationMethod {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        InterpolationMethod::parse(s, SplineBoundary::default())
    }
}

impl fmt::Display for InterpolationMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            InterpolationMethod::CubicSpline(b) => write!(f, "cubic({b})"),
            other => f.write_str(other.name()),
        }
    }
}

/// Where a query falls relative to the knots.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub(crate) enum Location {
    Knot(usize),
    /// Strictly inside `[xs[i], xs[i + 1]]`.
    Interval(usize),
}

pub(crate) fn locate(xs: &[f64], q: f64) -> Result<Location> {
    let (lo, hi) = (xs[0], xs[xs.len() - 1]);
    if !(q >= lo && q <= hi) {
        return Err(Error::Extrapolation { query: q, lo, hi });
    }
    let i = xs.partition_point(|&x| x <= q);
    if xs[i - 1] == q {
        Ok(Location::Knot(i - 1))
    } else {
        Ok(Location::Interval(i - 1))
    }
}

pub(crate) fn check_knots(xs: &[f64], ys: &[f64], method: &InterpolationMethod) -> Result<()> {
    if ys.len() != xs.len() {
        return Err(Error::LengthMismatch {
            what: "ordinates vs abscissae",
            expected: xs.len(),
            actual: ys.len(),
        });
    }
    if xs.len() < method.min_points() {
        return Err(Error::Arity {
            method: method.name(),
            needed: method.min_points(),
            got: xs.len(),
        });
    }
    if let Some(i) = xs.windows(2).position(|w| !(w[1] > w[0])) {
        return Err(Error::Config(format!(
            "abscissae must be strictly increasing (index {})",
            i + 1
        )));
    }
    if xs.iter().chain(ys).any(|v| !v.is_finite()) {
        return Err(Error::Config("abscissae and ordinates must be finite".into()));
    }
    Ok(())
}

#[derive(Debug)]
enum Kernel {
    Linear,
    Quadratic,
    Spline(SplineCoefficients),
    Pchip(Vec<f64>),
}

/// A kernel fitted to one set of knots, ready for repeated evaluation.
#[derive(Debug)]
pub struct Interpolant<'a> {
    xs: &'a [f64],
    ys: &'a [f64],
    kernel: Kernel,
}

impl<'a> Interpolant<'a> {
    pub fn new(xs: &'a [f64], ys: &'a [f64], method: InterpolationMethod) -> Result<Self> {
        check_knots(xs, ys, &method)?;
        let kernel = match method {
            InterpolationMethod::Linear => Kernel::Linear,
            InterpolationMethod::Quadratic => Kernel::Quadratic,
            InterpolationMethod::CubicSpline(b) => Kernel::Spline(fit_cubic_spline(xs, ys, b)?),
            InterpolationMethod::Pchip => Kernel::Pchip(pchip_derivatives(xs, ys)?),
        };
        Ok(Interpolant { xs, ys, kernel })
    }

    pub fn eval(&self, q: f64) -> Result<f64> {
        let (xs, ys) = (self.xs, self.ys);
        let i = match locate(xs, q)? {
            Location::Knot(k) => return Ok(ys[k]),
            Location::Interval(i) => i,
        };
        Ok(match &self.kernel {
            Kernel::Linear => {
                let (x1, x2, y1, y2) = (xs[i], xs[i + 1], ys[i], ys[i + 1]);
                y1 + (q - x1) * (y2 - y1) / (x2 - x1)
            }
            Kernel::Quadratic => {
                let w = quadratic::window_for_interval(xs, i, q);
                quadratic::lagrange3(&xs[w[0]..=w[2]], &ys[w[0]..=w[2]], q)
            }
            Kernel::Spline(s) => s.eval_piece(i, q),
            Kernel::Pchip(d) => pchip::hermite(xs, ys, d, i, q),
        })
    }
}

/// Interpolates `(xs, ys)` at every query with the given method.
pub fn interpolate_1d(xs: &[f64], ys: &[f64], method: InterpolationMethod, queries: &[f64]) -> Result<Vec<f64>> {
    let f = Interpolant::new(xs, ys, method)?;
    queries.iter().map(|&q| f.eval(q)).collect()
}

pub fn resample_pixel(p: &SpectralPixel, target: &WavelengthGrid, method: InterpolationMethod) -> Result<SpectralPixel> {
    let values = interpolate_1d(p.grid().as_slice(), p.values(), method, target.as_slice())?;
    SpectralPixel::new(target.clone(), values)
}

/// Resamples every pixel onto `target` using the default worker count.
pub fn resample_cube(cube: &SpectralCube, target: &WavelengthGrid, method: InterpolationMethod) -> Result<SpectralCube> {
    resample_cube_with_workers(cube, target, method, crate::parallel::worker_count())
}

/// Output is identical for every `workers` value; pixels are independent.
pub fn resample_cube_with_workers(
    cube: &SpectralCube,
    target: &WavelengthGrid,
    method: InterpolationMethod,
    workers: usize,
) -> Result<SpectralCube> {
    let xs = cube.grid().as_slice();
    let n_pix = cube.pixel_count();
    let width = cube.width();
    let out_bands = target.len();

    let resample_range = |range: std::ops::Range<usize>| -> Result<Vec<f32>> {
        let mut out = Vec::with_capacity(range.len() * out_bands);
        let mut ys = Vec::with_capacity(xs.len());
        for idx in range {
            cube.spectrum(idx, &mut ys);
            let at_pixel = |e: Error| Error::Pixel {
                row: idx / width,
                col: idx % width,
                source: Box::new(e),
            };
            let f = Interpolant::new(xs, &ys, method).map_err(at_pixel)?;
            for &q in target.as_slice() {
                out.push(f.eval(q).map_err(at_pixel)? as f32);
            }
        }
        Ok(out)
    };

    let chunk = 256;
    let ranges: Vec<_> = (0..n_pix)
        .step_by(chunk)
        .map(|s| s..(s + chunk).min(n_pix))
        .collect();
    let pixel_major: Vec<Vec<f32>> = crate::parallel::run(workers, || {
        ranges.into_par_iter().map(resample_range).collect::<Result<Vec<_>>>()
    })?;

    let mut data = vec![0.0f32; n_pix * out_bands];
    let mut idx = 0;
    for block in &pixel_major {
        for spectrum in block.chunks_exact(out_bands) {
            for (b, v) in spectrum.iter().enumerate() {
                data[b * n_pix + idx] = *v;
            }
            idx += 1;
        }
    }
    SpectralCube::new(cube.width(), cube.height(), target.clone(), data)
}
