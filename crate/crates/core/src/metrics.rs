//! Resampling quality measures: plain MSE, the round-trip CMSE, trapezoidal
//! surface differences and NDVI.
//!
//! Cube-level reductions compute per-pixel terms in parallel and then sum them
//! sequentially in pixel order, so results do not depend on the worker count.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::interp::{interpolate_1d, InterpolationMethod};
use crate::model::{SpectralCube, SpectralPixel, WavelengthGrid};

pub fn mse(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::LengthMismatch {
            what: "mse operands",
            expected: a.len(),
            actual: b.len(),
        });
    }
    if a.is_empty() {
        return Err(Error::LengthMismatch {
            what: "mse operands must be non-empty",
            expected: 1,
            actual: 0,
        });
    }
    let sum: f64 = a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum();
    Ok(sum / a.len() as f64)
}

/// Round-trip error of one pixel: resample onto `target`, resample back onto
/// the source wavelengths inside the target span, and average the squared
/// differences over those wavelengths.
pub fn cmse_pixel(p: &SpectralPixel, target: &WavelengthGrid, method: InterpolationMethod) -> Result<f64> {
    cmse_values(p.grid().as_slice(), p.values(), target, method)
}

fn cmse_values(xs: &[f64], ys: &[f64], target: &WavelengthGrid, method: InterpolationMethod) -> Result<f64> {
    let forward = interpolate_1d(xs, ys, method, target.as_slice())?;
    let (lo, hi) = target.span();
    let keep: Vec<usize> = (0..xs.len()).filter(|&i| xs[i] >= lo && xs[i] <= hi).collect();
    if keep.is_empty() {
        return Err(Error::NoCommonRange(format!(
            "no source wavelength inside target span [{lo}, {hi}]"
        )));
    }
    let back_x: Vec<f64> = keep.iter().map(|&i| xs[i]).collect();
    let original: Vec<f64> = keep.iter().map(|&i| ys[i]).collect();
    let back = interpolate_1d(target.as_slice(), &forward, method, &back_x)?;
    mse(&original, &back)
}

/// Mean of [`cmse_pixel`] over all pixels.
pub fn cmse_cube(cube: &SpectralCube, target: &WavelengthGrid, method: InterpolationMethod) -> Result<f64> {
    let xs = cube.grid().as_slice();
    let width = cube.width();
    let per_pixel = per_pixel_parallel(cube.pixel_count(), |idx, buf| {
        cube.spectrum(idx, buf);
        cmse_values(xs, buf, target, method).map_err(|e| Error::Pixel {
            row: idx / width,
            col: idx % width,
            source: Box::new(e),
        })
    })?;
    Ok(per_pixel.iter().sum::<f64>() / per_pixel.len() as f64)
}

fn per_pixel_parallel<F>(n: usize, f: F) -> Result<Vec<f64>>
where
    F: Fn(usize, &mut Vec<f64>) -> Result<f64> + Sync,
{
    let workers = crate::parallel::worker_count();
    crate::parallel::run(workers, || {
        (0..n)
            .into_par_iter()
            .map_init(Vec::new, |buf, idx| f(idx, buf))
            .collect()
    })
}

/// Trapezoidal area under `(xs, ys)`, in intensity·nm.
pub fn trapezoid_area(xs: &[f64], ys: &[f64]) -> Result<f64> {
    if xs.len() != ys.len() {
        return Err(Error::LengthMismatch {
            what: "trapezoid values vs grid",
            expected: xs.len(),
            actual: ys.len(),
        });
    }
    if xs.len() < 2 {
        return Err(Error::Arity {
            method: "trapezoid",
            needed: 2,
            got: xs.len(),
        });
    }
    Ok(xs
        .windows(2)
        .zip(ys.windows(2))
        .map(|(x, y)| (x[1] - x[0]) * (y[0] + y[1]) / 2.0)
        .sum())
}

/// Trapezoidal area of the polyline through `(xs, ys)` restricted to `[lo, hi]`.
/// Boundary ordinates off the knots come from the same polyline.
fn clipped_area(xs: &[f64], ys: &[f64], lo: f64, hi: f64) -> f64 {
    let at = |q: f64| -> f64 {
        let i = xs.partition_point(|&x| x <= q).clamp(1, xs.len() - 1) - 1;
        ys[i] + (q - xs[i]) * (ys[i + 1] - ys[i]) / (xs[i + 1] - xs[i])
    };
    let mut px = vec![lo];
    let mut py = vec![at(lo)];
    for (x, y) in xs.iter().zip(ys) {
        if *x > lo && *x < hi {
            px.push(*x);
            py.push(*y);
        }
    }
    px.push(hi);
    py.push(at(hi));
    px.windows(2)
        .zip(py.windows(2))
        .map(|(x, y)| (x[1] - x[0]) * (y[0] + y[1]) / 2.0)
        .sum()
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SurfaceNormalization {
    /// Area difference divided by the common span length (mean-intensity units).
    #[default]
    Span,
    /// Area difference in intensity·nm.
    Raw,
}

/// Mean absolute difference of per-pixel spectral areas over the common span.
pub fn surface_avg_difference(
    reference: &SpectralCube,
    interpolated: &SpectralCube,
    normalization: SurfaceNormalization,
) -> Result<f64> {
    if (reference.width(), reference.height()) != (interpolated.width(), interpolated.height()) {
        return Err(Error::Shape(format!(
            "reference is {}x{}, interpolated is {}x{}",
            reference.width(),
            reference.height(),
            interpolated.width(),
            interpolated.height()
        )));
    }
    let (ra, rb) = reference.grid().span();
    let (ia, ib) = interpolated.grid().span();
    let (lo, hi) = (ra.max(ia), rb.min(ib));
    if !(lo < hi) {
        return Err(Error::NoCommonRange(format!(
            "reference spans [{ra}, {rb}], interpolated spans [{ia}, {ib}]"
        )));
    }
    let (rx, ix) = (reference.grid().as_slice(), interpolated.grid().as_slice());
    let per_pixel = per_pixel_parallel(reference.pixel_count(), |idx, buf| {
        reference.spectrum(idx, buf);
        let a = clipped_area(rx, buf, lo, hi);
        interpolated.spectrum(idx, buf);
        let b = clipped_area(ix, buf, lo, hi);
        Ok((a - b).abs())
    })?;
    let mean = per_pixel.iter().sum::<f64>() / per_pixel.len() as f64;
    Ok(match normalization {
        SurfaceNormalization::Span => mean / (hi - lo),
        SurfaceNormalization::Raw => mean,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NdviConfig {
    pub red_target_nm: f64,
    pub nir_target_nm: f64,
}

impl Default for NdviConfig {
    fn default() -> Self {
        NdviConfig {
            red_target_nm: 665.0,
            nir_target_nm: 830.0,
        }
    }
}

impl NdviConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.nir_target_nm > self.red_target_nm) {
            return Err(Error::Config(format!(
                "NIR target {} nm must exceed RED target {} nm",
                self.nir_target_nm, self.red_target_nm
            )));
        }
        Ok(())
    }
}

/// Index of the band nearest `target_nm`. Targets further than half a band
/// spacing beyond either end of the grid are refused.
pub fn nearest_band(grid: &WavelengthGrid, target_nm: f64) -> Result<usize> {
    let w = grid.as_slice();
    let n = w.len();
    let lo = w[0] - (w[1] - w[0]) / 2.0;
    let hi = w[n - 1] + (w[n - 1] - w[n - 2]) / 2.0;
    if target_nm < lo || target_nm > hi {
        return Err(Error::BandNotCovered {
            target_nm,
            lo: w[0],
            hi: w[n - 1],
        });
    }
    let mut best = 0;
    for i in 1..n {
        if (w[i] - target_nm).abs() < (w[best] - target_nm).abs() {
            best = i;
        }
    }
    Ok(best)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct NdviMap {
    pub width: usize,
    pub height: usize,
    /// Row-major.
    pub values: Vec<f64>,
}

/// Reading of an NDVI value.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum NdviClass {
    /// `[-1, 0]`: water or inanimate surfaces.
    NonVegetated,
    /// `(0, 0.33]`
    BareSoil,
    /// `(0.33, 0.66]`
    SparseVegetation,
    /// `(0.66, 1]`
    DenseVegetation,
}

impl NdviClass {
    pub fn of(ndvi: f64) -> NdviClass {
        if ndvi <= 0.0 {
            NdviClass::NonVegetated
        } else if ndvi <= 0.33 {
            NdviClass::BareSoil
        } else if ndvi <= 0.66 {
            NdviClass::SparseVegetation
        } else {
            NdviClass::DenseVegetation
        }
    }
}

pub fn ndvi(red: f64, nir: f64) -> f64 {
    let sum = nir + red;
    if sum == 0.0 {
        0.0
    } else {
        (nir - red) / sum
    }
}

pub fn ndvi_map(cube: &SpectralCube, cfg: &NdviConfig) -> Result<NdviMap> {
    cfg.validate()?;
    let red = nearest_band(cube.grid(), cfg.red_target_nm)?;
    let nir = nearest_band(cube.grid(), cfg.nir_target_nm)?;
    let values = cube
        .band(red)
        .iter()
        .zip(cube.band(nir))
        .map(|(r, n)| ndvi(*r as f64, *n as f64))
        .collect();
    Ok(NdviMap {
        width: cube.width(),
        height: cube.height(),
        values,
    })
}

/// MSE between the NDVI maps of two cubes, each on its own nearest bands.
pub fn ndvi_mse(reference: &SpectralCube, interpolated: &SpectralCube, cfg: &NdviConfig) -> Result<f64> {
    if (reference.width(), reference.height()) != (interpolated.width(), interpolated.height()) {
        return Err(Error::Shape(format!(
            "reference is {}x{}, interpolated is {}x{}",
            reference.width(),
            reference.height(),
            interpolated.width(),
            interpolated.height()
        )));
    }
    let a = ndvi_map(reference, cfg)?;
    let b = ndvi_map(interpolated, cfg)?;
    mse(&a.values, &b.values)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::interp::{resample_cube, SplineBoundary};

    fn grid(start: f64, step: f64, stop: f64) -> WavelengthGrid {
        WavelengthGrid::arithmetic(start, step, stop).unwrap()
    }

    #[test]
    fn mse_by_hand() {
        assert_eq!(mse(&[1.0, 2.0, 3.0], &[1.0, 2.0, 3.0]).unwrap(), 0.0);
        assert_eq!(mse(&[0.0, 0.0], &[2.0, 2.0]).unwrap(), 4.0);
        assert!(mse(&[1.0], &[1.0, 2.0]).is_err());
        assert!(mse(&[], &[]).is_err());
    }

    #[test]
    fn cmse_zero_on_knot_superset() {
        let src = grid(400.0, 10.0, 700.0);
        let values: Vec<f64> = src.as_slice().iter().map(|x| (x / 33.0).sin() * 50.0 + 100.0).collect();
        let p = SpectralPixel::new(src, values).unwrap();
        let target = grid(430.0, 2.0, 690.0);
        for m in InterpolationMethod::ALL {
            assert!(cmse_pixel(&p, &target, m).unwrap() <= 1e-10, "{m}");
        }
    }

    #[test]
    fn cmse_constant_pixel_is_zero() {
        let src = grid(400.0, 10.0, 700.0);
        let p = SpectralPixel::new(src.clone(), vec![7.25; src.len()]).unwrap();
        for m in InterpolationMethod::ALL {
            assert!(cmse_pixel(&p, &grid(430.0, 4.0, 690.0), m).unwrap() < 1e-20);
        }
    }

    #[test]
    fn cmse_linear_worst_on_smooth_signal() {
        let src = grid(400.0, 10.0, 700.0);
        let values: Vec<f64> = src.as_slice().iter().map(|x| (x / 40.0).sin()).collect();
        let p = SpectralPixel::new(src, values).unwrap();
        let target = grid(430.0, 4.0, 690.0);
        let lin = cmse_pixel(&p, &target, InterpolationMethod::Linear).unwrap();
        let quad = cmse_pixel(&p, &target, InterpolationMethod::Quadratic).unwrap();
        let cubic = cmse_pixel(&p, &target, InterpolationMethod::CubicSpline(SplineBoundary::NotAKnot)).unwrap();
        assert!(lin > quad && lin > cubic, "{lin} {quad} {cubic}");
    }

    #[test]
    fn cmse_cube_two_pixel_mean() {
        let src = grid(400.0, 10.0, 500.0);
        let cube = SpectralCube::from_fn(2, 1, src.clone(), |b, _, c| {
            let x = 400.0 + 10.0 * b as f32;
            if c == 0 { (x / 20.0).sin() } else { (x / 7.0).cos() * 3.0 }
        })
        .unwrap();
        let target = grid(405.0, 3.0, 495.0);
        let m = InterpolationMethod::Linear;
        let a = cmse_pixel(&cube.pixel_at(0, 0).unwrap(), &target, m).unwrap();
        let b = cmse_pixel(&cube.pixel_at(0, 1).unwrap(), &target, m).unwrap();
        assert!((cmse_cube(&cube, &target, m).unwrap() - (a + b) / 2.0).abs() < 1e-15);
    }

    #[test]
    fn trapezoid_by_hand() {
        let g = grid(430.0, 4.0, 690.0);
        assert!((trapezoid_area(g.as_slice(), &vec![1.0; g.len()]).unwrap() - 260.0).abs() < 1e-9);
        assert_eq!(trapezoid_area(&[0.0, 5.0, 10.0], &[0.0, 5.0, 10.0]).unwrap(), 50.0);
        assert!(trapezoid_area(&[0.0, 1.0], &[1.0]).is_err());
    }

    #[test]
    fn surface_difference_by_hand() {
        let g = grid(430.0, 4.0, 690.0);
        let r = SpectralCube::new(1, 1, g.clone(), vec![1.0; 66]).unwrap();
        let i = SpectralCube::new(1, 1, g, vec![27.0 / 26.0; 66]).unwrap();
        let span = surface_avg_difference(&r, &i, SurfaceNormalization::Span).unwrap();
        assert!((span - 10.0 / 260.0).abs() < 1e-6, "{span}");
        let raw = surface_avg_difference(&r, &i, SurfaceNormalization::Raw).unwrap();
        assert!((raw - 10.0).abs() < 1e-4, "{raw}");
        assert_eq!(surface_avg_difference(&r, &r, SurfaceNormalization::Span).unwrap(), 0.0);
    }

    #[test]
    fn surface_zero_for_linear_resample_on_knot_superset() {
        let src = grid(400.0, 10.0, 700.0);
        // 5 nm target: every new value is a midpoint of small integers, exact in f32
        let r = SpectralCube::from_fn(2, 2, src, |b, r, c| ((b * 3 + r + c) % 7) as f32).unwrap();
        let i = resample_cube(&r, &grid(430.0, 5.0, 690.0), InterpolationMethod::Linear).unwrap();
        let d = surface_avg_difference(&r, &i, SurfaceNormalization::Raw).unwrap();
        assert!(d < 1e-9, "{d}");
    }

    #[test]
    fn surface_rejects_disjoint_and_mismatched() {
        let a = SpectralCube::new(1, 1, grid(400.0, 10.0, 500.0), vec![1.0; 11]).unwrap();
        let b = SpectralCube::new(1, 1, grid(600.0, 10.0, 700.0), vec![1.0; 11]).unwrap();
        assert!(matches!(
            surface_avg_difference(&a, &b, SurfaceNormalization::Span),
            Err(Error::NoCommonRange(_))
        ));
        let c = SpectralCube::new(2, 1, grid(400.0, 10.0, 500.0), vec![1.0; 22]).unwrap();
        assert!(matches!(surface_avg_difference(&a, &c, SurfaceNormalization::Span), Err(Error::Shape(_))));
    }

    #[test]
    fn ndvi_examples() {
        assert!((ndvi(0.2, 0.8) - 0.6).abs() < 1e-15);
        assert_eq!(NdviClass::of(ndvi(0.2, 0.8)), NdviClass::SparseVegetation);
        assert_eq!(ndvi(0.0, 0.0), 0.0);
        assert_eq!(ndvi(0.4, 0.4), 0.0);
        assert_eq!(NdviClass::of(-0.2), NdviClass::NonVegetated);
        assert_eq!(NdviClass::of(0.9), NdviClass::DenseVegetation);
    }

    #[test]
    fn ndvi_map_equal_bands_is_zero() {
        let cube = SpectralCube::new(2, 1, grid(600.0, 10.0, 860.0), vec![0.5; 2 * 27]).unwrap();
        let map = ndvi_map(&cube, &NdviConfig::default()).unwrap();
        assert_eq!(map.values, vec![0.0, 0.0]);
    }

    #[test]
    fn ndvi_nearest_band_selection() {
        let g = grid(430.0, 4.0, 858.0);
        assert_eq!(g.as_slice()[nearest_band(&g, 665.0).unwrap()], 666.0);
        assert_eq!(g.as_slice()[nearest_band(&g, 830.0).unwrap()], 830.0);
    }

    #[test]
    fn ndvi_refused_without_nir() {
        let cube = SpectralCube::new(1, 1, grid(430.0, 4.0, 690.0), vec![0.5; 66]).unwrap();
        let err = ndvi_map(&cube, &NdviConfig::default()).unwrap_err();
        assert!(matches!(err, Error::BandNotCovered { target_nm, .. } if target_nm == 830.0));
    }

    #[test]
    fn ndvi_mse_identity_and_symmetry() {
        let g = grid(600.0, 10.0, 860.0);
        let a = SpectralCube::from_fn(3, 3, g.clone(), |b, r, c| (b + r * 2 + c) as f32 * 0.1 + 0.05).unwrap();
        let b = SpectralCube::from_fn(3, 3, g, |b, r, c| (b * 2 + r + c) as f32 * 0.07 + 0.1).unwrap();
        let cfg = NdviConfig::default();
        assert_eq!(ndvi_mse(&a, &a, &cfg).unwrap(), 0.0);
        assert_eq!(ndvi_mse(&a, &b, &cfg).unwrap(), ndvi_mse(&b, &a, &cfg).unwrap());
    }

    #[test]
    fn ndvi_config_invariant() {
        let cfg = NdviConfig {
            red_target_nm: 830.0,
            nir_target_nm: 665.0,
        };
        assert!(cfg.validate().is_err());
    }
}
