use super::{check_knots, InterpolationMethod};
use crate::error::Result;

fn sign(v: f64) -> i8 {
    if v > 0.0 {
        1
    } else if v < 0.0 {
        -1
    } else {
        0
    }
}

/// One-sided three-point end derivative, clamped so the end interval stays monotone.
fn edge_derivative(h0: f64, h1: f64, d0: f64, d1: f64) -> f64 {
    let d = ((2.0 * h0 + h1) * d0 - h0 * d1) / (h0 + h1);
    if sign(d) != sign(d0) {
        0.0
    } else if sign(d0) != sign(d1) && d.abs() > 3.0 * d0.abs() {
        3.0 * d0
    } else {
        d
    }
}

/// Knot derivatives of the shape-preserving cubic Hermite interpolant
/// (Fritsch–Carlson weighted harmonic mean, zero at local extrema).
pub fn pchip_derivatives(xs: &[f64], ys: &[f64]) -> Result<Vec<f64>> {
    check_knots(xs, ys, &InterpolationMethod::Pchip)?;
    let n = xs.len();
    let h: Vec<f64> = xs.windows(2).map(|w| w[1] - w[0]).collect();
    let delta: Vec<f64> = (0..n - 1).map(|i| (ys[i + 1] - ys[i]) / h[i]).collect();

    if n == 2 {
        return Ok(vec![delta[0]; 2]);
    }

    let mut d = vec![0.0; n];
    for i in 1..n - 1 {
        let (s0, s1) = (delta[i - 1], delta[i]);
        if sign(s0) * sign(s1) <= 0 {
            continue;
        }
        let w1 = 2.0 * h[i] + h[i - 1];
        let w2 = h[i] + 2.0 * h[i - 1];
        d[i] = (w1 + w2) / (w1 / s0 + w2 / s1);
    }
    d[0] = edge_derivative(h[0], h[1], delta[0], delta[1]);
    d[n - 1] = edge_derivative(h[n - 2], h[n - 3], delta[n - 2], delta[n - 3]);
    Ok(d)
}

pub(super) fn hermite(xs: &[f64], ys: &[f64], d: &[f64], i: usize, q: f64) -> f64 {
    let h = xs[i + 1] - xs[i];
    let t = (q - xs[i]) / h;
    let s = 1.0 - t;
    let h10 = t * s * s;
    let h01 = t * t * (3.0 - 2.0 * t);
    let h11 = -t * t * s;
    // increment form: flat intervals stay exactly flat
    ys[i] + h01 * (ys[i + 1] - ys[i]) + h * (h10 * d[i] + h11 * d[i + 1])
}
