use super::{locate, Location};
use crate::error::{Error, Result};

/// Three consecutive knot indices used to evaluate the quadratic at `query`.
///
/// The bracketing interval is widened by the neighbour closer to the query;
/// ties go left. Edge intervals always widen toward the interior.
pub fn select_quadratic_window(xs: &[f64], query: f64) -> Result<[usize; 3]> {
    if xs.len() < 3 {
        return Err(Error::Arity {
            method: "quadratic",
            needed: 3,
            got: xs.len(),
        });
    }
    let i = match locate(xs, query)? {
        Location::Knot(k) => k.min(xs.len() - 2),
        Location::Interval(i) => i,
    };
    Ok(window_for_interval(xs, i, query))
}

pub(super) fn window_for_interval(xs: &[f64], i: usize, q: f64) -> [usize; 3] {
    let n = xs.len();
    if i == 0 {
        return [0, 1, 2];
    }
    if i + 2 >= n {
        return [n - 3, n - 2, n - 1];
    }
    let left = q - xs[i - 1];
    let right = xs[i + 2] - q;
    if right < left {
        [i, i + 1, i + 2]
    } else {
        [i - 1, i, i + 1]
    }
}

/// Lagrange form through three points.
pub(super) fn lagrange3(x: &[f64], y: &[f64], q: f64) -> f64 {
    let l0 = (q - x[1]) * (q - x[2]) / ((x[0] - x[1]) * (x[0] - x[2]));
    let l1 = (q - x[0]) * (q - x[2]) / ((x[1] - x[0]) * (x[1] - x[2]));
    let l2 = (q - x[0]) * (q - x[1]) / ((x[2] - x[0]) * (x[2] - x[1]));
    y[0] * l0 + y[1] * l1 + y[2] * l2
}
