use super::{check_knots, locate, InterpolationMethod, Location, SplineBoundary};
use crate::error::{Error, Result};

/// Piecewise cubic `C_i(x) = a + b t + c t² + d t³` with `t = x - x_i` on `[x_i, x_{i+1}]`.
#[derive(Clone, Debug, PartialEq)]
pub struct SplineCoefficients {
    knots: Vec<f64>,
    pieces: Vec<[f64; 4]>,
}

impl SplineCoefficients {
    pub fn knots(&self) -> &[f64] {
        &self.knots
    }

    pub fn intervals(&self) -> usize {
        self.pieces.len()
    }

    /// Local-basis coefficients `(a, b, c, d)` of piece `i`.
    pub fn piece(&self, i: usize) -> [f64; 4] {
        self.pieces[i]
    }

    /// Coefficients of piece `i` expanded in global monomials `1, x, x², x³`.
    pub fn monomial(&self, i: usize) -> [f64; 4] {
        let [a, b, c, d] = self.pieces[i];
        let s = self.knots[i];
        [
            a - b * s + c * s * s - d * s * s * s,
            b - 2.0 * c * s + 3.0 * d * s * s,
            c - 3.0 * d * s,
            d,
        ]
    }

    /// Evaluates piece `i` at any `x`, including outside its own interval.
    pub fn eval_piece(&self, i: usize, x: f64) -> f64 {
        let [a, b, c, d] = self.pieces[i];
        let t = x - self.knots[i];
        a + t * (b + t * (c + t * d))
    }

    /// First and second derivative of piece `i` at `x`.
    pub fn piece_derivatives(&self, i: usize, x: f64) -> (f64, f64) {
        let [_, b, c, d] = self.pieces[i];
        let t = x - self.knots[i];
        (b + t * (2.0 * c + 3.0 * d * t), 2.0 * c + 6.0 * d * t)
    }

    pub fn eval(&self, x: f64) -> Result<f64> {
        Ok(match locate(&self.knots, x)? {
            Location::Knot(k) if k < self.pieces.len() => self.pieces[k][0],
            Location::Knot(k) => self.eval_piece(k - 1, x),
            Location::Interval(i) => self.eval_piece(i, x),
        })
    }
}

/// Solves a tridiagonal system in place (Thomas algorithm). `sub[0]` and
/// `sup[n-1]` are ignored.
fn solve_tridiagonal(sub: &[f64], diag: &mut [f64], sup: &[f64], rhs: &mut [f64]) -> Result<()> {
    let n = diag.len();
    for i in 1..n {
        if diag[i - 1] == 0.0 {
            return Err(Error::Internal("singular spline system".into()));
        }
        let w = sub[i] / diag[i - 1];
        diag[i] -= w * sup[i - 1];
        rhs[i] -= w * rhs[i - 1];
    }
    if diag[n - 1] == 0.0 {
        return Err(Error::Internal("singular spline system".into()));
    }
    rhs[n - 1] /= diag[n - 1];
    for i in (0..n - 1).rev() {
        rhs[i] = (rhs[i] - sup[i] * rhs[i + 1]) / diag[i];
    }
    Ok(())
}

/// Fits an interpolating cubic spline with continuous first and second
/// derivatives, closed by the given end conditions.
///
/// Unknowns are the knot second derivatives `M_i`. For not-a-knot, `M_0` and
/// `M_n` are eliminated into the first and last interior rows, which keeps the
/// system tridiagonal and diagonally dominant.
pub fn fit_cubic_spline(xs: &[f64], ys: &[f64], boundary: SplineBoundary) -> Result<SplineCoefficients> {
    check_knots(xs, ys, &InterpolationMethod::CubicSpline(boundary))?;
    let n = xs.len() - 1;
    let h: Vec<f64> = xs.windows(2).map(|w| w[1] - w[0]).collect();
    let delta: Vec<f64> = (0..n).map(|i| (ys[i + 1] - ys[i]) / h[i]).collect();

    // interior rows i = 1..n-1 stored at i-1
    let m = n - 1;
    let mut sub = vec![0.0; m];
    let mut diag = vec![0.0; m];
    let mut sup = vec![0.0; m];
    let mut rhs = vec![0.0; m];
    for i in 1..n {
        sub[i - 1] = h[i - 1];
        diag[i - 1] = 2.0 * (h[i - 1] + h[i]);
        sup[i - 1] = h[i];
        rhs[i - 1] = 6.0 * (delta[i] - delta[i - 1]);
    }

    if boundary == SplineBoundary::NotAKnot {
        // M_0 = ((h0 + h1) M_1 - h0 M_2) / h1
        let (h0, h1) = (h[0], h[1]);
        diag[0] += h0 * (h0 + h1) / h1;
        sup[0] -= h0 * h0 / h1;
        // M_n = ((h_{n-2} + h_{n-1}) M_{n-1} - h_{n-1} M_{n-2}) / h_{n-2}
        let (ha, hb) = (h[n - 2], h[n - 1]);
        diag[m - 1] += hb * (ha + hb) / ha;
        sub[m - 1] -= hb * hb / ha;
    }

    solve_tridiagonal(&sub, &mut diag, &sup, &mut rhs)?;

    let mut second = Vec::with_capacity(n + 1);
    match boundary {
        SplineBoundary::Natural => {
            second.push(0.0);
            second.extend_from_slice(&rhs);
            second.push(0.0);
        }
        SplineBoundary::NotAKnot => {
            let (h0, h1) = (h[0], h[1]);
            let m1 = rhs[0];
            let m2 = if m > 1 { rhs[1] } else { 0.0 };
            second.push(((h0 + h1) * m1 - h0 * m2) / h1);
            second.extend_from_slice(&rhs);
            let (ha, hb) = (h[n - 2], h[n - 1]);
            let ml = rhs[m - 1];
            let ml2 = rhs[m - 2];
            second.push(((ha + hb) * ml - hb * ml2) / ha);
        }
    }

    let pieces = (0..n)
        .map(|i| {
            let (mi, mj) = (second[i], second[i + 1]);
            [
                ys[i],
                delta[i] - h[i] * (2.0 * mi + mj) / 6.0,
                mi / 2.0,
                (mj - mi) / (6.0 * h[i]),
            ]
        })
        .collect();
    Ok(SplineCoefficients {
        knots: xs.to_vec(),
        pieces,
    })
}
