//! Ordinary least squares on (possibly transformed) coordinates.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinearFit {
    pub slope: f64,
    pub intercept: f64,
    pub slope_stderr: f64,
    pub r_squared: f64,
    pub n: usize,
    /// Euclidean norm of the residuals.
    pub residual_norm: f64,
}

impl LinearFit {
    pub fn predict(&self, x: f64) -> f64 {
        self.intercept + self.slope * x
    }
}

/// Unweighted OLS fit of `y = intercept + slope * x`.
pub fn linfit(xs: &[f64], ys: &[f64]) -> Result<LinearFit> {
    if xs.len() != ys.len() {
        return Err(Error::fit(format!(
            "length mismatch: {} x values, {} y values",
            xs.len(),
            ys.len()
        )));
    }
    let n = xs.len();
    if n < 3 {
        return Err(Error::fit(format!("need at least 3 points, got {n}")));
    }
    if xs.iter().chain(ys).any(|v| !v.is_finite()) {
        return Err(Error::fit("non-finite coordinate"));
    }
    let nf = n as f64;
    let mx = xs.iter().sum::<f64>() / nf;
    let my = ys.iter().sum::<f64>() / nf;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let syy: f64 = ys.iter().map(|y| (y - my).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let scale = xs.iter().map(|x| x.abs()).fold(0.0, f64::max).max(1.0);
    if sxx <= 1e-24 * scale * scale * nf {
        return Err(Error::fit("degenerate x values"));
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let sse: f64 = xs
        .iter()
        .zip(ys)
        .map(|(x, y)| (y - intercept - slope * x).powi(2))
        .sum();
    let r_squared = if syy > 0.0 {
        (1.0 - sse / syy).clamp(0.0, 1.0)
    } else {
        1.0
    };
    let slope_stderr = (sse / (nf - 2.0) / sxx).sqrt();
    Ok(LinearFit {
        slope,
        intercept,
        slope_stderr,
        r_squared,
        n,
        residual_norm: sse.sqrt(),
    })
}

/// Ranks starting at 1, ties get their average rank.
fn ranks(v: &[f64]) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..v.len()).collect();
    idx.sort_by(|&a, &b| v[a].total_cmp(&v[b]));
    let mut out = vec![0.0; v.len()];
    let mut i = 0;
    while i < idx.len() {
        let mut j = i;
        while j + 1 < idx.len() && v[idx[j + 1]] == v[idx[i]] {
            j += 1;
        }
        let rank = (i + j) as f64 / 2.0 + 1.0;
        for k in &idx[i..=j] {
            out[*k] = rank;
        }
        i = j + 1;
    }
    out
}

/// Spearman rank correlation (Pearson correlation of average ranks).
pub fn spearman(xs: &[f64], ys: &[f64]) -> Result<f64> {
    if xs.len() != ys.len() || xs.len() < 2 {
        return Err(Error::fit("spearman needs two equal-length samples of size >= 2"));
    }
    let (rx, ry) = (ranks(xs), ranks(ys));
    let n = rx.len() as f64;
    let mx = rx.iter().sum::<f64>() / n;
    let my = ry.iter().sum::<f64>() / n;
    let cov: f64 = rx.iter().zip(&ry).map(|(a, b)| (a - mx) * (b - my)).sum();
    let vx: f64 = rx.iter().map(|a| (a - mx).powi(2)).sum();
    let vy: f64 = ry.iter().map(|b| (b - my).powi(2)).sum();
    if vx == 0.0 || vy == 0.0 {
        return Err(Error::fit("spearman undefined for a constant sample"));
    }
    Ok(cov / (vx * vy).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    #[test]
    fn exact_line() {
        let xs = [0.0, 1.0, 2.0, 3.0];
        let ys: Vec<f64> = xs.iter().map(|x| 2.0 * x + 1.0).collect();
        let f = linfit(&xs, &ys).unwrap();
        assert_relative_eq!(f.slope, 2.0, epsilon = 1e-12);
        assert_relative_eq!(f.intercept, 1.0, epsilon = 1e-12);
        assert_relative_eq!(f.r_squared, 1.0, epsilon = 1e-12);
        assert!(f.slope_stderr < 1e-12);
    }

    #[test]
    fn perturbed_line() {
        let eps = 0.01;
        let xs: Vec<f64> = (0..20).map(f64::from).collect();
        let ys: Vec<f64> = xs
            .iter()
            .enumerate()
            .map(|(i, x)| x + if i % 2 == 0 { eps } else { -eps })
            .collect();
        let f = linfit(&xs, &ys).unwrap();
        assert!((f.slope - 1.0).abs() < 10.0 * eps / 20.0);
        assert!(f.r_squared < 1.0);
    }

    #[test]
    fn planted_square_law_in_log_log() {
        let rhos: Vec<f64> = (3..=8).map(|k| k as f64 * 0.011).collect();
        let xs: Vec<f64> = rhos.iter().map(|r| r.ln()).collect();
        let ys: Vec<f64> = rhos.iter().map(|r| (3.7 * r * r).ln()).collect();
        let f = linfit(&xs, &ys).unwrap();
        assert!((f.slope - 2.0).abs() < 0.01);
    }

    #[test]
    fn degenerate_inputs() {
        assert!(linfit(&[1.0, 1.0, 1.0], &[1.0, 2.0, 3.0]).is_err());
        assert!(linfit(&[1.0, 2.0], &[1.0, 2.0]).is_err());
        assert!(linfit(&[1.0, 2.0, 3.0], &[1.0, 2.0]).is_err());
    }

    #[test]
    fn spearman_cases() {
        let x = [1.0, 2.0, 3.0, 4.0];
        assert_relative_eq!(spearman(&x, &[10.0, 20.0, 30.0, 40.0]).unwrap(), 1.0);
        assert_relative_eq!(spearman(&x, &[4.0, 3.0, 2.0, 1.0]).unwrap(), -1.0);
        // a monotone but nonlinear relation is still rank-perfect
        assert_relative_eq!(spearman(&x, &[1.0, 8.0, 27.0, 64.0]).unwrap(), 1.0);
        assert!(spearman(&x, &[1.0; 4]).is_err());
    }

    proptest! {
        #[test]
        fn affine_equivariance(
            ys in prop::collection::vec(-10.0f64..10.0, 5..30),
            a in prop_oneof![0.1f64..10.0, -10.0f64..-0.1],
            b in -100.0f64..100.0,
        ) {
            let xs: Vec<f64> = (0..ys.len()).map(|i| i as f64 * 0.5).collect();
            let base = linfit(&xs, &ys).unwrap();
            let moved: Vec<f64> = xs.iter().map(|x| a * x + b).collect();
            let f = linfit(&moved, &ys).unwrap();
            let expected = base.slope / a;
            prop_assert!((f.slope - expected).abs() <= 1e-10 * expected.abs().max(1e-3));
        }

        #[test]
        fn residuals_are_orthogonal(
            pts in prop::collection::vec((-50.0f64..50.0, -50.0f64..50.0), 3..40),
        ) {
            let (xs, ys): (Vec<f64>, Vec<f64>) = pts.into_iter().unzip();
            prop_assume!(linfit(&xs, &ys).is_ok());
            let f = linfit(&xs, &ys).unwrap();
            let res: Vec<f64> = xs.iter().zip(&ys).map(|(x, y)| y - f.predict(*x)).collect();
            let scale = ys.iter().map(|y| y.abs()).sum::<f64>().max(1.0)
                * xs.iter().map(|x| x.abs()).fold(1.0, f64::max);
            prop_assert!(res.iter().sum::<f64>().abs() <= 1e-8 * scale);
            let xr: f64 = xs.iter().zip(&res).map(|(x, r)| x * r).sum();
            prop_assert!(xr.abs() <= 1e-8 * scale);
            prop_assert!((0.0..=1.0).contains(&f.r_squared));
        }
    }
}
