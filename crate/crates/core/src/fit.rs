//! Small least-squares helpers.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

#[derive(Debug, Clone)]
pub struct LeastSquares {
    pub params: Vec<f64>,
    /// Standard errors of the parameters from the residual variance.
    pub stderr: Vec<f64>,
    /// Root-mean-square residual.
    pub rms: f64,
    /// Condition number of the design matrix.
    pub condition: f64,
}

/// Ordinary least squares y ≈ X·β via SVD.
pub fn least_squares(design: &[Vec<f64>], y: &[f64]) -> Result<LeastSquares> {
    let m = y.len();
    let n = design.first().map_or(0, |r| r.len());
    if m < n || n == 0 {
        return Err(Error::Fit(format!("{m} samples for {n} parameters")));
    }
    let x = DMatrix::from_fn(m, n, |i, j| design[i][j]);
    let yv = DVector::from_column_slice(y);
    let svd = x.clone().svd(true, true);
    let smax = svd.singular_values.max();
    let smin = svd.singular_values.min();
    let condition = if smin > 0.0 { smax / smin } else { f64::INFINITY };
    if !(condition < 1e12) {
        return Err(Error::Fit(format!("design matrix is ill-conditioned (condition {condition:.3e})")));
    }
    let beta = svd.solve(&yv, 0.0).map_err(|e| Error::Fit(e.to_string()))?;
    let r = &yv - &x * &beta;
    let rss = r.norm_squared();
    let dof = (m - n).max(1) as f64;
    let sigma2 = rss / dof;
    let xtx = x.transpose() * &x;
    let cov = xtx.try_inverse().ok_or_else(|| Error::Fit("singular normal matrix".into()))? * sigma2;
    Ok(LeastSquares {
        params: beta.iter().copied().collect(),
        stderr: (0..n).map(|k| cov[(k, k)].max(0.0).sqrt()).collect(),
        rms: (rss / m as f64).sqrt(),
        condition,
    })
}

/// Slope and intercept of the least-squares line through (x, y).
pub fn linear_fit(x: &[f64], y: &[f64]) -> Result<(f64, f64)> {
    let design: Vec<Vec<f64>> = x.iter().map(|&t| vec![t, 1.0]).collect();
    let f = least_squares(&design, y)?;
    Ok((f.params[0], f.params[1]))
}

/// Slope of log y against log x.
pub fn loglog_slope(x: &[f64], y: &[f64]) -> Result<f64> {
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    Ok(linear_fit(&lx, &ly)?.0)
}
