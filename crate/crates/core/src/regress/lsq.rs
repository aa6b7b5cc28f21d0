//! Least squares via Householder QR on a column-equilibrated design.

use nalgebra::{DMatrix, DVector};

use super::RegressError;

/// Relative size of an R diagonal entry below which a column is treated as
/// linearly dependent on the preceding ones.
const RANK_TOL: f64 = 1e-10;

/// Solution of an intercept model `y = b0 + sum_j b_j x_j`.
#[derive(Debug, Clone)]
pub struct OlsSolution {
    pub intercept: f64,
    pub coefficients: Vec<f64>,
    pub residuals: Vec<f64>,
    pub sse: f64,
    /// `sse / (n - p)` with `p` counting the intercept.
    pub sigma2: f64,
    pub intercept_std_error: f64,
    pub std_errors: Vec<f64>,
}

impl OlsSolution {
    pub fn df(&self) -> usize {
        self.residuals.len() - self.coefficients.len() - 1
    }
}

/// Fit `y` on an intercept plus the given predictor columns.
///
/// Requires `n > columns.len() + 1` and a full-rank design.
pub fn fit_with_intercept(columns: &[Vec<f64>], y: &[f64]) -> Result<OlsSolution, RegressError> {
    let n = y.len();
    let p = columns.len() + 1;
    if n <= p {
        return Err(RegressError::InsufficientData { n, needed: p + 1 });
    }
    if let Some(c) = columns.iter().find(|c| c.len() != n) {
        return Err(RegressError::LengthMismatch { a: n, b: c.len() });
    }

    let x = DMatrix::from_fn(n, p, |i, j| if j == 0 { 1.0 } else { columns[j - 1][i] });
    let yv = DVector::from_column_slice(y);
    let (beta, cov_diag) = solve(&x, &yv)?;

    let fitted = &x * &beta;
    let residuals: Vec<f64> = (0..n).map(|i| y[i] - fitted[i]).collect();
    let sse: f64 = residuals.iter().map(|r| r * r).sum();
    let sigma2 = sse / (n - p) as f64;
    let se: Vec<f64> = cov_diag.iter().map(|d| (sigma2 * d).sqrt()).collect();

    Ok(OlsSolution {
        intercept: beta[0],
        coefficients: beta.iter().skip(1).copied().collect(),
        residuals,
        sse,
        sigma2,
        intercept_std_error: se[0],
        std_errors: se[1..].to_vec(),
    })
}

/// Returns coefficients and the diagonal of `(X^T X)^-1`.
fn solve(x: &DMatrix<f64>, y: &DVector<f64>) -> Result<(DVector<f64>, Vec<f64>), RegressError> {
    let p = x.ncols();
    let scale: Vec<f64> = x.column_iter().map(|c| c.norm()).collect();
    if scale.iter().any(|s| !(*s > 0.0) || !s.is_finite()) {
        return Err(RegressError::RankDeficient);
    }
    let mut xs = x.clone();
    for (j, s) in scale.iter().enumerate() {
        xs.column_mut(j).unscale_mut(*s);
    }

    let qr = xs.clone().qr();
    let r = qr.r();
    let max_diag = (0..p).map(|j| r[(j, j)].abs()).fold(0.0, f64::max);
    if (0..p).any(|j| r[(j, j)].abs() <= RANK_TOL * max_diag) {
        return Err(RegressError::RankDeficient);
    }

    let project = |rhs: &DVector<f64>| -> Result<DVector<f64>, RegressError> {
        let mut qty = rhs.clone();
        qr.q_tr_mul(&mut qty);
        r.solve_upper_triangular(&qty.rows(0, p).into_owned())
            .ok_or(RegressError::RankDeficient)
    };

    let mut beta_s = project(y)?;
    // one step of iterative refinement
    let resid = y - &xs * &beta_s;
    beta_s += project(&resid)?;

    let r_inv = r
        .solve_upper_triangular(&DMatrix::identity(p, p))
        .ok_or(RegressError::RankDeficient)?;
    let cov_diag = (0..p)
        .map(|j| r_inv.row(j).norm_squared() / (scale[j] * scale[j]))
        .collect();
    let beta = DVector::from_fn(p, |j, _| beta_s[j] / scale[j]);
    Ok((beta, cov_diag))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_line() {
        let x: Vec<f64> = (0..10).map(|i| i as f64).collect();
        let y: Vec<f64> = x.iter().map(|v| 2.0 * v + 1.0).collect();
        let sol = fit_with_intercept(&[x], &y).unwrap();
        assert!((sol.intercept - 1.0).abs() < 1e-10);
        assert!((sol.coefficients[0] - 2.0).abs() < 1e-10);
        assert!(sol.sse < 1e-10);
    }

    #[test]
    fn collinear_columns_are_rank_deficient() {
        let a: Vec<f64> = (0..20).map(|i| (i as f64).sin()).collect();
        let b: Vec<f64> = a.iter().map(|v| 3.0 * v - 1.0).collect();
        let y: Vec<f64> = (0..20).map(|i| i as f64).collect();
        assert!(matches!(
            fit_with_intercept(&[a.clone(), b], &y),
            Err(RegressError::RankDeficient)
        ));
        let constant = vec![5.0; 20];
        assert!(matches!(
            fit_with_intercept(&[constant], &y),
            Err(RegressError::RankDeficient)
        ));
    }

    #[test]
    fn too_few_rows() {
        let err = fit_with_intercept(&[vec![1.0, 2.0]], &[1.0, 2.0]).unwrap_err();
        assert!(matches!(
            err,
            RegressError::InsufficientData { n: 2, needed: 3 }
        ));
    }

    #[test]
    fn intercept_only_is_the_mean() {
        let y = [1.0, 2.0, 6.0];
        let sol = fit_with_intercept(&[], &y).unwrap();
        assert!((sol.intercept - 3.0).abs() < 1e-12);
        assert!((sol.sse - 14.0).abs() < 1e-12);
        // se of the mean = s / sqrt(n)
        assert!((sol.intercept_std_error - (7.0f64 / 3.0).sqrt()).abs() < 1e-12);
    }
}
