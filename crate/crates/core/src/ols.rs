//! Multivariate least squares on a shared design matrix, plus
//! heteroskedasticity-robust (Eicker-White) covariance helpers.

use nalgebra::DMatrix;

use crate::error::{Error, Result};

/// Equation-by-equation least squares fit of `y` (n x m) on `x` (n x k).
#[derive(Clone, Debug)]
pub struct OlsFit {
    /// Coefficients, k x m; column j belongs to response column j.
    pub coef: DMatrix<f64>,
    /// Residuals y - x * coef, n x m.
    pub residuals: DMatrix<f64>,
    /// (x'x)^-1, kept for covariance estimators.
    pub xtx_inv: DMatrix<f64>,
}

/// Solves min ||y - x b|| column-wise via column-pivoted QR.
///
/// A rank-deficient design is rejected; when `labels` is given the error
/// names the dependent columns.
pub fn multi_ols(x: &DMatrix<f64>, y: &DMatrix<f64>, labels: Option<&[String]>) -> Result<OlsFit> {
    let (n, k) = x.shape();
    assert_eq!(y.nrows(), n, "design and response row counts differ");
    if n < k {
        return Err(Error::numerical(format!(
            "least squares underdetermined: {n} rows for {k} regressors"
        )));
    }

    let qr = x.clone().col_piv_qr();
    let r = qr.r();
    let p = qr.p();

    // Pivoting sorts |r_ii| descending, so a relative check on the diagonal
    // detects rank deficiency.
    let r00 = r[(0, 0)].abs();
    let tol = r00 * (n.max(k) as f64) * f64::EPSILON * 16.0;
    let deficient: Vec<usize> = (0..k).filter(|&i| r[(i, i)].abs() <= tol).collect();
    if r00 == 0.0 || !deficient.is_empty() {
        // Map pivot positions back to original column indices.
        let mut order = DMatrix::<f64>::from_fn(k, 1, |i, _| i as f64);
        p.inv_permute_rows(&mut order);
        let mut names = Vec::new();
        for j in 0..k {
            let pivot_pos = order[(j, 0)] as usize;
            if r00 == 0.0 || deficient.contains(&pivot_pos) {
                match labels {
                    Some(l) if j < l.len() => names.push(l[j].clone()),
                    _ => names.push(format!("column {j}")),
                }
            }
        }
        return Err(Error::numerical(format!(
            "singular regressor cross-product; dependent column(s): {}",
            names.join(", ")
        )));
    }

    let mut coef = qr.q().tr_mul(y);
    if !r.solve_upper_triangular_mut(&mut coef) {
        return Err(Error::numerical("triangular solve failed in least squares"));
    }
    p.inv_permute_rows(&mut coef);

    // (x'x)^-1 = P (r'r)^-1 P', recovered from the triangular factor.
    let mut rinv = DMatrix::<f64>::identity(k, k);
    if !r.solve_upper_triangular_mut(&mut rinv) {
        return Err(Error::numerical("triangular inversion failed in least squares"));
    }
    let mut xtx_inv = &rinv * rinv.transpose();
    p.inv_permute_rows(&mut xtx_inv);
    p.inv_permute_columns(&mut xtx_inv);

    let residuals = y - x * &coef;
    Ok(OlsFit { coef, residuals, xtx_inv })
}

/// HC0 sandwich standard errors; entry (i, j) is the standard error of
/// coefficient i in equation j.
pub fn sandwich_se(x: &DMatrix<f64>, xtx_inv: &DMatrix<f64>, residuals: &DMatrix<f64>) -> DMatrix<f64> {
    let (n, k) = x.shape();
    let m = residuals.ncols();
    let mut se = DMatrix::<f64>::zeros(k, m);
    let mut meat = DMatrix::<f64>::zeros(k, k);
    for j in 0..m {
        meat.fill(0.0);
        for t in 0..n {
            let w = residuals[(t, j)] * residuals[(t, j)];
            for a in 0..k {
                let xa = x[(t, a)] * w;
                for b in a..k {
                    meat[(a, b)] += xa * x[(t, b)];
                }
            }
        }
        for a in 0..k {
            for b in 0..a {
                meat[(a, b)] = meat[(b, a)];
            }
        }
        let cov = xtx_inv * &meat * xtx_inv;
        for a in 0..k {
            se[(a, j)] = cov[(a, a)].max(0.0).sqrt();
        }
    }
    se
}

/// HC0 covariance of the stacked coefficient vector (equation-major order:
/// all of equation 1's coefficients, then equation 2's, ...).
///
/// Block (i, j) is (x'x)^-1 [sum_t e_ti e_tj x_t x_t'] (x'x)^-1, so
/// cross-equation dependence is kept.
pub fn sandwich_cov_stacked(
    x: &DMatrix<f64>,
    xtx_inv: &DMatrix<f64>,
    residuals: &DMatrix<f64>,
) -> DMatrix<f64> {
    let (n, k) = x.shape();
    let m = residuals.ncols();
    let mut cov = DMatrix::<f64>::zeros(m * k, m * k);
    let mut meat = DMatrix::<f64>::zeros(k, k);
    for i in 0..m {
        for j in i..m {
            meat.fill(0.0);
            for t in 0..n {
                let w = residuals[(t, i)] * residuals[(t, j)];
                for a in 0..k {
                    let xa = x[(t, a)] * w;
                    for b in 0..k {
                        meat[(a, b)] += xa * x[(t, b)];
                    }
                }
            }
            let block = xtx_inv * &meat * xtx_inv;
            for a in 0..k {
                for b in 0..k {
                    cov[(i * k + a, j * k + b)] = block[(a, b)];
                    if i != j {
                        cov[(j * k + b, i * k + a)] = block[(a, b)];
                    }
                }
            }
        }
    }
    cov
}

#[cfg(test)]
pub(crate) mod test_oracles {
    use nalgebra::DMatrix;

    /// Gauss-Jordan solve of a (x'x) c = x'y system, written independently of
    /// the production path so the two can be cross-checked.
    pub fn normal_equation_ols(x: &DMatrix<f64>, y: &DMatrix<f64>) -> DMatrix<f64> {
        let xtx = x.transpose() * x;
        let xty = x.transpose() * y;
        gauss_jordan_solve(&xtx, &xty)
    }

    pub fn gauss_jordan_solve(a: &DMatrix<f64>, b: &DMatrix<f64>) -> DMatrix<f64> {
        let k = a.nrows();
        let m = b.ncols();
        let mut aug = DMatrix::<f64>::zeros(k, k + m);
        for i in 0..k {
            for j in 0..k {
                aug[(i, j)] = a[(i, j)];
            }
            for j in 0..m {
                aug[(i, k + j)] = b[(i, j)];
            }
        }
        for col in 0..k {
            let mut pivot = col;
            for row in col + 1..k {
                if aug[(row, col)].abs() > aug[(pivot, col)].abs() {
                    pivot = row;
                }
            }
            assert!(aug[(pivot, col)].abs() > 0.0, "oracle: singular system");
            if pivot != col {
                aug.swap_rows(pivot, col);
            }
            let d = aug[(col, col)];
            for j in 0..k + m {
                aug[(col, j)] /= d;
            }
            for row in 0..k {
                if row != col {
                    let f = aug[(row, col)];
                    for j in 0..k + m {
                        aug[(row, j)] -= f * aug[(col, j)];
                    }
                }
            }
        }
        let mut out = DMatrix::<f64>::zeros(k, m);
        for i in 0..k {
            for j in 0..m {
                out[(i, j)] = aug[(i, k + j)];
            }
        }
        out
    }

    pub fn gauss_jordan_inverse(a: &DMatrix<f64>) -> DMatrix<f64> {
        gauss_jordan_solve(a, &DMatrix::<f64>::identity(a.nrows(), a.nrows()))
    }
}
