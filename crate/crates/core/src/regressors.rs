//! Design-matrix construction for the error-correction regressions.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::series::Panel;

/// Stacked regressor rows `(1, z_{t-1}, dX_{t-1}, ..., dX_{t-q})` where
/// `z_t = benchmark_t - beta * target_t`.
#[derive(Clone, Debug)]
pub struct RegressorMatrix {
    /// T_eff x (2 + 2q); T_eff = T - q - 1.
    pub x: DMatrix<f64>,
    pub labels: Vec<String>,
    pub q: usize,
}

impl RegressorMatrix {
    /// The error-correction column z_{t-1}, one value per row.
    pub fn z(&self) -> Vec<f64> {
        self.x.column(1).iter().copied().collect()
    }
}

/// Regressors plus the matching responses `(d benchmark_t, d target_t)`.
#[derive(Clone, Debug)]
pub struct VecmData {
    pub regressors: RegressorMatrix,
    /// T_eff x 2.
    pub responses: DMatrix<f64>,
}

impl VecmData {
    pub fn t_eff(&self) -> usize {
        self.responses.nrows()
    }
}

/// Builds the lagged design for a panel of length T.
///
/// Row i covers time t = q + 1 + i (0-indexed), so only data up to t enters
/// row i: regressors stop at t-1, the response is the difference at t.
pub fn build_regressors(panel: &Panel, q: usize, beta: f64) -> Result<VecmData> {
    let t = panel.len();
    if t < q + 3 {
        return Err(Error::invalid(format!(
            "panel length {t} insufficient for q = {q}: need at least q + 3 = {}",
            q + 3
        )));
    }
    let b = &panel.benchmark.values;
    let g = &panel.target.values;
    let t_eff = t - q - 1;
    let k = 2 + 2 * q;

    let mut x = DMatrix::<f64>::zeros(t_eff, k);
    let mut y = DMatrix::<f64>::zeros(t_eff, 2);
    for i in 0..t_eff {
        let tt = q + 1 + i;
        x[(i, 0)] = 1.0;
        x[(i, 1)] = b[tt - 1] - beta * g[tt - 1];
        for j in 1..=q {
            x[(i, 2 * j)] = b[tt - j] - b[tt - j - 1];
            x[(i, 2 * j + 1)] = g[tt - j] - g[tt - j - 1];
        }
        y[(i, 0)] = b[tt] - b[tt - 1];
        y[(i, 1)] = g[tt] - g[tt - 1];
    }

    let mut labels = vec!["const".to_string(), "z.l1".to_string()];
    for j in 1..=q {
        labels.push(format!("d{}.l{}", panel.benchmark.label, j));
        labels.push(format!("d{}.l{}", panel.target.label, j));
    }

    Ok(VecmData {
        regressors: RegressorMatrix { x, labels, q },
        responses: y,
    })
}
