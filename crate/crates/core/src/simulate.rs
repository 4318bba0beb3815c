//! Seeded simulation of two-regime error-correction systems.

use nalgebra::DMatrix;
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::series::{Panel, Series, Timestamp};

/// Data-generating process for a bivariate system
/// `dX_t = A_r' (1, z_{t-1}, dX_{t-1}, ..., dX_{t-q}) + e_t`,
/// with regime `r` = lower when `z_{t-1} <= tau` and upper otherwise,
/// and `z_t = X_t1 - beta * X_t2`.
///
/// Coefficient rows follow the regressor order (constant, z, then lag pairs);
/// column 0 drives the benchmark equation, column 1 the target equation.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct DgpSpec {
    pub beta: f64,
    pub tau: f64,
    pub a1: Vec<[f64; 2]>,
    pub a2: Vec<[f64; 2]>,
    pub noise_cov: [[f64; 2]; 2],
    pub t: usize,
    #[serde(default = "default_burn_in")]
    pub burn_in: usize,
    /// May be omitted in a spec file when the caller supplies one.
    #[serde(default)]
    pub seed: u64,
}

fn default_burn_in() -> usize {
    200
}

impl DgpSpec {
    pub fn q(&self) -> usize {
        (self.a1.len() - 2) / 2
    }

    pub fn validate(&self) -> Result<()> {
        let rows = self.a1.len();
        if rows < 2 || rows % 2 != 0 {
            return Err(Error::invalid(format!(
                "coefficient matrix has {rows} rows; expected 2 + 2q"
            )));
        }
        if self.a2.len() != rows {
            return Err(Error::invalid(format!(
                "regime coefficient shapes differ: {} vs {} rows",
                rows,
                self.a2.len()
            )));
        }
        let finite = |v: f64| v.is_finite();
        if !self.a1.iter().chain(&self.a2).all(|r| finite(r[0]) && finite(r[1]))
            || !finite(self.beta)
            || !finite(self.tau)
        {
            return Err(Error::invalid("non-finite value in simulation spec"));
        }
        chol2x2(&self.noise_cov)?;
        if self.t < self.q() + 3 {
            return Err(Error::invalid(format!(
                "t = {} too short for q = {}: need at least q + 3",
                self.t,
                self.q()
            )));
        }
        Ok(())
    }

    pub fn coefficient_matrices(&self) -> (DMatrix<f64>, DMatrix<f64>) {
        let k = self.a1.len();
        let to_m = |rows: &Vec<[f64; 2]>| DMatrix::<f64>::from_fn(k, 2, |i, j| rows[i][j]);
        (to_m(&self.a1), to_m(&self.a2))
    }
}

/// Lower Cholesky factor of a symmetric positive definite 2x2 matrix,
/// returned as (l00, l10, l11).
pub(crate) fn chol2x2(c: &[[f64; 2]; 2]) -> Result<(f64, f64, f64)> {
    let sym_tol = 1e-12 * (1.0 + c[0][1].abs().max(c[1][0].abs()));
    if (c[0][1] - c[1][0]).abs() > sym_tol {
        return Err(Error::invalid("noise covariance is not symmetric"));
    }
    if !c[0][0].is_finite() || c[0][0] <= 0.0 {
        return Err(Error::invalid("noise covariance is not positive definite"));
    }
    let l00 = c[0][0].sqrt();
    let l10 = c[0][1] / l00;
    let rem = c[1][1] - l10 * l10;
    if !rem.is_finite() || rem <= 0.0 {
        return Err(Error::invalid("noise covariance is not positive definite"));
    }
    Ok((l00, l10, rem.sqrt()))
}

/// Correlated Gaussian innovation stream with a fixed draw order, so output
/// depends only on the seed.
pub(crate) struct GaussianInnovations {
    rng: ChaCha8Rng,
    l: (f64, f64, f64),
}

impl GaussianInnovations {
    pub fn new(seed: u64, cov: &[[f64; 2]; 2]) -> Result<Self> {
        Ok(GaussianInnovations {
            rng: ChaCha8Rng::seed_from_u64(seed),
            l: chol2x2(cov)?,
        })
    }

    pub fn draw(&mut self) -> [f64; 2] {
        let n1: f64 = self.rng.sample(StandardNormal);
        let n2: f64 = self.rng.sample(StandardNormal);
        [self.l.0 * n1, self.l.1 * n1 + self.l.2 * n2]
    }
}

/// Runs the regime-switching recursion forward from `init` (exactly q + 1
/// level observations) and returns `init` followed by `steps` new levels.
#[allow(clippy::too_many_arguments)]
pub(crate) fn simulate_levels(
    a_lower: &DMatrix<f64>,
    a_upper: &DMatrix<f64>,
    q: usize,
    beta: f64,
    tau: f64,
    init: &[[f64; 2]],
    steps: usize,
    draw: &mut impl FnMut() -> [f64; 2],
) -> Vec<[f64; 2]> {
    assert_eq!(init.len(), q + 1, "initial state must hold q + 1 levels");
    let k = 2 + 2 * q;
    assert_eq!(a_lower.nrows(), k);

    let mut path: Vec<[f64; 2]> = Vec::with_capacity(init.len() + steps);
    path.extend_from_slice(init);
    let mut xrow = vec![0.0_f64; k];
    for _ in 0..steps {
        let t = path.len();
        let prev = path[t - 1];
        let z = prev[0] - beta * prev[1];
        xrow[0] = 1.0;
        xrow[1] = z;
        for j in 1..=q {
            let a = path[t - j];
            let b = path[t - j - 1];
            xrow[2 * j] = a[0] - b[0];
            xrow[2 * j + 1] = a[1] - b[1];
        }
        let a = if z <= tau { a_lower } else { a_upper };
        let eps = draw();
        let mut d = [eps[0], eps[1]];
        for (i, &xv) in xrow.iter().enumerate() {
            d[0] += a[(i, 0)] * xv;
            d[1] += a[(i, 1)] * xv;
        }
        path.push([prev[0] + d[0], prev[1] + d[1]]);
    }
    path
}

/// Simulates a panel of length `spec.t` from zero initial levels, discarding
/// `spec.burn_in` leading steps. Output is fully determined by `spec.seed`.
pub fn simulate_tvecm(spec: &DgpSpec) -> Result<Panel> {
    spec.validate()?;
    let q = spec.q();
    let (a_lower, a_upper) = spec.coefficient_matrices();
    let mut innov = GaussianInnovations::new(spec.seed, &spec.noise_cov)?;
    let init = vec![[0.0, 0.0]; q + 1];

    let path = simulate_levels(
        &a_lower,
        &a_upper,
        q,
        spec.beta,
        spec.tau,
        &init,
        spec.burn_in + spec.t,
        &mut || innov.draw(),
    );
    let kept = &path[path.len() - spec.t..];

    let start = Timestamp::month(1985, 1).expect("valid month");
    let timestamps = (0..spec.t).map(|i| start.plus_months(i)).collect();
    Panel::new(
        timestamps,
        Series::new("benchmark", kept.iter().map(|p| p[0]).collect())?,
        Series::new("target", kept.iter().map(|p| p[1]).collect())?,
    )
}
