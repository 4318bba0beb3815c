//! Two-regime threshold error-correction estimation: regime classification,
//! per-candidate least-squares fits, and a grid search over the threshold and
//! the cointegrating slope that maximizes the concentrated Gaussian
//! likelihood.

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linctr::{gaussian_loglik, CointVector};
use crate::ols::{multi_ols, sandwich_se};
use crate::regressors::{build_regressors, VecmData};
use crate::series::Panel;

/// Regime of an observation: `Lower` when z_{t-1} <= tau (weak inequality),
/// `Upper` otherwise.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Regime {
    Lower,
    Upper,
}

impl Regime {
    /// Conventional 1/2 indicator (1 = lower regime).
    pub fn indicator(self) -> u8 {
        match self {
            Regime::Lower => 1,
            Regime::Upper => 2,
        }
    }
}

impl Serialize for Regime {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_u8(self.indicator())
    }
}

/// Assign each observation to a regime by comparing z against the threshold.
pub fn classify_regimes(z: &[f64], tau: f64) -> Vec<Regime> {
    z.iter()
        .map(|&v| if v <= tau { Regime::Lower } else { Regime::Upper })
        .collect()
}

/// Grid-search configuration.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", default)]
pub struct GridConfig {
    /// Grid points per searched dimension.
    pub grid_points: usize,
    /// Minimum fraction of observations each regime must keep.
    pub trim: f64,
    /// Half-width of the slope search interval, in first-step standard
    /// errors.
    pub beta_radius: f64,
    /// Hold the slope at the first-step estimate and search the threshold
    /// only.
    pub fix_beta: bool,
}

impl Default for GridConfig {
    fn default() -> Self {
        GridConfig { grid_points: 300, trim: 0.05, beta_radius: 6.0, fix_beta: false }
    }
}

impl GridConfig {
    pub fn validate(&self) -> Result<()> {
        if self.grid_points < 2 {
            return Err(Error::invalid(format!(
                "gridPoints must be at least 2 (got {})",
                self.grid_points
            )));
        }
        if !(self.trim > 0.0 && self.trim < 0.5) {
            return Err(Error::invalid(format!(
                "trim must lie strictly between 0 and 0.5 (got {})",
                self.trim
            )));
        }
        if !(self.beta_radius >= 0.0 && self.beta_radius.is_finite()) {
            return Err(Error::invalid(format!(
                "betaRadius must be finite and non-negative (got {})",
                self.beta_radius
            )));
        }
        Ok(())
    }
}

/// Estimated two-regime model at a particular (slope, threshold).
#[derive(Clone, Debug)]
pub struct TvecmFit {
    pub tau: f64,
    pub beta: f64,
    /// Lower-regime coefficients, one column per equation.
    pub a1: DMatrix<f64>,
    /// Upper-regime coefficients.
    pub a2: DMatrix<f64>,
    /// Eicker-White standard errors matching `a1`.
    pub se1: DMatrix<f64>,
    /// Eicker-White standard errors matching `a2`.
    pub se2: DMatrix<f64>,
    /// Residuals in original row order.
    pub residuals: DMatrix<f64>,
    /// Pooled residual covariance E'E / T_eff.
    pub sigma: DMatrix<f64>,
    pub log_lik: f64,
    pub regime: Vec<Regime>,
    pub n_lower: usize,
    pub n_upper: usize,
    pub labels: Vec<String>,
    pub q: usize,
}

impl TvecmFit {
    pub fn regime_counts(&self) -> (usize, usize) {
        (self.n_lower, self.n_upper)
    }
}

fn gather_rows(m: &DMatrix<f64>, rows: &[usize]) -> DMatrix<f64> {
    let mut out = DMatrix::<f64>::zeros(rows.len(), m.ncols());
    for (i, &r) in rows.iter().enumerate() {
        for c in 0..m.ncols() {
            out[(i, c)] = m[(r, c)];
        }
    }
    out
}

/// Fit the two-regime model at a fixed threshold on prebuilt regressors.
/// Returns `Ok(None)` (a skip marker) when the split violates the trim
/// constraint or a regime block is singular. With trim = 0 an empty regime is
/// allowed: the populated side absorbs every row and the empty side reports
/// zero coefficients and standard errors.
pub fn fit_tvecm_at_data(
    data: &VecmData,
    beta: f64,
    tau: f64,
    trim: f64,
) -> Result<Option<TvecmFit>> {
    if !(0.0..0.5).contains(&trim) {
        return Err(Error::invalid(format!("trim must lie in [0, 0.5) (got {trim})")));
    }
    let x = &data.regressors.x;
    let n = x.nrows();
    let k = x.ncols();
    let z: Vec<f64> = x.column(1).iter().copied().collect();
    let regime = classify_regimes(&z, tau);
    let lower: Vec<usize> = (0..n).filter(|&i| regime[i] == Regime::Lower).collect();
    let upper: Vec<usize> = (0..n).filter(|&i| regime[i] == Regime::Upper).collect();
    let (n1, n2) = (lower.len(), upper.len());

    let min_count = trim * n as f64;
    if (n1 as f64) < min_count || (n2 as f64) < min_count {
        return Ok(None);
    }
    if trim == 0.0 && (n1 == 0 || n2 == 0) {
        return fit_collapsed(data, beta, tau, regime, n1 == 0).map(Some);
    }
    if n1 < k || n2 < k {
        return Ok(None);
    }

    // Coefficients, residuals, inverse Gram matrix, and regressors of one side.
    type SideFit = (DMatrix<f64>, DMatrix<f64>, DMatrix<f64>, DMatrix<f64>);
    let fit_side = |rows: &[usize]| -> Option<SideFit> {
        let xr = gather_rows(x, rows);
        let yr = gather_rows(&data.responses, rows);
        let f = multi_ols(&xr, &yr, None).ok()?;
        Some((f.coef, f.residuals, f.xtx_inv, xr))
    };
    let Some((a1, e1, xi1, x1)) = fit_side(&lower) else { return Ok(None) };
    let Some((a2, e2, xi2, x2)) = fit_side(&upper) else { return Ok(None) };

    let mut residuals = DMatrix::<f64>::zeros(n, 2);
    for (i, &r) in lower.iter().enumerate() {
        residuals.set_row(r, &e1.row(i));
    }
    for (i, &r) in upper.iter().enumerate() {
        residuals.set_row(r, &e2.row(i));
    }
    let (sigma, _, log_lik) = match gaussian_loglik(&residuals) {
        Ok(v) => v,
        Err(_) => return Ok(None),
    };

    let se1 = sandwich_se(&x1, &xi1, &e1);
    let se2 = sandwich_se(&x2, &xi2, &e2);

    Ok(Some(TvecmFit {
        tau,
        beta,
        a1,
        a2,
        se1,
        se2,
        residuals,
        sigma,
        log_lik,
        regime,
        n_lower: n1,
        n_upper: n2,
        labels: data.regressors.labels.clone(),
        q: data.regressors.q,
    }))
}

/// One-regime degenerate case under trim = 0: the whole sample lands on one
/// side, so the model reduces to the linear fit with a zero block opposite.
fn fit_collapsed(
    data: &VecmData,
    beta: f64,
    tau: f64,
    regime: Vec<Regime>,
    lower_empty: bool,
) -> Result<TvecmFit> {
    let x = &data.regressors.x;
    let k = x.ncols();
    let fit = multi_ols(x, &data.responses, Some(&data.regressors.labels))?;
    let (sigma, _, log_lik) = gaussian_loglik(&fit.residuals)?;
    let se_full = sandwich_se(x, &fit.xtx_inv, &fit.residuals);
    let zeros = DMatrix::<f64>::zeros(k, 2);
    let n = x.nrows();
    let (a1, a2, se1, se2, n_lower, n_upper) = if lower_empty {
        (zeros.clone(), fit.coef, zeros, se_full, 0, n)
    } else {
        (fit.coef, zeros.clone(), se_full, zeros, n, 0)
    };
    Ok(TvecmFit {
        tau,
        beta,
        a1,
        a2,
        se1,
        se2,
        residuals: fit.residuals,
        sigma,
        log_lik,
        regime,
        n_lower,
        n_upper,
        labels: data.regressors.labels.clone(),
        q: data.regressors.q,
    })
}

/// Fit at an explicit (slope, threshold) pair, building regressors from the
/// panel. `Ok(None)` marks an infeasible split as in [`fit_tvecm_at_data`].
pub fn fit_tvecm_at(
    panel: &Panel,
    q: usize,
    beta: f64,
    tau: f64,
    trim: f64,
) -> Result<Option<TvecmFit>> {
    let data = build_regressors(panel, q, beta)?;
    fit_tvecm_at_data(&data, beta, tau, trim)
}

/// Threshold candidates: empirical quantiles of z between trim and 1 - trim.
/// Quantiles are order statistics at index round(p (n-1)); duplicate values
/// collapse to one candidate.
pub fn tau_grid(z: &[f64], grid_points: usize, trim: f64) -> Vec<f64> {
    assert!(grid_points >= 1);
    let mut sorted = z.to_vec();
    sorted.sort_unstable_by(|a, b| a.partial_cmp(b).expect("finite z"));
    let n = sorted.len();
    let mut out = Vec::with_capacity(grid_points);
    for i in 0..grid_points {
        let p = if grid_points == 1 {
            0.5
        } else {
            trim + (1.0 - 2.0 * trim) * i as f64 / (grid_points - 1) as f64
        };
        let idx = (p * (n - 1) as f64).round() as usize;
        out.push(sorted[idx.min(n - 1)]);
    }
    out.dedup();
    out
}

/// Slope candidates: evenly spaced around the first-step estimate with
/// half-width `radius` standard errors. Collapses to the centre alone when
/// the slope is held fixed or the interval is degenerate.
pub fn beta_grid(center: f64, se: f64, grid_points: usize, radius: f64, fix_beta: bool) -> Vec<f64> {
    if fix_beta || se <= 0.0 || radius == 0.0 || grid_points == 1 {
        return vec![center];
    }
    let lo = center - radius * se;
    let hi = center + radius * se;
    let mut out: Vec<f64> = (0..grid_points)
        .map(|i| lo + (hi - lo) * i as f64 / (grid_points - 1) as f64)
        .collect();
    out.dedup();
    out
}

/// Deterministic winner among scored candidates (score, tau, beta): highest
/// score, with ties within 1e-12 resolved to the smallest tau, then the
/// smallest beta.
pub(crate) fn select_best(candidates: &[(f64, f64, f64)]) -> Option<(f64, f64, f64)> {
    let best = candidates.iter().map(|c| c.0).fold(f64::NEG_INFINITY, f64::max);
    if best == f64::NEG_INFINITY {
        return None;
    }
    candidates
        .iter()
        .filter(|c| c.0 >= best - 1e-12)
        .copied()
        .min_by(|a, b| (a.1, a.2).partial_cmp(&(b.1, b.2)).expect("finite grid"))
        .map(|(_, tau, beta)| (best, tau, beta))
}

/// Maximum-likelihood grid search over (slope, threshold). Each slope
/// candidate gets its own threshold grid built from the quantiles of its
/// error-correction series. Candidate fits are evaluated in parallel; the
/// reduction applies the deterministic tie-break after all scores are in.
pub fn grid_search_tvecm(
    panel: &Panel,
    q: usize,
    eg: &CointVector,
    cfg: &GridConfig,
) -> Result<TvecmFit> {
    cfg.validate()?;
    // Surface length problems once, up front.
    build_regressors(panel, q, eg.beta)?;

    let betas = beta_grid(eg.beta, eg.beta_se, cfg.grid_points, cfg.beta_radius, cfg.fix_beta);
    let per_beta: Vec<Vec<(f64, f64, f64)>> = betas
        .par_iter()
        .map(|&beta| {
            let Ok(data) = build_regressors(panel, q, beta) else { return Vec::new() };
            let z: Vec<f64> = data.regressors.x.column(1).iter().copied().collect();
            tau_grid(&z, cfg.grid_points, cfg.trim)
                .into_iter()
                .filter_map(|tau| {
                    fit_tvecm_at_data(&data, beta, tau, cfg.trim)
                        .ok()
                        .flatten()
                        .map(|fit| (fit.log_lik, tau, beta))
                })
                .collect()
        })
        .collect();
    let candidates: Vec<(f64, f64, f64)> = per_beta.into_iter().flatten().collect();

    let (_, tau, beta) =
        select_best(&candidates).ok_or_else(|| Error::data("trim infeasible for all candidates"))?;
    fit_tvecm_at(panel, q, beta, tau, cfg.trim)?.ok_or_else(|| {
        Error::numerical("winning grid candidate failed to refit; inconsistent state")
    })
}
