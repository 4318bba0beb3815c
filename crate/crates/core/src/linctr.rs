//! Linear cointegration: the Engle-Granger two-step procedure and the linear
//! (single-regime) error-correction model that serves as the null model for
//! the threshold test.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ols::multi_ols;
use crate::regressors::VecmData;
use crate::series::{Panel, Series};
use crate::unitroot::{
    adf_test, engle_granger_cv, schwert_max_lag, Deterministic, InfoCriterion, LagSelection,
    Level, UnitRootResult,
};

/// Which variable is regressed on which in the static first-step regression.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub enum Direction {
    /// Regress the target series on the benchmark (the default).
    #[default]
    #[serde(rename = "target-on-benchmark")]
    TargetOnBenchmark,
    /// Regress the benchmark series on the target.
    #[serde(rename = "benchmark-on-target")]
    BenchmarkOnTarget,
}

impl std::str::FromStr for Direction {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "target-on-benchmark" => Ok(Direction::TargetOnBenchmark),
            "benchmark-on-target" => Ok(Direction::BenchmarkOnTarget),
            other => Err(format!(
                "expected 'target-on-benchmark' or 'benchmark-on-target', got '{other}'"
            )),
        }
    }
}

/// Estimated cointegrating relation from the static regression.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct CointVector {
    pub beta: f64,
    pub intercept: f64,
    pub beta_se: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct EngleGrangerResult {
    pub coint: CointVector,
    pub direction: Direction,
    /// Deterministic terms included in the static regression.
    pub deterministic: Deterministic,
    /// ADF test on the static-regression residuals, judged against the
    /// stricter two-variable residual-based critical values.
    pub residual_test: UnitRootResult,
}

impl EngleGrangerResult {
    pub fn cointegrated_at(&self, level: Level) -> bool {
        self.residual_test.rejects_at(level)
    }
}

/// Engle-Granger test with an intercept-only static regression of the target
/// on the benchmark and automatic residual-test lag choice.
pub fn engle_granger(panel: &Panel, lags: LagSelection) -> Result<EngleGrangerResult> {
    engle_granger_with(panel, lags, Direction::default(), Deterministic::Constant)
}

/// First-step static regression alone: the cointegrating slope, intercept
/// and slope standard error, without the residual unit-root test.
pub fn static_regression(
    panel: &Panel,
    direction: Direction,
    det: Deterministic,
) -> Result<CointVector> {
    static_fit(panel, direction, det).map(|(coint, _)| coint)
}

pub(crate) fn static_fit(
    panel: &Panel,
    direction: Direction,
    det: Deterministic,
) -> Result<(CointVector, Vec<f64>)> {
    if det == Deterministic::None {
        return Err(Error::invalid("the static regression always includes a constant"));
    }
    let (lhs, rhs) = match direction {
        Direction::TargetOnBenchmark => (&panel.target, &panel.benchmark),
        Direction::BenchmarkOnTarget => (&panel.benchmark, &panel.target),
    };
    let n = panel.len();
    let k = det.ncols_static() + 1;
    let mut x = DMatrix::<f64>::zeros(n, k);
    let mut y = DMatrix::<f64>::zeros(n, 1);
    for t in 0..n {
        x[(t, 0)] = 1.0;
        let mut c = 1;
        if k == 3 {
            x[(t, 1)] = (t + 1) as f64;
            c = 2;
        }
        x[(t, c)] = rhs.values[t];
        y[(t, 0)] = lhs.values[t];
    }
    let fit = multi_ols(&x, &y, None)?;
    let slope_col = k - 1;
    let ssr: f64 = fit.residuals.column(0).iter().map(|e| e * e).sum();
    let mean = y.column(0).sum() / n as f64;
    let tss: f64 = y.column(0).iter().map(|v| (v - mean) * (v - mean)).sum();
    if ssr <= tss * 1e-24 + f64::MIN_POSITIVE {
        return Err(Error::data(
            "static regression fits exactly; residual-based test degenerate",
        ));
    }
    let s2 = ssr / (n - k) as f64;
    let beta_se = (s2 * fit.xtx_inv[(slope_col, slope_col)]).sqrt();
    let coint = CointVector {
        beta: fit.coef[(slope_col, 0)],
        intercept: fit.coef[(0, 0)],
        beta_se,
    };
    Ok((coint, fit.residuals.column(0).iter().copied().collect()))
}

/// Engle-Granger test with explicit direction and deterministic terms.
pub fn engle_granger_with(
    panel: &Panel,
    lags: LagSelection,
    direction: Direction,
    det: Deterministic,
) -> Result<EngleGrangerResult> {
    let (coint, residuals) = static_fit(panel, direction, det)?;
    let resid = Series::new("residuals", residuals)?;
    let mut residual_test = adf_test(&resid, lags, Deterministic::None).map_err(|e| match e {
        Error::Data(msg) => Error::data(format!("static-regression residuals degenerate: {msg}")),
        other => other,
    })?;
    let rows = resid.len() - 1 - residual_test.lags;
    residual_test.critical_values = engle_granger_cv(det, rows);

    Ok(EngleGrangerResult { coint, direction, deterministic: det, residual_test })
}

impl Deterministic {
    fn ncols_static(self) -> usize {
        match self {
            Deterministic::ConstantTrend => 2,
            _ => 1,
        }
    }
}

/// Single-regime error-correction fit with Gaussian log-likelihood.
#[derive(Clone, Debug)]
pub struct LinearVecmFit {
    /// Coefficients, one column per equation, rows ordered as the regressor
    /// labels (constant, error-correction term, lagged differences).
    pub coef: DMatrix<f64>,
    pub residuals: DMatrix<f64>,
    /// Residual covariance E'E / T.
    pub sigma: DMatrix<f64>,
    pub log_lik: f64,
    pub labels: Vec<String>,
    pub q: usize,
}

/// Log of det(E'E / n) for a bivariate residual matrix, plus the concentrated
/// Gaussian log-likelihood it implies.
pub(crate) fn gaussian_loglik(residuals: &DMatrix<f64>) -> Result<(DMatrix<f64>, f64, f64)> {
    let n = residuals.nrows() as f64;
    let sigma = residuals.transpose() * residuals / n;
    let det = sigma[(0, 0)] * sigma[(1, 1)] - sigma[(0, 1)] * sigma[(1, 0)];
    if !det.is_finite() || det <= 0.0 {
        return Err(Error::numerical(format!(
            "residual covariance is singular (det = {det:e})"
        )));
    }
    let log_det = det.ln();
    let log_lik = -(n / 2.0) * (2.0 * (2.0 * std::f64::consts::PI).ln() + log_det + 2.0);
    Ok((sigma, log_det, log_lik))
}

/// Fit the linear error-correction model by equation-wise least squares.
pub fn fit_linear_vecm(data: &VecmData) -> Result<LinearVecmFit> {
    let fit = multi_ols(&data.regressors.x, &data.responses, Some(&data.regressors.labels))?;
    let (sigma, _, log_lik) = gaussian_loglik(&fit.residuals)?;
    Ok(LinearVecmFit {
        coef: fit.coef,
        residuals: fit.residuals,
        sigma,
        log_lik,
        labels: data.regressors.labels.clone(),
        q: data.regressors.q,
    })
}

/// Largest lag order that keeps the aligned comparison sample workable.
pub(crate) fn clamp_vecm_lag_cap(t: usize, cap: usize) -> usize {
    let mut q = cap;
    loop {
        // Rows at the cap are t - 1 - q; each equation has 2 + 2q regressors.
        let n = t.saturating_sub(1 + q);
        if n >= 2 + 2 * q + 6 || q == 0 {
            return q;
        }
        q -= 1;
    }
}

/// Choose the difference-lag order of the error-correction model by
/// information criterion. Candidates share the rows of the largest order so
/// their likelihoods are comparable; ties go to the smaller order.
pub fn select_lag(
    panel: &Panel,
    beta: f64,
    q_max: Option<usize>,
    criterion: InfoCriterion,
) -> Result<usize> {
    let t = panel.len();
    let cap = match q_max {
        Some(q) => q,
        None => clamp_vecm_lag_cap(t, schwert_max_lag(t.saturating_sub(1))?),
    };
    let data = crate::regressors::build_regressors(panel, cap, beta)?;
    let n = data.t_eff();
    let nf = n as f64;

    let mut best: Option<(f64, usize)> = None;
    for q in 0..=cap {
        let k = 2 + 2 * q;
        let x = data.regressors.x.columns(0, k).into_owned();
        let fit = match multi_ols(&x, &data.responses, None) {
            Ok(f) => f,
            Err(_) => continue,
        };
        let (_, log_det, _) = match gaussian_loglik(&fit.residuals) {
            Ok(v) => v,
            Err(_) => continue,
        };
        let k_total = (2 * k) as f64;
        let ic = match criterion {
            InfoCriterion::Bic => log_det + k_total * nf.ln() / nf,
            InfoCriterion::Aic => log_det + 2.0 * k_total / nf,
        };
        if best.is_none_or(|(b, _)| ic < b) {
            best = Some((ic, q));
        }
    }
    best.map(|(_, q)| q)
        .ok_or_else(|| Error::numerical("no feasible lag order for the error-correction model"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ols::test_oracles::{gauss_jordan_inverse, normal_equation_ols};
    use crate::regressors::build_regressors;
    use crate::simulate::DgpSpec;
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::StandardNormal;

    fn monthly_panel(b: Vec<f64>, g: Vec<f64>) -> Panel {
        let stamps = (0..b.len())
            .map(|i| crate::series::Timestamp::month(1990, 1).unwrap().plus_months(i))
            .collect();
        Panel::new(stamps, Series::new("benchmark", b).unwrap(), Series::new("target", g).unwrap())
            .unwrap()
    }

    fn cointegrated_panel(seed: u64, t: usize, slope: f64) -> Panel {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut w = vec![0.0_f64];
        for _ in 1..t {
            let e: f64 = rng.sample(StandardNormal);
            w.push(w.last().unwrap() + e);
        }
        let g: Vec<f64> = w
            .iter()
            .map(|wi| slope * wi + 0.5 * rng.sample::<f64, _>(StandardNormal))
            .collect();
        monthly_panel(w, g)
    }

    fn independent_walks(seed: u64, t: usize) -> Panel {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut b = vec![0.0_f64];
        let mut g = vec![0.0_f64];
        for _ in 1..t {
            b.push(b.last().unwrap() + rng.sample::<f64, _>(StandardNormal));
            g.push(g.last().unwrap() + rng.sample::<f64, _>(StandardNormal));
        }
        monthly_panel(b, g)
    }

    #[test]
    fn static_regression_matches_normal_equation_oracle() {
        let panel = cointegrated_panel(11, 150, 2.0);
        let res = engle_granger(&panel, LagSelection::auto()).unwrap();

        let n = panel.len();
        let mut x = DMatrix::<f64>::zeros(n, 2);
        let mut y = DMatrix::<f64>::zeros(n, 1);
        for t in 0..n {
            x[(t, 0)] = 1.0;
            x[(t, 1)] = panel.benchmark.values[t];
            y[(t, 0)] = panel.target.values[t];
        }
        let coef = normal_equation_ols(&x, &y);
        assert!((res.coint.beta - coef[(1, 0)]).abs() < 1e-10);
        assert!((res.coint.intercept - coef[(0, 0)]).abs() < 1e-10);

        let resid = &y - &x * &coef;
        let ssr: f64 = resid.column(0).iter().map(|e| e * e).sum();
        let xtx_inv = gauss_jordan_inverse(&(x.transpose() * &x));
        let se = (ssr / (n - 2) as f64 * xtx_inv[(1, 1)]).sqrt();
        assert!((res.coint.beta_se - se).abs() < 1e-10);
    }

    #[test]
    fn recovers_slope_and_detects_cointegration() {
        let mut rejected = 0;
        let mut reps = 0;
        for seed in 100..140 {
            let panel = cointegrated_panel(seed, 400, 2.0);
            let res = engle_granger(&panel, LagSelection::auto()).unwrap();
            assert!((res.coint.beta - 2.0).abs() < 6.0 / (400.0_f64).sqrt(), "beta {}", res.coint.beta);
            reps += 1;
            if res.cointegrated_at(Level::FivePct) {
                rejected += 1;
            }
        }
        assert!(rejected as f64 >= 0.9 * reps as f64, "{rejected}/{reps}");
    }

    #[test]
    fn independent_walks_rarely_flagged() {
        let mut rejected = 0;
        for seed in 200..240 {
            let panel = independent_walks(seed, 400);
            let res = engle_granger(&panel, LagSelection::auto()).unwrap();
            if res.cointegrated_at(Level::FivePct) {
                rejected += 1;
            }
        }
        assert!(rejected <= 8, "{rejected}/40 spurious rejections");
    }

    #[test]
    fn identical_series_is_a_degenerate_error() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let mut w = vec![0.0_f64];
        for _ in 1..80 {
            w.push(w.last().unwrap() + rng.sample::<f64, _>(StandardNormal));
        }
        let panel = monthly_panel(w.clone(), w);
        let err = engle_granger(&panel, LagSelection::auto()).unwrap_err().to_string();
        assert!(err.contains("degenerate"), "{err}");
    }

    #[test]
    fn direction_flips_the_regression() {
        let panel = cointegrated_panel(13, 200, 2.0);
        let fwd = engle_granger(&panel, LagSelection::auto()).unwrap();
        let rev = engle_granger_with(
            &panel,
            LagSelection::auto(),
            Direction::BenchmarkOnTarget,
            Deterministic::Constant,
        )
        .unwrap();
        assert!((fwd.coint.beta - 2.0).abs() < 0.3);
        assert!((rev.coint.beta - 0.5).abs() < 0.2);
    }

    #[test]
    fn residual_test_uses_the_stricter_two_variable_quantiles() {
        let panel = cointegrated_panel(17, 200, 1.0);
        let res = engle_granger(&panel, LagSelection::Fixed(0)).unwrap();
        let rows = panel.len() - 1;
        let expected = engle_granger_cv(Deterministic::Constant, rows);
        assert_eq!(res.residual_test.critical_values, expected);
    }

    fn linear_spec(seed: u64, t: usize) -> DgpSpec {
        let a = vec![[0.0, 0.0], [0.0, 0.25], [0.1, 0.0], [0.0, 0.1]];
        DgpSpec {
            beta: 1.0,
            tau: 0.0,
            a1: a.clone(),
            a2: a,
            noise_cov: [[1.0, 0.3], [0.3, 1.0]],
            t,
            burn_in: 200,
            seed,
        }
    }

    #[test]
    fn linear_fit_residuals_are_orthogonal_and_loglik_matches_formula() {
        let panel = crate::simulate::simulate_tvecm(&linear_spec(21, 300)).unwrap();
        let data = build_regressors(&panel, 1, 1.0).unwrap();
        let fit = fit_linear_vecm(&data).unwrap();

        let xte = data.regressors.x.transpose() * &fit.residuals;
        assert!(xte.iter().all(|v| v.abs() < 1e-8), "max {:?}", xte.amax());

        let n = data.t_eff() as f64;
        let det = fit.sigma[(0, 0)] * fit.sigma[(1, 1)] - fit.sigma[(0, 1)] * fit.sigma[(1, 0)];
        let manual = -(n / 2.0) * (2.0 * (2.0 * std::f64::consts::PI).ln() + det.ln() + 2.0);
        assert!((fit.log_lik - manual).abs() < 1e-8);
    }

    #[test]
    fn linear_fit_recovers_generating_coefficients_on_average() {
        let truth = linear_spec(0, 600);
        let (a_true, _) = truth.coefficient_matrices();
        let mut mean_err: f64 = 0.0;
        let reps = 30;
        for seed in 0..reps {
            let panel = crate::simulate::simulate_tvecm(&linear_spec(1000 + seed, 600)).unwrap();
            let data = build_regressors(&panel, 1, 1.0).unwrap();
            let fit = fit_linear_vecm(&data).unwrap();
            mean_err += (fit.coef.clone() - &a_true).amax();
        }
        mean_err /= reps as f64;
        assert!(mean_err < 0.12, "mean max-abs coefficient error {mean_err}");
    }

    #[test]
    fn lag_selection_finds_the_generating_order() {
        // Strong first-lag dynamics: the criterion should pick q = 1.
        let spec = DgpSpec {
            beta: 1.0,
            tau: 0.0,
            a1: vec![[0.0, 0.0], [0.0, 0.3], [0.4, 0.1], [0.1, 0.4]],
            a2: vec![[0.0, 0.0], [0.0, 0.3], [0.4, 0.1], [0.1, 0.4]],
            noise_cov: [[1.0, 0.2], [0.2, 1.0]],
            t: 500,
            burn_in: 200,
            seed: 31,
        };
        let panel = crate::simulate::simulate_tvecm(&spec).unwrap();
        let q = select_lag(&panel, 1.0, Some(4), InfoCriterion::Bic).unwrap();
        assert_eq!(q, 1);

        // No lagged dynamics at all: expect q = 0.
        let flat = DgpSpec {
            a1: vec![[0.0, 0.0], [0.0, 0.3]],
            a2: vec![[0.0, 0.0], [0.0, 0.3]],
            ..spec
        };
        let panel0 = crate::simulate::simulate_tvecm(&flat).unwrap();
        let q0 = select_lag(&panel0, 1.0, Some(4), InfoCriterion::Bic).unwrap();
        assert_eq!(q0, 0);
    }

    #[test]
    fn likelihood_never_falls_as_lags_are_added_on_a_common_sample() {
        let panel = crate::simulate::simulate_tvecm(&linear_spec(41, 260)).unwrap();
        let cap = 3;
        let data = build_regressors(&panel, cap, 1.0).unwrap();
        let mut last = f64::NEG_INFINITY;
        for q in 0..=cap {
            let x = data.regressors.x.columns(0, 2 + 2 * q).into_owned();
            let fit = multi_ols(&x, &data.responses, None).unwrap();
            let (_, _, ll) = gaussian_loglik(&fit.residuals).unwrap();
            assert!(ll >= last - 1e-9, "q = {q}: {ll} < {last}");
            last = ll;
        }
    }

    #[test]
    fn auto_cap_is_clamped_for_short_panels() {
        let panel = cointegrated_panel(61, 40, 1.0);
        // Must not error out: the Schwert cap exceeds what 40 rows support.
        let q = select_lag(&panel, 1.0, None, InfoCriterion::Bic).unwrap();
        assert!(q <= clamp_vecm_lag_cap(40, schwert_max_lag(39).unwrap()));
    }
}
