//! Unit-root tests: augmented Dickey-Fuller, Phillips-Perron, and the
//! GLS-detrended Dickey-Fuller of Elliott, Rothenberg and Stock.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ols::multi_ols;
use crate::series::Series;

/// Deterministic terms included in a test regression.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub enum Deterministic {
    #[serde(rename = "none")]
    None,
    #[default]
    #[serde(rename = "constant")]
    Constant,
    #[serde(rename = "constant+trend")]
    ConstantTrend,
}

impl Deterministic {
    fn ncols(self) -> usize {
        match self {
            Deterministic::None => 0,
            Deterministic::Constant => 1,
            Deterministic::ConstantTrend => 2,
        }
    }
}

impl std::fmt::Display for Deterministic {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            Deterministic::None => "none",
            Deterministic::Constant => "constant",
            Deterministic::ConstantTrend => "constant+trend",
        };
        f.write_str(s)
    }
}

/// Lag-order rule for augmented regressions.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum LagSelection {
    /// Information-criterion search from 0 up to the Schwert cap.
    Auto(InfoCriterion),
    Fixed(usize),
}

impl LagSelection {
    pub fn auto() -> Self {
        LagSelection::Auto(InfoCriterion::Bic)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum InfoCriterion {
    Bic,
    Aic,
}

/// Significance levels with embedded critical values.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Level {
    OnePct,
    FivePct,
    TenPct,
}

impl Level {
    pub const ALL: [Level; 3] = [Level::OnePct, Level::FivePct, Level::TenPct];

    pub fn as_str(self) -> &'static str {
        match self {
            Level::OnePct => "1%",
            Level::FivePct => "5%",
            Level::TenPct => "10%",
        }
    }
}

/// Left-tail critical values; always ordered cv(1%) < cv(5%) < cv(10%).
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct CriticalValues {
    pub one_pct: f64,
    pub five_pct: f64,
    pub ten_pct: f64,
}

impl CriticalValues {
    fn new(one_pct: f64, five_pct: f64, ten_pct: f64) -> Self {
        debug_assert!(one_pct < five_pct && five_pct < ten_pct);
        CriticalValues { one_pct, five_pct, ten_pct }
    }

    pub fn at(&self, level: Level) -> f64 {
        match level {
            Level::OnePct => self.one_pct,
            Level::FivePct => self.five_pct,
            Level::TenPct => self.ten_pct,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum UnitRootTest {
    #[serde(rename = "ADF")]
    Adf,
    #[serde(rename = "PP")]
    PhillipsPerron,
    #[serde(rename = "DF-GLS")]
    DfGls,
}

impl std::fmt::Display for UnitRootTest {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            UnitRootTest::Adf => "ADF",
            UnitRootTest::PhillipsPerron => "PP",
            UnitRootTest::DfGls => "DF-GLS",
        };
        f.write_str(s)
    }
}

/// Outcome of a unit-root test. The null is a unit root; it is rejected at a
/// level exactly when the statistic falls below that level's critical value.
#[derive(Clone, Debug, Serialize)]
pub struct UnitRootResult {
    pub test: UnitRootTest,
    pub statistic: f64,
    /// Augmentation lags used; for Phillips-Perron this records the Bartlett
    /// bandwidth instead.
    pub lags: usize,
    pub deterministic: Deterministic,
    pub critical_values: CriticalValues,
}

impl UnitRootResult {
    pub fn rejects_at(&self, level: Level) -> bool {
        self.statistic < self.critical_values.at(level)
    }
}

/// Schwert's lag cap floor(12 (T/100)^(1/4)); requires T >= 16.
pub fn schwert_max_lag(t: usize) -> Result<usize> {
    if t < 16 {
        return Err(Error::invalid(format!(
            "sample of length {t} too short for the Schwert lag rule (need >= 16)"
        )));
    }
    Ok((12.0 * (t as f64 / 100.0).powf(0.25)).floor() as usize)
}

/// Bartlett kernel long-run variance with `bandwidth` lags:
/// gamma_0 + 2 sum_j (1 - j/(l+1)) gamma_j.
pub fn newey_west_lrv(u: &[f64], bandwidth: usize) -> Result<f64> {
    let n = u.len();
    if n == 0 {
        return Err(Error::invalid("empty residual vector"));
    }
    let nf = n as f64;
    let mut lrv = u.iter().map(|v| v * v).sum::<f64>() / nf;
    for j in 1..=bandwidth.min(n - 1) {
        let gamma = (j..n).map(|t| u[t] * u[t - j]).sum::<f64>() / nf;
        let w = 1.0 - j as f64 / (bandwidth as f64 + 1.0);
        lrv += 2.0 * w * gamma;
    }
    Ok(lrv)
}

/// Default Phillips-Perron bandwidth floor(4 (T/100)^(2/9)).
pub fn default_pp_bandwidth(t: usize) -> usize {
    (4.0 * (t as f64 / 100.0).powf(2.0 / 9.0)).floor() as usize
}

fn check_non_constant(series: &Series) -> Result<()> {
    let v = &series.values;
    if v.iter().all(|x| *x == v[0]) {
        return Err(Error::data(format!(
            "zero-variance input: series '{}' is constant",
            series.label
        )));
    }
    Ok(())
}

/// Dickey-Fuller style regression of dy_t on deterministics, y_{t-1} and p
/// lagged differences, over response times t = start..T-1 (start >= p + 1).
/// Returns (t-ratio on the level, rows, ssr, regressor count).
fn df_regression(values: &[f64], p: usize, start: usize, det: Deterministic) -> Result<(f64, usize, f64, usize)> {
    let t_len = values.len();
    assert!(start > p);
    let n = t_len - start;
    let k = det.ncols() + 1 + p;
    if n < k + 2 {
        return Err(Error::invalid(format!(
            "unit-root regression needs more observations: {n} rows for {k} regressors"
        )));
    }
    let mut x = DMatrix::<f64>::zeros(n, k);
    let mut y = DMatrix::<f64>::zeros(n, 1);
    for i in 0..n {
        let tt = start + i;
        let mut c = 0;
        if det.ncols() >= 1 {
            x[(i, 0)] = 1.0;
            c += 1;
        }
        if det.ncols() == 2 {
            x[(i, 1)] = (i + 1) as f64;
            c += 1;
        }
        x[(i, c)] = values[tt - 1];
        for j in 1..=p {
            x[(i, c + j)] = values[tt - j] - values[tt - j - 1];
        }
        y[(i, 0)] = values[tt] - values[tt - 1];
    }

    let fit = multi_ols(&x, &y, None)?;
    let ssr: f64 = fit.residuals.column(0).iter().map(|e| e * e).sum();
    let level_col = det.ncols();
    let s2 = ssr / (n - k) as f64;
    let var = s2 * fit.xtx_inv[(level_col, level_col)];
    if !var.is_finite() || var <= 0.0 {
        return Err(Error::numerical("degenerate unit-root regression variance"));
    }
    let stat = fit.coef[(level_col, 0)] / var.sqrt();
    Ok((stat, n, ssr, k))
}

/// Feasible lag cap for a series of length `t`.
fn clamp_lag_cap(t: usize, det: Deterministic, cap: usize) -> usize {
    // Keep at least 4 residual degrees of freedom at the largest candidate.
    let mut p = cap;
    loop {
        let n = t.saturating_sub(p + 1);
        let k = det.ncols() + 1 + p;
        if n >= k + 4 || p == 0 {
            return p;
        }
        p -= 1;
    }
}

/// Information-criterion lag choice over a common sample aligned at the
/// largest candidate, so likelihoods are comparable. Ties go to fewer lags.
fn choose_lag(values: &[f64], det: Deterministic, pmax: usize, criterion: InfoCriterion) -> Result<usize> {
    let start = pmax + 1;
    let mut best: Option<(f64, usize)> = None;
    for p in 0..=pmax {
        let (_, n, ssr, k) = match df_regression(values, p, start, det) {
            Ok(r) => r,
            Err(_) => continue,
        };
        if ssr <= 0.0 {
            continue;
        }
        let nf = n as f64;
        let penalty = match criterion {
            InfoCriterion::Bic => k as f64 * nf.ln(),
            InfoCriterion::Aic => 2.0 * k as f64,
        };
        let ic = nf * (ssr / nf).ln() + penalty;
        if best.is_none_or(|(b, _)| ic < b) {
            best = Some((ic, p));
        }
    }
    best.map(|(_, p)| p)
        .ok_or_else(|| Error::numerical("no feasible lag order in information-criterion search"))
}

fn resolve_lags(values: &[f64], det: Deterministic, lags: LagSelection) -> Result<usize> {
    let t = values.len();
    match lags {
        LagSelection::Fixed(p) => {
            if t < p + 10 {
                return Err(Error::invalid(format!(
                    "series of length {t} too short for {p} lags (need >= lags + 10)"
                )));
            }
            Ok(p)
        }
        LagSelection::Auto(criterion) => {
            let cap = clamp_lag_cap(t, det, schwert_max_lag(t)?);
            choose_lag(values, det, cap, criterion)
        }
    }
}

/// Augmented Dickey-Fuller t-test.
pub fn adf_test(series: &Series, lags: LagSelection, det: Deterministic) -> Result<UnitRootResult> {
    check_non_constant(series)?;
    let p = resolve_lags(&series.values, det, lags)?;
    let (stat, n, _, _) = df_regression(&series.values, p, p + 1, det)?;
    Ok(UnitRootResult {
        test: UnitRootTest::Adf,
        statistic: stat,
        lags: p,
        deterministic: det,
        critical_values: dickey_fuller_cv(det, n),
    })
}

/// Phillips-Perron Z_t test with the default Bartlett bandwidth.
pub fn pp_test(series: &Series, det: Deterministic) -> Result<UnitRootResult> {
    pp_test_with_bandwidth(series, det, default_pp_bandwidth(series.len()))
}

/// Phillips-Perron Z_t with an explicit bandwidth. At bandwidth 0 the
/// statistic reduces to the lag-0 Dickey-Fuller t-ratio.
pub fn pp_test_with_bandwidth(series: &Series, det: Deterministic, bandwidth: usize) -> Result<UnitRootResult> {
    check_non_constant(series)?;
    let values = &series.values;
    let t_len = values.len();
    if t_len < 20 {
        return Err(Error::invalid(format!(
            "series of length {t_len} too short for Phillips-Perron (need >= 20)"
        )));
    }

    let n = t_len - 1;
    let k = det.ncols() + 1;
    let mut x = DMatrix::<f64>::zeros(n, k);
    let mut y = DMatrix::<f64>::zeros(n, 1);
    for i in 0..n {
        let tt = 1 + i;
        let mut c = 0;
        if det.ncols() >= 1 {
            x[(i, 0)] = 1.0;
            c += 1;
        }
        if det.ncols() == 2 {
            x[(i, 1)] = (i + 1) as f64;
            c += 1;
        }
        x[(i, c)] = values[tt - 1];
        y[(i, 0)] = values[tt] - values[tt - 1];
    }
    let fit = multi_ols(&x, &y, None)?;
    let u: Vec<f64> = fit.residuals.column(0).iter().copied().collect();
    let ssr: f64 = u.iter().map(|e| e * e).sum();
    let response_scale = y.column(0).iter().map(|v| v * v).sum::<f64>() / n as f64;
    let gamma0 = ssr / n as f64;
    if gamma0 <= response_scale * 1e-24 + f64::MIN_POSITIVE {
        return Err(Error::numerical(
            "residual variance is zero; Phillips-Perron correction undefined",
        ));
    }

    let lrv = newey_west_lrv(&u, bandwidth)?;
    if !lrv.is_finite() || lrv <= 0.0 {
        return Err(Error::numerical("non-positive long-run variance estimate"));
    }

    let level_col = det.ncols();
    let s2 = ssr / (n - k) as f64;
    let se = (s2 * fit.xtx_inv[(level_col, level_col)]).sqrt();
    let tstat = fit.coef[(level_col, 0)] / se;
    let stat = (gamma0 / lrv).sqrt() * tstat - (lrv - gamma0) / (2.0 * lrv.sqrt()) * (n as f64 * se / s2.sqrt());

    Ok(UnitRootResult {
        test: UnitRootTest::PhillipsPerron,
        statistic: stat,
        lags: bandwidth,
        deterministic: det,
        critical_values: dickey_fuller_cv(det, n),
    })
}

/// Quasi-difference transform: first element kept, then y_t - alpha y_{t-1}.
pub fn quasi_difference(values: &[f64], alpha: f64) -> Vec<f64> {
    let mut out = Vec::with_capacity(values.len());
    if let Some(first) = values.first() {
        out.push(*first);
    }
    for t in 1..values.len() {
        out.push(values[t] - alpha * values[t - 1]);
    }
    out
}

/// Default local-to-unity constants: -7 with a constant, -13.5 with a trend.
pub fn default_cbar(det: Deterministic) -> f64 {
    match det {
        Deterministic::ConstantTrend => -13.5,
        _ => -7.0,
    }
}

/// GLS-detrended Dickey-Fuller test (DF-GLS) with the standard cbar.
pub fn dfgls_test(series: &Series, lags: LagSelection, det: Deterministic) -> Result<UnitRootResult> {
    dfgls_test_with_cbar(series, lags, det, default_cbar(det))
}

/// DF-GLS with an explicit cbar. cbar = 0 disables detrending entirely, so
/// the statistic coincides with the no-deterministics ADF on the raw series.
pub fn dfgls_test_with_cbar(
    series: &Series,
    lags: LagSelection,
    det: Deterministic,
    cbar: f64,
) -> Result<UnitRootResult> {
    if det == Deterministic::None {
        return Err(Error::invalid(
            "DF-GLS requires a constant or constant+trend specification",
        ));
    }
    check_non_constant(series)?;
    let values = &series.values;
    let t_len = values.len();

    let detrended: Vec<f64> = if cbar == 0.0 {
        values.clone()
    } else {
        let alpha = 1.0 + cbar / t_len as f64;
        let yq = quasi_difference(values, alpha);
        let zcols = det.ncols();
        let mut z = DMatrix::<f64>::zeros(t_len, zcols);
        for t in 0..t_len {
            z[(t, 0)] = if t == 0 { 1.0 } else { 1.0 - alpha };
            if zcols == 2 {
                let trend = (t + 1) as f64;
                z[(t, 1)] = if t == 0 { trend } else { trend - alpha * t as f64 };
            }
        }
        let yq_m = DMatrix::<f64>::from_fn(t_len, 1, |i, _| yq[i]);
        let delta = multi_ols(&z, &yq_m, None)?.coef;
        (0..t_len)
            .map(|t| {
                let mut fitted = delta[(0, 0)];
                if zcols == 2 {
                    fitted += delta[(1, 0)] * (t + 1) as f64;
                }
                values[t] - fitted
            })
            .collect()
    };

    let dseries = Series::new(format!("gls({})", series.label), detrended)?;
    check_non_constant(&dseries)?;
    let p = resolve_lags(&dseries.values, Deterministic::None, lags)?;
    let (stat, n, _, _) = df_regression(&dseries.values, p, p + 1, Deterministic::None)?;

    let critical_values = match det {
        Deterministic::Constant => dickey_fuller_cv(Deterministic::None, n),
        _ => dfgls_trend_cv(t_len),
    };
    Ok(UnitRootResult {
        test: UnitRootTest::DfGls,
        statistic: stat,
        lags: p,
        deterministic: det,
        critical_values,
    })
}

// --- critical value tables -------------------------------------------------
//
// Dickey-Fuller family quantiles as response surfaces cv(T) = b0 + b1 / T
// (MacKinnon-style), per deterministic case. The two-variable residual-based
// cointegration case gets its own surfaces below.

const DF_NONE: [[f64; 2]; 3] = [[-2.5658, -1.960], [-1.9393, -0.398], [-1.6156, -0.181]];
const DF_CONST: [[f64; 2]; 3] = [[-3.4336, -5.999], [-2.8621, -2.738], [-2.5671, -1.438]];
const DF_TREND: [[f64; 2]; 3] = [[-3.9638, -8.353], [-3.4126, -4.039], [-3.1279, -2.418]];

const EG2_CONST: [[f64; 2]; 3] = [[-3.9001, -10.534], [-3.3377, -5.967], [-3.0462, -4.069]];
const EG2_TREND: [[f64; 2]; 3] = [[-4.3266, -15.531], [-3.7809, -9.421], [-3.4959, -7.203]];

fn surface_cv(table: &[[f64; 2]; 3], t: usize) -> CriticalValues {
    let inv_t = 1.0 / t as f64;
    let v = |row: [f64; 2]| row[0] + row[1] * inv_t;
    CriticalValues::new(v(table[0]), v(table[1]), v(table[2]))
}

pub(crate) fn dickey_fuller_cv(det: Deterministic, t: usize) -> CriticalValues {
    match det {
        Deterministic::None => surface_cv(&DF_NONE, t),
        Deterministic::Constant => surface_cv(&DF_CONST, t),
        Deterministic::ConstantTrend => surface_cv(&DF_TREND, t),
    }
}

/// Critical values for the residual-based two-variable cointegration test.
pub(crate) fn engle_granger_cv(det: Deterministic, t: usize) -> CriticalValues {
    match det {
        Deterministic::ConstantTrend => surface_cv(&EG2_TREND, t),
        _ => surface_cv(&EG2_CONST, t),
    }
}

// GLS-detrended-with-trend quantiles tabulated by sample size (Elliott,
// Rothenberg and Stock, 1996, Table 1), interpolated linearly in 1/T.
const DFGLS_TREND_KNOTS: [(f64, [f64; 3]); 4] = [
    (1.0 / 50.0, [-3.77, -3.19, -2.89]),
    (1.0 / 100.0, [-3.58, -3.03, -2.74]),
    (1.0 / 200.0, [-3.46, -2.93, -2.64]),
    (0.0, [-3.48, -2.89, -2.57]),
];

fn dfgls_trend_cv(t: usize) -> CriticalValues {
    let x = 1.0 / t as f64;
    let knots = &DFGLS_TREND_KNOTS;
    let pick = |vals: [f64; 3]| CriticalValues::new(vals[0], vals[1], vals[2]);
    if x >= knots[0].0 {
        return pick(knots[0].1);
    }
    for w in knots.windows(2) {
        let (x_hi, v_hi) = w[0];
        let (x_lo, v_lo) = w[1];
        if x <= x_hi && x >= x_lo {
            let f = (x - x_lo) / (x_hi - x_lo);
            let mut v = [0.0; 3];
            for i in 0..3 {
                v[i] = v_lo[i] + f * (v_hi[i] - v_lo[i]);
            }
            return pick(v);
        }
    }
    pick(knots[3].1)
}
