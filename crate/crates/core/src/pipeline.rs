//! End-to-end analysis pipeline: unit-root prescreening, linear
//! cointegration, the threshold test, and finally the two-regime fit, with a
//! report that embeds the full effective configuration.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linctr::{engle_granger_with, select_lag, Direction, EngleGrangerResult};
use crate::regressors::build_regressors;
use crate::report::{
    fit_table_rows, fmt_coef, fmt_pvalue_pct, render_test_table, FitRow, TestRow,
};
use crate::series::{difference, Panel};
use crate::suplm::{bootstrap_pvalue_with, BootstrapScheme, TestGrid};
use crate::tvecm::{grid_search_tvecm, GridConfig, TvecmFit};
use crate::unitroot::{
    adf_test, dfgls_test, pp_test, Deterministic, InfoCriterion, LagSelection, Level,
    UnitRootResult,
};

/// Lag-order mode: criterion search up to the Schwert cap, or a fixed order.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum LagMode {
    #[default]
    Auto,
    Fixed(usize),
}

impl LagMode {
    fn selection(self) -> LagSelection {
        match self {
            LagMode::Auto => LagSelection::auto(),
            LagMode::Fixed(n) => LagSelection::Fixed(n),
        }
    }
}

impl std::fmt::Display for LagMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            LagMode::Auto => f.write_str("auto"),
            LagMode::Fixed(n) => write!(f, "{n}"),
        }
    }
}

impl std::str::FromStr for LagMode {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        if s.eq_ignore_ascii_case("auto") {
            return Ok(LagMode::Auto);
        }
        s.parse::<usize>()
            .map(LagMode::Fixed)
            .map_err(|_| format!("expected 'auto' or a non-negative integer, got '{s}'"))
    }
}

impl Serialize for LagMode {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            LagMode::Auto => s.serialize_str("auto"),
            LagMode::Fixed(n) => s.serialize_u64(*n as u64),
        }
    }
}

impl<'de> Deserialize<'de> for LagMode {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        struct V;
        impl serde::de::Visitor<'_> for V {
            type Value = LagMode;

            fn expecting(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
                f.write_str("\"auto\" or a non-negative integer")
            }

            fn visit_str<E: serde::de::Error>(self, v: &str) -> std::result::Result<LagMode, E> {
                v.parse().map_err(E::custom)
            }

            fn visit_u64<E: serde::de::Error>(self, v: u64) -> std::result::Result<LagMode, E> {
                Ok(LagMode::Fixed(v as usize))
            }
        }
        d.deserialize_any(V)
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub enum OutputFormat {
    #[default]
    #[serde(rename = "text")]
    Text,
    #[serde(rename = "json")]
    Json,
}

impl std::str::FromStr for OutputFormat {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "text" => Ok(OutputFormat::Text),
            "json" => Ok(OutputFormat::Json),
            other => Err(format!("expected 'text' or 'json', got '{other}'")),
        }
    }
}

/// Complete parameter surface of the analysis; the report embeds the
/// effective values so any run can be reproduced exactly.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", default)]
pub struct PipelineConfig {
    /// Input descriptor (path), informational only.
    pub input: Option<String>,
    pub benchmark: String,
    pub target: String,
    pub date_column: String,
    /// Deterministic terms for the level unit-root tests and the static
    /// cointegrating regression; differenced series always use a constant.
    pub deterministic: Deterministic,
    pub lags: LagMode,
    pub grid_points: usize,
    pub trim: f64,
    pub beta_radius: f64,
    pub fix_beta: bool,
    pub replications: usize,
    pub seed: u64,
    pub log_transform: bool,
    pub output_format: OutputFormat,
    pub scheme: BootstrapScheme,
    pub test_grid: TestGrid,
    pub direction: Direction,
    /// Sup-LM p-value at or below which the threshold model is fitted.
    pub fit_threshold: f64,
    pub force_fit: bool,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            input: None,
            benchmark: "benchmark".to_string(),
            target: "target".to_string(),
            date_column: "date".to_string(),
            deterministic: Deterministic::Constant,
            lags: LagMode::Auto,
            grid_points: 300,
            trim: 0.05,
            beta_radius: 6.0,
            fix_beta: false,
            replications: 5000,
            seed: 0,
            log_transform: false,
            output_format: OutputFormat::Text,
            scheme: BootstrapScheme::ParametricGaussian,
            test_grid: TestGrid::TauOnly,
            direction: Direction::TargetOnBenchmark,
            fit_threshold: 0.10,
            force_fit: false,
        }
    }
}

impl PipelineConfig {
    pub fn grid(&self) -> GridConfig {
        GridConfig {
            grid_points: self.grid_points,
            trim: self.trim,
            beta_radius: self.beta_radius,
            fix_beta: self.fix_beta,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.replications == 0 {
            return Err(Error::invalid("replications >= 1 required"));
        }
        if self.deterministic == Deterministic::None {
            return Err(Error::invalid(
                "the analysis requires a constant or constant+trend specification",
            ));
        }
        if !(self.fit_threshold >= 0.0 && self.fit_threshold <= 1.0) {
            return Err(Error::invalid(format!(
                "fit threshold must lie in [0, 1] (got {})",
                self.fit_threshold
            )));
        }
        self.grid().validate()
    }
}

/// One unit-root test outcome with its decisions spelled out.
#[derive(Clone, Debug, Serialize)]
pub struct UnitRootEntry {
    pub series: String,
    #[serde(flatten)]
    pub result: UnitRootResult,
    pub reject_1pct: bool,
    pub reject_5pct: bool,
    pub reject_10pct: bool,
}

impl UnitRootEntry {
    fn new(series: &str, result: UnitRootResult) -> Self {
        UnitRootEntry {
            series: series.to_string(),
            reject_1pct: result.rejects_at(Level::OnePct),
            reject_5pct: result.rejects_at(Level::FivePct),
            reject_10pct: result.rejects_at(Level::TenPct),
            result,
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct UnitRootStage {
    pub levels: Vec<UnitRootEntry>,
    pub differences: Vec<UnitRootEntry>,
    /// True when a majority of level tests rejects the unit root for some
    /// series; such a pair never reaches the threshold-model fit.
    pub level_stationary: bool,
    /// True when both series look integrated of order one: levels keep the
    /// unit root while differences reject it by majority.
    pub integrated_order_one: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct CointegrationStage {
    #[serde(flatten)]
    pub engle_granger: EngleGrangerResult,
    pub cointegrated_5pct: bool,
    pub cointegrated_10pct: bool,
    /// Difference-lag order used by the threshold test and fit.
    pub vecm_lags: usize,
}

#[derive(Clone, Debug, Serialize)]
pub struct ThresholdTestStage {
    pub market: String,
    pub lm: f64,
    pub pvalue: f64,
    pub tau_hat: f64,
    pub replications: usize,
    pub seed: u64,
}

#[derive(Clone, Debug, Serialize)]
pub struct FitStage {
    pub tau: f64,
    pub beta: f64,
    pub log_lik: f64,
    pub n_lower: usize,
    pub n_upper: usize,
    pub rows: Vec<FitRow>,
}

/// Full analysis report. Stages that did not run are absent.
#[derive(Clone, Debug, Serialize)]
pub struct Report {
    pub config: PipelineConfig,
    pub unit_roots: Option<UnitRootStage>,
    pub cointegration: Option<CointegrationStage>,
    pub threshold_test: Option<ThresholdTestStage>,
    pub fit: Option<FitStage>,
    /// Human-readable note on why the fit stage was or was not run.
    pub fit_gate: String,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Stage {
    UnitRoots,
    Cointegration,
    ThresholdTest,
    Fit,
}

impl std::fmt::Display for Stage {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            Stage::UnitRoots => "stage 1 (unit roots)",
            Stage::Cointegration => "stage 2 (cointegration)",
            Stage::ThresholdTest => "stage 3 (threshold test)",
            Stage::Fit => "stage 4 (threshold fit)",
        };
        f.write_str(s)
    }
}

/// A stage failure carrying the partial report built so far.
#[derive(Debug)]
pub struct PipelineError {
    pub stage: Stage,
    pub source: Error,
    pub partial: Report,
}

impl std::fmt::Display for PipelineError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{} failed: {}", self.stage, self.source)
    }
}

impl std::error::Error for PipelineError {
    fn source(&self) -> Option<&(dyn std::error::Error + 'static)> {
        Some(&self.source)
    }
}

fn unit_root_battery(panel: &Panel, cfg: &PipelineConfig) -> Result<UnitRootStage> {
    let lags = cfg.lags.selection();
    let mut levels = Vec::new();
    let mut differences = Vec::new();
    let mut any_level_stationary = false;
    let mut all_diff_stationary = true;

    for series in [&panel.benchmark, &panel.target] {
        let mut level_rejects = 0;
        for result in [
            adf_test(series, lags, cfg.deterministic)?,
            pp_test(series, cfg.deterministic)?,
            dfgls_test(series, lags, cfg.deterministic)?,
        ] {
            if result.rejects_at(Level::FivePct) {
                level_rejects += 1;
            }
            levels.push(UnitRootEntry::new(&series.label, result));
        }
        if level_rejects >= 2 {
            any_level_stationary = true;
        }

        let diff = difference(series)?;
        let mut diff_rejects = 0;
        for result in [
            adf_test(&diff, lags, Deterministic::Constant)?,
            pp_test(&diff, Deterministic::Constant)?,
            dfgls_test(&diff, lags, Deterministic::Constant)?,
        ] {
            if result.rejects_at(Level::FivePct) {
                diff_rejects += 1;
            }
            differences.push(UnitRootEntry::new(&diff.label, result));
        }
        if diff_rejects < 2 {
            all_diff_stationary = false;
        }
    }

    Ok(UnitRootStage {
        levels,
        differences,
        level_stationary: any_level_stationary,
        integrated_order_one: !any_level_stationary && all_diff_stationary,
    })
}

/// Run the full analysis. On a stage failure the error carries the report
/// assembled up to that stage.
pub fn run_pipeline(panel: &Panel, cfg: &PipelineConfig) -> std::result::Result<Report, Box<PipelineError>> {
    let mut report = Report {
        config: cfg.clone(),
        unit_roots: None,
        cointegration: None,
        threshold_test: None,
        fit: None,
        fit_gate: String::new(),
    };
    let fail = |stage: Stage, source: Error, partial: Report| {
        Box::new(PipelineError { stage, source, partial })
    };

    if let Err(e) = cfg.validate() {
        return Err(fail(Stage::UnitRoots, e, report));
    }
    let transformed;
    let panel = if cfg.log_transform {
        transformed = match panel.log_transformed() {
            Ok(p) => p,
            Err(e) => return Err(fail(Stage::UnitRoots, e, report)),
        };
        &transformed
    } else {
        panel
    };

    // Stage 1: unit-root battery.
    let unit_roots = match unit_root_battery(panel, cfg) {
        Ok(s) => s,
        Err(e) => return Err(fail(Stage::UnitRoots, e, report)),
    };
    let level_stationary = unit_roots.level_stationary;
    report.unit_roots = Some(unit_roots);

    // Stage 2: linear cointegration and lag order.
    let lags = cfg.lags.selection();
    let eg = match engle_granger_with(panel, lags, cfg.direction, cfg.deterministic) {
        Ok(r) => r,
        Err(e) => return Err(fail(Stage::Cointegration, e, report)),
    };
    let q = match cfg.lags {
        LagMode::Fixed(n) => n,
        LagMode::Auto => {
            match select_lag(panel, eg.coint.beta, None, InfoCriterion::Bic) {
                Ok(q) => q,
                Err(e) => return Err(fail(Stage::Cointegration, e, report)),
            }
        }
    };
    if let Err(e) = build_regressors(panel, q, eg.coint.beta) {
        return Err(fail(Stage::Cointegration, e, report));
    }
    let coint = eg.coint;
    report.cointegration = Some(CointegrationStage {
        cointegrated_5pct: eg.cointegrated_at(Level::FivePct),
        cointegrated_10pct: eg.cointegrated_at(Level::TenPct),
        vecm_lags: q,
        engle_granger: eg,
    });

    // Stage 3: Sup-LM threshold test with bootstrap p-value.
    let test = match bootstrap_pvalue_with(
        panel,
        q,
        &cfg.grid(),
        cfg.replications,
        cfg.seed,
        cfg.scheme,
        cfg.test_grid,
        cfg.direction,
        cfg.deterministic,
    ) {
        Ok(t) => t,
        Err(e) => return Err(fail(Stage::ThresholdTest, e, report)),
    };
    let rejected = test.p_value <= cfg.fit_threshold;
    report.threshold_test = Some(ThresholdTestStage {
        market: panel.target.label.clone(),
        lm: test.statistic,
        pvalue: test.p_value,
        tau_hat: test.tau_hat,
        replications: test.replications,
        seed: test.seed,
    });

    // Stage 4: threshold-model fit, gated on the test decision. A pair whose
    // levels look stationary never reaches this stage, forced or not.
    if level_stationary {
        report.fit_gate = "skipped: a level series is stationary, so an error-correction \
                           threshold model is not applicable"
            .to_string();
        return Ok(report);
    }
    if !rejected && !cfg.force_fit {
        report.fit_gate = format!(
            "skipped: Sup-LM p-value {} exceeds the fit threshold {}",
            fmt_pvalue_pct(test.p_value),
            fmt_pvalue_pct(cfg.fit_threshold)
        );
        return Ok(report);
    }
    report.fit_gate = if rejected {
        format!(
            "fitted: Sup-LM p-value {} at or below the fit threshold {}",
            fmt_pvalue_pct(test.p_value),
            fmt_pvalue_pct(cfg.fit_threshold)
        )
    } else {
        "fitted: forced by configuration despite a non-rejecting test".to_string()
    };

    let fit = match grid_search_tvecm(panel, q, &coint, &cfg.grid()) {
        Ok(f) => f,
        Err(e) => return Err(fail(Stage::Fit, e, report)),
    };
    report.fit = Some(FitStage {
        tau: fit.tau,
        beta: fit.beta,
        log_lik: fit.log_lik,
        n_lower: fit.n_lower,
        n_upper: fit.n_upper,
        rows: fit_table_rows(&fit, [&panel.benchmark.label, &panel.target.label]),
    });
    Ok(report)
}

/// Fit the threshold model directly (used with a prebuilt report, e.g. to
/// render tables for an already-run analysis).
pub fn refit_for_report(panel: &Panel, cfg: &PipelineConfig, q: usize, coint: &crate::linctr::CointVector) -> Result<TvecmFit> {
    grid_search_tvecm(panel, q, coint, &cfg.grid())
}

impl Report {
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }

    pub fn to_text(&self) -> String {
        let cfg = &self.config;
        let mut out = String::new();
        out.push_str("Threshold cointegration analysis\n");
        out.push_str("================================\n");
        if let Some(input) = &cfg.input {
            out.push_str(&format!("input: {input}\n"));
        }
        out.push_str(&format!(
            "benchmark: {}   target: {}   log: {}\n",
            cfg.benchmark, cfg.target, cfg.log_transform
        ));
        out.push_str(&format!(
            "lags: {}   grid points: {}   trim: {}   replications: {}   seed: {}\n",
            cfg.lags, cfg.grid_points, cfg.trim, cfg.replications, cfg.seed
        ));

        out.push_str("\nStage 1: unit-root tests\n");
        match &self.unit_roots {
            None => out.push_str("  (did not run)\n"),
            Some(stage) => {
                for (title, entries) in
                    [("levels", &stage.levels), ("first differences", &stage.differences)]
                {
                    out.push_str(&format!("  {title}:\n"));
                    for e in entries {
                        out.push_str(&format!(
                            "    {:<12} {:<7} stat {:>8}  lags {:<2} 5% cv {:>6}  {}\n",
                            e.series,
                            e.result.test.to_string(),
                            fmt_coef(e.result.statistic),
                            e.result.lags,
                            fmt_coef(e.result.critical_values.five_pct),
                            if e.reject_5pct { "reject unit root" } else { "unit root kept" }
                        ));
                    }
                }
                out.push_str(&format!(
                    "  assessment: {}\n",
                    if stage.level_stationary {
                        "level stationarity detected; error-correction modelling not applicable"
                    } else if stage.integrated_order_one {
                        "both series behave as integrated of order one"
                    } else {
                        "differences retain unit-root behaviour for some tests; interpret with care"
                    }
                ));
            }
        }

        out.push_str("\nStage 2: Engle-Granger cointegration\n");
        match &self.cointegration {
            None => out.push_str("  (did not run)\n"),
            Some(stage) => {
                let c = &stage.engle_granger.coint;
                out.push_str(&format!(
                    "  beta {}  (se {})  intercept {}\n",
                    fmt_coef(c.beta),
                    fmt_coef(c.beta_se),
                    fmt_coef(c.intercept)
                ));
                let rt = &stage.engle_granger.residual_test;
                out.push_str(&format!(
                    "  residual ADF stat {}  lags {}  5% cv {}  -> {}\n",
                    fmt_coef(rt.statistic),
                    rt.lags,
                    fmt_coef(rt.critical_values.five_pct),
                    if stage.cointegrated_5pct {
                        "cointegrated at 5%"
                    } else if stage.cointegrated_10pct {
                        "cointegrated at 10%"
                    } else {
                        "no linear cointegration detected"
                    }
                ));
                out.push_str(&format!("  lag order for difference terms: {}\n", stage.vecm_lags));
            }
        }

        out.push_str("\nStage 3: Sup-LM threshold test\n");
        match &self.threshold_test {
            None => out.push_str("  (did not run)\n"),
            Some(stage) => {
                let row = TestRow {
                    market: stage.market.clone(),
                    lm: stage.lm,
                    pvalue: stage.pvalue,
                    tau_hat: stage.tau_hat,
                    replications: stage.replications,
                    seed: stage.seed,
                };
                out.push_str(&render_test_table(std::slice::from_ref(&row)));
            }
        }

        out.push_str("\nStage 4: threshold model\n");
        if !self.fit_gate.is_empty() {
            out.push_str(&format!("  {}\n", self.fit_gate));
        }
        if let Some(fit) = &self.fit {
            out.push_str(&format!(
                "  threshold {}   slope {}   log-likelihood {}   regime sizes {}/{}\n",
                fmt_coef(fit.tau),
                fmt_coef(fit.beta),
                fmt_coef(fit.log_lik),
                fit.n_lower,
                fit.n_upper
            ));
            out.push_str(&render_fit_rows(&fit.rows));
        }
        out
    }
}

/// Render fit rows (already flattened) as the two-regime block table.
fn render_fit_rows(rows: &[FitRow]) -> String {
    let mut equations: Vec<&str> = Vec::new();
    for r in rows {
        if !equations.contains(&r.equation.as_str()) {
            equations.push(&r.equation);
        }
    }
    let variables: Vec<&str> = rows
        .iter()
        .filter(|r| r.equation == equations[0])
        .map(|r| r.variable.as_str())
        .collect();
    let cell_of = |eq: &str, var: &str, regime: usize| -> String {
        let r = rows
            .iter()
            .find(|r| r.equation == eq && r.variable == var)
            .expect("row present");
        let c = if regime == 1 { &r.regime1 } else { &r.regime2 };
        format!("{} ({})", fmt_coef(c.est), fmt_coef(c.se))
    };

    let mut out = String::new();
    for regime in [1, 2] {
        out.push_str(&format!("Estimations in Regime {regime}\n"));
        let mut body: Vec<Vec<String>> = Vec::new();
        let mut header = vec![String::new()];
        header.extend(equations.iter().map(|e| e.to_string()));
        body.push(header);
        for var in &variables {
            let mut row = vec![var.to_string()];
            for eq in &equations {
                row.push(cell_of(eq, var, regime));
            }
            body.push(row);
        }
        let ncols = body[0].len();
        let widths: Vec<usize> =
            (0..ncols).map(|c| body.iter().map(|r| r[c].len()).max().unwrap_or(0)).collect();
        for row in &body {
            let line: Vec<String> =
                row.iter().zip(&widths).map(|(cell, &w)| format!("{cell:<w$}")).collect();
            out.push_str(&format!("  {}\n", line.join("  ").trim_end()));
        }
    }
    out
}
