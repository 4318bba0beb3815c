//! Estimation and testing toolkit for two-regime threshold error-correction
//! models of bivariate price systems.
//!
//! The crate covers the full workflow: unit-root prescreening (ADF,
//! Phillips-Perron, DF-GLS), Engle-Granger cointegration, threshold VECM
//! estimation by concentrated-likelihood grid search, and a sup-LM threshold
//! test with parametric bootstrap p-values.

pub mod error;
pub mod linctr;
pub mod ols;
pub mod pipeline;
pub mod regressors;
pub mod report;
pub mod series;
pub mod simulate;
pub mod suplm;
pub mod tvecm;
pub mod unitroot;

pub use error::{Error, Result};
pub use linctr::{
    engle_granger, engle_granger_with, fit_linear_vecm, select_lag, CointVector, Direction,
    EngleGrangerResult, LinearVecmFit,
};
pub use pipeline::{
    run_pipeline, CointegrationStage, FitStage, LagMode, OutputFormat, PipelineConfig,
    PipelineError, Report, Stage, ThresholdTestStage, UnitRootEntry, UnitRootStage,
};
pub use regressors::{build_regressors, RegressorMatrix, VecmData};
pub use report::{
    fit_table_rows, fmt_coef, fmt_pvalue_pct, render_fit_table, render_test_table, FitCell,
    FitRow, TestRow,
};
pub use series::{difference, load_panel, load_panel_with_date, Panel, Series, Timestamp};
pub use simulate::{simulate_tvecm, DgpSpec};
pub use suplm::{
    bootstrap_pvalue, lm_statistic_at, suplm_statistic, suplm_statistic_joint, BootstrapScheme,
    SupLm, SupLmResult, TestGrid,
};
pub use tvecm::{
    classify_regimes, fit_tvecm_at, grid_search_tvecm, GridConfig, Regime, TvecmFit,
};
pub use unitroot::{
    adf_test, dfgls_test, pp_test, CriticalValues, Deterministic, InfoCriterion, LagSelection,
    Level, UnitRootResult, UnitRootTest,
};
