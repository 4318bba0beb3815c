//! Table rendering for test and fit results, in aligned plain text and in a
//! stable JSON row schema.

use serde::Serialize;

use crate::tvecm::TvecmFit;

/// Coefficient formatting used across all tables: exact zero prints "0.000",
/// large magnitudes get one decimal, mid-range two, small three.
pub fn fmt_coef(v: f64) -> String {
    if v == 0.0 {
        return "0.000".to_string();
    }
    let a = v.abs();
    if a >= 1000.0 {
        format!("{v:.1}")
    } else if a >= 0.1 {
        format!("{v:.2}")
    } else {
        format!("{v:.3}")
    }
}

/// P-value as a percentage with one decimal; values that would round to zero
/// print "<0.1%" so a small p-value is never displayed as exactly zero.
pub fn fmt_pvalue_pct(p: f64) -> String {
    let pct = p * 100.0;
    if pct < 0.05 {
        "<0.1%".to_string()
    } else {
        format!("{pct:.1}%")
    }
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct FitCell {
    pub est: f64,
    pub se: f64,
}

/// One fit-table row: a variable within an equation, with estimates and
/// standard errors from both regimes.
#[derive(Clone, Debug, Serialize)]
pub struct FitRow {
    pub equation: String,
    pub variable: String,
    pub regime1: FitCell,
    pub regime2: FitCell,
}

/// Display name of a regressor: the error-correction term prints as z_t, the
/// intercept as Constant, and lagged differences as d<series>(-<lag>).
fn variable_name(label: &str) -> String {
    match label {
        "const" => "Constant".to_string(),
        "z.l1" => "z_t".to_string(),
        other => match other.rsplit_once(".l") {
            Some((head, lag)) => format!("{head}(-{lag})"),
            None => other.to_string(),
        },
    }
}

/// Display order of fit rows: error-correction term, constant, then lags.
fn display_order(k: usize) -> Vec<usize> {
    let mut order = vec![1, 0];
    order.extend(2..k);
    order
}

/// Flatten a fit into rows, one per (equation, variable) pair.
pub fn fit_table_rows(fit: &TvecmFit, equations: [&str; 2]) -> Vec<FitRow> {
    let k = fit.labels.len();
    let mut rows = Vec::with_capacity(2 * k);
    for (eq, eq_label) in equations.iter().enumerate() {
        for &j in &display_order(k) {
            rows.push(FitRow {
                equation: format!("d{eq_label}"),
                variable: variable_name(&fit.labels[j]),
                regime1: FitCell { est: fit.a1[(j, eq)], se: fit.se1[(j, eq)] },
                regime2: FitCell { est: fit.a2[(j, eq)], se: fit.se2[(j, eq)] },
            });
        }
    }
    rows
}

fn pad(s: &str, w: usize) -> String {
    format!("{s:<w$}")
}

/// Aligned text table for a regime-switching fit: one block per regime, rows
/// by variable, one column per equation, cells as "estimate (se)".
pub fn render_fit_table(fit: &TvecmFit, equations: [&str; 2]) -> String {
    let k = fit.labels.len();
    let order = display_order(k);
    let var_names: Vec<String> = order.iter().map(|&j| variable_name(&fit.labels[j])).collect();

    let cell = |m: &nalgebra::DMatrix<f64>, s: &nalgebra::DMatrix<f64>, j: usize, eq: usize| {
        format!("{} ({})", fmt_coef(m[(j, eq)]), fmt_coef(s[(j, eq)]))
    };

    let mut out = String::new();
    for (regime, coef, se) in [(1, &fit.a1, &fit.se1), (2, &fit.a2, &fit.se2)] {
        out.push_str(&format!("Estimations in Regime {regime}\n"));
        let header: Vec<String> = std::iter::once(String::new())
            .chain(equations.iter().map(|e| format!("d{e}")))
            .collect();
        let mut body: Vec<Vec<String>> = vec![header];
        for (row_idx, &j) in order.iter().enumerate() {
            body.push(vec![
                var_names[row_idx].clone(),
                cell(coef, se, j, 0),
                cell(coef, se, j, 1),
            ]);
        }
        let widths: Vec<usize> = (0..3)
            .map(|c| body.iter().map(|r| r[c].len()).max().unwrap_or(0))
            .collect();
        for row in &body {
            let line: Vec<String> =
                row.iter().zip(&widths).map(|(cell, &w)| pad(cell, w)).collect();
            out.push_str(&format!("  {}\n", line.join("  ").trim_end()));
        }
    }
    out
}

/// One test-table row.
#[derive(Clone, Debug, Serialize)]
pub struct TestRow {
    pub market: String,
    pub lm: f64,
    pub pvalue: f64,
    pub tau_hat: f64,
    pub replications: usize,
    pub seed: u64,
}

/// Aligned text table of threshold-test results: market, LM statistic,
/// bootstrap p-value as a percentage, and the threshold estimate.
pub fn render_test_table(rows: &[TestRow]) -> String {
    let header = ["Market", "LM Test statistic", "p-value", "Threshold estimates"];
    let mut body: Vec<Vec<String>> =
        vec![header.iter().map(|s| s.to_string()).collect()];
    for r in rows {
        body.push(vec![
            r.market.clone(),
            fmt_coef(r.lm),
            fmt_pvalue_pct(r.pvalue),
            fmt_coef(r.tau_hat),
        ]);
    }
    let widths: Vec<usize> =
        (0..4).map(|c| body.iter().map(|r| r[c].len()).max().unwrap_or(0)).collect();
    let mut out = String::new();
    for row in &body {
        let line: Vec<String> = row.iter().zip(&widths).map(|(cell, &w)| pad(cell, w)).collect();
        out.push_str(&format!("  {}\n", line.join("  ").trim_end()));
    }
    out
}
