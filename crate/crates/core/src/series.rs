//! Time-indexed data containers: labeled series, bivariate panels, CSV i/o.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Serialize, Serializer};

use crate::error::{Error, Result};

/// Calendar stamp at month or day resolution, used for ordering only.
///
/// Accepted forms are `YYYY-MM` and `YYYY-MM-DD`. A month-resolution stamp
/// orders as the first day of that month.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Timestamp {
    pub year: i32,
    pub month: u8,
    pub day: Option<u8>,
}

impl Timestamp {
    pub fn month(year: i32, month: u8) -> Result<Self> {
        if !(1..=12).contains(&month) {
            return Err(Error::data(format!("month {month} out of range in timestamp")));
        }
        Ok(Timestamp { year, month, day: None })
    }

    fn sort_key(&self) -> (i32, u8, u8) {
        (self.year, self.month, self.day.unwrap_or(1))
    }

    /// The stamp `k` whole months after `self`, at month resolution.
    pub fn plus_months(&self, k: usize) -> Timestamp {
        let total = (self.year as i64) * 12 + (self.month as i64 - 1) + k as i64;
        Timestamp {
            year: (total.div_euclid(12)) as i32,
            month: (total.rem_euclid(12) + 1) as u8,
            day: None,
        }
    }
}

impl PartialOrd for Timestamp {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Timestamp {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.sort_key().cmp(&other.sort_key())
    }
}

impl fmt::Display for Timestamp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.day {
            Some(d) => write!(f, "{:04}-{:02}-{:02}", self.year, self.month, d),
            None => write!(f, "{:04}-{:02}", self.year, self.month),
        }
    }
}

impl FromStr for Timestamp {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let parts: Vec<&str> = s.trim().split('-').collect();
        let bad = || Error::data(format!("timestamp '{s}' is not YYYY-MM or YYYY-MM-DD"));
        if parts.len() != 2 && parts.len() != 3 {
            return Err(bad());
        }
        let year: i32 = parts[0].parse().map_err(|_| bad())?;
        let month: u8 = parts[1].parse().map_err(|_| bad())?;
        if !(1..=12).contains(&month) {
            return Err(bad());
        }
        let day = match parts.get(2) {
            Some(p) => {
                let d: u8 = p.parse().map_err(|_| bad())?;
                if !(1..=31).contains(&d) {
                    return Err(bad());
                }
                Some(d)
            }
            None => None,
        };
        Ok(Timestamp { year, month, day })
    }
}

impl Serialize for Timestamp {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

/// Labeled sequence of finite observations.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Series {
    pub label: String,
    pub values: Vec<f64>,
}

impl Series {
    /// Rejects empty input and non-finite entries.
    pub fn new(label: impl Into<String>, values: Vec<f64>) -> Result<Self> {
        let label = label.into();
        if values.is_empty() {
            return Err(Error::data(format!("series '{label}' is empty")));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::data(format!(
                "series '{label}' has non-finite value at index {i}"
            )));
        }
        Ok(Series { label, values })
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// First differences; the result is one observation shorter.
pub fn difference(series: &Series) -> Result<Series> {
    if series.len() < 2 {
        return Err(Error::data(format!(
            "series '{}' has {} observation(s); differencing needs at least 2",
            series.label,
            series.len()
        )));
    }
    let values = series.values.windows(2).map(|w| w[1] - w[0]).collect();
    Series::new(format!("d{}", series.label), values)
}

/// Bivariate panel: a benchmark series and a target series on a shared,
/// strictly increasing timestamp index.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Panel {
    pub timestamps: Vec<Timestamp>,
    pub benchmark: Series,
    pub target: Series,
}

impl Panel {
    pub fn new(timestamps: Vec<Timestamp>, benchmark: Series, target: Series) -> Result<Self> {
        let t = timestamps.len();
        if t < 2 {
            return Err(Error::data(format!("panel has {t} row(s); need at least 2")));
        }
        if benchmark.len() != t || target.len() != t {
            return Err(Error::data(format!(
                "length mismatch: {} timestamps, '{}' has {}, '{}' has {}",
                t,
                benchmark.label,
                benchmark.len(),
                target.label,
                target.len()
            )));
        }
        for i in 1..t {
            if timestamps[i] <= timestamps[i - 1] {
                return Err(Error::data(format!(
                    "non-monotone timestamps: '{}' at data row {} does not follow '{}'",
                    timestamps[i],
                    i + 1,
                    timestamps[i - 1]
                )));
            }
        }
        Ok(Panel { timestamps, benchmark, target })
    }

    pub fn len(&self) -> usize {
        self.timestamps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.timestamps.is_empty()
    }

    /// Natural log of both series; rejects non-positive values.
    pub fn log_transformed(&self) -> Result<Panel> {
        let check = |s: &Series| -> Result<Vec<f64>> {
            for (i, v) in s.values.iter().enumerate() {
                if *v <= 0.0 {
                    return Err(Error::data(format!(
                        "cannot log-transform '{}': value {} at data row {} is not positive",
                        s.label,
                        v,
                        i + 1
                    )));
                }
            }
            Ok(s.values.iter().map(|v| v.ln()).collect())
        };
        Panel::new(
            self.timestamps.clone(),
            Series::new(self.benchmark.label.clone(), check(&self.benchmark)?)?,
            Series::new(self.target.label.clone(), check(&self.target)?)?,
        )
    }

    /// Writes `date,<benchmark>,<target>` rows. Values use the shortest
    /// round-trip decimal form, so a written panel reloads exactly.
    pub fn to_csv(&self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        w.write_record([
            "date",
            self.benchmark.label.as_str(),
            self.target.label.as_str(),
        ])?;
        for i in 0..self.len() {
            w.write_record([
                self.timestamps[i].to_string(),
                self.benchmark.values[i].to_string(),
                self.target.values[i].to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Reads a panel from CSV with the default `date` timestamp column.
pub fn load_panel(path: &Path, benchmark_col: &str, target_col: &str) -> Result<Panel> {
    load_panel_with_date(path, "date", benchmark_col, target_col)
}

/// Reads a panel from CSV with explicit column names.
///
/// Missing or unparseable cells are rejected with the offending row and
/// column named; values are never imputed.
pub fn load_panel_with_date(
    path: &Path,
    date_col: &str,
    benchmark_col: &str,
    target_col: &str,
) -> Result<Panel> {
    let mut reader = csv::Reader::from_path(path)?;
    let headers = reader.headers()?.clone();
    let col_index = |name: &str| -> Result<usize> {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::data(format!("column '{name}' not found in header")))
    };
    let di = col_index(date_col)?;
    let bi = col_index(benchmark_col)?;
    let ti = col_index(target_col)?;

    let mut timestamps = Vec::new();
    let mut bench = Vec::new();
    let mut target = Vec::new();
    for (row, record) in reader.records().enumerate() {
        let record = record?;
        let rowno = row + 1;
        let cell = |idx: usize, name: &str| -> Result<&str> {
            let raw = record
                .get(idx)
                .ok_or_else(|| Error::data(format!("data row {rowno}: column '{name}' missing")))?;
            if raw.trim().is_empty() {
                return Err(Error::data(format!("data row {rowno}: column '{name}' is empty")));
            }
            Ok(raw.trim())
        };
        let stamp: Timestamp = cell(di, date_col)?
            .parse()
            .map_err(|e| Error::data(format!("data row {rowno}: {e}")))?;
        let parse_num = |idx: usize, name: &str| -> Result<f64> {
            let raw = cell(idx, name)?;
            raw.parse::<f64>().map_err(|_| {
                Error::data(format!("data row {rowno}: column '{name}' value '{raw}' is not numeric"))
            })
        };
        timestamps.push(stamp);
        bench.push(parse_num(bi, benchmark_col)?);
        target.push(parse_num(ti, target_col)?);
    }

    Panel::new(
        timestamps,
        Series::new(benchmark_col, bench)?,
        Series::new(target_col, target)?,
    )
}
