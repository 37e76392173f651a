use std::fmt;
use std::io::Write;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::target::Observable;

/// A tracked quantity.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum Metric {
    /// Ensemble average of an observable.
    Expectation(Observable),
    /// Exploration rate against exact reference draws.
    Z,
    ModeCount,
    /// Acceptance fraction of mixture MH updates.
    AcceptanceRate,
    /// KL divergence of one coordinate's kernel density from the target marginal.
    MarginalKl {
        coordinate: usize,
    },
    /// Grid χ² divergence of the kernel density (d ≤ 2).
    Chi2,
}

impl fmt::Display for Metric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Metric::Expectation(o) => write!(f, "{o}"),
            Metric::Z => f.write_str("Z"),
            Metric::ModeCount => f.write_str("mode_count"),
            Metric::AcceptanceRate => f.write_str("acceptance_rate"),
            Metric::MarginalKl { coordinate } => write!(f, "marginal_kl coordinate={coordinate}"),
            Metric::Chi2 => f.write_str("chi2"),
        }
    }
}

impl FromStr for Metric {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s.trim() {
            "Z" => Ok(Metric::Z),
            "mode_count" => Ok(Metric::ModeCount),
            "acceptance_rate" => Ok(Metric::AcceptanceRate),
            "chi2" => Ok(Metric::Chi2),
            "marginal_kl" => Ok(Metric::MarginalKl { coordinate: 0 }),
            other => {
                if let Some(rest) = other.strip_prefix("marginal_kl") {
                    let coordinate = rest
                        .trim()
                        .strip_prefix("coordinate=")
                        .and_then(|c| c.parse().ok())
                        .ok_or_else(|| format!("malformed metric `{other}` (expected `marginal_kl coordinate=<i>`)"))?;
                    return Ok(Metric::MarginalKl { coordinate });
                }
                other
                    .parse::<Observable>()
                    .map(Metric::Expectation)
                    .map_err(|_| format!("unknown metric `{other}`"))
            }
        }
    }
}

impl TryFrom<String> for Metric {
    type Error = String;

    fn try_from(s: String) -> std::result::Result<Self, Self::Error> {
        s.parse()
    }
}

impl From<Metric> for String {
    fn from(m: Metric) -> String {
        m.to_string()
    }
}

/// One value of one metric at one update of one replicate.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MetricRow {
    pub replicate: usize,
    pub iteration: usize,
    pub update: usize,
    pub metric: String,
    pub value: f64,
}

/// Column header of metrics CSV files.
pub const METRICS_HEADER: &str = "replicate,iteration,update,metric,value";

/// Per-update time series of one replicate, kept in memory.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct RunMetrics {
    rows: Vec<MetricRow>,
}

impl RunMetrics {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, row: MetricRow) {
        debug_assert!(self.rows.last().is_none_or(|r| r.update <= row.update));
        self.rows.push(row);
    }

    pub fn rows(&self) -> &[MetricRow] {
        &self.rows
    }

    /// `(update, value)` pairs of one metric in update order.
    pub fn series(&self, metric: &str) -> Vec<(usize, f64)> {
        self.rows
            .iter()
            .filter(|r| r.metric == metric)
            .map(|r| (r.update, r.value))
            .collect()
    }

    /// Last recorded value of `metric`.
    pub fn last(&self, metric: &str) -> Option<f64> {
        self.rows
            .iter()
            .rev()
            .find(|r| r.metric == metric)
            .map(|r| r.value)
    }

    /// Value of `metric` at `update`.
    pub fn at(&self, metric: &str, update: usize) -> Option<f64> {
        self.rows
            .iter()
            .find(|r| r.metric == metric && r.update == update)
            .map(|r| r.value)
    }
}

/// Streams metric rows as CSV. Values use the shortest representation that
/// round-trips to the same `f64`.
pub struct MetricsWriter<W: Write> {
    out: W,
}

impl<W: Write> MetricsWriter<W> {
    pub fn new(mut out: W) -> Result<Self> {
        writeln!(out, "{METRICS_HEADER}").map_err(|e| Error::io("writing metrics header", e))?;
        Ok(Self { out })
    }

    pub fn write(&mut self, row: &MetricRow) -> Result<()> {
        writeln!(
            self.out,
            "{},{},{},{},{:?}",
            row.replicate,
            row.iteration,
            row.update,
            csv_field(&row.metric),
            row.value
        )
        .map_err(|e| Error::io("writing metrics", e))
    }

    pub fn finish(mut self) -> Result<W> {
        self.out
            .flush()
            .map_err(|e| Error::io("flushing metrics", e))?;
        Ok(self.out)
    }
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}
