use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::config::OutputFormat;
use crate::error::{Error, Result};
use crate::regret::RegretReport;

/// Regret-bound columns of one row.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegretColumns {
    pub bound: f64,
    pub realized: f64,
    pub realized_se: f64,
    pub w: f64,
    pub f: f64,
    pub a_mu: f64,
    pub l_eps: f64,
    pub rho_from_gap: f64,
}

impl From<&RegretReport> for RegretColumns {
    fn from(r: &RegretReport) -> Self {
        Self {
            bound: r.bound,
            realized: r.realized,
            realized_se: r.realized_se,
            w: r.w,
            f: r.f,
            a_mu: r.a_mu,
            l_eps: r.l_eps,
            rho_from_gap: r.rho_from_gap,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryRow {
    pub t: u64,
    /// Observed state `x̂_t`.
    pub x: Vec<f64>,
    /// Applied decision `u_t`.
    pub u: Vec<f64>,
    pub alpha: Vec<f64>,
    pub gamma: f64,
    /// Ambiguity radius at `u_t`.
    pub eps_hat: f64,
    pub rho: f64,
    /// Smoothed objective at `u_t`.
    pub objective: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub regret: Option<RegretColumns>,
}

/// Where and why a run stopped early.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Truncation {
    pub step: Option<u64>,
    pub kind: String,
    pub message: String,
}

impl Truncation {
    pub fn from_error(e: &Error) -> Self {
        Self {
            step: e.step(),
            kind: e.kind().to_string(),
            message: e.to_string(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryRecord {
    pub scenario: String,
    pub state_dim: usize,
    pub control_dim: usize,
    pub predictors: usize,
    /// Whether rows carry regret columns.
    pub regret: bool,
    pub rows: Vec<TrajectoryRow>,
    pub truncated: Option<Truncation>,
}

const REGRET_HEADER: [&str; 8] = ["bound", "realized", "realized_se", "w", "f", "a_mu", "l_eps", "rho_from_gap"];

impl TrajectoryRecord {
    pub fn csv_header(&self) -> String {
        let mut cols = vec!["t".to_string()];
        cols.extend((0..self.state_dim).map(|i| format!("x_{i}")));
        cols.extend((0..self.control_dim).map(|i| format!("u_{i}")));
        cols.extend((0..self.predictors).map(|i| format!("alpha_{i}")));
        cols.extend(["gamma", "eps_hat", "rho", "objective"].map(String::from));
        if self.regret {
            cols.extend(REGRET_HEADER.map(String::from));
        }
        cols.join(",")
    }

    /// CSV with one row per step and floats in `{:.16e}`. Steps without
    /// regret data leave those cells empty; a truncated run ends with a
    /// `# truncated` comment line.
    pub fn to_csv(&self) -> String {
        let mut s = self.csv_header();
        s.push('\n');
        for row in &self.rows {
            write!(s, "{}", row.t).unwrap();
            let scalars = [row.gamma, row.eps_hat, row.rho, row.objective];
            for v in row.x.iter().chain(&row.u).chain(&row.alpha).chain(&scalars) {
                write!(s, ",{v:.16e}").unwrap();
            }
            if self.regret {
                match &row.regret {
                    Some(r) => {
                        for v in [r.bound, r.realized, r.realized_se, r.w, r.f, r.a_mu, r.l_eps, r.rho_from_gap] {
                            write!(s, ",{v:.16e}").unwrap();
                        }
                    }
                    None => s.push_str(&",".repeat(REGRET_HEADER.len())),
                }
            }
            s.push('\n');
        }
        if let Some(tr) = &self.truncated {
            let step = tr.step.map_or("-".to_string(), |k| k.to_string());
            writeln!(s, "# truncated at step {step}: {}: {}", tr.kind, tr.message).unwrap();
        }
        s
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("record serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::InvalidInput(format!("trajectory JSON: {e}")))
    }

    pub fn render(&self, format: OutputFormat) -> String {
        match format {
            OutputFormat::Csv => self.to_csv(),
            OutputFormat::Json => self.to_json(),
        }
    }

    /// Writes the record. An empty record is refused unless it carries a
    /// truncation marker, so a run that failed on its first step still leaves
    /// the marker behind.
    pub fn write(&self, path: &Path, format: OutputFormat) -> Result<()> {
        if self.rows.is_empty() && self.truncated.is_none() {
            return Err(Error::InvalidInput("refusing to write an empty trajectory".into()));
        }
        std::fs::write(path, self.render(format)).map_err(|e| Error::Io(format!("{}: {e}", path.display())))
    }
}
