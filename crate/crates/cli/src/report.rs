//! Machine-readable run report written alongside the grid CSVs.

use serde::Serialize;

#[derive(Clone, Debug, Serialize)]
pub struct Provenance {
    pub config_sha256: String,
    pub seed: u64,
    pub version: String,
    pub tolerance_profile: String,
}

#[derive(Clone, Debug, Serialize)]
pub struct Peak {
    pub x: f64,
    pub y: f64,
    pub magnitude: f64,
}

/// Damping of one t = 0 peak, tracked to its rotated image at time t.
#[derive(Clone, Debug, Serialize)]
pub struct DampingEntry {
    pub x0: f64,
    pub y0: f64,
    pub ratio: f64,
    /// exp(-gamma t (1 - chi_g(r))) from the closed-form propagator
    pub predicted: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct TimeSummary {
    pub t: f64,
    pub chi_csv: String,
    pub purity: f64,
    pub peaks: Vec<Peak>,
    pub damping: Vec<DampingEntry>,
}

/// One oracle-comparison row; `pass` is deviation <= tolerance.
#[derive(Clone, Debug, Serialize)]
pub struct ComparisonEntry {
    pub label: String,
    pub max_deviation: f64,
    pub tolerance: f64,
    pub pass: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct RunReport {
    pub scenario: String,
    pub provenance: Provenance,
    pub times: Vec<TimeSummary>,
    pub comparisons: Vec<ComparisonEntry>,
}

impl RunReport {
    pub fn all_pass(&self) -> bool {
        self.comparisons.iter().all(|c| c.pass)
    }
}
