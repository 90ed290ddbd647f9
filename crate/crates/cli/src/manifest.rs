use lifted_nmf::KktReport;
use serde::Serialize;

/// Summary of the optimality report at the final iterate.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct KktSummary {
    pub max_complementarity: f64,
    pub min_zero_gradient: Option<f64>,
    pub dead_columns: Vec<usize>,
    pub tol: f64,
    pub satisfied: bool,
}

impl From<&KktReport> for KktSummary {
    fn from(r: &KktReport) -> Self {
        KktSummary {
            max_complementarity: r.max_complementarity,
            min_zero_gradient: r.min_zero_gradient,
            dead_columns: r.dead_columns.clone(),
            tol: r.tol,
            satisfied: r.satisfied,
        }
    }
}

/// Contents of `manifest.json`. The configuration fields reproduce the run.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunManifest {
    pub input: String,
    pub k: usize,
    pub variant: &'static str,
    pub init: &'static str,
    pub seed: u64,
    pub max_iters: usize,
    pub tol: f64,
    pub record_components: bool,
    pub underflow_guard: bool,
    pub check_identities: bool,
    pub total: f64,
    pub status: &'static str,
    /// `None` (written as `null`) when the divergence is infinite.
    pub final_divergence: Option<f64>,
    pub effective_inner_size: usize,
    pub iterations: usize,
    pub wall_time_ms: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub kkt: Option<KktSummary>,
}

impl RunManifest {
    pub fn to_json(&self) -> Result<String, serde_json::Error> {
        let mut s = serde_json::to_string_pretty(self)?;
        s.push('\n');
        Ok(s)
    }
}
