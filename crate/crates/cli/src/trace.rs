use lifted_nmf::IterationRecord;
use serde::Serialize;

/// One line of `trace.jsonl`. Non-finite values are written as `null`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TraceLine {
    pub iter: usize,
    pub divergence: f64,
    pub gain: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub gain_p: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub gain_q: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub gain_residual: Option<f64>,
}

impl From<&IterationRecord> for TraceLine {
    fn from(r: &IterationRecord) -> Self {
        TraceLine {
            iter: r.iter,
            divergence: r.divergence,
            gain: r.gain,
            gain_p: r.gain_p,
            gain_q: r.gain_q,
            gain_residual: r.gain_residual,
        }
    }
}

/// Renders a trace, one JSON object per line.
pub fn trace_jsonl(records: &[IterationRecord]) -> String {
    let mut out = String::new();
    for r in records {
        let line = serde_json::to_string(&TraceLine::from(r)).expect("plain struct serializes");
        out.push_str(&line);
        out.push('\n');
    }
    out
}
