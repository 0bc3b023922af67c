//! JSON report types. Every report carries the versioned schema tag and is
//! written with `serde_json`, whose f64 formatting round-trips bit-exactly.

use serde::{Deserialize, Serialize};

pub const SCHEMA: &str = "superosc/1";

#[derive(Debug, Serialize, Deserialize)]
pub struct VerifyReport {
    pub schema: String,
    pub command: String,
    pub n: f64,
    pub delta: f64,
    pub span: f64,
    pub seed: u64,
    pub oscillator: Vec<OscIcReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub geodesic: Option<GeodesicSuiteReport>,
    pub thresholds: Thresholds,
    pub pass: bool,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct Thresholds {
    pub i1: f64,
    pub i2: f64,
    pub h: f64,
    pub t: f64,
}

impl Default for Thresholds {
    fn default() -> Self {
        Thresholds {
            i1: 1e-9,
            i2: 1e-6,
            h: 1e-9,
            t: 1e-6,
        }
    }
}

#[derive(Debug, Serialize, Deserialize)]
pub struct OscIcReport {
    pub ic: [f64; 2],
    /// Span actually integrated (shorter than requested on blow-up).
    pub span_integrated: f64,
    /// Autonomous-integral drift (i1, or n1 in the log case).
    pub autonomous_drift: Option<f64>,
    /// Non-autonomous drift (i2 / n2), `null` when no admissible branch.
    pub non_autonomous_drift: Option<f64>,
    pub branch_segments: usize,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct GeodesicSuiteReport {
    pub c1: f64,
    pub c2: f64,
    pub runs: Vec<GeodesicIcReport>,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct GeodesicIcReport {
    pub ic: [f64; 4],
    pub l_drift: f64,
    pub h_drift: Option<f64>,
    pub t_drift: Option<f64>,
    pub r_drift: Option<f64>,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct ClassifyReport {
    pub schema: String,
    pub command: String,
    pub case: String,
    pub interval: [f64; 2],
    pub samples: usize,
    /// Worst residual of the matched case's defining relation (cases I/II).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub relation_residual: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub reconstruction: Option<ReconstructionReport>,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct ReconstructionReport {
    pub liouville_residual_max: f64,
    pub round_trip_error: f64,
    pub metric_samples: Vec<MetricSample>,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct MetricSample {
    pub y: f64,
    pub g11: f64,
    pub g12: f64,
    pub g22: f64,
    pub positive_definite: bool,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct LienardReport {
    pub schema: String,
    pub command: String,
    pub family: String,
    pub params: serde_json::Map<String, serde_json::Value>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub equivalence_residual: Option<f64>,
    /// Samples excluded from the residual scan (degenerate map points,
    /// out-of-branch hypergeometric arguments).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub excluded_samples: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub j1_drift: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub j2_drift: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub shift_mismatch: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub m_equation_residuals: Option<Vec<[f64; 2]>>,
    pub pass: bool,
}
