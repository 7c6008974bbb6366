//! Versioned JSON report written once per run.

use std::io::Write;

use fairtopk::audit::{AdjustedAlpha, AuditReport, BoundaryCurves, ConfidenceBand};
use fairtopk::{NullModel, PopulationSpec, TestConfig};
use serde::{Deserialize, Serialize};
use serde_json::ser::Formatter;

use crate::error::CliResult;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InputInfo {
    pub path: String,
    pub sha256: String,
    pub rows: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RerankSummary {
    pub swap_count: usize,
    pub positions_adjusted: Vec<usize>,
    pub alpha_c: f64,
    pub output: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PositionSummary {
    pub j: usize,
    pub protected_share_at_position: f64,
    pub mean_prefix_count: f64,
    pub sd_prefix_count: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationSummary {
    pub count: usize,
    pub seed: u64,
    pub positions: Vec<PositionSummary>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleSize {
    pub delta: f64,
    pub beta: f64,
    pub n_e: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportDocument {
    pub schema_version: u32,
    pub command: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub input: Option<InputInfo>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub population: Option<PopulationSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub model: Option<NullModel>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub config: Option<TestConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub audit: Option<AuditReport>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub adjusted_alpha: Option<AdjustedAlpha>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rerank: Option<RerankSummary>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub band: Option<ConfidenceBand>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub boundaries: Option<BoundaryCurves>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub simulation: Option<SimulationSummary>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub samples: Option<SampleSize>,
}

impl ReportDocument {
    pub fn new(command: &str) -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            command: command.to_string(),
            input: None,
            population: None,
            model: None,
            config: None,
            audit: None,
            adjusted_alpha: None,
            rerank: None,
            band: None,
            boundaries: None,
            simulation: None,
            samples: None,
        }
    }

    /// One JSON object and a trailing newline.
    pub fn write<W: Write>(&self, mut out: W) -> CliResult<()> {
        let mut ser = serde_json::Serializer::with_formatter(&mut out, SeventeenDigits);
        self.serialize(&mut ser)?;
        out.write_all(b"\n")
            .map_err(|e| crate::error::CliError::Input(e.to_string()))?;
        Ok(())
    }

    pub fn to_string(&self) -> CliResult<String> {
        let mut buf = Vec::new();
        self.write(&mut buf)?;
        Ok(String::from_utf8(buf).expect("json is utf-8"))
    }
}

/// Compact JSON with every float in scientific notation at 17 significant
/// digits, enough to round-trip any `f64`.
struct SeventeenDigits;

impl Formatter for SeventeenDigits {
    fn write_f64<W: ?Sized + Write>(&mut self, writer: &mut W, value: f64) -> std::io::Result<()> {
        if value.is_finite() {
            write!(writer, "{value:.16e}")
        } else {
            writer.write_all(b"null")
        }
    }
}
