//! JSON report of a pipeline run.

use serde::{Deserialize, Serialize};

use super::config::PipelineConfig;
use crate::contours::{CurveMode, Point};
use crate::corners::CornerKind;

/// Wall-clock milliseconds spent in each stage.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct StageTimings {
    pub scale: f64,
    pub denoise: f64,
    pub canny: f64,
    pub contours: f64,
    pub corners: f64,
    pub link: f64,
    pub score: f64,
    pub render: f64,
    pub total: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CornerRecord {
    pub point_index: usize,
    pub angle: Option<f64>,
    pub kind: CornerKind,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EdgeRecord {
    pub id: usize,
    pub n: usize,
    pub m: usize,
    pub nprime: usize,
    pub phi: f64,
    pub rss: f64,
    pub ar: f64,
    pub es: f64,
    /// 1-based position in the score order.
    pub rank: usize,
    pub kept: bool,
    pub mode: CurveMode,
    /// Edges joined to this one by T-junctions.
    pub adjacent: Vec<usize>,
    pub points: Vec<Point>,
    pub corners: Vec<CornerRecord>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EdgeReport {
    pub config: PipelineConfig,
    pub width: usize,
    pub height: usize,
    pub timings_ms: StageTimings,
    pub edges: Vec<EdgeRecord>,
}

impl EdgeReport {
    /// Copy with all timings zeroed, for comparing runs.
    pub fn without_timings(&self) -> Self {
        Self {
            timings_ms: StageTimings::default(),
            ..self.clone()
        }
    }

    pub fn kept(&self) -> impl Iterator<Item = &EdgeRecord> {
        self.edges.iter().filter(|e| e.kept)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}
