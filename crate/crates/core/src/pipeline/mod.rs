//! End-to-end edge detection and the detector comparison harness.

mod config;
mod report;

use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use config::{normalize_key, PipelineConfig, CONFIG_KEYS};
pub use report::{CornerRecord, EdgeRecord, EdgeReport, StageTimings};

use crate::contours::extract_contours;
use crate::corners::detect_corners;
use crate::denoise::{denoise, FloatFrame};
use crate::detectors::{baseline_detect, canny, BaselineKind, BinaryMap};
use crate::error::Error;
use crate::imageio::{scale_dpg, Frame};
use crate::linking::{link_edges, EdgeGraph};
use crate::scoring::{rank, score_edges};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Stage {
    Config,
    Scale,
    Denoise,
    Canny,
    Contours,
    Corners,
    Link,
    Score,
    Render,
    Detect,
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Stage::Config => "config",
            Stage::Scale => "scale",
            Stage::Denoise => "denoise",
            Stage::Canny => "canny",
            Stage::Contours => "contours",
            Stage::Corners => "corners",
            Stage::Link => "link",
            Stage::Score => "score",
            Stage::Render => "render",
            Stage::Detect => "detect",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
#[error("{stage} stage: {source}")]
pub struct PipelineError {
    pub stage: Stage,
    #[source]
    pub source: Error,
}

trait StageExt<T> {
    fn at(self, stage: Stage) -> Result<T, PipelineError>;
}

impl<T> StageExt<T> for crate::error::Result<T> {
    fn at(self, stage: Stage) -> Result<T, PipelineError> {
        self.map_err(|source| PipelineError { stage, source })
    }
}

fn ms(start: Instant) -> f64 {
    start.elapsed().as_secs_f64() * 1e3
}

/// Scales raw frames to 8 bits (gray frames pass through) and converts to
/// floating point.
pub fn to_working_frame(input: &Frame, cfg: &PipelineConfig) -> Result<FloatFrame, PipelineError> {
    match input {
        Frame::Raw(raw) => Ok(FloatFrame::from(&scale_dpg(raw, &cfg.scale).at(Stage::Scale)?)),
        Frame::Gray(gray) => Ok(FloatFrame::from(gray)),
    }
}

/// Sets exactly the pixels of the `kept` edges.
pub fn render_edges(graph: &EdgeGraph, kept: &[usize], width: usize, height: usize) -> crate::error::Result<BinaryMap> {
    let mut map = BinaryMap::new(width, height);
    for &k in kept {
        let Some(edge) = graph.edges.contours.get(k) else {
            return Err(Error::IndexOutOfRange { index: k, len: graph.edges.len() });
        };
        for p in &edge.points {
            if p.x >= 0 && p.y >= 0 && (p.x as usize) < width && (p.y as usize) < height {
                map.set(p.x as usize, p.y as usize, true);
            }
        }
    }
    Ok(map)
}

/// Everything after denoising: Canny, contours, corners, linking, scoring
/// and rendering. `timings` receives the per-stage durations.
pub fn run_from_denoised(
    frame: &FloatFrame,
    cfg: &PipelineConfig,
    timings: &mut StageTimings,
) -> Result<(BinaryMap, EdgeGraph, Vec<EdgeRecord>), PipelineError> {
    let t = Instant::now();
    let edges = canny(frame, &cfg.canny).at(Stage::Canny)?;
    timings.canny = ms(t);

    let t = Instant::now();
    let contours = extract_contours(&edges, &cfg.contour).at(Stage::Contours)?;
    timings.contours = ms(t);

    let t = Instant::now();
    let corners = detect_corners(&contours, &cfg.glcp).at(Stage::Corners)?;
    timings.corners = ms(t);

    let t = Instant::now();
    let graph = link_edges(&contours, &corners, &cfg.link).at(Stage::Link)?;
    timings.link = ms(t);

    let t = Instant::now();
    let scored = score_edges(&graph, &cfg.score).at(Stage::Score)?;
    let order = rank(&scored);
    let mut ranks = vec![0; scored.len()];
    for (pos, &e) in order.iter().enumerate() {
        ranks[e] = pos + 1;
    }
    let kept: Vec<usize> = order.iter().copied().take(cfg.score.et).collect();
    timings.score = ms(t);

    let t = Instant::now();
    let map = render_edges(&graph, &kept, frame.width(), frame.height()).at(Stage::Render)?;
    timings.render = ms(t);

    let records = scored
        .iter()
        .map(|s| {
            let e = s.edge_index;
            let edge = &graph.edges.contours[e];
            EdgeRecord {
                id: e,
                n: s.n,
                m: s.m,
                nprime: s.nprime,
                phi: s.phi,
                rss: s.rss,
                ar: s.ar,
                es: s.es,
                rank: ranks[e],
                kept: ranks[e] <= cfg.score.et,
                mode: edge.mode,
                adjacent: graph.adjacency[e].iter().copied().collect(),
                points: edge.points.clone(),
                corners: graph
                    .corners_of(e)
                    .map(|c| CornerRecord {
                        point_index: c.point_index,
                        angle: c.angle,
                        kind: c.kind,
                    })
                    .collect(),
            }
        })
        .collect();
    Ok((map, graph, records))
}

/// Runs the whole pipeline: scale (raw input only), denoise, Canny,
/// contours, corners, linking, scoring, ranking and rendering of the kept
/// edges.
pub fn run_pipeline(input: &Frame, cfg: &PipelineConfig) -> Result<(BinaryMap, EdgeReport), PipelineError> {
    cfg.validate().at(Stage::Config)?;
    let start = Instant::now();
    let mut timings = StageTimings::default();

    let t = Instant::now();
    let working = to_working_frame(input, cfg)?;
    timings.scale = ms(t);

    let t = Instant::now();
    let denoised = denoise(&working, &cfg.denoiser).at(Stage::Denoise)?;
    timings.denoise = ms(t);

    let (map, _, edges) = run_from_denoised(&denoised, cfg, &mut timings)?;
    timings.total = ms(start);
    let report = EdgeReport {
        config: *cfg,
        width: input.width(),
        height: input.height(),
        timings_ms: timings,
        edges,
    };
    Ok((map, report))
}

/// Detectors available to [`compare_detectors`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DetectorKind {
    Prewitt,
    Roberts,
    Sobel,
    Log,
    Canny,
    Proposed,
}

impl DetectorKind {
    pub const ALL: [DetectorKind; 6] = [
        DetectorKind::Prewitt,
        DetectorKind::Roberts,
        DetectorKind::Sobel,
        DetectorKind::Log,
        DetectorKind::Canny,
        DetectorKind::Proposed,
    ];

    pub fn name(self) -> &'static str {
        match self {
            DetectorKind::Prewitt => "prewitt",
            DetectorKind::Roberts => "roberts",
            DetectorKind::Sobel => "sobel",
            DetectorKind::Log => "log",
            DetectorKind::Canny => "canny",
            DetectorKind::Proposed => "proposed",
        }
    }
}

impl fmt::Display for DetectorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for DetectorKind {
    type Err = Error;

    fn from_str(s: &str) -> crate::error::Result<Self> {
        let s = s.trim().to_ascii_lowercase();
        DetectorKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::param(format!("unknown detector kind '{s}'")))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DetectorOutput {
    pub kind: DetectorKind,
    pub map: BinaryMap,
    pub edge_pixels: usize,
    pub components: usize,
}

/// Runs each detector on the same scaled and denoised frame. Baselines use
/// `threshold` as their fraction of the maximum response.
pub fn compare_detectors(
    input: &Frame,
    kinds: &[DetectorKind],
    cfg: &PipelineConfig,
    threshold: f64,
) -> Result<Vec<DetectorOutput>, PipelineError> {
    cfg.validate().at(Stage::Config)?;
    let working = to_working_frame(input, cfg)?;
    let denoised = denoise(&working, &cfg.denoiser).at(Stage::Denoise)?;
    kinds
        .iter()
        .map(|&kind| {
            let map = match kind {
                DetectorKind::Canny => canny(&denoised, &cfg.canny).at(Stage::Canny)?,
                DetectorKind::Proposed => run_from_denoised(&denoised, cfg, &mut StageTimings::default())?.0,
                DetectorKind::Prewitt => baseline_detect(&denoised, BaselineKind::Prewitt, threshold).at(Stage::Detect)?,
                DetectorKind::Roberts => baseline_detect(&denoised, BaselineKind::Roberts, threshold).at(Stage::Detect)?,
                DetectorKind::Sobel => baseline_detect(&denoised, BaselineKind::Sobel, threshold).at(Stage::Detect)?,
                DetectorKind::Log => baseline_detect(&denoised, BaselineKind::Log, threshold).at(Stage::Detect)?,
            };
            Ok(DetectorOutput {
                kind,
                edge_pixels: map.count(),
                components: map.component_count(),
                map,
            })
        })
        .collect()
}
