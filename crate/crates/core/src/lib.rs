//! Smoothness-ranked edge detection for low-SNR thermal-infrared frames.
//!
//! The pipeline takes a raw 14-bit frame through a fixed-DPG 8-bit scaling,
//! denoising, Canny edge detection, contour extraction, curvature corner
//! detection and edge linking, then scores every linked edge by how well
//! cubic segments between its corners explain it. Only the best-scoring
//! edges are rendered into the output map.
//!
//! ```text
//! RawFrame -> scale_dpg -> denoise -> canny -> extract_contours
//!          -> detect_corners -> link_edges -> score/rank -> render
//! ```
//!
//! Every stage is a pure function and can be called on its own; see
//! [`pipeline::run_pipeline`] for the composed entry point.

pub mod contours;
pub mod corners;
pub mod denoise;
pub mod detectors;
pub mod error;
pub mod imageio;
pub mod linking;
pub mod pipeline;
pub mod scoring;

pub use contours::{extract_contours, Contour, ContourParams, ContourSet, CurveMode, EndTag, Point};
pub use corners::{detect_corners, Corner, CornerKind, GlcpParams};
pub use denoise::{denoise, DenoiserSpec, FloatFrame, GaussianKernelSpec, Kernel};
pub use detectors::{canny, BaselineKind, BinaryMap, CannyConfig, GradientField};
pub use error::{Error, Result};
pub use imageio::{read_pgm, scale_dpg, write_pgm, Frame, GrayFrame, RawFrame, ScaleConfig};
pub use linking::{link_edges, EdgeGraph, LinkConfig};
pub use pipeline::{run_pipeline, DetectorKind, EdgeReport, PipelineConfig, PipelineError};
pub use scoring::{ScoreConfig, ScoredEdge};
