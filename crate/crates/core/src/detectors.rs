//! Canny edge detection and the classical baseline detectors.
//!
//! Gradients use the kernels
//!
//! ```text
//!      [-1 0 1]          [ 1  2  1]
//! Kx = [-2 0 2]     Ky = [ 0  0  0]
//!      [-1 0 1]          [-1 -2 -1]
//! ```
//!
//! applied as correlations, so `gy` is positive where intensity grows
//! upwards (towards smaller row index). Directions are measured in a
//! y-up frame; only their value modulo 180 degrees is used downstream.

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use crate::denoise::{convolve, denoise, DenoiserSpec, FloatFrame, Kernel};
use crate::error::{Error, Result};

/// Row-major boolean image.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BinaryMap {
    width: usize,
    height: usize,
    data: Vec<bool>,
}

impl BinaryMap {
    pub fn new(width: usize, height: usize) -> Self {
        Self {
            width,
            height,
            data: vec![false; width * height],
        }
    }

    pub fn from_data(width: usize, height: usize, data: Vec<bool>) -> Result<Self> {
        if width.checked_mul(height) != Some(data.len()) {
            return Err(Error::param(format!(
                "data length {} does not match {width}x{height}",
                data.len()
            )));
        }
        Ok(Self {
            width,
            height,
            data,
        })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn data(&self) -> &[bool] {
        &self.data
    }

    pub fn get(&self, x: usize, y: usize) -> bool {
        self.data[y * self.width + x]
    }

    /// Like [`get`](Self::get) but false outside the image.
    pub fn get_signed(&self, x: isize, y: isize) -> bool {
        x >= 0
            && y >= 0
            && (x as usize) < self.width
            && (y as usize) < self.height
            && self.data[y as usize * self.width + x as usize]
    }

    pub fn set(&mut self, x: usize, y: usize, value: bool) {
        self.data[y * self.width + x] = value;
    }

    pub fn count(&self) -> usize {
        self.data.iter().filter(|&&b| b).count()
    }

    pub fn pixels(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.data
            .iter()
            .enumerate()
            .filter(|(_, &b)| b)
            .map(|(i, _)| (i % self.width, i / self.width))
    }

    /// Number of 8-connected components of set pixels.
    pub fn component_count(&self) -> usize {
        let mut seen = vec![false; self.data.len()];
        let mut count = 0;
        let mut stack = Vec::new();
        for start in 0..self.data.len() {
            if !self.data[start] || seen[start] {
                continue;
            }
            count += 1;
            seen[start] = true;
            stack.push(start);
            while let Some(i) = stack.pop() {
                let (x, y) = ((i % self.width) as isize, (i / self.width) as isize);
                for (dx, dy) in NEIGHBORS_8 {
                    if self.get_signed(x + dx, y + dy) {
                        let j = (y + dy) as usize * self.width + (x + dx) as usize;
                        if !seen[j] {
                            seen[j] = true;
                            stack.push(j);
                        }
                    }
                }
            }
        }
        count
    }

    /// Grayscale rendering: 255 for set pixels, 0 elsewhere.
    pub fn to_gray(&self) -> crate::imageio::GrayFrame {
        let data = self.data.iter().map(|&b| if b { 255 } else { 0 }).collect();
        crate::imageio::GrayFrame::new(self.width, self.height, data)
            .expect("dimensions already validated")
    }
}

pub(crate) const NEIGHBORS_8: [(isize, isize); 8] = [
    (-1, -1),
    (0, -1),
    (1, -1),
    (-1, 0),
    (1, 0),
    (-1, 1),
    (0, 1),
    (1, 1),
];

/// Per-pixel gradient components, magnitude and direction.
#[derive(Debug, Clone, PartialEq)]
pub struct GradientField {
    pub width: usize,
    pub height: usize,
    pub gx: Vec<f64>,
    pub gy: Vec<f64>,
    pub magnitude: Vec<f64>,
    /// Degrees in [0, 180).
    pub direction: Vec<f64>,
    /// One of 0, 45, 90, 135.
    pub qdirection: Vec<u8>,
}

impl GradientField {
    /// Builds a field from gradient components.
    pub fn from_components(width: usize, height: usize, gx: Vec<f64>, gy: Vec<f64>) -> Self {
        let magnitude = gx
            .iter()
            .zip(&gy)
            .map(|(a, b)| (a * a + b * b).sqrt())
            .collect();
        let direction: Vec<f64> = gx
            .iter()
            .zip(&gy)
            .map(|(&a, &b)| direction_degrees(a, b))
            .collect();
        let qdirection = direction.iter().map(|&d| quantize_direction(d)).collect();
        Self {
            width,
            height,
            gx,
            gy,
            magnitude,
            direction,
            qdirection,
        }
    }

    pub fn max_magnitude(&self) -> f64 {
        self.magnitude.iter().copied().fold(0.0, f64::max)
    }
}

/// Gradient direction in degrees, reduced to [0, 180). Zero gradients map to 0.
pub fn direction_degrees(gx: f64, gy: f64) -> f64 {
    if gx == 0.0 && gy == 0.0 {
        return 0.0;
    }
    let d = gy.atan2(gx).to_degrees().rem_euclid(180.0);
    // rem_euclid can round up to exactly 180 for tiny negative inputs
    if d >= 180.0 {
        0.0
    } else {
        d
    }
}

/// Snaps an angle to 0, 45, 90 or 135 degrees.
///
/// The angle is reduced modulo 180 first; [157.5, 180) wraps to 0 and exact
/// midpoints go to the larger label.
pub fn quantize_direction(angle: f64) -> u8 {
    let a = angle.rem_euclid(180.0);
    if a < 22.5 {
        0
    } else if a < 67.5 {
        45
    } else if a < 112.5 {
        90
    } else if a < 157.5 {
        135
    } else {
        0
    }
}

fn sobel_x() -> Kernel {
    Kernel::new(3, vec![-1., 0., 1., -2., 0., 2., -1., 0., 1.]).expect("valid kernel")
}

fn sobel_y() -> Kernel {
    Kernel::new(3, vec![1., 2., 1., 0., 0., 0., -1., -2., -1.]).expect("valid kernel")
}

fn prewitt_x() -> Kernel {
    Kernel::new(3, vec![-1., 0., 1., -1., 0., 1., -1., 0., 1.]).expect("valid kernel")
}

fn prewitt_y() -> Kernel {
    Kernel::new(3, vec![1., 1., 1., 0., 0., 0., -1., -1., -1.]).expect("valid kernel")
}

fn require_size(frame: &FloatFrame, min_width: usize, min_height: usize) -> Result<()> {
    if frame.width() < min_width || frame.height() < min_height {
        return Err(Error::FrameTooSmall {
            width: frame.width(),
            height: frame.height(),
            min_width,
            min_height,
        });
    }
    Ok(())
}

pub fn sobel_gradients(frame: &FloatFrame) -> Result<GradientField> {
    require_size(frame, 3, 3)?;
    let gx = convolve(frame, &sobel_x())?.into_data();
    let gy = convolve(frame, &sobel_y())?.into_data();
    Ok(GradientField::from_components(frame.width(), frame.height(), gx, gy))
}

/// Offsets of the two neighbours along a quantized gradient direction,
/// in image coordinates (y down). The first is the one earlier in raster order.
fn direction_neighbors(q: u8) -> [(isize, isize); 2] {
    match q {
        0 => [(-1, 0), (1, 0)],
        45 => [(1, -1), (-1, 1)],
        90 => [(0, -1), (0, 1)],
        _ => [(-1, -1), (1, 1)],
    }
}

/// Thins the gradient magnitude to one-pixel ridges.
///
/// A pixel keeps its magnitude when it is at least as large as the
/// neighbour ahead of it in raster order and strictly larger than the one
/// behind it, both taken along its quantized direction. Equal-valued runs
/// therefore keep exactly their first pixel. Out-of-bounds neighbours are
/// ignored.
pub fn non_max_suppression(g: &GradientField) -> FloatFrame {
    let (w, h) = (g.width as isize, g.height as isize);
    FloatFrame::from_fn(g.width, g.height, |x, y| {
        let i = y * g.width + x;
        let m = g.magnitude[i];
        if m <= 0.0 {
            return 0.0;
        }
        let [before, after] = direction_neighbors(g.qdirection[i]);
        let sample = |(dx, dy): (isize, isize)| {
            let (nx, ny) = (x as isize + dx, y as isize + dy);
            (nx >= 0 && ny >= 0 && nx < w && ny < h).then(|| g.magnitude[(ny * w + nx) as usize])
        };
        let keep = sample(before).is_none_or(|b| m > b) && sample(after).is_none_or(|a| m >= a);
        if keep {
            m
        } else {
            0.0
        }
    })
}

/// Double-threshold edge tracking.
///
/// Pixels `>= high` are edges; pixels in `[low, high)` are edges when
/// 8-connected to a strong pixel through other pixels `>= low`. Zero pixels
/// are never edges.
pub fn hysteresis(thinned: &FloatFrame, low: f64, high: f64) -> Result<BinaryMap> {
    #[allow(clippy::neg_cmp_op_on_partial_ord)] // rejects NaN too
    if !(low <= high) {
        return Err(Error::param(format!("low threshold {low} above high {high}")));
    }
    let (w, h) = (thinned.width(), thinned.height());
    let v = thinned.data();
    let candidate = |i: usize| v[i] > 0.0 && v[i] >= low;
    let mut out = BinaryMap::new(w, h);
    let mut queue = VecDeque::new();
    for i in 0..v.len() {
        if candidate(i) && v[i] >= high {
            out.data[i] = true;
            queue.push_back(i);
        }
    }
    while let Some(i) = queue.pop_front() {
        let (x, y) = ((i % w) as isize, (i / w) as isize);
        for (dx, dy) in NEIGHBORS_8 {
            let (nx, ny) = (x + dx, y + dy);
            if nx < 0 || ny < 0 || nx >= w as isize || ny >= h as isize {
                continue;
            }
            let j = ny as usize * w + nx as usize;
            if !out.data[j] && candidate(j) {
                out.data[j] = true;
                queue.push_back(j);
            }
        }
    }
    Ok(out)
}

/// Canny thresholds (as fractions of the maximum gradient magnitude) and
/// the pre-smoothing applied before gradients.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CannyConfig {
    pub low: f64,
    pub high: f64,
    pub denoiser: DenoiserSpec,
}

impl Default for CannyConfig {
    fn default() -> Self {
        Self {
            low: 0.05,
            high: 0.15,
            denoiser: DenoiserSpec::gaussian_default(),
        }
    }
}

impl CannyConfig {
    pub fn validate(&self) -> Result<()> {
        if !(0.0 <= self.low && self.low < self.high && self.high <= 1.0) {
            return Err(Error::param(format!(
                "Canny thresholds need 0 <= low < high <= 1, got {} / {}",
                self.low, self.high
            )));
        }
        self.denoiser.validate()
    }
}

pub fn canny(frame: &FloatFrame, cfg: &CannyConfig) -> Result<BinaryMap> {
    cfg.validate()?;
    require_size(frame, 3, 3)?;
    let smoothed = denoise(frame, &cfg.denoiser)?;
    let grad = sobel_gradients(&smoothed)?;
    let max = grad.max_magnitude();
    // smoothing roundoff on flat input leaves gradients near 1e-15
    let scale = smoothed.data().iter().fold(1.0f64, |m, v| m.max(v.abs()));
    if max <= 1e-9 * scale {
        return Ok(BinaryMap::new(frame.width(), frame.height()));
    }
    let thinned = non_max_suppression(&grad);
    hysteresis(&thinned, cfg.low * max, cfg.high * max)
}

/// Classical single-threshold detectors.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BaselineKind {
    Prewitt,
    Roberts,
    Sobel,
    Log,
}

impl std::str::FromStr for BaselineKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "prewitt" => Ok(BaselineKind::Prewitt),
            "roberts" => Ok(BaselineKind::Roberts),
            "sobel" => Ok(BaselineKind::Sobel),
            "log" => Ok(BaselineKind::Log),
            other => Err(Error::param(format!("unknown detector kind '{other}'"))),
        }
    }
}

pub const LOG_SIZE: usize = 9;
pub const LOG_SIGMA: f64 = 1.4;

/// Zero-sum Laplacian-of-Gaussian kernel.
pub fn log_kernel(size: usize, sigma: f64) -> Result<Kernel> {
    if size == 0 || size.is_multiple_of(2) {
        return Err(Error::param(format!("kernel size must be odd, got {size}")));
    }
    let r = (size / 2) as isize;
    let s2 = sigma * sigma;
    let mut weights = Vec::with_capacity(size * size);
    for j in -r..=r {
        for i in -r..=r {
            let q = (i * i + j * j) as f64 / (2.0 * s2);
            weights.push((q - 1.0) / (std::f64::consts::PI * s2 * s2) * (-q).exp());
        }
    }
    let mean = weights.iter().sum::<f64>() / weights.len() as f64;
    weights.iter_mut().for_each(|w| *w -= mean);
    Kernel::new(size, weights)
}

/// Correlation with a kernel whose weights sum to zero, evaluated on
/// differences to the centre sample so flat regions give exactly zero.
fn zero_sum_response(frame: &FloatFrame, k: &Kernel) -> Vec<f64> {
    let r = (k.size() / 2) as isize;
    let mut out = Vec::with_capacity(frame.data().len());
    for y in 0..frame.height() as isize {
        for x in 0..frame.width() as isize {
            let c = frame.get_clamped(x, y);
            let mut acc = 0.0;
            for j in -r..=r {
                for i in -r..=r {
                    let w = k.at((j + r) as usize, (i + r) as usize);
                    acc += w * (frame.get_clamped(x + i, y + j) - c);
                }
            }
            out.push(acc);
        }
    }
    out
}

fn threshold_magnitude(width: usize, height: usize, mag: &[f64], threshold: f64) -> BinaryMap {
    let max = mag.iter().copied().fold(0.0, f64::max);
    let mut out = BinaryMap::new(width, height);
    if max > 0.0 {
        for (o, &m) in out.data.iter_mut().zip(mag) {
            *o = m > 0.0 && m >= threshold * max;
        }
    }
    out
}

fn roberts_magnitude(frame: &FloatFrame) -> Vec<f64> {
    let mut mag = Vec::with_capacity(frame.data().len());
    for y in 0..frame.height() as isize {
        for x in 0..frame.width() as isize {
            let a = frame.get_clamped(x, y);
            let b = frame.get_clamped(x + 1, y);
            let c = frame.get_clamped(x, y + 1);
            let d = frame.get_clamped(x + 1, y + 1);
            // [[1, 0], [0, -1]] and [[0, 1], [-1, 0]]
            let g1 = a - d;
            let g2 = b - c;
            mag.push((g1 * g1 + g2 * g2).sqrt());
        }
    }
    mag
}

/// Marks LoG zero crossings between horizontally or vertically adjacent
/// pixels whose contrast reaches `threshold` times the largest crossing
/// contrast. The pixel of the pair with the smaller absolute response is
/// marked (the first one on ties).
fn zero_crossings(width: usize, height: usize, resp: &[f64], threshold: f64) -> BinaryMap {
    let mut crossings = Vec::new();
    for y in 0..height {
        for x in 0..width {
            let i = y * width + x;
            let mut pair = |j: usize| {
                let (a, b) = (resp[i], resp[j]);
                if (a > 0.0 && b < 0.0) || (a < 0.0 && b > 0.0) {
                    let mark = if b.abs() < a.abs() { j } else { i };
                    crossings.push((mark, (a - b).abs()));
                }
            };
            if x + 1 < width {
                pair(i + 1);
            }
            if y + 1 < height {
                pair(i + width);
            }
        }
    }
    let max = crossings.iter().map(|c| c.1).fold(0.0, f64::max);
    let mut out = BinaryMap::new(width, height);
    if max > 0.0 {
        for (i, contrast) in crossings {
            if contrast >= threshold * max {
                out.data[i] = true;
            }
        }
    }
    out
}

/// Runs one of the baseline detectors with a threshold given as a fraction
/// of the strongest response.
pub fn baseline_detect(frame: &FloatFrame, kind: BaselineKind, threshold: f64) -> Result<BinaryMap> {
    if !(0.0..=1.0).contains(&threshold) {
        return Err(Error::param(format!("threshold must be in [0, 1], got {threshold}")));
    }
    let (w, h) = (frame.width(), frame.height());
    match kind {
        BaselineKind::Sobel | BaselineKind::Prewitt => {
            require_size(frame, 3, 3)?;
            let (kx, ky) = if kind == BaselineKind::Sobel {
                (sobel_x(), sobel_y())
            } else {
                (prewitt_x(), prewitt_y())
            };
            let gx = convolve(frame, &kx)?;
            let gy = convolve(frame, &ky)?;
            let mag: Vec<f64> = gx
                .data()
                .iter()
                .zip(gy.data())
                .map(|(a, b)| (a * a + b * b).sqrt())
                .collect();
            Ok(threshold_magnitude(w, h, &mag, threshold))
        }
        BaselineKind::Roberts => {
            require_size(frame, 2, 2)?;
            Ok(threshold_magnitude(w, h, &roberts_magnitude(frame), threshold))
        }
        BaselineKind::Log => {
            require_size(frame, LOG_SIZE / 2, LOG_SIZE / 2)?;
            let k = log_kernel(LOG_SIZE, LOG_SIGMA)?;
            let resp = zero_sum_response(frame, &k);
            Ok(zero_crossings(w, h, &resp, threshold))
        }
    }
}
