//! Curvature-based corner detection on traced contours.
//!
//! Contour coordinates are smoothed with a 1-D Gaussian, curvature is taken
//! from central differences, and local maxima of |K| become candidates.
//! Each candidate's region of support (ROS) runs to the nearest curvature
//! minimum on either side. Candidates are rejected when their curvature is
//! below `R` times the mean |K| of the ROS (round corners) or when the angle
//! between the tangents towards the two ROS ends is wider than
//! `theta_obtuse` (false corners). Endpoints of open contours are always
//! corners.

use serde::{Deserialize, Serialize};

use crate::contours::{Contour, ContourSet, CurveMode, Point};
use crate::error::{Error, Result};

/// Minimum number of points on each side used for a tangent fit.
pub const MIN_TANGENT_SPAN: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GlcpParams {
    /// Round-corner ratio applied to the ROS mean curvature.
    pub r: f64,
    /// Corners wider than this (degrees) are discarded.
    pub theta_obtuse: f64,
    /// Gaussian sigma, in contour points, for coordinate smoothing.
    pub smooth_sigma: f64,
}

impl Default for GlcpParams {
    fn default() -> Self {
        Self {
            r: 1.5,
            theta_obtuse: 162.0,
            smooth_sigma: 3.0,
        }
    }
}

impl GlcpParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.r >= 1.0 && self.r.is_finite()) {
            return Err(Error::param(format!("R must be >= 1, got {}", self.r)));
        }
        if !(self.theta_obtuse > 90.0 && self.theta_obtuse < 180.0) {
            return Err(Error::param(format!(
                "theta_obtuse must be in (90, 180), got {}",
                self.theta_obtuse
            )));
        }
        if !(self.smooth_sigma >= 0.0 && self.smooth_sigma.is_finite()) {
            return Err(Error::param("smooth_sigma must be >= 0"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CornerKind {
    /// Curvature maximum that survived both filters, or a merge point.
    Curvature,
    /// Extremity of an edge.
    Endpoint,
    /// Point where another edge's ending meets this edge.
    Junction,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Corner {
    pub contour_index: usize,
    pub point_index: usize,
    /// Included angle in degrees; `None` where no angle is defined (endpoints).
    pub angle: Option<f64>,
    pub kind: CornerKind,
}

/// Curvature of every point of one contour.
#[derive(Debug, Clone, PartialEq)]
pub struct CurvatureProfile {
    pub values: Vec<f64>,
    pub mode: CurveMode,
}

impl CurvatureProfile {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    fn abs(&self, i: isize) -> f64 {
        self.values[wrap_or_clamp(i, self.len(), self.mode)].abs()
    }
}

fn wrap_or_clamp(i: isize, n: usize, mode: CurveMode) -> usize {
    match mode {
        CurveMode::Loop => i.rem_euclid(n as isize) as usize,
        CurveMode::Line => i.clamp(0, n as isize - 1) as usize,
    }
}

fn smooth(values: &[f64], sigma: f64, mode: CurveMode) -> Vec<f64> {
    if sigma <= 0.0 {
        return values.to_vec();
    }
    let radius = (3.0 * sigma).ceil() as isize;
    let weights: Vec<f64> = (0..=radius)
        .map(|k| (-((k * k) as f64) / (2.0 * sigma * sigma)).exp())
        .collect();
    let total = weights[0] + 2.0 * weights[1..].iter().sum::<f64>();
    let n = values.len();
    // symmetric pairs keep the result bit-identical under reversal
    (0..n as isize)
        .map(|i| {
            let mut acc = weights[0] * values[i as usize];
            for (k, w) in weights.iter().enumerate().skip(1) {
                let k = k as isize;
                acc += w * (values[wrap_or_clamp(i - k, n, mode)] + values[wrap_or_clamp(i + k, n, mode)]);
            }
            acc / total
        })
        .collect()
}

/// Curvature of a contour after Gaussian smoothing of its coordinates.
///
/// `K = (x' y'' - x'' y') / (x'^2 + y'^2)^1.5` with central differences.
/// Loops are padded circularly, lines by replicating their ends. Points
/// where the first derivative vanishes get zero curvature.
pub fn curvature(contour: &Contour, smooth_sigma: f64) -> Result<CurvatureProfile> {
    if contour.len() < 5 {
        return Err(Error::ContourTooShort {
            len: contour.len(),
            min: 5,
        });
    }
    let mode = contour.mode;
    let xs: Vec<f64> = contour.points.iter().map(|p| f64::from(p.x)).collect();
    let ys: Vec<f64> = contour.points.iter().map(|p| f64::from(p.y)).collect();
    let xs = smooth(&xs, smooth_sigma, mode);
    let ys = smooth(&ys, smooth_sigma, mode);
    let n = xs.len();
    let values = (0..n as isize)
        .map(|i| {
            let prev = wrap_or_clamp(i - 1, n, mode);
            let next = wrap_or_clamp(i + 1, n, mode);
            let c = i as usize;
            let dx = (xs[next] - xs[prev]) / 2.0;
            let dy = (ys[next] - ys[prev]) / 2.0;
            let ddx = (xs[next] + xs[prev]) - 2.0 * xs[c];
            let ddy = (ys[next] + ys[prev]) - 2.0 * ys[c];
            let denom = (dx * dx + dy * dy).powf(1.5);
            if denom == 0.0 {
                0.0
            } else {
                (dx * ddy - ddx * dy) / denom
            }
        })
        .collect();
    Ok(CurvatureProfile { values, mode })
}

/// `R` times the mean |K| over indices `u - l2 ..= u + l1`.
///
/// Loop profiles wrap; line profiles require the window to lie inside.
pub fn adaptive_threshold(profile: &CurvatureProfile, u: usize, ros: (usize, usize), r: f64) -> Result<f64> {
    let n = profile.len();
    let (l1, l2) = ros;
    if n == 0 || u >= n {
        return Err(Error::param("empty region of support"));
    }
    if profile.mode == CurveMode::Line && (u < l2 || u + l1 >= n) {
        return Err(Error::param(format!(
            "region of support [{}, {}] leaves the contour of {n} points",
            u as isize - l2 as isize,
            u + l1
        )));
    }
    let lo = u as isize - l2 as isize;
    let hi = (u + l1) as isize;
    let mut window: Vec<f64> = (lo..=hi).map(|i| profile.abs(i)).collect();
    window.sort_by(f64::total_cmp);
    let sum: f64 = window.iter().sum();
    Ok(r * sum / (l1 + l2 + 1) as f64)
}

/// Included angle between two tangent directions (radians in, degrees out).
///
/// `|g1 - g2|` when below pi, otherwise `2 pi - |g1 - g2|`.
pub fn included_angle(gamma1: f64, gamma2: f64) -> f64 {
    let diff = (gamma1 - gamma2).abs();
    let a = if diff < std::f64::consts::PI {
        diff
    } else {
        2.0 * std::f64::consts::PI - diff
    };
    a.to_degrees()
}

/// Direction (radians, [0, 2 pi)) of the least-squares line through `pts`,
/// oriented from `origin` towards the points.
fn tangent_direction(origin: Point, pts: &[Point]) -> Result<f64> {
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| f64::from(p.x)).sum::<f64>() / n;
    let my = pts.iter().map(|p| f64::from(p.y)).sum::<f64>() / n;
    let (mut sxx, mut syy, mut sxy) = (0.0, 0.0, 0.0);
    for p in pts {
        let dx = f64::from(p.x) - mx;
        let dy = f64::from(p.y) - my;
        sxx += dx * dx;
        syy += dy * dy;
        sxy += dx * dy;
    }
    if sxx + syy == 0.0 {
        return Err(Error::DegenerateFit("tangent points coincide".into()));
    }
    let theta = 0.5 * (2.0 * sxy).atan2(sxx - syy);
    let (mut ux, mut uy) = (theta.cos(), theta.sin());
    let ox = mx - f64::from(origin.x);
    let oy = my - f64::from(origin.y);
    if ux * ox + uy * oy < 0.0 {
        ux = -ux;
        uy = -uy;
    }
    Ok(uy.atan2(ux).rem_euclid(2.0 * std::f64::consts::PI))
}

fn side_points(contour: &Contour, idx: usize, span: usize, forward: bool) -> Vec<Point> {
    let n = contour.len() as isize;
    let span = match contour.mode {
        CurveMode::Loop => span.min(contour.len() / 2),
        CurveMode::Line if forward => span.min(contour.len() - 1 - idx),
        CurveMode::Line => span.min(idx),
    } as isize;
    let step = if forward { 1 } else { -1 };
    (0..=span)
        .map(|k| contour.points[(idx as isize + step * k).rem_euclid(n) as usize])
        .collect()
}

/// Angle at `idx` between least-squares tangents fitted from the point to
/// each end of its region of support, in degrees.
///
/// Each side uses at least [`MIN_TANGENT_SPAN`] points beyond `idx`, clamped
/// at the ends of open contours.
pub fn corner_angle(contour: &Contour, idx: usize, ros: (usize, usize)) -> Result<f64> {
    if idx >= contour.len() {
        return Err(Error::IndexOutOfRange {
            index: idx,
            len: contour.len(),
        });
    }
    let (l1, l2) = ros;
    let origin = contour.points[idx];
    let fwd = side_points(contour, idx, l1.max(MIN_TANGENT_SPAN), true);
    let bwd = side_points(contour, idx, l2.max(MIN_TANGENT_SPAN), false);
    let g1 = tangent_direction(origin, &fwd)?;
    let g2 = tangent_direction(origin, &bwd)?;
    Ok(included_angle(g1, g2))
}

/// Indices of strict local maxima of |K|; equal-valued runs count once, at
/// their centre (lower index on ties). Open contours exclude their ends.
pub fn curvature_maxima(profile: &CurvatureProfile) -> Vec<usize> {
    let n = profile.len();
    let v: Vec<f64> = profile.values.iter().map(|k| k.abs()).collect();
    let mut out = Vec::new();
    match profile.mode {
        CurveMode::Line => {
            let mut i = 1;
            while i + 1 < n {
                let mut j = i;
                while j + 1 < n && v[j + 1] == v[i] {
                    j += 1;
                }
                if j + 1 < n && v[i] > v[i - 1] && v[j] > v[j + 1] {
                    out.push(i + (j - i) / 2);
                }
                i = j + 1;
            }
        }
        CurveMode::Loop => {
            // start right after a value change so runs are not split
            let Some(start) = (0..n).find(|&i| v[i] != v[(i + n - 1) % n]) else {
                return out;
            };
            let mut k = 0;
            while k < n {
                let i = (start + k) % n;
                let mut len = 1;
                while len < n && v[(i + len) % n] == v[i] {
                    len += 1;
                }
                let before = v[(i + n - 1) % n];
                let after = v[(i + len) % n];
                if v[i] > before && v[i] > after {
                    out.push((i + (len - 1) / 2) % n);
                }
                k += len;
            }
            out.sort_unstable();
        }
    }
    out
}

fn is_minimum(v: &[f64], i: usize, mode: CurveMode) -> bool {
    let n = v.len();
    match mode {
        CurveMode::Line => i > 0 && i + 1 < n && v[i] <= v[i - 1] && v[i] <= v[i + 1],
        CurveMode::Loop => v[i] <= v[(i + n - 1) % n] && v[i] <= v[(i + 1) % n],
    }
}

/// Region of support of `u` as (points ahead, points behind): the distance
/// to the nearest non-strict curvature minimum on each side. Open contours
/// fall back to their ends; loops search once around and fall back to half
/// the loop.
pub fn region_of_support(profile: &CurvatureProfile, u: usize) -> (usize, usize) {
    let n = profile.len();
    let v: Vec<f64> = profile.values.iter().map(|k| k.abs()).collect();
    match profile.mode {
        CurveMode::Line => {
            let ahead = (u + 1..n).find(|&i| is_minimum(&v, i, CurveMode::Line)).unwrap_or(n - 1) - u;
            let behind = u - (0..u).rev().find(|&i| is_minimum(&v, i, CurveMode::Line)).unwrap_or(0);
            (ahead, behind)
        }
        CurveMode::Loop => {
            let half = (n - 1) / 2;
            let ahead = (1..n)
                .find(|&k| is_minimum(&v, (u + k) % n, CurveMode::Loop))
                .unwrap_or(half);
            let behind = (1..n)
                .find(|&k| is_minimum(&v, (u + n - k) % n, CurveMode::Loop))
                .unwrap_or(half);
            (ahead.min(half.max(1)), behind.min(half.max(1)))
        }
    }
}

/// Corners of a single contour, in point order.
pub fn contour_corners(contour: &Contour, contour_index: usize, params: &GlcpParams) -> Vec<Corner> {
    let mut out = Vec::new();
    if contour.len() >= 5 {
        if let Ok(profile) = curvature(contour, params.smooth_sigma) {
            for u in curvature_maxima(&profile) {
                let ros = region_of_support(&profile, u);
                let Ok(threshold) = adaptive_threshold(&profile, u, ros, params.r) else {
                    continue;
                };
                if profile.values[u].abs() < threshold {
                    continue;
                }
                let Ok(angle) = corner_angle(contour, u, ros) else {
                    continue;
                };
                if angle > params.theta_obtuse {
                    continue;
                }
                out.push(Corner {
                    contour_index,
                    point_index: u,
                    angle: Some(angle),
                    kind: CornerKind::Curvature,
                });
            }
        }
    }
    if contour.mode == CurveMode::Line && !contour.is_empty() {
        for point_index in [0, contour.len() - 1] {
            if out.iter().any(|c| c.point_index == point_index) {
                continue;
            }
            out.push(Corner {
                contour_index,
                point_index,
                angle: None,
                kind: CornerKind::Endpoint,
            });
        }
    }
    out.sort_by_key(|c| c.point_index);
    out
}

/// Corners of every contour, sorted by (contour, point) index.
pub fn detect_corners(set: &ContourSet, params: &GlcpParams) -> Result<Vec<Corner>> {
    params.validate()?;
    Ok(set
        .contours
        .iter()
        .enumerate()
        .flat_map(|(i, c)| contour_corners(c, i, params))
        .collect())
}
