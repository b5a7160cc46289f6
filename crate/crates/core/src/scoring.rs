//! Smoothness scoring of linked edges.
//!
//! Every edge is cut at its corners, each piece is fitted with a cubic by
//! least squares, and the residuals are summed. The edge score is
//!
//! ```text
//! ES = AR * W * L * M^2 / (N^2 * N' * phi)      AR = RSS / N
//! ```
//!
//! with `W x L` the frame size, `M` the corner count, `N` the edge length,
//! `N'` the length of the edge plus its T-junction neighbours and `phi` the
//! loop preference. Lower scores are better.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::contours::{CurveMode, Point};
use crate::error::{Error, Result};
use crate::linking::EdgeGraph;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ScoreConfig {
    pub phi_line: f64,
    pub phi_loop: f64,
    /// Number of best edges kept.
    pub et: usize,
}

impl Default for ScoreConfig {
    fn default() -> Self {
        Self {
            phi_line: 1.0,
            phi_loop: 2.0,
            et: 30,
        }
    }
}

impl ScoreConfig {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("phi_line", self.phi_line), ("phi_loop", self.phi_loop)] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::param(format!("{name} must be > 0, got {v}")));
            }
        }
        if self.et == 0 {
            return Err(Error::param("et must be >= 1"));
        }
        Ok(())
    }

    pub fn phi(&self, mode: CurveMode) -> f64 {
        match mode {
            CurveMode::Line => self.phi_line,
            CurveMode::Loop => self.phi_loop,
        }
    }
}

/// Independent variable of a fit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Axis {
    /// `y = f(x)`
    XMajor,
    /// `x = f(y)`
    YMajor,
}

/// `f(u) = a u^3 + b u^2 + c u + d` along `axis`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CubicFit {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub d: f64,
    pub axis: Axis,
}

impl CubicFit {
    pub fn eval(&self, u: f64) -> f64 {
        ((self.a * u + self.b) * u + self.c) * u + self.d
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScoredEdge {
    pub edge_index: usize,
    pub n: usize,
    pub m: usize,
    pub rss: f64,
    pub ar: f64,
    pub nprime: usize,
    pub phi: f64,
    pub es: f64,
}

fn split(points: &[Point], axis: Axis) -> (Vec<f64>, Vec<f64>) {
    points
        .iter()
        .map(|p| match axis {
            Axis::XMajor => (f64::from(p.x), f64::from(p.y)),
            Axis::YMajor => (f64::from(p.y), f64::from(p.x)),
        })
        .unzip()
}

/// Solves `a x = b` in place by Gaussian elimination with partial pivoting.
fn solve(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Result<Vec<f64>> {
    let n = b.len();
    for col in 0..n {
        let pivot = (col..n)
            .max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))
            .expect("non-empty");
        if a[pivot][col].abs() < 1e-300 {
            return Err(Error::DegenerateFit("singular normal equations".into()));
        }
        a.swap(col, pivot);
        b.swap(col, pivot);
        for row in col + 1..n {
            let f = a[row][col] / a[col][col];
            for k in col..n {
                a[row][k] -= f * a[col][k];
            }
            b[row] -= f * b[col];
        }
    }
    let mut x = vec![0.0; n];
    for row in (0..n).rev() {
        let s: f64 = (row + 1..n).map(|k| a[row][k] * x[k]).sum();
        x[row] = (b[row] - s) / a[row][row];
    }
    Ok(x)
}

/// Least-squares cubic with `axis` as the independent variable.
///
/// The degree drops to `distinct abscissae - 1` when there are fewer than
/// four distinct abscissae, so short segments fit exactly.
pub fn fit_cubic_along(points: &[Point], axis: Axis) -> Result<(CubicFit, f64)> {
    if points.len() < 2 {
        return Err(Error::DegenerateFit(format!("{} points", points.len())));
    }
    let (u, v) = split(points, axis);
    let mut distinct = u.clone();
    distinct.sort_by(f64::total_cmp);
    distinct.dedup();
    if distinct.len() < 2 {
        return Err(Error::DegenerateFit("no spread along the independent axis".into()));
    }
    let degree = (distinct.len() - 1).min(3);
    // integer shift and power-of-two scale keep t exact, so the normal
    // equations below are formed without rounding
    let mean = (u.iter().sum::<f64>() / u.len() as f64).round();
    let spread = u.iter().map(|x| (x - mean).abs()).fold(0.0, f64::max);
    let scale = 2f64.powi(spread.log2().ceil() as i32);
    let t: Vec<f64> = u.iter().map(|x| (x - mean) / scale).collect();

    let k = degree + 1;
    let basis = |ti: f64| -> Vec<f64> { (0..k).map(|e| ti.powi(e as i32)).collect() };
    let mut ata = vec![vec![0.0; k]; k];
    for ti in &t {
        let p = basis(*ti);
        for r in 0..k {
            for c in 0..k {
                ata[r][c] += p[r] * p[c];
            }
        }
    }
    let eval = |beta: &[f64], ti: f64| beta.iter().rev().fold(0.0, |acc, b| acc * ti + b);
    let rhs = |resid: &[f64]| -> Vec<f64> {
        let mut out = vec![0.0; k];
        for (ti, ri) in t.iter().zip(resid) {
            for (o, p) in out.iter_mut().zip(basis(*ti)) {
                *o += p * ri;
            }
        }
        out
    };
    let mut beta = solve(ata.clone(), rhs(&v))?;
    // one step of iterative refinement on the residual
    let resid: Vec<f64> = t.iter().zip(&v).map(|(ti, vi)| vi - eval(&beta, *ti)).collect();
    let delta = solve(ata, rhs(&resid))?;
    beta.iter_mut().zip(&delta).for_each(|(b, d)| *b += d);
    let rss = t.iter().zip(&v).map(|(ti, vi)| (vi - eval(&beta, *ti)).powi(2)).sum();

    // expand sum beta_j ((u - mean) / scale)^j into powers of u
    let mut coef = [0.0f64; 4];
    for (j, bj) in beta.iter().enumerate() {
        let w = bj / scale.powi(j as i32);
        for (i, c) in coef.iter_mut().enumerate().take(j + 1) {
            *c += w * binomial(j, i) * (-mean).powi((j - i) as i32);
        }
    }
    let fit = CubicFit {
        a: coef[3],
        b: coef[2],
        c: coef[1],
        d: coef[0],
        axis,
    };
    Ok((fit, rss))
}

fn binomial(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// Least-squares cubic along the axis with the larger coordinate span
/// (x on ties), with its residual sum of squares.
pub fn fit_cubic(points: &[Point]) -> Result<(CubicFit, f64)> {
    if points.is_empty() {
        return Err(Error::DegenerateFit("0 points".into()));
    }
    let span = |f: fn(&Point) -> i32| {
        let lo = points.iter().map(f).min().unwrap_or(0);
        let hi = points.iter().map(f).max().unwrap_or(0);
        hi - lo
    };
    let (sx, sy) = (span(|p| p.x), span(|p| p.y));
    if sx == 0 && sy == 0 {
        return Err(Error::DegenerateFit("all points coincide".into()));
    }
    fit_cubic_along(points, if sx >= sy { Axis::XMajor } else { Axis::YMajor })
}

/// Total residual of the segments between consecutive corners and the
/// average residual per edge pixel.
pub fn edge_rss(points: &[Point], corner_indices: &[usize]) -> Result<(f64, f64)> {
    if corner_indices.len() < 2 {
        return Err(Error::Inconsistent(format!("edge has {} corners", corner_indices.len())));
    }
    if let Some(&bad) = corner_indices.iter().find(|&&i| i >= points.len()) {
        return Err(Error::IndexOutOfRange { index: bad, len: points.len() });
    }
    let mut rss = 0.0;
    for w in corner_indices.windows(2) {
        let (i, j) = (w[0], w[1]);
        if j <= i {
            return Err(Error::Inconsistent("corner indices not increasing".into()));
        }
        rss += fit_cubic(&points[i..=j])?.1;
    }
    Ok((rss, rss / points.len() as f64))
}

/// Edge score from its factors. Lower is better.
pub fn edge_score(ar: f64, m: usize, n: usize, nprime: usize, phi: f64, width: usize, height: usize) -> Result<f64> {
    if n == 0 || nprime == 0 {
        return Err(Error::param("edge score needs N > 0 and N' > 0"));
    }
    let (n, nprime, m) = (n as f64, nprime as f64, m as f64);
    Ok(ar * width as f64 * height as f64 * m * m / (n * n * nprime * phi))
}

/// Sorted, de-duplicated corner point indices per edge.
///
/// Loops always include their first and last points. A line whose
/// extremities are not corners is inconsistent.
pub fn assign_corners(graph: &EdgeGraph) -> Result<Vec<Vec<usize>>> {
    let mut out: Vec<Vec<usize>> = vec![Vec::new(); graph.edges.len()];
    for c in &graph.corners {
        let Some(list) = out.get_mut(c.contour_index) else {
            return Err(Error::IndexOutOfRange { index: c.contour_index, len: graph.edges.len() });
        };
        list.push(c.point_index);
    }
    for (e, list) in out.iter_mut().enumerate() {
        let edge = &graph.edges.contours[e];
        let n = edge.len();
        if edge.mode == CurveMode::Loop {
            list.push(0);
            list.push(n.saturating_sub(1));
        }
        list.sort_unstable();
        list.dedup();
        if list.len() < 2 || list[0] != 0 || *list.last().unwrap() != n - 1 {
            return Err(Error::Inconsistent(format!("edge {e} extremities are not corners")));
        }
    }
    Ok(out)
}

/// Scores every edge of the graph, in edge order.
pub fn score_edges(graph: &EdgeGraph, cfg: &ScoreConfig) -> Result<Vec<ScoredEdge>> {
    cfg.validate()?;
    let assigned = assign_corners(graph)?;
    let (w, h) = (graph.edges.width, graph.edges.height);
    assigned
        .par_iter()
        .enumerate()
        .map(|(e, corners)| {
            let edge = &graph.edges.contours[e];
            let (rss, ar) = edge_rss(&edge.points, corners)?;
            let n = edge.len();
            let nprime = n + graph.adjacency[e].iter().map(|&o| graph.edges.contours[o].len()).sum::<usize>();
            let phi = cfg.phi(edge.mode);
            let m = corners.len();
            let es = edge_score(ar, m, n, nprime, phi, w, h)?;
            Ok(ScoredEdge { edge_index: e, n, m, rss, ar, nprime, phi, es })
        })
        .collect()
}

/// Edge indices in rank order: ascending score, then ascending index.
pub fn rank(scored: &[ScoredEdge]) -> Vec<usize> {
    let mut order: Vec<&ScoredEdge> = scored.iter().collect();
    order.sort_by(|a, b| a.es.total_cmp(&b.es).then(a.edge_index.cmp(&b.edge_index)));
    order.into_iter().map(|s| s.edge_index).collect()
}

/// The `et` best edges in rank order (all of them when `et` is larger).
pub fn rank_and_filter(scored: &[ScoredEdge], et: usize) -> Vec<ScoredEdge> {
    let mut sorted = scored.to_vec();
    sorted.sort_by(|a, b| a.es.total_cmp(&b.es).then(a.edge_index.cmp(&b.edge_index)));
    sorted.truncate(et);
    sorted
}
