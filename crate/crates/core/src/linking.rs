//! Edge linking.
//!
//! Three rules are applied to the traced contours:
//!
//! * Type 1: an extremity of one open edge close to an extremity of another
//!   merges the two edges through straight bridge pixels.
//! * Type 2: an extremity close to the interior of another edge forms a
//!   T-junction. Geometry is left alone; the two edges become adjacent and
//!   the host gains a junction corner.
//! * Type 3: the two extremities of one open edge close to each other turn
//!   it into a loop.
//!
//! "Close" means Euclidean distance strictly below `gap_link`. Types 1 and 3
//! run first, nearest pair first; Type 2 runs on what is left.

use std::collections::{BTreeSet, HashMap, HashSet};

use serde::{Deserialize, Serialize};

use crate::contours::{bridge_points, Contour, ContourSet, CurveMode, Point};
use crate::corners::{corner_angle, Corner, CornerKind, MIN_TANGENT_SPAN};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LinkConfig {
    pub gap_link: f64,
}

impl Default for LinkConfig {
    fn default() -> Self {
        Self { gap_link: 3.0 }
    }
}

impl LinkConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.gap_link >= 0.0 && self.gap_link.is_finite()) {
            return Err(Error::param(format!("gap_link must be >= 0, got {}", self.gap_link)));
        }
        Ok(())
    }
}

/// Linked edges with their corners and T-junction adjacency.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EdgeGraph {
    pub edges: ContourSet,
    /// Sorted by (contour_index, point_index).
    pub corners: Vec<Corner>,
    pub adjacency: Vec<BTreeSet<usize>>,
    /// Pixels inserted by Type 1 and Type 3 links.
    pub bridge_points: usize,
}

impl EdgeGraph {
    /// Graph of unlinked contours.
    pub fn unlinked(edges: ContourSet, mut corners: Vec<Corner>) -> Self {
        corners.sort_by_key(|c| (c.contour_index, c.point_index));
        let adjacency = vec![BTreeSet::new(); edges.len()];
        Self {
            edges,
            corners,
            adjacency,
            bridge_points: 0,
        }
    }

    pub fn corners_of(&self, edge: usize) -> impl Iterator<Item = &Corner> {
        self.corners.iter().filter(move |c| c.contour_index == edge)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum End {
    Start,
    Finish,
}

struct Linker {
    edges: Vec<Option<Contour>>,
    corners: Vec<Vec<Corner>>,
    adjacency: Vec<BTreeSet<usize>>,
    alias: Vec<usize>,
    occupied: HashSet<Point>,
    bridged: usize,
}

impl Linker {
    fn find(&mut self, mut e: usize) -> usize {
        while self.alias[e] != e {
            self.alias[e] = self.alias[self.alias[e]];
            e = self.alias[e];
        }
        e
    }

    /// Current edge having `p` as an extremity, if that edge is still open.
    fn extremity(&mut self, orig: usize, p: Point) -> Option<(usize, End)> {
        let e = self.find(orig);
        let c = self.edges[e].as_ref()?;
        if c.mode != CurveMode::Line || c.is_empty() {
            return None;
        }
        if c.first() == p {
            Some((e, End::Start))
        } else if c.last() == p {
            Some((e, End::Finish))
        } else {
            None
        }
    }

    fn fresh_bridge(&mut self, a: Point, b: Point) -> Vec<Point> {
        let pts: Vec<Point> = bridge_points(a, b)
            .into_iter()
            .filter(|p| !self.occupied.contains(p))
            .collect();
        self.occupied.extend(pts.iter().copied());
        self.bridged += pts.len();
        pts
    }

    fn reverse_edge(&mut self, e: usize) {
        let c = self.edges[e].as_mut().expect("live edge");
        let n = c.len();
        c.reverse();
        for k in &mut self.corners[e] {
            k.point_index = n - 1 - k.point_index;
        }
    }

    fn merge(&mut self, (ea, enda): (usize, End), (eb, endb): (usize, End)) {
        // keep the lower id as the surviving edge
        let ((ea, enda), (eb, endb)) = if ea < eb {
            ((ea, enda), (eb, endb))
        } else {
            ((eb, endb), (ea, enda))
        };
        if enda == End::Start {
            self.reverse_edge(ea);
        }
        if endb == End::Finish {
            self.reverse_edge(eb);
        }
        let b = self.edges[eb].take().expect("live edge");
        let b_corners = std::mem::take(&mut self.corners[eb]);
        let a = self.edges[ea].as_ref().expect("live edge");
        let (p, q) = (a.last(), b.first());
        let len_a = a.len();
        let bridge = self.fresh_bridge(p, q);
        let offset = len_a + bridge.len();
        let junction = len_a - 1 + bridge.len().div_ceil(2);

        let a = self.edges[ea].as_mut().expect("live edge");
        a.points.extend(bridge);
        a.points.extend(b.points.iter().copied());
        a.end_tag = b.end_tag;

        let cs = &mut self.corners[ea];
        cs.retain(|c| c.point_index != len_a - 1);
        cs.extend(b_corners.into_iter().filter(|c| c.point_index != 0).map(|c| Corner {
            point_index: c.point_index + offset,
            ..c
        }));
        if !cs.iter().any(|c| c.point_index == junction) {
            cs.push(Corner {
                contour_index: ea,
                point_index: junction,
                angle: None,
                kind: CornerKind::Curvature,
            });
        }
        cs.sort_by_key(|c| c.point_index);

        let adj_b = std::mem::take(&mut self.adjacency[eb]);
        for other in adj_b {
            self.adjacency[other].remove(&eb);
            if other != ea {
                self.adjacency[other].insert(ea);
                self.adjacency[ea].insert(other);
            }
        }
        self.alias[eb] = ea;
    }

    fn close_loop(&mut self, e: usize) {
        let c = self.edges[e].as_ref().expect("live edge");
        let (p, q, n) = (c.last(), c.first(), c.len());
        let bridge = self.fresh_bridge(p, q);
        let c = self.edges[e].as_mut().expect("live edge");
        c.points.extend(bridge);
        c.mode = CurveMode::Loop;
        self.corners[e].retain(|k| !(k.kind == CornerKind::Endpoint && (k.point_index == 0 || k.point_index == n - 1)));
    }
}

fn cell(p: Point, size: i32) -> (i32, i32) {
    (p.x.div_euclid(size), p.y.div_euclid(size))
}

/// Applies the three linking rules until none fires.
///
/// Corners must reference contours of `set`; the result is a fixed point
/// (`link_edges` on its own output changes nothing).
pub fn link_edges(set: &ContourSet, corners: &[Corner], cfg: &LinkConfig) -> Result<EdgeGraph> {
    cfg.validate()?;
    let n = set.len();
    let mut per_edge = vec![Vec::new(); n];
    for c in corners {
        let Some(contour) = set.contours.get(c.contour_index) else {
            return Err(Error::IndexOutOfRange { index: c.contour_index, len: n });
        };
        if c.point_index >= contour.len() {
            return Err(Error::IndexOutOfRange { index: c.point_index, len: contour.len() });
        }
        per_edge[c.contour_index].push(*c);
    }
    let mut linker = Linker {
        edges: set.contours.iter().cloned().map(Some).collect(),
        corners: per_edge,
        adjacency: vec![BTreeSet::new(); n],
        alias: (0..n).collect(),
        occupied: set.contours.iter().flat_map(|c| c.points.iter().copied()).collect(),
        bridged: 0,
    };
    let size = cfg.gap_link.ceil().max(1.0) as i32;

    // extremity-to-extremity candidates, nearest first
    let mut ends: Vec<(Point, usize)> = Vec::new();
    for (i, c) in set.contours.iter().enumerate() {
        if c.mode == CurveMode::Line && !c.is_empty() {
            ends.push((c.first(), i));
            if c.len() > 1 {
                ends.push((c.last(), i));
            }
        }
    }
    let mut grid: HashMap<(i32, i32), Vec<usize>> = HashMap::new();
    for (k, (p, _)) in ends.iter().enumerate() {
        grid.entry(cell(*p, size)).or_default().push(k);
    }
    let mut pairs = Vec::new();
    for (k, &(p, ei)) in ends.iter().enumerate() {
        let (cx, cy) = cell(p, size);
        for dy in -1..=1 {
            for dx in -1..=1 {
                let Some(bucket) = grid.get(&(cx + dx, cy + dy)) else {
                    continue;
                };
                for &j in bucket {
                    if j <= k {
                        continue;
                    }
                    let (q, ej) = ends[j];
                    let d = p.distance(q);
                    if d < cfg.gap_link {
                        pairs.push((d, (ei, p), (ej, q)));
                    }
                }
            }
        }
    }
    pairs.sort_by(|a, b| {
        a.0.total_cmp(&b.0)
            .then((a.1 .0, a.2 .0).cmp(&(b.1 .0, b.2 .0)))
            .then((a.1 .1, a.2 .1).cmp(&(b.1 .1, b.2 .1)))
    });
    for (_, (ei, p), (ej, q)) in pairs {
        let (Some(a), Some(b)) = (linker.extremity(ei, p), linker.extremity(ej, q)) else {
            continue;
        };
        if a.0 == b.0 {
            if a.1 != b.1 && linker.edges[a.0].as_ref().is_some_and(|c| c.len() >= 3) {
                linker.close_loop(a.0);
            }
        } else {
            linker.merge(a, b);
        }
    }

    // extremity-to-interior junctions
    // cell -> (edge, point index, point)
    type Cell = Vec<(usize, usize, Point)>;
    let mut interior: HashMap<(i32, i32), Cell> = HashMap::new();
    for (e, c) in linker.edges.iter().enumerate() {
        let Some(c) = c else { continue };
        let open = c.mode == CurveMode::Line;
        for (i, p) in c.points.iter().enumerate() {
            if open && (i == 0 || i + 1 == c.len()) {
                continue;
            }
            interior.entry(cell(*p, size)).or_default().push((e, i, *p));
        }
    }
    let mut junctions = Vec::new();
    for (e, c) in linker.edges.iter().enumerate() {
        let Some(c) = c else { continue };
        if c.mode != CurveMode::Line || c.is_empty() {
            continue;
        }
        let mut extremities = vec![c.first()];
        if c.len() > 1 {
            extremities.push(c.last());
        }
        for p in extremities {
            let (cx, cy) = cell(p, size);
            let mut best: Option<(f64, usize, usize)> = None;
            for dy in -1..=1 {
                for dx in -1..=1 {
                    let Some(bucket) = interior.get(&(cx + dx, cy + dy)) else {
                        continue;
                    };
                    for &(host, idx, q) in bucket {
                        if host == e {
                            continue;
                        }
                        let d = p.distance(q);
                        if d >= cfg.gap_link {
                            continue;
                        }
                        let cand = (d, host, idx);
                        if best.is_none_or(|b| cand.0.total_cmp(&b.0).then((cand.1, cand.2).cmp(&(b.1, b.2))).is_lt()) {
                            best = Some(cand);
                        }
                    }
                }
            }
            if let Some((_, host, idx)) = best {
                junctions.push((e, host, idx));
            }
        }
    }
    for (e, host, idx) in junctions {
        linker.adjacency[e].insert(host);
        linker.adjacency[host].insert(e);
        let cs = &mut linker.corners[host];
        if !cs.iter().any(|c| c.point_index == idx) {
            cs.push(Corner {
                contour_index: host,
                point_index: idx,
                angle: None,
                kind: CornerKind::Junction,
            });
            cs.sort_by_key(|c| c.point_index);
        }
    }

    // compact
    let mut remap = vec![usize::MAX; n];
    let mut next = 0;
    for (e, c) in linker.edges.iter().enumerate() {
        if c.is_some() {
            remap[e] = next;
            next += 1;
        }
    }
    let mut edges = ContourSet::new(set.width, set.height);
    let mut out_corners = Vec::new();
    let mut adjacency = Vec::with_capacity(next);
    for e in 0..n {
        let Some(c) = linker.edges[e].take() else { continue };
        let id = remap[e];
        for k in &linker.corners[e] {
            let mut k = *k;
            k.contour_index = id;
            if k.kind != CornerKind::Endpoint && k.angle.is_none() {
                let span = MIN_TANGENT_SPAN * 2;
                k.angle = corner_angle(&c, k.point_index, (span, span)).ok();
            }
            out_corners.push(k);
        }
        adjacency.push(linker.adjacency[e].iter().map(|&o| remap[o]).collect());
        edges.contours.push(c);
    }
    Ok(EdgeGraph {
        edges,
        corners: out_corners,
        adjacency,
        bridge_points: linker.bridged,
    })
}
