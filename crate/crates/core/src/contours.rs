//! Contour extraction from a binary edge map.
//!
//! Edge pixels are traced along 8-connected neighbours into ordered
//! contours. Small gaps at dead ends are bridged, branch points stop the
//! trace, and each contour is classified as an open line or a closed loop
//! from the distance between its first and last points.

use serde::{Deserialize, Serialize};

use crate::detectors::{BinaryMap, NEIGHBORS_8};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Point {
    pub x: i32,
    pub y: i32,
}

impl Point {
    pub const fn new(x: i32, y: i32) -> Self {
        Self { x, y }
    }

    pub fn distance(self, other: Point) -> f64 {
        let dx = f64::from(self.x - other.x);
        let dy = f64::from(self.y - other.y);
        dx.hypot(dy)
    }

    pub fn chebyshev(self, other: Point) -> i32 {
        (self.x - other.x).abs().max((self.y - other.y).abs())
    }
}

impl Serialize for Point {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        [self.x, self.y].serialize(s)
    }
}

impl<'de> Deserialize<'de> for Point {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let [x, y] = <[i32; 2]>::deserialize(d)?;
        Ok(Point { x, y })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CurveMode {
    Line,
    Loop,
}

/// How a contour extremity terminates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EndTag {
    Endpoint,
    /// Ends on a branch point or against an already extracted contour.
    TJunction,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Contour {
    pub points: Vec<Point>,
    pub mode: CurveMode,
    pub start_tag: EndTag,
    pub end_tag: EndTag,
}

impl Contour {
    /// Open contour with endpoint tags.
    pub fn line(points: Vec<Point>) -> Self {
        Self {
            points,
            mode: CurveMode::Line,
            start_tag: EndTag::Endpoint,
            end_tag: EndTag::Endpoint,
        }
    }

    pub fn closed(points: Vec<Point>) -> Self {
        Self {
            mode: CurveMode::Loop,
            ..Self::line(points)
        }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn is_loop(&self) -> bool {
        self.mode == CurveMode::Loop
    }

    pub fn first(&self) -> Point {
        self.points[0]
    }

    pub fn last(&self) -> Point {
        self.points[self.points.len() - 1]
    }

    /// Reverses traversal direction, swapping the end tags.
    pub fn reverse(&mut self) {
        self.points.reverse();
        std::mem::swap(&mut self.start_tag, &mut self.end_tag);
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContourSet {
    pub contours: Vec<Contour>,
    pub width: usize,
    pub height: usize,
}

impl ContourSet {
    pub fn new(width: usize, height: usize) -> Self {
        Self {
            contours: Vec::new(),
            width,
            height,
        }
    }

    pub fn len(&self) -> usize {
        self.contours.len()
    }

    pub fn is_empty(&self) -> bool {
        self.contours.is_empty()
    }

    pub fn total_points(&self) -> usize {
        self.contours.iter().map(Contour::len).sum()
    }

    /// Rasterizes every contour point; points outside the frame are dropped.
    pub fn render(&self) -> BinaryMap {
        let mut map = BinaryMap::new(self.width, self.height);
        for c in &self.contours {
            for p in &c.points {
                if p.x >= 0 && p.y >= 0 && (p.x as usize) < self.width && (p.y as usize) < self.height {
                    map.set(p.x as usize, p.y as usize, true);
                }
            }
        }
        map
    }
}

/// Tracing parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ContourParams {
    /// Chebyshev radius searched for a continuation when a trace dead-ends.
    pub gap_fill_radius: usize,
    /// Contours with fewer points are discarded.
    pub min_length: usize,
    /// First/last distance below which a contour is a loop.
    pub loop_threshold: f64,
}

impl Default for ContourParams {
    fn default() -> Self {
        Self {
            gap_fill_radius: 2,
            min_length: 5,
            loop_threshold: 3.0,
        }
    }
}

impl ContourParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.loop_threshold.is_finite() && self.loop_threshold >= 0.0) {
            return Err(Error::param("loop threshold must be >= 0"));
        }
        Ok(())
    }
}

/// Loop when the first and last points are strictly closer than `threshold`.
pub fn classify_mode(contour: &Contour, threshold: f64) -> Result<CurveMode> {
    if contour.len() < 2 {
        return Err(Error::ContourTooShort {
            len: contour.len(),
            min: 2,
        });
    }
    Ok(if contour.first().distance(contour.last()) < threshold {
        CurveMode::Loop
    } else {
        CurveMode::Line
    })
}

/// Integer points strictly between `a` and `b` on the Bresenham line.
pub fn bridge_points(a: Point, b: Point) -> Vec<Point> {
    let mut out = Vec::new();
    let (dx, dy) = ((b.x - a.x).abs(), -(b.y - a.y).abs());
    let (sx, sy) = ((b.x - a.x).signum(), (b.y - a.y).signum());
    let (mut x, mut y) = (a.x, a.y);
    let mut err = dx + dy;
    loop {
        if x == b.x && y == b.y {
            break;
        }
        let e2 = 2 * err;
        if e2 >= dy {
            err += dy;
            x += sx;
        }
        if e2 <= dx {
            err += dx;
            y += sy;
        }
        if x == b.x && y == b.y {
            break;
        }
        out.push(Point::new(x, y));
    }
    out
}

// Continuation preference: 4-neighbours first so staircase pixels are not
// skipped, then diagonals.
const STEP_ORDER: [(isize, isize); 8] = [
    (0, -1),
    (1, 0),
    (0, 1),
    (-1, 0),
    (1, -1),
    (1, 1),
    (-1, 1),
    (-1, -1),
];

struct Tracer<'a> {
    map: &'a BinaryMap,
    params: &'a ContourParams,
    visited: Vec<bool>,
    /// Bridge pixels already used by some contour.
    bridged: Vec<bool>,
    /// Index of the kept contour owning each pixel.
    owner: Vec<Option<usize>>,
    /// Branch points where a trace stopped.
    junction: Vec<bool>,
}

impl Tracer<'_> {
    fn idx(&self, p: Point) -> usize {
        p.y as usize * self.map.width() + p.x as usize
    }

    fn in_bounds(&self, x: isize, y: isize) -> bool {
        x >= 0 && y >= 0 && (x as usize) < self.map.width() && (y as usize) < self.map.height()
    }

    fn is_free(&self, x: isize, y: isize) -> bool {
        self.in_bounds(x, y) && self.map.get(x as usize, y as usize) && !self.visited[y as usize * self.map.width() + x as usize]
    }

    fn near_junction(&self, p: Point) -> bool {
        NEIGHBORS_8.iter().any(|(dx, dy)| {
            let (x, y) = (p.x as isize + dx, p.y as isize + dy);
            self.in_bounds(x, y) && self.junction[y as usize * self.map.width() + x as usize]
        })
    }

    fn free_neighbors(&self, p: Point) -> Vec<Point> {
        STEP_ORDER
            .iter()
            .filter(|(dx, dy)| self.is_free(p.x as isize + dx, p.y as isize + dy))
            .map(|(dx, dy)| Point::new(p.x + *dx as i32, p.y + *dy as i32))
            .collect()
    }

    /// Nearest free pixel within the gap radius, Euclidean, ties in raster order.
    fn gap_candidate(&self, p: Point) -> Option<Point> {
        let r = self.params.gap_fill_radius as i32;
        let mut best: Option<(i32, Point)> = None;
        for dy in -r..=r {
            for dx in -r..=r {
                let q = Point::new(p.x + dx, p.y + dy);
                if !self.is_free(q.x as isize, q.y as isize) {
                    continue;
                }
                let d2 = dx * dx + dy * dy;
                if best.is_none_or(|(bd, _)| d2 < bd) {
                    best = Some((d2, q));
                }
            }
        }
        best.map(|(_, q)| q)
    }

    /// Extends `path` from its last point; returns true when stopped at or
    /// next to a branch point.
    fn walk(&mut self, path: &mut Vec<Point>, mut allow_branch_at_start: bool) -> bool {
        loop {
            let cur = *path.last().expect("path never empty");
            let free = self.free_neighbors(cur);
            if free.is_empty() {
                let Some(q) = self.gap_candidate(cur) else {
                    return false;
                };
                for b in bridge_points(cur, q) {
                    let i = self.idx(b);
                    if self.map.get(b.x as usize, b.y as usize) || self.bridged[i] || path.contains(&b) {
                        continue;
                    }
                    self.bridged[i] = true;
                    path.push(b);
                }
                let i = self.idx(q);
                self.visited[i] = true;
                path.push(q);
                if self.near_junction(q) {
                    return true;
                }
                allow_branch_at_start = false;
                continue;
            }
            if branch_count(&free) >= 2 && !allow_branch_at_start {
                let i = self.idx(cur);
                self.junction[i] = true;
                return true;
            }
            allow_branch_at_start = false;
            let next = free[0];
            let i = self.idx(next);
            self.visited[i] = true;
            path.push(next);
            if self.near_junction(next) {
                return true;
            }
        }
    }

    fn touches_other(&self, p: Point, own: usize) -> bool {
        NEIGHBORS_8.iter().any(|(dx, dy)| {
            let (x, y) = (p.x as isize + dx, p.y as isize + dy);
            self.in_bounds(x, y)
                && matches!(self.owner[y as usize * self.map.width() + x as usize], Some(o) if o != own)
        })
    }
}

/// Number of 4-connected groups among a pixel's free neighbours. Diagonal
/// contact does not join groups, so a branch leaving a straight run is seen
/// even when it touches the run's next pixel diagonally.
fn branch_count(pixels: &[Point]) -> usize {
    let mut group = vec![usize::MAX; pixels.len()];
    let mut groups = 0;
    for s in 0..pixels.len() {
        if group[s] != usize::MAX {
            continue;
        }
        group[s] = groups;
        let mut stack = vec![s];
        while let Some(i) = stack.pop() {
            for j in 0..pixels.len() {
                if group[j] == usize::MAX && manhattan(pixels[i], pixels[j]) == 1 {
                    group[j] = groups;
                    stack.push(j);
                }
            }
        }
        groups += 1;
    }
    groups
}

fn manhattan(a: Point, b: Point) -> i32 {
    (a.x - b.x).abs() + (a.y - b.y).abs()
}

/// Traces all contours of `map`.
///
/// Pixels with at most one edge neighbour seed traces first, in raster
/// order, then any remaining pixels (closed curves). Each trace runs in both
/// directions from its seed, bridging dead ends to the nearest unvisited
/// edge pixel within `gap_fill_radius`, and stops at branch points.
pub fn extract_contours(map: &BinaryMap, params: &ContourParams) -> Result<ContourSet> {
    params.validate()?;
    let (w, h) = (map.width(), map.height());
    let mut tracer = Tracer {
        map,
        params,
        visited: vec![false; w * h],
        bridged: vec![false; w * h],
        owner: vec![None; w * h],
        junction: vec![false; w * h],
    };

    let mut seeds: Vec<Point> = Vec::new();
    let mut rest: Vec<Point> = Vec::new();
    for (x, y) in map.pixels() {
        let n = NEIGHBORS_8
            .iter()
            .filter(|(dx, dy)| map.get_signed(x as isize + dx, y as isize + dy))
            .count();
        let p = Point::new(x as i32, y as i32);
        if n <= 1 {
            seeds.push(p);
        } else {
            rest.push(p);
        }
    }
    seeds.extend(rest);

    let mut set = ContourSet::new(w, h);
    for seed in seeds {
        let si = tracer.idx(seed);
        if tracer.visited[si] {
            continue;
        }
        tracer.visited[si] = true;
        let mut path = vec![seed];
        let forward_branch = tracer.walk(&mut path, true);
        path.reverse();
        let backward_branch = tracer.walk(&mut path, false);
        path.reverse();

        if path.len() < params.min_length.max(1) {
            continue;
        }
        let id = set.contours.len();
        let mut contour = Contour::line(path);
        if contour.len() >= 2 {
            contour.mode = classify_mode(&contour, params.loop_threshold)?;
        }
        if contour.mode == CurveMode::Line {
            if backward_branch || tracer.touches_other(contour.first(), id) {
                contour.start_tag = EndTag::TJunction;
            }
            if forward_branch || tracer.touches_other(contour.last(), id) {
                contour.end_tag = EndTag::TJunction;
            }
        }
        for p in &contour.points {
            let i = tracer.idx(*p);
            tracer.owner[i] = Some(id);
        }
        set.contours.push(contour);
    }
    Ok(set)
}
