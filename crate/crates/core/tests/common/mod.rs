#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use smoothedge::{detect_corners, extract_contours, BinaryMap, ContourParams, ContourSet, Corner, GlcpParams, Point, RawFrame};

/// Midpoint-circle ring of radius `r` centred at (cx, cy).
pub fn bresenham_circle(cx: i32, cy: i32, r: i32) -> Vec<Point> {
    let mut pts = Vec::new();
    let (mut x, mut y, mut err) = (r, 0, 1 - r);
    while x >= y {
        for (dx, dy) in [(x, y), (y, x), (-y, x), (-x, y), (-x, -y), (-y, -x), (y, -x), (x, -y)] {
            pts.push(Point::new(cx + dx, cy + dy));
        }
        y += 1;
        if err < 0 {
            err += 2 * y + 1;
        } else {
            x -= 1;
            err += 2 * (y - x) + 1;
        }
    }
    pts.sort();
    pts.dedup();
    pts
}

/// 8-connected straight segment from a to b inclusive.
pub fn segment(a: Point, b: Point) -> Vec<Point> {
    let mut out = vec![a];
    out.extend(smoothedge::contours::bridge_points(a, b));
    out.push(b);
    out
}

/// Open polyline through `vertices`, without repeated vertices.
pub fn polyline(vertices: &[(i32, i32)]) -> Vec<Point> {
    let mut pts = vec![Point::new(vertices[0].0, vertices[0].1)];
    for w in vertices.windows(2) {
        let s = segment(Point::new(w[0].0, w[0].1), Point::new(w[1].0, w[1].1));
        pts.extend(&s[1..]);
    }
    pts
}

pub fn map_of(width: usize, height: usize, pts: &[Point]) -> BinaryMap {
    let mut m = BinaryMap::new(width, height);
    for p in pts {
        m.set(p.x as usize, p.y as usize, true);
    }
    m
}

/// Background 2500, an axis-aligned rectangle at 2700 over
/// `[x0, x1) x [y0, y1)`, plus seeded Gaussian noise.
pub fn rectangle_scene(width: usize, height: usize, rect: (usize, usize, usize, usize), sigma: f64, seed: u64) -> RawFrame {
    let (x0, y0, x1, y1) = rect;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let noise = Normal::new(0.0, sigma).unwrap();
    let data = (0..width * height)
        .map(|i| {
            let (x, y) = (i % width, i / width);
            let base = if (x0..x1).contains(&x) && (y0..y1).contains(&y) { 2700.0 } else { 2500.0 };
            let v: f64 = base + if sigma > 0.0 { noise.sample(&mut rng) } else { 0.0 };
            v.round().clamp(0.0, 16383.0) as u16
        })
        .collect();
    RawFrame::new(width, height, data).unwrap()
}

/// One-pixel inner boundary ring of the rectangle.
pub fn rectangle_boundary(width: usize, height: usize, rect: (usize, usize, usize, usize)) -> BinaryMap {
    let (x0, y0, x1, y1) = rect;
    let mut m = BinaryMap::new(width, height);
    for x in x0..x1 {
        m.set(x, y0, true);
        m.set(x, y1 - 1, true);
    }
    for y in y0..y1 {
        m.set(x0, y, true);
        m.set(x1 - 1, y, true);
    }
    m
}

/// True when some set pixel of `m` lies within Chebyshev distance `r`.
pub fn near(m: &BinaryMap, x: usize, y: usize, r: isize) -> bool {
    (-r..=r).any(|dy| (-r..=r).any(|dx| m.get_signed(x as isize + dx, y as isize + dy)))
}

/// IoU with a 1-pixel tolerance: ground-truth pixels within 1 px of a
/// prediction count as hits, predictions farther than 1 px from the
/// ground truth count as false positives.
pub fn tolerant_iou(pred: &BinaryMap, truth: &BinaryMap) -> f64 {
    let hits = truth.pixels().filter(|&(x, y)| near(pred, x, y, 1)).count();
    let false_pos = pred.pixels().filter(|&(x, y)| !near(truth, x, y, 1)).count();
    let union = truth.count() + false_pos;
    if union == 0 {
        1.0
    } else {
        hits as f64 / union as f64
    }
}

/// Least-squares cubic y = f(x) by Householder QR on a shifted Vandermonde
/// matrix, expanded back to powers of x.
pub fn qr_oracle(points: &[Point]) -> [f64; 4] {
    let x0 = f64::from(points[0].x);
    let m = points.len();
    let mut a: Vec<[f64; 4]> = points
        .iter()
        .map(|p| {
            let u = f64::from(p.x) - x0;
            [1.0, u, u * u, u * u * u]
        })
        .collect();
    let mut b: Vec<f64> = points.iter().map(|p| f64::from(p.y)).collect();
    for k in 0..4 {
        let norm = (k..m).map(|i| a[i][k] * a[i][k]).sum::<f64>().sqrt();
        let alpha = if a[k][k] > 0.0 { -norm } else { norm };
        let mut v: Vec<f64> = (0..m).map(|i| if i < k { 0.0 } else { a[i][k] }).collect();
        v[k] -= alpha;
        let vv: f64 = v.iter().map(|x| x * x).sum();
        if vv == 0.0 {
            continue;
        }
        for j in k..4 {
            let dot: f64 = (k..m).map(|i| v[i] * a[i][j]).sum();
            for i in k..m {
                a[i][j] -= 2.0 * v[i] * dot / vv;
            }
        }
        let dot: f64 = (k..m).map(|i| v[i] * b[i]).sum();
        for i in k..m {
            b[i] -= 2.0 * v[i] * dot / vv;
        }
    }
    let mut beta = [0.0; 4];
    for k in (0..4).rev() {
        let s: f64 = (k + 1..4).map(|j| a[k][j] * beta[j]).sum();
        beta[k] = (b[k] - s) / a[k][k];
    }
    // expand f(u) with u = x - x0
    let [c0, c1, c2, c3] = beta;
    [
        c0 - c1 * x0 + c2 * x0 * x0 - c3 * x0 * x0 * x0,
        c1 - 2.0 * c2 * x0 + 3.0 * c3 * x0 * x0,
        c2 - 3.0 * c3 * x0,
        c3,
    ]
}

/// Random strokes, traced and cornered like the pipeline does.
pub fn random_graph_input(seed: u64) -> (ContourSet, Vec<Corner>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut pts = Vec::new();
    for _ in 0..rng.random_range(3..9) {
        let n = rng.random_range(2..5);
        let v: Vec<(i32, i32)> = (0..n).map(|_| (rng.random_range(2..78), rng.random_range(2..78))).collect();
        pts.extend(polyline(&v));
    }
    let params = ContourParams { gap_fill_radius: 1, ..ContourParams::default() };
    let set = extract_contours(&map_of(80, 80, &pts), &params).unwrap();
    let corners = detect_corners(&set, &GlcpParams::default()).unwrap();
    (set, corners)
}

