//! Acceptance checks. Runs without the libtest harness and prints one
//! PASS/FAIL line per criterion; exits non-zero if any fails.

mod common;

use std::collections::VecDeque;
use std::time::Instant;

use common::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use smoothedge::corners::{contour_corners, curvature};
use smoothedge::detectors::{hysteresis, non_max_suppression};
use smoothedge::imageio::temperature_range;
use smoothedge::pipeline::to_working_frame;
use smoothedge::scoring::{edge_score, fit_cubic_along, Axis};
use smoothedge::*;

type Outcome = Result<String, String>;

fn check(cond: bool, detail: String) -> Outcome {
    if cond {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn dpg_exactness() -> Outcome {
    let range = |lo: u16, hi: u16| {
        let f = RawFrame::new(3, 1, vec![lo, (lo + hi) / 2, hi]).unwrap();
        temperature_range(&f).unwrap()
    };
    let (a, b) = (range(2217, 3342), range(2560, 2692));
    check((a - 11.25).abs() <= 1e-12 && (b - 1.32).abs() <= 1e-12, format!("{a} C, {b} C"))
}

fn integer_kernel() -> Outcome {
    let printed = [2, 4, 5, 4, 2, 4, 9, 12, 9, 4, 5, 12, 15, 12, 5, 4, 9, 12, 9, 4, 2, 4, 5, 4, 2];
    let k = Kernel::gaussian_5x5_159();
    let exact = k.size() == 5 && k.weights().iter().zip(printed).all(|(w, p)| *w == f64::from(p) / 159.0);
    check(exact, format!("sum {}", k.sum()))
}

fn canny_localization() -> Outcome {
    let f = FloatFrame::from_fn(128, 128, |x, _| if x < 64 { 0.0 } else { 255.0 });
    let m = canny(&f, &CannyConfig::default()).map_err(|e| e.to_string())?;
    let far = m.pixels().filter(|&(x, _)| !(63..=64).contains(&x)).count();
    let thick = (0..128).filter(|&y| (0..128).filter(|&x| m.get(x, y)).count() != 1).count();
    check(far == 0 && thick == 0 && m.count() == 128, format!("{} pixels, {far} off-boundary, {thick} rows not 1 px wide", m.count()))
}

fn oracle_nms(g: &GradientField) -> Vec<f64> {
    let (w, h) = (g.width as isize, g.height as isize);
    let mut out = vec![0.0; g.magnitude.len()];
    for y in 0..h {
        for x in 0..w {
            let i = (y * w + x) as usize;
            let deg = g.gy[i].atan2(g.gx[i]).to_degrees().rem_euclid(180.0);
            let (dx, dy) = if !(22.5..157.5).contains(&deg) {
                (1, 0)
            } else if deg < 67.5 {
                (1, -1)
            } else if deg < 112.5 {
                (0, 1)
            } else {
                (1, 1)
            };
            let m = g.magnitude[i];
            let mut keep = true;
            for (nx, ny) in [(x + dx, y + dy), (x - dx, y - dy)] {
                if (0..w).contains(&nx) && (0..h).contains(&ny) && g.magnitude[(ny * w + nx) as usize] > m {
                    keep = false;
                }
            }
            out[i] = if keep { m } else { 0.0 };
        }
    }
    out
}

fn oracle_hysteresis(v: &[f64], w: usize, h: usize, low: f64, high: f64) -> Vec<bool> {
    let mut edge: Vec<bool> = v.iter().map(|&m| m > 0.0 && m >= high).collect();
    let mut queue: VecDeque<usize> = (0..v.len()).filter(|&i| edge[i]).collect();
    while let Some(i) = queue.pop_front() {
        let (x, y) = ((i % w) as isize, (i / w) as isize);
        for dy in -1..=1 {
            for dx in -1..=1 {
                let (nx, ny) = (x + dx, y + dy);
                if nx < 0 || ny < 0 || nx >= w as isize || ny >= h as isize {
                    continue;
                }
                let j = ny as usize * w + nx as usize;
                if !edge[j] && v[j] > 0.0 && v[j] >= low {
                    edge[j] = true;
                    queue.push_back(j);
                }
            }
        }
    }
    edge
}

fn nms_hysteresis_oracle() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut mismatches = 0;
    for _ in 0..100 {
        let gx: Vec<f64> = (0..256).map(|_| rng.random_range(-100.0..100.0)).collect();
        let gy: Vec<f64> = (0..256).map(|_| rng.random_range(-100.0..100.0)).collect();
        let g = GradientField::from_components(16, 16, gx, gy);
        let thinned = non_max_suppression(&g);
        if thinned.data() != oracle_nms(&g).as_slice() {
            mismatches += 1;
            continue;
        }
        let max = g.max_magnitude();
        let low = rng.random_range(0.05..0.4) * max;
        let high = rng.random_range(low / max..0.8) * max;
        let got = hysteresis(&thinned, low, high).map_err(|e| e.to_string())?;
        if got.data() != oracle_hysteresis(thinned.data(), 16, 16, low, high).as_slice() {
            mismatches += 1;
        }
    }
    check(mismatches == 0, format!("{mismatches}/100 fields differ"))
}

fn circle(r: i32) -> Contour {
    let c = 2 * r + 10;
    let set = extract_contours(&map_of((2 * c) as usize, (2 * c) as usize, &bresenham_circle(c, c, r)), &ContourParams::default()).unwrap();
    set.contours.into_iter().next().unwrap()
}

fn curvature_accuracy() -> Outcome {
    let mut details = Vec::new();
    let mut ok = true;
    for r in [20, 40] {
        let p = curvature(&circle(r), 3.0).map_err(|e| e.to_string())?;
        let mean = p.values.iter().map(|k| k.abs()).sum::<f64>() / p.len() as f64;
        let err = (mean * f64::from(r) - 1.0).abs();
        ok &= err <= 0.1;
        details.push(format!("r={r} error {:.1}%", err * 100.0));
    }
    check(ok, details.join(", "))
}

fn glcp_correctness() -> Outcome {
    let p = GlcpParams::default();
    let sq = polyline(&[(10, 10), (50, 10), (50, 50), (10, 50), (10, 10)]);
    let square = Contour::closed(sq[..sq.len() - 1].to_vec());
    let corners = contour_corners(&square, 0, &p);
    let angles_ok = corners.iter().all(|c| c.angle.is_some_and(|a| (a - 90.0).abs() <= 5.0));
    let wide = Contour::line(polyline(&[(0, 0), (40, 0), (79, 7)]));
    let wide_inner = contour_corners(&wide, 0, &p).iter().filter(|c| c.kind != CornerKind::Endpoint).count();
    let round = contour_corners(&circle(20), 0, &p).iter().filter(|c| c.kind == CornerKind::Curvature).count();
    check(
        corners.len() == 4 && angles_ok && wide_inner == 0 && round == 0,
        format!("square {} corners, 170 deg vertex {} corners, circle {} corners", corners.len(), wide_inner, round),
    )
}

fn linking() -> Outcome {
    let cfg = LinkConfig::default();
    let set = |c: Vec<Contour>| ContourSet { contours: c, width: 64, height: 64 };
    let cornered = |s: &ContourSet| detect_corners(s, &GlcpParams::default()).unwrap();

    let t1 = set(vec![Contour::line(polyline(&[(0, 10), (10, 10)])), Contour::line(polyline(&[(12, 10), (25, 10)]))]);
    let g1 = link_edges(&t1, &cornered(&t1), &cfg).map_err(|e| e.to_string())?;
    let type1 = g1.edges.len() == 1 && g1.edges.total_points() == t1.total_points() + 1;

    let t2 = set(vec![Contour::line(polyline(&[(30, 0), (30, 40)])), Contour::line(polyline(&[(5, 20), (28, 20)]))]);
    let g2 = link_edges(&t2, &cornered(&t2), &cfg).map_err(|e| e.to_string())?;
    let type2 = g2.adjacency[0].contains(&1) && g2.corners.iter().any(|c| c.kind == CornerKind::Junction);

    let t3 = set(vec![Contour::line(polyline(&[(22, 10), (10, 10), (10, 30), (30, 30), (30, 10), (24, 10)]))]);
    let g3 = link_edges(&t3, &cornered(&t3), &cfg).map_err(|e| e.to_string())?;
    let type3 = g3.edges.contours[0].mode == CurveMode::Loop && g3.corners.iter().all(|c| c.kind != CornerKind::Endpoint);

    let mut unstable = 0;
    for seed in 0..50 {
        let (s, c) = random_graph_input(seed);
        let once = link_edges(&s, &c, &cfg).map_err(|e| e.to_string())?;
        let twice = link_edges(&once.edges, &once.corners, &cfg).map_err(|e| e.to_string())?;
        if twice != without_bridges(once) {
            unstable += 1;
        }
    }
    check(type1 && type2 && type3 && unstable == 0, format!("type1 {type1}, type2 {type2}, type3 {type3}, {unstable}/50 sets change on relink"))
}

/// A relinked graph inserts no bridges; compare everything else.
fn without_bridges(mut g: smoothedge::linking::EdgeGraph) -> smoothedge::linking::EdgeGraph {
    g.bridge_points = 0;
    g
}

fn cubic_oracle() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut worst: f64 = 0.0;
    for _ in 0..100 {
        let x0 = rng.random_range(0..300);
        let n = rng.random_range(8..40);
        let (a, b, c) = (rng.random_range(-0.01..0.01), rng.random_range(-0.2..0.2), rng.random_range(-2.0..2.0));
        let pts: Vec<Point> = (0..n)
            .map(|u| {
                let u = f64::from(u);
                let y = 100.0 + a * u * u * u + b * u * u + c * u + rng.random_range(-1.5..1.5);
                Point::new(x0 + u as i32, y.round() as i32)
            })
            .collect();
        let (fit, _) = fit_cubic_along(&pts, Axis::XMajor).map_err(|e| e.to_string())?;
        let oracle = qr_oracle(&pts);
        for (got, want) in [(fit.d, oracle[0]), (fit.c, oracle[1]), (fit.b, oracle[2]), (fit.a, oracle[3])] {
            worst = worst.max((got - want).abs() / want.abs().max(1e-6));
        }
    }
    let mut exact_worst: f64 = 0.0;
    for _ in 0..100 {
        let n = rng.random_range(2..=4);
        let mut x = rng.random_range(0..100);
        let pts: Vec<Point> = (0..n)
            .map(|_| {
                x += rng.random_range(1..20);
                Point::new(x, rng.random_range(0..288))
            })
            .collect();
        exact_worst = exact_worst.max(fit_cubic_along(&pts, Axis::XMajor).map_err(|e| e.to_string())?.1);
    }
    check(worst <= 1e-9 && exact_worst <= 1e-18, format!("worst relative deviation {worst:.2e}, worst exact-fit rss {exact_worst:.2e}"))
}

fn score_hand_value() -> Outcome {
    let es = edge_score(0.5, 2, 100, 100, 1.0, 382, 288).map_err(|e| e.to_string())?;
    check((es - 0.220032).abs() <= 1e-9, format!("ES = {es}"))
}

const RECT: (usize, usize, usize, usize) = (50, 40, 150, 110);
const NOISE_SIGMA: f64 = 30.0;
const SCENE_SEED: u64 = 7;

fn noise_rejection() -> Outcome {
    let truth = rectangle_boundary(200, 150, RECT);
    let frame = Frame::Raw(rectangle_scene(200, 150, RECT, NOISE_SIGMA, SCENE_SEED));
    let mut cfg = PipelineConfig::default();
    cfg.score.et = 1;
    let raw_canny = canny(&to_working_frame(&frame, &cfg).map_err(|e| e.to_string())?, &cfg.canny).map_err(|e| e.to_string())?;
    let mut spurious = BinaryMap::new(200, 150);
    for (x, y) in raw_canny.pixels() {
        if !near(&truth, x, y, 1) {
            spurious.set(x, y, true);
        }
    }
    let (map, _) = run_pipeline(&frame, &cfg).map_err(|e| e.to_string())?;
    let iou = tolerant_iou(&map, &truth);
    let removed = spurious.pixels().filter(|&(x, y)| !map.get(x, y)).count() as f64 / spurious.count().max(1) as f64;
    let components = spurious.component_count();
    check(
        components >= 20 && iou >= 0.8 && removed >= 0.9,
        format!("raw Canny {components} spurious components, kept IoU {iou:.3}, {:.1}% spurious removed", removed * 100.0),
    )
}

fn determinism() -> Outcome {
    let frame = Frame::Raw(rectangle_scene(200, 150, RECT, NOISE_SIGMA, 21));
    let cfg = PipelineConfig::default();
    let run = |threads: usize| {
        let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap();
        pool.install(|| run_pipeline(&frame, &cfg)).map(|(m, r)| (m, r.without_timings().to_json()))
    };
    let a = run(1).map_err(|e| e.to_string())?;
    let b = run(1).map_err(|e| e.to_string())?;
    let c = run(4).map_err(|e| e.to_string())?;
    check(a == b && a == c, format!("{} edges compared across 1/1/4 threads", a.1.matches("\"id\"").count()))
}

fn throughput() -> Outcome {
    let frame = Frame::Raw(rectangle_scene(382, 288, (100, 80, 280, 200), NOISE_SIGMA, 3));
    let time = |d: DenoiserSpec| -> Result<f64, String> {
        let cfg = PipelineConfig { denoiser: d, ..PipelineConfig::default() };
        let t = Instant::now();
        run_pipeline(&frame, &cfg).map_err(|e| e.to_string())?;
        Ok(t.elapsed().as_secs_f64())
    };
    let nlm = time(DenoiserSpec::nl_means_default())?;
    let gauss = time(DenoiserSpec::gaussian_default())?;
    check(nlm < 2.0 && gauss < 0.2, format!("NL-means {nlm:.3} s, Gaussian {gauss:.3} s"))
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 12] = [
        ("DPG exactness", dpg_exactness),
        ("5x5 integer kernel", integer_kernel),
        ("Canny localization", canny_localization),
        ("NMS/hysteresis oracle", nms_hysteresis_oracle),
        ("curvature accuracy", curvature_accuracy),
        ("GLCP correctness", glcp_correctness),
        ("linking types and fixed point", linking),
        ("cubic-fit oracle", cubic_oracle),
        ("edge score hand value", score_hand_value),
        ("end-to-end noise rejection", noise_rejection),
        ("determinism", determinism),
        ("throughput", throughput),
    ];
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        let outcome = std::panic::catch_unwind(f).unwrap_or_else(|_| Err("panicked".into()));
        match outcome {
            Ok(d) => println!("criterion {:>2} {name}: PASS ({d})", i + 1),
            Err(d) => {
                failed += 1;
                println!("criterion {:>2} {name}: FAIL ({d})", i + 1);
            }
        }
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
