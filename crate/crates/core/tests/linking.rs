mod common;

use std::collections::BTreeSet;

use common::*;
use smoothedge::*;

fn endpoints(set: &ContourSet) -> Vec<Corner> {
    detect_corners(set, &GlcpParams::default()).unwrap()
}

fn line(v: &[(i32, i32)]) -> Contour {
    Contour::line(polyline(v))
}

fn set_of(contours: Vec<Contour>) -> ContourSet {
    ContourSet { contours, width: 80, height: 80 }
}

#[test]
fn ending_to_ending_merges() {
    let a = line(&[(0, 10), (10, 10)]);
    let b = line(&[(12, 10), (25, 10)]);
    let before = set_of(vec![a.clone(), b.clone()]);
    let corners = endpoints(&before);
    let g = link_edges(&before, &corners, &LinkConfig::default()).unwrap();
    assert_eq!(g.edges.len(), 1);
    assert_eq!(g.edges.contours[0].len(), a.len() + b.len() + 1);
    let count = |cs: &[Corner]| cs.iter().filter(|c| c.kind == CornerKind::Endpoint).count();
    assert_eq!(count(&g.corners), count(&corners) - 2);
}

#[test]
fn ending_to_interior_is_a_junction() {
    let host = line(&[(30, 0), (30, 40)]);
    let stub = line(&[(5, 20), (28, 20)]);
    let g = link_edges(&set_of(vec![host.clone(), stub.clone()]), &endpoints(&set_of(vec![host, stub])), &LinkConfig::default()).unwrap();
    assert_eq!(g.adjacency, vec![BTreeSet::from([1]), BTreeSet::from([0])]);
    let j: Vec<_> = g.corners.iter().filter(|c| c.kind == CornerKind::Junction).collect();
    assert_eq!(j.len(), 1);
    assert_eq!(g.edges.contours[0].points[j[0].point_index], Point::new(30, 20));
}

#[test]
fn open_c_closes_into_loop() {
    let c = line(&[(22, 10), (10, 10), (10, 30), (30, 30), (30, 10), (24, 10)]);
    assert!(c.first().distance(c.last()) < 3.0);
    let set = set_of(vec![Contour { mode: CurveMode::Line, ..c }]);
    let g = link_edges(&set, &endpoints(&set), &LinkConfig::default()).unwrap();
    assert_eq!(g.edges.contours[0].mode, CurveMode::Loop);
    assert!(g.corners.iter().all(|k| k.kind != CornerKind::Endpoint));
}

#[test]
fn distant_edges_are_unchanged() {
    let set = set_of(vec![line(&[(0, 0), (20, 0)]), line(&[(0, 10), (20, 10)]), line(&[(40, 0), (40, 30)])]);
    let corners = endpoints(&set);
    let g = link_edges(&set, &corners, &LinkConfig::default()).unwrap();
    assert_eq!(g.edges, set);
    assert_eq!(g.corners, corners);
    assert!(g.adjacency.iter().all(BTreeSet::is_empty));
}

#[test]
fn nearest_pair_wins() {
    // a's right end is 2 px from b and 2.83 px from c
    let a = line(&[(0, 10), (10, 10)]);
    let b = line(&[(12, 10), (20, 10)]);
    let c = line(&[(12, 12), (12, 25)]);
    let set = set_of(vec![a, c, b]);
    let g = link_edges(&set, &endpoints(&set), &LinkConfig::default()).unwrap();
    let merged = g.edges.contours.iter().find(|e| e.points.contains(&Point::new(0, 10))).unwrap();
    assert!(merged.points.contains(&Point::new(20, 10)));
}

#[test]
fn linking_is_idempotent_on_random_sets() {
    let (mut merged, mut junctions) = (0, 0);
    for seed in 0..50 {
        let (set, corners) = random_graph_input(seed);
        let once = link_edges(&set, &corners, &LinkConfig::default()).unwrap();
        merged += set.len() - once.edges.len();
        junctions += once.adjacency.iter().map(BTreeSet::len).sum::<usize>();
        let twice = link_edges(&once.edges, &once.corners, &LinkConfig::default()).unwrap();
        assert_eq!(twice.edges, once.edges, "seed {seed}");
        assert_eq!(twice.corners, once.corners, "seed {seed}");
        assert_eq!(twice.adjacency, once.adjacency, "seed {seed}");
        assert_eq!(twice.bridge_points, 0);
    }
    // the random sets do exercise both merge and junction rules
    assert!(merged > 0 && junctions > 0, "{merged} {junctions}");
}

#[test]
fn pixels_are_conserved_and_adjacency_is_symmetric() {
    for seed in 100..150 {
        let (set, corners) = random_graph_input(seed);
        let g = link_edges(&set, &corners, &LinkConfig::default()).unwrap();
        assert_eq!(g.edges.total_points(), set.total_points() + g.bridge_points, "seed {seed}");
        for (i, adj) in g.adjacency.iter().enumerate() {
            assert!(!adj.contains(&i));
            for &j in adj {
                assert!(g.adjacency[j].contains(&i), "seed {seed}");
            }
        }
        for c in &g.corners {
            assert!(c.point_index < g.edges.contours[c.contour_index].len());
        }
        for e in &g.edges.contours {
            let unique: BTreeSet<_> = e.points.iter().collect();
            assert_eq!(unique.len(), e.len(), "seed {seed}");
        }
    }
}

#[test]
fn loop_closure_agrees_with_classification() {
    for d in 1..6 {
        let c = line(&[(10 + d, 10), (10, 10), (10, 30), (30, 30), (30, 10), (12 + d, 10)]);
        let gap = c.first().distance(c.last());
        let set = set_of(vec![Contour { mode: CurveMode::Line, ..c.clone() }]);
        let g = link_edges(&set, &endpoints(&set), &LinkConfig { gap_link: 3.0 }).unwrap();
        let closed = g.edges.contours[0].mode == CurveMode::Loop;
        assert_eq!(closed, smoothedge::contours::classify_mode(&c, 3.0).unwrap() == CurveMode::Loop, "gap {gap}");
    }
}
