use std::collections::{BinaryHeap, HashMap, HashSet};
use std::f64::consts::{PI, TAU};

use pattern_core::field::{boundary_constraints, compute_cross_field, estimate_curvature, vertex_field};
use pattern_core::mesh::geodesic::{edge_distances, MinItem};
use pattern_core::mesh::{shapes, TriMesh, Vec3};
use pattern_core::trace::{
    build_graph, build_graph_from, classify_path, node, node_vertex, path_distance, paths_to_obj, smooth_reproject,
    tangential_intersection, trace_border_to_border, trace_loop, turning, BoundaryLabel, TraceGraph,
    TraceOptions, TracePath,
};
use proptest::prelude::*;

fn graph_of(mesh: &TriMesh) -> TraceGraph {
    let c = estimate_curvature(mesh, 0.05);
    let field = compute_cross_field(mesh, &c.samples, &boundary_constraints(mesh), 1.0).unwrap();
    build_graph(mesh, &field, TraceOptions::default())
}

/// Direction index at `v` best aligned with `d`.
fn dir_along(g: &TraceGraph, v: usize, d: &Vec3) -> usize {
    (0..4)
        .max_by(|&a, &b| g.direction(node(v, a)).dot(d).total_cmp(&g.direction(node(v, b)).dot(d)))
        .unwrap()
}

fn entrance_of(g: &TraceGraph, v: usize) -> usize {
    (0..4)
        .map(|k| node(v, k))
        .find(|&n| g.label(n) == BoundaryLabel::Entrance)
        .expect("boundary vertex has an entrance")
}

/// Plain Dijkstra over graph arcs, skipping `blocked` vertices.
fn shortest(g: &TraceGraph, from: usize, to: usize, blocked: &HashSet<usize>) -> Option<(f64, Vec<usize>)> {
    let mut dist = vec![f64::INFINITY; g.num_nodes()];
    let mut prev = vec![usize::MAX; g.num_nodes()];
    let mut heap = BinaryHeap::new();
    dist[from] = 0.0;
    heap.push(MinItem(0.0, from));
    while let Some(MinItem(d, n)) = heap.pop() {
        if n == to {
            let mut path = vec![n];
            while path[path.len() - 1] != from {
                path.push(prev[path[path.len() - 1]]);
            }
            path.reverse();
            return Some((d, path));
        }
        if d > dist[n] {
            continue;
        }
        for a in g.arcs(n) {
            if blocked.contains(&node_vertex(a.to)) {
                continue;
            }
            if d + a.weight < dist[a.to] {
                dist[a.to] = d + a.weight;
                prev[a.to] = n;
                heap.push(MinItem(d + a.weight, a.to));
            }
        }
    }
    None
}

fn grid_id(nx: usize) -> impl Fn(usize, usize) -> usize {
    move |i, j| j * (nx + 1) + i
}

#[test]
fn graph_has_four_nodes_per_vertex_and_nonnegative_weights() {
    let m = shapes::grid(10, 10, 1.0, 1.0);
    let g = graph_of(&m);
    assert_eq!(g.num_nodes(), 4 * m.num_vertices());
    assert!(g.num_arcs() > 0);
    for n in 0..g.num_nodes() {
        assert!(g.arcs(n).iter().all(|a| a.weight >= 0.0));
    }
}

#[test]
fn straight_grid_line_beats_any_detour() {
    let m = shapes::grid(10, 10, 1.0, 1.0);
    let g = graph_of(&m);
    let id = grid_id(10);
    for j in [3, 5, 7] {
        let (a, b) = (id(1, j), id(9, j));
        let k = dir_along(&g, a, &Vec3::x());
        let kb = dir_along(&g, b, &Vec3::x());
        let (w, path) = shortest(&g, node(a, k), node(b, kb), &HashSet::new()).unwrap();
        assert!(path.iter().all(|&n| m.vertices()[node_vertex(n)].y == m.vertices()[a].y));
        let line: HashSet<usize> = (2..9).map(|i| id(i, j)).collect();
        let detour = shortest(&g, node(a, k), node(b, kb), &line).map_or(f64::INFINITY, |x| x.0);
        assert!(w < detour, "straight {w} vs detour {detour}");
        assert!((w - 0.8 * 0.01).abs() < 1e-9);
    }
}

#[test]
fn disk_boundary_vertices_have_one_entrance_and_one_exit() {
    let m = shapes::disk(6, 1.0);
    let g = graph_of(&m);
    for &v in &m.boundary_loops()[0] {
        let labels: Vec<BoundaryLabel> = (0..4).map(|k| g.label(node(v, k))).collect();
        let count = |l| labels.iter().filter(|&&x| x == l).count();
        assert_eq!((count(BoundaryLabel::Entrance), count(BoundaryLabel::Exit)), (1, 1));
        let inward = -m.vertices()[v].normalize();
        assert!(g.direction(entrance_of(&g, v)).dot(&inward) > 0.95);
    }
    for v in 0..m.num_vertices() {
        if !m.is_boundary_vertex(v) {
            assert!((0..4).all(|k| g.label(node(v, k)) == BoundaryLabel::None));
        }
    }
}

fn tube_loop() -> (TriMesh, TraceGraph, TracePath) {
    let m = shapes::tube(48, 16, 2.0, |_| 1.0);
    let g = graph_of(&m);
    let v = 8 * 48 + 5;
    let p = m.vertices()[v];
    let tangent = Vec3::new(p.z, 0.0, -p.x);
    let path = trace_loop(&g, node(v, dir_along(&g, v, &tangent))).expect("loop around the tube");
    (m, g, path)
}

#[test]
fn cylinder_loop_matches_circumference() {
    let (_, _, path) = tube_loop();
    assert!(path.closed);
    assert_eq!(path.vertices.first(), path.vertices.last());
    assert!((path.length - TAU).abs() / TAU < 0.03, "length {}", path.length);
}

#[test]
fn flat_disk_has_no_loops() {
    let m = shapes::disk(6, 1.0);
    let g = graph_of(&m);
    for v in (0..m.num_vertices()).filter(|&v| !m.is_boundary_vertex(v)) {
        for k in 0..4 {
            assert!(trace_loop(&g, node(v, k)).is_none(), "loop from {v}/{k}");
        }
    }
}

/// Net turns of the polyline around the torus tube (major, minor).
fn torus_winding(m: &TriMesh, path: &TracePath, major: f64) -> (f64, f64) {
    let ang = |v: usize| {
        let p = m.vertices()[v];
        let r = (p.x * p.x + p.y * p.y).sqrt();
        (p.y.atan2(p.x), p.z.atan2(r - major))
    };
    let wrap = |a: f64| (a + PI).rem_euclid(TAU) - PI;
    let mut w = (0.0, 0.0);
    for s in path.vertices.windows(2) {
        let (a, b) = (ang(s[0]), ang(s[1]));
        w.0 += wrap(b.0 - a.0);
        w.1 += wrap(b.1 - a.1);
    }
    (w.0 / TAU, w.1 / TAU)
}

#[test]
fn torus_poloidal_loop_winds_once_around_the_tube() {
    let m = shapes::torus(48, 24, 2.0, 0.6);
    let g = graph_of(&m);
    let v = 0;
    let path = trace_loop(&g, node(v, dir_along(&g, v, &Vec3::z()))).expect("poloidal loop");
    let (a, b) = torus_winding(&m, &path, 2.0);
    assert!(a.abs() < 1e-9, "major winding {a}");
    assert!((b.abs() - 1.0).abs() < 1e-9, "minor winding {b}");
}

#[test]
fn flat_square_entrance_goes_straight_up() {
    let m = shapes::grid(10, 10, 1.0, 1.0);
    let g = graph_of(&m);
    let id = grid_id(10);
    let path = trace_border_to_border(&g, entrance_of(&g, id(5, 0))).unwrap();
    assert_eq!(*path.vertices.last().unwrap(), id(5, 10));
    assert!(path.vertices.iter().all(|&v| m.vertices()[v].x.abs() < 1e-12));
    assert!((path.length - 1.0).abs() < 1e-12);
}

#[test]
fn tube_axial_path_matches_height() {
    let m = shapes::tube(48, 16, 2.0, |_| 1.0);
    let g = graph_of(&m);
    for v in [0, 7, 30] {
        let path = trace_border_to_border(&g, entrance_of(&g, v)).unwrap();
        let end = m.vertices()[*path.vertices.last().unwrap()];
        assert!((end.y - 2.0).abs() < 1e-12);
        assert!((path.length - 2.0).abs() / 2.0 < 0.03, "length {}", path.length);
    }
}

#[test]
fn annulus_radial_path_meets_inner_boundary_orthogonally() {
    let m = shapes::annulus(48, 8, 0.5, 1.0);
    let g = graph_of(&m);
    let outer = 8 * 48 + 3;
    let path = trace_border_to_border(&g, entrance_of(&g, outer)).unwrap();
    let n = path.vertices.len();
    let (a, b) = (m.vertices()[path.vertices[n - 2]], m.vertices()[path.vertices[n - 1]]);
    assert!((b.norm() - 0.5).abs() < 1e-12, "ends at r = {}", b.norm());
    let step = (b - a).normalize();
    let normal = -b.normalize();
    assert!(step.dot(&normal).acos().to_degrees() < 10.0);
    let (s0, s1) = (m.vertices()[path.vertices[0]], m.vertices()[path.vertices[1]]);
    assert!((s1 - s0).normalize().dot(&-s0.normalize()).acos().to_degrees() < 10.0);
}

#[test]
fn border_paths_touch_boundary_only_at_labelled_ends() {
    let m = shapes::disk(6, 1.0);
    let g = graph_of(&m);
    for &v in &m.boundary_loops()[0] {
        let Some(path) = trace_border_to_border(&g, entrance_of(&g, v)) else { continue };
        let nodes = path.nodes();
        assert_eq!(g.label(nodes[0]), BoundaryLabel::Entrance);
        assert_eq!(g.label(*nodes.last().unwrap()), BoundaryLabel::Exit);
        for &n in &nodes[1..nodes.len() - 1] {
            assert!(!m.is_boundary_vertex(node_vertex(n)));
        }
    }
}

#[test]
fn smoothing_keeps_straight_paths() {
    let m = shapes::grid(10, 10, 1.0, 1.0);
    let g = graph_of(&m);
    let id = grid_id(10);
    let path = trace_border_to_border(&g, entrance_of(&g, id(5, 0))).unwrap();
    let s = smooth_reproject(&path, &m, 10);
    for (p, &v) in s.positions(&m).iter().zip(&path.vertices) {
        assert!((p - m.vertices()[v]).norm() < 1e-9);
    }
}

#[test]
fn smoothing_shortens_staircase() {
    let m = shapes::grid(10, 10, 1.0, 1.0);
    let g = graph_of(&m);
    let id = grid_id(10);
    let mut verts = vec![id(1, 1)];
    for i in 1..8 {
        verts.push(id(i + 1, i));
        verts.push(id(i + 1, i + 1));
    }
    let path = classify_path(&g, &verts, false);
    let s = smooth_reproject(&path, &m, 10);
    let before: Vec<Vec3> = verts.iter().map(|&v| m.vertices()[v]).collect();
    let after = s.positions(&m);
    let chord = (before[before.len() - 1] - before[0]).norm();
    let len = s.length(&m);
    assert!(len < path.length && len >= chord - 1e-12, "{len} vs {} chord {chord}", path.length);
    assert!(turning(&after, false) <= turning(&before, false));
    assert_eq!(after[0], before[0]);
    assert_eq!(after[after.len() - 1], before[before.len() - 1]);
    assert!(s.points.iter().all(|p| p.is_valid(1e-9)));
}

#[test]
fn smoothing_keeps_loops_closed() {
    let (m, _, path) = tube_loop();
    let s = smooth_reproject(&path, &m, 10);
    let pos = s.positions(&m);
    assert_eq!(pos[0], pos[pos.len() - 1]);
    assert!(turning(&pos, true) <= turning(&path.vertices.iter().map(|&v| m.vertices()[v]).collect::<Vec<_>>(), true) + 1e-9);
    for p in &pos {
        assert!(((p.x * p.x + p.z * p.z).sqrt() - 1.0).abs() < 0.01);
    }
}

fn row(g: &TraceGraph, nx: usize, j: usize) -> TracePath {
    let id = grid_id(nx);
    classify_path(g, &(0..=nx).map(|i| id(i, j)).collect::<Vec<_>>(), false)
}

#[test]
fn path_distance_identity_parallel_and_orthogonal() {
    let m = shapes::grid(20, 20, 1.0, 1.0);
    let g = graph_of(&m);
    let a = row(&g, 20, 5);
    assert_eq!(path_distance(&a, &a, &g), 0.0);
    for j in [8, 12, 15] {
        let b = row(&g, 20, j);
        let d = path_distance(&a, &b, &g);
        // unstratified edge-graph oracle
        let ed = edge_distances(&m, &b.vertices, f64::INFINITY);
        let oracle = a.vertices.iter().map(|&v| ed[v]).sum::<f64>() / a.vertices.len() as f64;
        let expected = (j - 5) as f64 / 20.0;
        assert!((d - oracle).abs() < 1e-9 && (d - expected).abs() < 1e-9, "{d} {oracle} {expected}");
    }
    let id = grid_id(20);
    let col = classify_path(&g, &(0..=20).map(|j| id(10, j)).collect::<Vec<_>>(), false);
    assert!(path_distance(&a, &col, &g) >= 0.5);
    assert!(path_distance(&col, &a, &g) >= 0.5);
}

#[test]
fn tangential_check_matches_brute_force() {
    let m = shapes::spherical_cap(8, 1.0, 1.2);
    let g = graph_of(&m);
    let mut paths = Vec::new();
    for &v in m.boundary_loops()[0].iter().step_by(3) {
        if let Some(p) = trace_border_to_border(&g, entrance_of(&g, v)) {
            paths.push(p);
        }
    }
    assert!(paths.len() > 5);
    let mut hits = 0;
    for a in &paths {
        for b in &paths {
            let mut brute = false;
            for (i, &va) in a.vertices.iter().enumerate() {
                for (j, &vb) in b.vertices.iter().enumerate() {
                    if va == vb && a.dirs[i] % 2 == b.dirs[j] % 2 {
                        brute = true;
                    }
                }
            }
            assert_eq!(tangential_intersection(a, b), brute);
            hits += brute as usize;
        }
    }
    assert!(hits > paths.len(), "some distinct paths should touch");
}

#[test]
fn paths_have_no_tangential_self_contact() {
    let m = shapes::spherical_cap(8, 1.0, 1.2);
    let g = graph_of(&m);
    for &v in &m.boundary_loops()[0] {
        if let Some(p) = trace_border_to_border(&g, entrance_of(&g, v)) {
            assert!(p.is_simple_in_class());
            let steps: Vec<(usize, usize)> = p.steps().collect();
            assert!(steps.iter().all(|&(a, b)| m.edge_between(a, b).is_some()));
        }
    }
}

#[test]
fn obj_dump_lists_paths() {
    let (m, _, path) = tube_loop();
    let s = paths_to_obj(&m, &[path.clone()]);
    assert_eq!(s.lines().filter(|l| l.starts_with("v ")).count(), m.num_vertices());
    assert_eq!(s.lines().filter(|l| l.starts_with("l ")).count(), 1);
}

fn scaled(m: &TriMesh, s: f64) -> TriMesh {
    m.with_positions(m.vertices().iter().map(|p| p * s).collect()).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]
    #[test]
    fn shortest_paths_invariant_to_uniform_scaling(s in 0.05f64..20.0, start in 0usize..48) {
        let base = shapes::spherical_cap(6, 1.0, 1.0);
        let m = scaled(&base, s);
        // same field on both so only the weights scale
        let c = estimate_curvature(&base, 0.05);
        let field = compute_cross_field(&base, &c.samples, &boundary_constraints(&base), 1.0).unwrap();
        let g0 = build_graph(&base, &field, TraceOptions::default());
        let g1 = build_graph_from(&m, vertex_field(&base, &field), TraceOptions::default());
        let v = base.boundary_loops()[0][start % base.boundary_loops()[0].len()];
        let a = trace_border_to_border(&g0, entrance_of(&g0, v));
        let b = trace_border_to_border(&g1, entrance_of(&g1, v));
        prop_assert_eq!(a.is_some(), b.is_some());
        if let (Some(a), Some(b)) = (a, b) {
            // ties may resolve differently; each optimum must be optimal in the other graph
            let reweigh = |g: &TraceGraph, p: &TracePath| {
                p.nodes().windows(2).map(|w| g.arc_weight(w[0], w[1]).unwrap()).sum::<f64>()
            };
            prop_assert!((b.weight - s * a.weight).abs() <= 1e-9 * b.weight.max(1e-12));
            prop_assert!((reweigh(&g1, &a) - b.weight).abs() <= 1e-9 * b.weight.max(1e-12));
            prop_assert!((reweigh(&g0, &b) - a.weight).abs() <= 1e-9 * a.weight.max(1e-12));
        }
    }
}

#[test]
fn distances_ignore_unrelated_nodes() {
    let m = shapes::grid(6, 6, 1.0, 1.0);
    let g = graph_of(&m);
    let mut by_vertex: HashMap<usize, usize> = HashMap::new();
    let a = row(&g, 6, 2);
    for n in a.nodes() {
        *by_vertex.entry(node_vertex(n)).or_default() += 1;
    }
    assert!(by_vertex.values().all(|&c| c == 1));
}
