//! Distances restricted to one direction class, and tangential contact.

use std::collections::{BinaryHeap, HashMap, HashSet};

use super::{node, TraceGraph, TracePath, NODES_PER_VERTEX};
use crate::mesh::geodesic::MinItem;

/// Per-node distance from `seeds` over mesh edges, where node `(u, k)`
/// only reaches `(w, k + shift)`: a direction class never leaks into the
/// orthogonal one except through field singularities.
pub fn stratified_distances(graph: &TraceGraph, seeds: &[usize]) -> Vec<f64> {
    let mut dist = vec![f64::INFINITY; graph.num_nodes()];
    let mut heap = BinaryHeap::new();
    for &s in seeds {
        dist[s] = 0.0;
        heap.push(MinItem(0.0, s));
    }
    while let Some(MinItem(d, n)) = heap.pop() {
        if d > dist[n] {
            continue;
        }
        let (v, k) = (n / NODES_PER_VERTEX, n % NODES_PER_VERTEX);
        for t in graph.transport(v) {
            let m = node(t.to, k + t.shift);
            let nd = d + t.length;
            if nd < dist[m] {
                dist[m] = nd;
                heap.push(MinItem(nd, m));
            }
        }
    }
    dist
}

/// Mean over `a`'s nodes of the stratified distance to `b` (either
/// orientation of `b`'s class), each capped at the mesh diagonal.
pub fn path_distance(a: &TracePath, b: &TracePath, graph: &TraceGraph) -> f64 {
    let seeds: Vec<usize> = b
        .vertices
        .iter()
        .zip(&b.dirs)
        .flat_map(|(&v, &k)| [node(v, k), node(v, k + 2)])
        .collect();
    let d = stratified_distances(graph, &seeds);
    let cap = graph.diagonal();
    let nodes = a.nodes();
    if nodes.is_empty() {
        return cap;
    }
    nodes.iter().map(|&n| d[n].min(cap)).sum::<f64>() / nodes.len() as f64
}

/// The paths share a vertex in the same direction class (they run along
/// each other there rather than crossing).
pub fn tangential_intersection(a: &TracePath, b: &TracePath) -> bool {
    let classes: HashMap<usize, HashSet<usize>> =
        a.vertices.iter().zip(&a.dirs).fold(HashMap::new(), |mut m, (&v, &k)| {
            m.entry(v).or_default().insert(k % 2);
            m
        });
    b.vertices
        .iter()
        .zip(&b.dirs)
        .any(|(v, k)| classes.get(v).is_some_and(|c| c.contains(&(k % 2))))
}
