//! Edge-graph Dijkstra helpers (approximate geodesics).

use std::cmp::Ordering;
use std::collections::{BinaryHeap, HashMap};

use super::TriMesh;

/// Heap entry ordered so that `BinaryHeap` pops the smallest distance first,
/// ties broken by smaller node id.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MinItem(pub f64, pub usize);

impl Eq for MinItem {}

impl Ord for MinItem {
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .0
            .total_cmp(&self.0)
            .then_with(|| other.1.cmp(&self.1))
    }
}

impl PartialOrd for MinItem {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Distances from `sources` along mesh edges; unreached vertices get
/// infinity. Vertices farther than `limit` are not expanded.
pub fn edge_distances(mesh: &TriMesh, sources: &[usize], limit: f64) -> Vec<f64> {
    let mut dist = vec![f64::INFINITY; mesh.num_vertices()];
    let mut heap = BinaryHeap::new();
    for &s in sources {
        dist[s] = 0.0;
        heap.push(MinItem(0.0, s));
    }
    let p = mesh.vertices();
    while let Some(MinItem(d, v)) = heap.pop() {
        if d > dist[v] || d > limit {
            continue;
        }
        for &w in mesh.neighbors(v) {
            let nd = d + (p[v] - p[w]).norm();
            if nd < dist[w] {
                dist[w] = nd;
                heap.push(MinItem(nd, w));
            }
        }
    }
    dist
}

/// Vertices within edge-graph distance `radius` of `v` (including `v`),
/// sorted by index.
pub fn ball(mesh: &TriMesh, v: usize, radius: f64) -> Vec<usize> {
    let mut dist: HashMap<usize, f64> = HashMap::new();
    let mut heap = BinaryHeap::new();
    dist.insert(v, 0.0);
    heap.push(MinItem(0.0, v));
    let p = mesh.vertices();
    while let Some(MinItem(d, u)) = heap.pop() {
        if d > dist[&u] {
            continue;
        }
        for &w in mesh.neighbors(u) {
            let nd = d + (p[u] - p[w]).norm();
            if nd <= radius && dist.get(&w).is_none_or(|&old| nd < old) {
                dist.insert(w, nd);
                heap.push(MinItem(nd, w));
            }
        }
    }
    let mut out: Vec<usize> = dist.into_keys().collect();
    out.sort_unstable();
    out
}

/// Vertices within `rings` edge hops of `v`, sorted by index.
pub fn k_ring(mesh: &TriMesh, v: usize, rings: usize) -> Vec<usize> {
    let mut seen = vec![v];
    let mut frontier = vec![v];
    for _ in 0..rings {
        let mut next = Vec::new();
        for &u in &frontier {
            for &w in mesh.neighbors(u) {
                if !seen.contains(&w) {
                    seen.push(w);
                    next.push(w);
                }
            }
        }
        frontier = next;
    }
    seen.sort_unstable();
    seen
}
