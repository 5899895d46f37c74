//! Loop and border-to-border tracing by Dijkstra over the direction graph.

use std::collections::{BinaryHeap, HashMap, HashSet};
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::{node, node_dir, node_vertex, BoundaryLabel, TraceGraph};
use crate::mesh::geodesic::MinItem;
use crate::mesh::TriMesh;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TracePath {
    /// Consecutive vertices are mesh neighbours; closed paths repeat the
    /// first vertex at the end.
    pub vertices: Vec<usize>,
    /// Direction index at each vertex.
    pub dirs: Vec<usize>,
    pub closed: bool,
    pub length: f64,
    pub weight: f64,
}

impl TracePath {
    pub fn nodes(&self) -> Vec<usize> {
        self.vertices.iter().zip(&self.dirs).map(|(&v, &k)| node(v, k)).collect()
    }

    /// Vertices without the closing repeat.
    pub fn distinct(&self) -> &[usize] {
        if self.closed && self.vertices.len() > 1 {
            &self.vertices[..self.vertices.len() - 1]
        } else {
            &self.vertices
        }
    }

    /// Mesh edges `(a, b)` along the path.
    pub fn steps(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.vertices.windows(2).map(|w| (w[0], w[1]))
    }

    /// Passes no vertex twice in the same direction class.
    pub fn is_simple_in_class(&self) -> bool {
        let mut seen = HashSet::new();
        self.distinct()
            .iter()
            .zip(&self.dirs)
            .all(|(&v, &k)| seen.insert((v, k % 2)))
    }

    pub fn reversed(&self) -> Self {
        let mut p = self.clone();
        p.vertices.reverse();
        p.dirs.reverse();
        p.dirs.iter_mut().for_each(|k| *k = (*k + 2) % 4);
        p
    }
}

fn finish(graph: &TraceGraph, nodes: Vec<usize>, closed: bool) -> Option<TracePath> {
    let vertices: Vec<usize> = nodes.iter().map(|&n| node_vertex(n)).collect();
    let dirs: Vec<usize> = nodes.iter().map(|&n| node_dir(n)).collect();
    let mut length = 0.0;
    let mut weight = 0.0;
    for w in nodes.windows(2) {
        length += (graph.position(node_vertex(w[1])) - graph.position(node_vertex(w[0]))).norm();
        weight += graph.arc_weight(w[0], w[1])?;
    }
    let p = TracePath {
        vertices,
        dirs,
        closed,
        length,
        weight,
    };
    p.is_simple_in_class().then_some(p)
}

fn unwind(prev: &HashMap<usize, usize>, mut n: usize) -> Vec<usize> {
    let mut out = vec![n];
    while let Some(&p) = prev.get(&n) {
        out.push(p);
        n = p;
    }
    out.reverse();
    out
}

/// The loop bounds a disk on one side (only checked on meshes with
/// boundary; on closed surfaces every loop separates).
fn is_contractible(mesh: &TriMesh, vertices: &[usize]) -> bool {
    if mesh.boundary_loops().is_empty() {
        return false;
    }
    let cut: HashSet<usize> = vertices
        .windows(2)
        .filter_map(|w| mesh.edge_between(w[0], w[1]))
        .collect();
    let labels = mesh.face_labels(|e| !cut.contains(&e));
    let n = labels.iter().max().map_or(0, |m| m + 1);
    if n < 2 {
        return false;
    }
    (0..n).any(|c| {
        let faces: Vec<usize> = (0..mesh.num_faces()).filter(|&f| labels[f] == c).collect();
        let verts: HashSet<usize> = faces.iter().flat_map(|&f| mesh.faces()[f]).collect();
        let edges: HashSet<usize> = faces.iter().flat_map(|&f| mesh.face_edges(f)).collect();
        verts.len() as i64 - edges.len() as i64 + faces.len() as i64 == 1
    })
}

/// Minimal-weight field-aligned cycle through `source` that avoids the
/// boundary and is not contractible, or `None`.
pub fn trace_loop(graph: &TraceGraph, source: usize) -> Option<TracePath> {
    if graph.is_boundary(node_vertex(source)) {
        return None;
    }
    let mut dist: HashMap<usize, f64> = HashMap::new();
    let mut prev: HashMap<usize, usize> = HashMap::new();
    let mut heap = BinaryHeap::new();
    dist.insert(source, 0.0);
    heap.push(MinItem(0.0, source));
    let mut best: Option<(f64, usize)> = None;
    while let Some(MinItem(d, n)) = heap.pop() {
        if best.is_some_and(|(b, _)| d >= b) {
            break;
        }
        if d > dist[&n] {
            continue;
        }
        for a in graph.arcs(n) {
            let nd = d + a.weight;
            if a.to == source {
                if best.is_none_or(|(b, _)| nd < b) {
                    best = Some((nd, n));
                }
                continue;
            }
            if graph.is_boundary(node_vertex(a.to)) {
                continue;
            }
            if dist.get(&a.to).is_none_or(|&old| nd < old) {
                dist.insert(a.to, nd);
                prev.insert(a.to, n);
                heap.push(MinItem(nd, a.to));
            }
        }
    }
    let (_, last) = best?;
    let mut nodes = unwind(&prev, last);
    nodes.push(source);
    let path = finish(graph, nodes, true)?;
    (!is_contractible(graph.mesh(), &path.vertices)).then_some(path)
}

/// Minimal-weight path from an entrance node to an exit node of another
/// boundary vertex; other boundary nodes are not passed.
pub fn trace_border_to_border(graph: &TraceGraph, source: usize) -> Option<TracePath> {
    if graph.label(source) != BoundaryLabel::Entrance {
        return None;
    }
    trace_to_border(graph, source)
}

/// Minimal-weight path from any node to an exit node on the boundary.
pub fn trace_to_border(graph: &TraceGraph, source: usize) -> Option<TracePath> {
    let sv = node_vertex(source);
    let mut dist: HashMap<usize, f64> = HashMap::new();
    let mut prev: HashMap<usize, usize> = HashMap::new();
    let mut heap = BinaryHeap::new();
    dist.insert(source, 0.0);
    heap.push(MinItem(0.0, source));
    while let Some(MinItem(d, n)) = heap.pop() {
        if d > dist[&n] {
            continue;
        }
        if n != source && graph.is_boundary(node_vertex(n)) {
            return finish(graph, unwind(&prev, n), false);
        }
        for a in graph.arcs(n) {
            let tv = node_vertex(a.to);
            if graph.is_boundary(tv) && (tv == sv || graph.label(a.to) != BoundaryLabel::Exit) {
                continue;
            }
            let along_boundary = graph.is_boundary(node_vertex(n))
                && graph.is_boundary(tv)
                && graph
                    .mesh()
                    .edge_between(node_vertex(n), tv)
                    .is_some_and(|e| graph.mesh().is_boundary_edge(e));
            if along_boundary {
                continue;
            }
            let nd = d + a.weight;
            if dist.get(&a.to).is_none_or(|&old| nd < old) {
                dist.insert(a.to, nd);
                prev.insert(a.to, n);
                heap.push(MinItem(nd, a.to));
            }
        }
    }
    None
}

/// Assigns each vertex of a mesh-edge polyline the direction best aligned
/// with the local tangent. Steps with no graph arc count their length as
/// weight.
pub fn classify_path(graph: &TraceGraph, vertices: &[usize], closed: bool) -> TracePath {
    let n = vertices.len();
    let p = |i: usize| graph.position(vertices[i]);
    let mut dirs = Vec::with_capacity(n);
    for i in 0..n {
        let (a, b) = if closed && n > 2 {
            let m = n - 1;
            let j = i % m;
            ((j + m - 1) % m, (j + 1) % m)
        } else {
            (i.saturating_sub(1), (i + 1).min(n - 1))
        };
        let t = p(b) - p(a);
        let d = &graph.field().dirs[vertices[i]];
        dirs.push((1..4).fold(0, |best, k| if d[k].dot(&t) > d[best].dot(&t) { k } else { best }));
    }
    let mut length = 0.0;
    let mut weight = 0.0;
    for i in 1..n {
        let l = (p(i) - p(i - 1)).norm();
        length += l;
        weight += graph
            .arc_weight(node(vertices[i - 1], dirs[i - 1]), node(vertices[i], dirs[i]))
            .unwrap_or(l);
    }
    TracePath {
        vertices: vertices.to_vec(),
        dirs,
        closed,
        length,
        weight,
    }
}

/// Polyline OBJ of the paths over the mesh positions.
pub fn paths_to_obj(mesh: &TriMesh, paths: &[TracePath]) -> String {
    let mut s = String::new();
    for p in mesh.vertices() {
        let _ = writeln!(s, "v {} {} {}", p.x, p.y, p.z);
    }
    for (i, path) in paths.iter().enumerate() {
        let _ = writeln!(s, "o path{i}");
        s.push('l');
        for v in &path.vertices {
            let _ = write!(s, " {}", v + 1);
        }
        s.push('\n');
    }
    s
}
