//! Candidate paths: loops from farthest-point interior sources,
//! border-to-border paths from subsampled boundary vertices, sketches.

use std::collections::{BinaryHeap, HashMap, HashSet};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::charts::build_patch_chart;
use super::{Layout, LayoutContext, LayoutOptions, PathOrigin};
use crate::error::LayoutError;
use crate::field::CrossField;
use crate::mesh::geodesic::{edge_distances, MinItem};
use crate::mesh::{SurfacePoint, TriMesh};
use crate::trace::{
    build_graph, classify_path, node, trace_border_to_border, trace_loop, trace_to_border, BoundaryLabel, TraceGraph,
    TracePath,
};

#[derive(Debug, Clone, PartialEq)]
pub struct Candidate {
    pub path: TracePath,
    pub mandatory: bool,
    pub origin: PathOrigin,
}

/// Up to `count` interior vertices spread by farthest-point sampling from a
/// seeded random start.
pub fn farthest_point_sources(mesh: &TriMesh, count: usize, seed: u64) -> Vec<usize> {
    let interior: Vec<usize> = (0..mesh.num_vertices()).filter(|&v| !mesh.is_boundary_vertex(v)).collect();
    if interior.is_empty() || count == 0 {
        return Vec::new();
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let first = interior[rng.random_range(0..interior.len())];
    let mut dist = edge_distances(mesh, &[first], f64::INFINITY);
    let mut chosen = vec![first];
    while chosen.len() < count.min(interior.len()) {
        let (next, far) = interior
            .iter()
            .map(|&v| (v, dist[v]))
            .fold((usize::MAX, -1.0), |b, c| if c.1 > b.1 { c } else { b });
        if far <= 0.0 {
            break;
        }
        chosen.push(next);
        let d = edge_distances(mesh, &[next], far);
        for (o, n) in dist.iter_mut().zip(d) {
            *o = o.min(n);
        }
    }
    chosen
}

fn entrance(graph: &TraceGraph, v: usize) -> Option<usize> {
    (0..4).map(|k| node(v, k)).find(|&n| graph.label(n) == BoundaryLabel::Entrance)
}

/// Loops and border-to-border paths on `graph`, best aligned first
/// (weight per length), not deduplicated.
fn trace_pool(graph: &TraceGraph, mesh: &TriMesh, sources: &[usize], stride: usize) -> Vec<TracePath> {
    let mut loops: Vec<TracePath> = sources
        .par_iter()
        .flat_map_iter(|&s| (0..2).filter_map(move |k| trace_loop(graph, node(s, k))))
        .collect();
    let starts: Vec<usize> = mesh
        .boundary_loops()
        .iter()
        .flat_map(|lp| lp.iter().copied().step_by(stride.max(1)))
        .collect();
    let borders: Vec<TracePath> = starts
        .par_iter()
        .filter_map(|&v| entrance(graph, v).and_then(|n| trace_border_to_border(graph, n)))
        .collect();
    loops.extend(borders);
    loops.retain(|p| p.length > 0.0);
    loops.sort_by(|a, b| (a.weight / a.length).total_cmp(&(b.weight / b.length)));
    loops
}

/// Drops candidates sharing at least `overlap` of the smaller vertex set
/// with an earlier kept one. Mandatory candidates are always kept.
pub fn dedup_candidates(cands: Vec<Candidate>, overlap: f64) -> Vec<Candidate> {
    let mut kept: Vec<(Candidate, HashSet<usize>)> = Vec::new();
    for c in cands {
        let set: HashSet<usize> = c.path.vertices.iter().copied().collect();
        let dup = !c.mandatory
            && kept.iter().any(|(_, k)| {
                let shared = set.intersection(k).count() as f64;
                shared >= overlap * set.len().min(k.len()) as f64
            });
        if !dup {
            kept.push((c, set));
        }
    }
    kept.into_iter().map(|(c, _)| c).collect()
}

/// Mandatory sketch paths first, then traced candidates.
pub fn sample_candidates(
    graph: &TraceGraph,
    mesh: &TriMesh,
    options: &LayoutOptions,
    sketches: &[TracePath],
) -> Vec<Candidate> {
    let n = options
        .min_interior_sources
        .max((mesh.num_vertices() as f64 * options.interior_source_ratio).ceil() as usize);
    let sources = farthest_point_sources(mesh, n, options.seed);
    let mut out: Vec<Candidate> = sketches
        .iter()
        .map(|p| Candidate {
            path: p.clone(),
            mandatory: true,
            origin: PathOrigin::Sketch,
        })
        .collect();
    out.extend(trace_pool(graph, mesh, &sources, options.boundary_stride).into_iter().map(|path| Candidate {
        path,
        mandatory: false,
        origin: PathOrigin::Candidate,
    }));
    dedup_candidates(out, options.dedup_overlap)
}

fn edge_path(mesh: &TriMesh, from: usize, to: usize) -> Option<Vec<usize>> {
    let p = mesh.vertices();
    let mut dist: HashMap<usize, f64> = HashMap::new();
    let mut prev: HashMap<usize, usize> = HashMap::new();
    let mut heap = BinaryHeap::new();
    dist.insert(from, 0.0);
    heap.push(MinItem(0.0, from));
    while let Some(MinItem(d, v)) = heap.pop() {
        if v == to {
            let mut out = vec![to];
            while let Some(&u) = prev.get(out.last().unwrap()) {
                out.push(u);
            }
            out.reverse();
            return Some(out);
        }
        if d > dist[&v] {
            continue;
        }
        for &w in mesh.neighbors(v) {
            let nd = d + (p[w] - p[v]).norm();
            if dist.get(&w).is_none_or(|&o| nd < o) {
                dist.insert(w, nd);
                prev.insert(w, v);
                heap.push(MinItem(nd, w));
            }
        }
    }
    None
}

/// Continues an open polyline from its last vertex along the field until
/// it reaches the boundary.
fn extend_end(graph: &TraceGraph, verts: &mut Vec<usize>) {
    let n = verts.len();
    let end = verts[n - 1];
    if graph.is_boundary(end) {
        return;
    }
    let t = graph.position(end) - graph.position(verts[n - 2]);
    let d = &graph.field().dirs[end];
    let k = (1..4).fold(0, |b, k| if d[k].dot(&t) > d[b].dot(&t) { k } else { b });
    if let Some(ext) = trace_to_border(graph, node(end, k)) {
        let seen: HashSet<usize> = verts.iter().copied().collect();
        for &v in &ext.vertices[1..] {
            if seen.contains(&v) {
                break;
            }
            verts.push(v);
        }
    }
}

/// Sketch strokes (surface polylines) snapped to mesh vertices, joined by
/// shortest edge paths and, when open, extended along the field to the
/// boundary.
pub fn sketch_paths(graph: &TraceGraph, mesh: &TriMesh, strokes: &[Vec<SurfacePoint>]) -> Result<Vec<TracePath>, LayoutError> {
    let mut out = Vec::with_capacity(strokes.len());
    for (si, stroke) in strokes.iter().enumerate() {
        let bad = |msg: &str| LayoutError::BadStroke {
            stroke: si,
            msg: msg.to_string(),
        };
        if stroke.len() < 2 {
            return Err(bad("needs at least two points"));
        }
        let mut snapped: Vec<usize> = Vec::with_capacity(stroke.len());
        for p in stroke {
            if p.face >= mesh.num_faces() {
                return Err(bad(&format!("face {} out of range", p.face)));
            }
            if !p.is_valid(1e-6) {
                return Err(bad("barycentric coordinates must be non-negative and sum to 1"));
            }
            let slot = (1..3).fold(0, |b, k| if p.bary[k] > p.bary[b] { k } else { b });
            let v = mesh.faces()[p.face][slot];
            if snapped.last() != Some(&v) {
                snapped.push(v);
            }
        }
        if snapped.len() < 2 {
            return Err(bad("stroke collapses to a single vertex"));
        }
        let mut verts = vec![snapped[0]];
        for w in snapped.windows(2) {
            let seg = edge_path(mesh, w[0], w[1]).ok_or_else(|| bad("points are not connected"))?;
            verts.extend_from_slice(&seg[1..]);
        }
        // a stroke ending next to where it began is drawn as a loop
        let (first, last) = (verts[0], verts[verts.len() - 1]);
        if verts.len() > 3 && first != last && mesh.edge_between(first, last).is_some() {
            verts.push(first);
        }
        let closed = verts.len() > 3 && verts[0] == verts[verts.len() - 1];
        if !closed {
            extend_end(graph, &mut verts);
            verts.reverse();
            extend_end(graph, &mut verts);
            verts.reverse();
        }
        out.push(classify_path(graph, &verts, closed));
    }
    Ok(out)
}

/// Candidates traced on one patch alone, with its cuts acting as boundary;
/// mapped back to mesh vertices and classified on the global graph. They
/// may end on existing cuts (T-junctions).
pub fn local_candidates(layout: &Layout, ctx: &LayoutContext, faces: &[usize], seed: u64) -> Vec<Candidate> {
    let segments = layout.segments();
    let Ok(pc) = build_patch_chart(layout, faces, &segments) else { return Vec::new() };
    let cm = &pc.chart.mesh;
    let field = CrossField {
        theta: pc.chart.source_face.iter().map(|&f| ctx.field.theta[f]).collect(),
        constrained: pc.chart.source_face.iter().map(|&f| ctx.field.constrained[f]).collect(),
        singularities: Vec::new(),
    };
    let opts = &ctx.options;
    let g = build_graph(cm, &field, opts.trace);
    let n = 10usize.max((cm.num_vertices() as f64 * opts.interior_source_ratio).ceil() as usize);
    let sources = farthest_point_sources(cm, n, seed);
    let stride = (opts.boundary_stride / 2).max(1);
    let cands = trace_pool(&g, cm, &sources, stride)
        .into_iter()
        .filter_map(|p| {
            let verts: Vec<usize> = p.vertices.iter().map(|&v| pc.chart.source_vertex[v]).collect();
            let closed = verts.len() > 3 && verts[0] == verts[verts.len() - 1];
            let distinct: HashSet<usize> = verts.iter().copied().collect();
            if distinct.len() + usize::from(closed) != verts.len() {
                return None;
            }
            Some(Candidate {
                path: classify_path(&ctx.graph, &verts, closed),
                mandatory: false,
                origin: PathOrigin::Local,
            })
        })
        .collect();
    dedup_candidates(cands, opts.dedup_overlap)
}
