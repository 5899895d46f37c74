//! Darts: seams are sewn shut piece by piece from their flatter end; what
//! cannot be closed without breaking the goals stays open as a dart.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use super::check::PatchChecker;
use super::remove::affected_patches;
use super::{Layout, Segment};
use crate::mesh::geodesic::k_ring;
use crate::mesh::TriMesh;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DartRecord {
    /// Owning path of the processed segment.
    pub path: usize,
    /// Remaining dart tip; `None` when the seam was merged completely.
    pub tip: Option<usize>,
    pub merged_edges: usize,
    pub remaining_edges: usize,
    pub opening: f64,
    pub length: f64,
    /// Spanned Gaussian curvature of the segment.
    pub curvature: f64,
}

/// Sum of interior angle deficits within `rings` of the given vertices.
fn spanned_curvature(mesh: &TriMesh, vertices: &[usize], rings: usize) -> f64 {
    let region: BTreeSet<usize> = vertices.iter().flat_map(|&v| k_ring(mesh, v, rings)).collect();
    region
        .into_iter()
        .filter(|&v| !mesh.is_boundary_vertex(v))
        .map(|v| mesh.angle_deficit(v))
        .sum()
}

pub fn segment_curvature(mesh: &TriMesh, seg: &Segment, rings: usize) -> f64 {
    spanned_curvature(mesh, &seg.vertices, rings)
}

fn reversed(seg: &Segment) -> Segment {
    let mut s = seg.clone();
    s.vertices.reverse();
    s.edges.reverse();
    s
}

struct Merge {
    k: usize,
    m: usize,
    opening: f64,
    length: f64,
}

/// Largest number of leading pieces of `seg` that can be merged. Every
/// count is tried: an intermediate merge can fail where a longer one
/// passes (a dart running over a cone apex folds until its tip reaches the
/// apex).
fn best_merge(layout: &mut Layout, checker: &mut PatchChecker, seg: &Segment, pieces: usize) -> Option<Merge> {
    let goals = checker.options.goals;
    let n = seg.edges.len();
    let mut best = None;
    for k in 1..=pieces {
        let m = k * n / pieces;
        let saved = layout.uncut(&seg.edges[..m]);
        let patches = affected_patches(layout, &seg.edges[..m]);
        let checks = checker.check_many(layout, &patches);
        layout.restore(&saved);
        if !checks.iter().all(|c| c.passes()) {
            continue;
        }
        if k == pieces {
            best = Some(Merge { k, m, opening: 0.0, length: 0.0 });
            continue;
        }
        let tip = seg.vertices[m];
        let fits = checks.iter().find_map(|c| {
            let d = c.dart_metrics.iter().find(|d| d.tip == tip)?;
            let ok = d.opening >= goals.min_dart_angle && d.length <= goals.max_dart_fraction * c.extent;
            ok.then_some((d.opening, d.length))
        });
        if let Some((opening, length)) = fits {
            best = Some(Merge { k, m, opening, length });
        }
    }
    best
}

/// Processes open segments accepted by `filter` in increasing spanned
/// curvature (negative curvature last), merging each from its flatter end.
pub fn create_darts(layout: &mut Layout, checker: &mut PatchChecker, filter: impl Fn(&Segment) -> bool) -> Vec<DartRecord> {
    let options = checker.options;
    let rings = options.curvature_rings;
    let mut segs: Vec<(f64, Segment)> = layout
        .segments()
        .into_iter()
        .filter(|s| !s.closed && filter(s))
        .map(|s| (segment_curvature(&layout.mesh, &s, rings), s))
        .collect();
    segs.sort_by(|a, b| (a.0 < 0.0).cmp(&(b.0 < 0.0)).then(a.0.abs().total_cmp(&b.0.abs())));
    let mut out = Vec::new();
    for (curvature, seg) in segs {
        if seg.edges.iter().any(|&e| layout.owner(e) != Some(seg.path)) {
            continue;
        }
        let ends = [seg.vertices[0], *seg.vertices.last().unwrap()];
        if ends.iter().any(|&v| layout.is_dangling(v)) {
            continue;
        }
        let n = seg.edges.len();
        let pieces = options.dart_subpaths.clamp(1, n);
        let head = n.div_ceil(pieces);
        let front = spanned_curvature(&layout.mesh, &seg.vertices[..=head], rings).abs();
        let back = spanned_curvature(&layout.mesh, &seg.vertices[n - head..], rings).abs();
        let order = if front <= back {
            [seg.clone(), reversed(&seg)]
        } else {
            [reversed(&seg), seg.clone()]
        };
        for s in order {
            let Some(best) = best_merge(layout, checker, &s, pieces) else { continue };
            layout.uncut(&s.edges[..best.m]);
            out.push(DartRecord {
                path: s.path,
                tip: (best.k < pieces).then(|| s.vertices[best.m]),
                merged_edges: best.m,
                remaining_edges: n - best.m,
                opening: best.opening,
                length: best.length,
                curvature,
            });
            break;
        }
    }
    out
}
