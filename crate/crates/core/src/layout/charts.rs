//! Wedge charts: a patch with its cut edges opened, plus the seam and dart
//! correspondences between wedge copies.

use std::collections::{HashMap, HashSet};

use super::{Layout, Segment};
use crate::error::MeshError;
use crate::param::{Chart, DartSpec, SeamPair};

#[derive(Debug, Clone)]
pub struct PatchChart {
    pub faces: Vec<usize>,
    pub chart: Chart,
    /// (mesh face, mesh vertex) → chart vertex.
    pub wedge: HashMap<(usize, usize), usize>,
    /// Seams with both sides in this patch (chart index 0).
    pub seams: Vec<SeamPair>,
    pub darts: Vec<DartSpec>,
    /// Mesh vertex of each dart tip, parallel to `darts`.
    pub dart_tips: Vec<usize>,
    /// Chart vertices on darts; not counted as corners.
    pub excluded: HashSet<usize>,
    /// Chart boundary edge (sorted chart vertices) → segment index, or
    /// `None` on the mesh boundary.
    pub boundary_labels: HashMap<(usize, usize), Option<usize>>,
}

struct UnionFind(Vec<usize>);

impl UnionFind {
    fn find(&mut self, mut x: usize) -> usize {
        while self.0[x] != x {
            self.0[x] = self.0[self.0[x]];
            x = self.0[x];
        }
        x
    }

    fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            let (lo, hi) = if ra < rb { (ra, rb) } else { (rb, ra) };
            self.0[hi] = lo;
        }
    }
}

/// Faces left and right of step `i` (vertex `i` to `i + 1`) of a chain.
pub(crate) fn step_sides(layout: &Layout, seg: &Segment, i: usize) -> (Option<usize>, Option<usize>) {
    let e = seg.edges[i];
    let [a, _] = layout.mesh.edges()[e];
    let [fa, fb] = layout.mesh.edge_faces(e);
    if seg.vertices[i] == a {
        (fa, fb)
    } else {
        (fb, fa)
    }
}

/// Sides at vertex `i` of a chain, taken from the adjacent step.
pub(crate) fn vertex_sides(layout: &Layout, seg: &Segment, i: usize) -> (Option<usize>, Option<usize>) {
    step_sides(layout, seg, i.min(seg.edges.len() - 1))
}

/// Segment reordered to start at its dart tip, if one end dangles.
pub(crate) fn dart_oriented(layout: &Layout, seg: &Segment) -> Option<Segment> {
    let (first, last) = (seg.vertices[0], *seg.vertices.last().unwrap());
    if seg.closed {
        return None;
    }
    match (layout.is_dangling(first), layout.is_dangling(last)) {
        (true, false) => Some(seg.clone()),
        (false, true) => {
            let mut s = seg.clone();
            s.vertices.reverse();
            s.edges.reverse();
            Some(s)
        }
        _ => None,
    }
}

/// Chart of one patch with cut edges inside it opened into wedge copies.
pub fn build_patch_chart(layout: &Layout, faces: &[usize], segments: &[Segment]) -> Result<PatchChart, MeshError> {
    let mesh = &layout.mesh;
    let mut local = HashMap::with_capacity(faces.len());
    for (i, &f) in faces.iter().enumerate() {
        local.insert(f, i);
    }
    let corner = |fi: usize, v: usize| {
        let slot = mesh.faces()[faces[fi]].iter().position(|&x| x == v).unwrap();
        3 * fi + slot
    };
    let mut uf = UnionFind((0..3 * faces.len()).collect());
    for (fi, &f) in faces.iter().enumerate() {
        for e in mesh.face_edges(f) {
            if layout.is_cut(e) {
                continue;
            }
            let Some(g) = mesh.opposite_face(e, f) else { continue };
            let Some(&gi) = local.get(&g) else { continue };
            for v in mesh.edges()[e] {
                uf.union(corner(fi, v), corner(gi, v));
            }
        }
    }
    let mut id_of_root = HashMap::new();
    let mut source_vertex = Vec::new();
    let mut wedge = HashMap::new();
    let mut chart_faces = Vec::with_capacity(faces.len());
    for (fi, &f) in faces.iter().enumerate() {
        let tri = mesh.faces()[f];
        let mut out = [0; 3];
        for (k, &v) in tri.iter().enumerate() {
            let r = uf.find(3 * fi + k);
            let id = *id_of_root.entry(r).or_insert_with(|| {
                source_vertex.push(v);
                source_vertex.len() - 1
            });
            out[k] = id;
            wedge.insert((f, v), id);
        }
        chart_faces.push(out);
    }
    let positions = source_vertex.iter().map(|&v| mesh.vertices()[v]).collect();
    let mut chart = Chart::new(positions, chart_faces, source_vertex.clone(), faces.to_vec())?;
    chart.poses = layout
        .poses
        .iter()
        .map(|p| source_vertex.iter().map(|&v| p[v]).collect())
        .collect();

    let inside = |f: Option<usize>| f.filter(|f| local.contains_key(f));
    let mut seams = Vec::new();
    let mut darts = Vec::new();
    let mut dart_tips = Vec::new();
    let mut dart_vertices = HashSet::new();
    let mut edge_segment = HashMap::new();
    for (si, seg) in segments.iter().enumerate() {
        for &e in &seg.edges {
            edge_segment.insert(e, si);
        }
        let interior = (0..seg.edges.len()).all(|i| {
            let (l, r) = step_sides(layout, seg, i);
            inside(l).is_some() && inside(r).is_some()
        });
        if !interior {
            continue;
        }
        let sides = |s: &Segment, range: std::ops::Range<usize>| -> (Vec<usize>, Vec<usize>) {
            range
                .map(|i| {
                    let (l, r) = vertex_sides(layout, s, i);
                    let v = s.vertices[i];
                    (wedge[&(l.unwrap(), v)], wedge[&(r.unwrap(), v)])
                })
                .unzip()
        };
        if let Some(d) = dart_oriented(layout, seg) {
            let tip_v = d.vertices[0];
            let tip_face = mesh.vertex_faces(tip_v).iter().find(|f| local.contains_key(f));
            let Some(&tf) = tip_face else { continue };
            let (p, q) = sides(&d, 1..d.vertices.len());
            dart_vertices.extend(d.vertices.iter().copied());
            darts.push(DartSpec {
                chart: 0,
                tip: wedge[&(tf, tip_v)],
                p,
                q,
            });
            dart_tips.push(tip_v);
        } else if !layout.is_dangling(seg.vertices[0]) {
            let n = if seg.closed { seg.vertices.len() - 1 } else { seg.vertices.len() };
            let (p, q) = sides(seg, 0..n);
            seams.push(SeamPair {
                id: seg.order,
                chart_p: 0,
                p,
                chart_q: 0,
                q,
            });
        }
    }
    let excluded: HashSet<usize> = wedge
        .iter()
        .filter(|((_, v), _)| dart_vertices.contains(v))
        .map(|(_, &c)| c)
        .collect();
    let mut boundary_labels = HashMap::new();
    for lp in chart.mesh.boundary_loops() {
        for i in 0..lp.len() {
            let (a, b) = (lp[i], lp[(i + 1) % lp.len()]);
            let key = if a < b { (a, b) } else { (b, a) };
            let e = mesh.edge_between(chart.source_vertex[a], chart.source_vertex[b]);
            let label = e.and_then(|e| edge_segment.get(&e).copied());
            boundary_labels.insert(key, label);
        }
    }
    Ok(PatchChart {
        faces: faces.to_vec(),
        chart,
        wedge,
        seams,
        darts,
        dart_tips,
        excluded,
        boundary_labels,
    })
}

/// Charts for every patch plus all seams (across and within patches) and
/// darts, indexed for a joint solve.
pub fn layout_charts(layout: &Layout) -> Result<(Vec<PatchChart>, Vec<SeamPair>, Vec<DartSpec>), MeshError> {
    let segments = layout.segments();
    let labels = layout.patch_labels();
    let patches = super::group_labels(&labels);
    let mut charts = Vec::with_capacity(patches.len());
    for faces in &patches {
        charts.push(build_patch_chart(layout, faces, &segments)?);
    }
    let mut seams = Vec::new();
    let mut darts = Vec::new();
    for (ci, pc) in charts.iter().enumerate() {
        for s in &pc.seams {
            seams.push(SeamPair {
                chart_p: ci,
                chart_q: ci,
                ..s.clone()
            });
        }
        for d in &pc.darts {
            darts.push(DartSpec { chart: ci, ..d.clone() });
        }
    }
    for seg in &segments {
        let (l0, r0) = step_sides(layout, seg, 0);
        let (Some(l0), Some(r0)) = (l0, r0) else { continue };
        let (cp, cq) = (labels[l0], labels[r0]);
        if cp == cq || layout.is_dangling(seg.vertices[0]) || layout.is_dangling(*seg.vertices.last().unwrap()) {
            continue;
        }
        let n = if seg.closed { seg.vertices.len() - 1 } else { seg.vertices.len() };
        let mut p = Vec::with_capacity(n);
        let mut q = Vec::with_capacity(n);
        for i in 0..n {
            let (l, r) = vertex_sides(layout, seg, i);
            let v = seg.vertices[i];
            p.push(charts[cp].wedge[&(l.unwrap(), v)]);
            q.push(charts[cq].wedge[&(r.unwrap(), v)]);
        }
        seams.push(SeamPair {
            id: seg.order,
            chart_p: cp,
            p,
            chart_q: cq,
            q,
        });
    }
    seams.sort_by_key(|s| s.id);
    Ok((charts, seams, darts))
}
