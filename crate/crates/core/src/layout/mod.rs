//! Patch layout: greedy insertion of traced paths until every patch
//! flattens within the goals, reverse-order removal of redundant segments,
//! darts by partial merging, and reduction of the symmetry-plane seam.
//!
//! Cuts live on mesh edges. Each cut edge remembers the path that put it
//! there; patches are the face components left when cut edges are not
//! crossed.

mod candidates;
mod charts;
mod check;
mod darts;
mod document;
mod insert;
mod remove;
mod symmetry;

use std::collections::{HashMap, HashSet};

use serde::{Deserialize, Serialize};

pub use candidates::{
    dedup_candidates, farthest_point_sources, local_candidates, sample_candidates, sketch_paths, Candidate,
};
pub use charts::{build_patch_chart, layout_charts, PatchChart};
pub use check::{count_corners, FailReason, PatchCheck, PatchChecker};
pub use darts::{create_darts, segment_curvature, DartRecord};
pub use document::{LayoutDocument, LAYOUT_VERSION};
pub use insert::{insert_until_goals, InsertReport};
pub use remove::remove_redundant;
pub use symmetry::{mirror_merge, plane_edges, reduce_symmetry_seam};

use crate::error::LayoutError;
use crate::mesh::{SymmetryPlane, TriMesh, Vec3};
use crate::param::{SolverOptions, Weights};
use crate::trace::TraceOptions;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LayoutGoals {
    /// C: corners allowed per patch.
    pub max_corners: usize,
    /// s_max: allowed thread stretch.
    pub max_stretch: f64,
    /// Dart length over patch extent.
    pub max_dart_fraction: f64,
    /// Narrower darts are not worth sewing (radians).
    pub min_dart_angle: f64,
}

impl Default for LayoutGoals {
    fn default() -> Self {
        Self {
            max_corners: 8,
            max_stretch: 0.05,
            max_dart_fraction: 0.5,
            min_dart_angle: 0.1,
        }
    }
}

impl LayoutGoals {
    pub fn validate(&self) -> Result<(), LayoutError> {
        if self.max_corners < 4 {
            return Err(LayoutError::InvalidGoals(format!("C = {} < 4", self.max_corners)));
        }
        if !(self.max_stretch > 0.0 && self.max_stretch.is_finite()) {
            return Err(LayoutError::InvalidGoals(format!("s_max = {}", self.max_stretch)));
        }
        if !(self.max_dart_fraction > 0.0 && self.min_dart_angle >= 0.0) {
            return Err(LayoutError::InvalidGoals("dart parameters".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LayoutOptions {
    pub goals: LayoutGoals,
    pub weights: Weights,
    pub solver: SolverOptions,
    pub trace: TraceOptions,
    /// Interior loop sources: max(min_interior_sources, V · interior_source_ratio).
    pub min_interior_sources: usize,
    pub interior_source_ratio: f64,
    /// Every n-th boundary vertex starts a border-to-border path.
    pub boundary_stride: usize,
    /// Candidates sharing this fraction of vertices with an earlier one are dropped.
    pub dedup_overlap: f64,
    pub dart_subpaths: usize,
    pub curvature_rings: usize,
    /// Rounds of per-patch candidate refinement.
    pub max_depth: usize,
    pub seed: u64,
}

impl Default for LayoutOptions {
    fn default() -> Self {
        Self {
            goals: LayoutGoals::default(),
            weights: Weights::default(),
            solver: SolverOptions::default(),
            trace: TraceOptions::default(),
            min_interior_sources: 50,
            interior_source_ratio: 1.0 / 30.0,
            boundary_stride: 4,
            dedup_overlap: 0.9,
            dart_subpaths: 4,
            curvature_rings: 2,
            max_depth: 5,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PathOrigin {
    Sketch,
    Candidate,
    Local,
    Mirror,
    Symmetry,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LayoutPath {
    pub vertices: Vec<usize>,
    pub closed: bool,
    pub origin: PathOrigin,
}

/// A maximal run of cut edges owned by one path between junctions
/// (vertices where the cut branches or ends, the mesh boundary, or where
/// the owning path changes).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Segment {
    pub path: usize,
    pub vertices: Vec<usize>,
    pub edges: Vec<usize>,
    pub closed: bool,
    /// Position in insertion order (owning path, then place along it).
    pub order: usize,
}

impl Segment {
    pub fn length(&self, mesh: &TriMesh) -> f64 {
        self.edges.iter().map(|&e| mesh.edge_length(e)).sum()
    }
}

#[derive(Debug, Clone)]
pub struct Layout {
    pub mesh: TriMesh,
    /// Extra poses of the mesh (rest pose excluded).
    pub poses: Vec<Vec<Vec3>>,
    /// Inserted paths in insertion order.
    pub paths: Vec<LayoutPath>,
    cut: Vec<Option<usize>>,
    pub symmetry: Option<SymmetryPlane>,
}

impl Layout {
    pub fn new(mesh: TriMesh, poses: Vec<Vec<Vec3>>) -> Self {
        let ne = mesh.num_edges();
        Self {
            mesh,
            poses,
            paths: Vec::new(),
            cut: vec![None; ne],
            symmetry: None,
        }
    }

    /// Owning path of edge `e`, if cut.
    pub fn owner(&self, e: usize) -> Option<usize> {
        self.cut[e]
    }

    pub fn is_cut(&self, e: usize) -> bool {
        self.cut[e].is_some()
    }

    pub fn cut_edges(&self) -> Vec<usize> {
        (0..self.cut.len()).filter(|&e| self.cut[e].is_some()).collect()
    }

    pub fn set_cut(&mut self, e: usize, owner: Option<usize>) {
        self.cut[e] = owner;
    }

    /// Appends a path and cuts its interior edges that are not cut yet.
    pub fn insert_path(&mut self, vertices: Vec<usize>, closed: bool, origin: PathOrigin) -> usize {
        let id = self.paths.len();
        for w in vertices.windows(2) {
            if let Some(e) = self.mesh.edge_between(w[0], w[1]) {
                if !self.mesh.is_boundary_edge(e) && self.cut[e].is_none() {
                    self.cut[e] = Some(id);
                }
            }
        }
        self.paths.push(LayoutPath { vertices, closed, origin });
        id
    }

    /// Patch label per face.
    pub fn patch_labels(&self) -> Vec<usize> {
        self.mesh.face_labels(|e| self.cut[e].is_none())
    }

    /// Face lists of all patches, ordered by their smallest face.
    pub fn patches(&self) -> Vec<Vec<usize>> {
        group_labels(&self.patch_labels())
    }

    pub fn num_patches(&self) -> usize {
        self.patch_labels().iter().max().map_or(0, |m| m + 1)
    }

    pub fn cut_degree(&self, v: usize) -> usize {
        self.mesh
            .neighbors(v)
            .iter()
            .filter(|&&w| self.mesh.edge_between(v, w).is_some_and(|e| self.is_cut(e)))
            .count()
    }

    /// Interior vertex where a cut ends (a dart tip).
    pub fn is_dangling(&self, v: usize) -> bool {
        !self.mesh.is_boundary_vertex(v) && self.cut_degree(v) == 1
    }

    pub fn segments(&self) -> Vec<Segment> {
        let mesh = &self.mesh;
        let nv = mesh.num_vertices();
        let mut adj: Vec<Vec<(usize, usize)>> = vec![Vec::new(); nv];
        for e in self.cut_edges() {
            let [a, b] = mesh.edges()[e];
            adj[a].push((b, e));
            adj[b].push((a, e));
        }
        let junction: Vec<bool> = (0..nv)
            .map(|v| {
                adj[v].len() != 2
                    || mesh.is_boundary_vertex(v)
                    || self.cut[adj[v][0].1] != self.cut[adj[v][1].1]
            })
            .collect();
        let mut used = HashSet::new();
        let mut out = Vec::new();
        let walk = |start: usize, first: (usize, usize), used: &mut HashSet<usize>| {
            let mut verts = vec![start];
            let mut edges = Vec::new();
            let mut step = first;
            loop {
                used.insert(step.1);
                edges.push(step.1);
                let v = step.0;
                verts.push(v);
                if junction[v] || v == start {
                    break;
                }
                match adj[v].iter().find(|(_, e)| !used.contains(e)) {
                    Some(&s) => step = s,
                    None => break,
                }
            }
            let closed = verts.len() > 2 && verts[0] == verts[verts.len() - 1];
            Segment {
                path: self.cut[edges[0]].unwrap(),
                vertices: verts,
                edges,
                closed,
                order: 0,
            }
        };
        for v in 0..nv {
            if !junction[v] {
                continue;
            }
            for &s in &adj[v] {
                if !used.contains(&s.1) {
                    out.push(walk(v, s, &mut used));
                }
            }
        }
        for v in 0..nv {
            for &s in &adj[v] {
                if !used.contains(&s.1) {
                    out.push(walk(v, s, &mut used));
                }
            }
        }
        // insertion order: owning path, then first position along it
        let mut pos: HashMap<(usize, usize), usize> = HashMap::new();
        for (pid, p) in self.paths.iter().enumerate() {
            for (i, w) in p.vertices.windows(2).enumerate() {
                if let Some(e) = mesh.edge_between(w[0], w[1]) {
                    pos.entry((pid, e)).or_insert(i);
                }
            }
        }
        let key = |s: &Segment| {
            let p = s.edges.iter().filter_map(|&e| pos.get(&(s.path, e))).min().copied();
            (s.path, p.unwrap_or(usize::MAX), s.edges[0])
        };
        out.sort_by_key(|s| key(s));
        for (i, s) in out.iter_mut().enumerate() {
            s.order = i;
        }
        out
    }

    /// Removes the cut along `edges` (any owners).
    pub(crate) fn uncut(&mut self, edges: &[usize]) -> Vec<(usize, Option<usize>)> {
        let saved = edges.iter().map(|&e| (e, self.cut[e])).collect();
        for &e in edges {
            self.cut[e] = None;
        }
        saved
    }

    pub(crate) fn restore(&mut self, saved: &[(usize, Option<usize>)]) {
        for &(e, o) in saved {
            self.cut[e] = o;
        }
    }
}

pub(crate) fn group_labels(labels: &[usize]) -> Vec<Vec<usize>> {
    let n = labels.iter().max().map_or(0, |m| m + 1);
    let mut out = vec![Vec::new(); n];
    for (f, &l) in labels.iter().enumerate() {
        out[l].push(f);
    }
    out
}

/// Shared state of a layout session: the tracing graph and field on the
/// (possibly halved) mesh.
#[derive(Debug, Clone)]
pub struct LayoutContext {
    pub graph: crate::trace::TraceGraph,
    pub field: crate::field::CrossField,
    pub options: LayoutOptions,
}

/// Result of the full layout stage.
#[derive(Debug, Clone)]
pub struct LayoutRun {
    pub layout: Layout,
    pub insert: InsertReport,
    pub removed: usize,
    pub darts: Vec<DartRecord>,
}

/// Insertion, removal and dart creation on one mesh.
pub fn run_layout(
    mesh: &TriMesh,
    poses: Vec<Vec<Vec3>>,
    ctx: &LayoutContext,
    sketches: &[crate::trace::TracePath],
    checker: &mut PatchChecker,
) -> Result<LayoutRun, LayoutError> {
    ctx.options.goals.validate()?;
    let mut layout = Layout::new(mesh.clone(), poses);
    let candidates = sample_candidates(&ctx.graph, mesh, &ctx.options, sketches);
    let insert = insert_until_goals(&mut layout, ctx, candidates, checker)?;
    // sketched seams are the designer's, never removed or darted
    let sketched: Vec<bool> = layout.paths.iter().map(|p| p.origin == PathOrigin::Sketch).collect();
    let removed = remove_redundant(&mut layout, checker, |s| !sketched[s.path]);
    let darts = create_darts(&mut layout, checker, |s| !sketched[s.path]);
    Ok(LayoutRun {
        layout,
        insert,
        removed,
        darts,
    })
}
