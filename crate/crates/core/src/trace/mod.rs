//! Field-aligned path tracing on a four-direction graph.
//!
//! Every mesh vertex carries four nodes, one per cross-field direction.
//! Arcs connect `(u, k)` to `(w, k')` when the mesh edge `uw` runs roughly
//! along direction `k` at `u` and `k'` is the direction at `w` matching `k`
//! after transporting `w`'s tangent plane onto `u`'s.

mod distance;
mod path;
mod smooth;

use std::f64::consts::FRAC_PI_4;

use nalgebra::UnitQuaternion;
use serde::{Deserialize, Serialize};

pub use distance::{path_distance, stratified_distances, tangential_intersection};
pub use path::{classify_path, paths_to_obj, trace_border_to_border, trace_loop, trace_to_border, TracePath};
pub use smooth::{closest_point_on_triangle, smooth_reproject, turning, SmoothPath};

use crate::field::{vertex_field, CrossField, VertexField};
use crate::mesh::{TriMesh, Vec3};

pub const NODES_PER_VERTEX: usize = 4;

pub fn node(v: usize, k: usize) -> usize {
    v * NODES_PER_VERTEX + k % NODES_PER_VERTEX
}

pub fn node_vertex(n: usize) -> usize {
    n / NODES_PER_VERTEX
}

pub fn node_dir(n: usize) -> usize {
    n % NODES_PER_VERTEX
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TraceOptions {
    /// ε in `w = len · (ε + 1 − cos δ)`.
    pub epsilon: f64,
    /// Transported directions closer than this are matched.
    pub match_angle: f64,
    /// Arcs need `cos δ` above this (the edge must move forward).
    pub min_forward: f64,
}

impl Default for TraceOptions {
    fn default() -> Self {
        Self {
            epsilon: 0.01,
            match_angle: FRAC_PI_4,
            min_forward: 1e-3,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum BoundaryLabel {
    None,
    Entrance,
    Exit,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Arc {
    pub to: usize,
    pub weight: f64,
}

/// Direction correspondence across one mesh edge: direction `k` at the
/// vertex matches direction `k + shift` at `to`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Transport {
    pub to: usize,
    pub shift: usize,
    pub length: f64,
}

#[derive(Debug, Clone)]
pub struct TraceGraph {
    pub options: TraceOptions,
    field: VertexField,
    arcs: Vec<Vec<Arc>>,
    labels: Vec<BoundaryLabel>,
    boundary: Vec<bool>,
    transport: Vec<Vec<Transport>>,
    mesh: TriMesh,
    diagonal: f64,
}

/// `d` carried from the tangent plane with normal `from` to the one with
/// normal `to` by the minimal rotation.
fn carry(d: &Vec3, from: &Vec3, to: &Vec3) -> Vec3 {
    match UnitQuaternion::rotation_between(from, to) {
        Some(q) => q * d,
        None => d - to * d.dot(to),
    }
}

pub fn build_graph(mesh: &TriMesh, field: &CrossField, options: TraceOptions) -> TraceGraph {
    build_graph_from(mesh, vertex_field(mesh, field), options)
}

/// Graph over an explicit per-vertex cross field.
pub fn build_graph_from(mesh: &TriMesh, field: VertexField, options: TraceOptions) -> TraceGraph {
    let nv = mesh.num_vertices();
    let p = mesh.vertices();
    let mut arcs = vec![Vec::new(); nv * NODES_PER_VERTEX];
    let mut transport = vec![Vec::new(); nv];
    let cos_match = options.match_angle.cos();
    for u in 0..nv {
        let (nu, du) = (&field.normals[u], &field.dirs[u]);
        for &w in mesh.neighbors(u) {
            let carried: Vec<Vec3> = field.dirs[w]
                .iter()
                .map(|d| carry(d, &field.normals[w], nu))
                .collect();
            let (shift, best) = (0..4)
                .map(|j| (j, du[0].dot(&carried[j])))
                .fold((0, f64::NEG_INFINITY), |b, c| if c.1 > b.1 { c } else { b });
            if best <= cos_match {
                continue;
            }
            let e = p[w] - p[u];
            let len = e.norm();
            transport[u].push(Transport { to: w, shift, length: len });
            if len <= 0.0 {
                continue;
            }
            for k in 0..4 {
                let m = du[k] + carried[(k + shift) % 4];
                let mn = m.norm();
                if mn <= 0.0 {
                    continue;
                }
                let cos = e.dot(&m) / (len * mn);
                if cos > options.min_forward {
                    arcs[node(u, k)].push(Arc {
                        to: node(w, k + shift),
                        weight: len * (options.epsilon + 1.0 - cos),
                    });
                }
            }
        }
    }
    let boundary: Vec<bool> = (0..nv).map(|v| mesh.is_boundary_vertex(v)).collect();
    let mut labels = vec![BoundaryLabel::None; nv * NODES_PER_VERTEX];
    for lp in mesh.boundary_loops() {
        let n = lp.len();
        for (i, &v) in lp.iter().enumerate() {
            let t = p[lp[(i + 1) % n]] - p[lp[(i + n - 1) % n]];
            let inside = mesh
                .vertex_faces(v)
                .iter()
                .map(|&f| mesh.centroid(f) - p[v])
                .sum::<Vec3>();
            let mut inward = field.normals[v].cross(&t);
            if inward.dot(&inside) < 0.0 {
                inward = -inward;
            }
            let dots: Vec<f64> = field.dirs[v].iter().map(|d| d.dot(&inward)).collect();
            let arg = |better: fn(f64, f64) -> bool| {
                (1..4).fold(0, |b, k| if better(dots[k], dots[b]) { k } else { b })
            };
            labels[node(v, arg(|a, b| a > b))] = BoundaryLabel::Entrance;
            labels[node(v, arg(|a, b| a < b))] = BoundaryLabel::Exit;
        }
    }
    TraceGraph {
        options,
        field,
        arcs,
        labels,
        boundary,
        transport,
        mesh: mesh.clone(),
        diagonal: mesh.bbox_diagonal(),
    }
}

impl TraceGraph {
    pub fn num_vertices(&self) -> usize {
        self.boundary.len()
    }

    pub fn num_nodes(&self) -> usize {
        self.arcs.len()
    }

    pub fn arcs(&self, n: usize) -> &[Arc] {
        &self.arcs[n]
    }

    pub fn num_arcs(&self) -> usize {
        self.arcs.iter().map(Vec::len).sum()
    }

    pub fn label(&self, n: usize) -> BoundaryLabel {
        self.labels[n]
    }

    pub fn is_boundary(&self, v: usize) -> bool {
        self.boundary[v]
    }

    pub fn transport(&self, v: usize) -> &[Transport] {
        &self.transport[v]
    }

    pub fn field(&self) -> &VertexField {
        &self.field
    }

    pub fn direction(&self, n: usize) -> Vec3 {
        self.field.dirs[node_vertex(n)][node_dir(n)]
    }

    pub fn position(&self, v: usize) -> Vec3 {
        self.mesh.vertices()[v]
    }

    pub fn mesh(&self) -> &TriMesh {
        &self.mesh
    }

    /// Bounding-box diagonal of the mesh; caps distances.
    pub fn diagonal(&self) -> f64 {
        self.diagonal
    }

    /// Weight of the arc `a → b`, if present.
    pub fn arc_weight(&self, a: usize, b: usize) -> Option<f64> {
        self.arcs[a].iter().find(|x| x.to == b).map(|x| x.weight)
    }

    pub fn entrances(&self) -> Vec<usize> {
        (0..self.num_nodes())
            .filter(|&n| self.labels[n] == BoundaryLabel::Entrance)
            .collect()
    }
}
