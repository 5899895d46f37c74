//! Textile flattening: LSCM initialization, the anisotropic woven-fabric
//! energy (warp/weft stretch, ARAP rigidity, seam and dart reflection
//! symmetry) minimized by a local-global solver with per-iteration grain
//! alignment, plus distortion measurement and injectivity tests.

mod grain;
mod inject;
mod local;
mod lscm;
mod measure;
pub mod procrustes;
mod solve;

use serde::{Deserialize, Serialize};

pub use grain::{align_grain, grain_angles, triangle_axes, GrainOutcome};
pub use inject::{count_flips, find_overlaps, injectivity_check, Injectivity};
pub use local::{reference_triangle, LocalStep, TriangleFrame};
pub use lscm::{farthest_boundary_pair, lscm_init, lscm_uv};
pub use measure::{chart_to_json, measure, EnergyBreakdown, Measurement};
pub use solve::{
    dart_energy, flatten_patch, joint_optimize, rigid_energy, seam_energy, stretch_energy, textile_energy,
    FlattenReport, Problem,
};

use crate::error::ParamError;
use crate::mesh::{MeshChecks, TriMesh, Vec2, Vec3};

/// Fabric weights `(ω_stretch, ω_rigid, ω_dart, ω_seam)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Weights {
    pub stretch: f64,
    pub rigid: f64,
    pub dart: f64,
    pub seam: f64,
}

impl Default for Weights {
    fn default() -> Self {
        Self {
            stretch: 5.0,
            rigid: 1.0,
            dart: 5.0,
            seam: 5.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SolverOptions {
    pub max_iterations: usize,
    pub rel_tolerance: f64,
    /// Desired 3D warp axis; `None` disables grain alignment.
    pub grain: Option<Vec3>,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            max_iterations: 20,
            rel_tolerance: 1e-7,
            grain: Some(Vec3::y()),
        }
    }
}

/// A patch cut open to a disk, with its own vertex numbering. Wedge copies
/// of a source vertex (both sides of a seam through the patch) are separate
/// chart vertices at the same 3D position.
#[derive(Debug, Clone)]
pub struct Chart {
    pub mesh: TriMesh,
    /// Extra poses (chart-local vertex positions); the rest pose is `mesh`.
    pub poses: Vec<Vec<Vec3>>,
    pub source_vertex: Vec<usize>,
    pub source_face: Vec<usize>,
    pub uv: Vec<Vec2>,
}

impl Chart {
    pub fn new(
        positions: Vec<Vec3>,
        faces: Vec<[usize; 3]>,
        source_vertex: Vec<usize>,
        source_face: Vec<usize>,
    ) -> Result<Self, crate::error::MeshError> {
        let mesh = TriMesh::build(positions, faces, MeshChecks::topology_only())?;
        let n = mesh.num_vertices();
        Ok(Self {
            mesh,
            poses: Vec::new(),
            source_vertex,
            source_face,
            uv: vec![Vec2::zeros(); n],
        })
    }

    /// Chart covering a whole (disk) mesh with identity source maps.
    pub fn from_mesh(mesh: &TriMesh) -> Self {
        Self {
            mesh: mesh.clone(),
            poses: Vec::new(),
            source_vertex: (0..mesh.num_vertices()).collect(),
            source_face: (0..mesh.num_faces()).collect(),
            uv: vec![Vec2::zeros(); mesh.num_vertices()],
        }
    }

    pub fn with_uv(mut self, uv: Vec<Vec2>) -> Self {
        self.uv = uv;
        self
    }

    pub fn num_vertices(&self) -> usize {
        self.mesh.num_vertices()
    }

    pub fn num_faces(&self) -> usize {
        self.mesh.num_faces()
    }

    /// Rest positions followed by every extra pose.
    pub fn pose_positions(&self) -> Vec<&[Vec3]> {
        std::iter::once(self.mesh.vertices())
            .chain(self.poses.iter().map(Vec::as_slice))
            .collect()
    }

    /// Signed UV area of face `f`.
    pub fn uv_area(&self, f: usize) -> f64 {
        let [a, b, c] = self.mesh.faces()[f];
        let (e1, e2) = (self.uv[b] - self.uv[a], self.uv[c] - self.uv[a]);
        0.5 * (e1.x * e2.y - e1.y * e2.x)
    }

    pub fn is_disk(&self) -> bool {
        self.mesh.euler_characteristic() == 1 && self.mesh.boundary_loops().len() == 1
    }

    pub fn check_disk(&self) -> Result<(), ParamError> {
        if self.is_disk() {
            Ok(())
        } else {
            Err(ParamError::NotDisk {
                chi: self.mesh.euler_characteristic(),
                loops: self.mesh.boundary_loops().len(),
            })
        }
    }

    /// UV bounding box `(min, max)`.
    pub fn uv_bounds(&self) -> (Vec2, Vec2) {
        let mut lo = Vec2::repeat(f64::INFINITY);
        let mut hi = Vec2::repeat(f64::NEG_INFINITY);
        for p in &self.uv {
            lo = lo.inf(p);
            hi = hi.sup(p);
        }
        (lo, hi)
    }
}

/// Matched seam sides: `p[i]` in chart `chart_p` and `q[i]` in chart
/// `chart_q` are copies of the same 3D vertex.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeamPair {
    pub id: usize,
    pub chart_p: usize,
    pub p: Vec<usize>,
    pub chart_q: usize,
    pub q: Vec<usize>,
}

/// Two sides of a dart inside one chart meeting at the undivided `tip`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DartSpec {
    pub chart: usize,
    pub tip: usize,
    pub p: Vec<usize>,
    pub q: Vec<usize>,
}
