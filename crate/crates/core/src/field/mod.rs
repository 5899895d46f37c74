//! Curvature estimation and 4-RoSy cross-field construction.

mod cross;
mod curvature;
mod poses;

use std::f64::consts::FRAC_PI_2;
use std::fmt::Write as _;

pub use cross::{
    boundary_constraints, compute_cross_field, face_ring, merge_hard, misalignment, quarter_mean,
    reduce_quarter, singularities, stroke_constraints, AlignConstraint, ConstraintKind, CrossField,
};
pub use curvature::{anisotropy, estimate_curvature, CurvatureField, CurvatureSample};
pub use poses::{combine_poses, pose_curvature};

use crate::mesh::{TriMesh, Vec3};

/// Some unit vector orthogonal to `n`, and its completion to a right-handed
/// tangent basis.
pub fn tangent_basis(n: &Vec3) -> (Vec3, Vec3) {
    let a = if n.x.abs() < 0.9 { Vec3::x() } else { Vec3::y() };
    let t1 = (a - n * a.dot(n)).normalize();
    (t1, n.cross(&t1))
}

/// Cross-field sampled at vertices: four unit tangent directions per vertex,
/// ordered counter-clockwise about the vertex normal (`dirs[k+1]` is
/// `dirs[k]` turned by π/2).
#[derive(Debug, Clone)]
pub struct VertexField {
    pub normals: Vec<Vec3>,
    pub dirs: Vec<[Vec3; 4]>,
}

pub fn vertex_field(mesh: &TriMesh, field: &CrossField) -> VertexField {
    let mut normals = Vec::with_capacity(mesh.num_vertices());
    let mut dirs = Vec::with_capacity(mesh.num_vertices());
    for v in 0..mesh.num_vertices() {
        let n = mesh.vertex_normal(v);
        let (t1, t2) = tangent_basis(&n);
        let faces = mesh.vertex_faces(v);
        let mut angles = Vec::with_capacity(faces.len());
        let mut weights = Vec::with_capacity(faces.len());
        for &f in faces {
            let d = field.direction(mesh, f, 0);
            angles.push(d.dot(&t2).atan2(d.dot(&t1)));
            weights.push(mesh.area(f));
        }
        let psi = quarter_mean(&angles, &weights).unwrap_or(angles[0]);
        let mut d = [Vec3::zeros(); 4];
        for (k, slot) in d.iter_mut().enumerate() {
            let a = psi + k as f64 * FRAC_PI_2;
            *slot = t1 * a.cos() + t2 * a.sin();
        }
        normals.push(n);
        dirs.push(d);
    }
    VertexField { normals, dirs }
}

/// Line-segment OBJ overlay: a small cross at every face centroid.
pub fn field_to_obj(mesh: &TriMesh, field: &CrossField, scale: f64) -> String {
    let mut s = String::new();
    let half = 0.5 * scale * mesh.mean_edge_length();
    let mut n = 0;
    for f in 0..mesh.num_faces() {
        let c = mesh.centroid(f);
        for k in 0..2 {
            let d = field.direction(mesh, f, k) * half;
            let (a, b) = (c - d, c + d);
            let _ = writeln!(s, "v {} {} {}", a.x, a.y, a.z);
            let _ = writeln!(s, "v {} {} {}", b.x, b.y, b.z);
            let _ = writeln!(s, "l {} {}", n + 1, n + 2);
            n += 2;
        }
    }
    s
}
