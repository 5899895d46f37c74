use nalgebra::{Matrix2, Matrix3, Matrix6, SymmetricEigen, Vector2, Vector6};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::mesh::geodesic::{ball, k_ring};
use crate::mesh::{TriMesh, Vec3};

const ANISOTROPY_EPS: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CurvatureSample {
    pub k1: f64,
    pub k2: f64,
    /// Unit max-curvature direction in the face plane.
    pub dir1: Vec3,
    pub anisotropy: f64,
}

#[derive(Debug, Clone)]
pub struct CurvatureField {
    pub samples: Vec<CurvatureSample>,
    /// Vertices whose geodesic ball held fewer than 6 vertices and fell back
    /// to a ring neighbourhood.
    pub fallback_vertices: Vec<usize>,
}

pub fn anisotropy(k1: f64, k2: f64) -> f64 {
    ((k1.abs() - k2.abs()) / (k1.abs() + k2.abs() + ANISOTROPY_EPS)).clamp(0.0, 1.0)
}

/// Shape tensor `k1 e1 e1ᵀ + k2 e2 e2ᵀ` from a least-squares height-field
/// quadric over `nbrs`; `None` if the fit is rank deficient.
fn fit_tensor(mesh: &TriMesh, v: usize, nbrs: &[usize]) -> Option<Matrix3<f64>> {
    let p = mesh.vertices();
    let n = mesh.vertex_normal(v);
    let (t1, t2) = super::tangent_basis(&n);
    let mut ata = Matrix6::<f64>::zeros();
    let mut atb = Vector6::<f64>::zeros();
    let mut scale: f64 = 0.0;
    for &q in nbrs {
        let d = p[q] - p[v];
        scale = scale.max(d.norm());
    }
    if scale == 0.0 {
        return None;
    }
    // fit in scaled coordinates for conditioning
    for &q in nbrs {
        let d = (p[q] - p[v]) / scale;
        let (x, y, h) = (d.dot(&t1), d.dot(&t2), d.dot(&n));
        let row = Vector6::new(x * x, x * y, y * y, x, y, 1.0);
        ata += row * row.transpose();
        atb += row * h;
    }
    let chol = ata.cholesky()?;
    let c = chol.solve(&atb);
    if !c.iter().all(|x| x.is_finite()) {
        return None;
    }
    let (hx, hy) = (c[3], c[4]);
    let (hxx, hxy, hyy) = (2.0 * c[0] / scale, c[1] / scale, 2.0 * c[2] / scale);
    let w = (1.0 + hx * hx + hy * hy).sqrt();
    let first = Matrix2::new(1.0 + hx * hx, hx * hy, hx * hy, 1.0 + hy * hy);
    let second = Matrix2::new(hxx, hxy, hxy, hyy) / w;
    // S = I⁻¹ II is self-adjoint w.r.t. I; symmetrize with I = L Lᵀ.
    let l = first.cholesky()?.l();
    let linv = l.try_inverse()?;
    let sym = linv * second * linv.transpose();
    let eig = SymmetricEigen::new(0.5 * (sym + sym.transpose()));
    let xu = t1 + n * hx;
    let xv = t2 + n * hy;
    let surf_n = xu.cross(&xv).normalize();
    let mut t = Matrix3::zeros();
    let mut e1: Option<Vec3> = None;
    for i in 0..2 {
        let k = eig.eigenvalues[i];
        let w2: Vector2<f64> = linv.transpose() * eig.eigenvectors.column(i);
        let mut e = xu * w2.x + xv * w2.y;
        // keep the pair orthonormal even after rounding
        if let Some(prev) = e1 {
            e = surf_n.cross(&prev);
        }
        let e = e.normalize();
        // transport the direction to the vertex tangent plane
        let e = (e - n * e.dot(&n)).normalize();
        t += k * e * e.transpose();
        e1 = Some(e);
    }
    Some(t)
}

fn vertex_tensor(mesh: &TriMesh, v: usize, radius: f64) -> (Matrix3<f64>, bool) {
    let nbrs = ball(mesh, v, radius);
    if nbrs.len() >= 6 {
        if let Some(t) = fit_tensor(mesh, v, &nbrs) {
            return (t, false);
        }
    }
    for rings in 1..=4 {
        let nbrs = k_ring(mesh, v, rings);
        if nbrs.len() >= 6 {
            if let Some(t) = fit_tensor(mesh, v, &nbrs) {
                return (t, true);
            }
        }
    }
    (Matrix3::zeros(), true)
}

/// Principal curvature per face from quadric fits over geodesic balls of
/// radius `radius_fraction` × bounding-box diagonal.
pub fn estimate_curvature(mesh: &TriMesh, radius_fraction: f64) -> CurvatureField {
    let radius = radius_fraction * mesh.bbox_diagonal();
    let per_vertex: Vec<(Matrix3<f64>, bool)> = (0..mesh.num_vertices())
        .into_par_iter()
        .map(|v| vertex_tensor(mesh, v, radius))
        .collect();
    let fallback_vertices = per_vertex
        .iter()
        .enumerate()
        .filter(|(_, (_, f))| *f)
        .map(|(i, _)| i)
        .collect();
    let samples = (0..mesh.num_faces())
        .map(|f| {
            let [a, b, c] = mesh.faces()[f];
            let t = (per_vertex[a].0 + per_vertex[b].0 + per_vertex[c].0) / 3.0;
            face_sample(mesh, f, &t)
        })
        .collect();
    CurvatureField {
        samples,
        fallback_vertices,
    }
}

fn face_sample(mesh: &TriMesh, f: usize, t: &Matrix3<f64>) -> CurvatureSample {
    let fr = mesh.frame(f);
    let m = Matrix2::new(
        fr.u.dot(&(t * fr.u)),
        fr.u.dot(&(t * fr.v)),
        fr.v.dot(&(t * fr.u)),
        fr.v.dot(&(t * fr.v)),
    );
    let eig = SymmetricEigen::new(0.5 * (m + m.transpose()));
    let (i1, i2) = if eig.eigenvalues[0].abs() >= eig.eigenvalues[1].abs() {
        (0, 1)
    } else {
        (1, 0)
    };
    let k1 = eig.eigenvalues[i1];
    let k2 = eig.eigenvalues[i2];
    let ev = eig.eigenvectors.column(i1);
    let mut dir1 = fr.to_world(&Vector2::new(ev[0], ev[1]));
    let len = dir1.norm();
    dir1 = if len > 0.0 { dir1 / len } else { fr.u };
    CurvatureSample {
        k1,
        k2,
        dir1,
        anisotropy: anisotropy(k1, k2),
    }
}
