//! Laplacian smoothing of traced paths with reprojection onto the surface.

use std::collections::HashSet;

use super::TracePath;
use crate::mesh::{SurfacePoint, TriMesh, Vec3};

#[derive(Debug, Clone, PartialEq)]
pub struct SmoothPath {
    pub points: Vec<SurfacePoint>,
    pub closed: bool,
}

impl SmoothPath {
    pub fn positions(&self, mesh: &TriMesh) -> Vec<Vec3> {
        self.points.iter().map(|p| p.position(mesh)).collect()
    }

    pub fn length(&self, mesh: &TriMesh) -> f64 {
        self.positions(mesh).windows(2).map(|w| (w[1] - w[0]).norm()).sum()
    }
}

/// Sum of turning angles at interior samples (closed polylines include the
/// closing corner).
pub fn turning(points: &[Vec3], closed: bool) -> f64 {
    let n = points.len();
    let mut total = 0.0;
    let mut corner = |a: &Vec3, b: &Vec3, c: &Vec3| {
        let (u, v) = (b - a, c - b);
        if u.norm() > 0.0 && v.norm() > 0.0 {
            total += u.angle(&v);
        }
    };
    if closed && n > 3 {
        let m = n - 1;
        for i in 0..m {
            corner(&points[(i + m - 1) % m], &points[i], &points[(i + 1) % m]);
        }
    } else {
        for w in points.windows(3) {
            corner(&w[0], &w[1], &w[2]);
        }
    }
    total
}

/// Barycentric coordinates of the point of triangle `abc` closest to `p`.
pub fn closest_point_on_triangle(p: &Vec3, a: &Vec3, b: &Vec3, c: &Vec3) -> [f64; 3] {
    let (ab, ac, ap) = (b - a, c - a, p - a);
    let (d1, d2) = (ab.dot(&ap), ac.dot(&ap));
    if d1 <= 0.0 && d2 <= 0.0 {
        return [1.0, 0.0, 0.0];
    }
    let bp = p - b;
    let (d3, d4) = (ab.dot(&bp), ac.dot(&bp));
    if d3 >= 0.0 && d4 <= d3 {
        return [0.0, 1.0, 0.0];
    }
    let vc = d1 * d4 - d3 * d2;
    if vc <= 0.0 && d1 >= 0.0 && d3 <= 0.0 {
        let t = d1 / (d1 - d3);
        return [1.0 - t, t, 0.0];
    }
    let cp = p - c;
    let (d5, d6) = (ab.dot(&cp), ac.dot(&cp));
    if d6 >= 0.0 && d5 <= d6 {
        return [0.0, 0.0, 1.0];
    }
    let vb = d5 * d2 - d1 * d6;
    if vb <= 0.0 && d2 >= 0.0 && d6 <= 0.0 {
        let t = d2 / (d2 - d6);
        return [1.0 - t, 0.0, t];
    }
    let va = d3 * d6 - d5 * d4;
    if va <= 0.0 && (d4 - d3) >= 0.0 && (d5 - d6) >= 0.0 {
        let t = (d4 - d3) / ((d4 - d3) + (d5 - d6));
        return [0.0, 1.0 - t, t];
    }
    let denom = 1.0 / (va + vb + vc);
    let (v, w) = (vb * denom, vc * denom);
    [1.0 - v - w, v, w]
}

/// Faces within two vertex rings of `f`.
fn nearby_faces(mesh: &TriMesh, f: usize) -> Vec<usize> {
    let mut verts: HashSet<usize> = mesh.faces()[f].iter().copied().collect();
    for _ in 0..2 {
        let ring: Vec<usize> = verts.iter().flat_map(|&v| mesh.neighbors(v).to_vec()).collect();
        verts.extend(ring);
    }
    let mut faces: Vec<usize> = verts.iter().flat_map(|&v| mesh.vertex_faces(v).to_vec()).collect();
    faces.sort_unstable();
    faces.dedup();
    faces
}

fn project(mesh: &TriMesh, p: &Vec3, hint: usize) -> SurfacePoint {
    let pos = mesh.vertices();
    let mut best = (f64::INFINITY, SurfacePoint::new(hint, [1.0, 0.0, 0.0]));
    for f in nearby_faces(mesh, hint) {
        let [a, b, c] = mesh.faces()[f];
        let bary = closest_point_on_triangle(p, &pos[a], &pos[b], &pos[c]);
        let sp = SurfacePoint::new(f, bary);
        let d = (sp.position(mesh) - p).norm_squared();
        if d < best.0 {
            best = (d, sp);
        }
    }
    best.1
}

/// `iterations` rounds of endpoint-pinned Laplacian smoothing (λ = ½), each
/// followed by projection onto nearby faces. Closed paths stay closed.
pub fn smooth_reproject(path: &TracePath, mesh: &TriMesh, iterations: usize) -> SmoothPath {
    let mut pts: Vec<SurfacePoint> = path.vertices.iter().map(|&v| SurfacePoint::at_vertex(mesh, v)).collect();
    let n = pts.len();
    let closed = path.closed && n > 3;
    for _ in 0..iterations {
        let cur: Vec<Vec3> = pts.iter().map(|p| p.position(mesh)).collect();
        let m = if closed { n - 1 } else { n };
        let range = if closed { 0..m } else { 1..n.saturating_sub(1) };
        for i in range {
            let (a, b) = if closed {
                ((i + m - 1) % m, (i + 1) % m)
            } else {
                (i - 1, i + 1)
            };
            let target = cur[i] + ((cur[a] + cur[b]) * 0.5 - cur[i]) * 0.5;
            pts[i] = project(mesh, &target, pts[i].face);
        }
        if closed {
            pts[n - 1] = pts[0];
        }
    }
    SmoothPath { points: pts, closed: path.closed }
}
