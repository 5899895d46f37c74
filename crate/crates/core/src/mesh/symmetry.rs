use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use super::{MeshChecks, TriMesh, Vec3};
use crate::error::MeshError;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SymmetryPlane {
    pub point: Vec3,
    pub normal: Vec3,
}

impl SymmetryPlane {
    pub fn new(point: Vec3, normal: Vec3) -> Result<Self, MeshError> {
        let n = normal.norm();
        if !(n.is_finite() && n > 1e-12) {
            return Err(MeshError::BadPlane);
        }
        Ok(Self {
            point,
            normal: normal / n,
        })
    }

    /// The plane x = 0.
    pub fn yz() -> Self {
        Self {
            point: Vec3::zeros(),
            normal: Vec3::x(),
        }
    }

    pub fn signed_distance(&self, p: &Vec3) -> f64 {
        (p - self.point).dot(&self.normal)
    }

    pub fn reflect(&self, p: &Vec3) -> Vec3 {
        p - self.normal * (2.0 * self.signed_distance(p))
    }

    pub fn reflect_dir(&self, d: &Vec3) -> Vec3 {
        d - self.normal * (2.0 * d.dot(&self.normal))
    }

    pub fn project(&self, p: &Vec3) -> Vec3 {
        p - self.normal * self.signed_distance(p)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MirrorSide {
    Positive,
    Negative,
}

/// Result of cutting a symmetric mesh in half.
#[derive(Debug, Clone)]
pub struct SymmetrySplit {
    pub plane: SymmetryPlane,
    pub half: TriMesh,
    /// Half-mesh vertices lying on the plane.
    pub seam_vertices: Vec<usize>,
    pub half_to_orig_vertex: Vec<usize>,
    pub half_to_orig_face: Vec<usize>,
    /// Original vertex -> its mirror image vertex.
    pub mirror_vertex: Vec<usize>,
    /// Original face -> its mirror image face.
    pub mirror_face: Vec<usize>,
    pub face_side: Vec<MirrorSide>,
    /// Original face -> half face (own face if positive, mirror's if negative).
    pub orig_to_half_face: Vec<usize>,
}

struct PointGrid {
    cell: f64,
    map: HashMap<(i64, i64, i64), Vec<usize>>,
}

impl PointGrid {
    fn new(points: &[Vec3], cell: f64) -> Self {
        let mut map: HashMap<_, Vec<usize>> = HashMap::new();
        for (i, p) in points.iter().enumerate() {
            map.entry(Self::key(p, cell)).or_default().push(i);
        }
        Self { cell, map }
    }

    fn key(p: &Vec3, cell: f64) -> (i64, i64, i64) {
        (
            (p.x / cell).floor() as i64,
            (p.y / cell).floor() as i64,
            (p.z / cell).floor() as i64,
        )
    }

    fn nearest_within(&self, points: &[Vec3], q: &Vec3) -> Option<(usize, f64)> {
        let (kx, ky, kz) = Self::key(q, self.cell);
        let mut best: Option<(usize, f64)> = None;
        for dx in -1..=1 {
            for dy in -1..=1 {
                for dz in -1..=1 {
                    if let Some(ids) = self.map.get(&(kx + dx, ky + dy, kz + dz)) {
                        for &i in ids {
                            let d = (points[i] - q).norm();
                            if best.is_none_or(|(_, bd)| d < bd) {
                                best = Some((i, d));
                            }
                        }
                    }
                }
            }
        }
        best.filter(|&(_, d)| d <= self.cell)
    }
}

/// Keeps the half on the positive side of `plane`. Vertices within `tol`
/// of the plane are snapped onto it.
pub fn split_by_plane(
    mesh: &TriMesh,
    plane: &SymmetryPlane,
    tol: f64,
) -> Result<SymmetrySplit, MeshError> {
    let pts = mesh.vertices();
    let nv = pts.len();
    let grid = PointGrid::new(pts, tol.max(1e-300));

    let mut mirror_vertex = vec![0usize; nv];
    for (i, p) in pts.iter().enumerate() {
        let r = plane.reflect(p);
        match grid.nearest_within(pts, &r) {
            Some((j, _)) => mirror_vertex[i] = j,
            None => {
                let deviation = pts
                    .iter()
                    .map(|q| (q - r).norm())
                    .fold(f64::INFINITY, f64::min);
                return Err(MeshError::Asymmetric { deviation, tol });
            }
        }
    }

    let dist: Vec<f64> = pts.iter().map(|p| plane.signed_distance(p)).collect();
    let on_plane: Vec<bool> = dist.iter().map(|d| d.abs() <= tol).collect();

    let mut face_side = Vec::with_capacity(mesh.num_faces());
    for (fi, f) in mesh.faces().iter().enumerate() {
        let pos = f.iter().any(|&v| !on_plane[v] && dist[v] > 0.0);
        let neg = f.iter().any(|&v| !on_plane[v] && dist[v] < 0.0);
        match (pos, neg) {
            (true, false) => face_side.push(MirrorSide::Positive),
            (false, true) => face_side.push(MirrorSide::Negative),
            _ => return Err(MeshError::StraddlingFace { face: fi }),
        }
    }

    let mut face_lookup: HashMap<[usize; 3], usize> = HashMap::new();
    for (fi, f) in mesh.faces().iter().enumerate() {
        let mut k = *f;
        k.sort_unstable();
        face_lookup.insert(k, fi);
    }
    let mut mirror_face = vec![0usize; mesh.num_faces()];
    for (fi, f) in mesh.faces().iter().enumerate() {
        let mut k = f.map(|v| mirror_vertex[v]);
        k.sort_unstable();
        match face_lookup.get(&k) {
            Some(&g) => mirror_face[fi] = g,
            None => {
                return Err(MeshError::Asymmetric {
                    deviation: tol,
                    tol,
                })
            }
        }
    }

    let mut orig_to_half_vertex = vec![usize::MAX; nv];
    let mut half_to_orig_vertex = Vec::new();
    let mut half_faces = Vec::new();
    let mut half_to_orig_face = Vec::new();
    let mut orig_to_half_face = vec![usize::MAX; mesh.num_faces()];
    for (fi, f) in mesh.faces().iter().enumerate() {
        if face_side[fi] != MirrorSide::Positive {
            continue;
        }
        let hf = f.map(|v| {
            if orig_to_half_vertex[v] == usize::MAX {
                orig_to_half_vertex[v] = half_to_orig_vertex.len();
                half_to_orig_vertex.push(v);
            }
            orig_to_half_vertex[v]
        });
        orig_to_half_face[fi] = half_faces.len();
        half_to_orig_face.push(fi);
        half_faces.push(hf);
    }
    for fi in 0..mesh.num_faces() {
        if face_side[fi] == MirrorSide::Negative {
            orig_to_half_face[fi] = orig_to_half_face[mirror_face[fi]];
        }
    }

    let half_pts: Vec<Vec3> = half_to_orig_vertex
        .iter()
        .map(|&v| {
            if on_plane[v] {
                plane.project(&pts[v])
            } else {
                pts[v]
            }
        })
        .collect();
    let seam_vertices: Vec<usize> = (0..half_pts.len())
        .filter(|&h| on_plane[half_to_orig_vertex[h]])
        .collect();
    let half = TriMesh::build(
        half_pts,
        half_faces,
        MeshChecks {
            quality: false,
            connected: true,
        },
    )?;
    Ok(SymmetrySplit {
        plane: *plane,
        half,
        seam_vertices,
        half_to_orig_vertex,
        half_to_orig_face,
        mirror_vertex,
        mirror_face,
        face_side,
        orig_to_half_face,
    })
}

impl SymmetrySplit {
    /// Original vertex -> half vertex that represents it (directly, or via its
    /// mirror image).
    pub fn orig_to_half_vertex(&self) -> Vec<usize> {
        let n = self.mirror_vertex.len();
        let mut map = vec![usize::MAX; n];
        for (h, &v) in self.half_to_orig_vertex.iter().enumerate() {
            map[v] = h;
        }
        for v in 0..n {
            if map[v] == usize::MAX {
                map[v] = map[self.mirror_vertex[v]];
            }
        }
        map
    }

    /// True if original vertex `v` is represented directly (not mirrored).
    pub fn is_positive_vertex(&self, v: usize) -> bool {
        self.half_to_orig_vertex.contains(&v)
    }

    /// Full-mesh positions rebuilt by reflecting the half.
    pub fn remirror(&self) -> Vec<Vec3> {
        let map = self.orig_to_half_vertex();
        let hp = self.half.vertices();
        let mut direct = vec![false; map.len()];
        for &v in &self.half_to_orig_vertex {
            direct[v] = true;
        }
        (0..map.len())
            .map(|v| {
                let p = hp[map[v]];
                if direct[v] {
                    p
                } else {
                    self.plane.reflect(&p)
                }
            })
            .collect()
    }
}
