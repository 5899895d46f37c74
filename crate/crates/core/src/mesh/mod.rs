//! Triangle mesh representation and validation.
//!
//! A [`TriMesh`] is immutable once built. Construction runs the full set of
//! checks the rest of the pipeline relies on: edge- and vertex-manifoldness,
//! consistent orientation, connectivity and (optionally) triangle quality.
//! Every face carries an orthonormal tangent frame and its area.
//!
//! Units are millimetres unless a config scale factor says otherwise.

pub mod geodesic;
mod obj;
pub mod shapes;
mod symmetry;

use std::collections::HashMap;

use nalgebra::{Vector2, Vector3};
use serde::{Deserialize, Serialize};

pub use obj::{load_obj, load_pose_dir, parse_obj, write_obj};
pub use symmetry::{split_by_plane, MirrorSide, SymmetryPlane, SymmetrySplit};

use crate::error::MeshError;

pub type Vec3 = Vector3<f64>;
pub type Vec2 = Vector2<f64>;

/// Minimum interior angle accepted by the quality check.
pub const MIN_ANGLE_DEG: f64 = 10.0;

/// Orthonormal basis of a face plane. `u` follows the first edge.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FaceFrame {
    pub u: Vec3,
    pub v: Vec3,
    pub n: Vec3,
}

impl FaceFrame {
    pub fn to_local(&self, d: &Vec3) -> Vec2 {
        Vec2::new(d.dot(&self.u), d.dot(&self.v))
    }

    pub fn to_world(&self, d: &Vec2) -> Vec3 {
        self.u * d.x + self.v * d.y
    }

    /// Unit tangent at `angle` radians from `u`.
    pub fn direction(&self, angle: f64) -> Vec3 {
        self.u * angle.cos() + self.v * angle.sin()
    }

    pub fn angle_of(&self, d: &Vec3) -> f64 {
        d.dot(&self.v).atan2(d.dot(&self.u))
    }
}

/// Point on the surface: a face plus barycentric coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SurfacePoint {
    pub face: usize,
    pub bary: [f64; 3],
}

impl SurfacePoint {
    pub fn new(face: usize, bary: [f64; 3]) -> Self {
        Self { face, bary }
    }

    pub fn at_vertex(mesh: &TriMesh, v: usize) -> Self {
        let f = mesh.vertex_faces(v)[0];
        let mut bary = [0.0; 3];
        let slot = mesh.faces()[f].iter().position(|&x| x == v).unwrap();
        bary[slot] = 1.0;
        Self { face: f, bary }
    }

    /// Checks the barycentric invariant (non-negative, sums to one).
    pub fn is_valid(&self, tol: f64) -> bool {
        self.bary.iter().all(|b| b.is_finite() && *b >= -tol)
            && (self.bary.iter().sum::<f64>() - 1.0).abs() <= tol
    }

    pub fn position(&self, mesh: &TriMesh) -> Vec3 {
        let [a, b, c] = mesh.faces()[self.face];
        let p = mesh.vertices();
        p[a] * self.bary[0] + p[b] * self.bary[1] + p[c] * self.bary[2]
    }
}

/// Which checks [`TriMesh::build`] performs.
#[derive(Debug, Clone, Copy)]
pub struct MeshChecks {
    pub quality: bool,
    pub connected: bool,
}

impl Default for MeshChecks {
    fn default() -> Self {
        Self {
            quality: true,
            connected: true,
        }
    }
}

impl MeshChecks {
    /// Topology only; used for derived meshes such as refined copies.
    pub fn topology_only() -> Self {
        Self {
            quality: false,
            connected: false,
        }
    }
}

#[derive(Debug, Clone)]
pub struct TriMesh {
    vertices: Vec<Vec3>,
    faces: Vec<[usize; 3]>,
    edges: Vec<[usize; 2]>,
    // [face holding a->b, face holding b->a] for edge (a, b) with a < b
    edge_faces: Vec<[Option<usize>; 2]>,
    face_edges: Vec<[usize; 3]>,
    edge_lookup: HashMap<(usize, usize), usize>,
    vertex_faces: Vec<Vec<usize>>,
    vertex_neighbors: Vec<Vec<usize>>,
    boundary_vertex: Vec<bool>,
    boundary_loops: Vec<Vec<usize>>,
    frames: Vec<FaceFrame>,
    areas: Vec<f64>,
}

fn edge_key(a: usize, b: usize) -> (usize, usize) {
    if a < b {
        (a, b)
    } else {
        (b, a)
    }
}

impl TriMesh {
    /// Builds and fully validates a mesh.
    pub fn new(vertices: Vec<Vec3>, faces: Vec<[usize; 3]>) -> Result<Self, MeshError> {
        Self::build(vertices, faces, MeshChecks::default())
    }

    pub fn build(
        vertices: Vec<Vec3>,
        faces: Vec<[usize; 3]>,
        checks: MeshChecks,
    ) -> Result<Self, MeshError> {
        if faces.is_empty() {
            return Err(MeshError::Empty);
        }
        let nv = vertices.len();
        for (fi, f) in faces.iter().enumerate() {
            if f.iter().any(|&i| i >= nv) {
                return Err(MeshError::IndexOutOfRange { face: fi });
            }
            if f[0] == f[1] || f[1] == f[2] || f[0] == f[2] {
                return Err(MeshError::Degenerate { faces: vec![fi] });
            }
        }

        let mut edge_lookup = HashMap::with_capacity(faces.len() * 2);
        let mut edges = Vec::with_capacity(faces.len() * 3 / 2 + 8);
        let mut edge_faces: Vec<[Option<usize>; 2]> = Vec::with_capacity(edges.capacity());
        let mut face_edges = Vec::with_capacity(faces.len());
        for (fi, f) in faces.iter().enumerate() {
            let mut fe = [0usize; 3];
            for i in 0..3 {
                let a = f[i];
                let b = f[(i + 1) % 3];
                let key = edge_key(a, b);
                let e = *edge_lookup.entry(key).or_insert_with(|| {
                    edges.push([key.0, key.1]);
                    edge_faces.push([None, None]);
                    edges.len() - 1
                });
                let side = usize::from(a > b);
                if edge_faces[e][side].is_some() {
                    // Either a third face on the edge or two faces using the
                    // same directed edge.
                    let other = edge_faces[e][1 - side].is_some();
                    return Err(if other {
                        MeshError::NonManifoldEdge { a: key.0, b: key.1 }
                    } else {
                        MeshError::InconsistentOrientation { a: key.0, b: key.1 }
                    });
                }
                edge_faces[e][side] = Some(fi);
                fe[i] = e;
            }
            face_edges.push(fe);
        }

        let mut vertex_faces = vec![Vec::new(); nv];
        for (fi, f) in faces.iter().enumerate() {
            for &v in f {
                vertex_faces[v].push(fi);
            }
        }
        if let Some(v) = vertex_faces.iter().position(|fs| fs.is_empty()) {
            return Err(MeshError::UnreferencedVertex { vertex: v });
        }

        let mut vertex_neighbors = vec![Vec::new(); nv];
        for &[a, b] in &edges {
            vertex_neighbors[a].push(b);
            vertex_neighbors[b].push(a);
        }
        for n in &mut vertex_neighbors {
            n.sort_unstable();
        }

        let mut boundary_vertex = vec![false; nv];
        let mut next_boundary: HashMap<usize, usize> = HashMap::new();
        for (e, ef) in edge_faces.iter().enumerate() {
            let [a, b] = edges[e];
            match ef {
                [Some(_), None] => {
                    boundary_vertex[a] = true;
                    boundary_vertex[b] = true;
                    if next_boundary.insert(a, b).is_some() {
                        return Err(MeshError::NonManifoldVertex { vertex: a });
                    }
                }
                [None, Some(_)] => {
                    boundary_vertex[a] = true;
                    boundary_vertex[b] = true;
                    if next_boundary.insert(b, a).is_some() {
                        return Err(MeshError::NonManifoldVertex { vertex: b });
                    }
                }
                _ => {}
            }
        }

        // Vertex-manifold: the faces around each vertex form a single fan.
        for v in 0..nv {
            let star = &vertex_faces[v];
            if star.len() == 1 {
                continue;
            }
            let mut seen = vec![false; star.len()];
            let mut stack = vec![0usize];
            seen[0] = true;
            let mut count = 1;
            while let Some(i) = stack.pop() {
                let f = star[i];
                for &e in &face_edges[f] {
                    let [a, b] = edges[e];
                    if a != v && b != v {
                        continue;
                    }
                    for g in edge_faces[e].iter().flatten() {
                        if let Some(j) = star.iter().position(|x| x == g) {
                            if !seen[j] {
                                seen[j] = true;
                                count += 1;
                                stack.push(j);
                            }
                        }
                    }
                }
            }
            if count != star.len() {
                return Err(MeshError::NonManifoldVertex { vertex: v });
            }
        }

        let mut boundary_loops = Vec::new();
        let mut visited = vec![false; nv];
        let mut starts: Vec<usize> = next_boundary.keys().copied().collect();
        starts.sort_unstable();
        for s in starts {
            if visited[s] {
                continue;
            }
            let mut lp = vec![s];
            visited[s] = true;
            let mut cur = next_boundary[&s];
            while cur != s {
                if visited[cur] {
                    return Err(MeshError::NonManifoldVertex { vertex: cur });
                }
                visited[cur] = true;
                lp.push(cur);
                cur = *next_boundary
                    .get(&cur)
                    .ok_or(MeshError::NonManifoldVertex { vertex: cur })?;
            }
            boundary_loops.push(lp);
        }

        let mut frames = Vec::with_capacity(faces.len());
        let mut areas = Vec::with_capacity(faces.len());
        let mut bad = Vec::new();
        let diag = bbox_diagonal(&vertices).max(f64::MIN_POSITIVE);
        let min_cos = MIN_ANGLE_DEG.to_radians().cos();
        for (fi, f) in faces.iter().enumerate() {
            let [a, b, c] = f.map(|i| vertices[i]);
            let cross = (b - a).cross(&(c - a));
            let area = 0.5 * cross.norm();
            areas.push(area);
            let degenerate = area <= 1e-14 * diag * diag;
            if degenerate {
                bad.push(fi);
                frames.push(FaceFrame {
                    u: Vec3::x(),
                    v: Vec3::y(),
                    n: Vec3::z(),
                });
                continue;
            }
            let u = (b - a).normalize();
            let n = cross / (2.0 * area);
            let v = n.cross(&u);
            frames.push(FaceFrame { u, v, n });
            if checks.quality {
                let corners = [a, b, c];
                let too_sharp = (0..3).any(|i| {
                    let p = corners[i];
                    let d1 = (corners[(i + 1) % 3] - p).normalize();
                    let d2 = (corners[(i + 2) % 3] - p).normalize();
                    d1.dot(&d2) > min_cos
                });
                if too_sharp {
                    bad.push(fi);
                }
            }
        }
        if !bad.is_empty() && (checks.quality || bad.iter().any(|&f| areas[f] <= 1e-14 * diag * diag)) {
            if checks.quality {
                return Err(MeshError::Degenerate { faces: bad });
            }
            let zero: Vec<usize> = bad
                .into_iter()
                .filter(|&f| areas[f] <= 1e-14 * diag * diag)
                .collect();
            return Err(MeshError::Degenerate { faces: zero });
        }

        let mesh = Self {
            vertices,
            faces,
            edges,
            edge_faces,
            face_edges,
            edge_lookup,
            vertex_faces,
            vertex_neighbors,
            boundary_vertex,
            boundary_loops,
            frames,
            areas,
        };
        if checks.connected {
            let comps = mesh.face_components(|_| true);
            if comps > 1 {
                return Err(MeshError::Disconnected { components: comps });
            }
        }
        Ok(mesh)
    }

    pub fn vertices(&self) -> &[Vec3] {
        &self.vertices
    }

    pub fn faces(&self) -> &[[usize; 3]] {
        &self.faces
    }

    pub fn num_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn num_faces(&self) -> usize {
        self.faces.len()
    }

    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn edges(&self) -> &[[usize; 2]] {
        &self.edges
    }

    /// Faces on either side of an edge: `[face with a->b, face with b->a]`.
    pub fn edge_faces(&self, e: usize) -> [Option<usize>; 2] {
        self.edge_faces[e]
    }

    pub fn face_edges(&self, f: usize) -> [usize; 3] {
        self.face_edges[f]
    }

    pub fn edge_between(&self, a: usize, b: usize) -> Option<usize> {
        self.edge_lookup.get(&edge_key(a, b)).copied()
    }

    pub fn is_boundary_edge(&self, e: usize) -> bool {
        self.edge_faces[e].iter().any(Option::is_none)
    }

    pub fn is_boundary_vertex(&self, v: usize) -> bool {
        self.boundary_vertex[v]
    }

    pub fn vertex_faces(&self, v: usize) -> &[usize] {
        &self.vertex_faces[v]
    }

    pub fn neighbors(&self, v: usize) -> &[usize] {
        &self.vertex_neighbors[v]
    }

    pub fn boundary_loops(&self) -> &[Vec<usize>] {
        &self.boundary_loops
    }

    pub fn frame(&self, f: usize) -> &FaceFrame {
        &self.frames[f]
    }

    pub fn frames(&self) -> &[FaceFrame] {
        &self.frames
    }

    pub fn area(&self, f: usize) -> f64 {
        self.areas[f]
    }

    pub fn areas(&self) -> &[f64] {
        &self.areas
    }

    pub fn total_area(&self) -> f64 {
        self.areas.iter().sum()
    }

    pub fn euler_characteristic(&self) -> i64 {
        self.vertices.len() as i64 - self.edges.len() as i64 + self.faces.len() as i64
    }

    /// Genus from `chi = 2 - 2g - b`, assuming one connected component.
    pub fn genus(&self) -> i64 {
        (2 - self.euler_characteristic() - self.boundary_loops.len() as i64) / 2
    }

    pub fn bbox(&self) -> (Vec3, Vec3) {
        bbox(&self.vertices)
    }

    pub fn bbox_diagonal(&self) -> f64 {
        bbox_diagonal(&self.vertices)
    }

    pub fn edge_length(&self, e: usize) -> f64 {
        let [a, b] = self.edges[e];
        (self.vertices[a] - self.vertices[b]).norm()
    }

    pub fn mean_edge_length(&self) -> f64 {
        let n = self.edges.len().max(1) as f64;
        (0..self.edges.len()).map(|e| self.edge_length(e)).sum::<f64>() / n
    }

    pub fn centroid(&self, f: usize) -> Vec3 {
        let [a, b, c] = self.faces[f];
        (self.vertices[a] + self.vertices[b] + self.vertices[c]) / 3.0
    }

    /// Interior angle of face `f` at its local corner `i`.
    pub fn corner_angle(&self, f: usize, i: usize) -> f64 {
        let face = self.faces[f];
        let p = self.vertices[face[i]];
        let d1 = self.vertices[face[(i + 1) % 3]] - p;
        let d2 = self.vertices[face[(i + 2) % 3]] - p;
        d1.angle(&d2)
    }

    /// Angle of face `f` at vertex `v`.
    pub fn angle_at(&self, f: usize, v: usize) -> f64 {
        let i = self.faces[f].iter().position(|&x| x == v).expect("vertex not in face");
        self.corner_angle(f, i)
    }

    /// Discrete Gaussian curvature (angle deficit). Boundary vertices use
    /// the geodesic-curvature convention `pi - sum`.
    pub fn angle_deficit(&self, v: usize) -> f64 {
        let sum: f64 = self.vertex_faces[v].iter().map(|&f| self.angle_at(f, v)).sum();
        if self.boundary_vertex[v] {
            std::f64::consts::PI - sum
        } else {
            2.0 * std::f64::consts::PI - sum
        }
    }

    /// Area-weighted vertex normal.
    pub fn vertex_normal(&self, v: usize) -> Vec3 {
        let mut n = Vec3::zeros();
        for &f in &self.vertex_faces[v] {
            n += self.frames[f].n * self.areas[f];
        }
        let len = n.norm();
        if len > 0.0 {
            n / len
        } else {
            self.frames[self.vertex_faces[v][0]].n
        }
    }

    /// Face across edge `e` from `f`.
    pub fn opposite_face(&self, e: usize, f: usize) -> Option<usize> {
        match self.edge_faces[e] {
            [Some(a), b] if a == f => b,
            [a, Some(b)] if b == f => a,
            _ => None,
        }
    }

    /// Number of connected face components when crossing only edges for
    /// which `passable` returns true.
    pub fn face_components(&self, passable: impl Fn(usize) -> bool) -> usize {
        let labels = self.face_labels(passable);
        labels.iter().copied().max().map_or(0, |m| m + 1)
    }

    /// Connected-component label per face, numbered in order of first face.
    pub fn face_labels(&self, passable: impl Fn(usize) -> bool) -> Vec<usize> {
        let mut label = vec![usize::MAX; self.faces.len()];
        let mut next = 0;
        let mut stack = Vec::new();
        for s in 0..self.faces.len() {
            if label[s] != usize::MAX {
                continue;
            }
            label[s] = next;
            stack.push(s);
            while let Some(f) = stack.pop() {
                for &e in &self.face_edges[f] {
                    if !passable(e) {
                        continue;
                    }
                    if let Some(g) = self.opposite_face(e, f) {
                        if label[g] == usize::MAX {
                            label[g] = next;
                            stack.push(g);
                        }
                    }
                }
            }
            next += 1;
        }
        label
    }

    /// Copy of this mesh with vertex positions replaced; connectivity is
    /// shared, frames and areas are recomputed.
    pub fn with_positions(&self, positions: Vec<Vec3>) -> Result<Self, MeshError> {
        if positions.len() != self.vertices.len() {
            return Err(MeshError::PoseMismatch {
                expected: self.vertices.len(),
                found: positions.len(),
            });
        }
        Self::build(positions, self.faces.clone(), MeshChecks::topology_only())
    }
}

pub fn bbox(points: &[Vec3]) -> (Vec3, Vec3) {
    let mut lo = Vec3::repeat(f64::INFINITY);
    let mut hi = Vec3::repeat(f64::NEG_INFINITY);
    for p in points {
        lo = lo.inf(p);
        hi = hi.sup(p);
    }
    (lo, hi)
}

pub fn bbox_diagonal(points: &[Vec3]) -> f64 {
    if points.is_empty() {
        return 0.0;
    }
    let (lo, hi) = bbox(points);
    (hi - lo).norm()
}

/// A garment surface in several poses sharing one connectivity.
#[derive(Debug, Clone)]
pub struct PoseSet {
    pub rest: TriMesh,
    pub poses: Vec<Vec<Vec3>>,
}

impl PoseSet {
    pub fn single(rest: TriMesh) -> Self {
        Self {
            rest,
            poses: Vec::new(),
        }
    }

    pub fn new(rest: TriMesh, poses: Vec<Vec<Vec3>>) -> Result<Self, MeshError> {
        for p in &poses {
            if p.len() != rest.num_vertices() {
                return Err(MeshError::PoseMismatch {
                    expected: rest.num_vertices(),
                    found: p.len(),
                });
            }
        }
        Ok(Self { rest, poses })
    }

    /// Rest positions followed by every extra pose.
    pub fn frames(&self) -> Vec<&[Vec3]> {
        std::iter::once(self.rest.vertices())
            .chain(self.poses.iter().map(Vec::as_slice))
            .collect()
    }

    pub fn len(&self) -> usize {
        1 + self.poses.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }
}
