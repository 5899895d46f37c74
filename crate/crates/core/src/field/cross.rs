use std::f64::consts::{FRAC_PI_2, TAU};

use serde::{Deserialize, Serialize};

use super::curvature::CurvatureSample;
use crate::error::FieldError;
use crate::mesh::{SurfacePoint, TriMesh, Vec3};
use crate::sparse::{self, NormalEquations};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ConstraintKind {
    Hard,
    Soft,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AlignConstraint {
    pub face: usize,
    pub direction: Vec3,
    pub kind: ConstraintKind,
    pub weight: f64,
}

impl AlignConstraint {
    pub fn hard(face: usize, direction: Vec3) -> Self {
        Self {
            face,
            direction,
            kind: ConstraintKind::Hard,
            weight: 0.0,
        }
    }

    pub fn soft(face: usize, direction: Vec3, weight: f64) -> Self {
        Self {
            face,
            direction,
            kind: ConstraintKind::Soft,
            weight,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CrossField {
    /// Per-face angle in the face frame, representative of {θ + kπ/2}.
    pub theta: Vec<f64>,
    pub constrained: Vec<bool>,
    /// (vertex, index) for interior vertices with non-zero index.
    pub singularities: Vec<(usize, f64)>,
}

impl CrossField {
    /// Direction `k` (0..4) of face `f` as a 3D unit vector.
    pub fn direction(&self, mesh: &TriMesh, f: usize, k: usize) -> Vec3 {
        mesh.frame(f).direction(self.theta[f] + k as f64 * FRAC_PI_2)
    }

    pub fn singularity_sum(&self) -> f64 {
        self.singularities.iter().map(|s| s.1).sum()
    }
}

/// Reduces an angle to (−π/4, π/4].
pub fn reduce_quarter(a: f64) -> f64 {
    let mut r = a.rem_euclid(FRAC_PI_2);
    if r > FRAC_PI_2 / 2.0 {
        r -= FRAC_PI_2;
    }
    r
}

fn to_complex4(theta: f64) -> (f64, f64) {
    let a = 4.0 * theta;
    (a.cos(), a.sin())
}

/// π/2-invariant mean angle of `angles` with `weights`; `None` if they cancel.
pub fn quarter_mean(angles: &[f64], weights: &[f64]) -> Option<f64> {
    let (mut x, mut y) = (0.0, 0.0);
    for (a, w) in angles.iter().zip(weights) {
        let (c, s) = to_complex4(*a);
        x += w * c;
        y += w * s;
    }
    if x.hypot(y) < 1e-9 * weights.iter().sum::<f64>().max(1e-300) {
        None
    } else {
        Some(y.atan2(x) / 4.0)
    }
}

/// Angle of the shared edge `e` in the frame of `f`.
fn edge_angle(mesh: &TriMesh, e: usize, f: usize) -> f64 {
    let [a, b] = mesh.edges()[e];
    let d = mesh.vertices()[b] - mesh.vertices()[a];
    mesh.frame(f).angle_of(&d)
}

/// Hard constraints aligning every boundary face with its boundary edge.
/// Faces with several boundary edges get their π/2-invariant average.
pub fn boundary_constraints(mesh: &TriMesh) -> Vec<AlignConstraint> {
    let mut out = Vec::new();
    for f in 0..mesh.num_faces() {
        let angles: Vec<f64> = mesh
            .face_edges(f)
            .iter()
            .filter(|&&e| mesh.is_boundary_edge(e))
            .map(|&e| edge_angle(mesh, e, f))
            .collect();
        if angles.is_empty() {
            continue;
        }
        let theta = quarter_mean(&angles, &vec![1.0; angles.len()]).unwrap_or(angles[0]);
        out.push(AlignConstraint::hard(f, mesh.frame(f).direction(theta)));
    }
    out
}

/// Faces visited by a dual-graph shortest path between two faces.
fn face_path(mesh: &TriMesh, from: usize, to: usize) -> Vec<usize> {
    use crate::mesh::geodesic::MinItem;
    use std::collections::{BinaryHeap, HashMap};
    if from == to {
        return vec![from];
    }
    let mut dist: HashMap<usize, f64> = HashMap::new();
    let mut prev: HashMap<usize, usize> = HashMap::new();
    let mut heap = BinaryHeap::new();
    dist.insert(from, 0.0);
    heap.push(MinItem(0.0, from));
    while let Some(MinItem(d, f)) = heap.pop() {
        if f == to {
            break;
        }
        if d > dist[&f] {
            continue;
        }
        for &e in &mesh.face_edges(f) {
            if let Some(g) = mesh.opposite_face(e, f) {
                let nd = d + (mesh.centroid(f) - mesh.centroid(g)).norm();
                if dist.get(&g).is_none_or(|&old| nd < old) {
                    dist.insert(g, nd);
                    prev.insert(g, f);
                    heap.push(MinItem(nd, g));
                }
            }
        }
    }
    let mut path = vec![to];
    let mut cur = to;
    while let Some(&p) = prev.get(&cur) {
        path.push(p);
        cur = p;
    }
    path.reverse();
    path
}

/// Hard constraints from sketch strokes. Each face crossed by a stroke is
/// aligned with the stroke tangent projected to it; faces crossed by two
/// strokes whose tangents are within `merge_tol` (mod π/2) get the average,
/// otherwise the strokes conflict.
pub fn stroke_constraints(
    mesh: &TriMesh,
    strokes: &[Vec<SurfacePoint>],
    merge_tol: f64,
) -> Result<Vec<AlignConstraint>, FieldError> {
    let nf = mesh.num_faces();
    // per face: (stroke id, angles)
    let mut per_face: Vec<Vec<(usize, Vec<f64>)>> = vec![Vec::new(); nf];
    for (sid, stroke) in strokes.iter().enumerate() {
        for pair in stroke.windows(2) {
            for p in pair {
                if p.face >= nf {
                    return Err(FieldError::BadFace { face: p.face });
                }
            }
            let (a, b) = (pair[0].position(mesh), pair[1].position(mesh));
            let t = b - a;
            if t.norm() < 1e-12 {
                continue;
            }
            for f in face_path(mesh, pair[0].face, pair[1].face) {
                let fr = mesh.frame(f);
                let local = fr.to_local(&t);
                if local.norm() < 1e-12 * t.norm() {
                    continue;
                }
                let ang = local.y.atan2(local.x);
                match per_face[f].iter_mut().find(|(s, _)| *s == sid) {
                    Some((_, v)) => v.push(ang),
                    None => per_face[f].push((sid, vec![ang])),
                }
            }
        }
    }
    let mut out = Vec::new();
    for (f, entries) in per_face.into_iter().enumerate() {
        if entries.is_empty() {
            continue;
        }
        let means: Vec<f64> = entries
            .iter()
            .map(|(_, a)| quarter_mean(a, &vec![1.0; a.len()]).unwrap_or(a[0]))
            .collect();
        for m in &means[1..] {
            if reduce_quarter(m - means[0]).abs() > merge_tol {
                return Err(FieldError::ConflictingConstraints { face: f });
            }
        }
        let theta = quarter_mean(&means, &vec![1.0; means.len()]).unwrap_or(means[0]);
        out.push(AlignConstraint::hard(f, mesh.frame(f).direction(theta)));
    }
    Ok(out)
}

/// Combines boundary and user hard constraints; user constraints replace
/// boundary ones on shared faces.
pub fn merge_hard(boundary: &[AlignConstraint], user: &[AlignConstraint]) -> Vec<AlignConstraint> {
    let mut out: Vec<AlignConstraint> = boundary
        .iter()
        .filter(|b| !user.iter().any(|u| u.face == b.face))
        .copied()
        .collect();
    out.extend_from_slice(user);
    out.sort_by_key(|c| c.face);
    out
}

const HARD_TOL: f64 = 1e-6;

/// Least-squares smoothing of `e^{4iθ}` across interior edges with hard
/// constraints eliminated and soft constraints weighted by `lambda_soft` ×
/// anisotropy (curvature) or their own weight (user).
pub fn compute_cross_field(
    mesh: &TriMesh,
    curvature: &[CurvatureSample],
    constraints: &[AlignConstraint],
    lambda_soft: f64,
) -> Result<CrossField, FieldError> {
    let nf = mesh.num_faces();
    let mut hard: Vec<Option<f64>> = vec![None; nf];
    let mut soft: Vec<Vec<(f64, f64)>> = vec![Vec::new(); nf];
    for c in constraints {
        if c.face >= nf {
            return Err(FieldError::BadFace { face: c.face });
        }
        let ang = mesh.frame(c.face).angle_of(&c.direction);
        match c.kind {
            ConstraintKind::Hard => match hard[c.face] {
                Some(prev) if reduce_quarter(ang - prev).abs() > HARD_TOL => {
                    return Err(FieldError::ConflictingConstraints { face: c.face });
                }
                Some(_) => {}
                None => hard[c.face] = Some(ang),
            },
            ConstraintKind::Soft => {
                if c.weight > 0.0 {
                    soft[c.face].push((ang, c.weight));
                }
            }
        }
    }
    for (f, s) in curvature.iter().enumerate().take(nf) {
        let w = lambda_soft * s.anisotropy;
        if w > 0.0 {
            soft[f].push((mesh.frame(f).angle_of(&s.dir1), w));
        }
    }

    let mut unknown = vec![usize::MAX; nf];
    let mut nfree = 0;
    for f in 0..nf {
        if hard[f].is_none() {
            unknown[f] = nfree;
            nfree += 1;
        }
    }

    // Anchor free components that touch no hard face and carry negligible
    // soft weight, otherwise the system is singular.
    let labels = mesh.face_labels(|e| {
        let [a, b] = mesh.edge_faces(e);
        matches!((a, b), (Some(a), Some(b)) if hard[a].is_none() && hard[b].is_none())
    });
    let ncomp = labels.iter().copied().max().map_or(0, |m| m + 1);
    let mut anchored = vec![false; ncomp];
    let mut soft_total = vec![0.0; ncomp];
    for f in 0..nf {
        if hard[f].is_some() {
            continue;
        }
        soft_total[labels[f]] += soft[f].iter().map(|s| s.1).sum::<f64>();
        for &e in &mesh.face_edges(f) {
            if mesh.opposite_face(e, f).is_some_and(|g| hard[g].is_some()) {
                anchored[labels[f]] = true;
            }
        }
    }
    for comp in 0..ncomp {
        if anchored[comp] || soft_total[comp] >= 1e-3 {
            continue;
        }
        let best = (0..nf)
            .filter(|&f| labels[f] == comp && hard[f].is_none())
            .max_by(|&a, &b| {
                let sa = curvature.get(a).map_or(0.0, |s| s.anisotropy);
                let sb = curvature.get(b).map_or(0.0, |s| s.anisotropy);
                sa.total_cmp(&sb).then(b.cmp(&a))
            });
        if let Some(f) = best {
            let ang = curvature.get(f).map_or(0.0, |s| mesh.frame(f).angle_of(&s.dir1));
            soft[f].push((ang, 1.0));
        }
    }

    let mut eq = NormalEquations::new(2 * nfree, 1);
    for e in 0..mesh.num_edges() {
        let [Some(f), Some(g)] = mesh.edge_faces(e) else {
            continue;
        };
        let rot = 4.0 * (edge_angle(mesh, e, f) - edge_angle(mesh, e, g));
        let (rc, rs) = (rot.cos(), rot.sin());
        // residual z_f − r z_g
        match (hard[f], hard[g]) {
            (None, None) => {
                let (xf, yf, xg, yg) = (2 * unknown[f], 2 * unknown[f] + 1, 2 * unknown[g], 2 * unknown[g] + 1);
                eq.add_row(&[(xf, 1.0), (xg, -rc), (yg, rs)], &[0.0], 1.0);
                eq.add_row(&[(yf, 1.0), (yg, -rc), (xg, -rs)], &[0.0], 1.0);
            }
            (None, Some(tg)) => {
                let (zx, zy) = to_complex4(tg);
                let (tx, ty) = (rc * zx - rs * zy, rs * zx + rc * zy);
                eq.add_row(&[(2 * unknown[f], 1.0)], &[tx], 1.0);
                eq.add_row(&[(2 * unknown[f] + 1, 1.0)], &[ty], 1.0);
            }
            (Some(tf), None) => {
                // z_g = conj(r) z_f
                let (zx, zy) = to_complex4(tf);
                let (tx, ty) = (rc * zx + rs * zy, -rs * zx + rc * zy);
                eq.add_row(&[(2 * unknown[g], 1.0)], &[tx], 1.0);
                eq.add_row(&[(2 * unknown[g] + 1, 1.0)], &[ty], 1.0);
            }
            (Some(_), Some(_)) => {}
        }
    }
    for f in 0..nf {
        if hard[f].is_some() {
            continue;
        }
        for &(ang, w) in &soft[f] {
            let (zx, zy) = to_complex4(ang);
            eq.add_row(&[(2 * unknown[f], 1.0)], &[zx], w);
            eq.add_row(&[(2 * unknown[f] + 1, 1.0)], &[zy], w);
        }
    }
    let sol = if nfree > 0 {
        sparse::solve(&eq).map_err(FieldError::Solver)?.remove(0)
    } else {
        Vec::new()
    };

    let theta: Vec<f64> = (0..nf)
        .map(|f| match hard[f] {
            Some(t) => t,
            None => sol[2 * unknown[f] + 1].atan2(sol[2 * unknown[f]]) / 4.0,
        })
        .collect();
    let constrained = hard.iter().map(Option::is_some).collect();
    let singularities = singularities(mesh, &theta);
    Ok(CrossField {
        theta,
        constrained,
        singularities,
    })
}

/// Faces around interior vertex `v` in counter-clockwise order, with the
/// edge crossed when stepping to the next face.
pub fn face_ring(mesh: &TriMesh, v: usize) -> Vec<(usize, usize)> {
    let star = mesh.vertex_faces(v);
    let mut out = Vec::with_capacity(star.len());
    let mut f = star[0];
    for _ in 0..star.len() {
        let face = mesh.faces()[f];
        let i = face.iter().position(|&x| x == v).unwrap();
        let b = face[(i + 2) % 3];
        let e = mesh.edge_between(v, b).unwrap();
        out.push((f, e));
        match mesh.opposite_face(e, f) {
            Some(g) if g != star[0] => f = g,
            _ => break,
        }
    }
    out
}

/// Index of each interior vertex (multiples of 1/4); non-zero ones returned.
pub fn singularities(mesh: &TriMesh, theta: &[f64]) -> Vec<(usize, f64)> {
    let mut out = Vec::new();
    for v in 0..mesh.num_vertices() {
        if mesh.is_boundary_vertex(v) {
            continue;
        }
        let ring = face_ring(mesh, v);
        let mut sum = 0.0;
        for (i, &(f, e)) in ring.iter().enumerate() {
            let g = ring[(i + 1) % ring.len()].0;
            let rel_f = theta[f] - edge_angle(mesh, e, f);
            let rel_g = theta[g] - edge_angle(mesh, e, g);
            sum += reduce_quarter(rel_g - rel_f);
        }
        let index = (sum + mesh.angle_deficit(v)) / TAU;
        let q = (index * 4.0).round() / 4.0;
        if q != 0.0 {
            out.push((v, q));
        }
    }
    out
}

/// Signed angle between the field and a tangent direction on face `f`,
/// reduced to (−π/4, π/4].
pub fn misalignment(mesh: &TriMesh, field: &CrossField, f: usize, d: &Vec3) -> f64 {
    reduce_quarter(mesh.frame(f).angle_of(d) - field.theta[f])
}
