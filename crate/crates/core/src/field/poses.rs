use nalgebra::Matrix2;

use super::curvature::{estimate_curvature, CurvatureSample};
use crate::error::FieldError;
use crate::mesh::{TriMesh, Vec2, Vec3};

/// Maps a tangent vector of face `f` in pose positions `pose` to the rest
/// face through the affine map between the two triangles.
fn transport(rest: &TriMesh, pose: &[Vec3], f: usize, d: &Vec3) -> Vec3 {
    let [a, b, c] = rest.faces()[f];
    let rp = rest.vertices();
    if pose[a] == rp[a] && pose[b] == rp[b] && pose[c] == rp[c] {
        return *d;
    }
    let (e1, e2) = (pose[b] - pose[a], pose[c] - pose[a]);
    let n = e1.cross(&e2);
    if n.norm() == 0.0 {
        return *d;
    }
    let u = e1.normalize();
    let v = n.normalize().cross(&u);
    let m = Matrix2::new(e1.dot(&u), e2.dot(&u), e1.dot(&v), e2.dot(&v));
    let coeff = match m.try_inverse() {
        Some(inv) => inv * Vec2::new(d.dot(&u), d.dot(&v)),
        None => return *d,
    };
    let out = (rp[b] - rp[a]) * coeff.x + (rp[c] - rp[a]) * coeff.y;
    let len = out.norm();
    if len > 0.0 {
        out / len
    } else {
        *d
    }
}

/// Mean computed as `x0 + Σ(xk − x0)/K` so identical inputs reproduce `x0`
/// exactly.
fn exact_mean(xs: &[f64]) -> f64 {
    let x0 = xs[0];
    x0 + xs.iter().map(|x| x - x0).sum::<f64>() / xs.len() as f64
}

/// Fuses per-pose curvature samples on the rest mesh: directions by an
/// anisotropy-weighted π/2-invariant average (after transport to the rest
/// triangles), anisotropy and curvatures by the mean over poses.
/// `poses[0]` is taken as the reference representative.
pub fn combine_poses(
    rest: &TriMesh,
    poses: &[&[Vec3]],
    samples: &[Vec<CurvatureSample>],
) -> Result<Vec<CurvatureSample>, FieldError> {
    if poses.is_empty() || poses.len() != samples.len() {
        return Err(FieldError::PoseMismatch(format!(
            "{} poses, {} sample sets",
            poses.len(),
            samples.len()
        )));
    }
    for (p, s) in poses.iter().zip(samples) {
        if p.len() != rest.num_vertices() || s.len() != rest.num_faces() {
            return Err(FieldError::PoseMismatch("pose does not match rest connectivity".into()));
        }
    }
    let k = poses.len();
    let mut out = Vec::with_capacity(rest.num_faces());
    for f in 0..rest.num_faces() {
        let fr = rest.frame(f);
        let thetas: Vec<f64> = (0..k)
            .map(|i| fr.angle_of(&transport(rest, poses[i], f, &samples[i][f].dir1)))
            .collect();
        let t0 = thetas[0];
        let (mut x, mut y) = (0.0, 0.0);
        for i in 0..k {
            let a = samples[i][f].anisotropy;
            let phi = 4.0 * (thetas[i] - t0);
            x += a * phi.cos();
            y += a * phi.sin();
        }
        let delta = if x == 0.0 && y == 0.0 { 0.0 } else { y.atan2(x) / 4.0 };
        let dir1 = if delta == 0.0 && samples[0][f].dir1 == transport(rest, poses[0], f, &samples[0][f].dir1) {
            samples[0][f].dir1
        } else {
            fr.direction(t0 + delta)
        };
        let col = |g: fn(&CurvatureSample) -> f64| -> Vec<f64> { (0..k).map(|i| g(&samples[i][f])).collect() };
        out.push(CurvatureSample {
            k1: exact_mean(&col(|s| s.k1)),
            k2: exact_mean(&col(|s| s.k2)),
            dir1,
            anisotropy: exact_mean(&col(|s| s.anisotropy)),
        });
    }
    Ok(out)
}

/// Curvature of every pose (rest first) fused onto the rest mesh.
pub fn pose_curvature(
    rest: &TriMesh,
    extra_poses: &[Vec<Vec3>],
    radius_fraction: f64,
) -> Result<Vec<CurvatureSample>, FieldError> {
    let base = estimate_curvature(rest, radius_fraction).samples;
    if extra_poses.is_empty() {
        return Ok(base);
    }
    let mut all = vec![base];
    let mut positions: Vec<&[Vec3]> = vec![rest.vertices()];
    for p in extra_poses {
        let m = rest
            .with_positions(p.clone())
            .map_err(|e| FieldError::PoseMismatch(e.to_string()))?;
        all.push(estimate_curvature(&m, radius_fraction).samples);
        positions.push(p);
    }
    combine_poses(rest, &positions, &all)
}
