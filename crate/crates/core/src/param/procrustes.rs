//! 2D Procrustes fits: rotations (det +1) and reflections (det −1).

use nalgebra::Matrix2;

use crate::mesh::Vec2;

/// Rotation by `angle`.
pub fn rotation(angle: f64) -> Matrix2<f64> {
    let (s, c) = angle.sin_cos();
    Matrix2::new(c, -s, s, c)
}

/// Reflection across the line through the origin at angle `theta`.
pub fn reflection(theta: f64) -> Matrix2<f64> {
    let (s, c) = (2.0 * theta).sin_cos();
    Matrix2::new(c, s, s, -c)
}

/// Rotation `R` minimizing `Σ ‖R a_i − b_i‖²` (vectors, no translation).
pub fn best_fit_rotation(a: &[Vec2], b: &[Vec2]) -> Matrix2<f64> {
    let (mut dot, mut cross) = (0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        dot += x.dot(y);
        cross += x.x * y.y - x.y * y.x;
    }
    if dot == 0.0 && cross == 0.0 {
        return Matrix2::identity();
    }
    rotation(cross.atan2(dot))
}

/// Best-fit reflection with translation: `x ↦ m x + t`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Reflection {
    pub m: Matrix2<f64>,
    pub t: Vec2,
    /// All points coincide, so any reflection fits equally well.
    pub degenerate: bool,
}

impl Reflection {
    pub fn apply(&self, p: &Vec2) -> Vec2 {
        self.m * p + self.t
    }

    /// `m` is a symmetric involution, so the inverse is `m (q − t)`.
    pub fn apply_inverse(&self, q: &Vec2) -> Vec2 {
        self.m * (q - self.t)
    }
}

fn centroid(p: &[Vec2]) -> Vec2 {
    p.iter().sum::<Vec2>() / p.len().max(1) as f64
}

/// Orthogonal `M` with det −1 and translation `t` minimizing
/// `Σ ‖M p_i + t − q_i‖²`.
pub fn best_fit_reflection(p: &[Vec2], q: &[Vec2]) -> Reflection {
    let (pc, qc) = (centroid(p), centroid(q));
    let mut h = Matrix2::<f64>::zeros();
    for (a, b) in p.iter().zip(q) {
        h += (b - qc) * (a - pc).transpose();
    }
    // tr(F(θ)ᵀ H) = cos2θ (H11 − H22) + sin2θ (H12 + H21)
    let x = h[(0, 0)] - h[(1, 1)];
    let y = h[(0, 1)] + h[(1, 0)];
    let degenerate = x.hypot(y) <= 1e-300;
    let m = reflection(if degenerate { 0.0 } else { 0.5 * y.atan2(x) });
    Reflection {
        m,
        t: qc - m * pc,
        degenerate,
    }
}

/// `w Σ (‖p − p_t‖² + ‖q − q_t‖²)` with the midpoint targets
/// `q_t = (M p + q)/2`, `p_t = (p + M⁻¹ q)/2` under a fixed `m`.
pub fn reflection_energy(p: &[Vec2], q: &[Vec2], m: &Reflection, w: f64) -> f64 {
    p.iter()
        .zip(q)
        .map(|(a, b)| {
            let qt = (m.apply(a) + b) * 0.5;
            let pt = (a + m.apply_inverse(b)) * 0.5;
            (a - pt).norm_squared() + (b - qt).norm_squared()
        })
        .sum::<f64>()
        * w
}

/// Unit direction of the best line through `tip` fitted to `points`
/// (principal axis of the scatter about the tip). `None` when every point
/// sits on the tip.
pub fn fit_axis_through(tip: &Vec2, points: &[Vec2]) -> Option<Vec2> {
    let (mut sxx, mut sxy, mut syy) = (0.0, 0.0, 0.0);
    for r in points {
        let d = r - tip;
        sxx += d.x * d.x;
        sxy += d.x * d.y;
        syy += d.y * d.y;
    }
    if sxx + syy <= 1e-300 {
        return None;
    }
    let theta = 0.5 * (2.0 * sxy).atan2(sxx - syy);
    Some(Vec2::new(theta.cos(), theta.sin()))
}

/// Reflection across the line through `tip` with unit direction `d`.
pub fn reflect_across(tip: &Vec2, d: &Vec2, x: &Vec2) -> Vec2 {
    let r = x - tip;
    tip + d * (2.0 * r.dot(d)) - r
}
