//! Grain alignment: rigidly rotate a chart so its V axis follows the
//! desired 3D warp direction projected onto the surface.

use nalgebra::Matrix2;

use super::procrustes::rotation;
use super::Chart;
use crate::mesh::{Vec2, Vec3};

const MIN_PROJECTION: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GrainOutcome {
    /// Rotation applied (radians, CCW).
    pub angle: f64,
    /// Area-weighted best-fit axis before rotation.
    pub axis: Option<Vec2>,
    /// No triangle had a usable projection of the axis.
    pub noop: bool,
}

/// Per-triangle 2D image of the desired axis `a` (unit), or `None` where
/// `a` is almost normal to the triangle.
pub fn triangle_axes(chart: &Chart, a: &Vec3) -> Vec<Option<Vec2>> {
    let p = chart.mesh.vertices();
    chart
        .mesh
        .faces()
        .iter()
        .map(|&[i, j, k]| {
            let (e1, e2) = (p[j] - p[i], p[k] - p[i]);
            let n = e1.cross(&e2);
            let nn = n.norm();
            if nn == 0.0 {
                return None;
            }
            let n = n / nn;
            let proj = a - n * a.dot(&n);
            if proj.norm() < MIN_PROJECTION {
                return None;
            }
            // proj = x e1 + y e2, carried to UV with the same coefficients
            let g = Matrix2::new(e1.dot(&e1), e1.dot(&e2), e1.dot(&e2), e2.dot(&e2));
            let c = g.try_inverse()? * Vec2::new(proj.dot(&e1), proj.dot(&e2));
            let uv = &chart.uv;
            let d = (uv[j] - uv[i]) * c.x + (uv[k] - uv[i]) * c.y;
            let len = d.norm();
            (len > 0.0 && len.is_finite()).then(|| d / len)
        })
        .collect()
}

fn best_axis(chart: &Chart, a: &Vec3) -> Option<Vec2> {
    let axes = triangle_axes(chart, a);
    let mut sum = Vec2::zeros();
    for (f, ax) in axes.iter().enumerate() {
        if let Some(ax) = ax {
            sum += ax * chart.mesh.area(f);
        }
    }
    let len = sum.norm();
    (len > 0.0).then(|| sum / len)
}

/// Signed angle (radians) of each triangle's axis relative to the chart's
/// V direction; triangles without a usable projection are skipped.
pub fn grain_angles(chart: &Chart, a: &Vec3) -> Vec<f64> {
    triangle_axes(chart, a)
        .into_iter()
        .flatten()
        .map(|d| (-d.x).atan2(d.y))
        .collect()
}

/// Rotates `chart` about its UV centroid so the area-weighted best-fit
/// axis points along +V.
pub fn align_grain(chart: &mut Chart, a: &Vec3) -> GrainOutcome {
    let a = a.normalize();
    let Some(axis) = best_axis(chart, &a) else {
        return GrainOutcome {
            angle: 0.0,
            axis: None,
            noop: true,
        };
    };
    // angle taking axis onto (0, 1)
    let angle = axis.x.atan2(axis.y);
    if angle != 0.0 {
        let r = rotation(angle);
        let c = chart.uv.iter().sum::<Vec2>() / chart.uv.len() as f64;
        for p in &mut chart.uv {
            *p = c + r * (*p - c);
        }
    }
    GrainOutcome {
        angle,
        axis: Some(axis),
        noop: false,
    }
}
