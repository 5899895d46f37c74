//! Local step: per-triangle grain frames and rotations, seam reflections and
//! dart axes, all fitted to the current UV.

use nalgebra::Matrix2;

use super::procrustes::{best_fit_reflection, best_fit_rotation, fit_axis_through, reflect_across};
use super::{Chart, DartSpec, SeamPair};
use crate::mesh::{Vec2, Vec3};

/// Degenerate-triangle threshold (mm²), reference and UV.
pub(crate) const DEGENERATE_AREA: f64 = 1e-12;

/// Isometric 2D embedding `A′B′C′` of a 3D triangle: `A′` at the origin,
/// `B′` on the positive x axis.
pub fn reference_triangle(p: &[Vec3], f: [usize; 3]) -> [Vec2; 3] {
    let (a, b, c) = (p[f[0]], p[f[1]], p[f[2]]);
    let e1 = b - a;
    let e2 = c - a;
    let l1 = e1.norm();
    if l1 == 0.0 {
        return [Vec2::zeros(); 3];
    }
    let u = e1 / l1;
    let n = e1.cross(&e2);
    let v = if n.norm() > 0.0 { n.normalize().cross(&u) } else { Vec3::zeros() };
    [Vec2::zeros(), Vec2::new(l1, 0.0), Vec2::new(e2.dot(&u), e2.dot(&v))]
}

/// 3D-side data of a chart that never changes during a solve.
#[derive(Debug, Clone)]
pub(crate) struct RefGeometry {
    /// pose → face → reference triangle
    pub tris: Vec<Vec<[Vec2; 3]>>,
    pub valid: Vec<bool>,
    /// Stretch-term length scale: mean squared reference edge length.
    pub kappa: f64,
}

impl RefGeometry {
    pub fn new(chart: &Chart) -> Self {
        let faces = chart.mesh.faces();
        let tris: Vec<Vec<[Vec2; 3]>> = chart
            .pose_positions()
            .iter()
            .map(|p| faces.iter().map(|&f| reference_triangle(p, f)).collect())
            .collect();
        let area: Vec<f64> = tris[0].iter().map(|t| 0.5 * (t[1].x * t[2].y)).collect();
        let valid = area.iter().map(|&a| a > DEGENERATE_AREA).collect();
        let mut sum = 0.0;
        let mut n = 0usize;
        for t in &tris[0] {
            for i in 0..3 {
                sum += (t[(i + 1) % 3] - t[i]).norm_squared();
                n += 1;
            }
        }
        Self {
            tris,
            valid,
            kappa: if n > 0 { sum / n as f64 } else { 1.0 },
        }
    }
}

/// Grain frame of one triangle: the UV points `G` (centroid),
/// `G_u = G + (1, 0)`, `G_v = G + (0, 1)` in barycentric coordinates of the
/// current UV triangle, and the 3D lengths of their images.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TriangleFrame {
    pub g: [f64; 3],
    pub g_u: [f64; 3],
    pub g_v: [f64; 3],
    /// `g_u − g` and `g_v − g`: the stretch-term coefficients of `u_A, u_B, u_C`.
    pub du: [f64; 3],
    pub dv: [f64; 3],
    /// Pose-averaged `‖G′_u − G′‖`, `‖G′_v − G′‖`.
    pub su: f64,
    pub sv: f64,
    /// False for degenerate UV or reference triangles.
    pub valid: bool,
}

impl TriangleFrame {
    fn invalid() -> Self {
        Self {
            g: [1.0 / 3.0; 3],
            g_u: [1.0 / 3.0; 3],
            g_v: [1.0 / 3.0; 3],
            du: [0.0; 3],
            dv: [0.0; 3],
            su: 1.0,
            sv: 1.0,
            valid: false,
        }
    }

    /// Image points `G′, G′_u, G′_v` on a 3D (or reference) triangle.
    pub fn images<P>(&self, a: P, b: P, c: P) -> [P; 3]
    where
        P: Copy + std::ops::Mul<f64, Output = P> + std::ops::Add<Output = P>,
    {
        let img = |w: &[f64; 3]| a * w[0] + b * w[1] + c * w[2];
        [img(&self.g), img(&self.g_u), img(&self.g_v)]
    }
}

/// Mean as `x0 + Σ(xk − x0)/K`, exact for identical inputs.
pub(crate) fn exact_mean<T>(xs: &[T]) -> T
where
    T: Copy + std::ops::Sub<Output = T> + std::ops::Add<Output = T> + std::ops::Div<f64, Output = T>,
{
    let x0 = xs[0];
    if xs.len() == 1 {
        return x0;
    }
    let mut acc = xs[1] - x0;
    for x in &xs[2..] {
        acc = acc + (*x - x0);
    }
    x0 + acc / xs.len() as f64
}

pub(crate) fn triangle_frame(uv: &[Vec2; 3], refs: &[[Vec2; 3]], ref_valid: bool) -> TriangleFrame {
    if !ref_valid {
        return TriangleFrame::invalid();
    }
    let t = Matrix2::new(uv[1].x - uv[0].x, uv[2].x - uv[0].x, uv[1].y - uv[0].y, uv[2].y - uv[0].y);
    let det = t.determinant();
    if det.abs() < 2.0 * DEGENERATE_AREA {
        return TriangleFrame::invalid();
    }
    let inv = Matrix2::new(t[(1, 1)], -t[(0, 1)], -t[(1, 0)], t[(0, 0)]) / det;
    let (bu, cu) = (inv[(0, 0)], inv[(1, 0)]);
    let (bv, cv) = (inv[(0, 1)], inv[(1, 1)]);
    let du = [-bu - cu, bu, cu];
    let dv = [-bv - cv, bv, cv];
    let su: Vec<f64> = refs
        .iter()
        .map(|r| ((r[1] - r[0]) * bu + (r[2] - r[0]) * cu).norm())
        .collect();
    let sv: Vec<f64> = refs
        .iter()
        .map(|r| ((r[1] - r[0]) * bv + (r[2] - r[0]) * cv).norm())
        .collect();
    let third = 1.0 / 3.0;
    TriangleFrame {
        g: [third; 3],
        g_u: [third + du[0], third + du[1], third + du[2]],
        g_v: [third + dv[0], third + dv[1], third + dv[2]],
        du,
        dv,
        su: exact_mean(&su),
        sv: exact_mean(&sv),
        valid: true,
    }
}

/// Everything the global step needs, frozen from one UV state.
#[derive(Debug, Clone)]
pub struct LocalStep {
    /// chart → face → grain frame
    pub frames: Vec<Vec<TriangleFrame>>,
    /// chart → face → pose-averaged rotated reference edges `R e′` for the
    /// edges (0→1, 1→2, 2→0)
    pub rigid_targets: Vec<Vec<[Vec2; 3]>>,
    /// per seam pair: (p targets, q targets)
    pub seam_targets: Vec<(Vec<Vec2>, Vec<Vec2>)>,
    pub dart_targets: Vec<(Vec<Vec2>, Vec<Vec2>)>,
    pub degenerate_uv: usize,
    pub degenerate_seams: usize,
    pub degenerate_darts: usize,
}

pub(crate) fn seam_targets(p: &[Vec2], q: &[Vec2]) -> (Vec<Vec2>, Vec<Vec2>, bool) {
    let m = best_fit_reflection(p, q);
    let qt = p.iter().zip(q).map(|(a, b)| (m.apply(a) + b) * 0.5).collect();
    let pt = p.iter().zip(q).map(|(a, b)| (a + m.apply_inverse(b)) * 0.5).collect();
    (pt, qt, m.degenerate)
}

pub(crate) fn dart_targets(tip: &Vec2, p: &[Vec2], q: &[Vec2]) -> Option<(Vec<Vec2>, Vec<Vec2>)> {
    let mids: Vec<Vec2> = p.iter().zip(q).map(|(a, b)| (a + b) * 0.5).collect();
    let d = fit_axis_through(tip, &mids)?;
    let qt = p.iter().zip(q).map(|(a, b)| (reflect_across(tip, &d, a) + b) * 0.5).collect();
    let pt = p.iter().zip(q).map(|(a, b)| (a + reflect_across(tip, &d, b)) * 0.5).collect();
    Some((pt, qt))
}

pub(crate) fn local_step(
    charts: &[Chart],
    refs: &[RefGeometry],
    seams: &[SeamPair],
    darts: &[DartSpec],
) -> LocalStep {
    let mut frames = Vec::with_capacity(charts.len());
    let mut rigid_targets = Vec::with_capacity(charts.len());
    let mut degenerate_uv = 0;
    for (chart, rg) in charts.iter().zip(refs) {
        let mut fr = Vec::with_capacity(chart.num_faces());
        let mut rt = Vec::with_capacity(chart.num_faces());
        for (fi, f) in chart.mesh.faces().iter().enumerate() {
            let uv = [chart.uv[f[0]], chart.uv[f[1]], chart.uv[f[2]]];
            let pose_refs: Vec<[Vec2; 3]> = rg.tris.iter().map(|t| t[fi]).collect();
            let frame = triangle_frame(&uv, &pose_refs, rg.valid[fi]);
            if rg.valid[fi] && !frame.valid {
                degenerate_uv += 1;
            }
            fr.push(frame);
            let uv_edges = [uv[1] - uv[0], uv[2] - uv[1], uv[0] - uv[2]];
            let targets: Vec<[Vec2; 3]> = pose_refs
                .iter()
                .map(|r| {
                    let re = [r[1] - r[0], r[2] - r[1], r[0] - r[2]];
                    let rot = best_fit_rotation(&re, &uv_edges);
                    [rot * re[0], rot * re[1], rot * re[2]]
                })
                .collect();
            rt.push([
                exact_mean(&targets.iter().map(|t| t[0]).collect::<Vec<_>>()),
                exact_mean(&targets.iter().map(|t| t[1]).collect::<Vec<_>>()),
                exact_mean(&targets.iter().map(|t| t[2]).collect::<Vec<_>>()),
            ]);
        }
        frames.push(fr);
        rigid_targets.push(rt);
    }
    let mut degenerate_seams = 0;
    let seam_targets = seams
        .iter()
        .map(|s| {
            let p: Vec<Vec2> = s.p.iter().map(|&i| charts[s.chart_p].uv[i]).collect();
            let q: Vec<Vec2> = s.q.iter().map(|&i| charts[s.chart_q].uv[i]).collect();
            let (pt, qt, degenerate) = seam_targets(&p, &q);
            degenerate_seams += usize::from(degenerate);
            (pt, qt)
        })
        .collect();
    let mut degenerate_darts = 0;
    let dart_targets = darts
        .iter()
        .map(|d| {
            let uv = &charts[d.chart].uv;
            let p: Vec<Vec2> = d.p.iter().map(|&i| uv[i]).collect();
            let q: Vec<Vec2> = d.q.iter().map(|&i| uv[i]).collect();
            dart_targets(&uv[d.tip], &p, &q).unwrap_or_else(|| {
                degenerate_darts += 1;
                (p, q)
            })
        })
        .collect();
    LocalStep {
        frames,
        rigid_targets,
        seam_targets,
        dart_targets,
        degenerate_uv,
        degenerate_seams,
        degenerate_darts,
    }
}
