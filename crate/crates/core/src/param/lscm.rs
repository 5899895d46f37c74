//! Least squares conformal map initialization.

use super::grain::align_grain;
use super::local::reference_triangle;
use super::Chart;
use crate::error::ParamError;
use crate::mesh::geodesic::edge_distances;
use crate::mesh::{TriMesh, Vec2, Vec3};
use crate::sparse::{solve, NormalEquations};

/// Two boundary vertices at (approximately) maximal edge-graph distance,
/// found by a double sweep, and that distance.
pub fn farthest_boundary_pair(mesh: &TriMesh) -> Result<(usize, usize, f64), ParamError> {
    let boundary: Vec<usize> = mesh.boundary_loops().iter().flatten().copied().collect();
    if boundary.len() < 2 {
        return Err(ParamError::TooFewBoundary);
    }
    let farthest = |from: usize| {
        let d = edge_distances(mesh, &[from], f64::INFINITY);
        boundary
            .iter()
            .map(|&b| (b, d[b]))
            .filter(|(_, x)| x.is_finite())
            .fold((from, 0.0), |best, c| if c.1 > best.1 { c } else { best })
    };
    let (a, _) = farthest(boundary[0]);
    let (b, d) = farthest(a);
    if a == b || d <= 0.0 {
        return Err(ParamError::TooFewBoundary);
    }
    Ok((a, b, d))
}

/// Raw LSCM: the two farthest boundary vertices pinned at `(0,0)`, `(d,0)`.
pub fn lscm_uv(mesh: &TriMesh) -> Result<Vec<Vec2>, ParamError> {
    let (pa, pb, d) = farthest_boundary_pair(mesh)?;
    let n = mesh.num_vertices();
    // variables: u_i → 2i, v_i → 2i+1, pinned ones eliminated
    let mut map = vec![None; 2 * n];
    let mut fixed = vec![0.0; 2 * n];
    fixed[2 * pb] = d;
    let mut next = 0;
    for v in 0..n {
        if v == pa || v == pb {
            continue;
        }
        map[2 * v] = Some(next);
        map[2 * v + 1] = Some(next + 1);
        next += 2;
    }
    let mut eq = NormalEquations::new(next, 1);
    let p = mesh.vertices();
    let mut re = Vec::with_capacity(6);
    let mut im = Vec::with_capacity(6);
    for (f, &tri) in mesh.faces().iter().enumerate() {
        let area = mesh.area(f);
        if area <= 0.0 {
            continue;
        }
        let local = reference_triangle(p, tri);
        let s = 1.0 / (2.0 * area.sqrt());
        re.clear();
        im.clear();
        let (mut b_re, mut b_im) = (0.0, 0.0);
        for j in 0..3 {
            // edge opposite vertex j
            let e = (local[(j + 2) % 3] - local[(j + 1) % 3]) * s;
            let (gu, gv) = (2 * tri[j], 2 * tri[j] + 1);
            // Re(e·U) = ex u − ey v, Im(e·U) = ey u + ex v
            for (row, b, cu, cv) in [(&mut re, &mut b_re, e.x, -e.y), (&mut im, &mut b_im, e.y, e.x)] {
                for (g, c) in [(gu, cu), (gv, cv)] {
                    match map[g] {
                        Some(i) => row.push((i, c)),
                        None => *b -= c * fixed[g],
                    }
                }
            }
        }
        eq.add_row(&re, &[b_re], 1.0);
        eq.add_row(&im, &[b_im], 1.0);
    }
    let sol = solve(&eq).map_err(ParamError::Singular)?.swap_remove(0);
    Ok((0..n)
        .map(|v| {
            let get = |g: usize| map[g].map_or(fixed[g], |i| sol[i]);
            Vec2::new(get(2 * v), get(2 * v + 1))
        })
        .collect())
}

/// LSCM scaled to the 3D area and rotated so V follows `grain`.
pub fn lscm_init(chart: &mut Chart, grain: Option<&Vec3>) -> Result<(), ParamError> {
    chart.check_disk()?;
    let mut uv = lscm_uv(&chart.mesh)?;
    let faces = chart.mesh.faces();
    let uv_area: f64 = faces
        .iter()
        .map(|&[a, b, c]| {
            let (e1, e2) = (uv[b] - uv[a], uv[c] - uv[a]);
            0.5 * (e1.x * e2.y - e1.y * e2.x)
        })
        .sum();
    if uv_area.abs() > 0.0 && uv_area.is_finite() {
        let s = (chart.mesh.total_area() / uv_area.abs()).sqrt();
        for p in &mut uv {
            *p *= s;
        }
    }
    chart.uv = uv;
    if let Some(a) = grain {
        align_grain(chart, a);
    }
    Ok(())
}
