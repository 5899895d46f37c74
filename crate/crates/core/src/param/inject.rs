//! Injectivity of a UV chart: flipped triangles and overlapping pairs.

use robust::{orient2d, Coord};
use serde::{Deserialize, Serialize};

use super::Chart;
use crate::mesh::Vec2;

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Injectivity {
    pub flips: Vec<usize>,
    pub overlaps: Vec<(usize, usize)>,
}

impl Injectivity {
    pub fn is_injective(&self) -> bool {
        self.flips.is_empty() && self.overlaps.is_empty()
    }
}

fn c(p: &Vec2) -> Coord<f64> {
    Coord { x: p.x, y: p.y }
}

fn orient(a: &Vec2, b: &Vec2, p: &Vec2) -> f64 {
    orient2d(c(a), c(b), c(p))
}

/// Faces with non-positive signed UV area (exact predicate).
pub fn count_flips(chart: &Chart) -> Vec<usize> {
    let uv = &chart.uv;
    chart
        .mesh
        .faces()
        .iter()
        .enumerate()
        .filter(|(_, f)| orient(&uv[f[0]], &uv[f[1]], &uv[f[2]]) <= 0.0)
        .map(|(i, _)| i)
        .collect()
}

/// Counter-clockwise corner triple, or `None` if degenerate.
fn ccw(uv: &[Vec2], f: &[usize; 3]) -> Option<[Vec2; 3]> {
    let (a, b, c) = (uv[f[0]], uv[f[1]], uv[f[2]]);
    let o = orient(&a, &b, &c);
    if o > 0.0 {
        Some([a, b, c])
    } else if o < 0.0 {
        Some([a, c, b])
    } else {
        None
    }
}

/// Some edge of `s` has every vertex of `t` on or right of its line.
fn separated_by_edges_of(s: &[Vec2; 3], t: &[Vec2; 3]) -> bool {
    (0..3).any(|i| {
        let (a, b) = (s[i], s[(i + 1) % 3]);
        t.iter().all(|p| orient(&a, &b, p) <= 0.0)
    })
}

/// Interiors of two non-degenerate triangles intersect; touching along
/// edges or at vertices does not count.
pub(crate) fn interiors_overlap(s: &[Vec2; 3], t: &[Vec2; 3]) -> bool {
    !(separated_by_edges_of(s, t) || separated_by_edges_of(t, s))
}

/// All face pairs `(i, j)`, `i < j`, whose UV interiors overlap; grid
/// broad phase over bounding boxes.
pub fn find_overlaps(chart: &Chart) -> Vec<(usize, usize)> {
    let faces = chart.mesh.faces();
    let uv = &chart.uv;
    let nf = faces.len();
    if nf < 2 {
        return Vec::new();
    }
    let tris: Vec<Option<[Vec2; 3]>> = faces.iter().map(|f| ccw(uv, f)).collect();
    let (lo, hi) = chart.uv_bounds();
    let ext = hi - lo;
    let cell = ((ext.x.max(1e-300) * ext.y.max(1e-300)) / nf as f64).sqrt().max(1e-12);
    let nx = ((ext.x / cell).ceil() as usize).clamp(1, 4096);
    let ny = ((ext.y / cell).ceil() as usize).clamp(1, 4096);
    let (sx, sy) = (nx as f64 / ext.x.max(1e-300), ny as f64 / ext.y.max(1e-300));
    let cell_of = |p: &Vec2| {
        let i = (((p.x - lo.x) * sx) as usize).min(nx - 1);
        let j = (((p.y - lo.y) * sy) as usize).min(ny - 1);
        (i, j)
    };
    let mut grid: Vec<Vec<usize>> = vec![Vec::new(); nx * ny];
    let mut boxes = Vec::with_capacity(nf);
    for (f, t) in tris.iter().enumerate() {
        let Some(t) = t else {
            boxes.push(None);
            continue;
        };
        let bl = t[0].inf(&t[1]).inf(&t[2]);
        let bh = t[0].sup(&t[1]).sup(&t[2]);
        let (i0, j0) = cell_of(&bl);
        let (i1, j1) = cell_of(&bh);
        for j in j0..=j1 {
            for i in i0..=i1 {
                grid[j * nx + i].push(f);
            }
        }
        boxes.push(Some((bl, bh)));
    }
    let mut pairs = Vec::new();
    for cell in &grid {
        for (k, &a) in cell.iter().enumerate() {
            for &b in &cell[k + 1..] {
                let ((al, ah), (bl, bh)) = (boxes[a].unwrap(), boxes[b].unwrap());
                if al.x > bh.x || bl.x > ah.x || al.y > bh.y || bl.y > ah.y {
                    continue;
                }
                let (i, j) = if a < b { (a, b) } else { (b, a) };
                if interiors_overlap(tris[i].as_ref().unwrap(), tris[j].as_ref().unwrap()) {
                    pairs.push((i, j));
                }
            }
        }
    }
    pairs.sort_unstable();
    pairs.dedup();
    pairs
}

pub fn injectivity_check(chart: &Chart) -> Injectivity {
    Injectivity {
        flips: count_flips(chart),
        overlaps: find_overlaps(chart),
    }
}
