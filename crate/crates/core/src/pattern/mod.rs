//! Pattern output: pieces packed on a fabric sheet with seam labels, dart
//! notches and grain arrows; SVG/JSON export and the end-to-end pipeline.

mod config;
mod pipeline;
mod svg;

use serde::{Deserialize, Serialize};

pub use config::Config;
pub use pipeline::{
    load_sketches, pattern_from_layout, run_pipeline, PatchReport, PipelineInput, PipelineOutput, Report,
    SeamReport,
};
pub use svg::export_svg;

use crate::error::PatternError;
use crate::mesh::Vec2;
use crate::param::procrustes::best_fit_reflection;
use crate::param::{Chart, DartSpec, SeamPair};

/// Where a chart's bounding box lands on the sheet.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Placement {
    pub chart: usize,
    /// Added to chart UV.
    pub offset: [f64; 2],
    pub x: f64,
    pub y: f64,
    pub width: f64,
    pub height: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Packing {
    /// Parallel to the input charts.
    pub placements: Vec<Placement>,
    pub sheet_width: f64,
    pub sheet_height: f64,
    /// Piece area over used sheet area.
    pub utilization: f64,
}

fn polygon_area(chart: &Chart) -> f64 {
    (0..chart.num_faces()).map(|f| chart.uv_area(f).abs()).sum()
}

/// Shelf packing, next fit by decreasing height. Pieces keep their
/// rotation (it carries the grain).
pub fn pack(charts: &[Chart], sheet_width: f64, margin: f64) -> Result<Packing, PatternError> {
    let boxes: Vec<(Vec2, Vec2)> = charts.iter().map(|c| c.uv_bounds()).collect();
    let usable = sheet_width - 2.0 * margin;
    for (i, (lo, hi)) in boxes.iter().enumerate() {
        let w = hi.x - lo.x;
        if !(w <= usable) {
            return Err(PatternError::ChartTooWide { chart: i, width: w });
        }
    }
    let mut order: Vec<usize> = (0..charts.len()).collect();
    order.sort_by(|&a, &b| {
        let ha = boxes[a].1.y - boxes[a].0.y;
        let hb = boxes[b].1.y - boxes[b].0.y;
        hb.total_cmp(&ha).then(a.cmp(&b))
    });
    let mut placements = vec![None; charts.len()];
    let (mut x, mut y, mut shelf) = (margin, margin, 0.0f64);
    for i in order {
        let (lo, hi) = boxes[i];
        let (w, h) = (hi.x - lo.x, hi.y - lo.y);
        if x > margin && x + w > sheet_width - margin {
            y += shelf + margin;
            x = margin;
            shelf = 0.0;
        }
        placements[i] = Some(Placement {
            chart: i,
            offset: [x - lo.x, y - lo.y],
            x,
            y,
            width: w,
            height: h,
        });
        x += w + margin;
        shelf = shelf.max(h);
    }
    let sheet_height = if charts.is_empty() { 2.0 * margin } else { y + shelf + margin };
    let area: f64 = charts.iter().map(polygon_area).sum();
    let used = (sheet_width * sheet_height).max(f64::MIN_POSITIVE);
    Ok(Packing {
        placements: placements.into_iter().map(Option::unwrap).collect(),
        sheet_width,
        sheet_height,
        utilization: area / used,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Piece {
    /// Patch index in the layout.
    pub patch: usize,
    /// Sheet positions (mm) per chart vertex.
    pub positions: Vec<[f64; 2]>,
    pub faces: Vec<[usize; 3]>,
    pub source_vertex: Vec<usize>,
    pub source_face: Vec<usize>,
    /// Boundary loop (chart vertices), counter-clockwise.
    pub outline: Vec<usize>,
    /// Grain arrow (tail, head) along +V.
    pub grain: [[f64; 2]; 2],
    pub corners: usize,
    pub max_stretch: f64,
}

/// Labels one seam: its sides on two pieces (the same piece for seams
/// inside one piece).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeamMark {
    pub id: usize,
    pub piece_p: usize,
    pub p: Vec<usize>,
    pub piece_q: usize,
    pub q: Vec<usize>,
    pub length_p: f64,
    pub length_q: f64,
    /// RMS distance of the best reflection mapping side p onto side q.
    pub reflection_rms: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DartMark {
    pub piece: usize,
    pub tip: usize,
    pub p: Vec<usize>,
    pub q: Vec<usize>,
    pub opening: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Pattern {
    pub sheet_width: f64,
    pub sheet_height: f64,
    pub margin: f64,
    pub utilization: f64,
    pub pieces: Vec<Piece>,
    pub seams: Vec<SeamMark>,
    pub darts: Vec<DartMark>,
}

pub(crate) fn polyline_length(pts: &[Vec2]) -> f64 {
    pts.windows(2).map(|w| (w[1] - w[0]).norm()).sum()
}

fn ccw_outline(chart: &Chart) -> Vec<usize> {
    let Some(lp) = chart.mesh.boundary_loops().first() else { return Vec::new() };
    let mut lp = lp.clone();
    let signed: f64 = (0..lp.len())
        .map(|i| {
            let (a, b) = (chart.uv[lp[i]], chart.uv[lp[(i + 1) % lp.len()]]);
            a.x * b.y - a.y * b.x
        })
        .sum();
    if signed < 0.0 {
        lp.reverse();
    }
    lp
}

/// Seam metrics in UV: side lengths and reflection residual.
pub fn seam_metrics(charts: &[Chart], s: &SeamPair) -> (f64, f64, f64) {
    let p: Vec<Vec2> = s.p.iter().map(|&v| charts[s.chart_p].uv[v]).collect();
    let q: Vec<Vec2> = s.q.iter().map(|&v| charts[s.chart_q].uv[v]).collect();
    let fit = best_fit_reflection(&p, &q);
    let rms = if p.is_empty() {
        0.0
    } else {
        (p.iter().zip(&q).map(|(a, b)| (fit.apply(a) - b).norm_squared()).sum::<f64>() / p.len() as f64).sqrt()
    };
    (polyline_length(&p), polyline_length(&q), rms)
}

impl Pattern {
    /// Places flattened charts on the sheet. `metrics` gives (corners,
    /// max stretch) per chart.
    pub fn assemble(
        charts: &[Chart],
        seams: &[SeamPair],
        darts: &[DartSpec],
        metrics: &[(usize, f64)],
        sheet_width: f64,
        margin: f64,
    ) -> Result<Self, PatternError> {
        let packing = pack(charts, sheet_width, margin)?;
        let pieces = charts
            .iter()
            .zip(&packing.placements)
            .enumerate()
            .map(|(i, (c, pl))| {
                let off = Vec2::new(pl.offset[0], pl.offset[1]);
                let positions: Vec<[f64; 2]> = c.uv.iter().map(|p| [p.x + off.x, p.y + off.y]).collect();
                let cx = pl.x + 0.5 * pl.width;
                let cy = pl.y + 0.5 * pl.height;
                let half = 0.15 * pl.height;
                Piece {
                    patch: i,
                    positions,
                    faces: c.mesh.faces().to_vec(),
                    source_vertex: c.source_vertex.clone(),
                    source_face: c.source_face.clone(),
                    outline: ccw_outline(c),
                    grain: [[cx, cy - half], [cx, cy + half]],
                    corners: metrics.get(i).map_or(0, |m| m.0),
                    max_stretch: metrics.get(i).map_or(0.0, |m| m.1),
                }
            })
            .collect();
        let seams = seams
            .iter()
            .map(|s| {
                let (lp, lq, rms) = seam_metrics(charts, s);
                SeamMark {
                    id: s.id,
                    piece_p: s.chart_p,
                    p: s.p.clone(),
                    piece_q: s.chart_q,
                    q: s.q.clone(),
                    length_p: lp,
                    length_q: lq,
                    reflection_rms: rms,
                }
            })
            .collect();
        let darts = darts
            .iter()
            .map(|d| {
                let uv = &charts[d.chart].uv;
                let t = uv[d.tip];
                let (a, b) = (uv[*d.p.last().unwrap_or(&d.tip)] - t, uv[*d.q.last().unwrap_or(&d.tip)] - t);
                let opening = if a.norm() > 0.0 && b.norm() > 0.0 { a.angle(&b) } else { 0.0 };
                DartMark {
                    piece: d.chart,
                    tip: d.tip,
                    p: d.p.clone(),
                    q: d.q.clone(),
                    opening,
                }
            })
            .collect();
        Ok(Self {
            sheet_width: packing.sheet_width,
            sheet_height: packing.sheet_height,
            margin,
            utilization: packing.utilization,
            pieces,
            seams,
            darts,
        })
    }

    pub fn empty(sheet_width: f64, margin: f64) -> Self {
        Self {
            sheet_width,
            sheet_height: 2.0 * margin,
            margin,
            utilization: 0.0,
            pieces: Vec::new(),
            seams: Vec::new(),
            darts: Vec::new(),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("pattern serializes")
    }
}
