//! End to end: mesh (+ poses, sketches) → layout → flattened, packed pattern.

use std::time::Instant;

use serde::{Deserialize, Serialize};

use super::{Config, Pattern};
use crate::error::{LayoutError, MeshError, PatternError};
use crate::field::{boundary_constraints, compute_cross_field, merge_hard, pose_curvature, stroke_constraints};
use crate::layout::{
    count_corners, layout_charts, mirror_merge, reduce_symmetry_seam, run_layout, sketch_paths, DartRecord, Layout,
    LayoutContext, LayoutDocument, PatchCheck, PatchChecker,
};
use crate::mesh::{PoseSet, SurfacePoint, SymmetrySplit, TriMesh, Vec3};
use crate::param::{injectivity_check, joint_optimize, lscm_init, measure, Chart, EnergyBreakdown, FlattenReport};
use crate::trace::build_graph;

#[derive(Debug, Clone)]
pub struct PipelineInput {
    pub mesh: TriMesh,
    /// Extra poses, same vertex count as `mesh`.
    pub poses: Vec<Vec<Vec3>>,
    pub strokes: Vec<Vec<SurfacePoint>>,
}

impl PipelineInput {
    pub fn new(mesh: TriMesh) -> Self {
        Self {
            mesh,
            poses: Vec::new(),
            strokes: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PatchReport {
    pub faces: usize,
    pub corners: usize,
    pub max_stretch: f64,
    pub injective: bool,
    pub energies: EnergyBreakdown,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeamReport {
    pub id: usize,
    pub length_p: f64,
    pub length_q: f64,
    /// |length_p − length_q| / max.
    pub mismatch: f64,
    /// Reflection residual RMS over the mean side length.
    pub residual: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageTime {
    pub stage: String,
    pub seconds: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub pieces: usize,
    pub patches: Vec<PatchReport>,
    pub seams: Vec<SeamReport>,
    pub inserted: usize,
    pub removed: usize,
    pub darts: usize,
    /// Seams dissolved on the symmetry plane.
    pub symmetry_removed: usize,
    /// False when the coupled solve broke a goal and per-patch charts were kept.
    pub joint: bool,
    pub flatten: FlattenReport,
    /// Layout reruns needed before the coupled solve met the goals.
    pub refinements: usize,
    pub utilization: f64,
    pub timings: Vec<StageTime>,
}

#[derive(Debug, Clone)]
pub struct PipelineOutput {
    pub pattern: Pattern,
    pub charts: Vec<Chart>,
    pub layout: Layout,
    pub document: LayoutDocument,
    pub report: Report,
    pub svg: String,
    /// Per-face stretch bounds the layout was checked against after
    /// refinement (empty when uniform).
    pub face_limit: Vec<f64>,
}

struct Timer(Vec<StageTime>, Instant);

impl Timer {
    fn new() -> Self {
        Self(Vec::new(), Instant::now())
    }

    fn lap(&mut self, stage: &str) {
        let now = Instant::now();
        self.0.push(StageTime {
            stage: stage.into(),
            seconds: (now - self.1).as_secs_f64(),
        });
        self.1 = now;
    }
}

/// Sketch JSON: an array of strokes, each an array of `{face, bary}`.
pub fn load_sketches(text: &str) -> Result<Vec<Vec<SurfacePoint>>, PatternError> {
    Ok(serde_json::from_str(text)?)
}

fn scaled(config: &Config, input: &PipelineInput) -> Result<(TriMesh, Vec<Vec<Vec3>>), MeshError> {
    if config.scale == 1.0 {
        return Ok((input.mesh.clone(), input.poses.clone()));
    }
    let s = config.scale;
    let mesh = input.mesh.with_positions(input.mesh.vertices().iter().map(|p| p * s).collect())?;
    let poses = input.poses.iter().map(|p| p.iter().map(|x| x * s).collect()).collect();
    Ok((mesh, poses))
}

/// Stroke points re-expressed on the kept half (mirrored when they lie on
/// the other side).
fn strokes_to_half(split: &SymmetrySplit, mesh: &TriMesh, strokes: &[Vec<SurfacePoint>]) -> Vec<Vec<SurfacePoint>> {
    let to_half = split.orig_to_half_vertex();
    strokes
        .iter()
        .map(|s| {
            s.iter()
                .map(|p| {
                    let Some(&hf) = split.orig_to_half_face.get(p.face) else { return *p };
                    let of = mesh.faces()[p.face];
                    let hv = split.half.faces()[hf];
                    let mut bary = [0.0; 3];
                    for (j, &v) in of.iter().enumerate() {
                        if let Some(k) = hv.iter().position(|&h| h == to_half[v]) {
                            bary[k] += p.bary[j];
                        }
                    }
                    SurfacePoint::new(hf, bary)
                })
                .collect()
        })
        .collect()
}

/// Half-mesh dart records copied to both sides of the merged layout.
fn mirror_darts(darts: &[DartRecord], split: &SymmetrySplit) -> Vec<DartRecord> {
    let orig = &split.half_to_orig_vertex;
    darts
        .iter()
        .flat_map(|d| {
            let a = DartRecord {
                path: 2 * d.path,
                tip: d.tip.map(|v| orig[v]),
                ..d.clone()
            };
            let b = DartRecord {
                path: 2 * d.path + 1,
                tip: d.tip.map(|v| split.mirror_vertex[orig[v]]),
                ..d.clone()
            };
            [a, b]
        })
        .collect()
}

/// Layout reruns, with the pieces the coupled solve pushed past the goals
/// held to a tighter stretch bound.
const REFINE_ROUNDS: usize = 4;
const TIGHTEN: f64 = 0.9;

/// A piece that met the goals alone but not after the coupled solve.
struct Violation {
    /// Layout mesh faces.
    faces: Vec<usize>,
    stretch: f64,
    bound: f64,
}

/// Runs every stage. Errors carry the failing stage name.
pub fn run_pipeline(config: &Config, input: &PipelineInput) -> Result<PipelineOutput, PatternError> {
    config.validate()?;
    let mut timer = Timer::new();
    let (mesh, poses) = scaled(config, input).map_err(|e| PatternError::stage("input", e))?;
    let poses = PoseSet::new(mesh.clone(), poses)
        .map_err(|e| PatternError::stage("input", e))?
        .poses;

    let split = if config.symmetry {
        let tol = config.symmetry_tolerance * mesh.bbox_diagonal();
        Some(
            crate::mesh::split_by_plane(&mesh, &config.plane(), tol)
                .map_err(|e| PatternError::stage("symmetrize", e))?,
        )
    } else {
        None
    };
    let (work, work_poses, strokes) = match &split {
        Some(s) => {
            let half_poses = poses
                .iter()
                .map(|p| s.half_to_orig_vertex.iter().map(|&v| p[v]).collect())
                .collect();
            (s.half.clone(), half_poses, strokes_to_half(s, &mesh, &input.strokes))
        }
        None => (mesh.clone(), poses.clone(), input.strokes.clone()),
    };
    timer.lap("symmetrize");

    let field = (|| {
        let samples = pose_curvature(&work, &work_poses, config.curvature_radius)?;
        let user = stroke_constraints(&work, &strokes, config.stroke_merge_tolerance)?;
        let hard = merge_hard(&boundary_constraints(&work), &user);
        compute_cross_field(&work, &samples, &hard, config.soft_weight)
    })()
    .map_err(|e| PatternError::stage("field", e))?;
    timer.lap("field");

    let options = config.layout_options();
    let graph = build_graph(&work, &field, options.trace);
    let sketches = sketch_paths(&graph, &work, &strokes).map_err(|e| PatternError::stage("trace", e))?;
    timer.lap("trace");

    let ctx = LayoutContext { graph, field, options };
    let nf = work.num_faces();
    let mut face_limit: Vec<f64> = Vec::new();
    let mut first: Option<PipelineOutput> = None;
    for round in 0..=REFINE_ROUNDS {
        let mut checker = PatchChecker::new(options);
        checker.face_limit = face_limit.clone();
        let run = match run_layout(&work, work_poses.clone(), &ctx, &sketches, &mut checker) {
            Ok(r) => r,
            Err(e) if round == 0 => return Err(PatternError::stage("layout", e)),
            Err(_) => break,
        };
        timer.lap("layout");

        let (layout, dart_records, symmetry_removed, mut checker) = match &split {
            Some(s) => {
                let mut full = mirror_merge(&run.layout, s, &mesh, poses.clone());
                let mut full_checker = PatchChecker::new(options);
                if !face_limit.is_empty() {
                    full_checker.face_limit = s.orig_to_half_face.iter().map(|&h| face_limit[h]).collect();
                }
                let (removed, more) = reduce_symmetry_seam(&mut full, &mut full_checker);
                let mut records = mirror_darts(&run.darts, s);
                records.extend(more);
                (full, records, removed, full_checker)
            }
            None => (run.layout, run.darts, 0, checker),
        };
        timer.lap("symmetry");

        let (mut out, violations) = build(config, layout, &dart_records, &mut checker, &mut timer)?;
        out.report.inserted = run.insert.inserted;
        out.report.removed = run.removed;
        out.report.symmetry_removed = symmetry_removed;
        out.report.refinements = round;
        if out.report.joint {
            return Ok(out);
        }
        if violations.is_empty() {
            return Ok(first.unwrap_or(out));
        }
        // hold the offending pieces to a proportionally tighter bound
        if face_limit.is_empty() {
            face_limit = vec![f64::INFINITY; nf];
        }
        for v in &violations {
            let ratio = if v.stretch > config.max_stretch { config.max_stretch / v.stretch } else { 1.0 };
            let limit = v.bound * (TIGHTEN * ratio).min(TIGHTEN);
            for &f in &v.faces {
                let w = split.as_ref().map_or(f, |s| s.orig_to_half_face[f]);
                face_limit[w] = face_limit[w].min(limit);
            }
        }
        first.get_or_insert(out);
    }
    Ok(first.expect("first round either returns or is kept"))
}

/// Flattening, packing and export for a finished layout (e.g. one reloaded
/// from its JSON document). `mesh` is in input units.
pub fn pattern_from_layout(
    config: &Config,
    input: &PipelineInput,
    document: &LayoutDocument,
) -> Result<PipelineOutput, PatternError> {
    config.validate()?;
    let (mesh, poses) = scaled(config, input).map_err(|e| PatternError::stage("input", e))?;
    let layout = document.to_layout(&mesh, poses).map_err(|e| PatternError::stage("layout", e))?;
    let mut checker = PatchChecker::new(config.layout_options());
    let mut timer = Timer::new();
    Ok(build(config, layout, &document.darts, &mut checker, &mut timer)?.0)
}

fn goals_met(config: &Config, chart: &Chart, stretch: f64, corners: usize) -> bool {
    injectivity_check(chart).is_injective() && stretch <= config.max_stretch && corners <= config.max_corners
}

fn build(
    config: &Config,
    layout: Layout,
    dart_records: &[DartRecord],
    checker: &mut PatchChecker,
    timer: &mut Timer,
) -> Result<(PipelineOutput, Vec<Violation>), PatternError> {
    let checks = checker.check_layout(&layout);
    if let Some((i, c)) = checks.iter().enumerate().find(|(_, c)| !c.passes()) {
        let reason = c.failure.as_ref().map(|r| r.to_string()).unwrap_or_default();
        let e = LayoutError::Unsatisfiable {
            patches: vec![format!("patch {i} ({} faces): {reason}", c.faces.len())],
        };
        return Err(PatternError::stage("layout", e));
    }
    let (pcs, seams, darts) = layout_charts(&layout).map_err(|e| PatternError::stage("flatten", e))?;
    let solver = config.solver();
    let mut init = Vec::with_capacity(pcs.len());
    for (pc, check) in pcs.iter().zip(&checks) {
        let mut chart = pc.chart.clone();
        match check.chart.as_ref().filter(|c| c.num_vertices() == chart.num_vertices()) {
            Some(c) => chart.uv = c.uv.clone(),
            None => lscm_init(&mut chart, solver.grain.as_ref()).map_err(|e| PatternError::stage("flatten", e))?,
        }
        init.push(chart);
    }
    let fallback = |checks: &[std::sync::Arc<PatchCheck>], init: &[Chart]| -> Vec<Chart> {
        checks
            .iter()
            .zip(init)
            .map(|(c, i)| c.chart.clone().unwrap_or_else(|| i.clone()))
            .collect()
    };
    let (mut charts, mut flatten, mut joint) = match joint_optimize(init.clone(), seams.clone(), darts.clone(), config.weights, solver) {
        Ok((c, r)) => (c, r, true),
        Err(_) => (fallback(&checks, &init), FlattenReport::default(), false),
    };
    let measure_all = |charts: &[Chart]| -> Vec<_> { charts.iter().map(|c| measure(c, &config.weights)).collect() };
    let mut ms = measure_all(&charts);
    let mut violations = Vec::new();
    if joint {
        for ((c, m), pc) in charts.iter().zip(&ms).zip(&pcs) {
            let k = count_corners(c, &pc.boundary_labels, &pc.excluded);
            if !goals_met(config, c, m.max_thread_stretch, k) {
                violations.push(Violation {
                    faces: pc.faces.clone(),
                    stretch: m.max_thread_stretch,
                    bound: checker.stretch_bound(&pc.faces),
                });
            }
        }
    }
    if !violations.is_empty() {
        charts = fallback(&checks, &init);
        ms = measure_all(&charts);
        flatten = FlattenReport::default();
        joint = false;
    }
    timer.lap("flatten");

    let patches: Vec<PatchReport> = charts
        .iter()
        .zip(&ms)
        .zip(&pcs)
        .map(|((c, m), pc)| PatchReport {
            faces: c.num_faces(),
            corners: count_corners(c, &pc.boundary_labels, &pc.excluded),
            max_stretch: m.max_thread_stretch,
            injective: injectivity_check(c).is_injective(),
            energies: m.energies,
        })
        .collect();
    let metrics: Vec<(usize, f64)> = patches.iter().map(|p| (p.corners, p.max_stretch)).collect();
    let pattern = Pattern::assemble(&charts, &seams, &darts, &metrics, config.sheet_width, config.margin)
        .map_err(|e| match e {
            PatternError::ChartTooWide { .. } => e,
            other => PatternError::stage("pack", other),
        })?;
    timer.lap("pack");

    let svg = super::export_svg(&pattern);
    let document = LayoutDocument::from_layout(&layout, dart_records).with_checks(&checks);
    timer.lap("export");

    let seams = pattern
        .seams
        .iter()
        .map(|s| {
            let longest = s.length_p.max(s.length_q);
            let mean = 0.5 * (s.length_p + s.length_q);
            SeamReport {
                id: s.id,
                length_p: s.length_p,
                length_q: s.length_q,
                mismatch: if longest > 0.0 { (s.length_p - s.length_q).abs() / longest } else { 0.0 },
                residual: if mean > 0.0 { s.reflection_rms / mean } else { 0.0 },
            }
        })
        .collect();
    let report = Report {
        pieces: pattern.pieces.len(),
        patches,
        seams,
        inserted: 0,
        removed: 0,
        darts: pattern.darts.len(),
        symmetry_removed: 0,
        joint,
        flatten,
        refinements: 0,
        utilization: pattern.utilization,
        timings: std::mem::take(&mut timer.0),
    };
    let out = PipelineOutput {
        pattern,
        charts,
        layout,
        document,
        report,
        svg,
        face_limit: checker.face_limit.clone(),
    };
    Ok((out, violations))
}
