//! Goal checks on single patches, cached by patch content.

use std::collections::{HashMap, HashSet};
use std::f64::consts::FRAC_PI_4;
use std::fmt;
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::charts::build_patch_chart;
use super::{Layout, LayoutOptions, Segment};
use crate::mesh::{Vec2, Vec3};
use crate::param::{injectivity_check, joint_optimize, lscm_init, measure, Chart, DartSpec, SeamPair};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum FailReason {
    NotDisk { chi: i64, loops: usize },
    Solver { message: String },
    NonInjective { flips: usize, overlaps: usize },
    Stretch { value: f64, limit: f64 },
    Corners { count: usize, limit: usize },
}

impl FailReason {
    /// The patch cannot be laid flat without folding or tearing (closed or
    /// multiply connected patches included).
    pub fn is_non_injective(&self) -> bool {
        matches!(self, FailReason::NotDisk { .. } | FailReason::NonInjective { .. })
    }
}

impl fmt::Display for FailReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FailReason::NotDisk { chi, loops } => write!(f, "not a disk (chi {chi}, {loops} boundary loops)"),
            FailReason::Solver { message } => write!(f, "flattening failed: {message}"),
            FailReason::NonInjective { flips, overlaps } => {
                write!(f, "non-injective ({flips} flips, {overlaps} overlaps)")
            }
            FailReason::Stretch { value, limit } => write!(f, "stretch {value:.4} > {limit}"),
            FailReason::Corners { count, limit } => write!(f, "{count} corners > {limit}"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DartMetric {
    /// Mesh vertex at the tip.
    pub tip: usize,
    /// UV angle between the two mouth ends seen from the tip.
    pub opening: f64,
    /// 3D length of one side.
    pub length: f64,
}

#[derive(Debug, Clone)]
pub struct PatchCheck {
    pub faces: Vec<usize>,
    pub failure: Option<FailReason>,
    pub corners: usize,
    pub max_stretch: f64,
    /// Flattened chart (absent when the patch could not be flattened).
    pub chart: Option<Chart>,
    pub seams: Vec<SeamPair>,
    pub darts: Vec<DartSpec>,
    pub dart_metrics: Vec<DartMetric>,
    /// UV bounding-box diagonal.
    pub extent: f64,
    pub energy: f64,
}

impl PatchCheck {
    pub fn passes(&self) -> bool {
        self.failure.is_none()
    }

    fn failed(faces: &[usize], reason: FailReason) -> Self {
        Self {
            faces: faces.to_vec(),
            failure: Some(reason),
            corners: 0,
            max_stretch: f64::INFINITY,
            chart: None,
            seams: Vec::new(),
            darts: Vec::new(),
            dart_metrics: Vec::new(),
            extent: 0.0,
            energy: f64::INFINITY,
        }
    }
}

/// Point at arc length `dist` from vertex `i` walking in direction `step`
/// (±1) along the closed polygon.
fn along(pts: &[Vec3], i: usize, dist: f64, step: isize) -> Vec3 {
    let n = pts.len() as isize;
    let mut cur = i as isize;
    let mut left = dist;
    for _ in 0..n {
        let next = (cur + step).rem_euclid(n);
        let (a, b) = (pts[cur as usize], pts[next as usize]);
        let l = (b - a).norm();
        if l >= left && l > 0.0 {
            return a + (b - a) * (left / l);
        }
        left -= l;
        cur = next;
    }
    pts[cur as usize]
}

/// Turning angle at vertex `i` measured between points `dist` before and
/// after it.
fn turn(pts: &[Vec3], i: usize, dist: f64) -> f64 {
    let a = along(pts, i, dist, -1);
    let b = along(pts, i, dist, 1);
    let (u, w) = (pts[i] - a, b - pts[i]);
    if u.norm() == 0.0 || w.norm() == 0.0 {
        return 0.0;
    }
    u.angle(&w)
}

fn stencil(pts: &[Vec3]) -> f64 {
    let n = pts.len();
    let total: f64 = (0..n).map(|i| (pts[(i + 1) % n] - pts[i]).norm()).sum();
    (2.0 * total / n as f64).min(total / 6.0)
}

/// Corners of a flattened disk chart: runs of boundary vertices whose UV
/// interior angle is more than 45° away from straight (measured over about
/// two edge lengths), plus label changes (where segments or the mesh
/// boundary meet) turning by more than 45° in 3D outside such runs.
/// Vertices in `excluded` never count.
pub fn count_corners(
    chart: &Chart,
    labels: &HashMap<(usize, usize), Option<usize>>,
    excluded: &HashSet<usize>,
) -> usize {
    let Some(lp) = chart.mesh.boundary_loops().first() else { return 0 };
    let n = lp.len();
    if n < 3 {
        return 0;
    }
    let uv: Vec<Vec3> = lp.iter().map(|&v| lift(&chart.uv[v])).collect();
    let xyz: Vec<Vec3> = lp.iter().map(|&v| chart.mesh.vertices()[v]).collect();
    let (su, sx) = (stencil(&uv), stencil(&xyz));
    let flag: Vec<bool> = (0..n)
        .map(|i| !excluded.contains(&lp[i]) && turn(&uv, i, su) > FRAC_PI_4)
        .collect();
    let label = |i: usize| {
        let (a, b) = (lp[i % n], lp[(i + 1) % n]);
        labels.get(&if a < b { (a, b) } else { (b, a) }).copied().flatten()
    };
    let mut count = if flag.iter().all(|&f| f) {
        1
    } else {
        (0..n).filter(|&i| flag[i] && !flag[(i + n - 1) % n]).count()
    };
    for i in 0..n {
        let near_run = flag[(i + n - 1) % n] || flag[i] || flag[(i + 1) % n];
        let junction = label(i + n - 1) != label(i);
        if junction && !near_run && !excluded.contains(&lp[i]) && turn(&xyz, i, sx) > FRAC_PI_4 {
            count += 1;
        }
    }
    count
}

fn lift(p: &Vec2) -> Vec3 {
    Vec3::new(p.x, p.y, 0.0)
}

fn angle_at(tip: &Vec2, a: &Vec2, b: &Vec2) -> f64 {
    let (u, w) = (a - tip, b - tip);
    if u.norm() == 0.0 || w.norm() == 0.0 {
        return 0.0;
    }
    lift(&u).angle(&lift(&w))
}

/// Flattens the patch alone (with its internal seams and darts) and tests
/// disk topology, injectivity, thread stretch and corner count.
pub fn check_patch(layout: &Layout, faces: &[usize], segments: &[Segment], options: &LayoutOptions) -> PatchCheck {
    let pc = match build_patch_chart(layout, faces, segments) {
        Ok(pc) => pc,
        Err(e) => return PatchCheck::failed(faces, FailReason::Solver { message: e.to_string() }),
    };
    let mut chart = pc.chart.clone();
    if !chart.is_disk() {
        let reason = FailReason::NotDisk {
            chi: chart.mesh.euler_characteristic(),
            loops: chart.mesh.boundary_loops().len(),
        };
        return PatchCheck::failed(faces, reason);
    }
    let solver = options.solver;
    let flat = lscm_init(&mut chart, solver.grain.as_ref())
        .and_then(|_| joint_optimize(vec![chart], pc.seams.clone(), pc.darts.clone(), options.weights, solver));
    let (mut charts, report) = match flat {
        Ok(x) => x,
        Err(e) => return PatchCheck::failed(faces, FailReason::Solver { message: e.to_string() }),
    };
    let chart = charts.pop().unwrap();
    let m = measure(&chart, &options.weights);
    let inj = injectivity_check(&chart);
    let corners = count_corners(&chart, &pc.boundary_labels, &pc.excluded);
    let goals = &options.goals;
    let failure = if !inj.is_injective() {
        Some(FailReason::NonInjective {
            flips: inj.flips.len(),
            overlaps: inj.overlaps.len(),
        })
    } else if !(m.max_thread_stretch <= goals.max_stretch) {
        Some(FailReason::Stretch {
            value: m.max_thread_stretch,
            limit: goals.max_stretch,
        })
    } else if corners > goals.max_corners {
        Some(FailReason::Corners {
            count: corners,
            limit: goals.max_corners,
        })
    } else {
        None
    };
    let dart_metrics = pc
        .darts
        .iter()
        .zip(&pc.dart_tips)
        .map(|(d, &tip)| {
            let (pl, ql) = (*d.p.last().unwrap(), *d.q.last().unwrap());
            let pos = chart.mesh.vertices();
            let mut length = 0.0;
            let mut prev = d.tip;
            for &v in &d.p {
                length += (pos[v] - pos[prev]).norm();
                prev = v;
            }
            DartMetric {
                tip,
                opening: angle_at(&chart.uv[d.tip], &chart.uv[pl], &chart.uv[ql]),
                length,
            }
        })
        .collect();
    let (lo, hi) = chart.uv_bounds();
    PatchCheck {
        faces: faces.to_vec(),
        failure,
        corners,
        max_stretch: m.max_thread_stretch,
        seams: pc.seams,
        darts: pc.darts,
        dart_metrics,
        extent: (hi - lo).norm(),
        energy: report.final_energy(),
        chart: Some(chart),
    }
}

type CheckKey = (Vec<usize>, Vec<(usize, usize)>, u64);

/// Memoizing patch checker; identical patches (same faces, same cuts and
/// owners touching them) are flattened once.
#[derive(Debug)]
pub struct PatchChecker {
    pub options: LayoutOptions,
    /// Optional per-face stretch bound; a patch is held to the smallest
    /// bound among its faces (and never looser than the goals).
    pub face_limit: Vec<f64>,
    cache: HashMap<CheckKey, Arc<PatchCheck>>,
    pub evaluations: usize,
}

impl PatchChecker {
    pub fn new(options: LayoutOptions) -> Self {
        Self {
            options,
            face_limit: Vec::new(),
            cache: HashMap::new(),
            evaluations: 0,
        }
    }

    /// Stretch bound applied to a patch.
    pub fn stretch_bound(&self, faces: &[usize]) -> f64 {
        faces
            .iter()
            .filter_map(|&f| self.face_limit.get(f))
            .fold(self.options.goals.max_stretch, |a, &b| a.min(b))
    }

    fn key(&self, layout: &Layout, faces: &[usize]) -> CheckKey {
        let mut f = faces.to_vec();
        f.sort_unstable();
        let mut cuts: Vec<(usize, usize)> = f
            .iter()
            .flat_map(|&x| layout.mesh.face_edges(x))
            .filter_map(|e| layout.owner(e).map(|o| (e, o)))
            .collect();
        cuts.sort_unstable();
        cuts.dedup();
        let bound = self.stretch_bound(&f).to_bits();
        (f, cuts, bound)
    }

    pub fn check(&mut self, layout: &Layout, faces: &[usize]) -> Arc<PatchCheck> {
        self.check_many(layout, &[faces.to_vec()]).pop().unwrap()
    }

    /// Checks several patches of the same layout, flattening uncached ones in
    /// parallel.
    pub fn check_many(&mut self, layout: &Layout, patches: &[Vec<usize>]) -> Vec<Arc<PatchCheck>> {
        let keys: Vec<CheckKey> = patches.iter().map(|p| self.key(layout, p)).collect();
        let mut todo: Vec<usize> = (0..patches.len()).filter(|&i| !self.cache.contains_key(&keys[i])).collect();
        todo.dedup_by_key(|i| keys[*i].clone());
        if !todo.is_empty() {
            let segments = layout.segments();
            let options = self.options;
            let done: Vec<PatchCheck> = todo
                .par_iter()
                .map(|&i| {
                    let mut o = options;
                    o.goals.max_stretch = f64::from_bits(keys[i].2);
                    check_patch(layout, &patches[i], &segments, &o)
                })
                .collect();
            self.evaluations += done.len();
            for (&i, c) in todo.iter().zip(done) {
                self.cache.insert(keys[i].clone(), Arc::new(c));
            }
        }
        keys.iter().map(|k| self.cache[k].clone()).collect()
    }

    pub fn check_layout(&mut self, layout: &Layout) -> Vec<Arc<PatchCheck>> {
        self.check_many(layout, &layout.patches())
    }
}
