//! Local-global minimization of the textile energy over one or more charts.

use serde::{Deserialize, Serialize};

use super::grain::align_grain;
use super::local::{local_step, LocalStep, RefGeometry};
use super::lscm::lscm_init;
use super::measure::EnergyBreakdown;
use super::{Chart, DartSpec, SeamPair, SolverOptions, Weights};
use crate::error::ParamError;
use crate::mesh::Vec2;
use crate::sparse::{CachedCholesky, NormalEquations};

const TIKHONOV: f64 = 1e-10;
const MAX_BACKTRACKS: usize = 8;

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct FlattenReport {
    pub iterations: usize,
    /// Energy after initialization and after every accepted iteration.
    pub energies: Vec<f64>,
    pub converged: bool,
    pub degenerate_reference: usize,
    pub degenerate_uv: usize,
    pub degenerate_seams: usize,
    pub degenerate_darts: usize,
    /// Grain alignment found no usable projected axis on some chart.
    pub grain_noop: bool,
    /// The solver had to re-pin and regularize.
    pub retried: bool,
    pub backtracks: usize,
}

impl FlattenReport {
    pub fn final_energy(&self) -> f64 {
        self.energies.last().copied().unwrap_or(0.0)
    }
}

/// A set of charts coupled through seams and darts.
#[derive(Debug, Clone)]
pub struct Problem {
    charts: Vec<Chart>,
    pub seams: Vec<SeamPair>,
    pub darts: Vec<DartSpec>,
    pub weights: Weights,
    pub options: SolverOptions,
    refs: Vec<RefGeometry>,
    offsets: Vec<usize>,
}

impl Problem {
    pub fn new(
        charts: Vec<Chart>,
        seams: Vec<SeamPair>,
        darts: Vec<DartSpec>,
        weights: Weights,
        options: SolverOptions,
    ) -> Result<Self, ParamError> {
        let bad = |m: String| Err(ParamError::Invalid(m));
        for (i, c) in charts.iter().enumerate() {
            if c.uv.len() != c.num_vertices() {
                return bad(format!("chart {i}: uv length {} != {}", c.uv.len(), c.num_vertices()));
            }
            if c.poses.iter().any(|p| p.len() != c.num_vertices()) {
                return bad(format!("chart {i}: pose vertex count mismatch"));
            }
        }
        for s in &seams {
            if s.p.len() != s.q.len() || s.p.is_empty() {
                return bad(format!("seam {}: sides of length {} and {}", s.id, s.p.len(), s.q.len()));
            }
            let ok = |c: usize, vs: &[usize]| c < charts.len() && vs.iter().all(|&v| v < charts[c].num_vertices());
            if !ok(s.chart_p, &s.p) || !ok(s.chart_q, &s.q) {
                return bad(format!("seam {} references a missing vertex", s.id));
            }
        }
        for (i, d) in darts.iter().enumerate() {
            if d.p.len() != d.q.len() || d.chart >= charts.len() {
                return bad(format!("dart {i} is malformed"));
            }
            let n = charts[d.chart].num_vertices();
            if d.tip >= n || d.p.iter().chain(&d.q).any(|&v| v >= n) {
                return bad(format!("dart {i} references a missing vertex"));
            }
        }
        if weights.stretch < 0.0 || weights.rigid < 0.0 || weights.seam < 0.0 || weights.dart < 0.0 {
            return bad("negative weight".into());
        }
        let refs = charts.iter().map(RefGeometry::new).collect();
        let mut offsets = Vec::with_capacity(charts.len() + 1);
        let mut n = 0;
        for c in &charts {
            offsets.push(n);
            n += c.num_vertices();
        }
        offsets.push(n);
        Ok(Self {
            charts,
            seams,
            darts,
            weights,
            options,
            refs,
            offsets,
        })
    }

    pub fn single(chart: Chart, weights: Weights, options: SolverOptions) -> Result<Self, ParamError> {
        Self::new(vec![chart], Vec::new(), Vec::new(), weights, options)
    }

    pub fn charts(&self) -> &[Chart] {
        &self.charts
    }

    pub fn into_charts(self) -> Vec<Chart> {
        self.charts
    }

    pub fn set_uv(&mut self, chart: usize, uv: Vec<Vec2>) {
        assert_eq!(uv.len(), self.charts[chart].num_vertices());
        self.charts[chart].uv = uv;
    }

    pub fn num_variables(&self) -> usize {
        *self.offsets.last().unwrap()
    }

    /// Stretch-term length scale of chart `c`.
    pub fn kappa(&self, c: usize) -> f64 {
        self.refs[c].kappa
    }

    pub fn degenerate_reference(&self) -> usize {
        self.refs.iter().map(|r| r.valid.iter().filter(|v| !**v).count()).sum()
    }

    pub fn local_step(&self) -> LocalStep {
        local_step(&self.charts, &self.refs, &self.seams, &self.darts)
    }

    /// Stacked UV coordinate `axis` (0 = u, 1 = v) of all charts.
    pub fn coordinates(&self, axis: usize) -> Vec<f64> {
        self.charts.iter().flat_map(|c| c.uv.iter().map(move |p| p[axis])).collect()
    }

    /// Value of the quadratic frozen at `local`, evaluated at the current UV.
    pub fn energy_with(&self, local: &LocalStep) -> EnergyBreakdown {
        let w = &self.weights;
        let mut e = EnergyBreakdown::default();
        for (ci, chart) in self.charts.iter().enumerate() {
            let rg = &self.refs[ci];
            for (fi, f) in chart.mesh.faces().iter().enumerate() {
                if !rg.valid[fi] {
                    continue;
                }
                let uv = [chart.uv[f[0]], chart.uv[f[1]], chart.uv[f[2]]];
                let fr = &local.frames[ci][fi];
                if fr.valid {
                    let du: f64 = (0..3).map(|j| fr.du[j] * uv[j].x).sum();
                    let dv: f64 = (0..3).map(|j| fr.dv[j] * uv[j].y).sum();
                    e.stretch_u += w.stretch * rg.kappa * (fr.su - du).powi(2);
                    e.stretch_v += w.stretch * rg.kappa * (fr.sv - dv).powi(2);
                }
                let t = &local.rigid_targets[ci][fi];
                for k in 0..3 {
                    let edge = uv[(k + 1) % 3] - uv[k];
                    e.rigid += w.rigid * (edge - t[k]).norm_squared();
                }
            }
        }
        for (s, (pt, qt)) in self.seams.iter().zip(&local.seam_targets) {
            for i in 0..s.p.len() {
                e.seam += w.seam
                    * ((self.charts[s.chart_p].uv[s.p[i]] - pt[i]).norm_squared()
                        + (self.charts[s.chart_q].uv[s.q[i]] - qt[i]).norm_squared());
            }
        }
        for (d, (pt, qt)) in self.darts.iter().zip(&local.dart_targets) {
            let uv = &self.charts[d.chart].uv;
            for i in 0..d.p.len() {
                e.dart += w.dart * ((uv[d.p[i]] - pt[i]).norm_squared() + (uv[d.q[i]] - qt[i]).norm_squared());
            }
        }
        e
    }

    /// Energy at the current UV with the local step refitted there.
    pub fn energy(&self) -> EnergyBreakdown {
        self.energy_with(&self.local_step())
    }

    /// Normal equations `(u, v)` of the frozen quadratic without pins:
    /// `E = Σ_axis xᵀA x − 2 bᵀx + c`.
    pub fn normal_equations(&self, local: &LocalStep) -> [NormalEquations; 2] {
        let n = self.num_variables();
        let map: Vec<Option<usize>> = (0..n).map(Some).collect();
        [0, 1].map(|axis| self.assemble(local, axis, &map, &self.coordinates(axis), 0.0))
    }

    fn assemble(
        &self,
        local: &LocalStep,
        axis: usize,
        map: &[Option<usize>],
        x: &[f64],
        tikhonov: f64,
    ) -> NormalEquations {
        let n_free = map.iter().filter(|m| m.is_some()).count();
        let mut asm = Assembler {
            eq: NormalEquations::new(n_free, 1),
            map,
            x,
            buf: Vec::with_capacity(3),
        };
        let w = &self.weights;
        for (ci, chart) in self.charts.iter().enumerate() {
            let off = self.offsets[ci];
            let rg = &self.refs[ci];
            for (fi, f) in chart.mesh.faces().iter().enumerate() {
                if !rg.valid[fi] {
                    continue;
                }
                let g = [off + f[0], off + f[1], off + f[2]];
                let fr = &local.frames[ci][fi];
                if fr.valid && w.stretch > 0.0 {
                    let (d, s) = if axis == 0 { (&fr.du, fr.su) } else { (&fr.dv, fr.sv) };
                    asm.row(&[(g[0], d[0]), (g[1], d[1]), (g[2], d[2])], s, w.stretch * rg.kappa);
                }
                if w.rigid > 0.0 {
                    let t = &local.rigid_targets[ci][fi];
                    for k in 0..3 {
                        asm.row(&[(g[(k + 1) % 3], 1.0), (g[k], -1.0)], t[k][axis], w.rigid);
                    }
                }
            }
        }
        if w.seam > 0.0 {
            for (s, (pt, qt)) in self.seams.iter().zip(&local.seam_targets) {
                for i in 0..s.p.len() {
                    asm.row(&[(self.offsets[s.chart_p] + s.p[i], 1.0)], pt[i][axis], w.seam);
                    asm.row(&[(self.offsets[s.chart_q] + s.q[i], 1.0)], qt[i][axis], w.seam);
                }
            }
        }
        if w.dart > 0.0 {
            for (d, (pt, qt)) in self.darts.iter().zip(&local.dart_targets) {
                let off = self.offsets[d.chart];
                for i in 0..d.p.len() {
                    asm.row(&[(off + d.p[i], 1.0)], pt[i][axis], w.dart);
                    asm.row(&[(off + d.q[i], 1.0)], qt[i][axis], w.dart);
                }
            }
        }
        let mut eq = asm.eq;
        if tikhonov > 0.0 {
            for (g, m) in map.iter().enumerate() {
                if let Some(i) = m {
                    eq.add_diagonal(*i, tikhonov, &[x[g]]);
                }
            }
        }
        eq
    }

    /// Charts whose translation is fixed by absolute seam or dart targets.
    fn anchored(&self) -> Vec<bool> {
        let mut a = vec![false; self.charts.len()];
        if self.weights.seam > 0.0 {
            for s in &self.seams {
                a[s.chart_p] = true;
                a[s.chart_q] = true;
            }
        }
        if self.weights.dart > 0.0 {
            for d in self.darts.iter().filter(|d| !d.p.is_empty()) {
                a[d.chart] = true;
            }
        }
        a
    }

    fn solve_pinned(
        &self,
        local: &LocalStep,
        pinned: &[bool],
        tikhonov: f64,
        chol: &mut [CachedCholesky; 2],
    ) -> Result<[Vec<f64>; 2], String> {
        let n = self.num_variables();
        let mut map = vec![None; n];
        let mut next = 0;
        for (ci, &pin) in pinned.iter().enumerate() {
            for g in self.offsets[ci]..self.offsets[ci + 1] {
                if pin && g == self.offsets[ci] {
                    continue;
                }
                map[g] = Some(next);
                next += 1;
            }
        }
        let mut out = [Vec::new(), Vec::new()];
        for axis in 0..2 {
            let x = self.coordinates(axis);
            let eq = self.assemble(local, axis, &map, &x, tikhonov);
            let sol = chol[axis].solve(&eq)?.swap_remove(0);
            out[axis] = (0..n).map(|g| map[g].map_or(x[g], |i| sol[i])).collect();
        }
        Ok(out)
    }

    /// One global step: minimize the frozen quadratic over all UV. Returns
    /// whether the re-pin fallback was needed.
    pub fn global_step(&mut self, local: &LocalStep) -> Result<bool, ParamError> {
        let mut chol = [CachedCholesky::new(), CachedCholesky::new()];
        self.global_step_cached(local, &mut chol)
    }

    fn global_step_cached(&mut self, local: &LocalStep, chol: &mut [CachedCholesky; 2]) -> Result<bool, ParamError> {
        let pinned: Vec<bool> = self.anchored().iter().map(|a| !a).collect();
        let (sol, retried) = match self.solve_pinned(local, &pinned, 0.0, chol) {
            Ok(s) => (s, false),
            Err(_) => {
                let all = vec![true; self.charts.len()];
                let s = self
                    .solve_pinned(local, &all, TIKHONOV, chol)
                    .map_err(ParamError::Singular)?;
                (s, true)
            }
        };
        for (ci, chart) in self.charts.iter_mut().enumerate() {
            let off = self.offsets[ci];
            for (v, p) in chart.uv.iter_mut().enumerate() {
                *p = Vec2::new(sol[0][off + v], sol[1][off + v]);
            }
        }
        Ok(retried)
    }

    fn snapshot(&self) -> Vec<Vec<Vec2>> {
        self.charts.iter().map(|c| c.uv.clone()).collect()
    }

    fn restore(&mut self, uv: &[Vec<Vec2>]) {
        for (c, u) in self.charts.iter_mut().zip(uv) {
            c.uv.clone_from(u);
        }
    }

    fn blend(&mut self, a: &[Vec<Vec2>], b: &[Vec<Vec2>], t: f64) {
        for ((c, ua), ub) in self.charts.iter_mut().zip(a).zip(b) {
            for ((p, x), y) in c.uv.iter_mut().zip(ua).zip(ub) {
                *p = x + (y - x) * t;
            }
        }
    }

    /// Rotates every chart to the grain axis; true if any chart was a no-op.
    fn align_all(&mut self) -> bool {
        let Some(axis) = self.options.grain else {
            return false;
        };
        let mut noop = false;
        for c in &mut self.charts {
            noop |= align_grain(c, &axis).noop;
        }
        noop
    }

    fn energy_floor(&self) -> f64 {
        let scale: f64 = self
            .refs
            .iter()
            .zip(&self.charts)
            .map(|(r, c)| r.kappa * c.num_faces() as f64)
            .sum();
        1e-24 * scale
    }

    /// Runs the local-global iteration from the current UV.
    pub fn run(&mut self) -> Result<FlattenReport, ParamError> {
        let mut report = FlattenReport {
            degenerate_reference: self.degenerate_reference(),
            ..Default::default()
        };
        let mut chol = [CachedCholesky::new(), CachedCholesky::new()];
        let mut local = self.local_step();
        let mut e_old = self.energy_with(&local).total();
        report.energies.push(e_old);
        let floor = self.energy_floor();
        let monotone = self.options.grain.is_none();
        if e_old <= floor {
            report.converged = true;
        }
        while !report.converged && report.iterations < self.options.max_iterations {
            let old = self.snapshot();
            report.retried |= self.global_step_cached(&local, &mut chol)?;
            report.grain_noop |= self.align_all();
            let mut next = self.local_step();
            let mut e_new = self.energy_with(&next).total();
            if monotone && !(e_new <= e_old) {
                let new = self.snapshot();
                let mut t = 1.0;
                for _ in 0..MAX_BACKTRACKS {
                    t *= 0.5;
                    report.backtracks += 1;
                    self.blend(&old, &new, t);
                    next = self.local_step();
                    e_new = self.energy_with(&next).total();
                    if e_new <= e_old {
                        break;
                    }
                }
                if !(e_new <= e_old) {
                    self.restore(&old);
                    report.converged = true;
                    break;
                }
            }
            report.iterations += 1;
            report.energies.push(e_new);
            let rel = (e_old - e_new).abs() / e_old.max(f64::MIN_POSITIVE);
            local = next;
            e_old = e_new;
            if rel < self.options.rel_tolerance || e_new <= floor {
                report.converged = true;
            }
        }
        report.degenerate_uv = local.degenerate_uv;
        report.degenerate_seams = local.degenerate_seams;
        report.degenerate_darts = local.degenerate_darts;
        Ok(report)
    }
}

struct Assembler<'a> {
    eq: NormalEquations,
    map: &'a [Option<usize>],
    x: &'a [f64],
    buf: Vec<(usize, f64)>,
}

impl Assembler<'_> {
    /// Adds `w (a·x − b)²`, moving pinned variables to the right-hand side.
    fn row(&mut self, coeffs: &[(usize, f64)], mut b: f64, w: f64) {
        self.buf.clear();
        for &(g, a) in coeffs {
            match self.map[g] {
                Some(i) => self.buf.push((i, a)),
                None => b -= a * self.x[g],
            }
        }
        if !self.buf.is_empty() {
            self.eq.add_row(&self.buf, &[b], w);
        }
    }
}

/// `(E_stretch,u, E_stretch,v)` at the current UV after a local refit.
pub fn stretch_energy(problem: &Problem) -> (f64, f64) {
    let e = problem.energy();
    (e.stretch_u, e.stretch_v)
}

pub fn rigid_energy(problem: &Problem) -> f64 {
    problem.energy().rigid
}

pub fn seam_energy(problem: &Problem) -> f64 {
    problem.energy().seam
}

pub fn dart_energy(problem: &Problem) -> f64 {
    problem.energy().dart
}

pub fn textile_energy(problem: &Problem) -> EnergyBreakdown {
    problem.energy()
}

/// LSCM initialization followed by the local-global iteration on one chart.
pub fn flatten_patch(chart: Chart, weights: Weights, options: SolverOptions) -> Result<(Chart, FlattenReport), ParamError> {
    let mut chart = chart;
    lscm_init(&mut chart, options.grain.as_ref())?;
    let (mut charts, report) = joint_optimize(vec![chart], Vec::new(), Vec::new(), weights, options)?;
    Ok((charts.pop().unwrap(), report))
}

/// One local-global run over all charts, coupled through seams and darts,
/// starting from their current UV.
pub fn joint_optimize(
    charts: Vec<Chart>,
    seams: Vec<SeamPair>,
    darts: Vec<DartSpec>,
    weights: Weights,
    options: SolverOptions,
) -> Result<(Vec<Chart>, FlattenReport), ParamError> {
    let mut p = Problem::new(charts, seams, darts, weights, options)?;
    let report = p.run()?;
    Ok((p.into_charts(), report))
}
