//! Distortion measurement and chart export.

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use super::solve::Problem;
use super::{Chart, SolverOptions, Weights};

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct EnergyBreakdown {
    pub stretch_u: f64,
    pub stretch_v: f64,
    pub rigid: f64,
    pub seam: f64,
    pub dart: f64,
}

impl EnergyBreakdown {
    pub fn total(&self) -> f64 {
        self.stretch_u + self.stretch_v + self.rigid + self.seam + self.dart
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Measurement {
    pub energies: EnergyBreakdown,
    /// Per triangle `max(|1/s_u − 1|, |1/s_v − 1|)`: relative length error of
    /// a unit warp or weft step of fabric laid on the surface.
    pub thread_stretch: Vec<f64>,
    /// Per triangle rigid energy divided by 3D area.
    pub rigid_density: Vec<f64>,
    pub max_thread_stretch: f64,
    /// Face with the largest thread stretch.
    pub max_face: usize,
    /// Degenerate faces (excluded, reported as 0).
    pub degenerate: Vec<usize>,
}

pub fn measure(chart: &Chart, weights: &Weights) -> Measurement {
    let options = SolverOptions {
        grain: None,
        ..Default::default()
    };
    let p = Problem::single(chart.clone(), *weights, options).expect("chart is self-consistent");
    let local = p.local_step();
    let energies = p.energy_with(&local);
    let nf = chart.num_faces();
    let mut thread_stretch = vec![0.0; nf];
    let mut rigid_density = vec![0.0; nf];
    let mut degenerate = Vec::new();
    for (f, tri) in chart.mesh.faces().iter().enumerate() {
        let fr = &local.frames[0][f];
        if !fr.valid {
            degenerate.push(f);
            continue;
        }
        thread_stretch[f] = (1.0 / fr.su - 1.0).abs().max((1.0 / fr.sv - 1.0).abs());
        let t = &local.rigid_targets[0][f];
        let uv = [chart.uv[tri[0]], chart.uv[tri[1]], chart.uv[tri[2]]];
        let e: f64 = (0..3).map(|k| (uv[(k + 1) % 3] - uv[k] - t[k]).norm_squared()).sum();
        rigid_density[f] = weights.rigid * e / chart.mesh.area(f);
    }
    let (max_face, max_thread_stretch) = thread_stretch
        .iter()
        .copied()
        .enumerate()
        .fold((0, 0.0), |b, c| if c.1 > b.1 { c } else { b });
    Measurement {
        energies,
        thread_stretch,
        rigid_density,
        max_thread_stretch,
        max_face,
        degenerate,
    }
}

/// Per-vertex UV and per-triangle metrics.
pub fn chart_to_json(chart: &Chart, m: &Measurement) -> Value {
    json!({
        "uv": chart.uv.iter().map(|p| [p.x, p.y]).collect::<Vec<_>>(),
        "faces": chart.mesh.faces(),
        "source_vertex": chart.source_vertex,
        "source_face": chart.source_face,
        "thread_stretch": m.thread_stretch,
        "rigid_density": m.rigid_density,
        "max_thread_stretch": m.max_thread_stretch,
        "energies": m.energies,
    })
}
