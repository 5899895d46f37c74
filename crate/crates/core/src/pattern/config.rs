//! Pipeline configuration (JSON keys mirror the field names).

use serde::{Deserialize, Serialize};

use crate::error::PatternError;
use crate::layout::{LayoutGoals, LayoutOptions};
use crate::mesh::{SymmetryPlane, Vec3};
use crate::param::{SolverOptions, Weights};
use crate::trace::TraceOptions;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Config {
    /// C: max corners per piece.
    pub max_corners: usize,
    /// s_max: max thread stretch.
    pub max_stretch: f64,
    pub weights: Weights,
    /// Desired 3D warp axis a′; `null` disables grain alignment.
    pub grain: Option<Vec3>,
    pub symmetry: bool,
    /// Defaults to x = 0 when symmetry is on.
    pub symmetry_plane: Option<SymmetryPlane>,
    /// Symmetry tolerance as a fraction of the bounding-box diagonal.
    pub symmetry_tolerance: f64,
    /// Input units to millimetres.
    pub scale: f64,
    pub curvature_radius: f64,
    pub soft_weight: f64,
    /// Sketch tangents closer than this (mod π/2) on a shared face merge.
    pub stroke_merge_tolerance: f64,
    pub min_interior_sources: usize,
    pub interior_source_ratio: f64,
    pub boundary_stride: usize,
    pub dedup_overlap: f64,
    pub dart_subpaths: usize,
    pub max_dart_fraction: f64,
    pub min_dart_angle: f64,
    pub curvature_rings: usize,
    pub max_depth: usize,
    pub max_iterations: usize,
    pub rel_tolerance: f64,
    pub trace: TraceOptions,
    /// Sheet width (mm).
    pub sheet_width: f64,
    /// Gap between pieces and to the sheet edge (mm).
    pub margin: f64,
    pub seed: u64,
}

impl Default for Config {
    fn default() -> Self {
        let layout = LayoutOptions::default();
        let solver = SolverOptions::default();
        Self {
            max_corners: layout.goals.max_corners,
            max_stretch: layout.goals.max_stretch,
            weights: Weights::default(),
            grain: solver.grain,
            symmetry: false,
            symmetry_plane: None,
            symmetry_tolerance: 1e-3,
            scale: 1.0,
            curvature_radius: 0.05,
            soft_weight: 1.0,
            stroke_merge_tolerance: 0.35,
            min_interior_sources: layout.min_interior_sources,
            interior_source_ratio: layout.interior_source_ratio,
            boundary_stride: layout.boundary_stride,
            dedup_overlap: layout.dedup_overlap,
            dart_subpaths: layout.dart_subpaths,
            max_dart_fraction: layout.goals.max_dart_fraction,
            min_dart_angle: layout.goals.min_dart_angle,
            curvature_rings: layout.curvature_rings,
            max_depth: layout.max_depth,
            max_iterations: solver.max_iterations,
            rel_tolerance: solver.rel_tolerance,
            trace: TraceOptions::default(),
            sheet_width: 1500.0,
            margin: 10.0,
            seed: 0,
        }
    }
}

impl Config {
    pub fn from_json(text: &str) -> Result<Self, PatternError> {
        let c: Config = serde_json::from_str(text).map_err(|e| PatternError::Config(e.to_string()))?;
        c.validate()?;
        Ok(c)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    /// Applies the non-null keys of a JSON object over this config.
    pub fn merged(&self, overrides: &serde_json::Value) -> Result<Self, PatternError> {
        let mut base = serde_json::to_value(self)?;
        let (Some(b), Some(o)) = (base.as_object_mut(), overrides.as_object()) else {
            return Err(PatternError::Config("overrides must be a JSON object".into()));
        };
        for (k, v) in o {
            b.insert(k.clone(), v.clone());
        }
        let c: Config = serde_json::from_value(base).map_err(|e| PatternError::Config(e.to_string()))?;
        c.validate()?;
        Ok(c)
    }

    pub fn validate(&self) -> Result<(), PatternError> {
        let bad = |m: String| Err(PatternError::Config(m));
        self.goals().validate().map_err(|e| PatternError::Config(e.to_string()))?;
        let w = &self.weights;
        if [w.stretch, w.rigid, w.dart, w.seam].iter().any(|x| !(*x >= 0.0 && x.is_finite())) {
            return bad("weights must be non-negative".into());
        }
        if !(self.scale > 0.0 && self.scale.is_finite()) {
            return bad(format!("scale = {}", self.scale));
        }
        if !(self.curvature_radius > 0.0 && self.curvature_radius <= 0.5) {
            return bad(format!("curvature_radius = {} not in (0, 0.5]", self.curvature_radius));
        }
        if !(self.sheet_width > 2.0 * self.margin && self.margin >= 0.0) {
            return bad("sheet_width must exceed twice the margin".into());
        }
        if !(self.symmetry_tolerance > 0.0) {
            return bad("symmetry_tolerance must be positive".into());
        }
        if let Some(g) = self.grain {
            if !(g.norm() > 1e-12 && g.iter().all(|x| x.is_finite())) {
                return bad("grain axis must be a non-zero vector".into());
            }
        }
        if let Some(p) = &self.symmetry_plane {
            SymmetryPlane::new(p.point, p.normal).map_err(|e| PatternError::Config(e.to_string()))?;
        }
        if self.max_iterations == 0 || self.dart_subpaths == 0 || self.boundary_stride == 0 {
            return bad("iteration and sampling counts must be positive".into());
        }
        Ok(())
    }

    pub fn goals(&self) -> LayoutGoals {
        LayoutGoals {
            max_corners: self.max_corners,
            max_stretch: self.max_stretch,
            max_dart_fraction: self.max_dart_fraction,
            min_dart_angle: self.min_dart_angle,
        }
    }

    pub fn solver(&self) -> SolverOptions {
        SolverOptions {
            max_iterations: self.max_iterations,
            rel_tolerance: self.rel_tolerance,
            grain: self.grain,
        }
    }

    pub fn layout_options(&self) -> LayoutOptions {
        LayoutOptions {
            goals: self.goals(),
            weights: self.weights,
            solver: self.solver(),
            trace: self.trace,
            min_interior_sources: self.min_interior_sources,
            interior_source_ratio: self.interior_source_ratio,
            boundary_stride: self.boundary_stride,
            dedup_overlap: self.dedup_overlap,
            dart_subpaths: self.dart_subpaths,
            curvature_rings: self.curvature_rings,
            max_depth: self.max_depth,
            seed: self.seed,
        }
    }

    pub fn plane(&self) -> SymmetryPlane {
        self.symmetry_plane
            .and_then(|p| SymmetryPlane::new(p.point, p.normal).ok())
            .unwrap_or_else(SymmetryPlane::yz)
    }
}
