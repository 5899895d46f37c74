//! Sewing-pattern generation from 3D garment meshes.
//!
//! The pipeline segments a triangle mesh into panels along seams traced in a
//! curvature-aligned cross-field, then flattens each panel with an
//! anisotropic woven-fabric energy (warp/weft stretch, rigidity, seam and dart
//! symmetry, grain alignment) and packs the pieces on a sheet.

pub mod error;
pub mod field;
pub mod layout;
pub mod mesh;
pub mod param;
pub mod pattern;
pub mod sparse;
pub mod trace;

pub use error::{FieldError, LayoutError, MeshError, ParamError, PatternError};
