//! Versioned JSON form of a layout, so sessions can be saved and resumed.

use serde::{Deserialize, Serialize};

use super::check::{FailReason, PatchCheck};
use super::darts::DartRecord;
use super::{Layout, LayoutPath, Segment};
use crate::error::LayoutError;
use crate::mesh::{SurfacePoint, SymmetryPlane, TriMesh, Vec3};

pub const LAYOUT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DocumentPath {
    #[serde(flatten)]
    pub path: LayoutPath,
    pub points: Vec<SurfacePoint>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DocumentCut {
    pub a: usize,
    pub b: usize,
    pub owner: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DocumentPatch {
    pub faces: Vec<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub corners: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_stretch: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub failure: Option<FailReason>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LayoutDocument {
    pub version: u32,
    pub num_vertices: usize,
    pub num_faces: usize,
    /// In insertion order.
    pub paths: Vec<DocumentPath>,
    pub cuts: Vec<DocumentCut>,
    pub segments: Vec<Segment>,
    pub patches: Vec<DocumentPatch>,
    #[serde(default)]
    pub darts: Vec<DartRecord>,
    #[serde(default)]
    pub symmetry: Option<SymmetryPlane>,
}

impl LayoutDocument {
    pub fn from_layout(layout: &Layout, darts: &[DartRecord]) -> Self {
        let mesh = &layout.mesh;
        let paths = layout
            .paths
            .iter()
            .map(|p| DocumentPath {
                path: p.clone(),
                points: p.vertices.iter().map(|&v| SurfacePoint::at_vertex(mesh, v)).collect(),
            })
            .collect();
        let cuts = layout
            .cut_edges()
            .into_iter()
            .map(|e| {
                let [a, b] = mesh.edges()[e];
                DocumentCut { a, b, owner: layout.owner(e).unwrap() }
            })
            .collect();
        let patches = layout
            .patches()
            .into_iter()
            .map(|faces| DocumentPatch {
                faces,
                corners: None,
                max_stretch: None,
                failure: None,
            })
            .collect();
        Self {
            version: LAYOUT_VERSION,
            num_vertices: mesh.num_vertices(),
            num_faces: mesh.num_faces(),
            paths,
            cuts,
            segments: layout.segments(),
            patches,
            darts: darts.to_vec(),
            symmetry: layout.symmetry,
        }
    }

    /// Attaches per-patch results (matched by face list).
    pub fn with_checks(mut self, checks: &[impl AsRef<PatchCheck>]) -> Self {
        for p in &mut self.patches {
            let mut faces = p.faces.clone();
            faces.sort_unstable();
            let found = checks.iter().map(|c| c.as_ref()).find(|c| {
                let mut f = c.faces.clone();
                f.sort_unstable();
                f == faces
            });
            if let Some(c) = found {
                p.corners = Some(c.corners);
                p.max_stretch = Some(c.max_stretch);
                p.failure = c.failure.clone();
            }
        }
        self
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("layout document serializes")
    }

    pub fn from_json(text: &str) -> Result<Self, LayoutError> {
        serde_json::from_str(text).map_err(|e| LayoutError::Document(e.to_string()))
    }

    /// Rebuilds the layout on `mesh`, which must be the mesh it was made on.
    pub fn to_layout(&self, mesh: &TriMesh, poses: Vec<Vec<Vec3>>) -> Result<Layout, LayoutError> {
        let bad = |m: String| Err(LayoutError::Document(m));
        if self.version != LAYOUT_VERSION {
            return bad(format!("unsupported version {}", self.version));
        }
        if self.num_vertices != mesh.num_vertices() || self.num_faces != mesh.num_faces() {
            return bad(format!(
                "document is for a mesh with {} vertices / {} faces, got {} / {}",
                self.num_vertices,
                self.num_faces,
                mesh.num_vertices(),
                mesh.num_faces()
            ));
        }
        let nv = mesh.num_vertices();
        let mut layout = Layout::new(mesh.clone(), poses);
        for p in &self.paths {
            if p.path.vertices.iter().any(|&v| v >= nv) {
                return bad("path vertex out of range".into());
            }
            layout.paths.push(p.path.clone());
        }
        for c in &self.cuts {
            let Some(e) = mesh.edge_between(c.a, c.b) else {
                return bad(format!("cut ({}, {}) is not a mesh edge", c.a, c.b));
            };
            if c.owner >= layout.paths.len() {
                return bad(format!("cut owner {} out of range", c.owner));
            }
            layout.set_cut(e, Some(c.owner));
        }
        layout.symmetry = self.symmetry;
        Ok(layout)
    }
}
