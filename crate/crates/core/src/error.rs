use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MeshError {
    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("i/o error: {0}")]
    Io(String),
    #[error("non-triangle face at index {index}")]
    NonTriangle { index: usize },
    #[error("mesh has no faces")]
    Empty,
    #[error("face {face} references a missing vertex")]
    IndexOutOfRange { face: usize },
    #[error("degenerate or badly shaped triangles: {faces:?}")]
    Degenerate { faces: Vec<usize> },
    #[error("non-manifold edge ({a}, {b})")]
    NonManifoldEdge { a: usize, b: usize },
    #[error("non-manifold vertex {vertex}")]
    NonManifoldVertex { vertex: usize },
    #[error("inconsistent face orientation across edge ({a}, {b})")]
    InconsistentOrientation { a: usize, b: usize },
    #[error("vertex {vertex} is not referenced by any face")]
    UnreferencedVertex { vertex: usize },
    #[error("mesh has {components} connected components")]
    Disconnected { components: usize },
    #[error("pose has {found} vertices, rest mesh has {expected}")]
    PoseMismatch { expected: usize, found: usize },
    #[error("pose {index} has different connectivity than the rest mesh")]
    PoseConnectivity { index: usize },
    #[error("mesh is not symmetric about the plane: deviation {deviation:.3e} > tol {tol:.3e}")]
    Asymmetric { deviation: f64, tol: f64 },
    #[error("face {face} straddles the symmetry plane")]
    StraddlingFace { face: usize },
    #[error("invalid symmetry plane normal")]
    BadPlane,
}

impl From<std::io::Error> for MeshError {
    fn from(e: std::io::Error) -> Self {
        MeshError::Io(e.to_string())
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FieldError {
    #[error("conflicting hard constraints on face {face}")]
    ConflictingConstraints { face: usize },
    #[error("constraint references face {face} outside the mesh")]
    BadFace { face: usize },
    #[error("pose count mismatch: {0}")]
    PoseMismatch(String),
    #[error("cross-field solve failed: {0}")]
    Solver(String),
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ParamError {
    #[error("patch is not a topological disk (chi = {chi}, boundary loops = {loops})")]
    NotDisk { chi: i64, loops: usize },
    #[error("patch has fewer than two boundary vertices")]
    TooFewBoundary,
    #[error("linear solve failed: {0}")]
    Singular(String),
    #[error("invalid flattening problem: {0}")]
    Invalid(String),
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LayoutError {
    #[error("goals unsatisfiable, failing patches: {patches:?}")]
    Unsatisfiable { patches: Vec<String> },
    #[error("invalid goals: {0}")]
    InvalidGoals(String),
    #[error("sketch stroke {stroke} is invalid: {msg}")]
    BadStroke { stroke: usize, msg: String },
    #[error("layout document: {0}")]
    Document(String),
    #[error(transparent)]
    Field(#[from] FieldError),
    #[error(transparent)]
    Param(#[from] ParamError),
    #[error(transparent)]
    Mesh(#[from] MeshError),
}

#[derive(Debug, Error)]
pub enum PatternError {
    #[error("chart {chart} is wider ({width:.1} mm) than the sheet")]
    ChartTooWide { chart: usize, width: f64 },
    #[error("invalid config: {0}")]
    Config(String),
    #[error("{stage}: {source}")]
    Stage {
        stage: &'static str,
        #[source]
        source: Box<dyn std::error::Error + Send + Sync>,
    },
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

impl PatternError {
    pub fn stage<E: std::error::Error + Send + Sync + 'static>(stage: &'static str, e: E) -> Self {
        PatternError::Stage {
            stage,
            source: Box::new(e),
        }
    }

    /// True when the failure is due to unsatisfiable layout goals.
    pub fn is_unsatisfiable(&self) -> bool {
        matches!(self, PatternError::Stage { source, .. }
            if matches!(source.downcast_ref::<LayoutError>(), Some(LayoutError::Unsatisfiable { .. })))
    }
}
