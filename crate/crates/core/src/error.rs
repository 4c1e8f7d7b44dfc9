use ccst_linalg::LinalgError;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CoreError {
    #[error("invalid {field} = {value}: {reason}")]
    InvalidParameter {
        field: &'static str,
        value: f64,
        reason: &'static str,
    },
    #[error("reference point ({xi}, {eta}) lies outside [-1, 1]²")]
    OutsideReferenceElement { xi: f64, eta: f64 },
    #[error("element {element} has non-positive Jacobian determinant {det:e}")]
    DegenerateElement { element: usize, det: f64 },
    #[error("conflicting boundary data on {dof}: {first} vs {second}")]
    ConflictingConstraint {
        dof: String,
        first: f64,
        second: f64,
    },
    #[error("{side:?} side prescribes both a displacement and a traction on component {component}")]
    TractionOnConstrainedDof {
        side: crate::mesh::Side,
        component: &'static str,
    },
    #[error(
        "no rotation is constrained: the rotation stiffness has a constant null mode; \
         fix theta on at least one side"
    )]
    MissingRotationConstraint,
    #[error(
        "couple-stress modulus eta is zero, so the rotation stiffness vanishes and \
         condensation is undefined; use the classical twin instead"
    )]
    ZeroCoupleModulus,
    #[error("singular system: {null_modes} null mode(s)")]
    SingularSystem { null_modes: usize },
    #[error("linear algebra failure in {context}: {source}")]
    Linalg {
        context: &'static str,
        #[source]
        source: LinalgError,
    },
    #[error("io error: {0}")]
    Io(String),
}

impl From<std::io::Error> for CoreError {
    fn from(e: std::io::Error) -> Self {
        CoreError::Io(e.to_string())
    }
}

pub(crate) trait LinalgContext<T> {
    fn context(self, context: &'static str) -> Result<T, CoreError>;
}

impl<T> LinalgContext<T> for Result<T, LinalgError> {
    fn context(self, context: &'static str) -> Result<T, CoreError> {
        self.map_err(|source| match source {
            LinalgError::Singular { null_modes, .. } => CoreError::SingularSystem { null_modes },
            source => CoreError::Linalg { context, source },
        })
    }
}

pub type Result<T, E = CoreError> = std::result::Result<T, E>;
