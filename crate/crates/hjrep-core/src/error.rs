use thiserror::Error;

/// Errors surfaced by the geometry and model layers.
#[derive(Debug, Error)]
pub enum CoreError {
    #[error("degenerate body: {0}")]
    DegenerateBody(String),

    #[error("quadrature non-convergence: successive refinements differ by {gap:.3e} > {tol:.3e}")]
    QuadratureDivergence { gap: f64, tol: f64 },

    #[error("unsupported dimension {dim} for {op}")]
    UnsupportedDimension { op: &'static str, dim: usize },

    #[error("model violates convexity in p near t={t}, x={x:?}: {detail}")]
    NonConvexModel { t: f64, x: Vec<f64>, detail: String },

    #[error("cap too low: eta_cap={cap} is below the conjugate minimum {min} plus margin")]
    CapTooLow { cap: f64, min: f64 },

    #[error("unknown builtin model `{0}`")]
    UnknownModel(String),

    #[error("missing or invalid model parameter `{0}`")]
    BadModelParam(String),

    #[error("CFL violation: dt={dt:.3e} exceeds {limit:.3e} = cfl * dx / max|H_p|")]
    CflViolation { dt: f64, limit: f64 },

    #[error("trajectory escaped the guard |x| <= {guard} at t={t}")]
    Blowup { t: f64, guard: f64 },

    #[error("trajectory/control mesh mismatch: {0}")]
    MeshMismatch(String),

    #[error("all {0} optimizer starts were infeasible")]
    AllStartsInfeasible(usize),

    #[error("point outside tube: {0}")]
    OutsideTube(String),

    #[error("invalid input: {0}")]
    Invalid(String),
}

pub type Result<T> = std::result::Result<T, CoreError>;
