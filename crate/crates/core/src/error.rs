use thiserror::Error;

/// Error type shared by every module in the crate.
#[derive(Debug, Error)]
pub enum Error {
    #[error("gram matrix has inertia ({found_p},{found_q}), requested ({want_p},{want_q})")]
    SignatureMismatch {
        want_p: usize,
        want_q: usize,
        found_p: usize,
        found_q: usize,
    },

    #[error("degenerate form or subspace: {0}")]
    Degenerate(String),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("eigenvalue clusters too close to separate: {0}")]
    ClusterAmbiguity(String),

    #[error("subspace sampler exhausted its retry budget of {0} attempts")]
    SamplerExhausted(usize),

    #[error("curvature generators imply conflicting values {a} and {b} at ({i},{j},{k},{l})")]
    SymmetryConflict {
        i: usize,
        j: usize,
        k: usize,
        l: usize,
        a: f64,
        b: f64,
    },

    #[error("completed tensor violates the first Bianchi identity (max residual {0:.3e})")]
    BianchiViolation(f64),

    #[error(
        "model does not decompose: curvature entry A({i},{j},{k},{l}) = {value:.6e} couples \
         distinct Ricci eigenvalue blocks (model fails the commuting-Jacobi property)"
    )]
    NotDecomposable {
        i: usize,
        j: usize,
        k: usize,
        l: usize,
        value: f64,
    },

    #[error("syntax error at byte {offset}: {message}")]
    Syntax { offset: usize, message: String },

    #[error("unknown identifier `{name}` at byte {offset}")]
    UnknownIdentifier { name: String, offset: usize },

    #[error("variable x{index} out of range for a {n_vars}-variable context")]
    VariableOutOfRange { index: usize, n_vars: usize },

    #[error("domain error evaluating `{subtree}`: {message}")]
    Domain { subtree: String, message: String },

    #[error("bad parameter: {0}")]
    BadParameter(String),

    #[error("not enough samples for the blowup fit: {0}")]
    InsufficientSamples(String),

    #[error("scalar curvature is numerically zero along the trace; no blowup measurable")]
    ZeroCurvature,
}

pub type Result<T> = std::result::Result<T, Error>;
