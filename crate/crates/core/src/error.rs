use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("mass mismatch: ω_n·w0(S) = {got}, expected m = {expected}")]
    MassMismatch { got: f64, expected: f64 },

    #[error("infeasible: {0}")]
    Infeasible(String),

    #[error("parameter error: {0}")]
    Parameter(String),

    #[error("CFL violation: dt = {dt:e} exceeds {limit:e} at node {node}")]
    Cfl { dt: f64, limit: f64, node: usize },

    #[error("stability bound violated: dt = {dt:e} exceeds {limit:e}")]
    Stability { dt: f64, limit: f64 },

    #[error("tridiagonal system not diagonally dominant at row {row}")]
    NotDiagonallyDominant { row: usize },

    #[error("time step underflow at t = {t:e} (dt = {dt:e})")]
    NonConvergence { t: f64, dt: f64 },

    #[error("degenerate fit: only {usable} usable nodes")]
    DegenerateFit { usable: usize },

    #[error("root finding failed: {0}")]
    RootFind(String),

    #[error("ODE step failure at t = {t:e}")]
    OdeStep { t: f64 },

    #[error("probe ({s:e}, {t:e}) lies on an exceptional point")]
    ExceptionalPoint { s: f64, t: f64 },

    #[error("hypothesis violated: {0}")]
    Hypothesis(String),

    #[error("trajectory does not cover [{t0}, {t1}]")]
    Window { t0: f64, t1: f64 },

    #[error("probe r = {r:e} outside (0, R]")]
    Probe { r: f64 },

    #[error("config error{}: {msg}", fmt_ctx(*.line, .key))]
    Config {
        line: Option<usize>,
        key: Option<String>,
        msg: String,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

fn fmt_ctx(line: Option<usize>, key: &Option<String>) -> String {
    match (line, key) {
        (Some(l), Some(k)) => format!(" (line {l}, key `{k}`)"),
        (Some(l), None) => format!(" (line {l})"),
        (None, Some(k)) => format!(" (key `{k}`)"),
        (None, None) => String::new(),
    }
}

impl Error {
    pub fn config(key: impl Into<String>, msg: impl Into<String>) -> Self {
        Error::Config {
            line: None,
            key: Some(key.into()),
            msg: msg.into(),
        }
    }

    /// Process exit status: 2 for configuration problems, 1 otherwise.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config { .. } => 2,
            _ => 1,
        }
    }
}
