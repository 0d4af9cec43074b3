//! Error type shared by every module in the crate.

use std::fmt;

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, SimError>;

/// Everything that can go wrong, from bad configuration to a solver that
/// refuses to converge. Solver failures carry the stage they occurred in
/// so a failed time step names the sub-solve responsible.
#[derive(Debug, Clone)]
pub enum SimError {
    /// Invalid configuration value; names the offending key.
    Config(String),
    /// A standing hypothesis of the decay theory is violated (q > 3,
    /// r in (3, min{q, 6}), positive rate inputs, ...).
    Hypothesis(String),
    /// Argument outside an operation's admissible range (e.g. p < 1).
    Domain(String),
    /// An input that makes the requested quantity 0/0 or meaningless.
    DegenerateInput(String),
    /// Viscosity left its declared [mu_min, mu_max] band.
    ViscosityBounds(String),
    /// Density positivity violated beyond tolerance.
    Positivity(String),
    /// Time step exceeds the advective stability limit.
    Stability(String),
    /// Two fields do not live on the same grid.
    GridMismatch(String),
    /// An iterative solver ran out of iterations; carries the stage label
    /// and the final residual.
    Solver {
        stage: String,
        residual: f64,
        iterations: usize,
    },
    /// Bad input to an analysis routine (too few rows, nonuniform spacing).
    Input(String),
    /// Filesystem failure while writing outputs.
    Io(String),
}

impl fmt::Display for SimError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SimError::Config(msg) => write!(f, "configuration error: {msg}"),
            SimError::Hypothesis(msg) => write!(f, "hypothesis violation: {msg}"),
            SimError::Domain(msg) => write!(f, "domain error: {msg}"),
            SimError::DegenerateInput(msg) => write!(f, "degenerate input: {msg}"),
            SimError::ViscosityBounds(msg) => write!(f, "viscosity bound error: {msg}"),
            SimError::Positivity(msg) => write!(f, "positivity error: {msg}"),
            SimError::Stability(msg) => write!(f, "stability error: {msg}"),
            SimError::GridMismatch(msg) => write!(f, "grid mismatch: {msg}"),
            SimError::Solver {
                stage,
                residual,
                iterations,
            } => write!(
                f,
                "solver failure in stage '{stage}': residual {residual:.3e} after {iterations} iterations"
            ),
            SimError::Input(msg) => write!(f, "input error: {msg}"),
            SimError::Io(msg) => write!(f, "i/o error: {msg}"),
        }
    }
}

impl std::error::Error for SimError {}

impl From<std::io::Error> for SimError {
    fn from(e: std::io::Error) -> Self {
        SimError::Io(e.to_string())
    }
}

impl SimError {
    /// Re-label a solver error with the pipeline stage it surfaced in.
    pub fn in_stage(self, stage: &str) -> Self {
        match self {
            SimError::Solver {
                residual,
                iterations,
                stage: inner,
            } => SimError::Solver {
                stage: format!("{stage}/{inner}"),
                residual,
                iterations,
            },
            other => other,
        }
    }
}
