use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("bracket [{lo}, {hi}] has no sign change (f = {f_lo}, {f_hi})")]
    NoSignChange { lo: f64, hi: f64, f_lo: f64, f_hi: f64 },

    #[error("no convergence after {iterations} iterations (last estimate {last})")]
    MaxIterations { iterations: usize, last: f64 },

    #[error("iteration left its guard interval near {last}")]
    Diverged { last: f64 },

    #[error("denominator vanishes at beta = {0}")]
    PoleAt(f64),

    #[error("q = {q} sits on the tangency threshold {threshold} for lobe {n}")]
    DegenerateTangency { n: u32, q: f64, threshold: f64 },

    #[error("unsupported parameters: {0}")]
    UnsupportedParameters(String),

    #[error("contour passes within {min_abs:e} of a root; perturb the parameters")]
    ContourTooClose { min_abs: f64 },

    #[error("winding number {winding} is not an integer")]
    WindingNotInteger { winding: f64 },

    #[error("time transform invalid at eta = {eta}: {condition}")]
    TransformViolated { eta: f64, condition: &'static str },

    #[error("chip thickness {thickness} is not positive at eta = {eta}")]
    NegativeChipThickness { eta: f64, thickness: f64 },

    #[error("state norm exceeded {limit:e} at eta = {eta}")]
    SimulationDiverged { eta: f64, limit: f64 },

    #[error("parameter file line {line}: {message}")]
    Parse { line: usize, message: String },
}
