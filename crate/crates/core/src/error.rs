use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum G2Error {
    #[error("not a G2-structure: {0}")]
    NotAG2Structure(String),
    #[error("3-form decomposition is singular (singular value ratio {ratio:e})")]
    SingularDecomposition { ratio: f64 },
    #[error("no finite-difference step in [{min:e}, {max:e}] gave a stable derivative")]
    StepUnderflow { min: f64, max: f64 },
    #[error("splitting requires a spatially constant carrier field")]
    NonFlatCarrier,
    #[error("conformal factor must be positive (min {min:e})")]
    NonPositiveConformalFactor { min: f64 },
    #[error("step rejected at t = {t}: {reason}")]
    StepRejected { t: f64, reason: String },
    #[error("positivity lost at step {step}")]
    PositivityLost { step: usize },
    #[error("dt = {dt:e} exceeds the stability bound {bound:e}")]
    StabilityBoundViolated { dt: f64, bound: f64 },
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("field container: {0}")]
    Container(String),
}
