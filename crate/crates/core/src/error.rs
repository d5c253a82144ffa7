use num_complex::Complex64;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum QesError {
    #[error("denominator vanishes to within tolerance")]
    DegenerateDenominator,

    #[error("evaluation too close to a pole at z = {z}")]
    NearPole { z: Complex64 },

    #[error("unknown frame `{0}`")]
    UnknownFrame(String),

    #[error("frame validation failed: {equation} residual {residual:.3e} at x = {x}")]
    ValidationFailed {
        equation: FrameEquation,
        x: f64,
        residual: f64,
    },

    #[error("frame has no closed-form samplers")]
    MissingSamplers,

    #[error("coefficient array `{name}` has {len} entries, more than M + 1 = {limit}")]
    FrameOrder {
        name: &'static str,
        len: usize,
        limit: usize,
    },

    #[error("denominator root {root} is not a root of f")]
    NotFExpressible { root: Complex64 },

    #[error("state polynomial is identically zero")]
    DegenerateState,

    #[error("no start converged (best residual {best_residual:.3e})")]
    NoConvergence { best_residual: f64 },

    #[error("unknown catalog entry `{0}`")]
    UnknownEntry(String),

    #[error("function is complex-valued on the real interval: Im = {imag:.3e} at x = {x}")]
    ComplexValuedOnInterval { x: f64, imag: f64 },

    #[error("branches collide (discriminant ~ 0) at x = {x}")]
    BranchCollision { x: f64 },

    #[error("no real branch at x = {x}")]
    NoRealBranch { x: f64 },

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("parse error at byte {pos}: {msg}")]
    Parse { pos: usize, msg: String },
}

/// Which of the four frame expansion identities failed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum FrameEquation {
    #[serde(rename = "g")]
    WeightLogDerivative,
    #[serde(rename = "f")]
    F,
    #[serde(rename = "f'")]
    FDerivative,
    #[serde(rename = "h'")]
    HDerivative,
}

impl std::fmt::Display for FrameEquation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            FrameEquation::WeightLogDerivative => "g' = -g sum g1_l h^l",
            FrameEquation::F => "f = sum f0_l h^l",
            FrameEquation::FDerivative => "f' = sum f1_l h^l",
            FrameEquation::HDerivative => "h' = sum h1_l h^l",
        };
        f.write_str(s)
    }
}

pub type Result<T, E = QesError> = std::result::Result<T, E>;
