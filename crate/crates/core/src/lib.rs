//! Construction, solving and verification of quasi-exactly solvable
//! Schrödinger potentials built from a frame and polynomial ansätze.

pub mod catalog;
pub mod constraints;
pub mod error;
pub mod frame;
pub mod jet;
pub mod poly;
pub mod potential;
pub mod quad;
pub mod rational;
pub mod roots;
pub mod solver;
pub mod susy;
pub mod uexpr;
pub mod verify;

pub use error::{FrameEquation, QesError, Result};
pub use frame::{standard_frame, validate_frame, Ansatz, Frame, FrameDescriptor, Samplers};
pub use poly::Poly;
pub use potential::{build_potential, partial_fractions, FPiece, PotentialExpr};
pub use rational::RationalFn;
pub use constraints::{
    degenerate_system, excited_system, ConstraintSystem, DegenerateOptions, Sym, SystemKind,
    Template,
};
pub use solver::{polish, solve, JointSystem, Solution, SolveOptions};
pub use susy::{
    chain_from_states, classify_u, master_residual, partner_state, riccati_residual, superpotential_from_state,
    susy_from_u, tune_constant, u_function, Branch, Superpotential, SusyFromU, SusyOptions, UClassification, UFunction,
};
pub use catalog::CatalogEntry;
pub use uexpr::UExpr;
