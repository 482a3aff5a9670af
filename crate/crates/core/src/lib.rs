//! Rate-independent mechanical systems with small inertia: dynamic and
//! quasistatic solvers, dissipation and energy models, and the tools to
//! compare the two regimes as the inertia parameter `ε` goes to zero.
//!
//! Everything is generic over the scalar type ([`Real`], implemented for
//! `f32` and `f64`); the aliases below fix it to one of them.

// `!(x > 0)` also rejects NaN, which is the point of most comparisons here
#![allow(clippy::neg_cmp_op_on_partial_ord)]
// run failures carry the partial trajectory on purpose
#![allow(clippy::result_large_err)]

pub mod cone;
pub mod dissipation;
pub mod dynamic;
pub mod energy;
pub mod error;
pub mod gallery;
pub mod kernel;
pub mod limit;
pub mod linalg;
pub mod model;
pub mod quasistatic;
pub mod scalar;
pub mod timefn;
pub mod trajectory;

pub use cone::{ConeSpec, SignConstraint};
pub use dissipation::{r_variation, DissipationModel, FrictionStructure, SampledPath, VariationOptions, VariationResult};
pub use dynamic::{apriori_bounds_check, energy_balance_residual, simulate_dynamic, step_dynamic, AprioriReport, DynamicConfig};
pub use energy::{EnergyModel, EnergyVariant};
pub use error::{Error, Result};
pub use kernel::{minimize_composite, CompositeProblem, QuadraticPart, SolverOptions, Solution};
pub use limit::{epsilon_sweep, w11_gap, ConvergenceReport, ConvergenceRow, Diagnostics, InitialVelocity, SweepConfig};
pub use linalg::{FiberMap, Matrix};
pub use model::{check_r5, froude_number, validate_model, ModelSpec, R5Report, ValidationReport};
pub use quasistatic::{
    catching_up, check_uniqueness_conditions, simulate_quasistatic, step_energetic, verify_global_stability,
    verify_improved_stability, verify_web, CompetitorGrid, QuasistaticConfig, StabilityReport, UniquenessReport, Verdict,
};
pub use scalar::Real;
pub use timefn::PiecewiseLinear;
pub use trajectory::{RunFailure, Trajectory};

pub type ModelSpec64 = ModelSpec<f64>;
pub type ModelSpec32 = ModelSpec<f32>;
pub type Trajectory64 = Trajectory<f64>;
pub type Trajectory32 = Trajectory<f32>;
pub type DissipationModel64 = DissipationModel<f64>;
pub type DissipationModel32 = DissipationModel<f32>;
pub type EnergyModel64 = EnergyModel<f64>;
pub type EnergyModel32 = EnergyModel<f32>;
pub type ConeSpec64 = ConeSpec<f64>;
pub type ConvergenceReport64 = ConvergenceReport<f64>;
pub type ConvergenceReport32 = ConvergenceReport<f32>;
pub type Matrix64 = Matrix<f64>;
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
