//! Nonlinear multigrid-reduction-in-time (MGRIT) for chaotic initial value problems.
//!
//! The solver applies FAS multigrid to the block time-stepping system
//! `u_0 = f_0`, `u_{i+1} = Φ(u_i) + f_{i+1}` over a hierarchy of coarser time
//! grids. Two modifications target chaotic dynamics:
//!
//! * the **Δ correction**, which adds the mismatch between the tangent of the
//!   fine multistep map and the tangent of the coarse propagator as a linear
//!   term on the coarse grid, and
//! * **θ-method coarse propagators**, whose level-dependent θ keeps the coarse
//!   grids' Lyapunov exponents close to the fine grid's.
//!
//! Modules:
//!
//! * [`odes`]: right-hand sides and their Jacobians (Lorenz, logistic, linear).
//! * [`steppers`]: forward Euler, backward Euler and θ-method one-step maps
//!   with exact discrete tangents.
//! * [`mgrit`]: time hierarchy, F-relaxation, τ/Δ assembly and the V-cycle.
//! * [`lyapunov`]: Lyapunov spectra of discrete propagators.

pub mod error;
pub mod linalg;
pub mod lyapunov;
pub mod mgrit;
pub mod odes;
pub mod steppers;

pub use error::{Error, Result};
pub use lyapunov::{condition_estimate, lyapunov_spectrum, lyapunov_time, LyapunovConfig};
pub use mgrit::{
    sequential_solve, solve, Execution, Mgrit, MgritConfig, SolveReport, SolveStatus, TimeHierarchy,
};
pub use odes::{LinearScalar, Logistic, Lorenz, OdeSystem, State, Tangent};
pub use steppers::{FineScheme, Scheme, Stepper, ThetaParams};
