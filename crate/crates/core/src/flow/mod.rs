//! Pathwise flow of dY = F(Y) dt + σ dB^H.
//!
//! The solver integrates Z = Y − x − σω, which satisfies the random ODE
//! Ż = F(Z + x + σω(t)), Z_0 = 0. Z is C¹ even though ω is only Hölder, so
//! the explicit trapezoid (Heun) rule keeps its classical order.

mod apriori;
mod cocycle;
mod drift;
mod solver;
mod tangent;

pub use apriori::{a_priori_bound_check, simulate_apriori_runs, AprioriReport};
pub use cocycle::cocycle_residual;
pub use drift::{Drift, DriftAudit, DriftConstants, DriftKind};
pub use solver::{integral_form_residual, solve_flow, SolverStats, Stepper, Trajectory, BLOWUP_LIMIT};
pub use tangent::{tangent_flow, TangentTrajectory};
