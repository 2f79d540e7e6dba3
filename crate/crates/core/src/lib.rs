//! Nash equilibria of quadratic multi-leader single-follower games.
//!
//! The follower's best response `max{Q_y⁻¹Bᵀx, Lᵀx}` is replaced by a smooth
//! approximation of width `ε`; each smoothed game is solved through its joint
//! KKT system and `ε` is driven to zero by continuation. The limit point is
//! then certified independently.

pub mod error;
pub mod homotopy;
pub mod kkt;
pub mod linalg;
pub mod model;
pub mod solvers;
pub mod smoothing;
pub mod verify;

pub use error::{GameError, SolveError, VerifyError};
pub use model::{GameSpec, PrimalDualPoint};
pub use smoothing::SmoothingFamily;
