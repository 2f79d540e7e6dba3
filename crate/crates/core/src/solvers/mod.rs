//! Inner solvers for the smoothed game at a fixed `ε`.

mod newton;
mod subgradient;

pub use newton::newton_solve;
pub use subgradient::subgradient_solve;

use nalgebra::DVector;

use crate::error::SolveError;
use crate::kkt::KktSystem;
use crate::model::{GameSpec, PrimalDualPoint};
use crate::smoothing::SmoothingFamily;

/// Maximum number of backtracking trials in [`armijo_search`].
pub const ARMIJO_MAX_TRIALS: u32 = 60;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NewtonConfig {
    /// Backtracking factor in `(0, 1)`.
    pub beta: f64,
    /// Armijo constant in `(0, ½)`.
    pub sigma: f64,
    /// Stop once `Ψ_ε ≤ tol`.
    pub tol: f64,
    pub max_iter: usize,
    /// LU singularity threshold relative to the largest row norm of `H`.
    pub pivot_tol: f64,
    /// Newton steps attempted even when the start already meets `tol`. Such a
    /// step is kept only if it lowers the merit.
    pub min_iter: usize,
}

impl Default for NewtonConfig {
    fn default() -> Self {
        Self {
            beta: 0.5,
            sigma: 1e-4,
            tol: 1e-10,
            max_iter: 200,
            pivot_tol: 1e-12,
            min_iter: 0,
        }
    }
}

impl NewtonConfig {
    pub fn validate(&self) -> Result<(), SolveError> {
        if !(self.beta > 0.0 && self.beta < 1.0) {
            return Err(SolveError::Config(format!("beta = {} not in (0, 1)", self.beta)));
        }
        if !(self.sigma > 0.0 && self.sigma < 0.5) {
            return Err(SolveError::Config(format!("sigma = {} not in (0, 0.5)", self.sigma)));
        }
        if !(self.tol > 0.0) {
            return Err(SolveError::Config(format!("tol = {} must be positive", self.tol)));
        }
        if !(self.pivot_tol >= 0.0) {
            return Err(SolveError::Config("pivot_tol must be nonnegative".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SubgradConfig {
    /// Initial stationarity tolerance `δ₀`.
    pub delta0: f64,
    /// Shrink factor for `δ`.
    pub gamma: f64,
    /// Descent-direction test constant.
    pub c1: f64,
    /// Step-length test constant, `0 < c2 ≤ c1`.
    pub c2: f64,
    pub max_outer: usize,
    /// Caps both the number of steps per `δ` level and the aggregation rounds
    /// per direction.
    pub max_inner: usize,
    /// Stop once `Ψ_ε ≤ tol`.
    pub tol: f64,
}

impl Default for SubgradConfig {
    fn default() -> Self {
        Self {
            delta0: 1.0,
            gamma: 0.5,
            c1: 0.2,
            c2: 0.05,
            max_outer: 50,
            max_inner: 500,
            tol: 1e-10,
        }
    }
}

impl SubgradConfig {
    pub fn validate(&self) -> Result<(), SolveError> {
        if !(self.c2 > 0.0 && self.c2 <= self.c1 && self.c1 <= 1.0) {
            return Err(SolveError::Config(format!(
                "need 0 < c2 <= c1 <= 1, got c1 = {}, c2 = {}",
                self.c1, self.c2
            )));
        }
        if !(self.gamma > 0.0 && self.gamma < 1.0) {
            return Err(SolveError::Config(format!("gamma = {} not in (0, 1)", self.gamma)));
        }
        if !(self.delta0 > 0.0) || !(self.tol > 0.0) {
            return Err(SolveError::Config("delta0 and tol must be positive".into()));
        }
        Ok(())
    }
}

/// One accepted iterate. Iteration 0 is the starting point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IterRecord {
    pub iter: usize,
    pub merit: f64,
    /// `‖z^k − z^{k−1}‖₂`; 0 for the starting point.
    pub step_norm: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct InnerResult {
    pub z: PrimalDualPoint,
    pub merit: f64,
    /// Number of accepted steps.
    pub iterations: usize,
    /// Subgradient steps taken inside the Newton solver.
    pub fallback_steps: usize,
    pub converged: bool,
    /// Set when a line search found no acceptable step.
    pub stalled: bool,
    pub history: Vec<IterRecord>,
}

/// Result of a backtracking line search.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ArmijoStep {
    /// Accepted step length; 0 when no trial was accepted.
    pub t: f64,
    /// `Ψ_ε` at the accepted point (the starting merit when `t = 0`).
    pub merit: f64,
    pub no_descent: bool,
}

/// Largest `t = β^l`, `l ≤ 60`, with `Ψ(z + ts) ≤ Ψ(z) − tσ‖s‖²`.
pub fn armijo_search(
    game: &GameSpec,
    z: &PrimalDualPoint,
    s: &DVector<f64>,
    eps: f64,
    family: SmoothingFamily,
    cfg: &NewtonConfig,
) -> ArmijoStep {
    let sys = KktSystem::new(game, family);
    let psi0 = sys.merit(z, eps);
    armijo_with(&sys, z, psi0, s, eps, cfg.beta, cfg.sigma)
}

pub(crate) fn armijo_with(
    sys: &KktSystem,
    z: &PrimalDualPoint,
    psi0: f64,
    s: &DVector<f64>,
    eps: f64,
    beta: f64,
    sigma: f64,
) -> ArmijoStep {
    let ss = s.norm_squared();
    let mut t = 1.0;
    for _ in 0..=ARMIJO_MAX_TRIALS {
        let psi = sys.merit(&z.step(t, s), eps);
        // strict decrease guards against z + ts rounding back to z
        if psi <= psi0 - t * sigma * ss && psi < psi0 {
            return ArmijoStep {
                t,
                merit: psi,
                no_descent: false,
            };
        }
        t *= beta;
    }
    ArmijoStep {
        t: 0.0,
        merit: psi0,
        no_descent: true,
    }
}

fn check_start(game: &GameSpec, z0: &PrimalDualPoint, eps: f64) -> Result<(), SolveError> {
    if z0.x.len() != game.n() {
        return Err(SolveError::Dimension {
            expected: game.n(),
            found: z0.x.len(),
        });
    }
    if z0.lambda.len() != game.m_bar() {
        return Err(SolveError::Dimension {
            expected: game.m_bar(),
            found: z0.lambda.len(),
        });
    }
    if !(eps > 0.0) {
        return Err(SolveError::Config(format!("eps = {eps} must be positive")));
    }
    Ok(())
}
