//! Continuation in the smoothing parameter: `ε_i = ε₀γⁱ` down to `eps_min`,
//! each stage warm-started from the previous solution, optionally moved along
//! a first-order Taylor predictor of `ε ↦ x*(ε)`.

use std::time::Instant;

use nalgebra::DVector;

use crate::error::SolveError;
use crate::kkt::KktSystem;
use crate::linalg::lu_solve;
use crate::model::{GameSpec, PrimalDualPoint};
use crate::smoothing::SmoothingFamily;
use crate::solvers::{
    newton_solve, subgradient_solve, InnerResult, IterRecord, NewtonConfig, SubgradConfig,
};

/// Inner solver used at every stage.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum InnerMethod {
    Newton(NewtonConfig),
    Subgradient(SubgradConfig),
}

impl InnerMethod {
    pub fn name(&self) -> &'static str {
        match self {
            InnerMethod::Newton(_) => "newton",
            InnerMethod::Subgradient(_) => "subgradient",
        }
    }

    pub fn tol(&self) -> f64 {
        match self {
            InnerMethod::Newton(c) => c.tol,
            InnerMethod::Subgradient(c) => c.tol,
        }
    }

    pub fn solve(
        &self,
        game: &GameSpec,
        z0: &PrimalDualPoint,
        eps: f64,
        family: SmoothingFamily,
    ) -> Result<InnerResult, SolveError> {
        match self {
            InnerMethod::Newton(c) => newton_solve(game, z0, eps, family, c),
            InnerMethod::Subgradient(c) => subgradient_solve(game, z0, eps, family, c),
        }
    }
}

/// Right-hand side of the predictor system `E d = h`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum TaylorRhs {
    /// `h = −½ Dᵀ(a ∘ ∂²φ̃/∂t∂ε(Dx))`, from differentiating the stationarity
    /// condition in `ε`.
    #[default]
    MixedPartial,
    /// `h = ½ Dᵀ(a ∘ ∂φ̃/∂ε(Dx))`.
    EpsPartial,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HomotopyConfig {
    /// First smoothing parameter, in `(1, 2)`.
    pub eps0: f64,
    /// Reduction factor in `(0, 1)`.
    pub gamma: f64,
    /// The last stage is the first one with `ε_i ≤ eps_min`.
    pub eps_min: f64,
    pub taylor: bool,
    pub taylor_rhs: TaylorRhs,
    pub family: SmoothingFamily,
    pub inner: InnerMethod,
    /// Minimum Newton steps per stage; with the default of 1 every warm start
    /// gets at least one corrector step even if it already meets the tolerance.
    pub corrector_steps: usize,
}

impl Default for HomotopyConfig {
    fn default() -> Self {
        Self {
            eps0: 1.6,
            gamma: 0.5,
            eps_min: 1e-6,
            taylor: true,
            taylor_rhs: TaylorRhs::MixedPartial,
            family: SmoothingFamily::DEFAULT,
            inner: InnerMethod::Newton(NewtonConfig::default()),
            corrector_steps: 1,
        }
    }
}

impl HomotopyConfig {
    pub fn validate(&self) -> Result<(), SolveError> {
        if !(self.eps0 > 1.0 && self.eps0 < 2.0) {
            return Err(SolveError::Config(format!("eps0 = {} not in (1, 2)", self.eps0)));
        }
        if !(self.gamma > 0.0 && self.gamma < 1.0) {
            return Err(SolveError::Config(format!("gamma = {} not in (0, 1)", self.gamma)));
        }
        if !(self.eps_min > 0.0) {
            return Err(SolveError::Config(format!(
                "eps_min = {} must be positive",
                self.eps_min
            )));
        }
        match &self.inner {
            InnerMethod::Newton(c) => c.validate(),
            InnerMethod::Subgradient(c) => c.validate(),
        }
    }

    /// `ε_i = ε₀γⁱ`.
    pub fn eps_at(&self, i: usize) -> f64 {
        self.eps0 * self.gamma.powi(i as i32)
    }

    /// The full schedule `ε₀, …, ε_K` with `ε_K ≤ eps_min < ε_{K−1}`.
    pub fn schedule(&self) -> Vec<f64> {
        let mut out = Vec::new();
        let mut i = 0;
        loop {
            let eps = self.eps_at(i);
            out.push(eps);
            if eps <= self.eps_min {
                return out;
            }
            i += 1;
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StageRecord {
    pub index: usize,
    pub eps: f64,
    pub z_star: PrimalDualPoint,
    pub inner_iterations: usize,
    pub fallback_steps: usize,
    pub merit_final: f64,
    pub converged: bool,
    /// `‖d‖` of the predictor that produced this stage's start; 0 without one.
    pub predictor_norm: f64,
    /// `Ψ_{ε_i}` at the start of the stage.
    pub warm_start_merit: f64,
    /// `Ψ_{ε_i}` at the previous stage's solution, i.e. the start the stage
    /// would have had without the predictor.
    pub plain_start_merit: f64,
    pub history: Vec<IterRecord>,
    pub wall_ms: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct HomotopyTrace {
    pub stages: Vec<StageRecord>,
    /// Every stage converged and the schedule reached `eps_min`.
    pub completed: bool,
}

impl HomotopyTrace {
    /// Solution of the last stage that was run.
    pub fn final_point(&self) -> Option<&PrimalDualPoint> {
        self.stages.last().map(|s| &s.z_star)
    }

    pub fn final_eps(&self) -> Option<f64> {
        self.stages.last().map(|s| s.eps)
    }

    pub fn total_inner_iterations(&self) -> usize {
        self.stages.iter().map(|s| s.inner_iterations).sum()
    }
}

/// `d ≈ ∂x*/∂ε` from `E d = h` with `E = Q + ½Dᵀdiag(a ∘ φ̃''(Dx))D`.
pub fn taylor_direction(
    game: &GameSpec,
    x: &DVector<f64>,
    eps: f64,
    family: SmoothingFamily,
    rhs: TaylorRhs,
) -> DVector<f64> {
    taylor_direction_with(&KktSystem::new(game, family), x, eps, rhs)
}

fn taylor_direction_with(
    sys: &KktSystem,
    x: &DVector<f64>,
    eps: f64,
    rhs: TaylorRhs,
) -> DVector<f64> {
    let e = sys.curvature_block(x, eps);
    let t = &sys.maps.a_diff * x;
    let a = &sys.game.follower().a;
    let w = DVector::from_fn(a.len(), |i, _| match rhs {
        TaylorRhs::MixedPartial => -0.5 * a[i] * sys.family.dt_deps(t[i], eps),
        TaylorRhs::EpsPartial => 0.5 * a[i] * sys.family.deps(t[i], eps),
    });
    let h = sys.maps.a_diff.tr_mul(&w);
    // E is symmetric positive definite, so the solve cannot fail
    lu_solve(&e, &h, 0.0)
        .solution()
        .unwrap_or_else(|| DVector::zeros(x.len()))
}

/// Run the continuation from `z0`. Stops early, with `completed = false`, at
/// the first stage whose inner solve does not converge.
pub fn homotopy_solve(
    game: &GameSpec,
    z0: &PrimalDualPoint,
    cfg: &HomotopyConfig,
) -> Result<HomotopyTrace, SolveError> {
    cfg.validate()?;
    let sys = KktSystem::new(game, cfg.family);
    let schedule = cfg.schedule();
    let mut stages: Vec<StageRecord> = Vec::with_capacity(schedule.len());
    let mut start = z0.clone();
    let mut predictor_norm = 0.0;
    let inner = match cfg.inner {
        InnerMethod::Newton(c) => InnerMethod::Newton(NewtonConfig {
            min_iter: c.min_iter.max(cfg.corrector_steps),
            ..c
        }),
        other => other,
    };

    for (i, &eps) in schedule.iter().enumerate() {
        let clock = Instant::now();
        let warm_start_merit = sys.merit(&start, eps);
        let plain_start_merit = match stages.last() {
            Some(prev) => sys.merit(&prev.z_star, eps),
            None => warm_start_merit,
        };
        let res = inner.solve(game, &start, eps, cfg.family)?;
        let converged = res.converged;
        let z_star = res.z;

        let next_start = if cfg.taylor && i + 1 < schedule.len() {
            let eps_next = schedule[i + 1];
            let d = taylor_direction_with(&sys, &z_star.x, eps_next, cfg.taylor_rhs);
            let next = PrimalDualPoint::new(
                &z_star.x - &d * (eps - eps_next),
                z_star.lambda.clone(),
            );
            Some((next, d.norm()))
        } else {
            None
        };

        stages.push(StageRecord {
            index: i,
            eps,
            z_star: z_star.clone(),
            inner_iterations: res.iterations,
            fallback_steps: res.fallback_steps,
            merit_final: res.merit,
            converged,
            predictor_norm,
            warm_start_merit,
            plain_start_merit,
            history: res.history,
            wall_ms: clock.elapsed().as_secs_f64() * 1e3,
        });
        if !converged {
            return Ok(HomotopyTrace {
                stages,
                completed: false,
            });
        }
        match next_start {
            Some((next, norm)) => {
                start = next;
                predictor_norm = norm;
            }
            None => {
                start = z_star;
                predictor_norm = 0.0;
            }
        }
    }
    Ok(HomotopyTrace {
        stages,
        completed: true,
    })
}
