//! Independent certification of candidate equilibria.
//!
//! [`verify_nash`] checks every leader against an exact best response of the
//! nonsmooth game, [`s_stationarity_certificate`] rebuilds the complementarity
//! multipliers of each leader's MPCC from the smoothing derivative, and the
//! probes sample structural properties of the game.

mod oracle;
mod stationarity;

pub use oracle::{
    best_response_qp_oracle, epigraph_qp, InequalityQp, OracleResponse, QpSolution,
    MAX_ENUMERATED_CONSTRAINTS,
};
pub use stationarity::{
    s_stationarity_certificate, xi_bar, GammaAssignment, StationarityCertificate,
    StationarityResiduals,
};

use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::VerifyError;
use crate::model::GameSpec;
use crate::smoothing::{leader_objective, potential_value, stacked_gradient, SmoothingFamily};

/// Half-width of the box `[−R, R]ⁿ` the probes sample from.
pub const PROBE_RADIUS: f64 = 5.0;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LeaderGap {
    pub leader: usize,
    /// `θ_ν` at the candidate.
    pub objective: f64,
    /// Optimal `θ_ν` with rivals fixed.
    pub best_objective: f64,
    pub gap: f64,
    pub best_response: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NashReport {
    pub leaders: Vec<LeaderGap>,
    pub max_gap: f64,
    /// Largest `max(g(x), 0)`.
    pub max_violation: f64,
    pub tol: f64,
    pub certified: bool,
}

impl NashReport {
    pub fn gaps(&self) -> Vec<f64> {
        self.leaders.iter().map(|l| l.gap).collect()
    }
}

/// Per-leader Nash gaps of `x` in the nonsmooth game. Certified iff `x` is
/// feasible within `tol` and every gap is at most `tol`.
pub fn verify_nash(game: &GameSpec, x: &DVector<f64>, tol: f64) -> Result<NashReport, VerifyError> {
    if x.len() != game.n() {
        return Err(VerifyError::Dimension {
            expected: game.n(),
            found: x.len(),
        });
    }
    let mut leaders = Vec::with_capacity(game.num_leaders());
    for nu in 0..game.num_leaders() {
        let best = best_response_qp_oracle(game, nu, x)?;
        let objective = leader_objective(game, nu, x);
        leaders.push(LeaderGap {
            leader: nu,
            objective,
            best_objective: best.objective,
            gap: objective - best.objective,
            best_response: best.x_nu.iter().copied().collect(),
        });
    }
    let max_gap = leaders.iter().map(|l| l.gap).fold(f64::NEG_INFINITY, f64::max);
    let max_violation = game.constraints(x).iter().fold(0.0_f64, |m, &g| m.max(g));
    Ok(NashReport {
        certified: max_gap <= tol && max_violation <= tol,
        leaders,
        max_gap,
        max_violation,
        tol,
    })
}

fn sample(rng: &mut ChaCha8Rng, n: usize) -> DVector<f64> {
    DVector::from_fn(n, |_, _| rng.gen_range(-PROBE_RADIUS..PROBE_RADIUS))
}

/// Smallest `(x − x̂)ᵀ(θ'^ε(x) − θ'^ε(x̂)) / ‖x − x̂‖²` over `trials` random
/// distinct pairs. Bounded below by `λ_min(Q)`.
pub fn monotonicity_probe(
    game: &GameSpec,
    eps: f64,
    family: SmoothingFamily,
    trials: usize,
    seed: u64,
) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst = f64::INFINITY;
    let mut done = 0;
    while done < trials {
        let x = sample(&mut rng, game.n());
        let xh = sample(&mut rng, game.n());
        let dx = &x - &xh;
        let nn = dx.norm_squared();
        if nn == 0.0 {
            continue;
        }
        let dg = stacked_gradient(game, &x, eps, family) - stacked_gradient(game, &xh, eps, family);
        worst = worst.min(dx.dot(&dg) / nn);
        done += 1;
    }
    worst
}

/// Largest `|[θ_ν(x̂_ν, x₋ν) − θ_ν(x)] − [Θ(x̂_ν, x₋ν) − Θ(x)]|` over random
/// triples `(x, ν, x̂_ν)`.
pub fn potential_identity_probe(game: &GameSpec, trials: usize, seed: u64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst = 0.0_f64;
    for _ in 0..trials {
        let x = sample(&mut rng, game.n());
        let nu = rng.gen_range(0..game.num_leaders());
        let r = game.var_range(nu);
        let mut moved = x.clone();
        let block = sample(&mut rng, r.len());
        moved.rows_mut(r.start, r.len()).copy_from(&block);
        let own = leader_objective(game, nu, &moved) - leader_objective(game, nu, &x);
        let pot = potential_value(game, &moved) - potential_value(game, &x);
        worst = worst.max((own - pot).abs());
    }
    worst
}
