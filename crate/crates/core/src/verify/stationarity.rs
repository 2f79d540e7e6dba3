//! S-stationarity certificate for the leaders' MPCC formulation.
//!
//! Each leader solves
//!
//! ```text
//! min ½x_νᵀQ_νx_ν + c_νᵀx_ν + aᵀy
//! s.t. g_ν(x_ν) ≤ 0,  0 ≤ G₁ ⊥ G₂ ≥ 0,  G₁ = y − Q_y⁻¹Bᵀx,  G₂ = y − Lᵀx
//! ```
//!
//! and the multipliers `Γ₁, Γ₂` on `G₁, G₂` are rebuilt from the limit of
//! `φ̃'_ε(Dx)` along the continuation.

use nalgebra::DVector;
use serde::Serialize;

use crate::model::{GameSpec, PrimalDualPoint};
use crate::smoothing::{best_response_exact_with, AffineMaps, SmoothingFamily};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum GammaAssignment {
    /// `Γ₁ = a/2 (1 − ξ̄)`, `Γ₂ = a/2 (1 + ξ̄)`: pairs the vanishing multiplier
    /// with the strictly positive constraint.
    #[default]
    BranchConsistent,
    /// `Γ₁ = a/2 (1 + ξ̄)`, `Γ₂ = a/2 (1 − ξ̄)`.
    Swapped,
}

/// Max violation of each condition group.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct StationarityResiduals {
    /// (a) gradient of the Lagrangian in `x`.
    pub lagrangian_x: f64,
    /// (a) gradient of the Lagrangian in `y`: `a − Γ₁ − Γ₂`.
    pub lagrangian_y: f64,
    /// (b) `max(g, 0)`.
    pub primal: f64,
    /// (c) `max(−λ, 0)`.
    pub dual: f64,
    /// (d) `|gᵢλᵢ|`.
    pub complementarity: f64,
    /// (e) `|min(G₁, G₂)|`.
    pub follower: f64,
    /// (f) `|G₁Γ₁|`.
    pub gamma1_complementarity: f64,
    /// (g) `|G₂Γ₂|`.
    pub gamma2_complementarity: f64,
    /// (h) `max(−Γ, 0)` over biactive components.
    pub biactive_sign: f64,
}

impl StationarityResiduals {
    pub fn as_array(&self) -> [(&'static str, f64); 9] {
        [
            ("a_x", self.lagrangian_x),
            ("a_y", self.lagrangian_y),
            ("b", self.primal),
            ("c", self.dual),
            ("d", self.complementarity),
            ("e", self.follower),
            ("f", self.gamma1_complementarity),
            ("g", self.gamma2_complementarity),
            ("h", self.biactive_sign),
        ]
    }

    pub fn max(&self) -> f64 {
        self.as_array().iter().fold(0.0, |m, (_, v)| m.max(*v))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StationarityCertificate {
    pub xi_bar: Vec<f64>,
    pub gamma1: Vec<f64>,
    pub gamma2: Vec<f64>,
    /// Components with `G₁ = G₂ = 0` within the biactive tolerance.
    pub biactive: Vec<usize>,
    pub assignment: GammaAssignment,
    pub residuals: StationarityResiduals,
    pub max_residual: f64,
    pub tol: f64,
    pub certified: bool,
}

/// `ξ̄ = φ̃'_{ε_min}(Dx)`, snapped to `±1` once `|ξ| ≥ 1 − 10ε_min`.
pub fn xi_bar(
    game: &GameSpec,
    x: &DVector<f64>,
    eps_min: f64,
    family: SmoothingFamily,
) -> DVector<f64> {
    let maps = AffineMaps::new(game);
    let snap = 1.0 - 10.0 * eps_min;
    (&maps.a_diff * x).map(|t| {
        let xi = family.d1(t, eps_min);
        if xi.abs() >= snap {
            xi.signum()
        } else {
            xi
        }
    })
}

/// Build `(ξ̄, Γ₁, Γ₂)` at `z` and evaluate the S-stationarity system of every
/// leader. Components with `|G₁|, |G₂| ≤ tol` count as biactive.
pub fn s_stationarity_certificate(
    game: &GameSpec,
    z: &PrimalDualPoint,
    eps_min: f64,
    family: SmoothingFamily,
    assignment: GammaAssignment,
    tol: f64,
) -> StationarityCertificate {
    let maps = AffineMaps::new(game);
    let a = &game.follower().a;
    let x = &z.x;
    let xi = xi_bar(game, x, eps_min, family);
    let (plus, minus) = (
        DVector::from_fn(a.len(), |i, _| 0.5 * a[i] * (1.0 + xi[i])),
        DVector::from_fn(a.len(), |i, _| 0.5 * a[i] * (1.0 - xi[i])),
    );
    let (gamma1, gamma2) = match assignment {
        GammaAssignment::BranchConsistent => (minus, plus),
        GammaAssignment::Swapped => (plus, minus),
    };

    // Stacking the x-blocks of all leaders gives one joint system.
    let lag_x = game.q_joint() * x
        + game.c_joint()
        + game.a_joint() * &z.lambda
        + maps.qyinv_bt.tr_mul(&gamma1)
        + maps.lt.tr_mul(&gamma2);
    let lag_y = a - &gamma1 - &gamma2;

    let g = game.constraints(x);
    let y = best_response_exact_with(&maps, x);
    let g1 = &y - &maps.qyinv_bt * x;
    let g2 = &y - &maps.lt * x;

    let biactive: Vec<usize> = (0..a.len())
        .filter(|&i| g1[i].abs() <= tol && g2[i].abs() <= tol)
        .collect();
    let biactive_sign = biactive
        .iter()
        .map(|&i| (-gamma1[i]).max(-gamma2[i]).max(0.0))
        .fold(0.0, f64::max);

    let amax = |v: &DVector<f64>| v.iter().fold(0.0_f64, |m, e| m.max(e.abs()));
    let residuals = StationarityResiduals {
        lagrangian_x: amax(&lag_x),
        lagrangian_y: amax(&lag_y),
        primal: g.iter().fold(0.0_f64, |m, &e| m.max(e)),
        dual: z.lambda.iter().fold(0.0_f64, |m, &e| if -e > m { -e } else { m }),
        complementarity: amax(&g.component_mul(&z.lambda)),
        follower: amax(&g1.zip_map(&g2, f64::min)),
        gamma1_complementarity: amax(&g1.component_mul(&gamma1)),
        gamma2_complementarity: amax(&g2.component_mul(&gamma2)),
        biactive_sign,
    };
    let max_residual = residuals.max();
    StationarityCertificate {
        xi_bar: xi.iter().copied().collect(),
        gamma1: gamma1.iter().copied().collect(),
        gamma2: gamma2.iter().copied().collect(),
        biactive,
        assignment,
        residuals,
        max_residual,
        tol,
        certified: max_residual <= tol,
    }
}
