//! The joint KKT system of the smoothed game
//!
//! ```text
//! F₁(x, λ) = θ'^ε(x) + diag(A₁,…,A_N) λ
//! F₂(x, λ) = min{λ, −g(x)}
//! ```
//!
//! its merit `Ψ_ε = ½‖F‖²` and one element of the Clarke generalized Jacobian.

use nalgebra::{DMatrix, DVector};

use crate::model::{GameSpec, PrimalDualPoint};
use crate::smoothing::{stacked_gradient_with, AffineMaps, SmoothingFamily};

/// Residual blocks of the joint KKT system.
#[derive(Debug, Clone, PartialEq)]
pub struct KktResidual {
    /// Stationarity block, length `n`.
    pub f1: DVector<f64>,
    /// Complementarity block `min{λ, −g}`, length `m̄`.
    pub f2: DVector<f64>,
}

impl KktResidual {
    /// `Ψ = ½(‖F₁‖² + ‖F₂‖²)`.
    pub fn merit(&self) -> f64 {
        0.5 * (self.f1.norm_squared() + self.f2.norm_squared())
    }

    pub fn to_vector(&self) -> DVector<f64> {
        let n = self.f1.len();
        DVector::from_fn(n + self.f2.len(), |i, _| {
            if i < n {
                self.f1[i]
            } else {
                self.f2[i - n]
            }
        })
    }

    pub fn is_finite(&self) -> bool {
        self.f1.iter().chain(self.f2.iter()).all(|v| v.is_finite())
    }
}

/// Which piece of `min{λᵢ, −gᵢ}` a row of `F₂` differentiates.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Branch {
    /// `λᵢ` is selected: `C` row 0, `D` entry 1.
    Multiplier,
    /// `−gᵢ` is selected: `C` row `−∇gᵢᵀ`, `D` entry 0.
    Constraint,
}

/// One element `H ∈ ∂F^ε(z)`, stored densely as `[[A, B], [C, D]]`.
#[derive(Debug, Clone, PartialEq)]
pub struct GeneralizedJacobian {
    pub matrix: DMatrix<f64>,
    pub branches: Vec<Branch>,
    n: usize,
}

impl GeneralizedJacobian {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn m_bar(&self) -> usize {
        self.branches.len()
    }

    pub fn block_a(&self) -> DMatrix<f64> {
        self.matrix.view((0, 0), (self.n, self.n)).into_owned()
    }

    pub fn block_b(&self) -> DMatrix<f64> {
        self.matrix
            .view((0, self.n), (self.n, self.m_bar()))
            .into_owned()
    }

    pub fn block_c(&self) -> DMatrix<f64> {
        self.matrix
            .view((self.n, 0), (self.m_bar(), self.n))
            .into_owned()
    }

    pub fn block_d(&self) -> DMatrix<f64> {
        self.matrix
            .view((self.n, self.n), (self.m_bar(), self.m_bar()))
            .into_owned()
    }
}

/// The game data needed by every KKT evaluation, assembled once.
#[derive(Debug, Clone)]
pub struct KktSystem<'g> {
    pub game: &'g GameSpec,
    pub maps: AffineMaps,
    pub q: DMatrix<f64>,
    pub a: DMatrix<f64>,
    pub family: SmoothingFamily,
}

impl<'g> KktSystem<'g> {
    pub fn new(game: &'g GameSpec, family: SmoothingFamily) -> Self {
        Self {
            game,
            maps: AffineMaps::new(game),
            q: game.q_joint(),
            a: game.a_joint(),
            family,
        }
    }

    pub fn n(&self) -> usize {
        self.game.n()
    }

    pub fn m_bar(&self) -> usize {
        self.game.m_bar()
    }

    pub fn residual(&self, z: &PrimalDualPoint, eps: f64) -> KktResidual {
        let f1 = stacked_gradient_with(self.game, &self.maps, &z.x, eps, self.family)
            + &self.a * &z.lambda;
        let g = self.game.constraints(&z.x);
        let f2 = z.lambda.zip_map(&g, |l, g| l.min(-g));
        KktResidual { f1, f2 }
    }

    pub fn merit(&self, z: &PrimalDualPoint, eps: f64) -> f64 {
        self.residual(z, eps).merit()
    }

    /// `Q + ½ Dᵀ diag(a ∘ φ̃''(Dx)) D`, the Hessian of the stacked smoothed
    /// objectives in their own blocks (and the full `x`-Jacobian of `F₁`).
    pub fn curvature_block(&self, x: &DVector<f64>, eps: f64) -> DMatrix<f64> {
        let t = &self.maps.a_diff * x;
        let a = &self.game.follower().a;
        let mut scaled = self.maps.a_diff.clone();
        for (i, mut row) in scaled.row_iter_mut().enumerate() {
            row *= 0.5 * a[i] * self.family.d2(t[i], eps);
        }
        let mut e = &self.q + self.maps.a_diff.tr_mul(&scaled);
        // exact symmetry: the product is symmetric in exact arithmetic only
        let et = e.transpose();
        e += et;
        e *= 0.5;
        e
    }

    /// Branch selection at `z`; ties go to the multiplier branch.
    pub fn branches(&self, z: &PrimalDualPoint) -> Vec<Branch> {
        let g = self.game.constraints(&z.x);
        z.lambda
            .iter()
            .zip(g.iter())
            .map(|(&l, &g)| {
                if l > -g {
                    Branch::Constraint
                } else {
                    Branch::Multiplier
                }
            })
            .collect()
    }

    /// Branch selection that is active along direction `d` from `z`: ties are
    /// resolved by the smaller one-sided derivative of `min{λᵢ, −gᵢ}`.
    pub fn branches_along(&self, z: &PrimalDualPoint, d: &DVector<f64>) -> Vec<Branch> {
        let n = self.n();
        let g = self.game.constraints(&z.x);
        let dx = d.rows(0, n);
        let dg = self.a.tr_mul(&dx);
        (0..self.m_bar())
            .map(|i| {
                let (l, mg) = (z.lambda[i], -g[i]);
                if l > mg || (l == mg && -dg[i] < d[n + i]) {
                    Branch::Constraint
                } else {
                    Branch::Multiplier
                }
            })
            .collect()
    }

    pub fn jacobian_with(
        &self,
        z: &PrimalDualPoint,
        eps: f64,
        branches: Vec<Branch>,
    ) -> GeneralizedJacobian {
        let (n, mb) = (self.n(), self.m_bar());
        let mut h = DMatrix::zeros(n + mb, n + mb);
        h.view_mut((0, 0), (n, n))
            .copy_from(&self.curvature_block(&z.x, eps));
        h.view_mut((0, n), (n, mb)).copy_from(&self.a);
        for (i, branch) in branches.iter().enumerate() {
            match branch {
                Branch::Multiplier => h[(n + i, n + i)] = 1.0,
                Branch::Constraint => {
                    for j in 0..n {
                        h[(n + i, j)] = -self.a[(j, i)];
                    }
                }
            }
        }
        GeneralizedJacobian {
            matrix: h,
            branches,
            n,
        }
    }

    pub fn jacobian(&self, z: &PrimalDualPoint, eps: f64) -> GeneralizedJacobian {
        self.jacobian_with(z, eps, self.branches(z))
    }

    /// `HᵀF` for the default branch selection.
    pub fn merit_subgradient(&self, z: &PrimalDualPoint, eps: f64) -> DVector<f64> {
        let f = self.residual(z, eps).to_vector();
        self.jacobian(z, eps).matrix.tr_mul(&f)
    }

    /// `HᵀF` with `H` chosen by the branches active along `d`.
    pub fn merit_subgradient_along(
        &self,
        z: &PrimalDualPoint,
        eps: f64,
        d: &DVector<f64>,
    ) -> DVector<f64> {
        let f = self.residual(z, eps).to_vector();
        self.jacobian_with(z, eps, self.branches_along(z, d))
            .matrix
            .tr_mul(&f)
    }

    /// One-sided directional derivative `Ψ'(z; d) = Fᵀ F'(z; d)`.
    pub fn merit_directional_derivative(
        &self,
        z: &PrimalDualPoint,
        eps: f64,
        d: &DVector<f64>,
    ) -> f64 {
        let f = self.residual(z, eps);
        let h = self.jacobian_with(z, eps, self.branches_along(z, d));
        (h.matrix * d).dot(&f.to_vector())
    }
}

/// `F^ε(z)`.
pub fn kkt_residual(
    game: &GameSpec,
    z: &PrimalDualPoint,
    eps: f64,
    family: SmoothingFamily,
) -> KktResidual {
    KktSystem::new(game, family).residual(z, eps)
}

/// `Ψ_ε(z) = ½‖F^ε(z)‖²`.
pub fn merit(game: &GameSpec, z: &PrimalDualPoint, eps: f64, family: SmoothingFamily) -> f64 {
    kkt_residual(game, z, eps, family).merit()
}

pub fn generalized_jacobian(
    game: &GameSpec,
    z: &PrimalDualPoint,
    eps: f64,
    family: SmoothingFamily,
) -> GeneralizedJacobian {
    KktSystem::new(game, family).jacobian(z, eps)
}

/// `HᵀF`, an element of `∂Ψ_ε(z)`; its negation is the fallback descent direction.
pub fn merit_subgradient(
    game: &GameSpec,
    z: &PrimalDualPoint,
    eps: f64,
    family: SmoothingFamily,
) -> DVector<f64> {
    KktSystem::new(game, family).merit_subgradient(z, eps)
}
