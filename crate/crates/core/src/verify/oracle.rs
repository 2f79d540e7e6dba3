//! Exact best response of one leader with rivals fixed.
//!
//! `θ_ν(·, x_{−ν})` is rewritten as the convex QP
//!
//! ```text
//! min ½x_νᵀQ_νx_ν + c_νᵀx_ν + Σ_{aᵢ>0} aᵢsᵢ
//! s.t. (Q_y⁻¹Bᵀx)ᵢ ≤ sᵢ,  (Lᵀx)ᵢ ≤ sᵢ,  A_νᵀx_ν + b_ν ≤ 0
//! ```
//!
//! which is tight because every `aᵢ ≥ 0`, and solved by enumerating active sets.

use nalgebra::{DMatrix, DVector};

use crate::error::VerifyError;
use crate::linalg::{lu_solve, LuOutcome};
use crate::model::GameSpec;
use crate::smoothing::AffineMaps;

/// Largest number of inequalities handled by exhaustive enumeration.
pub const MAX_ENUMERATED_CONSTRAINTS: usize = 24;

const FEAS_RTOL: f64 = 1e-9;
const DUAL_TOL: f64 = 1e-9;

/// A convex QP `min ½uᵀPu + qᵀu  s.t.  Gu + h ≤ 0` with `P ⪰ 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct InequalityQp {
    pub p: DMatrix<f64>,
    pub q: DVector<f64>,
    pub g: DMatrix<f64>,
    pub h: DVector<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct QpSolution {
    pub u: DVector<f64>,
    pub multipliers: DVector<f64>,
    pub objective: f64,
    pub active: Vec<usize>,
}

impl InequalityQp {
    pub fn objective(&self, u: &DVector<f64>) -> f64 {
        0.5 * u.dot(&(&self.p * u)) + self.q.dot(u)
    }

    /// Global minimizer by enumerating every active set of size at most the
    /// number of variables. `None` when no KKT point exists (empty feasible
    /// set for the instances built here).
    pub fn solve_by_enumeration(&self) -> Option<QpSolution> {
        let nv = self.q.len();
        let nc = self.h.len();
        let mut best: Option<QpSolution> = None;
        let mut subset = Vec::with_capacity(nv);
        for mask in 0u64..(1u64 << nc) {
            if mask.count_ones() as usize > nv {
                continue;
            }
            subset.clear();
            subset.extend((0..nc).filter(|&i| mask >> i & 1 == 1));
            if let Some(sol) = self.kkt_point(&subset) {
                if best.as_ref().map_or(true, |b| sol.objective < b.objective) {
                    best = Some(sol);
                }
            }
        }
        best
    }

    /// Solve the equality-constrained KKT system for `active` and keep the
    /// result if it is primal feasible with nonnegative multipliers.
    fn kkt_point(&self, active: &[usize]) -> Option<QpSolution> {
        let nv = self.q.len();
        let k = active.len();
        let mut kkt = DMatrix::zeros(nv + k, nv + k);
        kkt.view_mut((0, 0), (nv, nv)).copy_from(&self.p);
        let mut rhs = DVector::zeros(nv + k);
        rhs.rows_mut(0, nv).copy_from(&(-&self.q));
        for (r, &i) in active.iter().enumerate() {
            for j in 0..nv {
                kkt[(nv + r, j)] = self.g[(i, j)];
                kkt[(j, nv + r)] = self.g[(i, j)];
            }
            rhs[nv + r] = -self.h[i];
        }
        let sol = match lu_solve(&kkt, &rhs, 1e-12) {
            LuOutcome::Solved(s) => s,
            LuOutcome::Singular => return None,
        };
        let u = sol.rows(0, nv).into_owned();
        let mu = sol.rows(nv, k).into_owned();
        if mu.iter().any(|&m| m < -DUAL_TOL * (1.0 + mu.amax())) {
            return None;
        }
        let slack = &self.g * &u + &self.h;
        for i in 0..slack.len() {
            let scale = 1.0 + self.h[i].abs() + self.g.row(i).abs().transpose().dot(&u.abs());
            if slack[i] > FEAS_RTOL * scale {
                return None;
            }
        }
        let mut multipliers = DVector::zeros(self.h.len());
        for (r, &i) in active.iter().enumerate() {
            multipliers[i] = mu[r].max(0.0);
        }
        Some(QpSolution {
            objective: self.objective(&u),
            u,
            multipliers,
            active: active.to_vec(),
        })
    }
}

/// Best response of leader `nu` to the rivals in `x` (only the rival blocks of
/// `x` are read).
#[derive(Debug, Clone, PartialEq)]
pub struct OracleResponse {
    pub x_nu: DVector<f64>,
    /// Optimal `θ_ν`.
    pub objective: f64,
}

/// Epigraph QP of leader `nu` with rivals fixed at `x`.
pub fn epigraph_qp(game: &GameSpec, nu: usize, x: &DVector<f64>) -> InequalityQp {
    let maps = AffineMaps::new(game);
    let leader = game.leader(nu);
    let r = game.var_range(nu);
    let n_nu = r.len();
    let a = &game.follower().a;
    let weighted: Vec<usize> = (0..game.m()).filter(|&i| a[i] > 0.0).collect();
    let ns = weighted.len();
    let nv = n_nu + ns;

    let mut p = DMatrix::zeros(nv, nv);
    p.view_mut((0, 0), (n_nu, n_nu)).copy_from(&leader.q);
    let mut q = DVector::zeros(nv);
    q.rows_mut(0, n_nu).copy_from(&leader.c);
    for (k, &i) in weighted.iter().enumerate() {
        q[n_nu + k] = a[i];
    }

    let mut rivals = x.clone();
    rivals.rows_mut(r.start, n_nu).fill(0.0);
    let nc = leader.num_constraints() + 2 * ns;
    let mut g = DMatrix::zeros(nc, nv);
    let mut h = DVector::zeros(nc);
    for j in 0..leader.num_constraints() {
        for v in 0..n_nu {
            g[(j, v)] = leader.a[(v, j)];
        }
        h[j] = leader.b[j];
    }
    let mut row = leader.num_constraints();
    for (k, &i) in weighted.iter().enumerate() {
        for map in [&maps.qyinv_bt, &maps.lt] {
            for v in 0..n_nu {
                g[(row, v)] = map[(i, r.start + v)];
            }
            g[(row, n_nu + k)] = -1.0;
            h[row] = map.row(i).transpose().dot(&rivals);
            row += 1;
        }
    }
    InequalityQp { p, q, g, h }
}

/// Globally optimal response of leader `nu` to the rival strategies in `x`.
pub fn best_response_qp_oracle(
    game: &GameSpec,
    nu: usize,
    x: &DVector<f64>,
) -> Result<OracleResponse, VerifyError> {
    if x.len() != game.n() {
        return Err(VerifyError::Dimension {
            expected: game.n(),
            found: x.len(),
        });
    }
    if nu >= game.num_leaders() {
        return Err(crate::error::GameError::LeaderIndex {
            index: nu,
            count: game.num_leaders(),
        }
        .into());
    }
    let qp = epigraph_qp(game, nu, x);
    if qp.h.len() > MAX_ENUMERATED_CONSTRAINTS {
        return Err(VerifyError::TooManyConstraints {
            leader: nu,
            count: qp.h.len(),
        });
    }
    let sol = qp
        .solve_by_enumeration()
        .ok_or(VerifyError::Infeasible { leader: nu })?;
    let n_nu = game.leader(nu).dim();
    let x_nu = sol.u.rows(0, n_nu).into_owned();
    // report the exact nonsmooth objective at the minimizer
    let mut full = x.clone();
    full.rows_mut(game.var_range(nu).start, n_nu).copy_from(&x_nu);
    let objective = crate::smoothing::leader_objective(game, nu, &full);
    Ok(OracleResponse { x_nu, objective })
}
