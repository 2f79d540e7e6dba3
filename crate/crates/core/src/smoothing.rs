//! The smoothing family `φ̃_ε(t) = (tᵖ + (2ε)ᵖ)^{1/p}` and everything built on
//! it: exact and smoothed follower responses, leader objectives and gradients,
//! and the generalized potential.
//!
//! For even `p` the induced NCP function `φ_ε(α, β) = α + β − φ̃_ε(α − β)`
//! vanishes iff `α, β ≥ 0` and, for `p = 2`, `αβ = ε²`. Substituting it into the
//! follower's complementarity system gives the closed-form smoothed response
//!
//! ```text
//! y_ε(x) = ½ [ S x + φ̃_ε(D x) ],   S = Lᵀ + Q_y⁻¹Bᵀ,   D = Lᵀ − Q_y⁻¹Bᵀ
//! ```
//!
//! which tends to the exact response `max{Q_y⁻¹Bᵀx, Lᵀx}` as `ε → 0`.

use nalgebra::{DMatrix, DVector};

use crate::model::GameSpec;

/// The `p`-family of smoothing functions; `p` is even and at least 2.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SmoothingFamily {
    p: u32,
}

impl Default for SmoothingFamily {
    fn default() -> Self {
        Self::DEFAULT
    }
}

impl SmoothingFamily {
    /// `p = 2`.
    pub const DEFAULT: Self = Self { p: 2 };

    /// `None` unless `p` is even and `p ≥ 2`.
    pub fn new(p: u32) -> Option<Self> {
        (p >= 2 && p % 2 == 0).then_some(Self { p })
    }

    pub fn p(&self) -> u32 {
        self.p
    }

    pub fn value(&self, t: f64, eps: f64) -> f64 {
        phi_tilde(t, eps, self.p)
    }

    pub fn d1(&self, t: f64, eps: f64) -> f64 {
        phi_tilde_d1(t, eps, self.p)
    }

    pub fn d2(&self, t: f64, eps: f64) -> f64 {
        phi_tilde_d2(t, eps, self.p)
    }

    pub fn deps(&self, t: f64, eps: f64) -> f64 {
        phi_tilde_deps(t, eps, self.p)
    }

    pub fn dt_deps(&self, t: f64, eps: f64) -> f64 {
        phi_tilde_dt_deps(t, eps, self.p)
    }
}

/// `φ̃_ε(t) = (tᵖ + (2ε)ᵖ)^{1/p}`, evaluated with `max(|t|, 2ε)` factored out.
pub fn phi_tilde(t: f64, eps: f64, p: u32) -> f64 {
    let two_eps = 2.0 * eps;
    let scale = t.abs().max(two_eps);
    if scale == 0.0 {
        return 0.0;
    }
    if p == 2 {
        return t.hypot(two_eps);
    }
    let p_i = p as i32;
    scale * ((t / scale).powi(p_i) + (two_eps / scale).powi(p_i)).powf(1.0 / p as f64)
}

/// `∂φ̃/∂t = (t/φ̃)^{p−1}`, which lies in `(−1, 1)`.
pub fn phi_tilde_d1(t: f64, eps: f64, p: u32) -> f64 {
    let phi = phi_tilde(t, eps, p);
    (t / phi).powi(p as i32 - 1)
}

/// `∂²φ̃/∂t² = (p−1)(t/φ̃)^{p−2} (2ε/φ̃)ᵖ / φ̃`; for `p = 2` this is
/// `4ε² / (t² + 4ε²)^{3/2}`.
pub fn phi_tilde_d2(t: f64, eps: f64, p: u32) -> f64 {
    let phi = phi_tilde(t, eps, p);
    let p_i = p as i32;
    (p - 1) as f64 * (t / phi).powi(p_i - 2) * (2.0 * eps / phi).powi(p_i) / phi
}

/// `∂φ̃/∂ε = 2 (2ε/φ̃)^{p−1}`.
pub fn phi_tilde_deps(t: f64, eps: f64, p: u32) -> f64 {
    let phi = phi_tilde(t, eps, p);
    2.0 * (2.0 * eps / phi).powi(p as i32 - 1)
}

/// `∂²φ̃/∂t∂ε = −2(p−1) (t/φ̃)^{p−1} (2ε/φ̃)^{p−1} / φ̃`; for `p = 2` this is
/// `−4εt / (t² + 4ε²)^{3/2}`.
pub fn phi_tilde_dt_deps(t: f64, eps: f64, p: u32) -> f64 {
    let phi = phi_tilde(t, eps, p);
    let k = p as i32 - 1;
    -2.0 * (p - 1) as f64 * (t / phi).powi(k) * (2.0 * eps / phi).powi(k) / phi
}

/// The two affine maps of the smoothed response, precomputed once per game.
#[derive(Debug, Clone, PartialEq)]
pub struct AffineMaps {
    /// `S = Lᵀ + Q_y⁻¹Bᵀ`, `m × n`.
    pub s: DMatrix<f64>,
    /// `D = Lᵀ − Q_y⁻¹Bᵀ`, `m × n`.
    pub a_diff: DMatrix<f64>,
    /// `Q_y⁻¹Bᵀ`, `m × n`.
    pub qyinv_bt: DMatrix<f64>,
    /// `Lᵀ`, `m × n`.
    pub lt: DMatrix<f64>,
}

impl AffineMaps {
    pub fn new(game: &GameSpec) -> Self {
        let f = game.follower();
        let lt = f.l.transpose();
        let mut qyinv_bt = f.b.transpose();
        for (i, mut row) in qyinv_bt.row_iter_mut().enumerate() {
            row /= f.qy_diag[i];
        }
        Self {
            s: &lt + &qyinv_bt,
            a_diff: &lt - &qyinv_bt,
            qyinv_bt,
            lt,
        }
    }
}

/// Exact follower response `y*(x) = max{Q_y⁻¹Bᵀx, Lᵀx}` (componentwise).
pub fn best_response_exact(game: &GameSpec, x: &DVector<f64>) -> DVector<f64> {
    let maps = AffineMaps::new(game);
    best_response_exact_with(&maps, x)
}

pub fn best_response_exact_with(maps: &AffineMaps, x: &DVector<f64>) -> DVector<f64> {
    let u = &maps.qyinv_bt * x;
    let v = &maps.lt * x;
    u.zip_map(&v, f64::max)
}

/// Smoothed response `y_ε(x) = ½[Sx + φ̃_ε(Dx)]`.
pub fn best_response_smoothed(
    game: &GameSpec,
    x: &DVector<f64>,
    eps: f64,
    family: SmoothingFamily,
) -> DVector<f64> {
    let maps = AffineMaps::new(game);
    best_response_smoothed_with(&maps, x, eps, family)
}

pub fn best_response_smoothed_with(
    maps: &AffineMaps,
    x: &DVector<f64>,
    eps: f64,
    family: SmoothingFamily,
) -> DVector<f64> {
    let sx = &maps.s * x;
    let t = &maps.a_diff * x;
    sx.zip_map(&t, |s, t| 0.5 * (s + family.value(t, eps)))
}

fn own_quadratic(game: &GameSpec, nu: usize, x: &DVector<f64>) -> f64 {
    let leader = game.leader(nu);
    let x_nu = game.leader_block(x, nu);
    0.5 * x_nu.dot(&(&leader.q * &x_nu)) + leader.c.dot(&x_nu)
}

/// Nonsmooth leader cost `θ_ν(x) = ½x_νᵀQ_νx_ν + c_νᵀx_ν + Σᵢ aᵢ y*ᵢ(x)`.
pub fn leader_objective(game: &GameSpec, nu: usize, x: &DVector<f64>) -> f64 {
    own_quadratic(game, nu, x) + game.follower().a.dot(&best_response_exact(game, x))
}

/// Smoothed leader cost `θ_ν^ε(x)`.
pub fn leader_objective_smoothed(
    game: &GameSpec,
    nu: usize,
    x: &DVector<f64>,
    eps: f64,
    family: SmoothingFamily,
) -> f64 {
    own_quadratic(game, nu, x)
        + game
            .follower()
            .a
            .dot(&best_response_smoothed(game, x, eps, family))
}

/// `∇_{x_ν} θ_ν^ε(x) = Q_νx_ν + c_ν + ½(Sᵀa)_ν + ½(Dᵀ(a ∘ φ̃'(Dx)))_ν`.
pub fn leader_gradient_smoothed(
    game: &GameSpec,
    nu: usize,
    x: &DVector<f64>,
    eps: f64,
    family: SmoothingFamily,
) -> DVector<f64> {
    let maps = AffineMaps::new(game);
    let full = stacked_gradient_with(game, &maps, x, eps, family);
    game.leader_block(&full, nu)
}

/// All leader gradients stacked, `θ'^ε(x) ∈ Rⁿ`. This is the first KKT block
/// without the multiplier term.
pub fn stacked_gradient(
    game: &GameSpec,
    x: &DVector<f64>,
    eps: f64,
    family: SmoothingFamily,
) -> DVector<f64> {
    stacked_gradient_with(game, &AffineMaps::new(game), x, eps, family)
}

pub fn stacked_gradient_with(
    game: &GameSpec,
    maps: &AffineMaps,
    x: &DVector<f64>,
    eps: f64,
    family: SmoothingFamily,
) -> DVector<f64> {
    let a = &game.follower().a;
    let t = &maps.a_diff * x;
    let weighted = DVector::from_fn(a.len(), |i, _| a[i] * family.d1(t[i], eps));
    game.q_joint() * x
        + game.c_joint()
        + 0.5 * maps.s.tr_mul(a)
        + 0.5 * maps.a_diff.tr_mul(&weighted)
}

/// `φ(x) = Σᵢ aᵢ max{(Q_y⁻¹Bᵀx)ᵢ, (Lᵀx)ᵢ}`.
pub fn phi_value(game: &GameSpec, x: &DVector<f64>) -> f64 {
    game.follower().a.dot(&best_response_exact(game, x))
}

/// Generalized potential `Θ(x) = Σ_ν[½x_νᵀQ_νx_ν + c_νᵀx_ν] + φ(x)`.
pub fn potential_value(game: &GameSpec, x: &DVector<f64>) -> f64 {
    (0..game.num_leaders())
        .map(|nu| own_quadratic(game, nu, x))
        .sum::<f64>()
        + phi_value(game, x)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{bundled_dataset, FollowerSpec, LeaderSpec};
    use approx::assert_relative_eq;
    use nalgebra::{dmatrix, dvector};
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    const P2: SmoothingFamily = SmoothingFamily { p: 2 };

    #[test]
    fn phi_tilde_values() {
        assert_eq!(phi_tilde(0.0, 0.5, 2), 1.0);
        assert_relative_eq!(phi_tilde(3.0, 0.5, 2), 10f64.sqrt(), epsilon = 1e-15);
        assert_eq!(phi_tilde(-3.0, 0.5, 2), phi_tilde(3.0, 0.5, 2));
    }

    #[test]
    fn first_derivative_values() {
        assert_eq!(phi_tilde_d1(0.0, 0.5, 2), 0.0);
        assert_relative_eq!(phi_tilde_d1(3.0, 0.5, 2), 3.0 / 10f64.sqrt(), epsilon = 1e-15);
        let near_one = phi_tilde_d1(1e8, 0.5, 2);
        assert!(near_one <= 1.0 && 1.0 - near_one < 1e-15);
    }

    #[test]
    fn second_derivative_values() {
        assert_relative_eq!(phi_tilde_d2(0.0, 0.5, 2), 1.0, epsilon = 1e-15);
        // the unsimplified two-term form
        let expect = 1.0 / 10f64.sqrt() - 9.0 / 10f64.powf(1.5);
        assert_relative_eq!(phi_tilde_d2(3.0, 0.5, 2), expect, max_relative = 1e-12);
        assert_relative_eq!(phi_tilde_d2(3.0, 0.5, 2), 0.031623, epsilon = 1e-6);
    }

    #[test]
    fn eps_derivative_values() {
        assert_relative_eq!(phi_tilde_deps(0.0, 0.5, 2), 2.0, epsilon = 1e-15);
        assert_eq!(phi_tilde_dt_deps(0.0, 0.5, 2), 0.0);
        assert_relative_eq!(phi_tilde_deps(3.0, 0.5, 2), 2.0 / 10f64.sqrt(), epsilon = 1e-15);
        let h = 1e-5;
        for &t in &[-2.0, 0.0, 0.3, 3.0] {
            let fd = (phi_tilde(t, 0.5 + h, 2) - phi_tilde(t, 0.5 - h, 2)) / (2.0 * h);
            assert!((fd - phi_tilde_deps(t, 0.5, 2)).abs() < 1e-6);
        }
    }

    #[test]
    fn general_p_no_overflow() {
        let v = phi_tilde(1e200, 1.0, 8);
        assert!(v.is_finite() && (v / 1e200 - 1.0).abs() < 1e-12);
        let d = phi_tilde_d1(-1e200, 1.0, 8);
        assert!((d + 1.0).abs() < 1e-12);
        assert!(phi_tilde_d2(1e-200, 1e-3, 6).is_finite());
    }

    #[test]
    fn family_rejects_odd_p() {
        assert!(SmoothingFamily::new(3).is_none());
        assert!(SmoothingFamily::new(0).is_none());
        assert_eq!(SmoothingFamily::new(4).unwrap().p(), 4);
    }

    /// Central-difference check of d1, d2, deps, dt_deps at 1000 random points.
    #[test]
    fn derivative_stack_matches_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for p in [2u32, 4, 6] {
            for _ in 0..1000 {
                let t: f64 = rng.gen_range(-4.0..4.0);
                let eps: f64 = rng.gen_range(0.05..2.0);
                let h = 1e-5;
                let check = |analytic: f64, fd: f64| {
                    let err = (analytic - fd).abs() / analytic.abs().max(1.0);
                    assert!(err < 1e-6, "p={p} t={t} eps={eps}: {analytic} vs {fd}");
                };
                check(
                    phi_tilde_d1(t, eps, p),
                    (phi_tilde(t + h, eps, p) - phi_tilde(t - h, eps, p)) / (2.0 * h),
                );
                check(
                    phi_tilde_d2(t, eps, p),
                    (phi_tilde_d1(t + h, eps, p) - phi_tilde_d1(t - h, eps, p)) / (2.0 * h),
                );
                check(
                    phi_tilde_deps(t, eps, p),
                    (phi_tilde(t, eps + h, p) - phi_tilde(t, eps - h, p)) / (2.0 * h),
                );
                check(
                    phi_tilde_dt_deps(t, eps, p),
                    (phi_tilde_d1(t, eps + h, p) - phi_tilde_d1(t, eps - h, p)) / (2.0 * h),
                );
            }
        }
    }

    proptest! {
        #[test]
        fn majorizes_abs_within_two_eps(t in -1e3f64..1e3, eps in 1e-6f64..10.0) {
            let v = phi_tilde(t, eps, 2);
            prop_assert!(v >= t.abs());
            prop_assert!(v - t.abs() <= 2.0 * eps * (1.0 + 1e-12));
        }

        #[test]
        fn derivative_ranges(t in -1e3f64..1e3, eps in 1e-4f64..10.0, k in 1u32..4) {
            let p = 2 * k;
            let d1 = phi_tilde_d1(t, eps, p);
            prop_assert!(d1.abs() <= 1.0);
            prop_assert!(phi_tilde_d2(t, eps, p) >= 0.0);
            prop_assert_eq!(phi_tilde_d1(-t, eps, p), -d1);
        }

        /// φ_ε(α, β) = 0 ⇔ α, β ≥ 0 and αβ = ε² for p = 2.
        #[test]
        fn smoothed_ncp_manifold(alpha in 1e-3f64..50.0, eps in 1e-3f64..2.0) {
            let beta = eps * eps / alpha;
            let ncp = alpha + beta - phi_tilde(alpha - beta, eps, 2);
            prop_assert!(ncp.abs() <= 1e-12 * (alpha + beta));
        }
    }

    fn scalar_game() -> GameSpec {
        let leader = LeaderSpec {
            q: dmatrix![1.0],
            c: dvector![0.0],
            a: DMatrix::zeros(1, 0),
            b: DVector::zeros(0),
        };
        let follower = FollowerSpec {
            qy_diag: dvector![2.0],
            b: dmatrix![4.0],
            l: dmatrix![1.0],
            a: dvector![1.0],
        };
        GameSpec::new(vec![leader], follower).unwrap()
    }

    #[test]
    fn exact_response_scalar_and_origin() {
        let g = scalar_game();
        assert_eq!(best_response_exact(&g, &dvector![1.0]), dvector![2.0]);
        let d1 = bundled_dataset(1).unwrap();
        assert_eq!(best_response_exact(&d1, &DVector::zeros(4)), DVector::zeros(3));
    }

    #[test]
    fn exact_response_dataset1() {
        let g = bundled_dataset(1).unwrap();
        let y = best_response_exact(&g, &DVector::from_element(4, 1.0));
        let expect = [5.2, 9.6, 7.2];
        for i in 0..3 {
            assert_relative_eq!(y[i], expect[i], epsilon = 1e-12);
        }
        let maps = AffineMaps::new(&g);
        let u = &maps.qyinv_bt * DVector::from_element(4, 1.0);
        assert_relative_eq!(u[0], 2.96, epsilon = 1e-12);
        assert_relative_eq!(u[1], 7.8 / 3.6, epsilon = 1e-12);
        assert_relative_eq!(u[2], 7.3 / 4.6, epsilon = 1e-12);
    }

    #[test]
    fn affine_map_identities() {
        let g = bundled_dataset(2).unwrap();
        let maps = AffineMaps::new(&g);
        let two_lt = &maps.s + &maps.a_diff;
        let two_q = &maps.s - &maps.a_diff;
        assert!((two_lt - 2.0 * &maps.lt).amax() <= 1e-14 * maps.lt.amax());
        assert!((two_q - 2.0 * &maps.qyinv_bt).amax() <= 1e-14 * maps.qyinv_bt.amax());
    }

    #[test]
    fn smoothed_response_at_kink() {
        // Q_y⁻¹Bᵀx = Lᵀx = 2 at x = 1
        let g = scalar_game();
        let mut g2 = g.clone();
        let _ = &mut g2;
        let leader = g.leader(0).clone();
        let follower = FollowerSpec {
            qy_diag: dvector![2.0],
            b: dmatrix![4.0],
            l: dmatrix![2.0],
            a: dvector![1.0],
        };
        let kink = GameSpec::new(vec![leader], follower).unwrap();
        let y = best_response_smoothed(&kink, &dvector![1.0], 0.25, P2);
        assert_relative_eq!(y[0], 2.25, epsilon = 1e-15);
    }

    /// Per-component bisection on φ_ε(y − Q_y⁻¹Bᵀx, y − Lᵀx) = 0.
    fn smoothed_response_by_root_finding(g: &GameSpec, x: &DVector<f64>, eps: f64) -> DVector<f64> {
        let f = g.follower();
        let u = DVector::from_fn(f.dim(), |i, _| f.b.column(i).dot(x) / f.qy_diag[i]);
        let v = f.l.tr_mul(x);
        DVector::from_fn(f.dim(), |i, _| {
            let ncp = |y: f64| {
                let (al, be) = (y - u[i], y - v[i]);
                al + be - ((al - be).powi(2) + 4.0 * eps * eps).sqrt()
            };
            // φ_ε is increasing in y; bracket around max(u, v)
            let mut lo = u[i].max(v[i]) - 1.0;
            let mut hi = u[i].max(v[i]) + 2.0 * eps + 1.0;
            for _ in 0..200 {
                let mid = 0.5 * (lo + hi);
                if ncp(mid) < 0.0 {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            0.5 * (lo + hi)
        })
    }

    #[test]
    fn smoothed_response_matches_root_finding() {
        let g = bundled_dataset(1).unwrap();
        let x = DVector::from_element(4, 1.0);
        let y = best_response_smoothed(&g, &x, 0.1, P2);
        let oracle = smoothed_response_by_root_finding(&g, &x, 0.1);
        assert!((y - oracle).amax() < 1e-12);
    }

    #[test]
    fn smoothed_response_within_eps_of_exact() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let g = bundled_dataset(2).unwrap();
        for _ in 0..1000 {
            let x = DVector::from_fn(g.n(), |_, _| rng.gen_range(-5.0..5.0));
            let eps = rng.gen_range(1e-4..2.0);
            let ys = best_response_smoothed(&g, &x, eps, P2);
            let ye = best_response_exact(&g, &x);
            let diff = &ys - &ye;
            assert!(diff.min() >= -1e-12);
            assert!(diff.amax() <= eps * (1.0 + 1e-9));
        }
    }

    #[test]
    fn exact_response_complementarity() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let g = bundled_dataset(1).unwrap();
        let f = g.follower();
        for _ in 0..500 {
            let x = DVector::from_fn(g.n(), |_, _| rng.gen_range(-5.0..5.0));
            let y = best_response_exact(&g, &x);
            let lt = f.l.tr_mul(&x);
            let bt = f.b.tr_mul(&x);
            for i in 0..g.m() {
                let g1 = y[i] - lt[i];
                let g2 = f.qy_diag[i] * y[i] - bt[i];
                assert!(g1 >= -1e-12 && g2 >= -1e-12);
                assert!((g1 * g2).abs() <= 1e-12 * (1.0 + y[i].abs()).powi(2));
            }
        }
    }

    #[test]
    fn leader_objective_dataset1() {
        let g = bundled_dataset(1).unwrap();
        let x = DVector::from_element(4, 1.0);
        assert_relative_eq!(leader_objective(&g, 0, &x), 51.21, epsilon = 1e-12);
        assert_relative_eq!(potential_value(&g, &x), 55.66, epsilon = 1e-12);
        assert_eq!(potential_value(&g, &DVector::zeros(4)), 0.0);
    }

    #[test]
    fn zero_weights_give_pure_quadratic() {
        let mut g = bundled_dataset(1).unwrap();
        let mut follower = g.follower().clone();
        follower.a.fill(0.0);
        g = GameSpec::new(g.leaders().to_vec(), follower).unwrap();
        let x = dvector![0.3, -1.2, 0.7, 2.0];
        let l0 = g.leader(0);
        let x0 = dvector![0.3, -1.2];
        let quad = 0.5 * x0.dot(&(&l0.q * &x0)) + l0.c.dot(&x0);
        assert_relative_eq!(leader_objective(&g, 0, &x), quad, epsilon = 1e-14);
        let grad = leader_gradient_smoothed(&g, 0, &x, 0.3, P2);
        assert!((grad - (&l0.q * &x0 + &l0.c)).amax() < 1e-14);
    }

    #[test]
    fn smoothed_objective_majorizes() {
        let g = bundled_dataset(1).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..100 {
            let x = DVector::from_fn(4, |_, _| rng.gen_range(-3.0..3.0));
            for nu in 0..2 {
                assert!(
                    leader_objective_smoothed(&g, nu, &x, 1e3, P2) >= leader_objective(&g, nu, &x)
                );
            }
        }
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let g = bundled_dataset(1).unwrap();
        let x = DVector::from_element(4, 1.0);
        let h = 1e-6;
        for nu in 0..2 {
            let grad = leader_gradient_smoothed(&g, nu, &x, 0.5, P2);
            let r = g.var_range(nu);
            for (k, j) in r.enumerate() {
                let mut xp = x.clone();
                let mut xm = x.clone();
                xp[j] += h;
                xm[j] -= h;
                let fd = (leader_objective_smoothed(&g, nu, &xp, 0.5, P2)
                    - leader_objective_smoothed(&g, nu, &xm, 0.5, P2))
                    / (2.0 * h);
                assert!((fd - grad[k]).abs() <= 1e-6 * grad[k].abs().max(1.0));
            }
        }
    }

    #[test]
    fn potential_unilateral_identity() {
        let g = bundled_dataset(1).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        for _ in 0..100 {
            let x = DVector::from_fn(4, |_, _| rng.gen_range(-3.0..3.0));
            let nu = rng.gen_range(0..2);
            let mut xh = x.clone();
            for j in g.var_range(nu) {
                xh[j] = rng.gen_range(-3.0..3.0);
            }
            let lhs = leader_objective(&g, nu, &x) - leader_objective(&g, nu, &xh);
            let rhs = potential_value(&g, &x) - potential_value(&g, &xh);
            assert!((lhs - rhs).abs() <= 1e-10);
        }
    }

    #[test]
    fn objective_convex_in_own_block() {
        let g = bundled_dataset(2).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        for _ in 0..200 {
            let x = DVector::from_fn(6, |_, _| rng.gen_range(-3.0..3.0));
            let nu = rng.gen_range(0..3);
            let mut xh = x.clone();
            for j in g.var_range(nu) {
                xh[j] = rng.gen_range(-3.0..3.0);
            }
            let t: f64 = rng.gen_range(0.0..1.0);
            let mix = &x * t + &xh * (1.0 - t);
            let lhs = leader_objective(&g, nu, &mix);
            let rhs = t * leader_objective(&g, nu, &x) + (1.0 - t) * leader_objective(&g, nu, &xh);
            assert!(lhs <= rhs + 1e-10);
        }
    }

    #[test]
    fn uniform_monotonicity() {
        let g = bundled_dataset(1).unwrap();
        let mu = g.q_min_eigenvalue();
        let mut rng = ChaCha8Rng::seed_from_u64(19);
        for _ in 0..200 {
            let x = DVector::from_fn(4, |_, _| rng.gen_range(-3.0..3.0));
            let xh = DVector::from_fn(4, |_, _| rng.gen_range(-3.0..3.0));
            let eps = rng.gen_range(0.01..2.0);
            let d = &x - &xh;
            let lhs = d.dot(&(stacked_gradient(&g, &x, eps, P2) - stacked_gradient(&g, &xh, eps, P2)));
            assert!(lhs >= mu * d.norm_squared() - 1e-9);
        }
    }
}
