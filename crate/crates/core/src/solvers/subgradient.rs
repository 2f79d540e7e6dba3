use nalgebra::DVector;

use crate::error::SolveError;
use crate::kkt::KktSystem;
use crate::model::{GameSpec, PrimalDualPoint};
use crate::smoothing::SmoothingFamily;

use super::{check_start, InnerResult, IterRecord, SubgradConfig};

const SIGMA_MIN: f64 = 1e-12;
const SIGMA_MAX_DOUBLINGS: u32 = 60;

enum Direction {
    /// `‖v̄‖ ≤ δ`: the current point is `δ`-stationary.
    Stationary,
    Descent(DVector<f64>, f64),
}

/// Aggregated subgradient descent on `Ψ_ε` with quasisecants of length zero.
///
/// The descent test `Ψ(z + h d) − Ψ(z) ≤ −c₁ h ‖v̄‖` is used in its `h → 0`
/// form `Ψ'(z; d) ≤ −c₁‖v̄‖`, and each new subgradient is the one of the
/// smooth piece that is active along the rejected direction.
pub fn subgradient_solve(
    game: &GameSpec,
    z0: &PrimalDualPoint,
    eps: f64,
    family: SmoothingFamily,
    cfg: &SubgradConfig,
) -> Result<InnerResult, SolveError> {
    cfg.validate()?;
    check_start(game, z0, eps)?;
    let sys = KktSystem::new(game, family);

    let mut z = z0.clone();
    let mut psi = sys.merit(&z, eps);
    let mut history = vec![IterRecord {
        iter: 0,
        merit: psi,
        step_norm: 0.0,
    }];
    let mut iterations = 0;
    let mut stalled = false;
    let mut delta = cfg.delta0;

    'outer: for _ in 0..cfg.max_outer {
        for _ in 0..cfg.max_inner {
            if !psi.is_finite() {
                return Err(SolveError::NonFinite {
                    iteration: iterations,
                    what: "merit",
                });
            }
            if psi <= cfg.tol {
                break 'outer;
            }
            let (d, vnorm) = match descent_direction(&sys, &z, eps, delta, cfg) {
                Direction::Stationary => break,
                Direction::Descent(d, vnorm) => (d, vnorm),
            };
            match step_length(&sys, &z, psi, &d, vnorm, eps, cfg.c2) {
                Some((sigma, psi_next)) => {
                    z = z.step(sigma, &d);
                    psi = psi_next;
                    iterations += 1;
                    history.push(IterRecord {
                        iter: iterations,
                        merit: psi,
                        step_norm: sigma,
                    });
                }
                None => {
                    stalled = true;
                    break;
                }
            }
        }
        delta *= cfg.gamma;
    }

    Ok(InnerResult {
        z,
        merit: psi,
        iterations,
        fallback_steps: 0,
        converged: psi <= cfg.tol,
        stalled: stalled && psi > cfg.tol,
        history,
    })
}

fn descent_direction(
    sys: &KktSystem,
    z: &PrimalDualPoint,
    eps: f64,
    delta: f64,
    cfg: &SubgradConfig,
) -> Direction {
    let mut v = sys.merit_subgradient(z, eps);
    let mut v_tilde = v.clone();
    let mut v_bar = v.clone();
    for _ in 0..cfg.max_inner {
        let diff = &v - &v_tilde;
        let dd = diff.norm_squared();
        // argmin over c of ‖c v + (1 − c) ṽ‖²
        let c = if dd > 0.0 {
            (v_tilde.dot(&(&v_tilde - &v)) / dd).clamp(0.0, 1.0)
        } else {
            1.0
        };
        v_bar = &v * c + &v_tilde * (1.0 - c);
        let vnorm = v_bar.norm();
        if vnorm <= delta {
            return Direction::Stationary;
        }
        let d = -&v_bar / vnorm;
        if sys.merit_directional_derivative(z, eps, &d) <= -cfg.c1 * vnorm {
            return Direction::Descent(d, vnorm);
        }
        v = sys.merit_subgradient_along(z, eps, &d);
        v_tilde = v_bar.clone();
    }
    let vnorm = v_bar.norm();
    Direction::Descent(-&v_bar / vnorm, vnorm)
}

/// Largest `σ` on the grid `2^k` with `Ψ(z + σd) − Ψ(z) ≤ −c₂σ‖v̄‖`.
fn step_length(
    sys: &KktSystem,
    z: &PrimalDualPoint,
    psi: f64,
    d: &DVector<f64>,
    vnorm: f64,
    eps: f64,
    c2: f64,
) -> Option<(f64, f64)> {
    let accept = |sigma: f64| {
        let p = sys.merit(&z.step(sigma, d), eps);
        (p - psi <= -c2 * sigma * vnorm && p < psi).then_some(p)
    };
    let mut sigma = 1.0;
    if let Some(mut best) = accept(sigma) {
        for _ in 0..SIGMA_MAX_DOUBLINGS {
            match accept(2.0 * sigma) {
                Some(p) => {
                    sigma *= 2.0;
                    best = p;
                }
                None => break,
            }
        }
        return Some((sigma, best));
    }
    while sigma > SIGMA_MIN {
        sigma *= 0.5;
        if let Some(p) = accept(sigma) {
            return Some((sigma, p));
        }
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::bundled_dataset;
    use crate::solvers::tests::scalar_quadratic;
    use crate::solvers::{newton_solve, NewtonConfig};
    use nalgebra::dvector;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    const P2: SmoothingFamily = SmoothingFamily::DEFAULT;

    #[test]
    fn root_returns_immediately() {
        let g = scalar_quadratic(1.0, 0.0);
        let z0 = PrimalDualPoint::primal(dvector![0.0], 0);
        let r = subgradient_solve(&g, &z0, 0.5, P2, &SubgradConfig::default()).unwrap();
        assert!(r.converged);
        assert_eq!(r.iterations, 0);
    }

    #[test]
    fn scalar_quadratic_merit() {
        // Ψ(z) = ½z²
        let g = scalar_quadratic(1.0, 0.0);
        let z0 = PrimalDualPoint::primal(dvector![1.0], 0);
        let cfg = SubgradConfig::default();
        let r = subgradient_solve(&g, &z0, 0.5, P2, &cfg).unwrap();
        assert!(r.converged);
        assert!(r.z.x[0].abs() <= (2.0 * cfg.tol).sqrt());
        for w in r.history.windows(2) {
            assert!(w[1].merit < w[0].merit);
        }
    }

    #[test]
    fn dataset1_converges_and_agrees_with_newton() {
        let g = bundled_dataset(1).unwrap();
        let z0 = PrimalDualPoint::zeros(&g);
        let s = subgradient_solve(&g, &z0, 1.6, P2, &SubgradConfig::default()).unwrap();
        let n = newton_solve(&g, &z0, 1.6, P2, &NewtonConfig::default()).unwrap();
        assert!(s.converged, "merit {}", s.merit);
        assert!((s.z.x - n.z.x).amax() < 1e-4);
        assert!(s.iterations > n.iterations);
    }

    #[test]
    fn merit_history_is_monotone() {
        let mut rng = ChaCha8Rng::seed_from_u64(43);
        let g = bundled_dataset(2).unwrap();
        for _ in 0..5 {
            let z0 = PrimalDualPoint::new(
                DVector::from_fn(g.n(), |_, _| rng.gen_range(-1.0..1.0)),
                DVector::from_fn(g.m_bar(), |_, _| rng.gen_range(0.0..1.0)),
            );
            let r = subgradient_solve(&g, &z0, 0.8, P2, &SubgradConfig::default()).unwrap();
            for w in r.history.windows(2) {
                assert!(w[1].merit <= w[0].merit);
            }
        }
    }
}
