use crate::error::SolveError;
use crate::kkt::KktSystem;
use crate::linalg::{lu_solve, LuOutcome};
use crate::model::{GameSpec, PrimalDualPoint};
use crate::smoothing::SmoothingFamily;

use super::{armijo_with, check_start, InnerResult, IterRecord, NewtonConfig};

/// Globalized nonsmooth Newton method on `F^ε(z) = 0`.
///
/// A full step `H s = −F` is taken whenever `H` is nonsingular and the step
/// reduces the merit by the factor `1 − 2σ`. Otherwise one Armijo step along
/// `−HᵀF` is taken and Newton is retried from the new point.
///
/// With `min_iter > 0`, full Newton steps are attempted from an already
/// converged start until `min_iter` steps were taken or a step fails to
/// reduce the merit.
pub fn newton_solve(
    game: &GameSpec,
    z0: &PrimalDualPoint,
    eps: f64,
    family: SmoothingFamily,
    cfg: &NewtonConfig,
) -> Result<InnerResult, SolveError> {
    cfg.validate()?;
    check_start(game, z0, eps)?;
    let sys = KktSystem::new(game, family);

    let mut z = z0.clone();
    let mut f = sys.residual(&z, eps);
    let mut psi = f.merit();
    let mut history = vec![IterRecord {
        iter: 0,
        merit: psi,
        step_norm: 0.0,
    }];
    let mut fallback_steps = 0;
    let mut stalled = false;

    let mut k = 0;
    while k < cfg.max_iter {
        if !f.is_finite() || !psi.is_finite() {
            return Err(SolveError::NonFinite {
                iteration: k,
                what: "KKT residual",
            });
        }
        let corrector = psi <= cfg.tol;
        if corrector && k >= cfg.min_iter {
            break;
        }
        let h = sys.jacobian(&z, eps);
        let fv = f.to_vector();

        let mut accepted = None;
        if let LuOutcome::Solved(s) = lu_solve(&h.matrix, &(-&fv), cfg.pivot_tol) {
            let trial = z.step(1.0, &s);
            let psi_trial = sys.merit(&trial, eps);
            if psi_trial <= (1.0 - 2.0 * cfg.sigma) * psi {
                accepted = Some((trial, psi_trial, s.norm()));
            }
        }
        if accepted.is_none() && corrector {
            break;
        }
        if accepted.is_none() {
            let s = -h.matrix.tr_mul(&fv);
            if !s.iter().all(|v| v.is_finite()) {
                return Err(SolveError::NonFinite {
                    iteration: k,
                    what: "merit subgradient",
                });
            }
            let step = armijo_with(&sys, &z, psi, &s, eps, cfg.beta, cfg.sigma);
            if step.no_descent {
                stalled = true;
                break;
            }
            fallback_steps += 1;
            accepted = Some((z.step(step.t, &s), step.merit, step.t * s.norm()));
        }

        let (next, psi_next, step_norm) = accepted.expect("one branch always assigns");
        z = next;
        f = sys.residual(&z, eps);
        psi = psi_next;
        k += 1;
        history.push(IterRecord {
            iter: k,
            merit: psi,
            step_norm,
        });
    }
    if !psi.is_finite() {
        return Err(SolveError::NonFinite {
            iteration: k,
            what: "merit",
        });
    }

    Ok(InnerResult {
        z,
        merit: psi,
        iterations: k,
        fallback_steps,
        converged: psi <= cfg.tol,
        stalled,
        history,
    })
}
