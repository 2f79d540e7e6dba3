use std::path::Path;

use mlfg::model::{GameSpec, PrimalDualPoint};
use mlfg::verify::{s_stationarity_certificate, verify_nash, GammaAssignment};
use nalgebra::DVector;
use serde_json::Value;

use crate::args::VerifyArgs;
use crate::solve::family_from;
use crate::{load_source, Exit, Failure};

/// Candidate from `--x`: a bare array or an object with `x` and optional
/// `lambda`.
pub fn read_candidate(path: &Path) -> Result<(DVector<f64>, Option<DVector<f64>>), Failure> {
    let text = std::fs::read_to_string(path).map_err(|e| Failure::input(format!("{}: {e}", path.display())))?;
    let doc: Value = serde_json::from_str(&text).map_err(|e| Failure::input(format!("{}: {e}", path.display())))?;
    let vector = |v: &Value, what: &str| -> Result<DVector<f64>, Failure> {
        let items: Vec<f64> = serde_json::from_value(v.clone())
            .map_err(|_| Failure::input(format!("`{what}` must be an array of numbers")))?;
        Ok(DVector::from_vec(items))
    };
    match &doc {
        Value::Array(_) => Ok((vector(&doc, "x")?, None)),
        Value::Object(map) => {
            let x = map.get("x").ok_or_else(|| Failure::input("candidate object has no `x`"))?;
            let lambda = map.get("lambda").map(|l| vector(l, "lambda")).transpose()?;
            Ok((vector(x, "x")?, lambda))
        }
        _ => Err(Failure::input("candidate must be a JSON array or object")),
    }
}

/// Multipliers for a bare `x`: zero when no constraint is active, otherwise
/// unknown.
fn default_lambda(game: &GameSpec, x: &DVector<f64>, tol: f64) -> Option<DVector<f64>> {
    game.constraints(x).iter().all(|&g| g < -tol).then(|| DVector::zeros(game.m_bar()))
}

pub fn cmd_verify(args: &VerifyArgs) -> Result<Exit, Failure> {
    let game = load_source(&args.source)?;
    let family = family_from(args.p)?;
    let (x, lambda) = read_candidate(&args.x)?;
    if x.len() != game.n() {
        return Err(Failure::input(format!("candidate has length {}, game has n = {}", x.len(), game.n())));
    }
    if let Some(l) = &lambda {
        if l.len() != game.m_bar() {
            return Err(Failure::input(format!(
                "lambda has length {}, game has {} constraints",
                l.len(),
                game.m_bar()
            )));
        }
    }

    let nash = verify_nash(&game, &x, args.tol).map_err(Failure::input)?;
    for l in &nash.leaders {
        println!(
            "leader {} objective {:.12} best {:.12} gap {:e}",
            l.leader + 1,
            l.objective,
            l.best_objective,
            l.gap
        );
    }
    println!("max constraint violation {:e}", nash.max_violation);
    let mut certified = nash.certified;

    match lambda.or_else(|| default_lambda(&game, &x, args.stat_tol)) {
        Some(lambda) => {
            let z = PrimalDualPoint::new(x, lambda);
            let cert = s_stationarity_certificate(
                &game,
                &z,
                args.eps_min,
                family,
                GammaAssignment::BranchConsistent,
                args.stat_tol,
            );
            for (name, v) in cert.residuals.as_array() {
                println!("s-stationarity ({name}) {v:e}");
            }
            certified &= cert.certified;
        }
        None => println!("s-stationarity skipped: active constraints and no multipliers given"),
    }
    println!("certified: {certified}");
    Ok(if certified { Exit::Ok } else { Exit::NotCertified })
}
