use std::time::Instant;

use mlfg::homotopy::{homotopy_solve, HomotopyConfig, HomotopyTrace, InnerMethod};
use mlfg::model::{GameSpec, PrimalDualPoint};
use mlfg::smoothing::best_response_exact;
use mlfg::solvers::{NewtonConfig, SubgradConfig};
use mlfg::verify::{s_stationarity_certificate, verify_nash, GammaAssignment};
use mlfg::{SmoothingFamily, SolveError};

use crate::args::{Method, SolveArgs};
use crate::report::{write_iteration_log, Certificate, ConfigEcho, Fingerprint, SolveReport, StageReport};
use crate::{create, load_source, random_start, Exit, Failure};

/// Stationarity of the nonsmooth game is only checked once the final `ε` is
/// at most this.
pub const STATIONARITY_EPS: f64 = 1e-4;

pub fn family_from(p: u32) -> Result<SmoothingFamily, Failure> {
    SmoothingFamily::new(p).ok_or_else(|| Failure::input(format!("--p {p}: need an even exponent >= 2")))
}

pub fn homotopy_config(args: &SolveArgs) -> Result<HomotopyConfig, Failure> {
    let inner = match args.method {
        Method::Newton => InnerMethod::Newton(NewtonConfig { tol: args.tol, ..Default::default() }),
        Method::Subgradient => {
            InnerMethod::Subgradient(SubgradConfig { tol: args.tol, ..Default::default() })
        }
    };
    let cfg = HomotopyConfig {
        eps0: args.eps0,
        gamma: args.gamma,
        eps_min: args.eps_min,
        taylor: args.taylor.is_on(),
        family: family_from(args.p)?,
        inner,
        ..Default::default()
    };
    cfg.validate().map_err(Failure::input)?;
    Ok(cfg)
}

/// Certificate of the final point of a continuation that ended at `eps`.
pub fn certify(
    game: &GameSpec,
    z: &PrimalDualPoint,
    eps: f64,
    family: SmoothingFamily,
    cert_tol: f64,
    stat_tol: f64,
) -> Result<Certificate, Failure> {
    let nash_tol = cert_tol + eps * game.follower().a.lp_norm(1);
    let nash = verify_nash(game, &z.x, nash_tol).map_err(Failure::input)?;
    let stationarity =
        s_stationarity_certificate(game, z, eps, family, GammaAssignment::BranchConsistent, stat_tol);
    let stationarity_checked = eps <= STATIONARITY_EPS;
    let certified = nash.certified && (!stationarity_checked || stationarity.certified);
    Ok(Certificate { nash_tol, nash, stationarity_checked, stationarity, certified })
}

pub fn run_solve(game: &GameSpec, args: &SolveArgs) -> Result<(HomotopyConfig, HomotopyTrace, f64), Failure> {
    let cfg = homotopy_config(args)?;
    let z0 = match args.seed {
        Some(seed) => random_start(game, seed),
        None => PrimalDualPoint::zeros(game),
    };
    let t0 = Instant::now();
    let trace = homotopy_solve(game, &z0, &cfg).map_err(|e| match e {
        SolveError::Config(_) | SolveError::Dimension { .. } => Failure::input(e),
        SolveError::NonFinite { .. } => Failure::solver(e),
    })?;
    Ok((cfg, trace, t0.elapsed().as_secs_f64() * 1e3))
}

pub fn cmd_solve(args: &SolveArgs) -> Result<Exit, Failure> {
    let game = load_source(&args.source)?;
    let (cfg, trace, total_wall_ms) = run_solve(&game, args)?;

    if let Some(path) = &args.log {
        write_iteration_log(create(path)?, &trace, &cfg.inner, cfg.taylor)?;
    }

    let z = trace.final_point().cloned().unwrap_or_else(|| PrimalDualPoint::zeros(&game));
    let certificate = if trace.completed {
        let eps = trace.final_eps().expect("completed traces have stages");
        Some(certify(&game, &z, eps, cfg.family, args.cert_tol, args.stat_tol)?)
    } else {
        None
    };

    let report = SolveReport {
        fingerprint: Fingerprint::of(&game),
        config: ConfigEcho {
            method: cfg.inner.name(),
            eps0: cfg.eps0,
            gamma: cfg.gamma,
            eps_min: cfg.eps_min,
            tol: cfg.inner.tol(),
            taylor: cfg.taylor,
            p: cfg.family.p(),
            seed: args.seed,
            corrector_steps: cfg.corrector_steps,
            cert_tol: args.cert_tol,
            stat_tol: args.stat_tol,
        },
        completed: trace.completed,
        total_inner_iterations: trace.total_inner_iterations(),
        total_wall_ms,
        stages: StageReport::from_trace(&trace),
        y: best_response_exact(&game, &z.x).iter().copied().collect(),
        x: z.x.iter().copied().collect(),
        lambda: z.lambda.iter().copied().collect(),
        certificate,
    };
    if let Some(path) = &args.out {
        serde_json::to_writer_pretty(create(path)?, &report)
            .map_err(|e| Failure::input(format!("{}: {e}", path.display())))?;
    }

    print_summary(&report);
    Ok(match &report.certificate {
        None => Exit::NotConverged,
        Some(c) if !c.certified => Exit::NotCertified,
        Some(_) => Exit::Ok,
    })
}

fn print_summary(r: &SolveReport) {
    println!(
        "{} stages, {} inner iterations, {:.3} ms, {}",
        r.stages.len(),
        r.total_inner_iterations,
        r.total_wall_ms,
        if r.completed { "all converged" } else { "stopped at a non-converged stage" }
    );
    if let Some(s) = r.stages.last() {
        println!("final eps {:e}, merit {:e}", s.eps, s.merit_final);
    }
    println!("x* = {:?}", r.x);
    if let Some(c) = &r.certificate {
        for l in &c.nash.leaders {
            println!("leader {} nash gap {:e}", l.leader + 1, l.gap);
        }
        if c.stationarity_checked {
            println!("s-stationarity max residual {:e}", c.stationarity.max_residual);
        }
        println!("certified: {}", c.certified);
    }
}
