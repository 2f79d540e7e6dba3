use std::io::Write;
use std::time::Instant;

use mlfg::homotopy::{homotopy_solve, HomotopyConfig, InnerMethod};
use mlfg::model::bundled_dataset;
use mlfg::solvers::{newton_solve, NewtonConfig, SubgradConfig};

use crate::args::BenchArgs;
use crate::report::{num, on_off, BENCH_HEADER, MULTISTART_HEADER};
use crate::{create, random_start, Exit, Failure};

/// Seed of repeat `r`.
fn repeat_seed(base: u64, r: usize) -> u64 {
    base.wrapping_add(r as u64)
}

pub fn cmd_bench(args: &BenchArgs) -> Result<Exit, Failure> {
    let game = bundled_dataset(args.dataset).map_err(Failure::input)?;
    let out: Box<dyn Write> = match &args.out {
        Some(p) => Box::new(create(p)?),
        None => Box::new(std::io::stdout()),
    };
    let mut csv = csv::Writer::from_writer(out);
    let io = |e: csv::Error| Failure::input(format!("writing bench table: {e}"));
    csv.write_record(BENCH_HEADER).map_err(io)?;

    let methods = [
        InnerMethod::Newton(NewtonConfig { tol: args.tol, ..Default::default() }),
        InnerMethod::Subgradient(SubgradConfig { tol: args.tol, ..Default::default() }),
    ];
    let mut failed = false;
    for r in 0..args.repeats {
        let z0 = random_start(&game, repeat_seed(args.seed, r));
        for inner in methods {
            for taylor in [true, false] {
                let cfg = HomotopyConfig { eps_min: args.eps_min, taylor, inner, ..Default::default() };
                cfg.validate().map_err(Failure::input)?;
                let trace = homotopy_solve(&game, &z0, &cfg).map_err(Failure::solver)?;
                failed |= !trace.completed;
                for s in &trace.stages {
                    csv.write_record([
                        r.to_string(),
                        inner.name().to_string(),
                        on_off(taylor).to_string(),
                        num(s.eps),
                        s.inner_iterations.to_string(),
                        num(s.merit_final),
                        num(s.wall_ms),
                    ])
                    .map_err(io)?;
                }
            }
        }
    }
    csv.flush().map_err(|e| Failure::input(format!("writing bench table: {e}")))?;

    if let Some(path) = &args.multistart {
        failed |= !multistart(args, path)?;
    }
    Ok(if failed { Exit::NotConverged } else { Exit::Ok })
}

/// Newton from `starts` random points at a fixed `ε`. Returns whether every
/// start converged.
fn multistart(args: &BenchArgs, path: &std::path::Path) -> Result<bool, Failure> {
    let game = bundled_dataset(args.dataset).map_err(Failure::input)?;
    let cfg = NewtonConfig { tol: args.multistart_tol, ..Default::default() };
    let mut csv = csv::Writer::from_writer(create(path)?);
    let io = |e: csv::Error| Failure::input(format!("writing multistart table: {e}"));
    csv.write_record(MULTISTART_HEADER).map_err(io)?;
    let mut first = None;
    let mut spread = 0.0_f64;
    let mut all = true;
    let t0 = Instant::now();
    for k in 0..args.starts {
        let seed = repeat_seed(args.seed, k);
        let r = newton_solve(&game, &random_start(&game, seed), args.multistart_eps, Default::default(), &cfg)
            .map_err(Failure::solver)?;
        let x0 = first.get_or_insert_with(|| r.z.x.clone());
        let dist = (&r.z.x - &*x0).amax();
        spread = spread.max(dist);
        all &= r.converged;
        csv.write_record([
            k.to_string(),
            seed.to_string(),
            r.iterations.to_string(),
            num(r.merit),
            num(dist),
            r.converged.to_string(),
        ])
        .map_err(io)?;
    }
    csv.flush().map_err(|e| Failure::input(format!("writing multistart table: {e}")))?;
    eprintln!(
        "multistart: {} starts at eps {} in {:.2} ms, max distance to first {:e}",
        args.starts,
        args.multistart_eps,
        t0.elapsed().as_secs_f64() * 1e3,
        spread
    );
    Ok(all)
}
