//! Command implementations behind the `mlfg` binary.

pub mod args;
pub mod bench;
pub mod report;
pub mod solve;
pub mod verify;

use std::fmt;
use std::path::Path;

use mlfg::model::{bundled_dataset, load_game, GameSpec, PrimalDualPoint};
use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use args::{Cli, Command, GameSource};

/// Process exit status.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Exit {
    Ok,
    /// A homotopy stage did not converge.
    NotConverged,
    /// The certificate rejected the point.
    NotCertified,
    /// Bad flags, unreadable or invalid input.
    Input,
}

impl Exit {
    pub fn as_i32(self) -> i32 {
        match self {
            Exit::Ok => 0,
            Exit::NotConverged => 1,
            Exit::NotCertified => 2,
            Exit::Input => 3,
        }
    }
}

/// An error that ends the command with a message and an exit code.
#[derive(Debug)]
pub struct Failure {
    pub exit: Exit,
    pub message: String,
}

impl Failure {
    pub fn input(message: impl fmt::Display) -> Self {
        Self { exit: Exit::Input, message: message.to_string() }
    }

    pub fn solver(message: impl fmt::Display) -> Self {
        Self { exit: Exit::NotConverged, message: message.to_string() }
    }
}

pub fn run(cli: Cli) -> Exit {
    let result = match cli.command {
        Command::Solve(a) => solve::cmd_solve(&a),
        Command::Verify(a) => verify::cmd_verify(&a),
        Command::Bench(a) => bench::cmd_bench(&a),
    };
    match result {
        Ok(code) => code,
        Err(f) => {
            eprintln!("error: {}", f.message);
            f.exit
        }
    }
}

pub fn load_source(src: &GameSource) -> Result<GameSpec, Failure> {
    match (&src.data, src.dataset) {
        (Some(path), _) => load_game(path).map_err(|e| Failure::input(format!("{}: {e}", path.display()))),
        (None, Some(id)) => bundled_dataset(id).map_err(Failure::input),
        (None, None) => Err(Failure::input("one of --data or --dataset is required")),
    }
}

/// Uniform start in `[−1, 1]^{n+m̄}` with the multipliers clamped at 0.
pub fn random_start(game: &GameSpec, seed: u64) -> PrimalDualPoint {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let x = DVector::from_fn(game.n(), |_, _| rng.gen_range(-1.0..=1.0));
    let lambda = DVector::from_fn(game.m_bar(), |_, _| rng.gen_range(-1.0..=1.0_f64).max(0.0));
    PrimalDualPoint::new(x, lambda)
}

pub(crate) fn create(path: &Path) -> Result<std::fs::File, Failure> {
    std::fs::File::create(path).map_err(|e| Failure::input(format!("{}: {e}", path.display())))
}
