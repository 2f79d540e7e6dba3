//! Report JSON and CSV schemas.

use std::io::Write;

use mlfg::homotopy::{HomotopyTrace, InnerMethod};
use mlfg::model::{write_game, GameSpec};
use mlfg::verify::{NashReport, StationarityCertificate};
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::Failure;

/// Header of the per-iteration log written by `solve --log`.
pub const ITERATION_HEADER: [&str; 9] = [
    "stage",
    "eps",
    "method",
    "taylor",
    "inner_iter",
    "merit",
    "step_norm",
    "predictor_norm",
    "wall_ms",
];

/// Header of the comparison table written by `bench`.
pub const BENCH_HEADER: [&str; 7] =
    ["repeat", "method", "taylor", "eps", "inner_iters", "final_merit", "wall_ms"];

/// Header of the multi-start table written by `bench --multistart`.
pub const MULTISTART_HEADER: [&str; 6] =
    ["start", "seed", "inner_iters", "final_merit", "dist_to_first", "converged"];

#[derive(Debug, Clone, Serialize)]
pub struct Fingerprint {
    pub leaders: usize,
    pub n: usize,
    pub m: usize,
    pub m_bar: usize,
    /// SHA-256 of the canonical game JSON.
    pub sha256: String,
}

impl Fingerprint {
    pub fn of(game: &GameSpec) -> Self {
        let digest = Sha256::digest(write_game(game).as_bytes());
        Self {
            leaders: game.num_leaders(),
            n: game.n(),
            m: game.m(),
            m_bar: game.m_bar(),
            sha256: hex::encode(digest),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ConfigEcho {
    pub method: &'static str,
    pub eps0: f64,
    pub gamma: f64,
    pub eps_min: f64,
    pub tol: f64,
    pub taylor: bool,
    pub p: u32,
    pub seed: Option<u64>,
    pub corrector_steps: usize,
    pub cert_tol: f64,
    pub stat_tol: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct StageReport {
    pub index: usize,
    pub eps: f64,
    pub inner_iterations: usize,
    pub fallback_steps: usize,
    pub merit_final: f64,
    pub converged: bool,
    pub predictor_norm: f64,
    pub warm_start_merit: f64,
    pub plain_start_merit: f64,
    /// `‖x*(ε_i) − x*(ε_last)‖₂`.
    pub error_to_final: f64,
    pub wall_ms: f64,
    pub x: Vec<f64>,
    pub lambda: Vec<f64>,
}

impl StageReport {
    pub fn from_trace(trace: &HomotopyTrace) -> Vec<Self> {
        let last = trace.final_point().map(|z| z.x.clone());
        trace
            .stages
            .iter()
            .map(|s| StageReport {
                index: s.index,
                eps: s.eps,
                inner_iterations: s.inner_iterations,
                fallback_steps: s.fallback_steps,
                merit_final: s.merit_final,
                converged: s.converged,
                predictor_norm: s.predictor_norm,
                warm_start_merit: s.warm_start_merit,
                plain_start_merit: s.plain_start_merit,
                error_to_final: last.as_ref().map_or(0.0, |l| (&s.z_star.x - l).norm()),
                wall_ms: s.wall_ms,
                x: s.z_star.x.iter().copied().collect(),
                lambda: s.z_star.lambda.iter().copied().collect(),
            })
            .collect()
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Certificate {
    /// Gap bound used: the requested tolerance plus `ε·‖a‖₁`, the most a
    /// smoothed equilibrium at `ε` can miss the nonsmooth one by.
    pub nash_tol: f64,
    pub nash: NashReport,
    /// Evaluated only once `ε ≤ 1e-4`; above that the smoothed solution is
    /// not expected to be stationary for the nonsmooth game.
    pub stationarity_checked: bool,
    pub stationarity: StationarityCertificate,
    pub certified: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct SolveReport {
    pub fingerprint: Fingerprint,
    pub config: ConfigEcho,
    pub completed: bool,
    pub total_inner_iterations: usize,
    pub total_wall_ms: f64,
    pub stages: Vec<StageReport>,
    pub x: Vec<f64>,
    pub lambda: Vec<f64>,
    pub y: Vec<f64>,
    pub certificate: Option<Certificate>,
}

pub fn write_iteration_log(
    w: impl Write,
    trace: &HomotopyTrace,
    inner: &InnerMethod,
    taylor: bool,
) -> Result<(), Failure> {
    let mut out = csv::Writer::from_writer(w);
    let io = |e: csv::Error| Failure::input(format!("writing iteration log: {e}"));
    out.write_record(ITERATION_HEADER).map_err(io)?;
    for s in &trace.stages {
        for it in &s.history {
            out.write_record([
                s.index.to_string(),
                num(s.eps),
                inner.name().to_string(),
                on_off(taylor).to_string(),
                it.iter.to_string(),
                num(it.merit),
                num(it.step_norm),
                num(s.predictor_norm),
                num(s.wall_ms),
            ])
            .map_err(io)?;
        }
    }
    out.flush().map_err(|e| Failure::input(format!("writing iteration log: {e}")))
}

/// Shortest round-trip decimal, in exponent form outside `[1e-4, 1e15)`.
pub fn num(v: f64) -> String {
    let a = v.abs();
    if v == 0.0 || (1e-4..1e15).contains(&a) || !v.is_finite() {
        format!("{v}")
    } else {
        format!("{v:e}")
    }
}

pub fn on_off(b: bool) -> &'static str {
    if b {
        "on"
    } else {
        "off"
    }
}
