//! Browser bindings for the simulator: a position-utility curve, a
//! spectrum-width heatmap of ultimatum rates, and a single-project trace.

use rand::SeedableRng;
use serde::Serialize;
use wasm_bindgen::prelude::*;

use ultimatum_core::analysis::ReplicationStats;
use ultimatum_core::engine::{run_with_rng, SimRng};
use ultimatum_core::replicate::{derive_seed, replicate, Runner};
use ultimatum_core::scenario::{fig1_grid, AuthorCount, ScenarioSpec};
use ultimatum_core::PositionUtilityParams;

const AUTHOR_RANGE: std::ops::RangeInclusive<usize> = 2..=8;

fn check_authors(n: usize) -> Result<(), String> {
    if AUTHOR_RANGE.contains(&n) {
        Ok(())
    } else {
        Err(format!("author count {n} outside 2..=8"))
    }
}

/// Largest grid the page may request; keeps the tab responsive.
const MAX_WORK: u64 = 2_000_000;

pub fn utility_curve(n: usize, r1: f64, r2: f64) -> Result<Vec<f64>, String> {
    let params = PositionUtilityParams::new(r1, r2).map_err(|e| e.to_string())?;
    (1..=n).map(|x| params.value(x).map_err(|e| e.to_string())).collect()
}

/// Row-major rates over the width lattice: row = utility width, column =
/// contribution width.
pub fn rate_grid(n_authors: usize, points: usize, reps: u32, seed: u64) -> Result<Vec<f64>, String> {
    check_authors(n_authors)?;
    let reps = u64::from(reps);
    if (points * points) as u64 * reps > MAX_WORK {
        return Err(format!("grid too large: {points}x{points} cells x {reps} reps"));
    }
    let grid = fig1_grid(&ScenarioSpec::default(), &[n_authors], points, reps).map_err(|e| e.to_string())?;
    let runner = Runner::sequential();
    grid.cells
        .iter()
        .enumerate()
        .map(|(i, cell)| {
            let outcomes = replicate(
                &runner,
                |rng| cell.scenario.sample(rng),
                derive_seed(seed, i as u64),
                reps,
            )
            .map_err(|e| e.to_string())?;
            Ok(ReplicationStats::from_outcomes(&outcomes)
                .map_err(|e| e.to_string())?
                .iau_rate)
        })
        .collect()
}

#[derive(Serialize)]
struct TraceAuthor {
    share: f64,
    u0: f64,
    initial_position: usize,
    final_position: usize,
    payoff: f64,
}

#[derive(Serialize)]
struct TraceEvent {
    round: u32,
    issuer: usize,
    from: usize,
    to: usize,
    outcome: &'static str,
}

#[derive(Serialize)]
struct Trace {
    horizon: u32,
    start_progress: f64,
    rounds: u32,
    completed: bool,
    authors: Vec<TraceAuthor>,
    events: Vec<TraceEvent>,
}

/// One project from the default scenario with `n_authors` authors, as JSON.
pub fn trace_json(n_authors: usize, seed: u64) -> Result<String, String> {
    check_authors(n_authors)?;
    let spec = ScenarioSpec {
        n_authors: AuthorCount::Fixed(n_authors),
        ..ScenarioSpec::default()
    };
    spec.validate().map_err(|e| e.to_string())?;
    let mut rng = SimRng::seed_from_u64(seed);
    let config = spec.sample(&mut rng).map_err(|e| e.to_string())?;
    let outcome = run_with_rng(&config, &mut rng);
    let position = |order: &[usize], a: usize| order.iter().position(|&b| b == a).unwrap() + 1;
    let scale = f64::from(config.horizon_rounds);
    let trace = Trace {
        horizon: config.horizon_rounds,
        start_progress: config.start_progress,
        rounds: outcome.rounds_elapsed,
        completed: outcome.completed,
        authors: config
            .authors
            .iter()
            .map(|a| TraceAuthor {
                share: a.w_mean * scale,
                u0: a.u0,
                initial_position: position(&outcome.initial_order, a.id),
                final_position: position(&outcome.final_order, a.id),
                payoff: outcome.payoffs[a.id],
            })
            .collect(),
        events: outcome
            .events
            .iter()
            .map(|e| TraceEvent {
                round: e.round,
                issuer: e.issuer,
                from: e.from_position,
                to: e.to_position,
                outcome: e.outcome.as_str(),
            })
            .collect(),
    };
    serde_json::to_string(&trace).map_err(|e| e.to_string())
}

#[wasm_bindgen]
pub fn position_utility_curve(n: usize, r1: f64, r2: f64) -> Result<Vec<f64>, JsError> {
    utility_curve(n, r1, r2).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen]
pub fn iau_heatmap(n_authors: usize, points: usize, reps: u32, seed: u32) -> Result<Vec<f64>, JsError> {
    rate_grid(n_authors, points, reps, u64::from(seed)).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen]
pub fn trace(n_authors: usize, seed: u32) -> Result<String, JsError> {
    trace_json(n_authors, u64::from(seed)).map_err(|e| JsError::new(&e))
}
