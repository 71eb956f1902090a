//! Command orchestration: resolve a [`RunSpec`] into scenario grids, run the
//! replications and write the result tables.
//!
//! Grid cell `i` runs on master seed `derive_seed(seed, i)`. For the special
//! cases `i` is the case's index in table order, so `case SA3` reproduces the
//! SA3 row of `fig3` for the same seed and reps.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;
use thiserror::Error;

use crate::analysis::{self, log_fit, ols_fit_planar, AnalysisError, RegressionResult, ReplicationStats};
use crate::config::{render_config, Command, ParseError, RunSpec};
use crate::engine::SimulationOutcome;
use crate::replicate::{derive_seed, replicate, Runner, RunnerError};
use crate::results::{read_numeric_table, write_results, Provenance, ResultTable, ResultsError, Schema, Value};
use crate::scenario::{
    fig1_grid, fig2_sweep, fig3_grid, CaseId, CellKey, ExperimentGrid, Fig2Kind, ScenarioError, ScenarioSpec,
};

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error(transparent)]
    Config(#[from] ParseError),
    #[error("no master seed given")]
    MissingSeed,
    #[error(transparent)]
    Scenario(#[from] ScenarioError),
    #[error(transparent)]
    Analysis(#[from] AnalysisError),
    #[error(transparent)]
    Results(#[from] ResultsError),
    #[error(transparent)]
    Runner(#[from] RunnerError),
    #[error("{path}: no fit is defined for schema `{schema}`")]
    NoFit { path: PathBuf, schema: Schema },
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
}

/// What a command produced.
#[derive(Debug, Clone, PartialEq)]
pub struct Report {
    pub files: Vec<PathBuf>,
    /// Human-readable lines for standard output.
    pub summary: Vec<String>,
}

/// A regression together with the slice of data it was fitted on.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LabeledFit {
    pub label: String,
    pub fit: RegressionResult,
}

struct Context<'a> {
    spec: &'a RunSpec,
    seed: u64,
    reps: u64,
    runner: Runner,
    base: ScenarioSpec,
}

impl Context<'_> {
    fn provenance(&self) -> Provenance {
        // Worker count and output location do not affect results.
        let mut canonical = self.spec.clone();
        canonical.workers = 1;
        canonical.output_dir = PathBuf::from(".");
        canonical.master_seed = Some(self.seed);
        canonical.reps = Some(self.reps);
        Provenance::new(
            self.spec.command.name(),
            self.seed,
            self.reps,
            render_config(&canonical),
        )
    }

    fn run_cell(&self, scenario: &ScenarioSpec, index: u64) -> Result<Vec<SimulationOutcome>, ExperimentError> {
        scenario.validate()?;
        Ok(replicate(
            &self.runner,
            |rng| scenario.sample(rng),
            derive_seed(self.seed, index),
            self.reps,
        )?)
    }

    fn run_grid(&self, grid: &ExperimentGrid) -> Result<Vec<(CellKey, ReplicationStats)>, ExperimentError> {
        grid.cells
            .iter()
            .enumerate()
            .map(|(i, cell)| {
                let outcomes = self.run_cell(&cell.scenario, i as u64)?;
                Ok((cell.key, ReplicationStats::from_outcomes(&outcomes)?))
            })
            .collect()
    }

    fn write(&self, table: &ResultTable) -> Result<PathBuf, ExperimentError> {
        Ok(write_results(table, &self.spec.output_dir)?)
    }
}

/// Runs one command end to end.
pub fn orchestrate(spec: &RunSpec) -> Result<Report, ExperimentError> {
    spec.validate()?;
    if spec.command == Command::Fit {
        return fit_command(spec);
    }
    let ctx = Context {
        spec,
        seed: spec.master_seed.ok_or(ExperimentError::MissingSeed)?,
        reps: spec.effective_reps(),
        runner: Runner::new(spec.workers)?,
        base: spec.project.scenario(),
    };
    match spec.command {
        Command::Run => run_command(&ctx),
        Command::Fig1 => fig1_command(&ctx),
        Command::Fig2 => fig2_command(&ctx),
        Command::Fig3 => fig3_command(&ctx),
        Command::Case(case) => case_command(&ctx, case),
        Command::Fit => unreachable!("handled above"),
    }
}

fn run_command(ctx: &Context) -> Result<Report, ExperimentError> {
    let outcomes = ctx.run_cell(&ctx.base, 0)?;
    let stats = ReplicationStats::from_outcomes(&outcomes)?;
    let mut table = ResultTable::new(Schema::Run, ctx.provenance());
    table.push(vec![stats.iau_rate.into(), stats.rate_std.into(), stats.n.into()]);
    let mut files = vec![ctx.write(&table)?];
    if let Some(n) = ctx.spec.project.n_authors {
        let mut positions = ResultTable::new(Schema::Fig2c, ctx.provenance()).named("run_positions");
        push_positions(&mut positions, n, &stats);
        files.push(ctx.write(&positions)?);
    }
    if ctx.spec.log_events {
        files.push(ctx.write(&events_table(ctx, &outcomes))?);
    }
    Ok(Report {
        files,
        summary: vec![format!(
            "iau_rate = {:.4} ± {:.4} over {} replications",
            stats.iau_rate, stats.rate_std, stats.n
        )],
    })
}

fn fig1_command(ctx: &Context) -> Result<Report, ExperimentError> {
    let o = &ctx.spec.fig1;
    let counts = match ctx.spec.project.n_authors {
        Some(n) => vec![n],
        None => o.author_counts.clone(),
    };
    let grid = fig1_grid(&ctx.base, &counts, o.lattice_points, ctx.reps)?;
    let mut table = ResultTable::new(Schema::Fig1, ctx.provenance());
    for (key, stats) in ctx.run_grid(&grid)? {
        if let CellKey::Spectra {
            authors,
            u_width,
            c_width,
        } = key
        {
            table.push(vec![
                authors.into(),
                u_width.into(),
                c_width.into(),
                stats.iau_rate.into(),
                stats.n.into(),
            ]);
        }
    }
    let path = ctx.write(&table)?;
    Ok(Report {
        summary: vec![format!("{} cells written to {}", table.rows.len(), path.display())],
        files: vec![path],
    })
}

fn fig2_command(ctx: &Context) -> Result<Report, ExperimentError> {
    let counts = match ctx.spec.project.n_authors {
        Some(n) => vec![n],
        None => ctx.spec.fig2.author_counts.clone(),
    };
    let mut files = Vec::new();
    for (kind, schema) in [
        (Fig2Kind::Duration, Schema::Fig2a),
        (Fig2Kind::Progress, Schema::Fig2b),
        (Fig2Kind::PositionMatrix, Schema::Fig2c),
    ] {
        let grid = fig2_sweep(&ctx.base, kind, &counts, ctx.reps)?;
        let mut table = ResultTable::new(schema, ctx.provenance());
        // cells of the three sweeps draw from disjoint seed ranges
        let offset = match kind {
            Fig2Kind::Duration => 0,
            Fig2Kind::Progress => 1 << 20,
            Fig2Kind::PositionMatrix => 2 << 20,
        };
        for (i, cell) in grid.cells.iter().enumerate() {
            let outcomes = ctx.run_cell(&cell.scenario, offset + i as u64)?;
            let stats = ReplicationStats::from_outcomes(&outcomes)?;
            match cell.key {
                CellKey::Duration { authors, weeks } => table.push(vec![
                    authors.into(),
                    weeks.into(),
                    stats.iau_rate.into(),
                    stats.rate_std.into(),
                    stats.n.into(),
                ]),
                CellKey::Progress { authors, progress } => table.push(vec![
                    authors.into(),
                    progress.into(),
                    stats.iau_rate.into(),
                    stats.rate_std.into(),
                    stats.n.into(),
                ]),
                CellKey::Positions { authors } => push_positions(&mut table, authors, &stats),
                _ => unreachable!("fig2 sweeps only produce fig2 cells"),
            }
        }
        files.push(ctx.write(&table)?);
    }
    Ok(Report {
        summary: files.iter().map(|f| format!("wrote {}", f.display())).collect(),
        files,
    })
}

fn push_positions(table: &mut ResultTable, authors: usize, stats: &ReplicationStats) {
    for (p, rate) in stats.per_position_rates.iter().enumerate() {
        table.push(vec![authors.into(), (p + 1).into(), (*rate).into(), stats.n.into()]);
    }
}

fn case_row(case: CaseId, stats: &ReplicationStats) -> Vec<Value> {
    vec![
        case.to_string().into(),
        stats.iau_rate.into(),
        stats.rate_std.into(),
        stats.n.into(),
    ]
}

fn fig3_command(ctx: &Context) -> Result<Report, ExperimentError> {
    let grid = fig3_grid(&ctx.base, ctx.reps)?;
    let mut table = ResultTable::new(Schema::Fig3, ctx.provenance());
    let mut summary = Vec::new();
    for (key, stats) in ctx.run_grid(&grid)? {
        if let CellKey::Case(case) = key {
            summary.push(format!("{case}: {:.4} ± {:.4}", stats.iau_rate, stats.rate_std));
            table.push(case_row(case, &stats));
        }
    }
    Ok(Report {
        files: vec![ctx.write(&table)?],
        summary,
    })
}

fn case_command(ctx: &Context, case: CaseId) -> Result<Report, ExperimentError> {
    let index = CaseId::special_cases().iter().position(|c| *c == case);
    let (scenario, index) = match index {
        Some(i) => (ctx.base.with_case(case)?, i as u64),
        None => (ctx.base.clone(), 0),
    };
    let outcomes = ctx.run_cell(&scenario, index)?;
    let stats = ReplicationStats::from_outcomes(&outcomes)?;
    let mut table = ResultTable::new(Schema::Fig3, ctx.provenance()).named(format!("case_{case}"));
    table.push(case_row(case, &stats));
    let mut files = vec![ctx.write(&table)?];
    if ctx.spec.log_events {
        files.push(ctx.write(&events_table(ctx, &outcomes))?);
    }
    Ok(Report {
        files,
        summary: vec![format!("{case}: {:.4} ± {:.4}", stats.iau_rate, stats.rate_std)],
    })
}

fn events_table(ctx: &Context, outcomes: &[SimulationOutcome]) -> ResultTable {
    let mut table = ResultTable::new(Schema::Events, ctx.provenance());
    for (rep, o) in outcomes.iter().enumerate() {
        for e in &o.events {
            table.push(vec![
                rep.into(),
                e.round.into(),
                e.issuer.into(),
                e.from_position.into(),
                e.to_position.into(),
                e.outcome.as_str().into(),
            ]);
        }
    }
    table
}

/// Fits the regressions defined for a result table.
///
/// - `fig1`: a planar fit of rate on (U, C) per author count, and a
///   logarithmic fit of the per-count mean rate on the author count when at
///   least three counts are present.
/// - `fig2a` / `fig2b`: the logarithmic fit of per-count mean rates.
pub fn fit_table(path: &Path) -> Result<Vec<LabeledFit>, ExperimentError> {
    let table = read_numeric_table(path)?;
    let col = |name| table.column(name).expect("schema column");
    let rate_col = match table.schema {
        Schema::Fig1 => col("iau_rate"),
        Schema::Fig2a | Schema::Fig2b => col("mean"),
        schema => {
            return Err(ExperimentError::NoFit {
                path: path.to_path_buf(),
                schema,
            })
        }
    };
    let authors_col = col("authors");
    let mut by_authors: BTreeMap<u64, Vec<&Vec<f64>>> = BTreeMap::new();
    for row in &table.rows {
        by_authors.entry(row[authors_col] as u64).or_default().push(row);
    }
    let mut fits = Vec::new();
    if table.schema == Schema::Fig1 {
        let (u, c) = (col("u_width"), col("c_width"));
        for (authors, rows) in &by_authors {
            let points: Vec<_> = rows.iter().map(|r| (r[u], r[c], r[rate_col])).collect();
            fits.push(LabeledFit {
                label: format!("planar authors={authors}"),
                fit: ols_fit_planar(&points)?,
            });
        }
    }
    if by_authors.len() >= 3 {
        let points = by_authors
            .iter()
            .map(|(authors, rows)| {
                let rates: Vec<f64> = rows.iter().map(|r| r[rate_col]).collect();
                Ok((*authors as f64, analysis::mean_std(&rates)?.0))
            })
            .collect::<Result<Vec<_>, AnalysisError>>()?;
        fits.push(LabeledFit {
            label: "log authors".to_string(),
            fit: log_fit(&points)?,
        });
    }
    Ok(fits)
}

fn fit_command(spec: &RunSpec) -> Result<Report, ExperimentError> {
    let input = spec.input.as_deref().expect("validated");
    let fits = fit_table(input)?;
    let summary = fits.iter().map(describe_fit).collect();
    let dir = &spec.output_dir;
    fs::create_dir_all(dir).map_err(|source| ExperimentError::Io {
        path: dir.clone(),
        source,
    })?;
    let path = dir.join("fit.json");
    let mut json = serde_json::to_string_pretty(&fits).expect("fits serialize");
    json.push('\n');
    fs::write(&path, json).map_err(|source| ExperimentError::Io {
        path: path.clone(),
        source,
    })?;
    Ok(Report {
        files: vec![path],
        summary,
    })
}

fn describe_fit(f: &LabeledFit) -> String {
    let terms: Vec<String> = f
        .fit
        .coefficients
        .iter()
        .map(|(name, v)| format!("{name} = {v:.4}"))
        .collect();
    format!(
        "{}: {} (R^2 = {:.4}, n = {})",
        f.label,
        terms.join(", "),
        f.fit.r_squared,
        f.fit.n_points
    )
}
