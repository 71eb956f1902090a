//! Run configuration files.
//!
//! A run file is TOML. Every key is optional; omitted keys take the default
//! parameter ranges. Unknown and duplicate keys are rejected.
//!
//! ```toml
//! command = "fig1"          # run | fig1 | fig2 | fig3 | case | fit
//! case = "SA1"              # scenario for `case`
//! seed = 7
//! reps = 100
//! out = "results"
//! workers = 4
//! log_events = false
//! input = "results/fig1.csv" # table for `fit`
//!
//! [project]
//! n_authors = 5             # fixed author count, omit to draw from 2..8
//! duration = [8, 88]        # weeks, inclusive
//! start_progress = [0.0, 1.0]
//! utility_spectrum = [1.0, 5.0]
//! contribution_spectrum = [1.0, 5.0]
//! discount_rate = 0.0
//! withdrawal_penalty = 0.1
//! w_std_ratio = 0.1
//!
//! [fig1]
//! lattice_points = 5
//! author_counts = [2, 5, 8]
//!
//! [fig2]
//! author_counts = [2, 3, 4, 5, 6, 7, 8]
//! ```

use std::path::PathBuf;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::DiscountParams;
use crate::scenario::{
    AuthorCount, CaseId, ScenarioSpec, SpectrumMode, SpectrumSpec, DEFAULT_AUTHORS, DEFAULT_DURATION, DEFAULT_SPECTRUM,
    DEFAULT_W_STD_RATIO,
};

/// Author counts allowed in the figure experiments.
pub const PAPER_AUTHOR_RANGE: (usize, usize) = DEFAULT_AUTHORS;
/// Largest author count accepted for a plain `run`.
pub const MAX_RUN_AUTHORS: usize = 16;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ParseError {
    #[error("{0}")]
    Syntax(String),
    #[error("`{key}`: {message}")]
    Range { key: &'static str, message: String },
    #[error("`{key}` is required for command `{command}`")]
    Missing { key: &'static str, command: &'static str },
}

fn range_err(key: &'static str, message: impl Into<String>) -> ParseError {
    ParseError::Range {
        key,
        message: message.into(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Command {
    Run,
    Fig1,
    Fig2,
    Fig3,
    Case(CaseId),
    Fit,
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Run => "run",
            Command::Fig1 => "fig1",
            Command::Fig2 => "fig2",
            Command::Fig3 => "fig3",
            Command::Case(_) => "case",
            Command::Fit => "fit",
        }
    }

    /// Replications per cell when `reps` is not given.
    pub fn default_reps(&self) -> u64 {
        match self {
            Command::Run | Command::Fig1 => 10_000,
            Command::Fig2 | Command::Fig3 | Command::Case(_) => 100_000,
            Command::Fit => 1,
        }
    }
}

/// Project-level overrides applied on top of the default scenario.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProjectOverrides {
    pub n_authors: Option<usize>,
    pub duration: (u32, u32),
    pub start_progress: (f64, f64),
    pub utility_spectrum: (f64, f64),
    pub contribution_spectrum: (f64, f64),
    pub discount_rate: f64,
    pub withdrawal_penalty: f64,
    pub w_std_ratio: f64,
}

impl Default for ProjectOverrides {
    fn default() -> Self {
        let discount = DiscountParams::default();
        Self {
            n_authors: None,
            duration: DEFAULT_DURATION,
            start_progress: (0.0, 1.0),
            utility_spectrum: DEFAULT_SPECTRUM,
            contribution_spectrum: DEFAULT_SPECTRUM,
            discount_rate: discount.discount_rate,
            withdrawal_penalty: discount.withdrawal_penalty,
            w_std_ratio: DEFAULT_W_STD_RATIO,
        }
    }
}

impl ProjectOverrides {
    /// The scenario these overrides describe.
    pub fn scenario(&self) -> ScenarioSpec {
        let spectrum = |(low, high): (f64, f64)| SpectrumSpec {
            low,
            high,
            mode: SpectrumMode::SampledWidth,
        };
        ScenarioSpec {
            n_authors: match self.n_authors {
                Some(n) => AuthorCount::Fixed(n),
                None => AuthorCount::Uniform {
                    min: DEFAULT_AUTHORS.0,
                    max: DEFAULT_AUTHORS.1,
                },
            },
            contribution: spectrum(self.contribution_spectrum),
            utility: spectrum(self.utility_spectrum),
            duration: self.duration,
            start_progress: self.start_progress,
            discount: DiscountParams {
                discount_rate: self.discount_rate,
                withdrawal_penalty: self.withdrawal_penalty,
            },
            w_std_ratio: self.w_std_ratio,
            ..ScenarioSpec::default()
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Fig1Options {
    pub lattice_points: usize,
    pub author_counts: Vec<usize>,
}

impl Default for Fig1Options {
    fn default() -> Self {
        Self {
            lattice_points: 5,
            author_counts: vec![2, 5, 8],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Fig2Options {
    pub author_counts: Vec<usize>,
}

impl Default for Fig2Options {
    fn default() -> Self {
        Self {
            author_counts: (DEFAULT_AUTHORS.0..=DEFAULT_AUTHORS.1).collect(),
        }
    }
}

/// A fully resolved, validated run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSpec {
    pub command: Command,
    pub master_seed: Option<u64>,
    pub reps: Option<u64>,
    pub output_dir: PathBuf,
    pub workers: usize,
    pub log_events: bool,
    pub input: Option<PathBuf>,
    pub project: ProjectOverrides,
    pub fig1: Fig1Options,
    pub fig2: Fig2Options,
}

impl Default for RunSpec {
    fn default() -> Self {
        Self {
            command: Command::Run,
            master_seed: None,
            reps: None,
            output_dir: PathBuf::from("results"),
            workers: 1,
            log_events: false,
            input: None,
            project: ProjectOverrides::default(),
            fig1: Fig1Options::default(),
            fig2: Fig2Options::default(),
        }
    }
}

impl RunSpec {
    pub fn effective_reps(&self) -> u64 {
        self.reps.unwrap_or_else(|| self.command.default_reps())
    }

    /// Checks every value against its allowed range, naming the first
    /// offending key.
    pub fn validate(&self) -> Result<(), ParseError> {
        if self.reps == Some(0) {
            return Err(range_err("reps", "must be at least 1"));
        }
        if self.workers == 0 {
            return Err(range_err("workers", "must be at least 1"));
        }
        let command = self.command.name();
        if self.command == Command::Fit && self.input.is_none() {
            return Err(ParseError::Missing { key: "input", command });
        }
        if self.log_events && !matches!(self.command, Command::Run | Command::Case(_)) {
            return Err(range_err(
                "log_events",
                format!("only available for `run` and `case`, not `{command}`"),
            ));
        }
        let p = &self.project;
        let (lo, hi) = PAPER_AUTHOR_RANGE;
        match (self.command, p.n_authors) {
            (_, None) => {}
            (Command::Fig1 | Command::Fig2, Some(n)) if !(lo..=hi).contains(&n) => {
                return Err(range_err("n_authors", format!("{n} is outside {lo}..{hi}")));
            }
            (Command::Run, Some(n)) if !(1..=MAX_RUN_AUTHORS).contains(&n) => {
                return Err(range_err("n_authors", format!("{n} is outside 1..{MAX_RUN_AUTHORS}")));
            }
            (Command::Fig3 | Command::Case(_), Some(_)) => {
                return Err(range_err("n_authors", "the special cases fix their own author count"));
            }
            _ => {}
        }
        if p.duration.0 == 0 || p.duration.0 > p.duration.1 {
            return Err(range_err("duration", "need 1 <= min <= max"));
        }
        let (a, b) = p.start_progress;
        if !(0.0 <= a && a <= b && b <= 1.0) {
            return Err(range_err("start_progress", "need 0 <= min <= max <= 1"));
        }
        for (key, (a, b)) in [
            ("utility_spectrum", p.utility_spectrum),
            ("contribution_spectrum", p.contribution_spectrum),
        ] {
            if !(1.0 <= a && a <= b && b.is_finite()) {
                return Err(range_err(key, "need 1 <= min <= max"));
            }
        }
        for (key, v) in [
            ("discount_rate", p.discount_rate),
            ("withdrawal_penalty", p.withdrawal_penalty),
        ] {
            if !(0.0..=1.0).contains(&v) {
                return Err(range_err(key, format!("{v} is outside [0, 1]")));
            }
        }
        if !(p.w_std_ratio >= 0.0 && p.w_std_ratio.is_finite()) {
            return Err(range_err("w_std_ratio", "must be a non-negative number"));
        }
        if self.fig1.lattice_points < 2 {
            return Err(range_err("lattice_points", "must be at least 2"));
        }
        for counts in [&self.fig1.author_counts, &self.fig2.author_counts] {
            if counts.is_empty() {
                return Err(range_err("author_counts", "must not be empty"));
            }
            if let Some(n) = counts.iter().find(|n| !(lo..=hi).contains(*n)) {
                return Err(range_err("author_counts", format!("{n} is outside {lo}..{hi}")));
            }
        }
        Ok(())
    }
}

// On-disk layout. Every field is optional so defaults can be filled in.
#[derive(Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ConfigFile {
    #[serde(skip_serializing_if = "Option::is_none")]
    command: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    case: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    seed: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    reps: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    out: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    workers: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    log_events: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none")]
    input: Option<PathBuf>,
    #[serde(default)]
    project: ProjectSection,
    #[serde(default)]
    fig1: Fig1Section,
    #[serde(default)]
    fig2: Fig2Section,
}

#[derive(Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ProjectSection {
    #[serde(skip_serializing_if = "Option::is_none")]
    n_authors: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    duration: Option<(u32, u32)>,
    #[serde(skip_serializing_if = "Option::is_none")]
    start_progress: Option<(f64, f64)>,
    #[serde(skip_serializing_if = "Option::is_none")]
    utility_spectrum: Option<(f64, f64)>,
    #[serde(skip_serializing_if = "Option::is_none")]
    contribution_spectrum: Option<(f64, f64)>,
    #[serde(skip_serializing_if = "Option::is_none")]
    discount_rate: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    withdrawal_penalty: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    w_std_ratio: Option<f64>,
}

#[derive(Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Fig1Section {
    #[serde(skip_serializing_if = "Option::is_none")]
    lattice_points: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    author_counts: Option<Vec<usize>>,
}

#[derive(Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Fig2Section {
    #[serde(skip_serializing_if = "Option::is_none")]
    author_counts: Option<Vec<usize>>,
}

/// Parses and validates a run file.
fn syntax_err(text: &str, e: &toml::de::Error) -> ParseError {
    match e.span() {
        Some(span) if !span.is_empty() => {
            let line = text[..span.start].matches('\n').count() + 1;
            ParseError::Syntax(format!("line {line}: {} (`{}`)", e.message(), text[span].trim()))
        }
        _ => ParseError::Syntax(e.message().to_string()),
    }
}

pub fn parse_config(text: &str) -> Result<RunSpec, ParseError> {
    let file: ConfigFile = toml::from_str(text).map_err(|e| syntax_err(text, &e))?;
    let defaults = RunSpec::default();
    let command = match file.command.as_deref().unwrap_or("run") {
        "run" => Command::Run,
        "fig1" => Command::Fig1,
        "fig2" => Command::Fig2,
        "fig3" => Command::Fig3,
        "fit" => Command::Fit,
        "case" => {
            let id = file.case.as_deref().ok_or(ParseError::Missing {
                key: "case",
                command: "case",
            })?;
            Command::Case(
                id.parse()
                    .map_err(|e: crate::scenario::ScenarioError| range_err("case", e.to_string()))?,
            )
        }
        other => return Err(range_err("command", format!("unknown command `{other}`"))),
    };
    if file.case.is_some() && !matches!(command, Command::Case(_)) {
        return Err(range_err("case", "only meaningful with command = \"case\""));
    }
    let d = ProjectOverrides::default();
    let p = file.project;
    let spec = RunSpec {
        command,
        master_seed: file.seed,
        reps: file.reps,
        output_dir: file.out.unwrap_or(defaults.output_dir),
        workers: file.workers.unwrap_or(defaults.workers),
        log_events: file.log_events.unwrap_or(false),
        input: file.input,
        project: ProjectOverrides {
            n_authors: p.n_authors,
            duration: p.duration.unwrap_or(d.duration),
            start_progress: p.start_progress.unwrap_or(d.start_progress),
            utility_spectrum: p.utility_spectrum.unwrap_or(d.utility_spectrum),
            contribution_spectrum: p.contribution_spectrum.unwrap_or(d.contribution_spectrum),
            discount_rate: p.discount_rate.unwrap_or(d.discount_rate),
            withdrawal_penalty: p.withdrawal_penalty.unwrap_or(d.withdrawal_penalty),
            w_std_ratio: p.w_std_ratio.unwrap_or(d.w_std_ratio),
        },
        fig1: Fig1Options {
            lattice_points: file.fig1.lattice_points.unwrap_or(defaults.fig1.lattice_points),
            author_counts: file.fig1.author_counts.unwrap_or(defaults.fig1.author_counts),
        },
        fig2: Fig2Options {
            author_counts: file.fig2.author_counts.unwrap_or(defaults.fig2.author_counts),
        },
    };
    spec.validate()?;
    Ok(spec)
}

/// Renders a spec back into run-file form. `parse_config(render_config(s)) == s`.
pub fn render_config(spec: &RunSpec) -> String {
    let p = &spec.project;
    let file = ConfigFile {
        command: Some(spec.command.name().to_string()),
        case: match spec.command {
            Command::Case(id) => Some(id.to_string()),
            _ => None,
        },
        seed: spec.master_seed,
        reps: spec.reps,
        out: Some(spec.output_dir.clone()),
        workers: Some(spec.workers),
        log_events: Some(spec.log_events),
        input: spec.input.clone(),
        project: ProjectSection {
            n_authors: p.n_authors,
            duration: Some(p.duration),
            start_progress: Some(p.start_progress),
            utility_spectrum: Some(p.utility_spectrum),
            contribution_spectrum: Some(p.contribution_spectrum),
            discount_rate: Some(p.discount_rate),
            withdrawal_penalty: Some(p.withdrawal_penalty),
            w_std_ratio: Some(p.w_std_ratio),
        },
        fig1: Fig1Section {
            lattice_points: Some(spec.fig1.lattice_points),
            author_counts: Some(spec.fig1.author_counts.clone()),
        },
        fig2: Fig2Section {
            author_counts: Some(spec.fig2.author_counts.clone()),
        },
    };
    toml::to_string(&file).expect("run specs always serialize")
}
