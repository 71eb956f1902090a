//! Configuration sampling: the default parameter ranges, the student/advisor
//! and two-group special cases, and the experiment grids built on them.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::engine::{ConfigError, ProjectConfig, SimRng};
use crate::model::{DiscountParams, PositionUtilityParams, NOISE_MAX};

pub const DEFAULT_SPECTRUM: (f64, f64) = (1.0, 5.0);
pub const DEFAULT_DURATION: (u32, u32) = (8, 88);
pub const DEFAULT_AUTHORS: (usize, usize) = (2, 8);
pub const DEFAULT_W_STD_RATIO: f64 = 0.1;

/// Width range of a "similar" spectrum in the special cases.
pub const SIMILAR: (f64, f64) = (1.0, 1.5);
/// Width range of a "different" spectrum in the special cases.
pub const DIFFERENT: (f64, f64) = (1.5, 3.0);

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ScenarioError {
    #[error("unknown scenario `{0}` (expected SA1..SA8, P1..P4 or default)")]
    UnknownCase(String),
    #[error("spectrum [{low}, {high}] is invalid (need 1 <= low <= high)")]
    Spectrum { low: f64, high: f64 },
    #[error("invalid {name} range [{low}, {high}]")]
    Range { name: &'static str, low: f64, high: f64 },
    #[error("experiment axis `{0}` is empty")]
    EmptyAxis(&'static str),
    #[error(transparent)]
    Config(#[from] ConfigError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SpectrumMode {
    /// Width drawn uniformly from `[low, high]`.
    SampledWidth,
    /// Width is exactly `high`.
    FixedWidth,
}

/// Spread between the largest and smallest value among the authors, given as
/// a ratio (the smallest value is always 1).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpectrumSpec {
    pub low: f64,
    pub high: f64,
    pub mode: SpectrumMode,
}

impl SpectrumSpec {
    pub fn sampled(low: f64, high: f64) -> Result<Self, ScenarioError> {
        let spec = Self {
            low,
            high,
            mode: SpectrumMode::SampledWidth,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn fixed(width: f64) -> Result<Self, ScenarioError> {
        let spec = Self {
            low: width,
            high: width,
            mode: SpectrumMode::FixedWidth,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<(), ScenarioError> {
        if !(self.low >= 1.0 && self.low <= self.high && self.high.is_finite()) {
            return Err(ScenarioError::Spectrum {
                low: self.low,
                high: self.high,
            });
        }
        Ok(())
    }

    pub fn sample_width(&self, rng: &mut SimRng) -> f64 {
        match self.mode {
            SpectrumMode::FixedWidth => self.high,
            SpectrumMode::SampledWidth if self.low == self.high => self.low,
            SpectrumMode::SampledWidth => rng.random_range(self.low..=self.high),
        }
    }
}

/// Draws a width `S` and spreads `n` values over `[1, S]`: the endpoints are
/// pinned and the interior is uniform. Sorted largest first.
pub fn sample_spectrum_values(spec: &SpectrumSpec, n: usize, rng: &mut SimRng) -> Vec<f64> {
    let width = spec.sample_width(rng);
    match n {
        0 => Vec::new(),
        1 => vec![width],
        _ => {
            let mut values = Vec::with_capacity(n);
            values.push(width);
            for _ in 0..n - 2 {
                values.push(if width > 1.0 {
                    rng.random_range(1.0..=width)
                } else {
                    1.0
                });
            }
            values.push(1.0);
            values.sort_by(|a, b| b.total_cmp(a));
            values
        }
    }
}

/// Scenario vocabulary shared by the CLI and the output files.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum CaseId {
    /// Student with one (1..=4) or two (5..=8) advisors.
    StudentAdvisor(u8),
    /// Two groups of two colleagues.
    Pairs(u8),
    Default,
    Custom,
}

impl CaseId {
    /// The twelve special cases in table order.
    pub fn special_cases() -> Vec<CaseId> {
        (1..=8)
            .map(CaseId::StudentAdvisor)
            .chain((1..=4).map(CaseId::Pairs))
            .collect()
    }

    /// (contribution differs, utility differs) for the special cases.
    fn row(&self) -> Option<(bool, bool)> {
        let k = match *self {
            CaseId::StudentAdvisor(k) => (k - 1) % 4,
            CaseId::Pairs(k) => k - 1,
            _ => return None,
        };
        Some((k % 2 == 1, k >= 2))
    }
}

impl fmt::Display for CaseId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CaseId::StudentAdvisor(k) => write!(f, "SA{k}"),
            CaseId::Pairs(k) => write!(f, "P{k}"),
            CaseId::Default => f.write_str("default"),
            CaseId::Custom => f.write_str("custom"),
        }
    }
}

impl FromStr for CaseId {
    type Err = ScenarioError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let unknown = || ScenarioError::UnknownCase(s.to_string());
        let upper = s.trim().to_ascii_uppercase();
        let parse_index = |digits: &str, max: u8| match digits.parse::<u8>() {
            Ok(k) if (1..=max).contains(&k) => Ok(k),
            _ => Err(unknown()),
        };
        match upper.as_str() {
            "DEFAULT" => Ok(CaseId::Default),
            "CUSTOM" => Ok(CaseId::Custom),
            _ => {
                if let Some(d) = upper.strip_prefix("SA") {
                    parse_index(d, 8).map(CaseId::StudentAdvisor)
                } else if let Some(d) = upper.strip_prefix('P') {
                    parse_index(d, 4).map(CaseId::Pairs)
                } else {
                    Err(unknown())
                }
            }
        }
    }
}

impl TryFrom<String> for CaseId {
    type Error = ScenarioError;

    fn try_from(s: String) -> Result<Self, Self::Error> {
        s.parse()
    }
}

impl From<CaseId> for String {
    fn from(c: CaseId) -> Self {
        c.to_string()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum AuthorCount {
    Fixed(usize),
    Uniform { min: usize, max: usize },
}

/// How sampled spectrum values are handed to authors.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Assignment {
    /// Both spectra sorted largest first and handed out by author index, so
    /// the top contributor also holds the highest completion utility.
    Ranked,
    /// Two equal-sized groups; the first takes the high endpoints, the second
    /// takes 1 on both spectra.
    Pairs,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioSpec {
    pub case_id: CaseId,
    pub n_authors: AuthorCount,
    pub contribution: SpectrumSpec,
    pub utility: SpectrumSpec,
    /// Inclusive range of the horizon in weeks.
    pub duration: (u32, u32),
    pub start_progress: (f64, f64),
    pub assignment: Assignment,
    pub discount: DiscountParams,
    pub w_std_ratio: f64,
}

impl Default for ScenarioSpec {
    fn default() -> Self {
        let spectrum = SpectrumSpec {
            low: DEFAULT_SPECTRUM.0,
            high: DEFAULT_SPECTRUM.1,
            mode: SpectrumMode::SampledWidth,
        };
        Self {
            case_id: CaseId::Default,
            n_authors: AuthorCount::Uniform {
                min: DEFAULT_AUTHORS.0,
                max: DEFAULT_AUTHORS.1,
            },
            contribution: spectrum,
            utility: spectrum,
            duration: DEFAULT_DURATION,
            start_progress: (0.0, 1.0),
            assignment: Assignment::Ranked,
            discount: DiscountParams::default(),
            w_std_ratio: DEFAULT_W_STD_RATIO,
        }
    }
}

impl ScenarioSpec {
    pub fn for_case(case: CaseId) -> Result<Self, ScenarioError> {
        Self::default().with_case(case)
    }

    /// Specializes this spec to a case, keeping its horizon, start point,
    /// discounting and contribution noise.
    pub fn with_case(&self, case: CaseId) -> Result<Self, ScenarioError> {
        let mut spec = self.clone();
        spec.case_id = case;
        let Some((contribution_differs, utility_differs)) = case.row() else {
            return match case {
                CaseId::Default => Ok(Self {
                    case_id: case,
                    ..Self::default_with_timing(self)
                }),
                _ => Ok(spec),
            };
        };
        let range = |differs| if differs { DIFFERENT } else { SIMILAR };
        let (c_lo, c_hi) = range(contribution_differs);
        let (u_lo, u_hi) = range(utility_differs);
        spec.contribution = SpectrumSpec::sampled(c_lo, c_hi)?;
        spec.utility = SpectrumSpec::sampled(u_lo, u_hi)?;
        (spec.n_authors, spec.assignment) = match case {
            CaseId::StudentAdvisor(k) if k <= 4 => (AuthorCount::Fixed(2), Assignment::Ranked),
            CaseId::StudentAdvisor(_) => (AuthorCount::Fixed(3), Assignment::Ranked),
            _ => (AuthorCount::Fixed(4), Assignment::Pairs),
        };
        Ok(spec)
    }

    fn default_with_timing(base: &Self) -> Self {
        Self {
            duration: base.duration,
            start_progress: base.start_progress,
            discount: base.discount,
            w_std_ratio: base.w_std_ratio,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<(), ScenarioError> {
        self.contribution.validate()?;
        self.utility.validate()?;
        let (lo, hi) = self.duration;
        if lo == 0 || lo > hi {
            return Err(ScenarioError::Range {
                name: "duration",
                low: f64::from(lo),
                high: f64::from(hi),
            });
        }
        let (lo, hi) = self.start_progress;
        if !(0.0 <= lo && lo <= hi && hi <= 1.0) {
            return Err(ScenarioError::Range {
                name: "start_progress",
                low: lo,
                high: hi,
            });
        }
        let (lo, hi) = match self.n_authors {
            AuthorCount::Fixed(n) => (n, n),
            AuthorCount::Uniform { min, max } => (min, max),
        };
        if lo == 0 || lo > hi {
            return Err(ScenarioError::Range {
                name: "n_authors",
                low: lo as f64,
                high: hi as f64,
            });
        }
        if !(self.w_std_ratio >= 0.0 && self.w_std_ratio.is_finite()) {
            return Err(ScenarioError::Range {
                name: "w_std_ratio",
                low: self.w_std_ratio,
                high: self.w_std_ratio,
            });
        }
        DiscountParams::new(self.discount.discount_rate, self.discount.withdrawal_penalty)
            .map_err(ConfigError::from)?;
        Ok(())
    }

    /// Draws one project from this scenario.
    pub fn sample(&self, rng: &mut SimRng) -> Result<ProjectConfig, ScenarioError> {
        let n = match self.n_authors {
            AuthorCount::Fixed(n) => n,
            AuthorCount::Uniform { min, max } => rng.random_range(min..=max),
        };
        let horizon = rng.random_range(self.duration.0..=self.duration.1);
        let (lo, hi) = self.start_progress;
        let start_progress = if lo == hi { lo } else { rng.random_range(lo..=hi) };
        let (shares, u0) = match self.assignment {
            Assignment::Ranked => (
                sample_spectrum_values(&self.contribution, n, rng),
                sample_spectrum_values(&self.utility, n, rng),
            ),
            Assignment::Pairs => {
                let c = self.contribution.sample_width(rng);
                let u = self.utility.sample_width(rng);
                let leading = n.div_ceil(2);
                let split = |high: f64| (0..n).map(|i| if i < leading { high } else { 1.0 }).collect();
                (split(c), split(u))
            }
        };
        let u1: Vec<PositionUtilityParams> = (0..n)
            .map(|_| PositionUtilityParams {
                r1: rng.random_range(0.0..=NOISE_MAX),
                r2: rng.random_range(0.0..=NOISE_MAX),
            })
            .collect();
        Ok(ProjectConfig::from_shares(
            horizon,
            start_progress,
            &shares,
            &u0,
            &u1,
            self.w_std_ratio,
            self.discount,
        )?)
    }
}

/// A project drawn from the default parameter ranges.
pub fn default_config(rng: &mut SimRng) -> ProjectConfig {
    ScenarioSpec::default().sample(rng).expect("default scenario is valid")
}

pub fn case_config(case: CaseId, rng: &mut SimRng) -> Result<ProjectConfig, ScenarioError> {
    ScenarioSpec::for_case(case)?.sample(rng)
}

/// Identifies one cell of an experiment grid.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum CellKey {
    Spectra { authors: usize, u_width: f64, c_width: f64 },
    Duration { authors: usize, weeks: u32 },
    Progress { authors: usize, progress: f64 },
    Positions { authors: usize },
    Case(CaseId),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridCell {
    pub key: CellKey,
    pub scenario: ScenarioSpec,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentGrid {
    pub cells: Vec<GridCell>,
    pub reps: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Fig2Kind {
    Duration,
    Progress,
    PositionMatrix,
}

/// Horizons covered by the duration sweep, 8 to 88 weeks in steps of 10.
pub const DURATION_POINTS: [u32; 9] = [8, 18, 28, 38, 48, 58, 68, 78, 88];

/// Start points covered by the progress sweep.
pub fn progress_points() -> Vec<f64> {
    (0..=10).map(|i| f64::from(i) / 10.0).collect()
}

/// `points` evenly spaced widths from 1 to 5 inclusive.
pub fn spectrum_lattice(points: usize) -> Vec<f64> {
    let (lo, hi) = DEFAULT_SPECTRUM;
    match points {
        0 => Vec::new(),
        1 => vec![lo],
        _ => (0..points)
            .map(|i| lo + (hi - lo) * i as f64 / (points - 1) as f64)
            .collect(),
    }
}

fn check_axes(author_counts: &[usize], reps: u64) -> Result<(), ScenarioError> {
    if author_counts.is_empty() {
        return Err(ScenarioError::EmptyAxis("authors"));
    }
    if reps == 0 {
        return Err(ScenarioError::EmptyAxis("reps"));
    }
    Ok(())
}

/// Utility × contribution spectrum lattice per author count, with both widths
/// fixed in each cell.
pub fn fig1_grid(
    base: &ScenarioSpec,
    author_counts: &[usize],
    lattice_points: usize,
    reps: u64,
) -> Result<ExperimentGrid, ScenarioError> {
    check_axes(author_counts, reps)?;
    let lattice = spectrum_lattice(lattice_points);
    if lattice.is_empty() {
        return Err(ScenarioError::EmptyAxis("lattice"));
    }
    let mut cells = Vec::with_capacity(author_counts.len() * lattice.len() * lattice.len());
    for &authors in author_counts {
        for &u_width in &lattice {
            for &c_width in &lattice {
                let scenario = ScenarioSpec {
                    n_authors: AuthorCount::Fixed(authors),
                    utility: SpectrumSpec::fixed(u_width)?,
                    contribution: SpectrumSpec::fixed(c_width)?,
                    ..base.clone()
                };
                cells.push(GridCell {
                    key: CellKey::Spectra {
                        authors,
                        u_width,
                        c_width,
                    },
                    scenario,
                });
            }
        }
    }
    Ok(ExperimentGrid { cells, reps })
}

pub fn fig2_sweep(
    base: &ScenarioSpec,
    kind: Fig2Kind,
    author_counts: &[usize],
    reps: u64,
) -> Result<ExperimentGrid, ScenarioError> {
    check_axes(author_counts, reps)?;
    let mut cells = Vec::new();
    for &authors in author_counts {
        let per_count = ScenarioSpec {
            n_authors: AuthorCount::Fixed(authors),
            ..base.clone()
        };
        match kind {
            Fig2Kind::Duration => {
                for weeks in DURATION_POINTS {
                    cells.push(GridCell {
                        key: CellKey::Duration { authors, weeks },
                        scenario: ScenarioSpec {
                            duration: (weeks, weeks),
                            ..per_count.clone()
                        },
                    });
                }
            }
            Fig2Kind::Progress => {
                for progress in progress_points() {
                    cells.push(GridCell {
                        key: CellKey::Progress { authors, progress },
                        scenario: ScenarioSpec {
                            start_progress: (progress, progress),
                            ..per_count.clone()
                        },
                    });
                }
            }
            Fig2Kind::PositionMatrix => cells.push(GridCell {
                key: CellKey::Positions { authors },
                scenario: per_count,
            }),
        }
    }
    Ok(ExperimentGrid { cells, reps })
}

/// One cell per special case, in table order.
pub fn fig3_grid(base: &ScenarioSpec, reps: u64) -> Result<ExperimentGrid, ScenarioError> {
    check_axes(&[0], reps)?;
    let cells = CaseId::special_cases()
        .into_iter()
        .map(|case| {
            Ok(GridCell {
                key: CellKey::Case(case),
                scenario: base.with_case(case)?,
            })
        })
        .collect::<Result<_, ScenarioError>>()?;
    Ok(ExperimentGrid { cells, reps })
}
