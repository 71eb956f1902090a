//! Discrete-round game loop.
//!
//! A project starts part-way through (deterministic expected accrual up to the
//! start round), then plays rounds until the accrued total reaches the
//! completion threshold. In each round every author contributes once, in a
//! freshly shuffled order. After every single contribution the authors get a
//! chance to issue an ultimatum: the contributor first, then the others in
//! that round's order. Each author issues at most once per project.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{
    apply_ultimatum, best_ultimatum, discounted_completion_utility, is_permutation, responder_accepts,
    withdraw_or_hold, AuthorParams, AuthorState, DiscountParams, ModelError, PositionUtilityParams, UltimatumProposal,
    WithdrawDecision,
};

/// Generator behind every stochastic draw in the crate.
pub type SimRng = ChaCha8Rng;

/// Slack when comparing the accrued total against the threshold and when
/// checking the contribution normalization.
pub const NORMALIZATION_TOLERANCE: f64 = 1e-9;

/// Runaway guard: a project is stopped after this many multiples of its horizon.
pub const HORIZON_CAP_FACTOR: u32 = 4;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ConfigError {
    #[error("a project needs at least one author")]
    NoAuthors,
    #[error("horizon must be at least one round")]
    ZeroHorizon,
    #[error("start_progress {0} is outside [0, 1]")]
    StartProgress(f64),
    #[error("threshold {0} must be positive")]
    Threshold(f64),
    #[error("author ids must be 0..N in order, found {found} at index {index}")]
    AuthorIds { index: usize, found: usize },
    #[error("per-round means sum to {0} over the horizon, expected 1")]
    Normalization(f64),
    #[error("contribution shares must be non-negative with a positive sum")]
    Shares,
    #[error("utility list has {got} entries for {expected} authors")]
    UtilityCount { expected: usize, got: usize },
    #[error(transparent)]
    Model(#[from] ModelError),
}

/// One fully sampled game instance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProjectConfig {
    /// Horizon `T` in rounds (weeks).
    pub horizon_rounds: u32,
    pub start_progress: f64,
    pub authors: Vec<AuthorParams>,
    pub discount: DiscountParams,
    pub threshold: f64,
}

impl ProjectConfig {
    /// Builds a configuration from relative contribution shares. Shares are
    /// rescaled so the per-round means sum to one over the horizon, and each
    /// author's per-round std is `w_std_ratio` times its mean.
    pub fn from_shares(
        horizon_rounds: u32,
        start_progress: f64,
        shares: &[f64],
        u0: &[f64],
        u1: &[PositionUtilityParams],
        w_std_ratio: f64,
        discount: DiscountParams,
    ) -> Result<Self, ConfigError> {
        if shares.is_empty() {
            return Err(ConfigError::NoAuthors);
        }
        if u0.len() != shares.len() || u1.len() != shares.len() {
            return Err(ConfigError::UtilityCount {
                expected: shares.len(),
                got: u0.len().min(u1.len()),
            });
        }
        if horizon_rounds == 0 {
            return Err(ConfigError::ZeroHorizon);
        }
        let total: f64 = shares.iter().sum();
        if shares.iter().any(|&s| s < 0.0 || !s.is_finite()) || total <= 0.0 {
            return Err(ConfigError::Shares);
        }
        let scale = total * f64::from(horizon_rounds);
        let authors = shares
            .iter()
            .zip(u0)
            .zip(u1)
            .enumerate()
            .map(|(id, ((&s, &u0), &u1))| {
                let w_mean = s / scale;
                AuthorParams {
                    id,
                    u0,
                    u1,
                    w_mean,
                    w_std: w_std_ratio * w_mean,
                }
            })
            .collect();
        let config = Self {
            horizon_rounds,
            start_progress,
            authors,
            discount,
            threshold: 1.0,
        };
        config.validate()?;
        Ok(config)
    }

    pub fn n_authors(&self) -> usize {
        self.authors.len()
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.authors.is_empty() {
            return Err(ConfigError::NoAuthors);
        }
        if self.horizon_rounds == 0 {
            return Err(ConfigError::ZeroHorizon);
        }
        if !(0.0..=1.0).contains(&self.start_progress) {
            return Err(ConfigError::StartProgress(self.start_progress));
        }
        if self.threshold.is_nan() || self.threshold <= 0.0 {
            return Err(ConfigError::Threshold(self.threshold));
        }
        for (index, a) in self.authors.iter().enumerate() {
            if a.id != index {
                return Err(ConfigError::AuthorIds { index, found: a.id });
            }
            a.validate()?;
        }
        DiscountParams::new(self.discount.discount_rate, self.discount.withdrawal_penalty)?;
        let sum: f64 = self.authors.iter().map(|a| a.w_mean).sum::<f64>() * f64::from(self.horizon_rounds);
        if (sum - 1.0).abs() > NORMALIZATION_TOLERANCE {
            return Err(ConfigError::Normalization(sum));
        }
        Ok(())
    }

    /// Initial author order: by mean contribution, largest first, ties by index.
    pub fn initial_order(&self) -> Vec<usize> {
        let mut order: Vec<usize> = (0..self.n_authors()).collect();
        order.sort_by(|&a, &b| {
            self.authors[b]
                .w_mean
                .total_cmp(&self.authors[a].w_mean)
                .then(a.cmp(&b))
        });
        order
    }

    /// Round from which play starts, `round(start_progress * T)`.
    pub fn start_round(&self) -> u32 {
        (self.start_progress * f64::from(self.horizon_rounds)).round() as u32
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum EventOutcome {
    Accepted,
    RejectedWithdrawn,
    RejectedHeld,
}

impl EventOutcome {
    pub fn as_str(&self) -> &'static str {
        match self {
            Self::Accepted => "accepted",
            Self::RejectedWithdrawn => "rejected-withdrawn",
            Self::RejectedHeld => "rejected-held",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct UltimatumEvent {
    /// Round being played when the ultimatum was issued (1-based).
    pub round: u32,
    pub issuer: usize,
    pub from_position: usize,
    pub to_position: usize,
    pub outcome: EventOutcome,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationOutcome {
    pub completed: bool,
    pub rounds_elapsed: u32,
    pub events: Vec<UltimatumEvent>,
    pub initial_order: Vec<usize>,
    pub final_order: Vec<usize>,
    /// Indexed by author id.
    pub payoffs: Vec<f64>,
}

impl SimulationOutcome {
    pub fn n_authors(&self) -> usize {
        self.initial_order.len()
    }

    pub fn has_ultimatum(&self) -> bool {
        !self.events.is_empty()
    }

    /// 1-based initial position of an author.
    pub fn initial_position(&self, author: usize) -> Option<usize> {
        self.initial_order.iter().position(|&a| a == author).map(|p| p + 1)
    }
}

/// Identifies one replication's random stream.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SeedPolicy {
    pub master_seed: u64,
    pub replication_index: u64,
}

impl SeedPolicy {
    pub fn new(master_seed: u64, replication_index: u64) -> Self {
        Self {
            master_seed,
            replication_index,
        }
    }

    /// ChaCha stream `replication_index` of the key derived from `master_seed`.
    pub fn rng(&self) -> SimRng {
        let mut rng = SimRng::seed_from_u64(self.master_seed);
        rng.set_stream(self.replication_index);
        rng
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimulationState {
    /// Rounds completed so far, counting the deterministic prefix.
    pub round: u32,
    pub authors: Vec<AuthorState>,
    pub order: Vec<usize>,
    pub total_contributed: f64,
    pub events: Vec<UltimatumEvent>,
    pub collapsed: bool,
    penalties: Vec<f64>,
}

impl SimulationState {
    pub fn penalties(&self) -> &[f64] {
        &self.penalties
    }

    fn sync_positions(&mut self) {
        for (p, &a) in self.order.iter().enumerate() {
            self.authors[a].position = p + 1;
        }
    }

    fn try_issue(&mut self, author: usize, round: u32, config: &ProjectConfig) {
        let issuer = &self.authors[author];
        if issuer.has_issued || issuer.position <= 1 {
            return;
        }
        if let Some(proposal) = best_ultimatum(issuer, &self.authors, round, config.horizon_rounds, config.discount) {
            self.resolve(&proposal, config)
                .expect("best_ultimatum returns proposals valid for the current order");
        }
    }

    /// Puts a proposal to every other author and applies the outcome:
    /// reorder on unanimous acceptance, otherwise the issuer withdraws (and
    /// pays the penalty) or holds (and the project collapses).
    pub fn resolve(
        &mut self,
        proposal: &UltimatumProposal,
        config: &ProjectConfig,
    ) -> Result<EventOutcome, ModelError> {
        let next_order = apply_ultimatum(&self.order, proposal)?;
        let mut accepted = true;
        for other in self.authors.iter().filter(|a| a.id() != proposal.issuer) {
            accepted &= responder_accepts(other, proposal, config.discount)?;
        }
        let issuer = proposal.issuer;
        self.authors[issuer].has_issued = true;
        let outcome = if accepted {
            self.order = next_order;
            self.sync_positions();
            EventOutcome::Accepted
        } else {
            match withdraw_or_hold(&self.authors[issuer], proposal.round, proposal.horizon, config.discount) {
                WithdrawDecision::Withdraw => {
                    self.penalties[issuer] += config.discount.withdrawal_penalty * self.authors[issuer].contributed;
                    EventOutcome::RejectedWithdrawn
                }
                WithdrawDecision::Hold => {
                    self.collapsed = true;
                    EventOutcome::RejectedHeld
                }
            }
        };
        self.events.push(UltimatumEvent {
            round: proposal.round,
            issuer,
            from_position: proposal.from_position,
            to_position: proposal.to_position,
            outcome,
        });
        Ok(outcome)
    }

    fn reached_threshold(&self, config: &ProjectConfig) -> bool {
        self.total_contributed >= config.threshold - NORMALIZATION_TOLERANCE
    }

    /// Plays one round.
    pub fn step_round(&mut self, config: &ProjectConfig, rng: &mut SimRng) {
        let round = self.round + 1;
        let mut turn: Vec<usize> = (0..self.authors.len()).collect();
        turn.shuffle(rng);
        for &author in &turn {
            let amount = sample_contribution(&self.authors[author].params, rng);
            self.authors[author].contributed += amount;
            self.total_contributed += amount;
            if self.reached_threshold(config) {
                break;
            }
            self.try_issue(author, round, config);
            for &other in turn.iter().filter(|&&o| o != author) {
                if self.collapsed {
                    break;
                }
                self.try_issue(other, round, config);
            }
            if self.collapsed {
                break;
            }
        }
        self.round = round;
    }

    pub fn is_complete(&self, config: &ProjectConfig) -> bool {
        is_complete(self, config)
    }
}

/// Sets up a project at its start point with deterministic expected accrual
/// `start_progress * T * w_mean` per author.
pub fn init_project(config: &ProjectConfig) -> SimulationState {
    let order = config.initial_order();
    let prefix = config.start_progress * f64::from(config.horizon_rounds);
    let mut authors: Vec<AuthorState> = config
        .authors
        .iter()
        .map(|p| {
            let mut s = AuthorState::new(p.clone(), 0);
            s.contributed = prefix * p.w_mean;
            s
        })
        .collect();
    for (p, &a) in order.iter().enumerate() {
        authors[a].position = p + 1;
    }
    let total_contributed = authors.iter().map(|a| a.contributed).sum();
    SimulationState {
        round: config.start_round(),
        penalties: vec![0.0; authors.len()],
        authors,
        order,
        total_contributed,
        events: Vec::new(),
        collapsed: false,
    }
}

/// One round's contribution: `Normal(w_mean, w_std)` clamped at zero.
pub fn sample_contribution(author: &AuthorParams, rng: &mut SimRng) -> f64 {
    if author.w_std == 0.0 {
        return author.w_mean;
    }
    let normal = Normal::new(author.w_mean, author.w_std).expect("w_std is finite and non-negative");
    normal.sample(rng).max(0.0)
}

/// A project is over once the threshold is reached, the runaway cap is hit,
/// or a held ultimatum collapsed it.
pub fn is_complete(state: &SimulationState, config: &ProjectConfig) -> bool {
    state.collapsed || state.reached_threshold(config) || state.round >= HORIZON_CAP_FACTOR * config.horizon_rounds
}

pub fn run_simulation(config: &ProjectConfig, seed: SeedPolicy) -> SimulationOutcome {
    run_with_rng(config, &mut seed.rng())
}

/// Plays a project to the end on a caller-supplied stream.
pub fn run_with_rng(config: &ProjectConfig, rng: &mut SimRng) -> SimulationOutcome {
    let mut state = init_project(config);
    let initial_order = state.order.clone();
    let start = state.round;
    while !state.is_complete(config) {
        state.step_round(config, rng);
    }
    debug_assert!(is_permutation(&state.order));
    let remaining = config.horizon_rounds.saturating_sub(state.round);
    let payoffs = state
        .authors
        .iter()
        .zip(state.penalties())
        .map(|(a, penalty)| {
            if state.collapsed {
                -a.contributed
            } else {
                let u1 = a.params.u1.value(a.position).expect("positions are 1-based");
                discounted_completion_utility(a.params.u0, config.discount, remaining) * u1 - penalty
            }
        })
        .collect();
    SimulationOutcome {
        completed: !state.collapsed,
        rounds_elapsed: state.round - start,
        events: state.events,
        initial_order,
        final_order: state.order,
        payoffs,
    }
}
