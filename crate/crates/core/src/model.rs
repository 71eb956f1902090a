//! Decision mathematics of the co-authorship ultimatum game.
//!
//! Everything here is a pure function of its inputs: position utilities,
//! discounting, the displacement rule, responder acceptance, issuer target
//! selection and the withdraw/hold choice. No RNG and no loop state.
//!
//! Positions are 1-based throughout (1 = first author). An author order is a
//! `Vec<usize>` where `order[p - 1]` is the index of the author at position `p`.

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Upper bound of both noise draws in the position utility curve.
pub const NOISE_MAX: f64 = 0.25;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ModelError {
    #[error("position {0} is out of range (positions start at 1)")]
    PositionOutOfRange(usize),
    #[error("target position {to} does not improve on current position {from}")]
    NotAnImprovement { from: usize, to: usize },
    #[error("responder at position {0} is the issuer")]
    ResponderIsIssuer(usize),
    #[error("issuer {issuer} is not at position {position} in the order")]
    IssuerMismatch { issuer: usize, position: usize },
    #[error("parameter `{name}` = {value} is outside {range}")]
    InvalidParameter {
        name: &'static str,
        value: f64,
        range: &'static str,
    },
}

/// Noise parameters of the personal position utility `(1 - r1) / (x + r2)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PositionUtilityParams {
    pub r1: f64,
    pub r2: f64,
}

impl PositionUtilityParams {
    pub fn new(r1: f64, r2: f64) -> Result<Self, ModelError> {
        check_range("r1", r1, 0.0, NOISE_MAX, "[0, 0.25]")?;
        check_range("r2", r2, 0.0, NOISE_MAX, "[0, 0.25]")?;
        Ok(Self { r1, r2 })
    }

    /// The curve `1 / x`.
    pub const fn noise_free() -> Self {
        Self { r1: 0.0, r2: 0.0 }
    }

    pub fn value(&self, position: usize) -> Result<f64, ModelError> {
        position_utility(*self, position)
    }

    // Callers inside this module have already validated the position.
    fn at(&self, position: usize) -> f64 {
        (1.0 - self.r1) / (position as f64 + self.r2)
    }
}

/// Static parameters of one author.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuthorParams {
    pub id: usize,
    /// Utility from the manuscript being submitted at all.
    pub u0: f64,
    pub u1: PositionUtilityParams,
    /// Mean per-round contribution, in normalized project units.
    pub w_mean: f64,
    pub w_std: f64,
}

impl AuthorParams {
    pub fn validate(&self) -> Result<(), ModelError> {
        if !(self.u0 > 0.0 && self.u0.is_finite()) {
            return Err(ModelError::InvalidParameter {
                name: "u0",
                value: self.u0,
                range: "(0, inf)",
            });
        }
        check_range("w_mean", self.w_mean, 0.0, f64::MAX, "[0, inf)")?;
        check_range("w_std", self.w_std, 0.0, f64::MAX, "[0, inf)")?;
        PositionUtilityParams::new(self.u1.r1, self.u1.r2).map(|_| ())
    }
}

/// An author during a game: parameters plus the mutable part of its state.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuthorState {
    pub params: AuthorParams,
    /// Accrued contribution `c`.
    pub contributed: f64,
    pub position: usize,
    pub has_issued: bool,
}

impl AuthorState {
    pub fn new(params: AuthorParams, position: usize) -> Self {
        Self {
            params,
            contributed: 0.0,
            position,
            has_issued: false,
        }
    }

    pub fn id(&self) -> usize {
        self.params.id
    }
}

/// Discounting of future completion utility and the cost of withdrawing a
/// rejected ultimatum.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DiscountParams {
    /// Per-round discount rate.
    pub discount_rate: f64,
    /// Fraction of accrued contribution forfeited on withdrawal.
    pub withdrawal_penalty: f64,
}

impl DiscountParams {
    pub fn new(discount_rate: f64, withdrawal_penalty: f64) -> Result<Self, ModelError> {
        check_range("discount_rate", discount_rate, 0.0, 1.0, "[0, 1]")?;
        check_range("withdrawal_penalty", withdrawal_penalty, 0.0, 1.0, "[0, 1]")?;
        Ok(Self {
            discount_rate,
            withdrawal_penalty,
        })
    }

    pub fn factor(&self, remaining_rounds: u32) -> f64 {
        (1.0 + self.discount_rate).powi(remaining_rounds as i32).recip()
    }
}

impl Default for DiscountParams {
    fn default() -> Self {
        Self {
            discount_rate: 0.0,
            withdrawal_penalty: 0.1,
        }
    }
}

/// A demand by `issuer` to move from `from_position` up to `to_position`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct UltimatumProposal {
    pub issuer: usize,
    pub from_position: usize,
    pub to_position: usize,
    pub round: u32,
    pub horizon: u32,
}

impl UltimatumProposal {
    pub fn remaining_rounds(&self) -> u32 {
        self.horizon.saturating_sub(self.round)
    }

    fn check(&self) -> Result<(), ModelError> {
        if self.to_position == 0 {
            return Err(ModelError::PositionOutOfRange(0));
        }
        if self.to_position >= self.from_position {
            return Err(ModelError::NotAnImprovement {
                from: self.from_position,
                to: self.to_position,
            });
        }
        Ok(())
    }
}

/// Outcome of an issuer's deliberation after a rejection.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum WithdrawDecision {
    Withdraw,
    Hold,
}

pub fn position_utility(params: PositionUtilityParams, position: usize) -> Result<f64, ModelError> {
    if position < 1 {
        return Err(ModelError::PositionOutOfRange(position));
    }
    Ok(params.at(position))
}

/// `u0 / (1 + discount_rate)^remaining_rounds`.
pub fn discounted_completion_utility(u0: f64, d: DiscountParams, remaining_rounds: u32) -> f64 {
    u0 * d.factor(remaining_rounds)
}

/// New position of the author at `responder_position` if `proposal` is
/// accepted. Only positions `k..j-1` move, each down by one.
pub fn displacement(proposal: &UltimatumProposal, responder_position: usize) -> Result<usize, ModelError> {
    if responder_position < 1 {
        return Err(ModelError::PositionOutOfRange(responder_position));
    }
    if responder_position == proposal.from_position {
        return Err(ModelError::ResponderIsIssuer(responder_position));
    }
    let (k, j) = (proposal.to_position, proposal.from_position);
    Ok(if k <= responder_position && responder_position < j {
        responder_position + 1
    } else {
        responder_position
    })
}

/// Discounted position-value loss the responder suffers if the proposal goes
/// through; zero for responders that are not displaced.
pub fn responder_loss(
    responder: &AuthorState,
    proposal: &UltimatumProposal,
    d: DiscountParams,
) -> Result<f64, ModelError> {
    let m = responder.position;
    let l = displacement(proposal, m)?;
    if l == m {
        return Ok(0.0);
    }
    let u1 = responder.params.u1;
    Ok(responder.params.u0 * (u1.at(m) - u1.at(l)) * d.factor(proposal.remaining_rounds()))
}

/// A responder accepts when it is not displaced or when its sunk
/// contribution strictly exceeds its discounted loss.
pub fn responder_accepts(
    responder: &AuthorState,
    proposal: &UltimatumProposal,
    d: DiscountParams,
) -> Result<bool, ModelError> {
    let loss = responder_loss(responder, proposal, d)?;
    Ok(loss == 0.0 || responder.contributed > loss)
}

/// Discounted utility the issuer gains by moving from its position to `to_position`.
pub fn issuer_gain(
    issuer: &AuthorState,
    to_position: usize,
    round: u32,
    horizon: u32,
    d: DiscountParams,
) -> Result<f64, ModelError> {
    let j = issuer.position;
    if to_position < 1 {
        return Err(ModelError::PositionOutOfRange(to_position));
    }
    if to_position >= j {
        return Err(ModelError::NotAnImprovement {
            from: j,
            to: to_position,
        });
    }
    let u1 = issuer.params.u1;
    let remaining = horizon.saturating_sub(round);
    Ok(issuer.params.u0 * (u1.at(to_position) - u1.at(j)) * d.factor(remaining))
}

/// Best position the issuer can demand such that every other author accepts.
///
/// Displacement sets only grow as the target moves up the list, so the
/// feasible targets are a contiguous run ending at `j - 1`; the scan stops at
/// the first infeasible target.
pub fn best_ultimatum(
    issuer: &AuthorState,
    others: &[AuthorState],
    round: u32,
    horizon: u32,
    d: DiscountParams,
) -> Option<UltimatumProposal> {
    if issuer.has_issued || issuer.position <= 1 {
        return None;
    }
    let j = issuer.position;
    let mut best = None;
    for k in (1..j).rev() {
        let proposal = UltimatumProposal {
            issuer: issuer.id(),
            from_position: j,
            to_position: k,
            round,
            horizon,
        };
        let all_accept = others
            .iter()
            .filter(|o| o.id() != issuer.id())
            .all(|o| responder_accepts(o, &proposal, d).unwrap_or(false));
        if !all_accept {
            break;
        }
        best = Some(proposal);
    }
    best
}

/// Issuer's choice after a rejection. Withdrawing keeps the discounted
/// status-quo payoff less the penalty; holding collapses the project and
/// loses the sunk contribution. Ties withdraw.
pub fn withdraw_or_hold(issuer: &AuthorState, round: u32, horizon: u32, d: DiscountParams) -> WithdrawDecision {
    let remaining = horizon.saturating_sub(round);
    let status_quo =
        discounted_completion_utility(issuer.params.u0, d, remaining) * issuer.params.u1.at(issuer.position.max(1));
    let withdraw = status_quo - d.withdrawal_penalty * issuer.contributed;
    let hold = -issuer.contributed;
    if withdraw >= hold {
        WithdrawDecision::Withdraw
    } else {
        WithdrawDecision::Hold
    }
}

/// Moves the issuer to the demanded position and shifts everyone it passes
/// down by one.
pub fn apply_ultimatum(order: &[usize], proposal: &UltimatumProposal) -> Result<Vec<usize>, ModelError> {
    proposal.check()?;
    let (k, j) = (proposal.to_position, proposal.from_position);
    if j > order.len() {
        return Err(ModelError::PositionOutOfRange(j));
    }
    if order[j - 1] != proposal.issuer {
        return Err(ModelError::IssuerMismatch {
            issuer: proposal.issuer,
            position: j,
        });
    }
    let mut next = order.to_vec();
    next[k - 1..j].rotate_right(1);
    Ok(next)
}

/// True when `order` holds each index `0..order.len()` exactly once.
pub fn is_permutation(order: &[usize]) -> bool {
    let mut seen = vec![false; order.len()];
    for &a in order {
        if a >= order.len() || std::mem::replace(&mut seen[a], true) {
            return false;
        }
    }
    true
}

fn check_range(name: &'static str, value: f64, lo: f64, hi: f64, range: &'static str) -> Result<(), ModelError> {
    if value.is_nan() || value < lo || value > hi {
        return Err(ModelError::InvalidParameter { name, value, range });
    }
    Ok(())
}
