//! Monte Carlo simulator of the co-authorship ultimatum game.
//!
//! Authors contribute to a shared manuscript over discrete rounds and may
//! demand a better byline position, threatening to block submission. The
//! crate is layered bottom-up:
//!
//! - [`model`]: utilities, displacement, acceptance and target selection
//! - [`engine`]: the round loop and per-replication seeding
//! - [`scenario`]: parameter sampling, special cases and experiment grids
//! - [`replicate`]: deterministic parallel replication
//! - [`analysis`]: rates, regressions and the paired t-test
//! - [`config`], [`results`], [`experiment`]: run files, CSV/JSON output and
//!   the command orchestration used by the CLI

pub mod analysis;
pub mod config;
pub mod engine;
pub mod experiment;
pub mod model;
pub mod replicate;
pub mod results;
pub mod scenario;

pub use analysis::{RegressionResult, ReplicationStats, TTestResult};
pub use engine::{ProjectConfig, SeedPolicy, SimulationOutcome};
pub use model::{AuthorParams, AuthorState, DiscountParams, PositionUtilityParams, UltimatumProposal};
pub use scenario::{CaseId, ScenarioSpec};
