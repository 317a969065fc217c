//! Search-based falsification of vision-guided UAV landing systems.
//!
//! Scenarios are encoded as fixed-length chromosomes, explored offline by a
//! diversity-aware NSGA-II and perturbed online by a DQN that steers the
//! dynamic objects while a landing stack runs in a deterministic simulator.

pub mod engine;
pub mod episode;
pub mod ga;
pub mod geom;
pub mod metrics;
pub mod perception;
pub mod persist;
pub mod planner;
pub mod rl;
pub mod scenario;
pub mod sut;
pub mod world;

pub use engine::{run_campaign, CampaignConfig, CampaignResult, Method};
pub use episode::{run_episode, EpisodeTrace, SimContext, TerminalOutcome};
pub use metrics::{classify, ViolationRecord, ViolationType};
pub use scenario::{ScenarioChromosome, ScenarioError};
