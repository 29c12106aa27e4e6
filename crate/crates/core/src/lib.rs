//! Delay-tolerant routing in a mobility-pattern space.
//!
//! Nodes move among `N` locations following power-law preferences; each
//! node's location probabilities form a point in an `N`-dimensional space.
//! Bundles are forwarded greedily toward nodes whose pattern is more similar
//! to the destination's. The crate contains the mobility model, the
//! similarity metrics, the routing policies (plus Epidemic, Opportunistic and
//! Random baselines), a deterministic discrete-event engine and the
//! statistics used to compare them.

pub mod analysis;
pub mod cli;
pub mod engine;
pub mod error;
pub mod metrics;
pub mod mobility;
pub mod patterns;
pub mod routing;
pub mod time;

pub use engine::{run, run_matrix, RunStats, ScenarioConfig, Simulation};
pub use error::{Error, Result};
pub use metrics::MetricKind;
pub use routing::{KnowledgeScope, Policy};
