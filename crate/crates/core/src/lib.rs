//! Monte Carlo simulation of human (H), machine (M) and human-machine (HM)
//! skill policies executing tasks of varying difficulty, with experiment
//! design and gain analytics on top.
//!
//! Pipeline: [`design`] builds scenarios, [`engine`] simulates them,
//! [`stats`] and [`analytics`] summarize the resulting metric sets, and
//! [`io`] moves everything through JSON and CSV files.

pub mod analytics;
pub mod config;
pub mod design;
pub mod engine;
pub mod error;
pub mod io;
pub mod model;
pub mod rng;
pub mod stats;
pub mod types;

pub use analytics::{HmgEntry, Metric, SubsetKey};
pub use config::{BetaEndpoints, EconParams, SimulationConfig, SkillSchedule};
pub use design::{DesignMethod, DesignPoint, DesignSpace, NumericRange};
pub use engine::{run_batch, run_simulation, MetricFrame, MetricRecord, RunOptions};
pub use error::{Result, SimError};
pub use model::{BetaParams, OutputCurve};
pub use stats::{summarize, Omega, SummaryStats};
pub use types::{Difficulty, InteractionKind, PerDifficulty, PerPolicy, PolicyKind};
