//! Scenario configuration and its JSON document form.
//!
//! The serde layout of [`SimulationConfig`] *is* the config document:
//!
//! ```json
//! {
//!   "config_id": "exp1-s3",
//!   "n_firms": 1, "n_epochs": 10, "n_runs": 1000,
//!   "p_policy": {"H": 0.3333333333333333, "HM": 0.3333333333333333, "M": 0.3333333333333334},
//!   "p_difficulty": {"Low": 0.3333333333333333, "Med": 0.3333333333333333, "High": 0.3333333333333334},
//!   "schedule": {"H": {"Low": {"start": [6, 2], "end": [6, 2]}, "Med": ..., "High": ...}, "M": {...}},
//!   "interaction": "superpower",
//!   "gamma_hm": 1.5,
//!   "curve": {"kind": "logistic", "params": {"k": 5.0}},
//!   "econ": {"mc": {"H": 0.5, "HM": 0.2, "M": 0.7}, "delta": {"H": 0.0, "HM": 0.3, "M": 0.0},
//!            "t_err": 0.3, "c_err": 0.9},
//!   "seed": 42
//! }
//! ```

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Result, SimError};
use crate::model::{validate_probs, BetaParams, OutputCurve};
use crate::types::{Difficulty, InteractionKind, PerDifficulty, PerPolicy, PolicyKind};

/// Beta parameters at the first and last epoch; intermediate epochs interpolate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BetaEndpoints {
    pub start: BetaParams,
    pub end: BetaParams,
}

impl BetaEndpoints {
    pub fn constant(p: BetaParams) -> Self {
        BetaEndpoints { start: p, end: p }
    }
}

/// Performance distributions for the H and M policies, per difficulty.
/// HM has no entry: its performance is derived from the H and M draws.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SkillSchedule {
    #[serde(rename = "H")]
    pub human: PerDifficulty<BetaEndpoints>,
    #[serde(rename = "M")]
    pub machine: PerDifficulty<BetaEndpoints>,
}

impl SkillSchedule {
    pub fn get(&self, c: PolicyKind, d: Difficulty) -> Option<BetaEndpoints> {
        match c {
            PolicyKind::H => Some(self.human.get(d)),
            PolicyKind::M => Some(self.machine.get(d)),
            PolicyKind::HM => None,
        }
    }

    fn validate(&self, path: &str) -> Result<()> {
        for c in [PolicyKind::H, PolicyKind::M] {
            for d in Difficulty::ALL {
                let cell = self.get(c, d).expect("H and M always have a schedule");
                cell.start.validate(&format!("{path}.{c}.{d}.start"))?;
                cell.end.validate(&format!("{path}.{c}.{d}.end"))?;
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EconParams {
    /// Unit margin of contribution per policy.
    pub mc: PerPolicy<f64>,
    /// Relative margin change from the first to the last epoch.
    pub delta: PerPolicy<f64>,
    /// Shortfall `1 - theta` at which the error penalty triggers.
    pub t_err: f64,
    /// Penalty per unit of shortfall.
    pub c_err: f64,
}

impl EconParams {
    fn validate(&self, path: &str) -> Result<()> {
        for c in PolicyKind::ALL {
            let mc = self.mc.get(c);
            if !(0.0..=1.0).contains(&mc) {
                return Err(SimError::config(
                    format!("{path}.mc.{c}"),
                    format!("must lie in [0, 1], got {mc}"),
                ));
            }
            let delta = self.delta.get(c);
            if !(delta.is_finite() && delta >= -1.0) {
                return Err(SimError::config(
                    format!("{path}.delta.{c}"),
                    format!("must be finite and >= -1, got {delta}"),
                ));
            }
        }
        unit_interval(self.t_err, &format!("{path}.t_err"))?;
        unit_interval(self.c_err, &format!("{path}.c_err"))
    }
}

fn unit_interval(v: f64, path: &str) -> Result<()> {
    if (0.0..=1.0).contains(&v) {
        Ok(())
    } else {
        Err(SimError::config(path, format!("must lie in [0, 1], got {v}")))
    }
}

/// One fully specified scenario.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulationConfig {
    #[serde(default)]
    pub config_id: String,
    pub n_firms: usize,
    pub n_epochs: usize,
    pub n_runs: usize,
    pub p_policy: PerPolicy<f64>,
    pub p_difficulty: PerDifficulty<f64>,
    pub schedule: SkillSchedule,
    pub interaction: InteractionKind,
    pub gamma_hm: f64,
    pub curve: OutputCurve,
    pub econ: EconParams,
    pub seed: u64,
}

impl SimulationConfig {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("n_firms", self.n_firms),
            ("n_epochs", self.n_epochs),
            ("n_runs", self.n_runs),
        ] {
            if v == 0 {
                return Err(SimError::config(name, "must be a positive integer"));
            }
        }
        validate_probs(&self.p_policy.to_array(), 3, "p_policy")?;
        validate_probs(&self.p_difficulty.to_array(), 3, "p_difficulty")?;
        self.schedule.validate("schedule")?;
        if self.interaction == InteractionKind::Individual {
            return Err(SimError::config(
                "interaction",
                "`individual` is a reporting label; choose min, max, mean, collaborate or superpower",
            ));
        }
        if !(self.gamma_hm.is_finite() && self.gamma_hm >= 1.0) {
            return Err(SimError::config(
                "gamma_hm",
                format!("must be >= 1, got {}", self.gamma_hm),
            ));
        }
        self.curve.validate("curve")?;
        self.econ.validate("econ")
    }

    /// Parses and validates a config document. Errors carry the offending key path.
    pub fn from_json(text: &str) -> Result<Self> {
        let de = &mut serde_json::Deserializer::from_str(text);
        let cfg: SimulationConfig = serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            SimError::config(path, e.into_inner().to_string())
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serialization is infallible")
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| SimError::io(path, e))?;
        Self::from_json(&text).map_err(|e| match e {
            SimError::Config { path: key, message } => {
                SimError::config(key, format!("{message} (in {})", path.display()))
            }
            other => other,
        })
    }

    /// A small single-firm exploratory scenario: uniform policies and difficulties, logistic
    /// output with k = 5, `mc = (0.5, 0.2, 0.7)`, `t_err = 0.3`, `c_err = 0.9`.
    ///
    /// The Beta schedule is illustrative: the machine's mean skill beats the
    /// human's by at least 0.1 on Low and Med tasks throughout, and trails it
    /// by at least 0.15 on High ones.
    pub fn example() -> Self {
        let third = 1.0 / 3.0;
        let b = BetaParams::new;
        SimulationConfig {
            config_id: "example".into(),
            n_firms: 1,
            n_epochs: 10,
            n_runs: 1000,
            p_policy: PerPolicy::new(third, third, 1.0 - 2.0 * third),
            p_difficulty: PerDifficulty::new(third, third, 1.0 - 2.0 * third),
            schedule: SkillSchedule {
                human: PerDifficulty::new(
                    BetaEndpoints::constant(b(6.0, 2.0)),
                    BetaEndpoints::constant(b(5.0, 3.0)),
                    BetaEndpoints::constant(b(4.0, 4.0)),
                ),
                machine: PerDifficulty::new(
                    BetaEndpoints {
                        start: b(9.0, 1.0),
                        end: b(12.0, 1.0),
                    },
                    BetaEndpoints {
                        start: b(8.0, 2.0),
                        end: b(10.0, 2.0),
                    },
                    BetaEndpoints {
                        start: b(2.0, 5.0),
                        end: b(2.5, 5.0),
                    },
                ),
            },
            interaction: InteractionKind::Superpower,
            gamma_hm: 1.5,
            curve: OutputCurve::Logistic { k: 5.0 },
            econ: EconParams {
                mc: PerPolicy::new(0.5, 0.2, 0.7),
                delta: PerPolicy::new(0.0, 0.3, 0.0),
                t_err: 0.3,
                c_err: 0.9,
            },
            seed: 42,
        }
    }
}
