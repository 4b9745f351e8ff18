//! Categorical axes shared across the engine, design and analytics layers.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::SimError;

/// Who executes a task: human only, human and machine together, or machine only.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum PolicyKind {
    H,
    HM,
    M,
}

impl PolicyKind {
    pub const ALL: [PolicyKind; 3] = [PolicyKind::H, PolicyKind::HM, PolicyKind::M];

    pub fn as_str(self) -> &'static str {
        match self {
            PolicyKind::H => "H",
            PolicyKind::HM => "HM",
            PolicyKind::M => "M",
        }
    }
}

/// Generalization difficulty of a task at inference time.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Difficulty {
    Low,
    Med,
    High,
}

impl Difficulty {
    pub const ALL: [Difficulty; 3] = [Difficulty::Low, Difficulty::Med, Difficulty::High];

    pub fn as_str(self) -> &'static str {
        match self {
            Difficulty::Low => "Low",
            Difficulty::Med => "Med",
            Difficulty::High => "High",
        }
    }
}

/// How human and machine performance combine under the HM policy.
///
/// `Individual` never selects a combination function; it labels records
/// whose policy is H or M.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InteractionKind {
    Min,
    Max,
    Mean,
    Collaborate,
    Superpower,
    Individual,
}

impl InteractionKind {
    /// The augmentation variants explored by the experiment design and HMG tables.
    pub const AUGMENTING: [InteractionKind; 3] = [
        InteractionKind::Mean,
        InteractionKind::Collaborate,
        InteractionKind::Superpower,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            InteractionKind::Min => "min",
            InteractionKind::Max => "max",
            InteractionKind::Mean => "mean",
            InteractionKind::Collaborate => "collaborate",
            InteractionKind::Superpower => "superpower",
            InteractionKind::Individual => "individual",
        }
    }
}

macro_rules! display_from_str {
    ($ty:ty, $what:literal, [$($variant:path),+]) => {
        impl fmt::Display for $ty {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(self.as_str())
            }
        }

        impl FromStr for $ty {
            type Err = SimError;

            fn from_str(s: &str) -> Result<Self, Self::Err> {
                $(
                    if s.eq_ignore_ascii_case($variant.as_str()) {
                        return Ok($variant);
                    }
                )+
                Err(SimError::usage(format!("unknown {} `{}`", $what, s)))
            }
        }
    };
}

display_from_str!(PolicyKind, "policy", [PolicyKind::H, PolicyKind::HM, PolicyKind::M]);
display_from_str!(
    Difficulty,
    "difficulty",
    [Difficulty::Low, Difficulty::Med, Difficulty::High]
);
display_from_str!(
    InteractionKind,
    "interaction",
    [
        InteractionKind::Min,
        InteractionKind::Max,
        InteractionKind::Mean,
        InteractionKind::Collaborate,
        InteractionKind::Superpower,
        InteractionKind::Individual
    ]
);

/// One value per skill policy, serialized as `{"H": .., "HM": .., "M": ..}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PerPolicy<T> {
    #[serde(rename = "H")]
    pub h: T,
    #[serde(rename = "HM")]
    pub hm: T,
    #[serde(rename = "M")]
    pub m: T,
}

impl<T: Copy> PerPolicy<T> {
    pub fn new(h: T, hm: T, m: T) -> Self {
        PerPolicy { h, hm, m }
    }

    pub fn get(&self, c: PolicyKind) -> T {
        match c {
            PolicyKind::H => self.h,
            PolicyKind::HM => self.hm,
            PolicyKind::M => self.m,
        }
    }

    pub fn to_array(&self) -> [T; 3] {
        [self.h, self.hm, self.m]
    }
}

/// One value per difficulty level, serialized as `{"Low": .., "Med": .., "High": ..}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PerDifficulty<T> {
    #[serde(rename = "Low")]
    pub low: T,
    #[serde(rename = "Med")]
    pub med: T,
    #[serde(rename = "High")]
    pub high: T,
}

impl<T: Copy> PerDifficulty<T> {
    pub fn new(low: T, med: T, high: T) -> Self {
        PerDifficulty { low, med, high }
    }

    pub fn get(&self, d: Difficulty) -> T {
        match d {
            Difficulty::Low => self.low,
            Difficulty::Med => self.med,
            Difficulty::High => self.high,
        }
    }

    pub fn to_array(&self) -> [T; 3] {
        [self.low, self.med, self.high]
    }
}
