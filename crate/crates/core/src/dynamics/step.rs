//! Step maps of the dynamics, selectable by name.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::game::Partition;
use crate::registry::{Named, Registry};

use super::engine::{Dynamics, Op};
use super::policy::MergeSelector;

pub trait StepRule: Named + Send + Sync {
    /// Successor of `p` and the moves that produced it (empty when idle).
    fn step(&self, dynamics: &Dynamics<'_>, p: &Partition, selector: &mut dyn MergeSelector) -> (Partition, Vec<Op>);
}

/// Split every block, then merge to closure.
pub struct Composite;

/// One split (preferred) or one merge.
pub struct Atomic;

impl Named for Composite {
    fn name(&self) -> &'static str {
        "composite"
    }
    fn describe(&self) -> &'static str {
        "parallel split phase followed by merge closure"
    }
}

impl StepRule for Composite {
    fn step(&self, dynamics: &Dynamics<'_>, p: &Partition, selector: &mut dyn MergeSelector) -> (Partition, Vec<Op>) {
        dynamics.composite_step(p, selector)
    }
}

impl Named for Atomic {
    fn name(&self) -> &'static str {
        "atomic"
    }
    fn describe(&self) -> &'static str {
        "exactly one split or one merge per iteration, splits first"
    }
}

impl StepRule for Atomic {
    fn step(&self, dynamics: &Dynamics<'_>, p: &Partition, selector: &mut dyn MergeSelector) -> (Partition, Vec<Op>) {
        let (next, op) = dynamics.atomic_step(p, selector);
        (next, op.into_iter().collect())
    }
}

pub fn step_rules() -> Registry<dyn StepRule> {
    let mut r: Registry<dyn StepRule> = Registry::new("step mode");
    r.register(Box::new(Composite)).register(Box::new(Atomic));
    r
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StepMode {
    #[default]
    Composite,
    Atomic,
}

impl StepMode {
    pub fn rule(self) -> &'static dyn StepRule {
        match self {
            StepMode::Composite => &Composite,
            StepMode::Atomic => &Atomic,
        }
    }
}

impl fmt::Display for StepMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.rule().name())
    }
}

impl FromStr for StepMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match step_rules().get(s)?.name() {
            "composite" => Ok(StepMode::Composite),
            _ => Ok(StepMode::Atomic),
        }
    }
}
