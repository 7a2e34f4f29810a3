//! Merge-order policies.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::registry::Named;
use crate::rng::Stream;

/// Picks one of the qualifying merge pairs.
///
/// `pairs` lists block-index pairs `(i, j)`, `i < j`, in lexicographic order
/// of the canonical partition; the return value indexes into `pairs`.
pub trait MergeSelector: Named + Send {
    fn select(&mut self, pairs: &[(usize, usize)]) -> usize;
}

/// First qualifying pair in canonical order.
#[derive(Debug, Default, Clone)]
pub struct Lexicographic;

impl Named for Lexicographic {
    fn name(&self) -> &'static str {
        "lex"
    }
    fn describe(&self) -> &'static str {
        "merge the pair minimal by (min member of A, min member of B)"
    }
}

impl MergeSelector for Lexicographic {
    fn select(&mut self, _pairs: &[(usize, usize)]) -> usize {
        0
    }
}

/// Uniform choice driven by a replayable stream.
#[derive(Debug, Clone)]
pub struct RandomOrder {
    stream: Stream,
}

impl RandomOrder {
    pub fn new(seed: u64) -> Self {
        RandomOrder {
            stream: Stream::new(seed),
        }
    }
}

impl Named for RandomOrder {
    fn name(&self) -> &'static str {
        "random"
    }
    fn describe(&self) -> &'static str {
        "merge a uniformly chosen qualifying pair (seeded)"
    }
}

impl MergeSelector for RandomOrder {
    fn select(&mut self, pairs: &[(usize, usize)]) -> usize {
        self.stream.below(pairs.len())
    }
}

/// Serializable policy choice: `lex` or `random:<seed>`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum MergePolicy {
    #[default]
    Lexicographic,
    Random {
        seed: u64,
    },
}

impl MergePolicy {
    pub fn selector(&self) -> Box<dyn MergeSelector> {
        match *self {
            MergePolicy::Lexicographic => Box::new(Lexicographic),
            MergePolicy::Random { seed } => Box::new(RandomOrder::new(seed)),
        }
    }

    pub fn is_deterministic(&self) -> bool {
        matches!(self, MergePolicy::Lexicographic)
    }
}

impl fmt::Display for MergePolicy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MergePolicy::Lexicographic => write!(f, "lex"),
            MergePolicy::Random { seed } => write!(f, "random:{seed}"),
        }
    }
}

impl FromStr for MergePolicy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.split_once(':') {
            None if s == "lex" => Ok(MergePolicy::Lexicographic),
            Some(("random", seed)) => seed
                .parse()
                .map(|seed| MergePolicy::Random { seed })
                .map_err(|_| Error::format(format!("bad random policy seed `{seed}`"))),
            _ => Err(Error::UnknownName {
                kind: "merge policy",
                name: s.to_string(),
                known: "lex, random:<seed>".into(),
            }),
        }
    }
}

impl Serialize for MergePolicy {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for MergePolicy {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_and_print() {
        assert_eq!("lex".parse::<MergePolicy>().unwrap(), MergePolicy::Lexicographic);
        assert_eq!(
            "random:17".parse::<MergePolicy>().unwrap(),
            MergePolicy::Random { seed: 17 }
        );
        assert_eq!(MergePolicy::Random { seed: 3 }.to_string(), "random:3");
        assert!("random:x".parse::<MergePolicy>().is_err());
        assert!("greedy".parse::<MergePolicy>().is_err());
    }

    #[test]
    fn random_selection_replays() {
        let pairs = [(0, 1), (0, 2), (1, 2), (1, 3)];
        let mut a = MergePolicy::Random { seed: 9 }.selector();
        let mut b = MergePolicy::Random { seed: 9 }.selector();
        for _ in 0..32 {
            let k = a.select(&pairs);
            assert!(k < pairs.len());
            assert_eq!(k, b.select(&pairs));
        }
    }
}
