use std::sync::OnceLock;

use crate::game::{Coalition, Game};
use crate::shapley::{exact_values, negative_mass_of};

/// Fairness signal of one coalition at a fixed tolerance.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Fairness {
    /// `P_-(S)`: members with `phi < -tol`.
    pub negative: Coalition,
    /// Negative Shapley mass `sum max(0, -phi)`.
    pub mass: f64,
}

pub(crate) fn evaluate(game: &Game, s: Coalition, tol: f64) -> Fairness {
    let phi = exact_values(game, s);
    let mut negative = Coalition::EMPTY;
    for (i, &v) in s.members().zip(&phi) {
        if v < -tol {
            negative = negative.union(Coalition::singleton(i));
        }
    }
    Fairness {
        negative,
        mass: negative_mass_of(&phi),
    }
}

/// Lazily filled per-coalition fairness table.
pub(crate) struct FairnessCache {
    slots: Vec<OnceLock<Fairness>>,
}

impl FairnessCache {
    pub(crate) fn new(n: usize) -> Self {
        FairnessCache {
            slots: (0..1usize << n).map(|_| OnceLock::new()).collect(),
        }
    }

    pub(crate) fn get(&self, game: &Game, s: Coalition, tol: f64) -> Fairness {
        *self.slots[s.mask() as usize].get_or_init(|| evaluate(game, s, tol))
    }
}
