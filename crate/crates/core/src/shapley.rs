//! Shapley values of restricted games `v|_S` and the fairness signals built on them.
//!
//! Three interchangeable estimators are registered by name: `exact`
//! (sub-mask enumeration), `oracle` (average over every ordering) and
//! `sampled` (Monte Carlo over random orderings).

use serde::ser::{Serialize, SerializeMap, Serializer};

use crate::error::{Error, Result};
use crate::game::{Coalition, Game};
use crate::registry::{Named, Registry};
use crate::rng::Stream;

/// Largest coalition accepted by [`shapley_exact`].
pub const EXACT_MAX_SIZE: usize = 22;
/// Largest coalition accepted by [`shapley_permutation_oracle`].
pub const ORACLE_MAX_SIZE: usize = 8;
/// Default sign tolerance for fairness classification.
pub const DEFAULT_TOL: f64 = 1e-9;

/// Per-member allocation `phi_i(S, v|_S)` for one coalition.
#[derive(Debug, Clone, PartialEq)]
pub struct ShapleyVector {
    coalition: Coalition,
    // aligned with coalition.members()
    phi: Vec<f64>,
}

impl ShapleyVector {
    /// `phi` must list one value per member in ascending player order.
    pub fn new(coalition: Coalition, phi: Vec<f64>) -> Self {
        assert_eq!(coalition.len(), phi.len(), "one value per member");
        ShapleyVector { coalition, phi }
    }

    pub fn coalition(&self) -> Coalition {
        self.coalition
    }

    /// Value of `player`, or `None` if not a member.
    pub fn get(&self, player: usize) -> Option<f64> {
        if !self.coalition.contains(player) {
            return None;
        }
        let rank = (self.coalition.mask() & ((1u32 << player) - 1)).count_ones() as usize;
        Some(self.phi[rank])
    }

    /// `(player index, value)` pairs in ascending player order.
    pub fn iter(&self) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.coalition.members().zip(self.phi.iter().copied())
    }

    pub fn values(&self) -> &[f64] {
        &self.phi
    }

    pub fn total(&self) -> f64 {
        self.phi.iter().sum()
    }
}

impl Serialize for ShapleyVector {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let mut map = s.serialize_map(Some(self.phi.len()))?;
        for (i, v) in self.iter() {
            map.serialize_entry(&(i + 1).to_string(), &v)?;
        }
        map.end()
    }
}

/// Members split by the sign of their Shapley value.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SignSplit {
    pub positive: Coalition,
    pub negative: Coalition,
}

/// `1 / (s * C(s-1, t))`, the weight of a size-`t` predecessor set in a
/// coalition of size `s`, with one rounding.
fn size_weights(s: usize) -> Vec<f64> {
    let mut binom: u128 = 1;
    let mut out = Vec::with_capacity(s);
    for t in 0..s {
        if t > 0 {
            binom = binom * (s - t) as u128 / t as u128;
        }
        out.push(1.0 / (s as u128 * binom) as f64);
    }
    out
}

fn check_nonempty(s: Coalition) -> Result<()> {
    if s.is_empty() {
        Err(Error::domain("Shapley value of the empty coalition"))
    } else {
        Ok(())
    }
}

/// Exact Shapley values by enumerating subsets of `S \ {i}`.
///
/// Marginal contributions are summed per predecessor-set size and each size
/// class is weighted once, so rounding does not grow with the subset count.
pub fn shapley_exact(game: &Game, s: Coalition) -> Result<ShapleyVector> {
    check_nonempty(s)?;
    if s.len() > EXACT_MAX_SIZE {
        return Err(Error::Cap {
            what: "exact Shapley",
            cap: EXACT_MAX_SIZE,
            got: s.len(),
        });
    }
    game.value(s)?;
    Ok(ShapleyVector::new(s, exact_values(game, s)))
}

/// Unchecked core of [`shapley_exact`]; values in ascending member order.
pub(crate) fn exact_values(game: &Game, s: Coalition) -> Vec<f64> {
    let size = s.len();
    if size == 1 {
        return vec![game.v(s)];
    }
    let weights = size_weights(size);
    let mut by_size = vec![0.0f64; size];
    s.members()
        .map(|i| {
            let me = Coalition::singleton(i);
            by_size.iter_mut().for_each(|x| *x = 0.0);
            for t in s.without(me).subsets() {
                by_size[t.len()] += game.v(t.union(me)) - game.v(t);
            }
            by_size.iter().zip(&weights).map(|(m, w)| m * w).sum()
        })
        .collect()
}

fn for_each_permutation(items: &mut Vec<usize>, k: usize, f: &mut impl FnMut(&[usize])) {
    if k == items.len() {
        f(items);
        return;
    }
    for j in k..items.len() {
        items.swap(k, j);
        for_each_permutation(items, k + 1, f);
        items.swap(k, j);
    }
}

/// Shapley values as the average marginal contribution over all `|S|!`
/// join orders. Cross-check oracle only; factorial cost.
pub fn shapley_permutation_oracle(game: &Game, s: Coalition) -> Result<ShapleyVector> {
    check_nonempty(s)?;
    if s.len() > ORACLE_MAX_SIZE {
        return Err(Error::Cap {
            what: "permutation oracle",
            cap: ORACLE_MAX_SIZE,
            got: s.len(),
        });
    }
    game.value(s)?;
    let n = game.n();
    let mut totals = vec![0.0f64; n];
    let mut orders = 0u64;
    let mut members: Vec<usize> = s.members().collect();
    for_each_permutation(&mut members, 0, &mut |order| {
        let mut before = Coalition::EMPTY;
        for &i in order {
            let with = before.union(Coalition::singleton(i));
            totals[i] += game.v(with) - game.v(before);
            before = with;
        }
        orders += 1;
    });
    let phi = s.members().map(|i| totals[i] / orders as f64).collect();
    Ok(ShapleyVector::new(s, phi))
}

/// Monte Carlo estimate with per-player standard errors.
#[derive(Debug, Clone, PartialEq)]
pub struct SampledShapley {
    pub estimate: ShapleyVector,
    /// Sample standard error of each estimate, aligned with members.
    /// Infinite when fewer than two samples were drawn.
    pub std_errors: Vec<f64>,
    pub samples: usize,
}

/// Unbiased permutation-sampling estimate; deterministic in `seed`.
pub fn shapley_sampled(game: &Game, s: Coalition, samples: usize, seed: u64) -> Result<SampledShapley> {
    check_nonempty(s)?;
    if samples == 0 {
        return Err(Error::domain("at least one sample is required"));
    }
    game.value(s)?;
    let members: Vec<usize> = s.members().collect();
    if members.len() == 1 {
        return Ok(SampledShapley {
            estimate: ShapleyVector::new(s, vec![game.v(s)]),
            std_errors: vec![0.0],
            samples,
        });
    }
    let n = game.n();
    let mut stream = Stream::new(seed);
    // Welford accumulators, indexed by player
    let mut mean = vec![0.0f64; n];
    let mut m2 = vec![0.0f64; n];
    let mut order = members.clone();
    for k in 1..=samples {
        stream.shuffle(&mut order);
        let mut before = Coalition::EMPTY;
        for &i in &order {
            let with = before.union(Coalition::singleton(i));
            let x = game.v(with) - game.v(before);
            let delta = x - mean[i];
            mean[i] += delta / k as f64;
            m2[i] += delta * (x - mean[i]);
            before = with;
        }
    }
    let std_errors = members
        .iter()
        .map(|&i| {
            if samples < 2 {
                f64::INFINITY
            } else {
                (m2[i] / (samples - 1) as f64 / samples as f64).sqrt()
            }
        })
        .collect();
    let phi = members.iter().map(|&i| mean[i]).collect();
    Ok(SampledShapley {
        estimate: ShapleyVector::new(s, phi),
        std_errors,
        samples,
    })
}

/// Positive part `P_+` holds members with `phi >= -tol`; the rest are negative.
pub fn sign_split(sv: &ShapleyVector, tol: f64) -> SignSplit {
    let mut positive = Coalition::EMPTY;
    for (i, v) in sv.iter() {
        if v >= -tol {
            positive = positive.union(Coalition::singleton(i));
        }
    }
    SignSplit {
        positive,
        negative: sv.coalition().without(positive),
    }
}

/// Negative Shapley mass: sum of `max(0, -phi_j)`.
pub fn negative_mass(sv: &ShapleyVector) -> f64 {
    negative_mass_of(sv.values())
}

pub(crate) fn negative_mass_of(phi: &[f64]) -> f64 {
    phi.iter().map(|&v| (-v).max(0.0)).sum()
}

/// Result of a registered Shapley method.
#[derive(Debug, Clone)]
pub struct ShapleyEstimate {
    pub vector: ShapleyVector,
    pub std_errors: Option<Vec<f64>>,
}

pub trait ShapleyMethod: Named + Send + Sync {
    fn compute(&self, game: &Game, s: Coalition) -> Result<ShapleyEstimate>;
}

pub struct Exact;
pub struct PermutationOracle;
pub struct Sampled {
    pub samples: usize,
    pub seed: u64,
}

impl Named for Exact {
    fn name(&self) -> &'static str {
        "exact"
    }
    fn describe(&self) -> &'static str {
        "sub-mask enumeration with per-size weights"
    }
}

impl ShapleyMethod for Exact {
    fn compute(&self, game: &Game, s: Coalition) -> Result<ShapleyEstimate> {
        Ok(ShapleyEstimate {
            vector: shapley_exact(game, s)?,
            std_errors: None,
        })
    }
}

impl Named for PermutationOracle {
    fn name(&self) -> &'static str {
        "oracle"
    }
    fn describe(&self) -> &'static str {
        "average over every join order (|S| <= 8)"
    }
}

impl ShapleyMethod for PermutationOracle {
    fn compute(&self, game: &Game, s: Coalition) -> Result<ShapleyEstimate> {
        Ok(ShapleyEstimate {
            vector: shapley_permutation_oracle(game, s)?,
            std_errors: None,
        })
    }
}

impl Named for Sampled {
    fn name(&self) -> &'static str {
        "sampled"
    }
    fn describe(&self) -> &'static str {
        "Monte Carlo over uniformly random join orders"
    }
}

impl ShapleyMethod for Sampled {
    fn compute(&self, game: &Game, s: Coalition) -> Result<ShapleyEstimate> {
        let r = shapley_sampled(game, s, self.samples, self.seed)?;
        Ok(ShapleyEstimate {
            vector: r.estimate,
            std_errors: Some(r.std_errors),
        })
    }
}

/// Registry of every Shapley method; `sampled` uses the given budget and seed.
pub fn methods(samples: usize, seed: u64) -> Registry<dyn ShapleyMethod> {
    let mut r: Registry<dyn ShapleyMethod> = Registry::new("Shapley method");
    r.register(Box::new(Exact))
        .register(Box::new(PermutationOracle))
        .register(Box::new(Sampled { samples, seed }));
    r
}
