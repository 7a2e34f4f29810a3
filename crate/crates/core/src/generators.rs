//! Game generators, selectable by name.
//!
//! The case-study game for `n` players with productive set `C`:
//!
//! ```text
//! v(S) = sum_{i in S} a_i
//!      + rate * |S|            if S ⊆ C and |S| >= 2
//!      + synergy               if C ⊆ S
//!      - penalty * |S \ C|     if S meets C and S ⊄ C
//! ```
//!
//! where `a_i` is `standalone_in` for `i in C` and `standalone_out` otherwise.

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::game::{Coalition, Game, PlayerId, DEFAULT_MAX_PLAYERS};
use crate::registry::{Named, Registry};
use crate::rng::Stream;

fn check_n(n: usize) -> Result<()> {
    if n == 0 || n > DEFAULT_MAX_PLAYERS {
        return Err(Error::domain(format!(
            "n must be in 1..={DEFAULT_MAX_PLAYERS}, got {n}"
        )));
    }
    Ok(())
}

fn check_range(lo: f64, hi: f64) -> Result<()> {
    if !(lo.is_finite() && hi.is_finite() && lo <= hi) {
        return Err(Error::domain(format!("bad range [{lo}, {hi}]")));
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RandomGameParams {
    pub n: usize,
    pub singleton_lo: f64,
    pub singleton_hi: f64,
    /// Scale of the per-member coalition noise.
    pub coalition_noise: f64,
    /// Shift singletons to be nonnegative after drawing.
    pub enforce_a1: bool,
}

impl Default for RandomGameParams {
    fn default() -> Self {
        RandomGameParams {
            n: 5,
            singleton_lo: -0.25,
            singleton_hi: 1.0,
            coalition_noise: 0.5,
            enforce_a1: true,
        }
    }
}

impl RandomGameParams {
    /// Defaults at `n` players, as used by every verification sweep.
    pub fn sweep(n: usize) -> Self {
        RandomGameParams {
            n,
            ..Default::default()
        }
    }
}

/// Singleton values uniform in the range; each larger coalition gets the sum
/// of its singletons plus `noise * |S| * U(-1, 1)`. One draw per nonempty
/// mask in increasing mask order.
pub fn random_game(p: &RandomGameParams, seed: u64) -> Result<Game> {
    check_n(p.n)?;
    check_range(p.singleton_lo, p.singleton_hi)?;
    if !(p.coalition_noise.is_finite() && p.coalition_noise >= 0.0) {
        return Err(Error::domain("coalition_noise must be finite and >= 0"));
    }
    let mut stream = Stream::new(seed);
    let draws: Vec<f64> = (0..1u32 << p.n)
        .map(|m| match m.count_ones() {
            0 => 0.0,
            1 => stream.uniform(p.singleton_lo, p.singleton_hi),
            k => p.coalition_noise * k as f64 * stream.uniform(-1.0, 1.0),
        })
        .collect();
    let game = Game::from_fn(p.n, |s| {
        let base: f64 = s.members().map(|i| draws[1 << i]).sum();
        if s.len() == 1 {
            base
        } else {
            base + draws[s.mask() as usize]
        }
    })?;
    Ok(if p.enforce_a1 {
        game.shift_to_nonneg_singletons().0
    } else {
        game
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CaseStudyParams {
    pub n: usize,
    /// Productive players, 1-based.
    pub productive: Vec<usize>,
    pub standalone_in: f64,
    pub standalone_out: f64,
    pub inside_surplus_rate: f64,
    pub synergy_bonus: f64,
    pub mixed_penalty: f64,
    /// Apply the minimal nonnegative-singleton shift.
    pub shift: bool,
}

impl Default for CaseStudyParams {
    fn default() -> Self {
        CaseStudyParams {
            n: 10,
            productive: vec![1, 2, 3, 4],
            standalone_in: 2.0,
            standalone_out: 1.0,
            inside_surplus_rate: 1.0,
            synergy_bonus: 4.0,
            mixed_penalty: 1.5,
            shift: true,
        }
    }
}

impl CaseStudyParams {
    pub fn productive_set(&self) -> Result<Coalition> {
        let players = self
            .productive
            .iter()
            .map(|&l| PlayerId::from_label(l, self.n))
            .collect::<Result<Vec<_>>>()?;
        let c = crate::game::coalition_of(&players, self.n)?;
        if c.is_empty() {
            return Err(Error::domain("productive set must be nonempty"));
        }
        Ok(c)
    }
}

/// Heterogeneous-incentive game with a productive core (formula in the module docs).
pub fn case_study_game(p: &CaseStudyParams) -> Result<Game> {
    check_n(p.n)?;
    let core = p.productive_set()?;
    if p.standalone_in < 0.0 || p.standalone_out < 0.0 {
        return Err(Error::domain("standalone values must be >= 0"));
    }
    for (name, x) in [
        ("inside_surplus_rate", p.inside_surplus_rate),
        ("synergy_bonus", p.synergy_bonus),
        ("mixed_penalty", p.mixed_penalty),
    ] {
        if !x.is_finite() {
            return Err(Error::domain(format!("{name} must be finite")));
        }
    }
    let game = Game::from_fn(p.n, |s| {
        let inside = s.intersection(core).len() as f64;
        let outside = s.without(core).len() as f64;
        let mut v = p.standalone_in * inside + p.standalone_out * outside;
        if s.is_subset_of(core) && s.len() >= 2 {
            v += p.inside_surplus_rate * s.len() as f64;
        }
        if core.is_subset_of(s) {
            v += p.synergy_bonus;
        }
        if !s.is_disjoint(core) && !s.is_subset_of(core) {
            v -= p.mixed_penalty * outside;
        }
        v
    })?
    .named("case-study");
    Ok(if p.shift {
        game.shift_to_nonneg_singletons().0
    } else {
        game
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AdditiveParams {
    pub n: usize,
    pub singleton_lo: f64,
    pub singleton_hi: f64,
}

impl Default for AdditiveParams {
    fn default() -> Self {
        AdditiveParams {
            n: 4,
            singleton_lo: 0.0,
            singleton_hi: 1.0,
        }
    }
}

/// `v(S) = sum of its singletons`; every merge surplus is zero.
pub fn additive_game(p: &AdditiveParams, seed: u64) -> Result<Game> {
    check_n(p.n)?;
    check_range(p.singleton_lo, p.singleton_hi)?;
    let mut stream = Stream::new(seed);
    let singles: Vec<f64> = (0..p.n)
        .map(|_| stream.uniform(p.singleton_lo, p.singleton_hi))
        .collect();
    Game::from_fn(p.n, |s| s.members().map(|i| singles[i]).sum())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SuperadditiveParams {
    pub n: usize,
    pub singleton_lo: f64,
    pub singleton_hi: f64,
    /// Bonus per unordered pair of members.
    pub pair_bonus: f64,
}

impl Default for SuperadditiveParams {
    fn default() -> Self {
        SuperadditiveParams {
            n: 4,
            singleton_lo: 0.0,
            singleton_hi: 1.0,
            pair_bonus: 0.5,
        }
    }
}

/// Additive singletons plus `pair_bonus * C(|S|, 2)`, so `Delta(A, B) =
/// pair_bonus * |A| * |B|`.
pub fn superadditive_game(p: &SuperadditiveParams, seed: u64) -> Result<Game> {
    check_n(p.n)?;
    check_range(p.singleton_lo, p.singleton_hi)?;
    if !(p.pair_bonus.is_finite() && p.pair_bonus >= 0.0) {
        return Err(Error::domain("pair_bonus must be finite and >= 0"));
    }
    let mut stream = Stream::new(seed);
    let singles: Vec<f64> = (0..p.n)
        .map(|_| stream.uniform(p.singleton_lo, p.singleton_hi))
        .collect();
    Game::from_fn(p.n, |s| {
        let k = s.len() as f64;
        s.members().map(|i| singles[i]).sum::<f64>() + p.pair_bonus * k * (k - 1.0) / 2.0
    })
}

/// A named game family; parameters arrive as a JSON object of overrides.
pub trait GameGenerator: Named + Send + Sync {
    fn generate(&self, params: &serde_json::Value, seed: u64) -> Result<Game>;
    /// Parameter defaults as a JSON object.
    fn defaults(&self) -> serde_json::Value;
}

fn parse_params<P: DeserializeOwned>(params: &serde_json::Value) -> Result<P> {
    let value = if params.is_null() {
        serde_json::Value::Object(Default::default())
    } else {
        params.clone()
    };
    serde_json::from_value(value).map_err(|e| Error::format(format!("generator parameters: {e}")))
}

macro_rules! generator {
    ($ty:ident, $name:literal, $about:literal, $params:ty, |$p:ident, $seed:ident| $body:expr) => {
        pub struct $ty;

        impl Named for $ty {
            fn name(&self) -> &'static str {
                $name
            }
            fn describe(&self) -> &'static str {
                $about
            }
        }

        impl GameGenerator for $ty {
            fn generate(&self, params: &serde_json::Value, $seed: u64) -> Result<Game> {
                let $p: $params = parse_params(params)?;
                $body
            }
            fn defaults(&self) -> serde_json::Value {
                serde_json::to_value(<$params>::default()).expect("defaults serialize")
            }
        }
    };
}

generator!(
    RandomGen,
    "random",
    "noisy additive game with seeded draws",
    RandomGameParams,
    |p, seed| random_game(&p, seed)
);
generator!(
    CaseStudyGen,
    "case-study",
    "productive-core game with mixed-coalition penalty",
    CaseStudyParams,
    |p, _seed| case_study_game(&p)
);
generator!(
    AdditiveGen,
    "additive",
    "sum of seeded singleton values",
    AdditiveParams,
    |p, seed| additive_game(&p, seed)
);
generator!(
    SuperadditiveGen,
    "superadditive",
    "additive plus a bonus per member pair",
    SuperadditiveParams,
    |p, seed| superadditive_game(&p, seed)
);

pub fn generators() -> Registry<dyn GameGenerator> {
    let mut r: Registry<dyn GameGenerator> = Registry::new("game generator");
    r.register(Box::new(RandomGen))
        .register(Box::new(CaseStudyGen))
        .register(Box::new(AdditiveGen))
        .register(Box::new(SuperadditiveGen));
    r
}
