//! Transferable-utility games, coalitions and partitions.
//!
//! Players are bit positions `0..n` internally and are printed 1-based
//! everywhere a human or a file sees them.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default cap on the player count; the value table holds `2^n` entries.
pub const DEFAULT_MAX_PLAYERS: usize = 20;

/// Hard ceiling imposed by the 32-bit coalition mask.
pub const MASK_BITS: usize = 31;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct PlayerId(pub usize);

impl PlayerId {
    /// Parses a 1-based player label.
    pub fn from_label(label: usize, n: usize) -> Result<Self> {
        if label == 0 || label > n {
            return Err(Error::domain(format!("player {label} outside 1..={n}")));
        }
        Ok(PlayerId(label - 1))
    }

    pub fn label(self) -> usize {
        self.0 + 1
    }
}

impl fmt::Display for PlayerId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.label())
    }
}

/// A subset of players as a bitmask; bit `b` set means player `b` is a member.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct Coalition(pub u32);

impl Coalition {
    pub const EMPTY: Coalition = Coalition(0);

    pub fn singleton(player: usize) -> Self {
        Coalition(1 << player)
    }

    /// All players `0..n`.
    pub fn grand(n: usize) -> Self {
        Coalition(((1u64 << n) - 1) as u32)
    }

    pub fn mask(self) -> u32 {
        self.0
    }

    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    pub fn len(self) -> usize {
        self.0.count_ones() as usize
    }

    pub fn contains(self, player: usize) -> bool {
        player < 32 && self.0 & (1 << player) != 0
    }

    pub fn min_member(self) -> Option<usize> {
        (self.0 != 0).then(|| self.0.trailing_zeros() as usize)
    }

    pub fn union(self, other: Coalition) -> Coalition {
        Coalition(self.0 | other.0)
    }

    pub fn intersection(self, other: Coalition) -> Coalition {
        Coalition(self.0 & other.0)
    }

    pub fn without(self, other: Coalition) -> Coalition {
        Coalition(self.0 & !other.0)
    }

    pub fn is_disjoint(self, other: Coalition) -> bool {
        self.0 & other.0 == 0
    }

    pub fn is_subset_of(self, other: Coalition) -> bool {
        self.0 & !other.0 == 0
    }

    /// Member indices in ascending order.
    pub fn members(self) -> Members {
        Members(self.0)
    }

    /// Every subset of `self`, including the empty set and `self`.
    pub fn subsets(self) -> Subsets {
        Subsets {
            universe: self.0,
            next: Some(0),
        }
    }

    /// 1-based member labels, ascending.
    pub fn labels(self) -> Vec<usize> {
        self.members().map(|i| i + 1).collect()
    }

    /// Parses `"1,3,4"` (1-based, any order, duplicates collapse).
    pub fn parse_labels(text: &str, n: usize) -> Result<Self> {
        let text = text.trim().trim_start_matches(['[', '{']).trim_end_matches([']', '}']);
        let mut players = Vec::new();
        for part in text.split(',').map(str::trim).filter(|p| !p.is_empty()) {
            let label: usize = part
                .parse()
                .map_err(|_| Error::format(format!("bad player label `{part}`")))?;
            players.push(PlayerId::from_label(label, n)?);
        }
        coalition_of(&players, n)
    }
}

impl fmt::Display for Coalition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[")?;
        for (k, i) in self.members().enumerate() {
            if k > 0 {
                write!(f, ",")?;
            }
            write!(f, "{}", i + 1)?;
        }
        write!(f, "]")
    }
}

#[derive(Debug, Clone)]
pub struct Members(u32);

impl Iterator for Members {
    type Item = usize;

    fn next(&mut self) -> Option<usize> {
        if self.0 == 0 {
            return None;
        }
        let i = self.0.trailing_zeros() as usize;
        self.0 &= self.0 - 1;
        Some(i)
    }
}

/// Sub-mask enumeration in increasing mask order.
#[derive(Debug, Clone)]
pub struct Subsets {
    universe: u32,
    next: Option<u32>,
}

impl Iterator for Subsets {
    type Item = Coalition;

    fn next(&mut self) -> Option<Coalition> {
        let cur = self.next?;
        self.next = if cur == self.universe {
            None
        } else {
            // next sub-mask above `cur` within `universe`
            Some((cur.wrapping_sub(self.universe)) & self.universe)
        };
        Some(Coalition(cur))
    }
}

/// Builds the coalition of the given players.
pub fn coalition_of(players: &[PlayerId], n: usize) -> Result<Coalition> {
    let mut mask = 0u32;
    for p in players {
        if p.0 >= n {
            return Err(Error::domain(format!("player index {} >= n = {n}", p.0)));
        }
        mask |= 1 << p.0;
    }
    Ok(Coalition(mask))
}

/// A TU game: `n` players and a dense table of `2^n` coalition values.
#[derive(Debug, Clone, PartialEq)]
pub struct Game {
    n: usize,
    values: Vec<f64>,
    name: Option<String>,
}

impl Game {
    pub fn new(n: usize, values: Vec<f64>) -> Result<Self> {
        Self::with_cap(n, values, DEFAULT_MAX_PLAYERS)
    }

    pub fn with_cap(n: usize, values: Vec<f64>, cap: usize) -> Result<Self> {
        let cap = cap.min(MASK_BITS);
        if n == 0 {
            return Err(Error::domain("a game needs at least one player"));
        }
        if n > cap {
            return Err(Error::Cap {
                what: "game table",
                cap,
                got: n,
            });
        }
        if values.len() != 1 << n {
            return Err(Error::format(format!(
                "values has {} entries, expected 2^{n} = {}",
                values.len(),
                1usize << n
            )));
        }
        if values[0] != 0.0 {
            return Err(Error::format(format!("v(empty) must be 0, got {}", values[0])));
        }
        if let Some(mask) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::format(format!(
                "non-finite value at coalition {}",
                Coalition(mask as u32)
            )));
        }
        Ok(Game { n, values, name: None })
    }

    /// Tabulates `f` over every coalition; `f(EMPTY)` is ignored and stored as 0.
    pub fn from_fn(n: usize, mut f: impl FnMut(Coalition) -> f64) -> Result<Self> {
        let cap = DEFAULT_MAX_PLAYERS;
        if n > cap {
            return Err(Error::Cap {
                what: "game table",
                cap,
                got: n,
            });
        }
        let values = (0..1u32 << n)
            .map(|m| if m == 0 { 0.0 } else { f(Coalition(m)) })
            .collect();
        Game::new(n, values)
    }

    pub fn named(mut self, name: impl Into<String>) -> Self {
        self.name = Some(name.into());
        self
    }

    pub fn name(&self) -> Option<&str> {
        self.name.as_deref()
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn grand(&self) -> Coalition {
        Coalition::grand(self.n)
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Checked lookup of `v(S)`.
    pub fn value(&self, s: Coalition) -> Result<f64> {
        self.values
            .get(s.0 as usize)
            .copied()
            .ok_or_else(|| Error::domain(format!("coalition mask {:#b} outside 2^{}", s.0, self.n)))
    }

    /// Unchecked lookup for hot loops; the mask must come from this game.
    #[inline]
    pub fn v(&self, s: Coalition) -> f64 {
        self.values[s.0 as usize]
    }

    pub fn singleton_value(&self, player: usize) -> f64 {
        self.values[1 << player]
    }

    /// `alpha * v`.
    pub fn scaled(&self, alpha: f64) -> Result<Game> {
        Game::new(self.n, self.values.iter().map(|x| alpha * x).collect())
    }

    /// Pointwise sum of two games on the same player set.
    pub fn sum(&self, other: &Game) -> Result<Game> {
        if self.n != other.n {
            return Err(Error::domain("games differ in player count"));
        }
        Game::new(
            self.n,
            self.values.iter().zip(&other.values).map(|(a, b)| a + b).collect(),
        )
    }

    /// Minimal additive shift making every singleton value nonnegative.
    ///
    /// Each player gets `c_i = max(0, -v({i}))` and every coalition gains the sum
    /// of its members' constants. Returns the shifted game and the constants.
    pub fn shift_to_nonneg_singletons(&self) -> (Game, Vec<f64>) {
        let shifts: Vec<f64> = (0..self.n).map(|i| (-self.singleton_value(i)).max(0.0)).collect();
        if shifts.iter().all(|&c| c == 0.0) {
            return (self.clone(), shifts);
        }
        let values = self
            .values
            .iter()
            .enumerate()
            .map(|(m, &x)| x + Coalition(m as u32).members().map(|i| shifts[i]).sum::<f64>())
            .collect();
        let mut shifted = Game::new(self.n, values).expect("shift keeps the table valid");
        shifted.name = self.name.clone();
        (shifted, shifts)
    }

    /// Players whose singleton value is negative.
    pub fn check_assumption1(&self) -> Vec<PlayerId> {
        (0..self.n)
            .filter(|&i| self.singleton_value(i) < 0.0)
            .map(PlayerId)
            .collect()
    }

    /// Stable 64-bit FNV-1a digest of the value table, for reports.
    pub fn fingerprint(&self) -> String {
        let mut h: u64 = 0xcbf2_9ce4_8422_2325;
        for b in (self.n as u64)
            .to_le_bytes()
            .into_iter()
            .chain(self.values.iter().flat_map(|v| v.to_bits().to_le_bytes()))
        {
            h ^= b as u64;
            h = h.wrapping_mul(0x0100_0000_01b3);
        }
        format!("{h:016x}")
    }
}

/// Disjoint cover of the player set, stored in canonical order
/// (blocks ascending by minimum member).
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Partition {
    n: usize,
    blocks: Vec<Coalition>,
}

impl Partition {
    /// Validates `blocks` as a partition of `0..n` and puts it in canonical order.
    pub fn canonicalize(mut blocks: Vec<Coalition>, n: usize) -> Result<Self> {
        if n == 0 || n > MASK_BITS {
            return Err(Error::domain(format!("player count {n} out of range")));
        }
        let mut seen = Coalition::EMPTY;
        for (k, b) in blocks.iter().enumerate() {
            if b.is_empty() {
                return Err(Error::Partition(format!("block #{} is empty", k + 1)));
            }
            if !b.is_subset_of(Coalition::grand(n)) {
                return Err(Error::Partition(format!("block {b} has players beyond {n}")));
            }
            if !seen.is_disjoint(*b) {
                let other = blocks[..k].iter().find(|o| !o.is_disjoint(*b)).unwrap();
                return Err(Error::Partition(format!("blocks {other} and {b} overlap")));
            }
            seen = seen.union(*b);
        }
        let missing = Coalition::grand(n).without(seen);
        if !missing.is_empty() {
            return Err(Error::Partition(format!("players {missing} are not covered")));
        }
        blocks.sort_unstable_by_key(|b| b.0.trailing_zeros());
        Ok(Partition { n, blocks })
    }

    /// Builds from blocks known to be a valid partition; only sorts.
    pub(crate) fn from_valid(mut blocks: Vec<Coalition>, n: usize) -> Self {
        blocks.sort_unstable_by_key(|b| b.0.trailing_zeros());
        Partition { n, blocks }
    }

    pub fn singletons(n: usize) -> Self {
        Partition {
            n,
            blocks: (0..n).map(Coalition::singleton).collect(),
        }
    }

    pub fn grand(n: usize) -> Self {
        Partition {
            n,
            blocks: vec![Coalition::grand(n)],
        }
    }

    /// Decodes a restricted-growth string (`labels[i]` = block of player `i`).
    pub fn from_labels(labels: &[usize]) -> Self {
        let k = labels.iter().copied().max().map_or(0, |m| m + 1);
        let mut blocks = vec![Coalition::EMPTY; k];
        for (i, &l) in labels.iter().enumerate() {
            blocks[l].0 |= 1 << i;
        }
        blocks.retain(|b| !b.is_empty());
        Partition::from_valid(blocks, labels.len())
    }

    /// Parses nested 1-based arrays such as `[[1,2],[3]]`.
    pub fn from_nested(nested: &[Vec<usize>], n: usize) -> Result<Self> {
        let blocks = nested
            .iter()
            .map(|b| {
                let players = b
                    .iter()
                    .map(|&l| PlayerId::from_label(l, n))
                    .collect::<Result<Vec<_>>>()?;
                if players.len() != b.len() || b.is_empty() {
                    return Err(Error::Partition("empty block".into()));
                }
                let c = coalition_of(&players, n)?;
                if c.len() != b.len() {
                    return Err(Error::Partition(format!("duplicate player in block {c}")));
                }
                Ok(c)
            })
            .collect::<Result<Vec<_>>>()?;
        Partition::canonicalize(blocks, n)
    }

    pub fn parse(text: &str, n: usize) -> Result<Self> {
        let nested: Vec<Vec<usize>> =
            serde_json::from_str(text).map_err(|e| Error::format(format!("partition `{text}`: {e}")))?;
        Partition::from_nested(&nested, n)
    }

    pub fn to_nested(&self) -> Vec<Vec<usize>> {
        self.blocks.iter().map(|b| b.labels()).collect()
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn blocks(&self) -> &[Coalition] {
        &self.blocks
    }

    pub fn len(&self) -> usize {
        self.blocks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.blocks.is_empty()
    }

    /// Index of the block containing `player`.
    pub fn block_of(&self, player: usize) -> usize {
        self.blocks
            .iter()
            .position(|b| b.contains(player))
            .expect("partition covers every player")
    }

    /// Replaces block `index` by `parts` (which must partition it).
    pub fn replace_block(&self, index: usize, parts: &[Coalition]) -> Partition {
        let mut blocks = self.blocks.clone();
        blocks.swap_remove(index);
        blocks.extend_from_slice(parts);
        Partition::from_valid(blocks, self.n)
    }

    /// Merges blocks `i` and `j`.
    pub fn merge_blocks(&self, i: usize, j: usize) -> Partition {
        let merged = self.blocks[i].union(self.blocks[j]);
        let mut blocks: Vec<Coalition> = self
            .blocks
            .iter()
            .enumerate()
            .filter(|&(k, _)| k != i && k != j)
            .map(|(_, &b)| b)
            .collect();
        blocks.push(merged);
        Partition::from_valid(blocks, self.n)
    }
}

impl fmt::Display for Partition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[")?;
        for (k, b) in self.blocks.iter().enumerate() {
            if k > 0 {
                write!(f, ",")?;
            }
            write!(f, "{b}")?;
        }
        write!(f, "]")
    }
}

impl Serialize for Partition {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.to_nested().serialize(s)
    }
}

/// How unlisted coalitions are valued in the sparse file form.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum SparseDefault {
    #[default]
    Zero,
    Additive,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct GameFile {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    name: Option<String>,
    n: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    values: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    sparse: Option<BTreeMap<String, f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    default: Option<SparseDefault>,
}

fn parse_sparse_key(key: &str, n: usize) -> Result<Coalition> {
    let mut prev = 0usize;
    let mut mask = 0u32;
    for part in key.split(',') {
        let label: usize = part
            .trim()
            .parse()
            .map_err(|_| Error::format(format!("malformed coalition key `{key}`")))?;
        if label == 0 || label > n {
            return Err(Error::format(format!(
                "coalition key `{key}`: player {label} outside 1..={n}"
            )));
        }
        if label <= prev {
            return Err(Error::format(format!(
                "coalition key `{key}` is not strictly ascending"
            )));
        }
        prev = label;
        mask |= 1 << (label - 1);
    }
    Ok(Coalition(mask))
}

/// Parses a game file (JSON object with `n` and either `values` or `sparse`).
pub fn load_game(text: &str) -> Result<Game> {
    load_game_with_cap(text, DEFAULT_MAX_PLAYERS)
}

pub fn load_game_with_cap(text: &str, cap: usize) -> Result<Game> {
    let file: GameFile = serde_json::from_str(text).map_err(|e| Error::format(format!("game file: {e}")))?;
    let n = file.n;
    if n == 0 || n > cap.min(MASK_BITS) {
        return Err(Error::Cap {
            what: "game file",
            cap: cap.min(MASK_BITS),
            got: n,
        });
    }
    let game = match (file.values, file.sparse) {
        (Some(values), None) => {
            if file.default.is_some() {
                return Err(Error::format("`default` only applies to `sparse`"));
            }
            Game::with_cap(n, values, cap)?
        }
        (None, Some(sparse)) => {
            let mut listed = vec![None; 1 << n];
            for (key, value) in &sparse {
                let c = parse_sparse_key(key, n)?;
                if listed[c.0 as usize].replace(*value).is_some() {
                    return Err(Error::format(format!("coalition {c} listed twice")));
                }
            }
            let singles: Vec<f64> = (0..n).map(|i| listed[1 << i].unwrap_or(0.0)).collect();
            let default = file.default.unwrap_or_default();
            let values = (0..1usize << n)
                .map(|m| match (m, listed[m]) {
                    (0, _) => 0.0,
                    (_, Some(v)) => v,
                    (_, None) => match default {
                        SparseDefault::Zero => 0.0,
                        SparseDefault::Additive => Coalition(m as u32).members().map(|i| singles[i]).sum(),
                    },
                })
                .collect();
            Game::with_cap(n, values, cap)?
        }
        (Some(_), Some(_)) => return Err(Error::format("give either `values` or `sparse`, not both")),
        (None, None) => return Err(Error::format("game file needs `values` or `sparse`")),
    };
    Ok(match file.name {
        Some(name) => game.named(name),
        None => game,
    })
}

/// Writes the dense form; `load_game(&save_game(g)) == g` bit for bit.
pub fn save_game(game: &Game) -> String {
    let file = GameFile {
        name: game.name.clone(),
        n: game.n,
        values: Some(game.values.clone()),
        sparse: None,
        default: None,
    };
    let mut text = serde_json::to_string_pretty(&file).expect("game serializes");
    text.push('\n');
    text
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) fn g2() -> Game {
        Game::new(2, vec![0.0, 1.0, 0.0, 0.5]).unwrap().named("G2")
    }

    #[test]
    fn coalition_of_sets_bits() {
        assert_eq!(coalition_of(&[PlayerId(0)], 3).unwrap().mask(), 0b001);
        assert_eq!(coalition_of(&[PlayerId(0), PlayerId(2)], 3).unwrap().mask(), 0b101);
        assert_eq!(coalition_of(&[PlayerId(2), PlayerId(2)], 3).unwrap().mask(), 0b100);
        assert_eq!(coalition_of(&[], 3).unwrap().mask(), 0);
        assert!(matches!(coalition_of(&[PlayerId(3)], 3), Err(Error::Domain(_))));
    }

    #[test]
    fn subsets_enumerates_all_submasks() {
        let c = Coalition(0b1011);
        let subs: Vec<u32> = c.subsets().map(|s| s.0).collect();
        assert_eq!(
            subs,
            vec![0b0000, 0b0001, 0b0010, 0b0011, 0b1000, 0b1001, 0b1010, 0b1011]
        );
        assert_eq!(Coalition::EMPTY.subsets().count(), 1);
    }

    #[test]
    fn canonical_order_by_min_member() {
        let p = Partition::canonicalize(vec![Coalition(0b010), Coalition(0b001), Coalition(0b100)], 3).unwrap();
        assert_eq!(p.blocks(), &[Coalition(0b001), Coalition(0b010), Coalition(0b100)]);
        assert_eq!(p.to_string(), "[[1],[2],[3]]");
        let again = Partition::canonicalize(p.blocks().to_vec(), 3).unwrap();
        assert_eq!(again, p);
    }

    #[test]
    fn canonicalize_rejects_overlap_gap_and_empty() {
        let overlap = Partition::canonicalize(vec![Coalition(0b011), Coalition(0b110)], 3);
        match overlap {
            Err(Error::Partition(msg)) => assert!(msg.contains("[1,2]") && msg.contains("[2,3]"), "{msg}"),
            other => panic!("{other:?}"),
        }
        let gap = Partition::canonicalize(vec![Coalition(0b011)], 3);
        match gap {
            Err(Error::Partition(msg)) => assert!(msg.contains("[3]"), "{msg}"),
            other => panic!("{other:?}"),
        }
        assert!(Partition::canonicalize(vec![Coalition(0b111), Coalition(0)], 3).is_err());
    }

    #[test]
    fn value_lookup() {
        let g = g2();
        assert_eq!(g.value(Coalition::EMPTY).unwrap(), 0.0);
        assert_eq!(g.value(Coalition(0b11)).unwrap(), 0.5);
        assert_eq!(g.value(Coalition(0b01)).unwrap(), g.values()[1]);
        assert!(g.value(Coalition(0b100)).is_err());
    }

    #[test]
    fn game_validation() {
        assert!(Game::new(2, vec![0.0, 1.0, 2.0]).is_err());
        assert!(Game::new(1, vec![1.0, 1.0]).is_err());
        assert!(Game::new(1, vec![0.0, f64::NAN]).is_err());
        assert!(matches!(Game::with_cap(3, vec![0.0; 8], 2), Err(Error::Cap { .. })));
    }

    #[test]
    fn dense_file_loads_fixture() {
        let g = load_game(r#"{"n": 2, "values": [0, 1, 0, 0.5]}"#).unwrap();
        assert_eq!(g.values(), g2().values());
    }

    #[test]
    fn sparse_additive_default_sums_singletons() {
        let g = load_game(r#"{"n": 2, "sparse": {"1": 1, "2": 2}, "default": "additive"}"#).unwrap();
        assert_eq!(g.v(Coalition(0b11)), 3.0);
        let z = load_game(r#"{"n": 2, "sparse": {"1": 1, "2": 2}}"#).unwrap();
        assert_eq!(z.v(Coalition(0b11)), 0.0);
    }

    #[test]
    fn file_format_errors() {
        assert!(load_game(r#"{"n": 2, "values": [0, 1, 0]}"#).is_err());
        assert!(load_game(r#"{"n": 2, "values": [1, 1, 0, 0]}"#).is_err());
        assert!(load_game(r#"{"n": 2, "sparse": {"2,1": 1}}"#).is_err());
        assert!(load_game(r#"{"n": 2, "sparse": {"1,x": 1}}"#).is_err());
        assert!(load_game(r#"{"n": 2, "sparse": {"3": 1}}"#).is_err());
        assert!(load_game(r#"{"n": 25, "values": []}"#).is_err());
        assert!(load_game(r#"{"n": 1, "values": [0, 1], "sparse": {}}"#).is_err());
    }

    #[test]
    fn save_then_load_is_identity() {
        let g = Game::new(2, vec![0.0, 0.1 + 0.2, -1e-300, 1.0 / 3.0])
            .unwrap()
            .named("x");
        let back = load_game(&save_game(&g)).unwrap();
        assert_eq!(back, g);
        for (a, b) in back.values().iter().zip(g.values()) {
            assert_eq!(a.to_bits(), b.to_bits());
        }
    }

    #[test]
    fn shift_examples() {
        let (same, c) = g2().shift_to_nonneg_singletons();
        assert_eq!(same, g2());
        assert!(c.iter().all(|&x| x == 0.0));

        let one = Game::new(1, vec![0.0, -2.0]).unwrap();
        let (shifted, c) = one.shift_to_nonneg_singletons();
        assert_eq!(shifted.values(), &[0.0, 0.0]);
        assert_eq!(c, vec![2.0]);

        let two = Game::new(2, vec![0.0, -1.0, 0.0, 0.0]).unwrap();
        let (shifted, _) = two.shift_to_nonneg_singletons();
        assert_eq!(shifted.values(), &[0.0, 0.0, 0.0, 1.0]);
    }

    #[test]
    fn assumption1_check() {
        assert!(g2().check_assumption1().is_empty());
        let bad = Game::new(2, vec![0.0, -0.5, 0.0, 0.0]).unwrap();
        assert_eq!(bad.check_assumption1(), vec![PlayerId(0)]);
        assert!(bad.shift_to_nonneg_singletons().0.check_assumption1().is_empty());
    }

    #[test]
    fn nested_partition_round_trip() {
        let p = Partition::parse("[[3],[1,2]]", 3).unwrap();
        assert_eq!(p.to_nested(), vec![vec![1, 2], vec![3]]);
        assert!(Partition::parse("[[1,1],[2,3]]", 3).is_err());
        assert!(Partition::parse("[[1],[2]]", 3).is_err());
    }

    #[test]
    fn labels_decode() {
        let p = Partition::from_labels(&[0, 1, 0, 2]);
        assert_eq!(p.to_string(), "[[1,3],[2],[4]]");
    }
}
