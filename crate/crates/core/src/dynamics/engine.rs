use std::cmp::Ordering;
use std::fmt;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::game::{Coalition, Game, Partition};
use crate::shapley::exact_values;

use super::fairness::{evaluate, Fairness, FairnessCache};
use super::policy::MergeSelector;

/// Vector Lyapunov value `(-Psi, Phi)`, ordered lexicographically.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LyapunovValue {
    /// `-Psi`, never positive.
    pub neg_fairness: f64,
    /// `Phi`, the summed coalition values.
    pub surplus: f64,
}

impl LyapunovValue {
    pub fn psi(&self) -> f64 {
        0.0 - self.neg_fairness
    }
}

/// Lexicographic comparison: fairness component first, then surplus.
pub fn lex_cmp(u: &LyapunovValue, v: &LyapunovValue) -> Ordering {
    lex_cmp_tol(u, v, 0.0)
}

/// Lexicographic comparison treating components within `eps` as equal.
pub fn lex_cmp_tol(u: &LyapunovValue, v: &LyapunovValue, eps: f64) -> Ordering {
    fn cmp(a: f64, b: f64, eps: f64) -> Ordering {
        if (a - b).abs() <= eps {
            Ordering::Equal
        } else if a < b {
            Ordering::Less
        } else {
            Ordering::Greater
        }
    }
    cmp(u.neg_fairness, v.neg_fairness, eps).then_with(|| cmp(u.surplus, v.surplus, eps))
}

/// One elementary move of the dynamics.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Op {
    Split { block: Coalition, parts: Vec<Coalition> },
    Merge { a: Coalition, b: Coalition },
}

impl fmt::Display for Op {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Op::Split { block, parts } => {
                write!(f, "split:{block}→[")?;
                for (k, p) in parts.iter().enumerate() {
                    if k > 0 {
                        write!(f, ",")?;
                    }
                    write!(f, "{p}")?;
                }
                write!(f, "]")
            }
            Op::Merge { a, b } => write!(f, "merge:{a}+{b}"),
        }
    }
}

/// Renders a step's moves as `none` or `;`-joined op strings.
pub fn describe_ops(ops: &[Op]) -> String {
    if ops.is_empty() {
        return "none".into();
    }
    ops.iter().map(Op::to_string).collect::<Vec<_>>().join(";")
}

/// Outcome of the SFMS test, with a witness on failure.
#[derive(Debug, Clone, PartialEq)]
pub enum SfmsVerdict {
    Sfms,
    Unfair { block: Coalition, player: usize, phi: f64 },
    Mergeable { a: Coalition, b: Coalition, surplus: f64 },
}

impl SfmsVerdict {
    pub fn holds(&self) -> bool {
        matches!(self, SfmsVerdict::Sfms)
    }
}

/// Evaluation context for one game at one tolerance.
///
/// Per-coalition fairness is memoised, so repeated steps over the same game
/// only pay for each coalition's Shapley vector once.
pub struct Dynamics<'g> {
    game: &'g Game,
    tol: f64,
    cache: Option<FairnessCache>,
}

impl<'g> Dynamics<'g> {
    pub fn new(game: &'g Game, tol: f64) -> Self {
        Dynamics {
            game,
            tol,
            cache: Some(FairnessCache::new(game.n())),
        }
    }

    /// No memo table; for one-off evaluations on large games.
    pub fn uncached(game: &'g Game, tol: f64) -> Self {
        Dynamics { game, tol, cache: None }
    }

    pub fn game(&self) -> &'g Game {
        self.game
    }

    pub fn tol(&self) -> f64 {
        self.tol
    }

    pub fn fairness(&self, s: Coalition) -> Fairness {
        match &self.cache {
            Some(c) => c.get(self.game, s, self.tol),
            None => evaluate(self.game, s, self.tol),
        }
    }

    fn check_partition(&self, p: &Partition) {
        debug_assert_eq!(p.n(), self.game.n(), "partition and game disagree on n");
    }

    /// Fairness-stable split of one coalition.
    ///
    /// A fair coalition is kept. Otherwise the negative members leave as
    /// singletons and the nonnegative residual is kept only if its own
    /// negative mass stays within `tol * |R|`; else everything dissolves.
    pub fn split_rule(&self, s: Coalition) -> Vec<Coalition> {
        let negative = self.fairness(s).negative;
        if negative.is_empty() {
            return vec![s];
        }
        let residual = s.without(negative);
        let singletons = |c: Coalition| c.members().map(Coalition::singleton);
        if residual.is_empty() || self.fairness(residual).mass > self.tol * residual.len() as f64 {
            return singletons(s).collect();
        }
        std::iter::once(residual).chain(singletons(negative)).collect()
    }

    /// Applies the split rule to every block; returns the new partition and the
    /// splits that changed something.
    pub fn split_operator(&self, p: &Partition) -> (Partition, Vec<Op>) {
        self.check_partition(p);
        let mut blocks = Vec::with_capacity(self.game.n());
        let mut ops = Vec::new();
        for &b in p.blocks() {
            let parts = self.split_rule(b);
            if parts.len() > 1 {
                ops.push(Op::Split {
                    block: b,
                    parts: sorted(parts.clone()),
                });
            }
            blocks.extend(parts);
        }
        (Partition::from_valid(blocks, p.n()), ops)
    }

    /// `v(A u B) - v(A) - v(B)` for disjoint blocks.
    pub fn merge_surplus(&self, a: Coalition, b: Coalition) -> f64 {
        let g = self.game;
        g.v(a.union(b)) - g.v(a) - g.v(b)
    }

    /// Block-index pairs `(i, j)`, `i < j`, whose merge surplus exceeds `tol`.
    pub fn profitable_pairs(&self, p: &Partition) -> Vec<(usize, usize)> {
        let blocks = p.blocks();
        let mut pairs = Vec::new();
        for i in 0..blocks.len() {
            for j in i + 1..blocks.len() {
                if self.merge_surplus(blocks[i], blocks[j]) > self.tol {
                    pairs.push((i, j));
                }
            }
        }
        pairs
    }

    /// Merges one selected profitable pair, if any.
    pub fn merge_once(&self, p: &Partition, selector: &mut dyn MergeSelector) -> Option<(Partition, Op)> {
        let pairs = self.profitable_pairs(p);
        if pairs.is_empty() {
            return None;
        }
        let (i, j) = pairs[selector.select(&pairs)];
        let op = Op::Merge {
            a: p.blocks()[i],
            b: p.blocks()[j],
        };
        Some((p.merge_blocks(i, j), op))
    }

    /// Merges profitable pairs until none remain.
    pub fn merge_closure(&self, p: &Partition, selector: &mut dyn MergeSelector) -> (Partition, Vec<Op>) {
        self.check_partition(p);
        let mut cur = p.clone();
        let mut ops = Vec::new();
        while let Some((next, op)) = self.merge_once(&cur, selector) {
            cur = next;
            ops.push(op);
        }
        (cur, ops)
    }

    /// One full iteration: split phase, then merge closure.
    pub fn composite_step(&self, p: &Partition, selector: &mut dyn MergeSelector) -> (Partition, Vec<Op>) {
        let (split, mut ops) = self.split_operator(p);
        let (merged, merges) = self.merge_closure(&split, selector);
        ops.extend(merges);
        (merged, ops)
    }

    /// Exactly one split or one merge, splits first.
    ///
    /// The split target is the first block in canonical order that has a
    /// negative member and more than one player.
    pub fn atomic_step(&self, p: &Partition, selector: &mut dyn MergeSelector) -> (Partition, Option<Op>) {
        self.check_partition(p);
        let target = p
            .blocks()
            .iter()
            .position(|&b| b.len() > 1 && !self.fairness(b).negative.is_empty());
        if let Some(k) = target {
            let block = p.blocks()[k];
            let parts = sorted(self.split_rule(block));
            let next = p.replace_block(k, &parts);
            return (next, Some(Op::Split { block, parts }));
        }
        match self.merge_once(p, selector) {
            Some((next, op)) => (next, Some(op)),
            None => (p.clone(), None),
        }
    }

    /// `Psi`: total negative Shapley mass over blocks.
    pub fn psi(&self, p: &Partition) -> f64 {
        p.blocks().iter().map(|&b| self.fairness(b).mass).sum()
    }

    /// `Phi`: total coalition value.
    pub fn phi(&self, p: &Partition) -> f64 {
        p.blocks().iter().map(|&b| self.game.v(b)).sum()
    }

    pub fn lyapunov(&self, p: &Partition) -> LyapunovValue {
        self.check_partition(p);
        LyapunovValue {
            neg_fairness: 0.0 - self.psi(p),
            surplus: self.phi(p),
        }
    }

    /// Shapley-fair (every member `>= -tol`) and merge-stable (no pair `> tol`).
    pub fn is_sfms(&self, p: &Partition) -> SfmsVerdict {
        self.check_partition(p);
        for &b in p.blocks() {
            let negative = self.fairness(b).negative;
            if let Some(player) = negative.min_member() {
                let phi = exact_values(self.game, b);
                let rank = b.members().position(|i| i == player).unwrap();
                return SfmsVerdict::Unfair {
                    block: b,
                    player,
                    phi: phi[rank],
                };
            }
        }
        if let Some(&(i, j)) = self.profitable_pairs(p).first() {
            let (a, b) = (p.blocks()[i], p.blocks()[j]);
            return SfmsVerdict::Mergeable {
                a,
                b,
                surplus: self.merge_surplus(a, b),
            };
        }
        SfmsVerdict::Sfms
    }
}

fn sorted(mut parts: Vec<Coalition>) -> Vec<Coalition> {
    parts.sort_unstable_by_key(|c| c.mask().trailing_zeros());
    parts
}

/// Split of a single coalition.
pub fn split_rule(game: &Game, s: Coalition, tol: f64) -> Result<Vec<Coalition>> {
    if s.is_empty() {
        return Err(Error::domain("cannot split the empty coalition"));
    }
    game.value(s)?;
    Ok(sorted(Dynamics::uncached(game, tol).split_rule(s)))
}

/// Merge surplus of two disjoint nonempty coalitions.
pub fn merge_surplus(game: &Game, a: Coalition, b: Coalition) -> Result<f64> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::domain("merge surplus needs nonempty coalitions"));
    }
    if !a.is_disjoint(b) {
        return Err(Error::domain(format!("coalitions {a} and {b} overlap")));
    }
    game.value(a.union(b))?;
    Ok(Dynamics::uncached(game, 0.0).merge_surplus(a, b))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::policy::{Lexicographic, MergePolicy};

    fn g2() -> Game {
        Game::new(2, vec![0.0, 1.0, 0.0, 0.5]).unwrap()
    }

    /// Singletons 0, v{1,2}=1, v{1,3}=2, v{2,3}=0, v{1,2,3}=1.1.
    fn g3() -> Game {
        Game::new(3, vec![0.0, 0.0, 0.0, 1.0, 0.0, 2.0, 0.0, 1.1]).unwrap()
    }

    fn part(text: &str, n: usize) -> Partition {
        Partition::parse(text, n).unwrap()
    }

    #[test]
    fn split_rule_examples() {
        let g = g2();
        assert_eq!(
            split_rule(&g, Coalition(0b11), 1e-9).unwrap(),
            vec![Coalition(1), Coalition(2)]
        );
        let fair = Game::from_fn(3, |t| t.len() as f64).unwrap();
        assert_eq!(
            split_rule(&fair, Coalition(0b111), 1e-9).unwrap(),
            vec![Coalition(0b111)]
        );
        assert!(split_rule(&g, Coalition::EMPTY, 1e-9).is_err());
    }

    #[test]
    fn merge_surplus_examples() {
        assert_eq!(merge_surplus(&g2(), Coalition(1), Coalition(2)).unwrap(), -0.5);
        let additive = Game::from_fn(3, |t| t.members().map(|i| i as f64 + 1.0).sum()).unwrap();
        assert_eq!(
            merge_surplus(&additive, Coalition(0b001), Coalition(0b110)).unwrap(),
            0.0
        );
        assert!(merge_surplus(&g2(), Coalition(0b11), Coalition(0b10)).is_err());
    }

    #[test]
    fn split_operator_examples() {
        let g = g2();
        let d = Dynamics::new(&g, 1e-9);
        let (after, ops) = d.split_operator(&Partition::grand(2));
        assert_eq!(after, Partition::singletons(2));
        assert_eq!(ops.len(), 1);
        assert_eq!(ops[0].to_string(), "split:[1,2]→[[1],[2]]");
        let (same, ops) = d.split_operator(&Partition::singletons(2));
        assert_eq!(same, Partition::singletons(2));
        assert!(ops.is_empty());
    }

    #[test]
    fn merge_closure_examples() {
        let g = g2();
        let d = Dynamics::new(&g, 1e-9);
        let (p, ops) = d.merge_closure(&Partition::singletons(2), &mut Lexicographic);
        assert_eq!(p, Partition::singletons(2));
        assert!(ops.is_empty());

        // strictly superadditive: every merge is profitable, surplus rises each time
        let sup = Game::from_fn(4, |t| t.len() as f64 + 0.5 * (t.len() * t.len()) as f64).unwrap();
        let d = Dynamics::new(&sup, 1e-9);
        let mut cur = Partition::singletons(4);
        let mut sel = Lexicographic;
        while let Some((next, _)) = d.merge_once(&cur, &mut sel) {
            assert!(d.phi(&next) > d.phi(&cur));
            cur = next;
        }
        assert_eq!(cur, Partition::grand(4));
    }

    #[test]
    fn composite_examples() {
        let g = g2();
        let d = Dynamics::new(&g, 1e-9);
        let (p, _) = d.composite_step(&Partition::grand(2), &mut Lexicographic);
        assert_eq!(p, Partition::singletons(2));

        let g = g3();
        let d = Dynamics::new(&g, 1e-9);
        let start = part("[[1,2],[3]]", 3);
        assert!(d.lyapunov(&start).psi() == 0.0);
        let (p, ops) = d.composite_step(&start, &mut Lexicographic);
        assert_eq!(p, Partition::grand(3));
        assert_eq!(describe_ops(&ops), "merge:[1,2]+[3]");
        // merging two fair blocks produced an unfair coalition
        assert!(d.lyapunov(&p).psi() > 0.1);
    }

    #[test]
    fn atomic_priority_and_examples() {
        let g = g2();
        let d = Dynamics::new(&g, 1e-9);
        let (p, op) = d.atomic_step(&Partition::grand(2), &mut Lexicographic);
        assert_eq!(p, Partition::singletons(2));
        assert!(matches!(op, Some(Op::Split { .. })));
        let (p, op) = d.atomic_step(&Partition::singletons(2), &mut Lexicographic);
        assert_eq!(p, Partition::singletons(2));
        assert!(op.is_none());

        // G3 from {{1,2,3}}: player 2 is unfair, and {1},{3} could also merge.
        let g = g3();
        let d = Dynamics::new(&g, 1e-9);
        let start = part("[[1,2,3]]", 3);
        let (p, op) = d.atomic_step(&start, &mut Lexicographic);
        assert!(matches!(op, Some(Op::Split { .. })));
        assert_eq!(p, part("[[1,3],[2]]", 3));
        // a violation plus a profitable pair elsewhere: the split wins
        let g5 = Game::from_fn(5, |t| {
            let core = t.intersection(Coalition(0b111));
            let rest = t.without(Coalition(0b111));
            g.v(core) + if rest == Coalition(0b11000) { 1.0 } else { 0.0 }
        })
        .unwrap();
        let d = Dynamics::new(&g5, 1e-9);
        let start = part("[[1,2,3],[4],[5]]", 5);
        assert!(!d.profitable_pairs(&start).is_empty());
        let (_, op) = d.atomic_step(&start, &mut Lexicographic);
        assert!(matches!(op, Some(Op::Split { .. })));
    }

    #[test]
    fn lyapunov_examples() {
        let g = g2();
        let d = Dynamics::new(&g, 1e-9);
        let v = d.lyapunov(&Partition::grand(2));
        assert!((v.neg_fairness + 0.25).abs() < 1e-15);
        assert_eq!(v.surplus, 0.5);
        let v = d.lyapunov(&Partition::singletons(2));
        assert_eq!(v.neg_fairness, 0.0);
        assert!(v.neg_fairness.is_sign_positive());
        assert_eq!(v.surplus, 1.0);
    }

    #[test]
    fn lex_cmp_examples() {
        let a = LyapunovValue {
            neg_fairness: 0.0,
            surplus: 1.0,
        };
        let b = LyapunovValue {
            neg_fairness: -0.25,
            surplus: 0.5,
        };
        let c = LyapunovValue {
            neg_fairness: 0.0,
            surplus: 0.5,
        };
        assert_eq!(lex_cmp(&a, &b), Ordering::Greater);
        assert_eq!(lex_cmp(&c, &a), Ordering::Less);
        assert_eq!(lex_cmp(&a, &a), Ordering::Equal);
        assert_eq!(lex_cmp_tol(&c, &a, 0.6), Ordering::Equal);
    }

    #[test]
    fn sfms_examples() {
        let g = g2();
        let d = Dynamics::new(&g, 1e-9);
        assert!(d.is_sfms(&Partition::singletons(2)).holds());
        match d.is_sfms(&Partition::grand(2)) {
            SfmsVerdict::Unfair { player, phi, .. } => {
                assert_eq!(player, 1);
                assert!((phi + 0.25).abs() < 1e-15);
            }
            other => panic!("{other:?}"),
        }
        let sup = Game::from_fn(3, |t| (t.len() * t.len()) as f64).unwrap();
        let d = Dynamics::new(&sup, 1e-9);
        assert!(d.is_sfms(&Partition::grand(3)).holds());
        assert!(matches!(
            d.is_sfms(&Partition::singletons(3)),
            SfmsVerdict::Mergeable { .. }
        ));
    }

    #[test]
    fn random_policy_is_replayable() {
        let sup = Game::from_fn(5, |t| (t.len() * t.len()) as f64).unwrap();
        let d = Dynamics::new(&sup, 1e-9);
        let mut a = MergePolicy::Random { seed: 4 }.selector();
        let mut b = MergePolicy::Random { seed: 4 }.selector();
        let mut pa = Partition::singletons(5);
        let mut pb = pa.clone();
        for _ in 0..3 {
            pa = d.merge_once(&pa, a.as_mut()).unwrap().0;
            pb = d.merge_once(&pb, b.as_mut()).unwrap().0;
            assert_eq!(pa, pb);
        }
    }

    fn fixture(name: &str) -> Game {
        let path = std::path::Path::new(env!("CARGO_MANIFEST_DIR"))
            .join("../../fixtures")
            .join(name);
        crate::game::load_game(&std::fs::read_to_string(path).unwrap()).unwrap()
    }

    #[test]
    fn unfair_residual_dissolves_into_singletons() {
        let g = fixture("split_residual_unfair.json");
        let s = Coalition::parse_labels("2,3,4", 4).unwrap();
        let f = Dynamics::new(&g, 1e-9).fairness(s);
        let r = s.without(f.negative);
        assert_eq!(r, Coalition::parse_labels("2,4", 4).unwrap());
        assert!(crate::shapley::negative_mass(&crate::shapley::shapley_exact(&g, r).unwrap()) > 1e-9);
        let parts = split_rule(&g, s, 1e-9).unwrap();
        assert_eq!(parts, s.members().map(Coalition::singleton).collect::<Vec<_>>());
    }

    #[test]
    fn merge_closure_can_rebuild_an_unfair_block() {
        let g = fixture("fixed_not_sfms.json");
        let d = Dynamics::new(&g, 1e-9);
        let p = Partition::parse("[[1,3,4],[2]]", 4).unwrap();
        assert!(!d.is_sfms(&p).holds());
        let (split, _) = d.split_operator(&p);
        assert_eq!(split.to_string(), "[[1,4],[2],[3]]");
        assert_eq!(d.composite_step(&p, &mut Lexicographic).0, p);
    }
}
