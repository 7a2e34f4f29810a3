//! Brute-force verification over the whole partition space of small games.

use std::cmp::Ordering;
use std::collections::{BTreeSet, HashMap, HashSet};

use serde::Serialize;

use crate::dynamics::{lex_cmp, run_with, Dynamics, Lexicographic, LyapunovValue, RunOptions, StepMode, Verdict};
use crate::error::{Error, Result};
use crate::game::{Game, Partition};
use crate::generators::{random_game, RandomGameParams};
use crate::rng::Stream;

pub const ENUMERATE_MAX: usize = 12;
pub const SFMS_MAX: usize = 10;
pub const SUCCESSORS_MAX: usize = 8;
pub const INVARIANT_MAX: usize = 7;
pub const CYCLE_SEARCH_MAX: usize = 8;

/// Per-component tolerance for equality of Lyapunov values.
pub const VALUE_EQ_TOL: f64 = 1e-12;

fn cap(what: &'static str, limit: usize, n: usize) -> Result<()> {
    if n > limit {
        Err(Error::Cap {
            what,
            cap: limit,
            got: n,
        })
    } else {
        Ok(())
    }
}

/// Bell number via the Bell triangle; `None` once it overflows `u128`.
pub fn bell(n: usize) -> Option<u128> {
    let mut row: Vec<u128> = vec![1];
    for _ in 0..n {
        let mut next = Vec::with_capacity(row.len() + 1);
        next.push(*row.last().unwrap());
        for &x in &row {
            let v = next.last().unwrap().checked_add(x)?;
            next.push(v);
        }
        row = next;
    }
    Some(row[0])
}

/// Every partition of `n` players, each once, via restricted-growth strings.
pub struct PartitionSpace {
    labels: Vec<usize>,
    // prefix_max[i] = max(labels[..i])
    prefix_max: Vec<usize>,
    done: bool,
}

impl PartitionSpace {
    pub fn new(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::domain("cannot enumerate partitions of zero players"));
        }
        cap("partition enumeration", ENUMERATE_MAX, n)?;
        Ok(PartitionSpace {
            labels: vec![0; n],
            prefix_max: vec![0; n],
            done: false,
        })
    }

    fn advance(&mut self) {
        let n = self.labels.len();
        for i in (1..n).rev() {
            if self.labels[i] <= self.prefix_max[i] {
                self.labels[i] += 1;
                let m = self.prefix_max[i].max(self.labels[i]);
                for j in i + 1..n {
                    self.labels[j] = 0;
                    self.prefix_max[j] = m;
                }
                return;
            }
        }
        self.done = true;
    }
}

impl Iterator for PartitionSpace {
    type Item = Partition;

    fn next(&mut self) -> Option<Partition> {
        if self.done {
            return None;
        }
        let p = Partition::from_labels(&self.labels);
        self.advance();
        Some(p)
    }
}

pub fn enumerate_partitions(n: usize) -> Result<PartitionSpace> {
    PartitionSpace::new(n)
}

/// All SFMS partitions of `game`.
pub fn enumerate_sfms(game: &Game, tol: f64) -> Result<Vec<Partition>> {
    cap("SFMS enumeration", SFMS_MAX, game.n())?;
    let d = Dynamics::new(game, tol);
    Ok(PartitionSpace::new(game.n())?
        .filter(|p| d.is_sfms(p).holds())
        .collect())
}

#[derive(Debug, Clone, Serialize)]
pub struct FixedPointReport {
    pub fixed_points: Vec<Partition>,
    pub sfms: Vec<Partition>,
    /// Set equality of the two lists.
    pub equal: bool,
    /// Fixed points that are not SFMS.
    pub fixed_not_sfms: Vec<Partition>,
    /// SFMS partitions that are not fixed.
    pub sfms_not_fixed: Vec<Partition>,
}

/// Partitions with `composite_step(p) == p` under the lexicographic policy,
/// compared against the SFMS set.
pub fn fixed_points(game: &Game, tol: f64) -> Result<FixedPointReport> {
    cap("fixed-point enumeration", SFMS_MAX, game.n())?;
    let d = Dynamics::new(game, tol);
    let mut fixed = Vec::new();
    let mut sfms = Vec::new();
    for p in PartitionSpace::new(game.n())? {
        if d.composite_step(&p, &mut Lexicographic).0 == p {
            fixed.push(p.clone());
        }
        if d.is_sfms(&p).holds() {
            sfms.push(p);
        }
    }
    let fs: BTreeSet<_> = fixed.iter().cloned().collect();
    let ss: BTreeSet<_> = sfms.iter().cloned().collect();
    Ok(FixedPointReport {
        equal: fs == ss,
        fixed_not_sfms: fs.difference(&ss).cloned().collect(),
        sfms_not_fixed: ss.difference(&fs).cloned().collect(),
        fixed_points: fixed,
        sfms,
    })
}

/// Every partition reachable as split-then-merge-closure from `p`, over all
/// admissible merge orders.
pub fn enumerate_successors(game: &Game, p: &Partition, tol: f64) -> Result<BTreeSet<Partition>> {
    cap("successor enumeration", SUCCESSORS_MAX, game.n())?;
    Ok(successors_with(&Dynamics::new(game, tol), p))
}

fn successors_with(d: &Dynamics<'_>, p: &Partition) -> BTreeSet<Partition> {
    let (split, _) = d.split_operator(p);
    let mut terminal = BTreeSet::new();
    let mut visited = HashSet::new();
    let mut stack = vec![split];
    while let Some(q) = stack.pop() {
        if !visited.insert(q.clone()) {
            continue;
        }
        let pairs = d.profitable_pairs(&q);
        if pairs.is_empty() {
            terminal.insert(q);
            continue;
        }
        for (i, j) in pairs {
            stack.push(q.merge_blocks(i, j));
        }
    }
    terminal
}

fn values_equal(a: &LyapunovValue, b: &LyapunovValue) -> bool {
    (a.neg_fairness - b.neg_fairness).abs() <= VALUE_EQ_TOL && (a.surplus - b.surplus).abs() <= VALUE_EQ_TOL
}

/// The set-valued map over the full partition space of one game.
#[derive(Debug, Clone)]
pub struct TransitionSystem {
    pub states: Vec<Partition>,
    pub values: Vec<LyapunovValue>,
    pub successors: Vec<Vec<usize>>,
    index: HashMap<Partition, usize>,
}

impl TransitionSystem {
    pub fn build(game: &Game, tol: f64) -> Result<Self> {
        cap("invariant-set computation", INVARIANT_MAX, game.n())?;
        let d = Dynamics::new(game, tol);
        let states: Vec<Partition> = PartitionSpace::new(game.n())?.collect();
        let index: HashMap<Partition, usize> = states.iter().cloned().zip(0..).collect();
        let values = states.iter().map(|p| d.lyapunov(p)).collect();
        let successors = states
            .iter()
            .map(|p| successors_with(&d, p).iter().map(|q| index[q]).collect())
            .collect();
        Ok(TransitionSystem {
            states,
            values,
            successors,
            index,
        })
    }

    pub fn index_of(&self, p: &Partition) -> Option<usize> {
        self.index.get(p).copied()
    }

    /// States with some successor of equal Lyapunov value.
    pub fn zero_progress(&self) -> BTreeSet<usize> {
        (0..self.states.len())
            .filter(|&k| {
                self.successors[k]
                    .iter()
                    .any(|&s| values_equal(&self.values[k], &self.values[s]))
            })
            .collect()
    }

    /// Largest subset of the zero-progress set in which every state keeps a
    /// successor inside the subset.
    pub fn largest_weakly_invariant(&self) -> BTreeSet<usize> {
        let mut set = self.zero_progress();
        loop {
            let drop: Vec<usize> = set
                .iter()
                .copied()
                .filter(|&k| !self.successors[k].iter().any(|s| set.contains(s)))
                .collect();
            if drop.is_empty() {
                return set;
            }
            for k in drop {
                set.remove(&k);
            }
        }
    }

    pub fn partitions(&self, ids: &BTreeSet<usize>) -> BTreeSet<Partition> {
        ids.iter().map(|&k| self.states[k].clone()).collect()
    }
}

pub fn zero_progress_set(game: &Game, tol: f64) -> Result<BTreeSet<Partition>> {
    let ts = TransitionSystem::build(game, tol)?;
    Ok(ts.partitions(&ts.zero_progress()))
}

pub fn largest_weakly_invariant(game: &Game, tol: f64) -> Result<BTreeSet<Partition>> {
    let ts = TransitionSystem::build(game, tol)?;
    Ok(ts.partitions(&ts.largest_weakly_invariant()))
}

/// Uniform label per player, canonicalised.
pub fn random_partition(n: usize, stream: &mut Stream) -> Partition {
    let labels: Vec<usize> = (0..n).map(|_| stream.below(n)).collect();
    let mut relabel = HashMap::new();
    let rgs: Vec<usize> = labels
        .iter()
        .map(|l| {
            let next = relabel.len();
            *relabel.entry(*l).or_insert(next)
        })
        .collect();
    Partition::from_labels(&rgs)
}

/// A transition whose Lyapunov value moved the wrong way.
#[derive(Debug, Clone, Serialize)]
pub struct AuditFinding {
    pub fingerprint: String,
    pub n: usize,
    /// Full value table, so the finding replays on its own.
    pub values: Vec<f64>,
    pub partition: Partition,
    pub successor: Partition,
    pub before: LyapunovValue,
    pub after: LyapunovValue,
}

#[derive(Debug, Clone, Serialize)]
pub struct AuditReport {
    pub games_tested: usize,
    pub steps_tested: usize,
    pub mode: StepMode,
    pub tol: f64,
    /// Split-phase failures; must be empty.
    pub split_violations: Vec<AuditFinding>,
    /// Full-step lexicographic decreases; archived, not failures.
    pub lex_violations: Vec<AuditFinding>,
}

impl AuditReport {
    pub fn passed(&self) -> bool {
        self.split_violations.is_empty()
    }
}

fn finding(game: &Game, d: &Dynamics<'_>, p: &Partition, q: &Partition) -> AuditFinding {
    AuditFinding {
        fingerprint: game.fingerprint(),
        n: game.n(),
        values: game.values().to_vec(),
        partition: p.clone(),
        successor: q.clone(),
        before: d.lyapunov(p),
        after: d.lyapunov(q),
    }
}

/// Checks the split phase at one state: fairness annihilated and the
/// Lyapunov value not lexicographically lower.
fn split_ok(d: &Dynamics<'_>, p: &Partition) -> (bool, Partition) {
    let (split, _) = d.split_operator(p);
    let before = d.lyapunov(p);
    let after = d.lyapunov(&split);
    let n = p.n() as f64;
    let ok = after.psi() <= d.tol() * n && lex_cmp(&after, &before) != Ordering::Less;
    (ok, split)
}

/// Audits one trajectory in place, appending to `report`.
pub fn audit_trajectory(game: &Game, start: &Partition, opts: &RunOptions, report: &mut AuditReport) {
    let d = Dynamics::new(game, opts.tol);
    let trace = run_with(&d, start, opts);
    let states: Vec<&Partition> = trace.steps.iter().map(|s| &s.partition).collect();
    for (k, p) in states.iter().enumerate() {
        let (ok, split) = split_ok(&d, p);
        if !ok {
            report.split_violations.push(finding(game, &d, p, &split));
        }
        if let Some(q) = states.get(k + 1) {
            report.steps_tested += 1;
            let (vp, vq) = (d.lyapunov(p), d.lyapunov(q));
            if lex_cmp(&vq, &vp) == Ordering::Less && !values_equal(&vp, &vq) {
                report.lex_violations.push(finding(game, &d, p, q));
            }
        }
    }
}

/// Audits trajectories on `games` random Assumption-1 games of `n` players.
pub fn monotonicity_audit(games: usize, n: usize, seed: u64, mode: StepMode, tol: f64) -> Result<AuditReport> {
    let mut report = AuditReport {
        games_tested: 0,
        steps_tested: 0,
        mode,
        tol,
        split_violations: Vec::new(),
        lex_violations: Vec::new(),
    };
    let opts = RunOptions {
        mode,
        tol,
        ..RunOptions::for_players(n)
    };
    for k in 0..games {
        let game = random_game(&RandomGameParams::sweep(n), seed.wrapping_add(k as u64))?;
        let start = random_partition(n, &mut Stream::derived(seed, k as u64));
        audit_trajectory(&game, &start, &opts, &mut report);
        report.games_tested += 1;
    }
    Ok(report)
}

#[derive(Debug, Clone, Serialize)]
pub struct CycleRecord {
    pub fingerprint: String,
    pub game_seed: u64,
    pub start: Partition,
    pub entry: usize,
    pub period: usize,
    pub psi_range: f64,
    pub phi_range: f64,
    pub states: Vec<Partition>,
}

#[derive(Debug, Clone, Serialize)]
pub struct CycleReport {
    pub runs: usize,
    pub fixed_points: usize,
    pub truncated: usize,
    pub cycles: Vec<CycleRecord>,
    /// Largest period seen; fixed points count as period 1.
    pub max_period: usize,
    /// Largest transition count before entering the terminal set.
    pub max_entry: usize,
}

impl CycleReport {
    /// Every detected cycle keeps `Psi` and `Phi` constant within `eps`.
    pub fn value_preserving(&self, eps: f64) -> bool {
        self.cycles.iter().all(|c| c.psi_range <= eps && c.phi_range <= eps)
    }
}

/// Runs `starts_per_game` trajectories on each of `num_games` random games.
pub fn cycle_search(
    num_games: usize,
    starts_per_game: usize,
    n: usize,
    seed: u64,
    mode: StepMode,
    tol: f64,
) -> Result<CycleReport> {
    cap("cycle search", CYCLE_SEARCH_MAX, n)?;
    let opts = RunOptions {
        mode,
        tol,
        ..RunOptions::for_players(n)
    };
    let mut report = CycleReport {
        runs: 0,
        fixed_points: 0,
        truncated: 0,
        cycles: Vec::new(),
        max_period: 0,
        max_entry: 0,
    };
    for k in 0..num_games {
        let game_seed = seed.wrapping_add(k as u64);
        let game = random_game(&RandomGameParams::sweep(n), game_seed)?;
        let d = Dynamics::new(&game, tol);
        let mut stream = Stream::derived(seed, k as u64);
        for _ in 0..starts_per_game {
            let start = random_partition(n, &mut stream);
            let trace = run_with(&d, &start, &opts);
            report.runs += 1;
            match trace.verdict {
                Verdict::FixedPoint { t } => {
                    report.fixed_points += 1;
                    report.max_period = report.max_period.max(1);
                    report.max_entry = report.max_entry.max(t);
                }
                Verdict::Cycle { entry, period } => {
                    let (psi_range, phi_range) = trace.cycle_ranges();
                    report.max_period = report.max_period.max(period);
                    report.max_entry = report.max_entry.max(entry);
                    report.cycles.push(CycleRecord {
                        fingerprint: game.fingerprint(),
                        game_seed,
                        start,
                        entry,
                        period,
                        psi_range,
                        phi_range,
                        states: trace.cycle_states().iter().map(|s| s.partition.clone()).collect(),
                    });
                }
                Verdict::Truncated { .. } => report.truncated += 1,
            }
        }
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::game::Coalition;

    /// Independent Bell oracle: sum of Stirling numbers of the second kind.
    fn bell_by_stirling(n: usize) -> u128 {
        let mut s = vec![vec![0u128; n + 1]; n + 1];
        s[0][0] = 1;
        for i in 1..=n {
            for k in 1..=i {
                s[i][k] = k as u128 * s[i - 1][k] + s[i - 1][k - 1];
            }
        }
        s[n].iter().sum()
    }

    fn g2() -> Game {
        Game::new(2, vec![0.0, 1.0, 0.0, 0.5]).unwrap()
    }

    #[test]
    fn bell_numbers() {
        assert_eq!(bell(0), Some(1));
        assert_eq!(bell(1), Some(1));
        assert_eq!(bell(3), Some(5));
        assert_eq!(bell(10), Some(115_975));
        for n in 0..=25 {
            assert_eq!(bell(n), Some(bell_by_stirling(n)), "n={n}");
        }
        assert_eq!(bell(200), None);
    }

    #[test]
    fn enumeration_counts_and_uniqueness() {
        for n in 1..=9 {
            let all: Vec<Partition> = enumerate_partitions(n).unwrap().collect();
            assert_eq!(all.len() as u128, bell(n).unwrap(), "n={n}");
            let distinct: HashSet<_> = all.iter().collect();
            assert_eq!(distinct.len(), all.len());
            for p in &all {
                assert_eq!(Partition::canonicalize(p.blocks().to_vec(), n).unwrap(), *p);
            }
        }
        assert!(matches!(enumerate_partitions(13), Err(Error::Cap { cap: 12, .. })));
    }

    #[test]
    fn sfms_of_small_games() {
        assert_eq!(enumerate_sfms(&g2(), 1e-9).unwrap(), vec![Partition::singletons(2)]);
        let additive = Game::from_fn(4, |t| t.members().map(|i| 0.5 + i as f64).sum()).unwrap();
        assert_eq!(enumerate_sfms(&additive, 1e-9).unwrap().len(), 15);
        let sup = Game::from_fn(4, |t| (t.len() * t.len()) as f64).unwrap();
        assert_eq!(enumerate_sfms(&sup, 1e-9).unwrap(), vec![Partition::grand(4)]);
    }

    #[test]
    fn fixed_points_of_small_games() {
        let r = fixed_points(&g2(), 1e-9).unwrap();
        assert_eq!(r.fixed_points, vec![Partition::singletons(2)]);
        assert!(r.equal);
        let additive = Game::from_fn(4, |t| t.len() as f64).unwrap();
        let r = fixed_points(&additive, 1e-9).unwrap();
        assert_eq!(r.fixed_points.len(), 15);
        assert!(r.equal);
    }

    #[test]
    fn successor_examples() {
        let sup = Game::from_fn(4, |t| (t.len() * t.len()) as f64).unwrap();
        let grand = Partition::grand(4);
        assert_eq!(
            enumerate_successors(&sup, &grand, 1e-9).unwrap(),
            BTreeSet::from([grand])
        );

        // additive base plus bonuses on {1,2} and {3,4}: two disjoint profitable pairs
        let bonus = Game::from_fn(4, |t| {
            let mut v = t.len() as f64;
            if t.is_subset_of(Coalition(0b0011)) && t.len() == 2 {
                v += 1.0;
            }
            if t.is_subset_of(Coalition(0b1100)) && t.len() == 2 {
                v += 1.0;
            }
            if t == Coalition(0b0011).union(Coalition(0b1100)) {
                v += 2.0;
            }
            v
        })
        .unwrap();
        let succ = enumerate_successors(&bonus, &Partition::singletons(4), 1e-9).unwrap();
        assert_eq!(succ.len(), 1);
        assert_eq!(succ.iter().next().unwrap().to_string(), "[[1,2],[3,4]]");
        assert!(enumerate_successors(&Game::from_fn(9, |_| 0.0).unwrap(), &Partition::grand(9), 0.0).is_err());
    }

    #[test]
    fn invariant_sets_of_g2() {
        let e = zero_progress_set(&g2(), 1e-9).unwrap();
        assert!(e.contains(&Partition::singletons(2)));
        let i = largest_weakly_invariant(&g2(), 1e-9).unwrap();
        assert_eq!(i, BTreeSet::from([Partition::singletons(2)]));
    }

    #[test]
    fn strictly_profitable_unique_merge_is_progress() {
        // {1},{2} fair with Delta = 1 > 0: the only successor raises Phi
        let g = Game::new(2, vec![0.0, 1.0, 1.0, 3.0]).unwrap();
        let ts = TransitionSystem::build(&g, 1e-9).unwrap();
        let singles = ts.index_of(&Partition::singletons(2)).unwrap();
        assert!(!ts.zero_progress().contains(&singles));
    }

    #[test]
    fn set_inclusions_hold() {
        for seed in 0..5 {
            let g = random_game(&RandomGameParams::sweep(5), seed).unwrap();
            let ts = TransitionSystem::build(&g, 1e-9).unwrap();
            let e = ts.zero_progress();
            let i = ts.largest_weakly_invariant();
            assert!(i.is_subset(&e));
            let fixed = fixed_points(&g, 1e-9).unwrap();
            for p in fixed.fixed_points {
                let k = ts.index_of(&p).unwrap();
                assert!(i.contains(&k), "fixed point {p} outside I");
            }
        }
    }

    #[test]
    fn random_partitions_are_valid() {
        let mut s = Stream::new(5);
        for n in 1..10 {
            let p = random_partition(n, &mut s);
            assert_eq!(Partition::canonicalize(p.blocks().to_vec(), n).unwrap(), p);
        }
    }

    #[test]
    fn additive_games_only_fix() {
        let g = Game::from_fn(5, |t| t.len() as f64).unwrap();
        let d = Dynamics::new(&g, 1e-9);
        let mut s = Stream::new(1);
        for _ in 0..20 {
            let p = random_partition(5, &mut s);
            let tr = run_with(&d, &p, &RunOptions::for_players(5));
            assert_eq!(tr.verdict, Verdict::FixedPoint { t: 0 });
        }
    }
}
