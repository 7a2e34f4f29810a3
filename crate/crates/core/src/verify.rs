//! Named verification sweeps over random games.
//!
//! A suite fails only on its hard checks. Findings (lexicographic decreases,
//! detected cycles) are counted and archived in the report details.
//! Random game `k` of a sweep at `n` players is `random_game(n, seed + k)`
//! with the default sweep parameters, so every reported game replays from
//! its `(n, seed)` pair.

use std::cmp::Ordering;
use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::dynamics::{lex_cmp, run_with, Dynamics, Lexicographic, RunOptions, StepMode};
use crate::error::{Error, Result};
use crate::game::{Coalition, Game, Partition};
use crate::generators::{random_game, RandomGameParams};
use crate::oracle::{
    self, bell, enumerate_partitions, random_partition, TransitionSystem, CYCLE_SEARCH_MAX, ENUMERATE_MAX,
    INVARIANT_MAX, SFMS_MAX,
};
use crate::registry::{Named, Registry};
use crate::rng::Stream;
use crate::shapley::{exact_values, DEFAULT_TOL};

/// Largest `n` at which split-fairness checks every partition.
pub const EXHAUSTIVE_SPLIT_MAX: usize = 6;
/// Largest `n` at which invariance compares terminal states against the
/// largest weakly invariant set.
pub const INVARIANT_CHECK_MAX: usize = 6;
/// Failure messages kept verbatim in a report; the count is always exact.
const FAILURES_KEPT: usize = 50;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SuiteParams {
    /// Random games per player count.
    pub games: usize,
    /// Player counts swept.
    pub n: Vec<usize>,
    pub seed: u64,
    pub tol: f64,
    /// Random (game, coalition) or (game, partition) samples.
    pub pairs: usize,
    /// Starting partitions per game.
    pub starts: usize,
    pub mode: StepMode,
}

impl Default for SuiteParams {
    fn default() -> Self {
        SuiteParams {
            games: 20,
            n: vec![4, 5, 6],
            seed: 0,
            tol: DEFAULT_TOL,
            pairs: 1000,
            starts: 1,
            mode: StepMode::Composite,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SuiteReport {
    pub suite: String,
    pub params: SuiteParams,
    pub passed: bool,
    /// Hard checks evaluated.
    pub checks: usize,
    pub failure_count: usize,
    /// The first few failure messages.
    pub failures: Vec<String>,
    /// Non-fatal observations.
    pub findings: usize,
    pub details: serde_json::Value,
}

struct Tally {
    checks: usize,
    failure_count: usize,
    failures: Vec<String>,
}

impl Tally {
    fn new() -> Self {
        Tally {
            checks: 0,
            failure_count: 0,
            failures: Vec::new(),
        }
    }

    fn check(&mut self, ok: bool, message: impl FnOnce() -> String) {
        self.checks += 1;
        if !ok {
            self.failure_count += 1;
            if self.failures.len() < FAILURES_KEPT {
                self.failures.push(message());
            }
        }
    }

    fn report(self, suite: &str, params: &SuiteParams, findings: usize, details: serde_json::Value) -> SuiteReport {
        SuiteReport {
            suite: suite.to_string(),
            params: params.clone(),
            passed: self.failure_count == 0,
            checks: self.checks,
            failure_count: self.failure_count,
            failures: self.failures,
            findings,
            details,
        }
    }
}

pub trait VerifySuite: Named + Send + Sync {
    fn defaults(&self) -> SuiteParams;
    fn run(&self, params: &SuiteParams) -> Result<SuiteReport>;
}

fn sweep_game(n: usize, seed: u64) -> Result<Game> {
    random_game(&RandomGameParams::sweep(n), seed)
}

fn check_ns(ns: &[usize], limit: usize, what: &'static str) -> Result<()> {
    if ns.is_empty() {
        return Err(Error::domain("no player counts given"));
    }
    match ns.iter().find(|&&n| n > limit) {
        Some(&n) => Err(Error::Cap {
            what,
            cap: limit,
            got: n,
        }),
        None => Ok(()),
    }
}

pub struct Efficiency;

impl Named for Efficiency {
    fn name(&self) -> &'static str {
        "efficiency"
    }
    fn describe(&self) -> &'static str {
        "sum of exact Shapley values equals v(S) on random (game, coalition) pairs"
    }
}

impl VerifySuite for Efficiency {
    fn defaults(&self) -> SuiteParams {
        SuiteParams {
            n: (2..=10).collect(),
            pairs: 1000,
            ..Default::default()
        }
    }

    /// `pairs` samples in total; sample `k` uses player count `n[k % len]`.
    fn run(&self, p: &SuiteParams) -> Result<SuiteReport> {
        check_ns(&p.n, 20, "efficiency sweep")?;
        let mut tally = Tally::new();
        let mut max_error = 0.0f64;
        for k in 0..p.pairs {
            let n = p.n[k % p.n.len()];
            let seed = p.seed.wrapping_add(k as u64);
            let game = sweep_game(n, seed)?;
            let mut stream = Stream::derived(p.seed, k as u64);
            let s = Coalition(1 + stream.below((1usize << n) - 1) as u32);
            let total: f64 = exact_values(&game, s).iter().sum();
            let err = (total - game.v(s)).abs();
            max_error = max_error.max(err);
            tally.check(err <= p.tol, || {
                format!("n={n} seed={seed} S={s}: |sum phi - v(S)| = {err:e}")
            });
        }
        Ok(tally.report(self.name(), p, 0, json!({ "max_error": max_error })))
    }
}

pub struct SplitFairness;

impl Named for SplitFairness {
    fn name(&self) -> &'static str {
        "split-fairness"
    }
    fn describe(&self) -> &'static str {
        "the split operator leaves no negative Shapley mass (exhaustive at n <= 6, sampled above)"
    }
}

fn split_check(d: &Dynamics<'_>, p: &Partition, tally: &mut Tally, worst: &mut f64, label: impl Fn() -> String) {
    let tol = d.tol();
    let n = p.n() as f64;
    let (split, _) = d.split_operator(p);
    let before = d.lyapunov(p);
    let after = d.lyapunov(&split);
    *worst = worst.max(after.psi());
    tally.check(after.psi() <= tol * n, || {
        format!("{}: Psi(split({p})) = {:e}", label(), after.psi())
    });
    if before.psi() > tol {
        tally.check(lex_cmp(&after, &before) == Ordering::Greater, || {
            format!("{}: split of {p} did not raise the Lyapunov value", label())
        });
    }
}

impl VerifySuite for SplitFairness {
    fn defaults(&self) -> SuiteParams {
        SuiteParams {
            n: vec![4, 5, 6, 8, 10],
            games: 20,
            pairs: 10_000,
            ..Default::default()
        }
    }

    /// `games` games per exhaustive `n`, `pairs` samples per sampled `n`.
    fn run(&self, p: &SuiteParams) -> Result<SuiteReport> {
        check_ns(&p.n, 20, "split-fairness sweep")?;
        let mut tally = Tally::new();
        let mut worst = 0.0f64;
        let mut partitions = 0usize;
        for &n in &p.n {
            if n <= EXHAUSTIVE_SPLIT_MAX {
                for k in 0..p.games {
                    let seed = p.seed.wrapping_add(k as u64);
                    let game = sweep_game(n, seed)?;
                    let d = Dynamics::new(&game, p.tol);
                    for part in enumerate_partitions(n)? {
                        partitions += 1;
                        split_check(&d, &part, &mut tally, &mut worst, || format!("n={n} seed={seed}"));
                    }
                }
            } else {
                for k in 0..p.pairs {
                    let seed = p.seed.wrapping_add(k as u64);
                    let game = sweep_game(n, seed)?;
                    let d = Dynamics::uncached(&game, p.tol);
                    let part = random_partition(n, &mut Stream::derived(seed, n as u64));
                    partitions += 1;
                    split_check(&d, &part, &mut tally, &mut worst, || format!("n={n} seed={seed}"));
                }
            }
        }
        Ok(tally.report(
            self.name(),
            p,
            0,
            json!({ "partitions_checked": partitions, "max_psi_after_split": worst }),
        ))
    }
}

pub struct FixedPointSfms;

impl Named for FixedPointSfms {
    fn name(&self) -> &'static str {
        "fixed-point-sfms"
    }
    fn describe(&self) -> &'static str {
        "fixed points of the composite map coincide with the SFMS partitions"
    }
}

impl VerifySuite for FixedPointSfms {
    fn defaults(&self) -> SuiteParams {
        SuiteParams {
            n: vec![4, 5, 6],
            games: 100,
            ..Default::default()
        }
    }

    fn run(&self, p: &SuiteParams) -> Result<SuiteReport> {
        check_ns(&p.n, SFMS_MAX.min(ENUMERATE_MAX), "fixed-point enumeration")?;
        let mut tally = Tally::new();
        let (mut fixed_not_sfms, mut sfms_not_fixed, mut atomic_mismatches) = (0, 0, 0);
        let mut first_mismatch = serde_json::Value::Null;
        for &n in &p.n {
            for k in 0..p.games {
                let seed = p.seed.wrapping_add(k as u64);
                let game = sweep_game(n, seed)?;
                let report = oracle::fixed_points(&game, p.tol)?;
                fixed_not_sfms += report.fixed_not_sfms.len();
                sfms_not_fixed += report.sfms_not_fixed.len();
                if !report.equal && first_mismatch.is_null() {
                    first_mismatch = json!({
                        "n": n,
                        "seed": seed,
                        "fixed_not_sfms": report.fixed_not_sfms,
                        "sfms_not_fixed": report.sfms_not_fixed,
                    });
                }
                tally.check(report.equal, || {
                    let show = |ps: &[Partition]| ps.iter().map(|q| q.to_string()).collect::<Vec<_>>().join(" ");
                    format!(
                        "n={n} seed={seed}: fixed but not SFMS: {{{}}}; SFMS but not fixed: {{{}}}",
                        show(&report.fixed_not_sfms),
                        show(&report.sfms_not_fixed)
                    )
                });
                let d = Dynamics::new(&game, p.tol);
                let sfms: BTreeSet<&Partition> = report.sfms.iter().collect();
                atomic_mismatches += enumerate_partitions(n)?
                    .filter(|q| (d.atomic_step(q, &mut Lexicographic).0 == *q) != sfms.contains(q))
                    .count();
            }
        }
        Ok(tally.report(
            self.name(),
            p,
            0,
            json!({
                "fixed_not_sfms": fixed_not_sfms,
                "sfms_not_fixed": sfms_not_fixed,
                "first_mismatch": first_mismatch,
                "atomic_step_mismatches": atomic_mismatches,
            }),
        ))
    }
}

pub struct Invariance;

impl Named for Invariance {
    fn name(&self) -> &'static str {
        "invariance"
    }
    fn describe(&self) -> &'static str {
        "lexicographic-policy runs terminate within Bell(n) and end inside the largest weakly invariant set"
    }
}

impl VerifySuite for Invariance {
    fn defaults(&self) -> SuiteParams {
        SuiteParams {
            n: vec![4, 5, 6, 7, 8],
            games: 20,
            starts: 10,
            ..Default::default()
        }
    }

    fn run(&self, p: &SuiteParams) -> Result<SuiteReport> {
        check_ns(&p.n, CYCLE_SEARCH_MAX, "invariance sweep")?;
        let mut tally = Tally::new();
        let (mut runs, mut fixed, mut cycles, mut max_entry) = (0, 0, 0, 0);
        let mut comparison = Vec::new();
        for &n in &p.n {
            let budget = bell(n).expect("small n") as usize;
            let opts = RunOptions {
                mode: p.mode,
                tol: p.tol,
                max_iters: budget,
                ..RunOptions::for_players(n)
            };
            let compare = n <= INVARIANT_CHECK_MAX.min(INVARIANT_MAX) && p.mode == StepMode::Composite;
            for k in 0..p.games {
                let seed = p.seed.wrapping_add(k as u64);
                let game = sweep_game(n, seed)?;
                let d = Dynamics::new(&game, p.tol);
                let ts = if compare {
                    Some(TransitionSystem::build(&game, p.tol)?)
                } else {
                    None
                };
                let invariant = ts.as_ref().map(|ts| ts.largest_weakly_invariant());
                let mut stream = Stream::derived(seed, n as u64);
                for _ in 0..p.starts {
                    let start = random_partition(n, &mut stream);
                    let trace = run_with(&d, &start, &opts);
                    runs += 1;
                    if let Some(entry) = trace.verdict.entry() {
                        max_entry = max_entry.max(entry);
                        if trace.cycle_states().len() == 1 {
                            fixed += 1;
                        } else {
                            cycles += 1;
                        }
                    }
                    tally.check(trace.verdict.is_finite() && trace.transitions() <= budget, || {
                        format!(
                            "n={n} seed={seed} start={start}: {:?} after {} steps",
                            trace.verdict,
                            trace.transitions()
                        )
                    });
                    if let (Some(ts), Some(inv)) = (&ts, &invariant) {
                        for step in trace.cycle_states() {
                            let inside = ts.index_of(&step.partition).is_some_and(|i| inv.contains(&i));
                            tally.check(inside, || {
                                format!(
                                    "n={n} seed={seed} start={start}: terminal {} outside the invariant set",
                                    step.partition
                                )
                            });
                        }
                    }
                }
                if let (Some(ts), Some(inv)) = (&ts, &invariant) {
                    // Terminal states of the lexicographic policy from every start.
                    let mut lex_terminal = BTreeSet::new();
                    for start in &ts.states {
                        let trace = run_with(&d, start, &opts);
                        for step in trace.cycle_states() {
                            lex_terminal.insert(ts.index_of(&step.partition).expect("state space is complete"));
                        }
                    }
                    let outside = lex_terminal.difference(inv).count();
                    tally.check(outside == 0, || {
                        format!("n={n} seed={seed}: {outside} lexicographic terminal states outside the invariant set")
                    });
                    comparison.push(json!({
                        "n": n,
                        "seed": seed,
                        "zero_progress": ts.zero_progress().len(),
                        "invariant": inv.len(),
                        "lex_terminal": lex_terminal.len(),
                        "invariant_not_lex_terminal": inv.difference(&lex_terminal).count(),
                    }));
                }
            }
        }
        let details = json!({
            "runs": runs,
            "fixed_points": fixed,
            "cycles": cycles,
            "max_entry": max_entry,
            "invariant_vs_lex": comparison,
        });
        Ok(tally.report(self.name(), p, 0, details))
    }
}

pub struct MonotonicityAudit;

impl Named for MonotonicityAudit {
    fn name(&self) -> &'static str {
        "monotonicity-audit"
    }
    fn describe(&self) -> &'static str {
        "split phase never lowers the Lyapunov value; full-step decreases are archived"
    }
}

impl VerifySuite for MonotonicityAudit {
    fn defaults(&self) -> SuiteParams {
        SuiteParams {
            n: vec![5],
            games: 1000,
            ..Default::default()
        }
    }

    fn run(&self, p: &SuiteParams) -> Result<SuiteReport> {
        check_ns(&p.n, 20, "monotonicity audit")?;
        let mut tally = Tally::new();
        let mut findings = 0;
        let mut reports = Vec::new();
        for &n in &p.n {
            let report = oracle::monotonicity_audit(p.games, n, p.seed, p.mode, p.tol)?;
            // One hard check per audited state.
            tally.checks += report.steps_tested + report.games_tested;
            for f in &report.split_violations {
                tally.failure_count += 1;
                if tally.failures.len() < FAILURES_KEPT {
                    tally.failures.push(format!(
                        "n={n} game {}: split of {} -> {} gave {:?} from {:?}",
                        f.fingerprint, f.partition, f.successor, f.after, f.before
                    ));
                }
            }
            findings += report.lex_violations.len();
            reports.push(report);
        }
        Ok(tally.report(self.name(), p, findings, json!({ "audits": reports })))
    }
}

pub struct CycleSearch;

impl Named for CycleSearch {
    fn name(&self) -> &'static str {
        "cycle-search"
    }
    fn describe(&self) -> &'static str {
        "every detected cycle keeps Psi and Phi constant"
    }
}

impl VerifySuite for CycleSearch {
    fn defaults(&self) -> SuiteParams {
        SuiteParams {
            n: vec![4, 5, 6, 7, 8],
            games: 20,
            starts: 5,
            ..Default::default()
        }
    }

    fn run(&self, p: &SuiteParams) -> Result<SuiteReport> {
        check_ns(&p.n, CYCLE_SEARCH_MAX, "cycle search")?;
        let mut tally = Tally::new();
        let mut findings = 0;
        let mut reports = Vec::new();
        for &n in &p.n {
            let report = oracle::cycle_search(p.games, p.starts, n, p.seed, p.mode, p.tol)?;
            // Runs ending in a fixed point pass trivially.
            tally.checks += report.runs - report.cycles.len();
            for c in &report.cycles {
                tally.check(c.psi_range <= p.tol && c.phi_range <= p.tol, || {
                    format!(
                        "n={n} seed={} start={}: period-{} cycle with Psi range {:e}, Phi range {:e}",
                        c.game_seed, c.start, c.period, c.psi_range, c.phi_range
                    )
                });
            }
            findings += report.cycles.len();
            reports.push(json!({ "n": n, "report": report }));
        }
        let runs: usize = reports
            .iter()
            .map(|r| r["report"]["runs"].as_u64().unwrap_or(0) as usize)
            .sum();
        Ok(tally.report(self.name(), p, findings, json!({ "runs": runs, "searches": reports })))
    }
}

pub fn suites() -> Registry<dyn VerifySuite> {
    let mut r: Registry<dyn VerifySuite> = Registry::new("verify suite");
    r.register(Box::new(Efficiency))
        .register(Box::new(SplitFairness))
        .register(Box::new(FixedPointSfms))
        .register(Box::new(Invariance))
        .register(Box::new(MonotonicityAudit))
        .register(Box::new(CycleSearch));
    r
}
