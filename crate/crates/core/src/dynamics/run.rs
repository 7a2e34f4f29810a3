//! Trajectories: iteration, fixed-point and cycle detection, serialization.

use std::collections::HashMap;
use std::fmt::Write as _;

use serde::Serialize;

use crate::game::{Game, Partition};
use crate::oracle::bell;

use super::engine::{describe_ops, Dynamics, LyapunovValue};
use super::policy::MergePolicy;
use super::step::StepMode;

/// Iteration budget used when none is given: `Bell(n)`, capped.
pub const MAX_DEFAULT_ITERS: usize = 1_000_000;

pub fn default_max_iters(n: usize) -> usize {
    bell(n).map_or(MAX_DEFAULT_ITERS, |b| b.min(MAX_DEFAULT_ITERS as u128) as usize)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RunOptions {
    pub mode: StepMode,
    pub tol: f64,
    pub policy: MergePolicy,
    pub max_iters: usize,
}

impl RunOptions {
    pub fn for_players(n: usize) -> Self {
        RunOptions {
            mode: StepMode::Composite,
            tol: crate::shapley::DEFAULT_TOL,
            policy: MergePolicy::Lexicographic,
            max_iters: default_max_iters(n),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TraceStep {
    pub t: usize,
    pub op: String,
    pub partition: Partition,
    pub psi: f64,
    pub phi: f64,
}

impl TraceStep {
    pub fn lyapunov(&self) -> LyapunovValue {
        LyapunovValue {
            neg_fairness: 0.0 - self.psi,
            surplus: self.phi,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Verdict {
    /// The state at `t` maps to itself.
    FixedPoint { t: usize },
    /// The state at `entry` reappears at `entry + period`.
    Cycle { entry: usize, period: usize },
    /// No fixed point or revisit within `max_iters` transitions.
    Truncated { max_iters: usize },
}

impl Verdict {
    pub fn is_finite(&self) -> bool {
        !matches!(self, Verdict::Truncated { .. })
    }

    /// First time the trajectory is inside its terminal fixed point or cycle.
    pub fn entry(&self) -> Option<usize> {
        match *self {
            Verdict::FixedPoint { t } => Some(t),
            Verdict::Cycle { entry, .. } => Some(entry),
            Verdict::Truncated { .. } => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Trace {
    pub steps: Vec<TraceStep>,
    pub verdict: Verdict,
}

impl Trace {
    pub fn last(&self) -> &TraceStep {
        self.steps.last().expect("a trace has its initial state")
    }

    /// Number of transitions taken.
    pub fn transitions(&self) -> usize {
        self.steps.len() - 1
    }

    /// Steps forming the terminal cycle (one state per cycle position).
    pub fn cycle_states(&self) -> &[TraceStep] {
        match self.verdict {
            Verdict::Cycle { entry, period } => &self.steps[entry..entry + period],
            Verdict::FixedPoint { t } => &self.steps[t..=t],
            Verdict::Truncated { .. } => &[],
        }
    }

    /// Ranges (max - min) of `Psi` and `Phi` over the terminal cycle.
    pub fn cycle_ranges(&self) -> (f64, f64) {
        let states = self.cycle_states();
        let range = |f: fn(&TraceStep) -> f64| {
            let (lo, hi) = states
                .iter()
                .map(f)
                .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), x| (lo.min(x), hi.max(x)));
            if states.is_empty() {
                0.0
            } else {
                hi - lo
            }
        };
        (range(|s| s.psi), range(|s| s.phi))
    }

    /// One JSON object per line: `t`, `op`, `partition`, `psi`, `phi`.
    pub fn to_jsonl(&self) -> String {
        let mut out = String::new();
        for s in &self.steps {
            out.push_str(&serde_json::to_string(s).expect("trace step serializes"));
            out.push('\n');
        }
        out
    }

    /// `t,psi,phi,num_coalitions` rows.
    pub fn plot_csv(&self) -> String {
        let mut out = String::from("t,psi,phi,num_coalitions\n");
        for s in &self.steps {
            writeln!(out, "{},{},{},{}", s.t, s.psi, s.phi, s.partition.len()).unwrap();
        }
        out
    }

    /// One row per player, one column per iteration; entries are the 1-based
    /// index of the player's block in canonical order.
    pub fn membership_csv(&self) -> String {
        let n = self.steps[0].partition.n();
        let mut out = String::from("player");
        for s in &self.steps {
            write!(out, ",t{}", s.t).unwrap();
        }
        out.push('\n');
        for i in 0..n {
            write!(out, "{}", i + 1).unwrap();
            for s in &self.steps {
                write!(out, ",{}", s.partition.block_of(i) + 1).unwrap();
            }
            out.push('\n');
        }
        out
    }
}

fn record(d: &Dynamics<'_>, t: usize, op: String, partition: Partition) -> TraceStep {
    let v = d.lyapunov(&partition);
    TraceStep {
        t,
        op,
        psi: v.psi(),
        phi: v.surplus,
        partition,
    }
}

/// Runs the dynamics from `start` until a fixed point, a revisited state or
/// `max_iters` transitions.
pub fn run(game: &Game, start: &Partition, opts: &RunOptions) -> Trace {
    let d = Dynamics::new(game, opts.tol);
    run_with(&d, start, opts)
}

/// As [`run`], reusing an evaluation context.
pub fn run_with(d: &Dynamics<'_>, start: &Partition, opts: &RunOptions) -> Trace {
    let rule = opts.mode.rule();
    let mut selector = opts.policy.selector();
    let mut steps = vec![record(d, 0, "none".into(), start.clone())];
    let mut seen: HashMap<Partition, usize> = HashMap::from([(start.clone(), 0)]);
    let mut t = 0;
    let verdict = loop {
        let cur = &steps[t].partition;
        let (next, ops) = rule.step(d, cur, selector.as_mut());
        if next == *cur {
            break Verdict::FixedPoint { t };
        }
        if t == opts.max_iters {
            break Verdict::Truncated {
                max_iters: opts.max_iters,
            };
        }
        let revisit = seen.get(&next).copied();
        seen.entry(next.clone()).or_insert(t + 1);
        steps.push(record(d, t + 1, describe_ops(&ops), next));
        t += 1;
        if let Some(entry) = revisit {
            break Verdict::Cycle {
                entry,
                period: t - entry,
            };
        }
    };
    Trace { steps, verdict }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn g2() -> Game {
        Game::new(2, vec![0.0, 1.0, 0.0, 0.5]).unwrap()
    }

    #[test]
    fn sfms_start_is_fixed_at_zero() {
        let g = g2();
        let tr = run(&g, &Partition::singletons(2), &RunOptions::for_players(2));
        assert_eq!(tr.verdict, Verdict::FixedPoint { t: 0 });
        assert_eq!(tr.steps.len(), 1);
    }

    #[test]
    fn g2_from_grand_fixes_at_one() {
        let g = g2();
        let tr = run(&g, &Partition::grand(2), &RunOptions::for_players(2));
        assert_eq!(tr.verdict, Verdict::FixedPoint { t: 1 });
        assert_eq!(tr.last().partition, Partition::singletons(2));
        let jsonl = tr.to_jsonl();
        let lines: Vec<&str> = jsonl.lines().collect();
        assert_eq!(lines.len(), 2);
        assert_eq!(
            lines[0],
            r#"{"t":0,"op":"none","partition":[[1,2]],"psi":0.25,"phi":0.5}"#
        );
        assert_eq!(
            lines[1],
            r#"{"t":1,"op":"split:[1,2]→[[1],[2]]","partition":[[1],[2]],"psi":0.0,"phi":1.0}"#
        );
        assert_eq!(tr.plot_csv(), "t,psi,phi,num_coalitions\n0,0.25,0.5,1\n1,0,1,2\n");
        assert_eq!(tr.membership_csv(), "player,t0,t1\n1,1,1\n2,1,2\n");
    }

    #[test]
    fn truncation_is_reported() {
        let sup = Game::from_fn(4, |t| (t.len() * t.len()) as f64).unwrap();
        let opts = RunOptions {
            mode: StepMode::Atomic,
            max_iters: 1,
            ..RunOptions::for_players(4)
        };
        let tr = run(&sup, &Partition::singletons(4), &opts);
        assert_eq!(tr.verdict, Verdict::Truncated { max_iters: 1 });
        assert_eq!(tr.steps.len(), 2);
    }

    #[test]
    fn default_budget_is_bell() {
        assert_eq!(default_max_iters(3), 5);
        assert_eq!(default_max_iters(10), 115_975);
        assert_eq!(default_max_iters(20), MAX_DEFAULT_ITERS);
    }
}
