//! Split/merge coalition dynamics.

mod engine;
mod fairness;
mod policy;
mod run;
mod step;

pub use engine::{
    describe_ops, lex_cmp, lex_cmp_tol, merge_surplus, split_rule, Dynamics, LyapunovValue, Op, SfmsVerdict,
};
pub use fairness::Fairness;
pub use policy::{Lexicographic, MergePolicy, MergeSelector, RandomOrder};
pub use run::{default_max_iters, run, run_with, RunOptions, Trace, TraceStep, Verdict, MAX_DEFAULT_ITERS};
pub use step::{step_rules, Atomic, Composite, StepMode, StepRule};
