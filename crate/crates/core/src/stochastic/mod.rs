//! Frequency-guided random search and the base step.
//!
//! The base step runs an exhaustive search over short programs, builds word
//! and word-pair frequencies from the partial programs it finds, then spends
//! a number of cycles generating longer programs from those frequencies,
//! alternating independent (unigram) and Markov (bigram) sampling and
//! refreshing the frequencies after every cycle.

mod model;
mod sampler;

use std::time::Duration;

pub use model::{build_model, program_probability, FrequencyModel, GenMode, FLOOR};
pub use sampler::{chunk_rng, generate, sample_program, Draw, GenConfig, GenOutcome, Sampler, CHUNK, MAX_ATTEMPTS};

use crate::enumerator::{
    enumerate, EnumConfig, ForbiddenPairs, PartialProgramList, SearchAlphabet, SearchReport, SearchSpace,
    DEFAULT_CAPACITY,
};
use crate::testio::{EvalMode, TestSuite};
use crate::vm::{Dictionary, ExecLimits, Program};

/// Number of generation cycles in a base step.
pub const CYCLES: usize = 8;

#[derive(Debug, Clone, PartialEq)]
pub struct BaseStepParams {
    /// Exhaustive search bound.
    pub l0: usize,
    /// Longest generated program.
    pub l1: usize,
    /// Total generation time, split evenly over the cycles.
    pub time: Option<Duration>,
    /// Programs generated per cycle. When set without `time`, the step is
    /// reproducible for any number of workers.
    pub cycle_programs: Option<u64>,
    /// Optional bound on the exhaustive phase.
    pub enum_time: Option<Duration>,
    pub cycles: usize,
    pub capacity: usize,
    pub seed: u64,
    pub mode: EvalMode,
    pub limits: ExecLimits,
}

impl Default for BaseStepParams {
    fn default() -> Self {
        BaseStepParams {
            l0: 7,
            l1: 14,
            time: Some(Duration::from_secs(400)),
            cycle_programs: None,
            enum_time: None,
            cycles: CYCLES,
            capacity: DEFAULT_CAPACITY,
            seed: 0,
            mode: EvalMode::Strict,
            limits: ExecLimits::default(),
        }
    }
}

impl BaseStepParams {
    /// Time and program budgets of one generation cycle.
    pub fn cycle_budget(&self) -> (Option<Duration>, Option<u64>) {
        let cycles = self.cycles.max(1) as u32;
        (self.time.map(|t| t / cycles), self.cycle_programs)
    }
}

/// Where the base step found its program.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Phase {
    Exhaustive,
    Cycle(usize),
}

#[derive(Debug, Clone)]
pub struct CycleSummary {
    pub mode: GenMode,
    pub generated: u64,
    pub rejected: u64,
    pub best_pass: usize,
    pub elapsed: Duration,
}

#[derive(Debug, Clone)]
pub struct BaseStepReport {
    pub partials: PartialProgramList,
    pub model: FrequencyModel,
    pub found: Option<Program>,
    pub found_in: Option<Phase>,
    pub exhaustive: SearchReport,
    pub cycles: Vec<CycleSummary>,
}

/// Cycle `i` (0-based) samples independently when even, Markov when odd.
pub fn cycle_mode(i: usize) -> GenMode {
    if i.is_multiple_of(2) {
        GenMode::Unigram
    } else {
        GenMode::Markov
    }
}

/// Exhaustive search to `l0`, then frequency-guided generation of lengths
/// `l0+1..=l1` over `params.cycles` cycles.
pub fn base_step(
    params: &BaseStepParams,
    suite: &TestSuite,
    dict: &Dictionary,
    alphabet: &SearchAlphabet,
    forbidden: &ForbiddenPairs,
) -> BaseStepReport {
    let ecfg = EnumConfig {
        min_len: 1,
        max_len: params.l0,
        time_budget: params.enum_time,
        capacity: params.capacity,
        mode: params.mode,
        limits: params.limits,
    };
    let exhaustive = enumerate(alphabet, forbidden, &ecfg, suite, dict);
    let mut partials = exhaustive.partials.clone();
    let mut model = build_model(&partials, dict);
    let mut report = BaseStepReport {
        found: exhaustive.found.clone(),
        found_in: exhaustive.found.as_ref().map(|_| Phase::Exhaustive),
        partials: PartialProgramList::new(params.capacity),
        model: FrequencyModel::new(),
        exhaustive,
        cycles: Vec::new(),
    };
    if report.found.is_none() && params.l1 > params.l0 {
        let space = SearchSpace::new(dict, alphabet, forbidden, suite.signature(), params.mode);
        let (time, programs) = params.cycle_budget();
        for i in 0..params.cycles {
            let mode = cycle_mode(i);
            let cfg = GenConfig {
                min_len: params.l0 + 1,
                max_len: params.l1,
                mode,
                seed: params.seed,
                time_budget: time,
                program_budget: programs,
            };
            let out = generate(
                &space,
                &model,
                &cfg,
                suite,
                params.limits,
                params.capacity,
                false,
                i as u64 + 1,
            );
            partials.merge(&out.partials);
            report.cycles.push(CycleSummary {
                mode,
                generated: out.generated,
                rejected: out.rejected,
                best_pass: out.partials.best_pass(),
                elapsed: out.elapsed,
            });
            if let Some(p) = out.found {
                report.found = Some(p);
                report.found_in = Some(Phase::Cycle(i));
                break;
            }
            model = build_model(&partials, dict);
        }
    }
    report.model = build_model(&partials, dict);
    report.partials = partials;
    report
}
