//! Exhaustive search over all programs up to a length bound.
//!
//! Programs are generated in order of instruction count. Each length is
//! split into partitions by first opcode; partitions run in parallel and are
//! merged in partition order, so the outcome does not depend on scheduling.
//! When a length contains solutions, the one in the lowest partition wins and
//! only partitions up to that one contribute to the histogram.

mod partials;
mod space;

use std::sync::atomic::{AtomicUsize, Ordering};
use std::time::{Duration, Instant};

use rayon::prelude::*;

pub use partials::{
    histogram_report, parse_report, write_report, PartialEntry, PartialProgramList, PassHistogram, ReportError,
    DEFAULT_CAPACITY,
};
pub use space::{
    count_space, default_const_values, default_forbidden_pairs, ForbiddenPairs, Layout, SearchAlphabet, SearchSpace,
    MAX_SEARCH_LEN,
};

use crate::testio::{EvalMode, Scorer, TestSuite};
use crate::vm::opcode::{self, CONST};
use crate::vm::{Analyzer, Dictionary, ExecLimits, Program};

#[derive(Debug, Clone)]
pub struct EnumConfig {
    pub min_len: usize,
    pub max_len: usize,
    pub time_budget: Option<Duration>,
    pub capacity: usize,
    pub mode: EvalMode,
    pub limits: ExecLimits,
}

impl Default for EnumConfig {
    fn default() -> Self {
        EnumConfig {
            min_len: 1,
            max_len: 6,
            time_budget: None,
            capacity: DEFAULT_CAPACITY,
            mode: EvalMode::Strict,
            limits: ExecLimits::default(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct SearchReport {
    pub found: Option<Program>,
    pub partials: PartialProgramList,
    pub histogram: PassHistogram,
    /// Candidates generated, including those rejected before execution.
    pub visited: u64,
    /// Candidates executed against the suite.
    pub evaluated: u64,
    pub elapsed: Duration,
    /// Longest length whose search finished (0 if none).
    pub completed_len: usize,
    pub timed_out: bool,
}

impl SearchReport {
    /// Executed candidates per second.
    pub fn throughput(&self) -> f64 {
        let s = self.elapsed.as_secs_f64();
        if s > 0.0 {
            self.evaluated as f64 / s
        } else {
            0.0
        }
    }
}

/// Searches all candidates of `cfg.min_len..=cfg.max_len` instructions.
pub fn enumerate(
    alphabet: &SearchAlphabet,
    forbidden: &ForbiddenPairs,
    cfg: &EnumConfig,
    suite: &TestSuite,
    dict: &Dictionary,
) -> SearchReport {
    let start = Instant::now();
    let deadline = cfg.time_budget.map(|b| start + b);
    let space = SearchSpace::new(dict, alphabet, forbidden, suite.signature(), cfg.mode);
    let mut report = SearchReport {
        found: None,
        partials: PartialProgramList::new(cfg.capacity),
        histogram: PassHistogram::new(suite.len()),
        visited: 0,
        evaluated: 0,
        elapsed: Duration::ZERO,
        completed_len: 0,
        timed_out: false,
    };
    let max_len = cfg.max_len.min(MAX_SEARCH_LEN);
    for len in cfg.min_len.max(1)..=max_len {
        let cancel = AtomicUsize::new(usize::MAX);
        let firsts = space.words().to_vec();
        let results: Vec<PartitionResult> = firsts
            .par_iter()
            .enumerate()
            .map(|(idx, &first)| {
                let mut w = Walker::new(&space, suite, cfg, deadline, &cancel, idx);
                w.run(len, first);
                w.finish()
            })
            .collect();
        let found_idx = results.iter().position(|r| r.found.is_some());
        let upto = found_idx.map_or(results.len(), |i| i + 1);
        let mut timed_out = false;
        for r in &results[..upto] {
            report.histogram.merge(&r.histogram);
            report.partials.merge(&r.partials);
            report.visited += r.visited;
            report.evaluated += r.evaluated;
            timed_out |= r.timed_out;
        }
        if let Some(i) = found_idx {
            report.found = results[i].found.clone();
        }
        if timed_out {
            report.timed_out = true;
            break;
        }
        report.completed_len = len;
        if report.found.is_some() {
            break;
        }
    }
    report.elapsed = start.elapsed();
    report
}

/// Increments a little-endian odometer; false once it wraps to all zeros.
#[inline]
fn advance(digits: &mut [usize], radix: usize) -> bool {
    for d in digits.iter_mut() {
        *d += 1;
        if *d < radix {
            return true;
        }
        *d = 0;
    }
    false
}

struct PartitionResult {
    histogram: PassHistogram,
    partials: PartialProgramList,
    found: Option<Program>,
    visited: u64,
    evaluated: u64,
    timed_out: bool,
}

struct Walker<'s, 'a> {
    space: &'s SearchSpace<'a>,
    scorer: Scorer<'a>,
    analyzer: Analyzer,
    layout: Layout,
    ops: Vec<u8>,
    bytes: Vec<u8>,
    odometer: Vec<usize>,
    targets: Vec<usize>,
    histogram: PassHistogram,
    partials: PartialProgramList,
    found: Option<Program>,
    visited: u64,
    evaluated: u64,
    deadline: Option<Instant>,
    cancel: &'s AtomicUsize,
    index: usize,
    stopped: bool,
    timed_out: bool,
    tick: u32,
    has_jumps: bool,
}

impl<'s, 'a> Walker<'s, 'a> {
    fn new(
        space: &'s SearchSpace<'a>,
        suite: &TestSuite,
        cfg: &EnumConfig,
        deadline: Option<Instant>,
        cancel: &'s AtomicUsize,
        index: usize,
    ) -> Self {
        Walker {
            space,
            scorer: Scorer::new(space.dict, suite, cfg.limits, cfg.mode),
            analyzer: Analyzer::new(),
            layout: Layout::default(),
            ops: Vec::with_capacity(cfg.max_len),
            bytes: Vec::with_capacity(2 * cfg.max_len + 1),
            odometer: Vec::new(),
            targets: Vec::new(),
            histogram: PassHistogram::new(suite.len()),
            partials: PartialProgramList::new(cfg.capacity),
            found: None,
            visited: 0,
            evaluated: 0,
            deadline,
            cancel,
            index,
            stopped: false,
            timed_out: false,
            tick: 0,
            has_jumps: space.words().iter().any(|&c| opcode::is_jump(c)),
        }
    }

    fn finish(self) -> PartitionResult {
        PartitionResult {
            histogram: self.histogram,
            partials: self.partials,
            found: self.found,
            visited: self.visited,
            evaluated: self.evaluated,
            timed_out: self.timed_out,
        }
    }

    fn run(&mut self, len: usize, first: u8) {
        let m = self.space.suite_sig.0 as i32;
        self.ops.clear();
        if let Some(d) = self.step_depth(Some(m), first) {
            self.ops.push(first);
            self.descend(len, d);
        }
    }

    /// Depth after appending `code`: `Some(Some(d))` for a tracked depth,
    /// `Some(None)` once tracking is lost, `None` if the prefix underflows.
    #[inline]
    fn step_depth(&self, depth: Option<i32>, code: u8) -> Option<Option<i32>> {
        match depth {
            Some(d) if self.space.is_static(code) => {
                let (need, delta) = self.space.effect(code);
                if d < need {
                    None
                } else {
                    Some(Some(d + delta))
                }
            }
            _ => Some(None),
        }
    }

    fn descend(&mut self, len: usize, depth: Option<i32>) {
        if self.stopped {
            return;
        }
        if self.ops.len() == len {
            self.leaf(depth);
            return;
        }
        let space = self.space;
        let prev = *self.ops.last().expect("non-empty prefix");
        for &c in space.words() {
            if !self.has_jumps && space.is_forbidden(prev, c) {
                continue;
            }
            let Some(d) = self.step_depth(depth, c) else {
                continue;
            };
            self.ops.push(c);
            self.descend(len, d);
            self.ops.pop();
            if self.stopped {
                return;
            }
        }
    }

    fn leaf(&mut self, depth: Option<i32>) {
        let space = self.space;
        self.layout.build(space, &self.ops, &mut self.bytes);
        let n = self.ops.len();
        let nc = self.layout.const_slots.len();
        let nj = self.layout.jump_slots.len();
        let nvals = space.const_values().len();
        if nc > 0 && nvals == 0 {
            return;
        }
        // CONST values never affect layout or stack depth, so every check
        // below is made once per jump configuration.
        let const_variants = (nvals as u64).pow(nc as u32);
        if nj == 0 {
            let accepted = match depth {
                Some(d) => self.layout.forbidden == 0 && space.accepts_final_depth(d),
                None => space.check_bytes(&mut self.analyzer, &self.layout, &self.bytes),
            };
            if accepted {
                self.const_loop(n);
            } else {
                self.visited += const_variants;
                self.poll();
            }
            return;
        }
        self.targets.clear();
        self.targets.resize(nj, 0);
        loop {
            let mut ok = true;
            for (i, &slot) in self.layout.jump_slots.iter().enumerate() {
                ok &= self.layout.set_jump(&mut self.bytes, slot, self.targets[i]);
            }
            if ok {
                self.layout.refresh_targets(&self.bytes);
                ok = space.check_bytes(&mut self.analyzer, &self.layout, &self.bytes);
            }
            if ok {
                self.const_loop(n);
            } else {
                self.visited += const_variants;
                self.poll();
            }
            if self.stopped || !advance(&mut self.targets, n + 1) {
                return;
            }
        }
    }

    fn const_loop(&mut self, n: usize) {
        let nc = self.layout.const_slots.len();
        let nvals = self.space.const_values().len();
        self.odometer.clear();
        self.odometer.resize(nc, 0);
        let jumps = !self.layout.jump_slots.is_empty();
        let const_cond = jumps && self.layout.has_const_condition(&self.ops);
        let halts = !jumps || const_cond || self.layout.can_halt(&self.ops, &self.bytes);
        loop {
            self.visited += 1;
            let vals = self.space.const_values();
            for (i, &slot) in self.layout.const_slots.iter().enumerate() {
                self.layout.set_const(&mut self.bytes, slot, vals[self.odometer[i]]);
            }
            if !halts || (const_cond && !self.layout.can_halt(&self.ops, &self.bytes)) {
                self.evaluated += 1;
                self.histogram.add(0);
            } else {
                self.consider(n);
            }
            self.poll();
            if self.stopped || !advance(&mut self.odometer, nvals) {
                return;
            }
        }
    }

    #[inline]
    fn consider(&mut self, n: usize) {
        self.evaluated += 1;
        let items = self.scorer.items();
        let passes = self.scorer.count_passes(&self.bytes, 0);
        self.histogram.add(passes);
        if passes == items {
            self.found = Some(Program::from_bytes(self.bytes.clone()));
            self.stopped = true;
            self.cancel.fetch_min(self.index, Ordering::Relaxed);
        } else if passes > 0 && passes >= self.partials.admission_threshold() {
            self.partials.insert(passes, &self.bytes, n);
        }
    }

    #[inline]
    fn poll(&mut self) {
        self.tick = self.tick.wrapping_add(1);
        if self.tick & 0x3ff != 0 {
            return;
        }
        if self.cancel.load(Ordering::Relaxed) < self.index {
            self.stopped = true;
        }
        if let Some(d) = self.deadline {
            if Instant::now() >= d {
                self.stopped = true;
                self.timed_out = true;
            }
        }
    }
}

/// True if the candidate would be generated by the enumerator: operands are
/// drawn from the alphabet, jumps land on boundaries, forbidden pairs only
/// straddle jump targets.
pub fn is_generated(
    program: &Program,
    alphabet: &SearchAlphabet,
    forbidden: &ForbiddenPairs,
    dict: &Dictionary,
) -> bool {
    let Ok(ins) = crate::vm::decode(program.bytes(), dict) else {
        return false;
    };
    if crate::vm::check_jumps(&ins).is_err() {
        return false;
    }
    let body = &ins[..ins.len() - 1];
    let mut targets = std::collections::BTreeSet::new();
    for i in body {
        if let Some(t) = i.jump_target() {
            targets.insert(t);
        }
    }
    for (j, i) in body.iter().enumerate() {
        if !alphabet.contains(i.code) {
            return false;
        }
        if i.code == CONST && !alphabet.const_values.contains(&i.operand.unwrap_or(0)) {
            return false;
        }
        if j > 0 && forbidden.contains(body[j - 1].code, i.code) && !targets.contains(&(i.offset as isize)) {
            return false;
        }
    }
    true
}
