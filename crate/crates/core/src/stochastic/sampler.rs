//! Random program generation from a frequency model.

use std::time::{Duration, Instant};

use rand::distributions::{Distribution, WeightedIndex};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::model::{FrequencyModel, GenMode};
use crate::enumerator::{Layout, PartialProgramList, SearchSpace};
use crate::testio::{Scorer, TestSuite};
use crate::vm::{Analyzer, ExecLimits, Program};

/// Programs per parallel work unit. Each chunk has its own RNG stream.
pub const CHUNK: u64 = 1024;

/// Upper bound on draws per accepted program in [`Sampler::sample`].
pub const MAX_ATTEMPTS: u64 = 1_000_000;

#[derive(Debug, Clone, PartialEq)]
pub struct GenConfig {
    pub min_len: usize,
    pub max_len: usize,
    pub mode: GenMode,
    pub seed: u64,
    /// Stop after this much wall-clock time.
    pub time_budget: Option<Duration>,
    /// Stop after this many accepted programs. Runs bounded only by this
    /// are reproducible for any number of workers.
    pub program_budget: Option<u64>,
}

impl Default for GenConfig {
    fn default() -> Self {
        GenConfig {
            min_len: 1,
            max_len: 8,
            mode: GenMode::Unigram,
            seed: 0,
            time_budget: None,
            program_budget: Some(100_000),
        }
    }
}

/// Reusable buffers for one candidate.
#[derive(Debug, Clone, Default)]
pub struct Draw {
    pub ops: Vec<u8>,
    pub bytes: Vec<u8>,
    pub layout: Layout,
    pub analyzer: Analyzer,
}

impl Draw {
    pub fn program(&self) -> Program {
        Program::from_bytes(self.bytes.clone())
    }

    pub fn has_jumps(&self) -> bool {
        !self.layout.jump_slots.is_empty()
    }
}

/// Precomputed sampling distributions over a search space.
#[derive(Debug, Clone)]
pub struct Sampler<'s, 'a> {
    space: &'s SearchSpace<'a>,
    first: WeightedIndex<f64>,
    rows: Vec<WeightedIndex<f64>>,
    index: Vec<usize>,
    consts: Vec<i8>,
    const_dist: Option<WeightedIndex<f64>>,
}

impl<'s, 'a> Sampler<'s, 'a> {
    /// `None` if the space has no words.
    pub fn new(space: &'s SearchSpace<'a>, model: &FrequencyModel) -> Option<Self> {
        let words = space.words();
        if words.is_empty() {
            return None;
        }
        let first = WeightedIndex::new(model.unigram_probs(words)).ok()?;
        let rows = words
            .iter()
            .map(|&p| WeightedIndex::new(model.bigram_probs(p, words)).ok())
            .collect::<Option<Vec<_>>>()?;
        let mut index = vec![usize::MAX; 256];
        for (i, &c) in words.iter().enumerate() {
            index[c as usize] = i;
        }
        let (consts, probs) = model.const_probs(space.const_values());
        let const_dist = WeightedIndex::new(probs).ok();
        Some(Sampler {
            space,
            first,
            rows,
            index,
            consts,
            const_dist,
        })
    }

    pub fn space(&self) -> &'s SearchSpace<'a> {
        self.space
    }

    /// Fills `ops` with `len` opcodes.
    pub fn draw_ops<R: Rng>(&self, rng: &mut R, len: usize, mode: GenMode, ops: &mut Vec<u8>) {
        let words = self.space.words();
        ops.clear();
        let mut prev = usize::MAX;
        for _ in 0..len {
            let i = match mode {
                GenMode::Markov if prev != usize::MAX => self.rows[prev].sample(rng),
                _ => self.first.sample(rng),
            };
            ops.push(words[i]);
            prev = i;
        }
    }

    /// One attempt: draws a candidate into `d` and reports whether it passes
    /// the forbidden-pair and static checks.
    pub fn draw<R: Rng>(&self, rng: &mut R, min_len: usize, max_len: usize, mode: GenMode, d: &mut Draw) -> bool {
        let len = rng.gen_range(min_len..=max_len);
        self.draw_ops(rng, len, mode, &mut d.ops);
        !self.space.fallthrough_rejects(&d.ops) && self.fill_operands(rng, d)
    }

    /// Lays out `d.ops` with random operands, then checks it.
    pub fn fill_operands<R: Rng>(&self, rng: &mut R, d: &mut Draw) -> bool {
        let space = self.space;
        d.layout.build(space, &d.ops, &mut d.bytes);
        for k in 0..d.layout.const_slots.len() {
            let Some(dist) = &self.const_dist else {
                return false;
            };
            let v = self.consts[dist.sample(rng)];
            d.layout.set_const(&mut d.bytes, d.layout.const_slots[k], v);
        }
        let n = d.ops.len();
        for k in 0..d.layout.jump_slots.len() {
            let target = rng.gen_range(0..=n);
            if !d.layout.set_jump(&mut d.bytes, d.layout.jump_slots[k], target) {
                return false;
            }
        }
        if d.layout.jump_slots.is_empty() {
            if let Some(depth) = space.straight_depth(&d.ops) {
                return d.layout.forbidden == 0 && space.accepts_final_depth(depth);
            }
        } else {
            d.layout.refresh_targets(&d.bytes);
        }
        space.check_bytes(&mut d.analyzer, &d.layout, &d.bytes)
    }

    /// Draws until a candidate is accepted. Returns the number of rejected
    /// draws, or `None` after [`MAX_ATTEMPTS`].
    pub fn sample<R: Rng>(
        &self,
        rng: &mut R,
        min_len: usize,
        max_len: usize,
        mode: GenMode,
        d: &mut Draw,
    ) -> Option<u64> {
        (0..MAX_ATTEMPTS).find(|_| self.draw(rng, min_len, max_len, mode, d))
    }

    /// Position of `code` in the alphabet.
    pub fn index_of(&self, code: u8) -> Option<usize> {
        self.index.get(code as usize).copied().filter(|&i| i != usize::MAX)
    }
}

/// One accepted program drawn with a fresh RNG from `seed`.
pub fn sample_program(space: &SearchSpace<'_>, model: &FrequencyModel, cfg: &GenConfig) -> Option<Program> {
    let s = Sampler::new(space, model)?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut d = Draw::default();
    s.sample(&mut rng, cfg.min_len, cfg.max_len, cfg.mode, &mut d)?;
    Some(d.program())
}

/// RNG for chunk `chunk` of generation stream `stream`.
pub fn chunk_rng(seed: u64, stream: u64, chunk: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream.wrapping_mul(1 << 32).wrapping_add(chunk));
    rng
}

#[derive(Debug, Clone)]
pub struct GenOutcome {
    pub partials: PartialProgramList,
    pub found: Option<Program>,
    /// Accepted (and evaluated) programs.
    pub generated: u64,
    pub rejected: u64,
    /// Sum of passed items over all generated programs; exact only when
    /// requested with `full_count`.
    pub total_passes: u64,
    pub elapsed: Duration,
}

impl GenOutcome {
    pub fn mean_passes(&self) -> f64 {
        if self.generated == 0 {
            0.0
        } else {
            self.total_passes as f64 / self.generated as f64
        }
    }
}

struct ChunkOutcome {
    partials: PartialProgramList,
    found: Option<Program>,
    generated: u64,
    rejected: u64,
    total_passes: u64,
}

/// Generates and evaluates programs until a budget runs out or a program
/// passes every item. `stream` separates independent runs sharing a seed.
/// With `full_count` every program is scored on every item so that
/// `total_passes` is exact.
#[allow(clippy::too_many_arguments)]
pub fn generate(
    space: &SearchSpace<'_>,
    model: &FrequencyModel,
    cfg: &GenConfig,
    suite: &TestSuite,
    limits: ExecLimits,
    capacity: usize,
    full_count: bool,
    stream: u64,
) -> GenOutcome {
    let start = Instant::now();
    let deadline = cfg.time_budget.map(|t| start + t);
    let mut out = GenOutcome {
        partials: PartialProgramList::new(capacity),
        found: None,
        generated: 0,
        rejected: 0,
        total_passes: 0,
        elapsed: Duration::ZERO,
    };
    let Some(sampler) = Sampler::new(space, model) else {
        return out;
    };
    let min_len = cfg.min_len.max(1);
    let max_len = cfg.max_len.max(min_len).min(crate::enumerator::MAX_SEARCH_LEN);
    let budget = match (cfg.program_budget, cfg.time_budget) {
        (Some(b), _) => b,
        (None, Some(_)) => u64::MAX,
        (None, None) => CHUNK,
    };
    let batch = (rayon::current_num_threads() as u64).max(1) * 4;
    let mut next_chunk = 0u64;
    while out.found.is_none() && out.generated < budget {
        if deadline.is_some_and(|d| Instant::now() >= d) {
            break;
        }
        let remaining = budget - out.generated;
        let chunks: Vec<(u64, u64)> = (0..batch)
            .map(|i| next_chunk + i)
            .map(|c| (c, CHUNK.min(remaining.saturating_sub((c - next_chunk) * CHUNK))))
            .filter(|&(_, n)| n > 0)
            .collect();
        next_chunk += batch;
        let results: Vec<ChunkOutcome> = chunks
            .par_iter()
            .map(|&(c, n)| {
                let mut rng = chunk_rng(cfg.seed, stream, c);
                run_chunk(
                    &sampler, &mut rng, n, min_len, max_len, cfg.mode, suite, limits, capacity, full_count, deadline,
                )
            })
            .collect();
        let before = out.generated;
        for r in results {
            out.partials.merge(&r.partials);
            out.generated += r.generated;
            out.rejected += r.rejected;
            out.total_passes += r.total_passes;
            if r.found.is_some() {
                out.found = r.found;
                break;
            }
        }
        if out.generated == before {
            break;
        }
    }
    out.elapsed = start.elapsed();
    out
}

#[allow(clippy::too_many_arguments)]
fn run_chunk(
    sampler: &Sampler<'_, '_>,
    rng: &mut ChaCha8Rng,
    count: u64,
    min_len: usize,
    max_len: usize,
    mode: GenMode,
    suite: &TestSuite,
    limits: ExecLimits,
    capacity: usize,
    full_count: bool,
    deadline: Option<Instant>,
) -> ChunkOutcome {
    let space = sampler.space();
    let mut scorer = Scorer::new(space.dict, suite, limits, space.mode);
    let items = scorer.items();
    let mut d = Draw::default();
    let mut res = ChunkOutcome {
        partials: PartialProgramList::new(capacity),
        found: None,
        generated: 0,
        rejected: 0,
        total_passes: 0,
    };
    for k in 0..count {
        if k % 256 == 255 && deadline.is_some_and(|t| Instant::now() >= t) {
            break;
        }
        let Some(rej) = sampler.sample(rng, min_len, max_len, mode, &mut d) else {
            break;
        };
        res.rejected += rej;
        res.generated += 1;
        if d.has_jumps() && !d.layout.can_halt(&d.ops, &d.bytes) {
            continue;
        }
        let need = if full_count {
            0
        } else {
            res.partials.admission_threshold()
        };
        let passes = scorer.count_passes(&d.bytes, need);
        res.total_passes += passes as u64;
        if passes == items {
            res.found = Some(d.program());
            break;
        }
        if passes >= need && passes > 0 {
            res.partials.insert(passes, &d.bytes, d.ops.len());
        }
    }
    res
}
