//! Genetic search: admissible words, genome quality and genes.
//!
//! A genome is a dictionary together with the words the search may use.
//! Its quality is the mean number of test items passed by programs drawn
//! from the current frequency model. Words and genes (new words made from
//! frequent instruction chains of partial programs) are kept only when they
//! improve the quality.

mod compose;
mod genes;

use std::collections::BTreeSet;
use std::time::{Duration, Instant};

use rayon::prelude::*;

pub use compose::{compose_partition, derive_selector_suite, ComposeError};
pub use genes::{extract_candidates, inline_genes, is_valid_body, Candidate, InlineError, DEFAULT_CANDIDATES};

use crate::enumerator::{
    default_const_values, default_forbidden_pairs, ForbiddenPairs, PartialProgramList, SearchAlphabet, SearchSpace,
};
use crate::stochastic::{base_step, chunk_rng, BaseStepParams, Draw, FrequencyModel, GenMode, Sampler, CHUNK};
use crate::testio::{evaluate, EvalMode, Scorer, TestSuite};
use crate::vm::opcode::{self, ADD, CONST, DROP, DUP, IF, MUL, NROT, OVER, ROT, SUB, SWAP};
use crate::vm::{disassemble, Dictionary, ExecLimits, Program};

/// Default quality sample size.
pub const DEFAULT_SAMPLE_SIZE: u64 = 1_000_000;

/// The starting word list of admissible-word selection.
pub fn default_base_words() -> Vec<u8> {
    vec![IF, CONST, DUP, DROP, SWAP, OVER, ROT, NROT, ADD, SUB, MUL]
}

/// Standard search words not in the default base list, in opcode order.
pub fn default_system_words() -> Vec<u8> {
    let base = default_base_words();
    opcode::default_search_words()
        .into_iter()
        .filter(|c| !base.contains(c))
        .collect()
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Genome {
    pub dict: Dictionary,
    pub alphabet: SearchAlphabet,
}

impl Genome {
    pub fn new(dict: Dictionary, alphabet: SearchAlphabet) -> Self {
        Genome { dict, alphabet }
    }

    fn with_word(&self, code: u8) -> SearchAlphabet {
        let words = self.alphabet.words.iter().copied().chain([code]);
        SearchAlphabet::new(words, self.alphabet.const_values.iter().copied())
    }

    pub fn word_names(&self) -> Vec<String> {
        self.alphabet.names(&self.dict)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct QualityReport {
    pub max_passed: usize,
    pub total_passes: u64,
    pub sample_size: u64,
}

impl QualityReport {
    /// Mean items passed per drawn program.
    pub fn avg(&self) -> f64 {
        if self.sample_size == 0 {
            0.0
        } else {
            self.total_passes as f64 / self.sample_size as f64
        }
    }
}

impl std::fmt::Display for QualityReport {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "max={} avg={:.6} total={} sample={}",
            self.max_passed,
            self.avg(),
            self.total_passes,
            self.sample_size
        )
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct QualityConfig {
    pub sample_size: u64,
    pub min_len: usize,
    pub max_len: usize,
    pub seed: u64,
    pub mode: EvalMode,
    pub limits: ExecLimits,
}

/// Draws `sample_size` programs from `model` (independent words) and scores
/// them. A draw that fails the static checks scores 0 and still counts.
/// `prior` contributes to `max_passed` only.
pub fn genome_quality(
    genome: &Genome,
    suite: &TestSuite,
    model: &FrequencyModel,
    forbidden: &ForbiddenPairs,
    cfg: &QualityConfig,
    prior: Option<&PartialProgramList>,
) -> QualityReport {
    let mut report = QualityReport {
        max_passed: prior.map_or(0, |p| p.best_pass()),
        total_passes: 0,
        sample_size: cfg.sample_size,
    };
    let space = SearchSpace::new(&genome.dict, &genome.alphabet, forbidden, suite.signature(), cfg.mode);
    let Some(sampler) = Sampler::new(&space, model) else {
        return report;
    };
    let min_len = cfg.min_len.max(1);
    let max_len = cfg.max_len.max(min_len);
    let chunks = cfg.sample_size.div_ceil(CHUNK);
    let parts: Vec<(u64, usize)> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let n = CHUNK.min(cfg.sample_size - c * CHUNK);
            let mut rng = chunk_rng(cfg.seed, 0, c);
            let mut scorer = Scorer::new(&genome.dict, suite, cfg.limits, cfg.mode);
            let mut d = Draw::default();
            let (mut total, mut best) = (0u64, 0usize);
            for _ in 0..n {
                if !sampler.draw(&mut rng, min_len, max_len, GenMode::Unigram, &mut d) {
                    continue;
                }
                if d.has_jumps() && !d.layout.can_halt(&d.ops, &d.bytes) {
                    continue;
                }
                let passes = scorer.count_passes(&d.bytes, 0);
                total += passes as u64;
                best = best.max(passes);
            }
            (total, best)
        })
        .collect();
    for (total, best) in parts {
        report.total_passes += total;
        report.max_passed = report.max_passed.max(best);
    }
    report
}

/// True if `after` passes more items at best than `before`, or as many with
/// a mean at least 1% higher. Compared in exact integers; with no passes at
/// all before, the mean must become positive.
pub fn gene_success(before: &QualityReport, after: &QualityReport) -> bool {
    if after.max_passed != before.max_passed {
        return after.max_passed > before.max_passed;
    }
    if after.sample_size == 0 || before.sample_size == 0 {
        return false;
    }
    if before.total_passes == 0 {
        return after.total_passes > 0;
    }
    let lhs = after.total_passes as u128 * before.sample_size as u128 * 100;
    let rhs = before.total_passes as u128 * after.sample_size as u128 * 101;
    lhs >= rhs
}

/// A gene that was tried, with the qualities it was judged on.
#[derive(Debug, Clone, PartialEq)]
pub struct GeneTrial {
    pub name: String,
    pub chain: Vec<u8>,
    pub before: QualityReport,
    pub after: QualityReport,
    pub accepted: bool,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct GeneLists {
    pub candidates: Vec<Candidate>,
    pub unsuccessful: BTreeSet<Vec<u8>>,
    pub accepted: Vec<String>,
    pub trials: Vec<GeneTrial>,
}

#[derive(Debug, Clone)]
pub struct EvolveConfig {
    pub base_words: Vec<u8>,
    /// Words offered to admissible-word selection, in order.
    pub system_words: Vec<u8>,
    pub const_values: Vec<i8>,
    pub forbidden: ForbiddenPairs,
    /// Parameters of every base step. Its seed is the run seed.
    pub base: BaseStepParams,
    pub sample_size: u64,
    /// Candidates kept per refill.
    pub candidates: usize,
    /// Gene trials per attempt.
    pub max_genes: usize,
    /// Attempts, each with a fresh seed.
    pub attempts: usize,
    /// Wall-clock budget of one attempt.
    pub time_budget: Option<Duration>,
}

impl Default for EvolveConfig {
    fn default() -> Self {
        EvolveConfig {
            base_words: default_base_words(),
            system_words: default_system_words(),
            const_values: default_const_values(),
            forbidden: default_forbidden_pairs(),
            base: BaseStepParams::default(),
            sample_size: DEFAULT_SAMPLE_SIZE,
            candidates: DEFAULT_CANDIDATES,
            max_genes: 64,
            attempts: 3,
            time_budget: Some(Duration::from_secs(600)),
        }
    }
}

/// Result of admissible-word selection.
#[derive(Debug, Clone)]
pub struct Admission {
    pub genome: Genome,
    pub partials: PartialProgramList,
    pub quality: QualityReport,
    pub found: Option<Program>,
}

#[derive(Debug, Clone)]
pub struct EvolveResult {
    pub found: Option<Program>,
    /// `found` with every gene replaced by its body.
    pub inlined: Option<Program>,
    pub genome: Genome,
    pub genes: GeneLists,
    pub transcript: Vec<String>,
    pub attempts: usize,
    pub seed: u64,
}

/// Seed of the `k`-th randomized step of a run.
fn step_seed(seed: u64, k: u64) -> u64 {
    seed ^ k.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15)
}

/// Drives base steps and quality measurements for one attempt.
struct Runner<'a> {
    suite: &'a TestSuite,
    cfg: &'a EvolveConfig,
    seed: u64,
    steps: u64,
    deadline: Option<Instant>,
    transcript: Vec<String>,
}

struct Step {
    partials: PartialProgramList,
    quality: QualityReport,
    found: Option<Program>,
}

impl Runner<'_> {
    fn out_of_time(&self) -> bool {
        self.deadline.is_some_and(|d| Instant::now() >= d)
    }

    fn remaining(&self) -> Option<Duration> {
        self.deadline.map(|d| d.saturating_duration_since(Instant::now()))
    }

    fn step(&mut self, genome: &Genome) -> Step {
        let seed = step_seed(self.seed, self.steps);
        self.steps += 1;
        let mut params = self.cfg.base.clone();
        params.seed = seed;
        if let Some(left) = self.remaining() {
            params.time = Some(params.time.map_or(left, |t| t.min(left)));
            params.enum_time = Some(params.enum_time.map_or(left, |t| t.min(left)));
        }
        let r = base_step(&params, self.suite, &genome.dict, &genome.alphabet, &self.cfg.forbidden);
        if r.found.is_some() {
            return Step {
                partials: r.partials,
                quality: QualityReport::default(),
                found: r.found,
            };
        }
        let qcfg = QualityConfig {
            sample_size: self.cfg.sample_size,
            min_len: params.l0 + 1,
            max_len: params.l1.max(params.l0 + 1),
            seed: seed.rotate_left(17),
            mode: params.mode,
            limits: params.limits,
        };
        let quality = genome_quality(
            genome,
            self.suite,
            &r.model,
            &self.cfg.forbidden,
            &qcfg,
            Some(&r.partials),
        );
        Step {
            partials: r.partials,
            quality,
            found: None,
        }
    }

    fn log(&mut self, line: String) {
        self.transcript.push(line);
    }
}

/// Starts from `base_words` and offers each of `system_words` in turn,
/// keeping a word only if the genome with it is more successful.
pub fn select_admissible(
    suite: &TestSuite,
    dict: &Dictionary,
    base_words: &[u8],
    system_words: &[u8],
    cfg: &EvolveConfig,
) -> (Admission, Vec<String>) {
    let mut runner = Runner {
        suite,
        cfg,
        seed: cfg.base.seed,
        steps: 0,
        deadline: cfg.time_budget.map(|t| Instant::now() + t),
        transcript: Vec::new(),
    };
    let a = admit(&mut runner, dict, base_words, system_words);
    (a, runner.transcript)
}

fn admit(runner: &mut Runner<'_>, dict: &Dictionary, base_words: &[u8], system_words: &[u8]) -> Admission {
    let values = runner.cfg.const_values.iter().copied();
    let mut genome = Genome::new(dict.clone(), SearchAlphabet::new(base_words.iter().copied(), values));
    let first = runner.step(&genome);
    runner.log(format!("ALPHABET {}", genome.word_names().join(" ")));
    let mut adm = Admission {
        genome: genome.clone(),
        partials: first.partials,
        quality: first.quality,
        found: first.found,
    };
    if adm.found.is_some() {
        return adm;
    }
    runner.log(format!("QUALITY {}", adm.quality));
    for &w in system_words {
        if genome.alphabet.contains(w) || !dict.contains_code(w) {
            continue;
        }
        if runner.out_of_time() {
            runner.log("BUDGET exhausted during word selection".into());
            break;
        }
        let trial = Genome::new(genome.dict.clone(), genome.with_word(w));
        let s = runner.step(&trial);
        let name = dict.name_of(w).unwrap_or("?").to_string();
        if s.found.is_some() {
            runner.log(format!("ADMISSIBLE +{name}"));
            genome = trial;
            adm = Admission {
                genome: genome.clone(),
                partials: s.partials,
                quality: adm.quality,
                found: s.found,
            };
            return adm;
        }
        let keep = gene_success(&adm.quality, &s.quality);
        runner.log(format!(
            "ADMISSIBLE {}{name} {}",
            if keep { '+' } else { '-' },
            s.quality
        ));
        if keep {
            genome = trial;
            adm = Admission {
                genome: genome.clone(),
                partials: s.partials,
                quality: s.quality,
                found: None,
            };
        }
    }
    runner.log(format!("ALPHABET {}", adm.genome.word_names().join(" ")));
    adm
}

fn word_text(name: &str, body: &Program, dict: &Dictionary) -> String {
    let text = disassemble(body, dict).unwrap_or_default();
    if text.is_empty() {
        format!(": {name} ;")
    } else {
        format!(": {name} {text} ;")
    }
}

/// The genetic loop: select admissible words, then repeatedly turn the most
/// frequent chain of the partial programs into a new word, keeping it only
/// if the genome improves. Stops when a program passes every item, when no
/// candidates are left, or when the budget runs out; unsuccessful attempts
/// are repeated with a fresh seed.
pub fn evolve(suite: &TestSuite, dict: &Dictionary, cfg: &EvolveConfig) -> EvolveResult {
    let mut last = None;
    for attempt in 0..cfg.attempts.max(1) {
        let seed = cfg.base.seed.wrapping_add(attempt as u64);
        let r = evolve_once(suite, dict, cfg, seed, attempt + 1);
        if r.found.is_some() {
            return r;
        }
        let mut transcript = last.map_or_else(Vec::new, |l: EvolveResult| l.transcript);
        transcript.extend(r.transcript);
        last = Some(EvolveResult { transcript, ..r });
    }
    last.expect("at least one attempt")
}

fn evolve_once(suite: &TestSuite, dict: &Dictionary, cfg: &EvolveConfig, seed: u64, attempt: usize) -> EvolveResult {
    let mut runner = Runner {
        suite,
        cfg,
        seed,
        steps: 0,
        deadline: cfg.time_budget.map(|t| Instant::now() + t),
        transcript: vec![format!("ATTEMPT {attempt} seed={seed}")],
    };
    let adm = admit(&mut runner, dict, &cfg.base_words, &cfg.system_words);
    let mut genome = adm.genome;
    let mut genes = GeneLists::default();
    let mut found = adm.found;
    let mut partials = adm.partials;
    let mut quality = adm.quality;
    let mut tried = 0;
    while found.is_none() {
        if runner.out_of_time() {
            runner.log("BUDGET exhausted".into());
            break;
        }
        if tried >= cfg.max_genes {
            runner.log("GENES limit reached".into());
            break;
        }
        genes.candidates = extract_candidates(&partials, &genome.dict, &genes.unsuccessful, cfg.candidates);
        let Some(cand) = genes.candidates.first().cloned() else {
            runner.log("CANDIDATES none left".into());
            break;
        };
        let Some(code) = genome.dict.next_user_code() else {
            runner.log("DICTIONARY full".into());
            break;
        };
        let name = format!("F_{code:03}");
        let body = Program::from_body(&cand.chain);
        if genome.dict.add_word(&name, body.clone(), false).is_err() {
            genes.unsuccessful.insert(cand.chain);
            continue;
        }
        tried += 1;
        let trial = Genome::new(genome.dict.clone(), genome.with_word(code));
        let s = runner.step(&trial);
        let text = word_text(&name, &body, &trial.dict);
        if let Some(p) = s.found {
            runner.log(format!("+GENE {text}"));
            genes.accepted.push(name);
            genome = trial;
            found = Some(p);
            break;
        }
        let accepted = gene_success(&quality, &s.quality);
        genes.trials.push(GeneTrial {
            name: name.clone(),
            chain: cand.chain.clone(),
            before: quality,
            after: s.quality,
            accepted,
        });
        runner.log(format!("{}GENE {text} {}", if accepted { '+' } else { '-' }, s.quality));
        if accepted {
            genes.accepted.push(name);
            genome = trial;
            partials = s.partials;
            quality = s.quality;
        } else {
            genome.dict.remove_last_user_word();
            genes.unsuccessful.insert(cand.chain);
        }
    }
    let cfgb = &cfg.base;
    let found = found.filter(|p| evaluate(p, &genome.dict, suite, cfgb.limits, cfgb.mode).all_passed());
    let inlined = found.as_ref().and_then(|p| inline_genes(p, &genome.dict).ok());
    if let Some(p) = &found {
        runner.log(format!("FOUND {}", word_text(&suite.name, p, &genome.dict)));
    }
    EvolveResult {
        found,
        inlined,
        genome,
        genes,
        transcript: runner.transcript,
        attempts: attempt,
        seed,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::vm::parse_body;

    fn q(max: usize, total: u64, n: u64) -> QualityReport {
        QualityReport {
            max_passed: max,
            total_passes: total,
            sample_size: n,
        }
    }

    #[test]
    fn success_rule() {
        assert!(gene_success(&q(3, 1000, 10_000), &q(4, 500, 10_000)));
        assert!(gene_success(&q(3, 1000, 10_000), &q(3, 1010, 10_000)));
        assert!(!gene_success(&q(3, 1000, 10_000), &q(3, 1009, 10_000)));
        assert!(!gene_success(&q(4, 1000, 10_000), &q(3, 9000, 10_000)));
        assert!(!gene_success(&q(0, 0, 100), &q(0, 0, 100)));
        assert!(gene_success(&q(1, 0, 100), &q(1, 1, 100)));
    }

    fn square() -> TestSuite {
        TestSuite::from_oracle("SQUARE", "x -> x*x", (-4..=4).map(|x| vec![x]), |v| vec![v[0] * v[0]])
    }

    #[test]
    fn quality_of_a_two_word_genome() {
        let d = Dictionary::builtin();
        let g = Genome::new(d.clone(), SearchAlphabet::new([DUP, MUL], []));
        let cfg = QualityConfig {
            sample_size: 40_000,
            min_len: 2,
            max_len: 2,
            seed: 5,
            mode: EvalMode::Strict,
            limits: ExecLimits::default(),
        };
        let r = genome_quality(
            &g,
            &square(),
            &FrequencyModel::new(),
            &ForbiddenPairs::none(),
            &cfg,
            None,
        );
        // Only `DUP *` of the four equally likely programs is accepted, and it
        // passes all nine items.
        assert!((r.avg() - 9.0 / 4.0).abs() < 0.05, "{r}");
        assert_eq!(r.max_passed, 9);
        let again = genome_quality(
            &g,
            &square(),
            &FrequencyModel::new(),
            &ForbiddenPairs::none(),
            &cfg,
            None,
        );
        assert_eq!(r, again);
    }

    #[test]
    fn prior_partials_raise_the_maximum() {
        let d = Dictionary::builtin();
        let g = Genome::new(d.clone(), SearchAlphabet::new([DROP], []));
        let mut prior = PartialProgramList::new(4);
        let p = parse_body("DUP DROP", &d).unwrap();
        prior.insert(2, p.bytes(), 2);
        let cfg = QualityConfig {
            sample_size: 100,
            min_len: 1,
            max_len: 1,
            seed: 0,
            mode: EvalMode::Strict,
            limits: ExecLimits::default(),
        };
        let r = genome_quality(
            &g,
            &square(),
            &FrequencyModel::new(),
            &ForbiddenPairs::none(),
            &cfg,
            Some(&prior),
        );
        assert_eq!(r, q(2, 0, 100));
    }

    fn quick_config() -> EvolveConfig {
        EvolveConfig {
            base: BaseStepParams {
                l0: 3,
                l1: 5,
                time: None,
                cycle_programs: Some(1024),
                ..Default::default()
            },
            sample_size: 2048,
            max_genes: 4,
            attempts: 1,
            time_budget: None,
            ..Default::default()
        }
    }

    #[test]
    fn solvable_suite_is_found_without_genes() {
        let d = Dictionary::builtin();
        let r = evolve(&square(), &d, &quick_config());
        let p = r.found.expect("found");
        assert!(r.genes.accepted.is_empty());
        assert_eq!(r.inlined.as_ref(), Some(&p));
        assert!(r.transcript.last().unwrap().starts_with("FOUND : SQUARE"));
    }

    #[test]
    fn unused_word_is_not_admitted() {
        let d = Dictionary::builtin();
        let cube = TestSuite::from_oracle("CUBE", "x -> x^3", (-4..=4).map(|x| vec![x]), |v| {
            vec![v[0] * v[0] * v[0]]
        });
        let mut cfg = quick_config();
        cfg.base.l0 = 2;
        cfg.base.l1 = 2;
        let base = [DUP, DROP, MUL];
        // With one input, no short program can use 4ROLL.
        let (a, log) = select_admissible(&cube, &d, &base, &[opcode::ROLL4], &cfg);
        assert!(a.found.is_none());
        assert_eq!(a.genome.alphabet.words, vec![DUP, DROP, MUL]);
        assert!(log.iter().any(|l| l.starts_with("ADMISSIBLE -4ROLL")), "{log:?}");
    }

    #[test]
    fn gene_decisions_replay() {
        let d = Dictionary::builtin();
        let fact = TestSuite::from_oracle("FACT", "n -> n!", (2..=9).map(|x| vec![x]), |v| {
            vec![(1..=v[0]).product::<i32>()]
        });
        let mut cfg = quick_config();
        cfg.system_words = vec![opcode::DEC];
        let r = evolve(&fact, &d, &cfg);
        for t in &r.genes.trials {
            assert_eq!(gene_success(&t.before, &t.after), t.accepted);
            if !t.accepted {
                assert!(r.genes.unsuccessful.contains(&t.chain));
            }
        }
        let tried: Vec<&Vec<u8>> = r.genes.trials.iter().map(|t| &t.chain).collect();
        let unique: BTreeSet<&Vec<u8>> = tried.iter().copied().collect();
        assert_eq!(unique.len(), tried.len());
        let again = evolve(&fact, &d, &cfg);
        assert_eq!(again.transcript, r.transcript);
    }
}
