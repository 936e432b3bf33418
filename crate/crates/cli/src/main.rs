//! `stackgene` command-line driver.

mod config;

use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Duration;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};

use config::{split_list, Settings};
use stackgene::enumerator::{
    default_const_values, default_forbidden_pairs, enumerate, histogram_report, write_report, EnumConfig,
    PartialProgramList, PassHistogram, SearchAlphabet, SearchSpace, DEFAULT_CAPACITY,
};
use stackgene::evolution::{
    compose_partition, default_base_words, default_system_words, derive_selector_suite, evolve, inline_genes,
    select_admissible, EvolveConfig, DEFAULT_CANDIDATES, DEFAULT_SAMPLE_SIZE,
};
use stackgene::stochastic::{base_step, generate, BaseStepParams, FrequencyModel, GenConfig, GenMode};
use stackgene::testio::{evaluate, load_suite, EvalMode, TestSuite};
use stackgene::vm::{assemble, disassemble, parse_body, Dictionary, ExecLimits, Machine, Program};

#[derive(Parser)]
#[command(name = "stackgene", version, about = "Program synthesis for a small stack machine")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run a program against a test suite.
    Run {
        /// A program body, or `: NAME ... ;` definitions (the last one runs).
        program: String,
        /// Print every item with its result.
        #[arg(long)]
        trace: bool,
        #[command(flatten)]
        common: Common,
    },
    /// Exhaustive search up to a length bound.
    Enumerate {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        len: Lengths,
        #[arg(long)]
        seconds: Option<f64>,
    },
    /// Probabilistic search from a frequency model.
    Generate {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        len: Lengths,
        #[arg(long, value_enum)]
        mode: Option<ModeArg>,
        /// Model dump to sample from; uniform if absent.
        #[arg(long)]
        model: Option<PathBuf>,
        #[arg(long)]
        seconds: Option<f64>,
        /// Stop after this many accepted programs.
        #[arg(long)]
        programs: Option<u64>,
    },
    /// Exhaustive search to L0, then alternating generation cycles to L1.
    Basestep {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        step: Step,
    },
    /// Choose the admissible words for a suite.
    Admissible {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        step: Step,
        #[command(flatten)]
        genome: GenomeArgs,
    },
    /// Full evolution: admissible words, then genes until a program is found.
    Evolve {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        step: Step,
        #[command(flatten)]
        genome: GenomeArgs,
        #[arg(long)]
        candidates: Option<usize>,
        #[arg(long)]
        max_genes: Option<usize>,
        #[arg(long)]
        attempts: Option<usize>,
        /// Time budget of one attempt.
        #[arg(long)]
        budget: Option<f64>,
    },
    /// Replace user words in a program by their bodies.
    Inline {
        program: String,
        #[command(flatten)]
        common: Common,
    },
    /// Write the selector suite of a partial program.
    Selector {
        program: String,
        #[command(flatten)]
        common: Common,
    },
    /// Combine selector Q and branches P, R into one program.
    Compose {
        #[arg(long)]
        q: String,
        #[arg(long)]
        p: String,
        #[arg(long)]
        r: String,
        #[command(flatten)]
        common: Common,
    },
}

#[derive(Args, Clone)]
struct Common {
    /// `key = value` file; flags take precedence.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Test file in `.tst` format.
    #[arg(long)]
    suite: Option<PathBuf>,
    /// Dictionary file of `: NAME ... ;` definitions.
    #[arg(long)]
    dict: Option<PathBuf>,
    /// Search words, separated by commas or spaces.
    #[arg(long)]
    alphabet: Option<String>,
    /// Values tried for `CONST`.
    #[arg(long, allow_hyphen_values = true)]
    consts: Option<String>,
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads; all cores by default.
    #[arg(long)]
    workers: Option<usize>,
    /// Directory for output files.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Compare only the top of the final stack.
    #[arg(long)]
    lenient: bool,
    #[arg(long)]
    max_steps: Option<u32>,
    /// Partial program list capacity.
    #[arg(long)]
    capacity: Option<usize>,
}

#[derive(Args, Clone)]
struct Lengths {
    #[arg(long)]
    min_len: Option<usize>,
    #[arg(long)]
    max_len: Option<usize>,
}

#[derive(Args, Clone)]
struct Step {
    #[arg(long)]
    l0: Option<usize>,
    #[arg(long)]
    l1: Option<usize>,
    /// Generation time of a base step.
    #[arg(long)]
    seconds: Option<f64>,
    /// Time limit of the exhaustive phase.
    #[arg(long)]
    enum_seconds: Option<f64>,
    /// Programs per generation cycle; replaces the time limit.
    #[arg(long)]
    programs: Option<u64>,
}

#[derive(Args, Clone)]
struct GenomeArgs {
    #[arg(long)]
    base_words: Option<String>,
    #[arg(long)]
    system_words: Option<String>,
    #[arg(long)]
    sample_size: Option<u64>,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    Unigram,
    Markov,
}

impl std::str::FromStr for ModeArg {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        <ModeArg as ValueEnum>::from_str(s, true)
    }
}

impl From<ModeArg> for GenMode {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::Unigram => GenMode::Unigram,
            ModeArg::Markov => GenMode::Markov,
        }
    }
}

/// Settings shared by every command, resolved from flags and config file.
struct Ctx {
    cfg: Settings,
    dict: Dictionary,
    seed: u64,
    mode: EvalMode,
    limits: ExecLimits,
    capacity: usize,
    out: Option<PathBuf>,
    suite_path: Option<PathBuf>,
    alphabet: Option<String>,
    consts: Option<String>,
}

impl Ctx {
    fn new(c: &Common) -> Result<Self> {
        let cfg = match &c.config {
            Some(p) => Settings::load(p)?,
            None => Settings::default(),
        };
        let workers: Option<usize> = cfg.pick(c.workers, "workers")?;
        if let Some(n) = workers {
            if n == 0 {
                bail!("--workers must be positive");
            }
            // Fails only if a pool already exists, which is harmless.
            let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
        }
        let dict_path: Option<PathBuf> = cfg.pick(c.dict.clone(), "dict")?;
        let dict = match dict_path {
            Some(p) => {
                let text = fs::read_to_string(&p).with_context(|| format!("reading {}", p.display()))?;
                assemble(&text, &Dictionary::builtin()).map_err(|e| anyhow!("{}: {e}", p.display()))?
            }
            None => Dictionary::builtin(),
        };
        let defaults = ExecLimits::default();
        let limits = ExecLimits {
            max_steps: cfg.get(c.max_steps, "max-steps", defaults.max_steps)?,
            ..defaults
        };
        if limits.max_steps == 0 {
            bail!("--max-steps must be positive");
        }
        let capacity = cfg.get(c.capacity, "capacity", DEFAULT_CAPACITY)?;
        if capacity == 0 {
            bail!("--capacity must be positive");
        }
        Ok(Ctx {
            seed: cfg.get(c.seed, "seed", 0)?,
            mode: if cfg.switch(c.lenient, "lenient")? {
                EvalMode::Lenient
            } else {
                EvalMode::Strict
            },
            limits,
            capacity,
            out: cfg.pick(c.out.clone(), "out")?,
            suite_path: cfg.pick(c.suite.clone(), "suite")?,
            alphabet: cfg.pick(c.alphabet.clone(), "alphabet")?,
            consts: cfg.pick(c.consts.clone(), "consts")?,
            dict,
            cfg,
        })
    }

    fn suite(&self) -> Result<TestSuite> {
        let p = self
            .suite_path
            .as_ref()
            .ok_or_else(|| anyhow!("no test suite given (--suite)"))?;
        load_suite(p).map_err(|e| anyhow!("{}: {e}", p.display()))
    }

    fn const_values(&self) -> Result<Vec<i8>> {
        match &self.consts {
            None => Ok(default_const_values()),
            Some(s) => split_list(s)
                .into_iter()
                .map(|t| t.parse::<i8>().map_err(|_| anyhow!("bad constant `{t}`")))
                .collect(),
        }
    }

    fn alphabet(&self) -> Result<SearchAlphabet> {
        let consts = self.const_values()?;
        let words = match &self.alphabet {
            None => SearchAlphabet::standard().words,
            Some(s) => self.words(s)?,
        };
        Ok(SearchAlphabet::new(words, consts))
    }

    fn words(&self, list: &str) -> Result<Vec<u8>> {
        let names = split_list(list);
        Ok(SearchAlphabet::from_names(&names, &self.dict)
            .map_err(|e| anyhow!(e))?
            .words)
    }

    fn secs(&self, flag: Option<f64>, key: &str) -> Result<Option<Duration>> {
        match self.cfg.pick(flag, key)? {
            None => Ok(None),
            Some(s) if s.is_finite() && s > 0.0 => Ok(Some(Duration::from_secs_f64(s))),
            Some(s) => bail!("--{key} must be positive, got {s}"),
        }
    }

    fn step(&self, s: &Step) -> Result<BaseStepParams> {
        let d = BaseStepParams::default();
        let l0 = self.cfg.get(s.l0, "l0", d.l0)?;
        let l1 = self.cfg.get(s.l1, "l1", d.l1)?;
        if l0 == 0 || l1 < l0 {
            bail!("need 0 < l0 <= l1, got l0={l0} l1={l1}");
        }
        let programs: Option<u64> = self.cfg.pick(s.programs, "programs")?;
        let time = match programs {
            Some(_) => self.secs(s.seconds, "seconds")?,
            None => Some(self.secs(s.seconds, "seconds")?.unwrap_or(d.time.unwrap_or_default())),
        };
        Ok(BaseStepParams {
            l0,
            l1,
            time,
            cycle_programs: programs,
            enum_time: self.secs(s.enum_seconds, "enum-seconds")?,
            capacity: self.capacity,
            seed: self.seed,
            mode: self.mode,
            limits: self.limits,
            ..d
        })
    }

    fn write(&self, file: &str, text: &str) -> Result<()> {
        if let Some(dir) = &self.out {
            fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
            let p = dir.join(file);
            fs::write(&p, text).with_context(|| format!("writing {}", p.display()))?;
        }
        Ok(())
    }

    fn show(&self, name: &str, p: &Program) -> Result<String> {
        show_word(name, p, &self.dict)
    }
}

fn show_word(name: &str, p: &Program, dict: &Dictionary) -> Result<String> {
    let body = disassemble(p, dict)?;
    Ok(if body.is_empty() {
        format!(": {name} ;")
    } else {
        format!(": {name} {body} ;")
    })
}

/// Parses a body, or definitions whose last word becomes the program.
fn read_program(text: &str, dict: &Dictionary) -> Result<(Program, Dictionary)> {
    if text.trim_start().starts_with(':') {
        let d = assemble(text, dict).map_err(|e| anyhow!("{e}"))?;
        let last = d.user_words().last().ok_or_else(|| anyhow!("no definition"))?;
        let body = last.body.clone().ok_or_else(|| anyhow!("empty definition"))?;
        return Ok((body, d));
    }
    Ok((parse_body(text, dict).map_err(|e| anyhow!("{e}"))?, dict.clone()))
}

fn found_status(found: bool) -> ExitCode {
    ExitCode::from(if found { 0 } else { 1 })
}

fn partial_summary(partials: &PartialProgramList) -> String {
    format!("best partial: {} of the items", partials.best_pass())
}

fn run(cli: Cli) -> Result<ExitCode> {
    match cli.cmd {
        Cmd::Run { program, trace, common } => {
            let ctx = Ctx::new(&common)?;
            let suite = ctx.suite()?;
            let (prog, dict) = read_program(&program, &ctx.dict)?;
            let r = evaluate(&prog, &dict, &suite, ctx.limits, ctx.mode);
            let mask: String = r.pass_mask.iter().map(|&b| if b { '1' } else { '0' }).collect();
            println!("passed {} of {}", r.pass_count, suite.len());
            println!("mask {mask}");
            if trace {
                let mut m = Machine::new(&dict, ctx.limits);
                for (i, it) in suite.items.iter().enumerate() {
                    let got = match m.run(prog.bytes(), &it.inputs) {
                        Ok(()) => format!("{:?}", m.stack()),
                        Err(f) => format!("fault {f:?}"),
                    };
                    let mark = if r.pass_mask[i] { "ok" } else { "FAIL" };
                    println!("{i}: {:?} -> {got} want {:?} {mark}", it.inputs, it.outputs);
                }
            }
            Ok(found_status(r.all_passed()))
        }
        Cmd::Enumerate { common, len, seconds } => {
            let ctx = Ctx::new(&common)?;
            let suite = ctx.suite()?;
            let d = EnumConfig::default();
            let cfg = EnumConfig {
                min_len: ctx.cfg.get(len.min_len, "min-len", d.min_len)?,
                max_len: ctx.cfg.get(len.max_len, "max-len", d.max_len)?,
                time_budget: ctx.secs(seconds, "seconds")?,
                capacity: ctx.capacity,
                mode: ctx.mode,
                limits: ctx.limits,
            };
            let r = enumerate(&ctx.alphabet()?, &default_forbidden_pairs(), &cfg, &suite, &ctx.dict);
            ctx.write("report.txt", &write_report(&r.histogram, &r.partials, &ctx.dict))?;
            print!("{}", histogram_report(&r.histogram));
            println!(
                "visited {} evaluated {} completed length {}{} in {:.2?}",
                r.visited,
                r.evaluated,
                r.completed_len,
                if r.timed_out { " (time out)" } else { "" },
                r.elapsed
            );
            match &r.found {
                Some(p) => println!("{}", ctx.show(&suite.name, p)?),
                None => println!("{}", partial_summary(&r.partials)),
            }
            Ok(found_status(r.found.is_some()))
        }
        Cmd::Generate {
            common,
            len,
            mode,
            model,
            seconds,
            programs,
        } => {
            let ctx = Ctx::new(&common)?;
            let suite = ctx.suite()?;
            let model_path: Option<PathBuf> = ctx.cfg.pick(model, "model")?;
            let model = match model_path {
                Some(p) => {
                    let text = fs::read_to_string(&p).with_context(|| format!("reading {}", p.display()))?;
                    FrequencyModel::load(&text, &ctx.dict).map_err(|e| anyhow!("{}: {e}", p.display()))?
                }
                None => FrequencyModel::new(),
            };
            let mode: ModeArg = ctx.cfg.get(mode, "mode", ModeArg::Unigram)?;
            let programs: Option<u64> = ctx.cfg.pick(programs, "programs")?;
            let mut time = ctx.secs(seconds, "seconds")?;
            if time.is_none() && programs.is_none() {
                time = Some(Duration::from_secs(10));
            }
            let cfg = GenConfig {
                min_len: ctx.cfg.get(len.min_len, "min-len", 1)?,
                max_len: ctx.cfg.get(len.max_len, "max-len", BaseStepParams::default().l1)?,
                mode: mode.into(),
                seed: ctx.seed,
                time_budget: time,
                program_budget: programs,
            };
            let alphabet = ctx.alphabet()?;
            let forbidden = default_forbidden_pairs();
            let space = SearchSpace::new(&ctx.dict, &alphabet, &forbidden, suite.signature(), ctx.mode);
            let r = generate(&space, &model, &cfg, &suite, ctx.limits, ctx.capacity, false, 0);
            ctx.write(
                "report.txt",
                &write_report(&PassHistogram::default(), &r.partials, &ctx.dict),
            )?;
            ctx.write("model.txt", &model.dump(&ctx.dict))?;
            println!("generated {} rejected {}", r.generated, r.rejected);
            match &r.found {
                Some(p) => println!("{}", ctx.show(&suite.name, p)?),
                None => println!("{}", partial_summary(&r.partials)),
            }
            Ok(found_status(r.found.is_some()))
        }
        Cmd::Basestep { common, step } => {
            let ctx = Ctx::new(&common)?;
            let suite = ctx.suite()?;
            let params = ctx.step(&step)?;
            let r = base_step(&params, &suite, &ctx.dict, &ctx.alphabet()?, &default_forbidden_pairs());
            ctx.write(
                "report.txt",
                &write_report(&r.exhaustive.histogram, &r.partials, &ctx.dict),
            )?;
            ctx.write("model.txt", &r.model.dump(&ctx.dict))?;
            print!("{}", histogram_report(&r.exhaustive.histogram));
            for (i, c) in r.cycles.iter().enumerate() {
                println!(
                    "cycle {} {:?}: generated {} rejected {} best {}",
                    i + 1,
                    c.mode,
                    c.generated,
                    c.rejected,
                    c.best_pass
                );
            }
            match &r.found {
                Some(p) => println!("{}", ctx.show(&suite.name, p)?),
                None => println!("{}", partial_summary(&r.partials)),
            }
            Ok(found_status(r.found.is_some()))
        }
        Cmd::Admissible { common, step, genome } => {
            let ctx = Ctx::new(&common)?;
            let suite = ctx.suite()?;
            let cfg = evolve_config(&ctx, &step, &genome)?;
            let (a, transcript) = select_admissible(&suite, &ctx.dict, &cfg.base_words, &cfg.system_words, &cfg);
            let text = transcript.join("\n") + "\n";
            ctx.write("transcript.txt", &text)?;
            ctx.write(
                "report.txt",
                &write_report(&PassHistogram::default(), &a.partials, &ctx.dict),
            )?;
            print!("{text}");
            println!("admissible {}", a.genome.word_names().join(" "));
            if let Some(p) = &a.found {
                println!("{}", ctx.show(&suite.name, p)?);
            }
            Ok(found_status(a.found.is_some()))
        }
        Cmd::Evolve {
            common,
            step,
            genome,
            candidates,
            max_genes,
            attempts,
            budget,
        } => {
            let ctx = Ctx::new(&common)?;
            let suite = ctx.suite()?;
            let mut cfg = evolve_config(&ctx, &step, &genome)?;
            cfg.candidates = ctx.cfg.get(candidates, "candidates", DEFAULT_CANDIDATES)?;
            cfg.max_genes = ctx.cfg.get(max_genes, "max-genes", cfg.max_genes)?;
            cfg.attempts = ctx.cfg.get(attempts, "attempts", cfg.attempts)?;
            if let Some(b) = ctx.secs(budget, "budget")? {
                cfg.time_budget = Some(b);
            }
            let r = evolve(&suite, &ctx.dict, &cfg);
            let text = r.transcript.join("\n") + "\n";
            let mut dict_text = r.genome.dict.to_text();
            if let Some(p) = &r.found {
                dict_text.push_str(&show_word(&suite.name, p, &r.genome.dict)?);
                dict_text.push('\n');
            }
            ctx.write("transcript.txt", &text)?;
            ctx.write("dictionary.txt", &dict_text)?;
            print!("{text}");
            if let Some(p) = &r.inlined {
                println!("{}", show_word(&suite.name, p, &ctx.dict)?);
            }
            Ok(found_status(r.found.is_some()))
        }
        Cmd::Inline { program, common } => {
            let ctx = Ctx::new(&common)?;
            let (prog, dict) = read_program(&program, &ctx.dict)?;
            let flat = inline_genes(&prog, &dict)?;
            println!("{}", disassemble(&flat, &dict)?);
            Ok(ExitCode::SUCCESS)
        }
        Cmd::Selector { program, common } => {
            let ctx = Ctx::new(&common)?;
            let suite = ctx.suite()?;
            let (prog, dict) = read_program(&program, &ctx.dict)?;
            let sel = derive_selector_suite(&suite, &prog, &dict, ctx.limits, ctx.mode)?;
            ctx.write(&format!("{}.tst", sel.name), &sel.to_tst())?;
            print!("{}", sel.to_tst());
            Ok(ExitCode::SUCCESS)
        }
        Cmd::Compose { q, p, r, common } => {
            let ctx = Ctx::new(&common)?;
            let suite = ctx.suite()?;
            let body = |t: &str| parse_body(t, &ctx.dict).map_err(|e| anyhow!("{e}"));
            let (prog, dict) = compose_partition(
                &body(&q)?,
                &body(&p)?,
                &body(&r)?,
                &suite,
                &ctx.dict,
                ctx.limits,
                ctx.mode,
            )?;
            let mut text = dict.to_text();
            text.push_str(&show_word(&suite.name, &prog, &dict)?);
            text.push('\n');
            ctx.write("dictionary.txt", &text)?;
            print!("{text}");
            Ok(ExitCode::SUCCESS)
        }
    }
}

fn evolve_config(ctx: &Ctx, step: &Step, g: &GenomeArgs) -> Result<EvolveConfig> {
    let base_words = match ctx.cfg.pick(g.base_words.clone(), "base-words")? {
        Some(s) => ctx.words(&s)?,
        None => default_base_words(),
    };
    let system_words = match ctx.cfg.pick(g.system_words.clone(), "system-words")? {
        Some(s) => ctx.words(&s)?,
        None => default_system_words(),
    };
    let sample_size = ctx.cfg.get(g.sample_size, "sample-size", DEFAULT_SAMPLE_SIZE)?;
    if sample_size == 0 {
        bail!("--sample-size must be positive");
    }
    Ok(EvolveConfig {
        base_words,
        system_words,
        const_values: ctx.const_values()?,
        base: ctx.step(step)?,
        sample_size,
        ..Default::default()
    })
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
