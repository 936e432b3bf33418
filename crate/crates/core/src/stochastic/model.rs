//! Word and word-pair frequencies collected from partial programs.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use crate::enumerator::{PartialProgramList, SearchAlphabet};
use crate::vm::opcode::{CONST, END};
use crate::vm::{decode, Dictionary, Program};

/// Probability given to words and pairs never seen, before normalization.
pub const FLOOR: f64 = 1.0 / 1024.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum GenMode {
    #[default]
    Unigram,
    Markov,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FrequencyModel {
    unigram: Vec<u64>,
    bigram: Vec<u64>,
    pub const_values: BTreeMap<i8, u64>,
}

impl Default for FrequencyModel {
    fn default() -> Self {
        FrequencyModel {
            unigram: vec![0; 256],
            bigram: vec![0; 256 * 256],
            const_values: BTreeMap::new(),
        }
    }
}

impl FrequencyModel {
    pub fn new() -> Self {
        Self::default()
    }

    /// Adds one program body (END excluded). Undecodable bytes are ignored.
    pub fn add_program(&mut self, program: &Program, dict: &Dictionary) {
        let Ok(ins) = decode(program.bytes(), dict) else {
            return;
        };
        let mut prev: Option<u8> = None;
        for i in ins.iter().filter(|i| i.code != END) {
            self.unigram[i.code as usize] += 1;
            if let Some(p) = prev {
                self.bigram[(p as usize) << 8 | i.code as usize] += 1;
            }
            if i.code == CONST {
                *self.const_values.entry(i.operand.unwrap_or(0)).or_insert(0) += 1;
            }
            prev = Some(i.code);
        }
    }

    pub fn unigram_count(&self, code: u8) -> u64 {
        self.unigram[code as usize]
    }

    pub fn bigram_count(&self, a: u8, b: u8) -> u64 {
        self.bigram[(a as usize) << 8 | b as usize]
    }

    pub fn set_unigram_count(&mut self, code: u8, count: u64) {
        self.unigram[code as usize] = count;
    }

    pub fn set_bigram_count(&mut self, a: u8, b: u8, count: u64) {
        self.bigram[(a as usize) << 8 | b as usize] = count;
    }

    pub fn unigram_total(&self) -> u64 {
        self.unigram.iter().sum()
    }

    /// Observed relative frequency of `code`, raised to [`FLOOR`].
    pub fn raw_unigram(&self, code: u8) -> f64 {
        let total = self.unigram_total();
        if total == 0 {
            return FLOOR;
        }
        (self.unigram[code as usize] as f64 / total as f64).max(FLOOR)
    }

    /// Observed frequency of `b` following `a`, raised to [`FLOOR`].
    pub fn raw_bigram(&self, a: u8, b: u8) -> f64 {
        let row = &self.bigram[(a as usize) << 8..((a as usize) + 1) << 8];
        let total: u64 = row.iter().sum();
        if total == 0 {
            return FLOOR;
        }
        (row[b as usize] as f64 / total as f64).max(FLOOR)
    }

    /// Normalized first-word distribution over `words`.
    pub fn unigram_probs(&self, words: &[u8]) -> Vec<f64> {
        normalize(words.iter().map(|&c| self.raw_unigram(c)).collect())
    }

    /// Normalized successor distribution of `prev` over `words`.
    pub fn bigram_probs(&self, prev: u8, words: &[u8]) -> Vec<f64> {
        normalize(words.iter().map(|&c| self.raw_bigram(prev, c)).collect())
    }

    /// CONST operand support and normalized weights: the alphabet's values
    /// plus any observed ones, each at least [`FLOOR`] before normalization.
    pub fn const_probs(&self, alphabet_values: &[i8]) -> (Vec<i8>, Vec<f64>) {
        let mut vals: Vec<i8> = alphabet_values.to_vec();
        vals.extend(self.const_values.keys().copied());
        vals.sort_unstable();
        vals.dedup();
        let total: u64 = self.const_values.values().sum();
        let raw = vals
            .iter()
            .map(|v| {
                if total == 0 {
                    FLOOR
                } else {
                    (*self.const_values.get(v).unwrap_or(&0) as f64 / total as f64).max(FLOOR)
                }
            })
            .collect();
        (vals, normalize(raw))
    }

    /// `WORD count` lines, then `WORD WORD count`, then `CONST value count`.
    /// Zero counts are omitted.
    pub fn dump(&self, dict: &Dictionary) -> String {
        let name = |c: usize| dict.name_of(c as u8).unwrap_or("?").to_string();
        let mut s = String::new();
        for (c, &n) in self.unigram.iter().enumerate() {
            if n > 0 {
                let _ = writeln!(s, "{} {n}", name(c));
            }
        }
        for (i, &n) in self.bigram.iter().enumerate() {
            if n > 0 {
                let _ = writeln!(s, "{} {} {n}", name(i >> 8), name(i & 0xff));
            }
        }
        for (v, n) in &self.const_values {
            let _ = writeln!(s, "CONST {v} {n}");
        }
        s
    }

    /// Parses [`dump`](Self::dump) output.
    pub fn load(text: &str, dict: &Dictionary) -> Result<Self, String> {
        let mut m = FrequencyModel::new();
        for (i, line) in text.lines().enumerate() {
            let toks: Vec<&str> = line.split_whitespace().collect();
            let err = |msg: &str| format!("line {}: {msg}", i + 1);
            let word = |t: &str| dict.code_of(t).ok_or_else(|| err(&format!("unknown word `{t}`")));
            let count = |t: &str| t.parse::<u64>().map_err(|_| err("bad count"));
            match toks.as_slice() {
                [] => {}
                [w, n] => m.unigram[word(w)? as usize] += count(n)?,
                ["CONST", v, n] if v.parse::<i8>().is_ok() => {
                    *m.const_values.entry(v.parse().unwrap_or(0)).or_insert(0) += count(n)?;
                }
                [a, b, n] => {
                    let (a, b) = (word(a)?, word(b)?);
                    m.bigram[(a as usize) << 8 | b as usize] += count(n)?;
                }
                _ => return Err(err("expected `WORD count` or `WORD WORD count`")),
            }
        }
        Ok(m)
    }
}

fn normalize(mut v: Vec<f64>) -> Vec<f64> {
    let s: f64 = v.iter().sum();
    if s > 0.0 {
        for x in &mut v {
            *x /= s;
        }
    }
    v
}

/// Counts words, adjacent pairs and CONST operands over all partial programs.
pub fn build_model(partials: &PartialProgramList, dict: &Dictionary) -> FrequencyModel {
    let mut m = FrequencyModel::new();
    for p in partials.programs() {
        m.add_program(p, dict);
    }
    m
}

/// Probability `ε` of drawing the opcode sequence of `program` (operands
/// not included), and `N = round(1/ε)`.
pub fn program_probability(
    model: &FrequencyModel,
    program: &Program,
    mode: GenMode,
    alphabet: &SearchAlphabet,
    dict: &Dictionary,
) -> (f64, u64) {
    let ops: Vec<u8> = decode(program.bytes(), dict)
        .map(|ins| ins.iter().filter(|i| i.code != END).map(|i| i.code).collect())
        .unwrap_or_default();
    let words = &alphabet.words;
    let uni = model.unigram_probs(words);
    let prob_in = |probs: &[f64], c: u8| words.binary_search(&c).map(|i| probs[i]).unwrap_or(0.0);
    let mut eps = 1.0;
    for (i, &c) in ops.iter().enumerate() {
        eps *= match (mode, i) {
            (GenMode::Markov, i) if i > 0 => prob_in(&model.bigram_probs(ops[i - 1], words), c),
            _ => prob_in(&uni, c),
        };
    }
    let n = if eps > 0.0 {
        (1.0 / eps).round() as u64
    } else {
        u64::MAX
    };
    (eps, n)
}
