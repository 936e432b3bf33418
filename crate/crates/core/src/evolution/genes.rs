//! Gene candidates and gene inlining.

use std::collections::{BTreeMap, BTreeSet};

use crate::enumerator::PartialProgramList;
use crate::vm::opcode::{self, END};
use crate::vm::{check_jumps, decode, static_analyze, Dictionary, Program, VmError};

/// Number of candidates taken per refill.
pub const DEFAULT_CANDIDATES: usize = 8;

/// A byte chain of two or three instructions and how often it occurs.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Candidate {
    pub chain: Vec<u8>,
    pub instructions: usize,
    pub frequency: u64,
}

/// True if `chain` can stand as a word body: it decodes, its jumps stay
/// inside it and it has a static signature.
pub fn is_valid_body(chain: &[u8], dict: &Dictionary) -> bool {
    let p = Program::from_body(chain);
    decode(p.bytes(), dict).is_ok_and(|ins| check_jumps(&ins).is_ok()) && static_analyze(&p, dict).valid
}

/// The `k` most frequent chains of 2 and 3 consecutive instructions in the
/// partial programs. Chains in `unsuccessful`, chains already defined as a
/// user word and chains that are not valid word bodies are skipped. Ties go
/// to the shorter chain, then to the smaller bytes.
pub fn extract_candidates(
    partials: &PartialProgramList,
    dict: &Dictionary,
    unsuccessful: &BTreeSet<Vec<u8>>,
    k: usize,
) -> Vec<Candidate> {
    let mut counts: BTreeMap<Vec<u8>, (usize, u64)> = BTreeMap::new();
    for p in partials.programs() {
        let Ok(ins) = decode(p.bytes(), dict) else {
            continue;
        };
        let body: Vec<_> = ins.iter().filter(|i| i.code != END).collect();
        for n in [2, 3] {
            for w in body.windows(n) {
                let start = w[0].offset;
                let end = w[n - 1].offset + w[n - 1].width();
                counts.entry(p.bytes()[start..end].to_vec()).or_insert((n, 0)).1 += 1;
            }
        }
    }
    let mut out: Vec<Candidate> = counts
        .into_iter()
        .filter(|(c, _)| !unsuccessful.contains(c) && dict.find_user_body(c).is_none())
        .filter(|(c, _)| is_valid_body(c, dict))
        .map(|(chain, (instructions, frequency))| Candidate {
            chain,
            instructions,
            frequency,
        })
        .collect();
    out.sort_by(|a, b| {
        b.frequency
            .cmp(&a.frequency)
            .then(a.instructions.cmp(&b.instructions))
            .then_with(|| a.chain.cmp(&b.chain))
    });
    out.truncate(k);
    out
}

#[derive(Debug, Clone, Copy)]
enum Op {
    Plain(u8),
    Const(u8, i8),
    Jump(u8, usize),
}

#[derive(Debug, thiserror::Error)]
pub enum InlineError {
    #[error(transparent)]
    Vm(#[from] VmError),
    #[error("jump distance {0} does not fit in an operand byte")]
    JumpTooFar(isize),
    #[error("word nesting deeper than {0}")]
    TooDeep(usize),
}

const MAX_NESTING: usize = 64;

/// Replaces every call to a user word by the word's body, recursively, and
/// re-targets all jumps. The result uses built-ins only.
pub fn inline_genes(program: &Program, dict: &Dictionary) -> Result<Program, InlineError> {
    let ops = expand(program.bytes(), dict, 0)?;
    encode(&ops)
}

fn expand(bytes: &[u8], dict: &Dictionary, depth: usize) -> Result<Vec<Op>, InlineError> {
    if depth > MAX_NESTING {
        return Err(InlineError::TooDeep(MAX_NESTING));
    }
    let ins = decode(bytes, dict)?;
    check_jumps(&ins)?;
    let index_of = |off: isize| ins.iter().position(|i| i.offset as isize == off).unwrap_or(0);
    let mut parts: Vec<Vec<Op>> = Vec::with_capacity(ins.len());
    for i in ins.iter().filter(|i| i.code != END) {
        let part = match dict.body(i.code) {
            Some(body) => expand(body, dict, depth + 1)?,
            None => vec![match (i.jump_target(), i.operand) {
                (Some(t), _) => Op::Jump(i.code, index_of(t)),
                (None, Some(v)) => Op::Const(i.code, v),
                (None, None) => Op::Plain(i.code),
            }],
        };
        parts.push(part);
    }
    let mut starts = Vec::with_capacity(parts.len() + 1);
    let mut n = 0;
    for p in &parts {
        starts.push(n);
        n += p.len();
    }
    starts.push(n);
    let mut out = Vec::with_capacity(n);
    for (k, p) in parts.iter().enumerate() {
        let inlined = dict.body(ins[k].code).is_some();
        out.extend(p.iter().map(|&op| match op {
            Op::Jump(c, t) if inlined => Op::Jump(c, t + starts[k]),
            Op::Jump(c, t) => Op::Jump(c, starts[t]),
            other => other,
        }));
    }
    Ok(out)
}

fn encode(ops: &[Op]) -> Result<Program, InlineError> {
    let mut offsets = Vec::with_capacity(ops.len() + 1);
    let mut off = 0;
    for op in ops {
        offsets.push(off);
        off += match op {
            Op::Plain(c) => opcode::width(*c),
            _ => 2,
        };
    }
    offsets.push(off);
    let mut bytes = Vec::with_capacity(off + 1);
    for (k, op) in ops.iter().enumerate() {
        match *op {
            Op::Plain(c) => bytes.push(c),
            Op::Const(c, v) => bytes.extend([c, v as u8]),
            Op::Jump(c, t) => {
                let d = offsets[t] as isize - (offsets[k] + 1) as isize;
                let v = i8::try_from(d).map_err(|_| InlineError::JumpTooFar(d))?;
                bytes.extend([c, v as u8]);
            }
        }
    }
    bytes.push(END);
    Ok(Program::from_bytes(bytes))
}
