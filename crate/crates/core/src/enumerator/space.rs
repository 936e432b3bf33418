//! Candidate construction shared by the exhaustive and random searches.
//!
//! A candidate is a sequence of opcodes plus operand choices. CONST operands
//! come from the alphabet's value set; jump operands are given as target
//! instruction indices (`0..=len`, `len` being the final END) and converted
//! to byte offsets here.

use std::collections::BTreeSet;

use crate::testio::EvalMode;
use crate::vm::opcode::{self, CONST, END};
use crate::vm::{Analyzer, Dictionary, Signature};

/// Longest candidate the search machinery handles (target sets are `u64`).
pub const MAX_SEARCH_LEN: usize = 63;

/// Words and CONST values a search may use.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SearchAlphabet {
    /// Opcodes, ascending, no END.
    pub words: Vec<u8>,
    pub const_values: Vec<i8>,
}

/// `-3..=-1` and `1..=12`.
pub fn default_const_values() -> Vec<i8> {
    (-3..=-1).chain(1..=12).collect()
}

impl SearchAlphabet {
    pub fn new(words: impl IntoIterator<Item = u8>, const_values: impl IntoIterator<Item = i8>) -> Self {
        let words: BTreeSet<u8> = words.into_iter().filter(|&c| c != END).collect();
        let values: BTreeSet<i8> = const_values.into_iter().collect();
        SearchAlphabet {
            words: words.into_iter().collect(),
            const_values: values.into_iter().collect(),
        }
    }

    /// The standard 33 built-ins with the default CONST values.
    pub fn standard() -> Self {
        Self::new(opcode::default_search_words(), default_const_values())
    }

    /// Standard built-ins plus every user word of `dict` that has a signature.
    pub fn with_user_words(dict: &Dictionary) -> Self {
        let user = dict.user_words().filter(|w| w.signature.is_some()).map(|w| w.code);
        Self::new(
            opcode::default_search_words().into_iter().chain(user),
            default_const_values(),
        )
    }

    /// Looks names up in `dict`; the default CONST values are used.
    pub fn from_names<S: AsRef<str>>(names: &[S], dict: &Dictionary) -> Result<Self, String> {
        let mut codes = Vec::with_capacity(names.len());
        for n in names {
            let n = n.as_ref();
            let c = dict.code_of(n).ok_or_else(|| format!("unknown word `{n}`"))?;
            if c == END {
                return Err("END cannot be part of a search alphabet".into());
            }
            codes.push(c);
        }
        Ok(Self::new(codes, default_const_values()))
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    pub fn contains(&self, code: u8) -> bool {
        self.words.binary_search(&code).is_ok()
    }

    pub fn names(&self, dict: &Dictionary) -> Vec<String> {
        self.words
            .iter()
            .map(|&c| dict.name_of(c).unwrap_or("?").to_string())
            .collect()
    }
}

/// Adjacent opcode pairs that are never generated.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ForbiddenPairs {
    pairs: BTreeSet<(u8, u8)>,
}

impl ForbiddenPairs {
    pub fn none() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, a: u8, b: u8) {
        self.pairs.insert((a, b));
    }

    pub fn contains(&self, a: u8, b: u8) -> bool {
        self.pairs.contains(&(a, b))
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (u8, u8)> + '_ {
        self.pairs.iter().copied()
    }

    /// Dense 256×256 lookup table.
    pub fn table(&self) -> Vec<bool> {
        let mut t = vec![false; 256 * 256];
        for &(a, b) in &self.pairs {
            t[(a as usize) << 8 | b as usize] = true;
        }
        t
    }
}

/// Pairs whose combined effect is the identity. `CONST DROP` covers every
/// operand value.
pub fn default_forbidden_pairs() -> ForbiddenPairs {
    use opcode::*;
    let mut f = ForbiddenPairs::none();
    for (a, b) in [
        (DUP, DROP),
        (SWAP, SWAP),
        (OVER, DROP),
        (NEG, NEG),
        (NOT, NOT),
        (INC, DEC),
        (DEC, INC),
        (ROT, NROT),
        (NROT, ROT),
        (CONST, DROP),
    ] {
        f.insert(a, b);
    }
    f
}

/// Number of opcode sequences of `length` over the alphabet (operands not
/// counted). Saturates at `u128::MAX`.
pub fn count_space(alphabet: &SearchAlphabet, length: usize) -> u128 {
    let k = alphabet.len() as u128;
    let mut total: u128 = 1;
    for _ in 0..length {
        total = total.saturating_mul(k);
    }
    total
}

/// Immutable per-search context: stack effects of the alphabet, forbidden
/// table, and the suite's signature gate.
#[derive(Debug, Clone)]
pub struct SearchSpace<'a> {
    pub dict: &'a Dictionary,
    pub alphabet: SearchAlphabet,
    pub suite_sig: (usize, usize),
    pub mode: EvalMode,
    /// Per opcode: (required depth, net change). Only meaningful for words
    /// with a static signature.
    effect: Vec<(i32, i32)>,
    is_static: Vec<bool>,
    forbidden: Vec<bool>,
}

impl<'a> SearchSpace<'a> {
    /// Words without a static signature (PICK, ROLL, tolerated user words)
    /// are kept but force the full analyzer path.
    pub fn new(
        dict: &'a Dictionary,
        alphabet: &SearchAlphabet,
        forbidden: &ForbiddenPairs,
        suite_sig: (usize, usize),
        mode: EvalMode,
    ) -> Self {
        let words: Vec<u8> = alphabet
            .words
            .iter()
            .copied()
            .filter(|&c| dict.contains_code(c))
            .collect();
        let mut effect = vec![(0, 0); 256];
        let mut is_static = vec![false; 256];
        for &c in &words {
            if let Some(s) = dict.signature(c) {
                effect[c as usize] = (s.consumed as i32, s.delta());
                is_static[c as usize] = !opcode::is_jump(c);
            }
        }
        SearchSpace {
            dict,
            alphabet: SearchAlphabet {
                words,
                const_values: alphabet.const_values.clone(),
            },
            suite_sig,
            mode,
            effect,
            is_static,
            forbidden: forbidden.table(),
        }
    }

    pub fn words(&self) -> &[u8] {
        &self.alphabet.words
    }

    pub fn const_values(&self) -> &[i8] {
        &self.alphabet.const_values
    }

    #[inline]
    pub fn is_forbidden(&self, a: u8, b: u8) -> bool {
        self.forbidden[(a as usize) << 8 | b as usize]
    }

    /// (required depth, net change) of a word with a static signature.
    #[inline]
    pub fn effect(&self, code: u8) -> (i32, i32) {
        self.effect[code as usize]
    }

    /// Has a signature usable for straight-line depth tracking.
    #[inline]
    pub fn is_static(&self, code: u8) -> bool {
        self.is_static[code as usize]
    }

    /// Bit `j` set when `(ops[j-1], ops[j])` is forbidden.
    #[inline]
    pub fn forbidden_mask(&self, ops: &[u8]) -> u64 {
        let mut m = 0u64;
        for j in 1..ops.len() {
            if self.is_forbidden(ops[j - 1], ops[j]) {
                m |= 1 << j;
            }
        }
        m
    }

    /// Would a program with static signature `sig` be evaluated?
    #[inline]
    pub fn accepts(&self, sig: Signature) -> bool {
        let (m, n) = self.suite_sig;
        match self.mode {
            EvalMode::Strict => sig.fits(m, n),
            EvalMode::Lenient => {
                let p = sig.consumed as usize;
                p <= m && m - p + sig.produced as usize >= n
            }
        }
    }

    /// Final depth check for straight-line programs, given the depth after
    /// the last instruction starting from `m` inputs.
    #[inline]
    pub fn accepts_final_depth(&self, depth: i32) -> bool {
        let n = self.suite_sig.1 as i32;
        match self.mode {
            EvalMode::Strict => depth == n,
            EvalMode::Lenient => depth >= n,
        }
    }

    /// Final depth of a straight-line sequence run on `m` inputs, or `None`
    /// if some prefix underflows or a word lacks a static signature.
    pub fn straight_depth(&self, ops: &[u8]) -> Option<i32> {
        let mut d = self.suite_sig.0 as i32;
        for &c in ops {
            if !self.is_static(c) {
                return None;
            }
            let (need, delta) = self.effect(c);
            if d < need {
                return None;
            }
            d += delta;
        }
        Some(d)
    }

    /// True when `ops` is certain to be rejected whatever its operands: with
    /// no GOTO, running every IF as not taken is a real path, so an underflow
    /// on it or a wrong depth at its end rules the program out.
    pub fn fallthrough_rejects(&self, ops: &[u8]) -> bool {
        let mut d = self.suite_sig.0 as i32;
        for &c in ops {
            if c == opcode::GOTO || !(self.is_static(c) || c == opcode::IF) {
                return false;
            }
            let (need, delta) = self.effect(c);
            if d < need {
                return true;
            }
            d += delta;
        }
        !self.accepts_final_depth(d)
    }

    /// Full candidate check on assembled bytes: forbidden pairs may only
    /// straddle a jump target, every instruction must be reachable, and the
    /// static signature must be accepted.
    pub fn check_bytes(&self, analyzer: &mut Analyzer, layout: &Layout, bytes: &[u8]) -> bool {
        if layout.forbidden & !layout.targets != 0 {
            return false;
        }
        if !layout.jump_slots.is_empty() && layout.has_dead_code(bytes) {
            return false;
        }
        match analyzer.run(bytes, self.dict) {
            Ok(sig) => self.accepts(sig),
            Err(_) => false,
        }
    }
}

/// Byte layout of an opcode sequence.
#[derive(Debug, Clone, Default)]
pub struct Layout {
    /// Byte offset of each instruction, plus the END offset last.
    pub offsets: Vec<usize>,
    /// Instruction indices holding CONST.
    pub const_slots: Vec<usize>,
    /// Instruction indices holding IF/GOTO.
    pub jump_slots: Vec<usize>,
    /// Forbidden-pair positions (see [`SearchSpace::forbidden_mask`]).
    pub forbidden: u64,
    /// Jump target instruction indices of the current operand choice.
    pub targets: u64,
    /// An IF to the next instruction equals DROP, which is available.
    pub if_next_is_drop: bool,
}

impl Layout {
    /// Lays out `ops` into `bytes` (operand bytes zeroed, END appended).
    pub fn build(&mut self, space: &SearchSpace<'_>, ops: &[u8], bytes: &mut Vec<u8>) {
        debug_assert!(ops.len() <= MAX_SEARCH_LEN);
        self.offsets.clear();
        self.const_slots.clear();
        self.jump_slots.clear();
        bytes.clear();
        for (i, &c) in ops.iter().enumerate() {
            self.offsets.push(bytes.len());
            bytes.push(c);
            if opcode::has_operand(c) {
                bytes.push(0);
                if c == CONST {
                    self.const_slots.push(i);
                } else {
                    self.jump_slots.push(i);
                }
            }
        }
        self.offsets.push(bytes.len());
        bytes.push(END);
        self.forbidden = space.forbidden_mask(ops);
        self.targets = 0;
        self.if_next_is_drop = space.words().binary_search(&opcode::DROP).is_ok();
    }

    pub fn len(&self) -> usize {
        self.offsets.len() - 1
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    #[inline]
    pub fn set_const(&self, bytes: &mut [u8], slot: usize, value: i8) {
        bytes[self.offsets[slot] + 1] = value as u8;
    }

    /// Points the jump at instruction `slot` to instruction `target`.
    /// Returns false if that would be a zero operand (jumping to the operand
    /// byte itself is not an instruction boundary, so it cannot happen), out
    /// of the i8 range, or redundant: a GOTO to the next instruction does
    /// nothing and an IF to it acts as DROP.
    #[inline]
    pub fn set_jump(&self, bytes: &mut [u8], slot: usize, target: usize) -> bool {
        if target == slot + 1 && (bytes[self.offsets[slot]] == opcode::GOTO || self.if_next_is_drop) {
            return false;
        }
        let from = (self.offsets[slot] + 1) as isize;
        let to = self.offsets[target] as isize;
        let d = to - from;
        if d == 0 || d < i8::MIN as isize || d > i8::MAX as isize {
            return false;
        }
        bytes[self.offsets[slot] + 1] = d as i8 as u8;
        true
    }

    /// False if no execution can reach the final END, treating an `IF`
    /// directly after a CONST (and not itself a jump target) as decided by
    /// that constant. Such programs fail every item.
    pub fn can_halt(&self, ops: &[u8], bytes: &[u8]) -> bool {
        let n = ops.len();
        let mut seen = 0u64;
        let mut stack = 1u64; // bit set = instruction index to visit
        while stack != 0 {
            let i = stack.trailing_zeros() as usize;
            stack &= stack - 1;
            if seen & (1 << i) != 0 {
                continue;
            }
            seen |= 1 << i;
            if i == n {
                return true;
            }
            let code = ops[i];
            let mut next = 0u64;
            if opcode::is_jump(code) {
                let from = self.offsets[i] + 1;
                let to = (from as isize + bytes[from] as i8 as isize) as usize;
                let t = self.offsets.binary_search(&to).unwrap_or(n);
                let forced = code == opcode::GOTO || (i > 0 && ops[i - 1] == CONST && self.targets & (1 << i) == 0);
                if !forced {
                    next |= 1 << (i + 1);
                    next |= 1 << t;
                } else if code == opcode::GOTO || bytes[self.offsets[i - 1] + 1] != 0 {
                    next |= 1 << t;
                } else {
                    next |= 1 << (i + 1);
                }
            } else {
                next |= 1 << (i + 1);
            }
            stack |= next & !seen;
        }
        false
    }

    /// True if some instruction cannot be reached from the start along any
    /// branch. Such a program equals a shorter one with that code removed.
    pub fn has_dead_code(&self, bytes: &[u8]) -> bool {
        let n = self.len();
        let mut seen = 0u64;
        let mut stack = 1u64;
        while stack != 0 {
            let i = stack.trailing_zeros() as usize;
            stack &= stack - 1;
            seen |= 1 << i;
            if i == n {
                continue;
            }
            let at = self.offsets[i];
            let code = bytes[at];
            let mut next = 0u64;
            if opcode::is_jump(code) {
                let to = (at as isize + 1 + bytes[at + 1] as i8 as isize) as usize;
                if let Ok(t) = self.offsets.binary_search(&to) {
                    next |= 1 << t;
                }
            }
            if code != opcode::GOTO {
                next |= 1 << (i + 1);
            }
            stack |= next & !seen;
        }
        let all = if n >= 64 { u64::MAX } else { (1u64 << n) - 1 };
        seen & all != all
    }

    /// True if some IF is fed directly by a CONST.
    pub fn has_const_condition(&self, ops: &[u8]) -> bool {
        self.jump_slots
            .iter()
            .any(|&i| i > 0 && ops[i] == opcode::IF && ops[i - 1] == CONST)
    }

    /// Recomputes `targets` from the jump operands currently in `bytes`.
    pub fn refresh_targets(&mut self, bytes: &[u8]) {
        let mut t = 0u64;
        for &s in &self.jump_slots {
            let from = self.offsets[s] + 1;
            let to = (from as isize + bytes[from] as i8 as isize) as usize;
            if let Ok(idx) = self.offsets.binary_search(&to) {
                t |= 1 << idx;
            }
        }
        self.targets = t;
    }
}
