//! Static stack-depth analysis.
//!
//! Depth is tracked relative to the entry depth at every instruction
//! boundary. A program is valid when every boundary is reached with a single
//! depth and END is reachable; the consumed count is the largest shortfall
//! below the entry depth.

use std::collections::BTreeMap;
use std::fmt;

use super::dict::Dictionary;
use super::opcode::{self, Signature, END, GOTO, IF};
use super::program::Program;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Invalid {
    Empty,
    UnknownOpcode {
        offset: usize,
        code: u8,
    },
    MissingOperand {
        offset: usize,
    },
    EarlyEnd {
        offset: usize,
    },
    MissingEnd,
    BadJump {
        offset: usize,
        target: isize,
    },
    /// Two paths reach `offset` with different relative depths.
    DepthMismatch {
        offset: usize,
        first: i32,
        second: i32,
    },
    /// PICK/ROLL or a user word without a static signature.
    Dynamic {
        offset: usize,
        code: u8,
    },
    EndUnreachable,
}

impl fmt::Display for Invalid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            Invalid::Empty => write!(f, "empty program"),
            Invalid::UnknownOpcode { offset, code } => {
                write!(f, "unknown opcode {code} at {offset}")
            }
            Invalid::MissingOperand { offset } => write!(f, "missing operand at {offset}"),
            Invalid::EarlyEnd { offset } => write!(f, "END before the last byte at {offset}"),
            Invalid::MissingEnd => write!(f, "no terminating END"),
            Invalid::BadJump { offset, target } => {
                write!(f, "jump at {offset} lands off a boundary ({target})")
            }
            Invalid::DepthMismatch { offset, first, second } => {
                write!(f, "depth mismatch at {offset}: {first} vs {second}")
            }
            Invalid::Dynamic { offset, code } => {
                write!(f, "word {code} at {offset} has no static signature")
            }
            Invalid::EndUnreachable => write!(f, "END is unreachable"),
        }
    }
}

/// Result of [`static_analyze`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StackEffect {
    pub consumed: u32,
    pub produced: u32,
    pub valid: bool,
    pub reason: Option<Invalid>,
    /// Relative depth at each reached instruction boundary.
    pub per_offset_depth: BTreeMap<usize, i32>,
}

impl StackEffect {
    pub fn signature(&self) -> Signature {
        Signature::new(self.consumed, self.produced)
    }
}

/// Analyzes `program` against `dict`. Never fails: problems are reported
/// through `valid` and `reason`.
pub fn static_analyze(program: &Program, dict: &Dictionary) -> StackEffect {
    let mut a = Analyzer::new();
    let res = a.run(program.bytes(), dict);
    let per_offset_depth = a
        .depth
        .iter()
        .enumerate()
        .filter(|(_, &d)| d != UNSET)
        .map(|(o, &d)| (o, d))
        .collect();
    match res {
        Ok(sig) => StackEffect {
            consumed: sig.consumed,
            produced: sig.produced,
            valid: true,
            reason: None,
            per_offset_depth,
        },
        Err(r) => StackEffect {
            consumed: 0,
            produced: 0,
            valid: false,
            reason: Some(r),
            per_offset_depth,
        },
    }
}

const UNSET: i32 = i32::MIN;

/// Reusable analysis scratch space for hot loops.
#[derive(Debug, Default, Clone)]
pub struct Analyzer {
    depth: Vec<i32>,
    boundary: Vec<bool>,
    work: Vec<usize>,
}

impl Analyzer {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn run(&mut self, bytes: &[u8], dict: &Dictionary) -> Result<Signature, Invalid> {
        let n = bytes.len();
        if n == 0 {
            return Err(Invalid::Empty);
        }
        self.depth.clear();
        self.depth.resize(n, UNSET);
        self.boundary.clear();
        self.boundary.resize(n, false);
        self.work.clear();

        let mut i = 0;
        loop {
            if i >= n {
                return Err(Invalid::MissingEnd);
            }
            let code = bytes[i];
            self.boundary[i] = true;
            if code == END {
                if i + 1 != n {
                    return Err(Invalid::EarlyEnd { offset: i });
                }
                break;
            }
            if !dict.contains_code(code) {
                return Err(Invalid::UnknownOpcode { offset: i, code });
            }
            let w = opcode::width(code);
            if i + w > n {
                return Err(Invalid::MissingOperand { offset: i });
            }
            i += w;
        }
        let end = n - 1;

        let mut min_rel = 0i32;
        self.depth[0] = 0;
        self.work.push(0);
        while let Some(off) = self.work.pop() {
            let d = self.depth[off];
            let code = bytes[off];
            if code == END {
                continue;
            }
            let sig = dict.signature(code).ok_or(Invalid::Dynamic { offset: off, code })?;
            let after_pop = d - sig.consumed as i32;
            min_rel = min_rel.min(after_pop);
            let nd = after_pop + sig.produced as i32;
            let w = opcode::width(code);
            if code != GOTO {
                self.visit(off + w, nd)?;
            }
            if code == GOTO || code == IF {
                let target = (off + 1) as isize + bytes[off + 1] as i8 as isize;
                if target < 0 || target as usize > end || !self.boundary[target as usize] {
                    return Err(Invalid::BadJump { offset: off, target });
                }
                self.visit(target as usize, nd)?;
            }
        }
        let end_depth = self.depth[end];
        if end_depth == UNSET {
            return Err(Invalid::EndUnreachable);
        }
        let consumed = -min_rel;
        Ok(Signature::new(consumed as u32, (consumed + end_depth) as u32))
    }

    #[inline]
    fn visit(&mut self, off: usize, d: i32) -> Result<(), Invalid> {
        let cur = self.depth[off];
        if cur == UNSET {
            self.depth[off] = d;
            self.work.push(off);
            Ok(())
        } else if cur != d {
            Err(Invalid::DepthMismatch {
                offset: off,
                first: cur,
                second: d,
            })
        } else {
            Ok(())
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::vm::opcode::*;

    fn analyze(body: &[u8]) -> StackEffect {
        static_analyze(&Program::from_body(body), &Dictionary::builtin())
    }

    #[test]
    fn square_is_one_one() {
        let e = analyze(&[DUP, MUL]);
        assert!(e.valid);
        assert_eq!(e.signature(), Signature::new(1, 1));
    }

    #[test]
    fn swap_is_two_two() {
        assert_eq!(analyze(&[SWAP]).signature(), Signature::new(2, 2));
    }

    #[test]
    fn empty_body_is_zero_zero() {
        assert_eq!(analyze(&[]).signature(), Signature::new(0, 0));
    }

    #[test]
    fn join_mismatch_is_invalid() {
        // DROP DROP with an IF that jumps past one DROP: the two paths reach
        // END with depths differing by one.
        let e = analyze(&[IF, 2, DROP, DROP]);
        assert!(!e.valid);
        assert!(matches!(e.reason, Some(Invalid::DepthMismatch { .. })));
    }

    #[test]
    fn factorial_loop_is_one_one() {
        let neg6 = (-6i8) as u8;
        let e = analyze(&[CONST, 1, OVER, DEC, NROT, MUL, OVER, IF, neg6, SWAP, DROP]);
        assert!(e.valid, "{:?}", e.reason);
        assert_eq!(e.signature(), Signature::new(1, 1));
        assert_eq!(e.per_offset_depth[&2], 1);
    }

    #[test]
    fn infinite_goto_has_unreachable_end() {
        let e = analyze(&[DUP, DROP, GOTO, (-3i8) as u8]);
        assert_eq!(e.reason, Some(Invalid::EndUnreachable));
    }

    #[test]
    fn dynamic_words_are_rejected() {
        let e = analyze(&[CONST, 1, PICK]);
        assert!(matches!(e.reason, Some(Invalid::Dynamic { .. })));
    }

    #[test]
    fn jump_off_boundary() {
        let e = analyze(&[CONST, 1, IF, (-2i8) as u8]);
        assert!(matches!(e.reason, Some(Invalid::BadJump { .. })));
    }
}
