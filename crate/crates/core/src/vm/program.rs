use std::fmt;

use super::dict::Dictionary;
use super::opcode::{self, END};
use super::VmError;

/// A zero-terminated bytecode sequence.
///
/// The wrapper does not validate on construction; use [`decode`] or
/// [`crate::vm::static_analyze`] before trusting the layout.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct Program(Vec<u8>);

impl Program {
    pub fn from_bytes(bytes: Vec<u8>) -> Self {
        Program(bytes)
    }

    /// Builds a program from body bytes, appending END.
    pub fn from_body(body: &[u8]) -> Self {
        let mut v = Vec::with_capacity(body.len() + 1);
        v.extend_from_slice(body);
        v.push(END);
        Program(v)
    }

    /// The program consisting of END only.
    pub fn empty() -> Self {
        Program(vec![END])
    }

    pub fn bytes(&self) -> &[u8] {
        &self.0
    }

    pub fn into_bytes(self) -> Vec<u8> {
        self.0
    }

    /// Bytes without the final END.
    pub fn body(&self) -> &[u8] {
        match self.0.split_last() {
            Some((&END, rest)) => rest,
            _ => &self.0,
        }
    }

    pub fn byte_len(&self) -> usize {
        self.0.len()
    }

    /// Number of instructions, not counting the final END.
    pub fn instruction_count(&self) -> usize {
        instruction_count(self.body())
    }
}

impl fmt::Debug for Program {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Program({:?})", self.0)
    }
}

/// Counts instructions in a body by linear scan (END not expected).
pub fn instruction_count(body: &[u8]) -> usize {
    let mut n = 0;
    let mut i = 0;
    while i < body.len() {
        i += opcode::width(body[i]);
        n += 1;
    }
    n
}

/// One decoded instruction.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Instruction {
    pub offset: usize,
    pub code: u8,
    pub operand: Option<i8>,
}

impl Instruction {
    /// Absolute jump target for GOTO/IF: operand-byte address plus operand.
    pub fn jump_target(&self) -> Option<isize> {
        if opcode::is_jump(self.code) {
            self.operand.map(|o| (self.offset + 1) as isize + o as isize)
        } else {
            None
        }
    }

    pub fn width(&self) -> usize {
        opcode::width(self.code)
    }
}

/// Linear decode from offset 0.
///
/// Checks opcode validity, operand presence and that the only END is the
/// final byte. Jump targets are checked separately by [`check_jumps`].
pub fn decode(bytes: &[u8], dict: &Dictionary) -> Result<Vec<Instruction>, VmError> {
    if bytes.is_empty() {
        return Err(VmError::Empty);
    }
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let code = bytes[i];
        if code == END {
            if i + 1 != bytes.len() {
                return Err(VmError::EarlyEnd { offset: i });
            }
            out.push(Instruction {
                offset: i,
                code,
                operand: None,
            });
            return Ok(out);
        }
        if !dict.contains_code(code) {
            return Err(VmError::UnknownOpcode { offset: i, code });
        }
        if opcode::has_operand(code) {
            let Some(&arg) = bytes.get(i + 1) else {
                return Err(VmError::MissingOperand { offset: i });
            };
            out.push(Instruction {
                offset: i,
                code,
                operand: Some(arg as i8),
            });
            i += 2;
        } else {
            out.push(Instruction {
                offset: i,
                code,
                operand: None,
            });
            i += 1;
        }
    }
    Err(VmError::MissingEnd)
}

/// Every GOTO/IF must land on an instruction boundary in `[0, end]`, where
/// `end` is the offset of the final END.
pub fn check_jumps(instrs: &[Instruction]) -> Result<(), VmError> {
    let end = instrs.last().map(|i| i.offset).unwrap_or(0);
    for ins in instrs {
        if let Some(t) = ins.jump_target() {
            let ok = t >= 0 && t as usize <= end && instrs.binary_search_by_key(&(t as usize), |i| i.offset).is_ok();
            if !ok {
                return Err(VmError::BadJump {
                    offset: ins.offset,
                    target: t,
                });
            }
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::vm::opcode::*;

    #[test]
    fn decode_straight_line() {
        let d = Dictionary::builtin();
        let ins = decode(&[DUP, MUL, END], &d).unwrap();
        let got: Vec<_> = ins.iter().map(|i| (i.offset, i.code)).collect();
        assert_eq!(got, [(0, DUP), (1, MUL), (2, END)]);
    }

    #[test]
    fn decode_const_operand() {
        let d = Dictionary::builtin();
        let ins = decode(&[CONST, 10, MOD, END], &d).unwrap();
        assert_eq!(ins[0].operand, Some(10));
        assert_eq!((ins[1].offset, ins[1].code), (2, MOD));
        assert_eq!((ins[2].offset, ins[2].code), (3, END));
    }

    #[test]
    fn decode_errors() {
        let d = Dictionary::builtin();
        assert_eq!(decode(&[GOTO], &d), Err(VmError::MissingOperand { offset: 0 }));
        assert_eq!(decode(&[DUP, END, DUP, END], &d), Err(VmError::EarlyEnd { offset: 1 }));
        assert_eq!(decode(&[DUP], &d), Err(VmError::MissingEnd));
        assert_eq!(
            decode(&[200, END], &d),
            Err(VmError::UnknownOpcode { offset: 0, code: 200 })
        );
        assert_eq!(decode(&[], &d), Err(VmError::Empty));
    }

    #[test]
    fn operand_zero_byte_is_not_end() {
        let d = Dictionary::builtin();
        let ins = decode(&[CONST, 0, END], &d).unwrap();
        assert_eq!(ins.len(), 2);
    }

    #[test]
    fn jump_into_operand_rejected() {
        let d = Dictionary::builtin();
        // GOTO with offset 0 points at its own operand byte.
        let ins = decode(&[GOTO, 0, END], &d).unwrap();
        assert!(matches!(check_jumps(&ins), Err(VmError::BadJump { .. })));
        let ins = decode(&[CONST, 5, GOTO, (-2i8) as u8, END], &d).unwrap();
        assert!(matches!(check_jumps(&ins), Err(VmError::BadJump { .. })));
        let ins = decode(&[IF, 1, END], &d).unwrap();
        check_jumps(&ins).unwrap();
        let ins = decode(&[IF, 2, END], &d).unwrap();
        assert!(check_jumps(&ins).is_err());
    }
}
