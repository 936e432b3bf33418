//! Built-in instruction set.
//!
//! Codes are fixed: END=0, GOTO=1, IF=2, CONST=3, and the rest follow in
//! table order. User words are numbered from [`FIRST_USER_CODE`] upward.

use std::fmt;

pub const END: u8 = 0;
pub const GOTO: u8 = 1;
pub const IF: u8 = 2;
pub const CONST: u8 = 3;
pub const DUP: u8 = 4;
pub const DROP: u8 = 5;
pub const SWAP: u8 = 6;
pub const OVER: u8 = 7;
pub const ROT: u8 = 8;
pub const NROT: u8 = 9;
pub const PICK: u8 = 10;
pub const ROLL: u8 = 11;
pub const PICK2: u8 = 12;
pub const PICK3: u8 = 13;
pub const PICK4: u8 = 14;
pub const ROLL3: u8 = 15;
pub const ROLL4: u8 = 16;
pub const NEG: u8 = 17;
pub const ADD: u8 = 18;
pub const SUB: u8 = 19;
pub const MUL: u8 = 20;
pub const DIV: u8 = 21;
pub const MOD: u8 = 22;
pub const DIVMOD: u8 = 23;
pub const INC: u8 = 24;
pub const DEC: u8 = 25;
pub const AND: u8 = 26;
pub const OR: u8 = 27;
pub const XOR: u8 = 28;
pub const NOT: u8 = 29;
pub const GT: u8 = 30;
pub const LT: u8 = 31;
pub const EQ: u8 = 32;
pub const ZEQ: u8 = 33;
pub const ZLT: u8 = 34;
pub const ZGT: u8 = 35;
pub const ZERO: u8 = 36;

/// Number of built-in opcodes; the first user word gets this code.
pub const BUILTIN_COUNT: usize = 37;
pub const FIRST_USER_CODE: u8 = BUILTIN_COUNT as u8;
/// Highest code a word may take. Together with END this caps the
/// dictionary at 255 words.
pub const MAX_CODE: u8 = 254;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Kind {
    End,
    Goto,
    If,
    Const,
    StackManip,
    Arith,
    Bit,
    Compare,
    UserWord,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Operand {
    None,
    SignedByte,
}

/// Static stack signature: values consumed and values produced.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub struct Signature {
    pub consumed: u32,
    pub produced: u32,
}

impl Signature {
    pub const fn new(consumed: u32, produced: u32) -> Self {
        Signature { consumed, produced }
    }

    /// Net change in stack depth.
    pub fn delta(&self) -> i32 {
        self.produced as i32 - self.consumed as i32
    }

    /// True if a word with this signature, started on `inputs` values,
    /// never reaches below the bottom and leaves exactly `outputs` values.
    pub fn fits(&self, inputs: usize, outputs: usize) -> bool {
        self.consumed as usize <= inputs && inputs as i64 + self.delta() as i64 == outputs as i64
    }
}

impl fmt::Display for Signature {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({},{})", self.consumed, self.produced)
    }
}

/// Metadata for one built-in opcode.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct OpInfo {
    pub code: u8,
    pub name: &'static str,
    pub kind: Kind,
    pub operand: Operand,
    /// `None` for PICK and ROLL, whose depth depends on a runtime value.
    pub signature: Option<Signature>,
}

const fn op(code: u8, name: &'static str, kind: Kind, consumed: u32, produced: u32) -> OpInfo {
    OpInfo {
        code,
        name,
        kind,
        operand: Operand::None,
        signature: Some(Signature::new(consumed, produced)),
    }
}

const fn op_arg(code: u8, name: &'static str, kind: Kind, consumed: u32, produced: u32) -> OpInfo {
    OpInfo {
        code,
        name,
        kind,
        operand: Operand::SignedByte,
        signature: Some(Signature::new(consumed, produced)),
    }
}

const fn op_dyn(code: u8, name: &'static str) -> OpInfo {
    OpInfo {
        code,
        name,
        kind: Kind::StackManip,
        operand: Operand::None,
        signature: None,
    }
}

pub static BUILTINS: [OpInfo; BUILTIN_COUNT] = [
    op(END, "END", Kind::End, 0, 0),
    op_arg(GOTO, "GOTO", Kind::Goto, 0, 0),
    op_arg(IF, "IF", Kind::If, 1, 0),
    op_arg(CONST, "CONST", Kind::Const, 0, 1),
    op(DUP, "DUP", Kind::StackManip, 1, 2),
    op(DROP, "DROP", Kind::StackManip, 1, 0),
    op(SWAP, "SWAP", Kind::StackManip, 2, 2),
    op(OVER, "OVER", Kind::StackManip, 2, 3),
    op(ROT, "ROT", Kind::StackManip, 3, 3),
    op(NROT, "-ROT", Kind::StackManip, 3, 3),
    op_dyn(PICK, "PICK"),
    op_dyn(ROLL, "ROLL"),
    op(PICK2, "2PICK", Kind::StackManip, 3, 4),
    op(PICK3, "3PICK", Kind::StackManip, 4, 5),
    op(PICK4, "4PICK", Kind::StackManip, 5, 6),
    op(ROLL3, "3ROLL", Kind::StackManip, 4, 4),
    op(ROLL4, "4ROLL", Kind::StackManip, 5, 5),
    op(NEG, "NEG", Kind::Arith, 1, 1),
    op(ADD, "+", Kind::Arith, 2, 1),
    op(SUB, "-", Kind::Arith, 2, 1),
    op(MUL, "*", Kind::Arith, 2, 1),
    op(DIV, "/", Kind::Arith, 2, 1),
    op(MOD, "%", Kind::Arith, 2, 1),
    op(DIVMOD, "/%", Kind::Arith, 2, 2),
    op(INC, "++", Kind::Arith, 1, 1),
    op(DEC, "--", Kind::Arith, 1, 1),
    op(AND, "AND", Kind::Bit, 2, 1),
    op(OR, "OR", Kind::Bit, 2, 1),
    op(XOR, "XOR", Kind::Bit, 2, 1),
    op(NOT, "NOT", Kind::Bit, 1, 1),
    op(GT, ">", Kind::Compare, 2, 1),
    op(LT, "<", Kind::Compare, 2, 1),
    op(EQ, "=", Kind::Compare, 2, 1),
    op(ZEQ, "0=", Kind::Compare, 1, 1),
    op(ZLT, "0<", Kind::Compare, 1, 1),
    op(ZGT, "0>", Kind::Compare, 1, 1),
    op(ZERO, "ZERO", Kind::Const, 0, 1),
];

/// Alternative spellings accepted by the assembler.
pub static ALIASES: [(&str, u8); 1] = [("NEGATE", NEG)];

pub fn builtin(code: u8) -> Option<&'static OpInfo> {
    BUILTINS.get(code as usize)
}

/// True for the two-byte instructions GOTO, IF and CONST.
#[inline]
pub fn has_operand(code: u8) -> bool {
    code == GOTO || code == IF || code == CONST
}

#[inline]
pub fn is_jump(code: u8) -> bool {
    code == GOTO || code == IF
}

/// Byte length of the instruction starting with `code`.
#[inline]
pub fn width(code: u8) -> usize {
    if has_operand(code) {
        2
    } else {
        1
    }
}

/// The 33 words searched by default: everything except END, the dynamic
/// PICK/ROLL, and the optional ZERO.
pub fn default_search_words() -> Vec<u8> {
    BUILTINS
        .iter()
        .filter(|o| !matches!(o.code, END | PICK | ROLL | ZERO))
        .map(|o| o.code)
        .collect()
}
