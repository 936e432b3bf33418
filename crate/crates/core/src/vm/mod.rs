//! The stack machine: instruction set, dictionary, decoder, interpreter,
//! static analysis and the textual word format.

pub mod analysis;
pub mod asm;
pub mod dict;
pub mod exec;
pub mod opcode;
pub mod program;

pub use analysis::{static_analyze, Analyzer, Invalid, StackEffect};
pub use asm::{assemble, disassemble, parse_body, AsmError, AsmOptions};
pub use dict::{builtin_dictionary, Dictionary, Word};
pub use exec::{execute, ExecLimits, ExecOutcome, FaultKind, Machine};
pub use opcode::{Kind, OpInfo, Operand, Signature};
pub use program::{check_jumps, decode, Instruction, Program};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum VmError {
    #[error("empty byte sequence")]
    Empty,
    #[error("unknown opcode {code} at offset {offset}")]
    UnknownOpcode { offset: usize, code: u8 },
    #[error("instruction at offset {offset} is missing its operand byte")]
    MissingOperand { offset: usize },
    #[error("END at offset {offset} is not the last byte")]
    EarlyEnd { offset: usize },
    #[error("program is not terminated by END")]
    MissingEnd,
    #[error("jump at offset {offset} targets {target}, not an instruction boundary")]
    BadJump { offset: usize, target: isize },
    #[error("word `{0}` already exists")]
    DuplicateName(String),
    #[error("dictionary is full")]
    DictionaryFull,
    #[error("word `{name}` has no static signature: {reason}")]
    InvalidSignature { name: String, reason: String },
}
