//! Text form of programs: `: NAME tokens ;` definitions.

use super::dict::Dictionary;
use super::opcode::{self, Operand, CONST, END};
use super::program::{decode, Program};
use super::VmError;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum AsmError {
    #[error("line {line}: unknown word `{token}`")]
    UnknownWord { line: usize, token: String },
    #[error("line {line}: `{word}` needs a numeric operand")]
    MissingOperand { line: usize, word: String },
    #[error("line {line}: operand `{token}` is not in -128..127")]
    OperandRange { line: usize, token: String },
    #[error("line {line}: {word} operand must be nonzero")]
    ZeroJump { line: usize, word: String },
    #[error("line {line}: expected `:` to start a definition, found `{token}`")]
    ExpectedColon { line: usize, token: String },
    #[error("line {line}: definition has no name")]
    MissingName { line: usize },
    #[error("line {line}: `{name}` is not a usable word name")]
    BadName { line: usize, name: String },
    #[error("line {line}: definition of `{name}` is not closed by `;`")]
    Unterminated { line: usize, name: String },
    #[error("line {line}: {source}")]
    Word { line: usize, source: VmError },
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct AsmOptions {
    /// Admit words whose body has no static signature.
    pub tolerate_invalid: bool,
}

#[derive(Debug, Clone)]
struct Token<'a> {
    text: &'a str,
    line: usize,
}

fn tokenize(text: &str) -> Vec<Token<'_>> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim_start().starts_with('#') {
            continue;
        }
        out.extend(line.split_whitespace().map(|t| Token { text: t, line: i + 1 }));
    }
    out
}

fn compile_tokens(tokens: &[Token<'_>], dict: &Dictionary) -> Result<Program, AsmError> {
    let mut bytes = Vec::new();
    let mut it = tokens.iter();
    while let Some(tok) = it.next() {
        let code = dict.code_of(tok.text).ok_or_else(|| AsmError::UnknownWord {
            line: tok.line,
            token: tok.text.to_string(),
        })?;
        if code == END {
            return Err(AsmError::UnknownWord {
                line: tok.line,
                token: tok.text.to_string(),
            });
        }
        bytes.push(code);
        let takes_operand = opcode::builtin(code).is_some_and(|o| o.operand == Operand::SignedByte);
        if takes_operand {
            let arg = it.next().ok_or_else(|| AsmError::MissingOperand {
                line: tok.line,
                word: tok.text.to_string(),
            })?;
            let v: i64 = arg.text.parse().map_err(|_| AsmError::MissingOperand {
                line: arg.line,
                word: tok.text.to_string(),
            })?;
            if !(-128..=127).contains(&v) {
                return Err(AsmError::OperandRange {
                    line: arg.line,
                    token: arg.text.to_string(),
                });
            }
            if v == 0 && code != CONST {
                return Err(AsmError::ZeroJump {
                    line: arg.line,
                    word: tok.text.to_string(),
                });
            }
            bytes.push(v as i8 as u8);
        }
    }
    bytes.push(END);
    Ok(Program::from_bytes(bytes))
}

/// Compiles a bare body such as `DUP * SWAP` against `dict`.
pub fn parse_body(text: &str, dict: &Dictionary) -> Result<Program, AsmError> {
    compile_tokens(&tokenize(text), dict)
}

fn valid_name(name: &str) -> bool {
    name != ":" && name != ";" && name.parse::<i64>().is_err()
}

impl Dictionary {
    /// Compiles every `: NAME … ;` definition in `text` and adds it. On any
    /// error the dictionary is left unchanged. Returns the new codes.
    pub fn assemble(&mut self, text: &str) -> Result<Vec<u8>, AsmError> {
        self.assemble_with(text, AsmOptions::default())
    }

    pub fn assemble_with(&mut self, text: &str, opts: AsmOptions) -> Result<Vec<u8>, AsmError> {
        let mut work = self.clone();
        let tokens = tokenize(text);
        let mut codes = Vec::new();
        let mut i = 0;
        while i < tokens.len() {
            let t = &tokens[i];
            if t.text != ":" {
                return Err(AsmError::ExpectedColon {
                    line: t.line,
                    token: t.text.to_string(),
                });
            }
            let name_tok = tokens.get(i + 1).ok_or(AsmError::MissingName { line: t.line })?;
            if !valid_name(name_tok.text) {
                return Err(AsmError::BadName {
                    line: name_tok.line,
                    name: name_tok.text.to_string(),
                });
            }
            let start = i + 2;
            let close = tokens[start..]
                .iter()
                .position(|t| t.text == ";" || t.text == ":")
                .map(|p| p + start);
            let close = match close {
                Some(c) if tokens[c].text == ";" => c,
                _ => {
                    return Err(AsmError::Unterminated {
                        line: t.line,
                        name: name_tok.text.to_string(),
                    })
                }
            };
            let body = compile_tokens(&tokens[start..close], &work)?;
            let code = work
                .add_word(name_tok.text, body, opts.tolerate_invalid)
                .map_err(|source| AsmError::Word {
                    line: name_tok.line,
                    source,
                })?;
            codes.push(code);
            i = close + 1;
        }
        *self = work;
        Ok(codes)
    }
}

/// Extends a copy of `dict` with the definitions in `text`.
pub fn assemble(text: &str, dict: &Dictionary) -> Result<Dictionary, AsmError> {
    let mut d = dict.clone();
    d.assemble(text)?;
    Ok(d)
}

/// Renders a program body as whitespace-separated tokens (END omitted).
pub fn disassemble(program: &Program, dict: &Dictionary) -> Result<String, VmError> {
    let instrs = decode(program.bytes(), dict)?;
    let mut parts = Vec::with_capacity(instrs.len());
    for ins in instrs {
        if ins.code == END {
            break;
        }
        let name = dict.name_of(ins.code).ok_or(VmError::UnknownOpcode {
            offset: ins.offset,
            code: ins.code,
        })?;
        match ins.operand {
            Some(v) => parts.push(format!("{name} {v}")),
            None => parts.push(name.to_string()),
        }
    }
    Ok(parts.join(" "))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::vm::opcode::Signature;

    #[test]
    fn sumsq2_signature() {
        let d = assemble(": SUMSQ2 DUP * SWAP DUP * + ;", &Dictionary::builtin()).unwrap();
        assert_eq!(d.lookup("SUMSQ2").unwrap().signature, Some(Signature::new(2, 1)));
    }

    #[test]
    fn c10_signature() {
        let d = assemble(": C10 CONST 10 ;", &Dictionary::builtin()).unwrap();
        assert_eq!(d.lookup("C10").unwrap().signature, Some(Signature::new(0, 1)));
    }

    #[test]
    fn unterminated_definition() {
        let e = assemble(": BAD SWAP SWAP", &Dictionary::builtin()).unwrap_err();
        assert!(matches!(e, AsmError::Unterminated { .. }));
    }

    #[test]
    fn errors_are_reported_with_lines() {
        let d = Dictionary::builtin();
        let e = assemble("# header\n: A DUP\n  FROB ;", &d).unwrap_err();
        assert_eq!(
            e,
            AsmError::UnknownWord {
                line: 3,
                token: "FROB".into()
            }
        );
        assert!(matches!(
            assemble(": A CONST 200 ;", &d),
            Err(AsmError::OperandRange { .. })
        ));
        assert!(matches!(assemble(": A IF 0 ;", &d), Err(AsmError::ZeroJump { .. })));
        assert!(matches!(
            assemble(": A CONST ;", &d),
            Err(AsmError::MissingOperand { .. })
        ));
        assert!(matches!(
            assemble(": DUP DUP ;", &d),
            Err(AsmError::Word {
                source: VmError::DuplicateName(_),
                ..
            })
        ));
        assert!(matches!(
            assemble(": A IF 2 DUP ;", &d),
            Err(AsmError::Word {
                source: VmError::InvalidSignature { .. },
                ..
            })
        ));
        assert!(matches!(assemble(": 12 DUP ;", &d), Err(AsmError::BadName { .. })));
    }

    #[test]
    fn failed_assembly_leaves_dictionary_untouched() {
        let mut d = Dictionary::builtin();
        let before = d.clone();
        assert!(d.assemble(": A DUP ; : B NOPE ;").is_err());
        assert_eq!(d, before);
    }

    #[test]
    fn tolerated_invalid_word() {
        let mut d = Dictionary::builtin();
        d.assemble_with(": A IF 2 DUP ;", AsmOptions { tolerate_invalid: true })
            .unwrap();
        assert_eq!(d.lookup("A").unwrap().signature, None);
    }

    #[test]
    fn words_can_use_earlier_words() {
        let mut d = Dictionary::builtin();
        d.assemble(": SQ DUP * ;\n: QUAD SQ SQ ;").unwrap();
        assert_eq!(d.lookup("QUAD").unwrap().signature, Some(Signature::new(1, 1)));
        assert_eq!(d.to_text(), ": SQ DUP * ;\n: QUAD SQ SQ ;\n");
    }

    #[test]
    fn factorial_disassembles_to_source_text() {
        let src = "CONST 1 OVER -- -ROT * OVER IF -6 SWAP DROP";
        let d = Dictionary::builtin();
        let p = parse_body(src, &d).unwrap();
        assert_eq!(disassemble(&p, &d).unwrap(), src);
        assert_eq!(disassemble(&Program::empty(), &d).unwrap(), "");
    }
}
