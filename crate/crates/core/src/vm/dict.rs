use std::collections::HashMap;

use super::analysis::static_analyze;
use super::opcode::{self, Kind, Signature, BUILTINS, FIRST_USER_CODE, MAX_CODE};
use super::program::{check_jumps, decode, Program};
use super::VmError;

/// A named instruction. Built-ins have no body.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Word {
    pub code: u8,
    pub name: String,
    pub kind: Kind,
    /// `None` for dynamic built-ins (PICK, ROLL) and for user words whose
    /// body failed static analysis but were admitted anyway.
    pub signature: Option<Signature>,
    pub body: Option<Program>,
}

impl Word {
    pub fn is_user(&self) -> bool {
        self.body.is_some()
    }
}

/// The ordered word set (the genome). A word's code is its index.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Dictionary {
    words: Vec<Word>,
    names: HashMap<String, u8>,
}

impl Default for Dictionary {
    fn default() -> Self {
        Self::builtin()
    }
}

/// The full built-in word set.
pub fn builtin_dictionary() -> Dictionary {
    Dictionary::builtin()
}

impl Dictionary {
    pub fn builtin() -> Self {
        let words: Vec<Word> = BUILTINS
            .iter()
            .map(|o| Word {
                code: o.code,
                name: o.name.to_string(),
                kind: o.kind,
                signature: o.signature,
                body: None,
            })
            .collect();
        let mut names: HashMap<String, u8> = words.iter().map(|w| (w.name.clone(), w.code)).collect();
        for (alias, code) in opcode::ALIASES {
            names.insert(alias.to_string(), code);
        }
        Dictionary { words, names }
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    #[inline]
    pub fn contains_code(&self, code: u8) -> bool {
        (code as usize) < self.words.len()
    }

    pub fn get(&self, code: u8) -> Option<&Word> {
        self.words.get(code as usize)
    }

    pub fn lookup(&self, name: &str) -> Option<&Word> {
        self.names.get(name).map(|&c| &self.words[c as usize])
    }

    pub fn code_of(&self, name: &str) -> Option<u8> {
        self.names.get(name).copied()
    }

    pub fn name_of(&self, code: u8) -> Option<&str> {
        self.get(code).map(|w| w.name.as_str())
    }

    /// Body bytes of a user word, END included.
    #[inline]
    pub fn body(&self, code: u8) -> Option<&[u8]> {
        self.words
            .get(code as usize)
            .and_then(|w| w.body.as_ref())
            .map(|p| p.bytes())
    }

    #[inline]
    pub fn signature(&self, code: u8) -> Option<Signature> {
        self.words.get(code as usize).and_then(|w| w.signature)
    }

    pub fn words(&self) -> &[Word] {
        &self.words
    }

    pub fn user_words(&self) -> impl Iterator<Item = &Word> {
        self.words.iter().filter(|w| w.is_user())
    }

    /// Code the next added word will receive, if there is room.
    pub fn next_user_code(&self) -> Option<u8> {
        let next = self.words.len();
        (next <= MAX_CODE as usize).then_some(next as u8)
    }

    /// Finds a user word whose body equals `body` (without END).
    pub fn find_user_body(&self, body: &[u8]) -> Option<u8> {
        self.user_words()
            .find(|w| w.body.as_ref().is_some_and(|b| b.body() == body))
            .map(|w| w.code)
    }

    /// Adds a user word after validating its body. The stored signature is
    /// the static analysis result. With `tolerate_invalid` a body that fails
    /// static analysis is still admitted, with no signature.
    pub fn add_word(&mut self, name: &str, body: Program, tolerate_invalid: bool) -> Result<u8, VmError> {
        if self.names.contains_key(name) {
            return Err(VmError::DuplicateName(name.to_string()));
        }
        let code = self.next_user_code().ok_or(VmError::DictionaryFull)?;
        let instrs = decode(body.bytes(), self)?;
        check_jumps(&instrs)?;
        let effect = static_analyze(&body, self);
        let signature = if effect.valid {
            Some(effect.signature())
        } else if tolerate_invalid {
            None
        } else {
            return Err(VmError::InvalidSignature {
                name: name.to_string(),
                reason: effect.reason.map(|r| r.to_string()).unwrap_or_default(),
            });
        };
        self.words.push(Word {
            code,
            name: name.to_string(),
            kind: Kind::UserWord,
            signature,
            body: Some(body),
        });
        self.names.insert(name.to_string(), code);
        Ok(code)
    }

    /// Removes the most recently added user word, provided no other word
    /// refers to it (it is last, so none can).
    pub fn remove_last_user_word(&mut self) -> Option<Word> {
        if self.words.len() <= FIRST_USER_CODE as usize {
            return None;
        }
        let w = self.words.pop()?;
        self.names.remove(&w.name);
        Some(w)
    }

    /// User words rendered as `: NAME body ;` lines, reloadable by
    /// [`Dictionary::assemble`].
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        for w in self.user_words() {
            let body = w.body.as_ref().expect("user word has body");
            let text = super::asm::disassemble(body, self).expect("stored words decode");
            if text.is_empty() {
                s.push_str(&format!(": {} ;\n", w.name));
            } else {
                s.push_str(&format!(": {} {} ;\n", w.name, text));
            }
        }
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::vm::opcode::*;

    #[test]
    fn builtin_lookups() {
        let d = builtin_dictionary();
        assert_eq!(d.lookup("DUP").unwrap().signature, Some(Signature::new(1, 2)));
        assert_eq!(d.lookup("3ROLL").unwrap().signature, Some(Signature::new(4, 4)));
        assert_eq!(d.lookup("END").unwrap().code, 0);
        assert_eq!(d.code_of("GOTO"), Some(1));
        assert_eq!(d.code_of("IF"), Some(2));
        assert_eq!(d.code_of("CONST"), Some(3));
        assert_eq!(d.code_of("NEGATE"), d.code_of("NEG"));
        assert_eq!(d.lookup("PICK").unwrap().signature, None);
    }

    #[test]
    fn add_and_remove_user_word() {
        let mut d = Dictionary::builtin();
        let code = d.add_word("SQ", Program::from_body(&[DUP, MUL]), false).unwrap();
        assert_eq!(code, FIRST_USER_CODE);
        assert_eq!(d.signature(code), Some(Signature::new(1, 1)));
        assert_eq!(d.find_user_body(&[DUP, MUL]), Some(code));
        assert!(matches!(
            d.add_word("SQ", Program::from_body(&[DUP]), false),
            Err(VmError::DuplicateName(_))
        ));
        let w = d.remove_last_user_word().unwrap();
        assert_eq!(w.name, "SQ");
        assert!(d.lookup("SQ").is_none());
        assert!(d.remove_last_user_word().is_none());
    }

    #[test]
    fn dictionary_is_capped() {
        let mut d = Dictionary::builtin();
        let mut added = 0;
        loop {
            match d.add_word(&format!("W{added}"), Program::from_body(&[DUP]), false) {
                Ok(_) => added += 1,
                Err(VmError::DictionaryFull) => break,
                Err(e) => panic!("{e}"),
            }
        }
        assert_eq!(d.len(), 255);
    }

    #[test]
    fn invalid_body_rejected_unless_tolerated() {
        let mut d = Dictionary::builtin();
        // Two paths meet at END with different depths.
        let body = Program::from_body(&[IF, 2, DUP]);
        assert!(matches!(
            d.add_word("BAD", body.clone(), false),
            Err(VmError::InvalidSignature { .. })
        ));
        let code = d.add_word("BAD", body, true).unwrap();
        assert_eq!(d.signature(code), None);
    }
}
