//! Test suites: the `.tst` file format and program evaluation.
//!
//! ```text
//! #T SHIFTR_0 x,y -> x*2^y  comment
//! <in> 9   3 </in><out>  1536 </out>
//! ```

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use crate::vm::{Analyzer, Dictionary, ExecLimits, FaultKind, Machine, Program};

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct TestItem {
    pub inputs: Vec<i32>,
    pub outputs: Vec<i32>,
}

impl TestItem {
    pub fn new(inputs: Vec<i32>, outputs: Vec<i32>) -> Self {
        TestItem { inputs, outputs }
    }

    pub fn signature(&self) -> (usize, usize) {
        (self.inputs.len(), self.outputs.len())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TestSuite {
    pub name: String,
    pub comment: String,
    pub items: Vec<TestItem>,
}

#[derive(Debug, thiserror::Error)]
pub enum TestFileError {
    #[error("file does not start with the #T signature")]
    MissingSignature,
    #[error("#T header has no program name")]
    MissingName,
    #[error("line {line}: expected `<in> … </in><out> … </out>`")]
    UnbalancedTags { line: usize },
    #[error("line {line}: `{token}` is not an integer")]
    BadInteger { line: usize, token: String },
    #[error("line {line}: {token} does not fit a 32-bit signed integer")]
    OutOfRange { line: usize, token: String },
    #[error("line {line}: item has no outputs")]
    NoOutputs { line: usize },
    #[error("line {line}: signature {found:?} differs from the suite's {expected:?}")]
    MixedSignature {
        line: usize,
        expected: (usize, usize),
        found: (usize, usize),
    },
    #[error("suite has no items")]
    Empty,
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{path}: {source}")]
    InFile { path: PathBuf, source: Box<TestFileError> },
}

impl TestSuite {
    /// Checks the suite invariants: at least one item, every item with at
    /// least one output, one shared signature.
    pub fn new(name: &str, comment: &str, items: Vec<TestItem>) -> Result<Self, TestFileError> {
        let first = items.first().ok_or(TestFileError::Empty)?.signature();
        for (i, it) in items.iter().enumerate() {
            if it.outputs.is_empty() {
                return Err(TestFileError::NoOutputs { line: i + 2 });
            }
            if it.signature() != first {
                return Err(TestFileError::MixedSignature {
                    line: i + 2,
                    expected: first,
                    found: it.signature(),
                });
            }
        }
        Ok(TestSuite {
            name: name.to_string(),
            comment: comment.to_string(),
            items,
        })
    }

    /// Builds a suite by applying an oracle to each input vector.
    pub fn from_oracle<I, F>(name: &str, comment: &str, inputs: I, oracle: F) -> Self
    where
        I: IntoIterator<Item = Vec<i32>>,
        F: Fn(&[i32]) -> Vec<i32>,
    {
        let items = inputs
            .into_iter()
            .map(|x| {
                let y = oracle(&x);
                TestItem::new(x, y)
            })
            .collect();
        TestSuite::new(name, comment, items).expect("oracle suite is well formed")
    }

    /// (inputs, outputs) per item.
    pub fn signature(&self) -> (usize, usize) {
        self.items[0].signature()
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    /// Renders in `.tst` format; [`parse_test_file`] reads it back.
    pub fn to_tst(&self) -> String {
        let mut s = String::new();
        if self.comment.is_empty() {
            let _ = writeln!(s, "#T {}", self.name);
        } else {
            let _ = writeln!(s, "#T {} {}", self.name, self.comment);
        }
        for it in &self.items {
            s.push_str("<in>");
            for v in &it.inputs {
                let _ = write!(s, " {v}");
            }
            s.push_str(" </in><out>");
            for v in &it.outputs {
                let _ = write!(s, " {v}");
            }
            s.push_str(" </out>\n");
        }
        s
    }

    /// Keeps only the items selected by `keep`.
    pub fn subset(&self, name: &str, keep: &[bool]) -> Result<TestSuite, TestFileError> {
        let items = self
            .items
            .iter()
            .zip(keep)
            .filter(|(_, &k)| k)
            .map(|(it, _)| it.clone())
            .collect();
        TestSuite::new(name, &self.comment, items)
    }
}

fn parse_ints(s: &str, line: usize) -> Result<Vec<i32>, TestFileError> {
    s.split_whitespace()
        .map(|t| {
            let v: i64 = t.parse().map_err(|_| TestFileError::BadInteger {
                line,
                token: t.to_string(),
            })?;
            i32::try_from(v).map_err(|_| TestFileError::OutOfRange {
                line,
                token: t.to_string(),
            })
        })
        .collect()
}

/// Splits `text` as `<open> inner <close> rest`, requiring only whitespace
/// before the opening tag.
fn take_tag<'a>(text: &'a str, open: &str, close: &str) -> Option<(&'a str, &'a str)> {
    let text = text.trim_start();
    let rest = text.strip_prefix(open)?;
    let end = rest.find(close)?;
    Some((&rest[..end], &rest[end + close.len()..]))
}

fn parse_item_line(line: &str, lineno: usize) -> Result<TestItem, TestFileError> {
    let bad = || TestFileError::UnbalancedTags { line: lineno };
    let (ins, rest) = take_tag(line, "<in>", "</in>").ok_or_else(bad)?;
    let (outs, rest) = take_tag(rest, "<out>", "</out>").ok_or_else(bad)?;
    if !rest.trim().is_empty() {
        return Err(bad());
    }
    let inputs = parse_ints(ins, lineno)?;
    let outputs = parse_ints(outs, lineno)?;
    if outputs.is_empty() {
        return Err(TestFileError::NoOutputs { line: lineno });
    }
    Ok(TestItem { inputs, outputs })
}

/// Parses a `.tst` suite.
pub fn parse_test_file(text: &str) -> Result<TestSuite, TestFileError> {
    let mut lines = text.lines().enumerate();
    let header = loop {
        match lines.next() {
            Some((_, l)) if l.trim().is_empty() => continue,
            Some((_, l)) => break l.trim_start(),
            None => return Err(TestFileError::MissingSignature),
        }
    };
    let header = header.strip_prefix("#T").ok_or(TestFileError::MissingSignature)?;
    let header = header.trim();
    let (name, comment) = match header.split_once(char::is_whitespace) {
        Some((n, c)) => (n, c.trim()),
        None => (header, ""),
    };
    if name.is_empty() {
        return Err(TestFileError::MissingName);
    }
    let mut items: Vec<TestItem> = Vec::new();
    for (i, line) in lines {
        if line.trim().is_empty() {
            continue;
        }
        let item = parse_item_line(line, i + 1)?;
        if let Some(first) = items.first() {
            if first.signature() != item.signature() {
                return Err(TestFileError::MixedSignature {
                    line: i + 1,
                    expected: first.signature(),
                    found: item.signature(),
                });
            }
        }
        items.push(item);
    }
    if items.is_empty() {
        return Err(TestFileError::Empty);
    }
    Ok(TestSuite {
        name: name.to_string(),
        comment: comment.to_string(),
        items,
    })
}

pub fn load_suite(path: &Path) -> Result<TestSuite, TestFileError> {
    let text = std::fs::read_to_string(path).map_err(|source| TestFileError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    parse_test_file(&text).map_err(|e| TestFileError::InFile {
        path: path.to_path_buf(),
        source: Box::new(e),
    })
}

/// Loads every `*.tst` file in `dir`, sorted by file name.
pub fn load_suite_dir(dir: &Path) -> Result<Vec<TestSuite>, TestFileError> {
    let io = |source| TestFileError::Io {
        path: dir.to_path_buf(),
        source,
    };
    let mut paths: Vec<PathBuf> = std::fs::read_dir(dir)
        .map_err(io)?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "tst"))
        .collect();
    paths.sort();
    paths.iter().map(|p| load_suite(p)).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum EvalMode {
    /// Final stack must equal the outputs exactly, and the program's static
    /// signature must fit the suite.
    #[default]
    Strict,
    /// The top `n` values must equal the outputs.
    Lenient,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EvalReport {
    pub pass_mask: Vec<bool>,
    pub pass_count: usize,
    /// Fault per item, when the item was executed and faulted.
    pub per_item_fault: Vec<Option<FaultKind>>,
}

impl EvalReport {
    pub fn all_passed(&self) -> bool {
        self.pass_count == self.pass_mask.len()
    }
}

/// True if a program with this static analysis result may pass `suite`
/// under strict evaluation.
pub fn signature_fits(analyzer: &mut Analyzer, program: &[u8], dict: &Dictionary, suite: (usize, usize)) -> bool {
    analyzer.run(program, dict).is_ok_and(|s| s.fits(suite.0, suite.1))
}

/// Runs `program` on every item of `suite`.
pub fn evaluate(
    program: &Program,
    dict: &Dictionary,
    suite: &TestSuite,
    limits: ExecLimits,
    mode: EvalMode,
) -> EvalReport {
    let n = suite.len();
    let mut report = EvalReport {
        pass_mask: vec![false; n],
        pass_count: 0,
        per_item_fault: vec![None; n],
    };
    let layout_ok = crate::vm::decode(program.bytes(), dict).is_ok_and(|ins| crate::vm::check_jumps(&ins).is_ok());
    if !layout_ok {
        return report;
    }
    if mode == EvalMode::Strict && !signature_fits(&mut Analyzer::new(), program.bytes(), dict, suite.signature()) {
        return report;
    }
    let mut m = Machine::new(dict, limits);
    for (i, it) in suite.items.iter().enumerate() {
        match m.run(program.bytes(), &it.inputs) {
            Ok(()) => {
                if output_matches(m.stack(), &it.outputs, mode) {
                    report.pass_mask[i] = true;
                    report.pass_count += 1;
                }
            }
            Err(f) => report.per_item_fault[i] = Some(f),
        }
    }
    report
}

#[inline]
fn output_matches(stack: &[i32], expected: &[i32], mode: EvalMode) -> bool {
    match mode {
        EvalMode::Strict => stack == expected,
        EvalMode::Lenient => stack.ends_with(expected),
    }
}

/// Allocation-free evaluator for search loops. Callers are responsible for
/// layout validity and, in strict mode, the signature gate.
#[derive(Debug, Clone)]
pub struct Scorer<'a> {
    machine: Machine<'a>,
    inputs: Vec<i32>,
    outputs: Vec<i32>,
    m: usize,
    n: usize,
    items: usize,
    mode: EvalMode,
}

impl<'a> Scorer<'a> {
    pub fn new(dict: &'a Dictionary, suite: &TestSuite, limits: ExecLimits, mode: EvalMode) -> Self {
        let (m, n) = suite.signature();
        Scorer {
            machine: Machine::new(dict, limits).with_cycle_detection(),
            inputs: suite.items.iter().flat_map(|i| i.inputs.iter().copied()).collect(),
            outputs: suite.items.iter().flat_map(|i| i.outputs.iter().copied()).collect(),
            m,
            n,
            items: suite.len(),
            mode,
        }
    }

    pub fn items(&self) -> usize {
        self.items
    }

    pub fn dict(&self) -> &'a Dictionary {
        self.machine.dict()
    }

    #[inline]
    pub fn passes_item(&mut self, prog: &[u8], i: usize) -> bool {
        let inp = &self.inputs[i * self.m..(i + 1) * self.m];
        match self.machine.run(prog, inp) {
            Ok(()) => output_matches(
                self.machine.stack(),
                &self.outputs[i * self.n..(i + 1) * self.n],
                self.mode,
            ),
            Err(_) => false,
        }
    }

    /// Counts passed items. Stops as soon as `need` is out of reach, in
    /// which case the returned count is below `need`.
    #[inline]
    pub fn count_passes(&mut self, prog: &[u8], need: usize) -> usize {
        let mut passed = 0;
        for i in 0..self.items {
            if self.passes_item(prog, i) {
                passed += 1;
            } else if passed + (self.items - i - 1) < need {
                return passed;
            }
        }
        passed
    }

    pub fn pass_mask(&mut self, prog: &[u8]) -> Vec<bool> {
        (0..self.items).map(|i| self.passes_item(prog, i)).collect()
    }
}
