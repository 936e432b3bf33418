//! Best-partial-program list, pass histogram, and the search report file.

use std::cmp::Ordering;
use std::collections::BTreeSet;
use std::fmt::Write as _;

use crate::vm::{disassemble, parse_body, AsmError, Dictionary, Program};

/// Default number of partial programs kept.
pub const DEFAULT_CAPACITY: usize = 400;

/// One retained program with the number of items it passes.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PartialEntry {
    pub pass_count: usize,
    pub instructions: usize,
    pub program: Program,
}

impl PartialEntry {
    pub fn new(pass_count: usize, instructions: usize, program: Program) -> Self {
        PartialEntry {
            pass_count,
            instructions,
            program,
        }
    }
}

impl Ord for PartialEntry {
    /// Best first: more passes, then fewer instructions, then smaller bytes.
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .pass_count
            .cmp(&self.pass_count)
            .then(self.instructions.cmp(&other.instructions))
            .then_with(|| self.program.cmp(&other.program))
    }
}

impl PartialOrd for PartialEntry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Keeps the `capacity` best programs that pass at least one item.
///
/// The order is total, so merging lists in any order gives the same result.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PartialProgramList {
    capacity: usize,
    entries: BTreeSet<PartialEntry>,
}

impl Default for PartialProgramList {
    fn default() -> Self {
        Self::new(DEFAULT_CAPACITY)
    }
}

impl PartialProgramList {
    pub fn new(capacity: usize) -> Self {
        PartialProgramList {
            capacity: capacity.max(1),
            entries: BTreeSet::new(),
        }
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn is_full(&self) -> bool {
        self.entries.len() >= self.capacity
    }

    pub fn best_pass(&self) -> usize {
        self.entries.first().map_or(0, |e| e.pass_count)
    }

    /// Smallest pass count that can still enter the list.
    #[inline]
    pub fn admission_threshold(&self) -> usize {
        if self.is_full() {
            self.entries.last().map_or(1, |e| e.pass_count)
        } else {
            1
        }
    }

    /// Inserts unless the list is full of better entries. Returns true if
    /// the entry is now present.
    pub fn insert(&mut self, pass_count: usize, program: &[u8], instructions: usize) -> bool {
        if pass_count == 0 || pass_count < self.admission_threshold() {
            return false;
        }
        self.insert_entry(PartialEntry::new(
            pass_count,
            instructions,
            Program::from_bytes(program.to_vec()),
        ))
    }

    pub fn insert_entry(&mut self, e: PartialEntry) -> bool {
        if e.pass_count == 0 {
            return false;
        }
        if self.is_full() {
            let worst = self.entries.last().expect("full list is non-empty");
            if e >= *worst {
                return false;
            }
        }
        let key = e.clone();
        if !self.entries.insert(e) {
            return true;
        }
        if self.entries.len() > self.capacity {
            self.entries.pop_last();
        }
        self.entries.contains(&key)
    }

    pub fn merge(&mut self, other: &PartialProgramList) {
        for e in &other.entries {
            self.insert_entry(e.clone());
        }
    }

    /// Entries, best first.
    pub fn iter(&self) -> impl Iterator<Item = &PartialEntry> {
        self.entries.iter()
    }

    pub fn programs(&self) -> impl Iterator<Item = &Program> {
        self.entries.iter().map(|e| &e.program)
    }
}

/// `counts[k]` = number of evaluated programs passing exactly `k` items.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct PassHistogram {
    pub counts: Vec<u64>,
}

impl PassHistogram {
    pub fn new(items: usize) -> Self {
        PassHistogram {
            counts: vec![0; items + 1],
        }
    }

    #[inline]
    pub fn add(&mut self, passes: usize) {
        if passes >= self.counts.len() {
            self.counts.resize(passes + 1, 0);
        }
        self.counts[passes] += 1;
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    pub fn merge(&mut self, other: &PassHistogram) {
        if other.counts.len() > self.counts.len() {
            self.counts.resize(other.counts.len(), 0);
        }
        for (a, b) in self.counts.iter_mut().zip(&other.counts) {
            *a += b;
        }
    }
}

/// One line per pass count, counts right-aligned.
pub fn histogram_report(h: &PassHistogram) -> String {
    if h.counts.is_empty() {
        return String::new();
    }
    let kw = (h.counts.len() - 1).to_string().len();
    let cw = h.counts.iter().map(|c| c.to_string().len()).max().unwrap_or(1);
    let mut s = String::new();
    for (k, c) in h.counts.iter().enumerate() {
        let _ = writeln!(s, "{k:>kw$}: {c:>cw$}");
    }
    s
}

const HIST_HEADER: &str = "# histogram";
const PARTIALS_HEADER: &str = "# partial programs";

/// Renders histogram and partial programs (`<pass> : <body> ;`).
pub fn write_report(h: &PassHistogram, partials: &PartialProgramList, dict: &Dictionary) -> String {
    let mut s = String::new();
    s.push_str(HIST_HEADER);
    s.push('\n');
    s.push_str(&histogram_report(h));
    s.push_str(PARTIALS_HEADER);
    s.push('\n');
    for e in partials.iter() {
        let body = disassemble(&e.program, dict).expect("partials decode");
        if body.is_empty() {
            let _ = writeln!(s, "{} : ;", e.pass_count);
        } else {
            let _ = writeln!(s, "{} : {} ;", e.pass_count, body);
        }
    }
    s
}

#[derive(Debug, thiserror::Error)]
pub enum ReportError {
    #[error("line {line}: {msg}")]
    Syntax { line: usize, msg: String },
    #[error("line {line}: {source}")]
    Program { line: usize, source: AsmError },
}

/// Reads back a file produced by [`write_report`].
pub fn parse_report(text: &str, dict: &Dictionary) -> Result<(PassHistogram, Vec<(usize, Program)>), ReportError> {
    enum Section {
        None,
        Hist,
        Partials,
    }
    let mut sec = Section::None;
    let mut hist = PassHistogram::default();
    let mut progs = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        let lineno = i + 1;
        let syntax = |msg: &str| ReportError::Syntax {
            line: lineno,
            msg: msg.to_string(),
        };
        if line.is_empty() {
            continue;
        }
        if line == HIST_HEADER {
            sec = Section::Hist;
            continue;
        }
        if line == PARTIALS_HEADER {
            sec = Section::Partials;
            continue;
        }
        match sec {
            Section::None => return Err(syntax("content before a section header")),
            Section::Hist => {
                let (k, c) = line.split_once(':').ok_or_else(|| syntax("expected `k: count`"))?;
                let k: usize = k.trim().parse().map_err(|_| syntax("bad pass count"))?;
                let c: u64 = c.trim().parse().map_err(|_| syntax("bad count"))?;
                if k != hist.counts.len() {
                    return Err(syntax("histogram rows out of order"));
                }
                hist.counts.push(c);
            }
            Section::Partials => {
                let (k, rest) = line.split_once(':').ok_or_else(|| syntax("expected `k : body ;`"))?;
                let k: usize = k.trim().parse().map_err(|_| syntax("bad pass count"))?;
                let body = rest.trim().strip_suffix(';').ok_or_else(|| syntax("missing `;`"))?;
                let p = parse_body(body, dict).map_err(|source| ReportError::Program { line: lineno, source })?;
                progs.push((k, p));
            }
        }
    }
    Ok((hist, progs))
}
