//! Invariants of the machine, the analyzer and the search.

use proptest::prelude::*;

use stackgene::enumerator::{
    default_forbidden_pairs, enumerate, EnumConfig, PartialProgramList, SearchAlphabet, SearchSpace,
};
use stackgene::evolution::{inline_genes, is_valid_body};
use stackgene::stochastic::{sample_program, FrequencyModel, GenConfig, GenMode};
use stackgene::testio::{evaluate, EvalMode, TestSuite};
use stackgene::vm::opcode::{self, *};
use stackgene::vm::{disassemble, parse_body, static_analyze, Dictionary, ExecLimits, FaultKind, Machine, Program};

/// Lays out `ops` with jump targets picked by `picks` (an instruction
/// boundary each) and constants from `consts`.
fn layout(ops: &[u8], picks: &[usize], consts: &[i8], dict: &Dictionary) -> Program {
    let width = |c: u8| if dict.body(c).is_some() { 1 } else { opcode::width(c) };
    let mut offsets = vec![0];
    for &c in ops {
        offsets.push(offsets.last().unwrap() + width(c));
    }
    let mut bytes = Vec::new();
    for (k, &c) in ops.iter().enumerate() {
        bytes.push(c);
        let pick = picks.get(k).copied().unwrap_or(0);
        if opcode::is_jump(c) && dict.body(c).is_none() {
            let t = offsets[pick % (ops.len() + 1)] as isize;
            bytes.push((t - (offsets[k] + 1) as isize) as i8 as u8);
        } else if c == CONST && dict.body(c).is_none() {
            bytes.push(consts[pick % consts.len()] as u8);
        }
    }
    Program::from_body(&bytes)
}

fn raw_program(words: Vec<u8>, max_len: usize) -> impl Strategy<Value = Program> {
    (prop::collection::vec((0..words.len(), 0usize..64), 1..=max_len)).prop_map(move |v| {
        let ops: Vec<u8> = v.iter().map(|&(w, _)| words[w]).collect();
        let picks: Vec<usize> = v.iter().map(|&(_, p)| p).collect();
        layout(&ops, &picks, &[-2, -1, 0, 1, 2, 3, 7], &Dictionary::builtin())
    })
}

fn search_words() -> Vec<u8> {
    SearchAlphabet::standard().words
}

fn inputs(m: usize, seed: &[i32]) -> Vec<i32> {
    (0..m).map(|i| seed[i % seed.len()]).collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(512))]

    #[test]
    fn assembly_round_trips(p in raw_program(search_words(), 10)) {
        let d = Dictionary::builtin();
        let text = disassemble(&p, &d).unwrap();
        prop_assert_eq!(parse_body(&text, &d).unwrap(), p);
    }

    #[test]
    fn accepted_programs_never_underflow(
        p in raw_program(search_words(), 10),
        vals in prop::collection::vec(-50i32..50, 1..8),
    ) {
        let d = Dictionary::builtin();
        let a = static_analyze(&p, &d);
        prop_assume!(a.valid);
        let mut m = Machine::new(&d, ExecLimits::default());
        let r = m.run(p.bytes(), &inputs(a.consumed as usize, &vals));
        prop_assert_ne!(r, Err(FaultKind::StackUnderflow));
        if r.is_ok() {
            prop_assert_eq!(m.stack().len(), a.produced as usize);
        }
    }

    #[test]
    fn cycle_detection_keeps_results(
        p in raw_program(vec![DUP, DROP, SWAP, OVER, ROT, INC, DEC, NEG, ZEQ, ADD, IF, GOTO, CONST], 8),
        vals in prop::collection::vec(-5i32..5, 3),
    ) {
        let d = Dictionary::builtin();
        let limits = ExecLimits { max_steps: 2_000, ..ExecLimits::default() };
        let mut plain = Machine::new(&d, limits);
        let mut fast = Machine::new(&d, limits).with_cycle_detection();
        let a = plain.run(p.bytes(), &vals);
        let b = fast.run(p.bytes(), &vals);
        prop_assert_eq!(a, b);
        if a.is_ok() {
            prop_assert_eq!(plain.stack(), fast.stack());
        }
    }

    #[test]
    fn inlining_preserves_behaviour(
        g1 in raw_program(vec![DUP, DROP, SWAP, OVER, ROT, INC, DEC, ADD, MUL, ZEQ, IF, CONST], 3),
        g2 in raw_program(vec![DUP, SWAP, NROT, SUB, NEG, ZLT, IF, CONST], 3),
        shape in prop::collection::vec((0usize..11, 0usize..64), 1..10),
        vals in prop::collection::vec(-6i32..6, 4),
    ) {
        let mut d = Dictionary::builtin();
        prop_assume!(is_valid_body(g1.body(), &d));
        let c1 = d.add_word("G1", g1, false).unwrap();
        prop_assume!(is_valid_body(g2.body(), &d));
        let c2 = d.add_word("G2", g2, false).unwrap();
        let words = [c1, c2, DUP, SWAP, OVER, DEC, MUL, ZEQ, IF, GOTO, CONST];
        let ops: Vec<u8> = shape.iter().map(|&(w, _)| words[w]).collect();
        let picks: Vec<usize> = shape.iter().map(|&(_, t)| t).collect();
        let p = layout(&ops, &picks, &[1, 2], &d);
        let flat = match inline_genes(&p, &d) {
            Ok(f) => f,
            Err(_) => return Ok(()),
        };
        let flat_ins = stackgene::vm::decode(flat.bytes(), &d).unwrap();
        prop_assert!(flat_ins.iter().all(|i| d.body(i.code).is_none()));
        let limits = ExecLimits { max_steps: 3_000, ..ExecLimits::default() };
        let mut m1 = Machine::new(&d, limits);
        let mut m2 = Machine::new(&d, limits);
        match m1.run(p.bytes(), &vals) {
            Ok(()) => {
                prop_assert_eq!(m2.run(flat.bytes(), &vals), Ok(()));
                prop_assert_eq!(m1.stack(), m2.stack());
            }
            Err(FaultKind::StepLimit | FaultKind::CallDepth) => {}
            Err(k) => prop_assert_eq!(m2.run(flat.bytes(), &vals), Err(k)),
        }
    }

    #[test]
    fn merge_is_order_independent(
        entries in prop::collection::vec((0usize..6, prop::collection::vec(4u8..37, 1..5), 0usize..3), 0..60),
        cap in 1usize..12,
    ) {
        let mut parts = [PartialProgramList::new(cap), PartialProgramList::new(cap), PartialProgramList::new(cap)];
        let mut whole = PartialProgramList::new(cap);
        for (pass, body, part) in &entries {
            let p = Program::from_body(body);
            parts[*part].insert(*pass, p.bytes(), body.len());
            whole.insert(*pass, p.bytes(), body.len());
        }
        let order = |ix: [usize; 3]| {
            let mut l = PartialProgramList::new(cap);
            for i in ix {
                l.merge(&parts[i]);
            }
            l.iter().map(|e| (e.pass_count, e.program.clone())).collect::<Vec<_>>()
        };
        let a = order([0, 1, 2]);
        prop_assert_eq!(&a, &order([2, 0, 1]));
        prop_assert_eq!(&a, &order([1, 2, 0]));
        let w: Vec<_> = whole.iter().map(|e| (e.pass_count, e.program.clone())).collect();
        prop_assert_eq!(a, w);
    }

    #[test]
    fn sampled_programs_are_valid_and_fit(seed in any::<u64>(), m in 0usize..3, n in 1usize..3) {
        let d = Dictionary::builtin();
        let a = SearchAlphabet::standard();
        let f = default_forbidden_pairs();
        let sp = SearchSpace::new(&d, &a, &f, (m, n), EvalMode::Strict);
        let cfg = GenConfig { min_len: 1, max_len: 9, mode: GenMode::Unigram, seed, time_budget: None, program_budget: None };
        if let Some(p) = sample_program(&sp, &FrequencyModel::new(), &cfg) {
            let e = static_analyze(&p, &d);
            prop_assert!(e.valid);
            prop_assert!(e.signature().fits(m, n));
            prop_assert!(stackgene::enumerator::is_generated(&p, &a, &f, &d));
        }
    }
}

/// Every behaviour of a raw program is reproduced by some enumerated
/// program of the same or smaller length, judged on six probe inputs.
fn check_behaviour_kept(p: &Program, words: &[u8], consts: &[i8]) -> Result<(), String> {
    let d = Dictionary::builtin();
    let e = static_analyze(p, &d);
    if !e.valid {
        return Ok(());
    }
    let sig = (e.consumed as usize, e.produced as usize);
    if sig.1 == 0 {
        return Ok(());
    }
    let probes: [&[i32]; 6] = [
        &[3, -2, 5],
        &[0, 7, -1],
        &[4, 4, 9],
        &[-6, 1, 2],
        &[1, 0, 0],
        &[8, -3, -7],
    ];
    let mut m = Machine::new(&d, ExecLimits::default());
    let mut items = Vec::new();
    for v in probes {
        let ins = inputs(sig.0, v);
        if m.run(p.bytes(), &ins).is_err() {
            return Ok(());
        }
        items.push((ins, m.stack().to_vec()));
    }
    // The empty program, which the search never lists, is the identity.
    if items.iter().all(|(i, o)| i == o) {
        return Ok(());
    }
    let suite = TestSuite::from_oracle("B", "", items.iter().map(|(i, _)| i.clone()), |i| {
        items.iter().find(|(x, _)| x == i).unwrap().1.clone()
    });
    if !evaluate(p, &d, &suite, ExecLimits::default(), EvalMode::Strict).all_passed() {
        return Ok(());
    }
    let alphabet = SearchAlphabet::new(words.to_vec(), consts.to_vec());
    let len = p.instruction_count();
    let cfg = EnumConfig {
        max_len: len,
        ..EnumConfig::default()
    };
    let r = enumerate(&alphabet, &default_forbidden_pairs(), &cfg, &suite, &d);
    match r.found {
        Some(q) if q.instruction_count() <= len => Ok(()),
        _ => Err(disassemble(p, &d).unwrap()),
    }
}

const SMALL: [u8; 12] = [DUP, DROP, SWAP, OVER, ROT, NROT, INC, DEC, ADD, ZEQ, IF, GOTO];

#[test]
fn pruning_keeps_every_behaviour_up_to_length_3() {
    let d = Dictionary::builtin();
    let mut words: Vec<u8> = SMALL.to_vec();
    words.push(CONST);
    let consts = [1i8, 2];
    let k = words.len();
    let mut lost = Vec::new();
    for n in 1..=3usize {
        for idx in 0..k.pow(n as u32) {
            let ops: Vec<u8> = (0..n).map(|i| words[idx / k.pow(i as u32) % k]).collect();
            let slots = ops.iter().filter(|&&c| opcode::has_operand(c)).count();
            let choices = (n + 1).max(consts.len());
            for pick in 0..choices.pow(slots as u32) {
                let mut picks = vec![0; n];
                let mut rest = pick;
                for (i, &c) in ops.iter().enumerate() {
                    if opcode::has_operand(c) {
                        picks[i] = rest % choices;
                        rest /= choices;
                    }
                }
                let p = layout(&ops, &picks, &consts, &d);
                if let Err(text) = check_behaviour_kept(&p, &words, &consts) {
                    lost.push(text);
                }
            }
        }
    }
    lost.sort();
    lost.dedup();
    assert!(lost.is_empty(), "behaviours lost: {lost:?}");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn pruning_keeps_behaviour_at_length_4(
        shape in prop::collection::vec((0usize..13, 0usize..64), 4),
    ) {
        let mut words: Vec<u8> = SMALL.to_vec();
        words.push(CONST);
        let consts = [1i8, 2];
        let ops: Vec<u8> = shape.iter().map(|&(w, _)| words[w]).collect();
        let picks: Vec<usize> = shape.iter().map(|&(_, t)| t).collect();
        let p = layout(&ops, &picks, &consts, &Dictionary::builtin());
        prop_assert_eq!(check_behaviour_kept(&p, &words, &consts), Ok(()));
    }
}
