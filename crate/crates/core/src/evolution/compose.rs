//! Building a program from a selector and two partial programs.

use crate::testio::{evaluate, EvalMode, TestFileError, TestItem, TestSuite};
use crate::vm::opcode::{CONST, DUP, GOTO, IF, OVER, PICK, PICK2, PICK3, PICK4};
use crate::vm::{Dictionary, ExecLimits, Program, VmError};

/// The suite with the same inputs as `suite` and the single output 1 on the
/// items `p` passes, 0 on the others.
pub fn derive_selector_suite(
    suite: &TestSuite,
    p: &Program,
    dict: &Dictionary,
    limits: ExecLimits,
    mode: EvalMode,
) -> Result<TestSuite, TestFileError> {
    let mask = evaluate(p, dict, suite, limits, mode).pass_mask;
    let items = suite
        .items
        .iter()
        .zip(&mask)
        .map(|(it, &ok)| TestItem::new(it.inputs.clone(), vec![ok as i32]))
        .collect();
    TestSuite::new(
        &format!("{}_SEL", suite.name),
        &format!("1 where a partial program of {} passes", suite.name),
        items,
    )
}

#[derive(Debug, thiserror::Error)]
pub enum ComposeError {
    #[error("selector fails items {0:?}")]
    Selector(Vec<usize>),
    #[error("first branch fails selected items {0:?}")]
    Selected(Vec<usize>),
    #[error("second branch fails unselected items {0:?}")]
    Rest(Vec<usize>),
    #[error("composed program fails items {0:?}")]
    Composed(Vec<usize>),
    #[error(transparent)]
    Vm(#[from] VmError),
    #[error(transparent)]
    Suite(#[from] TestFileError),
}

/// Bytes that copy the top `m` stack values, keeping their order.
fn copy_inputs(m: usize) -> Vec<u8> {
    let one = match m.saturating_sub(1) {
        0 => vec![DUP],
        1 => vec![OVER],
        2 => vec![PICK2],
        3 => vec![PICK3],
        4 => vec![PICK4],
        k => vec![CONST, k as u8, PICK],
    };
    (0..m).flat_map(|_| one.iter().copied()).collect()
}

/// Installs `q`, `p` and `r` as the words `<NAME>_Q`, `<NAME>_P` and
/// `<NAME>_R` and returns a program that runs `p` on the inputs where `q`
/// yields nonzero and `r` elsewhere:
///
/// `<copy inputs> Q IF 4 R GOTO 2 P`
///
/// Each part is checked against its share of `suite` first, and the result
/// against the whole suite.
pub fn compose_partition(
    q: &Program,
    p: &Program,
    r: &Program,
    suite: &TestSuite,
    dict: &Dictionary,
    limits: ExecLimits,
    mode: EvalMode,
) -> Result<(Program, Dictionary), ComposeError> {
    let failing = |mask: &[bool], want: &dyn Fn(usize) -> bool| -> Vec<usize> {
        (0..mask.len()).filter(|&i| want(i) && !mask[i]).collect()
    };
    let sel = derive_selector_suite(suite, p, dict, limits, mode)?;
    let q_mask = evaluate(q, dict, &sel, limits, mode).pass_mask;
    let bad = failing(&q_mask, &|_| true);
    if !bad.is_empty() {
        return Err(ComposeError::Selector(bad));
    }
    let chosen: Vec<bool> = sel.items.iter().map(|it| it.outputs[0] == 1).collect();
    let p_mask = evaluate(p, dict, suite, limits, mode).pass_mask;
    let bad = failing(&p_mask, &|i| chosen[i]);
    if !bad.is_empty() {
        return Err(ComposeError::Selected(bad));
    }
    let r_mask = evaluate(r, dict, suite, limits, mode).pass_mask;
    let bad = failing(&r_mask, &|i| !chosen[i]);
    if !bad.is_empty() {
        return Err(ComposeError::Rest(bad));
    }

    let mut d = dict.clone();
    let mut code = |suffix: &str, body: &Program| d.add_word(&format!("{}_{suffix}", suite.name), body.clone(), false);
    let (qc, pc, rc) = (code("Q", q)?, code("P", p)?, code("R", r)?);
    let mut bytes = copy_inputs(suite.signature().0);
    bytes.extend([qc, IF, 4, rc, GOTO, 2, pc]);
    let composed = Program::from_body(&bytes);
    let bad = failing(&evaluate(&composed, &d, suite, limits, mode).pass_mask, &|_| true);
    if !bad.is_empty() {
        return Err(ComposeError::Composed(bad));
    }
    Ok((composed, d))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::vm::parse_body;

    fn mixed() -> TestSuite {
        // Squares on even inputs, doubles on odd ones.
        TestSuite::from_oracle("MIX", "x -> x*x or 2x", (-6..=6).map(|x| vec![x]), |v| {
            let x = v[0];
            vec![if x % 2 == 0 { x * x } else { 2 * x }]
        })
    }

    fn body(s: &str) -> Program {
        parse_body(s, &Dictionary::builtin()).unwrap()
    }

    #[test]
    fn selector_marks_items_the_program_passes() {
        let d = Dictionary::builtin();
        let s = derive_selector_suite(&mixed(), &body("DUP *"), &d, ExecLimits::default(), EvalMode::Strict).unwrap();
        for it in &s.items {
            let x = it.inputs[0];
            assert_eq!(it.outputs, [(x % 2 == 0 || x * x == 2 * x) as i32]);
        }
        let none = derive_selector_suite(
            &mixed(),
            &body("DROP DROP"),
            &d,
            ExecLimits::default(),
            EvalMode::Strict,
        )
        .unwrap();
        assert!(none.items.iter().all(|it| it.outputs == [0]));
    }

    #[test]
    fn partition_composes_square_and_double() {
        let d = Dictionary::builtin();
        let q = body("CONST 1 AND 0=");
        let (prog, d2) = compose_partition(
            &q,
            &body("DUP *"),
            &body("DUP +"),
            &mixed(),
            &d,
            ExecLimits::default(),
            EvalMode::Strict,
        )
        .unwrap();
        assert!(evaluate(&prog, &d2, &mixed(), ExecLimits::default(), EvalMode::Strict).all_passed());
        assert_eq!(
            crate::vm::disassemble(&prog, &d2).unwrap(),
            "DUP MIX_Q IF 4 MIX_R GOTO 2 MIX_P"
        );
    }

    #[test]
    fn constant_selectors_pick_one_branch() {
        let d = Dictionary::builtin();
        let sq = TestSuite::from_oracle("SQ", "x -> x*x", (-5..=5).map(|x| vec![x]), |v| vec![v[0] * v[0]]);
        let (prog, d2) = compose_partition(
            &body("DROP CONST 1"),
            &body("DUP *"),
            &body("DROP CONST 3"),
            &sq,
            &d,
            ExecLimits::default(),
            EvalMode::Strict,
        )
        .unwrap();
        assert!(evaluate(&prog, &d2, &sq, ExecLimits::default(), EvalMode::Strict).all_passed());
        let fail = TestSuite::from_oracle("NO", "x -> 7", (-5..=5).map(|x| vec![x]), |_| vec![7]);
        let (prog, d2) = compose_partition(
            &body("DROP ZERO"),
            &body("DUP *"),
            &body("DROP CONST 7"),
            &fail,
            &d,
            ExecLimits::default(),
            EvalMode::Strict,
        )
        .unwrap();
        assert!(evaluate(&prog, &d2, &fail, ExecLimits::default(), EvalMode::Strict).all_passed());
    }

    #[test]
    fn broken_contracts_name_the_items() {
        let d = Dictionary::builtin();
        let err = compose_partition(
            &body("DROP ZERO"),
            &body("DUP *"),
            &body("DUP +"),
            &mixed(),
            &d,
            ExecLimits::default(),
            EvalMode::Strict,
        )
        .unwrap_err();
        assert!(matches!(err, ComposeError::Selector(ref v) if !v.is_empty()));
        let q = body("CONST 1 AND 0=");
        let err = compose_partition(
            &q,
            &body("DUP *"),
            &body("DUP -"),
            &mixed(),
            &d,
            ExecLimits::default(),
            EvalMode::Strict,
        )
        .unwrap_err();
        assert!(matches!(err, ComposeError::Rest(ref v) if v.len() == 6));
    }

    #[test]
    fn two_inputs_are_copied_in_order() {
        let d = Dictionary::builtin();
        let s = TestSuite::from_oracle(
            "MULP",
            "x y -> x*y if x>y else x+y",
            (3..=6).flat_map(|x| (3..=6).map(move |y| vec![x, y])),
            |v| vec![if v[0] > v[1] { v[0] * v[1] } else { v[0] + v[1] }],
        );
        let (prog, d2) = compose_partition(
            &body(">"),
            &body("*"),
            &body("+"),
            &s,
            &d,
            ExecLimits::default(),
            EvalMode::Strict,
        )
        .unwrap();
        assert!(evaluate(&prog, &d2, &s, ExecLimits::default(), EvalMode::Strict).all_passed());
    }
}
