//! The interpreter.

use std::fmt;

use super::dict::Dictionary;
use super::opcode::*;
use super::program::{check_jumps, decode, Program};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct ExecLimits {
    pub max_steps: u32,
    pub max_stack: usize,
    pub max_call_depth: usize,
}

impl Default for ExecLimits {
    fn default() -> Self {
        ExecLimits {
            max_steps: 10_000,
            max_stack: 256,
            max_call_depth: 64,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum FaultKind {
    StackUnderflow,
    StackOverflow,
    DivByZero,
    StepLimit,
    CallDepth,
    BadJump,
    /// Byte that is not a word in the dictionary, or a malformed layout.
    IllegalInstruction,
}

impl fmt::Display for FaultKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            FaultKind::StackUnderflow => "stack-underflow",
            FaultKind::StackOverflow => "stack-overflow",
            FaultKind::DivByZero => "div-by-zero",
            FaultKind::StepLimit => "step-limit",
            FaultKind::CallDepth => "call-depth",
            FaultKind::BadJump => "bad-jump",
            FaultKind::IllegalInstruction => "illegal-instruction",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExecOutcome {
    /// `None` when the program halted normally.
    pub fault: Option<FaultKind>,
    pub final_stack: Vec<i32>,
    pub steps_used: u32,
}

impl ExecOutcome {
    pub fn halted(&self) -> bool {
        self.fault.is_none()
    }
}

/// Decodes, checks jump targets, then runs `program` on `inputs` (first
/// input deepest). Layout problems are reported as faults.
pub fn execute(program: &Program, dict: &Dictionary, inputs: &[i32], limits: ExecLimits) -> ExecOutcome {
    let layout_ok = match decode(program.bytes(), dict) {
        Ok(ins) => match check_jumps(&ins) {
            Ok(()) => Ok(()),
            Err(_) => Err(FaultKind::BadJump),
        },
        Err(_) => Err(FaultKind::IllegalInstruction),
    };
    if let Err(fault) = layout_ok {
        return ExecOutcome {
            fault: Some(fault),
            final_stack: inputs.to_vec(),
            steps_used: 0,
        };
    }
    let mut m = Machine::new(dict, limits);
    let r = m.run(program.bytes(), inputs);
    ExecOutcome {
        fault: r.err(),
        final_stack: m.stack().to_vec(),
        steps_used: m.steps(),
    }
}

/// Reusable interpreter state. `run` assumes the program and every user
/// word body have a valid layout (jumps are still range-checked).
#[derive(Debug, Clone)]
pub struct Machine<'d> {
    dict: &'d Dictionary,
    limits: ExecLimits,
    stack: Vec<i32>,
    sp: usize,
    frames: Vec<(u8, usize)>,
    steps: u32,
    cycles: Option<Box<CycleCheck>>,
}

/// Brent's cycle detection over the full machine state, sampled at taken
/// backward jumps. A repeated state can only end in the step limit.
#[derive(Debug, Clone, Default)]
struct CycleCheck {
    valid: bool,
    power: u32,
    lam: u32,
    pc: usize,
    code: u8,
    stack: Vec<i32>,
    frames: Vec<(u8, usize)>,
}

impl CycleCheck {
    fn reset(&mut self) {
        self.valid = false;
        self.power = 1;
        self.lam = 0;
    }

    /// Returns true if the state equals the saved one.
    #[inline]
    fn observe(&mut self, pc: usize, code: u8, stack: &[i32], frames: &[(u8, usize)]) -> bool {
        if self.valid
            && self.pc == pc
            && self.code == code
            && self.stack.len() == stack.len()
            && self.frames.len() == frames.len()
            && stack.iter().rev().zip(self.stack.iter().rev()).all(|(a, b)| a == b)
            && self.frames == frames
        {
            return true;
        }
        self.lam += 1;
        if !self.valid || self.lam >= self.power {
            self.valid = true;
            self.pc = pc;
            self.code = code;
            self.stack.clear();
            self.stack.extend_from_slice(stack);
            self.frames.clear();
            self.frames.extend_from_slice(frames);
            self.power = self.power.saturating_mul(2);
            self.lam = 0;
        }
        false
    }
}

impl<'d> Machine<'d> {
    pub fn new(dict: &'d Dictionary, limits: ExecLimits) -> Self {
        Machine {
            dict,
            limits,
            stack: vec![0; limits.max_stack.max(1)],
            sp: 0,
            frames: Vec::with_capacity(limits.max_call_depth),
            steps: 0,
            cycles: None,
        }
    }

    /// Stops programs as soon as they revisit a machine state, reporting
    /// the step-limit fault they would eventually hit. Pass/fail results are
    /// unchanged; `steps()` and the faulting stack are not those at the limit.
    pub fn with_cycle_detection(mut self) -> Self {
        self.cycles = Some(Box::default());
        self
    }

    pub fn dict(&self) -> &'d Dictionary {
        self.dict
    }

    pub fn limits(&self) -> ExecLimits {
        self.limits
    }

    /// Current stack, bottom first.
    pub fn stack(&self) -> &[i32] {
        &self.stack[..self.sp]
    }

    pub fn steps(&self) -> u32 {
        self.steps
    }

    /// Runs `prog` with `inputs` pushed first-deepest. On return the stack
    /// holds the final (or faulting) state.
    pub fn run(&mut self, prog: &[u8], inputs: &[i32]) -> Result<(), FaultKind> {
        self.frames.clear();
        if let Some(c) = self.cycles.as_mut() {
            c.reset();
        }
        if inputs.len() > self.stack.len() {
            self.sp = 0;
            self.steps = 0;
            return Err(FaultKind::StackOverflow);
        }
        self.stack[..inputs.len()].copy_from_slice(inputs);
        let (r, sp, steps) = run_loop(
            self.dict,
            self.limits,
            &mut self.stack,
            &mut self.frames,
            self.cycles.as_deref_mut(),
            prog,
            inputs.len(),
        );
        self.sp = sp;
        self.steps = steps;
        r
    }
}

/// The dispatch loop. Returns the result with the final depth and steps.
fn run_loop(
    dict: &Dictionary,
    limits: ExecLimits,
    st: &mut [i32],
    frames: &mut Vec<(u8, usize)>,
    mut cycles: Option<&mut CycleCheck>,
    prog: &[u8],
    mut sp: usize,
) -> (Result<(), FaultKind>, usize, u32) {
    let cap = st.len();
    let max_steps = limits.max_steps;
    let mut steps = 0u32;
    let mut cur: &[u8] = prog;
    // Code of the word being executed; END (0) marks the top level.
    let mut cur_code = END;
    let mut pc = 0usize;

    macro_rules! fault {
        ($e:expr) => {
            return (Err($e), sp, steps)
        };
    }
    macro_rules! need {
        ($n:expr) => {
            if sp < $n {
                fault!(FaultKind::StackUnderflow)
            }
        };
    }
    macro_rules! room {
        ($n:expr) => {
            if sp + $n > cap {
                fault!(FaultKind::StackOverflow)
            }
        };
    }
    macro_rules! binop {
        (|$a:ident, $b:ident| $e:expr) => {{
            need!(2);
            let $b = st[sp - 1];
            let $a = st[sp - 2];
            st[sp - 2] = $e;
            sp -= 1;
        }};
    }
    macro_rules! unop {
        (|$a:ident| $e:expr) => {{
            need!(1);
            let $a = st[sp - 1];
            st[sp - 1] = $e;
        }};
    }
    // Copies the item `n` below the top onto the top (0 = DUP, 1 = OVER).
    macro_rules! pick {
        ($n:expr) => {{
            let n: usize = $n;
            need!(n + 1);
            room!(1);
            st[sp] = st[sp - 1 - n];
            sp += 1;
        }};
    }
    // Moves the item `n` below the top to the top (1 = SWAP, 2 = ROT).
    macro_rules! roll {
        ($n:expr) => {{
            let n: usize = $n;
            need!(n + 1);
            st[sp - 1 - n..sp].rotate_left(1);
        }};
    }

    loop {
        let Some(&code) = cur.get(pc) else {
            fault!(FaultKind::IllegalInstruction);
        };
        steps += 1;
        if steps > max_steps {
            fault!(FaultKind::StepLimit);
        }
        match code {
            END => match frames.pop() {
                None => return (Ok(()), sp, steps),
                Some((ret_code, ret_pc)) => {
                    cur = if ret_code == END {
                        prog
                    } else {
                        match dict.body(ret_code) {
                            Some(b) => b,
                            None => fault!(FaultKind::IllegalInstruction),
                        }
                    };
                    cur_code = ret_code;
                    pc = ret_pc;
                    continue;
                }
            },
            GOTO | IF => {
                let Some(&arg) = cur.get(pc + 1) else {
                    fault!(FaultKind::IllegalInstruction);
                };
                let arg = arg as i8;
                let taken = if code == IF {
                    need!(1);
                    sp -= 1;
                    st[sp] != 0
                } else {
                    true
                };
                if taken {
                    let t = (pc + 1) as isize + arg as isize;
                    if t < 0 || t as usize >= cur.len() {
                        fault!(FaultKind::BadJump);
                    }
                    pc = t as usize;
                    if arg < 0 {
                        if let Some(c) = cycles.as_deref_mut() {
                            if c.observe(pc, cur_code, &st[..sp], frames) {
                                steps = max_steps + 1;
                                fault!(FaultKind::StepLimit);
                            }
                        }
                    }
                } else {
                    pc += 2;
                }
                continue;
            }
            CONST => {
                room!(1);
                let Some(&arg) = cur.get(pc + 1) else {
                    fault!(FaultKind::IllegalInstruction);
                };
                st[sp] = arg as i8 as i32;
                sp += 1;
                pc += 2;
                continue;
            }
            DUP => pick!(0),
            DROP => {
                need!(1);
                sp -= 1;
            }
            SWAP => {
                need!(2);
                st.swap(sp - 1, sp - 2);
            }
            OVER => pick!(1),
            ROT => roll!(2),
            NROT => {
                need!(3);
                st[sp - 3..sp].rotate_right(1);
            }
            PICK | ROLL => {
                need!(1);
                let n = st[sp - 1];
                sp -= 1;
                if n < 0 {
                    fault!(FaultKind::StackUnderflow);
                }
                if code == PICK {
                    pick!(n as usize)
                } else {
                    roll!(n as usize)
                }
            }
            PICK2 => pick!(2),
            PICK3 => pick!(3),
            PICK4 => pick!(4),
            ROLL3 => roll!(3),
            ROLL4 => roll!(4),
            NEG => unop!(|a| a.wrapping_neg()),
            ADD => binop!(|a, b| a.wrapping_add(b)),
            SUB => binop!(|a, b| a.wrapping_sub(b)),
            MUL => binop!(|a, b| a.wrapping_mul(b)),
            DIV | MOD | DIVMOD => {
                need!(2);
                let b = st[sp - 1];
                let a = st[sp - 2];
                if b == 0 {
                    fault!(FaultKind::DivByZero);
                }
                match code {
                    DIV => {
                        st[sp - 2] = a.wrapping_div(b);
                        sp -= 1;
                    }
                    MOD => {
                        st[sp - 2] = a.wrapping_rem(b);
                        sp -= 1;
                    }
                    _ => {
                        st[sp - 2] = a.wrapping_rem(b);
                        st[sp - 1] = a.wrapping_div(b);
                    }
                }
            }
            INC => unop!(|a| a.wrapping_add(1)),
            DEC => unop!(|a| a.wrapping_sub(1)),
            AND => binop!(|a, b| a & b),
            OR => binop!(|a, b| a | b),
            XOR => binop!(|a, b| a ^ b),
            NOT => unop!(|a| !a),
            GT => binop!(|a, b| (a > b) as i32),
            LT => binop!(|a, b| (a < b) as i32),
            EQ => binop!(|a, b| (a == b) as i32),
            ZEQ => unop!(|a| (a == 0) as i32),
            ZLT => unop!(|a| (a < 0) as i32),
            ZGT => unop!(|a| (a > 0) as i32),
            ZERO => {
                room!(1);
                st[sp] = 0;
                sp += 1;
            }
            _ => {
                let Some(body) = dict.body(code) else {
                    fault!(FaultKind::IllegalInstruction);
                };
                if frames.len() >= limits.max_call_depth {
                    fault!(FaultKind::CallDepth);
                }
                frames.push((cur_code, pc + 1));
                cur = body;
                cur_code = code;
                pc = 0;
                continue;
            }
        }
        pc += 1;
    }
}
