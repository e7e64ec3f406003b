//! Small-step focus/context machine for the core IR.

use std::fmt;

use super::{caught, eval_core, CoreExpr, CoreStmt, HStore};
use crate::vfsem::Ub;

/// Completed sub-computation travelling up the context.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum UpValue {
    Normal,
    Return(i64),
    Throw(u32),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Focus {
    Down(CoreStmt),
    Up(UpValue),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Frame {
    /// Left of a `Seq` is running; the right part waits.
    SeqLeft(CoreStmt),
    /// Body of a `Loop` is running; the loop restarts on normal exit.
    Loop(CoreStmt),
    Catch,
    /// Body of a `Block` is running; its slot is the innermost one.
    Block,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MachineState {
    pub focus: Focus,
    pub context: Vec<Frame>,
    pub store: HStore,
}

impl MachineState {
    pub fn initial(s: &CoreStmt, store: HStore) -> Self {
        MachineState {
            focus: Focus::Down(s.clone()),
            context: Vec::new(),
            store,
        }
    }

    fn up(mut self, v: UpValue) -> Step {
        self.focus = Focus::Up(v);
        Step::Next(self)
    }

    fn down(mut self, s: CoreStmt) -> Step {
        self.focus = Focus::Down(s);
        Step::Next(self)
    }
}

impl fmt::Display for MachineState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.focus {
            Focus::Down(s) => write!(f, "Down {s}")?,
            Focus::Up(UpValue::Normal) => f.write_str("Up Normal")?,
            Focus::Up(UpValue::Return(z)) => write!(f, "Up Return {z}")?,
            Focus::Up(UpValue::Throw(n)) => write!(f, "Up Throw {n}")?,
        }
        let frames: Vec<&str> = self
            .context
            .iter()
            .map(|fr| match fr {
                Frame::SeqLeft(_) => "SeqLeft",
                Frame::Loop(_) => "Loop",
                Frame::Catch => "Catch",
                Frame::Block => "Block",
            })
            .collect();
        write!(f, " | [{}] | {}", frames.join(", "), self.store)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Step {
    Next(MachineState),
    /// The focused redex has undefined behaviour.
    Stuck(Ub),
    Final(i64),
    /// Normal completion or an uncaught throw with an empty context.
    Halted(UpValue),
}

fn eval_or_stuck(st: &MachineState, e: &CoreExpr) -> Result<i64, Step> {
    eval_core(&st.store, e).map_err(Step::Stuck)
}

/// One deterministic transition.
pub fn step_core(mut st: MachineState) -> Step {
    let focus = std::mem::replace(&mut st.focus, Focus::Up(UpValue::Normal));
    match focus {
        Focus::Down(s) => match s {
            CoreStmt::Skip => st.up(UpValue::Normal),
            CoreStmt::Seq(a, b) => {
                st.context.push(Frame::SeqLeft(*b));
                st.down(*a)
            }
            CoreStmt::Assign(i, e) => match eval_or_stuck(&st, &e) {
                Ok(v) => {
                    st.store.set(i, v);
                    st.up(UpValue::Normal)
                }
                Err(stuck) => stuck,
            },
            CoreStmt::Block(e, body) => match eval_or_stuck(&st, &e) {
                Ok(v) => {
                    st.store.push(v);
                    st.context.push(Frame::Block);
                    st.down(*body)
                }
                Err(stuck) => stuck,
            },
            CoreStmt::If(c, a, b) => match eval_or_stuck(&st, &c) {
                Ok(0) => st.down(*b),
                Ok(_) => st.down(*a),
                Err(stuck) => stuck,
            },
            CoreStmt::Loop(body) => {
                st.context.push(Frame::Loop((*body).clone()));
                st.down(*body)
            }
            CoreStmt::Throw(n) => st.up(UpValue::Throw(n)),
            CoreStmt::Catch(body) => {
                st.context.push(Frame::Catch);
                st.down(*body)
            }
            CoreStmt::Ret(e) => match eval_or_stuck(&st, &e) {
                Ok(z) => st.up(UpValue::Return(z)),
                Err(stuck) => stuck,
            },
        },
        Focus::Up(v) => {
            let Some(frame) = st.context.pop() else {
                return match v {
                    UpValue::Return(z) => Step::Final(z),
                    other => Step::Halted(other),
                };
            };
            match (frame, v) {
                (Frame::SeqLeft(b), UpValue::Normal) => st.down(b),
                (Frame::Loop(body), UpValue::Normal) => {
                    st.context.push(Frame::Loop(body.clone()));
                    st.down(body)
                }
                (Frame::Block, v) => {
                    if !matches!(v, UpValue::Return(_)) {
                        st.store.pop();
                    }
                    st.up(v)
                }
                (Frame::Catch, UpValue::Throw(n)) if caught(n) => st.up(UpValue::Normal),
                (Frame::Catch, UpValue::Throw(n)) if n > 0 => st.up(UpValue::Throw(n - 1)),
                (_, v) => st.up(v),
            }
        }
    }
}

/// How an iterated machine run ended.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum MachineRun {
    Final(i64),
    Stuck(Ub),
    Halted(UpValue, HStore),
    OutOfSteps,
}

/// Iterates [`step_core`] at most `max_steps` times, optionally recording
/// every visited state.
pub fn run_machine(init: MachineState, max_steps: u64, mut trace: Option<&mut Vec<String>>) -> MachineRun {
    let mut st = init;
    for _ in 0..max_steps {
        if let Some(t) = trace.as_deref_mut() {
            t.push(st.to_string());
        }
        let store = st.store.clone();
        match step_core(st) {
            Step::Next(next) => st = next,
            Step::Stuck(u) => return MachineRun::Stuck(u),
            Step::Final(z) => return MachineRun::Final(z),
            Step::Halted(v) => return MachineRun::Halted(v, store),
        }
    }
    MachineRun::OutOfSteps
}
