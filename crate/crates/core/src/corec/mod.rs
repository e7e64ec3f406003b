//! Core intermediate representation: de Bruijn stores, translation from
//! the dialect, a fuelled big-step interpreter and a small-step machine.

mod machine;

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::mutation::{self, Mutation};
use crate::syntax::{BExpr, BinOp, CmpOp, Func, IExpr, Loc, Stmt, UnOp};
use crate::vfsem::{CStore, Ub, UbKind};

pub use machine::{run_machine, step_core, Focus, Frame, MachineRun, MachineState, Step, UpValue};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CoreUnop {
    Neg,
    /// 1 on 0, else 0.
    Not,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CoreBinop {
    Add,
    Sub,
    Mul,
    Div,
    Mod,
    Eq,
    Ne,
    Lt,
    Le,
    Gt,
    Ge,
    /// Short-circuit conjunction yielding 0 or 1.
    And,
    /// Short-circuit disjunction yielding 0 or 1.
    Or,
}

impl CoreBinop {
    pub fn symbol(self) -> &'static str {
        match self {
            CoreBinop::Add => "+",
            CoreBinop::Sub => "-",
            CoreBinop::Mul => "*",
            CoreBinop::Div => "/",
            CoreBinop::Mod => "%",
            CoreBinop::Eq => "==",
            CoreBinop::Ne => "!=",
            CoreBinop::Lt => "<",
            CoreBinop::Le => "<=",
            CoreBinop::Gt => ">",
            CoreBinop::Ge => ">=",
            CoreBinop::And => "&&",
            CoreBinop::Or => "||",
        }
    }

    fn of_arith(op: BinOp) -> Self {
        match op {
            BinOp::Add => CoreBinop::Add,
            BinOp::Sub => CoreBinop::Sub,
            BinOp::Mul => CoreBinop::Mul,
            BinOp::Div => CoreBinop::Div,
            BinOp::Mod => CoreBinop::Mod,
        }
    }

    fn of_cmp(op: CmpOp) -> Self {
        match op {
            CmpOp::Eq => CoreBinop::Eq,
            CmpOp::Ne => CoreBinop::Ne,
            CmpOp::Lt => CoreBinop::Lt,
            CmpOp::Le => CoreBinop::Le,
            CmpOp::Gt => CoreBinop::Gt,
            CmpOp::Ge => CoreBinop::Ge,
        }
    }
}

/// Expression over positional variables. Source locations are carried
/// for diagnostics only and are not serialised.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum CoreExpr {
    Lit(i64),
    Var(u32),
    Unop {
        op: CoreUnop,
        arg: Box<CoreExpr>,
        #[serde(skip)]
        loc: Loc,
    },
    Binop {
        op: CoreBinop,
        lhs: Box<CoreExpr>,
        rhs: Box<CoreExpr>,
        #[serde(skip)]
        loc: Loc,
    },
}

impl CoreExpr {
    pub fn unop(op: CoreUnop, arg: CoreExpr) -> Self {
        CoreExpr::Unop {
            op,
            arg: Box::new(arg),
            loc: Loc::default(),
        }
    }

    pub fn binop(op: CoreBinop, lhs: CoreExpr, rhs: CoreExpr) -> Self {
        CoreExpr::Binop {
            op,
            lhs: Box::new(lhs),
            rhs: Box::new(rhs),
            loc: Loc::default(),
        }
    }
}

/// `Lit 5` and `VarIdx 0` at the top; literals are bare inside operators.
impl fmt::Display for CoreExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fn operand(e: &CoreExpr, f: &mut fmt::Formatter<'_>) -> fmt::Result {
            match e {
                CoreExpr::Lit(v) => write!(f, "{v}"),
                CoreExpr::Var(i) => write!(f, "VarIdx {i}"),
                _ => write!(f, "({e})"),
            }
        }
        match self {
            CoreExpr::Lit(v) => write!(f, "Lit {v}"),
            CoreExpr::Var(i) => write!(f, "VarIdx {i}"),
            CoreExpr::Unop { op, arg, .. } => {
                f.write_str(match op {
                    CoreUnop::Neg => "-",
                    CoreUnop::Not => "!",
                })?;
                operand(arg, f)
            }
            CoreExpr::Binop { op, lhs, rhs, .. } => {
                operand(lhs, f)?;
                write!(f, " {} ", op.symbol())?;
                operand(rhs, f)
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum CoreStmt {
    Skip,
    Seq(Box<CoreStmt>, Box<CoreStmt>),
    Assign(u32, CoreExpr),
    /// Evaluates the initialiser, then binds it as index 0 for the body.
    Block(CoreExpr, Box<CoreStmt>),
    If(CoreExpr, Box<CoreStmt>, Box<CoreStmt>),
    Loop(Box<CoreStmt>),
    /// Leaves `n + 1` enclosing `Catch` nodes.
    Throw(u32),
    Catch(Box<CoreStmt>),
    Ret(CoreExpr),
}

impl CoreStmt {
    pub fn seq(a: CoreStmt, b: CoreStmt) -> Self {
        CoreStmt::Seq(Box::new(a), Box::new(b))
    }

    pub fn block(init: CoreExpr, body: CoreStmt) -> Self {
        CoreStmt::Block(init, Box::new(body))
    }

    pub fn if_(c: CoreExpr, a: CoreStmt, b: CoreStmt) -> Self {
        CoreStmt::If(c, Box::new(a), Box::new(b))
    }

    pub fn loop_(body: CoreStmt) -> Self {
        CoreStmt::Loop(Box::new(body))
    }

    pub fn catch(body: CoreStmt) -> Self {
        CoreStmt::Catch(Box::new(body))
    }

    pub fn size(&self) -> usize {
        match self {
            CoreStmt::Skip | CoreStmt::Assign(..) | CoreStmt::Throw(_) | CoreStmt::Ret(_) => 1,
            CoreStmt::Seq(a, b) | CoreStmt::If(_, a, b) => 1 + a.size() + b.size(),
            CoreStmt::Block(_, b) | CoreStmt::Loop(b) | CoreStmt::Catch(b) => 1 + b.size(),
        }
    }

    pub fn loop_count(&self) -> usize {
        match self {
            CoreStmt::Skip | CoreStmt::Assign(..) | CoreStmt::Throw(_) | CoreStmt::Ret(_) => 0,
            CoreStmt::Seq(a, b) | CoreStmt::If(_, a, b) => a.loop_count() + b.loop_count(),
            CoreStmt::Block(_, b) | CoreStmt::Catch(b) => b.loop_count(),
            CoreStmt::Loop(b) => 1 + b.loop_count(),
        }
    }

    /// Whether every `Throw n` sits under more than `n` `Catch` nodes and
    /// every variable index is below its binder depth, starting from
    /// `depth` bindings.
    pub fn well_formed(&self, depth: u32) -> bool {
        fn expr_ok(e: &CoreExpr, depth: u32) -> bool {
            match e {
                CoreExpr::Lit(_) => true,
                CoreExpr::Var(i) => *i < depth,
                CoreExpr::Unop { arg, .. } => expr_ok(arg, depth),
                CoreExpr::Binop { lhs, rhs, .. } => expr_ok(lhs, depth) && expr_ok(rhs, depth),
            }
        }
        fn go(s: &CoreStmt, depth: u32, catches: u32) -> bool {
            match s {
                CoreStmt::Skip => true,
                CoreStmt::Seq(a, b) => go(a, depth, catches) && go(b, depth, catches),
                CoreStmt::Assign(i, e) => *i < depth && expr_ok(e, depth),
                CoreStmt::Block(e, b) => expr_ok(e, depth) && go(b, depth + 1, catches),
                CoreStmt::If(c, a, b) => expr_ok(c, depth) && go(a, depth, catches) && go(b, depth, catches),
                CoreStmt::Loop(b) => go(b, depth, catches),
                CoreStmt::Throw(n) => *n < catches,
                CoreStmt::Catch(b) => go(b, depth, catches + 1),
                CoreStmt::Ret(e) => expr_ok(e, depth),
            }
        }
        go(self, depth, 0)
    }
}

/// Compact one-line form, e.g. `Catch(Loop(Seq(If(0 < VarIdx 0, Skip, Throw 0), ...)))`.
impl fmt::Display for CoreStmt {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CoreStmt::Skip => f.write_str("Skip"),
            CoreStmt::Seq(a, b) => write!(f, "Seq({a}, {b})"),
            CoreStmt::Assign(i, e) => write!(f, "Assign({i}, {e})"),
            CoreStmt::Block(e, b) => write!(f, "Block({e}, {b})"),
            CoreStmt::If(c, a, b) => write!(f, "If({c}, {a}, {b})"),
            CoreStmt::Loop(b) => write!(f, "Loop({b})"),
            CoreStmt::Throw(n) => write!(f, "Throw {n}"),
            CoreStmt::Catch(b) => write!(f, "Catch({b})"),
            CoreStmt::Ret(e) => write!(f, "Ret({e})"),
        }
    }
}

/// Indented form, one constructor per line with explicit indices.
pub fn dump_tree(s: &CoreStmt) -> String {
    fn go(s: &CoreStmt, depth: usize, out: &mut String) {
        let pad = "  ".repeat(depth);
        match s {
            CoreStmt::Skip => out.push_str(&format!("{pad}Skip\n")),
            CoreStmt::Seq(a, b) => {
                out.push_str(&format!("{pad}Seq\n"));
                go(a, depth + 1, out);
                go(b, depth + 1, out);
            }
            CoreStmt::Assign(i, e) => out.push_str(&format!("{pad}Assign {i} := {e}\n")),
            CoreStmt::Block(e, b) => {
                out.push_str(&format!("{pad}Block init {e}\n"));
                go(b, depth + 1, out);
            }
            CoreStmt::If(c, a, b) => {
                out.push_str(&format!("{pad}If {c}\n"));
                go(a, depth + 1, out);
                go(b, depth + 1, out);
            }
            CoreStmt::Loop(b) => {
                out.push_str(&format!("{pad}Loop\n"));
                go(b, depth + 1, out);
            }
            CoreStmt::Throw(n) => out.push_str(&format!("{pad}Throw {n}\n")),
            CoreStmt::Catch(b) => {
                out.push_str(&format!("{pad}Catch\n"));
                go(b, depth + 1, out);
            }
            CoreStmt::Ret(e) => out.push_str(&format!("{pad}Ret {e}\n")),
        }
    }
    let mut out = String::new();
    go(s, 0, &mut out);
    out
}

/// Positional store; index 0 is the innermost binding.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash)]
pub struct HStore {
    // Innermost binding last.
    slots: Vec<i64>,
}

impl HStore {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_innermost_first(values: impl IntoIterator<Item = i64>) -> Self {
        let mut slots: Vec<i64> = values.into_iter().collect();
        slots.reverse();
        HStore { slots }
    }

    pub fn to_innermost_first(&self) -> Vec<i64> {
        self.slots.iter().rev().copied().collect()
    }

    pub fn len(&self) -> usize {
        self.slots.len()
    }

    pub fn is_empty(&self) -> bool {
        self.slots.is_empty()
    }

    pub fn get(&self, i: u32) -> Option<i64> {
        let n = self.slots.len();
        let i = i as usize;
        if i < n {
            Some(self.slots[n - 1 - i])
        } else {
            None
        }
    }

    pub fn set(&mut self, i: u32, v: i64) {
        let n = self.slots.len();
        assert!((i as usize) < n, "store index {i} out of range");
        self.slots[n - 1 - i as usize] = v;
    }

    pub fn push(&mut self, v: i64) {
        self.slots.push(v);
    }

    pub fn pop(&mut self) -> Option<i64> {
        self.slots.pop()
    }
}

impl fmt::Display for HStore {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let v: Vec<String> = self.slots.iter().rev().map(|x| x.to_string()).collect();
        write!(f, "[{}]", v.join(", "))
    }
}

/// Translation context of a function: its parameters, the last one
/// innermost.
pub fn func_ctx(f: &Func) -> Vec<String> {
    f.params.iter().rev().cloned().collect()
}

/// Initial core store matching [`func_ctx`].
pub fn initial_hstore(ctx: &[String], sigma: &CStore) -> HStore {
    HStore::from_innermost_first(
        ctx.iter()
            .map(|x| *sigma.get(x).unwrap_or_else(|| panic!("no value for `{x}`"))),
    )
}

fn index_of(ctx: &[String], x: &str) -> u32 {
    ctx.iter()
        .position(|y| y == x)
        .unwrap_or_else(|| panic!("variable `{x}` not in scope")) as u32
}

fn translate_i(e: &IExpr, ctx: &[String]) -> CoreExpr {
    match e {
        IExpr::Lit(v) => CoreExpr::Lit(*v),
        IExpr::Var(x) => CoreExpr::Var(index_of(ctx, x)),
        IExpr::Unary(UnOp::Neg, a, loc) => CoreExpr::Unop {
            op: CoreUnop::Neg,
            arg: Box::new(translate_i(a, ctx)),
            loc: *loc,
        },
        IExpr::Binary(op, l, r, loc) => CoreExpr::Binop {
            op: CoreBinop::of_arith(*op),
            lhs: Box::new(translate_i(l, ctx)),
            rhs: Box::new(translate_i(r, ctx)),
            loc: *loc,
        },
    }
}

fn translate_b(c: &BExpr, ctx: &[String]) -> CoreExpr {
    match c {
        BExpr::Lit(b) => CoreExpr::Lit(*b as i64),
        BExpr::Cmp(op, l, r) => CoreExpr::binop(CoreBinop::of_cmp(*op), translate_i(l, ctx), translate_i(r, ctx)),
        BExpr::Not(b) => CoreExpr::unop(CoreUnop::Not, translate_b(b, ctx)),
        BExpr::And(l, r) => CoreExpr::binop(CoreBinop::And, translate_b(l, ctx), translate_b(r, ctx)),
        BExpr::Or(l, r) => CoreExpr::binop(CoreBinop::Or, translate_b(l, ctx), translate_b(r, ctx)),
    }
}

/// Translates `s` under `ctx`, which lists the in-scope variables
/// innermost first. Loop invariants are erased.
pub fn translate(s: &Stmt, ctx: &[String]) -> CoreStmt {
    match s {
        Stmt::Skip => CoreStmt::Skip,
        Stmt::Seq(a, b) => CoreStmt::seq(translate(a, ctx), translate(b, ctx)),
        Stmt::Let(x, e, body) => {
            let init = translate_i(e, ctx);
            let mut inner = ctx.to_vec();
            if mutation::active(Mutation::DeBruijnShift) {
                inner.push(x.clone());
            } else {
                inner.insert(0, x.clone());
            }
            CoreStmt::block(init, translate(body, &inner))
        }
        Stmt::Assign(x, e) => CoreStmt::Assign(index_of(ctx, x), translate_i(e, ctx)),
        Stmt::If(c, a, b) => CoreStmt::if_(translate_b(c, ctx), translate(a, ctx), translate(b, ctx)),
        Stmt::While { cond, body, .. } => CoreStmt::catch(CoreStmt::loop_(CoreStmt::seq(
            CoreStmt::if_(translate_b(cond, ctx), CoreStmt::Skip, CoreStmt::Throw(0)),
            translate(body, ctx),
        ))),
        Stmt::Return(e) => CoreStmt::Ret(translate_i(e, ctx)),
    }
}

/// Translation of a function body under its parameter context.
pub fn translate_func(f: &Func) -> CoreStmt {
    translate(&f.body, &func_ctx(f))
}

/// First position where the stores disagree, or where one of them ends.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
#[error("stores disagree at index {0}")]
pub struct StoreMismatch(pub usize);

/// `|ctx| = |sigma_h|` and `sigma_v(ctx[i]) = sigma_h[i]` for every `i`.
pub fn store_rel(sigma_v: &CStore, ctx: &[String], sigma_h: &HStore) -> Result<(), StoreMismatch> {
    let h = sigma_h.to_innermost_first();
    for (i, x) in ctx.iter().enumerate() {
        match (sigma_v.get(x), h.get(i)) {
            (Some(a), Some(b)) if a == b => {}
            _ => return Err(StoreMismatch(i)),
        }
    }
    if h.len() != ctx.len() {
        return Err(StoreMismatch(ctx.len().min(h.len())));
    }
    Ok(())
}

fn ub(kind: UbKind, loc: Loc) -> Ub {
    Ub { kind, loc }
}

/// Checked 32-bit arithmetic, written independently of the dialect
/// interpreter so the two can be compared.
fn arith(op: CoreBinop, a: i64, b: i64, loc: Loc) -> Result<i64, Ub> {
    let (a, b) = (a as i32, b as i32);
    let r = match op {
        CoreBinop::Add => a.checked_add(b),
        CoreBinop::Sub => a.checked_sub(b),
        CoreBinop::Mul => a.checked_mul(b),
        CoreBinop::Div if b == 0 => return Err(ub(UbKind::DivByZero, loc)),
        CoreBinop::Mod if b == 0 => return Err(ub(UbKind::ModByZero, loc)),
        CoreBinop::Div => a.checked_div(b),
        CoreBinop::Mod => a.checked_rem(b),
        _ => unreachable!("not arithmetic"),
    };
    r.map(i64::from).ok_or_else(|| ub(UbKind::Overflow, loc))
}

/// Evaluates `e`; comparisons and connectives yield 0 or 1.
pub fn eval_core(sigma: &HStore, e: &CoreExpr) -> Result<i64, Ub> {
    match e {
        CoreExpr::Lit(v) => Ok(*v),
        CoreExpr::Var(i) => Ok(sigma.get(*i).unwrap_or_else(|| panic!("index {i} outside store"))),
        CoreExpr::Unop { op, arg, loc } => {
            let v = eval_core(sigma, arg)?;
            match op {
                CoreUnop::Neg => (v as i32).checked_neg().map(i64::from).ok_or_else(|| ub(UbKind::Overflow, *loc)),
                CoreUnop::Not => Ok((v == 0) as i64),
            }
        }
        CoreExpr::Binop { op, lhs, rhs, loc } => {
            let a = eval_core(sigma, lhs)?;
            match op {
                CoreBinop::And if a == 0 => return Ok(0),
                CoreBinop::Or if a != 0 => return Ok(1),
                _ => {}
            }
            let b = eval_core(sigma, rhs)?;
            Ok(match op {
                CoreBinop::Add | CoreBinop::Sub | CoreBinop::Mul | CoreBinop::Div | CoreBinop::Mod => {
                    return arith(*op, a, b, *loc)
                }
                CoreBinop::Eq => (a == b) as i64,
                CoreBinop::Ne => (a != b) as i64,
                CoreBinop::Lt => (a < b) as i64,
                CoreBinop::Le => (a <= b) as i64,
                CoreBinop::Gt => (a > b) as i64,
                CoreBinop::Ge => (a >= b) as i64,
                CoreBinop::And | CoreBinop::Or => (b != 0) as i64,
            })
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum CoreOutcome {
    ONormal(HStore),
    OReturn(i64),
    OThrow(u32, HStore),
    Ub(Ub),
    FuelExhausted,
}

impl fmt::Display for CoreOutcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CoreOutcome::ONormal(s) => write!(f, "ONormal {s}"),
            CoreOutcome::OReturn(z) => write!(f, "OReturn {z}"),
            CoreOutcome::OThrow(n, s) => write!(f, "OThrow {n} {s}"),
            CoreOutcome::Ub(u) => write!(f, "{u}"),
            CoreOutcome::FuelExhausted => f.write_str("FuelExhausted"),
        }
    }
}

enum Flow {
    Normal,
    Return(i64),
    Throw(u32),
    Ub(Ub),
    Exhausted,
}

/// Whether `Catch` absorbs a throw with counter `n`.
fn caught(n: u32) -> bool {
    if mutation::active(Mutation::CatchCounter) {
        n == 1
    } else {
        n == 0
    }
}

struct Big {
    fuel: u64,
}

impl Big {
    fn tick(&mut self) -> bool {
        if self.fuel == 0 {
            return false;
        }
        self.fuel -= 1;
        true
    }

    fn exec(&mut self, sigma: &mut HStore, s: &CoreStmt) -> Flow {
        match s {
            CoreStmt::Skip => Flow::Normal,
            CoreStmt::Seq(a, b) => {
                if !self.tick() {
                    return Flow::Exhausted;
                }
                match self.exec(sigma, a) {
                    Flow::Normal => self.exec(sigma, b),
                    other => other,
                }
            }
            CoreStmt::Assign(i, e) => match eval_core(sigma, e) {
                Ok(v) => {
                    sigma.set(*i, v);
                    Flow::Normal
                }
                Err(u) => Flow::Ub(u),
            },
            CoreStmt::Block(e, body) => match eval_core(sigma, e) {
                Ok(v) => {
                    sigma.push(v);
                    let out = self.exec(sigma, body);
                    if matches!(out, Flow::Normal | Flow::Throw(_)) {
                        sigma.pop();
                    }
                    out
                }
                Err(u) => Flow::Ub(u),
            },
            CoreStmt::If(c, a, b) => match eval_core(sigma, c) {
                Ok(0) => self.exec(sigma, b),
                Ok(_) => self.exec(sigma, a),
                Err(u) => Flow::Ub(u),
            },
            CoreStmt::Loop(body) => loop {
                if !self.tick() {
                    return Flow::Exhausted;
                }
                match self.exec(sigma, body) {
                    Flow::Normal => {}
                    other => return other,
                }
            },
            CoreStmt::Throw(n) => Flow::Throw(*n),
            CoreStmt::Catch(body) => match self.exec(sigma, body) {
                Flow::Throw(n) if caught(n) => Flow::Normal,
                Flow::Throw(n) if n > 0 => Flow::Throw(n - 1),
                other => other,
            },
            CoreStmt::Ret(e) => match eval_core(sigma, e) {
                Ok(z) => Flow::Return(z),
                Err(u) => Flow::Ub(u),
            },
        }
    }
}

/// Big-step run of `s` from `sigma`. One unit of fuel is spent per `Seq`
/// step and per loop iteration.
pub fn exec_core_fuel(sigma: &HStore, s: &CoreStmt, fuel: u64) -> CoreOutcome {
    exec_core_counted(sigma, s, fuel).0
}

/// As [`exec_core_fuel`], also returning the fuel spent.
pub fn exec_core_counted(sigma: &HStore, s: &CoreStmt, fuel: u64) -> (CoreOutcome, u64) {
    let mut st = sigma.clone();
    let mut big = Big { fuel };
    let out = match big.exec(&mut st, s) {
        Flow::Normal => CoreOutcome::ONormal(st),
        Flow::Return(z) => CoreOutcome::OReturn(z),
        Flow::Throw(n) => CoreOutcome::OThrow(n, st),
        Flow::Ub(u) => CoreOutcome::Ub(u),
        Flow::Exhausted => CoreOutcome::FuelExhausted,
    };
    (out, fuel - big.fuel)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
#[error("no loop at pre-order position {0}")]
pub struct NoLoop(pub usize);

/// Replaces the `at`-th `Loop` in pre-order, `Loop s`, by `Seq(s, Loop s)`.
pub fn unroll_once(s: &CoreStmt, at: usize) -> Result<CoreStmt, NoLoop> {
    fn go(s: &CoreStmt, at: usize, seen: &mut usize) -> Option<CoreStmt> {
        Some(match s {
            CoreStmt::Loop(body) => {
                if *seen == at {
                    return Some(CoreStmt::seq((**body).clone(), s.clone()));
                }
                *seen += 1;
                CoreStmt::loop_(go(body, at, seen)?)
            }
            CoreStmt::Skip | CoreStmt::Assign(..) | CoreStmt::Throw(_) | CoreStmt::Ret(_) => return None,
            CoreStmt::Seq(a, b) => match go(a, at, seen) {
                Some(a2) => CoreStmt::seq(a2, (**b).clone()),
                None => CoreStmt::seq((**a).clone(), go(b, at, seen)?),
            },
            CoreStmt::If(c, a, b) => match go(a, at, seen) {
                Some(a2) => CoreStmt::if_(c.clone(), a2, (**b).clone()),
                None => CoreStmt::if_(c.clone(), (**a).clone(), go(b, at, seen)?),
            },
            CoreStmt::Block(e, b) => CoreStmt::block(e.clone(), go(b, at, seen)?),
            CoreStmt::Catch(b) => CoreStmt::catch(go(b, at, seen)?),
        })
    }
    go(s, at, &mut 0).ok_or(NoLoop(at))
}
