//! Concrete big-step semantics of the dialect with explicit undefined
//! behaviour and a fuel bound standing in for divergence.

use std::collections::BTreeMap;
use std::fmt;

use thiserror::Error;

use crate::symstore::{eval_b, SymStore, SymTerm, Valuation};
use crate::syntax::{in_int_range, BExpr, BinOp, Func, IExpr, Loc, Stmt, UnOp, RESULT};

/// Concrete store; every value is within the `int` range.
pub type CStore = BTreeMap<String, i64>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum UbKind {
    Overflow,
    DivByZero,
    ModByZero,
}

impl fmt::Display for UbKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            UbKind::Overflow => "Overflow",
            UbKind::DivByZero => "DivByZero",
            UbKind::ModByZero => "ModByZero",
        })
    }
}

/// Undefined behaviour at the operator located at `loc`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
#[error("UB {kind} @ {loc}")]
pub struct Ub {
    pub kind: UbKind,
    pub loc: Loc,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum VfOutcome {
    Normal(CStore),
    Return(i64, CStore),
    Ub(Ub),
    FuelExhausted,
}

impl fmt::Display for VfOutcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            VfOutcome::Normal(_) => f.write_str("Normal"),
            VfOutcome::Return(z, _) => write!(f, "Return {z}"),
            VfOutcome::Ub(ub) => write!(f, "{ub}"),
            VfOutcome::FuelExhausted => f.write_str("FuelExhausted"),
        }
    }
}

/// Result of one checked `int` operation, shared with the core IR.
pub fn int_binop(op: BinOp, a: i64, b: i64, loc: Loc) -> Result<i64, Ub> {
    let ub = |kind| Ub { kind, loc };
    let v = match op {
        BinOp::Add => a + b,
        BinOp::Sub => a - b,
        BinOp::Mul => a * b,
        BinOp::Div if b == 0 => return Err(ub(UbKind::DivByZero)),
        BinOp::Mod if b == 0 => return Err(ub(UbKind::ModByZero)),
        // Rust's `/` and `%` truncate toward zero, as C does.
        BinOp::Div => a / b,
        BinOp::Mod => {
            if !in_int_range(a / b) {
                return Err(ub(UbKind::Overflow));
            }
            a % b
        }
    };
    if in_int_range(v) {
        Ok(v)
    } else {
        Err(ub(UbKind::Overflow))
    }
}

pub fn int_neg(a: i64, loc: Loc) -> Result<i64, Ub> {
    if in_int_range(-a) {
        Ok(-a)
    } else {
        Err(Ub {
            kind: UbKind::Overflow,
            loc,
        })
    }
}

/// Evaluates `e`, checking every intermediate result against the `int`
/// range. Free variables of `e` must be bound in `sigma`.
pub fn eval_i_conc(sigma: &CStore, e: &IExpr) -> Result<i64, Ub> {
    match e {
        IExpr::Lit(v) => Ok(*v),
        IExpr::Var(x) => Ok(*sigma.get(x).unwrap_or_else(|| panic!("unbound variable `{x}`"))),
        IExpr::Unary(UnOp::Neg, a, loc) => int_neg(eval_i_conc(sigma, a)?, *loc),
        IExpr::Binary(op, l, r, loc) => {
            let a = eval_i_conc(sigma, l)?;
            let b = eval_i_conc(sigma, r)?;
            int_binop(*op, a, b, *loc)
        }
    }
}

/// Program condition with C short-circuiting.
pub fn eval_b_conc(sigma: &CStore, c: &BExpr) -> Result<bool, Ub> {
    Ok(match c {
        BExpr::Lit(b) => *b,
        BExpr::Cmp(op, l, r) => {
            let a = eval_i_conc(sigma, l)?;
            let b = eval_i_conc(sigma, r)?;
            op.holds(&a, &b)
        }
        BExpr::Not(b) => !eval_b_conc(sigma, b)?,
        BExpr::And(l, r) => eval_b_conc(sigma, l)? && eval_b_conc(sigma, r)?,
        BExpr::Or(l, r) => eval_b_conc(sigma, l)? || eval_b_conc(sigma, r)?,
    })
}

/// Annotation truth under mathematical integers with `x / 0 = 0` and
/// `x % 0 = x`; annotations never have undefined behaviour.
pub fn eval_annotation(sigma: &CStore, b: &BExpr) -> bool {
    let mut lifted = SymStore::new();
    for (x, v) in sigma {
        lifted.set(x.clone(), SymTerm::Lit(*v));
    }
    eval_b(&lifted, b)
        .unwrap_or_else(|e| panic!("{e} in annotation"))
        .eval(&Valuation::new())
}

fn diff(before: &CStore, after: &CStore) -> String {
    let mut parts = Vec::new();
    for (x, v) in after {
        match before.get(x) {
            Some(u) if u == v => {}
            Some(u) => parts.push(format!("{x}: {u} -> {v}")),
            None => parts.push(format!("+{x} = {v}")),
        }
    }
    for x in before.keys().filter(|x| !after.contains_key(*x)) {
        parts.push(format!("-{x}"));
    }
    if parts.is_empty() {
        "{}".into()
    } else {
        format!("{{{}}}", parts.join(", "))
    }
}

enum Flow {
    Normal,
    Return(i64),
    Ub(Ub),
    Exhausted,
}

struct Interp<'t> {
    fuel: u64,
    trace: Option<&'t mut Vec<String>>,
}

impl Interp<'_> {
    fn log(&mut self, rule: &str, before: &CStore, after: &CStore) {
        if let Some(t) = self.trace.as_deref_mut() {
            t.push(format!("{rule} {}", diff(before, after)));
        }
    }

    fn tick(&mut self) -> bool {
        if self.fuel == 0 {
            return false;
        }
        self.fuel -= 1;
        true
    }

    fn exec(&mut self, sigma: &mut CStore, s: &Stmt) -> Flow {
        match s {
            Stmt::Skip => {
                self.log("Skip", sigma, sigma);
                Flow::Normal
            }
            Stmt::Seq(a, b) => {
                if !self.tick() {
                    return Flow::Exhausted;
                }
                self.log("Seq", sigma, sigma);
                match self.exec(sigma, a) {
                    Flow::Normal => self.exec(sigma, b),
                    other => other,
                }
            }
            Stmt::Let(x, e, body) => {
                let v = match eval_i_conc(sigma, e) {
                    Ok(v) => v,
                    Err(ub) => return Flow::Ub(ub),
                };
                let before = sigma.clone();
                sigma.insert(x.clone(), v);
                self.log("Let", &before, sigma);
                let out = self.exec(sigma, body);
                sigma.remove(x);
                out
            }
            Stmt::Assign(x, e) => match eval_i_conc(sigma, e) {
                Ok(v) => {
                    let before = self.trace.is_some().then(|| sigma.clone());
                    sigma.insert(x.clone(), v);
                    if let Some(before) = before {
                        self.log("Assign", &before, sigma);
                    }
                    Flow::Normal
                }
                Err(ub) => Flow::Ub(ub),
            },
            Stmt::If(c, a, b) => match eval_b_conc(sigma, c) {
                Ok(true) => {
                    self.log("IfTrue", sigma, sigma);
                    self.exec(sigma, a)
                }
                Ok(false) => {
                    self.log("IfFalse", sigma, sigma);
                    self.exec(sigma, b)
                }
                Err(ub) => Flow::Ub(ub),
            },
            Stmt::While { cond, body, .. } => loop {
                match eval_b_conc(sigma, cond) {
                    Ok(true) => {
                        if !self.tick() {
                            return Flow::Exhausted;
                        }
                        self.log("WhileTrue", sigma, sigma);
                        match self.exec(sigma, body) {
                            Flow::Normal => {}
                            other => return other,
                        }
                    }
                    Ok(false) => {
                        self.log("WhileFalse", sigma, sigma);
                        return Flow::Normal;
                    }
                    Err(ub) => return Flow::Ub(ub),
                }
            },
            Stmt::Return(e) => match eval_i_conc(sigma, e) {
                Ok(z) => {
                    self.log(&format!("Return {z}"), sigma, sigma);
                    Flow::Return(z)
                }
                Err(ub) => Flow::Ub(ub),
            },
        }
    }
}

fn run(sigma: &CStore, s: &Stmt, fuel: u64, trace: Option<&mut Vec<String>>) -> VfOutcome {
    let mut st = sigma.clone();
    let mut it = Interp { fuel, trace };
    match it.exec(&mut st, s) {
        Flow::Normal => VfOutcome::Normal(st),
        Flow::Return(z) => VfOutcome::Return(z, st),
        Flow::Ub(ub) => VfOutcome::Ub(ub),
        Flow::Exhausted => VfOutcome::FuelExhausted,
    }
}

/// Runs `s` from `sigma`. One unit of fuel is spent per `Seq` step and per
/// loop iteration; a `Let` binding is dropped when its body finishes.
pub fn exec_stmt_fuel(sigma: &CStore, s: &Stmt, fuel: u64) -> VfOutcome {
    run(sigma, s, fuel, None)
}

/// As [`exec_stmt_fuel`], appending one line per rule fired: the rule name
/// and the store change it made.
pub fn exec_stmt_traced(sigma: &CStore, s: &Stmt, fuel: u64, trace: &mut Vec<String>) -> VfOutcome {
    run(sigma, s, fuel, Some(trace))
}

/// Why a concrete run contradicts a function's contract.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum OracleFailure {
    #[error("{0}")]
    Ub(Ub),
    #[error("body finished without returning")]
    MissingReturn,
    #[error("postcondition false for result {0}")]
    Postcondition(i64),
}

/// Initial store binding exactly the parameters of `f`.
pub fn initial_store(f: &Func, valuation: &BTreeMap<String, i64>) -> CStore {
    f.params
        .iter()
        .map(|x| {
            let v = *valuation.get(x).unwrap_or_else(|| panic!("no value for parameter `{x}`"));
            (x.clone(), v)
        })
        .collect()
}

pub fn pre_holds(f: &Func, valuation: &BTreeMap<String, i64>) -> bool {
    eval_annotation(&initial_store(f, valuation), &f.pre)
}

/// Checks one concrete run of `f` against its postcondition. Running out
/// of fuel passes. The caller guarantees the precondition.
pub fn func_correct_oracle(f: &Func, valuation: &BTreeMap<String, i64>, fuel: u64) -> Result<VfOutcome, OracleFailure> {
    let sigma = initial_store(f, valuation);
    let out = exec_stmt_fuel(&sigma, &f.body, fuel);
    match &out {
        VfOutcome::FuelExhausted => Ok(out),
        VfOutcome::Ub(ub) => Err(OracleFailure::Ub(*ub)),
        VfOutcome::Normal(_) => Err(OracleFailure::MissingReturn),
        VfOutcome::Return(z, _) => {
            let mut post = sigma.clone();
            post.insert(RESULT.to_string(), *z);
            if eval_annotation(&post, &f.post) {
                Ok(out)
            } else {
                Err(OracleFailure::Postcondition(*z))
            }
        }
    }
}
