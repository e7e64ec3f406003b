//! Abstract syntax of the annotated dialect.
//!
//! Arithmetic and boolean expressions are separate categories: a boolean
//! expression can only appear as a condition or inside an annotation.

use std::fmt;

/// Smallest value of the 32-bit `int` type.
pub const INT_MIN: i64 = i32::MIN as i64;
/// Largest value of the 32-bit `int` type.
pub const INT_MAX: i64 = i32::MAX as i64;

/// Name that the postcondition uses to refer to the returned value.
pub const RESULT: &str = "result";

/// Whether `v` fits the `int` type.
pub fn in_int_range(v: i64) -> bool {
    (INT_MIN..=INT_MAX).contains(&v)
}

/// Source position (1-based). Ignored by `==` so that ASTs parsed from
/// differently formatted sources compare equal.
#[derive(Debug, Clone, Copy, Default)]
pub struct Loc {
    pub line: u32,
    pub col: u32,
}

impl Loc {
    pub fn new(line: u32, col: u32) -> Self {
        Self { line, col }
    }
}

impl PartialEq for Loc {
    fn eq(&self, _: &Self) -> bool {
        true
    }
}

impl Eq for Loc {}

impl fmt::Display for Loc {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.line, self.col)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum UnOp {
    Neg,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
    Mod,
}

impl BinOp {
    pub fn symbol(self) -> &'static str {
        match self {
            BinOp::Add => "+",
            BinOp::Sub => "-",
            BinOp::Mul => "*",
            BinOp::Div => "/",
            BinOp::Mod => "%",
        }
    }

    pub(crate) fn precedence(self) -> u8 {
        match self {
            BinOp::Add | BinOp::Sub => 1,
            BinOp::Mul | BinOp::Div | BinOp::Mod => 2,
        }
    }

    pub const ALL: [BinOp; 5] = [BinOp::Add, BinOp::Sub, BinOp::Mul, BinOp::Div, BinOp::Mod];
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum CmpOp {
    Eq,
    Ne,
    Lt,
    Le,
    Gt,
    Ge,
}

impl CmpOp {
    pub fn symbol(self) -> &'static str {
        match self {
            CmpOp::Eq => "==",
            CmpOp::Ne => "!=",
            CmpOp::Lt => "<",
            CmpOp::Le => "<=",
            CmpOp::Gt => ">",
            CmpOp::Ge => ">=",
        }
    }

    /// The comparison that holds exactly when `self` does not.
    pub fn negate(self) -> CmpOp {
        match self {
            CmpOp::Eq => CmpOp::Ne,
            CmpOp::Ne => CmpOp::Eq,
            CmpOp::Lt => CmpOp::Ge,
            CmpOp::Le => CmpOp::Gt,
            CmpOp::Gt => CmpOp::Le,
            CmpOp::Ge => CmpOp::Lt,
        }
    }

    pub fn holds<T: Ord>(self, l: &T, r: &T) -> bool {
        match self {
            CmpOp::Eq => l == r,
            CmpOp::Ne => l != r,
            CmpOp::Lt => l < r,
            CmpOp::Le => l <= r,
            CmpOp::Gt => l > r,
            CmpOp::Ge => l >= r,
        }
    }

    pub const ALL: [CmpOp; 6] = [CmpOp::Eq, CmpOp::Ne, CmpOp::Lt, CmpOp::Le, CmpOp::Gt, CmpOp::Ge];
}

/// Arithmetic expression.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum IExpr {
    Lit(i64),
    Var(String),
    Unary(UnOp, Box<IExpr>, Loc),
    Binary(BinOp, Box<IExpr>, Box<IExpr>, Loc),
}

impl IExpr {
    pub fn lit(v: i64) -> Self {
        IExpr::Lit(v)
    }

    pub fn var(name: impl Into<String>) -> Self {
        IExpr::Var(name.into())
    }

    pub fn neg(e: IExpr) -> Self {
        IExpr::Unary(UnOp::Neg, Box::new(e), Loc::default())
    }

    pub fn bin(op: BinOp, l: IExpr, r: IExpr) -> Self {
        IExpr::Binary(op, Box::new(l), Box::new(r), Loc::default())
    }

    pub fn add(l: IExpr, r: IExpr) -> Self {
        Self::bin(BinOp::Add, l, r)
    }

    pub fn sub(l: IExpr, r: IExpr) -> Self {
        Self::bin(BinOp::Sub, l, r)
    }

    pub fn mul(l: IExpr, r: IExpr) -> Self {
        Self::bin(BinOp::Mul, l, r)
    }

    pub fn div(l: IExpr, r: IExpr) -> Self {
        Self::bin(BinOp::Div, l, r)
    }

    pub fn rem(l: IExpr, r: IExpr) -> Self {
        Self::bin(BinOp::Mod, l, r)
    }

    pub fn for_each_var<'a>(&'a self, f: &mut impl FnMut(&'a str)) {
        match self {
            IExpr::Lit(_) => {}
            IExpr::Var(x) => f(x),
            IExpr::Unary(_, e, _) => e.for_each_var(f),
            IExpr::Binary(_, l, r, _) => {
                l.for_each_var(f);
                r.for_each_var(f);
            }
        }
    }

    pub fn size(&self) -> usize {
        match self {
            IExpr::Lit(_) | IExpr::Var(_) => 1,
            IExpr::Unary(_, e, _) => 1 + e.size(),
            IExpr::Binary(_, l, r, _) => 1 + l.size() + r.size(),
        }
    }
}

/// Boolean expression.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum BExpr {
    Lit(bool),
    Cmp(CmpOp, IExpr, IExpr),
    Not(Box<BExpr>),
    And(Box<BExpr>, Box<BExpr>),
    Or(Box<BExpr>, Box<BExpr>),
}

impl BExpr {
    pub fn cmp(op: CmpOp, l: IExpr, r: IExpr) -> Self {
        BExpr::Cmp(op, l, r)
    }

    pub fn not(b: BExpr) -> Self {
        BExpr::Not(Box::new(b))
    }

    pub fn and(l: BExpr, r: BExpr) -> Self {
        BExpr::And(Box::new(l), Box::new(r))
    }

    pub fn or(l: BExpr, r: BExpr) -> Self {
        BExpr::Or(Box::new(l), Box::new(r))
    }

    pub fn for_each_var<'a>(&'a self, f: &mut impl FnMut(&'a str)) {
        match self {
            BExpr::Lit(_) => {}
            BExpr::Cmp(_, l, r) => {
                l.for_each_var(f);
                r.for_each_var(f);
            }
            BExpr::Not(b) => b.for_each_var(f),
            BExpr::And(l, r) | BExpr::Or(l, r) => {
                l.for_each_var(f);
                r.for_each_var(f);
            }
        }
    }
}

/// Statement. `Let` scopes its variable over `body` only.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Stmt {
    Skip,
    Seq(Box<Stmt>, Box<Stmt>),
    Let(String, IExpr, Box<Stmt>),
    Assign(String, IExpr),
    If(BExpr, Box<Stmt>, Box<Stmt>),
    While {
        cond: BExpr,
        invariant: BExpr,
        body: Box<Stmt>,
    },
    Return(IExpr),
}

impl Stmt {
    pub fn seq(a: Stmt, b: Stmt) -> Self {
        Stmt::Seq(Box::new(a), Box::new(b))
    }

    /// Right-nested sequence of `stmts`; `Skip` when empty.
    pub fn block(stmts: impl IntoIterator<Item = Stmt>) -> Self {
        let mut v: Vec<Stmt> = stmts.into_iter().collect();
        let Some(mut acc) = v.pop() else {
            return Stmt::Skip;
        };
        while let Some(s) = v.pop() {
            acc = Stmt::seq(s, acc);
        }
        acc
    }

    pub fn let_(name: impl Into<String>, init: IExpr, body: Stmt) -> Self {
        Stmt::Let(name.into(), init, Box::new(body))
    }

    pub fn assign(name: impl Into<String>, rhs: IExpr) -> Self {
        Stmt::Assign(name.into(), rhs)
    }

    pub fn if_(cond: BExpr, then: Stmt, els: Stmt) -> Self {
        Stmt::If(cond, Box::new(then), Box::new(els))
    }

    pub fn while_(cond: BExpr, invariant: BExpr, body: Stmt) -> Self {
        Stmt::While {
            cond,
            invariant,
            body: Box::new(body),
        }
    }

    /// Variables assigned anywhere inside `self`, including nested loops,
    /// minus those declared by a `Let` inside `self`.
    pub fn assigned_vars(&self) -> std::collections::BTreeSet<String> {
        fn go(s: &Stmt, bound: &mut Vec<String>, out: &mut std::collections::BTreeSet<String>) {
            match s {
                Stmt::Skip | Stmt::Return(_) => {}
                Stmt::Seq(a, b) => {
                    go(a, bound, out);
                    go(b, bound, out);
                }
                Stmt::Let(x, _, body) => {
                    bound.push(x.clone());
                    go(body, bound, out);
                    bound.pop();
                }
                Stmt::Assign(x, _) => {
                    if !bound.contains(x) {
                        out.insert(x.clone());
                    }
                }
                Stmt::If(_, a, b) => {
                    go(a, bound, out);
                    go(b, bound, out);
                }
                Stmt::While { body, .. } => go(body, bound, out),
            }
        }
        let mut out = std::collections::BTreeSet::new();
        go(self, &mut Vec::new(), &mut out);
        out
    }

    /// Number of statement nodes.
    pub fn size(&self) -> usize {
        match self {
            Stmt::Skip | Stmt::Assign(..) | Stmt::Return(_) => 1,
            Stmt::Seq(a, b) | Stmt::If(_, a, b) => 1 + a.size() + b.size(),
            Stmt::Let(_, _, b) | Stmt::While { body: b, .. } => 1 + b.size(),
        }
    }

    pub fn contains_loop(&self) -> bool {
        match self {
            Stmt::While { .. } => true,
            Stmt::Skip | Stmt::Assign(..) | Stmt::Return(_) => false,
            Stmt::Seq(a, b) | Stmt::If(_, a, b) => a.contains_loop() || b.contains_loop(),
            Stmt::Let(_, _, b) => b.contains_loop(),
        }
    }
}

/// A function with its contract.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Func {
    pub name: String,
    pub params: Vec<String>,
    pub pre: BExpr,
    pub post: BExpr,
    pub body: Stmt,
}

/// A whole program: a single function.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Program {
    pub main: Func,
}
