//! Symbolic terms, propositions, stores and path conditions.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use num_bigint::BigInt;
use num_traits::Zero;
use thiserror::Error;

use crate::syntax::{BExpr, BinOp, CmpOp, IExpr, UnOp, INT_MAX, INT_MIN};

/// Index of a fresh symbol; printed `s0, s1, ...`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct SymId(pub u32);

impl fmt::Display for SymId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "s{}", self.0)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum SymTerm {
    Lit(i64),
    Sym(SymId),
    Neg(Box<SymTerm>),
    Bin(BinOp, Box<SymTerm>, Box<SymTerm>),
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum SymProp {
    True,
    False,
    Cmp(CmpOp, SymTerm, SymTerm),
    Not(Box<SymProp>),
    And(Box<SymProp>, Box<SymProp>),
    Or(Box<SymProp>, Box<SymProp>),
}

impl SymTerm {
    pub fn sym(id: u32) -> Self {
        SymTerm::Sym(SymId(id))
    }

    /// Negation, folded when the operand is a literal.
    pub fn neg(t: SymTerm) -> Self {
        match t {
            SymTerm::Lit(v) => match v.checked_neg() {
                Some(n) => SymTerm::Lit(n),
                None => SymTerm::Neg(Box::new(SymTerm::Lit(v))),
            },
            t => SymTerm::Neg(Box::new(t)),
        }
    }

    /// Binary node, folded when both operands are literals, the operation
    /// is defined and the result fits an `i64`.
    pub fn bin(op: BinOp, l: SymTerm, r: SymTerm) -> Self {
        if let (SymTerm::Lit(a), SymTerm::Lit(b)) = (&l, &r) {
            let folded = match op {
                BinOp::Add => a.checked_add(*b),
                BinOp::Sub => a.checked_sub(*b),
                BinOp::Mul => a.checked_mul(*b),
                BinOp::Div if *b != 0 => a.checked_div(*b),
                BinOp::Mod if *b != 0 => a.checked_rem(*b),
                BinOp::Div | BinOp::Mod => None,
            };
            if let Some(v) = folded {
                return SymTerm::Lit(v);
            }
        }
        SymTerm::Bin(op, Box::new(l), Box::new(r))
    }

    pub fn add(l: SymTerm, r: SymTerm) -> Self {
        Self::bin(BinOp::Add, l, r)
    }

    pub fn sub(l: SymTerm, r: SymTerm) -> Self {
        Self::bin(BinOp::Sub, l, r)
    }

    pub fn mul(l: SymTerm, r: SymTerm) -> Self {
        Self::bin(BinOp::Mul, l, r)
    }

    pub fn symbols(&self, out: &mut BTreeSet<SymId>) {
        match self {
            SymTerm::Lit(_) => {}
            SymTerm::Sym(s) => {
                out.insert(*s);
            }
            SymTerm::Neg(t) => t.symbols(out),
            SymTerm::Bin(_, l, r) => {
                l.symbols(out);
                r.symbols(out);
            }
        }
    }

    /// Value under `nu` with total division: `x / 0 = 0`, `x % 0 = x`.
    /// Symbols missing from `nu` evaluate to 0.
    pub fn eval(&self, nu: &Valuation) -> BigInt {
        match self {
            SymTerm::Lit(v) => BigInt::from(*v),
            SymTerm::Sym(s) => nu.get(s).cloned().unwrap_or_default(),
            SymTerm::Neg(t) => -t.eval(nu),
            SymTerm::Bin(op, l, r) => {
                let a = l.eval(nu);
                let b = r.eval(nu);
                total_binop(*op, a, b)
            }
        }
    }

    pub fn size(&self) -> usize {
        match self {
            SymTerm::Lit(_) | SymTerm::Sym(_) => 1,
            SymTerm::Neg(t) => 1 + t.size(),
            SymTerm::Bin(_, l, r) => 1 + l.size() + r.size(),
        }
    }
}

/// Arithmetic with truncating division, total at zero.
pub fn total_binop(op: BinOp, a: BigInt, b: BigInt) -> BigInt {
    match op {
        BinOp::Add => a + b,
        BinOp::Sub => a - b,
        BinOp::Mul => a * b,
        BinOp::Div if b.is_zero() => BigInt::zero(),
        BinOp::Mod if b.is_zero() => a,
        BinOp::Div => a / b,
        BinOp::Mod => a % b,
    }
}

/// Assignment of integers to symbols.
pub type Valuation = BTreeMap<SymId, BigInt>;

impl SymProp {
    pub fn cmp(op: CmpOp, l: SymTerm, r: SymTerm) -> Self {
        SymProp::Cmp(op, l, r)
    }

    pub fn not(p: SymProp) -> Self {
        SymProp::Not(Box::new(p))
    }

    pub fn and(l: SymProp, r: SymProp) -> Self {
        SymProp::And(Box::new(l), Box::new(r))
    }

    pub fn or(l: SymProp, r: SymProp) -> Self {
        SymProp::Or(Box::new(l), Box::new(r))
    }

    /// `INT_MIN <= t && t <= INT_MAX`.
    pub fn in_range(t: &SymTerm) -> Self {
        SymProp::and(
            SymProp::cmp(CmpOp::Le, SymTerm::Lit(INT_MIN), t.clone()),
            SymProp::cmp(CmpOp::Le, t.clone(), SymTerm::Lit(INT_MAX)),
        )
    }

    pub fn symbols(&self, out: &mut BTreeSet<SymId>) {
        match self {
            SymProp::True | SymProp::False => {}
            SymProp::Cmp(_, l, r) => {
                l.symbols(out);
                r.symbols(out);
            }
            SymProp::Not(p) => p.symbols(out),
            SymProp::And(l, r) | SymProp::Or(l, r) => {
                l.symbols(out);
                r.symbols(out);
            }
        }
    }

    pub fn eval(&self, nu: &Valuation) -> bool {
        match self {
            SymProp::True => true,
            SymProp::False => false,
            SymProp::Cmp(op, l, r) => op.holds(&l.eval(nu), &r.eval(nu)),
            SymProp::Not(p) => !p.eval(nu),
            SymProp::And(l, r) => l.eval(nu) && r.eval(nu),
            SymProp::Or(l, r) => l.eval(nu) || r.eval(nu),
        }
    }
}

/// Canonical, fully parenthesised text.
impl fmt::Display for SymTerm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SymTerm::Lit(v) => write!(f, "{v}"),
            SymTerm::Sym(s) => write!(f, "{s}"),
            SymTerm::Neg(t) => write!(f, "(- {t})"),
            SymTerm::Bin(op, l, r) => write!(f, "({l} {} {r})", op.symbol()),
        }
    }
}

impl fmt::Display for SymProp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SymProp::True => f.write_str("true"),
            SymProp::False => f.write_str("false"),
            SymProp::Cmp(op, l, r) => write!(f, "({l} {} {r})", op.symbol()),
            SymProp::Not(p) => write!(f, "(!{p})"),
            SymProp::And(l, r) => write!(f, "({l} && {r})"),
            SymProp::Or(l, r) => write!(f, "({l} || {r})"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("malformed symbolic text at byte {pos}: {message}")]
pub struct TextError {
    pub pos: usize,
    pub message: String,
}

impl std::str::FromStr for SymTerm {
    type Err = TextError;

    fn from_str(s: &str) -> Result<Self, TextError> {
        let mut r = TextReader { s: s.as_bytes(), pos: 0 };
        let t = r.term()?;
        r.end()?;
        Ok(t)
    }
}

impl std::str::FromStr for SymProp {
    type Err = TextError;

    fn from_str(s: &str) -> Result<Self, TextError> {
        let mut r = TextReader { s: s.as_bytes(), pos: 0 };
        let p = r.prop()?;
        r.end()?;
        Ok(p)
    }
}

/// Reader for the canonical text. Accepts exactly what `Display` prints.
struct TextReader<'a> {
    s: &'a [u8],
    pos: usize,
}

enum Node {
    T(SymTerm),
    P(SymProp),
}

impl TextReader<'_> {
    fn err<T>(&self, message: impl Into<String>) -> Result<T, TextError> {
        Err(TextError {
            pos: self.pos,
            message: message.into(),
        })
    }

    fn eat(&mut self, lit: &str) -> bool {
        if self.s[self.pos..].starts_with(lit.as_bytes()) {
            self.pos += lit.len();
            true
        } else {
            false
        }
    }

    fn expect(&mut self, lit: &str) -> Result<(), TextError> {
        if self.eat(lit) {
            Ok(())
        } else {
            self.err(format!("expected `{lit}`"))
        }
    }

    fn end(&self) -> Result<(), TextError> {
        if self.pos == self.s.len() {
            Ok(())
        } else {
            self.err("trailing input")
        }
    }

    fn digits(&mut self) -> Result<&str, TextError> {
        let start = self.pos;
        while self.pos < self.s.len() && self.s[self.pos].is_ascii_digit() {
            self.pos += 1;
        }
        if start == self.pos {
            return self.err("expected digits");
        }
        // Leading zeros are not canonical.
        if self.s[start] == b'0' && self.pos - start > 1 {
            return self.err("leading zero");
        }
        Ok(std::str::from_utf8(&self.s[start..self.pos]).expect("ascii digits"))
    }

    fn term(&mut self) -> Result<SymTerm, TextError> {
        match self.node()? {
            Node::T(t) => Ok(t),
            Node::P(_) => self.err("expected a term"),
        }
    }

    fn prop(&mut self) -> Result<SymProp, TextError> {
        match self.node()? {
            Node::P(p) => Ok(p),
            Node::T(_) => self.err("expected a proposition"),
        }
    }

    fn node(&mut self) -> Result<Node, TextError> {
        if self.eat("true") {
            return Ok(Node::P(SymProp::True));
        }
        if self.eat("false") {
            return Ok(Node::P(SymProp::False));
        }
        if self.eat("s") {
            let d = self.digits()?;
            return match d.parse::<u32>() {
                Ok(n) => Ok(Node::T(SymTerm::Sym(SymId(n)))),
                Err(_) => self.err("symbol index out of range"),
            };
        }
        if self.eat("(") {
            if self.eat("- ") {
                let t = self.term()?;
                self.expect(")")?;
                return Ok(Node::T(SymTerm::Neg(Box::new(t))));
            }
            if self.eat("!") {
                let p = self.prop()?;
                self.expect(")")?;
                return Ok(Node::P(SymProp::Not(Box::new(p))));
            }
            let l = self.node()?;
            self.expect(" ")?;
            let start = self.pos;
            while self.pos < self.s.len() && self.s[self.pos] != b' ' {
                self.pos += 1;
            }
            let op = std::str::from_utf8(&self.s[start..self.pos]).unwrap_or("");
            let op = op.to_string();
            self.expect(" ")?;
            let r = self.node()?;
            self.expect(")")?;
            if let Some(b) = BinOp::ALL.iter().find(|b| b.symbol() == op) {
                return match (l, r) {
                    (Node::T(l), Node::T(r)) => Ok(Node::T(SymTerm::Bin(*b, Box::new(l), Box::new(r)))),
                    _ => self.err("arithmetic on a proposition"),
                };
            }
            if let Some(c) = CmpOp::ALL.iter().find(|c| c.symbol() == op) {
                return match (l, r) {
                    (Node::T(l), Node::T(r)) => Ok(Node::P(SymProp::Cmp(*c, l, r))),
                    _ => self.err("comparison of propositions"),
                };
            }
            let (Node::P(l), Node::P(r)) = (l, r) else {
                return self.err("connective over terms");
            };
            return match op.as_str() {
                "&&" => Ok(Node::P(SymProp::and(l, r))),
                "||" => Ok(Node::P(SymProp::or(l, r))),
                _ => self.err(format!("unknown operator `{op}`")),
            };
        }
        let neg = self.eat("-");
        let d = self.digits()?;
        let text = if neg { format!("-{d}") } else { d.to_string() };
        if text == "-0" {
            return self.err("negative zero");
        }
        match text.parse::<i64>() {
            Ok(v) => Ok(Node::T(SymTerm::Lit(v))),
            Err(_) => self.err("literal out of range"),
        }
    }
}

/// Mapping from in-scope program variables to symbolic terms.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct SymStore {
    map: BTreeMap<String, SymTerm>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("unbound variable `{0}`")]
pub struct UnboundVar(pub String);

impl SymStore {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn get(&self, x: &str) -> Option<&SymTerm> {
        self.map.get(x)
    }

    pub fn set(&mut self, x: impl Into<String>, t: SymTerm) {
        self.map.insert(x.into(), t);
    }

    pub fn remove(&mut self, x: &str) -> Option<SymTerm> {
        self.map.remove(x)
    }

    pub fn contains(&self, x: &str) -> bool {
        self.map.contains_key(x)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&String, &SymTerm)> {
        self.map.iter()
    }

    pub fn len(&self) -> usize {
        self.map.len()
    }

    pub fn is_empty(&self) -> bool {
        self.map.is_empty()
    }
}

/// Substitutes store bindings into `e`, folding literal-only nodes.
pub fn eval_i(sigma: &SymStore, e: &IExpr) -> Result<SymTerm, UnboundVar> {
    Ok(match e {
        IExpr::Lit(v) => SymTerm::Lit(*v),
        IExpr::Var(x) => sigma.get(x).cloned().ok_or_else(|| UnboundVar(x.clone()))?,
        IExpr::Unary(UnOp::Neg, e, _) => SymTerm::neg(eval_i(sigma, e)?),
        IExpr::Binary(op, l, r, _) => SymTerm::bin(*op, eval_i(sigma, l)?, eval_i(sigma, r)?),
    })
}

pub fn eval_b(sigma: &SymStore, b: &BExpr) -> Result<SymProp, UnboundVar> {
    Ok(match b {
        BExpr::Lit(true) => SymProp::True,
        BExpr::Lit(false) => SymProp::False,
        BExpr::Cmp(op, l, r) => SymProp::Cmp(*op, eval_i(sigma, l)?, eval_i(sigma, r)?),
        BExpr::Not(b) => SymProp::not(eval_b(sigma, b)?),
        BExpr::And(l, r) => SymProp::and(eval_b(sigma, l)?, eval_b(sigma, r)?),
        BExpr::Or(l, r) => SymProp::or(eval_b(sigma, l)?, eval_b(sigma, r)?),
    })
}

/// Assumptions in arrival order. Never holds a syntactic `True`.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct PathCond(Vec<SymProp>);

impl PathCond {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, p: SymProp) {
        if p != SymProp::True {
            self.0.push(p);
        }
    }

    pub fn truncate(&mut self, len: usize) {
        self.0.truncate(len);
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[SymProp] {
        &self.0
    }

    pub fn into_vec(self) -> Vec<SymProp> {
        self.0
    }
}

impl FromIterator<SymProp> for PathCond {
    fn from_iter<I: IntoIterator<Item = SymProp>>(iter: I) -> Self {
        let mut pc = PathCond::new();
        for p in iter {
            pc.push(p);
        }
        pc
    }
}

/// Source of fresh symbols for one symbolic-execution run.
#[derive(Debug, Clone, Default)]
pub struct FreshCounter {
    next: u32,
}

impl FreshCounter {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn fresh(&mut self) -> SymId {
        let s = SymId(self.next);
        self.next += 1;
        s
    }

    pub fn peek(&self) -> u32 {
        self.next
    }
}

/// True when `v` is within the `int` range.
pub fn big_in_range(v: &BigInt) -> bool {
    *v >= BigInt::from(INT_MIN) && *v <= BigInt::from(INT_MAX)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn x_store(t: SymTerm) -> SymStore {
        let mut s = SymStore::new();
        s.set("x", t);
        s
    }

    #[test]
    fn eval_i_examples() {
        let sigma = x_store(SymTerm::sym(0));
        let e = IExpr::sub(IExpr::var("x"), IExpr::lit(1));
        assert_eq!(
            eval_i(&sigma, &e).unwrap(),
            SymTerm::Bin(BinOp::Sub, Box::new(SymTerm::sym(0)), Box::new(SymTerm::Lit(1)))
        );
        assert_eq!(eval_i(&SymStore::new(), &IExpr::lit(32767)).unwrap(), SymTerm::Lit(32767));
        let sq = IExpr::add(IExpr::mul(IExpr::var("x"), IExpr::var("x")), IExpr::lit(1));
        assert_eq!(eval_i(&x_store(SymTerm::Lit(3)), &sq).unwrap(), SymTerm::Lit(10));
        assert_eq!(
            eval_i(&SymStore::new(), &IExpr::var("y")),
            Err(UnboundVar("y".into()))
        );
    }

    #[test]
    fn eval_b_examples() {
        let sigma = x_store(SymTerm::sym(0));
        let lt = BExpr::cmp(CmpOp::Lt, IExpr::lit(0), IExpr::var("x"));
        let atom = SymProp::cmp(CmpOp::Lt, SymTerm::Lit(0), SymTerm::sym(0));
        assert_eq!(eval_b(&sigma, &lt).unwrap(), atom);
        assert_eq!(eval_b(&SymStore::new(), &BExpr::Lit(true)).unwrap(), SymProp::True);
        assert_eq!(eval_b(&sigma, &BExpr::not(lt)).unwrap(), SymProp::not(atom));
    }

    #[test]
    fn division_by_zero_is_not_folded() {
        let t = SymTerm::bin(BinOp::Div, SymTerm::Lit(4), SymTerm::Lit(0));
        assert!(matches!(t, SymTerm::Bin(BinOp::Div, ..)));
        let t = SymTerm::bin(BinOp::Mod, SymTerm::Lit(4), SymTerm::Lit(0));
        assert!(matches!(t, SymTerm::Bin(BinOp::Mod, ..)));
        assert_eq!(SymTerm::bin(BinOp::Div, SymTerm::Lit(-7), SymTerm::Lit(2)), SymTerm::Lit(-3));
        assert_eq!(SymTerm::bin(BinOp::Mod, SymTerm::Lit(-7), SymTerm::Lit(2)), SymTerm::Lit(-1));
    }

    #[test]
    fn i64_overflow_is_not_folded() {
        let t = SymTerm::mul(SymTerm::Lit(i64::MAX), SymTerm::Lit(2));
        assert!(matches!(t, SymTerm::Bin(BinOp::Mul, ..)));
        assert_eq!(t.eval(&Valuation::new()), BigInt::from(i64::MAX) * 2);
        assert!(matches!(SymTerm::neg(SymTerm::Lit(i64::MIN)), SymTerm::Neg(_)));
    }

    #[test]
    fn path_condition_drops_true() {
        let mut pc = PathCond::new();
        pc.push(SymProp::True);
        pc.push(SymProp::False);
        pc.push(SymProp::False);
        assert_eq!(pc.as_slice(), &[SymProp::False, SymProp::False]);
    }

    #[test]
    fn fresh_counter_increases() {
        let mut c = FreshCounter::new();
        assert_eq!(c.fresh(), SymId(0));
        assert_eq!(c.fresh(), SymId(1));
        assert_eq!(c.peek(), 2);
    }

    #[test]
    fn canonical_text() {
        let t = SymTerm::sub(SymTerm::sym(0), SymTerm::Lit(1));
        assert_eq!(t.to_string(), "(s0 - 1)");
        let p = SymProp::and(
            SymProp::cmp(CmpOp::Le, SymTerm::Lit(0), t.clone()),
            SymProp::not(SymProp::cmp(CmpOp::Lt, SymTerm::Lit(-3), SymTerm::Neg(Box::new(t)))),
        );
        assert_eq!(p.to_string(), "((0 <= (s0 - 1)) && (!(-3 < (- (s0 - 1)))))");
        assert_eq!(p.to_string().parse::<SymProp>().unwrap(), p);
    }

    #[test]
    fn text_rejects_noise() {
        for bad in ["(s0 - 1", "s", "(s0 -1)", "01", "-0", "(true &&false)", "(1 < 2) ", "(1 << 2)", "(true < 1)", "((1 + 2) && true)", "(-5)"] {
            assert!(bad.parse::<SymProp>().is_err() || bad.parse::<SymTerm>().is_err(), "{bad}");
        }
        assert!("(1 <= 2)".parse::<SymProp>().is_ok());
    }

    fn arb_term() -> impl Strategy<Value = SymTerm> {
        let leaf = prop_oneof![
            (-100i64..100).prop_map(SymTerm::Lit),
            Just(SymTerm::Lit(i64::MIN)),
            (0u32..4).prop_map(SymTerm::sym),
        ];
        leaf.prop_recursive(4, 24, 2, |inner| {
            prop_oneof![
                inner.clone().prop_map(|t| SymTerm::Neg(Box::new(t))),
                (0usize..5, inner.clone(), inner)
                    .prop_map(|(op, l, r)| SymTerm::Bin(BinOp::ALL[op], Box::new(l), Box::new(r))),
            ]
        })
    }

    fn arb_prop() -> impl Strategy<Value = SymProp> {
        let leaf = prop_oneof![
            Just(SymProp::True),
            Just(SymProp::False),
            (0usize..6, arb_term(), arb_term()).prop_map(|(op, l, r)| SymProp::Cmp(CmpOp::ALL[op], l, r)),
        ];
        leaf.prop_recursive(3, 16, 2, |inner| {
            prop_oneof![
                inner.clone().prop_map(SymProp::not),
                (inner.clone(), inner.clone()).prop_map(|(l, r)| SymProp::and(l, r)),
                (inner.clone(), inner).prop_map(|(l, r)| SymProp::or(l, r)),
            ]
        })
    }

    /// Rebuilds `t` through the folding constructors.
    fn refold(t: &SymTerm) -> SymTerm {
        match t {
            SymTerm::Lit(_) | SymTerm::Sym(_) => t.clone(),
            SymTerm::Neg(t) => SymTerm::neg(refold(t)),
            SymTerm::Bin(op, l, r) => SymTerm::bin(*op, refold(l), refold(r)),
        }
    }

    proptest! {
        #[test]
        fn text_round_trips(p in arb_prop()) {
            prop_assert_eq!(p.to_string().parse::<SymProp>().unwrap(), p);
        }

        #[test]
        fn folding_preserves_value(t in arb_term(), vals in proptest::collection::vec(-50i64..50, 4)) {
            let nu: Valuation = vals.iter().enumerate().map(|(i, v)| (SymId(i as u32), BigInt::from(*v))).collect();
            prop_assert_eq!(refold(&t).eval(&nu), t.eval(&nu));
        }
    }
}
