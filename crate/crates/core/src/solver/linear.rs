//! Linear forms, canonical atoms and disjunctive normal form.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, Zero};
use thiserror::Error;

use crate::symstore::{SymProp, SymTerm};
use crate::syntax::{BinOp, CmpOp, INT_MAX, INT_MIN};

/// Solver variable: a symbol of the executor or an auxiliary quotient
/// introduced while eliminating division by a literal.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Var {
    Sym(u32),
    Aux(u32),
}

impl fmt::Display for Var {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Var::Sym(n) => write!(f, "s{n}"),
            Var::Aux(n) => write!(f, "q{n}"),
        }
    }
}

impl FromStr for Var {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let (kind, digits) = s.split_at(s.len().min(1));
        let canonical = !digits.is_empty()
            && digits.bytes().all(|b| b.is_ascii_digit())
            && (digits == "0" || !digits.starts_with('0'));
        let n: u32 = match digits.parse() {
            Ok(n) if canonical => n,
            _ => return Err(format!("malformed variable `{s}`")),
        };
        match kind {
            "s" => Ok(Var::Sym(n)),
            "q" => Ok(Var::Aux(n)),
            _ => Err(format!("malformed variable `{s}`")),
        }
    }
}

impl serde::Serialize for Var {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> serde::Deserialize<'de> for Var {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// `sum(coeffs[v] * v) + constant`. Zero coefficients are never stored.
#[derive(Debug, Clone, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct LinExpr {
    pub coeffs: BTreeMap<Var, BigInt>,
    pub constant: BigInt,
}

impl LinExpr {
    pub fn constant(c: impl Into<BigInt>) -> Self {
        LinExpr {
            coeffs: BTreeMap::new(),
            constant: c.into(),
        }
    }

    pub fn var(v: Var) -> Self {
        let mut coeffs = BTreeMap::new();
        coeffs.insert(v, BigInt::one());
        LinExpr {
            coeffs,
            constant: BigInt::zero(),
        }
    }

    pub fn is_constant(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn add_scaled(&mut self, other: &LinExpr, k: &BigInt) {
        if k.is_zero() {
            return;
        }
        for (v, c) in &other.coeffs {
            let e = self.coeffs.entry(*v).or_default();
            *e += c * k;
            if e.is_zero() {
                self.coeffs.remove(v);
            }
        }
        self.constant += &other.constant * k;
    }

    pub fn plus(mut self, other: &LinExpr) -> Self {
        self.add_scaled(other, &BigInt::one());
        self
    }

    pub fn minus(mut self, other: &LinExpr) -> Self {
        self.add_scaled(other, &-BigInt::one());
        self
    }

    pub fn scaled(&self, k: &BigInt) -> Self {
        let mut out = LinExpr::default();
        out.add_scaled(self, k);
        out
    }

    pub fn offset(mut self, k: i64) -> Self {
        self.constant += k;
        self
    }

    pub fn eval(&self, model: &BTreeMap<Var, BigInt>) -> BigInt {
        let mut acc = self.constant.clone();
        for (v, c) in &self.coeffs {
            if let Some(x) = model.get(v) {
                acc += c * x;
            }
        }
        acc
    }
}

impl fmt::Display for LinExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut first = true;
        for (v, c) in &self.coeffs {
            let (neg, mag) = (c.is_negative(), c.abs());
            match (first, neg) {
                (true, true) => f.write_str("-")?,
                (true, false) => {}
                (false, true) => f.write_str(" - ")?,
                (false, false) => f.write_str(" + ")?,
            }
            if mag.is_one() {
                write!(f, "{v}")?;
            } else {
                write!(f, "{mag}*{v}")?;
            }
            first = false;
        }
        if first {
            write!(f, "{}", self.constant)
        } else if self.constant.is_negative() {
            write!(f, " - {}", self.constant.abs())
        } else if self.constant.is_positive() {
            write!(f, " + {}", self.constant)
        } else {
            Ok(())
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Rel {
    Ge,
    Eq,
}

/// `expr >= 0` or `expr = 0` in canonical form: the coefficients are
/// coprime, and for `=` the leading coefficient is positive.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct LinAtom {
    pub expr: LinExpr,
    pub rel: Rel,
}

/// Result of canonicalising a candidate atom.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Canon {
    True,
    False,
    Atom(LinAtom),
}

fn coeff_gcd(e: &LinExpr) -> BigInt {
    e.coeffs.values().fold(BigInt::zero(), |g, c| g.gcd(c))
}

impl LinAtom {
    /// Canonical form of `e >= 0`, tightened for integers.
    pub fn ge(e: LinExpr) -> Canon {
        if e.is_constant() {
            return if e.constant.is_negative() { Canon::False } else { Canon::True };
        }
        let g = coeff_gcd(&e);
        let expr = LinExpr {
            coeffs: e.coeffs.into_iter().map(|(v, c)| (v, c / &g)).collect(),
            constant: e.constant.div_floor(&g),
        };
        Canon::Atom(LinAtom { expr, rel: Rel::Ge })
    }

    /// Canonical form of `e = 0`.
    pub fn eq(e: LinExpr) -> Canon {
        if e.is_constant() {
            return if e.constant.is_zero() { Canon::True } else { Canon::False };
        }
        let mut g = coeff_gcd(&e);
        if !e.constant.is_multiple_of(&g) {
            return Canon::False;
        }
        if e.coeffs.values().next().is_some_and(|c| c.is_negative()) {
            g = -g;
        }
        let expr = LinExpr {
            coeffs: e.coeffs.into_iter().map(|(v, c)| (v, c / &g)).collect(),
            constant: e.constant / &g,
        };
        Canon::Atom(LinAtom { expr, rel: Rel::Eq })
    }

    pub fn holds(&self, model: &BTreeMap<Var, BigInt>) -> bool {
        let v = self.expr.eval(model);
        match self.rel {
            Rel::Ge => !v.is_negative(),
            Rel::Eq => v.is_zero(),
        }
    }
}

impl fmt::Display for LinAtom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let rel = match self.rel {
            Rel::Ge => ">=",
            Rel::Eq => "=",
        };
        write!(f, "{} {rel} 0", self.expr)
    }
}

/// Disjunction of conjunctions. `[[]]` is true, `[]` is false.
pub type Dnf = Vec<Vec<LinAtom>>;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum NormError {
    #[error("nonlinear arithmetic")]
    Nonlinear,
    #[error("normal form exceeds {0} cubes")]
    TooLarge(usize),
}

/// Largest disjunctive normal form the solver will build.
pub const MAX_CUBES: usize = 256;

fn dnf_true() -> Dnf {
    vec![vec![]]
}

fn dnf_atom(c: Canon) -> Dnf {
    match c {
        Canon::True => dnf_true(),
        Canon::False => vec![],
        Canon::Atom(a) => vec![vec![a]],
    }
}

pub(crate) fn dnf_and(a: Dnf, b: Dnf) -> Result<Dnf, NormError> {
    if a.len().saturating_mul(b.len()) > MAX_CUBES {
        return Err(NormError::TooLarge(MAX_CUBES));
    }
    let mut out = Vec::with_capacity(a.len() * b.len());
    for x in &a {
        for y in &b {
            let mut cube = x.clone();
            for atom in y {
                if !cube.contains(atom) {
                    cube.push(atom.clone());
                }
            }
            out.push(cube);
        }
    }
    Ok(out)
}

fn dnf_or(mut a: Dnf, b: Dnf) -> Result<Dnf, NormError> {
    a.extend(b);
    if a.len() > MAX_CUBES {
        return Err(NormError::TooLarge(MAX_CUBES));
    }
    Ok(a)
}

/// Turns terms and propositions into linear forms. With auxiliaries
/// enabled, `n / c` and `n % c` for a nonzero literal `c` are expressed via
/// a quotient variable constrained by definitional cubes.
#[derive(Debug, Clone, Default)]
pub(crate) struct Linearizer {
    allow_aux: bool,
    aux: BTreeMap<(LinExpr, BigInt), u32>,
    /// One definitional DNF per auxiliary, in creation order.
    pub defs: Vec<Dnf>,
}

impl Linearizer {
    pub fn new(allow_aux: bool) -> Self {
        Linearizer {
            allow_aux,
            ..Default::default()
        }
    }

    pub fn term(&mut self, t: &SymTerm) -> Result<LinExpr, NormError> {
        Ok(match t {
            SymTerm::Lit(v) => LinExpr::constant(*v),
            SymTerm::Sym(s) => LinExpr::var(Var::Sym(s.0)),
            SymTerm::Neg(t) => self.term(t)?.scaled(&-BigInt::one()),
            SymTerm::Bin(op, l, r) => {
                let a = self.term(l)?;
                let b = self.term(r)?;
                match op {
                    BinOp::Add => a.plus(&b),
                    BinOp::Sub => a.minus(&b),
                    BinOp::Mul if a.is_constant() => b.scaled(&a.constant),
                    BinOp::Mul if b.is_constant() => a.scaled(&b.constant),
                    BinOp::Mul => return Err(NormError::Nonlinear),
                    BinOp::Div | BinOp::Mod => {
                        if !self.allow_aux || !b.is_constant() {
                            return Err(NormError::Nonlinear);
                        }
                        self.divide(*op, a, b.constant)
                    }
                }
            }
        })
    }

    fn divide(&mut self, op: BinOp, n: LinExpr, c: BigInt) -> LinExpr {
        let is_div = op == BinOp::Div;
        if c.is_zero() {
            return if is_div { LinExpr::default() } else { n };
        }
        if n.is_constant() {
            let v = if is_div { &n.constant / &c } else { &n.constant % &c };
            return LinExpr::constant(v);
        }
        if c.abs().is_one() {
            return if is_div { n.scaled(&c) } else { LinExpr::default() };
        }
        let key = (n.clone(), c.clone());
        let id = match self.aux.get(&key) {
            Some(id) => *id,
            None => {
                let id = self.aux.len() as u32;
                self.aux.insert(key, id);
                self.defs.push(division_def(&n, &c, id));
                id
            }
        };
        let q = LinExpr::var(Var::Aux(id));
        if is_div {
            q
        } else {
            n.minus(&q.scaled(&c))
        }
    }

    /// DNF of `p` when `positive`, of `!p` otherwise.
    pub fn prop(&mut self, p: &SymProp, positive: bool) -> Result<Dnf, NormError> {
        match p {
            SymProp::True => Ok(if positive { dnf_true() } else { vec![] }),
            SymProp::False => Ok(if positive { vec![] } else { dnf_true() }),
            SymProp::Not(q) => self.prop(q, !positive),
            SymProp::And(l, r) | SymProp::Or(l, r) => {
                let a = self.prop(l, positive)?;
                let b = self.prop(r, positive)?;
                let conj = matches!(p, SymProp::And(..)) == positive;
                if conj {
                    dnf_and(a, b)
                } else {
                    dnf_or(a, b)
                }
            }
            SymProp::Cmp(op, l, r) => {
                let op = if positive { *op } else { op.negate() };
                let a = self.term(l)?;
                let b = self.term(r)?;
                Ok(cmp_dnf(op, a, b))
            }
        }
    }
}

/// `r = n - c*q` with `|r| < |c|` and `r` carrying the sign of `n`.
fn division_def(n: &LinExpr, c: &BigInt, id: u32) -> Dnf {
    let q = LinExpr::var(Var::Aux(id));
    let r = n.clone().minus(&q.scaled(c));
    let m = c.abs() - 1;
    let bound = LinExpr::constant(m);
    let nonneg = [
        LinAtom::ge(n.clone()),
        LinAtom::ge(r.clone()),
        LinAtom::ge(bound.clone().minus(&r)),
    ];
    let neg = [
        LinAtom::ge(n.scaled(&-BigInt::one()).offset(-1)),
        LinAtom::ge(bound.plus(&r)),
        LinAtom::ge(r.scaled(&-BigInt::one())),
    ];
    let mut out = Vec::new();
    for side in [nonneg, neg] {
        let mut cube = Vec::new();
        let mut feasible = true;
        for c in side {
            match c {
                Canon::True => {}
                Canon::False => feasible = false,
                Canon::Atom(a) => cube.push(a),
            }
        }
        if feasible {
            out.push(cube);
        }
    }
    out
}

fn cmp_dnf(op: CmpOp, a: LinExpr, b: LinExpr) -> Dnf {
    match op {
        CmpOp::Le => dnf_atom(LinAtom::ge(b.minus(&a))),
        CmpOp::Lt => dnf_atom(LinAtom::ge(b.minus(&a).offset(-1))),
        CmpOp::Ge => dnf_atom(LinAtom::ge(a.minus(&b))),
        CmpOp::Gt => dnf_atom(LinAtom::ge(a.minus(&b).offset(-1))),
        CmpOp::Eq => dnf_atom(LinAtom::eq(a.minus(&b))),
        CmpOp::Ne => {
            let mut out = dnf_atom(LinAtom::ge(a.clone().minus(&b).offset(-1)));
            out.extend(dnf_atom(LinAtom::ge(b.minus(&a).offset(-1))));
            out
        }
    }
}

/// Disjunctive normal form of `p` over canonical linear atoms. Division,
/// remainder and products of two non-constant factors are `Nonlinear`.
pub fn normalize(p: &SymProp) -> Result<Dnf, NormError> {
    Linearizer::new(false).prop(p, true)
}

/// `expr >= 0`, the unit of the Farkas calculus.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Row(pub LinExpr);

impl Row {
    pub fn holds(&self, model: &BTreeMap<Var, BigInt>) -> bool {
        !self.0.eval(model).is_negative()
    }
}

/// Rows of one cube: each `>=` atom gives one row, each `=` atom two
/// (`e`, `-e`), followed by `s - INT_MIN >= 0` and `INT_MAX - s >= 0` for
/// every symbol of the cube in index order.
pub fn cube_rows(cube: &[LinAtom]) -> Vec<Row> {
    let mut rows = Vec::new();
    let mut syms = std::collections::BTreeSet::new();
    for a in cube {
        for v in a.expr.coeffs.keys() {
            if let Var::Sym(_) = v {
                syms.insert(*v);
            }
        }
        rows.push(Row(a.expr.clone()));
        if a.rel == Rel::Eq {
            rows.push(Row(a.expr.scaled(&-BigInt::one())));
        }
    }
    for v in syms {
        rows.push(Row(LinExpr::var(v).offset(-INT_MIN)));
        rows.push(Row(LinExpr::constant(INT_MAX).minus(&LinExpr::var(v))));
    }
    rows
}

/// The linear problem `hyps /\ !goal`, with nonlinear hypotheses (and a
/// nonlinear goal) dropped; dropping conjuncts only weakens the formula.
#[derive(Debug, Clone)]
pub(crate) struct Problem {
    pub cubes: Vec<Vec<Row>>,
}

pub(crate) fn build_problem(hyps: &[SymProp], goal: &SymProp) -> Result<Problem, NormError> {
    let mut lz = Linearizer::new(true);
    let mut conj = dnf_true();
    let parts = hyps.iter().map(|h| (h, true)).chain(std::iter::once((goal, false)));
    for (p, positive) in parts {
        let saved = lz.clone();
        match lz.prop(p, positive) {
            Ok(d) => conj = dnf_and(conj, d)?,
            Err(NormError::Nonlinear) => lz = saved,
            Err(e) => return Err(e),
        }
        if conj.is_empty() {
            break;
        }
    }
    for def in std::mem::take(&mut lz.defs) {
        if conj.is_empty() {
            break;
        }
        conj = dnf_and(conj, def)?;
    }
    Ok(Problem {
        cubes: conj.iter().map(|c| cube_rows(c)).collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::symstore::SymTerm as T;

    fn s0() -> T {
        T::sym(0)
    }

    #[test]
    fn strict_comparison_is_tightened() {
        let d = normalize(&SymProp::cmp(CmpOp::Lt, T::Lit(0), s0())).unwrap();
        assert_eq!(d.len(), 1);
        assert_eq!(d[0].len(), 1);
        assert_eq!(d[0][0].to_string(), "s0 - 1 >= 0");
        // Brute force over a small window.
        for v in -10..=10 {
            let m: BTreeMap<Var, BigInt> = [(Var::Sym(0), BigInt::from(v))].into();
            assert_eq!(d[0][0].holds(&m), 0 < v, "s0 = {v}");
        }
    }

    #[test]
    fn constants_and_products() {
        assert_eq!(normalize(&SymProp::True).unwrap(), vec![vec![]]);
        assert_eq!(normalize(&SymProp::False).unwrap(), Dnf::new());
        let sq = SymProp::cmp(CmpOp::Ge, T::mul(s0(), s0()), T::Lit(0));
        assert_eq!(normalize(&sq), Err(NormError::Nonlinear));
        let scaled = SymProp::cmp(CmpOp::Ge, T::mul(T::Lit(3), s0()), T::Lit(1));
        assert_eq!(normalize(&scaled).unwrap()[0][0].to_string(), "s0 - 1 >= 0");
        let div = SymProp::cmp(CmpOp::Ge, T::bin(BinOp::Div, s0(), T::Lit(2)), T::Lit(1));
        assert_eq!(normalize(&div), Err(NormError::Nonlinear));
    }

    #[test]
    fn equalities_with_gcd() {
        // 2*s0 = 3 has no integer solution.
        let p = SymProp::cmp(CmpOp::Eq, T::mul(T::Lit(2), s0()), T::Lit(3));
        assert_eq!(normalize(&p).unwrap(), Dnf::new());
        let p = SymProp::cmp(CmpOp::Eq, T::Lit(4), T::mul(T::Lit(-2), s0()));
        assert_eq!(normalize(&p).unwrap()[0][0].to_string(), "s0 + 2 = 0");
    }

    #[test]
    fn disequality_splits() {
        let p = SymProp::cmp(CmpOp::Ne, s0(), T::Lit(0));
        let d = normalize(&p).unwrap();
        let text: Vec<String> = d.iter().map(|c| c[0].to_string()).collect();
        assert_eq!(text, ["s0 - 1 >= 0", "-s0 - 1 >= 0"]);
    }

    #[test]
    fn negation_is_pushed_inward() {
        let p = SymProp::not(SymProp::and(
            SymProp::cmp(CmpOp::Le, T::Lit(0), s0()),
            SymProp::cmp(CmpOp::Lt, T::Lit(0), s0()),
        ));
        let d = normalize(&p).unwrap();
        let text: Vec<String> = d.iter().map(|c| c[0].to_string()).collect();
        assert_eq!(text, ["-s0 - 1 >= 0", "-s0 >= 0"]);
    }

    #[test]
    fn division_definitions_match_truncation() {
        for c in [-7i64, -3, -2, 2, 3, 5] {
            let mut lz = Linearizer::new(true);
            let q = lz.term(&T::bin(BinOp::Div, s0(), T::Lit(c))).unwrap();
            let r = lz.term(&T::bin(BinOp::Mod, s0(), T::Lit(c))).unwrap();
            assert_eq!(lz.defs.len(), 1, "quotient is shared");
            for n in -30i64..=30 {
                let mut m: BTreeMap<Var, BigInt> = [(Var::Sym(0), BigInt::from(n))].into();
                // Exactly one quotient value satisfies the definition.
                let sols: Vec<i64> = (-40..=40)
                    .filter(|qv| {
                        m.insert(Var::Aux(0), BigInt::from(*qv));
                        lz.defs[0].iter().any(|cube| cube.iter().all(|a| a.holds(&m)))
                    })
                    .collect();
                assert_eq!(sols, vec![n / c], "n={n} c={c}");
                m.insert(Var::Aux(0), BigInt::from(n / c));
                assert_eq!(q.eval(&m), BigInt::from(n / c));
                assert_eq!(r.eval(&m), BigInt::from(n % c));
            }
        }
    }

    #[test]
    fn range_rows_follow_cube_rows() {
        let d = normalize(&SymProp::cmp(CmpOp::Eq, s0(), T::sym(2))).unwrap();
        let rows = cube_rows(&d[0]);
        let text: Vec<String> = rows.iter().map(|r| r.0.to_string()).collect();
        assert_eq!(
            text,
            [
                "s0 - s2",
                "-s0 + s2",
                "s0 + 2147483648",
                "-s0 + 2147483647",
                "s2 + 2147483648",
                "-s2 + 2147483647"
            ]
        );
    }

    #[test]
    fn var_text() {
        assert_eq!("s12".parse::<Var>().unwrap(), Var::Sym(12));
        assert_eq!("q0".parse::<Var>().unwrap(), Var::Aux(0));
        for bad in ["", "s", "x1", "s01", "s-1", "q1a"] {
            assert!(bad.parse::<Var>().is_err(), "{bad}");
        }
    }
}
