//! Symbolic execution of annotated functions into SEP trees, and
//! verification of the resulting obligations.

use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use crate::mutation::{self, Mutation};
use crate::solver::{self, Decision, Witness};
use crate::symstore::{eval_b, FreshCounter, PathCond, SymId, SymProp, SymStore, SymTerm, Valuation};
use crate::syntax::{simplify, BExpr, BinOp, CmpOp, Func, IExpr, Loc, Stmt, UnOp, INT_MIN, RESULT};

/// Why an `Assert` node exists.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ObligationKind {
    Overflow,
    DivisorNonZero,
    InvariantEntry,
    InvariantPreserved,
    Postcondition,
    MissingReturn,
}

impl ObligationKind {
    pub const ALL: [ObligationKind; 6] = [
        ObligationKind::Overflow,
        ObligationKind::DivisorNonZero,
        ObligationKind::InvariantEntry,
        ObligationKind::InvariantPreserved,
        ObligationKind::Postcondition,
        ObligationKind::MissingReturn,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ObligationKind::Overflow => "overflow",
            ObligationKind::DivisorNonZero => "divisor-nonzero",
            ObligationKind::InvariantEntry => "invariant-entry",
            ObligationKind::InvariantPreserved => "invariant-preserved",
            ObligationKind::Postcondition => "postcondition",
            ObligationKind::MissingReturn => "missing-return",
        }
    }
}

impl fmt::Display for ObligationKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ObligationKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        ObligationKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| format!("unknown obligation kind `{s}`"))
    }
}

/// Symbolic execution proposition. Every node except `Branch` and `Done`
/// has exactly one successor.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SepNode {
    Assume {
        prop: SymProp,
        rest: Box<SepNode>,
    },
    Assert {
        prop: SymProp,
        kind: ObligationKind,
        loc: Option<Loc>,
        rest: Box<SepNode>,
    },
    /// Binds one fresh symbol per listed variable; never empty.
    Fresh {
        bindings: Vec<(String, SymId)>,
        rest: Box<SepNode>,
    },
    Branch {
        left: Box<SepNode>,
        right: Box<SepNode>,
    },
    Done,
}

impl SepNode {
    /// Number of nodes, counting `Done` leaves.
    pub fn size(&self) -> usize {
        let mut n = 0;
        let mut stack = vec![self];
        while let Some(t) = stack.pop() {
            n += 1;
            match t {
                SepNode::Assume { rest, .. } | SepNode::Assert { rest, .. } | SepNode::Fresh { rest, .. } => {
                    stack.push(rest)
                }
                SepNode::Branch { left, right } => {
                    stack.push(right);
                    stack.push(left);
                }
                SepNode::Done => {}
            }
        }
        n
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Side {
    Left,
    Right,
}

/// Address of a node: the branch choices from the root, then the number of
/// single-successor nodes to skip after the last choice.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct NodePath {
    pub branches: Vec<Side>,
    pub step: usize,
}

/// `LR/3`; the root segment is `/3`.
impl fmt::Display for NodePath {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for s in &self.branches {
            f.write_str(match s {
                Side::Left => "L",
                Side::Right => "R",
            })?;
        }
        write!(f, "/{}", self.step)
    }
}

impl FromStr for NodePath {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let bad = || format!("malformed node path `{s}`");
        let (dirs, step) = s.split_once('/').ok_or_else(bad)?;
        let branches = dirs
            .chars()
            .map(|c| match c {
                'L' => Ok(Side::Left),
                'R' => Ok(Side::Right),
                _ => Err(bad()),
            })
            .collect::<Result<_, _>>()?;
        if step.is_empty() || !step.bytes().all(|b| b.is_ascii_digit()) || (step.len() > 1 && step.starts_with('0')) {
            return Err(bad());
        }
        Ok(NodePath {
            branches,
            step: step.parse().map_err(|_| bad())?,
        })
    }
}

impl serde::Serialize for NodePath {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> serde::Deserialize<'de> for NodePath {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        String::deserialize(d)?.parse().map_err(serde::de::Error::custom)
    }
}

/// One `Assert` node with the assumptions on its root path.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Obligation {
    pub path: NodePath,
    pub hypotheses: PathCond,
    pub goal: SymProp,
    pub kind: ObligationKind,
    pub loc: Option<Loc>,
}

impl fmt::Display for Obligation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}] {} {{", self.path, self.kind)?;
        for (i, h) in self.hypotheses.as_slice().iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            write!(f, "{h}")?;
        }
        write!(f, "}} |= {}", self.goal)?;
        if let Some(loc) = self.loc {
            write!(f, " @ {loc}")?;
        }
        Ok(())
    }
}

/// Single-successor node awaiting its continuation.
enum Header {
    Assume(SymProp),
    Assert(SymProp, ObligationKind, Option<Loc>),
    Fresh(Vec<(String, SymId)>),
}

fn close(prefix: Vec<Header>, tail: SepNode) -> SepNode {
    prefix.into_iter().rev().fold(tail, |rest, h| {
        let rest = Box::new(rest);
        match h {
            Header::Assume(prop) => SepNode::Assume { prop, rest },
            Header::Assert(prop, kind, loc) => SepNode::Assert { prop, kind, loc, rest },
            Header::Fresh(bindings) => SepNode::Fresh { bindings, rest },
        }
    })
}

#[derive(Clone, Copy)]
enum Frame<'a> {
    Exec(&'a Stmt),
    /// Leaves the scope of a `Let`.
    Pop(&'a str),
    /// End of a loop body: re-establish the invariant and stop.
    LoopEnd(&'a BExpr),
}

fn guarded(guard: &Option<SymProp>, goal: SymProp) -> SymProp {
    match guard {
        None => goal,
        Some(g) => SymProp::or(SymProp::not(g.clone()), goal),
    }
}

fn conj(guard: &Option<SymProp>, p: SymProp) -> Option<SymProp> {
    Some(match guard {
        None => p,
        Some(g) => SymProp::and(g.clone(), p),
    })
}

struct Executor<'a> {
    post: &'a BExpr,
    /// Parameters at entry; the postcondition reads these, not their
    /// values at the return.
    entry: SymStore,
    fresh: FreshCounter,
}

impl<'a> Executor<'a> {
    /// Symbolic value of `e`, emitting its arithmetic-safety obligations in
    /// evaluation order. Obligations under `guard` only need to hold when
    /// the guard does.
    fn iexpr(&self, sigma: &SymStore, e: &IExpr, guard: &Option<SymProp>, out: &mut Vec<Header>) -> SymTerm {
        match e {
            IExpr::Lit(v) => SymTerm::Lit(*v),
            IExpr::Var(x) => sigma
                .get(x)
                .cloned()
                .unwrap_or_else(|| panic!("unbound variable `{x}` in a well-formed function")),
            IExpr::Unary(UnOp::Neg, a, loc) => {
                let t = SymTerm::neg(self.iexpr(sigma, a, guard, out));
                if !mutation::active(Mutation::DropOverflowCheck) {
                    let goal = guarded(guard, SymProp::in_range(&t));
                    out.push(Header::Assert(goal, ObligationKind::Overflow, Some(*loc)));
                }
                t
            }
            IExpr::Binary(op, l, r, loc) => {
                let a = self.iexpr(sigma, l, guard, out);
                let b = self.iexpr(sigma, r, guard, out);
                match op {
                    BinOp::Add | BinOp::Sub | BinOp::Mul => {
                        let t = SymTerm::bin(*op, a, b);
                        if !mutation::active(Mutation::DropOverflowCheck) {
                            let goal = guarded(guard, SymProp::in_range(&t));
                            out.push(Header::Assert(goal, ObligationKind::Overflow, Some(*loc)));
                        }
                        t
                    }
                    BinOp::Div | BinOp::Mod => {
                        let nonzero = SymProp::cmp(CmpOp::Ne, b.clone(), SymTerm::Lit(0));
                        out.push(Header::Assert(guarded(guard, nonzero), ObligationKind::DivisorNonZero, Some(*loc)));
                        // With in-range operands and a nonzero divisor, the
                        // only unrepresentable quotient is INT_MIN / -1.
                        let fits = SymProp::or(
                            SymProp::cmp(CmpOp::Ne, a.clone(), SymTerm::Lit(INT_MIN)),
                            SymProp::cmp(CmpOp::Ne, b.clone(), SymTerm::Lit(-1)),
                        );
                        out.push(Header::Assert(guarded(guard, fits), ObligationKind::Overflow, Some(*loc)));
                        SymTerm::bin(*op, a, b)
                    }
                }
            }
        }
    }

    /// Symbolic value of a program condition with its safety obligations.
    /// The right operand of `&&` and `||` is guarded by short-circuiting.
    fn bexpr(&self, sigma: &SymStore, c: &BExpr, guard: &Option<SymProp>, out: &mut Vec<Header>) -> SymProp {
        match c {
            BExpr::Lit(true) => SymProp::True,
            BExpr::Lit(false) => SymProp::False,
            BExpr::Cmp(op, l, r) => {
                let a = self.iexpr(sigma, l, guard, out);
                let b = self.iexpr(sigma, r, guard, out);
                SymProp::cmp(*op, a, b)
            }
            BExpr::Not(b) => SymProp::not(self.bexpr(sigma, b, guard, out)),
            BExpr::And(l, r) => {
                let a = self.bexpr(sigma, l, guard, out);
                let b = self.bexpr(sigma, r, &conj(guard, a.clone()), out);
                SymProp::and(a, b)
            }
            BExpr::Or(l, r) => {
                let a = self.bexpr(sigma, l, guard, out);
                let b = self.bexpr(sigma, r, &conj(guard, SymProp::not(a.clone())), out);
                SymProp::or(a, b)
            }
        }
    }

    fn annotation(sigma: &SymStore, b: &BExpr) -> SymProp {
        eval_b(sigma, b).unwrap_or_else(|e| panic!("{e} in a well-formed annotation"))
    }

    fn run(&mut self, mut sigma: SymStore, mut k: Vec<Frame<'a>>) -> SepNode {
        let mut out = Vec::new();
        loop {
            let Some(frame) = k.pop() else {
                out.push(Header::Assert(SymProp::False, ObligationKind::MissingReturn, None));
                return close(out, SepNode::Done);
            };
            let s = match frame {
                Frame::Exec(s) => s,
                Frame::Pop(x) => {
                    sigma.remove(x);
                    continue;
                }
                Frame::LoopEnd(inv) => {
                    let p = Self::annotation(&sigma, inv);
                    out.push(Header::Assert(p, ObligationKind::InvariantPreserved, None));
                    return close(out, SepNode::Done);
                }
            };
            match s {
                Stmt::Skip => {}
                Stmt::Seq(a, b) => {
                    k.push(Frame::Exec(b));
                    k.push(Frame::Exec(a));
                }
                Stmt::Let(x, e, body) => {
                    let t = self.iexpr(&sigma, e, &None, &mut out);
                    sigma.set(x.clone(), t);
                    k.push(Frame::Pop(x));
                    k.push(Frame::Exec(body));
                }
                Stmt::Assign(x, e) => {
                    let t = self.iexpr(&sigma, e, &None, &mut out);
                    sigma.set(x.clone(), t);
                }
                Stmt::If(c, a, b) => {
                    let p = self.bexpr(&sigma, c, &None, &mut out);
                    let mut kl = k.clone();
                    kl.push(Frame::Exec(a));
                    let left = close(vec![Header::Assume(p.clone())], self.run(sigma.clone(), kl));
                    k.push(Frame::Exec(b));
                    let right = close(vec![Header::Assume(SymProp::not(p))], self.run(sigma, k));
                    return close(
                        out,
                        SepNode::Branch {
                            left: Box::new(left),
                            right: Box::new(right),
                        },
                    );
                }
                Stmt::While { cond, invariant, body } => {
                    out.push(Header::Assert(
                        Self::annotation(&sigma, invariant),
                        ObligationKind::InvariantEntry,
                        None,
                    ));
                    let mut havoc: Vec<String> = body.assigned_vars().into_iter().collect();
                    if mutation::active(Mutation::HavocSet) {
                        havoc.pop();
                    }
                    if !havoc.is_empty() {
                        let bindings: Vec<(String, SymId)> =
                            havoc.into_iter().map(|x| (x, self.fresh.fresh())).collect();
                        for (x, s) in &bindings {
                            sigma.set(x.clone(), SymTerm::Sym(*s));
                        }
                        out.push(Header::Fresh(bindings));
                    }
                    out.push(Header::Assume(Self::annotation(&sigma, invariant)));
                    let c = self.bexpr(&sigma, cond, &None, &mut out);
                    let left = close(
                        vec![Header::Assume(c.clone())],
                        self.run(sigma.clone(), vec![Frame::LoopEnd(invariant), Frame::Exec(body)]),
                    );
                    let right = close(vec![Header::Assume(SymProp::not(c))], self.run(sigma, k));
                    return close(
                        out,
                        SepNode::Branch {
                            left: Box::new(left),
                            right: Box::new(right),
                        },
                    );
                }
                Stmt::Return(e) => {
                    let t = self.iexpr(&sigma, e, &None, &mut out);
                    let mut at_exit = self.entry.clone();
                    at_exit.set(RESULT, t);
                    let p = Self::annotation(&at_exit, self.post);
                    out.push(Header::Assert(p, ObligationKind::Postcondition, None));
                    return close(out, SepNode::Done);
                }
            }
        }
    }
}

/// SEP tree of `f`. The body is simplified first; `f` must be well formed.
pub fn exec_func(f: &Func) -> SepNode {
    let body = simplify(&f.body);
    let mut fresh = FreshCounter::new();
    let mut sigma = SymStore::new();
    let mut prefix = Vec::new();
    if !f.params.is_empty() {
        let bindings: Vec<(String, SymId)> = f.params.iter().map(|x| (x.clone(), fresh.fresh())).collect();
        for (x, s) in &bindings {
            sigma.set(x.clone(), SymTerm::Sym(*s));
        }
        prefix.push(Header::Fresh(bindings));
    }
    prefix.push(Header::Assume(Executor::annotation(&sigma, &f.pre)));
    let mut ex = Executor {
        post: &f.post,
        entry: sigma.clone(),
        fresh,
    };
    let tail = ex.run(sigma, vec![Frame::Exec(&body)]);
    close(prefix, tail)
}

/// Every `Assert` of `t`, depth first and left first, with the `Assume`
/// propositions on its root path as hypotheses.
pub fn collect_obligations(t: &SepNode) -> Vec<Obligation> {
    let mut out = Vec::new();
    let mut stack = vec![(t, NodePath::default(), PathCond::new())];
    while let Some((mut node, mut path, mut hyps)) = stack.pop() {
        loop {
            match node {
                SepNode::Assume { prop, rest } => {
                    hyps.push(prop.clone());
                    node = rest;
                }
                SepNode::Assert { prop, kind, loc, rest } => {
                    out.push(Obligation {
                        path: path.clone(),
                        hypotheses: hyps.clone(),
                        goal: prop.clone(),
                        kind: *kind,
                        loc: *loc,
                    });
                    node = rest;
                }
                SepNode::Fresh { rest, .. } => node = rest,
                SepNode::Branch { left, right } => {
                    for (side, child) in [(Side::Right, right), (Side::Left, left)] {
                        let mut p = path.branches.clone();
                        p.push(side);
                        stack.push((child, NodePath { branches: p, step: 0 }, hyps.clone()));
                    }
                    break;
                }
                SepNode::Done => break,
            }
            path.step += 1;
        }
    }
    out
}

/// The node at `path`, if any.
pub fn node_at<'t>(t: &'t SepNode, path: &NodePath) -> Option<&'t SepNode> {
    let mut node = t;
    for side in &path.branches {
        loop {
            match node {
                SepNode::Assume { rest, .. } | SepNode::Assert { rest, .. } | SepNode::Fresh { rest, .. } => {
                    node = rest
                }
                SepNode::Branch { left, right } => {
                    node = if *side == Side::Left { left } else { right };
                    break;
                }
                SepNode::Done => return None,
            }
        }
    }
    for _ in 0..path.step {
        match node {
            SepNode::Assume { rest, .. } | SepNode::Assert { rest, .. } | SepNode::Fresh { rest, .. } => node = rest,
            SepNode::Branch { .. } | SepNode::Done => return None,
        }
    }
    Some(node)
}

/// Checks that every proposition mentions only symbols bound by an
/// enclosing `Fresh`, and that no symbol is bound twice.
pub fn check_scoping(t: &SepNode) -> Result<(), String> {
    use std::collections::BTreeSet;
    let mut stack = vec![(t, BTreeSet::new())];
    let mut seen = BTreeSet::new();
    while let Some((mut node, mut bound)) = stack.pop() {
        loop {
            let prop = match node {
                SepNode::Assume { prop, rest } | SepNode::Assert { prop, rest, .. } => {
                    node = rest;
                    prop
                }
                SepNode::Fresh { bindings, rest } => {
                    for (_, s) in bindings {
                        if !seen.insert(*s) {
                            return Err(format!("symbol {s} bound twice"));
                        }
                        bound.insert(*s);
                    }
                    node = rest;
                    continue;
                }
                SepNode::Branch { left, right } => {
                    stack.push((right, bound.clone()));
                    stack.push((left, bound));
                    break;
                }
                SepNode::Done => break,
            };
            let mut syms = BTreeSet::new();
            prop.symbols(&mut syms);
            if let Some(s) = syms.difference(&bound).next() {
                return Err(format!("symbol {s} used outside its binder in {prop}"));
            }
        }
    }
    Ok(())
}

/// Indented rendering, one node per line. Branch children are marked
/// `[L]` and `[R]`.
pub fn dump(t: &SepNode) -> String {
    fn go(node: &SepNode, indent: usize, out: &mut String) {
        let mut node = node;
        let mut first_pad = String::new();
        loop {
            let pad = if first_pad.is_empty() {
                " ".repeat(indent)
            } else {
                std::mem::take(&mut first_pad)
            };
            match node {
                SepNode::Assume { prop, rest } => {
                    out.push_str(&format!("{pad}Assume {prop}\n"));
                    node = rest;
                }
                SepNode::Assert { prop, kind, loc, rest } => {
                    let at = loc.map(|l| format!(" @ {l}")).unwrap_or_default();
                    out.push_str(&format!("{pad}Assert {prop} [{kind}{at}]\n"));
                    node = rest;
                }
                SepNode::Fresh { bindings, rest } => {
                    let b: Vec<String> = bindings.iter().map(|(x, s)| format!("{x} -> {s}")).collect();
                    out.push_str(&format!("{pad}Fresh {}\n", b.join(", ")));
                    node = rest;
                }
                SepNode::Branch { left, right } => {
                    out.push_str(&format!("{pad}Branch\n"));
                    for (tag, child) in [("[L] ", left), ("[R] ", right)] {
                        out.push_str(&format!("{}{tag}", " ".repeat(indent + 2)));
                        let mut sub = String::new();
                        go(child, indent + 6, &mut sub);
                        out.push_str(sub.trim_start());
                    }
                    return;
                }
                SepNode::Done => {
                    out.push_str(&format!("{pad}Done\n"));
                    return;
                }
            }
        }
    }
    let mut out = String::new();
    go(t, 0, &mut out);
    out
}

/// Outcome of verifying a function.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Verdict {
    Verified {
        tree: SepNode,
        proofs: Vec<(Obligation, Witness)>,
    },
    Rejected {
        failed: Obligation,
        countermodel: Option<Valuation>,
    },
}

impl Verdict {
    pub fn is_verified(&self) -> bool {
        matches!(self, Verdict::Verified { .. })
    }
}

/// The solver could neither prove nor refute an obligation.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("solver incomplete on {obligation}: {reason}")]
pub struct SolverIncomplete {
    pub obligation: Obligation,
    pub reason: String,
}

/// Verifies `f` by discharging its obligations in enumeration order; the
/// first one that is not valid decides the outcome.
pub fn verify_func(f: &Func) -> Result<Verdict, SolverIncomplete> {
    let tree = exec_func(f);
    let mut proofs = Vec::new();
    for ob in collect_obligations(&tree) {
        match solver::decide(ob.hypotheses.as_slice(), &ob.goal) {
            Decision::Valid(w) => proofs.push((ob, w)),
            Decision::Invalid(nu) => {
                return Ok(Verdict::Rejected {
                    failed: ob,
                    countermodel: Some(nu),
                })
            }
            Decision::Incomplete(reason) => return Err(SolverIncomplete { obligation: ob, reason }),
        }
    }
    Ok(Verdict::Verified { tree, proofs })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::syntax::parse;

    const COUNTDOWN: &str = "\
int main()
    //@ requires true;
    //@ ensures result == 0;
{
    int x = 32767;
    while (0 < x)
        //@ invariant 0 <= x;
    {
        x = x - 1;
    }
    return x;
}
";

    fn func(src: &str) -> Func {
        parse(src).unwrap().main
    }

    fn p(s: &str) -> SymProp {
        s.parse().unwrap()
    }

    fn asserts(t: &SepNode) -> Vec<(String, ObligationKind)> {
        collect_obligations(t).into_iter().map(|o| (o.goal.to_string(), o.kind)).collect()
    }

    #[test]
    fn countdown_tree_has_the_expected_shape() {
        let t = exec_func(&func(COUNTDOWN));
        let expected = SepNode::Assume {
            prop: SymProp::True,
            rest: Box::new(SepNode::Assert {
                prop: p("(0 <= 32767)"),
                kind: ObligationKind::InvariantEntry,
                loc: None,
                rest: Box::new(SepNode::Fresh {
                    bindings: vec![("x".into(), SymId(0))],
                    rest: Box::new(SepNode::Assume {
                        prop: p("(0 <= s0)"),
                        rest: Box::new(SepNode::Branch {
                            left: Box::new(SepNode::Assume {
                                prop: p("(0 < s0)"),
                                rest: Box::new(SepNode::Assert {
                                    prop: SymProp::in_range(&p_term("(s0 - 1)")),
                                    kind: ObligationKind::Overflow,
                                    loc: Some(Loc::new(9, 15)),
                                    rest: Box::new(SepNode::Assert {
                                        prop: p("(0 <= (s0 - 1))"),
                                        kind: ObligationKind::InvariantPreserved,
                                        loc: None,
                                        rest: Box::new(SepNode::Done),
                                    }),
                                }),
                            }),
                            right: Box::new(SepNode::Assume {
                                prop: p("(!(0 < s0))"),
                                rest: Box::new(SepNode::Assert {
                                    prop: p("(s0 == 0)"),
                                    kind: ObligationKind::Postcondition,
                                    loc: None,
                                    rest: Box::new(SepNode::Done),
                                }),
                            }),
                        }),
                    }),
                }),
            }),
        };
        assert_eq!(t, expected);
        check_scoping(&t).unwrap();
    }

    fn p_term(s: &str) -> SymTerm {
        s.parse().unwrap()
    }

    #[test]
    fn countdown_obligations_in_order() {
        let obs = collect_obligations(&exec_func(&func(COUNTDOWN)));
        let got: Vec<(Vec<String>, String, String)> = obs
            .iter()
            .map(|o| {
                (
                    o.hypotheses.as_slice().iter().map(|h| h.to_string()).collect(),
                    o.goal.to_string(),
                    o.path.to_string(),
                )
            })
            .collect();
        let range = SymProp::in_range(&p_term("(s0 - 1)")).to_string();
        let h_body = vec!["(0 <= s0)".to_string(), "(0 < s0)".to_string()];
        let h_exit = vec!["(0 <= s0)".to_string(), "(!(0 < s0))".to_string()];
        assert_eq!(
            got,
            vec![
                (vec![], "(0 <= 32767)".to_string(), "/1".to_string()),
                (h_body.clone(), range, "L/1".to_string()),
                (h_body, "(0 <= (s0 - 1))".to_string(), "L/2".to_string()),
                (h_exit, "(s0 == 0)".to_string(), "R/1".to_string()),
            ]
        );
    }

    #[test]
    fn paths_address_their_assert_nodes() {
        let t = exec_func(&func(COUNTDOWN));
        for o in collect_obligations(&t) {
            match node_at(&t, &o.path) {
                Some(SepNode::Assert { prop, .. }) => assert_eq!(*prop, o.goal),
                other => panic!("{} addresses {other:?}", o.path),
            }
            assert_eq!(o.path.to_string().parse::<NodePath>().unwrap(), o.path);
        }
        assert!("L/01".parse::<NodePath>().is_err());
        assert!("X/1".parse::<NodePath>().is_err());
        assert!("L1".parse::<NodePath>().is_err());
    }

    #[test]
    fn minimal_function() {
        let t = exec_func(&func("int main() //@ requires true; //@ ensures result == 0; { return 0; }"));
        let expected = SepNode::Assume {
            prop: SymProp::True,
            rest: Box::new(SepNode::Assert {
                prop: p("(0 == 0)"),
                kind: ObligationKind::Postcondition,
                loc: None,
                rest: Box::new(SepNode::Done),
            }),
        };
        assert_eq!(t, expected);
    }

    #[test]
    fn done_and_branch_enumeration() {
        assert!(collect_obligations(&SepNode::Done).is_empty());
        let leaf = |g: &str| SepNode::Assert {
            prop: p(g),
            kind: ObligationKind::Postcondition,
            loc: None,
            rest: Box::new(SepNode::Done),
        };
        let t = SepNode::Branch {
            left: Box::new(leaf("(1 == 1)")),
            right: Box::new(leaf("(2 == 2)")),
        };
        let obs = collect_obligations(&t);
        assert_eq!(obs.len(), 2);
        assert_eq!((obs[0].goal.to_string(), obs[0].path.to_string()), ("(1 == 1)".into(), "L/0".into()));
        assert_eq!((obs[1].goal.to_string(), obs[1].path.to_string()), ("(2 == 2)".into(), "R/0".into()));
    }

    /// Independent count of the obligations of a straight-line body:
    /// one per `+ - * -x`, two per `/ %`, one for the final return.
    fn straight_line_count(s: &Stmt) -> usize {
        fn arith(e: &IExpr) -> usize {
            match e {
                IExpr::Lit(_) | IExpr::Var(_) => 0,
                IExpr::Unary(_, a, _) => 1 + arith(a),
                IExpr::Binary(op, l, r, _) => {
                    let own = if matches!(op, BinOp::Div | BinOp::Mod) { 2 } else { 1 };
                    own + arith(l) + arith(r)
                }
            }
        }
        match s {
            Stmt::Skip => 0,
            Stmt::Seq(a, b) => straight_line_count(a) + straight_line_count(b),
            Stmt::Let(_, e, b) => arith(e) + straight_line_count(b),
            Stmt::Assign(_, e) => arith(e),
            Stmt::Return(e) => arith(e) + 1,
            Stmt::If(..) | Stmt::While { .. } => unreachable!("straight-line only"),
        }
    }

    #[test]
    fn let_increment_emits_range_obligation() {
        let f = Func {
            name: "main".into(),
            params: vec![],
            pre: BExpr::Lit(true),
            post: BExpr::Lit(true),
            body: Stmt::let_(
                "x",
                IExpr::lit(5),
                Stmt::seq(
                    Stmt::assign("x", IExpr::add(IExpr::var("x"), IExpr::lit(1))),
                    Stmt::Return(IExpr::lit(0)),
                ),
            ),
        };
        let obs = asserts(&exec_func(&f));
        assert_eq!(obs.len(), straight_line_count(&f.body));
        assert_eq!(obs[0], (SymProp::in_range(&SymTerm::Lit(6)).to_string(), ObligationKind::Overflow));
        assert_eq!(obs[1], ("true".to_string(), ObligationKind::Postcondition));
    }

    #[test]
    fn straight_line_counts_match_independent_walk() {
        let srcs = [
            "int main(int a, int b) //@ requires b != 0; //@ ensures true; { int c = a / b + a % b; c = -c * 2; return c - 1; }",
            "int main() //@ requires true; //@ ensures true; { return 0; }",
            "int main(int a) //@ requires true; //@ ensures true; { a = a; return -(-a); }",
        ];
        for src in srcs {
            let f = func(src);
            assert_eq!(asserts(&exec_func(&f)).len(), straight_line_count(&simplify(&f.body)), "{src}");
        }
    }

    #[test]
    fn verify_countdown() {
        match verify_func(&func(COUNTDOWN)).unwrap() {
            Verdict::Verified { proofs, .. } => assert_eq!(proofs.len(), 4),
            v => panic!("{v:?}"),
        }
    }

    #[test]
    fn wrong_postcondition_is_rejected_with_countermodel() {
        let src = COUNTDOWN.replace("result == 0", "result == 1");
        match verify_func(&func(&src)).unwrap() {
            Verdict::Rejected { failed, countermodel } => {
                assert_eq!(failed.goal.to_string(), "(s0 == 1)");
                assert_eq!(failed.kind, ObligationKind::Postcondition);
                let nu = countermodel.unwrap();
                assert_eq!(nu.get(&SymId(0)), Some(&0.into()));
            }
            v => panic!("{v:?}"),
        }
    }

    #[test]
    fn postcondition_reads_parameters_at_entry() {
        let f = func("int main(int a) //@ requires true; //@ ensures 0 == a; { a = 0; return 0; }");
        match verify_func(&f).unwrap() {
            Verdict::Rejected { failed, countermodel } => {
                assert_eq!(failed.kind, ObligationKind::Postcondition);
                assert_eq!(failed.goal.to_string(), "(0 == s0)");
                assert_ne!(countermodel.unwrap().get(&SymId(0)), Some(&0.into()));
            }
            v => panic!("{v:?}"),
        }
    }

    #[test]
    fn division_by_zero_is_rejected() {
        let f = func("int main() //@ requires true; //@ ensures true; { return 5 / 0; }");
        match verify_func(&f).unwrap() {
            Verdict::Rejected { failed, .. } => {
                assert_eq!(failed.kind, ObligationKind::DivisorNonZero);
                assert_eq!(failed.goal.to_string(), "(0 != 0)");
            }
            v => panic!("{v:?}"),
        }
    }

    #[test]
    fn missing_return_is_rejected() {
        let f = func("int main() //@ requires true; //@ ensures true; { int x = 1; }");
        match verify_func(&f).unwrap() {
            Verdict::Rejected { failed, .. } => assert_eq!(failed.kind, ObligationKind::MissingReturn),
            v => panic!("{v:?}"),
        }
    }

    #[test]
    fn short_circuit_guards_right_operand() {
        let f = func(
            "int main(int d) //@ requires true; //@ ensures true; { if (d != 0 && 10 / d > 1) { return 1; } else { return 0; } }",
        );
        assert!(verify_func(&f).unwrap().is_verified());
        let g = func(
            "int main(int d) //@ requires true; //@ ensures true; { if (d == 0 || 10 / d > 1) { return 1; } else { return 0; } }",
        );
        assert!(verify_func(&g).unwrap().is_verified());
        let h = func("int main(int d) //@ requires true; //@ ensures true; { if (10 / d > 1) { return 1; } return 0; }");
        assert!(!verify_func(&h).unwrap().is_verified());
    }

    #[test]
    fn execution_is_deterministic() {
        let f = func(COUNTDOWN);
        assert_eq!(exec_func(&f), exec_func(&f));
        assert_eq!(dump(&exec_func(&f)), dump(&exec_func(&f)));
    }

    #[test]
    fn dump_is_one_node_per_line() {
        let t = exec_func(&func(COUNTDOWN));
        let d = dump(&t);
        assert_eq!(d.lines().count(), t.size());
        assert!(d.starts_with("Assume true\nAssert (0 <= 32767) [invariant-entry]\nFresh x -> s0\n"));
        assert!(d.contains("  [L] Assume (0 < s0)\n"));
        assert!(d.contains("  [R] Assume (!(0 < s0))\n"));
    }

    #[test]
    fn havoc_mutation_unsound_on_stale_value() {
        let src = "int main() //@ requires true; //@ ensures result == 5; { int x = 5; while (0 < x) //@ invariant true; { x = x - 1; } return x; }";
        let f = func(src);
        assert!(!verify_func(&f).unwrap().is_verified());
        let _g = mutation::inject(Mutation::HavocSet);
        assert!(verify_func(&f).unwrap().is_verified());
    }

    #[test]
    fn loop_inside_branch_and_nested_scopes() {
        let src = "\
int main(int n)
    //@ requires 0 <= n && n <= 100;
    //@ ensures result == n;
{
    int i = 0;
    if (n > 0) {
        while (i < n)
            //@ invariant 0 <= i && i <= n;
        {
            int step = 1;
            i = i + step;
        }
    }
    return i;
}
";
        let f = func(src);
        let t = exec_func(&f);
        check_scoping(&t).unwrap();
        assert!(verify_func(&f).unwrap().is_verified());
    }
}
