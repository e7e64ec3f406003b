//! Decision procedure for entailments between symbolic propositions over
//! bounded integer arithmetic, producing checkable witnesses.
//!
//! A query `hyps |= goal` is refuted as `hyps /\ !goal` in disjunctive
//! normal form. Each cube is attacked by Fourier-Motzkin elimination with
//! branch and bound; nonlinear goals fall back to exhaustive enumeration
//! over a box whose bounds are themselves proved.

mod enumerate;
mod fm;
pub mod linear;
pub mod witness;

use std::collections::BTreeSet;

use num_bigint::BigInt;

pub use fm::Limits;
pub use linear::{normalize, Canon, Dnf, LinAtom, LinExpr, NormError, Rel, Row, Var};
pub use witness::{check_witness, forge_negative_farkas, EnumBound, FarkasTerm, Reject, Witness, ENUM_MAX_POINTS};

use crate::symstore::{SymId, SymProp, Valuation};
use crate::syntax::{INT_MAX, INT_MIN};
use fm::{CubeResult, Model};
use linear::build_problem;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Decision {
    Valid(Witness),
    /// Satisfies every hypothesis and falsifies the goal.
    Invalid(Valuation),
    Incomplete(String),
}

enum Linear {
    Valid(Witness),
    Model(Model),
    Incomplete(String),
}

fn symbols_of(props: &[&SymProp]) -> BTreeSet<SymId> {
    let mut out = BTreeSet::new();
    for p in props {
        p.symbols(&mut out);
    }
    out
}

/// Decides `hyps |= goal`.
pub fn decide(hyps: &[SymProp], goal: &SymProp) -> Decision {
    decide_with(hyps, goal, &Limits::default())
}

pub fn decide_with(hyps: &[SymProp], goal: &SymProp, limits: &Limits) -> Decision {
    let reason = match decide_linear(hyps, goal, limits) {
        Linear::Valid(w) => return self_checked(hyps, goal, w),
        Linear::Model(m) => {
            if let Some(nu) = confirm(hyps, goal, |s| m.get(&Var::Sym(s.0)).cloned()) {
                return Decision::Invalid(nu);
            }
            "linear model violates a dropped nonlinear conjunct".to_string()
        }
        Linear::Incomplete(r) => r,
    };
    if let Some(d) = try_enum(hyps, goal, limits) {
        return match d {
            Decision::Valid(w) => self_checked(hyps, goal, w),
            other => other,
        };
    }
    if let Some(nu) = try_probe(hyps, goal, limits) {
        return Decision::Invalid(nu);
    }
    Decision::Incomplete(reason)
}

fn self_checked(hyps: &[SymProp], goal: &SymProp, w: Witness) -> Decision {
    match check_witness(hyps, goal, &w) {
        Ok(()) => Decision::Valid(w),
        Err(e) => Decision::Incomplete(format!("internal witness rejected: {e}")),
    }
}

/// Full valuation over the query's symbols when it is a genuine
/// countermodel; symbols without a value read as 0.
fn confirm(hyps: &[SymProp], goal: &SymProp, value: impl Fn(SymId) -> Option<BigInt>) -> Option<Valuation> {
    let mut all: Vec<&SymProp> = hyps.iter().collect();
    all.push(goal);
    let nu: Valuation = symbols_of(&all)
        .into_iter()
        .map(|s| (s, value(s).unwrap_or_default()))
        .collect();
    let ok = hyps.iter().all(|h| h.eval(&nu)) && !goal.eval(&nu);
    ok.then_some(nu)
}

fn decide_linear(hyps: &[SymProp], goal: &SymProp, limits: &Limits) -> Linear {
    let problem = match build_problem(hyps, goal) {
        Ok(p) => p,
        Err(e) => return Linear::Incomplete(e.to_string()),
    };
    let mut witnesses = Vec::with_capacity(problem.cubes.len());
    let mut incomplete = None;
    for rows in &problem.cubes {
        match fm::solve_cube(rows, limits) {
            Ok(CubeResult::Refuted(w)) => witnesses.push(w),
            Ok(CubeResult::Model(m)) => return Linear::Model(m),
            Err(fm::Incomplete(r)) => incomplete = Some(r.to_string()),
        }
    }
    if let Some(r) = incomplete {
        return Linear::Incomplete(r);
    }
    if witnesses.len() == 1 {
        Linear::Valid(witnesses.pop().expect("one witness"))
    } else {
        Linear::Valid(Witness::Cubes { cubes: witnesses })
    }
}

/// Symbols of `goal`, then the closure under sharing a hypothesis.
fn box_candidates(hyps: &[SymProp], goal: &SymProp) -> Vec<BTreeSet<SymId>> {
    let mut s0 = BTreeSet::new();
    goal.symbols(&mut s0);
    let mut closure = s0.clone();
    loop {
        let before = closure.len();
        for h in hyps {
            let mut hs = BTreeSet::new();
            h.symbols(&mut hs);
            if !hs.is_disjoint(&closure) {
                closure.extend(hs);
            }
        }
        if closure.len() == before {
            break;
        }
    }
    if closure == s0 {
        vec![s0]
    } else {
        vec![s0, closure]
    }
}

fn try_enum(hyps: &[SymProp], goal: &SymProp, limits: &Limits) -> Option<Decision> {
    let hyp_problem = build_problem(hyps, &SymProp::False).ok()?;
    for syms in box_candidates(hyps, goal) {
        let Some(bounds) = box_bounds(&hyp_problem.cubes, &syms, limits) else {
            continue;
        };
        let mut proved = Vec::with_capacity(bounds.len());
        for (s, lo, hi) in &bounds {
            let prove = |v: i64, lower: bool| {
                let g = witness::bound_goal(*s, &BigInt::from(v), lower)?;
                match decide_linear(hyps, &g, limits) {
                    Linear::Valid(w) => Some(w),
                    _ => None,
                }
            };
            let (Some(lo_proof), Some(hi_proof)) = (prove(*lo, true), prove(*hi, false)) else {
                break;
            };
            proved.push(EnumBound {
                symbol: *s,
                lo: BigInt::from(*lo),
                hi: BigInt::from(*hi),
                lo_proof,
                hi_proof,
            });
        }
        if proved.len() != bounds.len() {
            continue;
        }
        let used = witness::boxed_hyps(hyps, &syms);
        match enumerate::find_counterexample(&used, goal, &bounds) {
            None => return Some(Decision::Valid(Witness::Enum { bounds: proved })),
            Some(point) => {
                if let Some(nu) = confirm(hyps, goal, |s| point.get(&s).cloned()) {
                    return Some(Decision::Invalid(nu));
                }
            }
        }
    }
    None
}

/// Box over `syms` covering every rationally feasible cube, if it is
/// bounded and small enough to enumerate.
fn box_bounds(cubes: &[Vec<Row>], syms: &BTreeSet<SymId>, limits: &Limits) -> Option<Vec<(SymId, i64, i64)>> {
    let mut out = Vec::new();
    let mut points: u64 = 1;
    for s in syms {
        let mut lo: Option<BigInt> = None;
        let mut hi: Option<BigInt> = None;
        let mut any = false;
        for rows in cubes {
            let Some((l, h)) = fm::project_bounds(rows, Var::Sym(s.0), limits) else {
                continue;
            };
            // Symbols absent from a cube are still range-bounded.
            let l = l.unwrap_or_else(|| BigInt::from(INT_MIN));
            let h = h.unwrap_or_else(|| BigInt::from(INT_MAX));
            lo = Some(lo.map_or(l.clone(), |x| x.min(l)));
            hi = Some(hi.map_or(h.clone(), |x| x.max(h)));
            any = true;
        }
        if !any {
            return None;
        }
        let (lo, hi) = (enumerate::fits_i64(&lo?)?, enumerate::fits_i64(&hi?)?);
        if lo > hi {
            return None;
        }
        points = points.checked_mul((hi - lo + 1) as u64)?;
        if points > ENUM_MAX_POINTS {
            return None;
        }
        out.push((*s, lo, hi));
    }
    Some(out)
}

/// Searches a grid of boundary values for a countermodel.
fn try_probe(hyps: &[SymProp], goal: &SymProp, limits: &Limits) -> Option<Valuation> {
    let mut all: Vec<&SymProp> = hyps.iter().collect();
    all.push(goal);
    let syms: Vec<SymId> = symbols_of(&all).into_iter().collect();
    if syms.len() > 6 {
        return None;
    }
    let hyp_cubes = build_problem(hyps, &SymProp::False).ok()?.cubes;
    let base: [i64; 14] = [
        0,
        1,
        -1,
        2,
        -2,
        INT_MAX,
        INT_MIN,
        INT_MAX - 1,
        INT_MIN + 1,
        46340,
        46341,
        -46341,
        65536,
        -65536,
    ];
    let candidates: Vec<Vec<i64>> = syms
        .iter()
        .map(|s| {
            let mut c: Vec<i64> = Vec::new();
            for rows in hyp_cubes.iter().take(4) {
                if let Some((l, h)) = fm::project_bounds(rows, Var::Sym(s.0), limits) {
                    for b in [l, h].into_iter().flatten() {
                        if let Some(b) = enumerate::fits_i64(&b) {
                            c.extend([b, b.saturating_add(1), b.saturating_sub(1)]);
                        }
                    }
                }
            }
            c.extend(base);
            let mut seen = BTreeSet::new();
            c.retain(|v| crate::syntax::in_int_range(*v) && seen.insert(*v));
            c
        })
        .collect();
    enumerate::probe(hyps, goal, &syms, &candidates, 50_000)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::symstore::SymTerm as T;
    use crate::syntax::{BinOp, CmpOp};

    fn s(n: u32) -> T {
        T::sym(n)
    }

    fn le(a: T, b: T) -> SymProp {
        SymProp::cmp(CmpOp::Le, a, b)
    }

    fn lt(a: T, b: T) -> SymProp {
        SymProp::cmp(CmpOp::Lt, a, b)
    }

    fn valid(hyps: &[SymProp], goal: &SymProp) -> Witness {
        match decide(hyps, goal) {
            Decision::Valid(w) => {
                check_witness(hyps, goal, &w).unwrap();
                w
            }
            other => panic!("expected Valid, got {other:?}"),
        }
    }

    #[test]
    fn loop_body_obligation() {
        let hyps = [le(T::Lit(0), s(0)), lt(T::Lit(0), s(0))];
        let goal = le(T::Lit(0), T::sub(s(0), T::Lit(1)));
        let w = valid(&hyps, &goal);
        // Rows: s0, s0 - 1, -s0 (negated goal), then the two range rows.
        let expected = Witness::Farkas {
            combination: vec![
                FarkasTerm { row: 1, mult: 1.into() },
                FarkasTerm { row: 2, mult: 1.into() },
            ],
            slack: (-1).into(),
        };
        assert_eq!(w, expected);
    }

    #[test]
    fn loop_exit_obligation() {
        let hyps = [le(T::Lit(0), s(0)), SymProp::not(lt(T::Lit(0), s(0)))];
        let goal = SymProp::cmp(CmpOp::Eq, s(0), T::Lit(0));
        let w = valid(&hyps, &goal);
        assert!(matches!(w, Witness::Cubes { ref cubes } if cubes.len() == 2));
    }

    #[test]
    fn countermodel_for_unconstrained_equality() {
        let goal = SymProp::cmp(CmpOp::Eq, s(0), T::Lit(0));
        match decide(&[], &goal) {
            Decision::Invalid(nu) => assert_eq!(nu, [(SymId(0), BigInt::from(1))].into()),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn countermodel_for_changed_postcondition() {
        let hyps = [le(T::Lit(0), s(0)), SymProp::not(lt(T::Lit(0), s(0)))];
        let goal = SymProp::cmp(CmpOp::Eq, s(0), T::Lit(1));
        match decide(&hyps, &goal) {
            Decision::Invalid(nu) => assert_eq!(nu, [(SymId(0), BigInt::from(0))].into()),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn trivial_goals() {
        assert_eq!(valid(&[], &SymProp::True), Witness::Cubes { cubes: vec![] });
        assert_eq!(
            valid(&[], &SymProp::cmp(CmpOp::Eq, T::Lit(0), T::Lit(0))),
            Witness::Cubes { cubes: vec![] }
        );
        assert!(matches!(decide(&[], &SymProp::False), Decision::Invalid(_)));
        assert!(matches!(
            decide(&[], &SymProp::cmp(CmpOp::Ne, T::Lit(0), T::Lit(0))),
            Decision::Invalid(_)
        ));
    }

    #[test]
    fn range_of_symbols_is_known() {
        // Every symbol is an int, so s0 + 1 cannot overflow when s0 < 10.
        let hyps = [lt(s(0), T::Lit(10))];
        let goal = SymProp::in_range(&T::add(s(0), T::Lit(1)));
        valid(&hyps, &goal);
        // Without a bound the sum can overflow.
        match decide(&[], &goal) {
            Decision::Invalid(nu) => assert_eq!(nu[&SymId(0)], BigInt::from(INT_MAX)),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn integer_tightening_of_atoms() {
        // 2*s1 + 1 <= 2*s0 <= 2*s1 + 1 tightens to s0 - s1 >= 1 and s0 - s1 <= 0.
        let two = |t: T| T::mul(T::Lit(2), t);
        let hyps = [
            le(T::add(two(s(1)), T::Lit(1)), two(s(0))),
            le(two(s(0)), T::add(two(s(1)), T::Lit(1))),
        ];
        assert!(matches!(valid(&hyps, &SymProp::False), Witness::Farkas { .. }));
    }

    #[test]
    fn integer_reasoning_needs_a_split() {
        // s1 = 3*s2 and s1 + 1 <= 3*s0 <= s1 + 2 leave s0 - s2 in [1/3, 2/3].
        let three = |t: T| T::mul(T::Lit(3), t);
        let hyps = [
            le(T::add(s(1), T::Lit(1)), three(s(0))),
            le(three(s(0)), T::add(s(1), T::Lit(2))),
            SymProp::cmp(CmpOp::Eq, s(1), three(s(2))),
        ];
        let w = valid(&hyps, &SymProp::False);
        assert!(matches!(w, Witness::CaseSplit { .. }), "{w:?}");
    }

    #[test]
    fn division_by_literal_is_linearised() {
        let half = T::bin(BinOp::Div, s(0), T::Lit(2));
        let hyps = [le(T::Lit(0), s(0)), le(s(0), T::Lit(100))];
        valid(&hyps, &le(half.clone(), T::Lit(50)));
        valid(&hyps, &le(T::Lit(0), half.clone()));
        let rem = T::bin(BinOp::Mod, s(0), T::Lit(-3));
        valid(&[lt(s(0), T::Lit(0))], &le(rem.clone(), T::Lit(0)));
        match decide(&[], &le(T::Lit(0), rem)) {
            Decision::Invalid(nu) => assert!(nu[&SymId(0)] < BigInt::from(0)),
            other => panic!("{other:?}"),
        }
        // Shared quotient between hypothesis and goal.
        valid(&[le(T::Lit(5), half.clone())], &le(T::Lit(10), s(0)));
    }

    #[test]
    fn nonlinear_goal_by_enumeration() {
        let sq = T::mul(s(0), s(0));
        let hyps = [le(T::Lit(-10), s(0)), le(s(0), T::Lit(10))];
        let w = valid(&hyps, &le(T::Lit(0), sq.clone()));
        let Witness::Enum { bounds } = &w else { panic!("{w:?}") };
        assert_eq!(bounds.len(), 1);
        assert_eq!((bounds[0].lo.clone(), bounds[0].hi.clone()), (BigInt::from(-10), BigInt::from(10)));
        match decide(&hyps, &le(sq.clone(), T::Lit(99))) {
            Decision::Invalid(nu) => assert_eq!(nu[&SymId(0)], BigInt::from(-10)),
            other => panic!("{other:?}"),
        }
        // Unbounded square overflows; found by probing.
        match decide(&[], &SymProp::in_range(&sq)) {
            Decision::Invalid(nu) => {
                let v = &nu[&SymId(0)];
                assert!(v * v > BigInt::from(INT_MAX));
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn nonlinear_hypotheses_are_dropped() {
        let hyps = [le(T::mul(s(0), s(1)), T::Lit(3)), le(T::Lit(1), s(0))];
        valid(&hyps, &le(T::Lit(0), s(0)));
    }

    #[test]
    fn enum_rejects_tampering() {
        let sq = T::mul(s(0), s(0));
        let hyps = [le(T::Lit(-10), s(0)), le(s(0), T::Lit(10))];
        let goal = le(T::Lit(0), sq);
        let Witness::Enum { bounds } = valid(&hyps, &goal) else { panic!() };
        let mut narrow = bounds.clone();
        narrow[0].lo = BigInt::from(-9);
        let e = check_witness(&hyps, &goal, &Witness::Enum { bounds: narrow }).unwrap_err();
        assert!(matches!(e, Reject::BoxNotImplied(..)), "{e}");
        let bad_goal = le(T::Lit(1), T::mul(s(0), s(0)));
        let e = check_witness(&hyps, &bad_goal, &Witness::Enum { bounds }).unwrap_err();
        assert_eq!(e, Reject::EnumCounterexample);
    }

    #[test]
    fn checker_rejects_bad_farkas() {
        let hyps = [le(T::Lit(0), s(0)), lt(T::Lit(0), s(0))];
        let goal = le(T::Lit(0), T::sub(s(0), T::Lit(1)));
        let w = valid(&hyps, &goal);
        let Witness::Farkas { combination, slack } = w else { panic!() };
        let mut neg = combination.clone();
        neg[0].mult = BigInt::from(-1);
        let e = check_witness(&hyps, &goal, &Witness::Farkas { combination: neg, slack: slack.clone() });
        assert_eq!(e, Err(Reject::NegativeMultiplier { row: 1 }));
        let mut idx = combination.clone();
        idx[1].row = 7;
        let e = check_witness(&hyps, &goal, &Witness::Farkas { combination: idx, slack: slack.clone() });
        assert_eq!(e, Err(Reject::BadIndex { index: 7, rows: 5 }));
        let e = check_witness(&hyps, &goal, &Witness::Farkas { combination, slack: BigInt::from(-2) });
        assert!(matches!(e, Err(Reject::SlackMismatch { .. })));
    }

    #[test]
    fn forged_negative_combination_needs_the_sign_check() {
        // (-1)*(s0 - INT_MIN) + (-1)*(INT_MAX - s0) cancels s0 with a negative
        // constant, "proving" anything about s0.
        let goal = SymProp::cmp(CmpOp::Eq, s(0), T::Lit(5));
        let forged = Witness::Cubes {
            cubes: (0..2)
                .map(|_| Witness::Farkas {
                    combination: vec![
                        FarkasTerm { row: 1, mult: (-1).into() },
                        FarkasTerm { row: 2, mult: (-1).into() },
                    ],
                    slack: BigInt::from(INT_MIN - INT_MAX),
                })
                .collect(),
        };
        assert!(check_witness(&[], &goal, &forged).is_err());
        let _g = crate::mutation::inject(crate::mutation::Mutation::FarkasSign);
        assert!(check_witness(&[], &goal, &forged).is_ok());
    }

    #[test]
    fn witness_json_is_canonical() {
        let hyps = [le(T::Lit(0), s(0)), lt(T::Lit(0), s(0))];
        let goal = le(T::Lit(0), T::sub(s(0), T::Lit(1)));
        let w = valid(&hyps, &goal);
        let text = serde_json::to_string(&w).unwrap();
        assert_eq!(
            text,
            r#"{"farkas":{"combination":[{"row":1,"mult":"1"},{"row":2,"mult":"1"}],"slack":"-1"}}"#
        );
        assert_eq!(serde_json::from_str::<Witness>(&text).unwrap(), w);
        for bad in [
            r#"{"farkas":{"combination":[],"slack":"-01"}}"#,
            r#"{"farkas":{"combination":[],"slack":"+1"}}"#,
            r#"{"farkas":{"combination":[],"slack":"-1","extra":1}}"#,
            r#"{"case_split":{"symbol":"x0","pivot":"0","below":{"cubes":{"cubes":[]}},"above":{"cubes":{"cubes":[]}}}}"#,
        ] {
            assert!(serde_json::from_str::<Witness>(bad).is_err(), "{bad}");
        }
    }

    #[test]
    fn deterministic() {
        let hyps = [le(T::Lit(-5), s(0)), le(s(0), s(1)), le(s(1), T::Lit(7))];
        let goal = le(T::mul(T::Lit(2), s(0)), T::add(s(1), T::Lit(7)));
        assert_eq!(decide(&hyps, &goal), decide(&hyps, &goal));
    }
}
