//! Validity witnesses and their checker. Checking is deterministic and
//! performs no search.

use std::collections::{BTreeMap, BTreeSet};

use num_bigint::BigInt;
use num_traits::{Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::linear::{build_problem, LinExpr, NormError, Row, Var};
use crate::mutation::{self, Mutation};
use crate::symstore::{SymId, SymProp, SymTerm};
use crate::syntax::CmpOp;

/// Largest number of points an `Enum` witness may cover.
pub const ENUM_MAX_POINTS: u64 = 1 << 16;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FarkasTerm {
    pub row: usize,
    #[serde(with = "dec")]
    pub mult: BigInt,
}

/// Box bound of one symbol with proofs that the hypotheses imply it.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnumBound {
    #[serde(with = "sym_text")]
    pub symbol: SymId,
    #[serde(with = "dec")]
    pub lo: BigInt,
    #[serde(with = "dec")]
    pub hi: BigInt,
    pub lo_proof: Witness,
    pub hi_proof: Witness,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum Witness {
    /// Positive multipliers of rows summing to the constant `slack < 0`.
    Farkas {
        combination: Vec<FarkasTerm>,
        #[serde(with = "dec")]
        slack: BigInt,
    },
    /// `form <= pivot` (row appended for `below`) or `form >= pivot + 1`
    /// (row appended for `above`), where `form` is an integer linear form.
    CaseSplit {
        #[serde(with = "form_text")]
        form: BTreeMap<Var, BigInt>,
        #[serde(with = "dec")]
        pivot: BigInt,
        below: Box<Witness>,
        above: Box<Witness>,
    },
    /// Exhaustive evaluation over a box implied by the hypotheses.
    Enum { bounds: Vec<EnumBound> },
    /// One refutation per cube of the normal form.
    Cubes { cubes: Vec<Witness> },
}

impl Witness {
    /// Number of nodes, a proxy for checking cost.
    pub fn size(&self) -> usize {
        match self {
            Witness::Farkas { combination, .. } => 1 + combination.len(),
            Witness::CaseSplit { below, above, .. } => 1 + below.size() + above.size(),
            Witness::Enum { bounds } => {
                1 + bounds.iter().map(|b| b.lo_proof.size() + b.hi_proof.size()).sum::<usize>()
            }
            Witness::Cubes { cubes } => 1 + cubes.iter().map(Witness::size).sum::<usize>(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Reject {
    #[error("row index {index} out of range ({rows} rows)")]
    BadIndex { index: usize, rows: usize },
    #[error("row indices must be strictly increasing (at {index})")]
    UnorderedIndex { index: usize },
    #[error("multiplier of row {row} is not positive")]
    NegativeMultiplier { row: usize },
    #[error("combination does not cancel variable {0}")]
    NotContradictory(String),
    #[error("combined constant is {actual}, witness claims {claimed}")]
    SlackMismatch { claimed: BigInt, actual: BigInt },
    #[error("combined constant {0} is not negative")]
    NonNegativeSlack(BigInt),
    #[error("split on unknown variable {0}")]
    BadSymbol(String),
    #[error("enumeration box bound for {0} is not implied: {1}")]
    BoxNotImplied(String, Box<Reject>),
    #[error("enumeration box is empty or exceeds {ENUM_MAX_POINTS} points")]
    BoxTooLarge,
    #[error("goal fails at an enumerated point")]
    EnumCounterexample,
    #[error("witness shape does not match the problem: {0}")]
    ShapeMismatch(String),
    #[error("problem cannot be linearized: {0}")]
    Normalization(NormError),
}

/// Accepts iff `w` proves that `hyps` entail `goal`.
pub fn check_witness(hyps: &[SymProp], goal: &SymProp, w: &Witness) -> Result<(), Reject> {
    match w {
        Witness::Enum { bounds } => check_enum(hyps, goal, bounds),
        _ => check_linear(hyps, goal, w),
    }
}

/// A witness that negates two rows whose sum is a negative constant, such
/// as the two range rows of one symbol. Sound checkers must reject it;
/// used to measure checker sensitivity.
pub fn forge_negative_farkas(hyps: &[SymProp], goal: &SymProp) -> Option<Witness> {
    let problem = build_problem(hyps, goal).ok()?;
    let mut forged = Vec::new();
    for rows in &problem.cubes {
        let pair = (0..rows.len()).flat_map(|i| (i + 1..rows.len()).map(move |j| (i, j))).find(|&(i, j)| {
            let sum = rows[i].0.clone().plus(&rows[j].0);
            sum.coeffs.is_empty() && sum.constant.is_positive()
        })?;
        let sum = rows[pair.0].0.clone().plus(&rows[pair.1].0);
        let minus_one = -BigInt::from(1);
        forged.push(Witness::Farkas {
            combination: vec![
                FarkasTerm {
                    row: pair.0,
                    mult: minus_one.clone(),
                },
                FarkasTerm {
                    row: pair.1,
                    mult: minus_one,
                },
            ],
            slack: -sum.constant,
        });
    }
    match forged.len() {
        0 => None,
        1 => forged.pop(),
        _ => Some(Witness::Cubes { cubes: forged }),
    }
}

/// Like [`check_witness`] but rejects `Enum`.
pub(crate) fn check_linear(hyps: &[SymProp], goal: &SymProp, w: &Witness) -> Result<(), Reject> {
    let problem = build_problem(hyps, goal).map_err(Reject::Normalization)?;
    match (problem.cubes.len(), w) {
        (_, Witness::Enum { .. }) => Err(Reject::ShapeMismatch("nested enumeration".into())),
        (n, Witness::Cubes { cubes }) if n != 1 => {
            if cubes.len() != n {
                return Err(Reject::ShapeMismatch(format!("{} cube witnesses for {n} cubes", cubes.len())));
            }
            for (rows, cw) in problem.cubes.iter().zip(cubes) {
                check_cube(rows, cw)?;
            }
            Ok(())
        }
        (1, w) => check_cube(&problem.cubes[0], w),
        (n, _) => Err(Reject::ShapeMismatch(format!("expected {n} cube witnesses"))),
    }
}

fn check_cube(rows: &[Row], w: &Witness) -> Result<(), Reject> {
    let mut rows = rows.to_vec();
    check_cube_rows(&mut rows, w)
}

fn check_cube_rows(rows: &mut Vec<Row>, w: &Witness) -> Result<(), Reject> {
    match w {
        Witness::Farkas { combination, slack } => check_farkas(rows, combination, slack),
        Witness::CaseSplit {
            form,
            pivot,
            below,
            above,
        } => {
            if form.is_empty() {
                return Err(Reject::BadSymbol("empty split form".into()));
            }
            for (v, c) in form {
                if c.is_zero() || !rows.iter().any(|r| r.0.coeffs.contains_key(v)) {
                    return Err(Reject::BadSymbol(v.to_string()));
                }
            }
            let x = LinExpr {
                coeffs: form.clone(),
                constant: BigInt::zero(),
            };
            rows.push(Row(LinExpr::constant(pivot.clone()).minus(&x)));
            let b = check_cube_rows(rows, below);
            rows.pop();
            b?;
            rows.push(Row(x.minus(&LinExpr::constant(pivot.clone())).offset(-1)));
            let a = check_cube_rows(rows, above);
            rows.pop();
            a
        }
        Witness::Enum { .. } | Witness::Cubes { .. } => {
            Err(Reject::ShapeMismatch("cube witness must be a Farkas combination or a split".into()))
        }
    }
}

fn check_farkas(rows: &[Row], combination: &[FarkasTerm], slack: &BigInt) -> Result<(), Reject> {
    let mut sum = LinExpr::default();
    let mut last: Option<usize> = None;
    for t in combination {
        if t.row >= rows.len() {
            return Err(Reject::BadIndex {
                index: t.row,
                rows: rows.len(),
            });
        }
        if last.is_some_and(|l| t.row <= l) {
            return Err(Reject::UnorderedIndex { index: t.row });
        }
        last = Some(t.row);
        if !t.mult.is_positive() && !mutation::active(Mutation::FarkasSign) {
            return Err(Reject::NegativeMultiplier { row: t.row });
        }
        sum.add_scaled(&rows[t.row].0, &t.mult);
    }
    if let Some(v) = sum.coeffs.keys().next() {
        return Err(Reject::NotContradictory(v.to_string()));
    }
    if sum.constant != *slack {
        return Err(Reject::SlackMismatch {
            claimed: slack.clone(),
            actual: sum.constant,
        });
    }
    if !slack.is_negative() {
        return Err(Reject::NonNegativeSlack(slack.clone()));
    }
    Ok(())
}

/// Hypotheses whose symbols all lie in `box_syms`.
pub(crate) fn boxed_hyps<'a>(hyps: &'a [SymProp], box_syms: &BTreeSet<SymId>) -> Vec<&'a SymProp> {
    hyps.iter()
        .filter(|h| {
            let mut s = BTreeSet::new();
            h.symbols(&mut s);
            s.is_subset(box_syms)
        })
        .collect()
}

pub(crate) fn bound_goal(sym: SymId, value: &BigInt, lower: bool) -> Option<SymProp> {
    let v = SymTerm::Lit(value.to_i64()?);
    let s = SymTerm::Sym(sym);
    Some(if lower {
        SymProp::cmp(CmpOp::Le, v, s)
    } else {
        SymProp::cmp(CmpOp::Le, s, v)
    })
}

fn check_enum(hyps: &[SymProp], goal: &SymProp, bounds: &[EnumBound]) -> Result<(), Reject> {
    let mut box_syms = BTreeSet::new();
    let mut points: u64 = 1;
    for (i, b) in bounds.iter().enumerate() {
        if i > 0 && bounds[i - 1].symbol >= b.symbol {
            return Err(Reject::ShapeMismatch("enumeration symbols must be strictly increasing".into()));
        }
        box_syms.insert(b.symbol);
        if b.lo > b.hi {
            return Err(Reject::BoxTooLarge);
        }
        let width = (&b.hi - &b.lo + 1u32).to_u64().ok_or(Reject::BoxTooLarge)?;
        points = points.checked_mul(width).ok_or(Reject::BoxTooLarge)?;
        if points > ENUM_MAX_POINTS {
            return Err(Reject::BoxTooLarge);
        }
    }
    let mut goal_syms = BTreeSet::new();
    goal.symbols(&mut goal_syms);
    if !goal_syms.is_subset(&box_syms) {
        return Err(Reject::ShapeMismatch("goal mentions a symbol outside the box".into()));
    }
    for b in bounds {
        for (lower, value, proof) in [(true, &b.lo, &b.lo_proof), (false, &b.hi, &b.hi_proof)] {
            let g = bound_goal(b.symbol, value, lower).ok_or(Reject::BoxTooLarge)?;
            check_linear(hyps, &g, proof).map_err(|e| Reject::BoxNotImplied(b.symbol.to_string(), Box::new(e)))?;
        }
    }
    let used = boxed_hyps(hyps, &box_syms);
    let ranges: Vec<(SymId, i64, i64)> = bounds
        .iter()
        .map(|b| (b.symbol, b.lo.to_i64().unwrap_or(0), b.hi.to_i64().unwrap_or(0)))
        .collect();
    let found = super::enumerate::find_counterexample(&used, goal, &ranges);
    if found.is_some() {
        return Err(Reject::EnumCounterexample);
    }
    Ok(())
}

/// Decimal-string encoding of big integers: `-?(0|[1-9][0-9]*)`.
pub(crate) mod dec {
    use num_bigint::BigInt;
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &BigInt, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(v)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<BigInt, D::Error> {
        let s = String::deserialize(d)?;
        parse(&s).ok_or_else(|| serde::de::Error::custom(format!("malformed integer `{s}`")))
    }

    pub fn parse(s: &str) -> Option<BigInt> {
        let digits = s.strip_prefix('-').unwrap_or(s);
        let ok = !digits.is_empty()
            && digits.bytes().all(|b| b.is_ascii_digit())
            && (digits == "0" || !digits.starts_with('0'))
            && s != "-0";
        if ok {
            s.parse().ok()
        } else {
            None
        }
    }
}

pub(crate) mod sym_text {
    use serde::{Deserialize, Deserializer, Serializer};

    use crate::solver::linear::Var;
    use crate::symstore::SymId;

    pub fn serialize<S: Serializer>(v: &SymId, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(v)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<SymId, D::Error> {
        let s = String::deserialize(d)?;
        match s.parse::<Var>() {
            Ok(Var::Sym(n)) => Ok(SymId(n)),
            _ => Err(serde::de::Error::custom(format!("malformed symbol `{s}`"))),
        }
    }
}

/// Integer linear form as a JSON object from variable to decimal string.
pub(crate) mod form_text {
    use std::collections::BTreeMap;

    use num_bigint::BigInt;
    use num_traits::Zero;
    use serde::{Deserialize, Deserializer, Serializer};

    use crate::solver::linear::Var;

    pub fn serialize<S: Serializer>(form: &BTreeMap<Var, BigInt>, s: S) -> Result<S::Ok, S::Error> {
        s.collect_map(form.iter().map(|(v, c)| (v.to_string(), c.to_string())))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<BTreeMap<Var, BigInt>, D::Error> {
        let raw = BTreeMap::<String, String>::deserialize(d)?;
        let mut out = BTreeMap::new();
        for (k, v) in raw {
            let var: Var = k.parse().map_err(serde::de::Error::custom)?;
            let c = super::dec::parse(&v)
                .filter(|c| !c.is_zero())
                .ok_or_else(|| serde::de::Error::custom(format!("malformed coefficient `{v}`")))?;
            out.insert(var, c);
        }
        Ok(out)
    }
}
