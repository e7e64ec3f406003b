//! Exhaustive evaluation of propositions over small integer boxes.

use num_bigint::BigInt;
use num_traits::ToPrimitive;

use crate::symstore::{total_binop, SymId, SymProp, SymTerm, Valuation};
use crate::syntax::BinOp;

/// Point assignment, as parallel symbol and value slices.
struct Point<'a> {
    syms: &'a [SymId],
    vals: &'a [i64],
}

impl Point<'_> {
    fn get(&self, s: SymId) -> i64 {
        self.syms.iter().position(|x| *x == s).map_or(0, |i| self.vals[i])
    }

    fn valuation(&self) -> Valuation {
        self.syms
            .iter()
            .zip(self.vals)
            .map(|(s, v)| (*s, BigInt::from(*v)))
            .collect()
    }
}

/// Checked evaluation in `i128`; `None` on overflow.
fn term_fast(t: &SymTerm, p: &Point) -> Option<i128> {
    Some(match t {
        SymTerm::Lit(v) => *v as i128,
        SymTerm::Sym(s) => p.get(*s) as i128,
        SymTerm::Neg(t) => term_fast(t, p)?.checked_neg()?,
        SymTerm::Bin(op, l, r) => {
            let a = term_fast(l, p)?;
            let b = term_fast(r, p)?;
            match op {
                BinOp::Add => a.checked_add(b)?,
                BinOp::Sub => a.checked_sub(b)?,
                BinOp::Mul => a.checked_mul(b)?,
                BinOp::Div if b == 0 => 0,
                BinOp::Mod if b == 0 => a,
                BinOp::Div => a.checked_div(b)?,
                BinOp::Mod => a.checked_rem(b)?,
            }
        }
    })
}

fn term_big(t: &SymTerm, p: &Point) -> BigInt {
    match t {
        SymTerm::Lit(v) => BigInt::from(*v),
        SymTerm::Sym(s) => BigInt::from(p.get(*s)),
        SymTerm::Neg(t) => -term_big(t, p),
        SymTerm::Bin(op, l, r) => total_binop(*op, term_big(l, p), term_big(r, p)),
    }
}

fn prop_holds(q: &SymProp, p: &Point) -> bool {
    match q {
        SymProp::True => true,
        SymProp::False => false,
        SymProp::Cmp(op, l, r) => match (term_fast(l, p), term_fast(r, p)) {
            (Some(a), Some(b)) => op.holds(&a, &b),
            _ => op.holds(&term_big(l, p), &term_big(r, p)),
        },
        SymProp::Not(q) => !prop_holds(q, p),
        SymProp::And(l, r) => prop_holds(l, p) && prop_holds(r, p),
        SymProp::Or(l, r) => prop_holds(l, p) || prop_holds(r, p),
    }
}

/// First point of the box (in lexicographic order) where every hypothesis
/// holds and the goal fails. Symbols outside the box read as 0.
pub fn find_counterexample(hyps: &[&SymProp], goal: &SymProp, ranges: &[(SymId, i64, i64)]) -> Option<Valuation> {
    let syms: Vec<SymId> = ranges.iter().map(|r| r.0).collect();
    let mut vals: Vec<i64> = ranges.iter().map(|r| r.1).collect();
    if ranges.iter().any(|r| r.1 > r.2) {
        return None;
    }
    loop {
        let p = Point { syms: &syms, vals: &vals };
        if hyps.iter().all(|h| prop_holds(h, &p)) && !prop_holds(goal, &p) {
            return Some(p.valuation());
        }
        // Odometer increment, last symbol fastest.
        let mut i = ranges.len();
        loop {
            if i == 0 {
                return None;
            }
            i -= 1;
            if vals[i] < ranges[i].2 {
                vals[i] += 1;
                break;
            }
            vals[i] = ranges[i].1;
        }
    }
}

/// Points of a candidate grid, tried in order when searching for a
/// countermodel outside any provable box.
pub fn probe(hyps: &[SymProp], goal: &SymProp, syms: &[SymId], candidates: &[Vec<i64>], max_points: usize) -> Option<Valuation> {
    let mut idx = vec![0usize; syms.len()];
    let mut tried = 0;
    if candidates.iter().any(|c| c.is_empty()) {
        return None;
    }
    loop {
        let vals: Vec<i64> = idx.iter().enumerate().map(|(k, i)| candidates[k][*i]).collect();
        let p = Point { syms, vals: &vals };
        if hyps.iter().all(|h| prop_holds(h, &p)) && !prop_holds(goal, &p) {
            return Some(p.valuation());
        }
        tried += 1;
        if tried >= max_points {
            return None;
        }
        let mut k = syms.len();
        loop {
            if k == 0 {
                return None;
            }
            k -= 1;
            if idx[k] + 1 < candidates[k].len() {
                idx[k] += 1;
                break;
            }
            idx[k] = 0;
        }
    }
}

pub(crate) fn fits_i64(v: &BigInt) -> Option<i64> {
    v.to_i64()
}
