//! Random bounded entailment problems and a brute-force decision oracle
//! that shares no code with the solver.

use std::fmt;

use num_traits::ToPrimitive;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::symstore::{SymProp, SymTerm, Valuation};
use crate::syntax::CmpOp;

/// `sum(coeffs[i] * s_i) + constant  op  0`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Atom {
    pub coeffs: Vec<i64>,
    pub constant: i64,
    pub op: CmpOp,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Formula {
    Atom(Atom),
    Not(Box<Formula>),
    And(Box<Formula>, Box<Formula>),
    Or(Box<Formula>, Box<Formula>),
}

impl Formula {
    fn holds(&self, point: &[i64]) -> bool {
        match self {
            Formula::Atom(a) => {
                let v: i64 = a.coeffs.iter().zip(point).map(|(c, x)| c * x).sum::<i64>() + a.constant;
                a.op.holds(&v, &0)
            }
            Formula::Not(f) => !f.holds(point),
            Formula::And(l, r) => l.holds(point) && r.holds(point),
            Formula::Or(l, r) => l.holds(point) || r.holds(point),
        }
    }

    fn to_prop(&self) -> SymProp {
        match self {
            Formula::Atom(a) => {
                let mut lhs: Option<SymTerm> = None;
                for (i, &c) in a.coeffs.iter().enumerate() {
                    if c == 0 {
                        continue;
                    }
                    let term = SymTerm::mul(SymTerm::Lit(c), SymTerm::sym(i as u32));
                    lhs = Some(match lhs {
                        None => term,
                        Some(l) => SymTerm::add(l, term),
                    });
                }
                SymProp::cmp(a.op, lhs.unwrap_or(SymTerm::Lit(0)), SymTerm::Lit(-a.constant))
            }
            Formula::Not(f) => SymProp::not(f.to_prop()),
            Formula::And(l, r) => SymProp::and(l.to_prop(), r.to_prop()),
            Formula::Or(l, r) => SymProp::or(l.to_prop(), r.to_prop()),
        }
    }
}

/// Box bounds on every symbol, extra hypotheses and a goal.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Instance {
    pub bounds: Vec<(i64, i64)>,
    pub extra: Vec<Formula>,
    pub goal: Formula,
}

impl Instance {
    pub fn hyps(&self) -> Vec<SymProp> {
        let mut out = Vec::new();
        for (i, &(lo, hi)) in self.bounds.iter().enumerate() {
            out.push(SymProp::cmp(CmpOp::Le, SymTerm::Lit(lo), SymTerm::sym(i as u32)));
            out.push(SymProp::cmp(CmpOp::Le, SymTerm::sym(i as u32), SymTerm::Lit(hi)));
        }
        out.extend(self.extra.iter().map(Formula::to_prop));
        out
    }

    pub fn goal(&self) -> SymProp {
        self.goal.to_prop()
    }

    fn hyps_hold(&self, point: &[i64]) -> bool {
        self.bounds.iter().zip(point).all(|(&(lo, hi), &x)| lo <= x && x <= hi)
            && self.extra.iter().all(|f| f.holds(point))
    }

    /// Whether `nu` satisfies the hypotheses and falsifies the goal.
    pub fn is_countermodel(&self, nu: &Valuation) -> bool {
        let point: Option<Vec<i64>> = (0..self.bounds.len())
            .map(|i| nu.get(&crate::symstore::SymId(i as u32)).and_then(|v| v.to_i64()))
            .collect();
        point.is_some_and(|p| self.hyps_hold(&p) && !self.goal.holds(&p))
    }
}

impl fmt::Display for Instance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let hyps: Vec<String> = self.hyps().iter().map(|h| h.to_string()).collect();
        write!(f, "{} |= {}", hyps.join(", "), self.goal())
    }
}

/// A point of the box satisfying the hypotheses and falsifying the goal,
/// or `None` if the entailment is valid.
pub fn brute_force_valid(inst: &Instance) -> Option<Vec<i64>> {
    let n = inst.bounds.len();
    let mut point: Vec<i64> = inst.bounds.iter().map(|b| b.0).collect();
    if inst.bounds.iter().any(|&(lo, hi)| lo > hi) {
        return None;
    }
    loop {
        if inst.hyps_hold(&point) && !inst.goal.holds(&point) {
            return Some(point);
        }
        // Odometer increment.
        let mut i = 0;
        loop {
            if i == n {
                return None;
            }
            if point[i] < inst.bounds[i].1 {
                point[i] += 1;
                break;
            }
            point[i] = inst.bounds[i].0;
            i += 1;
        }
    }
}

fn atom(rng: &mut ChaCha8Rng, bounds: &[(i64, i64)]) -> Atom {
    let coeffs: Vec<i64> = bounds.iter().map(|_| rng.gen_range(-8..=8)).collect();
    // Anchor the constant at a box point so both outcomes are common.
    let anchor: i64 = coeffs
        .iter()
        .zip(bounds)
        .map(|(c, &(lo, hi))| c * rng.gen_range(lo..=hi))
        .sum();
    let ops = CmpOp::ALL;
    Atom {
        coeffs,
        constant: -anchor + rng.gen_range(-3..=3),
        op: ops[rng.gen_range(0..ops.len())],
    }
}

/// Instance over one to three symbols, each boxed inside [-64, 64] with
/// width at most 20, coefficients in [-8, 8].
pub fn random_instance(rng: &mut ChaCha8Rng) -> Instance {
    let n = rng.gen_range(1..=3);
    let bounds: Vec<(i64, i64)> = (0..n)
        .map(|_| {
            let lo = rng.gen_range(-64..=64);
            (lo, (lo + rng.gen_range(0..=20)).min(64))
        })
        .collect();
    let mut extra = Vec::new();
    for _ in 0..rng.gen_range(0..=2) {
        let a = Formula::Atom(atom(rng, &bounds));
        extra.push(if rng.gen_bool(0.2) {
            Formula::Or(Box::new(a), Box::new(Formula::Atom(atom(rng, &bounds))))
        } else {
            a
        });
    }
    let a = Formula::Atom(atom(rng, &bounds));
    let goal = match rng.gen_range(0..10) {
        0 => Formula::And(Box::new(a), Box::new(Formula::Atom(atom(rng, &bounds)))),
        1 => Formula::Or(Box::new(a), Box::new(Formula::Atom(atom(rng, &bounds)))),
        2 => Formula::Not(Box::new(a)),
        _ => a,
    };
    Instance { bounds, extra, goal }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn le(coeffs: Vec<i64>, constant: i64) -> Formula {
        Formula::Atom(Atom {
            coeffs,
            constant,
            op: CmpOp::Le,
        })
    }

    #[test]
    fn brute_force_finds_boundary_countermodel() {
        // 0 <= s <= 5 |= s - 4 <= 0 fails only at s = 5.
        let inst = Instance {
            bounds: vec![(0, 5)],
            extra: vec![],
            goal: le(vec![1], -4),
        };
        assert_eq!(brute_force_valid(&inst), Some(vec![5]));
        let valid = Instance {
            goal: le(vec![1], -5),
            ..inst
        };
        assert_eq!(brute_force_valid(&valid), None);
    }

    #[test]
    fn unsatisfiable_hypotheses_make_any_goal_valid() {
        let inst = Instance {
            bounds: vec![(0, 3), (0, 3)],
            extra: vec![le(vec![-1, -1], 7)],
            goal: le(vec![0, 0], 1),
        };
        assert_eq!(brute_force_valid(&inst), None);
    }
}
