//! Fourier-Motzkin elimination with provenance, plus branch and bound for
//! integrality. Produces either a refutation witness or an integer model.

use std::collections::BTreeMap;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

use super::linear::{LinExpr, Row, Var};
use super::witness::{FarkasTerm, Witness};

/// Search limits. Exceeding any of them makes the cube `Incomplete`.
#[derive(Debug, Clone, Copy)]
pub struct Limits {
    pub max_rows: usize,
    pub max_nodes: usize,
    pub max_depth: usize,
}

impl Default for Limits {
    fn default() -> Self {
        Limits {
            max_rows: 4000,
            max_nodes: 4000,
            max_depth: 40,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Incomplete(pub &'static str);

pub type Model = BTreeMap<Var, BigInt>;

pub enum CubeResult {
    Refuted(Witness),
    Model(Model),
}

/// Derived row: `expr >= 0` equal to `sum(prov[i] * rows[i])`.
#[derive(Debug, Clone)]
struct FRow {
    expr: LinExpr,
    prov: BTreeMap<usize, BigRational>,
}

impl FRow {
    /// Divides by the gcd of all coefficients and the constant.
    fn make_primitive(&mut self) {
        let g = self
            .expr
            .coeffs
            .values()
            .fold(self.expr.constant.abs(), |g, c| g.gcd(c));
        if g.is_zero() || g.is_one() {
            return;
        }
        for c in self.expr.coeffs.values_mut() {
            *c /= &g;
        }
        self.expr.constant /= &g;
        let inv = BigRational::new(BigInt::one(), g);
        for p in self.prov.values_mut() {
            *p *= &inv;
        }
    }
}

enum Fm {
    Contradiction(BTreeMap<usize, BigRational>),
    /// Rows containing each eliminated variable, in elimination order, and
    /// integer cuts `form >= bound` that the derived rows imply.
    Feasible(Vec<(Var, Vec<LinExpr>)>, Vec<LinExpr>),
}

/// For a derived row `g*f + c >= 0` whose coefficients share a factor `g`
/// not dividing `c`, the tightened row `f + floor(c/g) >= 0`.
fn cut_of(e: &LinExpr) -> Option<LinExpr> {
    let g = e.coeffs.values().fold(BigInt::zero(), |g, c| g.gcd(c));
    if g.is_zero() || g.is_one() || e.constant.is_multiple_of(&g) {
        return None;
    }
    Some(LinExpr {
        coeffs: e.coeffs.iter().map(|(v, c)| (*v, c / &g)).collect(),
        constant: e.constant.div_floor(&g),
    })
}

fn combine(p: &FRow, pa: &BigInt, n: &FRow, nb: &BigInt) -> FRow {
    // p has coefficient pa > 0, n has nb < 0 on the eliminated variable.
    let kp = nb.abs();
    let kn = pa.clone();
    let mut expr = p.expr.scaled(&kp);
    expr.add_scaled(&n.expr, &kn);
    let mut prov = BTreeMap::new();
    let (kp, kn) = (BigRational::from(kp), BigRational::from(kn));
    for (i, m) in &p.prov {
        *prov.entry(*i).or_insert_with(BigRational::zero) += m * &kp;
    }
    for (i, m) in &n.prov {
        *prov.entry(*i).or_insert_with(BigRational::zero) += m * &kn;
    }
    let mut row = FRow { expr, prov };
    row.make_primitive();
    row
}

fn fourier_motzkin(rows: &[Row], limits: &Limits) -> Result<Fm, Incomplete> {
    let mut active: Vec<FRow> = rows
        .iter()
        .enumerate()
        .map(|(i, r)| {
            let mut f = FRow {
                expr: r.0.clone(),
                prov: [(i, BigRational::one())].into(),
            };
            f.make_primitive();
            f
        })
        .collect();
    let mut stages = Vec::new();
    let mut cuts = Vec::new();
    loop {
        // Constant rows are decided on the spot.
        let mut kept = Vec::with_capacity(active.len());
        for r in active {
            if r.expr.is_constant() {
                if r.expr.constant.is_negative() {
                    return Ok(Fm::Contradiction(r.prov));
                }
            } else {
                kept.push(r);
            }
        }
        active = dedupe(kept);
        if active.len() > limits.max_rows {
            return Err(Incomplete("too many rows"));
        }
        let mut counts: BTreeMap<Var, (usize, usize)> = BTreeMap::new();
        for r in &active {
            for (v, c) in &r.expr.coeffs {
                let e = counts.entry(*v).or_default();
                if c.is_positive() {
                    e.0 += 1;
                } else {
                    e.1 += 1;
                }
            }
        }
        let Some(var) = counts
            .iter()
            .min_by_key(|(v, (p, n))| (p * n, p + n, **v))
            .map(|(v, _)| *v)
        else {
            return Ok(Fm::Feasible(stages, cuts));
        };
        let (with, without): (Vec<FRow>, Vec<FRow>) =
            active.into_iter().partition(|r| r.expr.coeffs.contains_key(&var));
        let mut next = without;
        for p in with.iter().filter(|r| r.expr.coeffs[&var].is_positive()) {
            for n in with.iter().filter(|r| r.expr.coeffs[&var].is_negative()) {
                let row = combine(p, &p.expr.coeffs[&var], n, &n.expr.coeffs[&var]);
                if let Some(cut) = cut_of(&row.expr) {
                    cuts.push(cut);
                }
                next.push(row);
                if next.len() > limits.max_rows * 2 {
                    return Err(Incomplete("too many rows"));
                }
            }
        }
        stages.push((var, with.into_iter().map(|r| r.expr).collect()));
        active = next;
    }
}

/// Keeps the tightest row for each coefficient vector.
fn dedupe(rows: Vec<FRow>) -> Vec<FRow> {
    let mut best: BTreeMap<BTreeMap<Var, BigInt>, usize> = BTreeMap::new();
    let mut out: Vec<FRow> = Vec::with_capacity(rows.len());
    for r in rows {
        match best.get(&r.expr.coeffs) {
            Some(&i) => {
                if r.expr.constant < out[i].expr.constant {
                    out[i] = r;
                }
            }
            None => {
                best.insert(r.expr.coeffs.clone(), out.len());
                out.push(r);
            }
        }
    }
    out
}

fn ceil_div(a: &BigRational) -> BigInt {
    a.ceil().to_integer()
}

fn floor_div(a: &BigRational) -> BigInt {
    a.floor().to_integer()
}

/// Rational bounds on `var` from `rows`, evaluated at `model`.
fn bounds(var: Var, rows: &[LinExpr], model: &mut Model) -> (Option<BigRational>, Option<BigRational>) {
    let mut lo: Option<BigRational> = None;
    let mut hi: Option<BigRational> = None;
    for r in rows {
        let a = &r.coeffs[&var];
        let mut rest = r.constant.clone();
        for (v, c) in &r.coeffs {
            if *v != var {
                // A variable that vanished from later stages is unconstrained
                // there; fix it to 0.
                let x = model.entry(*v).or_insert_with(BigInt::zero);
                rest += c * &*x;
            }
        }
        let b = BigRational::new(-rest, a.clone());
        if a.is_positive() {
            if lo.as_ref().map_or(true, |l| b > *l) {
                lo = Some(b);
            }
        } else if hi.as_ref().map_or(true, |h| b < *h) {
            hi = Some(b);
        }
    }
    (lo, hi)
}

/// Integer model by back substitution, or the first variable whose rational
/// interval contains no integer together with that interval's lower end.
fn back_substitute(stages: &[(Var, Vec<LinExpr>)]) -> Result<Model, (Var, BigRational)> {
    let mut model = Model::new();
    for (var, rows) in stages.iter().rev() {
        let (lo, hi) = bounds(*var, rows, &mut model);
        let ilo = lo.as_ref().map(ceil_div);
        let ihi = hi.as_ref().map(floor_div);
        let value = match (&ilo, &ihi) {
            (Some(l), Some(h)) if l > h => return Err((*var, lo.expect("lower bound present"))),
            (Some(l), _) if l.is_positive() => l.clone(),
            (_, Some(h)) if h.is_negative() => h.clone(),
            _ => BigInt::zero(),
        };
        model.insert(*var, value);
    }
    Ok(model)
}

fn farkas(rows: &[Row], prov: &BTreeMap<usize, BigRational>) -> Witness {
    let lcm = prov.values().fold(BigInt::one(), |l, m| l.lcm(m.denom()));
    let mut combination = Vec::new();
    let mut sum = LinExpr::default();
    for (i, m) in prov {
        if m.is_zero() {
            continue;
        }
        let mult = (m * BigRational::from(lcm.clone())).to_integer();
        sum.add_scaled(&rows[*i].0, &mult);
        combination.push(FarkasTerm { row: *i, mult });
    }
    debug_assert!(sum.is_constant() && sum.constant.is_negative(), "bad refutation");
    Witness::Farkas {
        combination,
        slack: sum.constant,
    }
}

/// Cuts from single eliminations of each variable over `rows`.
fn harvest_cuts(rows: &[Row]) -> Vec<LinExpr> {
    let mut vars = std::collections::BTreeSet::new();
    for r in rows {
        vars.extend(r.0.coeffs.keys().copied());
    }
    let mut out = Vec::new();
    for v in vars {
        for p in rows.iter().filter(|r| r.0.coeffs.get(&v).is_some_and(|c| c.is_positive())) {
            for n in rows.iter().filter(|r| r.0.coeffs.get(&v).is_some_and(|c| c.is_negative())) {
                let mut e = p.0.scaled(&n.0.coeffs[&v].abs());
                e.add_scaled(&n.0, &p.0.coeffs[&v]);
                if let Some(cut) = cut_of(&e) {
                    out.push(cut);
                }
            }
        }
    }
    out
}

/// Refutes `rows` over the integers, or finds an integer model.
pub fn solve_cube(rows: &[Row], limits: &Limits) -> Result<CubeResult, Incomplete> {
    let mut nodes = 0;
    let mut work = rows.to_vec();
    solve(&mut work, 0, &mut nodes, limits)
}

fn solve(rows: &mut Vec<Row>, depth: usize, nodes: &mut usize, limits: &Limits) -> Result<CubeResult, Incomplete> {
    *nodes += 1;
    if *nodes > limits.max_nodes {
        return Err(Incomplete("branch and bound budget exhausted"));
    }
    if depth > limits.max_depth {
        return Err(Incomplete("branch and bound too deep"));
    }
    let (stages, cuts) = match fourier_motzkin(rows, limits)? {
        Fm::Contradiction(prov) => return Ok(CubeResult::Refuted(farkas(rows, &prov))),
        Fm::Feasible(stages, cuts) => (stages, cuts),
    };
    let (var, lo) = match back_substitute(&stages) {
        Ok(model) => {
            if rows.iter().all(|r| r.holds(&model)) {
                return Ok(CubeResult::Model(model));
            }
            return Err(Incomplete("back substitution produced a non-model"));
        }
        Err(split) => split,
    };
    // Prefer a cut not yet among the rows: its `below` side contradicts the
    // derived row, its `above` side is the tightened row.
    let fresh_cut = cuts
        .into_iter()
        .chain(harvest_cuts(rows))
        .find(|c| !rows.iter().any(|r| r.0 == *c));
    let (x, pivot) = match fresh_cut {
        Some(cut) => {
            let pivot = -cut.constant.clone() - 1;
            let form = LinExpr {
                coeffs: cut.coeffs,
                constant: BigInt::zero(),
            };
            (form, pivot)
        }
        None => (LinExpr::var(var), floor_div(&lo)),
    };
    let below_row = Row(LinExpr::constant(pivot.clone()).minus(&x));
    let above_row = Row(x.clone().minus(&LinExpr::constant(pivot.clone())).offset(-1));
    let mut branch = |extra: Row, rows: &mut Vec<Row>| {
        rows.push(extra);
        let r = solve(rows, depth + 1, nodes, limits);
        rows.pop();
        r
    };
    let below = match branch(below_row, rows)? {
        CubeResult::Refuted(w) => w,
        m @ CubeResult::Model(_) => return Ok(m),
    };
    let above = match branch(above_row, rows)? {
        CubeResult::Refuted(w) => w,
        m @ CubeResult::Model(_) => return Ok(m),
    };
    Ok(CubeResult::Refuted(Witness::CaseSplit {
        form: x.coeffs,
        pivot,
        below: Box::new(below),
        above: Box::new(above),
    }))
}

/// Integer bounds on `var` implied by `rows` (rationally, then rounded
/// inward). `None` when the rows are rationally infeasible or the row
/// budget is exceeded; callers must prove any bound they rely on.
pub fn project_bounds(rows: &[Row], var: Var, limits: &Limits) -> Option<(Option<BigInt>, Option<BigInt>)> {
    let mut others: Vec<Row> = rows.to_vec();
    let mut vars: std::collections::BTreeSet<Var> = std::collections::BTreeSet::new();
    for r in rows {
        vars.extend(r.0.coeffs.keys().copied());
    }
    vars.remove(&var);
    for v in vars {
        others = eliminate(&others, v, limits)?;
    }
    let mut lo: Option<BigInt> = None;
    let mut hi: Option<BigInt> = None;
    for r in &others {
        if r.0.is_constant() {
            if r.0.constant.is_negative() {
                return None;
            }
            continue;
        }
        let a = &r.0.coeffs[&var];
        let b = BigRational::new(-r.0.constant.clone(), a.clone());
        if a.is_positive() {
            let c = ceil_div(&b);
            if lo.as_ref().map_or(true, |l| c > *l) {
                lo = Some(c);
            }
        } else {
            let f = floor_div(&b);
            if hi.as_ref().map_or(true, |h| f < *h) {
                hi = Some(f);
            }
        }
    }
    Some((lo, hi))
}

/// One elimination step without provenance. `None` on a constant
/// contradiction or when the row budget is exceeded.
fn eliminate(rows: &[Row], var: Var, limits: &Limits) -> Option<Vec<Row>> {
    let mut out = Vec::new();
    let mut pos = Vec::new();
    let mut neg = Vec::new();
    for r in rows {
        match r.0.coeffs.get(&var) {
            None => out.push(r.clone()),
            Some(c) if c.is_positive() => pos.push((r, c.clone())),
            Some(c) => neg.push((r, c.abs())),
        }
    }
    for (p, a) in &pos {
        for (n, b) in &neg {
            let mut e = p.0.scaled(b);
            e.add_scaled(&n.0, a);
            let g = e.coeffs.values().fold(e.constant.abs(), |g, c| g.gcd(c));
            if !g.is_zero() && !g.is_one() {
                e = LinExpr {
                    coeffs: e.coeffs.into_iter().map(|(v, c)| (v, c / &g)).collect(),
                    constant: e.constant / &g,
                };
            }
            out.push(Row(e));
        }
    }
    let mut seen = std::collections::BTreeSet::new();
    out.retain(|r| seen.insert(r.clone()));
    if out.iter().any(|r| r.0.is_constant() && r.0.constant.is_negative()) || out.len() > limits.max_rows {
        return None;
    }
    Some(out)
}
