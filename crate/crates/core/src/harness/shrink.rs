//! Structural shrinking: repeatedly take the first single-edit variant
//! that still fails, where an edit replaces a subtree by `skip`, a child,
//! or a small literal.

use crate::syntax::{check_well_formed, BExpr, Func, IExpr, Stmt};

fn iexpr_variants(e: &IExpr) -> Vec<IExpr> {
    let mut out = Vec::new();
    match e {
        IExpr::Lit(v) => {
            if *v != 0 {
                out.push(IExpr::Lit(0));
            }
            if *v != 0 && *v != 1 {
                out.push(IExpr::Lit(1));
            }
            if v.abs() > 2 {
                out.push(IExpr::Lit(v / 2));
            }
        }
        IExpr::Var(_) => out.push(IExpr::Lit(0)),
        IExpr::Unary(op, a, loc) => {
            out.push(IExpr::Lit(0));
            out.push((**a).clone());
            out.extend(iexpr_variants(a).into_iter().map(|a| IExpr::Unary(*op, Box::new(a), *loc)));
        }
        IExpr::Binary(op, l, r, loc) => {
            out.push(IExpr::Lit(0));
            out.push((**l).clone());
            out.push((**r).clone());
            out.extend(iexpr_variants(l).into_iter().map(|l| IExpr::Binary(*op, Box::new(l), r.clone(), *loc)));
            out.extend(iexpr_variants(r).into_iter().map(|r| IExpr::Binary(*op, l.clone(), Box::new(r), *loc)));
        }
    }
    out
}

fn bexpr_variants(b: &BExpr) -> Vec<BExpr> {
    let mut out = Vec::new();
    match b {
        BExpr::Lit(true) => {}
        BExpr::Lit(false) => out.push(BExpr::Lit(true)),
        BExpr::Cmp(op, l, r) => {
            out.push(BExpr::Lit(true));
            out.push(BExpr::Lit(false));
            out.extend(iexpr_variants(l).into_iter().map(|l| BExpr::Cmp(*op, l, r.clone())));
            out.extend(iexpr_variants(r).into_iter().map(|r| BExpr::Cmp(*op, l.clone(), r)));
        }
        BExpr::Not(a) => {
            out.push(BExpr::Lit(true));
            out.push((**a).clone());
            out.extend(bexpr_variants(a).into_iter().map(BExpr::not));
        }
        BExpr::And(l, r) | BExpr::Or(l, r) => {
            let rebuild = |l: BExpr, r: BExpr| match b {
                BExpr::And(..) => BExpr::and(l, r),
                _ => BExpr::or(l, r),
            };
            out.push(BExpr::Lit(true));
            out.push((**l).clone());
            out.push((**r).clone());
            out.extend(bexpr_variants(l).into_iter().map(|l| rebuild(l, (**r).clone())));
            out.extend(bexpr_variants(r).into_iter().map(|r| rebuild((**l).clone(), r)));
        }
    }
    out
}

fn stmt_variants(s: &Stmt) -> Vec<Stmt> {
    let mut out = Vec::new();
    if *s != Stmt::Skip {
        out.push(Stmt::Skip);
    }
    match s {
        Stmt::Skip => {}
        Stmt::Seq(a, b) => {
            out.push((**a).clone());
            out.push((**b).clone());
            out.extend(stmt_variants(a).into_iter().map(|a| Stmt::seq(a, (**b).clone())));
            out.extend(stmt_variants(b).into_iter().map(|b| Stmt::seq((**a).clone(), b)));
        }
        Stmt::Let(x, e, body) => {
            // Dropping the binder is only well formed if the body ignores
            // it; the caller filters ill-formed variants.
            out.push((**body).clone());
            out.extend(iexpr_variants(e).into_iter().map(|e| Stmt::let_(x.clone(), e, (**body).clone())));
            out.extend(stmt_variants(body).into_iter().map(|b| Stmt::let_(x.clone(), e.clone(), b)));
        }
        Stmt::Assign(x, e) => {
            out.extend(iexpr_variants(e).into_iter().map(|e| Stmt::assign(x.clone(), e)));
        }
        Stmt::If(c, a, b) => {
            out.push((**a).clone());
            out.push((**b).clone());
            out.extend(bexpr_variants(c).into_iter().map(|c| Stmt::if_(c, (**a).clone(), (**b).clone())));
            out.extend(stmt_variants(a).into_iter().map(|a| Stmt::if_(c.clone(), a, (**b).clone())));
            out.extend(stmt_variants(b).into_iter().map(|b| Stmt::if_(c.clone(), (**a).clone(), b)));
        }
        Stmt::While { cond, invariant, body } => {
            out.push((**body).clone());
            out.extend(
                bexpr_variants(cond)
                    .into_iter()
                    .map(|c| Stmt::while_(c, invariant.clone(), (**body).clone())),
            );
            out.extend(
                bexpr_variants(invariant)
                    .into_iter()
                    .map(|i| Stmt::while_(cond.clone(), i, (**body).clone())),
            );
            out.extend(
                stmt_variants(body)
                    .into_iter()
                    .map(|b| Stmt::while_(cond.clone(), invariant.clone(), b)),
            );
        }
        Stmt::Return(e) => {
            out.extend(iexpr_variants(e).into_iter().map(Stmt::Return));
        }
    }
    out
}

/// Single-edit variants of `f`, each well formed.
pub(crate) fn variants(f: &Func) -> Vec<Func> {
    let mut out = Vec::new();
    for body in stmt_variants(&f.body) {
        out.push(Func { body, ..f.clone() });
    }
    for pre in bexpr_variants(&f.pre) {
        out.push(Func { pre, ..f.clone() });
    }
    for post in bexpr_variants(&f.post) {
        out.push(Func { post, ..f.clone() });
    }
    out.retain(|g| check_well_formed(g).is_ok());
    out
}

/// Shrinks `f` while `fails` holds, evaluating `fails` at most `max_steps`
/// times. Returns `f` itself if no variant fails.
pub fn shrink(f: &Func, mut fails: impl FnMut(&Func) -> bool, max_steps: usize) -> Func {
    let mut current = f.clone();
    let mut steps = 0;
    'outer: while steps < max_steps {
        for g in variants(&current) {
            if steps >= max_steps {
                break 'outer;
            }
            steps += 1;
            if fails(&g) {
                current = g;
                continue 'outer;
            }
        }
        break;
    }
    current
}
