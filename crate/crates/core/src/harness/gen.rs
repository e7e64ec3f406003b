//! Random well-formed annotated functions.
//!
//! Every loop but a rare few is guarded by its own counter, which only the
//! loop header and the first body statement touch, so runs are short.

use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::syntax::{BExpr, BinOp, CmpOp, Func, IExpr, Stmt, INT_MAX, INT_MIN};
use crate::vfsem::{exec_stmt_fuel, CStore, VfOutcome};

/// Shape bounds for generated programs.
#[derive(Debug, Clone)]
pub struct GenConfig {
    pub max_params: usize,
    pub max_block: usize,
    pub max_depth: usize,
    pub max_expr_depth: usize,
    pub small_lit: i64,
    pub max_trip: i64,
}

impl Default for GenConfig {
    fn default() -> Self {
        GenConfig {
            max_params: 2,
            max_block: 4,
            max_depth: 2,
            max_expr_depth: 2,
            small_lit: 12,
            max_trip: 6,
        }
    }
}

const PARAMS: [&str; 3] = ["a", "b", "c"];

#[derive(Clone, Default)]
struct Scope {
    /// Readable variables.
    vars: Vec<String>,
    /// Variables a generated assignment may write; excludes loop counters.
    writable: Vec<String>,
}

enum Item {
    Decl(String, IExpr),
    Stmt(Stmt),
}

fn fold(items: Vec<Item>) -> Stmt {
    let mut acc: Option<Stmt> = None;
    for item in items.into_iter().rev() {
        acc = Some(match (item, acc) {
            (Item::Decl(x, e), rest) => Stmt::let_(x, e, rest.unwrap_or(Stmt::Skip)),
            (Item::Stmt(s), None) => s,
            (Item::Stmt(s), Some(rest)) => Stmt::seq(s, rest),
        });
    }
    acc.unwrap_or(Stmt::Skip)
}

pub struct Generator<'r> {
    rng: &'r mut ChaCha8Rng,
    cfg: GenConfig,
    locals: usize,
    counters: usize,
}

impl<'r> Generator<'r> {
    pub fn new(rng: &'r mut ChaCha8Rng, cfg: GenConfig) -> Self {
        Generator {
            rng,
            cfg,
            locals: 0,
            counters: 0,
        }
    }

    fn chance(&mut self, p: f64) -> bool {
        self.rng.gen_bool(p)
    }

    fn lit(&mut self) -> IExpr {
        let r: f64 = self.rng.gen();
        if r < 0.04 {
            IExpr::lit(*[INT_MAX, INT_MIN, INT_MAX - 1, INT_MIN + 1].choose(self.rng).unwrap())
        } else if r < 0.08 {
            IExpr::lit(self.rng.gen_range(-100_000..=100_000))
        } else {
            let n = self.cfg.small_lit;
            IExpr::lit(self.rng.gen_range(-n..=n))
        }
    }

    fn iexpr(&mut self, scope: &Scope, depth: usize) -> IExpr {
        if depth == 0 || self.chance(0.4) {
            return if !scope.vars.is_empty() && self.chance(0.6) {
                IExpr::var(scope.vars.choose(self.rng).unwrap().clone())
            } else {
                self.lit()
            };
        }
        let r: f64 = self.rng.gen();
        if r < 0.08 {
            return IExpr::neg(self.iexpr(scope, depth - 1));
        }
        let op = if r < 0.38 {
            BinOp::Add
        } else if r < 0.63 {
            BinOp::Sub
        } else if r < 0.83 {
            BinOp::Mul
        } else if r < 0.92 {
            BinOp::Div
        } else {
            BinOp::Mod
        };
        let l = self.iexpr(scope, depth - 1);
        let r = if matches!(op, BinOp::Div | BinOp::Mod) && self.chance(0.7) {
            let mut d = 0;
            while d == 0 {
                d = self.rng.gen_range(-5..=5);
            }
            IExpr::lit(d)
        } else {
            self.iexpr(scope, depth - 1)
        };
        IExpr::bin(op, l, r)
    }

    fn cmp_op(&mut self) -> CmpOp {
        *CmpOp::ALL.choose(self.rng).unwrap()
    }

    fn bexpr(&mut self, scope: &Scope, depth: usize) -> BExpr {
        let r: f64 = self.rng.gen();
        if depth > 0 && r < 0.12 {
            BExpr::and(self.bexpr(scope, depth - 1), self.bexpr(scope, depth - 1))
        } else if depth > 0 && r < 0.22 {
            BExpr::or(self.bexpr(scope, depth - 1), self.bexpr(scope, depth - 1))
        } else if depth > 0 && r < 0.27 {
            BExpr::not(self.bexpr(scope, depth - 1))
        } else if r < 0.3 {
            BExpr::Lit(self.chance(0.7))
        } else {
            let op = self.cmp_op();
            let d = self.cfg.max_expr_depth.saturating_sub(1);
            BExpr::cmp(op, self.iexpr(scope, d), self.iexpr(scope, d))
        }
    }

    fn fresh_local(&mut self) -> String {
        self.locals += 1;
        format!("v{}", self.locals - 1)
    }

    fn fresh_counter(&mut self) -> String {
        self.counters += 1;
        format!("i{}", self.counters - 1)
    }

    /// Statements of a block, with declarations scoping over the rest.
    /// A function body always ends in a return.
    fn block(&mut self, scope: &Scope, depth: usize, must_return: bool) -> Stmt {
        let mut scope = scope.clone();
        let n = self.rng.gen_range(1..=self.cfg.max_block);
        let mut items = Vec::new();
        for _ in 0..n {
            let r: f64 = self.rng.gen();
            if r < 0.3 {
                let e = self.iexpr(&scope, self.cfg.max_expr_depth);
                let x = self.fresh_local();
                scope.vars.push(x.clone());
                scope.writable.push(x.clone());
                items.push(Item::Decl(x, e));
            } else if r < 0.55 && !scope.writable.is_empty() {
                let x = scope.writable.choose(self.rng).unwrap().clone();
                let e = self.iexpr(&scope, self.cfg.max_expr_depth);
                items.push(Item::Stmt(Stmt::assign(x, e)));
            } else if r < 0.75 && depth > 0 {
                let c = self.bexpr(&scope, 1);
                let a = self.block(&scope, depth - 1, false);
                let b = if self.chance(0.5) {
                    self.block(&scope, depth - 1, false)
                } else {
                    Stmt::Skip
                };
                items.push(Item::Stmt(Stmt::if_(c, a, b)));
            } else if depth > 0 {
                items.extend(self.loop_items(&scope, depth - 1));
            } else if r < 0.85 && !must_return {
                let e = self.iexpr(&scope, self.cfg.max_expr_depth);
                items.push(Item::Stmt(Stmt::Return(e)));
                break;
            }
        }
        if must_return {
            let e = if self.chance(0.5) && !scope.vars.is_empty() {
                IExpr::var(scope.vars.choose(self.rng).unwrap().clone())
            } else {
                self.iexpr(&scope, self.cfg.max_expr_depth)
            };
            items.push(Item::Stmt(Stmt::Return(e)));
        }
        fold(items)
    }

    /// A counter declaration followed by its loop.
    fn loop_items(&mut self, scope: &Scope, depth: usize) -> Vec<Item> {
        if self.chance(0.02) {
            let c = self.bexpr(scope, 1);
            let body = self.block(scope, depth, false);
            return vec![Item::Stmt(Stmt::while_(c, BExpr::Lit(true), body))];
        }
        let i = self.fresh_counter();
        let trip = self.rng.gen_range(0..=self.cfg.max_trip);
        let mut inner = scope.clone();
        inner.vars.push(i.clone());
        let bump = Stmt::assign(i.clone(), IExpr::add(IExpr::var(i.clone()), IExpr::lit(1)));
        let guard = BExpr::cmp(CmpOp::Lt, IExpr::var(i.clone()), IExpr::lit(trip));
        let exact = BExpr::and(
            BExpr::cmp(CmpOp::Le, IExpr::lit(0), IExpr::var(i.clone())),
            BExpr::cmp(CmpOp::Le, IExpr::var(i.clone()), IExpr::lit(trip)),
        );
        let (cond, invariant, rest) = if self.chance(0.5) {
            // Template: trivial invariant, body of writes that cannot fail.
            let mut parts = Vec::new();
            for _ in 0..self.rng.gen_range(0..=2) {
                if inner.writable.is_empty() || self.chance(0.3) {
                    let x = self.fresh_local();
                    parts.push(Item::Decl(x, IExpr::mul(IExpr::var(i.clone()), IExpr::lit(2))));
                } else {
                    let x = inner.writable.choose(self.rng).unwrap().clone();
                    let e = if self.chance(0.5) { IExpr::var(i.clone()) } else { self.lit() };
                    parts.push(Item::Stmt(Stmt::assign(x, e)));
                }
            }
            (guard, BExpr::Lit(true), fold(parts))
        } else {
            let cond = if self.chance(0.6) {
                guard
            } else {
                BExpr::and(guard, self.bexpr(&inner, 1))
            };
            let invariant = match self.rng.gen_range(0..3) {
                0 => exact,
                1 => BExpr::and(exact, self.bexpr(&inner, 0)),
                _ => self.bexpr(&inner, 1),
            };
            (cond, invariant, self.block(&inner, depth, false))
        };
        let body = if rest == Stmt::Skip { bump } else { Stmt::seq(bump, rest) };
        vec![
            Item::Decl(i, IExpr::lit(0)),
            Item::Stmt(Stmt::while_(cond, invariant, body)),
        ]
    }

    fn precondition(&mut self, params: &[String]) -> BExpr {
        let mut conj: Option<BExpr> = None;
        for p in params {
            if self.chance(0.6) {
                let lo = self.rng.gen_range(-50..=50);
                let hi = lo + self.rng.gen_range(0..=400);
                let b = BExpr::and(
                    BExpr::cmp(CmpOp::Le, IExpr::lit(lo), IExpr::var(p.clone())),
                    BExpr::cmp(CmpOp::Le, IExpr::var(p.clone()), IExpr::lit(hi)),
                );
                conj = Some(match conj {
                    None => b,
                    Some(c) => BExpr::and(c, b),
                });
            }
        }
        conj.unwrap_or(BExpr::Lit(true))
    }

    /// A postcondition that holds on at least one sample run when possible.
    fn postcondition(&mut self, params: &[String], body: &Stmt) -> BExpr {
        let sample: CStore = params.iter().map(|p| (p.clone(), 0)).collect();
        let observed = match exec_stmt_fuel(&sample, body, 10_000) {
            VfOutcome::Return(z, _) => Some(z),
            _ => None,
        };
        let result = || IExpr::var(crate::syntax::RESULT);
        let r: f64 = self.rng.gen();
        match observed {
            _ if r < 0.12 => BExpr::Lit(true),
            Some(z) if r < 0.45 => BExpr::cmp(CmpOp::Eq, result(), IExpr::lit(z)),
            Some(z) if r < 0.65 => {
                let lo = z.saturating_sub(self.rng.gen_range(0..=20)).max(INT_MIN);
                BExpr::cmp(CmpOp::Ge, result(), IExpr::lit(lo))
            }
            Some(z) if r < 0.85 => {
                let hi = z.saturating_add(self.rng.gen_range(0..=20)).min(INT_MAX);
                BExpr::cmp(CmpOp::Le, result(), IExpr::lit(hi))
            }
            _ => {
                let op = self.cmp_op();
                let other = if !params.is_empty() && self.chance(0.6) {
                    IExpr::var(params.choose(self.rng).unwrap().clone())
                } else {
                    self.lit()
                };
                BExpr::cmp(op, result(), other)
            }
        }
    }

    pub fn func(&mut self) -> Func {
        let n = if self.chance(0.1) {
            0
        } else {
            self.rng.gen_range(1..=self.cfg.max_params.max(1)).min(self.cfg.max_params)
        };
        let params: Vec<String> = PARAMS[..n].iter().map(|s| s.to_string()).collect();
        let scope = Scope {
            vars: params.clone(),
            writable: params.clone(),
        };
        let depth = self.cfg.max_depth;
        let body = self.block(&scope, depth, true);
        let pre = self.precondition(&params);
        let post = self.postcondition(&params, &body);
        Func {
            name: "main".into(),
            params,
            pre,
            post,
            body,
        }
    }
}
