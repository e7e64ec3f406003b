//! Canonical pretty-printer. The output re-parses to an equal AST.

use std::fmt::{self, Write};

use super::ast::*;

const INDENT: &str = "    ";

pub fn program(p: &Program) -> String {
    let f = &p.main;
    let mut out = String::new();
    let params = if f.params.is_empty() {
        String::new()
    } else {
        f.params
            .iter()
            .map(|p| format!("int {p}"))
            .collect::<Vec<_>>()
            .join(", ")
    };
    let _ = writeln!(out, "int {}({})", f.name, params);
    let _ = writeln!(out, "    //@ requires {};", bexpr(&f.pre));
    let _ = writeln!(out, "    //@ ensures {};", bexpr(&f.post));
    out.push_str("{\n");
    items(&mut out, &f.body, 1);
    out.push_str("}\n");
    out
}

fn pad(out: &mut String, depth: usize) {
    for _ in 0..depth {
        out.push_str(INDENT);
    }
}

/// Prints `s` as the statement list of a block.
fn items(out: &mut String, s: &Stmt, depth: usize) {
    match s {
        Stmt::Skip => {}
        Stmt::Seq(a, b) => {
            match **a {
                // A nested sequence or a declaration would otherwise merge
                // with (or capture) the statements that follow.
                Stmt::Seq(..) | Stmt::Let(..) => {
                    pad(out, depth);
                    out.push_str("{\n");
                    items(out, a, depth + 1);
                    pad(out, depth);
                    out.push_str("}\n");
                }
                Stmt::Skip => {
                    pad(out, depth);
                    out.push_str(";\n");
                }
                _ => single(out, a, depth),
            }
            if **b == Stmt::Skip {
                pad(out, depth);
                out.push_str(";\n");
            } else {
                items(out, b, depth);
            }
        }
        Stmt::Let(x, e, body) => {
            pad(out, depth);
            let _ = writeln!(out, "int {x} = {};", iexpr(e));
            items(out, body, depth);
        }
        _ => single(out, s, depth),
    }
}

/// Prints one statement that is neither a sequence nor a declaration.
fn single(out: &mut String, s: &Stmt, depth: usize) {
    pad(out, depth);
    match s {
        Stmt::Assign(x, e) => {
            let _ = writeln!(out, "{x} = {};", iexpr(e));
        }
        Stmt::Return(e) => {
            let _ = writeln!(out, "return {};", iexpr(e));
        }
        Stmt::If(c, a, b) => {
            let _ = writeln!(out, "if ({}) {{", bexpr(c));
            items(out, a, depth + 1);
            pad(out, depth);
            out.push_str("} else {\n");
            items(out, b, depth + 1);
            pad(out, depth);
            out.push_str("}\n");
        }
        Stmt::While {
            cond,
            invariant,
            body,
        } => {
            let _ = writeln!(out, "while ({})", bexpr(cond));
            pad(out, depth + 1);
            let _ = writeln!(out, "//@ invariant {};", bexpr(invariant));
            pad(out, depth);
            out.push_str("{\n");
            items(out, body, depth + 1);
            pad(out, depth);
            out.push_str("}\n");
        }
        Stmt::Skip => out.push_str(";\n"),
        Stmt::Seq(..) | Stmt::Let(..) => {
            out.push_str("{\n");
            items(out, s, depth + 1);
            pad(out, depth);
            out.push_str("}\n");
        }
    }
}

pub fn iexpr(e: &IExpr) -> String {
    let mut s = String::new();
    let _ = write_iexpr(&mut s, e, 0);
    s
}

fn prec_of(e: &IExpr) -> u8 {
    match e {
        IExpr::Binary(op, ..) => op.precedence(),
        _ => 3,
    }
}

fn write_iexpr(out: &mut String, e: &IExpr, ctx: u8) -> fmt::Result {
    match e {
        IExpr::Lit(v) => write!(out, "{v}"),
        IExpr::Var(x) => out.write_str(x),
        IExpr::Unary(UnOp::Neg, inner, _) => {
            out.write_str("-(")?;
            write_iexpr(out, inner, 0)?;
            out.write_str(")")
        }
        IExpr::Binary(op, l, r, _) => {
            let p = op.precedence();
            let paren = p < ctx;
            if paren {
                out.write_str("(")?;
            }
            write_iexpr(out, l, p)?;
            write!(out, " {} ", op.symbol())?;
            // Left associative: an equal-precedence right operand needs parens.
            if prec_of(r) <= p {
                out.write_str("(")?;
                write_iexpr(out, r, 0)?;
                out.write_str(")")?;
            } else {
                write_iexpr(out, r, p + 1)?;
            }
            if paren {
                out.write_str(")")?;
            }
            Ok(())
        }
    }
}

pub fn bexpr(b: &BExpr) -> String {
    let mut s = String::new();
    write_bexpr(&mut s, b, 0);
    s
}

// Precedence: `||` = 1, `&&` = 2, atoms = 3.
fn write_bexpr(out: &mut String, b: &BExpr, ctx: u8) {
    match b {
        BExpr::Lit(v) => out.push_str(if *v { "true" } else { "false" }),
        BExpr::Cmp(op, l, r) => {
            out.push_str(&iexpr(l));
            out.push(' ');
            out.push_str(op.symbol());
            out.push(' ');
            out.push_str(&iexpr(r));
        }
        BExpr::Not(inner) => {
            out.push_str("!(");
            write_bexpr(out, inner, 0);
            out.push(')');
        }
        BExpr::And(l, r) | BExpr::Or(l, r) => {
            let (p, sym) = if matches!(b, BExpr::And(..)) { (2, "&&") } else { (1, "||") };
            let paren = p < ctx;
            if paren {
                out.push('(');
            }
            write_bexpr(out, l, p);
            out.push(' ');
            out.push_str(sym);
            out.push(' ');
            write_bexpr(out, r, p + 1);
            if paren {
                out.push(')');
            }
        }
    }
}
