//! Lexing, parsing, simplification and pretty-printing of the annotated
//! dialect.

pub mod ast;
mod lexer;
mod parser;
pub mod pretty;

use thiserror::Error;

pub use ast::*;

/// Lexical, syntactic, annotation-placement, scoping or literal-range error.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("{line}:{col}: {message}")]
pub struct ParseError {
    pub line: u32,
    pub col: u32,
    pub message: String,
}

impl ParseError {
    pub(crate) fn new(loc: Loc, message: impl Into<String>) -> Self {
        Self {
            line: loc.line,
            col: loc.col,
            message: message.into(),
        }
    }
}

/// Parses a source file holding a single annotated function.
pub fn parse(source: &str) -> Result<Program, ParseError> {
    parser::parse_program(source)
}

/// Canonical source text of `p`.
pub fn pretty(p: &Program) -> String {
    pretty::program(p)
}

/// Rewrites every `Seq(x, Skip)` to `x`, bottom-up.
pub fn simplify(s: &Stmt) -> Stmt {
    match s {
        Stmt::Seq(a, b) => {
            let a = simplify(a);
            let b = simplify(b);
            if b == Stmt::Skip {
                a
            } else {
                Stmt::seq(a, b)
            }
        }
        Stmt::Let(x, e, body) => Stmt::Let(x.clone(), e.clone(), Box::new(simplify(body))),
        Stmt::If(c, a, b) => Stmt::if_(c.clone(), simplify(a), simplify(b)),
        Stmt::While {
            cond,
            invariant,
            body,
        } => Stmt::while_(cond.clone(), invariant.clone(), simplify(body)),
        Stmt::Skip | Stmt::Assign(..) | Stmt::Return(_) => s.clone(),
    }
}

/// `p` with its body simplified.
pub fn simplify_program(p: &Program) -> Program {
    let mut q = p.clone();
    q.main.body = simplify(&p.main.body);
    q
}

/// Checks the scoping rules on an AST built in code: no free variables, no
/// shadowing, `result` only in the postcondition, literals in range.
pub fn check_well_formed(f: &Func) -> Result<(), String> {
    fn lits_ok(e: &IExpr) -> Result<(), String> {
        match e {
            IExpr::Lit(v) if !in_int_range(*v) => Err(format!("literal {v} out of int range")),
            IExpr::Lit(_) | IExpr::Var(_) => Ok(()),
            IExpr::Unary(_, e, _) => lits_ok(e),
            IExpr::Binary(_, l, r, _) => {
                lits_ok(l)?;
                lits_ok(r)
            }
        }
    }
    fn ident_ok(x: &str) -> Result<(), String> {
        let mut cs = x.chars();
        let first_ok = cs.next().is_some_and(|c| c.is_ascii_alphabetic() || c == '_');
        if !first_ok || !cs.all(|c| c.is_ascii_alphanumeric() || c == '_') {
            return Err(format!("invalid identifier `{x}`"));
        }
        if lexer::is_reserved(x) {
            return Err(format!("`{x}` is reserved"));
        }
        Ok(())
    }
    fn iexpr_ok(e: &IExpr, scope: &[String], extra: Option<&str>) -> Result<(), String> {
        lits_ok(e)?;
        let mut err = None;
        e.for_each_var(&mut |x| {
            if err.is_none() && !scope.iter().any(|s| s == x) && extra != Some(x) {
                err = Some(format!("unbound variable `{x}`"));
            }
        });
        err.map_or(Ok(()), Err)
    }
    fn bexpr_ok(b: &BExpr, scope: &[String], extra: Option<&str>) -> Result<(), String> {
        match b {
            BExpr::Lit(_) => Ok(()),
            BExpr::Cmp(_, l, r) => {
                iexpr_ok(l, scope, extra)?;
                iexpr_ok(r, scope, extra)
            }
            BExpr::Not(b) => bexpr_ok(b, scope, extra),
            BExpr::And(l, r) | BExpr::Or(l, r) => {
                bexpr_ok(l, scope, extra)?;
                bexpr_ok(r, scope, extra)
            }
        }
    }
    fn stmt_ok(s: &Stmt, scope: &mut Vec<String>) -> Result<(), String> {
        match s {
            Stmt::Skip => Ok(()),
            Stmt::Seq(a, b) => {
                stmt_ok(a, scope)?;
                stmt_ok(b, scope)
            }
            Stmt::Let(x, e, body) => {
                iexpr_ok(e, scope, None)?;
                ident_ok(x)?;
                if scope.contains(x) {
                    return Err(format!("`{x}` shadows a variable in scope"));
                }
                scope.push(x.clone());
                let r = stmt_ok(body, scope);
                scope.pop();
                r
            }
            Stmt::Assign(x, e) => {
                if !scope.contains(x) {
                    return Err(format!("assignment to undeclared variable `{x}`"));
                }
                iexpr_ok(e, scope, None)
            }
            Stmt::If(c, a, b) => {
                bexpr_ok(c, scope, None)?;
                stmt_ok(a, scope)?;
                stmt_ok(b, scope)
            }
            Stmt::While {
                cond,
                invariant,
                body,
            } => {
                bexpr_ok(cond, scope, None)?;
                bexpr_ok(invariant, scope, None)?;
                stmt_ok(body, scope)
            }
            Stmt::Return(e) => iexpr_ok(e, scope, None),
        }
    }

    ident_ok(&f.name).or_else(|e| if f.name == "main" { Ok(()) } else { Err(e) })?;
    let mut scope: Vec<String> = Vec::new();
    for p in &f.params {
        ident_ok(p)?;
        if scope.contains(p) {
            return Err(format!("duplicate parameter `{p}`"));
        }
        scope.push(p.clone());
    }
    bexpr_ok(&f.pre, &scope, None)?;
    bexpr_ok(&f.post, &scope, Some(RESULT))?;
    stmt_ok(&f.body, &mut scope)
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) const COUNTDOWN: &str = "\
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

    #[test]
    fn countdown_parses_with_invariant() {
        let p = parse(COUNTDOWN).unwrap();
        assert_eq!(p.main.pre, BExpr::Lit(true));
        assert_eq!(
            p.main.post,
            BExpr::cmp(CmpOp::Eq, IExpr::var("result"), IExpr::lit(0))
        );
        let Stmt::Let(x, init, body) = &p.main.body else {
            panic!("expected declaration, got {:?}", p.main.body)
        };
        assert_eq!(x, "x");
        assert_eq!(*init, IExpr::lit(32767));
        let Stmt::Seq(w, ret) = &**body else { panic!() };
        let Stmt::While { cond, invariant, body } = &**w else { panic!() };
        assert_eq!(*cond, BExpr::cmp(CmpOp::Lt, IExpr::lit(0), IExpr::var("x")));
        assert_eq!(*invariant, BExpr::cmp(CmpOp::Le, IExpr::lit(0), IExpr::var("x")));
        assert_eq!(
            **body,
            Stmt::assign("x", IExpr::sub(IExpr::var("x"), IExpr::lit(1)))
        );
        assert_eq!(**ret, Stmt::Return(IExpr::var("x")));
    }

    #[test]
    fn minimal_single_line_program() {
        let p = parse("int main() //@ requires true; //@ ensures result == 0; { return 0; }").unwrap();
        assert_eq!(p.main.pre, BExpr::Lit(true));
        assert_eq!(
            p.main.post,
            BExpr::cmp(CmpOp::Eq, IExpr::var("result"), IExpr::lit(0))
        );
        assert_eq!(p.main.body, Stmt::Return(IExpr::lit(0)));
    }

    #[test]
    fn loop_without_invariant_is_rejected() {
        let err = parse("int main() //@ requires true; //@ ensures true; { while (true) { x = 1; } }")
            .unwrap_err();
        assert!(err.message.contains("invariant"), "{err}");
        assert_eq!((err.line, err.col), (1, 51));
    }

    #[test]
    fn scoping_errors() {
        let unbound = "int main() //@ requires true; //@ ensures true; { return y; }";
        assert!(parse(unbound).unwrap_err().message.contains("unbound"));

        let shadow = "int main(int a) //@ requires true; //@ ensures true; { int a = 1; return a; }";
        assert!(parse(shadow).unwrap_err().message.contains("shadows"));

        let result_in_pre = "int main() //@ requires result == 0; //@ ensures true; { return 0; }";
        assert!(parse(result_in_pre).is_err());

        let result_in_body = "int main() //@ requires true; //@ ensures true; { return result; }";
        assert!(parse(result_in_body).is_err());

        let local_in_pre = "int main(int a) //@ requires b == 0; //@ ensures true; { int b = 0; return b; }";
        assert!(parse(local_in_pre).is_err());

        let out_of_scope = "int main() //@ requires true; //@ ensures true; { { int a = 1; } return a; }";
        assert!(parse(out_of_scope).is_err());
    }

    #[test]
    fn literal_range() {
        let ok = "int main() //@ requires true; //@ ensures true; { return -2147483648; }";
        assert_eq!(parse(ok).unwrap().main.body, Stmt::Return(IExpr::lit(INT_MIN)));
        let too_big = "int main() //@ requires true; //@ ensures true; { return 2147483648; }";
        let e = parse(too_big).unwrap_err();
        assert!(e.message.contains("range"), "{e}");
        let too_small = "int main() //@ requires true; //@ ensures true; { return -2147483649; }";
        assert!(parse(too_small).is_err());
    }

    #[test]
    fn annotation_placement() {
        let misplaced = "int main() //@ requires true; //@ ensures true; { //@ invariant true; return 0; }";
        assert!(parse(misplaced).unwrap_err().message.contains("annotation"));
        let swapped = "int main() //@ ensures true; //@ requires true; { return 0; }";
        assert!(parse(swapped).is_err());
        let multiline = "int main() //@ requires true\n; //@ ensures true; { return 0; }";
        assert!(parse(multiline).is_err());
        let missing = "int main() //@ requires true; { return 0; }";
        assert!(parse(missing).unwrap_err().message.contains("ensures"));
    }

    #[test]
    fn comments_are_skipped() {
        let src = "/* header */ int main() // plain\n //@ requires true; // trailing\n //@ ensures true;\n { return 0; /* x */ }";
        assert_eq!(parse(src).unwrap().main.body, Stmt::Return(IExpr::lit(0)));
    }

    #[test]
    fn precedence_and_associativity() {
        let src = "int f(int a, int b) //@ requires true; //@ ensures true; { return a - b - -3 * (a + b) % 2; }";
        let p = parse(src).unwrap();
        let expected = IExpr::sub(
            IExpr::sub(IExpr::var("a"), IExpr::var("b")),
            IExpr::rem(
                IExpr::mul(IExpr::lit(-3), IExpr::add(IExpr::var("a"), IExpr::var("b"))),
                IExpr::lit(2),
            ),
        );
        assert_eq!(p.main.body, Stmt::Return(expected));
    }

    #[test]
    fn parenthesised_conditions() {
        let src = "int f(int a) //@ requires (a + 1) < 3 && (a > 0 || !(a == 5)); //@ ensures true; { return 0; }";
        let p = parse(src).unwrap();
        let expected = BExpr::and(
            BExpr::cmp(CmpOp::Lt, IExpr::add(IExpr::var("a"), IExpr::lit(1)), IExpr::lit(3)),
            BExpr::or(
                BExpr::cmp(CmpOp::Gt, IExpr::var("a"), IExpr::lit(0)),
                BExpr::not(BExpr::cmp(CmpOp::Eq, IExpr::var("a"), IExpr::lit(5))),
            ),
        );
        assert_eq!(p.main.pre, expected);
    }

    #[test]
    fn simplify_examples() {
        let a = Stmt::assign("x", IExpr::lit(1));
        assert_eq!(simplify(&Stmt::seq(a.clone(), Stmt::Skip)), a);
        assert_eq!(simplify(&Stmt::Skip), Stmt::Skip);
        let r = Stmt::Return(IExpr::lit(0));
        let nested = Stmt::seq(Stmt::seq(r.clone(), Stmt::Skip), Stmt::Skip);
        assert_eq!(simplify(&nested), r);
        // Seq(Skip, x) is left alone.
        let left = Stmt::seq(Stmt::Skip, r.clone());
        assert_eq!(simplify(&left), left);
    }

    #[test]
    fn pretty_countdown_layout() {
        let p = parse(COUNTDOWN).unwrap();
        let text = pretty(&p);
        let lines: Vec<&str> = text.lines().collect();
        let w = lines.iter().position(|l| l.trim_start().starts_with("while (0 < x)")).unwrap();
        assert_eq!(lines[w + 1].trim(), "//@ invariant 0 <= x;");
        assert_eq!(parse(&text).unwrap(), p);
    }

    #[test]
    fn pretty_minimal_is_canonical() {
        let p = parse("int main() //@ requires true; //@ ensures result == 0; { return 0; }").unwrap();
        assert_eq!(
            pretty(&p),
            "int main()\n    //@ requires true;\n    //@ ensures result == 0;\n{\n    return 0;\n}\n"
        );
    }

    #[test]
    fn pretty_awkward_shapes_round_trip() {
        let x = || IExpr::var("x");
        let body = Stmt::let_(
            "x",
            IExpr::neg(IExpr::lit(5)),
            Stmt::seq(
                Stmt::seq(Stmt::Skip, Stmt::seq(Stmt::assign("x", IExpr::sub(x(), IExpr::sub(x(), IExpr::lit(-1)))), Stmt::Skip)),
                Stmt::seq(
                    Stmt::let_("y", IExpr::lit(1), Stmt::Skip),
                    Stmt::if_(BExpr::Lit(false), Stmt::Skip, Stmt::Return(IExpr::neg(x()))),
                ),
            ),
        );
        let p = Program {
            main: Func {
                name: "main".into(),
                params: vec![],
                pre: BExpr::Lit(true),
                post: BExpr::not(BExpr::not(BExpr::or(BExpr::Lit(true), BExpr::and(BExpr::Lit(false), BExpr::Lit(true))))),
                body,
            },
        };
        check_well_formed(&p.main).unwrap();
        let text = pretty(&p);
        assert_eq!(parse(&text).unwrap(), p, "{text}");
    }

    #[test]
    fn well_formedness_of_built_asts() {
        let f = Func {
            name: "main".into(),
            params: vec![],
            pre: BExpr::Lit(true),
            post: BExpr::Lit(true),
            body: Stmt::assign("x", IExpr::lit(1)),
        };
        assert!(check_well_formed(&f).is_err());
    }
}
