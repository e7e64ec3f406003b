//! Recursive descent parser. Scoping, shadowing and literal-range checks
//! happen while parsing so every error carries a source position.

use super::ast::*;
use super::lexer::{is_reserved, tokenize, Tok, Token};
use super::ParseError;

type PResult<T> = Result<T, ParseError>;

pub fn parse_program(src: &str) -> PResult<Program> {
    let tokens = tokenize(src)?;
    let mut p = Parser {
        tokens,
        pos: 0,
        scope: Vec::new(),
        allow_result: false,
    };
    let main = p.func()?;
    p.expect(Tok::Eof, "end of input after the function body")?;
    Ok(Program { main })
}

struct Parser {
    tokens: Vec<Token>,
    pos: usize,
    /// In-scope variables, innermost last.
    scope: Vec<String>,
    allow_result: bool,
}

impl Parser {
    fn peek(&self) -> &Tok {
        &self.tokens[self.pos].tok
    }

    fn peek_at(&self, k: usize) -> &Tok {
        let i = (self.pos + k).min(self.tokens.len() - 1);
        &self.tokens[i].tok
    }

    fn loc(&self) -> Loc {
        self.tokens[self.pos].loc
    }

    fn advance(&mut self) -> &Token {
        let t = &self.tokens[self.pos];
        if self.pos + 1 < self.tokens.len() {
            self.pos += 1;
        }
        t
    }

    fn eat(&mut self, t: Tok) -> bool {
        if *self.peek() == t {
            self.advance();
            true
        } else {
            false
        }
    }

    fn unexpected(&self, expected: &str) -> ParseError {
        ParseError::new(
            self.loc(),
            format!("expected {expected}, found {}", self.peek().describe()),
        )
    }

    fn expect(&mut self, t: Tok, expected: &str) -> PResult<()> {
        if self.eat(t) {
            Ok(())
        } else {
            Err(self.unexpected(expected))
        }
    }

    fn ident(&mut self) -> PResult<(String, Loc)> {
        let loc = self.loc();
        match self.peek().clone() {
            Tok::Ident(s) => {
                self.advance();
                Ok((s, loc))
            }
            _ => Err(self.unexpected("an identifier")),
        }
    }

    fn declare(&mut self, name: &str, loc: Loc) -> PResult<()> {
        if is_reserved(name) {
            return Err(ParseError::new(loc, format!("`{name}` is reserved")));
        }
        if self.scope.iter().any(|s| s == name) {
            return Err(ParseError::new(
                loc,
                format!("`{name}` shadows a variable that is already in scope"),
            ));
        }
        self.scope.push(name.to_string());
        Ok(())
    }

    fn func(&mut self) -> PResult<Func> {
        self.expect(Tok::KwInt, "`int` return type")?;
        let (name, _) = self.ident()?;
        self.expect(Tok::LParen, "`(`")?;
        let mut params = Vec::new();
        if self.eat(Tok::KwVoid) {
        } else if *self.peek() != Tok::RParen {
            loop {
                self.expect(Tok::KwInt, "`int` parameter type")?;
                let (p, loc) = self.ident()?;
                self.declare(&p, loc)?;
                params.push(p);
                if !self.eat(Tok::Comma) {
                    break;
                }
            }
        }
        self.expect(Tok::RParen, "`)`")?;

        let pre = self.annotation(Tok::KwRequires, "requires")?;
        self.allow_result = true;
        let post = self.annotation(Tok::KwEnsures, "ensures")?;
        self.allow_result = false;

        let open = self.loc();
        if *self.peek() == Tok::AnnotStart {
            return Err(ParseError::new(open, "unexpected annotation before function body"));
        }
        self.expect(Tok::LBrace, "`{` opening the function body")?;
        let body = self.block_items()?;
        self.expect(Tok::RBrace, "`}`")?;
        Ok(Func {
            name,
            params,
            pre,
            post,
            body,
        })
    }

    fn annotation(&mut self, kw: Tok, what: &str) -> PResult<BExpr> {
        let loc = self.loc();
        if !self.eat(Tok::AnnotStart) {
            return Err(ParseError::new(loc, format!("missing `//@ {what} ...;` annotation")));
        }
        if !self.eat(kw) {
            return Err(self.unexpected(&format!("`{what}` in annotation")));
        }
        let e = self.bexpr()?;
        self.expect(Tok::Semi, "`;` ending the annotation")?;
        Ok(e)
    }

    /// Statements up to the closing `}` (not consumed). Declarations scope
    /// over the remainder of the block.
    fn block_items(&mut self) -> PResult<Stmt> {
        let depth = self.scope.len();
        let r = self.block_items_inner();
        self.scope.truncate(depth);
        r
    }

    fn block_items_inner(&mut self) -> PResult<Stmt> {
        let mut items: Vec<Item> = Vec::new();
        while !matches!(self.peek(), Tok::RBrace | Tok::Eof) {
            if *self.peek() == Tok::KwInt {
                self.advance();
                let (x, loc) = self.ident()?;
                self.expect(Tok::Assign, "`=` (declarations must be initialised)")?;
                let init = self.iexpr()?;
                self.expect(Tok::Semi, "`;`")?;
                self.declare(&x, loc)?;
                items.push(Item::Let(x, init));
            } else {
                items.push(Item::Stmt(self.stmt()?));
            }
        }
        let mut acc: Option<Stmt> = None;
        for item in items.into_iter().rev() {
            acc = Some(match item {
                Item::Let(x, e) => Stmt::Let(x, e, Box::new(acc.unwrap_or(Stmt::Skip))),
                Item::Stmt(s) => match acc {
                    None => s,
                    Some(rest) => Stmt::seq(s, rest),
                },
            });
        }
        Ok(acc.unwrap_or(Stmt::Skip))
    }

    fn braced(&mut self) -> PResult<Stmt> {
        self.expect(Tok::LBrace, "`{`")?;
        let s = self.block_items()?;
        self.expect(Tok::RBrace, "`}`")?;
        Ok(s)
    }

    /// Branch or loop body: a braced block or a single statement.
    fn sub_stmt(&mut self) -> PResult<Stmt> {
        if *self.peek() == Tok::KwInt {
            return Err(ParseError::new(
                self.loc(),
                "a declaration cannot be the body of `if`/`while`; wrap it in braces",
            ));
        }
        self.stmt()
    }

    fn stmt(&mut self) -> PResult<Stmt> {
        let loc = self.loc();
        match self.peek().clone() {
            Tok::Semi => {
                self.advance();
                Ok(Stmt::Skip)
            }
            Tok::LBrace => self.braced(),
            Tok::KwReturn => {
                self.advance();
                let e = self.iexpr()?;
                self.expect(Tok::Semi, "`;`")?;
                Ok(Stmt::Return(e))
            }
            Tok::KwIf => {
                self.advance();
                self.expect(Tok::LParen, "`(`")?;
                let c = self.bexpr()?;
                self.expect(Tok::RParen, "`)`")?;
                let then = self.sub_stmt()?;
                let els = if self.eat(Tok::KwElse) {
                    self.sub_stmt()?
                } else {
                    Stmt::Skip
                };
                Ok(Stmt::if_(c, then, els))
            }
            Tok::KwWhile => {
                self.advance();
                self.expect(Tok::LParen, "`(`")?;
                let cond = self.bexpr()?;
                self.expect(Tok::RParen, "`)`")?;
                if *self.peek() != Tok::AnnotStart {
                    return Err(ParseError::new(
                        loc,
                        "loop is missing its `//@ invariant ...;` annotation",
                    ));
                }
                let invariant = self.annotation(Tok::KwInvariant, "invariant")?;
                let body = self.sub_stmt()?;
                Ok(Stmt::while_(cond, invariant, body))
            }
            Tok::Ident(x) => {
                self.advance();
                if !self.scope.contains(&x) {
                    return Err(ParseError::new(loc, format!("assignment to undeclared variable `{x}`")));
                }
                self.expect(Tok::Assign, "`=`")?;
                let e = self.iexpr()?;
                self.expect(Tok::Semi, "`;`")?;
                Ok(Stmt::Assign(x, e))
            }
            Tok::AnnotStart => Err(ParseError::new(loc, "annotation is not allowed here")),
            _ => Err(self.unexpected("a statement")),
        }
    }

    // ---- boolean expressions ----

    fn bexpr(&mut self) -> PResult<BExpr> {
        let mut l = self.band()?;
        while self.eat(Tok::OrOr) {
            let r = self.band()?;
            l = BExpr::or(l, r);
        }
        Ok(l)
    }

    fn band(&mut self) -> PResult<BExpr> {
        let mut l = self.bunary()?;
        while self.eat(Tok::AndAnd) {
            let r = self.bunary()?;
            l = BExpr::and(l, r);
        }
        Ok(l)
    }

    fn bunary(&mut self) -> PResult<BExpr> {
        match self.peek() {
            Tok::Bang => {
                self.advance();
                Ok(BExpr::not(self.bunary()?))
            }
            Tok::KwTrue => {
                self.advance();
                Ok(BExpr::Lit(true))
            }
            Tok::KwFalse => {
                self.advance();
                Ok(BExpr::Lit(false))
            }
            Tok::LParen => {
                // Either a parenthesised boolean or a comparison whose left
                // operand starts with `(`: try the comparison first.
                let save = self.pos;
                match self.comparison() {
                    Ok(b) => Ok(b),
                    Err(e1) => {
                        let reached = self.pos;
                        self.pos = save;
                        self.advance();
                        match self.bexpr().and_then(|b| {
                            self.expect(Tok::RParen, "`)`")?;
                            Ok(b)
                        }) {
                            Ok(b) => Ok(b),
                            Err(e2) => {
                                if reached > self.pos {
                                    Err(e1)
                                } else {
                                    Err(e2)
                                }
                            }
                        }
                    }
                }
            }
            _ => self.comparison(),
        }
    }

    fn comparison(&mut self) -> PResult<BExpr> {
        let l = self.iexpr()?;
        let op = match self.peek() {
            Tok::EqEq => CmpOp::Eq,
            Tok::NotEq => CmpOp::Ne,
            Tok::Lt => CmpOp::Lt,
            Tok::Le => CmpOp::Le,
            Tok::Gt => CmpOp::Gt,
            Tok::Ge => CmpOp::Ge,
            _ => return Err(self.unexpected("a comparison operator")),
        };
        self.advance();
        let r = self.iexpr()?;
        Ok(BExpr::Cmp(op, l, r))
    }

    // ---- arithmetic expressions ----

    fn iexpr(&mut self) -> PResult<IExpr> {
        let mut l = self.term()?;
        loop {
            let loc = self.loc();
            let op = match self.peek() {
                Tok::Plus => BinOp::Add,
                Tok::Minus => BinOp::Sub,
                _ => return Ok(l),
            };
            self.advance();
            let r = self.term()?;
            l = IExpr::Binary(op, Box::new(l), Box::new(r), loc);
        }
    }

    fn term(&mut self) -> PResult<IExpr> {
        let mut l = self.unary()?;
        loop {
            let loc = self.loc();
            let op = match self.peek() {
                Tok::Star => BinOp::Mul,
                Tok::Slash => BinOp::Div,
                Tok::Percent => BinOp::Mod,
                _ => return Ok(l),
            };
            self.advance();
            let r = self.unary()?;
            l = IExpr::Binary(op, Box::new(l), Box::new(r), loc);
        }
    }

    fn unary(&mut self) -> PResult<IExpr> {
        let loc = self.loc();
        if *self.peek() == Tok::Minus {
            // `-` directly applied to a literal is a negative literal.
            if let Tok::Int(v) = *self.peek_at(1) {
                self.advance();
                self.advance();
                let v = -(v as i128);
                if v < INT_MIN as i128 {
                    return Err(ParseError::new(loc, "integer literal out of `int` range"));
                }
                return Ok(IExpr::Lit(v as i64));
            }
            self.advance();
            let e = self.unary()?;
            return Ok(IExpr::Unary(UnOp::Neg, Box::new(e), loc));
        }
        self.primary()
    }

    fn primary(&mut self) -> PResult<IExpr> {
        let loc = self.loc();
        match self.peek().clone() {
            Tok::Int(v) => {
                self.advance();
                if v > INT_MAX as u64 {
                    return Err(ParseError::new(loc, "integer literal out of `int` range"));
                }
                Ok(IExpr::Lit(v as i64))
            }
            Tok::Ident(x) => {
                self.advance();
                let visible = self.scope.contains(&x) || (self.allow_result && x == RESULT);
                if !visible {
                    return Err(ParseError::new(loc, format!("unbound variable `{x}`")));
                }
                Ok(IExpr::Var(x))
            }
            Tok::LParen => {
                self.advance();
                let e = self.iexpr()?;
                self.expect(Tok::RParen, "`)`")?;
                Ok(e)
            }
            _ => Err(self.unexpected("an expression")),
        }
    }
}

enum Item {
    Let(String, IExpr),
    Stmt(Stmt),
}
