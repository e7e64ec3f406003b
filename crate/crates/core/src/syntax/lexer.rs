use super::ast::Loc;
use super::ParseError;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Tok {
    Int(u64),
    Ident(String),
    KwInt,
    KwVoid,
    KwIf,
    KwElse,
    KwWhile,
    KwReturn,
    KwTrue,
    KwFalse,
    KwRequires,
    KwEnsures,
    KwInvariant,
    /// `//@`, opening an annotation that runs up to its terminating `;`.
    AnnotStart,
    LParen,
    RParen,
    LBrace,
    RBrace,
    Semi,
    Comma,
    Assign,
    Plus,
    Minus,
    Star,
    Slash,
    Percent,
    EqEq,
    NotEq,
    Lt,
    Le,
    Gt,
    Ge,
    Bang,
    AndAnd,
    OrOr,
    Eof,
}

impl Tok {
    pub fn describe(&self) -> String {
        match self {
            Tok::Int(v) => format!("integer `{v}`"),
            Tok::Ident(s) => format!("identifier `{s}`"),
            Tok::AnnotStart => "`//@`".into(),
            Tok::Eof => "end of input".into(),
            other => format!("`{}`", other.text()),
        }
    }

    fn text(&self) -> &'static str {
        match self {
            Tok::KwInt => "int",
            Tok::KwVoid => "void",
            Tok::KwIf => "if",
            Tok::KwElse => "else",
            Tok::KwWhile => "while",
            Tok::KwReturn => "return",
            Tok::KwTrue => "true",
            Tok::KwFalse => "false",
            Tok::KwRequires => "requires",
            Tok::KwEnsures => "ensures",
            Tok::KwInvariant => "invariant",
            Tok::LParen => "(",
            Tok::RParen => ")",
            Tok::LBrace => "{",
            Tok::RBrace => "}",
            Tok::Semi => ";",
            Tok::Comma => ",",
            Tok::Assign => "=",
            Tok::Plus => "+",
            Tok::Minus => "-",
            Tok::Star => "*",
            Tok::Slash => "/",
            Tok::Percent => "%",
            Tok::EqEq => "==",
            Tok::NotEq => "!=",
            Tok::Lt => "<",
            Tok::Le => "<=",
            Tok::Gt => ">",
            Tok::Ge => ">=",
            Tok::Bang => "!",
            Tok::AndAnd => "&&",
            Tok::OrOr => "||",
            _ => "?",
        }
    }
}

#[derive(Debug, Clone)]
pub struct Token {
    pub tok: Tok,
    pub loc: Loc,
}

pub fn tokenize(src: &str) -> Result<Vec<Token>, ParseError> {
    Lexer {
        chars: src.chars().collect(),
        pos: 0,
        line: 1,
        col: 1,
        in_annot: None,
    }
    .run()
}

struct Lexer {
    chars: Vec<char>,
    pos: usize,
    line: u32,
    col: u32,
    /// Location of the `//@` of the annotation currently being lexed.
    in_annot: Option<Loc>,
}

impl Lexer {
    fn peek(&self, k: usize) -> Option<char> {
        self.chars.get(self.pos + k).copied()
    }

    fn bump(&mut self) -> Option<char> {
        let c = self.chars.get(self.pos).copied()?;
        self.pos += 1;
        if c == '\n' {
            self.line += 1;
            self.col = 1;
        } else {
            self.col += 1;
        }
        Some(c)
    }

    fn loc(&self) -> Loc {
        Loc::new(self.line, self.col)
    }

    fn run(mut self) -> Result<Vec<Token>, ParseError> {
        let mut out = Vec::new();
        loop {
            let Some(c) = self.peek(0) else { break };
            if c == '\n' {
                if let Some(at) = self.in_annot {
                    return Err(ParseError::new(at, "annotation must end with `;` on the same line"));
                }
                self.bump();
                continue;
            }
            if c.is_whitespace() {
                self.bump();
                continue;
            }
            let loc = self.loc();
            if c == '/' && self.peek(1) == Some('/') {
                if self.peek(2) == Some('@') {
                    if self.in_annot.is_some() {
                        return Err(ParseError::new(loc, "nested annotation"));
                    }
                    self.bump();
                    self.bump();
                    self.bump();
                    self.in_annot = Some(loc);
                    out.push(Token { tok: Tok::AnnotStart, loc });
                    continue;
                }
                if let Some(at) = self.in_annot {
                    return Err(ParseError::new(at, "annotation must end with `;` on the same line"));
                }
                while let Some(c) = self.peek(0) {
                    if c == '\n' {
                        break;
                    }
                    self.bump();
                }
                continue;
            }
            if c == '/' && self.peek(1) == Some('*') {
                self.bump();
                self.bump();
                loop {
                    match self.peek(0) {
                        None => return Err(ParseError::new(loc, "unterminated comment")),
                        Some('*') if self.peek(1) == Some('/') => {
                            self.bump();
                            self.bump();
                            break;
                        }
                        Some('\n') if self.in_annot.is_some() => {
                            return Err(ParseError::new(loc, "comment inside annotation spans lines"));
                        }
                        _ => {
                            self.bump();
                        }
                    }
                }
                continue;
            }
            let tok = if c.is_ascii_digit() {
                let mut v: u64 = 0;
                while let Some(d) = self.peek(0).and_then(|c| c.to_digit(10)) {
                    v = v
                        .checked_mul(10)
                        .and_then(|v| v.checked_add(d as u64))
                        .ok_or_else(|| ParseError::new(loc, "integer literal out of range"))?;
                    self.bump();
                }
                if self.peek(0).is_some_and(|c| c.is_ascii_alphabetic() || c == '_') {
                    return Err(ParseError::new(loc, "malformed integer literal"));
                }
                Tok::Int(v)
            } else if c.is_ascii_alphabetic() || c == '_' {
                let mut s = String::new();
                while let Some(c) = self.peek(0).filter(|c| c.is_ascii_alphanumeric() || *c == '_') {
                    s.push(c);
                    self.bump();
                }
                keyword(&s).unwrap_or(Tok::Ident(s))
            } else {
                self.bump();
                let two = |lx: &mut Lexer, next: char, yes: Tok, no: Tok| {
                    if lx.peek(0) == Some(next) {
                        lx.bump();
                        yes
                    } else {
                        no
                    }
                };
                match c {
                    '(' => Tok::LParen,
                    ')' => Tok::RParen,
                    '{' => Tok::LBrace,
                    '}' => Tok::RBrace,
                    ';' => {
                        self.in_annot = None;
                        Tok::Semi
                    }
                    ',' => Tok::Comma,
                    '+' => Tok::Plus,
                    '-' => Tok::Minus,
                    '*' => Tok::Star,
                    '/' => Tok::Slash,
                    '%' => Tok::Percent,
                    '=' => two(&mut self, '=', Tok::EqEq, Tok::Assign),
                    '!' => two(&mut self, '=', Tok::NotEq, Tok::Bang),
                    '<' => two(&mut self, '=', Tok::Le, Tok::Lt),
                    '>' => two(&mut self, '=', Tok::Ge, Tok::Gt),
                    '&' if self.peek(0) == Some('&') => {
                        self.bump();
                        Tok::AndAnd
                    }
                    '|' if self.peek(0) == Some('|') => {
                        self.bump();
                        Tok::OrOr
                    }
                    other => {
                        return Err(ParseError::new(loc, format!("unexpected character `{other}`")));
                    }
                }
            };
            out.push(Token { tok, loc });
        }
        if let Some(at) = self.in_annot {
            return Err(ParseError::new(at, "annotation must end with `;`"));
        }
        out.push(Token {
            tok: Tok::Eof,
            loc: self.loc(),
        });
        Ok(out)
    }
}

fn keyword(s: &str) -> Option<Tok> {
    Some(match s {
        "int" => Tok::KwInt,
        "void" => Tok::KwVoid,
        "if" => Tok::KwIf,
        "else" => Tok::KwElse,
        "while" => Tok::KwWhile,
        "return" => Tok::KwReturn,
        "true" => Tok::KwTrue,
        "false" => Tok::KwFalse,
        "requires" => Tok::KwRequires,
        "ensures" => Tok::KwEnsures,
        "invariant" => Tok::KwInvariant,
        _ => return None,
    })
}

/// Whether `s` is reserved and cannot name a variable.
pub fn is_reserved(s: &str) -> bool {
    keyword(s).is_some() || s == super::ast::RESULT
}
