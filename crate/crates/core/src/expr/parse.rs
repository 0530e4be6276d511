//! Recursive-descent parser for the expression grammar:
//!
//! ```text
//! expr   := term (('+'|'-') term)*
//! term   := factor (('*'|'/') factor)*
//! factor := ['-'] atom ['^' INTEGER]
//! atom   := NUMBER | IDENT | '(' expr ')'
//!         | ('abs'|'min'|'max') '(' expr (',' expr)* ')'
//! ```
//!
//! Whitespace-insensitive. NUMBER is a decimal with optional fraction and
//! exponent; exponents after `^` must be nonnegative integers.

use super::{Expr, ExprError, VarSpace, RESERVED};

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num { value: f64, integral: Option<u32> },
    Ident(String),
    Plus,
    Minus,
    Star,
    Slash,
    Caret,
    LParen,
    RParen,
    Comma,
    Eof,
}

#[derive(Debug, Clone)]
struct Spanned {
    tok: Tok,
    line: usize,
    col: usize,
}

fn err(line: usize, col: usize, msg: impl Into<String>) -> ExprError {
    ExprError::Parse {
        line,
        col,
        msg: msg.into(),
    }
}

fn tokenize(text: &str) -> Result<Vec<Spanned>, ExprError> {
    let mut out = Vec::new();
    let mut line = 1usize;
    let mut col = 1usize;
    let chars: Vec<char> = text.chars().collect();
    let mut i = 0usize;
    while i < chars.len() {
        let c = chars[i];
        let (tline, tcol) = (line, col);
        let advance = |i: &mut usize, line: &mut usize, col: &mut usize| {
            if chars[*i] == '\n' {
                *line += 1;
                *col = 1;
            } else {
                *col += 1;
            }
            *i += 1;
        };
        if c.is_whitespace() {
            advance(&mut i, &mut line, &mut col);
            continue;
        }
        let single = match c {
            '+' => Some(Tok::Plus),
            '-' => Some(Tok::Minus),
            '*' => Some(Tok::Star),
            '/' => Some(Tok::Slash),
            '^' => Some(Tok::Caret),
            '(' => Some(Tok::LParen),
            ')' => Some(Tok::RParen),
            ',' => Some(Tok::Comma),
            _ => None,
        };
        if let Some(tok) = single {
            out.push(Spanned {
                tok,
                line: tline,
                col: tcol,
            });
            advance(&mut i, &mut line, &mut col);
            continue;
        }
        if c.is_ascii_digit() {
            let start = i;
            let mut integral = true;
            while i < chars.len() && chars[i].is_ascii_digit() {
                advance(&mut i, &mut line, &mut col);
            }
            if i < chars.len() && chars[i] == '.' {
                integral = false;
                advance(&mut i, &mut line, &mut col);
                if i >= chars.len() || !chars[i].is_ascii_digit() {
                    return Err(err(line, col, "expected digit after decimal point"));
                }
                while i < chars.len() && chars[i].is_ascii_digit() {
                    advance(&mut i, &mut line, &mut col);
                }
            }
            if i < chars.len() && (chars[i] == 'e' || chars[i] == 'E') {
                integral = false;
                advance(&mut i, &mut line, &mut col);
                if i < chars.len() && (chars[i] == '+' || chars[i] == '-') {
                    advance(&mut i, &mut line, &mut col);
                }
                if i >= chars.len() || !chars[i].is_ascii_digit() {
                    return Err(err(line, col, "expected digit in exponent"));
                }
                while i < chars.len() && chars[i].is_ascii_digit() {
                    advance(&mut i, &mut line, &mut col);
                }
            }
            let lexeme: String = chars[start..i].iter().collect();
            let value: f64 = lexeme
                .parse()
                .map_err(|_| err(tline, tcol, format!("invalid number `{lexeme}`")))?;
            if !value.is_finite() {
                return Err(err(tline, tcol, format!("number `{lexeme}` overflows")));
            }
            let integral = if integral { lexeme.parse::<u32>().ok() } else { None };
            out.push(Spanned {
                tok: Tok::Num { value, integral },
                line: tline,
                col: tcol,
            });
            continue;
        }
        if c.is_ascii_alphabetic() || c == '_' {
            let start = i;
            while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_') {
                advance(&mut i, &mut line, &mut col);
            }
            let name: String = chars[start..i].iter().collect();
            out.push(Spanned {
                tok: Tok::Ident(name),
                line: tline,
                col: tcol,
            });
            continue;
        }
        return Err(err(tline, tcol, format!("unexpected character `{c}`")));
    }
    out.push(Spanned {
        tok: Tok::Eof,
        line,
        col,
    });
    Ok(out)
}

struct Parser<'a> {
    toks: Vec<Spanned>,
    pos: usize,
    vars: &'a VarSpace,
}

impl<'a> Parser<'a> {
    fn peek(&self) -> &Spanned {
        &self.toks[self.pos]
    }

    fn bump(&mut self) -> Spanned {
        let t = self.toks[self.pos].clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn expect(&mut self, tok: Tok, what: &str) -> Result<(), ExprError> {
        let t = self.bump();
        if t.tok == tok {
            Ok(())
        } else {
            Err(err(t.line, t.col, format!("expected {what}")))
        }
    }

    fn expr(&mut self) -> Result<Expr, ExprError> {
        let mut lhs = self.term()?;
        loop {
            match self.peek().tok {
                Tok::Plus => {
                    self.bump();
                    lhs = Expr::add(lhs, self.term()?);
                }
                Tok::Minus => {
                    self.bump();
                    lhs = Expr::sub(lhs, self.term()?);
                }
                _ => return Ok(lhs),
            }
        }
    }

    fn term(&mut self) -> Result<Expr, ExprError> {
        let mut lhs = self.factor()?;
        loop {
            match self.peek().tok {
                Tok::Star => {
                    self.bump();
                    lhs = Expr::mul(lhs, self.factor()?);
                }
                Tok::Slash => {
                    self.bump();
                    lhs = Expr::div(lhs, self.factor()?);
                }
                _ => return Ok(lhs),
            }
        }
    }

    fn factor(&mut self) -> Result<Expr, ExprError> {
        let negated = if self.peek().tok == Tok::Minus {
            self.bump();
            true
        } else {
            false
        };
        let mut e = self.atom()?;
        if self.peek().tok == Tok::Caret {
            self.bump();
            let t = self.bump();
            let exponent = match t.tok {
                Tok::Num {
                    integral: Some(k), ..
                } => k,
                _ => {
                    return Err(err(
                        t.line,
                        t.col,
                        "exponent must be a nonnegative integer",
                    ))
                }
            };
            e = Expr::pow(e, exponent);
        }
        Ok(if negated { Expr::neg(e) } else { e })
    }

    fn atom(&mut self) -> Result<Expr, ExprError> {
        let t = self.bump();
        match t.tok {
            Tok::Num { value, .. } => Ok(Expr::Const(value)),
            Tok::Ident(name) => {
                if RESERVED.contains(&name.as_str()) {
                    return self.call(&name, t.line, t.col);
                }
                match self.vars.index_of(&name) {
                    Some(i) => Ok(Expr::Var(i)),
                    None => Err(err(t.line, t.col, format!("unknown identifier `{name}`"))),
                }
            }
            Tok::LParen => {
                let e = self.expr()?;
                self.expect(Tok::RParen, "`)`")?;
                Ok(e)
            }
            _ => Err(err(t.line, t.col, "expected a number, variable, or `(`")),
        }
    }

    fn call(&mut self, name: &str, line: usize, col: usize) -> Result<Expr, ExprError> {
        self.expect(Tok::LParen, "`(` after function name")?;
        let mut args = vec![self.expr()?];
        while self.peek().tok == Tok::Comma {
            self.bump();
            args.push(self.expr()?);
        }
        self.expect(Tok::RParen, "`)` or `,` in argument list")?;
        match name {
            "abs" => {
                if args.len() != 1 {
                    return Err(err(line, col, "abs takes exactly one argument"));
                }
                Ok(Expr::abs(args.pop().expect("one argument")))
            }
            "min" => Ok(Expr::min_of(args)),
            "max" => Ok(Expr::max_of(args)),
            _ => unreachable!("call is only entered for reserved names"),
        }
    }
}

/// Parses `text` over `vars` into an [`Expr`].
pub fn parse_expr(text: &str, vars: &VarSpace) -> Result<Expr, ExprError> {
    let toks = tokenize(text)?;
    let mut p = Parser { toks, pos: 0, vars };
    let e = p.expr()?;
    let t = p.peek();
    if t.tok != Tok::Eof {
        return Err(err(t.line, t.col, "unexpected trailing input"));
    }
    Ok(e)
}
