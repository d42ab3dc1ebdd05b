//! Recursive-descent parser for profile expressions.
//!
//! ```text
//! expr   := term (('+' | '-') term)*
//! term   := factor (('*' | '/') factor)*
//! factor := '-'? (number | 'r' | func '(' expr ')' | '(' expr ')') ('^' integer)?
//! ```
//!
//! A leading minus binds looser than `^`, so `-r^2` is `-(r^2)`.

use super::expr::{Expr, Func};
use super::ProfileError;

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num(f64),
    Ident(String),
    Plus,
    Minus,
    Star,
    Slash,
    Caret,
    LParen,
    RParen,
    End,
}

struct Lexer<'a> {
    src: &'a [u8],
    pos: usize,
}

impl<'a> Lexer<'a> {
    fn skip_ws(&mut self) {
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    /// Next token and its starting byte offset.
    fn next(&mut self) -> Result<(Tok, usize), ProfileError> {
        self.skip_ws();
        let start = self.pos;
        let Some(&c) = self.src.get(self.pos) else {
            return Ok((Tok::End, start));
        };
        let tok = match c {
            b'+' => Tok::Plus,
            b'-' => Tok::Minus,
            b'*' => Tok::Star,
            b'/' => Tok::Slash,
            b'^' => Tok::Caret,
            b'(' => Tok::LParen,
            b')' => Tok::RParen,
            b'0'..=b'9' | b'.' => return self.number(start),
            c if c.is_ascii_alphabetic() || c == b'_' => {
                while self.pos < self.src.len()
                    && (self.src[self.pos].is_ascii_alphanumeric() || self.src[self.pos] == b'_')
                {
                    self.pos += 1;
                }
                let name = String::from_utf8_lossy(&self.src[start..self.pos]).into_owned();
                return Ok((Tok::Ident(name), start));
            }
            _ => {
                return Err(ProfileError::Syntax {
                    pos: start,
                    expected: expected_operand(),
                })
            }
        };
        self.pos += 1;
        Ok((tok, start))
    }

    fn number(&mut self, start: usize) -> Result<(Tok, usize), ProfileError> {
        let digits = |lx: &mut Self| {
            while lx.pos < lx.src.len() && lx.src[lx.pos].is_ascii_digit() {
                lx.pos += 1;
            }
        };
        digits(self);
        if self.src.get(self.pos) == Some(&b'.') {
            self.pos += 1;
            digits(self);
        }
        if matches!(self.src.get(self.pos), Some(b'e' | b'E')) {
            let save = self.pos;
            self.pos += 1;
            if matches!(self.src.get(self.pos), Some(b'+' | b'-')) {
                self.pos += 1;
            }
            if self.src.get(self.pos).is_some_and(u8::is_ascii_digit) {
                digits(self);
            } else {
                self.pos = save;
            }
        }
        let text = std::str::from_utf8(&self.src[start..self.pos]).unwrap_or("");
        match text.parse::<f64>() {
            Ok(v) if v.is_finite() => Ok((Tok::Num(v), start)),
            _ => Err(ProfileError::Syntax {
                pos: start,
                expected: vec!["number".into()],
            }),
        }
    }
}

fn expected_operand() -> Vec<String> {
    ["number", "r", "function", "(", "-"]
        .iter()
        .map(|s| s.to_string())
        .collect()
}

struct Parser<'a> {
    lexer: Lexer<'a>,
    tok: Tok,
    pos: usize,
}

impl<'a> Parser<'a> {
    fn advance(&mut self) -> Result<(), ProfileError> {
        let (tok, pos) = self.lexer.next()?;
        self.tok = tok;
        self.pos = pos;
        Ok(())
    }

    fn error(&self, expected: &[&str]) -> ProfileError {
        ProfileError::Syntax {
            pos: self.pos,
            expected: expected.iter().map(|s| s.to_string()).collect(),
        }
    }

    fn expr(&mut self) -> Result<Expr, ProfileError> {
        let mut lhs = self.term()?;
        loop {
            match self.tok {
                Tok::Plus => {
                    self.advance()?;
                    lhs = Expr::Add(Box::new(lhs), Box::new(self.term()?));
                }
                Tok::Minus => {
                    self.advance()?;
                    lhs = Expr::Sub(Box::new(lhs), Box::new(self.term()?));
                }
                _ => return Ok(lhs),
            }
        }
    }

    fn term(&mut self) -> Result<Expr, ProfileError> {
        let mut lhs = self.factor()?;
        loop {
            match self.tok {
                Tok::Star => {
                    self.advance()?;
                    lhs = Expr::Mul(Box::new(lhs), Box::new(self.factor()?));
                }
                Tok::Slash => {
                    self.advance()?;
                    lhs = Expr::Div(Box::new(lhs), Box::new(self.factor()?));
                }
                _ => return Ok(lhs),
            }
        }
    }

    fn factor(&mut self) -> Result<Expr, ProfileError> {
        let negate = if self.tok == Tok::Minus {
            self.advance()?;
            true
        } else {
            false
        };
        let mut base = self.primary()?;
        if self.tok == Tok::Caret {
            self.advance()?;
            let exponent = self.integer()?;
            base = Expr::Pow(Box::new(base), exponent);
        }
        Ok(if negate { Expr::Neg(Box::new(base)) } else { base })
    }

    fn integer(&mut self) -> Result<i32, ProfileError> {
        let negative = if self.tok == Tok::Minus {
            self.advance()?;
            true
        } else {
            false
        };
        match self.tok {
            Tok::Num(v) if v.fract() == 0.0 && v.abs() <= 64.0 => {
                self.advance()?;
                let n = v as i32;
                Ok(if negative { -n } else { n })
            }
            _ => Err(self.error(&["integer"])),
        }
    }

    fn primary(&mut self) -> Result<Expr, ProfileError> {
        match self.tok.clone() {
            Tok::Num(v) => {
                self.advance()?;
                Ok(Expr::Num(v))
            }
            Tok::LParen => {
                self.advance()?;
                let inner = self.expr()?;
                if self.tok != Tok::RParen {
                    return Err(self.error(&[")", "+", "-", "*", "/", "^"]));
                }
                self.advance()?;
                Ok(inner)
            }
            Tok::Ident(name) => {
                let at = self.pos;
                self.advance()?;
                if name == "r" {
                    return Ok(Expr::Var);
                }
                if self.tok != Tok::LParen {
                    return Err(ProfileError::Syntax {
                        pos: at,
                        expected: expected_operand(),
                    });
                }
                let func = Func::from_name(&name)
                    .ok_or(ProfileError::UnsupportedFunction { name, pos: at })?;
                self.advance()?;
                let arg = self.expr()?;
                if self.tok != Tok::RParen {
                    return Err(self.error(&[")"]));
                }
                self.advance()?;
                Ok(Expr::Call(func, Box::new(arg)))
            }
            _ => Err(self.error(&["number", "r", "function", "(", "-"])),
        }
    }
}

/// Parse `text` as an expression in `r`.
pub fn parse_expr(text: &str) -> Result<Expr, ProfileError> {
    let mut parser = Parser {
        lexer: Lexer {
            src: text.as_bytes(),
            pos: 0,
        },
        tok: Tok::End,
        pos: 0,
    };
    parser.advance()?;
    let expr = parser.expr()?;
    if parser.tok != Tok::End {
        return Err(parser.error(&["+", "-", "*", "/", "^", "end of input"]));
    }
    Ok(expr)
}
