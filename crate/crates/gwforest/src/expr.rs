//! Tiny arithmetic expression evaluator for size rules that depend on `n`,
//! e.g. `ceil(0.5*log2(n)+0.5)`.
//!
//! Grammar: `+ - * /`, unary minus, parentheses, decimal literals, the
//! variable `n`, and the functions `ceil`, `floor`, `round`, `sqrt`, `ln`,
//! `log2`, `min(a,b)`, `max(a,b)`.

use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum ExprError {
    #[error("unexpected character {0:?} in expression")]
    BadChar(char),
    #[error("unexpected token {0:?}")]
    BadToken(String),
    #[error("unexpected end of expression")]
    UnexpectedEnd,
    #[error("unknown function {0:?}")]
    UnknownFunction(String),
    #[error("expression did not evaluate to a finite number")]
    NotFinite,
}

#[derive(Debug, Clone, PartialEq)]
enum Token {
    Num(f64),
    Ident(String),
    Plus,
    Minus,
    Star,
    Slash,
    LParen,
    RParen,
    Comma,
}

fn tokenize(input: &str) -> Result<Vec<Token>, ExprError> {
    let mut tokens = Vec::new();
    let mut chars = input.chars().peekable();
    while let Some(&c) = chars.peek() {
        match c {
            ' ' | '\t' => {
                chars.next();
            }
            '+' => {
                chars.next();
                tokens.push(Token::Plus);
            }
            '-' => {
                chars.next();
                tokens.push(Token::Minus);
            }
            '*' => {
                chars.next();
                tokens.push(Token::Star);
            }
            '/' => {
                chars.next();
                tokens.push(Token::Slash);
            }
            '(' => {
                chars.next();
                tokens.push(Token::LParen);
            }
            ')' => {
                chars.next();
                tokens.push(Token::RParen);
            }
            ',' => {
                chars.next();
                tokens.push(Token::Comma);
            }
            '0'..='9' | '.' => {
                let mut s = String::new();
                while let Some(&c) = chars.peek() {
                    if c.is_ascii_digit() || c == '.' {
                        s.push(c);
                        chars.next();
                    } else {
                        break;
                    }
                }
                let v: f64 = s.parse().map_err(|_| ExprError::BadToken(s.clone()))?;
                tokens.push(Token::Num(v));
            }
            c if c.is_ascii_alphabetic() => {
                let mut s = String::new();
                while let Some(&c) = chars.peek() {
                    if c.is_ascii_alphanumeric() || c == '_' {
                        s.push(c);
                        chars.next();
                    } else {
                        break;
                    }
                }
                tokens.push(Token::Ident(s));
            }
            c => return Err(ExprError::BadChar(c)),
        }
    }
    Ok(tokens)
}

struct Parser<'a> {
    tokens: &'a [Token],
    pos: usize,
    n: f64,
}

impl Parser<'_> {
    fn peek(&self) -> Option<&Token> {
        self.tokens.get(self.pos)
    }

    fn next(&mut self) -> Result<Token, ExprError> {
        let t = self.tokens.get(self.pos).cloned().ok_or(ExprError::UnexpectedEnd)?;
        self.pos += 1;
        Ok(t)
    }

    fn expect(&mut self, want: Token) -> Result<(), ExprError> {
        let t = self.next()?;
        if t == want {
            Ok(())
        } else {
            Err(ExprError::BadToken(format!("{t:?}")))
        }
    }

    fn expr(&mut self) -> Result<f64, ExprError> {
        let mut acc = self.term()?;
        loop {
            match self.peek() {
                Some(Token::Plus) => {
                    self.pos += 1;
                    acc += self.term()?;
                }
                Some(Token::Minus) => {
                    self.pos += 1;
                    acc -= self.term()?;
                }
                _ => return Ok(acc),
            }
        }
    }

    fn term(&mut self) -> Result<f64, ExprError> {
        let mut acc = self.factor()?;
        loop {
            match self.peek() {
                Some(Token::Star) => {
                    self.pos += 1;
                    acc *= self.factor()?;
                }
                Some(Token::Slash) => {
                    self.pos += 1;
                    acc /= self.factor()?;
                }
                _ => return Ok(acc),
            }
        }
    }

    fn factor(&mut self) -> Result<f64, ExprError> {
        match self.next()? {
            Token::Num(v) => Ok(v),
            Token::Minus => Ok(-self.factor()?),
            Token::LParen => {
                let v = self.expr()?;
                self.expect(Token::RParen)?;
                Ok(v)
            }
            Token::Ident(name) => {
                if name == "n" {
                    return Ok(self.n);
                }
                self.expect(Token::LParen)?;
                let a = self.expr()?;
                let v = match name.as_str() {
                    "min" | "max" => {
                        self.expect(Token::Comma)?;
                        let b = self.expr()?;
                        if name == "min" {
                            a.min(b)
                        } else {
                            a.max(b)
                        }
                    }
                    "ceil" => a.ceil(),
                    "floor" => a.floor(),
                    "round" => a.round(),
                    "sqrt" => a.sqrt(),
                    "ln" => a.ln(),
                    "log2" => a.log2(),
                    _ => return Err(ExprError::UnknownFunction(name)),
                };
                self.expect(Token::RParen)?;
                Ok(v)
            }
            t => Err(ExprError::BadToken(format!("{t:?}"))),
        }
    }
}

/// Evaluates `input` with the variable `n` bound to the given value.
pub fn eval(input: &str, n: f64) -> Result<f64, ExprError> {
    let tokens = tokenize(input)?;
    let mut p = Parser { tokens: &tokens, pos: 0, n };
    let v = p.expr()?;
    if p.pos != tokens.len() {
        return Err(ExprError::BadToken(format!("{:?}", tokens[p.pos])));
    }
    if !v.is_finite() {
        return Err(ExprError::NotFinite);
    }
    Ok(v)
}

/// Evaluates `input` and rounds to the nearest nonnegative integer.
pub fn eval_usize(input: &str, n: f64) -> Result<usize, ExprError> {
    let v = eval(input, n)?;
    if v < -0.5 || v > u32::MAX as f64 {
        return Err(ExprError::NotFinite);
    }
    Ok(v.round().max(0.0) as usize)
}
