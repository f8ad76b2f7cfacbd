//! Recursive-descent parser for the expression grammar:
//!
//! ```text
//! expr   := term (('+' | '-') term)*
//! term   := factor (('*' | '/') factor)*
//! factor := ('-')? power
//! power  := atom ('^' factor)?
//! atom   := number | ident | ident '(' expr (',' expr)* ')' | '(' expr ')'
//! ```
//!
//! `^` is right-associative and unary minus binds looser than `^`, so
//! `-x^2` parses as `-(x^2)`.

use super::{Expr, Func, ParseError};

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
    Comma,
}

struct Lexer<'a> {
    src: &'a [u8],
    pos: usize,
}

impl<'a> Lexer<'a> {
    fn new(src: &'a str) -> Self {
        Lexer {
            src: src.as_bytes(),
            pos: 0,
        }
    }

    fn skip_ws(&mut self) {
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn next(&mut self) -> Result<Option<(usize, Tok)>, ParseError> {
        self.skip_ws();
        if self.pos >= self.src.len() {
            return Ok(None);
        }
        let start = self.pos;
        let c = self.src[self.pos];
        let tok = match c {
            b'+' => {
                self.pos += 1;
                Tok::Plus
            }
            b'-' => {
                self.pos += 1;
                Tok::Minus
            }
            b'*' => {
                self.pos += 1;
                Tok::Star
            }
            b'/' => {
                self.pos += 1;
                Tok::Slash
            }
            b'^' => {
                self.pos += 1;
                Tok::Caret
            }
            b'(' => {
                self.pos += 1;
                Tok::LParen
            }
            b')' => {
                self.pos += 1;
                Tok::RParen
            }
            b',' => {
                self.pos += 1;
                Tok::Comma
            }
            b'0'..=b'9' | b'.' => self.lex_number(start)?,
            c if c.is_ascii_alphabetic() || c == b'_' => {
                while self.pos < self.src.len()
                    && (self.src[self.pos].is_ascii_alphanumeric() || self.src[self.pos] == b'_')
                {
                    self.pos += 1;
                }
                Tok::Ident(String::from_utf8_lossy(&self.src[start..self.pos]).into_owned())
            }
            other => {
                return Err(ParseError::Syntax {
                    pos: start,
                    msg: format!("unexpected character `{}`", other as char),
                })
            }
        };
        Ok(Some((start, tok)))
    }

    fn lex_number(&mut self, start: usize) -> Result<Tok, ParseError> {
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_digit() {
            self.pos += 1;
        }
        if self.pos < self.src.len() && self.src[self.pos] == b'.' {
            self.pos += 1;
            while self.pos < self.src.len() && self.src[self.pos].is_ascii_digit() {
                self.pos += 1;
            }
        }
        // Exponent only if followed by digits (possibly signed); otherwise
        // the `e` belongs to a following identifier.
        if self.pos < self.src.len() && (self.src[self.pos] | 0x20) == b'e' {
            let mut probe = self.pos + 1;
            if probe < self.src.len() && (self.src[probe] == b'+' || self.src[probe] == b'-') {
                probe += 1;
            }
            if probe < self.src.len() && self.src[probe].is_ascii_digit() {
                self.pos = probe;
                while self.pos < self.src.len() && self.src[self.pos].is_ascii_digit() {
                    self.pos += 1;
                }
            }
        }
        let text = std::str::from_utf8(&self.src[start..self.pos]).unwrap();
        text.parse::<f64>().map(Tok::Num).map_err(|_| ParseError::Syntax {
            pos: start,
            msg: format!("invalid number `{}`", text),
        })
    }
}

struct Parser<'a> {
    toks: Vec<(usize, Tok)>,
    idx: usize,
    allowed: &'a [&'a str],
    end: usize,
}

pub(super) fn parse(text: &str, allowed: &[&str]) -> Result<Expr, ParseError> {
    let mut lexer = Lexer::new(text);
    let mut toks = Vec::new();
    while let Some(t) = lexer.next()? {
        toks.push(t);
    }
    let mut p = Parser {
        toks,
        idx: 0,
        allowed,
        end: text.len(),
    };
    let e = p.expr()?;
    if let Some((pos, _)) = p.peek() {
        return Err(ParseError::Syntax {
            pos,
            msg: "unexpected trailing input".into(),
        });
    }
    Ok(e)
}

impl<'a> Parser<'a> {
    fn peek(&self) -> Option<(usize, Tok)> {
        self.toks.get(self.idx).cloned()
    }

    fn bump(&mut self) -> Option<(usize, Tok)> {
        let t = self.toks.get(self.idx).cloned();
        if t.is_some() {
            self.idx += 1;
        }
        t
    }

    fn eat(&mut self, want: &Tok, what: &str) -> Result<usize, ParseError> {
        match self.bump() {
            Some((pos, t)) if &t == want => Ok(pos),
            Some((pos, _)) => Err(ParseError::Syntax {
                pos,
                msg: format!("expected {}", what),
            }),
            None => Err(ParseError::Syntax {
                pos: self.end,
                msg: format!("expected {}, found end of input", what),
            }),
        }
    }

    fn expr(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.term()?;
        loop {
            match self.peek() {
                Some((_, Tok::Plus)) => {
                    self.bump();
                    let rhs = self.term()?;
                    lhs = Expr::Add(Box::new(lhs), Box::new(rhs));
                }
                Some((_, Tok::Minus)) => {
                    self.bump();
                    let rhs = self.term()?;
                    lhs = Expr::Sub(Box::new(lhs), Box::new(rhs));
                }
                _ => return Ok(lhs),
            }
        }
    }

    fn term(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.factor()?;
        loop {
            match self.peek() {
                Some((_, Tok::Star)) => {
                    self.bump();
                    let rhs = self.factor()?;
                    lhs = Expr::Mul(Box::new(lhs), Box::new(rhs));
                }
                Some((_, Tok::Slash)) => {
                    self.bump();
                    let rhs = self.factor()?;
                    lhs = Expr::Div(Box::new(lhs), Box::new(rhs));
                }
                _ => return Ok(lhs),
            }
        }
    }

    fn factor(&mut self) -> Result<Expr, ParseError> {
        if let Some((_, Tok::Minus)) = self.peek() {
            self.bump();
            let inner = self.power()?;
            return Ok(Expr::Neg(Box::new(inner)));
        }
        self.power()
    }

    fn power(&mut self) -> Result<Expr, ParseError> {
        let base = self.atom()?;
        if let Some((_, Tok::Caret)) = self.peek() {
            self.bump();
            let exponent = self.factor()?;
            return Ok(Expr::Pow(Box::new(base), Box::new(exponent)));
        }
        Ok(base)
    }

    fn atom(&mut self) -> Result<Expr, ParseError> {
        match self.bump() {
            Some((_, Tok::Num(v))) => Ok(Expr::Num(v)),
            Some((pos, Tok::Ident(name))) => {
                if let Some((_, Tok::LParen)) = self.peek() {
                    self.bump();
                    let mut args = vec![self.expr()?];
                    while let Some((_, Tok::Comma)) = self.peek() {
                        self.bump();
                        args.push(self.expr()?);
                    }
                    self.eat(&Tok::RParen, "`)`")?;
                    return self.apply(pos, &name, args);
                }
                if self.allowed.contains(&name.as_str()) {
                    Ok(Expr::Var(name))
                } else {
                    Err(ParseError::UnknownIdentifier { pos, name })
                }
            }
            Some((_, Tok::LParen)) => {
                let e = self.expr()?;
                self.eat(&Tok::RParen, "`)`")?;
                Ok(e)
            }
            Some((pos, _)) => Err(ParseError::Syntax {
                pos,
                msg: "expected a number, identifier or `(`".into(),
            }),
            None => Err(ParseError::Syntax {
                pos: self.end,
                msg: "unexpected end of input".into(),
            }),
        }
    }

    fn apply(&self, pos: usize, name: &str, mut args: Vec<Expr>) -> Result<Expr, ParseError> {
        if name == "pow" {
            if args.len() != 2 {
                return Err(ParseError::Arity {
                    pos,
                    name: name.into(),
                    expected: 2,
                    got: args.len(),
                });
            }
            let exponent = args.pop().unwrap();
            let base = args.pop().unwrap();
            return Ok(Expr::Pow(Box::new(base), Box::new(exponent)));
        }
        match Func::from_name(name) {
            Some(f) => {
                if args.len() != 1 {
                    return Err(ParseError::Arity {
                        pos,
                        name: name.into(),
                        expected: 1,
                        got: args.len(),
                    });
                }
                Ok(Expr::Fun(f, Box::new(args.pop().unwrap())))
            }
            None => Err(ParseError::UnknownIdentifier {
                pos,
                name: name.into(),
            }),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::super::{Expr, Func, ParseError};

    fn p(text: &str, vars: &[&str]) -> Result<Expr, ParseError> {
        Expr::parse(text, vars)
    }

    #[test]
    fn division_and_power() {
        // z/y^2 with standard precedence
        let e = p("z/y^2", &["x", "y", "z"]).unwrap();
        assert_eq!(
            e,
            Expr::Div(
                Box::new(Expr::Var("z".into())),
                Box::new(Expr::Pow(
                    Box::new(Expr::Var("y".into())),
                    Box::new(Expr::Num(2.0))
                ))
            )
        );
    }

    #[test]
    fn function_application() {
        let e = p("exp(q1+q2)", &["q1", "q2", "p1", "p2"]).unwrap();
        assert_eq!(
            e,
            Expr::Fun(
                Func::Exp,
                Box::new(Expr::Add(
                    Box::new(Expr::Var("q1".into())),
                    Box::new(Expr::Var("q2".into()))
                ))
            )
        );
    }

    #[test]
    fn unknown_function_is_rejected() {
        let err = p("foo(x)", &["x"]).unwrap_err();
        assert!(matches!(err, ParseError::UnknownIdentifier { ref name, .. } if name == "foo"));
    }

    #[test]
    fn unknown_variable_is_rejected() {
        let err = p("x + q", &["x"]).unwrap_err();
        assert!(matches!(err, ParseError::UnknownIdentifier { ref name, pos: 4 } if name == "q"));
    }

    #[test]
    fn unary_minus_binds_looser_than_power() {
        let e = p("-x^2", &["x"]).unwrap();
        assert_eq!(
            e,
            Expr::Neg(Box::new(Expr::Pow(
                Box::new(Expr::Var("x".into())),
                Box::new(Expr::Num(2.0))
            )))
        );
    }

    #[test]
    fn power_is_right_associative() {
        let e = p("x^2^3", &["x"]).unwrap();
        assert_eq!(
            e,
            Expr::Pow(
                Box::new(Expr::Var("x".into())),
                Box::new(Expr::Pow(
                    Box::new(Expr::Num(2.0)),
                    Box::new(Expr::Num(3.0))
                ))
            )
        );
    }

    #[test]
    fn pow_function_normalises_to_caret_node() {
        assert_eq!(p("pow(x, 3)", &["x"]).unwrap(), p("x^3", &["x"]).unwrap());
        assert!(matches!(
            p("pow(x)", &["x"]).unwrap_err(),
            ParseError::Arity { expected: 2, got: 1, .. }
        ));
        assert!(matches!(
            p("sin(x, 1)", &["x"]).unwrap_err(),
            ParseError::Arity { expected: 1, got: 2, .. }
        ));
    }

    #[test]
    fn scientific_notation_and_e_ident() {
        assert_eq!(p("2e-3", &[]).unwrap(), Expr::Num(2e-3));
        assert_eq!(p("1.5E+2", &[]).unwrap(), Expr::Num(150.0));
        // Without exponent digits the `e` is a separate identifier, so `2e`
        // is the number 2 followed by a stray token.
        assert!(p("2e", &["e"]).is_err());
        let e = p("2*e", &["e"]).unwrap();
        assert_eq!(
            e,
            Expr::Mul(Box::new(Expr::Num(2.0)), Box::new(Expr::Var("e".into())))
        );
    }

    #[test]
    fn negative_exponent_in_exponent_position() {
        let e = p("x^-2", &["x"]).unwrap();
        assert_eq!(
            e,
            Expr::Pow(
                Box::new(Expr::Var("x".into())),
                Box::new(Expr::Neg(Box::new(Expr::Num(2.0))))
            )
        );
    }

    #[test]
    fn syntax_error_positions() {
        let err = p("x + ", &["x"]).unwrap_err();
        assert!(matches!(err, ParseError::Syntax { pos: 4, .. }));
        let err = p("(x", &["x"]).unwrap_err();
        assert!(matches!(err, ParseError::Syntax { .. }));
    }
}
