//! Constant complex expressions used for amplitudes in `.scn` files:
//! decimal and rational numbers, `i`, `sqrt(..)` of non-negative reals,
//! `+ - * /`, unary minus and parentheses. `0.5-0.25i`, `1/sqrt(3)` and
//! `-sqrt(2)/sqrt(12)` are all valid.

use crate::hilbert::Complex;

/// Error with a 0-based byte offset into the expression text.
#[derive(Debug, Clone, PartialEq)]
pub(crate) struct ExprError {
    pub offset: usize,
    pub message: String,
    pub lexical: bool,
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num(f64),
    Imag(f64),
    Sqrt,
    Plus,
    Minus,
    Star,
    Slash,
    LParen,
    RParen,
}

fn lex(text: &str) -> Result<Vec<(usize, Tok)>, ExprError> {
    let bytes = text.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    let lex_err = |offset: usize, message: String| ExprError {
        offset,
        message,
        lexical: true,
    };
    while i < bytes.len() {
        let c = bytes[i];
        let start = i;
        match c {
            b' ' | b'\t' => {
                i += 1;
                continue;
            }
            b'+' => out.push((start, Tok::Plus)),
            b'-' => out.push((start, Tok::Minus)),
            b'*' => out.push((start, Tok::Star)),
            b'/' => out.push((start, Tok::Slash)),
            b'(' => out.push((start, Tok::LParen)),
            b')' => out.push((start, Tok::RParen)),
            b'0'..=b'9' | b'.' => {
                while i < bytes.len() && (bytes[i].is_ascii_digit() || bytes[i] == b'.') {
                    i += 1;
                }
                if i < bytes.len() && (bytes[i] == b'e' || bytes[i] == b'E') {
                    let mut j = i + 1;
                    if j < bytes.len() && (bytes[j] == b'+' || bytes[j] == b'-') {
                        j += 1;
                    }
                    if j < bytes.len() && bytes[j].is_ascii_digit() {
                        while j < bytes.len() && bytes[j].is_ascii_digit() {
                            j += 1;
                        }
                        i = j;
                    }
                }
                let lit = &text[start..i];
                let value: f64 = lit
                    .parse()
                    .map_err(|_| lex_err(start, format!("malformed number `{lit}`")))?;
                let imaginary = i < bytes.len()
                    && bytes[i] == b'i'
                    && !bytes
                        .get(i + 1)
                        .is_some_and(|b| b.is_ascii_alphanumeric() || *b == b'_');
                if imaginary {
                    i += 1;
                    out.push((start, Tok::Imag(value)));
                } else {
                    out.push((start, Tok::Num(value)));
                }
                continue;
            }
            c if c.is_ascii_alphabetic() || c == b'_' => {
                while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_') {
                    i += 1;
                }
                match &text[start..i] {
                    "i" => out.push((start, Tok::Imag(1.0))),
                    "sqrt" => out.push((start, Tok::Sqrt)),
                    word => return Err(lex_err(start, format!("unknown name `{word}`"))),
                }
                continue;
            }
            _ => {
                let ch = text[start..].chars().next().unwrap_or('?');
                return Err(lex_err(start, format!("unexpected character `{ch}`")));
            }
        }
        i += 1;
    }
    Ok(out)
}

struct Parser<'a> {
    toks: &'a [(usize, Tok)],
    pos: usize,
    end: usize,
}

impl Parser<'_> {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|(_, t)| t)
    }

    fn offset(&self) -> usize {
        self.toks.get(self.pos).map_or(self.end, |(o, _)| *o)
    }

    fn err<T>(&self, message: impl Into<String>) -> Result<T, ExprError> {
        Err(ExprError {
            offset: self.offset(),
            message: message.into(),
            lexical: false,
        })
    }

    fn expr(&mut self) -> Result<Complex, ExprError> {
        let mut acc = self.term()?;
        loop {
            match self.peek() {
                Some(Tok::Plus) => {
                    self.pos += 1;
                    acc += self.term()?;
                }
                Some(Tok::Minus) => {
                    self.pos += 1;
                    acc -= self.term()?;
                }
                _ => return Ok(acc),
            }
        }
    }

    fn term(&mut self) -> Result<Complex, ExprError> {
        let mut acc = self.unary()?;
        loop {
            match self.peek() {
                Some(Tok::Star) => {
                    self.pos += 1;
                    acc *= self.unary()?;
                }
                Some(Tok::Slash) => {
                    self.pos += 1;
                    let at = self.offset();
                    let rhs = self.unary()?;
                    if rhs.norm() == 0.0 {
                        return Err(ExprError {
                            offset: at,
                            message: "division by zero".into(),
                            lexical: false,
                        });
                    }
                    acc /= rhs;
                }
                _ => return Ok(acc),
            }
        }
    }

    fn unary(&mut self) -> Result<Complex, ExprError> {
        match self.peek() {
            Some(Tok::Minus) => {
                self.pos += 1;
                Ok(-self.unary()?)
            }
            Some(Tok::Plus) => {
                self.pos += 1;
                self.unary()
            }
            _ => self.primary(),
        }
    }

    fn primary(&mut self) -> Result<Complex, ExprError> {
        match self.peek().cloned() {
            Some(Tok::Num(v)) => {
                self.pos += 1;
                Ok(Complex::new(v, 0.0))
            }
            Some(Tok::Imag(v)) => {
                self.pos += 1;
                Ok(Complex::new(0.0, v))
            }
            Some(Tok::LParen) => {
                self.pos += 1;
                let v = self.expr()?;
                self.expect_rparen()?;
                Ok(v)
            }
            Some(Tok::Sqrt) => {
                self.pos += 1;
                if self.peek() != Some(&Tok::LParen) {
                    return self.err("expected `(` after sqrt");
                }
                self.pos += 1;
                let at = self.offset();
                let v = self.expr()?;
                self.expect_rparen()?;
                if v.im != 0.0 || v.re < 0.0 {
                    return Err(ExprError {
                        offset: at,
                        message: "sqrt argument must be a non-negative real".into(),
                        lexical: false,
                    });
                }
                Ok(Complex::new(v.re.sqrt(), 0.0))
            }
            Some(_) => self.err("expected a number, `i`, `sqrt` or `(`"),
            None => self.err("unexpected end of expression"),
        }
    }

    fn expect_rparen(&mut self) -> Result<(), ExprError> {
        if self.peek() == Some(&Tok::RParen) {
            self.pos += 1;
            Ok(())
        } else {
            self.err("expected `)`")
        }
    }
}

pub(crate) fn eval(text: &str) -> Result<Complex, ExprError> {
    let toks = lex(text)?;
    let mut p = Parser {
        toks: &toks,
        pos: 0,
        end: text.len(),
    };
    let v = p.expr()?;
    if p.pos != toks.len() {
        return p.err("trailing input after expression");
    }
    if !v.is_finite() {
        return Err(ExprError {
            offset: 0,
            message: "value is not finite".into(),
            lexical: false,
        });
    }
    Ok(v)
}

fn real(x: f64) -> String {
    // `{:?}` is the shortest representation that parses back to the same f64.
    format!("{x:?}")
}

/// Inverse of [`eval`] up to exact f64 round-trip.
pub(crate) fn format_complex(z: Complex) -> String {
    if z.im == 0.0 {
        real(z.re)
    } else if z.re == 0.0 {
        format!("{}i", real(z.im))
    } else if z.im.is_sign_negative() {
        format!("{}-{}i", real(z.re), real(-z.im))
    } else {
        format!("{}+{}i", real(z.re), real(z.im))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn close(text: &str, re: f64, im: f64) {
        let v = eval(text).unwrap_or_else(|e| panic!("{text}: {e:?}"));
        assert!((v - Complex::new(re, im)).norm() < 1e-15, "{text} = {v}");
    }

    #[test]
    fn symbolic_constants() {
        close("1/sqrt(2)", std::f64::consts::FRAC_1_SQRT_2, 0.0);
        close("1/sqrt(3)", 1.0 / 3f64.sqrt(), 0.0);
        close("-1/sqrt(12)", -1.0 / 12f64.sqrt(), 0.0);
        close("sqrt(2)/sqrt(3)", (2.0f64 / 3.0).sqrt(), 0.0);
        close("sqrt(2/3)", (2.0f64 / 3.0).sqrt(), 0.0);
        close("3/4", 0.75, 0.0);
    }

    #[test]
    fn complex_literals() {
        close("0.5-0.25i", 0.5, -0.25);
        close("i", 0.0, 1.0);
        close("-i/sqrt(2)", 0.0, -std::f64::consts::FRAC_1_SQRT_2);
        close("1e-3+2.5e2i", 1e-3, 250.0);
        close("(1+i)*(1-i)", 2.0, 0.0);
    }

    #[test]
    fn errors_carry_offsets() {
        let e = eval("1/0").unwrap_err();
        assert_eq!(e.offset, 2);
        let e = eval("sqrt(-2)").unwrap_err();
        assert_eq!(e.offset, 5);
        assert!(eval("2 $").unwrap_err().lexical);
        assert!(eval("foo").unwrap_err().lexical);
        assert!(!eval("1+").unwrap_err().lexical);
        assert!(eval("(1").is_err());
        assert!(eval("1 2").is_err());
        assert!(eval("").is_err());
        assert!(eval("1e400").is_err());
    }

    proptest! {
        #[test]
        fn format_then_eval_is_exact(re in proptest::num::f64::NORMAL | proptest::num::f64::ZERO,
                                     im in proptest::num::f64::NORMAL | proptest::num::f64::ZERO) {
            let z = Complex::new(re, im);
            let back = eval(&format_complex(z)).unwrap();
            prop_assert_eq!(back, z);
        }

        #[test]
        fn eval_never_panics(s in "\\PC{0,24}") {
            let _ = eval(&s);
        }
    }
}
