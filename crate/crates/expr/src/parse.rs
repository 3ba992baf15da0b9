//! Recursive-descent parser for the expression grammar
//!
//! ```text
//! expr   := term (("+"|"-") term)*
//! term   := factor (("*"|"/") factor)*
//! factor := atom ("^" uint)?
//! atom   := uint | var | "(" expr ")" | "-" atom
//! var    := ident ("@" sint)?
//! ```
//!
//! Whitespace is insignificant. Every expression is canonicalized as it is
//! built, so the result is already in normal form.

use std::collections::BTreeSet;

use num_bigint::BigInt;

use crate::error::ExprError;
use crate::poly::Rational;
use crate::rational::RationalExpr;
use crate::var::Var;

/// Parses `text`, accepting only variables from `vocabulary`.
pub fn parse_expr(text: &str, vocabulary: &[Var]) -> Result<RationalExpr, ExprError> {
    let vocab: BTreeSet<&Var> = vocabulary.iter().collect();
    parse_expr_with(text, |v| vocab.contains(v))
}

/// Parses `text`, accepting any variable for which `allowed` holds.
pub fn parse_expr_with<F: Fn(&Var) -> bool>(
    text: &str,
    allowed: F,
) -> Result<RationalExpr, ExprError> {
    let mut p = Parser {
        src: text.as_bytes(),
        pos: 0,
        allowed: &allowed,
    };
    let e = p.expr()?;
    p.skip_ws();
    if p.pos < p.src.len() {
        return Err(p.error("unexpected trailing input"));
    }
    Ok(e)
}

struct Parser<'a, F> {
    src: &'a [u8],
    pos: usize,
    allowed: &'a F,
}

impl<F: Fn(&Var) -> bool> Parser<'_, F> {
    fn error(&self, message: &str) -> ExprError {
        ExprError::Syntax {
            position: self.pos,
            message: message.to_string(),
        }
    }

    fn skip_ws(&mut self) {
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<u8> {
        self.skip_ws();
        self.src.get(self.pos).copied()
    }

    fn expr(&mut self) -> Result<RationalExpr, ExprError> {
        let mut acc = self.term()?;
        loop {
            match self.peek() {
                Some(b'+') => {
                    self.pos += 1;
                    acc = &acc + &self.term()?;
                }
                Some(b'-') => {
                    self.pos += 1;
                    acc = &acc - &self.term()?;
                }
                _ => return Ok(acc),
            }
        }
    }

    fn term(&mut self) -> Result<RationalExpr, ExprError> {
        let mut acc = self.factor()?;
        loop {
            match self.peek() {
                Some(b'*') => {
                    self.pos += 1;
                    acc = &acc * &self.factor()?;
                }
                Some(b'/') => {
                    self.pos += 1;
                    let at = self.pos;
                    let d = self.factor()?;
                    acc = acc
                        .checked_div(&d)
                        .ok_or(ExprError::DivisionByZero { position: at })?;
                }
                _ => return Ok(acc),
            }
        }
    }

    fn factor(&mut self) -> Result<RationalExpr, ExprError> {
        let base = self.atom()?;
        if self.peek() == Some(b'^') {
            self.pos += 1;
            self.skip_ws();
            let e = self.uint()?;
            let e: u32 = e.try_into().map_err(|_| self.error("exponent too large"))?;
            return Ok(base.pow(e));
        }
        Ok(base)
    }

    fn atom(&mut self) -> Result<RationalExpr, ExprError> {
        match self.peek() {
            Some(b'(') => {
                self.pos += 1;
                let e = self.expr()?;
                if self.peek() != Some(b')') {
                    return Err(self.error("expected `)`"));
                }
                self.pos += 1;
                Ok(e)
            }
            Some(b'-') => {
                self.pos += 1;
                Ok(-self.atom()?)
            }
            Some(c) if c.is_ascii_digit() => {
                let n = self.uint()?;
                Ok(RationalExpr::constant(Rational::from_integer(n)))
            }
            Some(c) if c.is_ascii_alphabetic() => self.var(),
            Some(_) => Err(self.error("expected a number, variable, `(` or `-`")),
            None => Err(self.error("unexpected end of input")),
        }
    }

    fn uint(&mut self) -> Result<BigInt, ExprError> {
        let start = self.pos;
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_digit() {
            self.pos += 1;
        }
        if start == self.pos {
            return Err(self.error("expected an unsigned integer"));
        }
        let digits = std::str::from_utf8(&self.src[start..self.pos]).expect("ascii digits");
        Ok(digits.parse().expect("digits parse"))
    }

    fn var(&mut self) -> Result<RationalExpr, ExprError> {
        let start = self.pos;
        while self.pos < self.src.len()
            && (self.src[self.pos].is_ascii_alphanumeric() || self.src[self.pos] == b'_')
        {
            self.pos += 1;
        }
        let name = std::str::from_utf8(&self.src[start..self.pos]).expect("ascii identifier");
        let mut shift = 0i32;
        if self.peek() == Some(b'@') {
            self.pos += 1;
            self.skip_ws();
            let negative = match self.src.get(self.pos) {
                Some(b'-') => {
                    self.pos += 1;
                    true
                }
                Some(b'+') => {
                    self.pos += 1;
                    false
                }
                _ => false,
            };
            let k = self.uint()?;
            let k: i32 = k.try_into().map_err(|_| self.error("shift out of range"))?;
            shift = if negative { -k } else { k };
        }
        let v = Var::new(name, shift)?;
        if !(self.allowed)(&v) {
            return Err(ExprError::UnknownVariable {
                name: v.to_string(),
                position: start,
            });
        }
        Ok(RationalExpr::var(v))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn vars(names: &[&str]) -> Vec<Var> {
        names.iter().map(|n| Var::named(n)).collect()
    }

    #[test]
    fn polynomial_with_three_monomials() {
        let voc = vars(&["x1", "x2", "x3", "x4", "u1", "u2"]);
        let e = parse_expr("x3 + x2*x4 + x1*u2", &voc).unwrap();
        assert!(e.is_polynomial());
        assert_eq!(e.numer().nterms(), 3);
    }

    #[test]
    fn zero_literal() {
        let e = parse_expr("0", &[]).unwrap();
        assert!(e.is_zero());
        assert_eq!(e, RationalExpr::zero());
    }

    #[test]
    fn shifted_variables() {
        let e = parse_expr_with("(y2@0 - y2@-1)/(y1@0 + y1@-2)", |_| true).unwrap();
        let names: Vec<String> = e.vars().iter().map(|v| v.to_string()).collect();
        assert_eq!(names, ["y1@-2", "y1", "y2@-1", "y2"]);
        assert!(!e.is_polynomial());
    }

    #[test]
    fn unknown_variable_is_rejected() {
        let err = parse_expr("x1 + q", &vars(&["x1"])).unwrap_err();
        assert_eq!(
            err,
            ExprError::UnknownVariable {
                name: "q".into(),
                position: 5
            }
        );
    }

    #[test]
    fn division_by_zero_literal() {
        let err = parse_expr("x/0", &vars(&["x"])).unwrap_err();
        assert!(matches!(err, ExprError::DivisionByZero { position: 2 }));
        let err = parse_expr("x/(x - x)", &vars(&["x"])).unwrap_err();
        assert!(matches!(err, ExprError::DivisionByZero { .. }));
    }

    #[test]
    fn syntax_errors_report_position() {
        let err = parse_expr("x + * 2", &vars(&["x"])).unwrap_err();
        assert!(matches!(err, ExprError::Syntax { position: 4, .. }));
        let err = parse_expr("(x + 1", &vars(&["x"])).unwrap_err();
        assert!(matches!(err, ExprError::Syntax { position: 6, .. }));
        let err = parse_expr("x 1", &vars(&["x"])).unwrap_err();
        assert!(matches!(err, ExprError::Syntax { .. }));
    }

    #[test]
    fn unary_minus_binds_to_atom() {
        let voc = vars(&["x"]);
        assert_eq!(
            parse_expr("-x^2", &voc).unwrap(),
            parse_expr("x*x", &voc).unwrap()
        );
        assert_eq!(
            parse_expr("-1*x^2", &voc).unwrap(),
            parse_expr("0 - x*x", &voc).unwrap()
        );
        assert_eq!(
            parse_expr("2 - -x", &voc).unwrap(),
            parse_expr("x + 2", &voc).unwrap()
        );
    }

    #[test]
    fn printing_round_trips() {
        let e = parse_expr_with("(1/2*a - b^2)/(3*b + 6) - a/(b + 2)^2", |_| true).unwrap();
        let back = parse_expr_with(&e.to_string(), |_| true).unwrap();
        assert_eq!(back, e);
    }
}
