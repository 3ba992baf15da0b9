use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::ops::{Add, Div, Mul, Neg, Sub};

use num_bigint::BigInt;
use num_traits::{One, Zero};

use crate::error::ExprError;
use crate::poly::{gcd, Monomial, Poly, Rational};
use crate::var::Var;

/// Multivariate rational function over Q in canonical form.
///
/// Numerator and denominator are coprime; the denominator is an
/// integer-primitive polynomial with positive leading coefficient (so the
/// zero function is `0/1`). Two expressions are mathematically equal iff
/// they compare equal.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct RationalExpr {
    num: Poly,
    den: Poly,
}

impl RationalExpr {
    pub fn zero() -> Self {
        RationalExpr {
            num: Poly::zero(),
            den: Poly::one(),
        }
    }

    pub fn one() -> Self {
        Self::from_poly(Poly::one())
    }

    pub fn int(k: i64) -> Self {
        Self::from_poly(Poly::from_i64(k))
    }

    pub fn constant(c: Rational) -> Self {
        Self::from_poly(Poly::constant(c))
    }

    pub fn var(v: Var) -> Self {
        Self::from_poly(Poly::var(v))
    }

    pub fn from_poly(p: Poly) -> Self {
        RationalExpr {
            num: p,
            den: Poly::one(),
        }
    }

    /// Builds `num / den` in canonical form; `None` if `den` is zero.
    pub fn from_parts(num: Poly, den: Poly) -> Option<Self> {
        if den.is_zero() {
            return None;
        }
        Some(Self::reduce(num, den))
    }

    fn reduce(num: Poly, den: Poly) -> Self {
        if num.is_zero() {
            return Self::zero();
        }
        if let Some(c) = den.constant_value() {
            return RationalExpr {
                num: num.scale(&c.recip()),
                den: Poly::one(),
            };
        }
        let g = gcd(&num, &den);
        let (num, den) = if g.is_one() {
            (num, den)
        } else {
            (
                num.div_exact(&g).expect("gcd divides numerator"),
                den.div_exact(&g).expect("gcd divides denominator"),
            )
        };
        Self::normalize_den(num, den)
    }

    fn normalize_den(num: Poly, den: Poly) -> Self {
        let c = den.rational_content();
        if c.is_one() {
            return RationalExpr { num, den };
        }
        let inv = c.recip();
        RationalExpr {
            num: num.scale(&inv),
            den: den.scale(&inv),
        }
    }

    pub fn numer(&self) -> &Poly {
        &self.num
    }

    pub fn denom(&self) -> &Poly {
        &self.den
    }

    pub fn is_zero(&self) -> bool {
        self.num.is_zero()
    }

    pub fn is_one(&self) -> bool {
        self.den.is_one() && self.num.is_one()
    }

    pub fn is_polynomial(&self) -> bool {
        self.den.is_one()
    }

    pub fn constant_value(&self) -> Option<Rational> {
        if self.den.is_one() {
            self.num.constant_value()
        } else {
            None
        }
    }

    pub fn is_constant(&self) -> bool {
        self.constant_value().is_some()
    }

    pub fn vars(&self) -> BTreeSet<Var> {
        let mut v = self.num.vars();
        v.extend(self.den.vars());
        v
    }

    pub fn contains_var(&self, v: &Var) -> bool {
        self.num.contains_var(v) || self.den.contains_var(v)
    }

    /// Multiplicative inverse; `None` for zero.
    pub fn recip(&self) -> Option<Self> {
        if self.is_zero() {
            return None;
        }
        Some(Self::normalize_den(self.den.clone(), self.num.clone()))
    }

    pub fn checked_div(&self, rhs: &Self) -> Option<Self> {
        Some(self * &rhs.recip()?)
    }

    pub fn pow(&self, e: u32) -> Self {
        RationalExpr {
            num: self.num.pow(e),
            den: self.den.pow(e),
        }
    }

    /// Exact partial derivative (quotient rule).
    pub fn diff(&self, v: &Var) -> Self {
        let dn = self.num.derivative(v);
        if self.den.is_one() {
            return Self::from_poly(dn);
        }
        let dd = self.den.derivative(v);
        if dd.is_zero() {
            return Self::reduce(dn, self.den.clone());
        }
        let top = &(&dn * &self.den) - &(&self.num * &dd);
        Self::reduce(top, self.den.pow(2))
    }

    /// Simultaneous substitution of variables by expressions.
    pub fn substitute(&self, bindings: &BTreeMap<Var, RationalExpr>) -> Result<Self, ExprError> {
        if bindings.is_empty() || !self.vars().iter().any(|v| bindings.contains_key(v)) {
            return Ok(self.clone());
        }
        let (n, n_den) = substitute_poly(&self.num, bindings);
        let (d, d_den) = substitute_poly(&self.den, bindings);
        if d.is_zero() {
            return Err(ExprError::ZeroDenominator);
        }
        // self = (n / n_den) / (d / d_den) = n * d_den / (d * n_den); the
        // denominator factors are products of binding denominators, so
        // cancel the shared powers before multiplying out.
        let mut top = n;
        let mut bottom = d;
        let vars: BTreeSet<&Var> = n_den.keys().chain(d_den.keys()).collect();
        for v in vars {
            let a = n_den.get(v).copied().unwrap_or(0);
            let b = d_den.get(v).copied().unwrap_or(0);
            let q = bindings[v].denom();
            if b > a {
                top = &top * &q.pow(b - a);
            } else if a > b {
                bottom = &bottom * &q.pow(a - b);
            }
        }
        Ok(Self::reduce(top, bottom))
    }

    /// Renames variables; the map must be injective on the variables present.
    pub fn rename(&self, map: &BTreeMap<Var, Var>) -> Self {
        let bindings: BTreeMap<Var, RationalExpr> = map
            .iter()
            .map(|(a, b)| (a.clone(), RationalExpr::var(b.clone())))
            .collect();
        self.substitute(&bindings)
            .expect("renaming cannot create a zero denominator")
    }

    /// Exact evaluation; `None` when a variable is missing or the
    /// denominator vanishes at the point.
    pub fn eval(&self, point: &BTreeMap<Var, Rational>) -> Option<Rational> {
        let d = self.den.eval(point)?;
        if d.is_zero() {
            return None;
        }
        Some(self.num.eval(point)? / d)
    }
}

/// Evaluates `p` at `bindings` over a common denominator: returns `(n, e)`
/// with `p(bindings) = n / prod_v denom(bindings[v])^e[v]`.
fn substitute_poly(p: &Poly, bindings: &BTreeMap<Var, RationalExpr>) -> (Poly, BTreeMap<Var, u32>) {
    let mut max_deg: BTreeMap<Var, u32> = BTreeMap::new();
    for v in p.vars() {
        if let Some(b) = bindings.get(&v) {
            if !b.den.is_one() {
                max_deg.insert(v.clone(), p.degree_in(&v));
            }
        }
    }
    let mut num_pows: BTreeMap<(Var, u32), Poly> = BTreeMap::new();
    let mut den_pows: BTreeMap<(Var, u32), Poly> = BTreeMap::new();
    let mut acc = Poly::zero();
    for (m, c) in p.terms() {
        let mut kept = Vec::new();
        let mut t = Poly::constant(c.clone());
        let mut used: BTreeMap<&Var, u32> = BTreeMap::new();
        for (v, e) in m.powers() {
            match bindings.get(v) {
                Some(b) => {
                    let pw = num_pows
                        .entry((v.clone(), *e))
                        .or_insert_with(|| b.num.pow(*e));
                    t = &t * pw;
                    used.insert(v, *e);
                }
                None => kept.push((v.clone(), *e)),
            }
        }
        for (v, d) in &max_deg {
            let e = used.get(v).copied().unwrap_or(0);
            if d > &e {
                let pw = den_pows
                    .entry((v.clone(), d - e))
                    .or_insert_with(|| bindings[v].den.pow(d - e));
                t = &t * pw;
            }
        }
        if !kept.is_empty() {
            t = t.mul_term(&Monomial::from_powers(kept), &Rational::one());
        }
        acc = &acc + &t;
    }
    (acc, max_deg)
}

impl Default for RationalExpr {
    fn default() -> Self {
        Self::zero()
    }
}

impl From<Var> for RationalExpr {
    fn from(v: Var) -> Self {
        Self::var(v)
    }
}

impl From<i64> for RationalExpr {
    fn from(k: i64) -> Self {
        Self::int(k)
    }
}

impl From<Rational> for RationalExpr {
    fn from(c: Rational) -> Self {
        Self::constant(c)
    }
}

impl Add for &RationalExpr {
    type Output = RationalExpr;
    fn add(self, rhs: &RationalExpr) -> RationalExpr {
        if self.is_zero() {
            return rhs.clone();
        }
        if rhs.is_zero() {
            return self.clone();
        }
        if self.den == rhs.den {
            if self.den.is_one() {
                return RationalExpr::from_poly(&self.num + &rhs.num);
            }
            return RationalExpr::reduce(&self.num + &rhs.num, self.den.clone());
        }
        if self.den.is_one() {
            return RationalExpr::normalize_den(
                &(&self.num * &rhs.den) + &rhs.num,
                rhs.den.clone(),
            );
        }
        if rhs.den.is_one() {
            return RationalExpr::normalize_den(
                &self.num + &(&rhs.num * &self.den),
                self.den.clone(),
            );
        }
        // a/b + c/d with g = gcd(b, d): only g can share factors with the
        // new numerator.
        let g = gcd(&self.den, &rhs.den);
        if g.is_one() {
            let top = &(&self.num * &rhs.den) + &(&rhs.num * &self.den);
            return RationalExpr::normalize_den(top, &self.den * &rhs.den);
        }
        let b1 = self.den.div_exact(&g).expect("gcd divides");
        let d1 = rhs.den.div_exact(&g).expect("gcd divides");
        let top = &(&self.num * &d1) + &(&rhs.num * &b1);
        if top.is_zero() {
            return RationalExpr::zero();
        }
        let h = gcd(&top, &g);
        let (top, g) = if h.is_one() {
            (top, g)
        } else {
            (
                top.div_exact(&h).expect("gcd divides"),
                g.div_exact(&h).expect("gcd divides"),
            )
        };
        RationalExpr::normalize_den(top, &(&b1 * &d1) * &g)
    }
}

impl Sub for &RationalExpr {
    type Output = RationalExpr;
    fn sub(self, rhs: &RationalExpr) -> RationalExpr {
        self + &(-rhs)
    }
}

impl Mul for &RationalExpr {
    type Output = RationalExpr;
    fn mul(self, rhs: &RationalExpr) -> RationalExpr {
        if self.is_zero() || rhs.is_zero() {
            return RationalExpr::zero();
        }
        if self.den.is_one() && rhs.den.is_one() {
            return RationalExpr::from_poly(&self.num * &rhs.num);
        }
        let g1 = gcd(&self.num, &rhs.den);
        let g2 = gcd(&rhs.num, &self.den);
        let div = |p: &Poly, g: &Poly| {
            if g.is_one() {
                p.clone()
            } else {
                p.div_exact(g).expect("gcd divides")
            }
        };
        let top = &div(&self.num, &g1) * &div(&rhs.num, &g2);
        let bottom = &div(&self.den, &g2) * &div(&rhs.den, &g1);
        RationalExpr::normalize_den(top, bottom)
    }
}

impl Div for &RationalExpr {
    type Output = RationalExpr;
    /// Panics on division by zero, like integer division.
    fn div(self, rhs: &RationalExpr) -> RationalExpr {
        self.checked_div(rhs).expect("division by zero expression")
    }
}

impl Neg for &RationalExpr {
    type Output = RationalExpr;
    fn neg(self) -> RationalExpr {
        RationalExpr {
            num: -&self.num,
            den: self.den.clone(),
        }
    }
}

macro_rules! forward_owned_binop {
    ($tr:ident, $m:ident) => {
        impl $tr for RationalExpr {
            type Output = RationalExpr;
            fn $m(self, rhs: RationalExpr) -> RationalExpr {
                (&self).$m(&rhs)
            }
        }
        impl $tr<&RationalExpr> for RationalExpr {
            type Output = RationalExpr;
            fn $m(self, rhs: &RationalExpr) -> RationalExpr {
                (&self).$m(rhs)
            }
        }
        impl $tr<RationalExpr> for &RationalExpr {
            type Output = RationalExpr;
            fn $m(self, rhs: RationalExpr) -> RationalExpr {
                self.$m(&rhs)
            }
        }
    };
}

forward_owned_binop!(Add, add);
forward_owned_binop!(Sub, sub);
forward_owned_binop!(Mul, mul);
forward_owned_binop!(Div, div);

impl Neg for RationalExpr {
    type Output = RationalExpr;
    fn neg(self) -> RationalExpr {
        -&self
    }
}

impl std::iter::Sum for RationalExpr {
    fn sum<I: Iterator<Item = RationalExpr>>(iter: I) -> Self {
        iter.fold(RationalExpr::zero(), |a, b| &a + &b)
    }
}

impl fmt::Display for RationalExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.den.is_one() {
            return write!(f, "{}", self.num);
        }
        if self.num.nterms() > 1 {
            write!(f, "({})", self.num)?;
        } else {
            write!(f, "{}", self.num)?;
        }
        let simple_den = self.den.nterms() == 1
            && self
                .den
                .leading()
                .is_some_and(|(m, c)| c.is_one() && m.powers().len() == 1);
        if simple_den {
            write!(f, "/{}", self.den)
        } else {
            write!(f, "/({})", self.den)
        }
    }
}

impl fmt::Debug for RationalExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "`{self}`")
    }
}

/// Convenience for tests and literals.
pub fn rational(n: i64, d: i64) -> Rational {
    Rational::new(BigInt::from(n), BigInt::from(d))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn v(name: &str) -> RationalExpr {
        RationalExpr::var(Var::named(name))
    }

    #[test]
    fn cancellation_is_canonical() {
        let (a, b) = (v("a"), v("b"));
        let e = &(&a * &a - &b * &b) / &(&a + &b);
        assert_eq!(e, &a - &b);
        assert!(e.is_polynomial());
    }

    #[test]
    fn derivative_with_constant_denominator_in_var_reduces() {
        let (x, y) = (v("x"), v("y"));
        let e = &y / &(&x + &RationalExpr::one());
        assert_eq!(e.diff(&Var::named("z")), RationalExpr::zero());
        assert!(e.diff(&Var::named("z")).denom().is_one());
        // d/dy (y(x+1) + 1)/(x+1) = 1
        let e = &(&(&y * &(&x + &RationalExpr::one())) + &RationalExpr::one())
            / &(&x + &RationalExpr::one());
        assert_eq!(e.diff(&Var::named("y")), RationalExpr::one());
    }

    #[test]
    fn denominator_sign_normalized() {
        let (a, b) = (v("a"), v("b"));
        let e1 = &a / &(&b - &a);
        let e2 = &(-&a) / &(&a - &b);
        assert_eq!(e1, e2);
        assert!(e1.denom().leading().unwrap().1 > &Rational::zero());
    }

    #[test]
    fn sums_over_shared_factors() {
        let (x, y) = (v("x"), v("y"));
        let d = &x + &y;
        let e = &(&x / &(&d * &x)) + &(&y / &(&d * &y));
        assert_eq!(e, &RationalExpr::int(2) / &d);
        let z = &(&x / &d) + &(&y / &d);
        assert!(z.is_one());
    }

    #[test]
    fn quotient_rule() {
        let y1 = RationalExpr::var(Var::new("y1", 0).unwrap());
        let y1m2 = RationalExpr::var(Var::new("y1", -2).unwrap());
        let s = &y1 + &y1m2;
        let e = s.recip().unwrap();
        let d = e.diff(&Var::new("y1", 0).unwrap());
        assert_eq!(d, -(&RationalExpr::one() / &s.pow(2)));
    }

    #[test]
    fn substitution_constant_evaluation() {
        let (a, b) = (v("a"), v("b"));
        let e = &(&a + &b) / &(&a - &b);
        let mut map = BTreeMap::new();
        map.insert(Var::named("a"), RationalExpr::int(2));
        map.insert(Var::named("b"), RationalExpr::int(1));
        assert_eq!(e.substitute(&map).unwrap(), RationalExpr::int(3));
    }

    #[test]
    fn substitution_into_zero_denominator_errors() {
        let (a, b) = (v("a"), v("b"));
        let e = &RationalExpr::one() / &(&a - &b);
        let mut map = BTreeMap::new();
        map.insert(Var::named("a"), b.clone());
        assert_eq!(e.substitute(&map), Err(ExprError::ZeroDenominator));
    }

    #[test]
    fn substitution_with_rational_bindings() {
        let (x, y, t) = (v("x"), v("y"), v("t"));
        let e = &(&x * &x) + &y;
        let mut map = BTreeMap::new();
        map.insert(Var::named("x"), &RationalExpr::one() / &t);
        map.insert(Var::named("y"), &t / &(&t + &RationalExpr::one()));
        let got = e.substitute(&map).unwrap();
        let want = &(&RationalExpr::one() / &(&t * &t)) + &(&t / &(&t + &RationalExpr::one()));
        assert_eq!(got, want);
    }

    #[test]
    fn eval_skips_poles() {
        let x = v("x");
        let e = &RationalExpr::one() / &x;
        let mut p = BTreeMap::new();
        p.insert(Var::named("x"), Rational::zero());
        assert_eq!(e.eval(&p), None);
        p.insert(Var::named("x"), rational(2, 3));
        assert_eq!(e.eval(&p), Some(rational(3, 2)));
    }
}
