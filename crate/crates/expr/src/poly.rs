//! Sparse multivariate polynomials over Q with graded-lexicographic term order.

use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

use crate::var::Var;

pub type Rational = BigRational;

/// Power product of variables. Exponents are strictly positive and the
/// factors are sorted by variable.
#[derive(Clone, PartialEq, Eq, Hash, Default)]
pub struct Monomial {
    powers: Vec<(Var, u32)>,
}

impl Monomial {
    pub fn one() -> Self {
        Monomial { powers: Vec::new() }
    }

    pub fn var(v: Var) -> Self {
        Monomial {
            powers: vec![(v, 1)],
        }
    }

    pub fn from_powers(mut powers: Vec<(Var, u32)>) -> Self {
        powers.retain(|(_, e)| *e > 0);
        powers.sort_by(|a, b| a.0.cmp(&b.0));
        let mut merged: Vec<(Var, u32)> = Vec::with_capacity(powers.len());
        for (v, e) in powers {
            match merged.last_mut() {
                Some((w, f)) if *w == v => *f += e,
                _ => merged.push((v, e)),
            }
        }
        Monomial { powers: merged }
    }

    pub fn powers(&self) -> &[(Var, u32)] {
        &self.powers
    }

    pub fn is_one(&self) -> bool {
        self.powers.is_empty()
    }

    pub fn degree(&self) -> u32 {
        self.powers.iter().map(|(_, e)| e).sum()
    }

    pub fn degree_in(&self, v: &Var) -> u32 {
        match self.powers.binary_search_by(|(w, _)| w.cmp(v)) {
            Ok(i) => self.powers[i].1,
            Err(_) => 0,
        }
    }

    pub fn mul(&self, other: &Monomial) -> Monomial {
        let mut out = Vec::with_capacity(self.powers.len() + other.powers.len());
        let (mut i, mut j) = (0, 0);
        while i < self.powers.len() && j < other.powers.len() {
            let (a, ea) = &self.powers[i];
            let (b, eb) = &other.powers[j];
            match a.cmp(b) {
                Ordering::Less => {
                    out.push((a.clone(), *ea));
                    i += 1;
                }
                Ordering::Greater => {
                    out.push((b.clone(), *eb));
                    j += 1;
                }
                Ordering::Equal => {
                    out.push((a.clone(), ea + eb));
                    i += 1;
                    j += 1;
                }
            }
        }
        out.extend_from_slice(&self.powers[i..]);
        out.extend_from_slice(&other.powers[j..]);
        Monomial { powers: out }
    }

    /// `self / other` when `other` divides `self`.
    pub fn div(&self, other: &Monomial) -> Option<Monomial> {
        let mut out = Vec::with_capacity(self.powers.len());
        let mut j = 0;
        for (v, e) in &self.powers {
            if j < other.powers.len() && other.powers[j].0 < *v {
                return None;
            }
            if j < other.powers.len() && other.powers[j].0 == *v {
                let f = other.powers[j].1;
                j += 1;
                match e.cmp(&f) {
                    Ordering::Less => return None,
                    Ordering::Equal => {}
                    Ordering::Greater => out.push((v.clone(), e - f)),
                }
            } else {
                out.push((v.clone(), *e));
            }
        }
        if j < other.powers.len() {
            return None;
        }
        Some(Monomial { powers: out })
    }

    pub fn gcd(&self, other: &Monomial) -> Monomial {
        let mut out = Vec::new();
        for (v, e) in &self.powers {
            let f = other.degree_in(v);
            if f > 0 {
                out.push((v.clone(), (*e).min(f)));
            }
        }
        Monomial { powers: out }
    }

    /// Drops every power of `v`.
    pub fn without(&self, v: &Var) -> Monomial {
        Monomial {
            powers: self
                .powers
                .iter()
                .filter(|(w, _)| w != v)
                .cloned()
                .collect(),
        }
    }

    fn lex_cmp(&self, other: &Monomial) -> Ordering {
        let (mut i, mut j) = (0, 0);
        loop {
            match (self.powers.get(i), other.powers.get(j)) {
                (None, None) => return Ordering::Equal,
                (Some(_), None) => return Ordering::Greater,
                (None, Some(_)) => return Ordering::Less,
                (Some((a, ea)), Some((b, eb))) => match a.cmp(b) {
                    Ordering::Less => return Ordering::Greater,
                    Ordering::Greater => return Ordering::Less,
                    Ordering::Equal => match ea.cmp(eb) {
                        Ordering::Equal => {
                            i += 1;
                            j += 1;
                        }
                        o => return o,
                    },
                },
            }
        }
    }
}

impl Ord for Monomial {
    fn cmp(&self, other: &Self) -> Ordering {
        self.degree()
            .cmp(&other.degree())
            .then_with(|| self.lex_cmp(other))
    }
}

impl PartialOrd for Monomial {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for Monomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.powers.is_empty() {
            return write!(f, "1");
        }
        for (i, (v, e)) in self.powers.iter().enumerate() {
            if i > 0 {
                write!(f, "*")?;
            }
            if *e == 1 {
                write!(f, "{v}")?;
            } else {
                write!(f, "{v}^{e}")?;
            }
        }
        Ok(())
    }
}

impl fmt::Debug for Monomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

/// Multivariate polynomial with rational coefficients, stored as a sorted
/// map from monomial to nonzero coefficient.
#[derive(Clone, PartialEq, Eq, Hash, Default)]
pub struct Poly {
    terms: BTreeMap<Monomial, Rational>,
}

impl Poly {
    pub fn zero() -> Self {
        Poly {
            terms: BTreeMap::new(),
        }
    }

    pub fn one() -> Self {
        Self::constant(Rational::one())
    }

    pub fn constant(c: Rational) -> Self {
        let mut terms = BTreeMap::new();
        if !c.is_zero() {
            terms.insert(Monomial::one(), c);
        }
        Poly { terms }
    }

    pub fn from_i64(c: i64) -> Self {
        Self::constant(Rational::from_integer(BigInt::from(c)))
    }

    pub fn var(v: Var) -> Self {
        Self::term(Rational::one(), Monomial::var(v))
    }

    pub fn term(c: Rational, m: Monomial) -> Self {
        let mut terms = BTreeMap::new();
        if !c.is_zero() {
            terms.insert(m, c);
        }
        Poly { terms }
    }

    pub fn from_terms<I: IntoIterator<Item = (Monomial, Rational)>>(iter: I) -> Self {
        let mut p = Poly::zero();
        for (m, c) in iter {
            p.add_term(m, c);
        }
        p
    }

    fn add_term(&mut self, m: Monomial, c: Rational) {
        if c.is_zero() {
            return;
        }
        match self.terms.entry(m) {
            std::collections::btree_map::Entry::Vacant(e) => {
                e.insert(c);
            }
            std::collections::btree_map::Entry::Occupied(mut e) => {
                let s = e.get() + c;
                if s.is_zero() {
                    e.remove();
                } else {
                    *e.get_mut() = s;
                }
            }
        }
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn is_constant(&self) -> bool {
        self.terms.is_empty()
            || (self.terms.len() == 1 && self.terms.contains_key(&Monomial::one()))
    }

    /// The value of a constant polynomial.
    pub fn constant_value(&self) -> Option<Rational> {
        if self.is_zero() {
            Some(Rational::zero())
        } else if self.is_constant() {
            self.terms.values().next().cloned()
        } else {
            None
        }
    }

    pub fn is_one(&self) -> bool {
        self.constant_value().is_some_and(|c| c.is_one())
    }

    pub fn nterms(&self) -> usize {
        self.terms.len()
    }

    /// Terms in ascending monomial order.
    pub fn terms(&self) -> impl DoubleEndedIterator<Item = (&Monomial, &Rational)> {
        self.terms.iter()
    }

    pub fn coefficient(&self, m: &Monomial) -> Rational {
        self.terms.get(m).cloned().unwrap_or_else(Rational::zero)
    }

    pub fn leading(&self) -> Option<(&Monomial, &Rational)> {
        self.terms.iter().next_back()
    }

    pub fn total_degree(&self) -> u32 {
        self.terms.keys().map(|m| m.degree()).max().unwrap_or(0)
    }

    pub fn degree_in(&self, v: &Var) -> u32 {
        self.terms.keys().map(|m| m.degree_in(v)).max().unwrap_or(0)
    }

    pub fn vars(&self) -> BTreeSet<Var> {
        let mut out = BTreeSet::new();
        for m in self.terms.keys() {
            for (v, _) in m.powers() {
                out.insert(v.clone());
            }
        }
        out
    }

    pub fn contains_var(&self, v: &Var) -> bool {
        self.terms.keys().any(|m| m.degree_in(v) > 0)
    }

    pub fn scale(&self, c: &Rational) -> Poly {
        if c.is_zero() {
            return Poly::zero();
        }
        Poly {
            terms: self.terms.iter().map(|(m, d)| (m.clone(), d * c)).collect(),
        }
    }

    pub fn mul_term(&self, m: &Monomial, c: &Rational) -> Poly {
        if c.is_zero() {
            return Poly::zero();
        }
        Poly {
            terms: self.terms.iter().map(|(n, d)| (n.mul(m), d * c)).collect(),
        }
    }

    pub fn pow(&self, e: u32) -> Poly {
        let mut result = Poly::one();
        let mut base = self.clone();
        let mut e = e;
        while e > 0 {
            if e & 1 == 1 {
                result = &result * &base;
            }
            e >>= 1;
            if e > 0 {
                base = &base * &base;
            }
        }
        result
    }

    pub fn derivative(&self, v: &Var) -> Poly {
        let mut out = Poly::zero();
        for (m, c) in &self.terms {
            let e = m.degree_in(v);
            if e == 0 {
                continue;
            }
            let powers = m
                .powers()
                .iter()
                .map(|(w, f)| {
                    if w == v {
                        (w.clone(), f - 1)
                    } else {
                        (w.clone(), *f)
                    }
                })
                .collect();
            out.add_term(
                Monomial::from_powers(powers),
                c * Rational::from_integer(BigInt::from(e)),
            );
        }
        out
    }

    /// Coefficients with respect to `v`, keyed by the power of `v`.
    pub fn coefficients_in(&self, v: &Var) -> BTreeMap<u32, Poly> {
        let mut out: BTreeMap<u32, Poly> = BTreeMap::new();
        for (m, c) in &self.terms {
            let e = m.degree_in(v);
            out.entry(e).or_default().add_term(m.without(v), c.clone());
        }
        out
    }

    pub fn coefficient_in(&self, v: &Var, e: u32) -> Poly {
        let mut out = Poly::zero();
        for (m, c) in &self.terms {
            if m.degree_in(v) == e {
                out.add_term(m.without(v), c.clone());
            }
        }
        out
    }

    /// Exact evaluation; `None` when some variable has no value.
    pub fn eval(&self, point: &BTreeMap<Var, Rational>) -> Option<Rational> {
        let mut acc = Rational::zero();
        for (m, c) in &self.terms {
            let mut t = c.clone();
            for (v, e) in m.powers() {
                let x = point.get(v)?;
                t *= num_traits::pow(x.clone(), *e as usize);
            }
            acc += t;
        }
        Some(acc)
    }

    /// Largest monomial dividing every term.
    pub fn monomial_content(&self) -> Monomial {
        let mut it = self.terms.keys();
        let Some(first) = it.next() else {
            return Monomial::one();
        };
        let mut g = first.clone();
        for m in it {
            if g.is_one() {
                break;
            }
            g = g.gcd(m);
        }
        g
    }

    /// Rational content: gcd of numerators over lcm of denominators, signed
    /// so that `self / content` has a positive leading coefficient.
    pub fn rational_content(&self) -> Rational {
        let mut num = BigInt::zero();
        let mut den = BigInt::one();
        for c in self.terms.values() {
            num = num.gcd(c.numer());
            den = den.lcm(c.denom());
        }
        if num.is_zero() {
            return Rational::one();
        }
        let mut content = Rational::new(num, den);
        if self.leading().is_some_and(|(_, c)| c.is_negative()) {
            content = -content;
        }
        content
    }

    /// Integer-primitive associate with positive leading coefficient.
    pub fn normalized(&self) -> Poly {
        if self.is_zero() {
            return Poly::zero();
        }
        let c = self.rational_content();
        if c.is_one() {
            return self.clone();
        }
        self.scale(&c.recip())
    }

    /// Exact division; `None` when `divisor` does not divide `self`.
    pub fn div_exact(&self, divisor: &Poly) -> Option<Poly> {
        assert!(!divisor.is_zero(), "polynomial division by zero");
        if let Some(c) = divisor.constant_value() {
            return Some(self.scale(&c.recip()));
        }
        let (lm, lc) = divisor.leading().map(|(m, c)| (m.clone(), c.clone()))?;
        let mut rem = self.clone();
        let mut quot = Poly::zero();
        while let Some((m, c)) = rem.leading() {
            let qm = m.div(&lm)?;
            let qc = c / &lc;
            rem = &rem - &divisor.mul_term(&qm, &qc);
            quot.add_term(qm, qc);
        }
        Some(quot)
    }

    fn div_monomial(&self, m: &Monomial) -> Poly {
        Poly {
            terms: self
                .terms
                .iter()
                .map(|(n, c)| (n.div(m).expect("monomial divides"), c.clone()))
                .collect(),
        }
    }

    /// Pseudo-remainder of `self` by `divisor` viewed as univariate in `v`.
    fn pseudo_rem(&self, divisor: &Poly, v: &Var) -> Poly {
        let dq = divisor.degree_in(v);
        let lcq = divisor.coefficient_in(v, dq);
        let mut r = self.clone();
        while !r.is_zero() {
            let dr = r.degree_in(v);
            if dr < dq {
                break;
            }
            let lcr = r.coefficient_in(v, dr);
            let shift = Monomial::from_powers(vec![(v.clone(), dr - dq)]);
            let t = &lcr * &divisor.mul_term(&shift, &Rational::one());
            r = &(&r * &lcq) - &t;
            r = r.normalized();
        }
        r
    }
}

/// Greatest common divisor over Q, normalized to an integer-primitive
/// polynomial with positive leading coefficient.
pub fn gcd(a: &Poly, b: &Poly) -> Poly {
    if a.is_zero() {
        return b.normalized();
    }
    if b.is_zero() {
        return a.normalized();
    }
    if a.is_constant() || b.is_constant() {
        return Poly::one();
    }
    let ma = a.monomial_content();
    let mb = b.monomial_content();
    let mg = ma.gcd(&mb);
    let a1 = a.div_monomial(&ma).normalized();
    let b1 = b.div_monomial(&mb).normalized();
    let g = gcd_monomial_free(&a1, &b1);
    g.mul_term(&mg, &Rational::one()).normalized()
}

fn gcd_monomial_free(a: &Poly, b: &Poly) -> Poly {
    if a.is_constant() || b.is_constant() {
        return Poly::one();
    }
    if a == b {
        return a.clone();
    }
    let va = a.vars();
    let vb = b.vars();
    if let Some(x) = va.difference(&vb).next() {
        return gcd(&content_in(a, x), b);
    }
    if let Some(x) = vb.difference(&va).next() {
        return gcd(a, &content_in(b, x));
    }
    let x = va
        .iter()
        .min_by_key(|v| (a.degree_in(v).max(b.degree_in(v)), (*v).clone()))
        .expect("nonconstant polynomial has a variable")
        .clone();
    let ca = content_in(a, &x);
    let cb = content_in(b, &x);
    let c = gcd(&ca, &cb);
    let pa = a.div_exact(&ca).expect("content divides");
    let pb = b.div_exact(&cb).expect("content divides");
    if coprime_by_evaluation(&pa, &pb, &x) {
        return c;
    }
    let g = primitive_prs(pa, pb, &x);
    (&c * &g).normalized()
}

/// Gcd of the coefficients of `p` viewed as univariate in `v`.
fn content_in(p: &Poly, v: &Var) -> Poly {
    let mut g = Poly::zero();
    for c in p.coefficients_in(v).into_values() {
        g = gcd(&g, &c);
        if g.is_one() {
            break;
        }
    }
    g
}

fn primitive_part_in(p: &Poly, v: &Var) -> Poly {
    let c = content_in(p, v);
    p.div_exact(&c).expect("content divides").normalized()
}

fn primitive_prs(mut p: Poly, mut q: Poly, x: &Var) -> Poly {
    if p.degree_in(x) < q.degree_in(x) {
        std::mem::swap(&mut p, &mut q);
    }
    loop {
        if q.degree_in(x) == 0 {
            return Poly::one();
        }
        let r = p.pseudo_rem(&q, x);
        p = q;
        if r.is_zero() {
            return p.normalized();
        }
        if r.degree_in(x) == 0 {
            return Poly::one();
        }
        q = primitive_part_in(&r, x);
    }
}

/// Sound coprimality test for polynomials that are primitive in `x`: map all
/// other variables to fixed integers; if the leading coefficients survive and
/// the univariate images are coprime, so are the originals.
fn coprime_by_evaluation(a: &Poly, b: &Poly, x: &Var) -> bool {
    let mut others: BTreeSet<Var> = a.vars();
    others.extend(b.vars());
    others.remove(x);
    const PRIMES: [i64; 12] = [3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41];
    for attempt in 0..2i64 {
        let point: BTreeMap<Var, Rational> = others
            .iter()
            .enumerate()
            .map(|(i, v)| {
                let p = PRIMES[i % PRIMES.len()] + 2 * attempt + (i / PRIMES.len()) as i64;
                (v.clone(), Rational::from_integer(BigInt::from(p)))
            })
            .collect();
        let (Some(ua), Some(ub)) = (
            univariate_image(a, x, &point),
            univariate_image(b, x, &point),
        ) else {
            continue;
        };
        if ua.len() != a.degree_in(x) as usize + 1 || ub.len() != b.degree_in(x) as usize + 1 {
            continue;
        }
        return univariate_gcd_degree(ua, ub) == 0;
    }
    false
}

/// Dense coefficients (ascending) of `p` with every variable but `x`
/// evaluated; trailing zeros trimmed.
fn univariate_image(p: &Poly, x: &Var, point: &BTreeMap<Var, Rational>) -> Option<Vec<Rational>> {
    let d = p.degree_in(x) as usize;
    let mut out = vec![Rational::zero(); d + 1];
    for (e, c) in p.coefficients_in(x) {
        out[e as usize] = c.eval(point)?;
    }
    while out.last().is_some_and(|c| c.is_zero()) {
        out.pop();
    }
    Some(out)
}

fn univariate_gcd_degree(mut a: Vec<Rational>, mut b: Vec<Rational>) -> usize {
    if a.len() < b.len() {
        std::mem::swap(&mut a, &mut b);
    }
    while !b.is_empty() {
        // a mod b
        let lb = b.last().unwrap().clone();
        while a.len() >= b.len() && !a.is_empty() {
            let factor = a.last().unwrap() / &lb;
            let off = a.len() - b.len();
            for (i, c) in b.iter().enumerate() {
                a[off + i] -= &factor * c;
            }
            a.pop();
            while a.last().is_some_and(|c| c.is_zero()) {
                a.pop();
            }
        }
        std::mem::swap(&mut a, &mut b);
    }
    a.len().saturating_sub(1)
}

/// Least common multiple, normalized like [`gcd`].
pub fn lcm(a: &Poly, b: &Poly) -> Poly {
    if a.is_zero() || b.is_zero() {
        return Poly::zero();
    }
    let g = gcd(a, b);
    (&a.div_exact(&g).expect("gcd divides") * b).normalized()
}

impl Add for &Poly {
    type Output = Poly;
    fn add(self, rhs: &Poly) -> Poly {
        let (big, small) = if self.terms.len() >= rhs.terms.len() {
            (self, rhs)
        } else {
            (rhs, self)
        };
        let mut out = big.clone();
        for (m, c) in &small.terms {
            out.add_term(m.clone(), c.clone());
        }
        out
    }
}

impl Sub for &Poly {
    type Output = Poly;
    fn sub(self, rhs: &Poly) -> Poly {
        let mut out = self.clone();
        for (m, c) in &rhs.terms {
            out.add_term(m.clone(), -c);
        }
        out
    }
}

impl Mul for &Poly {
    type Output = Poly;
    fn mul(self, rhs: &Poly) -> Poly {
        if self.is_zero() || rhs.is_zero() {
            return Poly::zero();
        }
        let mut acc: BTreeMap<Monomial, Rational> = BTreeMap::new();
        for (m1, c1) in &self.terms {
            for (m2, c2) in &rhs.terms {
                let m = m1.mul(m2);
                let c = c1 * c2;
                match acc.entry(m) {
                    std::collections::btree_map::Entry::Vacant(e) => {
                        e.insert(c);
                    }
                    std::collections::btree_map::Entry::Occupied(mut e) => {
                        *e.get_mut() += c;
                    }
                }
            }
        }
        acc.retain(|_, c| !c.is_zero());
        Poly { terms: acc }
    }
}

impl Neg for &Poly {
    type Output = Poly;
    fn neg(self) -> Poly {
        Poly {
            terms: self.terms.iter().map(|(m, c)| (m.clone(), -c)).collect(),
        }
    }
}

pub(crate) fn fmt_rational(c: &Rational) -> String {
    if c.is_integer() {
        c.numer().to_string()
    } else {
        format!("{}/{}", c.numer(), c.denom())
    }
}

impl fmt::Display for Poly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return write!(f, "0");
        }
        for (i, (m, c)) in self.terms.iter().rev().enumerate() {
            let negative = c.is_negative();
            let abs = c.abs();
            if i == 0 {
                if negative {
                    write!(f, "-")?;
                }
            } else if negative {
                write!(f, " - ")?;
            } else {
                write!(f, " + ")?;
            }
            if m.is_one() {
                write!(f, "{}", fmt_rational(&abs))?;
            } else if abs.is_one() {
                // "-x^2" would parse as (-x)^2
                if i == 0 && negative && m.powers()[0].1 > 1 {
                    write!(f, "1*")?;
                }
                write!(f, "{m}")?;
            } else {
                write!(f, "{}*{m}", fmt_rational(&abs))?;
            }
        }
        Ok(())
    }
}

impl fmt::Debug for Poly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Poly({self})")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn v(name: &str) -> Poly {
        Poly::var(Var::named(name))
    }

    fn c(k: i64) -> Poly {
        Poly::from_i64(k)
    }

    #[test]
    fn grlex_orders_by_degree_first() {
        let x = Monomial::var(Var::named("x"));
        let y = Monomial::var(Var::named("y"));
        let y2 = y.mul(&y);
        assert!(y2 > x);
        assert!(
            x > y,
            "x precedes y in the variable order, so x is the larger lex monomial"
        );
        assert!(x.mul(&y) > y2);
    }

    #[test]
    fn monomial_division() {
        let x = Monomial::var(Var::named("x"));
        let y = Monomial::var(Var::named("y"));
        let xy2 = x.mul(&y).mul(&y);
        assert_eq!(xy2.div(&y.mul(&y)), Some(x.clone()));
        assert_eq!(x.div(&y), None);
        assert_eq!(y.div(&x), None);
    }

    #[test]
    fn exact_division_and_failure() {
        let (x, y) = (v("x"), v("y"));
        let a = &(&x + &y) * &(&x - &y);
        assert_eq!(a.div_exact(&(&x + &y)), Some(&x - &y));
        assert_eq!((&x + &c(1)).div_exact(&y), None);
    }

    #[test]
    fn gcd_recovers_common_factor() {
        let (x, y, z) = (v("x"), v("y"), v("z"));
        let g = &(&(&x * &y) + &z) + &c(3);
        let a = &g * &(&x - &(&y * &y));
        let b = &g * &(&(&z * &x) + &c(2));
        let h = gcd(&a, &b);
        assert_eq!(h, g.normalized());
    }

    #[test]
    fn gcd_of_coprime_and_scaled() {
        let (x, y) = (v("x"), v("y"));
        assert!(gcd(&(&x + &y), &(&x - &y)).is_one());
        let a = (&x + &y).scale(&Rational::new(6.into(), 1.into()));
        let b = (&x + &y).scale(&Rational::new((-4).into(), 3.into()));
        assert_eq!(gcd(&a, &b), &x + &y);
        assert_eq!(gcd(&(&x * &x), &(&x * &y)), x);
    }

    #[test]
    fn gcd_with_variable_only_on_one_side() {
        let (x, y, z) = (v("x"), v("y"), v("z"));
        let a = &(&x + &y) * &(&z + &c(1));
        let b = &(&x + &y) * &(&x - &c(5));
        assert_eq!(gcd(&a, &b), &x + &y);
    }

    #[test]
    fn derivative_power_rule() {
        let (x, y) = (v("x"), v("y"));
        let p = &(&x.pow(3) * &y) + &x;
        assert_eq!(
            p.derivative(&Var::named("x")),
            &(&x.pow(2) * &y).scale(&Rational::from_integer(3.into())) + &c(1)
        );
        assert!(p.derivative(&Var::named("z")).is_zero());
    }

    #[test]
    fn display_guards_leading_negative_power() {
        let x = v("x");
        assert_eq!((-&x.pow(2)).to_string(), "-1*x^2");
        assert_eq!((&c(1) - &x).to_string(), "-x + 1");
    }
}
