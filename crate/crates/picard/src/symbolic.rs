//! Exact multivariate Laurent arithmetic over ℚ.
//!
//! The local-factor identities checked in `lift` (Euler factorizations,
//! eigenvalue divisibilities) are polynomial identities in a handful of
//! symbols: a Hecke eigenvalue, a root-of-unity character value and its
//! inverse, a prime. This module keeps those identities exact: monomials
//! with integer (possibly negative) exponents in named symbols, rational
//! coefficients, and a thin layer of polynomials in one distinguished
//! variable. Nothing here is numeric — equality is coefficientwise.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use std::collections::BTreeMap;
use std::fmt;

/// Product Π sᵢ^{eᵢ} of named symbols with nonzero integer exponents.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Debug, Default)]
pub struct Monomial(BTreeMap<String, i64>);

impl Monomial {
    pub fn one() -> Self {
        Monomial(BTreeMap::new())
    }

    pub fn sym_pow(name: &str, e: i64) -> Self {
        let mut m = BTreeMap::new();
        if e != 0 {
            m.insert(name.to_string(), e);
        }
        Monomial(m)
    }

    pub fn is_one(&self) -> bool {
        self.0.is_empty()
    }

    pub fn mul(&self, other: &Self) -> Self {
        let mut m = self.0.clone();
        for (name, e) in &other.0 {
            let slot = m.entry(name.clone()).or_insert(0);
            *slot += e;
            if *slot == 0 {
                m.remove(name);
            }
        }
        Monomial(m)
    }

    /// Exponent of `name` (0 when absent).
    pub fn exponent(&self, name: &str) -> i64 {
        self.0.get(name).copied().unwrap_or(0)
    }

    /// Iterate (symbol, exponent) pairs.
    pub fn iter(&self) -> impl Iterator<Item = (&str, i64)> + '_ {
        self.0.iter().map(|(k, v)| (k.as_str(), *v))
    }
}

impl fmt::Display for Monomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_empty() {
            return write!(f, "1");
        }
        let mut first = true;
        for (name, e) in &self.0 {
            if !first {
                write!(f, "*")?;
            }
            first = false;
            if *e == 1 {
                write!(f, "{}", name)?;
            } else {
                write!(f, "{}^{}", name, e)?;
            }
        }
        Ok(())
    }
}

/// Finite ℚ-linear combination of monomials (zero coefficients never stored).
#[derive(Clone, PartialEq, Eq, Debug, Default)]
pub struct LaurentPoly {
    terms: BTreeMap<Monomial, BigRational>,
}

impl LaurentPoly {
    pub fn zero() -> Self {
        LaurentPoly {
            terms: BTreeMap::new(),
        }
    }

    pub fn one() -> Self {
        Self::from_integer(1)
    }

    pub fn from_rational(r: &BigRational) -> Self {
        let mut terms = BTreeMap::new();
        if !r.is_zero() {
            terms.insert(Monomial::one(), r.clone());
        }
        LaurentPoly { terms }
    }

    pub fn from_integer(n: i64) -> Self {
        Self::from_rational(&BigRational::from_integer(BigInt::from(n)))
    }

    pub fn sym(name: &str) -> Self {
        Self::sym_pow(name, 1)
    }

    pub fn sym_pow(name: &str, e: i64) -> Self {
        let mut terms = BTreeMap::new();
        terms.insert(Monomial::sym_pow(name, e), BigRational::one());
        LaurentPoly { terms }
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    fn insert(&mut self, m: Monomial, c: BigRational) {
        if c.is_zero() {
            return;
        }
        match self.terms.get_mut(&m) {
            Some(slot) => {
                *slot += c;
                if slot.is_zero() {
                    self.terms.remove(&m);
                }
            }
            None => {
                self.terms.insert(m, c);
            }
        }
    }

    pub fn add(&self, other: &Self) -> Self {
        let mut out = self.clone();
        for (m, c) in &other.terms {
            out.insert(m.clone(), c.clone());
        }
        out
    }

    pub fn neg(&self) -> Self {
        LaurentPoly {
            terms: self.terms.iter().map(|(m, c)| (m.clone(), -c)).collect(),
        }
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.neg())
    }

    pub fn mul(&self, other: &Self) -> Self {
        let mut out = LaurentPoly::zero();
        for (m1, c1) in &self.terms {
            for (m2, c2) in &other.terms {
                out.insert(m1.mul(m2), c1 * c2);
            }
        }
        out
    }

    pub fn scale_rational(&self, r: &BigRational) -> Self {
        if r.is_zero() {
            return LaurentPoly::zero();
        }
        LaurentPoly {
            terms: self.terms.iter().map(|(m, c)| (m.clone(), c * r)).collect(),
        }
    }

    pub fn pow(&self, e: u32) -> Self {
        let mut out = LaurentPoly::one();
        for _ in 0..e {
            out = out.mul(self);
        }
        out
    }

    /// Minimum exponent of `name` over all monomials; `None` for the zero
    /// polynomial. `Some(v)` with v ≥ 1 certifies termwise divisibility by
    /// `name`.
    pub fn min_exponent(&self, name: &str) -> Option<i64> {
        self.terms.keys().map(|m| m.exponent(name)).min()
    }

    /// Iterate (monomial, coefficient) pairs.
    pub fn iter(&self) -> impl Iterator<Item = (&Monomial, &BigRational)> + '_ {
        self.terms.iter()
    }

    /// Substitute `name` ↦ sign ∈ {±1}, eliminating the symbol exactly.
    pub fn subst_sign(&self, name: &str, sign: i64) -> Self {
        assert!(sign == 1 || sign == -1, "sign substitution needs ±1");
        let mut out = LaurentPoly::zero();
        for (m, c) in &self.terms {
            let e = m.exponent(name);
            let mut stripped = m.0.clone();
            stripped.remove(name);
            let flip = sign == -1 && e.rem_euclid(2) == 1;
            out.insert(Monomial(stripped), if flip { -c } else { c.clone() });
        }
        out
    }
}

impl fmt::Display for LaurentPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        let mut first = true;
        for (m, c) in &self.terms {
            let (sign, mag) = if c.is_negative() {
                ("-", -c)
            } else {
                ("+", c.clone())
            };
            if first {
                if sign == "-" {
                    write!(f, "-")?;
                }
                first = false;
            } else {
                write!(f, " {} ", sign)?;
            }
            if m.is_one() {
                write!(f, "{}", mag)?;
            } else if mag.is_one() {
                write!(f, "{}", m)?;
            } else {
                write!(f, "{}*{}", mag, m)?;
            }
        }
        Ok(())
    }
}

/// Polynomial Σᵢ cᵢ·xⁱ in one distinguished variable with Laurent
/// coefficients, kept with no trailing zero coefficients (so structural
/// equality is mathematical equality).
#[derive(Clone, PartialEq, Eq, Debug, Default)]
pub struct XPoly {
    coeffs: Vec<LaurentPoly>,
}

impl XPoly {
    pub fn zero() -> Self {
        XPoly { coeffs: Vec::new() }
    }

    pub fn one() -> Self {
        XPoly::constant(LaurentPoly::one())
    }

    pub fn constant(c: LaurentPoly) -> Self {
        XPoly { coeffs: vec![c] }.trimmed()
    }

    pub fn from_coeffs(coeffs: Vec<LaurentPoly>) -> Self {
        XPoly { coeffs }.trimmed()
    }

    /// c·x^e.
    pub fn term(c: LaurentPoly, e: usize) -> Self {
        let mut coeffs = vec![LaurentPoly::zero(); e];
        coeffs.push(c);
        XPoly { coeffs }.trimmed()
    }

    fn trimmed(mut self) -> Self {
        while self.coeffs.last().is_some_and(|c| c.is_zero()) {
            self.coeffs.pop();
        }
        self
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// Degree in x; `None` for the zero polynomial.
    pub fn degree(&self) -> Option<usize> {
        self.coeffs.len().checked_sub(1)
    }

    pub fn coeff(&self, i: usize) -> LaurentPoly {
        self.coeffs.get(i).cloned().unwrap_or_default()
    }

    pub fn add(&self, other: &Self) -> Self {
        let n = self.coeffs.len().max(other.coeffs.len());
        let coeffs = (0..n).map(|i| self.coeff(i).add(&other.coeff(i))).collect();
        XPoly { coeffs }.trimmed()
    }

    pub fn neg(&self) -> Self {
        XPoly {
            coeffs: self.coeffs.iter().map(|c| c.neg()).collect(),
        }
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.neg())
    }

    pub fn mul(&self, other: &Self) -> Self {
        if self.is_zero() || other.is_zero() {
            return XPoly::zero();
        }
        let mut coeffs =
            vec![LaurentPoly::zero(); self.coeffs.len() + other.coeffs.len() - 1];
        for (i, a) in self.coeffs.iter().enumerate() {
            for (j, b) in other.coeffs.iter().enumerate() {
                coeffs[i + j] = coeffs[i + j].add(&a.mul(b));
            }
        }
        XPoly { coeffs }.trimmed()
    }

    pub fn scale(&self, c: &LaurentPoly) -> Self {
        XPoly {
            coeffs: self.coeffs.iter().map(|a| a.mul(c)).collect(),
        }
        .trimmed()
    }

    /// Substitute a symbol by ±1 in every coefficient.
    pub fn subst_sign(&self, name: &str, sign: i64) -> Self {
        XPoly {
            coeffs: self
                .coeffs
                .iter()
                .map(|c| c.subst_sign(name, sign))
                .collect(),
        }
        .trimmed()
    }
}

impl fmt::Display for XPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return write!(f, "0");
        }
        let mut first = true;
        for (i, c) in self.coeffs.iter().enumerate() {
            if c.is_zero() {
                continue;
            }
            if !first {
                write!(f, " + ")?;
            }
            first = false;
            if i == 0 {
                write!(f, "({})", c)?;
            } else {
                write!(f, "({})*x^{}", c, i)?;
            }
        }
        Ok(())
    }
}
