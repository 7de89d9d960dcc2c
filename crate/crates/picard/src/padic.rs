//! Capped-precision p-adic numbers and truncated Iwasawa-algebra elements.
//!
//! A [`Padic`] represents the coset p^val·(unit + p^prec·ℤ_p): `val` is the
//! valuation, `unit` a p-adic unit known modulo p^prec (or 0, meaning the
//! value is indistinguishable from zero at absolute precision val + prec).
//! Precision propagates honestly through arithmetic: absolute precision of a
//! sum is the minimum of the operands', relative precision of a product is
//! the minimum of the operands'.
//!
//! [`LambdaElement`] is a power series in T truncated at degree `M_T` over
//! such numbers, with evaluation at arithmetic points T ↦ (1+p)^k·ε(1+p) − 1.
//!
//! Arithmetic is exposed through the standard operator traits on references
//! (`&a + &b`), mirroring the big-integer crates.

use crate::{Error, Result};
use num_bigint::{BigInt, BigUint};
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Zero};
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

/// Default relative precision (power of p) for p-adic computations.
pub const DEFAULT_PADIC_PREC: i64 = 30;
/// Default T-truncation order for Iwasawa-algebra elements.
pub const DEFAULT_MT: usize = 12;

/// Valuation marker for an exact zero.
const EXACT_ZERO_VAL: i64 = i64::MAX / 4;

/// p^val·(unit + p^prec·ℤ_p); `p = 0` marks a context-free value (only 0 and
/// 1 produced by trait constructors) that adopts the other operand's prime on
/// first contact.
#[derive(Clone, Debug)]
pub struct Padic {
    pub p: u64,
    pub val: i64,
    pub unit: BigUint,
    pub prec: i64,
}

fn pow_bu(p: u64, e: i64) -> BigUint {
    assert!(e >= 0, "negative power of p in modulus");
    BigUint::from(p).pow(e as u32)
}

impl Padic {
    /// Exact zero in an unspecified (p = 0) or specified context.
    pub fn exact_zero(p: u64) -> Self {
        Padic {
            p,
            val: EXACT_ZERO_VAL,
            unit: BigUint::zero(),
            prec: 0,
        }
    }

    /// Zero known only to absolute precision p^abs ("O(p^abs)").
    pub fn zero_to(p: u64, abs: i64) -> Self {
        Padic {
            p,
            val: abs.min(EXACT_ZERO_VAL),
            unit: BigUint::zero(),
            prec: 0,
        }
    }

    pub fn from_bigint(p: u64, v: &BigInt, prec: i64) -> Self {
        assert!(p >= 2 && prec > 0);
        if v.is_zero() {
            return Padic::exact_zero(p);
        }
        let pb = BigInt::from(p);
        let mut val = 0i64;
        let mut rest = v.clone();
        while (&rest % &pb).is_zero() {
            rest /= &pb;
            val += 1;
        }
        let modulus = BigInt::from(pow_bu(p, prec));
        let unit = rest.mod_floor(&modulus);
        Padic {
            p,
            val,
            unit: unit.to_biguint().expect("mod_floor non-negative"),
            prec,
        }
    }

    pub fn from_i64(p: u64, v: i64, prec: i64) -> Self {
        Padic::from_bigint(p, &BigInt::from(v), prec)
    }

    /// Exact rational embedded p-adically (valuation absorbs p-powers of the
    /// denominator).
    pub fn from_rational(p: u64, r: &BigRational, prec: i64) -> Self {
        if r.is_zero() {
            return Padic::exact_zero(p);
        }
        let num = Padic::from_bigint(p, r.numer(), prec);
        let den = Padic::from_bigint(p, r.denom(), prec);
        &num * &den.inv().expect("nonzero denominator")
    }

    /// Is the value indistinguishable from zero at its stated precision?
    pub fn is_zero_to_prec(&self) -> bool {
        self.unit.is_zero()
    }

    pub fn is_exact_zero(&self) -> bool {
        self.unit.is_zero() && self.val >= EXACT_ZERO_VAL / 2
    }

    /// Absolute precision: the value is known modulo p^(this).
    pub fn abs_prec(&self) -> i64 {
        self.val.saturating_add(self.prec).min(EXACT_ZERO_VAL)
    }

    /// Valuation, available only when the value is distinguishable from zero.
    pub fn valuation(&self) -> Result<i64> {
        if self.unit.is_zero() {
            Err(Error::Precision(format!(
                "valuation undetermined: value is O(p^{})",
                self.abs_prec()
            )))
        } else {
            Ok(self.val)
        }
    }

    pub fn is_unit(&self) -> bool {
        !self.unit.is_zero() && self.val == 0
    }

    fn unify_p(&self, other: &Padic) -> u64 {
        if self.p == 0 {
            other.p
        } else if other.p == 0 {
            self.p
        } else {
            assert_eq!(self.p, other.p, "p-adic arithmetic across distinct primes");
            self.p
        }
    }

    /// Strip p-powers from the stored unit into the valuation.
    fn normalize(mut self) -> Self {
        if self.unit.is_zero() {
            return Padic::zero_to(self.p, self.abs_prec());
        }
        if self.p == 0 {
            return self;
        }
        let pb = BigUint::from(self.p);
        while (&self.unit % &pb).is_zero() {
            self.unit /= &pb;
            self.val += 1;
            self.prec -= 1;
            if self.prec <= 0 || self.unit.is_zero() {
                return Padic::zero_to(self.p, self.val + self.prec.max(0));
            }
        }
        self
    }

    pub fn inv(&self) -> Result<Padic> {
        if self.unit.is_zero() {
            return Err(Error::Precision(
                "cannot invert a p-adic indistinguishable from zero".into(),
            ));
        }
        if self.p == 0 {
            if self.unit.is_one() {
                return Ok(self.clone());
            }
            return Err(Error::Invalid(
                "inverting a context-free p-adic requires a prime".into(),
            ));
        }
        let modulus = pow_bu(self.p, self.prec);
        let inv = mod_inverse(&self.unit, &modulus).ok_or_else(|| {
            Error::Invalid("unit not invertible (internal invariant violated)".into())
        })?;
        Ok(Padic {
            p: self.p,
            val: -self.val,
            unit: inv,
            prec: self.prec,
        })
    }

    pub fn pow_int(&self, e: i64) -> Result<Padic> {
        let base = if e < 0 { self.inv()? } else { self.clone() };
        let mut acc = Padic::one();
        let mut sq = base;
        let mut k = e.unsigned_abs();
        while k > 0 {
            if k & 1 == 1 {
                acc = &acc * &sq;
            }
            sq = &sq * &sq;
            k >>= 1;
        }
        if acc.p == 0 && self.p != 0 {
            // e = 0 on a specified-context base: return 1 in that context.
            acc = Padic::from_i64(self.p, 1, self.prec.max(1));
        }
        Ok(acc)
    }

    /// Cap the absolute precision at p^abs (monotone weakening).
    pub fn cap_abs_prec(&self, abs: i64) -> Padic {
        if self.abs_prec() <= abs {
            return self.clone();
        }
        if self.unit.is_zero() || self.val >= abs {
            return Padic::zero_to(self.p, abs);
        }
        let prec = abs - self.val;
        let modulus = pow_bu(self.p, prec);
        Padic {
            p: self.p,
            val: self.val,
            unit: &self.unit % &modulus,
            prec,
        }
        .normalize()
    }

    /// Certified congruence: do the two values agree modulo p^s?
    /// Errors when the joint precision cannot decide.
    pub fn agree_mod(&self, other: &Padic, s: i64) -> Result<bool> {
        let d = self - other;
        if d.unit.is_zero() {
            if d.abs_prec() >= s {
                Ok(true)
            } else {
                Err(Error::Precision(format!(
                    "cannot certify congruence mod p^{s}: difference only known to O(p^{})",
                    d.abs_prec()
                )))
            }
        } else {
            Ok(d.val >= s)
        }
    }

    /// Canonical residue in [0, p^min(abs, cap)) — for display/serialization.
    pub fn residue(&self, cap: i64) -> BigUint {
        let a = self.abs_prec().min(cap);
        if self.unit.is_zero() || self.val >= a {
            return BigUint::zero();
        }
        assert!(self.val >= 0, "residue of a p-adic with negative valuation");
        (&self.unit * pow_bu(self.p, self.val)) % pow_bu(self.p, a)
    }

    /// p-adic logarithm; requires val = 0 and unit ≡ 1 mod p.
    pub fn log(&self) -> Result<Padic> {
        let p = self.p;
        if p < 3 {
            return Err(Error::Unsupported("p-adic log needs odd p".into()));
        }
        if self.unit.is_zero() || self.val != 0 {
            return Err(Error::Invalid("log requires a unit argument".into()));
        }
        if (&self.unit % BigUint::from(p)) != BigUint::one() {
            return Err(Error::Invalid("log requires unit ≡ 1 mod p".into()));
        }
        let one = Padic::from_i64(p, 1, self.prec);
        let u = self - &one; // valuation ≥ 1
        if u.unit.is_zero() {
            return Ok(Padic::zero_to(p, u.abs_prec()));
        }
        let vu = u.val;
        assert!(vu >= 1);
        let target = self.abs_prec();
        let mut sum = Padic::exact_zero(p);
        let mut power = one;
        let mut k: i64 = 1;
        loop {
            power = &power * &u;
            let kinv = Padic::from_i64(p, k, self.prec + 8).inv()?;
            let term = &power * &kinv;
            sum = if k % 2 == 1 { &sum + &term } else { &sum - &term };
            k += 1;
            // Terms have valuation ≥ k·vu − v_p(k) ≥ k·vu − log_p(k).
            let log_p_k = (k as f64).ln() / (p as f64).ln();
            if k * vu - (log_p_k.ceil() as i64) > target + 2 {
                break;
            }
            assert!(k < 100_000, "p-adic log runaway");
        }
        Ok(sum.cap_abs_prec(target))
    }

    /// p-adic exponential; requires valuation ≥ 1 (odd p).
    pub fn exp(&self) -> Result<Padic> {
        let p = self.p;
        if p < 3 {
            return Err(Error::Unsupported("p-adic exp needs odd p".into()));
        }
        if !self.unit.is_zero() && self.val < 1 {
            return Err(Error::Invalid("exp requires valuation ≥ 1".into()));
        }
        let target = self.abs_prec();
        let mut sum = Padic::from_i64(p, 1, self.prec + 8);
        if self.unit.is_zero() {
            // exp(O(p^a)) = 1 + O(p^a).
            return Ok(sum.cap_abs_prec(target.max(1)));
        }
        let mut term = sum.clone();
        let mut k: i64 = 1;
        loop {
            let kinv = Padic::from_i64(p, k, self.prec + 8).inv()?;
            term = &(&term * self) * &kinv;
            sum = &sum + &term;
            k += 1;
            // v(x^k/k!) ≥ k·v − (k−1)/(p−1) grows linearly in k.
            let lower = k * self.val - (k - 1) / (p as i64 - 1);
            if lower > target + 2 {
                break;
            }
            assert!(k < 100_000, "p-adic exp runaway");
        }
        Ok(sum.cap_abs_prec(target))
    }
}

fn mod_inverse(a: &BigUint, m: &BigUint) -> Option<BigUint> {
    let a = BigInt::from(a.clone());
    let m_int = BigInt::from(m.clone());
    let (g, x, _) = crate::arith::ext_gcd_big(&a, &m_int);
    if !g.is_one() {
        return None;
    }
    Some(x.mod_floor(&m_int).to_biguint().unwrap())
}

fn padic_add(lhs: &Padic, rhs: &Padic) -> Padic {
    let p = lhs.unify_p(rhs);
    if lhs.unit.is_zero() && rhs.unit.is_zero() {
        return Padic::zero_to(p, lhs.abs_prec().min(rhs.abs_prec()));
    }
    if lhs.unit.is_zero() || rhs.unit.is_zero() {
        let (z, nz) = if lhs.unit.is_zero() {
            (lhs, rhs)
        } else {
            (rhs, lhs)
        };
        // p^v(u + …) + O(p^a): cap the nonzero side at absolute precision a.
        let mut out = nz.clone();
        out.p = p;
        return out.cap_abs_prec(z.abs_prec());
    }
    if p == 0 {
        // Two context-free nonzero values: only ±1 arise from the trait
        // constructors; support exact same-valuation integer addition.
        assert_eq!(
            lhs.val, rhs.val,
            "context-free p-adic addition needs matching valuations"
        );
        let s = BigInt::from(lhs.unit.clone()) + BigInt::from(rhs.unit.clone());
        return if s.is_zero() {
            Padic::exact_zero(0)
        } else {
            Padic {
                p: 0,
                val: lhs.val,
                unit: s.to_biguint().expect("context-free values non-negative"),
                prec: lhs.prec.min(rhs.prec),
            }
        };
    }
    let a = lhs.abs_prec().min(rhs.abs_prec());
    let v = lhs.val.min(rhs.val);
    if v >= a {
        return Padic::zero_to(p, a);
    }
    let r = a - v;
    let modulus = pow_bu(p, r);
    let sum = (&lhs.unit * pow_bu(p, lhs.val - v) + &rhs.unit * pow_bu(p, rhs.val - v)) % &modulus;
    Padic {
        p,
        val: v,
        unit: sum,
        prec: r,
    }
    .normalize()
}

fn padic_neg(x: &Padic) -> Padic {
    if x.unit.is_zero() {
        return x.clone();
    }
    if x.p == 0 {
        panic!("negating a nonzero context-free p-adic requires a prime");
    }
    let modulus = pow_bu(x.p, x.prec);
    Padic {
        p: x.p,
        val: x.val,
        unit: &modulus - &x.unit,
        prec: x.prec,
    }
}

fn padic_mul(lhs: &Padic, rhs: &Padic) -> Padic {
    let p = lhs.unify_p(rhs);
    if lhs.unit.is_zero() || rhs.unit.is_zero() {
        let (z, nz) = if lhs.unit.is_zero() {
            (lhs, rhs)
        } else {
            (rhs, lhs)
        };
        if z.is_exact_zero() {
            return Padic::exact_zero(p);
        }
        // O(p^a)·p^v(u+…) = O(p^{a+v}); O(p^a)·O(p^b) = O(p^{a+b}).
        let other_val = if nz.unit.is_zero() {
            nz.abs_prec()
        } else {
            nz.val
        };
        return Padic::zero_to(p, z.abs_prec().saturating_add(other_val));
    }
    let prec = lhs.prec.min(rhs.prec);
    let val = lhs.val + rhs.val;
    if p == 0 {
        return Padic {
            p: 0,
            val,
            unit: &lhs.unit * &rhs.unit,
            prec,
        };
    }
    let modulus = pow_bu(p, prec);
    Padic {
        p,
        val,
        unit: (&lhs.unit * &rhs.unit) % &modulus,
        prec,
    }
    .normalize()
}

macro_rules! padic_binop {
    ($trait:ident, $method:ident, $func:expr) => {
        impl $trait<&Padic> for &Padic {
            type Output = Padic;
            fn $method(self, rhs: &Padic) -> Padic {
                $func(self, rhs)
            }
        }
        impl $trait<Padic> for Padic {
            type Output = Padic;
            fn $method(self, rhs: Padic) -> Padic {
                $func(&self, &rhs)
            }
        }
    };
}

padic_binop!(Add, add, padic_add);
padic_binop!(Mul, mul, padic_mul);
padic_binop!(Sub, sub, |a: &Padic, b: &Padic| padic_add(a, &padic_neg(b)));

impl Neg for &Padic {
    type Output = Padic;
    fn neg(self) -> Padic {
        padic_neg(self)
    }
}
impl Neg for Padic {
    type Output = Padic;
    fn neg(self) -> Padic {
        padic_neg(&self)
    }
}

impl PartialEq for Padic {
    /// Structural equality of the stored data (not congruence — use
    /// [`Padic::agree_mod`] for certified comparisons).
    fn eq(&self, other: &Self) -> bool {
        if self.unit.is_zero() && other.unit.is_zero() {
            return self.abs_prec() == other.abs_prec();
        }
        self.p == other.p
            && self.val == other.val
            && self.unit == other.unit
            && self.prec == other.prec
    }
}

impl Zero for Padic {
    fn zero() -> Self {
        Padic::exact_zero(0)
    }
    fn is_zero(&self) -> bool {
        self.is_zero_to_prec()
    }
}

impl One for Padic {
    fn one() -> Self {
        Padic {
            p: 0,
            val: 0,
            unit: BigUint::one(),
            prec: i64::MAX / 4,
        }
    }
}

impl fmt::Display for Padic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.unit.is_zero() {
            write!(f, "O({}^{})", self.p, self.abs_prec())
        } else {
            write!(
                f,
                "{}^{}*{} mod {}^{}",
                self.p,
                self.val,
                self.unit,
                self.p,
                self.abs_prec()
            )
        }
    }
}

/// Teichmüller representative ω(u) ∈ ℤ_p: the (p−1)-st root of unity
/// congruent to u mod p, computed as the fixed point of x ↦ x^p.
pub fn teichmuller(u: u64, p: u64, prec: i64) -> Padic {
    assert!(p >= 2 && !u.is_multiple_of(p), "teichmuller needs a unit");
    let modulus = pow_bu(p, prec);
    let mut x = BigUint::from(u % p);
    for _ in 0..(prec as usize + 2) {
        let next = x.modpow(&BigUint::from(p), &modulus);
        if next == x {
            break;
        }
        x = next;
    }
    Padic {
        p,
        val: 0,
        unit: x,
        prec,
    }
}

/// Image of τ (τ² = t·τ − n) under the embedding 𝒪_K ↪ ℤ_p determined by
/// the split prime 𝔭 = (p, b+τ): the Hensel lift of −b mod p.
pub fn iota_tau(p: u64, t: i64, n: i64, b: i64, prec: i64) -> Result<Padic> {
    let pb = BigInt::from(p);
    let mut modulus = pb.clone();
    let mut r = BigInt::from(-b).mod_floor(&pb);
    let f =
        |x: &BigInt, m: &BigInt| (x * x - BigInt::from(t) * x + BigInt::from(n)).mod_floor(m);
    if !f(&r, &pb).is_zero() {
        return Err(Error::Invalid(format!(
            "{} is not a root of x²−{t}x+{n} mod {p}",
            -b
        )));
    }
    let fp = (BigInt::from(2) * &r - BigInt::from(t)).mod_floor(&pb);
    if fp.is_zero() {
        return Err(Error::Invalid(
            "double root mod p; prime is not split".into(),
        ));
    }
    let mut reached = 1i64;
    while reached < prec {
        let new_mod = &modulus * &modulus;
        let fr = f(&r, &new_mod);
        let fpr = (BigInt::from(2) * &r - BigInt::from(t)).mod_floor(&new_mod);
        let (g, inv, _) = crate::arith::ext_gcd_big(&fpr, &new_mod);
        if !g.is_one() {
            return Err(Error::Invalid(
                "Hensel derivative lost invertibility".into(),
            ));
        }
        r = (&r - fr * inv.mod_floor(&new_mod)).mod_floor(&new_mod);
        modulus = new_mod;
        reached *= 2;
    }
    let final_mod = BigInt::from(pow_bu(p, prec));
    r = r.mod_floor(&final_mod);
    assert!(
        f(&r, &final_mod).is_zero(),
        "Hensel lift must satisfy the equation"
    );
    Ok(Padic::from_bigint(p, &r, prec).cap_abs_prec(prec))
}

/// An element of ℤ_p[[T]]/(T^mt): coefficients in increasing powers of T.
#[derive(Clone, Debug, PartialEq)]
pub struct LambdaElement {
    pub p: u64,
    pub mt: usize,
    pub coeffs: Vec<Padic>,
}

impl LambdaElement {
    pub fn constant(c: Padic, mt: usize) -> Self {
        let p = c.p;
        let mut coeffs = vec![Padic::exact_zero(p); mt];
        coeffs[0] = c;
        LambdaElement { p, mt, coeffs }
    }

    pub fn zero(p: u64, mt: usize) -> Self {
        LambdaElement {
            p,
            mt,
            coeffs: vec![Padic::exact_zero(p); mt],
        }
    }

    pub fn one(p: u64, mt: usize, prec: i64) -> Self {
        LambdaElement::constant(Padic::from_i64(p, 1, prec), mt)
    }

    /// The variable T.
    pub fn t_var(p: u64, mt: usize, prec: i64) -> Self {
        let mut out = LambdaElement::zero(p, mt);
        out.coeffs[1] = Padic::from_i64(p, 1, prec);
        out
    }

    pub fn add(&self, other: &LambdaElement) -> LambdaElement {
        assert_eq!(self.mt, other.mt);
        LambdaElement {
            p: if self.p == 0 { other.p } else { self.p },
            mt: self.mt,
            coeffs: self
                .coeffs
                .iter()
                .zip(&other.coeffs)
                .map(|(a, b)| a + b)
                .collect(),
        }
    }

    pub fn neg(&self) -> LambdaElement {
        LambdaElement {
            p: self.p,
            mt: self.mt,
            coeffs: self.coeffs.iter().map(|c| -c).collect(),
        }
    }

    pub fn sub(&self, other: &LambdaElement) -> LambdaElement {
        self.add(&other.neg())
    }

    pub fn mul(&self, other: &LambdaElement) -> LambdaElement {
        assert_eq!(self.mt, other.mt);
        let p = if self.p == 0 { other.p } else { self.p };
        let mut coeffs = vec![Padic::exact_zero(p); self.mt];
        for i in 0..self.mt {
            if self.coeffs[i].is_exact_zero() {
                continue;
            }
            for j in 0..(self.mt - i) {
                if other.coeffs[j].is_exact_zero() {
                    continue;
                }
                coeffs[i + j] = &coeffs[i + j] + &(&self.coeffs[i] * &other.coeffs[j]);
            }
        }
        LambdaElement {
            p,
            mt: self.mt,
            coeffs,
        }
    }

    pub fn scale(&self, c: &Padic) -> LambdaElement {
        LambdaElement {
            p: self.p,
            mt: self.mt,
            coeffs: self.coeffs.iter().map(|x| x * c).collect(),
        }
    }

    pub fn inv(&self) -> Result<LambdaElement> {
        // Invertible iff the constant term is a unit; series inversion.
        let c0 = self.coeffs[0].inv()?;
        let mut out = LambdaElement::zero(self.p, self.mt);
        out.coeffs[0] = c0.clone();
        for k in 1..self.mt {
            let mut s = Padic::exact_zero(self.p);
            for i in 1..=k {
                s = &s + &(&self.coeffs[i] * &out.coeffs[k - i]);
            }
            out.coeffs[k] = -&(&s * &c0);
        }
        Ok(out)
    }

    /// (1 + T)^s for a p-adic exponent s: Σ_i binom(s, i) T^i.
    pub fn one_plus_t_pow(s: &Padic, mt: usize) -> LambdaElement {
        let p = s.p;
        assert!(p >= 3, "binomial series needs a specified odd prime");
        let prec = s.abs_prec().max(1);
        let mut coeffs = Vec::with_capacity(mt);
        let mut cur = Padic::from_i64(p, 1, prec + mt as i64);
        coeffs.push(cur.clone());
        for i in 1..mt {
            // binom(s, i) = binom(s, i−1)·(s − (i−1))/i.
            let factor = s - &Padic::from_i64(p, (i - 1) as i64, prec + mt as i64);
            let idiv = Padic::from_i64(p, i as i64, prec + mt as i64)
                .inv()
                .expect("positive integer is invertible after valuation split");
            cur = &(&cur * &factor) * &idiv;
            coeffs.push(cur.clone());
        }
        LambdaElement { p, mt, coeffs }
    }

    /// Evaluate at T = x (valuation ≥ 1), capping the result's absolute
    /// precision by the truncation-error bound p^{mt·v(x)}.
    pub fn eval_at(&self, x: &Padic) -> Result<Padic> {
        let vx = if x.unit.is_zero() {
            x.abs_prec()
        } else {
            x.val
        };
        if vx < 1 {
            return Err(Error::Invalid(
                "Iwasawa evaluation point must have positive valuation".into(),
            ));
        }
        let mut acc = Padic::exact_zero(if self.p == 0 { x.p } else { self.p });
        for c in self.coeffs.iter().rev() {
            acc = &(&acc * x) + c;
        }
        // Dropped tail Σ_{i≥mt} c_i x^i = O(p^{mt·vx}) for integral c_i.
        let cap = (self.mt as i64) * vx;
        Ok(acc.cap_abs_prec(cap))
    }
}

impl fmt::Display for LambdaElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut first = true;
        for (i, c) in self.coeffs.iter().enumerate() {
            if c.is_exact_zero() {
                continue;
            }
            if !first {
                write!(f, " + ")?;
            }
            write!(f, "({c})·T^{i}")?;
            first = false;
        }
        if first {
            write!(f, "0")?;
        }
        Ok(())
    }
}

/// Wild part of an arithmetic point's nebentypus: a finite-order character
/// of 1 + pℤ_p given by its order (trivial or p-power).
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum WildChar {
    Trivial,
    /// Nontrivial of the given p-power order; evaluation requires ramified
    /// cyclotomic extensions of ℚ_p, which this crate does not model.
    PPower { order: u64 },
}

/// Arithmetic point P_{k,ε}: T ↦ (1+p)^k·ε(1+p) − 1.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ArithmeticPoint {
    pub k: i64,
    pub eps: WildChar,
}

impl ArithmeticPoint {
    pub fn weight(k: i64) -> Self {
        ArithmeticPoint {
            k,
            eps: WildChar::Trivial,
        }
    }
}

/// T-value of the arithmetic point: (1+p)^k·ε(1+p) − 1.
pub fn arithmetic_t_value(p: u64, point: &ArithmeticPoint, prec: i64) -> Result<Padic> {
    match point.eps {
        WildChar::Trivial => {
            let gamma = Padic::from_i64(p, 1 + p as i64, prec);
            let one = Padic::from_i64(p, 1, prec);
            Ok(&gamma.pow_int(point.k)? - &one)
        }
        WildChar::PPower { order } => Err(Error::Unsupported(format!(
            "arithmetic points with nontrivial wild character (order {order}) require \
             ramified cyclotomic p-adic coefficients, which are not modeled"
        ))),
    }
}

/// Evaluate a Λ-element at an arithmetic point.
pub fn arithmetic_point_eval(
    lambda: &LambdaElement,
    p: u64,
    point: &ArithmeticPoint,
    prec: i64,
) -> Result<Padic> {
    let t = arithmetic_t_value(p, point, prec)?;
    lambda.eval_at(&t)
}
