//! Rigorous real and complex interval arithmetic over dyadic rationals.
//!
//! A [`Dyadic`] is an exact number m·2^e. A [`RealBall`] is a midpoint-radius
//! interval with dyadic midpoint and radius: every operation rounds the
//! midpoint to the ball's working precision and absorbs the rounding error
//! into the radius, so the true value is always contained. Elementary
//! functions (exp, cos, sin, π) carry explicit truncation-error bounds.
//!
//! Radii are maintained at a fixed small precision, always rounded outward.

use crate::{Error, Result};
use num_bigint::{BigInt, BigUint, Sign};
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use std::cmp::Ordering;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

/// Default working precision in bits.
pub const DEFAULT_PREC: i64 = 256;
/// Precision for radius bookkeeping (always rounded up).
const RAD_PREC: i64 = 32;

/// Rounding direction for dyadic operations.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Dir {
    /// Toward −∞.
    Down,
    /// Toward +∞.
    Up,
}

/// Exact dyadic rational m·2^e, normalized so m is odd or zero (e = 0 if m = 0).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Dyadic {
    pub m: BigInt,
    pub e: i64,
}

impl Dyadic {
    pub fn new(m: BigInt, e: i64) -> Self {
        Dyadic { m, e }.normalized()
    }

    fn normalized(mut self) -> Self {
        if self.m.is_zero() {
            self.e = 0;
            return self;
        }
        let tz = self.m.trailing_zeros().unwrap_or(0);
        if tz > 0 {
            self.m >>= tz;
            self.e += tz as i64;
        }
        self
    }

    pub fn zero() -> Self {
        Dyadic {
            m: BigInt::zero(),
            e: 0,
        }
    }

    pub fn one() -> Self {
        Dyadic {
            m: BigInt::one(),
            e: 0,
        }
    }

    pub fn pow2(e: i64) -> Self {
        Dyadic {
            m: BigInt::one(),
            e,
        }
    }

    pub fn from_i64(v: i64) -> Self {
        Dyadic::new(BigInt::from(v), 0)
    }

    pub fn from_bigint(v: BigInt) -> Self {
        Dyadic::new(v, 0)
    }

    pub fn is_zero(&self) -> bool {
        self.m.is_zero()
    }

    pub fn is_negative(&self) -> bool {
        self.m.is_negative()
    }

    pub fn abs(&self) -> Self {
        Dyadic {
            m: self.m.abs(),
            e: self.e,
        }
    }

    /// Number of bits in |m|.
    pub fn mant_bits(&self) -> u64 {
        self.m.magnitude().bits()
    }

    /// Strict upper bound on log₂|self| (self ≠ 0): |self| < 2^(bits+e).
    pub fn log2_upper(&self) -> i64 {
        assert!(!self.is_zero());
        self.mant_bits() as i64 + self.e
    }

    /// Exact sum.
    fn add_exact(&self, rhs: &Dyadic) -> Dyadic {
        if self.is_zero() {
            return rhs.clone();
        }
        if rhs.is_zero() {
            return self.clone();
        }
        let e = self.e.min(rhs.e);
        let shift_a = (self.e - e) as u64;
        let shift_b = (rhs.e - e) as u64;
        assert!(
            shift_a < 1 << 24 && shift_b < 1 << 24,
            "dyadic exponent gap too large for exact addition"
        );
        Dyadic::new((&self.m << shift_a) + (&rhs.m << shift_b), e)
    }

    fn mul_exact(&self, rhs: &Dyadic) -> Dyadic {
        Dyadic::new(&self.m * &rhs.m, self.e + rhs.e)
    }

    /// Round to `prec` mantissa bits in direction `dir`.
    pub fn round(&self, prec: i64, dir: Dir) -> Dyadic {
        let bits = self.mant_bits() as i64;
        if bits <= prec {
            return self.clone();
        }
        let k = (bits - prec) as u64;
        let modulus = BigInt::one() << k;
        let (q, r) = self.m.div_mod_floor(&modulus);
        let q = match dir {
            Dir::Down => q,
            Dir::Up => {
                if r.is_zero() {
                    q
                } else {
                    q + 1
                }
            }
        };
        Dyadic::new(q, self.e + k as i64)
    }

    /// Round to `prec` bits (toward −∞) returning the result together with an
    /// upper bound on the absolute rounding error.
    pub fn round_with_err(&self, prec: i64) -> (Dyadic, Dyadic) {
        let bits = self.mant_bits() as i64;
        if bits <= prec {
            return (self.clone(), Dyadic::zero());
        }
        let k = (bits - prec) as u64;
        let rounded = self.round(prec, Dir::Down);
        (rounded, Dyadic::pow2(self.e + k as i64))
    }

    /// Directed quotient self / rhs at `prec` bits; rhs ≠ 0.
    pub fn div(&self, rhs: &Dyadic, prec: i64, dir: Dir) -> Dyadic {
        assert!(!rhs.is_zero(), "dyadic division by zero");
        if self.is_zero() {
            return Dyadic::zero();
        }
        let extra = prec + 2 + (rhs.mant_bits() as i64 - self.mant_bits() as i64).max(0);
        let extra = extra.max(2) as u64;
        let num = &self.m << extra;
        let (q, r) = num.div_mod_floor(&rhs.m);
        // div_mod_floor gives q ≤ true value; adjust for Up.
        let q = match dir {
            Dir::Down => q,
            Dir::Up => {
                if r.is_zero() {
                    q
                } else {
                    q + 1
                }
            }
        };
        // Floor division by a negative rhs still satisfies q·rhs ≤ num, i.e.
        // q ≥ num/rhs... make the direction refer to the real quotient:
        // div_mod_floor(r sign follows rhs) gives q = floor(num/den) always.
        Dyadic::new(q, self.e - rhs.e - extra as i64)
    }

    /// Directed square root at `prec` bits; self ≥ 0.
    pub fn sqrt(&self, prec: i64, dir: Dir) -> Dyadic {
        assert!(!self.is_negative(), "dyadic sqrt of negative value");
        if self.is_zero() {
            return Dyadic::zero();
        }
        // Write self = m·2^e; force even exponent e − 2k with enough bits.
        let want_bits = 2 * (prec + 2);
        let cur_bits = self.mant_bits() as i64;
        let mut shift = (want_bits - cur_bits).max(0);
        // Make e − shift even.
        if (self.e - shift) % 2 != 0 {
            shift += 1;
        }
        let n: BigUint = (self.m.magnitude() << (shift as u64)).clone();
        let r = n.sqrt();
        let exact = &r * &r == n;
        let r = match dir {
            Dir::Down => r,
            Dir::Up => {
                if exact {
                    r
                } else {
                    r + 1u32
                }
            }
        };
        Dyadic::new(BigInt::from_biguint(Sign::Plus, r), (self.e - shift) / 2)
    }

    pub fn to_rational(&self) -> BigRational {
        if self.e >= 0 {
            BigRational::from_integer(&self.m << (self.e as u64))
        } else {
            BigRational::new(self.m.clone(), BigInt::one() << ((-self.e) as u64))
        }
    }

    /// Floor of the value as a BigInt.
    pub fn to_bigint_floor(&self) -> BigInt {
        if self.e >= 0 {
            &self.m << (self.e as u64)
        } else {
            self.m.div_floor(&(BigInt::one() << ((-self.e) as u64)))
        }
    }

    pub fn to_f64(&self) -> f64 {
        self.m.to_f64().unwrap_or(f64::NAN) * (self.e as f64).exp2()
    }

    pub fn cmp_val(&self, rhs: &Dyadic) -> Ordering {
        let diff = self.add_exact(&rhs.clone().neg());
        if diff.m.is_zero() {
            Ordering::Equal
        } else if diff.m.is_negative() {
            Ordering::Less
        } else {
            Ordering::Greater
        }
    }
}

impl Add for Dyadic {
    type Output = Dyadic;
    fn add(self, rhs: Dyadic) -> Dyadic {
        self.add_exact(&rhs)
    }
}
impl Sub for Dyadic {
    type Output = Dyadic;
    fn sub(self, rhs: Dyadic) -> Dyadic {
        self.add_exact(&rhs.neg())
    }
}
impl Mul for Dyadic {
    type Output = Dyadic;
    fn mul(self, rhs: Dyadic) -> Dyadic {
        self.mul_exact(&rhs)
    }
}
impl Neg for Dyadic {
    type Output = Dyadic;
    fn neg(self) -> Dyadic {
        Dyadic {
            m: -self.m,
            e: self.e,
        }
    }
}

impl fmt::Display for Dyadic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}*2^{}", self.m, self.e)
    }
}

/// Midpoint-radius real interval: the set [mid − rad, mid + rad].
#[derive(Clone, Debug)]
pub struct RealBall {
    pub mid: Dyadic,
    pub rad: Dyadic,
    pub prec: i64,
}

fn rad_up(d: &Dyadic) -> Dyadic {
    d.round(RAD_PREC, Dir::Up)
}

impl RealBall {
    pub fn exact_dyadic(mid: Dyadic, prec: i64) -> Self {
        RealBall {
            mid,
            rad: Dyadic::zero(),
            prec,
        }
    }

    pub fn zero(prec: i64) -> Self {
        RealBall::exact_dyadic(Dyadic::zero(), prec)
    }

    pub fn one(prec: i64) -> Self {
        RealBall::exact_dyadic(Dyadic::one(), prec)
    }

    pub fn from_i64(v: i64, prec: i64) -> Self {
        RealBall::exact_dyadic(Dyadic::from_i64(v), prec)
    }

    pub fn from_bigint(v: &BigInt, prec: i64) -> Self {
        RealBall::exact_dyadic(Dyadic::from_bigint(v.clone()), prec)
    }

    pub fn from_rational(r: &BigRational, prec: i64) -> Self {
        let num = Dyadic::from_bigint(r.numer().clone());
        let den = Dyadic::from_bigint(r.denom().clone());
        let mid = num.div(&den, prec, Dir::Down);
        // Directed floor quotient: true value ∈ [mid, mid + ulp).
        let ulp = ulp_of(&mid, prec);
        RealBall {
            mid,
            rad: rad_up(&ulp),
            prec,
        }
    }

    pub fn with_prec(mut self, prec: i64) -> Self {
        self.prec = prec;
        self
    }

    fn join_prec(&self, rhs: &RealBall) -> i64 {
        self.prec.max(rhs.prec)
    }

    /// Upper bound on |x| for all x in the ball.
    pub fn upper_abs(&self) -> Dyadic {
        rad_up(&(self.mid.abs() + self.rad.clone()))
    }

    /// Lower bound on |x| for all x in the ball (0 if the ball meets 0).
    pub fn lower_abs(&self) -> Dyadic {
        let l = self.mid.abs() - self.rad.clone();
        if l.is_negative() {
            Dyadic::zero()
        } else {
            l.round(RAD_PREC, Dir::Down)
        }
    }

    pub fn contains_zero(&self) -> bool {
        self.mid.abs().cmp_val(&self.rad) != Ordering::Greater
    }

    pub fn contains_rational(&self, r: &BigRational) -> bool {
        let diff = (self.mid.to_rational() - r).abs();
        diff <= self.rad.to_rational()
    }

    /// Add an extra error margin (absolute value of `extra` is used).
    pub fn widen(&self, extra: &Dyadic) -> RealBall {
        RealBall {
            mid: self.mid.clone(),
            rad: rad_up(&(self.rad.clone() + extra.abs())),
            prec: self.prec,
        }
    }

    pub fn scale_pow2(&self, e: i64) -> RealBall {
        RealBall {
            mid: Dyadic {
                m: self.mid.m.clone(),
                e: self.mid.e + e,
            },
            rad: if self.rad.is_zero() {
                Dyadic::zero()
            } else {
                Dyadic {
                    m: self.rad.m.clone(),
                    e: self.rad.e + e,
                }
            },
            prec: self.prec,
        }
    }

    pub fn mul_bigint(&self, k: &BigInt) -> RealBall {
        let prec = self.prec;
        let exact = self.mid.clone() * Dyadic::from_bigint(k.clone());
        let (mid, err) = exact.round_with_err(prec);
        let rad = self.rad.clone() * Dyadic::from_bigint(k.abs()) + err;
        RealBall {
            mid,
            rad: rad_up(&rad),
            prec,
        }
    }

    pub fn mul_rational(&self, r: &BigRational) -> RealBall {
        let num = self.mul_bigint(r.numer());
        let den = RealBall::from_bigint(r.denom(), self.prec);
        num.div(&den).expect("nonzero integer denominator")
    }

    pub fn inv(&self) -> Result<RealBall> {
        let prec = self.prec;
        let low = self.lower_abs();
        if low.is_zero() {
            return Err(Error::Precision(
                "interval contains zero; cannot invert".into(),
            ));
        }
        let one = Dyadic::one();
        let mid = one.div(&self.mid, prec, Dir::Down);
        let ulp = ulp_of(&mid, prec);
        // |1/x − 1/m| ≤ rad / (low·|m|).
        let denom = low.clone() * self.mid.abs();
        let prop = self.rad.div(&denom, RAD_PREC, Dir::Up);
        Ok(RealBall {
            mid,
            rad: rad_up(&(prop + ulp)),
            prec,
        })
    }

    pub fn div(&self, rhs: &RealBall) -> Result<RealBall> {
        Ok(self.clone() * rhs.inv()?)
    }

    pub fn sqrt(&self) -> Result<RealBall> {
        let prec = self.prec;
        let lower = self.mid.clone() - self.rad.clone();
        if lower.is_negative() {
            return Err(Error::Precision(
                "interval extends below zero; cannot take sqrt".into(),
            ));
        }
        let mid = self.mid.sqrt(prec, Dir::Down);
        let ulp = ulp_of(&mid, prec);
        // |√x − √m| ≤ rad / (2√lower) unless lower ≈ 0, then √rad bound.
        let prop = if lower.is_zero() {
            self.rad.sqrt(RAD_PREC, Dir::Up)
        } else {
            let sl = lower.sqrt(RAD_PREC, Dir::Down);
            if sl.is_zero() {
                self.rad.sqrt(RAD_PREC, Dir::Up)
            } else {
                let denom = Dyadic::from_i64(2) * sl;
                self.rad.div(&denom, RAD_PREC, Dir::Up)
            }
        };
        Ok(RealBall {
            mid,
            rad: rad_up(&(prop + ulp)),
            prec,
        })
    }

    /// Rigorous exponential via argument halving and Taylor series.
    pub fn exp(&self) -> RealBall {
        let prec = self.prec;
        let work = prec + 16;
        let upper = self.upper_abs();
        // Halve until |y| ≤ 1/4.
        let j = if upper.is_zero() {
            0
        } else {
            (upper.log2_upper() + 2).max(0)
        };
        let y = self.scale_pow2(-j).with_prec(work);
        // Taylor: Σ y^k / k!. |y| ≤ 1/4 so tail after term K is
        // ≤ |term_K|·Σ_{i≥1} 4^{-i} = |term_K|/3.
        let mut sum = RealBall::one(work);
        let mut term = RealBall::one(work);
        let mut k: i64 = 1;
        loop {
            term = term * y.clone();
            term = term.div_int(k);
            sum = sum + term.clone();
            let tb = term.upper_abs();
            if tb.is_zero() || tb.log2_upper() < -(work + 8) {
                sum = sum.widen(&tb);
                break;
            }
            k += 1;
            assert!(k < 10_000, "exp Taylor loop runaway");
        }
        // Square back up.
        let mut out = sum;
        for _ in 0..j {
            out = out.clone() * out;
        }
        out.with_prec(prec).round_mid()
    }

    /// Rigorous (cos x, sin x).
    pub fn cos_sin(&self) -> (RealBall, RealBall) {
        let prec = self.prec;
        let work = prec + 16;
        // Reduce mod 2π (any integer multiple is sound).
        let twopi = pi_ball(work).scale_pow2(1);
        let mut x = self.clone().with_prec(work);
        if !x.mid.is_zero() && x.mid.log2_upper() > 3 {
            let q = x.mid.div(&twopi.mid, 32, Dir::Down);
            let k = q.to_bigint_floor();
            x = x - twopi.mul_bigint(&k);
        }
        // Halve until |y| ≤ 1/4 (|x| ≤ ~2π + slack so j ≤ 6).
        let upper = x.upper_abs();
        let j = if upper.is_zero() {
            0
        } else {
            (upper.log2_upper() + 2).max(0)
        };
        let y = x.scale_pow2(-j);
        let y2 = y.clone() * y.clone();
        // cos: Σ (−1)^k y^{2k}/(2k)!, sin: y·Σ (−1)^k y^{2k}/(2k+1)!.
        let mut cos = RealBall::one(work);
        let mut sin_inner = RealBall::one(work);
        let mut term_c = RealBall::one(work);
        let mut term_s = RealBall::one(work);
        let mut k: i64 = 1;
        loop {
            term_c = term_c * y2.clone();
            term_c = term_c.div_int(2 * k - 1).div_int(2 * k);
            term_s = term_s * y2.clone();
            term_s = term_s.div_int(2 * k).div_int(2 * k + 1);
            if k % 2 == 1 {
                cos = cos - term_c.clone();
                sin_inner = sin_inner - term_s.clone();
            } else {
                cos = cos + term_c.clone();
                sin_inner = sin_inner + term_s.clone();
            }
            let tb = term_c.upper_abs();
            let ts = term_s.upper_abs();
            let done_c = tb.is_zero() || tb.log2_upper() < -(work + 8);
            let done_s = ts.is_zero() || ts.log2_upper() < -(work + 8);
            if done_c && done_s {
                // Alternating with decreasing terms (|y| ≤ 1/4): remainder
                // bounded by the first omitted term ≤ current term bound.
                cos = cos.widen(&tb);
                sin_inner = sin_inner.widen(&ts);
                break;
            }
            k += 1;
            assert!(k < 10_000, "cos/sin Taylor loop runaway");
        }
        let mut c = cos;
        let mut s = y * sin_inner;
        // Double j times: cos 2u = 2cos²u − 1, sin 2u = 2 sin u cos u.
        for _ in 0..j {
            let c2 = (c.clone() * c.clone()).scale_pow2(1) - RealBall::one(work);
            let s2 = (s.clone() * c.clone()).scale_pow2(1);
            c = c2;
            s = s2;
        }
        (
            c.with_prec(prec).round_mid(),
            s.with_prec(prec).round_mid(),
        )
    }

    fn div_int(&self, k: i64) -> RealBall {
        let prec = self.prec;
        let kd = Dyadic::from_i64(k);
        let mid = self.mid.div(&kd, prec, Dir::Down);
        let ulp = ulp_of(&mid, prec);
        let rad = self.rad.div(&kd.abs(), RAD_PREC, Dir::Up) + ulp;
        RealBall {
            mid,
            rad: rad_up(&rad),
            prec,
        }
    }

    /// Re-round the midpoint to the working precision (keeps soundness).
    fn round_mid(&self) -> RealBall {
        let (mid, err) = self.mid.round_with_err(self.prec);
        RealBall {
            mid,
            rad: rad_up(&(self.rad.clone() + err)),
            prec: self.prec,
        }
    }

    pub fn to_f64(&self) -> f64 {
        self.mid.to_f64()
    }
}

fn ulp_of(d: &Dyadic, prec: i64) -> Dyadic {
    if d.is_zero() {
        Dyadic::pow2(-(2 * prec))
    } else {
        Dyadic::pow2(d.log2_upper() - prec)
    }
}

impl Add for RealBall {
    type Output = RealBall;
    fn add(self, rhs: RealBall) -> RealBall {
        let prec = self.join_prec(&rhs);
        let exact = self.mid + rhs.mid;
        let (mid, err) = exact.round_with_err(prec);
        RealBall {
            mid,
            rad: rad_up(&(self.rad + rhs.rad + err)),
            prec,
        }
    }
}

impl Sub for RealBall {
    type Output = RealBall;
    fn sub(self, rhs: RealBall) -> RealBall {
        self + (-rhs)
    }
}

impl Neg for RealBall {
    type Output = RealBall;
    fn neg(self) -> RealBall {
        RealBall {
            mid: -self.mid,
            rad: self.rad,
            prec: self.prec,
        }
    }
}

impl Mul for RealBall {
    type Output = RealBall;
    fn mul(self, rhs: RealBall) -> RealBall {
        let prec = self.join_prec(&rhs);
        let exact = self.mid.clone() * rhs.mid.clone();
        let (mid, err) = exact.round_with_err(prec);
        let rad = self.mid.abs() * rhs.rad.clone()
            + rhs.mid.abs() * self.rad.clone()
            + self.rad * rhs.rad
            + err;
        RealBall {
            mid,
            rad: rad_up(&rad),
            prec,
        }
    }
}

impl fmt::Display for RealBall {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} ± {}", self.mid, self.rad)
    }
}

/// π as a ball at the requested precision (Machin's formula with rigorous
/// alternating-series tails).
pub fn pi_ball(prec: i64) -> RealBall {
    let work = prec + 24;
    // π = 16·atan(1/5) − 4·atan(1/239).
    let a = atan_inv_int(5, work);
    let b = atan_inv_int(239, work);
    (a.scale_pow2(4) - b.scale_pow2(2)).with_prec(prec).round_mid()
}

/// atan(1/x) for integer x ≥ 2 via the alternating Taylor series.
fn atan_inv_int(x: i64, prec: i64) -> RealBall {
    let xb = BigInt::from(x);
    let x2 = &xb * &xb;
    let mut sum = RealBall::zero(prec);
    let mut denom_pow = xb.clone(); // x^{2k+1}
    let mut k: i64 = 0;
    loop {
        let term_mag = Dyadic::one().div(
            &Dyadic::from_bigint(&denom_pow * BigInt::from(2 * k + 1)),
            prec,
            Dir::Up,
        );
        let term = RealBall {
            mid: term_mag.clone(),
            rad: rad_up(&ulp_of(&term_mag, prec)),
            prec,
        };
        if k % 2 == 0 {
            sum = sum + term;
        } else {
            sum = sum - term;
        }
        if term_mag.log2_upper() < -(prec + 8) {
            // Alternating, strictly decreasing: remainder ≤ next term < this.
            sum = sum.widen(&term_mag);
            break;
        }
        denom_pow *= &x2;
        k += 1;
        assert!(k < 100_000, "atan series runaway");
    }
    sum
}

/// Rectangular complex interval: re + i·im with independent real balls.
#[derive(Clone, Debug)]
pub struct ComplexBall {
    pub re: RealBall,
    pub im: RealBall,
}

impl ComplexBall {
    pub fn new(re: RealBall, im: RealBall) -> Self {
        ComplexBall { re, im }
    }

    pub fn zero(prec: i64) -> Self {
        ComplexBall::new(RealBall::zero(prec), RealBall::zero(prec))
    }

    pub fn one(prec: i64) -> Self {
        ComplexBall::new(RealBall::one(prec), RealBall::zero(prec))
    }

    pub fn from_real(r: RealBall) -> Self {
        let prec = r.prec;
        ComplexBall::new(r, RealBall::zero(prec))
    }

    pub fn from_rationals(re: &BigRational, im: &BigRational, prec: i64) -> Self {
        ComplexBall::new(
            RealBall::from_rational(re, prec),
            RealBall::from_rational(im, prec),
        )
    }

    pub fn prec(&self) -> i64 {
        self.re.prec.max(self.im.prec)
    }

    pub fn conj(&self) -> Self {
        ComplexBall::new(self.re.clone(), -self.im.clone())
    }

    pub fn mul_i(&self) -> Self {
        ComplexBall::new(-self.im.clone(), self.re.clone())
    }

    pub fn scale_pow2(&self, e: i64) -> Self {
        ComplexBall::new(self.re.scale_pow2(e), self.im.scale_pow2(e))
    }

    pub fn mul_rational(&self, r: &BigRational) -> Self {
        ComplexBall::new(self.re.mul_rational(r), self.im.mul_rational(r))
    }

    pub fn mul_real(&self, r: &RealBall) -> Self {
        ComplexBall::new(self.re.clone() * r.clone(), self.im.clone() * r.clone())
    }

    /// |z|² as a real ball.
    pub fn norm_sq(&self) -> RealBall {
        self.re.clone() * self.re.clone() + self.im.clone() * self.im.clone()
    }

    /// Upper bound on |z|.
    pub fn upper_abs(&self) -> Dyadic {
        // |z| ≤ |re| + |im| suffices for our tail estimates... use the
        // 2-norm bound √(re²+im²) upper.
        let s = self.re.upper_abs() * self.re.upper_abs()
            + self.im.upper_abs() * self.im.upper_abs();
        s.sqrt(RAD_PREC, Dir::Up)
    }

    pub fn inv(&self) -> Result<ComplexBall> {
        let n = self.norm_sq();
        let ninv = n.inv()?;
        Ok(ComplexBall::new(
            self.re.clone() * ninv.clone(),
            -self.im.clone() * ninv,
        ))
    }

    pub fn div(&self, rhs: &ComplexBall) -> Result<ComplexBall> {
        Ok(self.clone() * rhs.inv()?)
    }

    /// exp(z) = e^re·(cos im + i sin im).
    pub fn exp(&self) -> ComplexBall {
        let mag = self.re.exp();
        let (c, s) = self.im.cos_sin();
        ComplexBall::new(mag.clone() * c, mag * s)
    }

    pub fn powi(&self, k: u32) -> ComplexBall {
        let mut acc = ComplexBall::one(self.prec());
        for _ in 0..k {
            acc = acc * self.clone();
        }
        acc
    }

    /// Does the ball contain the exact complex rational re + i·im?
    pub fn contains_rationals(&self, re: &BigRational, im: &BigRational) -> bool {
        self.re.contains_rational(re) && self.im.contains_rational(im)
    }
}

impl Add for ComplexBall {
    type Output = ComplexBall;
    fn add(self, rhs: ComplexBall) -> ComplexBall {
        ComplexBall::new(self.re + rhs.re, self.im + rhs.im)
    }
}
impl Sub for ComplexBall {
    type Output = ComplexBall;
    fn sub(self, rhs: ComplexBall) -> ComplexBall {
        ComplexBall::new(self.re - rhs.re, self.im - rhs.im)
    }
}
impl Neg for ComplexBall {
    type Output = ComplexBall;
    fn neg(self) -> ComplexBall {
        ComplexBall::new(-self.re, -self.im)
    }
}
impl Mul for ComplexBall {
    type Output = ComplexBall;
    fn mul(self, rhs: ComplexBall) -> ComplexBall {
        let re = self.re.clone() * rhs.re.clone() - self.im.clone() * rhs.im.clone();
        let im = self.re * rhs.im + self.im * rhs.re;
        ComplexBall::new(re, im)
    }
}

// Structural equality: same midpoint and same radius describe the same set
// with the same certainty (working precision does not affect the value).
impl PartialEq for RealBall {
    fn eq(&self, other: &Self) -> bool {
        self.mid == other.mid && self.rad == other.rad
    }
}

impl PartialEq for ComplexBall {
    fn eq(&self, other: &Self) -> bool {
        self.re == other.re && self.im == other.im
    }
}

impl Zero for ComplexBall {
    fn zero() -> Self {
        ComplexBall::zero(DEFAULT_PREC)
    }
    fn is_zero(&self) -> bool {
        self.re.mid.is_zero()
            && self.re.rad.is_zero()
            && self.im.mid.is_zero()
            && self.im.rad.is_zero()
    }
}

impl One for ComplexBall {
    fn one() -> Self {
        ComplexBall::one(DEFAULT_PREC)
    }
}

/// e^{2πi r} for an exact rational r, fully reduced mod 1 before evaluation.
pub fn unit_circle_point(r: &BigRational, prec: i64) -> ComplexBall {
    let frac = r - r.floor();
    let work = prec + 16;
    let angle = pi_ball(work).scale_pow2(1).mul_rational(&frac);
    let (c, s) = angle.cos_sin();
    ComplexBall::new(c.with_prec(prec), s.with_prec(prec))
}

/// e^{2πi j/M}: the j-th power of the standard primitive M-th root of unity.
pub fn root_of_unity(m_order: u64, j: u64, prec: i64) -> ComplexBall {
    let r = BigRational::new(BigInt::from(j % m_order), BigInt::from(m_order));
    unit_circle_point(&r, prec)
}

/// e^{2π·x} for an exact rational x (real exponential of a rational multiple
/// of 2π; used for e^{−2πny} factors).
pub fn exp_two_pi_rational(x: &BigRational, prec: i64) -> RealBall {
    let work = prec + 16;
    let arg = pi_ball(work).scale_pow2(1).mul_rational(x);
    arg.exp().with_prec(prec)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q(n: i64, d: i64) -> BigRational {
        BigRational::new(BigInt::from(n), BigInt::from(d))
    }

    fn digits_rational(digits: &str, power: u32) -> BigRational {
        let num: BigInt = digits.parse().unwrap();
        BigRational::new(num, BigInt::from(10u32).pow(power))
    }

    #[test]
    fn dyadic_directed_rounding_brackets_value() {
        let mut rng = crate::DetRng::new(0xba11);
        for _ in 0..200 {
            let m = BigInt::from(rng.range_i64(-(1 << 40), 1 << 40));
            let e = rng.range_i64(-30, 30);
            let d = Dyadic::new(m, e);
            let down = d.round(12, Dir::Down);
            let up = d.round(12, Dir::Up);
            assert!(down.to_rational() <= d.to_rational());
            assert!(up.to_rational() >= d.to_rational());
            // Round-trip at high precision is exact.
            assert_eq!(d.round(80, Dir::Down), d);
        }
    }

    #[test]
    fn dyadic_div_directed() {
        let a = Dyadic::from_i64(1);
        let b = Dyadic::from_i64(3);
        let lo = a.div(&b, 64, Dir::Down);
        let hi = a.div(&b, 64, Dir::Up);
        assert!(lo.to_rational() <= q(1, 3));
        assert!(hi.to_rational() >= q(1, 3));
        assert!((hi.to_rational() - lo.to_rational()) < q(1, 1 << 60));
        // Negative numerator.
        let c = Dyadic::from_i64(-1);
        let lo = c.div(&b, 64, Dir::Down);
        let hi = c.div(&b, 64, Dir::Up);
        assert!(lo.to_rational() <= q(-1, 3) && q(-1, 3) <= hi.to_rational());
    }

    #[test]
    fn dyadic_sqrt_directed() {
        for v in [2i64, 3, 5, 7, 10, 12345] {
            let d = Dyadic::from_i64(v);
            let lo = d.sqrt(96, Dir::Down);
            let hi = d.sqrt(96, Dir::Up);
            assert!(lo.to_rational().pow(2) <= q(v, 1));
            assert!(hi.to_rational().pow(2) >= q(v, 1));
        }
        // Exact square.
        let d = Dyadic::from_i64(144);
        assert_eq!(d.sqrt(64, Dir::Down).to_rational(), q(12, 1));
    }

    #[test]
    fn ball_ops_contain_exact_rationals() {
        let mut rng = crate::DetRng::new(0x5eed);
        for _ in 0..100 {
            let a = q(rng.range_i64(-999, 999), rng.range_i64(1, 99));
            let b = q(rng.range_i64(-999, 999), rng.range_i64(1, 99));
            let ba = RealBall::from_rational(&a, 128);
            let bb = RealBall::from_rational(&b, 128);
            assert!((ba.clone() + bb.clone()).contains_rational(&(&a + &b)));
            assert!((ba.clone() - bb.clone()).contains_rational(&(&a - &b)));
            assert!((ba.clone() * bb.clone()).contains_rational(&(&a * &b)));
            if !b.is_zero() {
                assert!(ba.div(&bb).unwrap().contains_rational(&(&a / &b)));
            }
        }
    }

    #[test]
    fn pi_matches_reference_digits() {
        // 60 decimal digits of π.
        let reference = digits_rational(
            "3141592653589793238462643383279502884197169399375105820974944",
            60,
        );
        let p = pi_ball(256);
        assert!(p.contains_rational(&reference) || {
            // The reference itself is truncated at 10^{-60}; widen by that.
            p.widen(&Dyadic::new(BigInt::one(), -190))
                .contains_rational(&reference)
        });
        assert!(p.rad.log2_upper() < -240, "π radius too large: {}", p.rad);
    }

    #[test]
    fn exp_matches_reference_digits() {
        // 60 digits of e.
        let reference = digits_rational(
            "2718281828459045235360287471352662497757247093699959574966968",
            60,
        );
        let e = RealBall::one(256).exp();
        assert!(e
            .widen(&Dyadic::new(BigInt::one(), -190))
            .contains_rational(&reference));
        // exp(0) = 1.
        let one = RealBall::zero(128).exp();
        assert!(one.contains_rational(&q(1, 1)));
        assert!(one.rad.is_zero() || one.rad.log2_upper() < -100);
        // exp(x)·exp(−x) contains 1.
        for v in [q(10, 1), q(-7, 2), q(355, 113)] {
            let x = RealBall::from_rational(&v, 192);
            let prod = x.exp() * (-x).exp();
            assert!(prod.contains_rational(&q(1, 1)), "exp inverse at {v}");
        }
    }

    #[test]
    fn cos_sin_identities() {
        let prec = 192;
        // sin(0) = 0, cos(0) = 1.
        let (c, s) = RealBall::zero(prec).cos_sin();
        assert!(c.contains_rational(&q(1, 1)));
        assert!(s.contains_rational(&q(0, 1)));
        // Pythagorean identity at random points, including large args.
        let mut rng = crate::DetRng::new(0x0c05);
        for _ in 0..20 {
            let v = q(rng.range_i64(-10_000, 10_000), rng.range_i64(1, 100));
            let x = RealBall::from_rational(&v, prec);
            let (c, s) = x.cos_sin();
            let ident = c.clone() * c + s.clone() * s;
            assert!(ident.contains_rational(&q(1, 1)), "cos²+sin² at {v}");
            assert!(ident.rad.log2_upper() < -150);
        }
        // cos(π) = −1.
        let (c, _) = pi_ball(prec).cos_sin();
        assert!(c.contains_rational(&q(-1, 1)));
    }

    #[test]
    fn roots_of_unity() {
        let prec = 192;
        // ζ_4 = i.
        let z = root_of_unity(4, 1, prec);
        assert!(z.contains_rationals(&q(0, 1), &q(1, 1)));
        // ζ_3 real part = −1/2 and ζ_3·ζ_3² = 1.
        let z3 = root_of_unity(3, 1, prec);
        assert!(z3.re.contains_rational(&q(-1, 2)));
        let z3sq = root_of_unity(3, 2, prec);
        let prod = z3.clone() * z3sq;
        assert!(prod.contains_rationals(&q(1, 1), &q(0, 1)));
        // (ζ_3 im)² = 3/4.
        let imsq = z3.im.clone() * z3.im;
        assert!(imsq.contains_rational(&q(3, 4)));
        // ζ_M^M = 1 for assorted M.
        for m in [5u64, 7, 12] {
            let z = root_of_unity(m, 1, prec);
            let p = z.powi(m as u32);
            assert!(p.contains_rationals(&q(1, 1), &q(0, 1)), "ζ_{m}^{m}");
        }
    }

    #[test]
    fn complex_ball_field_ops() {
        let prec = 160;
        let z = ComplexBall::from_rationals(&q(3, 1), &q(4, 1), prec);
        let n = z.norm_sq();
        assert!(n.contains_rational(&q(25, 1)));
        let zi = z.inv().unwrap();
        let prod = z.clone() * zi;
        assert!(prod.contains_rationals(&q(1, 1), &q(0, 1)));
        // exp(iπ) = −1.
        let ipi = ComplexBall::new(RealBall::zero(prec), pi_ball(prec));
        let e = ipi.exp();
        assert!(e.contains_rationals(&q(-1, 1), &q(0, 1)));
    }

    #[test]
    fn exp_two_pi_rational_decay() {
        // e^{−2π} ≈ 0.00186744... (frozen 12 digits).
        let v = exp_two_pi_rational(&q(-1, 1), 128);
        let reference = digits_rational("1867442731707", 15);
        assert!(v
            .widen(&Dyadic::new(BigInt::one(), -40))
            .contains_rational(&reference));
    }

    #[test]
    fn sqrt_ball() {
        let two = RealBall::from_rational(&q(2, 1), 192);
        let s = two.sqrt().unwrap();
        let sq = s.clone() * s;
        assert!(sq.contains_rational(&q(2, 1)));
        assert!(RealBall::from_rational(&q(-1, 1), 64).sqrt().is_err());
    }
}
