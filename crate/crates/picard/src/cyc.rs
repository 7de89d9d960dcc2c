//! Exact arithmetic in cyclotomic extensions K(ζ_M) of the imaginary
//! quadratic base field.
//!
//! Elements are polynomials in ζ_M of degree < φ(M) with [`KElement`]
//! coefficients, reduced modulo the M-th cyclotomic polynomial Φ_M. Elements
//! of different cyclotomic orders unify by promotion into the least common
//! order (ζ_M = ζ_{M'}^{M'/M} for M | M'), so values generated as plain
//! rationals (order 1) combine freely with any root-of-unity order.
//!
//! The two embeddings out of this ring are [`CycK::embed_sigma`] (rigorous
//! complex balls via σ: K ↪ ℂ, Im σ(√d) > 0, and ζ_M ↦ e^{2πi/M}) and
//! [`CycK::embed_padic`] (ι_p: values land in ℚ_p through a chosen prime
//! above p, with ζ_M mapped through the Teichmüller character; requires
//! M | p−1).

use crate::arith::primitive_root;
use crate::ball::{pi_ball, root_of_unity, ComplexBall, Dyadic, RealBall};
use crate::imquad::KElement;
use crate::padic::{teichmuller, Padic};
use crate::{Error, Result};
use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Zero};
use std::collections::HashMap;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};
use std::sync::Mutex;
use std::sync::OnceLock;

/// Coefficients of the M-th cyclotomic polynomial Φ_M, ascending degree.
pub fn cyclotomic_poly(m: u64) -> Vec<BigInt> {
    static CACHE: OnceLock<Mutex<HashMap<u64, Vec<BigInt>>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    if let Some(hit) = cache.lock().unwrap().get(&m) {
        return hit.clone();
    }
    // x^m − 1 divided by Φ_d for all proper divisors d | m.
    let mut poly = vec![BigInt::zero(); m as usize + 1];
    poly[0] = -BigInt::one();
    poly[m as usize] = BigInt::one();
    for d in crate::arith::divisors(m) {
        if d == m {
            continue;
        }
        let phi_d = cyclotomic_poly(d);
        poly = int_poly_div_exact(&poly, &phi_d);
    }
    cache.lock().unwrap().insert(m, poly.clone());
    poly
}

/// Exact division of integer polynomials (divisor monic, remainder zero).
fn int_poly_div_exact(num: &[BigInt], den: &[BigInt]) -> Vec<BigInt> {
    assert!(den.last().map(|c| c.is_one()).unwrap_or(false));
    let mut rem: Vec<BigInt> = num.to_vec();
    let dn = den.len() - 1;
    let qn = rem.len() - 1 - dn;
    let mut quot = vec![BigInt::zero(); qn + 1];
    for i in (0..=qn).rev() {
        let c = rem[i + dn].clone();
        quot[i] = c.clone();
        for (j, dj) in den.iter().enumerate() {
            let idx = i + j;
            let sub = &c * dj;
            rem[idx] -= sub;
        }
    }
    assert!(rem.iter().all(|c| c.is_zero()), "non-exact polynomial division");
    quot
}

/// An element of K(ζ_M): Σ coeffs[k]·ζ_M^k, k < φ(M).
#[derive(Clone, Debug)]
pub struct CycK {
    pub m_order: u64,
    pub coeffs: Vec<KElement>,
}

impl CycK {
    pub fn from_k(e: KElement) -> Self {
        CycK {
            m_order: 1,
            coeffs: vec![e],
        }
    }

    pub fn from_rational(r: BigRational) -> Self {
        CycK::from_k(KElement::from_rational(r))
    }

    pub fn from_i64(v: i64) -> Self {
        CycK::from_rational(BigRational::from_integer(BigInt::from(v)))
    }

    /// ζ_M^j.
    pub fn zeta(m: u64, j: u64) -> Self {
        assert!(m >= 1);
        let phi = crate::arith::euler_phi(m) as usize;
        let j = (j % m) as usize;
        let mut raw = vec![KElement::zero(); j + 1];
        raw[j] = KElement::one();
        let mut out = CycK {
            m_order: m,
            coeffs: raw,
        };
        out.reduce();
        assert_eq!(out.coeffs.len(), phi);
        out
    }

    fn phi(&self) -> usize {
        crate::arith::euler_phi(self.m_order) as usize
    }

    /// Reduce the (possibly long) coefficient vector modulo Φ_M and pad to
    /// length φ(M).
    fn reduce(&mut self) {
        let phi = self.phi();
        let cyclo = cyclotomic_poly(self.m_order);
        while self.coeffs.len() > phi {
            let top = self.coeffs.len() - 1;
            let c = self.coeffs.pop().unwrap();
            if c.is_zero() {
                continue;
            }
            // x^top ≡ −Σ_{j<φ} cyclo[j]·x^{top−φ+j}.
            for (j, cj) in cyclo.iter().enumerate().take(phi) {
                if cj.is_zero() {
                    continue;
                }
                let idx = top - phi + j;
                let delta =
                    c.clone() * KElement::from_rational(BigRational::from_integer(cj.clone()));
                self.coeffs[idx] = self.coeffs[idx].clone() - delta;
            }
        }
        while self.coeffs.len() < phi {
            self.coeffs.push(KElement::zero());
        }
    }

    /// Rewrite in the cyclotomic order `target` (a multiple of m_order).
    pub fn promote(&self, target: u64) -> CycK {
        assert!(target.is_multiple_of(self.m_order), "promotion needs a multiple order");
        if target == self.m_order {
            return self.clone();
        }
        let step = (target / self.m_order) as usize;
        let mut raw = vec![KElement::zero(); (self.coeffs.len() - 1) * step + 1];
        for (k, c) in self.coeffs.iter().enumerate() {
            raw[k * step] = c.clone();
        }
        let mut out = CycK {
            m_order: target,
            coeffs: raw,
        };
        out.reduce();
        out
    }

    fn unify(a: &CycK, b: &CycK) -> (CycK, CycK) {
        let m = a.m_order.lcm(&b.m_order);
        (a.promote(m), b.promote(m))
    }

    /// Is the element a plain element of K (no irrational root-of-unity part)?
    pub fn as_k(&self) -> Option<KElement> {
        // Reduce to order 1 by checking all higher coefficients vanish. For
        // composite orders ζ may represent rationals non-trivially (e.g.
        // ζ_6^3 = −1), but our reduction keeps the power basis, where the
        // constant-only form is definitive after order minimization; we only
        // check the conservative condition here.
        if self.coeffs[1..].iter().all(|c| c.is_zero()) {
            Some(self.coeffs[0].clone())
        } else {
            None
        }
    }

    pub fn as_rational(&self) -> Option<BigRational> {
        let k = self.as_k()?;
        if k.y.is_zero() {
            Some(k.x)
        } else {
            None
        }
    }

    /// Complex conjugation: K-conjugation on coefficients and ζ ↦ ζ^{−1}.
    pub fn conj(&self) -> CycK {
        let m = self.m_order;
        let mut out = CycK::zero();
        for (k, c) in self.coeffs.iter().enumerate() {
            if c.is_zero() {
                continue;
            }
            let j = if k == 0 { 0 } else { m - k as u64 };
            let term = CycK::zeta(m, j).scale_k(&c.conj());
            out = &out + &term;
        }
        out
    }

    pub fn scale_k(&self, s: &KElement) -> CycK {
        CycK {
            m_order: self.m_order,
            coeffs: self.coeffs.iter().map(|c| c.clone() * s.clone()).collect(),
        }
    }

    pub fn scale_rational(&self, r: &BigRational) -> CycK {
        self.scale_k(&KElement::from_rational(r.clone()))
    }

    pub fn inv(&self) -> Result<CycK> {
        if self.is_zero() {
            return Err(Error::Invalid("inverse of zero in K(ζ)".into()));
        }
        // Extended Euclid in K[x] against Φ_M.
        let phi: Vec<KElement> = cyclotomic_poly(self.m_order)
            .iter()
            .map(|c| KElement::from_rational(BigRational::from_integer(c.clone())))
            .collect();
        let (g, u, _) = k_poly_ext_gcd(&self.coeffs, &phi);
        // g is normalized monic; invertible iff deg g = 0.
        if poly_degree(&g) != Some(0) {
            return Err(Error::Invalid(
                "cyclotomic order collides with the field discriminant: element shares a factor \
                 with Φ_M over K"
                    .into(),
            ));
        }
        let ginv = g[0].inverse()?;
        let mut out = CycK {
            m_order: self.m_order,
            coeffs: u.iter().map(|c| c.clone() * ginv.clone()).collect(),
        };
        out.reduce();
        Ok(out)
    }

    pub fn pow(&self, e: i64) -> Result<CycK> {
        let base = if e < 0 { self.inv()? } else { self.clone() };
        let mut acc = CycK::one();
        for _ in 0..e.unsigned_abs() {
            acc = &acc * &base;
        }
        Ok(acc)
    }

    /// Rigorous complex value under σ (Im σ(√d) > 0) and ζ_M ↦ e^{2πi/M}.
    pub fn embed_sigma(&self, prec: i64) -> ComplexBall {
        // Field discriminant from any coefficient carrying (t, n): t² − 4n.
        let disc = self
            .coeffs
            .iter()
            .find(|c| !c.y.is_zero())
            .map(|c| c.t * c.t - 4 * c.n);
        let sqrt_abs_disc = disc.map(|d| {
            RealBall::from_i64(-d, prec)
                .sqrt()
                .expect("negative discriminant has positive absolute value")
        });
        let mut acc = ComplexBall::zero(prec);
        for (k, c) in self.coeffs.iter().enumerate() {
            if c.is_zero() {
                continue;
            }
            let (re, im_coeff) = c.sigma_parts();
            let coeff_ball = if im_coeff.is_zero() {
                ComplexBall::from_rationals(&re, &BigRational::zero(), prec)
            } else {
                let im = sqrt_abs_disc
                    .as_ref()
                    .expect("irrational coefficient carries field data")
                    .mul_rational(&im_coeff);
                ComplexBall::new(RealBall::from_rational(&re, prec), im)
            };
            let zeta = root_of_unity(self.m_order, k as u64, prec);
            acc = acc + coeff_ball * zeta;
        }
        acc
    }

    /// p-adic value under ι_p: τ ↦ tau_p (from [`crate::padic::iota_tau`]),
    /// ζ_M ↦ ω(g)^{(p−1)/M} for a fixed primitive root g mod p.
    /// Requires M | p−1 (the image must be in ℚ_p).
    pub fn embed_padic(&self, tau_p: &Padic, prec: i64) -> Result<Padic> {
        let p = tau_p.p;
        if !(p - 1).is_multiple_of(self.m_order) {
            return Err(Error::Unsupported(format!(
                "ζ_{} does not embed in ℚ_{p} (order must divide p−1)",
                self.m_order
            )));
        }
        let zeta_p = if self.m_order == 1 {
            Padic::from_i64(p, 1, prec)
        } else {
            let g = primitive_root(p);
            teichmuller(g, p, prec).pow_int(((p - 1) / self.m_order) as i64)?
        };
        let mut acc = Padic::exact_zero(p);
        let mut zpow = Padic::from_i64(p, 1, prec);
        for c in &self.coeffs {
            if !c.is_zero() {
                let cx = Padic::from_rational(p, &c.x, prec);
                let cy = Padic::from_rational(p, &c.y, prec);
                let cval = &cx + &(&cy * tau_p);
                acc = &acc + &(&cval * &zpow);
            }
            zpow = &zpow * &zeta_p;
        }
        Ok(acc)
    }
}

fn poly_degree(p: &[KElement]) -> Option<usize> {
    p.iter().rposition(|c| !c.is_zero())
}

/// Extended gcd in K[x]: returns (g, u, v) with u·a + v·b = g, g monic (or
/// zero).
fn k_poly_ext_gcd(
    a: &[KElement],
    b: &[KElement],
) -> (Vec<KElement>, Vec<KElement>, Vec<KElement>) {
    let mut r0: Vec<KElement> = a.to_vec();
    let mut r1: Vec<KElement> = b.to_vec();
    let mut s0 = vec![KElement::one()];
    let mut s1 = vec![KElement::zero()];
    let mut t0 = vec![KElement::zero()];
    let mut t1 = vec![KElement::one()];
    while poly_degree(&r1).is_some() {
        let (q, r) = k_poly_divmod(&r0, &r1);
        let ns = k_poly_sub(&s0, &k_poly_mul(&q, &s1));
        let nt = k_poly_sub(&t0, &k_poly_mul(&q, &t1));
        r0 = r1;
        r1 = r;
        s0 = s1;
        s1 = ns;
        t0 = t1;
        t1 = nt;
    }
    // Normalize monic.
    if let Some(d) = poly_degree(&r0) {
        let lead_inv = r0[d].inverse().expect("nonzero leading coefficient");
        let norm = |p: &[KElement]| -> Vec<KElement> {
            p.iter().map(|c| c.clone() * lead_inv.clone()).collect()
        };
        (norm(&r0), norm(&s0), norm(&t0))
    } else {
        (r0, s0, t0)
    }
}

fn k_poly_divmod(num: &[KElement], den: &[KElement]) -> (Vec<KElement>, Vec<KElement>) {
    let dd = poly_degree(den).expect("division by zero polynomial");
    let lead_inv = den[dd].inverse().expect("field leading coefficient");
    let mut rem: Vec<KElement> = num.to_vec();
    let nd = match poly_degree(&rem) {
        Some(n) if n >= dd => n,
        _ => return (vec![KElement::zero()], rem),
    };
    let mut quot = vec![KElement::zero(); nd - dd + 1];
    for i in (0..=(nd - dd)).rev() {
        let c = rem[i + dd].clone() * lead_inv.clone();
        if c.is_zero() {
            continue;
        }
        quot[i] = c.clone();
        for j in 0..=dd {
            let delta = c.clone() * den[j].clone();
            rem[i + j] = rem[i + j].clone() - delta;
        }
    }
    (quot, rem)
}

fn k_poly_mul(a: &[KElement], b: &[KElement]) -> Vec<KElement> {
    let mut out = vec![KElement::zero(); a.len() + b.len() - 1];
    for (i, ai) in a.iter().enumerate() {
        if ai.is_zero() {
            continue;
        }
        for (j, bj) in b.iter().enumerate() {
            if bj.is_zero() {
                continue;
            }
            out[i + j] = out[i + j].clone() + ai.clone() * bj.clone();
        }
    }
    out
}

fn k_poly_sub(a: &[KElement], b: &[KElement]) -> Vec<KElement> {
    let n = a.len().max(b.len());
    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        let av = a.get(i).cloned().unwrap_or_else(KElement::zero);
        let bv = b.get(i).cloned().unwrap_or_else(KElement::zero);
        out.push(av - bv);
    }
    out
}

impl PartialEq for CycK {
    fn eq(&self, other: &Self) -> bool {
        let (a, b) = CycK::unify(self, other);
        a.coeffs == b.coeffs
    }
}

impl Add for &CycK {
    type Output = CycK;
    fn add(self, rhs: &CycK) -> CycK {
        let (mut a, b) = CycK::unify(self, rhs);
        assert_eq!(a.coeffs.len(), b.coeffs.len(), "power basis length");
        for (x, y) in a.coeffs.iter_mut().zip(&b.coeffs) {
            *x = x.clone() + y.clone();
        }
        a
    }
}
impl Add for CycK {
    type Output = CycK;
    fn add(self, rhs: CycK) -> CycK {
        &self + &rhs
    }
}
impl Sub for &CycK {
    type Output = CycK;
    fn sub(self, rhs: &CycK) -> CycK {
        self + &(-rhs.clone())
    }
}
impl Sub for CycK {
    type Output = CycK;
    fn sub(self, rhs: CycK) -> CycK {
        &self - &rhs
    }
}
impl Neg for CycK {
    type Output = CycK;
    fn neg(self) -> CycK {
        CycK {
            m_order: self.m_order,
            coeffs: self.coeffs.into_iter().map(|c| -c).collect(),
        }
    }
}
impl Mul for &CycK {
    type Output = CycK;
    fn mul(self, rhs: &CycK) -> CycK {
        let (a, b) = CycK::unify(self, rhs);
        let mut out = CycK {
            m_order: a.m_order,
            coeffs: k_poly_mul(&a.coeffs, &b.coeffs),
        };
        out.reduce();
        out
    }
}
impl Mul for CycK {
    type Output = CycK;
    fn mul(self, rhs: CycK) -> CycK {
        &self * &rhs
    }
}

impl Zero for CycK {
    fn zero() -> Self {
        CycK::from_k(KElement::zero())
    }
    fn is_zero(&self) -> bool {
        self.coeffs.iter().all(|c| c.is_zero())
    }
}

impl One for CycK {
    fn one() -> Self {
        CycK::from_k(KElement::one())
    }
}

impl fmt::Display for CycK {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut first = true;
        for (k, c) in self.coeffs.iter().enumerate() {
            if c.is_zero() {
                continue;
            }
            if !first {
                write!(f, " + ")?;
            }
            if k == 0 {
                write!(f, "({c})")?;
            } else {
                write!(f, "({c})ζ{}^{k}", self.m_order)?;
            }
            first = false;
        }
        if first {
            write!(f, "0")?;
        }
        Ok(())
    }
}

/// σ(τ) as a complex ball for a field with parameters (t, n): the root of
/// x² − tx + n in the upper half plane.
pub fn sigma_tau_ball(t: i64, n: i64, prec: i64) -> ComplexBall {
    let disc = t * t - 4 * n;
    assert!(disc < 0);
    let re = BigRational::new(BigInt::from(t), BigInt::from(2));
    let im = RealBall::from_i64(-disc, prec)
        .sqrt()
        .expect("positive")
        .mul_rational(&BigRational::new(BigInt::one(), BigInt::from(2)));
    ComplexBall::new(RealBall::from_rational(&re, prec), im)
}

/// 2π as a real ball (shared between theta evaluation sites).
pub fn two_pi(prec: i64) -> RealBall {
    pi_ball(prec).scale_pow2(1)
}

/// Upper bound (as a dyadic) of |σ(e)| for a K-element.
pub fn sigma_abs_upper(e: &KElement, prec: i64) -> Dyadic {
    let cb = CycK::from_k(e.clone()).embed_sigma(prec);
    cb.upper_abs()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::imquad::field_init;

    fn q(n: i64, d: i64) -> BigRational {
        BigRational::new(BigInt::from(n), BigInt::from(d))
    }

    #[test]
    fn cyclotomic_polys_frozen() {
        let as_i64 = |m: u64| -> Vec<i64> {
            cyclotomic_poly(m)
                .iter()
                .map(|c| {
                    use num_traits::ToPrimitive;
                    c.to_i64().unwrap()
                })
                .collect()
        };
        assert_eq!(as_i64(1), vec![-1, 1]);
        assert_eq!(as_i64(2), vec![1, 1]);
        assert_eq!(as_i64(3), vec![1, 1, 1]);
        assert_eq!(as_i64(4), vec![1, 0, 1]);
        assert_eq!(as_i64(5), vec![1, 1, 1, 1, 1]);
        assert_eq!(as_i64(6), vec![1, -1, 1]);
        assert_eq!(as_i64(8), vec![1, 0, 0, 0, 1]);
        assert_eq!(as_i64(9), vec![1, 0, 0, 1, 0, 0, 1]);
        assert_eq!(as_i64(12), vec![1, 0, -1, 0, 1]);
    }

    #[test]
    fn zeta_power_relations() {
        for m in [2u64, 3, 4, 5, 6, 8, 12] {
            let z = CycK::zeta(m, 1);
            assert_eq!(z.pow(m as i64).unwrap(), CycK::one(), "ζ_{m}^{m} = 1");
            // Σ_{j<M} ζ^j = 0 for M > 1.
            let mut s = CycK::zero();
            for j in 0..m {
                s = &s + &CycK::zeta(m, j);
            }
            assert!(s.is_zero(), "geometric sum at M = {m}");
        }
        // Cross-order identities: ζ_6³ = −1 = ζ_2; ζ_6² = ζ_3.
        assert_eq!(CycK::zeta(6, 3), CycK::from_i64(-1));
        assert_eq!(CycK::zeta(6, 3), CycK::zeta(2, 1));
        assert_eq!(CycK::zeta(6, 2), CycK::zeta(3, 1));
        // Mixed-order product: ζ_4·ζ_3 = ζ_12^{7}.
        let prod = &CycK::zeta(4, 1) * &CycK::zeta(3, 1);
        assert_eq!(prod, CycK::zeta(12, 7));
    }

    #[test]
    fn inverse_and_collision_guard() {
        // Plain cyclotomic inverses.
        let z = CycK::zeta(5, 2);
        assert_eq!(&z * &z.inv().unwrap(), CycK::one());
        let e = &CycK::one() + &CycK::zeta(5, 1);
        assert_eq!(&e * &e.inv().unwrap(), CycK::one());

        // K-coefficient inverse (D = −7): (τ + ζ_3) times its inverse is 1.
        let f = field_init(-7).unwrap();
        let tau = CycK::from_k(KElement::tau(&f));
        let g = &tau + &CycK::zeta(3, 1);
        assert_eq!(&g * &g.inv().unwrap(), CycK::one());

        // Collision: over K = ℚ(√−3), ζ_3 = τ − 1 lies in K, so ζ_3 − (τ−1)
        // is a zero divisor in K[x]/Φ_3 and must be rejected loudly.
        let f3 = field_init(-3).unwrap();
        let tau3 = KElement::tau(&f3);
        let bad = &CycK::zeta(3, 1)
            - &CycK::from_k(tau3 - KElement::one());
        assert!(!bad.is_zero());
        let err = bad.inv();
        assert!(err.is_err(), "zero divisor must not invert");
        // And indeed it is a zero divisor: multiply by the conjugate factor.
        let other = &CycK::zeta(3, 1) - &CycK::from_k(KElement::tau(&f3).conj() - KElement::one());
        assert!((&bad * &other).is_zero());
    }

    #[test]
    fn complex_conjugation() {
        let f = field_init(-7).unwrap();
        let tau = KElement::tau(&f);
        let e = CycK::zeta(5, 1).scale_k(&tau);
        let c = e.conj();
        // conj(τ·ζ_5) = τ̄·ζ_5^{−1} = τ̄·ζ_5⁴.
        let expected = CycK::zeta(5, 4).scale_k(&tau.conj());
        assert_eq!(c, expected);
        // conj is an involution and multiplicative.
        assert_eq!(c.conj(), e);
        let a = &CycK::zeta(8, 3) + &CycK::from_k(tau.clone());
        let b = &CycK::zeta(8, 1) - &CycK::from_i64(2);
        assert_eq!((&a * &b).conj(), &a.conj() * &b.conj());
        // e·ē is fixed by conjugation (stays in the real subfield).
        let nb = &a * &a.conj();
        assert_eq!(nb.conj(), nb);
    }

    #[test]
    fn embed_sigma_matches_known_values() {
        let prec = 192;
        // σ(τ) for d = −1 is i.
        let f1 = field_init(-1).unwrap();
        let b = CycK::from_k(KElement::tau(&f1)).embed_sigma(prec);
        assert!(b.contains_rationals(&q(0, 1), &q(1, 1)));
        // σ(τ) for d = −7: 1/2 + i√7/2 — check re and im².
        let f7 = field_init(-7).unwrap();
        let b = CycK::from_k(KElement::tau(&f7)).embed_sigma(prec);
        assert!(b.re.contains_rational(&q(1, 2)));
        let imsq = b.im.clone() * b.im;
        assert!(imsq.contains_rational(&q(7, 4)));
        // ζ_4 embeds as i.
        let b = CycK::zeta(4, 1).embed_sigma(prec);
        assert!(b.contains_rationals(&q(0, 1), &q(1, 1)));
        // Homomorphism: embed(a·b) ⊂ embed(a)·embed(b) — check by comparing
        // the product against the embedded product on a sample.
        let f = field_init(-7).unwrap();
        let a = &CycK::zeta(3, 1) + &CycK::from_k(KElement::tau(&f));
        let asq = &a * &a;
        let ball_prod = a.embed_sigma(prec).powi(2);
        let ball_sq = asq.embed_sigma(prec);
        let diff = ball_prod - ball_sq;
        assert!(diff.re.contains_rational(&q(0, 1)));
        assert!(diff.im.contains_rational(&q(0, 1)));
        // Norm positivity: |σ(δ)|² = |disc|.
        let delta = CycK::from_k(KElement::delta(&f));
        let nb = delta.embed_sigma(prec).norm_sq();
        assert!(nb.contains_rational(&q(7, 1)));
    }

    #[test]
    fn embed_padic_values() {
        // p = 13, ζ_4 ↦ element of order 4: square must be −1.
        let p = 13u64;
        let tau_p = crate::padic::iota_tau(p, 0, 1, -5, 10).unwrap(); // D = −4: x²+1, root 5... b = −5
        let z4 = CycK::zeta(4, 1).embed_padic(&tau_p, 10).unwrap();
        let sq = &z4 * &z4;
        assert!(sq
            .agree_mod(&Padic::from_i64(p, -1, 10), 10)
            .unwrap());
        // ζ_3 at p = 13: cube is 1, value ≢ 1.
        let z3 = CycK::zeta(3, 1).embed_padic(&tau_p, 10).unwrap();
        assert!(z3
            .pow_int(3)
            .unwrap()
            .agree_mod(&Padic::from_i64(p, 1, 10), 10)
            .unwrap());
        assert!(!z3.agree_mod(&Padic::from_i64(p, 1, 10), 1).unwrap());
        // M ∤ p−1 rejected.
        assert!(CycK::zeta(5, 1).embed_padic(&tau_p, 10).is_err());
        // τ embeds compatibly: for D = −7, p = 11, ι(τ)² − ι(τ) + 2 ≡ 0.
        let t11 = crate::padic::iota_tau(11, 1, 2, -7, 10).unwrap();
        let f7 = field_init(-7).unwrap();
        let img = CycK::from_k(KElement::tau(&f7))
            .embed_padic(&t11, 10)
            .unwrap();
        let lhs = &(&img * &img) - &(&img - &Padic::from_i64(11, 2, 10));
        assert!(lhs.is_zero_to_prec() || lhs.val >= 10);
        // Homomorphism: embed(a·b) = embed(a)·embed(b).
        let a = &CycK::zeta(4, 1) + &CycK::from_k(KElement::from_integers(&f7, 2, 0));
        let b = &CycK::zeta(2, 1) - &CycK::from_k(KElement::from_integers(&f7, 0, 1));
        // Use p = 29: 4 | 28, and 29 splits in ℚ(√−7) (−7 ≡ 22, 22^14 … check via roots).
        let roots = crate::arith::roots_quadratic_mod(1, 2, 29);
        assert_eq!(roots.len(), 2, "29 splits in ℚ(√−7)");
        let t29 = crate::padic::iota_tau(29, 1, 2, roots[0] as i64, 10).unwrap();
        let lhs = (&a * &b).embed_padic(&t29, 10).unwrap();
        let rhs = &a.embed_padic(&t29, 10).unwrap() * &b.embed_padic(&t29, 10).unwrap();
        assert!(lhs.agree_mod(&rhs, 10).unwrap());
    }

    #[test]
    fn sigma_tau_ball_upper_half_plane() {
        // d = −7: τ = (1+√−7)/2.
        let b = sigma_tau_ball(1, 2, 160);
        assert!(b.re.contains_rational(&q(1, 2)));
        assert!(!b.im.contains_zero());
        assert!(!b.im.mid.is_negative());
    }
}
