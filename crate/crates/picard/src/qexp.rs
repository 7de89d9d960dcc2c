//! Truncated q-expansion and Jacobi-expansion algebra over exact cyclotomic,
//! complex-ball, and capped p-adic coefficient rings.
//!
//! The same expansion container serves all three rings through the [`Coeff`]
//! trait; Hecke operators, CM theta series, intrinsic theta functions,
//! p-stabilization, and the ordinary projector are built on top of it.
//! Transcendental factors (2πi)^m attached to Jacobi slices stay symbolic —
//! exact slices remain exact and the factors materialize only inside ball
//! evaluation.

use crate::arith::{divisors, factor, is_prime, isqrt_big, kronecker, sigma_k};
use crate::ball::{ComplexBall, Dir, Dyadic, RealBall};
use crate::characters::{ClassicalHeckeChar, FinitePart};
use crate::cyc::{two_pi, CycK};
use crate::imquad::{
    ideal_points_up_to, prime_split, CMPoint, FieldData, Ideal, KElement, SplitType,
};
use crate::padic::Padic;
use crate::{Error, Result};
use num_bigint::{BigInt, BigUint};
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::fmt;

fn big(v: i64) -> BigRational {
    BigRational::from_integer(BigInt::from(v))
}

/// Coefficient ring for truncated expansions: an exact or interval ring with
/// ring arithmetic plus an embedding of ℚ. `embed_ratio` reads the
/// context (prime, precision, …) off the receiver so that generic code can
/// manufacture scalars without threading ring parameters around.
pub trait Coeff:
    Clone
    + PartialEq
    + fmt::Debug
    + Zero
    + One
    + std::ops::Neg<Output = Self>
    + std::ops::Sub<Output = Self>
{
    /// Serialization tag for the ring.
    const RING_TAG: &'static str;

    /// The rational r as an element of this ring, in the context of `self`.
    fn embed_ratio(&self, r: &BigRational) -> Self;
}

impl Coeff for BigRational {
    const RING_TAG: &'static str = "rational";
    fn embed_ratio(&self, r: &BigRational) -> Self {
        r.clone()
    }
}

impl Coeff for CycK {
    const RING_TAG: &'static str = "exact-cyclotomic";
    fn embed_ratio(&self, r: &BigRational) -> Self {
        CycK::from_rational(r.clone())
    }
}

impl Coeff for Padic {
    const RING_TAG: &'static str = "p-adic-capped";
    fn embed_ratio(&self, r: &BigRational) -> Self {
        assert!(
            self.p != 0,
            "p-adic prototype with a concrete prime is required"
        );
        Padic::from_rational(self.p, r, self.prec)
    }
}

impl Coeff for ComplexBall {
    const RING_TAG: &'static str = "complex-ball";
    fn embed_ratio(&self, r: &BigRational) -> Self {
        ComplexBall::from_rationals(r, &BigRational::zero(), self.prec())
    }
}

/// Nebentypus data: the quadratic character n ↦ kronecker(kron_d, n) cut off
/// at the level (χ(n) = 0 when gcd(n, level) > 1); `kron_d = 0` is the
/// principal character mod level.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Neben {
    pub kron_d: i64,
    pub level: u64,
}

impl Neben {
    pub fn trivial() -> Self {
        Neben { kron_d: 0, level: 1 }
    }

    /// χ(m) ∈ {−1, 0, 1}.
    pub fn eval(&self, m: u64) -> i64 {
        if self.level > 1 && m.gcd(&self.level) != 1 {
            return 0;
        }
        if self.kron_d == 0 {
            1
        } else {
            kronecker(self.kron_d, m as i64) as i64
        }
    }

    /// Pointwise product of the two characters, with the square part of the
    /// Kronecker discriminant stripped.
    pub fn mul(&self, other: &Neben) -> Neben {
        let level = self.level.lcm(&other.level);
        let prod = self
            .kron_d
            .checked_mul(other.kron_d)
            .expect("nebentypus discriminant overflow");
        let kron_d = if prod == 0 {
            // One factor is principal: keep the other's discriminant.
            self.kron_d + other.kron_d
        } else {
            let sign = prod.signum();
            let mut sf: i64 = 1;
            for (q, e) in factor(prod.unsigned_abs()) {
                if e % 2 == 1 {
                    sf *= q as i64;
                }
            }
            if sf == 1 && sign > 0 {
                0
            } else {
                let s = sign * sf;
                if (s - 1) % 4 == 0 {
                    s
                } else {
                    4 * s
                }
            }
        };
        Neben { kron_d, level }
    }
}

/// Truncated q-expansion Σ_{n=0}^{N} c_n q^n with modular bookkeeping
/// (weight, level, nebentypus). `proto` is a throwaway ring element carrying
/// the coefficient-ring context.
#[derive(Clone, Debug, PartialEq)]
pub struct QExpansion<S: Coeff> {
    pub coeffs: Vec<S>,
    pub weight: i64,
    pub level: u64,
    pub neben: Neben,
    pub proto: S,
}

impl<S: Coeff> QExpansion<S> {
    pub fn new(coeffs: Vec<S>, weight: i64, level: u64, neben: Neben, proto: S) -> Self {
        assert!(!coeffs.is_empty(), "q-expansion needs at least c_0");
        QExpansion {
            coeffs,
            weight,
            level,
            neben,
            proto,
        }
    }

    /// q-precision N: coefficients 0..=N are stored.
    pub fn n_prec(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn coeff(&self, n: usize) -> &S {
        &self.coeffs[n]
    }

    /// Truncate to q-precision at most `n_prec`.
    pub fn truncated(&self, n_prec: usize) -> Self {
        let keep = n_prec.min(self.n_prec());
        QExpansion {
            coeffs: self.coeffs[..=keep].to_vec(),
            ..self.clone()
        }
    }

    pub fn add(&self, other: &Self) -> Self {
        assert_eq!(self.weight, other.weight, "adding different weights");
        let n = self.n_prec().min(other.n_prec());
        let coeffs = (0..=n)
            .map(|i| self.coeffs[i].clone() + other.coeffs[i].clone())
            .collect();
        QExpansion {
            coeffs,
            weight: self.weight,
            level: self.level.lcm(&other.level),
            neben: self.neben.clone(),
            proto: self.proto.clone(),
        }
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.scale_ratio(&big(-1)))
    }

    /// Product of expansions: coefficient convolution at min precision;
    /// weights add, levels lcm, nebentypus characters multiply.
    pub fn mul(&self, other: &Self) -> Self {
        let n = self.n_prec().min(other.n_prec());
        let mut coeffs = vec![self.proto.embed_ratio(&BigRational::zero()); n + 1];
        for i in 0..=n {
            if self.coeffs[i].is_zero() {
                continue;
            }
            for j in 0..=(n - i) {
                let t = self.coeffs[i].clone() * other.coeffs[j].clone();
                coeffs[i + j] = coeffs[i + j].clone() + t;
            }
        }
        QExpansion {
            coeffs,
            weight: self.weight + other.weight,
            level: self.level.lcm(&other.level),
            neben: self.neben.mul(&other.neben),
            proto: self.proto.clone(),
        }
    }

    pub fn scale(&self, s: &S) -> Self {
        let coeffs = self
            .coeffs
            .iter()
            .map(|c| s.clone() * c.clone())
            .collect();
        QExpansion {
            coeffs,
            ..self.clone()
        }
    }

    pub fn scale_ratio(&self, r: &BigRational) -> Self {
        self.scale(&self.proto.embed_ratio(r))
    }

    /// Map coefficients into another ring.
    pub fn map<T: Coeff>(&self, proto: T, f: impl Fn(&S) -> T) -> QExpansion<T> {
        QExpansion {
            coeffs: self.coeffs.iter().map(f).collect(),
            weight: self.weight,
            level: self.level,
            neben: self.neben.clone(),
            proto,
        }
    }

    /// Hecke operator T_n at the expansion's weight, level, and nebentypus:
    /// (T_n g)_m = Σ_{d | gcd(m,n)} χ(d)·d^{w−1}·g_{mn/d²}, requested to
    /// q-precision `want`.
    pub fn hecke_tn(&self, n: u64, want: usize) -> Result<Self> {
        assert!(n >= 1, "T_n needs n ≥ 1");
        assert!(self.weight >= 1, "T_n needs weight ≥ 1");
        let need = (want as u64) * n;
        if need > self.n_prec() as u64 {
            return Err(Error::Precision(format!(
                "T_{} to q-precision {} requires source q-precision {}, have {}",
                n,
                want,
                need,
                self.n_prec()
            )));
        }
        let w = self.weight;
        let mut coeffs = Vec::with_capacity(want + 1);
        for m in 0..=(want as u64) {
            let mut acc = self.proto.embed_ratio(&BigRational::zero());
            let g = if m == 0 { n } else { m.gcd(&n) };
            for d in divisors(g) {
                let chi = self.neben.eval(d);
                if chi == 0 {
                    continue;
                }
                let idx = (m / d) * (n / d);
                let dk = BigInt::from(d).pow((w - 1) as u32);
                let scalar = self
                    .proto
                    .embed_ratio(&BigRational::from_integer(dk * BigInt::from(chi)));
                acc = acc + scalar * self.coeffs[idx as usize].clone();
            }
            coeffs.push(acc);
        }
        Ok(QExpansion {
            coeffs,
            ..self.clone()
        })
    }

    /// U_q: (U_q g)_m = g_{qm}; precision drops to ⌊N/q⌋.
    pub fn u_q(&self, q: u64) -> Self {
        let out = self.n_prec() / q as usize;
        let coeffs = (0..=out)
            .map(|m| self.coeffs[m * q as usize].clone())
            .collect();
        QExpansion {
            coeffs,
            ..self.clone()
        }
    }

    /// V_p: g(z) ↦ g(pz); coefficients move to indices p·m and the level
    /// acquires a factor p.
    pub fn v_p(&self, p: u64) -> Self {
        let out = self.n_prec() * p as usize;
        let mut coeffs = vec![self.proto.embed_ratio(&BigRational::zero()); out + 1];
        for m in 0..=self.n_prec() {
            coeffs[m * p as usize] = self.coeffs[m].clone();
        }
        QExpansion {
            coeffs,
            level: self.level * p,
            ..self.clone()
        }
    }
}

impl<S: Coeff + fmt::Display> fmt::Display for QExpansion<S> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(
            f,
            "qexp ring={} n_prec={} weight={} level={} neben={}/{}",
            S::RING_TAG,
            self.n_prec(),
            self.weight,
            self.level,
            self.neben.kron_d,
            self.neben.level
        )?;
        for (n, c) in self.coeffs.iter().enumerate() {
            if !c.is_zero() {
                writeln!(f, "{} {}", n, c)?;
            }
        }
        Ok(())
    }
}

/// Certified polynomial coefficient bound |c_n| ≤ c·(n+1)^a, used for
/// rigorous evaluation tails.
#[derive(Clone, Debug)]
pub struct GrowthBound {
    pub c: BigRational,
    pub a: u32,
}

impl GrowthBound {
    pub fn new(c: BigRational, a: u32) -> Self {
        assert!(c >= BigRational::zero());
        GrowthBound { c, a }
    }

    pub fn add(&self, other: &GrowthBound) -> GrowthBound {
        let a = self.a.max(other.a);
        GrowthBound {
            c: &self.c + &other.c,
            a,
        }
    }

    /// For the convolution: |Σ_{i+j=n} c_i d_j| ≤ C₁C₂·(n+1)^{A₁+A₂+1}.
    pub fn mul(&self, other: &GrowthBound) -> GrowthBound {
        GrowthBound {
            c: &self.c * &other.c,
            a: self.a + other.a + 1,
        }
    }

    pub fn scale(&self, s: &BigRational) -> GrowthBound {
        GrowthBound {
            c: &self.c * s.abs(),
            a: self.a,
        }
    }

    /// Bound valid after applying T_n at weight w:
    /// |(T_n g)_m| ≤ σ₀(n)·n^{w−1}·C·(mn+1)^A ≤ [σ₀(n)·n^{w−1+A}·C]·(m+1)^A.
    pub fn hecke_tn(&self, n: u64, w: i64) -> GrowthBound {
        assert!(w >= 1);
        let tau_n = divisors(n).len() as i64;
        let factor = BigRational::from_integer(
            BigInt::from(tau_n) * BigInt::from(n).pow((w - 1) as u32 + self.a),
        );
        GrowthBound {
            c: &self.c * factor,
            a: self.a,
        }
    }

    /// Rigorous tail bound Σ_{n>N} c·(n+1)^a·ρ^n for 0 ≤ ρ < 1 (ρ given as an
    /// exact rational upper bound of |q|). Errors when the ratio test at N
    /// does not certify (ρ too close to 1 for this truncation).
    pub fn tail(&self, n_trunc: usize, rho: &BigRational) -> Result<BigRational> {
        assert!(rho >= &BigRational::zero());
        if rho >= &BigRational::one() {
            return Err(Error::Precision(
                "evaluation point has |q| ≥ 1: no tail bound".into(),
            ));
        }
        let np1 = big(n_trunc as i64 + 1);
        let np2 = big(n_trunc as i64 + 2);
        // Ratio between consecutive bound terms is at most ρ·((N+2)/(N+1))^a.
        let mut grow = BigRational::one();
        for _ in 0..self.a {
            grow *= &np2 / &np1;
        }
        let r = rho * &grow;
        if r >= BigRational::one() {
            return Err(Error::Precision(format!(
                "tail ratio ≥ 1 at truncation {}; increase q-precision",
                n_trunc
            )));
        }
        // First tail term: c·(N+2)^a·ρ^{N+1}.
        let mut first = self.c.clone();
        for _ in 0..self.a {
            first *= &np2;
        }
        let mut rho_pow = BigRational::one();
        for _ in 0..=n_trunc {
            rho_pow *= rho;
        }
        first *= rho_pow;
        Ok(&first / (BigRational::one() - r))
    }
}

/// Convert an exact expansion to complex balls via the fixed embedding σ.
pub fn qexp_to_balls(g: &QExpansion<CycK>, prec: i64) -> QExpansion<ComplexBall> {
    g.map(ComplexBall::zero(prec), |c| c.embed_sigma(prec))
}

/// e^{2πi·τ} for a ball τ.
pub fn q_at(tau: &ComplexBall, prec: i64) -> ComplexBall {
    let two_pi_i = ComplexBall::new(RealBall::zero(prec), two_pi(prec));
    (two_pi_i * tau.clone()).exp()
}

/// Evaluate Σ c_n q^n at q = e^{2πiτ} with a rigorous tail from the growth
/// certificate. The tail is added to the radius; if `budget_log2 < 0` and
/// the tail exceeds 2^budget_log2 the evaluation refuses rather than
/// silently absorbing the loss.
pub fn eval_ball(
    g: &QExpansion<ComplexBall>,
    tau: &ComplexBall,
    gb: &GrowthBound,
    budget_log2: i64,
) -> Result<ComplexBall> {
    let prec = g.proto.prec().max(64);
    let q = q_at(tau, prec);
    let rho = q.upper_abs().to_rational();
    let tail = gb.tail(g.n_prec(), &rho)?;
    if budget_log2 < 0 {
        let budget = BigRational::new(BigInt::one(), BigInt::from(2u8).pow((-budget_log2) as u32));
        if tail > budget {
            return Err(Error::Precision(format!(
                "tail bound {:.3e} exceeds requested accuracy 2^{}",
                tail.to_f64().unwrap_or(f64::NAN),
                budget_log2
            )));
        }
    }
    // Horner from the top coefficient.
    let mut acc = ComplexBall::zero(prec);
    for n in (0..=g.n_prec()).rev() {
        acc = acc * q.clone() + g.coeffs[n].clone();
    }
    let tail_dy = RealBall::from_rational(&tail, 64).upper_abs();
    Ok(ComplexBall::new(
        acc.re.widen(&tail_dy),
        acc.im.widen(&tail_dy),
    ))
}

/// Evaluate an exact expansion at a CM point τ₀ ∈ K ∩ ℍ.
pub fn eval_cm(
    g: &QExpansion<CycK>,
    tau0: &CMPoint,
    gb: &GrowthBound,
    prec: i64,
    budget_log2: i64,
) -> Result<ComplexBall> {
    let g_ball = qexp_to_balls(g, prec);
    let tau = CycK::from_k(tau0.tau.clone()).embed_sigma(prec);
    eval_ball(&g_ball, &tau, gb, budget_log2)
}

/// Taylor-in-w, Fourier-in-q expansion Σ_{m,n} c_{m,n} w^m q^n of an
/// intrinsic theta function. The stored coefficient of w^m q^n is
/// Σ_{a ∈ 𝔞, N(a)/N(𝔞) = n} a^m / m! ∈ K; the transcendental factor (2πi)^m
/// of the m-th slice is carried symbolically (the slice index m is the
/// grading) and materializes only in ball evaluation.
#[derive(Clone, Debug)]
pub struct JacobiExpansion {
    pub w_prec: usize,
    pub q_prec: usize,
    /// slices[m][n]: coefficient of w^m q^n, without the (2πi)^m factor.
    pub slices: Vec<Vec<CycK>>,
    pub norm_a: BigRational,
    pub disc: i64,
}

impl JacobiExpansion {
    pub fn coeff(&self, m: usize, n: usize) -> &CycK {
        &self.slices[m][n]
    }
}

impl fmt::Display for JacobiExpansion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(
            f,
            "jacobi ring=exact-cyclotomic w_prec={} q_prec={} disc={} norm_a={}",
            self.w_prec, self.q_prec, self.disc, self.norm_a
        )?;
        for (m, row) in self.slices.iter().enumerate() {
            for (n, c) in row.iter().enumerate() {
                if !c.is_zero() {
                    writeln!(f, "{} {} {}", m, n, c)?;
                }
            }
        }
        Ok(())
    }
}

/// The intrinsic theta function ϑ_𝔞(w, τ) = Σ_{a∈𝔞} e^{2πi(N(a)τ/N(𝔞) + aw)}
/// as a Jacobi expansion: w-Taylor order M, q-precision N. Exact: lattice
/// points are enumerated by norm shells with no floating cutoffs.
pub fn intrinsic_theta(
    field: &FieldData,
    a_ideal: &Ideal,
    m_prec: usize,
    n_prec: usize,
) -> JacobiExpansion {
    let norm_a = a_ideal.norm();
    let bound = &norm_a * big(n_prec as i64);
    let pts = ideal_points_up_to(a_ideal, &bound);
    let mut slices: Vec<Vec<KElement>> = Vec::new();
    let zero_k = KElement::from_rational(BigRational::zero());
    for _ in 0..=m_prec {
        slices.push(vec![zero_k.clone(); n_prec + 1]);
    }
    for pt in pts {
        let q_idx_r = pt.norm() / &norm_a;
        assert!(
            q_idx_r.is_integer(),
            "N(a)/N(𝔞) must be integral on lattice points"
        );
        let q_idx = q_idx_r.to_integer().to_usize().expect("q index fits");
        if q_idx > n_prec {
            continue;
        }
        let mut pw = KElement::from_rational(BigRational::one());
        let mut left = m_prec + 1;
        for row in slices.iter_mut() {
            row[q_idx] = row[q_idx].clone() + pw.clone();
            left -= 1;
            if left > 0 {
                pw = pw * pt.clone();
            }
        }
    }
    // Divide slice m by m!.
    let mut fact = BigRational::one();
    let mut out: Vec<Vec<CycK>> = Vec::new();
    for (m, row) in slices.into_iter().enumerate() {
        if m > 0 {
            fact *= big(m as i64);
        }
        let inv_fact = BigRational::one() / &fact;
        out.push(
            row.into_iter()
                .map(|e| CycK::from_k(e.scale(&inv_fact)))
                .collect(),
        );
    }
    JacobiExpansion {
        w_prec: m_prec,
        q_prec: n_prec,
        slices: out,
        norm_a,
        disc: field.disc,
    }
}

/// The m-th Taylor slice of a Jacobi expansion, times m!: the q-expansion of
/// ϑ^{(m)} = (∂/∂w)^m ϑ|_{w=0} up to the symbolic (2πi)^m factor, tagged with
/// weight m+1 and the quadratic character of the field.
pub fn theta_deriv(theta: &JacobiExpansion, m: usize) -> Result<QExpansion<CycK>> {
    if m > theta.w_prec {
        return Err(Error::Invalid(format!(
            "slice {} out of range (w-Taylor order {})",
            m, theta.w_prec
        )));
    }
    let mut fact = BigRational::one();
    for j in 2..=m {
        fact *= big(j as i64);
    }
    let coeffs = theta.slices[m]
        .iter()
        .map(|c| c.scale_rational(&fact))
        .collect();
    let level = theta.disc.unsigned_abs();
    Ok(QExpansion::new(
        coeffs,
        m as i64 + 1,
        level,
        Neben {
            kron_d: theta.disc,
            level,
        },
        CycK::zero(),
    ))
}

/// Certified growth bound for the m-th slice of an intrinsic theta expansion
/// (times m!): the shell count is at most c₀·(n+1) by a covering argument,
/// and each point has |a|^m = (n·N𝔞)^{m/2}, so
/// |c_n| ≤ c₀·(N𝔞+1)^{⌈m/2⌉}·(n+1)^{⌈m/2⌉+1}.
pub fn theta_slice_growth(a_ideal: &Ideal, m: usize) -> GrowthBound {
    let c0 = lattice_count_coefficient(a_ideal);
    let norm_a = a_ideal.norm();
    let half_up = m.div_ceil(2);
    let mut c = c0;
    let na_up = &norm_a + BigRational::one();
    for _ in 0..half_up {
        c *= &na_up;
    }
    GrowthBound::new(c, (half_up + 1) as u32)
}

/// c₀ with #{a ∈ 𝔞 : N(a) ≤ X·N(𝔞)} ≤ c₀·(X+1): covering bound
/// π(R+ρ)²/V ≤ (22/7)·(2·N𝔞·X + 2ρ²)/V with ρ² ≤ 2(N(v₁)+N(v₂)) and the
/// covolume V = N𝔞·√|D|/2 lower-bounded rationally.
fn lattice_count_coefficient(a_ideal: &Ideal) -> BigRational {
    let (v1, v2) = a_ideal.basis();
    let rho_sq = (v1.norm() + v2.norm()) * big(2);
    let norm_a = a_ideal.norm();
    let disc_abs = BigInt::from((v1.t * v1.t - 4 * v1.n).unsigned_abs());
    // √|D| ≥ isqrt(|D|·2^40)/2^20.
    let shift = BigInt::from(1u64 << 40);
    let sqrt_lower = BigRational::new(isqrt_big(&(&disc_abs * &shift)), isqrt_big(&shift));
    let vol_lower = &norm_a * sqrt_lower / big(2);
    let pi_up = BigRational::new(BigInt::from(22), BigInt::from(7));
    let numer = (&norm_a + rho_sq) * big(2);
    pi_up * numer / vol_lower
}

/// Exact Hecke eigenform data: weight, level, nebentypus, and prime
/// eigenvalues in a cyclotomic extension of K; coefficients at all indices
/// follow by multiplicativity and the standard prime-power recursion
/// a_{q^{j+1}} = a_q·a_{q^j} − χ(q)·q^{w−1}·a_{q^{j−1}}.
#[derive(Clone, Debug)]
pub struct EigenformData {
    pub field: FieldData,
    pub weight: i64,
    pub level: u64,
    pub neben: Neben,
    pub psi: Option<ClassicalHeckeChar>,
    pub ap: BTreeMap<u64, CycK>,
    /// Set after p-stabilization: (p, α_p) with U_p-eigenvalue α_p.
    pub stabilized: Option<(u64, CycK)>,
}

impl EigenformData {
    pub fn eigenvalue(&self, q: u64) -> Result<CycK> {
        self.ap
            .get(&q)
            .cloned()
            .ok_or_else(|| Error::Invalid(format!("eigenvalue at {} not tabulated", q)))
    }

    /// Coefficient a_n from the eigenvalue system.
    pub fn coefficient(&self, n: u64) -> Result<CycK> {
        assert!(n >= 1);
        let mut acc = CycK::one();
        for (q, e) in factor(n) {
            let aq = self.eigenvalue(q)?;
            let chi_q = self.neben.eval(q);
            let mut prev = CycK::one();
            let mut cur = aq.clone();
            for _ in 1..e {
                let mut next = &aq * &cur;
                if chi_q != 0 {
                    let qk = BigRational::from_integer(
                        BigInt::from(chi_q) * BigInt::from(q).pow((self.weight - 1) as u32),
                    );
                    next = &next - &prev.scale_rational(&qk);
                }
                prev = cur;
                cur = next;
            }
            acc = &acc * &cur;
        }
        Ok(acc)
    }

    /// The q-expansion Σ_{n≥1} a_n q^n to precision N (cuspidal: a_0 = 0).
    pub fn to_qexp(&self, n_prec: usize) -> Result<QExpansion<CycK>> {
        let mut coeffs = vec![CycK::zero(); n_prec + 1];
        for (n, slot) in coeffs.iter_mut().enumerate().skip(1) {
            *slot = self.coefficient(n as u64)?;
        }
        Ok(QExpansion::new(
            coeffs,
            self.weight,
            self.level,
            self.neben.clone(),
            CycK::zero(),
        ))
    }

    /// Growth certificate for CM eigenform coefficients: the number of ideals
    /// of norm n is Σ_{d|n} χ_D(d) ≤ n+1, and each character value has
    /// absolute value n^{(w−1)/2}, so |a_n| ≤ (n+1)^{⌊w/2⌋+1}.
    pub fn growth(&self) -> GrowthBound {
        GrowthBound::new(BigRational::one(), (self.weight / 2 + 1) as u32)
    }
}

/// CM theta series of a Hecke character ψ of infinity type (e, 0) with
/// conductor dividing (δ): the q-expansion Σ_𝔞 ψ(𝔞) q^{N𝔞} together with its
/// eigenvalue system a_q = ψ(𝔮) + ψ(𝔮̄) / 0 / ψ(𝔮) for split/inert/ramified q.
/// The form has weight e+1; its nebentypus is ω_{K/ℚ} for unramified ψ and
/// the principal character mod D² when ψ carries the quadratic ramified part.
pub fn theta_cm(
    field: &FieldData,
    psi: &ClassicalHeckeChar,
    n_prec: usize,
) -> Result<(EigenformData, QExpansion<CycK>)> {
    let (a_inf, b_inf) = psi.infinity_type;
    if b_inf != 0 || a_inf < 1 {
        return Err(Error::Invalid(format!(
            "theta_cm needs infinity type (e, 0) with e ≥ 1, got ({}, {})",
            a_inf, b_inf
        )));
    }
    let weight = a_inf + 1;
    let delta = KElement::delta(field);
    let delta_ideal = Ideal::principal(field, &delta)?;
    let cond = psi.conductor()?;
    let quot = delta_ideal.mul(&cond.inverse())?;
    if !quot.scale.is_integer() {
        return Err(Error::Invalid(
            "theta_cm needs conductor dividing (δ)".into(),
        ));
    }
    let d_abs = field.disc.unsigned_abs();
    let (neben, level) = match &psi.finite_part {
        FinitePart::Trivial => (
            Neben {
                kron_d: field.disc,
                level: d_abs,
            },
            d_abs,
        ),
        FinitePart::Product(factors) => {
            let quad = factors.len() == 1 && factors[0].order() == 2 && cond == delta_ideal;
            if !quad {
                return Err(Error::Unsupported(
                    "theta_cm handles trivial or quadratic-(δ) finite parts".into(),
                ));
            }
            // The residue character restricted to ℤ is ω_{K/ℚ}; together with
            // the ideal-norm character the nebentypus is principal mod D².
            (
                Neben {
                    kron_d: 0,
                    level: d_abs * d_abs,
                },
                d_abs * d_abs,
            )
        }
    };

    // Direct enumeration of the expansion by ideals of each norm.
    let mut coeffs = vec![CycK::zero(); n_prec + 1];
    for (n, slot) in coeffs.iter_mut().enumerate().skip(1) {
        let mut acc = CycK::zero();
        for a in crate::imquad::ideals_of_norm(field, n as u64) {
            acc = &acc + &psi.eval(&a)?;
        }
        *slot = acc;
    }
    let expansion = QExpansion::new(coeffs, weight, level, neben.clone(), CycK::zero());

    // Eigenvalue system from ψ at primes.
    let mut ap = BTreeMap::new();
    for q in 2..=(n_prec as u64) {
        if !is_prime(q) {
            continue;
        }
        let val = match prime_split(field, q)? {
            SplitType::Inert(_) => CycK::zero(),
            SplitType::Split(_, _) | SplitType::Ramified(_) => {
                let mut acc = CycK::zero();
                for pid in crate::imquad::ideals_of_norm(field, q) {
                    acc = &acc + &psi.eval(&pid)?;
                }
                acc
            }
        };
        ap.insert(q, val);
    }
    let data = EigenformData {
        field: field.clone(),
        weight,
        level,
        neben,
        psi: Some(psi.clone()),
        ap,
        stabilized: None,
    };
    Ok((data, expansion))
}

/// p-stabilization of an ordinary CM eigenform: replaces a_p by the unit root
/// α_p of X² − a_p X + p^{w−1} (the roots are ψ(𝔭) and ψ(𝔭̄)), raises the
/// level by p, and afterwards U_p acts with eigenvalue α_p. Rejects inert p
/// (a_p = 0 is never ordinary) and double-checks Vieta's relations exactly.
pub fn p_stabilize(f: &EigenformData, p: u64, prec: i64) -> Result<EigenformData> {
    if f.level.is_multiple_of(p) {
        return Err(Error::Invalid(format!("level already divisible by {}", p)));
    }
    let psi = f
        .psi
        .as_ref()
        .ok_or_else(|| Error::Unsupported("p-stabilization needs CM character data".into()))?;
    if !matches!(prime_split(&f.field, p)?, SplitType::Split(_, _)) {
        return Err(Error::Invalid(format!(
            "{} does not split: a_p is not a unit (non-ordinary)",
            p
        )));
    }
    let primes = crate::imquad::ideals_of_norm(&f.field, p);
    assert_eq!(primes.len(), 2, "split prime has two ideals of norm p");
    let r1 = psi.eval(&primes[0])?;
    let r2 = psi.eval(&primes[1])?;
    // Vieta against the Hecke polynomial X² − a_p X + p^{w−1}.
    let ap = f.eigenvalue(p)?;
    if &r1 + &r2 != ap {
        return Err(Error::Invalid("character roots do not sum to a_p".into()));
    }
    let pw = CycK::from_rational(BigRational::from_integer(
        BigInt::from(p).pow((f.weight - 1) as u32),
    ));
    if &r1 * &r2 != pw {
        return Err(Error::Invalid(
            "character roots do not multiply to p^{w−1}".into(),
        ));
    }
    // Unit root under ι_𝔭.
    let b_res = crate::arith::roots_quadratic_mod(f.field.t, f.field.n, p)
        .into_iter()
        .next()
        .ok_or_else(|| Error::Invalid("no τ-residue at split p".into()))? as i64;
    let tau_p = crate::padic::iota_tau(p, f.field.t, f.field.n, b_res, prec)?;
    let v1 = r1.embed_padic(&tau_p, prec)?.valuation()?;
    let v2 = r2.embed_padic(&tau_p, prec)?.valuation()?;
    let (alpha, beta_val) = if v1 == 0 {
        (r1.clone(), v2)
    } else if v2 == 0 {
        (r2.clone(), v1)
    } else {
        return Err(Error::Invalid(
            "both Hecke roots are non-units: non-ordinary".into(),
        ));
    };
    if beta_val != f.weight - 1 {
        return Err(Error::Invalid(format!(
            "non-unit root has valuation {}, expected {}",
            beta_val,
            f.weight - 1
        )));
    }
    let mut ap_new = f.ap.clone();
    ap_new.insert(p, alpha.clone());
    Ok(EigenformData {
        field: f.field.clone(),
        weight: f.weight,
        level: f.level * p,
        neben: Neben {
            kron_d: f.neben.kron_d,
            level: f.neben.level * p,
        },
        psi: f.psi.clone(),
        ap: ap_new,
        stabilized: Some((p, alpha)),
    })
}

/// Convergence report of the ordinary projector.
#[derive(Clone, Debug)]
pub struct OrdinaryReport {
    /// Degree of the detected U_p-relation on the Krylov span.
    pub relation_degree: usize,
    /// Monic relation X^d = Σ c_i X^i: the c_0..c_{d−1}, mod p^certified_prec.
    pub relation: Vec<BigUint>,
    /// p-adic precision certified for the relation and the output: the
    /// working precision minus the valuation lost to non-unit pivots.
    pub certified_prec: i64,
    /// Factorial steps until X^{m!} stabilized to an idempotent.
    pub factorial_steps: u64,
    /// Verified e(U_p)² g = e(U_p) g on this many coefficients.
    pub fixed_checked: usize,
}

fn poly_mul_mod(a: &[BigUint], b: &[BigUint], rel: &[BigUint], pe: &BigUint) -> Vec<BigUint> {
    let d = rel.len();
    let mut prod = vec![BigUint::zero(); 2 * d];
    for (i, ai) in a.iter().enumerate() {
        if ai.is_zero() {
            continue;
        }
        for (j, bj) in b.iter().enumerate() {
            prod[i + j] = (&prod[i + j] + ai * bj) % pe;
        }
    }
    // Reduce X^{d+k} ↦ Σ c_i X^{i+k} from the top down.
    for top in (d..2 * d).rev() {
        let lead = prod[top].clone();
        if lead.is_zero() {
            continue;
        }
        prod[top] = BigUint::zero();
        for i in 0..d {
            prod[top - d + i] = (&prod[top - d + i] + &lead * &rel[i]) % pe;
        }
    }
    prod.truncate(d);
    prod
}

/// Solve Σ c_i·cols[i] = rhs over ℤ/p^e by Gauss–Jordan elimination with
/// valuation-minimal pivots. A pivot of valuation v costs v digits of
/// certainty for that variable; the returned solution is certified mod
/// p^{e − max v} (also returned). None when the system is inconsistent at
/// the certified precision or no usable pivot exists.
fn solve_valuation_pivot(
    cols: &[Vec<BigUint>],
    rhs: &[BigUint],
    p: u64,
    e: i64,
) -> Option<(Vec<BigUint>, i64)> {
    let ncols = cols.len();
    let nrows = rhs.len();
    let pb = BigUint::from(p);
    let pe = pb.pow(e as u32);
    let val_of = |x: &BigUint| -> i64 {
        if x.is_zero() {
            return e;
        }
        let mut v = 0i64;
        let mut y = x.clone();
        while v < e && (&y % &pb).is_zero() {
            y = &y / &pb;
            v += 1;
        }
        v
    };
    let inv_unit = |u: &BigUint| -> BigUint {
        let (g, s, _) =
            crate::arith::ext_gcd_big(&BigInt::from(u.clone()), &BigInt::from(pe.clone()));
        assert!(g.is_one(), "pivot unit part must be invertible");
        s.mod_floor(&BigInt::from(pe.clone())).to_biguint().unwrap()
    };
    // Augmented rows: [cols.., rhs].
    let mut m: Vec<Vec<BigUint>> = (0..nrows)
        .map(|r| {
            let mut row: Vec<BigUint> = (0..ncols).map(|c| cols[c][r].clone()).collect();
            row.push(rhs[r].clone());
            row
        })
        .collect();
    let mut used = vec![false; nrows];
    // (row, valuation, inverse of the unit part) per pivoted column.
    let mut pivots: Vec<Option<(usize, i64, BigUint)>> = vec![None; ncols];
    let mut loss = 0i64;
    for c in 0..ncols {
        let mut best: Option<(usize, i64)> = None;
        for (r, row) in m.iter().enumerate() {
            if used[r] {
                continue;
            }
            let v = val_of(&row[c]);
            if v < e && best.is_none_or(|(_, bv)| v < bv) {
                best = Some((r, v));
            }
        }
        let Some((r0, v)) = best else {
            // Column vanished mod p^e: leave the variable free (zero).
            continue;
        };
        used[r0] = true;
        let unit = &m[r0][c] / pb.pow(v as u32);
        let uinv = inv_unit(&unit);
        pivots[c] = Some((r0, v, uinv.clone()));
        loss += v;
        let pivot_row = m[r0].clone();
        let pv = pb.pow(v as u32);
        // Forward elimination on unused rows only: there the entry has
        // valuation ≥ v by pivot choice, so (a·u⁻¹)/p^v is integral and the
        // row operation is exact mod p^e. Pivot rows keep their trailing
        // columns for back-substitution (their entries may have smaller
        // valuation than a later pivot, so eliminating there would not be
        // exact).
        for (r, row) in m.iter_mut().enumerate() {
            if used[r] {
                continue;
            }
            let a = &row[c];
            if a.is_zero() {
                continue;
            }
            let scaled = (a * &uinv) % &pe;
            let mult = &scaled / &pv;
            if mult.is_zero() {
                continue;
            }
            for k in 0..=ncols {
                let sub = (&mult * &pivot_row[k]) % &pe;
                row[k] = (&row[k] + &pe - sub) % &pe;
            }
        }
    }
    // Each division by p^v costs v digits; along a back-substitution chain
    // the losses accumulate, so certify e minus their sum.
    let cert = e - loss;
    if cert < 1 || pivots.iter().all(|p| p.is_none()) {
        return None;
    }
    let pcert = pb.pow(cert as u32);
    // Back-substitution in reverse column order: on a pivot row, columns
    // left of its pivot were eliminated while it was still unused, and
    // columns right of it are already solved.
    let mut sol = vec![BigUint::zero(); ncols];
    for c in (0..ncols).rev() {
        let Some((r, v, uinv)) = &pivots[c] else {
            continue;
        };
        let mut acc = m[*r][ncols].clone();
        for c2 in (c + 1)..ncols {
            if sol[c2].is_zero() || m[*r][c2].is_zero() {
                continue;
            }
            let sub = (&m[*r][c2] * &sol[c2]) % &pe;
            acc = (&acc + &pe - sub) % &pe;
        }
        let q = (&acc * uinv) % &pe;
        let pv = pb.pow(*v as u32);
        if !(&q % &pv).is_zero() {
            return None; // inconsistent: rhs not divisible by the pivot
        }
        sol[c] = (&q / &pv) % &pcert;
    }
    // Verify the relation mod p^cert across every row.
    for r in 0..nrows {
        let mut acc = BigUint::zero();
        for c in 0..ncols {
            acc = (acc + &sol[c] * &cols[c][r]) % &pcert;
        }
        if acc != (&rhs[r] % &pcert) {
            return None;
        }
    }
    Some((sol, cert))
}

/// Hida's ordinary projector e_ord = lim U_p^{m!} on a capped p-adic
/// expansion. A U_p-relation of degree ≤ max_degree is detected on the
/// Krylov span mod p^{p_prec} (valuation-minimal pivots; digits lost to
/// non-unit pivots are reported, not hidden); in (ℤ/p^cert)[X]/(relation)
/// the powers X^{m!} stabilize to an idempotent, which is then applied as a
/// polynomial in U_p. Errors: insufficient q-precision, no certified
/// relation, or no stabilization within `step_budget` factorial steps.
pub fn ordinary_projector(
    g: &QExpansion<Padic>,
    p: u64,
    p_prec: i64,
    max_degree: usize,
    step_budget: u64,
) -> Result<(QExpansion<Padic>, OrdinaryReport)> {
    assert!(p_prec >= 1 && max_degree >= 1);
    // Krylov chain of expansions.
    let mut chain = vec![g.clone()];
    for _ in 0..max_degree {
        let prev = chain.last().unwrap();
        chain.push(prev.u_q(p));
    }
    let rows = chain.last().unwrap().n_prec() + 1;
    if rows < max_degree + 2 {
        return Err(Error::Precision(format!(
            "ordinary projector at degree {} needs q-precision ≥ {}, have {}",
            max_degree,
            BigUint::from(p).pow(max_degree as u32) * BigUint::from(max_degree as u64 + 2),
            g.n_prec()
        )));
    }
    let residues: Vec<Vec<BigUint>> = chain
        .iter()
        .map(|v| (0..rows).map(|i| v.coeffs[i].residue(p_prec)).collect())
        .collect();

    // Smallest d with U_p^d g ∈ span(g, …, U_p^{d−1} g) at certified precision.
    let mut relation: Option<(usize, Vec<BigUint>, i64)> = None;
    for d in 1..=max_degree {
        if let Some((sol, cert)) = solve_valuation_pivot(&residues[..d], &residues[d], p, p_prec) {
            relation = Some((d, sol, cert));
            break;
        }
    }
    let (d, rel, cert) = relation.ok_or_else(|| {
        Error::Unsupported(format!(
            "no certified U_p-relation of degree ≤ {} mod p^{}",
            max_degree, p_prec
        ))
    })?;
    let pe_cert = BigUint::from(p).pow(cert as u32);
    let rel: Vec<BigUint> = rel.iter().map(|c| c % &pe_cert).collect();

    // Idempotent: z = X^{k!} in (ℤ/p^cert)[X]/(X^d − Σ rel_i X^i), iterated
    // z ← z^k until fixed and idempotent.
    let mut z = vec![BigUint::zero(); d];
    if d == 1 {
        z[0] = rel[0].clone();
    } else {
        z[1] = BigUint::one();
    }
    let mut steps = 1u64;
    let mut converged = false;
    for k in 2..=step_budget {
        // z ← z^k by square-and-multiply.
        let mut base = z.clone();
        let mut acc = {
            let mut e0 = vec![BigUint::zero(); d];
            e0[0] = BigUint::one();
            e0
        };
        let mut exp = k;
        while exp > 0 {
            if exp & 1 == 1 {
                acc = poly_mul_mod(&acc, &base, &rel, &pe_cert);
            }
            base = poly_mul_mod(&base, &base, &rel, &pe_cert);
            exp >>= 1;
        }
        steps = k;
        if acc == z {
            let sq = poly_mul_mod(&acc, &acc, &rel, &pe_cert);
            if sq == acc {
                converged = true;
                break;
            }
        }
        z = acc;
    }
    if !converged {
        return Err(Error::Budget(format!(
            "ordinary projector did not stabilize within {} factorial steps",
            step_budget
        )));
    }

    // Apply e(U_p) = Σ z_i U_p^i at the output precision ⌊N/p^{d−1}⌋.
    let out_prec = chain[d - 1].n_prec();
    let apply = |zp: &[BigUint], source: &[QExpansion<Padic>], len: usize| -> Vec<Padic> {
        let mut out = vec![Padic::zero_to(p, cert); len + 1];
        for (i, zi) in zp.iter().enumerate() {
            if zi.is_zero() {
                continue;
            }
            let s = Padic::from_bigint(p, &BigInt::from(zi.clone()), cert);
            for (m, slot) in out.iter_mut().enumerate() {
                let term = &s * &source[i].coeffs[m];
                *slot = &*slot + &term;
            }
        }
        out.iter().map(|c| c.cap_abs_prec(cert)).collect()
    };
    let projected = QExpansion::new(
        apply(&z, &chain, out_prec),
        g.weight,
        g.level,
        g.neben.clone(),
        Padic::zero_to(p, cert),
    );

    // Fixed-point verification on the overlap: e(U_p)·(e(U_p) g) = e(U_p) g.
    let mut chain2 = vec![projected.clone()];
    for _ in 1..d {
        let prev = chain2.last().unwrap();
        chain2.push(prev.u_q(p));
    }
    let out2 = chain2.last().unwrap().n_prec();
    let twice = apply(&z, &chain2, out2);
    for (m, c) in twice.iter().enumerate() {
        assert_eq!(
            c.residue(cert),
            projected.coeffs[m].residue(cert),
            "projector fixed-point failed at q^{}",
            m
        );
    }

    Ok((
        projected,
        OrdinaryReport {
            relation_degree: d,
            relation: rel,
            certified_prec: cert,
            factorial_steps: steps,
            fixed_checked: twice.len(),
        },
    ))
}

/// The normalized Eisenstein series E_{p−1} = 1 − (2(p−1)/B_{p−1}) Σ σ_{p−2}(n) qⁿ
/// of weight p−1 and level 1; its non-constant coefficients all have positive
/// p-valuation, so E_{p−1} ≡ 1 mod p.
pub fn eisenstein_ep_minus_1<S: Coeff>(p: u64, n_prec: usize, proto: &S) -> QExpansion<S> {
    assert!(p >= 5 && is_prime(p), "E_(p-1) needs a prime p ≥ 5");
    let bern = crate::arith::bernoulli_upto((p - 1) as usize);
    let b = &bern[(p - 1) as usize];
    let c = -big(2 * (p as i64 - 1)) / b;
    let mut coeffs = Vec::with_capacity(n_prec + 1);
    coeffs.push(proto.embed_ratio(&BigRational::one()));
    for n in 1..=n_prec {
        let s = BigRational::from_integer(sigma_k(n as u64, (p - 2) as u32));
        coeffs.push(proto.embed_ratio(&(&c * s)));
    }
    QExpansion::new(coeffs, p as i64 - 1, 1, Neben::trivial(), proto.clone())
}

/// Evaluate the intrinsic theta lattice sum ϑ_𝔠(w, τ) = Σ_{a∈𝔠}
/// q^{N(a)/N𝔠}·e^{2πi·σ(a)·w} as a ball, with a rigorous geometric tail
/// bound. The shell cutoff adapts to Im τ and |w|; errors when the tail
/// cannot be certified below 2^{−prec−8}.
pub fn theta_lattice_eval(
    lat: &Ideal,
    w: &ComplexBall,
    tau: &ComplexBall,
    prec: i64,
) -> Result<ComplexBall> {
    let work = prec + 32;
    let y_low = {
        let lo = tau.im.mid.clone() - tau.im.rad.clone();
        if lo.is_negative() || lo.is_zero() {
            return Err(Error::Precision("Im τ not certified positive".into()));
        }
        lo
    };
    let w_up = w.upper_abs().to_rational();
    let norm_l = lat.norm();
    let c0 = lattice_count_coefficient(lat);

    // Shell-term majorant B(n) = c₀(n+1)·exp(2π(w_up·√(n·N𝔠) − n·y_low)): the
    // shell-n terms sum to at most B(n), and B(n+1)/B(n) decreases in n.
    let y_low_rat = y_low.to_rational();
    let bound_at = |n: i64| -> Dyadic {
        let nn = RealBall::from_rational(&(big(n) * &norm_l), 64);
        let root = nn.sqrt().expect("nonneg").mul_rational(&w_up);
        let lin = RealBall::from_rational(&(&y_low_rat * big(n)), 64);
        let arg = (root - lin) * two_pi(64);
        let count = RealBall::from_rational(&(&c0 * big(n + 1)), 64);
        (count * arg.exp()).upper_abs()
    };
    // Upper bound on B(n+1)/B(n) for every n ≥ n₀, via √(n+1) − √n ≤ 1/(2√n)
    // and (n+2)/(n+1) decreasing.
    let ratio_up = |n0: i64| -> Dyadic {
        let quarter = RealBall::from_rational(&(&w_up * &w_up * &norm_l / big(4 * n0)), 64);
        let root = quarter.sqrt().expect("nonneg");
        let lin = RealBall::from_rational(&y_low_rat, 64);
        let arg = (root - lin) * two_pi(64);
        let frac = big(n0 + 2) / big(n0 + 1);
        arg.exp().mul_rational(&frac).upper_abs()
    };
    let tol = Dyadic::pow2(-(prec + 8));
    let one_dy = Dyadic::one();
    let mut cut: i64 = 4;
    let tail = loop {
        let b_next = bound_at(cut + 1);
        let r = ratio_up(cut + 1);
        if r.cmp_val(&one_dy) == Ordering::Less {
            let gap = one_dy.clone() - r;
            let t = b_next.div(&gap, 32, Dir::Up);
            if t.cmp_val(&tol) != Ordering::Greater {
                break t;
            }
        }
        cut += cut / 2 + 2;
        if cut > (1 << 22) {
            return Err(Error::Precision(
                "theta tail not certifiable: Im τ too small for this precision".into(),
            ));
        }
    };

    let q = q_at(tau, work);
    let two_pi_i = ComplexBall::new(RealBall::zero(work), two_pi(work));
    let mut qpows = Vec::with_capacity(cut as usize + 1);
    qpows.push(ComplexBall::one(work));
    for n in 1..=cut {
        let prev = qpows[(n - 1) as usize].clone();
        qpows.push(prev * q.clone());
    }
    let bound_norm = &norm_l * big(cut);
    let mut acc = ComplexBall::zero(work);
    for a in ideal_points_up_to(lat, &bound_norm) {
        let n_idx = (a.norm() / &norm_l)
            .to_integer()
            .to_usize()
            .expect("shell index fits");
        let sigma_a = CycK::from_k(a).embed_sigma(work);
        let phase = (two_pi_i.clone() * sigma_a * w.clone()).exp();
        acc = acc + qpows[n_idx].clone() * phase;
    }
    Ok(ComplexBall::new(acc.re.widen(&tail), acc.im.widen(&tail)))
}
