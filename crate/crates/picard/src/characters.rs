//! Hecke characters of the imaginary quadratic field in three guises:
//! classical (exact values in K(ζ)), p-adic (values in ℚ_p through the fixed
//! split prime 𝔭), and Λ-adic (the interpolation family Ξ whose weight-k
//! specializations are the classical weight-k characters).
//!
//! A classical character φ of conductor 𝔣 and infinity type (a, b) satisfies
//! φ(λ𝒪) = φ_fin(λ)·λ^a·λ̄^b on principal ideals coprime to 𝔣. Characters are
//! stored by their structured data (conductor residue factors + infinity
//! type); evaluation runs through a principal generator, so exact evaluation
//! is supported on the class groups where generators exist (trivial class
//! group for the fields used by the lift).

use crate::arith::primitive_root;
use crate::cyc::CycK;
use crate::imquad::{
    principal_generator, prime_split, FieldData, Ideal, KElement, SplitType,
};
use crate::padic::{iota_tau, teichmuller, ArithmeticPoint, LambdaElement, Padic};
use crate::{Error, Result};
use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use std::fmt;

/// Teichmüller root of unity in ℤ_p: the canonical lift of u mod p.
pub fn teichmuller_char(u: u64, p: u64, prec: i64) -> Padic {
    teichmuller(u, p, prec)
}

/// One cyclic factor of a finite part: a character of (𝒪_K/𝔮)^× ≅ 𝔽_ℓ^× for
/// a degree-one prime 𝔮 above ℓ with τ ≡ tau_res (mod 𝔮), sending the fixed
/// generator g = primitive_root(ℓ) to ζ_{ℓ−1}^{power}.
#[derive(Clone, Debug, PartialEq)]
pub struct ResidueFactor {
    pub modulus: u64,
    pub tau_res: i64,
    pub power: i64,
}

impl ResidueFactor {
    /// Effective order of this factor (1 means it is trivial and droppable).
    pub fn order(&self) -> u64 {
        let m = self.modulus - 1;
        let pw = self.power.rem_euclid(m as i64) as u64;
        if pw == 0 {
            1
        } else {
            m / m.gcd(&pw)
        }
    }

    /// Value on the residue class of (x + y·τ)/c, all integers, c coprime
    /// to the modulus.
    fn eval(&self, x: &BigInt, y: &BigInt, c: &BigInt) -> Result<CycK> {
        let m = BigInt::from(self.modulus);
        let r = (x + y * BigInt::from(self.tau_res)).mod_floor(&m);
        let cm = c.mod_floor(&m);
        if r.is_zero() {
            return Err(Error::Invalid(
                "residue not invertible: element meets the conductor".into(),
            ));
        }
        if cm.is_zero() {
            return Err(Error::Invalid(
                "denominator meets the conductor residue field".into(),
            ));
        }
        let ell = self.modulus;
        let rv = r.to_u64().unwrap();
        let cv = cm.to_i64().unwrap();
        let cinv = crate::arith::inv_mod(cv, ell as i64).ok_or_else(|| {
            Error::Invalid("denominator not invertible mod conductor".into())
        })?;
        let res = crate::arith::mul_mod(rv, cinv.rem_euclid(ell as i64) as u64, ell);
        let g = primitive_root(ell);
        let k = dlog(ell, g, res)?;
        let ord = ell - 1;
        let e = (self.power.rem_euclid(ord as i64) as u64 * (k % ord)) % ord;
        Ok(CycK::zeta(ord, e))
    }
}

/// Discrete logarithm base g in 𝔽_ℓ^× by direct scan (ℓ is small).
fn dlog(ell: u64, g: u64, x: u64) -> Result<u64> {
    let mut acc = 1u64;
    for k in 0..ell - 1 {
        if acc == x % ell {
            return Ok(k);
        }
        acc = crate::arith::mul_mod(acc, g, ell);
    }
    Err(Error::Invalid(format!("dlog of {x} mod {ell} not found")))
}

/// Finite part of a Hecke character: trivial or a product of cyclic residue
/// factors at degree-one primes (distinct primes may share the same rational
/// prime ℓ, e.g. 𝔭 and 𝔭̄ above p).
#[derive(Clone, Debug, PartialEq)]
pub enum FinitePart {
    Trivial,
    Product(Vec<ResidueFactor>),
}

impl FinitePart {
    fn factors(&self) -> &[ResidueFactor] {
        match self {
            FinitePart::Trivial => &[],
            FinitePart::Product(v) => v,
        }
    }

    /// Drop trivial factors and collapse to `Trivial` when empty.
    pub fn normalized(self) -> FinitePart {
        match self {
            FinitePart::Trivial => FinitePart::Trivial,
            FinitePart::Product(v) => {
                let kept: Vec<ResidueFactor> =
                    v.into_iter().filter(|f| f.order() > 1).collect();
                if kept.is_empty() {
                    FinitePart::Trivial
                } else {
                    FinitePart::Product(kept)
                }
            }
        }
    }

    fn eval(&self, lam: &KElement) -> Result<CycK> {
        let (x, y, c) = clear_denominators(lam);
        let mut acc = CycK::one();
        for f in self.factors() {
            acc = &acc * &f.eval(&x, &y, &c)?;
        }
        Ok(acc)
    }
}

/// Write λ = (x + y·τ)/c with integral x, y and positive integer c.
fn clear_denominators(lam: &KElement) -> (BigInt, BigInt, BigInt) {
    let c = lam.x.denom().lcm(lam.y.denom());
    let x = (&lam.x * BigRational::from_integer(c.clone())).to_integer();
    let y = (&lam.y * BigRational::from_integer(c.clone())).to_integer();
    (x, y, c)
}

/// A classical Hecke character: conductor (as its residue factors), infinity
/// type (a, b), evaluated exactly in K(ζ).
///
/// `zeta_pin = Some((ℓ, r))` records the identification under which the
/// formal root-of-unity symbols are read: ζ-powers are Teichmüller lifts
/// ω(·) ∈ ℤ_ℓ through the embedding of K with τ ≡ r mod the pinned prime
/// above ℓ. This matters only when K meets ℚ(ζ) (then formal values are not
/// canonically complex numbers); the pin is how well-definedness on units is
/// decided in that case.
#[derive(Clone, Debug)]
pub struct ClassicalHeckeChar {
    pub field: FieldData,
    pub infinity_type: (i64, i64),
    pub finite_part: FinitePart,
    pub zeta_pin: Option<(u64, i64)>,
}

impl ClassicalHeckeChar {
    /// Construct and verify well-definedness: φ_fin(u)·u^a·ū^b = 1 for every
    /// unit u of 𝒪_K.
    pub fn new(
        field: &FieldData,
        infinity_type: (i64, i64),
        finite_part: FinitePart,
    ) -> Result<Self> {
        ClassicalHeckeChar::new_pinned(field, infinity_type, finite_part, None)
    }

    /// As [`ClassicalHeckeChar::new`], with an explicit ζ-identification pin.
    pub fn new_pinned(
        field: &FieldData,
        infinity_type: (i64, i64),
        finite_part: FinitePart,
        zeta_pin: Option<(u64, i64)>,
    ) -> Result<Self> {
        let ch = ClassicalHeckeChar {
            field: field.clone(),
            infinity_type,
            finite_part: finite_part.normalized(),
            zeta_pin,
        };
        for u in unit_group(field) {
            let v = ch.value_on_element(&u)?;
            if v == CycK::one() {
                continue;
            }
            // The formal ring K[x]/Φ_M cannot see coincidences like ζ_4 = ±τ
            // over ℚ(i). When K meets ℚ(ζ), decide equality canonically under
            // the p-adic identification pinned by the conductor prime itself:
            // roots of unity of order prime to p are distinct mod p, so
            // agreement mod p² certifies equality.
            if !ch.unit_value_is_one_padically(&v)? {
                return Err(Error::Invalid(format!(
                    "character not well-defined: value {v} ≠ 1 on unit {u}"
                )));
            }
        }
        Ok(ch)
    }

    /// Decide whether a unit-check value (a root of unity in K(ζ)) equals 1
    /// under the pinned identification (falling back to the single conductor
    /// modulus pinning its own prime). Rigorous: roots of unity of order
    /// prime to ℓ are distinct mod ℓ, so agreement mod ℓ² certifies equality.
    fn unit_value_is_one_padically(&self, v: &CycK) -> Result<bool> {
        let factors = self.finite_part.factors();
        let (ell, r) = match self.zeta_pin {
            Some(pin) => pin,
            None => {
                if factors.is_empty() {
                    return Ok(false);
                }
                let ell = factors[0].modulus;
                if factors.iter().any(|f| f.modulus != ell) {
                    return Ok(false);
                }
                (ell, factors[0].tau_res)
            }
        };
        let prec = 8;
        let tau_ell = match iota_tau(ell, self.field.t, self.field.n, -r, prec) {
            Ok(t) => t,
            Err(_) => return Ok(false), // ramified: no canonical ι into ℚ_ℓ
        };
        let img = match v.embed_padic(&tau_ell, prec) {
            Ok(x) => x,
            Err(_) => return Ok(false),
        };
        img.agree_mod(&Padic::from_i64(ell, 1, prec), 2)
    }

    /// The norm character: infinity type (1,1), unramified.
    pub fn norm_char(field: &FieldData) -> Self {
        ClassicalHeckeChar::new(field, (1, 1), FinitePart::Trivial)
            .expect("norm character is always well-defined")
    }

    /// The trivial character.
    pub fn trivial(field: &FieldData) -> Self {
        ClassicalHeckeChar::new(field, (0, 0), FinitePart::Trivial)
            .expect("trivial character is always well-defined")
    }

    /// The adelic absolute value as a classical character: infinity type
    /// (−1,−1), inverse of the norm.
    pub fn adelic_abs(field: &FieldData) -> Self {
        ClassicalHeckeChar::new(field, (-1, -1), FinitePart::Trivial)
            .expect("absolute value is always well-defined")
    }

    /// The unramified weight-k character χ (infinity type (−k/2, k/2), trivial
    /// finite part): χ(λ𝒪) = (λ̄/λ)^{k/2}. Exists iff w_K | k; for a
    /// non-trivial class group exact values would leave K(ζ), so construction
    /// is restricted to class number one.
    pub fn weight_char(field: &FieldData, k: i64) -> Result<Self> {
        if k.rem_euclid(2) != 0 {
            return Err(Error::Invalid("weight character needs even weight".into()));
        }
        if field.hk != 1 {
            return Err(Error::Unsupported(
                "weight characters on a non-trivial class group do not take values in a \
                 cyclotomic extension of K; only class number one is represented exactly"
                    .into(),
            ));
        }
        ClassicalHeckeChar::new(field, (-k / 2, k / 2), FinitePart::Trivial)
    }

    /// Weight in the (−k/2, k/2) convention, if the type has that shape.
    pub fn weight(&self) -> Option<i64> {
        let (a, b) = self.infinity_type;
        if a == -b {
            Some(2 * b)
        } else {
            None
        }
    }

    /// φ_fin(λ)·λ^a·λ̄^b on an explicit field element (the principal-ideal
    /// formula, used both for evaluation and the unit well-definedness check).
    pub fn value_on_element(&self, lam: &KElement) -> Result<CycK> {
        let (a, b) = self.infinity_type;
        let fin = self.finite_part.eval(lam)?;
        let inf = lam.pow(a)?.clone() * lam.conj().pow(b)?;
        Ok(fin.scale_k(&inf))
    }

    /// Conductor as an ideal (product of the residue-factor primes).
    pub fn conductor(&self) -> Result<Ideal> {
        let mut c = Ideal::unit(&self.field);
        for f in self.finite_part.factors() {
            let q = prime_of_residue(&self.field, f)?;
            c = c.mul(&q)?;
        }
        Ok(c)
    }

    /// Exact evaluation on a fractional ideal: 0 if not coprime to the
    /// conductor, otherwise through a principal generator.
    pub fn eval(&self, a: &Ideal) -> Result<CycK> {
        for f in self.finite_part.factors() {
            let q = prime_of_residue(&self.field, f)?;
            if valuation_at_prime(&self.field, a, &q)? != 0 {
                return Ok(CycK::zero());
            }
        }
        // If a residue prime ℓ divides the generator's denominator (possible
        // when the conjugate prime 𝔭̄ ∤ 𝔣 appears in the denominator), clear
        // it by multiplying with an integral coprime ideal first.
        let mut work = a.clone();
        let mut correction = CycK::one();
        for f in self.finite_part.factors() {
            let ell = f.modulus;
            let mut guard = 0;
            loop {
                let lam = principal_generator(&self.field, &work).ok_or_else(|| {
                    Error::Unsupported(
                        "exact character evaluation needs a principal ideal (class number one)"
                            .into(),
                    )
                })?;
                let (_, _, c) = clear_denominators(&lam);
                if !(&c % BigInt::from(ell)).is_zero() {
                    break;
                }
                // Multiply by the conjugate prime above ℓ (integral, coprime
                // to 𝔣 since the 𝔣-primes cannot divide a coprime ideal's
                // denominator) and remember to divide the value back out.
                let q = prime_of_residue(&self.field, f)?;
                let qbar = q.conj();
                work = work.mul(&qbar)?;
                let mu = principal_generator(&self.field, &qbar).ok_or_else(|| {
                    Error::Unsupported("class number one required".into())
                })?;
                correction = &correction * &self.value_on_element(&mu)?.inv()?;
                guard += 1;
                if guard > 64 {
                    return Err(Error::Invalid(
                        "could not clear conductor primes from denominator".into(),
                    ));
                }
            }
        }
        let lam = principal_generator(&self.field, &work).ok_or_else(|| {
            Error::Unsupported(
                "exact character evaluation needs a principal ideal (class number one)".into(),
            )
        })?;
        Ok(&self.value_on_element(&lam)? * &correction)
    }

    /// Pointwise product (conductors merge; well-definedness is rechecked).
    pub fn product(&self, other: &ClassicalHeckeChar) -> Result<ClassicalHeckeChar> {
        let mut factors: Vec<ResidueFactor> = self.finite_part.factors().to_vec();
        for f in other.finite_part.factors() {
            if let Some(existing) = factors
                .iter_mut()
                .find(|g| g.modulus == f.modulus && g.tau_res == f.tau_res)
            {
                existing.power += f.power;
            } else {
                factors.push(f.clone());
            }
        }
        let pin = match (self.zeta_pin, other.zeta_pin) {
            (Some(a), Some(b)) if a != b => {
                return Err(Error::Invalid(
                    "cannot multiply characters pinned to different identifications".into(),
                ))
            }
            (a, b) => a.or(b),
        };
        ClassicalHeckeChar::new_pinned(
            &self.field,
            (
                self.infinity_type.0 + other.infinity_type.0,
                self.infinity_type.1 + other.infinity_type.1,
            ),
            FinitePart::Product(factors).normalized(),
            pin,
        )
    }
}

impl fmt::Display for ClassicalHeckeChar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "type ({}, {})",
            self.infinity_type.0, self.infinity_type.1
        )?;
        match &self.finite_part {
            FinitePart::Trivial => write!(f, ", unramified"),
            FinitePart::Product(v) => {
                for fac in v {
                    write!(
                        f,
                        ", [mod {} τ≡{} power {}]",
                        fac.modulus, fac.tau_res, fac.power
                    )?;
                }
                Ok(())
            }
        }
    }
}

/// The unit group of 𝒪_K as explicit elements.
pub fn unit_group(field: &FieldData) -> Vec<KElement> {
    let one = KElement::from_integers(field, 1, 0);
    let m1 = -one.clone();
    match field.d {
        -1 => {
            let i = KElement::tau(field);
            vec![one, m1, i.clone(), -i]
        }
        -3 => {
            let z = KElement::tau(field); // ζ_6
            let z2 = z.clone() * z.clone();
            vec![
                one,
                m1,
                z.clone(),
                -z.clone(),
                z2.clone(),
                -z2,
            ]
        }
        _ => vec![one, m1],
    }
}

/// The degree-one prime ideal matching a residue factor: the prime above ℓ
/// with τ ≡ tau_res (mod the prime).
pub fn prime_of_residue(field: &FieldData, f: &ResidueFactor) -> Result<Ideal> {
    let ell = f.modulus;
    match prime_split(field, ell)? {
        SplitType::Split(p1, p2) => {
            for cand in [p1, p2] {
                // τ ≡ −b mod (ℓ, b+τ).
                let tres = (-cand.b.clone()).mod_floor(&BigInt::from(ell));
                if tres == BigInt::from(f.tau_res).mod_floor(&BigInt::from(ell)) {
                    return Ok(cand);
                }
            }
            Err(Error::Invalid(format!(
                "tau residue {} matches neither prime above {}",
                f.tau_res, ell
            )))
        }
        SplitType::Ramified(q) => {
            let tres = (-q.b.clone()).mod_floor(&BigInt::from(ell));
            if tres == BigInt::from(f.tau_res).mod_floor(&BigInt::from(ell)) {
                Ok(q)
            } else {
                Err(Error::Invalid(format!(
                    "tau residue {} does not match the ramified prime above {}",
                    f.tau_res, ell
                )))
            }
        }
        SplitType::Inert(_) => Err(Error::Invalid(format!(
            "residue field above inert {} is not 𝔽_{}",
            ell, ell
        ))),
    }
}

/// Valuation of a fractional ideal at a prime ideal 𝔮 (possibly negative).
pub fn valuation_at_prime(field: &FieldData, a: &Ideal, q: &Ideal) -> Result<i64> {
    // Clear all denominators first (multiplying by the integer m shifts the
    // valuation at 𝔮 by e·v_ℓ(m), where ℓ is the rational prime under 𝔮 and
    // e is the ramification-adjusted exponent with v_𝔮((ℓ)) = e).
    let m = a.scale.denom().clone();
    let m_el = KElement::new(
        field,
        BigRational::from_integer(m.clone()),
        BigRational::zero(),
    );
    let am = a.mul(&Ideal::principal(field, &m_el)?)?;
    let nq = q.norm().to_integer();
    let ell = smallest_prime_factor(&nq);
    let e_per_ell = if nq == BigInt::from(ell) {
        if *q == q.conj() {
            2 // ramified: (ℓ) = 𝔮²
        } else {
            1 // split: (ℓ) = 𝔮𝔮̄
        }
    } else {
        1 // inert: (ℓ) = 𝔮
    };
    let shift = e_per_ell * crate::arith::valuation_big(&m, ell) as i64;
    // Bound on the valuation of the integral ideal am: log_ℓ of its norm.
    let nam = am.norm().to_integer();
    let mut bound = 2i64;
    let mut acc = BigInt::from(ell);
    while acc <= nam {
        acc *= BigInt::from(ell);
        bound += 1;
    }
    // Largest k ≥ 0 with am ⊆ 𝔮^k.
    let mut v = 0i64;
    for k in (0..=bound).rev() {
        let test = am.mul(&q.pow(-(k as i32))?)?;
        if test.scale.is_integer() {
            v = k;
            break;
        }
    }
    Ok(v - shift)
}

fn smallest_prime_factor(n: &BigInt) -> u64 {
    let nv = n.to_u64().expect("prime norms stay in u64 range");
    crate::arith::factor(nv)[0].0
}

/// Data of the fixed split prime 𝔭 above p: embeddings ι_𝔭, ι_𝔭̄, the
/// Teichmüller-twisted character α (infinity type (1,0), conductor 𝔭, finite
/// type ω_𝔭^{−1}) and its conjugate ᾱ, with p-adic realizations.
#[derive(Clone, Debug)]
pub struct AlphaData {
    pub field: FieldData,
    pub p: u64,
    /// 𝔭 = (p, b0 + τ); b0 chosen as the smallest non-negative residue.
    pub b0: i64,
    pub p_ideal: Ideal,
    pub pbar_ideal: Ideal,
    /// ι_𝔭(τ): the Hensel root ≡ −b0 of x² − tx + n.
    pub tau_p: Padic,
    /// ι_𝔭̄(τ) = t − ι_𝔭(τ).
    pub taubar_p: Padic,
    pub prec: i64,
    pub classical: ClassicalHeckeChar,
    pub classical_bar: ClassicalHeckeChar,
}

impl AlphaData {
    pub fn new(field: &FieldData, p: u64, prec: i64) -> Result<Self> {
        if p < 5 {
            return Err(Error::Invalid("p ≥ 5 required".into()));
        }
        let (p_ideal, pbar_ideal) = match prime_split(field, p)? {
            SplitType::Split(a, b) => (a, b),
            _ => {
                return Err(Error::Invalid(format!(
                    "{p} does not split in the field of discriminant {}",
                    field.disc
                )))
            }
        };
        // Order the pair so 𝔭 has the smaller b entry (deterministic).
        let (p_ideal, pbar_ideal) = if p_ideal.b <= pbar_ideal.b {
            (p_ideal, pbar_ideal)
        } else {
            (pbar_ideal, p_ideal)
        };
        let b0 = p_ideal.b.to_i64().unwrap();
        let tau_p = iota_tau(p, field.t, field.n, b0, prec)?;
        let taubar_p = &Padic::from_i64(p, field.t, prec) - &tau_p;
        let tau_res = (-b0).rem_euclid(p as i64);
        let taubar_res = (field.t - tau_res).rem_euclid(p as i64);
        // Both α and ᾱ read their root-of-unity symbols through the one
        // fixed embedding ι_𝔭 (the τ ≡ tau_res side).
        let pin = Some((p, tau_res));
        let classical = ClassicalHeckeChar::new_pinned(
            field,
            (1, 0),
            FinitePart::Product(vec![ResidueFactor {
                modulus: p,
                tau_res,
                power: -1,
            }]),
            pin,
        )?;
        let classical_bar = ClassicalHeckeChar::new_pinned(
            field,
            (0, 1),
            FinitePart::Product(vec![ResidueFactor {
                modulus: p,
                tau_res: taubar_res,
                power: -1,
            }]),
            pin,
        )?;
        Ok(AlphaData {
            field: field.clone(),
            p,
            b0,
            p_ideal,
            pbar_ideal,
            tau_p,
            taubar_p,
            prec,
            classical,
            classical_bar,
        })
    }

    /// ι_𝔭 on K: x + y·τ ↦ x + y·ι_𝔭(τ).
    pub fn iota_p(&self, lam: &KElement) -> Padic {
        let x = Padic::from_rational(self.p, &lam.x, self.prec);
        let y = Padic::from_rational(self.p, &lam.y, self.prec);
        &x + &(&y * &self.tau_p)
    }

    /// ι_𝔭̄ on K (equivalently ι_𝔭 of the conjugate).
    pub fn iota_pbar(&self, lam: &KElement) -> Padic {
        let x = Padic::from_rational(self.p, &lam.x, self.prec);
        let y = Padic::from_rational(self.p, &lam.y, self.prec);
        &x + &(&y * &self.taubar_p)
    }

    /// Principal-unit projection ⟨x⟩ = x/ω(x) for a p-adic unit.
    pub fn principal_unit(&self, x: &Padic) -> Result<Padic> {
        if x.valuation()? != 0 {
            return Err(Error::Invalid("⟨·⟩ needs a p-adic unit".into()));
        }
        let r = x.residue(1).to_u64().unwrap();
        let w = teichmuller(r, self.p, self.prec);
        Ok(x * &w.inv()?)
    }

    /// p-adic realization α_p(𝔞) = ⟨ι_𝔭(λ)⟩ for 𝔞 = (λ) coprime to p.
    pub fn alpha_p(&self, a: &Ideal) -> Result<Padic> {
        let lam = self.generator_coprime_p(a)?;
        self.principal_unit(&self.iota_p(&lam))
    }

    /// ᾱ_p(𝔞) = α_p(𝔞̄) = ⟨ι_𝔭̄(λ)⟩.
    pub fn alphabar_p(&self, a: &Ideal) -> Result<Padic> {
        let lam = self.generator_coprime_p(a)?;
        self.principal_unit(&self.iota_pbar(&lam))
    }

    fn generator_coprime_p(&self, a: &Ideal) -> Result<KElement> {
        let vp = valuation_at_prime(&self.field, a, &self.p_ideal)?;
        let vpb = valuation_at_prime(&self.field, a, &self.pbar_ideal)?;
        if vp != 0 || vpb != 0 {
            return Err(Error::Invalid(
                "α is evaluated on ideals coprime to p".into(),
            ));
        }
        principal_generator(&self.field, a).ok_or_else(|| {
            Error::Unsupported(
                "p-adic character evaluation needs a principal ideal (class number one)".into(),
            )
        })
    }

    /// Exponent s(𝔞) ∈ ℤ_p with α_p(𝔞) = (1+p)^{s(𝔞)}.
    pub fn s_exponent(&self, a: &Ideal) -> Result<Padic> {
        let v = self.alpha_p(a)?;
        let lp = Padic::from_i64(self.p, 1 + self.p as i64, self.prec).log()?;
        Ok(&v.log()? * &lp.inv()?)
    }

    /// Conjugate exponent s̄(𝔞) with ᾱ_p(𝔞) = (1+p)^{s̄(𝔞)}.
    pub fn sbar_exponent(&self, a: &Ideal) -> Result<Padic> {
        let v = self.alphabar_p(a)?;
        let lp = Padic::from_i64(self.p, 1 + self.p as i64, self.prec).log()?;
        Ok(&v.log()? * &lp.inv()?)
    }

    /// The tautological square-root character 𝒜(𝔞) = (1+T)^{s(𝔞)/2}
    /// (the square root of α taken inside the principal units).
    pub fn cal_a(&self, a: &Ideal, mt: usize) -> Result<LambdaElement> {
        let s = self.s_exponent(a)?;
        let half = Padic::from_i64(self.p, 2, self.prec).inv()?;
        Ok(LambdaElement::one_plus_t_pow(&(&s * &half), mt))
    }

    /// 𝒜̄(𝔞) = (1+T)^{s̄(𝔞)/2}.
    pub fn cal_abar(&self, a: &Ideal, mt: usize) -> Result<LambdaElement> {
        let s = self.sbar_exponent(a)?;
        let half = Padic::from_i64(self.p, 2, self.prec).inv()?;
        Ok(LambdaElement::one_plus_t_pow(&(&s * &half), mt))
    }
}

/// p-adic avatar of a classical character: values ι_p(φ(𝔞)) ∈ ℚ_p on ideals
/// coprime to p·𝔣 (the cyclotomic values must land in ℚ_p, i.e. root-of-unity
/// orders must divide p−1).
#[derive(Clone, Debug)]
pub struct PadicHeckeChar {
    pub base: ClassicalHeckeChar,
    pub alpha: AlphaData,
}

impl PadicHeckeChar {
    pub fn new(base: ClassicalHeckeChar, alpha: AlphaData) -> Self {
        PadicHeckeChar { base, alpha }
    }

    pub fn eval_padic(&self, a: &Ideal) -> Result<Padic> {
        let v = self.base.eval(a)?;
        v.embed_padic(&self.alpha.tau_p, self.alpha.prec)
    }

    /// Value of the p-adic avatar on the principal idele of α: must be 1.
    /// Computed from the defining formula
    /// ι_p(φ_ℂ(α)·α_∞^a·ᾱ_∞^b)·α_𝔭^{−a}·α_𝔭̄^{−b} with φ_ℂ(α) = 1.
    pub fn principal_idele_value(&self, lam: &KElement) -> Result<Padic> {
        let (a, b) = self.base.infinity_type;
        let inf = lam.pow(a)?.clone() * lam.conj().pow(b)?;
        let global = CycK::from_k(inf).embed_padic(&self.alpha.tau_p, self.alpha.prec)?;
        let loc_p = self.alpha.iota_p(lam).pow_int(-a)?;
        let loc_pbar = self.alpha.iota_pbar(lam).pow_int(-b)?;
        Ok(&(&global * &loc_p) * &loc_pbar)
    }

    /// Local value at 𝔭 on a unit u, for φ unramified at p: u^{−a}.
    pub fn local_unit_value_at_p(&self, u: &Padic) -> Result<Padic> {
        for f in self.base.finite_part.factors() {
            if f.modulus == self.alpha.p {
                return Err(Error::Unsupported(
                    "local unit readback implemented for characters unramified at p".into(),
                ));
            }
        }
        u.pow_int(-self.base.infinity_type.0)
    }
}

/// The interpolation family Ξ = χ_{k₀}·α^{k₀/2}·ᾱ^{−k₀/2}·𝒜^{−1}·𝒜̄ through
/// a weight-k₀ character χ_{k₀}: P_k∘Ξ = χ_{k₀}·α^{(k₀−k)/2}·ᾱ^{(k−k₀)/2},
/// a classical character of weight k.
#[derive(Clone, Debug)]
pub struct XiFamily {
    pub alpha: AlphaData,
    pub tame: ClassicalHeckeChar,
    pub k0: i64,
    pub mt: usize,
}

impl XiFamily {
    pub fn new(tame: ClassicalHeckeChar, alpha: AlphaData, mt: usize) -> Result<Self> {
        let k0 = tame.weight().ok_or_else(|| {
            Error::Invalid("Ξ needs a weight character (infinity type (−k/2, k/2))".into())
        })?;
        if k0 <= 0 || k0 % 2 != 0 {
            return Err(Error::Invalid("Ξ needs positive even weight k₀".into()));
        }
        Ok(XiFamily {
            alpha,
            tame,
            k0,
            mt,
        })
    }

    /// Ξ(𝔟) as an element of Λ = ℤ_p[T]/(T^mt):
    /// ι_p(χ_{k₀}(𝔟))·α_p(𝔟)^{k₀/2}·ᾱ_p(𝔟)^{−k₀/2}·(1+T)^{(s̄(𝔟)−s(𝔟))/2}.
    pub fn eval_lambda(&self, b: &Ideal) -> Result<LambdaElement> {
        let p = self.alpha.p;
        let prec = self.alpha.prec;
        let chi = self
            .tame
            .eval(b)?
            .embed_padic(&self.alpha.tau_p, prec)?;
        if chi.is_zero_to_prec() {
            return Ok(LambdaElement::zero(p, self.mt));
        }
        let a_p = self.alpha.alpha_p(b)?;
        let ab_p = self.alpha.alphabar_p(b)?;
        let c = &(&chi * &a_p.pow_int(self.k0 / 2)?) * &ab_p.pow_int(-self.k0 / 2)?;
        let s = self.alpha.s_exponent(b)?;
        let sb = self.alpha.sbar_exponent(b)?;
        let half = Padic::from_i64(p, 2, prec).inv()?;
        let expo = &(&sb - &s) * &half;
        Ok(LambdaElement::one_plus_t_pow(&expo, self.mt).scale(&c))
    }

    /// The classical specialization χ_k = χ_{k₀}·α^{(k₀−k)/2}·ᾱ^{(k−k₀)/2}
    /// at an arithmetic point (k, ε). The wild part ε never shows: the image
    /// of α lies in the principal units, which ε kills on the finite level,
    /// so P_{k,ε}∘Ξ = χ_k for every ε.
    pub fn specialize(&self, point: &ArithmeticPoint) -> Result<ClassicalHeckeChar> {
        let k = point.k;
        if k % 2 != 0 {
            return Err(Error::Invalid("specialization weight must be even".into()));
        }
        let j = (self.k0 - k) / 2;
        // α^j contributes type (j, 0) and finite type ω_𝔭^{−j};
        // ᾱ^{−j} contributes type (0, −j) and finite type ω_𝔭̄^{j}.
        let alpha_pow = ClassicalHeckeChar::new_pinned(
            &self.alpha.field,
            (j, -j),
            FinitePart::Product(vec![
                ResidueFactor {
                    modulus: self.alpha.p,
                    tau_res: self.alpha.classical.finite_part.factors()[0].tau_res,
                    power: -j,
                },
                ResidueFactor {
                    modulus: self.alpha.p,
                    tau_res: self.alpha.classical_bar.finite_part.factors()[0].tau_res,
                    power: j,
                },
            ])
            .normalized(),
            self.alpha.classical.zeta_pin,
        )?;
        self.tame.product(&alpha_pow)
    }

    /// P_k∘Ξ(𝔟) evaluated through the Λ-element (weight-k point of Λ).
    pub fn specialize_eval(&self, k: i64, b: &Ideal) -> Result<Padic> {
        let lam = self.eval_lambda(b)?;
        let t = crate::padic::arithmetic_t_value(
            self.alpha.p,
            &ArithmeticPoint::weight(k),
            self.alpha.prec,
        )?;
        lam.eval_at(&t)
    }

    /// Direct formula ι_p(χ_{k₀}(𝔟))·α_p^{(k₀−k)/2}·ᾱ_p^{(k−k₀)/2}.
    pub fn chi_k_eval(&self, k: i64, b: &Ideal) -> Result<Padic> {
        let chi = self
            .tame
            .eval(b)?
            .embed_padic(&self.alpha.tau_p, self.alpha.prec)?;
        let j = (self.k0 - k) / 2;
        let a_p = self.alpha.alpha_p(b)?.pow_int(j)?;
        let ab_p = self.alpha.alphabar_p(b)?.pow_int(-j)?;
        Ok(&(&chi * &a_p) * &ab_p)
    }
}
