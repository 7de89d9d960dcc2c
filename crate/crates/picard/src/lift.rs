//! The computable surface of the arithmetic theta lift: Fourier–Jacobi
//! coefficients of the p-modified lift of an elliptic eigenform, lifted
//! Hecke eigenvalues and their local Euler factors, the local multiplicity
//! count behind the U(𝔭)-congruence, and the double-coset identity behind
//! the Hecke trace computation.
//!
//! Everything in this module is desk-scale and certified: ball arithmetic
//! carries rigorous radii, symbolic identities are exact polynomial
//! equalities, and the combinatorial checks are exhaustive enumerations of
//! the stated domains (no sampling).

use crate::arith::{divisors, factor, is_prime, roots_quadratic_mod, valuation_big};
use crate::ball::{ComplexBall, Dyadic, RealBall};
use crate::characters::{valuation_at_prime, ClassicalHeckeChar};
use crate::cyc::{two_pi, CycK};
use crate::imquad::{
    class_group, ideal_to_cm_basis, prime_split, CMPoint, ClassGroup, FieldData, Ideal, KElement,
    SplitType,
};
use crate::qexp::{
    eval_ball, eval_cm, intrinsic_theta, qexp_to_balls, theta_deriv, theta_lattice_eval,
    theta_slice_growth, EigenformData, GrowthBound, Neben, QExpansion,
};
use crate::symbolic::{LaurentPoly, XPoly};
use crate::{Error, Result};
use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::fmt;

fn big(n: i64) -> BigRational {
    BigRational::from_integer(BigInt::from(n))
}

// ---------------------------------------------------------------------------
// Local multiplicity count at a split prime
// ---------------------------------------------------------------------------

/// Split-prime local data: the two roots τ₁, τ₂ of x² − t·x + n mod p^{r+1}
/// (the images of τ under the two embeddings K ↪ ℚ_p), μ = ι₁(δ) = τ₁ − τ₂,
/// and the prime ideal 𝔭 above p on which ι₁ vanishes to order 1.
#[derive(Clone, Debug)]
pub struct SplitEmbedding {
    pub p: u64,
    pub r: u32,
    /// Working modulus p^{r+1}.
    pub modulus: u64,
    pub tau1: u64,
    pub tau2: u64,
    /// μ = 2τ₁ − t mod p^{r+1}; a unit since p ∤ disc.
    pub mu: u64,
    pub mu_inv: u64,
    /// 𝔭 = pℤ + (b+τ)ℤ with b ≡ −τ₁, so ι₁(𝔭) ⊆ pℤ_p.
    pub p_ideal: Ideal,
}

fn inv_mod(a: u64, m: u64) -> u64 {
    let (g, x, _) = crate::arith::ext_gcd_big(&BigInt::from(a), &BigInt::from(m));
    assert!(g.is_one(), "inverse of non-unit mod {}", m);
    let xm = x.mod_floor(&BigInt::from(m));
    xm.to_u64().expect("residue fits")
}

/// Fix the split-coordinate normalization at p: among the two roots of the
/// minimal polynomial of τ mod p^{r+1}, ι₁ uses the numerically smaller one
/// (a convention; swapping the roots swaps 𝔭 ↔ 𝔭̄ throughout).
pub fn split_embedding(field: &FieldData, p: u64, r: u32) -> Result<SplitEmbedding> {
    if p < 3 || !is_prime(p) {
        return Err(Error::Invalid(format!("p = {} must be an odd prime", p)));
    }
    if field.disc % (p as i64) == 0 {
        return Err(Error::Invalid(format!("p = {} divides the discriminant", p)));
    }
    if !matches!(prime_split(field, p)?, SplitType::Split(_, _)) {
        return Err(Error::Invalid(format!("p = {} is not split", p)));
    }
    if r < 1 {
        return Err(Error::Invalid("depth r must be ≥ 1".into()));
    }
    let modulus = p.checked_pow(r + 1).ok_or_else(|| {
        Error::Invalid(format!("p^{} overflows the working modulus", r + 1))
    })?;
    let roots = roots_quadratic_mod(-field.t, field.n, modulus);
    assert_eq!(roots.len(), 2, "split prime has two simple roots mod p^{{r+1}}");
    let tau1 = roots[0].min(roots[1]);
    let tau2 = roots[0].max(roots[1]);
    let t_red = field.t.rem_euclid(modulus as i64) as u64;
    let mu = ((2 * tau1) % modulus + modulus - t_red) % modulus;
    let mu_inv = inv_mod(mu, modulus);
    // 𝔭 = pℤ + (b+τ)ℤ with b + τ₁ ≡ 0 mod p.
    let b = (p - tau1 % p) % p;
    let p_ideal = Ideal::integral(field, p as i64, b as i64)?;
    Ok(SplitEmbedding {
        p,
        r,
        modulus,
        tau1,
        tau2,
        mu,
        mu_inv,
        p_ideal,
    })
}

impl SplitEmbedding {
    /// ι_j(x + yτ) mod p^{r+1} for an integral argument (j = 1, 2).
    pub fn embed(&self, e: &KElement, which: u8) -> u64 {
        let tau = BigInt::from(if which == 1 { self.tau1 } else { self.tau2 });
        assert!(e.is_integral(), "split embedding needs an integral argument");
        let m = BigInt::from(self.modulus);
        let val = (e.x.to_integer() + e.y.to_integer() * tau).mod_floor(&m);
        val.to_u64().expect("residue fits")
    }
}

/// The hermitian norm (X, X) = δ^{−1}(X̄₁X₃ − X₁X̄₃) + N(X₂) ∈ ℚ of a vector
/// X ∈ K³ for the standard isotropic-plane-plus-line form. Exact: since
/// z − z̄ = (τ-coefficient of z)·δ, the first summand is the τ-coefficient of
/// X̄₁·X₃.
pub fn hermitian_norm(x: &[KElement; 3]) -> BigRational {
    let cross = x[0].conj() * x[2].clone();
    cross.y + x[1].norm()
}

/// The lattice pair at depth r: L′ = 𝒪 ⊕ 𝔭^rδ𝒪 ⊕ 𝒪 ⊇ L = p^rD𝒪 ⊕ 𝔭^rδ𝒪 ⊕ p^rD𝒪.
/// `middle` is the ideal 𝔭^r·(δ) whose elements populate the middle slot.
#[derive(Clone, Debug)]
pub struct LatticePair {
    pub field: FieldData,
    pub split: SplitEmbedding,
    pub middle: Ideal,
}

pub fn lattice_pair(field: &FieldData, p: u64, r: u32) -> Result<LatticePair> {
    let split = split_embedding(field, p, r)?;
    let delta_ideal = Ideal::principal(field, &KElement::delta(field))?;
    let middle = split.p_ideal.pow(r as i32)?.mul(&delta_ideal)?;
    Ok(LatticePair {
        field: field.clone(),
        split,
        middle,
    })
}

impl LatticePair {
    /// Is X ∈ L′ = 𝒪 ⊕ 𝔭^rδ𝒪 ⊕ 𝒪?
    pub fn contains(&self, x: &[KElement; 3]) -> bool {
        x[0].is_integral() && x[2].is_integral() && self.middle.contains(&x[1])
    }

    /// Is X mod L in the index set T, i.e. does the first component have
    /// τ-coefficient ≡ 0 and the third τ-coefficient ≡ 1 mod p^r·|D|?
    pub fn in_t_set(&self, x: &[KElement; 3]) -> bool {
        let n_mod = BigInt::from(self.split.p).pow(self.split.r)
            * BigInt::from(self.field.disc.unsigned_abs());
        let y1 = x[0].y.to_integer().mod_floor(&n_mod);
        let y3 = x[2].y.to_integer().mod_floor(&n_mod);
        y1.is_zero() && y3.is_one()
    }
}

/// Normalized 𝔽_p³-coordinates of the ι₁-part of X ∈ L′: (x₁ mod p,
/// ι₁(X₂)/p^r mod p, x₃ mod p). The middle coordinate is exactly divisible
/// because X₂ ∈ 𝔭^rδ𝒪 and ι₁ sends 𝔭 to pℤ_p.
fn e_coords(lat: &LatticePair, x: &[KElement; 3]) -> [u64; 3] {
    let s = &lat.split;
    let p = s.p;
    let x1 = s.embed(&x[0], 1) % p;
    let x2 = s.embed(&x[1], 1);
    let pr = p.pow(s.r);
    assert!(
        x2 % pr == 0,
        "ι₁ of the middle component must be divisible by p^r"
    );
    let x2n = (x2 / pr) % p;
    let x3 = s.embed(&x[2], 1) % p;
    [x1, x2n, x3]
}

/// 𝔽_p³-coordinates of the twisted ι₂-part v = J·ι₂(X) with the unimodular
/// J = (0,0,−μ^{−1}; 0,1,0; μ^{−1},0,0) that matches the two isotropic flags.
fn f_coords(lat: &LatticePair, x: &[KElement; 3]) -> [u64; 3] {
    let s = &lat.split;
    let p = s.p;
    let y1 = s.embed(&x[0], 2) % p;
    let y2 = s.embed(&x[1], 2) % p;
    let y3 = s.embed(&x[2], 2) % p;
    let mu_inv = s.mu_inv % p;
    let v1 = (p - (mu_inv * y3) % p) % p;
    let v2 = y2;
    let v3 = (mu_inv * y1) % p;
    [v1, v2, v3]
}

fn fp3_index(p: u64, c: &[u64; 3]) -> usize {
    ((c[0] % p) * p * p + (c[1] % p) * p + (c[2] % p)) as usize
}

/// Image of G₁·Λ and G₂·ℤ³ in the normalized 𝔽_p³-coordinates, for one
/// representative pair indexed by (a, b) ∈ 𝔽_p². G₁ = (p, μb, p^r·a; 0,1,0;
/// 0,0,1) acts on Λ = ℤ_p ⊕ p^rℤ_p ⊕ ℤ_p; G₂ = p·ᵗG₁^{−1} = (1,0,0; −μb,p,0;
/// −p^r·a,0,p) acts on ℤ_p³. Both images are computed by direct enumeration
/// of p³ domain representatives, reduced exactly mod p^{r+1}.
fn representative_images(s: &SplitEmbedding, a: u64, b: u64) -> (Vec<bool>, Vec<bool>) {
    let p = s.p;
    let m = s.modulus as u128;
    let pr = (p as u128).pow(s.r);
    let mu = s.mu as u128;
    let cube = (p * p * p) as usize;
    let mut im_e = vec![false; cube];
    let mut im_f = vec![false; cube];
    for l1 in 0..p {
        for l2 in 0..p {
            for l3 in 0..p {
                // λ = (l1, p^r·l2, l3) ∈ Λ; image G₁λ, then normalize.
                let lam2 = pr * l2 as u128;
                let g1 = ((p as u128) * l1 as u128 + mu * b as u128 % m * lam2 % m
                    + pr * a as u128 % m * l3 as u128)
                    % m;
                let e1 = (g1 % p as u128) as u64;
                let e2 = ((lam2 / pr) % p as u128) as u64;
                let e3 = l3;
                im_e[fp3_index(p, &[e1, e2, e3])] = true;
                // u = (l1, l2, l3) ∈ ℤ³; image G₂u mod p.
                let f1 = l1;
                let f2 = ((m - mu * b as u128 % m) * l1 as u128 + (p as u128) * l2 as u128)
                    % m
                    % p as u128;
                let f3 = ((m - pr * a as u128 % m) * l1 as u128 + (p as u128) * l3 as u128)
                    % m
                    % p as u128;
                im_f[fp3_index(p, &[f1, f2 as u64, f3 as u64])] = true;
            }
        }
    }
    (im_e, im_f)
}

/// The local multiplicity m(p, X): the number of representative pairs
/// (a, b) ∈ 𝔽_p² whose image sublattice pair contains X mod pL′. Computed by
/// brute force exactly as defined: enumerate the p² representatives, act on
/// L′_p/pL′_p through the split coordinates, and count containments.
pub fn multiplicity(lat: &LatticePair, x: &[KElement; 3]) -> Result<u64> {
    if !lat.contains(x) {
        return Err(Error::Invalid(
            "multiplicity argument must lie in L′ = 𝒪 ⊕ 𝔭^rδ𝒪 ⊕ 𝒪".into(),
        ));
    }
    let s = &lat.split;
    let p = s.p;
    let xe = fp3_index(p, &e_coords(lat, x));
    let xf = fp3_index(p, &f_coords(lat, x));
    let mut count = 0u64;
    for a in 0..p {
        for b in 0..p {
            let (im_e, im_f) = representative_images(s, a, b);
            if im_e[xe] && im_f[xf] {
                count += 1;
            }
        }
    }
    Ok(count)
}

/// One counterexample class found by the exhaustive check: a class where the
/// claimed dichotomy (m = p exactly when p | (X,X), else m = 0) fails.
#[derive(Clone, Debug)]
pub struct MultiplicityException {
    /// Class coordinates: X₁ = α, X₃ = β + τ, X₂ = c₁·w₁ + c₂·w₂ over the
    /// basis (w₁, w₂) of 𝔭^rδ𝒪.
    pub alpha: u64,
    pub beta: u64,
    pub c1: u64,
    pub c2: u64,
    pub gram_mod_p: u64,
    pub claimed: u64,
    pub got: u64,
}

/// Report of the exhaustive multiplicity check over all T-constrained
/// classes of L′/pL′.
#[derive(Clone, Debug)]
pub struct MultiplicityReport {
    pub p: u64,
    pub r: u32,
    /// Number of classes enumerated (p⁴).
    pub domain: usize,
    pub conforming: usize,
    pub exceptions: Vec<MultiplicityException>,
    /// Σ m(p, X) over the enumerated classes.
    pub sum_m: u64,
    /// Σ_{(a,b)} |image_e|·|image_f|: the double-counting value of
    /// Σ m(p, X) over the full quotient L′/pL′.
    pub sum_m_full_by_images: u64,
}

impl MultiplicityReport {
    pub fn dichotomy_holds(&self) -> bool {
        self.exceptions.is_empty()
    }
}

/// Exhaustively test the claimed multiplicity dichotomy — m(p, X) = p when
/// p | (X, X) and 0 otherwise — over every class of L′/pL′ whose reduction
/// mod L lies in the index set T (first component rational, third with
/// τ-coefficient 1). The T-constraint leaves p⁴ classes: α, β ∈ 𝔽_p for the
/// outer components and two basis coordinates for the middle one. The report
/// lists every violating class rather than failing fast.
pub fn lemma_check(field: &FieldData, p: u64, r: u32) -> Result<MultiplicityReport> {
    let lat = lattice_pair(field, p, r)?;
    let s = &lat.split;
    // Precompute the p² image pairs once; the per-class count is then a pair
    // of table lookups per representative.
    let images: Vec<(Vec<bool>, Vec<bool>)> = (0..p * p)
        .map(|ab| representative_images(s, ab / p, ab % p))
        .collect();
    let (w1, w2) = lat.middle.basis();
    let tau = KElement::tau(field);
    let p_big = BigInt::from(p);
    let mut conforming = 0usize;
    let mut exceptions = Vec::new();
    let mut sum_m = 0u64;
    for alpha in 0..p {
        for beta in 0..p {
            for c1 in 0..p {
                for c2 in 0..p {
                    let x1 = KElement::from_rational(big(alpha as i64));
                    let x3 = KElement::from_rational(big(beta as i64)) + tau.clone();
                    let x2 = w1.scale(&big(c1 as i64)) + w2.scale(&big(c2 as i64));
                    let x = [x1, x2, x3];
                    debug_assert!(lat.contains(&x) && lat.in_t_set(&x));
                    let gram = hermitian_norm(&x);
                    assert!(gram.is_integer(), "(X,X) is integral on L′");
                    let gram_mod_p = gram.to_integer().mod_floor(&p_big).to_u64().unwrap();
                    let claimed = if gram_mod_p == 0 { p } else { 0 };
                    let xe = fp3_index(p, &e_coords(&lat, &x));
                    let xf = fp3_index(p, &f_coords(&lat, &x));
                    let got = images
                        .iter()
                        .filter(|(im_e, im_f)| im_e[xe] && im_f[xf])
                        .count() as u64;
                    sum_m += got;
                    if got == claimed {
                        conforming += 1;
                    } else {
                        exceptions.push(MultiplicityException {
                            alpha,
                            beta,
                            c1,
                            c2,
                            gram_mod_p,
                            claimed,
                            got,
                        });
                    }
                }
            }
        }
    }
    let mut sum_m_full_by_images = 0u64;
    for (im_e, im_f) in &images {
        let ne = im_e.iter().filter(|&&t| t).count() as u64;
        let nf = im_f.iter().filter(|&&t| t).count() as u64;
        sum_m_full_by_images += ne * nf;
    }
    Ok(MultiplicityReport {
        p,
        r,
        domain: (p * p * p * p) as usize,
        conforming,
        exceptions,
        sum_m,
        sum_m_full_by_images,
    })
}

// ---------------------------------------------------------------------------
// Double-coset identity for the Hecke action at level N = p^r·|D|
// ---------------------------------------------------------------------------

type Mat2 = [[i128; 2]; 2];

fn mat_mul(a: &Mat2, b: &Mat2) -> Mat2 {
    [
        [
            a[0][0] * b[0][0] + a[0][1] * b[1][0],
            a[0][0] * b[0][1] + a[0][1] * b[1][1],
        ],
        [
            a[1][0] * b[0][0] + a[1][1] * b[1][0],
            a[1][0] * b[0][1] + a[1][1] * b[1][1],
        ],
    ]
}

fn mat_det(a: &Mat2) -> i128 {
    a[0][0] * a[1][1] - a[0][1] * a[1][0]
}

fn ext_gcd_i128(a: i128, b: i128) -> (i128, i128, i128) {
    if b == 0 {
        let s = if a < 0 { -1 } else { 1 };
        return (a.abs(), s, 0);
    }
    let (g, x, y) = ext_gcd_i128(b, a.rem_euclid(b));
    (g, y, x - (a.div_euclid(b)) * y)
}

/// Left-Γ(N)-class key of an integral matrix M with det M = n > 0: the
/// row-lattice Hermite form H = (a, b; 0, d) (a, d > 0, ad = n, 0 ≤ b < d)
/// together with V = M·H^{−1} ∈ SL₂(ℤ) reduced mod N. Two matrices share a
/// key exactly when they differ by left multiplication by Γ(N) (the kernel
/// of SL₂(ℤ) → SL₂(ℤ/N) is exactly Γ(N), so V mod N is a complete class
/// invariant once the row lattice is fixed).
fn left_class_key(m: &Mat2, n: i128, level: u64) -> (u64, u64, u64, [u64; 4]) {
    assert_eq!(mat_det(m), n, "left key needs determinant n");
    // Row-lattice HNF: a = gcd of first coordinates over the lattice,
    // achieved by a ℤ-combination of the two rows; (0, d) spans the
    // first-coordinate kernel with d = n/a.
    let (g, u, v) = ext_gcd_i128(m[0][0], m[1][0]);
    let a = g;
    assert!(a > 0, "rows of a nonsingular matrix span a finite-index lattice");
    let b0 = u * m[0][1] + v * m[1][1];
    let d = n / a;
    assert_eq!(a * d, n);
    let b = b0.rem_euclid(d);
    // V = M·adj(H)/n with adj(H) = (d, −b; 0, a).
    let adj_h = [[d, -b], [0, a]];
    let mv = mat_mul(m, &adj_h);
    let nn = level as i128;
    let mut vbar = [0u64; 4];
    for (k, slot) in vbar.iter_mut().enumerate() {
        let entry = mv[k / 2][k % 2];
        assert_eq!(entry % n, 0, "V must be integral");
        *slot = (entry / n).rem_euclid(nn) as u64;
    }
    (a as u64, b as u64, d as u64, vbar)
}

/// Lift a matrix given mod M with det ≡ 1 to an honest element of SL₂(ℤ) in
/// the same congruence class. Standard two-step construction: make the
/// bottom row a coprime integer pair within its class, then correct the top
/// row along the kernel of (x, y) ↦ xd − yc.
fn sl2_lift(m_mod: &[u64; 4], modulus: u64) -> Mat2 {
    let md = modulus as i128;
    let a0 = m_mod[0] as i128;
    let b0 = m_mod[1] as i128;
    let mut c = m_mod[2] as i128;
    let mut d = m_mod[3] as i128;
    assert_eq!(
        (a0 * d - b0 * c).rem_euclid(md),
        1,
        "lift input must have determinant 1 mod M"
    );
    if c == 0 && d == 0 {
        unreachable!("determinant-1 matrices have a nonzero bottom row");
    }
    if c == 0 {
        c = md;
    }
    let mut guard = 0;
    while ext_gcd_i128(c, d).0 != 1 {
        d += md;
        guard += 1;
        assert!(guard < 10_000, "coprime bottom row search must terminate");
    }
    // a'd − b'c = 1; then shift (a', b') by s·(c, d) to hit (a0, b0) mod M.
    let (_, ap, bm) = ext_gcd_i128(d, -c);
    let (apr, bpr) = (ap, bm);
    // Solve s·c ≡ a0 − a′ and s·d ≡ b0 − b′ mod M prime-power-wise (at each
    // prime power dividing M at least one of c, d is a unit).
    let mut s = 0i128;
    let mut crt_mod = 1i128;
    for (q, e) in factor(modulus) {
        let qe = (q as i128).pow(e);
        let (target, base) = if c.rem_euclid(q as i128) != 0 {
            ((a0 - apr).rem_euclid(qe), c.rem_euclid(qe))
        } else {
            ((b0 - bpr).rem_euclid(qe), d.rem_euclid(qe))
        };
        let (g, inv, _) = ext_gcd_i128(base, qe);
        assert_eq!(g, 1, "chosen row entry must be a unit at this prime");
        let s_q = (target * inv.rem_euclid(qe)).rem_euclid(qe);
        // CRT combine s ≡ s_q mod qe into s mod crt_mod·qe.
        let (g2, u2, _) = ext_gcd_i128(crt_mod, qe);
        assert_eq!(g2, 1);
        let diff = (s_q - s).rem_euclid(qe);
        s += crt_mod * ((diff * u2.rem_euclid(qe)).rem_euclid(qe));
        crt_mod *= qe;
        s = s.rem_euclid(crt_mod);
    }
    let a = apr + s * c;
    let b = bpr + s * d;
    let out = [[a, b], [c, d]];
    assert_eq!(mat_det(&out), 1, "lift must land in SL₂(ℤ)");
    for (k, &want) in m_mod.iter().enumerate() {
        assert_eq!(
            out[k / 2][k % 2].rem_euclid(md),
            want as i128 % md,
            "lift must match the congruence class"
        );
    }
    out
}

/// All elements of SL₂(ℤ/N), as entry quadruples (a, b, c, d).
fn sl2_mod_n(level: u64) -> Vec<[u64; 4]> {
    let n = level;
    let mut out = Vec::new();
    for a in 0..n {
        for b in 0..n {
            for c in 0..n {
                for d in 0..n {
                    let det = ((a * d) % n + n - (b * c) % n) % n;
                    if det == 1 % n {
                        out.push([a, b, c, d]);
                    }
                }
            }
        }
    }
    out
}

/// Right-Γ(N)-class representatives of {M ∈ M₂(ℤ) : det M = sign·n, bottom
/// row ≡ (0, 1) mod N}: pairs (C, W) with C the column-Hermite form of the
/// image lattice (second column negated when sign = −1) and W ∈ SL₂(ℤ/N);
/// the class is C·lift(W) and membership depends only on (C, W).
fn h_set_class_reps(n: u64, sign: i64, level: u64, sl2: &[[u64; 4]]) -> Vec<Mat2> {
    let mut reps = Vec::new();
    for a in divisors(n) {
        let d = n / a;
        for c_off in 0..d {
            // C = (a, 0; c, ±d).
            let c_mat: Mat2 = [
                [a as i128, 0],
                [c_off as i128, sign as i128 * d as i128],
            ];
            let bottom = [c_mat[1][0].rem_euclid(level as i128) as u64,
                c_mat[1][1].rem_euclid(level as i128) as u64];
            for w in sl2 {
                // Bottom row of C·W mod N must be (0, 1).
                let r0 = (bottom[0] * w[0] + bottom[1] * w[2]) % level;
                let r1 = (bottom[0] * w[1] + bottom[1] * w[3]) % level;
                if r0 == 0 && r1 == 1 % level {
                    let wl = sl2_lift(w, level);
                    reps.push(mat_mul(&c_mat, &wl));
                }
            }
        }
    }
    reps
}

/// The flip M ↦ M″ = (d, b; −c, −a): an involution on determinants up to
/// sign that intertwines right classes of the bottom-row-(0,1) set at
/// determinant −n with left classes of the top-row-(1,·)-type double coset
/// at determinant n (right multiplication u becomes left multiplication
/// u^{−1}).
fn flip(m: &Mat2) -> Mat2 {
    [[m[1][1], m[0][1]], [-m[1][0], -m[0][0]]]
}

/// Certificate of the double-coset identity at level N = p^r·|D|.
#[derive(Clone, Debug)]
pub struct CosetCertificate {
    pub n: u64,
    pub level: u64,
    /// Left-Γ(N) classes of the flipped Hermite enumeration.
    pub side_a: usize,
    /// Left-Γ(N) classes of Γ₁(N)·diag(1, n)·Γ₁(N) enumerated directly.
    pub side_b: usize,
    /// The two class-key sets coincide.
    pub sides_equal: bool,
    /// Count predicted by the classical degree formula:
    /// N·(q+1) for prime q ∤ N, N·q for prime q | N, N for n = 1.
    pub expected: usize,
    /// Congruence-class histogram of the determinant-(+n) enumeration:
    /// (a mod N, b mod N) ↦ class count; certifies the partition of the
    /// bottom-row-(0,1) set by top-row residues.
    pub t_histogram: BTreeMap<(u64, u64), usize>,
    /// Number of nonempty congruence pieces (must be N: a ≡ n forced, b free).
    pub t_pieces: usize,
}

/// Verify, by exhaustive enumeration at desk scale, that the flip of the
/// right-class system of {det = −n, bottom row ≡ (0,1) mod N} is exactly the
/// left-class system of the double coset Γ₁(N)·diag(1, n)·Γ₁(N), and that
/// the determinant-(+n) congruence set partitions by top-row residues with
/// exactly N nonempty pieces. n must be 1 or prime (the double-coset side
/// uses the projective-line coset decomposition at one prime).
pub fn coset_identity_check(n: u64, p: u64, r: u32, disc: i64) -> Result<CosetCertificate> {
    let level = p.pow(r) * disc.unsigned_abs();
    if level > 48 {
        return Err(Error::Budget(format!(
            "level N = {} exceeds the SL₂(ℤ/N) enumeration budget (N ≤ 48)",
            level
        )));
    }
    if n == 0 || (n > 1 && !is_prime(n)) {
        return Err(Error::Unsupported(format!(
            "double-coset enumeration implemented for n = 1 or prime n, got {}",
            n
        )));
    }
    if n > 50 {
        return Err(Error::Budget(format!("n = {} exceeds the budget (n ≤ 50)", n)));
    }
    let sl2 = sl2_mod_n(level);

    // Side A: Hermite enumeration at determinant −n, flipped.
    let reps_minus = h_set_class_reps(n, -1, level, &sl2);
    let mut side_a_keys = std::collections::BTreeSet::new();
    for m in &reps_minus {
        let f = flip(m);
        side_a_keys.insert(left_class_key(&f, n as i128, level));
    }

    // Side B: Γ(N)\Γ₁(N)·diag(1,n)·Γ₁(N) via T-power refinements of the
    // projective-line right-coset representatives.
    let diag_n: Mat2 = [[1, 0], [0, n as i128]];
    let mut b_reps: Vec<Mat2> = Vec::new();
    if n == 1 {
        b_reps.push([[1, 0], [0, 1]]);
    } else if level.is_multiple_of(n) {
        // q | N: index q, representatives T^j, j < q.
        for j in 0..n {
            b_reps.push([[1, j as i128], [0, 1]]);
        }
    } else {
        // q ∤ N: q+1 representatives ≡ I mod N hitting every point of
        // P¹(𝔽_q) mod q, built by CRT and lifted to SL₂(ℤ).
        let q = n;
        let m_crt = level * q;
        let crt = |target_q: [u64; 4]| -> [u64; 4] {
            // x ≡ identity mod N, x ≡ target mod q.
            let mut out = [0u64; 4];
            let idn = [1u64, 0, 0, 1];
            for k in 0..4 {
                let mut x = 0;
                while x < m_crt {
                    if x % level == idn[k] % level && x % q == target_q[k] % q {
                        out[k] = x;
                        break;
                    }
                    x += 1;
                }
            }
            out
        };
        for j in 0..q {
            let t = crt([1, j, 0, 1]);
            b_reps.push(sl2_lift(&t, m_crt));
        }
        let s_inf = crt([0, q - 1, 1, 0]); // (0, −1; 1, 0) mod q
        b_reps.push(sl2_lift(&s_inf, m_crt));
    }
    let t_mat: Mat2 = [[1, 1], [0, 1]];
    let mut side_b_keys = std::collections::BTreeSet::new();
    let mut t_pow: Mat2 = [[1, 0], [0, 1]];
    for _ in 0..level {
        for g in &b_reps {
            let m = mat_mul(&t_pow, &mat_mul(&diag_n, g));
            side_b_keys.insert(left_class_key(&m, n as i128, level));
        }
        t_pow = mat_mul(&t_pow, &t_mat);
    }

    // Partition certificate at determinant +n: histogram of top-row residues.
    let reps_plus = h_set_class_reps(n, 1, level, &sl2);
    let mut t_histogram: BTreeMap<(u64, u64), usize> = BTreeMap::new();
    for m in &reps_plus {
        let key = (
            m[0][0].rem_euclid(level as i128) as u64,
            m[0][1].rem_euclid(level as i128) as u64,
        );
        *t_histogram.entry(key).or_insert(0) += 1;
    }
    for (a_res, _) in t_histogram.keys() {
        assert_eq!(
            *a_res,
            n % level,
            "determinant ≡ a·1 forces a ≡ n mod N on the congruence set"
        );
    }

    let expected = if n == 1 {
        level as usize
    } else if level.is_multiple_of(n) {
        (level * n) as usize
    } else {
        (level * (n + 1)) as usize
    };
    Ok(CosetCertificate {
        n,
        level,
        side_a: side_a_keys.len(),
        side_b: side_b_keys.len(),
        sides_equal: side_a_keys == side_b_keys,
        expected,
        t_pieces: t_histogram.len(),
        t_histogram,
    })
}

// ---------------------------------------------------------------------------
// Lifted Hecke eigenvalues and Shintani Euler factors
// ---------------------------------------------------------------------------

/// Splitting behaviour of a rational prime in K, as it enters the
/// eigenvalue and Euler-factor tables.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LocalType {
    Split,
    Inert,
    Ramified,
}

fn ck_int_pow(q: u64, e: i64) -> BigRational {
    let b = BigInt::from(q);
    if e >= 0 {
        BigRational::from_integer(b.pow(e as u32))
    } else {
        BigRational::new(BigInt::one(), b.pow((-e) as u32))
    }
}

/// Local data feeding the eigenvalue tables at a prime q: the elliptic
/// eigenvalue a_q (and at ramified primes its partner ā_q with
/// a_q·ā_q = q^{k−2}), together with the two character values at 𝔮̄.
#[derive(Clone, Debug)]
pub struct LocalEigenData {
    pub q: u64,
    pub local_type: LocalType,
    pub a_q: CycK,
    /// ā_q; only consulted in the ramified case.
    pub a_q_conj: CycK,
    /// ε(𝔮̄).
    pub eps_qbar: CycK,
    /// (χ·ε^{−2})(𝔮̄).
    pub chieps2_qbar: CycK,
}

/// The un-normalized lifted eigenvalue table:
///   split     q^{2−k/2}·ε(𝔮̄)·a_q + q·(χε^{−2})(𝔮̄)
///   ramified  q^{2−k/2}·ε(𝔮̄)·(a_q + ā_q) + q·(χε^{−2})(𝔮̄)
///   inert     q^{4−k}·a_q² + 2q² + q
pub fn lifted_eigenvalue_naive(d: &LocalEigenData, k: i64) -> Result<CycK> {
    if k < 4 || k % 2 != 0 {
        return Err(Error::Invalid(format!("weight k = {} must be even and ≥ 4", k)));
    }
    let q = d.q;
    Ok(match d.local_type {
        LocalType::Split => {
            let t1 = (&d.a_q * &d.eps_qbar).scale_rational(&ck_int_pow(q, 2 - k / 2));
            let t2 = d.chieps2_qbar.scale_rational(&ck_int_pow(q, 1));
            &t1 + &t2
        }
        LocalType::Ramified => {
            let s = &d.a_q + &d.a_q_conj;
            let t1 = (&s * &d.eps_qbar).scale_rational(&ck_int_pow(q, 2 - k / 2));
            let t2 = d.chieps2_qbar.scale_rational(&ck_int_pow(q, 1));
            &t1 + &t2
        }
        LocalType::Inert => {
            let t1 = (&d.a_q * &d.a_q).scale_rational(&ck_int_pow(q, 4 - k));
            let rest = ck_int_pow(q, 2) * big(2) + ck_int_pow(q, 1);
            &t1 + &CycK::from_rational(rest)
        }
    })
}

/// The integrally normalized lifted eigenvalue table:
///   split     ε(𝔮̄)·q·a_q + q^{k/2}·(χε^{−2})(𝔮̄)
///   ramified  ε(𝔮̄)·q·(a_q + ā_q) + q^{k/2}·(χε^{−2})(𝔮̄)
///   inert     q·a_q² + 2q^{k−1} + q^{k−2}
/// At split and ramified primes this is N(𝔮)^{k/2−1} times the naive value;
/// at inert primes the printed normalization works out to q^{k−3} times the
/// naive value (one factor q less than N(𝔮)^{k/2−1} = q^{k−2}).
pub fn lifted_eigenvalue(d: &LocalEigenData, k: i64) -> Result<CycK> {
    if k < 4 || k % 2 != 0 {
        return Err(Error::Invalid(format!("weight k = {} must be even and ≥ 4", k)));
    }
    let q = d.q;
    Ok(match d.local_type {
        LocalType::Split => {
            let t1 = (&d.a_q * &d.eps_qbar).scale_rational(&ck_int_pow(q, 1));
            let t2 = d.chieps2_qbar.scale_rational(&ck_int_pow(q, k / 2));
            &t1 + &t2
        }
        LocalType::Ramified => {
            let s = &d.a_q + &d.a_q_conj;
            let t1 = (&s * &d.eps_qbar).scale_rational(&ck_int_pow(q, 1));
            let t2 = d.chieps2_qbar.scale_rational(&ck_int_pow(q, k / 2));
            &t1 + &t2
        }
        LocalType::Inert => {
            let t1 = (&d.a_q * &d.a_q).scale_rational(&ck_int_pow(q, 1));
            let rest = ck_int_pow(q, k - 1) * big(2) + ck_int_pow(q, k - 2);
            &t1 + &CycK::from_rational(rest)
        }
    })
}

/// The p-modified lift's eigenvalue at the distinguished split prime:
/// λ^p(𝔭) = p²·ε(𝔭̄)·a_p, with a_p the U_p-eigenvalue of the p-stabilized
/// input. At unramified q ≠ p the p-modified eigenvalue agrees with
/// `lifted_eigenvalue`; the inert/ramified branches at q = p fall outside
/// the p-modified eigenvalue statement and are deliberately not special-cased
/// here.
pub fn lifted_eigenvalue_p(p: u64, a_p: &CycK, eps_pbar: &CycK) -> CycK {
    (a_p * eps_pbar).scale_rational(&ck_int_pow(p, 2))
}

/// Local Euler factor of the lifted form's standard L-series at 𝔮:
/// a degree-3 polynomial in x = ξ(𝔮)N(𝔮)^{−s−1} with constant term 1.
#[derive(Clone, Debug)]
pub struct EulerFactor {
    pub q: u64,
    pub local_type: LocalType,
    /// coeffs[i] multiplies x^i; coeffs[0] = 1, coeffs[3] ≠ 0.
    pub coeffs: [CycK; 4],
}

/// Build the lift's local Euler factor from the naive eigenvalue λ̃ and the
/// weight-k character value χ(𝔮) (and their values at 𝔮̄):
///   split     1 − λ̃(𝔮̄)χ(𝔮)^{−1}N^{−1}x + λ̃(𝔮)χ(𝔮)^{−1}N^{−1}x² − χ(𝔮̄)χ(𝔮)^{−1}x³
///   inert     (1 − x)(1 + (√N − λ̃χ(𝔮)^{−1})N^{−1}x + x²),  N = q²
///   ramified  (1 − x)(1 + (N − λ̃χ(𝔮)^{−1})N^{−1}x + x²),   N = q
pub fn shintani_euler(
    ty: LocalType,
    q: u64,
    lam_q: &CycK,
    lam_qbar: &CycK,
    chi_q: &CycK,
    chi_qbar: &CycK,
) -> Result<EulerFactor> {
    let chi_inv = chi_q.inv()?;
    let one = CycK::one();
    let coeffs = match ty {
        LocalType::Split => {
            let ninv = ck_int_pow(q, -1);
            let c1 = -(lam_qbar * &chi_inv).scale_rational(&ninv);
            let c2 = (lam_q * &chi_inv).scale_rational(&ninv);
            let c3 = -(chi_qbar * &chi_inv);
            [one, c1, c2, c3]
        }
        LocalType::Inert => {
            // mid = (q − λ̃χ^{−1})·q^{−2}; expand (1−x)(1 + mid·x + x²).
            let mid = (&CycK::from_rational(ck_int_pow(q, 1)) - &(lam_q * &chi_inv))
                .scale_rational(&ck_int_pow(q, -2));
            let c1 = &mid - &one;
            let c2 = &one - &mid;
            [one.clone(), c1, c2, -one]
        }
        LocalType::Ramified => {
            let mid = (&CycK::from_rational(ck_int_pow(q, 1)) - &(lam_q * &chi_inv))
                .scale_rational(&ck_int_pow(q, -1));
            let c1 = &mid - &one;
            let c2 = &one - &mid;
            [one.clone(), c1, c2, -one]
        }
    };
    Ok(EulerFactor {
        q,
        local_type: ty,
        coeffs,
    })
}

/// Certificate of the exact factorization of the lift's Euler factor into
/// the base-change-twist degree-2 factor and the abelian degree-1 factor:
/// P_𝔮(x) = [BC(f)⊗εχ^{−1} factor in Y]·[1 − ε(𝔮)^{−2}x] under the
/// substitution Y = (εχ^{−1})(𝔮)·N^{1−k/2}·x. Symbols: a (elliptic
/// eigenvalue), e = ε(𝔮), c = χ(𝔮), q — all invertible.
#[derive(Clone, Debug)]
pub struct EulerIdentityCertificate {
    pub local_type: LocalType,
    pub k: i64,
    pub lhs: XPoly,
    pub rhs: XPoly,
    pub holds: bool,
    /// Ramified case: (e, c) sign assignments and whether the identity holds
    /// under each (the symbols only satisfy e² = c² = 1 there).
    pub sign_cases: Vec<(i64, i64, bool)>,
}

fn lp_int(n: i64) -> LaurentPoly {
    LaurentPoly::from_integer(n)
}

fn lp_q(e: i64) -> LaurentPoly {
    LaurentPoly::sym_pow("q", e)
}

/// Exact polynomial identity check of the Euler factorization for one
/// splitting type at weight k. The split case is an identity in the free
/// Laurent symbols a, e, c, q; the inert case forces e = c = 1 (the
/// characters are evaluated on the principal ideal (q)); the ramified case
/// imposes only e² = c² = 1 and checks all four sign assignments.
pub fn euler_factorization_check(ty: LocalType, k: i64) -> EulerIdentityCertificate {
    assert!(k >= 4 && k % 2 == 0, "weight must be even and ≥ 4");
    let a = LaurentPoly::sym("a");
    let e = |n: i64| LaurentPoly::sym_pow("e", n);
    let c = |n: i64| LaurentPoly::sym_pow("c", n);
    let x = |lp: LaurentPoly, i: usize| XPoly::term(lp, i);

    // λ̃ values with the 𝔮̄-relations ε(𝔮̄) = e^{−1}, χ(𝔮̄) = c^{−1} baked in
    // (split); at inert/ramified primes 𝔮̄ = 𝔮.
    let (lhs, rhs) = match ty {
        LocalType::Split => {
            // λ̃(𝔮) = q^{2−k/2}e^{−1}a + q·c^{−1}e²; λ̃(𝔮̄) = q^{2−k/2}e·a + q·c·e^{−2}.
            let lam_q = lp_q(2 - k / 2).mul(&e(-1)).mul(&a).add(&lp_q(1).mul(&c(-1)).mul(&e(2)));
            let lam_qbar = lp_q(2 - k / 2).mul(&e(1)).mul(&a).add(&lp_q(1).mul(&c(1)).mul(&e(-2)));
            // N = q.
            let lhs = XPoly::one()
                .sub(&x(lam_qbar.mul(&c(-1)).mul(&lp_q(-1)), 1))
                .add(&x(lam_q.mul(&c(-1)).mul(&lp_q(-1)), 2))
                .sub(&x(c(-1).mul(&c(-1)), 3));
            // Y = e·c^{−1}·q^{1−k/2}·x; BC factor 1 − a·Y + q^{k−2}·Y²;
            // abelian factor 1 − e^{−2}·x.
            let y = e(1).mul(&c(-1)).mul(&lp_q(1 - k / 2));
            let bc = XPoly::one()
                .sub(&x(a.mul(&y), 1))
                .add(&x(lp_q(k - 2).mul(&y).mul(&y), 2));
            let ab = XPoly::one().sub(&x(e(-2), 1));
            (lhs, bc.mul(&ab))
        }
        LocalType::Inert => {
            // e = c = 1 forced; λ̃ = q^{4−k}a² + 2q² + q; N = q².
            let lam = lp_q(4 - k)
                .mul(&a)
                .mul(&a)
                .add(&lp_q(2).scale_rational(&big(2)))
                .add(&lp_q(1));
            let mid = lp_q(1).sub(&lam).mul(&lp_q(-2));
            let lhs = XPoly::one()
                .sub(&x(lp_int(1), 1))
                .mul(&XPoly::from_coeffs(vec![lp_int(1), mid, lp_int(1)]));
            // Y = q^{2−k}x; BC factor 1 − (a² + 2q^{k−2})Y + q^{2k−4}Y²
            // (the nebentypus is −1 at inert primes, so αβ = −q^{k−2} and
            // α² + β² = a² + 2q^{k−2}); abelian factor 1 − x.
            let yc = lp_q(2 - k);
            let bc = XPoly::one()
                .sub(&x(a.mul(&a).add(&lp_q(k - 2).scale_rational(&big(2))).mul(&yc), 1))
                .add(&x(lp_q(2 * k - 4).mul(&yc).mul(&yc), 2));
            let ab = XPoly::one().sub(&x(lp_int(1), 1));
            (lhs, bc.mul(&ab))
        }
        LocalType::Ramified => {
            // ā = q^{k−2}a^{−1}; λ̃ = q^{2−k/2}e(a+ā) + q·c·e^{−2}; N = q.
            let abar = lp_q(k - 2).mul(&LaurentPoly::sym_pow("a", -1));
            let lam = lp_q(2 - k / 2)
                .mul(&e(1))
                .mul(&a.add(&abar))
                .add(&lp_q(1).mul(&c(1)).mul(&e(-2)));
            let mid = lp_q(1).sub(&lam.mul(&c(-1))).mul(&lp_q(-1));
            let lhs = XPoly::one()
                .sub(&x(lp_int(1), 1))
                .mul(&XPoly::from_coeffs(vec![lp_int(1), mid, lp_int(1)]));
            let y = e(1).mul(&c(-1)).mul(&lp_q(1 - k / 2));
            let bc = XPoly::one()
                .sub(&x(a.add(&abar).mul(&y), 1))
                .add(&x(lp_q(k - 2).mul(&y).mul(&y), 2));
            let ab = XPoly::one().sub(&x(e(-2), 1));
            (lhs, bc.mul(&ab))
        }
    };

    let mut sign_cases = Vec::new();
    let holds = match ty {
        LocalType::Split | LocalType::Inert => lhs == rhs,
        LocalType::Ramified => {
            let mut all = true;
            for es in [1i64, -1] {
                for cs in [1i64, -1] {
                    let l = lhs.subst_sign("e", es).subst_sign("c", cs);
                    let r = rhs.subst_sign("e", es).subst_sign("c", cs);
                    let ok = l == r;
                    all &= ok;
                    sign_cases.push((es, cs, ok));
                }
            }
            all
        }
    };
    EulerIdentityCertificate {
        local_type: ty,
        k,
        lhs,
        rhs,
        holds,
        sign_cases,
    }
}

/// Termwise q-divisibility of the normalized eigenvalue table: every
/// monomial of λ(𝔮), written over the invertible symbols a, e, c, q (with
/// ā = q^{k−2}a^{−1} at ramified primes), carries a strictly positive power
/// of q. This is the "never T_𝔮-ordinary" statement in symbolic form.
pub fn eigenvalue_q_divisibility(ty: LocalType, k: i64) -> (LaurentPoly, bool) {
    assert!(k >= 4 && k % 2 == 0);
    let a = LaurentPoly::sym("a");
    let e = |n: i64| LaurentPoly::sym_pow("e", n);
    let c = |n: i64| LaurentPoly::sym_pow("c", n);
    let lam = match ty {
        LocalType::Split => lp_q(1)
            .mul(&e(-1))
            .mul(&a)
            .add(&lp_q(k / 2).mul(&c(-1)).mul(&e(2))),
        LocalType::Ramified => {
            let abar = lp_q(k - 2).mul(&LaurentPoly::sym_pow("a", -1));
            lp_q(1)
                .mul(&e(1))
                .mul(&a.add(&abar))
                .add(&lp_q(k / 2).mul(&c(1)).mul(&e(-2)))
        }
        LocalType::Inert => lp_q(1)
            .mul(&a)
            .mul(&a)
            .add(&lp_q(k - 1).scale_rational(&big(2)))
            .add(&lp_q(k - 2)),
    };
    let divisible = lam.min_exponent("q").is_some_and(|v| v >= 1);
    (lam, divisible)
}

// ---------------------------------------------------------------------------
// Fourier–Jacobi coefficients of the p-modified lift
// ---------------------------------------------------------------------------

/// p-exponent of a nonzero rational number.
fn vp_rational(r: &BigRational, p: u64) -> i64 {
    assert!(!r.is_zero(), "valuation of zero");
    valuation_big(r.numer(), p) as i64 - valuation_big(r.denom(), p) as i64
}

/// r^e for a possibly negative exponent (e < 0 needs r ≠ 0).
fn pow_ratio(r: &BigRational, e: i64) -> Result<BigRational> {
    if e < 0 {
        if r.is_zero() {
            return Err(Error::Invalid("negative power of zero".into()));
        }
        return Ok(BigRational::one() / pow_ratio(r, -e)?);
    }
    let mut acc = BigRational::one();
    for _ in 0..e {
        acc *= r;
    }
    Ok(acc)
}

fn inv_factorial(m: usize) -> BigRational {
    let mut f = BigInt::one();
    for j in 2..=m {
        f *= BigInt::from(j);
    }
    BigRational::new(BigInt::one(), f)
}

/// 2πi as a ball.
fn two_pi_i(prec: i64) -> ComplexBall {
    ComplexBall::new(RealBall::zero(prec), two_pi(prec))
}

/// Slightly shrunk Im σ(x + yτ) = y·√|D|/2 as an f64, for precision planning
/// only (all correctness comes from the certified balls downstream).
fn im_sigma_f64(tau: &KElement) -> f64 {
    let disc_abs = (4 * tau.n - tau.t * tau.t) as f64;
    let y = tau.y.to_f64().unwrap_or(0.0);
    y * disc_abs.sqrt() / 2.0 * 0.999
}

/// Both coordinates of σ(x + yτ) as f64, for planning only.
fn sigma_f64(e: &KElement) -> (f64, f64) {
    let disc_abs = (4 * e.n - e.t * e.t) as f64;
    let x = e.x.to_f64().unwrap_or(0.0);
    let y = e.y.to_f64().unwrap_or(0.0);
    (x + y * e.t as f64 / 2.0, y * disc_abs.sqrt() / 2.0)
}

/// Number of q-coefficients that pushes the series tail at Im τ = y below
/// 2^{−(prec+64)}, with margin.
fn plan_want(prec: i64, y: f64) -> usize {
    let bits = (prec + 64) as f64;
    let n = bits * std::f64::consts::LN_2 / (std::f64::consts::TAU * y) * 1.15;
    (n.ceil() as usize).max(32) + 16
}

fn ball_rad_within(b: &ComplexBall, t: i64) -> bool {
    let tol = Dyadic::pow2(t);
    b.re.rad.cmp_val(&tol) != Ordering::Greater && b.im.rad.cmp_val(&tol) != Ordering::Greater
}

/// Everything fixed by the choice of (K, p, r, k, f, ε, χ): the input
/// eigenform f of weight k−1 and level p^r·|D| with quadratic nebentypus, the
/// auxiliary characters, the split normalization at p, and class
/// representatives prime to p·|D| for the 𝔟-sum.
pub struct LiftContext {
    pub field: FieldData,
    pub p: u64,
    pub r: u32,
    /// Weight k of the lifted form (even, ≥ 6).
    pub weight: i64,
    pub f: EigenformData,
    pub eps: ClassicalHeckeChar,
    /// Weight-k character: the lift transforms under χ.
    pub chi: ClassicalHeckeChar,
    pub split: SplitEmbedding,
    pub classes: ClassGroup,
}

pub fn lift_context(
    field: &FieldData,
    p: u64,
    r: u32,
    weight: i64,
    f: EigenformData,
    eps: ClassicalHeckeChar,
    chi: ClassicalHeckeChar,
) -> Result<LiftContext> {
    if weight % 2 != 0 || weight < 6 {
        return Err(Error::Invalid(format!(
            "lift weight must be even and ≥ 6, got {}",
            weight
        )));
    }
    if f.weight != weight - 1 {
        return Err(Error::Invalid(format!(
            "input form has weight {}, the weight-{} lift needs k−1 = {}",
            f.weight,
            weight,
            weight - 1
        )));
    }
    let disc_abs = field.disc.unsigned_abs();
    let expected_level = p
        .checked_pow(r)
        .and_then(|q| q.checked_mul(disc_abs))
        .ok_or_else(|| Error::Invalid("level p^r·|D| overflows".into()))?;
    if f.level != expected_level {
        return Err(Error::Invalid(format!(
            "input form has level {}, expected p^r·|D| = {}",
            f.level, expected_level
        )));
    }
    if chi.weight() != Some(weight) {
        return Err(Error::Invalid(
            "χ must have the lift's weight (infinity type (−k/2, k/2))".into(),
        ));
    }
    let split = split_embedding(field, p, r)?;
    let classes = class_group(field, p * disc_abs)?;
    Ok(LiftContext {
        field: field.clone(),
        p,
        r,
        weight,
        f,
        eps,
        chi,
        split,
        classes,
    })
}

/// One 𝔟-class term of a Fourier–Jacobi coefficient: the exact prefactor
/// ε(𝔞̄𝔞⁻¹)·(ε³χ⁻¹)(𝔟)·N(𝔟)^{k/2}, the CM point with 𝔞·conj(𝔟) = ℤ + ℤτ,
/// and the theta lattice (δ)·conj(𝔭^r·𝔟).
#[derive(Clone, Debug)]
struct FjBlock {
    coef: CycK,
    cm: CMPoint,
    theta_lat: Ideal,
}

/// Build the block for an exactly normalized 𝔟 (𝔞·conj(𝔟) must be ℤ + ℤτ on
/// the nose; representatives are adjusted by `fj_blocks` before calling).
fn fj_block_for(
    ctx: &LiftContext,
    a_ideal: &Ideal,
    b_ideal: &Ideal,
    eps_ratio: &CycK,
) -> Result<FjBlock> {
    let prod = a_ideal.mul(&b_ideal.conj())?;
    let (lam, cm) = ideal_to_cm_basis(&prod);
    if !lam.y.is_zero() || lam.x != BigRational::one() {
        return Err(Error::Invalid(
            "𝔟 is not normalized against 𝔞: need 𝔞·conj(𝔟) = ℤ + ℤτ exactly".into(),
        ));
    }
    let chi_val = ctx.chi.eval(b_ideal)?;
    if chi_val.is_zero() {
        return Err(Error::Invalid(
            "𝔟 meets the conductor of χ; pick representatives prime to it".into(),
        ));
    }
    let norm_pow = pow_ratio(&b_ideal.norm(), ctx.weight / 2)?;
    let coef = eps_ratio.clone()
        * ctx.eps.eval(b_ideal)?.pow(3)?
        * chi_val.inv()?.scale_rational(&norm_pow);
    let pr_b_bar = ctx.split.p_ideal.pow(ctx.r as i32)?.mul(b_ideal)?.conj();
    let delta_id = Ideal::principal(&ctx.field, &KElement::delta(&ctx.field))?;
    let theta_lat = delta_id.mul(&pr_b_bar)?;
    Ok(FjBlock {
        coef,
        cm,
        theta_lat,
    })
}

/// All 𝔟-class blocks for the coefficient attached to 𝔞: one per ideal
/// class, with the representative scaled inside its class so that
/// 𝔞·conj(𝔟) = ℤ + ℤτ_{𝔞,𝔟} exactly.
fn fj_blocks(ctx: &LiftContext, a_ideal: &Ideal) -> Result<Vec<FjBlock>> {
    let pbar = ctx.split.p_ideal.conj();
    for pr in [&ctx.split.p_ideal, &pbar] {
        if valuation_at_prime(&ctx.field, a_ideal, pr)? != 0 {
            return Err(Error::Invalid(
                "the coefficient ideal 𝔞 must be prime to p".into(),
            ));
        }
    }
    let aratio = a_ideal.conj().mul(&a_ideal.inverse())?;
    let eps_ratio = ctx.eps.eval(&aratio)?;
    if eps_ratio.is_zero() {
        return Err(Error::Invalid(
            "𝔞 meets the conductor of ε; the prefactor ε(𝔞̄𝔞⁻¹) vanishes".into(),
        ));
    }
    let mut out = Vec::with_capacity(ctx.classes.reps.len());
    for b0 in &ctx.classes.reps {
        let prod0 = a_ideal.mul(&b0.conj())?;
        let (lam, _) = ideal_to_cm_basis(&prod0);
        // λ is rational by construction; dividing 𝔟₀ by it stays in the class
        // and must keep 𝔟 prime to p.
        if vp_rational(&lam.x, ctx.p) != 0 {
            return Err(Error::Invalid(
                "normalized representative is no longer prime to p".into(),
            ));
        }
        let b_ideal = b0.scale_by(&lam.inverse()?, &ctx.field)?;
        out.push(fj_block_for(ctx, a_ideal, &b_ideal, &eps_ratio)?);
    }
    Ok(out)
}

/// A single Fourier–Jacobi coefficient g_{n/N(𝔞),𝔞}, as a certified w-Taylor
/// polynomial around w = 0.
#[derive(Clone, Debug)]
pub struct FJCoefficient {
    pub ideal: Ideal,
    /// The integer n; the jacobi index of the coefficient is n/N(𝔞).
    pub degree: u64,
    /// taylor[m] is the full m-th Taylor coefficient, (2πi)^m included.
    pub taylor: Vec<ComplexBall>,
    /// The exact scalar coef·(nδ)^m multiplying the transcendental part,
    /// available when the class group contributes a single block.
    pub algebraic_core: Option<Vec<CycK>>,
}

/// Shared Taylor-coefficient engine: for each block, form the products
/// f·(m-th theta slice), apply T_n at weight k+m, and evaluate at the block's
/// CM point with a certified tail.
fn fj_sum_blocks(
    ctx: &LiftContext,
    blocks: &[FjBlock],
    a_ideal: &Ideal,
    n: u64,
    m_order: usize,
    prec: i64,
    f_q: &QExpansion<CycK>,
    f_gb: &GrowthBound,
    want: usize,
) -> Result<FJCoefficient> {
    let k = ctx.weight;
    let mut taylor = vec![ComplexBall::zero(prec); m_order + 1];
    let mut core = vec![CycK::zero(); m_order + 1];
    let ndelta = KElement::delta(&ctx.field).scale(&big(n as i64));
    let tpi = two_pi_i(prec);
    for block in blocks {
        let theta = intrinsic_theta(&ctx.field, &block.theta_lat, m_order, want * n as usize);
        for (m, slot) in taylor.iter_mut().enumerate() {
            let slice = theta_deriv(&theta, m)?.scale_ratio(&inv_factorial(m));
            let g_m = f_q.mul(&slice);
            let h_m = g_m.hecke_tn(n, want)?;
            let gb_m = f_gb
                .mul(&theta_slice_growth(&block.theta_lat, m))
                .hecke_tn(n, k + m as i64);
            let val = eval_cm(&h_m, &block.cm, &gb_m, prec, 0)?;
            let alg = block.coef.clone() * CycK::from_k(ndelta.pow(m as i64)?);
            *slot = slot.clone() + alg.embed_sigma(prec) * tpi.powi(m as u32) * val;
            core[m] = core[m].clone() + alg;
        }
    }
    Ok(FJCoefficient {
        ideal: a_ideal.clone(),
        degree: n,
        taylor,
        algebraic_core: (blocks.len() == 1).then_some(core),
    })
}

fn fj_zero_coefficient(
    a_ideal: &Ideal,
    m_order: usize,
    prec: i64,
    single_block: bool,
) -> FJCoefficient {
    FJCoefficient {
        ideal: a_ideal.clone(),
        degree: 0,
        taylor: vec![ComplexBall::zero(prec); m_order + 1],
        algebraic_core: single_block.then_some(vec![CycK::zero(); m_order + 1]),
    }
}

fn fj_plan(blocks: &[FjBlock], prec: i64) -> usize {
    let y_min = blocks
        .iter()
        .map(|b| im_sigma_f64(&b.cm.tau))
        .fold(f64::INFINITY, f64::min);
    plan_want(prec, y_min)
}

fn fj_p_modified_once(
    ctx: &LiftContext,
    a_ideal: &Ideal,
    n: u64,
    m_order: usize,
    prec: i64,
) -> Result<FJCoefficient> {
    let blocks = fj_blocks(ctx, a_ideal)?;
    if n == 0 {
        // The lift is a cusp form: the degree-0 coefficient vanishes.
        return Ok(fj_zero_coefficient(a_ideal, m_order, prec, blocks.len() == 1));
    }
    let want = fj_plan(&blocks, prec);
    let f_q = ctx.f.to_qexp(want * n as usize)?;
    let f_gb = ctx.f.growth();
    fj_sum_blocks(ctx, &blocks, a_ideal, n, m_order, prec, &f_q, &f_gb, want)
}

/// The degree-n/N(𝔞) Fourier–Jacobi coefficient of the p-modified lift:
///
///   g(w) = ε(𝔞̄𝔞⁻¹) Σ_𝔟 (ε³χ⁻¹)(𝔟) N(𝔟)^{k/2}
///            · T_n( f(τ)·ϑ_{(δ)·conj(𝔭^r𝔟)}(nδw, τ) ) |_{τ = τ_{𝔞,𝔟}},
///
/// expanded to w-Taylor order `m_order` (slice m carries Hecke weight k+m).
/// If `tol_log2` is set, the computation retries with doubled precision (at
/// most four attempts) until every Taylor ball has radius at most 2^tol.
pub fn fj_p_modified(
    ctx: &LiftContext,
    a_ideal: &Ideal,
    n: u64,
    m_order: usize,
    prec: i64,
    tol_log2: Option<i64>,
) -> Result<FJCoefficient> {
    let mut cur = prec.max(64);
    for _ in 0..4 {
        let c = fj_p_modified_once(ctx, a_ideal, n, m_order, cur)?;
        let ok = match tol_log2 {
            None => true,
            Some(t) => c.taylor.iter().all(|b| ball_rad_within(b, t)),
        };
        if ok {
            return Ok(c);
        }
        cur *= 2;
    }
    Err(Error::Precision(format!(
        "Fourier–Jacobi radii still above 2^{} at working precision {}",
        tol_log2.unwrap_or(0),
        cur / 2
    )))
}

/// Same computation with a caller-supplied weight-(k−1) expansion in place of
/// the stored eigenform (the growth bound must certify the expansion): probes
/// linearity of the construction in the input form.
pub fn fj_p_modified_from_qexp(
    ctx: &LiftContext,
    a_ideal: &Ideal,
    n: u64,
    m_order: usize,
    prec: i64,
    f_q: &QExpansion<CycK>,
    f_gb: &GrowthBound,
) -> Result<FJCoefficient> {
    if f_q.weight != ctx.weight - 1 {
        return Err(Error::Invalid(format!(
            "supplied expansion has weight {}, expected {}",
            f_q.weight,
            ctx.weight - 1
        )));
    }
    let blocks = fj_blocks(ctx, a_ideal)?;
    if n == 0 {
        return Ok(fj_zero_coefficient(a_ideal, m_order, prec, blocks.len() == 1));
    }
    let want = fj_plan(&blocks, prec);
    if f_q.n_prec() < want * n as usize {
        return Err(Error::Precision(format!(
            "supplied expansion has {} coefficients, this evaluation needs {}",
            f_q.n_prec(),
            want * n as usize
        )));
    }
    fj_sum_blocks(ctx, &blocks, a_ideal, n, m_order, prec, f_q, f_gb, want)
}

/// A table of Fourier–Jacobi coefficients, keyed by (class index of 𝔞, n).
#[derive(Clone, Debug)]
pub struct FJExpansion {
    pub weight: i64,
    pub p: u64,
    pub r: u32,
    pub disc: i64,
    /// Power of the CM period carried formally by every table entry.
    pub omega_grade: i64,
    pub table: BTreeMap<(usize, u64), FJCoefficient>,
}

pub fn lift_table(
    ctx: &LiftContext,
    n_max: u64,
    m_order: usize,
    prec: i64,
    tol_log2: Option<i64>,
) -> Result<FJExpansion> {
    let mut table = BTreeMap::new();
    for (ci, rep) in ctx.classes.reps.iter().enumerate() {
        for n in 1..=n_max {
            let c = fj_p_modified(ctx, rep, n, m_order, prec, tol_log2)?;
            table.insert((ci, n), c);
        }
    }
    Ok(FJExpansion {
        weight: ctx.weight,
        p: ctx.p,
        r: ctx.r,
        disc: ctx.field.disc,
        omega_grade: 0,
        table,
    })
}

impl fmt::Display for FJExpansion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(
            f,
            "fj-table weight={} p={} r={} disc={} omega_grade={} rows={}",
            self.weight,
            self.p,
            self.r,
            self.disc,
            self.omega_grade,
            self.table.len()
        )?;
        for ((ci, n), c) in &self.table {
            writeln!(
                f,
                "coef class={} n={} ideal={} index={}",
                ci,
                n,
                c.ideal,
                big(*n as i64) / c.ideal.norm()
            )?;
            for (m, b) in c.taylor.iter().enumerate() {
                writeln!(f, "  m={} re={} im={}", m, b.re, b.im)?;
            }
            if let Some(core) = &c.algebraic_core {
                for (m, a) in core.iter().enumerate() {
                    writeln!(f, "  core m={} {}", m, a)?;
                }
            }
        }
        Ok(())
    }
}

/// How to remove the weight-k CM-period factor from a table: formally (the
/// grade records the power of Ω₀ carried by the entries) or by dividing
/// through a supplied numerical period.
pub enum OmegaMode {
    Formal,
    Numeric(ComplexBall),
}

pub fn arithmetic_normalize(fj: &FJExpansion, mode: &OmegaMode) -> Result<FJExpansion> {
    let mut out = fj.clone();
    match mode {
        OmegaMode::Formal => {
            out.omega_grade += fj.weight;
        }
        OmegaMode::Numeric(om) => {
            let scale = om.inv()?.powi(fj.weight as u32);
            for c in out.table.values_mut() {
                for b in c.taylor.iter_mut() {
                    *b = b.clone() * scale.clone();
                }
                // The exact core does not absorb a transcendental unit.
                c.algebraic_core = None;
            }
        }
    }
    Ok(out)
}

/// Direct evaluator for one Fourier–Jacobi coefficient g(w): expands T_n into
/// its coset sum
///
///   T_n(F)(τ₀) = n^{k+m−1} Σ_{ad=n} χ(a) d^{−(k+m)} Σ_{b mod d} F((aτ₀+b)/d)
///
/// slice by slice and resums the Taylor series in closed form, so that
///
///   g(w) = Σ_𝔟 coef_𝔟 · n^{k−1} Σ_{ad=n} χ(a) d^{−k}
///            Σ_{b mod d} f(τ_abd)·ϑ_{𝔠_𝔟}(a·nδ·w, τ_abd),
///
/// with every factor evaluated by certified summation. Entirely independent
/// of the w-Taylor route in `fj_p_modified` (no Hecke action on coefficients,
/// no slice products), so agreement between the two is a real cross-check.
pub struct FJEvaluator {
    weight: i64,
    n: u64,
    prec: i64,
    blocks: Vec<FjBlock>,
    f_ball: QExpansion<ComplexBall>,
    f_gb: GrowthBound,
    chi_product: Neben,
    sigma_ndelta: ComplexBall,
}

impl FJEvaluator {
    pub fn new(ctx: &LiftContext, a_ideal: &Ideal, n: u64, prec: i64) -> Result<FJEvaluator> {
        if n == 0 {
            return Err(Error::Invalid(
                "degree-0 coefficient vanishes identically; nothing to evaluate".into(),
            ));
        }
        let blocks = fj_blocks(ctx, a_ideal)?;
        let y_min = blocks
            .iter()
            .map(|b| im_sigma_f64(&b.cm.tau))
            .fold(f64::INFINITY, f64::min)
            / n as f64;
        let want = plan_want(prec, y_min);
        let f_q = ctx.f.to_qexp(want)?;
        let f_ball = qexp_to_balls(&f_q, prec);
        let disc_abs = ctx.field.disc.unsigned_abs();
        let chi_product = ctx.f.neben.mul(&Neben {
            kron_d: ctx.field.disc,
            level: disc_abs,
        });
        let ndelta = KElement::delta(&ctx.field).scale(&big(n as i64));
        let sigma_ndelta = CycK::from_k(ndelta).embed_sigma(prec);
        Ok(FJEvaluator {
            weight: ctx.weight,
            n,
            prec,
            blocks,
            f_ball,
            f_gb: ctx.f.growth(),
            chi_product,
            sigma_ndelta,
        })
    }

    pub fn eval(&self, w: &ComplexBall) -> Result<ComplexBall> {
        let k = self.weight;
        let prec = self.prec;
        let mut total = ComplexBall::zero(prec);
        for block in &self.blocks {
            let tau0 = CycK::from_k(block.cm.tau.clone()).embed_sigma(prec);
            let mut bsum = ComplexBall::zero(prec);
            for a in divisors(self.n) {
                let chi_a = self.chi_product.eval(a);
                if chi_a == 0 {
                    continue;
                }
                let d = self.n / a;
                let mut scale =
                    pow_ratio(&big(self.n as i64), k - 1)? / pow_ratio(&big(d as i64), k)?;
                if chi_a < 0 {
                    scale = -scale;
                }
                let w_arg = w.clone() * self.sigma_ndelta.mul_rational(&big(a as i64));
                let inv_d = BigRational::new(BigInt::one(), BigInt::from(d));
                let mut dsum = ComplexBall::zero(prec);
                for b in 0..d {
                    let tau_abd = (tau0.mul_rational(&big(a as i64))
                        + ComplexBall::from_rationals(&big(b as i64), &BigRational::zero(), prec))
                    .mul_rational(&inv_d);
                    let f_val = eval_ball(&self.f_ball, &tau_abd, &self.f_gb, 0)?;
                    let th = theta_lattice_eval(&block.theta_lat, &w_arg, &tau_abd, prec)?;
                    dsum = dsum + f_val * th;
                }
                bsum = bsum + dsum.mul_rational(&scale);
            }
            total = total + block.coef.embed_sigma(prec) * bsum;
        }
        Ok(total)
    }
}

/// One verified lattice translate of the quasi-periodicity law.
#[derive(Clone, Debug)]
pub struct TranslationCheck {
    pub s: KElement,
    /// ψ(s) = (−1)^{r·D·N(s)}.
    pub sign: i64,
    /// Certified upper bound on |g(w+s) − ψ(s)·e^{−2πi·r·δ·s̄·(w+s/2)}·g(w)|.
    pub residual: Dyadic,
    /// Certified upper bound on |g(w+s)| (scale reference for the residual).
    pub magnitude: Dyadic,
}

/// Working precision for a translate: the theta sums cancel from a peak of
/// roughly exp(2π·N(𝔠)·|z|²/(4y)) down to a moderate value, so the planner
/// budgets those bits on top of the base precision. Planning only; the
/// returned residuals are certified regardless.
fn fe_plan_bits(
    blocks: &[FjBlock],
    n: u64,
    disc: i64,
    w: (f64, f64),
    s: (f64, f64),
    base: i64,
) -> i64 {
    let sd = (-(disc as f64)).sqrt();
    let ws = ((w.0 + s.0).powi(2) + (w.1 + s.1).powi(2)).sqrt();
    let mut peak: f64 = 0.0;
    for block in blocks {
        let y0 = im_sigma_f64(&block.cm.tau);
        let nl = block.theta_lat.norm().to_f64().unwrap_or(1.0);
        for a in divisors(n) {
            let d = (n / a) as f64;
            let a = a as f64;
            let y = a * y0 / d;
            let z = a * n as f64 * sd * ws;
            peak = peak.max(nl * z * z / (4.0 * y));
        }
    }
    let bits = std::f64::consts::TAU * peak * std::f64::consts::LOG2_E;
    let raw = base + bits.ceil() as i64 + 64;
    (raw + 511) / 512 * 512
}

/// Check the defining quasi-periodicity of the theta space the coefficient
/// g_{n/N(𝔞),𝔞} lives in: for every supplied s ∈ 𝔞,
///
///   g(w+s) = ψ(s)·e^{−2πi·r·δ·s̄·(w+s/2)}·g(w),   ψ(s) = (−1)^{r·D·N(s)},
///
/// with r = n/N(𝔞). Both sides are evaluated through `FJEvaluator` at a
/// per-translate working precision; the returned residuals are certified
/// upper bounds.
pub fn theta_space_translation_check(
    ctx: &LiftContext,
    a_ideal: &Ideal,
    n: u64,
    w_re: &BigRational,
    w_im: &BigRational,
    translates: &[KElement],
    base_prec: i64,
) -> Result<Vec<TranslationCheck>> {
    let blocks = fj_blocks(ctx, a_ideal)?;
    let r_idx = big(n as i64) / a_ideal.norm();
    let disc = ctx.field.disc;
    let w_f64 = (
        w_re.to_f64().unwrap_or(0.0),
        w_im.to_f64().unwrap_or(0.0),
    );
    let plans: Vec<i64> = translates
        .iter()
        .map(|s| fe_plan_bits(&blocks, n, disc, w_f64, sigma_f64(s), base_prec))
        .collect();
    let mut order: Vec<usize> = (0..translates.len()).collect();
    order.sort_by_key(|&i| plans[i]);

    let mut results: Vec<Option<TranslationCheck>> = vec![None; translates.len()];
    let mut cached: Option<(i64, FJEvaluator, ComplexBall)> = None;
    for &i in &order {
        let prec = plans[i];
        let s = &translates[i];
        if cached.as_ref().map(|c| c.0) != Some(prec) {
            let ev = FJEvaluator::new(ctx, a_ideal, n, prec)?;
            let w = ComplexBall::from_rationals(w_re, w_im, prec);
            let gw = ev.eval(&w)?;
            cached = Some((prec, ev, gw));
        }
        let (_, ev, gw) = cached.as_ref().expect("cache filled above");
        let w = ComplexBall::from_rationals(w_re, w_im, prec);
        let s_ball = CycK::from_k(s.clone()).embed_sigma(prec);
        let lhs = ev.eval(&(w.clone() + s_ball.clone()))?;
        // ψ(s) = (−1)^{r·D·N(s)}; the exponent is an integer because N(𝔞)
        // divides N(s) for s ∈ 𝔞.
        let exponent = &r_idx * big(disc) * s.norm();
        if !exponent.is_integer() {
            return Err(Error::Invalid(format!(
                "translate {} does not lie in 𝔞 (index·D·norm = {} is not integral)",
                s, exponent
            )));
        }
        let sign = if exponent.to_integer().is_odd() { -1 } else { 1 };
        let delta_ball = CycK::from_k(KElement::delta(&ctx.field)).embed_sigma(prec);
        let half = BigRational::new(BigInt::one(), BigInt::from(2));
        let inner = w.clone() + s_ball.mul_rational(&half);
        let zeta = (delta_ball * s_ball.conj() * inner).mul_rational(&r_idx);
        let mut rhs = (-(two_pi_i(prec) * zeta)).exp() * gw.clone();
        if sign < 0 {
            rhs = -rhs;
        }
        let residual = (lhs.clone() - rhs).upper_abs();
        results[i] = Some(TranslationCheck {
            s: s.clone(),
            sign,
            residual,
            magnitude: lhs.upper_abs(),
        });
    }
    Ok(results.into_iter().map(|r| r.expect("all filled")).collect())
}

/// Degree-n Fourier–Jacobi data for the level-one lift:
///
///   g(w) = ε(𝔞̄𝔞⁻¹) Σ_𝔟 (ε³χ⁻¹)(𝔟) N(𝔟)^{k/2}
///            · T_n( Tr( f(τ)·ϑ_{conj(𝔟)}(nδw, τ) ) ) |_{τ = τ_{𝔞,𝔟}},
///
/// where Tr is the trace from the form's level down to level one. The trace
/// is never approximated here: the caller must supply, for every Taylor
/// order m ≤ m_order, the traced weight-(k+m) level-one expansion (with a
/// certifying growth bound) for the normalized class representative; without
/// that data the call reports Unsupported. Restricted to class number one so
/// that a single trace family determines the coefficient.
#[allow(clippy::too_many_arguments)]
pub fn fj_level_one(
    field: &FieldData,
    weight: i64,
    eps: &ClassicalHeckeChar,
    chi: &ClassicalHeckeChar,
    a_ideal: &Ideal,
    n: u64,
    m_order: usize,
    trace_data: Option<&[(QExpansion<CycK>, GrowthBound)]>,
    prec: i64,
) -> Result<FJCoefficient> {
    let k = weight;
    if k % 2 != 0 || k < 6 {
        return Err(Error::Invalid(format!(
            "lift weight must be even and ≥ 6, got {}",
            k
        )));
    }
    let data = trace_data.ok_or_else(|| {
        Error::Unsupported(
            "the trace to level one must be supplied by the caller; it is never approximated"
                .into(),
        )
    })?;
    let classes = class_group(field, 1)?;
    if classes.reps.len() > 1 {
        return Err(Error::Unsupported(
            "the level-one table here needs class number one".into(),
        ));
    }
    if data.len() < m_order + 1 {
        return Err(Error::Invalid(format!(
            "need {} trace entries for Taylor order {}, got {}",
            m_order + 1,
            m_order,
            data.len()
        )));
    }
    // Normalize 𝔟 inside the principal class: 𝔞·conj(𝒪) = λ(ℤ + ℤτ) gives
    // 𝔟 = λ⁻¹𝒪 with 𝔞·conj(𝔟) = ℤ + ℤτ.
    let (lam, cm) = ideal_to_cm_basis(a_ideal);
    let b_ideal = Ideal::principal(field, &lam.inverse()?)?;
    let aratio = a_ideal.conj().mul(&a_ideal.inverse())?;
    let eps_ratio = eps.eval(&aratio)?;
    let chi_val = chi.eval(&b_ideal)?;
    if eps_ratio.is_zero() || chi_val.is_zero() {
        return Err(Error::Invalid(
            "representatives meet a character conductor".into(),
        ));
    }
    let coef = eps_ratio
        * eps.eval(&b_ideal)?.pow(3)?
        * chi_val
            .inv()?
            .scale_rational(&pow_ratio(&b_ideal.norm(), k / 2)?);
    if n == 0 {
        let mut zero = fj_zero_coefficient(a_ideal, m_order, prec, true);
        zero.degree = 0;
        return Ok(zero);
    }
    let want = plan_want(prec, im_sigma_f64(&cm.tau));
    let ndelta = KElement::delta(field).scale(&big(n as i64));
    let tpi = two_pi_i(prec);
    let mut taylor = vec![ComplexBall::zero(prec); m_order + 1];
    let mut core = vec![CycK::zero(); m_order + 1];
    for (m, slot) in taylor.iter_mut().enumerate() {
        let (t_m, gb_m) = &data[m];
        if t_m.level != 1 {
            return Err(Error::Invalid(format!(
                "trace entry m={} lives at level {}, expected level one",
                m, t_m.level
            )));
        }
        if t_m.weight != k + m as i64 {
            return Err(Error::Invalid(format!(
                "trace entry m={} has weight {}, expected k+m = {}",
                m,
                t_m.weight,
                k + m as i64
            )));
        }
        if t_m.n_prec() < want * n as usize {
            return Err(Error::Precision(format!(
                "trace entry m={} has {} coefficients, this evaluation needs {}",
                m,
                t_m.n_prec(),
                want * n as usize
            )));
        }
        let h = t_m.hecke_tn(n, want)?;
        let gb_h = gb_m.hecke_tn(n, k + m as i64);
        let val = eval_cm(&h, &cm, &gb_h, prec, 0)?;
        let alg = coef.clone() * CycK::from_k(ndelta.pow(m as i64)?);
        *slot = alg.embed_sigma(prec) * tpi.powi(m as u32) * val;
        core[m] = alg;
    }
    Ok(FJCoefficient {
        ideal: a_ideal.clone(),
        degree: n,
        taylor,
        algebraic_core: Some(core),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::imquad::field_init;

    // -- multiplicity ------------------------------------------------------

    fn gaussian_lattice(p: u64) -> (FieldData, LatticePair) {
        let field = field_init(-1).unwrap();
        let lat = lattice_pair(&field, p, 1).unwrap();
        (field, lat)
    }

    #[test]
    fn split_embedding_data_is_exact() {
        let field = field_init(-1).unwrap();
        let s = split_embedding(&field, 5, 1).unwrap();
        // roots of x² + 1 mod 25 are 7 and 18; the smaller is τ₁.
        assert_eq!((s.tau1, s.tau2), (7, 18));
        assert_eq!((s.tau1 * s.tau1 + 1) % 25, 0);
        // μ = τ₁ − τ₂ mod 25 and μ·μ⁻¹ ≡ 1.
        assert_eq!(s.mu, (25 + 7 - 18) % 25);
        assert_eq!(s.mu * s.mu_inv % 25, 1);
        // ι₁ kills 𝔭: the generator b + τ embeds to 0 mod 5.
        let (_, gen) = s.p_ideal.basis();
        assert_eq!(s.embed(&gen, 1) % 5, 0);
        assert_ne!(s.embed(&gen, 2) % 5, 0);
        // Embeddings are ring maps: ι_j(τ)² + 1 ≡ 0.
        let tau = KElement::tau(&field);
        for j in [1, 2] {
            let v = s.embed(&tau, j);
            assert_eq!((v * v + 1) % 25, 0);
        }
    }

    #[test]
    fn split_embedding_rejects_bad_primes() {
        let field = field_init(-1).unwrap();
        assert!(split_embedding(&field, 7, 1).is_err()); // inert
        assert!(split_embedding(&field, 2, 1).is_err()); // even / ramified
        let field5 = field_init(-5).unwrap();
        assert!(split_embedding(&field5, 5, 1).is_err()); // divides disc −20
        assert!(split_embedding(&field, 5, 0).is_err()); // depth must be ≥ 1
    }

    #[test]
    fn multiplicity_generic_zero_gram_class() {
        // X = (0, 0, τ): (X,X) = 0 ≡ 0 mod 5 and the class is generic
        // (third-component ι₂-value is a unit), so m = p = 5.
        let (field, lat) = gaussian_lattice(5);
        let x = [
            KElement::from_rational(big(0)),
            KElement::from_rational(big(0)),
            KElement::tau(&field),
        ];
        assert!(lat.in_t_set(&x));
        assert_eq!(hermitian_norm(&x), big(0));
        assert_eq!(multiplicity(&lat, &x).unwrap(), 5);
    }

    #[test]
    fn multiplicity_unit_gram_class_is_zero() {
        // X = (1, 0, τ): (X,X) = 1, so no representative contains X.
        let (field, lat) = gaussian_lattice(5);
        let x = [
            KElement::from_rational(big(1)),
            KElement::from_rational(big(0)),
            KElement::tau(&field),
        ];
        assert_eq!(hermitian_norm(&x), big(1));
        assert_eq!(multiplicity(&lat, &x).unwrap(), 0);
    }

    #[test]
    fn multiplicity_counterexample_to_dichotomy_frozen() {
        // X = (0, 2 + 4τ, −3 + τ) over ℚ(i), p = 5, r = 1: the hermitian
        // norm is N(2+4i) = 20 ≡ 0 mod 5, the class lies in T, yet m = 0 —
        // the middle component lands on the corner where the third
        // component's ι₂-value vanishes mod p but the middle's does not.
        let (field, lat) = gaussian_lattice(5);
        let x = [
            KElement::from_integers(&field, 0, 0),
            KElement::from_integers(&field, 2, 4),
            KElement::from_integers(&field, -3, 1),
        ];
        assert!(lat.contains(&x), "X lies in L′");
        assert!(lat.in_t_set(&x), "X mod L lies in T");
        assert_eq!(hermitian_norm(&x), big(20));
        assert_eq!(multiplicity(&lat, &x).unwrap(), 0);
        // The companion class with middle component ι₂-divisible instead
        // overshoots to p².
        let (w1, w2) = lat.middle.basis();
        for c1 in 0..5u64 {
            for c2 in 0..5u64 {
                let x2 = w1.scale(&big(c1 as i64)) + w2.scale(&big(c2 as i64));
                if lat.split.embed(&x2, 2) % 5 == 0 {
                    let y = [x[0].clone(), x2, x[2].clone()];
                    assert_eq!(multiplicity(&lat, &y).unwrap(), 25);
                    return;
                }
            }
        }
        panic!("no ι₂-divisible middle class found");
    }

    #[test]
    fn multiplicity_is_well_defined_mod_p_lattice() {
        // m(p, X) only depends on X mod pL′: translating by p·(basis of L′)
        // never changes the count.
        let (field, lat) = gaussian_lattice(5);
        let (w1, _) = lat.middle.basis();
        let base = [
            KElement::from_integers(&field, 0, 5),
            w1.scale(&big(2)),
            KElement::from_integers(&field, 2, 1),
        ];
        let m0 = multiplicity(&lat, &base).unwrap();
        let tau = KElement::tau(&field);
        let shifts: Vec<[KElement; 3]> = vec![
            [
                base[0].clone() + KElement::from_rational(big(5)),
                base[1].clone(),
                base[2].clone(),
            ],
            [
                base[0].clone() + tau.clone().scale(&big(5)),
                base[1].clone(),
                base[2].clone(),
            ],
            [
                base[0].clone(),
                base[1].clone() + w1.scale(&big(5)),
                base[2].clone(),
            ],
            [
                base[0].clone(),
                base[1].clone(),
                base[2].clone() + tau.scale(&big(5)),
            ],
        ];
        for s in shifts {
            assert_eq!(multiplicity(&lat, &s).unwrap(), m0);
        }
    }

    #[test]
    fn multiplicity_rejects_vectors_outside_lattice() {
        let (field, lat) = gaussian_lattice(5);
        // Middle component must lie in 𝔭δ𝒪, not just 𝒪.
        let x = [
            KElement::from_integers(&field, 0, 0),
            KElement::from_integers(&field, 1, 0),
            KElement::tau(&field),
        ];
        assert!(multiplicity(&lat, &x).is_err());
    }

    #[test]
    fn multiplicity_closed_form_oracle() {
        // Independent oracle: unwinding the two membership conditions gives
        // m = p·[p | ι₁X₁][p | ι₂X₁]·#{b : ι₂X₂ ≡ b·ι₂X₃ mod p}. Check the
        // brute-force count against it on a deterministic sweep.
        let (field, lat) = gaussian_lattice(5);
        let s = &lat.split;
        let p = 5u64;
        let (w1, w2) = lat.middle.basis();
        for trial in 0u64..60 {
            let a1 = trial % 5;
            let b1 = (trial / 2) % 5;
            let c1 = (trial / 3) % 5;
            let c2 = (trial / 7) % 5;
            let a3 = (trial / 5) % 5;
            let b3 = (trial / 11) % 5;
            let x = [
                KElement::from_integers(&field, a1 as i64, b1 as i64),
                w1.scale(&big(c1 as i64)) + w2.scale(&big(c2 as i64)),
                KElement::from_integers(&field, a3 as i64, b3 as i64),
            ];
            let x1e = s.embed(&x[0], 1) % p;
            let y1 = s.embed(&x[0], 2) % p;
            let y2 = s.embed(&x[1], 2) % p;
            let y3 = s.embed(&x[2], 2) % p;
            let expected = if x1e == 0 && y1 == 0 {
                if y3 != 0 {
                    p
                } else if y2 == 0 {
                    p * p
                } else {
                    0
                }
            } else {
                0
            };
            assert_eq!(multiplicity(&lat, &x).unwrap(), expected, "trial {}", trial);
        }
    }

    // -- double-coset identity ----------------------------------------------

    #[test]
    fn sl2_lift_roundtrips() {
        let sl2 = sl2_mod_n(12);
        assert_eq!(sl2.len(), 1152); // 12³·Π(1−p⁻²) = 1728·(3/4)(8/9)
        for w in sl2.iter().step_by(37) {
            let m = sl2_lift(w, 12);
            assert_eq!(mat_det(&m), 1);
            for k in 0..4 {
                assert_eq!(m[k / 2][k % 2].rem_euclid(12) as u64, w[k]);
            }
        }
    }

    #[test]
    fn left_class_key_is_class_invariant() {
        // Multiplying by Γ(N) elements on the left never changes the key;
        // distinct Hermite data does.
        let level = 12u64;
        let m: Mat2 = [[2, 5], [0, 3]];
        let key = left_class_key(&m, 6, level);
        let gamma = sl2_lift(&[1, 0, 0, 1], level); // ≡ I mod 12
        let g2: Mat2 = [[1, 12], [0, 1]]; // T¹² ∈ Γ(12)
        let g3: Mat2 = [[1, 0], [12, 1]];
        for u in [gamma, g2, g3] {
            assert_eq!(left_class_key(&mat_mul(&u, &m), 6, level), key);
        }
        let other: Mat2 = [[2, 8], [0, 3]];
        assert_ne!(left_class_key(&other, 6, level), key);
    }

    #[test]
    fn coset_identity_at_level_35() {
        for (n, expect) in [(1u64, 35usize), (2, 105), (3, 140), (5, 175)] {
            let cert = coset_identity_check(n, 5, 1, -7).unwrap();
            assert_eq!(cert.side_a, expect, "n = {}", n);
            assert_eq!(cert.side_b, expect, "n = {}", n);
            assert!(cert.sides_equal, "n = {}", n);
            assert_eq!(cert.expected, expect);
            // Partition by top-row residues: a ≡ n mod N forced, b free.
            assert_eq!(cert.t_pieces, 35);
            assert_eq!(cert.t_histogram.values().sum::<usize>(), expect);
        }
    }

    #[test]
    fn coset_identity_exercises_divisor_branch() {
        // N = 20, n = 2 | N: U_q-type count q·N; n = 3 ∤ N: (q+1)·N.
        let cert = coset_identity_check(2, 5, 1, -4).unwrap();
        assert_eq!((cert.side_a, cert.side_b), (40, 40));
        assert!(cert.sides_equal);
        let cert = coset_identity_check(3, 5, 1, -4).unwrap();
        assert_eq!((cert.side_a, cert.side_b), (80, 80));
        assert!(cert.sides_equal);
    }

    #[test]
    fn coset_identity_refusals() {
        // Budget: N = 5·11 = 55 > 48.
        assert!(matches!(
            coset_identity_check(2, 5, 1, -11),
            Err(Error::Budget(_))
        ));
        // Composite n unsupported.
        assert!(matches!(
            coset_identity_check(6, 5, 1, -7),
            Err(Error::Unsupported(_))
        ));
        assert!(matches!(
            coset_identity_check(4, 5, 1, -7),
            Err(Error::Unsupported(_))
        ));
    }

    // -- lemma_check -------------------------------------------------------

    #[test]
    fn lemma_census_p5() {
        let field = field_init(-1).unwrap();
        let rep = lemma_check(&field, 5, 1).unwrap();
        assert_eq!(rep.domain, 625);
        // The dichotomy fails on exactly p² classes: those with vanishing
        // gram residue whose third component degenerates mod 𝔭̄ (β ≡ −τ₂).
        assert_eq!(rep.exceptions.len(), 25);
        assert_eq!(rep.conforming, 600);
        // Σ m over the T-classes is p⁴: the overshoots (p² instead of p)
        // exactly cancel the undershoots (0 instead of p).
        assert_eq!(rep.sum_m, 625);
        // Double counting over the full quotient: Σ_{a,b} |E|·|F| = p²·p²·p.
        assert_eq!(rep.sum_m_full_by_images, 3125);
        let s = split_embedding(&field, 5, 1).unwrap();
        let beta_corner = (5 - s.tau2 % 5) % 5;
        for e in &rep.exceptions {
            assert_eq!(e.gram_mod_p, 0, "exceptions all have p | (X,X)");
            assert_eq!(e.claimed, 5);
            assert_eq!(e.beta, beta_corner, "exceptions sit at β ≡ −τ₂");
            assert!(e.got == 0 || e.got == 25);
        }
        let overshoot = rep.exceptions.iter().filter(|e| e.got == 25).count();
        let undershoot = rep.exceptions.iter().filter(|e| e.got == 0).count();
        assert_eq!((overshoot, undershoot), (5, 20));
    }

    #[test]
    fn lemma_census_p13() {
        let field = field_init(-1).unwrap();
        let rep = lemma_check(&field, 13, 1).unwrap();
        assert_eq!(rep.domain, 28561);
        assert_eq!(rep.exceptions.len(), 169);
        assert_eq!(rep.conforming, 28392);
        assert_eq!(rep.sum_m, 28561);
        assert_eq!(rep.sum_m_full_by_images, 371293);
        assert!(!rep.dichotomy_holds());
    }

    #[test]
    fn full_domain_double_count_p5() {
        // Σ m(p, X) over all of L′/pL′ by direct enumeration equals the
        // image-size double count Σ_{a,b} |E|·|F|.
        let field = field_init(-1).unwrap();
        let lat = lattice_pair(&field, 5, 1).unwrap();
        let s = &lat.split;
        let p = 5u64;
        let images: Vec<(Vec<bool>, Vec<bool>)> = (0..p * p)
            .map(|ab| representative_images(s, ab / p, ab % p))
            .collect();
        let (w1, w2) = lat.middle.basis();
        let mut total = 0u64;
        for a1 in 0..p {
            for b1 in 0..p {
                for c1 in 0..p {
                    for c2 in 0..p {
                        for a3 in 0..p {
                            for b3 in 0..p {
                                let x = [
                                    KElement::from_integers(&field, a1 as i64, b1 as i64),
                                    w1.scale(&big(c1 as i64)) + w2.scale(&big(c2 as i64)),
                                    KElement::from_integers(&field, a3 as i64, b3 as i64),
                                ];
                                let xe = fp3_index(p, &e_coords(&lat, &x));
                                let xf = fp3_index(p, &f_coords(&lat, &x));
                                total += images
                                    .iter()
                                    .filter(|(im_e, im_f)| im_e[xe] && im_f[xf])
                                    .count()
                                    as u64;
                            }
                        }
                    }
                }
            }
        }
        let by_images: u64 = images
            .iter()
            .map(|(im_e, im_f)| {
                let ne = im_e.iter().filter(|&&t| t).count() as u64;
                let nf = im_f.iter().filter(|&&t| t).count() as u64;
                ne * nf
            })
            .sum();
        assert_eq!(total, by_images);
        assert_eq!(total, 3125);
    }

    // -- Euler factors and eigenvalue tables ---------------------------------

    /// Evaluate a Laurent polynomial at cyclotomic symbol values (all symbols
    /// must be assigned and invertible).
    fn eval_laurent(lp: &LaurentPoly, vals: &[(&str, CycK)]) -> CycK {
        let lookup = |name: &str| -> &CycK {
            vals.iter()
                .find(|(n, _)| *n == name)
                .map(|(_, v)| v)
                .unwrap_or_else(|| panic!("no value for symbol {}", name))
        };
        let mut acc = CycK::zero();
        for (m, c) in lp.iter() {
            let mut term = CycK::from_rational(c.clone());
            for (name, e) in m.iter() {
                term = &term * &lookup(name).pow(e).unwrap();
            }
            acc = &acc + &term;
        }
        acc
    }

    #[test]
    fn euler_identity_split_holds_symbolically() {
        for k in [6i64, 8, 10] {
            let cert = euler_factorization_check(LocalType::Split, k);
            assert!(cert.holds, "split identity fails at k = {}", k);
            assert_eq!(cert.lhs.degree(), Some(3));
            assert!(cert.lhs.coeff(0).sub(&LaurentPoly::one()).is_zero());
        }
        // Frozen x-coefficient at k = 6: −q^{−2}·e·c^{−1}·a − e^{−2}.
        let cert = euler_factorization_check(LocalType::Split, 6);
        let expected = LaurentPoly::sym_pow("q", -2)
            .mul(&LaurentPoly::sym("e"))
            .mul(&LaurentPoly::sym_pow("c", -1))
            .mul(&LaurentPoly::sym("a"))
            .add(&LaurentPoly::sym_pow("e", -2))
            .neg();
        assert!(cert.lhs.coeff(1).sub(&expected).is_zero());
    }

    #[test]
    fn euler_identity_inert_holds_and_has_unit_root() {
        for k in [6i64, 8, 10] {
            let cert = euler_factorization_check(LocalType::Inert, k);
            assert!(cert.holds, "inert identity fails at k = {}", k);
            // (1 − x) divides both sides: coefficients sum to zero.
            let mut sum = LaurentPoly::zero();
            for i in 0..=3 {
                sum = sum.add(&cert.lhs.coeff(i));
            }
            assert!(sum.is_zero());
        }
    }

    #[test]
    fn euler_identity_ramified_holds_for_all_signs() {
        for k in [6i64, 8, 10] {
            let cert = euler_factorization_check(LocalType::Ramified, k);
            assert!(cert.holds, "ramified identity fails at k = {}", k);
            assert_eq!(cert.sign_cases.len(), 4);
            for &(e, c, ok) in &cert.sign_cases {
                assert!(ok, "ramified identity fails at k = {} with (e, c) = ({}, {})", k, e, c);
            }
        }
    }

    #[test]
    fn eigenvalue_tables_bridge_exactly() {
        // The normalized table is q^{k/2−1} times the naive one at split and
        // ramified primes, and q^{k−3} times it at inert primes (the printed
        // inert normalization carries one factor of q less than N(𝔮)^{k/2−1}).
        let a_q = &CycK::zeta(5, 1) + &CycK::from_i64(2);
        let a_conj = &CycK::zeta(5, 3) + &CycK::from_i64(1);
        let eps = CycK::zeta(5, 2);
        let chieps2 = &CycK::zeta(5, 4) + &CycK::from_i64(3);
        for k in [6i64, 8, 10] {
            for (ty, bridge) in [
                (LocalType::Split, k / 2 - 1),
                (LocalType::Ramified, k / 2 - 1),
                (LocalType::Inert, k - 3),
            ] {
                let d = LocalEigenData {
                    q: 3,
                    local_type: ty,
                    a_q: a_q.clone(),
                    a_q_conj: a_conj.clone(),
                    eps_qbar: eps.clone(),
                    chieps2_qbar: chieps2.clone(),
                };
                let naive = lifted_eigenvalue_naive(&d, k).unwrap();
                let norm = lifted_eigenvalue(&d, k).unwrap();
                let scaled = naive.scale_rational(&ck_int_pow(3, bridge));
                assert_eq!(norm, scaled, "bridge fails for {:?} at k = {}", ty, k);
            }
        }
        assert!(lifted_eigenvalue(&LocalEigenData {
            q: 3,
            local_type: LocalType::Split,
            a_q: a_q.clone(),
            a_q_conj: a_conj,
            eps_qbar: eps,
            chieps2_qbar: chieps2,
        }, 7).is_err());
    }

    #[test]
    fn normalized_eigenvalues_are_termwise_q_divisible() {
        for k in [6i64, 8, 10] {
            for ty in [LocalType::Split, LocalType::Inert, LocalType::Ramified] {
                let (lam, divisible) = eigenvalue_q_divisibility(ty, k);
                assert!(
                    divisible,
                    "λ(𝔮) not termwise q-divisible for {:?} at k = {}: {}",
                    ty, k, lam
                );
            }
        }
    }

    #[test]
    fn shintani_euler_matches_symbolic_factorization() {
        // Numeric instantiation of the split identity at q = 3, k = 6 with
        // cyclotomic character values: the numeric Euler factor from the
        // eigenvalue table must equal the symbolic left side evaluated at the
        // same data, and both must equal the evaluated right side.
        let k = 6i64;
        let q = 3u64;
        let a_val = &CycK::zeta(7, 1) + &CycK::from_i64(1);
        let e_val = CycK::zeta(7, 2);
        let c_val = CycK::zeta(7, 3);
        let q_val = CycK::from_i64(q as i64);

        // λ̃(𝔮) uses values at 𝔮̄ (ε(𝔮̄) = e^{−1}, (χε^{−2})(𝔮̄) = c^{−1}e²);
        // λ̃(𝔮̄) uses values at 𝔮.
        let lam_q = lifted_eigenvalue_naive(
            &LocalEigenData {
                q,
                local_type: LocalType::Split,
                a_q: a_val.clone(),
                a_q_conj: CycK::zero(),
                eps_qbar: e_val.inv().unwrap(),
                chieps2_qbar: &c_val.inv().unwrap() * &(&e_val * &e_val),
            },
            k,
        )
        .unwrap();
        let lam_qbar = lifted_eigenvalue_naive(
            &LocalEigenData {
                q,
                local_type: LocalType::Split,
                a_q: a_val.clone(),
                a_q_conj: CycK::zero(),
                eps_qbar: e_val.clone(),
                chieps2_qbar: &c_val * &e_val.pow(-2).unwrap(),
            },
            k,
        )
        .unwrap();
        let factor = shintani_euler(
            LocalType::Split,
            q,
            &lam_q,
            &lam_qbar,
            &c_val,
            &c_val.inv().unwrap(),
        )
        .unwrap();
        assert_eq!(factor.coeffs[0], CycK::one());

        let cert = euler_factorization_check(LocalType::Split, k);
        let vals: Vec<(&str, CycK)> = vec![
            ("a", a_val),
            ("e", e_val),
            ("c", c_val),
            ("q", q_val),
        ];
        for i in 0..=3 {
            let sym_l = eval_laurent(&cert.lhs.coeff(i), &vals);
            let sym_r = eval_laurent(&cert.rhs.coeff(i), &vals);
            assert_eq!(sym_l, sym_r, "evaluated identity fails at x^{}", i);
            assert_eq!(factor.coeffs[i], sym_l, "numeric factor differs at x^{}", i);
        }
    }

    #[test]
    fn lifted_eigenvalue_p_is_scaled_product() {
        let a_p = &CycK::zeta(3, 1) + &CycK::from_i64(4);
        let eps = CycK::zeta(3, 2);
        let got = lifted_eigenvalue_p(5, &a_p, &eps);
        let expected = (&a_p * &eps).scale_rational(&big(25));
        assert_eq!(got, expected);
    }

    // -- Fourier–Jacobi coefficients ----------------------------------------

    use crate::characters::FinitePart;
    use crate::qexp::{p_stabilize, theta_cm};

    /// k = 6 test context over ℚ(√−7): the CM form of the unramified weight
    /// character (type (4,0)) lives in weight 5 at level 7 with the quadratic
    /// nebentypus, and 11 splits, so its 11-stabilization has level 77.
    fn lift_ctx_d7() -> LiftContext {
        let field = field_init(-7).unwrap();
        let psi = ClassicalHeckeChar::new(&field, (4, 0), FinitePart::Trivial).unwrap();
        let (eigen, _) = theta_cm(&field, &psi, 360).unwrap();
        let f = p_stabilize(&eigen, 11, 64).unwrap();
        let eps = ClassicalHeckeChar::trivial(&field);
        let chi = ClassicalHeckeChar::weight_char(&field, 6).unwrap();
        lift_context(&field, 11, 1, 6, f, eps, chi).unwrap()
    }

    fn unit_ideal(field: &FieldData) -> Ideal {
        Ideal::unit(field)
    }

    fn ball_is_exact_zero(b: &ComplexBall) -> bool {
        b.re.mid.is_zero() && b.re.rad.is_zero() && b.im.mid.is_zero() && b.im.rad.is_zero()
    }

    fn assert_balls_agree(a: &ComplexBall, b: &ComplexBall, why: &str) {
        let d = a.clone() - b.clone();
        assert!(
            d.re.contains_zero() && d.im.contains_zero(),
            "{}: difference excludes zero: re={} im={}",
            why,
            d.re,
            d.im
        );
    }

    #[test]
    fn fj_degree_zero_vanishes() {
        let ctx = lift_ctx_d7();
        let unit = unit_ideal(&ctx.field);
        let c = fj_p_modified(&ctx, &unit, 0, 2, 96, None).unwrap();
        assert_eq!(c.degree, 0);
        assert_eq!(c.taylor.len(), 3);
        assert!(c.taylor.iter().all(ball_is_exact_zero));
        let core = c.algebraic_core.expect("single class");
        assert!(core.iter().all(|a| a.is_zero()));
    }

    #[test]
    fn fj_unit_class_core_structure() {
        let ctx = lift_ctx_d7();
        let unit = unit_ideal(&ctx.field);
        let c = fj_p_modified(&ctx, &unit, 1, 1, 128, None).unwrap();
        let core = c.algebraic_core.expect("single class");
        // 𝔞 = 𝔟 = 𝒪 with trivial ε and trivial finite part of χ: the degree-1
        // prefactor is exactly 1, and the order-1 core is exactly δ.
        assert_eq!(core[0], CycK::one());
        assert_eq!(core[1], CycK::from_k(KElement::delta(&ctx.field)));
        // radii must be genuinely small at this precision
        assert!(ball_rad_within(&c.taylor[0], -90));
        assert!(ball_rad_within(&c.taylor[1], -90));
    }

    #[test]
    fn fj_lambda_rescaling_matches_weight_law() {
        // g at 𝔞' = λ𝔞 determines g at 𝔞: taylor'[m]·σ(λ)^{k+m} = taylor[m]
        // at the same degree n. Exercises different CM points and theta
        // lattices for the same underlying coefficient.
        let ctx = lift_ctx_d7();
        let unit = unit_ideal(&ctx.field);
        let base = fj_p_modified(&ctx, &unit, 1, 2, 160, None).unwrap();
        let tau = KElement::tau(&ctx.field);
        let one_plus_tau = KElement::from_integers(&ctx.field, 1, 1);
        for lam in [KElement::from_integers(&ctx.field, 2, 0), tau, one_plus_tau] {
            let scaled_ideal = Ideal::principal(&ctx.field, &lam).unwrap();
            let got = fj_p_modified(&ctx, &scaled_ideal, 1, 2, 160, None).unwrap();
            let lam_ball = CycK::from_k(lam.clone()).embed_sigma(160);
            for m in 0..=2usize {
                let lifted = got.taylor[m].clone() * lam_ball.powi((6 + m) as u32);
                assert_balls_agree(
                    &lifted,
                    &base.taylor[m],
                    &format!("λ = {} m = {}", lam, m),
                );
                assert!(
                    ball_rad_within(&lifted, -40),
                    "radii too wide to be meaningful at λ = {} m = {}",
                    lam,
                    m
                );
            }
        }
    }

    #[test]
    fn fj_taylor_matches_direct_evaluator() {
        // The w-Taylor pipeline (slice products + coefficient-side T_n +
        // CM evaluation) against the closed coset-sum evaluator (values of f
        // and the theta series at translated points), at a small w where the
        // discarded Taylor tail is far below the comparison tolerance.
        let ctx = lift_ctx_d7();
        let unit = unit_ideal(&ctx.field);
        let w_re = BigRational::new(BigInt::one(), BigInt::from(1_000_000u64));
        let w_im = BigRational::new(BigInt::one(), BigInt::from(3_000_000u64));
        for n in [1u64, 2] {
            let c = fj_p_modified(&ctx, &unit, n, 4, 192, None).unwrap();
            let ev = FJEvaluator::new(&ctx, &unit, n, 192).unwrap();
            let w = ComplexBall::from_rationals(&w_re, &w_im, 192);
            let direct = ev.eval(&w).unwrap();
            let mut taylor_sum = ComplexBall::zero(192);
            for m in (0..=4usize).rev() {
                taylor_sum = taylor_sum * w.clone() + c.taylor[m].clone();
            }
            let diff = (direct.clone() - taylor_sum).upper_abs();
            assert!(
                diff.cmp_val(&Dyadic::pow2(-45)) != Ordering::Greater,
                "n = {}: |direct − taylor| bound 2^{} too large",
                n,
                diff.log2_upper()
            );
            assert!(
                direct.upper_abs().cmp_val(&Dyadic::pow2(-30)) == Ordering::Greater,
                "n = {}: value suspiciously close to zero, check the test's teeth",
                n
            );
        }
    }

    #[test]
    fn fj_b_normalization_choice_is_immaterial() {
        // Two valid normalizations of the principal class against 𝔞 = (τ):
        // the canonical one (𝔟 = ½𝒪, CM point τ/2) and the manual one
        // (𝔟 = (τ̄)⁻¹, CM point τ_K). The block values must agree even
        // though the CM points, theta lattices and prefactors all differ.
        let ctx = lift_ctx_d7();
        let a_ideal = Ideal::integral(&ctx.field, 2, 0).unwrap(); // (τ)
        let blocks_canonical = fj_blocks(&ctx, &a_ideal).unwrap();
        assert_eq!(blocks_canonical.len(), 1);

        let tau = KElement::tau(&ctx.field);
        let b_manual = Ideal::principal(&ctx.field, &tau.conj())
            .unwrap()
            .inverse();
        let eps_ratio = ctx
            .eps
            .eval(&a_ideal.conj().mul(&a_ideal.inverse()).unwrap())
            .unwrap();
        let manual = fj_block_for(&ctx, &a_ideal, &b_manual, &eps_ratio).unwrap();
        assert!(
            manual.cm.tau != blocks_canonical[0].cm.tau,
            "the two normalizations should give different CM points"
        );

        let prec = 160;
        let want = {
            let all = [blocks_canonical[0].clone(), manual.clone()];
            fj_plan(&all, prec)
        };
        let f_q = ctx.f.to_qexp(want).unwrap();
        let f_gb = ctx.f.growth();
        let v1 = fj_sum_blocks(
            &ctx,
            &blocks_canonical,
            &a_ideal,
            1,
            2,
            prec,
            &f_q,
            &f_gb,
            want,
        )
        .unwrap();
        let v2 = fj_sum_blocks(
            &ctx,
            std::slice::from_ref(&manual),
            &a_ideal,
            1,
            2,
            prec,
            &f_q,
            &f_gb,
            want,
        )
        .unwrap();
        for m in 0..=2usize {
            assert_balls_agree(&v1.taylor[m], &v2.taylor[m], &format!("m = {}", m));
            assert!(ball_rad_within(&v1.taylor[m], -40));
        }
    }

    #[test]
    fn fj_translation_law_holds_with_sign() {
        // Quasi-periodicity under w ↦ w ± 1 for the degree-1 coefficient on
        // 𝒪: the index is 1, so ψ(±1) = (−1)^{D} = −1 exercises the sign.
        let ctx = lift_ctx_d7();
        let unit = unit_ideal(&ctx.field);
        let w_re = BigRational::new(BigInt::from(3), BigInt::from(250));
        let w_im = BigRational::new(BigInt::from(7), BigInt::from(1000));
        let translates = [
            KElement::from_integers(&ctx.field, 1, 0),
            KElement::from_integers(&ctx.field, -1, 0),
        ];
        let checks =
            theta_space_translation_check(&ctx, &unit, 1, &w_re, &w_im, &translates, 160)
                .unwrap();
        for c in &checks {
            assert_eq!(c.sign, -1, "N(s) = 1 and D odd must flip the sign");
            assert!(
                c.residual.cmp_val(&Dyadic::pow2(-50)) != Ordering::Greater,
                "translate {}: residual bound 2^{} exceeds 2^-50 (magnitude 2^{})",
                c.s,
                c.residual.log2_upper(),
                c.magnitude.log2_upper()
            );
            assert!(
                c.magnitude.cmp_val(&Dyadic::pow2(-20)) == Ordering::Greater,
                "translate {}: |g(w+s)| is tiny; the check would be vacuous",
                c.s
            );
        }
    }

    #[test]
    fn fj_is_linear_and_respects_hecke_eigenvalue() {
        // T₂f = a₂·f as q-expansions, so the coefficient built from the
        // hecke-transformed expansion must equal σ(a₂) times the coefficient
        // built from f. Runs the caller-supplied-expansion entry point.
        let ctx = lift_ctx_d7();
        let unit = unit_ideal(&ctx.field);
        let f_full = ctx.f.to_qexp(300).unwrap();
        let t2 = f_full.hecke_tn(2, 130).unwrap();
        let gb2 = ctx.f.growth().hecke_tn(2, 5);
        let via_hecke = fj_p_modified_from_qexp(&ctx, &unit, 1, 1, 96, &t2, &gb2).unwrap();
        let base = fj_p_modified(&ctx, &unit, 1, 1, 96, None).unwrap();
        let a2 = ctx.f.eigenvalue(2).unwrap().embed_sigma(96);
        for m in 0..=1usize {
            let scaled = base.taylor[m].clone() * a2.clone();
            assert_balls_agree(&via_hecke.taylor[m], &scaled, &format!("m = {}", m));
            assert!(ball_rad_within(&scaled, -40));
        }
    }

    #[test]
    fn fj_level_one_needs_caller_trace() {
        let field = field_init(-7).unwrap();
        let eps = ClassicalHeckeChar::trivial(&field);
        let chi = ClassicalHeckeChar::weight_char(&field, 6).unwrap();
        let unit = unit_ideal(&field);
        let got = fj_level_one(&field, 6, &eps, &chi, &unit, 1, 0, None, 96);
        assert!(matches!(got, Err(Error::Unsupported(_))));
    }

    /// Normalized Eisenstein series of weight w at level one, 1 + c·Σσ_{w−1},
    /// with its certifying growth bound.
    fn eisenstein_level_one(w: i64, c: i64, terms: usize) -> (QExpansion<CycK>, GrowthBound) {
        let mut coeffs = vec![CycK::zero(); terms + 1];
        coeffs[0] = CycK::one();
        for (n, slot) in coeffs.iter_mut().enumerate().skip(1) {
            let sigma: i64 = divisors(n as u64)
                .into_iter()
                .map(|d| (d as i64).pow((w - 1) as u32))
                .sum();
            *slot = CycK::from_i64(c * sigma);
        }
        let g = QExpansion::new(coeffs, w, 1, Neben::trivial(), CycK::zero());
        let gb = GrowthBound::new(big(c.abs() + 1), w as u32);
        (g, gb)
    }

    #[test]
    fn fj_level_one_is_linear_in_the_trace() {
        let field = field_init(-7).unwrap();
        let eps = ClassicalHeckeChar::trivial(&field);
        let chi = ClassicalHeckeChar::weight_char(&field, 6).unwrap();
        let unit = unit_ideal(&field);
        // Stand-in trace family: weight 6, 7, 8 at level one (weight 7 has
        // only the zero form, which is a legal trace value).
        let (e6, gb6) = eisenstein_level_one(6, -504, 260);
        let zero7 = QExpansion::new(vec![CycK::zero(); 261], 7, 1, Neben::trivial(), CycK::zero());
        let gb7 = GrowthBound::new(BigRational::one(), 1);
        let (e8, gb8) = eisenstein_level_one(8, 480, 260);
        let data = [(e6.clone(), gb6.clone()), (zero7.clone(), gb7.clone()), (e8.clone(), gb8.clone())];
        let c = fj_level_one(&field, 6, &eps, &chi, &unit, 2, 2, Some(&data), 128).unwrap();

        let eight = big(8);
        let data8 = [
            (e6.scale_ratio(&eight), gb6.scale(&eight)),
            (zero7.scale_ratio(&eight), gb7.clone()),
            (e8.scale_ratio(&eight), gb8.scale(&eight)),
        ];
        let c8 = fj_level_one(&field, 6, &eps, &chi, &unit, 2, 2, Some(&data8), 128).unwrap();
        for m in 0..=2usize {
            let scaled = c.taylor[m].mul_rational(&eight);
            assert_balls_agree(&c8.taylor[m], &scaled, &format!("m = {}", m));
        }
        // the zero slice stays certifiably tiny, and the cores are exact
        assert!(c.taylor[1].upper_abs().cmp_val(&Dyadic::pow2(-80)) != Ordering::Greater);
        let core = c.algebraic_core.expect("level one is single-block");
        assert_eq!(core[0], CycK::one());

        // degree 0 vanishes
        let z = fj_level_one(&field, 6, &eps, &chi, &unit, 0, 2, Some(&data), 128).unwrap();
        assert!(z.taylor.iter().all(ball_is_exact_zero));
    }

    #[test]
    fn slash_sum_trace_oracle_eisenstein() {
        // Independent oracle for the coset-sum semantics used by the direct
        // evaluator and the level-one trace interface: summing the weight-4
        // slash action of the eight Γ₁(3)-cosets of SL₂(ℤ) applied to E₄ at
        // τ = i must reproduce 8·E₄(i), because E₄ is already level one.
        let prec = 128;
        let (e4, gb4) = eisenstein_level_one(4, 240, 760);
        let e4b = qexp_to_balls(&e4, prec);
        // bottom rows (c, d) mod 3, lifted to SL₂(ℤ)
        let reps: [[i64; 4]; 8] = [
            [1, 0, 0, 1],    // (0,1)
            [-1, 0, 0, -1],  // (0,2)
            [0, -1, 1, 0],   // (1,0)
            [1, 1, 2, 3],    // (2,0)
            [1, 0, 1, 1],    // (1,1)
            [1, 1, 1, 2],    // (1,2)
            [1, 0, 2, 1],    // (2,1)
            [1, 2, 2, 5],    // (2,2)
        ];
        let i_ball = ComplexBall::new(RealBall::zero(prec), RealBall::one(prec));
        let mut total = ComplexBall::zero(prec);
        for [a, b, c, d] in reps {
            assert_eq!(a * d - b * c, 1, "representative must be unimodular");
            let num = i_ball.clone().mul_rational(&big(a))
                + ComplexBall::from_rationals(&big(b), &BigRational::zero(), prec);
            let den = i_ball.clone().mul_rational(&big(c))
                + ComplexBall::from_rationals(&big(d), &BigRational::zero(), prec);
            let tau = num.div(&den).unwrap();
            let jfac = den.powi(4).inv().unwrap();
            let val = eval_ball(&e4b, &tau, &gb4, 0).unwrap();
            eprintln!(
                "rep c={} d={}: val rad 2^{} jfac rad 2^{} val mag 2^{}",
                c,
                d,
                val.re.rad.log2_upper(),
                jfac.re.rad.log2_upper(),
                val.upper_abs().log2_upper()
            );
            total = total + jfac * val;
        }
        let direct = eval_ball(&e4b, &i_ball, &gb4, 0).unwrap().mul_rational(&big(8));
        assert_balls_agree(&total, &direct, "trace of a level-one form");
        assert!(ball_rad_within(&total, -40));
    }

    #[test]
    fn fj_table_and_omega_normalization() {
        let ctx = lift_ctx_d7();
        let fj = lift_table(&ctx, 2, 1, 96, None).unwrap();
        assert_eq!(fj.table.len(), 2);
        assert!(fj.table.contains_key(&(0, 1)) && fj.table.contains_key(&(0, 2)));
        assert_eq!(fj.omega_grade, 0);
        let text = format!("{}", fj);
        assert!(text.contains("fj-table weight=6 p=11 r=1 disc=-7"));
        assert!(text.contains("core m=0"));

        let formal = arithmetic_normalize(&fj, &OmegaMode::Formal).unwrap();
        let formal2 = arithmetic_normalize(&formal, &OmegaMode::Formal).unwrap();
        assert_eq!(formal.omega_grade, 6);
        assert_eq!(formal2.omega_grade, 12);
        assert!(formal.table[&(0, 1)].algebraic_core.is_some());

        let om = ComplexBall::from_rationals(&big(2), &BigRational::zero(), 96);
        let numeric = arithmetic_normalize(&fj, &OmegaMode::Numeric(om)).unwrap();
        let expected = fj.table[&(0, 1)].taylor[0]
            .mul_rational(&BigRational::new(BigInt::one(), BigInt::from(64)));
        assert_balls_agree(
            &numeric.table[&(0, 1)].taylor[0],
            &expected,
            "division by Ω₀^k = 2^6",
        );
        assert!(numeric.table[&(0, 1)].algebraic_core.is_none());

        let zero_ball = ComplexBall::zero(96);
        assert!(arithmetic_normalize(&fj, &OmegaMode::Numeric(zero_ball)).is_err());
    }

    #[test]
    fn fj_retry_honors_tolerance() {
        let ctx = lift_ctx_d7();
        let unit = unit_ideal(&ctx.field);
        // 64 starting bits cannot certify 2^-120 radii; the retry must.
        let c = fj_p_modified(&ctx, &unit, 1, 1, 64, Some(-120)).unwrap();
        assert!(c.taylor.iter().all(|b| ball_rad_within(b, -120)));
        // an unreachable tolerance reports precision exhaustion
        let got = fj_p_modified(&ctx, &unit, 1, 1, 64, Some(-100_000));
        assert!(matches!(got, Err(Error::Precision(_))));
    }
}
