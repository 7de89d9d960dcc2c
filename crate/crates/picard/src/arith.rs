//! Elementary number-theoretic helpers shared by the other modules.

use num_bigint::{BigInt, BigUint};
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

/// Kronecker symbol (a|n), fully general (n may be zero, negative, or even).
pub fn kronecker(a: i64, n: i64) -> i32 {
    if n == 0 {
        return if a == 1 || a == -1 { 1 } else { 0 };
    }
    let mut a = a;
    let mut n = n;
    let mut result = 1i32;
    if n < 0 {
        n = -n;
        if a < 0 {
            result = -result;
        }
    }
    // Strip factors of two from n, picking up the (a|2) factors.
    while n.is_even() {
        n /= 2;
        if a.is_even() {
            return 0;
        }
        // (a|2) = (2|a) = (-1)^((a^2-1)/8)
        let am8 = a.rem_euclid(8);
        if am8 == 3 || am8 == 5 {
            result = -result;
        }
    }
    // Now n is odd and positive: Jacobi symbol with reciprocity.
    a = a.rem_euclid(n);
    while a != 0 {
        while a.is_even() {
            a /= 2;
            let nm8 = n.rem_euclid(8);
            if nm8 == 3 || nm8 == 5 {
                result = -result;
            }
        }
        std::mem::swap(&mut a, &mut n);
        if a.rem_euclid(4) == 3 && n.rem_euclid(4) == 3 {
            result = -result;
        }
        a = a.rem_euclid(n);
    }
    if n == 1 {
        result
    } else {
        0
    }
}

/// Deterministic Miller–Rabin primality test for u64.
pub fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    for &p in &[2u64, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37] {
        if n.is_multiple_of(p) {
            return n == p;
        }
    }
    let mut d = n - 1;
    let mut s = 0u32;
    while d.is_even() {
        d /= 2;
        s += 1;
    }
    // This witness set is deterministic for all n < 2^64.
    'witness: for &a in &[2u64, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37] {
        let mut x = pow_mod(a % n, d, n);
        if x == 1 || x == n - 1 {
            continue;
        }
        for _ in 1..s {
            x = mul_mod(x, x, n);
            if x == n - 1 {
                continue 'witness;
            }
        }
        return false;
    }
    true
}

pub fn mul_mod(a: u64, b: u64, m: u64) -> u64 {
    ((a as u128 * b as u128) % m as u128) as u64
}

pub fn pow_mod(mut base: u64, mut exp: u64, m: u64) -> u64 {
    if m == 1 {
        return 0;
    }
    let mut acc = 1u64;
    base %= m;
    while exp > 0 {
        if exp & 1 == 1 {
            acc = mul_mod(acc, base, m);
        }
        base = mul_mod(base, base, m);
        exp >>= 1;
    }
    acc
}

/// Modular inverse of a mod m (m > 1, gcd(a, m) = 1).
pub fn inv_mod(a: i64, m: i64) -> Option<i64> {
    let (g, x, _) = ext_gcd(a.rem_euclid(m), m);
    if g != 1 {
        None
    } else {
        Some(x.rem_euclid(m))
    }
}

/// Extended gcd: returns (g, x, y) with a*x + b*y = g = gcd(a, b), g >= 0.
pub fn ext_gcd(a: i64, b: i64) -> (i64, i64, i64) {
    if b == 0 {
        if a < 0 {
            (-a, -1, 0)
        } else {
            (a, 1, 0)
        }
    } else {
        let (g, x, y) = ext_gcd(b, a.rem_euclid(b));
        (g, y, x - a.div_euclid(b) * y)
    }
}

/// Extended gcd over BigInt.
pub fn ext_gcd_big(a: &BigInt, b: &BigInt) -> (BigInt, BigInt, BigInt) {
    if b.is_zero() {
        if a.is_negative() {
            (-a, BigInt::from(-1), BigInt::zero())
        } else {
            (a.clone(), BigInt::one(), BigInt::zero())
        }
    } else {
        let (q, r) = a.div_mod_floor(b);
        let (g, x, y) = ext_gcd_big(b, &r);
        let yy = x - &q * &y;
        (g, y, yy)
    }
}

/// Trial-division factorization n = ∏ p^e as (p, e) pairs, p ascending.
pub fn factor(mut n: u64) -> Vec<(u64, u32)> {
    assert!(n > 0);
    let mut out = Vec::new();
    let mut p = 2u64;
    while p * p <= n {
        if n.is_multiple_of(p) {
            let mut e = 0;
            while n.is_multiple_of(p) {
                n /= p;
                e += 1;
            }
            out.push((p, e));
        }
        p += if p == 2 { 1 } else { 2 };
    }
    if n > 1 {
        out.push((n, 1));
    }
    out
}

/// All positive divisors of n, ascending.
pub fn divisors(n: u64) -> Vec<u64> {
    let mut ds = vec![1u64];
    for (p, e) in factor(n) {
        let prev = ds.clone();
        let mut pe = 1u64;
        for _ in 0..e {
            pe *= p;
            for d in &prev {
                ds.push(d * pe);
            }
        }
    }
    ds.sort_unstable();
    ds
}

/// Is n squarefree? (n > 0)
pub fn is_squarefree(n: u64) -> bool {
    factor(n).iter().all(|&(_, e)| e == 1)
}

/// All b in 0..m with b² + t·b + c ≡ 0 (mod m). Brute force; m is small
/// everywhere this is used (ideal `a`-entries, split primes below 10³).
pub fn roots_quadratic_mod(t: i64, c: i64, m: u64) -> Vec<u64> {
    let mm = m as i64;
    (0..mm)
        .filter(|&b| (b * b + t * b + c).rem_euclid(mm) == 0)
        .map(|b| b as u64)
        .collect()
}

/// Integer square root (floor) of a BigInt ≥ 0.
pub fn isqrt_big(n: &BigInt) -> BigInt {
    assert!(!n.is_negative());
    n.sqrt()
}

/// Floor of sqrt for u64.
pub fn isqrt(n: u64) -> u64 {
    let r = (n as f64).sqrt() as u64;
    // Correct the float guess exactly.
    let mut r = r.saturating_sub(2);
    while (r + 1).checked_mul(r + 1).is_some_and(|sq| sq <= n) {
        r += 1;
    }
    r
}

/// Euler phi.
pub fn euler_phi(n: u64) -> u64 {
    let mut out = n;
    for (p, _) in factor(n) {
        out = out / p * (p - 1);
    }
    out
}

/// σ_k(n) = Σ_{d|n} d^k as BigInt.
pub fn sigma_k(n: u64, k: u32) -> BigInt {
    divisors(n)
        .into_iter()
        .map(|d| BigInt::from(d).pow(k))
        .sum()
}

/// Bernoulli numbers B_0..B_m (even-index convention B_1 = -1/2) via the
/// recurrence Σ_{j=0}^{m} C(m+1, j) B_j = 0.
pub fn bernoulli_upto(m: usize) -> Vec<BigRational> {
    let mut b: Vec<BigRational> = Vec::with_capacity(m + 1);
    for n in 0..=m {
        if n == 0 {
            b.push(BigRational::one());
            continue;
        }
        // B_n = -1/(n+1) * Σ_{j<n} C(n+1, j) B_j
        let mut acc = BigRational::zero();
        for (j, bj) in b.iter().enumerate() {
            acc += BigRational::from_integer(binomial((n + 1) as u64, j as u64)) * bj;
        }
        let denom = BigRational::from_integer(BigInt::from(n as u64 + 1));
        b.push(-acc / denom);
    }
    b
}

/// Binomial coefficient as BigInt.
pub fn binomial(n: u64, k: u64) -> BigInt {
    if k > n {
        return BigInt::zero();
    }
    let k = k.min(n - k);
    let mut num = BigInt::one();
    let mut den = BigInt::one();
    for i in 0..k {
        num *= BigInt::from(n - i);
        den *= BigInt::from(i + 1);
    }
    num / den
}

/// The smallest primitive root modulo an odd prime p.
pub fn primitive_root(p: u64) -> u64 {
    assert!(is_prime(p) && p > 2);
    let fac = factor(p - 1);
    'g: for g in 2..p {
        for &(q, _) in &fac {
            if pow_mod(g, (p - 1) / q, p) == 1 {
                continue 'g;
            }
        }
        return g;
    }
    unreachable!("every prime has a primitive root")
}

/// Multiplicative order of a mod m (gcd(a, m) = 1).
pub fn mult_order(a: u64, m: u64) -> u64 {
    assert!(m > 0);
    let mut x = a % m;
    let mut k = 1u64;
    while x != 1 {
        x = mul_mod(x, a, m);
        k += 1;
        assert!(k <= m, "a not invertible mod m");
    }
    k
}

/// v_p(n) for BigInt n ≠ 0.
pub fn valuation_big(n: &BigInt, p: u64) -> u32 {
    assert!(!n.is_zero());
    let p = BigInt::from(p);
    let mut n = n.clone();
    let mut v = 0;
    loop {
        let (q, r) = n.div_rem(&p);
        if r.is_zero() {
            n = q;
            v += 1;
        } else {
            return v;
        }
    }
}

/// Exact gcd of two BigInt values (non-negative result).
pub fn gcd_big(a: &BigInt, b: &BigInt) -> BigInt {
    a.gcd(b)
}

/// p^e as BigUint.
pub fn pow_big(p: u64, e: u32) -> BigUint {
    BigUint::from(p).pow(e)
}
