//! Exact arithmetic for the p-modified Kudla lift of elliptic modular forms
//! to Picard modular Fourier-Jacobi expansions.
//!
//! The crate is organized around six concerns:
//!
//! * [`imquad`] — imaginary quadratic fields K = ℚ(√d): elements, fractional
//!   ideals in Hermite normal form, class groups, prime splitting, CM bases.
//! * [`characters`] — Hecke characters of K in classical, p-adic, and Λ-adic
//!   guise, including the Teichmüller-twisted character α and the
//!   interpolation family Ξ.
//! * [`qexp`] — truncated q-expansions and two-variable Jacobi expansions
//!   over exact cyclotomic, complex-ball, and capped p-adic coefficients;
//!   Hecke operators, CM eigenforms, p-stabilization, the ordinary projector.
//! * [`lift`] — the computable surface of the lift: Fourier-Jacobi
//!   coefficients, Shintani Euler factors, lifted eigenvalues, the
//!   multiplicity lemma and double-coset identities.
//! * [`padic`] — capped p-adic and Iwasawa-algebra arithmetic, CM Hida
//!   families, and the factor-wise Main Theorem certificate.
//! * support modules [`ball`] (rigorous dyadic ball arithmetic), [`cyc`]
//!   (cyclotomic extensions of K), [`symbolic`] (exact multivariate Laurent
//!   polynomials), and [`arith`] (elementary number theory helpers).
//!
//! Coefficient rings are abstracted by [`qexp::Coeff`]; the concrete series
//! types used throughout the crate are exported as type aliases below.

pub mod arith;
pub mod ball;
pub mod characters;
pub mod cyc;
pub mod imquad;
pub mod lift;
pub mod padic;
pub mod qexp;
pub mod symbolic;

/// q-expansion over exact cyclotomic-over-K coefficients.
pub type ExactSeries = qexp::QExpansion<cyc::CycK>;
/// q-expansion over rigorous complex balls.
pub type BallSeries = qexp::QExpansion<ball::ComplexBall>;
/// q-expansion over capped p-adic coefficients.
pub type PadicSeries = qexp::QExpansion<padic::Padic>;

/// Errors shared across the crate.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    Invalid(String),
    #[error("precision exhausted: {0}")]
    Precision(String),
    #[error("unsupported: {0}")]
    Unsupported(String),
    #[error("enumeration budget exceeded: {0}")]
    Budget(String),
}

pub type Result<T> = std::result::Result<T, Error>;

/// Deterministic 64-bit generator (splitmix64) used for the "random sample"
/// portions of the verification suites.
///
/// Hand-rolled rather than pulled from a crate so that the byte-exact
/// determinism promise of the CLI does not depend on the stream stability of
/// an external generator.
#[derive(Clone, Debug)]
pub struct DetRng {
    state: u64,
}

impl DetRng {
    pub fn new(seed: u64) -> Self {
        DetRng { state: seed }
    }

    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(0x9e37_79b9_7f4a_7c15);
        let mut z = self.state;
        z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
        z ^ (z >> 31)
    }

    /// Uniform value in `0..n` (n > 0) by rejection.
    pub fn below(&mut self, n: u64) -> u64 {
        assert!(n > 0);
        let zone = u64::MAX - (u64::MAX % n);
        loop {
            let v = self.next_u64();
            if v < zone {
                return v % n;
            }
        }
    }

    /// Uniform in the inclusive range `lo..=hi`.
    pub fn range_i64(&mut self, lo: i64, hi: i64) -> i64 {
        assert!(lo <= hi);
        let span = (hi - lo) as u64 + 1;
        lo + self.below(span) as i64
    }
}
