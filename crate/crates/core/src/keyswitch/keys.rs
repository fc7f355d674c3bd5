use rand::seq::index;
use rand::Rng;

use crate::arith::Modulus;
use crate::error::{Error, Result};
use crate::poly::Polynomial;

/// Ternary secret with exactly `h` nonzero coefficients.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SecretKey {
    coeffs: Vec<i8>,
}

impl SecretKey {
    pub fn generate<R: Rng>(n: usize, h: usize, rng: &mut R) -> Result<Self> {
        if h > n {
            return Err(Error::InvalidArgument(format!("Hamming weight {h} > N = {n}")));
        }
        let mut coeffs = vec![0i8; n];
        for i in index::sample(rng, n, h) {
            coeffs[i] = if rng.gen::<bool>() { 1 } else { -1 };
        }
        Ok(SecretKey { coeffs })
    }

    pub fn from_coeffs(coeffs: Vec<i8>) -> Result<Self> {
        if coeffs.iter().any(|c| !(-1..=1).contains(c)) {
            return Err(Error::InvalidArgument("secret coefficients must be ternary".into()));
        }
        Ok(SecretKey { coeffs })
    }

    pub fn coeffs(&self) -> &[i8] {
        &self.coeffs
    }

    pub fn hamming_weight(&self) -> usize {
        self.coeffs.iter().filter(|&&c| c != 0).count()
    }

    /// Coefficient-domain image over `basis` (`-1` becomes `q - 1`).
    pub fn to_poly(&self, basis: &[Modulus]) -> Polynomial {
        let c: Vec<i64> = self.coeffs.iter().map(|&c| c as i64).collect();
        Polynomial::from_signed(basis, &c)
    }
}

/// `(a, b)` in the evaluation domain with `b + a*s = m + e`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Ciphertext {
    pub a: Polynomial,
    pub b: Polynomial,
    pub log_scale: u32,
}

impl Ciphertext {
    pub fn limbs(&self) -> usize {
        self.b.limbs()
    }
}

/// `dnum` pairs `(b_j, a_j)` over `Q ++ P`, evaluation domain.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SwitchingKey {
    pairs: Vec<(Polynomial, Polynomial)>,
    l: usize,
    alpha: usize,
}

impl SwitchingKey {
    pub(crate) fn new(pairs: Vec<(Polynomial, Polynomial)>, l: usize, alpha: usize) -> Self {
        SwitchingKey { pairs, l, alpha }
    }

    pub fn pairs(&self) -> &[(Polynomial, Polynomial)] {
        &self.pairs
    }

    pub fn dnum(&self) -> usize {
        self.pairs.len()
    }

    /// `(polynomials, limbs)` = `(2 * dnum, L + alpha)`.
    pub fn shape(&self) -> (usize, usize) {
        (2 * self.pairs.len(), self.l + self.alpha)
    }

    pub fn max_limbs(&self) -> usize {
        self.l
    }

    pub fn alpha(&self) -> usize {
        self.alpha
    }
}
