//! Reference implementations used by the verification harness.
//!
//! Everything here is deliberately naive: quadratic-time convolutions,
//! evaluation by definition, and arbitrary-precision CRT. None of it shares
//! code with the fast paths it checks.

use num_bigint::BigUint;
use num_traits::{ToPrimitive, Zero};

use crate::arith::Modulus;

fn mulmod(a: u64, b: u64, q: u64) -> u64 {
    ((a as u128 * b as u128) % q as u128) as u64
}

fn powmod(mut b: u64, mut e: u64, q: u64) -> u64 {
    let mut acc = 1 % q;
    b %= q;
    while e > 0 {
        if e & 1 == 1 {
            acc = mulmod(acc, b, q);
        }
        b = mulmod(b, b, q);
        e >>= 1;
    }
    acc
}

/// `a * b mod (X^N + 1, q)` by schoolbook multiplication.
pub fn negacyclic_product(a: &[u32], b: &[u32], q: u32) -> Vec<u32> {
    let n = a.len();
    let q = q as u64;
    let mut acc = vec![0u64; n];
    for i in 0..n {
        for j in 0..n {
            let t = mulmod(a[i] as u64, b[j] as u64, q);
            let k = i + j;
            if k < n {
                acc[k] = (acc[k] + t) % q;
            } else {
                acc[k - n] = (acc[k - n] + q - t) % q;
            }
        }
    }
    acc.into_iter().map(|x| x as u32).collect()
}

/// Slot `j` = `a(psi^(2j+1))`, by direct evaluation.
pub fn evaluate_at_odd_powers(a: &[u32], q: u32, psi: u32) -> Vec<u32> {
    let n = a.len();
    let q = q as u64;
    (0..n)
        .map(|j| {
            let x = powmod(psi as u64, 2 * j as u64 + 1, q);
            // Horner
            a.iter().rev().fold(0u64, |acc, &c| (mulmod(acc, x, q) + c as u64) % q) as u32
        })
        .collect()
}

pub fn modulus_product(basis: &[Modulus]) -> BigUint {
    basis.iter().fold(BigUint::from(1u32), |acc, m| acc * m.value())
}

/// The integer in `[0, prod q)` with the given residues.
pub fn crt_reconstruct(residues: &[u32], basis: &[Modulus]) -> BigUint {
    let q_star = modulus_product(basis);
    let mut x = BigUint::zero();
    for (&r, m) in residues.iter().zip(basis) {
        let q = m.value() as u64;
        let hat = &q_star / m.value();
        let hat_mod = (&hat % q).to_u64().unwrap();
        let inv = powmod(hat_mod, q - 2, q);
        x += hat * BigUint::from(mulmod(r as u64, inv, q));
    }
    x % q_star
}

/// Fast base conversion of one column evaluated in exact arithmetic:
/// `sum_k [a_k * (Q*/Q_k)^-1]_{Q_k} * (Q*/Q_k)` reduced by each output
/// modulus. Also returns the integer sum itself.
pub fn fast_bconv_column(column: &[u32], q_basis: &[Modulus], p_basis: &[Modulus]) -> (Vec<u32>, BigUint) {
    let q_star = modulus_product(q_basis);
    let mut sum = BigUint::zero();
    for (&a, m) in column.iter().zip(q_basis) {
        let q = m.value() as u64;
        let hat = &q_star / m.value();
        let hat_mod = (&hat % q).to_u64().unwrap();
        let y = mulmod(a as u64, powmod(hat_mod, q - 2, q), q);
        sum += hat * BigUint::from(y);
    }
    let out = p_basis
        .iter()
        .map(|p| (&sum % p.value()).to_u32().unwrap())
        .collect();
    (out, sum)
}

/// `sum_j ((Q*/Q_j) mod P) * Q_j` in exact arithmetic.
pub fn overflow_row_sum(q_basis: &[Modulus], p: &Modulus) -> BigUint {
    let q_star = modulus_product(q_basis);
    q_basis
        .iter()
        .map(|q| ((&q_star / q.value()) % p.value()) * q.value())
        .fold(BigUint::zero(), |a, b| a + b)
}

pub fn two_pow_64() -> BigUint {
    BigUint::from(1u8) << 64
}
