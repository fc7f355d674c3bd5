//! The `L x N` residue matrix and its element-wise operations.

use crate::arith::{ArithOp, Modulus};
use crate::error::{Error, Result};
use crate::exec::{self, Exec};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Domain {
    Coefficient,
    Evaluation,
}

/// A polynomial in RNS form: row `i` holds the residues modulo `basis[i]`,
/// stored row-major in one contiguous buffer.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Polynomial {
    basis: Vec<Modulus>,
    n: usize,
    domain: Domain,
    data: Vec<u32>,
}

impl Polynomial {
    pub fn zero(basis: &[Modulus], n: usize, domain: Domain) -> Self {
        Polynomial {
            basis: basis.to_vec(),
            n,
            domain,
            data: vec![0; basis.len() * n],
        }
    }

    /// Builds a polynomial from row-major residues, checking every row bound.
    pub fn from_data(basis: &[Modulus], n: usize, domain: Domain, data: Vec<u32>) -> Result<Self> {
        if !n.is_power_of_two() {
            return Err(Error::InvalidArgument(format!("degree {n} is not a power of two")));
        }
        if data.len() != basis.len() * n {
            return Err(Error::Mismatch(format!(
                "{} residues for a {}x{} matrix",
                data.len(),
                basis.len(),
                n
            )));
        }
        for (i, m) in basis.iter().enumerate() {
            if let Some(x) = data[i * n..(i + 1) * n].iter().find(|&&x| x >= m.value()) {
                return Err(Error::InvalidArgument(format!(
                    "residue {x} in row {i} not below {}",
                    m.value()
                )));
            }
        }
        Ok(Polynomial {
            basis: basis.to_vec(),
            n,
            domain,
            data,
        })
    }

    /// Coefficient-domain polynomial whose integer coefficients are `coeffs`.
    pub fn from_signed(basis: &[Modulus], coeffs: &[i64]) -> Self {
        let n = coeffs.len();
        let mut data = Vec::with_capacity(basis.len() * n);
        for m in basis {
            data.extend(coeffs.iter().map(|&c| m.from_i64(c)));
        }
        Polynomial {
            basis: basis.to_vec(),
            n,
            domain: Domain::Coefficient,
            data,
        }
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn limbs(&self) -> usize {
        self.basis.len()
    }

    #[inline]
    pub fn basis(&self) -> &[Modulus] {
        &self.basis
    }

    #[inline]
    pub fn domain(&self) -> Domain {
        self.domain
    }

    #[inline]
    pub fn data(&self) -> &[u32] {
        &self.data
    }

    /// Relabels the domain without touching the residues. Callers are
    /// responsible for the data actually being in `domain`.
    pub(crate) fn set_domain(&mut self, domain: Domain) {
        self.domain = domain;
    }

    pub(crate) fn data_mut(&mut self) -> &mut [u32] {
        &mut self.data
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[u32] {
        &self.data[i * self.n..(i + 1) * self.n]
    }

    pub fn row_mut(&mut self, i: usize) -> &mut [u32] {
        &mut self.data[i * self.n..(i + 1) * self.n]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[u32]> {
        self.data.chunks(self.n)
    }

    /// Rows `range` as a new polynomial over the corresponding sub-basis.
    pub fn limb_range(&self, range: std::ops::Range<usize>) -> Polynomial {
        Polynomial {
            basis: self.basis[range.clone()].to_vec(),
            n: self.n,
            domain: self.domain,
            data: self.data[range.start * self.n..range.end * self.n].to_vec(),
        }
    }

    /// Stacks the rows of `self` on top of the rows of `other`.
    pub fn concat(&self, other: &Polynomial) -> Result<Polynomial> {
        if self.n != other.n || self.domain != other.domain {
            return Err(Error::Mismatch("concat of polynomials with different degree or domain".into()));
        }
        let mut basis = self.basis.clone();
        basis.extend_from_slice(&other.basis);
        let mut data = self.data.clone();
        data.extend_from_slice(&other.data);
        Ok(Polynomial {
            basis,
            n: self.n,
            domain: self.domain,
            data,
        })
    }

    fn check_compatible(&self, other: &Polynomial) -> Result<()> {
        if self.n != other.n {
            return Err(Error::Mismatch(format!("degree {} vs {}", self.n, other.n)));
        }
        if self.domain != other.domain {
            return Err(Error::Mismatch(format!(
                "domain {:?} vs {:?}",
                self.domain, other.domain
            )));
        }
        if !same_basis(&self.basis, &other.basis) {
            return Err(Error::Mismatch("operands have different moduli bases".into()));
        }
        Ok(())
    }

    /// Row `i`, column `j` of the result is `a[i][j] op b[i][j] mod basis[i]`.
    pub fn elementwise(&self, other: &Polynomial, op: ArithOp) -> Result<Polynomial> {
        self.elementwise_with(other, op, Exec::default())
    }

    pub fn elementwise_with(&self, other: &Polynomial, op: ArithOp, exec: Exec) -> Result<Polynomial> {
        let mut out = self.clone();
        out.elementwise_assign_with(other, op, exec)?;
        Ok(out)
    }

    pub fn elementwise_assign_with(&mut self, other: &Polynomial, op: ArithOp, exec: Exec) -> Result<()> {
        self.check_compatible(other)?;
        if op == ArithOp::Mul && self.domain != Domain::Evaluation {
            return Err(Error::Mismatch(
                "element-wise multiplication requires the evaluation domain".into(),
            ));
        }
        let basis = &self.basis;
        let rhs = &other.data;
        let n = self.n;
        exec::for_each_chunk_mut(exec, &mut self.data, n, |i, row| {
            let m = &basis[i];
            for (x, &y) in row.iter_mut().zip(&rhs[i * n..(i + 1) * n]) {
                *x = m.apply(op, *x, y);
            }
        });
        Ok(())
    }

    pub fn add(&self, other: &Polynomial) -> Result<Polynomial> {
        self.elementwise(other, ArithOp::Add)
    }

    pub fn sub(&self, other: &Polynomial) -> Result<Polynomial> {
        self.elementwise(other, ArithOp::Sub)
    }

    pub fn mul(&self, other: &Polynomial) -> Result<Polynomial> {
        self.elementwise(other, ArithOp::Mul)
    }

    pub fn neg(&self) -> Polynomial {
        let mut out = self.clone();
        let n = self.n;
        for (i, m) in self.basis.iter().enumerate() {
            for x in &mut out.data[i * n..(i + 1) * n] {
                *x = m.neg(*x);
            }
        }
        out
    }

    /// Multiplies row `i` by `scalars[i]`.
    pub fn mul_row_scalars(&mut self, scalars: &[u32]) {
        debug_assert_eq!(scalars.len(), self.limbs());
        let n = self.n;
        for (i, (m, &c)) in self.basis.iter().zip(scalars).enumerate() {
            for x in &mut self.data[i * n..(i + 1) * n] {
                *x = m.mul(*x, c);
            }
        }
    }

    /// Coefficient-domain automorphism `a(X) -> a(X^k)`.
    ///
    /// Coefficient `i` moves to `i*k mod 2N`, negated when that index wraps
    /// past `N` (since `X^N = -1`).
    pub fn automorphism(&self, k: usize) -> Result<Polynomial> {
        check_galois_element(k, self.n)?;
        if self.domain != Domain::Coefficient {
            return Err(Error::Mismatch(
                "automorphism takes a coefficient-domain polynomial; use EvalAutomorphism for the evaluation domain".into(),
            ));
        }
        let n = self.n;
        let two_n = 2 * n;
        let mut out = Polynomial::zero(&self.basis, n, Domain::Coefficient);
        for (r, m) in self.basis.iter().enumerate() {
            let src = &self.data[r * n..(r + 1) * n];
            let dst = &mut out.data[r * n..(r + 1) * n];
            for (i, &c) in src.iter().enumerate() {
                let e = (i * k) % two_n;
                if e >= n {
                    dst[e - n] = m.neg(c);
                } else {
                    dst[e] = c;
                }
            }
        }
        Ok(out)
    }
}

pub(crate) fn check_galois_element(k: usize, n: usize) -> Result<()> {
    if k.is_multiple_of(2) {
        return Err(Error::InvalidArgument(format!(
            "automorphism index {k} is even (must be coprime to 2N = {})",
            2 * n
        )));
    }
    Ok(())
}

/// Bases compare by modulus value only.
pub fn same_basis(a: &[Modulus], b: &[Modulus]) -> bool {
    a.len() == b.len() && a.iter().zip(b).all(|(x, y)| x.value() == y.value())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn basis17() -> Vec<Modulus> {
        vec![Modulus::new(17, 4).unwrap()]
    }

    fn coeff(data: Vec<u32>) -> Polynomial {
        Polynomial::from_data(&basis17(), 4, Domain::Coefficient, data).unwrap()
    }

    #[test]
    fn add_zero_and_self_subtraction() {
        let a = coeff(vec![3, 16, 0, 9]);
        let z = Polynomial::zero(&basis17(), 4, Domain::Coefficient);
        assert_eq!(a.add(&z).unwrap(), a);
        assert_eq!(a.sub(&a).unwrap(), z);
    }

    #[test]
    fn mul_small_values() {
        let b = basis17();
        let a = Polynomial::from_data(&b, 4, Domain::Evaluation, vec![1, 2, 3, 4]).unwrap();
        let c = Polynomial::from_data(&b, 4, Domain::Evaluation, vec![2, 2, 2, 2]).unwrap();
        assert_eq!(a.mul(&c).unwrap().data(), &[2, 4, 6, 8]);
    }

    #[test]
    fn mul_rejects_coefficient_domain() {
        let a = coeff(vec![1, 2, 3, 4]);
        assert!(matches!(a.mul(&a), Err(Error::Mismatch(_))));
    }

    #[test]
    fn mismatched_bases_are_rejected() {
        let a = coeff(vec![1, 2, 3, 4]);
        let other = vec![Modulus::new(97, 4).unwrap()];
        let b = Polynomial::from_data(&other, 4, Domain::Coefficient, vec![1, 2, 3, 4]).unwrap();
        assert!(matches!(a.add(&b), Err(Error::Mismatch(_))));
    }

    #[test]
    fn out_of_range_residue_is_rejected() {
        assert!(Polynomial::from_data(&basis17(), 4, Domain::Coefficient, vec![17, 0, 0, 0]).is_err());
    }

    #[test]
    fn automorphism_small_cases() {
        let x = coeff(vec![0, 1, 0, 0]);
        assert_eq!(x.automorphism(1).unwrap(), x);
        assert_eq!(x.automorphism(3).unwrap().data(), &[0, 0, 0, 1]);
        let x3 = coeff(vec![0, 0, 0, 1]);
        assert_eq!(x3.automorphism(3).unwrap().data(), &[0, 1, 0, 0]);
        // x^2 -> x^6 = -x^2
        let x2 = coeff(vec![0, 0, 1, 0]);
        assert_eq!(x2.automorphism(3).unwrap().data(), &[0, 0, 16, 0]);
    }

    #[test]
    fn even_galois_element_is_rejected() {
        let x = coeff(vec![0, 1, 0, 0]);
        assert!(matches!(x.automorphism(2), Err(Error::InvalidArgument(_))));
    }
}
