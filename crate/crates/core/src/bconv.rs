//! Fast base conversion as an integer GEMM with deferred reduction.
//!
//! For input basis `Q_0..Q_{L_in-1}` and output basis `P_0..P_{L_out-1}`:
//!
//! ```text
//! y[k][j]   = a[k][j] * [(Q*/Q_k)^-1]_{Q_k}  mod Q_k
//! out[i][j] = sum_k T[i][k] * y[k][j]        mod P_i,   T[i][k] = (Q*/Q_k) mod P_i
//! ```
//!
//! The sum is accumulated in a `u64` and reduced once. That is only safe
//! when every row of `T` satisfies `sum_k T[i][k] * Q_k < 2^64`; the table
//! records that certificate and [`bconv`] refuses to run without it.

use crate::arith::{gcd, Modulus, NttPrimes};
use crate::error::{Error, Result};
use crate::exec::{self, Exec};
use crate::poly::{same_basis, Domain, Polynomial};

const TWO_64: u128 = 1 << 64;

#[derive(Clone, Debug)]
pub struct BConvTable {
    q_basis: Vec<Modulus>,
    p_basis: Vec<Modulus>,
    /// Row-major `L_out x L_in`.
    t: Vec<u32>,
    inv_qhat: Vec<u32>,
    row_sums: Vec<u128>,
    overflow_free: bool,
}

/// Operation counts of one conversion call.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct BConvStats {
    pub prescale_mults: u64,
    pub mads: u64,
    pub final_reductions: u64,
    pub intermediate_reductions: u64,
}

fn check_bases(q_basis: &[Modulus], p_basis: &[Modulus]) -> Result<()> {
    if q_basis.is_empty() || p_basis.is_empty() {
        return Err(Error::InvalidArgument("empty conversion basis".into()));
    }
    for p in p_basis {
        if q_basis.iter().any(|q| q.value() == p.value()) {
            return Err(Error::SharedModulus(p.value()));
        }
    }
    let all: Vec<u32> = q_basis.iter().chain(p_basis).map(|m| m.value()).collect();
    for (i, &a) in all.iter().enumerate() {
        for &b in &all[i + 1..] {
            if gcd(a as u64, b as u64) != 1 {
                return Err(Error::NotCoprime(a, b));
            }
        }
    }
    Ok(())
}

/// `prod_{k != skip} Q_k mod m`.
fn partial_product_mod(q_basis: &[Modulus], skip: usize, m: &Modulus) -> u32 {
    q_basis
        .iter()
        .enumerate()
        .filter(|&(k, _)| k != skip)
        .fold(1 % m.value(), |acc, (_, q)| m.mul(acc, q.value() % m.value()))
}

/// `sum_k T[i][k] * Q_k` for one output modulus.
fn row_sum(q_basis: &[Modulus], p: &Modulus) -> u128 {
    (0..q_basis.len())
        .map(|k| partial_product_mod(q_basis, k, p) as u128 * q_basis[k].value() as u128)
        .sum()
}

impl BConvTable {
    pub fn new(q_basis: &[Modulus], p_basis: &[Modulus]) -> Result<Self> {
        check_bases(q_basis, p_basis)?;
        let l_in = q_basis.len();
        let mut t = Vec::with_capacity(p_basis.len() * l_in);
        for p in p_basis {
            for k in 0..l_in {
                t.push(partial_product_mod(q_basis, k, p));
            }
        }
        let inv_qhat = q_basis
            .iter()
            .enumerate()
            .map(|(k, q)| q.inv(partial_product_mod(q_basis, k, q)))
            .collect();
        let row_sums: Vec<u128> = p_basis
            .iter()
            .enumerate()
            .map(|(i, _)| {
                (0..l_in)
                    .map(|k| t[i * l_in + k] as u128 * q_basis[k].value() as u128)
                    .sum()
            })
            .collect();
        let overflow_free = row_sums.iter().all(|&s| s < TWO_64);
        Ok(BConvTable {
            q_basis: q_basis.to_vec(),
            p_basis: p_basis.to_vec(),
            t,
            inv_qhat,
            row_sums,
            overflow_free,
        })
    }

    pub fn q_basis(&self) -> &[Modulus] {
        &self.q_basis
    }

    pub fn p_basis(&self) -> &[Modulus] {
        &self.p_basis
    }

    pub fn l_in(&self) -> usize {
        self.q_basis.len()
    }

    pub fn l_out(&self) -> usize {
        self.p_basis.len()
    }

    /// `T[i][k] = (Q*/Q_k) mod P_i`.
    pub fn entry(&self, i: usize, k: usize) -> u32 {
        self.t[i * self.l_in() + k]
    }

    pub fn inv_qhat(&self) -> &[u32] {
        &self.inv_qhat
    }

    /// `sum_k T[i][k] * Q_k` for each output row.
    pub fn row_sums(&self) -> &[u128] {
        &self.row_sums
    }

    pub fn max_row_sum(&self) -> u128 {
        self.row_sums.iter().copied().max().unwrap_or(0)
    }

    /// Worst case over all tables with these moduli: `sum_k (P_i - 1) * Q_k`.
    pub fn worst_case_row_sum(&self) -> u128 {
        let sq: u128 = self.q_basis.iter().map(|q| q.value() as u128).sum();
        self.p_basis
            .iter()
            .map(|p| (p.value() as u128 - 1) * sq)
            .max()
            .unwrap_or(0)
    }

    pub fn overflow_free(&self) -> bool {
        self.overflow_free
    }

    fn check_input(&self, a: &Polynomial) -> Result<()> {
        if a.domain() != Domain::Coefficient {
            return Err(Error::Mismatch("base conversion takes coefficient-domain input".into()));
        }
        if !same_basis(a.basis(), &self.q_basis) {
            return Err(Error::Mismatch("input basis differs from the table's input basis".into()));
        }
        Ok(())
    }

    /// Row `k` scaled by `[(Q*/Q_k)^-1]_{Q_k}`.
    fn prescale(&self, a: &Polynomial, exec: Exec) -> Vec<u32> {
        let n = a.n();
        let mut y = a.data().to_vec();
        exec::for_each_chunk_mut(exec, &mut y, n, |k, row| {
            let q = &self.q_basis[k];
            let c = self.inv_qhat[k];
            for x in row.iter_mut() {
                *x = q.mul(*x, c);
            }
        });
        y
    }
}

/// Deferred-reduction conversion; requires `table.overflow_free()`.
pub fn bconv(a: &Polynomial, table: &BConvTable) -> Result<Polynomial> {
    bconv_with(a, table, Exec::default(), &mut BConvStats::default())
}

pub fn bconv_with(a: &Polynomial, table: &BConvTable, exec: Exec, stats: &mut BConvStats) -> Result<Polynomial> {
    table.check_input(a)?;
    if !table.overflow_free {
        let row = table.row_sums.iter().position(|&s| s >= TWO_64).unwrap_or(0);
        return Err(Error::OverflowRisk {
            row,
            bound: table.row_sums[row],
        });
    }
    let n = a.n();
    let l_in = table.l_in();
    let y = table.prescale(a, exec);
    let mut out = Polynomial::zero(&table.p_basis, n, Domain::Coefficient);
    exec::for_each_chunk_mut(exec, out.data_mut(), n, |i, row| {
        let p = &table.p_basis[i];
        let mut acc = vec![0u64; n];
        for k in 0..l_in {
            let t = table.t[i * l_in + k] as u64;
            for (s, &v) in acc.iter_mut().zip(&y[k * n..(k + 1) * n]) {
                debug_assert!(s.checked_add(t * v as u64).is_some());
                *s += t * v as u64;
            }
        }
        for (o, s) in row.iter_mut().zip(acc) {
            *o = p.reduce_u64(s);
        }
    });
    let l_out = table.l_out() as u64;
    stats.prescale_mults += (l_in * n) as u64;
    stats.mads += l_in as u64 * l_out * n as u64;
    stats.final_reductions += l_out * n as u64;
    Ok(out)
}

/// Conversion that reduces the accumulator whenever the next term could
/// overflow 64 bits. Accepts any table; agrees bit-for-bit with [`bconv`]
/// whenever both apply.
pub fn bconv_with_intermediate_reduction(a: &Polynomial, table: &BConvTable) -> Result<Polynomial> {
    bconv_with_intermediate_reduction_with(a, table, Exec::default(), &mut BConvStats::default())
}

pub fn bconv_with_intermediate_reduction_with(
    a: &Polynomial,
    table: &BConvTable,
    exec: Exec,
    stats: &mut BConvStats,
) -> Result<Polynomial> {
    table.check_input(a)?;
    let n = a.n();
    let l_in = table.l_in();
    let y = table.prescale(a, exec);

    // reduction points depend only on the table, so they are planned per row
    let plans: Vec<Vec<bool>> = table
        .p_basis
        .iter()
        .enumerate()
        .map(|(i, p)| {
            let mut bound: u128 = 0;
            (0..l_in)
                .map(|k| {
                    let term = table.t[i * l_in + k] as u128 * (table.q_basis[k].value() as u128 - 1);
                    let reduce = bound + term >= TWO_64;
                    if reduce {
                        bound = p.value() as u128 - 1;
                    }
                    bound += term;
                    reduce
                })
                .collect()
        })
        .collect();

    let mut out = Polynomial::zero(&table.p_basis, n, Domain::Coefficient);
    exec::for_each_chunk_mut(exec, out.data_mut(), n, |i, row| {
        let p = &table.p_basis[i];
        let mut acc = vec![0u64; n];
        for k in 0..l_in {
            let t = table.t[i * l_in + k] as u64;
            if plans[i][k] {
                for s in acc.iter_mut() {
                    *s = p.reduce_u64(*s) as u64;
                }
            }
            for (s, &v) in acc.iter_mut().zip(&y[k * n..(k + 1) * n]) {
                *s += t * v as u64;
            }
        }
        for (o, s) in row.iter_mut().zip(acc) {
            *o = p.reduce_u64(s);
        }
    });
    let l_out = table.l_out() as u64;
    let extra: u64 = plans.iter().map(|r| r.iter().filter(|&&b| b).count() as u64).sum();
    stats.prescale_mults += (l_in * n) as u64;
    stats.mads += l_in as u64 * l_out * n as u64;
    stats.final_reductions += l_out * n as u64;
    stats.intermediate_reductions += extra * n as u64;
    Ok(out)
}

/// Uses the deferred path when the table allows it, otherwise the fallback.
pub fn convert(a: &Polynomial, table: &BConvTable, exec: Exec) -> Result<Polynomial> {
    let mut stats = BConvStats::default();
    if table.overflow_free {
        bconv_with(a, table, exec, &mut stats)
    } else {
        bconv_with_intermediate_reduction_with(a, table, exec, &mut stats)
    }
}

/// Finds an input basis of `l_in` and an output basis of `l_out` NTT-friendly
/// primes below `2^bitwidth` such that the deferred-reduction certificate
/// holds for every output modulus.
///
/// The input basis takes the largest `l_in` primes; output candidates are
/// then scanned in descending order and kept when their row sum stays below
/// `2^64`.
pub fn search_overflow_free_moduli(
    l_in: usize,
    l_out: usize,
    n: usize,
    bitwidth: u32,
) -> Result<(Vec<Modulus>, Vec<Modulus>)> {
    if l_in == 0 || l_out == 0 {
        return Err(Error::InvalidArgument("empty basis requested".into()));
    }
    let mut primes = NttPrimes::descending(bitwidth, n)?;
    let q_vals: Vec<u32> = primes.by_ref().take(l_in).collect();
    if q_vals.len() < l_in {
        return Err(Error::InsufficientPrimes {
            requested: l_in + l_out,
            found: q_vals.len(),
            bitwidth,
            two_n: 2 * n as u64,
        });
    }
    let q_basis = q_vals
        .into_iter()
        .map(|q| Modulus::new(q, n))
        .collect::<Result<Vec<_>>>()?;
    let mut p_basis = Vec::with_capacity(l_out);
    let mut best_rejected = u128::MAX;
    for cand in primes {
        let m = Modulus::new(cand, n)?;
        let s = row_sum(&q_basis, &m);
        if s < TWO_64 {
            p_basis.push(m);
            if p_basis.len() == l_out {
                return Ok((q_basis, p_basis));
            }
        } else {
            best_rejected = best_rejected.min(s);
        }
    }
    Err(Error::SearchFailed {
        requested: l_out,
        accepted: p_basis.len(),
        best_sum: best_rejected,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::arith::find_ntt_primes;

    fn plain(vals: &[u32]) -> Vec<Modulus> {
        vals.iter().map(|&v| Modulus::plain(v).unwrap()).collect()
    }

    #[test]
    fn small_table() {
        let t = BConvTable::new(&plain(&[5, 7]), &plain(&[11])).unwrap();
        assert_eq!((t.entry(0, 0), t.entry(0, 1)), (7, 5));
        assert_eq!(t.inv_qhat(), &[3, 3]);
        assert!(t.overflow_free());
    }

    #[test]
    fn single_modulus_degenerate() {
        let t = BConvTable::new(&plain(&[97]), &plain(&[193])).unwrap();
        assert_eq!(t.entry(0, 0), 1);
        assert_eq!(t.inv_qhat(), &[1]);
    }

    #[test]
    fn converts_twelve() {
        let t = BConvTable::new(&plain(&[5, 7]), &plain(&[11])).unwrap();
        let a = Polynomial::from_data(&plain(&[5, 7]), 1, Domain::Coefficient, vec![2, 5]).unwrap();
        let out = bconv(&a, &t).unwrap();
        assert_eq!(out.data(), &[1]);
        let fallback = bconv_with_intermediate_reduction(&a, &t).unwrap();
        assert_eq!(out, fallback);
    }

    #[test]
    fn rejects_shared_and_non_coprime_moduli() {
        assert!(matches!(
            BConvTable::new(&plain(&[5, 7]), &plain(&[7])),
            Err(Error::SharedModulus(7))
        ));
        assert!(matches!(
            BConvTable::new(&plain(&[6, 7]), &plain(&[9])),
            Err(Error::NotCoprime(6, 9))
        ));
    }

    #[test]
    fn zero_maps_to_zero() {
        let qs = find_ntt_primes(3, 20, 8).unwrap();
        let ps = find_ntt_primes(5, 20, 8).unwrap()[3..].to_vec();
        let t = BConvTable::new(&qs, &ps).unwrap();
        let z = Polynomial::zero(&qs, 8, Domain::Coefficient);
        assert_eq!(convert(&z, &t, Exec::Sequential).unwrap(), Polynomial::zero(&ps, 8, Domain::Coefficient));
    }

    #[test]
    fn fast_path_refuses_uncertified_table() {
        let all = find_ntt_primes(13, 31, 16).unwrap();
        let (q, p) = all.split_at(12);
        let t = BConvTable::new(q, p).unwrap();
        assert!(!t.overflow_free());
        let a = Polynomial::zero(q, 16, Domain::Coefficient);
        assert!(matches!(bconv(&a, &t), Err(Error::OverflowRisk { .. })));
        assert!(bconv_with_intermediate_reduction(&a, &t).is_ok());
    }

    #[test]
    fn mad_counts_are_closed_form() {
        let (q, p) = search_overflow_free_moduli(3, 4, 16, 31).unwrap();
        let t = BConvTable::new(&q, &p).unwrap();
        let a = Polynomial::zero(&q, 16, Domain::Coefficient);
        let mut st = BConvStats::default();
        bconv_with(&a, &t, Exec::Sequential, &mut st).unwrap();
        assert_eq!(st.mads, 3 * 4 * 16);
        assert_eq!(st.final_reductions, 4 * 16);
        assert_eq!(st.intermediate_reductions, 0);
    }

    #[test]
    fn single_pair_search() {
        let (q, p) = search_overflow_free_moduli(1, 1, 1 << 10, 31).unwrap();
        let t = BConvTable::new(&q, &p).unwrap();
        assert_eq!(t.entry(0, 0), 1);
        assert!(t.overflow_free());
    }
}
