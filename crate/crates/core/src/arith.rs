//! Word-size modular arithmetic and NTT-friendly prime generation.

use crate::error::{Error, Result};

/// An NTT-friendly prime `q < 2^32` with `q = 1 mod 2n`, together with the
/// smallest primitive `2n`-th root of unity and a Barrett constant.
///
/// Residues are always kept in the canonical range `[0, q)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Modulus {
    q: u32,
    n: usize,
    psi: u32,
    psi_inv: u32,
    /// floor(2^64 / q)
    barrett: u64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ArithOp {
    Add,
    Sub,
    Mul,
}

impl Modulus {
    /// Validates `q` for ring degree `n` and derives its root of unity.
    pub fn new(q: u32, n: usize) -> Result<Self> {
        if !n.is_power_of_two() || n < 2 {
            return Err(Error::InvalidArgument(format!(
                "ring degree {n} is not a power of two >= 2"
            )));
        }
        let two_n = 2 * n as u64;
        if q < 3 || !is_prime(q as u64) {
            return Err(Error::InvalidArgument(format!("{q} is not an odd prime")));
        }
        if !(q as u64 - 1).is_multiple_of(two_n) {
            return Err(Error::InvalidArgument(format!(
                "{q} is not 1 mod {two_n}"
            )));
        }
        let mut m = Modulus {
            q,
            n,
            psi: 0,
            psi_inv: 0,
            barrett: u64::MAX / q as u64,
        };
        m.psi = m.min_primitive_root(two_n);
        m.psi_inv = m.inv(m.psi);
        Ok(m)
    }

    /// Modulus without a root of unity, for bases that only do element-wise
    /// work or base conversion.
    pub fn plain(q: u32) -> Result<Self> {
        if q < 2 {
            return Err(Error::InvalidArgument(format!("modulus {q} < 2")));
        }
        Ok(Modulus {
            q,
            n: 0,
            psi: 0,
            psi_inv: 0,
            barrett: u64::MAX / q as u64,
        })
    }

    #[inline]
    pub fn value(&self) -> u32 {
        self.q
    }

    /// Ring degree the root of unity belongs to (0 for [`Modulus::plain`]).
    #[inline]
    pub fn degree(&self) -> usize {
        self.n
    }

    /// Primitive `2n`-th root of unity.
    #[inline]
    pub fn psi(&self) -> u32 {
        self.psi
    }

    #[inline]
    pub fn psi_inv(&self) -> u32 {
        self.psi_inv
    }

    pub fn bits(&self) -> u32 {
        32 - self.q.leading_zeros()
    }

    #[inline]
    pub fn add(&self, x: u32, y: u32) -> u32 {
        debug_assert!(x < self.q && y < self.q);
        let s = x as u64 + y as u64;
        let q = self.q as u64;
        (if s >= q { s - q } else { s }) as u32
    }

    #[inline]
    pub fn sub(&self, x: u32, y: u32) -> u32 {
        debug_assert!(x < self.q && y < self.q);
        if x >= y {
            x - y
        } else {
            (x as u64 + self.q as u64 - y as u64) as u32
        }
    }

    #[inline]
    pub fn neg(&self, x: u32) -> u32 {
        debug_assert!(x < self.q);
        if x == 0 {
            0
        } else {
            self.q - x
        }
    }

    #[inline]
    pub fn mul(&self, x: u32, y: u32) -> u32 {
        debug_assert!(x < self.q && y < self.q);
        self.reduce_u64(x as u64 * y as u64)
    }

    /// Barrett reduction of an arbitrary 64-bit value.
    #[inline]
    pub fn reduce_u64(&self, x: u64) -> u32 {
        let quot = ((x as u128 * self.barrett as u128) >> 64) as u64;
        let q = self.q as u64;
        let mut r = x - quot * q;
        // floor(2^64/q) underestimates by < 1, so r < 3q
        while r >= q {
            r -= q;
        }
        r as u32
    }

    #[inline]
    pub fn reduce_u128(&self, x: u128) -> u32 {
        (x % self.q as u128) as u32
    }

    /// Maps a signed integer to its canonical residue.
    #[inline]
    pub fn from_i64(&self, x: i64) -> u32 {
        x.rem_euclid(self.q as i64) as u32
    }

    /// Centered lift into `(-q/2, q/2]`.
    #[inline]
    pub fn center(&self, x: u32) -> i64 {
        if x > self.q / 2 {
            x as i64 - self.q as i64
        } else {
            x as i64
        }
    }

    pub fn apply(&self, op: ArithOp, x: u32, y: u32) -> u32 {
        match op {
            ArithOp::Add => self.add(x, y),
            ArithOp::Sub => self.sub(x, y),
            ArithOp::Mul => self.mul(x, y),
        }
    }

    pub fn pow(&self, base: u32, mut exp: u64) -> u32 {
        let mut acc = 1 % self.q;
        let mut b = base % self.q;
        while exp > 0 {
            if exp & 1 == 1 {
                acc = self.mul(acc, b);
            }
            b = self.mul(b, b);
            exp >>= 1;
        }
        acc
    }

    /// Inverse via Fermat; `q` must be prime and `x` nonzero.
    pub fn inv(&self, x: u32) -> u32 {
        debug_assert!(!x.is_multiple_of(self.q));
        self.pow(x, self.q as u64 - 2)
    }

    /// Smallest primitive `order`-th root of unity; `order` a power of two
    /// dividing q - 1.
    fn min_primitive_root(&self, order: u64) -> u32 {
        let half = order / 2;
        let cofactor = (self.q as u64 - 1) / order;
        let minus_one = self.q - 1;
        let mut seed = 0;
        for x in 2..self.q {
            let c = self.pow(x, cofactor);
            if self.pow(c, half) == minus_one {
                seed = c;
                break;
            }
        }
        // every primitive root is an odd power of any other
        let step = self.mul(seed, seed);
        let mut cur = seed;
        let mut best = seed;
        for _ in 0..half {
            best = best.min(cur);
            cur = self.mul(cur, step);
        }
        best
    }
}

/// Deterministic Miller-Rabin for 64-bit integers.
pub fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    const SMALL: [u64; 12] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37];
    for p in SMALL {
        if n.is_multiple_of(p) {
            return n == p;
        }
    }
    let mut d = n - 1;
    let mut s = 0;
    while d.is_multiple_of(2) {
        d /= 2;
        s += 1;
    }
    let mulmod = |a: u64, b: u64| ((a as u128 * b as u128) % n as u128) as u64;
    let powmod = |mut b: u64, mut e: u64| {
        let mut acc = 1u64;
        while e > 0 {
            if e & 1 == 1 {
                acc = mulmod(acc, b);
            }
            b = mulmod(b, b);
            e >>= 1;
        }
        acc
    };
    'witness: for a in SMALL {
        let mut x = powmod(a, d);
        if x == 1 || x == n - 1 {
            continue;
        }
        for _ in 1..s {
            x = mulmod(x, x);
            if x == n - 1 {
                continue 'witness;
            }
        }
        return false;
    }
    true
}

pub fn gcd(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

/// Descending scan over primes `p = 1 mod 2n` in `[2^(bitwidth-2), 2^bitwidth)`.
#[derive(Clone, Debug)]
pub struct NttPrimes {
    next: u64,
    step: u64,
    floor: u64,
}

impl NttPrimes {
    pub fn descending(bitwidth: u32, n: usize) -> Result<Self> {
        if !(2..=32).contains(&bitwidth) {
            return Err(Error::InvalidArgument(format!(
                "bitwidth {bitwidth} outside [2, 32]"
            )));
        }
        if !n.is_power_of_two() || n < 2 {
            return Err(Error::InvalidArgument(format!(
                "ring degree {n} is not a power of two >= 2"
            )));
        }
        let step = 2 * n as u64;
        let top = 1u64 << bitwidth;
        if step > top {
            return Err(Error::InvalidArgument(format!(
                "2n = {step} does not divide 2^{bitwidth}"
            )));
        }
        // largest k*2n + 1 strictly below 2^bitwidth
        let next = (top - 2) / step * step + 1;
        Ok(NttPrimes {
            next,
            step,
            floor: 1u64 << (bitwidth - 2),
        })
    }
}

impl Iterator for NttPrimes {
    type Item = u32;

    fn next(&mut self) -> Option<u32> {
        while self.next > 1 && self.next >= self.floor {
            let cand = self.next;
            self.next = self.next.saturating_sub(self.step);
            if is_prime(cand) {
                return Some(cand as u32);
            }
        }
        None
    }
}

/// The `count` largest primes `p < 2^bitwidth` with `p = 1 mod 2n`, each with
/// a verified primitive `2n`-th root of unity.
pub fn find_ntt_primes(count: usize, bitwidth: u32, n: usize) -> Result<Vec<Modulus>> {
    let primes: Vec<u32> = NttPrimes::descending(bitwidth, n)?.take(count).collect();
    if primes.len() < count {
        return Err(Error::InsufficientPrimes {
            requested: count,
            found: primes.len(),
            bitwidth,
            two_n: 2 * n as u64,
        });
    }
    primes.into_iter().map(|q| Modulus::new(q, n)).collect()
}
