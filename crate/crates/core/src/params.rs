//! CKKS parameter sets and their TOML config format.
//!
//! ```toml
//! name = "verify-n4096"
//! n = 4096
//! l = 12
//! dnum = 3
//! alpha = 4
//! log_delta = 40
//! log_pq = 496
//! hd = 2048
//! hs = 32
//! noise_sigma = 3.2
//! q_basis = [2147377153, ...]   # l primes, each = 1 mod 2n
//! p_basis = [2147352577, ...]   # alpha primes
//! ```

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::arith::Modulus;
use crate::error::{Error, Result};

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
struct RawParams {
    #[serde(default)]
    name: String,
    n: usize,
    l: usize,
    dnum: usize,
    alpha: usize,
    log_delta: u32,
    log_pq: u32,
    hd: usize,
    hs: usize,
    #[serde(default = "default_sigma")]
    noise_sigma: f64,
    q_basis: Vec<u32>,
    p_basis: Vec<u32>,
}

fn default_sigma() -> f64 {
    3.2
}

#[derive(Clone, Debug, PartialEq)]
pub struct ParameterSet {
    pub name: String,
    pub n: usize,
    /// Maximum limb count.
    pub l: usize,
    pub dnum: usize,
    /// Limbs per decomposition digit.
    pub alpha: usize,
    /// Active digit count at full level, `ceil(l / alpha)`.
    pub beta: usize,
    pub log_delta: u32,
    pub log_pq: u32,
    pub hd: usize,
    pub hs: usize,
    pub noise_sigma: f64,
    pub q_basis: Vec<Modulus>,
    pub p_basis: Vec<Modulus>,
}

impl ParameterSet {
    /// Builds and validates a parameter set from explicit moduli.
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        name: &str,
        n: usize,
        dnum: usize,
        alpha: usize,
        log_delta: u32,
        hd: usize,
        hs: usize,
        q_basis: &[u32],
        p_basis: &[u32],
    ) -> Result<Self> {
        let log_pq = q_basis.iter().chain(p_basis).map(|&q| 32 - q.leading_zeros()).sum();
        Self::from_raw(RawParams {
            name: name.to_string(),
            n,
            l: q_basis.len(),
            dnum,
            alpha,
            log_delta,
            log_pq,
            hd,
            hs,
            noise_sigma: default_sigma(),
            q_basis: q_basis.to_vec(),
            p_basis: p_basis.to_vec(),
        })
    }

    /// Draws `l + alpha` fresh `bitwidth`-bit NTT primes for degree `n`:
    /// the largest `alpha` go to `P`, the next `l` to `Q`.
    #[allow(clippy::too_many_arguments)]
    pub fn generate(
        name: &str,
        n: usize,
        l: usize,
        alpha: usize,
        bitwidth: u32,
        log_delta: u32,
        hd: usize,
        hs: usize,
    ) -> Result<Self> {
        let primes: Vec<u32> = crate::arith::find_ntt_primes(l + alpha, bitwidth, n)?
            .iter()
            .map(|m| m.value())
            .collect();
        let dnum = l.div_ceil(alpha.max(1));
        Self::new(name, n, dnum, alpha, log_delta, hd, hs, &primes[alpha..], &primes[..alpha])
    }

    fn from_raw(raw: RawParams) -> Result<Self> {
        let bad = |msg: String| Err(Error::Config(msg));
        if !raw.n.is_power_of_two() || raw.n < 2 {
            return bad(format!("n = {} is not a power of two", raw.n));
        }
        if raw.alpha == 0 || raw.dnum == 0 {
            return bad("alpha and dnum must be positive".into());
        }
        if raw.q_basis.len() != raw.l {
            return bad(format!("q_basis has {} moduli, l = {}", raw.q_basis.len(), raw.l));
        }
        if raw.p_basis.len() != raw.alpha {
            return bad(format!("p_basis has {} moduli, alpha = {}", raw.p_basis.len(), raw.alpha));
        }
        if raw.l > raw.dnum * raw.alpha {
            return bad(format!("l = {} exceeds dnum * alpha = {}", raw.l, raw.dnum * raw.alpha));
        }
        if raw.hd > raw.n || raw.hs > raw.n {
            return bad("Hamming weight exceeds ring degree".into());
        }
        if !(raw.noise_sigma > 0.0) {
            return bad("noise_sigma must be positive".into());
        }
        let mut seen = std::collections::HashSet::new();
        for &q in raw.q_basis.iter().chain(&raw.p_basis) {
            if !seen.insert(q) {
                return bad(format!("modulus {q} listed twice"));
            }
        }
        let bits: u32 = raw
            .q_basis
            .iter()
            .chain(&raw.p_basis)
            .map(|&q| 32 - q.leading_zeros())
            .sum();
        if bits > raw.log_pq {
            return bad(format!("moduli total {bits} bits > log_pq = {}", raw.log_pq));
        }
        let build = |v: &[u32]| {
            v.iter()
                .map(|&q| Modulus::new(q, raw.n))
                .collect::<Result<Vec<_>>>()
                .map_err(|e| Error::Config(e.to_string()))
        };
        Ok(ParameterSet {
            beta: raw.l.div_ceil(raw.alpha),
            q_basis: build(&raw.q_basis)?,
            p_basis: build(&raw.p_basis)?,
            name: raw.name,
            n: raw.n,
            l: raw.l,
            dnum: raw.dnum,
            alpha: raw.alpha,
            log_delta: raw.log_delta,
            log_pq: raw.log_pq,
            hd: raw.hd,
            hs: raw.hs,
            noise_sigma: raw.noise_sigma,
        })
    }

    /// Active digits at `l_cur` limbs.
    pub fn beta_at(&self, l_cur: usize) -> usize {
        l_cur.div_ceil(self.alpha)
    }

    pub fn delta(&self) -> f64 {
        (self.log_delta as f64).exp2()
    }

    /// `q_basis ++ p_basis`.
    pub fn extended_basis(&self) -> Vec<Modulus> {
        let mut b = self.q_basis.clone();
        b.extend_from_slice(&self.p_basis);
        b
    }

    fn to_raw(&self) -> RawParams {
        RawParams {
            name: self.name.clone(),
            n: self.n,
            l: self.l,
            dnum: self.dnum,
            alpha: self.alpha,
            log_delta: self.log_delta,
            log_pq: self.log_pq,
            hd: self.hd,
            hs: self.hs,
            noise_sigma: self.noise_sigma,
            q_basis: self.q_basis.iter().map(|m| m.value()).collect(),
            p_basis: self.p_basis.iter().map(|m| m.value()).collect(),
        }
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(&self.to_raw()).expect("parameter set serializes")
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        let raw: RawParams = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        Self::from_raw(raw)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let text = std::fs::read_to_string(path.as_ref())?;
        Self::from_toml(&text)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_toml())?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::arith::find_ntt_primes;

    fn sample() -> ParameterSet {
        let ps: Vec<u32> = find_ntt_primes(6, 31, 64).unwrap().iter().map(|m| m.value()).collect();
        ParameterSet::new("t", 64, 2, 2, 20, 32, 8, &ps[2..], &ps[..2]).unwrap()
    }

    #[test]
    fn toml_round_trip() {
        let p = sample();
        let back = ParameterSet::from_toml(&p.to_toml()).unwrap();
        assert_eq!(p, back);
        assert_eq!(back.beta, 2);
    }

    #[test]
    fn rejects_inconsistent_configs() {
        let p = sample();
        let text = p.to_toml().replace("alpha = 2", "alpha = 3");
        assert!(ParameterSet::from_toml(&text).is_err());
        let text = p.to_toml().replace("log_pq = 186", "log_pq = 100");
        assert!(ParameterSet::from_toml(&text).is_err());
        assert!(ParameterSet::from_toml("n = 3").is_err());
    }

    #[test]
    fn partial_last_digit() {
        let p = sample();
        assert_eq!(p.beta_at(3), 2);
        assert_eq!(p.beta_at(2), 1);
    }
}
