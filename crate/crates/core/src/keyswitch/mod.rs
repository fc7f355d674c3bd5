//! Hybrid (digit-decomposed) key-switching with a minimal symmetric CKKS
//! harness around it.
//!
//! Key-switching runs in three stages, each usable on its own:
//!
//! 1. ModUp: every `alpha`-limb digit of the input is brought to coefficient
//!    form, base-converted to all remaining limbs of `Q_cur ++ P` and
//!    transformed back. Output shape `(beta, L + alpha)`.
//! 2. Inner product with the switching key. Output shapes `(2, L)` and
//!    `(2, alpha)`; the `(2, alpha)` half can be produced first.
//! 3. ModDown of both accumulators: the `P` limbs are converted to `Q_cur`,
//!    subtracted, and the difference scaled by `P^-1`.

mod keys;
mod pipeline;

pub use keys::{Ciphertext, SecretKey, SwitchingKey};
pub use pipeline::{Accumulators, KeySwitcher, PipelineEvent, RaisedDigits};

use rand::Rng;
use rand_distr::{Distribution, Normal};

use crate::arith::Modulus;
use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::ntt::NttContext;
use crate::params::ParameterSet;
use crate::poly::{Domain, Polynomial};

/// Parameters plus transform tables for the whole `Q ++ P` basis.
#[derive(Clone, Debug)]
pub struct CkksContext {
    params: ParameterSet,
    ntt: NttContext,
    exec: Exec,
}

impl CkksContext {
    pub fn new(params: ParameterSet) -> Result<Self> {
        let ntt = NttContext::new(&params.extended_basis())?;
        Ok(CkksContext {
            params,
            ntt,
            exec: Exec::default(),
        })
    }

    pub fn with_exec(mut self, exec: Exec) -> Self {
        self.exec = exec;
        self
    }

    pub fn params(&self) -> &ParameterSet {
        &self.params
    }

    pub fn ntt(&self) -> &NttContext {
        &self.ntt
    }

    /// Mutable tables, for fault-injection runs.
    pub fn ntt_mut(&mut self) -> &mut NttContext {
        &mut self.ntt
    }

    pub fn exec(&self) -> Exec {
        self.exec
    }

    pub fn n(&self) -> usize {
        self.params.n
    }

    /// Key-switcher for ciphertexts with `l_cur` limbs.
    pub fn key_switcher(&self, l_cur: usize) -> Result<KeySwitcher<'_>> {
        KeySwitcher::new(self, l_cur)
    }

    pub fn keygen<R: Rng>(&self, h: usize, rng: &mut R) -> Result<SecretKey> {
        SecretKey::generate(self.params.n, h, rng)
    }

    pub(crate) fn to_eval(&self, mut p: Polynomial) -> Result<Polynomial> {
        self.ntt.transform(&mut p, crate::ntt::Direction::Forward, self.exec)?;
        Ok(p)
    }

    pub(crate) fn to_coeff(&self, mut p: Polynomial) -> Result<Polynomial> {
        self.ntt.transform(&mut p, crate::ntt::Direction::Inverse, self.exec)?;
        Ok(p)
    }

    /// Largest coefficient magnitude [`decrypt`] can recover: a quarter of
    /// `Q_0 * Q_1`, leaving the rest for noise.
    ///
    /// [`decrypt`]: CkksContext::decrypt
    pub fn message_budget(&self) -> i128 {
        self.message_budget_at(self.params.l)
    }

    /// [`message_budget`](Self::message_budget) for a ciphertext with
    /// `l_cur` limbs.
    pub fn message_budget_at(&self, l_cur: usize) -> i128 {
        let q = &self.params.q_basis[..l_cur.min(self.params.l)];
        match q.len() {
            0 => 0,
            1 => q[0].value() as i128 / 4,
            _ => q[0].value() as i128 * q[1].value() as i128 / 4,
        }
    }

    /// Symmetric encryption of integer coefficients (already scaled by the
    /// caller) at full level: `b = m + e - a*s`.
    pub fn encrypt<R: Rng>(&self, msg: &[i64], sk: &SecretKey, rng: &mut R) -> Result<Ciphertext> {
        self.encrypt_at(msg, sk, self.params.l, rng)
    }

    pub fn encrypt_at<R: Rng>(&self, msg: &[i64], sk: &SecretKey, l_cur: usize, rng: &mut R) -> Result<Ciphertext> {
        let n = self.params.n;
        if msg.len() != n {
            return Err(Error::Mismatch(format!("message length {} vs N = {n}", msg.len())));
        }
        if l_cur == 0 || l_cur > self.params.l {
            return Err(Error::InvalidArgument(format!("level {l_cur} outside 1..={}", self.params.l)));
        }
        let budget = self.message_budget_at(l_cur);
        if let Some(&v) = msg.iter().find(|&&v| (v as i128).abs() > budget) {
            return Err(Error::MessageOverflow { value: v, budget });
        }
        let basis = &self.params.q_basis[..l_cur];
        let a = uniform(basis, n, Domain::Evaluation, rng);
        let e = self.to_eval(gaussian(basis, n, self.params.noise_sigma, rng))?;
        let m = self.to_eval(Polynomial::from_signed(basis, msg))?;
        let s = self.to_eval(sk.to_poly(basis))?;
        let b = m.add(&e)?.sub(&a.mul(&s)?)?;
        Ok(Ciphertext {
            a,
            b,
            log_scale: self.params.log_delta,
        })
    }

    /// `b + a*s`, lifted to centered integers from the first two limbs.
    pub fn decrypt(&self, ct: &Ciphertext, sk: &SecretKey) -> Result<Vec<i64>> {
        let basis = ct.b.basis().to_vec();
        let s = self.to_eval(sk.to_poly(&basis))?;
        let x = self.to_coeff(ct.b.add(&ct.a.mul(&s)?)?)?;
        Ok(crt_two_limbs(&x))
    }

    /// Gadget encryption of `s_from` under `s_to` over the full `Q ++ P`
    /// basis, one `(b_j, a_j)` pair per decomposition digit.
    pub fn switching_keygen<R: Rng>(&self, s_from: &SecretKey, s_to: &SecretKey, rng: &mut R) -> Result<SwitchingKey> {
        let p = &self.params;
        let ext = p.extended_basis();
        let n = p.n;
        let s_to_eval = self.to_eval(s_to.to_poly(&ext))?;
        let s_from_eval = self.to_eval(s_from.to_poly(&ext))?;
        // P mod q_i for each Q limb
        let p_mod_q: Vec<u32> = p
            .q_basis
            .iter()
            .map(|q| {
                p.p_basis
                    .iter()
                    .fold(1u32, |acc, pm| q.mul(acc, pm.value() % q.value()))
            })
            .collect();
        let mut pairs = Vec::with_capacity(p.dnum);
        for j in 0..p.dnum {
            let a = uniform(&ext, n, Domain::Evaluation, rng);
            let e = self.to_eval(gaussian(&ext, n, p.noise_sigma, rng))?;
            let mut gadget = vec![0u32; ext.len()];
            for i in (j * p.alpha)..((j + 1) * p.alpha).min(p.l) {
                gadget[i] = p_mod_q[i];
            }
            let mut g_s = s_from_eval.clone();
            g_s.mul_row_scalars(&gadget);
            let b = e.sub(&a.mul(&s_to_eval)?)?.add(&g_s)?;
            pairs.push((b, a));
        }
        Ok(SwitchingKey::new(pairs, p.l, p.alpha))
    }
}

pub fn uniform<R: Rng>(basis: &[Modulus], n: usize, domain: Domain, rng: &mut R) -> Polynomial {
    let mut data = Vec::with_capacity(basis.len() * n);
    for m in basis {
        data.extend((0..n).map(|_| rng.gen_range(0..m.value())));
    }
    Polynomial::from_data(basis, n, domain, data).expect("sampled residues are in range")
}

/// Rounded Gaussian coefficients, identical across limbs.
pub fn gaussian<R: Rng>(basis: &[Modulus], n: usize, sigma: f64, rng: &mut R) -> Polynomial {
    let dist = Normal::new(0.0, sigma).expect("positive sigma");
    let coeffs: Vec<i64> = (0..n).map(|_| dist.sample(rng).round() as i64).collect();
    Polynomial::from_signed(basis, &coeffs)
}

/// Centered CRT lift from limbs 0 and 1 (or limb 0 alone).
fn crt_two_limbs(x: &Polynomial) -> Vec<i64> {
    let b = x.basis();
    if b.len() == 1 {
        return x.row(0).iter().map(|&v| b[0].center(v)).collect();
    }
    let (q0, q1) = (b[0], b[1]);
    let q0_inv = q1.inv(q0.value() % q1.value());
    let modulus = q0.value() as u128 * q1.value() as u128;
    x.row(0)
        .iter()
        .zip(x.row(1))
        .map(|(&r0, &r1)| {
            let k = q1.mul(q1.sub(r1, r0 % q1.value()), q0_inv);
            let v = r0 as u128 + q0.value() as u128 * k as u128;
            if v > modulus / 2 {
                (v as i128 - modulus as i128) as i64
            } else {
                v as i64
            }
        })
        .collect()
}

/// Rounds `values * 2^log_delta` to integers.
pub fn encode_scaled(values: &[f64], log_delta: u32) -> Vec<i64> {
    let delta = (log_delta as f64).exp2();
    values.iter().map(|v| (v * delta).round() as i64).collect()
}

pub fn decode_scaled(coeffs: &[i64], log_delta: u32) -> Vec<f64> {
    let delta = (log_delta as f64).exp2();
    coeffs.iter().map(|&c| c as f64 / delta).collect()
}
