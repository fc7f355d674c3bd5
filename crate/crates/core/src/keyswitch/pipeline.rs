use std::ops::Range;

use super::{Ciphertext, CkksContext, SwitchingKey};
use crate::arith::Modulus;
use crate::bconv::{convert, BConvTable};
use crate::error::{Error, Result};
use crate::exec::{self, Exec};
use crate::ntt::Direction;
use crate::poly::{same_basis, Domain, Polynomial};

/// Stage-1 output: `beta` polynomials over `Q_cur ++ P`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RaisedDigits {
    pub digits: Vec<Polynomial>,
}

impl RaisedDigits {
    pub fn shape(&self) -> (usize, usize) {
        (self.digits.len(), self.digits.first().map_or(0, |d| d.limbs()))
    }
}

/// Stage-2 output. Index 0 pairs with the key's `b_j`, index 1 with `a_j`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Accumulators {
    /// `(2, L)`
    pub q_part: [Polynomial; 2],
    /// `(2, alpha)`
    pub p_part: [Polynomial; 2],
}

/// Steps of [`KeySwitcher::keyswitch_pipelined`], in emission order.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PipelineEvent {
    ModUp,
    InnerProductP,
    ModDownConvert,
    InnerProductQ,
    ModDownFinish,
}

/// Precomputed tables for switching ciphertexts with `l_cur` limbs.
#[derive(Clone, Debug)]
pub struct KeySwitcher<'a> {
    ctx: &'a CkksContext,
    l_cur: usize,
    digits: Vec<Range<usize>>,
    /// `Q_cur ++ P`
    ext: Vec<Modulus>,
    modup: Vec<BConvTable>,
    moddown: BConvTable,
    p_inv: Vec<u32>,
    stage1_batch: usize,
    stage3_batch: usize,
}

impl<'a> KeySwitcher<'a> {
    pub fn new(ctx: &'a CkksContext, l_cur: usize) -> Result<Self> {
        let params = ctx.params();
        if l_cur == 0 || l_cur > params.l {
            return Err(Error::InvalidArgument(format!("level {l_cur} outside 1..={}", params.l)));
        }
        let q_cur = &params.q_basis[..l_cur];
        let p = &params.p_basis;
        let mut ext = q_cur.to_vec();
        ext.extend_from_slice(p);

        let digits: Vec<Range<usize>> = (0..params.beta_at(l_cur))
            .map(|j| j * params.alpha..((j + 1) * params.alpha).min(l_cur))
            .collect();
        let modup = digits
            .iter()
            .map(|r| {
                let complement: Vec<Modulus> = ext
                    .iter()
                    .enumerate()
                    .filter(|(i, _)| !r.contains(i))
                    .map(|(_, m)| *m)
                    .collect();
                BConvTable::new(&ext[r.clone()], &complement)
            })
            .collect::<Result<Vec<_>>>()?;
        let moddown = BConvTable::new(p, q_cur)?;
        let p_inv = q_cur
            .iter()
            .map(|q| {
                let pm = p.iter().fold(1u32, |acc, m| q.mul(acc, m.value() % q.value()));
                q.inv(pm)
            })
            .collect();
        Ok(KeySwitcher {
            ctx,
            l_cur,
            stage1_batch: digits.len(),
            stage3_batch: 2,
            digits,
            ext,
            modup,
            moddown,
            p_inv,
        })
    }

    /// Number of digit sequences (stage 1) and polynomials (stage 3) run
    /// as one batched unit. Defaults are `beta` and 2.
    pub fn with_batches(mut self, stage1: usize, stage3: usize) -> Self {
        self.stage1_batch = stage1.max(1);
        self.stage3_batch = stage3.clamp(1, 2);
        self
    }

    pub fn beta(&self) -> usize {
        self.digits.len()
    }

    pub fn digit_ranges(&self) -> &[Range<usize>] {
        &self.digits
    }

    pub fn modup_tables(&self) -> &[BConvTable] {
        &self.modup
    }

    pub fn moddown_table(&self) -> &BConvTable {
        &self.moddown
    }

    /// `Q_cur ++ P`.
    pub fn extended_basis(&self) -> &[Modulus] {
        &self.ext
    }

    fn exec(&self) -> Exec {
        self.ctx.exec()
    }

    fn transform(&self, mut p: Polynomial, dir: Direction) -> Result<Polynomial> {
        self.ctx.ntt().transform(&mut p, dir, self.exec())?;
        Ok(p)
    }

    /// Runs `f` over `0..len` in groups of `batch`; elements of a group run
    /// together, groups run one after another.
    fn batched<R: Send>(&self, len: usize, batch: usize, f: impl Fn(usize) -> Result<R> + Sync + Send) -> Result<Vec<R>> {
        let mut out = Vec::with_capacity(len);
        let mut start = 0;
        while start < len {
            let end = (start + batch).min(len);
            let group = exec::map_indices(self.exec(), end - start, |k| f(start + k));
            for r in group {
                out.push(r?);
            }
            start = end;
        }
        Ok(out)
    }

    fn raise_digit(&self, d: &Polynomial, j: usize) -> Result<Polynomial> {
        let range = self.digits[j].clone();
        let digit = self.transform(d.limb_range(range.clone()), Direction::Inverse)?;
        let converted = self.transform(convert(&digit, &self.modup[j], self.exec())?, Direction::Forward)?;
        let n = d.n();
        let mut raised = Polynomial::zero(&self.ext, n, Domain::Evaluation);
        let mut c = 0;
        for i in 0..self.ext.len() {
            if range.contains(&i) {
                raised.row_mut(i).copy_from_slice(d.row(i));
            } else {
                raised.row_mut(i).copy_from_slice(converted.row(c));
                c += 1;
            }
        }
        Ok(raised)
    }

    /// Stage 1: ModUp of every digit of `d` (evaluation domain, `Q_cur`).
    pub fn stage1(&self, d: &Polynomial) -> Result<RaisedDigits> {
        if d.domain() != Domain::Evaluation || !same_basis(d.basis(), &self.ext[..self.l_cur]) {
            return Err(Error::Mismatch("stage 1 expects an evaluation-domain polynomial over Q_cur".into()));
        }
        let digits = self.batched(self.digits.len(), self.stage1_batch, |j| self.raise_digit(d, j))?;
        Ok(RaisedDigits { digits })
    }

    /// Key rows for `Q_cur ++ P` out of the full `Q ++ P` key polynomial.
    fn key_rows(&self, key: &Polynomial, rows: Range<usize>) -> Vec<usize> {
        let l_full = key.limbs() - (self.ext.len() - self.l_cur);
        rows.map(|r| if r < self.l_cur { r } else { l_full + (r - self.l_cur) }).collect()
    }

    fn inner_product(&self, raised: &RaisedDigits, evk: &SwitchingKey, rows: Range<usize>) -> Result<[Polynomial; 2]> {
        if raised.digits.len() != self.digits.len() || evk.dnum() < self.digits.len() {
            return Err(Error::Mismatch(format!(
                "{} raised digits, {} key pairs, {} digits expected",
                raised.digits.len(),
                evk.dnum(),
                self.digits.len()
            )));
        }
        if evk.max_limbs() < self.l_cur || evk.alpha() != self.ext.len() - self.l_cur {
            return Err(Error::Mismatch("switching key built for a different basis".into()));
        }
        let basis = &self.ext[rows.clone()];
        let n = raised.digits[0].n();
        let key_rows = self.key_rows(&evk.pairs()[0].0, rows.clone());
        let mut out = [
            Polynomial::zero(basis, n, Domain::Evaluation),
            Polynomial::zero(basis, n, Domain::Evaluation),
        ];
        for (half, acc) in out.iter_mut().enumerate() {
            exec::for_each_chunk_mut(self.exec(), acc.data_mut(), n, |r, row| {
                let m = &basis[r];
                let src_row = rows.start + r;
                for (digit, pair) in raised.digits.iter().zip(evk.pairs()) {
                    let key = if half == 0 { &pair.0 } else { &pair.1 };
                    let x = digit.row(src_row);
                    let k = key.row(key_rows[r]);
                    for ((o, &xv), &kv) in row.iter_mut().zip(x).zip(k) {
                        *o = m.add(*o, m.mul(xv, kv));
                    }
                }
            });
        }
        Ok(out)
    }

    /// Stage 2, `(2, alpha)` half.
    pub fn stage2_p_part(&self, raised: &RaisedDigits, evk: &SwitchingKey) -> Result<[Polynomial; 2]> {
        self.inner_product(raised, evk, self.l_cur..self.ext.len())
    }

    /// Stage 2, `(2, L)` half.
    pub fn stage2_q_part(&self, raised: &RaisedDigits, evk: &SwitchingKey) -> Result<[Polynomial; 2]> {
        self.inner_product(raised, evk, 0..self.l_cur)
    }

    /// Stage 2: element-wise multiply-accumulate against the key.
    pub fn stage2(&self, raised: &RaisedDigits, evk: &SwitchingKey) -> Result<Accumulators> {
        let p_part = self.stage2_p_part(raised, evk)?;
        let q_part = self.stage2_q_part(raised, evk)?;
        Ok(Accumulators { q_part, p_part })
    }

    /// Split stage 2: emits the `(2, alpha)` half first, then the `(2, L)`
    /// half. Bit-identical to [`stage2`](Self::stage2).
    pub fn stage2_split(&self, raised: &RaisedDigits, evk: &SwitchingKey) -> Result<([Polynomial; 2], [Polynomial; 2])> {
        let p_part = self.stage2_p_part(raised, evk)?;
        let q_part = self.stage2_q_part(raised, evk)?;
        Ok((p_part, q_part))
    }

    /// ModDown front half: `P` limbs to coefficient form, converted to
    /// `Q_cur`, back to evaluation form. Needs only the `(2, alpha)` data.
    pub fn moddown_convert(&self, p_part: &[Polynomial; 2]) -> Result<[Polynomial; 2]> {
        let out = self.batched(2, self.stage3_batch, |i| {
            let coeff = self.transform(p_part[i].clone(), Direction::Inverse)?;
            self.transform(convert(&coeff, &self.moddown, self.exec())?, Direction::Forward)
        })?;
        let [a, b]: [Polynomial; 2] = out.try_into().expect("two polynomials");
        Ok([a, b])
    }

    /// ModDown back half: `(q_part - converted) * P^-1`.
    pub fn moddown_finish(&self, q_part: &[Polynomial; 2], converted: &[Polynomial; 2]) -> Result<[Polynomial; 2]> {
        let out = self.batched(2, self.stage3_batch, |i| {
            let mut d = q_part[i].sub(&converted[i])?;
            d.mul_row_scalars(&self.p_inv);
            Ok(d)
        })?;
        let [a, b]: [Polynomial; 2] = out.try_into().expect("two polynomials");
        Ok([a, b])
    }

    /// Stage 3: ModDown of both accumulators to `Q_cur`.
    pub fn stage3(&self, acc: &Accumulators) -> Result<[Polynomial; 2]> {
        let converted = self.moddown_convert(&acc.p_part)?;
        self.moddown_finish(&acc.q_part, &converted)
    }

    fn finish(&self, ct: &Ciphertext, delta: [Polynomial; 2]) -> Result<Ciphertext> {
        let [c0, c1] = delta;
        Ok(Ciphertext {
            b: ct.b.add(&c0)?,
            a: c1,
            log_scale: ct.log_scale,
        })
    }

    fn check_ct(&self, ct: &Ciphertext) -> Result<()> {
        if ct.limbs() != self.l_cur {
            return Err(Error::Mismatch(format!(
                "ciphertext has {} limbs, switcher built for {}",
                ct.limbs(),
                self.l_cur
            )));
        }
        Ok(())
    }

    /// Re-encrypts `ct` (decryptable under the key's source secret) under its
    /// target secret.
    pub fn keyswitch(&self, ct: &Ciphertext, evk: &SwitchingKey) -> Result<Ciphertext> {
        self.check_ct(ct)?;
        let raised = self.stage1(&ct.a)?;
        let acc = self.stage2(&raised, evk)?;
        let delta = self.stage3(&acc)?;
        self.finish(ct, delta)
    }

    /// Same result as [`keyswitch`](Self::keyswitch) with stage 2 split so
    /// the ModDown conversion starts as soon as the `(2, alpha)` half exists.
    pub fn keyswitch_pipelined(&self, ct: &Ciphertext, evk: &SwitchingKey, trace: &mut Vec<PipelineEvent>) -> Result<Ciphertext> {
        self.check_ct(ct)?;
        let raised = self.stage1(&ct.a)?;
        trace.push(PipelineEvent::ModUp);
        let p_part = self.stage2_p_part(&raised, evk)?;
        trace.push(PipelineEvent::InnerProductP);
        let converted = self.moddown_convert(&p_part)?;
        trace.push(PipelineEvent::ModDownConvert);
        let q_part = self.stage2_q_part(&raised, evk)?;
        trace.push(PipelineEvent::InnerProductQ);
        let delta = self.moddown_finish(&q_part, &converted)?;
        trace.push(PipelineEvent::ModDownFinish);
        self.finish(ct, delta)
    }

    /// Independent key-switches over a batch of ciphertexts.
    pub fn keyswitch_many(&self, cts: &[Ciphertext], evk: &SwitchingKey) -> Result<Vec<Ciphertext>> {
        exec::map_indices(self.exec(), cts.len(), |i| self.keyswitch(&cts[i], evk))
            .into_iter()
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use rand::SeedableRng;
    use rand_chacha::ChaCha20Rng;

    use super::*;
    use crate::params::ParameterSet;

    fn ctx() -> CkksContext {
        let p = ParameterSet::generate("t", 64, 5, 2, 31, 20, 16, 8).unwrap();
        CkksContext::new(p).unwrap()
    }

    #[test]
    fn switches_secret_and_keeps_message() {
        let ctx = ctx();
        let mut rng = ChaCha20Rng::seed_from_u64(1);
        let s_from = ctx.keygen(16, &mut rng).unwrap();
        let s_to = ctx.keygen(8, &mut rng).unwrap();
        let evk = ctx.switching_keygen(&s_from, &s_to, &mut rng).unwrap();
        let msg: Vec<i64> = (0..64).map(|i| (i as i64 - 32) << 20).collect();
        for l_cur in [5, 3, 2] {
            let ct = ctx.encrypt_at(&msg, &s_from, l_cur, &mut rng).unwrap();
            let ks = ctx.key_switcher(l_cur).unwrap();
            let out = ks.keyswitch(&ct, &evk).unwrap();
            let dec = ctx.decrypt(&out, &s_to).unwrap();
            for (d, m) in dec.iter().zip(&msg) {
                assert!((d - m).abs() < 1 << 12, "level {l_cur}: {d} vs {m}");
            }
        }
    }

    #[test]
    fn pipelined_order_and_equality() {
        let ctx = ctx();
        let mut rng = ChaCha20Rng::seed_from_u64(2);
        let s = ctx.keygen(16, &mut rng).unwrap();
        let t = ctx.keygen(16, &mut rng).unwrap();
        let evk = ctx.switching_keygen(&s, &t, &mut rng).unwrap();
        let ct = ctx.encrypt(&vec![7; 64], &s, &mut rng).unwrap();
        let ks = ctx.key_switcher(5).unwrap();
        let mut trace = Vec::new();
        let a = ks.keyswitch_pipelined(&ct, &evk, &mut trace).unwrap();
        assert_eq!(a, ks.keyswitch(&ct, &evk).unwrap());
        let pos = |e| trace.iter().position(|&x| x == e).unwrap();
        assert!(pos(PipelineEvent::ModDownConvert) < pos(PipelineEvent::InnerProductQ));
    }

    #[test]
    fn rejects_wrong_level() {
        let ctx = ctx();
        let mut rng = ChaCha20Rng::seed_from_u64(3);
        let s = ctx.keygen(16, &mut rng).unwrap();
        let evk = ctx.switching_keygen(&s, &s, &mut rng).unwrap();
        let ct = ctx.encrypt_at(&vec![0; 64], &s, 3, &mut rng).unwrap();
        assert!(ctx.key_switcher(5).unwrap().keyswitch(&ct, &evk).is_err());
        assert!(ctx.key_switcher(0).is_err());
    }
}
