//! Oracle suites behind `hemem verify`.

use std::path::Path;

use anyhow::{anyhow, Result};
use hemem_core::bconv::{convert, BConvStats};
use hemem_core::dump::write_polynomial;
use hemem_core::keyswitch::{decode_scaled, encode_scaled, uniform};
use hemem_core::ntt::TwoPhaseConfig;
use hemem_core::{
    bconv_with_intermediate_reduction, oracle, search_overflow_free_moduli, BConvTable, CkksContext, Direction, Domain,
    Exec, Polynomial,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use serde::Serialize;

#[derive(Clone, Debug, Serialize)]
pub struct SuiteReport {
    pub suite: String,
    pub passed: bool,
    pub checks: u64,
    pub failures: u64,
    /// `(name, value)` statistics in a fixed order.
    pub stats: Vec<(String, f64)>,
    pub notes: Vec<String>,
}

impl SuiteReport {
    fn new(suite: &str) -> Self {
        SuiteReport {
            suite: suite.to_string(),
            passed: true,
            checks: 0,
            failures: 0,
            stats: Vec::new(),
            notes: Vec::new(),
        }
    }

    fn check(&mut self, ok: bool, what: impl FnOnce() -> String) {
        self.checks += 1;
        if !ok {
            self.failures += 1;
            self.passed = false;
            if self.notes.len() < 8 {
                self.notes.push(what());
            }
        }
    }

    fn stat(&mut self, name: &str, v: f64) {
        self.stats.push((name.to_string(), v));
    }
}

#[derive(Clone, Debug)]
pub struct VerifyOptions {
    pub seed: u64,
    /// Limbs checked against the quadratic-time product oracle.
    pub oracle_limbs: usize,
    /// Columns per BConv table checked against the wide-integer oracle.
    pub bconv_columns: usize,
    pub keyswitch_trials: u64,
}

fn column(p: &Polynomial, c: usize) -> Vec<u32> {
    (0..p.limbs()).map(|i| p.row(i)[c]).collect()
}

fn random_coeff(basis: &[hemem_core::Modulus], n: usize, rng: &mut ChaCha20Rng) -> Polynomial {
    uniform(basis, n, Domain::Coefficient, rng)
}

pub fn ntt_suite(ctx: &CkksContext, opts: &VerifyOptions) -> Result<SuiteReport> {
    let mut rep = SuiteReport::new("ntt");
    let mut rng = ChaCha20Rng::seed_from_u64(opts.seed ^ 0x4e54);
    let basis = ctx.params().extended_basis();
    let n = ctx.n();
    let ntt = ctx.ntt();

    // round trip and two-phase agreement on every limb
    let a = random_coeff(&basis, n, &mut rng);
    let mut f = a.clone();
    ntt.transform(&mut f, Direction::Forward, ctx.exec())?;
    let mut g = a.clone();
    ntt.transform_two_phase(&mut g, Direction::Forward, TwoPhaseConfig::default(), ctx.exec())?;
    let mut back = f.clone();
    ntt.transform(&mut back, Direction::Inverse, ctx.exec())?;
    let mut bad_rt = 0u64;
    let mut bad_2p = 0u64;
    for i in 0..basis.len() {
        let rt = back.row(i).iter().zip(a.row(i)).filter(|(x, y)| x != y).count() as u64;
        let tp = g.row(i).iter().zip(f.row(i)).filter(|(x, y)| x != y).count() as u64;
        bad_rt += rt;
        bad_2p += tp;
        rep.check(rt == 0, || format!("round trip differs on limb {i} ({rt} coefficients)"));
        rep.check(tp == 0, || format!("two-phase differs on limb {i} ({tp} coefficients)"));
    }
    rep.stat("round_trip_mismatches", bad_rt as f64);
    rep.stat("two_phase_mismatches", bad_2p as f64);

    // convolution theorem against the schoolbook product
    let limbs = opts.oracle_limbs.min(basis.len()).max(1);
    let sub = &basis[..limbs];
    let x = random_coeff(sub, n, &mut rng);
    let y = random_coeff(sub, n, &mut rng);
    let mut xf = x.clone();
    let mut yf = y.clone();
    ntt.transform(&mut xf, Direction::Forward, ctx.exec())?;
    ntt.transform(&mut yf, Direction::Forward, ctx.exec())?;
    let mut z = xf.mul(&yf)?;
    ntt.transform(&mut z, Direction::Inverse, ctx.exec())?;
    let mut bad_conv = 0u64;
    for (i, m) in sub.iter().enumerate() {
        let want = oracle::negacyclic_product(x.row(i), y.row(i), m.value());
        let bad = z.row(i).iter().zip(&want).filter(|(p, q)| p != q).count() as u64;
        bad_conv += bad;
        rep.check(bad == 0, || format!("convolution differs on limb {i} ({bad} coefficients)"));
    }
    rep.stat("convolution_limbs", limbs as f64);
    rep.stat("convolution_mismatches", bad_conv as f64);
    Ok(rep)
}

fn check_table(rep: &mut SuiteReport, label: &str, table: &BConvTable, n: usize, columns: usize, rng: &mut ChaCha20Rng, max_e: &mut u64) -> Result<()> {
    let q = table.q_basis();
    let p = table.p_basis();
    let a = uniform(q, n, Domain::Coefficient, rng);
    let got = convert(&a, table, Exec::default())?;
    if table.overflow_free() {
        let slow = bconv_with_intermediate_reduction(&a, table)?;
        rep.check(slow == got, || format!("{label}: deferred and intermediate reduction differ"));
        for (i, m) in p.iter().enumerate() {
            let exact = oracle::overflow_row_sum(q, m);
            rep.check(exact < oracle::two_pow_64(), || format!("{label}: certificate fails for output {i}"));
        }
    }
    let q_star = oracle::modulus_product(q);
    let step = (n / columns.max(1)).max(1);
    for c in (0..n).step_by(step) {
        let col = column(&a, c);
        let (want, sum) = oracle::fast_bconv_column(&col, q, p);
        rep.check(column(&got, c) == want, || format!("{label}: column {c} differs from oracle"));
        let x = oracle::crt_reconstruct(&col, q);
        let e: u64 = ((&sum - &x) / &q_star).try_into().unwrap_or(u64::MAX);
        *max_e = (*max_e).max(e);
        rep.check((e as usize) < q.len(), || format!("{label}: column {c} has e = {e} >= L_in"));
    }
    Ok(())
}

pub fn bconv_suite(ctx: &CkksContext, opts: &VerifyOptions) -> Result<SuiteReport> {
    let mut rep = SuiteReport::new("bconv");
    let mut rng = ChaCha20Rng::seed_from_u64(opts.seed ^ 0x4243);
    let n = ctx.n();
    let ks = ctx.key_switcher(ctx.params().l)?;
    let mut max_e = 0;
    let mut certified = 0;
    let mut tables = 0;
    for (j, t) in ks.modup_tables().iter().enumerate() {
        check_table(&mut rep, &format!("modup digit {j}"), t, n, opts.bconv_columns, &mut rng, &mut max_e)?;
        certified += t.overflow_free() as u32;
        tables += 1;
    }
    check_table(&mut rep, "moddown", ks.moddown_table(), n, opts.bconv_columns, &mut rng, &mut max_e)?;
    certified += ks.moddown_table().overflow_free() as u32;
    tables += 1;
    for l_out in [12, 24, 48] {
        let (q, p) = search_overflow_free_moduli(12, l_out, n, 31)?;
        let t = BConvTable::new(&q, &p)?;
        rep.check(t.overflow_free(), || format!("searched 12 -> {l_out} basis not certified"));
        check_table(&mut rep, &format!("searched 12 -> {l_out}"), &t, n, opts.bconv_columns, &mut rng, &mut max_e)?;
        let mut s = BConvStats::default();
        let a = uniform(&q, n, Domain::Coefficient, &mut rng);
        hemem_core::bconv::bconv_with(&a, &t, Exec::default(), &mut s)?;
        let want = (12 * l_out * n) as u64;
        rep.check(s.mads == want, || format!("MAD count {} != {want}", s.mads));
    }
    rep.stat("keyswitch_tables", tables as f64);
    rep.stat("keyswitch_tables_certified", certified as f64);
    rep.stat("max_e", max_e as f64);
    Ok(rep)
}

pub fn keyswitch_suite(ctx: &CkksContext, opts: &VerifyOptions, dump: Option<&Path>) -> Result<SuiteReport> {
    let mut rep = SuiteReport::new("keyswitch");
    let p = ctx.params().clone();
    let bound = 2f64.powi(-10);
    let mut worst = 0f64;
    let mut sum = 0f64;
    let mut count = 0u64;
    for trial in 0..opts.keyswitch_trials {
        let mut rng = ChaCha20Rng::seed_from_u64(opts.seed.wrapping_add(trial));
        let s_from = ctx.keygen(p.hd, &mut rng)?;
        let s_to = ctx.keygen(p.hs, &mut rng)?;
        let evk = ctx.switching_keygen(&s_from, &s_to, &mut rng)?;
        let vals: Vec<f64> = (0..p.n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let msg = encode_scaled(&vals, p.log_delta);
        let ct = ctx.encrypt(&msg, &s_from, &mut rng)?;
        let ks = ctx.key_switcher(p.l)?;
        let out = ks.keyswitch(&ct, &evk)?;
        let dec = decode_scaled(&ctx.decrypt(&out, &s_to)?, p.log_delta);
        let err = dec.iter().zip(&vals).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        worst = worst.max(err);
        sum += err;
        count += 1;
        rep.check(err < bound, || format!("trial {trial}: max error {err:e} >= 2^-10"));
        if trial == 0 {
            let raised = ks.stage1(&ct.a)?;
            let acc = ks.stage2(&raised, &evk)?;
            let delta = ks.stage3(&acc)?;
            rep.check(out.a == delta[1] && out.b == ct.b.add(&delta[0])?, || "stages do not compose".into());
            let mut trace = Vec::new();
            let piped = ks.keyswitch_pipelined(&ct, &evk, &mut trace)?;
            rep.check(piped == out, || "pipelined key-switch differs".into());
            let batched = ctx.key_switcher(p.l)?.with_batches(1, 1).keyswitch(&ct, &evk)?;
            rep.check(batched == out, || "batch size changes the result".into());
            if let Some(dir) = dump {
                dump_stages(dir, &ct.a, &raised.digits, &acc, &delta)?;
            }
        }
    }
    rep.stat("trials", count as f64);
    rep.stat("max_error", worst);
    rep.stat("mean_max_error", if count > 0 { sum / count as f64 } else { 0.0 });
    rep.stat("max_error_log2", if worst > 0.0 { worst.log2() } else { f64::NEG_INFINITY });
    Ok(rep)
}

fn dump_stages(
    dir: &Path,
    input: &Polynomial,
    digits: &[Polynomial],
    acc: &hemem_core::keyswitch::Accumulators,
    delta: &[Polynomial; 2],
) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    let put = |name: &str, polys: &[&Polynomial]| -> Result<()> {
        let mut f = std::io::BufWriter::new(std::fs::File::create(dir.join(name))?);
        for p in polys {
            write_polynomial(&mut f, p).map_err(|e| anyhow!(e))?;
        }
        Ok(())
    };
    put("stage1_in.rnsp", &[input])?;
    put("stage1_out.rnsp", &digits.iter().collect::<Vec<_>>())?;
    put("stage2_out_q.rnsp", &[&acc.q_part[0], &acc.q_part[1]])?;
    put("stage2_out_p.rnsp", &[&acc.p_part[0], &acc.p_part[1]])?;
    put("stage3_out.rnsp", &[&delta[0], &delta[1]])?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use hemem_core::ParameterSet;

    fn ctx() -> CkksContext {
        CkksContext::new(ParameterSet::generate("t", 256, 4, 2, 31, 30, 64, 16).unwrap()).unwrap()
    }

    fn opts() -> VerifyOptions {
        VerifyOptions {
            seed: 1,
            oracle_limbs: 1,
            bconv_columns: 16,
            keyswitch_trials: 2,
        }
    }

    #[test]
    fn suites_pass_on_a_healthy_context() {
        let c = ctx();
        assert!(ntt_suite(&c, &opts()).unwrap().passed);
        assert!(bconv_suite(&c, &opts()).unwrap().passed);
        assert!(keyswitch_suite(&c, &opts(), None).unwrap().passed);
    }

    #[test]
    fn corrupted_twiddle_is_caught() {
        let mut c = ctx();
        c.ntt_mut().tables_mut()[0].corrupt_for_fault_injection();
        let r = ntt_suite(&c, &opts()).unwrap();
        assert!(!r.passed && r.failures > 0);
    }
}
