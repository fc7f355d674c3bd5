use hemem_core::arith::find_ntt_primes;
use hemem_core::ntt::{EvalAutomorphism, NttStats, TwiddleTable};
use hemem_core::oracle;
use hemem_core::{Direction, Domain, Exec, Modulus, NttContext, Polynomial, TwoPhaseConfig};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_row(rng: &mut impl Rng, m: &Modulus, n: usize) -> Vec<u32> {
    (0..n).map(|_| rng.gen_range(0..m.value())).collect()
}

fn random_poly(rng: &mut impl Rng, basis: &[Modulus], n: usize) -> Polynomial {
    let data = basis.iter().flat_map(|m| random_row(rng, m, n)).collect();
    Polynomial::from_data(basis, n, Domain::Coefficient, data).unwrap()
}

#[test]
fn forward_matches_evaluation_by_definition() {
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    for n in [4, 16, 64] {
        for m in find_ntt_primes(3, 30, n).unwrap() {
            let t = TwiddleTable::new(m).unwrap();
            let a = random_row(&mut rng, &m, n);
            let mut b = a.clone();
            t.ntt(&mut b, Direction::Forward).unwrap();
            assert_eq!(b, oracle::evaluate_at_odd_powers(&a, m.value(), m.psi()));
        }
    }
}

#[test]
fn products_match_schoolbook() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for n in [4, 16, 256] {
        let basis = find_ntt_primes(3, 31, n).unwrap();
        let ctx = NttContext::new(&basis).unwrap();
        for _ in 0..4 {
            let mut a = random_poly(&mut rng, &basis, n);
            let mut b = random_poly(&mut rng, &basis, n);
            let want: Vec<Vec<u32>> = basis
                .iter()
                .enumerate()
                .map(|(i, m)| oracle::negacyclic_product(a.row(i), b.row(i), m.value()))
                .collect();
            ctx.forward(&mut a).unwrap();
            ctx.forward(&mut b).unwrap();
            let mut c = a.mul(&b).unwrap();
            ctx.inverse(&mut c).unwrap();
            for (i, w) in want.iter().enumerate() {
                assert_eq!(c.row(i), &w[..], "n = {n}, limb {i}");
            }
        }
    }
}

#[test]
fn two_phase_equals_single_phase_for_every_split() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let n = 256;
    let m = find_ntt_primes(1, 31, n).unwrap()[0];
    let a = random_row(&mut rng, &m, n);
    for log_n1 in 0..=8 {
        let t = TwiddleTable::with_split(m, 1 << log_n1).unwrap();
        for dir in [Direction::Forward, Direction::Inverse] {
            let mut want = a.clone();
            t.ntt(&mut want, dir).unwrap();
            for strided in [false, true] {
                for block in [false, true] {
                    let cfg = TwoPhaseConfig {
                        strided_on_the_fly: strided,
                        block_on_the_fly: block,
                    };
                    let mut got = a.clone();
                    t.ntt_two_phase(&mut got, dir, cfg).unwrap();
                    assert_eq!(got, want, "n1 = {}, {dir:?}, {cfg:?}", 1 << log_n1);
                }
            }
        }
    }
}

#[test]
fn sequential_and_parallel_agree() {
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    let n = 1024;
    let basis = find_ntt_primes(6, 31, n).unwrap();
    let ctx = NttContext::new(&basis).unwrap();
    let a = random_poly(&mut rng, &basis, n);
    let mut s = a.clone();
    let mut p = a.clone();
    ctx.transform(&mut s, Direction::Forward, Exec::Sequential).unwrap();
    ctx.transform(&mut p, Direction::Forward, Exec::Parallel).unwrap();
    assert_eq!(s, p);
    let mut t = a.clone();
    ctx.transform_two_phase(&mut t, Direction::Forward, TwoPhaseConfig::default(), Exec::Parallel)
        .unwrap();
    assert_eq!(t, s);
}

#[test]
fn evaluation_automorphism_matches_coefficient_route() {
    let mut rng = ChaCha8Rng::seed_from_u64(14);
    let n = 64;
    let basis = find_ntt_primes(2, 31, n).unwrap();
    let ctx = NttContext::new(&basis).unwrap();
    let a = random_poly(&mut rng, &basis, n);
    let mut a_eval = a.clone();
    ctx.forward(&mut a_eval).unwrap();
    for k in (1..2 * n).step_by(2) {
        let mut want = a.automorphism(k).unwrap();
        ctx.forward(&mut want).unwrap();
        let got = EvalAutomorphism::new(k, n).unwrap().apply(&a_eval).unwrap();
        assert_eq!(got, want, "k = {k}");
    }
}

#[test]
fn automorphisms_compose_and_invert() {
    let mut rng = ChaCha8Rng::seed_from_u64(15);
    let n = 32;
    let basis = find_ntt_primes(2, 31, n).unwrap();
    let a = random_poly(&mut rng, &basis, n);
    let two_n = 2 * n;
    for k1 in (1..two_n).step_by(2) {
        for k2 in [3, 5, 2 * n - 1] {
            let lhs = a.automorphism(k1).unwrap().automorphism(k2).unwrap();
            assert_eq!(lhs, a.automorphism(k1 * k2 % two_n).unwrap());
        }
        let inv = (1..two_n).step_by(2).find(|k| k * k1 % two_n == 1).unwrap();
        assert_eq!(a.automorphism(k1).unwrap().automorphism(inv).unwrap(), a);
    }
    assert!(a.automorphism(4).is_err());
}

#[test]
fn on_the_fly_twiddles_reproduce_table() {
    for n in [4, 64, 1024] {
        let m = find_ntt_primes(1, 31, n).unwrap()[0];
        let t = TwiddleTable::new(m).unwrap();
        for dir in [Direction::Forward, Direction::Inverse] {
            for pos in 0..n {
                assert_eq!(t.generate_at(dir, pos).unwrap(), t.entry(dir, pos));
            }
        }
        assert!(t.generate_at(Direction::Forward, n).is_err());
    }
}

#[test]
fn butterfly_counts_match_closed_form() {
    for log_n in 2..=12u32 {
        let n = 1usize << log_n;
        let m = find_ntt_primes(1, 31, n).unwrap()[0];
        let t = TwiddleTable::new(m).unwrap();
        let mut row = vec![1u32; n];
        let mut s = NttStats::default();
        t.ntt_tallied(&mut row, Direction::Forward, &mut s).unwrap();
        assert_eq!(s.butterflies, (n as u64 / 2) * log_n as u64);
        let mut s2 = NttStats::default();
        t.ntt_two_phase_tallied(&mut row, Direction::Inverse, TwoPhaseConfig::default(), &mut s2)
            .unwrap();
        assert_eq!(s2.butterflies, (n as u64 / 2) * log_n as u64);
    }
}
