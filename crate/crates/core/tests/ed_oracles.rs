mod support;

use std::f64::consts::LN_2;

use num_complex::Complex64 as C;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use support::{epr_expect, hermitian, rotation_m2, two_level_sff, Word};
use tfdmagic_core::ed::{
    averaged_coefficient, build_epr, build_tfd, exact_sff, majorana_spectrum, stabilizer_renyi,
    wightman_coefficient, CouplingTensor, Evolver, Hamiltonian, MajoranaString, ModelParams,
};

#[test]
fn oracle_reproduces_epr_stabilizers() {
    // the oracle's own sanity: diagonal strings have unit modulus on EPR
    for v in 0..16u32 {
        let e = epr_expect(4, hermitian(4, v, v));
        assert!((e.norm() - 1.0).abs() < 1e-15);
        assert!(e.im.abs() < 1e-15);
    }
    assert_eq!(epr_expect(4, hermitian(4, 1, 2)).norm(), 0.0);
}

#[test]
fn epr_spectrum_matches_oracle() {
    let n = 6;
    let s = majorana_spectrum(&build_epr(n).unwrap(), n).unwrap();
    for v_l in 0..1u32 << n {
        for v_r in 0..1u32 << n {
            let want = epr_expect(n, hermitian(n, v_l, v_r)).re;
            assert!((s.get(v_l, v_r).unwrap() - want).abs() < 1e-12, "({v_l}, {v_r})");
        }
    }
}

#[test]
fn single_coupling_rotation_oracle() {
    let jp = 0.8;
    let h = Hamiltonian::new(&CouplingTensor::single(4, vec![0, 1, 2, 3], jp).unwrap()).unwrap();
    let epr = build_epr(4).unwrap();
    for beta in [0.0, 1.3] {
        let tfd = build_tfd(&h, beta, &epr).unwrap();
        let ev = Evolver::new(&h, &tfd.state);
        for k in 0..50 {
            let t = 0.31 * k as f64;
            let m2 = stabilizer_renyi(&majorana_spectrum(&ev.at(t), 4).unwrap());
            let want = rotation_m2(jp, beta, t);
            assert!((m2 - want).abs() < 1e-9, "beta {beta} t {t}: {m2} vs {want}");
            let sff = exact_sff(&h, beta, t);
            assert!((sff - two_level_sff(4, jp, beta, t)).abs() < 1e-10);
        }
    }
}

#[test]
fn diagonal_mean_identity() {
    for n in [4usize, 6, 8] {
        let params = ModelParams::new(n, 4, 1.0, 11);
        let epr = build_epr(n).unwrap();
        for r in 0..3 {
            let h = Hamiltonian::new(&CouplingTensor::sample_stream(&params, r).unwrap()).unwrap();
            for beta in [0.0, 1.0, 2.0] {
                let ev = Evolver::new(&h, &build_tfd(&h, beta, &epr).unwrap().state);
                for t in [0.0, 0.5, 2.0] {
                    let s = majorana_spectrum(&ev.at(t), n).unwrap();
                    let mut acc = C::new(0.0, 0.0);
                    for v in 0..1u32 << n {
                        let e = MajoranaString::new(n, v, v).phase_exponent();
                        acc += support::ipow(4 - e % 4) * s.get(v, v).unwrap();
                    }
                    let mean = acc / (1u64 << n) as f64;
                    let want = averaged_coefficient(&h, beta, t);
                    assert!((mean - want).norm() < 1e-10, "n {n} beta {beta} t {t}");
                }
            }
        }
    }
}

#[test]
fn wightman_matches_state_coefficients() {
    let n = 6;
    let params = ModelParams::new(n, 4, 1.0, 3);
    let h = Hamiltonian::new(&CouplingTensor::sample(&params).unwrap()).unwrap();
    let epr = build_epr(n).unwrap();
    let ev = Evolver::new(&h, &build_tfd(&h, 1.5, &epr).unwrap().state);
    let s = majorana_spectrum(&ev.at(0.7), n).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    for _ in 0..100 {
        let (a, b) = (rng.random_range(0..1u32 << n), rng.random_range(0..1u32 << n));
        let w = wightman_coefficient(&h, 1.5, 0.7, a, b).unwrap();
        assert!((w - s.get(a, b).unwrap()).abs() < 1e-10);
    }
}

#[test]
fn free_evolution_stays_stabilizer() {
    let n = 6;
    let h = Hamiltonian::new(&CouplingTensor::zero(n, 4)).unwrap();
    let epr = build_epr(n).unwrap();
    let ev = Evolver::new(&h, &epr);
    for t in [0.0, 1.0, 10.0] {
        assert!(stabilizer_renyi(&majorana_spectrum(&ev.at(t), n).unwrap()).abs() < 1e-10);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn word_product_is_associative(a in 0u32..256, b in 0u32..256, c in 0u32..256) {
        let one = C::new(1.0, 0.0);
        let (x, y, z) = (Word::new(one, a), Word::new(one, b), Word::new(one, c));
        let l = x.mul(y).mul(z);
        let r = x.mul(y.mul(z));
        prop_assert_eq!(l.bits, r.bits);
        prop_assert_eq!(l.coef, r.coef);
    }

    #[test]
    fn spectrum_bounds_on_random_tfds(seed in 0u64..1000, beta in 0.0f64..3.0, t in 0.0f64..5.0) {
        let n = 4;
        let h = Hamiltonian::new(&CouplingTensor::sample(&ModelParams::new(n, 4, 1.0, seed)).unwrap()).unwrap();
        let ev = Evolver::new(&h, &build_tfd(&h, beta, &build_epr(n).unwrap()).unwrap().state);
        let s = majorana_spectrum(&ev.at(t), n).unwrap();
        prop_assert!(s.max_imag < 1e-10);
        prop_assert!((s.sum_sq - 16.0).abs() < 1e-9);
        let m2 = stabilizer_renyi(&s);
        prop_assert!(m2 > -1e-9 && m2 < n as f64 * LN_2 + 1e-9);
    }

    #[test]
    fn rotation_oracle_is_periodic(beta in 0.0f64..2.0, t in 0.0f64..5.0) {
        // e^{zP} picks up only a phase when t advances by 8π/J'
        let jp = 1.0;
        let a = rotation_m2(jp, beta, t);
        let b = rotation_m2(jp, beta, t + 8.0 * std::f64::consts::PI);
        prop_assert!((a - b).abs() < 1e-9);
    }
}
