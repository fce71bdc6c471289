mod common;

use std::f64::consts::PI;

use cvqkd_core::convex::{certificate_slack, frank_wolfe, FwOptions, ObjectiveContext};
use cvqkd_core::fock::{
    alice_marginal, coherent_fock_vector, coherent_overlap, constraint_matrices, ic_povm, ModulationScheme,
};
use cvqkd_core::honest::{ec_leak_rate, key_statistics, pe_statistics, tom_statistics, HonestChannel, HonestStatistics};
use cvqkd_core::linalg::{c, lambda_min, trace_prod, CMat, C64};
use cvqkd_core::sdp::{solve_primal_dual, solve_relaxed, SdpOptions, SdpProblem};
use cvqkd_core::tradeoff::{eat_v, min_tradeoff_from_crossover, output_dimension};
use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::{Distribution, Normal};

use common::*;

fn wedge(re: f64, im: f64) -> usize {
    let mut t = im.atan2(re);
    if t < -PI / 4.0 {
        t += 2.0 * PI;
    }
    (((t + PI / 4.0) / (PI / 2.0)) as usize).min(3)
}

#[test]
fn key_statistics_match_sampling() {
    let channel = HonestChannel::with_distance(10.0, 0.02).unwrap();
    let alpha = 0.9;
    let ec = key_statistics(&channel, alpha).unwrap();
    let amps = [c(alpha, 0.0), c(-alpha, 0.0), c(0.0, alpha), c(0.0, -alpha)];
    let eta = channel.transmittance().sqrt();
    let sd = ((1.0 + channel.transmittance() * 0.02 / 2.0) / 2.0).sqrt();
    let noise = Normal::new(0.0, sd).unwrap();
    let mut r = rng(41);
    let n = 1_000_000u64;
    let mut counts = [[0u64; 4]; 4];
    for _ in 0..n {
        let x = r.random_range(0..4usize);
        let y = amps[x] * eta + c(noise.sample(&mut r), noise.sample(&mut r));
        counts[x][wedge(y.re, y.im)] += 1;
    }
    for x in 0..4 {
        for z in 0..4 {
            let p = ec[x][z];
            let z_score = (counts[x][z] as f64 - n as f64 * p) / (n as f64 * p * (1.0 - p)).sqrt();
            assert!(z_score.abs() < 4.0, "cell ({x},{z}): z = {z_score}");
        }
    }
}

#[test]
fn key_statistics_limits() {
    let ch = HonestChannel::with_distance(10.0, 0.02).unwrap();
    let zero = key_statistics(&ch, 0.0).unwrap();
    for row in &zero {
        for &p in row {
            assert!((p - 1.0 / 16.0).abs() < 1e-9);
        }
    }
    let ideal = HonestChannel::new(0.0, 0.2, 0.0).unwrap();
    let far = key_statistics(&ideal, 5.0).unwrap();
    for (x, row) in far.iter().enumerate() {
        let own = match x {
            0 => 0,
            1 => 2,
            2 => 1,
            _ => 3,
        };
        let off: f64 = row.iter().enumerate().filter(|(z, _)| *z != own).map(|(_, p)| p).sum();
        assert!(off < 1e-6, "x = {x}: off-wedge mass {off}");
    }
}

#[test]
fn pe_statistics_rotationally_symmetric_at_zero_amplitude() {
    let scheme = ModulationScheme::new(1e-9, 0.9, 0.3, 4).unwrap();
    let ch = HonestChannel::with_distance(10.0, 0.02).unwrap();
    let pe = pe_statistics(&ch, &scheme).unwrap();
    for row in &pe {
        for z in 0..scheme.m() {
            assert!((row[z] - pe[0][z]).abs() < 1e-9);
            assert!((row[z] - row[z - z % 4]).abs() < 1e-9);
        }
    }
}

#[test]
fn leak_matches_joint_minus_marginal_entropy() {
    let ch = HonestChannel::with_distance(10.0, 0.02).unwrap();
    let ec = key_statistics(&ch, 0.9).unwrap();
    let h = |p: f64| if p > 0.0 { -p * p.log2() } else { 0.0 };
    let joint: f64 = ec.iter().flatten().map(|&p| h(p)).sum();
    let marginal: f64 = ec.iter().map(|r| h(r.iter().sum())).sum();
    let expected = 1.01 * (joint - marginal);
    assert!((ec_leak_rate(&ec, 0.01, 1.0, true) - expected).abs() < 1e-12);
    let uniform = vec![vec![1.0 / 16.0; 4]; 4];
    assert!((ec_leak_rate(&uniform, 0.0, 1.0, true) - 2.0).abs() < 1e-12);
}

/// Real coordinates of a 4×4 Hermitian matrix in the basis `E_ii`, `E_ij + E_ji`, `i(E_ij − E_ji)`.
fn hermitian_basis() -> Vec<CMat> {
    let mut basis = Vec::new();
    for i in 0..4 {
        for j in i..4 {
            let mut a = CMat::zeros(4, 4);
            if i == j {
                a[(i, i)] = c(1.0, 0.0);
                basis.push(a);
            } else {
                a[(i, j)] = c(1.0, 0.0);
                a[(j, i)] = c(1.0, 0.0);
                basis.push(a.clone());
                let mut b = CMat::zeros(4, 4);
                b[(i, j)] = c(0.0, 1.0);
                b[(j, i)] = c(0.0, -1.0);
                basis.push(b);
            }
        }
    }
    basis
}

#[test]
fn tomography_reconstructs_alice_marginal() {
    let povm = ic_povm();
    let basis = hermitian_basis();
    let map = DMatrix::from_fn(16, 16, |k, b| trace_prod(&povm[k], &basis[b]));
    let pinv = map.clone().pseudo_inverse(1e-12).unwrap();
    for alpha in [0.0, 0.6, 0.9, 1.4] {
        let rho = alice_marginal(alpha);
        let probs = DVector::from_vec(tom_statistics(alpha));
        assert!((probs.sum() - 1.0).abs() < 1e-12);
        let coords = &pinv * probs;
        let mut back = CMat::zeros(4, 4);
        for (b, w) in basis.iter().zip(coords.iter()) {
            // the off-diagonal basis elements have norm √2 in the Hilbert-Schmidt sense
            back += b * c(*w, 0.0);
        }
        let err = (&back - &rho).iter().map(|z| z.norm()).fold(0.0, f64::max);
        assert!(err < 1e-10, "α = {alpha}: reconstruction error {err}");
    }
}

#[test]
fn coherent_overlap_matches_fock_expansion() {
    for (a, b) in [(c(0.9, 0.0), c(0.0, 0.9)), (c(0.3, -0.7), c(-1.2, 0.4)), (c(1.5, 0.0), c(-1.5, 0.0))] {
        let va = coherent_fock_vector(a, 60);
        let vb = coherent_fock_vector(b, 60);
        let inner: C64 = vb.adjoint().iter().zip(va.iter()).map(|(x, y)| x * y).sum();
        assert!((inner - coherent_overlap(a, b)).norm() < 1e-12);
    }
}

#[test]
fn variance_term_matches_hand_evaluation() {
    let d_o = output_dimension(8);
    assert_eq!(d_o, 3825.0);
    let mut cert = cvqkd_core::convex::DualCertificate {
        nu_pe: vec![0.0; 32],
        nu_tom: vec![0.0; 16],
        g0: 0.4,
        eps_prime: 0.0,
        primal_ub: 0.4,
        lambda_min: 0.0,
        rho_tilde: CMat::identity(1, 1),
    };
    cert.nu_pe[5] = 0.3;
    cert.nu_tom[2] = -0.2;
    let (p_key, p_pe_cond) = (0.9, 0.5);
    let mt = min_tradeoff_from_crossover(&cert, p_key, p_pe_cond).unwrap();
    // spread of ν/p̃: 0.3/0.5 − (−0.2/0.5) = 1.0, times p_key
    let spread = 0.9 * 1.0;
    let hand = (spread * spread / (1.0 - p_key) + 2.0).sqrt() + (2.0 * 3825.0f64 * 3825.0 + 1.0).log2();
    assert!((eat_v(&mt, d_o) - hand).abs() < 1e-12);
}

#[test]
fn relaxation_lower_bounds_exact_problem() {
    let mut r = rng(3);
    for _ in 0..10 {
        let inst = random_sdp(4, 4, &mut r);
        let p = SdpProblem::new(inst.objective.clone(), inst.constraints.clone(), inst.rhs.clone()).unwrap();
        let exact = solve_primal_dual(&p, &SdpOptions::default()).unwrap();
        let (relaxed, _) = solve_relaxed(&p, 1e-3, &SdpOptions::default()).unwrap();
        assert!(relaxed <= exact.primal_value + 1e-7, "{relaxed} > {}", exact.primal_value);
        let (tight, _) = solve_relaxed(&p, 1e-10, &SdpOptions::default()).unwrap();
        assert!((tight - exact.primal_value).abs() < 1e-6);
    }
}

#[test]
fn frank_wolfe_brackets_and_certifies_at_small_cutoff() {
    let scheme = ModulationScheme::new(0.9, 0.9, 0.9, 5).unwrap();
    let ch = HonestChannel::with_distance(10.0, 0.02).unwrap();
    let stats = HonestStatistics::compute(&ch, &scheme).unwrap();
    let cons = constraint_matrices(&scheme).unwrap();
    let ctx = ObjectiveContext::new(5).unwrap();
    let opts = FwOptions { max_iter: 40, ..FwOptions::default() };
    let fw = frank_wolfe(&ctx, &cons, &stats.rhs(), &opts).unwrap();
    assert!(fw.lower_bound <= fw.upper_bound + 1e-12);
    assert!(fw.lower_bound > 0.0);
    let slack = certificate_slack(&fw.certificate, &ctx, &cons).unwrap();
    assert!(lambda_min(&slack) >= -1e-12);
    assert!(fw.certificate.eps_prime <= 1e-8);
    let leak = ec_leak_rate(&stats.ec, 0.0, 1.0, false);
    assert!(fw.lower_bound - leak > 0.0);
}
