//! Crossover min-tradeoff functions and the second-order EAT quantities.
//!
//! A [`DualCertificate`] fixes an affine lower bound `g̃₀` on the per-round entropy as a
//! function of the test-round statistics. [`MinTradeoff`] is its extension to the full
//! round alphabet (test symbols plus the key symbol `⊥⊥⊥`).

use std::f64::consts::LN_2;

use crate::convex::{certify_dual, gradient_exact, nelder_mead, DualCertificate, ObjectiveContext};
use crate::error::{invalid, Result};
use crate::honest::HonestStatistics;
use crate::linalg::CMat;
use crate::sdp::constraint_null_space;

/// Product alphabet size of one round's outputs for a scheme with `m` PE labels.
pub fn output_dimension(m: usize) -> f64 {
    (5 * 17 * 5 * (m + 1)) as f64
}

fn check_cond(p_pe_cond: f64) -> Result<()> {
    if !(p_pe_cond > 0.0 && p_pe_cond < 1.0) {
        return Err(invalid("p_pe_cond", format!("must lie in (0, 1), got {p_pe_cond}")));
    }
    Ok(())
}

fn check_key(p_key: f64) -> Result<()> {
    if !(0.0..1.0).contains(&p_key) {
        return Err(invalid("p_key", format!("must lie in [0, 1), got {p_key}")));
    }
    Ok(())
}

/// Dual weights rescaled to the test-round conditionals: `ν/p̃^PE` then `ν′/p̃^tom`.
pub fn scaled_nu(cert: &DualCertificate, p_pe_cond: f64) -> Result<Vec<f64>> {
    check_cond(p_pe_cond)?;
    let p_tom_cond = 1.0 - p_pe_cond;
    Ok(cert
        .nu_pe
        .iter()
        .map(|v| v / p_pe_cond)
        .chain(cert.nu_tom.iter().map(|v| v / p_tom_cond))
        .collect())
}

fn extremes(v: &[f64]) -> (f64, f64) {
    v.iter().fold((f64::NEG_INFINITY, f64::INFINITY), |(hi, lo), &x| (hi.max(x), lo.min(x)))
}

/// `g̃₀(p̃) = p^key (G₀ + Σ ν p̃/p̃^PE + Σ ν′ p̃/p̃^tom)` for `p̃` over the `4m + 16` test symbols.
pub fn crossover_g(cert: &DualCertificate, p_tilde: &[f64], p_key: f64, p_pe_cond: f64) -> Result<f64> {
    let nu0 = scaled_nu(cert, p_pe_cond)?;
    if p_tilde.len() != nu0.len() {
        return Err(invalid("p_tilde", format!("expected {} entries, got {}", nu0.len(), p_tilde.len())));
    }
    let dot: f64 = nu0.iter().zip(p_tilde).map(|(a, b)| a * b).sum();
    Ok(p_key * (cert.g0_robust() + dot))
}

/// `(max g̃₀, min g̃₀)` over the simplex, attained at point masses.
pub fn g_extremes(cert: &DualCertificate, p_key: f64, p_pe_cond: f64) -> Result<(f64, f64)> {
    let (hi, lo) = extremes(&scaled_nu(cert, p_pe_cond)?);
    let g0 = cert.g0_robust();
    Ok((p_key * (g0 + hi), p_key * (g0 + lo)))
}

/// Affine min-tradeoff function `f(p) = const + Σ h_c p(c)` on the full round alphabet.
#[derive(Debug, Clone, PartialEq)]
pub struct MinTradeoff {
    /// `h_{x,z,⊥}` in constraint order.
    pub h_pe: Vec<f64>,
    /// `h_{⊥,⊥,x′}`.
    pub h_tom: Vec<f64>,
    pub constant: f64,
    pub max_g: f64,
    pub min_g: f64,
    pub p_key: f64,
    pub p_pe_cond: f64,
}

impl MinTradeoff {
    /// Evaluates `f` on a distribution laid out as PE symbols, tomography symbols and
    /// optionally the trailing `⊥⊥⊥` entry (whose coefficient is zero).
    pub fn evaluate(&self, p: &[f64]) -> f64 {
        let n = self.h_pe.len() + self.h_tom.len();
        let lin: f64 = self.h_pe.iter().chain(&self.h_tom).zip(&p[..n.min(p.len())]).map(|(h, q)| h * q).sum();
        self.constant + lin
    }

    pub fn g_spread(&self) -> f64 {
        self.max_g - self.min_g
    }
}

/// Extends `g̃₀` to the full alphabet at the given sampling probabilities.
pub fn min_tradeoff_from_crossover(cert: &DualCertificate, p_key: f64, p_pe_cond: f64) -> Result<MinTradeoff> {
    check_key(p_key)?;
    let nu0 = scaled_nu(cert, p_pe_cond)?;
    let (hi, lo) = extremes(&nu0);
    let scale = p_key / (1.0 - p_key);
    let h: Vec<f64> = nu0.iter().map(|v| scale * (v - hi)).collect();
    let n_pe = cert.nu_pe.len();
    let g0 = cert.g0_robust();
    Ok(MinTradeoff {
        h_pe: h[..n_pe].to_vec(),
        h_tom: h[n_pe..].to_vec(),
        constant: p_key * (g0 + hi),
        max_g: p_key * (g0 + hi),
        min_g: p_key * (g0 + lo),
        p_key,
        p_pe_cond,
    })
}

/// `Ṽ = √((max g − min g)²/(1 − p^key) + 2) + log(2 d_O² + 1)`.
pub fn eat_v(mt: &MinTradeoff, d_o: f64) -> f64 {
    ((mt.g_spread().powi(2) / (1.0 - mt.p_key)) + 2.0).sqrt() + (2.0 * d_o * d_o + 1.0).log2()
}

/// `ln(2^x + e²)` without overflow.
fn ln_pow2_plus_e2(x: f64) -> f64 {
    let u = x * LN_2;
    u.max(2.0) + (-(u - 2.0).abs()).exp().ln_1p()
}

/// `K̃_a`, the third-order EAT coefficient.
pub fn eat_ka(mt: &MinTradeoff, d_o: f64, a: f64) -> Result<f64> {
    if !(a > 1.0 && a < 2.0) {
        return Err(invalid("a", format!("must lie in (1, 2), got {a}")));
    }
    let x = 2.0 * d_o.log2() + mt.g_spread();
    let pre = 1.0 / (6.0 * (2.0 - a).powi(3) * LN_2);
    Ok(pre * ((a - 1.0) * x * LN_2).exp() * ln_pow2_plus_e2(x).powi(3))
}

/// `f(p₀) = g̃₀(p̃₀) = p^key (G₀ + Σ ν p₀^sim + Σ ν′ p₀^tom)`.
pub fn f_at_p0(cert: &DualCertificate, stats: &HonestStatistics, p_key: f64) -> f64 {
    p_key * cert.bound(&stats.rhs())
}

/// Moves `ν` along the null space of the constraint map, which leaves `Σ ν_i A_i` and
/// hence the dual slack unchanged, to flatten the rescaled weights `ν₀` seen by the
/// finite-size corrections. The slack is re-verified on the result.
pub fn rebalance_dual(
    cert: &DualCertificate,
    ctx: &ObjectiveContext,
    constraints: &[CMat],
    stats: &HonestStatistics,
    p_pe_cond: f64,
) -> Result<DualCertificate> {
    check_cond(p_pe_cond)?;
    let null = constraint_null_space(constraints);
    let nu = cert.nu();
    if null.is_empty() || null[0].len() != nu.len() {
        return Ok(cert.clone());
    }
    let weights: Vec<f64> = stats
        .pe_flat()
        .iter()
        .map(|p| p * p_pe_cond)
        .chain(stats.tom.iter().map(|p| p * (1.0 - p_pe_cond)))
        .collect();
    let n_pe = cert.nu_pe.len();
    let shifted = |t: &[f64]| -> Vec<f64> {
        let mut v = nu.clone();
        for (tk, dir) in t.iter().zip(&null) {
            for (vi, di) in v.iter_mut().zip(dir) {
                *vi += tk * di;
            }
        }
        v
    };
    let spread_cost = |t: &[f64]| {
        let v = shifted(t);
        let nu0: Vec<f64> = v
            .iter()
            .enumerate()
            .map(|(i, x)| if i < n_pe { x / p_pe_cond } else { x / (1.0 - p_pe_cond) })
            .collect();
        let (hi, lo) = extremes(&nu0);
        let second: f64 = nu0.iter().zip(&weights).map(|(x, w)| w * (x - hi).powi(2)).sum();
        second + (hi - lo).powi(2)
    };
    let scale = nu.iter().fold(1.0f64, |a, x| a.max(x.abs()));
    let mut t = vec![0.0; null.len()];
    let mut best = spread_cost(&t);
    for _ in 0..4 {
        let (tn, fv) = nelder_mead(spread_cost, &t, 0.1 * scale, 1e-12, 4000);
        if fv >= best * (1.0 - 1e-9) {
            break;
        }
        t = tn;
        best = fv;
    }
    let grad = gradient_exact(&cert.rho_tilde, ctx)?;
    let (nu_new, lambda) = certify_dual(&grad, constraints, shifted(&t), n_pe)?;
    Ok(DualCertificate {
        nu_pe: nu_new[..n_pe].to_vec(),
        nu_tom: nu_new[n_pe..].to_vec(),
        lambda_min: lambda,
        ..cert.clone()
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cert(nu_pe: Vec<f64>, nu_tom: Vec<f64>, g0: f64) -> DualCertificate {
        DualCertificate {
            nu_pe,
            nu_tom,
            g0,
            eps_prime: 0.0,
            primal_ub: g0,
            lambda_min: 0.0,
            rho_tilde: CMat::zeros(1, 1),
        }
    }

    #[test]
    fn zero_dual_is_constant() {
        let c = cert(vec![0.0; 4], vec![0.0; 16], 0.7);
        let p = vec![1.0 / 20.0; 20];
        assert!((crossover_g(&c, &p, 0.9, 0.5).unwrap() - 0.63).abs() < 1e-15);
        let (hi, lo) = g_extremes(&c, 0.9, 0.5).unwrap();
        assert_eq!(hi, lo);
        let mt = min_tradeoff_from_crossover(&c, 0.9, 0.5).unwrap();
        assert!(mt.h_pe.iter().chain(&mt.h_tom).all(|&h| h == 0.0));
        assert!((mt.constant - 0.63).abs() < 1e-15);
        assert!((eat_v(&mt, 100.0) - (2f64.sqrt() + 20001f64.log2())).abs() < 1e-12);
    }

    #[test]
    fn single_positive_entry_spread() {
        let mut nu_pe = vec![0.0; 4];
        nu_pe[2] = 0.3;
        let c = cert(nu_pe, vec![0.0; 16], 1.0);
        let (hi, lo) = g_extremes(&c, 0.8, 0.25).unwrap();
        assert!((hi - lo - 0.8 * 0.3 / 0.25).abs() < 1e-14);
    }

    #[test]
    fn rejects_degenerate_probabilities() {
        let c = cert(vec![0.0; 4], vec![0.0; 16], 1.0);
        assert!(crossover_g(&c, &[0.05; 20], 0.5, 1.0).is_err());
        assert!(crossover_g(&c, &[0.05; 20], 0.5, 0.0).is_err());
        assert!(min_tradeoff_from_crossover(&c, 1.0, 0.5).is_err());
        assert!(eat_ka(&min_tradeoff_from_crossover(&c, 0.5, 0.5).unwrap(), 10.0, 2.0).is_err());
    }

    #[test]
    fn ka_limits() {
        let c = cert(vec![0.5, -0.5, 0.0, 0.0], vec![0.0; 16], 1.0);
        let mt = min_tradeoff_from_crossover(&c, 0.5, 0.5).unwrap();
        let d = 19125.0;
        let x = 2.0 * f64::log2(d) + mt.g_spread();
        let limit = (2f64.powf(x) + 1f64.exp().powi(2)).ln().powi(3) / (6.0 * LN_2);
        let near = eat_ka(&mt, d, 1.0 + 1e-12).unwrap();
        assert!((near - limit).abs() < 1e-8 * limit);
        let mut prev = 0.0;
        for k in 1..=90 {
            let v = eat_ka(&mt, d, 1.0 + k as f64 * 0.01).unwrap();
            assert!(v > prev);
            prev = v;
        }
    }

    #[test]
    fn overflow_free_log() {
        assert!((ln_pow2_plus_e2(0.0) - (1.0 + 2f64.exp()).ln()).abs() < 1e-14);
        assert!((ln_pow2_plus_e2(5000.0) - 5000.0 * LN_2).abs() < 1e-9);
    }
}
