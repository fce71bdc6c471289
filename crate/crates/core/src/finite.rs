//! Finite-size and asymptotic key rates.

use crate::convex::DualCertificate;
use crate::error::{invalid, Result};
use crate::honest::{assemble_p0, AssembledDistribution, HonestStatistics};
use crate::tradeoff::{eat_ka, eat_v, f_at_p0, min_tradeoff_from_crossover, MinTradeoff};

/// `Γ(x) = −log(1 − √(1 − x²))`.
pub fn gamma_fn(x: f64) -> Result<f64> {
    if !(x > 0.0 && x <= 1.0) {
        return Err(invalid("x", format!("must lie in (0, 1], got {x}")));
    }
    let inner = x * x / (1.0 + (1.0 - x * x).sqrt());
    Ok(-inner.log2())
}

/// Concentration radius of an affine statistic `h·freq` of `n` i.i.d. draws from `π`,
/// with failure probability `eps_fail`.
pub fn multinoulli_deviation(pi: &[f64], h: &[f64], n: f64, eps_fail: f64) -> Result<f64> {
    if pi.len() != h.len() || pi.is_empty() {
        return Err(invalid("h", format!("length {} does not match π length {}", h.len(), pi.len())));
    }
    if pi.iter().any(|&p| !(p >= 0.0)) || (pi.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
        return Err(invalid("pi", "must be a probability vector"));
    }
    if !(n >= 1.0) {
        return Err(invalid("n", format!("must be ≥ 1, got {n}")));
    }
    if !(eps_fail > 0.0 && eps_fail < 1.0) {
        return Err(invalid("eps_fail", format!("must lie in (0, 1), got {eps_fail}")));
    }
    let k = pi.len();
    // tail[i] = Σ_{j>i} π_j, summed from the back to keep small tails accurate.
    let mut tail = vec![0.0; k];
    let mut tail_h = vec![0.0; k];
    for i in (0..k - 1).rev() {
        tail[i] = tail[i + 1] + pi[i + 1];
        tail_h[i] = tail_h[i + 1] + pi[i + 1] * h[i + 1];
    }
    let mut var = 0.0;
    for i in 0..k {
        let head = pi[i] + tail[i];
        let gamma = if head > 0.0 { pi[i] * tail[i] / head } else { 0.0 };
        let c = if tail[i] > 0.0 { h[i] - tail_h[i] / tail[i] } else { h[i] };
        var += gamma * c * c;
    }
    let (hi, lo) = h.iter().fold((f64::NEG_INFINITY, f64::INFINITY), |(a, b), &x| (a.max(x), b.min(x)));
    let spread = hi - lo;
    Ok(2.0 * ((n / eps_fail).log2() * var / n).sqrt() + 3.0 * spread / n * (2.0 / eps_fail).log2())
}

fn with_remainder(p: &[f64], h: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let mut pi = p.to_vec();
    pi.push((1.0 - p.iter().sum::<f64>()).max(0.0));
    let mut hh = h.to_vec();
    hh.push(0.0);
    (pi, hh)
}

/// `δ^tol_PE` from the parameter-estimation part of `f`.
pub fn delta_tol_pe(mt: &MinTradeoff, p0: &AssembledDistribution, n: f64, eps_pe_c: f64) -> Result<f64> {
    let (pi, h) = with_remainder(&p0.pe, &mt.h_pe);
    multinoulli_deviation(&pi, &h, n, eps_pe_c)
}

/// `δ^tol_tom` from the tomography part of `f`.
pub fn delta_tol_tom(mt: &MinTradeoff, p0: &AssembledDistribution, n: f64, eps_tom: f64) -> Result<f64> {
    let (pi, h) = with_remainder(&p0.tom, &mt.h_tom);
    multinoulli_deviation(&pi, &h, n, eps_tom)
}

/// Security and correctness parameters of one finite-size evaluation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SecurityParams {
    pub n: f64,
    pub eps: f64,
    pub eps_phys_na: f64,
    pub eps_tom: f64,
    pub eps_ec: f64,
    pub eps_ec_c: f64,
    pub eps_pe_c: f64,
    /// Rényi order, in `(1, 2)`.
    pub a: f64,
}

impl SecurityParams {
    pub fn validate(&self) -> Result<()> {
        let unit = |name: &'static str, v: f64| {
            if v > 0.0 && v < 1.0 {
                Ok(())
            } else {
                Err(invalid(name, format!("must lie in (0, 1), got {v}")))
            }
        };
        if !(self.n >= 1.0 && self.n.is_finite()) {
            return Err(invalid("n", format!("must be a finite count ≥ 1, got {}", self.n)));
        }
        unit("eps_phys_na", self.eps_phys_na)?;
        unit("eps_tom", self.eps_tom)?;
        unit("eps_ec", self.eps_ec)?;
        unit("eps_ec_c", self.eps_ec_c)?;
        unit("eps_pe_c", self.eps_pe_c)?;
        unit("eps", self.eps)?;
        if !(self.a > 1.0 && self.a < 2.0) {
            return Err(invalid("a", format!("must lie in (1, 2), got {}", self.a)));
        }
        if self.eps_tom >= self.eps_phys_na / 2.0 {
            return Err(invalid("eps_tom", format!("need eps_tom < eps_phys_na/2, got {} ≥ {}", self.eps_tom, self.eps_phys_na / 2.0)));
        }
        let root = (2.0 * self.eps_tom / self.eps_phys_na).sqrt();
        if self.eps >= 1.0 - root {
            return Err(invalid("eps", format!("need eps < 1 − √(2 eps_tom/eps_phys_na) = {}", 1.0 - root)));
        }
        Ok(())
    }

    /// `ε^phys = ε + √(2ε^tom/ε^phys_NA)`.
    pub fn eps_phys(&self) -> f64 {
        self.eps + (2.0 * self.eps_tom / self.eps_phys_na).sqrt()
    }

    pub fn with_a(self, a: f64) -> Self {
        Self { a, ..self }
    }

    pub fn with_n(self, n: f64) -> Self {
        Self { n, ..self }
    }
}

/// Honest runs abort with probability below `1 − ε^phys_NA`.
pub fn completeness_check(sec: &SecurityParams) -> bool {
    1.0 - sec.eps_pe_c - sec.eps_ec_c > sec.eps_phys_na
}

/// Round-type probabilities: `p^PE = (1 − p^key) p̃^PE`, `p^tom = (1 − p^key)(1 − p̃^PE)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Probabilities {
    pub p_key: f64,
    pub p_pe_cond: f64,
}

impl Probabilities {
    pub fn p_pe(&self) -> f64 {
        (1.0 - self.p_key) * self.p_pe_cond
    }

    pub fn p_tom(&self) -> f64 {
        (1.0 - self.p_key) * (1.0 - self.p_pe_cond)
    }
}

/// Every term of the finite-size bound, kept for diagnostics.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FiniteTerms {
    pub f_p0: f64,
    pub delta_pe: f64,
    pub delta_tom: f64,
    pub second_order: f64,
    pub third_order: f64,
    pub max_entropy: f64,
    pub sqrt_n: f64,
    pub inv_n: f64,
    pub leak: f64,
}

impl FiniteTerms {
    pub fn rate(&self) -> f64 {
        self.f_p0
            - self.delta_pe
            - self.delta_tom
            - self.second_order
            - self.third_order
            - self.max_entropy
            - self.sqrt_n
            - self.inv_n
            - self.leak
    }
}

/// Finite-size rate split into its terms. `leak_rate` is leakage per round.
pub fn finite_key_terms(
    cert: &DualCertificate,
    stats: &HonestStatistics,
    sec: &SecurityParams,
    probs: Probabilities,
    leak_rate: f64,
    d_o: f64,
) -> Result<FiniteTerms> {
    sec.validate()?;
    let mt = min_tradeoff_from_crossover(cert, probs.p_key, probs.p_pe_cond)?;
    finite_key_terms_with(cert, &mt, stats, sec, leak_rate, d_o)
}

/// As [`finite_key_terms`] for a prebuilt min-tradeoff function.
pub fn finite_key_terms_with(
    cert: &DualCertificate,
    mt: &MinTradeoff,
    stats: &HonestStatistics,
    sec: &SecurityParams,
    leak_rate: f64,
    d_o: f64,
) -> Result<FiniteTerms> {
    sec.validate()?;
    let probs = Probabilities { p_key: mt.p_key, p_pe_cond: mt.p_pe_cond };
    let p0 = assemble_p0(probs.p_key, probs.p_pe(), probs.p_tom(), stats)?;
    let n = sec.n;
    let a = sec.a;
    let m = stats.pe.first().map_or(0, |r| r.len()) as f64;
    let log_out = (17.0 * (m + 1.0)).log2();
    let log5 = 5f64.log2();
    let na_gap = sec.eps_phys_na - sec.eps_tom;
    let e2 = sec.eps * sec.eps;
    let v = eat_v(mt, d_o);
    let g16 = gamma_fn(sec.eps / 16.0)?;
    let g4 = gamma_fn(sec.eps / 4.0)?;
    let sqrt_n = ((0.5 * (32.0 / (e2 * na_gap)).ln()).sqrt() * log5
        + (0.5 * (512.0 / (e2 * na_gap)).ln()).sqrt() * log_out)
        / n.sqrt();
    let inv_n = (g16 / (a - 1.0)
        + a / (a - 1.0) * (1.0 / na_gap).log2()
        + 2.0 * (1.0 / sec.eps_phys()).log2()
        + 2.0 * g4
        + 3.0 * g16)
        / n;
    Ok(FiniteTerms {
        f_p0: f_at_p0(cert, stats, probs.p_key),
        delta_pe: delta_tol_pe(mt, &p0, n, sec.eps_pe_c)?,
        delta_tom: delta_tol_tom(mt, &p0, n, sec.eps_tom)?,
        second_order: (a - 1.0) * std::f64::consts::LN_2 / 2.0 * v * v,
        third_order: (a - 1.0).powi(2) * eat_ka(mt, d_o, a)?,
        max_entropy: probs.p_pe() * log5 + (1.0 - probs.p_key) * log_out,
        sqrt_n,
        inv_n,
        leak: leak_rate,
    })
}

/// Finite-size key rate in bits per round; may be negative.
pub fn finite_key_rate(
    cert: &DualCertificate,
    stats: &HonestStatistics,
    sec: &SecurityParams,
    probs: Probabilities,
    leak_rate: f64,
    d_o: f64,
) -> Result<f64> {
    Ok(finite_key_terms(cert, stats, sec, probs, leak_rate, d_o)?.rate())
}

/// `G₀ + Σ ν p₀^sim + Σ ν′ p₀^tom − leak`.
pub fn asymptotic_rate(cert: &DualCertificate, stats: &HonestStatistics, leak_rate_limit: f64) -> f64 {
    cert.bound(&stats.rhs()) - leak_rate_limit
}

/// Grids for the outer rate maximization.
#[derive(Debug, Clone, PartialEq)]
pub struct RateGrid {
    pub a: Vec<f64>,
    pub p_key: Vec<f64>,
    pub p_pe_cond: Vec<f64>,
}

fn log_spaced(lo_exp: f64, hi_exp: f64, count: usize) -> Vec<f64> {
    (0..count)
        .map(|i| 10f64.powf(lo_exp + (hi_exp - lo_exp) * i as f64 / (count - 1).max(1) as f64))
        .collect()
}

impl Default for RateGrid {
    fn default() -> Self {
        Self {
            a: log_spaced(-12.0, -2.0, 21).into_iter().map(|e| 1.0 + e).collect(),
            p_key: log_spaced(-8.0, -0.7, 23).into_iter().rev().map(|e| 1.0 - e).collect(),
            p_pe_cond: vec![0.5, 0.7, 0.9],
        }
    }
}

impl RateGrid {
    pub fn validate(&self) -> Result<()> {
        if self.a.is_empty() || self.a.iter().any(|&a| !(a > 1.0 && a < 2.0)) {
            return Err(invalid("a_grid", "must be nonempty and inside (1, 2)"));
        }
        if self.p_key.is_empty() || self.p_key.iter().any(|&p| !(0.0..1.0).contains(&p)) {
            return Err(invalid("p_key_grid", "must be nonempty and inside [0, 1)"));
        }
        if self.p_pe_cond.is_empty() || self.p_pe_cond.iter().any(|&p| !(p > 0.0 && p < 1.0)) {
            return Err(invalid("p_pe_cond_grid", "must be nonempty and inside (0, 1)"));
        }
        Ok(())
    }
}

/// One certified amplitude: its honest statistics and one or more equivalent dual
/// certificates, each tagged with the `p̃^PE` it was tuned for.
#[derive(Debug, Clone)]
pub struct RateCandidate<'a> {
    pub alpha: f64,
    pub certificates: &'a [(f64, DualCertificate)],
    pub stats: &'a HonestStatistics,
    /// Duality-gap diagnostic carried into the result.
    pub gap: f64,
}

impl RateCandidate<'_> {
    /// The certificate tuned for `p_pe_cond`, or the first one.
    pub fn certificate_for(&self, p_pe_cond: f64) -> &DualCertificate {
        self.certificates
            .iter()
            .find(|(p, _)| *p == p_pe_cond)
            .or(self.certificates.first())
            .map(|(_, c)| c)
            .expect("candidate without certificates")
    }
}

/// Leakage model: `(1 + f) H(Ẑ|X̂)` per key round, optionally weighted by `p^key`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LeakModel {
    pub f_ec: f64,
    pub scale_by_p_key: bool,
}

impl LeakModel {
    pub fn rate(&self, stats: &HonestStatistics, p_key: f64) -> f64 {
        crate::honest::ec_leak_rate(&stats.ec, self.f_ec, p_key, self.scale_by_p_key)
    }
}

/// A fully evaluated configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct RatePoint {
    pub alpha: f64,
    pub a: f64,
    pub p_key: f64,
    pub p_pe_cond: f64,
    pub n: f64,
    pub asymptotic_rate: f64,
    pub finite_rate: f64,
    pub delta_pe: f64,
    pub delta_tom: f64,
    pub gap: f64,
    pub eps_prime: f64,
    pub lambda_min: f64,
}

impl RatePoint {
    pub fn is_positive(&self) -> bool {
        self.finite_rate > 0.0
    }
}

/// Exhaustive grid maximization of the finite rate. Ties go to the smallest `a`, then
/// the largest `p^key`, then the smallest `α`.
pub fn optimize_rate(
    candidates: &[RateCandidate<'_>],
    grid: &RateGrid,
    sec: &SecurityParams,
    leak: LeakModel,
    d_o: f64,
) -> Result<RatePoint> {
    grid.validate()?;
    if candidates.is_empty() || candidates.iter().any(|c| c.certificates.is_empty()) {
        return Err(invalid("alpha_grid", "no certified amplitudes to search"));
    }
    let mut alphas: Vec<&RateCandidate<'_>> = candidates.iter().collect();
    alphas.sort_by(|x, y| x.alpha.total_cmp(&y.alpha));
    let mut a_sorted = grid.a.clone();
    a_sorted.sort_by(f64::total_cmp);
    let mut pk_sorted = grid.p_key.clone();
    pk_sorted.sort_by(|x, y| y.total_cmp(x));

    let mut best: Option<RatePoint> = None;
    for &a in &a_sorted {
        let sec_a = sec.with_a(a);
        sec_a.validate()?;
        for &p_key in &pk_sorted {
            for cand in &alphas {
                for &p_pe_cond in &grid.p_pe_cond {
                    let cert = cand.certificate_for(p_pe_cond);
                    let mt = min_tradeoff_from_crossover(cert, p_key, p_pe_cond)?;
                    let terms = finite_key_terms_with(cert, &mt, cand.stats, &sec_a, leak.rate(cand.stats, p_key), d_o)?;
                    let rate = terms.rate();
                    if best.as_ref().is_none_or(|b| rate > b.finite_rate) {
                        best = Some(RatePoint {
                            alpha: cand.alpha,
                            a,
                            p_key,
                            p_pe_cond,
                            n: sec.n,
                            asymptotic_rate: asymptotic_rate(cert, cand.stats, leak.rate(cand.stats, 1.0)),
                            finite_rate: rate,
                            delta_pe: terms.delta_pe,
                            delta_tom: terms.delta_tom,
                            gap: cand.gap,
                            eps_prime: cert.eps_prime,
                            lambda_min: cert.lambda_min,
                        });
                    }
                }
            }
        }
    }
    Ok(best.expect("nonempty grids"))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn reference_params() -> SecurityParams {
        SecurityParams {
            n: 1e12,
            eps: 1e-9,
            eps_phys_na: 1e-3,
            eps_tom: 1e-8,
            eps_ec: 1e-10,
            eps_ec_c: 1e-6,
            eps_pe_c: 1e-6,
            a: 1.0 + 1e-6,
        }
    }

    #[test]
    fn gamma_values() {
        assert_eq!(gamma_fn(1.0).unwrap(), 0.0);
        assert!((gamma_fn(0.6).unwrap() - 5f64.log2()).abs() < 1e-14);
        assert!((gamma_fn(1e-9).unwrap() - (-(5e-19f64).log2())).abs() < 1e-9);
        assert!(gamma_fn(0.0).is_err());
        assert!(gamma_fn(1.5).is_err());
    }

    #[test]
    fn deviation_trivial_cases() {
        let pi = [0.2, 0.3, 0.5];
        assert_eq!(multinoulli_deviation(&pi, &[0.0; 3], 1e4, 1e-3).unwrap(), 0.0);
        let d = multinoulli_deviation(&[0.0, 0.0, 1.0], &[-1.0, -3.0, 0.0], 100.0, 0.01).unwrap();
        assert!((d - 3.0 * 3.0 / 100.0 * 200f64.log2()).abs() < 1e-14);
    }

    #[test]
    fn security_preconditions() {
        assert!(reference_params().validate().is_ok());
        let bad = SecurityParams { eps_tom: 6e-4, ..reference_params() };
        assert!(bad.validate().unwrap_err().to_string().contains("eps_tom"));
        let bad = SecurityParams { eps: 0.999999, ..reference_params() };
        assert!(bad.validate().unwrap_err().to_string().contains("eps"));
        assert!(reference_params().with_a(2.0).validate().is_err());
    }

    #[test]
    fn completeness() {
        let mut s = reference_params();
        s.eps_pe_c = 1e-6;
        s.eps_ec_c = 1e-6;
        assert!(completeness_check(&s));
        s.eps_pe_c = 0.5;
        s.eps_ec_c = 0.5;
        assert!(!completeness_check(&s));
    }

    #[test]
    fn default_grid_brackets_schedule() {
        let g = RateGrid::default();
        g.validate().unwrap();
        for n in [1e10f64, 1e12, 1e15] {
            let a = 1.0 + n.powf(-0.75);
            let pk = 1.0 - n.powf(-0.5);
            assert!(g.a.iter().any(|&x| x <= a) && g.a.iter().any(|&x| x >= a));
            assert!(g.p_key.iter().any(|&x| x <= pk) && g.p_key.iter().any(|&x| x >= pk));
        }
    }
}
