//! Honest-implementation statistics of the thermal-loss channel.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{invalid, Error, Result};
use crate::fock::{alice_marginal, alice_states, ic_povm, wedge_angles, ModulationScheme};
use crate::linalg::{trace_prod, C64};
use crate::special::{gauss_legendre, integrate};

/// Fiber loss used throughout, in dB/km.
pub const DEFAULT_ATTENUATION_DB_PER_KM: f64 = 0.2;

const ANGULAR_NODES: usize = 64;
const RADIAL_TOL: f64 = 1e-13;

/// Fiber channel with excess noise.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HonestChannel {
    pub distance_km: f64,
    pub attenuation_db_per_km: f64,
    pub excess_noise: f64,
}

impl HonestChannel {
    pub fn new(distance_km: f64, attenuation_db_per_km: f64, excess_noise: f64) -> Result<Self> {
        if !(distance_km.is_finite() && distance_km >= 0.0) {
            return Err(invalid("distance_km", format!("must be ≥ 0, got {distance_km}")));
        }
        if !(attenuation_db_per_km.is_finite() && attenuation_db_per_km > 0.0) {
            return Err(invalid("attenuation_db_per_km", format!("must be > 0, got {attenuation_db_per_km}")));
        }
        if !(excess_noise.is_finite() && excess_noise >= 0.0) {
            return Err(invalid("excess_noise", format!("must be ≥ 0, got {excess_noise}")));
        }
        Ok(Self { distance_km, attenuation_db_per_km, excess_noise })
    }

    pub fn with_distance(distance_km: f64, excess_noise: f64) -> Result<Self> {
        Self::new(distance_km, DEFAULT_ATTENUATION_DB_PER_KM, excess_noise)
    }

    pub fn transmittance(&self) -> f64 {
        transmittance(self.distance_km, self.attenuation_db_per_km)
    }

    /// Heterodyne outcome variance per complex plane, `1 + ηξ/2`.
    pub fn variance(&self) -> f64 {
        1.0 + self.transmittance() * self.excess_noise / 2.0
    }
}

/// `η = 10^{−ωD/10}`.
pub fn transmittance(distance_km: f64, attenuation_db_per_km: f64) -> f64 {
    10f64.powf(-attenuation_db_per_km * distance_km / 10.0)
}

/// Integrates `γ exp(−|γe^{iθ} − β|²/v)/(4πv)` over a wedge–ring region.
struct RegionIntegrator {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl RegionIntegrator {
    fn new() -> Self {
        let (nodes, weights) = gauss_legendre(ANGULAR_NODES);
        Self { nodes, weights }
    }

    fn integrate(&self, beta: C64, v: f64, r_lo: f64, r_hi: f64, th_lo: f64, th_hi: f64) -> Result<f64> {
        let b2 = beta.norm_sqr();
        let bn = beta.norm();
        let b_arg = beta.arg();
        let half = 0.5 * (th_hi - th_lo);
        let mid = 0.5 * (th_hi + th_lo);
        let angles: Vec<(f64, f64)> = self
            .nodes
            .iter()
            .zip(&self.weights)
            .map(|(x, w)| ((mid + half * x - b_arg).cos(), w * half))
            .collect();
        let integrand = |g: f64| {
            let mut s = 0.0;
            for &(cs, w) in &angles {
                s += w * (-(g * g + b2 - 2.0 * g * bn * cs) / v).exp();
            }
            g * s / (4.0 * PI * v)
        };
        let hi = if r_hi.is_infinite() { r_lo.max(bn) + (v * 800.0).sqrt() } else { r_hi };
        if hi <= r_lo {
            return Ok(0.0);
        }
        // split at the peak of the radial profile to help the adaptive rule
        let peak = bn.clamp(r_lo, hi);
        let mut total = 0.0;
        for (a, b) in [(r_lo, peak), (peak, hi)] {
            if b > a {
                total += integrate(integrand, a, b, RADIAL_TOL)
                    .map_err(|e| Error::Quadrature { estimate: e.estimate, error: e.error })?;
            }
        }
        Ok(total)
    }
}

/// Parameter-estimation statistics `p₀^sim(x, z)`, rows `x`, columns `z`.
pub fn pe_statistics(channel: &HonestChannel, scheme: &ModulationScheme) -> Result<Vec<Vec<f64>>> {
    let quad = RegionIntegrator::new();
    let eta_sqrt = channel.transmittance().sqrt();
    let v = channel.variance();
    alice_states(scheme.alpha)
        .iter()
        .map(|phi| {
            (0..scheme.m())
                .map(|z| {
                    let (r_lo, r_hi) = scheme.pe_radii(z);
                    let (a, b) = wedge_angles(z % 4);
                    quad.integrate(phi * eta_sqrt, v, r_lo, r_hi, a, b)
                })
                .collect()
        })
        .collect()
}

/// Key-round statistics `p₀^EC(x, z)` over the four full wedges.
pub fn key_statistics(channel: &HonestChannel, alpha: f64) -> Result<Vec<Vec<f64>>> {
    let quad = RegionIntegrator::new();
    let eta_sqrt = channel.transmittance().sqrt();
    let v = channel.variance();
    alice_states(alpha)
        .iter()
        .map(|phi| {
            (0..4)
                .map(|z| {
                    let (a, b) = wedge_angles(z);
                    quad.integrate(phi * eta_sqrt, v, 0.0, f64::INFINITY, a, b)
                })
                .collect()
        })
        .collect()
}

/// Tomography statistics `Tr[Γ_{x′} ρ_A]`.
pub fn tom_statistics(alpha: f64) -> Vec<f64> {
    let rho = alice_marginal(alpha);
    ic_povm().iter().map(|g| trace_prod(g, &rho)).collect()
}

/// Distribution over the round alphabet: `4m` PE symbols, 16 tomography symbols,
/// then the all-⊥ symbol.
#[derive(Debug, Clone, PartialEq)]
pub struct AssembledDistribution {
    pub pe: Vec<f64>,
    pub tom: Vec<f64>,
    pub rest: f64,
}

impl AssembledDistribution {
    pub fn to_vec(&self) -> Vec<f64> {
        let mut v = self.pe.clone();
        v.extend_from_slice(&self.tom);
        v.push(self.rest);
        v
    }
}

/// All honest distributions for one (channel, scheme) pair.
#[derive(Debug, Clone, PartialEq)]
pub struct HonestStatistics {
    pub pe: Vec<Vec<f64>>,
    pub ec: Vec<Vec<f64>>,
    pub tom: Vec<f64>,
}

impl HonestStatistics {
    pub fn compute(channel: &HonestChannel, scheme: &ModulationScheme) -> Result<Self> {
        Ok(Self {
            pe: pe_statistics(channel, scheme)?,
            ec: key_statistics(channel, scheme.alpha)?,
            tom: tom_statistics(scheme.alpha),
        })
    }

    /// `p₀^sim` flattened in constraint order `(0,0), (0,1), …, (3, m−1)`.
    pub fn pe_flat(&self) -> Vec<f64> {
        self.pe.iter().flatten().copied().collect()
    }

    /// Right-hand side of the constraint system: PE cells then tomography cells.
    pub fn rhs(&self) -> Vec<f64> {
        let mut b = self.pe_flat();
        b.extend_from_slice(&self.tom);
        b
    }
}

/// Embeds the conditional statistics into the round distribution.
pub fn assemble_p0(p_key: f64, p_pe: f64, p_tom: f64, stats: &HonestStatistics) -> Result<AssembledDistribution> {
    for (name, p) in [("p_key", p_key), ("p_pe", p_pe), ("p_tom", p_tom)] {
        if !(0.0..=1.0).contains(&p) {
            return Err(invalid(name, format!("must lie in [0, 1], got {p}")));
        }
    }
    if (p_key + p_pe + p_tom - 1.0).abs() > 1e-12 {
        return Err(invalid("p_key", format!("p_key + p_pe + p_tom = {} ≠ 1", p_key + p_pe + p_tom)));
    }
    let pe: Vec<f64> = stats.pe_flat().iter().map(|p| p * p_pe).collect();
    let tom: Vec<f64> = stats.tom.iter().map(|p| p * p_tom).collect();
    let rest = 1.0 - pe.iter().sum::<f64>() - tom.iter().sum::<f64>();
    Ok(AssembledDistribution { pe, tom, rest: rest.max(0.0) })
}

/// `H(Ẑ|X̂)` in bits from the joint key-round distribution.
pub fn conditional_entropy(ec: &[Vec<f64>]) -> f64 {
    let mut h = 0.0;
    for row in ec {
        let px: f64 = row.iter().sum();
        for &p in row {
            if p > 0.0 {
                h -= p * (p / px).log2();
            }
        }
    }
    h
}

/// Error-correction leakage per round, `p_key·(1+f)·H(Ẑ|X̂)` (or without `p_key`).
pub fn ec_leak_rate(ec: &[Vec<f64>], f: f64, p_key: f64, scale_by_p_key: bool) -> f64 {
    let w = if scale_by_p_key { p_key } else { 1.0 };
    w * (1.0 + f) * conditional_entropy(ec)
}

/// Monte Carlo draw of `n` test rounds: frequencies of the `4m` PE cells.
pub fn sample_rounds(channel: &HonestChannel, scheme: &ModulationScheme, n: u64, seed: u64) -> Vec<f64> {
    let counts = sample_counts(channel, scheme, n, seed);
    counts.iter().map(|&k| k as f64 / n as f64).collect()
}

/// Counts behind [`sample_rounds`].
pub fn sample_counts(channel: &HonestChannel, scheme: &ModulationScheme, n: u64, seed: u64) -> Vec<u64> {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let states = alice_states(scheme.alpha);
    let eta_sqrt = channel.transmittance().sqrt();
    let normal = Normal::new(0.0, (channel.variance() / 2.0).sqrt()).expect("positive variance");
    let m = scheme.m();
    let mut counts = vec![0u64; 4 * m];
    for _ in 0..n {
        let x = rng.random_range(0..4usize);
        let mean = states[x] * eta_sqrt;
        let yr = mean.re + normal.sample(&mut rng);
        let yi = mean.im + normal.sample(&mut rng);
        counts[x * m + pe_label(scheme, yr, yi)] += 1;
    }
    counts
}

/// Parameter-estimation label of a heterodyne outcome.
pub fn pe_label(scheme: &ModulationScheme, re: f64, im: f64) -> usize {
    let wedge = key_label(re, im);
    let r = re.hypot(im);
    let rings = scheme.rings();
    let k = if r >= scheme.delta_amp {
        rings
    } else {
        ((r / scheme.delta_mod).floor() as usize).min(rings - 1)
    };
    wedge + 4 * k
}

/// Key wedge of a heterodyne outcome.
pub fn key_label(re: f64, im: f64) -> usize {
    let t = im.atan2(re).rem_euclid(2.0 * PI);
    ((t + PI / 4.0) / (PI / 2.0)).floor() as usize % 4
}
