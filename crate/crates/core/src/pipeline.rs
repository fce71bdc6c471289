//! End-to-end certification of operating points.

use crate::convex::{frank_wolfe, DualCertificate, FwOptions, FwResult, ObjectiveContext};
use crate::error::{invalid, Result};
use crate::finite::asymptotic_rate;
use crate::fock::{constraint_matrices, ModulationScheme};
use crate::honest::{ec_leak_rate, HonestChannel, HonestStatistics};
use crate::linalg::CMat;
use crate::tradeoff::rebalance_dual;

/// `α ∈ [0.5, 1.5]` in steps of 0.05.
pub fn default_alpha_grid() -> Vec<f64> {
    (0..=20).map(|k| 0.5 + 0.05 * k as f64).collect()
}

/// Everything that depends only on the PE geometry and the cutoff, shared by all
/// amplitudes and channels.
pub struct Certifier {
    pub delta_amp: f64,
    pub delta_mod: f64,
    pub cutoff: usize,
    pub options: FwOptions,
    ctx: ObjectiveContext,
    constraints: Vec<CMat>,
}

/// A certified operating point.
#[derive(Debug, Clone)]
pub struct Certified {
    pub scheme: ModulationScheme,
    pub channel: HonestChannel,
    pub stats: HonestStatistics,
    pub fw: FwResult,
    /// Asymptotic leakage per round, `(1 + f) H(Ẑ|X̂)`.
    pub leak_limit: f64,
}

impl Certified {
    pub fn certificate(&self) -> &DualCertificate {
        &self.fw.certificate
    }

    pub fn asymptotic_rate(&self) -> f64 {
        asymptotic_rate(&self.fw.certificate, &self.stats, self.leak_limit)
    }
}

impl Certifier {
    pub fn new(delta_amp: f64, delta_mod: f64, cutoff: usize, options: FwOptions) -> Result<Self> {
        let probe = ModulationScheme::new(1.0, delta_amp, delta_mod, cutoff)?;
        Ok(Self {
            delta_amp,
            delta_mod,
            cutoff,
            options,
            ctx: ObjectiveContext::new(cutoff)?,
            constraints: constraint_matrices(&probe)?,
        })
    }

    pub fn context(&self) -> &ObjectiveContext {
        &self.ctx
    }

    /// Constraint operators in certificate order; they do not depend on `α`.
    pub fn constraints(&self) -> &[CMat] {
        &self.constraints
    }

    pub fn scheme(&self, alpha: f64) -> Result<ModulationScheme> {
        ModulationScheme::new(alpha, self.delta_amp, self.delta_mod, self.cutoff)
    }

    /// Runs Frank-Wolfe at one amplitude. The stopping gap is measured relative to the
    /// key rate `bound − leak`.
    pub fn certify(&self, alpha: f64, channel: HonestChannel, f_ec: f64) -> Result<Certified> {
        if !(f_ec.is_finite() && f_ec >= 0.0) {
            return Err(invalid("f_ec", format!("must be ≥ 0, got {f_ec}")));
        }
        let scheme = self.scheme(alpha)?;
        let stats = HonestStatistics::compute(&channel, &scheme)?;
        let leak_limit = ec_leak_rate(&stats.ec, f_ec, 1.0, false);
        let opts = FwOptions { gap_offset: leak_limit, ..self.options };
        let fw = frank_wolfe(&self.ctx, &self.constraints, &stats.rhs(), &opts)?;
        Ok(Certified { scheme, channel, stats, fw, leak_limit })
    }

    /// Equivalent certificates tuned for each conditional PE probability.
    pub fn tuned_certificates(&self, point: &Certified, p_pe_grid: &[f64]) -> Result<Vec<(f64, DualCertificate)>> {
        p_pe_grid
            .iter()
            .map(|&p| Ok((p, rebalance_dual(point.certificate(), &self.ctx, &self.constraints, &point.stats, p)?)))
            .collect()
    }
}

/// Maximizes `f` over a sorted grid assuming unimodality, by discrete golden-section
/// search. Returns the argmax index and every evaluated `(index, value)`.
pub fn unimodal_grid_max<F>(len: usize, mut f: F) -> Result<(usize, Vec<(usize, f64)>)>
where
    F: FnMut(usize) -> Result<f64>,
{
    if len == 0 {
        return Err(invalid("grid", "must be nonempty"));
    }
    let mut seen: Vec<(usize, f64)> = Vec::new();
    let mut eval = |i: usize, seen: &mut Vec<(usize, f64)>| -> Result<f64> {
        if let Some(&(_, v)) = seen.iter().find(|(j, _)| *j == i) {
            return Ok(v);
        }
        let v = f(i)?;
        seen.push((i, v));
        Ok(v)
    };
    let (mut lo, mut hi) = (0usize, len - 1);
    while hi - lo > 2 {
        let m1 = lo + (hi - lo) / 3;
        let m2 = hi - (hi - lo) / 3;
        if eval(m1, &mut seen)? < eval(m2, &mut seen)? {
            lo = m1 + 1;
        } else {
            hi = m2 - 1;
        }
    }
    for i in lo..=hi {
        eval(i, &mut seen)?;
    }
    let best = seen
        .iter()
        .copied()
        .fold(None::<(usize, f64)>, |acc, (i, v)| match acc {
            Some((bi, bv)) if bv > v || (bv == v && bi < i) => Some((bi, bv)),
            _ => Some((i, v)),
        })
        .map(|(i, _)| i)
        .expect("nonempty grid");
    seen.sort_by_key(|&(i, _)| i);
    Ok((best, seen))
}
