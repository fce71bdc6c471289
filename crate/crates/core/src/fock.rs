//! Truncated Fock-space operators and maps.
//!
//! Bob's mode is truncated to `cutoff` photon-number states. Composite spaces are
//! ordered Alice ⊗ Bob ⊗ key register, with the row-major index `(a·N_c + b)·4 + z`.

use std::f64::consts::{FRAC_PI_4, PI};

use crate::error::{invalid, Error, Result};
use crate::linalg::{c, eigh, hermiticity_residual, kron, CMat, CVec, C64};
use crate::special::{gamma_p, gamma_q, ln_factorial, ln_gamma};

/// Eigenvalues of region operators in `[-SQRT_CLAMP, 0)` are treated as zero.
pub const SQRT_CLAMP: f64 = 1e-8;

/// Protocol geometry: amplitude, parameter-estimation binning and cutoff.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModulationScheme {
    pub alpha: f64,
    /// Outer amplitude cut Δ.
    pub delta_amp: f64,
    /// Ring width δ.
    pub delta_mod: f64,
    pub cutoff: usize,
}

impl ModulationScheme {
    pub fn new(alpha: f64, delta_amp: f64, delta_mod: f64, cutoff: usize) -> Result<Self> {
        if !(alpha.is_finite() && alpha > 0.0) {
            return Err(invalid("alpha", format!("must be positive, got {alpha}")));
        }
        if !(delta_amp.is_finite() && delta_amp > 0.0) {
            return Err(invalid("delta_amp", format!("must be positive, got {delta_amp}")));
        }
        if !(delta_mod.is_finite() && delta_mod > 0.0) {
            return Err(invalid("delta_mod", format!("must be positive, got {delta_mod}")));
        }
        let ratio = delta_amp / delta_mod;
        if (ratio - ratio.round()).abs() > 1e-9 || ratio.round() < 1.0 {
            return Err(invalid(
                "delta_mod",
                format!("delta_amp / delta_mod = {ratio} is not a positive integer"),
            ));
        }
        if cutoff < 2 {
            return Err(invalid("cutoff", format!("must be at least 2, got {cutoff}")));
        }
        Ok(Self { alpha, delta_amp, delta_mod, cutoff })
    }

    /// Number of rings below Δ.
    pub fn rings(&self) -> usize {
        (self.delta_amp / self.delta_mod).round() as usize
    }

    /// Number of parameter-estimation labels, `4Δ/δ + 4`.
    pub fn m(&self) -> usize {
        4 * self.rings() + 4
    }

    /// Alice's four coherent amplitudes, in the order {α, −α, iα, −iα}.
    pub fn states(&self) -> [C64; 4] {
        alice_states(self.alpha)
    }

    /// Dimension of the joint Alice–Bob space.
    pub fn joint_dim(&self) -> usize {
        4 * self.cutoff
    }

    /// Radial interval `[lo, hi)` of parameter-estimation label `z` (`hi = ∞` for tails).
    pub fn pe_radii(&self, z: usize) -> (f64, f64) {
        let k = z / 4;
        if k == self.rings() {
            (self.delta_amp, f64::INFINITY)
        } else {
            (self.delta_mod * k as f64, self.delta_mod * (k + 1) as f64)
        }
    }
}

pub fn alice_states(alpha: f64) -> [C64; 4] {
    [c(alpha, 0.0), c(-alpha, 0.0), c(0.0, alpha), c(0.0, -alpha)]
}

/// Angular interval of key wedge `j`: `[π(2j−1)/4, π(2j+1)/4)`.
pub fn wedge_angles(j: usize) -> (f64, f64) {
    let jf = j as f64;
    (FRAC_PI_4 * (2.0 * jf - 1.0), FRAC_PI_4 * (2.0 * jf + 1.0))
}

/// Dense Hermitian operator on a labelled tensor-product space.
#[derive(Debug, Clone, PartialEq)]
pub struct FockOperator {
    pub dims: Vec<usize>,
    pub data: CMat,
}

impl FockOperator {
    pub fn new(dims: Vec<usize>, data: CMat) -> Result<Self> {
        let total: usize = dims.iter().product();
        if data.nrows() != total || data.ncols() != total {
            return Err(Error::Dimension(format!(
                "dims {dims:?} multiply to {total}, matrix is {}x{}",
                data.nrows(),
                data.ncols()
            )));
        }
        Ok(Self { dims, data })
    }

    pub fn hermiticity_residual(&self) -> f64 {
        hermiticity_residual(&self.data)
    }
}

/// Completely positive map `ρ ↦ Σ_k K_k ρ K_k†`.
#[derive(Debug, Clone)]
pub struct KrausMap {
    pub kraus_ops: Vec<CMat>,
    pub in_dim: usize,
    pub out_dim: usize,
}

impl KrausMap {
    pub fn new(kraus_ops: Vec<CMat>) -> Result<Self> {
        let first = kraus_ops.first().ok_or_else(|| Error::Dimension("empty Kraus list".into()))?;
        let (out_dim, in_dim) = first.shape();
        if kraus_ops.iter().any(|k| k.shape() != (out_dim, in_dim)) {
            return Err(Error::Dimension("Kraus operators differ in shape".into()));
        }
        Ok(Self { kraus_ops, in_dim, out_dim })
    }

    pub fn apply(&self, rho: &CMat) -> CMat {
        let mut out = CMat::zeros(self.out_dim, self.out_dim);
        for k in &self.kraus_ops {
            out += k * rho * k.adjoint();
        }
        out
    }

    pub fn adjoint_apply(&self, y: &CMat) -> CMat {
        let mut out = CMat::zeros(self.in_dim, self.in_dim);
        for k in &self.kraus_ops {
            out += k.adjoint() * y * k;
        }
        out
    }

    /// `Σ K†K`.
    pub fn kraus_sum(&self) -> CMat {
        self.adjoint_apply(&CMat::identity(self.out_dim, self.out_dim))
    }

    /// The map `self ∘ inner`.
    pub fn compose(&self, inner: &KrausMap) -> Result<KrausMap> {
        if self.in_dim != inner.out_dim {
            return Err(Error::Dimension(format!(
                "cannot compose map with input {} after output {}",
                self.in_dim, inner.out_dim
            )));
        }
        let ops = self
            .kraus_ops
            .iter()
            .flat_map(|a| inner.kraus_ops.iter().map(move |b| a * b))
            .collect();
        KrausMap::new(ops)
    }
}

/// Truncated coherent state `|γe^{iθ}⟩`: components `γ^k e^{−γ²/2} e^{ikθ}/√k!`.
pub fn coherent_fock_vector(amplitude: C64, cutoff: usize) -> CVec {
    let mut v = CVec::zeros(cutoff);
    if cutoff == 0 {
        return v;
    }
    let mut term = c((-amplitude.norm_sqr() / 2.0).exp(), 0.0);
    v[0] = term;
    for k in 1..cutoff {
        term *= amplitude / (k as f64).sqrt();
        v[k] = term;
    }
    v
}

/// `⟨b|a⟩ = exp(−(|a|²+|b|²)/2 + conj(b)·a)`.
pub fn coherent_overlap(a: C64, b: C64) -> C64 {
    (c(-(a.norm_sqr() + b.norm_sqr()) / 2.0, 0.0) + b.conj() * a).exp()
}

/// Alice's reduced state `ρ_A(x, y) = ¼⟨φ_y|φ_x⟩`.
pub fn alice_marginal(alpha: f64) -> CMat {
    let s = alice_states(alpha);
    CMat::from_fn(4, 4, |x, y| coherent_overlap(s[x], s[y]) * 0.25)
}

/// `(1/π)∫_a^b∫_{θ1}^{θ2} ⟨m|γe^{iθ}⟩⟨γe^{iθ}|n⟩ γ dγ dθ` in closed form.
pub fn region_operator(cutoff: usize, r_lo: f64, r_hi: f64, th_lo: f64, th_hi: f64) -> CMat {
    let lnf: Vec<f64> = (0..cutoff).map(ln_factorial).collect();
    let mut r = CMat::zeros(cutoff, cutoff);
    for m in 0..cutoff {
        for n in m..cutoff {
            let s = (m + n) as f64 / 2.0 + 1.0;
            let mass = if r_hi.is_infinite() {
                gamma_q(s, r_lo * r_lo)
            } else {
                gamma_p(s, r_hi * r_hi) - gamma_p(s, r_lo * r_lo)
            };
            let radial = 0.5 * mass * (ln_gamma(s) - 0.5 * (lnf[m] + lnf[n])).exp();
            let ang = angular_integral(m as i64 - n as i64, th_lo, th_hi);
            let v = ang * (radial / PI);
            r[(m, n)] = v;
            r[(n, m)] = v.conj();
        }
    }
    r
}

fn angular_integral(k: i64, th_lo: f64, th_hi: f64) -> C64 {
    if k == 0 {
        c(th_hi - th_lo, 0.0)
    } else {
        let kf = k as f64;
        let diff = C64::from_polar(1.0, kf * th_hi) - C64::from_polar(1.0, kf * th_lo);
        diff / c(0.0, kf)
    }
}

/// Key-map region operator `R^z` for the full wedge `z`.
pub fn key_region_operator(z: usize, cutoff: usize) -> Result<CMat> {
    if z > 3 {
        return Err(invalid("z", format!("key label must be in 0..4, got {z}")));
    }
    let (a, b) = wedge_angles(z);
    Ok(region_operator(cutoff, 0.0, f64::INFINITY, a, b))
}

/// Parameter-estimation region operator `R̃^z`, with wedge `z mod 4` and ring `z div 4`.
pub fn pe_region_operator(z: usize, scheme: &ModulationScheme) -> Result<CMat> {
    if z >= scheme.m() {
        return Err(invalid("z", format!("label {z} is out of range 0..{}", scheme.m())));
    }
    let (r_lo, r_hi) = scheme.pe_radii(z);
    let (a, b) = wedge_angles(z % 4);
    Ok(region_operator(scheme.cutoff, r_lo, r_hi, a, b))
}

/// Square root of a PSD matrix, clamping eigenvalues in `[-SQRT_CLAMP, 0)`.
pub fn psd_sqrt(a: &CMat) -> Result<CMat> {
    let (vals, vecs) = eigh(a);
    if vals[0] < -SQRT_CLAMP {
        return Err(Error::NegativeEigenvalue(vals[0]));
    }
    let mut scaled = vecs.clone();
    for (k, &l) in vals.iter().enumerate() {
        scaled.column_mut(k).scale_mut(l.max(0.0).sqrt());
    }
    Ok(&scaled * vecs.adjoint())
}

/// Postprocessing map `G = Σ_z 1_A ⊗ √R^z ⊗ |z⟩` as a single Kraus operator.
pub fn build_g_map(cutoff: usize) -> Result<KrausMap> {
    let nb = cutoff;
    let mut g = CMat::zeros(16 * nb, 4 * nb);
    for z in 0..4 {
        let root = psd_sqrt(&key_region_operator(z, nb)?)?;
        for a in 0..4 {
            for b in 0..nb {
                for bp in 0..nb {
                    g[((a * nb + b) * 4 + z, a * nb + bp)] = root[(b, bp)];
                }
            }
        }
    }
    KrausMap::new(vec![g])
}

/// Pinching of the trailing 4-dim key register as Kraus operators `1 ⊗ |z⟩⟨z|`.
pub fn pinching_map(outer_dim: usize) -> KrausMap {
    let ops = (0..4)
        .map(|z| {
            let mut p = CMat::zeros(4, 4);
            p[(z, z)] = c(1.0, 0.0);
            kron(&CMat::identity(outer_dim, outer_dim), &p)
        })
        .collect();
    KrausMap::new(ops).expect("pinching operators share a shape")
}

/// Zeroes every block off-diagonal in the trailing key register.
pub fn pinching_z(op: &FockOperator) -> Result<FockOperator> {
    if op.dims.last() != Some(&4) {
        return Err(Error::MissingKeyRegister);
    }
    let data = CMat::from_fn(op.data.nrows(), op.data.ncols(), |i, j| {
        if i % 4 == j % 4 {
            op.data[(i, j)]
        } else {
            c(0.0, 0.0)
        }
    });
    Ok(FockOperator { dims: op.dims.clone(), data })
}

/// The 16 rank-one projectors whose symmetric orthogonalization gives the IC-POVM.
fn povm_seed_vectors() -> Vec<CVec> {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let mut out = Vec::with_capacity(16);
    for j in 0..4 {
        let mut v = CVec::zeros(4);
        v[j] = c(1.0, 0.0);
        out.push(v);
    }
    for phase in [c(1.0, 0.0), c(0.0, 1.0)] {
        for j in 0..4 {
            for k in j + 1..4 {
                let mut v = CVec::zeros(4);
                v[j] = c(s, 0.0);
                v[k] = phase * s;
                out.push(v);
            }
        }
    }
    out
}

/// Informationally complete 16-outcome POVM on Alice's 4-dim space.
pub fn ic_povm() -> Vec<CMat> {
    let proj: Vec<CMat> = povm_seed_vectors().iter().map(|v| v * v.adjoint()).collect();
    let s = proj.iter().fold(CMat::zeros(4, 4), |acc, p| acc + p);
    let (vals, vecs) = eigh(&s);
    let mut scaled = vecs.clone();
    for (k, &l) in vals.iter().enumerate() {
        scaled.column_mut(k).scale_mut(1.0 / l.sqrt());
    }
    let s_inv_half = &scaled * vecs.adjoint();
    proj.iter().map(|p| &s_inv_half * p * &s_inv_half).collect()
}

/// Label of one row of the constraint system.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ConstraintLabel {
    /// `|x⟩⟨x| ⊗ R̃^z`.
    Pe { x: usize, z: usize },
    /// `Γ_{x′} ⊗ 1_B`.
    Tom { x: usize },
}

/// The `4m` parameter-estimation operators followed by the 16 tomography operators.
pub fn constraint_operators(scheme: &ModulationScheme) -> Result<Vec<(FockOperator, ConstraintLabel)>> {
    let nb = scheme.cutoff;
    let dims = vec![4, nb];
    let mut out = Vec::with_capacity(4 * scheme.m() + 16);
    let regions: Vec<CMat> = (0..scheme.m()).map(|z| pe_region_operator(z, scheme)).collect::<Result<_>>()?;
    for x in 0..4 {
        let mut proj = CMat::zeros(4, 4);
        proj[(x, x)] = c(1.0, 0.0);
        for (z, r) in regions.iter().enumerate() {
            out.push((FockOperator::new(dims.clone(), kron(&proj, r))?, ConstraintLabel::Pe { x, z }));
        }
    }
    let id_b = CMat::identity(nb, nb);
    for (x, g) in ic_povm().iter().enumerate() {
        out.push((FockOperator::new(dims.clone(), kron(g, &id_b))?, ConstraintLabel::Tom { x }));
    }
    Ok(out)
}

/// Bare matrices of [`constraint_operators`].
pub fn constraint_matrices(scheme: &ModulationScheme) -> Result<Vec<CMat>> {
    Ok(constraint_operators(scheme)?.into_iter().map(|(op, _)| op.data).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{identity_residual, max_abs};

    #[test]
    fn scheme_validation() {
        assert!(ModulationScheme::new(0.9, 0.9, 0.9, 10).is_ok());
        assert_eq!(ModulationScheme::new(0.9, 0.9, 0.9, 10).unwrap().m(), 8);
        assert_eq!(ModulationScheme::new(0.9, 1.8, 0.6, 10).unwrap().m(), 16);
        assert!(matches!(
            ModulationScheme::new(0.9, 1.0, 0.3, 10),
            Err(Error::InvalidParameter { name: "delta_mod", .. })
        ));
        assert!(ModulationScheme::new(0.9, 0.9, 0.9, 1).is_err());
        assert!(ModulationScheme::new(0.0, 0.9, 0.9, 4).is_err());
    }

    #[test]
    fn coherent_vector_examples() {
        let v = coherent_fock_vector(c(0.0, 0.0), 4);
        assert_eq!(v[0], c(1.0, 0.0));
        assert!(v.iter().skip(1).all(|z| z.norm() == 0.0));
        let e = (-0.5f64).exp();
        let v = coherent_fock_vector(c(0.0, 1.0), 3);
        assert!((v[0] - c(e, 0.0)).norm() < 1e-15);
        assert!((v[1] - c(0.0, e)).norm() < 1e-15);
        assert!((v[2] - c(-e / 2f64.sqrt(), 0.0)).norm() < 1e-15);
    }

    #[test]
    fn key_operators_tile_identity() {
        for nc in [2, 6, 12] {
            let sum = (0..4).fold(CMat::zeros(nc, nc), |acc, z| acc + key_region_operator(z, nc).unwrap());
            assert!(identity_residual(&sum) < 1e-12, "nc={nc}");
            for z in 0..4 {
                let r = key_region_operator(z, nc).unwrap();
                for n in 0..nc {
                    assert!((r[(n, n)] - c(0.25, 0.0)).norm() < 1e-13);
                }
            }
        }
    }

    #[test]
    fn pe_first_entry_closed_form() {
        let s = ModulationScheme::new(0.9, 0.9, 0.9, 6).unwrap();
        let r = pe_region_operator(0, &s).unwrap();
        let expect = 0.25 * (1.0 - (-0.81f64).exp());
        assert!((r[(0, 0)].re - expect).abs() < 1e-15);
        assert!(pe_region_operator(8, &s).is_err());
    }

    #[test]
    fn pinching_is_idempotent() {
        let x = CMat::from_fn(8, 8, |i, j| c((i * j) as f64 * 0.1, i as f64 - j as f64));
        let op = FockOperator::new(vec![2, 4], x).unwrap();
        let p1 = pinching_z(&op).unwrap();
        let p2 = pinching_z(&p1).unwrap();
        assert_eq!(p1, p2);
        assert!((p1.data.trace() - op.data.trace()).norm() == 0.0);
        let bad = FockOperator::new(vec![8], op.data.clone()).unwrap();
        assert_eq!(pinching_z(&bad), Err(Error::MissingKeyRegister));
    }

    #[test]
    fn povm_completeness() {
        let p = ic_povm();
        assert_eq!(p.len(), 16);
        let sum = p.iter().fold(CMat::zeros(4, 4), |a, g| a + g);
        assert!(identity_residual(&sum) < 1e-13);
    }

    #[test]
    fn g_is_isometry() {
        let g = build_g_map(6).unwrap();
        assert_eq!((g.out_dim, g.in_dim), (96, 24));
        assert!(identity_residual(&g.kraus_sum()) < 1e-10);
    }

    #[test]
    fn alice_marginal_limits() {
        let r0 = alice_marginal(0.0);
        assert!(max_abs(&r0.map(|z| z - c(0.25, 0.0))) < 1e-15);
        let r = alice_marginal(20.0);
        for i in 0..4 {
            for j in 0..4 {
                if i != j {
                    assert!(r[(i, j)].norm() < 1e-10);
                }
            }
        }
    }
}
