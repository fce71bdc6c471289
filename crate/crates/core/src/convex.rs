//! Relative-entropy objective `r(ρ) = D(G(ρ) ‖ Z(G(ρ)))`, its gradient, and the
//! Frank-Wolfe minimization with a certified Taylor/duality lower bound.
//!
//! Gradients are returned in the frame where the directional derivative is
//! `Tr[Δ · ∇]`; the SDP objective and the dual slack `∇ − Σ ν_i A_i` use the same
//! matrix, so no transposition is applied anywhere.

use std::f64::consts::LN_2;

use crate::error::{Error, Result};
use crate::fock::{build_g_map, pinching_map, KrausMap};
use crate::linalg::{c, eigh, eigvalsh, hermitize, lambda_min, trace_prod, CMat};
use crate::sdp::{
    dual_slack, epsilon_prime, feasibility_point, repair_certificate, solve_primal_dual, verify_dual_certificate,
    SdpOptions, SdpProblem, SdpSolution, SdpStatus,
};

/// Weight of the maximally mixed state mixed in before logarithms.
pub const PERTURBATION: f64 = 1e-12;
/// Relative eigenvalue threshold defining the support in facial reduction.
pub const RANK_TOL: f64 = 1e-10;
/// Images with a smallest eigenvalue below this are rejected by the gradient.
pub const SINGULAR_TOL: f64 = 1e-17;

/// Restricts `map` to the support of `map(probe)`.
pub fn facial_reduction(map: &KrausMap, probe: &CMat) -> Result<(KrausMap, CMat)> {
    let image = map.apply(probe);
    let (vals, vecs) = eigh(&image);
    let top = vals.last().copied().unwrap_or(0.0);
    if top <= 0.0 {
        return Err(Error::DegenerateSupport);
    }
    let keep: Vec<usize> = (0..vals.len()).filter(|&k| vals[k] > RANK_TOL * top).collect();
    if keep.is_empty() {
        return Err(Error::DegenerateSupport);
    }
    let u = CMat::from_fn(vecs.nrows(), keep.len(), |i, j| vecs[(i, keep[j])]);
    let ops = map.kraus_ops.iter().map(|k| u.adjoint() * k).collect();
    Ok((KrausMap::new(ops)?, u))
}

/// Reduced maps `G̃` and `Z̃∘G`; the latter is stored as one reduced block per key value.
#[derive(Debug, Clone)]
pub struct ObjectiveContext {
    pub g_reduced: KrausMap,
    pub z_reduced: Vec<KrausMap>,
    pub g_isometry: CMat,
    pub z_isometries: Vec<CMat>,
    pub in_dim: usize,
}

impl ObjectiveContext {
    pub fn new(cutoff: usize) -> Result<Self> {
        let g = build_g_map(cutoff)?;
        Self::from_maps(&g, &pinching_map(4 * cutoff))
    }

    /// Builds the context from `G` and a pinching whose Kraus operators have
    /// mutually orthogonal ranges; each pinched block is reduced separately.
    pub fn from_maps(g: &KrausMap, pinch: &KrausMap) -> Result<Self> {
        let d = g.in_dim;
        let probe = perturb(&(CMat::identity(d, d) * c(1.0 / d as f64, 0.0)));
        let (g_reduced, g_isometry) = facial_reduction(g, &probe)?;
        let mut z_reduced = Vec::new();
        let mut z_isometries = Vec::new();
        for p in &pinch.kraus_ops {
            let block = KrausMap::new(g.kraus_ops.iter().map(|k| p * k).collect())?;
            let (red, u) = facial_reduction(&block, &probe)?;
            z_reduced.push(red);
            z_isometries.push(u);
        }
        Ok(Self { g_reduced, z_reduced, g_isometry, z_isometries, in_dim: d })
    }

    fn images(&self, rho: &CMat) -> (CMat, Vec<CMat>) {
        (self.g_reduced.apply(rho), self.z_reduced.iter().map(|m| m.apply(rho)).collect())
    }
}

/// `(1 − ε)ρ + ε·1/d`.
pub fn perturb(rho: &CMat) -> CMat {
    let d = rho.nrows();
    rho * c(1.0 - PERTURBATION, 0.0) + CMat::identity(d, d) * c(PERTURBATION / d as f64, 0.0)
}

fn entropy_bits(a: &CMat) -> f64 {
    eigvalsh(a).iter().filter(|&&l| l > 0.0).map(|&l| -l * l.log2()).sum()
}

fn check_state(rho: &CMat) -> Result<()> {
    let lmin = lambda_min(rho);
    if lmin < -1e-9 {
        return Err(Error::NonPsdInput(lmin));
    }
    let tr = rho.trace();
    if (tr.re - 1.0).abs() > 1e-9 || tr.im.abs() > 1e-9 {
        return Err(Error::Precondition(format!("trace {tr} is not 1")));
    }
    Ok(())
}

/// `r(ρ)` in bits at the perturbed state.
pub fn objective_r(rho: &CMat, ctx: &ObjectiveContext) -> Result<f64> {
    check_state(rho)?;
    Ok(objective_exact(&perturb(rho), ctx))
}

/// `H(Z̃(ρ)) − H(G̃(ρ))` without perturbation.
pub fn objective_exact(rho: &CMat, ctx: &ObjectiveContext) -> f64 {
    let (g, zs) = ctx.images(rho);
    zs.iter().map(entropy_bits).sum::<f64>() - entropy_bits(&g)
}

/// `∇r` at the perturbed state.
pub fn gradient_r(rho: &CMat, ctx: &ObjectiveContext) -> Result<CMat> {
    check_state(rho)?;
    gradient_exact(&perturb(rho), ctx)
}

/// `(1/ln2)·([G̃†(ln G̃ρ) + G̃†(1)] − [Z̃†(ln Z̃ρ) + Z̃†(1)])`.
pub fn gradient_exact(rho: &CMat, ctx: &ObjectiveContext) -> Result<CMat> {
    let (g, zs) = ctx.images(rho);
    let mut grad = adjoint_log_plus_one(&ctx.g_reduced, &g)?;
    for (map, img) in ctx.z_reduced.iter().zip(&zs) {
        grad -= adjoint_log_plus_one(map, img)?;
    }
    Ok(hermitize(&(grad * c(1.0 / LN_2, 0.0))))
}

fn adjoint_log_plus_one(map: &KrausMap, image: &CMat) -> Result<CMat> {
    let (vals, vecs) = eigh(image);
    if vals[0] < SINGULAR_TOL {
        return Err(Error::SingularInput(vals[0]));
    }
    let mut scaled = vecs.clone();
    for (k, &l) in vals.iter().enumerate() {
        scaled.column_mut(k).scale_mut(l.ln() + 1.0);
    }
    Ok(map.adjoint_apply(&(&scaled * vecs.adjoint())))
}

/// Dual certificate of the entropy minimization at a reference state `ρ̃`.
#[derive(Debug, Clone, PartialEq)]
pub struct DualCertificate {
    /// `ν_{xz}` in constraint order.
    pub nu_pe: Vec<f64>,
    /// `ν′_{x′}`.
    pub nu_tom: Vec<f64>,
    /// `r(ρ̃) − Tr[ρ̃ ∇r(ρ̃)]`.
    pub g0: f64,
    pub eps_prime: f64,
    /// `r(ρ̃)`.
    pub primal_ub: f64,
    /// Smallest eigenvalue of the (repaired) dual slack.
    pub lambda_min: f64,
    /// The perturbed reference state.
    pub rho_tilde: CMat,
}

impl DualCertificate {
    pub fn nu(&self) -> Vec<f64> {
        let mut v = self.nu_pe.clone();
        v.extend_from_slice(&self.nu_tom);
        v
    }

    pub fn nu_abs_sum(&self) -> f64 {
        self.nu_pe.iter().chain(&self.nu_tom).map(|v| v.abs()).sum()
    }

    /// `G₀ − ε′·Σ|ν|`, the constant used by every downstream bound.
    pub fn g0_robust(&self) -> f64 {
        self.g0 - self.eps_prime * self.nu_abs_sum()
    }

    /// `G₀ + ν·b − ε′Σ|ν|`.
    pub fn bound(&self, rhs: &[f64]) -> f64 {
        self.g0_robust() + self.nu().iter().zip(rhs).map(|(a, b)| a * b).sum::<f64>()
    }
}

/// Reference state for the Taylor bound: the perturbed state, nudged further toward
/// the maximally mixed state until its images are nonsingular.
fn reference_state(rho: &CMat, ctx: &ObjectiveContext) -> CMat {
    let d = rho.nrows();
    let mut rt = perturb(rho);
    let mut w = PERTURBATION;
    for _ in 0..8 {
        if gradient_exact(&rt, ctx).is_ok() && lambda_min(&rt) > 0.0 {
            break;
        }
        w *= 10.0;
        rt = rho * c(1.0 - w, 0.0) + CMat::identity(d, d) * c(w / d as f64, 0.0);
    }
    rt
}

/// Checks `∇ − Σ ν_i A_i ⪰ 0`, shifting the PE weights down if it fails.
pub(crate) fn certify_dual(grad: &CMat, constraints: &[CMat], mut nu: Vec<f64>, n_pe: usize) -> Result<(Vec<f64>, f64)> {
    let mut check = verify_dual_certificate(grad, constraints, &nu);
    if !check.certified {
        let margin = check.residual.max(1e-14) * 2.0;
        nu = repair_certificate(&nu, n_pe, margin - check.lambda_min);
        check = verify_dual_certificate(grad, constraints, &nu);
        if !check.certified {
            return Err(Error::Numerical(format!("dual repair failed (λ_min = {:e})", check.lambda_min)));
        }
    }
    Ok((nu, check.lambda_min))
}

fn certificate_from_solution(
    rho_tilde: &CMat,
    grad: &CMat,
    sol: &SdpSolution,
    ctx: &ObjectiveContext,
    constraints: &[CMat],
    rhs: &[f64],
    n_pe: usize,
) -> Result<(f64, DualCertificate)> {
    let (nu, lambda) = certify_dual(grad, constraints, sol.dual.clone(), n_pe)?;
    let r0 = objective_exact(rho_tilde, ctx);
    let eps = epsilon_prime(constraints, rhs, &sol.primal, &[grad, rho_tilde]);
    let cert = DualCertificate {
        nu_pe: nu[..n_pe].to_vec(),
        nu_tom: nu[n_pe..].to_vec(),
        g0: r0 - trace_prod(rho_tilde, grad),
        eps_prime: eps,
        primal_ub: r0,
        lambda_min: lambda,
        rho_tilde: rho_tilde.clone(),
    };
    Ok((cert.bound(rhs), cert))
}

/// Number of parameter-estimation rows in a constraint list built by
/// [`crate::fock::constraint_operators`] (everything except the final 16).
pub fn pe_rows(constraints: &[CMat]) -> usize {
    constraints.len().saturating_sub(16)
}

fn check_sdp(sol: &SdpSolution) -> Result<()> {
    match sol.status {
        SdpStatus::Optimal => Ok(()),
        _ if sol.max_residual < 1e-7 => Ok(()),
        _ => Err(Error::NotConverged { iterations: sol.iterations, residual: sol.max_residual, gap: sol.gap }),
    }
}

/// Certified lower bound on `min r` over the constraint set, from the state `ρ`.
pub fn taylor_lower_bound(
    rho: &CMat,
    ctx: &ObjectiveContext,
    constraints: &[CMat],
    rhs: &[f64],
    opts: &SdpOptions,
) -> Result<(f64, DualCertificate)> {
    let rho_tilde = reference_state(rho, ctx);
    let grad = gradient_exact(&rho_tilde, ctx)?;
    let sol = solve_primal_dual(&SdpProblem::new(grad.clone(), constraints.to_vec(), rhs.to_vec())?, opts)?;
    check_sdp(&sol)?;
    certificate_from_solution(&rho_tilde, &grad, &sol, ctx, constraints, rhs, pe_rows(constraints))
}

/// Frank-Wolfe direction `σ* − ρ`, `σ*` minimizing `Tr[σ ∇r(ρ)]` over the constraint set.
pub fn fw_step(rho: &CMat, ctx: &ObjectiveContext, constraints: &[CMat], rhs: &[f64], opts: &SdpOptions) -> Result<CMat> {
    let grad = gradient_r(rho, ctx)?;
    let sol = solve_primal_dual(&SdpProblem::new(grad, constraints.to_vec(), rhs.to_vec())?, opts)?;
    check_sdp(&sol)?;
    Ok(&sol.primal - rho)
}

/// Brent minimization of `f` on `[lo, hi]` (golden section with parabolic steps).
pub fn brent_minimize<F: FnMut(f64) -> f64>(mut f: F, lo: f64, hi: f64, tol: f64) -> (f64, f64) {
    const CGOLD: f64 = 0.381_966_011_250_105_1;
    let (mut a, mut b) = (lo, hi);
    let mut x = a + CGOLD * (b - a);
    let (mut w, mut v) = (x, x);
    let mut fx = f(x);
    let (mut fw, mut fv) = (fx, fx);
    let (mut d, mut e) = (0.0f64, 0.0f64);
    for _ in 0..200 {
        let xm = 0.5 * (a + b);
        let tol1 = tol * x.abs() + 1e-12;
        let tol2 = 2.0 * tol1;
        if (x - xm).abs() <= tol2 - 0.5 * (b - a) {
            break;
        }
        let mut golden = true;
        if e.abs() > tol1 {
            let r = (x - w) * (fx - fv);
            let mut q = (x - v) * (fx - fw);
            let mut p = (x - v) * q - (x - w) * r;
            q = 2.0 * (q - r);
            if q > 0.0 {
                p = -p;
            }
            q = q.abs();
            let etemp = e;
            e = d;
            if p.abs() < (0.5 * q * etemp).abs() && p > q * (a - x) && p < q * (b - x) {
                d = p / q;
                let u = x + d;
                if u - a < tol2 || b - u < tol2 {
                    d = if xm >= x { tol1 } else { -tol1 };
                }
                golden = false;
            }
        }
        if golden {
            e = if x >= xm { a - x } else { b - x };
            d = CGOLD * e;
        }
        let u = if d.abs() >= tol1 { x + d } else { x + tol1.copysign(d) };
        let fu = f(u);
        if fu <= fx {
            if u >= x {
                a = x;
            } else {
                b = x;
            }
            v = w;
            fv = fw;
            w = x;
            fw = fx;
            x = u;
            fx = fu;
        } else {
            if u < x {
                a = u;
            } else {
                b = u;
            }
            if fu <= fw || w == x {
                v = w;
                fv = fw;
                w = u;
                fw = fu;
            } else if fu <= fv || v == x || v == w {
                v = u;
                fv = fu;
            }
        }
    }
    (x, fx)
}

/// Nelder-Mead simplex minimization from `x0` with initial edge `step`.
pub fn nelder_mead<F: FnMut(&[f64]) -> f64>(mut f: F, x0: &[f64], step: f64, tol: f64, max_eval: usize) -> (Vec<f64>, f64) {
    let n = x0.len();
    if n == 0 {
        return (Vec::new(), f(x0));
    }
    let mut simplex: Vec<(Vec<f64>, f64)> = Vec::with_capacity(n + 1);
    simplex.push((x0.to_vec(), f(x0)));
    for i in 0..n {
        let mut x = x0.to_vec();
        x[i] += step;
        let fx = f(&x);
        simplex.push((x, fx));
    }
    let mut evals = n + 1;
    let blend = |a: &[f64], b: &[f64], t: f64| a.iter().zip(b).map(|(p, q)| p + t * (q - p)).collect::<Vec<f64>>();
    while evals < max_eval {
        simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
        let (lo, hi) = (simplex[0].1, simplex[n].1);
        if (hi - lo).abs() <= tol * (lo.abs() + tol) {
            break;
        }
        let mut centroid = vec![0.0; n];
        for (x, _) in &simplex[..n] {
            for (c, v) in centroid.iter_mut().zip(x) {
                *c += v / n as f64;
            }
        }
        let worst = simplex[n].0.clone();
        let xr = blend(&centroid, &worst, -1.0);
        let fr = f(&xr);
        evals += 1;
        if fr < simplex[0].1 {
            let xe = blend(&centroid, &worst, -2.0);
            let fe = f(&xe);
            evals += 1;
            simplex[n] = if fe < fr { (xe, fe) } else { (xr, fr) };
        } else if fr < simplex[n - 1].1 {
            simplex[n] = (xr, fr);
        } else {
            let (xc, fc) = if fr < simplex[n].1 {
                let xc = blend(&centroid, &worst, -0.5);
                let fc = f(&xc);
                (xc, fc)
            } else {
                let xc = blend(&centroid, &worst, 0.5);
                let fc = f(&xc);
                (xc, fc)
            };
            evals += 1;
            if fc < fr.min(simplex[n].1) {
                simplex[n] = (xc, fc);
            } else {
                let best = simplex[0].0.clone();
                for item in simplex.iter_mut().skip(1) {
                    let x = blend(&best, &item.0, 0.5);
                    let fx = f(&x);
                    *item = (x, fx);
                }
                evals += n;
            }
        }
    }
    simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
    simplex.swap_remove(0)
}

/// Step `κ ∈ [0, 1]` minimizing `r(ρ + κΔ)`; returns `(κ, r(ρ + κΔ))`.
pub fn line_search(rho: &CMat, delta: &CMat, ctx: &ObjectiveContext, tol: f64) -> (f64, f64) {
    let eval = |k: f64| objective_exact(&perturb(&(rho + delta * c(k, 0.0))), ctx);
    let f0 = eval(0.0);
    let (k, fk) = brent_minimize(eval, 0.0, 1.0, tol);
    let f1 = eval(1.0);
    let mut best = (0.0, f0);
    for cand in [(k, fk), (1.0, f1)] {
        if cand.1 < best.1 {
            best = cand;
        }
    }
    best
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FwOptions {
    pub max_iter: usize,
    pub gap_tol: f64,
    /// Subtracted from both bounds before the relative gap is formed, so the stopping
    /// rule can be stated relative to a key rate rather than the raw entropy.
    pub gap_offset: f64,
    pub bound_every: usize,
    pub line_tol: f64,
    pub sdp: SdpOptions,
}

impl Default for FwOptions {
    fn default() -> Self {
        Self { max_iter: 300, gap_tol: 0.02, gap_offset: 0.0, bound_every: 15, line_tol: 1e-6, sdp: SdpOptions::default() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FwRecord {
    pub iteration: usize,
    pub upper_bound: f64,
    pub lower_bound: Option<f64>,
    pub step: f64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct FwTrace {
    pub records: Vec<FwRecord>,
    pub converged: bool,
    pub final_gap: f64,
}

#[derive(Debug, Clone)]
pub struct FwResult {
    pub rho: CMat,
    pub upper_bound: f64,
    pub lower_bound: f64,
    pub certificate: DualCertificate,
    pub trace: FwTrace,
}

/// `(ub − lb)/|ub|`, or the absolute gap when `ub` vanishes.
pub fn relative_gap(ub: f64, lb: f64) -> f64 {
    if ub.abs() > 1e-9 {
        (ub - lb) / ub.abs()
    } else {
        ub - lb
    }
}

/// Minimum-norm correction onto the affine set `{X : Tr[A_i X] = b_i}`.
struct AffineProjector<'a> {
    constraints: &'a [CMat],
    rhs: &'a [f64],
}

impl AffineProjector<'_> {
    fn project(&self, x: &CMat) -> CMat {
        crate::sdp::affine_correction(self.constraints, self.rhs, x)
    }
}

/// Frank-Wolfe minimization of `r` from the max-λ_min feasible state.
pub fn frank_wolfe(ctx: &ObjectiveContext, constraints: &[CMat], rhs: &[f64], opts: &FwOptions) -> Result<FwResult> {
    let start = feasibility_point(constraints, rhs, &opts.sdp)?;
    frank_wolfe_from(start, ctx, constraints, rhs, opts)
}

/// Frank-Wolfe minimization from a given feasible state.
pub fn frank_wolfe_from(
    start: CMat,
    ctx: &ObjectiveContext,
    constraints: &[CMat],
    rhs: &[f64],
    opts: &FwOptions,
) -> Result<FwResult> {
    let n_pe = pe_rows(constraints);
    let projector = AffineProjector { constraints, rhs };
    let mut rho = start;
    let mut ub = objective_r(&rho, ctx)?;
    let mut trace = FwTrace::default();
    let mut best: Option<(f64, DualCertificate)> = None;
    let mut converged = false;
    for it in 1..=opts.max_iter {
        let rho_tilde = reference_state(&rho, ctx);
        let grad = gradient_exact(&rho_tilde, ctx)?;
        let sol = solve_primal_dual(&SdpProblem::new(grad.clone(), constraints.to_vec(), rhs.to_vec())?, &opts.sdp)?;
        check_sdp(&sol)?;
        let mut lower = None;
        if it == 1 || it % opts.bound_every == 0 || it == opts.max_iter {
            let (lb, cert) = certificate_from_solution(&rho_tilde, &grad, &sol, ctx, constraints, rhs, n_pe)?;
            lower = Some(lb);
            if best.as_ref().is_none_or(|(b, _)| lb > *b) {
                best = Some((lb, cert));
            }
        }
        let best_lb = best.as_ref().map(|(b, _)| *b).unwrap_or(f64::NEG_INFINITY);
        if relative_gap(ub - opts.gap_offset, best_lb - opts.gap_offset) < opts.gap_tol {
            trace.records.push(FwRecord { iteration: it, upper_bound: ub, lower_bound: lower, step: 0.0 });
            converged = true;
            break;
        }
        let delta = &sol.primal - &rho;
        let (mut kappa, f_new) = line_search(&rho, &delta, ctx, opts.line_tol);
        let mut accepted = 0.0;
        if kappa > 0.0 && f_new <= ub {
            // halve the step until the iterate is a valid state
            for _ in 0..30 {
                let raw = &rho + &delta * c(kappa, 0.0);
                let proj = projector.project(&raw);
                let next = if lambda_min(&proj) > 0.0 { proj } else { raw };
                if let Ok(f_next) = objective_r(&next, ctx) {
                    if f_next <= ub {
                        rho = next;
                        ub = f_next;
                        accepted = kappa;
                        break;
                    }
                }
                kappa *= 0.5;
            }
        }
        trace.records.push(FwRecord { iteration: it, upper_bound: ub, lower_bound: lower, step: accepted });
    }
    let (lb, cert) = best.ok_or_else(|| Error::Precondition("max_iter must be at least 1".into()))?;
    trace.converged = converged;
    trace.final_gap = relative_gap(ub - opts.gap_offset, lb - opts.gap_offset);
    Ok(FwResult { rho, upper_bound: ub, lower_bound: lb, certificate: cert, trace })
}

/// Slack `∇ − Σ ν_i A_i` of a certificate, recomputed from its reference state.
pub fn certificate_slack(cert: &DualCertificate, ctx: &ObjectiveContext, constraints: &[CMat]) -> Result<CMat> {
    let grad = gradient_exact(&cert.rho_tilde, ctx)?;
    Ok(dual_slack(&grad, constraints, &cert.nu()))
}
