//! Dense primal-dual interior-point solver for complex Hermitian SDPs in standard form
//!
//! ```text
//! minimize  Re Tr[C X]   subject to  Tr[A_i X] = b_i,  X ⪰ 0
//! maximize  b·y          subject to  C − Σ y_i A_i ⪰ 0
//! ```
//!
//! HKM search direction with Mehrotra predictor-corrector and a Cholesky-factored
//! Schur complement. Linearly dependent constraints are detected up front and
//! solved on an independent subset; the dual entries of the dropped rows are zero.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};

use crate::error::{Error, Result};
use crate::linalg::{c, eigvalsh, hermitize, hermiticity_residual, lambda_min, lambda_min_with_residual, max_abs, trace_prod, CMat, C64};

const STEP_FRACTION: f64 = 0.98;
const DEPENDENCY_TOL: f64 = 1e-10;

#[derive(Debug, Clone)]
pub struct SdpProblem {
    pub objective: CMat,
    pub constraints: Vec<CMat>,
    pub rhs: Vec<f64>,
}

impl SdpProblem {
    pub fn new(objective: CMat, constraints: Vec<CMat>, rhs: Vec<f64>) -> Result<Self> {
        let d = objective.nrows();
        if objective.ncols() != d {
            return Err(Error::Dimension("objective is not square".into()));
        }
        if constraints.len() != rhs.len() {
            return Err(Error::Dimension(format!("{} constraints but {} right-hand sides", constraints.len(), rhs.len())));
        }
        if constraints.iter().any(|a| a.shape() != (d, d)) {
            return Err(Error::Dimension("constraint order differs from objective".into()));
        }
        let herm = std::iter::once(&objective)
            .chain(&constraints)
            .map(|a| hermiticity_residual(a) / (1.0 + max_abs(a)))
            .fold(0.0, f64::max);
        if herm > 1e-12 {
            return Err(Error::Precondition(format!("non-Hermitian input (residual {herm:e})")));
        }
        Ok(Self { objective, constraints, rhs })
    }

    pub fn dim(&self) -> usize {
        self.objective.nrows()
    }

    /// `max_i |Tr[A_i X] − b_i|`.
    pub fn max_residual(&self, x: &CMat) -> f64 {
        max_residual(&self.constraints, &self.rhs, x)
    }
}

pub fn max_residual(constraints: &[CMat], rhs: &[f64], x: &CMat) -> f64 {
    constraints
        .iter()
        .zip(rhs)
        .map(|(a, b)| (trace_prod(a, x) - b).abs())
        .fold(0.0, f64::max)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SdpOptions {
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for SdpOptions {
    fn default() -> Self {
        Self { tol: 1e-9, max_iter: 100 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SdpStatus {
    Optimal,
    MaxIter,
    Infeasible,
}

#[derive(Debug, Clone)]
pub struct SdpSolution {
    pub primal: CMat,
    pub dual: Vec<f64>,
    /// `C − Σ y_i A_i`.
    pub slack: CMat,
    pub primal_value: f64,
    pub dual_value: f64,
    pub gap: f64,
    pub max_residual: f64,
    pub iterations: usize,
    pub status: SdpStatus,
}

/// Nonzero pattern of a constraint matrix.
struct SparseOp {
    entries: Vec<(usize, usize, C64)>,
    cols: Vec<usize>,
}

impl SparseOp {
    fn from_dense(a: &CMat, scale: f64) -> Self {
        let mut entries = Vec::new();
        let mut cols = Vec::new();
        for j in 0..a.ncols() {
            let mut any = false;
            for i in 0..a.nrows() {
                let v = a[(i, j)];
                if v.re != 0.0 || v.im != 0.0 {
                    entries.push((i, j, v * scale));
                    any = true;
                }
            }
            if any {
                cols.push(j);
            }
        }
        Self { entries, cols }
    }

    /// `Re Tr[A X]`.
    fn dot(&self, x: &CMat) -> f64 {
        self.entries.iter().map(|&(r, cc, v)| (v * x[(cc, r)]).re).sum()
    }

    fn add_scaled_to(&self, out: &mut CMat, s: f64) {
        for &(r, cc, v) in &self.entries {
            out[(r, cc)] += v * s;
        }
    }
}

/// Orthonormal basis of `{t : Σ t_i A_i = 0}`, from the constraint Gram matrix.
pub fn constraint_null_space(ops: &[CMat]) -> Vec<Vec<f64>> {
    let k = ops.len();
    let mut gram = DMatrix::<f64>::zeros(k, k);
    for i in 0..k {
        for j in i..k {
            let g = trace_prod(&ops[i], &ops[j]);
            gram[(i, j)] = g;
            gram[(j, i)] = g;
        }
    }
    let eig = nalgebra::SymmetricEigen::new(gram);
    let scale = eig.eigenvalues.iter().fold(0.0f64, |a, &v| a.max(v.abs()));
    (0..k)
        .filter(|&i| eig.eigenvalues[i].abs() <= DEPENDENCY_TOL * scale)
        .map(|i| eig.eigenvectors.column(i).iter().copied().collect())
        .collect()
}

/// Pivoted Cholesky on the constraint Gram matrix; returns independent row indices.
pub fn independent_rows(ops: &[CMat]) -> Vec<usize> {
    let k = ops.len();
    let mut gram = DMatrix::<f64>::zeros(k, k);
    for i in 0..k {
        for j in i..k {
            let g = trace_prod(&ops[i], &ops[j]);
            gram[(i, j)] = g;
            gram[(j, i)] = g;
        }
    }
    let scale = (0..k).map(|i| gram[(i, i)]).fold(0.0, f64::max);
    let mut chosen = Vec::new();
    let mut resid: Vec<f64> = (0..k).map(|i| gram[(i, i)]).collect();
    let mut lcols: Vec<Vec<f64>> = Vec::new();
    let mut used = vec![false; k];
    loop {
        let (best, val) = (0..k)
            .filter(|&i| !used[i])
            .map(|i| (i, resid[i]))
            .fold((usize::MAX, 0.0), |acc, (i, v)| if v > acc.1 { (i, v) } else { acc });
        if best == usize::MAX || val <= DEPENDENCY_TOL * scale {
            break;
        }
        used[best] = true;
        let piv = val.sqrt();
        let col: Vec<f64> = (0..k)
            .map(|i| {
                if used[i] && i != best {
                    0.0
                } else {
                    let s: f64 = lcols.iter().map(|l| l[i] * l[best]).sum();
                    (gram[(i, best)] - s) / piv
                }
            })
            .collect();
        for i in 0..k {
            if !used[i] {
                resid[i] -= col[i] * col[i];
            }
        }
        lcols.push(col);
        chosen.push(best);
    }
    chosen.sort_unstable();
    chosen
}

fn herm_inverse(a: &CMat) -> Option<CMat> {
    Cholesky::new(hermitize(a)).map(|ch| ch.inverse())
}

/// Largest step `α ≤ 1/STEP_FRACTION` keeping `X + αΔ ⪰ 0`.
fn max_step(x: &CMat, dx: &CMat) -> f64 {
    let ch = match Cholesky::new(hermitize(x)) {
        Some(ch) => ch,
        None => return 0.0,
    };
    let l = ch.l();
    let t = l.solve_lower_triangular(dx).expect("triangular factor is nonsingular");
    let m = l.solve_lower_triangular(&t.adjoint()).expect("triangular factor is nonsingular");
    let lmin = lambda_min(&m);
    if lmin >= 0.0 {
        f64::INFINITY
    } else {
        -1.0 / lmin
    }
}

fn dense_from_sparse_sum(ops: &[SparseOp], y: &[f64], n: usize) -> CMat {
    let mut out = CMat::zeros(n, n);
    for (op, &yi) in ops.iter().zip(y) {
        if yi != 0.0 {
            op.add_scaled_to(&mut out, yi);
        }
    }
    out
}

fn schur_complement(ops: &[SparseOp], x: &CMat, s_inv: &CMat) -> DMatrix<f64> {
    let n = x.nrows();
    let k = ops.len();
    let mut m = DMatrix::<f64>::zeros(k, k);
    let mut w = CMat::zeros(n, n);
    let mut b = CMat::zeros(n, n);
    for (j, aj) in ops.iter().enumerate() {
        // W = X A_j on the support columns of A_j
        for &col in &aj.cols {
            w.column_mut(col).fill(c(0.0, 0.0));
        }
        for &(r, col, v) in &aj.entries {
            let xr = x.column(r).clone_owned();
            w.column_mut(col).axpy(v, &xr, c(1.0, 0.0));
        }
        b.fill(c(0.0, 0.0));
        for &col in &aj.cols {
            let wc = w.column(col);
            let srow = s_inv.row(col);
            for q in 0..n {
                let sv = srow[q];
                if sv.re == 0.0 && sv.im == 0.0 {
                    continue;
                }
                let mut bc = b.column_mut(q);
                bc.axpy(sv, &wc, c(1.0, 0.0));
            }
        }
        for (i, ai) in ops.iter().enumerate().skip(j) {
            let v = ai.dot(&b);
            m[(i, j)] = v;
            m[(j, i)] = v;
        }
    }
    m
}

fn factor_schur(m: &DMatrix<f64>) -> Option<Cholesky<f64, Dyn>> {
    if let Some(ch) = Cholesky::new(m.clone()) {
        return Some(ch);
    }
    let scale = (0..m.nrows()).map(|i| m[(i, i)].abs()).fold(0.0, f64::max).max(1e-300);
    let mut reg = 1e-14;
    while reg < 1e-6 {
        let mut mm = m.clone();
        for i in 0..mm.nrows() {
            mm[(i, i)] += reg * scale;
        }
        if let Some(ch) = Cholesky::new(mm) {
            return Some(ch);
        }
        reg *= 100.0;
    }
    None
}

/// Linear consistency of `Tr[A_i X] = b_i` on the dropped rows.
fn consistency_residual(constraints: &[CMat], rhs: &[f64], keep: &[usize]) -> (f64, CMat) {
    let n = constraints[0].nrows();
    let k = keep.len();
    let mut gram = DMatrix::<f64>::zeros(k, k);
    for (a, &i) in keep.iter().enumerate() {
        for (b, &j) in keep.iter().enumerate() {
            gram[(a, b)] = trace_prod(&constraints[i], &constraints[j]);
        }
    }
    let bsub = DVector::from_iterator(k, keep.iter().map(|&i| rhs[i]));
    let w = gram
        .clone()
        .cholesky()
        .map(|ch| ch.solve(&bsub))
        .unwrap_or_else(|| gram.pseudo_inverse(1e-14).expect("svd") * &bsub);
    let mut x = CMat::zeros(n, n);
    for (a, &i) in keep.iter().enumerate() {
        x += &constraints[i] * c(w[a], 0.0);
    }
    (max_residual(constraints, rhs, &x), x)
}

/// Least-squares correction of `x` toward `{Tr[A_i X] = b_i}` over all rows, so any
/// inconsistency in `b` is spread rather than pushed onto the dependent rows.
pub(crate) fn affine_correction(constraints: &[CMat], rhs: &[f64], x: &CMat) -> CMat {
    let k = constraints.len();
    let gram = DMatrix::from_fn(k, k, |i, j| trace_prod(&constraints[i], &constraints[j]));
    let r = DVector::from_iterator(k, constraints.iter().zip(rhs).map(|(a, b)| b - trace_prod(a, x)));
    let eig = gram.symmetric_eigen();
    let top = eig.eigenvalues.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let proj = eig.eigenvectors.transpose() * r;
    let scaled = DVector::from_iterator(
        k,
        proj.iter().zip(eig.eigenvalues.iter()).map(|(p, &l)| if l > DEPENDENCY_TOL * top { p / l } else { 0.0 }),
    );
    let w = &eig.eigenvectors * scaled;
    let mut out = x.clone();
    for (a, wi) in constraints.iter().zip(w.iter()) {
        out += a * c(*wi, 0.0);
    }
    hermitize(&out)
}

/// Solves the SDP by an infeasible-start primal-dual path-following method.
pub fn solve_primal_dual(problem: &SdpProblem, opts: &SdpOptions) -> Result<SdpSolution> {
    let n = problem.dim();
    let total = problem.constraints.len();
    if total == 0 {
        return Err(Error::Precondition("at least one constraint is required".into()));
    }
    let keep = independent_rows(&problem.constraints);
    let (incons, _) = consistency_residual(&problem.constraints, &problem.rhs, &keep);
    let b_scale = problem.rhs.iter().fold(1.0f64, |m, b| m.max(b.abs()));
    if incons > 1e-8 * b_scale {
        return Err(Error::Infeasible(format!("linear constraints are inconsistent (residual {incons:e})")));
    }

    // row and objective scaling
    let row_norm: Vec<f64> = keep.iter().map(|&i| problem.constraints[i].norm()).collect();
    let ops: Vec<SparseOp> = keep
        .iter()
        .zip(&row_norm)
        .map(|(&i, &s)| SparseOp::from_dense(&problem.constraints[i], 1.0 / s))
        .collect();
    let b: Vec<f64> = keep.iter().zip(&row_norm).map(|(&i, &s)| problem.rhs[i] / s).collect();
    let c_scale = max_abs(&problem.objective).max(1e-300);
    let cmat = hermitize(&problem.objective) * c(1.0 / c_scale, 0.0);
    let k = ops.len();
    let nf = n as f64;

    let bmax = b.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let xi = (10.0f64).max(nf.sqrt()).max(nf * (1.0 + bmax));
    let zeta = (10.0f64).max(nf.sqrt()).max(cmat.norm());
    let mut x = CMat::identity(n, n) * c(xi, 0.0);
    let mut s = CMat::identity(n, n) * c(zeta, 0.0);
    let mut y = vec![0.0; k];

    let mut status = SdpStatus::MaxIter;
    let mut iterations = 0;
    let mut best = (f64::INFINITY, x.clone(), y.clone());
    for iter in 0..opts.max_iter {
        iterations = iter;
        let rp: Vec<f64> = ops.iter().zip(&b).map(|(a, bi)| bi - a.dot(&x)).collect();
        let ay = dense_from_sparse_sum(&ops, &y, n);
        let rd = &cmat - &s - &ay;
        let pobj = trace_prod(&cmat, &x);
        let dobj: f64 = b.iter().zip(&y).map(|(a, b)| a * b).sum();
        let pinf = rp.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let dinf = max_abs(&rd);
        let gap = (pobj - dobj).abs();
        let merit = pinf.max(dinf).max(gap / (1.0 + pobj.abs()));
        if merit < best.0 {
            best = (merit, x.clone(), y.clone());
        }
        if pinf <= opts.tol && dinf <= opts.tol && gap <= opts.tol * (1.0 + pobj.abs()) {
            status = SdpStatus::Optimal;
            break;
        }
        if max_abs(&x) > 1e12 || dobj > 1e12 {
            status = SdpStatus::Infeasible;
            break;
        }
        let mu = trace_prod(&x, &s) / nf;
        let s_inv = match herm_inverse(&s) {
            Some(v) => v,
            None => break,
        };
        let m = schur_complement(&ops, &x, &s_inv);
        let chol = match factor_schur(&m) {
            Some(ch) => ch,
            None => return Err(Error::Numerical("Schur complement is singular".into())),
        };
        let x_rd_sinv = &x * &rd * &s_inv;
        let direction = |rc: &CMat| -> (CMat, Vec<f64>, CMat) {
            let base = rc - &x_rd_sinv;
            let rhs = DVector::from_iterator(k, ops.iter().zip(&rp).map(|(a, r)| r - a.dot(&base)));
            let mut dy = chol.solve(&rhs);
            let corr = chol.solve(&(&rhs - &m * &dy));
            dy += corr;
            let dyv: Vec<f64> = dy.iter().copied().collect();
            let ds = &rd - dense_from_sparse_sum(&ops, &dyv, n);
            let dx = hermitize(&(rc - &x * &ds * &s_inv));
            (dx, dyv, hermitize(&ds))
        };
        // predictor
        let rc_aff = -&x;
        let (dx_a, _, ds_a) = direction(&rc_aff);
        let ap = max_step(&x, &dx_a).min(1.0);
        let ad = max_step(&s, &ds_a).min(1.0);
        let mu_aff = trace_prod(&(&x + &dx_a * c(ap, 0.0)), &(&s + &ds_a * c(ad, 0.0))) / nf;
        let sigma = (mu_aff / mu).clamp(0.0, 1.0).powi(3);
        // corrector
        let rc = &s_inv * c(sigma * mu, 0.0) - &x - &dx_a * &ds_a * &s_inv;
        let (dx, dy, ds) = direction(&rc);
        let ap = (STEP_FRACTION * max_step(&x, &dx)).min(1.0);
        let ad = (STEP_FRACTION * max_step(&s, &ds)).min(1.0);
        if ap < 1e-12 && ad < 1e-12 {
            break;
        }
        x += &dx * c(ap, 0.0);
        s += &ds * c(ad, 0.0);
        for (yi, d) in y.iter_mut().zip(&dy) {
            *yi += ad * d;
        }
        iterations = iter + 1;
    }

    if status == SdpStatus::Infeasible {
        return Err(Error::Infeasible("iterates diverged".into()));
    }
    if status == SdpStatus::MaxIter {
        x = best.1;
        y = best.2;
    }

    let mut dual = vec![0.0; total];
    for ((&i, &s), yi) in keep.iter().zip(&row_norm).zip(&y) {
        dual[i] = yi * c_scale / s;
    }
    Ok(finish(problem, hermitize(&x), dual, iterations, status))
}

fn finish(problem: &SdpProblem, primal: CMat, dual: Vec<f64>, iterations: usize, status: SdpStatus) -> SdpSolution {
    let slack = dual_slack(&problem.objective, &problem.constraints, &dual);
    let primal_value = trace_prod(&problem.objective, &primal);
    let dual_value: f64 = problem.rhs.iter().zip(&dual).map(|(a, b)| a * b).sum();
    SdpSolution {
        max_residual: problem.max_residual(&primal),
        gap: (primal_value - dual_value).abs(),
        primal,
        dual,
        slack,
        primal_value,
        dual_value,
        iterations,
        status,
    }
}

/// `C − Σ ν_i A_i`, Hermitian part.
pub fn dual_slack(objective: &CMat, constraints: &[CMat], nu: &[f64]) -> CMat {
    let mut s = objective.clone();
    for (a, &v) in constraints.iter().zip(nu) {
        if v != 0.0 {
            s -= a * c(v, 0.0);
        }
    }
    hermitize(&s)
}

/// Strictly feasible point maximizing `λ_min(X)` subject to `Tr[A_i X] = b_i`.
///
/// Writes `X = X′ + (u − u₀)·1` with `X′ ⪰ 0`, `u ≥ 0`, and maximizes `u`.
pub fn feasibility_point(constraints: &[CMat], rhs: &[f64], opts: &SdpOptions) -> Result<CMat> {
    if constraints.is_empty() || constraints.len() != rhs.len() {
        return Err(Error::Dimension("constraints and rhs must be nonempty and of equal length".into()));
    }
    let d = constraints[0].nrows();
    let keep = independent_rows(constraints);
    let (incons, x_ls) = consistency_residual(constraints, rhs, &keep);
    let b_scale = rhs.iter().fold(1.0f64, |m, b| m.max(b.abs()));
    if incons > 1e-8 * b_scale {
        return Err(Error::InfeasibleStatistics(format!("least-squares residual {incons:e}")));
    }
    let u0 = (-eigvalsh(&x_ls)[0]).max(0.0) + 1.0 / d as f64;
    let big = |a: &CMat, corner: f64| {
        let mut m = CMat::zeros(d + 1, d + 1);
        m.view_mut((0, 0), (d, d)).copy_from(a);
        m[(d, d)] = c(corner, 0.0);
        m
    };
    let ops: Vec<CMat> = keep.iter().map(|&i| big(&constraints[i], constraints[i].trace().re)).collect();
    let b: Vec<f64> = keep.iter().map(|&i| rhs[i] + u0 * constraints[i].trace().re).collect();
    let mut obj = CMat::zeros(d + 1, d + 1);
    obj[(d, d)] = c(-1.0, 0.0);
    let sol = solve_primal_dual(&SdpProblem::new(obj, ops, b)?, opts).map_err(|e| match e {
        Error::Infeasible(msg) => Error::InfeasibleStatistics(msg),
        other => other,
    })?;
    let u = sol.primal[(d, d)].re;
    let raw = hermitize(&(sol.primal.view((0, 0), (d, d)).into_owned() + CMat::identity(d, d) * c(u - u0, 0.0)));
    let polished = affine_correction(constraints, rhs, &raw);
    let x = if lambda_min(&polished) > 1e-10 && max_residual(constraints, rhs, &polished) < max_residual(constraints, rhs, &raw) {
        polished
    } else {
        raw
    };
    let lmin = lambda_min(&x);
    if lmin <= 1e-10 {
        return Err(Error::InfeasibleStatistics(format!("no strictly feasible state (max λ_min = {lmin:e})")));
    }
    let res = max_residual(constraints, rhs, &x);
    if res > 1e-8 * b_scale {
        return Err(Error::InfeasibleStatistics(format!("feasible point residual {res:e}")));
    }
    Ok(x)
}

/// Result of [`verify_dual_certificate`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CertificateCheck {
    pub lambda_min: f64,
    /// A posteriori eigen-residual bound.
    pub residual: f64,
    pub certified: bool,
}

/// Smallest eigenvalue of `∇ − Σ ν_i A_i` and whether it is provably nonnegative.
pub fn verify_dual_certificate(gradient: &CMat, constraints: &[CMat], nu: &[f64]) -> CertificateCheck {
    let slack = dual_slack(gradient, constraints, nu);
    let (lambda_min, residual) = lambda_min_with_residual(&slack);
    CertificateCheck { lambda_min, residual, certified: lambda_min - residual >= 0.0 }
}

/// Shifts every parameter-estimation dual entry down by `shift`.
///
/// The first `n_pe` constraints sum to the identity, so the slack gains `shift·1`.
pub fn repair_certificate(nu: &[f64], n_pe: usize, shift: f64) -> Vec<f64> {
    let mut out = nu.to_vec();
    for v in out.iter_mut().take(n_pe) {
        *v -= shift;
    }
    out
}

/// `max(max_i |Tr[A_i X] − b_i|, Hermiticity residuals, 1e-12)`.
pub fn epsilon_prime(constraints: &[CMat], rhs: &[f64], x: &CMat, extra: &[&CMat]) -> f64 {
    let herm = std::iter::once(x)
        .chain(extra.iter().copied())
        .map(hermiticity_residual)
        .fold(0.0, f64::max);
    max_residual(constraints, rhs, x).max(herm).max(1e-12)
}

/// Value of the relaxed problem `min Tr[C X]` s.t. `|Tr[A_i X] − b_i| ≤ ε′`, `X ⪰ 0`,
/// whose dual is `max b·ν − ε′Σ|ν_i|` over dual-feasible `ν`.
///
/// Slack variables sit on extra diagonal entries of an enlarged block-diagonal matrix.
pub fn solve_relaxed(problem: &SdpProblem, eps_prime: f64, opts: &SdpOptions) -> Result<(f64, Vec<f64>)> {
    let d = problem.dim();
    let k = problem.constraints.len();
    let big_dim = d + 2 * k;
    let mut ops = Vec::with_capacity(2 * k);
    let mut b = Vec::with_capacity(2 * k);
    for (i, a) in problem.constraints.iter().enumerate() {
        for (slot, sign) in [(d + 2 * i, 1.0), (d + 2 * i + 1, -1.0)] {
            let mut m = CMat::zeros(big_dim, big_dim);
            m.view_mut((0, 0), (d, d)).copy_from(a);
            m[(slot, slot)] = c(sign, 0.0);
            ops.push(m);
            b.push(problem.rhs[i] + sign * eps_prime);
        }
    }
    let mut obj = CMat::zeros(big_dim, big_dim);
    obj.view_mut((0, 0), (d, d)).copy_from(&problem.objective);
    let sol = solve_primal_dual(&SdpProblem::new(obj, ops, b)?, opts)?;
    let nu: Vec<f64> = (0..k).map(|i| sol.dual[2 * i] + sol.dual[2 * i + 1]).collect();
    Ok((sol.dual_value, nu))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn diag(v: &[f64]) -> CMat {
        CMat::from_fn(v.len(), v.len(), |i, j| if i == j { c(v[i], 0.0) } else { c(0.0, 0.0) })
    }

    #[test]
    fn scalar_problem() {
        let p = SdpProblem::new(diag(&[3.0]), vec![diag(&[2.0])], vec![5.0]).unwrap();
        let s = solve_primal_dual(&p, &SdpOptions::default()).unwrap();
        assert_eq!(s.status, SdpStatus::Optimal);
        assert!((s.primal[(0, 0)].re - 2.5).abs() < 1e-8);
        assert!((s.primal_value - 7.5).abs() < 1e-8);
    }

    #[test]
    fn eigenvalue_selection() {
        let p = SdpProblem::new(diag(&[1.0, 2.0]), vec![CMat::identity(2, 2)], vec![1.0]).unwrap();
        let s = solve_primal_dual(&p, &SdpOptions::default()).unwrap();
        assert_eq!(s.status, SdpStatus::Optimal);
        assert!((s.primal_value - 1.0).abs() < 1e-8);
        assert!((s.primal[(0, 0)].re - 1.0).abs() < 1e-7);
        assert!((s.dual[0] - 1.0).abs() < 1e-8);
    }

    #[test]
    fn dependent_constraints_are_tolerated() {
        let a0 = diag(&[1.0, 0.0, 0.0]);
        let a1 = diag(&[0.0, 1.0, 1.0]);
        let id = CMat::identity(3, 3);
        let p = SdpProblem::new(diag(&[0.0, 1.0, 3.0]), vec![a0, a1, id], vec![0.25, 0.75, 1.0]).unwrap();
        let s = solve_primal_dual(&p, &SdpOptions::default()).unwrap();
        assert_eq!(s.status, SdpStatus::Optimal);
        assert!((s.primal_value - 0.75).abs() < 1e-8);
        assert!(s.max_residual < 1e-9);
    }

    #[test]
    fn maximally_mixed_feasibility() {
        let x = feasibility_point(&[CMat::identity(4, 4)], &[1.0], &SdpOptions::default()).unwrap();
        assert!(max_abs(&(x - CMat::identity(4, 4) * c(0.25, 0.0))) < 1e-7);
    }

    #[test]
    fn inconsistent_rhs_rejected() {
        let a0 = diag(&[1.0, 0.0]);
        let a1 = diag(&[0.0, 1.0]);
        let id = CMat::identity(2, 2);
        let r = feasibility_point(&[a0, a1, id], &[0.55, 0.55, 1.0], &SdpOptions::default());
        assert!(matches!(r, Err(Error::InfeasibleStatistics(_))));
    }

    #[test]
    fn repair_shifts_pe_entries() {
        let nu = vec![1.0, 2.0, 3.0];
        assert_eq!(repair_certificate(&nu, 2, 0.0), nu);
        assert_eq!(repair_certificate(&nu, 2, 0.5), vec![0.5, 1.5, 3.0]);
    }
}
