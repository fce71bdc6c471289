#![allow(dead_code)]

use std::f64::consts::PI;

use cvqkd_core::convex::nelder_mead;
use cvqkd_core::linalg::{c, eigh, lambda_min, trace_prod, CMat};
use cvqkd_core::sdp::independent_rows;
use cvqkd_core::special::{integrate, ln_factorial};
use nalgebra::DMatrix;
use rand::Rng;
use rand_chacha::ChaCha20Rng;
use rand_distr::{Binomial, Distribution, StandardNormal};

pub fn rng(seed: u64) -> ChaCha20Rng {
    rand::SeedableRng::seed_from_u64(seed)
}

pub fn random_hermitian(d: usize, rng: &mut ChaCha20Rng) -> CMat {
    let mut a = CMat::zeros(d, d);
    for i in 0..d {
        for j in 0..d {
            let re: f64 = StandardNormal.sample(rng);
            let im: f64 = StandardNormal.sample(rng);
            a[(i, j)] = c(re, im);
        }
    }
    (&a + a.adjoint()) * c(0.5, 0.0)
}

pub fn random_density(d: usize, rng: &mut ChaCha20Rng) -> CMat {
    let g = random_hermitian(d, rng);
    let p = &g * &g + CMat::identity(d, d) * c(1e-3, 0.0);
    let t = p.trace().re;
    p / c(t, 0.0)
}

/// Projection of `delta` onto `{Δ : Tr[A_i Δ] = 0 ∀i}`.
pub struct Tangent {
    rows: Vec<CMat>,
    gram_inv: DMatrix<f64>,
}

impl Tangent {
    pub fn new(constraints: &[CMat]) -> Self {
        let keep = independent_rows(constraints);
        let rows: Vec<CMat> = keep.iter().map(|&i| constraints[i].clone()).collect();
        let k = rows.len();
        let gram = DMatrix::from_fn(k, k, |i, j| trace_prod(&rows[i], &rows[j]));
        let gram_inv = gram.try_inverse().expect("independent rows");
        Self { rows, gram_inv }
    }

    pub fn project(&self, delta: &CMat) -> CMat {
        let t: Vec<f64> = self.rows.iter().map(|a| trace_prod(a, delta)).collect();
        let mut out = delta.clone();
        for (i, a) in self.rows.iter().enumerate() {
            let w: f64 = (0..t.len()).map(|j| self.gram_inv[(i, j)] * t[j]).sum();
            out -= a * c(w, 0.0);
        }
        out
    }
}

/// Largest `t` with `x + tΔ ⪰ 0`, for `x ≻ 0`.
pub fn max_step(x: &CMat, delta: &CMat) -> f64 {
    let (vals, vecs) = eigh(x);
    let inv_sqrt = {
        let mut s = vecs.clone();
        for (k, &l) in vals.iter().enumerate() {
            s.column_mut(k).scale_mut(1.0 / l.sqrt());
        }
        &s * vecs.adjoint()
    };
    let m = &inv_sqrt * delta * &inv_sqrt;
    let lo = lambda_min(&m);
    if lo >= 0.0 {
        f64::INFINITY
    } else {
        -1.0 / lo
    }
}

/// Region-operator entry by nested adaptive quadrature of `⟨m|y⟩⟨y|n⟩/π` in polar form.
pub fn region_entry_quadrature(m: usize, n: usize, r_lo: f64, r_hi: f64, th_lo: f64, th_hi: f64) -> (f64, f64) {
    let r_top = if r_hi.is_finite() { r_hi } else { r_lo.max(1.0) + 40.0 };
    let norm = (-(0.5 * (ln_factorial(m) + ln_factorial(n)))).exp();
    let k = m as f64 - n as f64;
    let f = |r: f64| (-r * r).exp() * r.powi((m + n) as i32) * r;
    let peak = (((m + n + 1) as f64) / 2.0).sqrt().clamp(r_lo, r_top);
    let tol = 1e-13 / norm;
    let radial = integrate(f, r_lo, peak, tol).expect("radial quadrature")
        + integrate(f, peak, r_top, tol).expect("radial quadrature");
    let angular = |trig: fn(f64) -> f64| integrate(|t| trig(k * t), th_lo, th_hi, 1e-15).expect("angular quadrature");
    let w = radial * norm / PI;
    (w * angular(f64::cos), w * angular(f64::sin))
}

/// Multinomial draw by sequential conditional binomials.
pub fn multinomial(n: u64, p: &[f64], rng: &mut ChaCha20Rng) -> Vec<u64> {
    let mut out = vec![0u64; p.len()];
    let mut left = n;
    let mut mass = 1.0f64;
    for (i, &pi) in p.iter().enumerate() {
        if left == 0 {
            break;
        }
        if i + 1 == p.len() {
            out[i] = left;
            break;
        }
        let q = if mass > 0.0 { (pi / mass).clamp(0.0, 1.0) } else { 0.0 };
        let k = Binomial::new(left, q).expect("valid binomial").sample(rng);
        out[i] = k;
        left -= k;
        mass -= pi;
    }
    out
}

/// Random SDP: trace-one constraint plus random equalities consistent with a random
/// full-rank density matrix.
pub struct RandomSdp {
    pub objective: CMat,
    pub constraints: Vec<CMat>,
    pub rhs: Vec<f64>,
    /// Strictly feasible point the instance was built from.
    pub interior: CMat,
}

pub fn random_sdp(d: usize, k: usize, rng: &mut ChaCha20Rng) -> RandomSdp {
    let x0 = random_density(d, rng);
    let mut constraints = vec![CMat::identity(d, d)];
    for _ in 1..k {
        constraints.push(random_hermitian(d, rng));
    }
    let rhs = constraints.iter().map(|a| trace_prod(a, &x0)).collect();
    RandomSdp { objective: random_hermitian(d, rng), constraints, rhs, interior: x0 }
}

/// `max b·y` over `C − Σ y_i A_i ⪰ 0`. The identity row is eliminated exactly,
/// `y_0 = λ_min(C − Σ_{i≥1} y_i A_i)`, and the remaining concave function is maximized
/// by Nelder-Mead on a log-sum-exp smoothing of `λ_min` with decreasing temperature.
pub fn dual_oracle(p: &RandomSdp, rng: &mut ChaCha20Rng) -> f64 {
    let k = p.constraints.len();
    let spectrum = |y: &[f64]| {
        let mut s = p.objective.clone();
        for (a, yi) in p.constraints[1..].iter().zip(y) {
            s -= a * c(*yi, 0.0);
        }
        eigh(&s).0
    };
    let linear = |y: &[f64]| y.iter().zip(&p.rhs[1..]).map(|(a, b)| a * b).sum::<f64>();
    let exact = |y: &[f64]| {
        let lo = spectrum(y).iter().copied().fold(f64::INFINITY, f64::min);
        p.rhs[0] * lo + linear(y)
    };
    if k == 1 {
        return exact(&[]);
    }
    let mut best = f64::NEG_INFINITY;
    for restart in 0..4 {
        let mut y: Vec<f64> =
            (1..k).map(|_| if restart == 0 { 0.0 } else { rng.random_range(-1.0..1.0) }).collect();
        let mut mu = 0.1;
        while mu > 1e-9 {
            let smooth = |y: &[f64]| {
                let vals = spectrum(y);
                let lo = vals.iter().copied().fold(f64::INFINITY, f64::min);
                let soft = lo - mu * vals.iter().map(|v| (-(v - lo) / mu).exp()).sum::<f64>().ln();
                -(p.rhs[0] * soft + linear(y))
            };
            let mut f_prev = f64::INFINITY;
            for _ in 0..10 {
                let (yn, fv) = nelder_mead(smooth, &y, (10.0 * mu).min(0.5), 1e-15, 20_000);
                y = yn;
                if (f_prev - fv).abs() < 1e-13 {
                    break;
                }
                f_prev = fv;
            }
            mu *= 0.1;
        }
        best = best.max(exact(&y));
    }
    best
}

/// Hit-and-run walk over the primal feasible set; returns the smallest objective seen.
pub fn primal_sampler(p: &RandomSdp, steps: usize, rng: &mut ChaCha20Rng) -> f64 {
    let tangent = Tangent::new(&p.constraints);
    let d = p.interior.nrows();
    let mut x = p.interior.clone();
    let mut best = trace_prod(&p.objective, &x);
    for _ in 0..steps {
        let raw = random_hermitian(d, rng);
        let dir = tangent.project(&raw);
        if dir.norm() < 1e-8 * raw.norm() {
            continue;
        }
        let up = max_step(&x, &dir);
        let down = max_step(&x, &(-&dir));
        if !up.is_finite() || !down.is_finite() {
            continue;
        }
        let t = rng.random_range(-down * 0.999..up * 0.999);
        x += &dir * c(t, 0.0);
        best = best.min(trace_prod(&p.objective, &x));
    }
    best
}
