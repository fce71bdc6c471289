//! Dense complex linear-algebra helpers shared by every numeric module.

use nalgebra::{Complex, DMatrix, DVector, SymmetricEigen};

pub type C64 = Complex<f64>;
pub type CMat = DMatrix<C64>;
pub type CVec = DVector<C64>;

pub fn c(re: f64, im: f64) -> C64 {
    Complex::new(re, im)
}

/// Hermitian eigendecomposition with ascending eigenvalues.
pub fn eigh(a: &CMat) -> (Vec<f64>, CMat) {
    let h = hermitize(a);
    let eig = SymmetricEigen::new(h);
    let n = eig.eigenvalues.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
    let vals = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vecs = CMat::from_fn(n, n, |r, k| eig.eigenvectors[(r, order[k])]);
    (vals, vecs)
}

/// Eigenvalues only, ascending.
pub fn eigvalsh(a: &CMat) -> Vec<f64> {
    let mut v: Vec<f64> = SymmetricEigen::new(hermitize(a)).eigenvalues.iter().copied().collect();
    v.sort_by(f64::total_cmp);
    v
}

/// Smallest eigenvalue together with an a posteriori residual bound
/// `max_k ||A v_k - λ_k v_k||` over the computed eigenpairs.
pub fn lambda_min_with_residual(a: &CMat) -> (f64, f64) {
    let h = hermitize(a);
    let (vals, vecs) = eigh(&h);
    let av = &h * &vecs;
    let mut res = 0.0f64;
    for (k, &l) in vals.iter().enumerate() {
        let r = (av.column(k) - vecs.column(k) * c(l, 0.0)).norm();
        res = res.max(r);
    }
    (vals[0], res)
}

pub fn lambda_min(a: &CMat) -> f64 {
    eigvalsh(a)[0]
}

/// `(A + A†)/2`.
pub fn hermitize(a: &CMat) -> CMat {
    (a + a.adjoint()) * c(0.5, 0.0)
}

/// Largest absolute entry of `A − A†`.
pub fn hermiticity_residual(a: &CMat) -> f64 {
    let n = a.nrows();
    let mut r = 0.0f64;
    for i in 0..n {
        for j in i..n {
            r = r.max((a[(i, j)] - a[(j, i)].conj()).norm());
        }
    }
    r
}

/// Applies `f` to the spectrum of a Hermitian matrix.
pub fn spectral_map<F: Fn(f64) -> f64>(a: &CMat, f: F) -> CMat {
    let (vals, vecs) = eigh(a);
    let mut scaled = vecs.clone();
    for (k, &l) in vals.iter().enumerate() {
        let s = f(l);
        scaled.column_mut(k).scale_mut(s);
    }
    &scaled * vecs.adjoint()
}

/// `Re Tr[A B]`, without forming the product.
pub fn trace_prod(a: &CMat, b: &CMat) -> f64 {
    let n = a.nrows();
    let mut s = 0.0;
    for i in 0..n {
        for j in 0..a.ncols() {
            let x = a[(i, j)];
            let y = b[(j, i)];
            s += x.re * y.re - x.im * y.im;
        }
    }
    s
}

pub fn trace_re(a: &CMat) -> f64 {
    a.diagonal().iter().map(|z| z.re).sum()
}

pub fn kron(a: &CMat, b: &CMat) -> CMat {
    let (ar, ac) = a.shape();
    let (br, bc) = b.shape();
    CMat::from_fn(ar * br, ac * bc, |i, j| a[(i / br, j / bc)] * b[(i % br, j % bc)])
}

pub fn identity(n: usize) -> CMat {
    CMat::identity(n, n)
}

/// Von Neumann entropy in bits from a list of eigenvalues, `0 log 0 = 0`.
pub fn entropy_bits_from_eigs(vals: &[f64]) -> f64 {
    vals.iter()
        .filter(|&&l| l > 0.0)
        .map(|&l| -l * l.log2())
        .sum()
}

/// Shannon entropy in bits.
pub fn shannon_bits(p: &[f64]) -> f64 {
    entropy_bits_from_eigs(p)
}

/// Largest absolute entry.
pub fn max_abs(a: &CMat) -> f64 {
    a.iter().fold(0.0, |m, z| m.max(z.norm()))
}

/// Maximum absolute deviation from the identity.
pub fn identity_residual(a: &CMat) -> f64 {
    max_abs(&(a - identity(a.nrows())))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn eigh_reconstructs() {
        let a = CMat::from_fn(5, 5, |i, j| c((i + 2 * j) as f64 * 0.1, (i as f64 - j as f64) * 0.3));
        let h = hermitize(&a);
        let (vals, vecs) = eigh(&h);
        let d = CMat::from_diagonal(&CVec::from_iterator(5, vals.iter().map(|&l| c(l, 0.0))));
        let back = &vecs * d * vecs.adjoint();
        assert!(max_abs(&(back - &h)) < 1e-12);
        assert!(vals.windows(2).all(|w| w[0] <= w[1]));
    }

    #[test]
    fn trace_prod_matches_product() {
        let a = CMat::from_fn(4, 4, |i, j| c(i as f64 - 0.5 * j as f64, (i * j) as f64 * 0.1));
        let b = CMat::from_fn(4, 4, |i, j| c((i + j) as f64, 1.0 / (1.0 + i as f64 + j as f64)));
        let direct = (&a * &b).trace().re;
        assert!((trace_prod(&a, &b) - direct).abs() < 1e-12);
    }

    #[test]
    fn kron_shape_and_entries() {
        let a = CMat::from_fn(2, 2, |i, j| c((i * 2 + j) as f64, 0.0));
        let b = identity(3);
        let k = kron(&a, &b);
        assert_eq!(k.shape(), (6, 6));
        assert_eq!(k[(4, 1)], c(2.0, 0.0));
        assert_eq!(k[(4, 2)], c(0.0, 0.0));
    }
}
