//! Small dense complex linear algebra used throughout the crate.
//!
//! Matrices here are at most a few hundred rows, so everything is dense and
//! built on `nalgebra`.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;

pub type CMat = DMatrix<Complex64>;
pub type CVec = DVector<Complex64>;

pub const ZERO: Complex64 = Complex64::new(0.0, 0.0);
pub const ONE: Complex64 = Complex64::new(1.0, 0.0);

pub fn c(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}

/// Kronecker product `a ⊗ b`.
pub fn kron(a: &CMat, b: &CMat) -> CMat {
    let (ar, ac) = a.shape();
    let (br, bc) = b.shape();
    let mut out = CMat::zeros(ar * br, ac * bc);
    for i in 0..ar {
        for j in 0..ac {
            let s = a[(i, j)];
            if s == ZERO {
                continue;
            }
            for k in 0..br {
                for l in 0..bc {
                    out[(i * br + k, j * bc + l)] = s * b[(k, l)];
                }
            }
        }
    }
    out
}

/// `|i⟩⟨i|` on an `n`-dimensional space.
pub fn basis_projector(n: usize, i: usize) -> CMat {
    let mut p = CMat::zeros(n, n);
    p[(i, i)] = ONE;
    p
}

pub fn frobenius(m: &CMat) -> f64 {
    m.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// Eigen-decomposition of a Hermitian matrix, eigenvalues in descending order.
///
/// Only the Hermitian part `(m + m†)/2` is decomposed.
pub fn hermitian_eigen(m: &CMat) -> (Vec<f64>, CMat) {
    let n = m.nrows();
    let herm = (m + m.adjoint()).scale(0.5);
    let eig = herm.symmetric_eigen();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| {
        eig.eigenvalues[j]
            .partial_cmp(&eig.eigenvalues[i])
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(i.cmp(&j))
    });
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let mut vectors = CMat::zeros(n, n);
    for (col, &i) in order.iter().enumerate() {
        vectors.set_column(col, &eig.eigenvectors.column(i));
    }
    (values, vectors)
}

/// Largest eigenvalue of a Hermitian matrix and a unit eigenvector for it.
///
/// When the top eigenvalue is degenerate (within `degeneracy_tol`), the vector
/// returned is the normalized projection of the first computational basis
/// vector with non-negligible overlap onto the top eigenspace, so the choice
/// does not depend on the eigensolver's internal basis. The global phase is
/// fixed so that the first non-negligible component is real and positive.
pub fn principal_eigenvector(m: &CMat, degeneracy_tol: f64) -> (f64, CVec) {
    let (values, vectors) = hermitian_eigen(m);
    let top = values[0];
    let k = values.iter().take_while(|&&v| top - v <= degeneracy_tol).count();
    let mut v = if k == 1 {
        vectors.column(0).into_owned()
    } else {
        let basis = vectors.columns(0, k);
        let mut chosen = None;
        for i in 0..m.nrows() {
            // projection of e_i onto span(basis): basis * (basis† e_i)
            let coeffs: CVec = basis.row(i).adjoint();
            let proj = basis * coeffs;
            let norm = proj.norm();
            if norm > 1e-6 {
                chosen = Some(proj.unscale(norm));
                break;
            }
        }
        chosen.unwrap_or_else(|| vectors.column(0).into_owned())
    };
    fix_phase(&mut v);
    (top, v)
}

/// Rotate the global phase so the first component with modulus above 1e-12 is real positive.
pub fn fix_phase(v: &mut CVec) {
    if let Some(z) = v.iter().find(|z| z.norm() > 1e-12).copied() {
        let phase = z.conj() / z.norm();
        for e in v.iter_mut() {
            *e *= phase;
        }
    }
}

/// Orthogonal projector onto the span of the given orthonormal columns.
pub fn projector_from_columns(cols: &[CVec], n: usize) -> CMat {
    let mut p = CMat::zeros(n, n);
    for v in cols {
        p += v * v.adjoint();
    }
    p
}

/// Orthonormal basis of the range of a (near-)projector, eigenvalues above 1/2.
pub fn range_basis(p: &CMat) -> Vec<CVec> {
    let (values, vectors) = hermitian_eigen(p);
    values
        .iter()
        .enumerate()
        .take_while(|(_, &v)| v > 0.5)
        .map(|(i, _)| vectors.column(i).into_owned())
        .collect()
}

pub fn random_gaussian_matrix<R: Rng + ?Sized>(n: usize, m: usize, rng: &mut R) -> CMat {
    CMat::from_fn(n, m, |_, _| {
        Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
    })
}

/// Haar-random unitary via QR of a complex Ginibre matrix with the phases of
/// R's diagonal absorbed into Q.
pub fn haar_unitary<R: Rng + ?Sized>(n: usize, rng: &mut R) -> CMat {
    let z = random_gaussian_matrix(n, n, rng);
    let qr = z.qr();
    let mut q = qr.q();
    let r = qr.r();
    for j in 0..n {
        let d = r[(j, j)];
        let norm = d.norm();
        let phase = if norm > 0.0 { d / norm } else { ONE };
        for i in 0..n {
            q[(i, j)] *= phase;
        }
    }
    q
}

/// Haar-random unit vector.
pub fn random_state<R: Rng + ?Sized>(n: usize, rng: &mut R) -> CVec {
    let v = CVec::from_fn(n, |_, _| {
        Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
    });
    let norm = v.norm();
    v.unscale(norm)
}

/// GUE-distributed Hermitian matrix scaled to unit Frobenius norm.
pub fn random_hermitian<R: Rng + ?Sized>(n: usize, rng: &mut R) -> CMat {
    let g = random_gaussian_matrix(n, n, rng);
    let h = (&g + g.adjoint()).scale(0.5);
    let norm = frobenius(&h);
    h.unscale(norm)
}

/// `exp(i t H)` for Hermitian `H`, via its eigen-decomposition.
pub fn unitary_from_hermitian(h: &CMat, t: f64) -> CMat {
    let (values, vectors) = hermitian_eigen(h);
    let phases = CMat::from_diagonal(&CVec::from_iterator(
        values.len(),
        values.iter().map(|&l| Complex64::from_polar(1.0, t * l)),
    ));
    &vectors * phases * vectors.adjoint()
}
