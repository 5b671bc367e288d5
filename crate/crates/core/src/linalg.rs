//! Dense complex matrix helpers for small Hilbert spaces.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;

pub type CMatrix = DMatrix<Complex64>;

pub const ZERO: Complex64 = Complex64::new(0.0, 0.0);
pub const ONE: Complex64 = Complex64::new(1.0, 0.0);

pub fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

pub fn identity(dim: usize) -> CMatrix {
    CMatrix::identity(dim, dim)
}

/// `|i⟩⟨j|` in dimension `dim`.
pub fn ket_bra(i: usize, j: usize, dim: usize) -> CMatrix {
    let mut m = CMatrix::zeros(dim, dim);
    m[(i, j)] = ONE;
    m
}

pub fn projector(i: usize, dim: usize) -> CMatrix {
    ket_bra(i, i, dim)
}

pub fn from_real_diagonal(diag: &[f64]) -> CMatrix {
    let n = diag.len();
    let mut m = CMatrix::zeros(n, n);
    for (i, &v) in diag.iter().enumerate() {
        m[(i, i)] = c(v, 0.0);
    }
    m
}

/// Builds a matrix from row-major `[re, im]` pairs.
pub fn from_rows(rows: &[Vec<Complex64>]) -> CMatrix {
    let nrows = rows.len();
    let ncols = rows.first().map_or(0, Vec::len);
    CMatrix::from_fn(nrows, ncols, |i, j| rows[i][j])
}

pub fn trace(m: &CMatrix) -> Complex64 {
    m.diagonal().iter().sum()
}

/// Hilbert-Schmidt inner product `Tr(AᴴB)`.
pub fn inner(a: &CMatrix, b: &CMatrix) -> Complex64 {
    a.iter().zip(b.iter()).map(|(x, y)| x.conj() * y).sum()
}

pub fn max_abs(m: &CMatrix) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

pub fn max_abs_diff(a: &CMatrix, b: &CMatrix) -> f64 {
    a.iter()
        .zip(b.iter())
        .map(|(x, y)| (x - y).norm())
        .fold(0.0, f64::max)
}

pub fn hermitian_deviation(m: &CMatrix) -> f64 {
    max_abs_diff(m, &m.adjoint())
}

pub fn hermitian_part(m: &CMatrix) -> CMatrix {
    (m + m.adjoint()) * c(0.5, 0.0)
}

/// Eigen-decomposition of the Hermitian part of `m`, eigenvalues ascending.
///
/// Columns of the returned matrix are the matching orthonormal eigenvectors.
pub fn hermitian_eigen(m: &CMatrix) -> (Vec<f64>, CMatrix) {
    let eig = hermitian_part(m).symmetric_eigen();
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vectors = CMatrix::from_fn(m.nrows(), order.len(), |r, k| {
        eig.eigenvectors[(r, order[k])]
    });
    (values, vectors)
}

pub fn hermitian_eigenvalues(m: &CMatrix) -> Vec<f64> {
    hermitian_eigen(m).0
}

pub fn unitarity_deviation(u: &CMatrix) -> f64 {
    max_abs_diff(&(u.adjoint() * u), &identity(u.ncols()))
}

/// `|⟨A,B⟩| / d`, which is 1 exactly when unitaries `A` and `B` agree up to
/// a global phase.
pub fn phase_overlap(a: &CMatrix, b: &CMatrix) -> f64 {
    inner(a, b).norm() / a.nrows() as f64
}

pub fn equal_up_to_phase(a: &CMatrix, b: &CMatrix, tol: f64) -> bool {
    a.shape() == b.shape() && (phase_overlap(a, b) - 1.0).abs() <= tol
}

/// Multiplies by a global phase so that the first entry with non-negligible
/// modulus is real and positive.
pub fn canonical_phase(u: &CMatrix) -> CMatrix {
    match u.iter().find(|z| z.norm() > 1e-8) {
        Some(z) => u * (z.conj() / z.norm()),
        None => u.clone(),
    }
}

/// `exp(-i t H)` for Hermitian `H`.
pub fn unitary_exp(h: &CMatrix, t: f64) -> CMatrix {
    if t == 0.0 {
        return identity(h.nrows());
    }
    let (values, vectors) = hermitian_eigen(h);
    let phases: Vec<Complex64> = values
        .iter()
        .map(|&lambda| Complex64::from_polar(1.0, -t * lambda))
        .collect();
    let scaled = CMatrix::from_fn(vectors.nrows(), vectors.ncols(), |i, k| {
        vectors[(i, k)] * phases[k]
    });
    scaled * vectors.adjoint()
}

pub fn complex_gaussian<R: Rng + ?Sized>(rows: usize, cols: usize, rng: &mut R) -> CMatrix {
    CMatrix::from_fn(rows, cols, |_, _| {
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        c(re, im)
    })
}

/// Columns of a Haar-distributed isometry from `cols` into `rows` dimensions.
///
/// QR of a complex Gaussian matrix with the phases of `R`'s diagonal pushed
/// into `Q`.
pub fn random_isometry<R: Rng + ?Sized>(rows: usize, cols: usize, rng: &mut R) -> CMatrix {
    assert!(rows >= cols, "isometry needs rows >= cols");
    let qr = complex_gaussian(rows, cols, rng).qr();
    let r = qr.r();
    let mut q = qr.q();
    for k in 0..cols {
        let d = r[(k, k)];
        let phase = if d.norm() > 0.0 { d / d.norm() } else { ONE };
        for i in 0..rows {
            q[(i, k)] *= phase;
        }
    }
    q
}

pub fn random_unitary<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> CMatrix {
    random_isometry(dim, dim, rng)
}

/// Haar-random pure state `|ψ⟩⟨ψ|`.
pub fn random_pure_state<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> CMatrix {
    let g = complex_gaussian(dim, 1, rng);
    let psi = &g / c(g.norm(), 0.0);
    &psi * psi.adjoint()
}

/// Random mixed state from a Ginibre matrix, `GGᴴ / Tr(GGᴴ)`.
pub fn random_mixed_state<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> CMatrix {
    let g = complex_gaussian(dim, dim, rng);
    let rho = &g * g.adjoint();
    let t = trace(&rho).re;
    rho / c(t, 0.0)
}
