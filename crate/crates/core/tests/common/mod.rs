#![allow(dead_code)]

use lossbench_core::linalg::{self, CMatrix};
use lossbench_core::noise::random_lossy_channel;
use lossbench_core::rng::{self, StreamRng};
use lossbench_core::{DensityMatrix, MeasurementOperator, QuantumChannel};
use num_complex::Complex64;
use rand::Rng;

pub fn apply_kraus(kraus: &[CMatrix], rho: &CMatrix) -> CMatrix {
    let d = rho.nrows();
    kraus
        .iter()
        .fold(CMatrix::zeros(d, d), |acc, k| acc + k * rho * k.adjoint())
}

pub fn tr(m: &CMatrix) -> f64 {
    (0..m.nrows()).map(|i| m[(i, i)].re).sum()
}

pub fn tr_product(q: &CMatrix, rho: &CMatrix) -> f64 {
    tr(&(q * rho))
}

/// A POVM element `U diag(u) Uᴴ` with `u` uniform in `[0, 1]`.
pub fn random_povm(dim: usize, rng: &mut StreamRng) -> MeasurementOperator {
    let u = linalg::random_unitary(dim, rng);
    let diag: Vec<f64> = (0..dim).map(|_| rng.random::<f64>()).collect();
    let m = &u * linalg::from_real_diagonal(&diag) * u.adjoint();
    MeasurementOperator::new(linalg::hermitian_part(&m)).unwrap()
}

pub struct Triple {
    pub channel: QuantumChannel,
    pub rho: DensityMatrix,
    pub q: MeasurementOperator,
}

pub fn random_triple(dim: usize, seed: u64) -> Triple {
    let mut rng = rng::stream(seed, 9, 9, rng::purpose::MODEL);
    let loss_scale = 0.05 + 0.4 * rng.random::<f64>();
    let channel = random_lossy_channel(dim, loss_scale, seed).unwrap();
    let rho = DensityMatrix::checked(linalg::random_mixed_state(dim, &mut rng)).unwrap();
    let q = random_povm(dim, &mut rng);
    Triple { channel, rho, q }
}

pub fn scale(m: &CMatrix, s: f64) -> CMatrix {
    m * Complex64::new(s, 0.0)
}
