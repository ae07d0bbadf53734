//! Random fixtures for unit tests.

use nalgebra::{DMatrix, Matrix2};
use num_complex::Complex64;
use rand::Rng;

use crate::qmatrix::{DensityMatrix, QubitChannel};

pub fn normal<R: Rng>(rng: &mut R) -> f64 {
    let u1: f64 = rng.gen_range(f64::EPSILON..1.0);
    let u2: f64 = rng.gen();
    (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
}

pub fn ginibre<R: Rng>(rng: &mut R, rows: usize, cols: usize) -> DMatrix<Complex64> {
    DMatrix::from_fn(rows, cols, |_, _| Complex64::new(normal(rng), normal(rng)))
}

pub fn random_density<R: Rng>(rng: &mut R, d: usize) -> DensityMatrix {
    let g = ginibre(rng, d, d);
    let m = &g * g.adjoint();
    let tr = m.trace();
    DensityMatrix::new(m / tr).unwrap()
}

pub fn random_unitary<R: Rng>(rng: &mut R, d: usize) -> DMatrix<Complex64> {
    ginibre(rng, d, d).qr().q()
}

/// Random channel with `k` Kraus operators cut from a random isometry.
pub fn random_cptp<R: Rng>(rng: &mut R, k: usize) -> QubitChannel {
    let v = ginibre(rng, 2 * k, 2).qr().q();
    let ops = (0..k)
        .map(|i| Matrix2::from_fn(|r, c| v[(2 * i + r, c)]))
        .collect();
    QubitChannel::from_kraus(ops).unwrap()
}
