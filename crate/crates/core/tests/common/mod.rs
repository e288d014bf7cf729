//! Independent reference computations for integration tests. Nothing here
//! calls into the library's algebra, only its types.
#![allow(dead_code)]

use disentangle_core::hermitian::{CMatrix, C64};
use nalgebra::DMatrix;

pub fn c(re: f64) -> C64 {
    C64::new(re, 0.0)
}

pub fn sigma() -> [CMatrix; 4] {
    let z = C64::new(0.0, 0.0);
    let o = C64::new(1.0, 0.0);
    let i = C64::new(0.0, 1.0);
    [
        DMatrix::from_row_slice(2, 2, &[o, z, z, o]),
        DMatrix::from_row_slice(2, 2, &[z, o, o, z]),
        DMatrix::from_row_slice(2, 2, &[z, -i, i, z]),
        DMatrix::from_row_slice(2, 2, &[o, z, z, -o]),
    ]
}

/// Kronecker product by explicit index arithmetic.
pub fn kron(a: &CMatrix, b: &CMatrix) -> CMatrix {
    let (ra, ca) = a.shape();
    let (rb, cb) = b.shape();
    CMatrix::from_fn(ra * rb, ca * cb, |i, j| a[(i / rb, j / cb)] * b[(i % rb, j % cb)])
}

/// Reduced states of a `da × db` bipartite matrix, by explicit sums.
pub fn reduce(rho: &CMatrix, da: usize, db: usize) -> (CMatrix, CMatrix) {
    let ra = CMatrix::from_fn(da, da, |i, j| (0..db).map(|k| rho[(i * db + k, j * db + k)]).sum());
    let rb = CMatrix::from_fn(db, db, |i, j| (0..da).map(|k| rho[(k * db + i, k * db + j)]).sum());
    (ra, rb)
}

pub fn tr(m: &CMatrix) -> C64 {
    (0..m.nrows()).map(|i| m[(i, i)]).sum()
}

/// `i[ρ,H] − Θρ − ρΘ + 2Tr(Θρ)ρ`, written out.
pub fn rhs_oracle(rho: &CMatrix, h: &CMatrix, theta: &CMatrix) -> CMatrix {
    let i = C64::new(0.0, 1.0);
    let mean = tr(&(theta * rho));
    (rho * h - h * rho) * i - theta * rho - rho * theta + rho * (mean * c(2.0))
}

pub fn max_entry(m: &CMatrix) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// Shannon entropy of a probability vector, `0 log 0 = 0`.
pub fn shannon(p: &[f64]) -> f64 {
    p.iter().filter(|&&x| x > 0.0).map(|x| -x * x.ln()).sum()
}
