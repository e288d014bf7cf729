//! Random matrices and states for sweeps and property checks.

use rand::Rng;
use rand_distr::StandardNormal;

use crate::hermitian::{hermitize, trace, CMatrix, CVector, DensityMatrix, C64};

pub fn complex_normal<R: Rng + ?Sized>(rng: &mut R) -> C64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    C64::new(re, im)
}

/// Matrix with i.i.d. standard complex normal entries.
pub fn ginibre<R: Rng + ?Sized>(rows: usize, cols: usize, rng: &mut R) -> CMatrix {
    CMatrix::from_fn(rows, cols, |_, _| complex_normal(rng))
}

pub fn hermitian<R: Rng + ?Sized>(d: usize, rng: &mut R) -> CMatrix {
    hermitize(&ginibre(d, d, rng))
}

/// Haar-random unit vector.
pub fn pure_vector<R: Rng + ?Sized>(d: usize, rng: &mut R) -> CVector {
    let v = CVector::from_fn(d, |_, _| complex_normal(rng));
    let n = v.norm();
    v / C64::from(n)
}

/// Full-rank state `G G† / Tr(G G†)` from a square Ginibre matrix.
pub fn density<R: Rng + ?Sized>(dims: &[usize], rng: &mut R) -> DensityMatrix {
    density_with_rank(dims, dims.iter().product(), rng)
}

/// Random state of the given rank.
pub fn density_with_rank<R: Rng + ?Sized>(dims: &[usize], rank: usize, rng: &mut R) -> DensityMatrix {
    let d: usize = dims.iter().product();
    let g = ginibre(d, rank, rng);
    let m = &g * g.adjoint();
    let tr = trace(&m);
    DensityMatrix::new(hermitize(&(m / tr)), dims.to_vec()).expect("dims consistent by construction")
}

/// Product of independent random single-subsystem states.
pub fn product_density<R: Rng + ?Sized>(dims: &[usize], rng: &mut R) -> DensityMatrix {
    let mut parts = dims.iter().map(|&d| density(&[d], rng));
    let first = parts.next().expect("at least one subsystem");
    parts.fold(first, |acc, p| acc.tensor(&p))
}
