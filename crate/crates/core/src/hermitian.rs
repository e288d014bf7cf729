//! Dense complex Hermitian algebra for small composite systems.
//!
//! Every matrix function (log, exp, entropy) goes through a spectral
//! decomposition of the Hermitized input. Dimensions here are tiny (a few
//! qubits), so the O(D³) cost is irrelevant next to the guarantee that the
//! result shares the eigenbasis of its argument.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type C64 = Complex64;
pub type CMatrix = DMatrix<C64>;
pub type CVector = DVector<C64>;

/// Default eigenvalue floor applied inside matrix logarithms.
pub const DEFAULT_EPS_LOG: f64 = 1e-12;

pub fn identity(d: usize) -> CMatrix {
    CMatrix::identity(d, d)
}

pub fn trace(m: &CMatrix) -> C64 {
    m.diagonal().iter().sum()
}

/// `(M + M†) / 2`
pub fn hermitize(m: &CMatrix) -> CMatrix {
    (m + m.adjoint()) * C64::new(0.5, 0.0)
}

/// Largest entry of `|M − M†|`.
pub fn hermiticity_defect(m: &CMatrix) -> f64 {
    (m - m.adjoint()).iter().map(|z| z.norm()).fold(0.0, f64::max)
}

pub fn max_abs(m: &CMatrix) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// Real part of `Tr(X ρ)`, computed without forming the product.
pub fn expectation(x: &CMatrix, rho: &CMatrix) -> f64 {
    trace_product(x, rho).re
}

/// `Tr(A B)` in O(D²).
pub fn trace_product(a: &CMatrix, b: &CMatrix) -> C64 {
    let n = a.nrows();
    let mut acc = C64::new(0.0, 0.0);
    for i in 0..n {
        for k in 0..n {
            acc += a[(i, k)] * b[(k, i)];
        }
    }
    acc
}

/// Kronecker product `A ⊗ B`.
pub fn tensor_product(a: &CMatrix, b: &CMatrix) -> CMatrix {
    a.kronecker(b)
}

pub fn commutator(a: &CMatrix, b: &CMatrix) -> CMatrix {
    a * b - b * a
}

pub fn anticommutator(a: &CMatrix, b: &CMatrix) -> CMatrix {
    a * b + b * a
}

/// Pauli matrices in the order (σ₁, σ₂, σ₃), with |↑⟩ as basis index 0.
pub fn pauli() -> [CMatrix; 3] {
    let o = C64::new(0.0, 0.0);
    let one = C64::new(1.0, 0.0);
    let i = C64::new(0.0, 1.0);
    [
        CMatrix::from_row_slice(2, 2, &[o, one, one, o]),
        CMatrix::from_row_slice(2, 2, &[o, -i, i, o]),
        CMatrix::from_row_slice(2, 2, &[one, o, o, -one]),
    ]
}

/// `σ·n` for a real 3-vector `n`.
pub fn spin_along(n: [f64; 3]) -> CMatrix {
    let [x, y, z] = pauli();
    x * C64::from(n[0]) + y * C64::from(n[1]) + z * C64::from(n[2])
}

/// Density operator of a (possibly composite) system.
///
/// Construction only checks shapes. Physical validity is reported by
/// [`check_density`].
#[derive(Clone, Debug, PartialEq)]
pub struct DensityMatrix {
    mat: CMatrix,
    dims: Vec<usize>,
}

impl DensityMatrix {
    pub fn new(mat: CMatrix, dims: Vec<usize>) -> Result<Self> {
        if mat.nrows() != mat.ncols() {
            return Err(Error::Dimension(format!(
                "matrix is not square: {}x{}",
                mat.nrows(),
                mat.ncols()
            )));
        }
        if dims.is_empty() || dims.contains(&0) {
            return Err(Error::Dimension(format!("invalid subsystem dims {dims:?}")));
        }
        let prod: usize = dims.iter().product();
        if prod != mat.nrows() {
            return Err(Error::Dimension(format!(
                "subsystem dims {dims:?} multiply to {prod}, matrix is {}x{}",
                mat.nrows(),
                mat.nrows()
            )));
        }
        Ok(Self { mat, dims })
    }

    /// Single-system state with `dims = [D]`.
    pub fn single(mat: CMatrix) -> Result<Self> {
        let d = mat.nrows();
        Self::new(mat, vec![d])
    }

    /// `|ψ⟩⟨ψ| / ⟨ψ|ψ⟩`
    pub fn from_pure(psi: &CVector, dims: Vec<usize>) -> Result<Self> {
        let norm2 = psi.norm_squared();
        if !(norm2 > 0.0) || !norm2.is_finite() {
            return Err(Error::Domain("state vector has zero or non-finite norm".into()));
        }
        let mat = psi * psi.adjoint() / C64::from(norm2);
        Self::new(mat, dims)
    }

    pub fn maximally_mixed(dims: Vec<usize>) -> Result<Self> {
        let d: usize = dims.iter().product();
        Self::new(identity(d) / C64::from(d as f64), dims)
    }

    pub fn dim(&self) -> usize {
        self.mat.nrows()
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.mat
    }

    pub fn into_matrix(self) -> CMatrix {
        self.mat
    }

    /// Same dims, different entries.
    pub fn with_matrix(&self, mat: CMatrix) -> Result<Self> {
        Self::new(mat, self.dims.clone())
    }

    /// `(1 − ε) ρ + ε I / D`
    pub fn mixed_with_identity(&self, eps: f64) -> Self {
        let d = self.dim() as f64;
        let mat = &self.mat * C64::from(1.0 - eps) + identity(self.dim()) * C64::from(eps / d);
        Self {
            mat,
            dims: self.dims.clone(),
        }
    }

    /// `ρ ⊗ σ` with subsystem dims concatenated.
    pub fn tensor(&self, other: &DensityMatrix) -> Self {
        let mut dims = self.dims.clone();
        dims.extend_from_slice(&other.dims);
        Self {
            mat: tensor_product(&self.mat, &other.mat),
            dims,
        }
    }

    pub fn expectation(&self, x: &CMatrix) -> f64 {
        expectation(x, &self.mat)
    }

    fn require_bipartite(&self) -> Result<(usize, usize)> {
        match self.dims.as_slice() {
            [da, db] => Ok((*da, *db)),
            other => Err(Error::Dimension(format!(
                "bipartite state required, got dims {other:?}"
            ))),
        }
    }
}

/// Reduced state of subsystem `keep`, tracing out all the others.
pub fn partial_trace(rho: &DensityMatrix, keep: usize) -> Result<DensityMatrix> {
    let dims = rho.dims();
    if keep >= dims.len() {
        return Err(Error::Dimension(format!(
            "subsystem index {keep} out of range for dims {dims:?}"
        )));
    }
    let left: usize = dims[..keep].iter().product();
    let mid = dims[keep];
    let right: usize = dims[keep + 1..].iter().product();
    let m = rho.matrix();
    let mut out = CMatrix::zeros(mid, mid);
    for i in 0..mid {
        for j in 0..mid {
            let mut acc = C64::new(0.0, 0.0);
            for l in 0..left {
                for r in 0..right {
                    acc += m[((l * mid + i) * right + r, (l * mid + j) * right + r)];
                }
            }
            out[(i, j)] = acc;
        }
    }
    DensityMatrix::new(out, vec![mid])
}

/// Eigen-decomposition of a Hermitian matrix, eigenvalues ascending.
#[derive(Clone, Debug)]
pub struct Spectrum {
    pub eigenvalues: DVector<f64>,
    /// Unitary matrix whose columns are the eigenvectors.
    pub eigenvectors: CMatrix,
}

impl Spectrum {
    /// `V f(diag e) V†`
    pub fn map(&self, f: impl Fn(f64) -> f64) -> CMatrix {
        let n = self.eigenvalues.len();
        let mut scaled = self.eigenvectors.clone();
        for j in 0..n {
            let fj = C64::from(f(self.eigenvalues[j]));
            for i in 0..n {
                scaled[(i, j)] *= fj;
            }
        }
        scaled * self.eigenvectors.adjoint()
    }

    pub fn reconstruct(&self) -> CMatrix {
        self.map(|e| e)
    }

    pub fn min(&self) -> f64 {
        self.eigenvalues[0]
    }

    pub fn max(&self) -> f64 {
        self.eigenvalues[self.eigenvalues.len() - 1]
    }
}

/// Spectral decomposition; the input is Hermitized first.
pub fn herm_eig(m: &CMatrix) -> Result<Spectrum> {
    if m.nrows() != m.ncols() {
        return Err(Error::Dimension("eigendecomposition of non-square matrix".into()));
    }
    if m.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(Error::NonFinite);
    }
    let eig = hermitize(m).symmetric_eigen();
    let n = m.nrows();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let eigenvalues = DVector::from_iterator(n, order.iter().map(|&k| eig.eigenvalues[k]));
    let mut eigenvectors = CMatrix::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        eigenvectors.set_column(dst, &eig.eigenvectors.column(src));
    }
    Ok(Spectrum {
        eigenvalues,
        eigenvectors,
    })
}

pub fn eigenvalues(m: &CMatrix) -> Result<DVector<f64>> {
    Ok(herm_eig(m)?.eigenvalues)
}

/// `log ρ` with every eigenvalue floored at `eps_log` first.
pub fn matrix_log_clamped(rho: &CMatrix, eps_log: f64) -> Result<CMatrix> {
    if !(eps_log > 0.0) {
        return Err(Error::Domain(format!("eps_log must be positive, got {eps_log}")));
    }
    Ok(herm_eig(rho)?.map(|r| r.max(eps_log).ln()))
}

pub fn matrix_exp(m: &CMatrix) -> Result<CMatrix> {
    Ok(herm_eig(m)?.map(f64::exp))
}

fn entropy_of_eigenvalues(values: &DVector<f64>) -> f64 {
    values
        .iter()
        .filter(|&&r| r > 0.0)
        .map(|&r| -r * r.ln())
        .sum()
}

/// von Neumann entropy in nats, with `0 log 0 = 0`.
pub fn entropy(rho: &DensityMatrix) -> Result<f64> {
    Ok(entropy_of_eigenvalues(&eigenvalues(rho.matrix())?))
}

/// `Tr ρ²`
pub fn purity(rho: &DensityMatrix) -> f64 {
    let m = rho.matrix();
    trace_product(m, m).re
}

/// `Tr(ρ′ (log ρ′ − log ρ″))`, both logs clamped at `eps_log`.
pub fn relative_entropy(rho1: &DensityMatrix, rho2: &DensityMatrix, eps_log: f64) -> Result<f64> {
    if rho1.dim() != rho2.dim() {
        return Err(Error::Dimension(format!(
            "relative entropy between {}- and {}-dimensional states",
            rho1.dim(),
            rho2.dim()
        )));
    }
    let diff = matrix_log_clamped(rho1.matrix(), eps_log)? - matrix_log_clamped(rho2.matrix(), eps_log)?;
    Ok(expectation(&diff, rho1.matrix()))
}

/// `σ_a + σ_b − σ`
pub fn mutual_information(rho: &DensityMatrix) -> Result<f64> {
    rho.require_bipartite()?;
    let sa = entropy(&partial_trace(rho, 0)?)?;
    let sb = entropy(&partial_trace(rho, 1)?)?;
    Ok(sa + sb - entropy(rho)?)
}

/// Product of marginals `ρ_a ⊗ ρ_b`.
pub fn nz_project(rho: &DensityMatrix) -> Result<DensityMatrix> {
    rho.require_bipartite()?;
    Ok(partial_trace(rho, 0)?.tensor(&partial_trace(rho, 1)?))
}

/// `½ Σ |eig(ρ − σ)|`
pub fn trace_distance(a: &CMatrix, b: &CMatrix) -> Result<f64> {
    Ok(0.5 * eigenvalues(&(a - b))?.iter().map(|e| e.abs()).sum::<f64>())
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DensityTolerances {
    pub hermitian: f64,
    pub trace: f64,
    pub psd: f64,
}

impl Default for DensityTolerances {
    fn default() -> Self {
        Self {
            hermitian: 1e-12,
            trace: 1e-10,
            psd: 1e-9,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DensityDiagnostics {
    pub hermiticity_defect: f64,
    pub trace_defect: f64,
    pub min_eigenvalue: f64,
    pub hermitian_ok: bool,
    pub trace_ok: bool,
    pub psd_ok: bool,
}

impl DensityDiagnostics {
    pub fn passed(&self) -> bool {
        self.hermitian_ok && self.trace_ok && self.psd_ok
    }
}

pub fn check_density(rho: &CMatrix, tol: &DensityTolerances) -> DensityDiagnostics {
    let hermiticity_defect = hermiticity_defect(rho);
    let tr = trace(rho);
    let trace_defect = (tr - C64::new(1.0, 0.0)).norm();
    let min_eigenvalue = herm_eig(rho).map(|s| s.min()).unwrap_or(f64::NAN);
    DensityDiagnostics {
        hermiticity_defect,
        trace_defect,
        min_eigenvalue,
        hermitian_ok: hermiticity_defect <= tol.hermitian,
        trace_ok: trace_defect <= tol.trace,
        psd_ok: min_eigenvalue >= -tol.psd,
    }
}
