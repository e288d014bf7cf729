//! Generalized Gell-Mann bases, the product operator set `G_{a,b}`, and
//! Bloch matrices of bipartite states.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::hermitian::{identity, tensor_product, trace_product, CMatrix, DensityMatrix, C64};

/// Traceless Hermitian basis of su(D) normalized as `½ Tr(λ_i λ_j) = δ_ij`.
///
/// Ordering: symmetric pairs `(j, k)`, `j < k` lexicographic, then the
/// antisymmetric pairs in the same order, then the diagonal ladder. For
/// `D = 2` this is (σ₁, σ₂, σ₃).
#[derive(Clone, Debug)]
pub struct GellMannBasis {
    pub dim: usize,
    pub matrices: Vec<CMatrix>,
}

pub fn gell_mann(d: usize) -> Result<GellMannBasis> {
    if d < 2 {
        return Err(Error::Domain(format!("Gell-Mann basis needs D >= 2, got {d}")));
    }
    let one = C64::new(1.0, 0.0);
    let i = C64::new(0.0, 1.0);
    let mut matrices = Vec::with_capacity(d * d - 1);
    let pairs: Vec<(usize, usize)> = (0..d)
        .flat_map(|j| (j + 1..d).map(move |k| (j, k)))
        .collect();
    for &(j, k) in &pairs {
        let mut m = CMatrix::zeros(d, d);
        m[(j, k)] = one;
        m[(k, j)] = one;
        matrices.push(m);
    }
    for &(j, k) in &pairs {
        let mut m = CMatrix::zeros(d, d);
        m[(j, k)] = -i;
        m[(k, j)] = i;
        matrices.push(m);
    }
    for l in 1..d {
        let norm = (2.0 / (l * (l + 1)) as f64).sqrt();
        let mut m = CMatrix::zeros(d, d);
        for j in 0..l {
            m[(j, j)] = C64::from(norm);
        }
        m[(l, l)] = C64::from(-(l as f64) * norm);
        matrices.push(m);
    }
    Ok(GellMannBasis { dim: d, matrices })
}

/// `Γ_0 = (2^{1/4}/√D) I`, `Γ_l = 2^{−1/4} λ_l`.
fn gammas(d: usize) -> Result<Vec<CMatrix>> {
    let gm = gell_mann(d)?;
    let mut out = Vec::with_capacity(d * d);
    out.push(identity(d) * C64::from(2f64.powf(0.25) / (d as f64).sqrt()));
    let scale = C64::from(2f64.powf(-0.25));
    out.extend(gm.matrices.into_iter().map(|m| m * scale));
    Ok(out)
}

/// The grid `G_{a,b} = Γ_a^{(a)} ⊗ Γ_b^{(b)}`, stored row-major in `(a, b)`.
#[derive(Clone, Debug)]
pub struct ProductOperatorBasis {
    pub dims: (usize, usize),
    pub gammas_a: Vec<CMatrix>,
    pub gammas_b: Vec<CMatrix>,
    g: Vec<CMatrix>,
}

impl ProductOperatorBasis {
    pub fn new(da: usize, db: usize) -> Result<Self> {
        let gammas_a = gammas(da)?;
        let gammas_b = gammas(db)?;
        let g = gammas_a
            .iter()
            .flat_map(|ga| gammas_b.iter().map(move |gb| tensor_product(ga, gb)))
            .collect();
        Ok(Self {
            dims: (da, db),
            gammas_a,
            gammas_b,
            g,
        })
    }

    /// Number of rows of the Bloch matrix, `D_a²`.
    pub fn rows(&self) -> usize {
        self.gammas_a.len()
    }

    /// Number of columns of the Bloch matrix, `D_b²`.
    pub fn cols(&self) -> usize {
        self.gammas_b.len()
    }

    pub fn total_dim(&self) -> usize {
        self.dims.0 * self.dims.1
    }

    pub fn get(&self, a: usize, b: usize) -> &CMatrix {
        &self.g[a * self.cols() + b]
    }

    /// All `G_{a,b}` in row-major order.
    pub fn operators(&self) -> &[CMatrix] {
        &self.g
    }

    /// True for `(a, b)` indexing a single-subsystem operator.
    pub fn is_single(a: usize, b: usize) -> bool {
        (a == 0) != (b == 0)
    }

    /// `Λ_a = (G_{1,0}, …)` followed by `Λ_b = (G_{0,1}, …)`.
    pub fn marginal_operators(&self) -> Vec<&CMatrix> {
        (1..self.rows())
            .map(|a| self.get(a, 0))
            .chain((1..self.cols()).map(|b| self.get(0, b)))
            .collect()
    }

    /// `B_{0,0}` of every valid state, `√(2 / (D_a D_b))`.
    pub fn b00(&self) -> f64 {
        (2.0 / self.total_dim() as f64).sqrt()
    }

    fn check_state(&self, rho: &DensityMatrix) -> Result<()> {
        if rho.dims() != [self.dims.0, self.dims.1] {
            return Err(Error::Dimension(format!(
                "state dims {:?} do not match basis dims {:?}",
                rho.dims(),
                self.dims
            )));
        }
        Ok(())
    }
}

pub fn product_basis(da: usize, db: usize) -> Result<ProductOperatorBasis> {
    ProductOperatorBasis::new(da, db)
}

/// Real `D_a² × D_b²` matrix of expectations `B_{a,b} = ⟨G_{a,b}⟩`.
#[derive(Clone, Debug, PartialEq)]
pub struct BlochMatrix {
    pub dims: (usize, usize),
    pub data: DMatrix<f64>,
}

impl BlochMatrix {
    pub fn get(&self, a: usize, b: usize) -> f64 {
        self.data[(a, b)]
    }

    /// Entries in row-major order (the CSV column order `B00, B01, …`).
    pub fn row_major(&self) -> Vec<f64> {
        let (r, c) = self.data.shape();
        (0..r).flat_map(|a| (0..c).map(move |b| (a, b))).map(|(a, b)| self.data[(a, b)]).collect()
    }

    /// `Tr(B Bᵀ)`, equal to `2 Tr ρ²`.
    pub fn frobenius_sq(&self) -> f64 {
        self.data.iter().map(|x| x * x).sum()
    }
}

pub fn bloch_matrix(rho: &DensityMatrix, basis: &ProductOperatorBasis) -> Result<BlochMatrix> {
    basis.check_state(rho)?;
    let m = rho.matrix();
    let data = DMatrix::from_fn(basis.rows(), basis.cols(), |a, b| trace_product(basis.get(a, b), m).re);
    Ok(BlochMatrix {
        dims: basis.dims,
        data,
    })
}

/// Subsystem Bloch vectors and their normalized versions `k = √2 P`.
#[derive(Clone, Debug, PartialEq)]
pub struct BlochVectors {
    pub p_a: Vec<f64>,
    pub p_b: Vec<f64>,
    pub k_a: Vec<f64>,
    pub k_b: Vec<f64>,
}

pub fn bloch_vectors(b: &BlochMatrix) -> BlochVectors {
    let (r, c) = b.data.shape();
    let p_a: Vec<f64> = (1..r).map(|a| b.data[(a, 0)]).collect();
    let p_b: Vec<f64> = (1..c).map(|j| b.data[(0, j)]).collect();
    let s = 2f64.sqrt();
    BlochVectors {
        k_a: p_a.iter().map(|x| x * s).collect(),
        k_b: p_b.iter().map(|x| x * s).collect(),
        p_a,
        p_b,
    }
}

/// Inverse expansion `ρ = Σ (B_{a,b}/2) G_{a,b}`. No PSD projection is applied.
pub fn state_from_bloch(b: &BlochMatrix, basis: &ProductOperatorBasis) -> Result<DensityMatrix> {
    if b.dims != basis.dims || b.data.shape() != (basis.rows(), basis.cols()) {
        return Err(Error::Dimension(format!(
            "Bloch matrix dims {:?} do not match basis dims {:?}",
            b.dims, basis.dims
        )));
    }
    let expected = basis.b00();
    let found = b.data[(0, 0)];
    if (found - expected).abs() > 1e-10 {
        return Err(Error::InconsistentBloch { found, expected });
    }
    let d = basis.total_dim();
    let mut rho = CMatrix::zeros(d, d);
    for a in 0..basis.rows() {
        for j in 0..basis.cols() {
            let coeff = b.data[(a, j)] / 2.0;
            if coeff != 0.0 {
                rho += basis.get(a, j) * C64::from(coeff);
            }
        }
    }
    DensityMatrix::new(rho, vec![basis.dims.0, basis.dims.1])
}
