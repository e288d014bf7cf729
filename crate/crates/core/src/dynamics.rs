//! The nonlinear generator `Ω`, its invertible companion `Ω̃`, the `Θ`
//! builders, the marginal-freezing constraint solve and the deterministic
//! RK4 integrator of `dρ/dt = i[ρ, H] + Ω(Θ)` (ħ = 1).

use nalgebra::{DMatrix, DVector};

use crate::bloch::{bloch_matrix, BlochMatrix, ProductOperatorBasis};
use crate::error::{Error, Result};
use crate::hermitian::{
    check_density, entropy, expectation, herm_eig, hermitize, identity, matrix_log_clamped,
    mutual_information, partial_trace, purity, trace, trace_product, CMatrix, DensityMatrix,
    DensityTolerances, C64, DEFAULT_EPS_LOG,
};

fn check_square_pair(x: &CMatrix, rho: &CMatrix) -> Result<()> {
    if x.shape() != rho.shape() || rho.nrows() != rho.ncols() {
        return Err(Error::Dimension(format!(
            "operator {:?} does not match state {:?}",
            x.shape(),
            rho.shape()
        )));
    }
    Ok(())
}

fn omega_raw(x: &CMatrix, rho: &CMatrix) -> CMatrix {
    // Ω(X) only sees the traceless part of X; dropping the identity component
    // first makes Ω(cI) vanish exactly instead of up to Tr ρ − 1 round-off.
    let d = x.nrows();
    let x = x - identity(d) * (trace(x) / C64::from(d as f64));
    let ex = expectation(&x, rho);
    let xr = &x * rho;
    // ρX = (Xρ)† for Hermitian X and ρ
    let rx = xr.adjoint();
    rho * C64::from(2.0 * ex) - xr - rx
}

/// `Ω(X) = −Xρ − ρX + 2⟨X⟩ρ` with `⟨X⟩ = Tr(Xρ)`.
///
/// Both arguments are assumed Hermitian.
pub fn omega(x: &CMatrix, rho: &CMatrix) -> Result<CMatrix> {
    check_square_pair(x, rho)?;
    Ok(omega_raw(x, rho))
}

/// `Ω̃(X) = Ω(X) + I Tr X`
pub fn omega_tilde(x: &CMatrix, rho: &CMatrix) -> Result<CMatrix> {
    check_square_pair(x, rho)?;
    Ok(omega_raw(x, rho) + identity(rho.nrows()) * trace(x))
}

/// Solves `Ω̃(X) = Y` for `X`.
///
/// In the eigenbasis `ρ = Σ r_n |φ_n⟩⟨φ_n|` the off-diagonal entries decouple,
/// `x_nm = −y_nm / (r_n + r_m)`, and the diagonal obeys the `D × D` system
/// `y_nn = −2 r_n x_nn + 2 r_n Σ_k r_k x_kk + Σ_k x_kk`.
pub fn omega_tilde_inverse(y: &CMatrix, rho: &CMatrix, rcond: f64) -> Result<CMatrix> {
    check_square_pair(y, rho)?;
    let spec = herm_eig(rho)?;
    if spec.min() <= rcond {
        return Err(Error::NotInvertible {
            min_eigenvalue: spec.min(),
        });
    }
    let d = rho.nrows();
    let r = &spec.eigenvalues;
    let v = &spec.eigenvectors;
    let y_eig = v.adjoint() * y * v;

    let mut x_eig = CMatrix::zeros(d, d);
    for n in 0..d {
        for m in 0..d {
            if n != m {
                x_eig[(n, m)] = -y_eig[(n, m)] / C64::from(r[n] + r[m]);
            }
        }
    }
    let a = DMatrix::from_fn(d, d, |n, k| {
        let delta = if n == k { -2.0 * r[n] } else { 0.0 };
        C64::from(delta + 2.0 * r[n] * r[k] + 1.0)
    });
    let rhs = DVector::from_fn(d, |n, _| y_eig[(n, n)]);
    let diag = a
        .lu()
        .solve(&rhs)
        .ok_or(Error::NotInvertible {
            min_eigenvalue: spec.min(),
        })?;
    for n in 0..d {
        x_eig[(n, n)] = diag[n];
    }
    Ok(v * x_eig * v.adjoint())
}

/// Which operator drives the nonlinear term.
#[derive(Clone, Debug, PartialEq)]
pub enum ThetaKind {
    /// `Θ = γ log ρ`: entropy growth, i.e. disentanglement.
    LogRho,
    /// `Θ = γ (H + β⁻¹ log ρ)`: relaxation to the Gibbs state.
    FreeEnergy { beta: f64 },
    /// State-independent `Θ`, used as given.
    Fixed(CMatrix),
}

#[derive(Clone, Debug, PartialEq)]
pub struct ThetaSpec {
    pub kind: ThetaKind,
    pub gamma: f64,
    pub eps_log: f64,
}

impl ThetaSpec {
    pub fn log_rho(gamma: f64) -> Self {
        Self {
            kind: ThetaKind::LogRho,
            gamma,
            eps_log: DEFAULT_EPS_LOG,
        }
    }

    pub fn free_energy(gamma: f64, beta: f64) -> Self {
        Self {
            kind: ThetaKind::FreeEnergy { beta },
            gamma,
            eps_log: DEFAULT_EPS_LOG,
        }
    }

    pub fn fixed(op: CMatrix) -> Self {
        Self {
            kind: ThetaKind::Fixed(op),
            gamma: 0.0,
            eps_log: DEFAULT_EPS_LOG,
        }
    }

    pub fn is_state_dependent(&self) -> bool {
        !matches!(self.kind, ThetaKind::Fixed(_))
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.gamma >= 0.0) {
            return Err(Error::Config(format!("gamma must be >= 0, got {}", self.gamma)));
        }
        if !(self.eps_log > 0.0) {
            return Err(Error::Config(format!("eps_log must be > 0, got {}", self.eps_log)));
        }
        if let ThetaKind::FreeEnergy { beta } = self.kind {
            if !(beta > 0.0) || !beta.is_finite() {
                return Err(Error::Config(format!("beta must be finite and > 0, got {beta}")));
            }
        }
        Ok(())
    }
}

pub fn build_theta(spec: &ThetaSpec, rho: &CMatrix, h: Option<&CMatrix>) -> Result<CMatrix> {
    let gamma = C64::from(spec.gamma);
    match &spec.kind {
        ThetaKind::LogRho => Ok(matrix_log_clamped(rho, spec.eps_log)? * gamma),
        ThetaKind::FreeEnergy { beta } => {
            let h = h.ok_or_else(|| Error::Config("free-energy Θ needs a Hamiltonian".into()))?;
            check_square_pair(h, rho)?;
            let log = matrix_log_clamped(rho, spec.eps_log)?;
            Ok((h + log * C64::from(1.0 / beta)) * gamma)
        }
        ThetaKind::Fixed(op) => {
            check_square_pair(op, rho)?;
            Ok(op.clone())
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ConstraintOptions {
    /// Relative singular-value cutoff of the least-squares solve.
    pub rcond: f64,
    /// Largest admissible `|Tr(Ω(Θ′) G_{a,b})|` over single-subsystem rows.
    pub tol: f64,
}

impl Default for ConstraintOptions {
    fn default() -> Self {
        Self {
            rcond: 1e-10,
            tol: 1e-8,
        }
    }
}

#[derive(Clone, Debug)]
pub struct ConstraintSolution {
    /// Lagrange coefficients `η_{a,b}` on the `D_a² × D_b²` grid.
    pub eta: DMatrix<f64>,
    pub theta_prime: CMatrix,
    pub residual: f64,
}

/// Largest `|Tr(Ω(X) G_{a,b})|` over rows with exactly one zero index.
pub fn marginal_drive(x: &CMatrix, rho: &CMatrix, basis: &ProductOperatorBasis) -> f64 {
    let w = omega_raw(x, rho);
    let mut worst: f64 = 0.0;
    for a in 0..basis.rows() {
        for b in 0..basis.cols() {
            if ProductOperatorBasis::is_single(a, b) {
                worst = worst.max(trace_product(&w, basis.get(a, b)).re.abs());
            }
        }
    }
    worst
}

/// Shifts `Θ → Θ′ = Θ + Σ η_{ab} G_{a,b}` so that `Ω(Θ′)` leaves both
/// marginals untouched while its correlation components equal those of `Ω(Θ)`.
///
/// The linear system is singular along `η_{0,0}` (`Ω(I) = 0`), so it is
/// solved in the minimum-norm least-squares sense.
pub fn constrain_theta(
    theta: &CMatrix,
    rho: &CMatrix,
    basis: &ProductOperatorBasis,
    opts: &ConstraintOptions,
) -> Result<ConstraintSolution> {
    check_square_pair(theta, rho)?;
    if rho.nrows() != basis.total_dim() {
        return Err(Error::Dimension(format!(
            "state of dimension {} does not match basis dims {:?}",
            rho.nrows(),
            basis.dims
        )));
    }
    let ops = basis.operators();
    let n = ops.len();
    let images: Vec<CMatrix> = ops.iter().map(|g| omega_raw(g, rho)).collect();
    let system = DMatrix::from_fn(n, n, |row, col| trace_product(&images[col], &ops[row]).re);
    let system = (&system + system.transpose()) * 0.5;

    let drive = omega_raw(theta, rho);
    let cols = basis.cols();
    let rhs = DVector::from_fn(n, |row, _| {
        if ProductOperatorBasis::is_single(row / cols, row % cols) {
            -trace_product(&drive, &ops[row]).re
        } else {
            0.0
        }
    });

    // M is the symmetric form −⟨{ΔG_r, ΔG_c}⟩, so its singular values are
    // the moduli of its eigenvalues and the pseudo-inverse is spectral.
    let eig = system.clone().symmetric_eigen();
    let cutoff = opts.rcond * eig.eigenvalues.amax();
    let inv_vals = eig.eigenvalues.map(|l| if l.abs() > cutoff { 1.0 / l } else { 0.0 });
    let solve = |b: &DVector<f64>| -> DVector<f64> {
        let coeffs = eig.eigenvectors.tr_mul(b).component_mul(&inv_vals);
        &eig.eigenvectors * coeffs
    };
    let mut eta = solve(&rhs);
    // one round of iterative refinement against the ill-conditioned directions
    // of nearly pure states
    let correction = solve(&(&rhs - &system * &eta));
    eta += correction;

    let mut theta_prime = theta.clone();
    for (k, g) in ops.iter().enumerate() {
        if eta[k] != 0.0 {
            theta_prime += g * C64::from(eta[k]);
        }
    }
    let residual = marginal_drive(&theta_prime, rho, basis);
    if !(residual <= opts.tol) {
        return Err(Error::ConstraintUnsatisfiable {
            residual,
            tolerance: opts.tol,
        });
    }
    let eta = DMatrix::from_fn(basis.rows(), cols, |a, b| eta[a * cols + b]);
    Ok(ConstraintSolution {
        eta,
        theta_prime,
        residual,
    })
}

/// `dρ/dt = i[ρ, H] + Ω(Θ)`
pub fn master_rhs(rho: &CMatrix, h: &CMatrix, theta: &CMatrix) -> Result<CMatrix> {
    check_square_pair(h, rho)?;
    check_square_pair(theta, rho)?;
    Ok(master_rhs_raw(rho, h, theta))
}

fn master_rhs_raw(rho: &CMatrix, h: &CMatrix, theta: &CMatrix) -> CMatrix {
    let i = C64::new(0.0, 1.0);
    let rh = rho * h;
    let commutator = &rh - rh.adjoint();
    hermitize(&(commutator * i + omega_raw(theta, rho)))
}

/// `d⟨A⟩/dt = −i⟨[A, H]⟩ − ⟨Δ_A Δ_Θ + Δ_Θ Δ_A⟩`, `Δ_X = X − ⟨X⟩`.
pub fn ehrenfest_rate(a: &CMatrix, rho: &CMatrix, h: &CMatrix, theta: &CMatrix) -> Result<f64> {
    check_square_pair(a, rho)?;
    check_square_pair(h, rho)?;
    check_square_pair(theta, rho)?;
    let d = rho.nrows();
    let comm = a * h - h * a;
    let unitary = (C64::new(0.0, -1.0) * trace_product(&comm, rho)).re;
    let da = a - identity(d) * C64::from(expectation(a, rho));
    let dt = theta - identity(d) * C64::from(expectation(theta, rho));
    let sym = &da * &dt + &dt * &da;
    Ok(unitary - expectation(&sym, rho))
}

#[derive(Clone, Debug, PartialEq)]
pub struct EvolveConfig {
    pub dt: f64,
    pub t_max: f64,
    pub constrained: bool,
    /// Weight of `I/D` mixed into the initial state.
    pub eps_init: f64,
    /// Largest admissible negative-eigenvalue mass removed in one step.
    pub positivity_tol: f64,
    pub constraint: ConstraintOptions,
    /// Validity tolerances applied to every recorded state.
    pub density_tol: DensityTolerances,
    pub record_every: usize,
}

impl EvolveConfig {
    /// Defaults scaled to the rate `gamma`: `dt = 10⁻³/γ`.
    pub fn for_rate(gamma: f64, t_max: f64) -> Self {
        Self {
            dt: 1e-3 / gamma,
            t_max,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0) || !self.dt.is_finite() {
            return Err(Error::Config(format!("dt must be > 0, got {}", self.dt)));
        }
        if !(self.t_max >= 0.0) || !self.t_max.is_finite() {
            return Err(Error::Config(format!("t_max must be >= 0, got {}", self.t_max)));
        }
        if !(0.0..1.0).contains(&self.eps_init) {
            return Err(Error::Config(format!("eps_init must lie in [0, 1), got {}", self.eps_init)));
        }
        if self.record_every == 0 {
            return Err(Error::Config("record_every must be >= 1".into()));
        }
        Ok(())
    }

    pub fn steps(&self) -> usize {
        (self.t_max / self.dt).round() as usize
    }
}

impl Default for EvolveConfig {
    fn default() -> Self {
        Self {
            dt: 1e-3,
            t_max: 1.0,
            constrained: false,
            eps_init: 1e-6,
            positivity_tol: 1e-9,
            constraint: ConstraintOptions::default(),
            density_tol: DensityTolerances::default(),
            record_every: 10,
        }
    }
}

/// Observables that need a bipartition.
#[derive(Clone, Debug)]
pub struct BipartiteObservables {
    pub entropy_a: f64,
    pub entropy_b: f64,
    pub mutual_info: f64,
    pub bloch: BlochMatrix,
}

#[derive(Clone, Debug)]
pub struct Snapshot {
    pub t: f64,
    pub state: DensityMatrix,
    pub purity: f64,
    pub entropy: f64,
    pub bipartite: Option<BipartiteObservables>,
    /// Post-solve marginal drive of `Θ′`; zero for unconstrained runs.
    pub constraint_residual: f64,
    /// Negative-eigenvalue mass clipped since the previous snapshot.
    pub clipped: f64,
}

impl Snapshot {
    fn observe(
        t: f64,
        state: DensityMatrix,
        basis: Option<&ProductOperatorBasis>,
        constraint_residual: f64,
        clipped: f64,
    ) -> Result<Self> {
        let bipartite = match basis {
            Some(basis) => Some(BipartiteObservables {
                entropy_a: entropy(&partial_trace(&state, 0)?)?,
                entropy_b: entropy(&partial_trace(&state, 1)?)?,
                mutual_info: mutual_information(&state)?,
                bloch: bloch_matrix(&state, basis)?,
            }),
            None => None,
        };
        Ok(Self {
            t,
            purity: purity(&state),
            entropy: entropy(&state)?,
            state,
            bipartite,
            constraint_residual,
            clipped,
        })
    }
}

#[derive(Clone, Debug)]
pub struct Trajectory {
    pub snapshots: Vec<Snapshot>,
    /// Largest negative-eigenvalue mass removed by a single step.
    pub max_step_clip: f64,
}

impl Trajectory {
    pub fn times(&self) -> Vec<f64> {
        self.snapshots.iter().map(|s| s.t).collect()
    }

    pub fn first(&self) -> &Snapshot {
        &self.snapshots[0]
    }

    pub fn last(&self) -> &Snapshot {
        self.snapshots.last().expect("trajectory has at least one snapshot")
    }
}

/// Dissipative part `Ω(Θ)` (or `Ω(Θ′)`) with `Θ` rebuilt from the current state.
struct Generator<'a> {
    h: &'a CMatrix,
    spec: &'a ThetaSpec,
    constraint: Option<(&'a ProductOperatorBasis, ConstraintOptions)>,
}

impl Generator<'_> {
    fn eval(&self, rho: &CMatrix) -> Result<(CMatrix, f64)> {
        let theta = build_theta(self.spec, rho, Some(self.h))?;
        match self.constraint {
            Some((basis, opts)) => {
                let sol = constrain_theta(&theta, rho, basis, &opts)?;
                Ok((hermitize(&omega_raw(&sol.theta_prime, rho)), sol.residual))
            }
            None => Ok((hermitize(&omega_raw(&theta, rho)), 0.0)),
        }
    }
}

/// `exp(−iHs)` for `s = dt/2` and `s = dt`; `None` when `H = 0`.
fn propagators(h: &CMatrix, dt: f64) -> Result<Option<(CMatrix, CMatrix)>> {
    if h.iter().all(|z| *z == C64::from(0.0)) {
        return Ok(None);
    }
    let spec = herm_eig(h)?;
    let u = |s: f64| {
        let phases = DVector::from_iterator(
            spec.eigenvalues.len(),
            spec.eigenvalues.iter().map(|e| C64::new(0.0, -e * s).exp()),
        );
        &spec.eigenvectors * DMatrix::from_diagonal(&phases) * spec.eigenvectors.adjoint()
    };
    Ok(Some((u(dt / 2.0), u(dt))))
}

/// `U X U†`
fn conjugate(u: &CMatrix, x: &CMatrix) -> CMatrix {
    u * x * u.adjoint()
}

/// Hermitize, clip negative eigenvalues, renormalize the trace.
/// Returns the clipped eigenvalue mass.
fn restore_state(rho: &CMatrix) -> Result<(CMatrix, f64)> {
    let herm = hermitize(rho);
    let spec = herm_eig(&herm)?;
    let clipped: f64 = spec.eigenvalues.iter().filter(|&&e| e < 0.0).map(|e| -e).sum();
    let fixed = if clipped > 0.0 { spec.map(|e| e.max(0.0)) } else { herm };
    let tr = trace(&fixed).re;
    Ok((fixed / C64::from(tr), clipped))
}

/// Fixed-step RK4 integration of the master equation, in the interaction
/// picture of `H` when `H ≠ 0`.
///
/// `basis` is required for constrained runs; when given, the bipartite
/// observables (marginal entropies, mutual information, Bloch matrix) are
/// recorded as well.
pub fn evolve(
    rho0: &DensityMatrix,
    h: &CMatrix,
    spec: &ThetaSpec,
    cfg: &EvolveConfig,
    basis: Option<&ProductOperatorBasis>,
) -> Result<Trajectory> {
    cfg.validate()?;
    spec.validate()?;
    check_square_pair(h, rho0.matrix())?;
    if let Some(basis) = basis {
        if rho0.dims() != [basis.dims.0, basis.dims.1] {
            return Err(Error::Dimension(format!(
                "state dims {:?} do not match basis dims {:?}",
                rho0.dims(),
                basis.dims
            )));
        }
    }
    if cfg.constrained && basis.is_none() {
        return Err(Error::Config("constrained evolution needs a product basis".into()));
    }

    let start = if cfg.eps_init > 0.0 {
        rho0.mixed_with_identity(cfg.eps_init)
    } else {
        rho0.clone()
    };
    let generator = Generator {
        h,
        spec,
        constraint: if cfg.constrained {
            basis.map(|b| (b, cfg.constraint))
        } else {
            None
        },
    };

    let dt = cfg.dt;
    let half = C64::from(dt / 2.0);
    let steps = cfg.steps();
    let mut rho = start.matrix().clone();
    let (_, residual0) = generator.eval(&rho)?;
    let mut snapshots = vec![Snapshot::observe(0.0, start.clone(), basis, residual0, 0.0)?];
    let mut clipped_since = 0.0;
    let mut max_step_clip: f64 = 0.0;

    let props = propagators(h, dt)?;

    for step in 1..=steps {
        // RK4 in the interaction picture of H: the unitary part is exact and
        // the stage states only carry the dissipative increments.
        let (k1, _) = generator.eval(&rho)?;
        let (k2, k3, k4) = match &props {
            None => {
                let (k2, _) = generator.eval(&(&rho + &k1 * half))?;
                let (k3, _) = generator.eval(&(&rho + &k2 * half))?;
                let (k4, _) = generator.eval(&(&rho + &k3 * C64::from(dt)))?;
                (k2, k3, k4)
            }
            Some((uh, u)) => {
                let stage = |u: &CMatrix, k: &CMatrix, w: C64| -> Result<CMatrix> {
                    let (d, _) = generator.eval(&conjugate(u, &(&rho + k * w)))?;
                    Ok(conjugate(&u.adjoint(), &d))
                };
                let k2 = stage(uh, &k1, half)?;
                let k3 = stage(uh, &k2, half)?;
                let k4 = stage(u, &k3, C64::from(dt))?;
                (k2, k3, k4)
            }
        };
        let incr = (k1 + (k2 + k3) * C64::from(2.0) + k4) * C64::from(dt / 6.0);
        let sigma = &rho + incr;
        let stepped = match &props {
            None => sigma,
            Some((_, u)) => conjugate(u, &sigma),
        };
        let t = step as f64 * dt;
        let (next, clipped) = restore_state(&stepped)?;
        if clipped > cfg.positivity_tol {
            return Err(Error::PositivityLoss {
                time: t,
                clipped,
                tolerance: cfg.positivity_tol,
            });
        }
        rho = next;
        clipped_since += clipped;
        max_step_clip = max_step_clip.max(clipped);

        if step % cfg.record_every == 0 || step == steps {
            let diag = check_density(&rho, &cfg.density_tol);
            if !diag.passed() {
                return Err(Error::Internal(format!("invalid state recorded at t = {t}: {diag:?}")));
            }
            let (_, residual) = generator.eval(&rho)?;
            let state = start.with_matrix(rho.clone())?;
            snapshots.push(Snapshot::observe(t, state, basis, residual, clipped_since)?);
            clipped_since = 0.0;
        }
    }
    Ok(Trajectory {
        snapshots,
        max_step_clip,
    })
}
