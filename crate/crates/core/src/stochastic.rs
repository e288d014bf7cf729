//! Pure-state Langevin–Schrödinger trajectories
//! `dψ = (−iH − Θ)ψ dt + √(2⟨Θ⟩) ψ dW` and their ensemble averages.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;

use crate::dynamics::{build_theta, ThetaSpec};
use crate::error::{Error, Result};
use crate::hermitian::{herm_eig, identity, CMatrix, CVector, C64};

/// Unit-norm state vector.
#[derive(Clone, Debug, PartialEq)]
pub struct StateVector(CVector);

impl StateVector {
    pub fn new(amplitudes: CVector) -> Result<Self> {
        let n = amplitudes.norm();
        if !(n > 0.0) || !n.is_finite() {
            return Err(Error::Domain("state vector has zero or non-finite norm".into()));
        }
        Ok(Self(amplitudes / C64::from(n)))
    }

    pub fn amplitudes(&self) -> &CVector {
        &self.0
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn projector(&self) -> CMatrix {
        &self.0 * self.0.adjoint()
    }
}

/// Statistics of the white-noise increment `ξ`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum NoiseKind {
    /// Independent real and imaginary parts, `E[ξξ*] = 1/dt`, `E[ξξ] = 0`.
    #[default]
    ComplexCircular,
    /// Real Gaussian, `E[ξ²] = 1/dt`.
    Real,
}

/// Seeded source of discretized white noise with per-step variance `1/dt`.
pub struct NoiseProcess {
    rng: ChaCha8Rng,
    kind: NoiseKind,
    normal: Normal<f64>,
}

impl NoiseProcess {
    pub fn new(seed: u64, kind: NoiseKind, dt: f64) -> Result<Self> {
        if !(dt > 0.0) {
            return Err(Error::Config(format!("dt must be > 0, got {dt}")));
        }
        let var = match kind {
            NoiseKind::ComplexCircular => 0.5 / dt,
            NoiseKind::Real => 1.0 / dt,
        };
        let normal = Normal::new(0.0, var.sqrt()).map_err(|e| Error::Config(e.to_string()))?;
        Ok(Self {
            rng: ChaCha8Rng::seed_from_u64(seed),
            kind,
            normal,
        })
    }

    pub fn sample(&mut self) -> C64 {
        let re = self.normal.sample(&mut self.rng);
        match self.kind {
            NoiseKind::ComplexCircular => C64::new(re, self.normal.sample(&mut self.rng)),
            NoiseKind::Real => C64::new(re, 0.0),
        }
    }
}

/// `Θ + cI` with `c = max(0, −λ_min(Θ))`, so the result is PSD.
pub fn shift_psd(theta: &CMatrix) -> Result<(CMatrix, f64)> {
    let c = (-herm_eig(theta)?.min()).max(0.0);
    Ok((theta + identity(theta.nrows()) * C64::from(c), c))
}

/// One Euler–Maruyama step, followed by renormalization.
///
/// `xi` is the noise sample (variance `1/dt`), so `ΔW = ξ dt`. Returns the
/// new state and the pre-normalization defect `⟨ψ′|ψ′⟩ − 1`.
pub fn sle_step(psi: &StateVector, h: &CMatrix, theta: &CMatrix, dt: f64, xi: C64) -> Result<(StateVector, f64)> {
    let v = psi.amplitudes();
    if h.nrows() != v.len() || theta.nrows() != v.len() {
        return Err(Error::Dimension(format!(
            "operators of size {} for a state of dimension {}",
            h.nrows(),
            v.len()
        )));
    }
    let theta_psi = theta * v;
    let mean = v.dotc(&theta_psi).re;
    if mean < -1e-12 {
        return Err(Error::Internal(format!("⟨Θ⟩ = {mean:e} < 0; shift Θ to PSD first")));
    }
    let amp = (2.0 * mean.max(0.0)).sqrt();
    let minus_i = C64::new(0.0, -1.0);
    let drift = (h * v) * minus_i - theta_psi;
    let next = v + drift * C64::from(dt) + v * (xi * C64::from(dt * amp));
    let norm2 = next.norm_squared();
    Ok((StateVector::new(next)?, norm2 - 1.0))
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SleConfig {
    pub dt: f64,
    pub t_max: f64,
    pub record_every: usize,
    pub noise: NoiseKind,
}

impl SleConfig {
    fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0) || !(self.t_max >= 0.0) || self.record_every == 0 {
            return Err(Error::Config(format!("invalid trajectory config {self:?}")));
        }
        Ok(())
    }

    fn steps(&self) -> usize {
        (self.t_max / self.dt).round() as usize
    }
}

#[derive(Clone, Debug)]
pub struct SleSnapshot {
    pub t: f64,
    pub psi: StateVector,
    /// Pre-normalization defect of the step that produced this snapshot.
    pub norm_defect: f64,
}

/// Integrates one trajectory; `Θ` is rebuilt from `|ψ⟩⟨ψ|` each step and
/// shifted to be PSD. Deterministic for a given seed.
pub fn sle_trajectory(
    psi0: &StateVector,
    h: &CMatrix,
    spec: &ThetaSpec,
    cfg: &SleConfig,
    seed: u64,
) -> Result<Vec<SleSnapshot>> {
    cfg.validate()?;
    spec.validate()?;
    let mut noise = NoiseProcess::new(seed, cfg.noise, cfg.dt)?;
    let fixed = if spec.is_state_dependent() {
        None
    } else {
        Some(shift_psd(&build_theta(spec, &psi0.projector(), Some(h))?)?.0)
    };
    let mut psi = psi0.clone();
    let mut out = vec![SleSnapshot {
        t: 0.0,
        psi: psi.clone(),
        norm_defect: 0.0,
    }];
    let steps = cfg.steps();
    for step in 1..=steps {
        let theta = match &fixed {
            Some(t) => t.clone(),
            None => shift_psd(&build_theta(spec, &psi.projector(), Some(h))?)?.0,
        };
        let (next, defect) = sle_step(&psi, h, &theta, cfg.dt, noise.sample())?;
        psi = next;
        if step % cfg.record_every == 0 || step == steps {
            out.push(SleSnapshot {
                t: step as f64 * cfg.dt,
                psi: psi.clone(),
                norm_defect: defect,
            });
        }
    }
    Ok(out)
}

#[derive(Clone, Debug)]
pub struct EnsembleConfig {
    pub n_traj: usize,
    pub dt: f64,
    pub t_max: f64,
    pub base_seed: u64,
    pub theta: ThetaSpec,
    pub record_every: usize,
    pub noise: NoiseKind,
}

impl EnsembleConfig {
    fn sle(&self) -> SleConfig {
        SleConfig {
            dt: self.dt,
            t_max: self.t_max,
            record_every: self.record_every,
            noise: self.noise,
        }
    }
}

#[derive(Clone, Debug)]
pub struct EnsembleSeries {
    pub times: Vec<f64>,
    pub densities: Vec<CMatrix>,
}

const CHUNK: usize = 32;

/// Average of `|ψ⟩⟨ψ|` over `n_traj` trajectories seeded `base_seed + i`.
///
/// Trajectories run in parallel; partial sums are reduced in a fixed order so
/// the result does not depend on thread scheduling.
pub fn ensemble_density(config: &EnsembleConfig, psi0: &StateVector, h: &CMatrix) -> Result<EnsembleSeries> {
    if config.n_traj == 0 {
        return Err(Error::Config("n_traj must be >= 1".into()));
    }
    let sle = config.sle();
    let chunks: Vec<(usize, usize)> = (0..config.n_traj)
        .step_by(CHUNK)
        .map(|start| (start, (start + CHUNK).min(config.n_traj)))
        .collect();
    let partials: Vec<Result<(Vec<f64>, Vec<CMatrix>)>> = chunks
        .par_iter()
        .map(|&(lo, hi)| {
            let mut times = Vec::new();
            let mut sums: Vec<CMatrix> = Vec::new();
            for i in lo..hi {
                let traj = sle_trajectory(psi0, h, &config.theta, &sle, config.base_seed.wrapping_add(i as u64))?;
                if sums.is_empty() {
                    times = traj.iter().map(|s| s.t).collect();
                    sums = traj.iter().map(|s| s.psi.projector()).collect();
                } else {
                    for (acc, s) in sums.iter_mut().zip(&traj) {
                        *acc += s.psi.projector();
                    }
                }
            }
            Ok((times, sums))
        })
        .collect();

    let mut times = Vec::new();
    let mut total: Vec<CMatrix> = Vec::new();
    for part in partials {
        let (t, sums) = part?;
        if total.is_empty() {
            times = t;
            total = sums;
        } else {
            for (acc, s) in total.iter_mut().zip(sums) {
                *acc += s;
            }
        }
    }
    let scale = C64::from(1.0 / config.n_traj as f64);
    Ok(EnsembleSeries {
        times,
        densities: total.into_iter().map(|m| m * scale).collect(),
    })
}
