//! Scenario configuration: flat `key=value` text, one entry per line.
//!
//! Blank lines and `#` comments are ignored. Keys:
//!
//! | key            | meaning                                         | default            |
//! |----------------|-------------------------------------------------|--------------------|
//! | `scenario`     | `fig1`, `fig2`, `thermalize`, `witness`, `maxent` | from subcommand  |
//! | `p`            | Schmidt weight of the fig1 state                | `0.4`              |
//! | `gamma`        | disentanglement rate γ                          | `3` (fig2), else `1` |
//! | `omega`        | dipolar coupling ω of fig2                      | `100`              |
//! | `beta`         | inverse temperature                             | `1`                |
//! | `spin_a`       | fig2 initial direction `x,y,z` of spin a        | `sin 1, 0, cos 1`  |
//! | `spin_b`       | fig2 initial direction `x,y,z` of spin b        | `0, sin 1, cos 1`  |
//! | `dt`           | step size                                       | `1e-3/γ`           |
//! | `t_max`        | final time                                      | per scenario       |
//! | `record_every` | steps between recorded rows                     | `10`               |
//! | `constrained`  | freeze both marginals (`true`/`false`)          | `false`            |
//! | `eps_init`     | weight of `I/D` mixed into the initial state    | `1e-6`             |
//! | `positivity_tol` | largest negative-eigenvalue mass clipped per step | `1e-9`         |
//! | `seed`         | RNG seed (maxent input state)                   | `0`                |
//! | `system`       | thermalize target: `qubit` or `pair`            | `qubit`            |
//! | `coupling`     | σ₁⊗σ₁ coupling of the thermalize pair           | `0.5`              |
//! | `out`          | output path (stdout when absent)                |                    |
//!
//! Default `t_max` is `8/γ` (fig1), `10/γ` (fig2), `20/γ` (thermalize),
//! `4/γ` (witness).

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Scenario {
    Fig1,
    Fig2,
    Thermalize,
    Witness,
    Maxent,
}

impl Scenario {
    pub fn name(self) -> &'static str {
        match self {
            Scenario::Fig1 => "fig1",
            Scenario::Fig2 => "fig2",
            Scenario::Thermalize => "thermalize",
            Scenario::Witness => "witness",
            Scenario::Maxent => "maxent",
        }
    }
}

impl fmt::Display for Scenario {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Scenario {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "fig1" => Ok(Scenario::Fig1),
            "fig2" => Ok(Scenario::Fig2),
            "thermalize" => Ok(Scenario::Thermalize),
            "witness" => Ok(Scenario::Witness),
            "maxent" => Ok(Scenario::Maxent),
            other => Err(Error::Config(format!("unknown scenario '{other}'"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ThermalSystem {
    Qubit,
    Pair,
}

impl FromStr for ThermalSystem {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "qubit" => Ok(ThermalSystem::Qubit),
            "pair" => Ok(ThermalSystem::Pair),
            other => Err(Error::Config(format!("unknown thermalize system '{other}'"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ScenarioConfig {
    pub scenario: Scenario,
    pub p: f64,
    pub gamma: f64,
    pub omega: f64,
    pub beta: f64,
    pub spin_a: [f64; 3],
    pub spin_b: [f64; 3],
    /// `None` means `1e-3/γ`.
    pub dt: Option<f64>,
    /// `None` means the scenario default.
    pub t_max: Option<f64>,
    pub record_every: usize,
    pub constrained: bool,
    pub eps_init: f64,
    pub positivity_tol: f64,
    pub seed: u64,
    pub system: ThermalSystem,
    pub coupling: f64,
    pub out: Option<PathBuf>,
}

impl ScenarioConfig {
    pub fn new(scenario: Scenario) -> Self {
        let s1 = 1f64.sin();
        let c1 = 1f64.cos();
        Self {
            scenario,
            p: 0.4,
            gamma: if scenario == Scenario::Fig2 { 3.0 } else { 1.0 },
            omega: 100.0,
            beta: 1.0,
            spin_a: [s1, 0.0, c1],
            spin_b: [0.0, s1, c1],
            dt: None,
            t_max: None,
            record_every: 10,
            constrained: false,
            eps_init: 1e-6,
            positivity_tol: 1e-9,
            seed: 0,
            system: ThermalSystem::Qubit,
            coupling: 0.5,
            out: None,
        }
    }

    /// Reads a config file for `scenario`; a `scenario` key in the file must agree.
    pub fn from_file(path: &Path, scenario: Scenario) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::parse(&text, scenario)
    }

    pub fn parse(text: &str, scenario: Scenario) -> Result<Self> {
        let mut cfg = Self::new(scenario);
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("line {}: expected key=value, got '{line}'", lineno + 1)))?;
            cfg.set(key.trim(), value.trim())
                .map_err(|e| Error::Config(format!("line {}: {e}", lineno + 1)))?;
        }
        Ok(cfg)
    }

    /// Sets one key from its textual value.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        match key {
            "scenario" => {
                let s: Scenario = value.parse()?;
                if s != self.scenario {
                    return Err(Error::Config(format!(
                        "config is for '{s}' but the command is '{}'",
                        self.scenario
                    )));
                }
            }
            "p" => self.p = parse_f64(key, value)?,
            "gamma" => self.gamma = parse_f64(key, value)?,
            "omega" => self.omega = parse_f64(key, value)?,
            "beta" => self.beta = parse_f64(key, value)?,
            "spin_a" => self.spin_a = parse_direction(key, value)?,
            "spin_b" => self.spin_b = parse_direction(key, value)?,
            "dt" => self.dt = Some(parse_f64(key, value)?),
            "t_max" => self.t_max = Some(parse_f64(key, value)?),
            "record_every" => self.record_every = parse_int(key, value)?,
            "constrained" => {
                self.constrained = match value {
                    "true" | "1" | "yes" => true,
                    "false" | "0" | "no" => false,
                    _ => return Err(Error::Config(format!("constrained: expected true/false, got '{value}'"))),
                }
            }
            "eps_init" => self.eps_init = parse_f64(key, value)?,
            "positivity_tol" => self.positivity_tol = parse_f64(key, value)?,
            "seed" => self.seed = parse_int(key, value)?,
            "system" => self.system = value.parse()?,
            "coupling" => self.coupling = parse_f64(key, value)?,
            "out" => self.out = Some(PathBuf::from(value)),
            other => return Err(Error::Config(format!("unknown key '{other}'"))),
        }
        Ok(())
    }

    /// Step size actually used.
    pub fn dt(&self) -> f64 {
        self.dt.unwrap_or(1e-3 / self.gamma)
    }

    /// Final time actually used.
    pub fn t_max(&self) -> f64 {
        self.t_max.unwrap_or_else(|| {
            let gamma_t = match self.scenario {
                Scenario::Fig1 => 8.0,
                Scenario::Fig2 => 10.0,
                Scenario::Thermalize => 20.0,
                Scenario::Witness => 4.0,
                Scenario::Maxent => 0.0,
            };
            gamma_t / self.gamma
        })
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.p) {
            return Err(Error::Config(format!("p must lie in [0, 1], got {}", self.p)));
        }
        if !(self.gamma > 0.0) || !self.gamma.is_finite() {
            return Err(Error::Config(format!("gamma must be > 0, got {}", self.gamma)));
        }
        if !(self.beta > 0.0) || !self.beta.is_finite() {
            return Err(Error::Config(format!("beta must be > 0, got {}", self.beta)));
        }
        for (name, v) in [("omega", self.omega), ("coupling", self.coupling)] {
            if !v.is_finite() {
                return Err(Error::Config(format!("{name} must be finite")));
            }
        }
        for (name, n) in [("spin_a", self.spin_a), ("spin_b", self.spin_b)] {
            let norm = n.iter().map(|x| x * x).sum::<f64>().sqrt();
            if (norm - 1.0).abs() > 1e-10 {
                return Err(Error::Config(format!("{name} must be a unit vector, |n| = {norm}")));
            }
        }
        if !(self.dt() > 0.0) || !self.dt().is_finite() {
            return Err(Error::Config(format!("dt must be > 0, got {}", self.dt())));
        }
        if !(self.t_max() >= 0.0) || !self.t_max().is_finite() {
            return Err(Error::Config(format!("t_max must be >= 0, got {}", self.t_max())));
        }
        if !(self.positivity_tol >= 0.0) {
            return Err(Error::Config(format!("positivity_tol must be >= 0, got {}", self.positivity_tol)));
        }
        if self.record_every == 0 {
            return Err(Error::Config("record_every must be >= 1".into()));
        }
        if !(0.0..1.0).contains(&self.eps_init) {
            return Err(Error::Config(format!("eps_init must lie in [0, 1), got {}", self.eps_init)));
        }
        Ok(())
    }
}

fn parse_f64(key: &str, value: &str) -> Result<f64> {
    value
        .parse()
        .map_err(|_| Error::Config(format!("{key}: expected a number, got '{value}'")))
}

fn parse_int<T: FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .parse()
        .map_err(|_| Error::Config(format!("{key}: expected a non-negative integer, got '{value}'")))
}

/// `x,y,z`, normalized; the zero vector is rejected.
pub fn parse_direction(key: &str, value: &str) -> Result<[f64; 3]> {
    let parts: Vec<f64> = value
        .split(',')
        .map(|s| parse_f64(key, s.trim()))
        .collect::<Result<_>>()?;
    let [x, y, z] = parts[..] else {
        return Err(Error::Config(format!("{key}: expected x,y,z, got '{value}'")));
    };
    let norm = (x * x + y * y + z * z).sqrt();
    if !(norm > 0.0) || !norm.is_finite() {
        return Err(Error::Config(format!("{key}: direction must be nonzero and finite")));
    }
    Ok([x / norm, y / norm, z / norm])
}
