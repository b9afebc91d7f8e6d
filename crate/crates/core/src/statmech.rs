//! Non-interacting spins in external fields: partition function, Gibbs
//! distribution, internal energy, entropy and exergy.
//!
//! Configuration `c ∈ 0..2ⁿ` has spin `σ_j = +1` when bit `j` of `c` is
//! clear, so configuration 0 has every spin up.

use serde::{Deserialize, Serialize};

use crate::divergence::kl;
use crate::error::{Error, Result};
use crate::state::{eta, State};

/// Boltzmann constant in J/K.
pub const BOLTZMANN_SI: f64 = 1.380649e-23;

/// Largest system for which `Z` and `U` are evaluated.
pub const MAX_SPINS: usize = 20;

/// Largest system for which the full Gibbs distribution is built.
pub const MAX_ENUMERATED_SPINS: usize = 14;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpinSystem {
    pub mu: f64,
    pub fields: Vec<f64>,
}

impl SpinSystem {
    pub fn new(mu: f64, fields: Vec<f64>) -> Result<Self> {
        let sys = Self { mu, fields };
        sys.validate(MAX_SPINS)?;
        Ok(sys)
    }

    pub fn len(&self) -> usize {
        self.fields.len()
    }

    pub fn is_empty(&self) -> bool {
        self.fields.is_empty()
    }

    fn validate(&self, limit: usize) -> Result<()> {
        if self.fields.is_empty() {
            return Err(Error::InvalidInput("a spin system needs at least one spin".into()));
        }
        if self.fields.len() > limit {
            return Err(Error::TooLarge(format!(
                "{} spins exceed the limit of {limit}",
                self.fields.len()
            )));
        }
        if !self.mu.is_finite() || self.fields.iter().any(|h| !h.is_finite()) {
            return Err(Error::InvalidInput("non-finite moment or field".into()));
        }
        Ok(())
    }

    /// Spin values of configuration `c`.
    pub fn configuration(&self, c: usize) -> Vec<i8> {
        (0..self.len()).map(|j| if c >> j & 1 == 0 { 1 } else { -1 }).collect()
    }

    fn energy_of_index(&self, c: usize) -> f64 {
        let mut acc = Neumaier::default();
        for (j, h) in self.fields.iter().enumerate() {
            let s = if c >> j & 1 == 0 { 1.0 } else { -1.0 };
            acc.add(-self.mu * h * s);
        }
        acc.total()
    }
}

/// Inverse temperatures of the system and its environment, in inverse
/// energy units, and the Boltzmann constant used to read them as
/// temperatures.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ThermalParams {
    pub beta: f64,
    pub beta0: f64,
    pub k: f64,
}

impl ThermalParams {
    pub fn new(beta: f64, beta0: f64) -> Result<Self> {
        let p = Self { beta, beta0, k: 1.0 };
        p.validate()?;
        Ok(p)
    }

    /// `β = 1/(kT)`, `β₀ = 1/(kT₀)`.
    pub fn from_temperatures(t: f64, t0: f64, k: f64) -> Result<Self> {
        if !(t > 0.0 && t0 > 0.0 && k > 0.0) {
            return Err(Error::DomainError("temperatures and k must be positive".into()));
        }
        let p = Self {
            beta: 1.0 / (k * t),
            beta0: 1.0 / (k * t0),
            k,
        };
        p.validate()?;
        Ok(p)
    }

    /// `kT₀ = 1/β₀`.
    pub fn kt0(&self) -> f64 {
        1.0 / self.beta0
    }

    pub fn temperature0(&self) -> f64 {
        1.0 / (self.k * self.beta0)
    }

    fn validate(&self) -> Result<()> {
        check_beta(self.beta)?;
        if !(self.beta0 > 0.0 && self.beta0.is_finite()) {
            return Err(Error::DomainError(format!(
                "environment inverse temperature {} must be positive",
                self.beta0
            )));
        }
        if !(self.k > 0.0) {
            return Err(Error::DomainError("k must be positive".into()));
        }
        Ok(())
    }
}

fn check_beta(beta: f64) -> Result<()> {
    if !(beta >= 0.0 && beta.is_finite()) {
        return Err(Error::DomainError(format!("inverse temperature {beta} must be ≥ 0")));
    }
    Ok(())
}

/// Compensated (Neumaier) summation.
#[derive(Debug, Default, Clone, Copy)]
pub struct Neumaier {
    sum: f64,
    c: f64,
}

impl Neumaier {
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.c += (self.sum - t) + x;
        } else {
            self.c += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn total(&self) -> f64 {
        self.sum + self.c
    }
}

pub fn neumaier_sum(xs: impl IntoIterator<Item = f64>) -> f64 {
    let mut acc = Neumaier::default();
    for x in xs {
        acc.add(x);
    }
    acc.total()
}

/// `Ĥ(σ) = −μ Σ h_j σ_j`.
pub fn hamiltonian(sys: &SpinSystem, sigma: &[i8]) -> Result<f64> {
    if sigma.len() != sys.len() {
        return Err(Error::ShapeMismatch(format!(
            "{} spins in configuration, {} in system",
            sigma.len(),
            sys.len()
        )));
    }
    if sigma.iter().any(|&s| s != 1 && s != -1) {
        return Err(Error::InvalidInput("spins must be ±1".into()));
    }
    Ok(neumaier_sum(
        sys.fields.iter().zip(sigma).map(|(h, &s)| -sys.mu * h * s as f64),
    ))
}

/// `ln(2 cosh x)` without overflow.
fn ln_2cosh(x: f64) -> f64 {
    let a = x.abs();
    a + (-2.0 * a).exp().ln_1p()
}

/// `ln Z(β) = Σ_j ln 2cosh(βμh_j)`.
pub fn ln_partition_function(sys: &SpinSystem, beta: f64) -> Result<f64> {
    sys.validate(MAX_SPINS)?;
    check_beta(beta)?;
    Ok(neumaier_sum(sys.fields.iter().map(|h| ln_2cosh(beta * sys.mu * h))))
}

/// `Z(β) = Π_j 2cosh(βμh_j)`.
pub fn partition_function(sys: &SpinSystem, beta: f64) -> Result<f64> {
    Ok(ln_partition_function(sys, beta)?.exp())
}

/// `U(β) = −Σ_j μh_j tanh(βμh_j)`.
pub fn internal_energy(sys: &SpinSystem, beta: f64) -> Result<f64> {
    sys.validate(MAX_SPINS)?;
    check_beta(beta)?;
    Ok(neumaier_sum(sys.fields.iter().map(|h| {
        let x = sys.mu * h;
        -x * (beta * x).tanh()
    })))
}

/// Gibbs probabilities over all `2ⁿ` configurations, normalised by a
/// log-sum-exp over the enumerated energies.
pub fn gibbs_distribution(sys: &SpinSystem, beta: f64) -> Result<Vec<f64>> {
    sys.validate(MAX_ENUMERATED_SPINS)?;
    check_beta(beta)?;
    let exps: Vec<f64> = (0..1usize << sys.len())
        .map(|c| -beta * sys.energy_of_index(c))
        .collect();
    let m = exps.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let ln_z = m + neumaier_sum(exps.iter().map(|e| (e - m).exp())).ln();
    Ok(exps.iter().map(|e| (e - ln_z).exp()).collect())
}

pub fn gibbs_state(sys: &SpinSystem, beta: f64) -> Result<State> {
    let p = gibbs_distribution(sys, beta)?;
    Ok(State::new_unchecked(crate::state::BlockMatrix::diagonal(&p)))
}

/// Shannon entropy of the Gibbs distribution, by enumeration.
pub fn gibbs_entropy(sys: &SpinSystem, beta: f64) -> Result<f64> {
    Ok(neumaier_sum(gibbs_distribution(sys, beta)?.into_iter().map(eta)))
}

/// `|H(P_β) − (βU + ln Z)|`, with the left side enumerated and the right
/// side from the factorised formulas.
pub fn entropy_identity_residual(sys: &SpinSystem, beta: f64) -> Result<f64> {
    let h = gibbs_entropy(sys, beta)?;
    let rhs = beta * internal_energy(sys, beta)? + ln_partition_function(sys, beta)?;
    Ok((h - rhs).abs())
}

/// `kT₀((β₀ − β)U(β) + ln Z(β₀) − ln Z(β))`.
pub fn exergy(sys: &SpinSystem, params: &ThermalParams) -> Result<f64> {
    params.validate()?;
    let u = internal_energy(sys, params.beta)?;
    let ln_z0 = ln_partition_function(sys, params.beta0)?;
    let ln_z = ln_partition_function(sys, params.beta)?;
    Ok(params.kt0() * neumaier_sum([(params.beta0 - params.beta) * u, ln_z0, -ln_z]))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ExergyReport {
    pub exergy: f64,
    /// `D(P_β ‖ P_β₀)` in nats.
    pub kl: f64,
    pub kt0: f64,
    /// `|exergy − kT₀·kl|`.
    pub residual: f64,
    /// `residual / max(1, exergy)`.
    pub relative_residual: f64,
}

/// Exergy from the thermodynamic formula against `kT₀` times the
/// divergence of the enumerated Gibbs distributions.
pub fn exergy_kl_residual(sys: &SpinSystem, params: &ThermalParams) -> Result<ExergyReport> {
    let ex = exergy(sys, params)?;
    let p = gibbs_distribution(sys, params.beta)?;
    let p0 = gibbs_distribution(sys, params.beta0)?;
    let d = kl(&p, &p0)?;
    let kt0 = params.kt0();
    let residual = (ex - kt0 * d).abs();
    Ok(ExergyReport {
        exergy: ex,
        kl: d,
        kt0,
        residual,
        relative_residual: residual / ex.abs().max(1.0),
    })
}
