//! Decoherence: Markovian relaxation, classical frequency noise and gap protection.

mod decoupling;
mod layer;
mod lindblad;
mod ou;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::DeviceParams;

pub use decoupling::{
    accumulated_dephasing_phases, decoupling_ensemble, dressed_unit, evolve_static,
    gap_protection_leakage, h0_in_dressed_basis, h1_in_dressed_basis, trapezoid, DecouplingConfig,
    DecouplingResult, DephasingBasis, Estimate,
};
pub use layer::{run_noisy, NoisyConfig};
pub use lindblad::{lindblad_evolve, Collapse, STEP_ERROR_TOL};
pub use ou::{
    ou_trajectory, phase_variance_unit, sigma_for_t2_star, trajectory_rng, OuProcess, UnitOu,
};

/// How frequency noise enters.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DephasingMode {
    /// Classical Ornstein–Uhlenbeck frequency fluctuations.
    Ou,
    /// Markovian pure dephasing at rate γ_φ.
    Markovian,
    Off,
}

/// Noise acting on one qubit at one bias point.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QubitNoise {
    /// 1/T₁, 1/ns.
    pub gamma1: f64,
    /// Markovian pure-dephasing rate, 1/ns.
    pub gamma_phi: f64,
    /// OU amplitude, rad/ns.
    pub sigma: f64,
    /// OU correlation time, ns.
    pub tc: f64,
}

impl QubitNoise {
    pub const QUIET: QubitNoise = QubitNoise {
        gamma1: 0.0,
        gamma_phi: 0.0,
        sigma: 0.0,
        tc: 1e6,
    };

    /// Derives the noise from T₁, Ramsey T₂* and echo T₂ (all ns).
    ///
    /// σ and T_c are fixed jointly: the Ramsey coherence reaches e⁻¹ at T₂* and the echo
    /// coherence, including the T₁ envelope, reaches e⁻¹ at T₂.
    pub fn from_times(t1: f64, t2_star: f64, t2_echo: f64) -> Result<Self> {
        if !(t1 > 0.0 && t2_star > 0.0 && t2_echo > 0.0) {
            return Err(Error::InvalidParameter(
                "coherence times must be positive".into(),
            ));
        }
        let tc = correlation_time_from_echo(t1, t2_star, t2_echo)?;
        let sigma = sigma_for_t2_star(t2_star, tc)?;
        let gamma1 = 1.0 / t1;
        let gamma_phi = (1.0 / t2_star - 0.5 * gamma1).max(0.0);
        Ok(Self {
            gamma1,
            gamma_phi,
            sigma,
            tc,
        })
    }
}

/// Echo phase variance of a unit-σ OU process.
fn echo_variance_unit(t: f64, tc: f64) -> f64 {
    let r = t / tc;
    let core = if r < 0.05 {
        r.powi(3) / 12.0 - r.powi(4) / 32.0 + 7.0 * r.powi(5) / 960.0 - r.powi(6) / 768.0
    } else {
        r - 3.0 + 4.0 * (-r / 2.0).exp() - (-r).exp()
    };
    2.0 * tc * tc * core
}

fn correlation_time_from_echo(t1: f64, t2_star: f64, t2_echo: f64) -> Result<f64> {
    // echo log-decay at T₂ minus one; decreasing in T_c
    let f = |ln_tc: f64| {
        let tc = ln_tc.exp();
        let s2 = 2.0 / phase_variance_unit(t2_star, tc);
        0.5 * s2 * echo_variance_unit(t2_echo, tc) + t2_echo / (2.0 * t1) - 1.0
    };
    let (mut lo, mut hi) = (1.0f64.ln(), 1e9f64.ln());
    if f(lo) < 0.0 || f(hi) > 0.0 {
        return Err(Error::ConvergenceFailure);
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if f(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok((0.5 * (lo + hi)).exp())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseModel {
    /// Per-qubit noise while away from the working point.
    pub idle: [QubitNoise; 3],
    /// Per-qubit noise at the working point.
    pub working: [QubitNoise; 3],
    pub dephasing: DephasingMode,
    pub trajectories: usize,
    pub seed: u64,
}

impl NoiseModel {
    /// Noise derived from the device coherence times.
    pub fn from_device(params: &DeviceParams, trajectories: usize, seed: u64) -> Result<Self> {
        let mut idle = [QubitNoise::QUIET; 3];
        let mut working = [QubitNoise::QUIET; 3];
        for (j, q) in params.qubits.iter().enumerate() {
            idle[j] = QubitNoise::from_times(
                q.t1_idle_us * 1e3,
                q.t2_star_idle_us * 1e3,
                q.t2_echo_idle_us * 1e3,
            )?;
            working[j] = QubitNoise::from_times(
                q.t1_work_us * 1e3,
                q.t2_star_work_us * 1e3,
                q.t2_echo_work_us * 1e3,
            )?;
        }
        let m = Self {
            idle,
            working,
            dephasing: DephasingMode::Ou,
            trajectories,
            seed,
        };
        m.validate()?;
        Ok(m)
    }

    /// No decoherence at all.
    pub fn noiseless() -> Self {
        Self {
            idle: [QubitNoise::QUIET; 3],
            working: [QubitNoise::QUIET; 3],
            dephasing: DephasingMode::Off,
            trajectories: 1,
            seed: 0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        for q in self.idle.iter().chain(&self.working) {
            if !(q.gamma1 >= 0.0 && q.gamma_phi >= 0.0 && q.sigma >= 0.0 && q.tc > 0.0) {
                return Err(Error::InvalidParameter(
                    "noise rates must be non-negative".into(),
                ));
            }
        }
        if self.trajectories == 0 {
            return Err(Error::InvalidParameter("at least one trajectory".into()));
        }
        Ok(())
    }
}
