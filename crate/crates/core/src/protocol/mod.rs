//! The cloning sequence at gate level and at pulse level.

mod ideal;
mod pulse;
mod schedule;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numkit::{c, C64};

pub use ideal::{
    bell_prep, bell_prep_ideal, clone_channel_ideal, eq4_state, eq5_state, prepare_input,
    run_ideal_uqcm, sqrt_iswap, IdealRun,
};
pub(crate) use pulse::rotation_matrix;
pub use pulse::{
    calibrate, dressed_frame, ideal_durations, run_pulse_level, BoundaryReport, Calibration,
    CalibrationTarget, DressedFrame, PulseConfig, PulseRun, Switching, ZCorrection,
};
pub use schedule::{NamedSetpoint, PulseSchedule, Setpoint, Stage, StageRole, XyGate, XyPulse};

/// Input qubit `α|0⟩ + β|1⟩`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct InputState {
    pub alpha: C64,
    pub beta: C64,
}

impl InputState {
    pub fn new(alpha: C64, beta: C64) -> Result<Self> {
        let n = alpha.norm_sqr() + beta.norm_sqr();
        if (n - 1.0).abs() > 1e-12 {
            return Err(Error::NotNormalized(n));
        }
        Ok(Self { alpha, beta })
    }

    /// Bloch-sphere parametrization `cos(θ/2)|0⟩ + e^{iφ} sin(θ/2)|1⟩`.
    pub fn from_bloch(theta: f64, phi: f64) -> Self {
        Self {
            alpha: c((theta / 2.0).cos(), 0.0),
            beta: C64::from_polar((theta / 2.0).sin(), phi),
        }
    }

    /// Haar-random pure state from four standard normals.
    pub fn haar<R: rand::Rng>(rng: &mut R) -> Self {
        use rand_distr::{Distribution, StandardNormal};
        let mut g = || -> f64 { StandardNormal.sample(rng) };
        let (a, b) = (c(g(), g()), c(g(), g()));
        let n = (a.norm_sqr() + b.norm_sqr()).sqrt();
        Self {
            alpha: a / n,
            beta: b / n,
        }
    }

    pub fn vector(&self) -> Vec<C64> {
        vec![self.alpha, self.beta]
    }

    /// Unitary taking |0⟩ to this state.
    pub fn preparation_unitary(&self) -> crate::numkit::CMatrix {
        crate::numkit::CMatrix::from_rows(&[
            vec![self.alpha, -self.beta.conj()],
            vec![self.beta, self.alpha.conj()],
        ])
    }
}

/// The six probe inputs in their conventional order.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Probe {
    Zero,
    PlusI,
    MinusI,
    Plus,
    Minus,
    One,
}

impl Probe {
    pub const ALL: [Probe; 6] = [
        Probe::Zero,
        Probe::PlusI,
        Probe::MinusI,
        Probe::Plus,
        Probe::Minus,
        Probe::One,
    ];

    pub fn state(self) -> InputState {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let (a, b) = match self {
            Probe::Zero => (c(1.0, 0.0), c(0.0, 0.0)),
            Probe::PlusI => (c(s, 0.0), c(0.0, s)),
            Probe::MinusI => (c(s, 0.0), c(0.0, -s)),
            Probe::Plus => (c(s, 0.0), c(s, 0.0)),
            Probe::Minus => (c(s, 0.0), c(-s, 0.0)),
            Probe::One => (c(0.0, 0.0), c(1.0, 0.0)),
        };
        InputState { alpha: a, beta: b }
    }

    /// File-name friendly label.
    pub fn label(self) -> &'static str {
        match self {
            Probe::Zero => "zero",
            Probe::PlusI => "plus_i",
            Probe::MinusI => "minus_i",
            Probe::Plus => "plus",
            Probe::Minus => "minus",
            Probe::One => "one",
        }
    }
}

/// Gate-level timing and phase parameters.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProtocolParams {
    /// Mediated exchange λ, rad/ns.
    pub lambda: f64,
    /// Three-qubit interaction time, ns.
    pub tau: f64,
    /// Copy-pair interaction time, ns.
    pub tau_prime: f64,
    /// Dynamical phase picked up by |1₂⟩ during the √iSWAP, rad.
    pub theta_d: f64,
    /// Compensation angle θ of `e^{iθ|1₃⟩⟨1₃|}`, rad.
    pub theta: f64,
    /// Residual phase on |1₁⟩, rad.
    pub phi: f64,
    /// Per-qubit z-rotation angles applied at the end, rad.
    pub z_angles: [f64; 3],
    /// Optional per-pair couplings (1,2), (1,3), (2,3) replacing λ, rad/ns.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pair_lambda: Option<[f64; 3]>,
}

impl ProtocolParams {
    /// Ideal timings `τ = 2π/9λ`, `τ′ = π/3λ` with the compensation exactly cancelling θ_d = 0.
    pub fn ideal(lambda: f64) -> Self {
        Self {
            lambda,
            tau: std::f64::consts::TAU / (9.0 * lambda),
            tau_prime: std::f64::consts::PI / (3.0 * lambda),
            theta_d: 0.0,
            theta: std::f64::consts::FRAC_PI_2,
            phi: 0.0,
            z_angles: [0.0; 3],
            pair_lambda: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.lambda > 0.0) {
            return Err(Error::InvalidParameter("λ must be positive".into()));
        }
        if !(self.tau >= 0.0 && self.tau_prime >= 0.0) {
            return Err(Error::InvalidParameter(
                "interaction times must be non-negative".into(),
            ));
        }
        Ok(())
    }
}
