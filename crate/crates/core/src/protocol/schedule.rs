//! Piecewise-constant control sequence.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{ghz, DeviceParams};

/// Frequency of one qubit during a stage.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Setpoint {
    Named(NamedSetpoint),
    /// Explicit frequency in GHz.
    Ghz(f64),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NamedSetpoint {
    Idle,
    Working,
    /// The schedule-level compensation frequency.
    Compensation,
}

impl Setpoint {
    pub const IDLE: Setpoint = Setpoint::Named(NamedSetpoint::Idle);
    pub const WORKING: Setpoint = Setpoint::Named(NamedSetpoint::Working);
    pub const COMPENSATION: Setpoint = Setpoint::Named(NamedSetpoint::Compensation);
}

/// What a stage does in the sequence; calibration adjusts stages by role.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StageRole {
    Prepare,
    SqrtIswap,
    Compensation,
    ThreeQubit,
    CopyPair,
    Other,
}

/// Instantaneous single-qubit rotation at a time offset inside a stage.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct XyPulse {
    /// Qubit number, 1 to 3.
    pub qubit: usize,
    /// Offset from the start of the stage, ns.
    pub at_ns: f64,
    pub gate: XyGate,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum XyGate {
    /// `exp(−i angle/2 (cos φ σx + sin φ σy))` in the qubit's idle frame.
    Rotation { axis_phase: f64, angle: f64 },
    /// Prepares the input state from |0⟩.
    Input,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Stage {
    pub label: String,
    pub role: StageRole,
    pub duration_ns: f64,
    pub setpoints: [Setpoint; 3],
    #[serde(default)]
    pub xy: Vec<XyPulse>,
}

/// Ordered stages; time runs continuously from the first stage.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PulseSchedule {
    pub stages: Vec<Stage>,
    /// Frequency of Q₃ during the compensation window, GHz.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub compensation_ghz: Option<f64>,
}

impl PulseSchedule {
    /// Measured durations: 40 ns π pulse, 57.7 ns √iSWAP, 30 ns compensation, 40.8 ns and 69.5 ns
    /// coupling windows. The input rotation on Q₁ lands at the end of the compensation window.
    pub fn paper() -> Self {
        Self::with_durations(57.7, 40.8, 69.5)
    }

    /// The standard five-stage sequence with the given √iSWAP, three-qubit and copy-pair durations.
    pub fn with_durations(sqrt_iswap_ns: f64, tau_ns: f64, tau_prime_ns: f64) -> Self {
        use Setpoint as S;
        let stage = |label: &str, role, duration_ns, setpoints, xy| Stage {
            label: label.to_string(),
            role,
            duration_ns,
            setpoints,
            xy,
        };
        Self {
            stages: vec![
                stage(
                    "pi_q3",
                    StageRole::Prepare,
                    40.0,
                    [S::IDLE; 3],
                    vec![XyPulse {
                        qubit: 3,
                        at_ns: 20.0,
                        gate: XyGate::Rotation {
                            axis_phase: 0.0,
                            angle: std::f64::consts::PI,
                        },
                    }],
                ),
                stage(
                    "sqrt_iswap",
                    StageRole::SqrtIswap,
                    sqrt_iswap_ns,
                    [S::IDLE, S::WORKING, S::WORKING],
                    vec![],
                ),
                stage(
                    "compensation",
                    StageRole::Compensation,
                    30.0,
                    [S::IDLE, S::IDLE, S::COMPENSATION],
                    vec![XyPulse {
                        qubit: 1,
                        at_ns: 30.0,
                        gate: XyGate::Input,
                    }],
                ),
                stage(
                    "c123",
                    StageRole::ThreeQubit,
                    tau_ns,
                    [S::WORKING; 3],
                    vec![],
                ),
                stage(
                    "c23",
                    StageRole::CopyPair,
                    tau_prime_ns,
                    [S::IDLE, S::WORKING, S::WORKING],
                    vec![],
                ),
            ],
            compensation_ghz: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::ScheduleInvalid(m));
        if self.stages.is_empty() {
            return bad("no stages".into());
        }
        let mut inputs = 0;
        for s in &self.stages {
            if !(s.duration_ns > 0.0) || !s.duration_ns.is_finite() {
                return bad(format!("stage {}: duration must be positive", s.label));
            }
            for p in &s.xy {
                if !(1..=3).contains(&p.qubit) {
                    return bad(format!("stage {}: qubit {} out of range", s.label, p.qubit));
                }
                if !(0.0..=s.duration_ns).contains(&p.at_ns) {
                    return bad(format!(
                        "stage {}: pulse at {} ns outside stage",
                        s.label, p.at_ns
                    ));
                }
                if matches!(p.gate, XyGate::Input) {
                    inputs += 1;
                    if p.qubit != 1 {
                        return bad("the input state must be prepared on qubit 1".into());
                    }
                }
            }
            for sp in s.setpoints {
                match sp {
                    Setpoint::Ghz(f) if !(f > 0.0) => {
                        return bad(format!("stage {}: frequency {f}", s.label))
                    }
                    Setpoint::Named(NamedSetpoint::Compensation)
                        if self.compensation_ghz.is_none() =>
                    {
                        return bad("compensation frequency not set".into())
                    }
                    _ => {}
                }
            }
        }
        if inputs > 1 {
            return bad("more than one input preparation".into());
        }
        Ok(())
    }

    pub fn total_ns(&self) -> f64 {
        self.stages.iter().map(|s| s.duration_ns).sum()
    }

    /// Qubit frequencies of a stage in rad/ns.
    pub fn frequencies(&self, stage: &Stage, params: &DeviceParams) -> Result<[f64; 3]> {
        let mut out = [0.0; 3];
        for (j, sp) in stage.setpoints.iter().enumerate() {
            out[j] = match sp {
                Setpoint::Named(NamedSetpoint::Idle) => params.idle(j),
                Setpoint::Named(NamedSetpoint::Working) => params.working(),
                Setpoint::Named(NamedSetpoint::Compensation) => {
                    ghz(self.compensation_ghz.ok_or_else(|| {
                        Error::ScheduleInvalid("compensation frequency not set".into())
                    })?)
                }
                Setpoint::Ghz(f) => ghz(*f),
            };
        }
        Ok(out)
    }

    pub fn stage_mut(&mut self, role: StageRole) -> Option<&mut Stage> {
        self.stages.iter_mut().find(|s| s.role == role)
    }

    pub fn stage(&self, role: StageRole) -> Option<&Stage> {
        self.stages.iter().find(|s| s.role == role)
    }

    /// Durations of the √iSWAP, three-qubit and copy-pair stages.
    pub fn interaction_durations(&self) -> Option<[f64; 3]> {
        Some([
            self.stage(StageRole::SqrtIswap)?.duration_ns,
            self.stage(StageRole::ThreeQubit)?.duration_ns,
            self.stage(StageRole::CopyPair)?.duration_ns,
        ])
    }

    pub fn set_interaction_durations(&mut self, d: [f64; 3]) -> Result<()> {
        let roles = [
            StageRole::SqrtIswap,
            StageRole::ThreeQubit,
            StageRole::CopyPair,
        ];
        for (role, t) in roles.into_iter().zip(d) {
            self.stage_mut(role)
                .ok_or_else(|| Error::ScheduleInvalid(format!("missing {role:?} stage")))?
                .duration_ns = t;
        }
        Ok(())
    }
}
