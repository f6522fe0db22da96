//! One entry point for all three simulation layers.

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::metrics::Layer;
use crate::model::DeviceParams;
use crate::noise::{run_noisy, NoiseModel, NoisyConfig};
use crate::numkit::{partial_trace, CMatrix, SubsystemShape};
use crate::protocol::{
    calibrate, ideal_durations, run_ideal_uqcm, run_pulse_level, Calibration, CalibrationTarget,
    InputState, ProtocolParams, PulseConfig, PulseSchedule, ZCorrection,
};

/// Everything needed to produce output states on any layer.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Setup {
    pub device: DeviceParams,
    /// Gate-level parameters; only the ideal layer reads them.
    pub protocol: ProtocolParams,
    pub pulse: PulseConfig,
    pub calibration: CalibrationTarget,
    pub noise: NoiseModel,
    pub noisy: NoisyConfig,
}

impl Setup {
    /// Device defaults, ideal gate timings and device-derived noise.
    pub fn from_device(device: DeviceParams, trajectories: usize, seed: u64) -> Result<Self> {
        let protocol = ProtocolParams::ideal(device.lambda()?);
        let noise = NoiseModel::from_device(&device, trajectories, seed)?;
        Ok(Self {
            device,
            protocol,
            pulse: PulseConfig::default(),
            calibration: CalibrationTarget::CloneFidelity,
            noise,
            noisy: NoisyConfig::default(),
        })
    }
}

/// A layer ready to run, with the pulse calibration done once up front.
pub struct Runner<'a> {
    setup: &'a Setup,
    layer: Layer,
    calibration: Option<Calibration>,
}

impl<'a> Runner<'a> {
    pub fn new(layer: Layer, setup: &'a Setup) -> Result<Self> {
        let calibration = match layer {
            Layer::Ideal => {
                setup.protocol.validate()?;
                None
            }
            Layer::Pulse | Layer::Noisy => {
                let d = ideal_durations(&setup.device)?;
                let base = PulseSchedule::with_durations(d[0], d[1], d[2]);
                Some(calibrate(
                    &setup.device,
                    &setup.pulse,
                    &base,
                    setup.calibration,
                )?)
            }
        };
        Ok(Self {
            setup,
            layer,
            calibration,
        })
    }

    pub fn layer(&self) -> Layer {
        self.layer
    }

    pub fn calibration(&self) -> Option<&Calibration> {
        self.calibration.as_ref()
    }

    /// Three-qubit output density matrices, one per input.
    pub fn outputs(&self, inputs: &[InputState]) -> Result<Vec<CMatrix>> {
        let s = self.setup;
        match (self.layer, &self.calibration) {
            (Layer::Ideal, _) => inputs
                .iter()
                .map(|i| Ok(run_ideal_uqcm(i, &s.protocol)?.output_density()))
                .collect(),
            (Layer::Pulse, Some(cal)) => inputs
                .iter()
                .map(|i| {
                    Ok(run_pulse_level(
                        i,
                        &cal.schedule,
                        &s.device,
                        &s.pulse,
                        ZCorrection::Fixed(cal.z_angles),
                    )?
                    .rho)
                })
                .collect(),
            (Layer::Noisy, Some(cal)) => run_noisy(
                &s.device,
                &s.pulse,
                &cal.schedule,
                cal.z_angles,
                &s.noise,
                &s.noisy,
                inputs,
            ),
            _ => unreachable!("pulse layers are always calibrated"),
        }
    }
}

/// Reduced state of the listed qubits (0-based) of a three-qubit density matrix.
pub fn reduce(rho3: &CMatrix, keep: &[usize]) -> Result<CMatrix> {
    partial_trace(rho3, &SubsystemShape::qubits(3), keep)
}
