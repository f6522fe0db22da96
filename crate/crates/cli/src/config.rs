//! Run configuration read from TOML. Every field has a default, so an empty file is valid.

use std::path::PathBuf;

use serde::{Deserialize, Serialize};
use uqcm_core::experiment::Setup;
use uqcm_core::metrics::Layer;
use uqcm_core::model::DeviceParams;
use uqcm_core::noise::{NoiseModel, NoisyConfig};
use uqcm_core::protocol::{CalibrationTarget, InputState, Probe, ProtocolParams, PulseConfig};
use uqcm_core::tomography::Readout;

#[derive(Clone, Debug, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub run: RunSection,
    pub device: DeviceParams,
    /// Gate-level parameters; derived from the device when absent.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub protocol: Option<ProtocolParams>,
    pub pulse: PulseConfig,
    pub calibration: CalibrationSection,
    /// Noise per qubit; derived from the device coherence times when absent.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub noise: Option<NoiseModel>,
    pub noisy: NoisyConfig,
    pub tomography: TomographySection,
    pub decoupling: DecouplingSection,
    pub sweep: SweepSection,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunSection {
    pub layer: Layer,
    /// Required by every stochastic run.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    pub out: PathBuf,
    /// Trajectories of the noisy layer.
    pub trajectories: usize,
    pub probes: ProbeSelector,
}

impl Default for RunSection {
    fn default() -> Self {
        Self {
            layer: Layer::Ideal,
            seed: None,
            out: PathBuf::from("out"),
            trajectories: 1000,
            probes: ProbeSelector::Six,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ProbeSelector {
    Six,
    Explicit { states: Vec<InputState> },
    Haar { count: usize },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CalibrationSection {
    pub target: CalibrationTarget,
}

impl Default for CalibrationSection {
    fn default() -> Self {
        Self {
            target: CalibrationTarget::CloneFidelity,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TomographySection {
    pub shots: u64,
    pub bootstrap: usize,
    /// Ignore the device readout fidelities.
    pub perfect_readout: bool,
}

impl Default for TomographySection {
    fn default() -> Self {
        Self {
            shots: 10_000,
            bootstrap: 50,
            perfect_readout: false,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DecouplingSection {
    /// Correlation times in units of 1/λ.
    pub tc_lambda: Vec<f64>,
    /// Noise amplitudes in units of λ.
    pub sigma_lambda: Vec<f64>,
    pub trajectories: usize,
}

impl Default for DecouplingSection {
    fn default() -> Self {
        Self {
            tc_lambda: vec![0.2, 1.0, 5.0, 10.0, 50.0],
            sigma_lambda: vec![0.0, 0.1, 0.3],
            trajectories: 1000,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SweepSection {
    /// Three-qubit interaction times, ns; empty means 0.5 to 1.5 times the ideal value.
    pub tau_ns: Vec<f64>,
    /// Copy-pair interaction times, ns; same convention.
    pub tau_prime_ns: Vec<f64>,
    pub points: usize,
}

impl Default for SweepSection {
    fn default() -> Self {
        Self {
            tau_ns: vec![],
            tau_prime_ns: vec![],
            points: 11,
        }
    }
}

/// A problem with the configuration; exits with code 2.
#[derive(Debug)]
pub struct ConfigError(pub String);

impl std::fmt::Display for ConfigError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for ConfigError {}

fn bad(msg: impl Into<String>) -> anyhow::Error {
    ConfigError(msg.into()).into()
}

impl RunConfig {
    pub fn parse(text: &str) -> anyhow::Result<Self> {
        toml::from_str(text).map_err(|e| bad(format!("config: {e}")))
    }

    pub fn to_toml(&self) -> anyhow::Result<String> {
        Ok(toml::to_string(self)?)
    }

    pub fn seed(&self) -> anyhow::Result<u64> {
        self.run
            .seed
            .ok_or_else(|| bad("this run is stochastic and needs a seed (--seed or run.seed)"))
    }

    /// Tag used in file names.
    pub fn seed_tag(&self) -> String {
        match self.run.seed {
            Some(s) => format!("s{s}"),
            None => "unseeded".into(),
        }
    }

    pub fn setup(&self) -> anyhow::Result<Setup> {
        let lambda = self.device.lambda()?;
        let noise = match (&self.noise, self.run.layer) {
            (Some(n), _) => NoiseModel {
                seed: self.run.seed.unwrap_or(n.seed),
                ..n.clone()
            },
            (None, Layer::Noisy) => {
                NoiseModel::from_device(&self.device, self.run.trajectories, self.seed()?)?
            }
            (None, _) => NoiseModel::from_device(&self.device, self.run.trajectories, 0)?,
        };
        if self.run.layer == Layer::Noisy {
            self.seed()?;
        }
        Ok(Setup {
            device: self.device.clone(),
            protocol: self
                .protocol
                .clone()
                .unwrap_or_else(|| ProtocolParams::ideal(lambda)),
            pulse: self.pulse.clone(),
            calibration: self.calibration.target,
            noise,
            noisy: self.noisy.clone(),
        })
    }

    /// Labeled input states.
    pub fn probes(&self) -> anyhow::Result<Vec<(String, InputState)>> {
        match &self.run.probes {
            ProbeSelector::Six => Ok(Probe::ALL
                .iter()
                .map(|p| (p.label().to_string(), p.state()))
                .collect()),
            ProbeSelector::Explicit { states } => {
                if states.is_empty() {
                    return Err(bad("explicit probe list is empty"));
                }
                states
                    .iter()
                    .enumerate()
                    .map(|(k, s)| Ok((format!("input{k}"), InputState::new(s.alpha, s.beta)?)))
                    .collect()
            }
            ProbeSelector::Haar { count } => {
                if *count == 0 {
                    return Err(bad("haar probe count must be positive"));
                }
                let mut rng = uqcm_core::noise::trajectory_rng(self.seed()?, u64::MAX);
                Ok((0..*count)
                    .map(|k| (format!("haar{k}"), InputState::haar(&mut rng)))
                    .collect())
            }
        }
    }

    /// Readout of the copy qubits.
    pub fn copy_readout(&self) -> [Readout; 2] {
        if self.tomography.perfect_readout {
            return [Readout::PERFECT; 2];
        }
        let q = &self.device.qubits;
        [1, 2].map(|j| Readout {
            f0: q[j].f0,
            f1: q[j].f1,
        })
    }
}
