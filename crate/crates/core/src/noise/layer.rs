//! Noisy sequence: dressed qubit-sector dynamics with relaxation and frequency noise.
//!
//! Each stage uses the exact 8×8 qubit-sector Hamiltonian of the adiabatically switched
//! dressed frame. Time is split into short steps; each step applies the unitary with the
//! current noise sample, then amplitude damping and (optionally) Markovian dephasing.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::ou::{trajectory_rng, UnitOu};
use super::{DephasingMode, NoiseModel, QubitNoise};
use crate::error::{Error, Result};
use crate::model::DeviceParams;
use crate::numkit::{c, eigh, embed, CMatrix, SubsystemShape, C64};
use crate::protocol::{
    dressed_frame, rotation_matrix, InputState, PulseConfig, PulseSchedule, Switching, XyGate,
};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoisyConfig {
    /// Largest integration step, ns.
    pub step_ns: f64,
}

impl Default for NoisyConfig {
    fn default() -> Self {
        Self { step_ns: 1.0 }
    }
}

fn bit(idx: usize, j: usize) -> bool {
    idx >> (2 - j) & 1 == 1
}

enum Event {
    Evolve { stage: usize, dt: f64 },
    Gate { qubit: usize, gate: XyGate, at: f64 },
}

struct Plan {
    hamiltonians: Vec<CMatrix>,
    /// Noise per qubit for each stage.
    noise: Vec<[QubitNoise; 3]>,
    events: Vec<Event>,
    end: f64,
    detuning: [f64; 3],
}

impl Plan {
    fn new(
        params: &DeviceParams,
        pulse: &PulseConfig,
        schedule: &PulseSchedule,
        model: &NoiseModel,
        cfg: &NoisyConfig,
    ) -> Result<Self> {
        schedule.validate()?;
        model.validate()?;
        if pulse.switching != Switching::Adiabatic {
            return Err(Error::InvalidParameter(
                "the noisy layer requires adiabatic switching".into(),
            ));
        }
        if !(cfg.step_ns > 0.0) {
            return Err(Error::InvalidParameter("step must be positive".into()));
        }
        let mut hamiltonians = Vec::new();
        let mut noise = Vec::new();
        let mut events = Vec::new();
        let mut t = 0.0;
        for (k, st) in schedule.stages.iter().enumerate() {
            let f = schedule.frequencies(st, params)?;
            hamiltonians.push(dressed_frame(params, pulse, f)?.effective_hamiltonian(pulse.fock));
            let mut n = [QubitNoise::QUIET; 3];
            for j in 0..3 {
                let at_work = (f[j] - params.working()).abs() < 1e-9;
                n[j] = if at_work {
                    model.working[j]
                } else {
                    model.idle[j]
                };
            }
            noise.push(n);
            let mut pulses = st.xy.clone();
            pulses.sort_by(|a, b| a.at_ns.total_cmp(&b.at_ns));
            let mut local = 0.0;
            let push_span = |events: &mut Vec<Event>, span: f64| {
                if span > 0.0 {
                    let n = (span / cfg.step_ns).ceil().max(1.0) as usize;
                    for _ in 0..n {
                        events.push(Event::Evolve {
                            stage: k,
                            dt: span / n as f64,
                        });
                    }
                }
            };
            for p in &pulses {
                push_span(&mut events, p.at_ns - local);
                local = local.max(p.at_ns);
                events.push(Event::Gate {
                    qubit: p.qubit - 1,
                    gate: p.gate,
                    at: t + local,
                });
            }
            push_span(&mut events, st.duration_ns - local);
            t += st.duration_ns;
        }
        let detuning = [0, 1, 2].map(|j| params.idle(j) - params.working());
        Ok(Self {
            hamiltonians,
            noise,
            events,
            end: t,
            detuning,
        })
    }

    fn gate(&self, qubit: usize, u: &CMatrix, t: f64) -> CMatrix {
        let r = CMatrix::diag(&[c(1.0, 0.0), C64::from_polar(1.0, -self.detuning[qubit] * t)]);
        embed(
            &SubsystemShape::qubits(3),
            qubit,
            &r.matmul(u).matmul(&r.dagger()),
        )
    }

    /// Idle-frame change at the end of the sequence combined with the z-rotations.
    fn final_phases(&self, z: [f64; 3]) -> Vec<C64> {
        (0..8)
            .map(|i| {
                let th: f64 = (0..3)
                    .filter(|&j| bit(i, j))
                    .map(|j| self.detuning[j] * self.end + z[j])
                    .sum();
                C64::from_polar(1.0, th)
            })
            .collect()
    }
}

/// `ρ → K₀ρK₀† + K₁ρK₁†` for amplitude damping of qubit `j` with decay probability `p`.
fn amplitude_damp(rho: &mut CMatrix, j: usize, p: f64) {
    if p <= 0.0 {
        return;
    }
    let keep = (1.0 - p).sqrt();
    let mask = 1 << (2 - j);
    let old = rho.clone();
    for a in 0..8 {
        for b in 0..8 {
            let fa = if a & mask != 0 { keep } else { 1.0 };
            let fb = if b & mask != 0 { keep } else { 1.0 };
            let mut v = old[(a, b)] * (fa * fb);
            if a & mask == 0 && b & mask == 0 {
                v += old[(a | mask, b | mask)] * p;
            }
            rho.as_mut_slice()[a * 8 + b] = v;
        }
    }
}

/// Multiplies coherences between different values of qubit `j` by `factor`.
fn dephase(rho: &mut CMatrix, j: usize, factor: f64) {
    for a in 0..8 {
        for b in 0..8 {
            if bit(a, j) != bit(b, j) {
                rho.as_mut_slice()[a * 8 + b] *= factor;
            }
        }
    }
}

fn trajectory(
    plan: &Plan,
    model: &NoiseModel,
    inputs: &[InputState],
    z: [f64; 3],
    index: u64,
) -> Result<Vec<CMatrix>> {
    let mut rng = trajectory_rng(model.seed, index);
    let mut x = [
        UnitOu::new(&mut rng),
        UnitOu::new(&mut rng),
        UnitOu::new(&mut rng),
    ];
    let mut rhos = vec![CMatrix::zeros(8, 8); inputs.len()];
    for r in &mut rhos {
        r.as_mut_slice()[0] = c(1.0, 0.0);
    }
    for ev in &plan.events {
        match ev {
            Event::Gate { qubit, gate, at } => {
                let g = |u: &CMatrix| plan.gate(*qubit, u, *at);
                match gate {
                    XyGate::Rotation { axis_phase, angle } => {
                        let u = g(&rotation_matrix(*axis_phase, *angle));
                        for r in &mut rhos {
                            *r = r.conjugate_by(&u);
                        }
                    }
                    XyGate::Input => {
                        for (r, s) in rhos.iter_mut().zip(inputs) {
                            *r = r.conjugate_by(&g(&s.preparation_unitary()));
                        }
                    }
                }
            }
            Event::Evolve { stage, dt } => {
                let noise = &plan.noise[*stage];
                let mut h = plan.hamiltonians[*stage].clone();
                if model.dephasing == DephasingMode::Ou {
                    // sample at the step midpoint
                    let mut k = [0.0; 3];
                    for ((kj, xj), n) in k.iter_mut().zip(x.iter_mut()).zip(noise) {
                        xj.advance(&mut rng, dt / 2.0, n.tc);
                        *kj = n.sigma * xj.x;
                    }
                    for i in 0..8 {
                        let shift: f64 = (0..3).filter(|&j| bit(i, j)).map(|j| k[j]).sum();
                        h.as_mut_slice()[i * 8 + i] += shift;
                    }
                }
                let u = eigh(&h)?.propagator(*dt);
                for r in &mut rhos {
                    *r = r.conjugate_by(&u);
                    for (j, n) in noise.iter().enumerate() {
                        amplitude_damp(r, j, 1.0 - (-n.gamma1 * dt).exp());
                        if model.dephasing == DephasingMode::Markovian {
                            dephase(r, j, (-n.gamma_phi * dt).exp());
                        }
                    }
                }
                if model.dephasing == DephasingMode::Ou {
                    for (xj, n) in x.iter_mut().zip(noise) {
                        xj.advance(&mut rng, dt / 2.0, n.tc);
                    }
                }
            }
        }
    }
    let d = plan.final_phases(z);
    for r in &mut rhos {
        *r = CMatrix::from_fn(8, 8, |a, b| d[a] * r[(a, b)] * d[b].conj());
    }
    Ok(rhos)
}

/// Trajectory-averaged three-qubit density matrices for each input.
///
/// The schedule must carry its compensation frequency; `z_angles` are the final
/// corrections, usually taken from a noise-free calibration. The average is reduced in
/// trajectory order, so the result does not depend on the number of worker threads.
pub fn run_noisy(
    params: &DeviceParams,
    pulse: &PulseConfig,
    schedule: &PulseSchedule,
    z_angles: [f64; 3],
    model: &NoiseModel,
    cfg: &NoisyConfig,
    inputs: &[InputState],
) -> Result<Vec<CMatrix>> {
    for s in inputs {
        InputState::new(s.alpha, s.beta)?;
    }
    let plan = Plan::new(params, pulse, schedule, model, cfg)?;
    let per: Vec<Vec<CMatrix>> = (0..model.trajectories as u64)
        .into_par_iter()
        .map(|i| trajectory(&plan, model, inputs, z_angles, i))
        .collect::<Result<_>>()?;
    let mut acc = vec![CMatrix::zeros(8, 8); inputs.len()];
    for traj in &per {
        for (a, r) in acc.iter_mut().zip(traj) {
            *a += r;
        }
    }
    let n = model.trajectories as f64;
    Ok(acc
        .into_iter()
        .map(|a| a.scale_real(1.0 / n).hermitian_part())
        .collect())
}
