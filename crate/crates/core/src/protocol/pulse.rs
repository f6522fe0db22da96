//! Pulse-level sequence on the full qubit–resonator Hamiltonian.
//!
//! Each stage holds the qubit frequencies constant. Two switching models connect
//! consecutive stages. `Sudden` keeps the bare state across a frequency jump.
//! `Adiabatic` carries each bare qubit label onto the dressed eigenstate it
//! continues into, using the direct rotation between the photon-free
//! subspace and the qubit-like eigenspace. States are stored in the frame
//! rotating at the working frequency.

use std::f64::consts::{FRAC_PI_2, PI};

use argmin::core::{CostFunction, Executor};
use argmin::solver::neldermead::NelderMead;
use serde::{Deserialize, Serialize};

use super::schedule::{PulseSchedule, StageRole, XyGate};
use super::{InputState, Probe};
use crate::error::{Error, Result};
use crate::metrics::fidelity_to_pure;
use crate::model::{full_hamiltonian_with, ghz, DeviceParams, HamiltonianSpec, Operators};
use crate::numkit::{c, eigh, embed, partial_trace, polar_unitary, CMatrix, Eigh, C64, ZERO};

/// How bare states are carried across a frequency jump.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Switching {
    Adiabatic,
    Sudden,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PulseConfig {
    /// Resonator Fock truncation.
    pub fock: usize,
    pub crosstalk: bool,
    pub switching: Switching,
}

impl Default for PulseConfig {
    fn default() -> Self {
        Self {
            fock: 3,
            crosstalk: true,
            switching: Switching::Adiabatic,
        }
    }
}

/// Spectral data of the full Hamiltonian at fixed qubit frequencies.
#[derive(Clone, Debug)]
pub struct DressedFrame {
    pub freqs: [f64; 3],
    pub eig: Eigh,
    /// Direct rotation taking photon-free bare states onto the qubit-like eigenspace.
    pub rotation: CMatrix,
    /// Which eigenvectors are qubit-like (photon number below one half).
    pub qubit_like: Vec<bool>,
    /// Label-to-eigenbasis map used by the propagator.
    w: CMatrix,
}

impl DressedFrame {
    /// Propagator over `t` ns acting on stored states.
    pub fn propagator(&self, t: f64) -> CMatrix {
        let phases: Vec<C64> = self
            .eig
            .values
            .iter()
            .map(|&e| C64::from_polar(1.0, -e * t))
            .collect();
        let n = phases.len();
        let scaled = CMatrix::from_fn(n, n, |i, j| phases[i] * self.w[(i, j)]);
        self.w.dagger().matmul(&scaled)
    }

    /// Qubit-sector Hamiltonian (8×8) in the dressed labels; exact for adiabatic switching.
    pub fn effective_hamiltonian(&self, fock: usize) -> CMatrix {
        let e = CMatrix::diag_real(&self.eig.values);
        let vu = self.eig.vectors.dagger().matmul(&self.rotation);
        let h = vu.dagger().matmul(&e).matmul(&vu);
        CMatrix::from_fn(8, 8, |i, j| h[(i * fock, j * fock)]).hermitian_part()
    }

    fn physical(&self, psi: &[C64], switching: Switching) -> Vec<C64> {
        match switching {
            Switching::Adiabatic => self.rotation.apply(psi),
            Switching::Sudden => psi.to_vec(),
        }
    }
}

/// Diagonalizes the full Hamiltonian at `freqs` and builds the dressed frame.
pub fn dressed_frame(
    params: &DeviceParams,
    cfg: &PulseConfig,
    freqs: [f64; 3],
) -> Result<DressedFrame> {
    let ops = Operators::new(cfg.fock);
    dressed_frame_with(&ops, params, cfg, freqs)
}

fn dressed_frame_with(
    ops: &Operators,
    params: &DeviceParams,
    cfg: &PulseConfig,
    freqs: [f64; 3],
) -> Result<DressedFrame> {
    let spec = HamiltonianSpec::new(params, freqs, cfg.fock, cfg.crosstalk);
    spec.validate()?;
    let h = full_hamiltonian_with(ops, &spec, params);
    let eig = eigh(&h)?;
    let n = h.rows();
    let photon_diag: Vec<f64> = ops.photons.diagonal().iter().map(|z| z.re).collect();
    let qubit_like: Vec<bool> = (0..n)
        .map(|k| {
            (0..n)
                .map(|i| eig.vectors[(i, k)].norm_sqr() * photon_diag[i])
                .sum::<f64>()
                < 0.5
        })
        .collect();
    if qubit_like.iter().filter(|&&q| q).count() != 8 {
        return Err(Error::ScheduleInvalid(
            "qubit-like dressed states are not separable from the resonator at these frequencies"
                .into(),
        ));
    }
    let p0 = CMatrix::from_fn(n, n, |i, j| {
        (0..n)
            .filter(|&k| qubit_like[k])
            .map(|k| eig.vectors[(i, k)] * eig.vectors[(j, k)].conj())
            .sum()
    });
    let p_bare = CMatrix::diag_real(
        &photon_diag
            .iter()
            .map(|&m| if m == 0.0 { 1.0 } else { 0.0 })
            .collect::<Vec<_>>(),
    );
    let id = CMatrix::identity(n);
    let m = &p0.matmul(&p_bare) + &(&id - &p0).matmul(&(&id - &p_bare));
    let rotation = polar_unitary(&m);
    let w = match cfg.switching {
        Switching::Adiabatic => eig.vectors.dagger().matmul(&rotation),
        Switching::Sudden => eig.vectors.dagger(),
    };
    Ok(DressedFrame {
        freqs,
        eig,
        rotation,
        qubit_like,
        w,
    })
}

/// Resonator diagnostics at the end of a stage.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundaryReport {
    pub stage: String,
    pub time_ns: f64,
    /// Population outside the qubit-like dressed states.
    pub real_excitation: f64,
    /// Bare photon number ⟨a†a⟩, including the virtual dressing cloud.
    pub photon_number: f64,
}

/// Final z-rotations applied to the output.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ZCorrection {
    None,
    Fixed([f64; 3]),
    /// Chosen from the |0⟩ and |1⟩ reference runs so the output matches the closed form with φ = 0.
    FromReference,
}

/// Output of a pulse-level run.
#[derive(Clone, Debug)]
pub struct PulseRun {
    /// Final joint state in the qubits' idle frames after the z-rotations.
    pub state: Vec<C64>,
    /// Three-qubit density matrix with the resonator traced out.
    pub rho: CMatrix,
    /// One entry per stage, then one at the readout point with every qubit idle.
    pub boundaries: Vec<BoundaryReport>,
    pub z_angles: [f64; 3],
    /// Relative phase acquired by |1₂⟩ over the √iSWAP beyond the ideal π/2.
    pub theta_d: f64,
    /// Residual phase of |1₁⟩ in the |0⟩-input reference before the z-rotations.
    pub phi: f64,
}

struct Engine<'a> {
    params: &'a DeviceParams,
    cfg: &'a PulseConfig,
    ops: Operators,
    schedule: PulseSchedule,
    frames: Vec<DressedFrame>,
    /// All qubits parked at their idle frequencies, as during readout.
    readout: DressedFrame,
}

struct Trace {
    state: Vec<C64>,
    boundaries: Vec<BoundaryReport>,
    theta_d: f64,
}

pub(crate) fn rotation_matrix(axis_phase: f64, angle: f64) -> CMatrix {
    let (s, co) = (angle / 2.0).sin_cos();
    let off = C64::from_polar(s, axis_phase);
    CMatrix::from_rows(&[
        vec![c(co, 0.0), -c(0.0, 1.0) * off.conj()],
        vec![-c(0.0, 1.0) * off, c(co, 0.0)],
    ])
}

impl<'a> Engine<'a> {
    fn new(
        params: &'a DeviceParams,
        cfg: &'a PulseConfig,
        schedule: &PulseSchedule,
    ) -> Result<Self> {
        params.validate()?;
        schedule.validate()?;
        let ops = Operators::new(cfg.fock);
        let mut frames = Vec::with_capacity(schedule.stages.len());
        for st in &schedule.stages {
            let f = schedule.frequencies(st, params)?;
            frames.push(dressed_frame_with(&ops, params, cfg, f)?);
        }
        let readout = dressed_frame_with(&ops, params, cfg, params.idle_all())?;
        Ok(Self {
            params,
            cfg,
            ops,
            schedule: schedule.clone(),
            frames,
            readout,
        })
    }

    fn set_compensation(&mut self, ghz_value: f64) -> Result<()> {
        self.schedule.compensation_ghz = Some(ghz_value);
        for (k, st) in self.schedule.stages.iter().enumerate() {
            if st
                .setpoints
                .contains(&super::schedule::Setpoint::COMPENSATION)
            {
                let f = self.schedule.frequencies(st, self.params)?;
                self.frames[k] = dressed_frame_with(&self.ops, self.params, self.cfg, f)?;
            }
        }
        Ok(())
    }

    fn index(&self, bits: usize) -> usize {
        bits * self.cfg.fock
    }

    /// Idle-frame rotation expressed in the working-point frame at absolute time `t`.
    fn xy_operator(&self, qubit: usize, u: &CMatrix, t: f64) -> CMatrix {
        let delta = self.params.idle(qubit) - self.params.working();
        let r = CMatrix::diag(&[c(1.0, 0.0), C64::from_polar(1.0, -delta * t)]);
        embed(&self.ops.shape, qubit, &r.matmul(u).matmul(&r.dagger()))
    }

    fn boundary(&self, k: usize, psi: &[C64], t: f64) -> BoundaryReport {
        let mut report = self.diagnostics(&self.frames[k], psi, t);
        report.stage = self.schedule.stages[k].label.clone();
        report
    }

    fn diagnostics(&self, frame: &DressedFrame, psi: &[C64], t: f64) -> BoundaryReport {
        let phys = frame.physical(psi, self.cfg.switching);
        let n = phys.len();
        let mut real = 0.0;
        for (kk, &q) in frame.qubit_like.iter().enumerate() {
            if !q {
                let amp: C64 = (0..n)
                    .map(|i| frame.eig.vectors[(i, kk)].conj() * phys[i])
                    .sum();
                real += amp.norm_sqr();
            }
        }
        let photon_number = phys
            .iter()
            .zip(self.ops.photons.diagonal())
            .map(|(z, m)| z.norm_sqr() * m.re)
            .sum();
        BoundaryReport {
            stage: "readout".into(),
            time_ns: t,
            real_excitation: real,
            photon_number,
        }
    }

    /// Runs stages `[from, to)` starting at absolute time `t0`.
    fn evolve(
        &self,
        mut psi: Vec<C64>,
        input: &InputState,
        from: usize,
        to: usize,
        t0: f64,
        trace: &mut Trace,
    ) -> (Vec<C64>, f64) {
        let mut t = t0;
        for k in from..to {
            let stage = &self.schedule.stages[k];
            let frame = &self.frames[k];
            let mut pulses = stage.xy.clone();
            pulses.sort_by(|a, b| a.at_ns.total_cmp(&b.at_ns));
            let mut local = 0.0;
            for p in &pulses {
                if p.at_ns > local {
                    psi = frame.propagator(p.at_ns - local).apply(&psi);
                    local = p.at_ns;
                }
                let u = match p.gate {
                    XyGate::Rotation { axis_phase, angle } => rotation_matrix(axis_phase, angle),
                    XyGate::Input => input.preparation_unitary(),
                };
                psi = self.xy_operator(p.qubit - 1, &u, t + local).apply(&psi);
            }
            if stage.duration_ns > local {
                psi = frame.propagator(stage.duration_ns - local).apply(&psi);
            }
            t += stage.duration_ns;
            if stage.role == StageRole::SqrtIswap {
                let a = psi[self.index(0b010)];
                let b = psi[self.index(0b001)];
                trace.theta_d = wrap((a / b).arg() - FRAC_PI_2);
            }
            trace.boundaries.push(self.boundary(k, &psi, t));
        }
        (psi, t)
    }

    fn run(&self, input: &InputState) -> Trace {
        let mut psi = vec![ZERO; 8 * self.cfg.fock];
        psi[0] = c(1.0, 0.0);
        let mut trace = Trace {
            state: vec![],
            boundaries: vec![],
            theta_d: 0.0,
        };
        let (mut psi, t) = self.evolve(psi, input, 0, self.schedule.stages.len(), 0.0, &mut trace);
        trace
            .boundaries
            .push(self.diagnostics(&self.readout, &psi, t));
        self.to_idle_frames(&mut psi, t);
        trace.state = psi;
        trace
    }

    /// Moves each qubit from the working-point frame into its own idle frame.
    fn to_idle_frames(&self, psi: &mut [C64], t: f64) {
        let f = self.cfg.fock;
        for (idx, z) in psi.iter_mut().enumerate() {
            let bits = idx / f;
            let mut phase = 0.0;
            for j in 0..3 {
                if bits >> (2 - j) & 1 == 1 {
                    phase += (self.params.idle(j) - self.params.working()) * t;
                }
            }
            *z *= C64::from_polar(1.0, phase);
        }
    }

    /// Relative phase of |010⟩ against |001⟩ at the end of the compensation stage.
    fn compensation_residual(&self) -> Result<f64> {
        let k = self
            .schedule
            .stages
            .iter()
            .position(|s| s.role == StageRole::Compensation)
            .ok_or_else(|| Error::ScheduleInvalid("no compensation stage".into()))?;
        let mut psi = vec![ZERO; 8 * self.cfg.fock];
        psi[0] = c(1.0, 0.0);
        let mut trace = Trace {
            state: vec![],
            boundaries: vec![],
            theta_d: 0.0,
        };
        // the input pulse acts on Q₁ in |0⟩, so |0⟩ leaves the copy pair untouched
        let zero = Probe::Zero.state();
        let (psi, _) = self.evolve(psi, &zero, 0, k + 1, 0.0, &mut trace);
        Ok((psi[self.index(0b010)] / psi[self.index(0b001)]).arg())
    }

    /// Sets the compensation frequency so that the copy pair leaves the window as |ψ⁺⟩.
    fn calibrate_compensation(&mut self) -> Result<f64> {
        let stage = self
            .schedule
            .stage(StageRole::Compensation)
            .ok_or_else(|| Error::ScheduleInvalid("no compensation stage".into()))?;
        let window = stage.duration_ns;
        let mut f = self
            .schedule
            .compensation_ghz
            .map(ghz)
            .unwrap_or(self.params.idle(2));
        for _ in 0..6 {
            self.set_compensation(f / std::f64::consts::TAU)?;
            let ph = self.compensation_residual()?;
            if ph.abs() < 1e-12 {
                break;
            }
            f -= ph / window;
        }
        self.set_compensation(f / std::f64::consts::TAU)?;
        Ok(f / std::f64::consts::TAU)
    }

    /// z-angles aligning the |0⟩ and |1⟩ reference outputs with the closed form at φ = 0.
    fn reference_z(&self) -> ([f64; 3], f64) {
        let a = self.run(&Probe::Zero.state()).state;
        let b = self.run(&Probe::One.state()).state;
        let i = |bits| self.index(bits);
        let d2 = -(a[i(0b010)] / a[i(0b100)]).arg();
        let d3 = -(a[i(0b001)] / a[i(0b100)]).arg();
        let z1 = -(b[i(0b011)] / a[i(0b100)]).arg() - d2 - d3;
        let phi = wrap((a[i(0b100)] / (a[i(0b010)] + a[i(0b001)])).arg());
        ([wrap(z1), wrap(z1 + d2), wrap(z1 + d3)], phi)
    }

    fn apply_z(&self, psi: &mut [C64], z: [f64; 3]) {
        let f = self.cfg.fock;
        for (idx, amp) in psi.iter_mut().enumerate() {
            let bits = idx / f;
            let theta: f64 = (0..3)
                .filter(|j| bits >> (2 - j) & 1 == 1)
                .map(|j| z[j])
                .sum();
            *amp *= C64::from_polar(1.0, theta);
        }
    }

    fn qubit_density(&self, psi: &[C64]) -> CMatrix {
        partial_trace(&CMatrix::outer(psi), &self.ops.shape, &[0, 1, 2]).expect("consistent shape")
    }

    fn finish(&self, input: &InputState, z: ZCorrection) -> PulseRun {
        let (z_ref, phi) = self.reference_z();
        let z_angles = match z {
            ZCorrection::None => [0.0; 3],
            ZCorrection::Fixed(a) => a,
            ZCorrection::FromReference => z_ref,
        };
        let trace = self.run(input);
        let mut state = trace.state;
        self.apply_z(&mut state, z_angles);
        let rho = self.qubit_density(&state);
        PulseRun {
            state,
            rho,
            boundaries: trace.boundaries,
            z_angles,
            theta_d: trace.theta_d,
            phi,
        }
    }

    /// Clone fidelities of all six probes after z-correction.
    fn probe_fidelities(&self, z: [f64; 3]) -> Vec<[f64; 2]> {
        let shape = crate::numkit::SubsystemShape::qubits(3);
        Probe::ALL
            .iter()
            .map(|p| {
                let input = p.state();
                let mut psi = self.run(&input).state;
                self.apply_z(&mut psi, z);
                let rho = self.qubit_density(&psi);
                let v = input.vector();
                let f =
                    |q| fidelity_to_pure(&v, &partial_trace(&rho, &shape, &[q]).expect("shape"));
                [f(1), f(2)]
            })
            .collect()
    }

    fn probe_state_infidelity(&self, z: [f64; 3]) -> f64 {
        Probe::ALL
            .iter()
            .map(|p| {
                let input = p.state();
                let mut psi = self.run(&input).state;
                self.apply_z(&mut psi, z);
                let rho = self.qubit_density(&psi);
                1.0 - fidelity_to_pure(&super::eq5_state(&input, 0.0), &rho)
            })
            .sum::<f64>()
            / 6.0
    }
}

fn wrap(x: f64) -> f64 {
    (x + PI).rem_euclid(2.0 * PI) - PI
}

/// Runs the schedule for one input, with the compensation frequency taken from the schedule.
pub fn run_pulse_level(
    input: &InputState,
    schedule: &PulseSchedule,
    params: &DeviceParams,
    cfg: &PulseConfig,
    z: ZCorrection,
) -> Result<PulseRun> {
    InputState::new(input.alpha, input.beta)?;
    let engine = Engine::new(params, cfg, schedule)?;
    let run = engine.finish(input, z);
    let norm: f64 = run.state.iter().map(|z| z.norm_sqr()).sum();
    if (norm - 1.0).abs() > 1e-9 {
        return Err(Error::NotNormalized(norm));
    }
    Ok(run)
}

/// What the duration search minimizes.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CalibrationTarget {
    /// Mean squared deviation of the twelve probe clone fidelities from 5/6.
    CloneFidelity,
    /// Mean infidelity of the three-qubit output against the closed form.
    StateFidelity,
}

/// Schedule with tuned durations, compensation frequency and z-angles.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Calibration {
    pub schedule: PulseSchedule,
    pub z_angles: [f64; 3],
    pub theta_d: f64,
    pub phi: f64,
    pub cost: f64,
    pub evaluations: u64,
}

struct DurationProblem<'a> {
    params: &'a DeviceParams,
    cfg: &'a PulseConfig,
    base: &'a PulseSchedule,
    target: CalibrationTarget,
}

impl DurationProblem<'_> {
    fn engine(&self, d: &[f64]) -> Result<Engine<'_>> {
        let mut s = self.base.clone();
        s.set_interaction_durations([d[0], d[1], d[2]])?;
        if s.compensation_ghz.is_none() {
            s.compensation_ghz = Some(self.params.qubits[2].idle_ghz);
        }
        let mut e = Engine::new(self.params, self.cfg, &s)?;
        e.calibrate_compensation()?;
        Ok(e)
    }

    fn evaluate(&self, d: &[f64]) -> Result<f64> {
        if d.iter().any(|&t| !(t > 1.0)) {
            return Ok(1e3);
        }
        let e = self.engine(d)?;
        let (z, _) = e.reference_z();
        Ok(match self.target {
            CalibrationTarget::CloneFidelity => {
                let f = e.probe_fidelities(z);
                f.iter()
                    .flatten()
                    .map(|x| (x - 5.0 / 6.0).powi(2))
                    .sum::<f64>()
                    / 12.0
            }
            CalibrationTarget::StateFidelity => e.probe_state_infidelity(z),
        })
    }
}

impl CostFunction for DurationProblem<'_> {
    type Param = Vec<f64>;
    type Output = f64;

    fn cost(&self, d: &Self::Param) -> std::result::Result<f64, argmin::core::Error> {
        self.evaluate(d)
            .map_err(|e| argmin::core::Error::msg(e.to_string()))
    }
}

/// Tunes the √iSWAP, three-qubit and copy-pair durations by Nelder–Mead, starting from `base`.
pub fn calibrate(
    params: &DeviceParams,
    cfg: &PulseConfig,
    base: &PulseSchedule,
    target: CalibrationTarget,
) -> Result<Calibration> {
    let start = base
        .interaction_durations()
        .ok_or_else(|| Error::ScheduleInvalid("schedule lacks the interaction stages".into()))?;
    let problem = DurationProblem {
        params,
        cfg,
        base,
        target,
    };
    let mut simplex = vec![start.to_vec()];
    for k in 0..3 {
        let mut v = start.to_vec();
        v[k] += 2.0;
        simplex.push(v);
    }
    let solver = NelderMead::new(simplex)
        .with_sd_tolerance(1e-10)
        .map_err(|e| Error::InvalidParameter(e.to_string()))?;
    let res = Executor::new(problem, solver)
        .configure(|s| s.max_iters(300))
        .run()
        .map_err(|e| Error::InvalidParameter(e.to_string()))?;
    let state = res.state();
    let best = state.best_param.clone().ok_or(Error::ConvergenceFailure)?;
    let cost = state.best_cost;
    let evaluations = state.counts.values().copied().sum();

    let problem = DurationProblem {
        params,
        cfg,
        base,
        target,
    };
    let engine = problem.engine(&best)?;
    let (z_angles, phi) = engine.reference_z();
    let theta_d = engine.run(&Probe::Zero.state()).theta_d;
    log::info!("calibrated durations {best:?} ns, cost {cost:.3e} after {evaluations} evaluations");
    Ok(Calibration {
        schedule: engine.schedule.clone(),
        z_angles,
        theta_d,
        phi,
        cost,
        evaluations,
    })
}

/// Ideal-timing starting point `(π/4λ, 2π/9λ, π/3λ)` from the mean coupling.
pub fn ideal_durations(params: &DeviceParams) -> Result<[f64; 3]> {
    let l = params.lambda()?;
    Ok([PI / (4.0 * l), 2.0 * PI / (9.0 * l), PI / (3.0 * l)])
}
