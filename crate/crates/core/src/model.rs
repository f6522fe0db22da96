//! Device description and Hamiltonians.
//!
//! Every Hamiltonian is expressed in rad/ns inside a frame rotating at a chosen
//! reference frequency (the working point by default). The composite basis is
//! `|q1 q2 q3⟩ ⊗ |n⟩` with qubit 1 most significant and the resonator last.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numkit::{c, embed, pauli, CMatrix, SubsystemShape};

/// Angular frequency in rad/ns of a frequency given in GHz.
pub fn ghz(f: f64) -> f64 {
    std::f64::consts::TAU * f
}

/// Angular frequency in rad/ns of a frequency given in MHz.
pub fn mhz(f: f64) -> f64 {
    std::f64::consts::TAU * f * 1e-3
}

/// Characteristics of one transmon. Times in µs unless noted, frequencies in GHz or MHz.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QubitParams {
    pub idle_ghz: f64,
    pub coupling_mhz: f64,
    pub t1_idle_us: f64,
    pub t1_work_us: f64,
    pub t2_star_idle_us: f64,
    pub t2_star_work_us: f64,
    pub t2_echo_idle_us: f64,
    pub t2_echo_work_us: f64,
    /// Probability of reading |0⟩ as 0.
    pub f0: f64,
    /// Probability of reading |1⟩ as 1.
    pub f1: f64,
    /// Readout resonator decay time 1/κ in ns; carried as data only.
    pub readout_decay_ns: f64,
}

/// Three qubits on a shared bus resonator.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DeviceParams {
    pub qubits: [QubitParams; 3],
    pub working_ghz: f64,
    pub resonator_ghz: f64,
    /// Direct exchange for pairs (1,2) and (2,3) in MHz, signed.
    pub crosstalk_mhz: [f64; 2],
    /// Replaces the per-qubit couplings with a single value when set.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub uniform_coupling_mhz: Option<f64>,
}

impl Default for DeviceParams {
    fn default() -> Self {
        let q =
            |idle, g, t1: (f64, f64), t2s: (f64, f64), t2e: (f64, f64), f0, f1, kap| QubitParams {
                idle_ghz: idle,
                coupling_mhz: g,
                t1_idle_us: t1.0,
                t1_work_us: t1.1,
                t2_star_idle_us: t2s.0,
                t2_star_work_us: t2s.1,
                t2_echo_idle_us: t2e.0,
                t2_echo_work_us: t2e.1,
                f0,
                f1,
                readout_decay_ns: kap,
            };
        Self {
            qubits: [
                q(
                    5.367,
                    20.0,
                    (24.0, 15.4),
                    (2.2, 2.4),
                    (6.5, 6.9),
                    0.984,
                    0.925,
                    315.0,
                ),
                q(
                    5.223,
                    20.8,
                    (25.8, 28.5),
                    (0.7, 0.9),
                    (6.2, 7.1),
                    0.988,
                    0.939,
                    219.0,
                ),
                q(
                    5.311,
                    19.9,
                    (22.7, 14.4),
                    (2.6, 2.9),
                    (8.0, 8.9),
                    0.986,
                    0.921,
                    203.0,
                ),
            ],
            working_ghz: 5.44,
            resonator_ghz: 5.588,
            crosstalk_mhz: [0.069, 0.553],
            uniform_coupling_mhz: None,
        }
    }
}

impl DeviceParams {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidParameter(m));
        if !(self.working_ghz > 0.0 && self.resonator_ghz > 0.0) {
            return bad("frequencies must be positive".into());
        }
        for (j, q) in self.qubits.iter().enumerate() {
            if !(q.idle_ghz > 0.0) {
                return bad(format!("qubit {}: idle frequency must be positive", j + 1));
            }
            if !(0.0..=1.0).contains(&q.f0) || !(0.0..=1.0).contains(&q.f1) {
                return bad(format!(
                    "qubit {}: readout fidelities outside [0, 1]",
                    j + 1
                ));
            }
            let times = [
                q.t1_idle_us,
                q.t1_work_us,
                q.t2_star_idle_us,
                q.t2_star_work_us,
                q.t2_echo_idle_us,
                q.t2_echo_work_us,
                q.readout_decay_ns,
            ];
            if times.iter().any(|&t| !(t > 0.0)) {
                return bad(format!("qubit {}: coherence times must be positive", j + 1));
            }
        }
        if let Some(g) = self.uniform_coupling_mhz {
            if !g.is_finite() {
                return bad("uniform coupling must be finite".into());
            }
        }
        Ok(())
    }

    /// Coupling g_j in rad/ns.
    pub fn coupling(&self, j: usize) -> f64 {
        mhz(self
            .uniform_coupling_mhz
            .unwrap_or(self.qubits[j].coupling_mhz))
    }

    pub fn idle(&self, j: usize) -> f64 {
        ghz(self.qubits[j].idle_ghz)
    }

    pub fn idle_all(&self) -> [f64; 3] {
        [self.idle(0), self.idle(1), self.idle(2)]
    }

    pub fn working(&self) -> f64 {
        ghz(self.working_ghz)
    }

    pub fn resonator(&self) -> f64 {
        ghz(self.resonator_ghz)
    }

    /// Crosstalk for pair (j, j+1) in rad/ns.
    pub fn crosstalk(&self, j: usize) -> f64 {
        mhz(self.crosstalk_mhz[j])
    }

    /// Mean coupling over the three qubits, rad/ns.
    pub fn mean_coupling(&self) -> f64 {
        (0..3).map(|j| self.coupling(j)).sum::<f64>() / 3.0
    }

    /// Resonator-mediated coupling at the working point using the mean coupling.
    pub fn lambda(&self) -> Result<f64> {
        mediated_coupling(self.mean_coupling(), self.resonator() - self.working())
    }
}

/// Which qubits couple, where they sit, and how the resonator is truncated.
#[derive(Clone, Debug, PartialEq)]
pub struct HamiltonianSpec {
    /// Qubits with `false` are decoupled from the resonator and from crosstalk.
    pub active: [bool; 3],
    /// Instantaneous qubit frequencies, rad/ns.
    pub freqs: [f64; 3],
    /// Fock truncation F (photon numbers 0..F).
    pub fock: usize,
    pub crosstalk: bool,
    /// Rotating-frame reference, rad/ns.
    pub frame: f64,
}

impl HamiltonianSpec {
    /// All qubits active at the given frequencies, framed at the working point.
    pub fn new(params: &DeviceParams, freqs: [f64; 3], fock: usize, crosstalk: bool) -> Self {
        Self {
            active: [true; 3],
            freqs,
            fock,
            crosstalk,
            frame: params.working(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.fock < 2 {
            return Err(Error::ShapeMismatch(format!(
                "Fock truncation {} < 2",
                self.fock
            )));
        }
        if self.freqs.iter().any(|f| !f.is_finite()) || !self.frame.is_finite() {
            return Err(Error::InvalidParameter("non-finite frequency".into()));
        }
        Ok(())
    }
}

/// Ladder and number operators on the three-qubit ⊗ resonator space.
#[derive(Clone, Debug)]
pub struct Operators {
    pub shape: SubsystemShape,
    /// Resonator annihilation operator.
    pub a: CMatrix,
    /// Qubit lowering operators.
    pub lower: [CMatrix; 3],
    /// Qubit excitation projectors |1_j⟩⟨1_j|.
    pub number: [CMatrix; 3],
    pub photons: CMatrix,
}

impl Operators {
    pub fn new(fock: usize) -> Self {
        let shape = SubsystemShape::new(vec![2, 2, 2, fock]).expect("valid dims");
        let mut a1 = CMatrix::zeros(fock, fock);
        for n in 1..fock {
            a1[(n - 1, n)] = c((n as f64).sqrt(), 0.0);
        }
        let a = embed(&shape, 3, &a1);
        let lower = [0, 1, 2].map(|j| embed(&shape, j, &pauli::lower()));
        let number = [0, 1, 2].map(|j| embed(&shape, j, &pauli::number()));
        let photons = a.dagger().matmul(&a);
        Self {
            shape,
            a,
            lower,
            number,
            photons,
        }
    }

    /// Total excitation number: qubit excitations plus photons.
    pub fn excitations(&self) -> CMatrix {
        let mut n = self.photons.clone();
        for m in &self.number {
            n += m;
        }
        n
    }

    /// `S_j⁺ S_k⁻ + h.c.`
    pub fn exchange(&self, j: usize, k: usize) -> CMatrix {
        let t = self.lower[j].dagger().matmul(&self.lower[k]);
        &t + &t.dagger()
    }
}

/// Full qubit–resonator Hamiltonian with optional nearest-neighbour crosstalk.
pub fn full_hamiltonian(spec: &HamiltonianSpec, params: &DeviceParams) -> Result<CMatrix> {
    spec.validate()?;
    Ok(full_hamiltonian_with(
        &Operators::new(spec.fock),
        spec,
        params,
    ))
}

/// As [`full_hamiltonian`], reusing prebuilt operators.
pub fn full_hamiltonian_with(
    ops: &Operators,
    spec: &HamiltonianSpec,
    params: &DeviceParams,
) -> CMatrix {
    let mut h = ops.photons.scale_real(params.resonator() - spec.frame);
    for j in 0..3 {
        h += &ops.number[j].scale_real(spec.freqs[j] - spec.frame);
        if spec.active[j] {
            let t = ops.a.dagger().matmul(&ops.lower[j]);
            h += &(&t + &t.dagger()).scale_real(params.coupling(j));
        }
    }
    if spec.crosstalk {
        for j in 0..2 {
            if spec.active[j] && spec.active[j + 1] {
                h += &ops.exchange(j, j + 1).scale_real(params.crosstalk(j));
            }
        }
    }
    h
}

fn qubit_exchange(n: usize, j: usize, k: usize) -> CMatrix {
    let shape = SubsystemShape::qubits(n);
    let t = embed(&shape, j, &pauli::lower())
        .dagger()
        .matmul(&embed(&shape, k, &pauli::lower()));
    &t + &t.dagger()
}

/// `H_e = −λ Σ_{j≠k} S_j⁺ S_k⁻` on three qubits.
pub fn effective_three_qubit_hamiltonian(lambda: f64) -> CMatrix {
    pairwise_exchange_hamiltonian([lambda; 3])
}

/// `−Σ λ_jk (S_j⁺S_k⁻ + h.c.)` with couplings for pairs (1,2), (1,3), (2,3).
pub fn pairwise_exchange_hamiltonian(lambdas: [f64; 3]) -> CMatrix {
    let mut h = CMatrix::zeros(8, 8);
    for ((j, k), l) in [(0, 1), (0, 2), (1, 2)].into_iter().zip(lambdas) {
        h += &qubit_exchange(3, j, k).scale_real(-l);
    }
    h
}

/// `H_e′ = −λ (S₂⁺S₃⁻ + S₂⁻S₃⁺)` on the two copy qubits.
pub fn effective_two_qubit_hamiltonian(lambda: f64) -> CMatrix {
    qubit_exchange(2, 0, 1).scale_real(-lambda)
}

/// Resonator-mediated exchange `λ = g²/Δ`.
pub fn mediated_coupling(g: f64, delta: f64) -> Result<f64> {
    if delta == 0.0 {
        return Err(Error::ZeroDetuning);
    }
    if delta.abs() < 5.0 * g.abs() {
        log::warn!("detuning {delta} rad/ns is less than 5g; dispersive approximation is poor");
    }
    Ok(g * g / delta)
}

/// Second-order dispersive qubit Hamiltonian (8×8) at the given frequencies, framed at `spec.frame`.
///
/// Stark shifts `g_j²/Δ_j` and exchange `g_j g_k (1/Δ_j + 1/Δ_k)/2` with `Δ_j = ω_j − ω_r`.
pub fn dispersive_hamiltonian(spec: &HamiltonianSpec, params: &DeviceParams) -> Result<CMatrix> {
    spec.validate()?;
    let shape = SubsystemShape::qubits(3);
    let wr = params.resonator();
    let delta = spec.freqs.map(|f| f - wr);
    if (0..3).any(|j| delta[j] == 0.0 && spec.active[j]) {
        return Err(Error::ZeroDetuning);
    }
    let g = |j: usize| {
        if spec.active[j] {
            params.coupling(j)
        } else {
            0.0
        }
    };
    let mut h = CMatrix::zeros(8, 8);
    for (j, d) in delta.iter().enumerate() {
        let stark = if spec.active[j] { g(j) * g(j) / d } else { 0.0 };
        h += &embed(&shape, j, &pauli::number()).scale_real(spec.freqs[j] - spec.frame + stark);
    }
    for (j, k) in [(0, 1), (0, 2), (1, 2)] {
        if !(spec.active[j] && spec.active[k]) {
            continue;
        }
        let mut coupling = 0.5 * g(j) * g(k) * (1.0 / delta[j] + 1.0 / delta[k]);
        if spec.crosstalk && k == j + 1 {
            coupling += params.crosstalk(j);
        }
        h += &qubit_exchange(3, j, k).scale_real(coupling);
    }
    Ok(h)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numkit::{eigvals_hermitian, HERMITIAN_TOL};

    #[test]
    fn defaults_are_valid() {
        let p = DeviceParams::default();
        p.validate().unwrap();
        assert!((p.resonator() - p.working() - mhz(148.0)).abs() < 1e-12);
    }

    #[test]
    fn invalid_params_rejected() {
        let mut p = DeviceParams::default();
        p.qubits[1].f0 = 1.2;
        assert!(p.validate().is_err());
        let mut p = DeviceParams::default();
        p.qubits[2].t1_idle_us = 0.0;
        assert!(p.validate().is_err());
    }

    #[test]
    fn hamiltonian_is_hermitian_and_conserves_excitations() {
        let p = DeviceParams::default();
        for crosstalk in [false, true] {
            let spec = HamiltonianSpec::new(&p, p.idle_all(), 3, crosstalk);
            let ops = Operators::new(3);
            let h = full_hamiltonian_with(&ops, &spec, &p);
            assert!(h.is_hermitian(HERMITIAN_TOL));
            assert!(h.commutator(&ops.excitations()).max_abs() < 1e-9);
        }
    }

    #[test]
    fn decoupled_limit_is_diagonal() {
        let p = DeviceParams {
            uniform_coupling_mhz: Some(0.0),
            ..Default::default()
        };
        let spec = HamiltonianSpec::new(&p, p.idle_all(), 3, false);
        let h = full_hamiltonian(&spec, &p).unwrap();
        let off: f64 = (0..24)
            .flat_map(|i| (0..24).map(move |j| (i, j)))
            .filter(|(i, j)| i != j)
            .map(|(i, j)| h[(i, j)].norm())
            .fold(0.0, f64::max);
        assert_eq!(off, 0.0);
        // |1 0 0⟩|0⟩ sits at ω₁ − ω_w
        let idx = 4 * 3;
        assert!((h[(idx, idx)].re - (p.idle(0) - p.working())).abs() < 1e-12);
    }

    #[test]
    fn vacuum_rabi_splitting() {
        let p = DeviceParams::default();
        let wr = p.resonator();
        let spec = HamiltonianSpec {
            active: [true, false, false],
            freqs: [wr, p.idle(1), p.idle(2)],
            fock: 2,
            crosstalk: false,
            frame: wr,
        };
        let h = full_hamiltonian(&spec, &p).unwrap();
        // single-excitation block {|100⟩|0⟩, |000⟩|1⟩}
        let (a, b) = (4 * 2, 1);
        let block = CMatrix::from_fn(2, 2, |i, j| h[([a, b][i], [a, b][j])]);
        let e = eigvals_hermitian(&block).unwrap();
        let g = p.coupling(0);
        assert!((e[0] - g).abs() < 1e-12 && (e[1] + g).abs() < 1e-12);
    }

    #[test]
    fn working_point_detuning_on_diagonal() {
        let p = DeviceParams::default();
        let w = p.working();
        let h = full_hamiltonian(&HamiltonianSpec::new(&p, [w; 3], 3, false), &p).unwrap();
        // |000⟩|1⟩ carries the resonator offset, |001⟩|0⟩ sits at zero
        assert!((h[(1, 1)].re - mhz(148.0)).abs() < 1e-12);
        assert!(h[(3, 3)].re.abs() < 1e-12);
    }

    #[test]
    fn mediated_coupling_values() {
        let l = mediated_coupling(mhz(20.0), mhz(148.0)).unwrap();
        assert!((l / mhz(1.0) - 400.0 / 148.0).abs() < 1e-12);
        assert_eq!(mediated_coupling(0.0, mhz(148.0)).unwrap(), 0.0);
        assert_eq!(mediated_coupling(1.0, 0.0), Err(Error::ZeroDetuning));
        let tau = std::f64::consts::TAU / (9.0 * l);
        assert!((tau - 41.1).abs() < 0.05);
    }

    #[test]
    fn two_qubit_effective_spectrum() {
        let lam = 0.3;
        let h = effective_two_qubit_hamiltonian(lam);
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let plus = [c(0.0, 0.0), c(s, 0.0), c(s, 0.0), c(0.0, 0.0)];
        let minus = [c(0.0, 0.0), c(s, 0.0), c(-s, 0.0), c(0.0, 0.0)];
        let hp = h.apply(&plus);
        let hm = h.apply(&minus);
        for i in 0..4 {
            assert!((hp[i] + plus[i] * lam).norm() < 1e-15);
            assert!((hm[i] - minus[i] * lam).norm() < 1e-15);
        }
        assert!(h
            .apply(&[c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(0.0, 0.0)])
            .iter()
            .all(|z| z.norm() == 0.0));
        assert!(h[(3, 3)].norm() == 0.0 && h[(0, 3)].norm() == 0.0);
    }

    #[test]
    fn three_qubit_effective_w_state() {
        let lam = 0.2;
        let h = effective_three_qubit_hamiltonian(lam);
        let s = 1.0 / 3f64.sqrt();
        let mut w = vec![c(0.0, 0.0); 8];
        for i in [1, 2, 4] {
            w[i] = c(s, 0.0);
        }
        let hw = h.apply(&w);
        for i in 0..8 {
            assert!((hw[i] + w[i] * (2.0 * lam)).norm() < 1e-15);
        }
        assert!(h.row(0).iter().all(|z| z.norm() == 0.0));
    }

    #[test]
    fn dispersive_model_matches_effective_form_with_uniform_coupling() {
        let p = DeviceParams {
            uniform_coupling_mhz: Some(20.0),
            ..Default::default()
        };
        let w = p.working();
        let h = dispersive_hamiltonian(&HamiltonianSpec::new(&p, [w; 3], 3, false), &p).unwrap();
        let lam = p.lambda().unwrap();
        // the Stark shift −λ per excitation is the only difference
        let mut shifted = effective_three_qubit_hamiltonian(lam);
        for i in 0..8 {
            shifted[(i, i)] += c(-lam * (i as u32).count_ones() as f64, 0.0);
        }
        assert!(h.max_abs_diff(&shifted) < 1e-14);
    }
}
