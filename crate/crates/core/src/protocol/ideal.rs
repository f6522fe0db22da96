//! Gate-level sequence on three ideal qubits.

use std::f64::consts::{FRAC_1_SQRT_2, FRAC_PI_2, PI};

use super::{InputState, ProtocolParams};
use crate::error::{Error, Result};
use crate::metrics::validate_density;
use crate::model::{effective_two_qubit_hamiltonian, pairwise_exchange_hamiltonian};
use crate::numkit::{c, expm_scaled, kron, kron_vec, pauli, vec_norm, CMatrix, C64, ZERO};

/// Normalized single-qubit state vector `(α, β)`.
pub fn prepare_input(state: &InputState) -> Result<Vec<C64>> {
    Ok(InputState::new(state.alpha, state.beta)?.vector())
}

/// Half-swap `exp(−i H_e′ π/(4λ))` on the copy pair.
pub fn sqrt_iswap(lambda: f64) -> Result<CMatrix> {
    if !(lambda > 0.0) {
        return Err(Error::InvalidParameter("λ must be positive".into()));
    }
    expm_scaled(
        &effective_two_qubit_hamiltonian(lambda),
        PI / (4.0 * lambda),
    )
}

/// `e^{iθ|1⟩⟨1|}`.
fn phase_gate(theta: f64) -> CMatrix {
    CMatrix::diag(&[c(1.0, 0.0), C64::from_polar(1.0, theta)])
}

/// Bell preparation on qubits 2 and 3: X on Q₃, √iSWAP, dynamical phase θ_d on |1₂⟩, then the
/// optional compensation `e^{iθ|1₃⟩⟨1₃|}`.
pub fn bell_prep(theta_d: f64, compensation: Option<f64>) -> Vec<C64> {
    let mut psi = vec![ZERO; 4];
    psi[0] = c(1.0, 0.0);
    let x3 = kron(&CMatrix::identity(2), &pauli::x());
    // √iSWAP is exact at unit λ; λ only rescales the gate time
    let u = sqrt_iswap(1.0).expect("positive λ");
    let dyn_phase = kron(&phase_gate(theta_d), &CMatrix::identity(2));
    psi = dyn_phase.apply(&u.apply(&x3.apply(&psi)));
    if let Some(theta) = compensation {
        psi = kron(&CMatrix::identity(2), &phase_gate(theta)).apply(&psi);
    }
    psi
}

/// `|ψ⁺⟩ = (|10⟩ + |01⟩)/√2` from the compensated sequence, global phase removed.
pub fn bell_prep_ideal() -> Vec<C64> {
    let theta = FRAC_PI_2;
    let phase = C64::from_polar(1.0, -theta);
    bell_prep(0.0, Some(theta))
        .into_iter()
        .map(|z| z * phase)
        .collect()
}

/// Closed-form state after the three-qubit stage.
pub fn eq4_state(input: &InputState) -> Vec<C64> {
    branch_state(input, C64::from_polar(1.0, -PI / 3.0), c(1.0, 0.0))
}

/// Closed-form output state with residual phase φ on |1₁⟩.
pub fn eq5_state(input: &InputState, phi: f64) -> Vec<C64> {
    branch_state(input, c(1.0, 0.0), C64::from_polar(1.0, phi))
}

/// `α[√⅔ p|100⟩ + √⅓ w|0ψ⁺⟩] + β[√⅔|011⟩ + √⅓ w p|1ψ⁺⟩]` where `w` multiplies the ψ⁺ branch and
/// `p` the |1₁⟩ component.
fn branch_state(input: &InputState, w: C64, p: C64) -> Vec<C64> {
    let big = (2.0f64 / 3.0).sqrt();
    let small = (1.0f64 / 3.0).sqrt() * FRAC_1_SQRT_2;
    let (a, b) = (input.alpha, input.beta);
    let mut s = vec![ZERO; 8];
    s[0b100] = a * big * p;
    s[0b010] = a * small * w;
    s[0b001] = a * small * w;
    s[0b011] = b * big;
    s[0b110] = b * small * w * p;
    s[0b101] = b * small * w * p;
    s
}

/// States recorded along the gate-level sequence.
#[derive(Clone, Debug)]
pub struct IdealRun {
    /// Copy pair after Bell preparation.
    pub bell: Vec<C64>,
    /// Three qubits after the three-qubit stage.
    pub after_c123: Vec<C64>,
    /// Three qubits after the copy-pair stage, the residual phase and the z-corrections.
    pub output: Vec<C64>,
}

impl IdealRun {
    pub fn output_density(&self) -> CMatrix {
        CMatrix::outer(&self.output)
    }
}

fn check_norm(psi: &[C64]) -> Result<()> {
    let n = vec_norm(psi);
    if (n - 1.0).abs() > 1e-10 {
        return Err(Error::NotNormalized(n * n));
    }
    Ok(())
}

fn phase_layer(angles: [f64; 3]) -> Vec<C64> {
    (0..8)
        .map(|i: usize| {
            let theta: f64 = (0..3)
                .filter(|j| i >> (2 - j) & 1 == 1)
                .map(|j| angles[j])
                .sum();
            C64::from_polar(1.0, theta)
        })
        .collect()
}

/// Gate-level cloning sequence: `|ψ_in⟩ ⊗ |ψ⁺⟩`, `H_e` for τ, `H_e′` on the copies for τ′,
/// then `e^{iφ|1₁⟩⟨1₁|}` and the per-qubit z-rotations.
pub fn run_ideal_uqcm(input: &InputState, params: &ProtocolParams) -> Result<IdealRun> {
    params.validate()?;
    let psi_in = prepare_input(input)?;
    let bell = bell_prep(params.theta_d, Some(params.theta));
    check_norm(&bell)?;

    let lambdas = params.pair_lambda.unwrap_or([params.lambda; 3]);
    let u3 = expm_scaled(&pairwise_exchange_hamiltonian(lambdas), params.tau)?;
    let after_c123 = u3.apply(&kron_vec(&psi_in, &bell));
    check_norm(&after_c123)?;

    let u2 = expm_scaled(
        &effective_two_qubit_hamiltonian(lambdas[2]),
        params.tau_prime,
    )?;
    let mut out = kron(&CMatrix::identity(2), &u2).apply(&after_c123);
    let mut angles = params.z_angles;
    angles[0] += params.phi;
    for (z, p) in out.iter_mut().zip(phase_layer(angles)) {
        *z *= p;
    }
    check_norm(&out)?;
    Ok(IdealRun {
        bell,
        after_c123,
        output: out,
    })
}

/// `(2/3)ρ + (1/3)I/2`.
pub fn clone_channel_ideal(rho: &CMatrix) -> Result<CMatrix> {
    if rho.rows() != 2 {
        return Err(Error::NotDensityMatrix(
            "expected a single-qubit state".into(),
        ));
    }
    validate_density(rho)?;
    Ok(&rho.scale_real(2.0 / 3.0) + &CMatrix::identity(2).scale_real(1.0 / 6.0))
}
