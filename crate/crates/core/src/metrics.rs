//! Fidelities, entanglement measures and closed-form cloning targets.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numkit::{
    c, eigh, eigvals_general_4x4, kron, pauli, singular_values, sqrt_psd, CMatrix, C64,
    HERMITIAN_TOL,
};
use crate::protocol::InputState;

/// Tolerance on the trace and smallest eigenvalue of a density matrix.
pub const DENSITY_TOL: f64 = 1e-8;

/// Checks hermiticity, unit trace and positivity.
pub fn validate_density(rho: &CMatrix) -> Result<()> {
    if !rho.is_square() {
        return Err(Error::NotDensityMatrix("not square".into()));
    }
    let herm = rho.hermiticity_error();
    if herm > HERMITIAN_TOL {
        return Err(Error::NotDensityMatrix(format!("not hermitian ({herm:e})")));
    }
    let tr = rho.trace();
    if (tr.re - 1.0).abs() > DENSITY_TOL || tr.im.abs() > DENSITY_TOL {
        return Err(Error::NotDensityMatrix(format!("trace {tr}")));
    }
    let min = *eigh(rho)?.values.last().expect("non-empty");
    if min < -DENSITY_TOL {
        return Err(Error::NotDensityMatrix(format!(
            "negative eigenvalue {min:e}"
        )));
    }
    Ok(())
}

/// `⟨ψ|ρ|ψ⟩` for a pure single-qubit target.
pub fn state_fidelity(psi: &InputState, rho: &CMatrix) -> Result<f64> {
    if rho.rows() != 2 {
        return Err(Error::NotDensityMatrix(format!(
            "expected 2x2, got {}x{}",
            rho.rows(),
            rho.cols()
        )));
    }
    validate_density(rho)?;
    Ok(fidelity_to_pure(&psi.vector(), rho))
}

/// `⟨ψ|ρ|ψ⟩` without validation, any dimension.
pub fn fidelity_to_pure(psi: &[C64], rho: &CMatrix) -> f64 {
    let rv = rho.apply(psi);
    psi.iter()
        .zip(&rv)
        .map(|(a, b)| a.conj() * b)
        .sum::<C64>()
        .re
}

fn sigma_yy() -> CMatrix {
    kron(&pauli::y(), &pauli::y())
}

/// `ρ̃ = ρ (σ_y⊗σ_y) ρ* (σ_y⊗σ_y)`.
pub fn rho_tilde(rho: &CMatrix) -> Result<CMatrix> {
    if rho.rows() != 4 || rho.cols() != 4 {
        return Err(Error::ShapeMismatch(format!(
            "expected 4x4, got {}x{}",
            rho.rows(),
            rho.cols()
        )));
    }
    let yy = sigma_yy();
    Ok(rho.matmul(&yy).matmul(&rho.conj()).matmul(&yy))
}

/// Eigenvalues of `ρ̃`, descending, computed by the general solver.
pub fn rho_tilde_eigenvalues(rho: &CMatrix) -> Result<Vec<f64>> {
    Ok(eigvals_general_4x4(&rho_tilde(rho)?)?
        .iter()
        .map(|z| z.re)
        .collect())
}

/// Square roots of the `ρ̃` eigenvalues, descending.
///
/// Evaluated as singular values of `√ρ · √ρ_flip`, which avoids the square-root
/// amplification of rounding errors near zero eigenvalues.
pub fn concurrence_spectrum(rho: &CMatrix) -> Result<Vec<f64>> {
    let yy = sigma_yy();
    let s = sqrt_psd(&rho.hermitian_part())?;
    let s_flip = yy.matmul(&s.conj()).matmul(&yy);
    Ok(singular_values(&s.matmul(&s_flip)))
}

/// Wootters concurrence of a two-qubit density matrix.
pub fn concurrence(rho: &CMatrix) -> Result<f64> {
    if rho.rows() != 4 {
        return Err(Error::NotDensityMatrix(format!(
            "expected 4x4, got {}x{}",
            rho.rows(),
            rho.cols()
        )));
    }
    validate_density(rho)?;
    let s = concurrence_spectrum(rho)?;
    Ok((s[0] - s[1] - s[2] - s[3]).clamp(0.0, 1.0))
}

fn amplitudes(alpha: C64, beta: C64) -> Result<(f64, f64, C64, C64)> {
    let n = alpha.norm_sqr() + beta.norm_sqr();
    if (n - 1.0).abs() > 1e-12 {
        return Err(Error::NotNormalized(n));
    }
    let ab = alpha * beta.conj();
    Ok((alpha.norm_sqr(), beta.norm_sqr(), ab, ab.conj()))
}

/// Original–copy joint state in the basis `|0₁0_k⟩, |0₁1_k⟩, |1₁0_k⟩, |1₁1_k⟩`.
pub fn analytic_joint_original_copy(alpha: C64, beta: C64) -> Result<CMatrix> {
    let (a2, b2, ab, ba) = amplitudes(alpha, beta)?;
    let r = |x: f64| c(x, 0.0);
    Ok(CMatrix::from_rows(&[
        vec![r(a2 / 6.0), ab / 3.0, ab / 6.0, r(0.0)],
        vec![
            ba / 3.0,
            r(a2 / 6.0 + 2.0 * b2 / 3.0),
            r(1.0 / 3.0),
            ab / 6.0,
        ],
        vec![
            ba / 6.0,
            r(1.0 / 3.0),
            r(2.0 * a2 / 3.0 + b2 / 6.0),
            ab / 3.0,
        ],
        vec![r(0.0), ba / 6.0, ba / 3.0, r(b2 / 6.0)],
    ]))
}

/// Copy–copy joint state in the basis `|0₂0₃⟩, |0₂1₃⟩, |1₂0₃⟩, |1₂1₃⟩`.
pub fn analytic_joint_copies(alpha: C64, beta: C64) -> Result<CMatrix> {
    let (a2, b2, ab, ba) = amplitudes(alpha, beta)?;
    let r = |x: f64| c(x, 0.0);
    let s = r(1.0 / 6.0);
    Ok(CMatrix::from_rows(&[
        vec![r(2.0 * a2 / 3.0), ab / 3.0, ab / 3.0, r(0.0)],
        vec![ba / 3.0, s, s, ab / 3.0],
        vec![ba / 3.0, s, s, ab / 3.0],
        vec![r(0.0), ba / 3.0, ba / 3.0, r(2.0 * b2 / 3.0)],
    ]))
}

/// Trace distance `½‖ρ − σ‖₁`.
pub fn trace_distance(rho: &CMatrix, sigma: &CMatrix) -> Result<f64> {
    let d = (rho - sigma).hermitian_part();
    Ok(0.5 * eigh(&d)?.values.iter().map(|v| v.abs()).sum::<f64>())
}

/// Total-variation distance between the computational-basis populations of two states.
pub fn population_tv_distance(rho: &CMatrix, sigma: &CMatrix) -> f64 {
    0.5 * rho
        .diagonal()
        .iter()
        .zip(sigma.diagonal())
        .map(|(a, b)| (a.re - b.re).abs())
        .sum::<f64>()
}

/// Which simulation produced a report.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Layer {
    Ideal,
    Pulse,
    Noisy,
}

impl std::fmt::Display for Layer {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Layer::Ideal => "ideal",
            Layer::Pulse => "pulse",
            Layer::Noisy => "noisy",
        })
    }
}

/// Clone fidelities and pairwise concurrences for one input.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CloneReport {
    pub input: String,
    pub layer: Layer,
    /// Fidelities of the copies on qubits 2 and 3.
    pub fidelity: [f64; 2],
    /// Concurrences of pairs (1,2), (1,3), (2,3).
    pub concurrence: [f64; 3],
}

impl CloneReport {
    /// Builds a report from the three-qubit density matrix of the output.
    pub fn from_state(
        input: &InputState,
        label: &str,
        layer: Layer,
        rho3: &CMatrix,
    ) -> Result<Self> {
        let shape = crate::numkit::SubsystemShape::qubits(3);
        let pt = |keep: &[usize]| crate::numkit::partial_trace(rho3, &shape, keep);
        let psi = input.vector();
        let fidelity = [
            fidelity_to_pure(&psi, &pt(&[1])?),
            fidelity_to_pure(&psi, &pt(&[2])?),
        ];
        let concurrence = [
            concurrence(&pt(&[0, 1])?)?,
            concurrence(&pt(&[0, 2])?)?,
            concurrence(&pt(&[1, 2])?)?,
        ];
        Ok(Self {
            input: label.to_string(),
            layer,
            fidelity,
            concurrence,
        })
    }
}
