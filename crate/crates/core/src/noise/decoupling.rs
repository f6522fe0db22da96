//! Gap protection of the copy pair against frequency noise.
//!
//! The copy pair under exchange `−λ(σ⁺σ⁻ + h.c.)` has eigenstates |00⟩, ψ⁺ (energy −λ),
//! ψ⁻ (energy +λ) and |11⟩. Frequency noise `K₂n₂ + K₃n₃` couples ψ⁺ to ψ⁻ with strength
//! `(K₂ − K₃)/2`, which the 2λ gap suppresses when the noise is slow.

use std::f64::consts::FRAC_1_SQRT_2;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::ou::{trajectory_rng, UnitOu};
use crate::error::{Error, Result};
use crate::numkit::{c, eigh, CMatrix, C64, ZERO};

/// Eigenbasis of the copy-pair exchange Hamiltonian in the order |00⟩, ψ⁺, ψ⁻, |11⟩.
#[derive(Clone, Debug)]
pub struct DephasingBasis {
    /// Columns are the basis vectors in the computational basis |q₂q₃⟩.
    pub vectors: CMatrix,
}

impl Default for DephasingBasis {
    fn default() -> Self {
        let s = FRAC_1_SQRT_2;
        let vectors = CMatrix::from_real_rows(&[
            &[1.0, 0.0, 0.0, 0.0],
            &[0.0, s, -s, 0.0],
            &[0.0, s, s, 0.0],
            &[0.0, 0.0, 0.0, 1.0],
        ]);
        Self { vectors }
    }
}

impl DephasingBasis {
    pub fn state(&self, k: usize) -> Vec<C64> {
        self.vectors.column(k)
    }

    /// Expresses a computational-basis operator in this basis.
    pub fn transform(&self, op: &CMatrix) -> CMatrix {
        self.vectors.dagger().matmul(op).matmul(&self.vectors)
    }
}

/// `K₂|1₂⟩⟨1₂| + K₃|1₃⟩⟨1₃|` in the basis |00⟩, ψ⁺, ψ⁻, |11⟩.
pub fn h1_in_dressed_basis(k2: f64, k3: f64) -> CMatrix {
    let h1 = CMatrix::diag_real(&[0.0, k3, k2, k2 + k3]);
    DephasingBasis::default().transform(&h1).hermitian_part()
}

/// Exchange Hamiltonian in the same basis: `diag(0, −λ, λ, 0)`.
pub fn h0_in_dressed_basis(lambda: f64) -> CMatrix {
    let h0 = crate::model::effective_two_qubit_hamiltonian(lambda);
    DephasingBasis::default().transform(&h0).hermitian_part()
}

fn interpolate(times: &[f64], v: &[f64], t: f64) -> f64 {
    let k = times.partition_point(|&x| x <= t).clamp(1, times.len() - 1);
    let (t0, t1) = (times[k - 1], times[k]);
    let w = if t1 > t0 { (t - t0) / (t1 - t0) } else { 0.0 };
    v[k - 1] + w * (v[k] - v[k - 1])
}

/// Trapezoidal integral of samples `v(times)` over `[a, b]`, interpolating linearly at the ends.
pub fn trapezoid(times: &[f64], v: &[f64], a: f64, b: f64) -> f64 {
    let mut pts = vec![(a, interpolate(times, v, a))];
    pts.extend(
        times
            .iter()
            .zip(v)
            .filter(|(&t, _)| t > a && t < b)
            .map(|(&t, &x)| (t, x)),
    );
    pts.push((b, interpolate(times, v, b)));
    pts.windows(2)
        .map(|w| 0.5 * (w[1].0 - w[0].0) * (w[0].1 + w[1].1))
        .sum()
}

/// Accumulated phases `φ = −½∫(K₂+K₃)[1 − (K₂+K₃)/λ]dt` and `φ′ = −∫(K₂+K₃)dt` over `[t1, t2]`.
pub fn accumulated_dephasing_phases(
    times: &[f64],
    k2: &[f64],
    k3: &[f64],
    lambda: f64,
    t1: f64,
    t2: f64,
) -> Result<(f64, f64)> {
    if times.len() < 2 || k2.len() != times.len() || k3.len() != times.len() {
        return Err(Error::ShapeMismatch(
            "noise series must match the time grid".into(),
        ));
    }
    if t1 < times[0] || t2 > times[times.len() - 1] || t2 < t1 {
        return Err(Error::InvalidParameter(format!(
            "[{t1}, {t2}] is not covered by the series"
        )));
    }
    if !(lambda > 0.0) {
        return Err(Error::InvalidParameter("λ must be positive".into()));
    }
    let sum: Vec<f64> = k2.iter().zip(k3).map(|(a, b)| a + b).collect();
    let phi_integrand: Vec<f64> = sum.iter().map(|s| s * (1.0 - s / lambda)).collect();
    let phi = -0.5 * trapezoid(times, &phi_integrand, t1, t2);
    let phi_prime = -trapezoid(times, &sum, t1, t2);
    Ok((phi, phi_prime))
}

/// Largest ψ⁻ population reached over `[0, t]` starting from ψ⁺ under static noise.
pub fn gap_protection_leakage(k2: f64, k3: f64, lambda: f64, t: f64) -> Result<f64> {
    let h = &h0_in_dressed_basis(lambda) + &h1_in_dressed_basis(k2, k3);
    let eig = eigh(&h)?;
    let spread = eig.values[0] - eig.values[3];
    let n = ((t * spread).abs() * 64.0).ceil().clamp(2048.0, 1e6) as usize;
    let v = &eig.vectors;
    let (plus, minus) = (1, 2);
    let mut best: f64 = 0.0;
    for i in 0..=n {
        let s = t * i as f64 / n as f64;
        let amp: C64 = (0..4)
            .map(|k| v[(minus, k)] * C64::from_polar(1.0, -eig.values[k] * s) * v[(plus, k)].conj())
            .sum();
        best = best.max(amp.norm_sqr());
    }
    Ok(best)
}

/// Mean with its standard error.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub mean: f64,
    pub stderr: f64,
}

impl Estimate {
    pub fn from_samples(x: &[f64]) -> Self {
        let n = x.len() as f64;
        let mean = x.iter().sum::<f64>() / n;
        let var = if x.len() > 1 {
            x.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)
        } else {
            0.0
        };
        Self {
            mean,
            stderr: (var / n).sqrt(),
        }
    }

    /// Magnitude of a complex mean; the error combines both quadratures.
    fn from_complex(z: &[C64]) -> Self {
        let re = Self::from_samples(&z.iter().map(|v| v.re).collect::<Vec<_>>());
        let im = Self::from_samples(&z.iter().map(|v| v.im).collect::<Vec<_>>());
        Self {
            mean: c(re.mean, im.mean).norm(),
            stderr: re.stderr.hypot(im.stderr),
        }
    }
}

/// Ensemble of independent OU noise on Q₂ and Q₃ acting during one coupling window.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DecouplingConfig {
    /// Exchange coupling with the coupler on, rad/ns.
    pub lambda: f64,
    /// OU amplitude, rad/ns.
    pub sigma: f64,
    /// OU correlation time, ns.
    pub tc: f64,
    /// Window length, ns.
    pub window: f64,
    /// Integration step, ns.
    pub dt: f64,
    pub trajectories: usize,
    pub seed: u64,
}

impl DecouplingConfig {
    /// Copy-pair window `π/3λ` with a step resolving both the noise and the gap.
    pub fn new(lambda: f64, sigma: f64, tc: f64, trajectories: usize, seed: u64) -> Self {
        let window = std::f64::consts::PI / (3.0 * lambda);
        let dt = (tc / 10.0).min(0.02 / lambda);
        Self {
            lambda,
            sigma,
            tc,
            window,
            dt,
            trajectories,
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.lambda >= 0.0 && self.sigma >= 0.0 && self.tc > 0.0 && self.window > 0.0) {
            return Err(Error::InvalidParameter(
                "decoupling parameters must be positive".into(),
            ));
        }
        if !(self.dt > 0.0) || self.dt >= self.tc / 5.0 {
            return Err(Error::InvalidParameter(format!(
                "dt = {} must be below T_c/5",
                self.dt
            )));
        }
        if self.trajectories == 0 {
            return Err(Error::InvalidParameter("at least one trajectory".into()));
        }
        Ok(())
    }
}

/// Retention of ψ⁺ with and without the exchange coupling under the same noise.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DecouplingResult {
    /// ψ⁺ population at the end of the window.
    pub retention_coupled: Estimate,
    pub retention_uncoupled: Estimate,
    /// `|⟨ρ_{ψ⁺,00}⟩|` normalized to its noise-free value for the input (|00⟩ + ψ⁺)/√2.
    pub coherence_coupled: Estimate,
    pub coherence_uncoupled: Estimate,
    /// Paired per-trajectory difference of the populations, coupled minus uncoupled.
    pub paired_difference: Estimate,
}

/// `⟨ψ⁺|U|ψ⁺⟩` over the window for piecewise-constant K₂, K₃ sampled at the step midpoints.
fn survival_amplitude(k2: &[f64], k3: &[f64], lambda: f64, h: f64) -> C64 {
    // single-excitation amplitudes on |01⟩, |10⟩
    let mut a = [c(FRAC_1_SQRT_2, 0.0), c(FRAC_1_SQRT_2, 0.0)];
    for (&x2, &x3) in k2.iter().zip(k3) {
        let mean = 0.5 * (x2 + x3);
        let d = 0.5 * (x3 - x2);
        let w = d.hypot(lambda);
        let (s, co) = (w * h).sin_cos();
        let sinc = if w > 0.0 { s / w } else { h };
        // exp(−i h (d σz − λ σx)) times the common phase
        let g = C64::from_polar(1.0, -mean * h);
        let m00 = c(co, -d * sinc);
        let m11 = c(co, d * sinc);
        let off = c(0.0, lambda * sinc);
        a = [g * (m00 * a[0] + off * a[1]), g * (off * a[0] + m11 * a[1])];
    }
    c(FRAC_1_SQRT_2, 0.0) * (a[0] + a[1])
}

/// Monte Carlo over `trajectories` noise realizations, each shared by the coupled and uncoupled runs.
pub fn decoupling_ensemble(cfg: &DecouplingConfig) -> Result<DecouplingResult> {
    cfg.validate()?;
    let steps = (cfg.window / cfg.dt).ceil() as usize;
    let h = cfg.window / steps as f64;
    let per: Vec<(C64, C64)> = (0..cfg.trajectories)
        .into_par_iter()
        .map(|i| {
            let mut rng = trajectory_rng(cfg.seed, i as u64);
            let mut x2 = UnitOu::new(&mut rng);
            let mut x3 = UnitOu::new(&mut rng);
            let mut k2 = Vec::with_capacity(steps);
            let mut k3 = Vec::with_capacity(steps);
            // sample at step midpoints
            x2.advance(&mut rng, h / 2.0, cfg.tc);
            x3.advance(&mut rng, h / 2.0, cfg.tc);
            for s in 0..steps {
                if s > 0 {
                    x2.advance(&mut rng, h, cfg.tc);
                    x3.advance(&mut rng, h, cfg.tc);
                }
                k2.push(cfg.sigma * x2.x);
                k3.push(cfg.sigma * x3.x);
            }
            (
                survival_amplitude(&k2, &k3, cfg.lambda, h),
                survival_amplitude(&k2, &k3, 0.0, h),
            )
        })
        .collect();
    let ideal_phase = C64::from_polar(1.0, -cfg.lambda * cfg.window);
    let pop = |f: fn(&(C64, C64)) -> C64| per.iter().map(|p| f(p).norm_sqr()).collect::<Vec<_>>();
    let coupled = pop(|p| p.0);
    let uncoupled = pop(|p| p.1);
    let diff: Vec<f64> = coupled.iter().zip(&uncoupled).map(|(a, b)| a - b).collect();
    let coh_c: Vec<C64> = per.iter().map(|p| p.0 / ideal_phase.conj()).collect();
    let coh_u: Vec<C64> = per.iter().map(|p| p.1).collect();
    Ok(DecouplingResult {
        retention_coupled: Estimate::from_samples(&coupled),
        retention_uncoupled: Estimate::from_samples(&uncoupled),
        coherence_coupled: Estimate::from_complex(&coh_c),
        coherence_uncoupled: Estimate::from_complex(&coh_u),
        paired_difference: Estimate::from_samples(&diff),
    })
}

/// Evolves `psi` (in [`DephasingBasis`] order) under static noise for `t` ns.
pub fn evolve_static(psi: &[C64], k2: f64, k3: f64, lambda: f64, t: f64) -> Result<Vec<C64>> {
    if psi.len() != 4 {
        return Err(Error::ShapeMismatch(
            "copy-pair state must have four amplitudes".into(),
        ));
    }
    let h = &h0_in_dressed_basis(lambda) + &h1_in_dressed_basis(k2, k3);
    Ok(eigh(&h)?.propagator(t).apply(psi))
}

/// Basis vector `k` of [`DephasingBasis`] expressed in itself.
pub fn dressed_unit(k: usize) -> Vec<C64> {
    let mut v = vec![ZERO; 4];
    v[k] = c(1.0, 0.0);
    v
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn basis_is_orthonormal() {
        let b = DephasingBasis::default().vectors;
        assert!(b.dagger().matmul(&b).max_abs_diff(&CMatrix::identity(4)) < 1e-12);
    }

    #[test]
    fn h1_examples() {
        let k = 0.3;
        let h = h1_in_dressed_basis(k, k);
        assert!((h[(1, 1)].re - k).abs() < 1e-15 && (h[(2, 2)].re - k).abs() < 1e-15);
        assert!(h[(1, 2)].norm() < 1e-15);
        let h = h1_in_dressed_basis(k, -k);
        assert!((h[(1, 2)].re - k).abs() < 1e-15);
        assert!(h[(1, 1)].norm() < 1e-15 && h[(2, 2)].norm() < 1e-15);
        assert!((h1_in_dressed_basis(0.2, 0.5)[(3, 3)].re - 0.7).abs() < 1e-15);
    }

    #[test]
    fn h0_is_split_by_two_lambda() {
        let h = h0_in_dressed_basis(0.4);
        assert!(h.max_abs_diff(&CMatrix::diag_real(&[0.0, -0.4, 0.4, 0.0])) < 1e-15);
    }

    #[test]
    fn phase_integrals() {
        let times: Vec<f64> = (0..=100).map(|i| i as f64 * 0.5).collect();
        let zero = vec![0.0; times.len()];
        assert_eq!(
            accumulated_dephasing_phases(&times, &zero, &zero, 1.0, 0.0, 50.0).unwrap(),
            (0.0, 0.0)
        );
        let (k, lam) = (0.01, 0.2);
        let kk = vec![k; times.len()];
        let (phi, phi_p) = accumulated_dephasing_phases(&times, &kk, &kk, lam, 3.2, 43.7).unwrap();
        let t = 43.7 - 3.2;
        assert!((phi_p + 2.0 * k * t).abs() < 1e-12);
        assert!((phi + k * t * (1.0 - 2.0 * k / lam)).abs() < 1e-12);
        let small = vec![1e-7; times.len()];
        let (phi, phi_p) =
            accumulated_dephasing_phases(&times, &small, &small, 1.0, 0.0, 50.0).unwrap();
        assert!((phi_p / phi - 2.0).abs() < 1e-5);
        assert!(accumulated_dephasing_phases(&times, &kk, &kk, lam, 0.0, 60.0).is_err());
    }

    #[test]
    fn leakage_limits() {
        let lam = 0.017;
        assert!(gap_protection_leakage(0.003, 0.003, lam, 500.0).unwrap() < 1e-12);
        let om = 0.2;
        assert!(gap_protection_leakage(om, -om, 0.0, 20.0).unwrap() > 1.0 - 1e-6);
    }

    #[test]
    fn survival_matches_static_propagator() {
        let (k2, k3, lam, t) = (0.004, -0.002, 0.017, 61.0);
        let steps = 200;
        let amp = survival_amplitude(&vec![k2; steps], &vec![k3; steps], lam, t / steps as f64);
        let psi = evolve_static(&dressed_unit(1), k2, k3, lam, t).unwrap();
        assert!((amp - psi[1]).norm() < 1e-12);
    }

    #[test]
    fn noiseless_ensemble_retains_everything() {
        let cfg = DecouplingConfig::new(0.017, 0.0, 100.0, 20, 1);
        let r = decoupling_ensemble(&cfg).unwrap();
        for e in [
            r.retention_coupled,
            r.retention_uncoupled,
            r.coherence_coupled,
            r.coherence_uncoupled,
        ] {
            assert!((e.mean - 1.0).abs() < 1e-12);
        }
    }
}
