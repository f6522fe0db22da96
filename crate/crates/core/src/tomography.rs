//! Simulated readout with finite shots and confusion errors, state tomography by linear
//! inversion, and single-qubit process tomography.
//!
//! Pre-rotations: `X/2 = exp(−iπσx/4)` and `Y/2 = exp(−iπσy/4)`, followed by a z-basis
//! measurement. Under this convention X/2 measures `+σy` and Y/2 measures `−σx`.

use std::fmt;

use rand::Rng;
use rand_distr::{Binomial, Distribution};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metrics::validate_density;
use crate::noise::trajectory_rng;
use crate::numkit::{c, kron_all, lstsq, nearest_density_matrix, pauli, CMatrix, C64, ZERO};
use crate::protocol::Probe;

/// Single-qubit pre-rotation before a z measurement.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Pre {
    I,
    X2,
    Y2,
}

impl Pre {
    pub const ALL: [Pre; 3] = [Pre::I, Pre::X2, Pre::Y2];

    pub fn unitary(self) -> CMatrix {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        match self {
            Pre::I => CMatrix::identity(2),
            Pre::X2 => {
                CMatrix::from_rows(&[vec![c(s, 0.0), c(0.0, -s)], vec![c(0.0, -s), c(s, 0.0)]])
            }
            Pre::Y2 => CMatrix::from_real_rows(&[&[s, -s], &[s, s]]),
        }
    }

    /// Pauli measured by this setting and its sign: index into {I, X, Y, Z}.
    fn measures(self) -> (usize, f64) {
        match self {
            Pre::I => (3, 1.0),
            Pre::X2 => (2, 1.0),
            Pre::Y2 => (1, -1.0),
        }
    }

    fn label(self) -> &'static str {
        match self {
            Pre::I => "I",
            Pre::X2 => "X/2",
            Pre::Y2 => "Y/2",
        }
    }
}

/// Per-qubit pre-rotations, qubit 1 first.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct TomographySetting(pub Vec<Pre>);

impl TomographySetting {
    /// All `3ⁿ` settings, last qubit varying fastest.
    pub fn all(n: usize) -> Vec<Self> {
        let mut out = vec![vec![]];
        for _ in 0..n {
            out = out
                .into_iter()
                .flat_map(|v: Vec<Pre>| {
                    Pre::ALL.iter().map(move |&p| {
                        let mut w = v.clone();
                        w.push(p);
                        w
                    })
                })
                .collect();
        }
        out.into_iter().map(TomographySetting).collect()
    }

    pub fn qubits(&self) -> usize {
        self.0.len()
    }

    pub fn unitary(&self) -> CMatrix {
        kron_all(&self.0.iter().map(|p| p.unitary()).collect::<Vec<_>>())
    }
}

impl fmt::Display for TomographySetting {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<&str> = self.0.iter().map(|p| p.label()).collect();
        write!(f, "{}", parts.join(" "))
    }
}

/// Readout fidelities `F₀`, `F₁` of one qubit.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Readout {
    pub f0: f64,
    pub f1: f64,
}

impl Readout {
    pub const PERFECT: Readout = Readout { f0: 1.0, f1: 1.0 };

    /// Columns are the true state, rows the reported outcome.
    pub fn confusion(self) -> [[f64; 2]; 2] {
        [[self.f0, 1.0 - self.f1], [1.0 - self.f0, self.f1]]
    }

    fn inverse(self, qubit: usize) -> Result<[[f64; 2]; 2]> {
        let det = self.f0 + self.f1 - 1.0;
        if !(det.abs() > 1e-12) {
            return Err(Error::SingularConfusion(qubit));
        }
        Ok([
            [self.f1 / det, -(1.0 - self.f1) / det],
            [-(1.0 - self.f0) / det, self.f0 / det],
        ])
    }
}

/// Counts of one tomography setting.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MeasurementRecord {
    pub setting: TomographySetting,
    pub shots: u64,
    /// Indexed by bitstring, qubit 1 most significant.
    pub counts: Vec<u64>,
    pub seed: u64,
}

impl MeasurementRecord {
    pub fn frequencies(&self) -> Vec<f64> {
        self.counts
            .iter()
            .map(|&k| k as f64 / self.shots as f64)
            .collect()
    }

    /// `(setting, bitstring, count)` rows.
    pub fn rows(&self) -> Vec<(String, String, u64)> {
        let n = self.setting.qubits();
        self.counts
            .iter()
            .enumerate()
            .map(|(b, &k)| {
                (
                    self.setting.to_string(),
                    format!("{:0width$b}", b, width = n),
                    k,
                )
            })
            .collect()
    }
}

/// Applies per-qubit matrices `m[q]` to a probability vector over `n` qubits.
fn apply_local(p: &[f64], m: &[[[f64; 2]; 2]]) -> Vec<f64> {
    let n = m.len();
    let mut out = p.to_vec();
    for (q, mq) in m.iter().enumerate() {
        let stride = 1 << (n - 1 - q);
        let mut next = vec![0.0; out.len()];
        for (idx, v) in next.iter_mut().enumerate() {
            let b = (idx / stride) & 1;
            let base = idx - b * stride;
            *v = mq[b][0] * out[base] + mq[b][1] * out[base + stride];
        }
        out = next;
    }
    out
}

/// Bitstring probabilities after the pre-rotation, before readout errors.
pub fn ideal_probabilities(rho: &CMatrix, setting: &TomographySetting) -> Result<Vec<f64>> {
    validate_density(rho)?;
    if rho.rows() != 1 << setting.qubits() {
        return Err(Error::ShapeMismatch(
            "setting does not match the state".into(),
        ));
    }
    let r = rho.conjugate_by(&setting.unitary());
    Ok(r.diagonal().iter().map(|z| z.re.max(0.0)).collect())
}

/// Probabilities as reported by imperfect detectors.
pub fn confused_probabilities(p: &[f64], readout: &[Readout]) -> Vec<f64> {
    apply_local(
        p,
        &readout.iter().map(|r| r.confusion()).collect::<Vec<_>>(),
    )
}

fn multinomial<R: Rng>(rng: &mut R, shots: u64, p: &[f64]) -> Vec<u64> {
    let mut left = shots;
    let mut mass = 1.0;
    let mut out = vec![0; p.len()];
    for (k, &pk) in p.iter().enumerate() {
        if left == 0 {
            break;
        }
        if k == p.len() - 1 {
            out[k] = left;
            break;
        }
        let q = if mass > 0.0 {
            (pk / mass).clamp(0.0, 1.0)
        } else {
            0.0
        };
        let draw = Binomial::new(left, q).map(|b| b.sample(rng)).unwrap_or(0);
        out[k] = draw;
        left -= draw;
        mass -= pk;
    }
    out
}

fn sample_setting(
    rho: &CMatrix,
    setting: &TomographySetting,
    shots: u64,
    readout: &[Readout],
    seed: u64,
    stream: u64,
) -> Result<MeasurementRecord> {
    if shots == 0 {
        return Err(Error::InvalidParameter("at least one shot".into()));
    }
    if readout.len() != setting.qubits() {
        return Err(Error::ShapeMismatch("one readout entry per qubit".into()));
    }
    let p = confused_probabilities(&ideal_probabilities(rho, setting)?, readout);
    let total: f64 = p.iter().sum();
    let p: Vec<f64> = p.iter().map(|x| x / total).collect();
    let counts = multinomial(&mut trajectory_rng(seed, stream), shots, &p);
    Ok(MeasurementRecord {
        setting: setting.clone(),
        shots,
        counts,
        seed,
    })
}

/// Samples `shots` outcomes for one setting through the readout confusion matrices.
pub fn simulate_counts(
    rho: &CMatrix,
    setting: &TomographySetting,
    shots: u64,
    readout: &[Readout],
    seed: u64,
) -> Result<MeasurementRecord> {
    sample_setting(rho, setting, shots, readout, seed, 0)
}

/// Records for every setting; setting `k` draws from stream `k` of `seed`.
pub fn simulate_all(
    rho: &CMatrix,
    n: usize,
    shots: u64,
    readout: &[Readout],
    seed: u64,
) -> Result<Vec<MeasurementRecord>> {
    TomographySetting::all(n)
        .par_iter()
        .enumerate()
        .map(|(k, s)| sample_setting(rho, s, shots, readout, seed, k as u64))
        .collect()
}

/// Readout-corrected probabilities.
#[derive(Clone, Debug, PartialEq)]
pub struct Corrected {
    pub probabilities: Vec<f64>,
    /// Total negative weight removed before renormalizing.
    pub clipped_mass: f64,
}

/// Inverts the per-qubit confusion matrices, clips negatives and renormalizes.
pub fn readout_correct(p: &[f64], readout: &[Readout]) -> Result<Corrected> {
    if p.len() != 1 << readout.len() {
        return Err(Error::ShapeMismatch(
            "probabilities do not match the qubit count".into(),
        ));
    }
    let inv = readout
        .iter()
        .enumerate()
        .map(|(q, r)| r.inverse(q))
        .collect::<Result<Vec<_>>>()?;
    let raw = apply_local(p, &inv);
    let clipped_mass: f64 = raw.iter().filter(|&&x| x < 0.0).map(|x| -x).sum();
    let kept: Vec<f64> = raw.iter().map(|&x| x.max(0.0)).collect();
    let total: f64 = kept.iter().sum();
    let probabilities = if total > 0.0 {
        kept.iter().map(|x| x / total).collect()
    } else {
        kept
    };
    Ok(Corrected {
        probabilities,
        clipped_mass,
    })
}

/// Linear-inversion estimate and its physical projection.
#[derive(Clone, Debug)]
pub struct Reconstruction {
    pub raw: CMatrix,
    pub projected: CMatrix,
}

fn pauli_by_index(k: usize) -> CMatrix {
    match k {
        0 => pauli::id(),
        1 => pauli::x(),
        2 => pauli::y(),
        _ => pauli::z(),
    }
}

/// Reconstructs an `n`-qubit state (n = 1 or 2) from probabilities for all `3ⁿ` settings.
///
/// Each Pauli expectation is averaged over every setting that measures it.
pub fn reconstruct_state(
    data: &[(TomographySetting, Vec<f64>)],
    n: usize,
) -> Result<Reconstruction> {
    if !(1..=2).contains(&n) {
        return Err(Error::InvalidParameter(
            "tomography supports one or two qubits".into(),
        ));
    }
    let needed = TomographySetting::all(n);
    for s in &needed {
        if !data.iter().any(|(d, _)| d == s) {
            return Err(Error::IncompleteSettings(format!("missing setting {s}")));
        }
    }
    if data
        .iter()
        .any(|(s, p)| s.qubits() != n || p.len() != 1 << n)
    {
        return Err(Error::ShapeMismatch(
            "setting or probability vector has the wrong size".into(),
        ));
    }
    let dim = 1 << n;
    let mut rho = CMatrix::zeros(dim, dim);
    for code in 0..4usize.pow(n as u32) {
        let paulis: Vec<usize> = (0..n)
            .map(|q| code / 4usize.pow((n - 1 - q) as u32) % 4)
            .collect();
        let mut sum = 0.0;
        let mut hits = 0;
        for (s, p) in data {
            let mut sign = 1.0;
            let mut ok = true;
            for (q, &a) in paulis.iter().enumerate() {
                if a != 0 {
                    let (m, sg) = s.0[q].measures();
                    ok &= m == a;
                    sign *= sg;
                }
            }
            if !ok {
                continue;
            }
            let e: f64 = p
                .iter()
                .enumerate()
                .map(|(b, &pb)| {
                    let parity = paulis
                        .iter()
                        .enumerate()
                        .filter(|(q, &a)| a != 0 && (b >> (n - 1 - q)) & 1 == 1)
                        .count();
                    if parity % 2 == 0 {
                        pb
                    } else {
                        -pb
                    }
                })
                .sum();
            sum += sign * e;
            hits += 1;
        }
        let expectation = sum / hits as f64;
        let op = kron_all(
            &paulis
                .iter()
                .map(|&a| pauli_by_index(a))
                .collect::<Vec<_>>(),
        );
        rho += &op.scale_real(expectation / dim as f64);
    }
    let raw = rho.hermitian_part();
    let projected = nearest_density_matrix(&raw)?;
    Ok(Reconstruction { raw, projected })
}

/// Exact-expectation reconstruction input for a known state.
pub fn exact_data(rho: &CMatrix, n: usize) -> Result<Vec<(TomographySetting, Vec<f64>)>> {
    TomographySetting::all(n)
        .into_iter()
        .map(|s| Ok((s.clone(), ideal_probabilities(rho, &s)?)))
        .collect()
}

/// Readout-corrects each record, then reconstructs.
pub fn reconstruct_from_records(
    records: &[MeasurementRecord],
    readout: &[Readout],
) -> Result<Reconstruction> {
    let n = readout.len();
    let data = records
        .iter()
        .map(|r| {
            Ok((
                r.setting.clone(),
                readout_correct(&r.frequencies(), readout)?.probabilities,
            ))
        })
        .collect::<Result<Vec<_>>>()?;
    reconstruct_state(&data, n)
}

/// Standard deviation of `stat` over parametric bootstrap resamples of the records.
pub fn bootstrap_std(
    records: &[MeasurementRecord],
    readout: &[Readout],
    resamples: usize,
    seed: u64,
    stat: impl Fn(&Reconstruction) -> f64 + Sync,
) -> Result<f64> {
    if resamples < 2 {
        return Err(Error::InvalidParameter("at least two resamples".into()));
    }
    let values = (0..resamples)
        .into_par_iter()
        .map(|b| {
            let mut rng = trajectory_rng(seed, b as u64);
            let resampled: Vec<MeasurementRecord> = records
                .iter()
                .map(|r| MeasurementRecord {
                    counts: multinomial(&mut rng, r.shots, &r.frequencies()),
                    ..r.clone()
                })
                .collect();
            reconstruct_from_records(&resampled, readout).map(|rec| stat(&rec))
        })
        .collect::<Result<Vec<f64>>>()?;
    let mean = values.iter().sum::<f64>() / values.len() as f64;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (values.len() - 1) as f64;
    Ok(var.sqrt())
}

/// Process matrix in the Pauli basis {I, X, Y, Z}.
#[derive(Clone, Debug)]
pub struct ChiMatrix(pub CMatrix);

impl ChiMatrix {
    /// χ of the identity channel.
    pub fn identity() -> Self {
        ChiMatrix(CMatrix::diag_real(&[1.0, 0.0, 0.0, 0.0]))
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.0
    }
}

/// Least-squares χ from `(input, output)` density-matrix pairs.
pub fn process_tomography(pairs: &[(CMatrix, CMatrix)]) -> Result<ChiMatrix> {
    let ps: Vec<CMatrix> = (0..4).map(pauli_by_index).collect();
    let mut a_rows: Vec<Vec<C64>> = Vec::new();
    let mut b = Vec::new();
    for (rin, rout) in pairs {
        if rin.rows() != 2 || rout.rows() != 2 {
            return Err(Error::ShapeMismatch(
                "process tomography expects single-qubit states".into(),
            ));
        }
        let terms: Vec<CMatrix> = (0..16)
            .map(|mn| ps[mn / 4].matmul(rin).matmul(&ps[mn % 4]))
            .collect();
        for e in 0..4 {
            a_rows.push(terms.iter().map(|t| t.as_slice()[e]).collect());
            b.push(rout.as_slice()[e]);
        }
    }
    if a_rows.is_empty() {
        return Err(Error::RankDeficient);
    }
    let a = CMatrix::from_rows(&a_rows);
    let x = lstsq(&a, &b)?;
    let chi = CMatrix::from_vec(4, 4, x)?.hermitian_part();
    let tr = chi.trace().re;
    if !(tr.abs() > 1e-12) {
        return Err(Error::RankDeficient);
    }
    Ok(ChiMatrix(chi.scale_real(1.0 / tr)))
}

/// `(input, output)` pairs for the six probes of a single-qubit channel.
pub fn probe_pairs(channel: impl Fn(Probe) -> Result<CMatrix>) -> Result<Vec<(CMatrix, CMatrix)>> {
    Probe::ALL
        .iter()
        .map(|&p| Ok((CMatrix::outer(&p.state().vector()), channel(p)?)))
        .collect()
}

/// `Re Tr(χ_a χ_b)`.
pub fn process_fidelity(a: &ChiMatrix, b: &ChiMatrix) -> f64 {
    let mut acc = ZERO;
    for i in 0..4 {
        for j in 0..4 {
            acc += a.0[(i, j)] * b.0[(j, i)];
        }
    }
    acc.re
}
