use serde::Serialize;
use uqcm_core::experiment::{reduce, Runner};
use uqcm_core::metrics::{
    concurrence, fidelity_to_pure, trace_distance, validate_density, CloneReport, Layer,
};
use uqcm_core::noise::{decoupling_ensemble, DecouplingConfig};
use uqcm_core::numkit::{partial_trace, CMatrix, SubsystemShape};
use uqcm_core::protocol::{run_ideal_uqcm, Probe, ProtocolParams};
use uqcm_core::tomography::{
    bootstrap_std, process_fidelity, process_tomography, reconstruct_from_records, simulate_all,
    ChiMatrix,
};

use crate::config::{ConfigError, RunConfig};
use crate::output::Output;

const PARTS: [(&str, &[usize]); 5] = [
    ("q2", &[1]),
    ("q3", &[2]),
    ("q1q2", &[0, 1]),
    ("q1q3", &[0, 2]),
    ("q2q3", &[1, 2]),
];

/// Independent seed for the `k`-th sub-run of a command.
fn derive_seed(seed: u64, k: u64) -> u64 {
    seed ^ (k + 1).wrapping_mul(0x9E37_79B9_7F4A_7C15)
}

#[derive(Serialize)]
struct CloneRow<'a> {
    probe: &'a str,
    alpha_re: f64,
    alpha_im: f64,
    beta_re: f64,
    beta_im: f64,
    fidelity_q2: f64,
    fidelity_q3: f64,
    concurrence_q1q2: f64,
    concurrence_q1q3: f64,
    concurrence_q2q3: f64,
}

pub fn clone(cfg: &RunConfig) -> anyhow::Result<Output> {
    let setup = cfg.setup()?;
    let probes = cfg.probes()?;
    let layer = cfg.run.layer;
    let runner = Runner::new(layer, &setup)?;
    let inputs: Vec<_> = probes.iter().map(|p| p.1).collect();
    let outputs = runner.outputs(&inputs)?;

    let seed = cfg.seed_tag();
    let mut out = Output::new(&cfg.run.out)?;
    if let Some(cal) = runner.calibration() {
        out.json(&format!("calibration_{layer}_{seed}.json"), cal)?;
    }
    say!(
        "{:<10} {:>9} {:>9} {:>9} {:>9} {:>9}",
        "probe",
        "F(Q2)",
        "F(Q3)",
        "C12",
        "C13",
        "C23"
    );
    let mut rows = vec![];
    for ((label, input), rho) in probes.iter().zip(&outputs) {
        validate_density(rho)?;
        for (part, keep) in PARTS {
            let dims = vec![2; keep.len()];
            let name = format!("clone_{label}_{layer}_{seed}_{part}.json");
            out.matrix(&name, &reduce(rho, keep)?, &dims)?;
        }
        let r = CloneReport::from_state(input, label, layer, rho)?;
        say!(
            "{:<10} {:>9.6} {:>9.6} {:>9.6} {:>9.6} {:>9.6}",
            label,
            r.fidelity[0],
            r.fidelity[1],
            r.concurrence[0],
            r.concurrence[1],
            r.concurrence[2]
        );
        rows.push(CloneRow {
            probe: label,
            alpha_re: input.alpha.re,
            alpha_im: input.alpha.im,
            beta_re: input.beta.re,
            beta_im: input.beta.im,
            fidelity_q2: r.fidelity[0],
            fidelity_q3: r.fidelity[1],
            concurrence_q1q2: r.concurrence[0],
            concurrence_q1q3: r.concurrence[1],
            concurrence_q2q3: r.concurrence[2],
        });
    }
    out.csv(&format!("clone_{layer}_{seed}.csv"), &rows)?;
    Ok(out)
}

#[derive(Serialize)]
struct ProcessRow {
    channel: &'static str,
    process_fidelity: f64,
    chi_ii: f64,
    chi_xx: f64,
    chi_yy: f64,
    chi_zz: f64,
}

/// χ of the channels from the input to each output qubit. `identity` switches the interactions off.
pub fn process(cfg: &RunConfig, identity: bool) -> anyhow::Result<Output> {
    let mut setup = cfg.setup()?;
    let layer = cfg.run.layer;
    if identity {
        if layer != Layer::Ideal {
            return Err(ConfigError("--identity needs the ideal layer".into()).into());
        }
        setup.protocol.tau = 0.0;
        setup.protocol.tau_prime = 0.0;
    }
    let runner = Runner::new(layer, &setup)?;
    let inputs: Vec<_> = Probe::ALL.iter().map(|p| p.state()).collect();
    let outputs = runner.outputs(&inputs)?;

    let seed = cfg.seed_tag();
    let tag = if identity { "_identity" } else { "" };
    let mut out = Output::new(&cfg.run.out)?;
    let mut rows = vec![];
    say!(
        "{:<8} {:>10} {:>9} {:>9} {:>9} {:>9}",
        "channel",
        "Tr(χχid)",
        "χ_II",
        "χ_XX",
        "χ_YY",
        "χ_ZZ"
    );
    for (q, channel) in ["q1", "q2", "q3"].into_iter().enumerate() {
        let pairs = inputs
            .iter()
            .zip(&outputs)
            .map(|(s, rho)| Ok((CMatrix::outer(&s.vector()), reduce(rho, &[q])?)))
            .collect::<anyhow::Result<Vec<_>>>()?;
        let chi = process_tomography(&pairs)?;
        let f = process_fidelity(&chi, &ChiMatrix::identity());
        let d: Vec<f64> = chi.matrix().diagonal().iter().map(|z| z.re).collect();
        say!(
            "{:<8} {:>10.6} {:>9.6} {:>9.6} {:>9.6} {:>9.6}",
            channel,
            f,
            d[0],
            d[1],
            d[2],
            d[3]
        );
        out.matrix(
            &format!("process_{channel}_{layer}_{seed}{tag}.json"),
            chi.matrix(),
            &[],
        )?;
        rows.push(ProcessRow {
            channel,
            process_fidelity: f,
            chi_ii: d[0],
            chi_xx: d[1],
            chi_yy: d[2],
            chi_zz: d[3],
        });
    }
    out.csv(&format!("process_{layer}_{seed}{tag}.csv"), &rows)?;
    Ok(out)
}

#[derive(Serialize)]
struct TomoRow<'a> {
    probe: &'a str,
    shots: u64,
    concurrence_exact: f64,
    concurrence: f64,
    concurrence_std: f64,
    trace_distance: f64,
    fidelity_q2: f64,
    fidelity_q3: f64,
}

/// Sampled joint tomography of the copy pair.
pub fn tomo(cfg: &RunConfig) -> anyhow::Result<Output> {
    let base_seed = cfg.seed()?;
    let setup = cfg.setup()?;
    let probes = cfg.probes()?;
    let layer = cfg.run.layer;
    let runner = Runner::new(layer, &setup)?;
    let inputs: Vec<_> = probes.iter().map(|p| p.1).collect();
    let outputs = runner.outputs(&inputs)?;
    let readout = cfg.copy_readout();
    let shots = cfg.tomography.shots;
    if shots == 0 {
        return Err(ConfigError("shots must be positive".into()).into());
    }

    let seed = cfg.seed_tag();
    let mut out = Output::new(&cfg.run.out)?;
    let mut rows = vec![];
    let shape = SubsystemShape::qubits(2);
    say!(
        "{:<10} {:>9} {:>9} {:>9} {:>9}",
        "probe",
        "C23",
        "±",
        "exact",
        "D_tr"
    );
    for (k, ((label, input), rho)) in probes.iter().zip(&outputs).enumerate() {
        let pair = reduce(rho, &[1, 2])?;
        let records = simulate_all(
            &pair,
            2,
            shots,
            &readout,
            derive_seed(base_seed, 2 * k as u64),
        )?;
        let rec = reconstruct_from_records(&records, &readout)?;
        let c = concurrence(&rec.projected)?;
        let std = bootstrap_std(
            &records,
            &readout,
            cfg.tomography.bootstrap,
            derive_seed(base_seed, 2 * k as u64 + 1),
            |r| concurrence(&r.projected).unwrap_or(f64::NAN),
        )?;
        let exact = concurrence(&pair)?;
        let dist = trace_distance(&rec.projected, &pair)?;
        let psi = input.vector();
        let fid = |q: usize| -> anyhow::Result<f64> {
            Ok(fidelity_to_pure(
                &psi,
                &partial_trace(&rec.projected, &shape, &[q])?,
            ))
        };
        say!("{label:<10} {c:>9.6} {std:>9.6} {exact:>9.6} {dist:>9.6}");
        out.json(
            &format!("tomo_{label}_{layer}_{seed}_counts.json"),
            &records,
        )?;
        out.matrix(
            &format!("tomo_{label}_{layer}_{seed}_q2q3.json"),
            &rec.projected,
            &[2, 2],
        )?;
        out.matrix(
            &format!("tomo_{label}_{layer}_{seed}_q2q3_raw.json"),
            &rec.raw,
            &[2, 2],
        )?;
        rows.push(TomoRow {
            probe: label,
            shots,
            concurrence_exact: exact,
            concurrence: c,
            concurrence_std: std,
            trace_distance: dist,
            fidelity_q2: fid(0)?,
            fidelity_q3: fid(1)?,
        });
    }
    out.csv(&format!("tomo_{layer}_{seed}.csv"), &rows)?;
    Ok(out)
}

#[derive(Serialize)]
struct DecouplingRow {
    tc_lambda: f64,
    sigma_lambda: f64,
    retention_coupled: f64,
    retention_coupled_se: f64,
    retention_uncoupled: f64,
    retention_uncoupled_se: f64,
    coherence_coupled: f64,
    coherence_coupled_se: f64,
    coherence_uncoupled: f64,
    coherence_uncoupled_se: f64,
    paired_difference: f64,
    paired_difference_se: f64,
}

/// ψ⁺ retention and coherence with and without the copy-pair exchange over a noise grid.
pub fn decoupling(cfg: &RunConfig) -> anyhow::Result<Output> {
    let d = &cfg.decoupling;
    if d.tc_lambda.is_empty() || d.sigma_lambda.is_empty() {
        return Err(ConfigError("decoupling grids must be nonempty".into()).into());
    }
    let base_seed = cfg.seed()?;
    let lambda = cfg.device.lambda()?;
    let mut out = Output::new(&cfg.run.out)?;
    let mut rows = vec![];
    say!(
        "{:>8} {:>8} {:>10} {:>10} {:>10} {:>10}",
        "Tc·λ",
        "σ/λ",
        "P+ on",
        "P+ off",
        "coh on",
        "coh off"
    );
    let grid = d
        .tc_lambda
        .iter()
        .flat_map(|&t| d.sigma_lambda.iter().map(move |&s| (t, s)));
    for (k, (tc_l, sigma_l)) in grid.enumerate() {
        let dc = DecouplingConfig::new(
            lambda,
            sigma_l * lambda,
            tc_l / lambda,
            d.trajectories,
            derive_seed(base_seed, k as u64),
        );
        let r = decoupling_ensemble(&dc)?;
        say!(
            "{tc_l:>8} {sigma_l:>8} {:>10.6} {:>10.6} {:>10.6} {:>10.6}",
            r.retention_coupled.mean,
            r.retention_uncoupled.mean,
            r.coherence_coupled.mean,
            r.coherence_uncoupled.mean
        );
        rows.push(DecouplingRow {
            tc_lambda: tc_l,
            sigma_lambda: sigma_l,
            retention_coupled: r.retention_coupled.mean,
            retention_coupled_se: r.retention_coupled.stderr,
            retention_uncoupled: r.retention_uncoupled.mean,
            retention_uncoupled_se: r.retention_uncoupled.stderr,
            coherence_coupled: r.coherence_coupled.mean,
            coherence_coupled_se: r.coherence_coupled.stderr,
            coherence_uncoupled: r.coherence_uncoupled.mean,
            coherence_uncoupled_se: r.coherence_uncoupled.stderr,
            paired_difference: r.paired_difference.mean,
            paired_difference_se: r.paired_difference.stderr,
        });
    }
    out.csv(&format!("decoupling_{}.csv", cfg.seed_tag()), &rows)?;
    Ok(out)
}

#[derive(Serialize)]
struct SweepRow {
    tau_ns: f64,
    tau_prime_ns: f64,
    fidelity_q2_mean: f64,
    fidelity_q3_mean: f64,
    fidelity_min: f64,
    fidelity_max: f64,
    concurrence_q1q2_mean: f64,
    concurrence_q1q3_mean: f64,
    concurrence_q2q3_mean: f64,
}

fn grid(given: &[f64], ideal: f64, points: usize) -> Vec<f64> {
    if !given.is_empty() {
        return given.to_vec();
    }
    let n = points.max(2);
    (0..n)
        .map(|i| ideal * (0.5 + i as f64 / (n - 1) as f64))
        .collect()
}

/// Gate-level scan of the two interaction times.
pub fn sweep(cfg: &RunConfig) -> anyhow::Result<Output> {
    if cfg.run.layer != Layer::Ideal {
        return Err(ConfigError("sweep runs at the gate level; use --layer ideal".into()).into());
    }
    let base = cfg.setup()?.protocol;
    let probes = cfg.probes()?;
    let s = &cfg.sweep;
    let taus = grid(&s.tau_ns, base.tau, s.points);
    let primes = grid(&s.tau_prime_ns, base.tau_prime, s.points);
    let mut rows = vec![];
    for &tau in &taus {
        for &tau_prime in &primes {
            let p = ProtocolParams {
                tau,
                tau_prime,
                ..base.clone()
            };
            p.validate()?;
            let reports = probes
                .iter()
                .map(|(label, input)| {
                    let rho = run_ideal_uqcm(input, &p)?.output_density();
                    CloneReport::from_state(input, label, Layer::Ideal, &rho)
                })
                .collect::<Result<Vec<_>, _>>()?;
            let n = reports.len() as f64;
            let mean = |f: &dyn Fn(&CloneReport) -> f64| reports.iter().map(f).sum::<f64>() / n;
            let all_f = reports.iter().flat_map(|r| r.fidelity);
            rows.push(SweepRow {
                tau_ns: tau,
                tau_prime_ns: tau_prime,
                fidelity_q2_mean: mean(&|r| r.fidelity[0]),
                fidelity_q3_mean: mean(&|r| r.fidelity[1]),
                fidelity_min: all_f.clone().fold(f64::INFINITY, f64::min),
                fidelity_max: all_f.fold(f64::NEG_INFINITY, f64::max),
                concurrence_q1q2_mean: mean(&|r| r.concurrence[0]),
                concurrence_q1q3_mean: mean(&|r| r.concurrence[1]),
                concurrence_q2q3_mean: mean(&|r| r.concurrence[2]),
            });
        }
    }
    let best = rows
        .iter()
        .max_by(|a, b| a.fidelity_min.total_cmp(&b.fidelity_min))
        .expect("nonempty grid");
    say!(
        "{} grid points; best τ = {:.3} ns, τ′ = {:.3} ns with fidelities in [{:.6}, {:.6}]",
        rows.len(),
        best.tau_ns,
        best.tau_prime_ns,
        best.fidelity_min,
        best.fidelity_max
    );
    let mut out = Output::new(&cfg.run.out)?;
    out.csv(&format!("sweep_ideal_{}.csv", cfg.seed_tag()), &rows)?;
    Ok(out)
}
