mod common;

use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use uqcm_core::experiment::reduce;
use uqcm_core::metrics::{
    analytic_joint_copies, analytic_joint_original_copy, concurrence, population_tv_distance,
    rho_tilde, rho_tilde_eigenvalues,
};
use uqcm_core::model::{
    effective_three_qubit_hamiltonian, full_hamiltonian, mediated_coupling, DeviceParams,
    HamiltonianSpec, Operators,
};
use uqcm_core::noise::{
    decoupling_ensemble, lindblad_evolve, run_noisy, sigma_for_t2_star, trajectory_rng, Collapse,
    DecouplingConfig, NoiseModel, NoisyConfig, OuProcess,
};
use uqcm_core::numkit::{
    c, eigvals_general_4x4, expm_scaled, kron, nearest_density_matrix, partial_trace, pauli,
    permute_state, vec_norm, CMatrix, SubsystemShape, C64,
};
use uqcm_core::protocol::{
    calibrate, eq5_state, ideal_durations, run_ideal_uqcm, run_pulse_level, CalibrationTarget,
    InputState, Probe, ProtocolParams, PulseConfig, PulseSchedule, ZCorrection,
};
use uqcm_core::tomography::{
    confused_probabilities, exact_data, process_tomography, readout_correct, reconstruct_state,
    Readout, TomographySetting,
};

fn seeded() -> impl Strategy<Value = ChaCha8Rng> {
    any::<u64>().prop_map(ChaCha8Rng::seed_from_u64)
}

fn random_matrix(r: &mut ChaCha8Rng, rows: usize, cols: usize) -> CMatrix {
    let g = common::random_density(r, rows.max(cols));
    CMatrix::from_fn(rows, cols, |i, j| g[(i, j)] * c(1.0, (i + 2 * j) as f64))
}

fn random_hermitian(r: &mut ChaCha8Rng, d: usize, scale: f64) -> CMatrix {
    let m = random_matrix(r, d, d);
    (&m + &m.dagger()).scale_real(scale)
}

fn bloch() -> impl Strategy<Value = InputState> {
    (0.0..std::f64::consts::PI, 0.0..std::f64::consts::TAU)
        .prop_map(|(t, p)| InputState::from_bloch(t, p))
}

fn lambda() -> f64 {
    DeviceParams::default().lambda().unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn kron_is_associative(mut r in seeded(), da in 1usize..4, db in 1usize..4, dc in 1usize..3) {
        let (a, b, cm) = (random_matrix(&mut r, da, 2), random_matrix(&mut r, db, db), random_matrix(&mut r, dc, 3));
        let left = kron(&kron(&a, &b), &cm);
        let right = kron(&a, &kron(&b, &cm));
        prop_assert!(left.max_abs_diff(&right) < 1e-12);
    }

    #[test]
    fn partial_trace_of_product(mut r in seeded(), da in 1usize..4, db in 1usize..4) {
        let ra = common::random_density(&mut r, da);
        let rb = common::random_density(&mut r, db).scale_real(1.7);
        let shape = SubsystemShape::new(vec![da, db]).unwrap();
        let pa = partial_trace(&kron(&ra, &rb), &shape, &[0]).unwrap();
        prop_assert!(pa.max_abs_diff(&ra.scale_real(1.7)) < 1e-12);
    }

    #[test]
    fn propagator_group_property(mut r in seeded(), t1 in -50.0..50.0f64, t2 in -50.0..50.0f64) {
        let h = random_hermitian(&mut r, 6, 0.05);
        let prod = expm_scaled(&h, t1).unwrap().matmul(&expm_scaled(&h, t2).unwrap());
        prop_assert!(prod.max_abs_diff(&expm_scaled(&h, t1 + t2).unwrap()) < 1e-9);
    }

    #[test]
    fn rho_tilde_spectrum_is_real(mut r in seeded()) {
        let rho = common::random_density(&mut r, 4);
        for z in eigvals_general_4x4(&rho_tilde(&rho).unwrap()).unwrap() {
            prop_assert!(z.im.abs() < 1e-9);
        }
    }

    #[test]
    fn hamiltonian_conserves_excitations(f in prop::array::uniform3(5.0..5.6f64), xt in any::<bool>(), fock in 2usize..5) {
        let p = DeviceParams::default();
        let spec = HamiltonianSpec::new(&p, f.map(|x| x * std::f64::consts::TAU), fock, xt);
        let h = full_hamiltonian(&spec, &p).unwrap();
        prop_assert!(h.commutator(&Operators::new(fock).excitations()).max_abs() < 1e-9);
    }

    #[test]
    fn ideal_clones_are_universal(s in bloch()) {
        let run = run_ideal_uqcm(&s, &ProtocolParams::ideal(lambda())).unwrap();
        for psi in [&run.bell, &run.after_c123, &run.output] {
            prop_assert!((vec_norm(psi) - 1.0).abs() < 1e-10);
        }
        let rho = run.output_density();
        for q in [1, 2] {
            let f = uqcm_core::metrics::fidelity_to_pure(&s.vector(), &reduce(&rho, &[q]).unwrap());
            prop_assert!((f - 5.0 / 6.0).abs() < 1e-9);
        }
    }

    #[test]
    fn residual_phase_leaves_clones_unchanged(s in bloch(), phi in 0.0..std::f64::consts::TAU) {
        let at = |phi| CMatrix::outer(&eq5_state(&s, phi));
        let mut p = ProtocolParams::ideal(lambda());
        p.phi = phi;
        let run = run_ideal_uqcm(&s, &p).unwrap().output_density();
        for q in [1, 2] {
            let base = reduce(&at(0.0), &[q]).unwrap();
            prop_assert!(reduce(&at(phi), &[q]).unwrap().max_abs_diff(&base) < 1e-12);
            prop_assert!(reduce(&run, &[q]).unwrap().max_abs_diff(&base) < 1e-12);
        }
    }

    #[test]
    fn analytic_families_have_fixed_concurrence(s in bloch()) {
        for (rho, target, lead) in [
            (analytic_joint_original_copy(s.alpha, s.beta).unwrap(), 2.0 / 3.0, 4.0 / 9.0),
            (analytic_joint_copies(s.alpha, s.beta).unwrap(), 1.0 / 3.0, 1.0 / 9.0),
        ] {
            prop_assert!((concurrence(&rho).unwrap() - target).abs() < 1e-9);
            let ev = rho_tilde_eigenvalues(&rho).unwrap();
            prop_assert!((ev[0] - lead).abs() < 1e-9);
            prop_assert!(ev[1..].iter().all(|v| v.abs() <= 1e-9));
        }
    }

    #[test]
    fn ideal_dynamics_match_analytic_families(s in bloch()) {
        let rho = run_ideal_uqcm(&s, &ProtocolParams::ideal(lambda())).unwrap().output_density();
        let oc = analytic_joint_original_copy(s.alpha, s.beta).unwrap();
        prop_assert!(reduce(&rho, &[0, 1]).unwrap().max_abs_diff(&oc) < 1e-9);
        prop_assert!(reduce(&rho, &[0, 2]).unwrap().max_abs_diff(&oc) < 1e-9);
        let cc = analytic_joint_copies(s.alpha, s.beta).unwrap();
        prop_assert!(reduce(&rho, &[1, 2]).unwrap().max_abs_diff(&cc) < 1e-9);
    }

    #[test]
    fn concurrence_is_local_unitary_invariant(mut r in seeded()) {
        let rho = common::random_density(&mut r, 4);
        let pure = CMatrix::outer(&common::haar_vector(&mut r, 4));
        let u = kron(&common::haar_unitary(&mut r, 2), &common::haar_unitary(&mut r, 2));
        for s in [rho, pure] {
            let d = concurrence(&s.conjugate_by(&u)).unwrap() - concurrence(&s).unwrap();
            prop_assert!(d.abs() < 1e-9);
        }
    }

    #[test]
    fn mixing_never_raises_concurrence(mut r in seeded()) {
        let s = CMatrix::outer(&common::haar_vector(&mut r, 4));
        let mix = |p: f64| &s.scale_real(1.0 - p) + &CMatrix::identity(4).scale_real(p / 4.0);
        let mut prev = concurrence(&s).unwrap();
        for k in 1..10 {
            let cur = concurrence(&mix(k as f64 / 10.0)).unwrap();
            prop_assert!(cur <= prev + 1e-12);
            prev = cur;
        }
    }

    #[test]
    fn exact_tomography_round_trip(mut r in seeded(), n in 1usize..3) {
        let rho = common::random_density(&mut r, 1 << n);
        let rec = reconstruct_state(&exact_data(&rho, n).unwrap(), n).unwrap();
        prop_assert!(rec.raw.max_abs_diff(&rho) < 1e-9);
        prop_assert!(rec.projected.max_abs_diff(&rho) < 1e-9);
    }

    #[test]
    fn confusion_correction_inverts(mut r in seeded(), f in prop::array::uniform4(0.8..1.0f64)) {
        let readout = [Readout { f0: f[0], f1: f[1] }, Readout { f0: f[2], f1: f[3] }];
        let rho = common::random_density(&mut r, 4);
        for s in TomographySetting::all(2) {
            let p = uqcm_core::tomography::ideal_probabilities(&rho, &s).unwrap();
            let back = readout_correct(&confused_probabilities(&p, &readout), &readout).unwrap();
            prop_assert!(back.clipped_mass < 1e-12);
            for (a, b) in back.probabilities.iter().zip(&p) {
                prop_assert!((a - b).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn projection_never_moves_away_from_truth(mut r in seeded(), n in 1usize..3, eps in 0.0..0.2f64) {
        use rand::Rng;
        let rho = CMatrix::outer(&common::haar_vector(&mut r, 1 << n));
        let noisy: Vec<_> = exact_data(&rho, n)
            .unwrap()
            .into_iter()
            .map(|(s, p)| {
                let q: Vec<f64> = p.iter().map(|x| x + eps * (r.random::<f64>() - 0.5)).collect();
                (s, q)
            })
            .collect();
        let rec = reconstruct_state(&noisy, n).unwrap();
        prop_assert!((&rec.projected - &rho).frobenius_norm() <= (&rec.raw - &rho).frobenius_norm() + 1e-12);
        prop_assert!(nearest_density_matrix(&rho).unwrap().max_abs_diff(&rho) < 1e-12);
    }

    #[test]
    fn unitary_channels_have_rank_one_chi(mut r in seeded()) {
        let u = common::haar_unitary(&mut r, 2);
        let pairs: Vec<_> = Probe::ALL
            .iter()
            .map(|p| {
                let rho = CMatrix::outer(&p.state().vector());
                let out = rho.conjugate_by(&u);
                (rho, out)
            })
            .collect();
        let chi = process_tomography(&pairs).unwrap();
        let m = chi.matrix();
        prop_assert!((m.matmul(m).trace().re - 1.0).abs() < 1e-8);
        let ev = uqcm_core::numkit::eigvals_hermitian(m).unwrap();
        prop_assert!((ev[0] - 1.0).abs() < 1e-8 && ev[1].abs() < 1e-8);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn lindblad_preserves_trace_and_hermiticity(mut r in seeded(), g1 in 0.0..0.05f64, gp in 0.0..0.05f64) {
        let rho = common::random_density(&mut r, 4);
        let h = random_hermitian(&mut r, 4, 0.05);
        let shape = SubsystemShape::qubits(2);
        let collapse = vec![
            Collapse { op: uqcm_core::numkit::embed(&shape, 0, &pauli::lower()), rate: g1 },
            Collapse { op: uqcm_core::numkit::embed(&shape, 1, &pauli::z()), rate: gp },
        ];
        let out = lindblad_evolve(&rho, &h, &collapse, 20.0, 0.05).unwrap();
        prop_assert!((out.trace().re - 1.0).abs() < 1e-8 && out.trace().im.abs() < 1e-8);
        prop_assert!(out.hermiticity_error() < 1e-10);
    }

    #[test]
    fn copy_swap_symmetry(mut r in seeded(), t in 0.0..150.0f64) {
        let p = DeviceParams {
            uniform_coupling_mhz: Some(20.0),
            ..Default::default()
        };
        let f = p.working();
        let spec = HamiltonianSpec::new(&p, [f + 0.3, f, f], 3, false);
        let h = full_hamiltonian(&spec, &p).unwrap();
        let shape = SubsystemShape::new(vec![2, 2, 2, 3]).unwrap();
        let swap = [0, 2, 1, 3];
        let psi = common::haar_vector(&mut r, 24);
        let u = expm_scaled(&h, t).unwrap();
        let direct = u.apply(&psi);
        let swapped = permute_state(&u.apply(&permute_state(&psi, &shape, &swap)), &shape, &swap);
        let d = direct.iter().zip(&swapped).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
        prop_assert!(d < 1e-9);
    }

    #[test]
    fn effective_model_tracks_full_dynamics(s in bloch(), t in 0.0..100.0f64) {
        let p = DeviceParams {
            uniform_coupling_mhz: Some(20.0),
            ..Default::default()
        };
        let w = p.working();
        let g = p.coupling(0);
        let delta = p.resonator() - w;
        let h = full_hamiltonian(&HamiltonianSpec::new(&p, [w; 3], 3, false), &p).unwrap();
        let lam = mediated_coupling(g, delta).unwrap();
        // single excitation shared as α|100⟩ + β|010⟩, vacuum resonator
        let mut full = vec![C64::new(0.0, 0.0); 24];
        full[0b100 * 3] = s.alpha;
        full[0b010 * 3] = s.beta;
        let out = expm_scaled(&h, t).unwrap().apply(&full);
        let proj: Vec<C64> = (0..8).map(|i| out[i * 3]).collect();
        let mut q = vec![C64::new(0.0, 0.0); 8];
        q[0b100] = s.alpha;
        q[0b010] = s.beta;
        let eff = expm_scaled(&effective_three_qubit_hamiltonian(lam), t).unwrap().apply(&q);
        let ov: C64 = eff.iter().zip(&proj).map(|(a, b)| a.conj() * b).sum();
        let infidelity = 1.0 - ov.norm_sqr() / vec_norm(&proj).powi(2);
        prop_assert!(infidelity <= 3.0 * (g / delta).powi(2), "infidelity {infidelity}");
    }
}

#[test]
fn pulse_level_stays_close_to_gate_level_with_crosstalk() {
    let dev = DeviceParams::default();
    let cfg = PulseConfig::default();
    assert!(cfg.crosstalk);
    let d = ideal_durations(&dev).unwrap();
    let base = PulseSchedule::with_durations(d[0], d[1], d[2]);
    let cal = calibrate(&dev, &cfg, &base, CalibrationTarget::CloneFidelity).unwrap();
    let ideal = ProtocolParams::ideal(dev.lambda().unwrap());
    for pr in Probe::ALL {
        let s = pr.state();
        let pulse = run_pulse_level(
            &s,
            &cal.schedule,
            &dev,
            &cfg,
            ZCorrection::Fixed(cal.z_angles),
        )
        .unwrap();
        let gate = run_ideal_uqcm(&s, &ideal).unwrap().output_density();
        assert!(
            population_tv_distance(&pulse.rho, &gate) <= 0.05,
            "{}",
            pr.label()
        );
    }
}

#[test]
fn ou_samples_have_stationary_statistics() {
    let (sigma, tc) = (0.3, 40.0);
    let ou = OuProcess::new(sigma, tc).unwrap();
    let n = 10_000;
    let dt = tc / 8.0;
    let pairs: Vec<(f64, f64)> = (0..n as u64)
        .map(|i| {
            let s = ou.sample(&mut trajectory_rng(5, i), 9, dt);
            (s[0], s[8])
        })
        .collect();
    let var = pairs.iter().map(|p| p.0 * p.0).sum::<f64>() / n as f64;
    assert!((var / (sigma * sigma) - 1.0).abs() < 0.05, "variance {var}");
    let corr = pairs.iter().map(|p| p.0 * p.1).sum::<f64>() / n as f64 / (sigma * sigma);
    let e1 = (-1.0f64).exp();
    assert!((corr - e1).abs() < 0.1 * e1, "lag-T_c correlation {corr}");
}

#[test]
fn slow_frequency_noise_gives_gaussian_ramsey_decay() {
    // T_c far above the observation window: ln C(t) ∝ −t²
    let (t2, tc) = (1000.0, 1e6);
    let sigma = sigma_for_t2_star(t2, tc).unwrap();
    let ou = OuProcess::new(sigma, tc).unwrap();
    let dt = 10.0;
    let steps = 150;
    let n = 10_000;
    let mut sum = vec![C64::new(0.0, 0.0); steps + 1];
    for i in 0..n as u64 {
        let k = ou.sample(&mut trajectory_rng(17, i), steps + 1, dt);
        let mut phase = 0.0;
        for s in 0..=steps {
            if s > 0 {
                phase += 0.5 * dt * (k[s - 1] + k[s]);
            }
            sum[s] += C64::from_polar(1.0, -phase);
        }
    }
    let times: Vec<f64> = (1..=steps).map(|s| s as f64 * dt).collect();
    let ln_c: Vec<f64> = (1..=steps)
        .map(|s| (sum[s].norm() / n as f64).ln())
        .collect();
    // least squares of ln C = −a t² through the origin
    let a = -times.iter().zip(&ln_c).map(|(t, l)| t * t * l).sum::<f64>()
        / times.iter().map(|t| t.powi(4)).sum::<f64>();
    let fit: Vec<f64> = times.iter().map(|t| -a * t * t).collect();
    let resid = ln_c
        .iter()
        .zip(&fit)
        .map(|(l, f)| (l - f).powi(2))
        .sum::<f64>()
        .sqrt()
        / fit.iter().map(|f| f * f).sum::<f64>().sqrt();
    assert!(resid < 0.05, "relative fit residual {resid}");
    assert!(
        (a * t2 * t2 - 1.0).abs() < 0.05,
        "decay reaches e^-1 at {}",
        1.0 / a.sqrt()
    );
}

#[test]
fn exchange_gap_protects_against_slow_noise() {
    let lam = lambda();
    let tc = 10.0 / lam;
    let sigma = sigma_for_t2_star(900.0, tc).unwrap();
    let r = decoupling_ensemble(&DecouplingConfig::new(lam, sigma, tc, 2000, 3)).unwrap();
    assert!(r.retention_coupled.mean > r.retention_uncoupled.mean);
    assert!(r.paired_difference.mean > 0.0);
}

#[test]
fn superpositions_with_the_ground_state_still_dephase() {
    let lam = lambda();
    let tc = 50.0 / lam;
    let r = decoupling_ensemble(&DecouplingConfig::new(lam, 0.3 * lam, tc, 2000, 4)).unwrap();
    let loss = 1.0 - r.coherence_coupled.mean;
    assert!(
        loss > 5.0 * r.coherence_coupled.stderr,
        "coherence loss {loss}"
    );
    assert!(loss > 1.0 - r.retention_coupled.mean);
}

#[test]
fn noisy_layer_is_independent_of_thread_count() {
    let dev = DeviceParams::default();
    let cfg = PulseConfig::default();
    let schedule = {
        let d = ideal_durations(&dev).unwrap();
        let mut s = PulseSchedule::with_durations(d[0], d[1], d[2]);
        s.compensation_ghz = Some(dev.qubits[2].idle_ghz);
        s
    };
    let model = NoiseModel::from_device(&dev, 24, 99).unwrap();
    let inputs = [Probe::Plus.state()];
    let run = || {
        run_noisy(
            &dev,
            &cfg,
            &schedule,
            [0.0; 3],
            &model,
            &NoisyConfig::default(),
            &inputs,
        )
        .unwrap()
    };
    let many = run();
    let one = rayon::ThreadPoolBuilder::new()
        .num_threads(1)
        .build()
        .unwrap()
        .install(run);
    assert_eq!(many[0], one[0]);
}
