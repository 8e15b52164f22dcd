use std::sync::Arc;

use num_complex::Complex64 as C64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use twophoton::liouvillian::{conserved_layout, MasterEquation};
use twophoton::observables::{self, record, DEFAULT_G2_THRESHOLD};
use twophoton::*;

fn two_photon_spec(gamma: f64, delta: f64, n_max: usize) -> ModelSpec {
    ModelSpec {
        gamma,
        delta,
        n_max,
        ..Default::default()
    }
}

fn observe(s: &Snapshot<'_>, probes: &[Occupations]) -> Result<ObservableRecord> {
    record(s, probes, DEFAULT_G2_THRESHOLD)
}

#[test]
fn undriven_two_photon_start_matches_closed_forms() {
    let probes = [
        Occupations::new(0, 0, 2),
        Occupations::new(1, 1, 0),
        Occupations::new(0, 0, 1),
        Occupations::new(1, 0, 0),
    ];
    let grid = uniform_grid(20.0, 0.1).unwrap();
    for gamma in [0.0, 0.1] {
        for delta in [0.0, 0.5, 2.0] {
            let spec = two_photon_spec(gamma, delta, 4);
            let rho0 = make_fock_state(spec.basis().unwrap(), Occupations::new(0, 0, 2)).unwrap();
            let traj = evolve_observed(&rho0, &spec, &grid, &EvolveOptions::default(), |s| {
                observe(s, &probes)
            })
            .unwrap();
            let mut worst = 0.0f64;
            for (t, r) in traj.iter() {
                let p = closed_form_probabilities(t, 1.0, gamma, delta).unwrap();
                let n = closed_form_occupations(t, 1.0, gamma, delta).unwrap();
                let errs = [
                    r.probs[0] - p.p_20,
                    r.probs[1] - p.p_11,
                    r.probs[2] - p.p_10,
                    r.probs[3] - p.p_1_single,
                    r.n[0] - n.n_0,
                    r.n[1] - n.n_1,
                    r.n[2] - n.n_1,
                ];
                worst = errs.iter().fold(worst, |m, e| m.max(e.abs()));
            }
            assert!(worst < 1e-6, "gamma {gamma} delta {delta}: {worst:e}");
        }
    }
}

#[test]
fn free_evolution_is_constant() {
    let spec = ModelSpec {
        u: 0.0,
        gamma: 0.0,
        n_max: 2,
        ..Default::default()
    };
    let basis = spec.basis().unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let rho0 = random_density(basis, &mut rng);
    let traj = evolve(&rho0, &spec, &[0.0, 1.0, 5.0], &EvolveOptions::default()).unwrap();
    for rho in &traj.records {
        assert!(rho.max_abs_diff(&rho0).unwrap() < 1e-14);
    }
}

#[test]
fn total_photon_number_decays_exponentially() {
    let gamma = 0.1;
    // Ten decay times of the photon number, 1/(2γ) each.
    let grid = uniform_grid(10.0 / (2.0 * gamma), 0.5).unwrap();
    for occ in [
        Occupations::new(0, 0, 2),
        Occupations::new(1, 2, 3),
        Occupations::new(2, 0, 1),
    ] {
        let spec = two_photon_spec(gamma, 0.3, 4);
        let rho0 = make_fock_state(spec.basis().unwrap(), occ).unwrap();
        let n_init = occ.total() as f64;
        let traj = evolve_observed(&rho0, &spec, &grid, &EvolveOptions::default(), |s| {
            observe(s, &[])
        })
        .unwrap();
        for (t, r) in traj.iter() {
            let want = n_init * (-2.0 * gamma * t).exp();
            let got: f64 = r.n.iter().sum();
            assert!(
                (got / want - 1.0).abs() < 1e-6,
                "{occ} t {t}: {got} vs {want}"
            );
        }
    }
}

#[test]
fn linear_driven_cavity_reaches_coherent_state() {
    let (f, gamma) = (0.05, 0.1);
    let spec = ModelSpec {
        u: 0.0,
        gamma,
        scheme: PumpScheme::Pump0,
        envelope: PulseEnvelope::constant(f),
        n_max: 6,
        ..Default::default()
    };
    let rho0 = vacuum(spec.basis().unwrap());
    let traj = evolve_observed(
        &rho0,
        &spec,
        &[0.0, 150.0],
        &EvolveOptions::default(),
        |s| observe(s, &[]),
    )
    .unwrap();
    let last = traj.records.last().unwrap();
    assert!(
        (last.n[0] - f * f / (gamma * gamma)).abs() < 1e-6,
        "{}",
        last.n[0]
    );
    assert!((last.g2[0].unwrap() - 1.0).abs() < 1e-3);
    assert_eq!(last.n[1], 0.0);
}

#[test]
fn symmetric_pumping_keeps_pair_modes_equal() {
    for (scheme, f) in [(PumpScheme::Pump0, 1.0), (PumpScheme::Pump12, 0.5)] {
        let spec = ModelSpec {
            scheme,
            envelope: PulseEnvelope::constant(f),
            n_max: 4,
            ..Default::default()
        };
        let rho0 = vacuum(spec.basis().unwrap());
        let grid = uniform_grid(3.0, 0.25).unwrap();
        let traj = evolve_observed(&rho0, &spec, &grid, &EvolveOptions::default(), |s| {
            observe(s, &[])
        })
        .unwrap();
        for (_, r) in traj.iter() {
            assert!((r.n[1] - r.n[2]).abs() < 1e-10);
        }
    }
}

#[test]
fn sector_storage_matches_dense_storage() {
    for scheme in [PumpScheme::Pump0, PumpScheme::Pump12] {
        let spec = ModelSpec {
            scheme,
            delta: 0.4,
            pump_detunings: [0.1, -0.2, 0.3],
            envelope: PulseEnvelope {
                shape: PulseShape::Rect,
                f0: 0.8,
                tau: 1.3,
            },
            n_max: 3,
            ..Default::default()
        };
        let rho0 = make_fock_state(spec.basis().unwrap(), Occupations::new(1, 0, 1)).unwrap();
        let grid = uniform_grid(2.5, 0.5).unwrap();
        let dense_opts = EvolveOptions {
            use_sectors: false,
            ..Default::default()
        };
        let a = evolve(&rho0, &spec, &grid, &EvolveOptions::default()).unwrap();
        let b = evolve(&rho0, &spec, &grid, &dense_opts).unwrap();
        assert!(a.records[0].layout().n_blocks() > 1);
        assert_eq!(b.records[0].layout().n_blocks(), 1);
        for (x, y) in a.records.iter().zip(&b.records) {
            assert!(x.max_abs_diff(y).unwrap() < 1e-9);
        }
    }
}

#[test]
fn positivity_audit_reports_small_eigenvalues() {
    let spec = ModelSpec {
        scheme: PumpScheme::Pump0,
        envelope: PulseEnvelope::constant(1.0),
        n_max: 3,
        ..Default::default()
    };
    let rho0 = vacuum(spec.basis().unwrap());
    let opts = EvolveOptions {
        audit_positivity: true,
        ..Default::default()
    };
    let traj = evolve_observed(&rho0, &spec, &uniform_grid(2.0, 0.5).unwrap(), &opts, |s| {
        observe(s, &[])
    })
    .unwrap();
    for (_, r) in traj.iter() {
        let m = r.min_eigenvalue.unwrap();
        assert!(m > -1e-8, "{m}");
        assert!(r.trace_error < 1e-8);
        assert!(r.hermiticity_residual < 1e-10);
    }
}

#[test]
fn evolve_rejects_bad_input() {
    let spec = two_photon_spec(0.1, 0.0, 2);
    let rho0 = vacuum(spec.basis().unwrap());
    let opts = EvolveOptions::default();
    assert!(matches!(
        evolve(&rho0, &spec, &[0.5, 1.0], &opts),
        Err(Error::InvalidGrid(_))
    ));
    assert!(matches!(
        evolve(&rho0, &spec, &[0.0, 1.0, 1.0], &opts),
        Err(Error::InvalidGrid(_))
    ));
    assert!(matches!(
        evolve(&rho0, &spec, &[], &opts),
        Err(Error::InvalidGrid(_))
    ));
    let other = vacuum(FockBasis::new(3).unwrap());
    assert!(evolve(&other, &spec, &[0.0, 1.0], &opts).is_err());
    assert!(matches!(
        make_fock_state(spec.basis().unwrap(), Occupations::new(0, 0, 3)),
        Err(Error::OccupationOutOfRange { .. })
    ));
    let mut dense = vacuum(spec.basis().unwrap()).to_dense();
    dense[0] = C64::new(2.0, 0.0);
    let bad_trace = DensityMatrix::from_dense(spec.basis().unwrap(), dense).unwrap();
    assert!(matches!(
        evolve(&bad_trace, &spec, &[0.0, 1.0], &opts),
        Err(Error::InvariantViolation { .. })
    ));
}

fn random_density(basis: FockBasis, rng: &mut ChaCha8Rng) -> DensityMatrix {
    let dim = basis.dim();
    let mut a = vec![C64::default(); dim * dim];
    for v in a.iter_mut() {
        *v = C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
    }
    // ρ = A A† / Tr(A A†)
    let mut rho = vec![C64::default(); dim * dim];
    for r in 0..dim {
        for c in 0..dim {
            rho[r * dim + c] = (0..dim)
                .map(|k| a[r * dim + k] * a[c * dim + k].conj())
                .sum();
        }
    }
    let tr: f64 = (0..dim).map(|i| rho[i * dim + i].re).sum();
    rho.iter_mut().for_each(|v| *v /= tr);
    DensityMatrix::from_dense(basis, rho).unwrap()
}

#[test]
fn rhs_of_vacuum_vanishes_without_pump() {
    let spec = two_photon_spec(0.1, 0.7, 3);
    let basis = spec.basis().unwrap();
    let parts = build_hamiltonian_parts(&spec, basis).unwrap();
    let d = lindblad_rhs(&vacuum(basis), 0.0, &spec, &parts).unwrap();
    assert!(d.data().iter().all(|v| v.norm() == 0.0));
}

#[test]
fn rhs_is_traceless_and_hermitian() {
    let spec = ModelSpec {
        gamma: 0.3,
        delta: 0.5,
        pump_detunings: [0.2, 0.0, -0.1],
        scheme: PumpScheme::Pump12,
        envelope: PulseEnvelope::constant(0.7),
        n_max: 2,
        ..Default::default()
    };
    let basis = spec.basis().unwrap();
    let parts = build_hamiltonian_parts(&spec, basis).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    for _ in 0..100 {
        let rho = random_density(basis, &mut rng);
        let d = lindblad_rhs(&rho, 0.3, &spec, &parts).unwrap();
        assert!(d.trace().norm() < 1e-12);
        assert!(d.hermiticity_residual() < 1e-14);
    }
}

#[test]
fn coherence_decays_at_gamma() {
    let spec = ModelSpec {
        u: 0.0,
        gamma: 0.25,
        n_max: 2,
        ..Default::default()
    };
    let basis = spec.basis().unwrap();
    let parts = build_hamiltonian_parts(&spec, basis).unwrap();
    let dim = basis.dim();
    let one = basis.index(Occupations::new(0, 0, 1)).unwrap();
    let mut dense = vec![C64::default(); dim * dim];
    dense[one * dim] = C64::new(1.0, 0.0);
    let rho = DensityMatrix::from_dense(basis, dense).unwrap();
    let d = lindblad_rhs(&rho, 0.0, &spec, &parts).unwrap();
    for (x, y) in d.data().iter().zip(rho.data()) {
        assert!((x + y * 0.25).norm() < 1e-15);
    }
}

#[test]
fn hermitian_kernel_agrees_with_general_kernel() {
    let spec = ModelSpec {
        delta: -0.3,
        scheme: PumpScheme::Pump0,
        envelope: PulseEnvelope::constant(0.9),
        n_max: 3,
        ..Default::default()
    };
    let basis = spec.basis().unwrap();
    let parts = build_hamiltonian_parts(&spec, basis).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let dense = random_density(basis, &mut rng);
    let rho0 = vacuum(basis);
    let layout = Arc::new(conserved_layout(&parts, &rho0));
    // Project onto the stored blocks; the result is still Hermitian.
    let mut rho = DensityMatrix::zeros(layout.clone());
    for (r, c, v) in dense.nonzeros() {
        if let Some(p) = layout.position(r, c) {
            rho.data_mut()[p] = v;
        }
    }
    let eq = MasterEquation::new(&spec, &parts, layout).unwrap();
    let mut general = rho.zeros_like();
    let mut fast = rho.zeros_like();
    eq.apply(0.9, rho.data(), general.data_mut());
    eq.apply_hermitian(0.9, rho.data(), fast.data_mut());
    assert!(general.max_abs_diff(&fast).unwrap() < 1e-14);
}

#[test]
fn observables_of_evolved_state_stay_physical() {
    let spec = ModelSpec {
        scheme: PumpScheme::Pump0,
        envelope: PulseEnvelope::constant(1.0),
        n_max: 4,
        ..Default::default()
    };
    let rho0 = vacuum(spec.basis().unwrap());
    let probes = [Occupations::new(1, 1, 0), Occupations::new(0, 0, 2)];
    let traj = evolve_observed(
        &rho0,
        &spec,
        &uniform_grid(4.0, 0.2).unwrap(),
        &EvolveOptions::default(),
        |s| observe(s, &probes),
    )
    .unwrap();
    assert!(traj.records[0].g2.iter().all(Option::is_none));
    for (_, r) in traj.iter().skip(1) {
        assert!(r.n.iter().all(|&n| n >= 0.0));
        assert!(r.probs.iter().all(|&p| (0.0..=1.0).contains(&p)));
        assert!(r.g2.iter().flatten().all(|&g| g.is_finite() && g >= 0.0));
    }
    let n0 = observables::occupation(&rho0, Mode::Zero).unwrap();
    assert_eq!(n0, 0.0);
}
