use cvtele::{
    average_fidelity, entanglement_free_baseline, mc_moments, one_shot_fidelity, optimize_gain, CoherentCutoff,
    InputEnsemble, InputFamily, InputState, MomentOptions, NoiseSpec, ResourceFamily, ResourceSpec,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn opts() -> MomentOptions {
    MomentOptions::default()
}

fn best(family: ResourceFamily, r: f64, ens: &InputEnsemble, noise: &NoiseSpec) -> cvtele::MomentResult {
    let res = ResourceSpec::new(family, r).unwrap();
    optimize_gain(&res, ens, noise, &opts()).unwrap()
}

#[test]
fn tmsv_fidelity_nondecreasing_in_squeezing() {
    for sigma in [1.0, 5.0] {
        let ens = InputEnsemble::gaussian_coherent(sigma).unwrap();
        let curve: Vec<f64> = (0..=20)
            .map(|k| best(ResourceFamily::Tmsv, 0.1 * k as f64, &ens, &NoiseSpec::NOISELESS).avg_fidelity)
            .collect();
        for w in curve.windows(2) {
            assert!(w[1] >= w[0], "sigma {sigma}: {curve:?}");
        }
    }
}

#[test]
fn photon_subtracted_deviation_drops_with_energy_at_small_squeezing() {
    let ens = |l| InputEnsemble::uniform(InputFamily::Coherent, l).unwrap();
    let (low, high) = (ens(1.0), ens(2.5));
    for r in [0.0, 0.1, 0.2, 0.3, 0.4] {
        let d_low = best(ResourceFamily::PhotonSubtracted, r, &low, &NoiseSpec::NOISELESS).fidelity_deviation;
        let d_high = best(ResourceFamily::PhotonSubtracted, r, &high, &NoiseSpec::NOISELESS).fidelity_deviation;
        assert!(d_high < d_low, "r = {r}: dF(2.5) = {d_high}, dF(1.0) = {d_low}");
    }
}

// With b <= L the ordering holds only at small squeezing and reverses by r = 0.5.
#[test]
fn photon_subtracted_deviation_ordering_reverses_for_displacement_radius() {
    let ens = |l| {
        InputEnsemble::uniform(InputFamily::Coherent, l)
            .unwrap()
            .with_coherent_cutoff(CoherentCutoff::DisplacementRadius)
    };
    let (low, high) = (ens(1.0), ens(2.5));
    let gap = |r| {
        best(ResourceFamily::PhotonSubtracted, r, &low, &NoiseSpec::NOISELESS).fidelity_deviation
            - best(ResourceFamily::PhotonSubtracted, r, &high, &NoiseSpec::NOISELESS).fidelity_deviation
    };
    for r in [0.0, 0.1, 0.2, 0.3] {
        assert!(gap(r) > 0.0, "r = {r}");
    }
    assert!(gap(0.5) < 0.0);
}

#[test]
fn broad_coherent_ensembles_push_gain_to_unity() {
    let mut previous = 0.0;
    for l in [1.0, 2.0, 3.0, 4.0] {
        let ens = InputEnsemble::uniform(InputFamily::Coherent, l).unwrap();
        let g = best(ResourceFamily::Tmsv, 1.0, &ens, &NoiseSpec::NOISELESS).g_opt;
        assert!(g > previous, "L = {l}: g_opt {g} not above {previous}");
        previous = g;
    }
    assert!(previous > 0.99, "g_opt at L = 4 is {previous}");
}

#[test]
fn golden_section_agrees_with_dense_grid() {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    let ensembles = [
        InputEnsemble::gaussian_coherent(2.0).unwrap(),
        InputEnsemble::uniform(InputFamily::Squeezed, 1.0).unwrap(),
        InputEnsemble::uniform(InputFamily::Coherent, 1.5).unwrap(),
        InputEnsemble::gaussian_squeezed(0.8).unwrap(),
    ];
    let spacing = 1.0 / 2000.0;
    for i in 0..20 {
        let family = ResourceFamily::NAMED[i % 3];
        let res = ResourceSpec::new(family, rng.random_range(0.0..1.5)).unwrap();
        let noise = NoiseSpec::new(rng.random_range(0.0..0.4), rng.random_range(0.0..0.4)).unwrap();
        let ens = &ensembles[i % ensembles.len()];
        let found = optimize_gain(&res, ens, &noise, &opts()).unwrap();
        let (mut g_grid, mut f_grid) = (0.0, f64::NEG_INFINITY);
        for k in 0..=2000 {
            let g = k as f64 * spacing;
            let (f, _) = average_fidelity(&res, ens, g, &noise, &opts()).unwrap();
            if f > f_grid {
                (g_grid, f_grid) = (g, f);
            }
        }
        assert!(found.avg_fidelity >= f_grid - 1e-12, "tuple {i}: {} < {f_grid}", found.avg_fidelity);
        // the grid argmax itself is only resolved to half a grid step
        assert!(
            (found.g_opt - g_grid).abs() <= 1e-4 + 0.5 * spacing,
            "tuple {i}: g_opt {} vs grid {g_grid}",
            found.g_opt
        );
    }
}

#[test]
fn fixed_gain_noisy_optimum_beats_101_point_grid() {
    let noise = NoiseSpec::new(0.3, 0.25).unwrap();
    let ens = InputEnsemble::gaussian_squeezed_coherent(0.5, 1.0).unwrap();
    for family in ResourceFamily::NAMED {
        let res = ResourceSpec::new(family, 0.9).unwrap();
        let found = optimize_gain(&res, &ens, &noise, &opts()).unwrap();
        for k in 0..=100 {
            let (f, _) = average_fidelity(&res, &ens, k as f64 / 100.0, &noise, &opts()).unwrap();
            assert!(found.avg_fidelity >= f - 1e-12);
        }
    }
}

#[test]
fn invariants_hold_across_families_and_ensembles() {
    let ensembles = [
        InputEnsemble::uniform(InputFamily::Coherent, 2.0).unwrap(),
        InputEnsemble::uniform(InputFamily::Squeezed, 1.0).unwrap(),
        InputEnsemble::uniform(InputFamily::SqueezedCoherent, 1.0).unwrap(),
        InputEnsemble::gaussian_coherent(3.0).unwrap(),
        InputEnsemble::gaussian_squeezed(2.0).unwrap(),
        InputEnsemble::gaussian_squeezed_coherent(0.5, 5.0).unwrap(),
    ];
    for noise in [NoiseSpec::NOISELESS, NoiseSpec::new(0.3, 0.2).unwrap()] {
        for family in ResourceFamily::NAMED {
            for ens in &ensembles {
                let m = best(family, 1.0, ens, &noise);
                assert!((0.0..=1.0).contains(&m.avg_fidelity));
                assert!((0.0..=0.5).contains(&m.fidelity_deviation));
                assert!((0.0..=1.0).contains(&m.g_opt));
                assert!(m.second_moment >= m.avg_fidelity * m.avg_fidelity - 1e-12);
                assert!(
                    m.fidelity_deviation.powi(2) + m.avg_fidelity.powi(2) <= m.second_moment + 1e-12,
                    "{family} {ens:?}"
                );
                assert!(m.quad_error_f >= 0.0 && m.quad_error_f2 >= 0.0);
                assert!(m.n_evals > 0);
            }
        }
    }
}

#[test]
fn zero_noise_matches_noiseless_path() {
    let ens = InputEnsemble::uniform(InputFamily::SqueezedCoherent, 1.0).unwrap();
    let zero = NoiseSpec::new(0.0, 0.0).unwrap();
    for family in ResourceFamily::NAMED {
        assert_eq!(
            best(family, 0.8, &ens, &zero),
            best(family, 0.8, &ens, &NoiseSpec::NOISELESS)
        );
    }
}

#[test]
fn entanglement_free_reference_points() {
    let vacuum_like = InputEnsemble::uniform(InputFamily::SqueezedCoherent, 1e-6).unwrap();
    let ef = entanglement_free_baseline(&vacuum_like, &opts()).unwrap();
    assert!((ef.avg_fidelity - 1.0).abs() < 1e-9);

    let gaussian = InputEnsemble::gaussian_coherent(5.0).unwrap();
    let ef = entanglement_free_baseline(&gaussian, &opts()).unwrap().avg_fidelity;
    let quantum = best(ResourceFamily::Tmsv, 1.0, &gaussian, &NoiseSpec::NOISELESS).avg_fidelity;
    assert!(ef < quantum);

    let uniform = InputEnsemble::uniform(InputFamily::Coherent, 2.0).unwrap();
    let ef = entanglement_free_baseline(&uniform, &opts()).unwrap();
    let res = ResourceSpec::tmsv(0.0).unwrap();
    let mc = mc_moments(&res, &uniform, ef.g_opt, &NoiseSpec::NOISELESS, 1_000_000, 77).unwrap();
    assert!((ef.avg_fidelity - mc.mean).abs() < 4.0 * mc.stderr);
}

#[test]
fn noisy_degenerate_ensemble_is_vacuum_fidelity() {
    let noise = NoiseSpec::new(0.2, 0.3).unwrap();
    for family in ResourceFamily::NAMED {
        let res = ResourceSpec::new(family, 0.7).unwrap();
        for l in [1e-3, 1e-2] {
            let ens = InputEnsemble::uniform(InputFamily::SqueezedCoherent, l).unwrap();
            let (f, _) = average_fidelity(&res, &ens, 0.6, &noise, &opts()).unwrap();
            let f0 = one_shot_fidelity(&res, &InputState::vacuum(), 0.6, &noise).unwrap();
            let tol = if l < 5e-3 { 1e-5 } else { 1e-3 };
            assert!((f - f0).abs() < tol, "{family}, L = {l}: {f} vs {f0}");
        }
    }
}
