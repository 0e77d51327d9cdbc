use qrm::experiments::PRESET_NAMES;
use qrm::*;

fn preset(name: &str, gamma: f64) -> ExperimentPreset {
    ExperimentPreset {
        gamma,
        ..ExperimentPreset::named(name).unwrap()
    }
}

#[test]
fn minimizer_never_exceeds_the_starting_value() {
    let presets: Vec<_> = PRESET_NAMES.iter().map(|n| ExperimentPreset::named(n).unwrap()).collect();
    let reports = experiments::parallel_map(&presets, 5, |p| run_experiment(p, 1).unwrap());
    for r in reports {
        assert_eq!(r.history.iterations(), 300, "{}", r.preset.name);
        assert!(r.breakdown.total <= r.zero_breakdown.total, "{}", r.preset.name);
        assert_eq!(Some(r.breakdown.total), r.history.final_j());
        assert_eq!(r.history.records[0].j_value, r.zero_breakdown.total);
    }
}

#[test]
fn runs_are_bit_reproducible() {
    let p = ExperimentPreset {
        iters: 40,
        ..preset("test3", 0.25)
    };
    let a = run_experiment(&p, 9).unwrap();
    let b = run_experiment(&p, 9).unwrap();
    assert_eq!(a.reconstruction, b.reconstruction);
    assert_eq!(a.history, b.history);
    assert_eq!(a.breakdown, b.breakdown);
    let c = run_experiment(&p, 10).unwrap();
    assert_ne!(a.reconstruction, c.reconstruction);
}

#[test]
fn penalty_raises_the_reconstructed_extremes() {
    for (name, check_min) in [("test1", true), ("test5", false)] {
        let on = preset(name, 0.05);
        let off = ExperimentPreset {
            ablate_init_penalty: true,
            ..on.clone()
        };
        for seed in [1, 2] {
            let (a, b) = (run_experiment(&on, seed).unwrap(), run_experiment(&off, seed).unwrap());
            assert!(a.metrics.max_value >= b.metrics.max_value, "{name} seed {seed}");
            if check_min {
                assert!(a.metrics.min_value <= b.metrics.min_value, "{name} seed {seed}");
            }
            assert_eq!(b.weights.w_init, 0.0);
        }
    }
}

#[test]
fn single_level_sweep_matches_a_run() {
    let p = ExperimentPreset {
        iters: 30,
        ..preset("test3", 0.25)
    };
    let sweep = noise_sweep(&p, &[0.25], &[4], 2).unwrap();
    let run = run_experiment(&p, 4).unwrap();
    assert_eq!(sweep.rows.len(), 1);
    assert_eq!(sweep.rows[0].rel_l2_error, run.metrics.rel_l2_error);
    assert_eq!(sweep.rows[0].max_value, run.metrics.max_value);
}

#[test]
fn sweep_rows_do_not_depend_on_worker_count() {
    let p = ExperimentPreset {
        iters: 20,
        ..preset("test3", 0.25)
    };
    let gammas = [0.05, 0.5];
    let seeds = [1, 2, 3];
    let serial = noise_sweep(&p, &gammas, &seeds, 1).unwrap();
    let parallel = noise_sweep(&p, &gammas, &seeds, 4).unwrap();
    assert_eq!(serial, parallel);
    assert_eq!(serial.rows.len(), 6);
    assert_eq!(serial.mean_errors().len(), 2);
}

#[test]
fn noisy_data_respects_the_multiplicative_bound() {
    let p = preset("test1", 0.5);
    let sim = simulate(&p, 5).unwrap();
    for seg in BoundarySegment::ALL {
        let (c, n) = (sim.clean.segment(seg), sim.noisy.segment(seg));
        for (a, b) in c.f.iter().chain(&c.g).zip(n.f.iter().chain(&n.g)) {
            assert!((a - b).abs() <= 0.5 * a.abs());
        }
    }
    assert!(sim.noisy.segment(BoundarySegment::Gamma3).is_zero());
    assert!(sim.noisy.segment(BoundarySegment::Gamma4).is_zero());
}

#[test]
fn psi_problem_descends_and_yields_signed_velocity() {
    // With φ = 0 the reconstructed velocity is read from the first two levels.
    let p = ExperimentPreset {
        iters: 60,
        ..preset("test2", 0.0)
    };
    let r = run_experiment(&p, 1).unwrap();
    assert_eq!(r.preset.kind, ProblemKind::PsiProblem);
    assert!(r.metrics.max_value > 0.0 && r.metrics.min_value < 0.0);
    assert!(r.breakdown.total < r.zero_breakdown.total);
}
