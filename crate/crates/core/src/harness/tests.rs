use super::*;
use crate::sampling::draw_uniform;

fn small_config() -> ExperimentConfig {
    ExperimentConfig {
        n: 3,
        r: 1,
        gamma: 0.1,
        noise: NoiseModel::Gaussian { sigma: 0.01 },
        scheme: SchemeKind::UniformWithoutReplacement,
        m_values: vec![40, 20],
        trials: 3,
        seed: 99,
        solver: SolverSettings {
            base: SolverConfig {
                max_iter: 300,
                ..SolverConfig::default()
            },
            ..SolverSettings::default()
        },
        certify: Some(CertifyParams { delta2: 0.0, mu: 2.0 }),
    }
}

fn csv_bytes(cfg: &ExperimentConfig, workers: usize) -> Vec<u8> {
    let mut sink = CsvSink::new(Vec::new());
    run_sweep_with(cfg, RunOptions { workers, timing: false }, |r| sink.write(r)).unwrap();
    sink.finish().unwrap()
}

#[test]
fn child_seeds_are_distinct() {
    let mut seen = std::collections::HashSet::new();
    for m in 0..20 {
        for t in 0..20 {
            for s in [stage::STATE, stage::SCHEME, stage::MEASURE] {
                assert!(seen.insert(child_seed(7, m, t, s)));
            }
        }
    }
    assert_eq!(child_seed(7, 3, 4, 1), child_seed(7, 3, 4, 1));
    assert_ne!(child_seed(7, 3, 4, 1), child_seed(8, 3, 4, 1));
}

#[test]
fn settings_resolution() {
    let rho = random_rank_r_state(8, 1, 1).unwrap();
    let rec = measure(&rho, &draw_uniform(3, 10, false, 2).unwrap(), NoiseModel::Gaussian { sigma: 0.02 }, 3).unwrap();
    let cfg = SolverSettings::default().resolve(&rec);
    assert!((cfg.delta_band - 0.06).abs() < 1e-15);
    assert_eq!(cfg.path, SolverPath::Dense);
    let hyb = measure(&rho, &draw_hybrid(3, 2, 2).unwrap(), NoiseModel::Exact, 3).unwrap();
    let cfg = SolverSettings::default().resolve(&hyb);
    assert_eq!(cfg.delta_band, 0.0);
    assert_eq!(cfg.path, SolverPath::Sparse);
    let fixed = SolverSettings {
        band: BandPolicy::Fixed(0.5),
        path: PathPolicy::Fixed(SolverPath::Dense),
        ..SolverSettings::default()
    };
    let cfg = fixed.resolve(&hyb);
    assert_eq!((cfg.delta_band, cfg.path), (0.5, SolverPath::Dense));
}

#[test]
fn config_validation() {
    assert!(small_config().validate().is_ok());
    let cases: Vec<Box<dyn Fn(&mut ExperimentConfig)>> = vec![
        Box::new(|c| c.n = 0),
        Box::new(|c| c.r = 9),
        Box::new(|c| c.gamma = 1.5),
        Box::new(|c| c.m_values.clear()),
        Box::new(|c| c.m_values = vec![65]),
        Box::new(|c| {
            c.scheme = SchemeKind::Hybrid;
            c.m_values = vec![9];
        }),
        Box::new(|c| c.trials = 0),
        Box::new(|c| c.solver.band = BandPolicy::Fixed(-1.0)),
        Box::new(|c| c.certify = Some(CertifyParams { delta2: 0.0, mu: 0.5 })),
        Box::new(|c| c.noise = NoiseModel::Born { shots: 0 }),
    ];
    for (k, edit) in cases.iter().enumerate() {
        let mut cfg = small_config();
        edit(&mut cfg);
        assert!(cfg.validate().is_err(), "case {k}");
    }
    let mut with = small_config();
    with.scheme = SchemeKind::UniformWithReplacement;
    with.m_values = vec![1000];
    assert!(with.validate().is_ok());
}

#[test]
fn sweep_is_canonical_and_reproducible() {
    let cfg = small_config();
    let a = csv_bytes(&cfg, 1);
    let b = csv_bytes(&cfg, 3);
    assert_eq!(a, b);
    let rows = read_rows(a.as_slice()).unwrap();
    let keys: Vec<(usize, usize)> = rows.iter().map(|r| (r.m, r.trial)).collect();
    assert_eq!(keys, vec![(20, 0), (20, 1), (20, 2), (40, 0), (40, 1), (40, 2)]);
    for r in &rows {
        assert_eq!(r.status, RowStatus::Ok);
        assert!(r.wall_time_seconds.is_none());
        assert_eq!(r.psd_audit, Some(true));
        assert!(r.cert_t.is_some());
        assert!((r.delta_band.unwrap() - 0.03).abs() < 1e-15);
        assert!((r.m_scaled - r.m as f64 / (8.0 * 9.0)).abs() < 1e-12);
    }
    let header = String::from_utf8(a).unwrap().lines().next().unwrap().to_string();
    assert!(header.starts_with("n,r,gamma,noise,scheme,seed,trial,m,s,m_scaled,status,reason,fidelity,trace_distance"));
}

#[test]
fn rows_depend_only_on_config_and_trial() {
    let cfg = small_config();
    let rows = run_sweep(&cfg).unwrap();
    let again = run_trial(&cfg, 40, 1, false).row;
    assert_eq!(rows.iter().find(|r| r.m == 40 && r.trial == 1).unwrap(), &again);
}

#[test]
fn fully_sampled_sweep_is_exact() {
    let cfg = ExperimentConfig {
        n: 4,
        r: 2,
        gamma: 0.0,
        noise: NoiseModel::Exact,
        scheme: SchemeKind::UniformWithoutReplacement,
        m_values: vec![256],
        trials: 2,
        seed: 5,
        solver: SolverSettings {
            base: SolverConfig {
                stop_tol: 1e-9,
                ..SolverConfig::default()
            },
            ..SolverSettings::default()
        },
        certify: None,
    };
    for row in run_sweep(&cfg).unwrap() {
        assert!(row.fidelity.unwrap() >= 1.0 - 1e-6, "{row:?}");
        assert_eq!(row.converged, Some(true));
        assert!(row.cert_t.is_none());
    }
}

#[test]
fn failed_rows_serialize_without_metrics() {
    let mut row = run_trial(&small_config(), 20, 0, true).row;
    assert!(row.wall_time_seconds.is_some());
    row.fail(&TomoError::InvalidInput("boom, with a comma".into()));
    row.validate().unwrap();
    let mut sink = CsvSink::new(Vec::new());
    sink.write(&row).unwrap();
    let text = String::from_utf8(sink.finish().unwrap()).unwrap();
    let line = text.lines().nth(1).unwrap();
    assert!(line.contains(",failed,\"invalid input: boom, with a comma\","), "{line}");
    let back = read_rows(text.as_bytes()).unwrap();
    assert_eq!(back, vec![row]);
}

#[test]
fn rows_with_nonfinite_numbers_are_refused() {
    let mut row = run_trial(&small_config(), 20, 0, false).row;
    row.max_residual = Some(f64::NAN);
    assert!(CsvSink::new(Vec::new()).write(&row).is_err());
    row.max_residual = Some(0.1);
    row.fidelity = Some(1.5);
    assert!(row.validate().is_err());
}

#[test]
fn ion_profile_shape() {
    let p = ion_profile(256).unwrap();
    assert_eq!(p.dim(), 256);
    assert!((p.tail_weight(11) - 0.01).abs() < 1e-12);
    assert!((1.0 - p.tail_weight(3) - 0.905).abs() < 1e-12);
}

#[test]
fn full_emulation_matches_truncation_oracle() {
    let head = [0.6, 0.2, 0.1, 0.05, 0.03];
    let profile = SpectrumProfile::with_flat_tail(16, &head).unwrap();
    let spec = EmulationSpec {
        profile: profile.clone(),
        fraction: 1.0,
        stderr_target: 0.0,
        r_approx: 3,
        seed: 4,
        solver: SolverSettings {
            base: SolverConfig {
                stop_tol: 1e-10,
                ..SolverConfig::default()
            },
            ..SolverSettings::default()
        },
    };
    let out = run_experimental_emulation(&spec, false).unwrap();
    // both states share an eigenbasis, so the fidelity is the kept weight
    let oracle: f64 = profile.values()[..3].iter().sum();
    assert!((out.row.fidelity.unwrap() - oracle).abs() < 1e-6);
    assert_eq!(out.row.m, 256);
    assert_eq!(out.row.noise, "exact");
    let again = run_experimental_emulation(&spec, false).unwrap();
    assert_eq!(again.row, out.row);
}

#[test]
fn emulation_noise_calibration() {
    let spec = EmulationSpec {
        profile: ion_profile(16).unwrap(),
        fraction: 0.5,
        stderr_target: 3.0 / 16.0,
        r_approx: 3,
        seed: 1,
        solver: SolverSettings {
            base: SolverConfig {
                max_iter: 50,
                ..SolverConfig::default()
            },
            ..SolverSettings::default()
        },
    };
    let out = run_experimental_emulation(&spec, false).unwrap();
    assert_eq!(out.row.noise, "born(29)");
    assert_eq!(out.row.m, 128);
    assert!(run_experimental_emulation(&EmulationSpec { fraction: 0.0, ..spec.clone() }, false).is_err());
    assert!(run_experimental_emulation(&EmulationSpec { r_approx: 17, ..spec }, false).is_err());
}

#[test]
fn rank_scan_examples() {
    let rho = random_rank_r_state(16, 1, 3).unwrap();
    let scheme = draw_uniform(4, 256, false, 4).unwrap();
    let rec = measure(&rho, &scheme, NoiseModel::Exact, 5).unwrap();
    let settings = SolverSettings::default();
    let scan = rank_scan(&rec, &[256], &settings).unwrap();
    assert_eq!(scan.first_converged, Some(256));
    assert!(scan.solution.unwrap().converged);

    assert!(rank_scan(&rec, &[], &settings).is_err());
    assert!(rank_scan(&rec, &[20, 10], &settings).is_err());
    assert!(rank_scan(&rec, &[300], &settings).is_err());

    let quick = SolverSettings {
        base: SolverConfig {
            max_iter: 400,
            ..SolverConfig::default()
        },
        ..SolverSettings::default()
    };
    let scan = rank_scan(&rec, &[16, 64, 256], &quick).unwrap();
    assert_eq!(scan.steps.len(), 3);
    assert_eq!(scan.steps.iter().map(|s| s.m).collect::<Vec<_>>(), vec![16, 64, 256]);
    assert!(scan.steps[2].converged);
}

#[test]
fn report_fields() {
    let rho = random_rank_r_state(8, 1, 3).unwrap();
    let rec = measure(&rho, &draw_uniform(3, 64, false, 1).unwrap(), NoiseModel::Exact, 2).unwrap();
    let cfg = SolverSettings::default().resolve(&rec);
    let res = svt_solve(&rec, &cfg).unwrap();
    let rep = ReconstructionReport::new(&rec, &cfg, &res);
    assert_eq!((rep.n, rep.dim, rep.m), (3, 8, 64));
    assert_eq!(rep.leading_eigenvalues.len(), 8);
    assert!((rep.purity - 1.0).abs() < 1e-6);
    let json = serde_json::to_string(&rep).unwrap();
    let back: ReconstructionReport = serde_json::from_str(&json).unwrap();
    assert_eq!(back, rep);
}
