use mmba::array::{grid_sin, Angle, ArraySize};
use mmba::channel::{Mpc, MpcSet};
use mmba::codebook::{assemble_b, generate_codebook, Side};
use mmba::estimate::{detect_strongest, nnls_solve, NnlsOptions};
use mmba::harness::{detection_curve, sweep, Estimator, ExperimentConfig, SweepAxis};
use mmba::measure::{assemble_measurements, beam_gains, expected_power, PowerConfig};

fn size(n: usize) -> ArraySize {
    ArraySize::new(n).unwrap()
}

/// Feed exact mean powers of an on-grid two-path channel through `B` and NNLS.
#[test]
fn mean_powers_recover_the_strongest_bin() {
    let (bs, ue) = (size(8), size(8));
    let (m, n, slots) = (2, 2, 24);
    let mpcs = MpcSet::new(vec![
        Mpc::new(Angle::from_sin(grid_sin(bs, 6)).unwrap(), Angle::from_sin(grid_sin(ue, 2)).unwrap(), 0.0, 1.0).unwrap(),
        Mpc::new(Angle::from_sin(grid_sin(bs, 1)).unwrap(), Angle::from_sin(grid_sin(ue, 5)).unwrap(), 0.0, 0.5).unwrap(),
    ])
    .unwrap();
    let power = PowerConfig { snr_bbf: 1.0, noise_var: 0.8, n0: 1.0, p_tot: 1.0, p_dim: 0.25 };
    let bs_cb = generate_codebook(1, slots, m, 8, 2, Side::Bs).unwrap();
    let ue_cb = generate_codebook(2, slots, n, 8, 2, Side::Ue).unwrap();
    let coeffs = mpcs.beamspace(bs, ue);
    let mut q = Vec::new();
    for s in 0..slots {
        for i in 0..m {
            for j in 0..n {
                let g = beam_gains(&coeffs, bs_cb.support(s, i), ue_cb.support(s, j));
                q.push(expected_power(&mpcs, &g, &power, n));
            }
        }
    }
    let q = assemble_measurements(q, m, n, slots).unwrap();
    let b = assemble_b(&bs_cb, &ue_cb, slots).unwrap();
    let sol = nnls_solve(&b, &q, power.noise_var, &NnlsOptions::default()).unwrap();
    let det = detect_strongest(&sol.gamma, ue).unwrap();
    assert_eq!(det.flat_index, mpcs.ground_truth(bs, ue).flatten(ue));
    let fitted = b.to_dense() * &sol.gamma;
    for (f, qv) in fitted.iter().zip(q.values()) {
        assert!((f + power.noise_var - qv).abs() < 1e-8 * qv);
    }
}

#[test]
fn overwhelming_noise_falls_to_the_guessing_floor() {
    let cfg = ExperimentConfig {
        bs_antennas: 8,
        ue_antennas: 8,
        kappa_u: 2,
        kappa_v: 2,
        snr_bbf_db: -90.0,
        t_max: 3,
        trials: 300,
        ..ExperimentConfig::desk()
    };
    let curve = detection_curve(&cfg).unwrap();
    // Floor is 1/64; allow several standard errors.
    assert!(curve.final_p_d() < 1.0 / 64.0 + 4.0 * (1.0f64 / 64.0 / 300.0).sqrt(), "{}", curve.final_p_d());
}

#[test]
fn users_do_not_change_the_broadcast_curve() {
    let cfg = ExperimentConfig { trials: 6, t_max: 8, estimator: Estimator::Nnls, ..ExperimentConfig::desk() };
    let curves = sweep(&cfg, &SweepAxis::Users(vec![3, 40])).unwrap();
    let nnls: Vec<_> = curves.iter().filter(|c| c.estimator == "nnls").collect();
    assert_eq!(nnls[0].p_d, nnls[1].p_d);
    let bis: Vec<_> = curves.iter().filter(|c| c.estimator == "bisection").collect();
    assert_eq!(bis[0].p_d[7], 2.0 / 3.0);
    assert_eq!(bis[1].p_d[7], 2.0 / 40.0);
}

#[test]
fn config_file_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("cfg.toml");
    let cfg = ExperimentConfig { alpha: 0.5, path_gains: vec![1.0, 0.3], trials: 17, ..ExperimentConfig::desk() };
    std::fs::write(&path, cfg.to_toml_string().unwrap()).unwrap();
    let back = ExperimentConfig::from_file(&path, &ExperimentConfig::paper()).unwrap();
    assert_eq!(back, cfg);
    assert_eq!(back.config_hash(), cfg.config_hash());
}
