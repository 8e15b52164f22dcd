use std::fs;
use std::process::Command;

use twophoton::{closed_form_probabilities, uniform_grid, Occupations, PulseEnvelope, PumpScheme};
use twophoton_cli::fitcmd::read_series;
use twophoton_cli::{
    convergence_sweep, fit_column, format_fit, oracle_eval, preset, run_scenario, write_atomic,
    CliError, FitRequest, Formula, InitialState, OracleParams, ScenarioConfig,
};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_twophoton"))
}

fn column(csv: &str, name: &str) -> Vec<f64> {
    read_series(csv, name).unwrap().1
}

#[test]
fn fig2_probabilities_match_closed_form() {
    let cfg = preset("fig2").unwrap();
    let csv = run_scenario(&cfg).unwrap();
    let t = column(&csv, "t");
    assert_eq!(t.len(), 401);
    let p20 = column(&csv, "P_0_0_2");
    let p11 = column(&csv, "P_1_1_0");
    let p10 = column(&csv, "P_0_0_1");
    let p1 = column(&csv, "P_1_0_0");
    for i in 0..t.len() {
        let c = closed_form_probabilities(t[i], 1.0, 0.1, 0.0).unwrap();
        assert!((p20[i] - c.p_20).abs() < 1e-6);
        assert!((p11[i] - c.p_11).abs() < 1e-6);
        assert!((p10[i] - c.p_10).abs() < 1e-6);
        assert!((p1[i] - c.p_1_single).abs() < 1e-6);
    }
}

fn small_driven() -> ScenarioConfig {
    let mut cfg = preset("fig4").unwrap();
    cfg.model.n_max = 4;
    cfg.t_max = 2.0;
    cfg.dt_out = 0.1;
    cfg.audit_positivity = true;
    cfg
}

#[test]
fn header_and_undefined_g2() {
    let csv = run_scenario(&small_driven()).unwrap();
    let mut lines = csv.lines();
    assert_eq!(
        lines.next().unwrap(),
        "t,N0,N1,N2,g2_0,g2_1,g2_2,P_0_0_2,P_1_1_0,trace_err,min_eig"
    );
    let first: Vec<&str> = lines.next().unwrap().split(',').collect();
    assert_eq!(&first[4..7], &["", "", ""]);
    let second: Vec<&str> = lines.next().unwrap().split(',').collect();
    assert!(second.iter().all(|f| !f.is_empty()));
    // 17 significant digits in scientific notation.
    assert_eq!(second[1].split('e').next().unwrap().len(), 18);
}

#[test]
fn output_groups_select_columns() {
    let mut cfg = small_driven();
    cfg.outputs.g2 = false;
    cfg.outputs.probabilities = false;
    cfg.audit_positivity = false;
    let csv = run_scenario(&cfg).unwrap();
    assert_eq!(csv.lines().next().unwrap(), "t,N0,N1,N2,trace_err");
}

#[test]
fn repeated_runs_are_bit_identical() {
    let cfg = small_driven();
    assert_eq!(run_scenario(&cfg).unwrap(), run_scenario(&cfg).unwrap());
}

#[test]
fn atomic_write_replaces_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("nested").join("out.csv");
    write_atomic(&path, "a\n").unwrap();
    write_atomic(&path, "b\n").unwrap();
    assert_eq!(fs::read_to_string(&path).unwrap(), "b\n");
    let entries: Vec<_> = fs::read_dir(path.parent().unwrap()).unwrap().collect();
    assert_eq!(entries.len(), 1);
}

#[test]
fn undriven_pair_is_cutoff_independent() {
    let mut cfg = preset("fig2").unwrap();
    cfg.t_max = 5.0;
    let rows = convergence_sweep(&cfg, &[2, 4]).unwrap();
    assert_eq!(rows.len(), 2);
    for r in &rows {
        assert!(r.max_deviation() < 1e-12, "{r:?}");
    }
}

#[test]
fn vacuum_is_cutoff_independent() {
    let cfg = ScenarioConfig {
        t_max: 3.0,
        ..ScenarioConfig::default()
    };
    let rows = convergence_sweep(&cfg, &[2, 3, 5]).unwrap();
    assert!(rows.iter().all(|r| r.max_deviation() == 0.0));
    assert!(matches!(
        convergence_sweep(&cfg, &[3]),
        Err(CliError::Input(_))
    ));
}

#[test]
fn oracle_tables() {
    let grid = uniform_grid(10.0, 0.5).unwrap();
    let p = OracleParams::default();

    let eq7 = oracle_eval(Formula::Eq7, &p, &grid).unwrap();
    assert_eq!(column(&eq7, "P_0_0_2")[0], 1.0);

    let eq8 = oracle_eval(Formula::Eq8, &p, &grid).unwrap();
    let (t, n0, n1) = (column(&eq8, "t"), column(&eq8, "N0"), column(&eq8, "N1"));
    for i in 0..t.len() {
        assert!((n0[i] + 2.0 * n1[i] - 2.0 * (-0.2 * t[i]).exp()).abs() < 1e-13);
    }

    let n1 = column(&oracle_eval(Formula::Eq9, &p, &grid).unwrap(), "N1");
    let n0 = column(&oracle_eval(Formula::Eq10, &p, &grid).unwrap(), "N0");
    for (a, b) in n1.iter().zip(&n0).skip(1) {
        assert!((b / a - 4.0).abs() < 1e-12);
    }

    let eig = oracle_eval(Formula::Eigensystem, &p, &[]).unwrap();
    assert_eq!(eig.lines().count(), 3);
    assert!("eq11".parse::<Formula>().is_err());
}

#[test]
fn fit_command_recovers_synthetic_series() {
    let omega = 8f64.sqrt();
    let mut csv = String::from("t,N1\n");
    for t in uniform_grid(30.0, 0.05).unwrap() {
        let y = 0.5 * (1.0 + 0.3 * (-0.1 * t).exp() * (0.5 * omega * t + 0.4).cos());
        csv.push_str(&format!("{t:.16e},{y:.16e}\n"));
    }
    let req = FitRequest {
        column: "N1".into(),
        omega,
        free_omega: false,
        gamma_scale: 0.1,
        t_min: 0.0,
    };
    let fit = fit_column(&csv, &req).unwrap();
    assert!((fit.b1 - 0.3).abs() < 0.01, "{fit:?}");
    let report = format_fit(&fit);
    assert!(report.starts_with("b1,alpha1,phi1,b2,alpha2,phi2,omega_fit,residual_rms,dominant\n"));
    assert!(report.trim_end().ends_with(",half_omega"));

    let missing = FitRequest {
        column: "N7".into(),
        ..req
    };
    assert!(matches!(
        fit_column(&csv, &missing),
        Err(CliError::Input(_))
    ));
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("o.csv");

    let bad = dir.path().join("bad.cfg");
    fs::write(&bad, "gamma = 0.1\nn_max = ten\n").unwrap();
    let st = bin()
        .args(["simulate", "--config"])
        .arg(&bad)
        .arg("--out")
        .arg(&out)
        .output()
        .unwrap();
    assert_eq!(st.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&st.stderr).contains("line 2"));

    let loose = dir.path().join("loose.cfg");
    fs::write(
        &loose,
        "scheme = pump0\nenvelope.f0 = 3\nn_max = 3\nt_max = 5\ntol = 0.5\n",
    )
    .unwrap();
    let st = bin()
        .args(["simulate", "--audit-positivity", "--config"])
        .arg(&loose)
        .arg("--out")
        .arg(&out)
        .output()
        .unwrap();
    assert_eq!(st.status.code(), Some(3));
    assert!(!out.exists());

    let flat = dir.path().join("flat.csv");
    fs::write(&flat, "t,N1\n0,1\n1,1\n").unwrap();
    let st = bin()
        .args(["fit", "--column", "N1", "--omega", "2.8", "--in"])
        .arg(&flat)
        .arg("--out")
        .arg(&out)
        .output()
        .unwrap();
    assert_eq!(st.status.code(), Some(2));

    let e = CliError::from(twophoton::Error::FitNotConverged { best_rms: 0.1 });
    assert_eq!(e.exit_code(), 4);

    let st = bin().args(["presets", "fig6"]).output().unwrap();
    assert_eq!(st.status.code(), Some(0));
    let cfg = ScenarioConfig::parse(&String::from_utf8(st.stdout).unwrap()).unwrap();
    assert_eq!(cfg, preset("fig6").unwrap());
}

#[test]
fn simulate_writes_csv_through_binary() {
    let dir = tempfile::tempdir().unwrap();
    let cfg_path = dir.path().join("s.cfg");
    let mut cfg = ScenarioConfig {
        initial: InitialState::Fock(Occupations::new(0, 0, 2)),
        t_max: 1.0,
        dt_out: 0.5,
        probabilities: vec![Occupations::new(0, 0, 2)],
        ..ScenarioConfig::default()
    };
    cfg.model.n_max = 2;
    cfg.model.scheme = PumpScheme::None;
    cfg.model.envelope = PulseEnvelope::off();
    fs::write(&cfg_path, cfg.to_config_string()).unwrap();
    let out = dir.path().join("traj.csv");
    let st = bin()
        .args(["simulate", "--config"])
        .arg(&cfg_path)
        .arg("--out")
        .arg(&out)
        .status()
        .unwrap();
    assert!(st.success());
    assert_eq!(
        fs::read_to_string(&out).unwrap(),
        run_scenario(&cfg).unwrap()
    );
}
