use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use furry_cli::commands::{cmd_converge, cmd_nbody, cmd_one_particle, cmd_validate, CommandError};
use furry_cli::config::RunConfig;
use furry_cli::report::parse_convergence_csv;

fn furry(args: &[&str], config: Option<&Path>, out: &Path) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_furry"));
    cmd.args(args)
        .arg("--output")
        .arg(out)
        .args(["--threads", "1"]);
    if let Some(path) = config {
        cmd.arg("--config").arg(path);
    }
    cmd.output().expect("binary runs")
}

fn write_config(dir: &Path, text: &str) -> std::path::PathBuf {
    let path = dir.join("run.toml");
    fs::write(&path, text).unwrap();
    path
}

fn small() -> RunConfig {
    RunConfig {
        gamma_list: vec![0.1, 0.3],
        series_order: 6,
        n_plus: 4,
        ..RunConfig::default()
    }
}

#[test]
fn coarse_grid_fails_sommerfeld_with_exit_one() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "n = 8\n");
    let out = furry(&["validate"], Some(&cfg), &tmp.path().join("out"));
    assert_eq!(out.status.code(), Some(1));
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("sommerfeld_level"), "{stderr}");
    assert!(tmp.path().join("out/validation.csv").exists());
}

#[test]
fn config_errors_exit_two() {
    let tmp = tempfile::tempdir().unwrap();
    for text in ["gamma_list = [0.1, 0.7]\n", "tol_gapp = 1e-6\n", "n = -3\n"] {
        let cfg = write_config(tmp.path(), text);
        let out = furry(&["validate"], Some(&cfg), &tmp.path().join("out"));
        assert_eq!(out.status.code(), Some(2), "{text}");
    }
    let cfg = write_config(tmp.path(), "gamma_list = []\n");
    let out = furry(&["converge"], Some(&cfg), &tmp.path().join("out"));
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("nothing to do"));
}

#[test]
fn dimension_cap_is_a_config_error() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = RunConfig {
        n_particles: 4,
        n_plus: 20,
        ..small()
    };
    let err = cmd_nbody(&cfg, tmp.path()).unwrap_err();
    assert!(
        matches!(
            err,
            CommandError::Core(furry_core::Error::DimensionCap { .. })
        ),
        "{err}"
    );
    assert_eq!(err.exit_code(), 2);
    assert!(fs::read_dir(tmp.path()).unwrap().next().is_none());
}

#[test]
fn default_validation_passes() {
    let tmp = tempfile::tempdir().unwrap();
    let report = cmd_validate(&RunConfig::default(), tmp.path()).unwrap();
    assert!(report.verdict().is_ok(), "{:?}", report.first_failure());
    let json = fs::read_to_string(tmp.path().join("validation.json")).unwrap();
    assert!(json.contains(&RunConfig::default().hash()));
}

#[test]
fn free_coupling_has_identity_unitary() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = RunConfig {
        gamma_list: vec![0.0, 0.3],
        ..RunConfig::default()
    };
    let rows = cmd_one_particle(&cfg, tmp.path()).unwrap();
    assert!(rows[0].unitarity <= 1e-12 && rows[0].intertwining <= 1e-12);
    assert!(rows[1].relative_error <= 1e-3);
    let header = fs::read_to_string(tmp.path().join("one_particle.csv")).unwrap();
    assert!(header.lines().next().unwrap().contains("relative_error"));
}

#[test]
fn single_particle_nbody_matches_one_particle_spectrum() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = RunConfig {
        n_particles: 1,
        ..small()
    };
    let nbody = cmd_nbody(&cfg, &tmp.path().join("nb")).unwrap();
    let ops = furry_core::dirac::ChannelOperators::new(
        &furry_core::dirac::build_channel_grid(cfg.kappa, cfg.n, cfg.map_scale).unwrap(),
    );
    for (i, &gamma) in cfg.gamma_list.iter().enumerate() {
        let positive = ops.assemble(gamma).unwrap().positive_eigenvalues();
        for (a, b) in nbody.spectra[i].iter().zip(&positive) {
            assert!((a - b).abs() <= 1e-10, "gamma {gamma}: {a} vs {b}");
        }
    }
}

#[test]
fn antisymmetric_spectrum_is_a_sub_multiset() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = RunConfig {
        gamma_list: vec![0.3],
        ..small()
    };
    let full = cmd_nbody(&cfg, &tmp.path().join("full")).unwrap();
    let anti = cmd_nbody(
        &RunConfig {
            antisymmetrize: true,
            ..cfg.clone()
        },
        &tmp.path().join("anti"),
    )
    .unwrap();
    let mut pool = full.spectra[0].clone();
    assert_eq!(anti.spectra[0].len(), 6);
    for x in &anti.spectra[0] {
        let pos = pool
            .iter()
            .position(|y| (x - y).abs() <= 1e-9)
            .unwrap_or_else(|| panic!("{x} missing from the unrestricted spectrum"));
        pool.remove(pos);
    }
    // lowest eigenvalue of the truncations settles monotonically after k = 3
    let lowest = &full.series_lowest[0];
    let err: Vec<f64> = lowest
        .iter()
        .map(|x| (x - full.spectra[0][0]).abs())
        .collect();
    assert!(
        err[3..].windows(2).all(|w| w[1] <= w[0] || w[1] < 1e-10),
        "{err:?}"
    );
}

#[test]
fn converge_tables_round_trip_and_end_at_the_smallest_distance() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = small();
    let output = cmd_converge(&cfg, tmp.path()).unwrap();
    assert_eq!(output.reports.len(), 2);
    for report in &output.reports {
        let bytes = fs::read(
            tmp.path()
                .join(format!("converge_n{}.csv", report.n_particles)),
        )
        .unwrap();
        assert_eq!(parse_convergence_csv(&bytes).unwrap(), report.rows);
        let json = fs::read_to_string(
            tmp.path()
                .join(format!("converge_n{}.json", report.n_particles)),
        )
        .unwrap();
        assert!(json.contains(&cfg.hash()));
        for gamma in report.gammas() {
            let rows = report.rows_for(gamma);
            assert!(rows
                .iter()
                .all(|r| r.fitted_ratio < 1.0 && r.resolvent_distance >= 0.0));
            let last = rows.last().unwrap().resolvent_distance;
            let best = rows
                .iter()
                .map(|r| r.resolvent_distance)
                .fold(f64::INFINITY, f64::min);
            assert!(last <= best + 1e-12, "gamma {gamma}: {last} vs {best}");
        }
        let keys: Vec<(f64, usize)> = report.rows.iter().map(|r| (r.gamma, r.k)).collect();
        assert!(keys.windows(2).all(|w| w[0] < w[1]));
    }
}

#[test]
fn repeated_single_threaded_runs_are_byte_identical() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "gamma_list = [0.0, 0.3]\n");
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    assert!(furry(&["one-particle"], Some(&cfg), &a).status.success());
    assert!(furry(&["one-particle"], Some(&cfg), &b).status.success());
    for name in [
        "one_particle.csv",
        "one_particle.json",
        "spectrum_0.csv",
        "spectrum_1.json",
    ] {
        assert_eq!(
            fs::read(a.join(name)).unwrap(),
            fs::read(b.join(name)).unwrap(),
            "{name}"
        );
    }
}
