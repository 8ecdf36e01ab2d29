use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn couplesim(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_couplesim"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn small_config(dir: &Path) -> String {
    let path = dir.join("small.conf");
    fs::write(
        &path,
        "# trimmed grid\nrobot_counts = 1, 3\ngaps_mm = 20:60:20\nheadings_deg = 0, 20\nheight_diffs_mm = 6\nreps = 3\n",
    )
    .unwrap();
    path.to_string_lossy().into_owned()
}

fn read(dir: &Path, name: &str) -> Vec<u8> {
    fs::read(dir.join(name)).unwrap_or_else(|e| panic!("{name}: {e}"))
}

#[test]
fn validate_passes() {
    let out = couplesim(&["validate"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("PASS reference gear train at 52 rad/s"));
    assert!(!text.contains("FAIL"));
}

#[test]
fn sweep_output_independent_of_jobs() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = small_config(tmp.path());
    let a = tmp.path().join("a");
    let b = tmp.path().join("b");
    for (dir, jobs) in [(&a, "1"), (&b, "3")] {
        let out = couplesim(&[
            "sweep",
            "--config",
            &cfg,
            "--out",
            dir.to_str().unwrap(),
            "--seed",
            "9",
            "--jobs",
            jobs,
        ]);
        assert!(
            out.status.success(),
            "{}",
            String::from_utf8_lossy(&out.stderr)
        );
    }
    for name in ["trials.csv", "fig8a.csv", "fig8b.csv", "fig8c.csv"] {
        assert_eq!(read(&a, name), read(&b, name), "{name}");
    }
    let trials = String::from_utf8(read(&a, "trials.csv")).unwrap();
    assert_eq!(
        trials.lines().next().unwrap(),
        "trial_id,n_robots,gap_mm,heading_deg,height_diff_mm,rep,seed,outcome,tip_drop_mm,com_margin_mm"
    );
    assert_eq!(trials.lines().count(), 1 + 2 * 3 * 2 * 3);
}

#[test]
fn seed_changes_trial_seeds() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = small_config(tmp.path());
    let run = |seed: &str, dir: &str| {
        let d = tmp.path().join(dir);
        assert!(couplesim(&[
            "sweep",
            "--config",
            &cfg,
            "--out",
            d.to_str().unwrap(),
            "--seed",
            seed
        ])
        .status
        .success());
        read(&d, "trials.csv")
    };
    assert_ne!(run("1", "s1"), run("2", "s2"));
}

#[test]
fn unknown_config_key_fails() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("bad.conf");
    fs::write(&cfg, "gap_width = 60\n").unwrap();
    let out = couplesim(&[
        "sweep",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        tmp.path().to_str().unwrap(),
    ]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("gap_width"));
}

#[test]
fn missing_config_file_fails() {
    let tmp = tempfile::tempdir().unwrap();
    let out = couplesim(&[
        "scenario",
        "--config",
        "/nonexistent/x.conf",
        "--out",
        tmp.path().to_str().unwrap(),
    ]);
    assert!(!out.status.success());
}

#[test]
fn hooks_report_ordering() {
    let tmp = tempfile::tempdir().unwrap();
    let out = couplesim(&["characterize-hooks", "--out", tmp.path().to_str().unwrap()]);
    assert!(out.status.success());
    let text = String::from_utf8(read(tmp.path(), "fig7.csv")).unwrap();
    let mut lines = text.lines();
    assert_eq!(
        lines.next().unwrap(),
        "hook_width_mm,hook_locks,joint_tilt_rad,theta1_rad,theta2_rad,theta3_rad"
    );
    let rows: Vec<Vec<String>> = lines
        .map(|l| l.split(',').map(str::to_string).collect())
        .collect();
    assert_eq!(rows.len(), 3);
    assert_eq!(rows[2][1], "false");
    let theta1: Vec<f64> = rows.iter().map(|r| r[3].parse().unwrap()).collect();
    assert!(theta1[1] < theta1[2] && theta1[2] < theta1[0]);
}

#[test]
fn scenario_writes_trajectory() {
    let tmp = tempfile::tempdir().unwrap();
    let out = couplesim(&[
        "scenario",
        "--out",
        tmp.path().to_str().unwrap(),
        "--seed",
        "4",
    ]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stdout)
    );
    let log = String::from_utf8(read(tmp.path(), "trajectory.csv")).unwrap();
    assert_eq!(
        log.lines().next().unwrap(),
        "t,robot_id,x,y,theta,coupled_flags,phase"
    );
    assert!(log.contains(",FB,CrossGap"));
    let report = String::from_utf8(read(tmp.path(), "report.txt")).unwrap();
    assert!(report.contains("crossing Success"));
}

#[test]
fn scenario_over_wide_gap_reports_failure() {
    let tmp = tempfile::tempdir().unwrap();
    let out = couplesim(&[
        "scenario",
        "--out",
        tmp.path().to_str().unwrap(),
        "--set",
        "scenario_gap_mm=200",
        "--set",
        "scenario_height_mm=0",
    ]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stdout).contains("crossing FallInGap"));
}
