//! Acceptance suite. Runs every criterion, prints one PASS/FAIL line each,
//! and exits non-zero if any failed.

use std::collections::BTreeMap;
use std::path::Path;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use couplesim::engine::{couple_cross_decouple, run_scenario, EngineParams, ScenarioLayout};
use couplesim::harness::{
    characterize_hooks, gap_ratio_per_count, max_gap_per_count, run_sweep, success_vs_heading,
    write_summaries, write_trials_file, Marginal, MaxGapRow, SweepGrid, TrialRecord,
};
use couplesim::rng::stream_rng;
use couplesim::statics::{classify_crossing, CrossingClass, CrossingParams, Environment};
use couplesim::validation::{consensus_checks, kinematics_checks};
use couplesim::RobotParams;
use rand::Rng;

struct Verdict {
    passed: bool,
    detail: String,
}

fn verdict(passed: bool, detail: impl Into<String>) -> Verdict {
    Verdict {
        passed,
        detail: detail.into(),
    }
}

fn within(elapsed: Duration, limit_s: f64) -> (bool, String) {
    let s = elapsed.as_secs_f64();
    (s < limit_s, format!("{s:.2} s (limit {limit_s} s)"))
}

fn kinematics_oracle() -> Verdict {
    let t = Instant::now();
    let checks = kinematics_checks(1);
    let (fast, time) = within(t.elapsed(), 1.0);
    let failed: Vec<String> = checks
        .iter()
        .filter(|c| !c.passed)
        .map(|c| format!("{} ({})", c.name, c.detail))
        .collect();
    verdict(
        failed.is_empty() && fast,
        format!("{} checks, {time}; failed: {failed:?}", checks.len()),
    )
}

fn consensus_properties() -> Verdict {
    let t = Instant::now();
    let checks = consensus_checks(2);
    let (fast, time) = within(t.elapsed(), 5.0);
    let failed: Vec<String> = checks
        .iter()
        .filter(|c| !c.passed)
        .map(|c| c.name.clone())
        .collect();
    verdict(
        failed.is_empty() && fast,
        format!("{} checks, {time}; failed: {failed:?}", checks.len()),
    )
}

fn hook_ordering() -> Verdict {
    let rows = characterize_hooks(&[1.0, 1.5, 2.0], 3, &RobotParams::default(), 0.6);
    let (w10, w15, w20) = (&rows[0], &rows[1], &rows[2]);
    let ordered =
        (0..3).all(|k| w15.tilts_rad[k] < w20.tilts_rad[k] && w20.tilts_rad[k] < w10.tilts_rad[k]);
    let friction_only = !w20.hook_locks && w10.hook_locks && w15.hook_locks;
    verdict(
        ordered && friction_only,
        format!(
            "theta1 1.0/1.5/2.0 = {:.4}/{:.4}/{:.4} rad, 2.0 mm locks: {}",
            w10.tilts_rad[0], w15.tilts_rad[0], w20.tilts_rad[0], w20.hook_locks
        ),
    )
}

fn combined_scenario() -> Verdict {
    let t = Instant::now();
    let layout = ScenarioLayout::default();
    let (mut successes, mut near_goal, mut errors) = (0, 0, Vec::new());
    let seeds = 20;
    for seed in 0..seeds {
        let (mut world, script) = couple_cross_decouple(
            &layout,
            RobotParams::default(),
            EngineParams::default(),
            seed,
        );
        match run_scenario(&mut world, &script) {
            Ok(report) => {
                let success = report.completed
                    && report.crossing.map(|c| c.class) == Some(CrossingClass::Success);
                if success {
                    successes += 1;
                    if report.goal_errors.iter().all(|e| *e <= 10.0) {
                        near_goal += 1;
                    }
                }
            }
            Err(e) => errors.push(format!("seed {seed}: {e}")),
        }
    }
    let (fast, time) = within(t.elapsed(), 10.0);
    let rate = successes as f64 / seeds as f64;
    verdict(
        rate >= 0.9 && near_goal == successes && fast,
        format!("success {successes}/{seeds}, at goal {near_goal}/{successes}, {time}, errors {errors:?}"),
    )
}

fn lookup(rows: &[MaxGapRow], n: usize, h: f64) -> f64 {
    rows.iter()
        .find(|r| r.n_robots == n && r.height_diff_mm == h)
        .map(|r| r.max_gap_mm)
        .unwrap_or(f64::NAN)
}

fn sweep_trends(records: &[TrialRecord], elapsed: Duration) -> Vec<(&'static str, Verdict)> {
    let counts = [1, 2, 3, 6, 9];
    let max_gap = max_gap_per_count(records, 0.5, Marginal::BestHeading).expect("records");
    let gaps_at = |h: f64| counts.map(|n| lookup(&max_gap, n, h));

    let g12 = gaps_at(12.0);
    let g0 = gaps_at(0.0);
    let nondecreasing = g12.windows(2).all(|w| w[0] <= w[1]);
    let flat0 = {
        let v = &g0[1..];
        let hi = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let lo = v.iter().copied().fold(f64::INFINITY, f64::min);
        hi - lo <= 10.0
    };
    let a = verdict(
        nondecreasing && flat0,
        format!("max gap at 12 mm {g12:?}, at 0 mm {g0:?}"),
    );

    let ratios = gap_ratio_per_count(&max_gap, 50.0);
    let ratio = |n: usize, h: f64| {
        ratios
            .iter()
            .find(|r| r.n_robots == n && r.height_diff_mm == h)
            .map(|r| r.ratio)
            .unwrap_or(f64::NAN)
    };
    let r3 = ratio(3, 12.0);
    let tail_ok = [0.0, 6.0, 12.0]
        .iter()
        .all(|&h| ratio(3, h) >= ratio(6, h) && ratio(6, h) >= ratio(9, h));
    let b = verdict(
        (0.35..=0.65).contains(&r3) && tail_ok,
        format!(
            "ratio n=3 at 12 mm {r3:.3}; n=3/6/9 at 12 mm {:.3}/{:.3}/{:.3}",
            ratio(3, 12.0),
            ratio(6, 12.0),
            ratio(9, 12.0)
        ),
    );

    let rates = success_vs_heading(records);
    let by_height = |h: f64| -> BTreeMap<i64, f64> {
        rates
            .iter()
            .filter(|r| r.height_diff_mm == h)
            .map(|r| (r.heading_deg.round() as i64, r.success_rate))
            .collect()
    };
    let flat = by_height(0.0);
    let v: Vec<f64> = flat.values().copied().collect();
    let monotone = (0..v.len()).all(|i| (i + 1..v.len()).all(|j| v[j] <= v[i] + 0.1));
    let drop = by_height(12.0);
    let best = drop
        .iter()
        .fold((0i64, f64::NEG_INFINITY), |acc, (&a, &r)| {
            if r > acc.1 {
                (a, r)
            } else {
                acc
            }
        });
    let c = verdict(
        monotone && [10, 20, 30].contains(&best.0),
        format!(
            "rates at 0 mm {v:.3?}; best heading at 12 mm {} deg",
            best.0
        ),
    );

    let (fast, time) = within(elapsed, 60.0);
    let runtime = verdict(
        fast && records.len() == 4500,
        format!("{} trials in {time}", records.len()),
    );
    vec![
        ("5a max gap vs robot count", a),
        ("5b gap ratio", b),
        ("5c success vs heading", c),
        ("5  full sweep runtime", runtime),
    ]
}

fn statics_invariants() -> Verdict {
    let params = CrossingParams::default().without_noise();
    let mut rng = stream_rng(6, 0);
    let mut violations = Vec::new();
    let mut panics = 0;
    for _ in 0..500 {
        let n = rng.random_range(1..=9usize);
        let heading = rng.random_range(0.0f64..50.0).to_radians();
        let h = rng.random_range(0.0..12.0);
        let g1 = rng.random_range(1.0..150.0);
        let g2 = rng.random_range(1.0..150.0);
        let (small, large) = if g1 <= g2 { (g1, g2) } else { (g2, g1) };
        let run = |g: f64| {
            std::panic::catch_unwind(|| {
                classify_crossing(n, &Environment::new(g, h), heading, &params, 0)
            })
        };
        match (run(small), run(large)) {
            (Ok(Ok(a)), Ok(Ok(b))) => {
                if b.class.is_success() && !a.class.is_success() {
                    violations.push(format!(
                        "n={n} h={h:.2} heading={heading:.3} {small:.2} vs {large:.2}"
                    ));
                }
            }
            _ => panics += 1,
        }
    }
    // single robot, fine gap grid over every heading and height
    let mut lone_max: f64 = 0.0;
    for gap in 1..=60 {
        for deg in 0..=50 {
            for h in [0.0, 3.0, 6.0, 9.0, 12.0] {
                let env = Environment::new(gap as f64, h);
                let o = classify_crossing(1, &env, (deg as f64).to_radians(), &params, 0)
                    .expect("valid");
                if o.class.is_success() {
                    lone_max = lone_max.max(gap as f64);
                }
            }
        }
    }
    verdict(
        violations.is_empty() && panics == 0 && lone_max <= 25.0,
        format!(
            "500 configs, closure violations {}, assertion failures {panics}, single robot max gap {lone_max} mm",
            violations.len()
        ),
    )
}

fn files_in(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    std::fs::read_dir(dir)
        .expect("dir")
        .map(|e| {
            let e = e.expect("entry");
            (
                e.file_name().to_string_lossy().into_owned(),
                std::fs::read(e.path()).expect("read"),
            )
        })
        .collect()
}

fn determinism() -> Verdict {
    let grid = SweepGrid {
        base_seed: 77,
        ..SweepGrid::default()
    };
    let params = CrossingParams::default();
    let run = |jobs: usize| {
        let dir = tempfile::tempdir().expect("tempdir");
        let records = run_sweep(&grid, &params, jobs).expect("sweep");
        write_trials_file(&records, &dir.path().join("trials.csv")).expect("write");
        write_summaries(dir.path(), &records, 0.5, Marginal::BestHeading, 50.0).expect("write");
        files_in(dir.path())
    };
    let a = run(1);
    let b = run(1);
    let c = run(4);
    verdict(
        a == b && a == c && a.len() == 4,
        format!("{} files compared across two runs and jobs 1 vs 4", a.len()),
    )
}

fn main() -> ExitCode {
    let mut results: Vec<(&str, Verdict)> = vec![
        ("1  kinematics oracle equivalence", kinematics_oracle()),
        ("2  consensus properties", consensus_properties()),
        ("3  hook characterization ordering", hook_ordering()),
        ("4  couple, cross, decouple scenario", combined_scenario()),
    ];
    let t = Instant::now();
    let records =
        run_sweep(&SweepGrid::default(), &CrossingParams::default(), 0).expect("default sweep");
    results.extend(sweep_trends(&records, t.elapsed()));
    results.push(("6  statics invariants", statics_invariants()));
    results.push(("7  determinism", determinism()));

    let mut all = true;
    for (name, v) in &results {
        all &= v.passed;
        println!(
            "criterion {name}: {} - {}",
            if v.passed { "PASS" } else { "FAIL" },
            v.detail
        );
    }
    if all {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
