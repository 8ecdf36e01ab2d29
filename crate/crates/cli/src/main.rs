use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use couplesim::engine::{couple_cross_decouple, run_scenario};
use couplesim::harness::{
    characterize_hooks, max_gap_per_count, run_sweep, write_hook_report, write_summaries,
    write_trials_file, Config, Marginal,
};
use couplesim::validation;

#[derive(Parser)]
#[command(
    name = "couplesim",
    version,
    about = "Passive-coupling swarm simulator and experiment runner"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Config file of `key = value` lines; defaults apply when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Override a config key, e.g. `--set reps=10`. Repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
    /// Base seed; overrides `seed` from the config.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Subcommand)]
enum Command {
    /// Run the gap-crossing parameter sweep and write trial and summary CSVs.
    Sweep {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        out: PathBuf,
        /// Worker threads (0 = one per core).
        #[arg(long)]
        jobs: Option<usize>,
        /// Pool all headings when deciding if a gap is crossable.
        #[arg(long)]
        pooled: bool,
    },
    /// Run the couple, cross, decouple and disperse scenario with a trajectory log.
    Scenario {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        out: PathBuf,
    },
    /// Report per-robot tilt for several hook widths.
    CharacterizeHooks {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run the built-in kinematics and consensus checks.
    Validate {
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

fn load(common: &Common) -> Result<Config> {
    let mut cfg = match &common.config {
        Some(path) => Config::from_file(path)?,
        None => Config::default(),
    };
    for kv in &common.overrides {
        let Some((k, v)) = kv.split_once('=') else {
            bail!("--set expects KEY=VALUE, got '{kv}'");
        };
        cfg.set(k.trim(), v.trim())?;
    }
    if let Some(seed) = common.seed {
        cfg.seed = seed;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn out_dir(path: &Path) -> Result<()> {
    fs::create_dir_all(path).with_context(|| format!("creating {}", path.display()))
}

fn sweep(common: &Common, out: &Path, jobs: Option<usize>, pooled: bool) -> Result<()> {
    let mut cfg = load(common)?;
    if let Some(j) = jobs {
        cfg.jobs = j;
    }
    if pooled {
        cfg.marginal = Marginal::Pooled;
    }
    out_dir(out)?;
    let records = run_sweep(&cfg.sweep_grid(), &cfg.crossing_params(), cfg.jobs)?;
    write_trials_file(&records, &out.join("trials.csv"))?;
    write_summaries(
        out,
        &records,
        cfg.success_threshold,
        cfg.marginal,
        cfg.robot.body_length(),
    )?;
    let successes = records.iter().filter(|r| r.outcome.is_success()).count();
    println!("{} trials, {successes} successful", records.len());
    for row in max_gap_per_count(&records, cfg.success_threshold, cfg.marginal)? {
        println!(
            "n={} height={} mm: max gap {} mm",
            row.n_robots, row.height_diff_mm, row.max_gap_mm
        );
    }
    println!(
        "wrote trials.csv, fig8a.csv, fig8b.csv, fig8c.csv to {}",
        out.display()
    );
    Ok(())
}

fn scenario(common: &Common, out: &Path) -> Result<bool> {
    let cfg = load(common)?;
    out_dir(out)?;
    let (mut world, mut script) =
        couple_cross_decouple(&cfg.scenario, cfg.robot, cfg.engine_params(), cfg.seed);
    script.max_time = cfg.scenario_max_time;
    script.record_trajectory = true;
    let report = run_scenario(&mut world, &script)?;
    report.write_trajectory_csv(&out.join("trajectory.csv"))?;

    let mut text = String::new();
    for p in &report.phases {
        let done = p
            .completed_at
            .map(|t| format!("{t:.2}"))
            .unwrap_or_else(|| "-".into());
        text.push_str(&format!(
            "phase {} started {:.2} s completed {done} s\n",
            p.name, p.started_at
        ));
    }
    match report.crossing {
        Some(c) => text.push_str(&format!(
            "crossing {} max_tip_drop {:.2} mm com_margin {:.2} mm\n",
            c.class, c.max_tip_drop, c.com_margin
        )),
        None => text.push_str("crossing none\n"),
    }
    for (id, e) in report.goal_errors.iter().enumerate() {
        text.push_str(&format!("robot {id} distance to goal {e:.2} mm\n"));
    }
    match &report.halted {
        Some(why) => text.push_str(&format!("halted {why}\n")),
        None => text.push_str("completed\n"),
    }
    print!("{text}");
    fs::File::create(out.join("report.txt"))?.write_all(text.as_bytes())?;
    Ok(report.completed)
}

fn hooks(common: &Common, out: &Path) -> Result<()> {
    let cfg = load(common)?;
    out_dir(out)?;
    let rows = characterize_hooks(
        &cfg.hook_widths,
        cfg.hook_robots,
        &cfg.robot,
        cfg.engine.crossing.pitch_cap,
    );
    for r in &rows {
        let tilts: Vec<String> = r.tilts_rad.iter().map(|t| format!("{t:.4}")).collect();
        println!(
            "hook {:.2} mm: {}, tilts [{}] rad",
            r.hook_width_mm,
            if r.hook_locks {
                "locked"
            } else {
                "friction-only"
            },
            tilts.join(", ")
        );
    }
    write_hook_report(&out.join("fig7.csv"), &rows)?;
    Ok(())
}

fn validate(seed: u64) -> bool {
    let checks = validation::run_all(seed);
    for c in &checks {
        println!(
            "{} {}: {}",
            if c.passed { "PASS" } else { "FAIL" },
            c.name,
            c.detail
        );
    }
    checks.iter().all(|c| c.passed)
}

fn run(cli: Cli) -> Result<bool> {
    match cli.command {
        Command::Sweep {
            common,
            out,
            jobs,
            pooled,
        } => sweep(&common, &out, jobs, pooled).map(|_| true),
        Command::Scenario { common, out } => scenario(&common, &out),
        Command::CharacterizeHooks { common, out } => hooks(&common, &out).map(|_| true),
        Command::Validate { seed } => Ok(validate(seed)),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
