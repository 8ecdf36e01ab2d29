//! Parameter sweeps over the gap-crossing solver, aggregation into summary
//! tables, and the flat config file.

mod aggregate;
pub mod config;

use std::io;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::rng::trial_seed;
use crate::statics::{classify_crossing, CrossingClass, CrossingParams, Environment, StaticsError};

pub use aggregate::{
    characterize_hooks, gap_ratio_per_count, max_gap_per_count, success_vs_heading,
    write_hook_report, write_summaries, GapRatioRow, HeadingRateRow, HookRow, Marginal, MaxGapRow,
};
pub use config::{Config, ConfigError};

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("invalid sweep grid: {0}")]
    InvalidGrid(String),
    #[error(transparent)]
    Statics(#[from] StaticsError),
    #[error("no trials for {0}")]
    NoData(String),
    #[error("could not build worker pool: {0}")]
    Pool(String),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Io(#[from] io::Error),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepGrid {
    pub robot_counts: Vec<usize>,
    pub gaps_mm: Vec<f64>,
    pub headings_deg: Vec<f64>,
    pub height_diffs_mm: Vec<f64>,
    pub reps: usize,
    pub base_seed: u64,
}

impl Default for SweepGrid {
    fn default() -> Self {
        Self {
            robot_counts: vec![1, 2, 3, 6, 9],
            gaps_mm: (1..=10).map(|k| 10.0 * k as f64).collect(),
            headings_deg: (0..=5).map(|k| 10.0 * k as f64).collect(),
            height_diffs_mm: vec![0.0, 6.0, 12.0],
            reps: 5,
            base_seed: 0,
        }
    }
}

impl SweepGrid {
    pub fn validate(&self) -> Result<(), HarnessError> {
        let bad = |m: &str| Err(HarnessError::InvalidGrid(m.to_string()));
        if self.robot_counts.is_empty()
            || self.gaps_mm.is_empty()
            || self.headings_deg.is_empty()
            || self.height_diffs_mm.is_empty()
        {
            return bad("every list needs at least one value");
        }
        if self.reps == 0 {
            return bad("reps must be at least 1");
        }
        if self.robot_counts.contains(&0) {
            return bad("robot counts must be positive");
        }
        if self.gaps_mm.iter().any(|g| !(*g > 0.0)) {
            return bad("gaps must be positive");
        }
        if self.height_diffs_mm.iter().any(|h| !(*h >= 0.0)) {
            return bad("height differences must be non-negative");
        }
        if self.headings_deg.iter().any(|h| !(h.abs() < 60.0)) {
            return bad("headings must lie strictly between -60 and 60 degrees");
        }
        Ok(())
    }

    /// Number of cells times reps.
    pub fn trial_count(&self) -> usize {
        self.robot_counts.len()
            * self.gaps_mm.len()
            * self.headings_deg.len()
            * self.height_diffs_mm.len()
            * self.reps
    }

    /// Trial parameters in index order: robot count outermost, rep innermost.
    pub fn trials(&self) -> Vec<TrialSpec> {
        let mut out = Vec::with_capacity(self.trial_count());
        for &n in &self.robot_counts {
            for &gap in &self.gaps_mm {
                for &heading in &self.headings_deg {
                    for &height in &self.height_diffs_mm {
                        for rep in 0..self.reps {
                            let id = out.len() as u64;
                            out.push(TrialSpec {
                                trial_id: id,
                                n_robots: n,
                                gap_mm: gap,
                                heading_deg: heading,
                                height_diff_mm: height,
                                rep,
                                seed: trial_seed(self.base_seed, id),
                            });
                        }
                    }
                }
            }
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrialSpec {
    pub trial_id: u64,
    pub n_robots: usize,
    pub gap_mm: f64,
    pub heading_deg: f64,
    pub height_diff_mm: f64,
    pub rep: usize,
    pub seed: u64,
}

impl TrialSpec {
    pub fn run(&self, params: &CrossingParams) -> Result<TrialRecord, StaticsError> {
        let env = Environment::new(self.gap_mm, self.height_diff_mm);
        let o = classify_crossing(
            self.n_robots,
            &env,
            self.heading_deg.to_radians(),
            params,
            self.seed,
        )?;
        Ok(TrialRecord {
            trial_id: self.trial_id,
            n_robots: self.n_robots,
            gap_mm: self.gap_mm,
            heading_deg: self.heading_deg,
            height_diff_mm: self.height_diff_mm,
            rep: self.rep,
            seed: self.seed,
            outcome: o.class,
            tip_drop_mm: o.max_tip_drop,
            com_margin_mm: o.com_margin,
        })
    }
}

/// One row of the trials CSV.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub trial_id: u64,
    pub n_robots: usize,
    pub gap_mm: f64,
    pub heading_deg: f64,
    pub height_diff_mm: f64,
    pub rep: usize,
    pub seed: u64,
    pub outcome: CrossingClass,
    pub tip_drop_mm: f64,
    pub com_margin_mm: f64,
}

pub const TRIALS_HEADER: &str =
    "trial_id,n_robots,gap_mm,heading_deg,height_diff_mm,rep,seed,outcome,tip_drop_mm,com_margin_mm";

/// Runs every trial of the grid on `jobs` worker threads (0 = one per core).
///
/// Each trial draws from its own seed derived from the trial index, and
/// results come back in index order, so output does not depend on `jobs`.
pub fn run_sweep(
    grid: &SweepGrid,
    params: &CrossingParams,
    jobs: usize,
) -> Result<Vec<TrialRecord>, HarnessError> {
    grid.validate()?;
    params.validate()?;
    let trials = grid.trials();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| HarnessError::Pool(e.to_string()))?;
    let records: Result<Vec<_>, StaticsError> =
        pool.install(|| trials.par_iter().map(|t| t.run(params)).collect());
    Ok(records?)
}

pub fn write_trials<W: io::Write>(records: &[TrialRecord], out: W) -> Result<(), HarnessError> {
    let mut w = csv::Writer::from_writer(out);
    if records.is_empty() {
        w.write_record(TRIALS_HEADER.split(','))?;
    }
    for r in records {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_trials<R: io::Read>(input: R) -> Result<Vec<TrialRecord>, HarnessError> {
    let mut r = csv::Reader::from_reader(input);
    let header: Vec<String> = r.headers()?.iter().map(str::to_string).collect();
    if header.join(",") != TRIALS_HEADER {
        return Err(HarnessError::InvalidGrid(format!(
            "unexpected trials header '{}'",
            header.join(",")
        )));
    }
    Ok(r.deserialize().collect::<Result<Vec<TrialRecord>, _>>()?)
}

pub fn write_trials_file(records: &[TrialRecord], path: &Path) -> Result<(), HarnessError> {
    write_trials(records, std::fs::File::create(path)?)
}

pub fn read_trials_file(path: &Path) -> Result<Vec<TrialRecord>, HarnessError> {
    read_trials(std::fs::File::open(path)?)
}
