//! Summary tables computed from trial records.

use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{HarnessError, TrialRecord};
use crate::coupling::{effective_joint_tilt, hook_locks};
use crate::params::RobotParams;
use crate::statics::pre_departure_tilts;

/// How heading cells are combined when deciding if a gap is crossable.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum Marginal {
    /// Crossable if any single heading cell beats the threshold.
    #[default]
    BestHeading,
    /// Crossable if the rate over all headings together beats the threshold.
    Pooled,
}

/// Total-ordered float for use as a map key.
#[derive(Debug, Clone, Copy, PartialEq)]
struct Key(f64);

impl Eq for Key {}

impl PartialOrd for Key {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Key {
    fn cmp(&self, other: &Self) -> Ordering {
        self.0.total_cmp(&other.0)
    }
}

#[derive(Debug, Clone, Copy, Default)]
struct Tally {
    success: usize,
    total: usize,
}

impl Tally {
    fn add(&mut self, ok: bool) {
        self.success += ok as usize;
        self.total += 1;
    }

    fn rate(&self) -> f64 {
        if self.total == 0 {
            0.0
        } else {
            self.success as f64 / self.total as f64
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MaxGapRow {
    pub n_robots: usize,
    pub height_diff_mm: f64,
    pub max_gap_mm: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GapRatioRow {
    pub n_robots: usize,
    pub height_diff_mm: f64,
    pub assembly_length_mm: f64,
    pub ratio: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HeadingRateRow {
    pub heading_deg: f64,
    pub height_diff_mm: f64,
    pub success_rate: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct HookRow {
    pub hook_width_mm: f64,
    pub hook_locks: bool,
    pub joint_tilt_rad: f64,
    /// Pitch per robot, lead first.
    pub tilts_rad: Vec<f64>,
}

/// Largest gap with success rate above `threshold`, per robot count and
/// height difference. Zero when no gap qualifies.
pub fn max_gap_per_count(
    records: &[TrialRecord],
    threshold: f64,
    marginal: Marginal,
) -> Result<Vec<MaxGapRow>, HarnessError> {
    if records.is_empty() {
        return Err(HarnessError::NoData("maximum gap".into()));
    }
    // (n, height, gap) -> heading -> tally
    let mut cells: BTreeMap<(usize, Key, Key), BTreeMap<Key, Tally>> = BTreeMap::new();
    for r in records {
        cells
            .entry((r.n_robots, Key(r.height_diff_mm), Key(r.gap_mm)))
            .or_default()
            .entry(Key(r.heading_deg))
            .or_default()
            .add(r.outcome.is_success());
    }
    let mut best: BTreeMap<(usize, Key), f64> = BTreeMap::new();
    for ((n, h, gap), by_heading) in &cells {
        let crossable = match marginal {
            Marginal::BestHeading => by_heading.values().any(|t| t.rate() > threshold),
            Marginal::Pooled => {
                let pooled = by_heading.values().fold(Tally::default(), |a, t| Tally {
                    success: a.success + t.success,
                    total: a.total + t.total,
                });
                pooled.rate() > threshold
            }
        };
        let entry = best.entry((*n, *h)).or_insert(0.0);
        if crossable {
            *entry = entry.max(gap.0);
        }
    }
    Ok(best
        .into_iter()
        .map(|((n, h), g)| MaxGapRow {
            n_robots: n,
            height_diff_mm: h.0,
            max_gap_mm: g,
        })
        .collect())
}

/// Maximum gap over the length of the whole assembly.
pub fn gap_ratio_per_count(rows: &[MaxGapRow], body_length: f64) -> Vec<GapRatioRow> {
    rows.iter()
        .map(|r| {
            let len = r.n_robots as f64 * body_length;
            GapRatioRow {
                n_robots: r.n_robots,
                height_diff_mm: r.height_diff_mm,
                assembly_length_mm: len,
                ratio: r.max_gap_mm / len,
            }
        })
        .collect()
}

/// Success rate over all robot counts and gaps at each heading and height.
pub fn success_vs_heading(records: &[TrialRecord]) -> Vec<HeadingRateRow> {
    let mut tallies: BTreeMap<(Key, Key), Tally> = BTreeMap::new();
    for r in records {
        tallies
            .entry((Key(r.height_diff_mm), Key(r.heading_deg)))
            .or_default()
            .add(r.outcome.is_success());
    }
    tallies
        .into_iter()
        .map(|((h, a), t)| HeadingRateRow {
            heading_deg: a.0,
            height_diff_mm: h.0,
            success_rate: t.rate(),
        })
        .collect()
}

/// Tilt of each robot just before the second robot leaves the platform, for
/// each hook width.
pub fn characterize_hooks(
    widths: &[f64],
    n: usize,
    robot: &RobotParams,
    pitch_cap: f64,
) -> Vec<HookRow> {
    let n = n.max(2);
    widths
        .iter()
        .map(|&w| {
            let knob = robot.knob.with_hook_width(w);
            let tilt = effective_joint_tilt(&knob);
            HookRow {
                hook_width_mm: w,
                hook_locks: hook_locks(&knob),
                joint_tilt_rad: tilt,
                tilts_rad: pre_departure_tilts(n, robot.body, tilt, pitch_cap),
            }
        })
        .collect()
}

fn write_rows<T: Serialize>(path: &Path, rows: &[T]) -> Result<(), HarnessError> {
    let mut w = csv::Writer::from_path(path)?;
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

/// Writes `fig8a.csv` (max gap), `fig8b.csv` (gap ratio) and `fig8c.csv`
/// (success vs heading) into `dir`.
pub fn write_summaries(
    dir: &Path,
    records: &[TrialRecord],
    threshold: f64,
    marginal: Marginal,
    body_length: f64,
) -> Result<(), HarnessError> {
    let max_gap = max_gap_per_count(records, threshold, marginal)?;
    write_rows(&dir.join("fig8a.csv"), &max_gap)?;
    write_rows(
        &dir.join("fig8b.csv"),
        &gap_ratio_per_count(&max_gap, body_length),
    )?;
    write_rows(&dir.join("fig8c.csv"), &success_vs_heading(records))?;
    Ok(())
}

/// Writes the hook report as `hook_width_mm,hook_locks,joint_tilt_rad,theta1_rad,...`.
pub fn write_hook_report(path: &Path, rows: &[HookRow]) -> Result<(), HarnessError> {
    let n = rows.iter().map(|r| r.tilts_rad.len()).max().unwrap_or(0);
    let mut w = csv::Writer::from_path(path)?;
    let mut header = vec![
        "hook_width_mm".to_string(),
        "hook_locks".into(),
        "joint_tilt_rad".into(),
    ];
    header.extend((1..=n).map(|k| format!("theta{k}_rad")));
    w.write_record(&header)?;
    for r in rows {
        let mut rec = vec![
            r.hook_width_mm.to_string(),
            r.hook_locks.to_string(),
            r.joint_tilt_rad.to_string(),
        ];
        rec.extend((0..n).map(|k| r.tilts_rad.get(k).copied().unwrap_or(0.0).to_string()));
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}
