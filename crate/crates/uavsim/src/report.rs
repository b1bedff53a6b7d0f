//! Aggregation and export: summary statistics across seeds, policy
//! comparison tables with trend checks, and file output (JSON, CSV,
//! NDJSON) with stable formatting.

use std::io::Write as _;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::domain::Scenario;
use crate::reward::RewardBreakdown;
use crate::scheduler::Policy;
use crate::sim::{run_episode, EpisodeLog, SimError, World};
use crate::Scalar;

/// Fraction of seeds in which each trend ordering must hold.
pub const ORDERING_FRACTION: f64 = 0.8;

#[derive(Debug, Error)]
pub enum ReportError {
    #[error("logs mix scenario digests: {0} vs {1}")]
    MixedDigests(String, String),
    #[error("no logs to summarize")]
    Empty,
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error(transparent)]
    Mobility(#[from] crate::mobility::MobilityError),
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> ReportError + '_ {
    move |source| ReportError::Io {
        path: path.display().to_string(),
        source,
    }
}

/// Rounds to 6 significant digits for byte-stable, diffable exports.
pub fn round_sig6(x: Scalar) -> Scalar {
    if x == 0.0 || !x.is_finite() {
        return x;
    }
    let digits = 6 - x.abs().log10().floor() as i32 - 1;
    let scale = (10.0 as Scalar).powi(digits);
    (x * scale).round() / scale
}

/// Per-step five-number summary of tower data, pooled over towers and
/// seeds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Quantiles {
    pub min: Scalar,
    pub q1: Scalar,
    pub median: Scalar,
    pub q3: Scalar,
    pub max: Scalar,
}

fn quantiles(sorted: &[Scalar]) -> Quantiles {
    debug_assert!(!sorted.is_empty());
    let at = |p: f64| -> Scalar {
        // Linear interpolation between closest ranks.
        let h = p * (sorted.len() - 1) as f64;
        let lo = h.floor() as usize;
        let hi = h.ceil() as usize;
        sorted[lo] + (sorted[hi] - sorted[lo]) * (h - lo as f64)
    };
    Quantiles {
        min: sorted[0],
        q1: at(0.25),
        median: at(0.5),
        q3: at(0.75),
        max: sorted[sorted.len() - 1],
    }
}

/// Cross-seed aggregate of one policy's episodes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryStats {
    pub scenario_digest: String,
    pub policy: String,
    pub n_seeds: usize,
    /// Per step: energy averaged over the fleet, then over seeds.
    /// Episodes that ended early (dead fleet) contribute zeros.
    pub mean_energy: Vec<Scalar>,
    /// Final cumulative data per tower, averaged over seeds.
    pub final_tower_data: Vec<Scalar>,
    /// Per step: total data over towers, averaged over seeds.
    pub total_data: Vec<Scalar>,
    /// Per step: five-number summary of per-tower data pooled over seeds.
    pub tower_data_quantiles: Vec<Quantiles>,
    /// Per step: reward breakdown averaged over seeds.
    pub reward_series: Vec<RewardBreakdown<Scalar>>,
    /// Time-average combined reward, averaged over seeds.
    pub system_value: Scalar,
}

impl SummaryStats {
    /// A copy with every float at 6 significant digits, as exported.
    pub fn rounded(&self) -> SummaryStats {
        SummaryStats {
            scenario_digest: self.scenario_digest.clone(),
            policy: self.policy.clone(),
            n_seeds: self.n_seeds,
            mean_energy: self.mean_energy.iter().copied().map(round_sig6).collect(),
            final_tower_data: self.final_tower_data.iter().copied().map(round_sig6).collect(),
            total_data: self.total_data.iter().copied().map(round_sig6).collect(),
            tower_data_quantiles: self
                .tower_data_quantiles
                .iter()
                .map(|q| Quantiles {
                    min: round_sig6(q.min),
                    q1: round_sig6(q.q1),
                    median: round_sig6(q.median),
                    q3: round_sig6(q.q3),
                    max: round_sig6(q.max),
                })
                .collect(),
            reward_series: self
                .reward_series
                .iter()
                .map(|r| RewardBreakdown {
                    r_tower_raw: round_sig6(r.r_tower_raw),
                    r_uav_raw: round_sig6(r.r_uav_raw),
                    r_tower_norm: round_sig6(r.r_tower_norm),
                    r_uav_norm: round_sig6(r.r_uav_norm),
                    combined: round_sig6(r.combined),
                })
                .collect(),
            system_value: round_sig6(self.system_value),
        }
    }
}

/// Tower data of episode `log` at step index `k`, holding the last value
/// after an early end (the fleet is dead, data is frozen).
fn tower_data_at(log: &EpisodeLog, k: usize) -> &[Scalar] {
    let idx = k.min(log.records.len() - 1);
    &log.records[idx].tower_data
}

/// Aggregates logs of one scenario across seeds. Energy is averaged over
/// UAVs then seeds; quantiles pool the per-tower values over seeds.
pub fn summarize(logs: &[EpisodeLog]) -> Result<SummaryStats, ReportError> {
    let first = logs.first().ok_or(ReportError::Empty)?;
    for log in logs {
        if log.scenario_digest != first.scenario_digest {
            return Err(ReportError::MixedDigests(
                first.scenario_digest.clone(),
                log.scenario_digest.clone(),
            ));
        }
    }
    let steps = logs.iter().map(|l| l.records.len()).max().unwrap();
    let n_seeds = logs.len();
    let mut mean_energy = vec![0.0; steps];
    let mut total_data = vec![0.0; steps];
    let mut reward_series = vec![
        RewardBreakdown {
            r_tower_raw: 0.0,
            r_uav_raw: 0.0,
            r_tower_norm: 0.0,
            r_uav_norm: 0.0,
            combined: 0.0
        };
        steps
    ];
    let mut tower_data_quantiles = Vec::with_capacity(steps);
    for k in 0..steps {
        let mut pooled: Vec<Scalar> = Vec::new();
        for log in logs {
            pooled.extend_from_slice(tower_data_at(log, k));
            total_data[k] += tower_data_at(log, k).iter().sum::<Scalar>() / n_seeds as Scalar;
            if let Some(rec) = log.records.get(k) {
                let fleet = rec.uav_energy.len() as Scalar;
                mean_energy[k] +=
                    rec.uav_energy.iter().sum::<Scalar>() / fleet / n_seeds as Scalar;
                let r = &rec.reward;
                let acc = &mut reward_series[k];
                acc.r_tower_raw += r.r_tower_raw / n_seeds as Scalar;
                acc.r_uav_raw += r.r_uav_raw / n_seeds as Scalar;
                acc.r_tower_norm += r.r_tower_norm / n_seeds as Scalar;
                acc.r_uav_norm += r.r_uav_norm / n_seeds as Scalar;
                acc.combined += r.combined / n_seeds as Scalar;
            }
            // Missing records mean a dead fleet: energy 0, reward as-is.
        }
        pooled.sort_by(|a, b| a.partial_cmp(b).unwrap());
        tower_data_quantiles.push(quantiles(&pooled));
    }
    let n_towers = first.records[0].tower_data.len();
    let mut final_tower_data = vec![0.0; n_towers];
    for log in logs {
        let last = &log.records[log.records.len() - 1].tower_data;
        for (acc, &d) in final_tower_data.iter_mut().zip(last) {
            *acc += d / n_seeds as Scalar;
        }
    }
    let system_value = logs.iter().map(|l| l.system_value).sum::<Scalar>() / n_seeds as Scalar;
    Ok(SummaryStats {
        scenario_digest: first.scenario_digest.clone(),
        policy: first.policy.clone(),
        n_seeds,
        mean_energy,
        final_tower_data,
        total_data,
        tower_data_quantiles,
        reward_series,
        system_value,
    })
}

/// Writes the rounded stats as JSON with stable key order.
pub fn export_summary_json(stats: &SummaryStats, path: &Path) -> Result<(), ReportError> {
    let json = serde_json::to_vec_pretty(&stats.rounded()).expect("serializable stats");
    std::fs::write(path, json).map_err(io_err(path))
}

/// One row per step: energy, data, quantiles, rewards.
pub fn export_summary_csv(stats: &SummaryStats, path: &Path) -> Result<(), ReportError> {
    let r = stats.rounded();
    let mut w = csv::Writer::from_path(path).map_err(|e| ReportError::Io {
        path: path.display().to_string(),
        source: std::io::Error::other(e),
    })?;
    w.write_record([
        "step",
        "mean_energy",
        "total_data",
        "data_min",
        "data_q1",
        "data_median",
        "data_q3",
        "data_max",
        "r_tower_raw",
        "r_uav_raw",
        "r_tower_norm",
        "r_uav_norm",
        "combined",
    ])
    .map_err(|e| ReportError::Io {
        path: path.display().to_string(),
        source: std::io::Error::other(e),
    })?;
    for k in 0..r.mean_energy.len() {
        let q = &r.tower_data_quantiles[k];
        let rw = &r.reward_series[k];
        w.write_record([
            k.to_string(),
            r.mean_energy[k].to_string(),
            r.total_data[k].to_string(),
            q.min.to_string(),
            q.q1.to_string(),
            q.median.to_string(),
            q.q3.to_string(),
            q.max.to_string(),
            rw.r_tower_raw.to_string(),
            rw.r_uav_raw.to_string(),
            rw.r_tower_norm.to_string(),
            rw.r_uav_norm.to_string(),
            rw.combined.to_string(),
        ])
        .map_err(|e| ReportError::Io {
            path: path.display().to_string(),
            source: std::io::Error::other(e),
        })?;
    }
    w.flush().map_err(io_err(path))
}

/// One JSON record per step, preceded by a header record with the
/// episode metadata.
pub fn export_log_ndjson(log: &EpisodeLog, path: &Path) -> Result<(), ReportError> {
    let mut f = std::fs::File::create(path).map_err(io_err(path))?;
    let header = serde_json::json!({
        "scenario_digest": log.scenario_digest,
        "policy": log.policy,
        "seed": log.seed,
        "truncated": log.truncated,
        "system_value": round_sig6(log.system_value),
    });
    writeln!(f, "{header}").map_err(io_err(path))?;
    for rec in &log.records {
        let line = serde_json::to_string(rec).expect("serializable record");
        writeln!(f, "{line}").map_err(io_err(path))?;
    }
    Ok(())
}

/// Flat per-step CSV of one episode for plotting.
pub fn export_log_csv(log: &EpisodeLog, path: &Path) -> Result<(), ReportError> {
    let mut w = csv::Writer::from_path(path).map_err(|e| ReportError::Io {
        path: path.display().to_string(),
        source: std::io::Error::other(e),
    })?;
    let as_io = |e: csv::Error| ReportError::Io {
        path: path.display().to_string(),
        source: std::io::Error::other(e),
    };
    w.write_record([
        "step",
        "n_scheduled",
        "mean_energy",
        "total_data",
        "combined_reward",
        "deactivated",
    ])
    .map_err(as_io)?;
    for rec in &log.records {
        let fleet = rec.uav_energy.len() as Scalar;
        w.write_record([
            rec.t.to_string(),
            rec.assignment.pairs().len().to_string(),
            round_sig6(rec.uav_energy.iter().sum::<Scalar>() / fleet).to_string(),
            round_sig6(rec.tower_data.iter().sum::<Scalar>()).to_string(),
            round_sig6(rec.reward.combined).to_string(),
            rec.deactivated.len().to_string(),
        ])
        .map_err(as_io)?;
    }
    w.flush().map_err(io_err(path))
}

/// Final-step metrics of one episode, used for trend checks.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeedMetrics {
    pub seed: u64,
    pub final_mean_energy: Scalar,
    /// Population standard deviation of per-tower data at the final step.
    pub final_tower_std: Scalar,
    pub total_collected: Scalar,
    pub system_value: Scalar,
    pub truncated: bool,
}

fn seed_metrics(log: &EpisodeLog) -> SeedMetrics {
    let last = log.records.last().expect("non-empty episode");
    let fleet = last.uav_energy.len() as Scalar;
    let d = &last.tower_data;
    let mean = d.iter().sum::<Scalar>() / d.len() as Scalar;
    let var = d.iter().map(|&x| (x - mean) * (x - mean)).sum::<Scalar>() / d.len() as Scalar;
    SeedMetrics {
        seed: log.seed,
        final_mean_energy: last.uav_energy.iter().sum::<Scalar>() / fleet,
        final_tower_std: var.sqrt(),
        total_collected: d.iter().sum(),
        system_value: log.system_value,
        truncated: log.truncated,
    }
}

/// One policy's column in a comparison: its logs, aggregate stats, and
/// per-seed final metrics.
#[derive(Debug, Clone)]
pub struct PolicyColumn {
    pub label: String,
    pub stats: SummaryStats,
    pub per_seed: Vec<SeedMetrics>,
    pub logs: Vec<EpisodeLog>,
}

/// One trend ordering: the fraction of seeds where it held, and whether
/// that fraction reaches [`ORDERING_FRACTION`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OrderingCheck {
    pub label: String,
    pub fraction: f64,
    pub pass: bool,
}

#[derive(Debug, Clone)]
pub struct Comparison {
    pub scenario_digest: String,
    pub columns: Vec<PolicyColumn>,
    pub checks: Vec<OrderingCheck>,
}

impl Comparison {
    pub fn column(&self, label_prefix: &str) -> Option<&PolicyColumn> {
        self.columns.iter().find(|c| c.label.starts_with(label_prefix))
    }

    pub fn all_checks_pass(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }
}

fn check<F: Fn(&SeedMetrics, &SeedMetrics) -> bool>(
    label: &str,
    a: &PolicyColumn,
    b: &PolicyColumn,
    holds: F,
) -> OrderingCheck {
    let n = a.per_seed.len().min(b.per_seed.len());
    let hits = (0..n)
        .filter(|&k| holds(&a.per_seed[k], &b.per_seed[k]))
        .count();
    let fraction = hits as f64 / n as f64;
    OrderingCheck {
        label: label.to_string(),
        fraction,
        pass: fraction >= ORDERING_FRACTION,
    }
}

const TIE_EPS: Scalar = 1e-9;

/// The trend orderings expected from the benchmark design, evaluated
/// per seed: energy comp1 >= proposed >= comp2 and comp1 >= comp3;
/// fairness (std) comp2 <= proposed <= comp3 and comp2 <= comp1;
/// collection proposed >= comp3 and comp2 >= comp3.
fn trend_checks(columns: &[PolicyColumn]) -> Vec<OrderingCheck> {
    let find = |prefix: &str| columns.iter().find(|c| c.label.starts_with(prefix));
    let (proposed, c1, c2, c3) = (
        find("proposed"),
        find("comp1"),
        find("comp2"),
        find("comp3"),
    );
    let mut checks = Vec::new();
    let ge = |x: Scalar, y: Scalar| x >= y - TIE_EPS;
    if let (Some(a), Some(b)) = (c1, proposed) {
        checks.push(check("energy: comp1 >= proposed", a, b, |a, b| {
            ge(a.final_mean_energy, b.final_mean_energy)
        }));
    }
    if let (Some(a), Some(b)) = (proposed, c2) {
        checks.push(check("energy: proposed >= comp2", a, b, |a, b| {
            ge(a.final_mean_energy, b.final_mean_energy)
        }));
    }
    if let (Some(a), Some(b)) = (c1, c3) {
        checks.push(check("energy: comp1 >= comp3", a, b, |a, b| {
            ge(a.final_mean_energy, b.final_mean_energy)
        }));
    }
    if let (Some(a), Some(b)) = (c2, proposed) {
        checks.push(check("fairness: comp2 <= proposed", a, b, |a, b| {
            ge(b.final_tower_std, a.final_tower_std)
        }));
    }
    if let (Some(a), Some(b)) = (proposed, c3) {
        checks.push(check("fairness: proposed <= comp3", a, b, |a, b| {
            ge(b.final_tower_std, a.final_tower_std)
        }));
    }
    if let (Some(a), Some(b)) = (c2, c1) {
        checks.push(check("fairness: comp2 <= comp1", a, b, |a, b| {
            ge(b.final_tower_std, a.final_tower_std)
        }));
    }
    if let (Some(a), Some(b)) = (proposed, c3) {
        checks.push(check("collection: proposed >= comp3", a, b, |a, b| {
            ge(a.total_collected, b.total_collected)
        }));
    }
    if let (Some(a), Some(b)) = (c2, c3) {
        checks.push(check("collection: comp2 >= comp3", a, b, |a, b| {
            ge(a.total_collected, b.total_collected)
        }));
    }
    checks
}

/// Runs the cross product of policies and seeds (in parallel), builds the
/// per-policy stats, and evaluates the trend orderings.
pub fn compare(
    scenario: &Scenario,
    policies: &[Policy],
    seeds: &[u64],
) -> Result<Comparison, ReportError> {
    assert!(!policies.is_empty() && !seeds.is_empty());
    let world = World::new(scenario.clone())?;
    let jobs: Vec<(usize, u64)> = (0..policies.len())
        .flat_map(|p| seeds.iter().map(move |&s| (p, s)))
        .collect();
    let results: Vec<(usize, EpisodeLog)> = jobs
        .into_par_iter()
        .map(|(p, seed)| run_episode(&world, &policies[p], seed).map(|log| (p, log)))
        .collect::<Result<_, _>>()?;
    let mut columns = Vec::new();
    for (p, policy) in policies.iter().enumerate() {
        let mut logs: Vec<EpisodeLog> = results
            .iter()
            .filter(|(q, _)| *q == p)
            .map(|(_, log)| log.clone())
            .collect();
        logs.sort_by_key(|l| l.seed);
        let stats = summarize(&logs)?;
        let per_seed = logs.iter().map(seed_metrics).collect();
        columns.push(PolicyColumn {
            label: policy.label(),
            stats,
            per_seed,
            logs,
        });
    }
    let checks = trend_checks(&columns);
    Ok(Comparison {
        scenario_digest: scenario.digest(),
        columns,
        checks,
    })
}
