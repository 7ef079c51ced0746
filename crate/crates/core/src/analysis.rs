//! Post-processing of campaign records: discrete final-cost levels,
//! convergence ratios, cross-run agreement and quantum-time scaling.

use std::io::Write;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::driver::TrajectoryResult;
use crate::harness::{RunRecord, SpeedupRow, SCHEMA_VERSION};

pub const DEFAULT_GAP_FACTOR: f64 = 50.0;
pub const DEFAULT_GAP_FLOOR: f64 = 1e-9;
pub const DEFAULT_SPARSE_THRESHOLD: usize = 30;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AnalysisError {
    #[error("cost sequence is empty")]
    Empty,
    #[error("cost at position {0} is not finite")]
    NonFinite(usize),
    #[error("median quantum time of the smaller campaign is zero")]
    ZeroTime,
    #[error("record has no completed trajectories")]
    NoCompleted,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClusterOptions {
    /// A sorted gap splits two levels when it exceeds
    /// `max(floor, gap_factor · median gap)`.
    pub gap_factor: f64,
    pub floor: f64,
    pub sparse_threshold: usize,
}

impl Default for ClusterOptions {
    fn default() -> Self {
        Self { gap_factor: DEFAULT_GAP_FACTOR, floor: DEFAULT_GAP_FLOOR, sparse_threshold: DEFAULT_SPARSE_THRESHOLD }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Level {
    pub center: f64,
    pub count: usize,
    /// Sample variance (`n − 1` denominator); 0 for a single member.
    pub variance: f64,
    /// `count` is below the sparse threshold; statistics are unreliable.
    pub sparse: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LevelReport {
    /// Ascending by center.
    pub levels: Vec<Level>,
    pub sparse_threshold: usize,
    /// Trajectories without a final cost.
    pub unassigned: usize,
    pub convergence_ratio: Option<f64>,
}

impl LevelReport {
    pub fn total_assigned(&self) -> usize {
        self.levels.iter().map(|l| l.count).sum()
    }

    pub fn lowest(&self) -> Option<&Level> {
        self.levels.first()
    }
}

/// Groups final costs into discrete levels by splitting the sorted sequence
/// at anomalously large gaps.
pub fn cluster_levels(costs: &[f64], opts: &ClusterOptions) -> Result<LevelReport, AnalysisError> {
    if costs.is_empty() {
        return Err(AnalysisError::Empty);
    }
    if let Some(i) = costs.iter().position(|c| !c.is_finite()) {
        return Err(AnalysisError::NonFinite(i));
    }
    let mut v = costs.to_vec();
    v.sort_by(f64::total_cmp);
    let mut gaps: Vec<f64> = v.windows(2).map(|w| w[1] - w[0]).collect();
    let threshold = if gaps.is_empty() {
        f64::INFINITY
    } else {
        gaps.sort_by(f64::total_cmp);
        opts.floor.max(opts.gap_factor * gaps[(gaps.len() - 1) / 2])
    };
    let mut levels = Vec::new();
    let mut start = 0;
    for i in 1..=v.len() {
        if i == v.len() || v[i] - v[i - 1] > threshold {
            levels.push(summarize(&v[start..i], opts.sparse_threshold));
            start = i;
        }
    }
    Ok(LevelReport { levels, sparse_threshold: opts.sparse_threshold, unassigned: 0, convergence_ratio: None })
}

fn summarize(members: &[f64], sparse_threshold: usize) -> Level {
    // Welford keeps identical members at exactly zero variance.
    let (mut mean, mut m2) = (0.0, 0.0);
    for (k, &x) in members.iter().enumerate() {
        let d = x - mean;
        mean += d / (k + 1) as f64;
        m2 += d * (x - mean);
    }
    let n = members.len();
    Level {
        center: mean,
        count: n,
        variance: if n > 1 { m2 / (n - 1) as f64 } else { 0.0 },
        sparse: n < sparse_threshold,
    }
}

/// Levels of the completed trajectories of a record. Failed trajectories
/// are counted as unassigned.
pub fn record_levels(r: &RunRecord, opts: &ClusterOptions) -> Result<LevelReport, AnalysisError> {
    let costs = r.final_costs();
    if costs.is_empty() {
        return Err(AnalysisError::NoCompleted);
    }
    let mut report = cluster_levels(&costs, opts)?;
    report.unassigned = r.failed();
    report.convergence_ratio = Some(record_convergence_ratio(r));
    Ok(report)
}

/// Fraction of trajectories that met the gradient tolerance.
pub fn convergence_ratio<'a>(results: impl IntoIterator<Item = &'a TrajectoryResult>) -> Result<f64, AnalysisError> {
    let (mut total, mut converged) = (0usize, 0usize);
    for r in results {
        total += 1;
        converged += r.converged as usize;
    }
    if total == 0 {
        return Err(AnalysisError::Empty);
    }
    Ok(converged as f64 / total as f64)
}

/// Convergence ratio over every trajectory of a record; failures count as
/// not converged.
pub fn record_convergence_ratio(r: &RunRecord) -> f64 {
    let converged = r.completed().filter(|t| t.converged).count();
    converged as f64 / r.trajectories.len().max(1) as f64
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LevelMatch {
    /// Center of the run-0 level.
    pub reference_center: f64,
    pub run: usize,
    pub center: f64,
    pub difference: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AgreementReport {
    pub match_tolerance: f64,
    pub matches: Vec<LevelMatch>,
    /// `(run, center)` of non-sparse levels without a partner within tolerance.
    pub unmatched: Vec<(usize, f64)>,
    /// Largest matched center difference; 0 when nothing matched.
    pub max_discrepancy: f64,
}

impl AgreementReport {
    pub fn all_matched(&self) -> bool {
        self.unmatched.is_empty()
    }
}

/// Matches the non-sparse levels of every run against those of run 0.
/// Candidate pairs are taken greedily in order of increasing distance, each
/// level used at most once.
pub fn compare_runs(reports: &[LevelReport], match_tolerance: f64) -> AgreementReport {
    let dense = |r: &LevelReport| r.levels.iter().filter(|l| !l.sparse).map(|l| l.center).collect::<Vec<f64>>();
    let mut out = AgreementReport { match_tolerance, matches: vec![], unmatched: vec![], max_discrepancy: 0.0 };
    let Some(first) = reports.first() else {
        return out;
    };
    let reference = dense(first);
    for (run, report) in reports.iter().enumerate().skip(1) {
        let centers = dense(report);
        let mut pairs: Vec<(f64, usize, usize)> = Vec::new();
        for (i, &a) in reference.iter().enumerate() {
            for (j, &b) in centers.iter().enumerate() {
                let diff = (a - b).abs();
                if diff <= match_tolerance {
                    pairs.push((diff, i, j));
                }
            }
        }
        pairs.sort_by(|x, y| x.0.total_cmp(&y.0).then(reference[x.1].total_cmp(&reference[y.1])));
        let (mut ref_taken, mut run_taken) = (vec![false; reference.len()], vec![false; centers.len()]);
        for (diff, i, j) in pairs {
            if ref_taken[i] || run_taken[j] {
                continue;
            }
            ref_taken[i] = true;
            run_taken[j] = true;
            out.max_discrepancy = out.max_discrepancy.max(diff);
            out.matches.push(LevelMatch { reference_center: reference[i], run, center: centers[j], difference: diff });
        }
        for (j, &c) in centers.iter().enumerate() {
            if !run_taken[j] {
                out.unmatched.push((run, c));
            }
        }
        for (i, &c) in reference.iter().enumerate() {
            if !ref_taken[i] && !out.unmatched.contains(&(0, c)) {
                out.unmatched.push((0, c));
            }
        }
    }
    out.matches.sort_by(|a, b| a.run.cmp(&b.run).then(a.reference_center.total_cmp(&b.reference_center)));
    out
}

/// `median_q(large) / median_q(small)` of per-trajectory quantum time.
pub fn scaling_factor(small: &RunRecord, large: &RunRecord) -> Result<f64, AnalysisError> {
    let s = crate::harness::quantum_time_stats(small).ok_or(AnalysisError::NoCompleted)?;
    let l = crate::harness::quantum_time_stats(large).ok_or(AnalysisError::NoCompleted)?;
    if s.median.is_zero() {
        return Err(AnalysisError::ZeroTime);
    }
    Ok(l.median.as_secs_f64() / s.median.as_secs_f64())
}

/// `levels.csv`: one row per level and run. Variances are reported to two
/// significant digits.
pub fn write_levels_csv<W: Write>(w: W, reports: &[LevelReport]) -> Result<(), csv::Error> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(["schema_version", "run_id", "center", "count", "variance", "sparse"])?;
    for (run, r) in reports.iter().enumerate() {
        for l in &r.levels {
            out.write_record([
                SCHEMA_VERSION.to_string(),
                run.to_string(),
                format!("{:?}", l.center),
                l.count.to_string(),
                format!("{:.1e}", l.variance),
                l.sparse.to_string(),
            ])?;
        }
    }
    out.flush()?;
    Ok(())
}

pub fn write_agreement_csv<W: Write>(w: W, a: &AgreementReport) -> Result<(), csv::Error> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(["schema_version", "run_id", "reference_center", "center", "difference", "matched"])?;
    for m in &a.matches {
        out.write_record([
            SCHEMA_VERSION.to_string(),
            m.run.to_string(),
            format!("{:?}", m.reference_center),
            format!("{:?}", m.center),
            format!("{:?}", m.difference),
            "true".into(),
        ])?;
    }
    for &(run, c) in &a.unmatched {
        out.write_record([SCHEMA_VERSION.to_string(), run.to_string(), String::new(), format!("{c:?}"), String::new(), "false".into()])?;
    }
    out.flush()?;
    Ok(())
}

pub fn write_speedup_csv<W: Write>(w: W, rows: &[SpeedupRow]) -> Result<(), csv::Error> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(["schema_version", "workers", "median_wall_time_s", "speedup", "ideal_speedup"])?;
    for r in rows {
        out.write_record([
            SCHEMA_VERSION.to_string(),
            r.workers.to_string(),
            format!("{:?}", r.median_wall_time_s),
            format!("{:?}", r.speedup),
            format!("{:?}", r.ideal_speedup),
        ])?;
    }
    out.flush()?;
    Ok(())
}

/// `boxplot.csv`: quantum-time order statistics per record, in seconds.
pub fn write_boxplot_csv<W: Write>(w: W, records: &[RunRecord]) -> Result<(), csv::Error> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(["schema_version", "run_id", "n_qubits", "min_s", "q1_s", "median_s", "q3_s", "max_s", "mean_s"])?;
    for (run, r) in records.iter().enumerate() {
        let Some(s) = crate::harness::quantum_time_stats(r) else { continue };
        let mut row = vec![SCHEMA_VERSION.to_string(), run.to_string(), r.n_qubits.to_string()];
        row.extend([s.min, s.q1, s.median, s.q3, s.max, s.mean].iter().map(|d| format!("{:?}", d.as_secs_f64())));
        out.write_record(row)?;
    }
    out.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn opts() -> ClusterOptions {
        ClusterOptions::default()
    }

    #[test]
    fn identical_values_form_one_level() {
        let r = cluster_levels(&[-2.0; 40], &opts()).unwrap();
        assert_eq!(r.levels, vec![Level { center: -2.0, count: 40, variance: 0.0, sparse: false }]);
    }

    #[test]
    fn two_separated_groups() {
        let mut costs: Vec<f64> = (0..50).map(|i| -3.0 + i as f64 * 1e-10).collect();
        costs.extend((0..10).map(|i| -1.0 + i as f64 * 1e-10));
        let r = cluster_levels(&costs, &opts()).unwrap();
        assert_eq!(r.levels.len(), 2);
        assert_eq!(r.levels[0].count, 50);
        assert!(!r.levels[0].sparse);
        assert_eq!(r.levels[1].count, 10);
        assert!(r.levels[1].sparse);
        assert!(r.levels[0].center < r.levels[1].center);
        assert_eq!(r.total_assigned(), 60);
    }

    #[test]
    fn floor_prevents_splitting_noise() {
        // Median gap 0: every nonzero gap would otherwise split.
        let costs = [1.0, 1.0, 1.0, 1.0 + 1e-12, 1.0 + 2e-12];
        assert_eq!(cluster_levels(&costs, &opts()).unwrap().levels.len(), 1);
    }

    #[test]
    fn single_value_and_errors() {
        let r = cluster_levels(&[0.5], &opts()).unwrap();
        assert_eq!(r.levels.len(), 1);
        assert_eq!(r.levels[0].variance, 0.0);
        assert!(r.levels[0].sparse);
        assert_eq!(cluster_levels(&[], &opts()), Err(AnalysisError::Empty));
        assert_eq!(cluster_levels(&[0.0, f64::NAN], &opts()), Err(AnalysisError::NonFinite(1)));
    }

    #[test]
    fn sample_variance() {
        let r = cluster_levels(&[1.0, 1.0 + 1e-10, 1.0 + 2e-10], &opts()).unwrap();
        assert_eq!(r.levels.len(), 1);
        assert!((r.levels[0].variance - 1e-20).abs() < 1e-25);
    }

    fn report(centers: &[(f64, usize)]) -> LevelReport {
        LevelReport {
            levels: centers
                .iter()
                .map(|&(c, n)| Level { center: c, count: n, variance: 0.0, sparse: n < DEFAULT_SPARSE_THRESHOLD })
                .collect(),
            sparse_threshold: DEFAULT_SPARSE_THRESHOLD,
            unassigned: 0,
            convergence_ratio: None,
        }
    }

    #[test]
    fn compare_matches_within_tolerance() {
        let a = report(&[(-2.0, 100), (-1.0, 50), (0.0, 3)]);
        let b = report(&[(-2.0 + 1e-6, 90), (-1.0 - 2e-6, 60)]);
        let ag = compare_runs(&[a.clone(), b], 1e-4);
        assert!(ag.all_matched());
        assert_eq!(ag.matches.len(), 2);
        assert!((ag.max_discrepancy - 2e-6).abs() < 1e-12);

        let c = report(&[(-2.0, 100), (-0.5, 40)]);
        let ag = compare_runs(&[a, c], 1e-4);
        assert!(!ag.all_matched());
        assert!(ag.unmatched.contains(&(1, -0.5)));
        assert!(ag.unmatched.contains(&(0, -1.0)));
    }

    #[test]
    fn compare_edge_cases() {
        let ag = compare_runs(&[], 1e-4);
        assert!(ag.all_matched());
        let ag = compare_runs(&[report(&[(1.0, 50)])], 1e-4);
        assert_eq!(ag.max_discrepancy, 0.0);
        assert!(ag.matches.is_empty());
    }

    #[test]
    fn csv_headers() {
        let mut buf = Vec::new();
        write_levels_csv(&mut buf, &[report(&[(-1.5, 31)])]).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().next().unwrap(), "schema_version,run_id,center,count,variance,sparse");
        assert_eq!(text.lines().nth(1).unwrap(), "1,0,-1.5,31,0.0e0,false");
    }
}
