//! Multi-trajectory benchmark campaigns.
//!
//! Trajectory `i` draws its initial parameters from a child seed derived
//! from `(master_seed, i)` alone, so per-trajectory results do not depend on
//! the worker count or on scheduling order. Trajectories are spread over a
//! pool of `workers` threads and collected back in index order.
//!
//! Records persist as JSON lines: one header line carrying the schema
//! version and the resolved configuration, then one line per trajectory.

use std::io::{BufRead, Write};
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::time::Duration;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;
use web_time::Instant;

use crate::ansatz::{build_hwe, build_qaoa, AnsatzError, HweSpec, QaoaSpec};
use crate::driver::{bfgs_minimize, CostEvaluator, OptimizerOptions, Termination, TrajectoryResult};
use crate::pauli_ir::{self, IrError, PauliHamiltonian};
use crate::problems::{self, ProblemError};
use crate::qasm::{parse_qasm, ParamCircuit, QasmError};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("{0}")]
    Io(String),
    #[error("record schema version {found} does not match supported version {expected}")]
    Schema { found: u32, expected: u32 },
    #[error("line {line}: {message}")]
    Format { line: usize, message: String },
    #[error("speedup report needs a workers=1 baseline record")]
    MissingBaseline,
    #[error(transparent)]
    Problem(#[from] ProblemError),
    #[error(transparent)]
    Ir(#[from] IrError),
    #[error(transparent)]
    Qasm(#[from] QasmError),
    #[error(transparent)]
    Ansatz(#[from] AnsatzError),
}

fn io_err(path: &Path, e: impl std::fmt::Display) -> HarnessError {
    HarnessError::Io(format!("{}: {e}", path.display()))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ProblemSpec {
    Maxcut { n_vertices: usize, edge_probability: f64, seed: u64 },
    Tsp { n_vertices: usize, seed: u64, penalty: Option<f64> },
    GraphFile { path: PathBuf },
    TspFile { path: PathBuf },
    HamiltonianFile { path: PathBuf },
    /// Flat IR values inline.
    Hamiltonian { ir: Vec<f64> },
}

impl ProblemSpec {
    pub fn inline(h: &PauliHamiltonian) -> Self {
        ProblemSpec::Hamiltonian { ir: pauli_ir::to_values(h) }
    }

    pub fn hamiltonian(&self) -> Result<PauliHamiltonian, HarnessError> {
        let read = |p: &Path| std::fs::read_to_string(p).map_err(|e| io_err(p, e));
        Ok(match self {
            ProblemSpec::Maxcut { n_vertices, edge_probability, seed } => {
                problems::maxcut_hamiltonian(&problems::random_graph(*n_vertices, *edge_probability, *seed)?)?
            }
            ProblemSpec::Tsp { n_vertices, seed, penalty } => {
                let mut t = problems::random_tsp(*n_vertices, *seed)?;
                if let Some(p) = penalty {
                    t = problems::TspInstance::with_penalty(t.distances().to_vec(), *p, t.scale())?;
                }
                problems::qubo_to_ising(&problems::tsp_qubo(&t)?)?
            }
            ProblemSpec::GraphFile { path } => problems::maxcut_hamiltonian(&problems::parse_graph(&read(path)?)?)?,
            ProblemSpec::TspFile { path } => {
                problems::qubo_to_ising(&problems::tsp_qubo(&problems::parse_tsp(&read(path)?)?)?)?
            }
            ProblemSpec::HamiltonianFile { path } => pauli_ir::load_hamiltonian(path)?,
            ProblemSpec::Hamiltonian { ir } => pauli_ir::from_values(ir)?,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum AnsatzSpec {
    Qaoa { layers: usize },
    Hwe { layers: usize },
    QasmFile { path: PathBuf },
    Qasm { source: String },
}

impl AnsatzSpec {
    pub fn circuit(&self, h: &PauliHamiltonian) -> Result<ParamCircuit, HarnessError> {
        Ok(match self {
            AnsatzSpec::Qaoa { layers } => build_qaoa(&QaoaSpec { layers: *layers, cost_hamiltonian: h })?,
            AnsatzSpec::Hwe { layers } => build_hwe(&HweSpec { n_qubits: h.n_qubits(), layers: *layers })?,
            AnsatzSpec::QasmFile { path } => {
                parse_qasm(&std::fs::read_to_string(path).map_err(|e| io_err(path, e))?)?
            }
            AnsatzSpec::Qasm { source } => parse_qasm(source)?,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkConfig {
    pub problem: ProblemSpec,
    pub ansatz: AnsatzSpec,
    pub n_trajectories: usize,
    pub master_seed: u64,
    /// Closed interval for uniform initial parameters.
    pub init_range: [f64; 2],
    pub workers: usize,
    pub optimizer: OptimizerOptions,
}

impl BenchmarkConfig {
    /// 1000 trajectories, seed 0, initial parameters in `[-π, π]`, one worker.
    pub fn new(problem: ProblemSpec, ansatz: AnsatzSpec) -> Self {
        Self {
            problem,
            ansatz,
            n_trajectories: 1000,
            master_seed: 0,
            init_range: [-std::f64::consts::PI, std::f64::consts::PI],
            workers: 1,
            optimizer: OptimizerOptions::default(),
        }
    }

    pub fn validate(&self) -> Result<(), HarnessError> {
        if self.n_trajectories == 0 {
            return Err(HarnessError::Config("n_trajectories must be at least 1".into()));
        }
        if self.workers == 0 {
            return Err(HarnessError::Config("workers must be at least 1".into()));
        }
        let [lo, hi] = self.init_range;
        if !(lo.is_finite() && hi.is_finite() && lo <= hi) {
            return Err(HarnessError::Config(format!("init_range [{lo}, {hi}] is not a finite interval")));
        }
        if !(self.optimizer.gtol > 0.0) {
            return Err(HarnessError::Config("gtol must be positive".into()));
        }
        Ok(())
    }

    /// Equal apart from the worker count.
    pub fn same_campaign(&self, other: &Self) -> bool {
        Self { workers: 1, ..self.clone() } == Self { workers: 1, ..other.clone() }
    }
}

/// Child seed of trajectory `index`: the `index`-th output of a SplitMix64
/// stream started at `master_seed`.
pub fn child_seed(master_seed: u64, index: usize) -> u64 {
    let mut z = master_seed.wrapping_add((index as u64).wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub fn initial_params(seed: u64, n_params: usize, range: [f64; 2]) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let [lo, hi] = range;
    (0..n_params).map(|_| if lo < hi { rng.gen_range(lo..=hi) } else { lo }).collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryRecord {
    pub index: usize,
    pub seed: u64,
    pub initial_params: Vec<f64>,
    /// Driver errors are kept as messages; the campaign continues.
    pub outcome: Result<TrajectoryResult, String>,
}

impl TrajectoryRecord {
    pub fn result(&self) -> Option<&TrajectoryResult> {
        self.outcome.as_ref().ok()
    }

    /// Equality of everything except timings.
    pub fn same_science(&self, other: &Self) -> bool {
        let strip = |r: &Self| {
            let mut r = r.clone();
            if let Ok(t) = &mut r.outcome {
                t.quantum_time = Duration::ZERO;
                t.total_time = Duration::ZERO;
            }
            r
        };
        strip(self) == strip(other)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct QuantumTimeStats {
    pub median: Duration,
    pub mean: Duration,
    pub q1: Duration,
    pub q3: Duration,
    pub min: Duration,
    pub max: Duration,
}

impl QuantumTimeStats {
    /// Order statistics; for even counts the median is the lower-middle
    /// element, and quartiles use index `⌊(m−1)/4⌋` and `⌊3(m−1)/4⌋`.
    pub fn from_durations(values: &[Duration]) -> Option<Self> {
        if values.is_empty() {
            return None;
        }
        let mut v = values.to_vec();
        v.sort();
        let m = v.len();
        let total: u128 = v.iter().map(|d| d.as_nanos()).sum();
        Some(Self {
            median: v[(m - 1) / 2],
            mean: Duration::from_nanos((total / m as u128) as u64),
            q1: v[(m - 1) / 4],
            q3: v[3 * (m - 1) / 4],
            min: v[0],
            max: v[m - 1],
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct StatsNs {
    pub median_ns: u64,
    pub mean_ns: u64,
    pub q1_ns: u64,
    pub q3_ns: u64,
    pub min_ns: u64,
    pub max_ns: u64,
}

impl From<QuantumTimeStats> for StatsNs {
    fn from(s: QuantumTimeStats) -> Self {
        Self {
            median_ns: nanos(s.median),
            mean_ns: nanos(s.mean),
            q1_ns: nanos(s.q1),
            q3_ns: nanos(s.q3),
            min_ns: nanos(s.min),
            max_ns: nanos(s.max),
        }
    }
}

fn nanos(d: Duration) -> u64 {
    d.as_nanos().min(u64::MAX as u128) as u64
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunRecord {
    pub schema_version: u32,
    pub config: BenchmarkConfig,
    pub n_qubits: usize,
    pub n_params: usize,
    pub workers: usize,
    pub available_parallelism: usize,
    pub wall_time: Duration,
    pub trajectories: Vec<TrajectoryRecord>,
}

impl RunRecord {
    pub fn completed(&self) -> impl Iterator<Item = &TrajectoryResult> {
        self.trajectories.iter().filter_map(|t| t.result())
    }

    pub fn failed(&self) -> usize {
        self.trajectories.iter().filter(|t| t.outcome.is_err()).count()
    }

    pub fn final_costs(&self) -> Vec<f64> {
        self.completed().map(|r| r.final_cost).collect()
    }

    pub fn best_cost(&self) -> Option<f64> {
        self.completed().map(|r| r.final_cost).reduce(f64::min)
    }

    pub fn same_science(&self, other: &Self) -> bool {
        self.config.same_campaign(&other.config)
            && self.trajectories.len() == other.trajectories.len()
            && self.trajectories.iter().zip(&other.trajectories).all(|(a, b)| a.same_science(b))
    }
}

/// Order statistics of per-trajectory quantum time over completed
/// trajectories; `None` when nothing completed.
pub fn quantum_time_stats(r: &RunRecord) -> Option<QuantumTimeStats> {
    let times: Vec<Duration> = r.completed().map(|t| t.quantum_time).collect();
    QuantumTimeStats::from_durations(&times)
}

/// Resolves the problem and ansatz, then runs the campaign.
pub fn run_benchmark(cfg: &BenchmarkConfig) -> Result<RunRecord, HarnessError> {
    cfg.validate()?;
    let h = cfg.problem.hamiltonian()?;
    let circuit = cfg.ansatz.circuit(&h)?;
    run_campaign(cfg, &h, &circuit)
}

/// Runs a campaign on an already resolved Hamiltonian and circuit.
pub fn run_campaign(cfg: &BenchmarkConfig, h: &PauliHamiltonian, circuit: &ParamCircuit) -> Result<RunRecord, HarnessError> {
    cfg.validate()?;
    if circuit.n_qubits() != h.n_qubits() {
        return Err(HarnessError::Config(format!(
            "ansatz acts on {} qubits but the problem Hamiltonian has {}",
            circuit.n_qubits(),
            h.n_qubits()
        )));
    }
    let n = cfg.n_trajectories;
    let start = Instant::now();
    let run_one = |index: usize| run_trajectory(cfg, h, circuit, index);
    let trajectories: Vec<TrajectoryRecord> = if cfg.workers == 1 {
        (0..n).map(run_one).collect()
    } else {
        let next = AtomicUsize::new(0);
        let slots: Mutex<Vec<Option<TrajectoryRecord>>> = Mutex::new(vec![None; n]);
        std::thread::scope(|scope| {
            for _ in 0..cfg.workers.min(n) {
                scope.spawn(|| loop {
                    let i = next.fetch_add(1, Ordering::Relaxed);
                    if i >= n {
                        break;
                    }
                    let rec = run_one(i);
                    slots.lock().expect("results collector poisoned")[i] = Some(rec);
                });
            }
        });
        slots
            .into_inner()
            .expect("results collector poisoned")
            .into_iter()
            .map(|r| r.expect("every trajectory index is executed"))
            .collect()
    };
    Ok(RunRecord {
        schema_version: SCHEMA_VERSION,
        config: cfg.clone(),
        n_qubits: h.n_qubits(),
        n_params: circuit.n_params(),
        workers: cfg.workers,
        available_parallelism: std::thread::available_parallelism().map_or(1, |n| n.get()),
        wall_time: start.elapsed(),
        trajectories,
    })
}

fn run_trajectory(cfg: &BenchmarkConfig, h: &PauliHamiltonian, circuit: &ParamCircuit, index: usize) -> TrajectoryRecord {
    let seed = child_seed(cfg.master_seed, index);
    let x0 = initial_params(seed, circuit.n_params(), cfg.init_range);
    let outcome = CostEvaluator::new(circuit, h)
        .and_then(|mut e| bfgs_minimize(&mut e, &x0, &cfg.optimizer))
        .map_err(|e| e.to_string());
    TrajectoryRecord { index, seed, initial_params: x0, outcome }
}

// ---------------------------------------------------------------------------
// Speedup

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpeedupRow {
    pub workers: usize,
    pub median_wall_time_s: f64,
    pub speedup: f64,
    pub ideal_speedup: f64,
}

/// `speedup(N) = t(1) / t(N)` over campaign wall times. Several records with
/// the same worker count are reduced to their (lower) median.
pub fn speedup_report(records: &[RunRecord]) -> Result<Vec<SpeedupRow>, HarnessError> {
    let Some(first) = records.first() else {
        return Err(HarnessError::MissingBaseline);
    };
    if let Some(bad) = records.iter().find(|r| !r.config.same_campaign(&first.config)) {
        return Err(HarnessError::Config(format!(
            "record with workers={} belongs to a different campaign",
            bad.workers
        )));
    }
    let mut workers: Vec<usize> = records.iter().map(|r| r.workers).collect();
    workers.sort_unstable();
    workers.dedup();
    let median_time = |w: usize| {
        let mut t: Vec<Duration> = records.iter().filter(|r| r.workers == w).map(|r| r.wall_time).collect();
        t.sort();
        t[(t.len() - 1) / 2]
    };
    if workers.first() != Some(&1) {
        return Err(HarnessError::MissingBaseline);
    }
    let base = median_time(1).as_secs_f64();
    Ok(workers
        .into_iter()
        .map(|w| {
            let t = median_time(w).as_secs_f64();
            let speedup = if w == 1 { 1.0 } else { base / t };
            SpeedupRow { workers: w, median_wall_time_s: t, speedup, ideal_speedup: w as f64 }
        })
        .collect())
}

// ---------------------------------------------------------------------------
// Persistence

#[derive(Debug, Serialize, Deserialize)]
struct HeaderLine {
    kind: String,
    schema_version: u32,
    config: BenchmarkConfig,
    n_qubits: usize,
    n_params: usize,
    n_trajectories: usize,
    workers: usize,
    available_parallelism: usize,
    wall_time_ns: u64,
}

#[derive(Debug, Serialize, Deserialize)]
struct TrajectoryLine {
    kind: String,
    index: usize,
    seed: u64,
    initial_params: Vec<f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    final_params: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    final_cost: Option<f64>,
    converged: bool,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    termination: Option<Termination>,
    iterations: usize,
    evals: u64,
    quantum_time_ns: u64,
    total_time_ns: u64,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    error: Option<String>,
}

impl From<&TrajectoryRecord> for TrajectoryLine {
    fn from(t: &TrajectoryRecord) -> Self {
        let r = t.result();
        TrajectoryLine {
            kind: "trajectory".into(),
            index: t.index,
            seed: t.seed,
            initial_params: t.initial_params.clone(),
            final_params: r.map(|r| r.final_params.clone()),
            final_cost: r.map(|r| r.final_cost),
            converged: r.is_some_and(|r| r.converged),
            termination: r.map(|r| r.termination),
            iterations: r.map_or(0, |r| r.iterations),
            evals: r.map_or(0, |r| r.cost_evaluations),
            quantum_time_ns: r.map_or(0, |r| nanos(r.quantum_time)),
            total_time_ns: r.map_or(0, |r| nanos(r.total_time)),
            error: t.outcome.as_ref().err().cloned(),
        }
    }
}

impl TrajectoryLine {
    fn into_record(self, line: usize) -> Result<TrajectoryRecord, HarnessError> {
        let missing = |field: &str| HarnessError::Format { line, message: format!("missing `{field}`") };
        let outcome = match self.error {
            Some(e) => Err(e),
            None => Ok(TrajectoryResult {
                initial_params: self.initial_params.clone(),
                final_params: self.final_params.ok_or_else(|| missing("final_params"))?,
                final_cost: self.final_cost.ok_or_else(|| missing("final_cost"))?,
                converged: self.converged,
                termination: self.termination.ok_or_else(|| missing("termination"))?,
                iterations: self.iterations,
                cost_evaluations: self.evals,
                quantum_time: Duration::from_nanos(self.quantum_time_ns),
                total_time: Duration::from_nanos(self.total_time_ns),
            }),
        };
        Ok(TrajectoryRecord { index: self.index, seed: self.seed, initial_params: self.initial_params, outcome })
    }
}

impl RunRecord {
    pub fn write_jsonl<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        let header = HeaderLine {
            kind: "header".into(),
            schema_version: self.schema_version,
            config: self.config.clone(),
            n_qubits: self.n_qubits,
            n_params: self.n_params,
            n_trajectories: self.trajectories.len(),
            workers: self.workers,
            available_parallelism: self.available_parallelism,
            wall_time_ns: nanos(self.wall_time),
        };
        serde_json::to_writer(&mut w, &header)?;
        w.write_all(b"\n")?;
        for t in &self.trajectories {
            serde_json::to_writer(&mut w, &TrajectoryLine::from(t))?;
            w.write_all(b"\n")?;
        }
        w.flush()
    }

    pub fn read_jsonl<R: BufRead>(r: R) -> Result<Self, HarnessError> {
        let mut lines = r.lines().enumerate().filter(|(_, l)| l.as_ref().map_or(true, |l| !l.trim().is_empty()));
        let fmt = |line: usize, e: &dyn std::fmt::Display| HarnessError::Format { line: line + 1, message: e.to_string() };
        let (n0, first) = lines.next().ok_or(HarnessError::Format { line: 1, message: "empty record".into() })?;
        let first = first.map_err(|e| fmt(n0, &e))?;
        let probe: serde_json::Value = serde_json::from_str(&first).map_err(|e| fmt(n0, &e))?;
        let version = probe.get("schema_version").and_then(|v| v.as_u64()).unwrap_or(0) as u32;
        if version != SCHEMA_VERSION {
            return Err(HarnessError::Schema { found: version, expected: SCHEMA_VERSION });
        }
        let header: HeaderLine = serde_json::from_value(probe).map_err(|e| fmt(n0, &e))?;
        if header.kind != "header" {
            return Err(fmt(n0, &"first line is not a header"));
        }
        let mut trajectories = Vec::with_capacity(header.n_trajectories);
        for (n, line) in lines {
            let line = line.map_err(|e| fmt(n, &e))?;
            let t: TrajectoryLine = serde_json::from_str(&line).map_err(|e| fmt(n, &e))?;
            if t.index != trajectories.len() {
                return Err(fmt(n, &format!("trajectory index {} out of order", t.index)));
            }
            trajectories.push(t.into_record(n + 1)?);
        }
        if trajectories.len() != header.n_trajectories {
            return Err(HarnessError::Format {
                line: 0,
                message: format!("header announces {} trajectories, found {}", header.n_trajectories, trajectories.len()),
            });
        }
        Ok(RunRecord {
            schema_version: header.schema_version,
            config: header.config,
            n_qubits: header.n_qubits,
            n_params: header.n_params,
            workers: header.workers,
            available_parallelism: header.available_parallelism,
            wall_time: Duration::from_nanos(header.wall_time_ns),
            trajectories,
        })
    }

    pub fn save(&self, path: &Path) -> Result<(), HarnessError> {
        let f = std::fs::File::create(path).map_err(|e| io_err(path, e))?;
        self.write_jsonl(std::io::BufWriter::new(f)).map_err(|e| io_err(path, e))
    }

    pub fn load(path: &Path) -> Result<Self, HarnessError> {
        let f = std::fs::File::open(path).map_err(|e| io_err(path, e))?;
        Self::read_jsonl(std::io::BufReader::new(f))
    }

    pub fn summary(&self) -> RunSummary {
        let completed = self.completed().count();
        let converged = self.completed().filter(|r| r.converged).count();
        RunSummary {
            schema_version: self.schema_version,
            config: self.config.clone(),
            n_qubits: self.n_qubits,
            n_params: self.n_params,
            workers: self.workers,
            n_trajectories: self.trajectories.len(),
            completed,
            failed: self.failed(),
            converged,
            convergence_ratio: converged as f64 / self.trajectories.len().max(1) as f64,
            best_cost: self.best_cost(),
            quantum_time: quantum_time_stats(self).map(StatsNs::from),
            wall_time_ns: nanos(self.wall_time),
        }
    }

    /// Per-trajectory table for plotting.
    pub fn write_trajectories_csv<W: Write>(&self, w: W) -> Result<(), csv::Error> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record([
            "schema_version",
            "index",
            "seed",
            "final_cost",
            "converged",
            "iterations",
            "evals",
            "quantum_time_ns",
            "total_time_ns",
            "error",
        ])?;
        for t in &self.trajectories {
            let l = TrajectoryLine::from(t);
            out.write_record([
                self.schema_version.to_string(),
                l.index.to_string(),
                l.seed.to_string(),
                l.final_cost.map_or(String::new(), |c| format!("{c:?}")),
                l.converged.to_string(),
                l.iterations.to_string(),
                l.evals.to_string(),
                l.quantum_time_ns.to_string(),
                l.total_time_ns.to_string(),
                l.error.unwrap_or_default(),
            ])?;
        }
        out.flush()?;
        Ok(())
    }
}

/// Campaign summary document written next to a record.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub schema_version: u32,
    pub config: BenchmarkConfig,
    pub n_qubits: usize,
    pub n_params: usize,
    pub workers: usize,
    pub n_trajectories: usize,
    pub completed: usize,
    pub failed: usize,
    pub converged: usize,
    pub convergence_ratio: f64,
    pub best_cost: Option<f64>,
    pub quantum_time: Option<StatsNs>,
    pub wall_time_ns: u64,
}
