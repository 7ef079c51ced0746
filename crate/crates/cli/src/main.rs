//! `vqa-bench`: generate problems, run VQE/QAOA campaigns, compute exact
//! oracles and analyse run records.
//!
//! Exit codes: 0 success, 1 usage or configuration error, 2 runtime error.

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Deserialize;

use vqa_bench::analysis::{
    compare_runs, record_levels, scaling_factor, write_agreement_csv, write_boxplot_csv, write_levels_csv,
    write_speedup_csv, ClusterOptions, DEFAULT_GAP_FACTOR, DEFAULT_GAP_FLOOR, DEFAULT_SPARSE_THRESHOLD,
};
use vqa_bench::driver::{FiniteDifference, OptimizerOptions};
use vqa_bench::harness::{
    quantum_time_stats, run_campaign, speedup_report, AnsatzSpec, BenchmarkConfig, HarnessError, ProblemSpec, RunRecord,
    SCHEMA_VERSION,
};
use vqa_bench::pauli_ir::{ground_energy, load_hamiltonian, serialize_ham_ir, PauliHamiltonian};
use vqa_bench::problems::{
    brute_force_maxcut, brute_force_tsp, maxcut_hamiltonian, parse_graph, parse_tsp, qubo_to_ising, random_graph,
    random_tsp, serialize_graph, serialize_tsp, tsp_qubo, TspInstance,
};

#[derive(Debug, Parser)]
#[command(name = "vqa-bench", version, about = "Portable benchmarking of variational quantum algorithms")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Generate a random MaxCut graph or TSP instance and its Hamiltonian.
    Gen(GenArgs),
    /// Run a multi-trajectory VQE/QAOA campaign and write a JSON-lines record.
    Run(RunArgs),
    /// Print exact ground energies and brute-force solutions.
    Oracle(OracleArgs),
    /// Cluster final costs into levels and compare records.
    Analyze(AnalyzeArgs),
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum ProblemKind {
    Maxcut,
    Tsp,
}

#[derive(Debug, Args)]
struct GenArgs {
    problem: ProblemKind,
    /// Number of vertices.
    #[arg(long)]
    n: usize,
    /// Edge probability (MaxCut only).
    #[arg(long, default_value_t = 0.5)]
    p: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Constraint penalty (TSP only); defaults to n·max(D) + 1.
    #[arg(long)]
    penalty: Option<f64>,
    /// Output path prefix; `.graph`/`.tsp` and `.ham` are appended.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Deserialize)]
#[serde(rename_all = "lowercase")]
enum AnsatzKind {
    Qaoa,
    Hwe,
}

/// Campaign settings. Every field may also come from `--config`; flags win.
#[derive(Debug, Default, Args, Deserialize)]
#[serde(deny_unknown_fields)]
struct RunArgs {
    /// TOML file with any of the flags below as keys (dashes become underscores).
    #[arg(long)]
    #[serde(skip)]
    config: Option<PathBuf>,
    /// Problem Hamiltonian (`.ham` text or JSON).
    #[arg(long)]
    ham: Option<PathBuf>,
    /// MaxCut graph file, used instead of `--ham`.
    #[arg(long)]
    graph: Option<PathBuf>,
    /// TSP instance file, used instead of `--ham`.
    #[arg(long)]
    tsp: Option<PathBuf>,
    /// Built-in ansatz.
    #[arg(long, value_enum)]
    ansatz: Option<AnsatzKind>,
    /// Layers of the built-in ansatz [default: 1].
    #[arg(long)]
    layers: Option<usize>,
    /// OpenQASM 2.0 ansatz with `param_<k>` parameters, used instead of `--ansatz`.
    #[arg(long)]
    ansatz_qasm: Option<PathBuf>,
    /// Number of trajectories [default: 1000].
    #[arg(long)]
    trajectories: Option<usize>,
    /// Worker threads [default: 1].
    #[arg(long)]
    workers: Option<usize>,
    /// Master seed [default: 0].
    #[arg(long)]
    seed: Option<u64>,
    /// Lower end of the uniform initial-parameter range [default: -π].
    #[arg(long, allow_hyphen_values = true)]
    init_low: Option<f64>,
    /// Upper end of the uniform initial-parameter range [default: π].
    #[arg(long, allow_hyphen_values = true)]
    init_high: Option<f64>,
    /// Gradient sup-norm tolerance [default: 1e-5].
    #[arg(long)]
    gtol: Option<f64>,
    /// Iteration cap [default: 200 × number of parameters].
    #[arg(long)]
    maxiter: Option<usize>,
    /// Finite-difference scheme: forward or central [default: forward].
    #[arg(long)]
    fd_scheme: Option<String>,
    /// Record path [default: run.jsonl]; a `.summary.json` is written alongside.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct OracleArgs {
    #[arg(long, conflicts_with_all = ["graph", "tsp"])]
    ham: Option<PathBuf>,
    #[arg(long, conflicts_with = "tsp")]
    graph: Option<PathBuf>,
    #[arg(long)]
    tsp: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct AnalyzeArgs {
    /// JSON-lines run records.
    #[arg(required = true)]
    records: Vec<PathBuf>,
    /// Directory for CSV outputs.
    #[arg(long, default_value = ".")]
    out_dir: PathBuf,
    /// Largest center difference for two levels to match across runs.
    #[arg(long, default_value_t = 1e-6)]
    match_tol: f64,
    #[arg(long, default_value_t = DEFAULT_GAP_FACTOR)]
    gap_factor: f64,
    #[arg(long, default_value_t = DEFAULT_GAP_FLOOR)]
    gap_floor: f64,
    #[arg(long, default_value_t = DEFAULT_SPARSE_THRESHOLD)]
    sparse_threshold: usize,
}

/// Error carrying the process exit code.
struct CliError {
    code: u8,
    error: anyhow::Error,
}

impl CliError {
    fn usage(error: impl Into<anyhow::Error>) -> Self {
        Self { code: 1, error: error.into() }
    }
}

impl<E: Into<anyhow::Error>> From<E> for CliError {
    fn from(e: E) -> Self {
        Self { code: 2, error: e.into() }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:#}", self.error)
    }
}

type CliResult<T = ()> = Result<T, CliError>;

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let result = match cli.command {
        Command::Gen(a) => cmd_gen(a),
        Command::Run(a) => cmd_run(a),
        Command::Oracle(a) => cmd_oracle(a),
        Command::Analyze(a) => cmd_analyze(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.code)
        }
    }
}

fn write_file(path: &Path, contents: &str) -> CliResult {
    fs::write(path, contents).with_context(|| format!("writing {}", path.display()))?;
    Ok(())
}

fn read_file(path: &Path) -> CliResult<String> {
    Ok(fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?)
}

fn with_suffix(prefix: &Path, suffix: &str) -> PathBuf {
    let mut s = prefix.as_os_str().to_owned();
    s.push(suffix);
    PathBuf::from(s)
}

fn cmd_gen(a: GenArgs) -> CliResult {
    let (instance_path, instance_text, h) = match a.problem {
        ProblemKind::Maxcut => {
            let g = random_graph(a.n, a.p, a.seed).map_err(CliError::usage)?;
            let prefix = a.out.unwrap_or_else(|| PathBuf::from(format!("maxcut_n{}_s{}", a.n, a.seed)));
            (with_suffix(&prefix, ".graph"), serialize_graph(&g), (prefix, maxcut_hamiltonian(&g)?))
        }
        ProblemKind::Tsp => {
            let mut t = random_tsp(a.n, a.seed).map_err(CliError::usage)?;
            if let Some(p) = a.penalty {
                t = TspInstance::with_penalty(t.distances().to_vec(), p, t.scale()).map_err(CliError::usage)?;
            }
            let prefix = a.out.unwrap_or_else(|| PathBuf::from(format!("tsp_n{}_s{}", a.n, a.seed)));
            (with_suffix(&prefix, ".tsp"), serialize_tsp(&t), (prefix, qubo_to_ising(&tsp_qubo(&t)?)?))
        }
    };
    let (prefix, h) = h;
    let ham_path = with_suffix(&prefix, ".ham");
    write_file(&instance_path, &instance_text)?;
    write_file(&ham_path, &serialize_ham_ir(&h))?;
    println!("wrote {} and {} ({} qubits, {} terms)", instance_path.display(), ham_path.display(), h.n_qubits(), h.len());
    Ok(())
}

impl RunArgs {
    /// Fills unset fields from `other`.
    fn or(self, other: RunArgs) -> RunArgs {
        RunArgs {
            config: self.config,
            ham: self.ham.or(other.ham),
            graph: self.graph.or(other.graph),
            tsp: self.tsp.or(other.tsp),
            ansatz: self.ansatz.or(other.ansatz),
            layers: self.layers.or(other.layers),
            ansatz_qasm: self.ansatz_qasm.or(other.ansatz_qasm),
            trajectories: self.trajectories.or(other.trajectories),
            workers: self.workers.or(other.workers),
            seed: self.seed.or(other.seed),
            init_low: self.init_low.or(other.init_low),
            init_high: self.init_high.or(other.init_high),
            gtol: self.gtol.or(other.gtol),
            maxiter: self.maxiter.or(other.maxiter),
            fd_scheme: self.fd_scheme.or(other.fd_scheme),
            out: self.out.or(other.out),
        }
    }
}

/// Resolves flags and config file into a self-contained campaign config:
/// the Hamiltonian and any QASM source are embedded inline.
fn resolve_run(args: RunArgs) -> CliResult<(BenchmarkConfig, PathBuf)> {
    let args = match &args.config {
        Some(path) => {
            let text = read_file(path).map_err(|e| CliError::usage(e.error))?;
            let file: RunArgs = toml::from_str(&text)
                .with_context(|| format!("parsing config {}", path.display()))
                .map_err(CliError::usage)?;
            // Relative paths in the config file are taken relative to it.
            let base = path.parent().unwrap_or(Path::new("")).to_path_buf();
            let rebase = |p: Option<PathBuf>| p.map(|p| if p.is_relative() { base.join(p) } else { p });
            let file = RunArgs {
                ham: rebase(file.ham),
                graph: rebase(file.graph),
                tsp: rebase(file.tsp),
                ansatz_qasm: rebase(file.ansatz_qasm),
                out: rebase(file.out),
                ..file
            };
            args.or(file)
        }
        None => args,
    };

    let sources = [args.ham.is_some(), args.graph.is_some(), args.tsp.is_some()].iter().filter(|b| **b).count();
    if sources != 1 {
        return Err(CliError::usage(anyhow!("exactly one of --ham, --graph or --tsp is required")));
    }
    let h: PauliHamiltonian = if let Some(p) = &args.ham {
        load_hamiltonian(p)?
    } else if let Some(p) = &args.graph {
        maxcut_hamiltonian(&parse_graph(&read_file(p)?)?)?
    } else {
        let p = args.tsp.as_ref().expect("one source is set");
        qubo_to_ising(&tsp_qubo(&parse_tsp(&read_file(p)?)?)?)?
    };

    let layers = args.layers.unwrap_or(1);
    let ansatz = match (&args.ansatz, &args.ansatz_qasm) {
        (Some(_), Some(_)) => return Err(CliError::usage(anyhow!("--ansatz and --ansatz-qasm are mutually exclusive"))),
        (_, Some(p)) => AnsatzSpec::Qasm { source: read_file(p)? },
        (Some(AnsatzKind::Hwe), None) => AnsatzSpec::Hwe { layers },
        (Some(AnsatzKind::Qaoa), None) | (None, None) => AnsatzSpec::Qaoa { layers },
    };

    let mut optimizer = OptimizerOptions::default();
    if let Some(g) = args.gtol {
        optimizer.gtol = g;
    }
    optimizer.maxiter = args.maxiter;
    if let Some(s) = &args.fd_scheme {
        optimizer.finite_difference = s.parse::<FiniteDifference>().map_err(|e| CliError::usage(anyhow!(e)))?;
    }
    let defaults = BenchmarkConfig::new(ProblemSpec::inline(&h), ansatz);
    let cfg = BenchmarkConfig {
        n_trajectories: args.trajectories.unwrap_or(defaults.n_trajectories),
        master_seed: args.seed.unwrap_or(defaults.master_seed),
        init_range: [args.init_low.unwrap_or(defaults.init_range[0]), args.init_high.unwrap_or(defaults.init_range[1])],
        workers: args.workers.unwrap_or(defaults.workers),
        optimizer,
        ..defaults
    };
    cfg.validate().map_err(CliError::usage)?;
    Ok((cfg, args.out.unwrap_or_else(|| PathBuf::from("run.jsonl"))))
}

fn cmd_run(args: RunArgs) -> CliResult {
    let (cfg, out) = resolve_run(args)?;
    let h = cfg.problem.hamiltonian()?;
    let circuit = cfg.ansatz.circuit(&h).map_err(CliError::usage)?;
    let record = run_campaign(&cfg, &h, &circuit).map_err(|e| match e {
        HarnessError::Config(_) => CliError::usage(e),
        e => e.into(),
    })?;
    record.save(&out)?;
    let summary = record.summary();
    let summary_path = out.with_extension("summary.json");
    write_file(&summary_path, &serde_json::to_string_pretty(&summary)?)?;
    let median_q = quantum_time_stats(&record).map_or(0.0, |s| s.median.as_secs_f64());
    println!(
        "trajectories={} completed={} failed={} converged={} convergence_ratio={:.4} best_cost={} median_quantum_time_s={:.6} wall_time_s={:.3}",
        summary.n_trajectories,
        summary.completed,
        summary.failed,
        summary.converged,
        summary.convergence_ratio,
        summary.best_cost.map_or("none".to_string(), |c| format!("{c}")),
        median_q,
        record.wall_time.as_secs_f64(),
    );
    println!("wrote {} and {}", out.display(), summary_path.display());
    Ok(())
}

fn cmd_oracle(a: OracleArgs) -> CliResult {
    if let Some(p) = &a.ham {
        let h = load_hamiltonian(p)?;
        println!("n_qubits={} terms={} ground_energy={}", h.n_qubits(), h.len(), ground_energy(&h)?);
    } else if let Some(p) = &a.graph {
        let g = parse_graph(&read_file(p)?)?;
        let e0 = ground_energy(&maxcut_hamiltonian(&g)?)?;
        let (cut, partition) = brute_force_maxcut(&g)?;
        println!("max_cut={cut} ground_energy={e0}");
        println!("partition={partition}");
    } else if let Some(p) = &a.tsp {
        let t = parse_tsp(&read_file(p)?)?;
        let (length, tour) = brute_force_tsp(&t)?;
        let e0 = ground_energy(&qubo_to_ising(&tsp_qubo(&t)?)?)?;
        println!("tour_length={length} ground_energy={e0}");
        let tour: Vec<String> = tour.iter().map(usize::to_string).collect();
        println!("tour={}", tour.join(","));
    } else {
        return Err(CliError::usage(anyhow!("one of --ham, --graph or --tsp is required")));
    }
    Ok(())
}

fn cmd_analyze(a: AnalyzeArgs) -> CliResult {
    let records: Vec<RunRecord> = a
        .records
        .iter()
        .map(|p| RunRecord::load(p).with_context(|| format!("loading {}", p.display())))
        .collect::<Result<_, _>>()?;
    let opts = ClusterOptions { gap_factor: a.gap_factor, floor: a.gap_floor, sparse_threshold: a.sparse_threshold };
    fs::create_dir_all(&a.out_dir).with_context(|| format!("creating {}", a.out_dir.display()))?;
    let csv_file = |name: &str| -> CliResult<fs::File> {
        let path = a.out_dir.join(name);
        Ok(fs::File::create(&path).with_context(|| format!("creating {}", path.display()))?)
    };

    let mut reports = Vec::new();
    for (run, (path, r)) in a.records.iter().zip(&records).enumerate() {
        let report = record_levels(r, &opts).with_context(|| format!("clustering {}", path.display()))?;
        println!(
            "run {run}: {} n_qubits={} trajectories={} levels={} non_sparse={} lowest={} convergence_ratio={:.4}",
            path.display(),
            r.n_qubits,
            r.trajectories.len(),
            report.levels.len(),
            report.levels.iter().filter(|l| !l.sparse).count(),
            report.lowest().map_or(f64::NAN, |l| l.center),
            report.convergence_ratio.unwrap_or(0.0),
        );
        reports.push(report);
    }
    write_levels_csv(csv_file("levels.csv")?, &reports)?;
    write_boxplot_csv(csv_file("boxplot.csv")?, &records)?;
    let mut written = vec!["levels.csv", "boxplot.csv"];

    let mut analysis = serde_json::json!({
        "schema_version": SCHEMA_VERSION,
        "inputs": a.records,
        "configs": records.iter().map(|r| &r.config).collect::<Vec<_>>(),
        "cluster_options": opts,
        "levels": reports,
    });

    if records.len() >= 2 {
        let agreement = compare_runs(&reports, a.match_tol);
        write_agreement_csv(csv_file("agreement.csv")?, &agreement)?;
        written.push("agreement.csv");
        println!(
            "agreement: matched={} unmatched={} max_discrepancy={:e}",
            agreement.matches.len(),
            agreement.unmatched.len(),
            agreement.max_discrepancy
        );
        analysis["agreement"] = serde_json::to_value(&agreement)?;

        let same_campaign = records.iter().all(|r| r.config.same_campaign(&records[0].config));
        if same_campaign && records.iter().any(|r| r.workers == 1) && records.iter().any(|r| r.workers > 1) {
            let rows = speedup_report(&records)?;
            write_speedup_csv(csv_file("speedup.csv")?, &rows)?;
            written.push("speedup.csv");
            for row in &rows {
                println!("speedup workers={} speedup={:.3} ideal={}", row.workers, row.speedup, row.ideal_speedup);
            }
            analysis["speedup"] = serde_json::to_value(&rows)?;
        }

        let small = records.iter().min_by_key(|r| r.n_qubits).expect("non-empty");
        let large = records.iter().max_by_key(|r| r.n_qubits).expect("non-empty");
        if small.n_qubits < large.n_qubits {
            let s = scaling_factor(small, large)?;
            println!("scaling_factor({}->{} qubits)={s:.4}", small.n_qubits, large.n_qubits);
            analysis["scaling_factor"] = serde_json::json!({
                "small_qubits": small.n_qubits, "large_qubits": large.n_qubits, "factor": s,
            });
        }
    }
    let json_path = a.out_dir.join("analysis.json");
    write_file(&json_path, &serde_json::to_string_pretty(&analysis)?)?;
    println!("wrote {} and analysis.json to {}", written.join(", "), a.out_dir.display());
    Ok(())
}
