//! Worked examples checked against independent oracles.

mod common;

use std::path::PathBuf;
use std::time::Duration;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use vqa_bench::analysis::{cluster_levels, compare_runs, convergence_ratio, scaling_factor, ClusterOptions, AnalysisError};
use vqa_bench::ansatz::{build_qaoa, QaoaSpec};
use vqa_bench::driver::{bfgs_minimize, CostEvaluator, OptimizerOptions, Termination, TrajectoryResult};
use vqa_bench::harness::{
    initial_params, quantum_time_stats, run_benchmark, AnsatzSpec, BenchmarkConfig, ProblemSpec, RunRecord, TrajectoryRecord,
    SCHEMA_VERSION,
};
use vqa_bench::pauli_ir::{dense_ground_energy, ground_energy, load_hamiltonian, to_dense_matrix};
use vqa_bench::problems::{
    brute_force_maxcut, brute_force_tsp, maxcut_hamiltonian, qubo_to_ising, random_graph, tsp_qubo, Graph, QuboProblem,
    TspInstance,
};
use vqa_bench::qasm::parse_qasm;
use vqa_bench::statevector::{apply_bound_circuit, expectation, zero_state};

use common::*;

fn data(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("data").join(name)
}

const H2_GROUND: f64 = -1.136189454065923;

#[test]
fn h2_file_ground_energy() {
    let h = load_hamiltonian(&data("h2.ham")).unwrap();
    assert_eq!(h.n_qubits(), 4);
    assert_eq!(h.len(), 15);
    let oracle = min_eigenvalue(&hamiltonian_matrix(&h));
    assert!((ground_energy(&h).unwrap() - oracle).abs() < 1e-10);
    assert!((dense_ground_energy(&h).unwrap() - oracle).abs() < 1e-10);
    assert!((min_eigenvalue(&to_dense_matrix(&h).unwrap()) - oracle).abs() < 1e-10);
    assert!((oracle - H2_GROUND).abs() < 1e-9);
}

#[test]
fn h2_double_excitation_circuit_reaches_ground() {
    let h = load_hamiltonian(&data("h2.ham")).unwrap();
    let c = parse_qasm(&std::fs::read_to_string(data("uccsd.qasm")).unwrap()).unwrap();
    assert_eq!(c.n_params(), 1);
    let mut eval = CostEvaluator::new(&c, &h).unwrap();
    let r = bfgs_minimize(&mut eval, &[0.0], &OptimizerOptions::default()).unwrap();
    assert!(r.converged);
    assert!((r.final_cost - H2_GROUND).abs() < 1e-8);
    // θ = 0 is the Hartree-Fock determinant.
    let hf = eval.evaluate_cost(&[0.0]).unwrap();
    assert!((hf + 1.117349035).abs() < 1e-8);
}

#[test]
fn maxcut_small_graphs() {
    let tri = Graph::unweighted(3, &[(0, 1), (1, 2), (0, 2)]).unwrap();
    assert_eq!(ground_energy(&maxcut_hamiltonian(&tri).unwrap()).unwrap(), -2.0);
    let k4 = Graph::unweighted(4, &[(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)]).unwrap();
    assert_eq!(brute_force_maxcut(&k4).unwrap().0, 4.0);
}

#[test]
fn maxcut_sixteen_vertices() {
    let g = random_graph(16, 0.4, 99).unwrap();
    let e0 = ground_energy(&maxcut_hamiltonian(&g).unwrap()).unwrap();
    // Independent enumeration of cut sizes.
    let best = (0u32..1 << 16)
        .map(|m| g.edges().iter().filter(|e| (m >> e.u & 1) != (m >> e.v & 1)).count())
        .max()
        .unwrap();
    assert_eq!(e0, -(best as f64));
}

#[test]
fn random_graph_edge_density() {
    let (n, p) = (12, 0.3);
    let total: usize = (0..1000).map(|s| random_graph(n, p, s).unwrap().edges().len()).sum();
    let expected = p * (n * (n - 1) / 2) as f64;
    let mean = total as f64 / 1000.0;
    assert!((mean - expected).abs() / expected < 0.05, "mean {mean} vs {expected}");
}

/// `s·Σ_{i≠i'} Σ_j D[i][i'] x[i][j] x[i'][j+1] + P·Σ_rows (1 − Σ x)² + P·Σ_cols (1 − Σ x)²`
/// on the full n×n assignment with vertex 0 fixed at position 0.
fn direct_tsp_cost(t: &TspInstance, bits: u64) -> f64 {
    let n = t.n_vertices();
    let x = |v: usize, j: usize| -> f64 {
        match (v, j) {
            (0, 0) => 1.0,
            (0, _) | (_, 0) => 0.0,
            _ => (bits >> t.var_index(v, j) & 1) as f64,
        }
    };
    let mut length = 0.0;
    for j in 0..n {
        for a in 0..n {
            for b in 0..n {
                if a != b {
                    length += t.distance(a, b) * x(a, j) * x(b, (j + 1) % n);
                }
            }
        }
    }
    let mut penalty = 0.0;
    for k in 1..n {
        let row: f64 = (1..n).map(|j| x(k, j)).sum();
        let col: f64 = (1..n).map(|v| x(v, k)).sum();
        penalty += (1.0 - row).powi(2) + (1.0 - col).powi(2);
    }
    t.scale() * (length + t.penalty() * penalty)
}

#[test]
fn tsp_three_vertices_exhaustive() {
    let d = vec![vec![0.0, 2.0, 3.0], vec![2.0, 0.0, 4.0], vec![3.0, 4.0, 0.0]];
    for t in [TspInstance::new(d.clone()).unwrap(), TspInstance::with_penalty(d, 7.5, 0.5).unwrap()] {
        let q = tsp_qubo(&t).unwrap();
        assert_eq!(q.n_vars(), 4);
        let h = qubo_to_ising(&q).unwrap();
        for b in 0..16 {
            let want = direct_tsp_cost(&t, b);
            assert!((q.evaluate(b) - want).abs() < 1e-10, "bits {b:04b}");
            assert!((h.basis_energy(b) - want).abs() < 1e-10);
        }
    }
}

#[test]
fn tsp_four_vertex_unit_square() {
    let r2 = std::f64::consts::SQRT_2;
    let d = vec![vec![0.0, 1.0, r2, 1.0], vec![1.0, 0.0, 1.0, r2], vec![r2, 1.0, 0.0, 1.0], vec![1.0, r2, 1.0, 0.0]];
    let t = TspInstance::new(d).unwrap();
    let (len, tour) = brute_force_tsp(&t).unwrap();
    assert!((len - 4.0).abs() < 1e-12);
    assert_eq!(tour, vec![0, 1, 2, 3]);
    let h = qubo_to_ising(&tsp_qubo(&t).unwrap()).unwrap();
    assert_eq!(h.n_qubits(), 9);
    assert!((ground_energy(&h).unwrap() - 4.0).abs() < 1e-9);
    for b in 0..1u64 << 9 {
        assert!((h.basis_energy(b) - direct_tsp_cost(&t, b)).abs() < 1e-9);
    }
}

#[test]
fn eight_variable_qubo_sweep() {
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    let m: Vec<Vec<f64>> = {
        let mut m = vec![vec![0.0; 8]; 8];
        for i in 0..8 {
            for j in i..8 {
                let v = rng.gen_range(-3.0..3.0);
                m[i][j] = v;
                m[j][i] = v;
            }
        }
        m
    };
    let q = QuboProblem::from_matrix(&m, 0.75).unwrap();
    let h = qubo_to_ising(&q).unwrap();
    for b in 0..256u64 {
        let x: Vec<f64> = (0..8).map(|i| (b >> i & 1) as f64).collect();
        let want = 0.75 + (0..8).flat_map(|i| (0..8).map(move |j| (i, j))).map(|(i, j)| x[i] * m[i][j] * x[j]).sum::<f64>();
        assert!((h.basis_energy(b) - want).abs() < 1e-10);
    }
}

#[test]
fn qaoa_reference_values() {
    let edge = maxcut_hamiltonian(&Graph::unweighted(2, &[(0, 1)]).unwrap()).unwrap();
    let c = build_qaoa(&QaoaSpec { layers: 1, cost_hamiltonian: &edge }).unwrap();
    let s = apply_bound_circuit(zero_state(2).unwrap(), &c.bind(&[0.0, 0.0]).unwrap()).unwrap();
    assert!((expectation(&s, &edge).unwrap() + 0.5).abs() < 1e-12);

    let tri = maxcut_hamiltonian(&Graph::unweighted(3, &[(0, 1), (1, 2), (0, 2)]).unwrap()).unwrap();
    let c = build_qaoa(&QaoaSpec { layers: 1, cost_hamiltonian: &tri }).unwrap();
    let hm = hamiltonian_matrix(&tri);
    let mut best = f64::INFINITY;
    for a in 0..64 {
        for b in 0..64 {
            let p = [2.0 * std::f64::consts::PI * a as f64 / 64.0, std::f64::consts::PI * b as f64 / 64.0];
            let u = circuit_unitary(&c.bind(&p).unwrap());
            let v = M::from_iterator(8, 1, u.column(0).iter().copied());
            best = best.min((v.adjoint() * &hm * &v)[(0, 0)].re);
        }
    }
    assert!(best <= -1.9, "grid minimum {best}");
}

#[test]
fn single_edge_from_random_starts() {
    let edge = maxcut_hamiltonian(&Graph::unweighted(2, &[(0, 1)]).unwrap()).unwrap();
    let c = build_qaoa(&QaoaSpec { layers: 1, cost_hamiltonian: &edge }).unwrap();
    let best = (0..50)
        .map(|seed| {
            let mut eval = CostEvaluator::new(&c, &edge).unwrap();
            let x0 = initial_params(seed, 2, [-std::f64::consts::PI, std::f64::consts::PI]);
            bfgs_minimize(&mut eval, &x0, &OptimizerOptions::default()).unwrap().final_cost
        })
        .fold(f64::INFINITY, f64::min);
    assert!(best <= -0.999);
}

#[test]
fn single_edge_campaign_records_quantum_time() {
    let edge = maxcut_hamiltonian(&Graph::unweighted(2, &[(0, 1)]).unwrap()).unwrap();
    let mut cfg = BenchmarkConfig::new(ProblemSpec::inline(&edge), AnsatzSpec::Qaoa { layers: 1 });
    cfg.n_trajectories = 100;
    let r = run_benchmark(&cfg).unwrap();
    let solved = r.completed().filter(|t| t.final_cost <= -0.999).count();
    assert!(solved > 0);
    assert!(quantum_time_stats(&r).unwrap().median > Duration::ZERO);
    for t in r.completed() {
        assert!(t.quantum_time <= t.total_time);
    }
}

fn gaussian(rng: &mut ChaCha8Rng) -> f64 {
    let (u1, u2): (f64, f64) = (rng.gen_range(f64::EPSILON..1.0), rng.gen());
    (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
}

#[test]
fn clustering_examples() {
    let r = cluster_levels(&[-5.0, -5.0, -5.0, -3.0, -3.0], &ClusterOptions::default()).unwrap();
    let summary: Vec<(f64, usize, f64)> = r.levels.iter().map(|l| (l.center, l.count, l.variance)).collect();
    assert_eq!(summary, vec![(-5.0, 3, 0.0), (-3.0, 2, 0.0)]);

    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let costs: Vec<f64> = [-10.0, -8.0, -6.0]
        .iter()
        .flat_map(|&c| (0..300).map(|_| c + 1e-7 * gaussian(&mut rng)).collect::<Vec<_>>())
        .collect();
    // Far-tail spacings of a normal sample exceed 50 median gaps, so the
    // default rule may shave a few stragglers into sparse levels.
    let r = cluster_levels(&costs, &ClusterOptions::default()).unwrap();
    let dense: Vec<_> = r.levels.iter().filter(|l| !l.sparse).collect();
    assert_eq!(dense.len(), 3);
    for (l, c) in dense.iter().zip([-10.0, -8.0, -6.0]) {
        assert!((l.center - c).abs() < 1e-7);
        assert!(l.count >= 290);
    }
    assert_eq!(r.total_assigned(), 900);
    let wide = ClusterOptions { gap_factor: 1000.0, ..ClusterOptions::default() };
    let r = cluster_levels(&costs, &wide).unwrap();
    assert_eq!(r.levels.len(), 3);
    for (l, c) in r.levels.iter().zip([-10.0, -8.0, -6.0]) {
        assert!((l.center - c).abs() < 1e-7);
        assert_eq!(l.count, 300);
        assert!(!l.sparse);
    }

    let clump: Vec<f64> = (0..20).map(|_| 1.0 + 1e-7 * gaussian(&mut rng)).collect();
    let r = cluster_levels(&clump, &ClusterOptions::default()).unwrap();
    assert_eq!(r.levels.len(), 1);
    assert!(r.levels[0].sparse);
    assert_eq!(cluster_levels(&[], &ClusterOptions::default()), Err(AnalysisError::Empty));
}

fn result(converged: bool, cost: f64, quantum_ms: u64) -> TrajectoryResult {
    TrajectoryResult {
        initial_params: vec![0.0],
        final_params: vec![0.0],
        final_cost: cost,
        converged,
        termination: if converged { Termination::Converged } else { Termination::MaxIterations },
        iterations: 1,
        cost_evaluations: 3,
        quantum_time: Duration::from_millis(quantum_ms),
        total_time: Duration::from_millis(quantum_ms + 1),
    }
}

fn record(results: Vec<TrajectoryResult>) -> RunRecord {
    let edge = maxcut_hamiltonian(&Graph::unweighted(2, &[(0, 1)]).unwrap()).unwrap();
    RunRecord {
        schema_version: SCHEMA_VERSION,
        config: BenchmarkConfig::new(ProblemSpec::inline(&edge), AnsatzSpec::Qaoa { layers: 1 }),
        n_qubits: 2,
        n_params: 2,
        workers: 1,
        available_parallelism: 1,
        wall_time: Duration::from_secs(1),
        trajectories: results
            .into_iter()
            .enumerate()
            .map(|(index, r)| TrajectoryRecord { index, seed: 0, initial_params: vec![0.0], outcome: Ok(r) })
            .collect(),
    }
}

#[test]
fn convergence_ratio_examples() {
    let mixed: Vec<_> = (0..1000).map(|i| result(i < 841, -1.0, 1)).collect();
    assert_eq!(convergence_ratio(&mixed).unwrap(), 0.841);
    let mut reversed = mixed.clone();
    reversed.reverse();
    assert_eq!(convergence_ratio(&reversed).unwrap(), 0.841);
    assert_eq!(convergence_ratio(&[result(true, 0.0, 1)]).unwrap(), 1.0);
    assert_eq!(convergence_ratio(&[result(false, 0.0, 1)]).unwrap(), 0.0);
    assert_eq!(convergence_ratio(&[]), Err(AnalysisError::Empty));
}

#[test]
fn scaling_factor_examples() {
    let small = record(vec![result(true, 0.0, 90), result(true, 0.0, 100), result(true, 0.0, 300)]);
    let large = record(vec![result(true, 0.0, 170), result(true, 0.0, 160), result(true, 0.0, 400)]);
    assert!((scaling_factor(&small, &large).unwrap() - 1.7).abs() < 1e-12);
    assert_eq!(scaling_factor(&small, &small).unwrap(), 1.0);
    let zero = record(vec![result(true, 0.0, 0)]);
    assert_eq!(scaling_factor(&zero, &large), Err(AnalysisError::ZeroTime));
}

#[test]
fn compare_runs_examples() {
    let base: Vec<f64> = (0..40).map(|_| -2.0).chain((0..40).map(|_| -1.0)).collect();
    let shifted: Vec<f64> = base.iter().map(|c| c + 1e-13).collect();
    let a = cluster_levels(&base, &ClusterOptions::default()).unwrap();
    let b = cluster_levels(&shifted, &ClusterOptions::default()).unwrap();
    let same = compare_runs(&[a.clone(), a.clone()], 1e-6);
    assert!(same.all_matched());
    assert_eq!(same.max_discrepancy, 0.0);
    let ag = compare_runs(&[a, b], 1e-6);
    assert!(ag.all_matched());
    assert_eq!(ag.matches.len(), 2);
    assert!((ag.max_discrepancy - 1e-13).abs() < 1e-15);
}
