//! WebAssembly bindings for the browser demo.
//!
//! Each operation is a plain Rust function returning `Result<_, String>`, so
//! it is testable natively; the `#[wasm_bindgen]` wrappers only convert errors.
//! Campaigns run on one worker because the browser main thread cannot spawn.

use std::f64::consts::PI;

use serde_json::json;
use vqa_bench::analysis::{record_levels, ClusterOptions};
use vqa_bench::ansatz::{build_qaoa, QaoaSpec};
use vqa_bench::driver::CostEvaluator;
use vqa_bench::harness::{run_campaign, AnsatzSpec, BenchmarkConfig, ProblemSpec};
use vqa_bench::pauli_ir::ground_energy;
use vqa_bench::problems::{maxcut_hamiltonian, parse_graph};
use vqa_bench::qasm::parse_qasm;
use vqa_bench::statevector::{apply_bound_circuit, top_bitstrings, zero_state};
use wasm_bindgen::prelude::*;

/// Largest graph the demo accepts; keeps a campaign interactive.
pub const MAX_DEMO_QUBITS: usize = 12;

/// Energy of one-layer QAOA on a grid over `α ∈ [0, π)` and `β ∈ [0, π/2)`.
/// Row-major with `α` varying fastest; `values[r * resolution + c]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Landscape {
    pub resolution: usize,
    pub values: Vec<f64>,
    pub ground_energy: f64,
}

fn graph_hamiltonian(graph_text: &str) -> Result<vqa_bench::pauli_ir::PauliHamiltonian, String> {
    let g = parse_graph(graph_text).map_err(|e| e.to_string())?;
    if g.n_vertices() > MAX_DEMO_QUBITS {
        return Err(format!("the demo is limited to {MAX_DEMO_QUBITS} vertices"));
    }
    maxcut_hamiltonian(&g).map_err(|e| e.to_string())
}

pub fn qaoa_landscape(graph_text: &str, resolution: usize) -> Result<Landscape, String> {
    if !(2..=128).contains(&resolution) {
        return Err("resolution must lie in 2..=128".into());
    }
    let h = graph_hamiltonian(graph_text)?;
    let circuit = build_qaoa(&QaoaSpec { layers: 1, cost_hamiltonian: &h }).map_err(|e| e.to_string())?;
    let mut eval = CostEvaluator::new(&circuit, &h).map_err(|e| e.to_string())?;
    let step = |k: usize, span: f64| span * k as f64 / resolution as f64;
    let mut values = Vec::with_capacity(resolution * resolution);
    for r in 0..resolution {
        for c in 0..resolution {
            values.push(eval.evaluate_cost(&[step(c, PI), step(r, PI / 2.0)]).map_err(|e| e.to_string())?);
        }
    }
    Ok(Landscape { resolution, values, ground_energy: ground_energy(&h).map_err(|e| e.to_string())? })
}

/// Runs a single-worker campaign and returns its summary and energy levels
/// as a JSON document.
pub fn campaign_json(graph_text: &str, ansatz: &str, layers: usize, trajectories: usize, seed: u64) -> Result<String, String> {
    let h = graph_hamiltonian(graph_text)?;
    let spec = match ansatz {
        "qaoa" => AnsatzSpec::Qaoa { layers },
        "hwe" => AnsatzSpec::Hwe { layers },
        other => return Err(format!("unknown ansatz {other:?}")),
    };
    let circuit = spec.circuit(&h).map_err(|e| e.to_string())?;
    let mut cfg = BenchmarkConfig::new(ProblemSpec::inline(&h), spec);
    cfg.n_trajectories = trajectories;
    cfg.master_seed = seed;
    cfg.validate().map_err(|e| e.to_string())?;
    let record = run_campaign(&cfg, &h, &circuit).map_err(|e| e.to_string())?;
    let opts = ClusterOptions { sparse_threshold: (trajectories / 10).max(1), ..ClusterOptions::default() };
    let levels = record_levels(&record, &opts).map_err(|e| e.to_string())?;
    let doc = json!({
        "summary": record.summary(),
        "ground_energy": ground_energy(&h).map_err(|e| e.to_string())?,
        "levels": levels,
        "final_costs": record.final_costs(),
    });
    serde_json::to_string(&doc).map_err(|e| e.to_string())
}

/// Simulates a QASM circuit at the given parameters and returns the `top`
/// most likely basis states as `[[bitstring, probability], ...]` JSON.
pub fn simulate_qasm_json(source: &str, params: &[f64], top: usize) -> Result<String, String> {
    let c = parse_qasm(source).map_err(|e| e.to_string())?;
    if c.n_qubits() > MAX_DEMO_QUBITS {
        return Err(format!("the demo is limited to {MAX_DEMO_QUBITS} qubits"));
    }
    if params.len() != c.n_params() {
        return Err(format!("circuit takes {} parameters, got {}", c.n_params(), params.len()));
    }
    let bound = c.bind(params).map_err(|e| e.to_string())?;
    let s = apply_bound_circuit(zero_state(c.n_qubits()).map_err(|e| e.to_string())?, &bound).map_err(|e| e.to_string())?;
    let top = top_bitstrings(&s, top.min(1 << c.n_qubits())).map_err(|e| e.to_string())?;
    serde_json::to_string(&top).map_err(|e| e.to_string())
}

#[wasm_bindgen(js_name = qaoaLandscape)]
pub fn qaoa_landscape_js(graph_text: &str, resolution: usize) -> Result<Vec<f64>, JsError> {
    let l = qaoa_landscape(graph_text, resolution).map_err(|e| JsError::new(&e))?;
    // The ground energy rides along as the final element.
    let mut out = l.values;
    out.push(l.ground_energy);
    Ok(out)
}

#[wasm_bindgen(js_name = runCampaign)]
pub fn run_campaign_js(graph_text: &str, ansatz: &str, layers: usize, trajectories: usize, seed: u32) -> Result<String, JsError> {
    campaign_json(graph_text, ansatz, layers, trajectories, seed as u64).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen(js_name = simulateQasm)]
pub fn simulate_qasm_js(source: &str, params: &[f64], top: usize) -> Result<String, JsError> {
    simulate_qasm_json(source, params, top).map_err(|e| JsError::new(&e))
}
