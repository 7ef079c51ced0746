//! Parameterized circuit builders.

use thiserror::Error;

use crate::pauli_ir::PauliHamiltonian;
use crate::qasm::{GateKind, GateOp, ParamCircuit, ParamExpr, QasmError};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AnsatzError {
    #[error("cost Hamiltonian term {0} is not diagonal")]
    NonDiagonal(String),
    #[error("cost Hamiltonian term {0} acts on more than two qubits")]
    HighOrderTerm(String),
    #[error("layer count must be at least 1")]
    NoLayers,
    #[error(transparent)]
    Circuit(#[from] QasmError),
}

#[derive(Debug, Clone)]
pub struct QaoaSpec<'a> {
    pub layers: usize,
    pub cost_hamiltonian: &'a PauliHamiltonian,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct HweSpec {
    pub n_qubits: usize,
    pub layers: usize,
}

/// QAOA circuit: a Hadamard on every qubit, then per layer `j` the phase
/// separator `exp(-i α_j H_C)` followed by the transverse-field mixer
/// `Π rx(2 β_j)`. Parameters are ordered `(α_0, β_0, α_1, β_1, …)`.
///
/// Identity terms only contribute a global phase and are skipped.
pub fn build_qaoa(spec: &QaoaSpec<'_>) -> Result<ParamCircuit, AnsatzError> {
    if spec.layers == 0 {
        return Err(AnsatzError::NoLayers);
    }
    let h = spec.cost_hamiltonian;
    let n = h.n_qubits();
    for (_, w) in h.terms() {
        if !w.is_diagonal() {
            return Err(AnsatzError::NonDiagonal(w.label()));
        }
        if w.weight() > 2 {
            return Err(AnsatzError::HighOrderTerm(w.label()));
        }
    }
    let mut ops: Vec<GateOp> = (0..n).map(|q| GateOp::new(GateKind::H, vec![], vec![q])).collect();
    for layer in 0..spec.layers {
        let (alpha, beta) = (2 * layer, 2 * layer + 1);
        for (c, w) in h.terms() {
            let support = w.support();
            let arg = ParamExpr::scaled_param(2.0 * c, alpha);
            match support.len() {
                0 => {}
                1 => ops.push(GateOp::new(GateKind::Rz, vec![arg], support)),
                _ => ops.push(GateOp::new(GateKind::Rzz, vec![arg], support)),
            }
        }
        for q in 0..n {
            ops.push(GateOp::new(GateKind::Rx, vec![ParamExpr::scaled_param(2.0, beta)], vec![q]));
        }
    }
    Ok(ParamCircuit::new(n, ops)?)
}

/// Hardware-efficient ansatz: each layer is an `ry` on every qubit followed
/// by a ring of `cz` gates, closed by a final `ry` layer.
/// `n_params = n_qubits · (layers + 1)`.
pub fn build_hwe(spec: &HweSpec) -> Result<ParamCircuit, AnsatzError> {
    if spec.layers == 0 {
        return Err(AnsatzError::NoLayers);
    }
    let n = spec.n_qubits;
    let mut ops = Vec::new();
    let mut next_param = 0;
    let mut ry_layer = |ops: &mut Vec<GateOp>| {
        for q in 0..n {
            ops.push(GateOp::new(GateKind::Ry, vec![ParamExpr::param(next_param)], vec![q]));
            next_param += 1;
        }
    };
    for _ in 0..spec.layers {
        ry_layer(&mut ops);
        match n {
            1 => {}
            2 => ops.push(GateOp::new(GateKind::Cz, vec![], vec![0, 1])),
            _ => {
                for q in 0..n {
                    ops.push(GateOp::new(GateKind::Cz, vec![], vec![q, (q + 1) % n]));
                }
            }
        }
    }
    ry_layer(&mut ops);
    Ok(ParamCircuit::new(n, ops)?)
}
