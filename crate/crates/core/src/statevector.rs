//! Dense statevector engine.
//!
//! Amplitude index bit `q` is the state of qubit `q`. Single-qubit gates run
//! as a 2×2 kernel over strided amplitude pairs; two-qubit gates as a 4×4
//! kernel over amplitude quadruples. Reductions accumulate in fixed chunks
//! of [`REDUCTION_CHUNK`] amplitudes so results are bit-identical for a
//! given input.

use std::f64::consts::{FRAC_1_SQRT_2, FRAC_PI_4};

use num_complex::Complex64;
use thiserror::Error;

use crate::pauli_ir::PauliHamiltonian;
use crate::qasm::{BoundCircuit, BoundGate, GateKind};

/// Default register limit: 2^26 amplitudes take 1 GiB.
pub const DEFAULT_MAX_QUBITS: usize = 26;
pub const REDUCTION_CHUNK: usize = 4096;
/// Largest imaginary residue tolerated in an expectation value.
pub const IMAG_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum StateError {
    #[error("{n_qubits} qubits is outside the supported range 1..={max}")]
    Size { n_qubits: usize, max: usize },
    #[error("dimension mismatch: state has {state} qubits, operand has {operand}")]
    DimensionMismatch { state: usize, operand: usize },
    #[error("expectation value has imaginary part {0:e}")]
    ImaginaryResidue(f64),
    #[error("requested {k} basis states from a {dim}-dimensional state")]
    TooMany { k: usize, dim: usize },
}

#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    n_qubits: usize,
    amplitudes: Vec<Complex64>,
}

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);

/// `|0…0⟩` on `n` qubits, limited to [`DEFAULT_MAX_QUBITS`].
pub fn zero_state(n: usize) -> Result<StateVector, StateError> {
    zero_state_capped(n, DEFAULT_MAX_QUBITS)
}

pub fn zero_state_capped(n: usize, max_qubits: usize) -> Result<StateVector, StateError> {
    if n == 0 || n > max_qubits {
        return Err(StateError::Size { n_qubits: n, max: max_qubits });
    }
    let mut amplitudes = vec![ZERO; 1 << n];
    amplitudes[0] = ONE;
    Ok(StateVector { n_qubits: n, amplitudes })
}

impl StateVector {
    /// Wraps raw amplitudes; the length must be a power of two.
    pub fn from_amplitudes(amplitudes: Vec<Complex64>) -> Result<Self, StateError> {
        let len = amplitudes.len();
        if len < 2 || !len.is_power_of_two() {
            return Err(StateError::Size { n_qubits: 0, max: DEFAULT_MAX_QUBITS });
        }
        Ok(Self { n_qubits: len.trailing_zeros() as usize, amplitudes })
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }

    pub fn norm_sqr(&self) -> f64 {
        chunked_sum(&self.amplitudes, |a| a.norm_sqr())
    }

    pub fn probabilities(&self) -> Vec<f64> {
        self.amplitudes.iter().map(|a| a.norm_sqr()).collect()
    }

    pub fn apply_gate(&mut self, gate: &BoundGate) {
        match gate.kind.n_qubits() {
            1 => apply_1q(&mut self.amplitudes, gate.qubits[0], &single_qubit_matrix(gate.kind, &gate.args)),
            _ => apply_2q(
                &mut self.amplitudes,
                gate.qubits[0],
                gate.qubits[1],
                &two_qubit_matrix(gate.kind, &gate.args),
            ),
        }
    }

    pub fn apply(&mut self, c: &BoundCircuit) -> Result<(), StateError> {
        if c.n_qubits != self.n_qubits {
            return Err(StateError::DimensionMismatch { state: self.n_qubits, operand: c.n_qubits });
        }
        for g in &c.gates {
            self.apply_gate(g);
        }
        Ok(())
    }
}

/// Applies every gate of `c` to `s` and returns the new state.
pub fn apply_bound_circuit(mut s: StateVector, c: &BoundCircuit) -> Result<StateVector, StateError> {
    s.apply(c)?;
    Ok(s)
}

fn chunked_sum<T>(values: &[T], f: impl Fn(&T) -> f64) -> f64 {
    values.chunks(REDUCTION_CHUNK).map(|chunk| chunk.iter().map(&f).sum::<f64>()).sum()
}

type Mat2 = [[Complex64; 2]; 2];
type Mat4 = [[Complex64; 4]; 4];

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

fn u3(theta: f64, phi: f64, lambda: f64) -> Mat2 {
    let (s, co) = (theta / 2.0).sin_cos();
    [
        [c(co, 0.0), -Complex64::from_polar(s, lambda)],
        [Complex64::from_polar(s, phi), Complex64::from_polar(co, phi + lambda)],
    ]
}

/// 2×2 matrix of a single-qubit gate in the `(|0⟩, |1⟩)` basis.
pub fn single_qubit_matrix(kind: GateKind, args: &[f64]) -> Mat2 {
    match kind {
        GateKind::U3 => u3(args[0], args[1], args[2]),
        GateKind::U2 => u3(std::f64::consts::FRAC_PI_2, args[0], args[1]),
        GateKind::U1 => [[ONE, ZERO], [ZERO, Complex64::from_polar(1.0, args[0])]],
        GateKind::Rx => {
            let (s, co) = (args[0] / 2.0).sin_cos();
            [[c(co, 0.0), c(0.0, -s)], [c(0.0, -s), c(co, 0.0)]]
        }
        GateKind::Ry => {
            let (s, co) = (args[0] / 2.0).sin_cos();
            [[c(co, 0.0), c(-s, 0.0)], [c(s, 0.0), c(co, 0.0)]]
        }
        GateKind::Rz => {
            let half = args[0] / 2.0;
            [[Complex64::from_polar(1.0, -half), ZERO], [ZERO, Complex64::from_polar(1.0, half)]]
        }
        GateKind::H => {
            let h = c(FRAC_1_SQRT_2, 0.0);
            [[h, h], [h, -h]]
        }
        GateKind::X => [[ZERO, ONE], [ONE, ZERO]],
        GateKind::Y => [[ZERO, c(0.0, -1.0)], [c(0.0, 1.0), ZERO]],
        GateKind::Z => [[ONE, ZERO], [ZERO, -ONE]],
        GateKind::S => [[ONE, ZERO], [ZERO, c(0.0, 1.0)]],
        GateKind::Sdg => [[ONE, ZERO], [ZERO, c(0.0, -1.0)]],
        GateKind::T => [[ONE, ZERO], [ZERO, Complex64::from_polar(1.0, FRAC_PI_4)]],
        GateKind::Tdg => [[ONE, ZERO], [ZERO, Complex64::from_polar(1.0, -FRAC_PI_4)]],
        other => panic!("{} is not a single-qubit gate", other.name()),
    }
}

/// 4×4 matrix of a two-qubit gate. Local basis index is `b0 + 2·b1`, where
/// `b0` is the bit of the first listed qubit (the control for `cx`).
pub fn two_qubit_matrix(kind: GateKind, args: &[f64]) -> Mat4 {
    let mut m = [[ZERO; 4]; 4];
    match kind {
        GateKind::Cx => {
            m[0][0] = ONE;
            m[2][2] = ONE;
            m[3][1] = ONE;
            m[1][3] = ONE;
        }
        GateKind::Cz => {
            m[0][0] = ONE;
            m[1][1] = ONE;
            m[2][2] = ONE;
            m[3][3] = -ONE;
        }
        GateKind::Swap => {
            m[0][0] = ONE;
            m[2][1] = ONE;
            m[1][2] = ONE;
            m[3][3] = ONE;
        }
        GateKind::Rzz => {
            let half = args[0] / 2.0;
            let same = Complex64::from_polar(1.0, -half);
            let diff = Complex64::from_polar(1.0, half);
            m[0][0] = same;
            m[1][1] = diff;
            m[2][2] = diff;
            m[3][3] = same;
        }
        other => panic!("{} is not a two-qubit gate", other.name()),
    }
    m
}

fn apply_1q(amps: &mut [Complex64], q: usize, m: &Mat2) {
    let stride = 1usize << q;
    for block in amps.chunks_exact_mut(2 * stride) {
        let (lo, hi) = block.split_at_mut(stride);
        for (a0, a1) in lo.iter_mut().zip(hi.iter_mut()) {
            let (x0, x1) = (*a0, *a1);
            *a0 = m[0][0] * x0 + m[0][1] * x1;
            *a1 = m[1][0] * x0 + m[1][1] * x1;
        }
    }
}

fn apply_2q(amps: &mut [Complex64], q0: usize, q1: usize, m: &Mat4) {
    let (b0, b1) = (1usize << q0, 1usize << q1);
    let (lo, hi) = if q0 < q1 { (b0, b1) } else { (b1, b0) };
    let quarter = amps.len() >> 2;
    for k in 0..quarter {
        // Insert zero bits at the two qubit positions.
        let mut base = k;
        base = (base & (lo - 1)) | ((base & !(lo - 1)) << 1);
        base = (base & (hi - 1)) | ((base & !(hi - 1)) << 1);
        let idx = [base, base | b0, base | b1, base | b0 | b1];
        let x = [amps[idx[0]], amps[idx[1]], amps[idx[2]], amps[idx[3]]];
        for (r, &i) in idx.iter().enumerate() {
            amps[i] = m[r][0] * x[0] + m[r][1] * x[1] + m[r][2] * x[2] + m[r][3] * x[3];
        }
    }
}

/// `⟨s|H|s⟩` evaluated term by term without building matrices.
pub fn expectation(s: &StateVector, h: &PauliHamiltonian) -> Result<f64, StateError> {
    if s.n_qubits != h.n_qubits() {
        return Err(StateError::DimensionMismatch { state: s.n_qubits, operand: h.n_qubits() });
    }
    let amps = &s.amplitudes;
    let mut probs: Option<Vec<f64>> = None;
    let mut total = Complex64::new(0.0, 0.0);
    for (coeff, word) in h.terms() {
        let (x, z) = (word.x_mask() as usize, word.z_mask() as usize);
        let value = if x == 0 {
            if z == 0 {
                Complex64::new(chunked_sum(amps, |a| a.norm_sqr()), 0.0)
            } else {
                let p = probs.get_or_insert_with(|| s.probabilities());
                let mut acc = 0.0;
                for (ci, chunk) in p.chunks(REDUCTION_CHUNK).enumerate() {
                    let offset = ci * REDUCTION_CHUNK;
                    let mut part = 0.0;
                    for (j, &pj) in chunk.iter().enumerate() {
                        if ((offset + j) & z).count_ones() % 2 == 0 {
                            part += pj;
                        } else {
                            part -= pj;
                        }
                    }
                    acc += part;
                }
                Complex64::new(acc, 0.0)
            }
        } else {
            // P|i⟩ = phase · (-1)^{|z & i|} |i ^ x⟩
            let mut acc = Complex64::new(0.0, 0.0);
            for (ci, chunk) in amps.chunks(REDUCTION_CHUNK).enumerate() {
                let offset = ci * REDUCTION_CHUNK;
                let mut part = Complex64::new(0.0, 0.0);
                for (j, &aj) in chunk.iter().enumerate() {
                    let i = offset + j;
                    let term = amps[i ^ x].conj() * aj;
                    if (i & z).count_ones() % 2 == 0 {
                        part += term;
                    } else {
                        part -= term;
                    }
                }
                acc += part;
            }
            acc * word.phase()
        };
        total += value * *coeff;
    }
    if total.im.abs() >= IMAG_TOLERANCE {
        return Err(StateError::ImaginaryResidue(total.im));
    }
    Ok(total.re)
}

/// The `k` most probable basis states, most probable first; equal
/// probabilities are ordered by ascending index. Character `q` of each
/// bitstring is the value of qubit `q`.
pub fn top_bitstrings(s: &StateVector, k: usize) -> Result<Vec<(String, f64)>, StateError> {
    let dim = s.amplitudes.len();
    if k > dim {
        return Err(StateError::TooMany { k, dim });
    }
    let probs = s.probabilities();
    let mut order: Vec<usize> = (0..dim).collect();
    order.sort_by(|&a, &b| probs[b].total_cmp(&probs[a]).then(a.cmp(&b)));
    Ok(order
        .into_iter()
        .take(k)
        .map(|i| (basis_label(i, s.n_qubits), probs[i]))
        .collect())
}

pub fn basis_label(index: usize, n_qubits: usize) -> String {
    (0..n_qubits).map(|q| if index >> q & 1 == 1 { '1' } else { '0' }).collect()
}
