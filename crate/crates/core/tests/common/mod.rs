//! Dense reference implementations shared by the integration tests. They
//! are built from Kronecker products of textbook matrices and never call
//! the library's own kernels.
#![allow(dead_code)]

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;
use rand::Rng;
use vqa_bench::pauli_ir::{PauliHamiltonian, PauliWord};
use vqa_bench::qasm::{BoundCircuit, BoundGate, GateKind};

pub type M = DMatrix<Complex64>;

pub fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

pub fn id(dim: usize) -> M {
    M::identity(dim, dim)
}

pub fn pauli(p: char) -> M {
    let z = c(0.0, 0.0);
    let o = c(1.0, 0.0);
    match p {
        'I' => M::from_row_slice(2, 2, &[o, z, z, o]),
        'X' => M::from_row_slice(2, 2, &[z, o, o, z]),
        'Y' => M::from_row_slice(2, 2, &[z, c(0.0, -1.0), c(0.0, 1.0), z]),
        'Z' => M::from_row_slice(2, 2, &[o, z, z, -o]),
        _ => unreachable!(),
    }
}

fn proj(bit: usize) -> M {
    let mut m = M::zeros(2, 2);
    m[(bit, bit)] = c(1.0, 0.0);
    m
}

/// `exp(-i θ/2 P)` for an involutory `P`.
fn rot(p: &M, theta: f64) -> M {
    let dim = p.nrows();
    id(dim) * c((theta / 2.0).cos(), 0.0) - p * c(0.0, (theta / 2.0).sin())
}

/// Operator acting with `ops[q]` on qubit `q` (identity elsewhere);
/// qubit 0 is the least significant bit of the basis index.
pub fn kron_on(n: usize, ops: &[(usize, M)]) -> M {
    let mut out = id(1);
    for q in (0..n).rev() {
        let f = ops.iter().find(|(k, _)| *k == q).map_or_else(|| id(2), |(_, m)| m.clone());
        out = out.kronecker(&f);
    }
    out
}

pub fn single_qubit(kind: GateKind, a: &[f64]) -> M {
    let phase = |t: f64| Complex64::from_polar(1.0, t);
    let diag = |d: Complex64| M::from_row_slice(2, 2, &[c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), d]);
    let u3 = |t: f64, p: f64, l: f64| {
        // rz(p) ry(t) rz(l) up to the global phase e^{i(p+l)/2}.
        rot(&pauli('Z'), p) * rot(&pauli('Y'), t) * rot(&pauli('Z'), l) * phase((p + l) / 2.0)
    };
    match kind {
        GateKind::U3 => u3(a[0], a[1], a[2]),
        GateKind::U2 => u3(std::f64::consts::FRAC_PI_2, a[0], a[1]),
        GateKind::U1 => diag(phase(a[0])),
        GateKind::Rx => rot(&pauli('X'), a[0]),
        GateKind::Ry => rot(&pauli('Y'), a[0]),
        GateKind::Rz => rot(&pauli('Z'), a[0]),
        GateKind::H => (pauli('X') + pauli('Z')) * c(std::f64::consts::FRAC_1_SQRT_2, 0.0),
        GateKind::X => pauli('X'),
        GateKind::Y => pauli('Y'),
        GateKind::Z => pauli('Z'),
        GateKind::S => diag(c(0.0, 1.0)),
        GateKind::Sdg => diag(c(0.0, -1.0)),
        GateKind::T => diag(phase(std::f64::consts::FRAC_PI_4)),
        GateKind::Tdg => diag(phase(-std::f64::consts::FRAC_PI_4)),
        _ => unreachable!(),
    }
}

pub fn gate_unitary(n: usize, g: &BoundGate) -> M {
    let q = &g.qubits;
    match g.kind {
        GateKind::Cx => kron_on(n, &[(q[0], proj(0))]) + kron_on(n, &[(q[0], proj(1)), (q[1], pauli('X'))]),
        GateKind::Cz => kron_on(n, &[(q[0], proj(0))]) + kron_on(n, &[(q[0], proj(1)), (q[1], pauli('Z'))]),
        GateKind::Swap => {
            let mut m = id(1 << n);
            for p in ['X', 'Y', 'Z'] {
                m += kron_on(n, &[(q[0], pauli(p)), (q[1], pauli(p))]);
            }
            m * c(0.5, 0.0)
        }
        GateKind::Rzz => rot(&kron_on(n, &[(q[0], pauli('Z')), (q[1], pauli('Z'))]), g.args[0]),
        k => kron_on(n, &[(q[0], single_qubit(k, &g.args))]),
    }
}

pub fn circuit_unitary(c: &BoundCircuit) -> M {
    let mut u = id(1 << c.n_qubits);
    for g in &c.gates {
        u = gate_unitary(c.n_qubits, g) * u;
    }
    u
}

pub fn word_matrix(w: &PauliWord) -> M {
    let n = w.n_qubits();
    let ops: Vec<(usize, M)> = w.label().chars().enumerate().map(|(q, p)| (q, pauli(p))).collect();
    kron_on(n, &ops)
}

pub fn hamiltonian_matrix(h: &PauliHamiltonian) -> M {
    let dim = 1 << h.n_qubits();
    let mut m = M::zeros(dim, dim);
    for (coeff, w) in h.terms() {
        m += word_matrix(w) * c(*coeff, 0.0);
    }
    m
}

/// Smallest eigenvalue of a Hermitian matrix via the real symmetric
/// embedding `[[A, -B], [B, A]]`, whose spectrum is that of `A + iB` doubled.
pub fn min_eigenvalue(m: &M) -> f64 {
    let d = m.nrows();
    let mut r = DMatrix::<f64>::zeros(2 * d, 2 * d);
    for i in 0..d {
        for j in 0..d {
            let v = m[(i, j)];
            r[(i, j)] = v.re;
            r[(i + d, j + d)] = v.re;
            r[(i, j + d)] = -v.im;
            r[(i + d, j)] = v.im;
        }
    }
    SymmetricEigen::new(r).eigenvalues.iter().copied().fold(f64::INFINITY, f64::min)
}

pub fn random_gate(rng: &mut impl Rng, n: usize) -> BoundGate {
    loop {
        let kind = GateKind::ALL[rng.gen_range(0..GateKind::ALL.len())];
        if kind.n_qubits() > n {
            continue;
        }
        let mut qubits = vec![rng.gen_range(0..n)];
        if kind.n_qubits() == 2 {
            let mut t = rng.gen_range(0..n - 1);
            if t >= qubits[0] {
                t += 1;
            }
            qubits.push(t);
        }
        let args = (0..kind.n_params()).map(|_| rng.gen_range(-7.0..7.0)).collect();
        return BoundGate { kind, args, qubits };
    }
}

pub fn random_circuit(rng: &mut impl Rng, n: usize, n_gates: usize) -> BoundCircuit {
    BoundCircuit { n_qubits: n, gates: (0..n_gates).map(|_| random_gate(rng, n)).collect() }
}

pub fn random_hamiltonian(rng: &mut impl Rng, n: usize, n_terms: usize) -> PauliHamiltonian {
    let mask = if n == 64 { u64::MAX } else { (1u64 << n) - 1 };
    let terms = (0..n_terms).map(|_| {
        let w = PauliWord::new(n, rng.gen::<u64>() & mask, rng.gen::<u64>() & mask).unwrap();
        (rng.gen_range(-2.0..2.0), w)
    });
    PauliHamiltonian::from_terms(n, terms.collect::<Vec<_>>()).unwrap()
}

pub fn max_abs_diff(a: &[Complex64], b: &[Complex64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
}
