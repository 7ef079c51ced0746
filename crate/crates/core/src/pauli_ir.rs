//! Simulator-agnostic Hamiltonian IR.
//!
//! A Hamiltonian is stored as a flat list of numbers:
//!
//! ```text
//! n, (c_1, x_1..x_n, z_1..z_n), (c_2, x_1..x_n, z_1..z_n), ...
//! ```
//!
//! where each Pauli word is a binary-symplectic pair of bit vectors. The
//! `x` bits mark X components and the `z` bits mark Z components; a qubit
//! with both bits set carries a Y. Qubit 0 is the least-significant bit of
//! a computational basis index.
//!
//! The word with bits `(x, z)` denotes the Hermitian operator
//! `i^{|x & z|} · Π_j X_j^{x_j} Z_j^{z_j}`, so `x = z = 1` on a single qubit
//! is exactly the Pauli-Y matrix.
//!
//! Two textual encodings are accepted: whitespace-separated decimals
//! (`.ham`) and a JSON array with the same layout (`.ham.json`).

use std::fmt::Write as _;
use std::ops::{Add, Mul};
use std::path::Path;

use nalgebra::DMatrix;
use num_complex::Complex64;
use thiserror::Error;

/// Largest register accepted by the IR (words are stored as 64-bit masks).
pub const MAX_IR_QUBITS: usize = 64;
/// Largest register for which a dense matrix is built.
pub const MAX_DENSE_QUBITS: usize = 14;
/// Largest register for the diagonal bitstring sweep.
pub const MAX_SWEEP_QUBITS: usize = 24;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum IrError {
    #[error("value list of length {len} is not of the form 1 + m*(1 + 2*{n_qubits})")]
    Length { len: usize, n_qubits: usize },
    #[error("symplectic bit at position {position} is {value}, expected 0 or 1")]
    Bit { position: usize, value: f64 },
    #[error("qubit count {0} is not a positive integer no larger than 64")]
    QubitCount(f64),
    #[error("cannot parse `{token}` as a number (token {position})")]
    Token { token: String, position: usize },
    #[error("coefficient at position {position} is not finite")]
    NonFinite { position: usize },
    #[error("{n_qubits} qubits exceeds the limit of {max} for this operation")]
    Size { n_qubits: usize, max: usize },
    #[error("word acts on {word} qubits but the Hamiltonian has {hamiltonian}")]
    QubitMismatch { word: usize, hamiltonian: usize },
    #[error("invalid JSON Hamiltonian: {0}")]
    Json(String),
    #[error("{0}")]
    Io(String),
}

/// A Pauli word in binary-symplectic form.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct PauliWord {
    n_qubits: usize,
    x: u64,
    z: u64,
}

impl PauliWord {
    pub fn new(n_qubits: usize, x: u64, z: u64) -> Result<Self, IrError> {
        if n_qubits == 0 || n_qubits > MAX_IR_QUBITS {
            return Err(IrError::QubitCount(n_qubits as f64));
        }
        let mask = qubit_mask(n_qubits);
        if x & !mask != 0 || z & !mask != 0 {
            return Err(IrError::Size { n_qubits: 64 - (x | z).leading_zeros() as usize, max: n_qubits });
        }
        Ok(Self { n_qubits, x, z })
    }

    pub fn identity(n_qubits: usize) -> Self {
        Self::new(n_qubits, 0, 0).expect("valid qubit count")
    }

    /// Product of Z on the listed qubits.
    pub fn z_string(n_qubits: usize, qubits: &[usize]) -> Result<Self, IrError> {
        let z = qubits.iter().fold(0u64, |acc, &q| acc | (1u64 << q));
        Self::new(n_qubits, 0, z)
    }

    /// Builds a word from a label such as `"XIZY"`, where character `k`
    /// acts on qubit `k`.
    pub fn from_label(label: &str) -> Result<Self, IrError> {
        let (mut x, mut z) = (0u64, 0u64);
        for (q, ch) in label.chars().enumerate() {
            let bit = 1u64 << q;
            match ch {
                'I' => {}
                'X' => x |= bit,
                'Z' => z |= bit,
                'Y' => {
                    x |= bit;
                    z |= bit;
                }
                _ => {
                    return Err(IrError::Token { token: label.to_string(), position: q });
                }
            }
        }
        Self::new(label.chars().count(), x, z)
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn x_mask(&self) -> u64 {
        self.x
    }

    pub fn z_mask(&self) -> u64 {
        self.z
    }

    pub fn is_identity(&self) -> bool {
        self.x == 0 && self.z == 0
    }

    pub fn is_diagonal(&self) -> bool {
        self.x == 0
    }

    /// Number of qubits on which the word acts non-trivially.
    pub fn weight(&self) -> u32 {
        (self.x | self.z).count_ones()
    }

    /// Qubits with a non-identity factor, ascending.
    pub fn support(&self) -> Vec<usize> {
        (0..self.n_qubits).filter(|&q| (self.x | self.z) >> q & 1 == 1).collect()
    }

    /// Number of qubits carrying a Y, i.e. the symplectic self-overlap `|x & z|`.
    pub fn y_count(&self) -> u32 {
        (self.x & self.z).count_ones()
    }

    /// Phase `i^{|x & z|}` that makes `phase · X^x Z^z` Hermitian.
    pub fn phase(&self) -> Complex64 {
        match self.y_count() % 4 {
            0 => Complex64::new(1.0, 0.0),
            1 => Complex64::new(0.0, 1.0),
            2 => Complex64::new(-1.0, 0.0),
            _ => Complex64::new(0.0, -1.0),
        }
    }

    pub fn label(&self) -> String {
        (0..self.n_qubits)
            .map(|q| match ((self.x >> q) & 1, (self.z >> q) & 1) {
                (0, 0) => 'I',
                (1, 0) => 'X',
                (0, 1) => 'Z',
                _ => 'Y',
            })
            .collect()
    }
}

fn qubit_mask(n_qubits: usize) -> u64 {
    if n_qubits >= 64 {
        u64::MAX
    } else {
        (1u64 << n_qubits) - 1
    }
}

/// Weighted sum of Pauli words with real coefficients.
///
/// Terms keep the order in which their words first appeared; duplicate
/// words are merged by summing coefficients and terms whose coefficient is
/// exactly zero are dropped.
#[derive(Debug, Clone, PartialEq)]
pub struct PauliHamiltonian {
    n_qubits: usize,
    terms: Vec<(f64, PauliWord)>,
}

impl PauliHamiltonian {
    pub fn new(n_qubits: usize) -> Result<Self, IrError> {
        if n_qubits == 0 || n_qubits > MAX_IR_QUBITS {
            return Err(IrError::QubitCount(n_qubits as f64));
        }
        Ok(Self { n_qubits, terms: Vec::new() })
    }

    pub fn from_terms(
        n_qubits: usize,
        terms: impl IntoIterator<Item = (f64, PauliWord)>,
    ) -> Result<Self, IrError> {
        let mut raw = Vec::new();
        for (position, (coeff, word)) in terms.into_iter().enumerate() {
            if !coeff.is_finite() {
                return Err(IrError::NonFinite { position });
            }
            if word.n_qubits != n_qubits {
                return Err(IrError::QubitMismatch { word: word.n_qubits, hamiltonian: n_qubits });
            }
            raw.push((coeff, word));
        }
        let mut h = Self::new(n_qubits)?;
        h.terms = canonicalize(raw);
        Ok(h)
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn terms(&self) -> &[(f64, PauliWord)] {
        &self.terms
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    /// True when every word is a product of Z and I.
    pub fn is_diagonal(&self) -> bool {
        self.terms.iter().all(|(_, w)| w.is_diagonal())
    }

    /// Coefficient of the identity word (the constant energy offset).
    pub fn identity_coefficient(&self) -> f64 {
        self.terms.iter().find(|(_, w)| w.is_identity()).map_or(0.0, |(c, _)| *c)
    }

    /// Energy of the computational basis state `basis` for a diagonal
    /// Hamiltonian; off-diagonal terms contribute nothing.
    pub fn basis_energy(&self, basis: u64) -> f64 {
        self.terms
            .iter()
            .filter(|(_, w)| w.is_diagonal())
            .map(|(c, w)| if (w.z & basis).count_ones() % 2 == 0 { *c } else { -*c })
            .sum()
    }

    pub fn scaled(&self, factor: f64) -> Self {
        let terms = self.terms.iter().map(|&(c, w)| (c * factor, w));
        Self { n_qubits: self.n_qubits, terms: canonicalize(terms.collect()) }
    }
}

fn canonicalize(raw: Vec<(f64, PauliWord)>) -> Vec<(f64, PauliWord)> {
    let mut merged: Vec<(f64, PauliWord)> = Vec::with_capacity(raw.len());
    let mut index = std::collections::HashMap::with_capacity(raw.len());
    for (coeff, word) in raw {
        match index.get(&word) {
            Some(&slot) => {
                let entry: &mut (f64, PauliWord) = &mut merged[slot];
                entry.0 += coeff;
            }
            None => {
                index.insert(word, merged.len());
                merged.push((coeff, word));
            }
        }
    }
    merged.retain(|(c, _)| *c != 0.0);
    merged
}

impl Add for &PauliHamiltonian {
    type Output = PauliHamiltonian;

    /// Panics if the operands act on different numbers of qubits.
    fn add(self, rhs: &PauliHamiltonian) -> PauliHamiltonian {
        assert_eq!(self.n_qubits, rhs.n_qubits, "qubit count mismatch in Hamiltonian sum");
        let raw = self.terms.iter().chain(rhs.terms.iter()).copied().collect();
        PauliHamiltonian { n_qubits: self.n_qubits, terms: canonicalize(raw) }
    }
}

impl Mul<f64> for &PauliHamiltonian {
    type Output = PauliHamiltonian;

    fn mul(self, factor: f64) -> PauliHamiltonian {
        self.scaled(factor)
    }
}

/// Decodes the flat numeric layout.
pub fn from_values(values: &[f64]) -> Result<PauliHamiltonian, IrError> {
    let Some(&n_raw) = values.first() else {
        return Err(IrError::Length { len: 0, n_qubits: 0 });
    };
    if !(n_raw.is_finite() && n_raw.fract() == 0.0 && n_raw >= 1.0 && n_raw <= MAX_IR_QUBITS as f64)
    {
        return Err(IrError::QubitCount(n_raw));
    }
    let n = n_raw as usize;
    let block = 1 + 2 * n;
    let body = &values[1..];
    if body.len() % block != 0 {
        return Err(IrError::Length { len: values.len(), n_qubits: n });
    }
    let mut raw = Vec::with_capacity(body.len() / block);
    for (t, chunk) in body.chunks_exact(block).enumerate() {
        let base = 1 + t * block;
        let coeff = chunk[0];
        if !coeff.is_finite() {
            return Err(IrError::NonFinite { position: base });
        }
        let mut x = 0u64;
        let mut z = 0u64;
        for q in 0..n {
            x |= read_bit(chunk[1 + q], base + 1 + q)? << q;
            z |= read_bit(chunk[1 + n + q], base + 1 + n + q)? << q;
        }
        raw.push((coeff, PauliWord { n_qubits: n, x, z }));
    }
    Ok(PauliHamiltonian { n_qubits: n, terms: canonicalize(raw) })
}

fn read_bit(value: f64, position: usize) -> Result<u64, IrError> {
    if value == 0.0 {
        Ok(0)
    } else if value == 1.0 {
        Ok(1)
    } else {
        Err(IrError::Bit { position, value })
    }
}

/// Encodes a Hamiltonian into the flat numeric layout.
pub fn to_values(h: &PauliHamiltonian) -> Vec<f64> {
    let n = h.n_qubits;
    let mut out = Vec::with_capacity(1 + h.terms.len() * (1 + 2 * n));
    out.push(n as f64);
    for (c, w) in &h.terms {
        out.push(*c);
        out.extend((0..n).map(|q| ((w.x >> q) & 1) as f64));
        out.extend((0..n).map(|q| ((w.z >> q) & 1) as f64));
    }
    out
}

/// Parses the whitespace-separated text form.
pub fn parse_ham_ir(input: &str) -> Result<PauliHamiltonian, IrError> {
    let values = input
        .split_whitespace()
        .enumerate()
        .map(|(position, tok)| {
            tok.parse::<f64>().map_err(|_| IrError::Token { token: tok.to_string(), position })
        })
        .collect::<Result<Vec<_>, _>>()?;
    from_values(&values)
}

/// Writes the text form: the qubit count on the first line, then one term
/// per line. Coefficients carry 17 significant digits.
pub fn serialize_ham_ir(h: &PauliHamiltonian) -> String {
    let n = h.n_qubits;
    let mut out = format!("{n}\n");
    for (c, w) in &h.terms {
        write!(out, "{c:.16e}").unwrap();
        for q in 0..n {
            write!(out, " {}", (w.x >> q) & 1).unwrap();
        }
        for q in 0..n {
            write!(out, " {}", (w.z >> q) & 1).unwrap();
        }
        out.push('\n');
    }
    out
}

pub fn parse_ham_ir_json(input: &str) -> Result<PauliHamiltonian, IrError> {
    let values: Vec<f64> = serde_json::from_str(input).map_err(|e| IrError::Json(e.to_string()))?;
    from_values(&values)
}

pub fn serialize_ham_ir_json(h: &PauliHamiltonian) -> String {
    serde_json::to_string(&to_values(h)).expect("finite values serialize")
}

/// Reads a `.ham` or `.ham.json` file; the JSON form is recognised by a
/// `.json` extension or a leading `[`.
pub fn load_hamiltonian(path: &Path) -> Result<PauliHamiltonian, IrError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| IrError::Io(format!("{}: {e}", path.display())))?;
    let is_json = path.extension().is_some_and(|e| e == "json") || text.trim_start().starts_with('[');
    if is_json {
        parse_ham_ir_json(&text)
    } else {
        parse_ham_ir(&text)
    }
}

/// Dense `2^n × 2^n` matrix of the Hamiltonian. Row/column index bit `q`
/// is the state of qubit `q`.
pub fn to_dense_matrix(h: &PauliHamiltonian) -> Result<DMatrix<Complex64>, IrError> {
    if h.n_qubits > MAX_DENSE_QUBITS {
        return Err(IrError::Size { n_qubits: h.n_qubits, max: MAX_DENSE_QUBITS });
    }
    let dim = 1usize << h.n_qubits;
    let mut m = DMatrix::<Complex64>::zeros(dim, dim);
    for (c, w) in &h.terms {
        let scaled = w.phase() * *c;
        for col in 0..dim {
            // Z acts first (sign), then X flips the bits.
            let sign = if (w.z & col as u64).count_ones() % 2 == 0 { 1.0 } else { -1.0 };
            let row = col ^ w.x as usize;
            m[(row, col)] += scaled * sign;
        }
    }
    Ok(m)
}

/// Smallest eigenvalue.
///
/// Diagonal Hamiltonians are swept over all `2^n` basis energies (up to 24
/// qubits); anything else is diagonalised densely (up to 14 qubits).
pub fn ground_energy(h: &PauliHamiltonian) -> Result<f64, IrError> {
    if h.is_diagonal() {
        diagonal_ground_energy(h)
    } else {
        dense_ground_energy(h)
    }
}

pub fn diagonal_ground_energy(h: &PauliHamiltonian) -> Result<f64, IrError> {
    if h.n_qubits > MAX_SWEEP_QUBITS {
        return Err(IrError::Size { n_qubits: h.n_qubits, max: MAX_SWEEP_QUBITS });
    }
    let diag: Vec<(f64, u64)> = h.terms.iter().map(|(c, w)| (*c, w.z)).collect();
    let min = (0..1u64 << h.n_qubits)
        .map(|b| {
            diag.iter()
                .map(|&(c, z)| if (z & b).count_ones() % 2 == 0 { c } else { -c })
                .sum::<f64>()
        })
        .fold(f64::INFINITY, f64::min);
    Ok(min)
}

pub fn dense_ground_energy(h: &PauliHamiltonian) -> Result<f64, IrError> {
    let m = to_dense_matrix(h)?;
    let eig = m.symmetric_eigenvalues();
    Ok(eig.iter().copied().fold(f64::INFINITY, f64::min))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn approx(a: Complex64, re: f64, im: f64) -> bool {
        (a.re - re).abs() < 1e-15 && (a.im - im).abs() < 1e-15
    }

    #[test]
    fn minimal_single_z() {
        let h = parse_ham_ir("1 0.5 0 1").unwrap();
        assert_eq!(h.n_qubits(), 1);
        assert_eq!(h.terms(), &[(0.5, PauliWord::new(1, 0, 1).unwrap())]);
    }

    #[test]
    fn zz_plus_identity() {
        let h = parse_ham_ir("2 1.0 0 0 1 1 -2.0 0 0 0 0").unwrap();
        assert_eq!(h.len(), 2);
        assert_eq!(h.terms()[0].1.label(), "ZZ");
        assert_eq!(h.terms()[0].0, 1.0);
        assert!(h.terms()[1].1.is_identity());
        assert_eq!(h.identity_coefficient(), -2.0);
    }

    #[test]
    fn duplicates_merge_and_zeros_drop() {
        let h = parse_ham_ir("1 0.25 0 1 1.0 1 0 0.25 0 1 -1.0 1 0").unwrap();
        assert_eq!(h.len(), 1);
        assert_eq!(h.terms()[0], (0.5, PauliWord::from_label("Z").unwrap()));
    }

    #[test]
    fn float_syntax_qubit_count() {
        assert!(parse_ham_ir("2.0 1 0 0 0 0").is_ok());
        assert_eq!(parse_ham_ir("1.5 1 0 1"), Err(IrError::QubitCount(1.5)));
        assert_eq!(parse_ham_ir("0"), Err(IrError::QubitCount(0.0)));
        assert_eq!(parse_ham_ir("-3"), Err(IrError::QubitCount(-3.0)));
    }

    #[test]
    fn bad_length_and_bits() {
        assert!(matches!(parse_ham_ir("2 1.0 0 0 1"), Err(IrError::Length { .. })));
        assert_eq!(parse_ham_ir("1 1.0 0.5 1"), Err(IrError::Bit { position: 2, value: 0.5 }));
        assert!(matches!(parse_ham_ir("1 1.0 x 1"), Err(IrError::Token { .. })));
        assert!(matches!(parse_ham_ir(""), Err(IrError::Length { .. })));
        assert!(matches!(parse_ham_ir("1 inf 0 1"), Err(IrError::NonFinite { .. })));
    }

    #[test]
    fn empty_term_list_is_valid() {
        let h = parse_ham_ir("3").unwrap();
        assert!(h.is_empty());
        assert_eq!(serialize_ham_ir(&h), "3\n");
    }

    #[test]
    fn json_form_matches_text_form() {
        let a = parse_ham_ir("2 1.0 0 0 1 1 -2.0 0 0 0 0").unwrap();
        let b = parse_ham_ir_json("[2, 1.0, 0, 0, 1, 1, -2.0, 0, 0, 0, 0]").unwrap();
        assert_eq!(a, b);
        assert_eq!(parse_ham_ir_json(&serialize_ham_ir_json(&a)).unwrap(), a);
    }

    #[test]
    fn y_phase_convention() {
        let h = PauliHamiltonian::from_terms(1, [(1.0, PauliWord::new(1, 1, 1).unwrap())]).unwrap();
        let m = to_dense_matrix(&h).unwrap();
        assert!(approx(m[(0, 0)], 0.0, 0.0));
        assert!(approx(m[(0, 1)], 0.0, -1.0));
        assert!(approx(m[(1, 0)], 0.0, 1.0));
        assert!(approx(m[(1, 1)], 0.0, 0.0));
    }

    #[test]
    fn identity_dense() {
        let h = PauliHamiltonian::from_terms(2, [(3.0, PauliWord::identity(2))]).unwrap();
        let m = to_dense_matrix(&h).unwrap();
        for r in 0..4 {
            for c in 0..4 {
                let want = if r == c { 3.0 } else { 0.0 };
                assert!(approx(m[(r, c)], want, 0.0));
            }
        }
    }

    #[test]
    fn qubit_zero_is_least_significant() {
        // X on qubit 0 maps |00> (index 0) to |01> (index 1).
        let h = PauliHamiltonian::from_terms(2, [(1.0, PauliWord::from_label("XI").unwrap())]).unwrap();
        let m = to_dense_matrix(&h).unwrap();
        assert!(approx(m[(1, 0)], 1.0, 0.0));
        assert!(approx(m[(2, 0)], 0.0, 0.0));
    }

    #[test]
    fn ground_energies() {
        let z = parse_ham_ir("1 1.0 0 1").unwrap();
        assert_eq!(ground_energy(&z).unwrap(), -1.0);
        let x = parse_ham_ir("1 2.0 1 0").unwrap();
        assert!((ground_energy(&x).unwrap() + 2.0).abs() < 1e-12);
    }

    #[test]
    fn size_guards() {
        let big = PauliHamiltonian::from_terms(15, [(1.0, PauliWord::new(15, 1, 0).unwrap())]).unwrap();
        assert_eq!(to_dense_matrix(&big), Err(IrError::Size { n_qubits: 15, max: 14 }));
        assert!(ground_energy(&big).is_err());
        let diag = PauliHamiltonian::from_terms(30, [(1.0, PauliWord::new(30, 0, 1).unwrap())]).unwrap();
        assert_eq!(ground_energy(&diag), Err(IrError::Size { n_qubits: 30, max: 24 }));
    }

    #[test]
    fn labels_round_trip() {
        for label in ["I", "XYZ", "YXXY", "IIZZ"] {
            assert_eq!(PauliWord::from_label(label).unwrap().label(), label);
        }
    }

    #[test]
    fn serialization_is_full_precision() {
        let h = PauliHamiltonian::from_terms(1, [(0.1 + 0.2, PauliWord::from_label("Z").unwrap())]).unwrap();
        let text = serialize_ham_ir(&h);
        assert_eq!(text, "1\n3.0000000000000004e-1 0 1\n");
        assert_eq!(parse_ham_ir(&text).unwrap(), h);
    }
}
