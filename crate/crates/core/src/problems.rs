//! MaxCut and TSP instances, their QUBO and Ising forms, and brute-force
//! classical oracles.
//!
//! Vertices are 0-based. Bitstrings are written with character `k` holding
//! the value of variable/qubit `k`.
//!
//! The TSP encoding fixes vertex 0 at tour position 0, leaving `(n-1)^2`
//! binary variables `x[i][j]` (vertex `i`, position `j`, both in `1..n`)
//! at flat index `(i-1)*(n-1) + (j-1)`. Positions wrap cyclically.

use std::fmt::Write as _;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::pauli_ir::{IrError, PauliHamiltonian, PauliWord};

pub const MAX_BRUTE_FORCE_VERTICES: usize = 24;
pub const MAX_BRUTE_FORCE_TSP: usize = 10;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ProblemError {
    #[error("graph has no edges")]
    EmptyGraph,
    #[error("instance of size {size} is outside the supported range ({limit})")]
    Size { size: usize, limit: String },
    #[error("invalid edge ({u}, {v}): {reason}")]
    InvalidEdge { u: usize, v: usize, reason: String },
    #[error("invalid TSP instance: {0}")]
    InvalidTsp(String),
    #[error("line {line}: {message}")]
    Format { line: usize, message: String },
    #[error(transparent)]
    Ir(#[from] IrError),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Edge {
    pub u: usize,
    pub v: usize,
    pub weight: f64,
}

/// Undirected graph with `u < v` edges and no duplicates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Graph {
    n_vertices: usize,
    edges: Vec<Edge>,
}

impl Graph {
    /// Normalises each edge to `u < v`; rejects self-loops, out-of-range
    /// endpoints, duplicates and non-finite weights.
    pub fn new(n_vertices: usize, edges: impl IntoIterator<Item = (usize, usize, f64)>) -> Result<Self, ProblemError> {
        if n_vertices == 0 {
            return Err(ProblemError::Size { size: 0, limit: "at least one vertex".into() });
        }
        let mut out: Vec<Edge> = Vec::new();
        for (a, b, weight) in edges {
            let (u, v) = (a.min(b), a.max(b));
            let bad = |reason: &str| ProblemError::InvalidEdge { u: a, v: b, reason: reason.into() };
            if u == v {
                return Err(bad("self-loop"));
            }
            if v >= n_vertices {
                return Err(bad("endpoint out of range"));
            }
            if !weight.is_finite() {
                return Err(bad("non-finite weight"));
            }
            if out.iter().any(|e| e.u == u && e.v == v) {
                return Err(bad("duplicate edge"));
            }
            out.push(Edge { u, v, weight });
        }
        Ok(Self { n_vertices, edges: out })
    }

    pub fn unweighted(n_vertices: usize, edges: &[(usize, usize)]) -> Result<Self, ProblemError> {
        Self::new(n_vertices, edges.iter().map(|&(u, v)| (u, v, 1.0)))
    }

    pub fn n_vertices(&self) -> usize {
        self.n_vertices
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    /// Total weight of edges crossing the partition `mask` (bit `k` = side of vertex `k`).
    pub fn cut_value(&self, mask: u64) -> f64 {
        self.edges
            .iter()
            .filter(|e| (mask >> e.u & 1) != (mask >> e.v & 1))
            .map(|e| e.weight)
            .sum()
    }
}

/// Erdős–Rényi graph with unit weights; pairs `(u, v)` are visited in
/// lexicographic order and each kept with probability `edge_probability`.
pub fn random_graph(n: usize, edge_probability: f64, seed: u64) -> Result<Graph, ProblemError> {
    if n < 2 {
        return Err(ProblemError::Size { size: n, limit: "n >= 2".into() });
    }
    if !(edge_probability > 0.0 && edge_probability <= 1.0) {
        return Err(ProblemError::InvalidEdge { u: 0, v: 0, reason: format!("edge probability {edge_probability} not in (0, 1]") });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut edges = Vec::new();
    for u in 0..n {
        for v in u + 1..n {
            if rng.gen::<f64>() < edge_probability {
                edges.push(Edge { u, v, weight: 1.0 });
            }
        }
    }
    Ok(Graph { n_vertices: n, edges })
}

/// Minimisation-form MaxCut Hamiltonian `Σ_e w_e (Z_u Z_v − 1)/2`; its ground
/// energy is minus the maximum cut.
pub fn maxcut_hamiltonian(g: &Graph) -> Result<PauliHamiltonian, ProblemError> {
    if g.edges.is_empty() {
        return Err(ProblemError::EmptyGraph);
    }
    let n = g.n_vertices;
    let mut terms = Vec::with_capacity(g.edges.len() + 1);
    let mut offset = 0.0;
    for e in &g.edges {
        terms.push((e.weight / 2.0, PauliWord::z_string(n, &[e.u, e.v])?));
        offset -= e.weight / 2.0;
    }
    terms.push((offset, PauliWord::identity(n)));
    Ok(PauliHamiltonian::from_terms(n, terms)?)
}

/// Exact maximum cut by enumeration with vertex 0 fixed on side 0. Returns
/// the cut value and the partition bitstring; ties go to the smallest
/// partition index.
pub fn brute_force_maxcut(g: &Graph) -> Result<(f64, String), ProblemError> {
    let n = g.n_vertices;
    if n > MAX_BRUTE_FORCE_VERTICES {
        return Err(ProblemError::Size { size: n, limit: format!("at most {MAX_BRUTE_FORCE_VERTICES} vertices") });
    }
    let mut best = (f64::NEG_INFINITY, 0u64);
    for half in 0..1u64 << (n - 1) {
        let mask = half << 1;
        let value = g.cut_value(mask);
        if value > best.0 {
            best = (value, mask);
        }
    }
    Ok((best.0, bits_label(best.1, n)))
}

fn bits_label(mask: u64, n: usize) -> String {
    (0..n).map(|k| if mask >> k & 1 == 1 { '1' } else { '0' }).collect()
}

/// Symmetric TSP instance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TspInstance {
    n_vertices: usize,
    distances: Vec<Vec<f64>>,
    penalty: f64,
    scale: f64,
}

impl TspInstance {
    /// Uses the default penalty `n · max(D) + 1` and scale 1.
    pub fn new(distances: Vec<Vec<f64>>) -> Result<Self, ProblemError> {
        let n = distances.len();
        let max = distances.iter().flatten().copied().fold(0.0, f64::max);
        Self::with_penalty(distances, n as f64 * max + 1.0, 1.0)
    }

    pub fn with_penalty(distances: Vec<Vec<f64>>, penalty: f64, scale: f64) -> Result<Self, ProblemError> {
        let n = distances.len();
        if n < 3 {
            return Err(ProblemError::Size { size: n, limit: "at least 3 vertices".into() });
        }
        for (i, row) in distances.iter().enumerate() {
            if row.len() != n {
                return Err(ProblemError::InvalidTsp(format!("row {i} has {} entries, expected {n}", row.len())));
            }
            if row[i] != 0.0 {
                return Err(ProblemError::InvalidTsp(format!("D[{i}][{i}] is not zero")));
            }
            for (j, &d) in row.iter().enumerate() {
                if !d.is_finite() || d < 0.0 {
                    return Err(ProblemError::InvalidTsp(format!("D[{i}][{j}] = {d} is not a finite non-negative distance")));
                }
                if distances[j][i] != d {
                    return Err(ProblemError::InvalidTsp(format!("D is not symmetric at ({i}, {j})")));
                }
            }
        }
        if !(penalty.is_finite() && penalty > 0.0) {
            return Err(ProblemError::InvalidTsp(format!("penalty {penalty} must be positive")));
        }
        if !(scale.is_finite() && scale > 0.0) {
            return Err(ProblemError::InvalidTsp(format!("scale {scale} must be positive")));
        }
        Ok(Self { n_vertices: n, distances, penalty, scale })
    }

    pub fn n_vertices(&self) -> usize {
        self.n_vertices
    }

    pub fn distances(&self) -> &[Vec<f64>] {
        &self.distances
    }

    pub fn distance(&self, a: usize, b: usize) -> f64 {
        self.distances[a][b]
    }

    pub fn penalty(&self) -> f64 {
        self.penalty
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    pub fn n_vars(&self) -> usize {
        (self.n_vertices - 1) * (self.n_vertices - 1)
    }

    /// Flat variable index of vertex `i` at position `j` (both ≥ 1).
    pub fn var_index(&self, vertex: usize, position: usize) -> usize {
        (vertex - 1) * (self.n_vertices - 1) + (position - 1)
    }

    /// Penalty below which constraint violations may be cheaper than tours.
    pub fn penalty_bound(&self) -> f64 {
        let max = self.distances.iter().flatten().copied().fold(0.0, f64::max);
        self.n_vertices as f64 * max
    }

    /// Human-readable warnings about weak parameter choices.
    pub fn validate(&self) -> Vec<String> {
        let mut warnings = Vec::new();
        if self.penalty < self.penalty_bound() {
            warnings.push(format!(
                "penalty {} is below n*max(D) = {}; the unconstrained minimum may be infeasible",
                self.penalty,
                self.penalty_bound()
            ));
        }
        warnings
    }

    pub fn tour_length(&self, tour: &[usize]) -> f64 {
        (0..tour.len()).map(|k| self.distances[tour[k]][tour[(k + 1) % tour.len()]]).sum()
    }

    /// Decodes an assignment into a tour starting at vertex 0, or `None` when
    /// it is not a permutation matrix.
    pub fn decode(&self, assignment: u64) -> Option<Vec<usize>> {
        let n = self.n_vertices;
        let mut tour = vec![0usize; n];
        let mut seen = vec![false; n];
        seen[0] = true;
        for (position, slot) in tour.iter_mut().enumerate().skip(1) {
            let mut found = None;
            for vertex in 1..n {
                if assignment >> self.var_index(vertex, position) & 1 == 1 {
                    if found.is_some() {
                        return None;
                    }
                    found = Some(vertex);
                }
            }
            let vertex = found?;
            if seen[vertex] {
                return None;
            }
            seen[vertex] = true;
            *slot = vertex;
        }
        Some(tour)
    }

    /// Assignment bits encoding `tour` (which must start at vertex 0).
    pub fn encode(&self, tour: &[usize]) -> u64 {
        tour.iter()
            .enumerate()
            .skip(1)
            .fold(0u64, |acc, (position, &vertex)| acc | 1u64 << self.var_index(vertex, position))
    }
}

/// Random instance: `n` points uniform in the unit square with Euclidean
/// distances, default penalty and unit scale.
pub fn random_tsp(n: usize, seed: u64) -> Result<TspInstance, ProblemError> {
    if n < 3 {
        return Err(ProblemError::Size { size: n, limit: "at least 3 vertices".into() });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let points: Vec<(f64, f64)> = (0..n).map(|_| (rng.gen::<f64>(), rng.gen::<f64>())).collect();
    let mut d = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in i + 1..n {
            let dist = (points[i].0 - points[j].0).hypot(points[i].1 - points[j].1);
            d[i][j] = dist;
            d[j][i] = dist;
        }
    }
    TspInstance::new(d)
}

/// `min xᵀQx + offset` over binary `x`. `Q` is symmetric and stored as its
/// upper triangle, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct QuboProblem {
    n_vars: usize,
    upper: Vec<f64>,
    constant_offset: f64,
}

impl QuboProblem {
    pub fn zeros(n_vars: usize) -> Self {
        Self { n_vars, upper: vec![0.0; n_vars * (n_vars + 1) / 2], constant_offset: 0.0 }
    }

    /// Builds from a full square matrix; it is symmetrised as `(Q + Qᵀ)/2`.
    pub fn from_matrix(q: &[Vec<f64>], constant_offset: f64) -> Result<Self, ProblemError> {
        let n = q.len();
        if n == 0 || q.iter().any(|r| r.len() != n) {
            return Err(ProblemError::Size { size: n, limit: "square non-empty matrix".into() });
        }
        if q.iter().flatten().any(|v| !v.is_finite()) || !constant_offset.is_finite() {
            return Err(ProblemError::InvalidTsp("QUBO entries must be finite".into()));
        }
        let mut out = Self::zeros(n);
        for i in 0..n {
            for j in i..n {
                out.set(i, j, (q[i][j] + q[j][i]) / 2.0);
            }
        }
        out.constant_offset = constant_offset;
        Ok(out)
    }

    pub fn n_vars(&self) -> usize {
        self.n_vars
    }

    pub fn constant_offset(&self) -> f64 {
        self.constant_offset
    }

    fn slot(&self, i: usize, j: usize) -> usize {
        let (i, j) = (i.min(j), i.max(j));
        i * self.n_vars - i * (i + 1) / 2 + j
    }

    /// Symmetric entry `Q[i][j]`.
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.upper[self.slot(i, j)]
    }

    pub fn set(&mut self, i: usize, j: usize, value: f64) {
        let s = self.slot(i, j);
        self.upper[s] = value;
    }

    /// Adds `coeff · x_i x_j` to the objective (`coeff · x_i` when `i == j`).
    pub fn add_monomial(&mut self, i: usize, j: usize, coeff: f64) {
        let s = self.slot(i, j);
        if i == j {
            self.upper[s] += coeff;
        } else {
            self.upper[s] += coeff / 2.0;
        }
    }

    /// `xᵀQx + offset` with `x` read from the bits of `assignment`.
    pub fn evaluate(&self, assignment: u64) -> f64 {
        let n = self.n_vars;
        let mut total = self.constant_offset;
        for i in 0..n {
            if assignment >> i & 1 == 0 {
                continue;
            }
            total += self.get(i, i);
            for j in i + 1..n {
                if assignment >> j & 1 == 1 {
                    total += 2.0 * self.get(i, j);
                }
            }
        }
        total
    }
}

/// QUBO of the reduced TSP encoding: `s` times the tour-length term plus
/// `P`-weighted row and column one-hot penalties, expanded so that
/// `xᵀQx + offset` reproduces the cost exactly on every assignment.
pub fn tsp_qubo(t: &TspInstance) -> Result<QuboProblem, ProblemError> {
    let n = t.n_vertices;
    if n < 3 {
        return Err(ProblemError::Size { size: n, limit: "at least 3 vertices".into() });
    }
    let (p, s) = (t.penalty, t.scale);
    let mut q = QuboProblem::zeros(t.n_vars());

    // One-hot penalties: P (1 − Σ x)^2 = P − P Σ x + 2P Σ_{a<b} x_a x_b on binaries,
    // once for every free vertex (row) and every free position (column).
    let groups = (1..n).flat_map(|fixed| {
        let row: Vec<usize> = (1..n).map(|j| t.var_index(fixed, j)).collect();
        let col: Vec<usize> = (1..n).map(|i| t.var_index(i, fixed)).collect();
        [row, col]
    });
    for group in groups {
        q.constant_offset += s * p;
        for (a, &va) in group.iter().enumerate() {
            q.add_monomial(va, va, -s * p);
            for &vb in &group[a + 1..] {
                q.add_monomial(va, vb, 2.0 * s * p);
            }
        }
    }

    // Path length: Σ_{i≠i'} Σ_j D[i][i'] x[i][j] x[i'][j+1]. Vertex 0 sits at
    // position 0, so edges into and out of it become linear terms.
    enum Slot {
        One,
        Zero,
        Var(usize),
    }
    let slot = |vertex: usize, position: usize| match (vertex, position) {
        (0, 0) => Slot::One,
        (0, _) | (_, 0) => Slot::Zero,
        (v, j) => Slot::Var(t.var_index(v, j)),
    };
    for j in 0..n {
        let next = (j + 1) % n;
        for a in 0..n {
            for b in 0..n {
                let d = t.distances[a][b];
                if a == b || d == 0.0 {
                    continue;
                }
                match (slot(a, j), slot(b, next)) {
                    (Slot::Zero, _) | (_, Slot::Zero) => {}
                    (Slot::One, Slot::One) => q.constant_offset += s * d,
                    (Slot::One, Slot::Var(v)) | (Slot::Var(v), Slot::One) => q.add_monomial(v, v, s * d),
                    (Slot::Var(va), Slot::Var(vb)) => q.add_monomial(va, vb, s * d),
                }
            }
        }
    }
    Ok(q)
}

/// Ising form under `x_i = (1 − Z_i)/2`. For every bitstring `b`, the energy
/// of basis state `|b⟩` equals `xᵀQx + offset` at `x = b`.
pub fn qubo_to_ising(q: &QuboProblem) -> Result<PauliHamiltonian, ProblemError> {
    let n = q.n_vars;
    let mut linear = vec![0.0; n];
    let mut terms = Vec::new();
    let mut constant = q.constant_offset;
    for i in 0..n {
        let d = q.get(i, i);
        constant += d / 2.0;
        linear[i] -= d / 2.0;
        for j in i + 1..n {
            // 2 Q_ij x_i x_j = Q_ij/2 (1 − Z_i − Z_j + Z_i Z_j)
            let w = q.get(i, j);
            if w == 0.0 {
                continue;
            }
            constant += w / 2.0;
            linear[i] -= w / 2.0;
            linear[j] -= w / 2.0;
            terms.push((w / 2.0, PauliWord::z_string(n, &[i, j])?));
        }
    }
    for (i, &c) in linear.iter().enumerate() {
        terms.push((c, PauliWord::z_string(n, &[i])?));
    }
    terms.push((constant, PauliWord::identity(n)));
    Ok(PauliHamiltonian::from_terms(n, terms)?)
}

/// Shortest tour by enumerating every ordering of vertices `1..n` after
/// vertex 0; ties go to the lexicographically first tour.
pub fn brute_force_tsp(t: &TspInstance) -> Result<(f64, Vec<usize>), ProblemError> {
    let n = t.n_vertices;
    if n > MAX_BRUTE_FORCE_TSP {
        return Err(ProblemError::Size { size: n, limit: format!("at most {MAX_BRUTE_FORCE_TSP} vertices") });
    }
    let mut rest: Vec<usize> = (1..n).collect();
    let mut best: Option<(f64, Vec<usize>)> = None;
    loop {
        let tour: Vec<usize> = std::iter::once(0).chain(rest.iter().copied()).collect();
        let len = t.tour_length(&tour);
        if best.as_ref().is_none_or(|(b, _)| len < *b) {
            best = Some((len, tour));
        }
        if !next_permutation(&mut rest) {
            break;
        }
    }
    Ok(best.expect("at least one tour"))
}

fn next_permutation(v: &mut [usize]) -> bool {
    if v.len() < 2 {
        return false;
    }
    let mut i = v.len() - 1;
    while i > 0 && v[i - 1] >= v[i] {
        i -= 1;
    }
    if i == 0 {
        return false;
    }
    let mut j = v.len() - 1;
    while v[j] <= v[i - 1] {
        j -= 1;
    }
    v.swap(i - 1, j);
    v[i..].reverse();
    true
}

// ---------------------------------------------------------------------------
// File formats

/// Edge-list text: the vertex count, then one `u v [weight]` line per edge.
/// Blank lines and `#` comments are ignored.
pub fn parse_graph(text: &str) -> Result<Graph, ProblemError> {
    let mut lines = data_lines(text);
    let (line, first) = lines.next().ok_or(ProblemError::Format { line: 1, message: "missing vertex count".into() })?;
    let n: usize = first.trim().parse().map_err(|_| ProblemError::Format { line, message: format!("bad vertex count `{first}`") })?;
    let mut edges = Vec::new();
    for (line, content) in lines {
        let fields: Vec<&str> = content.split_whitespace().collect();
        if fields.len() != 2 && fields.len() != 3 {
            return Err(ProblemError::Format { line, message: "expected `u v [weight]`".into() });
        }
        let bad = |f: &str| ProblemError::Format { line, message: format!("bad field `{f}`") };
        let u: usize = fields[0].parse().map_err(|_| bad(fields[0]))?;
        let v: usize = fields[1].parse().map_err(|_| bad(fields[1]))?;
        let w: f64 = match fields.get(2) {
            Some(f) => f.parse().map_err(|_| bad(f))?,
            None => 1.0,
        };
        edges.push((u, v, w));
    }
    Graph::new(n, edges)
}

pub fn serialize_graph(g: &Graph) -> String {
    let mut out = format!("{}\n", g.n_vertices);
    for e in &g.edges {
        if e.weight == 1.0 {
            writeln!(out, "{} {}", e.u, e.v).unwrap();
        } else {
            writeln!(out, "{} {} {:?}", e.u, e.v, e.weight).unwrap();
        }
    }
    out
}

/// TSP text: `n`, then `n` lines of `n` distances. An optional trailing
/// line `penalty P [scale s]` overrides the defaults.
pub fn parse_tsp(text: &str) -> Result<TspInstance, ProblemError> {
    let mut lines = data_lines(text);
    let (line, first) = lines.next().ok_or(ProblemError::Format { line: 1, message: "missing vertex count".into() })?;
    let n: usize = first.trim().parse().map_err(|_| ProblemError::Format { line, message: format!("bad vertex count `{first}`") })?;
    let mut rows = Vec::with_capacity(n);
    let mut penalty = None;
    let mut scale = 1.0;
    for (line, content) in lines {
        let fields: Vec<&str> = content.split_whitespace().collect();
        let bad = |f: &str| ProblemError::Format { line, message: format!("bad number `{f}`") };
        if fields[0] == "penalty" {
            penalty = Some(fields.get(1).ok_or_else(|| bad(""))?.parse::<f64>().map_err(|_| bad(fields[1]))?);
            if fields.get(2) == Some(&"scale") {
                let f = fields.get(3).ok_or_else(|| bad(""))?;
                scale = f.parse().map_err(|_| bad(f))?;
            }
            continue;
        }
        if rows.len() == n {
            return Err(ProblemError::Format { line, message: "more distance rows than vertices".into() });
        }
        let row = fields.iter().map(|f| f.parse::<f64>().map_err(|_| bad(f))).collect::<Result<Vec<_>, _>>()?;
        rows.push(row);
    }
    if rows.len() != n {
        return Err(ProblemError::Format { line: 0, message: format!("expected {n} distance rows, found {}", rows.len()) });
    }
    match penalty {
        Some(p) => TspInstance::with_penalty(rows, p, scale),
        None => {
            let t = TspInstance::new(rows)?;
            TspInstance::with_penalty(t.distances, t.penalty, scale)
        }
    }
}

pub fn serialize_tsp(t: &TspInstance) -> String {
    let mut out = format!("{}\n", t.n_vertices);
    for row in &t.distances {
        let cells: Vec<String> = row.iter().map(|d| format!("{d:?}")).collect();
        writeln!(out, "{}", cells.join(" ")).unwrap();
    }
    writeln!(out, "penalty {:?} scale {:?}", t.penalty, t.scale).unwrap();
    out
}

fn data_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.split('#').next().unwrap_or("").trim()))
        .filter(|(_, l)| !l.is_empty())
}
