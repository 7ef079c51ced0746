//! Variational optimization loop.
//!
//! [`CostEvaluator`] computes `C(θ) = ⟨Ψ(θ)|H|Ψ(θ)⟩` on the statevector
//! engine and accumulates the time spent in state preparation, circuit
//! application and expectation ("quantum time"). [`bfgs_minimize`] drives
//! any [`Objective`] with quasi-Newton BFGS, finite-difference gradients and
//! a strong-Wolfe line search.

use std::time::Duration;

use serde::{Deserialize, Serialize};
use thiserror::Error;
use web_time::Instant;

use crate::pauli_ir::PauliHamiltonian;
use crate::qasm::{ParamCircuit, QasmError};
use crate::statevector::{expectation, zero_state, StateError, StateVector};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DriverError {
    #[error("circuit has {circuit} qubits but the Hamiltonian has {hamiltonian}")]
    QubitMismatch { circuit: usize, hamiltonian: usize },
    #[error("expected {expected} parameters, got {got}")]
    ParamLength { expected: usize, got: usize },
    #[error("initial parameters contain a non-finite value")]
    NonFiniteStart,
    #[error(transparent)]
    Binding(#[from] QasmError),
    #[error(transparent)]
    State(#[from] StateError),
}

/// A scalar function minimized by [`bfgs_minimize`].
pub trait Objective {
    fn dimension(&self) -> usize;

    fn value(&mut self, x: &[f64]) -> Result<f64, DriverError>;

    /// Time attributed to circuit simulation so far.
    fn quantum_time(&self) -> Duration {
        Duration::ZERO
    }
}

/// Wraps a closure as an [`Objective`].
pub struct FnObjective<F> {
    dimension: usize,
    f: F,
}

impl<F: FnMut(&[f64]) -> f64> FnObjective<F> {
    pub fn new(dimension: usize, f: F) -> Self {
        Self { dimension, f }
    }
}

impl<F: FnMut(&[f64]) -> f64> Objective for FnObjective<F> {
    fn dimension(&self) -> usize {
        self.dimension
    }

    fn value(&mut self, x: &[f64]) -> Result<f64, DriverError> {
        Ok((self.f)(x))
    }
}

/// Expectation-value cost of a parameterized circuit.
#[derive(Debug)]
pub struct CostEvaluator<'a> {
    circuit: &'a ParamCircuit,
    hamiltonian: &'a PauliHamiltonian,
    quantum_time: Duration,
    eval_count: u64,
}

impl<'a> CostEvaluator<'a> {
    pub fn new(circuit: &'a ParamCircuit, hamiltonian: &'a PauliHamiltonian) -> Result<Self, DriverError> {
        if circuit.n_qubits() != hamiltonian.n_qubits() {
            return Err(DriverError::QubitMismatch { circuit: circuit.n_qubits(), hamiltonian: hamiltonian.n_qubits() });
        }
        Ok(Self { circuit, hamiltonian, quantum_time: Duration::ZERO, eval_count: 0 })
    }

    pub fn eval_count(&self) -> u64 {
        self.eval_count
    }

    pub fn quantum_time(&self) -> Duration {
        self.quantum_time
    }

    pub fn circuit(&self) -> &ParamCircuit {
        self.circuit
    }

    /// Final state for `params`, without touching the accounting.
    pub fn state(&self, params: &[f64]) -> Result<StateVector, DriverError> {
        let bound = self.circuit.bind(params)?;
        let mut s = zero_state(self.circuit.n_qubits())?;
        s.apply(&bound)?;
        Ok(s)
    }

    pub fn evaluate_cost(&mut self, params: &[f64]) -> Result<f64, DriverError> {
        if params.len() != self.circuit.n_params() {
            return Err(DriverError::ParamLength { expected: self.circuit.n_params(), got: params.len() });
        }
        let bound = self.circuit.bind(params)?;
        let start = Instant::now();
        let result = zero_state(self.circuit.n_qubits())
            .and_then(|mut s| s.apply(&bound).map(|_| s))
            .and_then(|s| expectation(&s, self.hamiltonian));
        self.quantum_time += start.elapsed();
        self.eval_count += 1;
        Ok(result?)
    }
}

impl Objective for CostEvaluator<'_> {
    fn dimension(&self) -> usize {
        self.circuit.n_params()
    }

    fn value(&mut self, x: &[f64]) -> Result<f64, DriverError> {
        self.evaluate_cost(x)
    }

    fn quantum_time(&self) -> Duration {
        self.quantum_time
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FiniteDifference {
    Forward,
    Central,
}

impl std::str::FromStr for FiniteDifference {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "forward" => Ok(Self::Forward),
            "central" => Ok(Self::Central),
            other => Err(format!("unknown finite-difference scheme `{other}` (expected forward|central)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OptimizerOptions {
    /// Sup-norm gradient tolerance.
    pub gtol: f64,
    /// Iteration cap; `None` means `200 · n_params`.
    pub maxiter: Option<usize>,
    pub finite_difference: FiniteDifference,
    /// Sufficient-decrease constant.
    pub c1: f64,
    /// Curvature constant.
    pub c2: f64,
}

impl Default for OptimizerOptions {
    fn default() -> Self {
        Self { gtol: 1e-5, maxiter: None, finite_difference: FiniteDifference::Forward, c1: 1e-4, c2: 0.9 }
    }
}

impl OptimizerOptions {
    pub fn max_iterations(&self, n_params: usize) -> usize {
        self.maxiter.unwrap_or(200 * n_params.max(1))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Termination {
    /// Gradient sup-norm fell below `gtol`.
    Converged,
    MaxIterations,
    LineSearchFailed,
    NonFiniteCost,
}

/// Outcome of one optimizer run.
#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryResult {
    pub initial_params: Vec<f64>,
    pub final_params: Vec<f64>,
    pub final_cost: f64,
    pub converged: bool,
    pub termination: Termination,
    pub iterations: usize,
    pub cost_evaluations: u64,
    pub quantum_time: Duration,
    pub total_time: Duration,
}

struct Counted<'o, O: Objective> {
    inner: &'o mut O,
    evals: u64,
}

enum Failure {
    NonFinite,
    Driver(DriverError),
}

impl From<DriverError> for Failure {
    fn from(e: DriverError) -> Self {
        Failure::Driver(e)
    }
}

impl<O: Objective> Counted<'_, O> {
    fn f(&mut self, x: &[f64]) -> Result<f64, Failure> {
        self.evals += 1;
        let v = self.inner.value(x)?;
        if v.is_finite() {
            Ok(v)
        } else {
            Err(Failure::NonFinite)
        }
    }
}

/// Step used by the finite-difference gradient for coordinate value `xi`.
pub fn fd_step(xi: f64) -> f64 {
    f64::EPSILON.sqrt() * xi.abs().max(1.0)
}

/// Finite-difference gradient of `f` at `x`, where `fx = f(x)`.
pub fn finite_difference_gradient<E, F>(mut f: F, x: &[f64], fx: f64, scheme: FiniteDifference) -> Result<Vec<f64>, E>
where
    F: FnMut(&[f64]) -> Result<f64, E>,
{
    let mut probe = x.to_vec();
    let mut g = Vec::with_capacity(x.len());
    for i in 0..x.len() {
        let h = fd_step(x[i]);
        probe[i] = x[i] + h;
        let up = f(&probe)?;
        let hi = probe[i];
        let gi = match scheme {
            FiniteDifference::Forward => (up - fx) / (hi - x[i]),
            FiniteDifference::Central => {
                probe[i] = x[i] - h;
                let down = f(&probe)?;
                (up - down) / (hi - probe[i])
            }
        };
        probe[i] = x[i];
        g.push(gi);
    }
    Ok(g)
}

fn grad<O: Objective>(obj: &mut Counted<'_, O>, x: &[f64], fx: f64, scheme: FiniteDifference) -> Result<Vec<f64>, Failure> {
    finite_difference_gradient(|p: &[f64]| obj.f(p), x, fx, scheme)
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn sup_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

struct Probe {
    alpha: f64,
    x: Vec<f64>,
    f: f64,
    g: Vec<f64>,
    slope: f64,
}

struct LineSearch<'p> {
    x: &'p [f64],
    p: &'p [f64],
    f0: f64,
    slope0: f64,
    c1: f64,
    c2: f64,
    scheme: FiniteDifference,
}

const LINE_SEARCH_ITERS: usize = 20;
const ZOOM_ITERS: usize = 30;

impl LineSearch<'_> {
    fn probe<O: Objective>(&self, obj: &mut Counted<'_, O>, alpha: f64) -> Result<Probe, Failure> {
        let x: Vec<f64> = self.x.iter().zip(self.p).map(|(xi, pi)| xi + alpha * pi).collect();
        let f = obj.f(&x)?;
        let g = grad(obj, &x, f, self.scheme)?;
        let slope = dot(&g, self.p);
        Ok(Probe { alpha, x, f, g, slope })
    }

    fn armijo(&self, pr: &Probe) -> bool {
        pr.f <= self.f0 + self.c1 * pr.alpha * self.slope0
    }

    fn curvature(&self, pr: &Probe) -> bool {
        pr.slope.abs() <= -self.c2 * self.slope0
    }

    /// Strong-Wolfe bracketing search. Returns `None` when no acceptable
    /// step is found.
    fn run<O: Objective>(&self, obj: &mut Counted<'_, O>, alpha0: f64) -> Result<Option<Probe>, Failure> {
        let mut prev = Probe { alpha: 0.0, x: self.x.to_vec(), f: self.f0, g: Vec::new(), slope: self.slope0 };
        let mut alpha = alpha0;
        for i in 0..LINE_SEARCH_ITERS {
            let cur = self.probe(obj, alpha)?;
            if !self.armijo(&cur) || (i > 0 && cur.f >= prev.f) {
                return self.zoom(obj, prev, cur);
            }
            if self.curvature(&cur) {
                return Ok(Some(cur));
            }
            if cur.slope >= 0.0 {
                return self.zoom(obj, cur, prev);
            }
            alpha = 2.0 * cur.alpha;
            prev = cur;
        }
        Ok(None)
    }

    fn zoom<O: Objective>(&self, obj: &mut Counted<'_, O>, mut lo: Probe, mut hi: Probe) -> Result<Option<Probe>, Failure> {
        for _ in 0..ZOOM_ITERS {
            let (a, b) = (lo.alpha.min(hi.alpha), lo.alpha.max(hi.alpha));
            if (b - a) <= 1e-14 * b.max(1e-14) {
                break;
            }
            // Minimizer of the quadratic through (lo.f, lo.slope) and hi.f,
            // kept away from the interval ends.
            let d = hi.alpha - lo.alpha;
            let denom = 2.0 * (hi.f - lo.f - lo.slope * d);
            let mut trial = if denom > 0.0 { lo.alpha - lo.slope * d * d / denom } else { f64::NAN };
            let margin = 0.1 * (b - a);
            if !trial.is_finite() || trial < a + margin || trial > b - margin {
                trial = 0.5 * (a + b);
            }
            let cur = self.probe(obj, trial)?;
            if !self.armijo(&cur) || cur.f >= lo.f {
                hi = cur;
            } else {
                if self.curvature(&cur) {
                    return Ok(Some(cur));
                }
                if cur.slope * (hi.alpha - lo.alpha) >= 0.0 {
                    hi = lo;
                }
                lo = cur;
            }
        }
        // The best point found still satisfies sufficient decrease when it
        // moved at all; accept it rather than discard progress.
        if lo.alpha > 0.0 && self.armijo(&lo) && lo.f < self.f0 {
            return Ok(Some(lo));
        }
        Ok(None)
    }
}

/// Quasi-Newton BFGS with an inverse-Hessian update and strong-Wolfe line
/// search. `converged` is true only when the gradient sup-norm drops below
/// `opts.gtol` within the iteration cap; line-search failure, the cap and
/// non-finite costs all end the run with `converged = false` and the last
/// accepted point reported.
pub fn bfgs_minimize<O: Objective>(
    obj: &mut O,
    x0: &[f64],
    opts: &OptimizerOptions,
) -> Result<TrajectoryResult, DriverError> {
    let n = obj.dimension();
    if x0.len() != n {
        return Err(DriverError::ParamLength { expected: n, got: x0.len() });
    }
    if x0.iter().any(|v| !v.is_finite()) {
        return Err(DriverError::NonFiniteStart);
    }
    let start = Instant::now();
    let q0 = obj.quantum_time();
    let maxiter = opts.max_iterations(n);
    let mut counted = Counted { inner: obj, evals: 0 };

    let mut x = x0.to_vec();
    let mut fx = f64::NAN;
    let mut iterations = 0;
    let termination = match bfgs_loop(&mut counted, &mut x, &mut fx, &mut iterations, maxiter, opts) {
        Ok(t) => t,
        Err(Failure::NonFinite) => Termination::NonFiniteCost,
        Err(Failure::Driver(e)) => return Err(e),
    };
    let evals = counted.evals;
    let quantum_time = obj.quantum_time().saturating_sub(q0);
    Ok(TrajectoryResult {
        initial_params: x0.to_vec(),
        final_params: x,
        final_cost: fx,
        converged: termination == Termination::Converged,
        termination,
        iterations,
        cost_evaluations: evals,
        quantum_time,
        total_time: start.elapsed().max(quantum_time),
    })
}

fn bfgs_loop<O: Objective>(
    obj: &mut Counted<'_, O>,
    x: &mut Vec<f64>,
    fx: &mut f64,
    iterations: &mut usize,
    maxiter: usize,
    opts: &OptimizerOptions,
) -> Result<Termination, Failure> {
    let n = x.len();
    *fx = obj.f(x)?;
    let mut g = grad(obj, x, *fx, opts.finite_difference)?;
    let mut hinv = identity(n);
    // Mirrors the common heuristic for the first trial step: pretend the
    // previous iterate was ‖g‖/2 higher.
    let mut f_prev = *fx + g.iter().map(|v| v * v).sum::<f64>().sqrt() / 2.0;

    while sup_norm(&g) > opts.gtol {
        if *iterations >= maxiter {
            return Ok(Termination::MaxIterations);
        }
        let mut p = mat_vec(&hinv, &g, -1.0);
        let mut slope = dot(&g, &p);
        if !(slope < 0.0) {
            hinv = identity(n);
            p = g.iter().map(|v| -v).collect();
            slope = dot(&g, &p);
        }
        let alpha0 = {
            let guess = 1.01 * 2.0 * (*fx - f_prev) / slope;
            if guess.is_finite() && guess > 0.0 {
                guess.min(1.0)
            } else {
                1.0
            }
        };
        let search = LineSearch { x, p: &p, f0: *fx, slope0: slope, c1: opts.c1, c2: opts.c2, scheme: opts.finite_difference };
        let Some(step) = search.run(obj, alpha0)? else {
            return Ok(Termination::LineSearchFailed);
        };
        let s: Vec<f64> = step.x.iter().zip(x.iter()).map(|(a, b)| a - b).collect();
        let y: Vec<f64> = step.g.iter().zip(&g).map(|(a, b)| a - b).collect();
        f_prev = *fx;
        *x = step.x;
        *fx = step.f;
        g = step.g;
        *iterations += 1;

        let ys = dot(&y, &s);
        if ys > 0.0 && ys.is_finite() {
            bfgs_update(&mut hinv, &s, &y, 1.0 / ys);
        }
    }
    Ok(Termination::Converged)
}

fn identity(n: usize) -> Vec<Vec<f64>> {
    (0..n).map(|i| (0..n).map(|j| if i == j { 1.0 } else { 0.0 }).collect()).collect()
}

fn mat_vec(m: &[Vec<f64>], v: &[f64], scale: f64) -> Vec<f64> {
    m.iter().map(|row| scale * dot(row, v)).collect()
}

/// `H ← (I − ρ s yᵀ) H (I − ρ y sᵀ) + ρ s sᵀ`
fn bfgs_update(h: &mut [Vec<f64>], s: &[f64], y: &[f64], rho: f64) {
    let n = s.len();
    let hy = mat_vec(h, y, 1.0);
    let yhy = dot(y, &hy);
    for i in 0..n {
        for j in 0..n {
            h[i][j] += -rho * (hy[i] * s[j] + s[i] * hy[j]) + (rho * rho * yhy + rho) * s[i] * s[j];
        }
    }
}
