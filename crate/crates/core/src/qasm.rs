//! Parameterized OpenQASM 2.0 subset.
//!
//! Accepted: the `OPENQASM 2.0;` header, `include "qelib1.inc";` (the gate
//! table is built in, nothing is read from disk), `qreg`/`creg`
//! declarations and gate applications on indexed qubits. Several `qreg`
//! declarations share one flat index space in declaration order.
//!
//! Symbolic circuit parameters are written as bare identifiers
//! `param_<k>`. Over a whole circuit the referenced indices must be exactly
//! `0..P` with no gaps.
//!
//! `measure`, `reset`, `barrier`, `if`, `opaque` and `gate` definitions are
//! rejected with a positioned diagnostic.

use std::collections::BTreeSet;
use std::fmt;

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum QasmError {
    #[error("{line}:{col}: {message}")]
    Syntax { line: usize, col: usize, message: String },
    #[error("{line}:{col}: unknown gate `{name}`")]
    UnknownGate { line: usize, col: usize, name: String },
    #[error("{line}:{col}: gate `{gate}` expects {expected_params} parameter(s) and {expected_qubits} qubit(s), got {params} and {qubits}")]
    Arity {
        line: usize,
        col: usize,
        gate: String,
        expected_params: usize,
        expected_qubits: usize,
        params: usize,
        qubits: usize,
    },
    #[error("{line}:{col}: qubit {register}[{index}] out of range (register size {size})")]
    QubitRange { line: usize, col: usize, register: String, index: usize, size: usize },
    #[error("{line}:{col}: gate `{gate}` applied to the same qubit twice")]
    DuplicateQubit { line: usize, col: usize, gate: String },
    #[error("{line}:{col}: unsupported feature: {feature}")]
    Unsupported { line: usize, col: usize, feature: String },
    #[error("parameter indices have a gap: param_{missing} is never referenced")]
    Gap { missing: usize },
    #[error("circuit declares no qubits")]
    NoQubits,
    #[error("expected {expected} parameter values, got {got}")]
    Length { expected: usize, got: usize },
    #[error("gate {op_index} (`{gate}`) has a non-finite argument")]
    NonFinite { op_index: usize, gate: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
}

impl BinOp {
    fn symbol(self) -> char {
        match self {
            BinOp::Add => '+',
            BinOp::Sub => '-',
            BinOp::Mul => '*',
            BinOp::Div => '/',
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Func {
    Sin,
    Cos,
    Tan,
    Exp,
    Ln,
    Sqrt,
}

impl Func {
    fn from_name(name: &str) -> Option<Self> {
        Some(match name {
            "sin" => Func::Sin,
            "cos" => Func::Cos,
            "tan" => Func::Tan,
            "exp" => Func::Exp,
            "ln" => Func::Ln,
            "sqrt" => Func::Sqrt,
            _ => return None,
        })
    }

    fn name(self) -> &'static str {
        match self {
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Tan => "tan",
            Func::Exp => "exp",
            Func::Ln => "ln",
            Func::Sqrt => "sqrt",
        }
    }

    fn apply(self, v: f64) -> f64 {
        match self {
            Func::Sin => v.sin(),
            Func::Cos => v.cos(),
            Func::Tan => v.tan(),
            Func::Exp => v.exp(),
            Func::Ln => v.ln(),
            Func::Sqrt => v.sqrt(),
        }
    }
}

/// Gate argument expression.
#[derive(Debug, Clone, PartialEq)]
pub enum ParamExpr {
    Const(f64),
    Pi,
    Param(usize),
    Neg(Box<ParamExpr>),
    Binary(BinOp, Box<ParamExpr>, Box<ParamExpr>),
    Call(Func, Box<ParamExpr>),
}

impl ParamExpr {
    pub fn param(k: usize) -> Self {
        ParamExpr::Param(k)
    }

    /// `factor * param_k`
    pub fn scaled_param(factor: f64, k: usize) -> Self {
        ParamExpr::Binary(BinOp::Mul, Box::new(ParamExpr::Const(factor)), Box::new(ParamExpr::Param(k)))
    }

    pub fn eval(&self, params: &[f64]) -> f64 {
        match self {
            ParamExpr::Const(v) => *v,
            ParamExpr::Pi => std::f64::consts::PI,
            ParamExpr::Param(k) => params[*k],
            ParamExpr::Neg(e) => -e.eval(params),
            ParamExpr::Binary(op, a, b) => {
                let (a, b) = (a.eval(params), b.eval(params));
                match op {
                    BinOp::Add => a + b,
                    BinOp::Sub => a - b,
                    BinOp::Mul => a * b,
                    BinOp::Div => a / b,
                }
            }
            ParamExpr::Call(f, e) => f.apply(e.eval(params)),
        }
    }

    pub fn collect_params(&self, out: &mut BTreeSet<usize>) {
        match self {
            ParamExpr::Const(_) | ParamExpr::Pi => {}
            ParamExpr::Param(k) => {
                out.insert(*k);
            }
            ParamExpr::Neg(e) | ParamExpr::Call(_, e) => e.collect_params(out),
            ParamExpr::Binary(_, a, b) => {
                a.collect_params(out);
                b.collect_params(out);
            }
        }
    }
}

// Binary operations are fully parenthesised so the printed form re-parses
// to the same tree regardless of precedence.
impl fmt::Display for ParamExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ParamExpr::Const(v) => write!(f, "{v:?}"),
            ParamExpr::Pi => f.write_str("pi"),
            ParamExpr::Param(k) => write!(f, "param_{k}"),
            ParamExpr::Neg(e) => write!(f, "-({e})"),
            ParamExpr::Binary(op, a, b) => write!(f, "({a} {} {b})", op.symbol()),
            ParamExpr::Call(func, e) => write!(f, "{}({e})", func.name()),
        }
    }
}

/// Gates of the built-in `qelib1.inc` table.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum GateKind {
    U1,
    U2,
    U3,
    Rx,
    Ry,
    Rz,
    H,
    X,
    Y,
    Z,
    S,
    Sdg,
    T,
    Tdg,
    Cx,
    Cz,
    Swap,
    Rzz,
}

impl GateKind {
    pub const ALL: [GateKind; 18] = [
        GateKind::U1,
        GateKind::U2,
        GateKind::U3,
        GateKind::Rx,
        GateKind::Ry,
        GateKind::Rz,
        GateKind::H,
        GateKind::X,
        GateKind::Y,
        GateKind::Z,
        GateKind::S,
        GateKind::Sdg,
        GateKind::T,
        GateKind::Tdg,
        GateKind::Cx,
        GateKind::Cz,
        GateKind::Swap,
        GateKind::Rzz,
    ];

    pub fn from_name(name: &str) -> Option<Self> {
        Some(match name {
            "u1" => GateKind::U1,
            "u2" => GateKind::U2,
            "u3" | "U" => GateKind::U3,
            "rx" => GateKind::Rx,
            "ry" => GateKind::Ry,
            "rz" => GateKind::Rz,
            "h" => GateKind::H,
            "x" => GateKind::X,
            "y" => GateKind::Y,
            "z" => GateKind::Z,
            "s" => GateKind::S,
            "sdg" => GateKind::Sdg,
            "t" => GateKind::T,
            "tdg" => GateKind::Tdg,
            "cx" | "CX" => GateKind::Cx,
            "cz" => GateKind::Cz,
            "swap" => GateKind::Swap,
            "rzz" => GateKind::Rzz,
            _ => return None,
        })
    }

    pub fn name(self) -> &'static str {
        match self {
            GateKind::U1 => "u1",
            GateKind::U2 => "u2",
            GateKind::U3 => "u3",
            GateKind::Rx => "rx",
            GateKind::Ry => "ry",
            GateKind::Rz => "rz",
            GateKind::H => "h",
            GateKind::X => "x",
            GateKind::Y => "y",
            GateKind::Z => "z",
            GateKind::S => "s",
            GateKind::Sdg => "sdg",
            GateKind::T => "t",
            GateKind::Tdg => "tdg",
            GateKind::Cx => "cx",
            GateKind::Cz => "cz",
            GateKind::Swap => "swap",
            GateKind::Rzz => "rzz",
        }
    }

    pub fn n_params(self) -> usize {
        match self {
            GateKind::U3 => 3,
            GateKind::U2 => 2,
            GateKind::U1 | GateKind::Rx | GateKind::Ry | GateKind::Rz | GateKind::Rzz => 1,
            _ => 0,
        }
    }

    pub fn n_qubits(self) -> usize {
        match self {
            GateKind::Cx | GateKind::Cz | GateKind::Swap | GateKind::Rzz => 2,
            _ => 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GateOp {
    pub kind: GateKind,
    pub args: Vec<ParamExpr>,
    pub qubits: Vec<usize>,
}

impl GateOp {
    pub fn new(kind: GateKind, args: Vec<ParamExpr>, qubits: Vec<usize>) -> Self {
        Self { kind, args, qubits }
    }
}

/// A gate sequence with symbolic parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct ParamCircuit {
    n_qubits: usize,
    ops: Vec<GateOp>,
    n_params: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BoundGate {
    pub kind: GateKind,
    pub args: Vec<f64>,
    pub qubits: Vec<usize>,
}

/// A circuit with every argument evaluated.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundCircuit {
    pub n_qubits: usize,
    pub gates: Vec<BoundGate>,
}

impl ParamCircuit {
    /// Validates arities, qubit ranges and parameter contiguity.
    pub fn new(n_qubits: usize, ops: Vec<GateOp>) -> Result<Self, QasmError> {
        if n_qubits == 0 {
            return Err(QasmError::NoQubits);
        }
        let mut used = BTreeSet::new();
        for op in &ops {
            check_op(op, n_qubits, 0, 0)?;
            for a in &op.args {
                a.collect_params(&mut used);
            }
        }
        let n_params = contiguous_count(&used)?;
        Ok(Self { n_qubits, ops, n_params })
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn ops(&self) -> &[GateOp] {
        &self.ops
    }

    pub fn n_params(&self) -> usize {
        self.n_params
    }

    pub fn bind(&self, values: &[f64]) -> Result<BoundCircuit, QasmError> {
        bind_params(self, values)
    }
}

fn contiguous_count(used: &BTreeSet<usize>) -> Result<usize, QasmError> {
    for (expected, &k) in used.iter().enumerate() {
        if k != expected {
            return Err(QasmError::Gap { missing: expected });
        }
    }
    Ok(used.len())
}

fn check_op(op: &GateOp, n_qubits: usize, line: usize, col: usize) -> Result<(), QasmError> {
    let kind = op.kind;
    if op.args.len() != kind.n_params() || op.qubits.len() != kind.n_qubits() {
        return Err(QasmError::Arity {
            line,
            col,
            gate: kind.name().into(),
            expected_params: kind.n_params(),
            expected_qubits: kind.n_qubits(),
            params: op.args.len(),
            qubits: op.qubits.len(),
        });
    }
    for &q in &op.qubits {
        if q >= n_qubits {
            return Err(QasmError::QubitRange { line, col, register: "q".into(), index: q, size: n_qubits });
        }
    }
    if op.qubits.len() == 2 && op.qubits[0] == op.qubits[1] {
        return Err(QasmError::DuplicateQubit { line, col, gate: kind.name().into() });
    }
    Ok(())
}

/// Evaluates every gate argument. The input circuit is untouched.
pub fn bind_params(c: &ParamCircuit, values: &[f64]) -> Result<BoundCircuit, QasmError> {
    if values.len() != c.n_params {
        return Err(QasmError::Length { expected: c.n_params, got: values.len() });
    }
    let mut gates = Vec::with_capacity(c.ops.len());
    for (op_index, op) in c.ops.iter().enumerate() {
        let args: Vec<f64> = op.args.iter().map(|a| a.eval(values)).collect();
        if args.iter().any(|v| !v.is_finite()) {
            return Err(QasmError::NonFinite { op_index, gate: op.kind.name().into() });
        }
        gates.push(BoundGate { kind: op.kind, args, qubits: op.qubits.clone() });
    }
    Ok(BoundCircuit { n_qubits: c.n_qubits, gates })
}

/// Emits the circuit in the accepted subset with a single register `q`.
pub fn serialize_qasm(c: &ParamCircuit) -> String {
    let mut out = String::from("OPENQASM 2.0;\ninclude \"qelib1.inc\";\n");
    out.push_str(&format!("qreg q[{}];\n", c.n_qubits));
    for op in &c.ops {
        out.push_str(op.kind.name());
        if !op.args.is_empty() {
            let args: Vec<String> = op.args.iter().map(|a| a.to_string()).collect();
            out.push('(');
            out.push_str(&args.join(", "));
            out.push(')');
        }
        let qubits: Vec<String> = op.qubits.iter().map(|q| format!("q[{q}]")).collect();
        out.push(' ');
        out.push_str(&qubits.join(","));
        out.push_str(";\n");
    }
    out
}

// ---------------------------------------------------------------------------
// Lexer

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Ident(String),
    Int(usize),
    Real(f64),
    Str(String),
    Sym(char),
    Arrow,
    Eof,
}

#[derive(Debug, Clone)]
struct Token {
    tok: Tok,
    line: usize,
    col: usize,
}

fn lex(src: &str) -> Result<Vec<Token>, QasmError> {
    let chars: Vec<char> = src.chars().collect();
    let mut out = Vec::new();
    let (mut i, mut line, mut col) = (0usize, 1usize, 1usize);
    let syntax = |line, col, message: String| QasmError::Syntax { line, col, message };
    while i < chars.len() {
        let c = chars[i];
        if c == '\n' {
            i += 1;
            line += 1;
            col = 1;
            continue;
        }
        if c.is_whitespace() {
            i += 1;
            col += 1;
            continue;
        }
        if c == '/' && chars.get(i + 1) == Some(&'/') {
            while i < chars.len() && chars[i] != '\n' {
                i += 1;
            }
            continue;
        }
        let (start_line, start_col) = (line, col);
        if c.is_ascii_alphabetic() || c == '_' {
            let start = i;
            while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_') {
                i += 1;
            }
            let word: String = chars[start..i].iter().collect();
            col += i - start;
            out.push(Token { tok: Tok::Ident(word), line: start_line, col: start_col });
        } else if c.is_ascii_digit() || (c == '.' && chars.get(i + 1).is_some_and(|d| d.is_ascii_digit())) {
            let start = i;
            let mut is_real = false;
            while i < chars.len() && chars[i].is_ascii_digit() {
                i += 1;
            }
            if i < chars.len() && chars[i] == '.' {
                is_real = true;
                i += 1;
                while i < chars.len() && chars[i].is_ascii_digit() {
                    i += 1;
                }
            }
            if i < chars.len() && (chars[i] == 'e' || chars[i] == 'E') {
                let mut j = i + 1;
                if j < chars.len() && (chars[j] == '+' || chars[j] == '-') {
                    j += 1;
                }
                if j < chars.len() && chars[j].is_ascii_digit() {
                    is_real = true;
                    i = j;
                    while i < chars.len() && chars[i].is_ascii_digit() {
                        i += 1;
                    }
                }
            }
            let text: String = chars[start..i].iter().collect();
            col += i - start;
            let tok = if is_real {
                Tok::Real(text.parse().map_err(|_| syntax(start_line, start_col, format!("bad number `{text}`")))?)
            } else {
                match text.parse::<usize>() {
                    Ok(v) => Tok::Int(v),
                    Err(_) => Tok::Real(
                        text.parse().map_err(|_| syntax(start_line, start_col, format!("bad number `{text}`")))?,
                    ),
                }
            };
            out.push(Token { tok, line: start_line, col: start_col });
        } else if c == '"' {
            let start = i + 1;
            i += 1;
            while i < chars.len() && chars[i] != '"' && chars[i] != '\n' {
                i += 1;
            }
            if i >= chars.len() || chars[i] != '"' {
                return Err(syntax(start_line, start_col, "unterminated string".into()));
            }
            let s: String = chars[start..i].iter().collect();
            i += 1;
            col += s.chars().count() + 2;
            out.push(Token { tok: Tok::Str(s), line: start_line, col: start_col });
        } else if c == '-' && chars.get(i + 1) == Some(&'>') {
            i += 2;
            col += 2;
            out.push(Token { tok: Tok::Arrow, line: start_line, col: start_col });
        } else if "();,[]+-*/{}^=<>".contains(c) {
            i += 1;
            col += 1;
            out.push(Token { tok: Tok::Sym(c), line: start_line, col: start_col });
        } else {
            return Err(syntax(start_line, start_col, format!("unexpected character `{c}`")));
        }
    }
    out.push(Token { tok: Tok::Eof, line, col });
    Ok(out)
}

// ---------------------------------------------------------------------------
// Parser

struct Register {
    name: String,
    offset: usize,
    size: usize,
}

struct Parser {
    toks: Vec<Token>,
    pos: usize,
    qregs: Vec<Register>,
    cregs: Vec<String>,
    n_qubits: usize,
}

impl Parser {
    fn peek(&self) -> &Token {
        &self.toks[self.pos]
    }

    fn next(&mut self) -> Token {
        let t = self.toks[self.pos].clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn err<T>(&self, t: &Token, message: impl Into<String>) -> Result<T, QasmError> {
        Err(QasmError::Syntax { line: t.line, col: t.col, message: message.into() })
    }

    fn expect_sym(&mut self, c: char) -> Result<Token, QasmError> {
        let t = self.next();
        if t.tok == Tok::Sym(c) {
            Ok(t)
        } else {
            self.err(&t, format!("expected `{c}`, found {}", describe(&t.tok)))
        }
    }

    fn expect_ident(&mut self) -> Result<(String, Token), QasmError> {
        let t = self.next();
        match &t.tok {
            Tok::Ident(s) => Ok((s.clone(), t.clone())),
            other => self.err(&t, format!("expected identifier, found {}", describe(other))),
        }
    }

    fn expect_int(&mut self) -> Result<usize, QasmError> {
        let t = self.next();
        match t.tok {
            Tok::Int(v) => Ok(v),
            ref other => self.err(&t, format!("expected integer, found {}", describe(other))),
        }
    }

    fn header(&mut self) -> Result<(), QasmError> {
        let t = self.next();
        if t.tok != Tok::Ident("OPENQASM".into()) {
            return self.err(&t, "expected `OPENQASM 2.0;` header");
        }
        let v = self.next();
        match v.tok {
            Tok::Real(x) if x == 2.0 => {}
            Tok::Int(2) => {}
            Tok::Real(_) | Tok::Int(_) => {
                return Err(QasmError::Unsupported {
                    line: v.line,
                    col: v.col,
                    feature: "OpenQASM versions other than 2.0".into(),
                })
            }
            ref other => return self.err(&v, format!("expected version number, found {}", describe(other))),
        }
        self.expect_sym(';')?;
        Ok(())
    }

    fn program(mut self) -> Result<ParamCircuit, QasmError> {
        self.header()?;
        let mut ops = Vec::new();
        let mut used = BTreeSet::new();
        loop {
            let t = self.peek().clone();
            match &t.tok {
                Tok::Eof => break,
                Tok::Ident(word) => match word.as_str() {
                    "include" => {
                        self.next();
                        let s = self.next();
                        match &s.tok {
                            Tok::Str(name) if name == "qelib1.inc" => {}
                            Tok::Str(name) => {
                                return Err(QasmError::Unsupported {
                                    line: s.line,
                                    col: s.col,
                                    feature: format!("include of `{name}`"),
                                })
                            }
                            other => return self.err(&s, format!("expected file name, found {}", describe(other))),
                        }
                        self.expect_sym(';')?;
                    }
                    "qreg" | "creg" => {
                        self.next();
                        let (name, name_tok) = self.expect_ident()?;
                        self.expect_sym('[')?;
                        let size = self.expect_int()?;
                        self.expect_sym(']')?;
                        self.expect_sym(';')?;
                        if self.qregs.iter().any(|r| r.name == name) || self.cregs.contains(&name) {
                            return self.err(&name_tok, format!("register `{name}` declared twice"));
                        }
                        if word == "qreg" {
                            if size == 0 {
                                return self.err(&name_tok, "register size must be positive");
                            }
                            self.qregs.push(Register { name, offset: self.n_qubits, size });
                            self.n_qubits += size;
                        } else {
                            self.cregs.push(name);
                        }
                    }
                    "measure" | "reset" | "barrier" | "if" | "gate" | "opaque" => {
                        return Err(QasmError::Unsupported {
                            line: t.line,
                            col: t.col,
                            feature: format!("`{word}` statements"),
                        });
                    }
                    "OPENQASM" => return self.err(&t, "duplicate OPENQASM header"),
                    _ => {
                        let op = self.gate_application()?;
                        for a in &op.args {
                            a.collect_params(&mut used);
                        }
                        ops.push(op);
                    }
                },
                other => return self.err(&t, format!("expected statement, found {}", describe(other))),
            }
        }
        if self.n_qubits == 0 {
            return Err(QasmError::NoQubits);
        }
        let n_params = contiguous_count(&used)?;
        Ok(ParamCircuit { n_qubits: self.n_qubits, ops, n_params })
    }

    fn gate_application(&mut self) -> Result<GateOp, QasmError> {
        let (name, name_tok) = self.expect_ident()?;
        let Some(kind) = GateKind::from_name(&name) else {
            return Err(QasmError::UnknownGate { line: name_tok.line, col: name_tok.col, name });
        };
        let mut args = Vec::new();
        if self.peek().tok == Tok::Sym('(') {
            self.next();
            if self.peek().tok != Tok::Sym(')') {
                loop {
                    args.push(self.expr()?);
                    if self.peek().tok == Tok::Sym(',') {
                        self.next();
                    } else {
                        break;
                    }
                }
            }
            self.expect_sym(')')?;
        }
        let mut qubits = Vec::new();
        loop {
            qubits.push(self.qubit_ref()?);
            if self.peek().tok == Tok::Sym(',') {
                self.next();
            } else {
                break;
            }
        }
        self.expect_sym(';')?;
        let op = GateOp { kind, args, qubits };
        check_op(&op, self.n_qubits, name_tok.line, name_tok.col)?;
        Ok(op)
    }

    fn qubit_ref(&mut self) -> Result<usize, QasmError> {
        let (name, tok) = self.expect_ident()?;
        let Some(reg) = self.qregs.iter().find(|r| r.name == name) else {
            return self.err(&tok, format!("`{name}` is not a declared quantum register"));
        };
        let (offset, size) = (reg.offset, reg.size);
        if self.peek().tok != Tok::Sym('[') {
            return Err(QasmError::Unsupported {
                line: tok.line,
                col: tok.col,
                feature: "whole-register gate arguments".into(),
            });
        }
        self.next();
        let index = self.expect_int()?;
        self.expect_sym(']')?;
        if index >= size {
            return Err(QasmError::QubitRange { line: tok.line, col: tok.col, register: name, index, size });
        }
        Ok(offset + index)
    }

    // expr := term (('+'|'-') term)*
    fn expr(&mut self) -> Result<ParamExpr, QasmError> {
        let mut lhs = self.term()?;
        loop {
            let op = match self.peek().tok {
                Tok::Sym('+') => BinOp::Add,
                Tok::Sym('-') => BinOp::Sub,
                _ => return Ok(lhs),
            };
            self.next();
            let rhs = self.term()?;
            lhs = ParamExpr::Binary(op, Box::new(lhs), Box::new(rhs));
        }
    }

    // term := unary (('*'|'/') unary)*
    fn term(&mut self) -> Result<ParamExpr, QasmError> {
        let mut lhs = self.unary()?;
        loop {
            let op = match self.peek().tok {
                Tok::Sym('*') => BinOp::Mul,
                Tok::Sym('/') => BinOp::Div,
                Tok::Sym('^') => {
                    let t = self.peek().clone();
                    return self.err(&t, "`^` is not supported in parameter expressions");
                }
                _ => return Ok(lhs),
            };
            self.next();
            let rhs = self.unary()?;
            lhs = ParamExpr::Binary(op, Box::new(lhs), Box::new(rhs));
        }
    }

    fn unary(&mut self) -> Result<ParamExpr, QasmError> {
        if self.peek().tok == Tok::Sym('-') {
            self.next();
            let inner = self.unary()?;
            // A negated literal is stored as a negative constant.
            return Ok(match inner {
                ParamExpr::Const(v) => ParamExpr::Const(-v),
                other => ParamExpr::Neg(Box::new(other)),
            });
        }
        if self.peek().tok == Tok::Sym('+') {
            self.next();
            return self.unary();
        }
        self.primary()
    }

    fn primary(&mut self) -> Result<ParamExpr, QasmError> {
        let t = self.next();
        match &t.tok {
            Tok::Int(v) => Ok(ParamExpr::Const(*v as f64)),
            Tok::Real(v) => Ok(ParamExpr::Const(*v)),
            Tok::Sym('(') => {
                let e = self.expr()?;
                self.expect_sym(')')?;
                Ok(e)
            }
            Tok::Ident(name) if name == "pi" => Ok(ParamExpr::Pi),
            Tok::Ident(name) => {
                if let Some(func) = Func::from_name(name) {
                    self.expect_sym('(')?;
                    let e = self.expr()?;
                    self.expect_sym(')')?;
                    return Ok(ParamExpr::Call(func, Box::new(e)));
                }
                if let Some(k) = parse_param_name(name) {
                    return Ok(ParamExpr::Param(k));
                }
                self.err(&t, format!("unknown identifier `{name}` in expression (parameters are `param_<k>`)"))
            }
            other => self.err(&t, format!("expected expression, found {}", describe(other))),
        }
    }
}

fn parse_param_name(name: &str) -> Option<usize> {
    let digits = name.strip_prefix("param_")?;
    if digits.is_empty() || !digits.bytes().all(|b| b.is_ascii_digit()) {
        return None;
    }
    digits.parse().ok()
}

fn describe(t: &Tok) -> String {
    match t {
        Tok::Ident(s) => format!("`{s}`"),
        Tok::Int(v) => format!("`{v}`"),
        Tok::Real(v) => format!("`{v}`"),
        Tok::Str(s) => format!("\"{s}\""),
        Tok::Sym(c) => format!("`{c}`"),
        Tok::Arrow => "`->`".into(),
        Tok::Eof => "end of input".into(),
    }
}

pub fn parse_qasm(input: &str) -> Result<ParamCircuit, QasmError> {
    let toks = lex(input)?;
    Parser { toks, pos: 0, qregs: Vec::new(), cregs: Vec::new(), n_qubits: 0 }.program()
}
