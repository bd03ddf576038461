//! Gate semantics.
//!
//! Qubit 0 is the least-significant bit of a state-vector index. A gate's local
//! matrix is indexed over [`Gate::qubits`] (targets first, then controls), local
//! bit `k` corresponding to `qubits()[k]`.

use std::f64::consts::FRAC_1_SQRT_2;
use std::fmt;

use crate::error::{Error, Result};
use crate::C64;

/// Largest fused-gate width accepted anywhere in the crate.
pub const MAX_FUSED_QUBITS: usize = 12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum GateKind {
    H,
    /// Generic one-qubit gate `U(theta, phi, lambda)`.
    U,
    X,
    CX,
    CP,
    Swap,
    RX,
    RY,
    RZ,
    RZZ,
    /// Fused diagonal gate on `k` qubits.
    Diag(usize),
    /// Fused dense unitary on `k` qubits.
    Unitary(usize),
}

impl GateKind {
    /// Every non-fused kind, in file-name order.
    pub const STANDARD: [GateKind; 10] = [
        GateKind::H,
        GateKind::U,
        GateKind::X,
        GateKind::CX,
        GateKind::CP,
        GateKind::Swap,
        GateKind::RX,
        GateKind::RY,
        GateKind::RZ,
        GateKind::RZZ,
    ];

    pub fn num_targets(self) -> usize {
        match self {
            GateKind::H | GateKind::U | GateKind::X | GateKind::RX | GateKind::RY | GateKind::RZ => 1,
            GateKind::CX | GateKind::CP => 1,
            GateKind::Swap | GateKind::RZZ => 2,
            GateKind::Diag(k) | GateKind::Unitary(k) => k,
        }
    }

    pub fn num_controls(self) -> usize {
        match self {
            GateKind::CX | GateKind::CP => 1,
            _ => 0,
        }
    }

    /// Total number of qubits the gate touches.
    pub fn arity(self) -> usize {
        self.num_targets() + self.num_controls()
    }

    pub fn num_params(self) -> usize {
        match self {
            GateKind::U => 3,
            GateKind::CP | GateKind::RX | GateKind::RY | GateKind::RZ | GateKind::RZZ => 1,
            _ => 0,
        }
    }

    pub fn is_fused(self) -> bool {
        matches!(self, GateKind::Diag(_) | GateKind::Unitary(_))
    }

    /// Kinds whose matrix is invariant under permuting the targets.
    pub fn symmetric_targets(self) -> bool {
        matches!(self, GateKind::Swap | GateKind::RZZ)
    }

    pub fn name(self) -> String {
        match self {
            GateKind::H => "H".into(),
            GateKind::U => "U".into(),
            GateKind::X => "X".into(),
            GateKind::CX => "CX".into(),
            GateKind::CP => "CP".into(),
            GateKind::Swap => "SWAP".into(),
            GateKind::RX => "RX".into(),
            GateKind::RY => "RY".into(),
            GateKind::RZ => "RZ".into(),
            GateKind::RZZ => "RZZ".into(),
            GateKind::Diag(k) => format!("D{k}"),
            GateKind::Unitary(k) => format!("U{k}"),
        }
    }

    pub fn from_name(name: &str) -> Option<GateKind> {
        let kind = match name {
            "H" => GateKind::H,
            "U" => GateKind::U,
            "X" => GateKind::X,
            "CX" => GateKind::CX,
            "CP" => GateKind::CP,
            "SWAP" => GateKind::Swap,
            "RX" => GateKind::RX,
            "RY" => GateKind::RY,
            "RZ" => GateKind::RZ,
            "RZZ" => GateKind::RZZ,
            _ => {
                let (head, width) = name.split_at(1);
                let k: usize = width.parse().ok()?;
                if k == 0 || k > MAX_FUSED_QUBITS {
                    return None;
                }
                match head {
                    "D" => GateKind::Diag(k),
                    "U" => GateKind::Unitary(k),
                    _ => return None,
                }
            }
        };
        Some(kind)
    }
}

impl fmt::Display for GateKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.name())
    }
}

/// Numeric body of a fused gate.
#[derive(Debug, Clone, PartialEq)]
pub enum Payload {
    Diagonal(Vec<C64>),
    /// Row-major `2^k x 2^k` matrix.
    Matrix(Vec<C64>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Gate {
    pub kind: GateKind,
    pub targets: Vec<usize>,
    pub controls: Vec<usize>,
    pub params: Vec<f64>,
    pub id: u64,
    pub payload: Option<Payload>,
    /// Ids of the original gates folded into a fused gate, ascending.
    pub constituents: Vec<u64>,
}

impl Gate {
    /// Builds and validates a non-fused gate.
    pub fn new(kind: GateKind, targets: Vec<usize>, controls: Vec<usize>, params: Vec<f64>, id: u64) -> Result<Gate> {
        if kind.is_fused() {
            return Err(Error::MalformedGate(format!("{kind} requires a payload")));
        }
        let gate = Gate { kind, targets, controls, params, id, payload: None, constituents: Vec::new() };
        gate.check()?;
        Ok(gate)
    }

    pub fn h(q: usize, id: u64) -> Gate {
        Gate::new(GateKind::H, vec![q], vec![], vec![], id).expect("valid H")
    }

    pub fn x(q: usize, id: u64) -> Gate {
        Gate::new(GateKind::X, vec![q], vec![], vec![], id).expect("valid X")
    }

    pub fn cx(control: usize, target: usize, id: u64) -> Result<Gate> {
        Gate::new(GateKind::CX, vec![target], vec![control], vec![], id)
    }

    pub fn cp(control: usize, target: usize, theta: f64, id: u64) -> Result<Gate> {
        Gate::new(GateKind::CP, vec![target], vec![control], vec![theta], id)
    }

    pub fn rx(q: usize, theta: f64, id: u64) -> Gate {
        Gate::new(GateKind::RX, vec![q], vec![], vec![theta], id).expect("valid RX")
    }

    pub fn rz(q: usize, theta: f64, id: u64) -> Gate {
        Gate::new(GateKind::RZ, vec![q], vec![], vec![theta], id).expect("valid RZ")
    }

    pub fn rzz(a: usize, b: usize, theta: f64, id: u64) -> Result<Gate> {
        Gate::new(GateKind::RZZ, vec![a, b], vec![], vec![theta], id)
    }

    /// Fused diagonal gate over `targets` (local bit `k` is `targets[k]`).
    pub fn fused_diagonal(targets: Vec<usize>, diagonal: Vec<C64>, constituents: Vec<u64>) -> Result<Gate> {
        let gate = Gate {
            kind: GateKind::Diag(targets.len()),
            id: constituents.iter().copied().min().unwrap_or(0),
            targets,
            controls: Vec::new(),
            params: Vec::new(),
            payload: Some(Payload::Diagonal(diagonal)),
            constituents: sorted(constituents),
        };
        gate.check()?;
        Ok(gate)
    }

    /// Fused dense gate over `targets` with a row-major matrix.
    pub fn fused_unitary(targets: Vec<usize>, matrix: Vec<C64>, constituents: Vec<u64>) -> Result<Gate> {
        let gate = Gate {
            kind: GateKind::Unitary(targets.len()),
            id: constituents.iter().copied().min().unwrap_or(0),
            targets,
            controls: Vec::new(),
            params: Vec::new(),
            payload: Some(Payload::Matrix(matrix)),
            constituents: sorted(constituents),
        };
        gate.check()?;
        Ok(gate)
    }

    /// Checks arity, parameter count, distinctness and payload shape.
    pub fn check(&self) -> Result<()> {
        let kind = self.kind;
        if self.targets.len() != kind.num_targets() || self.controls.len() != kind.num_controls() {
            return Err(Error::MalformedGate(format!(
                "{kind} expects {} target(s) and {} control(s), got {} and {}",
                kind.num_targets(),
                kind.num_controls(),
                self.targets.len(),
                self.controls.len()
            )));
        }
        if self.params.len() != kind.num_params() {
            return Err(Error::MalformedGate(format!(
                "{kind} expects {} parameter(s), got {}",
                kind.num_params(),
                self.params.len()
            )));
        }
        let qubits = self.qubits();
        for (i, q) in qubits.iter().enumerate() {
            if qubits[..i].contains(q) {
                return Err(Error::MalformedGate(format!("{kind} touches qubit {q} twice")));
            }
        }
        match (kind, &self.payload) {
            (GateKind::Diag(k), Some(Payload::Diagonal(d))) if d.len() == 1 << k => Ok(()),
            (GateKind::Unitary(k), Some(Payload::Matrix(m))) if m.len() == 1 << (2 * k) => Ok(()),
            (GateKind::Diag(_) | GateKind::Unitary(_), _) => {
                Err(Error::MalformedGate(format!("{kind} payload missing or of the wrong size")))
            }
            (_, Some(_)) => Err(Error::MalformedGate(format!("{kind} cannot carry a payload"))),
            (_, None) => Ok(()),
        }
    }

    /// Targets followed by controls; the local bit order of [`gate_matrix`].
    pub fn qubits(&self) -> Vec<usize> {
        let mut q = self.targets.clone();
        q.extend_from_slice(&self.controls);
        q
    }

    /// Bitmask of every qubit the gate depends on (targets and controls).
    pub fn dep_mask(&self) -> u64 {
        self.targets.iter().chain(&self.controls).fold(0u64, |m, &q| m | (1u64 << q))
    }

    pub fn max_qubit(&self) -> usize {
        self.targets.iter().chain(&self.controls).copied().max().unwrap_or(0)
    }

    /// True when the gate commutes with every other gate that is diagonal on `q`.
    pub fn acts_diagonally_on(&self, q: usize) -> bool {
        is_diagonal(self) || self.controls.contains(&q)
    }

    /// Original ids this gate stands for: the constituents of a fused gate, or its own id.
    pub fn source_ids(&self) -> Vec<u64> {
        if self.kind.is_fused() {
            self.constituents.clone()
        } else {
            vec![self.id]
        }
    }

    /// Relabels qubits through `map`. Symmetric and fused gates get ascending
    /// targets; fused payloads are permuted to match.
    pub fn remap(&self, map: impl Fn(usize) -> usize) -> Gate {
        let mut out = self.clone();
        out.targets = self.targets.iter().map(|&q| map(q)).collect();
        out.controls = self.controls.iter().map(|&q| map(q)).collect();
        if self.kind.symmetric_targets() {
            out.targets.sort_unstable();
        } else if self.kind.is_fused() {
            let mut sorted_targets = out.targets.clone();
            sorted_targets.sort_unstable();
            if sorted_targets != out.targets {
                out.payload = Some(match self.payload.as_ref().expect("fused gate has payload") {
                    Payload::Diagonal(d) => Payload::Diagonal(permute_diagonal(d, &out.targets, &sorted_targets)),
                    Payload::Matrix(m) => Payload::Matrix(permute_matrix(m, &out.targets, &sorted_targets)),
                });
                out.targets = sorted_targets;
            }
        }
        out
    }

    /// Matrix of this gate acting on the ordered qubit list `onto`, which must
    /// contain every qubit of the gate.
    pub fn expand_to(&self, onto: &[usize]) -> Result<Matrix> {
        let local = gate_matrix(self)?;
        let positions = local_positions(&self.qubits(), onto)?;
        Ok(local.embed(&positions, onto.len()))
    }

    /// Diagonal of this gate on the ordered qubit list `onto`, if the gate is diagonal.
    pub fn expand_diagonal_to(&self, onto: &[usize]) -> Result<Option<Vec<C64>>> {
        let Some(diag) = gate_diagonal(self) else { return Ok(None) };
        let positions = local_positions(&self.qubits(), onto)?;
        let out = (0..1usize << onto.len()).map(|i| diag[gather_bits(i, &positions)]).collect();
        Ok(Some(out))
    }
}

fn sorted(mut v: Vec<u64>) -> Vec<u64> {
    v.sort_unstable();
    v
}

fn local_positions(qubits: &[usize], onto: &[usize]) -> Result<Vec<usize>> {
    qubits
        .iter()
        .map(|q| {
            onto.iter()
                .position(|o| o == q)
                .ok_or_else(|| Error::Contract(format!("qubit {q} missing from expansion target")))
        })
        .collect()
}

/// Collects the bits of `i` at `positions` into a compact index (bit `k` from `positions[k]`).
pub fn gather_bits(i: usize, positions: &[usize]) -> usize {
    positions.iter().enumerate().fold(0, |acc, (k, &p)| acc | (((i >> p) & 1) << k))
}

/// Inverse of [`gather_bits`]: places bit `k` of `local` at `positions[k]`.
pub fn scatter_bits(local: usize, positions: &[usize]) -> usize {
    positions.iter().enumerate().fold(0, |acc, (k, &p)| acc | (((local >> k) & 1) << p))
}

fn permute_diagonal(d: &[C64], from: &[usize], to: &[usize]) -> Vec<C64> {
    let pos: Vec<usize> = to.iter().map(|q| from.iter().position(|f| f == q).unwrap()).collect();
    (0..d.len()).map(|i| d[scatter_bits(i, &pos)]).collect()
}

fn permute_matrix(m: &[C64], from: &[usize], to: &[usize]) -> Vec<C64> {
    let dim = 1usize << from.len();
    let pos: Vec<usize> = to.iter().map(|q| from.iter().position(|f| f == q).unwrap()).collect();
    let mut out = vec![C64::new(0.0, 0.0); dim * dim];
    for r in 0..dim {
        let rr = scatter_bits(r, &pos);
        for c in 0..dim {
            out[r * dim + c] = m[rr * dim + scatter_bits(c, &pos)];
        }
    }
    out
}

/// Small dense complex matrix, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    pub dim: usize,
    pub data: Vec<C64>,
}

impl Matrix {
    pub fn identity(dim: usize) -> Matrix {
        let mut data = vec![C64::new(0.0, 0.0); dim * dim];
        for i in 0..dim {
            data[i * dim + i] = C64::new(1.0, 0.0);
        }
        Matrix { dim, data }
    }

    pub fn from_rows(dim: usize, data: Vec<C64>) -> Matrix {
        assert_eq!(data.len(), dim * dim);
        Matrix { dim, data }
    }

    pub fn from_diagonal(diag: &[C64]) -> Matrix {
        let mut m = Matrix::identity(diag.len());
        for (i, d) in diag.iter().enumerate() {
            m.data[i * diag.len() + i] = *d;
        }
        m
    }

    pub fn get(&self, r: usize, c: usize) -> C64 {
        self.data[r * self.dim + c]
    }

    pub fn mul(&self, rhs: &Matrix) -> Matrix {
        assert_eq!(self.dim, rhs.dim);
        let n = self.dim;
        let mut data = vec![C64::new(0.0, 0.0); n * n];
        for r in 0..n {
            for k in 0..n {
                let a = self.data[r * n + k];
                if a == C64::new(0.0, 0.0) {
                    continue;
                }
                for c in 0..n {
                    data[r * n + c] += a * rhs.data[k * n + c];
                }
            }
        }
        Matrix { dim: n, data }
    }

    pub fn adjoint(&self) -> Matrix {
        let n = self.dim;
        let mut data = vec![C64::new(0.0, 0.0); n * n];
        for r in 0..n {
            for c in 0..n {
                data[c * n + r] = self.data[r * n + c].conj();
            }
        }
        Matrix { dim: n, data }
    }

    pub fn max_abs_diff(&self, other: &Matrix) -> f64 {
        self.data.iter().zip(&other.data).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max)
    }

    pub fn is_unitary(&self, tol: f64) -> bool {
        self.mul(&self.adjoint()).max_abs_diff(&Matrix::identity(self.dim)) <= tol
    }

    pub fn is_diagonal(&self) -> bool {
        (0..self.dim).all(|r| (0..self.dim).all(|c| r == c || self.get(r, c) == C64::new(0.0, 0.0)))
    }

    /// Embeds this `2^a` matrix into a `2^width` space where local bit `k` sits
    /// at bit `positions[k]`; identity on the remaining bits.
    pub fn embed(&self, positions: &[usize], width: usize) -> Matrix {
        let dim = 1usize << width;
        let local_mask = scatter_bits(self.dim - 1, positions);
        let mut data = vec![C64::new(0.0, 0.0); dim * dim];
        for c in 0..dim {
            let rest = c & !local_mask;
            let lc = gather_bits(c, positions);
            for lr in 0..self.dim {
                let r = rest | scatter_bits(lr, positions);
                data[r * dim + c] = self.data[lr * self.dim + lc];
            }
        }
        Matrix { dim, data }
    }
}

fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

fn base_matrix(gate: &Gate) -> Result<Matrix> {
    let p = &gate.params;
    let m = match gate.kind {
        GateKind::H => {
            let s = FRAC_1_SQRT_2;
            Matrix::from_rows(2, vec![c(s, 0.0), c(s, 0.0), c(s, 0.0), c(-s, 0.0)])
        }
        GateKind::X | GateKind::CX => Matrix::from_rows(2, vec![c(0.0, 0.0), c(1.0, 0.0), c(1.0, 0.0), c(0.0, 0.0)]),
        GateKind::U => {
            let (theta, phi, lambda) = (p[0], p[1], p[2]);
            let (s, co) = (theta / 2.0).sin_cos();
            Matrix::from_rows(
                2,
                vec![
                    c(co, 0.0),
                    -C64::from_polar(s, lambda),
                    C64::from_polar(s, phi),
                    C64::from_polar(co, phi + lambda),
                ],
            )
        }
        GateKind::RX => {
            let (s, co) = (p[0] / 2.0).sin_cos();
            Matrix::from_rows(2, vec![c(co, 0.0), c(0.0, -s), c(0.0, -s), c(co, 0.0)])
        }
        GateKind::RY => {
            let (s, co) = (p[0] / 2.0).sin_cos();
            Matrix::from_rows(2, vec![c(co, 0.0), c(-s, 0.0), c(s, 0.0), c(co, 0.0)])
        }
        GateKind::Swap => {
            let mut m = Matrix::identity(4);
            m.data[5] = c(0.0, 0.0);
            m.data[10] = c(0.0, 0.0);
            m.data[6] = c(1.0, 0.0);
            m.data[9] = c(1.0, 0.0);
            m
        }
        GateKind::RZ | GateKind::RZZ | GateKind::CP | GateKind::Diag(_) => {
            return Ok(Matrix::from_diagonal(&gate_diagonal(gate).expect("diagonal kind")));
        }
        GateKind::Unitary(k) => match &gate.payload {
            Some(Payload::Matrix(m)) => Matrix::from_rows(1 << k, m.clone()),
            _ => return Err(Error::UnsupportedGate(format!("{} without matrix payload", gate.kind))),
        },
    };
    Ok(m)
}

/// Full unitary of `gate` over [`Gate::qubits`], including control semantics.
pub fn gate_matrix(gate: &Gate) -> Result<Matrix> {
    let base = base_matrix(gate)?;
    if gate.kind != GateKind::CX {
        return Ok(base);
    }
    // Targets occupy the low local bits; identity unless every control bit is set.
    let nt = gate.targets.len();
    let dim = 1usize << gate.kind.arity();
    let ctrl = (dim - 1) & !((1usize << nt) - 1);
    let mut m = Matrix::identity(dim);
    for r in 0..dim {
        for col in 0..dim {
            if r & ctrl == ctrl && col & ctrl == ctrl {
                m.data[r * dim + col] = base.get(r & ((1 << nt) - 1), col & ((1 << nt) - 1));
            }
        }
    }
    Ok(m)
}

/// Diagonal of `gate` over [`Gate::qubits`] when its matrix is diagonal.
pub fn gate_diagonal(gate: &Gate) -> Option<Vec<C64>> {
    let p = &gate.params;
    match gate.kind {
        GateKind::RZ => {
            let h = p[0] / 2.0;
            Some(vec![C64::from_polar(1.0, -h), C64::from_polar(1.0, h)])
        }
        GateKind::RZZ => {
            let (lo, hi) = (C64::from_polar(1.0, -p[0] / 2.0), C64::from_polar(1.0, p[0] / 2.0));
            Some(vec![lo, hi, hi, lo])
        }
        GateKind::CP => {
            let one = c(1.0, 0.0);
            Some(vec![one, one, one, C64::from_polar(1.0, p[0])])
        }
        GateKind::Diag(_) => match &gate.payload {
            Some(Payload::Diagonal(d)) => Some(d.clone()),
            _ => None,
        },
        _ => None,
    }
}

pub fn is_diagonal(gate: &Gate) -> bool {
    matches!(gate.kind, GateKind::RZ | GateKind::RZZ | GateKind::CP | GateKind::Diag(_))
}
