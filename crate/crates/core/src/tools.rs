//! Reference simulation, program validation, fidelity and circuit generators.

use std::collections::HashMap;
use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::circuit::{Circuit, Program, ProgramItem, QubitLayout};
use crate::engine::StateVector;
use crate::error::{Error, Result};
use crate::gates::{gate_matrix, gather_bits, is_diagonal, scatter_bits, Gate, GateKind, Matrix};
use crate::C64;

/// Largest circuit the dense reference simulator accepts.
pub const ORACLE_MAX_QUBITS: usize = 20;

const PARAM_TOL: f64 = 1e-12;
const PAYLOAD_TOL: f64 = 1e-9;

/// Reference simulator: applies each gate's full local matrix to every amplitude
/// group it touches, in circuit order.
pub fn oracle_simulate(circuit: &Circuit, initial: usize) -> Result<StateVector> {
    if circuit.n_qubits > ORACLE_MAX_QUBITS {
        return Err(Error::StateSize(circuit.n_qubits));
    }
    circuit.validate()?;
    let mut state = StateVector::basis(circuit.n_qubits, initial)?;
    for g in &circuit.gates {
        apply_dense(&mut state.amps, g)?;
    }
    Ok(state)
}

fn apply_dense(amps: &mut [C64], gate: &Gate) -> Result<()> {
    let m = gate_matrix(gate)?;
    let qubits = gate.qubits();
    let dim = 1usize << qubits.len();
    let mask = scatter_bits(dim - 1, &qubits);
    let mut local = vec![C64::new(0.0, 0.0); dim];
    for base in (0..amps.len()).filter(|i| i & mask == 0) {
        for (k, slot) in local.iter_mut().enumerate() {
            *slot = amps[base | scatter_bits(k, &qubits)];
        }
        for r in 0..dim {
            amps[base | scatter_bits(r, &qubits)] = (0..dim).map(|c| m.get(r, c) * local[c]).sum();
        }
    }
    Ok(())
}

/// Moves the amplitude at physical index `i` to the logical index whose bit
/// `phys_to_log[p]` is bit `p` of `i`.
pub fn layout_apply(state: &StateVector, layout: &QubitLayout) -> StateVector {
    let to_log = layout.phys_to_log();
    let mut amps = vec![C64::new(0.0, 0.0); state.amps.len()];
    for (i, a) in state.amps.iter().enumerate() {
        amps[scatter_bits(i, to_log)] = *a;
    }
    StateVector { n: state.n, amps }
}

/// `|<u|v>|^2`.
pub fn fidelity(u: &StateVector, v: &StateVector) -> Result<f64> {
    if u.amps.len() != v.amps.len() {
        return Err(Error::LengthMismatch(u.amps.len(), v.amps.len()));
    }
    let overlap: C64 = u.amps.iter().zip(&v.amps).map(|(a, b)| a.conj() * b).sum();
    Ok(overlap.norm_sqr())
}

/// Outcome of [`validate_order`].
#[derive(Debug, Clone, PartialEq)]
pub struct ValidationReport {
    pub pass: bool,
    /// Gate id and logical qubit where the program first departs from the raw circuit.
    pub first_divergence: Option<(u64, usize)>,
    pub message: String,
}

impl ValidationReport {
    fn ok() -> ValidationReport {
        ValidationReport { pass: true, first_divergence: None, message: "Passed all circuit order validations".into() }
    }

    fn fail(at: Option<(u64, usize)>, message: String) -> ValidationReport {
        ValidationReport { pass: false, first_divergence: at, message }
    }
}

fn same_gate(raw: &Gate, restored: &Gate) -> bool {
    let mut a = raw.targets.clone();
    let mut b = restored.targets.clone();
    if raw.kind.symmetric_targets() {
        a.sort_unstable();
        b.sort_unstable();
    }
    raw.kind == restored.kind
        && a == b
        && raw.controls == restored.controls
        && raw.params.len() == restored.params.len()
        && raw.params.iter().zip(&restored.params).all(|(x, y)| (x - y).abs() <= PARAM_TOL)
}

fn payload_matches(fused: &Gate, parts: &[&Gate]) -> Result<bool> {
    let onto = &fused.targets;
    if parts.iter().any(|g| g.dep_mask() & !fused.dep_mask() != 0) {
        return Ok(false);
    }
    if let GateKind::Diag(_) = fused.kind {
        if !parts.iter().all(|g| is_diagonal(g)) {
            return Ok(false);
        }
        let mut want = vec![C64::new(1.0, 0.0); 1 << onto.len()];
        for g in parts {
            for (w, d) in want.iter_mut().zip(g.expand_diagonal_to(onto)?.expect("diagonal gate")) {
                *w *= d;
            }
        }
        let have = fused.expand_diagonal_to(onto)?.expect("diagonal gate");
        return Ok(want.iter().zip(&have).all(|(a, b)| (a - b).norm() <= PAYLOAD_TOL));
    }
    let want = parts.iter().try_fold(Matrix::identity(1 << onto.len()), |acc, g| Ok::<_, Error>(g.expand_to(onto)?.mul(&acc)))?;
    Ok(gate_matrix(fused)?.max_abs_diff(&want) <= PAYLOAD_TOL)
}

/// Per-qubit sequence of raw positions, with every run of gates acting
/// diagonally on the qubit sorted, since such gates commute on it.
fn canonical_sequences(entries: impl Iterator<Item = usize>, raw: &[Gate], n: usize) -> Vec<Vec<usize>> {
    let mut seqs: Vec<Vec<usize>> = vec![Vec::new(); n];
    for pos in entries {
        for q in raw[pos].qubits() {
            seqs[q].push(pos);
        }
    }
    for (q, seq) in seqs.iter_mut().enumerate() {
        let mut start = 0;
        while start < seq.len() {
            if !raw[seq[start]].acts_diagonally_on(q) {
                start += 1;
                continue;
            }
            let mut end = start;
            while end < seq.len() && raw[seq[end]].acts_diagonally_on(q) {
                end += 1;
            }
            seq[start..end].sort_unstable();
            start = end;
        }
    }
    seqs
}

/// Restores each block gate to logical qubits by replaying the program's swaps
/// and checks it against `raw`: every raw gate appears exactly once (fused gates
/// through their constituents, whose product must match the payload) and each
/// qubit sees its gates in an order equivalent to the raw one.
pub fn validate_order(raw: &Circuit, program: &Program) -> ValidationReport {
    if let Err(e) = program.validate() {
        return ValidationReport::fail(None, format!("malformed program: {e}"));
    }
    if raw.n_qubits > program.n_qubits {
        return ValidationReport::fail(
            None,
            format!("raw circuit has {} qubits, program {}", raw.n_qubits, program.n_qubits),
        );
    }
    let position: HashMap<u64, usize> = raw.gates.iter().enumerate().map(|(i, g)| (g.id, i)).collect();
    let mut seen = vec![false; raw.gates.len()];
    let mut order: Vec<usize> = Vec::with_capacity(raw.gates.len());
    let mut layout = QubitLayout::identity(program.n_qubits);

    for item in &program.items {
        let block = match item {
            ProgramItem::Swap(op) => {
                layout.apply_swap(op);
                continue;
            }
            ProgramItem::Block(b) => b,
        };
        for g in &block.gates {
            let restored = g.remap(|p| layout.logical(p));
            let first_qubit = restored.qubits()[0];
            let mut parts = Vec::new();
            for id in restored.source_ids() {
                let Some(&pos) = position.get(&id) else {
                    return ValidationReport::fail(Some((id, first_qubit)), format!("gate {id} is not in the raw circuit"));
                };
                if std::mem::replace(&mut seen[pos], true) {
                    return ValidationReport::fail(Some((id, first_qubit)), format!("gate {id} appears more than once"));
                }
                parts.push(pos);
            }
            if restored.kind.is_fused() {
                parts.sort_unstable();
                let gates: Vec<&Gate> = parts.iter().map(|&p| &raw.gates[p]).collect();
                if !payload_matches(&restored, &gates).unwrap_or(false) {
                    return ValidationReport::fail(
                        Some((gates[0].id, first_qubit)),
                        format!("fused gate {} does not equal the product of its constituents", restored.id),
                    );
                }
            } else if !same_gate(&raw.gates[parts[0]], &restored) {
                return ValidationReport::fail(
                    Some((restored.id, first_qubit)),
                    format!("gate {} differs from the raw gate after restoring its qubits", restored.id),
                );
            }
            order.extend(parts);
        }
    }

    if let Some(pos) = seen.iter().position(|s| !s) {
        let g = &raw.gates[pos];
        return ValidationReport::fail(Some((g.id, g.qubits()[0])), format!("gate {} is missing from the program", g.id));
    }

    let n = raw.n_qubits;
    let want = canonical_sequences(0..raw.gates.len(), &raw.gates, n);
    let have = canonical_sequences(order.into_iter(), &raw.gates, n);
    let mut worst: Option<(usize, usize, usize)> = None;
    for q in 0..n {
        if let Some(k) = (0..want[q].len()).find(|&k| want[q][k] != have[q][k]) {
            let pos = want[q][k].min(have[q][k]);
            if worst.is_none_or(|(p, _, _)| pos < p) {
                worst = Some((pos, q, have[q][k]));
            }
        }
    }
    match worst {
        None => ValidationReport::ok(),
        Some((_, q, pos)) => {
            let id = raw.gates[pos].id;
            ValidationReport::fail(Some((id, q)), format!("gate {id} is out of order on qubit {q}"))
        }
    }
}

/// Quantum Fourier transform without the final qubit reversal: for each qubit
/// `j`, `H(j)` followed by `CP(k -> j, pi / 2^(k - j))` for every `k > j`.
pub fn gen_qft(n: usize) -> Circuit {
    let mut gates = Vec::with_capacity(n * (n + 1) / 2);
    for j in 0..n {
        gates.push(Gate::h(j, gates.len() as u64));
        for k in j + 1..n {
            let theta = PI / (1u64 << (k - j).min(63)) as f64;
            gates.push(Gate::cp(k, j, theta, gates.len() as u64).expect("distinct qubits"));
        }
    }
    Circuit { n_qubits: n, gates }
}

/// Fully connected QAOA: `H` on every qubit, then `p` layers of `RZZ` on every
/// pair and `RX` on every qubit. Each layer draws its cost and mixer angles
/// uniformly from `[0, 2pi)`.
pub fn gen_qaoa(n: usize, p: usize, seed: u64) -> Circuit {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut gates: Vec<Gate> = (0..n).map(|q| Gate::h(q, q as u64)).collect();
    for _ in 0..p {
        let gamma = rng.random_range(0.0..2.0 * PI);
        let beta = rng.random_range(0.0..2.0 * PI);
        for a in 0..n {
            for b in a + 1..n {
                gates.push(Gate::rzz(a, b, gamma, gates.len() as u64).expect("distinct qubits"));
            }
        }
        for q in 0..n {
            gates.push(Gate::rx(q, beta, gates.len() as u64));
        }
    }
    Circuit { n_qubits: n, gates }
}

/// Bernstein-Vazirani with phase kickback. Qubit `n - 1` is the ancilla;
/// `secret[i]` is the hidden bit for data qubit `i`.
pub fn gen_bv(n: usize, secret: &[bool]) -> Result<Circuit> {
    if n < 2 || secret.len() != n - 1 {
        return Err(Error::Contract(format!("secret of {} bits does not fit {n} qubits", secret.len())));
    }
    let anc = n - 1;
    let mut gates = vec![Gate::x(anc, 0)];
    for q in 0..n {
        gates.push(Gate::h(q, gates.len() as u64));
    }
    for (q, _) in secret.iter().enumerate().filter(|(_, &bit)| bit) {
        gates.push(Gate::cx(q, anc, gates.len() as u64)?);
    }
    for q in 0..anc {
        gates.push(Gate::h(q, gates.len() as u64));
    }
    Ok(Circuit { n_qubits: n, gates })
}

/// Parses a secret given as a string of `0` and `1`, bit `i` first.
pub fn parse_secret(text: &str) -> Result<Vec<bool>> {
    text.chars()
        .map(|c| match c {
            '0' => Ok(false),
            '1' => Ok(true),
            _ => Err(Error::Contract(format!("secret {text:?} must contain only 0 and 1"))),
        })
        .collect()
}

fn params_for(kind: GateKind, seed: f64) -> Vec<f64> {
    (0..kind.num_params()).map(|k| seed + 0.25 * k as f64).collect()
}

/// One gate of `kind` per qubit, or per adjacent pair `(2i, 2i + 1)` for
/// two-qubit kinds, with fixed angles.
pub fn gen_gate_bench(kind: GateKind, n: usize) -> Result<Circuit> {
    if kind.is_fused() {
        return Err(Error::UnsupportedGate(format!("{kind} cannot be generated")));
    }
    let mut gates = Vec::new();
    if kind.arity() == 1 {
        for q in 0..n {
            let params = params_for(kind, 0.1 * (q + 1) as f64);
            gates.push(Gate::new(kind, vec![q], vec![], params, q as u64)?);
        }
    } else {
        for i in 0..n / 2 {
            let (a, b) = (2 * i, 2 * i + 1);
            let params = params_for(kind, 0.1 * (i + 1) as f64);
            let gate = match kind.num_controls() {
                0 => Gate::new(kind, vec![a, b], vec![], params, i as u64)?,
                _ => Gate::new(kind, vec![b], vec![a], params, i as u64)?,
            };
            gates.push(gate);
        }
    }
    Ok(Circuit { n_qubits: n, gates })
}

/// Seeded random circuit over every non-fused kind with uniform angles.
pub fn gen_random(n: usize, count: usize, seed: u64) -> Result<Circuit> {
    if n == 0 {
        return Err(Error::Contract("random circuit needs at least one qubit".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let kinds: Vec<GateKind> = GateKind::STANDARD.iter().copied().filter(|k| k.arity() <= n).collect();
    let mut gates = Vec::with_capacity(count);
    for id in 0..count as u64 {
        let kind = kinds[rng.random_range(0..kinds.len())];
        let mut qubits: Vec<usize> = Vec::with_capacity(kind.arity());
        while qubits.len() < kind.arity() {
            let q = rng.random_range(0..n);
            if !qubits.contains(&q) {
                qubits.push(q);
            }
        }
        let params: Vec<f64> = (0..kind.num_params()).map(|_| rng.random_range(0.0..2.0 * PI)).collect();
        let controls = qubits.split_off(kind.num_targets());
        gates.push(Gate::new(kind, qubits, controls, params, id)?);
    }
    Ok(Circuit { n_qubits: n, gates })
}

/// Probability of each basis state restricted to the qubits in `qubits`.
pub fn marginal(state: &StateVector, qubits: &[usize]) -> Vec<f64> {
    let mut out = vec![0.0; 1 << qubits.len()];
    for (i, a) in state.amps.iter().enumerate() {
        out[gather_bits(i, qubits)] += a.norm_sqr();
    }
    out
}
