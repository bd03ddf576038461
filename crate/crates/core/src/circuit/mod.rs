//! Circuit and program data model.

mod config;
mod text;

pub use config::{parse_config, Config};
pub use text::{
    fmt_f64, parse_program, parse_raw_circuit, serialize_circuit, serialize_gate, serialize_program,
};

use std::collections::HashSet;

use crate::error::{Error, Result};
use crate::gates::Gate;

/// Largest qubit count the optimizer and layouts handle (qubit sets are `u64` masks).
pub const MAX_QUBITS: usize = 63;

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Circuit {
    pub n_qubits: usize,
    pub gates: Vec<Gate>,
}

impl Circuit {
    pub fn new(n_qubits: usize, gates: Vec<Gate>) -> Result<Circuit> {
        let c = Circuit { n_qubits, gates };
        c.validate()?;
        Ok(c)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_qubits > MAX_QUBITS {
            return Err(Error::Contract(format!("{} qubits exceeds the limit of {MAX_QUBITS}", self.n_qubits)));
        }
        let mut ids = HashSet::with_capacity(self.gates.len());
        for g in &self.gates {
            g.check()?;
            if g.max_qubit() >= self.n_qubits {
                return Err(Error::Contract(format!(
                    "gate {} touches qubit {} of a {}-qubit circuit",
                    g.id,
                    g.max_qubit(),
                    self.n_qubits
                )));
            }
            for id in g.source_ids() {
                if !ids.insert(id) {
                    return Err(Error::Contract(format!("duplicate gate id {id}")));
                }
            }
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.gates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.gates.is_empty()
    }
}

/// Bidirectional map between logical qubits and physical bit positions.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct QubitLayout {
    log_to_phys: Vec<usize>,
    phys_to_log: Vec<usize>,
}

impl QubitLayout {
    pub fn identity(n: usize) -> QubitLayout {
        QubitLayout { log_to_phys: (0..n).collect(), phys_to_log: (0..n).collect() }
    }

    /// Builds a layout from `phys_to_log`; fails unless it is a permutation.
    pub fn from_phys_to_log(phys_to_log: Vec<usize>) -> Result<QubitLayout> {
        let n = phys_to_log.len();
        let mut log_to_phys = vec![usize::MAX; n];
        for (p, &l) in phys_to_log.iter().enumerate() {
            if l >= n || log_to_phys[l] != usize::MAX {
                return Err(Error::Contract(format!("not a permutation: {phys_to_log:?}")));
            }
            log_to_phys[l] = p;
        }
        Ok(QubitLayout { log_to_phys, phys_to_log })
    }

    pub fn len(&self) -> usize {
        self.phys_to_log.len()
    }

    pub fn is_empty(&self) -> bool {
        self.phys_to_log.is_empty()
    }

    pub fn phys(&self, logical: usize) -> usize {
        self.log_to_phys[logical]
    }

    pub fn logical(&self, phys: usize) -> usize {
        self.phys_to_log[phys]
    }

    pub fn log_to_phys(&self) -> &[usize] {
        &self.log_to_phys
    }

    pub fn phys_to_log(&self) -> &[usize] {
        &self.phys_to_log
    }

    /// Exchanges the residents of two physical positions.
    pub fn swap_phys(&mut self, a: usize, b: usize) {
        let (la, lb) = (self.phys_to_log[a], self.phys_to_log[b]);
        self.phys_to_log.swap(a, b);
        self.log_to_phys[la] = b;
        self.log_to_phys[lb] = a;
    }

    pub fn apply_swap(&mut self, op: &SwapOp) {
        for &(a, b) in &op.pairs {
            self.swap_phys(a, b);
        }
    }

    pub fn inverse(&self) -> QubitLayout {
        QubitLayout { log_to_phys: self.phys_to_log.clone(), phys_to_log: self.log_to_phys.clone() }
    }

    pub fn is_valid(&self) -> bool {
        self.phys_to_log.len() == self.log_to_phys.len()
            && self.phys_to_log.iter().enumerate().all(|(p, &l)| l < self.len() && self.log_to_phys[l] == p)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SwapKind {
    InMemory,
    CrossRank,
}

impl SwapKind {
    pub fn keyword(self) -> &'static str {
        match self {
            SwapKind::InMemory => "SQS",
            SwapKind::CrossRank => "CSQS",
        }
    }
}

/// A batch of physical qubit swaps executed in one pass.
///
/// Each pair is `(out, in)`: for a cross-rank swap `out` is an in-rank position
/// and `in` a rank-index position.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SwapOp {
    pub kind: SwapKind,
    pub pairs: Vec<(usize, usize)>,
}

impl SwapOp {
    pub fn new(kind: SwapKind, pairs: Vec<(usize, usize)>) -> SwapOp {
        SwapOp { kind, pairs }
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    /// Checks distinctness and region placement for a state of `n` qubits
    /// whose top `rank_qubits` bits index ranks.
    pub fn validate(&self, n: usize, rank_qubits: usize) -> Result<()> {
        let local = n - rank_qubits;
        let mut seen = HashSet::new();
        for &(a, b) in &self.pairs {
            for p in [a, b] {
                if p >= n {
                    return Err(Error::Contract(format!("swap position {p} out of range for {n} qubits")));
                }
                if !seen.insert(p) {
                    return Err(Error::Contract(format!("swap position {p} appears twice")));
                }
            }
            match self.kind {
                SwapKind::InMemory if a >= local || b >= local => {
                    return Err(Error::Contract(format!("in-memory swap ({a},{b}) leaves the rank-local region")));
                }
                SwapKind::CrossRank if a >= local || b < local => {
                    return Err(Error::Contract(format!(
                        "cross-rank swap ({a},{b}) must pair an in-rank position with a rank position"
                    )));
                }
                _ => {}
            }
        }
        Ok(())
    }
}

/// Gates whose physical qubits all fit inside one chunk.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct GateBlock {
    pub gates: Vec<Gate>,
}

impl GateBlock {
    pub fn new(gates: Vec<Gate>) -> GateBlock {
        GateBlock { gates }
    }

    pub fn qubit_mask(&self) -> u64 {
        self.gates.iter().fold(0, |m, g| m | g.dep_mask())
    }

    pub fn fits_chunk(&self, chunk_qubits: usize) -> bool {
        chunk_qubits >= 64 || self.qubit_mask() >> chunk_qubits == 0
    }

    pub fn len(&self) -> usize {
        self.gates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.gates.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum ProgramItem {
    Block(GateBlock),
    Swap(SwapOp),
}

/// Optimizer output: blocks and swaps in execution order.
#[derive(Debug, Clone, PartialEq)]
pub struct Program {
    pub n_qubits: usize,
    pub rank_qubits: usize,
    pub chunk_qubits: usize,
    pub items: Vec<ProgramItem>,
    pub final_layout: QubitLayout,
}

impl Program {
    pub fn empty(n_qubits: usize, rank_qubits: usize, chunk_qubits: usize) -> Program {
        Program { n_qubits, rank_qubits, chunk_qubits, items: Vec::new(), final_layout: QubitLayout::identity(n_qubits) }
    }

    pub fn blocks(&self) -> impl Iterator<Item = &GateBlock> {
        self.items.iter().filter_map(|i| match i {
            ProgramItem::Block(b) => Some(b),
            ProgramItem::Swap(_) => None,
        })
    }

    pub fn swaps(&self) -> impl Iterator<Item = &SwapOp> {
        self.items.iter().filter_map(|i| match i {
            ProgramItem::Swap(s) => Some(s),
            ProgramItem::Block(_) => None,
        })
    }

    pub fn block_count(&self) -> usize {
        self.blocks().count()
    }

    pub fn swap_count(&self, kind: SwapKind) -> usize {
        self.swaps().filter(|s| s.kind == kind).count()
    }

    pub fn gate_count(&self) -> usize {
        self.blocks().map(GateBlock::len).sum()
    }

    /// Folds every swap over the identity layout.
    pub fn replay_layout(&self) -> QubitLayout {
        let mut layout = QubitLayout::identity(self.n_qubits);
        for op in self.swaps() {
            layout.apply_swap(op);
        }
        layout
    }

    /// Checks block containment, id uniqueness, swap placement and the final layout.
    pub fn validate(&self) -> Result<()> {
        if self.n_qubits > 0 && self.rank_qubits >= self.n_qubits {
            return Err(Error::Contract(format!("{} rank qubits leave no local qubits", self.rank_qubits)));
        }
        let mut ids = HashSet::new();
        for item in &self.items {
            match item {
                ProgramItem::Block(b) => {
                    if !b.fits_chunk(self.chunk_qubits) {
                        return Err(Error::Contract(format!(
                            "block touches qubits outside the {}-qubit chunk",
                            self.chunk_qubits
                        )));
                    }
                    for g in &b.gates {
                        g.check()?;
                        for id in g.source_ids() {
                            if !ids.insert(id) {
                                return Err(Error::Contract(format!("gate id {id} appears in two places")));
                            }
                        }
                    }
                }
                ProgramItem::Swap(s) => s.validate(self.n_qubits, self.rank_qubits)?,
            }
        }
        let replayed = self.replay_layout();
        if replayed != self.final_layout || !replayed.is_valid() {
            return Err(Error::Contract("final layout does not match the swap sequence".into()));
        }
        Ok(())
    }
}
