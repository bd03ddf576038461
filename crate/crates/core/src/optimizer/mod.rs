//! All-in-one optimization: gate blocking at the rank and cache level, qubit
//! swap insertion, and diagonal and general gate fusion.
//!
//! Blocking is greedy. At each step [`find_max_gate`] picks the logical qubits
//! that let the dependency [`Frontier`] absorb the most gates, the swaps needed
//! to bring them into the chunk are emitted, and the absorbable gates form the
//! next block.

mod blocks;
mod frontier;
mod fusion;
mod swaps;

pub use blocks::{find_max_gate, pad, qubit_list};
pub use frontier::Frontier;
pub use fusion::{fuse_diagonal, fuse_general, merge_dense, merge_diagonals};
pub use swaps::{cross_rank_transition, in_memory_transition, insert_qubit_swaps};

use frontier::bits;

use crate::circuit::{Circuit, Config, GateBlock, Program, ProgramItem, QubitLayout};
use crate::error::{Error, Result};
use crate::gates::Gate;

fn low_mask(layout: &QubitLayout, width: usize) -> u64 {
    (0..width).fold(0u64, |m, p| m | 1 << layout.logical(p))
}

struct Blocker<'a> {
    config: &'a Config,
    layout: QubitLayout,
    items: Vec<ProgramItem>,
}

impl Blocker<'_> {
    fn emit_block(&mut self, gates: &[Gate], indices: &[usize]) {
        if indices.is_empty() {
            return;
        }
        let layout = &self.layout;
        let block = indices.iter().map(|&i| gates[i].remap(|q| layout.phys(q))).collect();
        self.items.push(ProgramItem::Block(GateBlock::new(block)));
    }

    /// Cache-level blocking of `gates`; qubits of `core` held in rank bits are
    /// fetched before the first swap.
    fn cache_level(&mut self, gates: &[Gate], core: u64) {
        let n = self.layout.len();
        let chunk = self.config.chunk_qubits;
        let mut frontier = Frontier::new(gates, n);
        let first = frontier.absorb(low_mask(&self.layout, chunk));
        self.emit_block(gates, &first);
        let mut fetch = self.config.rank_qubits > 0;
        while !frontier.is_empty() {
            let set = find_max_gate(&frontier, &self.layout, chunk);
            let mut target = pad(set, &self.layout, chunk);
            if fetch {
                let ops = cross_rank_transition(&mut self.layout, target, core, self.config);
                self.items.extend(ops.into_iter().map(ProgramItem::Swap));
                if bits(target).any(|q| self.layout.phys(q) >= self.config.local_qubits()) {
                    target = pad(set, &self.layout, chunk);
                }
                fetch = false;
            }
            let ops = in_memory_transition(&mut self.layout, target, chunk, self.config.ims_enabled);
            self.items.extend(ops.into_iter().map(ProgramItem::Swap));
            let absorbed = frontier.absorb(target);
            debug_assert!(!absorbed.is_empty());
            self.emit_block(gates, &absorbed);
        }
    }

    /// Rank-level blocking: each block holds gates that fit in the rank-local
    /// region; its cache-level pass performs the cross-rank fetch.
    fn device_level(&mut self, gates: &[Gate]) {
        let n = self.layout.len();
        let local = self.config.local_qubits();
        let mut frontier = Frontier::new(gates, n);
        let mut absorbed = frontier.absorb(low_mask(&self.layout, local));
        loop {
            let block: Vec<Gate> = absorbed.iter().map(|&i| gates[i].clone()).collect();
            let core = block.iter().fold(0u64, |m, g| m | g.dep_mask());
            self.cache_level(&block, core);
            if frontier.is_empty() {
                break;
            }
            let target = pad(find_max_gate(&frontier, &self.layout, local), &self.layout, local);
            absorbed = frontier.absorb(target);
        }
    }
}

fn check_inputs(circuit: &Circuit, config: &Config) -> Result<()> {
    config.validate()?;
    circuit.validate()?;
    if circuit.n_qubits > config.n_qubits {
        return Err(Error::Config(format!(
            "circuit has {} qubits but the configuration allows {}",
            circuit.n_qubits, config.n_qubits
        )));
    }
    if let Some(g) = circuit.gates.iter().find(|g| g.dep_mask().count_ones() as usize > config.chunk_qubits) {
        return Err(Error::InfeasibleBlock(format!(
            "gate {} spans {} qubits, more than the {}-qubit chunk",
            g.id,
            g.dep_mask().count_ones(),
            config.chunk_qubits
        )));
    }
    Ok(())
}

/// Single-level blocking of `gates` with chunks of `config.chunk_qubits`,
/// starting from `layout`. Returns the blocks and swaps in order and the layout
/// after the last swap.
pub fn find_gbs(gates: &[Gate], layout: QubitLayout, config: &Config) -> Result<(Vec<ProgramItem>, QubitLayout)> {
    let core = gates.iter().fold(0u64, |m, g| m | g.dep_mask());
    let mut blocker = Blocker { config, layout, items: Vec::new() };
    blocker.cache_level(gates, core);
    Ok((blocker.items, blocker.layout))
}

/// Runs the full pipeline: optional diagonal fusion, rank-level and cache-level
/// blocking with swap insertion, then optional general fusion inside blocks.
pub fn aio_optimize(circuit: &Circuit, config: &Config) -> Result<Program> {
    check_inputs(circuit, config)?;
    let n = config.n_qubits;
    let local = config.local_qubits();
    let gates = if config.diagonal_fusion_enabled {
        let pinned = if config.rank_qubits > 0 { !0u64 << local } else { 0 };
        fuse_diagonal(&circuit.gates, config.chunk_qubits, pinned)?
    } else {
        circuit.gates.clone()
    };

    let mut blocker = Blocker { config, layout: QubitLayout::identity(n), items: Vec::new() };
    if config.rank_qubits == 0 {
        blocker.cache_level(&gates, 0);
    } else {
        blocker.device_level(&gates);
    }

    let mut items = blocker.items;
    if config.fusion_enabled && config.fusion_qubits > 0 {
        for item in &mut items {
            if let ProgramItem::Block(b) = item {
                *b = fuse_general(b, config.fusion_qubits)?;
            }
        }
    }
    let program = Program {
        n_qubits: n,
        rank_qubits: config.rank_qubits,
        chunk_qubits: config.chunk_qubits,
        items,
        final_layout: blocker.layout,
    };
    debug_assert!(program.validate().is_ok());
    Ok(program)
}
