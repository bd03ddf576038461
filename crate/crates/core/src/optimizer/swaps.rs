use super::frontier::bits;
use crate::circuit::{Config, QubitLayout, SwapKind, SwapOp};
use crate::error::{Error, Result};

/// Emits `pairs` as one batched op, or one op per pair when batching is off.
fn emit(kind: SwapKind, pairs: Vec<(usize, usize)>, batched: bool, layout: &mut QubitLayout, out: &mut Vec<SwapOp>) {
    if pairs.is_empty() {
        return;
    }
    let ops = if batched {
        vec![SwapOp::new(kind, pairs)]
    } else {
        pairs.into_iter().map(|p| SwapOp::new(kind, vec![p])).collect()
    };
    for op in ops {
        layout.apply_swap(&op);
        out.push(op);
    }
}

/// Brings every qubit of `target` into positions `[0, chunk)`.
///
/// Chunk positions whose residents are not wanted are paired, in ascending
/// order, with the ascending positions of the wanted qubits outside the chunk.
/// All wanted qubits must already sit in the rank-local region.
pub fn in_memory_transition(layout: &mut QubitLayout, target: u64, chunk: usize, batched: bool) -> Vec<SwapOp> {
    let evictees: Vec<usize> = (0..chunk).filter(|&p| target >> layout.logical(p) & 1 == 0).collect();
    let mut incoming: Vec<usize> = bits(target).map(|q| layout.phys(q)).filter(|&p| p >= chunk).collect();
    incoming.sort_unstable();
    debug_assert_eq!(evictees.len(), incoming.len());
    let mut out = Vec::new();
    emit(SwapKind::InMemory, evictees.into_iter().zip(incoming).collect(), batched, layout, &mut out);
    out
}

/// Moves the rank-resident qubits of `core` into the rank-local region.
///
/// Each incoming qubit replaces a victim that `core` does not need: first chunk
/// slots whose residents are outside `target`, then rank-local positions from the
/// top down, then chunk slots holding the rest of `target`. Victims are staged onto the top positions of the local region,
/// exchanged across ranks, and the staging is undone, at most `batch` pairs per
/// cross-rank exchange.
pub fn cross_rank_transition(layout: &mut QubitLayout, target: u64, core: u64, config: &Config) -> Vec<SwapOp> {
    let local = config.local_qubits();
    let chunk = config.chunk_qubits;
    let rank_resident = |q: usize| layout.phys(q) >= local;
    let (mut wanted, mut later): (Vec<usize>, Vec<usize>) =
        bits(core).filter(|&q| rank_resident(q)).partition(|&q| target >> q & 1 == 1);
    if wanted.is_empty() && later.is_empty() {
        return Vec::new();
    }
    wanted.sort_by_key(|&q| layout.phys(q));
    later.sort_by_key(|&q| layout.phys(q));
    wanted.extend(later);
    let incoming = wanted;

    let free = |p: usize| core >> layout.logical(p) & 1 == 0;
    let mut victims: Vec<usize> =
        (0..chunk).filter(|&p| free(p) && target >> layout.logical(p) & 1 == 0).collect();
    victims.extend((chunk..local).rev().filter(|&p| free(p)));
    victims.extend((0..chunk).filter(|&p| free(p) && target >> layout.logical(p) & 1 == 1));
    victims.truncate(incoming.len());
    debug_assert_eq!(victims.len(), incoming.len());

    let batch = if config.xrs_enabled { config.buffer_qubits.max(1) } else { 1 };
    let mut out = Vec::new();
    for (qs, vs) in incoming.chunks(batch).zip(victims.chunks(batch)) {
        let s = qs.len();
        let top: Vec<usize> = (local - s..local).collect();
        let mut from: Vec<usize> = vs.iter().copied().filter(|v| !top.contains(v)).collect();
        from.sort_unstable();
        let to: Vec<usize> = top.iter().copied().filter(|t| !vs.contains(t)).collect();
        let staging: Vec<(usize, usize)> = from.iter().copied().zip(to.iter().copied()).collect();
        let staged = |v: usize| staging.iter().find(|(a, _)| *a == v).map_or(v, |&(_, b)| b);
        let mut exchange: Vec<(usize, usize)> =
            qs.iter().zip(vs).map(|(&q, &v)| (staged(v), layout.phys(q))).collect();
        exchange.sort_unstable();
        emit(SwapKind::InMemory, staging.clone(), config.ims_enabled, layout, &mut out);
        emit(SwapKind::CrossRank, exchange, true, layout, &mut out);
        emit(SwapKind::InMemory, staging, config.ims_enabled, layout, &mut out);
    }
    out
}

/// Swaps that place the logical qubits `chunk_set` at physical positions
/// `[0, C)`, staging through the top local positions for qubits held in rank bits.
pub fn insert_qubit_swaps(chunk_set: &[usize], layout: &mut QubitLayout, config: &Config) -> Result<Vec<SwapOp>> {
    let target = chunk_set.iter().fold(0u64, |m, &q| m | 1 << q);
    if chunk_set.len() != config.chunk_qubits || target.count_ones() as usize != chunk_set.len() {
        return Err(Error::Contract(format!(
            "chunk set {chunk_set:?} must hold {} distinct qubits",
            config.chunk_qubits
        )));
    }
    if chunk_set.iter().any(|&q| q >= layout.len()) {
        return Err(Error::Contract(format!("chunk set {chunk_set:?} exceeds the layout")));
    }
    let mut ops = cross_rank_transition(layout, target, target, config);
    ops.extend(in_memory_transition(layout, target, config.chunk_qubits, config.ims_enabled));
    Ok(ops)
}
