//! Single-array execution of programs: chunked gate blocks and in-memory swaps.

use rayon::prelude::*;
use rayon::ThreadPool;
use std::sync::Arc;

use crate::circuit::{Circuit, Config, GateBlock, Program, ProgramItem, QubitLayout, SwapKind, SwapOp};
use crate::error::{Error, Result};
use crate::gates::{gate_diagonal, gate_matrix, scatter_bits, Gate, Matrix};
use crate::C64;

/// Largest state the engine will allocate.
pub const MAX_STATE_QUBITS: usize = 40;

const ZERO: C64 = C64::new(0.0, 0.0);

/// Swap positions up to which in-memory swaps use a per-group offset table.
const TABLE_SWAP_POSITIONS: usize = 16;

#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    pub n: usize,
    pub amps: Vec<C64>,
}

impl StateVector {
    /// Basis state `|index>` on `n` qubits.
    pub fn basis(n: usize, index: usize) -> Result<StateVector> {
        if n == 0 || n > MAX_STATE_QUBITS {
            return Err(Error::StateSize(n));
        }
        let len = 1usize << n;
        if index >= len {
            return Err(Error::Contract(format!("basis index {index} out of range for {n} qubits")));
        }
        let mut amps = Vec::new();
        amps.try_reserve_exact(len).map_err(|_| Error::StateSize(n))?;
        amps.resize(len, ZERO);
        amps[index] = C64::new(1.0, 0.0);
        Ok(StateVector { n, amps })
    }

    pub fn from_amplitudes(amps: Vec<C64>) -> Result<StateVector> {
        if amps.len() < 2 || !amps.len().is_power_of_two() {
            return Err(Error::Contract(format!("{} amplitudes is not a power of two", amps.len())));
        }
        Ok(StateVector { n: amps.len().trailing_zeros() as usize, amps })
    }

    pub fn len(&self) -> usize {
        self.amps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.amps.is_empty()
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amps.iter().map(C64::norm_sqr).sum()
    }
}

/// `|0...0>` on `n` qubits.
pub fn init_state(n: usize) -> Result<StateVector> {
    StateVector::basis(n, 0)
}

/// Exchanges bit `a` with bit `b` of `i` for every pair.
#[inline]
pub fn bitswap(i: usize, pairs: &[(usize, usize)]) -> usize {
    let mut out = i;
    for &(a, b) in pairs {
        if ((i >> a) ^ (i >> b)) & 1 == 1 {
            out ^= (1 << a) | (1 << b);
        }
    }
    out
}

/// Pairs that move the swap partners of cache-line bits next to the line.
///
/// For every pair with one side below `cl`, the other side's position is paired
/// with a staging position starting at `cl`, so threads that differ only in their
/// low `cl + c` bits cover whole cache lines on both sides of the swap.
pub fn bitshift_pairs(pairs: &[(usize, usize)], cl: usize) -> Vec<(usize, usize)> {
    let mut high = line_partners(pairs, cl);
    high.sort_unstable();
    let staging: Vec<usize> = (cl..cl + high.len()).collect();
    let from: Vec<usize> = staging.iter().copied().filter(|p| !high.contains(p)).collect();
    let to: Vec<usize> = high.iter().copied().filter(|p| !staging.contains(p)).collect();
    from.into_iter().zip(to).collect()
}

/// Positions at or above `cl` whose swap partner lies inside the cache line.
pub fn line_partners(pairs: &[(usize, usize)], cl: usize) -> Vec<usize> {
    pairs
        .iter()
        .filter_map(|&(a, b)| match (a < cl, b < cl) {
            (true, false) => Some(b),
            (false, true) => Some(a),
            _ => None,
        })
        .collect()
}

/// Maps a thread index to the first index of its swap pair.
#[inline]
pub fn bitshift(t: usize, shift_pairs: &[(usize, usize)]) -> usize {
    bitswap(t, shift_pairs)
}

/// Spreads the bits of `t` over the positions not in `sorted` (ascending), so
/// that `t` enumerates the indices whose bits at `sorted` are all zero.
#[inline]
fn insert_zeros(mut t: usize, sorted: &[usize]) -> usize {
    for &q in sorted {
        let low = t & ((1 << q) - 1);
        t = ((t >> q) << (q + 1)) | low;
    }
    t
}

/// Calls `f(base)` once per run of `1 << sorted[0]` consecutive indices whose
/// bits at `sorted` (ascending, nonempty) are all zero.
#[inline]
fn for_each_run(len: usize, sorted: &[usize], mut f: impl FnMut(usize)) {
    let low = sorted[0];
    for t in 0..len >> (sorted.len() + low) {
        f(insert_zeros(t << low, sorted));
    }
}

/// The disjoint runs `amps[i..i + run]` and `amps[j..j + run]`, `i + run <= j`.
#[inline]
fn run_pair(amps: &mut [C64], i: usize, j: usize, run: usize) -> (&mut [C64], &mut [C64]) {
    let (lo, hi) = amps.split_at_mut(j);
    (&mut lo[i..i + run], &mut hi[..run])
}

fn sorted_qubits(qubits: &[usize]) -> Vec<usize> {
    let mut sorted = qubits.to_vec();
    sorted.sort_unstable();
    sorted
}

/// Per-gate kernel compiled from a gate's matrix or diagonal.
#[derive(Debug, Clone)]
enum Kernel {
    /// Exchange of the target pair where all controls are set.
    Flip { target: usize, ctrl_mask: usize, sorted: Vec<usize> },
    Real { m: [f64; 4], target: usize, ctrl_mask: usize, sorted: Vec<usize> },
    Single { m: [C64; 4], target: usize, ctrl_mask: usize, sorted: Vec<usize> },
    Phase { target: usize, d: [C64; 2] },
    /// Diagonal entries other than one, as `(offset, value)`.
    Diag { entries: Vec<(usize, C64)>, sorted: Vec<usize> },
    /// Permutation matrix, as `(from, to)` offset cycles flattened into swaps.
    Swaps { swaps: Vec<(usize, usize)>, sorted: Vec<usize> },
    Dense { offsets: Vec<usize>, sorted: Vec<usize>, matrix: Matrix },
}

const ONE: C64 = C64::new(1.0, 0.0);

/// Transpositions realizing the permutation of a 0/1 matrix, or `None`.
fn permutation_swaps(m: &Matrix, offsets: &[usize]) -> Option<Vec<(usize, usize)>> {
    let dim = m.dim;
    let mut image = vec![usize::MAX; dim];
    for (c, slot) in image.iter_mut().enumerate() {
        for r in 0..dim {
            let x = m.get(r, c);
            if x == ONE {
                if *slot != usize::MAX {
                    return None;
                }
                *slot = r;
            } else if x != ZERO {
                return None;
            }
        }
    }
    if image.contains(&usize::MAX) {
        return None;
    }
    let mut seen = vec![false; dim];
    let mut swaps = Vec::new();
    for start in 0..dim {
        if seen[start] {
            continue;
        }
        let mut c = start;
        while !seen[c] {
            seen[c] = true;
            if image[c] != start {
                swaps.push((offsets[start], offsets[image[c]]));
            }
            c = image[c];
        }
    }
    Some(swaps)
}

impl Kernel {
    fn compile(gate: &Gate) -> Result<Kernel> {
        let qubits = gate.qubits();
        let sorted = sorted_qubits(&qubits);
        if let Some(diag) = gate_diagonal(gate) {
            if qubits.len() == 1 {
                return Ok(Kernel::Phase { target: qubits[0], d: [diag[0], diag[1]] });
            }
            let entries =
                diag.iter().enumerate().filter(|&(_, &d)| d != ONE).map(|(l, &d)| (scatter_bits(l, &qubits), d)).collect();
            return Ok(Kernel::Diag { entries, sorted });
        }
        let m = gate_matrix(gate)?;
        if gate.targets.len() == 1 {
            let base = ((1usize << gate.controls.len()) - 1) << 1;
            let m = [m.get(base, base), m.get(base, base + 1), m.get(base + 1, base), m.get(base + 1, base + 1)];
            let target = gate.targets[0];
            let ctrl_mask = gate.controls.iter().fold(0, |acc, &q| acc | (1 << q));
            if m == [ZERO, ONE, ONE, ZERO] {
                return Ok(Kernel::Flip { target, ctrl_mask, sorted });
            }
            if m.iter().all(|x| x.im == 0.0) {
                return Ok(Kernel::Real { m: m.map(|x| x.re), target, ctrl_mask, sorted });
            }
            return Ok(Kernel::Single { m, target, ctrl_mask, sorted });
        }
        let offsets: Vec<usize> = (0..m.dim).map(|l| scatter_bits(l, &qubits)).collect();
        if let Some(swaps) = permutation_swaps(&m, &offsets) {
            return Ok(Kernel::Swaps { swaps, sorted });
        }
        Ok(Kernel::Dense { offsets, sorted, matrix: m })
    }

    /// Applies the gate to `amps`, whose length is a power of two covering
    /// every qubit of the gate.
    fn apply(&self, amps: &mut [C64]) {
        match self {
            Kernel::Flip { target, ctrl_mask: 0, .. } => {
                let stride = 1usize << target;
                for pair in amps.chunks_exact_mut(stride << 1) {
                    let (lo, hi) = pair.split_at_mut(stride);
                    lo.swap_with_slice(hi);
                }
            }
            Kernel::Flip { target, ctrl_mask, sorted } => {
                let (stride, run) = (1usize << target, 1usize << sorted[0]);
                for_each_run(amps.len(), sorted, |base| {
                    let i = base | ctrl_mask;
                    let (lo, hi) = run_pair(amps, i, i | stride, run);
                    lo.swap_with_slice(hi);
                });
            }
            Kernel::Real { m, target, ctrl_mask: 0, .. } => {
                let stride = 1usize << target;
                for pair in amps.chunks_exact_mut(stride << 1) {
                    let (lo, hi) = pair.split_at_mut(stride);
                    for (a, b) in lo.iter_mut().zip(hi) {
                        let (x, y) = (*a, *b);
                        *a = x * m[0] + y * m[1];
                        *b = x * m[2] + y * m[3];
                    }
                }
            }
            Kernel::Real { m, target, ctrl_mask, sorted } => {
                let (stride, run) = (1usize << target, 1usize << sorted[0]);
                for_each_run(amps.len(), sorted, |base| {
                    let i = base | ctrl_mask;
                    let (lo, hi) = run_pair(amps, i, i | stride, run);
                    for (a, b) in lo.iter_mut().zip(hi) {
                        let (x, y) = (*a, *b);
                        *a = x * m[0] + y * m[1];
                        *b = x * m[2] + y * m[3];
                    }
                });
            }
            Kernel::Single { m, target, ctrl_mask: 0, .. } => {
                let stride = 1usize << target;
                for pair in amps.chunks_exact_mut(stride << 1) {
                    let (lo, hi) = pair.split_at_mut(stride);
                    for (a, b) in lo.iter_mut().zip(hi) {
                        let (x, y) = (*a, *b);
                        *a = m[0] * x + m[1] * y;
                        *b = m[2] * x + m[3] * y;
                    }
                }
            }
            Kernel::Single { m, target, ctrl_mask, sorted } => {
                let (stride, run) = (1usize << target, 1usize << sorted[0]);
                for_each_run(amps.len(), sorted, |base| {
                    let i = base | ctrl_mask;
                    let (lo, hi) = run_pair(amps, i, i | stride, run);
                    for (a, b) in lo.iter_mut().zip(hi) {
                        let (x, y) = (*a, *b);
                        *a = m[0] * x + m[1] * y;
                        *b = m[2] * x + m[3] * y;
                    }
                });
            }
            Kernel::Phase { target, d } => {
                let stride = 1usize << target;
                for pair in amps.chunks_exact_mut(stride << 1) {
                    let (lo, hi) = pair.split_at_mut(stride);
                    if d[0] != ONE {
                        lo.iter_mut().for_each(|a| *a *= d[0]);
                    }
                    if d[1] != ONE {
                        hi.iter_mut().for_each(|a| *a *= d[1]);
                    }
                }
            }
            Kernel::Diag { entries, sorted } => {
                if entries.is_empty() {
                    return;
                }
                let run = 1usize << sorted[0];
                for_each_run(amps.len(), sorted, |base| {
                    for &(off, d) in entries {
                        amps[base | off..][..run].iter_mut().for_each(|a| *a *= d);
                    }
                });
            }
            Kernel::Swaps { swaps, sorted } => {
                let run = 1usize << sorted[0];
                for_each_run(amps.len(), sorted, |base| {
                    for &(a, b) in swaps {
                        let (lo, hi) = run_pair(amps, base | a.min(b), base | a.max(b), run);
                        lo.swap_with_slice(hi);
                    }
                });
            }
            Kernel::Dense { offsets, sorted, matrix } => {
                let dim = offsets.len();
                let mut buf = vec![ZERO; dim];
                for t in 0..amps.len() >> sorted.len() {
                    let base = insert_zeros(t, sorted);
                    for (slot, off) in buf.iter_mut().zip(offsets) {
                        *slot = amps[base | off];
                    }
                    for (row, off) in matrix.data.chunks_exact(dim).zip(offsets) {
                        amps[base | off] = row.iter().zip(&buf).map(|(x, y)| x * y).sum();
                    }
                }
            }
        }
    }
}

struct SharedAmps(*mut C64);

// SAFETY: every use writes a pair of indices owned by exactly one thread index.
unsafe impl Sync for SharedAmps {}
unsafe impl Send for SharedAmps {}

impl SharedAmps {
    /// # Safety
    /// `i` and `j` must be in bounds and no other thread may touch them concurrently.
    unsafe fn swap(&self, i: usize, j: usize) {
        std::ptr::swap(self.0.add(i), self.0.add(j));
    }

    /// # Safety
    /// Both runs must be in bounds, disjoint, and untouched by other threads.
    unsafe fn swap_runs(&self, i: usize, j: usize, run: usize) {
        std::ptr::swap_nonoverlapping(self.0.add(i), self.0.add(j), run);
    }
}

/// Runs programs on a single state array with an optional dedicated thread pool.
#[derive(Clone, Default)]
pub struct Engine {
    pool: Option<Arc<ThreadPool>>,
}

impl std::fmt::Debug for Engine {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Engine").field("threads", &self.threads()).finish()
    }
}

impl Engine {
    /// Engine on the global rayon pool.
    pub fn new() -> Engine {
        Engine { pool: None }
    }

    pub fn with_threads(threads: usize) -> Result<Engine> {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(threads.max(1))
            .build()
            .map_err(|e| Error::Config(format!("cannot build thread pool: {e}")))?;
        Ok(Engine { pool: Some(Arc::new(pool)) })
    }

    /// Honors `QUOKKA_THREADS` when set to a positive integer.
    pub fn from_env() -> Result<Engine> {
        match std::env::var("QUOKKA_THREADS").ok().and_then(|v| v.trim().parse::<usize>().ok()) {
            Some(t) if t > 0 => Engine::with_threads(t),
            _ => Ok(Engine::new()),
        }
    }

    pub fn threads(&self) -> usize {
        self.pool.as_ref().map_or_else(rayon::current_num_threads, |p| p.current_num_threads())
    }

    fn install<R: Send>(&self, f: impl FnOnce() -> R + Send) -> R {
        match &self.pool {
            Some(pool) => pool.install(f),
            None => f(),
        }
    }

    /// Applies every gate of `block` chunk by chunk, chunks of `2^c` amplitudes.
    pub fn apply_block(&self, state: &mut StateVector, block: &GateBlock, c: usize) -> Result<()> {
        if !block.fits_chunk(c) || block.qubit_mask() >> state.n.min(63) != 0 {
            return Err(Error::Contract(format!("block touches qubits outside the {c}-qubit chunk")));
        }
        let kernels = block.gates.iter().map(Kernel::compile).collect::<Result<Vec<_>>>()?;
        let chunk = 1usize << c.min(state.n);
        self.install(|| {
            state.amps.par_chunks_mut(chunk).for_each(|amps| {
                for k in &kernels {
                    k.apply(amps);
                }
            })
        });
        Ok(())
    }

    /// Applies one gate over the whole state.
    pub fn apply_gate(&self, state: &mut StateVector, gate: &Gate) -> Result<()> {
        if gate.max_qubit() >= state.n {
            return Err(Error::Contract(format!("gate {} touches qubit {} of {}", gate.id, gate.max_qubit(), state.n)));
        }
        let kernel = Kernel::compile(gate)?;
        let span = 1usize << (gate.max_qubit() + 1);
        self.install(|| state.amps.par_chunks_mut(span).for_each(|amps| kernel.apply(amps)));
        Ok(())
    }

    /// Permutes amplitudes so that index `i` moves to `bitswap(i, pairs)`.
    ///
    /// With up to [`TABLE_SWAP_POSITIONS`] positions the state is walked in
    /// groups closed under the swap, exchanging runs of consecutive amplitudes
    /// below the lowest position. Larger swaps visit every index, with threads
    /// mapped through [`bitshift_pairs`] so that cache lines of `2^cl`
    /// amplitudes move together.
    pub fn ims_swap(&self, state: &mut StateVector, op: &SwapOp, cl: usize) -> Result<()> {
        for &(a, b) in &op.pairs {
            if a >= state.n || b >= state.n {
                return Err(Error::Contract(format!("swap ({a},{b}) out of range for {} qubits", state.n)));
            }
        }
        if op.pairs.is_empty() {
            return Ok(());
        }
        let pairs = &op.pairs;
        let shared = SharedAmps(state.amps.as_mut_ptr());
        let len = state.amps.len();
        let grain = 1usize << 12;
        let positions = sorted_qubits(&pairs.iter().flat_map(|&(a, b)| [a, b]).collect::<Vec<_>>());
        if positions.len() <= TABLE_SWAP_POSITIONS {
            let swaps: Vec<(usize, usize)> = (0..1usize << positions.len())
                .map(|l| scatter_bits(l, &positions))
                .filter_map(|m| Some((m, bitswap(m, pairs))).filter(|&(m, n)| m < n))
                .collect();
            let run = 1usize << positions[0];
            let groups = len >> (positions.len() + positions[0]);
            let per_task = (grain >> (positions.len() + positions[0])).max(1);
            self.install(|| {
                (0..groups.div_ceil(per_task)).into_par_iter().for_each(|g| {
                    let shared = &shared;
                    for t in g * per_task..((g + 1) * per_task).min(groups) {
                        let base = insert_zeros(t << positions[0], &positions);
                        for &(m, n) in &swaps {
                            // SAFETY: each group owns the indices base | offset over `positions`,
                            // and m, n differ at or above bit positions[0], so the runs are disjoint.
                            unsafe { shared.swap_runs(base | m, base | n, run) };
                        }
                    }
                })
            });
            return Ok(());
        }
        let shift = bitshift_pairs(pairs, cl);
        self.install(|| {
            (0..len.div_ceil(grain)).into_par_iter().for_each(|g| {
                let shared = &shared;
                for t in g * grain..((g + 1) * grain).min(len) {
                    let m = bitshift(t, &shift);
                    let n = bitswap(m, pairs);
                    if m > n {
                        // SAFETY: t -> m is a bijection, so each {m, n} orbit is swapped by one t only.
                        unsafe { shared.swap(m, n) };
                    }
                }
            })
        });
        Ok(())
    }

    /// Runs every program item on one array. Cross-rank swaps are applied as
    /// plain bit permutations; they are rejected when the program has no rank qubits.
    pub fn simulate_program(&self, program: &Program, config: &Config, initial: usize) -> Result<(StateVector, QubitLayout)> {
        let mut state = StateVector::basis(program.n_qubits, initial)?;
        self.run_items(&mut state, program, config)?;
        Ok((state, program.final_layout.clone()))
    }

    pub fn run_items(&self, state: &mut StateVector, program: &Program, config: &Config) -> Result<()> {
        for item in &program.items {
            match item {
                ProgramItem::Block(b) => self.apply_block(state, b, program.chunk_qubits)?,
                ProgramItem::Swap(op) => {
                    if op.kind == SwapKind::CrossRank && program.rank_qubits == 0 {
                        return Err(Error::Config("cross-rank swap in a program without rank qubits".into()));
                    }
                    self.ims_swap(state, op, config.cache_line_qubits)?;
                }
            }
        }
        Ok(())
    }

    /// Baseline: applies each gate of the raw circuit over the whole state.
    pub fn simulate_gate_by_gate(&self, circuit: &Circuit, initial: usize) -> Result<StateVector> {
        let mut state = StateVector::basis(circuit.n_qubits, initial)?;
        for g in &circuit.gates {
            self.apply_gate(&mut state, g)?;
        }
        Ok(state)
    }
}

pub fn apply_block(state: &mut StateVector, block: &GateBlock, c: usize) -> Result<()> {
    Engine::new().apply_block(state, block, c)
}

pub fn ims_swap(state: &mut StateVector, op: &SwapOp, cl: usize) -> Result<()> {
    Engine::new().ims_swap(state, op, cl)
}

/// Simulates a program from basis state `initial`, returning the physical-order
/// state and the layout needed to undo the final qubit permutation.
pub fn simulate_program(program: &Program, config: &Config, initial: usize) -> Result<(StateVector, QubitLayout)> {
    Engine::new().simulate_program(program, config, initial)
}

pub fn simulate_gate_by_gate(circuit: &Circuit, initial: usize) -> Result<StateVector> {
    Engine::new().simulate_gate_by_gate(circuit, initial)
}
