//! Multi-rank execution: the state is split across `2^R` worker threads and
//! cross-rank swaps run as grouped all-to-all exchanges through per-rank
//! receive buffers of `2^B` amplitudes.

use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::{Barrier, Mutex};

use crate::circuit::{Config, Program, ProgramItem, QubitLayout, SwapKind, SwapOp};
use crate::engine::{Engine, StateVector};
use crate::error::{Error, Result};
use crate::gates::{gather_bits, scatter_bits};
use crate::C64;

/// Amplitudes held by one rank: global index `(rank << local_qubits) | i`.
#[derive(Debug, Clone, PartialEq)]
pub struct RankSlice {
    pub rank: usize,
    pub amps: Vec<C64>,
}

/// Instrumentation gathered over every cross-rank exchange of a run.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ExchangeStats {
    /// Cross-rank swap operations executed.
    pub exchanges: usize,
    /// Exchange rounds, counted once per operation.
    pub rounds: usize,
    /// Largest number of amplitudes any receive buffer held in one round.
    pub peak_buffer: usize,
    /// Amplitudes sent by each rank.
    pub sent: Vec<usize>,
    /// Amplitudes received by each rank.
    pub received: Vec<usize>,
    /// Rounds in which some rank sent a different count than it received.
    pub unbalanced_rounds: usize,
}

/// Splits a full state into `2^rank_qubits` slices, rank-major.
pub fn partition(state: &StateVector, rank_qubits: usize) -> Result<Vec<RankSlice>> {
    if rank_qubits >= state.n {
        return Err(Error::Config(format!("{rank_qubits} rank qubits leave no local qubits of {}", state.n)));
    }
    let local = 1usize << (state.n - rank_qubits);
    Ok(state.amps.chunks(local).enumerate().map(|(rank, a)| RankSlice { rank, amps: a.to_vec() }).collect())
}

/// Concatenates slices by rank id into the full state.
pub fn gather_state(slices: &[RankSlice]) -> Result<StateVector> {
    let ranks = slices.len();
    if ranks == 0 || !ranks.is_power_of_two() {
        return Err(Error::Contract(format!("{ranks} slices is not a power of two")));
    }
    let len = slices[0].amps.len();
    let mut ordered: Vec<Option<&RankSlice>> = vec![None; ranks];
    for s in slices {
        if s.amps.len() != len {
            return Err(Error::LengthMismatch(s.amps.len(), len));
        }
        match ordered.get_mut(s.rank) {
            Some(slot @ None) => *slot = Some(s),
            _ => return Err(Error::Contract(format!("rank {} is duplicated or out of range", s.rank))),
        }
    }
    let mut amps = Vec::with_capacity(len * ranks);
    for (rank, s) in ordered.into_iter().enumerate() {
        amps.extend_from_slice(&s.ok_or_else(|| Error::Contract(format!("rank {rank} is missing")))?.amps);
    }
    StateVector::from_amplitudes(amps)
}

/// Geometry of one cross-rank swap as seen by every rank.
struct Plan {
    /// In-rank bit positions of the pairs, in pair order.
    in_rank: Vec<usize>,
    /// Rank-id bits of the pairs, in pair order.
    rank_bits: Vec<usize>,
    /// In-rank positions not touched by the swap, ascending.
    free: Vec<usize>,
    /// Amplitudes sent to each peer per round.
    per_peer: usize,
    rounds: usize,
    /// True when the in-rank positions are the top ones in pair order, so
    /// each slab is one contiguous range.
    contiguous: bool,
    local_qubits: usize,
}

impl Plan {
    fn new(op: &SwapOp, local_qubits: usize, rank_qubits: usize, buffer_qubits: usize) -> Result<Plan> {
        if op.kind != SwapKind::CrossRank {
            return Err(Error::Contract("cross-rank exchange given an in-memory swap".into()));
        }
        op.validate(local_qubits + rank_qubits, rank_qubits)?;
        let s = op.len();
        if s > rank_qubits {
            return Err(Error::Contract(format!("{s} pairs exceed the {rank_qubits} rank qubits")));
        }
        if buffer_qubits < s || buffer_qubits > local_qubits {
            return Err(Error::InfeasibleBuffer { buffer: buffer_qubits, pairs: s });
        }
        let in_rank: Vec<usize> = op.pairs.iter().map(|&(a, _)| a).collect();
        let rank_bits = op.pairs.iter().map(|&(_, b)| b - local_qubits).collect();
        let free = (0..local_qubits).filter(|p| !in_rank.contains(p)).collect();
        let slab = 1usize << (local_qubits - s);
        let per_peer = (1usize << (buffer_qubits - s)).min(slab);
        let contiguous = in_rank.iter().enumerate().all(|(k, &a)| a == local_qubits - s + k);
        Ok(Plan { in_rank, rank_bits, free, per_peer, rounds: slab / per_peer, contiguous, local_qubits })
    }

    fn peers(&self) -> usize {
        1 << self.in_rank.len()
    }

    /// Local index of element `k` of the slab whose swapped bits read `pattern`.
    fn index(&self, pattern: usize, k: usize) -> usize {
        if self.contiguous {
            (pattern << (self.local_qubits - self.in_rank.len())) | k
        } else {
            scatter_bits(k, &self.free) | scatter_bits(pattern, &self.in_rank)
        }
    }

    fn group_id(&self, rank: usize) -> usize {
        gather_bits(rank, &self.rank_bits)
    }

    /// Rank in the same group as `rank` whose group-local id is `id`.
    fn peer(&self, rank: usize, id: usize) -> usize {
        let mask = scatter_bits(self.peers() - 1, &self.rank_bits);
        (rank & !mask) | scatter_bits(id, &self.rank_bits)
    }
}

/// Shared state of one collective: a receive buffer per rank and the barrier
/// every rank meets twice per round.
struct Collective {
    barrier: Barrier,
    buffers: Vec<Mutex<Vec<C64>>>,
    received: Vec<AtomicUsize>,
    stats: Mutex<ExchangeStats>,
}

impl Collective {
    fn new(ranks: usize, buffer_qubits: usize) -> Collective {
        Collective {
            barrier: Barrier::new(ranks),
            buffers: (0..ranks).map(|_| Mutex::new(vec![C64::new(0.0, 0.0); 1 << buffer_qubits])).collect(),
            received: (0..ranks).map(|_| AtomicUsize::new(0)).collect(),
            stats: Mutex::new(ExchangeStats {
                sent: vec![0; ranks],
                received: vec![0; ranks],
                ..ExchangeStats::default()
            }),
        }
    }

    /// One rank's part of a cross-rank swap. Every rank of the run must call it
    /// with the same plan.
    fn exchange(&self, rank: usize, amps: &mut [C64], plan: &Plan) {
        let me = plan.group_id(rank);
        let l = plan.per_peer;
        let mut sent_total = 0;
        let mut recv_total = 0;
        for round in 0..plan.rounds {
            let offset = round * l;
            let mut sent = 0;
            for id in (0..plan.peers()).filter(|&id| id != me) {
                let peer = plan.peer(rank, id);
                let mut buf = self.buffers[peer].lock().expect("buffer lock");
                let slot = &mut buf[me * l..(me + 1) * l];
                for (k, dst) in slot.iter_mut().enumerate() {
                    *dst = amps[plan.index(id, offset + k)];
                }
                self.received[peer].fetch_add(l, Ordering::SeqCst);
                sent += l;
            }
            self.barrier.wait();
            let got = self.received[rank].swap(0, Ordering::SeqCst);
            {
                let buf = self.buffers[rank].lock().expect("buffer lock");
                for id in (0..plan.peers()).filter(|&id| id != me) {
                    for (k, v) in buf[id * l..(id + 1) * l].iter().enumerate() {
                        amps[plan.index(id, offset + k)] = *v;
                    }
                }
            }
            let mut stats = self.stats.lock().expect("stats lock");
            stats.peak_buffer = stats.peak_buffer.max(got);
            if got != sent {
                stats.unbalanced_rounds += 1;
            }
            drop(stats);
            sent_total += sent;
            recv_total += got;
            self.barrier.wait();
        }
        let mut stats = self.stats.lock().expect("stats lock");
        stats.sent[rank] += sent_total;
        stats.received[rank] += recv_total;
        if rank == 0 {
            stats.exchanges += 1;
            stats.rounds += plan.rounds;
        }
    }
}

fn check_slices(slices: &[RankSlice]) -> Result<usize> {
    let ranks = slices.len();
    if ranks < 2 || !ranks.is_power_of_two() {
        return Err(Error::Contract(format!("{ranks} slices is not a power of two above one")));
    }
    let len = slices[0].amps.len();
    if len < 2 || !len.is_power_of_two() {
        return Err(Error::Contract(format!("slice of {len} amplitudes is not a power of two")));
    }
    for (i, s) in slices.iter().enumerate() {
        if s.rank != i {
            return Err(Error::Contract(format!("slice {i} holds rank {}", s.rank)));
        }
        if s.amps.len() != len {
            return Err(Error::LengthMismatch(s.amps.len(), len));
        }
    }
    Ok(len.trailing_zeros() as usize)
}

/// Applies one cross-rank swap to slices ordered by rank, with one worker per
/// rank and receive buffers of `2^buffer_qubits` amplitudes.
pub fn xrs_swap(slices: &mut [RankSlice], op: &SwapOp, buffer_qubits: usize) -> Result<ExchangeStats> {
    let local = check_slices(slices)?;
    let rank_qubits = slices.len().trailing_zeros() as usize;
    let plan = Plan::new(op, local, rank_qubits, buffer_qubits)?;
    let collective = Collective::new(slices.len(), buffer_qubits);
    if op.is_empty() {
        return Ok(collective.stats.into_inner().expect("stats lock"));
    }
    std::thread::scope(|scope| {
        for slice in slices.iter_mut() {
            let (collective, plan) = (&collective, &plan);
            scope.spawn(move || collective.exchange(slice.rank, &mut slice.amps, plan));
        }
    });
    Ok(collective.stats.into_inner().expect("stats lock"))
}

fn check_program(program: &Program, config: &Config) -> Result<()> {
    config.validate()?;
    if config.rank_qubits == 0 {
        return Err(Error::Config("multi-rank execution needs rank_qbit >= 1".into()));
    }
    if program.n_qubits != config.n_qubits || program.rank_qubits != config.rank_qubits {
        return Err(Error::Config(format!(
            "program is for {} qubits over {} rank qubits, configuration has {} over {}",
            program.n_qubits, program.rank_qubits, config.n_qubits, config.rank_qubits
        )));
    }
    program.validate()?;
    let local = config.local_qubits();
    if let Some(b) = program.blocks().find(|b| b.qubit_mask() >> local != 0) {
        return Err(Error::Contract(format!(
            "block of {} gates touches positions outside the {local} rank-local qubits",
            b.len()
        )));
    }
    Ok(())
}

/// Runs `program` from basis state `initial` on `2^R` rank workers and returns
/// their final slices, ordered by rank, with exchange instrumentation.
pub fn spawn_ranks_with(
    engine: &Engine,
    config: &Config,
    program: &Program,
    initial: usize,
) -> Result<(Vec<RankSlice>, ExchangeStats)> {
    check_program(program, config)?;
    let local = config.local_qubits();
    let ranks = config.num_ranks();
    if initial >> config.n_qubits != 0 {
        return Err(Error::Contract(format!("basis index {initial} out of range for {} qubits", config.n_qubits)));
    }
    let plans: Vec<Option<Plan>> = program
        .items
        .iter()
        .map(|item| match item {
            ProgramItem::Swap(op) if op.kind == SwapKind::CrossRank => {
                Plan::new(op, local, config.rank_qubits, config.buffer_qubits).map(Some)
            }
            _ => Ok(None),
        })
        .collect::<Result<_>>()?;

    let mut states: Vec<StateVector> = Vec::with_capacity(ranks);
    for rank in 0..ranks {
        let mut s = StateVector::basis(local, 0)?;
        s.amps[0] = C64::new(0.0, 0.0);
        if initial >> local == rank {
            s.amps[initial & ((1 << local) - 1)] = C64::new(1.0, 0.0);
        }
        states.push(s);
    }

    let collective = Collective::new(ranks, config.buffer_qubits);
    let failure: Mutex<Option<Error>> = Mutex::new(None);
    std::thread::scope(|scope| {
        for (rank, state) in states.iter_mut().enumerate() {
            let (collective, plans, failure) = (&collective, &plans, &failure);
            scope.spawn(move || {
                for (item, plan) in program.items.iter().zip(plans) {
                    let result = match (item, plan) {
                        (_, Some(plan)) => {
                            collective.exchange(rank, &mut state.amps, plan);
                            Ok(())
                        }
                        (ProgramItem::Block(b), None) => engine.apply_block(state, b, program.chunk_qubits),
                        (ProgramItem::Swap(op), None) => engine.ims_swap(state, op, config.cache_line_qubits),
                    };
                    if let Err(e) = result {
                        // Programs are validated up front, so rank-local steps cannot
                        // fail on one rank only; record the error and keep meeting
                        // the collective barriers.
                        failure.lock().expect("error lock").get_or_insert(e);
                    }
                }
            });
        }
    });
    if let Some(e) = failure.into_inner().expect("error lock") {
        return Err(e);
    }
    let slices = states.into_iter().enumerate().map(|(rank, s)| RankSlice { rank, amps: s.amps }).collect();
    Ok((slices, collective.stats.into_inner().expect("stats lock")))
}

/// [`spawn_ranks_with`] on the default engine, without instrumentation.
pub fn spawn_ranks(config: &Config, program: &Program, initial: usize) -> Result<Vec<RankSlice>> {
    spawn_ranks_with(&Engine::new(), config, program, initial).map(|(slices, _)| slices)
}

/// Runs `program` on one array when `R = 0` and on rank workers otherwise,
/// returning the gathered physical-order state and the final layout.
pub fn simulate(engine: &Engine, config: &Config, program: &Program, initial: usize) -> Result<(StateVector, QubitLayout)> {
    if config.rank_qubits == 0 {
        return engine.simulate_program(program, config, initial);
    }
    let (slices, _) = spawn_ranks_with(engine, config, program, initial)?;
    Ok((gather_state(&slices)?, program.final_layout.clone()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuit::GateBlock;
    use crate::engine::bitswap;
    use crate::gates::Gate;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::FRAC_1_SQRT_2;

    fn random_state(n: usize, seed: u64) -> StateVector {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        StateVector::from_amplitudes((0..1 << n).map(|_| C64::new(rng.random(), rng.random())).collect()).unwrap()
    }

    fn permuted(v: &StateVector, pairs: &[(usize, usize)]) -> StateVector {
        let mut out = v.clone();
        for (i, a) in v.amps.iter().enumerate() {
            out.amps[bitswap(i, pairs)] = *a;
        }
        out
    }

    fn empty_program(n: usize, r: usize, c: usize, items: Vec<ProgramItem>) -> Program {
        Program { n_qubits: n, rank_qubits: r, chunk_qubits: c, items, final_layout: QubitLayout::identity(n) }
    }

    #[test]
    fn single_h_on_two_ranks() {
        let cfg = Config::with_ranks(3, 1).with_chunk_qubits(2);
        let block = ProgramItem::Block(GateBlock::new(vec![Gate::h(0, 0)]));
        let slices = spawn_ranks(&cfg, &empty_program(3, 1, 2, vec![block]), 0).unwrap();
        let h = C64::new(FRAC_1_SQRT_2, 0.0);
        let zero = C64::new(0.0, 0.0);
        assert_eq!(slices[0].amps, vec![h, h, zero, zero]);
        assert!(slices[1].amps.iter().all(|a| *a == zero));
    }

    #[test]
    fn empty_program_partitions_initial_state() {
        let cfg = Config::with_ranks(4, 2).with_chunk_qubits(2);
        let slices = spawn_ranks(&cfg, &empty_program(4, 2, 2, vec![]), 9).unwrap();
        assert_eq!(slices, partition(&StateVector::basis(4, 9).unwrap(), 2).unwrap());
    }

    #[test]
    fn gather_examples() {
        let one = C64::new(1.0, 0.0);
        let zero = C64::new(0.0, 0.0);
        let slices = vec![RankSlice { rank: 1, amps: vec![zero, zero] }, RankSlice { rank: 0, amps: vec![one, zero] }];
        assert_eq!(gather_state(&slices).unwrap().amps, vec![one, zero, zero, zero]);
        assert!(gather_state(&slices[..1].iter().map(|s| RankSlice { rank: 1, ..s.clone() }).collect::<Vec<_>>()).is_err());
        let v = random_state(10, 1);
        assert_eq!(gather_state(&partition(&v, 3).unwrap()).unwrap(), v);
    }

    #[test]
    fn three_qubit_exchange() {
        let v = random_state(3, 2);
        let mut slices = partition(&v, 1).unwrap();
        let op = SwapOp::new(SwapKind::CrossRank, vec![(1, 2)]);
        xrs_swap(&mut slices, &op, 1).unwrap();
        assert_eq!(slices[0].amps[2], v.amps[0b100]);
        assert_eq!(slices[1].amps[0], v.amps[0b010]);
        assert_eq!(slices[1].amps[1], v.amps[0b011]);
        assert_eq!(gather_state(&slices).unwrap(), permuted(&v, &op.pairs));
    }

    #[test]
    fn buffer_size_does_not_change_result() {
        let v = random_state(16, 3);
        let op = SwapOp::new(SwapKind::CrossRank, vec![(12, 14), (13, 15)]);
        let want = permuted(&v, &op.pairs);
        for b in 2..=14 {
            let mut slices = partition(&v, 2).unwrap();
            let stats = xrs_swap(&mut slices, &op, b).unwrap();
            assert_eq!(gather_state(&slices).unwrap(), want, "B = {b}");
            assert!(stats.peak_buffer <= 1 << b);
            assert_eq!(stats.sent, stats.received);
            assert_eq!(stats.unbalanced_rounds, 0);
        }
    }

    #[test]
    fn scattered_positions_and_errors() {
        let v = random_state(8, 4);
        let op = SwapOp::new(SwapKind::CrossRank, vec![(0, 7), (3, 5)]);
        let mut slices = partition(&v, 3).unwrap();
        xrs_swap(&mut slices, &op, 2).unwrap();
        assert_eq!(gather_state(&slices).unwrap(), permuted(&v, &op.pairs));

        let mut slices = partition(&v, 3).unwrap();
        assert!(matches!(xrs_swap(&mut slices, &op, 1), Err(Error::InfeasibleBuffer { buffer: 1, pairs: 2 })));
        let empty = SwapOp::new(SwapKind::CrossRank, vec![]);
        xrs_swap(&mut slices, &empty, 1).unwrap();
        assert_eq!(gather_state(&slices).unwrap(), v);
    }

    #[test]
    fn blocks_above_local_region_rejected() {
        let cfg = Config::with_ranks(4, 1).with_chunk_qubits(3);
        let block = ProgramItem::Block(GateBlock::new(vec![Gate::h(3, 0)]));
        let err = spawn_ranks(&cfg, &empty_program(4, 1, 3, vec![block]), 0).unwrap_err();
        assert!(matches!(err, Error::Contract(_)));
    }
}
