use std::cell::RefCell;
use std::collections::HashMap;
use std::rc::Rc;

use super::frontier::{bits, Frontier};
use crate::circuit::QubitLayout;

/// Memoized frontier queries for one frontier state and layout.
struct Scorer<'a> {
    frontier: &'a Frontier,
    layout: &'a QubitLayout,
    chunk: usize,
    counts: RefCell<HashMap<u64, usize>>,
    blocked: RefCell<HashMap<u64, Rc<Vec<usize>>>>,
}

impl<'a> Scorer<'a> {
    fn new(frontier: &'a Frontier, layout: &'a QubitLayout, chunk: usize) -> Scorer<'a> {
        Scorer { frontier, layout, chunk, counts: RefCell::default(), blocked: RefCell::default() }
    }

    /// Gates absorbed by the padded `set`.
    fn count(&self, set: u64) -> usize {
        let padded = pad(set, self.layout, self.chunk);
        *self.counts.borrow_mut().entry(padded).or_insert_with(|| self.frontier.count(padded))
    }

    /// Ready gates left outside the padded `set` after absorbing it.
    fn blocked(&self, set: u64) -> Rc<Vec<usize>> {
        let padded = pad(set, self.layout, self.chunk);
        let mut memo = self.blocked.borrow_mut();
        memo.entry(padded)
            .or_insert_with(|| {
                let (count, blocked) = self.frontier.simulate(padded);
                self.counts.borrow_mut().insert(padded, count);
                Rc::new(blocked)
            })
            .clone()
    }
}

/// Fills `set` up to `chunk` qubits with the residents of the lowest physical
/// positions, so that qubits already in place are kept whenever possible.
pub fn pad(set: u64, layout: &QubitLayout, chunk: usize) -> u64 {
    let mut out = set;
    let mut count = set.count_ones() as usize;
    let mut pos = 0;
    while count < chunk && pos < layout.len() {
        let bit = 1u64 << layout.logical(pos);
        if out & bit == 0 {
            out |= bit;
            count += 1;
        }
        pos += 1;
    }
    out
}

/// Blocks simulated when comparing candidate qubit sets, the candidate included.
const LOOKAHEAD: usize = 2;

/// Candidates, taken by immediate gate count, that are scored with lookahead.
const LOOKAHEAD_CANDIDATES: usize = 8;

/// Choice of the logical qubits for the next block, at most `chunk` of them.
///
/// Candidate sets are grown greedily ([`grow`]) from the empty set and from each
/// ready gate. The [`LOOKAHEAD_CANDIDATES`] candidates absorbing the most gates
/// are scored by simulating each followed by greedy blocks up to a horizon of
/// [`LOOKAHEAD`] blocks: a candidate that finishes the circuit in fewer blocks
/// wins, then the one absorbing more gates over the horizon, then the one
/// absorbing more gates itself, then the earlier candidate.
pub fn find_max_gate(frontier: &Frontier, layout: &QubitLayout, chunk: usize) -> u64 {
    let mut best: Option<(usize, usize, usize, u64)> = None;
    let scorer = Scorer::new(frontier, layout, chunk);
    let candidates = candidate_sets(&scorer);
    let mut order: Vec<usize> = (0..candidates.len()).collect();
    order.sort_by_key(|&i| (std::cmp::Reverse(scorer.count(candidates[i])), i));
    order.truncate(LOOKAHEAD_CANDIDATES);
    order.sort_unstable();
    for set in order.into_iter().map(|i| candidates[i]) {
        let mut next = frontier.clone();
        let mut moved = layout.clone();
        let now = step(&mut next, &mut moved, set, chunk);
        let mut blocks = 1;
        let mut total = now;
        while !next.is_empty() && blocks < LOOKAHEAD {
            let set = grow(&Scorer::new(&next, &moved, chunk), 0);
            total += step(&mut next, &mut moved, set, chunk);
            blocks += 1;
        }
        let key = (if next.is_empty() { blocks } else { usize::MAX }, total, now);
        if best.is_none_or(|(b, t, n, _)| key.0 < b || (key.0 == b && (key.1, key.2) > (t, n))) {
            best = Some((key.0, key.1, key.2, set));
        }
    }
    best.map_or(0, |(_, _, _, set)| set)
}

fn step(frontier: &mut Frontier, layout: &mut QubitLayout, set: u64, chunk: usize) -> usize {
    let target = pad(set, layout, chunk);
    super::swaps::in_memory_transition(layout, target, chunk, true);
    frontier.absorb(target).len()
}

fn candidate_sets(scorer: &Scorer) -> Vec<u64> {
    let frontier = scorer.frontier;
    let mut out = vec![grow(scorer, 0)];
    let mut seeds: Vec<(usize, usize, u64)> = Vec::new();
    for &g in scorer.blocked(0).iter() {
        let m = frontier.mask(g);
        if m.count_ones() as usize <= scorer.chunk && !seeds.iter().any(|s| s.2 == m) {
            seeds.push((scorer.count(m), g, m));
        }
    }
    seeds.sort_by_key(|&(score, g, _)| (std::cmp::Reverse(score), g));
    for &(_, _, m) in &seeds {
        let set = grow(scorer, m);
        if !out.contains(&set) {
            out.push(set);
        }
    }
    out
}

/// Grows `start` one ready gate at a time, keeping the enlarged (padded) set
/// that absorbs the most gates. Ties prefer the lowest new qubit index, then
/// fewer new qubits, then the earlier gate. Growth stops when no candidate fits
/// or none improves the score.
fn grow(scorer: &Scorer, start: u64) -> u64 {
    let frontier = scorer.frontier;
    let chunk = scorer.chunk;
    let mut set = start;
    let mut score = scorer.count(set);
    loop {
        if set.count_ones() as usize == chunk {
            return set;
        }
        let candidates = scorer.blocked(set);
        let mut best: Option<(usize, (usize, u32, usize), u64)> = None;
        let mut tried: Vec<u64> = Vec::new();
        for &g in candidates.iter() {
            let grown = set | frontier.mask(g);
            let added = grown & !set;
            if grown.count_ones() as usize > chunk || added == 0 || tried.contains(&grown) {
                continue;
            }
            tried.push(grown);
            let s = scorer.count(grown);
            let key = (63 - added.leading_zeros() as usize, added.count_ones(), g);
            let better = match &best {
                None => true,
                Some((bs, bk, _)) => s > *bs || (s == *bs && key < *bk),
            };
            if better {
                best = Some((s, key, grown));
            }
        }
        match best {
            Some((s, _, grown)) if s > score || set == 0 => {
                score = s;
                set = grown;
            }
            _ => return set,
        }
    }
}

/// Logical qubits of a mask, ascending.
pub fn qubit_list(mask: u64) -> Vec<usize> {
    bits(mask).collect()
}
