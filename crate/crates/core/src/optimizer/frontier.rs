use std::cell::RefCell;
use std::cmp::Reverse;
use std::collections::BinaryHeap;
use std::sync::Arc;

use crate::gates::Gate;

/// Iterates the set bits of a mask, lowest first.
pub(crate) fn bits(mut mask: u64) -> impl Iterator<Item = usize> {
    std::iter::from_fn(move || {
        if mask == 0 {
            return None;
        }
        let q = mask.trailing_zeros() as usize;
        mask &= mask - 1;
        Some(q)
    })
}

/// Dependency tracker over a gate list.
///
/// The gates touching each qubit are split into layers: a gate that acts
/// non-diagonally on the qubit is a layer of its own, and consecutive gates that
/// act diagonally on it share one layer, since they commute there. A gate is
/// ready when, on every qubit it touches, all earlier layers have been absorbed.
#[derive(Debug, Clone)]
pub struct Frontier {
    graph: Arc<Graph>,
    state: State,
}

/// Layers are numbered globally, qubit by qubit; qubit `q` owns the ids
/// `first[q]..end[q]`.
#[derive(Debug)]
struct Graph {
    masks: Vec<u64>,
    /// `(qubit, layer)` of each gate on each of its qubits, gate `g` at
    /// `slots[slot_off[g]..slot_off[g + 1]]`.
    slot_off: Vec<u32>,
    slots: Vec<(u32, u32)>,
    /// Gates of layer `l` at `items[layer_off[l]..layer_off[l + 1]]`.
    layer_off: Vec<u32>,
    items: Vec<u32>,
    end: Vec<u32>,
}

impl Graph {
    fn slots(&self, g: usize) -> &[(u32, u32)] {
        &self.slots[self.slot_off[g] as usize..self.slot_off[g + 1] as usize]
    }

    fn layer(&self, l: u32) -> &[u32] {
        &self.items[self.layer_off[l as usize] as usize..self.layer_off[l as usize + 1] as usize]
    }

    /// Gates of the current layer of `q`, empty once the qubit is exhausted.
    fn current(&self, state: &State, q: usize) -> &[u32] {
        let l = state.current[q];
        if l < self.end[q] {
            self.layer(l)
        } else {
            &[]
        }
    }

    fn is_ready(&self, state: &State, g: usize) -> bool {
        !state.is_done(g) && self.slots(g).iter().all(|&(q, l)| state.current[q as usize] == l)
    }

    /// Moves past gate `g` on each of its qubits, calling `fresh` with the
    /// layers that become current.
    fn retire(&self, state: &mut State, g: usize, mut fresh: impl FnMut(&mut State, &[u32])) {
        state.done[g / 64] |= 1 << (g % 64);
        state.remaining -= 1;
        for &(q, _) in self.slots(g) {
            let q = q as usize;
            state.left[q] -= 1;
            if state.left[q] > 0 {
                continue;
            }
            state.current[q] += 1;
            let layer = self.current(state, q);
            state.left[q] = layer.len() as u32;
            fresh(state, layer);
        }
    }
}

#[derive(Debug, Default)]
struct State {
    current: Vec<u32>,
    left: Vec<u32>,
    done: Vec<u64>,
    remaining: usize,
}

impl Clone for State {
    fn clone(&self) -> State {
        State { current: self.current.clone(), left: self.left.clone(), done: self.done.clone(), remaining: self.remaining }
    }

    fn clone_from(&mut self, source: &State) {
        self.current.clone_from(&source.current);
        self.left.clone_from(&source.left);
        self.done.clone_from(&source.done);
        self.remaining = source.remaining;
    }
}

impl State {
    fn is_done(&self, g: usize) -> bool {
        self.done[g / 64] >> (g % 64) & 1 == 1
    }
}

thread_local! {
    static SCRATCH: RefCell<(State, Vec<usize>)> = RefCell::default();
}

impl Frontier {
    pub fn new(gates: &[Gate], n_qubits: usize) -> Frontier {
        let masks: Vec<u64> = gates.iter().map(Gate::dep_mask).collect();
        let mut layers: Vec<Vec<Vec<u32>>> = vec![Vec::new(); n_qubits];
        let mut open = vec![false; n_qubits];
        let mut local_slots = Vec::with_capacity(gates.len());
        for (i, g) in gates.iter().enumerate() {
            let mut slot = Vec::with_capacity(masks[i].count_ones() as usize);
            for q in bits(masks[i]) {
                let diagonal = g.acts_diagonally_on(q);
                if !(diagonal && open[q]) {
                    layers[q].push(Vec::new());
                }
                open[q] = diagonal;
                let layer = layers[q].len() - 1;
                layers[q][layer].push(i as u32);
                slot.push((q, layer));
            }
            local_slots.push(slot);
        }

        let mut first = Vec::with_capacity(n_qubits);
        let mut end = Vec::with_capacity(n_qubits);
        let mut layer_off = vec![0u32];
        let mut items = Vec::with_capacity(gates.len() * 2);
        for per_qubit in &layers {
            first.push(layer_off.len() as u32 - 1);
            for layer in per_qubit {
                items.extend_from_slice(layer);
                layer_off.push(items.len() as u32);
            }
            end.push(layer_off.len() as u32 - 1);
        }
        let mut slot_off = vec![0u32];
        let mut slots = Vec::new();
        for slot in &local_slots {
            slots.extend(slot.iter().map(|&(q, l)| (q as u32, first[q] + l as u32)));
            slot_off.push(slots.len() as u32);
        }

        let left = layers.iter().map(|l| l.first().map_or(0, |x| x.len() as u32)).collect();
        let state = State { current: first, left, done: vec![0; masks.len().div_ceil(64)], remaining: masks.len() };
        Frontier { graph: Arc::new(Graph { masks, slot_off, slots, layer_off, items, end }), state }
    }

    pub fn is_empty(&self) -> bool {
        self.state.remaining == 0
    }

    pub fn remaining(&self) -> usize {
        self.state.remaining
    }

    pub fn mask(&self, gate: usize) -> u64 {
        self.graph.masks[gate]
    }

    /// Ready gates touching at least one qubit of `scope`.
    fn ready_in(&self, state: &State, scope: u64) -> Vec<usize> {
        let graph = &*self.graph;
        let mut out: Vec<usize> = Vec::new();
        for q in bits(scope) {
            let layer = graph.current(state, q);
            out.extend(layer.iter().map(|&g| g as usize).filter(|&g| graph.is_ready(state, g)));
        }
        out.sort_unstable();
        out.dedup();
        out
    }

    /// Gates whose predecessors have all been absorbed, ascending.
    pub fn ready(&self) -> Vec<usize> {
        self.ready_in(&self.state, self.all())
    }

    fn all(&self) -> u64 {
        match self.graph.end.len() {
            64.. => !0,
            n => (1u64 << n) - 1,
        }
    }

    /// Absorbs ready gates inside `set` until none remain, smallest index first.
    /// Returns the absorbed gate indices in absorption order.
    fn absorb_into(&self, state: &mut State, set: u64) -> Vec<usize> {
        let graph = &*self.graph;
        let fits = |g: usize| graph.masks[g] & !set == 0;
        let mut heap: BinaryHeap<Reverse<usize>> =
            self.ready_in(state, set).into_iter().filter(|&g| fits(g)).map(Reverse).collect();
        let mut out = Vec::new();
        let mut fresh: Vec<usize> = Vec::new();
        while let Some(Reverse(g)) = heap.pop() {
            out.push(g);
            fresh.clear();
            graph.retire(state, g, |_, layer| fresh.extend(layer.iter().map(|&h| h as usize)));
            fresh.sort_unstable();
            fresh.dedup();
            heap.extend(fresh.iter().filter(|&&h| fits(h) && graph.is_ready(state, h)).map(|&h| Reverse(h)));
        }
        out
    }

    /// Size of the closure of ready gates inside `set`. Gates are marked done
    /// as they are queued so each is taken once.
    fn closure_size(&self, state: &mut State, stack: &mut Vec<usize>, set: u64) -> usize {
        let graph = &*self.graph;
        let take = |state: &mut State, stack: &mut Vec<usize>, layer: &[u32]| {
            for &h in layer {
                let h = h as usize;
                if graph.masks[h] & !set == 0 && graph.is_ready(state, h) {
                    state.done[h / 64] |= 1 << (h % 64);
                    stack.push(h);
                }
            }
        };
        stack.clear();
        for q in bits(set) {
            take(state, stack, graph.current(state, q));
        }
        let mut count = 0;
        while let Some(g) = stack.pop() {
            count += 1;
            state.done[g / 64] &= !(1 << (g % 64));
            graph.retire(state, g, |state, layer| take(state, stack, layer));
        }
        count
    }

    pub fn absorb(&mut self, set: u64) -> Vec<usize> {
        let mut state = std::mem::take(&mut self.state);
        let out = self.absorb_into(&mut state, set);
        self.state = state;
        out
    }

    /// Number of gates [`Frontier::absorb`] would take for `set`.
    pub fn count(&self, set: u64) -> usize {
        SCRATCH.with(|scratch| {
            let mut scratch = scratch.borrow_mut();
            let (state, stack) = &mut *scratch;
            state.clone_from(&self.state);
            self.closure_size(state, stack, set)
        })
    }

    /// Counts the gates [`Frontier::absorb`] would take for `set`, and lists the
    /// ready gates left outside it afterwards.
    pub fn simulate(&self, set: u64) -> (usize, Vec<usize>) {
        let mut state = self.state.clone();
        let count = self.absorb_into(&mut state, set).len();
        let blocked = self.ready_in(&state, self.all()).into_iter().filter(|&g| self.graph.masks[g] & !set != 0).collect();
        (count, blocked)
    }
}
