use aicsim::circuit::{Config, SwapKind, SwapOp};
use aicsim::distributed::{gather_state, partition, simulate, spawn_ranks_with, xrs_swap};
use aicsim::engine::{bitswap, Engine, StateVector};
use aicsim::optimizer::aio_optimize;
use aicsim::tools::{fidelity, gen_qft, gen_random, layout_apply, oracle_simulate};
use aicsim::C64;
use proptest::prelude::*;
use rand::{seq::SliceRandom, Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_state(n: usize, rng: &mut ChaCha8Rng) -> StateVector {
    StateVector::from_amplitudes((0..1 << n).map(|_| C64::new(rng.random(), rng.random())).collect()).unwrap()
}

#[test]
fn multi_rank_equals_single_rank() {
    let engine = Engine::new();
    for (seed, r) in [(1u64, 1usize), (2, 2), (3, 3), (4, 2)] {
        let n = 10 + seed as usize;
        let circuit = gen_random(n, 80, seed).unwrap();
        let cfg = Config::with_ranks(n, r).with_chunk_qubits(4);
        let program = aio_optimize(&circuit, &cfg).unwrap();
        let (multi, _) = spawn_ranks_with(&engine, &cfg, &program, 0).unwrap();
        let (single, _) = engine.simulate_program(&program, &cfg, 0).unwrap();
        assert_eq!(gather_state(&multi).unwrap(), single);
    }
}

#[test]
fn qft_over_four_ranks_matches_oracle() {
    let circuit = gen_qft(12);
    let cfg = Config::with_ranks(12, 2).with_chunk_qubits(5).with_fusion(true, true);
    let program = aio_optimize(&circuit, &cfg).unwrap();
    let (state, layout) = simulate(&Engine::new(), &cfg, &program, 5).unwrap();
    let got = layout_apply(&state, &layout);
    assert!(fidelity(&got, &oracle_simulate(&circuit, 5).unwrap()).unwrap() >= 1.0 - 1e-10);
}

#[test]
fn exhaustive_small_exchanges() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for n in 3..=10usize {
        for r in 1..=3.min(n - 1) {
            let local = n - r;
            for s in 0..=r.min(local) {
                let mut inside: Vec<usize> = (0..local).collect();
                inside.shuffle(&mut rng);
                let mut ranks: Vec<usize> = (local..n).collect();
                ranks.shuffle(&mut rng);
                let pairs: Vec<(usize, usize)> = inside.into_iter().zip(ranks).take(s).collect();
                let op = SwapOp::new(SwapKind::CrossRank, pairs.clone());
                let v = random_state(n, &mut rng);
                let mut want = v.clone();
                for (i, a) in v.amps.iter().enumerate() {
                    want.amps[bitswap(i, &pairs)] = *a;
                }
                for b in s.max(1)..=local {
                    let mut slices = partition(&v, r).unwrap();
                    let stats = xrs_swap(&mut slices, &op, b).unwrap();
                    assert_eq!(gather_state(&slices).unwrap(), want);
                    assert!(stats.peak_buffer <= 1 << b);
                    assert_eq!(stats.sent, stats.received);
                }
            }
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]
    #[test]
    fn exchange_is_pure_data_movement(n in 4usize..12, r in 1usize..4, seed in any::<u64>()) {
        let r = r.min(n - 2);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let local = n - r;
        let s = rng.random_range(1..=r.min(local));
        let pairs: Vec<(usize, usize)> = (0..s).map(|k| (local - s + k, local + k)).collect();
        let v = random_state(n, &mut rng);
        let mut slices = partition(&v, r).unwrap();
        xrs_swap(&mut slices, &SwapOp::new(SwapKind::CrossRank, pairs.clone()), s).unwrap();
        let out = gather_state(&slices).unwrap();
        for (i, a) in v.amps.iter().enumerate() {
            prop_assert_eq!(out.amps[bitswap(i, &pairs)], *a);
        }
    }
}
