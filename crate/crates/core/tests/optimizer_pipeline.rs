use aicsim::circuit::{parse_raw_circuit, Circuit, Config, SwapKind};
use aicsim::engine::Engine;
use aicsim::optimizer::{aio_optimize, find_gbs};
use aicsim::tools::{fidelity, gen_bv, gen_qaoa, gen_qft, gen_random, layout_apply, oracle_simulate, validate_order};
use aicsim::QubitLayout;
use proptest::prelude::*;

const FIGURE_FIVE: &str = "\
H 0 0
H 1 1
RZZ 2 4 2 0.75
RZZ 5 7 3 1
H 8 4
H 9 5
H 3 6
H 6 7
RZZ 0 2 8 2.25
RZZ 4 7 9 2.5
H 9 10
RZZ 1 8 11 3
RZZ 3 6 12 3.25
H 5 13
";

fn check_equivalence(circuit: &Circuit, config: &Config) {
    let program = aio_optimize(circuit, config).unwrap();
    program.validate().unwrap();
    assert!(program.blocks().all(|b| b.fits_chunk(config.chunk_qubits)));
    let report = validate_order(circuit, &program);
    assert!(report.pass, "{}", report.message);
    let (state, layout) = Engine::new().simulate_program(&program, config, 0).unwrap();
    let got = layout_apply(&state, &layout);
    let want = oracle_simulate(circuit, 0).unwrap();
    assert!(fidelity(&got, &want).unwrap() >= 1.0 - 1e-10);
    assert!((got.norm_sqr() - 1.0).abs() < 1e-9);
}

#[test]
fn figure_five_matches_oracle() {
    let circuit = parse_raw_circuit(FIGURE_FIVE, 10).unwrap();
    for fusion in [false, true] {
        let mut cfg = Config::with_ranks(10, 2).with_chunk_qubits(4).with_fusion(fusion, fusion);
        cfg.fusion_qubits = 4;
        let p = aio_optimize(&circuit, &cfg).unwrap();
        assert_eq!(p.swap_count(SwapKind::CrossRank), 1);
        assert!(p.swap_count(SwapKind::InMemory) <= 5);
        check_equivalence(&circuit, &cfg);
    }
}

#[test]
fn qft31_fits_in_few_blocks() {
    let cfg = Config::new(31).with_chunk_qubits(10).with_fusion(false, false);
    let qft = gen_qft(31);
    let p = aio_optimize(&qft, &cfg).unwrap();
    assert!(p.block_count() <= 20, "{} blocks", p.block_count());
    assert!(validate_order(&qft, &p).pass);
}

#[test]
fn large_circuits_validate() {
    let bv = gen_bv(31, &[true; 30]).unwrap();
    let p = aio_optimize(&bv, &Config::with_ranks(31, 3)).unwrap();
    assert!(validate_order(&bv, &p).pass);
    let qaoa = gen_qaoa(20, 2, 5);
    let p = aio_optimize(&qaoa, &Config::with_ranks(20, 2).with_fusion(true, true)).unwrap();
    assert!(validate_order(&qaoa, &p).pass);
}

#[test]
fn random_eight_qubit_circuit() {
    let c = gen_random(8, 40, 11).unwrap();
    check_equivalence(&c, &Config::new(8).with_chunk_qubits(4));
}

#[test]
fn single_level_blocking() {
    let c = gen_random(7, 50, 2).unwrap();
    let cfg = Config::new(7).with_chunk_qubits(3);
    let (items, layout) = find_gbs(&c.gates, QubitLayout::identity(7), &cfg).unwrap();
    let program = aicsim::Program { n_qubits: 7, rank_qubits: 0, chunk_qubits: 3, items, final_layout: layout };
    program.validate().unwrap();
    assert!(validate_order(&c, &program).pass);
    assert_eq!(program.gate_count(), 50);
}

#[test]
fn optimizer_is_deterministic() {
    let c = gen_random(10, 60, 4).unwrap();
    let cfg = Config::with_ranks(10, 2).with_chunk_qubits(4).with_fusion(true, true);
    assert_eq!(aio_optimize(&c, &cfg).unwrap(), aio_optimize(&c, &cfg).unwrap());
}

#[test]
fn every_flag_combination() {
    for seed in 0..64u64 {
        let n = 4 + (seed as usize % 9);
        let c = gen_random(n, 60, seed).unwrap();
        let r = [0, 1, 2][seed as usize % 3].min(n - 2);
        let bits = seed / 3;
        let cfg = Config::with_ranks(n, r)
            .with_chunk_qubits(2.max((n - r).min(2 + seed as usize % 4)))
            .with_fusion(bits & 1 == 1, bits & 2 == 2)
            .with_swaps(bits & 4 == 4, bits & 8 == 8);
        check_equivalence(&c, &cfg);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]
    #[test]
    fn optimized_programs_match_oracle(
        n in 3usize..10, gates in 0usize..50, seed in any::<u64>(), r in 0usize..3, c in 2usize..6, flags in 0u8..16,
    ) {
        let r = r.min(n - 2);
        let c = c.min(n - r);
        let circuit = gen_random(n, gates, seed).unwrap();
        let cfg = Config::with_ranks(n, r).with_chunk_qubits(c)
            .with_fusion(flags & 1 != 0, flags & 2 != 0)
            .with_swaps(flags & 4 != 0, flags & 8 != 0);
        check_equivalence(&circuit, &cfg);
    }
}
