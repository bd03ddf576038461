use aicsim::circuit::{Circuit, Config, GateBlock, Program, ProgramItem, QubitLayout};
use aicsim::engine::Engine;
use aicsim::gates::{Gate, GateKind};
use aicsim::optimizer::aio_optimize;
use aicsim::tools::{
    fidelity, gen_bv, gen_gate_bench, gen_qaoa, gen_qft, gen_random, layout_apply, oracle_simulate, validate_order,
};
use proptest::prelude::*;

#[test]
fn generator_counts() {
    assert_eq!(gen_qft(31).len(), 496);
    assert_eq!(gen_qaoa(31, 5, 1).len(), 2511);
    assert_eq!(gen_bv(31, &[true; 30]).unwrap().len(), 92);
    for kind in GateKind::STANDARD {
        let c = gen_gate_bench(kind, 7).unwrap();
        assert_eq!(c.len(), if kind.arity() == 1 { 7 } else { 3 });
    }
}

#[test]
fn engine_agrees_with_oracle_gate_by_gate() {
    for kind in GateKind::STANDARD {
        let c = gen_gate_bench(kind, 6).unwrap();
        let got = Engine::new().simulate_gate_by_gate(&c, 13).unwrap();
        let want = oracle_simulate(&c, 13).unwrap();
        let diff = got.amps.iter().zip(&want.amps).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
        assert!(diff <= 1e-12, "{kind}: {diff}");
    }
}

#[test]
fn reordered_program_validates_and_matches() {
    let raw = Circuit::new(
        3,
        vec![Gate::h(0, 0), Gate::rz(1, 0.4, 1), Gate::cx(0, 2, 2).unwrap(), Gate::cp(1, 2, 0.3, 3).unwrap()],
    )
    .unwrap();
    let reordered = vec![raw.gates[1].clone(), raw.gates[0].clone(), raw.gates[2].clone(), raw.gates[3].clone()];
    let program = Program {
        n_qubits: 3,
        rank_qubits: 0,
        chunk_qubits: 3,
        items: vec![ProgramItem::Block(GateBlock::new(reordered))],
        final_layout: QubitLayout::identity(3),
    };
    assert!(validate_order(&raw, &program).pass);
    let (state, _) = Engine::new().simulate_program(&program, &Config::new(3), 0).unwrap();
    assert!(fidelity(&state, &oracle_simulate(&raw, 0).unwrap()).unwrap() > 1.0 - 1e-12);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]
    #[test]
    fn validation_implies_equivalence(n in 2usize..10, gates in 1usize..40, seed in any::<u64>(), c in 2usize..5) {
        let circuit = gen_random(n, gates, seed).unwrap();
        let cfg = Config::new(n).with_chunk_qubits(c.min(n)).with_fusion(true, true);
        let program = aio_optimize(&circuit, &cfg).unwrap();
        prop_assert!(validate_order(&circuit, &program).pass);
        let (state, layout) = Engine::new().simulate_program(&program, &cfg, 0).unwrap();
        let f = fidelity(&layout_apply(&state, &layout), &oracle_simulate(&circuit, 0).unwrap()).unwrap();
        prop_assert!(f >= 1.0 - 1e-10);
    }

    #[test]
    fn transposing_dependent_gates_is_caught(seed in any::<u64>()) {
        let circuit = gen_random(4, 30, seed).unwrap();
        let mut gates = circuit.gates.clone();
        let pos = (0..gates.len() - 1).find(|&i| {
            let (a, b) = (&gates[i], &gates[i + 1]);
            a.qubits().iter().any(|&q| b.qubits().contains(&q) && !(a.acts_diagonally_on(q) && b.acts_diagonally_on(q)))
        });
        if let Some(i) = pos {
            gates.swap(i, i + 1);
            let program = Program {
                n_qubits: 4,
                rank_qubits: 0,
                chunk_qubits: 4,
                items: vec![ProgramItem::Block(GateBlock::new(gates))],
                final_layout: QubitLayout::identity(4),
            };
            let report = validate_order(&circuit, &program);
            prop_assert!(!report.pass);
            prop_assert!(report.first_divergence.is_some());
        }
    }
}
