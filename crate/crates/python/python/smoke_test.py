"""Smoke test for the aicsim_py extension module.

Build the module with `maturin develop -m crates/python/Cargo.toml`, or copy
`target/release/libaicsim_py.so` to `aicsim_py.so` somewhere on PYTHONPATH.
"""

import cmath
import math

import aicsim_py as sim


def check_qft_uniform():
    n = 8
    circuit = sim.gen_qft(n)
    config = sim.Config(n, chunk_qubits=4)
    program = sim.aio_optimize(circuit, config)
    ok, message = sim.validate_order(circuit, program)
    assert ok, message
    state = sim.simulate(program, config)
    probs = state.probabilities()
    assert len(probs) == 1 << n
    assert all(abs(p - 1.0 / (1 << n)) < 1e-12 for p in probs)


def check_multi_rank_matches_oracle():
    n = 10
    circuit = sim.gen_random(n, count=120, seed=7)
    config = sim.Config(n, rank_qubits=2, chunk_qubits=4, buffer_qubits=3)
    program = sim.aio_optimize(circuit, config)
    state = sim.simulate(program, config, threads=2)
    oracle = sim.oracle_simulate(circuit)
    assert sim.fidelity(state, oracle) > 1.0 - 1e-10
    assert abs(state.norm_sqr() - 1.0) < 1e-9


def check_bv_recovers_secret():
    n = 7
    secret = "101101"
    state = sim.simulate_gate_by_gate(sim.gen_bv(n, secret))
    probs = state.probabilities()
    best = max(range(len(probs)), key=probs.__getitem__)
    bits = "".join(str((best >> q) & 1) for q in range(n - 1))
    assert bits == secret, (bits, secret)


def check_text_round_trip():
    text = "H 0 0\nCX 0 1 1\nRZ 2 2 0.5\n"
    circuit = sim.Circuit.parse(text)
    assert circuit.n_qubits == 3 and len(circuit) == 3
    config = sim.Config(3, chunk_qubits=2)
    program = sim.aio_optimize(circuit, config)
    again = sim.Program.parse(program.to_text(), config)
    assert again.gate_count == program.gate_count
    amps = sim.simulate(again, config).amplitudes()
    expected = cmath.exp(-0.25j) / math.sqrt(2)
    assert abs(amps[0] - expected) < 1e-12


def check_errors():
    try:
        sim.Circuit.parse("FOO 0 0\n")
    except ValueError:
        pass
    else:
        raise AssertionError("unknown gate accepted")
    try:
        sim.Config(4, chunk_qubits=9)
    except ValueError:
        pass
    else:
        raise AssertionError("oversized chunk accepted")


def main():
    for check in (
        check_qft_uniform,
        check_multi_rank_matches_oracle,
        check_bv_recovers_secret,
        check_text_round_trip,
        check_errors,
    ):
        check()
        print(f"ok {check.__name__}")


if __name__ == "__main__":
    main()
