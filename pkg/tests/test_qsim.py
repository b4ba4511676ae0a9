import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from carleman_lbm.carleman import build_relaxation, carleman_step, lift
from carleman_lbm.circuits import Circuit, Gate, RegisterLayout, assemble_block_encoding, relaxation_layout
from carleman_lbm.errors import ResourceLimitError
from carleman_lbm.lattice import DistributionField, make_model, uniform_field
from carleman_lbm.qsim import (StateVector, apply, decode_carleman_state, encode_carleman_state, extract_block,
                               initial_field, post_select, success_probability_analytic, success_probability_sim,
                               sweep_omega, write_state_csv)

H = np.array([[1, 1], [1, -1]]) / math.sqrt(2)


def one_qubit(gate):
    c = Circuit(RegisterLayout([("q", 1)]), [gate])
    return np.column_stack([apply(c, StateVector.basis(1, i)).amplitudes for i in range(2)])


def test_single_qubit_gates():
    np.testing.assert_allclose(one_qubit(Gate("H", (0,))), H, atol=1e-15)
    np.testing.assert_array_equal(one_qubit(Gate("X", (0,))), [[0, 1], [1, 0]])
    t = 0.7
    ry = one_qubit(Gate("RY", (0,), theta=t))
    np.testing.assert_allclose(ry, [[math.cos(t / 2), -math.sin(t / 2)], [math.sin(t / 2), math.cos(t / 2)]], atol=1e-15)


def test_qubit_zero_is_most_significant():
    c = Circuit(RegisterLayout([("q", 3)]), [Gate("X", (0,))])
    out = apply(c, StateVector.basis(3, 0))
    assert np.flatnonzero(out.amplitudes).tolist() == [4]


def test_controlled_gates_and_swap():
    c = Circuit(RegisterLayout([("q", 3)]), [Gate("X", (2,), ((0, 1), (1, 0)))])
    assert np.flatnonzero(apply(c, StateVector.basis(3, 0b100)).amplitudes).tolist() == [0b101]
    assert np.flatnonzero(apply(c, StateVector.basis(3, 0b110)).amplitudes).tolist() == [0b110]
    s = Circuit(RegisterLayout([("q", 3)]), [Gate("SWAP", (0, 2), ((1, 1),))])
    assert np.flatnonzero(apply(s, StateVector.basis(3, 0b110)).amplitudes).tolist() == [0b011]
    assert np.flatnonzero(apply(s, StateVector.basis(3, 0b100)).amplitudes).tolist() == [0b100]


@settings(max_examples=25, deadline=None)
@given(seed=st.integers(0, 2 ** 31))
def test_random_circuit_preserves_norm(seed):
    rng = np.random.default_rng(seed)
    n = 5
    gates = []
    for _ in range(30):
        kind = rng.choice(["H", "X", "RY", "SWAP"])
        qs = rng.permutation(n)
        targets = tuple(qs[:2]) if kind == "SWAP" else (qs[0],)
        ctrl = tuple((int(q), int(rng.integers(2))) for q in qs[len(targets):len(targets) + rng.integers(3)])
        gates.append(Gate(str(kind), targets, ctrl, float(rng.uniform(-3, 3)) if kind == "RY" else None))
    c = Circuit(RegisterLayout([("q", n)]), gates)
    psi = rng.standard_normal(2 ** n) + 1j * rng.standard_normal(2 ** n)
    psi /= np.linalg.norm(psi)
    out = apply(c, StateVector(n, psi))
    assert abs(out.norm - 1) < 1e-12
    back = apply(c.inverse(), out)
    np.testing.assert_allclose(back.amplitudes, psi, atol=1e-12)


def test_state_vector_shape_check():
    with pytest.raises(ValueError):
        StateVector(2, np.zeros(3))
    with pytest.raises(ValueError):
        apply(Circuit(RegisterLayout([("q", 2)])), StateVector.basis(3))


def test_encode_decode_roundtrip():
    model = make_model("D1Q3")
    rng = np.random.default_rng(1)
    field = DistributionField(model, (2,), rng.random((2, 3)))
    layout = relaxation_layout(model, (2,))
    state = lift(field)
    sv, norm = encode_carleman_state(state, layout)
    assert abs(sv.norm - 1) < 1e-14
    back = decode_carleman_state(sv, layout, norm)
    np.testing.assert_allclose(back.vector(), state.vector(), rtol=1e-14)


def test_encode_rejects_zero_and_oversize():
    model = make_model("D1Q3")
    layout = relaxation_layout(model, (2,))
    with pytest.raises(ValueError):
        encode_carleman_state(lift(DistributionField(model, (2,), np.zeros((2, 3)))), layout)
    big = relaxation_layout(make_model("D2Q9"), (16, 16))
    assert big.n_qubits > 26
    with pytest.raises(ResourceLimitError):
        extract_block(Circuit(big))


def test_post_select_probability():
    layout = RegisterLayout([("a", 1), ("m", 1), ("r", 1)])
    c = Circuit(layout, [Gate("H", (0,)), Gate("H", (1,))])
    res = post_select(apply(c, StateVector.basis(3, 1)), layout)
    assert res.probability == pytest.approx(0.25)
    np.testing.assert_allclose(np.abs(res.conditional_state.amplitudes), [0, 1])
    assert res.retained == ["r"]


def test_one_step_through_circuit():
    """Post-selected output equals the relaxation step applied to the lifted state."""
    model = make_model("D1Q3")
    system = build_relaxation(model, 1.1, (2,))
    field = DistributionField(model, (2,), np.random.default_rng(5).random((2, 3)))
    layout = relaxation_layout(model, (2,))
    sv, norm = encode_carleman_state(lift(field), layout)
    out = apply(assemble_block_encoding(system), sv)
    scale = norm * system.gamma * 2 ** layout.width("m")
    got = decode_carleman_state(out, layout, scale)
    np.testing.assert_allclose(got.vector(), system.R.matvec(lift(field).vector()), atol=1e-14)
    # streaming afterwards completes one Carleman step
    np.testing.assert_allclose(system.S.matvec(got.vector()), carleman_step(lift(field), system).vector(), atol=1e-14)


@pytest.mark.parametrize("omega", [0.3, 1.0, 1.7])
def test_success_probability_sim_vs_analytic(omega):
    model = make_model("D1Q3")
    field = DistributionField(model, (2,), np.random.default_rng(2).random((2, 3)))
    system = build_relaxation(model, omega, (2,))
    lazy = build_relaxation(model, omega, (2,), materialize=False)
    sim = success_probability_sim(assemble_block_encoding(system), field, omega)
    assert sim == pytest.approx(success_probability_analytic(system, field), rel=1e-12)
    assert sim == pytest.approx(success_probability_analytic(lazy, field), rel=1e-12)


def test_success_probability_omega_mismatch():
    model = make_model("D1Q3")
    system = build_relaxation(model, 1.0, (2,))
    with pytest.raises(ValueError):
        success_probability_sim(assemble_block_encoding(system), uniform_field(model, (2,)), 1.5)


def test_initial_fields():
    model = make_model("D2Q9")
    np.testing.assert_allclose(initial_field(model, (2, 2), "uniform").values, 1 / 9)
    np.testing.assert_allclose(initial_field(model, (2, 2), "equilibrium").values[0], model.w)
    with pytest.raises(ValueError):
        initial_field(model, (2, 2), "random")


def test_sweep_uses_simulation_when_possible():
    curve = sweep_omega(make_model("D1Q3"), (2,), "uniform", [0.5, 1.0], simulate=True)
    assert curve.methods == ["simulated", "simulated"]
    ana = sweep_omega(make_model("D1Q3"), (2,), "uniform", [0.5, 1.0])
    np.testing.assert_allclose(curve.probabilities, ana.probabilities, rtol=1e-12)


def test_sweep_falls_back_above_cap():
    messages = []
    curve = sweep_omega(make_model("D2Q9"), (16, 16), "uniform", [1.0], simulate=True, warn=messages.append)
    assert curve.methods == ["analytic"] and messages


def test_sweep_rejects_omega_two():
    with pytest.raises(ValueError):
        sweep_omega(make_model("D1Q3"), (2,), "uniform", [2.0])


def test_sweep_csv(tmp_path):
    curve = sweep_omega(make_model("D1Q3"), (4,), "equilibrium", [0.5, 1.5])
    path = tmp_path / "s.csv"
    curve.write_csv(path)
    lines = path.read_text().splitlines()
    assert lines[0] == "omega,p_s,init_kind,n_sites,method"
    assert lines[1].startswith("0.5,") and lines[1].endswith(",equilibrium,4,analytic")


def test_state_csv(tmp_path):
    path = tmp_path / "sv.csv"
    write_state_csv(StateVector.basis(2, 3), path)
    assert path.read_text().splitlines() == ["index,re,im", "3,1,0"]
