"""Block encoding of the Carleman relaxation matrix R_N.

Registers (in qubit order): a, m, tau, v1, v2, x, y, eq.

* first-order data f_p(x) lives at tau=0, v1=p, v2=0, x, y=0;
* second-order data f_p(x) f_q(y) lives at tau=1, v1=p, v2=q, x, y.

Inside the circuit the first-order states are rewritten to y = x, so that
every first-order state carries eq = 1 and the locality selector of the
quadratic block becomes a test on eq alone.  The circuit enumerates, for
each column, its non-zero rows over the slots n of the m register:

* slot n = n1*b + n2 < b^2 shifts v1 by n1 and (for tau=1) v2 by n2, then
  for eq=1 swaps (tau, v2) = (0, 0) with (1, 2*n2 mod b).  Column (q, r) of
  the second-order block therefore reaches row (q+n1, r+n2) of A (x) A, or,
  when r = n2 and x = y, the first-order row q+n1 through B;
* slot b^2 + k shifts v1 by k and doubles v2 (for tau=1).  It supplies the
  first-order columns of A and the A (x) A rows (q+k, 2r) on the diagonal
  x = y that the shift slots handed to B.

For a fixed slot the combined map is a permutation, so the sequence
H^m, O_v, O_x, H^m post-selected on a = m = 0 yields R_N / (gamma 2^m).
All value rotations depend on (slot, tau, v1, v2, eq) only, never on x or y.
"""
from __future__ import annotations

import math

import numpy as np

from ..carleman import CarlemanSystem
from ..lattice import LatticeModel
from .arith import comparator_gates, cyclic_shift_gates, permutation_gates
from .core import Circuit, Gate, RegisterLayout, range_controls, value_controls


def axis_bits(grid_dims) -> list[int]:
    return [max(0, math.ceil(math.log2(n))) for n in grid_dims]


def relaxation_layout(model: LatticeModel, grid_dims) -> RegisterLayout:
    b = model.velocity_count
    w = math.ceil(math.log2(b))
    m = math.ceil(math.log2(b * b))
    if b * b + b > 2 ** m:
        raise ValueError(f"{b * b + b} slots do not fit an m register of {m} qubits")
    bits = axis_bits(grid_dims)
    site_bits = sum(bits)
    widths = [("a", 1), ("m", m), ("tau", 1), ("v1", w), ("v2", w), ("x", site_bits), ("y", site_bits), ("eq", 1)]
    return RegisterLayout(widths, model=model, grid_dims=grid_dims, axis_bits=bits)


def slot_count(model: LatticeModel) -> int:
    b = model.velocity_count
    return b * b + b


class _RotationEmitter:
    def __init__(self, target: int, gamma: float):
        self.target = target
        self.gamma = gamma
        self.gates: list[Gate] = []

    def emit(self, value: float, controls) -> None:
        ratio = value / self.gamma
        if abs(ratio) > 1.0 + 1e-12:
            raise ValueError(f"entry {value} exceeds gamma {self.gamma}")
        ratio = min(1.0, max(-1.0, ratio))
        if ratio == 1.0:
            return
        if value == 0.0:
            self.gates.append(Gate("X", (self.target,), tuple(controls)))
        else:
            self.gates.append(Gate("RY", (self.target,), tuple(controls), 2.0 * math.acos(ratio)))


def value_oracle(system: CarlemanSystem, layout: RegisterLayout | None = None) -> Circuit:
    """Rotations on ``a`` giving each (slot, column) pair its matrix value."""
    model = system.model
    layout = layout or relaxation_layout(model, system.grid_dims)
    b = model.velocity_count
    A = system.A.to_dense()
    Bm = system.B.to_dense()
    m_q = layout.qubits("m")
    tau = layout.qubits("tau")[0]
    v1 = layout.qubits("v1")
    v2 = layout.qubits("v2")
    eq = layout.qubits("eq")[0]
    out = _RotationEmitter(layout.qubits("a")[0], system.gamma)

    # first-order columns never produce a row in the shift slots
    for pattern in range_controls(m_q, 0, b * b):
        out.emit(0.0, pattern + [(tau, 0)])
    for n in range(b * b):
        n1, n2 = divmod(n, b)
        slot = value_controls(m_q, n)
        for q in range(b):
            col_q = value_controls(v1, q)
            a_q = A[(q + n1) % b, q]
            for r in range(b):
                ctrl = slot + [(tau, 1)] + col_q + value_controls(v2, r)
                second = a_q * A[(r + n2) % b, r]
                if r != n2:
                    out.emit(second, ctrl)
                    continue
                coupling = Bm[(q + n1) % b, q * b + r]
                if coupling == second:
                    out.emit(second, ctrl)
                else:
                    out.emit(second, ctrl + [(eq, 0)])
                    out.emit(coupling, ctrl + [(eq, 1)])
    # the extra slots only act on the diagonal x = y
    for pattern in range_controls(m_q, b * b, b * b + b):
        out.emit(0.0, pattern + [(eq, 0)])
    for k in range(b):
        slot = value_controls(m_q, b * b + k)
        for q in range(b):
            col_q = value_controls(v1, q)
            a_q = A[(q + k) % b, q]
            out.emit(a_q, slot + [(tau, 0)] + col_q + [(eq, 1)])
            for r in range(b):
                out.emit(a_q * A[(2 * r) % b, r], slot + [(tau, 1)] + col_q + value_controls(v2, r) + [(eq, 1)])
    for pattern in range_controls(m_q, b * b + b, 2 ** len(m_q)):
        out.emit(0.0, pattern)
    circuit = Circuit(layout, name="value_oracle", parameters=_params(system))
    circuit.extend(out.gates)
    return circuit


def set_operator_gates(layout: RegisterLayout, c: int, controls) -> list[Gate]:
    """Swap (tau, v2) = (0, 0) with (1, c), conditioned on ``controls``."""
    tau = layout.qubits("tau")[0]
    v2 = layout.qubits("v2")
    w = len(v2)
    steer = [Gate("X", (v2[i],), ((tau, 1),)) for i in range(w) if (c >> (w - 1 - i)) & 1]
    flip = Gate("X", (tau,), tuple(value_controls(v2, 0)) + tuple(controls))
    return steer + [flip] + steer


def position_oracle(system: CarlemanSystem, layout: RegisterLayout | None = None) -> Circuit:
    """Permutation taking each column state to the row of its slot."""
    model = system.model
    layout = layout or relaxation_layout(model, system.grid_dims)
    b = model.velocity_count
    m_q = layout.qubits("m")
    tau = layout.qubits("tau")[0]
    v1 = layout.qubits("v1")
    v2 = layout.qubits("v2")
    eq = layout.qubits("eq")[0]
    gates: list[Gate] = []
    for n in range(b * b):
        n1, n2 = divmod(n, b)
        slot = value_controls(m_q, n)
        gates += cyclic_shift_gates(v1, b, n1, slot)
        gates += cyclic_shift_gates(v2, b, n2, slot + [(tau, 1)])
        gates += set_operator_gates(layout, (2 * n2) % b, slot + [(eq, 1)])
    doubling = {r: (2 * r) % b for r in range(b)}
    for k in range(b):
        slot = value_controls(m_q, b * b + k)
        gates += cyclic_shift_gates(v1, b, k, slot)
        gates += permutation_gates(v2, doubling, slot + [(tau, 1)])
    circuit = Circuit(layout, name="position_oracle", parameters=_params(system))
    circuit.extend(gates)
    return circuit


def diagonal_frame_gates(layout: RegisterLayout) -> list[Gate]:
    """y ^= x on first-order states (tau = 0); an involution."""
    tau = layout.qubits("tau")[0]
    return [Gate("X", (yq,), ((xq, 1), (tau, 0))) for xq, yq in zip(layout.qubits("x"), layout.qubits("y"))]


def assemble_block_encoding(system: CarlemanSystem) -> Circuit:
    """Unitary whose a = m = 0 block on the encoded subspace is R_N / (gamma 2^m)."""
    layout = relaxation_layout(system.model, system.grid_dims)
    frame = diagonal_frame_gates(layout)
    compare = comparator_gates(layout.qubits("x"), layout.qubits("y"), layout.qubits("eq")[0])
    hadamards = [Gate("H", (q,)) for q in layout.qubits("m")]
    circuit = Circuit(layout, name="relaxation_block_encoding", parameters=_params(system))
    circuit.extend(frame + compare + hadamards)
    circuit.extend(value_oracle(system, layout).gates)
    circuit.extend(position_oracle(system, layout).gates)
    circuit.extend(hadamards + compare + frame)
    return circuit


def _params(system: CarlemanSystem) -> dict:
    return {
        "model": system.model.name,
        "omega": system.omega,
        "grid": "x".join(str(n) for n in system.grid_dims),
        "gamma": system.gamma,
        "b_form": system.b_form,
    }


def encoded_register_values(layout: RegisterLayout) -> dict[str, np.ndarray]:
    """Register contents (tau, v1, v2, x, y) for every Carleman index."""
    model = layout.model
    b = model.velocity_count
    dims = layout.grid_dims
    n = math.prod(dims)
    coords = np.unravel_index(np.arange(n), dims)
    xreg = np.zeros(n, dtype=np.int64)
    for axis, bits in enumerate(layout.axis_bits):
        xreg = (xreg << bits) | coords[axis]
    p1 = np.repeat(np.arange(b), n)
    x1 = np.tile(np.arange(n), b)
    P, Q, X, Y = (a.ravel() for a in np.meshgrid(np.arange(b), np.arange(b), np.arange(n), np.arange(n), indexing="ij"))
    return {
        "tau": np.concatenate([np.zeros(b * n, dtype=np.int64), np.ones(b * b * n * n, dtype=np.int64)]),
        "v1": np.concatenate([p1, P]),
        "v2": np.concatenate([np.zeros(b * n, dtype=np.int64), Q]),
        "x": np.concatenate([xreg[x1], xreg[X]]),
        "y": np.concatenate([np.zeros(b * n, dtype=np.int64), xreg[Y]]),
    }


def encoded_basis_indices(layout: RegisterLayout) -> np.ndarray:
    """Full basis index of each Carleman coordinate, other registers at 0."""
    vals = encoded_register_values(layout)
    index = np.zeros_like(vals["tau"])
    for reg in layout.registers:
        shift = layout.n_qubits - reg.offset - reg.width
        if reg.name in vals:
            index |= vals[reg.name] << shift
    return index
