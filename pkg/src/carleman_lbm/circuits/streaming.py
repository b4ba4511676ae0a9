"""Periodic streaming as controlled modular increments of the position registers."""
from __future__ import annotations

from ..lattice import LatticeModel
from .arith import decrement_gates, increment_gates
from .block_encoding import relaxation_layout
from .core import Circuit, Gate, RegisterLayout, value_controls


def _axis_slices(layout: RegisterLayout, name: str) -> list[list[int]]:
    qubits = layout.qubits(name)
    out, start = [], 0
    for bits in layout.axis_bits:
        out.append(qubits[start:start + bits])
        start += bits
    return out


def _move_gates(axis_registers, velocity, controls) -> list[Gate]:
    gates = []
    for reg, step in zip(axis_registers, velocity):
        if step == 0 or not reg:
            continue
        gates += increment_gates(reg, controls) if step > 0 else decrement_gates(reg, controls)
    return gates


def streaming_circuit(model: LatticeModel, grid_dims, *, pad: bool = False) -> Circuit:
    """x += c_p controlled on v1 = p; y += c_q controlled on tau = 1, v2 = q.

    Each axis is a separate sub-register, so wrap-around is exact only for
    power-of-two axis lengths.  ``pad=True`` accepts other lengths and
    streams on the enclosing power-of-two grid instead.
    """
    grid_dims = tuple(int(n) for n in grid_dims)
    for n in grid_dims:
        if n & (n - 1) and not pad:
            raise ValueError(f"axis length {n} is not a power of two; pass pad=True to stream on a padded grid")
    layout = relaxation_layout(model, grid_dims)
    x_axes = _axis_slices(layout, "x")
    y_axes = _axis_slices(layout, "y")
    tau = layout.qubits("tau")[0]
    v1 = layout.qubits("v1")
    v2 = layout.qubits("v2")
    gates: list[Gate] = []
    for p, cp in enumerate(model.velocities):
        gates += _move_gates(x_axes, cp, value_controls(v1, p))
    for q, cq in enumerate(model.velocities):
        gates += _move_gates(y_axes, cq, [(tau, 1)] + value_controls(v2, q))
    circuit = Circuit(layout, name="streaming", parameters={
        "model": model.name, "grid": "x".join(str(n) for n in grid_dims)})
    circuit.extend(gates)
    return circuit
