"""Reversible arithmetic on registers: modular increments, permutations, equality."""
from __future__ import annotations

from .core import Circuit, Gate, RegisterLayout


def increment_gates(qubits, controls=()) -> list[Gate]:
    """|k> -> |k + 1 mod 2^w> on ``qubits`` (MSB first).

    Bit i flips when every less significant bit is 1; the most significant
    bit is handled first so it still sees the old lower bits.
    """
    qubits = list(qubits)
    gates = []
    for i, q in enumerate(qubits):
        lower = [(p, 1) for p in qubits[i + 1:]]
        gates.append(Gate("X", (q,), tuple(lower) + tuple(controls)))
    return gates


def decrement_gates(qubits, controls=()) -> list[Gate]:
    return list(reversed(increment_gates(qubits, controls)))


def add_constant_gates(qubits, n: int, controls=()) -> list[Gate]:
    """|k> -> |k + n mod 2^w> as a cascade of power-of-two increments."""
    qubits = list(qubits)
    w = len(qubits)
    n %= 2 ** w
    gates = []
    for j in range(w):
        if (n >> j) & 1:
            # adding 2^j increments the register formed by the top w - j bits
            gates.extend(increment_gates(qubits[: w - j], controls))
    return gates


def shift_operator(width: int, n: int) -> Circuit:
    """Circuit on a single register ``r`` mapping |k> to |k + n mod 2^width>."""
    if width < 1:
        raise ValueError("register width must be at least 1")
    if not 0 <= n < 2 ** width:
        raise ValueError(f"shift {n} outside [0, {2 ** width})")
    layout = RegisterLayout([("r", width)])
    circuit = Circuit(layout, name=f"shift_{n}", parameters={"width": width, "n": n})
    circuit.extend(add_constant_gates(layout.qubits("r"), n))
    return circuit


def transposition_gates(qubits, a: int, b: int, controls=()) -> list[Gate]:
    """Swap basis values ``a`` and ``b`` of a register, everything else fixed.

    A pivot bit t where a and b differ steers the other differing bits of b
    onto a's values (only for states whose pivot matches b), after which a
    single multi-controlled X on the pivot exchanges the pair.  The steering
    layer is its own inverse and needs no external controls.
    """
    if a == b:
        return []
    qubits = list(qubits)
    w = len(qubits)
    bit = lambda v, i: (v >> (w - 1 - i)) & 1  # noqa: E731
    diff = [i for i in range(w) if bit(a, i) != bit(b, i)]
    t = diff[0]
    steer = [Gate("X", (qubits[i],), ((qubits[t], bit(b, t)),)) for i in diff[1:]]
    others = tuple((qubits[i], bit(a, i)) for i in range(w) if i != t)
    swap = Gate("X", (qubits[t],), others + tuple(controls))
    return steer + [swap] + steer


def permutation_gates(qubits, perm, controls=()) -> list[Gate]:
    """Apply |v> -> |perm[v]> for v in perm's domain (a bijection onto itself)."""
    perm = dict(perm)
    if sorted(perm) != sorted(perm.values()):
        raise ValueError("permutation must map its domain onto itself")
    gates, seen = [], set()
    for start in sorted(perm):
        if start in seen:
            continue
        cycle, v = [], start
        while v not in seen:
            seen.add(v)
            cycle.append(v)
            v = perm[v]
        # c0 -> c1 -> ... -> c_{L-1} -> c0 as transpositions (c0 c1), (c0 c2), ...
        for other in cycle[1:]:
            gates.extend(transposition_gates(qubits, cycle[0], other, controls))
    return gates


def cyclic_shift_gates(qubits, modulus: int, n: int, controls=()) -> list[Gate]:
    """|v> -> |v + n mod modulus> for v < modulus; padding values untouched."""
    if modulus > 2 ** len(qubits):
        raise ValueError("modulus does not fit the register")
    n %= modulus
    if n == 0:
        return []
    if modulus == 2 ** len(qubits):
        return add_constant_gates(qubits, n, controls)
    return permutation_gates(qubits, {v: (v + n) % modulus for v in range(modulus)}, controls)


def comparator_gates(x_qubits, y_qubits, eq_qubit: int) -> list[Gate]:
    """eq ^= [x == y] via y ^= x, a zero test on y, and y ^= x again."""
    if len(x_qubits) != len(y_qubits):
        raise ValueError("x and y must have equal width")
    xor = [Gate("X", (yq,), ((xq, 1),)) for xq, yq in zip(x_qubits, y_qubits)]
    test = Gate("X", (eq_qubit,), tuple((yq, 0) for yq in y_qubits))
    return xor + [test] + xor


def comparator(width: int) -> Circuit:
    """Equality test on registers x, y of ``width`` qubits into ``eq``."""
    if width < 0:
        raise ValueError("width must be non-negative")
    layout = RegisterLayout([("x", width), ("y", width), ("eq", 1)])
    circuit = Circuit(layout, name="comparator", parameters={"q_N": width})
    circuit.extend(comparator_gates(layout.qubits("x"), layout.qubits("y"), layout.qubits("eq")[0]))
    return circuit

