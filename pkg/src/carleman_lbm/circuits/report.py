"""Gate statistics under a fixed two-qubit cost model.

Cost model: a gate with k >= 1 controls costs 2k - 1 two-qubit gates (one
CNOT for k = 1, a work-qubit ladder for larger k).  Uncontrolled single-qubit
gates cost nothing, an uncontrolled SWAP costs 3 and a SWAP with k controls
costs 2 + (2(k + 1) - 1), i.e. CNOT, (k+1)-controlled X, CNOT.  Depth is the
number of layers in an as-soon-as-possible schedule where each gate occupies
all of its qubits for one layer.
"""
from __future__ import annotations

import csv
from collections import Counter
from dataclasses import dataclass, field

from .core import Circuit, Gate


def two_qubit_cost(gate: Gate) -> int:
    k = len(gate.controls)
    if gate.kind == "SWAP":
        return 3 if k == 0 else 2 + (2 * (k + 1) - 1)
    return 0 if k == 0 else 2 * k - 1


def circuit_depth(gates, n_qubits: int) -> int:
    level = [0] * n_qubits
    depth = 0
    for g in gates:
        layer = max(level[q] for q in g.qubits) + 1
        for q in g.qubits:
            level[q] = layer
        depth = max(depth, layer)
    return depth


@dataclass(frozen=True)
class GateCountReport:
    total: int
    by_kind: dict[str, int]
    by_arity: dict[int, int]
    two_qubit_estimate: int
    depth: int
    by_kind_two_qubit: dict[str, int] = field(default_factory=dict)


def gate_report(circuit: Circuit) -> GateCountReport:
    by_kind = Counter(g.kind for g in circuit.gates)
    by_arity = Counter(len(g.controls) for g in circuit.gates)
    kind_cost: Counter = Counter()
    for g in circuit.gates:
        kind_cost[g.kind] += two_qubit_cost(g)
    return GateCountReport(
        total=len(circuit.gates),
        by_kind=dict(sorted(by_kind.items())),
        by_arity=dict(sorted(by_arity.items())),
        two_qubit_estimate=sum(kind_cost.values()),
        depth=circuit_depth(circuit.gates, circuit.n_qubits),
        by_kind_two_qubit=dict(sorted(kind_cost.items())),
    )


def lower_zero_controls(circuit: Circuit) -> Circuit:
    """Replace each 0-control by a 1-control conjugated with X gates."""
    out = Circuit(circuit.layout, name=circuit.name, parameters=dict(circuit.parameters))
    for g in circuit.gates:
        zeros = [q for q, v in g.controls if v == 0]
        flips = [Gate("X", (q,)) for q in zeros]
        out.extend(flips)
        out.append(Gate(g.kind, g.targets, tuple((q, 1) for q, _ in g.controls), g.theta))
        out.extend(flips)
    return out


def write_count_table(rows, path) -> None:
    """Rows of (q_N, kind, count, two_qubit_estimate)."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["q_N", "kind", "count", "two_qubit_estimate"])
        for row in rows:
            writer.writerow(row)


def count_rows(q_n: int, circuit: Circuit, label: str) -> list[tuple]:
    """One row per gate kind plus a total row labelled ``label``."""
    rep = gate_report(circuit)
    rows = [(q_n, f"{label}:{kind}", count, rep.by_kind_two_qubit.get(kind, 0)) for kind, count in rep.by_kind.items()]
    rows.append((q_n, f"{label}:total", rep.total, rep.two_qubit_estimate))
    return rows
