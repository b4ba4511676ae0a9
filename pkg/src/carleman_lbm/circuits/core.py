"""Gate lists over named registers, with text and JSON serialisation.

Qubit 0 is the most significant bit of a basis-state index, and registers
are laid out in declaration order, so a register's value reads MSB first.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

GATE_KINDS = ("H", "X", "RY", "SWAP")


@dataclass(frozen=True)
class Register:
    name: str
    offset: int
    width: int

    @property
    def qubits(self) -> list[int]:
        return list(range(self.offset, self.offset + self.width))


class RegisterLayout:
    """Ordered named registers; optional lattice metadata for encodings."""

    def __init__(self, widths, model=None, grid_dims=None, axis_bits=None):
        self._registers: dict[str, Register] = {}
        offset = 0
        for name, width in widths:
            if name in self._registers:
                raise ValueError(f"duplicate register {name!r}")
            if width < 0:
                raise ValueError(f"register {name!r} has negative width")
            self._registers[name] = Register(name, offset, int(width))
            offset += int(width)
        self.n_qubits = offset
        self.model = model
        self.grid_dims = tuple(grid_dims) if grid_dims is not None else None
        self.axis_bits = tuple(axis_bits) if axis_bits is not None else None

    def __getitem__(self, name: str) -> Register:
        return self._registers[name]

    def __contains__(self, name: str) -> bool:
        return name in self._registers

    @property
    def registers(self) -> list[Register]:
        return list(self._registers.values())

    def qubits(self, name: str) -> list[int]:
        return self._registers[name].qubits

    def width(self, name: str) -> int:
        return self._registers[name].width

    def widths(self) -> list[tuple[str, int]]:
        return [(r.name, r.width) for r in self._registers.values()]

    def __eq__(self, other):
        return isinstance(other, RegisterLayout) and self.widths() == other.widths()

    def __repr__(self):
        body = ", ".join(f"{n}({w})" for n, w in self.widths())
        return f"RegisterLayout({body}; {self.n_qubits} qubits)"


def value_controls(qubits, value: int) -> list[tuple[int, int]]:
    """Controls requiring ``qubits`` (MSB first) to hold ``value``."""
    width = len(qubits)
    if not 0 <= value < 2 ** width:
        raise ValueError(f"value {value} does not fit in {width} qubits")
    return [(q, (value >> (width - 1 - i)) & 1) for i, q in enumerate(qubits)]


def range_controls(qubits, lo: int, hi: int) -> list[list[tuple[int, int]]]:
    """Split [lo, hi) into aligned blocks, each matched by a prefix pattern."""
    width = len(qubits)
    patterns = []
    while lo < hi:
        size = lo & -lo if lo else 2 ** width
        while lo + size > hi:
            size //= 2
        fixed = width - int(math.log2(size))
        prefix = lo >> (width - fixed)
        patterns.append(value_controls(qubits[:fixed], prefix) if fixed else [])
        lo += size
    return patterns


@dataclass(frozen=True)
class Gate:
    kind: str
    targets: tuple[int, ...]
    controls: tuple[tuple[int, int], ...] = ()
    theta: float | None = None

    def __post_init__(self):
        if self.kind not in GATE_KINDS:
            raise ValueError(f"unknown gate kind {self.kind!r}")
        object.__setattr__(self, "targets", tuple(int(t) for t in self.targets))
        object.__setattr__(self, "controls", tuple((int(q), int(v)) for q, v in self.controls))
        n_targets = 2 if self.kind == "SWAP" else 1
        if len(self.targets) != n_targets or len(set(self.targets)) != n_targets:
            raise ValueError(f"{self.kind} needs {n_targets} distinct target(s), got {self.targets}")
        ctrl_qubits = [q for q, _ in self.controls]
        if len(set(ctrl_qubits)) != len(ctrl_qubits):
            raise ValueError("a qubit appears twice among the controls")
        if set(ctrl_qubits) & set(self.targets):
            raise ValueError("targets and controls overlap")
        if any(v not in (0, 1) for _, v in self.controls):
            raise ValueError("control values must be 0 or 1")
        if self.kind == "RY":
            if self.theta is None or not math.isfinite(self.theta):
                raise ValueError("RY needs a finite angle")
        elif self.theta is not None:
            raise ValueError(f"{self.kind} takes no angle")

    @property
    def qubits(self) -> tuple[int, ...]:
        return self.targets + tuple(q for q, _ in self.controls)

    def inverse(self) -> "Gate":
        if self.kind == "RY":
            return Gate("RY", self.targets, self.controls, -self.theta)
        return self

    def with_controls(self, extra) -> "Gate":
        return Gate(self.kind, self.targets, tuple(self.controls) + tuple(extra), self.theta)

    def to_text(self) -> str:
        parts = [self.kind, ",".join(str(t) for t in self.targets)]
        if self.controls:
            parts.append("ctrl=" + ";".join(f"{q}:{v}" for q, v in self.controls))
        if self.theta is not None:
            parts.append(f"theta={self.theta!r}")
        return " ".join(parts)

    @classmethod
    def from_text(cls, line: str) -> "Gate":
        fields = line.split()
        if len(fields) < 2:
            raise ValueError(f"malformed gate line {line!r}")
        kind, targets = fields[0], tuple(int(t) for t in fields[1].split(","))
        controls, theta = (), None
        for item in fields[2:]:
            key, _, val = item.partition("=")
            if key == "ctrl":
                controls = tuple(tuple(int(x) for x in c.split(":")) for c in val.split(";") if c)
            elif key == "theta":
                theta = float(val)
            else:
                raise ValueError(f"unknown gate field {key!r}")
        return cls(kind, targets, controls, theta)

    def to_dict(self) -> dict:
        out = {"kind": self.kind, "targets": list(self.targets), "controls": [list(c) for c in self.controls]}
        if self.theta is not None:
            out["theta"] = self.theta
        return out

    @classmethod
    def from_dict(cls, data: dict) -> "Gate":
        return cls(data["kind"], tuple(data["targets"]), tuple(tuple(c) for c in data.get("controls", ())),
                   data.get("theta"))


@dataclass
class Circuit:
    layout: RegisterLayout
    gates: list[Gate] = field(default_factory=list)
    name: str = "circuit"
    parameters: dict = field(default_factory=dict)

    def append(self, gate: Gate) -> None:
        for q in gate.qubits:
            if not 0 <= q < self.layout.n_qubits:
                raise ValueError(f"qubit {q} outside a {self.layout.n_qubits}-qubit layout")
        self.gates.append(gate)

    def extend(self, gates) -> None:
        for g in gates:
            self.append(g)

    def __len__(self):
        return len(self.gates)

    def __iter__(self):
        return iter(self.gates)

    @property
    def n_qubits(self) -> int:
        return self.layout.n_qubits

    def inverse(self) -> "Circuit":
        return Circuit(self.layout, [g.inverse() for g in reversed(self.gates)], self.name + "_inv",
                       dict(self.parameters))

    def to_text(self) -> str:
        lines = [f"# circuit {self.name}", f"# qubits {self.n_qubits}"]
        for key, val in self.parameters.items():
            lines.append(f"# param {key}={val}")
        for reg in self.layout.registers:
            lines.append(f"# register {reg.name} {reg.offset} {reg.width}")
        lines.extend(g.to_text() for g in self.gates)
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text: str) -> "Circuit":
        widths, gates, name, params = [], [], "circuit", {}
        for raw in text.splitlines():
            line = raw.strip()
            if not line:
                continue
            if line.startswith("#"):
                words = line[1:].split(None, 1)
                if not words:
                    continue
                if words[0] == "register":
                    rname, _offset, width = words[1].split()
                    widths.append((rname, int(width)))
                elif words[0] == "circuit":
                    name = words[1]
                elif words[0] == "param":
                    key, _, val = words[1].partition("=")
                    params[key] = val
                continue
            gates.append(Gate.from_text(line))
        circuit = cls(RegisterLayout(widths), name=name, parameters=params)
        circuit.extend(gates)
        return circuit

    def to_json(self) -> str:
        data = {
            "name": self.name,
            "parameters": {k: (v if isinstance(v, (int, float, str, bool)) or v is None else str(v))
                           for k, v in self.parameters.items()},
            "registers": [{"name": r.name, "offset": r.offset, "width": r.width} for r in self.layout.registers],
            "gates": [g.to_dict() for g in self.gates],
        }
        return json.dumps(data, indent=1)

    @classmethod
    def from_json(cls, text: str) -> "Circuit":
        data = json.loads(text)
        layout = RegisterLayout([(r["name"], r["width"]) for r in data["registers"]])
        circuit = cls(layout, name=data.get("name", "circuit"), parameters=data.get("parameters", {}))
        circuit.extend(Gate.from_dict(g) for g in data["gates"])
        return circuit
