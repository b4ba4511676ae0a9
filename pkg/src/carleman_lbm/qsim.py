"""Dense statevector simulation, Carleman-state encoding and success probabilities."""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass

import numpy as np

from .carleman import CarlemanState, CarlemanSystem, build_relaxation, lift
from .circuits.block_encoding import assemble_block_encoding, encoded_basis_indices, relaxation_layout
from .circuits.core import Circuit, Gate, RegisterLayout
from .errors import ResourceLimitError
from .lattice import DistributionField, LatticeModel, uniform_field

MAX_SIM_QUBITS = 26
# amplitudes held at once by batched block extraction
BATCH_AMPLITUDE_BUDGET = 2 ** 24
_SQRT_HALF = math.sqrt(0.5)


@dataclass
class StateVector:
    n_qubits: int
    amplitudes: np.ndarray

    def __post_init__(self):
        self.amplitudes = np.asarray(self.amplitudes, dtype=complex)
        if self.amplitudes.shape != (2 ** self.n_qubits,):
            raise ValueError(f"expected {2 ** self.n_qubits} amplitudes, got shape {self.amplitudes.shape}")

    @classmethod
    def basis(cls, n_qubits: int, index: int = 0) -> "StateVector":
        amps = np.zeros(2 ** n_qubits, dtype=complex)
        amps[index] = 1.0
        return cls(n_qubits, amps)

    @property
    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))

    def copy(self) -> "StateVector":
        return StateVector(self.n_qubits, self.amplitudes.copy())


def _apply_gate(tensor: np.ndarray, gate: Gate) -> None:
    """Apply one gate in place to a (2,)*n + (batch,) tensor view."""
    index: list = [slice(None)] * tensor.ndim
    for q, v in gate.controls:
        index[q] = v
    ctrl_before = lambda t: sum(1 for q, _ in gate.controls if q < t)  # noqa: E731
    sub = tensor[tuple(index)]
    if gate.kind == "SWAP":
        t1, t2 = (t - ctrl_before(t) for t in gate.targets)
        i01 = [slice(None)] * sub.ndim
        i10 = [slice(None)] * sub.ndim
        i01[t1], i01[t2] = 0, 1
        i10[t1], i10[t2] = 1, 0
        tmp = sub[tuple(i01)].copy()
        sub[tuple(i01)] = sub[tuple(i10)]
        sub[tuple(i10)] = tmp
        return
    t = gate.targets[0] - ctrl_before(gate.targets[0])
    i0 = [slice(None)] * sub.ndim
    i1 = [slice(None)] * sub.ndim
    i0[t], i1[t] = 0, 1
    i0, i1 = tuple(i0), tuple(i1)
    a0 = sub[i0].copy()
    a1 = sub[i1]
    if gate.kind == "X":
        sub[i0] = a1
        sub[i1] = a0
    elif gate.kind == "H":
        sub[i0] = (a0 + a1) * _SQRT_HALF
        sub[i1] = (a0 - a1) * _SQRT_HALF
    elif gate.kind == "RY":
        c, s = math.cos(gate.theta / 2), math.sin(gate.theta / 2)
        new1 = s * a0 + c * a1
        sub[i0] = c * a0 - s * a1
        sub[i1] = new1
    else:
        raise ValueError(f"unsupported gate kind {gate.kind}")


def apply_gates(amplitudes: np.ndarray, gates, n_qubits: int) -> np.ndarray:
    """Apply ``gates`` in place to a (2^n,) or (2^n, batch) array and return it."""
    batch = amplitudes.shape[1] if amplitudes.ndim == 2 else 1
    if amplitudes.shape[0] != 2 ** n_qubits:
        raise ValueError(f"array has {amplitudes.shape[0]} rows, expected {2 ** n_qubits}")
    tensor = amplitudes.reshape([2] * n_qubits + [batch])
    for gate in gates:
        for q in gate.qubits:
            if not 0 <= q < n_qubits:
                raise ValueError(f"gate touches qubit {q} outside a {n_qubits}-qubit state")
        _apply_gate(tensor, gate)
    return amplitudes


def permute_basis(circuit: Circuit, indices) -> np.ndarray:
    """Images of computational basis states under an X/SWAP-only circuit.

    Tracks bit strings instead of amplitudes, so it scales to any qubit count.
    """
    n = circuit.n_qubits
    idx = np.array(indices, dtype=np.int64, copy=True)
    bit = lambda q: (idx >> (n - 1 - q)) & 1  # noqa: E731
    for gate in circuit.gates:
        if gate.kind not in ("X", "SWAP"):
            raise ValueError(f"{gate.kind} does not map basis states to basis states")
        active = np.ones(idx.shape, dtype=bool)
        for q, v in gate.controls:
            active &= bit(q) == v
        if gate.kind == "X":
            idx ^= active.astype(np.int64) << (n - 1 - gate.targets[0])
        else:
            t1, t2 = gate.targets
            differ = active & (bit(t1) != bit(t2))
            idx ^= (differ.astype(np.int64) << (n - 1 - t1)) | (differ.astype(np.int64) << (n - 1 - t2))
    return idx


def apply(circuit: Circuit, state: StateVector) -> StateVector:
    if state.n_qubits != circuit.n_qubits:
        raise ValueError(f"circuit has {circuit.n_qubits} qubits, state has {state.n_qubits}")
    out = state.copy()
    apply_gates(out.amplitudes, circuit.gates, circuit.n_qubits)
    return out


def _check_budget(n_qubits: int) -> None:
    if n_qubits > MAX_SIM_QUBITS:
        raise ResourceLimitError(
            f"{n_qubits} qubits need {16 * 2 ** n_qubits / 2 ** 30:.1f} GiB of amplitudes; "
            f"the simulator cap is {MAX_SIM_QUBITS} qubits")


def _check_layout(layout: RegisterLayout, model: LatticeModel, grid_dims) -> None:
    if layout.model is None or layout.model.name != model.name or tuple(layout.grid_dims) != tuple(grid_dims):
        raise ValueError("layout does not describe this model and grid")


def encode_carleman_state(state: CarlemanState, layout: RegisterLayout) -> tuple[StateVector, float]:
    """Normalised amplitudes at the register positions of each Carleman entry."""
    vec = state.vector()
    indices = encoded_basis_indices(layout)
    if vec.shape[0] != indices.shape[0]:
        raise ValueError(f"state has {vec.shape[0]} entries, layout encodes {indices.shape[0]}")
    _check_budget(layout.n_qubits)
    norm = float(np.linalg.norm(vec))
    if norm == 0.0:
        raise ValueError("cannot encode the zero state")
    amps = np.zeros(2 ** layout.n_qubits, dtype=complex)
    amps[indices] = vec / norm
    return StateVector(layout.n_qubits, amps), norm


def decode_carleman_state(sv: StateVector, layout: RegisterLayout, norm: float = 1.0) -> CarlemanState:
    indices = encoded_basis_indices(layout)
    vec = sv.amplitudes[indices].real * norm
    b = layout.model.velocity_count
    split = b * math.prod(layout.grid_dims)
    return CarlemanState(vec[:split].copy(), vec[split:].copy())


@dataclass
class PostSelectResult:
    probability: float
    conditional_state: StateVector | None
    retained: list[str]


def post_select(sv: StateVector, layout: RegisterLayout, registers=("a", "m")) -> PostSelectResult:
    """Project ``registers`` onto |0...0> and renormalise the remainder."""
    fixed = [q for name in registers for q in layout.qubits(name)]
    tensor = sv.amplitudes.reshape([2] * sv.n_qubits)
    index = [slice(None)] * sv.n_qubits
    for q in fixed:
        index[q] = 0
    kept = tensor[tuple(index)].reshape(-1)
    prob = float(np.vdot(kept, kept).real)
    retained = [r.name for r in layout.registers if r.name not in registers]
    n_kept = sv.n_qubits - len(fixed)
    state = StateVector(n_kept, kept / math.sqrt(prob)) if prob > 0 else None
    return PostSelectResult(prob, state, retained)


def extract_block(circuit: Circuit, layout: RegisterLayout | None = None, columns=None) -> np.ndarray:
    """Dense a = m = 0 block of the circuit on the encoded Carleman subspace.

    Column j is the image of the j-th encoded basis state; row i reads the
    same encoding with ancillas projected onto |0>.  The generated gate set
    is real (H, X, RY, SWAP), so the columns are propagated in float64.
    ``columns`` restricts the extraction to selected Carleman indices.
    """
    layout = layout or circuit.layout
    _check_budget(layout.n_qubits)
    indices = encoded_basis_indices(layout)
    dim = indices.shape[0]
    wanted = np.arange(dim) if columns is None else np.asarray(columns, dtype=np.int64)
    batch = max(1, BATCH_AMPLITUDE_BUDGET // 2 ** layout.n_qubits)
    block = np.zeros((dim, wanted.shape[0]))
    for start in range(0, wanted.shape[0], batch):
        cols = indices[wanted[start:start + batch]]
        amps = np.zeros((2 ** layout.n_qubits, cols.shape[0]))
        amps[cols, np.arange(cols.shape[0])] = 1.0
        apply_gates(amps, circuit.gates, layout.n_qubits)
        block[:, start:start + cols.shape[0]] = amps[indices]
    return block


def _validate_field(field: DistributionField, system: CarlemanSystem) -> None:
    if field.model.name != system.model.name or field.grid_dims != system.grid_dims:
        raise ValueError("input field and system describe different lattices")


def success_probability_sim(circuit: Circuit, field: DistributionField, omega: float | None = None) -> float:
    """Probability that a and m all read 0 after the block-encoding circuit."""
    if omega is not None and "omega" in circuit.parameters and float(circuit.parameters["omega"]) != float(omega):
        raise ValueError(f"circuit was built for omega={circuit.parameters['omega']}, not {omega}")
    layout = circuit.layout
    _check_layout(layout, field.model, field.grid_dims)
    sv, _ = encode_carleman_state(lift(field), layout)
    out = apply(circuit, sv)
    return post_select(out, layout).probability


def m_register_width(model: LatticeModel) -> int:
    b = model.velocity_count
    return math.ceil(math.log2(b * b))


def success_probability_analytic(system: CarlemanSystem, field: DistributionField) -> float:
    """||(R/gamma) psi||^2 / 2^(2m) for the normalised lifted input psi.

    Uses the assembled R when available.  Otherwise the product structure of
    a lifted field gives the same number in O(N b^2): the first-order output
    is A f(x) + B (f(x) (x) f(x)) per site and the second-order output norm
    factorises as (sum_x ||A f(x)||^2)^2.
    """
    _validate_field(field, system)
    m = m_register_width(system.model)
    scale = system.gamma ** 2 * 4.0 ** m
    if system.materialized:
        psi = lift(field).vector()
        out = system.R.matvec(psi)
        return float(out @ out / (psi @ psi) / scale)
    f = field.values
    A = system.A.to_dense()
    B = system.B.to_dense()
    af = f @ A.T
    first = af + np.einsum("xq,xr->xqr", f, f).reshape(f.shape[0], -1) @ B.T
    s1 = float(np.sum(f * f))
    numerator = float(np.sum(first * first)) + float(np.sum(af * af)) ** 2
    return numerator / (s1 + s1 * s1) / scale


def initial_field(model: LatticeModel, grid_dims, init_kind: str) -> DistributionField:
    if init_kind == "uniform":
        return uniform_field(model, grid_dims, np.full(model.velocity_count, 1.0 / model.velocity_count))
    if init_kind == "equilibrium":
        return uniform_field(model, grid_dims)
    raise ValueError(f"init_kind must be 'uniform' or 'equilibrium', got {init_kind!r}")


@dataclass
class SuccessCurve:
    omegas: list[float]
    probabilities: list[float]
    init_kind: str
    n_sites: int
    methods: list[str]

    def argmax(self) -> float:
        return self.omegas[int(np.argmax(self.probabilities))]

    def write_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["omega", "p_s", "init_kind", "n_sites", "method"])
            for om, p, meth in zip(self.omegas, self.probabilities, self.methods):
                writer.writerow([format(om, ".17g"), format(p, ".17g"), self.init_kind, self.n_sites, meth])


def sweep_omega(model: LatticeModel, grid_dims, init_kind: str, omegas, *, simulate: bool = False,
                warn=None) -> SuccessCurve:
    """p_s(omega) for a uniform field, analytic by default.

    With ``simulate=True`` the circuit is simulated wherever the layout fits
    the qubit cap; other points fall back to the analytic value and
    ``warn`` (if given) is called with a message.
    """
    grid_dims = tuple(int(n) for n in grid_dims)
    omegas = [float(o) for o in omegas]
    for om in omegas:
        if not 0.0 < om < 2.0:
            raise ValueError(f"omega {om} outside (0, 2)")
    field = initial_field(model, grid_dims, init_kind)
    can_simulate = simulate and relaxation_layout(model, grid_dims).n_qubits <= MAX_SIM_QUBITS
    if simulate and not can_simulate and warn is not None:
        warn(f"{model.name} on {grid_dims} exceeds the {MAX_SIM_QUBITS}-qubit cap; using analytic p_s")
    probs, methods = [], []
    for om in omegas:
        system = build_relaxation(model, om, grid_dims, materialize=False)
        if can_simulate:
            probs.append(success_probability_sim(assemble_block_encoding(system), field))
            methods.append("simulated")
        else:
            probs.append(success_probability_analytic(system, field))
            methods.append("analytic")
    return SuccessCurve(omegas, probs, init_kind, math.prod(grid_dims), methods)


def write_state_csv(sv: StateVector, path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["index", "re", "im"])
        for i in np.flatnonzero(sv.amplitudes):
            a = sv.amplitudes[i]
            writer.writerow([int(i), format(a.real, ".17g"), format(a.imag, ".17g")])
