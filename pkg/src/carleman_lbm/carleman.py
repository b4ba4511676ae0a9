"""Second-order Carleman linearisation of the lattice Boltzmann collision.

State layout over N sites and b velocities:

* first-order index ``p*N + x`` holds f_p(x);
* second-order index ``b*N + ((p*b + q)*N + x)*N + y`` holds f_p(x) f_q(y).

With this layout the relaxation matrix is

    R = [[A (x) I_N,  B (x) Delta           ],
         [0,          (A (x) A) (x) I_{N^2} ]]

where Delta is the N x N^2 selector with Delta[x, x*N + x] = 1, so the
quadratic term of site x only sees the local product f_q(x) f_r(x).
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from .errors import ResourceLimitError
from .lattice import DistributionField, LatticeModel, lbm_step, stream
from .sparse import SparseMatrix

# b^2 N^2 elements allowed in an explicitly assembled second-order block
DEFAULT_ELEMENT_CAP = 2 ** 20

B_FORMS = ("monomial", "symmetric")


def _dense_collision(model: LatticeModel, omega: float) -> tuple[np.ndarray, np.ndarray]:
    c = model.c.astype(float)
    w = model.w
    cs2 = model.cs2
    b = model.velocity_count
    cc = c @ c.T
    A = (1.0 - omega) * np.eye(b) + omega * w[:, None] * (1.0 + cc / cs2)
    B = omega * w[:, None, None] * (cc[:, :, None] * cc[:, None, :] / (2 * cs2 ** 2) - cc[None, :, :] / (2 * cs2))
    return A, B


def _fold_upper(B: np.ndarray) -> np.ndarray:
    """Merge B[p,q,r] and B[p,r,q] into the q <= r column (monomial basis)."""
    folded = np.triu(B + B.transpose(0, 2, 1))
    b = B.shape[1]
    diag = np.arange(b)
    folded[:, diag, diag] = B[:, diag, diag]
    return folded


def collision_matrices(model: LatticeModel, omega: float, b_form: str = "monomial"
                       ) -> tuple[SparseMatrix, SparseMatrix]:
    """Linear (b x b) and quadratic (b x b^2) collision matrices.

    Column ``q*b + r`` of B multiplies f_q f_r.  ``b_form="symmetric"``
    splits each off-diagonal monomial evenly between (q, r) and (r, q);
    ``"monomial"`` keeps one column per monomial, the one with q <= r.
    Both give the same B (f (x) f).
    """
    if not 0.0 <= omega < 2.0:
        raise ValueError(f"omega must lie in [0, 2), got {omega}")
    if b_form not in B_FORMS:
        raise ValueError(f"b_form must be one of {B_FORMS}, got {b_form!r}")
    A, B = _dense_collision(model, omega)
    if b_form == "monomial":
        B = _fold_upper(B)
    b = model.velocity_count
    return SparseMatrix.from_dense(A, tol=1e-15), SparseMatrix.from_dense(B.reshape(b, b * b), tol=1e-15)


def single_site_relaxation(model: LatticeModel, omega: float, b_form: str = "monomial") -> SparseMatrix:
    """[[A, B], [0, A (x) A]] acting on (f, f (x) f) at one site."""
    A, B = collision_matrices(model, omega, b_form)
    AA = sp.kron(A.csr, A.csr)
    b = model.velocity_count
    return SparseMatrix(sp.bmat([[A.csr, B.csr], [sp.csr_matrix((b * b, b)), AA]]))


def relaxation_gamma(A: SparseMatrix, B: SparseMatrix) -> float:
    """Largest absolute entry among A, B and A (x) A."""
    a = A.max_abs()
    return max(a, B.max_abs(), a * a)


def locality_selector(n_sites: int) -> SparseMatrix:
    rows = np.arange(n_sites)
    cols = rows * (n_sites + 1)
    return SparseMatrix(sp.csr_matrix((np.ones(n_sites), (rows, cols)), shape=(n_sites, n_sites * n_sites)))


def _site_shift_table(grid_dims, velocities) -> np.ndarray:
    """table[p, x] = site reached from x by moving along c_p (periodic)."""
    grid_dims = tuple(grid_dims)
    coords = np.indices(grid_dims).reshape(len(grid_dims), -1)
    table = np.empty((len(velocities), coords.shape[1]), dtype=np.int64)
    for p, cp in enumerate(velocities):
        moved = [(coords[a] + cp[a]) % grid_dims[a] for a in range(len(grid_dims))]
        table[p] = np.ravel_multi_index(moved, grid_dims)
    return table


def build_streaming(model: LatticeModel, grid_dims) -> SparseMatrix:
    """Permutation S with S[target, source] = 1."""
    grid_dims = tuple(int(n) for n in grid_dims)
    n = math.prod(grid_dims)
    b = model.velocity_count
    shift = _site_shift_table(grid_dims, model.velocities)
    p = np.repeat(np.arange(b), n)
    x = np.tile(np.arange(n), b)
    src1 = p * n + x
    dst1 = p * n + shift[p, x]
    # second order: (p, q, x, y) -> (p, q, x + c_p, y + c_q)
    P, Q, X, Y = (a.ravel() for a in np.meshgrid(np.arange(b), np.arange(b), np.arange(n), np.arange(n), indexing="ij"))
    src2 = b * n + ((P * b + Q) * n + X) * n + Y
    dst2 = b * n + ((P * b + Q) * n + shift[P, X]) * n + shift[Q, Y]
    dim = b * n + b * b * n * n
    src = np.concatenate([src1, src2])
    dst = np.concatenate([dst1, dst2])
    return SparseMatrix(sp.csr_matrix((np.ones(dim), (dst, src)), shape=(dim, dim)))


@dataclass
class CarlemanSystem:
    model: LatticeModel
    omega: float
    grid_dims: tuple[int, ...]
    A: SparseMatrix
    B: SparseMatrix
    gamma: float
    b_form: str = "monomial"
    Delta: SparseMatrix | None = None
    R: SparseMatrix | None = None
    S: SparseMatrix | None = None
    _C: SparseMatrix | None = field(default=None, repr=False)

    @property
    def n_sites(self) -> int:
        return math.prod(self.grid_dims)

    @property
    def dimension(self) -> int:
        b, n = self.model.velocity_count, self.n_sites
        return b * n + b * b * n * n

    @property
    def materialized(self) -> bool:
        return self.R is not None

    @property
    def C(self) -> SparseMatrix:
        if self.R is None or self.S is None:
            raise ValueError("system was built without explicit matrices")
        if self._C is None:
            self._C = self.S @ self.R
        return self._C


def build_relaxation(model: LatticeModel, omega: float, grid_dims, *, b_form: str = "monomial",
                     materialize: bool = True, element_cap: int = DEFAULT_ELEMENT_CAP) -> CarlemanSystem:
    """Assemble R_N (and S_N) for a periodic grid.

    With ``materialize=False`` only the per-site matrices and gamma are
    built, which is all the factorised evolution and analytic estimates need.
    """
    grid_dims = tuple(int(n) for n in grid_dims)
    if len(grid_dims) != model.dimension or min(grid_dims) < 1:
        raise ValueError(f"grid {grid_dims} does not match a {model.dimension}D lattice")
    A, B = collision_matrices(model, omega, b_form)
    system = CarlemanSystem(model, float(omega), grid_dims, A, B, relaxation_gamma(A, B), b_form)
    if not materialize:
        return system
    b, n = model.velocity_count, system.n_sites
    if b * b * n * n > element_cap:
        raise ResourceLimitError(
            f"second-order block has {b * b * n * n} elements, above the cap of {element_cap}; "
            "use the factorised evolution instead")
    delta = locality_selector(n)
    eye_n = sp.identity(n, format="csr")
    top = sp.hstack([sp.kron(A.csr, eye_n), sp.kron(B.csr, delta.csr)])
    bottom = sp.hstack([sp.csr_matrix((b * b * n * n, b * n)),
                        sp.kron(sp.kron(A.csr, A.csr), sp.identity(n * n, format="csr"))])
    system.Delta = delta
    system.R = SparseMatrix(sp.vstack([top, bottom]))
    system.S = build_streaming(model, grid_dims)
    return system


@dataclass
class CarlemanState:
    first_order: np.ndarray
    second_order: np.ndarray
    truncation_order: int = 2

    def vector(self) -> np.ndarray:
        return np.concatenate([self.first_order, self.second_order])


def lift(field: DistributionField, element_cap: int = DEFAULT_ELEMENT_CAP) -> CarlemanState:
    b, n = field.model.velocity_count, field.n_sites
    if b * b * n * n > element_cap:
        raise ResourceLimitError(f"second-order state needs {b * b * n * n} elements, cap is {element_cap}")
    first = field.values.T.ravel().copy()
    per_velocity = field.values.T  # (b, N)
    second = np.einsum("px,qy->pqxy", per_velocity, per_velocity).ravel()
    return CarlemanState(first, second)


def unpack_first_order(vector: np.ndarray, model: LatticeModel, grid_dims) -> DistributionField:
    n = math.prod(grid_dims)
    b = model.velocity_count
    return DistributionField(model, tuple(grid_dims), np.asarray(vector[: b * n]).reshape(b, n).T)


def carleman_step(state: CarlemanState, system: CarlemanSystem) -> CarlemanState:
    if state.truncation_order != 2:
        raise ValueError("only truncation order 2 is implemented")
    vec = state.vector()
    if vec.shape[0] != system.dimension:
        raise ValueError(f"state length {vec.shape[0]} does not match system dimension {system.dimension}")
    if not system.materialized:
        raise ValueError("carleman_step needs an explicitly assembled system")
    out = system.S.matvec(system.R.matvec(vec))
    split = system.model.velocity_count * system.n_sites
    return CarlemanState(out[:split], out[split:], state.truncation_order)


def _local_quadratic(g: np.ndarray) -> np.ndarray:
    """Per-site g_q g_r flattened to column q*b + r."""
    return np.einsum("xq,xr->xqr", g, g).reshape(g.shape[0], -1)


def fast_second_order_path(field0: DistributionField, system: CarlemanSystem, steps: int) -> np.ndarray:
    """First-order Carleman trajectory without the N^2 block.

    The second-order block starts as the outer product g (x) g and is acted on
    by (A (x) A) and a product streaming, so it stays the product of the
    linearly evolved g(t).  Only its local diagonal g(x) (x) g(x) enters the
    first-order update.  Returns an array (steps + 1, b*N) in the
    first-order layout.
    """
    if steps < 0:
        raise ValueError("steps must be non-negative")
    model, dims = system.model, system.grid_dims
    if field0.grid_dims != dims or field0.model.name != model.name:
        raise ValueError("field and system describe different lattices")
    A = system.A.to_dense()
    B = system.B.to_dense()
    f = field0.values.copy()
    g = field0.values.copy()
    out = np.empty((steps + 1, f.size))
    out[0] = f.T.ravel()
    for t in range(steps):
        f_post = f @ A.T + _local_quadratic(g) @ B.T
        g = stream(g @ A.T, model, dims)
        f = stream(f_post, model, dims)
        out[t + 1] = f.T.ravel()
    return out


@dataclass(frozen=True)
class ErrorStats:
    timestep: int
    per_site_error: np.ndarray
    max: float
    median: float
    min: float
    mean: float


@dataclass
class LbmComparison:
    """Error statistics per timestep plus the traces of three monitor sites.

    The monitor sites are the ones with the largest, median and smallest
    error at the final time, tracked backwards through the whole run.
    """
    stats: list[ErrorStats]
    monitor_sites: dict[str, int]
    monitor_traces: dict[str, np.ndarray]
    excluded_sites: np.ndarray
    metric: str

    def __len__(self):
        return len(self.stats)

    def __getitem__(self, i):
        return self.stats[i]

    def __iter__(self):
        return iter(self.stats)

    def mean_series(self) -> np.ndarray:
        return np.array([s.mean for s in self.stats])


def _site_norms(values: np.ndarray, model: LatticeModel, metric: str) -> np.ndarray:
    if metric == "population":
        return values
    if metric == "velocity":
        return values @ model.c
    raise ValueError(f"unknown error metric {metric!r}")


def compare_to_lbm(field0: DistributionField, omega: float, steps: int, *, metric: str = "population",
                   b_form: str = "monomial") -> LbmComparison:
    """Relative per-site error between the Carleman and direct LBM evolutions.

    ``metric="population"`` compares the b populations at each site,
    ``"velocity"`` the first moment.  Sites where the LBM reference vanishes
    are excluded from the statistics and reported.
    """
    if metric not in ("population", "velocity"):
        raise ValueError(f"unknown error metric {metric!r}")
    model = field0.model
    system = build_relaxation(model, omega, field0.grid_dims, b_form=b_form, materialize=False)
    traj = fast_second_order_path(field0, system, steps)
    b, n = model.velocity_count, field0.n_sites
    ref = field0.copy()
    errors = np.zeros((steps + 1, n))
    excluded = np.zeros(n, dtype=bool)
    for t in range(steps + 1):
        if t > 0:
            ref = lbm_step(ref, omega)
        clb = traj[t].reshape(b, n).T
        diff = np.linalg.norm(_site_norms(clb - ref.values, model, metric), axis=1)
        scale = np.linalg.norm(_site_norms(ref.values, model, metric), axis=1)
        zero = scale == 0.0
        excluded |= zero
        errors[t] = np.divide(diff, scale, out=np.zeros(n), where=~zero)
    keep = ~excluded
    if not keep.any():
        raise ValueError("the reference field vanishes at every site")
    stats = []
    for t in range(steps + 1):
        e = errors[t, keep]
        stats.append(ErrorStats(t, errors[t].copy(), float(e.max()), float(np.median(e)), float(e.min()), float(e.mean())))
    kept = np.flatnonzero(keep)
    final = errors[-1, kept]
    order = np.argsort(final, kind="stable")
    monitors = {"max": int(kept[order[-1]]), "median": int(kept[order[len(order) // 2]]), "min": int(kept[order[0]])}
    traces = {k: errors[:, s].copy() for k, s in monitors.items()}
    return LbmComparison(stats, monitors, traces, np.flatnonzero(excluded), metric)


def write_error_csv(stats, path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["t", "max", "median", "min", "mean"])
        for s in stats:
            writer.writerow([s.timestep] + [format(v, ".17g") for v in (s.max, s.median, s.min, s.mean)])


def one_step_defect(field0: DistributionField, omega: float, steps: int = 2) -> float:
    """Max-norm gap between Carleman and LBM populations after ``steps`` steps.

    After a single step the first-order block is exact (the lifted state has
    f_qr = f_q f_r exactly), so the truncation first shows at step two.
    """
    system = build_relaxation(field0.model, omega, field0.grid_dims, materialize=False)
    traj = fast_second_order_path(field0, system, steps)
    ref = field0
    for _ in range(steps):
        ref = lbm_step(ref, omega)
    b, n = field0.model.velocity_count, field0.n_sites
    return float(np.abs(traj[-1].reshape(b, n).T - ref.values).max())

