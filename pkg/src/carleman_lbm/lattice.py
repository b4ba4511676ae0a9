"""DdQb lattice models and the classical lattice Boltzmann update.

Velocity ordering is fixed for every model: index 0 is the rest velocity,
then the axis-aligned velocities, then the diagonals (fewest non-zero
components first).  Every matrix built elsewhere in the package inherits
this ordering.

Fields are stored site-major, population-minor: ``values[site, p]`` with
``site`` the C-order ravel of the grid coordinates.  Density is normalised
so that the macroscopic velocity is the first moment ``u = sum_p c_p f_p``
without division by the density; this keeps the collision an exact
quadratic polynomial in the populations.
"""
from __future__ import annotations

import csv
import itertools
import math
import warnings
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

CS2 = Fraction(1, 3)

_D1Q3_WEIGHTS = {0: Fraction(2, 3), 1: Fraction(1, 6), -1: Fraction(1, 6)}

_D2Q9_VELOCITIES = (
    (0, 0),
    (1, 0), (0, 1), (-1, 0), (0, -1),
    (1, 1), (-1, 1), (-1, -1), (1, -1),
)


@dataclass(frozen=True)
class LatticeModel:
    name: str
    dimension: int
    velocities: tuple[tuple[int, ...], ...]
    weights: tuple[Fraction, ...]
    sound_speed_sq: Fraction = CS2

    @property
    def velocity_count(self) -> int:
        return len(self.velocities)

    @property
    def c(self) -> np.ndarray:
        """Velocity set as an integer array of shape (b, d)."""
        return np.array(self.velocities, dtype=np.int64).reshape(self.velocity_count, self.dimension)

    @property
    def w(self) -> np.ndarray:
        return np.array([float(x) for x in self.weights])

    @property
    def cs2(self) -> float:
        return float(self.sound_speed_sq)


def _velocity_order(d: int) -> list[tuple[int, ...]]:
    if d == 1:
        return [(0,), (1,), (-1,)]
    if d == 2:
        return list(_D2Q9_VELOCITIES)
    # group by number of non-zero components, positive directions first
    vs = list(itertools.product((0, 1, -1), repeat=d))
    return sorted(vs, key=lambda v: (sum(1 for a in v if a), [(a == 0, a < 0) for a in v]))


def make_model(name: str) -> LatticeModel:
    """Return the D1Q3, D2Q9 or D3Q27 model (tensor products of D1Q3)."""
    dims = {"D1Q3": 1, "D2Q9": 2, "D3Q27": 3}
    key = name.upper()
    if key not in dims:
        raise ValueError(f"unknown lattice model {name!r}; expected one of {sorted(dims)}")
    d = dims[key]
    velocities = tuple(_velocity_order(d))
    weights = tuple(math.prod((_D1Q3_WEIGHTS[a] for a in v), start=Fraction(1)) for v in velocities)
    return LatticeModel(name=key, dimension=d, velocities=velocities, weights=weights)


def equilibrium(u, model: LatticeModel, density: float = 1.0) -> np.ndarray:
    """Second-order equilibrium populations for velocity ``u``.

    ``u`` may carry leading batch axes; the last axis has length d.  The
    density enters linearly, ``f_eq = w_p (rho + u_p + (u_p^2 - |u|^2/cs2)/2)``
    with ``u_p = u.c_p / cs2``, which reduces to the usual form at rho = 1.
    """
    u = np.asarray(u, dtype=float)
    if u.shape[-1:] != (model.dimension,):
        raise ValueError(f"velocity must end in an axis of length {model.dimension}, got shape {u.shape}")
    if not np.all(np.isfinite(u)):
        raise ValueError("velocity must be finite")
    cs2 = model.cs2
    speed = np.sqrt(np.max(np.sum(u * u, axis=-1))) if u.size else 0.0
    if speed > 0.3 * math.sqrt(cs2):
        warnings.warn(f"|u| = {speed:.3g} exceeds 0.3 c_s; low-Mach expansion is inaccurate", stacklevel=2)
    up = u @ model.c.T / cs2
    usq = np.sum(u * u, axis=-1, keepdims=True) / cs2
    rho = np.asarray(density, dtype=float)[..., None] if np.ndim(density) else density
    return model.w * (rho + up + 0.5 * (up * up - usq))


@dataclass(frozen=True)
class MacroFields:
    density: np.ndarray
    velocity: np.ndarray


@dataclass
class DistributionField:
    model: LatticeModel
    grid_dims: tuple[int, ...]
    values: np.ndarray = field(repr=False)

    def __post_init__(self):
        self.grid_dims = tuple(int(n) for n in self.grid_dims)
        if len(self.grid_dims) != self.model.dimension or min(self.grid_dims) < 1:
            raise ValueError(f"grid {self.grid_dims} does not match a {self.model.dimension}D lattice")
        self.values = np.asarray(self.values, dtype=float)
        expected = (self.n_sites, self.model.velocity_count)
        if self.values.shape != expected:
            raise ValueError(f"values must have shape {expected}, got {self.values.shape}")
        if not np.all(np.isfinite(self.values)):
            raise ValueError("populations must be finite")

    @property
    def n_sites(self) -> int:
        return math.prod(self.grid_dims)

    @property
    def mass(self) -> float:
        return float(self.values.sum())

    def macroscopic(self) -> MacroFields:
        return MacroFields(density=self.values.sum(axis=1), velocity=self.values @ self.model.c)

    def copy(self) -> "DistributionField":
        return DistributionField(self.model, self.grid_dims, self.values.copy())


def uniform_field(model: LatticeModel, grid_dims, value=None) -> DistributionField:
    """Every site set to ``value`` (a b-vector); defaults to the weights."""
    n = math.prod(grid_dims)
    row = model.w if value is None else np.broadcast_to(np.asarray(value, dtype=float), (model.velocity_count,))
    return DistributionField(model, tuple(grid_dims), np.tile(row, (n, 1)))


def collide(values: np.ndarray, model: LatticeModel, omega: float) -> np.ndarray:
    """BGK relaxation of site-major populations towards the local equilibrium."""
    rho = values.sum(axis=-1)
    u = values @ model.c
    return values - omega * (values - equilibrium_from_moments(rho, u, model))


def equilibrium_from_moments(rho: np.ndarray, u: np.ndarray, model: LatticeModel) -> np.ndarray:
    # no low-Mach warning here: used inside time loops on arbitrary fields
    cs2 = model.cs2
    up = u @ model.c.T / cs2
    usq = np.sum(u * u, axis=-1, keepdims=True) / cs2
    return model.w * (rho[..., None] + up + 0.5 * (up * up - usq))


def stream(values: np.ndarray, model: LatticeModel, grid_dims) -> np.ndarray:
    """Periodic streaming: f_p(x + c_p) <- f_p(x)."""
    grid_dims = tuple(grid_dims)
    b = model.velocity_count
    grid = values.reshape(*grid_dims, b)
    out = np.empty_like(grid)
    axes = tuple(range(len(grid_dims)))
    for p, cp in enumerate(model.velocities):
        out[..., p] = np.roll(grid[..., p], shift=cp, axis=axes)
    return out.reshape(-1, b)


def lbm_step(field: DistributionField, omega: float) -> DistributionField:
    if not 0.0 <= omega < 2.0:
        raise ValueError(f"omega must lie in [0, 2), got {omega}")
    post = collide(field.values, field.model, omega)
    return DistributionField(field.model, field.grid_dims, stream(post, field.model, field.grid_dims))


def kolmogorov_init(grid_dims, speed: float, wavenumber: int, model: LatticeModel,
                    profile: str = "shear") -> DistributionField:
    """Equilibrium field for a sinusoidal shear flow of peak speed ``speed``.

    ``profile="shear"`` seeds u = (U sin(2 pi k y / Ly), 0).  That flow is
    invariant along x and so effectively one-dimensional.  ``"crossed"``
    also seeds the transverse component,
    u = U/sqrt(2) (sin(2 pi k y / Ly), sin(2 pi k x / Lx)), which gives a
    genuinely two-dimensional flow with the same peak speed.
    """
    if model.dimension != 2:
        raise ValueError("Kolmogorov initialisation needs a 2D model")
    if speed > 0.2:
        raise ValueError(f"speed {speed} exceeds the low-Mach limit 0.2")
    nx, ny = (int(n) for n in grid_dims)
    x, y = np.meshgrid(np.arange(nx), np.arange(ny), indexing="ij")
    u = np.zeros((nx, ny, 2))
    if profile == "shear":
        u[..., 0] = speed * np.sin(2 * np.pi * wavenumber * y / ny)
    elif profile == "crossed":
        amp = speed / math.sqrt(2.0)
        u[..., 0] = amp * np.sin(2 * np.pi * wavenumber * y / ny)
        u[..., 1] = amp * np.sin(2 * np.pi * wavenumber * x / nx)
    else:
        raise ValueError(f"unknown profile {profile!r}")
    feq = equilibrium(u.reshape(-1, 2), model)
    return DistributionField(model, (nx, ny), feq)


@dataclass(frozen=True)
class ReynoldsReport:
    omega: float
    viscosity: float
    macroscale: float
    speed: float
    reynolds: float
    kolmogorov_scale: float


def viscosity(omega: float, cs2: float = float(CS2)) -> float:
    if not 0.0 < omega < 2.0:
        raise ValueError(f"omega must lie in (0, 2) for a positive viscosity, got {omega}")
    return cs2 * (1.0 / omega - 0.5)


def reynolds_report(omega: float, speed: float, length: float) -> ReynoldsReport:
    nu = viscosity(omega)
    re = speed * length / nu
    lk = length / re ** 0.75 if re > 0 else math.inf
    return ReynoldsReport(omega, nu, length, speed, re, lk)


def write_field_csv(field: DistributionField, path) -> None:
    """Snapshot as ``x,y,p,f`` rows (a ``z`` column is added in 3D)."""
    coords = np.unravel_index(np.arange(field.n_sites), field.grid_dims)
    d = field.model.dimension
    header = ["x", "y", "p", "f"] if d <= 2 else ["x", "y", "z", "p", "f"]
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for site in range(field.n_sites):
            xyz = [int(coords[a][site]) for a in range(d)]
            if d == 1:
                xyz.append(0)
            for p in range(field.model.velocity_count):
                writer.writerow([*xyz, p, format(field.values[site, p], ".17g")])
