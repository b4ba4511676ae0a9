"""Command-line experiments: error curves, Pauli spectra, circuits, success sweeps."""
from __future__ import annotations

import argparse
import contextlib
import math
import os
import sys
import tempfile
from pathlib import Path

import numpy as np

from .carleman import build_relaxation, compare_to_lbm, single_site_relaxation, write_error_csv
from .circuits import assemble_block_encoding, streaming_circuit
from .circuits.report import count_rows, write_count_table
from .errors import ResourceLimitError
from .lattice import DistributionField, kolmogorov_init, lbm_step, make_model, reynolds_report, write_field_csv
from .logistic import logistic_carleman
from .pauli import truncation_curve, write_expansion_csv
from .qsim import sweep_omega

EXIT_INVALID = 2
EXIT_RESOURCE = 3

COMMON_DEFAULTS = {"model": "D2Q9", "grid": "16x16", "omega": "1.0", "speed": "0.1", "steps": "100"}


def parse_grid(text: str) -> tuple[int, ...]:
    parts = [p for p in text.replace(",", "x").lower().split("x") if p]
    try:
        dims = tuple(int(p) for p in parts)
    except ValueError:
        raise ValueError(f"cannot parse grid {text!r}; use e.g. 16x16") from None
    if not dims or min(dims) < 1:
        raise ValueError(f"grid {text!r} must list positive sizes")
    return dims


def parse_omegas(text: str) -> list[float]:
    """``1.0``, ``1.0,1.5,1.9`` or ``start:stop:step`` (stop excluded)."""
    text = str(text).strip()
    try:
        if ":" in text:
            start, stop, step = (float(v) for v in text.split(":"))
            if step <= 0:
                raise ValueError
            count = int(math.floor((stop - start) / step - 1e-9)) + 1
            return [round(start + i * step, 12) for i in range(max(count, 0))]
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise ValueError(f"cannot parse omega specification {text!r}") from None


def parse_int_range(text: str) -> list[int]:
    """``3`` or ``2..6`` (inclusive)."""
    text = str(text).strip()
    try:
        if ".." in text:
            lo, hi = (int(v) for v in text.split(".."))
            return list(range(lo, hi + 1))
        return [int(text)]
    except ValueError:
        raise ValueError(f"cannot parse range {text!r}; use e.g. 2..6") from None


def read_config(path) -> dict[str, str]:
    """Flat ``key=value`` lines; ``#`` starts a comment."""
    out = {}
    for lineno, raw in enumerate(Path(path).read_text().splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        if not sep:
            raise ValueError(f"{path}:{lineno}: expected key=value")
        out[key.strip().replace("-", "_")] = value.strip()
    return out


@contextlib.contextmanager
def atomic_output(path):
    """Yield a temporary path that replaces ``path`` only if the block succeeds."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(prefix=f".{path.name}.", dir=path.parent)
    os.close(fd)
    try:
        yield tmp
        os.replace(tmp, path)
    finally:
        if os.path.exists(tmp):
            os.remove(tmp)


def _with_suffix_tag(path: Path, tag: str, multiple: bool) -> Path:
    return path.with_name(f"{path.stem}_{tag}{path.suffix}") if multiple else path


def _circuit_grid(model, q_n: int) -> tuple[int, ...]:
    """Power-of-two grid with q_N site bits spread over the axes."""
    d = model.dimension
    bits = [q_n // d + (1 if i < q_n % d else 0) for i in range(d)]
    return tuple(2 ** b for b in bits)


def cmd_carleman_compare(args) -> int:
    model = make_model(args.model)
    if model.dimension != 2:
        raise ValueError("carleman-compare needs a 2D model")
    grid = parse_grid(args.grid)
    omegas = parse_omegas(args.omega)
    speed, steps = float(args.speed), int(args.steps)
    if steps < 0:
        raise ValueError("steps must be non-negative")
    for om in omegas:
        if not 0.0 < om < 2.0:
            raise ValueError(f"omega {om} outside (0, 2)")
    field0 = kolmogorov_init(grid, speed, int(args.wavenumber), model, profile=args.profile)
    out = Path(args.out)
    for om in omegas:
        result = compare_to_lbm(field0, om, steps, metric=args.metric)
        target = _with_suffix_tag(out, f"omega{om:g}", len(omegas) > 1)
        with atomic_output(target) as tmp:
            write_error_csv(result.stats, tmp)
        rep = reynolds_report(om, speed, grid[1])
        print(f"omega={om:g} Re={rep.reynolds:.1f} mean_error[T]={result.stats[-1].mean:.3e} -> {target}")
    return 0


def cmd_pauli(args) -> int:
    if args.identity is not None:
        n = int(args.identity)
        if not 1 <= n <= 12:
            raise ValueError("identity test hook needs 1..12 qubits")
        matrix = np.eye(2 ** n)
    else:
        model = make_model(args.model)
        omega = float(args.omega)
        matrix = single_site_relaxation(model, omega, args.b_form)
    report = truncation_curve(matrix)
    if np.any(np.diff(report.distances) > 0):
        raise RuntimeError("truncation distances are not monotone")
    with atomic_output(args.out) as tmp:
        write_expansion_csv(report, tmp)
    print(f"terms={len(report.terms)} qubits={report.n_qubits} final_distance={report.distances[-1]:.3e}")
    return 0


def cmd_build_circuit(args) -> int:
    model = make_model(args.model)
    if model.name == "D3Q27":
        raise ValueError("circuit synthesis is not supported for D3Q27; use success-sweep for analytic p_s")
    omega = float(args.omega)
    if args.qn is not None:
        q_values = parse_int_range(args.qn)
        if not q_values:
            raise ValueError("empty q_N range")
        if min(q_values) < 0:
            raise ValueError("q_N must be non-negative")
    else:
        q_values = []
    grid = _circuit_grid(model, q_values[0]) if q_values else parse_grid(args.grid)
    system = build_relaxation(model, omega, grid, materialize=False)
    relax = assemble_block_encoding(system)
    stream = streaming_circuit(model, grid, pad=args.pad)
    out = Path(args.out)
    with atomic_output(out) as tmp:
        Path(tmp).write_text(relax.to_json() if args.json else relax.to_text())
    stream_path = out.with_name(f"{out.stem}_streaming{out.suffix}")
    with atomic_output(stream_path) as tmp:
        Path(tmp).write_text(stream.to_json() if args.json else stream.to_text())
    print(f"qubits={relax.n_qubits} relaxation_gates={len(relax)} streaming_gates={len(stream)} -> {out}")
    if args.counts:
        rows = []
        for q in q_values or [sum(int(math.log2(n)) for n in grid)]:
            g = _circuit_grid(model, q)
            sysq = build_relaxation(model, omega, g, materialize=False)
            rows += count_rows(q, assemble_block_encoding(sysq), "relaxation")
            rows += count_rows(q, streaming_circuit(model, g), "streaming")
        with atomic_output(args.counts) as tmp:
            write_count_table(rows, tmp)
    return 0


def cmd_success_sweep(args) -> int:
    model = make_model(args.model)
    grid = parse_grid(args.grid)
    if len(grid) != model.dimension:
        raise ValueError(f"grid {grid} does not match {model.name}")
    omegas = parse_omegas(args.omega)
    if not omegas:
        raise ValueError("empty omega grid")
    curve = sweep_omega(model, grid, args.init, omegas, simulate=args.simulate,
                        warn=lambda msg: print(f"warning: {msg}"))
    with atomic_output(args.out) as tmp:
        curve.write_csv(tmp)
    print(f"points={len(omegas)} argmax_omega={curve.argmax():g} peak_p_s={max(curve.probabilities):.3e}")
    return 0


def cmd_logistic(args) -> int:
    u0, R, T, dt = float(args.u0), float(args.R), float(args.time), float(args.dt)
    kmax = int(args.kmax)
    if abs(R * u0) >= 1:
        raise ValueError("|R u0| must be below 1")
    if kmax < 1 or dt <= 0 or T < 0:
        raise ValueError("need kmax >= 1, dt > 0 and time >= 0")
    ladders = [logistic_carleman(u0, R, K, T, dt) for K in range(1, kmax + 1)]
    ref = _fine_reference(u0, R, ladders[0].times, float(args.ref_dt))
    with atomic_output(args.out) as tmp, open(tmp, "w") as fh:
        fh.write(",".join(["t"] + [f"u1_K{K}" for K in range(1, kmax + 1)] + ["u_ref"]) + "\n")
        for i, t in enumerate(ladders[0].times):
            values = [t] + [lad.trajectory[i] for lad in ladders] + [ref[i]]
            fh.write(",".join(format(v, ".17g") for v in values) + "\n")
    errors = [abs(lad.final - ref[-1]) for lad in ladders]
    print("final |u1 - u_ref| by K: " + " ".join(f"{e:.3e}" for e in errors))
    return 0


def _fine_reference(u0: float, R: float, times: np.ndarray, dt: float) -> np.ndarray:
    """Fine-step Euler of the nonlinear equation sampled at ``times``."""
    out = np.empty_like(times)
    u, n_done = u0, 0
    for i, t in enumerate(times):
        target = int(round(t / dt))
        for _ in range(target - n_done):
            u -= dt * u * (1.0 - R * u)
        n_done = target
        out[i] = u
    return out


def cmd_lbm_run(args) -> int:
    model = make_model(args.model)
    grid = parse_grid(args.grid)
    omega = float(args.omega)
    steps = int(args.steps)
    if not 0.0 < omega < 2.0:
        raise ValueError(f"omega {omega} outside (0, 2)")
    if steps < 0:
        raise ValueError("steps must be non-negative")
    if args.init == "kolmogorov":
        field = kolmogorov_init(grid, float(args.speed), int(args.wavenumber), model, profile=args.profile)
    else:
        rng = np.random.default_rng(int(args.seed))
        n = math.prod(grid)
        field = DistributionField(model, grid, model.w * (1 + float(args.speed) * rng.standard_normal((n, model.velocity_count))))
    mass0 = field.mass
    for _ in range(steps):
        field = lbm_step(field, omega)
    with atomic_output(args.out) as tmp:
        write_field_csv(field, tmp)
    print(f"steps={steps} relative_mass_drift={abs(field.mass - mass0) / mass0:.2e} -> {args.out}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="carleman-lbm", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, out_default):
        p.add_argument("--model", help="D1Q3, D2Q9 or D3Q27")
        p.add_argument("--grid", help="grid size, e.g. 16x16")
        p.add_argument("--omega", help="relaxation rate: value, list a,b,c or start:stop:step")
        p.add_argument("--speed", help="peak flow speed U")
        p.add_argument("--steps", help="number of time steps")
        p.add_argument("--out", default=None, help=f"output path (default {out_default})")
        p.add_argument("--config", help="key=value file; command-line flags take precedence")
        p.set_defaults(out_default=out_default)

    p = sub.add_parser("carleman-compare", help="Carleman vs LBM error statistics per step")
    common(p, "carleman_error.csv")
    p.add_argument("--wavenumber", default=None)
    p.add_argument("--profile", choices=["shear", "crossed"], default=None)
    p.add_argument("--metric", choices=["population", "velocity"], default=None)
    p.set_defaults(func=cmd_carleman_compare, extra_defaults={"wavenumber": "1", "profile": "shear",
                                                               "metric": "population"})

    p = sub.add_parser("pauli", help="Pauli spectrum and truncation distance of the single-site matrix")
    common(p, "pauli_expansion.csv")
    p.add_argument("--identity", default=None, help="expand the identity on this many qubits instead")
    p.add_argument("--b-form", dest="b_form", choices=["monomial", "symmetric"], default=None)
    p.set_defaults(func=cmd_pauli, extra_defaults={"b_form": "monomial"})

    p = sub.add_parser("build-circuit", help="export relaxation and streaming circuits")
    common(p, "relaxation_circuit.txt")
    p.add_argument("--qn", default=None, help="site bits q_N, or a range such as 2..6 for the count table")
    p.add_argument("--counts", default=None, help="write a gate-count table CSV here")
    p.add_argument("--json", action="store_true", help="export JSON instead of text")
    p.add_argument("--pad", action="store_true", help="allow non-power-of-two axes in the streaming circuit")
    p.set_defaults(func=cmd_build_circuit, extra_defaults={})

    p = sub.add_parser("success-sweep", help="post-selection success probability versus omega")
    common(p, "success_curve.csv")
    p.add_argument("--init", choices=["uniform", "equilibrium"], default=None)
    p.add_argument("--simulate", action="store_true", help="simulate the circuit where the qubit cap allows")
    p.set_defaults(func=cmd_success_sweep, extra_defaults={"init": "uniform"})

    p = sub.add_parser("logistic", help="Carleman ladder of the logistic equation")
    common(p, "logistic.csv")
    p.add_argument("--u0", default=None)
    p.add_argument("--R", default=None)
    p.add_argument("--kmax", default=None)
    p.add_argument("--time", default=None)
    p.add_argument("--dt", default=None)
    p.add_argument("--ref-dt", dest="ref_dt", default=None)
    p.set_defaults(func=cmd_logistic, extra_defaults={"u0": "0.5", "R": "0.2", "kmax": "5", "time": "1.0",
                                                      "dt": "1e-3", "ref_dt": "1e-6"})

    p = sub.add_parser("lbm-run", help="run the classical lattice Boltzmann solver and dump the field")
    common(p, "field.csv")
    p.add_argument("--wavenumber", default=None)
    p.add_argument("--profile", choices=["shear", "crossed"], default=None)
    p.add_argument("--init", choices=["kolmogorov", "random"], default=None)
    p.add_argument("--seed", default=None)
    p.set_defaults(func=cmd_lbm_run, extra_defaults={"wavenumber": "1", "profile": "shear", "init": "kolmogorov",
                                                     "seed": "0"})
    return parser


def _resolve(args) -> None:
    """Fill unset flags from the config file, then from the defaults."""
    config = read_config(args.config) if args.config else {}
    internal = {"func", "config", "command", "out_default", "extra_defaults"}
    unknown = set(config) - (set(vars(args)) - internal)
    if unknown:
        raise ValueError(f"unknown config keys: {', '.join(sorted(unknown))}")
    defaults = dict(COMMON_DEFAULTS, out=args.out_default, **args.extra_defaults)
    for key in set(config) | set(defaults):
        if getattr(args, key, None) in (None, False):
            if key in config:
                value = config[key]
                if isinstance(getattr(args, key, None), bool):
                    value = value.lower() in ("1", "true", "yes")
                setattr(args, key, value)
            elif key in defaults:
                setattr(args, key, defaults[key])


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        _resolve(args)
        return args.func(args)
    except ResourceLimitError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RESOURCE
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
