"""Run configuration: a small `key = value` grammar with [section] headers.

Unknown keys, duplicate keys, type mismatches and constraint violations are
all reported with their line numbers.  Obstacle and initial-state inputs are
either named built-ins (const / affine / bump) or tabulated node values read
from a field file covering every node of the extended grid.
"""

from __future__ import annotations

import math
import os
from dataclasses import dataclass, field

import numpy as np

from . import fileio
from .grid import Grid, build_grid, extended_coordinates
from .problem import ObstacleProblem, build_problem
from .step import DEFAULT_EPS_SCHEDULE, StepConfig


class ConfigError(ValueError):
    """Carries the full list of (line, message) parse problems."""

    def __init__(self, errors: list[tuple[int, str]]):
        self.errors = errors
        joined = "; ".join(f"line {ln}: {msg}" for ln, msg in errors)
        super().__init__(joined)


_SECTIONS = {
    "domain": ("dim", "lengths", "interior_counts"),
    "data": ("f", "u0"),
    "time": ("T", "n"),
    "solver": (
        "solver",
        "penalty_eps_schedule",
        "newton_tol",
        "max_newton_iters",
        "fallback_pg_iters",
    ),
    "output": ("emit_fields", "emit_diagnostics", "emit_aggregates", "emit_timings"),
}
_KEY_SECTION = {key: sec for sec, keys in _SECTIONS.items() for key in keys}
_REQUIRED = ("dim", "lengths", "interior_counts", "f", "u0", "T", "n")
_EMIT_FIELDS = ("none", "last", "all")
_SOLVERS = ("penalty_then_polish", "active_set", "penalty_only")
_BOOLS = {"true": True, "false": False, "yes": True, "no": False, "1": True, "0": False}


@dataclass(frozen=True)
class RunConfig:
    dim: int
    lengths: tuple[float, ...]
    interior_counts: tuple[int, ...]
    f_spec: str
    u0_spec: str
    T: float
    n: int
    solver: str = "penalty_then_polish"
    penalty_eps_schedule: tuple[float, ...] = DEFAULT_EPS_SCHEDULE
    newton_tol: float = 1e-10
    max_newton_iters: int = 100
    fallback_pg_iters: int = 100_000
    emit_fields: str = "last"
    emit_diagnostics: bool = True
    emit_aggregates: bool = True
    emit_timings: bool = False
    base_dir: str = "."
    echo: dict = field(default_factory=dict)

    @property
    def tau(self) -> float:
        return self.T / self.n

    def step_config(self, tau: float | None = None) -> StepConfig:
        return StepConfig(
            tau=self.tau if tau is None else tau,
            penalty_eps_schedule=self.penalty_eps_schedule,
            newton_tol=self.newton_tol,
            max_newton_iters=self.max_newton_iters,
            solver=self.solver,
            fallback_pg_iters=self.fallback_pg_iters,
        )

    def build(self) -> tuple[Grid, ObstacleProblem]:
        grid = build_grid(self.dim, self.lengths, self.interior_counts)
        f_sampler = make_sampler(self.f_spec, grid, self.base_dir)
        u0_sampler = make_sampler(self.u0_spec, grid, self.base_dir)
        return grid, build_problem(grid, f_sampler, u0_sampler)


def _parse_floats(text: str) -> tuple[float, ...]:
    return tuple(float(part) for part in text.split(","))


def _parse_ints(text: str) -> tuple[int, ...]:
    values = []
    for part in text.split(","):
        part = part.strip()
        if not part.lstrip("+-").isdigit():
            raise ValueError(f"not an integer: {part!r}")
        values.append(int(part))
    return tuple(values)


def make_sampler(spec: str, grid: Grid, base_dir: str = "."):
    """Turn a function spec string into a pointwise sampler on the grid."""
    kind, _, args = spec.partition(":")
    kind = kind.strip()
    if kind == "const":
        value = float(args)
        return lambda *xs: value
    if kind == "affine":
        coeffs = _parse_floats(args)
        if len(coeffs) != grid.dim + 1:
            raise ValueError(
                f"affine needs {grid.dim + 1} coefficients for dim={grid.dim}, got {len(coeffs)}"
            )
        return lambda *xs: coeffs[0] + sum(c * x for c, x in zip(coeffs[1:], xs))
    if kind == "bump":
        parts = _parse_floats(args)
        if len(parts) == 3:
            amp, center, width = parts
            offset = 0.0
        elif len(parts) == 4:
            amp, center, width, offset = parts
        else:
            raise ValueError("bump takes amplitude,center,width[,offset]")
        if width <= 0.0:
            raise ValueError("bump width must be positive")
        return lambda *xs: amp * math.exp(
            -sum((x - center) ** 2 for x in xs) / (2.0 * width * width)
        ) + offset
    if kind == "file":
        path = os.path.join(base_dir, args.strip())
        if not os.path.isfile(path):
            raise ValueError(f"table file not found: {path}")
        coords, values = fileio.read_field_csv(path)
        expected = extended_coordinates(grid)
        if coords.shape != expected.shape or not np.allclose(coords, expected, atol=1e-12):
            raise ValueError(
                f"table {path} does not cover the extended grid "
                f"({coords.shape[0]} rows, expected {expected.shape[0]})"
            )
        table = {}
        for pt, val in zip(coords, values):
            table[tuple(round(x / h) for x, h in zip(pt, grid.spacing))] = float(val)

        def lookup(*xs):
            key = tuple(round(x / h) for x, h in zip(xs, grid.spacing))
            return table[key]

        return lookup
    raise ValueError(f"unknown function spec {spec!r}")


def parse_config(text: str, base_dir: str = ".") -> RunConfig:
    """Parse and validate a config document; raises ConfigError on problems."""
    errors: list[tuple[int, str]] = []
    seen: dict[str, int] = {}
    raw: dict[str, str] = {}
    section = None
    for lineno, line in enumerate(text.splitlines(), start=1):
        stripped = line.split("#", 1)[0].strip()
        if not stripped:
            continue
        if stripped.startswith("["):
            if not stripped.endswith("]"):
                errors.append((lineno, f"malformed section header {stripped!r}"))
                continue
            name = stripped[1:-1].strip()
            if name not in _SECTIONS:
                errors.append((lineno, f"unknown section [{name}]"))
                section = None
                continue
            section = name
            continue
        if "=" not in stripped:
            errors.append((lineno, f"expected `key = value`, got {stripped!r}"))
            continue
        key, value = (part.strip() for part in stripped.split("=", 1))
        if key not in _KEY_SECTION:
            errors.append((lineno, f"unknown key {key!r}"))
            continue
        if key in seen:
            errors.append(
                (lineno, f"duplicate key {key!r} (first set on line {seen[key]})")
            )
            continue
        home = _KEY_SECTION[key]
        if section != home:
            errors.append((lineno, f"key {key!r} belongs to section [{home}]"))
            continue
        seen[key] = lineno
        raw[key] = value

    for key in _REQUIRED:
        if key not in raw and key not in seen:
            errors.append((0, f"missing required key {key!r}"))
    if errors:
        raise ConfigError(errors)

    def fail(key: str, message: str):
        errors.append((seen.get(key, 0), message))

    values: dict = {}

    def convert(key, conv, message):
        if key not in raw:
            return None
        try:
            values[key] = conv(raw[key])
        except Exception:
            fail(key, f"{message}: {raw[key]!r}")
            return None
        return values.get(key)

    dim = convert("dim", lambda s: _parse_ints(s)[0], "dim must be an integer")
    if dim is not None and dim not in (1, 2):
        fail("dim", f"dim must be 1 or 2, got {dim}")
    lengths = convert("lengths", _parse_floats, "lengths must be comma-separated reals")
    if lengths is not None and (dim in (1, 2)) and len(lengths) != dim:
        fail("lengths", f"expected {dim} lengths, got {len(lengths)}")
    if lengths is not None and any(not math.isfinite(v) or v <= 0 for v in lengths):
        fail("lengths", f"lengths must be positive, got {lengths}")
    counts = convert("interior_counts", _parse_ints, "interior_counts must be integers")
    if counts is not None and (dim in (1, 2)) and len(counts) != dim:
        fail("interior_counts", f"expected {dim} counts, got {len(counts)}")
    if counts is not None and any(m < 1 for m in counts):
        fail("interior_counts", f"interior counts must be >= 1, got {counts}")
    T = convert("T", float, "T must be a real number")
    if T is not None and (not math.isfinite(T) or T <= 0):
        fail("T", f"T must be positive, got {T}")
    n = convert("n", lambda s: _parse_ints(s)[0], "n must be an integer")
    if n is not None and n < 1:
        fail("n", f"n must be >= 1, got {n}")

    solver = raw.get("solver", "penalty_then_polish")
    if solver not in _SOLVERS:
        fail("solver", f"solver must be one of {_SOLVERS}, got {solver!r}")
    schedule = convert(
        "penalty_eps_schedule", _parse_floats, "schedule must be comma-separated reals"
    )
    if schedule is None:
        schedule = DEFAULT_EPS_SCHEDULE
    elif any(e <= 0 for e in schedule) or any(
        b >= a for a, b in zip(schedule, schedule[1:])
    ):
        fail("penalty_eps_schedule", "schedule must be positive and strictly decreasing")
    newton_tol = convert("newton_tol", float, "newton_tol must be a real number")
    if newton_tol is None:
        newton_tol = 1e-10
    elif newton_tol <= 0:
        fail("newton_tol", "newton_tol must be positive")
    max_newton = convert(
        "max_newton_iters", lambda s: _parse_ints(s)[0], "max_newton_iters must be an integer"
    )
    if max_newton is None:
        max_newton = 100
    elif max_newton < 1:
        fail("max_newton_iters", "max_newton_iters must be >= 1")
    pg_iters = convert(
        "fallback_pg_iters", lambda s: _parse_ints(s)[0], "fallback_pg_iters must be an integer"
    )
    if pg_iters is None:
        pg_iters = 100_000
    elif pg_iters < 1:
        fail("fallback_pg_iters", "fallback_pg_iters must be >= 1")

    emit_fields = raw.get("emit_fields", "last")
    if emit_fields not in _EMIT_FIELDS:
        fail("emit_fields", f"emit_fields must be one of {_EMIT_FIELDS}, got {emit_fields!r}")
    bools = {}
    for key, default in (
        ("emit_diagnostics", True),
        ("emit_aggregates", True),
        ("emit_timings", False),
    ):
        if key not in raw:
            bools[key] = default
        elif raw[key].lower() in _BOOLS:
            bools[key] = _BOOLS[raw[key].lower()]
        else:
            fail(key, f"{key} must be a boolean, got {raw[key]!r}")

    if errors:
        raise ConfigError(errors)

    cfg = RunConfig(
        dim=dim,
        lengths=lengths,
        interior_counts=counts,
        f_spec=raw["f"],
        u0_spec=raw["u0"],
        T=T,
        n=n,
        solver=solver,
        penalty_eps_schedule=tuple(schedule),
        newton_tol=newton_tol,
        max_newton_iters=max_newton,
        fallback_pg_iters=pg_iters,
        emit_fields=emit_fields,
        emit_diagnostics=bools["emit_diagnostics"],
        emit_aggregates=bools["emit_aggregates"],
        emit_timings=bools["emit_timings"],
        base_dir=base_dir,
        echo=dict(sorted(raw.items())),
    )
    # validate the function specs eagerly so bad specs surface as config errors
    grid = build_grid(cfg.dim, cfg.lengths, cfg.interior_counts)
    for key, spec in (("f", cfg.f_spec), ("u0", cfg.u0_spec)):
        try:
            make_sampler(spec, grid, base_dir)
        except ValueError as exc:
            errors.append((seen.get(key, 0), str(exc)))
    if errors:
        raise ConfigError(errors)
    return cfg


def load_config(path: str) -> RunConfig:
    with open(path, "r", encoding="utf-8") as fh:
        text = fh.read()
    return parse_config(text, base_dir=os.path.dirname(os.path.abspath(path)))
