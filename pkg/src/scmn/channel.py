"""Generalized erasure channels described by their detector transfer function.

A channel is fully characterized, for density-evolution purposes, by
``phi(x; eps)``: the erasure probability of detector-to-decoder messages when
decoder-to-detector messages are erased with probability ``x``.  Its definite
integral ``Phi(x; eps)`` gives the symmetric information rate
``I(eps) = 1 - Phi(1; eps)``.

Three channels are built in (BEC, dicode erasure, PR2 erasure); anything else
is loaded from a sampled table in a JSON or TOML file.
"""

from __future__ import annotations

import enum
import functools
import json
from collections.abc import Callable
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import numpy as np

from .errors import ChannelConfigError, DomainError, NoSolutionError
from .quadrature import DEFAULT_MAX_DEPTH, DEFAULT_TOL, adaptive_simpson

try:
    import tomllib
except ModuleNotFoundError:  # python < 3.11
    import tomli as tomllib

ArrayLike = float | np.ndarray
TransferFn = Callable[[np.ndarray, np.ndarray], np.ndarray]

SIR_LIMIT_TOL = 1e-10
MIN_X_GRID = 64
# grid used to validate monotonicity of closed-form transfer functions
VALIDATION_GRID = 65


class ChannelKind(str, enum.Enum):
    BEC = "builtin_bec"
    DEC = "builtin_dec"
    PR2 = "builtin_pr2"
    CUSTOM = "custom"


@dataclass(frozen=True)
class ChannelModel:
    """An immutable GEC.

    ``phi_fn`` and ``phi_integral_fn`` take broadcastable float arrays and do
    no domain checking; use :func:`phi` and :func:`phi_integral` from outside
    this module.
    """

    name: str
    phi_fn: TransferFn = field(repr=False)
    phi_integral_fn: TransferFn | None = field(default=None, repr=False)
    kind: ChannelKind = ChannelKind.CUSTOM


def _as_unit(name: str, value: ArrayLike) -> np.ndarray:
    arr = np.asarray(value, dtype=float)
    if np.any(np.isnan(arr)) or np.any(arr < 0.0) or np.any(arr > 1.0):
        raise DomainError(f"{name} must lie in [0, 1], got {value!r}")
    return arr


def _out(arr: np.ndarray) -> ArrayLike:
    return float(arr) if arr.ndim == 0 else arr


# ---------------------------------------------------------------------------
# built-in closed forms


def _phi_bec(x: np.ndarray, eps: np.ndarray) -> np.ndarray:
    return np.broadcast_to(eps, np.broadcast(x, eps).shape).astype(float)


def _Phi_bec(x: np.ndarray, eps: np.ndarray) -> np.ndarray:
    return eps * x


def _phi_dec(x: np.ndarray, eps: np.ndarray) -> np.ndarray:
    den = 2.0 - x * (1.0 - eps)
    return 4.0 * eps * eps / (den * den)


def _Phi_dec(x: np.ndarray, eps: np.ndarray) -> np.ndarray:
    # 4e^2/((1-e)(2-(1-e)x)) - 2e^2/(1-e), with the (1-e) factor cancelled
    return 2.0 * eps * eps * x / (2.0 - (1.0 - eps) * x)


def _pr2_den(x: np.ndarray, eps: np.ndarray) -> np.ndarray:
    return 4.0 - 2.0 * (1.0 - eps * eps) * x - (1.0 - eps) * eps * eps * x * x


def _phi_pr2(x: np.ndarray, eps: np.ndarray) -> np.ndarray:
    num = 4.0 * eps**3 * (4.0 - 4.0 * (1.0 - eps) * x + (1.0 - eps) * x * x)
    den = _pr2_den(x, eps)
    return num / (den * den)


def _Phi_pr2(x: np.ndarray, eps: np.ndarray) -> np.ndarray:
    return 4.0 * eps * (0.5 - (2.0 - x) / _pr2_den(x, eps))


_BUILTINS: dict[str, tuple[ChannelKind, TransferFn, TransferFn]] = {
    "bec": (ChannelKind.BEC, _phi_bec, _Phi_bec),
    "dec": (ChannelKind.DEC, _phi_dec, _Phi_dec),
    "pr2": (ChannelKind.PR2, _phi_pr2, _Phi_pr2),
}

BUILTIN_NAMES = tuple(_BUILTINS)


@functools.lru_cache(maxsize=None)
def builtin(name: str) -> ChannelModel:
    """Return the built-in channel ``name`` (``bec``, ``dec`` or ``pr2``)."""
    try:
        kind, fn, integral = _BUILTINS[name.lower()]
    except KeyError:
        raise ChannelConfigError(
            f"unknown channel {name!r}; expected one of {', '.join(BUILTIN_NAMES)} "
            "or a path to a .json/.toml table"
        ) from None
    model = ChannelModel(name=name.lower(), phi_fn=fn, phi_integral_fn=integral, kind=kind)
    check_transfer_function(model)
    return model


def bec() -> ChannelModel:
    return builtin("bec")


def dec() -> ChannelModel:
    return builtin("dec")


def pr2() -> ChannelModel:
    return builtin("pr2")


# ---------------------------------------------------------------------------
# public operations


def phi(model: ChannelModel, x: ArrayLike, eps: ArrayLike) -> ArrayLike:
    """Evaluate the transfer function ``phi(x; eps)``."""
    xa = _as_unit("x", x)
    ea = _as_unit("eps", eps)
    return _out(np.asarray(model.phi_fn(xa, ea), dtype=float))


def phi_integral_quad(
    model: ChannelModel,
    x: float,
    eps: float,
    tol: float = DEFAULT_TOL,
    max_depth: int = DEFAULT_MAX_DEPTH,
) -> float:
    """``Phi(x; eps)`` by adaptive Simpson quadrature of ``phi``, ignoring any closed form."""
    x = float(_as_unit("x", x))
    eps = float(_as_unit("eps", eps))
    e = np.float64(eps)
    return adaptive_simpson(lambda t: float(model.phi_fn(np.float64(t), e)), 0.0, x, tol, max_depth)


def phi_integral(model: ChannelModel, x: ArrayLike, eps: ArrayLike) -> ArrayLike:
    """``Phi(x; eps)``, the integral of ``phi`` from 0 to ``x``.

    Uses the model's closed form when it has one, quadrature otherwise.
    """
    xa = _as_unit("x", x)
    ea = _as_unit("eps", eps)
    if model.phi_integral_fn is not None:
        return _out(np.asarray(model.phi_integral_fn(xa, ea), dtype=float))
    xb, eb = np.broadcast_arrays(xa, ea)
    flat = [phi_integral_quad(model, xi, ei) for xi, ei in zip(xb.ravel(), eb.ravel())]
    return _out(np.asarray(flat, dtype=float).reshape(xb.shape))


def sir(model: ChannelModel, eps: ArrayLike) -> ArrayLike:
    """Symmetric information rate ``I(eps) = 1 - Phi(1; eps)``."""
    ea = _as_unit("eps", eps)
    return _out(1.0 - np.asarray(phi_integral(model, np.ones_like(ea), ea), dtype=float))


def sir_limit(model: ChannelModel, rate: float, tol: float = SIR_LIMIT_TOL) -> float:
    """Channel parameter at which the SIR equals ``rate``.

    Bisection on ``eps``; the SIR is strictly decreasing in ``eps`` because
    ``phi`` is strictly increasing in it.
    """
    if not 0.0 < rate < 1.0:
        raise DomainError(f"rate must lie in (0, 1), got {rate!r}")
    hi_rate = float(sir(model, 0.0))
    lo_rate = float(sir(model, 1.0))
    if not lo_rate <= rate <= hi_rate:
        raise NoSolutionError(
            f"rate {rate} outside the SIR range [{lo_rate:.12g}, {hi_rate:.12g}] "
            f"of channel {model.name!r}"
        )
    lo, hi = 0.0, 1.0
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if float(sir(model, mid)) > rate:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def check_transfer_function(model: ChannelModel, n: int = VALIDATION_GRID) -> None:
    """Validate range and monotonicity of ``phi`` on an ``n x n`` grid.

    Raises :class:`ChannelConfigError` naming the first offending ``(eps, x)``
    grid index.
    """
    grid = np.linspace(0.0, 1.0, n)
    table = np.asarray(model.phi_fn(grid[None, :], grid[:, None]), dtype=float)
    _check_table(table, model.name)


def _check_table(table: np.ndarray, name: str) -> None:
    bad = np.argwhere(~np.isfinite(table) | (table < 0.0) | (table > 1.0))
    if bad.size:
        k, j = bad[0]
        raise ChannelConfigError(
            f"{name}: phi value {table[k, j]!r} outside [0, 1] at cell (eps={k}, x={j})"
        )
    bad = np.argwhere(np.diff(table, axis=1) < 0.0)
    if bad.size:
        k, j = bad[0]
        raise ChannelConfigError(
            f"{name}: phi decreases along x at cell (eps={k}, x={j + 1})"
        )
    # strictly increasing in eps is only required for x > 0
    bad = np.argwhere(np.diff(table[:, 1:], axis=0) <= 0.0)
    if bad.size:
        k, j = bad[0]
        raise ChannelConfigError(
            f"{name}: phi not strictly increasing along eps at cell (eps={k + 1}, x={j + 1})"
        )


# ---------------------------------------------------------------------------
# tabulated channels


@dataclass(frozen=True)
class CustomChannelSpec:
    """Sampled transfer function: one row of ``phi`` per entry of ``eps_grid``.

    Rows are sampled on a uniform grid of ``x_grid_size`` points over [0, 1].
    ``eps_grid`` must run from 0 to 1 so every channel parameter is covered.
    """

    name: str
    eps_grid: tuple[float, ...]
    x_grid_size: int
    phi_tables: tuple[tuple[float, ...], ...]

    def validate(self) -> None:
        eps = np.asarray(self.eps_grid, dtype=float)
        if eps.ndim != 1 or eps.size < 2:
            raise ChannelConfigError(f"{self.name}: eps_grid needs at least two values")
        if eps[0] != 0.0 or eps[-1] != 1.0:
            raise ChannelConfigError(f"{self.name}: eps_grid must start at 0 and end at 1")
        steps = np.diff(eps)
        if np.any(steps <= 0.0):
            k = int(np.argmax(steps <= 0.0)) + 1
            raise ChannelConfigError(f"{self.name}: eps_grid not strictly increasing at index {k}")
        if int(self.x_grid_size) != self.x_grid_size or self.x_grid_size < MIN_X_GRID:
            raise ChannelConfigError(
                f"{self.name}: x_grid_size must be an integer >= {MIN_X_GRID}, got {self.x_grid_size!r}"
            )
        if len(self.phi_tables) != eps.size:
            raise ChannelConfigError(
                f"{self.name}: expected {eps.size} phi_tables rows (one per eps), got {len(self.phi_tables)}"
            )
        for k, row in enumerate(self.phi_tables):
            if len(row) != self.x_grid_size:
                raise ChannelConfigError(
                    f"{self.name}: phi_tables row {k} has {len(row)} entries, expected {self.x_grid_size}"
                )
        _check_table(np.asarray(self.phi_tables, dtype=float), self.name)

    def to_model(self) -> ChannelModel:
        self.validate()
        interp = _TableInterpolant(
            np.asarray(self.eps_grid, dtype=float),
            np.asarray(self.phi_tables, dtype=float),
        )
        return ChannelModel(
            name=self.name,
            phi_fn=interp.phi,
            phi_integral_fn=interp.integral,
            kind=ChannelKind.CUSTOM,
        )


class _TableInterpolant:
    """Bilinear interpolation of a sampled ``phi`` and its exact integral in x."""

    def __init__(self, eps_grid: np.ndarray, table: np.ndarray):
        self.eps_grid = eps_grid
        self.table = table
        self.n = table.shape[1] - 1
        self.h = 1.0 / self.n
        # cumulative trapezoid: exact integral of each piecewise-linear row
        seg = 0.5 * self.h * (table[:, 1:] + table[:, :-1])
        self.cum = np.concatenate([np.zeros((table.shape[0], 1)), np.cumsum(seg, axis=1)], axis=1)

    def _locate(self, x: np.ndarray, eps: np.ndarray):
        x, eps = np.broadcast_arrays(np.asarray(x, float), np.asarray(eps, float))
        k = np.clip(np.searchsorted(self.eps_grid, eps, side="right") - 1, 0, len(self.eps_grid) - 2)
        t = (eps - self.eps_grid[k]) / (self.eps_grid[k + 1] - self.eps_grid[k])
        pos = x * self.n
        j = np.clip(np.floor(pos).astype(int), 0, self.n - 1)
        u = pos - j
        return k, t, j, u

    def phi(self, x: np.ndarray, eps: np.ndarray) -> np.ndarray:
        k, t, j, u = self._locate(x, eps)
        tab = self.table
        lo = (1.0 - u) * tab[k, j] + u * tab[k, j + 1]
        hi = (1.0 - u) * tab[k + 1, j] + u * tab[k + 1, j + 1]
        return (1.0 - t) * lo + t * hi

    def integral(self, x: np.ndarray, eps: np.ndarray) -> np.ndarray:
        k, t, j, u = self._locate(x, eps)

        def row(kk):
            a = self.table[kk, j]
            b = self.table[kk, j + 1]
            return self.cum[kk, j] + self.h * (u * a + 0.5 * u * u * (b - a))

        return (1.0 - t) * row(k) + t * row(k + 1)


def custom_spec_from_mapping(data: dict[str, Any], default_name: str = "custom") -> CustomChannelSpec:
    missing = [key for key in ("eps_grid", "x_grid_size", "phi_tables") if key not in data]
    if missing:
        raise ChannelConfigError(f"channel config missing field(s): {', '.join(missing)}")
    try:
        return CustomChannelSpec(
            name=str(data.get("name", default_name)),
            eps_grid=tuple(float(v) for v in data["eps_grid"]),
            x_grid_size=data["x_grid_size"],
            phi_tables=tuple(tuple(float(v) for v in row) for row in data["phi_tables"]),
        )
    except (TypeError, ValueError) as exc:
        raise ChannelConfigError(f"malformed channel config: {exc}") from exc


def load_custom_channel(path: str | Path) -> ChannelModel:
    """Load and validate a tabulated channel from a ``.json`` or ``.toml`` file."""
    path = Path(path)
    try:
        raw = path.read_bytes()
    except OSError as exc:
        raise ChannelConfigError(f"cannot read channel config {path}: {exc}") from exc
    try:
        if path.suffix.lower() == ".toml":
            data = tomllib.loads(raw.decode("utf-8"))
        else:
            data = json.loads(raw)
    except (ValueError, UnicodeDecodeError) as exc:
        raise ChannelConfigError(f"cannot parse channel config {path}: {exc}") from exc
    if not isinstance(data, dict):
        raise ChannelConfigError(f"channel config {path} must be a table/object")
    return custom_spec_from_mapping(data, default_name=path.stem).to_model()


def resolve_channel(name_or_path: str) -> ChannelModel:
    """Built-in channel by name, otherwise a table file path."""
    if name_or_path.lower() in _BUILTINS:
        return builtin(name_or_path)
    if Path(name_or_path).suffix.lower() in (".json", ".toml"):
        return load_custom_channel(name_or_path)
    return builtin(name_or_path)  # raises with the list of valid names


def tabulate(model: ChannelModel, eps_grid: np.ndarray, x_grid_size: int, name: str | None = None) -> CustomChannelSpec:
    """Sample ``model`` into a :class:`CustomChannelSpec` (handy for tests and PR3-style inputs)."""
    x = np.linspace(0.0, 1.0, x_grid_size)
    table = np.asarray(model.phi_fn(x[None, :], np.asarray(eps_grid, float)[:, None]), dtype=float)
    return CustomChannelSpec(
        name=name or f"{model.name}-table",
        eps_grid=tuple(float(e) for e in eps_grid),
        x_grid_size=x_grid_size,
        phi_tables=tuple(tuple(float(v) for v in row) for row in table),
    )

