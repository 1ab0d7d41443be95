"""Density evolution of (d_l, d_r, d_g) MacKay-Neal codes over a GEC.

The recursion is ``x <- f(g(x); eps)`` on pairs ``(x1, x2)`` of erasure
probabilities on type-1 (punctured, degree d_l) and type-2 (transmitted,
degree d_g) edges.  All maps accept numpy arrays and broadcast.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .channel import ChannelModel, phi, phi_integral
from .errors import DomainError, ValidationError

DEFAULT_TOL = 1e-12
DEFAULT_MAX_ITER = 100_000


def ipow(x, n: int):
    """``x ** n`` for a non-negative integer ``n`` by repeated squaring."""
    if n < 0:
        raise ValueError("exponent must be non-negative")
    base = x if isinstance(x, np.ndarray) else np.asarray(x, dtype=float)
    result = None
    while n:
        if n & 1:
            result = base if result is None else result * base
        n >>= 1
        if n:
            base = base * base
    if result is None:
        result = np.ones_like(base, dtype=float)
    return float(result) if result.ndim == 0 else result


@dataclass(frozen=True)
class DegreeProfile:
    """Node degrees of the MN ensemble.

    ``d_l``: type-1 bit degree, ``d_r``: type-1 edges per check,
    ``d_g``: type-2 bit degree (and type-2 edges per check).
    """

    d_l: int
    d_r: int
    d_g: int

    def __post_init__(self):
        for label in ("d_l", "d_r", "d_g"):
            value = getattr(self, label)
            if isinstance(value, bool) or not isinstance(value, (int, np.integer)) or value < 2:
                raise ValidationError(f"{label} must be an integer >= 2, got {value!r}")
        if self.d_l <= self.d_r:
            raise ValidationError(
                f"d_l must exceed d_r (threshold results hold only for d_l > d_r), "
                f"got d_l={self.d_l}, d_r={self.d_r}"
            )

    @property
    def design_rate(self) -> float:
        return self.d_r / self.d_l

    def __str__(self) -> str:
        return f"({self.d_l},{self.d_r},{self.d_g})"


class DeState(NamedTuple):
    """Erasure probabilities on type-1 and type-2 edges (scalars or arrays)."""

    x1: float | np.ndarray
    x2: float | np.ndarray


def _check_state(s) -> tuple[np.ndarray, np.ndarray]:
    x1 = np.asarray(s[0], dtype=float)
    x2 = np.asarray(s[1], dtype=float)
    for name, v in (("x1", x1), ("x2", x2)):
        if np.any(np.isnan(v)) or np.any(v < 0.0) or np.any(v > 1.0):
            raise DomainError(f"{name} must lie in [0, 1]")
    return x1, x2


def _check_eps(eps) -> np.ndarray:
    e = np.asarray(eps, dtype=float)
    if np.any(np.isnan(e)) or np.any(e < 0.0) or np.any(e > 1.0):
        raise DomainError(f"eps must lie in [0, 1], got {eps!r}")
    return e


def _state(a: np.ndarray, b: np.ndarray) -> DeState:
    if np.ndim(a) == 0 and np.ndim(b) == 0:
        return DeState(float(a), float(b))
    return DeState(a, b)


def _g(d: DegreeProfile, x1, x2):
    y1 = 1.0 - x1
    y2 = 1.0 - x2
    a = ipow(y1, d.d_r - 1)
    b = ipow(y2, d.d_g - 1)
    return 1.0 - a * b * y2, 1.0 - a * y1 * b


def _f(d: DegreeProfile, model: ChannelModel, x1, x2, eps):
    t = ipow(x2, d.d_g - 1)
    return ipow(x1, d.d_l - 1), model.phi_fn(t * x2, eps) * t


def g_map(d: DegreeProfile, s) -> DeState:
    """Check-node update: ``(1-(1-x1)^(d_r-1)(1-x2)^d_g, 1-(1-x1)^d_r(1-x2)^(d_g-1))``."""
    x1, x2 = _check_state(s)
    return _state(*_g(d, x1, x2))


def f_map(d: DegreeProfile, model: ChannelModel, s, eps) -> DeState:
    """Bit-node update ``(x1^(d_l-1), phi(x2^d_g; eps) * x2^(d_g-1))``.

    The type-2 component carries the extrinsic factor ``x2^(d_g-1)`` so that
    ``f`` is the gradient of ``F(x) = (d_r/d_l) x1^d_l + Phi(x2^d_g)`` scaled
    by ``diag(d_r, d_g)``.
    """
    x1, x2 = _check_state(s)
    return _state(*_f(d, model, x1, x2, _check_eps(eps)))


def de_step(d: DegreeProfile, model: ChannelModel, s, eps) -> DeState:
    """One round ``f(g(s); eps)``."""
    x1, x2 = _check_state(s)
    e = _check_eps(eps)
    g1, g2 = _g(d, x1, x2)
    return _state(*_f(d, model, g1, g2, e))


@dataclass(frozen=True)
class DeResult:
    state: DeState
    iterations: int
    converged_to_zero: bool
    trace: list[DeState] | None = None

    def __iter__(self):
        # unpacks as (state, iterations, converged_to_zero)
        return iter((self.state, self.iterations, self.converged_to_zero))


def de_run(
    d: DegreeProfile,
    model: ChannelModel,
    eps: float,
    max_iter: int = DEFAULT_MAX_ITER,
    tol: float = DEFAULT_TOL,
    record: bool = False,
) -> DeResult:
    """Iterate uncoupled DE from ``(1, 1)``.

    Stops when the sup-norm change drops below ``tol`` or after ``max_iter``
    rounds.  With punctured type-1 bits the all-ones start always stalls at
    the trivial fixed point ``(1, phi(1; eps))``; uncoupled MN codes need
    coupling to decode.
    """
    if max_iter < 1:
        raise ValidationError("max_iter must be >= 1")
    if not tol > 0:
        raise ValidationError("tol must be positive")
    e = np.float64(_check_eps(eps))
    x1, x2 = 1.0, 1.0
    trace = [DeState(x1, x2)] if record else None
    t = 0
    while t < max_iter:
        g1, g2 = _g(d, x1, x2)
        n1, n2 = _f(d, model, g1, g2, e)
        n1, n2 = float(n1), float(n2)
        t += 1
        delta = max(abs(n1 - x1), abs(n2 - x2))
        x1, x2 = n1, n2
        if record:
            trace.append(DeState(x1, x2))
        if delta < tol:
            break
    return DeResult(DeState(x1, x2), t, max(x1, x2) < tol, trace)


def uncoupled_bp_threshold(
    d: DegreeProfile,
    model: ChannelModel,
    tol_eps: float = 1e-6,
    max_iter: int = DEFAULT_MAX_ITER,
    tol: float = DEFAULT_TOL,
) -> float:
    """Largest ``eps`` (to ``tol_eps``) at which :func:`de_run` reaches zero; 0 if none."""
    if not de_run(d, model, 0.0, max_iter, tol).converged_to_zero:
        return 0.0
    lo, hi = 0.0, 1.0
    while hi - lo > tol_eps:
        mid = 0.5 * (lo + hi)
        if de_run(d, model, mid, max_iter, tol).converged_to_zero:
            lo = mid
        else:
            hi = mid
    return lo


def regular_ldpc_de_step(d_l: int, d_r: int, model: ChannelModel, x, eps):
    """One DE round for a (d_l, d_r) regular LDPC code over the GEC."""
    xa = np.asarray(x, dtype=float)
    if np.any(xa < 0.0) or np.any(xa > 1.0):
        raise DomainError("x must lie in [0, 1]")
    inner = 1.0 - ipow(1.0 - xa, d_r - 1)
    t = ipow(inner, d_l - 1)
    out = phi(model, t * inner, eps) * t
    return float(out) if np.ndim(out) == 0 else out


# ---------------------------------------------------------------------------
# potentials of the admissible system


def F_potential(d: DegreeProfile, model: ChannelModel, x1, x2, eps):
    """``F(x; eps) = (d_r/d_l) x1^d_l + Phi(x2^d_g; eps)``."""
    return d.d_r / d.d_l * ipow(x1, d.d_l) + phi_integral(model, ipow(x2, d.d_g), eps)


def G_potential(d: DegreeProfile, x1, x2):
    """``G(x) = d_r x1 + d_g x2 + (1-x1)^d_r (1-x2)^d_g - 1``."""
    return d.d_r * x1 + d.d_g * x2 + ipow(1.0 - np.asarray(x1, float), d.d_r) * ipow(
        1.0 - np.asarray(x2, float), d.d_g
    ) - 1.0
