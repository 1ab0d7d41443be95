"""Spatially-coupled density evolution for SC-MN codes.

The coupled recursion is

    x_i <- (1/w) sum_k f( (1/w) sum_j g(x_{i+j-k}); eps_{i-k} ),

with ``k, j = 0..w-1``.  ``f`` is evaluated at bit sections ``m = i - k`` and
averages ``g`` over the checks ``m..m+w-1`` each bit section connects to, so
``x_i`` is the average bit-to-check message arriving at check section ``i``.
Bits outside ``[0, L-1]`` are shortened: they contribute known (zero-erasure)
messages, which is stronger than merely setting ``eps = 0`` there because the
punctured type-1 bits never see the channel.
"""

from __future__ import annotations

from collections.abc import Callable
from dataclasses import dataclass, field

import numpy as np

from .channel import ChannelModel
from .de_core import DegreeProfile, _check_eps, _f, _g
from .errors import ValidationError

DEFAULT_TOL = 1e-10
DEFAULT_MAX_ITER = 50_000
DEFAULT_TOL_EPS = 1e-6


@dataclass(frozen=True)
class CouplingConfig:
    L: int
    w: int
    eps: float

    def __post_init__(self):
        if int(self.L) != self.L or self.L < 1:
            raise ValidationError(f"L must be an integer >= 1, got {self.L!r}")
        if int(self.w) != self.w or self.w < 1:
            raise ValidationError(f"w must be an integer >= 1, got {self.w!r}")
        _check_eps(self.eps)

    @property
    def halo(self) -> int:
        return self.w - 1

    @property
    def size(self) -> int:
        return self.L + 2 * self.halo


@dataclass
class DeProfile:
    """Per-section state over sections ``-(w-1) .. L-1+(w-1)``.

    ``x1[n]`` and ``x2[n]`` belong to section ``n - offset``.
    """

    x1: np.ndarray
    x2: np.ndarray
    offset: int

    @property
    def sections(self) -> np.ndarray:
        return np.arange(self.x1.size) - self.offset

    def interior(self, L: int) -> tuple[np.ndarray, np.ndarray]:
        sl = slice(self.offset, self.offset + L)
        return self.x1[sl], self.x2[sl]

    def copy(self) -> DeProfile:
        return DeProfile(self.x1.copy(), self.x2.copy(), self.offset)


def initial_profile(cfg: CouplingConfig) -> DeProfile:
    """All-erased start: ones at every check section fed by the chain.

    That is sections ``0 .. L+w-2``; the left halo (fed only by shortened
    bits) starts and stays at zero.
    """
    x1 = np.zeros(cfg.size)
    x1[cfg.halo:] = 1.0
    return DeProfile(x1, x1.copy(), cfg.halo)


def zero_profile(cfg: CouplingConfig) -> DeProfile:
    return DeProfile(np.zeros(cfg.size), np.zeros(cfg.size), cfg.halo)


def _check_profile(cfg: CouplingConfig, p: DeProfile) -> None:
    if p.x1.shape != (cfg.size,) or p.x2.shape != (cfg.size,) or p.offset != cfg.halo:
        raise ValidationError(
            f"profile shape {p.x1.shape}/{p.x2.shape} offset {p.offset} does not match "
            f"L={cfg.L}, w={cfg.w} (expected {cfg.size} sections, offset {cfg.halo})"
        )


def _bit_updates(d: DegreeProfile, model: ChannelModel, cfg: CouplingConfig, x1, x2):
    """``f`` at bit sections ``0..L-1`` from the check-section state."""
    w, h = cfg.w, cfg.halo
    g1, g2 = _g(d, x1[h:], x2[h:])
    if w > 1:
        box = np.full(w, 1.0 / w)
        g1 = np.convolve(g1, box, "valid")
        g2 = np.convolve(g2, box, "valid")
    return _f(d, model, g1, g2, np.float64(cfg.eps))


def _step_arrays(d, model, cfg, x1, x2):
    w, h = cfg.w, cfg.halo
    f1, f2 = _bit_updates(d, model, cfg, x1, x2)
    n1 = np.zeros(cfg.size)
    n2 = np.zeros(cfg.size)
    if w > 1:
        box = np.full(w, 1.0 / w)
        f1 = np.convolve(f1, box)
        f2 = np.convolve(f2, box)
    n1[h:] = f1
    n2[h:] = f2
    return n1, n2


def sc_de_step(d: DegreeProfile, model: ChannelModel, cfg: CouplingConfig, p: DeProfile) -> DeProfile:
    """One synchronous update of the whole coupled profile."""
    _check_profile(cfg, p)
    n1, n2 = _step_arrays(d, model, cfg, p.x1, p.x2)
    return DeProfile(n1, n2, p.offset)


def bit_section_messages(d: DegreeProfile, model: ChannelModel, cfg: CouplingConfig, p: DeProfile):
    """Outgoing bit-node messages ``f`` at bit sections ``0..L-1``.

    Unlike the check-indexed profile, this view is mirror symmetric about
    ``(L-1)/2`` for a uniform channel parameter.
    """
    _check_profile(cfg, p)
    return _bit_updates(d, model, cfg, p.x1, p.x2)


@dataclass
class ScDeResult:
    profile: DeProfile
    iterations: int
    decoded: bool
    trace: list[DeProfile] = field(default_factory=list, repr=False)

    def __iter__(self):
        return iter((self.profile, self.iterations, self.decoded))


def sc_de_run(
    d: DegreeProfile,
    model: ChannelModel,
    cfg: CouplingConfig,
    max_iter: int = DEFAULT_MAX_ITER,
    tol: float = DEFAULT_TOL,
    record_every: int = 0,
    callback: Callable[[int, DeProfile], None] | None = None,
) -> ScDeResult:
    """Iterate coupled DE from the all-erased profile.

    ``decoded`` is true iff every interior section ends below ``tol``.  The
    run stops early once decoded or once the profile stops moving
    (sup-norm change below ``tol``).  ``record_every=n`` keeps every n-th
    profile (plus the first and last) in ``trace``; ``callback`` sees every
    iterate.
    """
    if max_iter < 1:
        raise ValidationError("max_iter must be >= 1")
    if not tol > 0:
        raise ValidationError("tol must be positive")
    p = initial_profile(cfg)
    x1, x2 = p.x1, p.x2
    h, L = cfg.halo, cfg.L
    trace = [p.copy()] if record_every else []
    if callback:
        callback(0, p)
    decoded = False
    t = 0
    while t < max_iter:
        n1, n2 = _step_arrays(d, model, cfg, x1, x2)
        t += 1
        delta = max(np.max(np.abs(n1 - x1)), np.max(np.abs(n2 - x2)))
        x1, x2 = n1, n2
        if record_every and t % record_every == 0:
            trace.append(DeProfile(x1, x2, h))
        if callback:
            callback(t, DeProfile(x1, x2, h))
        peak = max(np.max(x1[h:h + L]), np.max(x2[h:h + L]))
        if peak < tol:
            decoded = True
            break
        if delta < tol:
            # stalled at a non-zero fixed point
            break
    final = DeProfile(x1, x2, h)
    if record_every and (not trace or trace[-1].x1 is not x1):
        trace.append(final)
    return ScDeResult(final, t, decoded, trace)


def decodes(d: DegreeProfile, model: ChannelModel, L: int, w: int, eps: float,
            max_iter: int = DEFAULT_MAX_ITER, tol: float = DEFAULT_TOL) -> bool:
    return sc_de_run(d, model, CouplingConfig(L, w, eps), max_iter, tol).decoded


def bp_threshold(
    d: DegreeProfile,
    model: ChannelModel,
    L: int,
    w: int,
    tol_eps: float = DEFAULT_TOL_EPS,
    max_iter: int = DEFAULT_MAX_ITER,
    tol: float = DEFAULT_TOL,
) -> float:
    """Supremum ``eps`` for which coupled DE decodes, by bisection to ``tol_eps``.

    Returns the largest probe known to decode (0 when even ``eps = 0``
    fails, as for ``w = 1``).  Midpoints depend only on the outcomes, so a
    predicate that decodes on a superset of ``eps`` never yields a smaller
    result.
    """
    if not tol_eps > 0:
        raise ValidationError("tol_eps must be positive")
    CouplingConfig(L, w, 0.0)
    if not decodes(d, model, L, w, 0.0, max_iter, tol):
        return 0.0
    if decodes(d, model, L, w, 1.0, max_iter, tol):
        return 1.0
    lo, hi = 0.0, 1.0
    while hi - lo > tol_eps:
        mid = 0.5 * (lo + hi)
        if decodes(d, model, L, w, mid, max_iter, tol):
            lo = mid
        else:
            hi = mid
    return lo


def rate(d: DegreeProfile, L: int, w: int) -> float:
    """Design rate of the SC-MN chain, including the boundary rate loss."""
    if int(L) != L or L < 1 or int(w) != w or w < 1:
        raise ValidationError(f"L and w must be integers >= 1, got L={L!r}, w={w!r}")
    e = d.d_r + d.d_g
    total = sum(1.0 - (i / w) ** e for i in range(w + 1))
    return d.d_r / d.d_l + (1 + w - 2.0 * total) / L
