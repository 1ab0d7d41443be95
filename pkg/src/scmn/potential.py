"""Potential function and fixed-point structure of MN density evolution.

Non-trivial fixed points are parameterized by ``x1 in (0, 1)``: the first
fixed-point equation is solved in closed form for ``x2[x1]``, and the channel
parameter ``eps[x1]`` that makes the second equation hold is found by
bisection.  ``x2[x1]``, ``psi[x1]`` and ``phi[x1]`` do not involve the
channel; only ``eps[x1]`` does.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numpy as np

from .channel import ChannelModel, phi_integral, sir_limit
from .de_core import DegreeProfile, F_potential, G_potential, _g, ipow
from .errors import DomainError, ExcludedPointError, ValidationError

EPS_BISECT_TOL = 1e-12
SECANT_TOL = 1e-10
DEFAULT_THRESHOLD_GRID = 4096
DEFAULT_CURVE_GRID = 1024


@dataclass(frozen=True)
class PotentialSample:
    x1: float
    x2: float
    psi: float | None
    phi_bracket: float | None
    eps: float | None
    U: float | None
    valid: bool

    def as_dict(self) -> dict:
        return asdict(self)


@dataclass(frozen=True)
class ThresholdReport:
    eps_star: float
    eps_sir: float
    min_nontrivial_U: float
    argmin_x1: float
    grid_size: int
    # smallest eps[x1] among non-trivial points with U <= 0 (None if there is none)
    eps_nonpositive: float | None = None


def _open_unit(name, x) -> np.ndarray:
    a = np.asarray(x, dtype=float)
    if np.any(np.isnan(a)) or np.any(a <= 0.0) or np.any(a >= 1.0):
        raise DomainError(f"{name} must lie in the open interval (0, 1)")
    return a


def _out(a):
    return float(a) if np.ndim(a) == 0 else a


# ---------------------------------------------------------------------------
# potential function


def _cross_terms(d: DegreeProfile, x1, x2):
    # (1-x1)^d_r (1-x2)^d_g (1 + d_r x1/(1-x1) + d_g x2/(1-x2)) with the
    # removable singularities at x = 1 expanded away
    y1 = 1.0 - x1
    y2 = 1.0 - x2
    a = ipow(y1, d.d_r - 1)
    b = ipow(y2, d.d_g - 1)
    return a * b * (y1 * y2 + d.d_r * x1 * y2 + d.d_g * x2 * y1)


def _U(d: DegreeProfile, model: ChannelModel, x1, x2, eps):
    g1, g2 = _g(d, x1, x2)
    return (
        1.0
        - np.asarray(phi_integral(model, ipow(g2, d.d_g), eps))
        - d.d_r / d.d_l * ipow(g1, d.d_l)
        - _cross_terms(d, x1, x2)
    )


def potential_U(d: DegreeProfile, model: ChannelModel, x1, x2, eps):
    """Potential ``U(x1, x2; eps)`` of the MN admissible system (explicit form)."""
    a1 = np.asarray(x1, dtype=float)
    a2 = np.asarray(x2, dtype=float)
    for name, v in (("x1", a1), ("x2", a2)):
        if np.any(np.isnan(v)) or np.any(v < 0.0) or np.any(v > 1.0):
            raise DomainError(f"{name} must lie in [0, 1]")
    return _out(_U(d, model, a1, a2, eps))


def potential_U_general(d: DegreeProfile, model: ChannelModel, x1, x2, eps):
    """``g(x) D x^T - G(x) - F(g(x); eps)`` built from the scalar potentials.

    Independent of :func:`potential_U`; the two must agree.
    """
    a1 = np.asarray(x1, dtype=float)
    a2 = np.asarray(x2, dtype=float)
    g1, g2 = _g(d, a1, a2)
    gdx = d.d_r * g1 * a1 + d.d_g * g2 * a2
    return _out(gdx - G_potential(d, a1, a2) - F_potential(d, model, g1, g2, eps))


def trivial_U(d: DegreeProfile, model: ChannelModel, eps):
    """Potential at the trivial fixed point ``(1, phi(1; eps))``: ``1 - d_r/d_l - Phi(1; eps)``."""
    return _out(1.0 - d.design_rate - np.asarray(phi_integral(model, 1.0, eps)))


# ---------------------------------------------------------------------------
# non-trivial fixed-point curve


def _x2_of_x1(d: DegreeProfile, x1):
    # 1 - x1^(1/(d_l-1)), accurate as x1 -> 1
    num = -np.expm1(np.log(x1) / (d.d_l - 1))
    ratio = num / ipow(1.0 - x1, d.d_r - 1)
    return 1.0 - ratio ** (1.0 / d.d_g)


def x2_of_x1(d: DegreeProfile, x1):
    """Solve the type-1 fixed-point equation for ``x2``; may fall outside [0, 1]."""
    return _out(_x2_of_x1(d, _open_unit("x1", x1)))


def _base(d: DegreeProfile, x1, x2):
    # 1 - (1-x1)^d_r (1-x2)^(d_g-1)
    return 1.0 - ipow(1.0 - x1, d.d_r) * ipow(1.0 - x2, d.d_g - 1)


def _valid_x2(x2) -> np.ndarray:
    return np.isfinite(x2) & (x2 >= 0.0) & (x2 <= 1.0)


def psi_of_x1(d: DegreeProfile, x1):
    """``psi[x1] = (1 - (1-x1)^d_r (1-x2[x1])^(d_g-1))^d_g``; channel independent."""
    a = _open_unit("x1", x1)
    x2 = _x2_of_x1(d, a)
    if not np.all(_valid_x2(x2)):
        raise ExcludedPointError("x2[x1] outside [0, 1]; not a fixed point")
    return _out(ipow(_base(d, a, x2), d.d_g))


def phi_bracket_of_x1(d: DegreeProfile, x1):
    """Value ``phi[x1]`` the transfer function must take at ``psi[x1]``.

    Equals ``eps_BEC[x1]``.
    """
    a = _open_unit("x1", x1)
    x2 = _x2_of_x1(d, a)
    if not np.all(_valid_x2(x2)):
        raise ExcludedPointError("x2[x1] outside [0, 1]; not a fixed point")
    return _out(x2 / ipow(_base(d, a, x2), d.d_g - 1))


def solve_eps(model: ChannelModel, psi, target, tol: float = EPS_BISECT_TOL):
    """Solve ``phi(psi; eps) = target`` for ``eps`` elementwise by bisection.

    Entries whose target lies outside ``[phi(psi; 0), phi(psi; 1)]`` come
    back as NaN.
    """
    psi = np.asarray(psi, dtype=float)
    target = np.asarray(target, dtype=float)
    psi, target = np.broadcast_arrays(psi, target)
    lo_val = np.asarray(model.phi_fn(psi, np.zeros_like(psi)), dtype=float)
    hi_val = np.asarray(model.phi_fn(psi, np.ones_like(psi)), dtype=float)
    ok = np.isfinite(target) & (target >= lo_val) & (target <= hi_val)
    lo = np.zeros(psi.shape)
    hi = np.ones(psi.shape)
    n_iter = max(1, math.ceil(math.log2(1.0 / tol)))
    for _ in range(n_iter):
        mid = 0.5 * (lo + hi)
        below = np.asarray(model.phi_fn(psi, mid), dtype=float) < target
        lo = np.where(below, mid, lo)
        hi = np.where(below, hi, mid)
    eps = 0.5 * (lo + hi)
    # exact endpoint solutions (e.g. target == phi(psi; 0) == 0)
    eps = np.where(target == lo_val, 0.0, eps)
    eps = np.where((target == hi_val) & (target != lo_val), 1.0, eps)
    return np.where(ok, eps, np.nan)


@dataclass(frozen=True)
class _Curve:
    x1: np.ndarray
    x2: np.ndarray
    psi: np.ndarray
    phi_bracket: np.ndarray
    eps: np.ndarray
    U: np.ndarray
    valid: np.ndarray


def _curve(d: DegreeProfile, model: ChannelModel, x1: np.ndarray) -> _Curve:
    x2 = _x2_of_x1(d, x1)
    in_range = _valid_x2(x2)
    x2c = np.where(in_range, x2, 0.0)
    base = _base(d, x1, x2c)
    psi = ipow(base, d.d_g)
    pb = x2c / ipow(base, d.d_g - 1)
    eps = np.full(x1.shape, np.nan)
    if np.any(in_range):
        eps[in_range] = solve_eps(model, psi[in_range], pb[in_range])
    valid = in_range & np.isfinite(eps)
    U = np.full(x1.shape, np.nan)
    if np.any(valid):
        U[valid] = _U(d, model, x1[valid], x2[valid], eps[valid])
    nan = np.nan
    return _Curve(
        x1=x1,
        x2=x2,
        psi=np.where(in_range, psi, nan),
        phi_bracket=np.where(in_range, pb, nan),
        eps=eps,
        U=U,
        valid=valid,
    )


def eps_of_x1(d: DegreeProfile, model: ChannelModel, x1):
    """Channel parameter at which ``(x1, x2[x1])`` is a fixed point.

    ``None`` (NaN inside arrays) for excluded points.
    """
    a = _open_unit("x1", x1)
    c = _curve(d, model, np.atleast_1d(a))
    if np.ndim(a) == 0:
        return None if not c.valid[0] else float(c.eps[0])
    return c.eps


def x1_grid(grid_size: int) -> np.ndarray:
    """Open uniform grid ``(k + 1/2)/N``, ``k = 0..N-1``."""
    if int(grid_size) != grid_size or grid_size < 2:
        raise ValidationError(f"grid size must be an integer >= 2, got {grid_size!r}")
    return (np.arange(grid_size) + 0.5) / grid_size


def curve_arrays(d: DegreeProfile, model: ChannelModel, grid_size: int = DEFAULT_CURVE_GRID) -> _Curve:
    """Vectorized form of :func:`potential_curve`; invalid entries are NaN."""
    return _curve(d, model, x1_grid(grid_size))


def potential_curve(d: DegreeProfile, model: ChannelModel, grid_size: int = DEFAULT_CURVE_GRID) -> list[PotentialSample]:
    """Sample ``U(x1, x2[x1]; eps[x1])`` along the non-trivial fixed-point curve."""
    c = curve_arrays(d, model, grid_size)

    def opt(v, keep):
        return float(v) if keep and np.isfinite(v) else None

    out = []
    for i in range(c.x1.size):
        in_range = bool(_valid_x2(c.x2[i]))
        v = bool(c.valid[i])
        out.append(
            PotentialSample(
                x1=float(c.x1[i]),
                x2=float(c.x2[i]),
                psi=opt(c.psi[i], in_range),
                phi_bracket=opt(c.phi_bracket[i], in_range),
                eps=opt(c.eps[i], v),
                U=opt(c.U[i], v),
                valid=v,
            )
        )
    return out


def fixed_point_residuals(d: DegreeProfile, model: ChannelModel, x1, x2, eps):
    """Residuals of the two fixed-point equations at ``(x1, x2; eps)``."""
    x1 = np.asarray(x1, float)
    x2 = np.asarray(x2, float)
    g1, g2 = _g(d, x1, x2)
    r1 = ipow(g1, d.d_l - 1) - x1
    t = ipow(g2, d.d_g - 1)
    r2 = np.asarray(model.phi_fn(t * g2, np.asarray(eps, float))) * t - x2
    return r1, r2


# ---------------------------------------------------------------------------
# thresholds


def potential_threshold(d: DegreeProfile, model: ChannelModel, grid_size: int = DEFAULT_THRESHOLD_GRID) -> ThresholdReport:
    """Potential threshold from the trivial point and the sampled non-trivial curve.

    ``eps* = min(root of trivial_U, inf{eps[x1] : U(x1, x2[x1]; eps[x1]) <= 0})``.
    """
    if int(grid_size) != grid_size or grid_size < 100:
        raise ValidationError(f"grid size must be an integer >= 100, got {grid_size!r}")
    eps_sir = sir_limit(model, d.design_rate)
    c = curve_arrays(d, model, grid_size)
    if np.any(c.valid):
        Uv = np.where(c.valid, c.U, np.inf)
        k = int(np.argmin(Uv))
        min_u, arg = float(c.U[k]), float(c.x1[k])
    else:
        min_u, arg = math.inf, math.nan
    bad = c.valid & (c.U <= 0.0)
    eps_bad = float(np.min(c.eps[bad])) if np.any(bad) else None
    eps_star = eps_sir if eps_bad is None else min(eps_sir, eps_bad)
    return ThresholdReport(eps_star, eps_sir, min_u, arg, int(grid_size), eps_bad)


def _locate_fixed_points(d, model, c: _Curve, eps_target: float) -> list[float]:
    """x1 values on the curve with ``eps[x1] = eps_target``.

    Sign changes between consecutive valid samples are bracketed, linearly
    interpolated and refined by a safeguarded secant (Illinois) iteration.
    """
    e = c.eps
    ok = c.valid[:-1] & c.valid[1:]
    h0 = e[:-1] - eps_target
    h1 = e[1:] - eps_target
    idx = np.nonzero(ok & ((h0 == 0.0) | (h0 * h1 < 0.0)))[0]
    roots = []
    for k in idx:
        a, b = float(c.x1[k]), float(c.x1[k + 1])
        fa, fb = float(h0[k]), float(h1[k])
        if fa == 0.0:
            roots.append(a)
            continue
        side = 0
        x = a
        for _ in range(60):
            x = (a * fb - b * fa) / (fb - fa)
            fx = eps_of_x1(d, model, x)
            if fx is None:
                break
            fx -= eps_target
            if abs(fx) < SECANT_TOL or b - a < 1e-15:
                break
            if fx * fb > 0:
                b, fb = x, fx
                if side == -1:
                    fa *= 0.5
                side = -1
            else:
                a, fa = x, fx
                if side == 1:
                    fb *= 0.5
                side = 1
        roots.append(x)
    return roots


def fixed_point_potentials(d: DegreeProfile, model: ChannelModel, eps: float, curve: _Curve) -> list[tuple[float, float, float]]:
    """``(x1, x2, U)`` for every located fixed point at ``eps``, trivial point first."""
    out = [(1.0, float(model.phi_fn(np.float64(1.0), np.float64(eps))), float(trivial_U(d, model, eps)))]
    for x1 in _locate_fixed_points(d, model, curve, eps):
        x2 = float(_x2_of_x1(d, np.float64(x1)))
        x2 = min(max(x2, 0.0), 1.0)
        out.append((x1, x2, float(_U(d, model, np.float64(x1), np.float64(x2), eps))))
    return out


def energy_gap(
    d: DegreeProfile,
    model: ChannelModel,
    eps: float,
    grid_size: int = DEFAULT_CURVE_GRID,
    eps_grid_size: int | None = None,
) -> float:
    """``max over eps' in [eps, 1]`` of the smallest potential among fixed points at ``eps'``.

    ``eps'`` runs over a fixed uniform grid on [0, 1] (``eps_grid_size``
    points, default ``grid_size // 4 + 1``) restricted to ``[eps, 1]``, plus
    ``eps`` itself, so results for grid-aligned ``eps`` are nested.
    """
    if not 0.0 <= eps <= 1.0:
        raise DomainError(f"eps must lie in [0, 1], got {eps!r}")
    n_eps = eps_grid_size or grid_size // 4 + 1
    curve = curve_arrays(d, model, grid_size)
    grid = np.linspace(0.0, 1.0, n_eps)
    candidates = np.unique(np.concatenate([[eps], grid[grid >= eps]]))
    best = -math.inf
    for e in candidates:
        u_min = min(u for _, _, u in fixed_point_potentials(d, model, float(e), curve))
        best = max(best, u_min)
    return best


def uncoupled_threshold(d: DegreeProfile, model: ChannelModel, tol_eps: float = 1e-6) -> float:
    """BP threshold of the uncoupled system (``L = w = 1``)."""
    from .coupled import bp_threshold

    return bp_threshold(d, model, 1, 1, tol_eps)
