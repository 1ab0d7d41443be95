"""Numerical property checks bundled behind ``scmn verify``.

Each check returns a :class:`CheckResult` carrying the observed margin:
positive means the property holds with that much room.
"""

from __future__ import annotations

import os
from collections.abc import Callable, Sequence
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from . import channel as ch
from . import coupled, potential
from .de_core import DegreeProfile, de_run, de_step
from .errors import ValidationError

SEED = 20150125


@dataclass(frozen=True)
class CheckResult:
    name: str
    passed: bool
    margin: float
    detail: str = ""


def _result(name: str, error: float, tol: float, detail: str = "") -> CheckResult:
    return CheckResult(name, bool(error <= tol), float(tol - error), detail or f"max err {error:.3e} (tol {tol:g})")


# ---------------------------------------------------------------------------
# channel


def check_quadrature(model: ch.ChannelModel, tol: float = 1e-8) -> CheckResult:
    name = f"quadrature-vs-closed-form[{model.name}]"
    if model.phi_integral_fn is None:
        return CheckResult(name, True, float("inf"), "no closed form; quadrature only")
    xs = np.round(np.arange(1, 11) * 0.1, 12)
    es = np.round(np.arange(1, 10) * 0.1, 12)
    err = max(
        abs(ch.phi_integral_quad(model, x, e) - float(ch.phi_integral(model, x, e)))
        for x in xs
        for e in es
    )
    return _result(name, err, tol)


def check_sir(model: ch.ChannelModel, tol: float = 1e-8) -> CheckResult:
    name = f"sir-monotone+roundtrip[{model.name}]"
    grid = np.linspace(0.0, 1.0, 101)
    vals = np.asarray(ch.sir(model, grid))
    rise = float(np.max(np.diff(vals)))
    if rise > 0.0:
        return CheckResult(name, False, -rise, f"SIR increases by {rise:.3e}")
    err = 0.0
    for e in grid[5:-5]:
        r = float(ch.sir(model, e))
        if 0.0 < r < 1.0:
            err = max(err, abs(ch.sir_limit(model, r) - e))
    return _result(name, err, tol)


# ---------------------------------------------------------------------------
# potential


def check_two_form(d: DegreeProfile, model: ch.ChannelModel, n: int = 10_000, tol: float = 1e-12) -> CheckResult:
    rng = np.random.default_rng(SEED)
    x1, x2, e = rng.random(n), rng.random(n), rng.random(n)
    a = np.asarray(potential.potential_U(d, model, x1, x2, e))
    b = np.asarray(potential.potential_U_general(d, model, x1, x2, e))
    return _result(f"two-form-U{d}[{model.name}]", float(np.max(np.abs(a - b))), tol)


def check_trivial_sign(d: DegreeProfile, model: ch.ChannelModel, tol: float = 1e-8) -> CheckResult:
    name = f"trivial-sign{d}[{model.name}]"
    es = ch.sir_limit(model, d.design_rate)
    at = abs(float(potential.trivial_U(d, model, es)))
    below = np.linspace(0.0, es, 50, endpoint=False)
    above = np.linspace(es, 1.0, 51)[1:]
    lo = float(np.min(potential.trivial_U(d, model, below)))
    hi = float(np.max(potential.trivial_U(d, model, above)))
    ok = at < tol and lo > 0.0 and hi < 0.0
    margin = min(tol - at, lo, -hi)
    return CheckResult(name, ok, margin, f"eps_sir={es:.10f} |U(eps_sir)|={at:.2e} min below={lo:.3e} max above={hi:.3e}")


def _profile_covered(d: DegreeProfile) -> bool:
    return (d.d_r, d.d_g) in ((2, 2), (3, 3))


def check_bec_positivity(d: DegreeProfile, grid: int = 10_000) -> CheckResult:
    name = f"bec-positivity{d}[bec]"
    c = potential.curve_arrays(d, ch.bec(), grid)
    if not np.any(c.valid):
        return CheckResult(name, False, float("-inf"), "no valid non-trivial points")
    k = int(np.nanargmin(np.where(c.valid, c.U, np.nan)))
    u = float(c.U[k])
    if not _profile_covered(d):
        return CheckResult(name, True, u, f"informational only for (d_r,d_g)=({d.d_r},{d.d_g}); min U={u:.6e}")
    return CheckResult(name, u > 0.0, u, f"min U={u:.6e} at x1={c.x1[k]:.6f}")


def check_gec_domination(d: DegreeProfile, model: ch.ChannelModel, grid: int = 10_000, tol: float = 1e-12) -> CheckResult:
    name = f"gec-domination{d}[{model.name}]"
    cg = potential.curve_arrays(d, model, grid)
    cb = potential.curve_arrays(d, ch.bec(), grid)
    v = cg.valid
    if not np.any(v):
        return CheckResult(name, True, float("inf"), "no valid points")
    if not np.all(cb.valid[v]):
        return CheckResult(name, False, float("-inf"), "BEC curve invalid where GEC curve is valid")
    diff = cg.U[v] - cb.U[v]
    low = float(np.min(diff))
    if model.kind is ch.ChannelKind.BEC:
        err = float(np.max(np.abs(diff)))
        return _result(name, err, tol, f"BEC self-difference {err:.2e}")
    return CheckResult(name, low >= -tol, low + tol, f"min U_GEC-U_BEC={low:.3e}")


def check_residuals(d: DegreeProfile, model: ch.ChannelModel, grid: int = 10_000, tol: float = 1e-9) -> CheckResult:
    c = potential.curve_arrays(d, model, grid)
    v = c.valid
    r1, r2 = potential.fixed_point_residuals(d, model, c.x1[v], c.x2[v], c.eps[v])
    err = float(max(np.max(np.abs(r1), initial=0.0), np.max(np.abs(r2), initial=0.0)))
    return _result(f"fixed-point-residuals{d}[{model.name}]", err, tol)


def check_threshold(d: DegreeProfile, model: ch.ChannelModel, grid: int = 4096, tol: float = 1e-5) -> CheckResult:
    name = f"potential-threshold=sir-limit{d}[{model.name}]"
    rep = potential.potential_threshold(d, model, grid)
    err = abs(rep.eps_star - rep.eps_sir)
    detail = f"eps*={rep.eps_star:.10f} eps_sir={rep.eps_sir:.10f} min U={rep.min_nontrivial_U:.3e}"
    if not _profile_covered(d):
        return CheckResult(name, True, tol - err, "informational only; " + detail)
    return CheckResult(name, err <= tol, tol - err, detail)


# ---------------------------------------------------------------------------
# density evolution


def check_sc_symmetry(d: DegreeProfile, model: ch.ChannelModel, L: int = 16, w: int = 3,
                      iters: int = 200, tol: float = 1e-12) -> CheckResult:
    eps = 0.9 * ch.sir_limit(model, d.design_rate)
    cfg = coupled.CouplingConfig(L, w, eps)
    h = cfg.halo
    worst = 0.0

    def watch(t, p):
        nonlocal worst
        for v in (p.x1[h:], p.x2[h:]):
            worst = max(worst, float(np.max(np.abs(v - v[::-1]))))
        f1, f2 = coupled.bit_section_messages(d, model, cfg, p)
        for v in (f1, f2):
            worst = max(worst, float(np.max(np.abs(v - v[::-1]))))

    coupled.sc_de_run(d, model, cfg, max_iter=iters, callback=watch)
    return _result(f"sc-symmetry{d}[{model.name}]", worst, tol)


def check_de_monotone(model: ch.ChannelModel, n: int = 100) -> CheckResult:
    rng = np.random.default_rng(SEED)
    profiles = [(4, 2, 2), (6, 3, 3), (3, 2, 2), (5, 2, 3), (7, 3, 3), (5, 4, 2)]
    worst = 0.0
    for _ in range(n):
        d = DegreeProfile(*profiles[rng.integers(len(profiles))])
        eps = float(rng.random())
        res = de_run(d, model, eps, max_iter=200, record=True)
        for a, b in zip(res.trace, res.trace[1:]):
            worst = max(worst, b.x1 - a.x1, b.x2 - a.x2)
        # one extra step from the final state must not move up either
        s = de_step(d, model, res.state, eps)
        worst = max(worst, s.x1 - res.state.x1, s.x2 - res.state.x2)
    return CheckResult(f"de-monotone[{model.name}]", worst <= 0.0, -worst, f"largest increase {worst:.3e}")


def check_rate() -> CheckResult:
    err = max(
        abs(coupled.rate(DegreeProfile(4, 2, 2), 100, 1) - 0.5),
        abs(coupled.rate(DegreeProfile(6, 3, 3), 50, 2) - 0.480625),
    )
    return _result("rate-formula", err, 1e-15)


# ---------------------------------------------------------------------------


def default_threads() -> int | None:
    """Worker cap from ``SCMN_THREADS`` (``0`` or unset means automatic)."""
    raw = os.environ.get("SCMN_THREADS", "0").strip() or "0"
    try:
        n = int(raw)
    except ValueError:
        raise ValidationError(f"SCMN_THREADS must be a non-negative integer, got {raw!r}") from None
    if n < 0:
        raise ValidationError(f"SCMN_THREADS must be a non-negative integer, got {raw!r}")
    return n or None


def build_checks(
    profiles: Sequence[DegreeProfile],
    models: Sequence[ch.ChannelModel],
    grid: int = 10_000,
) -> list[tuple[str, Callable[[], CheckResult]]]:
    checks: list[tuple[str, Callable[[], CheckResult]]] = []
    for m in models:
        checks.append((f"quad-{m.name}", lambda m=m: check_quadrature(m)))
        checks.append((f"sir-{m.name}", lambda m=m: check_sir(m)))
        checks.append((f"mono-{m.name}", lambda m=m: check_de_monotone(m)))
    for d in profiles:
        checks.append((f"pos-{d}", lambda d=d: check_bec_positivity(d, grid)))
        for m in models:
            checks.append((f"two-{d}-{m.name}", lambda d=d, m=m: check_two_form(d, m)))
            checks.append((f"triv-{d}-{m.name}", lambda d=d, m=m: check_trivial_sign(d, m)))
            checks.append((f"dom-{d}-{m.name}", lambda d=d, m=m: check_gec_domination(d, m, grid)))
            checks.append((f"res-{d}-{m.name}", lambda d=d, m=m: check_residuals(d, m, grid)))
            checks.append((f"thr-{d}-{m.name}", lambda d=d, m=m: check_threshold(d, m)))
            checks.append((f"sym-{d}-{m.name}", lambda d=d, m=m: check_sc_symmetry(d, m)))
    checks.append(("rate", check_rate))
    return checks


def run_checks(
    profiles: Sequence[DegreeProfile],
    models: Sequence[ch.ChannelModel],
    grid: int = 10_000,
    threads: int | None = None,
) -> list[CheckResult]:
    """Run every check; results come back in a fixed order regardless of threading."""
    checks = build_checks(profiles, models, grid)
    if threads == 1:
        return [fn() for _, fn in checks]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        futures = [pool.submit(fn) for _, fn in checks]
        return [f.result() for f in futures]
