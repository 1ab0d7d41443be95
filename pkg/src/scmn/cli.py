"""Command-line front end: ``scmn <command> [options]``.

Exit codes: 0 success, 2 validation error, 3 no solution, 4 I/O error,
5 verify-suite failure.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import asdict, dataclass, fields
from pathlib import Path

from . import __version__
from . import channel as ch
from . import coupled, de_core, potential, verify
from .errors import NoSolutionError, ScmnError, ValidationError
from .output import csv_text, fmt_value, json_text, svg_plot

EXIT_OK = 0
EXIT_VALIDATION = 2
EXIT_NO_SOLUTION = 3
EXIT_IO = 4
EXIT_VERIFY = 5

COMMANDS = (
    "sir",
    "sir-limit",
    "de",
    "sc-de",
    "bp-threshold",
    "potential-curve",
    "potential-threshold",
    "energy-gap",
    "rate",
    "verify",
)

# per-command defaults for knobs left unset on the command line
_DEFAULT_GRID = {
    "potential-curve": potential.DEFAULT_CURVE_GRID,
    "potential-threshold": potential.DEFAULT_THRESHOLD_GRID,
    "energy-gap": potential.DEFAULT_CURVE_GRID,
    "verify": 10_000,
}
_DEFAULT_TOL = {"de": de_core.DEFAULT_TOL, "sc-de": coupled.DEFAULT_TOL, "bp-threshold": coupled.DEFAULT_TOL}
_DEFAULT_MAX_ITER = {
    "de": de_core.DEFAULT_MAX_ITER,
    "sc-de": coupled.DEFAULT_MAX_ITER,
    "bp-threshold": coupled.DEFAULT_MAX_ITER,
}
_SVG_COMMANDS = ("de", "sc-de", "potential-curve")


@dataclass
class RunManifest:
    """Everything needed to reproduce one invocation."""

    command: str
    channel: str = "bec"
    dl: int = 4
    dr: int = 2
    dg: int = 2
    L: int | None = None
    w: int | None = None
    eps: float | None = None
    rate: float | None = None
    grid: int | None = None
    tol: float | None = None
    tol_eps: float | None = None
    max_iter: int | None = None
    every: int = 1
    output: str | None = None
    format: str = "csv"

    def resolved(self) -> RunManifest:
        """Copy with per-command defaults filled in."""
        m = RunManifest(**asdict(self))
        if m.grid is None:
            m.grid = _DEFAULT_GRID.get(m.command)
        if m.tol is None:
            m.tol = _DEFAULT_TOL.get(m.command)
        if m.max_iter is None:
            m.max_iter = _DEFAULT_MAX_ITER.get(m.command)
        if m.tol_eps is None and m.command == "bp-threshold":
            m.tol_eps = coupled.DEFAULT_TOL_EPS
        return m

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: dict) -> RunManifest:
        known = {f.name for f in fields(cls)}
        unknown = sorted(set(data) - known)
        if unknown:
            raise ValidationError(f"unknown manifest field(s): {', '.join(unknown)}")
        if data.get("command") not in COMMANDS:
            raise ValidationError(f"manifest command must be one of {', '.join(COMMANDS)}")
        return cls(**data)

    def header_lines(self) -> list[str]:
        lines = [f"scmn {__version__}"]
        for key, value in self.to_dict().items():
            if key == "output":
                continue
            lines.append(f"{key}={'' if value is None else value}")
        return lines


# ---------------------------------------------------------------------------
# helpers


def _require(m: RunManifest, *names: str) -> None:
    missing = [n for n in names if getattr(m, n) is None]
    if missing:
        flags = ", ".join("--" + n.replace("_", "-") for n in missing)
        raise ValidationError(f"{m.command} requires {flags}")


def _degrees(m: RunManifest) -> de_core.DegreeProfile:
    return de_core.DegreeProfile(m.dl, m.dr, m.dg)


def _num(v: float) -> str:
    return f"{v:.6f}"


class _Result:
    """What a command produced: a one-line summary plus optional file payload."""

    def __init__(self, summary: str, payload: dict | None = None, table=None, plot=None):
        self.summary = summary
        self.payload = payload or {}
        self.table = table  # (header, rows)
        self.plot = plot  # (series, xlabel, ylabel, title)


def _cmd_sir(m, model):
    _require(m, "eps")
    value = float(ch.sir(model, m.eps))
    return _Result(_num(value), {"sir": value})


def _cmd_sir_limit(m, model):
    r = m.rate if m.rate is not None else _degrees(m).design_rate
    value = ch.sir_limit(model, r)
    return _Result(_num(value), {"rate": r, "eps_sir": value})


def _cmd_rate(m, model):
    _require(m, "L", "w")
    value = coupled.rate(_degrees(m), m.L, m.w)
    return _Result(_num(value), {"rate": value})


def _cmd_de(m, model):
    _require(m, "eps")
    res = de_core.de_run(_degrees(m), model, m.eps, m.max_iter, m.tol, record=True)
    rows = [(t, s.x1, s.x2) for t, s in enumerate(res.trace) if t % m.every == 0 or t == len(res.trace) - 1]
    summary = (
        f"converged_to_zero={str(res.converged_to_zero).lower()} iterations={res.iterations} "
        f"x1={fmt_value(res.state.x1)} x2={fmt_value(res.state.x2)}"
    )
    payload = {
        "iterations": res.iterations,
        "converged_to_zero": res.converged_to_zero,
        "x1": res.state.x1,
        "x2": res.state.x2,
    }
    its = [r[0] for r in rows]
    plot = (
        [("x1", its, [r[1] for r in rows]), ("x2", its, [r[2] for r in rows])],
        "iteration",
        "erasure probability",
        f"DE {_degrees(m)} {model.name} eps={m.eps:g}",
    )
    return _Result(summary, payload, (("iter", "x1", "x2"), rows), plot)


def _cmd_sc_de(m, model):
    _require(m, "L", "w", "eps")
    d = _degrees(m)
    cfg = coupled.CouplingConfig(m.L, m.w, m.eps)
    rows = []

    def collect(t, p):
        if t % m.every == 0:
            for s, a, b in zip(p.sections, p.x1, p.x2):
                rows.append((t, int(s), float(a), float(b)))

    res = coupled.sc_de_run(d, model, cfg, m.max_iter, m.tol, callback=collect)
    if res.iterations % m.every:
        p = res.profile
        for s, a, b in zip(p.sections, p.x1, p.x2):
            rows.append((res.iterations, int(s), float(a), float(b)))
    p = res.profile
    summary = f"decoded={str(res.decoded).lower()} iterations={res.iterations}"
    payload = {
        "decoded": res.decoded,
        "iterations": res.iterations,
        "sections": [int(s) for s in p.sections],
        "x1": [float(v) for v in p.x1],
        "x2": [float(v) for v in p.x2],
    }
    secs = [float(s) for s in p.sections]
    plot = ([("x1", secs, list(p.x1)), ("x2", secs, list(p.x2))], "section", "erasure probability",
            f"SC-DE {d} {model.name} L={m.L} w={m.w} eps={m.eps:g} (t={res.iterations})")
    return _Result(summary, payload, (("iter", "section", "x1", "x2"), rows), plot)


def _cmd_bp_threshold(m, model):
    _require(m, "L", "w")
    value = coupled.bp_threshold(_degrees(m), model, m.L, m.w, m.tol_eps, m.max_iter, m.tol)
    return _Result(_num(value), {"eps_bp": value})


def _cmd_potential_curve(m, model):
    d = _degrees(m)
    samples = potential.potential_curve(d, model, m.grid)
    header = ("x1", "x2", "psi", "phi_bracket", "eps", "U", "valid")
    rows = [(s.x1, s.x2, s.psi, s.phi_bracket, s.eps, s.U, s.valid) for s in samples]
    n_valid = sum(s.valid for s in samples)
    us = [s.U for s in samples if s.valid]
    min_u = min(us) if us else float("nan")
    payload = {"samples": [s.as_dict() for s in samples], "valid": n_valid, "min_U": min_u}
    xs = [s.x1 for s in samples]
    ys = [s.U if s.valid else float("nan") for s in samples]
    plot = ([(model.name, xs, ys)], "x1", "U(x1, x2[x1]; eps[x1])", f"potential at non-trivial fixed points {d}")
    summary = f"valid={n_valid}/{len(samples)} min_U={fmt_value(min_u)}"
    return _Result(summary, payload, (header, rows), plot)


def _cmd_potential_threshold(m, model):
    rep = potential.potential_threshold(_degrees(m), model, m.grid)
    payload = asdict(rep)
    return _Result(f"{_num(rep.eps_star)} (eps_sir={_num(rep.eps_sir)})", payload)


def _cmd_energy_gap(m, model):
    _require(m, "eps")
    value = potential.energy_gap(_degrees(m), model, m.eps, m.grid)
    return _Result(_num(value), {"energy_gap": value})


def _verify_profiles(m: RunManifest, explicit: bool):
    if explicit:
        return [_degrees(m)]
    return [de_core.DegreeProfile(4, 2, 2), de_core.DegreeProfile(6, 3, 3)]


_HANDLERS = {
    "sir": _cmd_sir,
    "sir-limit": _cmd_sir_limit,
    "rate": _cmd_rate,
    "de": _cmd_de,
    "sc-de": _cmd_sc_de,
    "bp-threshold": _cmd_bp_threshold,
    "potential-curve": _cmd_potential_curve,
    "potential-threshold": _cmd_potential_threshold,
    "energy-gap": _cmd_energy_gap,
}


def _emit(m: RunManifest, result: _Result, out) -> None:
    if m.format == "json":
        doc = {"manifest": m.to_dict(), "summary": result.summary, **result.payload}
        text = json_text(doc)
    elif m.format == "svg":
        if result.plot is None:
            raise ValidationError(f"--format svg is only available for {', '.join(_SVG_COMMANDS)}")
        text = svg_plot(*result.plot)
    else:
        if result.table is None:
            text = csv_text(tuple(result.payload), [tuple(result.payload.values())], m.header_lines())
        else:
            text = csv_text(result.table[0], result.table[1], m.header_lines())
    if m.output:
        try:
            Path(m.output).write_text(text)
        except OSError as exc:
            raise _IOFailure(f"cannot write {m.output}: {exc}") from exc
        print(f"{result.summary} -> {m.output}", file=out)
    elif result.table is not None or m.format != "csv":
        out.write(text)
    else:
        print(result.summary, file=out)


class _IOFailure(Exception):
    pass


def run(manifest: RunManifest, explicit_degrees: bool = True, out=None, err=None) -> int:
    """Execute ``manifest``; returns the process exit status."""
    out = out or sys.stdout
    err = err or sys.stderr
    try:
        m = manifest.resolved()
        if m.command not in COMMANDS:
            raise ValidationError(f"unknown command {m.command!r}")
        if m.format not in ("csv", "svg", "json"):
            raise ValidationError(f"--format must be csv, svg or json, got {m.format!r}")
        if m.every < 1:
            raise ValidationError("--every must be >= 1")
        if m.command == "verify":
            return _run_verify(m, explicit_degrees, out)
        _degrees(m)  # validates d_l > d_r before any work
        model = ch.resolve_channel(m.channel)
        result = _HANDLERS[m.command](m, model)
        _emit(m, result, out)
        return EXIT_OK
    except NoSolutionError as exc:
        print(f"error: {exc}", file=err)
        return EXIT_NO_SOLUTION
    except _IOFailure as exc:
        print(f"error: {exc}", file=err)
        return EXIT_IO
    except ScmnError as exc:
        print(f"error: {exc}", file=err)
        return EXIT_VALIDATION


def _run_verify(m: RunManifest, explicit_degrees: bool, out) -> int:
    models = [ch.builtin(n) for n in ch.BUILTIN_NAMES]
    if m.channel.lower() not in ch.BUILTIN_NAMES:
        models.append(ch.resolve_channel(m.channel))
    profiles = _verify_profiles(m, explicit_degrees)
    results = verify.run_checks(profiles, models, m.grid, verify.default_threads())
    width = max(len(r.name) for r in results)
    lines = [f"{'check':<{width}}  status  margin       detail"]
    for r in results:
        status = "PASS" if r.passed else "FAIL"
        lines.append(f"{r.name:<{width}}  {status:<6}  {r.margin:<11.4g}  {r.detail}")
    n_fail = sum(not r.passed for r in results)
    lines.append(f"{len(results) - n_fail}/{len(results)} checks passed")
    text = "\n".join(lines) + "\n"
    if m.format == "json":
        text = json_text({"manifest": m.to_dict(), "checks": [asdict(r) for r in results], "failed": n_fail})
    if m.output:
        try:
            Path(m.output).write_text(text)
        except OSError as exc:
            raise _IOFailure(f"cannot write {m.output}: {exc}") from exc
    out.write(text)
    return EXIT_VERIFY if n_fail else EXIT_OK


# ---------------------------------------------------------------------------
# argument parsing


def _common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--channel", default=argparse.SUPPRESS, help="bec, dec, pr2, or a .json/.toml table")
    p.add_argument("--dl", type=int, default=argparse.SUPPRESS, help="type-1 bit degree d_l")
    p.add_argument("--dr", type=int, default=argparse.SUPPRESS, help="type-1 check degree d_r")
    p.add_argument("--dg", type=int, default=argparse.SUPPRESS, help="type-2 bit degree d_g")
    p.add_argument("--L", type=int, default=argparse.SUPPRESS, help="chain length")
    p.add_argument("--w", type=int, default=argparse.SUPPRESS, help="coupling width")
    p.add_argument("--eps", type=float, default=argparse.SUPPRESS, help="channel parameter")
    p.add_argument("--rate", type=float, default=argparse.SUPPRESS, help="code rate (sir-limit)")
    p.add_argument("--grid", type=int, default=argparse.SUPPRESS, help="x1 grid size")
    p.add_argument("--tol", type=float, default=argparse.SUPPRESS, help="DE convergence tolerance")
    p.add_argument("--tol-eps", dest="tol_eps", type=float, default=argparse.SUPPRESS, help="threshold bisection tolerance")
    p.add_argument("--max-iter", dest="max_iter", type=int, default=argparse.SUPPRESS, help="DE iteration cap")
    p.add_argument("--every", type=int, default=argparse.SUPPRESS, help="trace stride for de/sc-de output")
    p.add_argument("-o", "--output", default=argparse.SUPPRESS, help="output file (default: stdout)")
    p.add_argument("--format", choices=("csv", "svg", "json"), default=argparse.SUPPRESS)
    p.add_argument("--manifest", help="JSON manifest to load; flags given explicitly override it")
    p.add_argument("--save-manifest", dest="save_manifest", help="write the resolved manifest as JSON")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="scmn", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"scmn {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, metavar="command")
    helps = {
        "sir": "symmetric information rate I(eps)",
        "sir-limit": "eps at which I(eps) equals the rate",
        "de": "uncoupled MN density evolution trace",
        "sc-de": "spatially-coupled density evolution trace",
        "bp-threshold": "BP threshold of the coupled chain",
        "potential-curve": "potential at non-trivial fixed points",
        "potential-threshold": "potential threshold eps*",
        "energy-gap": "energy gap Delta E(eps)",
        "rate": "design rate of the SC-MN chain",
        "verify": "run the numerical property suite",
    }
    for name in COMMANDS:
        _common(sub.add_parser(name, help=helps[name]))
    return parser


def main(argv: list[str] | None = None) -> int:
    args = vars(build_parser().parse_args(argv))
    command = args.pop("command")
    manifest_path = args.pop("manifest", None)
    save_path = args.pop("save_manifest", None)
    try:
        base = {"command": command}
        if manifest_path:
            try:
                loaded = json.loads(Path(manifest_path).read_text())
            except OSError as exc:
                print(f"error: cannot read manifest {manifest_path}: {exc}", file=sys.stderr)
                return EXIT_IO
            except ValueError as exc:
                raise ValidationError(f"cannot parse manifest {manifest_path}: {exc}") from exc
            loaded = loaded.get("manifest", loaded)
            if loaded.get("command", command) != command:
                raise ValidationError(f"manifest is for {loaded['command']!r}, not {command!r}")
            base.update(loaded)
        base.update(args)
        manifest = RunManifest.from_dict(base)
    except ScmnError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    explicit = any(k in args for k in ("dl", "dr", "dg")) or (
        manifest_path is not None and any(k in base for k in ("dl", "dr", "dg"))
    )
    if save_path:
        try:
            Path(save_path).write_text(json_text(manifest.resolved().to_dict()))
        except OSError as exc:
            print(f"error: cannot write {save_path}: {exc}", file=sys.stderr)
            return EXIT_IO
    return run(manifest, explicit_degrees=explicit)


if __name__ == "__main__":
    sys.exit(main())
