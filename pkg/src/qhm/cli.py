"""Command-line interface: element I/O, one subcommand per operation, ``verify``.

Element files use the JSON format of ``qhm.core``; ``@name`` refers to a
shipped fixture (``@identity``, ``@slice_p2``).  Operations that return an
element write an element document (with the run config under ``config``);
the other commands print a short human line, or their JSON/CSV report when
``--format`` is given.  ``--out`` writes the machine output to a file.

Exit codes: 0 success, 1 check failure, 2 usage or I/O error.
``QHM_THREADS`` caps the BLAS/OpenMP thread pools and must be set before
numpy loads, which is why numerical modules are imported lazily.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
from dataclasses import dataclass, field
from importlib import resources
from typing import Any, Sequence

THREAD_VARS = ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS", "MKL_NUM_THREADS", "NUMEXPR_NUM_THREADS")
DEFAULT_TOLERANCES = {"lipschitz": 0.02}
CLASSICAL_BUILTINS = ("sin-x", "sin-y")


class UsageError(Exception):
    """Bad arguments or unreadable input (exit code 2)."""


def apply_thread_cap(environ=os.environ) -> int | None:
    raw = environ.get("QHM_THREADS")
    if raw is None or raw == "":
        return None
    try:
        n = int(raw)
    except ValueError:
        raise UsageError(f"QHM_THREADS must be a positive integer, got {raw!r}") from None
    if n < 1:
        raise UsageError(f"QHM_THREADS must be a positive integer, got {raw!r}")
    for var in THREAD_VARS:
        environ[var] = str(n)
    return n


def _fixture_text(name: str) -> str:
    res = resources.files("qhm") / "fixtures" / f"{name}.json"
    if not res.is_file():
        raise UsageError(f"unknown fixture @{name}")
    return res.read_text()


def read_text(path: str) -> str:
    if path.startswith("@"):
        return _fixture_text(path[1:])
    try:
        with open(path, encoding="utf-8") as f:
            return f.read()
    except OSError as exc:
        raise UsageError(f"cannot read {path}: {exc.strerror}") from None


# ---------------------------------------------------------------------------
# run configuration


@dataclass(frozen=True)
class RunConfig:
    params: Any
    grid: Any
    seed: int = 0
    tolerances: dict[str, float] = field(default_factory=lambda: dict(DEFAULT_TOLERANCES))
    out: str | None = None
    format: str = "json"

    def __post_init__(self):
        for k, v in self.tolerances.items():
            if not (isinstance(v, (int, float)) and math.isfinite(v) and v > 0):
                raise UsageError(f"tolerance '{k}' must be a positive number, got {v!r}")
        if self.format not in ("json", "csv"):
            raise UsageError(f"format must be json or csv, got {self.format!r}")

    def tol(self, name: str) -> float:
        return float(self.tolerances.get(name, DEFAULT_TOLERANCES[name]))

    def to_dict(self) -> dict[str, Any]:
        return {
            "params": self.params.to_dict(),
            "grid": self.grid.to_dict(),
            "seed": self.seed,
            "tolerances": dict(sorted(self.tolerances.items())),
            "out": self.out,
            "format": self.format,
        }


def _parse_tol(items: Sequence[str]) -> dict[str, float]:
    out = {}
    for item in items:
        name, sep, val = item.partition("=")
        if not sep or not name:
            raise UsageError(f"--tol expects name=value, got {item!r}")
        try:
            out[name] = float(val)
        except ValueError:
            raise UsageError(f"--tol {name}: not a number: {val!r}") from None
    return out


def build_config(args: argparse.Namespace, params=None, grid=None) -> RunConfig:
    """Config from ``--config`` (default: the shipped desk fixture) overridden by flags.

    ``params``/``grid`` taken from an input element win over both.
    """
    from .core import Grid, ManifoldParams

    try:
        base = json.loads(read_text(args.config))
    except json.JSONDecodeError as exc:
        raise UsageError(f"config {args.config}: invalid JSON: {exc}") from None
    if not isinstance(base, dict):
        raise UsageError(f"config {args.config}: expected a JSON object")
    pd = dict(base.get("params", {}))
    gd = dict(base.get("grid", {}))
    for key in ("c", "hbar", "mu", "nu"):
        v = getattr(args, key)
        if v is not None:
            pd[key] = v
    for key, attr in (("nx", "nx"), ("ny", "ny"), ("p_max", "p_max")):
        v = getattr(args, attr)
        if v is not None:
            gd[key] = v
    try:
        params = params or ManifoldParams(**pd)
        grid = grid or Grid(**gd)
    except (TypeError, ValueError) as exc:
        raise UsageError(f"config: {exc}") from None
    tol = dict(DEFAULT_TOLERANCES)
    tol.update(base.get("tolerances", {}))
    tol.update(_parse_tol(args.tol))
    seed = args.seed if args.seed is not None else int(base.get("seed", 0))
    fmt = args.format or base.get("format", "json")
    return RunConfig(params, grid, seed, tol, args.out, fmt)


# ---------------------------------------------------------------------------
# output


@dataclass
class Output:
    """What a command produced: machine document, CSV rendering and a human line."""

    doc: dict[str, Any]
    csv: str
    human: str
    code: int = 0
    is_element: bool = False


def _dump_json(doc: dict[str, Any]) -> str:
    return json.dumps(doc, indent=2) + "\n"


def _fmt_complex(z: complex) -> str:
    return f"{z.real!r}{'+' if z.imag >= 0 else '-'}{abs(z.imag)!r}i"


def _csv(rows: Sequence[Sequence[Any]]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    for r in rows:
        w.writerow(r)
    return buf.getvalue()


def element_output(obj, cfg: RunConfig, command: str) -> Output:
    import numpy as np

    doc = obj.to_dict()
    doc["command"] = command
    doc["config"] = cfg.to_dict()
    g = obj.grid
    rows = [["p", "ix", "iy", "re", "im"]]
    for k, p in enumerate(g.p):
        for i in range(g.nx):
            for j in range(g.ny):
                v = obj.values[k, i, j]
                rows.append([int(p), i, j, repr(float(v.real)), repr(float(v.imag))])
    sup = float(np.max(np.abs(obj.values))) if obj.values.size else 0.0
    human = f"{obj.kind} on p_max={g.p_max}, {g.nx}x{g.ny} grid, sup |coefficient| = {sup!r}"
    return Output(doc, _csv(rows), human, is_element=True)


def report_output(command: str, cfg: RunConfig, result: dict[str, Any], human: str, code: int = 0) -> Output:
    doc = {"command": command, "config": cfg.to_dict(), "result": result}
    rows = [["key", "value"]] + [[k, _scalar(v)] for k, v in result.items()]
    return Output(doc, _csv(rows), human, code)


def _scalar(v: Any) -> str:
    if isinstance(v, float):
        return repr(v)
    if isinstance(v, (list, dict)):
        return json.dumps(v)
    return str(v)


def emit(out: Output, cfg: RunConfig, explicit_format: bool, stdout) -> None:
    machine = out.csv if cfg.format == "csv" else _dump_json(out.doc)
    if cfg.out:
        try:
            with open(cfg.out, "w", encoding="utf-8") as f:
                f.write(machine)
        except OSError as exc:
            raise UsageError(f"cannot write {cfg.out}: {exc.strerror}") from None
        stdout.write(out.human + "\n")
    elif explicit_format or out.is_element:
        stdout.write(machine)
    else:
        stdout.write(out.human + "\n")


# ---------------------------------------------------------------------------
# commands


def load_element(path: str, kind: str = "element"):
    from .core import FormatError, loads

    try:
        obj = loads(read_text(path))
    except FormatError as exc:
        raise UsageError(f"{path}: {exc}") from None
    if obj.kind != kind:
        raise UsageError(f"{path}: field 'kind' must be '{kind}', got '{obj.kind}'")
    return obj


def _element_cmd(args, fn, command: str) -> tuple[Output, RunConfig]:
    e = load_element(args.A)
    cfg = build_config(args, e.params, e.grid)
    return element_output(fn(e), cfg, command), cfg


def cmd_gen(args):
    from .core import random_element, random_state

    cfg = build_config(args)
    if args.kind == "state":
        obj = random_state(cfg.params, cfg.grid, cfg.seed, band=args.band)
    else:
        obj = random_element(cfg.params, cfg.grid, cfg.seed, p_decay=args.p_decay, support=args.support)
    return element_output(obj, cfg, "gen"), cfg


def cmd_star(args):
    from .algebra import star_with_loss

    a, b = load_element(args.A), load_element(args.B)
    if a.params != b.params or a.grid != b.grid:
        raise UsageError("A and B have different params or grid")
    cfg = build_config(args, a.params, a.grid)
    prod, loss = star_with_loss(a, b)
    out = element_output(prod, cfg, "star")
    out.doc["clipped_mass"] = loss
    return out, cfg


def cmd_adjoint(args):
    from .algebra import adjoint

    return _element_cmd(args, adjoint, "adjoint")


def cmd_norm(args):
    from .algebra import op_norm_report

    e = load_element(args.A)
    cfg = build_config(args, e.params, e.grid)
    r = op_norm_report(e, method=args.method)
    res = {"norm": r.value, "converged": r.converged, "exact_fibres": r.exact_fibres, "method": args.method}
    return report_output("norm", cfg, res, repr(r.value)), cfg


def cmd_apply(args):
    from .algebra import apply

    e = load_element(args.A)
    xi = load_element(args.XI, "state")
    if e.params != xi.params or e.grid != xi.grid:
        raise UsageError("A and XI have different params or grid")
    cfg = build_config(args, e.params, e.grid)
    return element_output(apply(e, xi), cfg, "apply"), cfg


def cmd_fourier(args):
    from .action import fourier_coeff, fourier_coeff_quadrature

    if args.nt is None:
        return _element_cmd(args, lambda e: fourier_coeff(e, args.n), "fourier")
    return _element_cmd(args, lambda e: fourier_coeff_quadrature(e, args.n, args.nt), "fourier")


def cmd_cesaro(args):
    from .action import cesaro

    return _element_cmd(args, lambda e: cesaro(e, args.N), "cesaro")


def cmd_act(args):
    from .action import GroupPoint, act

    return _element_cmd(args, lambda e: act(e, GroupPoint(args.r, args.s, args.t)), "act")


def cmd_smooth(args):
    from .action import twisted_smooth

    return _element_cmd(args, lambda e: twisted_smooth(e, args.m), "smooth")


def cmd_deriv(args):
    from .metric import delta1, delta2

    return _element_cmd(args, delta1 if args.which == 1 else delta2, f"deriv{args.which}")


def cmd_lipnorm(args):
    from .algebra import op_norm
    from .metric import dmap, module_norms

    e = load_element(args.A)
    cfg = build_config(args, e.params, e.grid)
    left, right = module_norms(dmap(e))
    nrm = op_norm(e)
    value = max(nrm, left, right)
    res = {"lip_norm": value, "norm": nrm, "d_left": left, "d_right": right}
    return report_output("lipnorm", cfg, res, repr(value)), cfg


def cmd_holder(args):
    from .metric import default_t_grid, holder_seminorm

    e = load_element(args.A)
    cfg = build_config(args, e.params, e.grid)
    rep = holder_seminorm(e, args.A_exp, args.B_exp, args.C_exp, default_t_grid(args.t_points))
    human = f"{rep.value!r} (flow {rep.argmax_flow}, t = {rep.argmax_sample!r})"
    return report_output("holder", cfg, rep.to_dict(), human), cfg


def cmd_trace(args):
    from .spectral import trace

    e = load_element(args.A)
    cfg = build_config(args, e.params, e.grid)
    t = trace(e)
    res = {"re": t.real, "im": t.imag}
    return report_output("trace", cfg, res, _fmt_complex(t)), cfg


def cmd_laplacian(args):
    from .spectral import laplacian

    return _element_cmd(args, laplacian, "laplacian")


def cmd_heat(args):
    from .spectral import heat

    if not args.t >= 0:
        raise UsageError("--t must be >= 0")
    return _element_cmd(args, lambda e: heat(e, args.t), "heat")


def cmd_classical_distance(args):
    from .classical import DistanceError, cc_distance_upper, distance_table_csv

    cfg = build_config(args)
    try:
        d = cc_distance_upper(args.start, args.end, n_segments=args.segments,
                              restarts=args.restarts, seed=cfg.seed)
    except DistanceError as exc:
        res = {"error": str(exc), "best_gap": exc.best_gap}
        return report_output("classical-distance", cfg, res, f"FAIL {exc}", code=1), cfg
    res = {"start": list(d.start), "end": list(d.end), "upper_bound": d.upper_bound,
           "gap": d.gap, "iterations": d.iterations}
    out = report_output("classical-distance", cfg, res, repr(d.upper_bound))
    out.csv = distance_table_csv([d])
    return out, cfg


def _builtin(name: str):
    return {"sin-x": lambda x, y, z: math.sin(x), "sin-y": lambda x, y, z: math.sin(y)}[name]


def cmd_classical_lip(args):
    from .classical import lipschitz_check, to_function

    if args.F in CLASSICAL_BUILTINS:
        cfg = build_config(args)
        f, c = _builtin(args.F), cfg.params.c
    else:
        e = load_element(args.F)
        if e.params.hbar != 0:
            raise UsageError(f"{args.F}: classical-lip needs an element with hbar = 0")
        cfg = build_config(args, e.params, e.grid)
        f, c = to_function(e), e.params.c
    rep = lipschitz_check(f, pairs=args.pairs, seed=cfg.seed, c=c, tol=cfg.tol("lipschitz"),
                          restarts=args.restarts)
    status = "PASS" if rep.passed else "FAIL"
    human = f"{status} max ratio {rep.max_ratio!r} vs gradient sup {rep.gradient_sup!r}"
    return report_output("classical-lip", cfg, rep.to_dict(), human, 0 if rep.passed else 1), cfg


def cmd_verify(args):
    from . import checks

    cfg = build_config(args)
    if args.filter and not any(k.strip() in n for n in checks.names() for k in args.filter.split(",")):
        raise UsageError(f"--filter {args.filter!r} matches no check")
    results = checks.run(checks.Context(cfg.params, cfg.grid, cfg.seed, args.quick), args.filter)
    ok = all(r.passed for r in results)
    doc = {"command": "verify", "config": cfg.to_dict(), "quick": args.quick, "filter": args.filter,
           "passed": ok, "checks": [r.to_dict() for r in results]}
    rows = [["check", "paper_ref", "margin", "pass", "measured"]]
    rows += [[r.check, r.statement, repr(r.margin), str(r.passed).lower(), repr(r.measured)] for r in results]
    width = max((len(r.check) for r in results), default=5)
    lines = [f"{'PASS' if r.passed else 'FAIL'}  {r.check:<{width}}  margin {r.margin:+.3e}  measured {r.measured:.3e}"
             for r in results]
    lines.append(f"{sum(r.passed for r in results)}/{len(results)} checks passed")
    return Output(doc, _csv(rows), "\n".join(lines), 0 if ok else 1), cfg


# ---------------------------------------------------------------------------
# parser


def _common() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(add_help=False, allow_abbrev=False)
    g = p.add_argument_group("run configuration")
    g.add_argument("--config", default="@desk", help="config JSON (default: shipped desk config @desk)")
    g.add_argument("--c", type=int, help="integer c >= 1")
    g.add_argument("--hbar", type=float)
    g.add_argument("--mu", type=float)
    g.add_argument("--nu", type=float)
    g.add_argument("--nx", type=int)
    g.add_argument("--ny", type=int)
    g.add_argument("--p-max", dest="p_max", type=int)
    g.add_argument("--seed", type=int)
    g.add_argument("--tol", action="append", default=[], metavar="NAME=VALUE")
    g.add_argument("--out", help="write the JSON/CSV output here")
    g.add_argument("--format", choices=("json", "csv"), help="machine output format")
    return p


def build_parser() -> argparse.ArgumentParser:
    common = _common()
    parser = argparse.ArgumentParser(prog="qhm", description=__doc__.splitlines()[0], allow_abbrev=False)
    sub = parser.add_subparsers(dest="command", required=True, metavar="COMMAND")

    def add(name, fn, help_):
        sp = sub.add_parser(name, parents=[common], help=help_, allow_abbrev=False)
        sp.set_defaults(fn=fn)
        return sp

    sp = add("gen", cmd_gen, "random element or state")
    sp.add_argument("--kind", choices=("element", "state"), default="element")
    sp.add_argument("--p-decay", dest="p_decay", type=float, default=1.0)
    sp.add_argument("--support", type=int)
    sp.add_argument("--band", type=int)
    sp = add("star", cmd_star, "star product A * B")
    sp.add_argument("A")
    sp.add_argument("B")
    add("adjoint", cmd_adjoint, "involution").add_argument("A")
    sp = add("norm", cmd_norm, "operator norm")
    sp.add_argument("A")
    sp.add_argument("--method", choices=("eigh", "power"), default="eigh")
    sp = add("apply", cmd_apply, "act on a state")
    sp.add_argument("A")
    sp.add_argument("XI")
    sp = add("fourier", cmd_fourier, "n-th Fourier coefficient along gamma")
    sp.add_argument("A")
    sp.add_argument("--n", type=int, required=True)
    sp.add_argument("--nt", type=int, help="use the nt-node quadrature instead of slice projection")
    sp = add("cesaro", cmd_cesaro, "Cesaro mean of order N")
    sp.add_argument("A")
    sp.add_argument("--N", type=int, required=True)
    sp = add("act", cmd_act, "Heisenberg group action")
    sp.add_argument("A")
    for k in ("r", "s", "t"):
        sp.add_argument(f"--{k}", type=float, default=0.0)
    sp = add("smooth", cmd_smooth, "twisted convolution smoothing")
    sp.add_argument("A")
    sp.add_argument("--m", type=int, required=True)
    sp = add("deriv", cmd_deriv, "derivation delta_1 or delta_2")
    sp.add_argument("A")
    sp.add_argument("--which", type=int, choices=(1, 2), required=True)
    add("lipnorm", cmd_lipnorm, "Lipschitz norm").add_argument("A")
    sp = add("holder", cmd_holder, "sampled Hoelder seminorm")
    sp.add_argument("A")
    sp.add_argument("--A", dest="A_exp", type=float, default=1.0)
    sp.add_argument("--B", dest="B_exp", type=float, default=1.0)
    sp.add_argument("--C", dest="C_exp", type=float, default=0.5)
    sp.add_argument("--t-points", dest="t_points", type=int, default=24)
    add("trace", cmd_trace, "trace").add_argument("A")
    add("laplacian", cmd_laplacian, "sub-Riemannian Laplacian").add_argument("A")
    sp = add("heat", cmd_heat, "heat semigroup exp(t Laplacian)")
    sp.add_argument("A")
    sp.add_argument("--t", type=float, required=True)
    sp = add("classical-distance", cmd_classical_distance, "upper bound on the CC distance")
    sp.add_argument("--from", dest="start", type=float, nargs=3, default=[0.0, 0.0, 0.0], metavar=("X", "Y", "Z"))
    sp.add_argument("--to", dest="end", type=float, nargs=3, required=True, metavar=("X", "Y", "Z"))
    sp.add_argument("--segments", type=int, default=16)
    sp.add_argument("--restarts", type=int, default=8)
    sp = add("classical-lip", cmd_classical_lip, "Lipschitz check of a classical function")
    sp.add_argument("F", help=f"{' or '.join(CLASSICAL_BUILTINS)}, or an hbar = 0 element file")
    sp.add_argument("--pairs", type=int, default=12)
    sp.add_argument("--restarts", type=int, default=2)
    sp = add("verify", cmd_verify, "run the check suite")
    sp.add_argument("--filter", help="comma-separated substrings of check names")
    sp.add_argument("--quick", action="store_true", help="fewer random samples per check")
    return parser


def main(argv: Sequence[str] | None = None, stdout=None, stderr=None) -> int:
    stdout = stdout or sys.stdout
    stderr = stderr or sys.stderr
    try:
        apply_thread_cap()
    except UsageError as exc:
        stderr.write(f"qhm: error: {exc}\n")
        return 2
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        out, cfg = args.fn(args)
        emit(out, cfg, args.format is not None, stdout)
    except UsageError as exc:
        stderr.write(f"qhm: error: {exc}\n")
        return 2
    except (ValueError, IndexError) as exc:
        stderr.write(f"qhm: error: {exc}\n")
        return 2
    except BrokenPipeError:
        # reader went away (e.g. piped into head); silence the final flush
        devnull = os.open(os.devnull, os.O_WRONLY)
        os.dup2(devnull, sys.stdout.fileno())
        return out.code if "out" in locals() else 0
    return out.code


if __name__ == "__main__":
    sys.exit(main())
