"""Command-line front end.

Exit status is 0 on success, 1 on invalid parameters and 2 when a numerical
guard trips.  Results go to standard output or ``--out``; diagnostics go to
standard error.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from dataclasses import fields

import numpy as np

from . import __version__
from .ensembles import SymTridiagonal, double, sample_hermite, sample_laguerre
from .errors import NumericalGuardError, ParameterError
from .experiments import ExperimentConfig, run, run_sine_beta
from .rng import HERMITE, MATRIX, RngStream
from .sde import SineBetaConfig
from .spectral import eigenvalues

_EXP_FIELDS = {f.name for f in fields(ExperimentConfig)}
_SDE_FIELDS = {"beta", "lambda_grid", "h", "delta", "replicas", "seed", "threads", "block"}


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise ParameterError(message)


def _lambda_list(values):
    out = []
    for v in values:
        out += [float(x) for x in str(v).split(",") if x.strip()]
    return out


def _common(p, formats=("json", "csv")):
    p.add_argument("--config", help="JSON file of settings; flags override it")
    p.add_argument("--out", help="write results here instead of standard output")
    p.add_argument("--format", choices=formats, default=None)
    p.add_argument("--seed", type=int, default=argparse.SUPPRESS)
    p.add_argument("--threads", type=int, default=argparse.SUPPRESS)


def _model_flags(p):
    p.add_argument("--beta", type=float, default=argparse.SUPPRESS)
    p.add_argument("--n", type=int, default=argparse.SUPPRESS)
    p.add_argument("--m", type=int, default=argparse.SUPPRESS)


def _experiment_flags(p):
    _model_flags(p)
    p.add_argument("--c", type=float, default=argparse.SUPPRESS)
    p.add_argument("--mu", type=float, default=argparse.SUPPRESS)
    p.add_argument("--lambda", dest="lambda_grid", action="append", default=argparse.SUPPRESS,
                   help="grid point(s); repeat the flag or give a comma list")
    p.add_argument("--replicas", type=int, default=argparse.SUPPRESS)
    p.add_argument("--sde-replicas", type=int, default=argparse.SUPPRESS)
    p.add_argument("--kappa-cutoff", type=float, default=argparse.SUPPRESS)
    p.add_argument("--epsilon", type=float, default=argparse.SUPPRESS)
    p.add_argument("--h", type=float, default=argparse.SUPPRESS)
    p.add_argument("--delta", type=float, default=argparse.SUPPRESS)
    p.add_argument("--hermite-mu", type=float, default=argparse.SUPPRESS)
    p.add_argument("--block", type=int, default=argparse.SUPPRESS)
    p.add_argument("--timing", action="store_true", help="record wall-clock time in the report")


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="betabulk", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"betabulk {__version__}")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    s = sub.add_parser("sample", help="sample a tridiagonal model and print its entries")
    _common(s, ("matrix", "json", "csv"))
    _model_flags(s)
    s.add_argument("--ensemble", choices=("laguerre", "hermite"), default="laguerre")
    s.add_argument("--replica", type=int, default=0)

    e = sub.add_parser("eig", help="eigenvalues of a file-given or sampled tridiagonal matrix")
    _common(e, ("text", "json"))
    _model_flags(e)
    e.add_argument("--file", help="matrix file: k, then k diagonal and k-1 off-diagonal entries")
    e.add_argument("--ensemble", choices=("laguerre", "hermite"), default="laguerre")
    e.add_argument("--replica", type=int, default=0)
    e.add_argument("--lo", type=float)
    e.add_argument("--hi", type=float)
    e.add_argument("--tol", type=float, default=1e-12)

    for name, kind, text in (("density", "density", "compare the spectrum with the Marchenko-Pastur law"),
                             ("bulk-count", "bulk-compare", "matrix vs Sine_beta counting functions"),
                             ("phase", "phase-vs-sde", "relative phase vs its limiting diffusion"),
                             ("hermite-compare", "hermite-compare", "Laguerre vs Hermite bulk statistics")):
        x = sub.add_parser(name, help=text)
        _common(x)
        _experiment_flags(x)
        x.set_defaults(kind=kind)

    b = sub.add_parser("sine-beta", help="simulate the Sine_beta counting function")
    _common(b)
    b.add_argument("--beta", type=float, default=argparse.SUPPRESS)
    b.add_argument("--lambda", dest="lambda_grid", action="append", default=argparse.SUPPRESS)
    b.add_argument("--replicas", type=int, default=argparse.SUPPRESS)
    b.add_argument("--h", type=float, default=argparse.SUPPRESS)
    b.add_argument("--delta", type=float, default=argparse.SUPPRESS)
    b.add_argument("--block", type=int, default=argparse.SUPPRESS)
    b.add_argument("--timing", action="store_true", help="record wall-clock time in the report")
    return p


def _load_config(path) -> dict:
    if not path:
        return {}
    try:
        with open(path) as fh:
            data = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise ParameterError(f"cannot read config {path}: {exc}") from exc
    if not isinstance(data, dict):
        raise ParameterError("config file must hold a JSON object")
    return data


def _settings(args, allowed) -> dict:
    """Config file values overridden by explicitly given flags."""
    cfg = _load_config(args.config)
    flags = {k: v for k, v in vars(args).items() if k in allowed}
    cfg.update(flags)
    unknown = set(cfg) - allowed
    if unknown:
        raise ParameterError(f"unknown settings: {', '.join(sorted(unknown))}")
    if "lambda_grid" in cfg:
        cfg["lambda_grid"] = tuple(_lambda_list(cfg["lambda_grid"]))
    return cfg


def _sample(cfg, ensemble, replica):
    beta, n = cfg.get("beta", 2.0), cfg.get("n", 10)
    seed = cfg.get("seed", 0)
    if ensemble == "hermite":
        return sample_hermite(n, beta, RngStream(seed, replica, HERMITE))
    m = cfg.get("m", 2 * n)
    return double(sample_laguerre(n, m, beta, RngStream(seed, replica, MATRIX)))


def _fmt(x) -> str:
    return repr(float(x))


def cmd_sample(args) -> str:
    cfg = _settings(args, {"beta", "n", "m", "seed", "threads"})
    T = _sample(cfg, args.ensemble, args.replica)
    fmt = args.format or "matrix"
    if fmt == "json":
        return json.dumps({"ensemble": args.ensemble, "diag": T.diag.tolist(),
                           "offdiag": T.offdiag.tolist()}) + "\n"
    if fmt == "csv":
        rows = ["index,diag,offdiag"]
        for i in range(T.size):
            rows.append(f"{i},{_fmt(T.diag[i])},{_fmt(T.offdiag[i]) if i < T.size - 1 else ''}")
        return "\n".join(rows) + "\n"
    return f"{T.size}\n{' '.join(map(_fmt, T.diag))}\n{' '.join(map(_fmt, T.offdiag))}\n"


def read_matrix(path) -> SymTridiagonal:
    try:
        text = sys.stdin.read() if path == "-" else open(path).read()
    except OSError as exc:
        raise ParameterError(f"cannot read matrix file {path}: {exc}") from exc
    lines = [ln for ln in text.splitlines() if ln.strip()]
    try:
        k = int(lines[0])
        diag = np.array(lines[1].split(), dtype=float)
        off = np.array(lines[2].split(), dtype=float) if len(lines) > 2 else np.empty(0)
    except (IndexError, ValueError) as exc:
        raise ParameterError(f"malformed matrix file {path}") from exc
    if k < 1 or diag.size != k or off.size != k - 1:
        raise ParameterError(f"matrix file {path}: expected {k} diagonal and {k - 1} off-diagonal entries")
    return SymTridiagonal(diag, off)


def _num(x: float) -> str:
    return f"{x:.12g}"


def cmd_eig(args) -> str:
    if args.file:
        T = read_matrix(args.file)
    else:
        T = _sample(_settings(args, {"beta", "n", "m", "seed", "threads"}), args.ensemble, args.replica)
    ev = eigenvalues(T, args.lo, args.hi, args.tol)
    if args.format == "json":
        return json.dumps({"eigenvalues": ev.tolist()}) + "\n"
    return "".join(_num(x) + "\n" for x in ev)


def cmd_experiment(args) -> str:
    cfg = _settings(args, _EXP_FIELDS - {"kind"})
    if "mu" in cfg and "c" not in cfg:
        cfg["c"] = None
    rep = run(ExperimentConfig(kind=args.kind, **cfg))
    if args.format == "csv":
        return rep.to_csv()
    return rep.to_json(timing=args.timing)


def cmd_sine_beta(args) -> str:
    cfg = _settings(args, _SDE_FIELDS)
    cfg.setdefault("beta", 2.0)
    cfg.setdefault("lambda_grid", (2 * math.pi,))
    rep, _ = run_sine_beta(SineBetaConfig(**cfg))
    return rep.to_csv() if args.format == "csv" else rep.to_json(timing=args.timing)


COMMANDS = {"sample": cmd_sample, "eig": cmd_eig, "sine-beta": cmd_sine_beta}


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
        if "threads" in args and args.threads < 1:
            raise ParameterError("--threads must be at least 1")
        text = COMMANDS.get(args.command, cmd_experiment)(args)
        if args.out:
            with open(args.out, "w") as fh:
                fh.write(text)
        else:
            sys.stdout.write(text)
        return 0
    except ParameterError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except NumericalGuardError as exc:
        print(f"numerical guard: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
