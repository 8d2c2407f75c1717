"""Command-line interface: ``homwalk <command> [options]``.

Every command writes a provenance header (command, seed, parameters, code
version) followed by its result, as JSON or CSV.  Exit status is 0 on
success, 2 when the classifier returns Indeterminate and 1 on any error.
"""

from __future__ import annotations

import argparse
import csv
import io as _io
import json
import os
import sys
import warnings

import numpy as np

from . import __version__
from .classify import VerdictKind, classify
from .decomp import cartan_projection, iwasawa_decompose
from .exceptions import HomwalkError
from .group import density_warnings
from .io import load_matrix, load_measure, load_spec
from .lyapunov import clt_diagnostics, estimate_lyapunov
from .subgroup import SubgroupSpec
from .transfer import leading_eigen, grid_angles, stationary_measure
from .walk import (
    increment_spread,
    green_report,
    large_deviation_decay,
    simulate_walk,
    walk_evidence,
)
from .group import RandomStream

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_INDETERMINATE = 2
THETA_BOUND = 0.2


def _default_seed() -> int:
    raw = os.environ.get("HOMWALK_SEED")
    if raw is None or raw == "":
        return 0
    try:
        return int(raw)
    except ValueError:
        raise HomwalkError(f"HOMWALK_SEED must be an integer, got {raw!r}") from None


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, (np.floating, float)):
        x = float(obj)
        return x if np.isfinite(x) else str(x)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    if isinstance(obj, complex):
        return [obj.real, obj.imag]
    return obj


class Output:
    def __init__(self, args, params: dict):
        self.args = args
        self.provenance = {
            "command": args.command,
            "version": __version__,
            "seed": getattr(args, "seed", None),
            "workers": getattr(args, "workers", None),
            "measure": getattr(args, "measure", None),
            "spec": getattr(args, "spec", None),
            "parameters": params,
        }

    def emit(self, result: dict, rows=None, header=None):
        if self.args.format == "csv" and rows is not None:
            buf = _io.StringIO()
            for line in json.dumps(_jsonable(self.provenance), sort_keys=True).splitlines():
                buf.write(f"# {line}\n")
            writer = csv.writer(buf, lineterminator="\n")
            writer.writerow(header)
            for row in rows:
                writer.writerow([repr(float(x)) if isinstance(x, (float, np.floating)) else x for x in row])
            text = buf.getvalue()
        else:
            text = json.dumps(_jsonable({"provenance": self.provenance, "result": result}), indent=2, sort_keys=True)
            text += "\n"
        if self.args.out:
            with open(self.args.out, "w", encoding="utf-8") as f:
                f.write(text)
        else:
            sys.stdout.write(text)


def _measure(args, check_density=True):
    mu = load_measure(args.measure)
    if check_density:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            for msg in density_warnings(mu, master_seed=args.seed):
                print(f"warning: {msg}", file=sys.stderr)
    return mu


def _spec(args, dim):
    if getattr(args, "spec", None):
        spec = load_spec(args.spec)
        if spec.dim != dim:
            raise HomwalkError(f"spec is for SL({spec.dim}) but the measure lives in SL({dim})")
        return spec
    return SubgroupSpec(dim, np.zeros((0, dim)))


def _thetas(raw: str):
    out = []
    for part in raw.split(","):
        part = part.strip()
        try:
            out.append(complex(part))
        except ValueError:
            raise HomwalkError(f"cannot parse theta value {part!r}") from None
    return out


def cmd_decompose(args) -> int:
    g = load_matrix(args.matrix)
    tri = iwasawa_decompose(g)
    result = {"k": tri.k, "sigma": tri.sigma.coords, "n": tri.n, "kappa": cartan_projection(g).coords}
    Output(args, {"matrix": args.matrix}).emit(result)
    return EXIT_OK


def cmd_lyapunov(args) -> int:
    mu = _measure(args)
    est = estimate_lyapunov(mu, args.steps, args.trajectories, args.seed, workers=args.workers, symmetrize=args.symmetrize)
    Output(args, {"steps": args.steps, "trajectories": args.trajectories, "symmetrize": args.symmetrize}).emit(
        est.to_dict()
    )
    return EXIT_OK


def cmd_classify(args) -> int:
    mu = _measure(args)
    spec = _spec(args, mu.dim)
    est = estimate_lyapunov(mu, args.steps, args.trajectories, args.seed, workers=args.workers, symmetrize=args.symmetrize)
    verdict = classify(spec, est, args.z)
    result = {"verdict": verdict.to_dict(), "lyapunov": est.to_dict(), "synthetic": args.symmetrize}
    if args.evidence:
        ev = walk_evidence(mu, spec, args.evidence, args.trajectories, args.seed, args.symmetrize, args.workers)
        result["evidence"] = ev.to_dict()
    params = {"steps": args.steps, "trajectories": args.trajectories, "z": args.z, "symmetrize": args.symmetrize}
    params["evidence_steps"] = args.evidence
    Output(args, params).emit(result)
    return EXIT_INDETERMINATE if verdict.kind is VerdictKind.INDETERMINATE else EXIT_OK


def cmd_walk(args) -> int:
    mu = _measure(args)
    spec = _spec(args, mu.dim)
    traj = simulate_walk(mu, spec, None, None, args.steps, RandomStream(args.seed, args.trajectory), args.symmetrize)
    k = spec.codim
    rows = [[n, *map(float, p)] for n, p in enumerate(traj.points)]
    params = {"steps": args.steps, "trajectory": args.trajectory, "symmetrize": args.symmetrize}
    Output(args, params).emit(
        {"points": traj.points, "synthetic": traj.synthetic},
        rows,
        ["step", *[f"coord_{i + 1}" for i in range(k)]],
    )
    return EXIT_OK


def cmd_green(args) -> int:
    mu = _measure(args)
    spec = _spec(args, mu.dim)
    params = {"steps": args.steps, "trajectories": args.trajectories, "radius": args.radius, "symmetrize": args.symmetrize}
    if args.radius is not None:
        rep = green_report(
            mu, spec, None, None, args.radius, args.steps, args.trajectories, args.seed, args.workers, args.symmetrize
        )
        rows = [[n, float(v)] for n, v in enumerate(rep.curve)]
        Output(args, params).emit({**rep.to_dict(), "curve": rep.curve}, rows, ["step", "green"])
        return EXIT_OK
    ev = walk_evidence(mu, spec, args.steps, args.trajectories, args.seed, args.symmetrize, args.workers)
    rows, header = [], ["step", "green_local"]
    if ev.horizon is not None:
        header.append("green_horizon")
        rows = [[n, float(a), float(b)] for n, (a, b) in enumerate(zip(ev.local.curve, ev.horizon.curve))]
    else:
        rows = [[n, float(a)] for n, a in enumerate(ev.local.curve)]
    Output(args, params).emit(ev.to_dict(), rows, header)
    return EXIT_OK


def cmd_clt(args) -> int:
    mu = _measure(args)
    spec = _spec(args, mu.dim)
    report = clt_diagnostics(mu, spec, args.steps, args.trajectories, args.seed, workers=args.workers)
    Output(args, {"steps": args.steps, "samples": args.trajectories}).emit(report)
    return EXIT_OK


def cmd_spectrum(args) -> int:
    mu = _measure(args, check_density=False)
    spec = _spec(args, mu.dim)
    thetas = _thetas(args.theta)
    for th in thetas:
        if abs(th.real) > THETA_BOUND:
            raise HomwalkError(f"|Re theta| = {abs(th.real):g} exceeds the bound {THETA_BOUND}")
    reports = [leading_eigen(mu, th, spec, args.grid) for th in thetas]
    rows = [
        [th.real, th.imag, r.eigenvalue.real, r.eigenvalue.imag, abs(r.eigenvalue), r.spectral_radius_rest]
        for th, r in zip(thetas, reports)
    ]
    Output(args, {"grid": args.grid, "theta": args.theta}).emit(
        {"sweep": [r.to_dict() for r in reports]},
        rows,
        ["theta_re", "theta_im", "lambda_re", "lambda_im", "abs_lambda", "rest_radius"],
    )
    return EXIT_OK


def cmd_stationary(args) -> int:
    mu = _measure(args, check_density=False)
    nu = stationary_measure(mu, args.grid)
    ang = grid_angles(args.grid)
    Output(args, {"grid": args.grid}).emit(
        {"angles": ang, "weights": nu}, [[float(a), float(w)] for a, w in zip(ang, nu)], ["angle", "weight"]
    )
    return EXIT_OK


def cmd_ldp(args) -> int:
    mu = _measure(args)
    spec = _spec(args, mu.dim)
    M = args.M if args.M is not None else 0.5 * increment_spread(mu, spec, master_seed=args.seed)
    dec = large_deviation_decay(mu, spec, None, M, args.steps, args.trajectories, args.seed)
    rows = [[int(k), float(v)] for k, v in zip(dec.ks, dec.log_frequency)]
    Output(args, {"k_max": args.steps, "samples": args.trajectories, "M": M}).emit(
        dec.to_dict(), rows, ["k", "log_frequency"]
    )
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="homwalk", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"homwalk {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--out", help="write output to this file instead of stdout")
    common.add_argument("--format", choices=("json", "csv"), default="json")

    rand = argparse.ArgumentParser(add_help=False, parents=[common])
    rand.add_argument("--measure", required=True, help="measure JSON file or bundled:<name>")
    rand.add_argument("--seed", type=int, default=None, help="master seed (default: $HOMWALK_SEED or 0)")
    rand.add_argument("--workers", type=int, default=1)

    def add(name, fn, parents, helptext, **defaults):
        p = sub.add_parser(name, parents=parents, help=helptext)
        p.set_defaults(func=fn)
        if "steps" in defaults:
            p.add_argument("--steps", type=int, default=defaults["steps"])
        if "trajectories" in defaults:
            p.add_argument("--trajectories", type=int, default=defaults["trajectories"])
        if defaults.get("spec"):
            p.add_argument("--spec", help="subgroup spec JSON file or bundled:<name>")
        if defaults.get("symmetrize"):
            p.add_argument("--symmetrize", action="store_true", help="synthetic centered walk (random signs)")
        if "grid" in defaults:
            p.add_argument("--grid", type=int, default=defaults["grid"])
        return p

    p = sub.add_parser("decompose", parents=[common], help="Iwasawa and Cartan decomposition of a matrix")
    p.add_argument("matrix", help="JSON file holding a square matrix")
    p.set_defaults(func=cmd_decompose)

    add("lyapunov", cmd_lyapunov, [rand], "estimate the Lyapunov vector", steps=10_000, trajectories=200, symmetrize=True)
    p = add(
        "classify", cmd_classify, [rand], "recurrence verdict for G/H", steps=10_000, trajectories=200, spec=True,
        symmetrize=True,
    )
    p.add_argument("--z", type=float, default=4.0, help="confidence multiplier of the stderr threshold")
    p.add_argument("--evidence", type=int, default=0, metavar="STEPS", help="also report Green evidence at this horizon")
    p = add("walk", cmd_walk, [rand], "one trajectory of the walk on E", steps=1000, spec=True, symmetrize=True)
    p.add_argument("--trajectory", type=int, default=0, help="trajectory index of the random stream")
    p = add("green", cmd_green, [rand], "empirical Green curves", steps=10_000, trajectories=200, spec=True, symmetrize=True)
    p.add_argument("--radius", type=float, default=None, help="ball radius (default: two-scale evidence)")
    add("clt", cmd_clt, [rand], "normality diagnostics of the cocycle", steps=2000, trajectories=10_000, spec=True)
    p = add("spectrum", cmd_spectrum, [rand], "leading eigenvalues of transfer operators (d = 2)", spec=True, grid=1024)
    p.add_argument("--theta", default="0", help="comma-separated covectors, complex literals such as 0.1 or 0.5j")
    add("stationary", cmd_stationary, [rand], "grid stationary measure (d = 2)", grid=1024)
    p = add("ldp", cmd_ldp, [rand], "large-deviation decay; --steps is k_max", steps=40, trajectories=20_000, spec=True)
    p.add_argument("--M", type=float, default=None, help="deviation rate (default: half the increment spread)")
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if hasattr(args, "seed") and args.seed is None:
            args.seed = _default_seed()
        return args.func(args)
    except (HomwalkError, ValueError, ArithmeticError, RuntimeError, OSError) as exc:
        print(f"homwalk {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
