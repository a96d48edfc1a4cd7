"""Command-line front end.

Exit codes: 0 success, 2 domain/config error (and usage errors),
3 inequality or invariant violation, 4 convergence failure.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .bodies import LpSubspaceBall, body_from_spec
from .errors import ConfigError, SlicingError
from .integrate import (UNIFORM, density_from_spec, max_section_measure, measure_body,
                        measure_section, volume_polar)
from .ovr import loewner_ovr_details, prop2_check, prop2_empirical
from .radon import intersection_body_of, radial_power_function, radon_transform
from .sampling import SeedSpec, SubspaceFrame, complement_frame, sample_sphere, set_threads
from .selftest import run_selftest
from .slicing import (Counts, SweepConfig, default_corpus, evaluate, sweep, to_csv, to_json,
                      verify_corollary, verify_prop1)


def _load_json(text, what):
    """Inline JSON, or a path to a JSON file."""
    try:
        if text.lstrip().startswith(("{", "[")):
            return json.loads(text)
        return json.loads(Path(text).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read {what}: {exc}") from exc


def _body(args):
    if not args.body:
        raise ConfigError("--body is required")
    return body_from_spec(_load_json(args.body, "body spec"))


def _density(args):
    return density_from_spec(_load_json(args.density, "density spec")) if args.density else UNIFORM


def _vector(text, n, what):
    v = np.asarray(_load_json(text, what), dtype=float)
    if v.shape != (n,):
        raise ConfigError(f"{what} must be a list of {n} numbers")
    return v


def _frame(args, n):
    if args.frame:
        basis = np.asarray(_load_json(args.frame, "frame"), dtype=float)
        if basis.ndim != 2 or basis.shape[1] != n:
            raise ConfigError(f"frame must be a list of vectors of length {n}")
        return SubspaceFrame(basis.T)
    if args.normal:
        xi = _vector(args.normal, n, "normal")
        return complement_frame(xi / np.linalg.norm(xi))
    return None


def _clean(v):
    if isinstance(v, dict):
        return {k: _clean(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_clean(x) for x in v]
    if isinstance(v, np.ndarray):
        return _clean(v.tolist())
    if isinstance(v, (np.floating, np.integer)):
        v = v.item()
    if isinstance(v, float) and not math.isfinite(v):
        return None if math.isnan(v) else ("inf" if v > 0 else "-inf")
    return v


def _emit(args, command, result, rows_csv=None):
    if args.format == "csv":
        if rows_csv is not None:
            text = rows_csv
        else:
            flat = {"command": command, "version": __version__, "seed": args.seed}
            for key, val in result.items():
                flat[key] = json.dumps(_clean(val)) if isinstance(val, (dict, list, tuple)) else _clean(val)
            buf = io.StringIO()
            w = csv.writer(buf, lineterminator="\n")
            w.writerow(flat.keys())
            w.writerow(["" if v is None else (repr(v) if isinstance(v, float) else v) for v in flat.values()])
            text = buf.getvalue()
    else:
        envelope = {"tool": "lpslicing", "version": __version__, "command": command,
                    "seed": args.seed, "samples": getattr(args, "samples", None),
                    "result": _clean(result)}
        text = json.dumps(envelope, indent=1) + "\n"
    if args.out:
        Path(args.out).write_text(text)
    else:
        sys.stdout.write(text)


def _counts(args):
    return Counts(volume=args.samples, section=args.samples, restarts=args.restarts,
                  local_steps=args.local_steps, search=args.search, probes=args.probes,
                  boundary=args.boundary, mvee_eps=args.eps)


# -- commands ---------------------------------------------------------------------

def cmd_volume(args, seed):
    body = _body(args)
    est = volume_polar(body, args.samples, seed)
    return {"body": body.to_spec(), **est.to_dict()}


def cmd_section(args, seed):
    body = _body(args)
    frame = _frame(args, body.n)
    if frame is None:
        raise ConfigError("section needs --normal or --frame")
    est = measure_section(body, UNIFORM, frame, args.samples, seed)
    return {"body": body.to_spec(), "frame": frame.to_list(), **est.to_dict()}


def cmd_measure(args, seed):
    body, density = _body(args), _density(args)
    frame = _frame(args, body.n)
    if frame is None:
        est = measure_body(body, density, args.samples, seed)
    else:
        est = measure_section(body, density, frame, args.samples, seed)
    return {"body": body.to_spec(), "density": density.to_spec(),
            "frame": frame.to_list() if frame else None, **est.to_dict()}


def cmd_maxsection(args, seed):
    body, density = _body(args), _density(args)
    res = max_section_measure(body, density, args.k, args.restarts, args.local_steps,
                              args.samples, seed, args.search)
    return {"body": body.to_spec(), "density": density.to_spec(), "k": args.k,
            "frame": res.frame.to_list(), "restarts": args.restarts,
            "restart_values": list(res.restart_values), **res.estimate.to_dict()}


def cmd_radon(args, seed):
    body = _body(args)
    if not args.xi:
        raise ConfigError("radon needs --xi")
    xi = _vector(args.xi, body.n, "xi")
    xi = xi / np.linalg.norm(xi)
    power = body.n - 1 if args.power is None else args.power
    est = radon_transform(radial_power_function(body, power), xi, args.samples, seed)
    out = {"body": body.to_spec(), "xi": xi.tolist(), "power": power, **est.to_dict()}
    if power == body.n - 1:
        out["section_volume"] = est.value / (body.n - 1)
        out["section_volume_se"] = est.std_error / (body.n - 1)
    return out


def cmd_ibody(args, seed):
    body = _body(args)
    ib = intersection_body_of(body, args.samples, seed)
    if args.xi:
        dirs = np.atleast_2d(np.asarray(_load_json(args.xi, "xi"), dtype=float))
        dirs = dirs / np.linalg.norm(dirs, axis=1, keepdims=True)
    else:
        dirs = sample_sphere(body.n, args.directions, seed.derive("ibody/directions"))
    rho = ib.radial(dirs)
    return {"body": body.to_spec(), "directions": dirs.tolist(), "radial": rho.tolist()}


def cmd_ovr(args, seed):
    body = _body(args)
    d = loewner_ovr_details(body, args.boundary, args.eps, args.samples, seed, args.probes)
    d["M"] = d["M"].tolist()
    return {"body": body.to_spec(), **d}


def cmd_prop2(args, seed):
    if args.body:
        body = _body(args)
        if not isinstance(body, LpSubspaceBall):
            raise ConfigError("prop2 --body needs an lp_ball or lp_subspace body")
        rep = prop2_empirical(body, args.k, args.samples, seed, args.probes)
    else:
        if args.p is None or args.n is None:
            raise ConfigError("prop2 needs --p and --n (or --body)")
        rep = prop2_check(args.p, args.n, args.k)
    return rep.to_dict()


def cmd_verify(args, seed):
    body, density = _body(args), _density(args)
    counts = _counts(args)
    ovr = args.ovr
    try:
        ovr = float(ovr)
    except ValueError:
        pass
    if args.which == "prop1":
        rep = verify_prop1(body, density, args.k, counts, seed, ovr, args.body_id)
    else:
        rep = verify_corollary(body, density, args.k, counts, seed, args.bound, args.body_id)
    return rep


def cmd_sweep(args, seed):
    if args.config:
        config = SweepConfig.from_dict(_load_json(args.config, "sweep config"))
    else:
        config = default_corpus(args.seed)
    return sweep(config)


COMMANDS = {
    "volume": cmd_volume, "section": cmd_section, "measure": cmd_measure,
    "maxsection": cmd_maxsection, "radon": cmd_radon, "ibody": cmd_ibody,
    "ovr": cmd_ovr, "prop2": cmd_prop2, "verify": cmd_verify, "sweep": cmd_sweep,
}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=0, help="64-bit master seed")
    common.add_argument("--format", choices=("json", "csv"), default="json")
    common.add_argument("--out", help="write the report here instead of stdout")
    common.add_argument("--threads", type=int, default=1,
                        help="worker cap for chunked sampling; never changes results")

    body = argparse.ArgumentParser(add_help=False)
    body.add_argument("--body", help="body spec: inline JSON or path to a JSON file")
    body.add_argument("--density", help="density spec: inline JSON or path (default uniform)")
    body.add_argument("--samples", type=int, default=200_000)

    search = argparse.ArgumentParser(add_help=False)
    search.add_argument("--k", type=int, default=1, help="codimension of the sections")
    search.add_argument("--restarts", type=int, default=6)
    search.add_argument("--local-steps", type=int, default=30)
    search.add_argument("--search", type=int, default=2048, help="directions per search evaluation")

    enclose = argparse.ArgumentParser(add_help=False)
    enclose.add_argument("--eps", type=float, default=1e-3, help="MVEE tolerance")
    enclose.add_argument("--boundary", type=int, default=None,
                         help="boundary points for the MVEE (default max(1000, 50 n^2))")
    enclose.add_argument("--probes", type=int, default=100_000)

    parser = argparse.ArgumentParser(
        prog="lpslicing",
        description="Monte-Carlo convex geometry for measure slicing inequalities.")
    parser.add_argument("--version", action="version", version=f"lpslicing {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("volume", parents=[common, body], help="polar-formula volume")
    p = sub.add_parser("section", parents=[common, body], help="volume of a central section")
    p.add_argument("--normal", help="unit normal of a hyperplane section (JSON list)")
    p.add_argument("--frame", help="orthonormal basis of the section subspace (JSON list of vectors)")
    p = sub.add_parser("measure", parents=[common, body], help="mu(K) or mu(K ∩ H)")
    p.add_argument("--normal")
    p.add_argument("--frame")
    sub.add_parser("maxsection", parents=[common, body, search], help="max over Gr_{n-k} of mu(K ∩ H)")
    p = sub.add_parser("radon", parents=[common, body], help="spherical Radon transform of rho_K^power")
    p.add_argument("--xi", help="direction (JSON list)")
    p.add_argument("--power", type=float, default=None, help="default n-1 (section volume route)")
    p = sub.add_parser("ibody", parents=[common, body], help="radial values of the intersection body")
    p.add_argument("--xi", help="JSON list of directions")
    p.add_argument("--directions", type=int, default=8, help="random directions if --xi is absent")
    sub.add_parser("ovr", parents=[common, body, enclose], help="Löwner outer volume ratio bound")
    p = sub.add_parser("prop2", parents=[common, body, enclose],
                       help="ratio |n^(1/2-1/p) B_2^n|/|K| for L_p balls in Lewis position")
    p.add_argument("--p", type=float)
    p.add_argument("--n", type=int)
    p.add_argument("--k", type=int, default=1)
    p = sub.add_parser("verify", parents=[common, body, search, enclose],
                       help="check the slicing inequality (prop1) or report C_emp (corollary)")
    p.add_argument("which", choices=("prop1", "corollary"))
    p.add_argument("--ovr", default="loewner", help="loewner | closed-form | a number")
    p.add_argument("--bound", type=float, default=3.0, help="corollary tripwire for C_emp")
    p.add_argument("--body-id", default="")
    p = sub.add_parser("sweep", parents=[common], help="run a corpus of verifications")
    p.add_argument("--config", help="sweep config JSON (default: built-in corpus)")
    sub.add_parser("selftest", parents=[common], help="fast invariant suite")
    return parser


def run(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    set_threads(args.threads)
    seed = SeedSpec(args.seed)
    try:
        if args.command == "selftest":
            results = run_selftest(args.seed)
            _emit(args, "selftest", {"checks": results, "passed": all(r["passed"] for r in results)},
                  rows_csv=_selftest_csv(results) if args.format == "csv" else None)
            return 0 if all(r["passed"] for r in results) else 3
        result = COMMANDS[args.command](args, seed)
        if args.command == "sweep":
            text = to_csv(result) if args.format == "csv" else None
            if args.format == "json":
                payload = json.loads(to_json(result))
                _emit(args, "sweep", {"rows": payload})
            else:
                _emit(args, "sweep", {}, rows_csv=text)
        elif args.command == "verify":
            _emit(args, "verify " + args.which, result.to_dict(),
                  rows_csv=to_csv([result]) if args.format == "csv" else None)
        else:
            _emit(args, args.command, result)
    except SlicingError as exc:
        report = getattr(exc, "report", None)
        if report is not None:
            _emit(args, args.command, {"error": str(exc), "report": report.to_dict()})
        print(f"lpslicing: {type(exc).__name__}: {exc}", file=sys.stderr)
        return exc.exit_code
    return 0


def _selftest_csv(results):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["check", "passed", "detail", "version"])
    for r in results:
        w.writerow([r["check"], r["passed"], r["detail"], __version__])
    return buf.getvalue()


def main():
    sys.exit(run())


if __name__ == "__main__":
    main()
