"""Command-line front end.

    blochcert bounds v1|v2|eh|wu [...]
    blochcert certify POLY.json (--b B --rho RHO | --search | --origin) [--verify N]
    blochcert wu MAP.json stats|estimate-k|certify [...]

Every command prints one JSON report.  Exit codes: 0 success, 2 usage or
parse error, 3 mathematical degeneracy, 4 verification failure.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
from dataclasses import asdict, dataclass, field
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from . import __version__
from . import bounds as bf
from .contraction import (
    DegenerateCenterError,
    NormalizationError,
    SearchFailureError,
    certify_origin,
    certify_schlicht,
    optimize_origin,
    search_center,
    verify_schlicht_disk,
)
from .series import MAX_MODULUS_SAMPLES, Poly
from .wu import (
    TORUS_ANGLES,
    PolyMap,
    certify_schlicht_mv,
    estimate_wu_K,
    jacobian_stats,
    theorem_bound_mv,
    theorem_constant,
    theorem_exponent,
    verify_schlicht_mv,
)

EXIT_OK, EXIT_USAGE, EXIT_DEGENERATE, EXIT_VERIFY = 0, 2, 3, 4

DEFAULTS = {
    "gamma_box": list(bf.GAMMA_BOX),
    "sigma_box": list(bf.SIGMA_BOX),
    "coarse_grid": bf.COARSE_GRID,
    "refine_rounds": bf.REFINE_ROUNDS,
    "eh_grid": bf.EH_GRID,
    "max_modulus_samples": MAX_MODULUS_SAMPLES,
    "torus_angles": TORUS_ANGLES,
    "eh_radicand": "a3 squared",
}


class UsageError(Exception):
    pass


@dataclass
class RunReport:
    command: str
    inputs: dict
    results: dict
    provenance: dict = field(default_factory=lambda: {"tool": "blochcert", "version": __version__, "defaults": DEFAULTS})
    timestamp: str | None = None

    def to_json(self) -> dict:
        d = asdict(self)
        if d["timestamp"] is None:
            del d["timestamp"]
        return d

    def dumps(self) -> str:
        return json.dumps(self.to_json(), indent=2, allow_nan=False)

    @classmethod
    def loads(cls, text: str) -> "RunReport":
        return cls(**json.loads(text))


def _write_csv(path: str, header: list[str], rows) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        w.writerows(rows)


def _bound_grid_rows(f, n: int = bf.COARSE_GRID):
    gs = np.linspace(*bf.GAMMA_BOX, n)
    ss = np.linspace(*bf.SIGMA_BOX, n)
    vals = f(gs[:, None], ss[None, :])
    for i, g in enumerate(gs):
        for j, s in enumerate(ss):
            yield [repr(float(g)), repr(float(s)), repr(float(vals[i, j]))]


def cmd_bounds(args) -> tuple[dict, int]:
    which = args.which
    if which in ("v1", "v2"):
        f = bf.bloch_bound_v1 if which == "v1" else bf.bloch_bound_v2
        if args.gamma is not None or args.sigma is not None:
            if args.gamma is None or args.sigma is None:
                raise UsageError("pointwise evaluation needs both --gamma and --sigma")
            return {"params": {"gamma": args.gamma, "sigma": args.sigma}, "value": f(args.gamma, args.sigma)}, EXIT_OK
        best = bf.optimize_2d(f)
        if args.grid_csv:
            _write_csv(args.grid_csv, ["gamma", "sigma", "value"], _bound_grid_rows(f))
        return {"params": {"gamma": best.gamma, "sigma": best.sigma}, "value": best.value}, EXIT_OK
    if which == "eh":
        if args.rho is None or args.r is None:
            raise UsageError("eh needs --rho and --r")
        res = bf.eh_bound(args.rho, args.r)
        if args.grid_csv:
            a2s = np.linspace(0, 1, 101)
            a3s = np.linspace(0, bf.a3_cap(args.r, 0.0), 101)
            rows = (
                [repr(float(a2)), repr(float(a3)), repr(float(bf.eh_penalty(args.rho, args.r, a2, a3)))]
                for a2 in a2s for a3 in a3s if a3 <= bf.a3_cap(args.r, float(a2))
            )
            _write_csv(args.grid_csv, ["a2", "a3", "penalty"], rows)
        return {"params": {"rho": res.rho, "r": res.r, "a2": res.a2, "a3": res.a3}, "value": res.value}, EXIT_OK
    m, K = args.m, args.K
    if args.gamma is not None and args.sigma is not None:
        return {"params": {"m": m, "K": K, "gamma": args.gamma, "sigma": args.sigma},
                "value": bf.wu_bound(m, K, args.gamma, args.sigma)}, EXIT_OK
    value = theorem_bound_mv(m, K, ball=args.ball)
    if args.grid_csv:
        _write_csv(args.grid_csv, ["gamma", "sigma", "value"], _bound_grid_rows(lambda g, s: bf.wu_bound(m, K, g, s)))
    return {
        "params": {"m": m, "K": K, "ball": args.ball},
        "value": value,
        "C_m": theorem_constant(m),
        "K_exponent": theorem_exponent(m),
    }, EXIT_OK


def _load_json(path: str) -> dict:
    try:
        return json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise UsageError(f"cannot read {path}: {exc}") from exc


def cmd_certify(args) -> tuple[dict, int]:
    try:
        p = Poly.from_json(_load_json(args.poly_file))
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    out: dict = {}
    if args.origin:
        rho = args.rho
        if rho is None:
            rho, _ = optimize_origin(p)
        cert = certify_origin(p, float(rho))
    elif args.search:
        cert = search_center(p, tuple(args.b_range), tuple(args.rho_range), tuple(args.grid), banach=args.banach)
    else:
        if args.b is None or args.rho is None:
            raise UsageError("give --b and --rho, or --search, or --origin")
        cert = certify_schlicht(p, args.b, args.rho, banach=args.banach)
    out["certificate"] = cert.to_json()
    code = EXIT_OK
    if args.verify:
        if cert.schlicht_radius <= 0:
            raise DegenerateCenterError("certificate has zero radius; nothing to verify")
        rep = verify_schlicht_disk(p, cert, args.verify)
        out["verification"] = rep.to_json()
        if not rep.passed:
            code = EXIT_VERIFY
    return out, code


def cmd_wu(args) -> tuple[dict, int]:
    try:
        F = PolyMap.from_json(_load_json(args.map_file))
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    m = F.dim_m

    def point(vals, name):
        if vals is None:
            return [0j] * m
        if len(vals) != m:
            raise UsageError(f"--{name} needs {m} complex values")
        return vals

    if args.action == "stats":
        st = jacobian_stats(F, point(args.point, "point"))
        return {"stats": st.to_json()}, (EXIT_DEGENERATE if st.degenerate else EXIT_OK)
    if args.action == "estimate-k":
        est = estimate_wu_K(F, args.radius, args.grid)
        return {"estimate": est.to_json()}, (EXIT_DEGENERATE if est.degenerate else EXIT_OK)
    cert = certify_schlicht_mv(F, point(args.beta, "beta"), args.eta, args.sigma)
    out = {"certificate": cert.to_json()}
    code = EXIT_OK
    if args.verify and cert.schlicht_radius > 0:
        rep = verify_schlicht_mv(F, cert, args.verify)
        out["verification"] = rep.to_json()
        if not rep.passed:
            code = EXIT_VERIFY
    return out, code


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="blochcert", description=__doc__.splitlines()[0])
    ap.add_argument("--out", help="write the JSON report here instead of stdout")
    ap.add_argument("--no-timestamp", action="store_true", help="omit the timestamp for byte-identical reports")
    sub = ap.add_subparsers(dest="command", required=True)

    b = sub.add_parser("bounds", help="evaluate or optimise a closed-form bound")
    b.add_argument("which", choices=["v1", "v2", "eh", "wu"])
    b.add_argument("--gamma", type=float)
    b.add_argument("--sigma", type=float)
    b.add_argument("--rho", type=float, help="z-plane radius for eh")
    b.add_argument("--r", type=float, help="coefficient-estimate radius for eh")
    b.add_argument("--m", type=int, default=2)
    b.add_argument("--K", type=float, default=1.0)
    b.add_argument("--ball", action="store_true", help="unit-ball variant of the wu bound")
    b.add_argument("--grid-csv", metavar="PATH", help="dump the objective grid for plotting")

    c = sub.add_parser("certify", help="certify a schlicht disk for a polynomial")
    c.add_argument("poly_file")
    c.add_argument("--b", type=complex)
    c.add_argument("--rho", type=float)
    c.add_argument("--search", action="store_true")
    c.add_argument("--origin", action="store_true", help="triangle-bound certificate about 0")
    c.add_argument("--b-range", type=float, nargs=2, default=[-0.3, 0.3])
    c.add_argument("--rho-range", type=float, nargs=2, default=[0.3, 0.9])
    c.add_argument("--grid", type=int, nargs=2, default=[61, 61])
    c.add_argument("--banach", action="store_true", help="upgrade to a contraction certificate when possible")
    c.add_argument("--verify", type=int, default=0, metavar="N")

    w = sub.add_parser("wu", help="polynomial maps C^m -> C^m")
    w.add_argument("map_file")
    w.add_argument("action", choices=["stats", "estimate-k", "certify"])
    w.add_argument("--point", type=complex, nargs="+")
    w.add_argument("--radius", type=float, default=0.5)
    w.add_argument("--grid", type=int, default=TORUS_ANGLES)
    w.add_argument("--beta", type=complex, nargs="+")
    w.add_argument("--eta", type=float, default=0.5)
    w.add_argument("--sigma", type=float, default=0.5)
    w.add_argument("--verify", type=int, default=0, metavar="N")
    return ap


def _echo(args) -> dict:
    out = {}
    for k, v in sorted(vars(args).items()):
        if k in ("out", "no_timestamp", "command"):
            continue
        if isinstance(v, complex):
            v = [v.real, v.imag]
        elif isinstance(v, list) and v and isinstance(v[0], complex):
            v = [[x.real, x.imag] for x in v]
        out[k] = v
    return out


def main(argv: list[str] | None = None) -> int:
    ap = build_parser()
    args = ap.parse_args(argv)
    handler = {"bounds": cmd_bounds, "certify": cmd_certify, "wu": cmd_wu}[args.command]
    try:
        results, code = handler(args)
    except (UsageError, NormalizationError) as exc:
        print(f"blochcert: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except ValueError as exc:
        if isinstance(exc, DegenerateCenterError):
            print(f"blochcert: degenerate: {exc}", file=sys.stderr)
            return EXIT_DEGENERATE
        print(f"blochcert: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except SearchFailureError as exc:
        print(f"blochcert: degenerate: {exc}", file=sys.stderr)
        return EXIT_DEGENERATE
    report = RunReport(
        command=args.command if args.command != "bounds" else f"bounds {args.which}",
        inputs=_echo(args),
        results=results,
        timestamp=None if args.no_timestamp else datetime.now(timezone.utc).isoformat(),
    )
    text = report.dumps()
    if args.out:
        Path(args.out).write_text(text + "\n")
    else:
        print(text)
    return code


if __name__ == "__main__":
    sys.exit(main())
