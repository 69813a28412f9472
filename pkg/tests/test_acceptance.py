"""End-to-end acceptance checks, one test per criterion.

Run with ``pytest tests/test_acceptance.py -v -s`` to see the pass/fail
lines inline; they are also repeated in the terminal summary.
"""

import math
import subprocess
import sys
import time

import numpy as np

from blochcert import (
    bloch_bound_v1,
    bloch_bound_v2,
    certify_origin,
    certify_schlicht,
    eh_bound,
    optimize_2d,
    optimize_origin,
    quartic,
    search_center,
    verify_schlicht_disk,
)
from blochcert.series import Poly, derivative, eval_poly, max_modulus_circle
from blochcert.wu import (
    PolyMap,
    certify_schlicht_mv,
    check_small_eigen,
    jacobian_stats,
    theorem_constant,
    verify_schlicht_mv,
)
from blochcert.bounds import wu_bound
from conftest import DATA, random_normalized, record


def timed(f):
    t0 = time.perf_counter()
    out = f()
    return out, time.perf_counter() - t0


def test_criterion_01_v1():
    best, dt = timed(lambda: optimize_2d(bloch_bound_v1))
    ok = abs(best.value - 0.0355493) <= 1e-4 and best.value > 1 / 29 and dt < 5
    record(1, ok, f"v1 = {best.value:.7f} at gamma={best.gamma:.4f} sigma={best.sigma:.4f} ({dt:.2f} s)")


def test_criterion_02_v2():
    best, dt = timed(lambda: optimize_2d(bloch_bound_v2))
    ok = abs(best.value - 0.0813782) <= 1e-4 and best.value > 1 / 13 and dt < 5
    record(2, ok, f"v2 = {best.value:.7f} at gamma={best.gamma:.4f} sigma={best.sigma:.4f} ({dt:.2f} s)")


def test_criterion_03_earle_hamilton():
    res, dt = timed(lambda: eh_bound(0.45, 0.8))
    ok = abs(res.value - 0.347493) <= 1e-3 and dt < 10
    record(3, ok, f"eh = {res.value:.6f} at a2={res.a2:.4f} a3={res.a3:.4f} ({dt:.2f} s)")


def test_criterion_04_origin_estimate():
    p = quartic(4.66922)
    rho, value = optimize_origin(p)
    cert = certify_origin(p, rho)
    ok = abs(rho - 0.534759) <= 1e-3 and abs(value - 0.38832) <= 1e-4 and cert.schlicht_radius == value
    record(4, ok, f"rho = {rho:.6f}, value = {value:.6f}")


def test_criterion_05_recentered():
    p = quartic(4.66922)
    cert = certify_schlicht(p, -0.07, 0.59)
    found = search_center(p)
    ok = abs(cert.schlicht_radius - 0.43806) <= 5e-4 and found.schlicht_radius >= 0.438
    record(5, ok, f"fixed = {cert.schlicht_radius:.6f}, search = {found.schlicht_radius:.6f} "
                  f"at b={found.center_b.real:.4f} rho={found.domain_radius_rho:.4f}")


def test_criterion_06_variant():
    found = search_center(quartic(4.2))
    ok = found.schlicht_radius >= 0.446896 - 1e-3
    record(6, ok, f"search = {found.schlicht_radius:.6f} at b={found.center_b.real:.4f} "
                  f"rho={found.domain_radius_rho:.4f}")


def test_criterion_07_soundness():
    rng = np.random.default_rng(7)
    t0 = time.perf_counter()
    cases = [("A=4.66922", quartic(4.66922), (61, 61)), ("A=4.2", quartic(4.2), (61, 61))]
    for i in range(20):
        cases.append((f"random {i}", random_normalized(rng, int(rng.integers(2, 7))), (21, 21)))
    problems = []
    positive = 0
    for name, p, grid in cases:
        cert = search_center(p, grid=grid)
        if cert.schlicht_radius <= 0:
            continue
        positive += 1
        rep = verify_schlicht_disk(p, cert, 10_000)
        if not rep.passed or rep.worst_residual > 1e-9:
            problems.append(f"{name}: {rep.to_json()}")
    inflated = verify_schlicht_disk(quartic(4.66922), certify_schlicht(quartic(4.66922), -0.07, 0.59).inflated(1.25), 10_000)
    dt = time.perf_counter() - t0
    ok = not problems and positive == len(cases) and inflated.n_fail > 0 and dt < 60
    record(7, ok, f"{positive}/{len(cases)} certificates verified, inflated x1.25 fails "
                  f"{inflated.n_fail}/10000 ({dt:.1f} s)" + ("; " + "; ".join(problems) if problems else ""))


def test_criterion_08_contraction_lemma():
    rng = np.random.default_rng(8)
    worst = -math.inf
    for _ in range(1000):
        deg = int(rng.integers(2, 9))
        g = Poly(rng.normal(size=deg + 1) + 1j * rng.normal(size=deg + 1))
        c = complex(*rng.uniform(-1, 1, 2))
        rho = rng.uniform(0.05, 1.0)
        sigma = rng.uniform(0.01, 0.99)
        g = Poly(g.coeffs * ((1 - sigma) / max_modulus_circle(derivative(g), c, rho)))
        L = max_modulus_circle(derivative(g), c, rho)
        r = rho * np.sqrt(rng.uniform(0, 1, (2, 20)))
        z = c + r * np.exp(1j * rng.uniform(0, 2 * math.pi, (2, 20)))
        excess = np.abs(eval_poly(g, z[1]) - eval_poly(g, z[0])) - L * np.abs(z[1] - z[0])
        worst = max(worst, float(excess.max()))
    record(8, worst <= 1e-12, f"max excess over the Lipschitz bound = {worst:.3e}")


def test_criterion_09_wu():
    ratios = [wu_bound(m, 2 * K, 2.0, 0.4) / wu_bound(m, K, 2.0, 0.4) for m in (1, 2, 3) for K in (1.0, 3.0)]
    expected = [2 ** (-(3 * m - 1) / 2) for m in (1, 2, 3) for _ in (0, 1)]
    law = all(abs(a / b - 1) <= 1e-10 for a, b in zip(ratios, expected))

    rng = np.random.default_rng(9)
    eig_ok = 0
    for _ in range(1000):
        m = int(rng.integers(2, 5))
        F = PolyMap(m, tuple(
            {tuple(int(i == j) for i in range(m)): complex(rng.normal(), rng.normal()) for j in range(m)}
            for _ in range(m)
        ))
        z = np.zeros(m)
        eig_ok += check_small_eigen(F, z, max(jacobian_stats(F, z).wu_ratio, 1.0))

    import json
    quad = PolyMap.from_json(json.loads((DATA / "quadratic_map.json").read_text()))
    cert = certify_schlicht_mv(quad, [0, 0], 0.5, 0.5)
    rep = verify_schlicht_mv(quad, cert, 1000)

    pinned = [0.018948989816683273, 0.009474494908341636, 0.004737247454170818]
    cm_ok = all(abs(theorem_constant(m) / c - 1) <= 1e-12 for m, c in zip((1, 2, 3), pinned))
    ok = law and eig_ok == 1000 and cert.schlicht_radius > 0 and rep.passed and cm_ok
    record(9, ok, f"exponent law {law}, small-eigen {eig_ok}/1000, quad map radius "
                  f"{cert.schlicht_radius:.4f} verified {rep.n_pass}/1000, C(m) pinned {cm_ok}")


CLI_RUNS = [
    ["bounds", "v1"],
    ["bounds", "v2"],
    ["bounds", "eh", "--rho", "0.45", "--r", "0.8"],
    ["certify", str(DATA / "quartic_4.66922.json"), "--origin"],
    ["certify", str(DATA / "quartic_4.66922.json"), "--b=-0.07", "--rho", "0.59"],
    ["certify", str(DATA / "quartic_4.66922.json"), "--search"],
    ["certify", str(DATA / "quartic_4.2.json"), "--search"],
]


def test_criterion_10_determinism():
    def run(args):
        cmd = [sys.executable, "-m", "blochcert.cli", "--no-timestamp", *args]
        return subprocess.run(cmd, capture_output=True, check=True).stdout

    differ = [" ".join(a[:2]) for a in CLI_RUNS if run(a) != run(a)]
    record(10, not differ, f"{len(CLI_RUNS)} reports byte-identical across two runs" if not differ else f"differ: {differ}")
