import json
import math

import numpy as np
import pytest

from blochcert.contraction import (
    CertificateKind,
    CertificationResult,
    DegenerateCenterError,
    DomainEscapeError,
    NonConvergenceError,
    NormalizationError,
    SearchFailureError,
    banach_solve,
    build_gw,
    certify_origin,
    certify_schlicht,
    origin_estimate,
    optimize_origin,
    quartic,
    search_center,
    verify_schlicht_disk,
)
from blochcert.series import Poly, eval_poly, taylor_shift

from conftest import random_normalized


def roots_of(p, w):
    """All roots of p(z) - w via numpy's companion-matrix solver."""
    q = taylor_shift(p, 0)
    c = q.coeffs.copy()
    c[0] -= w
    return np.roots(c[::-1])


def test_gw_identity_is_constant():
    g = build_gw(Poly.from_real([0, 1]), 0.3, 0.1 + 0.2j)
    assert g(0.9) == pytest.approx(0.1 + 0.2j)
    assert g(-0.4j) == pytest.approx(0.1 + 0.2j)


def test_gw_fixes_center_at_image_center(quartic_minus):
    b = -0.07
    g = build_gw(quartic_minus, b, eval_poly(quartic_minus, b))
    assert g(b) == pytest.approx(b, abs=1e-15)


def test_gw_fixed_point_solves_equation(quartic_plus, rng):
    b = -0.07
    cert = certify_schlicht(quartic_plus, b, 0.59)
    for _ in range(20):
        w = cert.image_center + 0.43 * math.sqrt(rng.uniform()) * np.exp(2j * np.pi * rng.uniform())
        g = build_gw(quartic_plus, b, w)
        z = banach_solve(g, b, b, 0.59)
        assert abs(eval_poly(quartic_plus, z) - w) < 1e-10
        inside = [r for r in roots_of(quartic_plus, w) if abs(r - b) <= 0.59]
        assert len(inside) == 1
        assert abs(inside[0] - z) < 1e-9


def test_gw_degenerate_center():
    with pytest.raises(DegenerateCenterError):
        build_gw(Poly.from_real([0, 0, 1]), 0.0, 0.1)


def test_certify_reference_point(quartic_plus):
    cert = certify_schlicht(quartic_plus, -0.07, 0.59)
    assert cert.schlicht_radius == pytest.approx(0.43806, abs=5e-4)
    assert cert.kind is CertificateKind.EARLE_HAMILTON
    assert cert.inside_unit_disk


def test_certify_minus_sign_twin(quartic_minus):
    # the sign-flipped quartic certifies less at the same point
    cert = certify_schlicht(quartic_minus, -0.07, 0.59)
    assert cert.schlicht_radius == pytest.approx(0.434167, abs=1e-5)


def test_certify_identity(identity_poly):
    cert = certify_schlicht(identity_poly, 0, 0.9)
    assert cert.schlicht_radius == pytest.approx(0.9)
    assert cert.contraction_factor == 0


@pytest.mark.parametrize("b", [-0.8, -0.3, 0.0, 0.25j, 0.6 + 0.1j])
def test_identity_invariance(identity_poly, b):
    assert certify_schlicht(identity_poly, b, 0.37).schlicht_radius == pytest.approx(0.37, abs=1e-15)


def test_banach_upgrade():
    p = Poly.from_real([0, 1, 0.1])
    cert = certify_schlicht(p, 0, 0.5, banach=True)
    assert cert.kind is CertificateKind.BANACH
    assert cert.contraction_factor == pytest.approx(0.1)
    assert cert.sigma == pytest.approx(0.9)


def test_banach_upgrade_refused_when_not_contracting(quartic_minus):
    cert = certify_schlicht(quartic_minus, -0.07, 0.62, banach=True)
    assert cert.contraction_factor >= 1
    assert cert.kind is CertificateKind.EARLE_HAMILTON


def test_banach_kind_requires_factor_below_one():
    with pytest.raises(ValueError):
        CertificationResult(0j, 0.5, 0j, 0.1, CertificateKind.BANACH, 1.0, True)


def test_certify_origin_values(quartic_minus, quartic_plus):
    assert certify_origin(quartic_minus, 0.534759).schlicht_radius == pytest.approx(0.38832, abs=1e-5)
    assert origin_estimate(quartic_plus, 0.534759) == origin_estimate(quartic_minus, 0.534759)
    assert certify_origin(Poly.from_real([0, 1]), 0.42).schlicht_radius == pytest.approx(0.42)


def test_certify_origin_sweep(quartic_minus):
    rhos = np.arange(0.1, 0.9 + 1e-12, 1e-4)
    vals = [origin_estimate(quartic_minus, r) for r in rhos]
    assert rhos[int(np.argmax(vals))] == pytest.approx(0.534759, abs=1e-3)
    rho, val = optimize_origin(quartic_minus)
    assert rho == pytest.approx(0.534759, abs=1e-3)
    assert val == pytest.approx(0.38832, abs=1e-4)


def test_certify_origin_requires_normalization():
    with pytest.raises(NormalizationError):
        certify_origin(Poly.from_real([0, 2, 1]), 0.3)
    with pytest.raises(NormalizationError):
        certify_origin(Poly.from_real([0.1, 1, 1]), 0.3)


def test_origin_never_beats_recentered_at_zero(rng):
    for _ in range(20):
        p = random_normalized(rng, int(rng.integers(2, 7)))
        rho = rng.uniform(0.1, 0.9)
        assert certify_origin(p, rho).schlicht_radius <= certify_schlicht(p, 0, rho).schlicht_radius + 1e-9


def test_banach_solve_constant_map():
    z, n = banach_solve(lambda z: 0.2 + 0.1j, 0j, 0j, 0.5, full_output=True)
    assert z == 0.2 + 0.1j
    assert n == 1


def test_banach_solve_escape_and_nonconvergence():
    with pytest.raises(DomainEscapeError):
        banach_solve(lambda z: 2 * z + 0.1, 0j, 0j, 1.0)
    with pytest.raises(NonConvergenceError):
        banach_solve(lambda z: -z + 0.1, 0j, 0j, 1.0, max_iter=50)


def test_banach_solve_matches_roots(quartic_plus):
    b, rho = -0.07, 0.59
    cert = certify_schlicht(quartic_plus, b, rho)
    w = cert.image_center + 0.4
    z = banach_solve(build_gw(quartic_plus, b, w), b, b, rho)
    assert abs(eval_poly(quartic_plus, z) - w) <= 1e-10
    inside = [r for r in roots_of(quartic_plus, w) if abs(r - b) <= rho]
    assert len(inside) == 1 and abs(inside[0] - z) < 1e-9


def test_a_priori_iteration_count():
    p = Poly.from_real([0, 1, 0.2, 0.1])
    b, rho = 0.0, 0.5
    cert = certify_schlicht(p, b, rho, banach=True)
    L = cert.contraction_factor
    assert L < 1
    tol = 1e-12
    bound = math.log(tol * (1 - L) / rho) / math.log(L) + 1
    for w in cert.image_center + cert.schlicht_radius * 0.99 * np.exp(2j * np.pi * np.arange(8) / 8):
        _, n = banach_solve(build_gw(p, b, w), b, b, rho, tol=tol, full_output=True)
        assert n <= bound


def test_geometric_convergence_ratio():
    p = Poly.from_real([0, 1, 0.3, -0.2])
    b, rho = 0.0, 0.5
    cert = certify_schlicht(p, b, rho, banach=True)
    w = cert.image_center + 0.7 * cert.schlicht_radius * (0.6 + 0.8j)
    g = build_gw(p, b, w)
    zstar = banach_solve(g, b, b, rho, tol=1e-15)
    z, errs = b, []
    for _ in range(12):
        errs.append(abs(z - zstar))
        z = g(z)
    ratios = [e1 / e0 for e0, e1 in zip(errs, errs[1:]) if e0 > 1e-13]
    assert max(ratios) <= cert.contraction_factor + 0.05


def test_verify_identity(identity_poly):
    cert = certify_schlicht(identity_poly, 0, 0.9)
    rep = verify_schlicht_disk(identity_poly, cert, 500)
    assert rep.passed and rep.n_pass == 500
    assert rep.worst_residual <= 1e-15


def test_verify_reference_certificate(quartic_plus):
    cert = certify_schlicht(quartic_plus, -0.07, 0.59)
    rep = verify_schlicht_disk(quartic_plus, cert, 10_000)
    assert rep.passed, rep
    assert rep.worst_residual <= 1e-9


def test_verify_inflated_certificate_fails(quartic_plus, identity_poly):
    cert = certify_schlicht(quartic_plus, -0.07, 0.59).inflated(1.25)
    rep = verify_schlicht_disk(quartic_plus, cert, 10_000)
    assert rep.n_fail > 0 and not rep.passed
    rep = verify_schlicht_disk(identity_poly, certify_schlicht(identity_poly, 0, 0.9).inflated(1.25), 1000)
    assert rep.n_escaped > 0


def test_verify_report_json(identity_poly):
    rep = verify_schlicht_disk(identity_poly, certify_schlicht(identity_poly, 0, 0.5), 10)
    d = json.loads(json.dumps(rep.to_json()))
    assert d["passed"] is True and d["n_samples"] == 10


def test_certificate_json_round_trip(quartic_plus):
    cert = certify_schlicht(quartic_plus, -0.07, 0.59)
    assert CertificationResult.from_json(json.loads(json.dumps(cert.to_json()))) == cert


def test_search_quartic(quartic_plus):
    cert = search_center(quartic_plus)
    assert cert.schlicht_radius >= 0.438
    assert cert.center_b.imag == 0


def test_search_is_deterministic():
    p = quartic(4.2)
    a = search_center(p, grid=(21, 21))
    b = search_center(p, grid=(21, 21))
    assert a == b


def test_search_identity_monotone(identity_poly):
    r1 = search_center(identity_poly, rho_range=(0.3, 0.6), grid=(5, 5)).schlicht_radius
    r2 = search_center(identity_poly, rho_range=(0.3, 0.9), grid=(5, 5)).schlicht_radius
    assert r2 > r1
    # every center ties for p = z; the smallest b wins
    assert search_center(identity_poly, grid=(5, 5)).center_b == -0.3


def test_search_failure():
    with pytest.raises(NormalizationError):
        search_center(Poly.from_real([0, 0, 1]))
    # normalised but degenerate at the only grid center
    p = Poly.from_real([0, 1, -2.5])  # p'(0.2) = 0
    with pytest.raises(SearchFailureError):
        search_center(p, b_range=(0.2, 0.2), rho_range=(0.5, 0.5), grid=(1, 1))
