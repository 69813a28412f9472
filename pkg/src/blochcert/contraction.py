"""Schlicht-disk certificates for concrete polynomials.

For a polynomial f expanded about b,

    f(z) = f(b) + f'(b)(z - b) + F2(z),

solving f(z) = w is the fixed-point problem z = g_w(z) with

    g_w(z) = b + (w - f(b) - F2(z)) / f'(b).

If |w - f(b)| < |f'(b)| rho - max_{|z-b|=rho} |F2|, g_w maps the closed disk
|z - b| <= rho strictly into itself, so (Earle-Hamilton) it has a unique
fixed point there and plain iteration converges to it.  If in addition
max |F2'| / |f'(b)| < 1 on that disk, g_w is a Banach contraction.
"""

from __future__ import annotations

import enum
import logging
import math
from dataclasses import asdict, dataclass
from typing import Callable

import numpy as np
from scipy.spatial import cKDTree

from .series import (
    Poly,
    as_scalar,
    derivative,
    eval_poly,
    golden_section_max,
    horner,
    max_modulus_circle,
    taylor_shift,
)

log = logging.getLogger(__name__)

DEGENERATE_DERIVATIVE = 1e-12
DEFAULT_TOL = 1e-12
DEFAULT_MAX_ITER = 100_000
ESCAPE_SLACK = 1e-9
RESIDUAL_LIMIT = 1e-9
INJECTIVITY_W_SEPARATION = 1e-6
INJECTIVITY_Z_SEPARATION = 1e-9
_GOLDEN_ANGLE = math.pi * (3.0 - math.sqrt(5.0))


class DegenerateCenterError(ValueError):
    """f'(b) vanishes (numerically) at the requested expansion center."""


class NormalizationError(ValueError):
    """Polynomial is not normalised as f(0) = 0, f'(0) = 1."""


class SearchFailureError(RuntimeError):
    """No grid cell produced a usable certificate."""


class NonConvergenceError(RuntimeError):
    """Fixed-point iteration hit max_iter without meeting the tolerance."""


class DomainEscapeError(RuntimeError):
    """An iterate left the disk the map was certified to preserve."""


class CertificateKind(str, enum.Enum):
    BANACH = "BanachContraction"
    EARLE_HAMILTON = "EarleHamiltonMapping"


@dataclass(frozen=True)
class CertificationResult:
    center_b: complex
    domain_radius_rho: float
    image_center: complex
    schlicht_radius: float
    kind: CertificateKind
    contraction_factor: float
    inside_unit_disk: bool
    max_modulus_method: str = "sampled"

    def __post_init__(self) -> None:
        if self.domain_radius_rho <= 0:
            raise ValueError("domain_radius_rho must be positive")
        if self.schlicht_radius < 0:
            raise ValueError("schlicht_radius must be non-negative")
        if self.kind is CertificateKind.BANACH and not self.contraction_factor < 1:
            raise ValueError("Banach certificate needs contraction_factor < 1")

    @property
    def sigma(self) -> float:
        return 1.0 - self.contraction_factor

    def inflated(self, factor: float) -> "CertificationResult":
        """Copy with the schlicht radius scaled; used for negative controls."""
        d = asdict(self)
        d["schlicht_radius"] = self.schlicht_radius * factor
        return CertificationResult(**d)

    def to_json(self) -> dict:
        return {
            "center_b": [self.center_b.real, self.center_b.imag],
            "domain_radius_rho": self.domain_radius_rho,
            "image_center": [self.image_center.real, self.image_center.imag],
            "schlicht_radius": self.schlicht_radius,
            "kind": self.kind.value,
            "contraction_factor": self.contraction_factor,
            "inside_unit_disk": self.inside_unit_disk,
            "max_modulus_method": self.max_modulus_method,
        }

    @classmethod
    def from_json(cls, obj: dict) -> "CertificationResult":
        return cls(
            center_b=complex(*obj["center_b"]),
            domain_radius_rho=float(obj["domain_radius_rho"]),
            image_center=complex(*obj["image_center"]),
            schlicht_radius=float(obj["schlicht_radius"]),
            kind=CertificateKind(obj["kind"]),
            contraction_factor=float(obj["contraction_factor"]),
            inside_unit_disk=bool(obj["inside_unit_disk"]),
            max_modulus_method=obj.get("max_modulus_method", "sampled"),
        )


def quartic(A: float, sign: int = 1) -> Poly:
    """z + sign*(z**3/3 + (A/4) z**4), the one-parameter quartic family.

    ``sign=+1`` is the expansion whose recentered certificate at
    b = -0.07, rho = 0.59 is 0.43806 for A = 4.66922; ``sign=-1`` is its
    sign-flipped twin z - z**3/3 - (A/4) z**4.  Both have the same origin
    estimate r - r**3/3 - (A/4) r**4.
    """
    return Poly.from_real([0.0, 1.0, 0.0, sign / 3.0, sign * A / 4.0])


def _expand(p: Poly, b: complex) -> tuple[Poly, complex, complex]:
    q = taylor_shift(p, b)
    coeffs = np.zeros(max(q.coeffs.size, 2), dtype=complex)
    coeffs[: q.coeffs.size] = q.coeffs
    fb, fpb = complex(coeffs[0]), complex(coeffs[1])
    if abs(fpb) < DEGENERATE_DERIVATIVE:
        raise DegenerateCenterError(f"f'(b) = {fpb} is numerically zero at b = {b}")
    coeffs[:2] = 0
    return Poly(coeffs, b), fb, fpb


def build_gw(p: Poly, b: complex, w) -> Callable:
    """Return the fixed-point map g_w whose fixed points solve p(z) = w.

    ``w`` may be an ndarray; the returned map then acts elementwise on
    arrays of the same shape.
    """
    b = as_scalar(b)
    F2, fb, fpb = _expand(p, b)
    shift = (np.asarray(w, dtype=complex) - fb) / fpb + b
    if np.ndim(shift) == 0:
        shift = complex(shift)
    tail = F2.coeffs / fpb

    def g(z):
        out = shift - horner(tail, np.asarray(z, dtype=complex) - b)
        return complex(out) if out.ndim == 0 else out

    return g


def _schlicht_value(p: Poly, b: complex, rho: float) -> float:
    F2, _, fpb = _expand(p, b)
    return abs(fpb) * rho - max_modulus_circle(F2, b, rho)


def certify_schlicht(p: Poly, b: complex, rho: float, banach: bool = False) -> CertificationResult:
    """Certify the disk |w - p(b)| < schlicht_radius via the self-map bound.

    With ``banach=True`` the certificate is upgraded to a Banach contraction
    when max |F2'| / |f'(b)| < 1 on the circle; otherwise it stays
    Earle-Hamilton.
    """
    if not rho > 0:
        raise ValueError(f"rho must be positive, got {rho}")
    b = as_scalar(b)
    F2, fb, fpb = _expand(p, b)
    M = max_modulus_circle(F2, b, rho)
    factor = max_modulus_circle(derivative(F2), b, rho) / abs(fpb)
    kind = CertificateKind.EARLE_HAMILTON
    if banach:
        if factor < 1:
            kind = CertificateKind.BANACH
        else:
            log.info("contraction factor %.6g >= 1 at b=%s rho=%s; keeping EH kind", factor, b, rho)
    return CertificationResult(
        center_b=b,
        domain_radius_rho=float(rho),
        image_center=fb,
        schlicht_radius=max(0.0, abs(fpb) * rho - M),
        kind=kind,
        contraction_factor=factor,
        inside_unit_disk=abs(b) + rho <= 1.0,
    )


def _check_normalized(p: Poly, tol: float = 1e-12) -> Poly:
    q = taylor_shift(p, 0)
    c = np.zeros(max(q.coeffs.size, 2), dtype=complex)
    c[: q.coeffs.size] = q.coeffs
    if abs(c[0]) > tol or abs(c[1] - 1) > tol:
        raise NormalizationError(f"need p(0) = 0, p'(0) = 1; got {c[0]}, {c[1]}")
    return q


def origin_estimate(p: Poly, rho: float) -> float:
    """rho - sum_{k>=2} |a_k| rho**k; may be negative."""
    q = _check_normalized(p)
    k = np.arange(q.coeffs.size)
    tail = np.abs(q.coeffs) * float(rho) ** k
    return float(rho - tail[2:].sum())


def certify_origin(p: Poly, rho: float) -> CertificationResult:
    """Triangle-inequality certificate about the origin for a normalised p."""
    if not rho > 0:
        raise ValueError(f"rho must be positive, got {rho}")
    q = _check_normalized(p)
    k = np.arange(q.coeffs.size)
    absc = np.abs(q.coeffs)
    factor = float(np.sum((k * absc * float(rho) ** np.maximum(k - 1, 0))[2:]))
    return CertificationResult(
        center_b=0j,
        domain_radius_rho=float(rho),
        image_center=0j,
        schlicht_radius=max(0.0, origin_estimate(q, rho)),
        kind=CertificateKind.EARLE_HAMILTON,
        contraction_factor=factor,
        inside_unit_disk=rho <= 1.0,
        max_modulus_method="triangle",
    )


def optimize_origin(p: Poly, lo: float = 0.01, hi: float = 0.99, n: int = 981) -> tuple[float, float]:
    """Best radius for :func:`origin_estimate` on [lo, hi]: (rho, value)."""
    grid = np.linspace(lo, hi, n)
    vals = [origin_estimate(p, r) for r in grid]
    i = int(np.argmax(vals))
    step = grid[1] - grid[0]
    return golden_section_max(lambda r: origin_estimate(p, r), max(lo, grid[i] - step), min(hi, grid[i] + step), 1e-12)


def _iterate(g, z, center: complex, radius: float, tol: float, max_iter: int):
    """Vectorised fixed-point iteration.

    Returns (z, status, iterations) with status 0 = converged,
    1 = escaped the disk, 2 = hit max_iter.
    """
    z = np.array(z, dtype=complex).ravel()
    status = np.full(z.shape, 2, dtype=np.int8)
    iters = np.zeros(z.shape, dtype=np.int64)
    limit = radius * (1.0 + ESCAPE_SLACK)
    active = np.arange(z.size)
    escaped = np.abs(z - center) > limit
    status[escaped] = 1
    active = active[~escaped]
    for n in range(max_iter + 1):
        if active.size == 0:
            break
        za = z[active]
        gz = g(za, active)
        done = np.abs(gz - za) <= tol
        status[active[done]] = 0
        iters[active[done]] = n
        if n == max_iter:
            iters[active[~done]] = n
            break
        keep = active[~done]
        z[keep] = gz[~done]
        out = np.abs(z[keep] - center) > limit
        status[keep[out]] = 1
        iters[keep[out]] = n + 1
        active = keep[~out]
    return z, status, iters


def banach_solve(
    g: Callable,
    start: complex,
    domain_center: complex,
    domain_radius: float,
    tol: float = DEFAULT_TOL,
    max_iter: int = DEFAULT_MAX_ITER,
    full_output: bool = False,
):
    """Iterate z <- g(z) from ``start`` until |g(z) - z| <= tol.

    Raises DomainEscapeError if an iterate leaves the closed disk (with a
    relative slack of 1e-9) and NonConvergenceError after ``max_iter``
    steps.  With ``full_output`` returns (z, n_iterations).
    """
    if not tol > 0:
        raise ValueError("tol must be positive")
    z, status, iters = _iterate(
        lambda za, _idx: np.array([g(complex(za[0]))], dtype=complex),
        [as_scalar(start)], as_scalar(domain_center), domain_radius, tol, max_iter,
    )
    if status[0] == 1:
        raise DomainEscapeError(f"iterate left |z - {domain_center}| <= {domain_radius} after {iters[0]} steps")
    if status[0] == 2:
        raise NonConvergenceError(f"no convergence to tol={tol} in {max_iter} iterations")
    return (complex(z[0]), int(iters[0])) if full_output else complex(z[0])


@dataclass
class VerifyReport:
    n_samples: int
    n_pass: int
    n_fail: int
    n_escaped: int
    n_nonconverged: int
    n_residual_fail: int
    n_injectivity_collisions: int
    worst_residual: float
    max_iterations: int

    @property
    def passed(self) -> bool:
        return self.n_fail == 0 and self.n_injectivity_collisions == 0

    def to_json(self) -> dict:
        d = asdict(self)
        d["passed"] = self.passed
        if not math.isfinite(d["worst_residual"]):
            d["worst_residual"] = None
        return d


def disk_samples(center: complex, radius: float, n: int) -> np.ndarray:
    """Deterministic sunflower points strictly inside the open disk."""
    k = np.arange(n)
    r = radius * np.sqrt((k + 0.5) / n)
    return center + r * np.exp(1j * _GOLDEN_ANGLE * k)


def verify_schlicht_disk(
    p: Poly,
    cert: CertificationResult,
    n_samples: int = 10_000,
    tol: float = DEFAULT_TOL,
    max_iter: int = DEFAULT_MAX_ITER,
) -> VerifyReport:
    """Solve p(z) = w for sampled w in the certified image disk and audit the results."""
    b = cert.center_b
    w = disk_samples(cert.image_center, cert.schlicht_radius, n_samples)
    F2, fb, fpb = _expand(p, b)
    shift = (w - fb) / fpb + b
    tail = F2.coeffs / fpb

    def g(za, idx):
        return shift[idx] - horner(tail, za - b)

    z, status, iters = _iterate(g, np.full(n_samples, b), b, cert.domain_radius_rho, tol, max_iter)
    resid = np.abs(eval_poly(p, z) - w)
    converged = status == 0
    resid_bad = converged & ~(resid <= RESIDUAL_LIMIT)
    ok = converged & ~resid_bad

    collisions = 0
    zz = z[ok]
    ww = w[ok]
    if zz.size > 1:
        tree = cKDTree(np.column_stack([zz.real, zz.imag]))
        for i, j in tree.query_pairs(INJECTIVITY_Z_SEPARATION):
            if abs(ww[i] - ww[j]) >= INJECTIVITY_W_SEPARATION:
                collisions += 1

    return VerifyReport(
        n_samples=n_samples,
        n_pass=int(ok.sum()),
        n_fail=int(n_samples - ok.sum()),
        n_escaped=int((status == 1).sum()),
        n_nonconverged=int((status == 2).sum()),
        n_residual_fail=int(resid_bad.sum()),
        n_injectivity_collisions=collisions,
        worst_residual=float(resid[converged].max()) if converged.any() else math.inf,
        max_iterations=int(iters.max()) if n_samples else 0,
    )


def search_center(
    p: Poly,
    b_range: tuple[float, float] = (-0.3, 0.3),
    rho_range: tuple[float, float] = (0.3, 0.9),
    grid: tuple[int, int] = (61, 61),
    banach: bool = False,
) -> CertificationResult:
    """Grid search over real centers b and radii rho, then one 10x refinement.

    Ties go to the smallest b, then the smallest rho.
    """
    _check_normalized(p)
    (b_lo, b_hi), (r_lo, r_hi) = b_range, rho_range
    if not (-1 < b_lo <= b_hi < 1 and 0 < r_lo <= r_hi < 2):
        raise ValueError("need b_range inside (-1, 1) and rho_range inside (0, 2)")
    nb, nr = grid
    bs = np.linspace(b_lo, b_hi, nb)
    rs = np.linspace(r_lo, r_hi, nr)

    def scan(bvals, rvals, best):
        for bv in bvals:
            for rv in rvals:
                try:
                    val = _schlicht_value(p, float(bv), float(rv))
                except DegenerateCenterError:
                    continue
                if best is None or val > best[0] or (val == best[0] and (bv, rv) < best[1:]):
                    best = (val, float(bv), float(rv))
        return best

    best = scan(bs, rs, None)
    if best is None:
        raise SearchFailureError("every grid center is degenerate")
    db = (bs[1] - bs[0]) if nb > 1 else 0.0
    dr = (rs[1] - rs[0]) if nr > 1 else 0.0
    _, b0, r0 = best
    fine_b = np.clip(np.linspace(b0 - db, b0 + db, 21), b_lo, b_hi)
    fine_r = np.clip(np.linspace(r0 - dr, r0 + dr, 21), r_lo, r_hi)
    best = scan(np.unique(fine_b), np.unique(fine_r), best)
    return certify_schlicht(p, best[1], best[2], banach=banach)
