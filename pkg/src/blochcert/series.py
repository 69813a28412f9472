"""Complex polynomial arithmetic: evaluation, recentering, max-modulus estimates.

A :class:`Poly` stores Taylor coefficients about an explicit center, so
``coeffs[k] = p^(k)(center) / k!``.  Scalars are plain Python ``complex``.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass
from typing import Any

import numpy as np

# Angular sampling density for max_modulus_circle before golden-section refinement.
MAX_MODULUS_SAMPLES = 4096
_GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0


def as_scalar(z: Any) -> complex:
    """Coerce ``z`` to a finite ``complex``; raise ValueError on NaN/Inf."""
    z = complex(z)
    if not cmath.isfinite(z):
        raise ValueError(f"non-finite complex scalar: {z!r}")
    return z


@dataclass(frozen=True)
class Poly:
    """Univariate complex polynomial expanded about ``center``."""

    coeffs: np.ndarray
    center: complex = 0j

    def __post_init__(self) -> None:
        c = np.atleast_1d(np.asarray(self.coeffs, dtype=complex)).copy()
        if c.ndim != 1 or c.size == 0:
            raise ValueError("coeffs must be a non-empty 1-d sequence")
        if not np.all(np.isfinite(c)):
            raise ValueError("coeffs must be finite")
        nz = np.flatnonzero(c)
        c = c[: nz[-1] + 1] if nz.size else c[:1]
        c.setflags(write=False)
        object.__setattr__(self, "coeffs", c)
        object.__setattr__(self, "center", as_scalar(self.center))

    @property
    def degree(self) -> int:
        return self.coeffs.size - 1

    def is_zero(self) -> bool:
        return self.degree == 0 and self.coeffs[0] == 0

    def __call__(self, z):
        return eval_poly(self, z)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Poly):
            return NotImplemented
        return self.center == other.center and np.array_equal(self.coeffs, other.coeffs)

    def __hash__(self) -> int:
        return hash((self.center, self.coeffs.tobytes()))

    @classmethod
    def from_real(cls, coeffs, center: complex = 0j) -> "Poly":
        return cls(np.asarray(coeffs, dtype=float), center)

    def to_json(self) -> dict:
        return {
            "center": [self.center.real, self.center.imag],
            "coeffs": [[c.real, c.imag] for c in self.coeffs.tolist()],
        }

    @classmethod
    def from_json(cls, obj: dict) -> "Poly":
        try:
            center = complex(*obj.get("center", [0.0, 0.0]))
            coeffs = [complex(re, im) for re, im in obj["coeffs"]]
        except (KeyError, TypeError, ValueError) as exc:
            raise ValueError(f"malformed polynomial literal: {exc}") from exc
        return cls(np.array(coeffs, dtype=complex), center)


def horner(coeffs: np.ndarray, u):
    """Evaluate sum(coeffs[k] * u**k) by nested multiplication."""
    acc = np.full(np.shape(u), coeffs[-1], dtype=complex)
    for c in coeffs[-2::-1]:
        acc = acc * u + c
    return acc


def eval_poly(p: Poly, z):
    """Evaluate ``p`` at ``z`` (scalar or ndarray)."""
    scalar = np.isscalar(z)
    acc = horner(p.coeffs, np.asarray(z, dtype=complex) - p.center)
    return complex(acc) if scalar else acc


def derivative(p: Poly) -> Poly:
    if p.degree == 0:
        return Poly(np.zeros(1, dtype=complex), p.center)
    k = np.arange(1, p.coeffs.size)
    return Poly(p.coeffs[1:] * k, p.center)


def taylor_shift(p: Poly, b: complex) -> Poly:
    """Re-expand ``p`` about ``b`` by repeated synthetic division."""
    b = as_scalar(b)
    d = b - p.center
    a = p.coeffs.copy()
    n = a.size
    for i in range(n - 1):
        for j in range(n - 2, i - 1, -1):
            a[j] += d * a[j + 1]
    return Poly(a, b)


def remainder_part(p: Poly, order: int = 2) -> Poly:
    """Drop the Taylor terms of degree < ``order`` (about ``p.center``)."""
    c = p.coeffs.copy()
    c[:order] = 0
    return Poly(c, p.center)


def triangle_bound(p: Poly, c: complex, rho: float) -> float:
    """Sum of |coefficient| * rho**k after recentering at ``c``."""
    q = taylor_shift(p, c)
    return float(np.sum(np.abs(q.coeffs) * rho ** np.arange(q.coeffs.size)))


def golden_section_max(f, lo: float, hi: float, tol: float = 1e-13) -> tuple[float, float]:
    """Maximise a unimodal ``f`` on [lo, hi]; returns (argmax, max)."""
    x1 = hi - _GOLDEN * (hi - lo)
    x2 = lo + _GOLDEN * (hi - lo)
    f1, f2 = f(x1), f(x2)
    while hi - lo > tol:
        if f1 >= f2:
            hi, x2, f2 = x2, x1, f1
            x1 = hi - _GOLDEN * (hi - lo)
            f1 = f(x1)
        else:
            lo, x1, f1 = x1, x2, f2
            x2 = lo + _GOLDEN * (hi - lo)
            f2 = f(x2)
    return (x1, f1) if f1 >= f2 else (x2, f2)


def max_modulus_circle(p: Poly, c: complex, rho: float, n_samples: int = MAX_MODULUS_SAMPLES) -> float:
    """Estimate max |p(z)| over the circle |z - c| = rho.

    The modulus is sampled at ``n_samples`` equispaced angles; the two arcs
    adjacent to the best sample are then refined by golden-section search.
    This is an estimate, not an enclosure.  The result is clipped to the
    triangle bound of the recentered coefficients.
    """
    if not rho > 0:
        raise ValueError(f"rho must be positive, got {rho}")
    c = as_scalar(c)
    q = taylor_shift(p, c)
    if q.is_zero():
        return 0.0
    coeffs = q.coeffs[::-1].tolist()

    def modulus(theta: float) -> float:
        u = rho * cmath.exp(1j * theta)
        acc = 0j
        for a in coeffs:
            acc = acc * u + a
        return abs(acc)

    step = 2.0 * math.pi / n_samples
    theta = np.arange(n_samples) * step
    vals = np.abs(horner(q.coeffs, rho * np.exp(1j * theta)))
    i = int(np.argmax(vals))
    best = float(vals[i])
    t0 = float(theta[i])
    for lo, hi in ((t0 - step, t0), (t0, t0 + step)):
        _, fx = golden_section_max(modulus, lo, hi)
        best = max(best, fx)
    tri = float(np.sum(np.abs(q.coeffs) * rho ** np.arange(q.coeffs.size)))
    return min(best, tri)


def cauchy_derivative_bound(M: float, d: float, k: int) -> float:
    """Cauchy estimate M (k-1)! / d**(k-1) for |f^(k)| when |f'| <= M on a circle of radius d."""
    if not d > 0:
        raise ValueError(f"d must be positive, got {d}")
    if M < 0 or k < 1:
        raise ValueError("need M >= 0 and k >= 1")
    return M * math.factorial(k - 1) / d ** (k - 1)
