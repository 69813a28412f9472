"""Closed-form lower bounds for Bloch-type constants and their optimisers.

Notation: gamma > 1 controls the radius |beta_gamma| defined by
|beta| * prod_{j>=1} (1 + gamma**-j) = 1, and sigma in (0, 1) is the
contraction slack (Lipschitz constant 1 - sigma).
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass
from typing import Callable

import numpy as np

GAMMA_BOX = (1.0 + 1e-6, 50.0)
SIGMA_BOX = (1e-6, 1.0 - 1e-6)
COARSE_GRID = 201
REFINE_ROUNDS = 3
EH_GRID = 401

Box = tuple[tuple[float, float], tuple[float, float]]


@dataclass(frozen=True)
class BoundParams:
    gamma: float
    sigma: float
    value: float

    def to_json(self) -> dict:
        return asdict(self)


@dataclass(frozen=True)
class EHParams:
    rho: float
    r: float
    a2: float
    a3: float
    value: float

    def to_json(self) -> dict:
        return asdict(self)


def _check_gamma(gamma) -> None:
    if np.any(np.asarray(gamma) <= 1):
        raise ValueError("gamma must exceed 1")


def _check_sigma(sigma) -> None:
    s = np.asarray(sigma)
    if np.any(s <= 0) or np.any(s >= 1):
        raise ValueError("sigma must lie in (0, 1)")


def beta_lower_E(gamma):
    """Lower bound exp(-1/(g-1) + 1/(2(g^2-1)) - 1/(3(g^3-1))) for |beta_gamma|."""
    _check_gamma(gamma)
    g = np.asarray(gamma, dtype=float)
    with np.errstate(over="ignore", under="ignore"):
        out = np.exp(-1.0 / (g - 1.0) + 0.5 / (g**2 - 1.0) - 1.0 / (3.0 * (g**3 - 1.0)))
    return float(out) if out.ndim == 0 else out


def _log_product(gamma: float, tol: float, max_terms: int) -> tuple[float, int]:
    q = 1.0 / gamma
    t = q
    total = 0.0
    n = 0
    while t >= tol:
        total += math.log1p(t)
        t *= q
        n += 1
        if n > max_terms:
            raise ValueError(f"gamma={gamma} too close to 1 for truncation at tol={tol}")
    return total, n


def product_radius(gamma: float, tol: float = 1e-16, max_terms: int = 10_000_000) -> float:
    """1 / prod_{j>=1}(1 + gamma**-j), truncated once gamma**-j < tol.

    See :func:`product_remainder_bound` for the size of the neglected tail.
    """
    _check_gamma(gamma)
    log_prod, _ = _log_product(gamma, tol, max_terms)
    return math.exp(-log_prod)


def product_remainder_bound(gamma: float, tol: float = 1e-16, max_terms: int = 10_000_000) -> float:
    """Bound gamma**-J / (gamma - 1) on the log of the omitted factors, J terms kept."""
    _check_gamma(gamma)
    _, J = _log_product(gamma, tol, max_terms)
    return gamma ** (-J) / (gamma - 1.0)


def bloch_bound_v1(gamma, sigma):
    """((1+s)/2) (1-s)/(1-s+g) (1/g) E(g), the bound with M(beta_gamma) >= 1."""
    _check_gamma(gamma)
    _check_sigma(sigma)
    out = np.asarray(bloch_bound_v2(gamma, sigma)) / np.asarray(gamma, dtype=float)
    return float(out) if out.ndim == 0 else out


def bloch_bound_v2(gamma, sigma):
    """((1+s)/2) (1-s)/(1-s+g) E(g)."""
    _check_gamma(gamma)
    _check_sigma(sigma)
    g = np.asarray(gamma, dtype=float)
    s = np.asarray(sigma, dtype=float)
    out = 0.5 * (1.0 + s) * (1.0 - s) / (1.0 - s + g) * beta_lower_E(g)
    return float(out) if np.ndim(out) == 0 else out


def _grid(lo: float, hi: float, n: int) -> np.ndarray:
    return np.linspace(lo, hi, n)


def optimize_2d(
    f: Callable,
    box: Box = (GAMMA_BOX, SIGMA_BOX),
    coarse: int = COARSE_GRID,
    rounds: int = REFINE_ROUNDS,
) -> BoundParams:
    """Maximise a vectorised f(x, y) over a rectangle.

    A coarse ``coarse x coarse`` grid is followed by ``rounds`` local grids of
    21 x 21 points spanning one coarse cell either side of the incumbent,
    each shrinking the spacing 10x.  Ties resolve to the lexicographically
    smallest (x, y) because argmax returns the first hit in C order.
    """
    (x_lo, x_hi), (y_lo, y_hi) = box
    xs = _grid(x_lo, x_hi, coarse)
    ys = _grid(y_lo, y_hi, coarse)
    dx, dy = xs[1] - xs[0], ys[1] - ys[0]

    def best_on(xs, ys):
        vals = f(xs[:, None], ys[None, :])
        i, j = np.unravel_index(int(np.argmax(vals)), vals.shape)
        return float(xs[i]), float(ys[j]), float(vals[i, j])

    bx, by, bv = best_on(xs, ys)
    for _ in range(rounds):
        xs = np.unique(np.clip(_grid(bx - dx, bx + dx, 21), x_lo, x_hi))
        ys = np.unique(np.clip(_grid(by - dy, by + dy, 21), y_lo, y_hi))
        cx, cy, cv = best_on(xs, ys)
        if cv > bv:
            bx, by, bv = cx, cy, cv
        dx, dy = dx / 10.0, dy / 10.0
    return BoundParams(gamma=bx, sigma=by, value=bv)


def _eh_R(r):
    return (2.0 - r * r) / (1.0 - r * r) ** 2


def a3_cap(r: float, a2):
    """Largest admissible |a3| given r and |a2|."""
    if not 0 < r < 1:
        raise ValueError("r must lie in (0, 1)")
    a2 = np.asarray(a2, dtype=float)
    if np.any(a2 < 0) or np.any(a2 > 1):
        raise ValueError("a2 must lie in [0, 1]")
    out = np.sqrt(np.maximum(_eh_R(r) - a2**2 * r * r, 0.0)) / (r * r)
    return float(out) if out.ndim == 0 else out


def eh_penalty(rho, r: float, a2, a3):
    """Majorant of the nonlinear part on |z| = rho for the Earle-Hamilton bound.

    The coefficient tail uses |a_n| <= r**-(n-1) sqrt(R - a2^2 r^2 - a3^2 r^4),
    summed as a geometric series in rho/r.  The a3 term is squared.
    """
    rho = np.asarray(rho, dtype=float)
    if not 0 < r < 1 or np.any(rho <= 0) or np.any(rho >= r):
        raise ValueError("need 0 < rho < r < 1")
    a2 = np.asarray(a2, dtype=float)
    a3 = np.asarray(a3, dtype=float)
    radicand = np.maximum(_eh_R(r) - a2**2 * r**2 - a3**2 * r**4, 0.0)
    t = rho / r
    out = a2 / 3.0 * rho**3 + a3 / 4.0 * rho**4 + r * r / 5.0 * np.sqrt(radicand) * t**5 / (1.0 - t)
    return float(out) if out.ndim == 0 else out


def eh_bound(rho: float, r: float, grid: int = EH_GRID, rounds: int = REFINE_ROUNDS) -> EHParams:
    """rho minus the worst admissible penalty over (a2, a3)."""
    if not 0 < rho < r < 1:
        raise ValueError("need 0 < rho < r < 1")
    a3_top = a3_cap(r, 0.0)

    def best_on(a2s, a3s):
        A2, A3 = a2s[:, None], a3s[None, :]
        vals = np.where(A3 <= a3_cap(r, a2s)[:, None], eh_penalty(rho, r, A2, A3), -np.inf)
        i, j = np.unravel_index(int(np.argmax(vals)), vals.shape)
        return float(a2s[i]), float(a3s[j]), float(vals[i, j])

    a2s = np.linspace(0.0, 1.0, grid)
    a3s = np.linspace(0.0, a3_top, grid)
    d2, d3 = a2s[1] - a2s[0], a3s[1] - a3s[0]
    b2, b3, bv = best_on(a2s, a3s)
    for _ in range(rounds):
        a2s = np.unique(np.clip(np.linspace(b2 - d2, b2 + d2, 21), 0.0, 1.0))
        a3s = np.unique(np.clip(np.linspace(b3 - d3, b3 + d3, 21), 0.0, a3_top))
        c2, c3, cv = best_on(a2s, a3s)
        if cv > bv:
            b2, b3, bv = c2, c3, cv
        d2, d3 = d2 / 10.0, d3 / 10.0
    return EHParams(rho=float(rho), r=float(r), a2=b2, a3=b3, value=float(rho) - bv)


def _check_wu(m: int, K) -> None:
    if int(m) != m or m < 1:
        raise ValueError("m must be an integer >= 1")
    if np.any(np.asarray(K) < 1):
        raise ValueError("K must be >= 1")


def _wu_prefactor(m: int, sigma):
    s = np.asarray(sigma, dtype=float)
    return s * (1.0 - s) / ((2.0 - s) * 2.0**m)


def wu_bound(m: int, K: float, gamma, sigma):
    """s(1-s)/((2-s) 2^m) K^-(3m-1)/2 E(g)/g for normalised Wu K-mappings."""
    _check_wu(m, K)
    _check_gamma(gamma)
    _check_sigma(sigma)
    g = np.asarray(gamma, dtype=float)
    out = _wu_prefactor(m, sigma) * float(K) ** (-(3 * m - 1) / 2.0) * beta_lower_E(g) / g
    return float(out) if np.ndim(out) == 0 else out


def wu_branch_bounds(m: int, K: float, gamma: float, sigma: float, detF_at_beta: float) -> tuple[float, float]:
    """The two branch bounds, with |beta_gamma| replaced by E(gamma).

    Branch 1 wins exactly when detF_at_beta**(1/m) >= gamma K**((m-1)/2).
    Their geometric mean equals :func:`wu_bound`, so the better branch is
    never below it.
    """
    _check_wu(m, K)
    _check_gamma(gamma)
    _check_sigma(sigma)
    if detF_at_beta < 1:
        raise ValueError("detF_at_beta must be >= 1")
    pre = float(_wu_prefactor(m, sigma)) * beta_lower_E(gamma)
    d = detF_at_beta ** (1.0 / m)
    branch1 = pre / (K ** (2 * m - 1) * gamma) * d / gamma
    branch2 = pre / (K**m * d)
    return branch1, branch2
