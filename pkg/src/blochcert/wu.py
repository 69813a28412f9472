"""Polynomial maps C^m -> C^m: Jacobian singular values, Wu constants and
fixed-point certificates for schlicht balls.

Norms on C^m are Euclidean unless stated otherwise.  Desk scale only:
m <= 4 and modest degrees.
"""

from __future__ import annotations

import functools
import itertools
import math
from dataclasses import asdict, dataclass
from typing import Callable

import numpy as np
from scipy.spatial import cKDTree
from scipy.special import comb, ndtri
from scipy.stats import qmc

from .bounds import optimize_2d, wu_bound
from .contraction import (
    DEFAULT_MAX_ITER,
    DEFAULT_TOL,
    ESCAPE_SLACK,
    INJECTIVITY_W_SEPARATION,
    INJECTIVITY_Z_SEPARATION,
    RESIDUAL_LIMIT,
    DegenerateCenterError,
    DomainEscapeError,
    NonConvergenceError,
)

MAX_DIM = 4
TORUS_ANGLES = 16
SINGULAR_TOL = 1e-12


@dataclass(frozen=True)
class PolyMap:
    """m polynomials in m variables, each a {multiindex: coefficient} dict."""

    dim_m: int
    components: tuple

    def __post_init__(self) -> None:
        m = self.dim_m
        if not 1 <= m <= MAX_DIM:
            raise ValueError(f"dimension must be in 1..{MAX_DIM}, got {m}")
        if len(self.components) != m:
            raise ValueError(f"expected {m} components, got {len(self.components)}")
        comps = []
        for terms in self.components:
            clean = {}
            for k, c in dict(terms).items():
                k = tuple(int(x) for x in k)
                if len(k) != m or min(k) < 0:
                    raise ValueError(f"bad multiindex {k} for m={m}")
                c = complex(c)
                if not np.isfinite(c):
                    raise ValueError("coefficients must be finite")
                if c != 0:
                    clean[k] = clean.get(k, 0j) + c
            comps.append(clean)
        object.__setattr__(self, "components", tuple(comps))

    def __hash__(self) -> int:
        return hash((self.dim_m, tuple(frozenset(c.items()) for c in self.components)))

    @classmethod
    def identity(cls, m: int) -> "PolyMap":
        return cls(m, tuple({tuple(int(i == j) for i in range(m)): 1.0} for j in range(m)))

    @property
    def degree(self) -> int:
        return max((sum(k) for comp in self.components for k in comp), default=0)

    def to_json(self) -> dict:
        return {
            "m": self.dim_m,
            "components": [
                {"terms": [{"k": list(k), "c": [c.real, c.imag]} for k, c in sorted(comp.items())]}
                for comp in self.components
            ],
        }

    @classmethod
    def from_json(cls, obj: dict) -> "PolyMap":
        try:
            m = int(obj["m"])
            comps = tuple(
                {tuple(t["k"]): complex(*t["c"]) for t in comp["terms"]} for comp in obj["components"]
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise ValueError(f"malformed polynomial map: {exc}") from exc
        return cls(m, comps)


def _arrays(terms: dict, m: int) -> tuple[np.ndarray, np.ndarray]:
    if not terms:
        return np.zeros((1, m), dtype=int), np.zeros(1, dtype=complex)
    ks = sorted(terms)
    return np.array(ks, dtype=int), np.array([terms[k] for k in ks], dtype=complex)


def _eval_terms(exps: np.ndarray, coeffs: np.ndarray, Z: np.ndarray) -> np.ndarray:
    # Z: (N, m) -> (N,)
    mono = np.prod(Z[:, None, :] ** exps[None, :, :], axis=2)
    return mono @ coeffs


def _partial(terms: dict, j: int) -> dict:
    out = {}
    for k, c in terms.items():
        if k[j] > 0:
            kk = list(k)
            kk[j] -= 1
            out[tuple(kk)] = out.get(tuple(kk), 0j) + c * k[j]
    return out


@functools.lru_cache(maxsize=64)
def _compiled(F: PolyMap):
    m = F.dim_m
    vals = [_arrays(c, m) for c in F.components]
    jac = [[_arrays(_partial(c, j), m) for j in range(m)] for c in F.components]
    return vals, jac


def _as_points(z, m: int) -> tuple[np.ndarray, bool]:
    Z = np.asarray(z, dtype=complex)
    single = Z.ndim == 1
    Z = np.atleast_2d(Z)
    if Z.shape[-1] != m:
        raise ValueError(f"expected points in C^{m}")
    return Z, single


def eval_map(F: PolyMap, z) -> np.ndarray:
    """F(z) for a point (shape (m,)) or a batch (shape (N, m))."""
    Z, single = _as_points(z, F.dim_m)
    vals, _ = _compiled(F)
    out = np.stack([_eval_terms(e, c, Z) for e, c in vals], axis=-1)
    return out[0] if single else out


def jacobian(F: PolyMap, z) -> np.ndarray:
    """Analytic Jacobian, shape (m, m) or (N, m, m); rows index components."""
    Z, single = _as_points(z, F.dim_m)
    _, jac = _compiled(F)
    J = np.stack([np.stack([_eval_terms(e, c, Z) for e, c in row], axis=-1) for row in jac], axis=-2)
    return J[0] if single else J


@dataclass(frozen=True)
class JacobianStats:
    at_point: tuple
    lambda_min: float
    lambda_max: float
    det_modulus: float
    wu_ratio: float

    @property
    def degenerate(self) -> bool:
        return not math.isfinite(self.wu_ratio)

    def to_json(self) -> dict:
        return {
            "at_point": [[z.real, z.imag] for z in self.at_point],
            "lambda_min": self.lambda_min,
            "lambda_max": self.lambda_max,
            "det_modulus": self.det_modulus,
            "wu_ratio": self.wu_ratio if math.isfinite(self.wu_ratio) else "inf",
            "degenerate": self.degenerate,
        }


def _stats_arrays(J: np.ndarray):
    m = J.shape[-1]
    s = np.linalg.svd(J, compute_uv=False)
    det = np.abs(np.linalg.det(J))
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = np.where(det > 0, s[..., 0] / det ** (1.0 / m), np.inf)
    return s[..., -1], s[..., 0], det, ratio


def jacobian_stats(F: PolyMap, z) -> JacobianStats:
    z = np.asarray(z, dtype=complex)
    lam, Lam, det, ratio = _stats_arrays(jacobian(F, z))
    return JacobianStats(tuple(complex(x) for x in z), float(lam), float(Lam), float(det), float(ratio))


def check_small_eigen(F: PolyMap, z, K: float) -> bool:
    """lambda_min(F'(z)) >= K**-(m-1) |det F'(z)|**(1/m), up to 1e-10."""
    st = jacobian_stats(F, z)
    m = F.dim_m
    return st.lambda_min >= K ** (-(m - 1)) * st.det_modulus ** (1.0 / m) - 1e-10


def _polydisk_grid(m: int, radius: float, n_angles: int, n_radii: int = 4) -> np.ndarray:
    theta = 2 * np.pi * np.arange(n_angles) / n_angles
    radii = radius * np.arange(1, n_radii + 1) / n_radii
    axis = np.concatenate([[0j], (radii[:, None] * np.exp(1j * theta)[None, :]).ravel()])
    return np.array(list(itertools.product(axis, repeat=m)), dtype=complex)


@dataclass(frozen=True)
class WuKEstimate:
    K: float
    at_point: tuple
    n_points: int
    degenerate: bool
    method: str = "sampled lower bound for the true K"

    def to_json(self) -> dict:
        return {
            "K": self.K if math.isfinite(self.K) else "inf",
            "at_point": [[z.real, z.imag] for z in self.at_point],
            "n_points": self.n_points,
            "degenerate": self.degenerate,
            "method": self.method,
        }


def estimate_wu_K(F: PolyMap, polydisk_radius: float, grid_per_axis: int = TORUS_ANGLES) -> WuKEstimate:
    """Largest sampled ||F'|| / |det F'|^(1/m) over the closed polydisk.

    Each coordinate ranges over the center and ``grid_per_axis`` angles on
    four concentric circles, the outermost being the distinguished boundary.
    """
    if not polydisk_radius > 0:
        raise ValueError("polydisk_radius must be positive")
    Z = _polydisk_grid(F.dim_m, polydisk_radius, grid_per_axis)
    _, _, _, ratio = _stats_arrays(jacobian(F, Z))
    i = int(np.argmax(ratio))
    return WuKEstimate(
        K=float(ratio[i]),
        at_point=tuple(complex(x) for x in Z[i]),
        n_points=len(Z),
        degenerate=bool(np.isinf(ratio).any()),
    )


def taylor_shift_map(F: PolyMap, beta) -> PolyMap:
    """Coefficients of F about ``beta`` (a PolyMap in u = z - beta)."""
    beta = np.asarray(beta, dtype=complex)
    m = F.dim_m
    comps = []
    for terms in F.components:
        out: dict = {}
        for k, c in terms.items():
            per_axis = [
                [(l, comb(kj, l, exact=True) * beta[j] ** (kj - l)) for l in range(kj + 1)]
                for j, kj in enumerate(k)
            ]
            for combo in itertools.product(*per_axis):
                idx = tuple(l for l, _ in combo)
                out[idx] = out.get(idx, 0j) + c * math.prod(v for _, v in combo)
        comps.append(out)
    return PolyMap(m, tuple(comps))


def _nonlinear_part(G: PolyMap) -> PolyMap:
    return PolyMap(G.dim_m, tuple({k: c for k, c in comp.items() if sum(k) >= 2} for comp in G.components))


def _torus(m: int, radius: float, n_angles: int) -> np.ndarray:
    theta = 2 * np.pi * np.arange(n_angles) / n_angles
    ring = radius * np.exp(1j * theta)
    return np.array(list(itertools.product(ring, repeat=m)), dtype=complex)


@dataclass(frozen=True)
class MVCertificate:
    beta: tuple
    eta: float
    sigma: float
    image_center: tuple
    schlicht_radius: float
    contraction_factor: float
    mapping_margin: float
    lambda_min: float
    kind: str = "BanachContraction"
    diagnostic: str = ""

    def to_json(self) -> dict:
        return {
            "beta": [[z.real, z.imag] for z in self.beta],
            "eta": self.eta,
            "sigma": self.sigma,
            "image_center": [[z.real, z.imag] for z in self.image_center],
            "schlicht_radius": self.schlicht_radius,
            "contraction_factor": self.contraction_factor,
            "mapping_margin": self.mapping_margin,
            "lambda_min": self.lambda_min,
            "kind": self.kind,
            "diagnostic": self.diagnostic,
            "max_norm_method": "sampled torus",
        }


def _split(F: PolyMap, beta):
    beta = np.asarray(beta, dtype=complex)
    A = jacobian(F, beta)
    s = np.linalg.svd(A, compute_uv=False)
    if s[-1] < SINGULAR_TOL:
        raise DegenerateCenterError(f"Jacobian is singular at beta = {beta.tolist()}")
    N = _nonlinear_part(taylor_shift_map(F, beta))
    return beta, A, np.linalg.inv(A), float(s[-1]), N


def certify_schlicht_mv(
    F: PolyMap, beta, eta: float, sigma: float, n_angles: int = TORUS_ANGLES
) -> MVCertificate:
    """Certify the ball |w - F(beta)| < sigma * eta * lambda_min(F'(beta)).

    Uses the actual recentered nonlinear part N of F.  The contraction
    factor is max ||F'(beta)^-1 N'(u)|| over the sampled torus |u_j| = eta,
    which dominates the Euclidean ball of radius eta; the certificate is
    nonzero only when that factor is at most 1 - sigma.
    """
    if not eta > 0:
        raise ValueError("eta must be positive")
    if not 0 < sigma < 1:
        raise ValueError("sigma must lie in (0, 1)")
    beta, A, Ainv, lam, N = _split(F, beta)
    m = F.dim_m
    U = _torus(m, eta, n_angles)
    if N.degree >= 2:
        L = float(np.linalg.norm(Ainv[None] @ jacobian(N, U), ord=2, axis=(1, 2)).max())
        Nmax = float(np.linalg.norm(eval_map(N, U), axis=1).max())
    else:
        L, Nmax = 0.0, 0.0
    margin = eta - np.linalg.norm(Ainv, 2) * Nmax
    ok = L <= 1 - sigma
    return MVCertificate(
        beta=tuple(complex(x) for x in beta),
        eta=float(eta),
        sigma=float(sigma),
        image_center=tuple(complex(x) for x in eval_map(F, beta)),
        schlicht_radius=sigma * eta * lam if ok else 0.0,
        contraction_factor=L,
        mapping_margin=float(margin),
        lambda_min=lam,
        diagnostic="" if ok else f"contraction factor {L:.6g} exceeds 1 - sigma = {1 - sigma:.6g}",
    )


def _iterate_mv(g, Z, center, radius, tol, max_iter):
    Z = np.array(Z, dtype=complex)
    n = Z.shape[0]
    status = np.full(n, 2, dtype=np.int8)
    iters = np.zeros(n, dtype=np.int64)
    limit = radius * (1.0 + ESCAPE_SLACK)
    out = np.linalg.norm(Z - center, axis=1) > limit
    status[out] = 1
    active = np.flatnonzero(~out)
    for k in range(max_iter + 1):
        if active.size == 0:
            break
        za = Z[active]
        gz = g(za, active)
        done = np.linalg.norm(gz - za, axis=1) <= tol
        status[active[done]] = 0
        iters[active[done]] = k
        if k == max_iter:
            iters[active[~done]] = k
            break
        keep = active[~done]
        Z[keep] = gz[~done]
        esc = np.linalg.norm(Z[keep] - center, axis=1) > limit
        status[keep[esc]] = 1
        iters[keep[esc]] = k + 1
        active = keep[~esc]
    return Z, status, iters


def banach_solve_mv(
    g: Callable,
    start,
    center,
    radius: float,
    tol: float = DEFAULT_TOL,
    max_iter: int = DEFAULT_MAX_ITER,
    full_output: bool = False,
):
    """Iterate z <- g(z) in C^m until ||g(z) - z|| <= tol (Euclidean norm)."""
    if not tol > 0:
        raise ValueError("tol must be positive")
    start = np.asarray(start, dtype=complex)
    Z, status, iters = _iterate_mv(
        lambda za, _idx: np.asarray(g(za[0]), dtype=complex)[None, :],
        start[None, :], np.asarray(center, dtype=complex), radius, tol, max_iter,
    )
    if status[0] == 1:
        raise DomainEscapeError(f"iterate left the ball of radius {radius} after {iters[0]} steps")
    if status[0] == 2:
        raise NonConvergenceError(f"no convergence to tol={tol} in {max_iter} iterations")
    return (Z[0], int(iters[0])) if full_output else Z[0]


def build_gw_mv(F: PolyMap, beta, w) -> Callable:
    """g_w(z) = beta + A^-1 (w - F(beta) - N(z - beta)), A = F'(beta)."""
    beta, _, Ainv, _, N = _split(F, beta)
    shift = beta + Ainv @ (np.asarray(w, dtype=complex) - eval_map(F, beta))
    has_tail = N.degree >= 2

    def g(z):
        z = np.asarray(z, dtype=complex)
        if not has_tail:
            return shift.copy()
        return shift - Ainv @ eval_map(N, z - beta)

    return g


def ball_samples(center, radius: float, n: int) -> np.ndarray:
    """Deterministic quasi-uniform points inside the open ball in C^m."""
    center = np.asarray(center, dtype=complex)
    d = 2 * center.size
    h = qmc.Halton(d=d + 1, scramble=False)
    h.fast_forward(1)
    u = h.random(n)
    x = ndtri(u[:, :d])
    x /= np.linalg.norm(x, axis=1, keepdims=True)
    r = radius * u[:, d] ** (1.0 / d)
    x *= r[:, None]
    return center[None, :] + x[:, : d // 2] + 1j * x[:, d // 2 :]


@dataclass
class MVVerifyReport:
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


def verify_schlicht_mv(
    F: PolyMap,
    cert: MVCertificate,
    n_samples: int = 1000,
    tol: float = DEFAULT_TOL,
    max_iter: int = DEFAULT_MAX_ITER,
) -> MVVerifyReport:
    """Solve F(z) = w for sampled w in the certified ball and audit residuals and injectivity."""
    beta, _, Ainv, _, N = _split(F, cert.beta)
    W = ball_samples(cert.image_center, cert.schlicht_radius, n_samples)
    shift = beta[None, :] + (W - eval_map(F, beta)[None, :]) @ Ainv.T
    has_tail = N.degree >= 2

    def g(za, idx):
        if not has_tail:
            return shift[idx]
        return shift[idx] - eval_map(N, za - beta[None, :]) @ Ainv.T

    Z, status, iters = _iterate_mv(g, np.tile(beta, (n_samples, 1)), beta, cert.eta, tol, max_iter)
    resid = np.linalg.norm(eval_map(F, Z) - W, axis=1)
    converged = status == 0
    resid_bad = converged & ~(resid <= RESIDUAL_LIMIT)
    ok = converged & ~resid_bad
    collisions = 0
    zz, ww = Z[ok], W[ok]
    if len(zz) > 1:
        tree = cKDTree(np.column_stack([zz.real, zz.imag]))
        for i, j in tree.query_pairs(INJECTIVITY_Z_SEPARATION):
            if np.linalg.norm(ww[i] - ww[j]) >= INJECTIVITY_W_SEPARATION:
                collisions += 1
    return MVVerifyReport(
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


def theorem_exponent(m: int) -> float:
    """Decay exponent (3m - 1)/2 of the Wu-mapping bound in K."""
    return (3 * m - 1) / 2.0


@functools.lru_cache(maxsize=None)
def theorem_constant(m: int) -> float:
    """C(m): wu_bound at K = 1, maximised over (gamma, sigma)."""
    return optimize_2d(lambda g, s: wu_bound(m, 1.0, g, s)).value


def theorem_bound_mv(m: int, K: float, ball: bool = False) -> float:
    """C(m) / K**((3m-1)/2); ``ball=True`` rescales by m**-1/2 for the unit ball."""
    if int(m) != m or m < 1:
        raise ValueError("m must be an integer >= 1")
    if K < 1:
        raise ValueError("K must be >= 1")
    value = theorem_constant(int(m)) * K ** (-theorem_exponent(m))
    return value / math.sqrt(m) if ball else value
