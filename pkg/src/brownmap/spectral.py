"""The edge function beta, its eigenvectors, gradient and edge quantities.

``beta(zeta)`` is the Perron eigenvalue of ``B = D_{|a - zeta|^2} - S``, the
real eigenvalue carrying positive right and left eigenvectors ``b`` and
``ell``.  It is negative exactly on the support.  For a constant kernel
``s = t`` it is the root of ``t <1/(|a - zeta|^2 - beta)> = 1`` below
``min |a - zeta|^2`` and ``b = ell = t/(|a - zeta|^2 - beta)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import NumericalError
from .model import AtomicProfile

__all__ = [
    "BetaEval",
    "beta_eval",
    "beta_values",
    "grad_beta",
    "gradient_xy",
    "beta_minmax",
    "edge_sigma",
    "delta_sigma_at_singular",
    "laplacian_beta",
    "solve_edge_cubic",
    "edge_cubic_coefficients",
    "DegenerateEigenvalue",
]


class DegenerateEigenvalue(NumericalError):
    """The Perron eigenvalue is not isolated; use finite differences."""


@dataclass(frozen=True, eq=False)
class BetaEval:
    """Perron data of ``B`` at ``zeta``.

    ``grad`` is the Wirtinger derivative ``d beta / d zeta``; the Cartesian
    gradient is ``(2 Re grad, -2 Im grad)``.
    """

    zeta: complex
    beta: float
    lambda_pf: float
    b: np.ndarray
    ell: np.ndarray
    grad: complex
    eig_residual: float
    gap: float
    method: str


def _scalar_roots(d: np.ndarray, mu: np.ndarray, t: float) -> np.ndarray:
    """Vectorized bisection for ``t <1/(d - beta)> = 1`` row by row.

    ``d`` has shape (N, K).  The root lies in
    ``[min d - t, min(min d, <d> - t)]``.
    """
    dmin = d.min(axis=1)
    lo = dmin - t
    hi = np.minimum(dmin, d @ mu - t)
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        with np.errstate(divide="ignore"):
            phi = t * ((1.0 / (d - mid[:, None])) @ mu)
        # at mid == dmin the sum is infinite, so mid counts as above the root
        above = ~(phi < 1.0)
        hi = np.where(above, mid, hi)
        lo = np.where(above, lo, mid)
        if np.all((hi - lo) <= 4 * np.finfo(float).eps
                  * np.maximum(1.0, np.abs(hi))):
            break
    return 0.5 * (lo + hi)


def beta_values(profile: AtomicProfile, zetas) -> np.ndarray:
    """``beta`` at many points; vectorized for constant kernels."""
    zetas = np.asarray(zetas, dtype=complex)
    flat = zetas.ravel()
    t = profile.scalar_variance
    if t is not None:
        d = np.abs(flat[:, None] - profile.deformation[None, :]) ** 2
        out = _scalar_roots(d, profile.weights, t)
    else:
        out = np.array([beta_eval(profile, z).beta for z in flat])
    return out.reshape(zetas.shape)


def _normalize(vec: np.ndarray, mu: np.ndarray) -> np.ndarray:
    vec = np.real_if_close(vec, tol=1e6).real
    avg = mu @ vec
    return vec / avg


def _polish(mat: np.ndarray, vec: np.ndarray, shift: float, mu: np.ndarray,
            steps: int = 2) -> np.ndarray:
    k = mat.shape[0]
    scale = max(1.0, np.max(np.abs(mat)))
    # keep the shifted matrix safely invertible
    sh = shift - 1e-13 * scale
    for _ in range(steps):
        try:
            vec = np.linalg.solve(mat - sh * np.eye(k), vec)
        except np.linalg.LinAlgError:
            break
        vec = _normalize(vec, mu)
    return vec


def _general(profile: AtomicProfile, zeta: complex, d: np.ndarray):
    mu = profile.weights
    B = np.diag(d) - profile.S_matrix
    Bs = np.diag(d) - profile.S_star_matrix
    vals, vecs = np.linalg.eig(B)
    order = np.argsort(vals.real)
    i0 = order[0]
    gap = float(vals[order[1]].real - vals[i0].real) if d.size > 1 else math.inf
    beta0 = float(vals[i0].real)
    b = _normalize(vecs[:, i0], mu)
    lvals, lvecs = np.linalg.eig(Bs)
    j0 = np.argmin(lvals.real)
    ell = _normalize(lvecs[:, j0], mu)
    b = _polish(B, b, beta0, mu)
    ell = _polish(Bs, ell, beta0, mu)
    beta = float((mu * ell) @ (B @ b) / ((mu * ell) @ b))
    return beta, b, ell, gap


def beta_eval(profile: AtomicProfile, zeta: complex) -> BetaEval:
    """Evaluate ``beta`` with its eigenvectors and gradient at ``zeta``.

    Constant kernels use the scalar root; other kernels use a dense
    eigendecomposition of ``B`` refined by inverse iteration.
    """
    zeta = complex(zeta)
    mu = profile.weights
    diff = profile.deformation - zeta
    d = np.abs(diff) ** 2
    t = profile.scalar_variance
    if t is not None:
        beta = float(_scalar_roots(d[None, :], mu, t)[0])
        b = t / (d - beta)
        b = b / (mu @ b)
        ell = b.copy()
        dmin = d.min()
        gap = dmin - beta if profile.K > 1 else math.inf
        method = "scalar"
    else:
        beta, b, ell, gap = _general(profile, zeta, d)
        method = "general"
    with np.errstate(divide="ignore"):
        if not np.all(d > 0):
            lam = math.inf
        elif t is not None:
            # S D^-1 has rank one for a constant kernel
            lam = float(t * (mu @ (1.0 / d)))
        else:
            sd = profile.S_matrix / d[None, :]
            lam = float(np.max(np.linalg.eigvals(sd).real))
    Bb = d * b - profile.S_matrix @ b
    Bl = d * ell - profile.S_star_matrix @ ell
    res = max(np.max(np.abs(Bb - beta * b)), np.max(np.abs(Bl - beta * ell)))
    w = mu * ell * b
    grad = complex(-(w @ np.conj(diff)) / w.sum())
    return BetaEval(zeta, beta, lam, b, ell, grad, float(res), float(gap),
                    method)


def grad_beta(profile: AtomicProfile, ev: BetaEval) -> complex:
    """First-order perturbation formula ``-<ell b conj(a - zeta)>/<ell b>``.

    Raises
    ------
    DegenerateEigenvalue
        If the Perron eigenvalue is not separated from the rest.
    """
    if ev.gap < 1e-8 * max(1.0, abs(ev.beta)):
        raise DegenerateEigenvalue(
            f"spectral gap {ev.gap:.2e} at zeta={ev.zeta}; use finite "
            "differences of beta instead")
    return ev.grad


def gradient_xy(grad: complex) -> np.ndarray:
    """Cartesian gradient from the Wirtinger derivative of a real function."""
    return np.array([2 * grad.real, -2 * grad.imag])


def beta_minmax(profile: AtomicProfile, zeta: complex, x) -> float:
    """Inner supremum of the min-max definition for a positive test vector.

    ``sup_{y > 0} <x, B y>/<x, y>`` is attained on coordinate directions and
    equals ``max_j (B* x)_j / x_j``.  It bounds ``beta`` from above and equals
    it when ``x`` is the left Perron vector.
    """
    x = np.asarray(x, dtype=float)
    if np.any(x <= 0):
        raise ValueError("test vector must be positive")
    d = np.abs(profile.deformation - complex(zeta)) ** 2
    Bx = d * x - profile.S_star_matrix @ x
    return float(np.max(Bx / x))


def edge_sigma(profile: AtomicProfile, zeta0: complex,
               tol: float = 1e-6) -> float:
    """Boundary value of the density at an edge point ``zeta0``.

    ``(1/pi) |<(a - z) ell b>|^2 / <|a - z|^4 ell^2 b^2>``.
    """
    ev = beta_eval(profile, zeta0)
    if abs(ev.beta) >= tol:
        raise ValueError(f"|beta({zeta0})| = {abs(ev.beta):.3e} is not an "
                         "edge point")
    mu = profile.weights
    diff = profile.deformation - ev.zeta
    lb = ev.ell * ev.b
    num = abs(mu @ (diff * lb)) ** 2
    den = mu @ (np.abs(diff) ** 4 * lb ** 2)
    return float(num / den / math.pi)


def laplacian_beta(profile: AtomicProfile, zeta: complex,
                   h: float = 1e-3) -> float:
    """Five-point finite-difference Laplacian of ``beta``."""
    z = complex(zeta)
    pts = np.array([z + h, z - h, z + 1j * h, z - 1j * h, z])
    vals = beta_values(profile, pts)
    return float((vals[:4].sum() - 4 * vals[4]) / h ** 2)


def delta_sigma_at_singular(profile: AtomicProfile, zeta0: complex,
                            h: float = 1e-3) -> float:
    """Laplacian of the density at a singular boundary point.

    Uses the pseudo-inverse of ``B`` on the complement of its kernel for the
    mixed term and the finite-difference Laplacian of ``beta``.
    """
    ev = beta_eval(profile, zeta0)
    if abs(ev.beta) >= 1e-6 or abs(ev.grad) >= 1e-6:
        raise ValueError(f"zeta0={zeta0} is not a singular point "
                         f"(beta={ev.beta:.2e}, |grad|={abs(ev.grad):.2e})")
    mu = profile.weights
    diff = profile.deformation - ev.zeta
    d = np.abs(diff) ** 2
    B = np.diag(d - ev.beta) - profile.S_matrix
    aug = np.vstack([B.astype(complex), (mu * ev.ell)[None, :]])
    rhs = np.concatenate([ev.b * diff, [0.0]])
    sol, *_ = np.linalg.lstsq(aug, rhs, rcond=None)
    cond = np.linalg.cond(aug)
    if not np.isfinite(cond) or cond > 1e12:
        raise NumericalError(f"ill-conditioned solve (cond={cond:.2e})")
    mixed = mu @ (ev.ell * diff * sol)
    lb = ev.ell * ev.b
    lap = laplacian_beta(profile, zeta0, h)
    num = 32 * abs(mixed) ** 2 + (mu @ lb) ** 2 * lap ** 2
    den = 2 * math.pi * (mu @ (d ** 2 * lb ** 2))
    return float(num / den)


def edge_cubic_coefficients(profile: AtomicProfile, ev: BetaEval):
    """Coefficients ``(<ell b (S* ell)(S b)>, <ell b>)`` of the edge cubic."""
    mu = profile.weights
    c3 = mu @ (ev.ell * ev.b * (profile.S_star_matrix @ ev.ell)
               * (profile.S_matrix @ ev.b))
    c1 = mu @ (ev.ell * ev.b)
    return float(c3), float(c1)


def solve_edge_cubic(c3: float, c1: float, beta: float, eta: float) -> float:
    """Unique positive root of ``c3 x^3 + beta c1 x - eta = 0``.

    Cardano's formula in its cancellation-free form, followed by Newton.
    """
    if not (c3 > 0 and eta > 0):
        raise ValueError("need c3 > 0 and eta > 0")
    p = beta * c1 / c3
    q = -eta / c3
    disc = (q / 2) ** 2 + (p / 3) ** 3
    if disc >= 0:
        # -q/2 > 0, so this cube root never cancels; u - p/(3u) is
        # rewritten as -q / (u^2 + p/3 + (p/(3u))^2) to avoid cancellation
        u = np.cbrt(-q / 2 + math.sqrt(disc))
        v = p / (3 * u)
        x = -q / (u * u + p / 3 + v * v)
    else:
        r = 2 * math.sqrt(-p / 3)
        arg = 3 * q / (p * r)
        x = r * math.cos(math.acos(max(-1.0, min(1.0, arg))) / 3)
    for _ in range(3):
        g = c3 * x ** 3 + beta * c1 * x - eta
        dg = 3 * c3 * x ** 2 + beta * c1
        if dg <= 0:
            break
        step = g / dg
        if x - step <= 0:
            break
        x -= step
    return float(x)
