"""Vector Dyson equation for the pair (v1, v2) and the off-diagonal term y.

For ``eta > 0`` the unique positive solution satisfies

    v1 = (eta + S* v1) / (|a - zeta|^2 + (eta + S* v1)(eta + S v2))
    v2 = (eta + S v2)  / (|a - zeta|^2 + (eta + S* v1)(eta + S v2))

The solver runs a damped alternating fixed-point sweep on this form and
finishes with Newton steps.  Newton is augmented by the identity
``<v1> = <v2>``, which removes the near-null scaling direction that the
equations develop as ``eta -> 0`` inside the support.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .errors import ConvergenceError
from .model import AtomicProfile

__all__ = [
    "SolverOptions",
    "DysonState",
    "Continuation",
    "solve_dyson",
    "eta_continuation",
    "eta_ladder",
    "solve_kappa",
    "compute_y",
    "mde_check",
]


@dataclass(frozen=True)
class SolverOptions:
    """Tunable parameters of the Dyson solver and the eta continuation."""

    tol: float = 1e-12
    max_iter: int = 100_000
    eta0: float = 1.0
    eta_factor: float = 0.5
    eta_floor: float = 1e-10
    bulk_threshold: float = 1e-4
    fixed_point_sweeps: int = 50

    def __post_init__(self):
        if not (self.tol > 0 and self.max_iter > 0):
            raise ValueError("tol and max_iter must be positive")
        if not 0 < self.eta_factor < 1:
            raise ValueError("eta_factor must lie in (0, 1)")
        if not 0 < self.eta_floor <= self.eta0:
            raise ValueError("need 0 < eta_floor <= eta0")


DEFAULT_OPTIONS = SolverOptions()


@dataclass(frozen=True, eq=False)
class DysonState:
    """Solution of the Dyson equation at one spectral parameter."""

    zeta: complex
    eta: float
    v1: np.ndarray
    v2: np.ndarray
    y: np.ndarray
    residual: float
    iterations: int


@dataclass(frozen=True, eq=False)
class Continuation:
    """Result of following the solution down an eta ladder.

    ``state`` is the floor-eta solution when ``inside`` is true; otherwise it
    is the extrapolated ``eta = 0`` state with ``v1 = v2 = 0``.
    """

    state: DysonState
    inside: bool
    floor_state: DysonState
    mean_v1: np.ndarray
    etas: np.ndarray


def _defect(v1, v2, p, q, den, mu):
    # the balance <v1> = <v2> is implied by the equations but is invisible
    # in the pointwise defect along the near-null scaling direction
    return max(np.max(np.abs(v1 - p / den)), np.max(np.abs(v2 - q / den)),
               abs(mu @ (v1 - v2)))


def _fixed_point(St, S, d, mu, eta, v1, v2, sweeps):
    """Damped alternating sweeps; returns the improved pair."""
    omega = 1.0
    p = eta + St @ v1
    q = eta + S @ v2
    last = _defect(v1, v2, p, q, d + p * q, mu)
    for _ in range(sweeps):
        new1 = p / (d + p * q)
        v1n = (1 - omega) * v1 + omega * new1
        pn = eta + St @ v1n
        new2 = q / (d + pn * q)
        v2n = (1 - omega) * v2 + omega * new2
        qn = eta + S @ v2n
        res = _defect(v1n, v2n, pn, qn, d + pn * qn, mu)
        if res > last and omega > 1e-3:
            omega *= 0.5
            continue
        v1, v2, p, q, last = v1n, v2n, pn, qn, res
    return v1, v2


def _newton(St, S, d, mu, eta, v1, v2, target, budget):
    """Newton iteration with the <v1> = <v2> row appended."""
    k = d.size
    iterations = 0
    p = eta + St @ v1
    q = eta + S @ v2
    den = d + p * q
    res = _defect(v1, v2, p, q, den, mu)
    while res > target(v1, v2) and iterations < budget:
        iterations += 1
        f1 = v1 * den - p
        f2 = v2 * den - q
        jac = np.empty((2 * k + 1, 2 * k))
        jac[:k, :k] = np.diag(den) + (v1 * q)[:, None] * St - St
        jac[:k, k:] = (v1 * p)[:, None] * S
        jac[k:2 * k, :k] = (v2 * q)[:, None] * St
        jac[k:2 * k, k:] = np.diag(den) + (v2 * p)[:, None] * S - S
        jac[2 * k, :k] = mu
        jac[2 * k, k:] = -mu
        rhs = np.concatenate([f1, f2, [mu @ (v1 - v2)]])
        # least squares by Householder QR; the extra row keeps it full rank
        qmat, rmat = np.linalg.qr(jac)
        try:
            step = np.linalg.solve(rmat, qmat.T @ rhs)
        except np.linalg.LinAlgError:
            step = np.linalg.lstsq(jac, rhs, rcond=None)[0]
        lam = 1.0
        while True:
            n1 = v1 - lam * step[:k]
            n2 = v2 - lam * step[k:]
            if np.all(n1 > 0) and np.all(n2 > 0):
                pn = eta + St @ n1
                qn = eta + S @ n2
                dn = d + pn * qn
                rn = _defect(n1, n2, pn, qn, dn, mu)
                if rn < res or lam < 1e-4:
                    break
            elif lam < 1e-12:
                raise ConvergenceError("Newton step cannot keep v positive",
                                       res, iterations)
            lam *= 0.5
        if rn >= res and lam < 1e-4:
            # stagnation at round-off level
            v1, v2, p, q, den, res = n1, n2, pn, qn, dn, min(res, rn)
            break
        v1, v2, p, q, den, res = n1, n2, pn, qn, dn, rn
    return v1, v2, res, iterations


def solve_dyson(profile: AtomicProfile, zeta: complex, eta: float,
                opts: SolverOptions = DEFAULT_OPTIONS,
                init: DysonState | None = None) -> DysonState:
    """Solve the vector Dyson equation at ``(zeta, eta)``.

    Parameters
    ----------
    profile : AtomicProfile
    zeta : complex
        Spectral parameter.
    eta : float
        Regularization, must be positive.
    opts : SolverOptions
    init : DysonState, optional
        Warm start; defaults to ``v1 = v2 = 1/(1+eta)``.

    Returns
    -------
    DysonState
        With ``residual`` the sup-norm defect of the fixed-point form.

    Raises
    ------
    ValueError
        If ``eta <= 0``.
    ConvergenceError
        If the tolerance is not reached within ``opts.max_iter`` steps.
    """
    eta = float(eta)
    if not eta > 0 or not math.isfinite(eta):
        raise ValueError(f"eta must be positive, got {eta!r}")
    zeta = complex(zeta)
    d = np.abs(profile.deformation - zeta) ** 2
    S, St, mu = profile.S_matrix, profile.S_star_matrix, profile.weights
    warm = init is not None and np.all(init.v1 > 0) and np.all(init.v2 > 0)
    if warm:
        v1, v2 = init.v1.copy(), init.v2.copy()
    else:
        v1 = np.full(profile.K, 1.0 / (1.0 + eta))
        v2 = v1.copy()

    def target(a, b):
        # absolute tolerance, tightened when v itself is tiny
        scale = max(np.max(a), np.max(b))
        return opts.tol * min(1.0, scale)

    # warm starts are already in Newton's basin
    sweeps = 0 if warm else min(opts.fixed_point_sweeps, opts.max_iter)
    v1, v2 = _fixed_point(St, S, d, mu, eta, v1, v2, sweeps)
    v1, v2, res, its = _newton(St, S, d, mu, eta, v1, v2, target,
                               opts.max_iter - sweeps)
    iterations = sweeps + its
    # round-off floor of the defect evaluation itself
    floor = 8 * np.finfo(float).eps * max(np.max(v1), np.max(v2))
    if res > max(target(v1, v2), floor):
        raise ConvergenceError(
            f"Dyson solver did not converge at zeta={zeta}, eta={eta:g}",
            res, iterations)
    state = DysonState(zeta, eta, v1, v2, np.zeros(profile.K, complex),
                       float(res), iterations)
    return replace(state, y=compute_y(profile, state))


def eta_ladder(opts: SolverOptions = DEFAULT_OPTIONS) -> np.ndarray:
    """Geometric eta values from ``eta0`` down to ``eta_floor`` inclusive."""
    n = int(math.floor(math.log(opts.eta_floor / opts.eta0)
                       / math.log(opts.eta_factor) + 1e-9))
    etas = opts.eta0 * opts.eta_factor ** np.arange(n + 1)
    if etas[-1] > opts.eta_floor * (1 + 1e-12):
        etas = np.append(etas, opts.eta_floor)
    return etas


def eta_continuation(profile: AtomicProfile, zeta: complex,
                     opts: SolverOptions = DEFAULT_OPTIONS) -> Continuation:
    """Follow the solution from ``eta0`` to ``eta_floor`` with warm starts.

    The point is declared inside the support when ``<v1>`` at the floor
    exceeds ``opts.bulk_threshold``.
    """
    etas = eta_ladder(opts)
    state = None
    means = np.empty(etas.size)
    for i, eta in enumerate(etas):
        state = solve_dyson(profile, zeta, eta, opts, init=state)
        means[i] = state.v1 @ profile.weights
    inside = bool(means[-1] > opts.bulk_threshold)
    if inside:
        result = state
    else:
        zero = np.zeros(profile.K)
        outside = DysonState(complex(zeta), 0.0, zero, zero.copy(),
                             np.zeros(profile.K, complex), 0.0,
                             state.iterations)
        result = replace(outside, y=compute_y(profile, outside))
    return Continuation(result, inside, state, means, etas)


def solve_kappa(profile: AtomicProfile, zeta: complex,
                rtol: float = 1e-14) -> float:
    """Positive root of ``1 = t <1/(kappa^2 + |a - zeta|^2)>`` for ``s = t``.

    Returns 0 when ``t <|a - zeta|^-2> <= 1`` (outside the support).  At
    ``eta = 0`` the Dyson solution is ``v1 = v2 = kappa/(kappa^2 + |a-zeta|^2)``,
    so ``kappa = t <v1>``.
    """
    t = profile.scalar_variance
    if t is None:
        raise ValueError("solve_kappa needs a constant variance kernel")
    d = np.abs(profile.deformation - complex(zeta)) ** 2
    mu = profile.weights

    def excess(u):
        with np.errstate(divide="ignore"):
            return t * (mu @ (1.0 / (u + d))) - 1.0

    if np.all(d > 0) and excess(0.0) <= 0:
        return 0.0
    lo, hi = 0.0, t  # excess(t) <= 0 since t<1/(t+d)> <= 1
    while hi - lo > rtol * hi:
        mid = 0.5 * (lo + hi)
        if mid in (lo, hi):
            break
        if excess(mid) > 0:
            lo = mid
        else:
            hi = mid
    return math.sqrt(0.5 * (lo + hi))


def compute_y(profile: AtomicProfile, state: DysonState) -> np.ndarray:
    """Off-diagonal resolvent entry ``y = v1 conj(a - zeta)/(eta + S* v1)``.

    Where the denominator vanishes (``eta = 0`` outside the support) the
    identity ``y = 1/(a - zeta) - v1 v2 / conj(y)`` with ``v = 0`` is used.
    """
    diff = profile.deformation - state.zeta
    den = state.eta + profile.S_star_matrix @ state.v1
    y = np.empty(profile.K, complex)
    ok = den > 0
    y[ok] = state.v1[ok] * np.conj(diff[ok]) / den[ok]
    if np.any(~ok):
        with np.errstate(divide="ignore", invalid="ignore"):
            y[~ok] = 1.0 / diff[~ok]
    return y


def y_alternative(profile: AtomicProfile, state: DysonState) -> np.ndarray:
    """Second form ``(1 - v1 (eta + S v2)) / (a - zeta)``; needs zeta off atoms."""
    diff = profile.deformation - state.zeta
    if np.any(diff == 0):
        raise ValueError("zeta coincides with an atom")
    return (1.0 - state.v1 * (state.eta + profile.S_matrix @ state.v2)) / diff


def mde_check(profile: AtomicProfile, state: DysonState) -> float:
    """Sup-norm defect of the 2x2 matrix Dyson equation built from ``state``.

    Per atom, ``M = [[i v1, conj(y)], [y, i v2]]`` must satisfy
    ``-M^{-1} = [[i eta, zeta - a], [conj(zeta - a), i eta]] + diag(S m22, S* m11)``.
    """
    if not state.eta > 0:
        raise ValueError("mde_check needs eta > 0")
    v1, v2, y = state.v1, state.v2, state.y
    m11, m22 = 1j * v1, 1j * v2
    det = m11 * m22 - np.conj(y) * y
    if np.any(det == 0):
        raise ArithmeticError("singular 2x2 block")
    inv11, inv22 = m22 / det, m11 / det
    inv12, inv21 = -np.conj(y) / det, -y / det
    off = state.zeta - profile.deformation
    sig11 = profile.S_matrix @ m22
    sig22 = profile.S_star_matrix @ m11
    defects = [
        -inv11 - (1j * state.eta + sig11),
        -inv12 - off,
        -inv21 - np.conj(off),
        -inv22 - (1j * state.eta + sig22),
    ]
    return float(max(np.max(np.abs(x)) for x in defects))
