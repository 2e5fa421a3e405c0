"""Brown-measure density on points and grids, and the logarithmic potential.

Two independent routes give the density:

* constant kernels: ``pi sigma = <1/(|a - z|^2 - beta)^2> (-beta + |d beta|^2)``;
* any kernel: ``sigma = -(1/pi) Re d/dzbar <y(z, 0)>`` by finite differences
  of the Dyson solution.

The potential ``L(z) = int_0^inf (<v1(z, eta)> - 1/(1 + eta)) d eta`` gives a
third route through ``sigma = -Laplacian(L) / (2 pi)``.
"""

from __future__ import annotations

import math
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .dyson import (DEFAULT_OPTIONS, DysonState, SolverOptions,
                    eta_continuation, solve_dyson)
from .errors import NumericalError
from .model import AtomicProfile
from .spectral import _scalar_roots, beta_eval, beta_values

__all__ = [
    "DensityGrid",
    "SigmaValue",
    "PotentialValue",
    "sigma_at",
    "sigma_detail",
    "sigma_closed_many",
    "density_grid",
    "log_potential",
    "laplacian_check",
    "support_radius",
]


def support_radius(profile: AtomicProfile) -> float:
    """Radius of a disk certainly containing the support."""
    norm_s = float(np.max(np.abs(profile.S_matrix).sum(axis=1)))
    norm_st = float(np.max(np.abs(profile.S_star_matrix).sum(axis=1)))
    return float(np.max(np.abs(profile.deformation))
                 + 2 * math.sqrt(max(norm_s, norm_st)))


@dataclass(frozen=True)
class SigmaValue:
    """Pointwise density with the diagnostics of the route that produced it."""

    value: float
    raw: float
    clamped: bool
    edge_cell: bool
    method: str

    def __float__(self):
        return self.value


@dataclass(frozen=True)
class PotentialValue:
    """Value of ``L`` with the analytic tail correction and its uncertainty."""

    value: float
    tail: float
    tail_error: float
    warning: str | None

    def __float__(self):
        return self.value


@dataclass(frozen=True, eq=False)
class DensityGrid:
    """Density, ``beta`` and support mask at the cell centres of a window.

    Arrays are indexed ``[i, j]`` with ``x[i]`` the real and ``y[j]`` the
    imaginary coordinate.
    """

    window: tuple
    nx: int
    ny: int
    x: np.ndarray
    y: np.ndarray
    sigma: np.ndarray
    beta_field: np.ndarray
    mask: np.ndarray
    clamp_count: int
    raw_min: float

    @property
    def cell_area(self) -> float:
        return float((self.x[1] - self.x[0]) * (self.y[1] - self.y[0]))

    @property
    def mass(self) -> float:
        return float(self.sigma.sum() * self.cell_area)

    @property
    def points(self) -> np.ndarray:
        return self.x[:, None] + 1j * self.y[None, :]


def sigma_closed_many(profile: AtomicProfile, zetas,
                      chunk: int = 4096) -> tuple[np.ndarray, np.ndarray]:
    """Closed-form density and ``beta`` at many points (constant kernels).

    Returns ``(sigma, beta)`` with the input shape.
    """
    t = profile.scalar_variance
    if t is None:
        raise ValueError("closed form needs a constant variance kernel")
    zetas = np.asarray(zetas, dtype=complex)
    flat = zetas.ravel()
    mu = profile.weights
    sig = np.zeros(flat.size)
    bet = np.empty(flat.size)
    for start in range(0, flat.size, chunk):
        z = flat[start:start + chunk]
        diff = profile.deformation[None, :] - z[:, None]
        d = np.abs(diff) ** 2
        beta = _scalar_roots(d, mu, t)
        bet[start:start + chunk] = beta
        inside = beta < 0
        if not np.any(inside):
            continue
        D = d[inside] - beta[inside, None]
        w2 = 1.0 / D ** 2
        m2 = w2 @ mu
        grad = -((w2 * np.conj(diff[inside])) @ mu) / m2
        val = m2 * (-beta[inside] + np.abs(grad) ** 2) / math.pi
        out = np.zeros(z.size)
        out[inside] = val
        sig[start:start + chunk] = out
    return sig.reshape(zetas.shape), bet.reshape(zetas.shape)


def _mean_y(profile: AtomicProfile, state: DysonState) -> complex:
    return complex(state.y @ profile.weights)


def _stencil_state(profile, zeta, center, opts):
    """Floor-eta state at a neighbour, warm-started from the centre."""
    try:
        st = solve_dyson(profile, zeta, opts.eta_floor, opts, init=center)
    except NumericalError:
        return eta_continuation(profile, zeta, opts)
    inside = st.v1 @ profile.weights > opts.bulk_threshold
    if not inside:
        # the warm start may sit on the wrong branch near the edge
        return eta_continuation(profile, zeta, opts)
    return _Local(st, True)


@dataclass(frozen=True)
class _Local:
    state: DysonState
    inside: bool


def _sigma_dyson(profile, zeta, h, opts):
    cont = eta_continuation(profile, zeta, opts)
    if not cont.inside:
        return SigmaValue(0.0, 0.0, False, False, "dyson")
    ev = beta_eval(profile, zeta)
    if abs(ev.beta) < 0.01:
        slope = 2 * abs(ev.grad)
        if slope > 0:
            h = min(h, 0.25 * abs(ev.beta) / slope)
    h = max(h, 1e-7)
    center = cont.state
    yc = _mean_y(profile, center)
    parts = []
    edge = False
    for step in (h, 1j * h):
        fwd = _stencil_state(profile, zeta + step, center, opts)
        bwd = _stencil_state(profile, zeta - step, center, opts)
        yf, yb = _mean_y(profile, fwd.state), _mean_y(profile, bwd.state)
        if fwd.inside and bwd.inside:
            parts.append((yf - yb) / (2 * h))
        elif fwd.inside:
            edge = True
            parts.append((yf - yc) / h)
        elif bwd.inside:
            edge = True
            parts.append((yc - yb) / h)
        else:
            edge = True
            parts.append(0.0)
    dbar = 0.5 * (parts[0] + 1j * parts[1])
    raw = float(-dbar.real / math.pi)
    return SigmaValue(max(raw, 0.0), raw, raw < 0, edge, "dyson")


def sigma_detail(profile: AtomicProfile, zeta: complex, method: str = "auto",
                 h: float | None = None,
                 opts: SolverOptions = DEFAULT_OPTIONS) -> SigmaValue:
    """Density at ``zeta`` with diagnostics.

    Parameters
    ----------
    method : {"auto", "closed", "dyson"}
        ``auto`` uses the closed form for constant kernels.
    h : float, optional
        Finite-difference step of the Dyson route; defaults to ``1e-4``
        times the diameter of the disk containing the support.
    """
    if method == "auto":
        method = "closed" if profile.scalar_variance is not None else "dyson"
    if method == "closed":
        sig, _ = sigma_closed_many(profile, np.array([zeta]))
        return SigmaValue(float(sig[0]), float(sig[0]), False, False,
                          "closed")
    if method != "dyson":
        raise ValueError(f"unknown method {method!r}")
    if h is None:
        h = 2e-4 * support_radius(profile)
    return _sigma_dyson(profile, complex(zeta), h, opts)


def sigma_at(profile: AtomicProfile, zeta: complex, method: str = "auto",
             h: float | None = None,
             opts: SolverOptions = DEFAULT_OPTIONS) -> float:
    """Density of the Brown measure at ``zeta``; see :func:`sigma_detail`."""
    return sigma_detail(profile, zeta, method, h, opts).value


def _window_axes(window, nx, ny):
    re0, re1, im0, im1 = map(float, window)
    if not (re1 > re0 and im1 > im0):
        raise ValueError(f"empty window {window}")
    if nx < 8 or ny < 8:
        raise ValueError("grid resolution must be at least 8")
    x = re0 + (np.arange(nx) + 0.5) * (re1 - re0) / nx
    y = im0 + (np.arange(ny) + 0.5) * (im1 - im0) / ny
    return x, y


def _general_row(profile, xs, y, opts):
    ys = np.empty(xs.size, complex)
    betas = np.empty(xs.size)
    inside = np.empty(xs.size, bool)
    for i, x in enumerate(xs):
        z = complex(x, y)
        cont = eta_continuation(profile, z, opts)
        ys[i] = _mean_y(profile, cont.state)
        betas[i] = beta_eval(profile, z).beta
        inside[i] = cont.inside
    return ys, betas, inside


def density_grid(profile: AtomicProfile, window, nx: int, ny: int,
                 threads: int = 1, method: str = "auto",
                 opts: SolverOptions = DEFAULT_OPTIONS) -> DensityGrid:
    """Fill density, ``beta`` and mask on an ``nx`` by ``ny`` cell grid.

    The general route differentiates the grid of ``<y>`` values, so it costs
    one eta continuation per cell.  Rows run on ``threads`` workers.
    """
    x, y = _window_axes(window, nx, ny)
    if method == "auto":
        method = "closed" if profile.scalar_variance is not None else "dyson"
    if method == "closed":
        pts = x[:, None] + 1j * y[None, :]
        sigma, beta = sigma_closed_many(profile, pts)
        mask = beta < 0
        return DensityGrid(tuple(map(float, window)), nx, ny, x, y, sigma,
                           beta, mask, 0, float(sigma.min()))
    if method != "dyson":
        raise ValueError(f"unknown method {method!r}")
    with ThreadPoolExecutor(max_workers=max(1, threads)) as pool:
        rows = list(pool.map(lambda yy: _general_row(profile, x, yy, opts), y))
    ymean = np.stack([r[0] for r in rows], axis=1)
    beta = np.stack([r[1] for r in rows], axis=1)
    mask = np.stack([r[2] for r in rows], axis=1)
    dx, dy = x[1] - x[0], y[1] - y[0]
    gx = np.gradient(ymean, dx, axis=0)
    gy = np.gradient(ymean, dy, axis=1)
    raw = -(0.5 * (gx + 1j * gy)).real / math.pi
    raw = np.where(mask, raw, 0.0)
    clamp = int(np.sum(raw < 0))
    sigma = np.maximum(raw, 0.0)
    return DensityGrid(tuple(map(float, window)), nx, ny, x, y, sigma, beta,
                       mask, clamp, float(raw.min()))


def log_potential(profile: AtomicProfile, zeta: complex, nodes: int = 80,
                  eta_min: float = 1e-8, eta_max: float | None = None,
                  opts: SolverOptions = DEFAULT_OPTIONS) -> PotentialValue:
    """``L(zeta)`` by quadrature in ``log eta`` plus an analytic tail.

    ``eta_max`` defaults to ``max(1e4, 1e3 (1 + max|a - zeta|^2))`` so the
    fitted tail stays accurate far from the support.

    The integrand behaves like ``A/eta^2 + B/eta^3`` for large ``eta``; both
    coefficients are fitted from the last two nodes and integrated exactly
    beyond ``eta_max``.  The ``B`` term's share is reported as the tail
    uncertainty and triggers a warning above ``1e-6``.
    """
    if eta_max is None:
        far = float(np.max(np.abs(profile.deformation - zeta)) ** 2)
        eta_max = max(1e4, 1e3 * (1 + far))
    etas = np.geomspace(eta_max, eta_min, nodes)
    vals = np.empty(nodes)
    state = None
    mu = profile.weights
    for i, eta in enumerate(etas):
        state = solve_dyson(profile, zeta, eta, opts, init=state)
        vals[i] = state.v1 @ mu - 1.0 / (1.0 + eta)
    u = np.log(etas)[::-1]
    g = (vals * etas)[::-1]
    body = float(np.sum(0.5 * (g[1:] + g[:-1]) * np.diff(u)))
    # integrand on [0, eta_min] is bounded by its value there
    head = float(vals[-1] * eta_min)
    t1, t2 = etas[0], etas[1]
    f1, f2 = vals[0], vals[1]
    mat = np.array([[t1 ** -2, t1 ** -3], [t2 ** -2, t2 ** -3]])
    A, B = np.linalg.solve(mat, [f1, f2])
    tail = float(A / t1 + B / (2 * t1 ** 2))
    tail_err = float(abs(B) / (2 * t1 ** 2))
    msg = None
    if tail_err > 1e-6:
        msg = f"tail uncertainty {tail_err:.2e} exceeds 1e-6"
        warnings.warn(msg, RuntimeWarning, stacklevel=2)
    return PotentialValue(body + head + tail, tail, tail_err, msg)


def laplacian_check(profile: AtomicProfile, zeta: complex, h: float = 1e-3,
                    **kw) -> float:
    """``-Laplacian(L)/(2 pi)`` by the five-point stencil."""
    z = complex(zeta)
    pts = [z + h, z - h, z + 1j * h, z - 1j * h, z]
    vals = [log_potential(profile, p, **kw).value for p in pts]
    lap = (sum(vals[:4]) - 4 * vals[4]) / h ** 2
    return float(-lap / (2 * math.pi))


def beta_grid(profile: AtomicProfile, window, nx: int, ny: int):
    """``beta`` on cell centres; returns ``(x, y, field)``."""
    x, y = _window_axes(window, nx, ny)
    return x, y, beta_values(profile, x[:, None] + 1j * y[None, :])
