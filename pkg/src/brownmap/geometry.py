"""Support boundary, singular points and their classification.

The support is ``{beta < 0}``.  Its boundary is traced as the zero level set
of ``beta`` by marching squares.  Singular points are zeros of ``beta`` that
are also critical points; they are classified by the local normal form
``x^2 + tau y^K`` of ``-beta``:

* ``tau = -1``, or ``tau = +1`` with odd ``K``: edge point of order ``K - 1``;
* ``tau = +1`` with even ``K``: isolated internal point of order ``K / 2``;
* no finite ``K`` detected: internal point on a curve of zeros.
"""

from __future__ import annotations

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .constructions import f_axis_derivatives, f_eval
from .errors import NumericalError
from .model import AtomicProfile, AtomMeasure
from .spectral import beta_eval, beta_values, gradient_xy

__all__ = [
    "Polyline",
    "TouchingCurve",
    "BoundaryTrace",
    "SingularPoint",
    "ClassifyOptions",
    "ClassificationConflict",
    "trace_boundary",
    "find_singular_points",
    "classify_singularity",
    "symmetric_classify",
    "kind_from_type",
]

log = logging.getLogger(__name__)


# ----------------------------------------------------------- contours

@dataclass(frozen=True, eq=False)
class Polyline:
    """Contour polyline; the region ``beta < level`` lies on its left."""

    points: np.ndarray
    closed: bool

    @property
    def signed_area(self) -> float:
        """Shoelace area; positive for counter-clockwise closed curves."""
        p = self.points
        if not self.closed or p.size < 3:
            return 0.0
        q = np.roll(p, -1)
        return float(0.5 * np.sum(p.real * q.imag - q.real * p.imag))

    @property
    def length(self) -> float:
        p = self.points
        if self.closed:
            p = np.append(p, p[:1])
        return float(np.sum(np.abs(np.diff(p))))


@dataclass(frozen=True, eq=False)
class TouchingCurve:
    """Curve where ``beta`` touches zero from below without a sign change.

    Detected as a pair of nearby contours at level ``-delta`` enclosing a
    thin band with ``beta > -delta``; ``midline`` lies between them.
    """

    midline: Polyline
    inner: Polyline
    outer: Polyline
    delta: float
    max_beta: float


@dataclass(frozen=True, eq=False)
class BoundaryTrace:
    """Zero contours of ``beta`` plus detected touching curves."""

    contours: list
    touching: list
    saddle_cells: int
    cell_size: float

    def __iter__(self):
        return iter(self.contours)

    def __len__(self):
        return len(self.contours)


def _field_of(source, y=None, field_values=None):
    if field_values is not None:
        return (np.asarray(source, float), np.asarray(y, float),
                np.asarray(field_values, float))
    if hasattr(source, "beta_field"):
        return source.x, source.y, source.beta_field
    x, yy, f = source
    return np.asarray(x, float), np.asarray(yy, float), np.asarray(f, float)


def _march(x, y, f, level):
    """Oriented segments between edge crossings, stitched into polylines."""
    inside = f < level
    nx, ny = f.shape
    points: dict = {}

    def crossing(key):
        if key not in points:
            kind, i, j = key
            if kind == "h":
                fa, fb = f[i, j], f[i + 1, j]
                s = (level - fa) / (fb - fa)
                points[key] = complex(x[i] + s * (x[i + 1] - x[i]), y[j])
            else:
                fa, fb = f[i, j], f[i, j + 1]
                s = (level - fa) / (fb - fa)
                points[key] = complex(x[i], y[j] + s * (y[j + 1] - y[j]))
        return points[key]

    segments = []
    saddles = 0
    for i in range(nx - 1):
        for j in range(ny - 1):
            corners = [(i, j), (i + 1, j), (i + 1, j + 1), (i, j + 1)]
            flags = [inside[c] for c in corners]
            if all(flags) or not any(flags):
                continue
            # edges counter-clockwise: bottom, right, top, left
            edges = [("h", i, j), ("v", i + 1, j), ("h", i, j + 1),
                     ("v", i, j)]
            exits = [e for e in range(4) if flags[e] and not flags[(e + 1) % 4]]
            entries = [e for e in range(4)
                       if not flags[e] and flags[(e + 1) % 4]]
            if len(exits) == 2:
                saddles += 1
                centre = np.mean([f[c] for c in corners]) < level
            else:
                centre = None
            for e in exits:
                # pair with the next entry counter-clockwise when the centre
                # is inside (joined corners), else with the previous one
                steps = range(1, 4) if centre in (None, True) else range(-1, -4, -1)
                for s in steps:
                    if (e + s) % 4 in entries:
                        partner = (e + s) % 4
                        break
                segments.append((edges[e], edges[partner]))
    by_start = {s: k for k, (s, _) in enumerate(segments)}
    by_end = {e: k for k, (_, e) in enumerate(segments)}
    used = [False] * len(segments)
    lines = []
    for k0 in range(len(segments)):
        if used[k0]:
            continue
        used[k0] = True
        chain = [segments[k0][0], segments[k0][1]]
        closed = False
        k = k0
        while True:
            nxt = by_start.get(segments[k][1])
            if nxt is None:
                break
            if nxt == k0:
                closed = True
                break
            if used[nxt]:
                break
            used[nxt] = True
            chain.append(segments[nxt][1])
            k = nxt
        if not closed:
            k = k0
            while True:
                prv = by_end.get(segments[k][0])
                if prv is None or used[prv]:
                    break
                used[prv] = True
                chain.insert(0, segments[prv][0])
                k = prv
        if closed:
            chain = chain[:-1]
        pts = np.array([crossing(key) for key in chain])
        lines.append(Polyline(pts, closed))
    return lines, saddles


def _mean_distance(a: Polyline, b: Polyline) -> float:
    d = np.abs(a.points[:, None] - b.points[None, :])
    return float(max(d.min(axis=1).max(), d.min(axis=0).max()))


def trace_boundary(grid, y=None, field_values=None, level: float = 0.0,
                   touch_delta: float | None = None) -> BoundaryTrace:
    """Zero contours of ``beta`` and touching curves of a sampled field.

    ``grid`` is a :class:`DensityGrid`, an ``(x, y, field)`` triple, or the
    ``x`` axis with ``y`` and ``field_values`` passed separately; the field
    is indexed ``[i, j]`` at ``(x[i], y[j])``.  Saddle cells are resolved by
    the mean of the four corners.  Closed curves are oriented with the
    support on the left, so outer boundaries run counter-clockwise.

    Touching curves are found as pairs of closed contours at level
    ``-touch_delta`` (default ``8 h^2`` for cell size ``h``) that stay within
    a few cells of each other with no zero contour between them.
    """
    x, yy, f = _field_of(grid, y, field_values)
    if f.shape != (x.size, yy.size):
        raise ValueError("field shape does not match the axes")
    cell = float(max(np.max(np.diff(x)), np.max(np.diff(yy))))
    finite = np.where(np.isfinite(f), f, -np.inf)
    # a tiny negative offset keeps round-off zeros from spawning loops
    eps = 1e-12 * max(1.0, float(np.max(np.abs(f[np.isfinite(f)]), initial=0)))
    contours, saddles = _march(x, yy, finite, level - eps)
    if saddles:
        log.info("resolved %d saddle cells by the centre value", saddles)
    delta = 8 * cell ** 2 if touch_delta is None else float(touch_delta)
    touching = []
    if delta > 0:
        low, _ = _march(x, yy, finite, level - delta)
        low = [c for c in low if c.closed and c.points.size >= 8]
        taken = set()
        for p in range(len(low)):
            for q in range(p + 1, len(low)):
                if p in taken or q in taken:
                    continue
                a, b = low[p], low[q]
                if _mean_distance(a, b) > 6 * cell:
                    continue
                if any(_mean_distance(c, a) < 2 * cell for c in contours
                       if c.points.size >= 4):
                    continue
                inner, outer = sorted((a, b), key=lambda c: abs(c.signed_area))
                near = np.abs(inner.points[:, None]
                              - outer.points[None, :]).argmin(axis=1)
                mid = 0.5 * (inner.points + outer.points[near])
                grid_pts = (x[:, None] + 1j * yy[None, :]).ravel()
                gap = np.min(np.abs(grid_pts[:, None] - mid[None, :]), axis=1)
                band = gap.reshape(finite.shape) < 2 * cell
                mb = float(np.max(finite[band])) if np.any(band) else level
                touching.append(TouchingCurve(Polyline(mid, True), inner,
                                              outer, delta, mb))
                taken.update((p, q))
    return BoundaryTrace(contours, touching, saddles, cell)


# ---------------------------------------------------- singular points

@dataclass(frozen=True, eq=False)
class SingularPoint:
    """A zero of ``beta`` with vanishing gradient and its normal form.

    ``K`` is the exponent of ``-beta ~ x^2 + tau y^K`` or ``None`` when no
    finite exponent was resolved.  ``probe_derivatives`` holds derivatives
    of ``beta`` of orders ``2..k_max`` along the valley through the point.
    """

    location: complex
    kind: str
    K: int | None
    tau: int
    hessian_eigs: tuple
    probe_derivatives: tuple = ()
    residuals: dict = field(default_factory=dict)

    @property
    def K_label(self) -> str:
        return "unresolved" if self.K is None else str(self.K)

    def to_json(self) -> dict:
        return {
            "location": [self.location.real, self.location.imag],
            "kind": self.kind,
            "K": self.K_label if self.K is None else self.K,
            "tau": self.tau,
            "hessian_eigs": list(self.hessian_eigs),
            "probe_derivatives": list(self.probe_derivatives),
            "residuals": dict(self.residuals),
        }


@dataclass(frozen=True)
class ClassifyOptions:
    """Thresholds of the normal-form classification.

    ``tol_h`` separates a nondegenerate Hessian eigenvalue from zero
    (relative to the larger one).  ``tol_d`` is the threshold on normalized
    valley coefficients.  ``span`` is the probe half-width relative to the
    distance to the nearest atom.
    """

    tol_h: float = 1e-6
    tol_d: float = 1e-5
    k_max: int = 8
    degree: int = 16
    nodes: int = 41
    span: float = 0.45
    fd_step: float = 1e-4
    cross_check: bool = True


DEFAULT_CLASSIFY = ClassifyOptions()


class ClassificationConflict(NumericalError):
    """Finite-difference and exact symmetric classification disagree."""

    def __init__(self, fd, exact):
        super().__init__(f"finite-difference type {fd} disagrees with the "
                         f"exact symmetric type {exact}")
        self.fd = fd
        self.exact = exact


def kind_from_type(K: int | None, tau: int) -> str:
    """Name of the singular-point class for the normal form of ``-beta``."""
    if K is None or tau == 0:
        return "internal_infinity"
    if tau == -1 or K % 2 == 1:
        return f"edge({K - 1})"
    return f"internal({K // 2})"


def _grad(profile, z):
    ev = beta_eval(profile, z)
    return ev.beta, gradient_xy(ev.grad)


def _hessian(profile, z, h):
    gxp = _grad(profile, z + h)[1]
    gxm = _grad(profile, z - h)[1]
    gyp = _grad(profile, z + 1j * h)[1]
    gym = _grad(profile, z - 1j * h)[1]
    H = np.column_stack([(gxp - gxm) / (2 * h), (gyp - gym) / (2 * h)])
    return 0.5 * (H + H.T)


def _atom_distance(profile, z) -> float:
    return float(np.min(np.abs(profile.deformation - z)))


def _scalar_field(profile, pts):
    """``beta`` and Cartesian gradient on an array of points."""
    t = profile.scalar_variance
    mu = profile.weights
    a = profile.deformation
    beta = beta_values(profile, pts)
    if t is not None:
        diff = a[None, :] - pts.ravel()[:, None]
        d = np.abs(diff) ** 2
        with np.errstate(divide="ignore", invalid="ignore"):
            b = 1.0 / (d - beta.ravel()[:, None])
            w = b * b * mu
            g = -(w * np.conj(diff)).sum(axis=1) / w.sum(axis=1)
        grad = np.stack([2 * g.real, -2 * g.imag], axis=-1)
        return beta, grad.reshape(pts.shape + (2,))
    grad = np.array([gradient_xy(beta_eval(profile, z).grad)
                     for z in pts.ravel()])
    return beta, grad.reshape(pts.shape + (2,))


def _newton_critical(profile, z, scale, max_iter=100):
    """Newton on ``grad beta = 0`` with a finite-difference Hessian."""
    h = 1e-4 * scale
    hist = []
    for it in range(max_iter):
        beta, g = _grad(profile, z)
        gn = float(np.hypot(*g))
        hist.append(gn)
        if gn < 1e-13 * max(1.0, scale):
            return z, beta, gn, it
        H = _hessian(profile, z, h)
        step = np.linalg.lstsq(H, -g, rcond=1e-12)[0]
        if not np.all(np.isfinite(step)):
            return z, beta, gn, it
        z = z + complex(step[0], step[1])
        if abs(complex(*step)) < 1e-14 * max(1.0, scale):
            beta, g = _grad(profile, z)
            return z, beta, float(np.hypot(*g)), it + 1
    beta, g = _grad(profile, z)
    return z, beta, float(np.hypot(*g)), max_iter


def find_singular_points(profile: AtomicProfile, window, seeds=None,
                         res: int = 64, beta_tol: float = 1e-8,
                         grad_tol: float = 1e-6, dedupe: float = 1e-6,
                         classify: bool = True,
                         options: ClassifyOptions = DEFAULT_CLASSIFY,
                         threads: int | None = None) -> list:
    """Zeros of ``beta`` with vanishing gradient inside ``window``.

    ``window`` is ``(xmin, xmax, ymin, ymax)``.  Without explicit ``seeds``
    the window is sampled on a ``res x res`` grid and the local minima of
    ``|grad beta|^2`` with small ``|beta|`` start Newton iterations.
    Diverging or non-qualifying seeds are dropped with a log entry.
    Degenerate critical points are only located to roughly
    ``grad_tol^(1/(K-1))``, so duplicates are merged within
    ``max(dedupe, 1e-2 * cell)``, both after Newton and after the
    classification has recentred them.
    """
    xmin, xmax, ymin, ymax = map(float, window)
    scale = max(xmax - xmin, ymax - ymin)
    cell = scale / (res - 1)
    if seeds is None:
        xs = np.linspace(xmin, xmax, res)
        ys = np.linspace(ymin, ymax, res)
        pts = xs[:, None] + 1j * ys[None, :]
        atoms = profile.deformation
        near = np.min(np.abs(pts[..., None] - atoms), axis=-1) < 0.5 * cell
        beta, grad = _scalar_field(profile, pts)
        g2 = np.where(near, np.inf, np.sum(grad ** 2, axis=-1))
        g2 = np.where(np.isfinite(g2), g2, np.inf)
        pad = np.pad(g2, 1, constant_values=np.inf)
        neigh = np.stack([pad[1 + di:res + 1 + di, 1 + dj:res + 1 + dj]
                          for di in (-1, 0, 1) for dj in (-1, 0, 1)
                          if di or dj])
        is_min = np.all(g2 <= neigh, axis=0) & np.isfinite(g2)
        small = np.abs(beta) < max(1e-3, 50 * cell ** 2) * max(1.0, scale)
        seeds = pts[is_min & small]
    seeds = [complex(s) for s in np.atleast_1d(seeds)]

    def run(seed):
        try:
            return seed, _newton_critical(profile, seed, scale)
        except (NumericalError, np.linalg.LinAlgError, ValueError) as exc:
            log.info("seed %s dropped: %s", seed, exc)
            return seed, None

    with ThreadPoolExecutor(max_workers=threads or 1) as pool:
        results = list(pool.map(run, seeds))
    found = []
    radius = max(dedupe, 1e-2 * cell)
    for seed, out in results:
        if out is None:
            continue
        z, beta, gn, iters = out
        inside = xmin - cell <= z.real <= xmax + cell and \
            ymin - cell <= z.imag <= ymax + cell
        if not (abs(beta) < beta_tol and gn <= grad_tol and inside):
            log.info("seed %s dropped: beta=%.2e |grad|=%.2e", seed, beta, gn)
            continue
        if any(abs(z - p[0]) < radius for p in found):
            continue
        found.append((z, beta, gn, iters))
    found.sort(key=lambda p: (round(p[0].real, 6), round(p[0].imag, 6)))
    points = []
    for z, beta, gn, iters in found:
        diag = {"beta": beta, "grad_norm": gn, "newton_iterations": iters}
        if classify:
            sp = classify_singularity(profile, z, options)
            # recentring can bring two located copies of one point together
            half = sp.residuals.get("probe_halfwidth", 0)
            near = max(radius, 0.05 * half)
            if any(abs(sp.location - q.location) < near for q in points):
                continue
            sp.residuals.update(diag)
        else:
            sp = SingularPoint(z, "unclassified", None, 0, (), (), diag)
        points.append(sp)
    return points


def _valley(profile, z0, e_pos, e_null, s, guess, lam, h_fd):
    """``min_x -beta(z0 + s e_null + x e_pos)`` by Newton in ``x``."""
    x = guess
    for _ in range(30):
        z = z0 + s * e_null + x * e_pos
        beta, g = _grad(profile, z)
        slope = -float(g @ [e_pos.real, e_pos.imag])
        step = slope / lam
        # refresh the curvature from a secant when far from the axis
        if abs(step) > 1e-3 * h_fd:
            z2 = z + h_fd * e_pos
            _, g2 = _grad(profile, z2)
            slope2 = -float(g2 @ [e_pos.real, e_pos.imag])
            curv = (slope2 - slope) / h_fd
            if curv > 0:
                step = slope / curv
        x -= step
        if abs(step) < 1e-15 * max(1.0, abs(x)) + 1e-300:
            break
    beta = beta_eval(profile, z0 + s * e_null + x * e_pos).beta
    return -beta, x


def classify_singularity(profile: AtomicProfile, point,
                         options: ClassifyOptions = DEFAULT_CLASSIFY
                         ) -> SingularPoint:
    """Normal form ``x^2 + tau y^K`` of ``-beta`` at a singular point.

    A nondegenerate Hessian gives ``K = 2``.  Otherwise ``-beta`` is
    minimized across the null direction, giving a one-variable valley
    function; its Taylor coefficients (least-squares fit on Chebyshev nodes,
    normalized by the transverse quadratic) yield ``K`` as the first order
    above ``tol_d`` and ``tau`` as its sign, with the null axis oriented
    towards ``+Im``.

    Raises
    ------
    NumericalError
        If both Hessian eigenvalues vanish, which the theory excludes.
    ClassificationConflict
        If an exact symmetric classification at 0 disagrees.
    """
    z0 = complex(point.location if isinstance(point, SingularPoint) else point)
    dist = _atom_distance(profile, z0)
    if dist == 0:
        raise ValueError("point is an atom of the deformation")
    h_fd = options.fd_step * dist
    H = -_hessian(profile, z0, h_fd)
    eigs, vecs = np.linalg.eigh(H)
    lam_small, lam_big = float(eigs[0]), float(eigs[1])
    if lam_big <= options.tol_h * max(1.0, abs(lam_small)):
        raise NumericalError(f"Hessian of -beta at {z0} has no positive "
                             f"eigenvalue ({lam_small:.3e}, {lam_big:.3e})")
    beta0, g0 = _grad(profile, z0)
    residuals = {"beta": beta0, "grad_norm": float(np.hypot(*g0)),
                 "laplacian_beta": -(lam_small + lam_big)}
    hess = (-lam_big, -lam_small)
    if abs(lam_small) > options.tol_h * max(1.0, lam_big):
        K, tau = 2, int(np.sign(lam_small))
        probes = (-lam_small,)
        sp = SingularPoint(z0, kind_from_type(K, tau), K, tau, hess, probes,
                           residuals)
    else:
        e_pos = complex(*vecs[:, 1])
        e_null = complex(*vecs[:, 0])
        if e_null.imag < 0 or (abs(e_null.imag) < 1e-12 and e_null.real < 0):
            e_null = -e_null
        h = options.span * dist
        moved_by = 0.0
        # a shifted centre is refitted so the type comes from a centred fit
        for _ in range(4):
            coef = _valley_fit(profile, z0, e_pos, e_null, h, lam_big, h_fd,
                               options)
            norm = coef / (0.5 * lam_big * h * h)
            K, tau, shift, norm = _valley_order(norm, options)
            if not shift:
                break
            _, x_off = _valley(profile, z0, e_pos, e_null, shift * h, 0.0,
                               lam_big, h_fd)
            z0 = z0 + shift * h * e_null + x_off * e_pos
            moved_by += shift * h
            coef = norm * (0.5 * lam_big * h * h)
        if K is not None and K % 2 == 0 and K > 2 and norm[K] != 0:
            # sub-tolerance odd term left by the locating Newton
            polish = -norm[K - 1] / (K * norm[K])
            if abs(polish) <= 0.1:
                _, x_off = _valley(profile, z0, e_pos, e_null, polish * h,
                                   0.0, lam_big, h_fd)
                z0 = complex(z0 + polish * h * e_null + x_off * e_pos)
                moved_by += polish * h
        if moved_by:
            residuals["recentre_shift"] = moved_by
        probes = tuple(-math.factorial(k) * coef[k] / h ** k
                       for k in range(2, options.k_max + 1))
        residuals["valley_coefficients"] = [float(c) for c in
                                            norm[:options.k_max + 1]]
        residuals["probe_halfwidth"] = h
        kind = kind_from_type(K, tau)
        if K is None:
            residuals["tentative"] = True
        sp = SingularPoint(z0, kind, K, tau, hess, probes, residuals)
    if options.cross_check:
        exact = _exact_type(profile, z0)
        if exact is not None and sp.K is not None:
            fd_type = (sp.K, sp.tau)
            same = exact[0] == sp.K and (exact[1] == sp.tau or sp.K % 2 == 1)
            if not same:
                raise ClassificationConflict(fd_type, exact)
            sp.residuals["symmetric_check"] = list(exact)
    return sp


def _valley_fit(profile, z0, e_pos, e_null, h, lam_big, h_fd, options):
    """Power coefficients of the valley function on ``[-h, h]``."""
    u = np.cos(np.pi * (np.arange(options.nodes) + 0.5) / options.nodes)
    vals = np.empty(options.nodes)
    for k in np.argsort(np.abs(u)):
        vals[k], _ = _valley(profile, z0, e_pos, e_null, u[k] * h, 0.0,
                             lam_big, h_fd)
    cheb = np.polynomial.chebyshev.Chebyshev.fit(u, vals, options.degree,
                                                 domain=[-1, 1])
    coef = cheb.convert(kind=np.polynomial.Polynomial).coef
    return np.pad(coef, (0, max(0, options.degree + 1 - coef.size)))


def _valley_order(norm, options, max_shift: float = 0.1):
    """First order above ``tol_d`` of the normalized valley coefficients.

    A located point is off by a small ``u0`` along the valley, which turns
    ``c_m u^m`` into spurious lower terms led by ``m c_m u0 u^(m-1)``.  If
    some higher order ``m`` explains every lower coefficient by the shift
    ``u0 = -c_(m-1)/(m c_m)`` with ``|u0| <= max_shift``, the polynomial is
    recentred there and ``m`` is returned with ``u0``.
    """
    tol, k_max = options.tol_d, options.k_max
    first = next((k for k in range(3, k_max + 1) if abs(norm[k]) > tol),
                 None)
    if first is None:
        return None, 0, 0.0, norm
    poly = np.polynomial.Polynomial(norm)
    for m in range(first + 1, k_max + 1):
        if abs(norm[m]) <= tol:
            continue
        u0 = -norm[m - 1] / (m * norm[m])
        if abs(u0) > max_shift:
            continue
        moved = poly(np.polynomial.Polynomial([u0, 1.0])).coef
        moved = np.pad(moved, (0, max(0, norm.size - moved.size)))
        if np.all(np.abs(moved[3:m]) <= tol):
            return m, int(np.sign(moved[m])), float(u0), moved
    return first, int(np.sign(norm[first])), 0.0, norm


def _exact_type(profile, z0, k_max: int = 12):
    """Exact type for constant kernels with a vertical symmetry axis.

    The point is re-located on the axis from the closed-form derivatives:
    for a type of order ``k`` the derivative of order ``k - 1`` has a simple
    root there, so the order-``k`` derivative is clearly nonzero at the
    Newton limit.  At a multiple root it is not, and higher orders are tried.
    """
    t = profile.scalar_variance
    if t is None:
        return None
    atoms, masses = profile.deformation, profile.weights
    axis = float(masses @ atoms.real)
    if abs(z0.real - axis) > 1e-6 * max(1.0, abs(z0)):
        return None
    if not _is_mirror_symmetric(atoms - axis, masses):
        return None

    def ders(y, order):
        return f_axis_derivatives((atoms, masses), order, axis + 1j * y)

    for k in range(2, k_max + 1):
        y = z0.imag
        for _ in range(60):
            d = ders(y, k)
            if d[k - 1] == 0:
                break
            step = d[k - 2] / d[k - 1]
            y -= step
            if abs(step) < 1e-15 * max(1.0, abs(y)):
                break
        bound = math.factorial(k) * float(
            np.sum(masses / np.abs(atoms - axis - 1j * y) ** (k + 2)))
        simple = abs(ders(y, k)[k - 1]) > 1e-6 * bound
        if not simple or abs(y - z0.imag) > 1e-3 * max(1.0, abs(z0)):
            continue
        try:
            exact = symmetric_classify(
                (atoms - (axis + 1j * y), masses), 1.0 / t, zero_tol=1e-8)
        except ValueError:
            continue
        if exact[0] == k:
            return exact
    return None


def _is_mirror_symmetric(atoms, masses, tol=1e-12) -> bool:
    for a, m in zip(atoms, masses):
        mirror = -a.conjugate()
        k = np.argmin(np.abs(atoms - mirror))
        if abs(atoms[k] - mirror) > tol * max(1.0, abs(a)) or \
                abs(masses[k] - m) > tol:
            return False
    return True


def symmetric_classify(nu, threshold: float, k_max: int = 16,
                       zero_tol: float = 1e-10) -> tuple[int, int]:
    """Exact ``(K, tau)`` at 0 for ``nu`` symmetric under ``z -> -conj(z)``.

    Uses the closed forms of the imaginary-axis derivatives of ``f``.  A
    derivative counts as zero below ``zero_tol`` times
    ``k! sum nu_i / |a_i|^(k+2)``.

    Raises
    ------
    ValueError
        If ``nu`` is not symmetric, ``f(0)`` differs from ``threshold``,
        the first derivative does not vanish, the curvature across the
        axis is not positive, or no order up to ``k_max`` is nonzero.
    """
    if isinstance(nu, AtomMeasure):
        atoms, masses = nu.atoms, nu.masses
    else:
        atoms, masses = (np.asarray(v) for v in nu)
    if not _is_mirror_symmetric(atoms, masses):
        raise ValueError("measure is not symmetric under z -> -conj(z)")
    f0 = f_eval((atoms, masses), 0.0)
    if abs(f0 - threshold) > 1e-8 * max(1.0, threshold):
        raise ValueError(f"f(0) = {f0!r} differs from threshold {threshold!r}")
    ders = f_axis_derivatives((atoms, masses), k_max)
    radii = np.abs(atoms)
    bounds = [math.factorial(k) * float(np.sum(masses / radii ** (k + 2)))
              for k in range(1, k_max + 1)]
    if abs(ders[0]) > zero_tol * bounds[0]:
        raise ValueError("first derivative along the axis does not vanish")
    # the axis must be the null direction: f_xx = lap f - f_yy > 0
    across = 4 * float(np.sum(masses / radii ** 4)) - ders[1]
    if across <= 1e-6 * bounds[1]:
        raise ValueError("curvature across the axis vanishes; the axis is "
                         "not the degenerate direction")
    for k in range(2, k_max + 1):
        if abs(ders[k - 1]) > zero_tol * bounds[k - 1]:
            return k, int(np.sign(ders[k - 1]))
    raise ValueError(f"no nonzero derivative up to order {k_max}")
