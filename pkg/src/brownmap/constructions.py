"""Example catalog, the function f and deformations with prescribed singularities.

For a constant kernel ``t`` and deformation with spectral measure ``nu``, the
support is ``{f > 1/t}`` with ``f(z) = sum_i nu_i / |z - a_i|^2``.  The even
and odd constructions solve truncated moment problems whose solutions make
``f - f(0)`` vanish to a prescribed order along the imaginary axis.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import NumericalError
from .model import AtomicProfile, AtomMeasure, profile_from_measure

__all__ = [
    "ExampleSpec",
    "ExpectedPoint",
    "MomentSolution",
    "CATALOG",
    "f_eval",
    "f_axis_derivatives",
    "inverse_square_axis_derivative",
    "f_a_atoms",
    "g_a_atoms",
    "even_base",
    "construct_even",
    "odd_base",
    "construct_odd",
    "make_example",
    "merge_atoms",
]


def _atoms_weights(nu):
    if isinstance(nu, AtomMeasure):
        return nu.atoms, nu.masses
    atoms, weights = nu
    return np.asarray(atoms, complex), np.asarray(weights, float)


def merge_atoms(atoms, weights, tol: float = 1e-14):
    """Combine coinciding atoms by adding their weights."""
    atoms = np.asarray(atoms, complex)
    weights = np.asarray(weights, float)
    out_a: list[complex] = []
    out_w: list[float] = []
    for a, w in zip(atoms, weights):
        for i, b in enumerate(out_a):
            if abs(a - b) <= tol * max(1.0, abs(a)):
                out_w[i] += w
                break
        else:
            out_a.append(complex(a))
            out_w.append(float(w))
    return np.array(out_a), np.array(out_w)


def f_eval(nu, zeta):
    """``sum_i w_i / |zeta - a_i|^2``; ``inf`` at atoms.

    ``nu`` is an :class:`AtomMeasure` or an ``(atoms, weights)`` pair, the
    latter allowing unnormalized weights.
    """
    atoms, weights = _atoms_weights(nu)
    z = np.asarray(zeta, complex)
    d = np.abs(z[..., None] - atoms) ** 2
    with np.errstate(divide="ignore"):
        val = (weights / d).sum(axis=-1)
    return float(val) if val.ndim == 0 else val


def inverse_square_axis_derivative(w: complex, k: int) -> float:
    """``d^k/dy^k`` of ``1/|w|^2`` where ``w`` moves as ``w + i y``.

    Leibniz applied to ``1/(w conj(w))`` gives
    ``k! i^k sum_l (-1)^l w^-(l+1) conj(w)^-(k-l+1)``, which stays finite for
    ``Re w = 0`` unlike the simplified quotient forms.
    """
    w = complex(w)
    if w == 0:
        raise ValueError("derivative undefined at the pole")
    wb = w.conjugate()
    total = sum((-1) ** l * w ** (-(l + 1)) * wb ** (-(k - l + 1))
                for l in range(k + 1))
    return float((math.factorial(k) * 1j ** k * total).real)


def f_axis_derivatives(nu, order_max: int, at: complex = 0.0) -> np.ndarray:
    """``[d^k f / d(Im z)^k at z = at for k = 1..order_max]``.

    Raises
    ------
    ValueError
        If ``at`` is an atom.
    """
    atoms, weights = _atoms_weights(nu)
    if np.any(atoms == at):
        raise ValueError("evaluation point is an atom")
    w = complex(at) - atoms
    return np.array([sum(m * inverse_square_axis_derivative(x, k)
                         for x, m in zip(w, weights))
                     for k in range(1, order_max + 1)])


def g_a_atoms(a: complex):
    """Atoms and weights of ``g_a = (|z + 1/a|^-2 + |z - 1/conj(a)|^-2)/2``."""
    a = complex(a)
    return np.array([-1 / a, 1 / a.conjugate()]), np.array([0.5, 0.5])


def f_a_atoms(a: complex):
    """Atoms and weights of ``f_a = (g_a + g_conj(a))/2`` (merged)."""
    a = complex(a)
    at = [-1 / a, 1 / a.conjugate(), -1 / a.conjugate(), 1 / a]
    return merge_atoms(at, [0.25] * 4)


# ---------------------------------------------------------------- catalog

@dataclass(frozen=True)
class ExpectedPoint:
    location: complex
    kind: str
    K: int | None
    tau: int


@dataclass(frozen=True, eq=False)
class ExampleSpec:
    """Named catalog entry with its measure, variance and known features."""

    name: str
    nu: AtomMeasure
    t: float
    expected: tuple = ()
    boundary_radii: tuple = ()
    notes: str = ""

    @property
    def profile(self) -> AtomicProfile:
        return profile_from_measure(self.nu, self.t)


Y3_DELTA = (-17 + 7 * math.sqrt(7)) / 8
Y3_T = 2 / 3 * (20 - 7 * math.sqrt(7))
Y3_POINT = 1j * (math.sqrt(7) - 2) / 3


def _circular(**_):
    return ExampleSpec("circular", AtomMeasure([0j], [1.0]), 1.0, (),
                       (1.0,), "a = 0, s = 1: uniform law on the unit disk")


def _x2_minus_y2(**_):
    nu = AtomMeasure([1, -1], [0.5, 0.5])
    return ExampleSpec("x2_minus_y2", nu, 1.0,
                       (ExpectedPoint(0j, "edge(1)", 2, -1),))


def _x2_plus_y2(**_):
    r = 1 / math.sqrt(2)
    atoms = [r * (1 + 1j), r * (1 - 1j), r * (-1 + 1j), -r * (1 + 1j)]
    nu = AtomMeasure(atoms, [0.25] * 4)
    return ExampleSpec("x2_plus_y2", nu, 1.0,
                       (ExpectedPoint(0j, "internal(1)", 2, 1),),
                       notes="t = 1 makes f(0) = 1/t at the origin")


def _x2_y3(**_):
    d = Y3_DELTA
    nu = AtomMeasure([1, -1, 1j], np.array([1, 1, d]) / (2 + d))
    return ExampleSpec("x2_y3", nu, Y3_T,
                       (ExpectedPoint(Y3_POINT, "edge(2)", 3, None),))


def _x2_y4(**_):
    s3 = math.sqrt(3)
    nu = AtomMeasure([s3 + 1j, s3 - 1j, -s3 + 1j, -s3 - 1j], [0.25] * 4)
    return ExampleSpec("x2_y4", nu, 4.0,
                       (ExpectedPoint(0j, "edge(3)", 4, -1),))


def _x2_infinity(circle_atoms: int = 256, **_):
    k = int(circle_atoms)
    if k < 8:
        raise ValueError("need at least 8 circle atoms")
    # midpoints of a uniform split of the parameter interval
    theta = 2 * math.pi * (np.arange(k) + 0.5) / k
    atoms = np.concatenate([math.sqrt(2) * np.exp(1j * theta), [0j]])
    masses = np.concatenate([np.full(k, 0.5 / k), [0.5]])
    nu = AtomMeasure(atoms, masses)
    return ExampleSpec("x2_infinity", nu, 1.0,
                       (ExpectedPoint(1 + 0j, "internal_infinity", None, 0),),
                       (1.0, math.sqrt((3 + math.sqrt(5)) / 2)),
                       "the unit circle is a curve of zeros of the density")


CATALOG = {
    "circular": _circular,
    "x2": _circular,
    "x2_minus_y2": _x2_minus_y2,
    "x2_plus_y2": _x2_plus_y2,
    "x2_y3": _x2_y3,
    "x2_y4": _x2_y4,
    "x2_infinity": _x2_infinity,
}


def make_example(name: str, **options) -> tuple[AtomicProfile, ExampleSpec]:
    """Profile and catalog entry for a named example.

    ``x2`` is an alias of ``circular``.  ``x2_infinity`` accepts
    ``circle_atoms`` (default 256).
    """
    try:
        builder = CATALOG[name]
    except KeyError:
        raise KeyError(f"unknown example {name!r}; known: "
                       f"{', '.join(sorted(CATALOG))}") from None
    spec = builder(**options)
    return spec.profile, spec


# ---------------------------------------------------------- constructions

@dataclass(frozen=True, eq=False)
class MomentSolution:
    """Positive masses ``c`` and first-quadrant points ``z``.

    ``kind`` is ``"even"`` or ``"odd"``.  For the even case ``tau`` is the
    sign of the ``y^(2n)`` term of ``f``; the odd case always ends with a
    negative ``y^(2n+1)`` term.
    """

    kind: str
    n: int
    tau: int
    c: np.ndarray
    z: np.ndarray
    residuals: dict = field(default_factory=dict)

    def moments(self, m: int) -> complex:
        return complex(np.sum(self.c * self.z ** m))

    def raw_f(self):
        """Unnormalized ``(atoms, weights)`` of the assembled ``f``."""
        w = self.c * self.z.real / np.abs(self.z) ** 2
        if self.kind == "even":
            atoms, weights = [], []
            for zi, wi in zip(self.z, w):
                a, m = f_a_atoms(zi)
                atoms.extend(a)
                weights.extend(wi * m)
            return merge_atoms(atoms, weights)
        atoms, weights = [-1j], [1.0]
        for zi, wi in zip(self.z, w):
            a, m = g_a_atoms(zi)
            atoms.extend(a)
            weights.extend(wi * m)
        return merge_atoms(atoms, weights)

    def measure(self) -> AtomMeasure:
        """Probability measure with ``f(0) = 1`` realizing the singularity.

        Weights are normalized and the atoms dilated by ``sqrt(f(0))``, which
        rescales ``f`` without changing its singularity type at 0.
        """
        atoms, weights = self.raw_f()
        weights = weights / weights.sum()
        f0 = f_eval((atoms, weights), 0.0)
        return AtomMeasure(atoms * math.sqrt(f0), weights)

    def expected(self) -> tuple[int, int]:
        """(K, tau) of ``-beta`` at 0 for the assembled profile."""
        if self.kind == "even":
            return 2 * self.n, self.tau
        return 2 * self.n + 1, -1


def _in_quadrant(z) -> bool:
    return bool(np.all(z.real > 0) and np.all(z.imag > 0))


def _distinct(z, tol=1e-8) -> bool:
    """Pairwise separation relative to the larger modulus of each pair."""
    d = np.abs(z[:, None] - z[None, :])
    size = np.maximum(np.abs(z)[:, None], np.abs(z)[None, :])
    np.fill_diagonal(d, np.inf)
    return bool(np.all(d > tol * size))


def _complex_newton(func, jac, w0, steps=50, tol=1e-14, scale=1.0):
    """Undamped Newton for a square holomorphic system.

    Stops once the residual is below ``tol * scale``.
    """
    w = np.array(w0, complex)
    for _ in range(steps):
        r = func(w)
        if np.max(np.abs(r)) <= tol * scale:
            return w, float(np.max(np.abs(r)))
        try:
            w = w - np.linalg.solve(jac(w), r)
        except np.linalg.LinAlgError:
            return w, math.inf
        if not np.all(np.isfinite(w)):
            return w, math.inf
    r = func(w)
    return w, float(np.max(np.abs(r)))


def _tracked_newton(func, jac, w0, extra, steps=50, tol=1e-14,
                    min_step=1e-4, scale=1.0):
    """Solve ``func(w) + extra = 0`` by continuation from ``func(w0) = 0``.

    The perturbation is switched on as ``s * extra`` with ``s`` going from 0
    to 1; each stage is an undamped Newton solve with a ``steps`` budget and
    the stage length adapts to convergence.  Residuals are judged relative
    to ``scale``, the size of the equations' right-hand sides.
    """
    w = np.array(w0, complex)
    scale = max(scale, float(np.max(np.abs(extra))), 1.0)
    s, ds = 0.0, 1.0
    res = math.inf
    while s < 1.0:
        s_next = min(1.0, s + ds)
        w_try, res = _complex_newton(lambda v: func(v) + s_next * extra,
                                     jac, w, steps, tol, scale)
        if np.isfinite(res) and res <= 1e-12 * scale:
            w, s = w_try, s_next
            ds *= 2
        else:
            ds /= 2
            if ds < min_step:
                return w, math.inf
    return w, res


def _admissible_mid(sign_low: int, order_low: int, sign_high: int,
                    order_high: int, samples: int = 20001) -> float | None:
    """Mid-angle of the widest arc in (0, pi/2) meeting both sign conditions."""
    th = np.linspace(0, math.pi / 2, samples)[1:-1]
    ok = ((np.sign(np.cos(order_low * th)) == sign_low)
          & (np.sign(np.cos(order_high * th)) == sign_high))
    if not np.any(ok):
        return None
    best, best_len, start = None, 0, None
    for i, flag in enumerate(np.append(ok, False)):
        if flag and start is None:
            start = i
        elif not flag and start is not None:
            if i - start > best_len:
                best_len, best = i - start, (start, i - 1)
            start = None
    return float(0.5 * (th[best[0]] + th[best[1]]))


def _even_moment(c, z, k):
    return np.sum(c * z ** (2 * k + 1))


def even_base(sign: int) -> tuple[np.ndarray, np.ndarray]:
    """One mass and first-quadrant point with ``c Re z^3 = sign``."""
    if sign not in (-1, 1):
        raise ValueError("sign must be -1 or +1")
    theta = math.pi / 12 if sign > 0 else math.pi / 3
    mod = (1 / abs(math.cos(3 * theta))) ** (1 / 3)
    return np.array([1.0]), np.array([mod * np.exp(1j * theta)])


def construct_even(n: int, tau: int, r0: float = 0.5, shrink: float = 0.5,
                   newton_steps: int = 50, max_shrinks: int = 40
                   ) -> MomentSolution:
    """Masses and points with ``Re sum c z^(2k+1) = 0`` for ``k < n``.

    The top moment ``Re sum c z^(2n+1)`` is normalized to ``(-1)^n tau``, so
    the assembled ``f`` is of type ``x^2 + tau y^(2n)`` at 0.

    Raises
    ------
    NumericalError
        If Newton fails for every radius in the shrink budget.
    """
    if n < 2 or tau not in (-1, 1):
        raise ValueError("need n >= 2 and tau in {-1, +1}")
    final_sign = (-1) ** n * tau
    c, z = even_base(1)
    for m in range(2, n + 1):
        top = _even_moment(c, z, m - 1).real
        s_prev = int(np.sign(top))
        want = final_sign if m == n else None
        choices = [want] if want is not None else [1, -1]
        arcs = [(s, _admissible_mid(-s_prev, 2 * m - 1, s, 2 * m + 1))
                for s in choices]
        arcs = [(s, a) for s, a in arcs if a is not None]
        if not arcs:
            raise NumericalError(f"no admissible angle at step {m}")
        sign_m, ang = arcs[0]
        omega = np.exp(1j * ang)
        norm = abs((omega ** (2 * m - 1)).real)
        r = r0
        for _ in range(max_shrinks):
            z_new = omega / r
            c_new = r ** (2 * m - 1) / norm
            ks = np.arange(1, m)
            targets = np.array([_even_moment(c, z, k) - c_new
                                * z_new ** (2 * k + 1) for k in ks])
            targets[-1] += c_new * z_new ** (2 * m - 1)

            def func(w, ks=ks, targets=targets):
                return np.array([_even_moment(c, w, k) for k in ks]) - targets

            def jac(w, ks=ks):
                return np.array([(2 * k + 1) * c * w ** (2 * k) for k in ks])

            # large trial points may overflow; they are screened by residual
            with np.errstate(over="ignore", invalid="ignore"):
                w, res = _complex_newton(func, jac, z, newton_steps)
            zz = np.append(w, z_new)
            cc = np.append(c, c_new)
            top_new = _even_moment(cc, zz, m).real
            if (res < 1e-9 and _in_quadrant(zz) and _distinct(zz)
                    and np.sign(top_new) == sign_m):
                z, c = zz, cc / abs(top_new)
                break
            r *= shrink
        else:
            raise NumericalError(f"even construction failed at step {m} "
                                 f"(last residual {res:.2e})")
    residuals = {f"Re m{2 * k + 1}": float(_even_moment(c, z, k).real)
                 for k in range(1, n + 1)}
    return MomentSolution("even", n, tau, c, z, residuals)


def _odd_conditions(c, z, n):
    """Defects of the odd-case identities for k = 1..n and the slack."""
    out = {}
    for k in range(1, n + 1):
        s = (-1) ** (k + 1)
        out[f"Im m{2 * k}"] = float(s * np.sum(c * z ** (2 * k)).imag - 2 * k)
        out[f"Re m{2 * k + 1}"] = float(s * np.sum(c * z ** (2 * k + 1)).real
                                        - (2 * k + 1))
    out["slack"] = float(2 * (n + 1) - (-1) ** n
                         * np.sum(c * z ** (2 * n + 2)).imag)
    return out


def _extra_point(z):
    """A first-quadrant point well separated from the existing ones."""
    scale = float(np.median(np.abs(z)))
    best, best_d = None, -1.0
    for ang in np.linspace(0.1, 1.47, 15):
        for rad in (0.5, 0.8, 1.2):
            p = rad * scale * np.exp(1j * ang)
            dist = float(np.min(np.abs(z - p)))
            if dist > best_d:
                best, best_d = p, dist
    return best


def odd_base() -> tuple[np.ndarray, np.ndarray]:
    """Mass and point with ``c Im z^2 = 2`` and ``c Re z^3 = 3``."""
    z = 0.75 * math.sqrt(2) * np.exp(1j * math.pi / 12)
    return np.array([32 / 9]), np.array([z])


def construct_odd(n: int, r0: float = 0.5, shrink: float = 0.5,
                  newton_steps: int = 50, max_shrinks: int = 40,
                  delta0: float = 0.5) -> MomentSolution:
    """Masses and ``2n+2`` points solving the odd-case moment identities.

    ``(-1)^(k+1) Im sum c z^(2k) = 2k`` and
    ``(-1)^(k+1) Re sum c z^(2k+1) = 2k+1`` for ``k = 1..n``, with
    ``(-1)^n Im sum c z^(2n+2) < 2n+2``.
    """
    if n < 1:
        raise ValueError("need n >= 1")
    (c0,), (z0,) = odd_base()
    delta = delta0
    for _ in range(max_shrinks):
        extras = np.array([np.exp(1j * a) for a in
                           (3 * math.pi / 8, math.pi / 4, 7 * math.pi / 16)])

        def func(v, extras=extras, delta=delta):
            w = v[0] + 1j * v[1]
            zz = np.append(w, extras)
            cc = np.append(c0, np.full(3, delta))
            return np.array([np.sum(cc * zz ** 2).imag - 2,
                             np.sum(cc * zz ** 3).real - 3])

        v = np.array([z0.real, z0.imag])
        for _ in range(newton_steps):
            r = func(v)
            if np.max(np.abs(r)) < 1e-14:
                break
            w = v[0] + 1j * v[1]
            g2, g3 = 2 * c0 * w, 3 * c0 * w ** 2
            J = np.array([[g2.imag, g2.real], [g3.real, -g3.imag]])
            v = v - np.linalg.solve(J, r)
        z = np.append(v[0] + 1j * v[1], extras)
        c = np.append(c0, np.full(3, delta))
        cond = _odd_conditions(c, z, 1)
        if (max(abs(cond["Im m2"]), abs(cond["Re m3"])) < 1e-12
                and cond["slack"] > 0 and _in_quadrant(z) and _distinct(z)):
            break
        delta *= 0.5
    else:
        raise NumericalError("odd construction failed in the base case")

    for m in range(2, n + 1):
        # rejected trial radii may overflow; they are screened by residual
        with np.errstate(over="ignore", invalid="ignore"):
            z, c = _odd_step(m, c, z, r0, shrink, newton_steps, max_shrinks,
                             delta0)
    return MomentSolution("odd", n, -1, c, z, _odd_conditions(c, z, n))


def _odd_step(n, c, z, r0, shrink, newton_steps, max_shrinks, delta0):
    """Extend a solution for ``n - 1`` with two new points.

    First the point ``e^(i phi)/r`` with mass ``alpha r^(2n)`` is added and the
    old points re-solved, shrinking ``r``; then a point of small mass
    ``delta`` is added and the old points re-solved again, shrinking
    ``delta``.
    """
    sgn = (-1) ** (n + 1)
    phi_star = math.pi / 2 - math.pi / (2 * n + 1)
    F2n = np.sum(c * z ** (2 * n))
    F2n1 = np.sum(c * z ** (2 * n + 1))
    sigma = int(np.sign(sgn * F2n1.real - (2 * n + 1)))
    alpha_star = ((2 * n + (-1) ** n * F2n.imag)
                  / math.sin(math.pi / (2 * n + 1)))
    if alpha_star <= 0:
        raise NumericalError("inductive inequality violated")
    ms = np.arange(2, 2 * n + 2)
    base = np.array([np.sum(c * z ** m) for m in ms])

    def solve_old(extra):
        def func(w):
            return np.array([np.sum(c * w ** m) for m in ms]) - base

        def jac(w):
            return np.array([m * c * w ** (m - 1) for m in ms])

        return _tracked_newton(func, jac, z, extra, newton_steps,
                               scale=float(np.max(np.abs(base))))

    def acceptable(zz, cc, res):
        if not np.isfinite(res) or not (_in_quadrant(zz) and _distinct(zz)):
            return False
        cond = _odd_conditions(cc, zz, n)
        worst = max(abs(v) for k, v in cond.items() if k != "slack")
        return worst < 1e-9 and cond["slack"] > 0

    r, res, found = r0, math.inf, None
    for _ in range(max_shrinks):
        alpha, phi = _alpha_phi(n, sgn, F2n, F2n1, alpha_star, phi_star, r,
                                newton_steps)
        ok_side = sigma == 0 or np.sign(phi - phi_star) == sigma
        if alpha > 0 and 0 < phi < math.pi / 2 and ok_side:
            z_new = np.exp(1j * phi) / r
            c_new = alpha * r ** (2 * n)
            lower = c_new * z_new ** ms
            lower[-2:] = 0
            w, res = solve_old(lower)
            zz, cc = np.append(w, z_new), np.append(c, c_new)
            if acceptable(zz, cc, res):
                found = (z_new, c_new, lower)
                break
        r *= shrink
    if found is None:
        raise NumericalError(f"odd construction failed at step {n} "
                             f"(last residual {res:.2e})")
    z_new, c_new, lower = found
    z_extra = _extra_point(np.append(z, z_new))
    delta = delta0 * float(np.min(c))
    for _ in range(max_shrinks):
        w, res = solve_old(lower + delta * z_extra ** ms)
        zz = np.concatenate([w, [z_new, z_extra]])
        cc = np.concatenate([c, [c_new, delta]])
        if acceptable(zz, cc, res):
            return zz, cc
        delta *= shrink
    raise NumericalError(f"odd construction failed adding the point of "
                         f"small mass at step {n} (last residual {res:.2e})")


def _alpha_phi(n, sgn, F2n, F2n1, alpha, phi, r, steps):
    """Solve the two top identities for the new point's (alpha, phi)."""
    x = np.array([alpha, phi])
    for _ in range(steps):
        a, ph = x
        e1 = sgn * (F2n.imag + a * math.sin(2 * n * ph)) - 2 * n
        e2 = sgn * (F2n1.real + a / r * math.cos((2 * n + 1) * ph)) \
            - (2 * n + 1)
        if max(abs(e1), abs(e2)) < 1e-14 * max(1.0, a / r):
            break
        J = sgn * np.array([
            [math.sin(2 * n * ph), 2 * n * a * math.cos(2 * n * ph)],
            [math.cos((2 * n + 1) * ph) / r,
             -(2 * n + 1) * a / r * math.sin((2 * n + 1) * ph)]])
        x = x - np.linalg.solve(J, [e1, e2])
    return float(x[0]), float(x[1])
