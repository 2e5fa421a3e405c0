"""Acceptance criteria, one test each, printing a PASS/FAIL line.

Run directly (``python3 tests/test_acceptance.py``) or through pytest; the
summary lines bypass output capture so they appear in the test log.
"""

import math
import time

import numpy as np
import pytest

from brownmap import (compare, construct_even, construct_odd, density_grid,
                      edge_sigma, find_singular_points, laplacian_check,
                      make_example, profile_from_measure, sample_spectrum,
                      sigma_at, solve_dyson, solve_edge_cubic, solve_kappa,
                      symmetric_classify, trace_boundary)
from brownmap.constructions import Y3_DELTA, Y3_POINT, Y3_T, f_eval
from brownmap.density import beta_grid, support_radius
from brownmap.spectral import beta_eval, beta_values, edge_cubic_coefficients


class Check:
    """Collects named conditions of one criterion."""

    def __init__(self, label):
        self.label = label
        self.failed = []
        self.start = time.perf_counter()

    def require(self, cond, what):
        if not cond:
            self.failed.append(what)

    def within(self, limit):
        took = time.perf_counter() - self.start
        self.require(took < limit, f"runtime {took:.1f}s >= {limit}s")
        return took

    def line(self):
        took = time.perf_counter() - self.start
        status = "PASS" if not self.failed else "FAIL"
        detail = "" if not self.failed else ": " + "; ".join(self.failed)
        return f"{status} {self.label} ({took:.1f}s){detail}"


@pytest.fixture
def check(request, capsys):
    checks = []

    def make(label):
        checks.append(Check(label))
        return checks[-1]

    yield make
    for c in checks:
        with capsys.disabled():
            print("\n" + c.line())
    assert all(not c.failed for c in checks), [c.line() for c in checks]


def bulk_points(profile, count, seed, depth=0.05):
    rng = np.random.default_rng(seed)
    r = support_radius(profile)
    c = complex(profile.weights @ profile.deformation)
    pts = c + rng.uniform(-r, r, 40 * count) + 1j * rng.uniform(-r, r,
                                                                40 * count)
    return pts[beta_values(profile, pts) < -depth][:count]


def test_criterion_01_circular_law(check):
    c = check("1 circular law oracle")
    profile, _ = make_example("circular")
    rng = np.random.default_rng(1)
    pts = rng.uniform(-2, 2, 20) + 1j * rng.uniform(-2, 2, 20)
    err = np.max(np.abs(beta_values(profile, pts) - (np.abs(pts) ** 2 - 1)))
    c.require(err <= 1e-8, f"beta error {err:.2e}")
    radius = np.sqrt(rng.uniform(0, 0.95 ** 2, 50))
    inner = radius * np.exp(2j * math.pi * rng.uniform(size=50))
    sig = np.array([sigma_at(profile, z) for z in inner])
    c.require(np.max(np.abs(sig - 1 / math.pi)) <= 1e-3, "sigma off 1/pi")
    grid = density_grid(profile, (-1.5, 1.5, -1.5, 1.5), 300, 300)
    c.require(abs(grid.mass - 1) <= 0.01, f"mass {grid.mass:.4f}")
    trace = trace_boundary(grid)
    cell = 3.0 / 300
    dist = max(np.max(np.abs(np.abs(p.points) - 1)) for p in trace.contours)
    c.require(len(trace.contours) == 1 and dist <= 2 * cell,
              f"boundary distance {dist:.3g}")
    c.within(30)


def test_criterion_02_saddle_example(check):
    c = check("2 x^2 - y^2 example")
    profile, _ = make_example("x2_minus_y2")
    pts = find_singular_points(profile, (-2.5, 2.5, -2.5, 2.5))
    c.require(len(pts) == 1, f"{len(pts)} singular points")
    if pts:
        sp = pts[0]
        c.require(abs(sp.location) < 1e-6, f"location {sp.location}")
        c.require((sp.kind, sp.K, sp.tau) == ("edge(1)", 2, -1),
                  f"type {sp.kind} {sp.K} {sp.tau}")
    c.require(edge_sigma(profile, 0) < 1e-6, "edge density at 0")
    kappa = solve_kappa(profile, 0.5)
    want = math.sqrt((-3 + math.sqrt(20)) / 4)
    c.require(abs(kappa - want) <= 1e-10, f"kappa error {kappa - want:.2e}")
    c.within(60)


def test_criterion_03_isolated_point(check):
    c = check("3 x^2 + y^2 example")
    profile, _ = make_example("x2_plus_y2")
    window = (-2.5, 2.5, -2.5, 2.5)
    pts = find_singular_points(profile, window)
    c.require([p.kind for p in pts] == ["internal(1)"],
              f"kinds {[p.kind for p in pts]}")
    if pts:
        c.require(abs(pts[0].location) < 1e-6, "location")
        cell = 5.0 / 63
        ring = pts[0].location + 10 * cell * np.exp(
            2j * math.pi * np.arange(64) / 64)
        c.require(np.all(beta_values(profile, ring) < 0),
                  "ring not inside the support")
        c.require(beta_eval(profile, pts[0].location).beta <= 1e-12,
                  "beta at the point")
    c.within(60)


def test_criterion_04_cusp_example(check):
    c = check("4 x^2 - y^3 example")
    profile, spec = make_example("x2_y3")
    pts = find_singular_points(profile, (-2.5, 2.5, -2.5, 2.5))
    c.require(len(pts) == 1, f"{len(pts)} singular points")
    if pts:
        c.require(abs(pts[0].location - Y3_POINT) <= 1e-6,
                  f"location {pts[0].location}")
        c.require(pts[0].K == 3, f"K = {pts[0].K}")
        exact = pts[0].residuals.get("symmetric_check")
        c.require(exact is not None and exact[0] == 3,
                  f"exact check {exact}")
    shifted = (spec.nu.atoms - Y3_POINT, spec.nu.masses)
    exact = symmetric_classify(shifted, 1 / Y3_T, zero_tol=1e-8)
    c.require(exact[0] == 3, f"symmetric type {exact}")
    raw = (np.array([1, -1, 1j]), np.array([1.0, 1.0, Y3_DELTA]))
    gap = abs(f_eval(raw, Y3_POINT) - (2 + Y3_DELTA) / Y3_T)
    c.require(gap <= 1e-10, f"f_eval gap {gap:.2e}")


def test_criterion_05_two_sided_cusp(check):
    c = check("5 x^2 - y^4 example")
    profile, spec = make_example("x2_y4")
    pts = find_singular_points(profile, (-1, 1, -1, 1))
    c.require(len(pts) == 1, f"{len(pts)} singular points")
    if pts:
        sp = pts[0]
        c.require((sp.K, sp.tau) == (4, -1), f"FD type {sp.K} {sp.tau}")
        c.require(sp.residuals.get("symmetric_check") == [4, -1],
                  f"exact {sp.residuals.get('symmetric_check')}")
    c.require(symmetric_classify(spec.nu, 1 / spec.t) == (4, -1),
              "symmetric route at 0")


def test_criterion_06_ring_model(check):
    c = check("6 ring example")
    profile, _ = make_example("x2_infinity")
    trace = trace_boundary(beta_grid(profile, (-2, 2, -2, 2), 201, 201))
    outer = math.sqrt((3 + math.sqrt(5)) / 2)
    c.require(len(trace.contours) == 1 and len(trace.touching) == 1,
              "expected one contour and one touching curve")
    if trace.contours:
        err = np.max(np.abs(np.abs(trace.contours[0].points) - outer))
        c.require(err <= 0.01, f"outer radius error {err:.3g}")
    if trace.touching:
        err = np.max(np.abs(np.abs(trace.touching[0].midline.points) - 1))
        c.require(err <= 0.01, f"inner radius error {err:.3g}")
    d = np.geomspace(1e-3, 3e-2, 8)
    for side in (-1, 1):
        sig = np.array([sigma_at(profile, (1 + side * x) * np.exp(0.3j))
                        for x in d])
        slope = np.polyfit(np.log(d), np.log(sig), 1)[0]
        c.require(abs(slope - 2) <= 0.3, f"exponent {slope:.3f} side {side}")


def test_criterion_07_constructions(check):
    c = check("7 construction round trip")
    cases = [("even", n, tau) for n in (2, 3) for tau in (1, -1)]
    cases += [("odd", 1, None), ("odd", 2, None)]
    for kind, n, tau in cases:
        sol = construct_even(n, tau) if kind == "even" else construct_odd(n)
        if kind == "even":
            worst = max(abs(sol.moments(2 * k + 1).real) for k in range(1, n))
            top_ok = np.sign(sol.moments(2 * n + 1).real) == (-1) ** n * tau
        else:
            worst = max(abs(v) for k, v in sol.residuals.items()
                        if k != "slack")
            top_ok = sol.residuals["slack"] > 0
        c.require(worst <= 1e-8 and top_ok, f"{kind} {n}: residual {worst}")
        nu = sol.measure()
        profile = profile_from_measure(nu, 1.0)
        r = 0.3 * np.min(np.abs(nu.atoms))
        pts = find_singular_points(profile, (-r, r, -r, r))
        got = [(p.K, p.tau) for p in pts]
        c.require(got == [sol.expected()] and abs(pts[0].location) < 1e-4,
                  f"{kind} {n} {tau}: found {got}")
    c.within(120)


def test_criterion_08_consistency_triangle(check):
    c = check("8 closed form, potential and Dyson agree")
    worst = 0.0
    for k, name in enumerate(("x2_minus_y2", "x2_plus_y2", "x2_y3")):
        profile, _ = make_example(name)
        for z in bulk_points(profile, 10, seed=k):
            closed = sigma_at(profile, z, method="closed")
            potential = laplacian_check(profile, z)
            dyson = sigma_at(profile, z, method="dyson")
            vals = (closed, potential, dyson)
            gap = max(abs(a - b) for a in vals for b in vals) / min(vals)
            worst = max(worst, gap)
    c.require(worst <= 0.03, f"largest relative gap {worst:.2e}")


def test_criterion_09_edge_cubic(check):
    c = check("9 edge cubic scaling")
    betas = np.concatenate([-np.geomspace(1, 1e-6, 10),
                            np.geomspace(1e-6, 1, 10)])
    etas = np.geomspace(1e-10, 1, 20)
    ratios = []
    for b in betas:
        for e in etas:
            theta = solve_edge_cubic(1.0, 1.0, b, e)
            ratios.append(theta / (math.sqrt(max(0.0, -b))
                                   + e / (e ** (2 / 3) + abs(b))))
    c.require(0.25 <= min(ratios) and max(ratios) <= 4,
              f"ratio range [{min(ratios):.3f}, {max(ratios):.3f}]")
    profile, _ = make_example("x2_minus_y2")
    # 1/(1 - sqrt 3)^2 + 1/(1 + sqrt 3)^2 = 2, an exact edge point
    for zeta in (0.0, math.sqrt(3)):
        ev = beta_eval(profile, zeta)
        c3, c1 = edge_cubic_coefficients(profile, ev)
        state = None
        for eta in np.geomspace(1, 1e-8, 33):
            state = solve_dyson(profile, zeta, eta, init=state)
            if eta > 1e-2:
                continue
            mean_v1 = state.v1 @ profile.weights
            ratio = (mean_v1 + eta) / solve_edge_cubic(c3, c1, ev.beta, eta)
            c.require(0.5 <= ratio <= 2,
                      f"ratio {ratio:.3f} at eta {eta:.1e}, zeta {zeta}")


def test_criterion_10_random_matrices(check):
    c = check("10 random-matrix validation")
    for name in ("x2_minus_y2", "x2_plus_y2"):
        profile, _ = make_example(name)
        r = 1.1 * support_radius(profile)
        grid = density_grid(profile, (-r, r, -r, r), 200, 200)
        for seed in range(5):
            rep = compare(sample_spectrum(profile, 1000, seed), grid, profile)
            c.require(rep.inside_fraction >= 0.97,
                      f"{name} seed {seed}: inside {rep.inside_fraction}")
            c.require(rep.cells_tested >= 20 and rep.band_fraction >= 0.9,
                      f"{name} seed {seed}: {rep.cells_within}/"
                      f"{rep.cells_tested} cells")
    c.within(300)


if __name__ == "__main__":
    import sys
    sys.exit(pytest.main([__file__, "-q"]))
