"""Random-matrix check of supports and densities.

Samples ``A + X / sqrt(n)`` with ``A`` diagonal carrying the deformation
values in proportion to their weights and ``X`` with independent standard
normal entries scaled by the variance profile, then compares the eigenvalues
with ``beta`` and the computed density.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .density import DensityGrid
from .errors import NumericalError
from .model import AtomicProfile, ModelError
from .spectral import beta_values

__all__ = [
    "SpectrumSample",
    "ComparisonReport",
    "apportion",
    "sample_matrix",
    "eigenvalues",
    "sample_spectrum",
    "compare",
]


@dataclass(frozen=True, eq=False)
class SpectrumSample:
    """Eigenvalues of one sampled matrix."""

    n: int
    seed: int
    eigenvalues: np.ndarray
    profile_ref: str = ""
    trace: complex = 0j


@dataclass(frozen=True)
class ComparisonReport:
    """Outcome of :func:`compare`.

    ``inside_fraction`` is the share of eigenvalues with ``beta < tol_out``.
    ``cells_within`` of ``cells_tested`` bulk cells have counts within
    ``3 sqrt(expected)`` of the predicted ``n * mass``.
    """

    n: int
    inside_fraction: float
    cells_tested: int
    cells_within: int
    chi2: float
    details: dict = field(default_factory=dict)

    @property
    def band_fraction(self) -> float:
        return self.cells_within / self.cells_tested if self.cells_tested else 1.0


def apportion(weights, n: int) -> np.ndarray:
    """Largest-remainder row counts for ``n`` rows.

    Raises
    ------
    ModelError
        If some atom receives no row.
    """
    w = np.asarray(weights, float)
    quota = w * n
    rows = np.floor(quota).astype(int)
    rest = n - rows.sum()
    # ties are broken by atom order, which keeps the split deterministic
    order = np.argsort(-(quota - rows), kind="stable")
    rows[order[:rest]] += 1
    if np.any(rows == 0):
        raise ModelError(f"n={n} leaves an atom without rows; need more rows "
                         f"than atoms of small weight")
    return rows


def sample_matrix(profile: AtomicProfile, n: int, seed: int,
                  complex_entries: bool = False) -> np.ndarray:
    """``A + X / sqrt(n)``, deterministic per ``seed``.

    Entry ``X_ij`` has variance ``s(class(i), class(j))``; with
    ``complex_entries`` the entries are complex Gaussian of the same
    variance instead of real.
    """
    if n < 2:
        raise ValueError("n must be at least 2")
    rows = apportion(profile.weights, n)
    cls = np.repeat(np.arange(profile.K), rows)
    rng = np.random.default_rng(seed)
    if complex_entries:
        X = (rng.standard_normal((n, n))
             + 1j * rng.standard_normal((n, n))) / math.sqrt(2)
    else:
        X = rng.standard_normal((n, n))
    scale = np.sqrt(profile.kernel[np.ix_(cls, cls)])
    M = X * scale / math.sqrt(n)
    diag = profile.deformation[cls]
    if np.any(diag.imag != 0):
        M = M.astype(complex)
    else:
        diag = diag.real
    M[np.diag_indices(n)] += diag
    return M


def eigenvalues(matrix, checks: int = 10, seed: int = 0) -> np.ndarray:
    """All eigenvalues of a dense matrix with a backward-error check.

    For ``checks`` randomly chosen eigenvalues an approximate eigenvector
    is computed by inverse iteration and ``|M v - lambda v| / |v|`` must not
    exceed ``1e-8 * ||M||``.

    Raises
    ------
    NumericalError
        If the entries are not finite or a check fails.
    """
    M = np.asarray(matrix)
    if not np.iscomplexobj(M):
        M = M.astype(float)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise ValueError("expected a square matrix")
    if not np.all(np.isfinite(M)):
        raise NumericalError("matrix has non-finite entries")
    n = M.shape[0]
    if n == 0:
        return np.zeros(0, complex)
    try:
        lam = np.linalg.eigvals(M)
    except np.linalg.LinAlgError as exc:
        raise NumericalError(f"eigensolver did not converge: {exc}") from exc
    norm = float(np.linalg.norm(M, 2)) if n <= 64 else float(
        np.linalg.norm(M, "fro"))
    rng = np.random.default_rng(seed)
    picks = rng.choice(n, size=min(checks, n), replace=False)
    eye = np.eye(n)
    for k in picks:
        shift = lam[k] + 1e-10 * max(norm, 1.0)
        v = rng.standard_normal(n) + 0j
        try:
            for _ in range(2):
                v = np.linalg.solve(M - shift * eye, v)
                v /= np.linalg.norm(v)
        except np.linalg.LinAlgError:
            continue  # exactly singular shift: lam is an exact eigenvalue
        res = float(np.linalg.norm(M @ v - lam[k] * v))
        if res > 1e-8 * max(norm, 1.0):
            raise NumericalError(f"eigenpair check failed at lambda={lam[k]}: "
                                 f"residual {res:.2e}, ||M|| {norm:.2e}")
    return lam


def sample_spectrum(profile: AtomicProfile, n: int, seed: int,
                    name: str = "", complex_entries: bool = False
                    ) -> SpectrumSample:
    M = sample_matrix(profile, n, seed, complex_entries)
    lam = eigenvalues(M)
    return SpectrumSample(n, seed, lam, name, complex(np.trace(M)))


def compare(sample: SpectrumSample, grid: DensityGrid, profile: AtomicProfile,
            tol_out: float = 0.05, coarse: int = 20) -> ComparisonReport:
    """Inside fraction and binned counts against the density grid.

    The grid is partitioned into ``coarse x coarse`` blocks.  Blocks whose
    cells all lie in the support are bulk blocks; for each, the expected
    count ``n * sum(sigma) * cell_area`` is compared with the number of
    eigenvalues falling in it.
    """
    lam = np.asarray(sample.eigenvalues)
    if lam.size == 0:
        return ComparisonReport(0, 1.0, 0, 0, 0.0)
    beta = beta_values(profile, lam)
    inside = float(np.mean(beta < tol_out))
    nx, ny = grid.nx, grid.ny
    dx = grid.x[1] - grid.x[0]
    dy = grid.y[1] - grid.y[0]
    x0, y0 = grid.x[0] - dx / 2, grid.y[0] - dy / 2
    ix = np.floor((lam.real - x0) / dx).astype(int)
    iy = np.floor((lam.imag - y0) / dy).astype(int)
    ok = (ix >= 0) & (ix < nx) & (iy >= 0) & (iy < ny)
    counts = np.zeros((nx, ny))
    np.add.at(counts, (ix[ok], iy[ok]), 1)
    bx = np.array_split(np.arange(nx), coarse)
    by = np.array_split(np.arange(ny), coarse)
    tested = within = 0
    chi2 = 0.0
    for sx in bx:
        for sy in by:
            block = np.ix_(sx, sy)
            if not np.all(grid.mask[block]):
                continue
            expected = sample.n * grid.sigma[block].sum() * grid.cell_area
            observed = counts[block].sum()
            if expected <= 0:
                continue
            tested += 1
            within += abs(observed - expected) <= 3 * math.sqrt(expected)
            chi2 += (observed - expected) ** 2 / expected
    return ComparisonReport(sample.n, inside, tested, within, chi2,
                            {"outside_grid": int(np.sum(~ok)),
                             "tol_out": tol_out})
