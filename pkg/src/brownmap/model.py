"""Discretized model data: weights, deformation atoms and variance kernel.

Everything downstream consumes an :class:`AtomicProfile`.  The profile stores
the kernel densely together with the two weighted integral operators built
from it, ``(S u)_i = sum_j s_ij mu_j u_j`` and its transpose analogue.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

__all__ = [
    "AtomicProfile",
    "AtomMeasure",
    "ModelError",
    "ValidationReport",
    "apply_S",
    "apply_S_star",
    "weighted_avg",
    "validate",
    "load_model",
    "profile_from_measure",
]


class ModelError(ValueError):
    """Raised for malformed model data."""


@dataclass(frozen=True)
class ValidationReport:
    """Result of checking the structural assumptions on a profile."""

    primitive: bool
    witness_power: int | None
    diagonal_positive: bool
    weights_normalized: bool
    nonnegative: bool

    @property
    def ok(self) -> bool:
        return (self.primitive and self.diagonal_positive
                and self.weights_normalized and self.nonnegative)


@dataclass(frozen=True, eq=False)
class AtomicProfile:
    """Finite model of the deformed circular element.

    Parameters
    ----------
    weights : (K,) array of positive floats summing to one.
    deformation : (K,) complex array of deformation values ``a_i``.
    kernel : (K, K) nonnegative variance profile ``s_ij``.
    """

    weights: np.ndarray
    deformation: np.ndarray
    kernel: np.ndarray
    _scalar: float | None = field(default=None, repr=False)

    def __post_init__(self):
        w = np.array(self.weights, dtype=float).ravel()
        a = np.array(self.deformation, dtype=complex).ravel()
        s = np.array(self.kernel, dtype=float)
        if s.ndim == 0:
            s = np.full((w.size, w.size), float(s))
        if w.size == 0:
            raise ModelError("profile needs at least one atom")
        if a.size != w.size or s.shape != (w.size, w.size):
            raise ModelError(
                f"shape mismatch: {w.size} weights, {a.size} atoms, "
                f"kernel {s.shape}")
        for name, arr in (("weights", w), ("kernel", s)):
            if not np.all(np.isfinite(arr)):
                raise ModelError(f"{name} contain non-finite entries")
        if not np.all(np.isfinite(a)):
            raise ModelError("deformation contains non-finite entries")
        if np.any(w <= 0):
            raise ModelError("weights must be strictly positive")
        if abs(w.sum() - 1.0) > 1e-12:
            raise ModelError(f"weights sum to {w.sum()!r}, expected 1")
        if np.any(s < 0):
            raise ModelError("kernel entries must be nonnegative")
        for arr in (w, a, s):
            arr.setflags(write=False)
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "deformation", a)
        object.__setattr__(self, "kernel", s)
        flat = s.ravel()
        scalar = float(flat[0]) if np.all(flat == flat[0]) else None
        object.__setattr__(self, "_scalar", scalar)

    @classmethod
    def scalar(cls, weights, deformation, t: float = 1.0) -> "AtomicProfile":
        """Profile with constant variance ``s_ij = t``."""
        w = np.asarray(weights, dtype=float)
        return cls(w, deformation, np.full((w.size, w.size), float(t)))

    @property
    def K(self) -> int:
        return self.weights.size

    @property
    def scalar_variance(self) -> float | None:
        """The constant ``t`` if the kernel is constant, else ``None``."""
        return self._scalar

    @property
    def S_matrix(self) -> np.ndarray:
        """Matrix of ``S`` acting on plain K-vectors."""
        return self.kernel * self.weights[None, :]

    @property
    def S_star_matrix(self) -> np.ndarray:
        return self.kernel.T * self.weights[None, :]

    def to_json(self) -> dict:
        out = {
            "weights": [float(x) for x in self.weights],
            "deformation": [[float(z.real), float(z.imag)]
                            for z in self.deformation],
        }
        if self._scalar is not None:
            out["scalar_variance"] = self._scalar
        else:
            out["kernel"] = [[float(x) for x in row] for row in self.kernel]
        return out


@dataclass(frozen=True, eq=False)
class AtomMeasure:
    """Finitely supported probability measure on the complex plane."""

    atoms: np.ndarray
    masses: np.ndarray

    def __post_init__(self):
        z = np.array(self.atoms, dtype=complex).ravel()
        m = np.array(self.masses, dtype=float).ravel()
        if z.size != m.size or z.size == 0:
            raise ModelError("atoms and masses must be nonempty and aligned")
        if np.any(m <= 0) or not np.all(np.isfinite(m)):
            raise ModelError("masses must be positive and finite")
        if abs(m.sum() - 1.0) > 1e-12:
            raise ModelError(f"masses sum to {m.sum()!r}, expected 1")
        diff = np.abs(z[:, None] - z[None, :]) + np.eye(z.size)
        if np.any(diff == 0):
            raise ModelError("atoms must be pairwise distinct")
        z.setflags(write=False)
        m.setflags(write=False)
        object.__setattr__(self, "atoms", z)
        object.__setattr__(self, "masses", m)

    @classmethod
    def normalized(cls, atoms, weights) -> "AtomMeasure":
        """Build from unnormalized nonnegative weights."""
        w = np.asarray(weights, dtype=float)
        return cls(atoms, w / w.sum())


def profile_from_measure(nu: AtomMeasure, t: float = 1.0) -> AtomicProfile:
    """Scalar-variance profile whose deformation has spectral measure ``nu``."""
    return AtomicProfile.scalar(nu.masses, nu.atoms, t)


def _check_len(profile: AtomicProfile, u) -> np.ndarray:
    u = np.asarray(u)
    if u.shape[-1] != profile.K:
        raise ModelError(f"vector length {u.shape[-1]} != K={profile.K}")
    return u


def apply_S(profile: AtomicProfile, u) -> np.ndarray:
    """``(S u)_i = sum_j s_ij mu_j u_j``."""
    u = _check_len(profile, u)
    return profile.S_matrix @ u


def apply_S_star(profile: AtomicProfile, u) -> np.ndarray:
    """``(S* u)_i = sum_j s_ji mu_j u_j``."""
    u = _check_len(profile, u)
    return profile.S_star_matrix @ u


def weighted_avg(profile: AtomicProfile, u):
    """``<u> = sum_i mu_i u_i``."""
    u = _check_len(profile, u)
    return u @ profile.weights


def validate(profile: AtomicProfile) -> ValidationReport:
    """Check primitivity and diagonal positivity of the kernel pattern.

    With a positive diagonal, the pattern is primitive iff it is irreducible,
    and then ``Z^L > 0`` for some ``L <= K - 1``; the smallest such power is
    reported as the witness.
    """
    z = (profile.kernel > 0).astype(np.int64)
    k = profile.K
    diag = bool(np.all(np.diag(z) == 1))
    witness = None
    power = np.eye(k, dtype=np.int64)
    # a primitive pattern with positive diagonal saturates within K steps;
    # otherwise allow Wielandt's bound so periodic patterns are still decided
    limit = k if diag else (k - 1) ** 2 + 1
    for L in range(1, max(limit, 1) + 1):
        power = np.minimum(power @ z, 1)
        if np.all(power > 0):
            witness = L
            break
    return ValidationReport(
        primitive=witness is not None and diag,
        witness_power=witness,
        diagonal_positive=diag,
        weights_normalized=abs(profile.weights.sum() - 1.0) <= 1e-12,
        nonnegative=bool(np.all(profile.kernel >= 0)),
    )


def _finite_nonneg(values, name: str) -> np.ndarray:
    arr = np.asarray(values, dtype=float)
    if not np.all(np.isfinite(arr)):
        raise ModelError(f"{name}: NaN or infinite entry")
    return arr


def load_model(source) -> AtomicProfile:
    """Load a profile from a JSON file path or an already-parsed dict.

    Expected keys: ``weights``, ``deformation`` (list of ``[re, im]``) and
    either ``kernel`` or ``scalar_variance``.
    """
    if isinstance(source, (str, Path)):
        try:
            data = json.loads(Path(source).read_text())
        except json.JSONDecodeError as exc:
            raise ModelError(f"{source}: invalid JSON ({exc})") from exc
    else:
        data = source
    if not isinstance(data, dict):
        raise ModelError("model must be a JSON object")
    for key in ("weights", "deformation"):
        if key not in data:
            raise ModelError(f"missing key {key!r}")
    w = _finite_nonneg(data["weights"], "weights")
    if np.any(w < 0):
        raise ModelError("weights: negative entry")
    if w.ndim != 1:
        raise ModelError("weights must be a flat list")
    total = w.sum()
    if abs(total - 1.0) > 1e-9:
        raise ModelError(f"weights sum to {total!r}, expected 1")
    w = w / total
    d = _finite_nonneg(data["deformation"], "deformation")
    if d.ndim != 2 or d.shape[1] != 2:
        raise ModelError("deformation must be a list of [re, im] pairs")
    a = d[:, 0] + 1j * d[:, 1]
    if ("kernel" in data) == ("scalar_variance" in data):
        raise ModelError("give exactly one of 'kernel' or 'scalar_variance'")
    if "kernel" in data:
        s = _finite_nonneg(data["kernel"], "kernel")
    else:
        t = float(data["scalar_variance"])
        if not math.isfinite(t) or t <= 0:
            raise ModelError("scalar_variance must be a positive number")
        s = np.full((w.size, w.size), t)
    if np.any(s < 0):
        raise ModelError("kernel: negative entry")
    profile = AtomicProfile(w, a, s)
    report = validate(profile)
    if not report.ok:
        raise ModelError(f"kernel pattern fails validation: {report}")
    return profile
