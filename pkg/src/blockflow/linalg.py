"""Dense complex linear algebra in log space.

Determinants of long chain products overflow double precision long before
the underlying physics degenerates, so every determinant in this package is
carried as a (log-modulus, phase) pair.  The helpers here wrap LAPACK
routines (via numpy/scipy) behind that representation and fix the sorting
and matching conventions used everywhere else.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass

import numpy as np
import scipy.linalg

TAU = 2.0 * math.pi

#: relative tolerance for invertibility and eigenvalue checks
TOL_INV = 1e-10
TOL_EIG = 1e-10


class SingularMatrixError(ValueError):
    """A matrix required to be invertible is singular at working precision."""


class EigenConvergenceError(RuntimeError):
    """The underlying eigenvalue iteration failed to converge."""


def wrap_phase(phi: float) -> float:
    """Reduce an angle to the interval (-pi, pi]."""
    p = math.fmod(phi, TAU)
    if p > math.pi:
        p -= TAU
    elif p <= -math.pi:
        p += TAU
    return p


def as_matrix(a, square: bool = True) -> np.ndarray:
    """Validate and return a complex 2-d array.

    Rejects empty and non-finite input; the rest of the package assumes
    matrices passed through here.
    """
    m = np.asarray(a, dtype=complex)
    if m.ndim != 2 or m.size == 0:
        raise ValueError(f"expected a nonempty 2-d array, got shape {m.shape}")
    if square and m.shape[0] != m.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {m.shape}")
    if not np.all(np.isfinite(m)):
        raise ValueError("matrix entries must be finite")
    return m


@dataclass(frozen=True)
class LogDet:
    """A nonzero complex number det = exp(log_modulus + i*phase).

    ``log_modulus`` is -inf for an exactly zero determinant, in which case
    the phase is fixed to 0.0 by convention.
    """

    log_modulus: float
    phase: float

    @classmethod
    def from_complex(cls, value: complex) -> "LogDet":
        value = complex(value)
        if value == 0:
            return cls(float("-inf"), 0.0)
        return cls(math.log(abs(value)), wrap_phase(cmath.phase(value)))

    @property
    def value(self) -> complex:
        """The determinant as a complex number; may overflow to inf."""
        if self.log_modulus == float("-inf"):
            return 0.0
        return cmath.exp(complex(self.log_modulus, self.phase))

    def __mul__(self, other: "LogDet") -> "LogDet":
        if self.is_zero or other.is_zero:
            return LogDet(float("-inf"), 0.0)
        return LogDet(self.log_modulus + other.log_modulus,
                      wrap_phase(self.phase + other.phase))

    def __truediv__(self, other: "LogDet") -> "LogDet":
        if other.is_zero:
            raise ZeroDivisionError("division by a zero determinant")
        if self.is_zero:
            return LogDet(float("-inf"), 0.0)
        return LogDet(self.log_modulus - other.log_modulus,
                      wrap_phase(self.phase - other.phase))

    def pow(self, k: int) -> "LogDet":
        if self.is_zero:
            return LogDet(float("-inf"), 0.0) if k > 0 else LogDet(0.0, 0.0)
        return LogDet(k * self.log_modulus, wrap_phase(k * self.phase))

    @property
    def is_zero(self) -> bool:
        return self.log_modulus == float("-inf")


def lu_logdet(a) -> LogDet:
    """Determinant of a square matrix as a LogDet, via pivoted LU.

    An exactly zero pivot gives log_modulus = -inf rather than raising.
    """
    m = as_matrix(a)
    lu, piv = scipy.linalg.lu_factor(m, check_finite=False)
    diag = np.diagonal(lu)
    if np.any(diag == 0):
        return LogDet(float("-inf"), 0.0)
    log_modulus = float(np.sum(np.log(np.abs(diag))))
    # each off-position pivot is one row swap contributing a factor -1
    swaps = int(np.sum(piv != np.arange(len(piv))))
    phase = float(np.sum(np.angle(diag))) + math.pi * (swaps % 2)
    return LogDet(log_modulus, wrap_phase(phase))


def eigenvalues(a) -> np.ndarray:
    """Eigenvalues of a square matrix, sorted by the package convention.

    Sorting is by modulus descending with ties broken by phase ascending,
    which makes seeded runs reproducible across platforms.
    """
    m = as_matrix(a)
    try:
        vals = np.linalg.eigvals(m)
    except np.linalg.LinAlgError as exc:
        raise EigenConvergenceError(str(exc)) from exc
    return sort_by_modulus(vals)


def sort_by_modulus(values: np.ndarray) -> np.ndarray:
    """Sort complex values by modulus descending, ties by phase ascending."""
    vals = np.asarray(values, dtype=complex)
    order = np.lexsort((np.angle(vals), -np.abs(vals)))
    return vals[order]


def singular_values(a) -> np.ndarray:
    """Singular values in descending order."""
    m = as_matrix(a, square=False)
    try:
        return np.linalg.svd(m, compute_uv=False)
    except np.linalg.LinAlgError as exc:
        raise EigenConvergenceError(str(exc)) from exc


def condition_number(a) -> float:
    """2-norm condition number; raises SingularMatrixError if singular."""
    s = singular_values(a)
    if s[-1] == 0:
        raise SingularMatrixError("condition number of a singular matrix")
    return float(s[0] / s[-1])


def require_invertible(a, name: str = "matrix", tol: float = TOL_INV) -> np.ndarray:
    """Return the matrix if comfortably invertible, else raise."""
    m = as_matrix(a)
    s = singular_values(m)
    if s[-1] <= tol * max(s[0], 1.0) * m.shape[0]:
        raise SingularMatrixError(
            f"{name} is singular at working precision "
            f"(sigma_min={s[-1]:.3e}, sigma_max={s[0]:.3e})")
    return m


def match_tolerance(values: np.ndarray, scale: float = 1e-7) -> float:
    """Matching radius for eigenvalue multisets: scale * (1 + spectral radius)."""
    vals = np.asarray(values)
    radius = float(np.max(np.abs(vals))) if vals.size else 0.0
    return scale * (1.0 + radius)


def match_spectra(left, right, tol: float | None = None):
    """Greedy nearest-neighbour matching of two complex multisets.

    Returns (pairs, max_distance, unmatched_left, unmatched_right) where
    ``pairs`` is a list of index pairs (i, j) with |left[i]-right[j]| <= tol.
    Matching is greedy over globally ascending distances, which is exact
    whenever the multisets agree pairwise within tol and are separated by
    more than 2*tol otherwise.
    """
    lv = np.asarray(left, dtype=complex)
    rv = np.asarray(right, dtype=complex)
    if tol is None:
        tol = match_tolerance(np.concatenate([lv, rv]))
    dist = np.abs(lv[:, None] - rv[None, :])
    order = np.argsort(dist, axis=None, kind="stable")
    used_l = np.zeros(len(lv), dtype=bool)
    used_r = np.zeros(len(rv), dtype=bool)
    pairs = []
    max_d = 0.0
    for flat in order:
        i, j = divmod(int(flat), len(rv))
        if used_l[i] or used_r[j]:
            continue
        if dist[i, j] > tol:
            break
        used_l[i] = used_r[j] = True
        pairs.append((i, j))
        max_d = max(max_d, float(dist[i, j]))
    unmatched_l = [int(i) for i in np.flatnonzero(~used_l)]
    unmatched_r = [int(j) for j in np.flatnonzero(~used_r)]
    return pairs, max_d, unmatched_l, unmatched_r
