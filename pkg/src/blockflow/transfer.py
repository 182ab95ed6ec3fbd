"""Transfer matrices of block tridiagonal chains.

The one-step matrix at energy E is

    t_k(E) = [[B_k^{-1}(E - A_k), -B_k^{-1} C_k],
              [I_m,               0            ]]

and the n-step matrix is the ordered product T(E) = t_n ... t_1.  Entries
of T grow like exp(n * xi_max), so alongside the plain product this module
provides numerically stabilized routes: singular values accumulated in log
space through a graded one-sided Jacobi factorization, and eigenvalues in
log-polar form through the cyclic block-companion embedding, both of which
never form the product itself.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass

import numpy as np

from .chains import BlockChain
from .linalg import SingularMatrixError, as_matrix, wrap_phase

#: steps between re-orthogonalizations of the accumulated product
K_QR = 8


class ProductOverflowError(FloatingPointError):
    """The plain product left the range of double precision."""


@dataclass(frozen=True)
class TransferMatrix:
    """An n-step transfer matrix with its construction provenance."""

    matrix: np.ndarray
    energy: complex
    m: int
    provenance: str

    @property
    def t11(self) -> np.ndarray:
        return self.matrix[: self.m, : self.m]

    @property
    def t12(self) -> np.ndarray:
        return self.matrix[: self.m, self.m:]

    @property
    def t21(self) -> np.ndarray:
        return self.matrix[self.m:, : self.m]

    @property
    def t22(self) -> np.ndarray:
        return self.matrix[self.m:, self.m:]


def one_step(chain: BlockChain, k: int, energy: complex) -> np.ndarray:
    """t_k(E) for 1-based site index k."""
    if not 1 <= k <= chain.n:
        raise IndexError(f"site index {k} outside 1..{chain.n}")
    m = chain.m
    a, b, c = chain.a[k - 1], chain.b[k - 1], chain.c[k - 1]
    t = np.zeros((2 * m, 2 * m), dtype=complex)
    shifted = energy * np.eye(m) - a
    t[:m, :m] = np.linalg.solve(b, shifted)
    t[:m, m:] = -np.linalg.solve(b, c)
    t[m:, :m] = np.eye(m)
    return t


def product(chain: BlockChain, energy: complex) -> TransferMatrix:
    """Plain ordered product T(E) = t_n ... t_1.

    Raises ProductOverflowError if an intermediate product leaves double
    range; use the stabilized routes in that regime.
    """
    total = np.eye(2 * chain.m, dtype=complex)
    with np.errstate(over="ignore", invalid="ignore"):
        for k in range(1, chain.n + 1):
            total = one_step(chain, k, energy) @ total
            if not np.all(np.isfinite(total)):
                raise ProductOverflowError(
                    f"transfer product overflowed at step {k} of {chain.n}")
    return TransferMatrix(matrix=total, energy=complex(energy), m=chain.m,
                          provenance="product")


def inverse_via_inversion(chain: BlockChain, energy: complex) -> TransferMatrix:
    """T(E)^{-1} from the reversed chain.

    The reversed chain's transfer matrix T^J satisfies
    T^{-1} = sigma_x T^J sigma_x with sigma_x the block swap, so no
    numerical inversion of T is involved.
    """
    m = chain.m
    tj = product(chain.reversed(), energy).matrix
    swapped = np.zeros_like(tj)
    swapped[:m, :m] = tj[m:, m:]
    swapped[:m, m:] = tj[m:, :m]
    swapped[m:, :m] = tj[:m, m:]
    swapped[m:, m:] = tj[:m, :m]
    return TransferMatrix(matrix=swapped, energy=complex(energy), m=m,
                          provenance="inverse")


# ---------------------------------------------------------------------------
# stabilized singular values: graded one-sided Jacobi accumulation

def _orthogonalize_graded(cols: np.ndarray, logs: np.ndarray,
                          tol: float = 1e-15, max_sweeps: int = 40) -> None:
    """One-sided Jacobi on the matrix with j-th column cols[:, j]*exp(logs[j]).

    Works in place.  Columns are kept unit norm with the true norms carried
    in ``logs``, so the dynamic range of the represented matrix is
    unlimited.  On return the represented columns are mutually orthogonal,
    i.e. logs holds the log singular values (unsorted).
    """
    d = cols.shape[1]
    for _ in range(max_sweeps):
        rotated = False
        for i in range(d):
            for j in range(i + 1, d):
                if logs[i] < logs[j]:
                    cols[:, [i, j]] = cols[:, [j, i]]
                    logs[[i, j]] = logs[[j, i]]
                overlap = complex(np.vdot(cols[:, i], cols[:, j]))
                if abs(overlap) <= tol:
                    continue
                rotated = True
                r = math.exp(min(logs[j] - logs[i], 0.0))  # <= 1, may underflow to 0
                ac = abs(overlap)
                phase = overlap / ac  # e^{i psi}
                # real rotation angle for the dephased scaled Gram
                # [[1, ac*r], [ac*r, r^2]]; t/r stays well defined when r
                # underflows (limit t/r -> ac)
                denom = (1.0 - r * r) / (2.0 * ac) \
                    + math.sqrt(r * r + (1.0 - r * r) ** 2 / (4.0 * ac * ac))
                t_over_r = 1.0 / denom
                t = t_over_r * r
                c_t = 1.0 / math.sqrt(1.0 + t * t)
                col_i = cols[:, i].copy()
                col_j = cols[:, j].copy()
                # large column: an O(t*r) correction keeps it large
                v = col_i + (t * r / phase) * col_j
                nv = float(np.linalg.norm(v))
                # small column: O(1) direction change, log moves by log(c_t*|u|)
                u = col_j - (t_over_r * phase) * col_i
                nu = float(np.linalg.norm(u))
                if nu <= 1e-14 or nv <= 1e-14:
                    raise RuntimeError(
                        "graded Jacobi lost a direction: columns collapsed "
                        "numerically; re-orthogonalize more often")
                cols[:, i] = v / nv
                cols[:, j] = u / nu
                logs[i] += math.log(c_t * nv)
                logs[j] += math.log(c_t * nu)
        if not rotated:
            return
    raise RuntimeError("graded Jacobi orthogonalization did not converge")


def stabilized_log_singular_values(chain: BlockChain, energy: complex,
                                   k_qr: int = K_QR) -> np.ndarray:
    """log of the singular values of T(E), descending, without forming T.

    The product is carried as (unit columns, log column norms) and
    re-orthogonalized every ``k_qr`` steps, so results stay accurate for
    dynamic ranges far beyond double precision.
    """
    if k_qr < 1:
        raise ValueError("k_qr must be positive")
    d = 2 * chain.m
    cols = np.eye(d, dtype=complex)
    logs = np.zeros(d)
    # normalized columns all grow at the top rate, so collapse shows up as
    # inter-column overlap, not as norm spread; orthogonalize early once any
    # pair leans together, before the small directions drown in roundoff
    overlap_cap = 0.999
    for k in range(1, chain.n + 1):
        cols = one_step(chain, k, energy) @ cols
        norms = np.linalg.norm(cols, axis=0)
        if np.any(norms == 0.0) or not np.all(np.isfinite(norms)):
            raise SingularMatrixError(
                f"transfer step {k} annihilated a direction; chain is degenerate")
        cols /= norms
        logs += np.log(norms)
        if k % k_qr == 0:
            _orthogonalize_graded(cols, logs)
        else:
            gram = np.abs(cols.conj().T @ cols)
            np.fill_diagonal(gram, 0.0)
            if float(gram.max()) > overlap_cap:
                _orthogonalize_graded(cols, logs)
    _orthogonalize_graded(cols, logs)
    return np.sort(logs)[::-1]


def stabilized_singular_products(chain: BlockChain, energy: complex,
                                 k_qr: int = K_QR) -> np.ndarray:
    """log(sigma_1 * ... * sigma_p) of T(E) for p = 1..2m, as an array."""
    return np.cumsum(stabilized_log_singular_values(chain, energy, k_qr=k_qr))


# ---------------------------------------------------------------------------
# stabilized eigenvalues: cyclic block-companion embedding

@dataclass(frozen=True)
class LogEigenvalues:
    """Eigenvalues of T(E) in log-polar form.

    log_abs[k] + i*phase[k] is one value of log z_k; ``xi`` is the exponent
    vector log|z_k| / n.  ``phase_reliable`` is False when the replica
    clustering of the embedding could not separate phases (the moduli are
    still trustworthy).
    """

    log_abs: np.ndarray
    phase: np.ndarray
    n: int
    phase_reliable: bool = True

    @property
    def xi(self) -> np.ndarray:
        return self.log_abs / self.n

    def values(self) -> np.ndarray:
        """Complex eigenvalues; overflow saturates to inf, underflow to 0."""
        out = np.empty(len(self.log_abs), dtype=complex)
        for i, (la, ph) in enumerate(zip(self.log_abs, self.phase)):
            if la > 709.0:
                out[i] = complex(math.inf, 0.0)
            else:
                out[i] = cmath.exp(complex(la, ph))
        return out


def _cyclic_embedding(chain: BlockChain, energy: complex) -> np.ndarray:
    n, m = chain.n, chain.m
    d = 2 * m
    big = np.zeros((n * d, n * d), dtype=complex)
    for k in range(n):
        row = (k + 1) % n
        big[row * d:(row + 1) * d, k * d:(k + 1) * d] = one_step(chain, k + 1, energy)
    return big


def eigenvalues_stabilized(chain: BlockChain, energy: complex) -> LogEigenvalues:
    """Eigenvalues of T(E) in log-polar form via the cyclic embedding.

    The block-cyclic matrix with the t_k on its sub-diagonal has
    eigenvalues mu with mu^n running over sp(T), each picked up n times.
    Its entries stay O(max ||t_k||) for any chain length, so log|z_k| is
    obtained with uniform accuracy where the plain product would overflow
    or lose the small eigenvalues entirely.
    """
    n, m = chain.n, chain.m
    mus = np.linalg.eigvals(_cyclic_embedding(chain, energy))
    log_abs = n * np.log(np.abs(mus))
    phases = np.mod(n * np.angle(mus), 2.0 * math.pi)
    order = np.argsort(log_abs, kind="stable")
    log_abs = log_abs[order]
    phases = phases[order]

    groups = _cluster_replicas(log_abs, phases, n, 2 * m)
    if groups is None:
        # fall back to pure modulus blocks; phases marked unreliable
        blocks = log_abs.reshape(2 * m, n)
        la = blocks.mean(axis=1)
        ph = np.array([_circular_mean(phases[i * n:(i + 1) * n]) for i in range(2 * m)])
        return LogEigenvalues(log_abs=la, phase=np.array([wrap_phase(p) for p in ph]),
                              n=n, phase_reliable=False)
    la = np.array([g[0] for g in groups])
    ph = np.array([wrap_phase(g[1]) for g in groups])
    order = np.lexsort((ph, -la))
    return LogEigenvalues(log_abs=la[order], phase=ph[order], n=n)


def _circular_mean(phases: np.ndarray) -> float:
    return float(np.angle(np.mean(np.exp(1j * phases))))


def _cluster_replicas(log_abs: np.ndarray, phases: np.ndarray, n: int, count: int):
    """Group n-fold replicated (log|z|, phase) points into ``count`` clusters.

    Returns a list of (log_abs, phase) per cluster or None if the expected
    replica structure is not recognized at tolerance.
    """
    scale = max(1.0, float(np.max(np.abs(log_abs))))
    tol_la = 1e-6 * scale
    tol_ph = 1e-5
    points = sorted(zip(log_abs, np.exp(1j * phases)), key=lambda p: p[0])
    clusters: list[list] = []
    for la, u in points:
        placed = False
        for cl in clusters:
            c_la, c_u, c_n = cl
            if abs(la - c_la / c_n) <= tol_la and abs(u - c_u / abs(c_u)) <= math.sqrt(tol_ph):
                cl[0] += la
                cl[1] += u
                cl[2] += 1
                placed = True
                break
        if not placed:
            clusters.append([la, u, 1])
    if len(clusters) != count or any(cl[2] != n for cl in clusters):
        return None
    return [(cl[0] / cl[2], float(np.angle(cl[1]))) for cl in clusters]


# ---------------------------------------------------------------------------
# polynomial structure in E

def polynomial_coefficients(chain: BlockChain, degree: int | None = None) -> list[np.ndarray]:
    """Matrix coefficients T_0..T_degree of T(E) = sum_p T_p E^p.

    Entries of T(E) are polynomials in E of degree at most n, so
    interpolation on degree+1 Chebyshev points is exact.  Intended for
    degree checks on short chains; cost grows with the usual
    ill-conditioning of high-degree interpolation.
    """
    if degree is None:
        degree = chain.n
    d = 2 * chain.m
    nodes = np.cos(np.pi * (2 * np.arange(degree + 1) + 1) / (2 * (degree + 1)))
    samples = np.stack([product(chain, complex(x)).matrix for x in nodes])
    flat = samples.reshape(degree + 1, d * d)
    fitted = np.polynomial.chebyshev.chebfit(nodes, flat, deg=degree)
    # cheb2poly trims trailing zeros, so pad every column back to full length
    power = np.zeros((degree + 1, d * d), dtype=complex)
    for col in range(d * d):
        coeffs = np.polynomial.chebyshev.cheb2poly(fitted[:, col])
        power[:len(coeffs), col] = coeffs
    return [power[p].reshape(d, d) for p in range(degree + 1)]
