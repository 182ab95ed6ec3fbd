"""Assembly of the ring and open operators attached to a chain.

H(z) is the nm x nm block tridiagonal matrix of the chain closed into a
ring with boundary factor z: corner blocks C_1/z (top right) and z*B_n
(bottom left) encode u_0 = u_n/z and u_{n+1} = z*u_1.  For n = 2 the
corner positions coincide with the inner hopping positions and the
contributions add.

The balanced variant spreads the boundary factor over the whole ring,
every B_k -> w*B_k and C_k -> C_k/w; H(w^n) and the balanced matrix at w
are similar via the diagonal gauge diag(w^k I_m), so determinants and
spectra agree exactly while entries stay O(|w|) instead of O(|w|^n).
This makes the balanced form the numerically usable one at large |z|.
The balanced matrix is invariant in spectrum under w -> w*exp(2i*pi/n).
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass

import numpy as np

from .chains import BlockChain
from .linalg import LogDet, lu_logdet, wrap_phase


@dataclass(frozen=True)
class BoundaryParam:
    """Boundary factor in canonical (xi, phi) form: z = exp(n*xi + i*phi).

    xi is the radial exponent per site; phi the total flux angle in
    [0, 2*pi).  The per-site factor w = exp(xi + i*phi/n) never overflows
    for physical xi, unlike z itself.
    """

    xi: float
    phi: float = 0.0

    def __post_init__(self):
        if not (math.isfinite(self.xi) and math.isfinite(self.phi)):
            raise ValueError("boundary parameters must be finite")
        object.__setattr__(self, "phi", self.phi % (2.0 * math.pi))

    @classmethod
    def from_z(cls, z: complex, n: int) -> "BoundaryParam":
        z = complex(z)
        if z == 0:
            raise ValueError("boundary factor z must be nonzero")
        return cls(xi=math.log(abs(z)) / n, phi=cmath.phase(z) % (2.0 * math.pi))

    def z(self, n: int) -> complex:
        """exp(n*xi + i*phi); raises OverflowError when out of double range."""
        if self.n_log_abs(n) > 709.0:
            raise OverflowError(f"z = exp({n * self.xi:.1f} + i phi) overflows")
        return cmath.exp(complex(n * self.xi, self.phi))

    def w(self, n: int) -> complex:
        """Per-site factor exp(xi + i*phi/n)."""
        return cmath.exp(complex(self.xi, self.phi / n))

    def n_log_abs(self, n: int) -> float:
        return n * self.xi


def assemble_bloch(chain: BlockChain, z: complex) -> np.ndarray:
    """H(z) with corner blocks C_1/z and z*B_n.

    For n = 2 the corners share positions with B_1 and C_2 and are summed,
    which is the convention consistent with the ring boundary conditions.
    """
    z = complex(z)
    if z == 0:
        raise ValueError("boundary factor z must be nonzero")
    n, m = chain.n, chain.m
    h = _tridiagonal_part(chain)
    h[:m, (n - 1) * m:] += chain.c[0] / z
    h[(n - 1) * m:, :m] += z * chain.b[n - 1]
    return h


def assemble_balanced(chain: BlockChain, w: complex) -> np.ndarray:
    """The gauge-balanced ring matrix: every B_k -> w*B_k, C_k -> C_k/w."""
    w = complex(w)
    if w == 0:
        raise ValueError("per-site factor w must be nonzero")
    n, m = chain.n, chain.m
    h = np.zeros((n * m, n * m), dtype=complex)
    for k in range(n):
        h[k * m:(k + 1) * m, k * m:(k + 1) * m] = chain.a[k]
    for k in range(n - 1):
        h[k * m:(k + 1) * m, (k + 1) * m:(k + 2) * m] += w * chain.b[k]
        h[(k + 1) * m:(k + 2) * m, k * m:(k + 1) * m] += chain.c[k + 1] / w
    h[:m, (n - 1) * m:] += chain.c[0] / w
    h[(n - 1) * m:, :m] += w * chain.b[n - 1]
    return h


def assemble_open(chain: BlockChain) -> np.ndarray:
    """The open-boundary operator h: no corners, B_n and C_1 unused."""
    return _tridiagonal_part(chain)


def _tridiagonal_part(chain: BlockChain) -> np.ndarray:
    n, m = chain.n, chain.m
    h = np.zeros((n * m, n * m), dtype=complex)
    for k in range(n):
        h[k * m:(k + 1) * m, k * m:(k + 1) * m] = chain.a[k]
    for k in range(n - 1):
        h[k * m:(k + 1) * m, (k + 1) * m:(k + 2) * m] += chain.b[k]
        h[(k + 1) * m:(k + 2) * m, k * m:(k + 1) * m] += chain.c[k + 1]
    return h


def logdet_shift(matrix: np.ndarray, energy: complex) -> LogDet:
    """log det[E*I - matrix] for an assembled operator."""
    mat = np.asarray(matrix)
    return lu_logdet(energy * np.eye(mat.shape[0]) - mat)


def logdet_ring_shift(chain: BlockChain, energy: complex, bp: BoundaryParam) -> LogDet:
    """log det[E*I - H(z)] evaluated through the balanced form.

    Exact for any xi since the balanced matrix is similar to H(z); avoids
    the |z| = e^{n*xi} overflow of direct assembly.
    """
    return logdet_shift(assemble_balanced(chain, bp.w(chain.n)), energy)


def log_minus_z(z: complex, m: int) -> LogDet:
    """LogDet of (-z)^m, the prefactor of the ring/transfer duality."""
    z = complex(z)
    if z == 0:
        raise ValueError("z must be nonzero")
    return LogDet(m * math.log(abs(z)),
                  wrap_phase(m * (cmath.phase(z) + math.pi)))
