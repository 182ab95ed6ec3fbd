"""Radial exponents of the transfer spectrum and their integral identities.

The 2m eigenvalues z_k(E) of T(E) define exponents xi_k = log|z_k| / n.
These are finite-chain objects tied to one realization; they are not the
Lyapunov exponents of an infinite chain, although they converge to them
in distribution for self-averaging models.  Everything here is exact at
finite n:

* sum rule: sum_k xi_k = (1/n) sum_j (log|det C_j| - log|det B_j|);
* the Jensen identity relating the exponents below a contour xi to the
  flux average of log|det[H(e^{n xi + i phi}) - E]|;
* its xi = 0 corollary for the sum of positive exponents;
* the counting function N(xi, E) and a Hadamard-Fischer upper bound.

Quadratures are periodic trapezoid sums, spectrally accurate because the
integrand is analytic in phi whenever the contour stays away from the
exponents.  Sums over nodes use pairwise accumulation (math.fsum) so
results are independent of summation order.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass

import numpy as np

from .chains import BlockChain
from .duality import _logdet_b, _logdet_c
from .hamiltonian import assemble_balanced, logdet_shift
from .linalg import lu_logdet
from .transfer import LogEigenvalues, eigenvalues_stabilized, product

#: minimum distance of an integration contour from any exponent
DELTA_EDGE = 1e-6

#: default number of flux quadrature nodes
QUAD_POINTS = 256


class ContourTooCloseError(ValueError):
    """The requested contour xi runs through (or hugs) an exponent."""

    def __init__(self, message: str, suggested_xi: float):
        super().__init__(message)
        self.suggested_xi = suggested_xi


class UnitCircleEigenvalueError(ValueError):
    """A transfer eigenvalue sits on the unit circle, |z_k| = 1."""


@dataclass(frozen=True)
class ExponentSpectrum:
    """Exponents xi_k with the eigenvalues they came from."""

    xi: np.ndarray
    eigenvalues: LogEigenvalues
    energy: complex
    n: int
    m: int
    method: str

    @property
    def sum(self) -> float:
        return float(math.fsum(self.xi))

    def sum_rule_value(self, chain: BlockChain) -> float:
        """(1/n) sum_j (log|det C_j| - log|det B_j|), the exact sum of xi_k."""
        logs = [lu_logdet(chain.c[k]).log_modulus - lu_logdet(chain.b[k]).log_modulus
                for k in range(chain.n)]
        return math.fsum(logs) / chain.n


def exponent_spectrum(chain: BlockChain, energy: complex,
                      method: str = "auto") -> ExponentSpectrum:
    """All 2m exponents of T(E), descending.

    ``method`` selects the eigenvalue route: "cyclic" (stabilized, default
    for every size), "direct" (plain eigensolve of the formed product;
    small chains only, kept as an oracle route).
    """
    if method not in ("auto", "cyclic", "direct"):
        raise ValueError(f"unknown method {method!r}")
    if method == "direct":
        t = product(chain, energy).matrix
        vals = np.linalg.eigvals(t)
        order = np.argsort(-np.abs(vals), kind="stable")
        vals = vals[order]
        eig = LogEigenvalues(log_abs=np.log(np.abs(vals)),
                             phase=np.angle(vals), n=chain.n)
    else:
        eig = eigenvalues_stabilized(chain, energy)
    return ExponentSpectrum(xi=eig.xi.copy(), eigenvalues=eig,
                            energy=complex(energy), n=chain.n, m=chain.m,
                            method="direct" if method == "direct" else "cyclic")


def _flux_average(chain: BlockChain, energy: complex, xi: float,
                  quad_points: int) -> float:
    """(1/2 pi) integral of log|det[H(e^{n xi + i phi}) - E]| d phi.

    Evaluated through the balanced gauge, which is similar to H(z) with
    entries O(e^{|xi|}); the trapezoid rule on a periodic analytic
    integrand converges geometrically.
    """
    n = chain.n
    values = []
    for j in range(quad_points):
        phi = 2.0 * math.pi * j / quad_points
        w = cmath.exp(complex(xi, phi / n))
        ld = logdet_shift(assemble_balanced(chain, w), energy)
        if ld.is_zero:
            raise ContourTooCloseError(
                f"det[H - E] vanished on the contour at phi={phi:.6f}; "
                f"shift xi away from an exponent", suggested_xi=xi + 10 * DELTA_EDGE)
        values.append(ld.log_modulus)
    return math.fsum(values) / quad_points


def _guard_contour(spectrum: ExponentSpectrum, xi: float) -> None:
    gaps = np.abs(spectrum.xi - xi)
    if gaps.size and float(gaps.min()) < DELTA_EDGE:
        offender = int(np.argmin(gaps))
        xs = np.sort(spectrum.xi)
        # suggest the midpoint of the widest nearby gap
        candidates = [xi + 0.5, xi - 0.5]
        for lo, hi in zip(xs[:-1], xs[1:]):
            if hi - lo > 4 * DELTA_EDGE:
                candidates.append(0.5 * (lo + hi))
        best = min(candidates, key=lambda c: abs(c - xi)
                   if np.abs(spectrum.xi - c).min() > 2 * DELTA_EDGE else math.inf)
        raise ContourTooCloseError(
            f"contour xi={xi!r} is within {DELTA_EDGE} of exponent "
            f"xi_{offender}={spectrum.xi[offender]!r}", suggested_xi=float(best))


@dataclass(frozen=True)
class JensenReport:
    """Both sides of the Jensen identity at contour xi."""

    energy: complex
    xi: float
    lhs: float
    rhs: float
    residual: float
    quad_points: int
    convergence_estimate: float
    margin: float

    def to_dict(self) -> dict:
        return {
            "E": [self.energy.real, self.energy.imag],
            "xi": self.xi,
            "lhs": self.lhs,
            "rhs": self.rhs,
            "residual": self.residual,
            "quad_points": self.quad_points,
            "convergence_estimate": self.convergence_estimate,
            "margin": self.margin,
        }


def jensen_identity_check(chain: BlockChain, energy: complex, xi: float,
                          quad_points: int = QUAD_POINTS) -> JensenReport:
    """Evaluate both sides of

        (1/m) sum_{xi_k < xi} (xi - xi_k) - xi
            = (1/(m n)) <log|det[H(e^{n xi + i phi}) - E]|>_phi
              - (1/(m n)) sum_j log|det C_j|.
    """
    if quad_points < 8 or quad_points % 2:
        raise ValueError("quad_points must be even and at least 8")
    n, m = chain.n, chain.m
    spectrum = exponent_spectrum(chain, energy)
    _guard_contour(spectrum, xi)
    margin = float(np.min(np.abs(spectrum.xi - xi)))
    below = spectrum.xi[spectrum.xi < xi]
    lhs = math.fsum(float(xi - x) for x in below) / m - xi
    log_c = _logdet_c(chain).log_modulus
    full = _flux_average(chain, energy, xi, quad_points)
    half = _flux_average(chain, energy, xi, quad_points // 2)
    rhs = full / (m * n) - log_c / (m * n)
    rhs_half = half / (m * n) - log_c / (m * n)
    return JensenReport(energy=complex(energy), xi=float(xi), lhs=lhs, rhs=rhs,
                        residual=abs(lhs - rhs), quad_points=quad_points,
                        convergence_estimate=abs(rhs - rhs_half), margin=margin)


def positive_exponent_sum(chain: BlockChain, energy: complex,
                          quad_points: int = QUAD_POINTS) -> float:
    """sum_{xi_k > 0} xi_k via the unit-circle flux average:

        (1/n) <log|det[H(e^{i theta}) - E]|>_theta - (1/n) log|det B_1..B_n|.

    Requires the unit circle free of transfer eigenvalues; the offender is
    named otherwise.
    """
    spectrum = exponent_spectrum(chain, energy)
    k = int(np.argmin(np.abs(spectrum.xi)))
    if abs(spectrum.xi[k]) < DELTA_EDGE:
        eig = spectrum.eigenvalues
        raise UnitCircleEigenvalueError(
            f"transfer eigenvalue z_{k} with log|z|={eig.log_abs[k]:.3e}, "
            f"phase={eig.phase[k]:.6f} lies on the unit circle; the "
            "corollary needs |z_k| != 1 for all k")
    average = _flux_average(chain, energy, 0.0, quad_points)
    return average / chain.n - _logdet_b(chain).log_modulus / chain.n


def counting_function(chain: BlockChain, energy: complex, xi: float) -> int:
    """N(xi, E): number of exponents strictly below xi."""
    spectrum = exponent_spectrum(chain, energy)
    _guard_contour(spectrum, xi)
    return int(np.sum(spectrum.xi < xi))


@dataclass(frozen=True)
class HadamardFisherReport:
    """The exponent partial sum against its concavity bound."""

    energy: complex
    xi: float
    lhs: float
    rhs: float
    slack: float
    passed: bool

    def to_dict(self) -> dict:
        return {"E": [self.energy.real, self.energy.imag], "xi": self.xi,
                "lhs": self.lhs, "rhs": self.rhs, "slack": self.slack,
                "passed": bool(self.passed)}


def hadamard_fisher_bound(chain: BlockChain, energy: complex,
                          xi: float) -> HadamardFisherReport:
    """Check sum_k (xi - xi_k) theta(xi - xi_k) - m xi against

        (1/(2n)) sum_k log det[(A_k^dag - Ebar)(A_k - E)
                               + e^{2 xi} B_k^dag B_k + e^{-2 xi} C_k^dag C_k]
        - (1/n) sum_j log|det C_j|.
    """
    n, m = chain.n, chain.m
    spectrum = exponent_spectrum(chain, energy)
    lhs = math.fsum(float(xi - x) for x in spectrum.xi if x < xi) - m * xi
    e2 = math.exp(2.0 * xi)
    em2 = math.exp(-2.0 * xi)
    eye = np.eye(m)
    terms = []
    for k in range(n):
        shifted = chain.a[k] - energy * eye
        gram = (shifted.conj().T @ shifted
                + e2 * chain.b[k].conj().T @ chain.b[k]
                + em2 * chain.c[k].conj().T @ chain.c[k])
        terms.append(lu_logdet(gram).log_modulus)
    rhs = math.fsum(terms) / (2.0 * n) - _logdet_c(chain).log_modulus / n
    slack = rhs - lhs
    return HadamardFisherReport(energy=complex(energy), xi=float(xi),
                                lhs=lhs, rhs=rhs, slack=slack,
                                passed=bool(slack >= -1e-9 * max(1.0, abs(rhs))))


def exponent_csv(spectrum: ExponentSpectrum, stream, pair_ids=None) -> None:
    """Write the spectrum as CSV: k, re_z, im_z, xi, pair_id.

    Values of z beyond double range are written as their log-polar parts
    in the extra columns and the sentinel 'overflow' in re_z/im_z.
    """
    stream.write("# blockflow-csv v1\n")
    stream.write("k,re_z,im_z,xi,pair_id,log_abs_z,arg_z\n")
    eig = spectrum.eigenvalues
    for k in range(len(spectrum.xi)):
        la, ph = float(eig.log_abs[k]), float(eig.phase[k])
        if abs(la) > 700.0:
            re_s, im_s = "overflow", "overflow"
        else:
            z = cmath.exp(complex(la, ph))
            re_s, im_s = repr(z.real), repr(z.imag)
        pid = -1 if pair_ids is None else int(pair_ids[k])
        stream.write(f"{k},{re_s},{im_s},{float(spectrum.xi[k])!r},{pid},{la!r},{ph!r}\n")
