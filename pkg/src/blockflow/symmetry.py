"""Spectral symmetries of Hermitian-block chains.

A chain with A_k Hermitian and C_{k+1} = B_k^dag (cyclically, so
C_1 = B_n^dag) has transfer matrices obeying the indefinite relation

    T(Ebar)^dag Sigma_n T(E) = Sigma_n,     Sigma_k = i [[0, -B_k^dag],
                                                         [B_k,  0    ]],

built one factor at a time: t_k(Ebar)^dag Sigma_k t_k(E) = Sigma_{k-1}
with Sigma_0 identified with Sigma_n.  Consequences checked here: at real
E the spectrum of T is invariant under z -> 1/zbar (pairs with opposite
exponents), at non-real E no eigenvalue reaches the unit circle, and for
real symmetric chains the spectrum closes into quadruples
{z, zbar, 1/z, 1/zbar}.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .chains import BlockChain
from .exponents import exponent_spectrum
from .transfer import one_step, product

#: tolerance for the structural Hermitian-chain test
TOL_STRUCTURE = 1e-12

#: exponent pairing tolerance |log|z| + log|z'||
TOL_PAIR = 1e-7


class NotHermitianChainError(ValueError):
    """The chain lacks the structure A_k = A_k^dag, C_{k+1} = B_k^dag."""


def _require_hermitian(chain: BlockChain) -> None:
    if not chain.is_hermitian(tol=TOL_STRUCTURE):
        raise NotHermitianChainError(
            "not a Hermitian chain: need A_k = A_k^dag and C_{k+1} = B_k^dag "
            "(cyclically) within 1e-12")


def sigma_form(chain: BlockChain, k: int) -> np.ndarray:
    """Sigma_k = i [[0, -B_k^dag], [B_k, 0]] for 1-based k."""
    m = chain.m
    b = chain.b[k - 1]
    s = np.zeros((2 * m, 2 * m), dtype=complex)
    s[:m, m:] = -1j * b.conj().T
    s[m:, :m] = 1j * b
    return s


@dataclass(frozen=True)
class SymplecticReport:
    """Residuals of the conservation law, whole product and per step."""

    energy: complex
    residual: float
    scale: float
    step_residuals: tuple[float, ...]
    passed: bool

    def to_dict(self) -> dict:
        return {"E": [self.energy.real, self.energy.imag],
                "residual": self.residual, "scale": self.scale,
                "step_residuals": list(self.step_residuals),
                "passed": bool(self.passed)}


def check_symplectic(chain: BlockChain, energy: complex,
                     tol: float = 1e-9) -> SymplecticReport:
    """Verify T(Ebar)^dag Sigma_n T(E) = Sigma_n and each one-step relation.

    The residual is compared against tol times a conditioning scale
    ||T(Ebar)||*||T(E)||*||Sigma_n||, the size at which roundoff enters
    the triple product.
    """
    _require_hermitian(chain)
    n = chain.n
    sigma_n = sigma_form(chain, n)
    t_e = product(chain, energy).matrix
    t_ebar = product(chain, complex(energy).conjugate()).matrix
    lhs = t_ebar.conj().T @ sigma_n @ t_e
    residual = float(np.max(np.abs(lhs - sigma_n)))
    scale = float(np.max(np.abs(sigma_n))
                  * max(1.0, np.linalg.norm(t_e, 2) * np.linalg.norm(t_ebar, 2)))
    step_residuals = []
    for k in range(1, n + 1):
        tk_e = one_step(chain, k, energy)
        tk_ebar = one_step(chain, k, complex(energy).conjugate())
        target = sigma_form(chain, k - 1) if k > 1 else sigma_n
        got = tk_ebar.conj().T @ sigma_form(chain, k) @ tk_e
        step_residuals.append(float(np.max(np.abs(got - target))))
    return SymplecticReport(energy=complex(energy), residual=residual,
                            scale=scale,
                            step_residuals=tuple(step_residuals),
                            passed=bool(residual <= tol * scale))


@dataclass(frozen=True)
class PairingReport:
    """Pairing structure of the transfer spectrum.

    pair_id[k] groups eigenvalues: members of one pair (or quadruple)
    share an id; unpaired eigenvalues keep id -1 and are listed in
    ``unmatched``.  Eigenvalues with |log|z|| <= TOL_PAIR are flagged as
    unit-circle members (self-paired under z -> 1/zbar).
    """

    mode: str
    energy: complex
    log_abs: np.ndarray
    phase: np.ndarray
    pair_id: np.ndarray
    unit_circle: np.ndarray
    unmatched: tuple[int, ...]
    max_defect: float

    def to_dict(self) -> dict:
        return {
            "mode": self.mode,
            "E": [self.energy.real, self.energy.imag],
            "log_abs": [float(x) for x in self.log_abs],
            "phase": [float(x) for x in self.phase],
            "pair_id": [int(i) for i in self.pair_id],
            "unit_circle": [bool(u) for u in self.unit_circle],
            "unmatched": list(self.unmatched),
            "max_defect": self.max_defect,
        }


def detect_pairings(chain: BlockChain, energy: complex,
                    mode: str = "hermitian-real-E") -> PairingReport:
    """Group the transfer eigenvalues into symmetry multiplets.

    mode "hermitian-real-E": pairs (z, 1/zbar), i.e. opposite log moduli
    with equal phases; requires a Hermitian chain and real E to be
    meaningful.  mode "real-symmetric": quadruples {z, zbar, 1/z, 1/zbar}
    (pairs degenerate to size 2 on the real axis or the unit circle).
    Unmatched eigenvalues are reported, not raised.
    """
    if mode not in ("hermitian-real-E", "real-symmetric"):
        raise ValueError(f"unknown pairing mode {mode!r}")
    spectrum = exponent_spectrum(chain, energy)
    eig = spectrum.eigenvalues
    count = len(eig.log_abs)
    log_abs = eig.log_abs
    phase = eig.phase
    unit_circle = np.abs(log_abs) <= TOL_PAIR
    pair_id = -np.ones(count, dtype=int)
    next_id = 0
    max_defect = 0.0
    tol_phase = max(1e-6, TOL_PAIR * chain.n)

    def phase_gap(i, j, sign):
        # sign +1: phases equal (partner 1/zbar); -1: opposite (partner 1/z)
        d = phase[i] - sign * phase[j]
        return abs(math.remainder(d, 2.0 * math.pi))

    for i in range(count):
        if pair_id[i] >= 0:
            continue
        if unit_circle[i] and mode == "hermitian-real-E":
            # z -> 1/zbar fixes the unit circle pointwise: self-paired
            pair_id[i] = next_id
            next_id += 1
            continue
        best_j, best_mod, best_ph = -1, math.inf, math.inf
        for j in range(count):
            if j == i or pair_id[j] >= 0:
                continue
            mod_defect = abs(log_abs[i] + log_abs[j])
            if mode == "hermitian-real-E":
                ph_defect = phase_gap(i, j, +1)
            else:
                ph_defect = min(phase_gap(i, j, +1), phase_gap(i, j, -1))
            if mod_defect + ph_defect < best_mod + best_ph:
                best_j, best_mod, best_ph = j, mod_defect, ph_defect
        if best_j >= 0 and best_mod <= TOL_PAIR and best_ph <= tol_phase:
            pair_id[i] = pair_id[best_j] = next_id
            next_id += 1
            max_defect = max(max_defect, best_mod)
    if mode == "real-symmetric":
        # merge conjugate pairs of pairs into quadruples
        for i in range(count):
            if pair_id[i] < 0:
                continue
            for j in range(count):
                if pair_id[j] < 0 or pair_id[j] == pair_id[i]:
                    continue
                if abs(log_abs[i] - log_abs[j]) <= TOL_PAIR \
                        and phase_gap(i, j, -1) <= TOL_PAIR * 10:
                    old = pair_id[j]
                    pair_id[pair_id == old] = pair_id[i]
    unmatched = tuple(int(i) for i in np.flatnonzero(pair_id < 0))
    return PairingReport(mode=mode, energy=complex(energy),
                         log_abs=log_abs.copy(), phase=phase.copy(),
                         pair_id=pair_id, unit_circle=unit_circle,
                         unmatched=unmatched, max_defect=max_defect)


@dataclass(frozen=True)
class UnitCircleReport:
    energy: complex
    margin: float
    passed: bool

    def to_dict(self) -> dict:
        return {"E": [self.energy.real, self.energy.imag],
                "margin": self.margin, "passed": bool(self.passed)}


def check_unit_circle_exclusion(chain: BlockChain, energy: complex,
                                min_im: float = 1e-8) -> UnitCircleReport:
    """At Im E != 0 a Hermitian chain has no unit-circle eigenvalue.

    Returns the margin min_k |log|z_k||, which is strictly positive and
    grows with |Im E|.
    """
    _require_hermitian(chain)
    if abs(complex(energy).imag) < min_im:
        raise ValueError(f"need |Im E| >= {min_im} for the exclusion check")
    spectrum = exponent_spectrum(chain, energy)
    margin = float(np.min(np.abs(spectrum.eigenvalues.log_abs)))
    return UnitCircleReport(energy=complex(energy), margin=margin,
                            passed=bool(margin > 0.0))
