"""Identities tying the transfer matrix to the ring and open operators.

The central identity, for n >= 3 and any nonzero z:

    det[z I_2m - T(E)] = (-z)^m det[E I_nm - H(z)] / det[B_1 ... B_n].

Its relatives: the open chain satisfies det[E - h] = det T(E)_11 *
det[B_1 ... B_n], and the symmetrized form couples z and 1/z:

    det[T + T^{-1} - (z + 1/z) I]
        = det[E - H(z)] det[E - H(1/z)] / (det[B_1..B_n] det[C_1..C_n]).

All comparisons happen between LogDet values: log-modulus residuals are
scale free, and phases are compared modulo 2 pi with a looser tolerance
(phase error grows with the LU size).

The spectral-curve tracer sweeps the flux angle phi at fixed radial
exponent xi and links the eigenvalue trajectories of the balanced ring
matrix into closed loops; for an exponent separated from the spectrum the
loops are the level sets |z_k(E)| = e^{n xi} of the duality.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field

import numpy as np

from .chains import BlockChain
from .hamiltonian import (assemble_balanced, assemble_bloch, assemble_open,
                          log_minus_z, logdet_shift)
from .linalg import LogDet, lu_logdet, match_tolerance, wrap_phase
from .transfer import (ProductOverflowError, eigenvalues_stabilized,
                       inverse_via_inversion, product)

#: default acceptance tolerances for the identity checks
TOL_LOG = 1e-7
TOL_PHASE_PER_SIZE = 1e-6


@dataclass(frozen=True)
class DualityReport:
    """Outcome of one identity check at a single (E, z)."""

    name: str
    energy: complex
    z: complex | None
    lhs: LogDet
    rhs: LogDet
    residual_log: float
    residual_phase: float
    tol_log: float
    tol_phase: float
    passed: bool
    note: str = ""

    def to_dict(self) -> dict:
        def _num(x):
            return "neg_inf" if x == float("-inf") else x

        return {
            "check": self.name,
            "E": [self.energy.real, self.energy.imag],
            "z": None if self.z is None else [self.z.real, self.z.imag],
            "lhs_log": _num(self.lhs.log_modulus),
            "rhs_log": _num(self.rhs.log_modulus),
            "lhs_phase": self.lhs.phase,
            "rhs_phase": self.rhs.phase,
            "residual_log": _num(self.residual_log),
            "residual_phase": self.residual_phase,
            "tol_log": self.tol_log,
            "tol_phase": self.tol_phase,
            "passed": bool(self.passed),
            "note": self.note,
        }


def _compare(name, energy, z, lhs, rhs, tol_log, tol_phase, note="") -> DualityReport:
    if lhs.is_zero and rhs.is_zero:
        res_log, res_phase = 0.0, 0.0
    elif lhs.is_zero or rhs.is_zero:
        res_log, res_phase = float("inf"), float("inf")
    else:
        res_log = abs(lhs.log_modulus - rhs.log_modulus)
        res_phase = abs(wrap_phase(lhs.phase - rhs.phase))
    return DualityReport(name=name, energy=complex(energy),
                         z=None if z is None else complex(z),
                         lhs=lhs, rhs=rhs,
                         residual_log=res_log, residual_phase=res_phase,
                         tol_log=tol_log, tol_phase=tol_phase,
                         passed=bool(res_log <= tol_log and res_phase <= tol_phase),
                         note=note)


def _logdet_b(chain: BlockChain) -> LogDet:
    out = LogDet(0.0, 0.0)
    for k in range(chain.n):
        out = out * lu_logdet(chain.b[k])
    return out


def _logdet_c(chain: BlockChain) -> LogDet:
    out = LogDet(0.0, 0.0)
    for k in range(chain.n):
        out = out * lu_logdet(chain.c[k])
    return out


def _require_ring(chain: BlockChain, who: str) -> None:
    if chain.n < 3:
        raise ValueError(
            f"{who} requires n >= 3: at n = 2 the ring corners overlap the "
            "inner hoppings and the identity checks are skipped")


def _logdet_zi_minus_t(chain: BlockChain, energy: complex, z: complex) -> tuple[LogDet, str]:
    """log det[zI - T(E)], via stabilized eigenvalues when the product is wild.

    Forming zI - T in doubles cancels catastrophically once the entries of T
    dwarf det[zI - T], so the dense route is only trusted while the entries
    stay moderate; overflow of the raw product is the hard backstop.
    """
    d = 2 * chain.m
    try:
        t = product(chain, energy).matrix
        if float(np.max(np.abs(t))) <= 1e8:
            return lu_logdet(z * np.eye(d) - t), "product"
    except ProductOverflowError:
        pass
    eig = eigenvalues_stabilized(chain, energy)
    total = LogDet(0.0, 0.0)
    log_z = math.log(abs(z))
    for la, ph in zip(eig.log_abs, eig.phase):
        # log(z - z_k) with z_k known only in log-polar form
        if la - log_z > 45.0:
            # z_k dominates: log(-z_k) plus a relative correction
            ratio = cmath.exp(complex(log_z - la, cmath.phase(z) - ph))
            term = complex(la, ph + math.pi) + cmath.log(1.0 - ratio)
        elif log_z - la > 45.0:
            ratio = cmath.exp(complex(la - log_z, ph - cmath.phase(z)))
            term = cmath.log(z) + cmath.log(1.0 - ratio)
        else:
            zk = cmath.exp(complex(la, ph))
            diff = z - zk
            if diff == 0:
                return LogDet(float("-inf"), 0.0), "eigenvalues"
            term = cmath.log(diff)
        total = total * LogDet(term.real, wrap_phase(term.imag))
    return total, "eigenvalues"


def check_duality(chain: BlockChain, energy: complex, z: complex,
                  tol_log: float = TOL_LOG,
                  tol_phase: float | None = None) -> DualityReport:
    """Compare det[zI - T(E)] det[B_1..B_n] with (-z)^m det[E - H(z)]."""
    _require_ring(chain, "check_duality")
    z = complex(z)
    if z == 0:
        raise ValueError("z must be nonzero")
    if tol_phase is None:
        tol_phase = TOL_PHASE_PER_SIZE * chain.n * chain.m
    lhs_t, route = _logdet_zi_minus_t(chain, energy, z)
    lhs = lhs_t * _logdet_b(chain)
    if abs(math.log(abs(z))) < 230.0:
        ring = logdet_shift(assemble_bloch(chain, z), energy)
        note = f"t_route={route}"
    else:
        # extreme |z|: evaluate through the balanced gauge at w = z^{1/n}
        w = cmath.exp(cmath.log(z) / chain.n)
        ring = logdet_shift(assemble_balanced(chain, w), energy)
        note = f"t_route={route}, ring_route=balanced"
    rhs = log_minus_z(z, chain.m) * ring
    return _compare("duality", energy, z, lhs, rhs, tol_log, tol_phase, note)


def check_open_duality(chain: BlockChain, energy: complex,
                       tol_log: float = TOL_LOG,
                       tol_phase: float | None = None) -> DualityReport:
    """Compare det[E - h] with det T(E)_11 * det[B_1..B_n]."""
    if tol_phase is None:
        tol_phase = TOL_PHASE_PER_SIZE * chain.n * chain.m
    lhs = logdet_shift(assemble_open(chain), energy)
    t = product(chain, energy)
    rhs = lu_logdet(t.t11) * _logdet_b(chain)
    return _compare("open-duality", energy, None, lhs, rhs, tol_log, tol_phase)


def check_symmetric_duality(chain: BlockChain, energy: complex, z: complex,
                            tol_log: float = TOL_LOG,
                            tol_phase: float | None = None) -> DualityReport:
    """Compare det[T + T^{-1} - (z + 1/z) I] with
    det[E - H(z)] det[E - H(1/z)] / (det[B_1..B_n] det[C_1..C_n])."""
    _require_ring(chain, "check_symmetric_duality")
    z = complex(z)
    if z == 0:
        raise ValueError("z must be nonzero")
    if tol_phase is None:
        tol_phase = TOL_PHASE_PER_SIZE * chain.n * chain.m
    d = 2 * chain.m
    t = product(chain, energy).matrix
    t_inv = inverse_via_inversion(chain, energy).matrix
    lhs = lu_logdet(t + t_inv - (z + 1.0 / z) * np.eye(d))
    rhs = (logdet_shift(assemble_bloch(chain, z), energy)
           * logdet_shift(assemble_bloch(chain, 1.0 / z), energy)
           / _logdet_b(chain) / _logdet_c(chain))
    return _compare("symmetric-duality", energy, z, lhs, rhs, tol_log, tol_phase)


def check_transfer_routes(chain: BlockChain, energy: complex,
                          tol: float = 1e-6) -> DualityReport:
    """Product route versus resolvent route for T(E), entrywise."""
    from .resolvent import transfer_from_resolvent

    t_prod = product(chain, energy).matrix
    t_res = transfer_from_resolvent(chain, energy).matrix
    scale = float(np.max(np.abs(t_prod)))
    residual = float(np.max(np.abs(t_prod - t_res)))
    return DualityReport(
        name="transfer-routes", energy=complex(energy), z=None,
        lhs=LogDet.from_complex(scale if scale else 1.0),
        rhs=LogDet.from_complex(max(residual, 1e-300)),
        residual_log=residual / max(scale, 1e-300), residual_phase=0.0,
        tol_log=tol, tol_phase=math.inf,
        passed=bool(residual <= tol * max(scale, 1e-300)),
        note="residual_log is ||T_prod - T_res||_max / ||T_prod||_max")


# ---------------------------------------------------------------------------
# spectral curves

@dataclass(frozen=True)
class SpectralCurve:
    """Eigenvalue trajectories of the balanced ring matrix over one flux period.

    ``samples[i, s]`` is the eigenvalue of trajectory s at angle phis[i].
    ``loop_id[s]`` labels the closed loop the trajectory belongs to after
    composing the monodromy over phi in [0, 2 pi); -1 marks trajectories
    whose linking was ambiguous (braid ambiguity) and was not resolved.
    """

    xi: float
    phis: np.ndarray
    samples: np.ndarray
    loop_id: np.ndarray
    ambiguous: bool = False
    notes: tuple[str, ...] = field(default_factory=tuple)

    @property
    def n_loops(self) -> int:
        ids = {int(i) for i in self.loop_id if i >= 0}
        return len(ids)

    def to_csv(self, stream) -> None:
        stream.write("# blockflow-csv v1\n")
        stream.write(f"# spectral curve, xi={self.xi!r}\n")
        stream.write("phi,re_E,im_E,loop_id\n")
        for i, phi in enumerate(self.phis):
            for s in range(self.samples.shape[1]):
                e = self.samples[i, s]
                stream.write(f"{float(phi)!r},{float(e.real)!r},"
                             f"{float(e.imag)!r},{int(self.loop_id[s])}\n")


def _greedy_match(prev: np.ndarray, curr: np.ndarray, tol: float):
    """Nearest-neighbour assignment prev -> curr.

    Returns (perm, ambiguous_slots): perm[s] is the index in curr matched
    to prev[s]; a slot is ambiguous when its best two candidates are
    closer than tol apart (a braid crossing at this resolution).
    """
    k = len(prev)
    dist = np.abs(prev[:, None] - curr[None, :])
    order = np.argsort(dist, axis=None, kind="stable")
    perm = -np.ones(k, dtype=int)
    used = np.zeros(k, dtype=bool)
    for flat in order:
        i, j = divmod(int(flat), k)
        if perm[i] >= 0 or used[j]:
            continue
        perm[i] = j
        used[j] = True
    ambiguous = []
    for i in range(k):
        row = np.sort(dist[i])
        if len(row) > 1 and row[1] - row[0] < tol:
            ambiguous.append(i)
    return perm, ambiguous


def trace_spectral_curve(chain: BlockChain, xi: float,
                         phi_steps: int = 64) -> SpectralCurve:
    """Sweep phi over [0, 2 pi) at fixed xi and link the eigenvalues.

    Eigenvalues of the balanced matrix at w = exp(xi + i phi / n) are
    matched between consecutive angles by nearest neighbour; the loop
    structure is the cycle decomposition of the permutation collected
    around the full period (the spectrum at phi = 2 pi equals the one at
    phi = 0).
    """
    if phi_steps < 8:
        raise ValueError("phi_steps must be at least 8")
    n, m = chain.n, chain.m
    size = n * m
    phis = np.linspace(0.0, 2.0 * math.pi, phi_steps, endpoint=False)
    samples = np.empty((phi_steps, size), dtype=complex)
    notes: list[str] = []

    def spectrum(phi: float) -> np.ndarray:
        w = cmath.exp(complex(xi, phi / n))
        vals = np.linalg.eigvals(assemble_balanced(chain, w))
        return vals

    first = spectrum(phis[0])
    # deterministic start order: real part, then imaginary part
    start_order = np.lexsort((first.imag, first.real))
    samples[0] = first[start_order]
    tol = match_tolerance(first)
    ambiguous_slots: set[int] = set()
    monodromy = np.arange(size)

    prev = samples[0]
    for i in range(1, phi_steps):
        curr = spectrum(phis[i])
        perm, amb = _greedy_match(prev, curr, tol)
        samples[i] = curr[perm]
        ambiguous_slots.update(amb)
        prev = samples[i]
    closing = spectrum(2.0 * math.pi)
    perm, amb = _greedy_match(prev, closing, tol)
    ambiguous_slots.update(amb)
    # identify the phi = 2 pi spectrum with the phi = 0 one
    ident, amb2 = _greedy_match(closing[perm], samples[0], tol)
    ambiguous_slots.update(amb2)
    monodromy = ident

    loop_id = -np.ones(size, dtype=int)
    next_id = 0
    for s in range(size):
        if loop_id[s] != -1:
            continue
        cycle = [s]
        cur = monodromy[s]
        while cur != s and len(cycle) <= size:
            cycle.append(cur)
            cur = monodromy[cur]
        for member in cycle:
            loop_id[member] = next_id
        next_id += 1
    ambiguous = bool(ambiguous_slots)
    if ambiguous:
        touched = {int(loop_id[s]) for s in ambiguous_slots}
        loop_id = np.array([-1 if int(l) in touched else int(l) for l in loop_id])
        notes.append(f"braid ambiguity at {len(ambiguous_slots)} trajectories; "
                     "affected loops left unlinked")
    return SpectralCurve(xi=float(xi), phis=phis, samples=samples,
                         loop_id=loop_id, ambiguous=ambiguous,
                         notes=tuple(notes))
