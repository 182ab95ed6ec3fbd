"""Block tridiagonal chain models.

A chain of length n with block size m is the coefficient data of the
difference equation

    C_k u_{k-1} + A_k u_k + B_k u_{k+1} = E u_k,       k = 1..n,

with every hopping block B_k, C_k invertible.  B_k couples site k to k+1
and C_k couples site k to k-1; the blocks B_n and C_1 only enter through
the ring closure (the corner blocks of the Bloch matrix) or, for the open
chain, not at all.

Generators for the standard disorder models are provided along with a
small JSON-serializable ModelSpec.  A given (kind, parameters, seed)
produces bit-identical blocks on every platform: all draws go through
numpy's default_rng (PCG64), whose stream is part of numpy's API.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .linalg import require_invertible

#: hopping blocks with |det| at or below this are resampled by generators
EPS_INV = 1e-3


@dataclass(frozen=True)
class BlockChain:
    """Blocks of a length-n chain; arrays have shape (n, m, m).

    a[k], b[k], c[k] hold A_{k+1}, B_{k+1}, C_{k+1} in the 1-based notation
    above.  Construction validates shapes, finiteness and invertibility of
    every hopping block.
    """

    a: np.ndarray
    b: np.ndarray
    c: np.ndarray

    def __post_init__(self):
        a = np.asarray(self.a, dtype=complex)
        b = np.asarray(self.b, dtype=complex)
        c = np.asarray(self.c, dtype=complex)
        if a.ndim != 3 or a.shape[1] != a.shape[2]:
            raise ValueError(f"diagonal blocks must have shape (n, m, m), got {a.shape}")
        if a.shape != b.shape or a.shape != c.shape:
            raise ValueError("block arrays must share one shape")
        if a.shape[0] < 2:
            raise ValueError("a chain needs at least 2 sites")
        if not (np.all(np.isfinite(a)) and np.all(np.isfinite(b)) and np.all(np.isfinite(c))):
            raise ValueError("chain blocks must be finite")
        for k in range(a.shape[0]):
            require_invertible(b[k], name=f"B_{k + 1}")
            require_invertible(c[k], name=f"C_{k + 1}")
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "b", b)
        object.__setattr__(self, "c", c)

    @property
    def n(self) -> int:
        return self.a.shape[0]

    @property
    def m(self) -> int:
        return self.a.shape[1]

    def is_hermitian(self, tol: float = 1e-12) -> bool:
        """Structural check: A_k Hermitian, C_{k+1} = B_k^dag cyclically."""
        scale = max(1.0, float(max(np.max(np.abs(self.a)), np.max(np.abs(self.b)))))
        for k in range(self.n):
            if np.max(np.abs(self.a[k] - self.a[k].conj().T)) > tol * scale:
                return False
            partner = self.c[(k + 1) % self.n]
            if np.max(np.abs(partner - self.b[k].conj().T)) > tol * scale:
                return False
        return True

    def reversed(self) -> "BlockChain":
        """The chain traversed in the opposite direction.

        Site order is reversed and the roles of the hopping blocks swap:
        A'_k = A_{n+1-k}, B'_k = C_{n+1-k}, C'_k = B_{n+1-k}.
        """
        return BlockChain(a=self.a[::-1].copy(),
                          b=self.c[::-1].copy(),
                          c=self.b[::-1].copy())


def hatano_nelson(n: int, diag_low: float, diag_high: float, seed: int) -> BlockChain:
    """Scalar chain with unit hoppings and uniform on-site disorder.

    The asymmetry parameter of this model lives in the boundary factor of
    the Bloch matrix, not in the blocks, so B_k = C_k = 1 throughout.
    """
    rng = np.random.default_rng(seed)
    a = rng.uniform(diag_low, diag_high, size=n).astype(complex).reshape(n, 1, 1)
    ones = np.ones((n, 1, 1), dtype=complex)
    return BlockChain(a=a, b=ones.copy(), c=ones.copy())


def random_tridiag(n: int, low: float, high: float, seed: int) -> BlockChain:
    """Scalar chain with all of a_k, b_k, c_k drawn uniform on [low, high].

    Off-diagonal draws with |value| <= EPS_INV are redrawn so the chain
    is comfortably invertible.
    """
    rng = np.random.default_rng(seed)
    a = rng.uniform(low, high, size=n)

    def draw(count):
        out = np.empty(count)
        for i in range(count):
            x = rng.uniform(low, high)
            while abs(x) <= EPS_INV:
                x = rng.uniform(low, high)
            out[i] = x
        return out

    b = draw(n)
    c = draw(n)
    return BlockChain(a=a.astype(complex).reshape(n, 1, 1),
                      b=b.astype(complex).reshape(n, 1, 1),
                      c=c.astype(complex).reshape(n, 1, 1))


def anderson_strip(n: int, m: int, w: float, seed: int) -> BlockChain:
    """Strip of width m: transverse hopping plus diagonal disorder.

    A_k = T + D_k with T the open-boundary transverse hopping matrix
    (zero diagonal, unit first off-diagonals) and D_k diagonal with
    entries uniform on [-w/2, w/2].  Longitudinal hoppings are identity.
    """
    rng = np.random.default_rng(seed)
    t = np.zeros((m, m))
    for i in range(m - 1):
        t[i, i + 1] = 1.0
        t[i + 1, i] = 1.0
    a = np.empty((n, m, m), dtype=complex)
    for k in range(n):
        a[k] = t + np.diag(rng.uniform(-w / 2.0, w / 2.0, size=m))
    eye = np.broadcast_to(np.eye(m, dtype=complex), (n, m, m)).copy()
    return BlockChain(a=a, b=eye, c=eye.copy())


def banded_random(n_sites: int, b: int, low: float, high: float, seed: int) -> BlockChain:
    """Chain obtained by partitioning a random banded matrix into b x b blocks.

    The full n_sites x n_sites matrix has i.i.d. uniform entries inside the
    band |i - j| <= b and is redrawn until every hopping block satisfies
    |det| > EPS_INV.  The partition makes B_k lower triangular and C_k
    upper triangular; b = 1 recovers the random tridiagonal layout.
    """
    if n_sites % b != 0:
        raise ValueError(f"n_sites={n_sites} not divisible by block size b={b}")
    n = n_sites // b
    if n < 2:
        raise ValueError("need at least 2 blocks")
    rng = np.random.default_rng(seed)
    while True:
        full = np.zeros((n_sites, n_sites))
        idx = np.arange(n_sites)
        band = np.abs(idx[:, None] - idx[None, :]) <= b
        full[band] = rng.uniform(low, high, size=int(band.sum()))
        blocks = full.reshape(n, b, n, b).swapaxes(1, 2)
        hop_up = blocks[np.arange(n - 1), np.arange(1, n)]
        hop_dn = blocks[np.arange(1, n), np.arange(n - 1)]
        dets = [np.linalg.det(h) for h in hop_up] + [np.linalg.det(h) for h in hop_dn]
        if min(abs(d) for d in dets) > EPS_INV:
            break
    a = blocks[np.arange(n), np.arange(n)].astype(complex)
    bk = np.empty((n, b, b), dtype=complex)
    ck = np.empty((n, b, b), dtype=complex)
    bk[: n - 1] = hop_up
    ck[1:] = hop_dn
    # ring-closure blocks are not part of the banded matrix; keep the
    # triangular shape so the chain stays in the same family
    bk[n - 1] = np.tril(rng.uniform(low, high, size=(b, b)))
    ck[0] = np.triu(rng.uniform(low, high, size=(b, b)))
    while abs(np.linalg.det(bk[n - 1])) <= EPS_INV:
        bk[n - 1] = np.tril(rng.uniform(low, high, size=(b, b)))
    while abs(np.linalg.det(ck[0])) <= EPS_INV:
        ck[0] = np.triu(rng.uniform(low, high, size=(b, b)))
    return BlockChain(a=a, b=bk, c=ck)


def reassemble_banded(chain: BlockChain) -> np.ndarray:
    """Rebuild the open (corner-free) full matrix from a chain's blocks."""
    n, m = chain.n, chain.m
    full = np.zeros((n * m, n * m), dtype=complex)
    for k in range(n):
        full[k * m:(k + 1) * m, k * m:(k + 1) * m] = chain.a[k]
    for k in range(n - 1):
        full[k * m:(k + 1) * m, (k + 1) * m:(k + 2) * m] = chain.b[k]
        full[(k + 1) * m:(k + 2) * m, k * m:(k + 1) * m] = chain.c[k + 1]
    return full


_RANDOM_KINDS = ("hatano-nelson", "random-tridiag", "anderson-strip", "banded-random")
KINDS = _RANDOM_KINDS + ("explicit",)


def _complex_from_json(entry):
    if isinstance(entry, (list, tuple)):
        if len(entry) != 2:
            raise ValueError(f"complex entries are [re, im] pairs, got {entry!r}")
        return complex(entry[0], entry[1])
    return complex(entry)


def _complex_to_json(value: complex):
    if value.imag == 0:
        return value.real
    return [value.real, value.imag]


def _blocks_from_json(data, what: str) -> np.ndarray:
    arr = np.array([[[_complex_from_json(e) for e in row] for row in blk] for blk in data])
    if arr.ndim != 3:
        raise ValueError(f"{what} must be a list of matrices")
    return arr


@dataclass(frozen=True)
class ModelSpec:
    """JSON-serializable description of a chain.

    Fields follow the config format of the command line tool:
    kind, n, m, w or interval, seed; the explicit kind instead carries
    the block lists A, B, C with entries as numbers or [re, im] pairs.
    """

    kind: str
    n: int = 0
    m: int = 1
    w: float | None = None
    interval: tuple[float, float] | None = None
    seed: int | None = None
    blocks: dict | None = field(default=None, repr=False)

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown model kind {self.kind!r}; known: {', '.join(KINDS)}")
        if self.kind in _RANDOM_KINDS:
            if self.seed is None:
                raise ValueError(f"model kind {self.kind!r} requires a seed")
            if self.n < 2:
                raise ValueError("n must be at least 2")
        if self.kind == "anderson-strip" and self.w is None:
            raise ValueError("anderson-strip requires a disorder width w")
        if self.kind in ("hatano-nelson", "random-tridiag", "banded-random") \
                and self.interval is None:
            raise ValueError(f"{self.kind} requires interval [low, high]")
        if self.kind == "explicit" and not self.blocks:
            raise ValueError("explicit model requires block lists A, B, C")

    def build(self) -> BlockChain:
        if self.kind == "hatano-nelson":
            low, high = self.interval
            return hatano_nelson(self.n, low, high, self.seed)
        if self.kind == "random-tridiag":
            low, high = self.interval
            return random_tridiag(self.n, low, high, self.seed)
        if self.kind == "anderson-strip":
            return anderson_strip(self.n, self.m, self.w, self.seed)
        if self.kind == "banded-random":
            low, high = self.interval
            return banded_random(self.n, self.m, low, high, self.seed)
        return BlockChain(a=_blocks_from_json(self.blocks["A"], "A"),
                          b=_blocks_from_json(self.blocks["B"], "B"),
                          c=_blocks_from_json(self.blocks["C"], "C"))

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)

    def to_dict(self) -> dict:
        if self.kind == "explicit":
            return {"kind": self.kind, **self.blocks}
        doc: dict = {"kind": self.kind, "n": self.n, "seed": self.seed}
        if self.kind in ("anderson-strip", "banded-random"):
            doc["m"] = self.m
        if self.w is not None:
            doc["w"] = self.w
        if self.interval is not None:
            doc["interval"] = list(self.interval)
        return doc

    @classmethod
    def from_dict(cls, doc: dict) -> "ModelSpec":
        if not isinstance(doc, dict) or "kind" not in doc:
            raise ValueError("model document must be an object with a 'kind' field")
        kind = doc["kind"]
        if kind == "explicit":
            missing = [f for f in ("A", "B", "C") if f not in doc]
            if missing:
                raise ValueError(f"explicit model missing fields: {', '.join(missing)}")
            blocks = {"A": doc["A"], "B": doc["B"], "C": doc["C"]}
            n = len(doc["A"])
            m = len(doc["A"][0]) if n else 0
            return cls(kind=kind, n=n, m=m, blocks=blocks)
        interval = doc.get("interval")
        return cls(kind=kind,
                   n=int(doc.get("n", 0)),
                   m=int(doc.get("m", 1)),
                   w=float(doc["w"]) if "w" in doc else None,
                   interval=tuple(float(x) for x in interval) if interval else None,
                   seed=int(doc["seed"]) if "seed" in doc else None)

    @classmethod
    def from_json(cls, text: str) -> "ModelSpec":
        return cls.from_dict(json.loads(text))


def chain_to_spec(chain: BlockChain) -> ModelSpec:
    """Explicit ModelSpec for an arbitrary chain (round-trips exactly)."""
    blocks = {
        name: [[[_complex_to_json(complex(e)) for e in row] for row in blk]
               for blk in arr]
        for name, arr in (("A", chain.a), ("B", chain.b), ("C", chain.c))
    }
    return ModelSpec(kind="explicit", n=chain.n, m=chain.m, blocks=blocks)
