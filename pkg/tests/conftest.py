"""Seeded chain corpora shared by the test modules.

Every helper is deterministic in its arguments, so expected values frozen
in the tests stay valid across platforms.
"""

import sys

import numpy as np

from blockflow import BlockChain


def pytest_terminal_summary(terminalreporter):
    # echo the acceptance PASS/FAIL lines past pytest's output capture
    mod = sys.modules.get("test_acceptance")
    lines = getattr(mod, "RESULTS", None) if mod else None
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)


def _invertible_block(rng, m, scale=1.0, complex_entries=True, min_sv=0.1):
    while True:
        x = rng.uniform(-scale, scale, size=(m, m))
        if complex_entries:
            x = x + 1j * rng.uniform(-scale, scale, size=(m, m))
        if np.linalg.svd(x, compute_uv=False)[-1] > min_sv * scale:
            return x


def random_chain(n, m, seed, scale=1.0, complex_entries=True) -> BlockChain:
    """Generic dense chain; hopping blocks kept comfortably invertible."""
    rng = np.random.default_rng(seed)
    a = np.empty((n, m, m), dtype=complex)
    b = np.empty((n, m, m), dtype=complex)
    c = np.empty((n, m, m), dtype=complex)
    for k in range(n):
        x = rng.uniform(-scale, scale, size=(m, m))
        if complex_entries:
            x = x + 1j * rng.uniform(-scale, scale, size=(m, m))
        a[k] = x
        b[k] = _invertible_block(rng, m, scale, complex_entries)
        c[k] = _invertible_block(rng, m, scale, complex_entries)
    return BlockChain(a=a, b=b, c=c)


def hermitian_chain(n, m, seed, scale=1.0, real=False) -> BlockChain:
    """Chain with Hermitian diagonal blocks and C_{k+1} = B_k^dag cyclically."""
    rng = np.random.default_rng(seed)
    a = np.empty((n, m, m), dtype=complex)
    b = np.empty((n, m, m), dtype=complex)
    for k in range(n):
        x = rng.uniform(-scale, scale, size=(m, m))
        if not real:
            x = x + 1j * rng.uniform(-scale, scale, size=(m, m))
        a[k] = 0.5 * (x + x.conj().T)
        b[k] = _invertible_block(rng, m, scale, complex_entries=not real)
    c = np.empty((n, m, m), dtype=complex)
    for k in range(n):
        c[(k + 1) % n] = b[k].conj().T
    return BlockChain(a=a, b=b, c=c)


def pd_block_tridiag(n, m, seed, margin=0.5):
    """Hermitian positive definite block tridiagonal matrix (dense form)."""
    from blockflow import assemble_open

    chain = hermitian_chain(n, m, seed)
    h = assemble_open(chain)
    h = 0.5 * (h + h.conj().T)
    lo = float(np.linalg.eigvalsh(h)[0])
    return h + (abs(lo) + margin) * np.eye(n * m)


def clean_chain(n) -> BlockChain:
    """Scalar chain with A = 0 and unit hoppings."""
    zeros = np.zeros((n, 1, 1), dtype=complex)
    ones = np.ones((n, 1, 1), dtype=complex)
    return BlockChain(a=zeros, b=ones.copy(), c=ones.copy())
