"""Spin-1/2 and truncated-oscillator operators on tensor-product spaces.

Ordering convention: the first factor is the most significant index
(``np.kron`` order).  For qubits, index 0 is spin up (S_z = +1/2).
"""

import numpy as np
import scipy.sparse as sp

SX = np.array([[0, 1], [1, 0]], dtype=complex) / 2
SY = np.array([[0, -1j], [1j, 0]], dtype=complex) / 2
SZ = np.array([[1, 0], [0, -1]], dtype=complex) / 2
SPIN = (SX, SY, SZ)

PAULI = {
    "I": np.eye(2, dtype=complex),
    "X": 2 * SX,
    "Y": 2 * SY,
    "Z": 2 * SZ,
}


def embed(op, site, dims):
    """Place ``op`` on factor ``site`` of a product space with factor ``dims``."""
    left = int(np.prod(dims[:site], dtype=np.int64))
    right = int(np.prod(dims[site + 1:], dtype=np.int64))
    return np.kron(np.kron(np.eye(left), op), np.eye(right))


def embed_sparse(op, site, dims):
    left = int(np.prod(dims[:site], dtype=np.int64))
    right = int(np.prod(dims[site + 1:], dtype=np.int64))
    return sp.kron(sp.kron(sp.identity(left, format="csr"), sp.csr_matrix(op)),
                   sp.identity(right, format="csr"), format="csr")


def spin_operators(n):
    """Dense ``(n, 3, 2**n, 2**n)`` array of S_x, S_y, S_z on each of ``n`` spins."""
    dims = [2] * n
    out = np.empty((n, 3, 2 ** n, 2 ** n), dtype=complex)
    for a in range(n):
        for k in range(3):
            out[a, k] = embed(SPIN[k], a, dims)
    return out


def annihilation(d):
    """Truncated annihilation operator on ``d`` Fock levels."""
    return np.diag(np.sqrt(np.arange(1, d)), 1).astype(complex)


def partial_trace_keep_first(rho, d_keep, d_trace):
    """Trace out the trailing factor of a ``(d_keep*d_trace)``-dim operator."""
    r = rho.reshape(d_keep, d_trace, d_keep, d_trace)
    return np.einsum("ajbj->ab", r)


def rotation(axis, angle):
    """exp(-i angle S_axis) for a single spin; ``axis`` in {0, 1, 2} or 'xyz'."""
    if isinstance(axis, str):
        axis = "xyz".index(axis)
    c, s = np.cos(angle / 2), np.sin(angle / 2)
    return c * np.eye(2) - 2j * s * SPIN[axis]
