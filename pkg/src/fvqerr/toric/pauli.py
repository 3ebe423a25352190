"""Pauli strings stored as integer bit masks.

A string with masks (x, z) and phase exponent k is the operator
i**k * X^x Z^z, where bit r of each mask refers to qubit r and the X part
stands to the left of the Z part.  Acting on a computational basis state,
X^x Z^z |b> = (-1)**popcount(z & b) |b ^ x>.
"""

from dataclasses import dataclass

import numpy as np

from ..operators import PAULI


@dataclass(frozen=True)
class PauliString:
    n: int
    x: int = 0
    z: int = 0
    phase: int = 0

    def __post_init__(self):
        full = (1 << self.n) - 1
        if self.x & ~full or self.z & ~full:
            raise ValueError("bit masks exceed the qubit count")
        object.__setattr__(self, "phase", self.phase % 4)

    @classmethod
    def identity(cls, n):
        return cls(n)

    @classmethod
    def from_edges(cls, n, kind, edges):
        """Product of one Pauli type ('X', 'Y' or 'Z') over ``edges``."""
        mask = 0
        for e in edges:
            mask |= 1 << e
        if kind == "X":
            return cls(n, x=mask)
        if kind == "Z":
            return cls(n, z=mask)
        if kind == "Y":
            # Y = i X Z on each qubit
            return cls(n, x=mask, z=mask, phase=len(set(edges)))
        raise ValueError(f"unknown Pauli kind {kind!r}")

    @classmethod
    def single(cls, n, kind, edge):
        return cls.from_edges(n, kind, [edge])

    @property
    def weight(self):
        return (self.x | self.z).bit_count()

    @property
    def is_hermitian(self):
        return (self.phase + (self.x & self.z).bit_count()) % 2 == 0

    def __mul__(self, other):
        if self.n != other.n:
            raise ValueError("qubit counts differ")
        k = self.phase + other.phase + 2 * (self.z & other.x).bit_count()
        return PauliString(self.n, self.x ^ other.x, self.z ^ other.z, k)

    def scaled(self, k):
        """Multiply by i**k."""
        return PauliString(self.n, self.x, self.z, self.phase + k)

    def dagger(self):
        k = -self.phase + 2 * (self.x & self.z).bit_count()
        return PauliString(self.n, self.x, self.z, k)

    def commutes_with(self, other):
        return ((self.x & other.z).bit_count() + (self.z & other.x).bit_count()) % 2 == 0

    def equal_up_to_phase(self, other):
        return self.x == other.x and self.z == other.z

    def apply(self, configs, amps):
        """Act on a sparse state given by basis configurations and amplitudes."""
        configs = np.asarray(configs, dtype=np.uint64)
        sign = 1 - 2 * (np.bitwise_count(configs & np.uint64(self.z)) & 1).astype(np.int64)
        return configs ^ np.uint64(self.x), (1j ** self.phase) * sign * np.asarray(amps)

    def to_dense(self):
        """Dense 2**n matrix in the basis where bit r of the index is qubit r."""
        mat = np.array([[1.0 + 0j]])
        for r in reversed(range(self.n)):
            xb, zb = (self.x >> r) & 1, (self.z >> r) & 1
            op = (PAULI["X"] if xb else PAULI["I"]) @ (PAULI["Z"] if zb else PAULI["I"])
            mat = np.kron(mat, op)
        return (1j ** self.phase) * mat

    def label(self):
        chars = []
        for r in range(self.n):
            xb, zb = (self.x >> r) & 1, (self.z >> r) & 1
            chars.append("IZXY"[xb * 2 + zb])
        return "".join(chars)

    def __repr__(self):
        return f"PauliString({['+', '+i', '-', '-i'][self.phase]}{self.label()})"


def symplectic_rank(strings):
    """GF(2) rank of the (x | z) rows of ``strings``."""
    if not strings:
        return 0
    n = strings[0].n
    rows = [s.x | (s.z << n) for s in strings]
    return gf2_rank(rows)


def gf2_rank(rows):
    rank = 0
    rows = list(rows)
    pivots = {}
    for r in rows:
        while r:
            top = r.bit_length() - 1
            if top in pivots:
                r ^= pivots[top]
            else:
                pivots[top] = r
                rank += 1
                break
    return rank


def gf2_solve(rows, rhs, n_vars):
    """One solution b of <row_i, b> = rhs_i over GF(2), or None if inconsistent.

    Rows are integer masks over ``n_vars`` bits; free variables are set to 0.
    """
    pivots = {}
    for row, val in zip(rows, rhs):
        r, v = row, val & 1
        while r:
            top = r.bit_length() - 1
            if top in pivots:
                pr, pv = pivots[top]
                r ^= pr
                v ^= pv
            else:
                pivots[top] = (r, v)
                break
        else:
            if v:
                return None
    sol = 0
    for top in sorted(pivots):
        r, v = pivots[top]
        rest = (r & ~(1 << top)) & sol
        if (v ^ (rest.bit_count() & 1)) & 1:
            sol |= 1 << top
    return sol
