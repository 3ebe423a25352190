"""Edge-qubit torus geometry, stabilizers and logical strings.

Vertices v(x, y) = y*N + x for 0 <= x < N, 0 <= y < M.  Edge h(x, y) = y*N + x
joins v(x, y) to v(x+1, y); edge e(x, y) = N*M + y*N + x joins v(x, y) to
v(x, y+1).  Plaquette p(x, y) has v(x, y) as its lower-left corner.
"""

from dataclasses import dataclass
from functools import cached_property

from .pauli import PauliString, symplectic_rank


@dataclass(frozen=True)
class TorusLattice:
    N: int
    M: int
    x0: int = 0
    y0: int = 0

    def __post_init__(self):
        if self.N < 2 or self.M < 2:
            raise ValueError("torus needs N, M >= 2")
        if not (0 <= self.x0 < self.N and 0 <= self.y0 < self.M):
            raise ValueError("reference cycle position outside the lattice")

    @property
    def n_edges(self):
        return 2 * self.N * self.M

    @property
    def n_vertices(self):
        return self.N * self.M

    def h(self, x, y):
        return (y % self.M) * self.N + (x % self.N)

    def e(self, x, y):
        return self.N * self.M + (y % self.M) * self.N + (x % self.N)

    def vertex(self, x, y):
        return (y % self.M) * self.N + (x % self.N)

    def coords(self, v):
        return v % self.N, v // self.N

    def edge_endpoints(self, r):
        """The two vertices joined by edge r."""
        nm = self.N * self.M
        x, y = (r % nm) % self.N, (r % nm) // self.N
        if r < nm:
            return self.vertex(x, y), self.vertex(x + 1, y)
        return self.vertex(x, y), self.vertex(x, y + 1)

    def edge_plaquettes(self, r):
        """The two plaquettes whose boundary contains edge r."""
        nm = self.N * self.M
        x, y = (r % nm) % self.N, (r % nm) // self.N
        if r < nm:
            return self.vertex(x, y), self.vertex(x, y - 1)
        return self.vertex(x, y), self.vertex(x - 1, y)

    def star(self, v):
        x, y = self.coords(v)
        return (self.h(x, y), self.h(x - 1, y), self.e(x, y), self.e(x, y - 1))

    def plaquette(self, p):
        x, y = self.coords(p)
        return (self.h(x, y), self.h(x, y + 1), self.e(x, y), self.e(x + 1, y))

    @property
    def cycles(self):
        """Basic cycles as edge tuples.

        C1, C2 run along the vertex lattice in x and y; C1', C2' run along the
        plaquette (dual) lattice in x and y and list the edges they cross.
        """
        return {
            "C1": tuple(self.h(x, self.y0) for x in range(self.N)),
            "C2": tuple(self.e(self.x0, y) for y in range(self.M)),
            "C1'": tuple(self.e(x, self.y0) for x in range(self.N)),
            "C2'": tuple(self.h(self.x0, y) for y in range(self.M)),
        }

    @cached_property
    def star_operators(self):
        return [PauliString.from_edges(self.n_edges, "X", self.star(v))
                for v in range(self.n_vertices)]

    @cached_property
    def plaquette_operators(self):
        return [PauliString.from_edges(self.n_edges, "Z", self.plaquette(p))
                for p in range(self.n_vertices)]

    def to_dict(self):
        return {"N": self.N, "M": self.M, "x0": self.x0, "y0": self.y0}

    @classmethod
    def from_dict(cls, d):
        return cls(int(d["N"]), int(d["M"]), int(d.get("x0", 0)), int(d.get("y0", 0)))


def build_stabilizers(lat):
    """Star operators A_s (X type) followed by plaquette operators B_p (Z type)."""
    return list(lat.star_operators) + list(lat.plaquette_operators)


def build_logicals(lat):
    """s_1^{x,y,z} and s_2^{x,y,z} with s^y = i s^z s^x.

    The Z-type logicals run along vertex-lattice cycles (C1 for qubit 1, C2 for
    qubit 2) and the X-type ones along the dual cycles that cross them once
    (C2' for qubit 1, C1' for qubit 2), so each pair anticommutes.
    """
    n = lat.n_edges
    c = lat.cycles
    s1z = PauliString.from_edges(n, "Z", c["C1"])
    s1x = PauliString.from_edges(n, "X", c["C2'"])
    s2z = PauliString.from_edges(n, "Z", c["C2"])
    s2x = PauliString.from_edges(n, "X", c["C1'"])
    return {
        "s1x": s1x, "s1z": s1z, "s1y": (s1z * s1x).scaled(1),
        "s2x": s2x, "s2z": s2z, "s2y": (s2z * s2x).scaled(1),
    }


def stabilizer_group_rank(lat):
    return symplectic_rank(build_stabilizers(lat))
