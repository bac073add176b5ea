"""Exact root-of-unity constants for edge reversals (b) and flips (k).

Phases are stored as integers modulo 24, meaning exp(2*pi*i*n/24).
"""
from __future__ import annotations

import cmath
import hashlib
import itertools
import math
from dataclasses import dataclass

import numpy as np

_ROOTS = tuple(cmath.exp(2j * math.pi * n / 24) for n in range(24))


@dataclass(frozen=True)
class PhaseFactor:
    """exp(2*pi*i*numerator/24) times an optional complex multiplier."""

    numerator: int = 0
    extra: complex = 1.0

    def __post_init__(self):
        object.__setattr__(self, "numerator", self.numerator % 24)

    def __mul__(self, other):
        if isinstance(other, PhaseFactor):
            return PhaseFactor(self.numerator + other.numerator, self.extra * other.extra)
        return PhaseFactor(self.numerator, self.extra * complex(other))

    __rmul__ = __mul__

    def inverse(self) -> "PhaseFactor":
        return PhaseFactor(-self.numerator, 1 / self.extra)

    def __truediv__(self, other):
        if isinstance(other, PhaseFactor):
            return self * other.inverse()
        return PhaseFactor(self.numerator, self.extra / complex(other))

    def __complex__(self):
        return _ROOTS[self.numerator] * self.extra

    def is_exact(self) -> bool:
        return self.extra == 1.0


# b((a1,a2,+1),(a1,a2,-1)) and b((a1,a2,-1),(a1,a2,+1)) with p = q = 1,
# omega = exp(2*pi*i/8) = 3/24 of a turn.
B_TABLE: dict[tuple[int, int], tuple[int, int]] = {
    (-1, -1): (0, 12),
    (-1, 1): (-3, 3),
    (1, -1): (3, -3),
    (1, 1): (12, 0),
}

# n(eps) keyed by (eps(0,2), eps(2,1), eps(1,3), eps(3,0), eps(1,0), eps(2,3)).
K_TABLE: dict[tuple[int, ...], int] = {
    (1,1,1,1,1,1): 7, (1,1,1,1,1,-1): -5, (1,1,1,1,-1,1): -5, (1,1,1,1,-1,-1): 7,
    (1,1,1,-1,1,1): -11, (1,1,1,-1,1,-1): -2, (1,1,1,-1,-1,1): -8, (1,1,1,-1,-1,-1): -11,
    (1,1,-1,1,1,1): 1, (1,1,-1,1,1,-1): 10, (1,1,-1,1,-1,1): 10, (1,1,-1,1,-1,-1): 7,
    (1,1,-1,-1,1,1): -8, (1,1,-1,-1,1,-1): 10, (1,1,-1,-1,-1,1): -8, (1,1,-1,-1,-1,-1): 10,
    (1,-1,1,1,1,1): -11, (1,-1,1,1,1,-1): -8, (1,-1,1,1,-1,1): -2, (1,-1,1,1,-1,-1): -11,
    (1,-1,1,-1,1,1): 1, (1,-1,1,-1,1,-1): 1, (1,-1,1,-1,-1,1): 1, (1,-1,1,-1,-1,-1): 1,
    (1,-1,-1,1,1,1): -8, (1,-1,-1,1,1,-1): -8, (1,-1,-1,1,-1,1): 10, (1,-1,-1,1,-1,-1): 10,
    (1,-1,-1,-1,1,1): 1, (1,-1,-1,-1,1,-1): 10, (1,-1,-1,-1,-1,1): 10, (1,-1,-1,-1,-1,-1): 7,
    (-1,1,1,1,1,1): 7, (-1,1,1,1,1,-1): 10, (-1,1,1,1,-1,1): 10, (-1,1,1,1,-1,-1): 1,
    (-1,1,1,-1,1,1): 10, (-1,1,1,-1,1,-1): 10, (-1,1,1,-1,-1,1): -8, (-1,1,1,-1,-1,-1): -8,
    (-1,1,-1,1,1,1): 1, (-1,1,-1,1,1,-1): 1, (-1,1,-1,1,-1,1): 1, (-1,1,-1,1,-1,-1): 1,
    (-1,1,-1,-1,1,1): -11, (-1,1,-1,-1,1,-1): -2, (-1,1,-1,-1,-1,1): -8, (-1,1,-1,-1,-1,-1): -11,
    (-1,-1,1,1,1,1): 10, (-1,-1,1,1,1,-1): -8, (-1,-1,1,1,-1,1): 10, (-1,-1,1,1,-1,-1): -8,
    (-1,-1,1,-1,1,1): 7, (-1,-1,1,-1,1,-1): 10, (-1,-1,1,-1,-1,1): 10, (-1,-1,1,-1,-1,-1): 1,
    (-1,-1,-1,1,1,1): -11, (-1,-1,-1,1,1,-1): -8, (-1,-1,-1,1,-1,1): -2, (-1,-1,-1,1,-1,-1): -11,
    (-1,-1,-1,-1,1,1): 7, (-1,-1,-1,-1,1,-1): -5, (-1,-1,-1,-1,-1,1): -5, (-1,-1,-1,-1,-1,-1): 7,
}

K_TABLE_SHA256 = "ec9d95c360700ea71c7bdbdb4f0caf6da3aee2e6f1c34fc6783f55f269e2a045"


def table_checksum(table: dict | None = None) -> str:
    """sha256 over the canonical text of the k table."""
    table = K_TABLE if table is None else table
    text = ";".join(f"{k}:{table[k]}" for k in sorted(table))
    return hashlib.sha256(text.encode()).hexdigest()


def _check_tuple(eps, n):
    eps = tuple(int(e) for e in eps)
    if len(eps) != n or any(e not in (1, -1) for e in eps):
        raise ValueError(f"expected {n} signs in {{+1,-1}}, got {eps}")
    return eps


def rotate(eps: tuple[int, int, int]) -> tuple[int, int, int]:
    """Action of the rotation 012 -> 120 on (eps(0,1), eps(1,2), eps(2,0))."""
    a, b, c = eps
    return (c, a, b)


def reflect(eps: tuple[int, int, int]) -> tuple[int, int, int]:
    """Action of the reflection 012 -> 102."""
    a, b, c = eps
    return (-a, -c, -b)


def b_factor(src, dst, table=None) -> PhaseFactor:
    """b(src, dst) for triangle tuples differing in exactly one slot."""
    table = B_TABLE if table is None else table
    src, dst = _check_tuple(src, 3), _check_tuple(dst, 3)
    diff = [i for i in range(3) if src[i] != dst[i]]
    if len(diff) != 1:
        raise ValueError(f"tuples {src} and {dst} must differ in exactly one slot")
    slot = diff[0]
    while slot != 2:
        src, dst = rotate(src), rotate(dst)
        slot += 1
    forward, backward = table[(src[0], src[1])]
    return PhaseFactor(forward if src[2] == 1 else backward)


def k_factor(eps, table=None) -> PhaseFactor:
    table = K_TABLE if table is None else table
    return PhaseFactor(table[_check_tuple(eps, 6)])


# -- relation checks -------------------------------------------------------

TRI_TUPLES = list(itertools.product((1, -1), repeat=3))


def _single_reversals():
    for e in TRI_TUPLES:
        for slot in range(3):
            f = list(e)
            f[slot] = -f[slot]
            yield e, tuple(f)


def verify_b_relations(table=None) -> dict[str, bool]:
    """Check the defining relations of the b table in exact phase arithmetic."""
    table = B_TABLE if table is None else table

    def b(x, y):
        return b_factor(x, y, table).numerator

    rotation = all(
        b(rotate(e), rotate(f)) == b(e, f) and b(rotate(rotate(e)), rotate(rotate(f))) == b(e, f)
        for e, f in _single_reversals()
    )
    commutation = b((-1, 1, 1), (-1, 1, -1)) == (b((1, -1, 1), (1, -1, -1)) - 6) % 24
    double = True
    for a1, a2, a3, a4 in itertools.product((1, -1), repeat=4):
        total = (
            b((a1, a2, 1), (a1, a2, -1))
            + b((a3, a4, -1), (a3, a4, 1))
            + b((a1, a2, -1), (a1, a2, 1))
            + b((a3, a4, 1), (a3, a4, -1))
        ) % 24
        expected = 0 if ((a1 + a2 + a3 + a4) // 2) % 2 == 0 else 12
        double &= total == expected
    reflection = all((b(e, f) + b(reflect(e), reflect(f))) % 24 == 0 for e, f in _single_reversals())
    return {
        "rotation": rotation,
        "commutation": commutation,
        "double_reversal": double,
        "reflection": reflection,
    }


# Faces of the tetrahedral sphere, oriented as the boundary of the standard
# tetrahedron, each carrying whichever of the edges 01, 23 it contains.
SPHERE_FACES = ((0, 2, 1), (0, 1, 3), (0, 3, 2), (1, 2, 3))
TET_EDGES = ((0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3))


def face_tuple(cycle, marked, sign):
    """Triangle tuple of an oriented face read from its marked edge."""
    for r in range(3):
        if {cycle[r], cycle[(r + 1) % 3]} == set(marked):
            break
    p = [cycle[(r + i) % 3] for i in range(3)]
    return (sign(p[0], p[1]), sign(p[1], p[2]), sign(p[2], p[0]))


def reversal_b(before, after, table=None) -> PhaseFactor:
    """Edge-reversal constant for one triangle.

    The table is read with its arguments exchanged: this is the reading under
    which the b and k tables satisfy their joint recursion.
    """
    return b_factor(after, before, table)


def tet_key(sign) -> tuple[int, ...]:
    return (sign(0, 2), sign(2, 1), sign(1, 3), sign(3, 0), sign(1, 0), sign(2, 3))


def verify_k_relations(samples: int = 100, seed: int = 0, k_table=None, b_table=None) -> dict:
    """Check the recursion linking k, b and the dilogarithm on the tetrahedral sphere.

    For every base orientation, every edge and every sample, compares the
    right-hand side built from random sections with the table ratio.
    """
    from .dilog import ell
    from .orientation import u_eta_from

    k_table = K_TABLE if k_table is None else k_table
    rng = np.random.default_rng(seed)
    worst = 0.0
    spread = 0.0
    failures = []
    for base in itertools.product((1, -1), repeat=6):
        orient = dict(zip(TET_EDGES, base))
        for edge in TET_EDGES:
            flipped = dict(orient)
            flipped[edge] = -orient[edge]
            sgn, sgn2 = _signs(orient), _signs(flipped)
            expected = complex(k_factor(tet_key(sgn2), k_table) / k_factor(tet_key(sgn), k_table))
            bb = PhaseFactor()
            for cyc in SPHERE_FACES:
                if set(edge) <= set(cyc):
                    m = (0, 1) if {0, 1} <= set(cyc) else (2, 3)
                    bb = bb * reversal_b(face_tuple(cyc, m, sgn), face_tuple(cyc, m, sgn2), b_table)
            values = []
            for _ in range(samples):
                s = rng.normal(size=(4, 2)) + 1j * rng.normal(size=(4, 2))
                x = {}
                for v, w in TET_EDGES:
                    x[(v, w)] = x[(w, v)] = cmath.log(sgn(v, w) * (s[w][0] * s[v][1] - s[w][1] * s[v][0]))
                x2 = dict(x)
                x2[edge] = x2[edge[::-1]] = x[edge] + 1j * math.pi
                u1, u2, eta = u_eta_from(sgn, lambda i, j: x[(i, j)])
                v1, v2, eta2 = u_eta_from(sgn2, lambda i, j: x2[(i, j)])
                rhs = cmath.exp(
                    (ell(eta, u1, u2).value - ell(eta2, v1, v2).value) / (2j * math.pi)
                    + (u1 * v2 - u2 * v1) / (4j * math.pi)
                ) * complex(bb)
                values.append(rhs)
                worst = max(worst, abs(rhs - expected))
            spread = max(spread, max(abs(v - values[0]) for v in values))
            if max(abs(v - expected) for v in values) > 1e-9:
                failures.append((base, edge))
    return {
        "ok": not failures and spread < 1e-9,
        "max_deviation": worst,
        "max_spread": spread,
        "cases": 64 * 6,
        "samples": samples,
        "failures": failures,
    }


def _signs(orient):
    def sign(v, w):
        return orient[(v, w)] if v < w else -orient[(w, v)]

    return sign
