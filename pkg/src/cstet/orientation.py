"""Edge orientations, marked opposite-edge pairs, and per-tetrahedron (u, eta)."""
from __future__ import annotations

from dataclasses import dataclass

from .dilog import EtaPair
from .triangulation import Triangulation3, TriangulationError, all_relabelings, face_cycle

P1 = ((0, 1), (2, 3))
P2 = ((0, 2), (1, 3))
P3 = ((0, 3), (1, 2))


class EdgeOrientations:
    """One chosen direction per edge class, queried at any tetrahedron corner."""

    def __init__(self, tri: Triangulation3, reps):
        self.tri = tri
        reps = [tuple(int(x) for x in r) for r in reps]
        if len(reps) != len(tri.edge_classes):
            raise TriangulationError(f"need {len(tri.edge_classes)} edge orientations, got {len(reps)}")
        self._dir = [0] * len(reps)
        self._reps = [None] * len(reps)  # by class
        self._order = []  # class of each entry, in input order
        for t, v, w in reps:
            if not (0 <= t < tri.tet_count) or v == w or v not in range(4) or w not in range(4):
                raise TriangulationError(f"bad edge orientation {(t, v, w)}")
            cls, s = tri.edge(t, v, w)
            if self._reps[cls] is not None:
                raise TriangulationError(f"edge class {cls} oriented twice")
            self._reps[cls] = (t, v, w)
            self._dir[cls] = s
            self._order.append(cls)

    @classmethod
    def default(cls, tri: Triangulation3) -> "EdgeOrientations":
        return cls(tri, [(t, v, w) for [(t, (v, w)), *_] in tri.edge_classes])

    @classmethod
    def from_json(cls, tri, entries) -> "EdgeOrientations":
        try:
            reps = [(e["tet"], e["from"], e["to"]) for e in entries]
        except (KeyError, TypeError) as exc:
            raise TriangulationError(f"malformed edge orientation entry: {exc}") from exc
        return cls(tri, reps)

    def to_json(self) -> list[dict]:
        return [{"tet": t, "from": v, "to": w} for t, v, w in self.representatives]

    @property
    def representatives(self) -> list[tuple[int, int, int]]:
        """Directed representatives in input order."""
        return [self._reps[c] for c in self._order]

    def class_of_rep(self, i: int) -> int:
        """Edge class oriented by the i-th input entry."""
        return self._order[i]

    def sign(self, t: int, v: int, w: int) -> int:
        """eps(v, w) at tetrahedron t: +1 when the edge points from v to w."""
        cls, s = self.tri.edge(t, v, w)
        return s * self._dir[cls]

    def reversed(self, cls: int) -> "EdgeOrientations":
        """The same orientations with edge class cls reversed."""
        reps = self.representatives
        i = self._order.index(cls)
        t, v, w = reps[i]
        reps[i] = (t, w, v)
        return EdgeOrientations(self.tri, reps)

    def __eq__(self, other):
        return isinstance(other, EdgeOrientations) and self._dir == other._dir and self.tri is other.tri


def epsilon_sign_quad(values) -> int:
    """(-1)^(sum/2) of the four directed signs around a quadrilateral."""
    values = [int(v) for v in values]
    if len(values) != 4 or any(v not in (1, -1) for v in values):
        raise ValueError("need four signs")
    return -1 if (sum(values) // 2) % 2 else 1


def u_eta_from(sign, xval):
    """(u1, u2, eta) from eps and x on the labels of a framed tetrahedron."""
    u1 = xval(3, 0) - xval(0, 2) + xval(2, 1) - xval(1, 3)
    u2 = xval(3, 2) - xval(2, 1) + xval(1, 0) - xval(0, 3)
    eta1 = epsilon_sign_quad((sign(3, 0), sign(0, 2), sign(2, 1), sign(1, 3)))
    eta2 = epsilon_sign_quad((sign(3, 2), sign(2, 1), sign(1, 0), sign(0, 3)))
    return u1, u2, EtaPair(eta1, eta2)


def _pair(p):
    (a, b), (c, d) = p
    return frozenset((frozenset((a, b)), frozenset((c, d))))


def check_marked_pair(pair):
    try:
        (a, b), (c, d) = pair
    except (TypeError, ValueError) as exc:
        raise TriangulationError(f"marked pair must be [[a,b],[c,d]], got {pair}") from exc
    if sorted((a, b, c, d)) != [0, 1, 2, 3]:
        raise TriangulationError(f"marked pair {pair} is not a pair of opposite edges")
    return ((int(a), int(b)), (int(c), int(d)))


@dataclass(frozen=True)
class TetFrame:
    """Relabeling perm[i] = original vertex carrying canonical label i."""

    perm: tuple[int, int, int, int] = (0, 1, 2, 3)

    @classmethod
    def from_marked(cls, pair) -> "TetFrame":
        target = _pair(check_marked_pair(pair))
        for p in all_relabelings():
            if _pair(((p[0], p[1]), (p[2], p[3]))) == target:
                return cls(tuple(p))
        raise AssertionError("unreachable")

    def opposite_pairs(self):
        p = self.perm
        return [tuple((p[a], p[b]) for a, b in pair) for pair in (P1, P2, P3)]


def default_marked(tri: Triangulation3):
    return [P1 for _ in range(tri.tet_count)]


def tet_u_eta(tri: Triangulation3, eps: EdgeOrientations, x, t: int, frame: TetFrame | None = None):
    """u1, u2 from summed class logs, eta from the directed signs, on tetrahedron t."""
    p = (frame or TetFrame()).perm

    def xval(i, j):
        return x[tri.edge(t, p[i], p[j])[0]]

    def sign(i, j):
        return eps.sign(t, p[i], p[j])

    return u_eta_from(sign, xval)


def tet_eps_key(eps: EdgeOrientations, t: int, frame: TetFrame | None = None) -> tuple[int, ...]:
    p = (frame or TetFrame()).perm

    def s(i, j):
        return eps.sign(t, p[i], p[j])

    return (s(0, 2), s(2, 1), s(1, 3), s(3, 0), s(1, 0), s(2, 3))


def triangle_pairing(cycle, e1, e2) -> int:
    """<e1, e2> on an oriented triangle: +1 when e2 follows e1 along the cycle."""
    edges = [frozenset((cycle[i], cycle[(i + 1) % 3])) for i in range(3)]
    e1, e2 = frozenset(e1), frozenset(e2)
    if e1 not in edges or e2 not in edges:
        raise ValueError("edge not on triangle")
    i, j = edges.index(e1), edges.index(e2)
    if i == j:
        return 0
    return 1 if j == (i + 1) % 3 else -1


def marked_edge_on_face(pair, face) -> tuple[int, int]:
    face = set(face)
    for e in pair:
        if set(e) <= face:
            return tuple(e)
    raise AssertionError("every face holds one edge of each opposite pair")


def face_mismatch(tri: Triangulation3, marked, gluing_index: int, *, swap: bool = False) -> int:
    """Pairing of the two marked edges induced on a glued face.

    The face is oriented as the boundary of the first tetrahedron of the
    gluing (the second one if swap is set).
    """
    (t1, a), (t2, b) = tri.gluings[gluing_index]
    if swap:
        (t1, a), (t2, b) = (t2, b), (t1, a)
    _, vmap, _ = tri.neighbour(t1, a)
    back = {w: v for v, w in vmap.items()}
    e1 = marked_edge_on_face(marked[t1], a)
    e2 = marked_edge_on_face(marked[t2], b)
    e2_in_t1 = (back[e2[0]], back[e2[1]])
    return triangle_pairing(face_cycle(a), e1, e2_in_t1)
