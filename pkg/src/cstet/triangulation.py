"""Glued tetrahedra and glued triangles: parsing, validation, derived classes."""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from itertools import permutations

TET_EDGES = ((0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3))
VERTEX_KINDS = ("ideal", "interior")


class TriangulationError(ValueError):
    pass


def parity(seq) -> int:
    seq = list(seq)
    sign = 1
    for i in range(len(seq)):
        for j in range(i + 1, len(seq)):
            if seq[i] > seq[j]:
                sign = -sign
    return sign


def face_sign(tri) -> int:
    """+1 if the ordered triple runs along the outward boundary orientation."""
    missing = 6 - sum(tri)
    return parity(tri) * (-1) ** missing


def face_cycle(face) -> tuple[int, int, int]:
    """Vertices of a tetrahedron face in outward boundary order."""
    tri = tuple(sorted(face))
    return tri if face_sign(tri) == 1 else (tri[0], tri[2], tri[1])


class _UnionFind:
    """Union-find carrying a sign relative to the root."""

    def __init__(self):
        self.parent = {}
        self.sign = {}

    def add(self, a):
        if a not in self.parent:
            self.parent[a] = a
            self.sign[a] = 1

    def find(self, a):
        s = 1
        path = []
        while self.parent[a] != a:
            path.append(a)
            s *= self.sign[a]
            a = self.parent[a]
        root = a
        # compress
        acc = s
        for node in path:
            old = self.sign[node]
            self.parent[node] = root
            self.sign[node] = acc
            acc *= old
        return root, s

    def union(self, a, b, rel=1):
        """Record sign(a) = rel * sign(b); return False on contradiction."""
        ra, sa = self.find(a)
        rb, sb = self.find(b)
        if ra == rb:
            return sa == rel * sb
        self.parent[ra] = rb
        self.sign[ra] = sa * rel * sb
        return True


@dataclass
class Triangulation3:
    tet_count: int
    gluings: list
    vertex_kinds: list | None = None
    # derived
    face_pairing: dict = field(default_factory=dict, repr=False)
    vertex_classes: list = field(default_factory=list, repr=False)
    vertex_class_of: dict = field(default_factory=dict, repr=False)
    edge_classes: list = field(default_factory=list, repr=False)
    edge_class_of: dict = field(default_factory=dict, repr=False)

    def __post_init__(self):
        self._derive()

    # -- construction
    def _derive(self):
        n = self.tet_count
        if not isinstance(n, int) or n <= 0:
            raise TriangulationError("tets must be a positive integer")
        pairing = {}
        for gi, g in enumerate(self.gluings):
            (t1, a), (t2, b) = g
            for t, tri in ((t1, a), (t2, b)):
                if not (0 <= t < n):
                    raise TriangulationError(f"gluing {gi}: tetrahedron {t} out of range")
                if len(tri) != 3 or len(set(tri)) != 3 or any(v not in range(4) for v in tri):
                    raise TriangulationError(f"gluing {gi}: bad vertex triple {tri}")
            if face_sign(a) * face_sign(b) != -1:
                raise TriangulationError(f"gluing {gi}: both triples have the same orientation")
            for key, other, src, dst in (((t1, frozenset(a)), t2, a, b), ((t2, frozenset(b)), t1, b, a)):
                if key in pairing:
                    raise TriangulationError(f"face {sorted(key[1])} of tetrahedron {key[0]} is glued twice")
                pairing[key] = (other, dict(zip(src, dst)), gi)
        for t in range(n):
            for missing in range(4):
                face = frozenset(set(range(4)) - {missing})
                if (t, face) not in pairing:
                    raise TriangulationError(f"unmatched face {sorted(face)} of tetrahedron {t}")
        self.face_pairing = pairing

        verts = _UnionFind()
        edges = _UnionFind()
        for t in range(n):
            for v in range(4):
                verts.add((t, v))
            for e in TET_EDGES:
                edges.add((t, e))
        for (t, face), (t2, vmap, _) in pairing.items():
            for v in face:
                verts.union((t, v), (t2, vmap[v]))
            for v, w in TET_EDGES:
                if v in face and w in face:
                    a, b = vmap[v], vmap[w]
                    rel = 1 if a < b else -1
                    if not edges.union((t, (v, w)), (t2, (min(a, b), max(a, b))), rel):
                        raise TriangulationError("an edge is identified with itself reversed")

        self.vertex_classes, self.vertex_class_of = _ordered_classes(
            ((t, v) for t in range(n) for v in range(4)), lambda k: verts.find(k)[0]
        )
        roots = {}
        self.edge_classes = []
        self.edge_class_of = {}
        for t in range(n):
            for e in TET_EDGES:
                root, s = edges.find((t, e))
                if root not in roots:
                    roots[root] = (len(self.edge_classes), s)
                    self.edge_classes.append([])
                idx, s0 = roots[root]
                self.edge_classes[idx].append((t, e))
                # sign relative to the first incidence of the class
                self.edge_class_of[(t, e)] = (idx, s * s0)

        if self.vertex_kinds is None:
            self.vertex_kinds = ["ideal"] * len(self.vertex_classes)
        if len(self.vertex_kinds) != len(self.vertex_classes):
            raise TriangulationError(
                f"vertex_kinds has {len(self.vertex_kinds)} entries for {len(self.vertex_classes)} vertex classes"
            )
        for kind in self.vertex_kinds:
            if kind not in VERTEX_KINDS:
                raise TriangulationError(f"unknown vertex kind {kind!r}")

    # -- queries
    @property
    def face_count(self) -> int:
        return len(self.gluings)

    def edge(self, t: int, v: int, w: int) -> tuple[int, int]:
        """(edge class, sign) of the directed tetrahedron edge v -> w.

        The sign compares v -> w with the direction of the class's first incidence.
        """
        if v == w:
            raise ValueError("degenerate edge")
        idx, s = self.edge_class_of[(t, (min(v, w), max(v, w)))]
        return idx, s if v < w else -s

    def edge_incidences(self, cls: int) -> list[tuple[int, tuple[int, int]]]:
        return list(self.edge_classes[cls])

    def neighbour(self, t: int, face) -> tuple[int, dict, int]:
        return self.face_pairing[(t, frozenset(face))]

    def all_ideal(self) -> bool:
        return all(k == "ideal" for k in self.vertex_kinds)

    def edge_vertex_counts(self, cls: int) -> dict[int, int]:
        """How many endpoints of an edge class fall in each vertex class."""
        t, (v, w) = self.edge_classes[cls][0]
        out: dict[int, int] = {}
        for u in (v, w):
            c = self.vertex_class_of[(t, u)]
            out[c] = out.get(c, 0) + 1
        return out

    def walk_edge(self, t: int, v: int, w: int):
        """Go once around the edge class of (t, v, w).

        Yields (tet, v, w, face crossed into the next tet); stops when the start
        recurs with the same direction.
        """
        others = [u for u in range(4) if u not in (v, w)]
        prev_third = others[0]
        start = (t, v, w, prev_third)
        cur = start
        for _ in range(6 * self.tet_count + 1):
            tt, a, b, came = cur
            exit_third = [u for u in range(4) if u not in (a, b, came)][0]
            face = (a, b, exit_third)
            yield tt, a, b, face
            t2, vmap, _ = self.neighbour(tt, face)
            nxt = (t2, vmap[a], vmap[b], vmap[exit_third])
            if nxt == start:
                return
            cur = nxt
        raise TriangulationError("edge walk did not close")

    def to_dict(self) -> dict:
        out = {
            "tets": self.tet_count,
            "gluings": [{"from": [t1, list(a)], "to": [t2, list(b)]} for (t1, a), (t2, b) in self.gluings],
        }
        if any(k != "ideal" for k in self.vertex_kinds):
            out["vertex_kinds"] = list(self.vertex_kinds)
        return out


def _ordered_classes(keys, root_of):
    classes = []
    index = {}
    class_of = {}
    for k in keys:
        r = root_of(k)
        if r not in index:
            index[r] = len(classes)
            classes.append([])
        classes[index[r]].append(k)
        class_of[k] = index[r]
    return classes, class_of


def triangulation_from_dict(data: dict) -> Triangulation3:
    if not isinstance(data, dict):
        raise TriangulationError("input must be a JSON object")
    if "tets" not in data or "gluings" not in data:
        raise TriangulationError("input needs 'tets' and 'gluings'")
    gluings = []
    try:
        for g in data["gluings"]:
            (t1, a), (t2, b) = g["from"], g["to"]
            gluings.append(((int(t1), tuple(int(x) for x in a)), (int(t2), tuple(int(x) for x in b))))
    except (KeyError, TypeError, ValueError) as exc:
        raise TriangulationError(f"malformed gluing entry: {exc}") from exc
    tets = data["tets"]
    if isinstance(tets, bool) or not isinstance(tets, int):
        raise TriangulationError("tets must be an integer")
    return Triangulation3(tets, gluings, data.get("vertex_kinds"))


def parse_triangulation(text: str) -> Triangulation3:
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise TriangulationError(f"invalid JSON: {exc}") from exc
    return triangulation_from_dict(data)


def all_relabelings():
    """Even permutations of (0,1,2,3) as tuples p with p[i] = image of i."""
    return [p for p in permutations(range(4)) if parity(p) == 1]


@dataclass
class Surface2:
    """Oriented triangles glued along shared vertex pairs."""

    triangles: list
    vertex_kinds: dict | None = None

    def __post_init__(self):
        self.triangles = [tuple(t) for t in self.triangles]
        seen = {}
        for t in self.triangles:
            if len(set(t)) != 3:
                raise TriangulationError(f"degenerate triangle {t}")
            for i in range(3):
                d = (t[i], t[(i + 1) % 3])
                if d in seen:
                    raise TriangulationError(f"directed edge {d} used twice; orientations disagree")
                seen[d] = t
        self.edges = {}
        for (a, b), t in seen.items():
            self.edges.setdefault(frozenset((a, b)), []).append(t)
        verts = sorted({v for t in self.triangles for v in t})
        if self.vertex_kinds is None:
            self.vertex_kinds = {v: "ideal" for v in verts}

    def is_interior(self, edge) -> bool:
        return len(self.edges.get(frozenset(edge), ())) == 2

    def vertices(self):
        return sorted({v for t in self.triangles for v in t})
