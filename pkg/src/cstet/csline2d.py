"""Transition factors between trivializations on a triangulated surface.

A state carries sections s_v in C^2, oriented edges with logs x_E of
eps_E(v, v') * s_v' ^ s_v, and a marked edge per triangle. Four moves change
the data; each multiplies the accumulated factor by an explicit constant.
"""
from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, replace

import numpy as np

from .dilog import ell
from .orientation import triangle_pairing, u_eta_from
from .tables import PhaseFactor, k_factor, reversal_b, tet_key
from .triangulation import Surface2, TriangulationError

WEDGE_TOL = 1e-9


class MoveError(ValueError):
    def __init__(self, message, index=None):
        self.index = index
        super().__init__(message if index is None else f"move {index}: {message}")


def wedge(a, b) -> complex:
    return complex(a[0] * b[1] - a[1] * b[0])


def _edge(e) -> frozenset:
    e = frozenset(e)
    if len(e) != 2:
        raise MoveError(f"bad edge {sorted(e)}")
    return e


def _tri_edges(tri):
    return [frozenset((tri[i], tri[(i + 1) % 3])) for i in range(3)]


@dataclass(frozen=True)
class LineState:
    triangles: tuple
    sections: dict
    eps: dict      # edge -> (from, to)
    x: dict        # edge -> complex log
    marked: dict   # triangle -> edge
    factor: PhaseFactor = PhaseFactor()

    # -- construction
    @classmethod
    def from_sections(cls, triangles, sections, eps=None, marked=None, branches=None) -> "LineState":
        triangles = tuple(tuple(int(v) for v in t) for t in triangles)
        surf = Surface2(list(triangles))
        sections = {int(v): np.asarray(s, dtype=complex).reshape(2) for v, s in dict(sections).items()}
        for v in surf.vertices():
            if v not in sections:
                raise TriangulationError(f"vertex {v} has no section")
        edges = sorted(surf.edges, key=sorted)
        eps = {} if eps is None else {_edge(k): tuple(v) for k, v in dict(eps).items()}
        for e in edges:
            if e not in eps:
                eps[e] = tuple(sorted(e))
            if set(eps[e]) != set(e):
                raise TriangulationError(f"orientation {eps[e]} does not match edge {sorted(e)}")
        eps = {e: eps[e] for e in edges}
        branches = branches or {}
        x = {}
        for e in edges:
            v, w = eps[e]
            val = wedge(sections[w], sections[v])
            if val == 0:
                raise TriangulationError(f"sections at {sorted(e)} are proportional")
            x[e] = cmath.log(val) + 2j * math.pi * branches.get(e, 0)
        marks = {}
        marked = {} if marked is None else {tuple(k): _edge(v) for k, v in dict(marked).items()}
        for t in triangles:
            m = marked.get(t, _tri_edges(t)[0])
            if m not in _tri_edges(t):
                raise TriangulationError(f"marked edge {sorted(m)} is not on triangle {t}")
            marks[t] = m
        return cls(triangles, sections, eps, x, marks)

    # -- queries
    def sign(self, v, w) -> int:
        a, b = self.eps[frozenset((v, w))]
        return 1 if (a, b) == (v, w) else -1

    def xval(self, v, w) -> complex:
        return self.x[frozenset((v, w))]

    def find_triangle(self, verts):
        key = frozenset(verts)
        for t in self.triangles:
            if frozenset(t) == key:
                return t
        raise MoveError(f"no triangle with vertices {sorted(key)}")

    def abutting(self, E):
        return [t for t in self.triangles if E in _tri_edges(t)]

    def data_residual(self) -> float:
        """max relative |exp(x_E) - eps_E(v,v') s_v' ^ s_v| over edges."""
        worst = 0.0
        for e, (v, w) in self.eps.items():
            target = wedge(self.sections[w], self.sections[v])
            worst = max(worst, abs(cmath.exp(self.x[e]) - target) / max(abs(target), 1e-300))
        return worst

    def tri_tuple(self, tri) -> tuple[int, int, int]:
        """Orientation signs read around the triangle starting at its marked edge."""
        m = self.marked[tri]
        r = next(i for i in range(3) if frozenset((tri[i], tri[(i + 1) % 3])) == m)
        p = [tri[(r + i) % 3] for i in range(3)]
        return (self.sign(p[0], p[1]), self.sign(p[1], p[2]), self.sign(p[2], p[0]))

    def quad(self, E):
        """Labels for the quadrilateral around E: (a, b) along the first triangle, c and d opposite."""
        E = _edge(E)
        if E not in self.eps:
            raise MoveError(f"no edge {sorted(E)}")
        ts = self.abutting(E)
        if len(ts) != 2:
            raise MoveError(f"edge {sorted(E)} is on the boundary")
        t1, t2 = sorted(ts)
        i = next(k for k in range(3) if frozenset((t1[k], t1[(k + 1) % 3])) == E)
        a, b, c = t1[i], t1[(i + 1) % 3], t1[(i + 2) % 3]
        d = next(v for v in t2 if v not in E)
        if c == d:
            raise MoveError(f"quadrilateral around {sorted(E)} is not embedded")
        return (a, b, c, d), (t1, t2)

    # -- moves
    def apply_vertex_rescale(self, v, t) -> "LineState":
        t = complex(t)
        if v not in self.sections:
            raise MoveError(f"no vertex {v}")
        sections = dict(self.sections)
        sections[v] = sections[v] * cmath.exp(t)
        x = {e: (val + t if v in e else val) for e, val in self.x.items()}
        return replace(self, sections=sections, x=x)

    def apply_remark(self, tri, e_new) -> "LineState":
        tri = self.find_triangle(tri)
        e_new = _edge(e_new)
        if e_new not in _tri_edges(tri):
            raise MoveError(f"edge {sorted(e_new)} is not on triangle {tri}")
        n = triangle_pairing(tri, self.marked[tri], e_new)
        marked = dict(self.marked)
        marked[tri] = e_new
        return replace(self, marked=marked, factor=self.factor * PhaseFactor(8 * n))

    def reversal_parts(self, E):
        """(u, product of the two triangle constants, reversed state) for reversing E."""
        (a, b, c, d), ts = self.quad(E)
        E = _edge(E)
        L = {0: a, 2: d, 1: b, 3: c}

        def X(i, j):
            return self.xval(L[i], L[j])

        u = X(3, 0) - X(0, 2) + X(2, 1) - X(1, 3)
        before = [self.tri_tuple(t) for t in ts]
        eps = dict(self.eps)
        v, w = eps[E]
        eps[E] = (w, v)
        x = dict(self.x)
        x[E] = x[E] + 1j * math.pi
        new = replace(self, eps=eps, x=x)
        bb = PhaseFactor()
        for t, bt in zip(ts, before):
            bb = bb * reversal_b(bt, new.tri_tuple(t))
        return u, bb, new

    def apply_edge_reverse(self, E) -> "LineState":
        u, bb, new = self.reversal_parts(E)
        return replace(new, factor=self.factor * bb * cmath.exp(u / 4))

    def quad_sign(self, E) -> int:
        """Product of the orientation signs around the quadrilateral of E, along its boundary cycle."""
        (a, b, c, d), _ = self.quad(E)
        cyc = [a, d, b, c]
        out = 1
        for i in range(4):
            out *= self.sign(cyc[i], cyc[(i + 1) % 4])
        return out

    def apply_flip(self, E, eps_new, x_new, *, tol: float = WEDGE_TOL) -> "LineState":
        (a, b, c, d), ts = self.quad(E)
        E = _edge(E)
        for t in ts:
            if self.marked[t] != E:
                raise MoveError(f"triangle {t} must carry the flipped edge as its marked edge")
        En = frozenset((c, d))
        if En in self.eps:
            raise MoveError(f"edge {sorted(En)} already exists")
        eps_new = tuple(eps_new)
        if set(eps_new) != En:
            raise MoveError(f"new orientation {eps_new} does not match the new edge {sorted(En)}")
        x_new = complex(x_new)
        target = wedge(self.sections[eps_new[1]], self.sections[eps_new[0]])
        if abs(cmath.exp(x_new) - target) > tol * max(abs(target), 1e-300):
            raise MoveError("x_new does not match the sections")
        eps = dict(self.eps)
        eps[En] = eps_new
        x = dict(self.x)
        x[En] = x_new
        tmp = replace(self, eps=eps, x=x)
        # flip tetrahedron: old diagonal 01, new diagonal 23, boundary cycle (0,3,1,2)
        L = {0: a, 3: d, 1: b, 2: c}
        u1, u2, eta = u_eta_from(lambda i, j: tmp.sign(L[i], L[j]), lambda i, j: tmp.xval(L[i], L[j]))
        val = ell(eta, u1, u2)
        k = k_factor(tet_key(lambda i, j: tmp.sign(L[i], L[j])))
        del eps[E]
        del x[E]
        cyc = [a, d, b, c]
        new_tris = []
        for v in (c, d):
            i = cyc.index(v)
            new_tris.append(tuple(cyc[(i + j) % 4] for j in range(3)))
        triangles = tuple(t for t in self.triangles if t not in ts) + tuple(new_tris)
        marked = {t: m for t, m in self.marked.items() if t not in ts}
        for t in new_tris:
            marked[t] = En
        return LineState(triangles, self.sections, eps, x, marked, self.factor * k * val.factor())

    def principal_x(self, edge, orientation) -> complex:
        v, w = orientation
        return cmath.log(wedge(self.sections[w], self.sections[v]))

    def flip_principal(self, E, eps_new) -> "LineState":
        return self.apply_flip(E, eps_new, self.principal_x(None, eps_new))

    def with_factor(self, factor=PhaseFactor()) -> "LineState":
        return replace(self, factor=factor)

    @property
    def value(self) -> complex:
        return complex(self.factor)


# -- move lists

def _parse_c(v) -> complex:
    if isinstance(v, dict):
        return complex(v["re"], v.get("im", 0.0))
    if isinstance(v, (list, tuple)):
        return complex(float(v[0]), float(v[1]))
    return complex(v)


def apply_move(st: LineState, move) -> LineState:
    if isinstance(move, dict):
        op = move.get("op")
        if op == "rescale":
            return st.apply_vertex_rescale(int(move["vertex"]), _parse_c(move["t"]))
        if op == "remark":
            return st.apply_remark(move["triangle"], move["edge"])
        if op == "reverse":
            return st.apply_edge_reverse(move["edge"])
        if op == "flip":
            orient = tuple(move["orientation"])
            if "x" in move:
                xn = _parse_c(move["x"])
            else:
                xn = st.principal_x(None, orient) + 2j * math.pi * int(move.get("branch", 0))
            return st.apply_flip(move["edge"], orient, xn)
        raise MoveError(f"unknown move {op!r}")
    op, *args = move
    if op == "rescale":
        return st.apply_vertex_rescale(*args)
    if op == "remark":
        return st.apply_remark(*args)
    if op == "reverse":
        return st.apply_edge_reverse(*args)
    if op == "flip":
        if len(args) == 2:
            return st.flip_principal(*args)
        return st.apply_flip(*args)
    raise MoveError(f"unknown move {op!r}")


def run_moves(st: LineState, moves) -> tuple[LineState, complex]:
    """Apply the moves left to right; returns the final state and the factor gained."""
    start = st.factor
    for i, mv in enumerate(moves):
        try:
            st = apply_move(st, mv)
        except MoveError as exc:
            raise MoveError(str(exc).split(": ", 1)[-1] if exc.index is not None else str(exc), i) from exc
        except (KeyError, TypeError, ValueError) as exc:
            raise MoveError(str(exc), i) from exc
    return st, complex(st.factor / start)


def state_from_script(data: dict) -> LineState:
    secs = data["sections"]
    if isinstance(secs, list):
        secs = dict(enumerate(secs))
    sections = {int(k): [_parse_c(c) for c in v] for k, v in secs.items()}
    eps = None
    if "edge_orientations" in data:
        eps = {frozenset(o): tuple(o) for o in data["edge_orientations"]}
    marked = None
    if "marked" in data:
        marked = {tuple(m["triangle"]): m["edge"] for m in data["marked"]}
    return LineState.from_sections(data["triangles"], sections, eps, marked)


def replay_script(data: dict) -> dict:
    st = state_from_script(data)
    final, factor = run_moves(st, data.get("moves", []))
    return {
        "factor": factor,
        "triangles": [list(t) for t in final.triangles],
        "data_residual": final.data_residual(),
    }


# -- pentagon coherence

PENTAGON = ((0, 1, 2), (0, 2, 3), (0, 3, 4))
PENTAGON_EDGES = ((0, 1), (1, 2), (2, 3), (3, 4), (4, 0), (0, 2), (0, 3), (1, 3), (1, 4), (2, 4))
PATH_THREE = (((0, 2), (1, 3)), ((0, 3), (1, 4)), ((1, 3), (2, 4)))
PATH_TWO = (((0, 3), (2, 4)), ((0, 2), (1, 4)))
START_MARKS = {(0, 1, 2): (0, 1), (0, 2, 3): (2, 3), (0, 3, 4): (3, 4)}
END_MARKS = {(0, 1, 4): (0, 1), (1, 2, 4): (1, 2), (2, 3, 4): (2, 3)}


def _random_pentagon(rng):
    sections = {v: rng.normal(size=2) + 1j * rng.normal(size=2) for v in range(5)}
    orient = {frozenset(e): (e if rng.random() < 0.5 else e[::-1]) for e in PENTAGON_EDGES}
    return sections, orient


def pentagon_path(sections, orient, path) -> complex:
    """Factor along a flip path from the fan at 0 to the fan at 4, marks normalized at both ends."""
    initial = {e: orient[e] for e in orient if any(e <= set(t) for t in PENTAGON)}
    st = LineState.from_sections(PENTAGON, sections, initial, START_MARKS)
    for E, En in path:
        for t in st.abutting(frozenset(E)):
            st = st.apply_remark(t, E)
        st = st.flip_principal(E, orient[frozenset(En)])
    for t, m in END_MARKS.items():
        st = st.apply_remark(t, m)
    return st.value


def pentagon_suite(trials: int = 50, seed: int = 0) -> dict:
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(trials):
        sections, orient = _random_pentagon(rng)
        a = pentagon_path(sections, orient, PATH_THREE)
        b = pentagon_path(sections, orient, PATH_TWO)
        worst = max(worst, abs(a - b))
    return {"trials": trials, "max_deviation": worst, "ok": worst < 1e-9}
