"""C^2 linear algebra behind abelianization, plus flat-bundle reconstruction from Ptolemy data."""
from __future__ import annotations

import cmath
import itertools
import warnings
from dataclasses import dataclass, field

import numpy as np

from .orientation import EdgeOrientations, TetFrame
from .triangulation import Triangulation3

LINE_TOL = 1e-14
ILL_CONDITIONED = 1e-6


class DegenerateError(ValueError):
    pass


def wedge(a, b) -> complex:
    return a[0] * b[1] - a[1] * b[0]


def _vec(v) -> np.ndarray:
    v = np.asarray(v, dtype=complex).reshape(2)
    if not np.any(v):
        raise DegenerateError("zero vector does not span a line")
    return v


def _sine(a, b) -> float:
    return abs(wedge(a, b)) / (np.linalg.norm(a) * np.linalg.norm(b))


def _distinct(*lines):
    worst = min(_sine(a, b) for a, b in itertools.combinations(lines, 2))
    if worst < LINE_TOL:
        raise DegenerateError("lines coincide")
    if worst < ILL_CONDITIONED:
        warnings.warn(f"nearly coincident lines (sine {worst:.2g})", RuntimeWarning, stacklevel=3)
    return worst


def proj(kernel, frm, to, xi) -> np.ndarray:
    """Include xi (a multiple of frm) into C^2, then project onto `to` along `kernel`."""
    kernel, frm, to = _vec(kernel), _vec(frm), _vec(to)
    _distinct(kernel, frm, to)
    xi = np.asarray(xi, dtype=complex).reshape(2)
    if abs(wedge(frm, xi)) > 1e-9 * max(1.0, np.linalg.norm(xi)) * np.linalg.norm(frm):
        raise ValueError("xi does not lie on the source line")
    # xi = alpha * to + beta * kernel
    alpha = wedge(xi, kernel) / wedge(to, kernel)
    return alpha * to


def wall_crossing(l1, l2, l3) -> np.ndarray:
    """Matrix of xi1 + xi2 -> xi1 + proj(l1; l2 -> l3)(xi2) in the standard basis."""
    l1, l2, l3 = _vec(l1), _vec(l2), _vec(l3)
    src = np.column_stack([l1, l2])
    dst = np.column_stack([l1, proj(l1, l2, l3, l2)])
    return dst @ np.linalg.inv(src)


def branch_monodromy(l1, l2, l3) -> complex:
    """Scalar picked up by l1 -> l3 -> l2 -> l1, each step projecting along the remaining line."""
    l1, l2, l3 = _vec(l1), _vec(l2), _vec(l3)
    _distinct(l1, l2, l3)
    xi = l1
    xi = proj(l2, l1, l3, xi)
    xi = proj(l1, l3, l2, xi)
    xi = proj(l3, l2, l1, xi)
    k = int(np.argmax(abs(l1)))
    return complex(xi[k] / l1[k])


def cross_ratio(xi0, xi1, xi2, xi3) -> complex:
    num = wedge(xi0, xi3) * wedge(xi1, xi2)
    den = wedge(xi0, xi2) * wedge(xi1, xi3)
    if den == 0:
        raise DegenerateError("coincident lines in cross ratio")
    return num / den


def shape_params(z1) -> tuple[complex, complex, complex]:
    z1 = complex(z1)
    if z1 == 0 or z1 == 1:
        raise DegenerateError("shape parameter must avoid 0 and 1")
    z2 = 1 - 1 / z1
    z3 = 1 - 1 / z2
    return z1, z2, z3


# -- per-tetrahedron Ptolemy data

def tet_wedges(tri: Triangulation3, eps: EdgeOrientations, X, t: int, sigma=None) -> dict:
    """w[i, j] = s_i ^ s_j implied by X_E = eps(i, j) * s_j ^ s_i on tetrahedron t.

    sigma optionally twists the coordinate of each tetrahedron edge by a sign.
    """
    w = {}
    for i, j in itertools.combinations(range(4), 2):
        cls = tri.edge(t, i, j)[0]
        val = eps.sign(t, j, i) * X[cls]
        if sigma is not None:
            val *= sigma[(t, (i, j))]
        w[(i, j)] = val
        w[(j, i)] = -val
    return w


def plucker(w) -> complex:
    return w[(0, 1)] * w[(2, 3)] - w[(0, 2)] * w[(1, 3)] + w[(0, 3)] * w[(1, 2)]


def ptolemy_residual(tri, eps, x, t: int, *, logs: bool = True, sigma=None) -> complex:
    """Signed Ptolemy relation of tetrahedron t.

    eps(1,0)eps(3,2) X01 X23 - eps(2,0)eps(3,1) X02 X13 + eps(3,0)eps(2,1) X03 X12
    """
    X = [cmath.exp(v) for v in x] if logs else list(x)
    return plucker(tet_wedges(tri, eps, X, t, sigma))


def relative_ptolemy_residual(tri, eps, x, t: int, *, logs: bool = True, sigma=None) -> float:
    X = [cmath.exp(v) for v in x] if logs else list(x)
    w = tet_wedges(tri, eps, X, t, sigma)
    scale = max(abs(w[(0, 1)] * w[(2, 3)]), abs(w[(0, 2)] * w[(1, 3)]), abs(w[(0, 3)] * w[(1, 2)]))
    return abs(plucker(w)) / max(scale, 1e-300)


def sections_from_wedges(w, tol: float = 1e-9) -> np.ndarray:
    """Four vectors with s_i ^ s_j = w[i, j], gauge s0 = (1, 0)."""
    if any(abs(w[(i, j)]) == 0 for i, j in itertools.combinations(range(4), 2)):
        raise DegenerateError("vanishing Ptolemy coordinate")
    scale = max(abs(w[(0, 1)] * w[(2, 3)]), abs(w[(0, 2)] * w[(1, 3)]), abs(w[(0, 3)] * w[(1, 2)]))
    if abs(plucker(w)) > tol * scale:
        raise DegenerateError(f"Ptolemy residual {abs(plucker(w)) / scale:.3g} too large for sections")
    s = np.zeros((4, 2), dtype=complex)
    s[0] = (1, 0)
    s[1] = (0, w[(0, 1)])
    for j in (2, 3):
        s[j] = (-w[(1, j)] / w[(0, 1)], w[(0, j)])
    return s


def reconstruct_sections(tri, eps, x, t: int, *, tol: float = 1e-9, sigma=None) -> np.ndarray:
    X = [cmath.exp(v) for v in x]
    return sections_from_wedges(tet_wedges(tri, eps, X, t, sigma), tol)


def sections_shape(s, frame: TetFrame | None = None) -> complex:
    """z1 of the frame: cross ratio of the permuted sections."""
    p = (frame or TetFrame()).perm
    return cross_ratio(s[p[0]], s[p[1]], s[p[2]], s[p[3]])


# -- gluing

def _face_matrix(src, dst) -> np.ndarray:
    """The matrix sending src[0] -> dst[0], src[1] -> dst[1]."""
    return np.column_stack(dst[:2]) @ np.linalg.inv(np.column_stack(src[:2]))


@dataclass
class FlatBundleReport:
    matrices: list
    third_vector_residual: float
    det_residual: float
    composites: list
    composite_kind: list  # "identity", "-identity" or "other" per edge class
    face_signs: list = field(default_factory=list)
    liftable: bool = True
    twisted: bool = False
    tol: float = 1e-9
    deltas: list = field(default_factory=list)
    boundary_unipotent: bool = True
    raw_composite_kind: list = field(default_factory=list)  # before any face-sign lift

    @property
    def ok(self) -> bool:
        return (
            self.third_vector_residual < self.tol
            and self.det_residual < self.tol
            and all(k == "identity" for k in self.composite_kind)
        )

    def summary(self) -> dict:
        return {
            "ok": self.ok,
            "third_vector_residual": self.third_vector_residual,
            "det_residual": self.det_residual,
            "edge_composites": list(self.composite_kind),
            "liftable": self.liftable,
            "boundary_unipotent": self.boundary_unipotent,
            "twisted": self.twisted,
        }


def _classify(M, tol) -> str:
    scale = max(1.0, float(np.abs(M).max()))
    if np.abs(M - np.eye(2)).max() < tol * scale:
        return "identity"
    if np.abs(M + np.eye(2)).max() < tol * scale:
        return "-identity"
    return "other"


def build_flat_bundle(tri: Triangulation3, eps: EdgeOrientations, x, *, sections=None, sigma=None,
                      tol: float = 1e-9) -> FlatBundleReport:
    """Glue trivial bundles on the tetrahedra so that the sections match across faces.

    With a sign twist sigma the sections only match up to signs; the per-face
    global sign is then chosen to trivialize the edge composites if possible.
    """
    if sections is None:
        sections = [reconstruct_sections(tri, eps, x, t, tol=max(tol, 1e-9), sigma=sigma) for t in range(tri.tet_count)]
    X = [cmath.exp(v) for v in x]
    wed = [tet_wedges(tri, eps, X, t, sigma) for t in range(tri.tet_count)]
    mats, third, det, deltas = [], 0.0, 0.0, []
    for (t1, a), (t2, b) in tri.gluings:
        # signs delta_i with w2[b_i, b_j] = delta_i delta_j w1[a_i, a_j]
        r = {}
        for i, j in itertools.combinations(range(3), 2):
            r[(i, j)] = wed[t2][(b[i], b[j])] / wed[t1][(a[i], a[j])]
        delta = [1, _sgn(r[(0, 1)]), _sgn(r[(0, 2)])]
        deltas.append(delta)
        src = [sections[t1][v] for v in a]
        dst = [d * sections[t2][v] for d, v in zip(delta, b)]
        M = _face_matrix(src, dst)
        mats.append(M)
        scale = max(np.linalg.norm(dst[2]), 1e-300)
        third = max(third, float(np.linalg.norm(M @ src[2] - dst[2]) / scale))
        det = max(det, abs(np.linalg.det(M) - 1))
    comps = _edge_composites(tri, mats)
    kinds = [_classify(M, max(tol, 1e-9) * 1e3) for M in comps]
    report = FlatBundleReport(mats, third, det, comps, kinds, [1] * len(mats), True, sigma is not None, tol, deltas)
    report.boundary_unipotent = _sections_match(tri, deltas)
    report.raw_composite_kind = list(kinds)
    if sigma is not None and all(k != "other" for k in kinds):
        signs = _lift_signs(tri, kinds)
        if signs is None:
            report.liftable = False
        else:
            report.face_signs = signs
            report.matrices = [s * M for s, M in zip(signs, mats)]
            report.composites = _edge_composites(tri, report.matrices)
            report.composite_kind = [_classify(M, max(tol, 1e-9) * 1e3) for M in report.composites]
    return report


def _sections_match(tri: Triangulation3, deltas) -> bool:
    """Whether face flips and per-corner section signs can make every delta +1."""
    nf = tri.face_count
    col = {}
    rows, rhs = [], []
    for f, ((t1, a), (t2, b)) in enumerate(tri.gluings):
        for i in range(3):
            row = [0] * (nf + 4 * tri.tet_count)
            row[f] = 1
            row[nf + 4 * t1 + a[i]] ^= 1
            row[nf + 4 * t2 + b[i]] ^= 1
            rows.append(row)
            rhs.append(0 if deltas[f][i] == 1 else 1)
    return gf2_solve(rows, rhs) is not None


def _sgn(r) -> int:
    return 1 if r.real > 0 else -1


def _crossings(tri: Triangulation3, cls: int):
    """Gluing indices crossed once around an edge class, with direction."""
    t, (v, w) = tri.edge_classes[cls][0]
    out = []
    for tt, a, b, face in tri.walk_edge(t, v, w):
        _, _, gi = tri.neighbour(tt, face)
        forward = tri.gluings[gi][0][0] == tt and frozenset(tri.gluings[gi][0][1]) == frozenset(face)
        out.append((gi, forward))
    return out


def _edge_composites(tri: Triangulation3, mats) -> list:
    out = []
    for cls in range(len(tri.edge_classes)):
        M = np.eye(2, dtype=complex)
        for gi, forward in _crossings(tri, cls):
            g = mats[gi] if forward else np.linalg.inv(mats[gi])
            M = g @ M
        out.append(M)
    return out


def _lift_signs(tri: Triangulation3, kinds):
    """Per-face signs turning every -identity composite into +identity, or None."""
    rows = []
    for cls in range(len(tri.edge_classes)):
        row = [0] * tri.face_count
        for gi, _ in _crossings(tri, cls):
            row[gi] ^= 1
        rows.append(row)
    rhs = [1 if k == "-identity" else 0 for k in kinds]
    sol = gf2_solve(rows, rhs)
    if sol is None:
        return None
    return [-1 if s else 1 for s in sol]


# -- GF(2) helpers

def gf2_rank(rows) -> int:
    return len(_gf2_echelon([list(r) for r in rows])[0])


def _gf2_echelon(rows):
    rows = [list(r) for r in rows]
    pivots = []
    r = 0
    ncols = len(rows[0]) if rows else 0
    for c in range(ncols):
        piv = next((i for i in range(r, len(rows)) if rows[i][c]), None)
        if piv is None:
            continue
        rows[r], rows[piv] = rows[piv], rows[r]
        for i in range(len(rows)):
            if i != r and rows[i][c]:
                rows[i] = [a ^ b for a, b in zip(rows[i], rows[r])]
        pivots.append(c)
        r += 1
    return pivots, rows[:r]


def gf2_solve(rows, rhs):
    """Some solution of rows . s = rhs over GF(2), or None."""
    if not rows:
        return []
    aug = [list(r) + [b] for r, b in zip(rows, rhs)]
    n = len(rows[0])
    pivots, red = _gf2_echelon(aug)
    if n in pivots:
        return None
    sol = [0] * n
    for c, row in zip(pivots, red):
        sol[c] = row[n]
    return sol


def gf2_nullspace(rows, n: int):
    """Basis of {s : rows . s = 0}."""
    pivots, red = _gf2_echelon(rows) if rows else ([], [])
    free = [c for c in range(n) if c not in pivots]
    basis = []
    for f in free:
        s = [0] * n
        s[f] = 1
        for c, row in zip(pivots, red):
            s[c] = row[f]
        basis.append(s)
    return basis


def twist_classes(tri: Triangulation3):
    """Representatives of sign twists of the per-tetrahedron Ptolemy coordinates.

    A twist gives each tetrahedron edge a sign, subject to the product of the
    sign ratios around every glued face being +1. Twists differing by a
    per-corner vertex flip or a per-class flip are identified. The trivial
    twist comes first.
    """
    slots = [(t, e) for t in range(tri.tet_count) for e in ((0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3))]
    index = {s: i for i, s in enumerate(slots)}
    n = len(slots)
    cond = []
    for (t1, a), (t2, b) in tri.gluings:
        row = [0] * n
        for i, j in itertools.combinations(range(3), 2):
            row[index[(t1, tuple(sorted((a[i], a[j]))))]] ^= 1
            row[index[(t2, tuple(sorted((b[i], b[j]))))]] ^= 1
        cond.append(row)
    allowed = gf2_nullspace(cond, n)
    gauge = []
    for t in range(tri.tet_count):
        for v in range(4):
            row = [0] * n
            for e in ((0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)):
                if v in e:
                    row[index[(t, e)]] = 1
            gauge.append(row)
    for inc in tri.edge_classes:
        row = [0] * n
        for t, e in inc:
            row[index[(t, e)]] = 1
        gauge.append(row)
    # extend a basis of the gauge span to one of the allowed span
    base_rank = gf2_rank(gauge)
    extra = []
    for vec in allowed:
        if gf2_rank(gauge + extra + [vec]) > base_rank + len(extra):
            extra.append(vec)
    reps = []
    for bits in itertools.product((0, 1), repeat=len(extra)):
        s = [0] * n
        for bit, vec in zip(bits, extra):
            if bit:
                s = [a ^ b for a, b in zip(s, vec)]
        reps.append({slot: (-1 if s[i] else 1) for slot, i in index.items()})
    return reps


# -- gluing equations

CORNER_PAIR = {frozenset((0, 1)): 0, frozenset((2, 3)): 0, frozenset((0, 2)): 1, frozenset((1, 3)): 1,
               frozenset((0, 3)): 2, frozenset((1, 2)): 2}


def tet_shapes(u1, eta) -> tuple[complex, complex, complex]:
    return shape_params(eta[0] * cmath.exp(u1))


def gluing_equation_check(tri: Triangulation3, eps: EdgeOrientations, x, marked=None, *, tol: float = 1e-9) -> dict:
    """Product of corner shape parameters around every edge class."""
    from .orientation import tet_u_eta

    frames = [TetFrame.from_marked(m) for m in marked] if marked else [TetFrame()] * tri.tet_count
    shapes = []
    for t in range(tri.tet_count):
        u1, _, eta = tet_u_eta(tri, eps, x, t, frames[t])
        shapes.append(tet_shapes(u1, eta))
    products = [1 + 0j] * len(tri.edge_classes)
    for t in range(tri.tet_count):
        inv = {v: i for i, v in enumerate(frames[t].perm)}
        for i, j in itertools.combinations(range(4), 2):
            cls = tri.edge(t, i, j)[0]
            products[cls] *= shapes[t][CORNER_PAIR[frozenset((inv[i], inv[j]))]]
    residuals = [abs(p - 1) for p in products]
    return {
        "products": products,
        "residuals": residuals,
        "max_residual": max(residuals) if residuals else 0.0,
        "ok": all(r < tol for r in residuals),
    }
