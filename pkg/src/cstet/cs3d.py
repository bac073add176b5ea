"""The 3D invariant from Ptolemy data, its choice-independence suite, and a Ptolemy solver."""
from __future__ import annotations

import cmath
import json
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import abelianization as ab
from .dilog import ell
from .orientation import (
    EdgeOrientations,
    TetFrame,
    check_marked_pair,
    default_marked,
    face_mismatch,
    tet_eps_key,
    tet_u_eta,
)
from .tables import PhaseFactor, k_factor
from .triangulation import Triangulation3, TriangulationError, all_relabelings, triangulation_from_dict

PTOLEMY_TOL = 1e-9


class DecorationError(ValueError):
    pass


# -- input

@dataclass
class Problem:
    tri: Triangulation3
    eps: EdgeOrientations
    marked: list
    x: list | None = None
    name: str = ""

    def x_json(self, x=None):
        """x values listed in the order of the edge orientation entries."""
        x = self.x if x is None else x
        return [_cjson(x[self.eps.class_of_rep(i)]) for i in range(len(x))]


def _parse_complex(v) -> complex:
    if isinstance(v, dict):
        return complex(float(v["re"]), float(v.get("im", 0.0)))
    if isinstance(v, (list, tuple)):
        re, im = v
        return complex(float(re), float(im))
    if isinstance(v, (int, float)) and not isinstance(v, bool):
        return complex(v)
    raise DecorationError(f"cannot read complex number from {v!r}")


def problem_from_dict(data: dict, name: str = "") -> Problem:
    tri = triangulation_from_dict(data)
    if "edge_orientations" in data:
        eps = EdgeOrientations.from_json(tri, data["edge_orientations"])
    else:
        eps = EdgeOrientations.default(tri)
    if "marked" in data:
        marked = data["marked"]
        if len(marked) != tri.tet_count:
            raise DecorationError("need one marked pair per tetrahedron")
        marked = [check_marked_pair(m) for m in marked]
    else:
        marked = default_marked(tri)
    x = None
    if "x" in data:
        vals = data["x"]
        if len(vals) != len(tri.edge_classes):
            raise DecorationError(f"x needs {len(tri.edge_classes)} entries, got {len(vals)}")
        vals = [_parse_complex(v) for v in vals]
        x = [0j] * len(vals)
        for i, v in enumerate(vals):
            x[eps.class_of_rep(i)] = v
    return Problem(tri, eps, marked, x, name)


def load_input(source) -> Problem:
    if isinstance(source, dict):
        return problem_from_dict(source)
    path = Path(source)
    try:
        text = path.read_text()
    except OSError as exc:
        raise TriangulationError(f"cannot read {path}: {exc}") from exc
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise TriangulationError(f"invalid JSON in {path}: {exc}") from exc
    return problem_from_dict(data, path.stem)


def fixture_path(name: str) -> Path:
    return Path(__file__).parent / "data" / f"{name}.json"


def load_fixture(name: str) -> Problem:
    return load_input(fixture_path(name))


# -- the invariant

def _num(v: float) -> float:
    return float(f"{v:.15g}")


def _cjson(z) -> dict:
    z = complex(z)
    return {"re": _num(z.real), "im": _num(z.imag)}


@dataclass
class TetEntry:
    tet: int
    u1: complex
    u2: complex
    eta: tuple
    ell: complex
    k: int
    ptolemy_residual: float

    def to_json(self) -> dict:
        return {
            "tet": self.tet,
            "u1": _cjson(self.u1),
            "u2": _cjson(self.u2),
            "eta": list(self.eta),
            "ell": _cjson(self.ell),
            "k_numerator": self.k,
        }


@dataclass
class InvariantReport:
    value: complex
    phase: PhaseFactor
    tets: list
    faces: list
    checks: dict = field(default_factory=dict)

    def to_json(self) -> dict:
        return {
            "value": _cjson(self.value),
            "tets": [t.to_json() for t in self.tets],
            "faces": list(self.faces),
            "checks": _jsonable(self.checks),
        }


def _jsonable(obj):
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, complex):
        return _cjson(obj)
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (float, np.floating)):
        return _num(float(obj))
    if isinstance(obj, np.integer):
        return int(obj)
    return obj


def invariant(tri: Triangulation3, eps: EdgeOrientations, marked, x, *, tol: float = PTOLEMY_TOL,
              face_sign: int = 1, k_table=None, checks: bool = False) -> InvariantReport:
    """Product of the per-tetrahedron dilogarithm and k factors and the per-face cube roots."""
    if not tri.all_ideal():
        raise DecorationError("the invariant is only implemented for all-ideal triangulations")
    if x is None or len(x) != len(tri.edge_classes):
        raise DecorationError("missing x values")
    x = [complex(v) for v in x]
    marked = marked or default_marked(tri)
    phase = PhaseFactor(0)
    entries = []
    for t in range(tri.tet_count):
        res = ab.relative_ptolemy_residual(tri, eps, x, t)
        if res > tol:
            raise DecorationError(f"tetrahedron {t}: Ptolemy residual {res:.3g} exceeds {tol:g}")
        frame = TetFrame.from_marked(marked[t])
        u1, u2, eta = tet_u_eta(tri, eps, x, t, frame)
        val = ell(eta, u1, u2, tol=max(tol, 1e-9))
        k = k_factor(tet_eps_key(eps, t, frame), k_table)
        phase = phase * k * val.factor()
        entries.append(TetEntry(t, u1, u2, tuple(eta), val.value, k.numerator, res))
    faces = [face_mismatch(tri, marked, gi) for gi in range(tri.face_count)]
    phase = phase * PhaseFactor(8 * face_sign * sum(faces))
    report = InvariantReport(complex(phase), phase, entries, faces)
    if checks:
        report.checks = run_checks(tri, eps, marked, x, tol=tol)
    return report


def run_checks(tri, eps, marked, x, *, tol: float = PTOLEMY_TOL) -> dict:
    out = {}
    res = [ab.relative_ptolemy_residual(tri, eps, x, t) for t in range(tri.tet_count)]
    out["ptolemy"] = {"max_residual": max(res), "ok": max(res) < tol}
    surf = []
    cross = []
    for t in range(tri.tet_count):
        frame = TetFrame.from_marked(marked[t])
        u1, u2, eta = tet_u_eta(tri, eps, x, t, frame)
        surf.append(abs(eta[0] * cmath.exp(-u1) + eta[1] * cmath.exp(u2) - 1))
        try:
            s = ab.reconstruct_sections(tri, eps, x, t, tol=tol)
            z = ab.sections_shape(s, frame)
            cross.append(abs(z - eta[0] * cmath.exp(u1)) / max(1.0, abs(z)))
        except ab.DegenerateError:
            cross.append(math.inf)
    out["surface"] = {"max_residual": max(surf), "ok": max(surf) < tol}
    out["cross_ratio"] = {"max_residual": max(cross), "ok": max(cross) < tol}
    try:
        fb = ab.build_flat_bundle(tri, eps, x, tol=tol)
        out["flat_bundle"] = fb.summary()
    except ab.DegenerateError as exc:
        out["flat_bundle"] = {"ok": False, "error": str(exc)}
    ge = ab.gluing_equation_check(tri, eps, x, marked, tol=tol)
    out["gluing_equations"] = {"max_residual": ge["max_residual"], "ok": ge["ok"]}
    out["ok"] = all(v["ok"] for v in out.values())
    return out


# -- choice independence

def vertex_rescale(tri: Triangulation3, x, vclass: int, t: complex) -> list:
    """x after multiplying every section at one vertex class by exp(t)."""
    out = list(x)
    for cls in range(len(tri.edge_classes)):
        out[cls] += t * tri.edge_vertex_counts(cls).get(vclass, 0)
    return out


PERTURBATIONS = ("shift", "reverse", "remark", "rescale")


def perturb(tri, eps, marked, x, kind: str, rng):
    x = list(x)
    marked = list(marked)
    if kind == "shift":
        m = rng.integers(-3, 4, size=len(x))
        x = [v + 2j * math.pi * int(k) for v, k in zip(x, m)]
    elif kind == "reverse":
        cls = int(rng.integers(len(x)))
        eps = eps.reversed(cls)
        x[cls] += 1j * math.pi * (1 if rng.random() < 0.5 else -1)
    elif kind == "remark":
        pairs = [((0, 1), (2, 3)), ((0, 2), (1, 3)), ((0, 3), (1, 2))]
        marked = [pairs[int(rng.integers(3))] for _ in marked]
    elif kind == "rescale":
        c = int(rng.integers(len(tri.vertex_classes)))
        t = complex(rng.normal(), rng.normal())
        x = vertex_rescale(tri, x, c, t)
    else:
        raise ValueError(f"unknown perturbation {kind!r}")
    return eps, marked, x


def invariance_suite(tri, eps, marked, x, *, trials: int = 100, seed: int = 0, kinds=PERTURBATIONS,
                     mixed: int = 0, k_table=None) -> dict:
    """Recompute the invariant after random changes of the auxiliary choices."""
    rng = np.random.default_rng(seed)
    base = invariant(tri, eps, marked, x, k_table=k_table).value
    report = {"base": base, "kinds": {}}
    worst_all = 0.0
    plans = [(k, [k]) for k in kinds]
    if mixed:
        plans.append(("mixed", None))
    for name, steps in plans:
        worst = 0.0
        count = trials if steps is not None else mixed
        for _ in range(count):
            seq = steps or [kinds[int(i)] for i in rng.integers(len(kinds), size=4)]
            e, m, xx = eps, marked, x
            for s in seq:
                e, m, xx = perturb(tri, e, m, xx, s, rng)
            v = invariant(tri, e, m, xx, k_table=k_table).value
            worst = max(worst, abs(v - base))
        report["kinds"][name] = {"trials": count, "max_deviation": worst}
        worst_all = max(worst_all, worst)
    report["max_deviation"] = worst_all
    report["ok"] = worst_all < 1e-9
    return report


# -- the Ptolemy solver

class PtolemySystem:
    """Signed Ptolemy quadrics, one per tetrahedron, in the class coordinates X."""

    def __init__(self, tri: Triangulation3, eps: EdgeOrientations, sigma=None):
        self.tri = tri
        self.n = len(tri.edge_classes)
        A, B, C = [], [], []
        for t in range(tri.tet_count):
            terms = (((0, 1), (2, 3), 1), ((0, 2), (1, 3), -1), ((0, 3), (1, 2), 1))
            a_row, b_row, c_row = [], [], []
            for e, f, sgn in terms:
                ca, sa = self._slot(t, e, eps, sigma)
                cb, sb = self._slot(t, f, eps, sigma)
                a_row.append(ca)
                b_row.append(cb)
                c_row.append(sgn * sa * sb)
            A.append(a_row)
            B.append(b_row)
            C.append(c_row)
        self.A, self.B, self.C = np.array(A), np.array(B), np.array(C, dtype=float)
        self.fixed = gauge_edges(tri)
        self.free = [c for c in range(self.n) if c not in self.fixed]

    def _slot(self, t, e, eps, sigma):
        i, j = e
        cls = self.tri.edge(t, i, j)[0]
        s = eps.sign(t, j, i)
        if sigma is not None:
            s *= sigma[(t, e)]
        return cls, s

    def full(self, Z):
        X = np.ones(Z.shape[:-1] + (self.n,), dtype=complex)
        X[..., self.free] = Z
        return X

    def residual(self, X):
        terms = self.C * X[..., self.A] * X[..., self.B]
        scale = np.abs(terms).max(axis=-1)
        return terms.sum(axis=-1), scale

    def jacobian(self, X):
        J = np.zeros(X.shape[:-1] + (self.tri.tet_count, self.n), dtype=complex)
        for t in range(self.tri.tet_count):
            for k in range(3):
                a, b, c = self.A[t, k], self.B[t, k], self.C[t, k]
                J[..., t, a] += c * X[..., b]
                J[..., t, b] += c * X[..., a]
        return J[..., self.free]


def gauge_edges(tri: Triangulation3) -> list[int]:
    """Edge classes whose X is fixed to 1, one per independent vertex scaling."""
    cusps = [i for i, k in enumerate(tri.vertex_kinds) if k == "ideal"]
    rows = []
    chosen = []
    for cls in range(len(tri.edge_classes)):
        counts = tri.edge_vertex_counts(cls)
        row = [counts.get(c, 0) for c in cusps]
        trial = np.array(rows + [row], dtype=float)
        if np.linalg.matrix_rank(trial) > len(rows):
            rows.append(row)
            chosen.append(cls)
        if len(rows) == len(cusps):
            break
    return chosen


def _newton(system: PtolemySystem, Z, *, tol: float, iters: int):
    n0 = None
    for _ in range(iters):
        X = system.full(Z)
        F, scale = system.residual(X)
        rel = np.abs(F).max(axis=-1) / np.maximum(scale.max(axis=-1), 1e-300)
        active = rel > tol
        if not active.any():
            break
        J = system.jacobian(X[active])
        dZ = -np.einsum("bij,bj->bi", np.linalg.pinv(J), F[active])
        Za = Z[active]
        n0 = np.linalg.norm(F[active], axis=-1)
        lam = np.ones(len(Za))
        for _ in range(10):
            trial = Za + lam[:, None] * dZ
            nt = np.linalg.norm(system.residual(system.full(trial))[0], axis=-1)
            worse = ~(nt <= n0) | ~np.isfinite(nt)
            if not worse.any():
                break
            lam[worse] /= 2
        Z[active] = Za + lam[:, None] * dZ
        Z[~np.isfinite(Z).all(axis=-1)] = np.nan
    X = system.full(Z)
    F, scale = system.residual(X)
    rel = np.abs(F).max(axis=-1) / np.maximum(scale.max(axis=-1), 1e-300)
    return X, rel


def _draw_starts(rng, count, dim):
    mag = rng.normal(size=(count, dim))
    ang = rng.uniform(-math.pi, math.pi, size=(count, dim))
    return np.exp(mag + 1j * ang)


def _threads() -> int:
    env = os.environ.get("CSTET_THREADS")
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            pass
    return os.cpu_count() or 1


def _raw_solutions(system: PtolemySystem, starts: int, seed: int, tol: float, iters: int, threads=None):
    dim = len(system.free)
    if dim == 0:
        X = system.full(np.zeros((1, 0), dtype=complex))
        F, scale = system.residual(X)
        ok = np.abs(F).max() <= tol * max(scale.max(), 1e-300)
        return [X[0]] if ok else []
    threads = threads or _threads()
    chunks = max(1, min(threads, starts // 250 or 1))
    seeds = np.random.SeedSequence(seed).spawn(chunks)
    sizes = [starts // chunks + (i < starts % chunks) for i in range(chunks)]

    def run(i):
        rng = np.random.default_rng(seeds[i])
        Z = _draw_starts(rng, sizes[i], dim)
        return _newton(system, Z, tol=tol, iters=iters)

    if chunks == 1:
        results = [run(0)]
    else:
        with ThreadPoolExecutor(max_workers=chunks) as pool:
            results = list(pool.map(run, range(chunks)))
    found = []
    for X, rel in results:
        for row, r in zip(X, rel):
            if not np.isfinite(row).all() or r > 1e3 * tol:
                continue
            mags = np.abs(row)
            if mags.min() < 1e-6 or mags.max() > 1e6:
                continue
            found.append(row)
    return _cluster(found)


def _cluster(rows, tol: float = 1e-6):
    rows = sorted(rows, key=lambda r: tuple(np.round(np.concatenate([r.real, r.imag]), 8)))
    out = []
    for r in rows:
        if not any(np.abs(r - q).max() <= tol * max(1.0, np.abs(q).max()) for q in out):
            out.append(r)
    return out


@dataclass
class Solution:
    X: list
    x: list
    flat_bundle: dict
    gluing_residual: float
    value: complex | None = None

    def to_json(self, problem: Problem | None = None) -> dict:
        x = problem.x_json(self.x) if problem else [_cjson(v) for v in self.x]
        out = {"x": x, "flat_bundle": _jsonable(self.flat_bundle), "gluing_residual": _num(self.gluing_residual)}
        if self.value is not None:
            out["value"] = _cjson(self.value)
        return out


@dataclass
class SolveResult:
    solutions: list
    rejected: int = 0
    obstructed: list = field(default_factory=list)
    raw_count: int = 0

    def to_json(self, problem: Problem | None = None) -> dict:
        return {
            "count": len(self.solutions),
            "solutions": [s.to_json(problem) for s in self.solutions],
            "rejected": self.rejected,
            "raw_count": self.raw_count,
            "obstructed": _jsonable(self.obstructed),
        }


def solve_ptolemy(tri: Triangulation3, eps: EdgeOrientations, *, starts: int = 2000, seed: int = 0,
                  tol: float = 1e-12, iters: int = 80, marked=None, threads=None,
                  probe_twisted: str | bool = "auto") -> SolveResult:
    """Multi-start damped Newton on the signed Ptolemy system, filtered by flat-bundle checks.

    With probe_twisted="auto" and no SL2 solution, the twisted sign systems are
    solved too and their unliftable solutions reported under `obstructed`.
    """
    if not tri.all_ideal():
        raise DecorationError("the solver needs an all-ideal triangulation")
    system = PtolemySystem(tri, eps)
    raw = _raw_solutions(system, starts, seed, tol, iters, threads)
    sols, rejected = [], 0
    for X in raw:
        x = [cmath.log(v) for v in X]
        try:
            fb = ab.build_flat_bundle(tri, eps, x)
        except ab.DegenerateError:
            rejected += 1
            continue
        ge = ab.gluing_equation_check(tri, eps, x, marked)
        if not fb.ok:
            rejected += 1
            continue
        sol = Solution([complex(v) for v in X], x, fb.summary(), ge["max_residual"])
        sol.value = invariant(tri, eps, marked, x).value
        sols.append(sol)
    result = SolveResult(sols, rejected, raw_count=len(raw))
    if probe_twisted is True or (probe_twisted == "auto" and not sols):
        result.obstructed = _probe_twisted(tri, eps, starts, seed, tol, iters, threads)
    return result


def _probe_twisted(tri, eps, starts, seed, tol, iters, threads) -> list:
    out = []
    for idx, sigma in enumerate(ab.twist_classes(tri)):
        if idx == 0:
            continue
        system = PtolemySystem(tri, eps, sigma)
        for X in _raw_solutions(system, max(starts // 4, 50), seed + idx, tol, iters, threads):
            x = [cmath.log(v) for v in X]
            try:
                fb = ab.build_flat_bundle(tri, eps, x, sigma=sigma)
            except ab.DegenerateError:
                continue
            if fb.boundary_unipotent:
                # an untwisted point in disguise; the untwisted system already covers it
                continue
            out.append({
                "twist": idx,
                "X": [complex(v) for v in X],
                "edge_composites": list(fb.raw_composite_kind),
                "lifted_composites": list(fb.composite_kind),
                "sl2_liftable": fb.liftable,
                "boundary_unipotent": False,
            })
    return out


class PtolemySolver:
    """Estimator-style wrapper: fit(problem) stores the verified solutions."""

    def __init__(self, starts: int = 2000, seed: int = 0, tol: float = 1e-12):
        self.starts = starts
        self.seed = seed
        self.tol = tol

    def get_params(self, deep: bool = True) -> dict:
        return {"starts": self.starts, "seed": self.seed, "tol": self.tol}

    def set_params(self, **params):
        for k, v in params.items():
            if k not in self.get_params():
                raise ValueError(f"unknown parameter {k!r}")
            setattr(self, k, v)
        return self

    def fit(self, problem: Problem, y=None):
        self.result_ = solve_ptolemy(problem.tri, problem.eps, starts=self.starts, seed=self.seed, tol=self.tol,
                                     marked=problem.marked)
        self.solutions_ = self.result_.solutions
        return self


def full_pipeline(source, *, starts: int = 2000, seed: int = 0, tol: float = PTOLEMY_TOL) -> list[InvariantReport]:
    problem = source if isinstance(source, Problem) else load_input(source)
    if problem.x is not None:
        return [invariant(problem.tri, problem.eps, problem.marked, problem.x, tol=tol, checks=True)]
    res = solve_ptolemy(problem.tri, problem.eps, starts=starts, seed=seed, marked=problem.marked)
    return [invariant(problem.tri, problem.eps, problem.marked, s.x, tol=tol, checks=True) for s in res.solutions]


def relabel_tets(problem: Problem, perm) -> Problem:
    """The same decorated complex with tetrahedron t renamed perm[t]."""
    tri = problem.tri
    gl = [{"from": [perm[t1], list(a)], "to": [perm[t2], list(b)]} for (t1, a), (t2, b) in tri.gluings]
    data = {"tets": tri.tet_count, "gluings": gl}
    new_tri = triangulation_from_dict(data)
    reps = [(perm[t], v, w) for t, v, w in problem.eps.representatives]
    eps = EdgeOrientations(new_tri, reps)
    marked = [None] * tri.tet_count
    for t, m in enumerate(problem.marked):
        marked[perm[t]] = m
    x = None
    if problem.x is not None:
        x = [0j] * len(problem.x)
        for i, (t, v, w) in enumerate(problem.eps.representatives):
            x[eps.class_of_rep(i)] = problem.x[problem.eps.class_of_rep(i)]
    return Problem(new_tri, eps, marked, x, problem.name)

