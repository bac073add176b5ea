"""Chern-Simons invariants of triangulated 3-manifolds from Ptolemy data, and surface transition factors."""
from .cs3d import PtolemySolver, full_pipeline, invariance_suite, invariant, load_fixture, load_input, solve_ptolemy
from .csline2d import LineState, pentagon_suite, run_moves
from .dilog import DilogValue, EtaPair, bloch_wigner, ell, ell_factor, li2
from .triangulation import Surface2, Triangulation3, parse_triangulation

__version__ = "0.1.0"
