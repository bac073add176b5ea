import cmath
import math

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cstet.dilog import (
    LATTICE,
    DilogValue,
    EtaPair,
    bloch_wigner,
    ell,
    ell_factor,
    li2,
    li2_series,
    project,
    surface_residual,
)

MINUS_ROOT = (-1 - math.sqrt(5)) / 2
PLUS_ROOT = (-1 + math.sqrt(5)) / 2


def oracle_li2(z):
    return complex(mpmath.polylog(2, mpmath.mpc(z.real, z.imag)))


def direct_sum(z, terms):
    return sum(z**n / n**2 for n in range(1, terms + 1))


def test_li2_basic_values():
    assert li2(0) == 0
    assert abs(li2(0.1) - direct_sum(0.1, 16)) < 1e-15
    assert abs(li2(0.5) - (math.pi**2 / 12 - math.log(2) ** 2 / 2)) < 1e-14
    assert abs(li2(1) - math.pi**2 / 6) < 1e-14
    assert abs(li2(-1) + math.pi**2 / 12) < 1e-14


def test_li2_golden_closed_form():
    # Li2 at minus the golden ratio has a closed form
    z = MINUS_ROOT
    assert abs(li2(z) - (-math.pi**2 / 10 - math.log(-z) ** 2)) < 1e-13


def test_series_agrees_with_mpmath_in_disc():
    rng = np.random.default_rng(0)
    for _ in range(300):
        z = cmath.rect(0.5 * math.sqrt(rng.random()), rng.uniform(0, 2 * math.pi))
        assert abs(li2_series(z) - oracle_li2(z)) < 1e-14


@settings(max_examples=300, deadline=None)
@given(st.floats(-6, 6), st.floats(-math.pi, math.pi))
def test_li2_matches_mpmath_everywhere(logr, arg):
    z = cmath.rect(math.exp(logr), arg)
    if abs(z - 1) < 1e-6 or (z.real > 1 and abs(z.imag) < 1e-12):
        return
    ref = oracle_li2(z)
    assert abs(li2(z) - ref) <= 1e-12 * max(1.0, abs(ref))


def test_li2_large_modulus():
    for z in (1e6 * cmath.exp(0.3j), -1e6, 1e5 - 3e5j):
        ref = oracle_li2(complex(z))
        assert abs(li2(z) - ref) <= 1e-12 * abs(ref)


def test_li2_on_cut_uses_limit_from_below():
    for r in (1.5, 3.0, 40.0):
        below = oracle_li2(complex(r, -1e-30))
        assert abs(li2(complex(r, 0.0)) - below) < 1e-12 * abs(below)


def test_bloch_wigner_values():
    assert abs(bloch_wigner(0.5)) < 1e-15
    z = cmath.exp(1j * math.pi / 3)
    ref = float(mpmath.im(mpmath.polylog(2, mpmath.exp(1j * mpmath.pi / 3))))
    assert abs(bloch_wigner(z) - ref) < 1e-13
    assert abs(bloch_wigner(z) - 1.0149416064096536) < 1e-12
    for bad in (0, 1):
        with pytest.raises(ValueError):
            bloch_wigner(bad)


@settings(max_examples=100, deadline=None)
@given(st.complex_numbers(min_magnitude=1e-3, max_magnitude=1e3, allow_nan=False, allow_infinity=False))
def test_bloch_wigner_conjugation(z):
    if abs(z - 1) < 1e-3 or abs(z.imag) < 1e-9:
        return
    assert abs(bloch_wigner(z) + bloch_wigner(z.conjugate())) < 1e-10


def test_bloch_wigner_conjugation_example():
    z = 0.3 + 0.4j
    assert abs(bloch_wigner(z.conjugate()) + bloch_wigner(z)) < 1e-15


def test_eta_coerce():
    assert EtaPair.coerce("+-") == (1, -1)
    assert EtaPair.coerce((-1, -1)) == (-1, -1)
    for bad in ("++-", "+x", (1, 0)):
        with pytest.raises(ValueError):
            EtaPair.coerce(bad)


def test_dilog_value_lattice():
    a = DilogValue(1 + 2j)
    assert a.eq_mod(1 + 2j + 3 * LATTICE)
    assert not a.eq_mod(1 + 2j + LATTICE / 2)
    assert not a.eq_mod(1 + 2.1j)
    assert 0 <= DilogValue(-5.0).reduced().real < LATTICE


def test_ell_half_point():
    v = ell((1, 1), math.log(2), -math.log(2))
    assert v.eq_mod(math.pi**2 / 12)


def m003_u(root):
    x1, x2 = cmath.log(root), 0
    return -x1 + x2, 2 * x1 - 2 * x2


def test_ell_m003_points():
    # consistent with exp(-9 pi i / 20) and exp(-pi i / 20) per tetrahedron
    vm = ell((1, 1), *m003_u(MINUS_ROOT))
    vp = ell((1, 1), *m003_u(PLUS_ROOT))
    assert vm.eq_mod(9 * math.pi**2 / 10)
    assert vp.eq_mod(math.pi**2 / 10)
    assert abs(vm.factor() - cmath.exp(-9j * math.pi / 20)) < 1e-12
    assert abs(vp.factor() - cmath.exp(-1j * math.pi / 20)) < 1e-12


def test_ell_m003_independent_of_log_branch():
    base = ell((1, 1), *m003_u(MINUS_ROOT))
    for k1 in range(-2, 3):
        for k2 in range(-2, 3):
            x1 = cmath.log(MINUS_ROOT) + 2j * math.pi * k1
            x2 = 2j * math.pi * k2
            assert ell((1, 1), -x1 + x2, 2 * x1 - 2 * x2).eq_mod(base)


def test_ell_factor_trivial_and_lattice():
    assert DilogValue(0).factor() == 1
    v = ell((1, 1), math.log(2), -math.log(2))
    assert abs(DilogValue(v.value + LATTICE).factor() - v.factor()) < 1e-14
    assert abs(ell_factor((1, 1), math.log(2), -math.log(2)) - v.factor()) == 0


def test_ell_off_surface():
    with pytest.raises(ValueError, match="off the curve"):
        ell((1, 1), 0.3, 0.3)


@pytest.mark.parametrize("eta", [(1, 1), (1, -1), (-1, 1), (-1, -1)])
def test_project_keeps_branch(eta):
    rng = np.random.default_rng(1)
    for _ in range(50):
        u1 = complex(rng.normal(), rng.normal())
        k = int(rng.integers(-3, 4))
        u2 = cmath.log(eta[1] * (1 - eta[0] * cmath.exp(-u1))) + 2j * math.pi * k
        noisy = u2 + 1e-6 * (1 + 1j)
        assert surface_residual(eta, u1, noisy) > 1e-9
        p = project(eta, u1, noisy)
        assert abs(p - u2) < 1e-12
        assert ell(eta, u1, noisy, project_u2=True).eq_mod(ell(eta, u1, u2))


@pytest.mark.parametrize("eta", [(1, 1), (1, -1), (-1, 1), (-1, -1)])
def test_ell_differential_along_real_path(eta):
    # d l = (u2 du1 - u1 du2) / 2 along a path, checked by integrating numerically
    u1a = 0.4 + 0.7j
    u1b = 1.1 - 0.2j
    n = 2000
    path = [u1a + (u1b - u1a) * i / n for i in range(n + 1)]

    def u2_of(u1, prev=None):
        base = cmath.log(eta[1] * (1 - eta[0] * cmath.exp(-u1)))
        if prev is None:
            return base
        return base + 2j * math.pi * round((prev - base).imag / (2 * math.pi))

    u2s = [u2_of(path[0])]
    for p in path[1:]:
        u2s.append(u2_of(p, u2s[-1]))
    integral = 0j
    for i in range(n):
        m1 = (path[i] + path[i + 1]) / 2
        m2 = (u2s[i] + u2s[i + 1]) / 2
        integral += 0.5 * (m2 * (path[i + 1] - path[i]) - m1 * (u2s[i + 1] - u2s[i]))
    diff = ell(eta, path[-1], u2s[-1]).value - ell(eta, path[0], u2s[0]).value
    assert DilogValue(diff).eq_mod(integral, tol=1e-6)
