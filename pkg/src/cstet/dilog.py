"""Dilogarithms: principal Li2, Bloch-Wigner D, and the branch-tracked ell^eta.

ell^eta(u1, u2) lives on the curve eta1*exp(-u1) + eta2*exp(u2) = 1 and is
well defined modulo 4*pi^2.
"""
from __future__ import annotations

import cmath
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import NamedTuple

PI2_6 = math.pi**2 / 6
LATTICE = 4 * math.pi**2
TWO_PI_I = 2j * math.pi

# on-surface tolerance for ell, relative to the size of the two terms
SURFACE_TOL = 1e-9
# |Im w| below this (relative) counts as sitting on the cut (1, inf)
CUT_TOL = 1e-11
# downward offset of Im u2 used to read the floor terms from below the cut
CUT_NUDGE = 1e-7


def _bernoulli(n_max: int) -> list[Fraction]:
    b = [Fraction(1)]
    for m in range(1, n_max + 1):
        acc = Fraction(0)
        for k in range(m):
            acc += math.comb(m + 1, k) * b[k]
        b.append(-acc / (m + 1))
    return b


# Li2(z) = sum_n B_n u^(n+1)/(n+1)!, u = -log(1-z), valid for |u| < 2*pi
_BERN_COEFFS = [float(bn / math.factorial(n + 1)) for n, bn in enumerate(_bernoulli(44))]


def li2_series(z: complex, terms: int | None = None) -> complex:
    """Direct power series sum z^n / n^2; only sensible for |z| < 1."""
    z = complex(z)
    total = 0j
    power = 1 + 0j
    n = 1
    while True:
        power *= z
        term = power / (n * n)
        total += term
        if terms is not None:
            if n >= terms:
                return total
        elif abs(term) <= 1e-18 * max(abs(total), 1e-300) or n > 10000:
            return total
        n += 1


def _li2_bernoulli(z: complex) -> complex:
    u = -cmath.log(1 - z)
    u2 = u * u
    total = _BERN_COEFFS[0] * u + _BERN_COEFFS[1] * u2
    power = u
    for n in range(2, len(_BERN_COEFFS), 2):
        power *= u2
        term = _BERN_COEFFS[n] * power
        total += term
        if abs(term) < 1e-18 * abs(total):
            break
    return total


def _li2_disc(z: complex) -> complex:
    # |z| <= 1
    if abs(z) <= 0.5:
        return li2_series(z)
    if z.real > 0.5:
        if z == 1:
            return complex(PI2_6)
        return PI2_6 - cmath.log(z) * cmath.log(1 - z) - _li2_bernoulli(1 - z)
    return _li2_bernoulli(z)


def li2(z: complex) -> complex:
    """Principal branch of the dilogarithm, cut along (1, inf).

    Points exactly on the cut take the limit from below, Im = -pi*log(x).
    """
    z = complex(z)
    if z == 0:
        return 0j
    if z.imag == 0 and z.real > 1:
        x = z.real
        lx = math.log(x)
        return complex(math.pi**2 / 3 - 0.5 * lx * lx - _li2_disc(complex(1 / x)).real, -math.pi * lx)
    if abs(z) <= 1:
        return _li2_disc(z)
    return -PI2_6 - 0.5 * cmath.log(-z) ** 2 - _li2_disc(1 / z)


def bloch_wigner(z: complex) -> float:
    """D(z) = Im Li2(z) + log|z| arg(1 - z)."""
    z = complex(z)
    if z == 0 or z == 1:
        raise ValueError("Bloch-Wigner function is undefined at 0 and 1")
    return li2(z).imag + math.log(abs(z)) * cmath.phase(1 - z)


class EtaPair(NamedTuple):
    eta1: int
    eta2: int

    @classmethod
    def coerce(cls, eta) -> "EtaPair":
        if isinstance(eta, str):
            if len(eta) != 2 or any(c not in "+-" for c in eta):
                raise ValueError(f"eta must look like '+-', got {eta!r}")
            return cls(*(1 if c == "+" else -1 for c in eta))
        e1, e2 = (int(e) for e in eta)
        if e1 not in (1, -1) or e2 not in (1, -1):
            raise ValueError(f"eta components must be +1 or -1, got {eta}")
        return cls(e1, e2)


@dataclass(frozen=True)
class DilogValue:
    """A complex number considered modulo 4*pi^2."""

    value: complex

    def eq_mod(self, other, tol: float = 1e-9) -> bool:
        other = other.value if isinstance(other, DilogValue) else complex(other)
        d = self.value - other
        q = d.real / LATTICE
        return abs(q - round(q)) < tol and abs(d.imag) < tol

    def reduced(self) -> complex:
        """Representative with real part in [0, 4*pi^2)."""
        return complex(self.value.real % LATTICE, self.value.imag)

    def factor(self) -> complex:
        return cmath.exp(self.value / TWO_PI_I)


def surface_residual(eta, u1: complex, u2: complex) -> float:
    e1, e2 = EtaPair.coerce(eta)
    a = e1 * cmath.exp(-u1)
    b = e2 * cmath.exp(u2)
    return abs(a + b - 1) / max(1.0, abs(a), abs(b))


def project(eta, u1: complex, u2: complex) -> complex:
    """Move u2 onto the curve, keeping the branch of Im u2."""
    e1, e2 = EtaPair.coerce(eta)
    base = cmath.log(e2 * (1 - e1 * cmath.exp(-u1)))
    k = round((u2.imag - base.imag) / (2 * math.pi))
    return base + TWO_PI_I * k


def ell(eta, u1: complex, u2: complex, *, tol: float = SURFACE_TOL, project_u2: bool = False) -> DilogValue:
    """The branch-tracked dilogarithm ell^eta(u1, u2) modulo 4*pi^2."""
    e1, e2 = EtaPair.coerce(eta)
    u1, u2 = complex(u1), complex(u2)
    if project_u2:
        u2 = project((e1, e2), u1, u2)
    resid = surface_residual((e1, e2), u1, u2)
    if resid > tol:
        raise ValueError(f"(u1, u2) is off the curve for eta={(e1, e2)}: residual {resid:.3g}")
    w = e1 * cmath.exp(-u1)
    on_cut = w.real > 1 and abs(w.imag) <= CUT_TOL * max(1.0, abs(w))
    if on_cut:
        # Li2 below the cut goes with Im u2 read just below its jump
        lw = li2(complex(w.real, 0.0))
        im = u2.imag - CUT_NUDGE
    else:
        lw = li2(w)
        im = u2.imag
    shift = 0.5 if e2 == 1 else 0.0
    fl = math.floor(-im / (2 * math.pi) + shift)
    base = u1 if e1 == 1 else u1 + 1j * math.pi
    extra = 0 if e2 == 1 else -1j * math.pi * u1
    return DilogValue(lw - u1 * u2 / 2 + extra - TWO_PI_I * fl * base)


def ell_factor(eta, u1: complex, u2: complex, **kw) -> complex:
    """exp(ell^eta(u1, u2) / (2 pi i)); the lattice ambiguity drops out."""
    return ell(eta, u1, u2, **kw).factor()
