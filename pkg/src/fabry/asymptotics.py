"""Closed-form expansion coefficients of the resonances near ``k0``.

For each nonzero block eigenvalue ``lam`` with eigenvector ``alpha`` the two
branches are

    omega(delta) = k0 v +/- v sqrt(lam delta / r) + (v / 2r) (a^T B a)/(a^T L a) delta

where ``B`` carries the cotangents of the segments flanking the block.  The
remaining ``n - 2m`` branches move linearly in delta.
"""

from __future__ import annotations

import cmath
import itertools
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

import numpy as np

from fabry.capacitance import (
    BlockSpectrum,
    CapacitanceSystem,
    block_spectrum,
    global_coefficients_direct,
)
from fabry.chain import BlockPartition, MaterialParams, Number, StructuralVector, Wavenumber

CHAIN_END_COT = -1j


def cot_pi_multiple(x: Number) -> float:
    """``cot(pi x)`` with exact zeros and +/-1 for rational ``x``."""
    if isinstance(x, Fraction):
        frac = x - math.floor(x)
        if frac == 0:
            raise ZeroDivisionError(f"cot(pi * {x}) is infinite")
        if frac == Fraction(1, 2):
            return 0.0
        if frac == Fraction(1, 4):
            return 1.0
        if frac == Fraction(3, 4):
            return -1.0
        return 1.0 / math.tan(math.pi * float(frac))
    frac = float(x) - math.floor(float(x))
    if frac == 0.0:
        raise ZeroDivisionError(f"cot(pi * {x}) is infinite")
    return 1.0 / math.tan(math.pi * frac)


def sin_pi_multiple(x: Number) -> float:
    if isinstance(x, Fraction):
        frac = x - 2 * math.floor(x / 2)
        if frac in (0, 1):
            return 0.0
        if frac == Fraction(1, 2):
            return 1.0
        if frac == Fraction(3, 2):
            return -1.0
        return math.sin(math.pi * float(frac))
    return math.sin(math.pi * float(x))


def flank_cot(t: StructuralVector, k0: Wavenumber, j: int) -> complex:
    """``cot(t_j k0)`` with the chain-end value ``-i`` at ``j = 0`` and ``j = 2N``."""
    if j <= 0 or j > len(t):
        return CHAIN_END_COT
    try:
        return complex(cot_pi_multiple(t[j] * k0.q))
    except ZeroDivisionError as exc:
        raise ValueError(
            f"segment {j} flanking a block is itself resonant; the partition is not maximal"
        ) from exc


@dataclass(frozen=True)
class ExpansionCoefficients:
    """One eigenvalue occurrence: ``omega = k0 v +/- c1 delta^{1/2} + c2 delta``."""

    block_index: int
    a: int
    b: int
    lam: float
    alpha: np.ndarray
    B: np.ndarray
    c1: float
    c2: complex
    k0: float
    v: float
    r: float

    @property
    def nu_sqrt_coeff(self) -> float:
        """Coefficient of ``nu^{1/2}`` in ``k(nu)``."""
        return math.sqrt(self.lam / 2)

    @property
    def nu_linear_coeff(self) -> complex:
        """Coefficient of ``nu`` in ``k(nu)``; equals ``r c2 / (2 v)``."""
        return self.c2 * self.r / (2 * self.v)

    def omega(self, delta: complex, sign: int) -> complex:
        return self.k0 * self.v + sign * self.c1 * cmath.sqrt(delta) + self.c2 * delta

    def k_of_delta(self, delta: complex, sign: int) -> complex:
        return self.omega(delta, sign) / self.v

    def k_of_nu(self, nu: complex, sign: int) -> complex:
        return self.k0 + sign * self.nu_sqrt_coeff * cmath.sqrt(nu) + self.nu_linear_coeff * nu


def _chi(t: StructuralVector, j: int, lam: float) -> float:
    if j % 2 == 1:
        return 1.0
    return 1.0 / (lam * float(t[j]) ** 2)


def boundary_matrix(t: StructuralVector, k0: Wavenumber, a: int, b: int, l: int, lam: float) -> np.ndarray:
    B = np.zeros((l, l), dtype=complex)
    B[0, 0] += flank_cot(t, k0, a - 1) * _chi(t, a, lam)
    B[l - 1, l - 1] += flank_cot(t, k0, b + 1) * _chi(t, b, lam)
    return B


def rayleigh_term(alpha: np.ndarray, B: np.ndarray, L_diag: Sequence[float]) -> complex:
    Lw = np.asarray([float(x) for x in L_diag])
    return complex(alpha @ B @ alpha) / float(alpha @ (Lw * alpha))


def expansion_coefficients(
    sys: CapacitanceSystem,
    spectrum: BlockSpectrum | None = None,
    params: MaterialParams | None = None,
) -> list[ExpansionCoefficients]:
    if spectrum is None:
        spectrum = block_spectrum(sys)
    r = float(params.r) if params else 1.0
    v = float(params.v) if params else 1.0
    out = []
    for bi, ei, lam in spectrum.occurrences():
        be = spectrum.blocks[bi]
        blk = be.system.block
        alpha = be.alpha[:, ei]
        B = boundary_matrix(sys.t, sys.k0, blk.a, blk.b, blk.l, lam)
        ratio = rayleigh_term(alpha, B, be.system.L_diag)
        out.append(
            ExpansionCoefficients(
                block_index=bi,
                a=blk.a,
                b=blk.b,
                lam=lam,
                alpha=alpha.copy(),
                B=B,
                c1=v * math.sqrt(lam / r),
                c2=v / (2 * r) * ratio,
                k0=sys.k0.value,
                v=v,
                r=r,
            )
        )
    return out


# --- Newton polygon lower boundary -------------------------------------------


def block_order(n_j: int, l: int) -> int:
    """``f_j(l)``: leading z-order of the block factor's nu^l coefficient."""
    if 0 <= l <= n_j // 2:
        return n_j - 2 * l
    if n_j % 2 == 1 and l == (n_j + 1) // 2:
        return (n_j + 1) // 2 - l
    raise ValueError(f"l={l} outside [0, ceil({n_j}/2)]")


@dataclass(frozen=True)
class NewtonBoundary:
    n: int
    m: int
    S: tuple[int, ...]
    block_sizes: tuple[int, ...]

    @property
    def breakpoints(self) -> tuple[tuple[int, int], tuple[int, int]]:
        return ((self.m, self.n - 2 * self.m), (self.n - self.m, 0))


def boundary_closed_form(n: int, m: int, l: int) -> int:
    if l <= m:
        return n - 2 * l
    return n - m - l


def newton_boundary(partition: BlockPartition) -> NewtonBoundary:
    n, m = partition.n, partition.m
    S = tuple(boundary_closed_form(n, m, l) for l in range(n - m + 1))
    return NewtonBoundary(n, m, S, tuple(b.n for b in partition.blocks))


def boundary_brute_force(sizes: Sequence[int]) -> list[int]:
    """``min sum f_j(l_j)`` over all compositions, for ``l = 0..sum ceil(n_j/2)``."""
    ranges = [range(-(-nj // 2) + 1) for nj in sizes]
    top = sum(len(r) - 1 for r in ranges)
    best = [math.inf] * (top + 1)
    for combo in itertools.product(*ranges):
        total = sum(block_order(nj, lj) for nj, lj in zip(sizes, combo))
        l = sum(combo)
        if total < best[l]:
            best[l] = total
    return [int(x) for x in best]


# --- constants of the nu-expansion of g ---------------------------------------


@dataclass(frozen=True)
class LeadingConstants:
    """``g_l(k0+z) ~ lead[l] z^{n-2l}`` for ``l <= m`` and ``g_0 ~ lead[0] z^n (1 + C2 z)``.

    ``next_lead`` is the ``z^{n-2m-1}`` constant of ``g_{m+1}`` (None when
    every block has even length).
    """

    C1: float
    C2: float
    CI: tuple[float, ...]
    lead: tuple[complex, ...]
    next_lead: complex | None
    n: int
    m: int
    N: int


def leading_constants(t: StructuralVector, k0: Wavenumber, partition: BlockPartition) -> LeadingConstants:
    I = set(partition.I)
    N = t.N
    n, m = partition.n, partition.m
    sign = (-1) ** sum(partition.multiples.values())
    sin_prod = 1.0
    C2 = 0.0
    t_prod = 1.0
    for j in range(1, len(t) + 1):
        if j in I:
            t_prod *= float(t[j])
        else:
            sin_prod *= sin_pi_multiple(t[j] * k0.q)
            C2 += float(t[j]) * cot_pi_multiple(t[j] * k0.q)
    C1 = sign * sin_prod * t_prod
    CI = tuple(float(c) for c in global_coefficients_direct(t, partition.I, m))
    lead = tuple(C1 * 2**l * (-2j) ** (2 * N - 1 - 2 * l) * CI[l] for l in range(m + 1))
    odd = [b for b in partition.blocks if b.n % 2 == 1]
    next_lead = None
    if odd:
        sums = [sum(float(t[j]) for j in range(b.a, b.b + 1, 2)) for b in odd]
        bracket = sum(
            (flank_cot(t, k0, b.a - 1) + flank_cot(t, k0, b.b + 1)) / s for b, s in zip(odd, sums)
        )
        next_lead = (
            sign * sin_prod * math.prod(sums) * 2 ** (m + 1) * (-2j) ** (2 * N - 2 * m - 3) * bracket
        )
    return LeadingConstants(C1, C2, CI, lead, next_lead, n, m, N)


def delta_type_shift(const: LeadingConstants) -> complex | None:
    """First-order ``nu`` coefficient of the delta-type branches when ``n - 2m = 1``.

    Balancing ``g_m z^{n-2m}`` against ``g_{m+1} z^{n-2m-1} nu`` gives
    ``z ~ -(next_lead / lead[m]) nu``.  With several delta-type branches the
    coefficients solve a polynomial instead, so None is returned.
    """
    if const.next_lead is None or const.n - 2 * const.m != 1:
        return None
    return -const.next_lead / const.lead[const.m]
