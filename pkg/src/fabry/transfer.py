"""Transfer-matrix products and their polynomial expansion in the contrast.

Two precisions are available.  ``double`` uses numpy complex128; ``dd``
(selected with ``FABRY_PRECISION=dd`` or ``precision="dd"``) runs the same
products in mpmath at about 32 significant digits, which is what the
near-cancelling coefficient checks close to a resonant wavenumber need.
"""

from __future__ import annotations

import cmath
import math
import os
from dataclasses import dataclass
from fractions import Fraction
from typing import Any, Callable, Sequence

import mpmath
import numpy as np

from fabry.chain import StructuralVector, Wavenumber

DD_DIGITS = 32

RBAR = np.array([[-1, 1], [-1, 1]], dtype=complex)
S_MAT = np.array([[0, -1], [1, 0]], dtype=complex)
R_PLUS = np.array([[1, 1], [1, 1]], dtype=complex)
R_MINUS = np.array([[1, -1], [-1, 1]], dtype=complex)
PBAR = np.diag([-1.0 + 0j, 1.0 + 0j])


def precision_mode(precision: str | None = None) -> str:
    mode = precision or os.environ.get("FABRY_PRECISION", "double")
    mode = mode.strip().lower()
    if mode not in ("double", "dd"):
        raise ValueError(f"unknown precision {mode!r}; expected 'double' or 'dd'")
    return mode


def R(z: complex) -> np.ndarray:
    return 0.5 * np.array([[1 + z, 1 - z], [1 - z, 1 + z]], dtype=complex)


def L(z: complex) -> np.ndarray:
    return np.diag([cmath.exp(1j * z), cmath.exp(-1j * z)])


def nu_from_sigma(sigma: complex) -> complex:
    return 2 * sigma / (1 + sigma)


def _segments(t: StructuralVector | Sequence[Any]) -> list[float]:
    return [float(x) for x in t]


def total_transfer(t: StructuralVector | Sequence[Any], k: complex, sigma: complex) -> np.ndarray:
    """``M_tot(k; sigma)`` including the ``(4 sigma)^N / (1+sigma)^{2N}`` prefactor."""
    if sigma == 0 or sigma == -1:
        raise ValueError("total_transfer is undefined for sigma in {0, -1}")
    ts = _segments(t)
    N = (len(ts) + 1) // 2
    M = R(sigma)
    for j, tj in enumerate(ts, start=1):
        M = L(tj * k) @ M
        M = (R(1 / sigma) if j % 2 == 1 else R(sigma)) @ M
    return (4 * sigma) ** N / (1 + sigma) ** (2 * N) * M


def f_function(t, k: complex, sigma: complex) -> complex:
    return complex(total_transfer(t, k, sigma)[1, 1])


def g_matrix(t, k: complex, nu: complex) -> np.ndarray:
    """``G(k; nu) = (Rbar + nu S) L_{2N-1} ... L_1 (Rbar + nu S)``."""
    X = RBAR + nu * S_MAT
    G = X.copy()
    for tj in _segments(t):
        G = X @ (L(tj * k) @ G)
    return G


# --- g and dg/dk -------------------------------------------------------------


def _mp_number(x: Any):
    if isinstance(x, Fraction):
        return mpmath.mpf(x.numerator) / x.denominator
    if isinstance(x, complex):
        return mpmath.mpc(x)
    return mpmath.mpmathify(x)


def _g_row_sweep(ts, k, nu, exp: Callable, with_derivative: bool):
    """Row vector ``e2^T G`` accumulated right-to-left, with its k-derivative.

    Works for Python complex and mpmath numbers alike.
    """
    # X = Rbar + nu S = [[-1, 1 - nu], [-1 + nu, 1]]
    x11, x12, x21, x22 = -1, 1 - nu, -1 + nu, 1
    w1, w2 = x21, x22
    d1 = d2 = 0
    for tj in reversed(ts):
        e = exp(1j * tj * k)
        einv = 1 / e
        if with_derivative:
            d1, d2 = d1 * e + w1 * 1j * tj * e, d2 * einv - w2 * 1j * tj * einv
        w1, w2 = w1 * e, w2 * einv
        w1, w2 = w1 * x11 + w2 * x21, w1 * x12 + w2 * x22
        if with_derivative:
            d1, d2 = d1 * x11 + d2 * x21, d1 * x12 + d2 * x22
    return w2, d2


def g_function(
    t, k, nu, *, derivative: bool = True, precision: str | None = None
) -> tuple[complex, complex]:
    """``g(k; nu) = G_{22}`` and ``dg/dk``.

    ``dL(tk)/dk = i t L(tk) diag(1, -1)`` is accumulated by the product
    rule alongside the value.
    """
    mode = precision_mode(precision)
    if mode == "dd":
        with mpmath.workdps(DD_DIGITS):
            ts = [_mp_number(x) for x in t]
            g, dg = _g_row_sweep(ts, _mp_number(k), _mp_number(nu), mpmath.exp, derivative)
            return complex(g), complex(dg)
    ts = _segments(t)
    g, dg = _g_row_sweep(ts, complex(k), complex(nu), cmath.exp, derivative)
    return complex(g), complex(dg)


def g_value(t, k, nu, *, precision: str | None = None) -> complex:
    return g_function(t, k, nu, derivative=False, precision=precision)[0]


def g_at_sigma_zero(t, k: complex) -> complex:
    """Closed form ``g(k; 0) = -(2i)^{2N-1} prod sin(t_j k)``."""
    ts = _segments(t)
    out = -((2j) ** len(ts))
    for tj in ts:
        out *= cmath.sin(tj * k)
    return out


# --- nu-polynomial -----------------------------------------------------------


@dataclass(frozen=True)
class NuPolynomial:
    """Matrix coefficients ``G_l`` with ``G(k; nu) = sum_l G_l nu^l``."""

    coeffs: np.ndarray  # shape (2N+1, 2, 2)

    @property
    def degree(self) -> int:
        return self.coeffs.shape[0] - 1

    @property
    def g(self) -> np.ndarray:
        return self.coeffs[:, 1, 1]

    def evaluate(self, nu):
        acc = np.zeros((2, 2), dtype=self.coeffs.dtype)
        for G in self.coeffs[::-1]:
            acc = acc * nu + G
        return acc


def nu_poly_coefficients(t, k, *, precision: str | None = None) -> NuPolynomial:
    """Coefficients of ``G(k; nu)`` by sequential convolution.

    Left-multiplying by ``L_j`` scales every coefficient; by ``Rbar + nu S``
    shifts and adds.  In ``dd`` mode the coefficients are computed in mpmath
    and returned as complex128 after rounding.
    """
    mode = precision_mode(precision)
    ts = list(t)
    n_seg = len(ts)
    deg = n_seg + 1
    if mode == "dd":
        with mpmath.workdps(DD_DIGITS):
            kk = _mp_number(k)
            rbar = mpmath.matrix([[-1, 1], [-1, 1]])
            smat = mpmath.matrix([[0, -1], [1, 0]])
            coeffs = [rbar.copy(), smat.copy()]
            for tj in ts:
                arg = 1j * _mp_number(tj) * kk
                e, einv = mpmath.exp(arg), mpmath.exp(-arg)
                for G in coeffs:
                    for c in range(2):
                        G[0, c] *= e
                        G[1, c] *= einv
                new = [rbar * coeffs[0]]
                for lvl in range(1, len(coeffs)):
                    new.append(rbar * coeffs[lvl] + smat * coeffs[lvl - 1])
                new.append(smat * coeffs[-1])
                coeffs = new
            out = np.array(
                [[[complex(G[i, j]) for j in range(2)] for i in range(2)] for G in coeffs]
            )
        return NuPolynomial(out)
    coeffs = np.zeros((deg + 1, 2, 2), dtype=complex)
    coeffs[0] = RBAR
    coeffs[1] = S_MAT
    top = 1
    for tj in _segments(ts):
        Lj = L(tj * complex(k))
        coeffs[: top + 1] = Lj @ coeffs[: top + 1]
        new = np.zeros_like(coeffs)
        new[: top + 1] = RBAR @ coeffs[: top + 1]
        new[1 : top + 2] += S_MAT @ coeffs[: top + 1]
        coeffs = new
        top += 1
    return NuPolynomial(coeffs)


def all_S_product(t, k) -> np.ndarray:
    """``S L_{2N-1} S ... L_1 S``: the top coefficient of ``G``."""
    G = S_MAT.copy()
    for tj in _segments(t):
        G = S_MAT @ (L(tj * complex(k)) @ G)
    return G


# --- conjugation identities ------------------------------------------------


def eta(M: np.ndarray) -> complex:
    """``eta(M) = M21 + M22 - M11 - M12`` so that ``Rbar M Rbar = eta(M) Rbar``."""
    return complex(M[1, 0] + M[1, 1] - M[0, 0] - M[0, 1])


def tau0_estimate(h: Callable[[float], complex], zs: Sequence[float] | None = None) -> float:
    """Leading exponent of ``h`` at 0 from a log-log least-squares slope."""
    if zs is None:
        zs = np.geomspace(1e-2, 1e-5, 7)
    zs = np.asarray(zs, dtype=float)
    vals = np.array([abs(h(z)) for z in zs])
    keep = vals > 0
    if not keep.any():
        return math.inf
    if keep.sum() < 2:
        raise ValueError("need at least two nonzero samples to estimate an order")
    slope, _ = np.polyfit(np.log(zs[keep]), np.log(vals[keep]), 1)
    return float(slope)


def k_near(k0: Wavenumber, z: complex, *, precision: str | None = None):
    """``k0 + z`` with ``k0 = q pi`` formed in the working precision."""
    if precision_mode(precision) == "dd":
        with mpmath.workdps(DD_DIGITS):
            return _mp_number(k0.q) * mpmath.pi + _mp_number(z)
    return k0.value + z
