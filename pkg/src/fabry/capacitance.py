"""Frequency-dependent capacitance matrix, its blocks and their spectra."""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from typing import Sequence

import numpy as np

from fabry.chain import (
    Block,
    BlockPartition,
    Number,
    StructuralVector,
    Wavenumber,
    resonant_index_set,
)
from fabry.tridiag import eigh_tridiagonal

ZERO_REL_TOL = 1e-12


@dataclass(frozen=True)
class CouplingCoefficients:
    theta: tuple[Number, ...]
    theta_k: tuple[Number, ...]


def coupling_coefficients(t: StructuralVector, partition: BlockPartition) -> CouplingCoefficients:
    """``theta_j = 1/(t_j t_{j+1})`` and the masked ``theta_j(k0)``."""
    resonant = set(partition.I)
    zero = Fraction(0) if t.exact else 0.0
    theta = []
    theta_k = []
    for j in range(1, len(t)):
        th = 1 / (t[j] * t[j + 1])
        theta.append(th)
        theta_k.append(th if (j in resonant and j + 1 in resonant) else zero)
    return CouplingCoefficients(tuple(theta), tuple(theta_k))


def capacitance_matrix(theta_k: Sequence[Number], N: int) -> list[list[Number]]:
    """The N x N tridiagonal matrix built row by row from masked couplings."""
    zero = theta_k[0] * 0 if theta_k else 0
    C = [[zero] * N for _ in range(N)]
    if N == 1:
        return C
    # theta is 1-based in the formulas; row i (1-based) uses theta_{2i-2}, theta_{2i-1}.
    th = lambda j: theta_k[j - 1]  # noqa: E731
    C[0][0] = th(1)
    C[0][1] = -th(1)
    for i in range(2, N):
        C[i - 1][i - 2] = -th(2 * i - 2)
        C[i - 1][i - 1] = th(2 * i - 2) + th(2 * i - 1)
        C[i - 1][i] = -th(2 * i - 1)
    C[N - 1][N - 2] = -th(2 * N - 2)
    C[N - 1][N - 1] = th(2 * N - 2)
    return C


def symmetrize(C: np.ndarray) -> np.ndarray:
    """Same diagonal, off-diagonal pair replaced by ``-sqrt(c_{i,i+1} c_{i+1,i})``."""
    n = C.shape[0]
    out = np.diag(np.diag(C)).astype(float)
    for i in range(n - 1):
        prod = C[i, i + 1] * C[i + 1, i]
        if prod < 0:
            raise ValueError("off-diagonal products must be non-negative")
        out[i, i + 1] = out[i + 1, i] = -math.sqrt(prod)
    return out


@dataclass(frozen=True)
class BlockSystem:
    """Factorisation ``C_j = L^-1 A^T S^-1 A`` of one block and ``D_j = S^-1 A L^-1 A^T``."""

    block: Block
    theta: tuple[Number, ...]
    A: np.ndarray
    S_diag: tuple[Number, ...]
    L_diag: tuple[Number, ...]
    C: np.ndarray
    D: np.ndarray
    C_sub: np.ndarray

    @property
    def parity(self) -> tuple[int, int]:
        return (self.block.xi, self.block.eta)

    def symmetric_form(self) -> tuple[np.ndarray, np.ndarray]:
        """Diagonal and off-diagonal of ``L^{1/2} C L^{-1/2}``."""
        Ls = np.sqrt(np.array([float(x) for x in self.L_diag]))
        K = (self.C * Ls[:, None]) / Ls[None, :]
        K = 0.5 * (K + K.T)
        return np.diag(K).copy(), np.diag(K, 1).copy()


def incidence_matrix(block: Block) -> np.ndarray:
    s, l, xi = block.s, block.l, block.xi
    A = np.zeros((s, l))
    for i in range(1, s + 1):
        for col, val in ((i - 1 + xi, -1.0), (i + xi, 1.0)):
            if 1 <= col <= l:
                A[i - 1, col - 1] = val
    return A


def build_block(t: StructuralVector, block: Block, C_full: np.ndarray | None = None) -> BlockSystem:
    A = incidence_matrix(block)
    S_diag = tuple(t[j] for j in block.even_indices)
    L_diag = tuple(t[j] for j in block.odd_indices)
    S_inv = np.diag([1.0 / float(x) for x in S_diag]) if S_diag else np.zeros((0, 0))
    L_inv = np.diag([1.0 / float(x) for x in L_diag]) if L_diag else np.zeros((0, 0))
    if block.l and block.s:
        C = L_inv @ A.T @ S_inv @ A
        D = S_inv @ A @ L_inv @ A.T
    else:
        C = np.zeros((block.l, block.l))
        D = np.zeros((block.s, block.s))
    theta = tuple(1 / (t[j] * t[j + 1]) for j in range(block.a, block.b))
    if C_full is not None and block.l:
        C_sub = C_full[block.sta - 1 : block.end, block.sta - 1 : block.end]
    else:
        C_sub = C.copy()
    return BlockSystem(block, theta, A, S_diag, L_diag, C, D, C_sub)


@dataclass(frozen=True)
class CapacitanceSystem:
    t: StructuralVector
    k0: Wavenumber
    partition: BlockPartition
    coupling: CouplingCoefficients
    C_exact: tuple[tuple[Number, ...], ...]
    C: np.ndarray
    Csym: np.ndarray
    blocks: tuple[BlockSystem, ...]

    @property
    def N(self) -> int:
        return self.t.N


def build_capacitance(
    t: StructuralVector, k0: Wavenumber, partition: BlockPartition | None = None
) -> CapacitanceSystem:
    if partition is None:
        partition = resonant_index_set(t, k0)
    coupling = coupling_coefficients(t, partition)
    N = t.N
    if N == 1:
        C_exact = [[Fraction(0) if t.exact else 0.0]]
    else:
        C_exact = capacitance_matrix(coupling.theta_k, N)
    C = np.array([[float(x) for x in row] for row in C_exact], dtype=float)
    Csym = symmetrize(C)
    blocks = tuple(build_block(t, b, C) for b in partition.blocks)
    return CapacitanceSystem(
        t=t,
        k0=k0,
        partition=partition,
        coupling=coupling,
        C_exact=tuple(tuple(row) for row in C_exact),
        C=C,
        Csym=Csym,
        blocks=blocks,
    )


@dataclass(frozen=True)
class BlockEigen:
    """Eigenpairs of one block.

    ``alpha[:, i]`` is normalised so that ``alpha^T L alpha = 1`` with its
    first nonzero entry positive.  ``beta[:, i]`` is the matching eigenvector
    of ``D_j`` (``beta = S^-1 A alpha / sqrt(lambda)``), empty for zero
    eigenvalues.
    """

    system: BlockSystem
    eigenvalues: np.ndarray
    alpha: np.ndarray
    beta: np.ndarray
    is_zero: np.ndarray

    @property
    def nonzero(self) -> np.ndarray:
        return self.eigenvalues[~self.is_zero]


@dataclass(frozen=True)
class BlockSpectrum:
    blocks: tuple[BlockEigen, ...]

    @property
    def nonzero_eigenvalues(self) -> np.ndarray:
        vals = [be.nonzero for be in self.blocks]
        if not vals:
            return np.zeros(0)
        return np.sort(np.concatenate(vals))

    @property
    def m(self) -> int:
        return int(sum(int((~be.is_zero).sum()) for be in self.blocks))

    def occurrences(self):
        """Yield ``(block_index, eigen_index, lambda)`` for every nonzero eigenvalue."""
        for bi, be in enumerate(self.blocks):
            for i, lam in enumerate(be.eigenvalues):
                if not be.is_zero[i]:
                    yield bi, i, float(lam)

    def multiplicity(self, lam: float, rtol: float = 1e-9) -> int:
        vals = self.nonzero_eigenvalues
        return int(np.sum(np.abs(vals - lam) <= rtol * max(1.0, abs(lam))))


def _canonical_sign(v: np.ndarray) -> np.ndarray:
    tol = 1e-12 * max(1.0, float(np.abs(v).max()))
    for x in v:
        if abs(x) > tol:
            return v if x > 0 else -v
    return v


def block_eigen(bs: BlockSystem) -> BlockEigen:
    l = bs.block.l
    if l == 0:
        empty = np.zeros(0)
        return BlockEigen(bs, empty, np.zeros((0, 0)), np.zeros((bs.block.s, 0)), np.zeros(0, bool))
    diag, off = bs.symmetric_form()
    lam, X = eigh_tridiagonal(diag, off)
    Ls = np.sqrt(np.array([float(x) for x in bs.L_diag]))
    alpha = X / Ls[:, None]
    scale = max(1.0, float(np.abs(lam).max()))
    is_zero = np.abs(lam) <= ZERO_REL_TOL * scale
    lam = np.where(is_zero, 0.0, lam)
    S = np.array([float(x) for x in bs.S_diag])
    beta = np.zeros((bs.block.s, l))
    for i in range(l):
        a = alpha[:, i]
        a = a / math.sqrt(float(a @ (Ls**2 * a)))
        a = _canonical_sign(a)
        alpha[:, i] = a
        if not is_zero[i] and bs.block.s:
            beta[:, i] = (bs.A @ a) / S / math.sqrt(lam[i])
    return BlockEigen(bs, lam, alpha, beta, is_zero)


def block_spectrum(sys: CapacitanceSystem) -> BlockSpectrum:
    return BlockSpectrum(tuple(block_eigen(bs) for bs in sys.blocks))


# --- characteristic polynomials -------------------------------------------


@dataclass(frozen=True)
class CharPoly:
    """``P(lam) = sum_q c_q (-lam)^(deg - q)`` with ``c_0 = 1``."""

    coeffs: tuple[Number, ...]

    @property
    def degree(self) -> int:
        return len(self.coeffs) - 1

    def __call__(self, lam):
        # Horner in x = -lam over descending powers.
        x = -lam
        acc = 0
        for c in self.coeffs:
            acc = acc * x + c
        return acc

    def derivative(self, lam):
        deg = self.degree
        x = -lam
        acc = 0
        for q, c in enumerate(self.coeffs[:-1]):
            acc = acc * x + c * (deg - q)
        return -acc

    def power_coeffs(self) -> np.ndarray:
        """Coefficients in ``lam`` (highest power first), floats."""
        deg = self.degree
        return np.array([float(c) * (-1) ** (deg - q) for q, c in enumerate(self.coeffs)])

    def roots(self) -> np.ndarray:
        if self.degree == 0:
            return np.zeros(0)
        return np.sort(np.roots(self.power_coeffs()).real)

    def __mul__(self, other: CharPoly) -> CharPoly:
        out = [0] * (self.degree + other.degree + 1)
        for i, a in enumerate(self.coeffs):
            for j, b in enumerate(other.coeffs):
                out[i + j] = out[i + j] + a * b
        return CharPoly(tuple(out))


def independent_set_sums(theta: Sequence[Number], qmax: int | None = None) -> list[Number]:
    """``c_q = sum over q pairwise non-adjacent indices of prod theta``.

    Path-graph DP: ``E[i][q]`` covers ``theta[:i]``.
    """
    n = len(theta)
    one = theta[0] * 0 + 1 if n else 1
    if qmax is None:
        qmax = (n + 1) // 2
    prev2 = [one] + [0] * qmax  # theta[:i-1]
    prev1 = [one] + [0] * qmax  # theta[:i]
    for i in range(n):
        cur = list(prev1)
        for q in range(1, qmax + 1):
            cur[q] = prev1[q] + theta[i] * prev2[q - 1]
        prev2, prev1 = prev1, cur
    return prev1


def char_poly_from_theta(theta: Sequence[Number], n_indices: int) -> CharPoly:
    deg = n_indices // 2
    coeffs = independent_set_sums(theta, deg)[: deg + 1]
    return CharPoly(tuple(coeffs))


def char_poly(bs: BlockSystem) -> CharPoly:
    return char_poly_from_theta(bs.theta, bs.block.n)


def trimmed_char_polys(bs: BlockSystem) -> tuple[CharPoly, CharPoly]:
    """Polynomials of the blocks with the first (resp. last) index removed."""
    n = bs.block.n
    return (
        char_poly_from_theta(bs.theta[1:], n - 1),
        char_poly_from_theta(bs.theta[:-1], n - 1),
    )


def global_char_poly(polys: Sequence[CharPoly]) -> CharPoly:
    out = CharPoly((1,))
    for p in polys:
        out = out * p
    return out


def global_coefficients_direct(t: StructuralVector, I: Sequence[int], qmax: int) -> list[Number]:
    """``C_{I,q}`` straight from its definition over admissible ``j``.

    Admissible indices have ``{j, j+1}`` inside ``I``; a selection must be
    pairwise non-adjacent.  Brute-force DP over the admissible set.
    """
    resonant = set(I)
    admissible = [j for j in sorted(resonant) if j + 1 in resonant]
    one = Fraction(1) if t.exact else 1.0
    sums = [one] + [0] * qmax

    @lru_cache(maxsize=None)
    def rec(pos: int, q: int, last: int):
        if q == 0:
            return one
        total = 0
        for nxt in range(pos, len(admissible)):
            j = admissible[nxt]
            if j - last >= 2:
                total = total + (1 / (t[j] * t[j + 1])) * rec(nxt + 1, q - 1, j)
        return total

    for q in range(1, qmax + 1):
        sums[q] = rec(0, q, -10)
    return sums


# --- eigenvector identities ---------------------------------------------------


@dataclass(frozen=True)
class EigenRatio:
    first_lhs: float
    first_rhs: float
    last_lhs: float
    last_rhs: float

    @property
    def residual(self) -> float:
        return max(
            abs(self.first_lhs - self.first_rhs) / max(1.0, abs(self.first_lhs)),
            abs(self.last_lhs - self.last_rhs) / max(1.0, abs(self.last_lhs)),
        )


def eigen_ratio(bs: BlockSystem, lam: float, alpha: np.ndarray | None = None) -> EigenRatio:
    """Both sides of the trimmed-polynomial / eigenvector-ratio identity."""
    if abs(lam) <= ZERO_REL_TOL:
        raise ValueError("eigen_ratio needs a nonzero eigenvalue")
    be = block_eigen(bs)
    idx = int(np.argmin(np.abs(be.eigenvalues - lam)))
    if abs(be.eigenvalues[idx] - lam) > 1e-8 * max(1.0, abs(lam)):
        raise ValueError(f"{lam} is not an eigenvalue of the block")
    gaps = np.abs(be.eigenvalues - lam)
    if np.sum(gaps <= 1e-10 * max(1.0, abs(lam))) > 1:
        raise ValueError("eigenvalue is not simple")
    if alpha is None:
        alpha = be.alpha[:, idx]
    alpha = np.asarray(alpha, dtype=float)
    P = char_poly(bs)
    P1, P2 = trimmed_char_polys(bs)
    dP = float(P.derivative(lam))
    xi, eta = bs.parity
    Lw = np.array([float(x) for x in bs.L_diag])
    aLa = float(alpha @ (Lw * alpha))
    t_a = _t_at(bs, bs.block.a)
    t_b = _t_at(bs, bs.block.b)
    sign = (-1) ** (xi + eta)
    rhs1 = sign * t_a ** (2 * xi - 1) * lam ** (eta * (2 * xi - 1)) * alpha[0] ** 2 / aLa
    rhs2 = sign * t_b ** (2 * eta - 1) * lam ** (xi * (2 * eta - 1)) * alpha[-1] ** 2 / aLa
    return EigenRatio(float(P1(lam)) / dP, rhs1, float(P2(lam)) / dP, rhs2)


def _t_at(bs: BlockSystem, j: int) -> float:
    if j % 2 == 1:
        return float(bs.L_diag[bs.block.odd_indices.index(j)])
    return float(bs.S_diag[bs.block.even_indices.index(j)])


def recurrence_vector(bs: BlockSystem, lam: float) -> np.ndarray:
    """Vector satisfying the first ``l-1`` rows of ``C alpha = lam alpha``."""
    C = bs.C
    l = C.shape[0]
    alpha = np.zeros(l)
    alpha[0] = 1.0
    for i in range(l - 1):
        acc = (C[i, i] - lam) * alpha[i]
        if i > 0:
            acc += C[i, i - 1] * alpha[i - 1]
        alpha[i + 1] = -acc / C[i, i + 1]
    return alpha


@dataclass(frozen=True)
class CoupledCheck:
    residual_1: np.ndarray
    residual_2: np.ndarray
    exceptional: tuple[int, int]
    tol: float

    def _scaled(self, r: np.ndarray) -> np.ndarray:
        return np.abs(r)

    @property
    def others_hold(self) -> bool:
        sysno, row = self.exceptional
        ok = True
        for k, r in ((1, self.residual_1), (2, self.residual_2)):
            for i, val in enumerate(r):
                if (k, i) == (sysno, row):
                    continue
                ok &= abs(val) <= self.tol
        return bool(ok)

    @property
    def exceptional_holds(self) -> bool:
        sysno, row = self.exceptional
        r = self.residual_1 if sysno == 1 else self.residual_2
        return bool(abs(r[row]) <= self.tol)

    @property
    def all_hold(self) -> bool:
        return self.others_hold and self.exceptional_holds


def coupled_system_check(
    bs: BlockSystem,
    lam: float,
    alpha: np.ndarray,
    beta: np.ndarray | None = None,
    mu1: float | None = None,
    mu2: float | None = None,
    *,
    exceptional: tuple[int, int] | None = None,
    tol: float = 1e-10,
) -> CoupledCheck:
    """Row residuals of ``A alpha = mu1 S beta`` and ``A^T beta = mu2 L alpha``.

    ``exceptional`` is ``(system, row)`` with 0-based row; defaults to the
    last row of the second system.
    """
    if lam <= 0:
        raise ValueError("coupled systems need lambda > 0")
    if mu1 is None and mu2 is None:
        mu1 = mu2 = math.sqrt(lam)
    elif mu1 is None:
        mu1 = lam / mu2
    elif mu2 is None:
        mu2 = lam / mu1
    if not math.isclose(mu1 * mu2, lam, rel_tol=1e-12):
        raise ValueError("mu1 * mu2 must equal lambda")
    alpha = np.asarray(alpha, dtype=float)
    if alpha.shape != (bs.block.l,):
        raise ValueError(f"alpha must have length {bs.block.l}")
    S = np.array([float(x) for x in bs.S_diag])
    L = np.array([float(x) for x in bs.L_diag])
    if beta is None:
        beta = (bs.A @ alpha) / S / mu1
    beta = np.asarray(beta, dtype=float)
    if beta.shape != (bs.block.s,):
        raise ValueError(f"beta must have length {bs.block.s}")
    r1 = bs.A @ alpha - mu1 * S * beta
    r2 = bs.A.T @ beta - mu2 * L * alpha
    if exceptional is None:
        exceptional = (2, bs.block.l - 1)
    scale = max(1.0, float(np.abs(alpha).max()), float(np.abs(beta).max()) if beta.size else 0.0)
    return CoupledCheck(r1, r2, exceptional, tol * scale)


def dense_nonzero_spectrum(C: np.ndarray) -> np.ndarray:
    """Oracle: nonzero eigenvalues of the full matrix by a general dense solver."""
    if C.size == 0:
        return np.zeros(0)
    vals = np.linalg.eigvals(C)
    scale = max(1.0, float(np.abs(vals).max()))
    vals = vals[np.abs(vals) > 1e-9 * scale]
    return np.sort(vals.real)
