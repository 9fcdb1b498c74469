"""Symmetric tridiagonal eigenproblems.

Eigenvalues come from the implicitly shifted QL iteration (the classic
``tqli`` scheme); eigenvectors from inverse iteration on the shifted
tridiagonal system.  Blocks here are tiny, so clarity wins over speed.
"""

from __future__ import annotations

import math

import numpy as np

MAX_SWEEPS = 60


def ql_implicit(diag, offdiag) -> np.ndarray:
    """Eigenvalues of the symmetric tridiagonal matrix, ascending.

    ``diag`` has length n, ``offdiag`` length n-1 (sub/super diagonal).
    """
    d = np.array(diag, dtype=float)
    n = d.size
    if n == 0:
        return d
    e = np.zeros(n)
    e[: n - 1] = np.asarray(offdiag, dtype=float)
    for l in range(n):
        it = 0
        while True:
            m = l
            while m < n - 1:
                dd = abs(d[m]) + abs(d[m + 1])
                if abs(e[m]) <= np.finfo(float).eps * dd:
                    break
                m += 1
            if m == l:
                break
            it += 1
            if it > MAX_SWEEPS:
                raise RuntimeError("QL iteration did not converge")
            g = (d[l + 1] - d[l]) / (2.0 * e[l])
            r = math.hypot(g, 1.0)
            g = d[m] - d[l] + e[l] / (g + math.copysign(r, g))
            s = c = 1.0
            p = 0.0
            i = m - 1
            underflow = False
            while i >= l:
                f = s * e[i]
                b = c * e[i]
                r = math.hypot(f, g)
                e[i + 1] = r
                if r == 0.0:
                    d[i + 1] -= p
                    e[m] = 0.0
                    underflow = True
                    break
                s = f / r
                c = g / r
                g = d[i + 1] - p
                r = (d[i] - g) * s + 2.0 * c * b
                p = s * r
                d[i + 1] = g + p
                g = c * r - b
                i -= 1
            if underflow:
                continue
            d[l] -= p
            e[l] = g
            e[m] = 0.0
    return np.sort(d)


def _solve_tridiagonal(diag: np.ndarray, off: np.ndarray, rhs: np.ndarray) -> np.ndarray:
    """Gaussian elimination with partial pivoting for a symmetric tridiagonal system."""
    n = diag.size
    if n == 1:
        piv = diag[0] if diag[0] != 0 else np.finfo(float).tiny
        return rhs / piv
    # Dense banded LU keeps pivoting simple; n is small.
    a = np.diag(diag) + np.diag(off, 1) + np.diag(off, -1)
    b = rhs.astype(float).copy()
    for k in range(n - 1):
        p = k + int(np.argmax(np.abs(a[k : min(k + 2, n), k])))
        if p != k:
            a[[k, p]] = a[[p, k]]
            b[[k, p]] = b[[p, k]]
        if a[k, k] == 0.0:
            a[k, k] = np.finfo(float).eps * max(1.0, np.abs(a).max())
        for i in range(k + 1, min(k + 2, n)):
            f = a[i, k] / a[k, k]
            a[i, k:] -= f * a[k, k:]
            b[i] -= f * b[k]
    if a[n - 1, n - 1] == 0.0:
        a[n - 1, n - 1] = np.finfo(float).eps * max(1.0, np.abs(a).max())
    x = np.zeros(n)
    for i in range(n - 1, -1, -1):
        x[i] = (b[i] - a[i, i + 1 :] @ x[i + 1 :]) / a[i, i]
    return x


def inverse_iteration(diag, offdiag, lam: float, iters: int = 4) -> np.ndarray:
    """Unit eigenvector for the (simple) eigenvalue ``lam``."""
    d = np.asarray(diag, dtype=float)
    off = np.asarray(offdiag, dtype=float)
    n = d.size
    if n == 1:
        return np.ones(1)
    scale = max(1.0, float(np.abs(d).max()), float(np.abs(off).max()) if off.size else 0.0)
    shift = lam + 4 * np.finfo(float).eps * scale
    x = np.ones(n) / math.sqrt(n)
    # Deterministic but non-symmetric start avoids accidental orthogonality.
    x += np.linspace(0.0, 0.5, n)
    x /= np.linalg.norm(x)
    for _ in range(iters):
        y = _solve_tridiagonal(d - shift, off, x)
        x = y / np.linalg.norm(y)
    return x


def eigh_tridiagonal(diag, offdiag) -> tuple[np.ndarray, np.ndarray]:
    """Eigenvalues (ascending) and unit eigenvectors as columns."""
    lam = ql_implicit(diag, offdiag)
    vecs = np.zeros((lam.size, lam.size))
    for i, value in enumerate(lam):
        vecs[:, i] = inverse_iteration(diag, offdiag, value)
    return lam, vecs
