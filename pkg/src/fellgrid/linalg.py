"""
Dense complex matrix kernels
~~~~~~~~~~~~~~~~~~~~~~~~~~~~
Spectral norm, Hermitian eigendecomposition, Loewner order and functional
calculus on complex double-precision matrices.

Matrices are plain 2-D ``numpy.ndarray`` objects of dtype ``complex128``.
The eigensolver is a cyclic Jacobi iteration compiled with numba; it is
deterministic and needs no randomness.  ``backend="lapack"`` switches any
entry point to ``numpy.linalg.eigh`` for cross-checking.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numba
import numpy as np

__all__ = [
    "LinalgError",
    "NotHermitian",
    "NotPositive",
    "ShapeMismatch",
    "Tolerance",
    "DEFAULT_TOL",
    "JACOBI_OFFDIAG_RTOL",
    "JACOBI_MAX_SWEEPS",
    "ZERO_CUTOFF",
    "as_cmatrix",
    "is_hermitian",
    "hermitian_eig",
    "max_eigenvalue",
    "operator_norm",
    "operator_norms",
    "loewner_leq",
    "psd_power",
    "polar_factor",
]

JACOBI_OFFDIAG_RTOL = 1e-14
JACOBI_MAX_SWEEPS = 60
ZERO_CUTOFF = 1e-10
HERMITIAN_RTOL = 1e-10


class LinalgError(ValueError):
    pass


class NotHermitian(LinalgError):
    pass


class NotPositive(LinalgError):
    pass


class ShapeMismatch(LinalgError):
    pass


@dataclass(frozen=True)
class Tolerance:
    """Combined absolute/relative tolerance used for every comparison.

    A quantity ``lhs`` is accepted as ``<= rhs`` when
    ``lhs - rhs <= atol + rtol * max(|lhs|, |rhs|)``.
    """

    atol: float = 1e-9
    rtol: float = 1e-7

    def bound(self, *scales: float) -> float:
        scale = max((abs(float(s)) for s in scales), default=0.0)
        return self.atol + self.rtol * scale

    def leq(self, lhs: float, rhs: float) -> bool:
        return lhs - rhs <= self.bound(lhs, rhs)

    def close(self, a: float, b: float) -> bool:
        return abs(a - b) <= self.bound(a, b)

    def excess(self, lhs: float, rhs: float) -> float:
        """Amount by which ``lhs <= rhs`` is violated beyond tolerance (0 if it holds)."""
        return max(0.0, lhs - rhs - self.bound(lhs, rhs))


DEFAULT_TOL = Tolerance()


def as_cmatrix(m) -> np.ndarray:
    """Coerce ``m`` to a non-empty 2-D complex128 array."""
    arr = np.asarray(m, dtype=np.complex128)
    if arr.ndim == 0:
        arr = arr.reshape(1, 1)
    if arr.ndim != 2 or arr.shape[0] < 1 or arr.shape[1] < 1:
        raise ShapeMismatch(f"expected a non-empty matrix, got shape {arr.shape}")
    return arr


def is_hermitian(m: np.ndarray) -> bool:
    m = np.asarray(m)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        return False
    if m.size == 0:
        return True
    scale = float(np.max(np.abs(m)))
    return float(np.max(np.abs(m - m.conj().T))) <= HERMITIAN_RTOL * (1.0 + scale)


# -- cyclic Jacobi ---------------------------------------------------------


@numba.njit(cache=True, nogil=True)
def _jacobi(a, rtol, max_sweeps):
    n = a.shape[0]
    a = a.copy()
    v = np.eye(n, dtype=np.complex128)
    fro2 = 0.0
    for i in range(n):
        for j in range(n):
            fro2 += a[i, j].real ** 2 + a[i, j].imag ** 2
    target = rtol * math.sqrt(fro2)
    sweeps = 0
    while sweeps < max_sweeps:
        off2 = 0.0
        for i in range(n):
            for j in range(n):
                if i != j:
                    off2 += a[i, j].real ** 2 + a[i, j].imag ** 2
        if math.sqrt(off2) <= target or off2 == 0.0:
            break
        sweeps += 1
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[p, q]
                r = abs(apq)
                if r == 0.0:
                    continue
                ph = apq / r
                cph = ph.conjugate()
                app = a[p, p].real
                aqq = a[q, q].real
                theta = (aqq - app) / (2.0 * r)
                if theta >= 0.0:
                    t = 1.0 / (theta + math.sqrt(theta * theta + 1.0))
                else:
                    t = -1.0 / (-theta + math.sqrt(theta * theta + 1.0))
                c = 1.0 / math.sqrt(1.0 + t * t)
                s = t * c
                # A <- A J with J = diag(1, conj(ph)) . [[c, s], [-s, c]]
                for k in range(n):
                    akp = a[k, p]
                    akq = a[k, q]
                    a[k, p] = c * akp - s * cph * akq
                    a[k, q] = s * akp + c * cph * akq
                # A <- J^H A
                for k in range(n):
                    apk = a[p, k]
                    aqk = a[q, k]
                    a[p, k] = c * apk - s * ph * aqk
                    a[q, k] = s * apk + c * ph * aqk
                a[p, q] = 0.0
                a[q, p] = 0.0
                a[p, p] = app - t * r
                a[q, q] = aqq + t * r
                for k in range(n):
                    vkp = v[k, p]
                    vkq = v[k, q]
                    v[k, p] = c * vkp - s * cph * vkq
                    v[k, q] = s * vkp + c * cph * vkq
    w = np.empty(n)
    for i in range(n):
        w[i] = a[i, i].real
    return w, v, sweeps


@numba.njit(cache=True, nogil=True)
def _max_eig_batch(stack, rtol, max_sweeps):
    out = np.empty(stack.shape[0])
    for k in range(stack.shape[0]):
        w, _, _ = _jacobi(stack[k], rtol, max_sweeps)
        out[k] = w.max()
    return out


def _check_backend(backend: str) -> None:
    if backend not in ("jacobi", "lapack"):
        raise ValueError(f"unknown eigensolver backend {backend!r}")


def hermitian_eig(m, backend: str = "jacobi"):
    """Eigendecomposition of a Hermitian matrix.

    Parameters
    ----------
    m : array_like
        Square Hermitian matrix; ``NotHermitian`` is raised when
        ``max|m - m*| > 1e-10 * (1 + max|m|)``.
    backend : {"jacobi", "lapack"}
        Cyclic Jacobi (default) or ``numpy.linalg.eigh``.

    Returns
    -------
    eigenvalues : ndarray
        Real eigenvalues in descending order.
    eigenvectors : ndarray
        Unitary matrix whose columns are the matching eigenvectors.
    """
    _check_backend(backend)
    m = as_cmatrix(m)
    if not is_hermitian(m):
        raise NotHermitian("matrix is not Hermitian within tolerance")
    h = np.ascontiguousarray(0.5 * (m + m.conj().T))
    if backend == "lapack":
        w, v = np.linalg.eigh(h)
    else:
        w, v, _ = _jacobi(h, JACOBI_OFFDIAG_RTOL, JACOBI_MAX_SWEEPS)
    order = np.argsort(-w, kind="stable")
    return w[order], v[:, order]


def max_eigenvalue(m, backend: str = "jacobi") -> float:
    return float(hermitian_eig(m, backend)[0][0])


def _gram(m: np.ndarray) -> np.ndarray:
    # smaller of m*m and mm*; both share the nonzero spectrum
    if m.shape[0] >= m.shape[1]:
        return m.conj().T @ m
    return m @ m.conj().T


def operator_norm(m, backend: str = "jacobi") -> float:
    """Largest singular value of ``m``."""
    _check_backend(backend)
    m = as_cmatrix(m)
    g = np.ascontiguousarray(_gram(m))
    if backend == "lapack":
        lam = float(np.linalg.eigvalsh(g)[-1])
    else:
        lam = float(_jacobi(g, JACOBI_OFFDIAG_RTOL, JACOBI_MAX_SWEEPS)[0].max())
    return math.sqrt(max(lam, 0.0))


def operator_norms(stack, backend: str = "jacobi") -> np.ndarray:
    """Spectral norms of a stack of equally shaped matrices, shape ``(N, r, c)``."""
    _check_backend(backend)
    stack = np.asarray(stack, dtype=np.complex128)
    if stack.shape[0] == 0:
        return np.zeros(0)
    if stack.shape[1] >= stack.shape[2]:
        g = np.einsum("nki,nkj->nij", stack.conj(), stack)
    else:
        g = np.einsum("nik,njk->nij", stack, stack.conj())
    g = np.ascontiguousarray(g)
    if backend == "lapack":
        lam = np.linalg.eigvalsh(g)[:, -1]
    else:
        lam = _max_eig_batch(g, JACOBI_OFFDIAG_RTOL, JACOBI_MAX_SWEEPS)
    return np.sqrt(np.maximum(lam, 0.0))


def loewner_leq(a, b, tol: float | None = None, backend: str = "jacobi") -> bool:
    """Whether ``a <= b`` in the positive semidefinite order.

    True iff the smallest eigenvalue of ``b - a`` is at least ``-tol``.  The
    default ``tol`` follows :data:`DEFAULT_TOL` scaled by the larger of the
    two spectral norms.
    """
    a = as_cmatrix(a)
    b = as_cmatrix(b)
    if a.shape != b.shape or a.shape[0] != a.shape[1]:
        raise ShapeMismatch(f"cannot compare shapes {a.shape} and {b.shape}")
    if not (is_hermitian(a) and is_hermitian(b)):
        raise NotHermitian("Loewner order needs Hermitian operands")
    if tol is None:
        tol = DEFAULT_TOL.bound(operator_norm(a, backend), operator_norm(b, backend))
    w, _ = hermitian_eig(b - a, backend)
    return bool(w[-1] >= -tol)


def psd_power(m, p: float, tol: float | None = None, backend: str = "jacobi") -> np.ndarray:
    """``m**p`` for positive semidefinite ``m`` by spectral calculus.

    Eigenvalues below ``1e-10 * lambda_max`` are treated as exact zeros and
    mapped to zero, so negative powers act as pseudo-inverse powers on the
    support of ``m``.  ``NotPositive`` is raised when an eigenvalue is below
    ``-tol``.
    """
    m = as_cmatrix(m)
    w, v = hermitian_eig(m, backend)
    lam_max = max(float(w[0]), 0.0)
    if tol is None:
        tol = DEFAULT_TOL.bound(lam_max)
    if w[-1] < -tol:
        raise NotPositive(f"smallest eigenvalue {w[-1]:.3e} is below -{tol:.3e}")
    keep = w > ZERO_CUTOFF * lam_max
    f = np.zeros_like(w)
    f[keep] = w[keep] ** p
    return (v * f) @ v.conj().T


def polar_factor(b, backend: str = "jacobi") -> np.ndarray:
    """The factor ``u = b |b|^{-1/2}`` with ``u |b|^{1/2} = b``.

    Here ``|b| = (b*b)^{1/2}``.  It satisfies ``u*u = |b|`` and
    ``uu* = |b*|``, which is what makes it useful for splitting a fibre element
    symmetrically in Cauchy-Schwarz estimates.
    """
    b = as_cmatrix(b)
    return b @ psd_power(b.conj().T @ b, -0.25, backend=backend)
