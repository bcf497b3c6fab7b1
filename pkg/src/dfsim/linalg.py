"""Dense complex-matrix substrate: Kronecker products, matrix exponentials,
and density-matrix (un)vectorization.

All operators in the package are plain ``numpy.ndarray`` of ``complex128``.
Vectorization uses the column-stacking convention, so that

    vec(U rho U^dag) = (conj(U) kron U) @ vec(rho)

holds exactly.
"""

from __future__ import annotations

import numpy as np
import scipy.linalg

__all__ = [
    "kron",
    "expm",
    "vectorize",
    "unvectorize",
    "dagger",
    "is_hermitian",
    "is_unitary",
]


def _as_matrix(a) -> np.ndarray:
    a = np.asarray(a, dtype=complex)
    if a.ndim != 2:
        raise ValueError(f"expected a 2-d matrix, got shape {a.shape}")
    return a


def kron(a, b) -> np.ndarray:
    """Kronecker product, (ra*rb) x (ca*cb)."""
    return np.kron(_as_matrix(a), _as_matrix(b))


def expm(a, hermitian: bool = False) -> np.ndarray:
    """Matrix exponential of a square complex matrix.

    Delegates to scipy's scaling-and-squaring Pade implementation, which
    accepts non-Hermitian input (needed for non-Hermitian decay terms).
    ``hermitian=True`` selects an eigendecomposition fast path; the caller
    is responsible for the flag being truthful.
    """
    a = _as_matrix(a)
    if a.shape[0] != a.shape[1]:
        raise ValueError(f"expm requires a square matrix, got {a.shape}")
    if hermitian:
        w, v = np.linalg.eigh(a)
        return (v * np.exp(w)) @ dagger(v)
    return scipy.linalg.expm(a)


def vectorize(rho) -> np.ndarray:
    """Column-stack a square matrix into a length-N^2 vector."""
    rho = _as_matrix(rho)
    if rho.shape[0] != rho.shape[1]:
        raise ValueError(f"vectorize requires a square matrix, got {rho.shape}")
    return rho.reshape(-1, order="F")

def unvectorize(v) -> np.ndarray:
    """Inverse of :func:`vectorize`; v must have length N^2."""
    v = np.asarray(v, dtype=complex).reshape(-1)
    n = round(np.sqrt(v.size))
    if n * n != v.size:
        raise ValueError(f"vector length {v.size} is not a perfect square")
    return v.reshape((n, n), order="F")


def dagger(a) -> np.ndarray:
    return _as_matrix(a).conj().T


def is_hermitian(a, tol: float = 1e-12) -> bool:
    a = _as_matrix(a)
    return a.shape[0] == a.shape[1] and np.abs(a - dagger(a)).max() <= tol


def is_unitary(a, tol: float = 1e-10) -> bool:
    a = _as_matrix(a)
    if a.shape[0] != a.shape[1]:
        return False
    return np.abs(dagger(a) @ a - np.eye(a.shape[0])).max() <= tol
