"""Dense complex linear algebra for one- and two-qubit operators.

Matrices are plain ``complex128`` numpy arrays. Two-qubit operators use the
ordering |HH>, |HV>, |VH>, |VV>, i.e. qubit A is the most significant index.
"""
from __future__ import annotations

from typing import Literal

import numpy as np

Subsystem = Literal["A", "B"]

HERMITIAN_TOL = 1e-10
PSD_TOL = 1e-10
JACOBI_OFF_TOL = 1e-13
_MAX_SWEEPS = 64


class DimensionError(ValueError):
    """Operand has the wrong shape for the requested operation."""


class ContractViolation(ValueError):
    """Operand violates a numerical precondition (Hermiticity, positivity)."""


def as_cmatrix(a) -> np.ndarray:
    m = np.array(a, dtype=np.complex128)
    if m.ndim != 2:
        raise DimensionError(f"expected a 2-d matrix, got shape {m.shape}")
    if not np.all(np.isfinite(m)):
        raise ContractViolation("matrix contains NaN or Inf entries")
    return m


def kron(a, b) -> np.ndarray:
    return np.kron(as_cmatrix(a), as_cmatrix(b))


def dagger(a) -> np.ndarray:
    return as_cmatrix(a).conj().T


def trace(a) -> complex:
    return complex(np.trace(as_cmatrix(a)))


def _check_two_qubit(rho: np.ndarray) -> np.ndarray:
    rho = as_cmatrix(rho)
    if rho.shape != (4, 4):
        raise DimensionError(f"expected a 4x4 two-qubit operator, got {rho.shape}")
    return rho


def partial_transpose(rho, subsystem: Subsystem = "A") -> np.ndarray:
    """Transpose the indices of one qubit of a 4x4 operator."""
    t = _check_two_qubit(rho).reshape(2, 2, 2, 2)  # (a, b, a', b')
    if subsystem == "A":
        t = t.transpose(2, 1, 0, 3)
    elif subsystem == "B":
        t = t.transpose(0, 3, 2, 1)
    else:
        raise ValueError(f"subsystem must be 'A' or 'B', got {subsystem!r}")
    return np.ascontiguousarray(t.reshape(4, 4))


def partial_trace(rho, keep: Subsystem = "A") -> np.ndarray:
    """Reduced 2x2 operator on ``keep`` after tracing out the other qubit."""
    t = _check_two_qubit(rho).reshape(2, 2, 2, 2)
    if keep == "A":
        return np.einsum("ijkj->ik", t)
    if keep == "B":
        return np.einsum("ijil->jl", t)
    raise ValueError(f"keep must be 'A' or 'B', got {keep!r}")


def is_hermitian(h, tol: float = HERMITIAN_TOL) -> bool:
    h = np.asarray(h)
    return h.ndim == 2 and h.shape[0] == h.shape[1] and float(np.max(np.abs(h - h.conj().T))) <= tol


def _off_norm(a: np.ndarray) -> float:
    off = a[~np.eye(a.shape[0], dtype=bool)]
    return float(np.sqrt(np.sum(np.abs(off) ** 2)))


def hermitian_eigen(h) -> tuple[np.ndarray, np.ndarray]:
    """Eigen-decomposition of a Hermitian matrix by cyclic complex Jacobi rotations.

    Returns ``(eigenvalues, vectors)`` with eigenvalues ascending and the
    eigenvectors as the columns of a unitary matrix, so that
    ``h = V @ diag(eigenvalues) @ V^dagger``.

    Each rotation first removes the phase of the pivot element ``a[p, q]`` and
    then applies the classic real Jacobi rotation. Iteration stops once the
    off-diagonal Frobenius norm drops below ``JACOBI_OFF_TOL``.
    """
    a = as_cmatrix(h).copy()
    n = a.shape[0]
    if a.shape != (n, n):
        raise DimensionError(f"expected a square matrix, got {a.shape}")
    if not is_hermitian(a):
        raise ContractViolation("matrix is not Hermitian within tolerance")
    a = 0.5 * (a + a.conj().T)
    v = np.eye(n, dtype=np.complex128)

    for _ in range(_MAX_SWEEPS):
        if _off_norm(a) < JACOBI_OFF_TOL:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[p, q]
                r = abs(apq)
                if r == 0.0:
                    continue
                phase = np.conj(apq) / r
                tau = (a[q, q].real - a[p, p].real) / (2.0 * r)
                if abs(tau) > 1e150:
                    t = 0.5 / tau
                else:
                    t = 1.0 / (abs(tau) + np.sqrt(1.0 + tau * tau))
                    if tau < 0.0:
                        t = -t
                c = 1.0 / np.sqrt(1.0 + t * t)
                s = t * c
                u = np.array([[c, s], [-s * phase, c * phase]], dtype=np.complex128)
                idx = [p, q]
                a[:, idx] = a[:, idx] @ u
                a[idx, :] = u.conj().T @ a[idx, :]
                a[p, q] = a[q, p] = 0.0
                a[p, p] = a[p, p].real
                a[q, q] = a[q, q].real
                v[:, idx] = v[:, idx] @ u
    else:
        raise ContractViolation("Jacobi iteration did not converge")

    vals = np.real(np.diag(a)).copy()
    order = np.argsort(vals, kind="stable")
    return vals[order], np.ascontiguousarray(v[:, order])


def eigvalsh(h) -> np.ndarray:
    return hermitian_eigen(h)[0]


def sqrt_psd(h) -> np.ndarray:
    """Principal square root of a positive-semidefinite Hermitian matrix."""
    vals, vecs = hermitian_eigen(h)
    if vals[0] < -PSD_TOL:
        raise ContractViolation(f"matrix has negative eigenvalue {vals[0]:.3e}")
    roots = np.sqrt(np.clip(vals, 0.0, None))
    out = (vecs * roots) @ vecs.conj().T
    return 0.5 * (out + out.conj().T)
