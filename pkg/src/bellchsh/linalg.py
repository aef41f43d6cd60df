"""Dense complex linear algebra on small Hilbert spaces.

Matrices are plain ``numpy`` complex arrays.  Everything here is a pure
function; inputs are never modified.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .errors import ConvergenceError, DimensionError, NotHermitianError, NumericalError

MAX_DIM = 64
HERMITIAN_TOL = 1e-10
JACOBI_TOL = 1e-14
JACOBI_MAX_SWEEPS = 100
IMAG_TOL = 1e-10

SIGMA_I = np.eye(2, dtype=complex)
SIGMA_X = np.array([[0, 1], [1, 0]], dtype=complex)
SIGMA_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
SIGMA_Z = np.array([[1, 0], [0, -1]], dtype=complex)
PAULI = {"i": SIGMA_I, "x": SIGMA_X, "y": SIGMA_Y, "z": SIGMA_Z}


def as_matrix(a, *, square: bool = False) -> np.ndarray:
    """Coerce ``a`` to a finite 2-D complex array (copy-free when possible)."""
    m = np.asarray(a, dtype=complex)
    if m.ndim != 2 or 0 in m.shape:
        raise DimensionError(f"expected a non-empty 2-D matrix, got shape {m.shape}")
    if not np.all(np.isfinite(m)):
        raise ValueError("matrix contains NaN or infinite entries")
    if square and m.shape[0] != m.shape[1]:
        raise DimensionError(f"expected a square matrix, got shape {m.shape}")
    return m


def identity(n: int) -> np.ndarray:
    return np.eye(n, dtype=complex)


def frobenius(a) -> float:
    return float(np.linalg.norm(a))


def tensor(a, b, *, max_dim: int = MAX_DIM) -> np.ndarray:
    """Kronecker product; block ``(i, j)`` of the result is ``a[i, j] * b``."""
    a, b = as_matrix(a), as_matrix(b)
    rows, cols = a.shape[0] * b.shape[0], a.shape[1] * b.shape[1]
    if max(rows, cols) > max_dim:
        raise DimensionError(f"tensor product of size {rows}x{cols} exceeds maximum dimension {max_dim}")
    return np.kron(a, b)


def matmul(a, b) -> np.ndarray:
    a, b = as_matrix(a), as_matrix(b)
    if a.shape[1] != b.shape[0]:
        raise DimensionError(f"cannot multiply {a.shape} by {b.shape}")
    return a @ b


def commutator(a, b) -> np.ndarray:
    a, b = as_matrix(a, square=True), as_matrix(b, square=True)
    if a.shape != b.shape:
        raise DimensionError(f"commutator of {a.shape} and {b.shape}")
    return a @ b - b @ a


def adjoint(a) -> np.ndarray:
    return as_matrix(a).conj().T


@dataclass(frozen=True)
class HermitianCheckReport:
    max_asymmetry: float
    tolerance: float

    @property
    def is_hermitian(self) -> bool:
        return self.max_asymmetry <= self.tolerance


def check_hermitian(a, tol: float | None = None) -> HermitianCheckReport:
    a = as_matrix(a, square=True)
    tol = HERMITIAN_TOL if tol is None else tol
    return HermitianCheckReport(frobenius(a - a.conj().T), tol)


def require_hermitian(a, tol: float | None = None, what: str = "matrix") -> np.ndarray:
    a = as_matrix(a, square=True)
    report = check_hermitian(a, tol)
    if not report.is_hermitian:
        raise NotHermitianError(report.max_asymmetry, report.tolerance, what)
    return a


class Eigensystem(NamedTuple):
    values: np.ndarray   # ascending, real
    vectors: np.ndarray  # column k belongs to values[k]


def _off_diagonal_norm(a: np.ndarray) -> float:
    return float(np.linalg.norm(a - np.diag(np.diag(a))))


def hermitian_eigensystem(a, tol: float | None = None) -> Eigensystem:
    """Eigen-decomposition of a Hermitian matrix by cyclic complex Jacobi rotations.

    Each rotation first removes the phase of the pivot ``a[p, q]`` and then
    applies the classical real Jacobi rotation, so the unitary used is::

        J[p, p] = c          J[p, q] = s
        J[q, p] = -s * u*    J[q, q] = c * u*       with u = a[p, q] / |a[p, q]|

    Sweeps stop once the off-diagonal Frobenius mass is at most
    ``JACOBI_TOL * ||a||_F``; more than ``JACOBI_MAX_SWEEPS`` sweeps raise
    :class:`ConvergenceError`.  Eigenvalues come back in ascending order.
    Inside a degenerate cluster the eigenvectors are orthonormal but
    otherwise arbitrary.
    """
    a = require_hermitian(a, tol)
    n = a.shape[0]
    # Exact Hermitian part; the asymmetry is within tolerance already.
    work = (a + a.conj().T) / 2
    vecs = np.eye(n, dtype=complex)
    threshold = JACOBI_TOL * frobenius(a)

    for _ in range(JACOBI_MAX_SWEEPS + 1):
        if _off_diagonal_norm(work) <= threshold:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = work[p, q]
                mag = abs(apq)
                if mag == 0.0:
                    continue
                u = apq / mag
                theta = (work[q, q].real - work[p, p].real) / (2.0 * mag)
                t = 1.0 / (abs(theta) + np.sqrt(theta * theta + 1.0))
                if theta < 0:
                    t = -t
                c = 1.0 / np.sqrt(t * t + 1.0)
                s = t * c
                # columns: work <- work @ J
                col_p = work[:, p].copy()
                col_q = work[:, q].copy()
                work[:, p] = c * col_p - s * np.conj(u) * col_q
                work[:, q] = s * col_p + c * np.conj(u) * col_q
                # rows: work <- J^dagger @ work
                row_p = work[p, :].copy()
                row_q = work[q, :].copy()
                work[p, :] = c * row_p - s * u * row_q
                work[q, :] = s * row_p + c * u * row_q
                work[p, q] = work[q, p] = 0.0
                work[p, p] = work[p, p].real
                work[q, q] = work[q, q].real
                vp = vecs[:, p].copy()
                vq = vecs[:, q].copy()
                vecs[:, p] = c * vp - s * np.conj(u) * vq
                vecs[:, q] = s * vp + c * np.conj(u) * vq
    else:
        raise ConvergenceError(
            f"Jacobi eigensolver did not converge within {JACOBI_MAX_SWEEPS} sweeps"
        )

    values = np.diag(work).real.copy()
    order = np.argsort(values, kind="stable")
    return Eigensystem(values[order], vecs[:, order])


def eigvalsh(a, tol: float | None = None) -> np.ndarray:
    return hermitian_eigensystem(a, tol).values


def _payload(state) -> np.ndarray:
    return np.asarray(getattr(state, "data", state), dtype=complex)


def expectation(state, m, tol: float | None = None) -> float:
    """``<psi|m|psi>`` for a state vector, ``tr(rho m)`` for a density matrix.

    ``state`` may be a raw array or any object with a ``data`` array
    attribute (such as :class:`bellchsh.scenario.State`).
    """
    m = require_hermitian(m, tol, "observable")
    psi = _payload(state)
    n = m.shape[0]
    if psi.ndim == 1:
        if psi.shape[0] != n:
            raise DimensionError(f"state of dimension {psi.shape[0]} vs operator of dimension {n}")
        value = np.vdot(psi, m @ psi)
    elif psi.ndim == 2:
        if psi.shape != (n, n):
            raise DimensionError(f"density matrix {psi.shape} vs operator of dimension {n}")
        value = np.trace(psi @ m)
    else:
        raise DimensionError(f"state payload must be 1-D or 2-D, got {psi.ndim}-D")
    if abs(value.imag) > IMAG_TOL:
        raise NumericalError(f"expectation value has imaginary part {value.imag:.3e}")
    return float(value.real)
