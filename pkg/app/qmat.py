"""Dense complex matrices of dimension 2, 4 and 8 and the single-qubit operators.

Basis order is fixed: |0> is the first basis vector with sigma^3|0> = +|0>, and
two-qubit states are ordered |00>, |01>, |10>, |11>. Every function accepts stacks
of matrices with shape (..., d, d) so that whole quadrature grids travel together.
"""
import string
from typing import Iterable, Optional

import numpy as np

from app.core.config import settings, Tolerances
from app.core.exceptions import ConvergenceError, DimensionError, NotDensityMatrixError, NotHermitianError

ComplexMatrix = np.ndarray
DensityMatrix = np.ndarray

ALLOWED_DIMS = (2, 4, 8)

_PAULI = (
    np.array([[1, 0], [0, 1]], dtype=complex),
    np.array([[0, 1], [1, 0]], dtype=complex),
    np.array([[0, -1j], [1j, 0]], dtype=complex),
    np.array([[1, 0], [0, -1]], dtype=complex),
)


def pauli(n: int) -> ComplexMatrix:
    """Return sigma^n for n in 0..3 (sigma^0 is the identity)."""
    if not isinstance(n, (int, np.integer)) or not 0 <= n <= 3:
        raise DimensionError(f"Pauli index must be 0..3, got {n!r}")
    return _PAULI[n].copy()


IDENTITY2 = pauli(0)
# sigma^- lowers |0> -> |1>, sigma^+ raises |1> -> |0>
SIGMA_PLUS = (pauli(1) + 1j * pauli(2)) / 2
SIGMA_MINUS = (pauli(1) - 1j * pauli(2)) / 2


def basis_vector(index: int, dim: int = 2) -> np.ndarray:
    vec = np.zeros(dim, dtype=complex)
    vec[index] = 1.0
    return vec


def projector(vec: np.ndarray) -> ComplexMatrix:
    vec = np.asarray(vec, dtype=complex)
    return np.einsum("...i,...j->...ij", vec, vec.conj())


def matrix_dim(m: np.ndarray) -> int:
    if m.ndim < 2 or m.shape[-1] != m.shape[-2]:
        raise DimensionError(f"Expected square matrix, got shape {m.shape}")
    dim = m.shape[-1]
    if dim not in ALLOWED_DIMS:
        raise DimensionError(f"Matrix dimension must be one of {ALLOWED_DIMS}, got {dim}")
    return dim


def adjoint(m: ComplexMatrix) -> ComplexMatrix:
    return np.conj(np.swapaxes(m, -1, -2))


def trace(m: ComplexMatrix):
    return np.trace(m, axis1=-2, axis2=-1)


def hermiticity_error(m: ComplexMatrix) -> float:
    """Max entrywise |A - A^dagger| over the whole stack."""
    return float(np.max(np.abs(m - adjoint(m)))) if np.size(m) else 0.0


def kron(a: ComplexMatrix, b: ComplexMatrix) -> ComplexMatrix:
    """Kronecker product a (x) b; leading stack dimensions broadcast."""
    a = np.asarray(a, dtype=complex)
    b = np.asarray(b, dtype=complex)
    da, db = matrix_dim(a), matrix_dim(b)
    if da * db > max(ALLOWED_DIMS):
        raise DimensionError(f"kron of {da}x{da} and {db}x{db} exceeds dimension {max(ALLOWED_DIMS)}")
    out = np.einsum("...ij,...kl->...ikjl", a, b)
    return out.reshape(out.shape[:-4] + (da * db, da * db))


def partial_trace(rho: DensityMatrix, keep: Iterable[int]) -> DensityMatrix:
    """Trace out every qubit not listed in `keep` (0-based, qubit 0 is leftmost)."""
    rho = np.asarray(rho, dtype=complex)
    dim = matrix_dim(rho)
    n_qubits = dim.bit_length() - 1
    keep = sorted(set(keep))
    if not keep:
        raise DimensionError("partial_trace needs at least one subsystem to keep")
    if keep[0] < 0 or keep[-1] >= n_qubits:
        raise DimensionError(f"Subsystem indices {keep} out of range for {n_qubits} qubits")

    letters = string.ascii_letters
    row = [letters[i] for i in range(n_qubits)]
    col = [letters[n_qubits + i] if i in keep else row[i] for i in range(n_qubits)]
    out = [row[i] for i in keep] + [col[i] for i in keep]
    subscripts = "..." + "".join(row) + "".join(col) + "->..." + "".join(out)

    tensor = rho.reshape(rho.shape[:-2] + (2,) * (2 * n_qubits))
    reduced = np.einsum(subscripts, tensor)
    kept_dim = 2 ** len(keep)
    return reduced.reshape(rho.shape[:-2] + (kept_dim, kept_dim))


def hermitian_eigenvalues(m: ComplexMatrix, tol: Optional[Tolerances] = None) -> np.ndarray:
    """Real spectrum (ascending) of a Hermitian matrix or stack of them."""
    tol = tol or settings.TOL
    m = np.asarray(m, dtype=complex)
    matrix_dim(m)
    err = hermiticity_error(m)
    if err > tol.hermitian:
        raise NotHermitianError(f"Matrix is not Hermitian (max |A - A^dagger| = {err:.3e})")
    try:
        return np.linalg.eigvalsh((m + adjoint(m)) / 2)
    except np.linalg.LinAlgError as e:
        raise ConvergenceError(f"Eigenvalue iteration did not converge: {e}")


def density_deviation(rho: DensityMatrix) -> dict:
    """Worst-case trace error, Hermiticity error and smallest eigenvalue of a stack."""
    rho = np.asarray(rho, dtype=complex)
    return {
        "trace_error": float(np.max(np.abs(trace(rho) - 1.0))),
        "hermitian_error": hermiticity_error(rho),
        "min_eigenvalue": float(np.min(np.linalg.eigvalsh((rho + adjoint(rho)) / 2))),
    }


def validate_density_matrix(
    rho: DensityMatrix,
    tol: Optional[Tolerances] = None,
    *,
    trace_tol: Optional[float] = None,
    hermitian_tol: Optional[float] = None,
    positivity_tol: Optional[float] = None,
) -> DensityMatrix:
    """Raise NotDensityMatrixError unless every matrix in `rho` is a valid state."""
    tol = tol or settings.TOL
    rho = np.asarray(rho, dtype=complex)
    matrix_dim(rho)
    dev = density_deviation(rho)
    if dev["trace_error"] > (trace_tol or tol.trace):
        raise NotDensityMatrixError(f"Trace deviates from 1 by {dev['trace_error']:.3e}")
    if dev["hermitian_error"] > (hermitian_tol or tol.hermitian):
        raise NotDensityMatrixError(f"Not Hermitian (max |A - A^dagger| = {dev['hermitian_error']:.3e})")
    if dev["min_eigenvalue"] < -(positivity_tol or tol.positivity):
        raise NotDensityMatrixError(f"Not positive semidefinite (min eigenvalue {dev['min_eigenvalue']:.3e})")
    return rho


def operator_norm(m: ComplexMatrix) -> float:
    """Spectral norm (largest singular value)."""
    return float(np.linalg.norm(np.asarray(m, dtype=complex), ord=2))

