"""Dense complex matrix helpers: Pauli constants, commutator/anticommutator
superoperators and density-matrix diagnostics.

Operators are plain ``numpy`` complex arrays of shape ``(d, d)``. Stacks of
operators (shape ``(..., d, d)``) are accepted wherever it is cheap to do so.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

IDENTITY = np.eye(2, dtype=complex)
SIGMA_X = np.array([[0, 1], [1, 0]], dtype=complex)
SIGMA_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
SIGMA_Z = np.array([[1, 0], [0, -1]], dtype=complex)
PAULIS = (SIGMA_X, SIGMA_Y, SIGMA_Z)

# basis kets, |up> is the +1 eigenstate of sigma_z
KET_UP = np.array([1, 0], dtype=complex)
KET_DOWN = np.array([0, 1], dtype=complex)


def _check_pair(a: np.ndarray, b: np.ndarray) -> None:
    if a.shape[-2:] != b.shape[-2:] or a.shape[-1] != a.shape[-2]:
        raise ValueError(f"dimension mismatch: {a.shape} vs {b.shape}")


def commutator_super(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Return ``a b - b a``."""
    a = np.asarray(a, dtype=complex)
    b = np.asarray(b, dtype=complex)
    _check_pair(a, b)
    return a @ b - b @ a


def anticommutator_super(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Return ``a b + b a``."""
    a = np.asarray(a, dtype=complex)
    b = np.asarray(b, dtype=complex)
    _check_pair(a, b)
    return a @ b + b @ a


def projector(ket: np.ndarray) -> np.ndarray:
    ket = np.asarray(ket, dtype=complex)
    return np.outer(ket, ket.conj())


def is_hermitian(a: np.ndarray, atol: float = 1e-12) -> bool:
    a = np.asarray(a)
    return bool(np.max(np.abs(a - np.swapaxes(a, -1, -2).conj()), initial=0.0) <= atol)


@dataclass(frozen=True)
class DensityDiagnostics:
    """Health report for a (putative) density matrix.

    Diagnostics never raise; callers decide what counts as a breach via
    :meth:`is_valid`.
    """

    trace: complex
    hermiticity_defect: float
    min_eigenvalue: float
    purity: float

    def is_valid(
        self,
        trace_tol: float = 1e-8,
        hermiticity_tol: float = 1e-10,
        positivity_tol: float = 1e-6,
        purity_tol: float = 1e-8,
    ) -> bool:
        return (
            abs(self.trace - 1.0) <= trace_tol
            and self.hermiticity_defect <= hermiticity_tol
            and self.min_eigenvalue >= -positivity_tol
            and -purity_tol <= self.purity <= 1.0 + purity_tol
        )


def _diagnostic_arrays(rho: np.ndarray):
    """Vectorised diagnostics over a stack of square matrices ``(..., d, d)``."""
    rho = np.asarray(rho, dtype=complex)
    if rho.ndim < 2 or rho.shape[-1] != rho.shape[-2]:
        raise ValueError(f"expected square matrices, got shape {rho.shape}")
    dag = np.swapaxes(rho, -1, -2).conj()
    trace = np.trace(rho, axis1=-2, axis2=-1)
    defect = np.max(np.abs(rho - dag), axis=(-2, -1))
    herm = 0.5 * (rho + dag)
    # Tr(rho^2) for the Hermitian part; the anti-Hermitian part is reported by `defect`
    purity = np.real(np.einsum("...ij,...ji->...", herm, herm))
    if rho.shape[-1] == 2:
        a = herm[..., 0, 0].real
        d = herm[..., 1, 1].real
        b = herm[..., 0, 1]
        mean = 0.5 * (a + d)
        radius = np.sqrt((0.5 * (a - d)) ** 2 + np.abs(b) ** 2)
        min_eig = mean - radius
    else:
        min_eig = np.linalg.eigvalsh(herm)[..., 0]
    return trace, defect, min_eig, purity


def validate_density(rho: np.ndarray) -> DensityDiagnostics:
    """Trace, Hermiticity defect, smallest eigenvalue and purity of ``rho``.

    2x2 inputs use the closed-form trace/determinant eigenvalues; larger
    matrices go through a Hermitian eigensolver on the Hermitian part.
    """
    trace, defect, min_eig, purity = _diagnostic_arrays(rho)
    return DensityDiagnostics(
        trace=complex(trace),
        hermiticity_defect=float(defect),
        min_eigenvalue=float(min_eig),
        purity=float(purity),
    )


def partial_trace_last(rho: np.ndarray, d_keep: int, d_trace: int) -> np.ndarray:
    """Trace out the second tensor factor of a ``(d_keep*d_trace)``-dim operator."""
    r = np.asarray(rho).reshape(d_keep, d_trace, d_keep, d_trace)
    return np.einsum("ikjk->ij", r)
