"""Exact complex 2x2 linear algebra: qubit states, Pauli observables, and
mutually-unbiased-basis (MUB) eigenstates.

All eigenvalue computations use the closed-form quadratic formula for 2x2
Hermitian matrices; nothing here iterates. Values are immutable after
construction and safe to share across threads.

Basis convention (fixed so every fixture is bit-reproducible): basis index
1 is sigma_x, 2 is sigma_y, 3 is sigma_z, in the standard computational-basis
representation. Outcomes are the eigenvalues +1 / -1.
"""
from __future__ import annotations

import numpy as np

from .serialize import bloch_from_json, bloch_to_json, matrix_from_json, matrix_to_json

HERM_TOL = 1e-10
TRACE_TOL = 1e-10
PSD_TOL = 1e-9

BASES = (1, 2, 3)
OUTCOMES = (1, -1)

IDENTITY = np.eye(2, dtype=complex)
IDENTITY.setflags(write=False)

_SIGMA = (
    np.array([[0, 1], [1, 0]], dtype=complex),
    np.array([[0, -1j], [1j, 0]], dtype=complex),
    np.array([[1, 0], [0, -1]], dtype=complex),
)
for _s in _SIGMA:
    _s.setflags(write=False)


class ValidationError(ValueError):
    """Raised when a state, label, or reconstruction input violates its invariants."""


def pauli(i: int) -> np.ndarray:
    """Return sigma_i for basis index i in {1, 2, 3} (read-only array)."""
    if i not in BASES:
        raise ValidationError(f"basis index must be 1, 2, or 3, got {i!r}")
    return _SIGMA[i - 1]


def check_label(i: int, a: int) -> None:
    """Validate an MUB label (basis index, eigenvalue)."""
    if i not in BASES:
        raise ValidationError(f"basis index must be 1, 2, or 3, got {i!r}")
    if a not in OUTCOMES:
        raise ValidationError(f"outcome must be +1 or -1, got {a!r}")


def mub_projector(i: int, a: int) -> np.ndarray:
    """Projector |a, A_i><a, A_i| = (I + a*sigma_i)/2."""
    check_label(i, a)
    return (IDENTITY + a * _SIGMA[i - 1]) / 2


_SQRT_HALF = 1 / np.sqrt(2)
_KETS = {
    (1, 1): np.array([_SQRT_HALF, _SQRT_HALF], dtype=complex),
    (1, -1): np.array([_SQRT_HALF, -_SQRT_HALF], dtype=complex),
    (2, 1): np.array([_SQRT_HALF, 1j * _SQRT_HALF], dtype=complex),
    (2, -1): np.array([_SQRT_HALF, -1j * _SQRT_HALF], dtype=complex),
    (3, 1): np.array([1.0, 0.0], dtype=complex),
    (3, -1): np.array([0.0, 1.0], dtype=complex),
}
for _k in _KETS.values():
    _k.setflags(write=False)


def mub_ket(i: int, a: int) -> np.ndarray:
    """Normalized eigenvector |a, A_i> of sigma_i (read-only array)."""
    check_label(i, a)
    return _KETS[(i, a)]


def hermitian_eigvals(matrix) -> tuple[float, float]:
    """Eigenvalues (low, high) of a 2x2 Hermitian matrix, closed form.

    eig = h0 +/- |h| with h0 = tr/2 and |h| the Bloch-part norm; exact up
    to rounding, no iteration.
    """
    m = np.asarray(matrix, dtype=complex)
    h0 = (m[0, 0].real + m[1, 1].real) / 2
    radius = np.sqrt(((m[0, 0].real - m[1, 1].real) / 2) ** 2 + abs(m[0, 1]) ** 2)
    return h0 - radius, h0 + radius


class DensityMatrix:
    """A validated 2x2 density matrix (Hermitian, unit trace, PSD).

    The wrapped array is read-only; operations return new instances.
    Tolerances are overridable per construction.
    """

    __slots__ = ("matrix",)

    def __init__(self, matrix, *, herm_tol: float = HERM_TOL,
                 trace_tol: float = TRACE_TOL, psd_tol: float = PSD_TOL):
        m = np.array(matrix, dtype=complex)
        if m.shape != (2, 2):
            raise ValidationError(f"expected a 2x2 matrix, got shape {m.shape}")
        if not np.all(np.isfinite(m.real)) or not np.all(np.isfinite(m.imag)):
            raise ValidationError("matrix entries must be finite")
        herm_defect = np.abs(m - m.conj().T).max()
        if herm_defect > herm_tol:
            raise ValidationError(f"matrix is not Hermitian (defect {herm_defect:.3e})")
        trace_defect = abs(m[0, 0] + m[1, 1] - 1.0)
        if trace_defect > trace_tol:
            raise ValidationError(f"trace differs from 1 by {trace_defect:.3e}")
        low, _ = hermitian_eigvals(m)
        if low < -psd_tol:
            raise ValidationError(f"matrix has negative eigenvalue {low:.3e}")
        m.setflags(write=False)
        self.matrix = m

    @classmethod
    def from_bloch(cls, r, **tols) -> "DensityMatrix":
        """Build (I + r . sigma)/2 from a Bloch vector with |r| <= 1."""
        v = np.asarray(r, dtype=float)
        if v.shape != (3,):
            raise ValidationError(f"Bloch vector must have length 3, got shape {v.shape}")
        m = IDENTITY.copy()
        for k in range(3):
            m = m + v[k] * _SIGMA[k]
        return cls(m / 2, **tols)

    @property
    def bloch(self) -> np.ndarray:
        """Bloch vector r with r_k = tr(rho sigma_k)."""
        m = self.matrix
        return np.array([
            2 * m[0, 1].real,
            -2 * m[0, 1].imag,
            (m[0, 0] - m[1, 1]).real,
        ])

    def eigenvalues(self) -> tuple[float, float]:
        return hermitian_eigvals(self.matrix)

    def to_json(self) -> list:
        return matrix_to_json(self.matrix)

    @classmethod
    def from_json(cls, data, **tols) -> "DensityMatrix":
        return cls(matrix_from_json(data), **tols)

    def __repr__(self) -> str:
        return f"DensityMatrix(bloch={np.round(self.bloch, 6).tolist()})"

    def __eq__(self, other) -> bool:
        return isinstance(other, DensityMatrix) and np.array_equal(self.matrix, other.matrix)


def mub_state(i: int, a: int) -> DensityMatrix:
    """Pure eigenstate of sigma_i with eigenvalue a, as a density matrix."""
    return DensityMatrix(mub_projector(i, a))


def bloch_vector(rho: DensityMatrix) -> np.ndarray:
    return rho.bloch


def density_from_bloch(r, **tols) -> DensityMatrix:
    return DensityMatrix.from_bloch(r, **tols)


def fidelity_to_pure(rho: DensityMatrix, i: int, a: int) -> float:
    """Overlap <a, A_i| rho |a, A_i> = (1 + a*r_i)/2, in [0, 1].

    Computed from the Bloch component so the two outcomes of one basis sum
    to exactly 1.
    """
    check_label(i, a)
    return (1.0 + a * rho.bloch[i - 1]) / 2.0


# JSON helpers re-exported here because Bloch vectors are a qubit-level notion.
def bloch_vector_to_json(r) -> list:
    return bloch_to_json(r)


def bloch_vector_from_json(data) -> np.ndarray:
    return bloch_from_json(data)
