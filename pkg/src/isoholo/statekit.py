"""Density operators, system-ancilla states, purification and Bloch coordinates.

Composite vectors use the S-major index ``i = s * dim_a + a`` everywhere, which
is exactly what ``numpy.kron(system, ancilla)`` produces.
"""

from dataclasses import dataclass

import numpy as np

from .errors import DimensionMismatch, LengthMismatch
from .numerics import SIGMA_X, SIGMA_Y, SIGMA_Z, hermitian_eigensystem, max_abs


@dataclass(frozen=True)
class SpectralWeights:
    """Probability vector of the reduced-state spectrum."""

    lambdas: tuple

    def __post_init__(self):
        lam = tuple(float(x) for x in self.lambdas)
        if not lam:
            raise LengthMismatch("weights must not be empty")
        if any(x < -1e-12 or x > 1 + 1e-12 for x in lam):
            raise ValueError(f"weights must lie in [0, 1]: {lam}")
        if abs(sum(lam) - 1.0) > 1e-12:
            raise ValueError(f"weights must sum to 1, got {sum(lam)!r}")
        object.__setattr__(self, "lambdas", tuple(min(max(x, 0.0), 1.0) for x in lam))

    @classmethod
    def from_r(cls, r):
        """Two-level weights ((1 + r)/2, (1 - r)/2)."""
        if not -1.0 <= r <= 1.0:
            raise ValueError(f"r must lie in [-1, 1], got {r}")
        return cls(((1.0 + r) / 2.0, (1.0 - r) / 2.0))

    @property
    def n(self):
        return len(self.lambdas)

    def as_array(self):
        return np.array(self.lambdas)

    def __len__(self):
        return len(self.lambdas)


@dataclass(frozen=True)
class BipartiteState:
    """A vector or density matrix on H_S (x) H_A with a fixed ancilla basis.

    ``ancilla_basis`` holds the vectors |phi_k> as rows; it defaults to the
    computational basis of H_A.
    """

    dim_s: int
    dim_a: int
    data: np.ndarray
    ancilla_basis: np.ndarray = None

    def __post_init__(self):
        data = np.asarray(self.data, dtype=complex)
        total = self.dim_s * self.dim_a
        if data.ndim == 1 and data.shape != (total,):
            raise DimensionMismatch(f"state vector has length {data.shape[0]}, expected {total}")
        if data.ndim == 2 and data.shape != (total, total):
            raise DimensionMismatch(f"density matrix has shape {data.shape}, expected {(total, total)}")
        if data.ndim not in (1, 2):
            raise DimensionMismatch("data must be a vector or a square matrix")
        basis = self.ancilla_basis
        basis = np.eye(self.dim_a, dtype=complex) if basis is None else np.asarray(basis, dtype=complex)
        if basis.shape != (self.dim_a, self.dim_a):
            raise DimensionMismatch(f"ancilla basis must be {self.dim_a}x{self.dim_a}")
        if max_abs(basis.conj() @ basis.T - np.eye(self.dim_a)) > 1e-12:
            raise ValueError("ancilla basis is not orthonormal")
        object.__setattr__(self, "data", data)
        object.__setattr__(self, "ancilla_basis", basis)

    @property
    def is_vector(self):
        return self.data.ndim == 1


def tensor(a, b):
    """Kronecker product, S index major."""
    return np.kron(np.asarray(a, dtype=complex), np.asarray(b, dtype=complex))


def projector(v):
    v = np.asarray(v, dtype=complex)
    return np.outer(v, v.conj())


def partial_trace_ancilla(state):
    """Reduce a :class:`BipartiteState` to the system factor."""
    ds, da = state.dim_s, state.dim_a
    if state.is_vector:
        psi = state.data.reshape(ds, da)
        return psi @ psi.conj().T
    rho = state.data.reshape(ds, da, ds, da)
    return np.einsum("iaja->ij", rho)


def reduce(data, dim_s, dim_a):
    """Shorthand for ``partial_trace_ancilla(BipartiteState(dim_s, dim_a, data))``."""
    return partial_trace_ancilla(BipartiteState(dim_s, dim_a, data))


def validate_density(rho, tol=1e-12):
    """Return ``rho`` as an array after checking the density-operator invariants."""
    rho = np.asarray(rho, dtype=complex)
    if rho.ndim != 2 or rho.shape[0] != rho.shape[1]:
        raise DimensionMismatch(f"density operator must be square, got {rho.shape}")
    if max_abs(rho - rho.conj().T) > tol:
        raise ValueError("density operator is not Hermitian")
    if abs(np.trace(rho) - 1.0) > tol:
        raise ValueError(f"density operator has trace {np.trace(rho).real!r}")
    w, _ = hermitian_eigensystem(rho)
    if w[0] < -tol:
        raise ValueError(f"density operator has negative eigenvalue {w[0]:.3e}")
    return rho


def purify(rho, ancilla_basis=None, dim_a=None):
    """Purification sum_k sqrt(p_k) |e_k> (x) |phi_k>.

    Eigenvalues are taken in descending order, so the k-th largest weight is
    paired with the k-th ancilla vector.  The ancilla dimension defaults to the
    number of basis rows given, or to ``dim(rho)``.
    """
    rho = validate_density(rho)
    if ancilla_basis is None:
        dim_a = rho.shape[0] if dim_a is None else dim_a
        ancilla_basis = np.eye(dim_a, dtype=complex)
    ancilla_basis = np.asarray(ancilla_basis, dtype=complex)
    dim_a = ancilla_basis.shape[0]
    w, v = hermitian_eigensystem(rho)
    order = np.argsort(-w, kind="stable")
    if np.sum(np.clip(w[order[dim_a:]], 0, None)) > 1e-12:
        raise DimensionMismatch(f"rank of rho exceeds ancilla dimension {dim_a}")
    psi = np.zeros(rho.shape[0] * ancilla_basis.shape[1], dtype=complex)
    for k, idx in enumerate(order[:dim_a]):
        psi += np.sqrt(max(w[idx], 0.0)) * tensor(v[:, idx], ancilla_basis[k])
    return psi


def purity(rho):
    rho = np.asarray(rho, dtype=complex)
    return float(np.real(np.trace(rho @ rho)))


def bloch_vector(rho):
    rho = np.asarray(rho, dtype=complex)
    if rho.shape != (2, 2):
        raise DimensionMismatch(f"Bloch vector needs a 2x2 density operator, got {rho.shape}")
    return tuple(float(np.real(np.trace(rho @ s))) for s in (SIGMA_X, SIGMA_Y, SIGMA_Z))


def density_from_bloch(x, y, z):
    return 0.5 * (np.eye(2) + x * SIGMA_X + y * SIGMA_Y + z * SIGMA_Z)


def trace_distance(rho, sigma):
    """Half the trace norm of the difference."""
    diff = np.asarray(rho, dtype=complex) - np.asarray(sigma, dtype=complex)
    w, _ = hermitian_eigensystem(0.5 * (diff + diff.conj().T))
    return 0.5 * float(np.sum(np.abs(w)))
