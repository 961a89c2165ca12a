"""Operator / superoperator algebra in Liouville space.

Conventions (fixed globally):

* vectorization is row-major: the operator element X[i, j] sits at flat
  index i*d + j of vec(X);
* a superoperator entry S[(i,j),(i',j')] = <i| S{|i'><j'|} |j>;
* the Choi rearrangement swaps the middle indices,
  C[(i,i'),(j,j')] = S[(i,j),(i',j')].
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = [
    "vec",
    "unvec",
    "dag",
    "herm_part",
    "herm_defect",
    "require_hermitian",
    "superop_sandwich",
    "commutator_superop",
    "anticommutator_superop",
    "dissipator_superop",
    "unitary_superop",
    "basis_change_superop",
    "apply_superop",
    "is_trace_preserving",
    "is_hermiticity_preserving",
    "trace_preservation_defect",
    "hermiticity_preservation_defect",
    "choi_rearrange",
    "min_choi_eigenvalue",
    "SpectralBasis",
    "eig_hermitian",
]


def vec(x: np.ndarray) -> np.ndarray:
    """Row-major vectorization of a d x d operator."""
    return np.asarray(x).reshape(-1)


def unvec(v: np.ndarray, d: int | None = None) -> np.ndarray:
    """Inverse of :func:`vec`."""
    v = np.asarray(v)
    if d is None:
        d = int(round(np.sqrt(v.size)))
    return v.reshape(d, d)


def dag(x: np.ndarray) -> np.ndarray:
    return np.conj(x).T


def herm_part(x: np.ndarray) -> np.ndarray:
    return 0.5 * (x + dag(x))


def herm_defect(x: np.ndarray) -> float:
    """max |X - X^dag| entrywise."""
    return float(np.max(np.abs(x - dag(x)))) if x.size else 0.0


def require_hermitian(x: np.ndarray, tol: float = 1e-12, name: str = "operator") -> np.ndarray:
    """Validate Hermiticity relative to the largest entry; return the input."""
    x = np.asarray(x, dtype=complex)
    scale = max(float(np.max(np.abs(x))), 1.0)
    defect = herm_defect(x)
    if defect > tol * scale:
        raise ValueError(
            f"{name} is not Hermitian: max|X - X^dag| = {defect:.3e} "
            f"(tolerance {tol:.1e} relative to max|X| = {scale:.3e})"
        )
    return x


def superop_sandwich(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Superoperator for rho -> A rho B.

    With row-major vec, vec(A rho B) = kron(A, B.T) vec(rho), so the matrix
    element is S[(i,j),(i',j')] = A[i,i'] * B[j',j].
    """
    a = np.asarray(a)
    b = np.asarray(b)
    if a.shape != b.shape or a.shape[0] != a.shape[1]:
        raise ValueError(f"dimension mismatch: A {a.shape} vs B {b.shape}")
    return np.kron(a, b.T)


def commutator_superop(h: np.ndarray) -> np.ndarray:
    """Superoperator for rho -> -i[H, rho]."""
    d = h.shape[0]
    eye = np.eye(d)
    return -1j * (superop_sandwich(h, eye) - superop_sandwich(eye, h))


def anticommutator_superop(a: np.ndarray) -> np.ndarray:
    """Superoperator for rho -> {A, rho}."""
    d = a.shape[0]
    eye = np.eye(d)
    return superop_sandwich(a, eye) + superop_sandwich(eye, a)


def dissipator_superop(ljump: np.ndarray, rate: float = 1.0) -> np.ndarray:
    """GKS dissipator rate * (L rho L^dag - {L^dag L, rho}/2)."""
    return rate * (
        superop_sandwich(ljump, dag(ljump))
        - 0.5 * anticommutator_superop(dag(ljump) @ ljump)
    )


def unitary_superop(u: np.ndarray) -> np.ndarray:
    """Superoperator for rho -> U rho U^dag."""
    return superop_sandwich(u, dag(u))


def basis_change_superop(s: np.ndarray, u: np.ndarray) -> np.ndarray:
    """Express S in the basis whose columns are u: rho' = U^dag rho U.

    Returns S' with S'{rho'} = U^dag S{U rho' U^dag} U.
    """
    fwd = superop_sandwich(dag(u), u)     # rho -> U^dag rho U
    back = superop_sandwich(u, dag(u))    # rho -> U rho U^dag
    return fwd @ s @ back


def apply_superop(s: np.ndarray, x: np.ndarray) -> np.ndarray:
    d = x.shape[0]
    return unvec(s @ vec(x), d)


def trace_preservation_defect(s: np.ndarray, generator: bool = False) -> float:
    """max deviation of sum_i S[(i,i),(i',j')] from delta_{i'j'}.

    For a generator (rather than a map) the column traces must vanish instead.
    """
    d = int(round(np.sqrt(s.shape[0])))
    row = s.reshape(d, d, d * d)
    traced = np.einsum("iik->k", row).reshape(d, d)
    target = np.zeros((d, d)) if generator else np.eye(d)
    return float(np.max(np.abs(traced - target)))


def is_trace_preserving(s: np.ndarray, tol: float = 1e-10, generator: bool = False) -> bool:
    return trace_preservation_defect(s, generator=generator) <= tol


def hermiticity_preservation_defect(s: np.ndarray) -> float:
    """max |S[(i,j),(i',j')] - conj(S[(j,i),(j',i')])|."""
    d = int(round(np.sqrt(s.shape[0])))
    t = s.reshape(d, d, d, d)
    return float(np.max(np.abs(t - np.conj(t.transpose(1, 0, 3, 2)))))


def is_hermiticity_preserving(s: np.ndarray, tol: float = 1e-10) -> bool:
    return hermiticity_preservation_defect(s) <= tol


def choi_rearrange(s: np.ndarray) -> np.ndarray:
    """Choi matrix C[(i,i'),(j,j')] = S[(i,j),(i',j')]; involutive."""
    d = int(round(np.sqrt(s.shape[0])))
    return s.reshape(d, d, d, d).transpose(0, 2, 1, 3).reshape(d * d, d * d)


def min_choi_eigenvalue(c: np.ndarray) -> float:
    """Smallest eigenvalue of the Hermitized Choi matrix."""
    return float(np.linalg.eigvalsh(herm_part(c))[0])


@dataclass(frozen=True)
class SpectralBasis:
    """Eigen-system of a Hermitian operator.

    energies: ascending eigenvalues; vectors: unitary matrix of eigencolumns;
    gaps[i, j] = energies[i] - energies[j].
    """

    energies: np.ndarray
    vectors: np.ndarray

    @property
    def dim(self) -> int:
        return self.energies.size

    @property
    def gaps(self) -> np.ndarray:
        w = self.energies
        return w[:, None] - w[None, :]

    def to_energy_basis(self, x: np.ndarray) -> np.ndarray:
        u = self.vectors
        return dag(u) @ x @ u

    def from_energy_basis(self, x: np.ndarray) -> np.ndarray:
        u = self.vectors
        return u @ x @ dag(u)


def _fix_phases(u: np.ndarray) -> np.ndarray:
    """Make the first significant component of every eigencolumn real positive."""
    u = u.copy()
    for k in range(u.shape[1]):
        col = u[:, k]
        idx = np.argmax(np.abs(col) > 1e-8 * np.max(np.abs(col)))
        phase = col[idx] / abs(col[idx])
        u[:, k] = col * np.conj(phase)
    return u


def eig_hermitian(h: np.ndarray, tol: float = 1e-12) -> SpectralBasis:
    """Ascending eigendecomposition of a Hermitian operator.

    Degenerate eigenvalues come out contiguously (ascending sort); the phase of
    each eigencolumn is fixed by making its first significant component real
    positive, so the output is deterministic.
    """
    h = require_hermitian(h, tol=tol, name="Hamiltonian")
    w, u = np.linalg.eigh(herm_part(h))
    return SpectralBasis(energies=w, vectors=_fix_phases(u))
