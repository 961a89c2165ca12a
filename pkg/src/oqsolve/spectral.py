"""Spectral perturbation theory on the stationary TCL2 Liouvillian.

Unperturbed right eigen-operators are the energy-basis units e_ij with
eigenvalues -i w_ij; the second-order part shifts the eigenvalue by its
diagonal matrix element and tilts the eigen-operators by the standard
non-degenerate corrections.  Resonant pairs (equal gaps within tolerance)
are grouped and diagonalized numerically inside the block; the zero-gap
(population) group carries the Pauli characteristic matrix W.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .core import dag, superop_sandwich, unvec, vec
from .tcl2 import SystemModel, _dissipative_superop_eb

__all__ = [
    "PauliSystem",
    "SpectrumResult",
    "perturbative_spectrum",
    "pauli_system",
    "spectral_propagator",
    "detailed_balance_residual",
    "damping_basis_orthogonality",
]

_DEGEN_REL_TOL = 1e-6


@dataclass(frozen=True)
class PauliSystem:
    """Population-sector characteristic matrix and its stationary vector(s)."""

    W: np.ndarray
    stationary: np.ndarray
    eigenvalues: np.ndarray
    null_vectors: np.ndarray
    multiple_stationary: bool


@dataclass(frozen=True)
class SpectrumResult:
    """Perturbed eigen-system of the stationary Liouvillian (energy basis)."""

    pairs: list                      # non-degenerate ordered pairs (i, j), i != j
    f: dict                          # (i,j) -> eigenvalue -i w_ij + delta f_ij
    dsigma: dict                     # (i,j) -> right correction operator
    dsigma_star: dict                # (i,j) -> left (dual) correction operator
    pauli: PauliSystem
    degenerate_groups: list          # groups of pairs handled as blocks
    groups: list = field(repr=False)  # [(members, eigvals, right, left)] complete
    basis: object = field(repr=False, default=None)


def _pair_groups(m: SystemModel):
    """Group the d^2 ordered pairs by gap value; the zero-gap group holds the
    populations (plus any accidentally resonant off-diagonal pairs)."""
    d = m.dim
    gaps = m.basis.gaps
    wmax = float(np.max(np.abs(m.basis.energies)))
    tol = _DEGEN_REL_TOL * max(wmax, 1.0)
    pairs = [(i, j) for i in range(d) for j in range(d)]
    values = np.array([gaps[i, j] for (i, j) in pairs])
    order = np.argsort(values, kind="stable")
    groups = []
    current = [order[0]]
    for idx in order[1:]:
        if values[idx] - values[current[-1]] <= tol:
            current.append(idx)
        else:
            groups.append(current)
            current = [idx]
    groups.append(current)
    return [[pairs[k] for k in g] for g in groups], gaps


def pauli_system(m: SystemModel) -> PauliSystem:
    """Characteristic matrix W_ij = sum_nm L_m[i,j] 2He[A_nm(w_ij)] conj(L_n[i,j])
    for i != j, diagonals minus the column sums; stationary vector from the
    SVD null space."""
    d = m.dim
    gaps = m.basis.gaps
    leb = m.couplings_eb
    w = np.zeros((d, d), dtype=float)
    for i in range(d):
        for j in range(d):
            if i == j:
                continue
            a = m.bath.coefficient_stationary(float(gaps[i, j]))
            he = (a + np.conj(a).T) / 2  # matrix in channel space: He[A](w_ij)
            x = leb[:, i, j]
            w[i, j] = float(np.real(np.conj(x) @ (2 * he) @ x))
    np.fill_diagonal(w, 0.0)
    np.fill_diagonal(w, -w.sum(axis=0))
    _, svals, vt = np.linalg.svd(w)
    wnorm = float(svals[0]) if svals.size else 0.0
    null_mask = svals <= 1e-10 * max(wnorm, 1e-300)
    nulls = vt[null_mask].conj()
    if nulls.shape[0] == 0:
        nulls = vt[-1:].conj()
    probs = []
    for vvec in nulls:
        p = np.real(vvec)
        if p.sum() < 0:
            p = -p
        probs.append(p / p.sum())
    stationary = probs[0]
    return PauliSystem(
        W=w,
        stationary=stationary,
        eigenvalues=np.linalg.eigvals(w),
        null_vectors=np.array(probs),
        multiple_stationary=len(probs) > 1,
    )


def perturbative_spectrum(m: SystemModel) -> SpectrumResult:
    d = m.dim
    s2 = _dissipative_superop_eb(m, None)
    groups, gaps = _pair_groups(m)
    lam0 = (-1j * gaps).reshape(-1)  # zeroth-order eigenvalue per flat pair

    group_data = []
    for members in groups:
        idx = [i * d + j for (i, j) in members]
        gap0 = float(np.mean([gaps[i, j] for (i, j) in members]))
        block = -1j * np.diag(np.array([gaps[i, j] for (i, j) in members])) \
            + s2[np.ix_(idx, idx)]
        evals, rvecs = np.linalg.eig(block)
        lvecs = np.linalg.inv(rvecs)  # rows: duals with unconjugated pairing
        # embed into the full space with first-order out-of-group corrections
        rights = np.zeros((d * d, len(members)), dtype=complex)
        lefts = np.zeros((len(members), d * d), dtype=complex)
        out = [k for k in range(d * d) if k not in idx]
        denom = (-1j * gap0) - lam0[out]
        for a in range(len(members)):
            r = np.zeros(d * d, dtype=complex)
            r[idx] = rvecs[:, a]
            r[out] = (s2[np.ix_(out, idx)] @ rvecs[:, a]) / denom
            rights[:, a] = r
            l = np.zeros(d * d, dtype=complex)
            l[idx] = lvecs[a, :]
            l[out] = (lvecs[a, :] @ s2[np.ix_(idx, out)]) / denom
            lefts[a, :] = l
        group_data.append((members, evals, rights, lefts))

    pairs, f, dsig, dsig_star = [], {}, {}, {}
    degenerate = []
    zero_group = None
    for members, evals, rights, lefts in group_data:
        if any(i == j for (i, j) in members):
            zero_group = members
            continue
        if len(members) > 1:
            degenerate.append(members)
            continue
        (i, j) = members[0]
        pairs.append((i, j))
        f[(i, j)] = complex(evals[0])
        r = rights[:, 0].copy()
        r[i * d + j] -= 1.0
        dsig[(i, j)] = unvec(r, d)
        l = lefts[0, :].copy()
        l[i * d + j] -= 1.0
        dsig_star[(i, j)] = unvec(l, d)

    return SpectrumResult(
        pairs=pairs,
        f=f,
        dsigma=dsig,
        dsigma_star=dsig_star,
        pauli=pauli_system(m),
        degenerate_groups=degenerate,
        groups=group_data,
        basis=m.basis,
    )


def spectral_propagator(spec: SpectrumResult, t: float) -> np.ndarray:
    """e^{tL} = sum e^{f t} |sigma><sigma*| over the complete eigen-system,
    rotated to the input basis."""
    if spec.groups is None or spec.basis is None:
        raise ValueError("incomplete eigen-system: spectrum lacks group data")
    d = spec.basis.dim
    g = np.zeros((d * d, d * d), dtype=complex)
    for members, evals, rights, lefts in spec.groups:
        for a in range(len(members)):
            g += np.exp(evals[a] * t) * np.outer(rights[:, a], lefts[a, :])
    u = spec.basis.vectors
    return superop_sandwich(u, dag(u)) @ g @ superop_sandwich(dag(u), u)


def detailed_balance_residual(m: SystemModel) -> float:
    """Max over level pairs of |p_i/p_j - alpha~(w_ij)/alpha~(w_ji)|, with p the
    stationary Pauli vector, plus the transitivity defect on level triples."""
    ps = pauli_system(m)
    p = ps.stationary
    d = m.dim
    gaps = m.basis.gaps

    def spec_scalar(w):
        return float(np.real(np.trace(m.bath.alpha_spectrum(w))))

    res = 0.0
    ratio = np.full((d, d), np.nan)
    for i in range(d):
        for j in range(d):
            if i == j:
                continue
            denom = spec_scalar(float(gaps[j, i]))
            if abs(denom) < 1e-300 or p[j] < 1e-300:
                continue
            ratio[i, j] = spec_scalar(float(gaps[i, j])) / denom
            res = max(res, abs(p[i] / p[j] - ratio[i, j]))
    for i in range(d):
        for j in range(d):
            for k in range(d):
                if len({i, j, k}) < 3:
                    continue
                if np.isnan(ratio[i, j]) or np.isnan(ratio[j, k]) or np.isnan(ratio[i, k]):
                    continue
                res = max(res, abs(ratio[i, j] * ratio[j, k] - ratio[i, k]))
    return res


def damping_basis_orthogonality(spec: SpectrumResult) -> float:
    """Max |sigma*_{ij} . sigma_{i'j'} - delta| over non-degenerate pairs
    (unconjugated pairing); O(g^4) for perturbative spectra."""
    d = spec.basis.dim
    res = 0.0
    items = []
    for (i, j) in spec.pairs:
        r = vec(spec.dsigma[(i, j)]).copy()
        r[i * d + j] += 1.0
        l = vec(spec.dsigma_star[(i, j)]).copy()
        l[i * d + j] += 1.0
        items.append(((i, j), r, l))
    for (pij, _, l) in items:
        for (pkl, r, _) in items:
            val = l @ r
            want = 1.0 if pij == pkl else 0.0
            res = max(res, abs(val - want))
    return res
