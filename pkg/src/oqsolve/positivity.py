"""Complete-positivity machinery for the second-order theory.

The algebraic (Magnus) generator Phi2(t) = int_0^t L2_int(tau) dtau has a
Hermitian Lindblad coefficient matrix Delta that is positive semidefinite for
every model and time, so G(t) = G0(t) exp(Phi2(t)) is exactly completely
positive even though the instantaneous generator need not be.  The weak test
checks positivity of the running-averaged interaction-picture dissipator.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np
from scipy.linalg import expm

from .core import (
    choi_rearrange,
    herm_part,
    min_choi_eigenvalue,
    unitary_superop,
    vec,
)
from .tcl2 import SystemModel, canonical_coefficient_matrix, interaction_L2

__all__ = [
    "AlgebraicGenerator",
    "magnus_phi2",
    "magnus_propagator",
    "delta_double_time",
    "weak_cp_test",
    "interaction_dissipator_samples",
    "intermediate_map_check",
    "load_superop_samples",
    "save_superop_samples",
]


@dataclass(frozen=True)
class AlgebraicGenerator:
    t: float
    phi2: np.ndarray
    delta: np.ndarray


def _gl_integrate_superop(fun, t: float, nodes: int) -> np.ndarray:
    x, w = np.polynomial.legendre.leggauss(nodes)
    taus = 0.5 * t * (x + 1.0)
    acc = None
    for tau, wk in zip(taus, w):
        term = wk * fun(tau)
        acc = term if acc is None else acc + term
    return 0.5 * t * acc


def magnus_phi2(m: SystemModel, t: float, tol: float = 1e-9) -> AlgebraicGenerator:
    """Interaction-picture Magnus generator with Gauss-Legendre refinement."""
    if t < 0:
        raise ValueError("magnus_phi2 requires t >= 0")
    d = m.dim
    if t == 0:
        z = np.zeros((d * d, d * d), dtype=complex)
        return AlgebraicGenerator(t=0.0, phi2=z, delta=z.copy())
    nodes = 16
    prev = _gl_integrate_superop(lambda tau: interaction_L2(m, tau), t, nodes)
    while nodes < 256:
        nodes *= 2
        cur = _gl_integrate_superop(lambda tau: interaction_L2(m, tau), t, nodes)
        scale = max(1.0, float(np.max(np.abs(cur))))
        if np.max(np.abs(cur - prev)) < tol * scale:
            prev = cur
            break
        prev = cur
    delta = herm_part(canonical_coefficient_matrix(prev))
    return AlgebraicGenerator(t=float(t), phi2=prev, delta=delta)


def magnus_propagator(m: SystemModel, t: float) -> np.ndarray:
    """G(t) = G0(t) exp(Phi2(t)); exactly completely positive."""
    gen = magnus_phi2(m, t)
    u0 = expm(-1j * m.h * t)
    return unitary_superop(u0) @ expm(gen.phi2)


def delta_double_time(m: SystemModel, t: float, nodes: int = 48) -> np.ndarray:
    """Independent route to Delta: the ordered double-time quadratic form

    Delta = M + M^dag,
    M_IJ = sum_nm int_0^t dtau int_0^tau dtau'
           alpha_nm(tau - tau') vec(L_m_int(tau'))_I conj(vec(L_n_int(tau)))_J

    on a nested Gauss-Legendre grid (outer over tau, inner over [0, tau], so the
    correlation function is only evaluated at smooth positive arguments).
    Positive semidefinite because the block kernel [alpha_nm] is; agrees with
    magnus_phi2's Delta for traceless couplings and second-order operators
    (else they differ by the commutator gauge).
    """
    d = m.dim
    nch = len(m.couplings)
    x, w = np.polynomial.legendre.leggauss(nodes)
    gaps = m.basis.gaps

    def lvec_int(tau):
        """Interaction-picture couplings in the input basis, vectorized (n, I)."""
        phase = np.exp(1j * gaps * tau)
        return np.array(
            [vec(m.basis.from_energy_basis(phase * leb)) for leb in m.couplings_eb]
        )

    taus = 0.5 * t * (x + 1.0)
    ws = 0.5 * t * w
    mmat = np.zeros((d * d, d * d), dtype=complex)
    for tau, wa in zip(taus, ws):
        outer_l = lvec_int(tau)
        tps = 0.5 * tau * (x + 1.0)
        wps = 0.5 * tau * w
        inner = np.zeros((nch, d * d), dtype=complex)  # sum_m alpha_nm L_m term
        for tp, wb in zip(tps, wps):
            inner += wb * (m.bath.alpha_time(float(tau - tp)) @ lvec_int(tp))
        mmat += wa * np.einsum("nI,nJ->IJ", inner, np.conj(outer_l))
    return mmat + np.conj(mmat).T


def weak_cp_test(d_samples, grid) -> float:
    """Min eigenvalue of the trapezoid-integrated dissipator over all endpoints."""
    grid = np.asarray(grid, dtype=float)
    samples = [np.asarray(s) for s in d_samples]
    for k, s in enumerate(samples):
        if np.max(np.abs(s - np.conj(s).T)) > 1e-8 * max(1.0, np.max(np.abs(s))):
            raise ValueError(f"dissipator sample {k} is not Hermitian")
    best = np.inf
    acc = np.zeros_like(samples[0])
    for k in range(1, len(grid)):
        acc = acc + 0.5 * (grid[k] - grid[k - 1]) * (samples[k] + samples[k - 1])
        best = min(best, float(np.linalg.eigvalsh(herm_part(acc))[0]))
    return best


def interaction_dissipator_samples(m: SystemModel, tgrid):
    """Interaction-picture dissipator coefficient matrices D(tau) on a grid."""
    return [
        herm_part(canonical_coefficient_matrix(interaction_L2(m, float(tau))))
        for tau in tgrid
    ]


def intermediate_map_check(m: SystemModel, t1: float, t2: float) -> float:
    """Min Choi eigenvalue of G(t2) G(t1)^{-1}; negative values are legitimate
    non-Markovian physics and are reported, not failed."""
    if not (t2 > t1 >= 0):
        raise ValueError("requires t2 > t1 >= 0")
    g2 = magnus_propagator(m, t2)
    g1 = magnus_propagator(m, t1) if t1 > 0 else np.eye(g2.shape[0])
    cond = np.linalg.cond(g1)
    if not np.isfinite(cond) or cond > 1e12:
        raise ValueError(f"singular early-time propagator (cond = {cond:.2e})")
    inter = g2 @ np.linalg.inv(g1)
    return min_choi_eigenvalue(choi_rearrange(inter))


# ---------------------------------------------------------------------------
# external audit surface: time-sampled superoperators as CSV
# ---------------------------------------------------------------------------

def save_superop_samples(path, tgrid, superops) -> None:
    """CSV with columns t then flattened Re/Im superoperator entries."""
    superops = [np.asarray(s) for s in superops]
    dim2 = superops[0].shape[0]
    header = ["t"]
    for i in range(dim2):
        for j in range(dim2):
            header += [f"re_{i}_{j}", f"im_{i}_{j}"]
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for t, s in zip(tgrid, superops):
            row = [repr(float(t))]
            for i in range(dim2):
                for j in range(dim2):
                    row += [repr(float(s[i, j].real)), repr(float(s[i, j].imag))]
            writer.writerow(row)


def load_superop_samples(path):
    """Inverse of save_superop_samples; returns (tgrid, list of superoperators)."""
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        rows = [[float(x) for x in row] for row in reader if row]
    n_entries = (len(header) - 1) // 2
    dim2 = int(round(np.sqrt(n_entries)))
    if dim2 * dim2 != n_entries:
        raise ValueError("superoperator CSV does not contain a square matrix")
    tgrid = np.array([r[0] for r in rows])
    mats = []
    for r in rows:
        flat = np.array(r[1:])
        mats.append((flat[0::2] + 1j * flat[1::2]).reshape(dim2, dim2))
    return tgrid, mats
