"""Second-order time-nonlocal (memory-kernel) description in the Laplace domain.

The Laplace-domain kernel K2(s) acts column-wise in the energy basis: on the
unit e_ij it equals the second-order assembly with the coefficient replacements

    A_nm(t; w)       ->  alpha_nm^(s' + i w)            (s' = s + i w_ij)
    conj(A_nm(t; w)) ->  conj(alpha_nm^(conj(s') + i w))

plus the free part -i w_ij, so that K2(-i w_ij){e_ij} reproduces the
stationary time-local generator column exactly (the pole/shift identity).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import dag, superop_sandwich, unvec, vec
from .spectral import pauli_system
from .tcl2 import SystemModel

__all__ = [
    "kernel_K2",
    "resolvent",
    "nonlocal_poles",
    "asymptotic_state",
    "nonlocal_pauli",
    "talbot_invert",
    "laplace_trajectory",
]


def _kernel_column_eb(m: SystemModel, s: complex, i: int, j: int) -> np.ndarray:
    """K2(s){e_ij} in the energy basis, as a d x d matrix."""
    d = m.dim
    gaps = m.basis.gaps
    sp = s + 1j * gaps[i, j]
    nch = len(m.couplings)
    leb = m.couplings_eb

    # frequency-resolved coefficient matrices at the shifted Laplace argument
    acoef = {}
    acoef_c = {}
    for g in m.unique_gaps:
        try:
            acoef[float(g)] = m.bath.laplace(sp + 1j * float(g))
            acoef_c[float(g)] = np.conj(m.bath.laplace(np.conj(sp) + 1j * float(g)))
        except ValueError as exc:
            raise ValueError(
                f"kernel evaluation hit a correlation-function pole at "
                f"s = {s!r} (column ({i},{j})): {exc}"
            ) from exc

    b = np.zeros((nch, d, d), dtype=complex)
    bdag = np.zeros((nch, d, d), dtype=complex)
    for k in range(d):
        for l in range(d):
            a = acoef[m.gap_key(gaps[k, l])]
            ac = acoef_c[m.gap_key(gaps[l, k])]
            b[:, k, l] = a @ leb[:, k, l]
            bdag[:, k, l] = ac @ leb[:, k, l]

    e = np.zeros((d, d), dtype=complex)
    e[i, j] = 1.0
    col = -1j * gaps[i, j] * e
    for n in range(nch):
        ln = leb[n]
        col += ln @ e @ bdag[n]
        col += b[n] @ e @ ln
        col -= ln @ b[n] @ e
        col -= e @ bdag[n] @ ln
    return col


def kernel_K2(m: SystemModel, s: complex, basis: str = "input") -> np.ndarray:
    """Full second-order memory kernel K2(s) as a superoperator matrix."""
    d = m.dim
    k = np.zeros((d * d, d * d), dtype=complex)
    for i in range(d):
        for j in range(d):
            k[:, i * d + j] = vec(_kernel_column_eb(m, s, i, j))
    if basis == "energy":
        return k
    u = m.basis.vectors
    return superop_sandwich(u, dag(u)) @ k @ superop_sandwich(dag(u), u)


def resolvent(m: SystemModel, s: complex, basis: str = "input") -> np.ndarray:
    """[s - K2(s)]^{-1}; the Laplace transform of the evolution map."""
    k = kernel_K2(m, s, basis=basis)
    return np.linalg.inv(s * np.eye(k.shape[0]) - k)


def nonlocal_poles(m: SystemModel) -> dict:
    """First-order pole locations s_ij = -i w_ij + delta k_ij(-i w_ij).

    By the shift identity these coincide with the time-local eigenvalue shifts
    delta f_ij of the stationary TCL2 generator.
    """
    d = m.dim
    gaps = m.basis.gaps
    out = {}
    for i in range(d):
        for j in range(d):
            col = _kernel_column_eb(m, -1j * gaps[i, j], i, j)
            out[(i, j)] = complex(col[i, j])
    return out


def asymptotic_state(m: SystemModel, rho0: np.ndarray, tol: float = 1e-6) -> np.ndarray:
    """Final-value limit lim_{s->0} s [s - K2(s)]^{-1} vec(rho0).

    Evaluated at three small real s values (scaled by the slowest dissipative
    rate) with Richardson extrapolation in s; raises if the stationary state is
    not unique or the extrapolants do not agree.
    """
    ps = pauli_system(m)
    if ps.multiple_stationary:
        raise ValueError(
            "no unique asymptotic state: the Pauli sector has a degenerate "
            "null space (e.g. vanishing coupling)"
        )
    rates = np.abs(np.real(ps.eigenvalues))
    rates = rates[rates > 1e-12 * max(1.0, rates.max(initial=0.0))]
    if rates.size == 0:
        raise ValueError("no unique asymptotic state: all Pauli rates vanish")
    scale = float(rates.min())
    svals = np.array([1e-3, 1e-4, 1e-5]) * scale
    xs = []
    for s in svals:
        xs.append(s * (resolvent(m, complex(s)) @ vec(rho0)))
    # x(s) = x0 + c s + O(s^2): eliminate the linear term pairwise
    extr01 = (svals[0] * xs[1] - svals[1] * xs[0]) / (svals[0] - svals[1])
    extr12 = (svals[1] * xs[2] - svals[2] * xs[1]) / (svals[1] - svals[2])
    if np.max(np.abs(extr01 - extr12)) > tol * max(1.0, float(np.max(np.abs(extr12)))):
        raise ValueError(
            f"final-value extrapolation did not converge "
            f"(disagreement {np.max(np.abs(extr01 - extr12)):.3e})"
        )
    rho = unvec(extr12, m.dim)
    return 0.5 * (rho + dag(rho))


def nonlocal_pauli(m: SystemModel, s: complex) -> np.ndarray:
    """Population-sector kernel V(s)_ij = <i| K2(s){e_jj} |i> (energy basis)."""
    d = m.dim
    v = np.zeros((d, d), dtype=complex)
    for j in range(d):
        col = _kernel_column_eb(m, s, j, j)
        v[:, j] = np.diag(col)
    return v


def talbot_invert(fhat, t: float, nodes: int = 64) -> np.ndarray:
    """Fixed-Talbot numerical Laplace inversion at time t.

    fhat(s) may return a scalar or an ndarray.  The full (unfolded) contour is
    used so complex-valued time signals are handled correctly.
    """
    if t <= 0:
        raise ValueError("talbot_invert requires t > 0")
    r = 2.0 * nodes / (5.0 * t)
    dtheta = 2.0 * np.pi / nodes
    total = None
    for k in range(nodes):
        theta = -np.pi + (k + 0.5) * dtheta
        cot = np.cos(theta) / np.sin(theta)
        s = r * theta * (cot + 1j)
        dsdtheta = r * (1j + cot - theta / np.sin(theta) ** 2)
        term = np.exp(s * t) * np.asarray(fhat(s)) * dsdtheta
        total = term if total is None else total + term
    return total * dtheta / (2j * np.pi)


def laplace_trajectory(m: SystemModel, rho0: np.ndarray, grid, nodes: int = 64):
    """States via Talbot inversion of the resolvent applied to rho0."""
    y0 = vec(np.asarray(rho0, dtype=complex))
    states = []
    for t in grid:
        if t == 0:
            states.append(unvec(y0.copy(), m.dim))
            continue
        y = talbot_invert(lambda s: resolvent(m, s) @ y0, float(t), nodes=nodes)
        states.append(unvec(y, m.dim))
    return np.array(states)
