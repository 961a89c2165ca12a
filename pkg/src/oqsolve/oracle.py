"""Exact-diagonalization reference for small system + environment composites.

The environment is a register of a few qubits; the composite Hamiltonian
H = H_S x 1 + 1 x H_E + g sum_n L_n x l_n is diagonalized once, and exact
reduced trajectories, correlation functions and two-time averages follow from
phase evolution in the eigenbasis.  The measured environment correlation
alpha_nm(t) = <l_n(t) l_m> can be exported as a tabulated bath model so the
perturbative machinery runs against precisely the same microscopic physics.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from .bath import Tabulated
from .core import dag, herm_part, require_hermitian
from .tcl2 import SystemModel, propagate

__all__ = [
    "CompositeModel",
    "spin_chain_environment",
    "random_composite",
    "exact_reduced_trajectory",
    "exact_alpha",
    "exact_two_time",
    "tabulated_bath",
    "reduced_model",
    "convergence_errors",
]

_MAX_DIM = 512

_SX = np.array([[0.0, 1.0], [1.0, 0.0]], dtype=complex)
_SY = np.array([[0.0, -1.0j], [1.0j, 0.0]], dtype=complex)
_SZ = np.diag([1.0, -1.0]).astype(complex)


def _site_op(op: np.ndarray, k: int, n: int) -> np.ndarray:
    mats = [np.eye(2, dtype=complex)] * n
    mats[k] = op
    out = mats[0]
    for m in mats[1:]:
        out = np.kron(out, m)
    return out


@dataclass(eq=False)
class CompositeModel:
    """System + qubit-register environment with a global coupling scale g."""

    h: np.ndarray
    couplings: list
    env_h: np.ndarray
    env_couplings: list
    g: float
    temperature: float = np.inf

    def __post_init__(self):
        self.h = require_hermitian(np.asarray(self.h, dtype=complex), name="system Hamiltonian")
        self.env_h = require_hermitian(
            np.asarray(self.env_h, dtype=complex), name="environment Hamiltonian"
        )
        self.couplings = [
            require_hermitian(np.asarray(l, dtype=complex), name=f"system coupling {n}")
            for n, l in enumerate(self.couplings)
        ]
        self.env_couplings = [
            require_hermitian(np.asarray(l, dtype=complex), name=f"environment coupling {n}")
            for n, l in enumerate(self.env_couplings)
        ]
        if len(self.couplings) != len(self.env_couplings):
            raise ValueError("system and environment coupling lists must match")
        if self.dim * self.env_dim > _MAX_DIM:
            raise ValueError(
                f"composite dimension {self.dim * self.env_dim} exceeds "
                f"the exact-diagonalization cap {_MAX_DIM}"
            )

    @property
    def dim(self) -> int:
        return self.h.shape[0]

    @property
    def env_dim(self) -> int:
        return self.env_h.shape[0]

    @cached_property
    def env_state(self) -> np.ndarray:
        """Thermal environment state exp(-H_E/T)/Z (maximally mixed at T=inf)."""
        if np.isinf(self.temperature):
            return np.eye(self.env_dim) / self.env_dim
        w, u = np.linalg.eigh(self.env_h)
        p = np.exp(-(w - w[0]) / self.temperature)
        p /= p.sum()
        return (u * p) @ dag(u)

    @cached_property
    def total_h(self) -> np.ndarray:
        ds, de = self.dim, self.env_dim
        h = np.kron(self.h, np.eye(de)) + np.kron(np.eye(ds), self.env_h)
        for ln, en in zip(self.couplings, self.env_couplings):
            h += self.g * np.kron(ln, en)
        return h

    @cached_property
    def eig(self):
        return np.linalg.eigh(self.total_h)

    @cached_property
    def env_eig(self):
        return np.linalg.eigh(self.env_h)

    def with_coupling(self, g: float) -> "CompositeModel":
        return CompositeModel(
            h=self.h,
            couplings=self.couplings,
            env_h=self.env_h,
            env_couplings=self.env_couplings,
            g=g,
            temperature=self.temperature,
        )


def spin_chain_environment(
    n_qubits: int,
    splittings,
    chain_coupling: float = 0.0,
    site_weights=None,
):
    """Qubit-register environment: H_E = sum eps_k sz_k/2 + J sum sx_k sx_{k+1},
    coupled through l = sum c_k sx_k.  Returns (env_h, env_coupling)."""
    splittings = np.asarray(splittings, dtype=float)
    if splittings.size != n_qubits:
        raise ValueError("need one level splitting per qubit")
    if site_weights is None:
        site_weights = np.ones(n_qubits)
    env_h = np.zeros((2**n_qubits, 2**n_qubits), dtype=complex)
    for k in range(n_qubits):
        env_h += 0.5 * splittings[k] * _site_op(_SZ, k, n_qubits)
    for k in range(n_qubits - 1):
        env_h += chain_coupling * (
            _site_op(_SX, k, n_qubits) @ _site_op(_SX, k + 1, n_qubits)
        )
    l = np.zeros_like(env_h)
    for k in range(n_qubits):
        l += site_weights[k] * _site_op(_SX, k, n_qubits)
    return env_h, l


def random_composite(
    seed: int,
    dim: int = 3,
    n_qubits: int = 4,
    g: float = 0.1,
    temperature: float = 2.0,
) -> CompositeModel:
    """Seeded random system (GUE Hamiltonian, traceless Hermitian coupling)
    attached to a detuned spin-chain register."""
    rng = np.random.default_rng(seed)
    a = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    h = herm_part(a) / np.sqrt(dim)
    b = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    l = herm_part(b) / np.sqrt(dim)
    l -= np.trace(l) / dim * np.eye(dim)
    splittings = rng.uniform(0.5, 2.5, size=n_qubits)
    weights = rng.uniform(0.3, 1.0, size=n_qubits) / np.sqrt(n_qubits)
    env_h, env_l = spin_chain_environment(
        n_qubits, splittings, chain_coupling=0.1 * rng.uniform(0.5, 1.5), site_weights=weights
    )
    return CompositeModel(
        h=h, couplings=[l], env_h=env_h, env_couplings=[env_l],
        g=g, temperature=temperature,
    )


def _partial_trace_env(rho: np.ndarray, ds: int, de: int) -> np.ndarray:
    return rho.reshape(ds, de, ds, de).trace(axis1=1, axis2=3)


def exact_reduced_trajectory(c: CompositeModel, rho0: np.ndarray, grid) -> np.ndarray:
    """Reduced states Tr_E[U (rho0 x rho_E) U^dag] on a time grid."""
    w, u = c.eig
    rho_tot = np.kron(np.asarray(rho0, dtype=complex), c.env_state)
    r = dag(u) @ rho_tot @ u
    states = []
    for t in grid:
        phase = np.exp(-1j * w * t)
        rt = u @ (r * np.outer(phase, np.conj(phase))) @ dag(u)
        states.append(_partial_trace_env(rt, c.dim, c.env_dim))
    return np.array(states)


def exact_alpha(c: CompositeModel, tgrid) -> np.ndarray:
    """alpha_nm(t) = Tr_E[l_n(t) l_m rho_E] with free environment evolution.

    Stationary because the thermal state commutes with H_E; sampled on tgrid
    with shape (nt, n, n).
    """
    w, u = c.env_eig
    rho = dag(u) @ c.env_state @ u
    ls = [dag(u) @ l @ u for l in c.env_couplings]
    nch = len(ls)
    out = np.empty((len(tgrid), nch, nch), dtype=complex)
    for k, t in enumerate(tgrid):
        phase = np.exp(1j * w * t)
        for n, lnm in enumerate(ls):
            lnt = (phase[:, None] * lnm) * np.conj(phase)[None, :]
            for m, lmm in enumerate(ls):
                out[k, n, m] = np.trace(lnt @ lmm @ rho)
    return out


def exact_two_time(
    c: CompositeModel,
    x1: np.ndarray,
    t1: float,
    x2: np.ndarray,
    t2: float,
    rho0: np.ndarray,
) -> complex:
    """<X1(t1) X2(t2)> in the Heisenberg picture of the composite."""
    w, u = c.eig
    de = c.env_dim
    rho_tot = dag(u) @ np.kron(np.asarray(rho0, dtype=complex), c.env_state) @ u

    def heis(x, t):
        xe = dag(u) @ np.kron(np.asarray(x, dtype=complex), np.eye(de)) @ u
        phase = np.exp(1j * w * t)
        return (phase[:, None] * xe) * np.conj(phase)[None, :]

    return complex(np.trace(heis(x1, t1) @ heis(x2, t2) @ rho_tot))


def tabulated_bath(c: CompositeModel, tmax: float, nt: int = 801) -> Tabulated:
    """Exact environment correlation exported as a tabulated bath model."""
    tgrid = np.linspace(0.0, tmax, nt)
    return Tabulated(tgrid, exact_alpha(c, tgrid))


def reduced_model(c: CompositeModel, tmax: float, nt: int = 801) -> SystemModel:
    """Perturbative system model with couplings g L_n and the exact correlation."""
    return SystemModel(
        h=c.h,
        couplings=[c.g * l for l in c.couplings],
        bath=tabulated_bath(c, tmax, nt),
    )


def convergence_errors(
    c: CompositeModel,
    rho0: np.ndarray,
    horizon: float,
    npoints: int = 21,
    couplings=(1.0, 0.5),
    mode: str = "full-time",
):
    """Max trajectory error of the perturbative theory vs. exact dynamics, at
    the model's coupling scaled by each factor in `couplings`."""
    grid = np.linspace(0.0, horizon, npoints)
    errs = []
    for fac in couplings:
        cf = c.with_coupling(c.g * fac)
        exact = exact_reduced_trajectory(cf, rho0, grid)
        m = reduced_model(cf, tmax=1.5 * horizon)
        approx = propagate(m, rho0, grid, mode=mode).states
        errs.append(float(np.max(np.abs(approx - exact))))
    return errs
