"""Second-order time-convolutionless (TCL2) master-equation assembly.

The generator is L{rho} = -i[H, rho] + sum_n ( L_n rho B_n^dag - rho B_n^dag L_n
- L_n B_n rho + B_n rho L_n ) with the second-order operators
B_n(t) = sum_m (A_nm <> L_m)(t), built element-wise in the energy basis by the
Hadamard rule (A <> L)[i,i'] = A(t; w_ii') L[i,i'].

Also provides: the pseudo-Lindblad split -i[H+V, .] + dissipator(D), the
rotating-wave (Lindblad) projection, the effective Hamiltonian with the
damping-kernel split, the adjoint generator, and a direct RK integrator.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
from scipy import integrate
from scipy.integrate import solve_ivp

from . import bath as bath_mod
from .core import (
    SpectralBasis,
    anticommutator_superop,
    apply_superop,
    choi_rearrange,
    commutator_superop,
    dag,
    eig_hermitian,
    herm_part,
    hermiticity_preservation_defect,
    require_hermitian,
    superop_sandwich,
    unvec,
    vec,
)

__all__ = [
    "SystemModel",
    "PseudoLindblad",
    "Trajectory",
    "second_order_operator",
    "build_L2",
    "interaction_L2",
    "pseudo_lindblad",
    "microscopic_pseudo_lindblad",
    "lindblad_form",
    "dissipator_from_coefficients",
    "canonical_coefficient_matrix",
    "rwa_projection",
    "rwa_dissipator",
    "effective_hamiltonian",
    "adjoint_L2",
    "propagate",
]

_GAP_TOL = 1e-9


@dataclass(eq=False)
class SystemModel:
    """System Hamiltonian, Hermitian couplings, and the bath they talk to."""

    h: np.ndarray
    couplings: list
    bath: bath_mod.BathModel

    def __post_init__(self):
        self.h = require_hermitian(np.asarray(self.h, dtype=complex), name="Hamiltonian")
        self.couplings = [
            require_hermitian(np.asarray(l, dtype=complex), name=f"coupling {n}")
            for n, l in enumerate(self.couplings)
        ]
        if self.bath.channels != len(self.couplings):
            raise ValueError(
                f"bath has {self.bath.channels} channels but the model has "
                f"{len(self.couplings)} couplings"
            )

    @property
    def dim(self) -> int:
        return self.h.shape[0]

    @cached_property
    def basis(self) -> SpectralBasis:
        return eig_hermitian(self.h)

    @cached_property
    def couplings_eb(self) -> np.ndarray:
        """Couplings rotated to the energy basis, stacked (n, d, d)."""
        return np.array([self.basis.to_energy_basis(l) for l in self.couplings])

    @cached_property
    def unique_gaps(self) -> np.ndarray:
        """Distinct transition frequencies (absolute tolerance 1e-9)."""
        gaps = np.sort(self.basis.gaps.reshape(-1))
        keep = [gaps[0]]
        for g in gaps[1:]:
            if g - keep[-1] > _GAP_TOL:
                keep.append(g)
        return np.array(keep)

    def gap_key(self, g: float) -> float:
        """Representative of the gap's merge class."""
        u = self.unique_gaps
        return float(u[np.argmin(np.abs(u - g))])


def _coefficient_matrices(m: SystemModel, t) -> dict:
    """A_{nm} matrices per distinct gap; t=None means the stationary limit."""
    out = {}
    for g in m.unique_gaps:
        if t is None:
            out[float(g)] = m.bath.coefficient_stationary(float(g))
        else:
            out[float(g)] = m.bath.coefficient_full(float(t), float(g))
    return out


def _second_order_ops_eb(m: SystemModel, t) -> np.ndarray:
    """B_n = sum_m (A_nm <> L_m) in the energy basis, stacked (n, d, d)."""
    amats = _coefficient_matrices(m, t)
    d = m.dim
    nch = len(m.couplings)
    gaps = m.basis.gaps
    b = np.zeros((nch, d, d), dtype=complex)
    for i in range(d):
        for j in range(d):
            a = amats[m.gap_key(gaps[i, j])]
            b[:, i, j] = a @ m.couplings_eb[:, i, j]
    return b


def second_order_operator(m: SystemModel, t, n: int) -> np.ndarray:
    """(A_{nm} <> L_m)(t) summed over m, in the input basis; t=None: stationary."""
    if t is not None and t < 0:
        raise ValueError("second_order_operator requires t >= 0")
    b = _second_order_ops_eb(m, t)[n]
    return m.basis.from_energy_basis(b)


def _dissipative_superop_eb(m: SystemModel, t) -> np.ndarray:
    """The second-order part of the generator in the energy basis."""
    d = m.dim
    eye = np.eye(d)
    bops = _second_order_ops_eb(m, t)
    s = np.zeros((d * d, d * d), dtype=complex)
    for ln, bn in zip(m.couplings_eb, bops):
        s += superop_sandwich(ln, dag(bn))
        s += superop_sandwich(bn, ln)
        s -= superop_sandwich(ln @ bn, eye)
        s -= superop_sandwich(eye, dag(bn) @ ln)
    return s


def build_L2(m: SystemModel, t=None) -> np.ndarray:
    """Full TCL2 generator -i[H, .] + second-order terms, in the input basis.

    t=None uses the stationary (late-time) coefficients.
    """
    if t is not None and t < 0:
        raise ValueError("build_L2 requires t >= 0")
    u = m.basis.vectors
    s_eb = _dissipative_superop_eb(m, t)
    s = superop_sandwich(u, dag(u)) @ s_eb @ superop_sandwich(dag(u), u)
    return commutator_superop(m.h) + s


def interaction_L2(m: SystemModel, tau: float) -> np.ndarray:
    """Interaction-picture second-order generator G0(-tau) L2(tau) G0(tau)."""
    s_eb = _dissipative_superop_eb(m, tau)
    gaps = m.basis.gaps.reshape(-1)
    phase = np.exp(1j * gaps * tau)
    s_int = (phase[:, None] * s_eb) * np.conj(phase)[None, :]
    u = m.basis.vectors
    return superop_sandwich(u, dag(u)) @ s_int @ superop_sandwich(dag(u), u)


# ---------------------------------------------------------------------------
# pseudo-Lindblad decomposition
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class PseudoLindblad:
    """Split L = -i[H + V, .] + sum_IJ D_IJ (e_I rho e_J^dag - {e_J^dag e_I, rho}/2)."""

    h: np.ndarray
    V: np.ndarray
    D: np.ndarray

    def reassemble(self) -> np.ndarray:
        return commutator_superop(self.h + self.V) + dissipator_from_coefficients(self.D)


def dissipator_from_coefficients(dmat: np.ndarray) -> np.ndarray:
    """Superoperator of sum_IJ D_IJ (e_I rho e_J^dag - {e_J^dag e_I, rho}/2)."""
    d = int(round(np.sqrt(dmat.shape[0])))
    sandwich_part = choi_rearrange(dmat)
    d4 = dmat.reshape(d, d, d, d)
    mop = np.einsum("iaib->ba", d4)
    return sandwich_part - 0.5 * anticommutator_superop(mop)


def canonical_coefficient_matrix(s: np.ndarray) -> np.ndarray:
    """Coefficient matrix of the dissipative part in the traceless gauge.

    Components of the Choi matrix along vec(1) generate commutators and the
    zero map; projecting them out fixes the pseudo-Lindblad gauge.
    """
    d = int(round(np.sqrt(s.shape[0])))
    c = choi_rearrange(s)
    v = vec(np.eye(d)) / np.sqrt(d)
    p = np.eye(d * d) - np.outer(v, v)
    return p @ c @ p


def pseudo_lindblad(s: np.ndarray, h: np.ndarray, tol: float = 1e-10) -> PseudoLindblad:
    """Unique pseudo-Lindblad split of a trace/Hermiticity-preserving generator."""
    defect = hermiticity_preservation_defect(s)
    if defect > tol * max(1.0, float(np.max(np.abs(s)))):
        raise ValueError(
            f"generator is not Hermiticity-preserving (defect {defect:.3e})"
        )
    d = h.shape[0]
    dmat = canonical_coefficient_matrix(s)
    dmat = herm_part(dmat)
    s_rem = s - dissipator_from_coefficients(dmat)
    # remaining map is rho -> W rho + rho W^dag with W = -iK, K Hermitian
    c_rem = choi_rearrange(s_rem)
    w = unvec(c_rem @ vec(np.eye(d)) / d, d)
    w = w - np.trace(w) / d * np.eye(d)
    k = herm_part(1j * w)
    h0 = h - np.trace(h) / d * np.eye(d)
    v = k - h0
    return PseudoLindblad(h=h, V=v, D=dmat)


def lindblad_form(h: np.ndarray, v: np.ndarray, dmat: np.ndarray) -> np.ndarray:
    return commutator_superop(h + v) + dissipator_from_coefficients(dmat)


def microscopic_pseudo_lindblad(m: SystemModel, t=None) -> PseudoLindblad:
    """Paper-route split from the microscopic operators, in the energy basis:

    V = (1/2i) sum_n (L_n B_n - B_n^dag L_n),
    D = sum_n [ outer(vec L_n, conj vec B_n) + outer(vec B_n, conj vec L_n) ].
    """
    bops = _second_order_ops_eb(m, t)
    d = m.dim
    v = np.zeros((d, d), dtype=complex)
    dmat = np.zeros((d * d, d * d), dtype=complex)
    for ln, bn in zip(m.couplings_eb, bops):
        v += (ln @ bn - dag(bn) @ ln) / 2j
        dmat += np.outer(vec(ln), np.conj(vec(bn)))
        dmat += np.outer(vec(bn), np.conj(vec(ln)))
    h_eb = np.diag(m.basis.energies).astype(complex)
    return PseudoLindblad(h=h_eb, V=herm_part(v), D=herm_part(dmat))


def plindblad_kernel_matrix(m: SystemModel) -> np.ndarray:
    """Stationary microscopic D from the coefficient kernel
    A_nm(w_ii') + conj(A_mn(w_jj')) sandwiched by coupling matrix elements."""
    d = m.dim
    gaps = m.basis.gaps
    amats = _coefficient_matrices(m, None)
    nch = len(m.couplings)
    dmat = np.zeros((d * d, d * d), dtype=complex)
    for i in range(d):
        for ip in range(d):
            for j in range(d):
                for jp in range(d):
                    a1 = amats[m.gap_key(gaps[i, ip])]
                    a2 = amats[m.gap_key(gaps[j, jp])]
                    val = 0.0
                    for n in range(nch):
                        for mm in range(nch):
                            kern = a1[n, mm] + np.conj(a2[mm, n])
                            val += (
                                kern
                                * m.couplings_eb[mm, i, ip]
                                * np.conj(m.couplings_eb[n, j, jp])
                            )
                    dmat[i * d + ip, j * d + jp] = val
    return dmat


# ---------------------------------------------------------------------------
# RWA projection
# ---------------------------------------------------------------------------

def _rwa_mask(m: SystemModel, tol: float = _GAP_TOL) -> np.ndarray:
    gaps = m.basis.gaps.reshape(-1)
    return np.abs(gaps[:, None] - gaps[None, :]) <= tol


def rwa_projection(m: SystemModel) -> np.ndarray:
    """Keep only interaction-picture-stationary entries of the dissipative part."""
    s_eb = _dissipative_superop_eb(m, None) * _rwa_mask(m)
    u = m.basis.vectors
    s = superop_sandwich(u, dag(u)) @ s_eb @ superop_sandwich(dag(u), u)
    return commutator_superop(m.h) + s


def rwa_dissipator(m: SystemModel) -> np.ndarray:
    """Coefficient matrix of the RWA dissipator (energy basis, traceless gauge);
    positive semidefinite for stationary baths."""
    s_eb = _dissipative_superop_eb(m, None) * _rwa_mask(m)
    return herm_part(canonical_coefficient_matrix(s_eb))


# ---------------------------------------------------------------------------
# effective Hamiltonian and the damping split
# ---------------------------------------------------------------------------

def _gamma_time(b: bath_mod.BathModel, t: float) -> np.ndarray:
    """Damping kernel gamma(t) in the time domain, per variant."""
    if isinstance(b, bath_mod.WhiteNoise):
        return np.zeros((b.channels, b.channels), dtype=complex)
    if isinstance(b, bath_mod.ExponentialOU):
        return -np.imag(b.c) * np.exp(-b.lam * abs(t)) / b.lam + 0j
    if isinstance(b, bath_mod.ThermalLorentz):
        out = np.zeros((b.channels, b.channels), dtype=complex)
        np.fill_diagonal(out, b.gamma0 * b.cutoff / 2 * np.exp(-b.cutoff * abs(t)))
        return out
    if isinstance(b, bath_mod.Tabulated):
        # gamma(t) = -int_t^inf mu(tau) dtau from the sampled imaginary part
        tf, af = b._fine_grid()
        mu = af.imag
        idx = np.searchsorted(tf, abs(t))
        out = -integrate.simpson(mu[idx:], x=tf[idx:], axis=0)
        return out.astype(complex)
    raise ValueError(
        "damping kernel gamma(0) unavailable: model lacks a frequency cutoff"
    )


def effective_hamiltonian(m: SystemModel, t: float = 0.0):
    """H_eff = H - sum_nm L_n gamma_nm(0) L_m, plus the damping split.

    The dissipation-kernel coefficient int_0^t mu(tau) e^{-iw tau} dtau is
    returned split (per distinct gap w) into damping, renormalizable, and slip
    parts from integration by parts against gamma = the antiderivative of mu.
    """
    g0 = _gamma_time(m.bath, 0.0)
    h_eff = m.h.astype(complex).copy()
    for n, ln in enumerate(m.couplings):
        for mm, lm in enumerate(m.couplings):
            h_eff -= g0[n, mm] * (ln @ lm)
    split = {}
    for g in m.unique_gaps:
        w = float(g)
        gt = _gamma_time(m.bath, t)

        def integrand(tau, i, j, part):
            val = _gamma_time(m.bath, tau)[i, j] * np.exp(-1j * w * tau)
            return val.real if part == "re" else val.imag

        n = m.bath.channels
        big_gamma = np.zeros((n, n), dtype=complex)
        if t > 0:
            for i in range(n):
                for j in range(n):
                    re, _ = integrate.quad(integrand, 0, t, args=(i, j, "re"), limit=200)
                    im, _ = integrate.quad(integrand, 0, t, args=(i, j, "im"), limit=200)
                    big_gamma[i, j] = re + 1j * im
        split[w] = {
            "damping": 1j * w * big_gamma,
            "renormalizable": -g0,
            "slip": gt * np.exp(-1j * w * t),
        }
    return herm_part(h_eff), split


# ---------------------------------------------------------------------------
# adjoint and propagation
# ---------------------------------------------------------------------------

def adjoint_L2(m: SystemModel, t=None) -> np.ndarray:
    """Super-adjoint generator: Tr[X L{rho}] = Tr[L^adj{X} rho]."""
    return dag(build_L2(m, t))


@dataclass(frozen=True)
class Trajectory:
    times: np.ndarray
    states: np.ndarray
    metadata: dict = field(default_factory=dict)


def propagate(
    m: SystemModel,
    rho0: np.ndarray,
    grid,
    mode: str = "stationary",
    rtol: float = 1e-10,
    atol: float = 1e-12,
) -> Trajectory:
    """Integrate the vectorized TCL2 master equation with adaptive RK45."""
    rho0 = np.asarray(rho0, dtype=complex)
    require_hermitian(rho0, tol=1e-10, name="initial state")
    if abs(np.trace(rho0) - 1.0) > 1e-10:
        raise ValueError(f"initial state trace = {np.trace(rho0)!r}, expected 1")
    if float(np.linalg.eigvalsh(herm_part(rho0))[0]) < -1e-10:
        raise ValueError("initial state is not positive semidefinite")
    grid = np.asarray(grid, dtype=float)
    if mode not in ("stationary", "full-time", "full"):
        raise ValueError(f"unknown mode {mode!r}")

    if mode == "stationary":
        s = build_L2(m, None)

        def rhs(t, y):
            return s @ y
    else:
        cache = {}

        def rhs(t, y):
            key = float(t)
            if key not in cache:
                if len(cache) > 4096:
                    cache.clear()
                cache[key] = build_L2(m, max(t, 0.0))
            return cache[key] @ y

    sol = solve_ivp(
        rhs,
        (grid[0], grid[-1]),
        vec(rho0),
        t_eval=grid,
        method="RK45",
        rtol=rtol,
        atol=atol,
    )
    if not sol.success:
        raise RuntimeError(f"integrator failed: {sol.message}")
    states = np.array([unvec(y, m.dim) for y in sol.y.T])
    return Trajectory(
        times=grid,
        states=states,
        metadata={"integrator": "RK45", "rtol": rtol, "atol": atol, "mode": mode},
    )
