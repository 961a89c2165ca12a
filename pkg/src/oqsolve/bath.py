"""Environmental correlation functions and their transforms.

A bath model supplies the multivariate correlation function alpha_{nm}(t)
(stationary, Hermitian: alpha(-t) = alpha(t)^dag) together with

* its spectrum          alpha~(w)  = int e^{-iwt} alpha(t) dt,
* its Laplace transform alpha^(s)  = int_0^inf e^{-st} alpha(t) dt,
* the stationary master-equation coefficients  A(w) = alpha^(iw + 0+),
* the finite-time coefficients  A(t; w) = int_0^t alpha(tau) e^{-iw tau} dtau.

Variants: WhiteNoise (delta correlation), ExponentialOU (c e^{-lam|t|}),
ThermalLorentz (thermal state with Lorentzian damping kernel
gamma~(w) = gamma0 / (1 + (w/Lam)^2), evaluated by Matsubara summation with
digamma closed forms), and Tabulated (sampled data on a uniform grid).

Real decomposition alpha = nu + i mu with damping kernel mu~ = i w gamma~;
diagnostics: KMS symmetry, fluctuation-dissipation inequality, FDR kernel.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field

import numpy as np
from scipy import integrate, linalg, special
from scipy.interpolate import CubicSpline

from . import accel

__all__ = [
    "BathModel",
    "WhiteNoise",
    "ExponentialOU",
    "ThermalLorentz",
    "Tabulated",
    "KernelTriple",
    "alpha_time",
    "alpha_spectrum",
    "laplace_alpha",
    "coefficient_stationary",
    "coefficient_full",
    "kernels",
    "kms_residual",
    "fdi_check",
    "fdr_kernel",
    "sampled_positivity",
    "tanh_series",
    "gamma_from_nu_tanh",
]

_MATSUBARA_TERMS = 120_000
_STOP_RTOL = 1e-13
_STOP_KMIN = 4


class BathModel:
    """Common interface; concrete variants implement the per-pair evaluators."""

    channels: int

    # -- required per variant -------------------------------------------------
    def alpha_time(self, t: float) -> np.ndarray:
        raise NotImplementedError

    def alpha_spectrum(self, w: float) -> np.ndarray:
        raise NotImplementedError

    def laplace(self, s: complex) -> np.ndarray:
        raise NotImplementedError

    def coefficient_full(self, t: float, w: float) -> np.ndarray:
        raise NotImplementedError

    # -- generic --------------------------------------------------------------
    def coefficient_stationary(self, w: float) -> np.ndarray:
        return self.laplace(1j * w)

    def gamma_spectrum(self, w: float) -> np.ndarray:
        """Damping kernel gamma~(w) = mu~(w)/(iw); w=0 taken as a limit."""
        weff = w if abs(w) > 1e-7 * self._freq_scale() else 1e-7 * self._freq_scale()
        mu = (self.alpha_spectrum(weff) - np.conj(self.alpha_spectrum(-weff))) / 2j
        return mu / (1j * weff)

    def _freq_scale(self) -> float:
        return 1.0

    def is_thermal(self) -> bool:
        return False


# ---------------------------------------------------------------------------
# white noise
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class WhiteNoise(BathModel):
    """Delta correlation alpha(t) = c delta(t), c real symmetric positive."""

    c: np.ndarray

    def __post_init__(self):
        c = np.atleast_2d(np.asarray(self.c, dtype=float))
        if np.max(np.abs(c - c.T)) > 1e-12 * max(1.0, np.max(np.abs(c))):
            raise ValueError("white-noise correlation matrix must be symmetric")
        object.__setattr__(self, "c", c)

    @property
    def channels(self) -> int:
        return self.c.shape[0]

    def alpha_time(self, t: float) -> np.ndarray:
        if t == 0.0:
            raise ValueError("delta correlation is singular at t = 0")
        return np.zeros_like(self.c, dtype=complex)

    def alpha_spectrum(self, w: float) -> np.ndarray:
        return self.c.astype(complex)

    def laplace(self, s: complex) -> np.ndarray:
        # boundary half-weight convention: int_0^t delta(tau) dtau = 1/2
        return self.c.astype(complex) / 2.0

    def coefficient_full(self, t: float, w: float) -> np.ndarray:
        if t == 0.0:
            return np.zeros_like(self.c, dtype=complex)
        return self.c.astype(complex) / 2.0

    def gamma_spectrum(self, w: float) -> np.ndarray:
        return np.zeros_like(self.c, dtype=complex)


# ---------------------------------------------------------------------------
# exponential (Ornstein-Uhlenbeck) correlation
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ExponentialOU(BathModel):
    """alpha(t) = c e^{-lam |t|} for t >= 0 with c Hermitian positive."""

    c: np.ndarray
    lam: float

    def __post_init__(self):
        c = np.atleast_2d(np.asarray(self.c, dtype=complex))
        if np.max(np.abs(c - np.conj(c).T)) > 1e-12 * max(1.0, np.max(np.abs(c))):
            raise ValueError("OU correlation matrix must be Hermitian")
        if self.lam <= 0:
            raise ValueError("OU decay rate must be positive")
        object.__setattr__(self, "c", c)

    @property
    def channels(self) -> int:
        return self.c.shape[0]

    def _freq_scale(self) -> float:
        return self.lam

    def alpha_time(self, t: float) -> np.ndarray:
        if t >= 0:
            return self.c * np.exp(-self.lam * t)
        return np.conj(self.alpha_time(-t)).T

    def alpha_spectrum(self, w: float) -> np.ndarray:
        return self.c * 2 * self.lam / (self.lam**2 + w**2)

    def laplace(self, s: complex) -> np.ndarray:
        if abs(s + self.lam) < 1e-12 * self.lam:
            raise ValueError(f"Laplace transform pole at s = {-self.lam}")
        return self.c / (self.lam + s)

    def coefficient_full(self, t: float, w: float) -> np.ndarray:
        p = self.lam + 1j * w
        return self.c * (1.0 - np.exp(-p * t)) / p


# ---------------------------------------------------------------------------
# thermal bath with Lorentzian damping kernel
# ---------------------------------------------------------------------------

def _as_channel_array(x, n: int, name: str) -> np.ndarray:
    arr = np.atleast_1d(np.asarray(x, dtype=float))
    if arr.size == 1:
        arr = np.full(n, arr[0])
    if arr.size != n:
        raise ValueError(f"{name} must be scalar or length-{n}")
    return arr


class _ThermalChannelT0:
    """Zero-temperature channel: spectrum 2|w| gamma~(w) on w < 0."""

    def __init__(self, gamma0: float, cutoff: float):
        self.gamma0 = gamma0
        self.cutoff = cutoff

    def gamma_tilde(self, w: float) -> float:
        return self.gamma0 / (1.0 + (w / self.cutoff) ** 2)

    def spectrum(self, w: float) -> complex:
        if w >= 0:
            return 0.0 + 0.0j
        return 2.0 * abs(w) * self.gamma_tilde(w)

    def alpha_time(self, t: float) -> complex:
        # (gamma0 Lam^2 / 2 pi) [e^{Lt} E1(Lt) - e^{-Lt} Ei(Lt)] - i (gamma0 Lam^2/2) e^{-Lt}
        g0, lam = self.gamma0, self.cutoff
        if t == 0.0:
            raise ValueError("zero-temperature correlation diverges at t = 0")
        x = lam * abs(t)
        re = (g0 * lam**2 / (2 * np.pi)) * (
            np.exp(x) * special.exp1(x) - np.exp(-x) * special.expi(x)
        )
        im = -(g0 * lam**2 / 2) * np.exp(-x)
        val = re + 1j * im
        return val if t > 0 else np.conj(val)

    def laplace(self, s: complex) -> complex:
        # alpha^(s) = (1/2pi) int_0^inf 2 u gamma~(u) / (s + i u) du
        lam = self.cutoff
        upper = 1000.0 * max(lam, abs(s), 1.0)

        def integrand(u, part):
            v = 2 * u * self.gamma_tilde(-u) / (s + 1j * u) / (2 * np.pi)
            return v.real if part == "re" else v.imag

        pts = [lam, 10 * lam]
        re, _ = integrate.quad(integrand, 0, upper, args=("re",), limit=400, points=pts)
        im, _ = integrate.quad(integrand, 0, upper, args=("im",), limit=400, points=pts)
        # analytic 1/u^2 tail beyond the finite interval
        tail = -1j * (self.gamma0 * lam**2 / np.pi) * (
            1.0 / upper + 1j * s / (2 * upper**2)
        )
        return re + 1j * im + tail

    def coefficient_stationary(self, w: float) -> complex:
        # He part = alpha~(w)/2 exactly; An part is the principal-value integral
        he = 0.5 * self.spectrum(w).real

        def pv_integrand(u):
            # alpha~(-u)/( -u - w ), u > 0
            return self.spectrum(-u).real / (-u - w) / (2 * np.pi)

        if w < 0:
            a = -w  # pole at u = -w inside the domain
            inner, _ = integrate.quad(
                lambda u: self.spectrum(-u).real / (2 * np.pi),
                max(a / 2, a - 1.0), min(2 * a, a + 1.0),
                weight="cauchy", wvar=a,
            )
            inner = -inner  # 1/(-u - w) = -1/(u - a)
            lo, _ = integrate.quad(pv_integrand, 0, max(a / 2, a - 1.0), limit=400)
            hi, _ = integrate.quad(pv_integrand, min(2 * a, a + 1.0), np.inf, limit=400)
            pv = lo + inner + hi
        else:
            pv, _ = integrate.quad(pv_integrand, 0, np.inf, limit=400)
        return he + 1j * pv

    def coefficient_full(self, t: float, w: float) -> complex:
        # A(t;w) = (1/2pi) int_0^inf 2 u gamma~(u) (1 - e^{-i(w+u)t}) / (i(w+u)) du
        if t == 0.0:
            return 0.0 + 0.0j

        lam = self.cutoff
        upper = 2000.0 * max(lam, abs(w), 1.0)

        def integrand(u, part):
            p = 1j * (w + u)
            if abs(p) < 1e-12:
                v = 2 * u * self.gamma_tilde(-u) * t / (2 * np.pi)
            else:
                v = 2 * u * self.gamma_tilde(-u) * (1 - np.exp(-p * t)) / p / (2 * np.pi)
            return v.real if part == "re" else v.imag

        pts = [lam, 10 * lam]
        re, _ = integrate.quad(integrand, 0, upper, args=("re",), limit=800, points=pts)
        im, _ = integrate.quad(integrand, 0, upper, args=("im",), limit=800, points=pts)
        tail = -1j * (self.gamma0 * lam**2 / np.pi) / upper
        return re + 1j * im + tail


class _ThermalChannel:
    """Finite-temperature channel via Matsubara exponential sums.

    alpha(t) = c0 e^{-Lam t} + sum_k ck e^{-nu_k t},  nu_k = 2 pi T k, with
    c0 = (gamma0 Lam^2 / 2)(cot(Lam/2T) - i) and
    ck = -2 gamma0 T Lam^2 nu_k / (Lam^2 - nu_k^2).
    """

    def __init__(self, gamma0: float, cutoff: float, temperature: float):
        self.gamma0 = gamma0
        self.temperature = temperature
        # nudge the cutoff off any Matsubara frequency (spurious double pole)
        a = 2 * np.pi * temperature
        k_near = round(cutoff / a)
        if k_near >= 1 and abs(cutoff - a * k_near) < 1e-10 * cutoff:
            cutoff = cutoff * (1 + 1e-8)
        self.cutoff = cutoff
        self._terms = None

    def gamma_tilde(self, w: float) -> float:
        return self.gamma0 / (1.0 + (w / self.cutoff) ** 2)

    def spectrum(self, w: float) -> complex:
        g0, T = self.gamma0, self.temperature
        gt = self.gamma_tilde(w)
        if abs(w) < 1e-6 * T:
            # w coth(w/2T) = 2T + w^2/(6T) + O(w^4)
            return gt * (2 * T + w * w / (6 * T) - w)
        # w (coth(w/2T) - 1) = 2w / (e^{w/T} - 1), stable for w >> T
        return gt * 2.0 * w / np.expm1(w / T)

    def terms(self):
        if self._terms is None:
            g0, lam, T = self.gamma0, self.cutoff, self.temperature
            a = 2 * np.pi * T
            k = np.arange(1, _MATSUBARA_TERMS + 1)
            nu = a * k
            c = np.empty(_MATSUBARA_TERMS + 1, dtype=complex)
            z = np.empty(_MATSUBARA_TERMS + 1, dtype=complex)
            c[0] = (g0 * lam**2 / 2) * (np.cos(lam / (2 * T)) / np.sin(lam / (2 * T)) - 1j)
            z[0] = lam
            c[1:] = -2 * g0 * T * lam**2 * nu / (lam**2 - nu**2)
            z[1:] = nu
            self._terms = (c, z)
        return self._terms

    def alpha_time_many(self, t: np.ndarray) -> np.ndarray:
        t = np.asarray(t, dtype=float)
        if np.any(t == 0.0):
            raise ValueError(
                "thermal correlation is logarithmically divergent at t = 0"
            )
        c, z = self.terms()
        out = np.empty(t.shape, dtype=complex)
        pos = t > 0
        if np.any(pos):
            out[pos] = accel.exp_sum_eval(c, z, t[pos], _STOP_RTOL, _STOP_KMIN)
        if np.any(~pos):
            out[~pos] = np.conj(
                accel.exp_sum_eval(c, z, -t[~pos], _STOP_RTOL, _STOP_KMIN)
            )
        return out

    def laplace(self, s: complex) -> complex:
        """Closed form of the Matsubara sum via digamma functions."""
        g0, lam, T = self.gamma0, self.cutoff, self.temperature
        a = 2 * np.pi * T
        s = complex(s)
        for pole in (-lam, -a):
            if abs(s - pole) < 1e-12 * max(lam, a):
                raise ValueError(f"Laplace transform pole at s = {pole}")
        if abs(s.real + a * round(-s.real / a)) < 1e-12 * a and abs(s.imag) < 1e-12 * a \
                and s.real < -0.5 * a:
            raise ValueError(f"Laplace transform pole near s = {s}")
        # avoid the spurious partial-fraction poles at s = +-Lam
        for sp in (lam, -lam):
            if abs(s - sp) < 1e-9 * lam and abs(s - sp) > 0:
                s = sp + 1e-9 * lam * (s - sp) / abs(s - sp)
            elif s == sp and sp == lam:
                pass  # s = +Lam is regular for the exact sum; nudge below
        if abs(s - lam) == 0:
            s = lam * (1 + 1e-9)
        c0 = (g0 * lam**2 / 2) * (np.cos(lam / (2 * T)) / np.sin(lam / (2 * T)) - 1j)
        A = 1.0 / (2 * (lam + s))
        B = 1.0 / (2 * (lam - s))
        C = -s / (lam**2 - s**2)
        psi = special.digamma
        ssum = (
            (A / a) * psi(1 - lam / a)
            - (B / a) * psi(1 + lam / a)
            - (C / a) * psi(1 + s / a)
        )
        return c0 / (lam + s) - 2 * g0 * T * lam**2 * ssum

    def coefficient_full(self, t: float, w: float) -> complex:
        if t == 0.0:
            return 0.0 + 0.0j
        if t < 0:
            raise ValueError("coefficient_full requires t >= 0")
        c, z = self.terms()
        a = 2 * np.pi * self.temperature
        if a * _MATSUBARA_TERMS * t < 5.0:
            # near t=0 the direct form has truncation error O(t log t) -> 0
            out = accel.coeff_full_eval(
                c, z, 1j * w, np.array([t]), _STOP_RTOL, _STOP_KMIN
            )
            return complex(out[0])
        rem = accel.exp_shift_div_eval(
            c, z, 1j * w, np.array([t]), _STOP_RTOL, _STOP_KMIN
        )
        return complex(self.laplace(1j * w) - rem[0])


@dataclass(frozen=True)
class ThermalLorentz(BathModel):
    """Channel-diagonal thermal bath with Lorentzian damping kernel."""

    gamma0: np.ndarray
    cutoff: np.ndarray
    temperature: np.ndarray
    n_channels: int = 1
    _impl: list = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        n = self.n_channels
        g0 = _as_channel_array(self.gamma0, n, "gamma0")
        lam = _as_channel_array(self.cutoff, n, "cutoff")
        T = _as_channel_array(self.temperature, n, "temperature")
        if np.any(lam <= 0):
            raise ValueError("cutoff must be positive")
        if np.any(g0 < 0) or np.any(T < 0):
            raise ValueError("gamma0 and temperature must be non-negative")
        impl = [
            _ThermalChannel(g0[i], lam[i], T[i]) if T[i] > 0
            else _ThermalChannelT0(g0[i], lam[i])
            for i in range(n)
        ]
        object.__setattr__(self, "gamma0", g0)
        object.__setattr__(self, "cutoff", lam)
        object.__setattr__(self, "temperature", T)
        object.__setattr__(self, "_impl", impl)

    @property
    def channels(self) -> int:
        return self.n_channels

    def is_thermal(self) -> bool:
        return True

    def _freq_scale(self) -> float:
        return float(np.max(self.cutoff))

    def _diag(self, values) -> np.ndarray:
        out = np.zeros((self.n_channels, self.n_channels), dtype=complex)
        np.fill_diagonal(out, values)
        return out

    def alpha_time(self, t: float) -> np.ndarray:
        vals = []
        for ch in self._impl:
            if isinstance(ch, _ThermalChannel):
                vals.append(ch.alpha_time_many(np.array([t]))[0])
            else:
                vals.append(ch.alpha_time(t))
        return self._diag(vals)

    def alpha_spectrum(self, w: float) -> np.ndarray:
        return self._diag([ch.spectrum(w) for ch in self._impl])

    def laplace(self, s: complex) -> np.ndarray:
        return self._diag([ch.laplace(s) for ch in self._impl])

    def coefficient_stationary(self, w: float) -> np.ndarray:
        vals = []
        for ch in self._impl:
            if isinstance(ch, _ThermalChannelT0):
                vals.append(ch.coefficient_stationary(w))
            else:
                vals.append(ch.laplace(1j * w))
        return self._diag(vals)

    def coefficient_full(self, t: float, w: float) -> np.ndarray:
        return self._diag([ch.coefficient_full(t, w) for ch in self._impl])

    def gamma_spectrum(self, w: float) -> np.ndarray:
        return self._diag([ch.gamma_tilde(w) for ch in self._impl])

    def gamma_time_zero(self) -> np.ndarray:
        """Equal-time damping kernel gamma(0) = gamma0 Lam / 2 per channel."""
        return self._diag(self.gamma0 * self.cutoff / 2)


# ---------------------------------------------------------------------------
# tabulated correlation data
# ---------------------------------------------------------------------------

class Tabulated(BathModel):
    """Correlation samples alpha_{nm}(t_k) on a uniform grid starting at 0."""

    def __init__(self, times: np.ndarray, samples: np.ndarray):
        times = np.asarray(times, dtype=float)
        samples = np.asarray(samples, dtype=complex)
        if samples.ndim == 1:
            samples = samples[:, None, None]
        if times.ndim != 1 or times[0] != 0.0:
            raise ValueError("tabulated grid must be 1-D and start at t = 0")
        dt = np.diff(times)
        if times.size < 4 or np.max(np.abs(dt - dt[0])) > 1e-9 * dt[0]:
            raise ValueError("tabulated grid must be uniform with >= 4 points")
        if samples.shape[0] != times.size or samples.shape[1] != samples.shape[2]:
            raise ValueError("samples must have shape (nt, n, n)")
        self.times = times
        self.samples = samples
        self.n = samples.shape[1]
        self._spline = CubicSpline(times, samples, axis=0)
        self._coeff_cache: dict[float, CubicSpline] = {}
        self._fine = None
        self.tail_ok, self._tail_a, self._tail_z = self._fit_tail()

    @property
    def channels(self) -> int:
        return self.n

    def _freq_scale(self) -> float:
        return 1.0 / (self.times[1] - self.times[0])

    def _fit_tail(self):
        """Least-squares exponential fit on the last samples for the Laplace tail."""
        m = min(6, self.times.size // 2)
        t = self.times[-m:]
        a = np.zeros((self.n, self.n), dtype=complex)
        z = np.zeros((self.n, self.n), dtype=complex)
        ok = True
        for i in range(self.n):
            for j in range(self.n):
                y = self.samples[-m:, i, j]
                if np.min(np.abs(y)) < 1e-300 or np.max(np.abs(y)) < 1e-14 * np.max(
                    np.abs(self.samples[:, i, j]) if np.any(self.samples[:, i, j]) else [1.0]
                ):
                    continue  # decayed to zero; no tail needed
                ratios = np.log(y[1:] / y[:-1]) / np.diff(t)
                zij = -np.mean(ratios)
                if zij.real <= 0 or np.std(ratios.real) > 0.2 * abs(zij.real):
                    ok = False
                    continue
                z[i, j] = zij
                a[i, j] = y[-1] * np.exp(zij * t[-1])
        return ok, a, z

    def alpha_time(self, t: float) -> np.ndarray:
        if t < 0:
            return np.conj(self.alpha_time(-t)).T
        if t > self.times[-1] * (1 + 1e-12):
            raise ValueError(
                f"query t = {t} outside tabulated grid [0, {self.times[-1]}]"
            )
        return self._spline(min(t, self.times[-1]))

    def _fine_grid(self):
        if self._fine is None:
            refine = 4
            nt = (self.times.size - 1) * refine + 1
            tf = np.linspace(0.0, self.times[-1], nt)
            self._fine = (tf, self._spline(tf))
        return self._fine

    def laplace(self, s: complex) -> np.ndarray:
        tf, af = self._fine_grid()
        w = np.exp(-s * tf)[:, None, None]
        val = integrate.simpson(af * w, x=tf, axis=0)
        # exponential tail beyond the grid
        tail = np.zeros_like(val)
        mask = self._tail_z.real > 0
        if np.any(mask):
            zt = self._tail_z + s
            with np.errstate(divide="ignore", invalid="ignore"):
                full = self._tail_a * np.exp(-zt * self.times[-1]) / zt
            tail[mask] = full[mask]
        return val + tail

    def alpha_spectrum(self, w: float) -> np.ndarray:
        f = self.laplace(1j * w)
        return f + np.conj(f).T

    def coefficient_full(self, t: float, w: float) -> np.ndarray:
        if t < 0:
            raise ValueError("coefficient_full requires t >= 0")
        key = round(float(w), 12)
        if key not in self._coeff_cache:
            tf, af = self._fine_grid()
            integrand = af * np.exp(-1j * w * tf)[:, None, None]
            cum = integrate.cumulative_trapezoid(integrand, x=tf, axis=0, initial=0.0)
            self._coeff_cache[key] = CubicSpline(tf, cum, axis=0)
        if t > self.times[-1] * (1 + 1e-12):
            raise ValueError(
                f"query t = {t} outside tabulated grid [0, {self.times[-1]}]"
            )
        return self._coeff_cache[key](min(t, self.times[-1]))

    # -- CSV round-trip ------------------------------------------------------

    def to_csv(self, path) -> None:
        header = ["t"]
        for i in range(self.n):
            for j in range(self.n):
                header += [f"re_alpha_{i}_{j}", f"im_alpha_{i}_{j}"]
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(header)
            for k, t in enumerate(self.times):
                row = [repr(float(t))]
                for i in range(self.n):
                    for j in range(self.n):
                        row += [
                            repr(float(self.samples[k, i, j].real)),
                            repr(float(self.samples[k, i, j].imag)),
                        ]
                writer.writerow(row)

    @classmethod
    def from_csv(cls, path) -> "Tabulated":
        with open(path, newline="") as fh:
            reader = csv.reader(fh)
            header = next(reader)
            rows = [[float(x) for x in row] for row in reader if row]
        if not header or header[0].strip() != "t":
            raise ValueError("tabulated CSV must start with a 't' column")
        pairs = []
        for k in range(1, len(header), 2):
            name = header[k].strip()
            if not name.startswith("re_alpha_"):
                raise ValueError(f"unexpected column name {name!r}")
            _, _, i, j = name.split("_")
            pairs.append((int(i), int(j)))
        n = max(max(p) for p in pairs) + 1
        data = np.asarray(rows)
        times = data[:, 0]
        samples = np.zeros((times.size, n, n), dtype=complex)
        for idx, (i, j) in enumerate(pairs):
            samples[:, i, j] = data[:, 1 + 2 * idx] + 1j * data[:, 2 + 2 * idx]
        return cls(times, samples)


# ---------------------------------------------------------------------------
# module-level operations
# ---------------------------------------------------------------------------

def alpha_time(b: BathModel, t: float) -> np.ndarray:
    return b.alpha_time(t)


def alpha_spectrum(b: BathModel, w: float) -> np.ndarray:
    return b.alpha_spectrum(w)


def laplace_alpha(b: BathModel, s: complex) -> np.ndarray:
    if np.real(s) < -1e-12:
        raise ValueError("laplace_alpha requires Re s >= 0")
    return b.laplace(s)


def coefficient_stationary(b: BathModel, w: float) -> np.ndarray:
    return b.coefficient_stationary(w)


def coefficient_full(b: BathModel, t: float, w: float) -> np.ndarray:
    if t < 0:
        raise ValueError("coefficient_full requires t >= 0")
    return b.coefficient_full(t, w)


@dataclass(frozen=True)
class KernelTriple:
    """nu~, mu~, gamma~ on a frequency grid, each with shape (nw, n, n)."""

    wgrid: np.ndarray
    nu: np.ndarray
    mu: np.ndarray
    gamma: np.ndarray


def kernels(b: BathModel, wgrid) -> KernelTriple:
    """Real kernel decomposition in the frequency domain.

    nu~(w) = (alpha~(w) + conj(alpha~(-w)))/2,
    mu~(w) = (alpha~(w) - conj(alpha~(-w)))/2i,  gamma~(w) = mu~(w)/(iw).
    """
    wgrid = np.atleast_1d(np.asarray(wgrid, dtype=float))
    nu, mu, gam = [], [], []
    for w in wgrid:
        ap = b.alpha_spectrum(w)
        am = np.conj(b.alpha_spectrum(-w))
        nu.append((ap + am) / 2)
        mu.append((ap - am) / 2j)
        gam.append(b.gamma_spectrum(w))
    return KernelTriple(wgrid, np.array(nu), np.array(mu), np.array(gam))


def kms_residual(b: BathModel, wgrid) -> float:
    """Max residual of alpha~(+w) = e^{-w/T} conj(alpha~(-w)) over the grid.

    Thermal models pass within roundoff; other variants get an informative
    (generally nonzero) number.  At T = 0 the detailed-balance factor
    degenerates and the zero-temperature spectrum rule is checked instead.
    """
    wgrid = np.atleast_1d(np.asarray(wgrid, dtype=float))
    if b.is_thermal() and np.any(b.temperature == 0):
        res = 0.0
        for w in wgrid:
            sp = b.alpha_spectrum(w)
            for i, ch in enumerate(b._impl):
                want = 0.0 if w >= 0 else 2 * abs(w) * ch.gamma_tilde(w)
                res = max(res, abs(sp[i, i] - want))
        scale = max(abs(b.alpha_spectrum(w)).max() for w in wgrid)
        return res / max(scale, 1e-300)
    if b.is_thermal():
        T = float(b.temperature[0])
    else:
        T = 1.0  # informative only
    res = 0.0
    scale = 0.0
    for w in wgrid:
        ap = b.alpha_spectrum(w)
        am = np.conj(b.alpha_spectrum(-w))
        scale = max(scale, float(np.max(np.abs(ap))))
        if w / T > 700:
            continue  # underflowing Boltzmann factor
        res = max(res, float(np.max(np.abs(ap - am * np.exp(-w / T)))))
    return res / max(scale, 1e-300)


def fdi_check(b: BathModel, wgrid) -> float:
    """Fluctuation-dissipation inequality: min eig(nu~ -+ w gamma~) over grid."""
    trip = kernels(b, wgrid)
    best = np.inf
    for w, nu, gam in zip(trip.wgrid, trip.nu, trip.gamma):
        nuh = (nu + np.conj(nu).T) / 2
        gh = (gam + np.conj(gam).T) / 2
        for sign in (+1.0, -1.0):
            best = min(best, float(np.linalg.eigvalsh(nuh - sign * w * gh)[0]))
    return best


def fdr_kernel(b: BathModel, w: float) -> np.ndarray:
    """FDR kernel kappa~ with nu~ = (gamma~ kappa~ + kappa~ gamma~)/2 symmetrized."""
    trip = kernels(b, [w])
    nu, gam = trip.nu[0], trip.gamma[0]
    if b.channels == 1:
        g = complex(gam[0, 0])
        if abs(g) < 1e-300:
            raise ValueError("singular damping kernel: gamma~(w) = 0")
        return nu / g
    gh = (gam + np.conj(gam).T) / 2
    if np.min(np.abs(np.linalg.eigvalsh(gh))) < 1e-12 * np.max(np.abs(gh)):
        raise ValueError("singular damping kernel matrix")
    return linalg.solve_continuous_lyapunov(gh, 2 * np.asarray(nu))


def sampled_positivity(b: BathModel, tgrid) -> float:
    """Min eigenvalue of the block matrix [alpha(t_i - t_j)] over the grid."""
    tgrid = np.asarray(tgrid, dtype=float)
    n = b.channels
    m = tgrid.size
    big = np.zeros((m * n, m * n), dtype=complex)
    for i in range(m):
        for j in range(m):
            big[i * n:(i + 1) * n, j * n:(j + 1) * n] = b.alpha_time(
                tgrid[i] - tgrid[j]
            )
    big = (big + np.conj(big).T) / 2
    return float(np.linalg.eigvalsh(big)[0])


def tanh_series(x: float, kmax: int = 20000) -> float:
    """Rational expansion tanh(x) = sum_k 2x/(x^2 + (k-1/2)^2 pi^2), with an
    integral correction for the truncated tail."""
    if x == 0:
        return 0.0
    if x < 0:
        return -tanh_series(-x, kmax)
    k = np.arange(1, kmax + 1)
    s = np.sum(2 * x / (x * x + (k - 0.5) ** 2 * np.pi**2))
    tail = (2 / np.pi) * (np.pi / 2 - np.arctan(np.pi * kmax / x))
    return float(s + tail)


def gamma_from_nu_tanh(b: BathModel, w: float) -> np.ndarray:
    """Damping kernel reconstructed from the noise kernel through the thermal
    FDR, with tanh evaluated by its rational expansion."""
    if not b.is_thermal():
        raise ValueError("tanh reconstruction requires a thermal model")
    trip = kernels(b, [w])
    nu = trip.nu[0]
    T = float(b.temperature[0])
    if w == 0:
        return nu / (2 * T)
    return nu * tanh_series(w / (2 * T)) / w
