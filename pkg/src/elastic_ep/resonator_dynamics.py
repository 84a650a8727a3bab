"""Cavity response to a transient intracavity phase shift.

Two routes give the field after an electron passage:

* :func:`transient_recursion` steps the exact delay-line map
  ``E4(t) = i kappa E1 + x exp(i dphi(t)) E4(t - T_R)`` on a grid whose step
  divides the round-trip time. It is the reference.
* :func:`transient_closed_form` sums the echo series
  ``dE4(t) = E4_s sum_n x^(n+1) (exp(i dphi(t - n T_R)) - 1)``, which drops
  the product of two small deviations and so is accurate to first order.

Time zero is the electron passage; waveforms start at ``t_start = 0`` unless
told otherwise.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Tuple, Union

import numpy as np
from scipy.integrate import trapezoid

from .errors import DtNotCommensurate, GridTooCoarse, WaveformTooStrong, WindowTooShort
from .resonator_statics import ResonatorParams, buildup_derivative, steady_fields

DEFAULT_GUARD = 0.1
SERIES_CUTOFF = 1e-12
RELAX_LIFETIMES = 20.0
DEFAULT_STEPS_PER_ROUND_TRIP = 20
EDGE_TOL = 1e-9


# -- waveforms -----------------------------------------------------------------

@dataclass(frozen=True)
class RectPulse:
    """Constant shift ``delta_phi`` for t_start <= t < t_start + T_int."""

    delta_phi: float
    T_int: float
    t_start: float = 0.0

    def __post_init__(self):
        if not self.T_int > 0:
            raise ValueError("T_int must be > 0")

    def __call__(self, t) -> np.ndarray:
        t = np.asarray(t, dtype=float)
        # edges get a relative slack so grid points that should sit exactly on
        # them are not flipped by rounding
        tol = EDGE_TOL * self.T_int
        on = (t >= self.t_start - tol) & (t < self.t_start + self.T_int - tol)
        return np.where(on, self.delta_phi, 0.0)

    @property
    def support(self) -> Tuple[float, float]:
        return self.t_start, self.t_start + self.T_int

    @property
    def max_abs(self) -> float:
        return abs(self.delta_phi)

    @property
    def integral(self) -> float:
        return self.delta_phi * self.T_int

    def scaled(self, s: float) -> "RectPulse":
        return RectPulse(self.delta_phi * s, self.T_int, self.t_start)


@dataclass(frozen=True)
class GaussianPulse:
    """Gaussian phase shift of height ``peak`` and full width ``fwhm``, cut at ``n_sigma``."""

    peak: float
    fwhm: float
    t0: float = 0.0
    n_sigma: float = 8.0

    def __post_init__(self):
        if not self.fwhm > 0:
            raise ValueError("fwhm must be > 0")

    @property
    def sigma(self) -> float:
        return self.fwhm / (2.0 * math.sqrt(2.0 * math.log(2.0)))

    def __call__(self, t) -> np.ndarray:
        t = np.asarray(t, dtype=float)
        u = (t - self.t0) / self.sigma
        return np.where(np.abs(u) <= self.n_sigma, self.peak * np.exp(-0.5 * u * u), 0.0)

    @property
    def support(self) -> Tuple[float, float]:
        half = self.n_sigma * self.sigma
        return self.t0 - half, self.t0 + half

    @property
    def max_abs(self) -> float:
        return abs(self.peak)

    @property
    def integral(self) -> float:
        return self.peak * self.sigma * math.sqrt(2.0 * math.pi) * math.erf(self.n_sigma / math.sqrt(2.0))

    def scaled(self, s: float) -> "GaussianPulse":
        return GaussianPulse(self.peak * s, self.fwhm, self.t0, self.n_sigma)


@dataclass(frozen=True, eq=False)
class SampledWaveform:
    """Phase shift sampled on a uniform grid, linearly interpolated and zero outside."""

    t: np.ndarray
    delta_phi: np.ndarray

    def __post_init__(self):
        t = np.array(self.t, dtype=float).reshape(-1)
        d = np.array(self.delta_phi, dtype=float).reshape(-1)
        if t.size < 2 or t.size != d.size:
            raise ValueError("sampled waveform needs matching t and delta_phi arrays of length >= 2")
        dt = np.diff(t)
        if np.any(dt <= 0) or not np.allclose(dt, dt[0], rtol=1e-9, atol=0):
            raise ValueError("sampled waveform grid must be uniform and increasing")
        t.setflags(write=False)
        d.setflags(write=False)
        object.__setattr__(self, "t", t)
        object.__setattr__(self, "delta_phi", d)

    def __call__(self, t) -> np.ndarray:
        return np.interp(np.asarray(t, dtype=float), self.t, self.delta_phi, left=0.0, right=0.0)

    @property
    def support(self) -> Tuple[float, float]:
        return float(self.t[0]), float(self.t[-1])

    @property
    def max_abs(self) -> float:
        return float(np.max(np.abs(self.delta_phi)))

    @property
    def integral(self) -> float:
        return float(trapezoid(self.delta_phi, self.t))

    def scaled(self, s: float) -> "SampledWaveform":
        return SampledWaveform(self.t, self.delta_phi * s)


WAVEFORM_CSV_HEADER = ("t_s", "dphi_rad")


def load_waveform_csv(path: Union[str, Path]) -> SampledWaveform:
    path = Path(path)
    lines = [ln for ln in path.read_text().splitlines() if ln.strip()]
    if not lines or tuple(h.strip() for h in lines[0].split(",")) != WAVEFORM_CSV_HEADER:
        raise ValueError(f"{path}: expected header {','.join(WAVEFORM_CSV_HEADER)}")
    data = np.array([[float(v) for v in ln.split(",")] for ln in lines[1:]])
    if data.ndim != 2 or data.shape[1] != 2:
        raise ValueError(f"{path}: every row needs 2 columns")
    return SampledWaveform(data[:, 0], data[:, 1])


PhaseWaveform = Union[RectPulse, GaussianPulse, SampledWaveform]


def _guard(waveform: PhaseWaveform, guard: float) -> None:
    if waveform.max_abs > guard:
        raise WaveformTooStrong(
            f"max |dphi| = {waveform.max_abs:.3g} rad exceeds the {guard} rad linearization guard"
        )


# -- traces --------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class TransientTrace:
    t: np.ndarray
    E4: np.ndarray
    E2: np.ndarray
    P_cir: np.ndarray
    P_out: np.ndarray
    dphi: np.ndarray
    E4_s: complex
    E2_s: complex
    P_cir_s: float
    P_out_s: float

    def deviation_E4(self) -> np.ndarray:
        return self.E4 - self.E4_s

    def deviation_E2(self) -> np.ndarray:
        return self.E2 - self.E2_s

    def write_csv(self, path: Union[str, Path], stride: int = 1) -> None:
        lines = ["t_s,P_cir_over_Pinc,P_out_over_Pinc,dphi_rad"]
        for i in range(0, self.t.size, stride):
            lines.append(f"{self.t[i]:.12e},{self.P_cir[i]:.12e},{self.P_out[i]:.12e},{self.dphi[i]:.12e}")
        Path(path).write_text("\n".join(lines) + "\n")


def _series_terms(params: ResonatorParams) -> int:
    ra = params.ra
    if ra == 0:
        return 1
    return int(math.ceil(math.log(SERIES_CUTOFF) / math.log(ra)))


def _relative_deviation(params: ResonatorParams, waveform: PhaseWaveform, t: np.ndarray,
                        lag: int = 0) -> np.ndarray:
    """dE4(t - lag T_R)/E4_s from the echo series, using only n >= 0 (causal) terms.

    On a grid commensurate with T_R the delayed waveform samples are taken by
    index shifting so both this and the recursion see the same samples.
    """
    x = params.x
    T_R = params.T_R
    lo, hi = waveform.support
    out = np.zeros(t.shape, dtype=complex)
    if t.size == 0:
        return out
    n_stop = min(_series_terms(params), int(math.floor((t.max() - lo) / T_R)))
    dt = t[1] - t[0] if t.size > 1 else 0.0
    M = int(round(T_R / dt)) if dt > 0 else 0
    if M >= 1 and abs(M * dt - T_R) <= 1e-9 * T_R:
        # samples t[0] + j dt for j in [j_lo, N), covering the support
        j_lo = min(0, int(math.floor((lo - t[0]) / dt)) - 1)
        tt = np.concatenate([t[0] + dt * np.arange(j_lo, 0), t])
        f = np.zeros(tt.shape, dtype=complex)
        on = (tt >= lo) & (tt <= hi)
        f[on] = np.expm1(1j * waveform(tt[on]))
        nz = np.flatnonzero(on)
        if nz.size == 0:
            return out
        i0, i1 = int(nz[0]), int(nz[-1]) + 1
        xn = x
        for n in range(lag, lag + n_stop + 1):
            # f[i] lands on out[i + j_lo + n M]
            shift = j_lo + n * M
            k0, k1 = max(0, i0 + shift), min(t.size, i1 + shift)
            if k0 < k1:
                out[k0:k1] += xn * f[k0 - shift:k1 - shift]
            elif k0 >= t.size:
                break
            xn *= x
        return out
    shift = t - lag * T_R
    xn = x
    for n in range(0, n_stop + 1):
        s = shift - n * T_R
        mask = (s >= lo) & (s <= hi)
        if np.any(mask):
            out[mask] += xn * np.expm1(1j * waveform(s[mask]))
        xn *= x
    return out


def _check_uniform(t: np.ndarray) -> float:
    if t.size < 2:
        raise ValueError("time grid needs at least 2 points")
    d = np.diff(t)
    if np.any(d <= 0) or not np.allclose(d, d[0], rtol=1e-6, atol=0):
        raise ValueError("time grid must be uniform and increasing")
    return float(d[0])


def transient_closed_form(params: ResonatorParams, waveform: PhaseWaveform, t_grid,
                          guard: float = DEFAULT_GUARD) -> TransientTrace:
    """Echo-series trace on a uniform grid with step <= T_R / 10."""
    t = np.asarray(t_grid, dtype=float)
    dt = _check_uniform(t)
    if dt > params.T_R / 10.0 * (1 + 1e-9):
        raise GridTooCoarse(f"time step {dt:.3g} s exceeds T_R/10 = {params.T_R / 10:.3g} s")
    _guard(waveform, guard)
    if params.r == 0:
        raise ValueError("closed-form output field needs r > 0")
    sf = steady_fields(params)
    rel = _relative_deviation(params, waveform, t)
    rel_prev = _relative_deviation(params, waveform, t, lag=1)
    E4 = sf.E4 * (1.0 + rel)
    E2 = sf.E2 + 1j * (params.kappa / params.r) * sf.E4 * rel
    dphi = waveform(t)
    E3 = params.a * np.exp(1j * (params.phi_R + dphi)) * sf.E4 * (1.0 + rel_prev)
    return TransientTrace(
        t=t, E4=E4, E2=E2, P_cir=np.abs(E3) ** 2, P_out=np.abs(E2) ** 2, dphi=dphi,
        E4_s=sf.E4, E2_s=sf.E2, P_cir_s=abs(sf.E3) ** 2, P_out_s=abs(sf.E2) ** 2,
    )


def steps_per_round_trip(params: ResonatorParams, dt: float) -> int:
    M = int(round(params.T_R / dt))
    if M < 1 or abs(M * dt - params.T_R) > 1e-9 * params.T_R:
        raise DtNotCommensurate(f"dt = {dt:.6g} s does not divide T_R = {params.T_R:.6g} s")
    return M


def default_window(params: ResonatorParams, waveform: PhaseWaveform) -> Tuple[float, float]:
    """One round trip before the waveform to 20 lifetimes after it."""
    lo, hi = waveform.support
    return lo - params.T_R, hi + RELAX_LIFETIMES * params.lifetime


def transient_recursion(params: ResonatorParams, waveform: PhaseWaveform, dt: float,
                        t_start: Optional[float] = None, t_end: Optional[float] = None,
                        cold_start: bool = False) -> TransientTrace:
    """Exact delay-line stepping of the ring fields.

    The history before ``t_start`` is the steady state (or zero with
    ``cold_start``). The grid is ``t_start + k dt``; by default it starts one
    round trip before the waveform and runs 20 lifetimes past it.
    """
    M = steps_per_round_trip(params, dt)
    if t_end is None:
        t_end = default_window(params, waveform)[1]
    if t_start is None:
        # anchor the grid on the waveform start so that sample lands exactly on it
        lo = waveform.support[0]
        n = int(math.floor((t_end - lo) / dt + 1e-9)) + 1 + M
        t = lo + dt * (np.arange(n) - M)
    else:
        n = int(math.floor((t_end - t_start) / dt + 1e-9)) + 1
        t = t_start + dt * np.arange(n)
    sf = steady_fields(params)
    dphi = waveform(t)
    rot = params.x * np.exp(1j * dphi)
    ik = 1j * params.kappa
    E4 = np.empty(n, dtype=complex)
    E4_prev = np.empty(n, dtype=complex)  # E4(t - T_R)
    prev = np.full(M, 0.0 if cold_start else sf.E4, dtype=complex)
    for j in range(0, n, M):
        k = min(M, n - j)
        block = ik + rot[j:j + k] * prev[:k]
        E4_prev[j:j + k] = prev[:k]
        E4[j:j + k] = block
        prev = block
    E3 = params.a * np.exp(1j * (params.phi_R + dphi)) * E4_prev
    E2 = params.r + ik * E3
    return TransientTrace(
        t=t, E4=E4, E2=E2, P_cir=np.abs(E3) ** 2, P_out=np.abs(E2) ** 2, dphi=dphi,
        E4_s=sf.E4, E2_s=sf.E2, P_cir_s=abs(sf.E3) ** 2, P_out_s=abs(sf.E2) ** 2,
    )


def recursion_vs_closed_form(params: ResonatorParams, waveform: PhaseWaveform, dt: float,
                             guard: float = DEFAULT_GUARD) -> float:
    """max |E4_recursion - E4_closed| / |E4_s| over the recursion grid."""
    rec = transient_recursion(params, waveform, dt)
    cf = transient_closed_form(params, waveform, rec.t, guard=guard)
    return float(np.max(np.abs(rec.E4 - cf.E4)) / abs(rec.E4_s))


# -- energy readout ------------------------------------------------------------

def net_energy_numeric(params: ResonatorParams, waveform: PhaseWaveform, P_inc: float,
                       dt: Optional[float] = None, t_end: Optional[float] = None) -> float:
    """Integral of (P_out - P_out_s) over the recursion trace, in joules."""
    if dt is None:
        dt = params.T_R / DEFAULT_STEPS_PER_ROUND_TRIP
    needed = waveform.support[1] + RELAX_LIFETIMES * params.lifetime
    if t_end is not None and t_end < needed * (1 - 1e-12):
        raise WindowTooShort(
            f"window ends at {t_end:.4g} s; relaxation needs up to {needed:.4g} s"
        )
    return net_energy_from_trace(transient_recursion(params, waveform, dt, t_end=t_end), P_inc)


def net_energy_from_trace(trace: TransientTrace, P_inc: float) -> float:
    return float(P_inc * trapezoid(trace.P_out - trace.P_out_s, trace.t))


def net_energy_rect_closed_form(params: ResonatorParams, delta_phi: float, T_int: float,
                                P_inc: float) -> float:
    """-P_inc T_int dphi (dB/dphi_R) (1 - a^2) / a^2 for a rectangular phase pulse."""
    a = params.a
    if a == 0:
        return 0.0
    return -P_inc * T_int * delta_phi * buildup_derivative(params) * (1.0 - a * a) / (a * a)


def net_energy_first_order(params: ResonatorParams, waveform: PhaseWaveform, P_inc: float) -> float:
    """Linear-response energy for any waveform: the rect formula with T_int dphi -> integral of dphi."""
    a = params.a
    if a == 0:
        return 0.0
    return -P_inc * waveform.integral * buildup_derivative(params) * (1.0 - a * a) / (a * a)


def high_finesse_net_energy(P_cir: float, T_int: float, delta_phi: float) -> float:
    """-P_cir T_int dphi / 2."""
    return -0.5 * P_cir * T_int * delta_phi


def echo_amplitudes(trace: TransientTrace, t_first: float, T_R: float, count: int) -> np.ndarray:
    """Complex output-field deviations sampled at t_first + m T_R, m = 0..count-1."""
    idx = np.rint((t_first + T_R * np.arange(count) - trace.t[0]) / (trace.t[1] - trace.t[0])).astype(int)
    idx = idx[(idx >= 0) & (idx < trace.t.size)]
    return trace.deviation_E2()[idx]
