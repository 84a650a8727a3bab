"""Steady state of a single all-pass ring resonator.

Field conventions follow the lumped coupler

    [E2]   [ r   i k ] [E1]
    [E4] = [ i k  r  ] [E3],     E3 = a exp(i phi_R) E4,

with the input normalized to E1 = 1 and powers expressed as multiples of the
incident power.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import CavityTooLossy, DegenerateCavity


@dataclass(frozen=True)
class ResonatorParams:
    """Self-coupling ``r``, single-pass amplitude transmission ``a``, round-trip phase and time."""

    r: float
    a: float
    phi_R: float = 0.0
    T_R: float = 1e-12

    def __post_init__(self):
        if not 0.0 <= self.r <= 1.0:
            raise ValueError(f"r must lie in [0, 1], got {self.r}")
        if not 0.0 <= self.a <= 1.0:
            raise ValueError(f"a must lie in [0, 1], got {self.a}")
        if not self.T_R > 0:
            raise ValueError(f"T_R must be > 0, got {self.T_R}")

    @property
    def kappa(self) -> float:
        return math.sqrt(max(0.0, 1.0 - self.r * self.r))

    @property
    def ra(self) -> float:
        return self.r * self.a

    @property
    def x(self) -> complex:
        return self.ra * complex(math.cos(self.phi_R), math.sin(self.phi_R))

    @property
    def b(self) -> float:
        return 2.0 * self.ra / (1.0 - self.ra) ** 2

    @property
    def lifetime(self) -> float:
        """Field decay time T_R / (1 - |x|)."""
        _require_nondegenerate(self)
        return self.T_R / (1.0 - self.ra)

    def with_phase(self, phi_R: float) -> "ResonatorParams":
        return ResonatorParams(self.r, self.a, phi_R, self.T_R)


def _require_nondegenerate(p: ResonatorParams) -> None:
    if p.ra >= 1.0:
        raise DegenerateCavity(f"r*a = {p.ra} must be < 1")


@dataclass(frozen=True)
class SteadyFields:
    E1: complex
    E2: complex
    E3: complex
    E4: complex


def steady_fields(params: ResonatorParams) -> SteadyFields:
    _require_nondegenerate(params)
    x = params.x
    rt = params.a * complex(math.cos(params.phi_R), math.sin(params.phi_R))
    E4 = 1j * params.kappa / (1.0 - x)
    E2 = (params.r - rt) / (1.0 - x)
    return SteadyFields(1.0 + 0j, E2, rt * E4, E4)


def buildup(params: ResonatorParams) -> float:
    """Circulating-to-incident power ratio |E3/E1|^2."""
    _require_nondegenerate(params)
    r, a = params.r, params.a
    ra = r * a
    return (1.0 - r * r) * a * a / (1.0 - 2.0 * ra * math.cos(params.phi_R) + ra * ra)


def buildup_resonant(params: ResonatorParams) -> float:
    _require_nondegenerate(params)
    r, a = params.r, params.a
    return (1.0 - r * r) * a * a / (1.0 - r * a) ** 2


def buildup_derivative(params: ResonatorParams) -> float:
    """dB/dphi_R."""
    _require_nondegenerate(params)
    r, a = params.r, params.a
    ra = r * a
    den = 1.0 - 2.0 * ra * math.cos(params.phi_R) + ra * ra
    return -(1.0 - r * r) * a * a * 2.0 * ra * math.sin(params.phi_R) / den**2


def output_transmission(params: ResonatorParams) -> float:
    """P_out / P_inc = |E2/E1|^2."""
    return abs(steady_fields(params).E2) ** 2


def half_max_detuning(params: ResonatorParams) -> float:
    """phi_0 = arccos(1 - 1/b) in (0, pi], where B(phi_0) = B_res / 2."""
    _require_nondegenerate(params)
    b = params.b
    if b < 0.5:
        raise CavityTooLossy(f"b = {b:.4g} < 1/2: the buildup never drops to half its peak")
    return math.acos(1.0 - 1.0 / b)


def steepest_detuning(params: ResonatorParams) -> float:
    """Detuning in (0, pi) where |dB/dphi| is largest.

    Solves b c^2 + (1 + b) c - 2 b = 0 for c = cos(phi). In the high-finesse
    limit this is phi_0 / sqrt(3), not the half-maximum point.
    """
    _require_nondegenerate(params)
    b = params.b
    if b == 0:
        return math.pi / 2
    c = (-(1.0 + b) + math.sqrt((1.0 + b) ** 2 + 8.0 * b * b)) / (2.0 * b)
    return math.acos(c)


def finesse(params: ResonatorParams) -> float:
    _require_nondegenerate(params)
    ra = params.ra
    return math.pi * math.sqrt(ra) / (1.0 - ra)


def side_of_fringe_sensitivity(params: ResonatorParams, delta_phi: float) -> float:
    """First-order drop B(phi_0) - B(phi_0 + delta_phi) = (sqrt(2)/4) B_res sqrt(b) delta_phi."""
    _require_nondegenerate(params)
    b = params.b
    if b < 0.5:
        raise CavityTooLossy(f"b = {b:.4g} < 1/2: no half-maximum operating point")
    return math.sqrt(2.0) / 4.0 * buildup_resonant(params) * math.sqrt(b) * delta_phi


def statics_sweep(params: ResonatorParams, phi: np.ndarray) -> dict:
    """B, dB/dphi and P_out/P_inc over an array of round-trip phases."""
    _require_nondegenerate(params)
    r, a = params.r, params.a
    ra = r * a
    phi = np.asarray(phi, dtype=float)
    den = 1.0 - 2.0 * ra * np.cos(phi) + ra * ra
    B = (1.0 - r * r) * a * a / den
    dB = -(1.0 - r * r) * a * a * 2.0 * ra * np.sin(phi) / den**2
    rt = a * np.exp(1j * phi)
    P_out = np.abs((r - rt) / (1.0 - r * rt)) ** 2
    return {"phi_R": phi, "B": B, "dB_dphi": dB, "P_out_over_P_inc": P_out}
