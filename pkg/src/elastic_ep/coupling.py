"""Electron kinematics and electron-photon coupling constants.

All four coupling quantities are line integrals of a single-photon optical
field along a straight electron trajectory parallel to z:

* ``g_phi``   elastic (dispersive) phase per electron, real and >= 0
* ``g_qu``    first-order inelastic amplitude, kernel exp(-i w z / v0)
* ``g_2``     second-order inelastic amplitude, kernel exp(-2i w z / v0)
* ``chi_omega`` single-mode geometric phase of the partial-``g_qu`` path

Single-photon fields use the normalization ``|E| = sqrt(hbar w / (eps0 V))``.
Sampled profiles are zero outside their grid.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import NamedTuple, Sequence, Union

import numpy as np
import scipy.constants as sc
from scipy.integrate import trapezoid

from .errors import (
    BelowVelocityFloor,
    EmptyProfile,
    NonPositiveEnergy,
    QuadratureUnderresolved,
    SuperluminalVelocity,
)

__all__ = [
    "PhysicalConstants",
    "CONSTANTS",
    "RelativisticParams",
    "relativistic_params",
    "ElectronBeam",
    "birefringence_matrix",
    "AnalyticBox",
    "SampledProfile",
    "OpticalModeProfile",
    "CouplingResult",
    "RefractiveIndex",
    "g_phi",
    "g_phi_figure_of_merit",
    "g_qu",
    "g_qu_path",
    "g_2",
    "chi_omega",
    "geometric_phase",
    "oscillatory_partials",
    "refractive_index",
    "refractive_index_profile",
    "optical_phase_shift",
    "interaction_time",
    "compute_coupling",
    "load_profile_csv",
    "write_profile_csv",
    "PROFILE_CSV_HEADER",
]

DEFAULT_KE_FLOOR_EV = 1.0
MIN_SUPPORT_SAMPLES = 8
# below this per-interval kernel phase the Filon weights use their Taylor series
OSCILLATORY_SWITCH = 0.5


@dataclass(frozen=True)
class PhysicalConstants:
    """SI constants (CODATA via :mod:`scipy.constants`).

    ``r_e`` is derived from the other fields rather than taken from the
    tabulated value, so it is self-consistent to machine precision.
    """

    c: float = sc.c
    m_e: float = sc.m_e
    e: float = sc.e
    hbar: float = sc.hbar
    eps0: float = sc.epsilon_0

    @property
    def r_e(self) -> float:
        return self.e**2 / (4.0 * math.pi * self.eps0 * self.m_e * self.c**2)

    @property
    def rest_energy_eV(self) -> float:
        return self.m_e * self.c**2 / self.e


CONSTANTS = PhysicalConstants()


class RelativisticParams(NamedTuple):
    gamma: float
    beta: float
    v0: float
    p0: float
    total_energy: float


def relativistic_params(
    kinetic_energy: float,
    ke_floor: float = DEFAULT_KE_FLOOR_EV,
    constants: PhysicalConstants = CONSTANTS,
) -> RelativisticParams:
    """gamma, beta, v0 (m/s), p0 (kg m/s) and total energy (J) for a kinetic energy in eV."""
    if not kinetic_energy > 0:
        raise NonPositiveEnergy(f"kinetic energy must be > 0 eV, got {kinetic_energy!r}")
    if kinetic_energy <= ke_floor:
        raise BelowVelocityFloor(
            f"kinetic energy {kinetic_energy} eV is at or below the {ke_floor} eV floor; "
            "g_phi ~ 1/beta diverges there"
        )
    c = constants.c
    rest = constants.m_e * c**2
    gamma = 1.0 + kinetic_energy * constants.e / rest
    # beta = sqrt(1 - 1/gamma^2), written to avoid cancellation at small KE
    t = gamma - 1.0
    beta = math.sqrt(t * (t + 2.0)) / gamma
    v0 = beta * c
    p0 = gamma * constants.m_e * v0
    return RelativisticParams(gamma, beta, v0, p0, gamma * rest)


@dataclass(frozen=True)
class ElectronBeam:
    """Monoenergetic electrons moving along +z.

    ``kinetic_energy`` is in eV. ``n_electrons`` counts electrons arriving
    within the optical mode lifetime.
    """

    kinetic_energy: float
    n_electrons: int = 1
    ke_floor: float = DEFAULT_KE_FLOOR_EV
    constants: PhysicalConstants = field(default=CONSTANTS, repr=False)
    _rel: RelativisticParams = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if int(self.n_electrons) != self.n_electrons or self.n_electrons < 0:
            raise ValueError(f"n_electrons must be a non-negative integer, got {self.n_electrons!r}")
        rel = relativistic_params(self.kinetic_energy, self.ke_floor, self.constants)
        object.__setattr__(self, "_rel", rel)

    @property
    def gamma(self) -> float:
        return self._rel.gamma

    @property
    def beta(self) -> float:
        return self._rel.beta

    @property
    def v0(self) -> float:
        return self._rel.v0

    @property
    def p0(self) -> float:
        return self._rel.p0

    @property
    def epsilon0_total(self) -> float:
        return self._rel.total_energy

    @property
    def velocity(self) -> np.ndarray:
        return np.array([0.0, 0.0, self.v0])

    def birefringence(self) -> np.ndarray:
        return birefringence_matrix(self.velocity, self.constants.c)


def birefringence_matrix(v0: Sequence[float], c: float = CONSTANTS.c) -> np.ndarray:
    """Gamma = I - v0 v0^T / c^2 for an electron velocity vector in m/s."""
    v = np.asarray(v0, dtype=float).reshape(3)
    if np.dot(v, v) >= c * c:
        raise SuperluminalVelocity(f"|v0| = {np.linalg.norm(v)} m/s is not below c")
    return np.eye(3) - np.outer(v, v) / c**2


def _unit_polarization(pol) -> np.ndarray:
    p = np.asarray(pol, dtype=complex).reshape(3)
    norm = np.linalg.norm(p)
    if norm == 0:
        raise ValueError("polarization vector must be non-zero")
    return p / norm


@dataclass(frozen=True)
class AnalyticBox:
    """Uniform single-photon field of length ``L`` (m) on z in [0, L] and mode volume ``V`` (m^3)."""

    lambda0: float
    L: float
    V: float
    polarization: tuple = (1.0, 0.0, 0.0)

    def __post_init__(self):
        for name in ("lambda0", "L", "V"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be > 0")
        object.__setattr__(self, "polarization", tuple(_unit_polarization(self.polarization)))

    @property
    def omega(self) -> float:
        return 2.0 * math.pi * CONSTANTS.c / self.lambda0

    @property
    def field_magnitude(self) -> float:
        return math.sqrt(CONSTANTS.hbar * self.omega / (CONSTANTS.eps0 * self.V))

    @property
    def field_vector(self) -> np.ndarray:
        return self.field_magnitude * np.asarray(self.polarization)

    def to_sampled(self, n: int = 1001) -> "SampledProfile":
        z = np.linspace(0.0, self.L, n)
        E = np.tile(self.field_vector, (n, 1))
        return SampledProfile(self.lambda0, z, E)


@dataclass(frozen=True, eq=False)
class SampledProfile:
    """Complex single-photon field E(z) (V/m, shape (N, 3)) on a strictly increasing grid z (m)."""

    lambda0: float
    z: np.ndarray
    E: np.ndarray

    def __post_init__(self):
        if not self.lambda0 > 0:
            raise ValueError("lambda0 must be > 0")
        z = np.array(self.z, dtype=float).reshape(-1)
        E = np.array(self.E, dtype=complex)
        if z.size < 2:
            raise EmptyProfile(f"sampled profile needs at least 2 points, got {z.size}")
        if E.shape != (z.size, 3):
            raise ValueError(f"E must have shape ({z.size}, 3), got {E.shape}")
        if not np.all(np.isfinite(z)) or not np.all(np.isfinite(E)):
            raise ValueError("profile contains non-finite values")
        if np.any(np.diff(z) <= 0):
            raise ValueError("z grid must be strictly increasing")
        z.setflags(write=False)
        E.setflags(write=False)
        object.__setattr__(self, "z", z)
        object.__setattr__(self, "E", E)

    @property
    def omega(self) -> float:
        return 2.0 * math.pi * CONSTANTS.c / self.lambda0

    @property
    def step(self) -> float:
        return float(np.max(np.diff(self.z)))

    def shifted(self, dz: float) -> "SampledProfile":
        return SampledProfile(self.lambda0, self.z + dz, self.E)

    def scaled(self, s: complex) -> "SampledProfile":
        return SampledProfile(self.lambda0, self.z, self.E * s)


OpticalModeProfile = Union[AnalyticBox, SampledProfile]


def _check_support(profile: SampledProfile) -> bool:
    """Return False for an identically zero field; raise if the support is too thin."""
    nz = np.flatnonzero(np.any(profile.E != 0, axis=1))
    if nz.size == 0:
        return False
    n_support = nz[-1] - nz[0] + 1
    if n_support < MIN_SUPPORT_SAMPLES:
        raise QuadratureUnderresolved(
            f"only {n_support} samples span the field support; need >= {MIN_SUPPORT_SAMPLES}"
        )
    return True


def _hermitian_density(E: np.ndarray, gamma_matrix: np.ndarray) -> np.ndarray:
    """E^dagger Gamma E per sample (real, >= 0 for positive semidefinite Gamma)."""
    return np.real(np.einsum("ni,ij,nj->n", E.conj(), gamma_matrix, E))


def _bilinear_density(E: np.ndarray, gamma_matrix: np.ndarray) -> np.ndarray:
    """E^T Gamma E per sample (complex; no conjugation)."""
    return np.einsum("ni,ij,nj->n", E, gamma_matrix, E)


def _filon_weights(theta: np.ndarray):
    """Weights (w0, w1) with int_0^1 (1-u, u) exp(-i theta u) du, for |theta| not small."""
    c = -1j * np.asarray(theta, dtype=float)
    ec = np.exp(c)
    i0 = (ec - 1.0) / c
    i1 = ec / c - (ec - 1.0) / c**2
    return i0 - i1, i1


def oscillatory_partials(z: np.ndarray, f: np.ndarray, k: float) -> np.ndarray:
    """Cumulative integral of f(z) exp(-i k z) at every grid node, starting at 0.

    Intervals with k * dz <= 0.5 use the trapezoid rule on the full integrand.
    Coarser intervals interpolate f linearly and integrate that exactly
    against the oscillatory kernel, so the result stays accurate when the
    kernel is under-sampled.
    """
    z = np.asarray(z, dtype=float)
    f = np.asarray(f, dtype=complex)
    h = np.diff(z)
    theta = k * h
    ph = np.exp(-1j * k * z)
    seg = 0.5 * h * (f[:-1] * ph[:-1] + f[1:] * ph[1:])
    coarse = np.abs(theta) > OSCILLATORY_SWITCH
    if np.any(coarse):
        w0, w1 = _filon_weights(theta[coarse])
        seg[coarse] = h[coarse] * ph[:-1][coarse] * (f[:-1][coarse] * w0 + f[1:][coarse] * w1)
    out = np.empty(z.size, dtype=complex)
    out[0] = 0.0
    np.cumsum(seg, out=out[1:])
    return out


def _kernel_wavenumber(profile: OpticalModeProfile, beam: ElectronBeam) -> float:
    return profile.omega / beam.v0


def g_phi(profile: OpticalModeProfile, beam: ElectronBeam) -> float:
    """Elastic coupling e^2/(hbar p0 w^2) * int (|E_perp|^2 + |E_z|^2/gamma^2) dz."""
    k = beam.constants
    omega = profile.omega
    pref = k.e**2 / (k.hbar * beam.p0 * omega**2)
    G = beam.birefringence()
    if isinstance(profile, AnalyticBox):
        dens = _hermitian_density(profile.field_vector[None, :], G)[0]
        return float(pref * dens * profile.L)
    if not _check_support(profile):
        return 0.0
    dens = _hermitian_density(profile.E, G)
    return float(pref * trapezoid(dens, profile.z))


def g_phi_figure_of_merit(beam: ElectronBeam, V: float, L: float, lambda0: float) -> float:
    """Electron diameter over photon diameter: (2 r_e / (gamma beta)) / (V / (lambda0 L))."""
    if not (V > 0 and L > 0 and lambda0 > 0):
        raise ValueError("V, L and lambda0 must all be > 0")
    electron_diameter = 2.0 * beam.constants.r_e / (beam.gamma * beam.beta)
    photon_diameter = V / (lambda0 * L)
    return electron_diameter / photon_diameter


def _sinc(x: float) -> float:
    return np.sinc(x / math.pi)


def g_qu_path(profile: SampledProfile, beam: ElectronBeam) -> np.ndarray:
    """Partial g_qu(z) at every grid node of a sampled profile."""
    k = beam.constants
    pref = k.e / (k.hbar * profile.omega)
    return pref * oscillatory_partials(profile.z, profile.E[:, 2], _kernel_wavenumber(profile, beam))


def g_qu(profile: OpticalModeProfile, beam: ElectronBeam) -> complex:
    """First-order inelastic amplitude (e/(hbar w)) int E_z exp(-i w z/v0) dz."""
    k = beam.constants
    omega = profile.omega
    kz = _kernel_wavenumber(profile, beam)
    if isinstance(profile, AnalyticBox):
        ez = profile.field_vector[2]
        L = profile.L
        return complex(k.e / (k.hbar * omega) * ez * L * _sinc(kz * L / 2) * np.exp(-0.5j * kz * L))
    if not _check_support(profile):
        return 0j
    return complex(g_qu_path(profile, beam)[-1])


def g_2(profile: OpticalModeProfile, beam: ElectronBeam) -> complex:
    """Second-order inelastic amplitude.

    The defining integral -(i e^2/(hbar p0)) int A^T Gamma A exp(-2i w z/v0) dz,
    with A = -(i/w) E, yields the conjugate amplitude; its complex conjugate is
    returned so that ``g_2`` pairs with ``g_2^*`` in the scattering operator.
    """
    k = beam.constants
    omega = profile.omega
    kz = _kernel_wavenumber(profile, beam)
    pref = 1j * k.e**2 / (k.hbar * beam.p0 * omega**2)
    G = beam.birefringence()
    if isinstance(profile, AnalyticBox):
        dens = _bilinear_density(profile.field_vector[None, :], G)[0]
        L = profile.L
        integral = dens * L * _sinc(kz * L) * np.exp(-1j * kz * L)
        return complex(np.conj(pref * integral))
    if not _check_support(profile):
        return 0j
    dens = _bilinear_density(profile.E, G)
    integral = oscillatory_partials(profile.z, dens, 2.0 * kz)[-1]
    return complex(np.conj(pref * integral))


def geometric_phase(path: np.ndarray) -> float:
    """-Im sum conj(midpoint) * step over a discrete complex path (midpoint products)."""
    path = np.asarray(path, dtype=complex)
    mid = 0.5 * (path[1:] + path[:-1])
    step = np.diff(path)
    return float(-np.sum(np.imag(np.conj(mid) * step)))


def chi_omega(profile: OpticalModeProfile, beam: ElectronBeam) -> float:
    """Single-mode geometric phase -Im int g_qu^*(z) d/dz g_qu(z) dz."""
    if isinstance(profile, AnalyticBox):
        k = beam.constants
        C = k.e / (k.hbar * profile.omega) * profile.field_vector[2]
        kz = _kernel_wavenumber(profile, beam)
        x = kz * profile.L
        if abs(x) < 1e-3:
            # (x - sin x) / k^2 via its series
            core = profile.L**3 * kz * (1 / 6 - x**2 / 120 + x**4 / 5040)
        else:
            core = (x - math.sin(x)) / kz**2
        return float(abs(C) ** 2 * core)
    if not _check_support(profile):
        return 0.0
    return geometric_phase(g_qu_path(profile, beam))


@dataclass(frozen=True)
class RefractiveIndex:
    delta_n_ordinary: float
    delta_n_extraordinary_factor: float
    delta_n_total: float


def _index_prefactor(profile: OpticalModeProfile, beam: ElectronBeam, n_electrons: int) -> float:
    k = beam.constants
    return n_electrons * k.e**2 * k.c / (beam.p0 * k.hbar * profile.omega**3)


def refractive_index(profile: OpticalModeProfile, beam: ElectronBeam, n_electrons: int) -> RefractiveIndex:
    """Electron-induced index change evaluated at the peak of the mode.

    ``delta_n_ordinary`` uses only the transverse field, ``delta_n_total``
    the full birefringent form, and ``delta_n_extraordinary_factor`` is the
    extraordinary/ordinary ratio 1/gamma^2.
    """
    pref = _index_prefactor(profile, beam, n_electrons)
    G = beam.birefringence()
    if isinstance(profile, AnalyticBox):
        E = profile.field_vector[None, :]
    else:
        E = profile.E
    dens = _hermitian_density(E, G)
    i = int(np.argmax(dens))
    perp = float(np.sum(np.abs(E[i, :2]) ** 2))
    return RefractiveIndex(
        delta_n_ordinary=pref * perp,
        delta_n_extraordinary_factor=1.0 / beam.gamma**2,
        delta_n_total=float(pref * dens[i]),
    )


def refractive_index_profile(profile: SampledProfile, beam: ElectronBeam, n_electrons: int) -> np.ndarray:
    """delta n(z) at every grid node of a sampled profile."""
    pref = _index_prefactor(profile, beam, n_electrons)
    return pref * _hermitian_density(profile.E, beam.birefringence())


def optical_phase_shift(g_phi_value: float, n_electrons: int) -> float:
    """Optical phase imprinted by ``n_electrons`` passages: -g_phi * N_e (rad)."""
    return -g_phi_value * n_electrons


def interaction_time(beam: ElectronBeam, length: float) -> float:
    """Transit time L / v0 (s) through a straight segment of ``length`` metres."""
    return length / beam.v0


@dataclass(frozen=True)
class CouplingResult:
    g_phi: float
    g_qu: complex
    g_2: complex
    chi_omega: float
    quadrature_step: float

    def as_record(self) -> dict:
        """Flat key-value record; keys carry units."""
        return {
            "g_phi_rad": self.g_phi,
            "g_qu_re": self.g_qu.real,
            "g_qu_im": self.g_qu.imag,
            "g_qu_abs": abs(self.g_qu),
            "g_2_re": self.g_2.real,
            "g_2_im": self.g_2.imag,
            "g_2_abs": abs(self.g_2),
            "chi_omega_rad": self.chi_omega,
            "quadrature_step_m": self.quadrature_step,
        }


def compute_coupling(profile: OpticalModeProfile, beam: ElectronBeam) -> CouplingResult:
    step = 0.0 if isinstance(profile, AnalyticBox) else profile.step
    return CouplingResult(
        g_phi=g_phi(profile, beam),
        g_qu=g_qu(profile, beam),
        g_2=g_2(profile, beam),
        chi_omega=chi_omega(profile, beam),
        quadrature_step=step,
    )


PROFILE_CSV_HEADER = ("z_m", "Ex_re", "Ex_im", "Ey_re", "Ey_im", "Ez_re", "Ez_im")


def load_profile_csv(path: Union[str, Path], lambda0: float) -> SampledProfile:
    """Read a sampled single-photon profile written with :data:`PROFILE_CSV_HEADER`."""
    path = Path(path)
    with path.open(newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = tuple(h.strip() for h in next(reader))
        except StopIteration:
            raise EmptyProfile(f"{path}: file is empty") from None
        if header != PROFILE_CSV_HEADER:
            raise ValueError(f"{path}: expected header {','.join(PROFILE_CSV_HEADER)}, got {','.join(header)}")
        rows = [[float(v) for v in row] for row in reader if row]
    if len(rows) < 2:
        raise EmptyProfile(f"{path}: need at least 2 samples, got {len(rows)}")
    data = np.array(rows)
    if data.shape[1] != 7:
        raise ValueError(f"{path}: every row needs 7 columns")
    E = data[:, 1::2] + 1j * data[:, 2::2]
    return SampledProfile(lambda0, data[:, 0], E)


def write_profile_csv(path: Union[str, Path], profile: SampledProfile) -> None:
    with Path(path).open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(PROFILE_CSV_HEADER)
        for zi, Ei in zip(profile.z, profile.E):
            w.writerow([repr(float(zi))] + [repr(float(v)) for c in Ei for v in (c.real, c.imag)])
