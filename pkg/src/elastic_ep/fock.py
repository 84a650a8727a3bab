"""Truncated single-mode Fock space and the elastic phase action on photonic states.

The elastic scattering operator on the photon sector is the diagonal
``exp(-i g_phi N_e n)``; the electron-number-independent global phases are
dropped, so all state comparisons are made modulo a global phase via
``|<a|b>|^2``.

Phase-space coordinates for Wigner functions are the quadratures
``x = sqrt(2) Re(alpha)``, ``p = sqrt(2) Im(alpha)``, in which the vacuum
Wigner function peaks at 1/pi and integrates to one.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Union

import numpy as np
from scipy.interpolate import RegularGridInterpolator
from scipy.linalg import expm
from scipy.special import gammaln
from scipy.stats import poisson

from .errors import DimensionMismatch, GridTooCoarse, TruncationTooSmall, ZeroMeanField

NORM_TOL = 1e-9
TAIL_TOL = 1e-10
OPERATOR_TAIL_TOL = 1e-8
WIGNER_MAX_STEP = 0.25
MAX_AUTO_DIM = 2048


@dataclass(frozen=True, eq=False)
class QuantumState:
    amplitudes: np.ndarray
    label: str = ""

    def __post_init__(self):
        c = np.array(self.amplitudes, dtype=complex).reshape(-1)
        if c.size < 2:
            raise ValueError("Fock dimension must be >= 2")
        norm = float(np.vdot(c, c).real)
        if abs(norm - 1.0) > NORM_TOL:
            raise ValueError(f"state {self.label!r} is not normalized (norm^2 = {norm!r})")
        c.setflags(write=False)
        object.__setattr__(self, "amplitudes", c)

    @property
    def dim(self) -> int:
        return self.amplitudes.size

    def photon_distribution(self) -> np.ndarray:
        return np.abs(self.amplitudes) ** 2

    def mean_photon_number(self) -> float:
        return float(np.dot(np.arange(self.dim), self.photon_distribution()))

    def mean_field(self) -> complex:
        """<a> on the truncated basis."""
        c = self.amplitudes
        return complex(np.sum(np.conj(c[:-1]) * np.sqrt(np.arange(1, self.dim)) * c[1:]))

    def relabel(self, label: str) -> "QuantumState":
        return QuantumState(self.amplitudes, label)


@dataclass(frozen=True, eq=False)
class TwoModeState:
    """Amplitudes c[n, m] of |n>_1 |m>_2 on a D x D truncation."""

    amplitudes: np.ndarray
    label: str = ""

    def __post_init__(self):
        c = np.array(self.amplitudes, dtype=complex)
        if c.ndim != 2 or c.shape[0] != c.shape[1] or c.shape[0] < 2:
            raise ValueError("two-mode amplitudes must be a square D x D array with D >= 2")
        norm = float(np.sum(np.abs(c) ** 2))
        if abs(norm - 1.0) > NORM_TOL:
            raise ValueError(f"state {self.label!r} is not normalized (norm^2 = {norm!r})")
        c.setflags(write=False)
        object.__setattr__(self, "amplitudes", c)

    @property
    def dim(self) -> int:
        return self.amplitudes.shape[0]


@dataclass(frozen=True, eq=False)
class FockOperator:
    matrix: np.ndarray
    label: str = ""

    def __post_init__(self):
        m = np.array(self.matrix, dtype=complex)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise ValueError("operator matrix must be square")
        m.setflags(write=False)
        object.__setattr__(self, "matrix", m)

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    def unitarity_residual(self) -> float:
        m = self.matrix
        return float(np.max(np.abs(m.conj().T @ m - np.eye(self.dim))))

    def dagger(self) -> "FockOperator":
        return FockOperator(self.matrix.conj().T, f"{self.label}^dagger")

    def __matmul__(self, other: "FockOperator") -> "FockOperator":
        if other.dim != self.dim:
            raise DimensionMismatch(f"operator dims {self.dim} and {other.dim} differ")
        return FockOperator(self.matrix @ other.matrix, f"{self.label}*{other.label}")


# -- ladder algebra -----------------------------------------------------------

def annihilation(dim: int) -> np.ndarray:
    return np.diag(np.sqrt(np.arange(1, dim)), k=1).astype(complex)


def number_operator(dim: int) -> np.ndarray:
    return np.diag(np.arange(dim)).astype(complex)


def _top_tail(vec: np.ndarray) -> float:
    """Probability held in the top 10% of Fock levels."""
    d = vec.size
    k = max(1, math.ceil(0.1 * d))
    return float(np.sum(np.abs(vec[d - k:]) ** 2))


def _vacuum(dim: int) -> np.ndarray:
    v = np.zeros(dim, dtype=complex)
    v[0] = 1.0
    return v


def displacement_op(alpha: complex, dim: int, check: bool = True) -> FockOperator:
    """D(alpha) = exp(alpha a^dagger - alpha^* a) on the truncated space."""
    a = annihilation(dim)
    U = expm(alpha * a.conj().T - np.conj(alpha) * a)
    if check:
        tail = _top_tail(U[:, 0])
        if tail > OPERATOR_TAIL_TOL:
            raise TruncationTooSmall(
                f"D({alpha}) at dim {dim}: top-10% Fock levels hold {tail:.2e} of D|0>"
            )
    return FockOperator(U, f"D({alpha})")


def squeeze_op(zeta: complex, dim: int, check: bool = True) -> FockOperator:
    """S(zeta) = exp((zeta^* a^2 - zeta a^dagger^2) / 2) on the truncated space."""
    a = annihilation(dim)
    ad = a.conj().T
    U = expm(0.5 * (np.conj(zeta) * (a @ a) - zeta * (ad @ ad)))
    if check:
        tail = _top_tail(U[:, 0])
        if tail > OPERATOR_TAIL_TOL:
            raise TruncationTooSmall(
                f"S({zeta}) at dim {dim}: top-10% Fock levels hold {tail:.2e} of S|0>"
            )
    return FockOperator(U, f"S({zeta})")


def elastic_phase_op(g_phi: float, n_electrons: int, dim: int) -> FockOperator:
    """Photonic scattering operator exp(-i g_phi N_e n) with global phases dropped."""
    phases = np.exp(-1j * (g_phi * n_electrons) * np.arange(dim))
    return FockOperator(np.diag(phases), f"Phase(g={g_phi},Ne={n_electrons})")


def apply(op: FockOperator, state: QuantumState) -> QuantumState:
    if op.dim != state.dim:
        raise DimensionMismatch(f"operator dim {op.dim} does not match state dim {state.dim}")
    out = op.matrix @ state.amplitudes
    # unitary ops keep the norm; renormalizing would hide a non-unitary argument
    return QuantumState(out, state.label)


def fidelity(a: QuantumState, b: QuantumState) -> float:
    """|<a|b>|^2, insensitive to global phase."""
    if a.dim != b.dim:
        raise DimensionMismatch(f"state dims {a.dim} and {b.dim} differ")
    return float(abs(np.vdot(a.amplitudes, b.amplitudes)) ** 2)


# -- constructors -------------------------------------------------------------

def coherent_dim(alpha: complex) -> int:
    n = abs(alpha) ** 2
    return max(2, math.ceil(n + 10.0 * math.sqrt(n + 1.0)))


def _coherent_amplitudes(alpha: complex, dim: int) -> np.ndarray:
    n = np.arange(dim)
    r = abs(alpha)
    if r == 0:
        return _vacuum(dim)
    logmag = -0.5 * r * r + n * math.log(r) - 0.5 * gammaln(n + 1)
    return np.exp(logmag) * np.exp(1j * n * np.angle(alpha))


def coherent(alpha: complex, dim: Optional[int] = None, pin: bool = False, tail_tol: float = TAIL_TOL) -> QuantumState:
    """Coherent state |alpha>.

    Without ``pin`` the dimension is raised to at least :func:`coherent_dim`.
    With ``pin`` the given ``dim`` is kept and the Poisson tail beyond it is
    audited against ``tail_tol``.
    """
    auto = coherent_dim(alpha)
    if dim is None:
        dim = auto
    elif not pin:
        dim = max(dim, auto)
    tail = float(poisson.sf(dim - 1, abs(alpha) ** 2)) if alpha != 0 else 0.0
    if tail > tail_tol:
        raise TruncationTooSmall(f"coherent({alpha}) at dim {dim}: tail probability {tail:.2e}")
    c = _coherent_amplitudes(alpha, dim)
    c = c / np.linalg.norm(c)
    return QuantumState(c, f"coherent({alpha})")


def fock_state(n: int, dim: Optional[int] = None) -> QuantumState:
    if dim is None:
        dim = n + 10
    if n >= dim:
        raise TruncationTooSmall(f"|{n}> does not fit in dim {dim}")
    c = np.zeros(dim, dtype=complex)
    c[n] = 1.0
    return QuantumState(c, f"fock({n})")


def _grow_until(build, start: int, pin: bool, what: str):
    dim = max(2, start)
    while True:
        vec = build(dim)
        tail = _top_tail(vec)
        if tail <= OPERATOR_TAIL_TOL:
            return vec
        if pin:
            raise TruncationTooSmall(f"{what} at dim {dim}: top-10% Fock levels hold {tail:.2e}")
        if dim >= MAX_AUTO_DIM:
            raise TruncationTooSmall(f"{what}: no dimension up to {MAX_AUTO_DIM} holds the state")
        dim = min(MAX_AUTO_DIM, dim + max(4, math.ceil(0.05 * dim)))


def _displaced_squeezed_vector(alpha: complex, zeta: complex, dim: int) -> np.ndarray:
    vec = squeeze_op(zeta, dim, check=False).matrix[:, 0]
    if alpha != 0:
        vec = displacement_op(alpha, dim, check=False).matrix @ vec
    return vec


def _squeezed_start(alpha: complex, zeta: complex) -> int:
    r = abs(zeta)
    mean = abs(alpha) ** 2 + math.sinh(r) ** 2
    return math.ceil(mean + 2.0 * math.sqrt(mean)) + 8


def displaced_squeezed(alpha: complex, zeta: complex, dim: Optional[int] = None, pin: bool = False) -> QuantumState:
    """|alpha, zeta> = D(alpha) S(zeta) |0>, dimension grown until the top-10% audit passes."""
    start = dim if dim is not None else _squeezed_start(alpha, zeta)
    vec = _grow_until(lambda d: _displaced_squeezed_vector(alpha, zeta, d), start, pin,
                      f"displaced_squeezed({alpha}, {zeta})")
    return QuantumState(vec, f"displaced_squeezed({alpha},{zeta})")


def squeezed_vacuum(zeta: complex, dim: Optional[int] = None, pin: bool = False) -> QuantumState:
    return displaced_squeezed(0.0, zeta, dim, pin).relabel(f"squeezed_vacuum({zeta})")


def cat_norm_squared(alpha: complex, theta: float) -> float:
    """|| |alpha> + e^{i theta} |-alpha> ||^2 including the overlap <alpha|-alpha>."""
    return 2.0 * (1.0 + (np.exp(1j * theta) * math.exp(-2.0 * abs(alpha) ** 2)).real)


def cat(alpha: complex, theta: float, dim: Optional[int] = None, pin: bool = False) -> QuantumState:
    """Normalized (|alpha> + e^{i theta} |-alpha>)."""
    auto = coherent_dim(alpha)
    if dim is None:
        dim = auto
    elif not pin:
        dim = max(dim, auto)
    tail = float(poisson.sf(dim - 1, abs(alpha) ** 2)) if alpha != 0 else 0.0
    if tail > TAIL_TOL:
        raise TruncationTooSmall(f"cat({alpha}) at dim {dim}: tail probability {tail:.2e}")
    c = _coherent_amplitudes(alpha, dim) + np.exp(1j * theta) * _coherent_amplitudes(-alpha, dim)
    norm2 = cat_norm_squared(alpha, theta)
    if norm2 < 1e-12:
        raise ValueError(f"cat({alpha}, {theta}) vanishes identically")
    c = c / math.sqrt(norm2)
    return QuantumState(c, f"cat({alpha},{theta})")


def noon(N: int, dim: Optional[int] = None) -> TwoModeState:
    """(|N>|0> + |0>|N>) / sqrt(2); N = 0 gives |0>|0>."""
    if dim is None:
        dim = max(2, N + 1)
    if N >= dim:
        raise TruncationTooSmall(f"N00N with N={N} does not fit in dim {dim}")
    c = np.zeros((dim, dim), dtype=complex)
    if N == 0:
        c[0, 0] = 1.0
    else:
        c[N, 0] = c[0, N] = 1.0 / math.sqrt(2.0)
    return TwoModeState(c, f"noon({N})")


# -- elastic transformations ----------------------------------------------------

TWO_PATH_TOL = 1e-8


def _two_path_check(direct: QuantumState, rotated: QuantumState, what: str) -> None:
    f = fidelity(direct, rotated)
    if f < 1.0 - TWO_PATH_TOL:
        raise ArithmeticError(f"{what}: two construction paths disagree, fidelity {f!r}")


def transform_displaced_squeezed(alpha: complex, zeta: complex, g_phi: float, n_electrons: int,
                                 dim: Optional[int] = None) -> QuantumState:
    """D(alpha e^{-i g N_e}) S(zeta e^{-2i g N_e}) |0>, checked against the phase op applied to |alpha, zeta>."""
    initial = displaced_squeezed(alpha, zeta, dim)
    d = initial.dim
    phi = g_phi * n_electrons
    rotated = QuantumState(
        _displaced_squeezed_vector(alpha * np.exp(-1j * phi), zeta * np.exp(-2j * phi), d),
        f"displaced_squeezed({alpha},{zeta}) after phase {phi}",
    )
    direct = apply(elastic_phase_op(g_phi, n_electrons, d), initial)
    _two_path_check(direct, rotated, "transform_displaced_squeezed")
    return rotated


def transform_cat(alpha: complex, theta: float, g_phi: float, n_electrons: int,
                  dim: Optional[int] = None) -> QuantumState:
    """Cat state with both lobes rotated by -g N_e, checked against the phase op."""
    initial = cat(alpha, theta, dim)
    phi = g_phi * n_electrons
    rotated = cat(alpha * np.exp(-1j * phi), theta, initial.dim, pin=True)
    direct = apply(elastic_phase_op(g_phi, n_electrons, initial.dim), initial)
    _two_path_check(direct, rotated, "transform_cat")
    return rotated


def transform_noon(N: int, g_phi: float, n_electrons: int, dim: Optional[int] = None) -> TwoModeState:
    """Apply the elastic phase to register 1 of a N00N state."""
    state = noon(N, dim)
    phases = np.exp(-1j * g_phi * n_electrons * np.arange(state.dim))
    return TwoModeState(phases[:, None] * state.amplitudes, f"{state.label} after phase")


def noon_relative_phase(state: TwoModeState, N: int) -> float:
    """Interferometric phase arg(c[0,N] / c[N,0]) in [0, 2 pi)."""
    c = state.amplitudes
    return float(np.angle(c[0, N] / c[N, 0]) % (2.0 * math.pi))


def expectation_field_phase(state: QuantumState, g_phi: float, n_electrons: int) -> float:
    """Change of arg<a> caused by the elastic phase, wrapped to (-pi, pi]."""
    before = state.mean_field()
    scale = max(1.0, math.sqrt(state.mean_photon_number()))
    if abs(before) < 1e-12 * scale:
        raise ZeroMeanField(f"<a> vanishes for state {state.label!r}")
    after = apply(elastic_phase_op(g_phi, n_electrons, state.dim), state).mean_field()
    d = np.angle(after) - np.angle(before)
    return float(-((-d + math.pi) % (2.0 * math.pi) - math.pi))


@dataclass(frozen=True)
class ClassicalLimitPhase:
    exact_overlap: complex
    approx_phase: float

    @property
    def exact_phase(self) -> float:
        return float(np.angle(self.exact_overlap))


def classical_limit_electron_phase(alpha: complex, g_phi: float) -> ClassicalLimitPhase:
    """Overlap <alpha|alpha e^{-i g}> = exp(|alpha|^2 (e^{-i g} - 1)) and its small-g phase -g |alpha|^2."""
    n = abs(alpha) ** 2
    # expm1 keeps the tiny real part accurate for g ~ 1e-7
    exponent = n * np.expm1(-1j * g_phi)
    return ClassicalLimitPhase(complex(np.exp(exponent)), -g_phi * n)


# -- Wigner functions -------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class WignerGrid:
    """W[j, i] sampled at quadratures (x[i], p[j])."""

    x: np.ndarray
    p: np.ndarray
    W: np.ndarray
    label: str = ""

    @property
    def cell_area(self) -> float:
        return float((self.x[1] - self.x[0]) * (self.p[1] - self.p[0]))

    def normalization(self) -> float:
        return float(self.W.sum() * self.cell_area)

    def interpolator(self) -> RegularGridInterpolator:
        return RegularGridInterpolator((self.p, self.x), self.W, method="linear",
                                       bounds_error=False, fill_value=0.0)


def _check_axis(v: np.ndarray, name: str) -> np.ndarray:
    v = np.asarray(v, dtype=float).reshape(-1)
    if v.size < 2:
        raise ValueError(f"{name} axis needs at least 2 points")
    d = np.diff(v)
    if np.any(d <= 0) or not np.allclose(d, d[0], rtol=1e-9, atol=0):
        raise ValueError(f"{name} axis must be uniform and increasing")
    if d[0] > WIGNER_MAX_STEP:
        raise GridTooCoarse(f"{name} step {d[0]:.3g} exceeds {WIGNER_MAX_STEP}")
    return v


def _wigner_from_density(rho: np.ndarray, x: np.ndarray, p: np.ndarray) -> np.ndarray:
    """Laguerre-recursion Wigner function of a density matrix in the Fock basis."""
    X, P = np.meshgrid(x, p)
    A = (X + 1j * P) / math.sqrt(2.0)
    A2 = 2.0 * A
    A2c = np.conj(A2)
    M = rho.shape[0]
    Wl = [None] * M
    Wl[0] = np.exp(-2.0 * np.abs(A) ** 2) / math.pi + 0j
    W = rho[0, 0].real * Wl[0].real
    for n in range(1, M):
        Wl[n] = A2 * Wl[n - 1] / math.sqrt(n)
        W = W + 2.0 * np.real(rho[0, n] * Wl[n])
    for m in range(1, M):
        sm = math.sqrt(m)
        temp = Wl[m]
        Wl[m] = (A2c * temp - sm * Wl[m - 1]) / sm
        W = W + np.real(rho[m, m] * Wl[m])
        for n in range(m + 1, M):
            temp2 = (A2 * Wl[n - 1] - sm * temp) / math.sqrt(n)
            temp = Wl[n]
            Wl[n] = temp2
            if rho[m, n] != 0:
                W = W + 2.0 * np.real(rho[m, n] * Wl[n])
    return W


def _effective_dim(c: np.ndarray, cutoff: float = 1e-30) -> int:
    """Smallest leading block carrying all amplitudes above ``cutoff`` probability."""
    idx = np.flatnonzero(np.abs(c) ** 2 > cutoff)
    return int(idx[-1]) + 1 if idx.size else 1


def wigner(state: QuantumState, x, p=None) -> WignerGrid:
    """Wigner function of a pure state on the quadrature grid (x, p)."""
    x = _check_axis(x, "x")
    p = x if p is None else _check_axis(p, "p")
    c = state.amplitudes
    m = max(2, _effective_dim(c))
    c = c[:m]
    rho = np.outer(c, np.conj(c))
    W = _wigner_from_density(rho, x, p)
    return WignerGrid(x, p, W, state.label)


def rotate_wigner(grid: WignerGrid, angle: float) -> np.ndarray:
    """Bilinear-interpolated W of the state rotated by -``angle`` in phase space.

    A state rotated as alpha -> alpha e^{-i angle} has W'(beta) = W(beta e^{i angle}).
    """
    X, P = np.meshgrid(grid.x, grid.p)
    ca, sa = math.cos(angle), math.sin(angle)
    xs = ca * X - sa * P
    ps = sa * X + ca * P
    return grid.interpolator()(np.stack([ps, xs], axis=-1))


def default_wigner_axis(dim: int, n_points: int = 101) -> np.ndarray:
    """Symmetric axis over +-(sqrt(dim) + 2); ``n_points`` is raised if needed to keep the step <= 0.25."""
    half = math.sqrt(dim) + 2.0
    n_points = max(n_points, math.ceil(2.0 * half / WIGNER_MAX_STEP) + 1)
    return np.linspace(-half, half, n_points)


# -- CSV export --------------------------------------------------------------------

def _fmt(v: float) -> str:
    return f"{v:.12e}"


def write_state_csv(path: Union[str, Path], state: QuantumState) -> None:
    lines = ["n,re,im"]
    for n, c in enumerate(state.amplitudes):
        lines.append(f"{n},{_fmt(c.real)},{_fmt(c.imag)}")
    Path(path).write_text("\n".join(lines) + "\n")


def write_wigner_csv(path: Union[str, Path], grid: WignerGrid) -> None:
    """Matrix CSV: header row ``p\\x,x0,x1,...``, then one row ``p_j,W[j,0],...`` per p."""
    lines = ["p\\x," + ",".join(_fmt(v) for v in grid.x)]
    for pj, row in zip(grid.p, grid.W):
        lines.append(_fmt(pj) + "," + ",".join(_fmt(v) for v in row))
    Path(path).write_text("\n".join(lines) + "\n")
