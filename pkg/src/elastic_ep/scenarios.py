"""Scenario runners behind the command-line tool.

Each runner takes a parsed :class:`ScenarioConfig` and an output directory,
writes its CSV tables there and returns a :class:`RunReport`.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Optional, Tuple, Union

import numpy as np
import scipy.constants as sc

from . import coupling as cp
from . import fock as fk
from . import resonator_dynamics as rd
from . import resonator_statics as rs
from .config import ScenarioConfig
from .errors import ConfigError, EmptyProfile, TruncationTooSmall, ZeroMeanField

ECHO_FLOOR = 1e-3


def fmt(v: float) -> str:
    """Fixed float formatting shared by every CSV writer."""
    if isinstance(v, (int, np.integer)) and not isinstance(v, bool):
        return str(int(v))
    v = float(v)
    if math.isnan(v):
        return "nan"
    return f"{v:.12e}"


def write_csv(path: Path, header: List[str], rows) -> None:
    lines = [",".join(header)]
    for row in rows:
        lines.append(",".join(v if isinstance(v, str) else fmt(v) for v in row))
    path.write_text("\n".join(lines) + "\n")


@dataclass
class RunReport:
    scenario: str
    command: str
    input_echo: str
    scalars: Dict[str, Tuple[float, str]] = field(default_factory=dict)
    files: List[str] = field(default_factory=list)

    def add(self, name: str, value: float, unit: str) -> None:
        self.scalars[name] = (float(value), unit)

    def value(self, name: str) -> float:
        return self.scalars[name][0]

    def to_dict(self) -> dict:
        return {
            "scenario": self.scenario,
            "command": self.command,
            "input_echo": self.input_echo,
            "scalars": {k: {"value": v, "unit": u} for k, (v, u) in self.scalars.items()},
            "files": list(self.files),
        }

    def write(self, out_dir: Path) -> Path:
        path = out_dir / f"{self.command}_report.json"
        path.write_text(json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n")
        return path


# -- builders ---------------------------------------------------------------------

def build_beam(cfg: ScenarioConfig, kinetic_energy: Optional[float] = None) -> cp.ElectronBeam:
    b = cfg.beam
    ke = b.kinetic_energy_eV if kinetic_energy is None else kinetic_energy
    return cp.ElectronBeam(ke, n_electrons=b.n_electrons, ke_floor=b.ke_floor_eV)


def build_mode(cfg: ScenarioConfig):
    m = cfg.mode
    if m.variant == "box":
        return cp.AnalyticBox(m.lambda0_m, m.L_m, m.V_m3, m.polarization)
    try:
        return cp.load_profile_csv(m.path, m.lambda0_m)
    except ValueError as exc:
        if isinstance(exc, EmptyProfile):
            raise
        raise ConfigError(f"mode.path: {exc}") from None


def resolve_phase(cfg: ScenarioConfig, base: rs.ResonatorParams) -> float:
    phi = cfg.resonator.phi_R_rad
    if not isinstance(phi, str):
        return float(phi)
    sign = -1.0 if phi.startswith("-") else 1.0
    if phi.lstrip("-") == "phi0":
        return sign * rs.half_max_detuning(base)
    return sign * rs.steepest_detuning(base)


def build_resonator(cfg: ScenarioConfig) -> rs.ResonatorParams:
    rc = cfg.resonator
    base = rs.ResonatorParams(rc.r, rc.a, 0.0, rc.T_R_s)
    rs._require_nondegenerate(base)
    return base.with_phase(resolve_phase(cfg, base))


def incident_power(cfg: ScenarioConfig, params: rs.ResonatorParams) -> Tuple[float, float]:
    """(P_inc, on-resonance circulating power) in watts."""
    rc = cfg.resonator
    B_res = rs.buildup_resonant(params)
    if rc.P_inc_W is not None:
        return rc.P_inc_W, rc.P_inc_W * B_res
    if rc.P_cir_W is not None:
        if B_res == 0:
            raise ConfigError("resonator.P_cir_W: the ring never builds up power (B_res = 0)")
        return rc.P_cir_W / B_res, rc.P_cir_W
    return 1.0, B_res


def _electron_phase(cfg: ScenarioConfig, what: str) -> float:
    if cfg.beam is None or cfg.mode is None:
        raise ConfigError(f"{what}: 'auto' needs beam and mode blocks")
    beam = build_beam(cfg)
    return cp.optical_phase_shift(cp.g_phi(build_mode(cfg), beam), beam.n_electrons)


def build_waveform(cfg: ScenarioConfig) -> rd.PhaseWaveform:
    w = cfg.waveform
    if w.variant == "sampled":
        try:
            return rd.load_waveform_csv(w.path)
        except ValueError as exc:
            raise ConfigError(f"waveform.path: {exc}") from None
    dphi = w.delta_phi_rad
    if dphi == "auto":
        dphi = _electron_phase(cfg, "waveform.delta_phi_rad")
    if w.variant == "rect":
        T_int = w.T_int_s
        if T_int == "auto":
            if cfg.beam is None:
                raise ConfigError("waveform.T_int_s: 'auto' needs a beam block")
            T_int = cp.interaction_time(build_beam(cfg), w.L_straight_m)
        return rd.RectPulse(dphi, T_int, w.t_start_s)
    return rd.GaussianPulse(dphi, w.fwhm_s, w.t0_s)


def _out(out_dir: Union[str, Path]) -> Path:
    p = Path(out_dir)
    p.mkdir(parents=True, exist_ok=True)
    return p


def _finish(report: RunReport, out: Path) -> RunReport:
    for f in report.files:
        if not (out / f).is_file():
            raise OSError(f"expected output {out / f} was not written")
    report.write(out)
    return report


# -- coupling -----------------------------------------------------------------

COUPLING_HEADER = [
    "kinetic_energy_eV", "gamma", "beta", "g_phi_transverse_rad", "g_phi_z_rad",
    "ratio_z_over_transverse", "inv_gamma_sq", "g_phi_mode_rad", "g_qu_abs", "chi_omega_rad",
]


def _branches(mode):
    """Mode restricted to its transverse and to its z field components."""
    if isinstance(mode, cp.AnalyticBox):
        return (cp.AnalyticBox(mode.lambda0, mode.L, mode.V, (1.0, 0.0, 0.0)),
                cp.AnalyticBox(mode.lambda0, mode.L, mode.V, (0.0, 0.0, 1.0)))
    Et = mode.E.copy()
    Et[:, 2] = 0.0
    Ez = mode.E.copy()
    Ez[:, :2] = 0.0
    if isinstance(mode, cp.SampledProfile):
        return cp.SampledProfile(mode.lambda0, mode.z, Et), cp.SampledProfile(mode.lambda0, mode.z, Ez)
    raise TypeError(type(mode).__name__)


def coupling_row(mode, beam: cp.ElectronBeam) -> list:
    t_mode, z_mode = _branches(mode)
    gt = cp.g_phi(t_mode, beam)
    gz = cp.g_phi(z_mode, beam)
    res = cp.compute_coupling(mode, beam)
    ratio = gz / gt if gt != 0 else float("nan")
    return [beam.kinetic_energy, beam.gamma, beam.beta, gt, gz, ratio, 1.0 / beam.gamma**2,
            res.g_phi, abs(res.g_qu), res.chi_omega]


def run_coupling(cfg: ScenarioConfig, out_dir: Union[str, Path]) -> RunReport:
    cfg.require("beam", "mode")
    out = _out(out_dir)
    beam = build_beam(cfg)
    mode = build_mode(cfg)
    res = cp.compute_coupling(mode, beam)
    idx = cp.refractive_index(mode, beam, beam.n_electrons)
    rep = RunReport(cfg.scenario, "coupling", cfg.echo())
    rep.add("kinetic_energy", beam.kinetic_energy, "eV")
    rep.add("gamma", beam.gamma, "1")
    rep.add("beta", beam.beta, "1")
    rep.add("v0", beam.v0, "m/s")
    rep.add("g_phi", res.g_phi, "rad")
    rep.add("g_qu_abs", abs(res.g_qu), "1")
    rep.add("g_2_abs", abs(res.g_2), "1")
    rep.add("chi_omega", res.chi_omega, "rad")
    rep.add("delta_n", idx.delta_n_total, "1")
    rep.add("delta_phi", cp.optical_phase_shift(res.g_phi, beam.n_electrons), "rad")
    if isinstance(mode, cp.AnalyticBox):
        rep.add("g_phi_figure_of_merit", cp.g_phi_figure_of_merit(beam, mode.V, mode.L, mode.lambda0), "rad")
    if cfg.waveform is not None and cfg.waveform.L_straight_m is not None:
        rep.add("T_int", cp.interaction_time(beam, cfg.waveform.L_straight_m), "s")

    if cfg.sweep is not None:
        s = cfg.sweep
        energies = np.geomspace(s.min_eV, s.max_eV, s.points)
    else:
        energies = np.array([beam.kinetic_energy])
    rows = [coupling_row(mode, build_beam(cfg, float(ke))) for ke in energies]
    write_csv(out / "coupling.csv", COUPLING_HEADER, rows)
    rep.files.append("coupling.csv")
    return _finish(rep, out)


# -- states --------------------------------------------------------------------

FIDELITY_HEADER = [
    "state", "gN_rad", "dim", "two_path_fidelity", "max_abs_distribution_change",
    "field_phase_shift_rad", "noon_relative_phase_rad",
]


def resolve_gN(cfg: ScenarioConfig) -> List[float]:
    out = []
    for v in cfg.states.gN_rad:
        if v == "auto":
            out.append(-_electron_phase(cfg, "states.gN_rad"))
        else:
            out.append(float(v))
    return out


def _state_family(st, gN: float):
    """(label, before, after, rotated-construction) for the single-mode families."""
    alpha, zeta = st.alpha, st.zeta
    rot = complex(np.exp(-1j * gN))
    out = []

    def with_label(label, build):
        try:
            return build()
        except TruncationTooSmall as exc:
            raise TruncationTooSmall(f"{label}: {exc}") from None

    coh = with_label("coherent", lambda: fk.coherent(alpha))
    out.append(("coherent", coh, fk.coherent(alpha * rot, coh.dim, pin=True)))
    sq = with_label("squeezed_vacuum", lambda: fk.squeezed_vacuum(zeta))
    out.append(("squeezed_vacuum", sq, fk.squeezed_vacuum(zeta * rot**2, sq.dim, pin=True)))
    ds = with_label("displaced_squeezed", lambda: fk.displaced_squeezed(alpha, zeta))
    out.append(("displaced_squeezed", ds,
                with_label("displaced_squeezed",
                           lambda: fk.transform_displaced_squeezed(alpha, zeta, gN, 1, ds.dim))))
    fs = fk.fock_state(st.fock_n)
    out.append(("fock", fs, fs))
    ct = with_label("cat", lambda: fk.cat(st.cat_alpha, st.cat_theta_rad))
    out.append(("cat", ct, fk.cat(st.cat_alpha * rot, st.cat_theta_rad, ct.dim, pin=True)))
    return out


def states_table(cfg: ScenarioConfig, gN: float):
    """Rows of the fidelity table and the (label, before, after) states at one gN."""
    st = cfg.states
    rows, states = [], []
    for label, before, rotated in _state_family(st, gN):
        after = fk.apply(fk.elastic_phase_op(gN, 1, before.dim), before)
        dist = float(np.max(np.abs(after.photon_distribution() - before.photon_distribution())))
        try:
            shift = fk.expectation_field_phase(before, gN, 1)
        except ZeroMeanField:
            shift = float("nan")
        rows.append([label, gN, before.dim, fk.fidelity(after, rotated), dist, shift, float("nan")])
        states.append((label, before, after))
    N = st.noon_N
    noon = fk.noon(N)
    after = fk.transform_noon(N, gN, 1, noon.dim)
    expected = noon.amplitudes.copy()
    expected[N, 0] *= np.exp(-1j * gN * N)
    fid = abs(np.vdot(expected, after.amplitudes)) ** 2
    dist = float(np.max(np.abs(np.abs(after.amplitudes) ** 2 - np.abs(noon.amplitudes) ** 2)))
    rel = fk.noon_relative_phase(after, N) if N > 0 else 0.0
    rows.append(["noon", gN, noon.dim, fid, dist, float("nan"), rel])
    return rows, states


def run_states(cfg: ScenarioConfig, out_dir: Union[str, Path]) -> RunReport:
    cfg.require("states")
    out = _out(out_dir)
    gNs = resolve_gN(cfg)
    rep = RunReport(cfg.scenario, "states", cfg.echo())
    all_rows = []
    for i, gN in enumerate(gNs):
        rows, states = states_table(cfg, gN)
        all_rows.extend(rows)
        if i:
            continue
        rep.add("gN", gN, "rad")
        for label, before, after in states:
            d = out / label
            d.mkdir(exist_ok=True)
            axis = fk.default_wigner_axis(before.dim, cfg.states.wigner_points)
            for name, state in (("before", before), ("after", after)):
                fk.write_wigner_csv(d / f"wigner_{name}.csv", fk.wigner(state, axis))
                fk.write_state_csv(d / f"state_{name}.csv", state)
                rep.files += [f"{label}/wigner_{name}.csv", f"{label}/state_{name}.csv"]
    write_csv(out / "fidelity.csv", FIDELITY_HEADER, all_rows)
    rep.files.append("fidelity.csv")
    rep.add("min_two_path_fidelity", min(r[3] for r in all_rows), "1")
    rep.add("max_distribution_change", max(r[4] for r in all_rows), "1")
    return _finish(rep, out)


# -- readout -------------------------------------------------------------------

def statics_grid(cfg: ScenarioConfig, params: rs.ResonatorParams) -> np.ndarray:
    rc = cfg.resonator
    span = rc.statics_span_rad
    if span is None:
        span = math.pi
        if params.b >= 0.5:
            span = min(math.pi, 6.0 * rs.half_max_detuning(params))
    return np.linspace(-span, span, rc.statics_points)


def echo_count(trace: rd.TransientTrace, waveform: rd.PhaseWaveform, T_R: float,
               floor: float = ECHO_FLOOR) -> int:
    """Number of round-trip echoes, starting after the waveform, above ``floor`` of the largest one."""
    lo, hi = waveform.support
    centre = 0.5 * (lo + hi)
    m0 = math.ceil((hi - centre) / T_R)
    count = int((trace.t[-1] - centre) / T_R) - m0
    if count <= 0:
        return 0
    amps = np.abs(rd.echo_amplitudes(trace, centre + m0 * T_R, T_R, count))
    if amps.size == 0 or amps.max() == 0:
        return 0
    return int(np.sum(amps >= floor * amps.max()))


def signed_peak(wf: rd.PhaseWaveform) -> float:
    if isinstance(wf, rd.RectPulse):
        return wf.delta_phi
    if isinstance(wf, rd.GaussianPulse):
        return wf.peak
    return float(wf.delta_phi[np.argmax(np.abs(wf.delta_phi))])


def run_readout(cfg: ScenarioConfig, out_dir: Union[str, Path]) -> RunReport:
    cfg.require("resonator", "waveform")
    out = _out(out_dir)
    params = build_resonator(cfg)
    P_inc, P_cir_res = incident_power(cfg, params)
    wf = build_waveform(cfg)
    rep = RunReport(cfg.scenario, "readout", cfg.echo())

    B_res = rs.buildup_resonant(params)
    rep.add("B_res", B_res, "1")
    rep.add("finesse", rs.finesse(params), "1")
    rep.add("b", params.b, "1")
    if params.b >= 0.5:
        rep.add("phi0", rs.half_max_detuning(params), "rad")
    rep.add("phi_steepest", rs.steepest_detuning(params), "rad")
    rep.add("phi_R", params.phi_R, "rad")
    rep.add("B_operating", rs.buildup(params), "1")
    rep.add("dB_dphi_operating", rs.buildup_derivative(params), "1/rad")
    rep.add("lifetime", params.lifetime, "s")
    rep.add("T_R", params.T_R, "s")
    rep.add("P_inc", P_inc, "W")
    rep.add("P_cir_resonant", P_cir_res, "W")
    rep.add("P_cir_operating", P_inc * rs.buildup(params), "W")
    peak = signed_peak(wf)
    rep.add("delta_phi", peak, "rad")
    T_eff = wf.integral / peak if peak else 0.0
    rep.add("T_int", T_eff, "s")

    sweep = rs.statics_sweep(params.with_phase(0.0), statics_grid(cfg, params))
    write_csv(out / "statics.csv", ["phi_R", "B", "dB_dphi", "P_out_over_P_inc"],
              zip(sweep["phi_R"], sweep["B"], sweep["dB_dphi"], sweep["P_out_over_P_inc"]))

    dt = cfg.run.dt_s if cfg.run.dt_s is not None else params.T_R / rd.DEFAULT_STEPS_PER_ROUND_TRIP
    needed = wf.support[1] + rd.RELAX_LIFETIMES * params.lifetime
    t_end = cfg.run.t_end_s
    if t_end is not None and t_end < needed:
        raise rd.WindowTooShort(f"run.t_end_s = {t_end:.4g} s; relaxation needs up to {needed:.4g} s")
    trace = rd.transient_recursion(params, wf, dt, t_end=t_end)
    trace.write_csv(out / "trace.csv", stride=cfg.run.trace_stride)

    E_num = rd.net_energy_from_trace(trace, P_inc)
    E_lin = rd.net_energy_first_order(params, wf, P_inc)
    E_hf = rd.high_finesse_net_energy(P_cir_res, T_eff, peak)
    rep.add("E_net_numeric", E_num, "J")
    rep.add("E_net_closed", E_lin, "J")
    rep.add("E_net_highfinesse", E_hf, "J")
    rep.add("E_net_numeric_over_closed", E_num / E_lin if E_lin else float("nan"), "1")
    if wf.max_abs <= cfg.waveform.guard_rad:
        cf = rd.transient_closed_form(params, wf, trace.t, guard=cfg.waveform.guard_rad)
        rep.add("closed_form_max_rel_dev", float(np.max(np.abs(cf.E4 - trace.E4)) / abs(trace.E4_s)), "1")
    rep.add("echo_count", echo_count(trace, wf, params.T_R), "1")
    energy_rows = [("E_net_numeric", E_num, "J"), ("E_net_closed", E_lin, "J"),
                   ("E_net_highfinesse", E_hf, "J"), ("P_inc", P_inc, "W"),
                   ("P_cir_resonant", P_cir_res, "W"), ("T_int", T_eff, "s"), ("delta_phi", peak, "rad")]
    if cfg.mode is not None:
        photon = sc.h * sc.c / cfg.mode.lambda0_m
        rep.add("photon_energy", photon, "J")
        rep.add("E_net_highfinesse_photons", E_hf / photon, "1")
        energy_rows.append(("photon_energy", photon, "J"))
    write_csv(out / "energy.csv", ["key", "value", "unit"],
              ([k, fmt(v), u] for k, v, u in energy_rows))
    rep.files += ["statics.csv", "trace.csv", "energy.csv"]
    return _finish(rep, out)


RUNNERS = {"coupling": run_coupling, "states": run_states, "readout": run_readout}
