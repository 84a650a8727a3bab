"""YAML scenario configuration.

A scenario file is a mapping with the blocks ``beam``, ``mode``, ``sweep``,
``states``, ``resonator``, ``waveform`` and ``run``; only the blocks a
subcommand needs have to be present. Unknown keys are rejected and every
error names the offending key and, when known, its line in the file.
"""
from __future__ import annotations

import copy
import math
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Any, Dict, List, Optional, Tuple, Union

import yaml

from .errors import ConfigError, PhysicsDomainError

_Path = Tuple[str, ...]


def _line_map(text: str) -> Dict[_Path, int]:
    """Map key paths to 1-based line numbers."""
    try:
        root = yaml.compose(text)
    except yaml.YAMLError:
        return {}
    out: Dict[_Path, int] = {}

    def walk(node, prefix: _Path):
        if isinstance(node, yaml.MappingNode):
            for k, v in node.value:
                path = prefix + (str(k.value),)
                out[path] = k.start_mark.line + 1
                walk(v, path)

    walk(root, ())
    return out


def _as_float(v: Any) -> Optional[float]:
    """Float value of a YAML scalar, or None. Numeric strings count because
    YAML 1.1 reads exponents without a sign (1e5) as strings."""
    if isinstance(v, bool):
        return None
    if isinstance(v, (int, float)):
        return float(v)
    if isinstance(v, str):
        try:
            return float(v)
        except ValueError:
            return None
    return None


class _Block:
    """Reads typed keys from one mapping and remembers which ones were used."""

    def __init__(self, data: Any, path: _Path, lines: Dict[_Path, int]):
        self.path = path
        self.lines = lines
        if data is None:
            data = {}
        if not isinstance(data, dict):
            raise self.error(None, "must be a mapping")
        self.data = data
        self.seen = set()

    def where(self, key: Optional[str]) -> str:
        path = self.path + ((key,) if key else ())
        name = ".".join(path) if path else "<root>"
        line = self.lines.get(path)
        return f"{name} (line {line})" if line else name

    def error(self, key: Optional[str], msg: str) -> ConfigError:
        return ConfigError(f"{self.where(key)}: {msg}")

    def raw(self, key: str, default: Any = ..., required: bool = False):
        self.seen.add(key)
        if key in self.data and self.data[key] is not None:
            return self.data[key]
        if required or default is ...:
            raise self.error(key, "is required")
        return default

    def number(self, key: str, default: Any = ..., positive: bool = False,
               nonnegative: bool = False, allow: Tuple[str, ...] = ()) -> Any:
        v = self.raw(key, default)
        if v is None or (isinstance(v, str) and v in allow):
            return v
        f = _as_float(v)
        if f is None:
            hint = f" or one of {', '.join(repr(a) for a in allow)}" if allow else ""
            raise self.error(key, f"expected a number{hint}, got {v!r}")
        v = f
        if not math.isfinite(v):
            raise self.error(key, "must be finite")
        if positive and not v > 0:
            raise self.error(key, f"must be > 0, got {v}")
        if nonnegative and v < 0:
            raise self.error(key, f"must be >= 0, got {v}")
        return v

    def integer(self, key: str, default: Any = ..., minimum: Optional[int] = None) -> Optional[int]:
        v = self.raw(key, default)
        if v is None:
            return None
        if isinstance(v, bool) or not isinstance(v, int):
            raise self.error(key, f"expected an integer, got {v!r}")
        if minimum is not None and v < minimum:
            raise self.error(key, f"must be >= {minimum}, got {v}")
        return v

    def string(self, key: str, default: Any = ..., choices: Tuple[str, ...] = ()) -> Optional[str]:
        v = self.raw(key, default)
        if v is None:
            return None
        if not isinstance(v, str):
            raise self.error(key, f"expected a string, got {v!r}")
        if choices and v not in choices:
            raise self.error(key, f"must be one of {', '.join(choices)}, got {v!r}")
        return v

    def complex_(self, key: str, default: Any = ...) -> complex:
        v = self.raw(key, default)
        if isinstance(v, (list, tuple)) and len(v) == 2 and all(_as_float(u) is not None for u in v):
            return complex(_as_float(v[0]), _as_float(v[1]))
        if _as_float(v) is not None:
            return complex(_as_float(v), 0.0)
        raise self.error(key, f"expected a number or [re, im], got {v!r}")

    def vector(self, key: str, default: Any = ..., n: int = 3) -> Tuple[float, ...]:
        v = self.raw(key, default)
        if not isinstance(v, (list, tuple)) or len(v) != n or not all(_as_float(u) is not None for u in v):
            raise self.error(key, f"expected a list of {n} numbers, got {v!r}")
        return tuple(_as_float(u) for u in v)

    def block(self, key: str, optional: bool = True) -> Optional["_Block"]:
        self.seen.add(key)
        if key not in self.data:
            if optional:
                return None
            raise self.error(key, "block is required")
        return _Block(self.data[key], self.path + (key,), self.lines)

    def finish(self) -> None:
        extra = sorted(set(map(str, self.data)) - self.seen)
        if extra:
            raise self.error(extra[0], "unknown key")


@dataclass(frozen=True)
class BeamConfig:
    kinetic_energy_eV: float
    n_electrons: int = 1
    ke_floor_eV: float = 1.0


@dataclass(frozen=True)
class ModeConfig:
    lambda0_m: float
    variant: str = "box"
    L_m: Optional[float] = None
    V_m3: Optional[float] = None
    polarization: Tuple[float, float, float] = (1.0, 0.0, 0.0)
    path: Optional[str] = None


@dataclass(frozen=True)
class SweepConfig:
    min_eV: float
    max_eV: float
    points: int = 41


@dataclass(frozen=True)
class StatesConfig:
    alpha: complex = 5.0 + 0j
    zeta: complex = 1.0 + 0j
    cat_alpha: complex = 2.0 + 0j
    cat_theta_rad: float = 0.0
    fock_n: int = 6
    noon_N: int = 6
    gN_rad: Tuple[Union[float, str], ...] = (0.3,)
    wigner_points: int = 101


@dataclass(frozen=True)
class ResonatorConfig:
    r: float
    a: float
    T_R_s: float
    phi_R_rad: Union[float, str] = "phi0"
    P_cir_W: Optional[float] = None
    P_inc_W: Optional[float] = None
    statics_points: int = 2001
    statics_span_rad: Optional[float] = None


@dataclass(frozen=True)
class WaveformConfig:
    variant: str = "rect"
    delta_phi_rad: Union[float, str] = "auto"
    T_int_s: Union[float, str, None] = "auto"
    t_start_s: float = 0.0
    L_straight_m: Optional[float] = None
    fwhm_s: Optional[float] = None
    t0_s: float = 0.0
    path: Optional[str] = None
    guard_rad: float = 0.1


@dataclass(frozen=True)
class RunConfig:
    dt_s: Optional[float] = None
    t_end_s: Optional[float] = None
    trace_stride: int = 1
    output_dir: Optional[str] = None


@dataclass(frozen=True)
class ScenarioConfig:
    scenario: str
    beam: Optional[BeamConfig] = None
    mode: Optional[ModeConfig] = None
    sweep: Optional[SweepConfig] = None
    states: Optional[StatesConfig] = None
    resonator: Optional[ResonatorConfig] = None
    waveform: Optional[WaveformConfig] = None
    run: RunConfig = field(default_factory=RunConfig)
    base_dir: str = "."
    raw: dict = field(default_factory=dict, compare=False, repr=False)

    def require(self, *blocks: str) -> None:
        missing = [b for b in blocks if getattr(self, b) is None]
        if missing:
            raise ConfigError(f"scenario {self.scenario!r}: missing block(s) {', '.join(missing)}")

    def echo(self) -> str:
        """YAML text that :func:`parse_config_text` turns back into an equal config."""
        return yaml.safe_dump(self.raw, sort_keys=False)


def _parse_beam(b: _Block) -> BeamConfig:
    cfg = BeamConfig(
        kinetic_energy_eV=b.number("kinetic_energy_eV", positive=True),
        n_electrons=b.integer("n_electrons", 1, minimum=0),
        ke_floor_eV=b.number("ke_floor_eV", 1.0, positive=True),
    )
    b.finish()
    return cfg


def _parse_mode(b: _Block) -> ModeConfig:
    variant = b.string("variant", "box", choices=("box", "sampled"))
    lam = b.number("lambda0_m", positive=True)
    if variant == "box":
        pol = b.vector("polarization", (1.0, 0.0, 0.0))
        if not any(pol):
            raise b.error("polarization", "must be non-zero")
        cfg = ModeConfig(lam, variant, L_m=b.number("L_m", positive=True),
                         V_m3=b.number("V_m3", positive=True), polarization=pol)
    else:
        cfg = ModeConfig(lam, variant, path=b.string("path"))
    b.finish()
    return cfg


def _parse_sweep(b: _Block) -> SweepConfig:
    cfg = SweepConfig(b.number("min_eV", positive=True), b.number("max_eV", positive=True),
                      b.integer("points", 41, minimum=2))
    if cfg.max_eV <= cfg.min_eV:
        raise b.error("max_eV", "must exceed min_eV")
    b.finish()
    return cfg


def _parse_states(b: _Block) -> StatesConfig:
    raw = b.raw("gN_rad", 0.3)
    items = raw if isinstance(raw, list) else [raw]
    if not items:
        raise b.error("gN_rad", "must not be empty")
    gN: List[Union[float, str]] = []
    for v in items:
        if v == "auto":
            gN.append("auto")
        elif _as_float(v) is not None and math.isfinite(_as_float(v)):
            gN.append(_as_float(v))
        else:
            raise b.error("gN_rad", f"expected numbers or 'auto', got {v!r}")
    cfg = StatesConfig(
        alpha=b.complex_("alpha", 5.0),
        zeta=b.complex_("zeta", 1.0),
        cat_alpha=b.complex_("cat_alpha", 2.0),
        cat_theta_rad=b.number("cat_theta_rad", 0.0),
        fock_n=b.integer("fock_n", 6, minimum=0),
        noon_N=b.integer("noon_N", 6, minimum=0),
        gN_rad=tuple(gN),
        wigner_points=b.integer("wigner_points", 101, minimum=3),
    )
    b.finish()
    return cfg


PHASE_KEYWORDS = ("phi0", "-phi0", "steepest", "-steepest")


def _parse_resonator(b: _Block) -> ResonatorConfig:
    r = b.number("r")
    a = b.number("a")
    for k, v in (("r", r), ("a", a)):
        if not 0.0 <= v <= 1.0:
            raise b.error(k, f"must lie in [0, 1], got {v}")
    P_cir = b.number("P_cir_W", None, positive=True)
    P_inc = b.number("P_inc_W", None, positive=True)
    if P_cir is not None and P_inc is not None:
        raise b.error("P_inc_W", "give either P_cir_W or P_inc_W, not both")
    cfg = ResonatorConfig(
        r=r, a=a, T_R_s=b.number("T_R_s", positive=True),
        phi_R_rad=b.number("phi_R_rad", "phi0", allow=PHASE_KEYWORDS),
        P_cir_W=P_cir, P_inc_W=P_inc,
        statics_points=b.integer("statics_points", 2001, minimum=3),
        statics_span_rad=b.number("statics_span_rad", None, positive=True),
    )
    b.finish()
    return cfg


def _parse_waveform(b: _Block) -> WaveformConfig:
    variant = b.string("variant", "rect", choices=("rect", "gaussian", "sampled"))
    guard = b.number("guard_rad", 0.1, positive=True)
    if variant == "sampled":
        cfg = WaveformConfig(variant, delta_phi_rad=0.0, T_int_s=None,
                             path=b.string("path"), guard_rad=guard)
        b.finish()
        return cfg
    dphi = b.number("delta_phi_rad", "auto", allow=("auto",))
    L = b.number("L_straight_m", None, positive=True)
    if variant == "rect":
        T_int = b.number("T_int_s", "auto", positive=True, allow=("auto",))
        if T_int == "auto" and L is None:
            raise b.error("T_int_s", "'auto' needs L_straight_m")
        cfg = WaveformConfig(variant, dphi, T_int, t_start_s=b.number("t_start_s", 0.0),
                             L_straight_m=L, guard_rad=guard)
    else:
        cfg = WaveformConfig(variant, dphi, None, L_straight_m=L,
                             fwhm_s=b.number("fwhm_s", positive=True),
                             t0_s=b.number("t0_s", 0.0), guard_rad=guard)
    b.finish()
    return cfg


def _parse_run(b: Optional[_Block]) -> RunConfig:
    if b is None:
        return RunConfig()
    cfg = RunConfig(
        dt_s=b.number("dt_s", None, positive=True),
        t_end_s=b.number("t_end_s", None),
        trace_stride=b.integer("trace_stride", 1, minimum=1),
        output_dir=b.string("output_dir", None),
    )
    b.finish()
    return cfg


def parse_config_text(text: str, base_dir: Union[str, Path] = ".", default_name: str = "scenario") -> ScenarioConfig:
    try:
        data = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ConfigError(f"invalid YAML: {exc}") from None
    lines = _line_map(text)
    root = _Block(data, (), lines)
    name = root.string("scenario", default_name)
    blocks = {}
    for key, parser in (("beam", _parse_beam), ("mode", _parse_mode), ("sweep", _parse_sweep),
                        ("states", _parse_states), ("resonator", _parse_resonator),
                        ("waveform", _parse_waveform)):
        blk = root.block(key)
        blocks[key] = parser(blk) if blk is not None else None
    run = _parse_run(root.block("run"))
    root.finish()
    raw = copy.deepcopy(data) if isinstance(data, dict) else {}
    raw["scenario"] = name
    base = Path(base_dir)
    for key in ("mode", "waveform"):
        blk = blocks[key]
        if blk is not None and blk.path is not None:
            resolved = str(Path(blk.path) if Path(blk.path).is_absolute() else base / blk.path)
            blocks[key] = replace(blk, path=resolved)
            raw[key]["path"] = resolved
    cfg = ScenarioConfig(scenario=name, run=run, base_dir=str(base_dir), raw=raw, **blocks)
    validate(cfg)
    return cfg


def load_config(path: Union[str, Path]) -> ScenarioConfig:
    path = Path(path)
    text = path.read_text()
    return parse_config_text(text, base_dir=path.resolve().parent, default_name=path.stem)


def validate(cfg: ScenarioConfig) -> None:
    """Re-check module-level invariants by constructing the physics objects.

    Plain ``ValueError`` becomes :class:`ConfigError`; physics-domain errors
    pass through unchanged.
    """
    from . import scenarios

    try:
        if cfg.beam is not None:
            scenarios.build_beam(cfg)
        if cfg.resonator is not None:
            scenarios.build_resonator(cfg)
    except PhysicsDomainError:
        raise
    except ValueError as exc:
        raise ConfigError(f"scenario {cfg.scenario!r}: {exc}") from None
