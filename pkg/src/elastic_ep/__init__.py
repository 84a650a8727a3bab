"""Elastic electron-photon coupling: coupling constants, Fock-space phase
action, and ring-resonator readout of electron-induced phase shifts."""
from . import coupling, fock, resonator_dynamics, resonator_statics
from .coupling import AnalyticBox, ElectronBeam, SampledProfile, compute_coupling, g_phi
from .errors import ConfigError, ElasticEPError, PhysicsDomainError
from .resonator_dynamics import GaussianPulse, RectPulse, SampledWaveform
from .resonator_statics import ResonatorParams

__version__ = "0.1.0"

__all__ = [
    "coupling", "fock", "resonator_statics", "resonator_dynamics",
    "AnalyticBox", "ElectronBeam", "SampledProfile", "compute_coupling", "g_phi",
    "ConfigError", "ElasticEPError", "PhysicsDomainError",
    "GaussianPulse", "RectPulse", "SampledWaveform", "ResonatorParams",
]
