"""Simulated one- and two-spin liquid-state NMR quantum computer.

Modules, bottom up: :mod:`~nmrtwin.qmat` (matrix kernels), :mod:`~nmrtwin.spin`
(physical model), :mod:`~nmrtwin.pulses` (sequences and compilation),
:mod:`~nmrtwin.seqlang` (pulse-program text format), :mod:`~nmrtwin.acquisition`
(FID, spectrum, peak integrals), :mod:`~nmrtwin.tomography` (reconstruction),
:mod:`~nmrtwin.metrics` (error metric and reports), :mod:`~nmrtwin.experiments`
and :mod:`~nmrtwin.cli` (end-to-end runs).
"""

from .acquisition import AcquisitionParams, Fid, PeakWindow, Spectrum, simulate_fid
from .metrics import ExperimentReport, deviation_error, emit_report
from .pulses import PulseSequence, apply, named_sequence, sequence_unitary, temporal_average
from .qmat import ContractError, ShapeError
from .spin import ConfigError, SpinSystem, chloroform_1q, chloroform_2q, equilibrium_deviation
from .tomography import StateTomography, build_measurement_model, reconstruct, reconstruct_state

__version__ = "0.1.0"

__all__ = [
    "AcquisitionParams",
    "ConfigError",
    "ContractError",
    "ExperimentReport",
    "Fid",
    "PeakWindow",
    "PulseSequence",
    "ShapeError",
    "Spectrum",
    "SpinSystem",
    "StateTomography",
    "apply",
    "build_measurement_model",
    "chloroform_1q",
    "chloroform_2q",
    "deviation_error",
    "emit_report",
    "equilibrium_deviation",
    "named_sequence",
    "reconstruct",
    "reconstruct_state",
    "sequence_unitary",
    "simulate_fid",
    "temporal_average",
]
