"""Physical model of the one- and two-spin chloroform systems.

Hamiltonians are returned in the (double) rotating frame, divided by hbar.
Basis ordering is |00>, |01>, |10>, |11> with the hydrogen label first;
``I_z |0> = +1/2 |0>``.
"""

from dataclasses import dataclass, field, replace

import numpy as np
from scipy import constants

from .qmat import I_X, I_Y, I_Z, IDENTITY_2, kron

TWO_PI = 2 * np.pi

GAMMA_H = 42.57  # MHz/T, gamma / 2pi
GAMMA_C = 10.71
B0 = 7.0  # T
J_COUPLING = 208.0  # Hz
TEMPERATURE = 293.15  # K
LARMOR_H = TWO_PI * 300e6  # rad/s
LARMOR_C = TWO_PI * 75.5e6
RF_AMPLITUDE = TWO_PI * 25e3  # rad/s, nutation rate on both channels
T1_DEFAULT = 1.0  # s
T2_DEFAULT = 0.3  # s

# prefactor printed next to the normalized two-spin deviation matrix
PRINTED_DEVIATION_PREFACTOR = 5.86e-5


class ConfigError(ValueError):
    """Invalid physical configuration or unknown channel."""


@dataclass(frozen=True)
class Channel:
    name: str
    gamma: float  # MHz/T
    larmor: float  # rad/s
    rf_amplitude: float = RF_AMPLITUDE  # rad/s

    def __post_init__(self):
        if self.gamma <= 0:
            raise ConfigError(f"channel {self.name}: gamma must be positive")
        if self.rf_amplitude <= 0:
            raise ConfigError(f"channel {self.name}: rf_amplitude must be positive")


@dataclass(frozen=True)
class SpinSystem:
    """One or two coupled spin-1/2 channels plus environment constants.

    ``t1`` and ``t2`` hold one value per channel.
    """

    channels: tuple
    j_coupling: float = 0.0
    b0: float = B0
    temperature: float = TEMPERATURE
    t1: tuple = field(default=None)
    t2: tuple = field(default=None)

    def __post_init__(self):
        channels = tuple(self.channels)
        object.__setattr__(self, "channels", channels)
        if not 1 <= len(channels) <= 2:
            raise ConfigError("a spin system has one or two channels")
        names = [c.name for c in channels]
        if len(set(names)) != len(names):
            raise ConfigError(f"duplicate channel names: {names}")
        if len(channels) == 1 and self.j_coupling != 0:
            raise ConfigError("j_coupling must be 0 for a single channel")
        if self.temperature <= 0:
            raise ConfigError("temperature must be positive")
        n = len(channels)
        t1 = (T1_DEFAULT,) * n if self.t1 is None else tuple(self.t1)
        t2 = (T2_DEFAULT,) * n if self.t2 is None else tuple(self.t2)
        if len(t1) != n or len(t2) != n:
            raise ConfigError("t1/t2 need one value per channel")
        for a, b in zip(t1, t2):
            if not a >= b > 0:
                raise ConfigError("relaxation times must satisfy t1 >= t2 > 0")
        object.__setattr__(self, "t1", t1)
        object.__setattr__(self, "t2", t2)

    @property
    def n_spins(self):
        return len(self.channels)

    @property
    def dim(self):
        return 2 ** self.n_spins

    @property
    def channel_names(self):
        return tuple(c.name for c in self.channels)

    def channel_index(self, name):
        try:
            return self.channel_names.index(name)
        except ValueError:
            raise ConfigError(f"unknown channel {name!r}; system has {self.channel_names}") from None

    def channel(self, name):
        return self.channels[self.channel_index(name)]

    def with_changes(self, **kwargs):
        return replace(self, **kwargs)


def hydrogen(**kwargs):
    return Channel("H", kwargs.pop("gamma", GAMMA_H), kwargs.pop("larmor", LARMOR_H), **kwargs)


def carbon(**kwargs):
    return Channel("C", kwargs.pop("gamma", GAMMA_C), kwargs.pop("larmor", LARMOR_C), **kwargs)


def chloroform_1q(**kwargs):
    """Hydrogen of 12C-chloroform: a single uncoupled spin."""
    return SpinSystem(channels=(hydrogen(),), **kwargs)


def chloroform_2q(**kwargs):
    """Hydrogen and carbon of 13C-chloroform, J-coupled."""
    kwargs.setdefault("j_coupling", J_COUPLING)
    return SpinSystem(channels=(hydrogen(), carbon()), **kwargs)


def embed(op, index, n_spins):
    """Extend a single-spin operator to the full space (identity on the other spin)."""
    if n_spins == 1:
        return np.asarray(op, dtype=complex)
    return kron(op, IDENTITY_2) if index == 0 else kron(IDENTITY_2, op)


def h_rot_1q(w1, phi):
    """Resonant rotating-frame RF Hamiltonian ``-w1 (cos(phi) I_x - sin(phi) I_y)``."""
    return -w1 * (np.cos(phi) * I_X - np.sin(phi) * I_Y)


def zz_coupling(j):
    """``2 pi J I_z (x) I_z`` in rad/s."""
    return TWO_PI * j * kron(I_Z, I_Z)


def h_rot_2q(w1_h, phi_h, w1_c, phi_c, j, include_j=True):
    h = kron(h_rot_1q(w1_h, phi_h), IDENTITY_2) + kron(IDENTITY_2, h_rot_1q(w1_c, phi_c))
    if include_j:
        h = h + zz_coupling(j)
    return h


def free_evolution_hamiltonian(system, detunings=None):
    """Generator between and after pulses: channel detunings on I_z plus the J term.

    ``detunings`` are (omega_0 - omega_rf) per channel in rad/s.
    """
    n = system.n_spins
    detunings = (0.0,) * n if detunings is None else tuple(detunings)
    if len(detunings) != n:
        raise ConfigError("need one detuning per channel")
    h = np.zeros((system.dim, system.dim), dtype=complex)
    for k, dw in enumerate(detunings):
        h -= dw * embed(I_Z, k, n)
    if n == 2:
        h += zz_coupling(system.j_coupling)
    return h


def equilibrium_deviation(system):
    """High-temperature deviation matrix, identity removed, max |diagonal| scaled to 1."""
    if system.n_spins == 1:
        return np.diag([1.0, -1.0]).astype(complex)
    g1, g2 = (c.gamma for c in system.channels)
    r = (g1 - g2) / (g1 + g2)
    return np.diag([1.0, r, -r, -1.0]).astype(complex)


def deviation_prefactor(system):
    """Physical Boltzmann scale of the normalized deviation matrix.

    ``hbar B0 2pi sum(gamma) / (2 k_B T)``; gamma is stored as gamma/2pi in MHz/T.
    """
    gamma_sum = sum(c.gamma for c in system.channels) * 1e6 * TWO_PI
    return constants.hbar * system.b0 * gamma_sum / (2 * constants.k * system.temperature)
