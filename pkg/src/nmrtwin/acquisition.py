"""Measurement chain: FID simulation, T2 envelope, noise, spectrum, peak integrals."""

import csv
import io
from dataclasses import dataclass, field

import numpy as np

from .qmat import I_PLUS, as_matrix, is_hermitian
from .spin import ConfigError, embed, free_evolution_hamiltonian

DEFAULT_SAMPLES = 4096
HALF_WIDTH_BINS = 4


@dataclass(frozen=True)
class AcquisitionParams:
    n_samples: int = DEFAULT_SAMPLES
    dwell: float = 1 / (16 * 208.0)  # s; 16 J spectral window for the default two-spin system
    detunings: tuple = None  # rad/s per channel, None means on resonance
    noise_sigma: float = 0.0
    seed: int = 0
    decoherence: bool = True

    def __post_init__(self):
        n = self.n_samples
        if n < 2 or n & (n - 1):
            raise ConfigError("n_samples must be a power of two >= 2")
        if not self.dwell > 0:
            raise ConfigError("dwell must be positive")
        if self.noise_sigma < 0:
            raise ConfigError("noise_sigma must be non-negative")
        if not 0 <= int(self.seed) < 2**64:
            raise ConfigError("seed must be an unsigned 64-bit integer")

    @property
    def bin_width(self):
        return 1 / (self.n_samples * self.dwell)

    def replace(self, **kwargs):
        from dataclasses import replace

        return replace(self, **kwargs)


def default_params(system, **kwargs):
    """Acquisition defaults: a 16 J window for two spins, 2 kHz for one."""
    window = 16 * system.j_coupling if system.n_spins == 2 else 2000.0
    kwargs.setdefault("dwell", 1 / window)
    return AcquisitionParams(**kwargs)


@dataclass(frozen=True)
class Fid:
    channel: str
    samples: np.ndarray
    dwell: float

    @property
    def times(self):
        return np.arange(len(self.samples)) * self.dwell


@dataclass(frozen=True)
class Spectrum:
    channel: str
    amplitudes: np.ndarray
    freq_axis: np.ndarray  # Hz offsets from the channel carrier, ascending

    @property
    def bin_width(self):
        return float(self.freq_axis[1] - self.freq_axis[0])


@dataclass(frozen=True)
class PeakWindow:
    center: float  # Hz
    half_width: float  # Hz

    def __post_init__(self):
        if not self.half_width > 0:
            raise ConfigError("peak half_width must be positive")


@dataclass(frozen=True)
class PeakSpec:
    channel: str
    window: PeakWindow
    gamma_index: int
    element: tuple = field(default=None)  # (row, col), 0-based, of the density-matrix element read


def _check_window(system, params):
    if system.n_spins == 2 and 1 / params.dwell <= 4 * abs(system.j_coupling):
        raise ConfigError("spectral window 1/dwell must exceed 4 J for a coupled pair")


def simulate_fid(rho, system, channel, params):
    """Transverse magnetization on one channel, sampled at ``t_k = k * dwell``.

    ``samples[k] = Tr(rho(t_k) I_+^channel) / dim * exp(-t_k / T2)`` plus noise
    when ``params.noise_sigma > 0``.
    """
    rho = as_matrix(rho)
    if not is_hermitian(rho, tol=1e-9):
        raise ValueError("simulate_fid expects a Hermitian density matrix")
    index = system.channel_index(channel)
    _check_window(system, params)
    h = free_evolution_hamiltonian(system, params.detunings)
    evals, evecs = np.linalg.eigh(h)
    # in the eigenbasis of h, rho_ab(t) = rho_ab exp(-i (E_a - E_b) t)
    rho_e = evecs.conj().T @ rho @ evecs
    obs_e = evecs.conj().T @ embed(I_PLUS, index, system.n_spins) @ evecs
    weights = (rho_e * obs_e.T).ravel()
    omegas = (evals[:, None] - evals[None, :]).ravel()
    keep = np.abs(weights) > 0
    t = np.arange(params.n_samples) * params.dwell
    samples = np.exp(-1j * np.outer(t, omegas[keep])) @ weights[keep] if keep.any() else np.zeros(len(t), complex)
    samples = samples / system.dim
    if params.decoherence:
        samples = samples * np.exp(-t / system.t2[index])
    fid = Fid(channel, np.asarray(samples, dtype=complex), params.dwell)
    if params.noise_sigma > 0:
        fid = add_noise(fid, params.noise_sigma, params.seed)
    return fid


def add_noise(fid, sigma, seed):
    """Add circular complex Gaussian noise with ``E|n|^2 = sigma^2`` per sample.

    ``seed`` is an int or a sequence of ints (a SeedSequence entropy path).
    """
    if sigma < 0:
        raise ValueError("sigma must be non-negative")
    if sigma == 0:
        return fid
    rng = np.random.default_rng(list(seed) if isinstance(seed, tuple) else seed)
    n = len(fid.samples)
    noise = (rng.normal(size=n) + 1j * rng.normal(size=n)) * (sigma / np.sqrt(2))
    return Fid(fid.channel, fid.samples + noise, fid.dwell)


def frequency_axis(n, dwell):
    """Ascending bin frequencies spanning (-1/(2 dwell), +1/(2 dwell)]."""
    return (np.arange(n) - n // 2 + 1) / (n * dwell)


def fid_to_spectrum(fid):
    """Discrete Fourier transform scaled by the dwell time.

    A sample train ``exp(+i 2 pi f t_k)`` with ``f`` on a bin lands in the bin at ``+f``.
    """
    n = len(fid.samples)
    raw = np.fft.fft(fid.samples) * fid.dwell
    order = (np.arange(n) - n // 2 + 1) % n
    return Spectrum(fid.channel, raw[order], frequency_axis(n, fid.dwell))


def integrate_peak(spec, window):
    """Sum of complex amplitudes within ``window`` times the bin width."""
    lo, hi = spec.freq_axis[0], spec.freq_axis[-1]
    if window.center - window.half_width < lo - 1e-9 or window.center + window.half_width > hi + 1e-9:
        raise ConfigError(f"peak window {window} lies outside the spectral range [{lo}, {hi}]")
    inside = np.abs(spec.freq_axis - window.center) <= window.half_width * (1 + 1e-12)
    return complex(np.sum(spec.amplitudes[inside]) * spec.bin_width)


def peak_table(system, params=None):
    """Integration windows and the Gamma index each one reads.

    One spin: a single window at 0 Hz.  Two spins: H at +J/2 (Gamma_1) and -J/2
    (Gamma_2); C at +J/2 (Gamma_3) and -J/2 (Gamma_4).
    """
    params = params or default_params(system)
    half_width = HALF_WIDTH_BINS * params.bin_width
    if system.n_spins == 1:
        return [PeakSpec(system.channel_names[0], PeakWindow(0.0, half_width), 1, (1, 0))]
    j = system.j_coupling
    if j == 0 or abs(j) / 2 <= half_width:
        raise ConfigError("J too small: the doublet windows overlap (degenerate at 0 Hz)")
    h, c = system.channel_names
    return [
        PeakSpec(h, PeakWindow(j / 2, half_width), 1, (2, 0)),
        PeakSpec(h, PeakWindow(-j / 2, half_width), 2, (3, 1)),
        PeakSpec(c, PeakWindow(j / 2, half_width), 3, (1, 0)),
        PeakSpec(c, PeakWindow(-j / 2, half_width), 4, (3, 2)),
    ]


def acquire_gammas(rho, system, params, peaks=None, contamination=None, seed_path=(), record=None):
    """Gamma readout for every peak: one FID per channel, spectrum, window integrals.

    ``contamination`` is an optional mapping channel -> Fid summed into that
    channel's FID before noise and transform.  Noise for channel ``k`` is drawn
    from the stream ``(params.seed, *seed_path, k)`` so every acquisition in a
    run is independent yet reproducible.  When ``record`` is a list, the final
    (fid, spectrum) pair of every channel is appended to it.
    """
    peaks = peaks or peak_table(system, params)
    clean = params.replace(noise_sigma=0.0)
    out = {}
    for k, channel in enumerate(dict.fromkeys(p.channel for p in peaks)):
        fid = simulate_fid(rho, system, channel, clean)
        if contamination and channel in contamination:
            fid = Fid(channel, fid.samples + contamination[channel].samples, fid.dwell)
        if params.noise_sigma > 0:
            fid = add_noise(fid, params.noise_sigma, (params.seed, *seed_path, k))
        spec = fid_to_spectrum(fid)
        if record is not None:
            record.append((fid, spec))
        for peak in peaks:
            if peak.channel == channel:
                out[peak.gamma_index] = integrate_peak(spec, peak.window)
    return out


def _write_csv(header, axis, values):
    buf = io.StringIO(newline="")
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for i, (x, v) in enumerate(zip(axis, values)):
        writer.writerow([i, repr(float(x)), repr(float(v.real)), repr(float(v.imag))])
    return buf.getvalue()


def fid_to_csv(fid):
    return _write_csv(["index", "time_s", "re", "im"], fid.times, fid.samples)


def spectrum_to_csv(spec):
    return _write_csv(["index", "freq_hz", "re", "im"], spec.freq_axis, spec.amplitudes)


def read_csv(text):
    """Inverse of the CSV writers: returns (axis, complex values)."""
    rows = list(csv.reader(io.StringIO(text)))[1:]
    axis = np.array([float(r[1]) for r in rows])
    values = np.array([complex(float(r[2]), float(r[3])) for r in rows])
    return axis, values
