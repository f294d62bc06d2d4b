"""Multipath channel realizations, propagation through the time-varying
channel, the large-array equivalent-channel oracle, receiver noise and
Doppler-spread measurement."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .arrays import ArrayGeometry, BeamformerBank, DopplerParams, steering_vector

MODES = ("ideal", "aligned", "continuum")

SNR_DB_CAP = 300.0
"""Upper clamp for snr_db; beyond this the noise is numerically zero anyway."""


@dataclass(frozen=True)
class PathSet:
    """One multipath realization: departure angles, complex gains and the
    propagation mode that produced them.

    ``ideal`` and ``aligned`` place one path on every beam direction;
    ``ideal`` additionally drops cross-beam terms during propagation so the
    large-array limit holds exactly.  ``continuum`` draws angles at random.
    """

    aods: np.ndarray
    gains: np.ndarray
    mode: str

    def __post_init__(self):
        if self.mode not in MODES:
            raise ValueError(f"mode must be one of {MODES}, got {self.mode!r}")
        if len(self.aods) != len(self.gains):
            raise ValueError("aods and gains must have equal length")
        if len(self.aods) == 0:
            raise ValueError("path set must be nonempty")
        if np.any(self.aods <= 0.0) or np.any(self.aods >= np.pi):
            raise ValueError("all departure angles must lie strictly inside (0, pi)")

    @property
    def num_paths(self) -> int:
        return len(self.aods)


def draw_paths(mode: str, rng: np.random.Generator, bank: BeamformerBank,
               num_paths: int | None = None, cosine_density: bool = False) -> PathSet:
    """Draw one channel realization.

    In ``aligned`` and ``ideal`` modes there is exactly one path per beam,
    sitting on the beam direction, with i.i.d. CN(0, 1/Q) gains.  In
    ``continuum`` mode ``num_paths`` angles are drawn uniformly over (0, pi)
    (or uniformly in the cosine when ``cosine_density`` is set) with
    i.i.d. CN(0, 1/P) gains.  Total mean path power is 1 in every mode.
    """
    if mode not in MODES:
        raise ValueError(f"mode must be one of {MODES}, got {mode!r}")
    if mode == "continuum":
        if num_paths is None or num_paths < 1:
            raise ValueError("continuum mode needs num_paths >= 1")
        if cosine_density:
            aods = np.arccos(rng.uniform(-1.0, 1.0, size=num_paths))
        else:
            aods = rng.uniform(0.0, np.pi, size=num_paths)
        p = num_paths
    else:
        if num_paths is not None and num_paths != bank.num_beams:
            raise ValueError(f"{mode} mode has one path per beam; "
                             f"num_paths must be {bank.num_beams} or omitted")
        aods = bank.directions.copy()
        p = bank.num_beams
    re = rng.standard_normal(p)
    im = rng.standard_normal(p)
    gains = (re + 1j * im) * np.sqrt(0.5 / p)
    return PathSet(aods=aods, gains=gains, mode=mode)


def beam_coupling(aods: np.ndarray, bank: BeamformerBank) -> np.ndarray:
    """Path-to-beam coupling matrix.

    Entry (p, q) is ``a(theta_p)^T diag(w) conj(a(vartheta_q))``, the gain
    with which beam q leaks onto path p before the random phase and zeta
    are applied.  For uniform weights and theta_p = vartheta_q it equals M.
    """
    m = np.arange(bank.geometry.num_antennas)
    d = bank.geometry.spacing
    # rows: response at the path angles, columns: conjugate beam responses
    pa = np.exp(2j * np.pi * d * np.outer(np.cos(aods), m))
    ba = np.exp(-2j * np.pi * d * np.outer(np.cos(bank.directions), m))
    return (pa * bank.weights) @ ba.T


def equivalent_channel(paths: PathSet, bank: BeamformerBank, block_index: int,
                       beam_subset: np.ndarray | None = None) -> complex:
    """Large-array equivalent channel of one block.

    Returns ``zeta * (sum_m w_m) * sum_{q in S} alpha_q * exp(-j*pi*phi_{k,q})``
    where S is the set of beams feeding this receive stream.  ``beam_subset``
    uses 1-based beam indices as produced by ``beamformer_assignment``; None
    means all beams.  Only defined when paths sit on the beams.
    """
    if paths.mode == "continuum":
        raise ValueError("equivalent channel is defined only for ideal/aligned modes")
    phases = bank.phase_schedule[block_index]
    terms = paths.gains * np.exp(-1j * np.pi * phases)
    if beam_subset is not None:
        terms = terms[np.asarray(beam_subset) - 1]
    return complex(bank.zeta * np.sum(bank.weights) * np.sum(terms))


def propagate(paths: PathSet, transmit_matrices: np.ndarray, geom: ArrayGeometry,
              dp: DopplerParams, time_offset: int = 0) -> np.ndarray:
    """Noise-free received signal for a stack of per-beam transmit matrices.

    ``transmit_matrices`` stacks one (M, N) matrix per beam.  The received
    sample is the path sum ``r(n) = sum_p alpha_p [a(theta_p)^T X](n)
    * exp(j*omega*T_s*(n0+n)*cos(theta_p))`` with X summed over beams.  In
    ideal mode the cross-beam terms are dropped (path p only sees beam p),
    which realizes the large-array limit exactly.

    ``time_offset`` must match the offset the transmit matrices were built
    with, so path Doppler and pre-compensation share one symbol clock.
    """
    xs = np.asarray(transmit_matrices)
    if xs.ndim != 3:
        raise ValueError("expected a (num_beams, M, N) stack of transmit matrices")
    if xs.shape[1] != geom.num_antennas:
        raise ValueError("antenna dimension does not match the array geometry")
    num_samples = xs.shape[2]
    n = time_offset + np.arange(num_samples)
    omega_ts = dp.omega * dp.symbol_interval
    out = np.zeros(num_samples, dtype=np.complex128)
    if paths.mode == "ideal":
        if paths.num_paths != xs.shape[0]:
            raise ValueError("ideal mode needs exactly one path per beam")
        per_path = xs
    else:
        per_path = np.broadcast_to(xs.sum(axis=0), (paths.num_paths,) + xs.shape[1:])
    for p in range(paths.num_paths):
        a = steering_vector(paths.aods[p], geom)
        ramp = np.exp(1j * omega_ts * n * np.cos(paths.aods[p]))
        out += paths.gains[p] * (a @ per_path[p]) * ramp
    return out


def noise_sigma(snr_db: float, reference_power: float) -> float:
    """Complex-noise standard deviation for a target average SNR.

    ``reference_power`` is the analytic mean received symbol power; the
    returned sigma satisfies ``sigma**2 = reference_power * 10**(-snr/10)``.
    snr_db values above 300 dB are clamped (noise already below rounding);
    non-finite snr_db is rejected rather than silently treated as infinite.
    """
    if not np.isfinite(snr_db):
        raise ValueError(f"snr_db must be finite, got {snr_db}")
    if reference_power <= 0.0:
        raise ValueError("reference_power must be positive")
    snr = min(float(snr_db), SNR_DB_CAP)
    return float(np.sqrt(reference_power * 10.0 ** (-snr / 10.0)))


def add_noise(clean: np.ndarray, snr_db: float, reference_power: float,
              rng: np.random.Generator) -> np.ndarray:
    """Add circular complex Gaussian noise of variance
    ``reference_power * 10**(-snr_db/10)`` per sample."""
    clean = np.asarray(clean)
    sigma = noise_sigma(snr_db, reference_power)
    re = rng.standard_normal(clean.size)
    im = rng.standard_normal(clean.size)
    return clean + sigma * np.sqrt(0.5) * (re + 1j * im).reshape(clean.shape)


def conventional_channel_series(paths: PathSet, bank: BeamformerBank,
                                dp: DopplerParams, num_samples: int,
                                chunk: int = 8192) -> np.ndarray:
    """Time series of the received sample stream when every beam carries a
    constant unit symbol under one phase realization.

    This is the effective channel of the single-stream scheme observed over
    ``num_samples`` symbol intervals; its spectral width is the residual
    Doppler spread left after per-beam pre-compensation.
    """
    if num_samples < 1:
        raise ValueError("num_samples must be >= 1")
    g = beam_coupling(paths.aods, bank)
    omega_ts = dp.omega * dp.symbol_interval
    cos_p = np.cos(paths.aods)
    cos_q = np.cos(bank.directions)
    beam_phase = bank.zeta * np.exp(-1j * np.pi * bank.phase_schedule[0])
    # each sample advances every phasor by one fixed rotation; anchoring the
    # recurrence per chunk keeps the accumulated rounding below ~1e-12
    step_p = np.exp(1j * omega_ts * cos_p)
    step_q = np.exp(-1j * omega_ts * cos_q)
    out = np.empty(num_samples, dtype=np.complex128)
    for start in range(0, num_samples, chunk):
        stop = min(start + chunk, num_samples)
        u = np.broadcast_to(step_p[:, None], (cos_p.size, stop - start)).copy()
        u[:, 0] = paths.gains * np.exp(1j * omega_ts * cos_p * start)
        np.cumprod(u, axis=1, out=u)
        v = np.broadcast_to(step_q[:, None], (cos_q.size, stop - start)).copy()
        v[:, 0] = beam_phase * np.exp(-1j * omega_ts * cos_q * start)
        np.cumprod(v, axis=1, out=v)
        out[start:stop] = np.einsum("pn,pn->n", u, g @ v)
    return out


def doppler_spread(series: np.ndarray, symbol_interval: float) -> float:
    """RMS spectral spread of a channel time series, in Hz.

    Computed from the Hann-windowed periodogram as the power-weighted
    standard deviation of frequency about the power-weighted mean
    frequency.  A constant series has zero spread.  The carrier is kept in
    the spectrum: subtracting the sample mean would maul slow near-carrier
    components that dominate a compensated channel.
    """
    series = np.asarray(series)
    if series.size < 64:
        raise ValueError(f"need at least 64 samples, got {series.size}")
    if symbol_interval <= 0.0:
        raise ValueError("symbol_interval must be positive")
    # a numerically constant series leaves only rounding residue behind
    residue = float(np.sum(np.abs(series - np.mean(series)) ** 2))
    if residue <= 1e-20 * float(np.sum(np.abs(series) ** 2)):
        return 0.0
    # rectangular-window leakage decays too slowly for a finite second
    # moment; the periodic Hann window confines a pure tone to three bins
    window = 0.5 - 0.5 * np.cos(2.0 * np.pi * np.arange(series.size) / series.size)
    power = np.abs(np.fft.fft(window * series)) ** 2
    total = float(np.sum(power))
    if total == 0.0:
        return 0.0
    freqs = np.fft.fftfreq(series.size, d=symbol_interval)
    mean_freq = float(np.sum(freqs * power) / total)
    return float(np.sqrt(np.sum((freqs - mean_freq) ** 2 * power) / total))
