"""Monte Carlo orchestration: per-trial pipelines for each scheme, SNR
sweeps with error-target stopping, diversity-order fitting, and the
determinism contract.

Every trial draws its variates from an independent counter-based RNG stream
keyed by (master seed, trial index), and all randomness is drawn in one
fixed order by `_draw_variates` regardless of backend.  Aggregation sums
integer error counts, so results are bit-identical however trials are
scheduled across workers.

Backends: ``numba`` runs the batched kernels in :mod:`beamdiv.kernels`
(released GIL, so threads scale); ``numpy`` runs a reference path composed
from the public module operations.  Selected via the BEAMDIV_BACKEND
environment variable or per call; BEAMDIV_WORKERS sets the default thread
count.
"""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from . import kernels
from .arrays import (
    ArrayGeometry,
    BeamformerBank,
    DopplerParams,
    normalization_coefficient,
    select_directions,
    transmit_matrix,
)
from .channel import MODES, PathSet, noise_sigma, propagate
from .coding import (
    QPSK,
    alamouti_frames,
    assemble_frame,
    beamformer_assignment,
    map_bits,
    pilot_sequence,
    rotation_matrix,
    slice_indices,
    ssd_blocks,
)
from .receiver import (
    alamouti_combine,
    candidate_matrix,
    equalize,
    estimate_channel,
    ml_detect,
)

SCHEMES = ("ssd_dc", "alamouti_dc", "nodiv_dc")

BATCH_TRIALS = 256
"""Trials per kernel call; stopping rules are evaluated at batch boundaries."""

BACKEND_ENV = "BEAMDIV_BACKEND"
WORKERS_ENV = "BEAMDIV_WORKERS"


class FitUnavailableError(Exception):
    """Raised when too few positive-SER points fall inside the fit window."""


@dataclass(frozen=True)
class SimConfig:
    """Complete description of one simulation run.

    Defaults describe a 64-element array at 0.45 spacing, 5.5 GHz carrier,
    100 m/s terminal speed, 1 Msym/s, 16-symbol pilots and 64-symbol data
    blocks.
    """

    scheme: str = "ssd_dc"
    num_antennas: int = 64
    spacing: float = 0.45
    num_beams: int = 8
    k_blocks: int = 2
    j_symbols: int = 64
    num_pilots: int = 16
    mode: str = "aligned"
    num_paths: int = 128
    carrier_hz: float = 5.5e9
    speed_mps: float = 100.0
    symbol_rate_hz: float = 1.0e6
    snr_db_list: tuple = (0.0, 5.0, 10.0, 15.0, 20.0, 25.0, 30.0)
    seed: int = 0
    max_trials: int = 2_000_000
    target_errors: int = 200

    def __post_init__(self):
        if self.scheme not in SCHEMES:
            raise ValueError(f"scheme must be one of {SCHEMES}, got {self.scheme!r}")
        if self.mode not in MODES:
            raise ValueError(f"mode must be one of {MODES}, got {self.mode!r}")
        if not 1 <= self.k_blocks <= 6:
            raise ValueError(f"k must lie in 1..6, got {self.k_blocks}")
        for name in ("num_antennas", "num_beams", "j_symbols", "num_pilots",
                     "num_paths", "max_trials", "target_errors"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be >= 1, got {getattr(self, name)}")
        for name in ("carrier_hz", "symbol_rate_hz"):
            if getattr(self, name) <= 0.0:
                raise ValueError(f"{name} must be positive, got {getattr(self, name)}")
        if not 0.0 < self.spacing <= 1.0:
            raise ValueError(f"spacing must lie in (0, 1], got {self.spacing}")
        if self.speed_mps < 0.0:
            raise ValueError(f"speed_mps must be non-negative, got {self.speed_mps}")
        if not 0 <= self.seed < 2 ** 64:
            raise ValueError("seed must fit in an unsigned 64-bit integer")
        if len(self.snr_db_list) == 0:
            raise ValueError("snr_db_list must be nonempty")
        if not all(np.isfinite(s) for s in self.snr_db_list):
            raise ValueError("snr_db_list entries must be finite")
        if self.scheme == "alamouti_dc":
            if self.num_beams < 2:
                raise ValueError("alamouti_dc needs at least 2 beams")
            if (self.k_blocks * self.j_symbols) % 2 != 0:
                raise ValueError("alamouti_dc needs an even data symbol count k*j")

    @property
    def data_symbols(self) -> int:
        """Data symbols per frame, identical for every scheme."""
        return self.k_blocks * self.j_symbols

    def geometry(self) -> ArrayGeometry:
        return ArrayGeometry(self.num_antennas, self.spacing)

    def doppler(self) -> DopplerParams:
        return DopplerParams(self.carrier_hz, self.speed_mps, 1.0 / self.symbol_rate_hz)


@dataclass(frozen=True)
class SerPoint:
    scheme: str
    snr_db: float
    trials: int
    symbols: int
    errors: int
    ser: float
    ser_stderr: float
    target_met: bool


@dataclass(frozen=True)
class DiversityFit:
    """Least-squares slope of log10(SER) against SNR, as a diversity order."""

    order: float
    window_db: tuple
    num_points: int


@dataclass(frozen=True)
class SweepResult:
    scheme: str
    points: tuple
    fit: DiversityFit | None


class TrialDraw(NamedTuple):
    """All random variates of one trial, in draw order."""

    phases: np.ndarray
    aods: np.ndarray
    gains: np.ndarray
    bits: np.ndarray
    noise: np.ndarray


def active_backend(override: str | None = None) -> str:
    """Resolve the backend name from the override or BEAMDIV_BACKEND.

    Defaults to ``numba`` whenever numba imported successfully.
    """
    name = override or os.environ.get(BACKEND_ENV)
    if name is None:
        return "numba" if kernels.NUMBA_AVAILABLE else "numpy"
    if name not in ("numba", "numpy"):
        raise ValueError(f"unknown backend {name!r}; choose numba or numpy")
    if name == "numba" and not kernels.NUMBA_AVAILABLE:
        raise RuntimeError("numba backend requested but numba is not installed")
    return name


def _resolve_workers(workers: int | None) -> int:
    if workers is None:
        raw = os.environ.get(WORKERS_ENV)
        if raw is None:
            return 1
        try:
            workers = int(raw)
        except ValueError:
            raise ValueError(f"{WORKERS_ENV} must be an integer, got {raw!r}")
    if workers < 1:
        raise ValueError(f"worker count must be >= 1, got {workers}")
    return workers


@dataclass(frozen=True)
class _Statics:
    """Config-derived constants shared by every trial of a sweep."""

    geom: ArrayGeometry
    dp: DopplerParams
    directions: np.ndarray
    cos_dirs: np.ndarray
    weights: np.ndarray
    zeta: float
    pilot: np.ndarray
    theta: np.ndarray | None
    cand_digits: np.ndarray | None
    cand_tab: np.ndarray | None
    phase_rows: int
    noise_len: int
    reference_power: float
    omega_ts: float


def _statics(cfg: SimConfig) -> _Statics:
    geom = cfg.geometry()
    dp = cfg.doppler()
    directions = select_directions(cfg.num_beams)
    weights = np.ones(cfg.num_antennas, dtype=np.complex128)
    zeta = normalization_coefficient(cfg.num_beams, weights)
    pilot = pilot_sequence(cfg.num_pilots)
    theta = cand_digits = cand_tab = None
    if cfg.scheme == "ssd_dc":
        theta = rotation_matrix(cfg.k_blocks)
        cand_digits = candidate_matrix(cfg.k_blocks, QPSK)
        cand_tab = theta @ QPSK.points[cand_digits].T
    phase_rows = cfg.k_blocks if cfg.scheme == "ssd_dc" else 1
    if cfg.scheme == "alamouti_dc":
        noise_len = 2 * cfg.num_pilots + cfg.data_symbols
    else:
        noise_len = cfg.k_blocks * (cfg.num_pilots + cfg.j_symbols)
    reference_power = (zeta * abs(np.sum(weights))) ** 2
    return _Statics(geom=geom, dp=dp, directions=directions,
                    cos_dirs=np.cos(directions), weights=weights, zeta=zeta,
                    pilot=pilot, theta=theta, cand_digits=cand_digits,
                    cand_tab=cand_tab, phase_rows=phase_rows,
                    noise_len=noise_len, reference_power=reference_power,
                    omega_ts=dp.omega * dp.symbol_interval)


def trial_rng(master_seed: int, trial_index: int) -> np.random.Generator:
    """Independent counter-based stream for one trial."""
    key = np.array([master_seed, trial_index], dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=key))


def _draw_variates(cfg: SimConfig, st: _Statics, rng: np.random.Generator) -> TrialDraw:
    """Draw one trial's randomness in the fixed protocol order.

    Matches drawing a beamformer bank first and the path set second, then
    data bits and unit-variance complex noise; both backends consume the
    same stream, so they see identical realizations.
    """
    phases = rng.uniform(0.0, 2.0, size=(st.phase_rows, cfg.num_beams))
    if cfg.mode == "continuum":
        aods = rng.uniform(0.0, np.pi, size=cfg.num_paths)
        p = cfg.num_paths
    else:
        aods = st.directions
        p = cfg.num_beams
    g_re = rng.standard_normal(p)
    g_im = rng.standard_normal(p)
    gains = (g_re + 1j * g_im) * np.sqrt(0.5 / p)
    bits = rng.integers(0, 2, size=2 * cfg.data_symbols)
    n_re = rng.standard_normal(st.noise_len)
    n_im = rng.standard_normal(st.noise_len)
    noise = (n_re + 1j * n_im) * np.sqrt(0.5)
    return TrialDraw(phases=phases, aods=aods, gains=gains, bits=bits, noise=noise)


def _kernel_batch(cfg: SimConfig, st: _Statics, sigma: float,
                  trial_indices: np.ndarray) -> np.ndarray:
    """Draw a batch of trials and run it through the jitted kernel."""
    batch = len(trial_indices)
    p = cfg.num_paths if cfg.mode == "continuum" else cfg.num_beams
    cos_paths = np.empty((batch, p))
    alpha = np.empty((batch, p), dtype=np.complex128)
    phases = np.empty((batch, st.phase_rows, cfg.num_beams))
    bits = np.empty((batch, 2 * cfg.data_symbols), dtype=np.int64)
    noise = np.empty((batch, st.noise_len), dtype=np.complex128)
    for i, idx in enumerate(trial_indices):
        draw = _draw_variates(cfg, st, trial_rng(cfg.seed, int(idx)))
        cos_paths[i] = np.cos(draw.aods)
        alpha[i] = draw.gains
        phases[i] = draw.phases
        bits[i] = draw.bits
        noise[i] = draw.noise
    ideal = cfg.mode == "ideal"
    if cfg.scheme == "ssd_dc":
        return kernels.ssd_trials(cos_paths, alpha, phases, bits, noise, sigma,
                                  st.cos_dirs, st.weights, st.zeta, cfg.spacing,
                                  st.omega_ts, st.cand_tab, st.cand_digits,
                                  st.pilot, ideal)
    if cfg.scheme == "nodiv_dc":
        return kernels.nodiv_trials(cos_paths, alpha, phases, bits, noise, sigma,
                                    st.cos_dirs, st.weights, st.zeta, cfg.spacing,
                                    st.omega_ts, cfg.k_blocks, st.pilot, ideal,
                                    QPSK.points)
    return kernels.alamouti_trials(cos_paths, alpha, phases, bits, noise, sigma,
                                   st.cos_dirs, st.weights, st.zeta, cfg.spacing,
                                   st.omega_ts, st.pilot, ideal, QPSK.points)


def _numpy_trial(cfg: SimConfig, st: _Statics, sigma: float, draw: TrialDraw) -> int:
    """Reference pipeline for one trial, composed from the public ops."""
    bank = BeamformerBank(geometry=st.geom, directions=st.directions,
                          phase_schedule=draw.phases, weights=st.weights,
                          zeta=st.zeta)
    paths = PathSet(aods=draw.aods, gains=draw.gains, mode=cfg.mode)
    symbols = map_bits(draw.bits)
    d_idx = 2 * draw.bits[0::2] + draw.bits[1::2]
    k, j, n_p = cfg.k_blocks, cfg.j_symbols, cfg.num_pilots
    block_len = n_p + j
    if cfg.scheme == "alamouti_dc":
        streams = alamouti_frames(symbols, st.pilot)
        odd, _even = beamformer_assignment(cfg.num_beams)
        odd_mask = np.isin(np.arange(1, cfg.num_beams + 1), odd)
        xs = np.stack([
            transmit_matrix(bank, 0, q, streams[0] if odd_mask[q] else streams[1], st.dp)
            for q in range(cfg.num_beams)
        ])
        r = propagate(paths, xs, st.geom, st.dp) + sigma * draw.noise
        h1 = estimate_channel(r[:n_p], st.pilot)
        h2 = estimate_channel(r[n_p:2 * n_p], st.pilot)
        half = cfg.data_symbols // 2
        if abs(h1) ** 2 + abs(h2) ** 2 == 0.0:
            return cfg.data_symbols
        soft1, soft2 = alamouti_combine(r[2 * n_p:2 * n_p + half],
                                        r[2 * n_p + half:], h1, h2)
        detected = np.concatenate([slice_indices(soft1), slice_indices(soft2)])
        return int(np.count_nonzero(detected != d_idx))
    if cfg.scheme == "ssd_dc":
        data_rows = ssd_blocks(symbols, st.theta)
    else:
        data_rows = symbols.reshape(j, k).T
    frame = assemble_frame(st.pilot, data_rows)
    xs = np.stack([
        np.hstack([
            transmit_matrix(bank, kk if cfg.scheme == "ssd_dc" else 0, q,
                            frame[kk], st.dp, time_offset=kk * block_len)
            for kk in range(k)
        ])
        for q in range(cfg.num_beams)
    ])
    r = propagate(paths, xs, st.geom, st.dp) + sigma * draw.noise
    h_hat = np.array([estimate_channel(r[kk * block_len:kk * block_len + n_p], st.pilot)
                      for kk in range(k)])
    errors = 0
    if cfg.scheme == "ssd_dc":
        data = r.reshape(k, block_len)[:, n_p:]
        for i in range(j):
            digits = ml_detect(data[:, i], h_hat, st.theta, QPSK)
            errors += int(np.count_nonzero(digits != d_idx[i * k:(i + 1) * k]))
        return errors
    for kk in range(k):
        truth = d_idx[np.arange(j) * k + kk]
        segment = r[kk * block_len + n_p:(kk + 1) * block_len]
        if h_hat[kk] == 0:
            errors += j
            continue
        detected = slice_indices(equalize(segment, h_hat[kk]))
        errors += int(np.count_nonzero(detected != truth))
    return errors


def _numpy_batch(cfg: SimConfig, st: _Statics, sigma: float,
                 trial_indices: np.ndarray) -> np.ndarray:
    out = np.empty(len(trial_indices), dtype=np.int64)
    for i, idx in enumerate(trial_indices):
        draw = _draw_variates(cfg, st, trial_rng(cfg.seed, int(idx)))
        out[i] = _numpy_trial(cfg, st, sigma, draw)
    return out


def run_trial(cfg: SimConfig, snr_db: float, trial_index: int,
              backend: str | None = None) -> tuple[int, int]:
    """Run one frame trial; returns (symbol errors, data symbols).

    Deterministic in (cfg.seed, trial_index) and identical for both
    backends up to floating-point rounding of borderline decisions.
    """
    st = _statics(cfg)
    sigma = noise_sigma(snr_db, st.reference_power)
    indices = np.array([trial_index])
    if active_backend(backend) == "numba":
        errors = _kernel_batch(cfg, st, sigma, indices)
    else:
        errors = _numpy_batch(cfg, st, sigma, indices)
    return int(errors[0]), cfg.data_symbols


def _sweep_point(cfg: SimConfig, st: _Statics, snr_db: float, backend: str,
                 workers: int, pool: ThreadPoolExecutor | None) -> SerPoint:
    sigma = noise_sigma(snr_db, st.reference_power)
    runner = _kernel_batch if backend == "numba" else _numpy_batch
    err_sum = 0
    err_sq_sum = 0
    trials = 0
    while trials < cfg.max_trials and err_sum < cfg.target_errors:
        batch = min(BATCH_TRIALS, cfg.max_trials - trials)
        indices = np.arange(trials, trials + batch)
        if pool is not None and batch >= 2 * workers:
            chunks = np.array_split(indices, workers)
            futures = [pool.submit(runner, cfg, st, sigma, c) for c in chunks]
            errs = np.concatenate([f.result() for f in futures])
        else:
            errs = runner(cfg, st, sigma, indices)
        err_sum += int(errs.sum())
        err_sq_sum += int((errs.astype(np.int64) ** 2).sum())
        trials += batch
    s = cfg.data_symbols
    symbols = trials * s
    ser = err_sum / symbols
    if trials > 1:
        var = (err_sq_sum - err_sum ** 2 / trials) / (trials - 1)
        stderr = float(np.sqrt(max(var, 0.0) / trials) / s)
    else:
        stderr = 0.0
    return SerPoint(scheme=cfg.scheme, snr_db=float(snr_db), trials=trials,
                    symbols=symbols, errors=err_sum, ser=ser, ser_stderr=stderr,
                    target_met=err_sum >= cfg.target_errors)


def run_sweep(cfg: SimConfig, backend: str | None = None,
              workers: int | None = None) -> SweepResult:
    """Sweep the configured SNR grid for one scheme.

    Each point runs batches of trials until the error target or the trial
    cap is reached (checked at batch boundaries).  With ``workers`` > 1 and
    the numba backend, batches are split across threads; the aggregate is
    bit-identical for any worker count because per-trial streams and
    integer summation make order irrelevant.
    """
    backend = active_backend(backend)
    workers = _resolve_workers(workers)
    st = _statics(cfg)
    pool = None
    points = []
    try:
        if workers > 1 and backend == "numba":
            pool = ThreadPoolExecutor(max_workers=workers)
        for snr_db in sorted(cfg.snr_db_list):
            points.append(_sweep_point(cfg, st, snr_db, backend, workers, pool))
    finally:
        if pool is not None:
            pool.shutdown()
    try:
        fit = diversity_order_fit(points, (15.0, 25.0))
    except FitUnavailableError:
        fit = None
    return SweepResult(scheme=cfg.scheme, points=tuple(points), fit=fit)


def diversity_order_fit(points, window_db: tuple = (15.0, 25.0)) -> DiversityFit:
    """Fit the diversity order over an SNR window.

    Least-squares slope of log10(SER) versus SNR over the points inside the
    window with positive SER, negated and scaled to decades per 10 dB.
    """
    lo, hi = window_db
    sel = [p for p in points if lo <= p.snr_db <= hi and p.ser > 0.0]
    if len(sel) < 2:
        raise FitUnavailableError(
            f"need at least 2 positive-SER points in [{lo}, {hi}] dB, found {len(sel)}")
    x = np.array([p.snr_db for p in sel])
    y = np.log10(np.array([p.ser for p in sel]))
    slope = np.polyfit(x, y, 1)[0]
    return DiversityFit(order=float(-slope * 10.0), window_db=(float(lo), float(hi)),
                        num_points=len(sel))
