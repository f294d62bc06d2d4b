"""Uniform linear array geometry, matched-filter beamformers and Doppler
pre-compensation ramps.

Angles are measured from the array axis, so broadside is pi/2 and the
Doppler factor of a direction ``theta`` is ``cos(theta)``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

SPEED_OF_LIGHT = 299792458.0
"""Speed of light in m/s."""


@dataclass(frozen=True)
class ArrayGeometry:
    """ULA with ``num_antennas`` elements at normalized spacing ``spacing``
    (element spacing divided by carrier wavelength)."""

    num_antennas: int
    spacing: float = 0.5

    def __post_init__(self):
        if self.num_antennas < 1:
            raise ValueError(f"num_antennas must be >= 1, got {self.num_antennas}")
        if not 0.0 < self.spacing <= 1.0:
            raise ValueError(f"spacing must lie in (0, 1], got {self.spacing}")


@dataclass(frozen=True)
class DopplerParams:
    """Mobility parameters of the transmitter.

    ``max_doppler`` is derived as ``speed * carrier_freq / c``; ``omega`` is
    the corresponding angular frequency ``2 pi f_d``.
    """

    carrier_freq: float
    speed: float
    symbol_interval: float

    def __post_init__(self):
        if self.carrier_freq <= 0.0:
            raise ValueError("carrier_freq must be positive")
        if self.speed < 0.0:
            raise ValueError("speed must be non-negative")
        if self.symbol_interval <= 0.0:
            raise ValueError("symbol_interval must be positive")

    @property
    def max_doppler(self) -> float:
        """Maximum Doppler shift in Hz."""
        return self.speed * self.carrier_freq / SPEED_OF_LIGHT

    @property
    def omega(self) -> float:
        """Angular maximum Doppler shift, 2*pi*max_doppler, in rad/s."""
        return 2.0 * np.pi * self.max_doppler

    @classmethod
    def from_doppler(cls, max_doppler: float, symbol_interval: float) -> "DopplerParams":
        """Build parameters from an explicit Doppler shift in Hz.

        Uses a unit-speed-per-hertz convention (carrier at c, speed equal to
        ``max_doppler``) so the derived shift is exact.
        """
        return cls(carrier_freq=SPEED_OF_LIGHT, speed=max_doppler,
                   symbol_interval=symbol_interval)


def steering_vector(theta: float, geom: ArrayGeometry) -> np.ndarray:
    """Array response vector of the ULA for direction ``theta``.

    Element ``m`` equals ``exp(j*2*pi*d*m*cos(theta))``; element 0 is 1.

    Parameters
    ----------
    theta : float
        Direction in radians, strictly inside (0, pi).
    geom : ArrayGeometry

    Returns
    -------
    (M,) complex ndarray
    """
    if not 0.0 < theta < np.pi:
        raise ValueError(f"direction must lie in (0, pi), got {theta}")
    m = np.arange(geom.num_antennas)
    return np.exp(2j * np.pi * geom.spacing * m * np.cos(theta))


def normalization_coefficient(num_beams: int, weights: np.ndarray) -> float:
    """Scale factor that keeps the summed transmit power of all beams at 1.

    Returns ``1 / sqrt(Q * sum_m |w_m|^2)``.
    """
    if num_beams < 1:
        raise ValueError(f"num_beams must be >= 1, got {num_beams}")
    w = np.asarray(weights)
    energy = float(np.sum(np.abs(w) ** 2))
    if energy == 0.0:
        raise ValueError("weights must not be all zero")
    return 1.0 / np.sqrt(num_beams * energy)


def make_beamformer(theta: float, phase_units_of_pi: float, zeta: float,
                    geom: ArrayGeometry) -> np.ndarray:
    """Matched-filter beamformer ``zeta * a(theta) * exp(j*pi*phase)``.

    The random phase is given in units of pi, so ``phase_units_of_pi`` drawn
    uniformly from [0, 2) covers the full unit circle.
    """
    return zeta * steering_vector(theta, geom) * np.exp(1j * np.pi * phase_units_of_pi)


def phase_ramp(epsilon: float, length: int, dp: DopplerParams) -> np.ndarray:
    """Diagonal of the phase rotation matrix for a frequency offset
    ``epsilon * max_doppler``.

    Element ``n`` equals ``exp(j*omega*T_s*n*epsilon)``; element 0 is 1.
    """
    if length < 1:
        raise ValueError(f"length must be >= 1, got {length}")
    n = np.arange(length)
    return np.exp(1j * dp.omega * dp.symbol_interval * epsilon * n)


def select_directions(num_beams: int) -> np.ndarray:
    """Beam directions whose cosines are the centers of ``num_beams``
    equal-width bins partitioning (-1, 1).

    ``cos(theta_q) = -1 + (2q - 1) / Q`` for q = 1..Q, so the returned
    angles are strictly decreasing while their cosines increase.
    """
    if num_beams < 1:
        raise ValueError(f"num_beams must be >= 1, got {num_beams}")
    q = np.arange(1, num_beams + 1)
    return np.arccos(-1.0 + (2.0 * q - 1.0) / num_beams)


@dataclass(frozen=True)
class BeamformerBank:
    """A set of beamformers plus their per-block random-phase schedule.

    ``phase_schedule`` has one row per signal block and one column per beam,
    in units of pi.  ``zeta`` normalizes the summed power of all weighted
    beamformers to 1.
    """

    geometry: ArrayGeometry
    directions: np.ndarray
    phase_schedule: np.ndarray
    weights: np.ndarray
    zeta: float

    def __post_init__(self):
        if np.any(self.directions <= 0.0) or np.any(self.directions >= np.pi):
            raise ValueError("all beam directions must lie strictly inside (0, pi)")
        if self.phase_schedule.ndim != 2 or self.phase_schedule.shape[1] != len(self.directions):
            raise ValueError("phase_schedule must be (num_blocks, num_beams)")
        if len(self.weights) != self.geometry.num_antennas:
            raise ValueError("weights length must equal num_antennas")

    @property
    def num_beams(self) -> int:
        return len(self.directions)

    @property
    def num_blocks(self) -> int:
        return self.phase_schedule.shape[0]

    def beamformer(self, block_index: int, beam_index: int) -> np.ndarray:
        """The beamformer of beam ``beam_index`` during block ``block_index``."""
        return make_beamformer(self.directions[beam_index],
                               self.phase_schedule[block_index, beam_index],
                               self.zeta, self.geometry)


def make_bank(geom: ArrayGeometry, num_beams: int, num_blocks: int,
              rng: np.random.Generator, weights: np.ndarray | None = None) -> BeamformerBank:
    """Draw a beamformer bank with a fresh random-phase schedule.

    Phases are i.i.d. uniform on [0, 2) in units of pi.  ``weights`` defaults
    to the all-ones (uniform) taper.
    """
    if weights is None:
        weights = np.ones(geom.num_antennas, dtype=np.complex128)
    else:
        weights = np.asarray(weights, dtype=np.complex128)
    directions = select_directions(num_beams)
    zeta = normalization_coefficient(num_beams, weights)
    schedule = rng.uniform(0.0, 2.0, size=(num_blocks, num_beams))
    return BeamformerBank(geometry=geom, directions=directions,
                          phase_schedule=schedule, weights=weights, zeta=zeta)


def transmit_matrix(bank: BeamformerBank, block_index: int, beam_index: int,
                    s: np.ndarray, dp: DopplerParams, time_offset: int = 0) -> np.ndarray:
    """Per-antenna transmit matrix of one beam for the symbol vector ``s``.

    Entry (m, n) is ``w_m * conj(b_m) * s_n * exp(-j*omega*T_s*(n0+n)*cos(theta_q))``
    with ``b`` the beam's matched-filter vector.  ``time_offset`` keeps the
    Doppler pre-compensation ramp continuous when a frame is assembled from
    several blocks; the symbol clock never restarts mid-frame.

    Returns
    -------
    (M, N) complex ndarray, rank 1 in the antenna dimension.
    """
    s = np.asarray(s)
    if s.size == 0:
        raise ValueError("symbol vector must be nonempty")
    if not 0 <= beam_index < bank.num_beams:
        raise IndexError(f"beam_index {beam_index} out of range")
    if not 0 <= block_index < bank.num_blocks:
        raise IndexError(f"block_index {block_index} out of range")
    b = bank.beamformer(block_index, beam_index)
    ramp = np.exp(-1j * dp.omega * dp.symbol_interval
                  * (time_offset + np.arange(len(s)))
                  * np.cos(bank.directions[beam_index]))
    return np.outer(bank.weights * np.conj(b), s * ramp)
