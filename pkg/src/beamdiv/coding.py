"""Constellation mapping, rotation codes, pilot sequences and frame assembly
for the three transmit schemes."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class Constellation:
    """Symbol alphabet with Gray labeling.

    ``points[i]`` is the symbol whose label is the ``bits_per_symbol``-bit
    binary expansion of ``i`` (most significant bit first).
    """

    points: np.ndarray
    bits_per_symbol: int

    def __post_init__(self):
        if len(self.points) != 2 ** self.bits_per_symbol:
            raise ValueError("points count must be 2**bits_per_symbol")


def _qpsk_points() -> np.ndarray:
    # label (b0, b1) -> ((1-2*b0) + 1j*(1-2*b1)) / sqrt(2); index = 2*b0 + b1
    pts = np.array([1 + 1j, 1 - 1j, -1 + 1j, -1 - 1j]) / np.sqrt(2.0)
    pts.flags.writeable = False
    return pts


QPSK = Constellation(points=_qpsk_points(), bits_per_symbol=2)
"""Gray-labeled unit-energy QPSK; bits 00 map to (1+j)/sqrt(2)."""


def map_bits(bits: np.ndarray, const: Constellation = QPSK) -> np.ndarray:
    """Map a bit vector to constellation symbols.

    Parameters
    ----------
    bits : array of 0/1 ints, length a multiple of ``const.bits_per_symbol``.

    Returns
    -------
    complex ndarray of length ``len(bits) / bits_per_symbol``.
    """
    bits = np.asarray(bits)
    bps = const.bits_per_symbol
    if bits.size % bps != 0:
        raise ValueError(f"bit count {bits.size} not a multiple of {bps}")
    groups = bits.reshape(-1, bps)
    index = np.zeros(groups.shape[0], dtype=np.int64)
    for b in range(bps):
        index = (index << 1) | groups[:, b]
    return const.points[index]


def demap_symbols(soft: np.ndarray, const: Constellation = QPSK) -> tuple[np.ndarray, np.ndarray]:
    """Nearest-point slicing of soft symbols.

    Returns
    -------
    (bits, hard) : bit vector of the sliced labels and the nearest
    constellation points themselves.
    """
    soft = np.asarray(soft)
    index = slice_indices(soft, const)
    bps = const.bits_per_symbol
    bits = np.empty((index.size, bps), dtype=np.int64)
    for b in range(bps):
        bits[:, b] = (index >> (bps - 1 - b)) & 1
    return bits.ravel(), const.points[index]


def slice_indices(soft: np.ndarray, const: Constellation = QPSK) -> np.ndarray:
    """Indices of the nearest constellation points, one per soft sample."""
    soft = np.asarray(soft)
    dist = np.abs(soft.reshape(-1, 1) - const.points.reshape(1, -1))
    return np.argmin(dist, axis=1)


def rotation_matrix(num_blocks: int) -> np.ndarray:
    """Rotation code spreading each data symbol over ``num_blocks`` blocks.

    With ``Kt = 2**ceil(log2(K))``, the matrix is the first K x K submatrix
    of ``F_Kt^H @ diag(1, e^{j pi/(2 Kt)}, ..., e^{j pi (Kt-1)/(2 Kt)})``
    where ``F_Kt`` is the normalized Kt-point DFT matrix.  For K a power of
    two the result is unitary, and for QPSK inputs every entry of
    ``Theta @ e`` is nonzero for every nonzero difference vector ``e``.

    K is capped at 6: exhaustive ML detection downstream costs 4**K.
    """
    k = num_blocks
    if not 1 <= k <= 6:
        raise ValueError(f"block count must lie in 1..6, got {k}")
    kt = 1 << int(np.ceil(np.log2(k)))
    m, n = np.meshgrid(np.arange(kt), np.arange(kt), indexing="ij")
    dft_h = np.exp(2j * np.pi * m * n / kt) / np.sqrt(kt)
    diag = np.exp(1j * np.pi * np.arange(kt) / (2 * kt))
    return (dft_h * diag[np.newaxis, :])[:k, :k]


def ssd_blocks(symbols: np.ndarray, theta: np.ndarray) -> np.ndarray:
    """Encode a data vector into per-block rows.

    ``symbols`` of length K*J is split into J consecutive sub-vectors d(i)
    of length K; row k of the result carries the k-th entry of each
    ``theta @ d(i)``.

    Returns
    -------
    (K, J) complex ndarray.
    """
    symbols = np.asarray(symbols)
    k = theta.shape[0]
    if theta.shape != (k, k):
        raise ValueError("theta must be square")
    if symbols.size == 0 or symbols.size % k != 0:
        raise ValueError(f"symbol count {symbols.size} not a positive multiple of {k}")
    d = symbols.reshape(-1, k).T
    return theta @ d


def pilot_sequence(num_pilots: int) -> np.ndarray:
    """Root-1 Zadoff-Chu pilot of length ``num_pilots``.

    Even lengths use ``exp(-j pi n^2 / N_p)``, odd lengths the cyclically
    extendable variant ``exp(-j pi n (n+1) / N_p)``.  Constant modulus 1.
    """
    if num_pilots < 1:
        raise ValueError(f"num_pilots must be >= 1, got {num_pilots}")
    n = np.arange(num_pilots)
    if num_pilots % 2 == 0:
        return np.exp(-1j * np.pi * n * n / num_pilots)
    return np.exp(-1j * np.pi * n * (n + 1) / num_pilots)


def assemble_frame(pilot: np.ndarray, data_rows: np.ndarray) -> np.ndarray:
    """Prepend the pilot to every data row.

    Row k of the result is the signal block ``[pilot; data_rows[k]]``.

    Returns
    -------
    (K, N_p + J) complex ndarray.
    """
    data_rows = np.atleast_2d(np.asarray(data_rows))
    tiled = np.broadcast_to(pilot, (data_rows.shape[0], len(pilot)))
    return np.hstack([tiled, data_rows]).astype(np.complex128)


def alamouti_frames(symbols: np.ndarray, pilot: np.ndarray) -> np.ndarray:
    """Build the two-stream frame of the space-time coded scheme.

    The data vector (even length N) is split into halves x1, x2.  Stream 1
    is ``[pilot; zeros; x1; -conj(x2)]`` and stream 2 ``[zeros; pilot; x2;
    conj(x1)]``, so each stream's pilot transmits while the other is silent
    and the data segments form per-symbol code matrices
    ``[[a, b], [-conj(b), conj(a)]]``.

    Returns
    -------
    (2, 2*N_p + N) complex ndarray; row 0 is stream 1.
    """
    symbols = np.asarray(symbols)
    n = symbols.size
    if n == 0 or n % 2 != 0:
        raise ValueError(f"data length must be positive and even, got {n}")
    x1, x2 = symbols[: n // 2], symbols[n // 2 :]
    zeros = np.zeros(len(pilot), dtype=np.complex128)
    s1 = np.concatenate([pilot, zeros, x1, -np.conj(x2)])
    s2 = np.concatenate([zeros, pilot, x2, np.conj(x1)])
    return np.vstack([s1, s2])


def beamformer_assignment(num_beams: int) -> tuple[np.ndarray, np.ndarray]:
    """Split beams into the two stream groups of the space-time scheme.

    Returns the 1-based odd and even beam index sets; odd beams carry
    stream 1.  Requires at least two beams.
    """
    if num_beams < 2:
        raise ValueError(f"need at least 2 beams for two streams, got {num_beams}")
    idx = np.arange(1, num_beams + 1)
    return idx[idx % 2 == 1], idx[idx % 2 == 0]
