"""Pilot-based channel estimation and per-scheme detection."""

from __future__ import annotations

import numpy as np

from .coding import QPSK, Constellation


def estimate_channel(received_pilot: np.ndarray, pilot: np.ndarray) -> complex:
    """Least-squares scalar channel estimate from one pilot segment.

    Returns ``(p^H r) / (p^H p)``; unbiased for ``r = h*p + noise``.
    """
    received_pilot = np.asarray(received_pilot)
    pilot = np.asarray(pilot)
    if received_pilot.shape != pilot.shape:
        raise ValueError("received pilot and pilot lengths differ")
    energy = np.vdot(pilot, pilot)
    if energy == 0:
        raise ValueError("pilot has zero energy")
    return complex(np.vdot(pilot, received_pilot) / energy)


def candidate_matrix(block_size: int, const: Constellation = QPSK) -> np.ndarray:
    """All constellation index vectors of length ``block_size``.

    Row c holds the base-|C| digits of c, most significant digit first, so
    candidate order is deterministic and ties in a detector metric resolve
    to the lowest candidate index.
    """
    size = len(const.points)
    count = size ** block_size
    c = np.arange(count)
    cols = []
    for k in range(block_size):
        shift = size ** (block_size - 1 - k)
        cols.append((c // shift) % size)
    return np.stack(cols, axis=1)


def ml_detect(y: np.ndarray, channels: np.ndarray, theta: np.ndarray,
              const: Constellation = QPSK) -> np.ndarray:
    """Exhaustive maximum-likelihood detection of one rotated data vector.

    Minimizes ``|| y - diag(h) @ theta @ d ||`` over all constellation
    vectors d of length K.  Returns the constellation indices of the best
    candidate; ties resolve to the lowest candidate index.
    """
    y = np.asarray(y)
    channels = np.asarray(channels)
    k = y.size
    if channels.size != k or theta.shape != (k, k):
        raise ValueError("y, channels and theta dimensions disagree")
    cand = candidate_matrix(k, const)
    # rows of (candidates x K): diag(h) @ theta @ d for every candidate d
    model = const.points[cand] @ (channels[:, None] * theta).T
    cost = np.sum(np.abs(y[None, :] - model) ** 2, axis=1)
    return cand[int(np.argmin(cost))]


def alamouti_combine(r_a: np.ndarray, r_b: np.ndarray, h1: complex,
                     h2: complex) -> tuple[np.ndarray, np.ndarray]:
    """Linear combining of one space-time coded pair of segments.

    For ``r_a = h1*x1 + h2*x2`` and ``r_b = -h1*conj(x2) + h2*conj(x1)``
    returns soft estimates of (x1, x2); exact when noise-free.
    """
    r_a = np.asarray(r_a)
    r_b = np.asarray(r_b)
    if r_a.shape != r_b.shape:
        raise ValueError("combiner segments must have equal length")
    gain = abs(h1) ** 2 + abs(h2) ** 2
    if gain == 0.0:
        raise ValueError("both stream channels are zero; detection infeasible")
    x1 = (np.conj(h1) * r_a + h2 * np.conj(r_b)) / gain
    x2 = (np.conj(h2) * r_a - h1 * np.conj(r_b)) / gain
    return x1, x2


def equalize(r_data: np.ndarray, h_hat: complex) -> np.ndarray:
    """One-tap equalization ``r/h`` of a data segment."""
    if h_hat == 0:
        raise ValueError("zero channel estimate; detection infeasible")
    return np.asarray(r_data) / h_hat


def count_symbol_errors(detected: np.ndarray, truth: np.ndarray) -> tuple[int, int]:
    """Number of mismatched positions and the comparison length."""
    detected = np.asarray(detected)
    truth = np.asarray(truth)
    if detected.shape != truth.shape:
        raise ValueError("detected and truth lengths differ")
    return int(np.count_nonzero(detected != truth)), int(detected.size)
