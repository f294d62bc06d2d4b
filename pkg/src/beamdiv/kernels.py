"""Batched per-trial simulation kernels.

Each kernel runs a batch of complete frame trials for one scheme: encode,
propagate through the multipath channel sample by sample, add noise,
estimate, detect and count symbol errors.  All random variates are drawn by
the caller and passed in, so results do not depend on which backend runs.

Compiled with numba when it is installed; otherwise the decorator degrades
to a no-op and the same code runs as plain Python (the engine prefers its
vectorized numpy path in that case, these loops are only fast when jitted).
"""

from __future__ import annotations

import numpy as np

try:
    from numba import njit

    NUMBA_AVAILABLE = True
except ImportError:  # pragma: no cover - exercised only without numba
    NUMBA_AVAILABLE = False

    def njit(*args, **kwargs):
        def wrap(func):
            return func

        return wrap


@njit(cache=True, nogil=True)
def _coupling(cos_paths, cos_dirs, w, d_spacing, ideal):
    """Path-to-beam coupling matrix; diagonal sum-of-weights when ideal."""
    p_count = cos_paths.shape[0]
    q_count = cos_dirs.shape[0]
    m_count = w.shape[0]
    g = np.zeros((p_count, q_count), dtype=np.complex128)
    if ideal:
        wsum = 0.0 + 0.0j
        for m in range(m_count):
            wsum += w[m]
        for p in range(p_count):
            g[p, p] = wsum
        return g
    for p in range(p_count):
        for q in range(q_count):
            step = np.exp(1j * 2.0 * np.pi * d_spacing * (cos_paths[p] - cos_dirs[q]))
            z = 1.0 + 0.0j
            acc = 0.0 + 0.0j
            for m in range(m_count):
                acc += w[m] * z
                z *= step
            g[p, q] = acc
    return g


@njit(cache=True, nogil=True)
def _receive_shared(stream, row_of_sample, bphase, g, alpha, cos_paths,
                    cos_dirs, omega_ts, sigma, noise, out):
    """Receive a frame whose every beam carries the same ``stream``.

    ``bphase[k, q]`` is ``zeta * exp(-j*pi*phi_{k,q})`` for phase row k.
    Doppler ramps advance by recurrence on a global sample clock.
    """
    p_count = alpha.shape[0]
    q_count = cos_dirs.shape[0]
    zp = np.ones(p_count, dtype=np.complex128)
    zb = np.ones(q_count, dtype=np.complex128)
    stepp = np.empty(p_count, dtype=np.complex128)
    stepb = np.empty(q_count, dtype=np.complex128)
    for p in range(p_count):
        stepp[p] = np.exp(1j * omega_ts * cos_paths[p])
    for q in range(q_count):
        stepb[q] = np.exp(-1j * omega_ts * cos_dirs[q])
    for n in range(stream.shape[0]):
        k = row_of_sample[n]
        acc = 0.0 + 0.0j
        for q in range(q_count):
            ps = 0.0 + 0.0j
            for p in range(p_count):
                ps += alpha[p] * g[p, q] * zp[p]
            acc += bphase[k, q] * zb[q] * ps
        out[n] = acc * stream[n] + sigma * noise[n]
        for p in range(p_count):
            zp[p] *= stepp[p]
        for q in range(q_count):
            zb[q] *= stepb[q]


@njit(cache=True, nogil=True)
def _receive_pair(s1, s2, odd_mask, bphase, g, alpha, cos_paths, cos_dirs,
                  omega_ts, sigma, noise, out):
    """Receive a frame where odd beams carry ``s1`` and even beams ``s2``."""
    p_count = alpha.shape[0]
    q_count = cos_dirs.shape[0]
    zp = np.ones(p_count, dtype=np.complex128)
    zb = np.ones(q_count, dtype=np.complex128)
    stepp = np.empty(p_count, dtype=np.complex128)
    stepb = np.empty(q_count, dtype=np.complex128)
    for p in range(p_count):
        stepp[p] = np.exp(1j * omega_ts * cos_paths[p])
    for q in range(q_count):
        stepb[q] = np.exp(-1j * omega_ts * cos_dirs[q])
    for n in range(s1.shape[0]):
        acc = 0.0 + 0.0j
        for q in range(q_count):
            ps = 0.0 + 0.0j
            for p in range(p_count):
                ps += alpha[p] * g[p, q] * zp[p]
            sval = s1[n] if odd_mask[q] else s2[n]
            acc += bphase[0, q] * zb[q] * ps * sval
        out[n] = acc + sigma * noise[n]
        for p in range(p_count):
            zp[p] *= stepp[p]
        for q in range(q_count):
            zb[q] *= stepb[q]


@njit(cache=True, nogil=True)
def _ls_estimate(r, offset, pilot):
    acc = 0.0 + 0.0j
    energy = 0.0
    for i in range(pilot.shape[0]):
        p = pilot[i]
        acc += np.conj(p) * r[offset + i]
        energy += p.real * p.real + p.imag * p.imag
    return acc / energy


@njit(cache=True, nogil=True)
def _slice_qpsk(z):
    idx = 0
    if z.real < 0.0:
        idx += 2
    if z.imag < 0.0:
        idx += 1
    return idx


@njit(cache=True, nogil=True)
def ssd_trials(cos_paths, alpha, phases, bits, noise, sigma, cos_dirs, w,
               zeta, d_spacing, omega_ts, cand_tab, cand_digits, pilot,
               ideal):
    """Run a batch of rotation-coded trials; returns per-trial error counts.

    Shapes: cos_paths/alpha (B, P); phases (B, K, Q); bits (B, 2*K*J);
    noise (B, K*(N_p+J)); cand_tab (K, C) holds ``Theta @ candidate`` for
    every constellation index vector, cand_digits (C, K) the vectors
    themselves.  J is inferred from the bit count.
    """
    batch = alpha.shape[0]
    k_blocks = phases.shape[1]
    q_count = cos_dirs.shape[0]
    n_pilot = pilot.shape[0]
    n_cand = cand_digits.shape[0]
    n_data = bits.shape[1] // 2
    j_data = n_data // k_blocks
    block_len = n_pilot + j_data
    total = k_blocks * block_len
    errors = np.zeros(batch, dtype=np.int64)
    row_of_sample = np.empty(total, dtype=np.int64)
    for n in range(total):
        row_of_sample[n] = n // block_len
    stream = np.empty(total, dtype=np.complex128)
    r = np.empty(total, dtype=np.complex128)
    d_idx = np.empty(n_data, dtype=np.int64)
    block_cand = np.empty(j_data, dtype=np.int64)
    h_hat = np.empty(k_blocks, dtype=np.complex128)
    u = np.empty((k_blocks, n_cand), dtype=np.complex128)
    bphase = np.empty((k_blocks, q_count), dtype=np.complex128)
    for b in range(batch):
        g = _coupling(cos_paths[b], cos_dirs, w, d_spacing, ideal)
        for i in range(n_data):
            d_idx[i] = 2 * bits[b, 2 * i] + bits[b, 2 * i + 1]
        # candidate index of each sub-vector d(i); encoding reuses cand_tab
        for i in range(j_data):
            c = 0
            for k in range(k_blocks):
                c = 4 * c + d_idx[i * k_blocks + k]
            block_cand[i] = c
        for n in range(total):
            i = n % block_len
            if i < n_pilot:
                stream[n] = pilot[i]
            else:
                stream[n] = cand_tab[row_of_sample[n], block_cand[i - n_pilot]]
        for k in range(k_blocks):
            for q in range(q_count):
                bphase[k, q] = zeta * np.exp(-1j * np.pi * phases[b, k, q])
        _receive_shared(stream, row_of_sample, bphase, g, alpha[b], cos_paths[b],
                        cos_dirs, omega_ts, sigma, noise[b], r)
        for k in range(k_blocks):
            h_hat[k] = _ls_estimate(r, k * block_len, pilot)
            for c in range(n_cand):
                u[k, c] = h_hat[k] * cand_tab[k, c]
        err = 0
        for i in range(j_data):
            best = 1e300
            best_c = 0
            for c in range(n_cand):
                cost = 0.0
                for k in range(k_blocks):
                    dv = r[k * block_len + n_pilot + i] - u[k, c]
                    cost += dv.real * dv.real + dv.imag * dv.imag
                    if cost >= best:
                        break
                if cost < best:
                    best = cost
                    best_c = c
            for k in range(k_blocks):
                if cand_digits[best_c, k] != d_idx[i * k_blocks + k]:
                    err += 1
        errors[b] = err
    return errors


@njit(cache=True, nogil=True)
def nodiv_trials(cos_paths, alpha, phases, bits, noise, sigma, cos_dirs, w,
                 zeta, d_spacing, omega_ts, k_blocks, pilot, ideal,
                 constellation):
    """Run a batch of single-stream trials; returns per-trial error counts.

    Same frame layout as the rotation-coded scheme but with raw symbols and
    one shared phase realization (``phases`` is (B, 1, Q)); detection is
    per-block one-tap equalization and slicing.
    """
    batch = alpha.shape[0]
    q_count = cos_dirs.shape[0]
    n_pilot = pilot.shape[0]
    n_data = bits.shape[1] // 2
    j_data = n_data // k_blocks
    block_len = n_pilot + j_data
    total = k_blocks * block_len
    errors = np.zeros(batch, dtype=np.int64)
    row_of_sample = np.zeros(total, dtype=np.int64)
    stream = np.empty(total, dtype=np.complex128)
    r = np.empty(total, dtype=np.complex128)
    d_idx = np.empty(n_data, dtype=np.int64)
    bphase = np.empty((1, q_count), dtype=np.complex128)
    for b in range(batch):
        g = _coupling(cos_paths[b], cos_dirs, w, d_spacing, ideal)
        for i in range(n_data):
            d_idx[i] = 2 * bits[b, 2 * i] + bits[b, 2 * i + 1]
        for n in range(total):
            k = n // block_len
            i = n % block_len
            if i < n_pilot:
                stream[n] = pilot[i]
            else:
                stream[n] = constellation[d_idx[(i - n_pilot) * k_blocks + k]]
        for q in range(q_count):
            bphase[0, q] = zeta * np.exp(-1j * np.pi * phases[b, 0, q])
        _receive_shared(stream, row_of_sample, bphase, g, alpha[b], cos_paths[b],
                        cos_dirs, omega_ts, sigma, noise[b], r)
        err = 0
        for k in range(k_blocks):
            h = _ls_estimate(r, k * block_len, pilot)
            if h.real == 0.0 and h.imag == 0.0:
                err += j_data
                continue
            for i in range(j_data):
                soft = r[k * block_len + n_pilot + i] / h
                if _slice_qpsk(soft) != d_idx[i * k_blocks + k]:
                    err += 1
        errors[b] = err
    return errors


@njit(cache=True, nogil=True)
def alamouti_trials(cos_paths, alpha, phases, bits, noise, sigma, cos_dirs,
                    w, zeta, d_spacing, omega_ts, pilot, ideal, constellation):
    """Run a batch of space-time coded trials; returns per-trial error counts.

    Stream 1 is ``[pilot; 0; x1; -conj(x2)]`` on odd beams, stream 2
    ``[0; pilot; x2; conj(x1)]`` on even beams; ``phases`` is (B, 1, Q).
    """
    batch = alpha.shape[0]
    q_count = cos_dirs.shape[0]
    n_pilot = pilot.shape[0]
    n_data = bits.shape[1] // 2
    half = n_data // 2
    total = 2 * n_pilot + n_data
    errors = np.zeros(batch, dtype=np.int64)
    odd_mask = np.empty(q_count, dtype=np.bool_)
    for q in range(q_count):
        odd_mask[q] = (q + 1) % 2 == 1
    s1 = np.empty(total, dtype=np.complex128)
    s2 = np.empty(total, dtype=np.complex128)
    r = np.empty(total, dtype=np.complex128)
    d_idx = np.empty(n_data, dtype=np.int64)
    bphase = np.empty((1, q_count), dtype=np.complex128)
    for b in range(batch):
        g = _coupling(cos_paths[b], cos_dirs, w, d_spacing, ideal)
        for i in range(n_data):
            d_idx[i] = 2 * bits[b, 2 * i] + bits[b, 2 * i + 1]
        for i in range(n_pilot):
            s1[i] = pilot[i]
            s2[i] = 0.0
            s1[n_pilot + i] = 0.0
            s2[n_pilot + i] = pilot[i]
        for i in range(half):
            x1 = constellation[d_idx[i]]
            x2 = constellation[d_idx[half + i]]
            s1[2 * n_pilot + i] = x1
            s2[2 * n_pilot + i] = x2
            s1[2 * n_pilot + half + i] = -np.conj(x2)
            s2[2 * n_pilot + half + i] = np.conj(x1)
        for q in range(q_count):
            bphase[0, q] = zeta * np.exp(-1j * np.pi * phases[b, 0, q])
        _receive_pair(s1, s2, odd_mask, bphase, g, alpha[b], cos_paths[b],
                      cos_dirs, omega_ts, sigma, noise[b], r)
        h1 = _ls_estimate(r, 0, pilot)
        h2 = _ls_estimate(r, n_pilot, pilot)
        gain = (h1.real * h1.real + h1.imag * h1.imag
                + h2.real * h2.real + h2.imag * h2.imag)
        err = 0
        if gain == 0.0:
            errors[b] = n_data
            continue
        for i in range(half):
            r_a = r[2 * n_pilot + i]
            r_b = r[2 * n_pilot + half + i]
            x1 = (np.conj(h1) * r_a + h2 * np.conj(r_b)) / gain
            x2 = (np.conj(h2) * r_a - h1 * np.conj(r_b)) / gain
            if _slice_qpsk(x1) != d_idx[i]:
                err += 1
            if _slice_qpsk(x2) != d_idx[half + i]:
                err += 1
        errors[b] = err
    return errors
