import itertools

import numpy as np
import numpy.testing as npt
import pytest

from beamdiv import (
    QPSK,
    alamouti_combine,
    candidate_matrix,
    count_symbol_errors,
    equalize,
    estimate_channel,
    map_bits,
    ml_detect,
    pilot_sequence,
    rotation_matrix,
    slice_indices,
)


def test_ls_estimate_exact():
    pilot = pilot_sequence(16)
    assert estimate_channel(3j * pilot, pilot) == pytest.approx(3j)
    single = pilot_sequence(1)
    assert estimate_channel(np.array([0.5 - 2j]), single) == pytest.approx(
        (0.5 - 2j) / single[0])


def test_ls_estimate_validation():
    pilot = pilot_sequence(8)
    with pytest.raises(ValueError):
        estimate_channel(np.ones(7, dtype=complex), pilot)
    with pytest.raises(ValueError):
        estimate_channel(np.zeros(4, dtype=complex), np.zeros(4, dtype=complex))


@pytest.mark.parametrize("n_p", [8, 16, 32])
def test_ls_estimate_error_variance(n_p):
    # error variance sigma^2 / N_p at 20 dB with unit channel power
    rng = np.random.default_rng(40)
    pilot = pilot_sequence(n_p)
    sigma2 = 10.0 ** (-20.0 / 10.0)
    errs = np.empty(10000, dtype=np.complex128)
    for t in range(10000):
        h = (rng.standard_normal() + 1j * rng.standard_normal()) * np.sqrt(0.5)
        noise = ((rng.standard_normal(n_p) + 1j * rng.standard_normal(n_p))
                 * np.sqrt(sigma2 / 2))
        errs[t] = estimate_channel(h * pilot + noise, pilot) - h
    assert np.mean(np.abs(errs) ** 2) == pytest.approx(sigma2 / n_p, rel=0.10)


def test_candidate_matrix_order():
    cand = candidate_matrix(2)
    assert cand.shape == (16, 2)
    npt.assert_array_equal(cand[0], [0, 0])
    npt.assert_array_equal(cand[1], [0, 1])
    npt.assert_array_equal(cand[4], [1, 0])
    npt.assert_array_equal(cand[15], [3, 3])


def test_ml_detect_noise_free_exact():
    rng = np.random.default_rng(41)
    for k in (1, 2, 4):
        theta = rotation_matrix(k)
        for _ in range(50):
            digits = rng.integers(0, 4, k)
            d = QPSK.points[digits]
            h = rng.standard_normal(k) + 1j * rng.standard_normal(k)
            y = h * (theta @ d)
            npt.assert_array_equal(ml_detect(y, h, theta), digits)


def test_ml_detect_k1_is_slicing():
    rng = np.random.default_rng(42)
    theta = rotation_matrix(1)
    for _ in range(200):
        y = np.array([rng.standard_normal() + 1j * rng.standard_normal()])
        h = np.array([rng.standard_normal() + 1j * rng.standard_normal()])
        if abs(h[0]) < 1e-3:
            continue
        assert ml_detect(y, h, theta)[0] == slice_indices(y / h)[0]


@pytest.mark.parametrize("k", [2, 4])
def test_ml_detect_matches_brute_force(k):
    # independent enumeration oracle, first minimum wins
    rng = np.random.default_rng(43)
    theta = rotation_matrix(k)
    for _ in range(200):
        digits = rng.integers(0, 4, k)
        h = (rng.standard_normal(k) + 1j * rng.standard_normal(k)) * np.sqrt(0.5)
        noise = (rng.standard_normal(k) + 1j * rng.standard_normal(k)) * 0.3
        y = h * (theta @ QPSK.points[digits]) + noise
        best_cost = np.inf
        best = None
        for cand in itertools.product(range(4), repeat=k):
            model = h * (theta @ QPSK.points[list(cand)])
            cost = np.sum(np.abs(y - model) ** 2)
            if cost < best_cost:
                best_cost = cost
                best = cand
        npt.assert_array_equal(ml_detect(y, h, theta), best)


def test_ml_detect_validation():
    theta = rotation_matrix(2)
    with pytest.raises(ValueError):
        ml_detect(np.ones(3, dtype=complex), np.ones(2, dtype=complex), theta)
    with pytest.raises(ValueError):
        ml_detect(np.ones(2, dtype=complex), np.ones(2, dtype=complex),
                  rotation_matrix(4))


def test_alamouti_combine_single_branch():
    x1 = map_bits([0, 0, 1, 1])
    x2 = map_bits([1, 0, 0, 1])
    r_a, r_b = x1, -np.conj(x2)
    out1, out2 = alamouti_combine(r_a, r_b, 1.0, 0.0)
    npt.assert_allclose(out1, x1, atol=1e-14)
    npt.assert_allclose(out2, x2, atol=1e-14)
    r_a, r_b = x2, np.conj(x1)
    out1, out2 = alamouti_combine(r_a, r_b, 0.0, 1.0)
    npt.assert_allclose(out1, x1, atol=1e-14)
    npt.assert_allclose(out2, x2, atol=1e-14)


def test_alamouti_combine_algebraic_identity():
    rng = np.random.default_rng(44)
    for _ in range(50):
        h1, h2 = rng.standard_normal(2) + 1j * rng.standard_normal(2)
        x1 = map_bits(rng.integers(0, 2, 8))
        x2 = map_bits(rng.integers(0, 2, 8))
        r_a = h1 * x1 + h2 * x2
        r_b = -h1 * np.conj(x2) + h2 * np.conj(x1)
        out1, out2 = alamouti_combine(r_a, r_b, h1, h2)
        npt.assert_allclose(out1, x1, atol=1e-12)
        npt.assert_allclose(out2, x2, atol=1e-12)


def test_alamouti_combine_validation():
    with pytest.raises(ValueError):
        alamouti_combine(np.ones(3, dtype=complex), np.ones(3, dtype=complex), 0.0, 0.0)
    with pytest.raises(ValueError):
        alamouti_combine(np.ones(3, dtype=complex), np.ones(2, dtype=complex), 1.0, 0.0)


def test_equalize():
    x = map_bits([0, 1, 1, 0])
    h = 0.4 - 1.1j
    npt.assert_allclose(equalize(h * x, h), x, atol=1e-14)
    npt.assert_allclose(equalize(h * x, 2 * h), x / 2, atol=1e-14)
    assert equalize(np.array([]), h).size == 0
    with pytest.raises(ValueError):
        equalize(x, 0.0)


def test_count_symbol_errors():
    a = np.array([0, 1, 2, 3])
    assert count_symbol_errors(a, a) == (0, 4)
    assert count_symbol_errors(a, 3 - a) == (4, 4)
    b = a.copy()
    b[2] = 0
    assert count_symbol_errors(b, a) == (1, 4)
    with pytest.raises(ValueError):
        count_symbol_errors(a, a[:3])
