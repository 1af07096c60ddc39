import math

import numpy as np
import pytest

from dmimo_link.errors import DomainError, SizeError
from dmimo_link.physics.channel import (
    CirTaps,
    DiffusionParams,
    OffsetSchedule,
    build_cir,
    build_simulation_cir,
    cir_tap,
    concentration,
    external_noise,
    interference_metric,
    peak_time,
    sample_block,
    sample_received,
    tap_profile,
    truncation_noise,
)
from dmimo_link.physics.geometry import initial_positions

from .conftest import REFERENCE_C0, REFERENCE_C1, REFERENCE_C2, REFERENCE_NOISE


def test_peak_time_reference():
    assert peak_time(400e-9, 1e-9) == pytest.approx(2.667e-5, rel=1e-3)


def test_peak_time_rejects_zero_distance():
    with pytest.raises(DomainError):
        peak_time(0.0, 1e-9)


def test_concentration_zero_before_release(params):
    assert concentration(400e-9, 0.0, params) == 0.0
    assert concentration(400e-9, -1e-6, params) == 0.0


def test_concentration_peaks_at_peak_time(params):
    tau = peak_time(400e-9, params.d_coef)
    times = tau * np.array([0.8, 0.9, 1.0, 1.1, 1.2])
    values = concentration(400e-9, times, params)
    assert int(np.argmax(values)) == 2


def test_cir_tap_direct_link(params):
    tau = peak_time(400e-9, params.d_coef)
    assert cir_tap(400e-9, tau, params) == pytest.approx(60.21, rel=0.01)


def test_cir_tap_cross_link(params):
    tau = peak_time(400e-9, params.d_coef)
    assert cir_tap(math.hypot(400e-9, 200e-9), tau, params) == pytest.approx(41.58, rel=0.01)


def test_cir_tap_rejects_coincident_points(params):
    with pytest.raises(DomainError):
        cir_tap(0.0, 1e-5, params)


def test_build_cir_reproduces_reference_taps(model_cir):
    np.testing.assert_allclose(model_cir.taps[0], REFERENCE_C0, rtol=0.01)
    np.testing.assert_allclose(model_cir.taps[1], REFERENCE_C1, rtol=0.01)
    np.testing.assert_allclose(model_cir.taps[2], REFERENCE_C2, rtol=0.01)


def test_build_cir_reproduces_reference_noise(model_cir):
    np.testing.assert_allclose(model_cir.noise, REFERENCE_NOISE, rtol=0.02)


def test_build_cir_is_symmetric_for_symmetric_geometry(model_cir):
    for tap in model_cir.taps:
        np.testing.assert_allclose(tap, tap.T)


def test_truncation_noise_matches_build_cir(topology, params, model_cir):
    np.testing.assert_allclose(truncation_noise(topology, OffsetSchedule.zeros(2), params), model_cir.noise)


def test_truncation_noise_equals_external_when_nothing_truncated(topology):
    params = DiffusionParams(l_taps=3, l_prime=3)
    schedule = OffsetSchedule.zeros(2)
    np.testing.assert_allclose(
        truncation_noise(topology, schedule, params),
        external_noise(topology, schedule, params),
    )


def test_truncation_noise_grows_and_settles_with_simulated_memory(topology):
    schedule = OffsetSchedule.zeros(2)
    noise = np.array([
        truncation_noise(topology, schedule, DiffusionParams(l_prime=l_prime))
        for l_prime in range(3, 201)
    ])
    steps = np.diff(noise, axis=0)
    assert np.all(steps >= -1e-12 * noise[1:])
    assert np.all(steps[-1] < 1e-3 * noise[-1])
    assert np.all(steps[-1] < steps[10])


def test_external_noise_fraction(topology, params, model_cir):
    ex = external_noise(topology, OffsetSchedule.zeros(2), params)
    np.testing.assert_allclose(ex, 0.05 * np.diag(model_cir.taps[0]))


def test_simulation_cir_keeps_long_tail(topology, params, model_cir):
    sim = build_simulation_cir(topology, OffsetSchedule.zeros(2), params)
    assert sim.l_taps == params.l_prime
    np.testing.assert_allclose(sim.taps[: params.l_taps], model_cir.taps)
    np.testing.assert_allclose(sim.noise, 0.05 * np.diag(model_cir.taps[0]))


def test_tap_profile_decreasing_after_peak(topology, params):
    profile = tap_profile(topology, OffsetSchedule.zeros(2), params, 6)
    diag = profile[:, 0, 0]
    assert np.all(np.diff(diag) < 0)


def test_half_offsets_silence_early_cross_tap(topology, params):
    schedule = OffsetSchedule([0.0, params.t_int / 2])
    cir = build_cir(topology, schedule, params)
    # Rx1 samples before Tx2 has released anything
    assert cir.taps[0][0, 1] == 0.0
    # paired links keep their peak sample
    np.testing.assert_allclose(np.diag(cir.taps[0]), 60.21, rtol=0.01)


def test_offsets_must_fit_in_bit_interval(topology, params):
    with pytest.raises(DomainError):
        build_cir(topology, OffsetSchedule([0.0, params.t_int]), params)


def test_offsets_must_match_transmitter_count(topology, params):
    with pytest.raises(SizeError):
        build_cir(topology, OffsetSchedule([0.0, 0.0, 0.0]), params)


def test_coincident_tx_rx_rejected(params):
    topo = initial_positions(400e-9, 200e-9, 2)
    collapsed = topo.moved(topo.tx_positions, topo.tx_positions)
    with pytest.raises(DomainError):
        build_cir(collapsed, OffsetSchedule.zeros(2), params)


def test_flat_layout(reference_cir):
    flat = reference_cir.flat
    assert flat.shape == (2, 7)
    np.testing.assert_allclose(flat[0], [60.21, 41.58, 9.11, 8.71, 3.83, 3.74, 10.29])
    restored = CirTaps.from_flat(flat, 3)
    np.testing.assert_array_equal(restored.taps, reference_cir.taps)
    np.testing.assert_array_equal(restored.noise, reference_cir.noise)


def test_cir_rejects_negative_entries():
    with pytest.raises(DomainError):
        CirTaps(-np.ones((1, 1, 1)), np.ones(1))


def test_interference_metric_reference(reference_cir):
    total = 60.21 + 41.58 + 9.11 + 8.71 + 3.83 + 3.74 + 10.29
    assert interference_metric(reference_cir) == pytest.approx((total - 60.21) / 60.21)


def test_interference_metric_decreasing_in_h(params):
    values = [
        interference_metric(build_cir(initial_positions(400e-9, h, 2), OffsetSchedule.zeros(2), params))
        for h in np.arange(25e-9, 401e-9, 25e-9)
    ]
    assert np.all(np.diff(values) < 0)


def test_interference_metric_large_h_is_isi_floor(params):
    cir = build_cir(initial_positions(400e-9, 1e-3, 2), OffsetSchedule.zeros(2), params)
    c = cir.taps[:, 0, 0]
    floor = (c[1:].sum() + cir.noise[0]) / c[0]
    assert interference_metric(cir) == pytest.approx(floor, rel=1e-9)


def test_sample_received_moments(reference_cir):
    rng = np.random.default_rng(99)
    x_vec = np.array([1, 0, 1, 1, 0, 1, 1.0])
    mean = reference_cir.flat @ x_vec
    draws = np.array([sample_received(reference_cir, x_vec, rng) for _ in range(20000)])
    n = draws.shape[0]
    for i in range(2):
        assert abs(draws[:, i].mean() - mean[i]) < 4 * math.sqrt(mean[i] / n)
        # variance of the sample variance ~ (mu + 2 mu^2) / n for Poisson
        assert abs(draws[:, i].var() - mean[i]) < 4 * math.sqrt((mean[i] + 2 * mean[i] ** 2) / n)


def test_sample_received_size_checked(reference_cir, rng):
    with pytest.raises(SizeError):
        sample_received(reference_cir, np.ones(3), rng)


def test_sample_block_zero_mean_gives_zero(rng):
    cir = CirTaps(np.zeros((1, 2, 2)), np.zeros(2))
    counts = sample_block(cir, np.vstack([np.ones((2, 5)), np.ones((1, 5))]), rng)
    assert counts.shape == (2, 5)
    assert counts.sum() == 0


def test_params_validation():
    with pytest.raises(DomainError):
        DiffusionParams(l_taps=4, l_prime=3)
    with pytest.raises(DomainError):
        DiffusionParams(p_one=1.5)
    with pytest.raises(DomainError):
        DiffusionParams(n_release=0)


def test_sample_received_is_one_column_of_a_block(reference_cir):
    x_vec = np.array([1, 0, 1, 1, 0, 1, 1.0])
    single = sample_received(reference_cir, x_vec, np.random.default_rng(5))
    block = sample_block(reference_cir, x_vec[:, None], np.random.default_rng(5))
    np.testing.assert_array_equal(single, block[:, 0])


def test_sample_block_shape_checked(reference_cir, rng):
    with pytest.raises(SizeError):
        sample_block(reference_cir, np.ones(7), rng)
