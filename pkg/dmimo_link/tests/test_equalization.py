import itertools

import numpy as np
import pytest

from dmimo_link.errors import ComplexityError, DomainError, EqualizerError, SizeError
from dmimo_link.physics.equalization import (
    DecodeState,
    DetectorConfig,
    DetectorKind,
    Receiver,
    check_causality,
    decode_block,
    dfe_feedback,
    ls_detect,
    mmse_filter,
    noise_covariance,
    threshold_detect,
    zf_filter,
)
from dmimo_link.physics.mimo_model import SymbolBlock, causal_conv_matrix, random_block

from .conftest import REFERENCE_C0


def mean_counts(cir, bits):
    return cir.flat @ causal_conv_matrix(SymbolBlock(bits), cir.l_taps).columns


def test_noise_covariance_reference(reference_cir):
    cov = noise_covariance(reference_cir, 0.5)
    np.testing.assert_allclose(np.diag(cov), [73.88, 73.88], atol=1e-9)
    assert cov[0, 1] == 0.0


def test_noise_covariance_without_ones_is_noise(reference_cir):
    np.testing.assert_allclose(noise_covariance(reference_cir, 0.0), np.diag(reference_cir.noise))


def test_dfe_feedback_reference_history(reference_cir):
    state = DecodeState([[1, 1], [0, 1]])
    y_star = dfe_feedback(np.array([31.85, 31.94]), reference_cir, state)
    np.testing.assert_allclose(y_star, [0.0, 0.0], atol=1e-9)


def test_dfe_feedback_zero_history_removes_noise(reference_cir):
    state = DecodeState.initial(2, 3)
    np.testing.assert_allclose(dfe_feedback(reference_cir.noise, reference_cir, state), 0.0)


def test_dfe_feedback_exposes_current_symbol(reference_cir):
    bits = np.array([[1, 0, 1, 1], [0, 1, 1, 0]])
    y = mean_counts(reference_cir, bits)
    state = DecodeState.initial(2, 3, bits[:, :3])
    np.testing.assert_allclose(dfe_feedback(y[:, 3], reference_cir, state), reference_cir.taps[0] @ bits[:, 3])


def test_wrong_feedback_bit_shifts_by_tap_column(reference_cir):
    bits = np.array([[1, 0, 1, 1], [0, 1, 1, 0]])
    y = mean_counts(reference_cir, bits)
    right = DecodeState.initial(2, 3, bits[:, :3])
    wrong_history = right.history.copy()
    wrong_history[1, 0] ^= 1
    wrong = DecodeState(wrong_history)
    delta = dfe_feedback(y[:, 3], reference_cir, wrong) - dfe_feedback(y[:, 3], reference_cir, right)
    sign = 1 if wrong_history[1, 0] == 0 else -1
    np.testing.assert_allclose(delta, sign * reference_cir.taps[2][:, 0])


def test_decode_state_initial_from_tail():
    state = DecodeState.initial(2, 3, np.array([[1, 0, 1], [0, 1, 1]]))
    np.testing.assert_array_equal(state.history, [[1, 1], [0, 1]])
    pushed = state.push(np.array([0, 0]))
    np.testing.assert_array_equal(pushed.history, [[0, 0], [1, 1]])
    assert pushed.k == 1


def test_decode_state_rejects_non_binary():
    with pytest.raises(DomainError):
        DecodeState([[2, 0]])


def test_zf_filter_identity():
    np.testing.assert_allclose(zf_filter(np.eye(3)), np.eye(3))


def test_zf_filter_reference():
    inverse = zf_filter(np.array(REFERENCE_C0))
    np.testing.assert_allclose(inverse, [[0.0318, -0.0219], [-0.0219, 0.0318]], atol=5e-4)
    np.testing.assert_allclose(inverse @ np.array(REFERENCE_C0), np.eye(2), atol=1e-10)


def test_zf_filter_singular():
    with pytest.raises(EqualizerError):
        zf_filter(np.ones((2, 2)))


def test_mmse_filter_small_noise_limit():
    c0 = np.array(REFERENCE_C0)
    np.testing.assert_allclose(mmse_filter(c0, 1e-9 * np.eye(2)), zf_filter(c0), rtol=1e-6)


def test_mmse_filter_biased_toward_noise_suppression():
    c0 = np.array(REFERENCE_C0)
    t = mmse_filter(c0, 73.88 * np.eye(2))
    np.testing.assert_allclose(t, t.T)
    assert np.linalg.norm(t @ c0 - np.eye(2)) > 0.01


def test_mmse_filter_not_positive_definite():
    with pytest.raises(EqualizerError):
        mmse_filter(np.zeros((2, 2)), np.zeros((2, 2)))


@pytest.mark.parametrize("x_star,expected", [(0.40, 1), (0.39, 0), (1.0, 1), (0.0, 0)])
def test_threshold_detect(x_star, expected):
    assert threshold_detect(np.array([x_star]), 0.4)[0] == expected


def test_ls_detect_exact_images():
    c0 = np.array(REFERENCE_C0)
    np.testing.assert_array_equal(ls_detect(c0 @ [1, 0], c0), [1, 0])
    np.testing.assert_array_equal(ls_detect(np.zeros(2), c0), [0, 0])


def test_ls_detect_matches_brute_force():
    rng = np.random.default_rng(17)
    c0 = np.array(REFERENCE_C0)
    for _ in range(50):
        y_star = rng.uniform(-20, 120, size=2)
        best = min(itertools.product((0, 1), repeat=2),
                   key=lambda x: float(np.sum((y_star - c0 @ np.array(x)) ** 2)))
        np.testing.assert_array_equal(ls_detect(y_star, c0), best)


def test_ls_detect_tie_goes_to_smallest():
    np.testing.assert_array_equal(ls_detect(np.zeros(2), np.array([[1.0, 0.0], [0.0, 0.0]])), [0, 0])


def test_ls_detect_complexity_guard():
    with pytest.raises(ComplexityError):
        ls_detect(np.zeros(17), np.eye(17))


def test_detector_config_threshold_range():
    with pytest.raises(DomainError):
        DetectorConfig(DetectorKind.ZF_DFE, threshold=1.0)


def test_check_causality():
    check_causality(2e-4, 400e-9, 1e-9)
    with pytest.raises(EqualizerError):
        check_causality(1e-5, 400e-9, 1e-9)


@pytest.mark.parametrize("kind", list(DetectorKind))
def test_decode_without_noise_is_error_free(reference_cir, kind):
    bits = random_block(2, 60, 0.5, np.random.default_rng(4)).bits
    decided = decode_block(mean_counts(reference_cir, bits), reference_cir, DetectorConfig(kind))
    np.testing.assert_array_equal(decided.bits, bits)


def test_decode_with_known_prefix(reference_cir):
    bits = random_block(2, 40, 0.5, np.random.default_rng(6)).bits
    y = mean_counts(reference_cir, bits)
    decided = decode_block(y[:, 10:], reference_cir, DetectorConfig(DetectorKind.ZF_DFE), bits[:, :10])
    np.testing.assert_array_equal(decided.bits, bits[:, 10:])


def test_decode_is_causal(reference_cir):
    rng = np.random.default_rng(9)
    y = rng.poisson(mean_counts(reference_cir, random_block(2, 30, 0.5, rng).bits))
    receiver = Receiver(reference_cir, DetectorConfig(DetectorKind.MMSE_DFE))
    full = receiver.decode(y).bits
    np.testing.assert_array_equal(receiver.decode(y[:, :12]).bits, full[:, :12])


def test_decode_shape_checked(reference_cir):
    with pytest.raises(SizeError):
        decode_block(np.zeros((3, 5)), reference_cir, DetectorConfig())


@pytest.mark.parametrize("kind", list(DetectorKind))
def test_decode_is_feedback_then_detect(reference_cir, kind):
    rng = np.random.default_rng(17)
    bits = random_block(2, 40, 0.5, rng).bits
    y = rng.poisson(mean_counts(reference_cir, bits))
    cfg = DetectorConfig(kind)
    state = DecodeState.initial(2, 3)
    expected = []
    for k in range(y.shape[1]):
        y_star = dfe_feedback(y[:, k], reference_cir, state)
        if kind is DetectorKind.LS_DFE:
            x_hat = ls_detect(y_star, reference_cir.taps[0])
        elif kind is DetectorKind.ZF_DFE:
            x_hat = threshold_detect(zf_filter(reference_cir.taps[0]) @ y_star, cfg.threshold)
        else:
            c_omega = noise_covariance(reference_cir, cfg.p_one)
            x_hat = threshold_detect(mmse_filter(reference_cir.taps[0], c_omega) @ y_star, cfg.threshold)
        expected.append(x_hat)
        state = state.push(x_hat)
    np.testing.assert_array_equal(decode_block(y, reference_cir, cfg).bits, np.array(expected).T)


def test_ls_detect_reuses_candidates():
    c0 = np.array(REFERENCE_C0)
    candidates = np.array(list(itertools.product((0, 1), repeat=2)), dtype=np.int8)
    y_star = np.array([50.0, 90.0])
    np.testing.assert_array_equal(ls_detect(y_star, c0, candidates=candidates), ls_detect(y_star, c0))
