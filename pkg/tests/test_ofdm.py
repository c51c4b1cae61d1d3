"""OFDM link-level chain checks: exact inverses, calibrated gains, and
agreement of a few simulated operating points with the closed-form model."""

import math

import numpy as np
import pytest
from scipy import signal

from lowresbf import ofdm, quantizer

NUM = ofdm.OfdmNumerology()


def test_numerology_defaults():
    assert NUM.chip_rate_hz == pytest.approx(491.52e6)
    assert NUM.n_subcarriers == 3288
    assert NUM.cp_len == 288
    assert NUM.occupied_bw_hz == pytest.approx(3288 * 120e3)
    with pytest.raises(ValueError):
        ofdm.OfdmNumerology(used_prbs=276)
    with pytest.raises(ValueError):
        ofdm.OfdmNumerology(used_prbs=0)


def test_modulate_demodulate_round_trip():
    rng = np.random.default_rng(0)
    grid = ofdm.random_grid("QPSK", 4, NUM.n_subcarriers, rng)
    block = ofdm.ofdm_modulate(grid, NUM)
    rx = ofdm.ofdm_demodulate(block, NUM, 4)
    np.testing.assert_allclose(rx, grid.symbols, atol=1e-9)


def test_modulate_unit_power():
    rng = np.random.default_rng(1)
    grid = ofdm.random_grid("64QAM", 6, NUM.n_subcarriers, rng)
    block = ofdm.ofdm_modulate(grid, NUM)
    assert np.mean(np.abs(block.samples) ** 2) == pytest.approx(1.0, rel=0.01)


def test_modulate_single_subcarrier_is_tone():
    symbols = np.zeros((1, NUM.n_subcarriers), dtype=complex)
    symbols[0, 100] = 1.0
    block = ofdm.ofdm_modulate(ofdm.ResourceGrid(symbols), NUM)
    body = block.samples[NUM.cp_len:]  # FFT window without the prefix
    spec = np.abs(np.fft.fft(body)) ** 2
    assert spec.max() / spec.sum() > 0.999


def test_modulate_quantization_error_power():
    # AQNM noise energy of the transmit quantizer on the near-Gaussian
    # OFDM waveform: |Q(x) - (1-alpha)x|^2 ~ alpha(1-alpha)|x|^2.
    rng = np.random.default_rng(2)
    grid = ofdm.random_grid("QPSK", 8, NUM.n_subcarriers, rng)
    clean = ofdm.ofdm_modulate(grid, NUM).samples
    quantized = ofdm.ofdm_modulate(grid, NUM, n_dac=4).samples
    alpha = quantizer.alpha_of(4)
    v = quantized - (1.0 - alpha) * clean
    ratio = np.mean(np.abs(v) ** 2) / np.mean(np.abs(clean) ** 2)
    assert ratio == pytest.approx(alpha * (1.0 - alpha), rel=0.10)


def test_modulate_dimension_mismatch():
    rng = np.random.default_rng(3)
    grid = ofdm.random_grid("QPSK", 2, 1200, rng)
    with pytest.raises(ValueError):
        ofdm.ofdm_modulate(grid, NUM)


def test_agc_normalize():
    rng = np.random.default_rng(4)
    y = rng.standard_normal(4096) + 1j * rng.standard_normal(4096)
    y = 2.0 * y / math.sqrt(np.mean(np.abs(y) ** 2))  # empirical power exactly 4
    out = ofdm.agc_normalize(quantizer.ComplexSampleBlock(y, 1.0))
    assert np.mean(np.abs(out.samples) ** 2) == pytest.approx(1.0, abs=1e-9)
    np.testing.assert_allclose(out.samples, y / 2.0, rtol=1e-9)
    again = ofdm.agc_normalize(out)
    np.testing.assert_allclose(again.samples, out.samples, rtol=1e-9)
    with pytest.raises(ValueError):
        ofdm.agc_normalize(quantizer.ComplexSampleBlock(np.zeros(8, dtype=complex), 1.0))


def test_fir_lowpass_response():
    fs = 100.0
    t = np.arange(8192) / fs
    inband = quantizer.ComplexSampleBlock(np.exp(2j * np.pi * 5.0 * t), fs)
    out = ofdm.fir_lowpass(inband, 20.0)
    mid = slice(1000, 7000)  # avoid the linear-convolution edges
    gain_db = 20 * np.log10(np.abs(out.samples[mid]).mean())
    assert abs(gain_db) < 0.1
    stop = quantizer.ComplexSampleBlock(np.exp(2j * np.pi * 30.0 * t), fs)
    out = ofdm.fir_lowpass(stop, 20.0)
    atten_db = -20 * np.log10(np.abs(out.samples[mid]).mean() + 1e-300)
    assert atten_db >= 40.0
    with pytest.raises(ValueError):
        ofdm.fir_lowpass(inband, 60.0)


def test_fir_lowpass_band_limits_white_noise():
    fs = 100.0
    rng = np.random.default_rng(5)
    x = (rng.standard_normal(65536) + 1j * rng.standard_normal(65536)) / math.sqrt(2)
    out = ofdm.fir_lowpass(quantizer.ComplexSampleBlock(x, fs), 20.0)
    f, psd = signal.welch(out.samples, fs=fs, nperseg=4096, return_onesided=False)
    inband = psd[np.abs(f) < 15.0].mean()
    outband = psd[np.abs(f) > 35.0].mean()
    assert 10 * math.log10(inband / outband) >= 40.0


def test_osr_gain():
    assert ofdm.osr_gain_db(4096, 3288) == pytest.approx(0.95, abs=0.01)
    assert ofdm.osr_gain_db(4096, 2400) == pytest.approx(2.32, abs=0.01)
    assert ofdm.osr_gain_db(4096, 4096) == 0.0
    with pytest.raises(ValueError):
        ofdm.osr_gain_db(4096, 0)


def test_trial_reproducibility():
    cfg = ofdm.LinkTrialConfig(snr_db=5.0, n_adc=3, n_dac=5, n_symbols=6, seed=42)
    assert ofdm.run_link_trial(cfg) == ofdm.run_link_trial(cfg)
    other = ofdm.LinkTrialConfig(snr_db=5.0, n_adc=3, n_dac=5, n_symbols=6, seed=43)
    assert ofdm.run_link_trial(cfg) != ofdm.run_link_trial(other)


def test_trial_config_validation():
    with pytest.raises(ValueError):
        ofdm.LinkTrialConfig(snr_db=0.0, n_adc=4, n_dac=4, n_symbols=2)


def test_infinite_resolution_gains_osr():
    cfg = ofdm.LinkTrialConfig(snr_db=10.0, n_adc=math.inf, n_dac=math.inf, n_symbols=8, seed=0)
    measured = ofdm.run_link_trial(cfg)
    assert measured == pytest.approx(10.0 + ofdm.osr_gain_db(4096, 3288), abs=0.3)


def test_predicted_curve_matches_one_operating_point():
    cfg = ofdm.LinkTrialConfig(snr_db=10.0, n_adc=4, n_dac=6, n_symbols=10, seed=3)
    measured = ofdm.run_link_trial(cfg)
    predicted = ofdm.predict_link_snr_db(10.0, 4, NUM)
    assert abs(measured - predicted) <= 0.5


def test_prediction_identity_at_infinite_resolution():
    pred = ofdm.predict_link_snr_db(7.0, math.inf, NUM)
    assert pred == pytest.approx(7.0 + ofdm.osr_gain_db(4096, 3288), abs=1e-9)


def test_sdma_trial_reduces_to_link_trial():
    # sir_db=None removes the interferer; gamma0 sets the same full-band
    # noise power that snr_db = gamma0 - OSR would, so the chains agree.
    num = ofdm.OfdmNumerology(used_prbs=200)
    osr_db = ofdm.osr_gain_db(num.fft_size, num.n_subcarriers)
    sdma = ofdm.run_sdma_link_trial(
        ofdm.LinkTrialConfig(0.0, math.inf, math.inf, num, 6, 9, sir_db=None, gamma0_db=12.0)
    )
    plain = ofdm.run_link_trial(
        ofdm.LinkTrialConfig(12.0 - osr_db, math.inf, math.inf, num, 6, 9)
    )
    assert sdma == pytest.approx(plain, abs=1e-6)
    with pytest.raises(ValueError):
        ofdm.run_sdma_link_trial(ofdm.LinkTrialConfig(0.0, 3, math.inf, num, 6, 9, sir_db=20.0))


def test_sdma_low_noise_floor_small_quantization_loss():
    num = ofdm.OfdmNumerology(used_prbs=200)
    kw = dict(numerology=num, n_symbols=8, seed=1, sir_db=10.0, gamma0_db=0.0)
    coarse = ofdm.run_sdma_link_trial(ofdm.LinkTrialConfig(0.0, 3, math.inf, **kw))
    fine = ofdm.run_sdma_link_trial(ofdm.LinkTrialConfig(0.0, math.inf, math.inf, **kw))
    assert fine - coarse < 0.5
