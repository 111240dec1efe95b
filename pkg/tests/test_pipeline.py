"""Envelope extraction, FWHM, SNR trials and the multiplexing advantage."""

import math

import numpy as np
import pytest
import scipy.stats

from aoimux import pipeline, simulator
from aoimux.demux import DepthProfile
from aoimux.errors import ConfigError, EdgePeak, NoPeak, NyquistViolation
from aoimux.pipeline import _circular_box_mean

F_US = 1.25e6
F_S = 5e6
C = 990.0
BIN = C / F_S


def phantom(boundary=0.0004, extent=0.004, mu_a=0.3):
    return simulator.Phantom(
        mu_s_prime=15.0,
        mu_a=mu_a,
        src_pos=(-0.0075, 0.0, boundary),
        det_pos=(0.0075, 0.0, boundary),
        sound_speed=C,
        depth_extent=extent,
    )


def config(mode="coded", order=79, periods=4, **kw):
    k = round(F_S / F_US)
    defaults = dict(
        f_us=F_US,
        f_s=F_S,
        c=C,
        mode=mode,
        order=order,
        duration_s=periods * order * k / F_S,
        seed=77,
    )
    defaults.update(kw)
    return simulator.AcquisitionConfig(**defaults)


class TestExtraction:
    @pytest.mark.parametrize("amp,phi", [(1.0, 0.0), (0.7, 1.1), (3.0, -2.0)])
    def test_pure_carrier_recovers_amplitude(self, amp, phi):
        n = np.arange(128)
        sig = amp * np.sin(2 * np.pi * F_US / F_S * n + phi)
        prof = pipeline.extract_modulated(sig, F_US, F_S, bin_width_m=BIN)
        assert np.abs(prof.values - amp).max() < 0.01 * amp

    def test_zero_input_zero_output(self):
        prof = pipeline.extract_modulated(np.zeros(64), F_US, F_S, bin_width_m=BIN)
        assert np.abs(prof.values).max() == 0.0

    def test_delta_phantom_peak_width_equals_pulse_length(self):
        k_bin = 120
        ph = simulator.Phantom(
            mu_s_prime=15.0,
            mu_a=0.1,
            src_pos=(-0.0075, 0.0, k_bin * BIN),
            det_pos=(0.0075, 0.0, k_bin * BIN),
            sound_speed=C,
            depth_extent=0.4 * BIN,
        )
        cfg = config("single-pulse", periods=2)
        stream = simulator.simulate_stream(cfg, ph)
        prof = pipeline.reconstruct_profile(stream)
        # single peak near the occupied bin; width is pulse-length limited.
        # The K=4 one-cycle pulse samples to {0,1,0,-1}, so its discrete
        # footprint crosses half maximum at K-1 bins.
        k = cfg.subsets_per_cycle
        assert abs(int(np.argmax(prof.values)) - k_bin) <= k
        fwhm = pipeline.measure_fwhm(prof)
        assert fwhm <= k * BIN + 1e-12
        assert fwhm == pytest.approx((k - 1) * BIN, abs=BIN / 2)

    def test_nyquist_violation(self):
        with pytest.raises(NyquistViolation):
            pipeline.extract_modulated(np.zeros(16), 1e6, 1e6, bin_width_m=1.0)

    def test_profile_metadata_carried_through(self):
        prof = DepthProfile(np.ones(32), bin_width_m=BIN, depth_origin_m=0.01)
        out = pipeline.extract_modulated(prof, F_US, F_S)
        assert out.bin_width_m == BIN
        assert out.depth_origin_m == 0.01


class TestMeasureFwhm:
    def test_triangle(self):
        # triangle of base 2w has FWHM exactly w
        half = 20
        tri = np.concatenate([np.linspace(0, 1, half + 1), np.linspace(1, 0, half + 1)[1:]])
        prof = DepthProfile(np.pad(tri, 5), bin_width_m=1e-3)
        assert pipeline.measure_fwhm(prof) == pytest.approx(half * 1e-3, rel=1e-9)

    def test_gaussian(self):
        sigma_bins = 12.0
        n = np.arange(200)
        g = np.exp(-0.5 * ((n - 90) / sigma_bins) ** 2)
        prof = DepthProfile(g, bin_width_m=1e-3)
        expected = 2.0 * math.sqrt(2.0 * math.log(2.0)) * sigma_bins * 1e-3
        assert pipeline.measure_fwhm(prof) == pytest.approx(expected, abs=0.5e-3)

    def test_flat_profile_raises(self):
        with pytest.raises(NoPeak):
            pipeline.measure_fwhm(DepthProfile(np.ones(32), bin_width_m=1e-3))

    def test_edge_peak_raises(self):
        with pytest.raises(EdgePeak):
            pipeline.measure_fwhm(DepthProfile(np.arange(32.0), bin_width_m=1e-3))

    def test_uncrossed_half_level_raises(self):
        vals = np.concatenate([np.full(16, 0.9), [1.0], np.full(16, 0.9)])
        with pytest.raises(EdgePeak):
            pipeline.measure_fwhm(DepthProfile(vals, bin_width_m=1e-3))

    def test_noise_free_modes_agree_within_one_bin(self):
        ph = phantom(boundary=0.003, extent=0.004, mu_a=1.0)
        fwhm = {}
        for mode in ("coded", "single-pulse"):
            stream = simulator.simulate_stream(config(mode), ph)
            fwhm[mode] = pipeline.measure_fwhm(pipeline.reconstruct_profile(stream))
        assert abs(fwhm["coded"] - fwhm["single-pulse"]) <= BIN


class TestMeasureSnr:
    def test_noise_free_reports_sentinel(self):
        rep = pipeline.measure_snr(config(noise_sigma=0.0), phantom(), 3)
        assert rep.noise_free
        assert math.isinf(rep.snr)
        assert rep.noise_std == 0.0

    def test_doubling_noise_halves_snr(self):
        # trial seeds depend only on (seed, trial), so both runs see the
        # same noise draws scaled by sigma and the ratio is tight
        ph = phantom()
        lo = pipeline.measure_snr(config(noise_sigma=0.05), ph, 30)
        hi = pipeline.measure_snr(config(noise_sigma=0.10), ph, 30)
        assert hi.snr / lo.snr == pytest.approx(0.5, rel=0.10)

    def test_requires_two_trials(self):
        with pytest.raises(ConfigError):
            pipeline.measure_snr(config(noise_sigma=0.1), phantom(), 1)

    def test_noise_floor_subtraction_lowers_signal(self):
        ph = phantom()
        plain = pipeline.measure_snr(config(noise_sigma=0.1), ph, 20)
        corrected = pipeline.measure_snr(
            config(noise_sigma=0.1), ph, 20, subtract_noise_floor=True
        )
        assert corrected.signal_mean < plain.signal_mean
        assert corrected.noise_std == plain.noise_std


class TestRayleighFloor:
    def test_off_signal_magnitude_mean(self):
        # mean of the envelope at a signal-free bin is sigma_q sqrt(pi/2)
        # with sigma_q the per-quadrature std of the demodulator output
        rng = np.random.default_rng(8)
        k = 4
        phase = 2 * np.pi * F_US / F_S * np.arange(64)
        mags = np.empty(10_000)
        i_arms = np.empty(10_000)
        for t in range(10_000):
            noise = rng.normal(0.0, 1.0, 64)
            prof = pipeline.extract_modulated(noise, F_US, F_S, bin_width_m=BIN)
            mags[t] = prof.values[32]
            i_arms[t] = 2.0 * _circular_box_mean(noise * np.cos(phase), k)[32]
        sigma_q = i_arms.std(ddof=1)
        assert mags.mean() / sigma_q == pytest.approx(math.sqrt(math.pi / 2), rel=0.05)


class TestMultiplexingAdvantage:
    def test_gain_formulas(self):
        assert pipeline.theoretical_multiplexing_gain(3) == pytest.approx(
            math.sqrt(3) / 2
        )
        assert pipeline.theoretical_multiplexing_gain(3) < 1.0  # coded loses at N=3
        assert pipeline.theoretical_multiplexing_gain(79) == pytest.approx(4.4441, abs=1e-4)
        assert pipeline.exact_multiplexing_gain(79) == pytest.approx(4.5004, abs=1e-4)

    def test_theoretical_column_is_exact(self):
        curve = pipeline.multiplexing_advantage(
            config(noise_sigma=0.05), phantom(), [7, 19], 4
        )
        assert curve.theoretical_gain == [math.sqrt(7) / 2, math.sqrt(19) / 2]

    def test_orders_sorted_and_deduplicated(self):
        curve = pipeline.multiplexing_advantage(
            config(noise_sigma=0.05), phantom(), [19, 7, 19], 4
        )
        assert curve.orders == [7, 19]

    def test_empty_orders_raise(self):
        with pytest.raises(ConfigError):
            pipeline.multiplexing_advantage(config(), phantom(), [], 4)

    def test_measured_gain_tracks_inverse_row_norm(self):
        # 400 paired trials put the measured gain within a few percent of
        # the exact advantage (N+1)/(2 sqrt(N))
        curve = pipeline.multiplexing_advantage(
            config(noise_sigma=0.05, seed=5), phantom(), [7, 31], 400
        )
        for order, measured in zip(curve.orders, curve.measured_gain):
            assert measured == pytest.approx(
                pipeline.exact_multiplexing_gain(order), rel=0.08
            )

    def test_gain_increases_with_order(self):
        curve = pipeline.multiplexing_advantage(
            config(noise_sigma=0.05, seed=6), phantom(), [7, 19, 31, 43, 79], 200
        )
        rho = scipy.stats.spearmanr(curve.orders, curve.measured_gain).statistic
        assert rho > 0.95

    def test_max_rate_reference_divides_gain_by_sqrt_ratio(self):
        # a denser single-pulse train averages more repetitions, cutting
        # the measured advantage by sqrt(N / reference order)
        ph = phantom()
        base = config(noise_sigma=0.05, seed=7)
        n = 31
        matched = pipeline.multiplexing_advantage(base, ph, [n], 300)
        packed = pipeline.multiplexing_advantage(
            base, ph, [n], 300, single_pulse_reference="max-rate"
        )
        sp_order = pipeline._max_rate_order(base, ph)
        expected = matched.measured_gain[0] / math.sqrt(n / sp_order)
        assert packed.measured_gain[0] == pytest.approx(expected, rel=0.10)

    def test_unknown_reference_rejected(self):
        with pytest.raises(ConfigError):
            pipeline.multiplexing_advantage(
                config(), phantom(), [7], 4, single_pulse_reference="fastest"
            )
