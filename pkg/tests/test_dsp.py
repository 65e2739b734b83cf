import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from paramarray.dsp import (FilterChain, FilterSpec, analog_butterworth_db, apply_filter,
                            design_butterworth, normalized_xcorr, postprocess_chain, rms,
                            spectrum)
from paramarray.errors import SampleRateMismatchError, UnstableDesignError, ZeroEnergyError
from paramarray.waveform import SymbolSpec, Waveform, synth_symbol

FS = 20e6
HALF_POWER_DB = -10 * math.log10(2)


def tone(f, n, fs=FS, start=0.0, amp=1.0):
    t = start + np.arange(n) / fs
    return Waveform(amp * np.sin(2 * np.pi * f * t), fs, start)


DESIGNS = [
    FilterSpec("lowpass", 28, 40e3),
    FilterSpec("lowpass", 28, 160e3),
    FilterSpec("lowpass", 5, 1e6),
    FilterSpec("highpass", 2, 1e3),
    FilterSpec("highpass", 3, 50e3),
    FilterSpec("bandpass", 1, (805e3, 905e3)),
    FilterSpec("bandpass", 4, (100e3, 400e3)),
]


class TestDesign:
    @pytest.mark.parametrize("spec", DESIGNS, ids=lambda s: f"{s.kind}{s.order}")
    def test_half_power_at_every_cutoff(self, spec):
        chain = design_butterworth(spec, FS)
        np.testing.assert_allclose(chain.magnitude_db(spec.cutoffs()), HALF_POWER_DB, atol=0.05)

    @pytest.mark.parametrize("spec", DESIGNS, ids=lambda s: f"{s.kind}{s.order}")
    def test_matches_prewarped_analog_oracle(self, spec):
        chain = design_butterworth(spec, FS)
        probes = np.logspace(math.log10(200.0), math.log10(5e6), 20)
        designed = chain.magnitude_db(probes)
        oracle = analog_butterworth_db(spec, probes, FS)
        visible = oracle > -250  # below that both are numerical noise
        np.testing.assert_allclose(designed[visible], oracle[visible], atol=0.1)

    @pytest.mark.parametrize("spec", DESIGNS, ids=lambda s: f"{s.kind}{s.order}")
    def test_sections_stable_and_normalised(self, spec):
        chain = design_butterworth(spec, FS)
        assert chain.is_stable()
        assert chain.n_sections == math.ceil(spec.order * (2 if spec.kind == "bandpass" else 1) / 2)
        np.testing.assert_array_equal(chain.sections[:, 3], 1.0)
        for row in chain.sections:
            lead = next(c for c in row[:3] if c != 0)
            assert lead == 1.0

    def test_sections_ordered_by_ascending_q(self):
        chain = design_butterworth(FilterSpec("lowpass", 28, 40e3), FS)
        radii = [max(abs(np.roots(row[3:]))) for row in chain.sections]
        assert radii == sorted(radii)

    def test_lowpass_dc_gain(self):
        for fc in (40e3, 80e3, 160e3, 1e6):
            chain = design_butterworth(FilterSpec("lowpass", 28, fc), FS)
            assert abs(chain.response(0.0)[0]) == pytest.approx(1.0, abs=1e-6)

    def test_highpass_blocks_dc(self):
        chain = design_butterworth(FilterSpec("highpass", 2, 1e3), FS)
        assert abs(chain.response(0.0)[0]) == 0.0
        assert chain.magnitude_db(1e3)[0] == pytest.approx(HALF_POWER_DB, abs=0.05)

    @pytest.mark.parametrize("ratio", [50, 100, 500])
    def test_close_to_analog_prototype_well_below_nyquist(self, ratio):
        fc = FS / ratio
        chain = design_butterworth(FilterSpec("lowpass", 28, fc), FS)
        analog = 10 * math.log10(1 + 2 ** 56)
        assert analog == pytest.approx(168.6, abs=0.05)
        assert -chain.magnitude_db(2 * fc)[0] == pytest.approx(analog, abs=1.0)

    def test_frequency_warping_near_nyquist_follows_the_oracle(self):
        # at fs/20 the bilinear map stretches 2 fc away from the cutoff,
        # so the digital filter attenuates more than the analog prototype
        spec = FilterSpec("lowpass", 28, FS / 20)
        chain = design_butterworth(spec, FS)
        digital = -chain.magnitude_db(2 * spec.cutoff_hz)[0]
        assert digital > 168.6 + 1.0
        assert digital == pytest.approx(-analog_butterworth_db(spec, 2 * spec.cutoff_hz, FS),
                                        abs=0.1)

    @pytest.mark.parametrize("cutoff", [0.0, FS / 2, FS])
    def test_cutoff_outside_band(self, cutoff):
        with pytest.raises(ValueError):
            design_butterworth(FilterSpec("lowpass", 4, cutoff), FS)

    @pytest.mark.parametrize("order, cutoff", [(28, 1e-3), (60, 2.0), (28, 1e-6),
                                               (28, FS / 2 * (1 - 1e-9)),
                                               (60, FS / 2 * (1 - 1e-12))])
    def test_numerically_unrealisable_design_is_detected(self, order, cutoff):
        with pytest.raises(UnstableDesignError):
            design_butterworth(FilterSpec("lowpass", order, cutoff), FS)

    def test_invalid_specs(self):
        with pytest.raises(ValueError):
            FilterSpec("notch", 2, 1e3)
        with pytest.raises(ValueError):
            FilterSpec("lowpass", 0, 1e3)
        with pytest.raises(ValueError):
            FilterSpec("bandpass", 2, (2e3, 1e3))

    def test_impulse_response_decays(self):
        chain = postprocess_chain(20e3, FS)
        impulse = np.zeros(400_000)
        impulse[0] = 1.0
        h = apply_filter(chain, Waveform(impulse, FS)).samples
        assert np.max(np.abs(h[-1000:])) < 1e-12 * np.max(np.abs(h))


class TestPostprocessChain:
    def test_cutoffs(self):
        chain = postprocess_chain(20e3, FS)
        assert chain.magnitude_db(40e3)[0] == pytest.approx(HALF_POWER_DB, abs=0.05)
        assert chain.magnitude_db(1e3)[0] == pytest.approx(HALF_POWER_DB, abs=0.05)
        assert chain.n_sections == 15

    @pytest.mark.parametrize("f_d", [10e3, 20e3, 40e3, 80e3])
    def test_carrier_rejection(self, f_d):
        assert postprocess_chain(f_d, FS).magnitude_db(855e3)[0] < -100.0

    def test_dc_offset_settles(self):
        chain = postprocess_chain(20e3, FS)
        y = apply_filter(chain, Waveform(np.ones(int(0.011 * FS)), FS)).samples
        after = y[int(0.010 * FS):]
        assert 20 * math.log10(np.max(np.abs(after))) <= -60.0

    def test_rejects_cutoff_above_nyquist(self):
        with pytest.raises(ValueError):
            postprocess_chain(6e6, FS)


class TestApplyFilter:
    def test_zero_in_zero_out(self):
        y = apply_filter(postprocess_chain(20e3, FS), Waveform(np.zeros(1000), FS))
        assert not np.any(y.samples) and len(y) == 1000

    def test_in_band_tone_amplitude(self):
        chain = design_butterworth(FilterSpec("lowpass", 28, 40e3), FS)
        x = tone(10e3, int(0.004 * FS))
        y = apply_filter(chain, x)
        steady = y.samples[int(0.002 * FS):]
        expected_db = chain.magnitude_db(10e3)[0]
        assert abs(expected_db) < 0.1
        assert 20 * math.log10(np.max(np.abs(steady))) == pytest.approx(expected_db, abs=0.01)

    def test_zero_phase_keeps_symmetric_pulse_centred(self):
        n = 40_000
        t = (np.arange(n) - n // 2) / FS
        pulse = np.exp(-(t / 20e-6) ** 2) * np.cos(2 * np.pi * 20e3 * t)
        y = apply_filter(postprocess_chain(20e3, FS), Waveform(pulse, FS), "zero_phase").samples
        assert abs(int(np.argmax(y)) - n // 2) <= 1
        np.testing.assert_allclose(y[n // 2 - 5000:n // 2], y[n // 2 + 5000:n // 2:-1],
                                   atol=1e-4 * np.max(np.abs(y)))

    def test_zero_phase_has_squared_magnitude(self):
        chain = design_butterworth(FilterSpec("lowpass", 4, 100e3), FS)
        x = tone(100e3, int(0.004 * FS))
        y = apply_filter(chain, x, "zero_phase").samples[int(0.001 * FS):int(0.003 * FS)]
        assert 20 * math.log10(np.max(np.abs(y))) == pytest.approx(2 * HALF_POWER_DB, abs=0.05)

    def test_rate_mismatch(self):
        with pytest.raises(SampleRateMismatchError):
            apply_filter(postprocess_chain(20e3, FS), Waveform(np.zeros(10), 1e6))

    def test_identity_chain(self):
        x = Waveform(np.arange(10.0), FS)
        np.testing.assert_array_equal(apply_filter(FilterChain.identity(FS), x).samples, x.samples)

    @settings(max_examples=20, deadline=None)
    @given(st.floats(-5, 5), st.floats(-5, 5), st.integers(0, 10_000),
           st.integers(0, 2 ** 32 - 1))
    def test_causal_lti(self, a, b, shift, seed):
        chain = postprocess_chain(20e3, FS)
        rng = np.random.default_rng(seed)
        x, y = rng.normal(size=(2, 30_000))
        fx = apply_filter(chain, Waveform(x, FS)).samples
        fy = apply_filter(chain, Waveform(y, FS)).samples
        combo = apply_filter(chain, Waveform(a * x + b * y, FS)).samples
        scale = max(np.max(np.abs(fx)), np.max(np.abs(fy)), 1e-300) * (abs(a) + abs(b) + 1)
        assert np.max(np.abs(combo - (a * fx + b * fy))) <= 1e-9 * scale
        shifted = apply_filter(chain, Waveform(np.concatenate([np.zeros(shift), x]), FS)).samples
        assert np.max(np.abs(shifted[shift:] - fx)) <= 1e-9 * np.max(np.abs(fx))


class TestSpectrum:
    def test_tone_at_bin_centre(self):
        n = 4000
        x = tone(50 * FS / n, n)
        f, mag = spectrum(x)
        k = int(np.argmax(mag))
        assert f[k] == pytest.approx(50 * FS / n)
        others = np.delete(mag, k)
        assert 20 * math.log10(np.max(others) / mag[k]) < -250
        assert f[1] - f[0] == pytest.approx(FS / n)

    @given(st.integers(2, 400), st.integers(0, 2 ** 32 - 1))
    def test_parseval(self, n, seed):
        x = np.random.default_rng(seed).normal(size=n)
        _, mag = spectrum(Waveform(x, FS))
        assert np.sum(mag ** 2) == pytest.approx(np.sum(x ** 2), rel=1e-9)

    def test_sqram_symbol_sidebands(self):
        # E^2 = 1 - sin(wd t) is periodic at f_d, so the envelope and the
        # modulated carrier carry lines at integer multiples of f_d only
        w = synth_symbol(SymbolSpec(20e3, 8, 1), 855e3, FS).padded(0.0, 0.0)
        f, mag = spectrum(w)
        power = mag ** 2

        def band(centre, half=2e3):
            sel = np.abs(f - centre) <= half
            return power[sel].sum()

        carrier = band(855e3)
        total = power.sum()
        assert band(855e3, 100e3) > 0.99 * total
        for offset in (20e3, 40e3):
            assert band(855e3 + offset) > 1e-3 * carrier
            assert band(855e3 - offset) > 1e-3 * carrier
        # nothing at half the difference frequency
        for offset in (10e3, 30e3):
            assert band(855e3 + offset) < 1e-3 * band(855e3 + 20e3)

    def test_empty(self):
        with pytest.raises(ValueError):
            spectrum(Waveform(np.zeros(0), FS))


class TestCorrelation:
    def test_self(self):
        a = tone(20e3, 2000)
        c = normalized_xcorr(a, a)
        assert c.peak_value == pytest.approx(1.0)
        assert c.peak_delay_s == 0.0

    def test_negated(self):
        a = tone(20e3, 2000)
        c = normalized_xcorr(a, a.scaled(-1.0))
        assert c.peak_value == pytest.approx(-1.0)
        assert c.peak_delay_s == 0.0

    def test_delay(self):
        a = Waveform(np.hanning(500), FS)
        b = Waveform(np.concatenate([np.zeros(17), np.hanning(500)]), FS)
        c = normalized_xcorr(a, b)
        assert c.peak_value == pytest.approx(1.0)
        assert c.peak_delay_s == pytest.approx(17 / FS)

    def test_delay_through_start_times(self):
        a = Waveform(np.hanning(500), FS)
        c = normalized_xcorr(a, a.delayed(1e-3))
        assert c.peak_delay_s == pytest.approx(1e-3)

    def test_zero_energy(self):
        with pytest.raises(ZeroEnergyError):
            normalized_xcorr(Waveform(np.zeros(10), FS), tone(1e3, 10))

    def test_rate_mismatch(self):
        with pytest.raises(SampleRateMismatchError):
            normalized_xcorr(Waveform(np.ones(10), FS), Waveform(np.ones(10), 1e6))

    @given(st.floats(1e-3, 1e3), st.integers(0, 2 ** 32 - 1))
    def test_scale_and_sign(self, k, seed):
        rng = np.random.default_rng(seed)
        a = Waveform(rng.normal(size=64), FS)
        b = Waveform(rng.normal(size=80), FS)
        base = normalized_xcorr(a, b)
        assert -1.0 - 1e-12 <= base.peak_value <= 1.0 + 1e-12
        np.testing.assert_allclose(normalized_xcorr(a.scaled(k), b).values, base.values,
                                   atol=1e-12)
        np.testing.assert_allclose(normalized_xcorr(a, b.scaled(-1.0)).values, -base.values,
                                   atol=1e-15)


class TestRms:
    def test_constant(self):
        assert rms(Waveform(np.full(10, -3.0), FS)) == pytest.approx(3.0)

    def test_sine(self):
        assert rms(tone(20e3, 4000)) == pytest.approx(1 / math.sqrt(2), abs=1e-9)

    def test_zero(self):
        assert rms(Waveform(np.zeros(10), FS)) == 0.0

    def test_window(self):
        x = Waveform(np.concatenate([np.zeros(10), np.ones(10)]), 10.0)
        assert rms(x, (1.0, 2.0)) == pytest.approx(1.0)
        with pytest.raises(ValueError):
            rms(x, (1.0, 1.0))
        with pytest.raises(ValueError):
            rms(x, (0.0, 5.0))
