from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, strategies as st

from gpsimlab.calibration import (
    CSV_HEADER,
    DEFAULT_SAMPLE_COUNT,
    EmptySampleSet,
    SimDelayModel,
    apply_correction,
    calibrate,
    export_samples_csv,
    import_samples_csv,
    measure_sim_delay,
    true_delay_series,
)
from gpsimlab.rng import stream
from gpsimlab.timebase import ClockErrorChain, TimeOffset

MODEL = SimDelayModel(
    mean_delay=TimeOffset.from_millis(30.0),
    wander_sigma=TimeOffset.from_millis(0.02),
    noise_sigma=TimeOffset.from_millis(0.5),
)

sample_lists = st.lists(
    st.integers(min_value=0, max_value=10**9).map(TimeOffset), min_size=1, max_size=60
)


class TestCalibrate:
    @given(sample_lists)
    def test_correction_is_rounded_exact_mean(self, samples):
        # oracle: rational mean rounded half-up, floor(mean + 1/2)
        mean = Fraction(sum(s.ns for s in samples), len(samples))
        expected = (mean + Fraction(1, 2)).__floor__()
        assert calibrate(samples).correction.ns == expected

    @given(sample_lists, st.integers(min_value=-10**6, max_value=10**6))
    def test_shift_equivariance(self, samples, shift_ns):
        # shifting every sample by a constant shifts the correction by
        # exactly that constant; float averaging would not guarantee this
        shifted = [TimeOffset(s.ns + shift_ns) for s in samples]
        assert calibrate(shifted).correction.ns == calibrate(samples).correction.ns + shift_ns

    @given(sample_lists)
    def test_residual_bound_is_max_abs_deviation(self, samples):
        result = calibrate(samples)
        brute = max(abs(s.ns - result.correction.ns) for s in samples)
        assert result.residual_bound.ns == brute

    @given(st.lists(st.integers(min_value=0, max_value=10**9).map(TimeOffset), min_size=2, max_size=60))
    def test_stddev_matches_unbiased_estimator(self, samples):
        result = calibrate(samples)
        expected = float(np.std([s.ns for s in samples], ddof=1))
        assert result.sample_stddev.ns == pytest.approx(expected, rel=1e-9, abs=1.0)

    def test_single_sample(self):
        result = calibrate([TimeOffset.from_millis(31)])
        assert result.correction == TimeOffset.from_millis(31)
        assert result.sample_stddev.ns == 0
        assert result.residual_bound.ns == 0
        assert result.sample_count == 1

    def test_empty_rejected(self):
        with pytest.raises(EmptySampleSet):
            calibrate([])


class TestMeasurement:
    def test_series_never_negative_and_sized(self):
        rng = stream(0, "cal", "series")
        series = true_delay_series(MODEL, 500, rng)
        assert len(series) == 500
        assert (series >= 0.0).all()

    def test_measurement_deterministic(self):
        a = measure_sim_delay(MODEL, 100, stream(3, "cal"))
        b = measure_sim_delay(MODEL, 100, stream(3, "cal"))
        assert a == b

    @pytest.mark.parametrize("seed", [0, 1, 2])
    def test_correction_lands_near_process_mean(self, seed):
        samples = measure_sim_delay(MODEL, DEFAULT_SAMPLE_COUNT, stream(seed, "cal", "run"))
        correction = calibrate(samples).correction
        assert correction.millis == pytest.approx(30.0, abs=1.5)

    def test_apply_correction_touches_only_sim_delay(self):
        chain = ClockErrorChain(
            sim_delay=TimeOffset.from_millis(30.2),
            ntp_error=TimeOffset.from_millis(2),
            ref_error=TimeOffset(150),
        )
        result = calibrate(measure_sim_delay(MODEL, 400, stream(5, "cal")))
        corrected = apply_correction(chain, result)
        assert corrected.sim_delay == chain.sim_delay - result.correction
        assert corrected.ntp_error == chain.ntp_error
        assert corrected.ref_error == chain.ref_error

    def test_calibration_shrinks_typical_residual(self):
        # after removing the correction the remaining process delay is a
        # fraction of the original 30 ms mean
        for seed in range(4):
            samples = measure_sim_delay(MODEL, DEFAULT_SAMPLE_COUNT, stream(seed, "meas"))
            correction = calibrate(samples).correction
            truth = TimeOffset.from_seconds(
                float(true_delay_series(MODEL, DEFAULT_SAMPLE_COUNT, stream(seed, "truth"))[-1])
            )
            assert abs((truth - correction).millis) < 5.0


class TestCsv:
    def test_round_trip_exact(self, tmp_path):
        samples = measure_sim_delay(MODEL, 64, stream(11, "csv"))
        path = tmp_path / "samples.csv"
        export_samples_csv(path, samples)
        assert import_samples_csv(path) == samples

    def test_header_written(self, tmp_path):
        path = tmp_path / "samples.csv"
        export_samples_csv(path, [TimeOffset.from_millis(30)])
        first = path.read_text().splitlines()[0]
        assert first.split(",") == list(CSV_HEADER)

    def test_bad_header_rejected(self, tmp_path):
        path = tmp_path / "bad.csv"
        path.write_text("time,delay\n0.0,30.0\n")
        with pytest.raises(ValueError):
            import_samples_csv(path)

    def test_empty_file_rejected(self, tmp_path):
        path = tmp_path / "empty.csv"
        path.write_text(",".join(CSV_HEADER) + "\n")
        with pytest.raises(EmptySampleSet):
            import_samples_csv(path)


class TestModelValidation:
    def test_negative_parameters_rejected(self):
        with pytest.raises(ValueError):
            SimDelayModel(
                mean_delay=TimeOffset.from_millis(-1),
                wander_sigma=TimeOffset(0),
                noise_sigma=TimeOffset(0),
            )
        with pytest.raises(ValueError):
            SimDelayModel(
                mean_delay=TimeOffset.from_millis(30),
                wander_sigma=TimeOffset(-1),
                noise_sigma=TimeOffset(0),
            )
