import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from ozrisk.er_model import (
    DoseState,
    ERFunctionSpec,
    ERVariant,
    dfev1,
    dose_step,
    effective_dose,
    median_response,
    median_scale,
)


def test_spec_validation(spec2012):
    with pytest.raises(ValueError):
        ERFunctionSpec(**{**spec2012.__dict__, "beta5": 0.0})
    with pytest.raises(ValueError):
        ERFunctionSpec(**{**spec2012.__dict__, "beta9": -1.0})
    with pytest.raises(ValueError):
        ERFunctionSpec(**{**spec2012.__dict__, "sigma_nu1": -0.1})
    # nu2 only exists in MSS2013
    with pytest.raises(ValueError):
        ERFunctionSpec(**{**spec2012.__dict__, "sigma_nu2": 1.0})
    with pytest.raises(ValueError):
        ERFunctionSpec(**{**spec2012.__dict__, "variant": ERVariant.MSS2013, "sigma_nu2": 0.0})


def test_dose_state_nonnegative():
    with pytest.raises(ValueError):
        DoseState(x=-1.0, t=0.0)


class TestDoseStep:
    def test_zero_concentration_is_pure_decay(self, spec2012):
        x0 = 123.4
        out = dose_step(DoseState(x0, 0.0), 0.0, 15.0, 60.0, spec2012)
        assert out.x == pytest.approx(x0 * math.exp(-spec2012.beta5 * 60.0), rel=1e-15)
        assert out.t == 60.0

    def test_long_exposure_approaches_fixed_point(self, spec2012):
        c, v = 0.08, 20.0
        fixed_point = (c / spec2012.beta5) * v**spec2012.beta6
        out = dose_step(DoseState(0.0, 0.0), c, v, 1e7, spec2012)
        assert out.x == pytest.approx(fixed_point, rel=1e-12)

    def test_semigroup_split_in_half(self, spec2012):
        c, v, dt = 0.07, 18.0, 60.0
        one = dose_step(DoseState(50.0, 0.0), c, v, dt, spec2012)
        half = dose_step(DoseState(50.0, 0.0), c, v, dt / 2, spec2012)
        two = dose_step(half, c, v, dt / 2, spec2012)
        assert two.x == pytest.approx(one.x, rel=1e-12)

    @settings(max_examples=60, deadline=None)
    @given(
        x0=st.floats(0, 1e3),
        c=st.floats(0, 0.5),
        v=st.floats(0, 60),
        dt=st.floats(0.5, 240),
        split=st.floats(0.05, 0.95),
    )
    def test_semigroup_property(self, spec2012, x0, c, v, dt, split):
        one = dose_step(DoseState(x0, 0.0), c, v, dt, spec2012)
        first = dose_step(DoseState(x0, 0.0), c, v, dt * split, spec2012)
        two = dose_step(first, c, v, dt * (1 - split), spec2012)
        assert two.x == pytest.approx(one.x, rel=1e-12, abs=1e-12)
        assert one.x >= 0.0

    @settings(max_examples=40, deadline=None)
    @given(
        c=st.floats(0, 0.5),
        c2=st.floats(0, 0.5),
        v=st.floats(0, 60),
        v2=st.floats(0, 60),
    )
    def test_monotone_in_concentration_and_ventilation(self, spec2012, c, c2, v, v2):
        lo_c, hi_c = sorted((c, c2))
        lo_v, hi_v = sorted((v, v2))
        base = dose_step(DoseState(10.0, 0.0), lo_c, lo_v, 60.0, spec2012)
        more_c = dose_step(DoseState(10.0, 0.0), hi_c, lo_v, 60.0, spec2012)
        more_v = dose_step(DoseState(10.0, 0.0), lo_c, hi_v, 60.0, spec2012)
        assert more_c.x >= base.x
        assert more_v.x >= base.x

    def test_rejects_bad_inputs(self, spec2012):
        s = DoseState(0.0, 0.0)
        with pytest.raises(ValueError):
            dose_step(s, math.nan, 10.0, 60.0, spec2012)
        with pytest.raises(ValueError):
            dose_step(s, 0.1, math.inf, 60.0, spec2012)
        with pytest.raises(ValueError):
            dose_step(s, 0.1, 10.0, 0.0, spec2012)
        with pytest.raises(ValueError):
            dose_step(s, -0.1, 10.0, 60.0, spec2012)
        with pytest.raises(ValueError):
            dose_step(s, 0.1, -10.0, 60.0, spec2012)

    def test_zero_concentration_season_decays_to_zero(self, spec2012):
        state = DoseState(500.0, 0.0)
        for _ in range(24 * 30):
            state = dose_step(state, 0.0, 10.0, 60.0, spec2012)
        assert state.x < 1e-100


class TestEffectiveDose:
    def test_at_threshold_is_zero(self, spec2012):
        assert effective_dose(spec2012.beta9, spec2012) == 0.0

    def test_below_threshold_is_zero(self, spec2012):
        assert spec2012.beta9 > 0
        assert effective_dose(0.0, spec2012) == 0.0

    def test_linear_above_threshold(self, spec2012):
        assert effective_dose(spec2012.beta9 + 1.0, spec2012) == pytest.approx(1.0, rel=1e-15)


class TestMedianResponse:
    def test_exactly_zero_at_zero_dose(self, spec2012):
        for age, bmi in [(5, 14.0), (18, 26.0), (50, 35.0)]:
            assert median_response(0.0, age, bmi, spec2012) == 0.0

    def test_beta3_zero_kills_response(self, spec2012):
        from dataclasses import replace

        off = replace(spec2012, beta3=0.0)
        for x in [0.0, 1.0, 100.0, 1e6]:
            assert median_response(x, 10, 18.0, off) == 0.0

    def test_asymptote(self, spec2012):
        n = median_scale(10, 18.0, spec2012)
        limit = n * spec2012.beta4 / (1.0 + spec2012.beta4)
        assert median_response(1e9, 10, 18.0, spec2012) == pytest.approx(limit, rel=1e-12)

    @settings(max_examples=40, deadline=None)
    @given(x1=st.floats(0, 1e4), x2=st.floats(0, 1e4))
    def test_monotone_when_scale_positive(self, spec2012, x1, x2):
        lo, hi = sorted((x1, x2))
        age, bmi = 10, 18.0
        assert median_scale(age, bmi, spec2012) > 0
        assert median_response(hi, age, bmi, spec2012) >= median_response(lo, age, bmi, spec2012)

    def test_negative_scale_passes_through(self, spec2012):
        # Extreme age makes the scale negative; response must go negative, unclamped.
        age = 200
        assert median_scale(age, 23.0, spec2012) < 0
        assert median_response(100.0, age, 23.0, spec2012) < 0.0


class TestDfev1:
    def test_all_zero(self, spec2012):
        assert dfev1(0.0, 1.7, 0.0, 0.0, spec2012) == 0.0

    def test_mss2012_noise_only_max_at_two_sd(self, spec2012):
        # At +-2 sd bounds the additive term caps at 2 * 4.13 = 8.26 without ozone.
        assert dfev1(0.0, 0.3, 8.26, 0.0, spec2012) == 8.26

    def test_mss2013_noise_only_max_at_two_sd(self, spec2013):
        # 2 * 3.02 = 6.04 for the MSS 2013 additive term.
        assert dfev1(0.0, -0.5, 6.04, 1.0, spec2013) == 6.04

    @settings(max_examples=50, deadline=None)
    @given(
        m=st.floats(-5, 20),
        u=st.floats(-3, 3),
        nu1=st.floats(-10, 10),
    )
    def test_variants_agree_when_nu2_zero(self, spec2012, spec2013, m, u, nu1):
        assert dfev1(m, u, nu1, 0.0, spec2013) == pytest.approx(
            dfev1(m, u, nu1, 0.0, spec2012), rel=1e-15, abs=1e-15
        )

    def test_mss2013_scales_with_nu2(self, spec2013):
        m, u = 2.0, 0.5
        base = math.exp(u) * m
        assert dfev1(m, u, 1.0, 0.5, spec2013) == pytest.approx(base + 1.0 + 0.5 * base, rel=1e-15)

    def test_negative_values_retained(self, spec2012):
        assert dfev1(0.0, 0.0, -7.5, 0.0, spec2012) == -7.5
