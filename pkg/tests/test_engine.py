import json
import math
from dataclasses import replace
from datetime import date

import numpy as np
import pytest

from ozrisk.engine import (
    RiskEstimate,
    RiskQuery,
    SeasonResult,
    aggregate_risk,
    exceedance_days,
    prepare,
    run_prepared,
    run_simulation,
    simulate_person,
    write_person_records,
)
from ozrisk.oracle import zero_ozone_risk
from ozrisk.population import (
    ActivityBlock,
    ActivityTemplate,
    DEFAULT_TEMPLATE,
    DemographicsConfig,
    OzoneSeries,
    Season,
    generate_population,
    generate_timeline,
    load_ozone_series,
    synthetic_series,
    write_ozone_csv,
)
from ozrisk.variability import RedrawFrequency, VariabilityConfig, make_person_streams

from brute_force import binomial_se
from conftest import make_run_config


def zero_spec(spec):
    return replace(spec, beta3=0.0)


class TestSimulatePerson:
    def tl(self, person, season, series, seed=42, template=DEFAULT_TEMPLATE):
        return generate_timeline(person, template, season, series, seed)

    def test_zero_ozone_zero_bounds_gives_zero_days(self, spec2012, short_season):
        person = generate_population(1, DemographicsConfig(), seed=1)[0]
        series = OzoneSeries.zeros(short_season)
        cfg = VariabilityConfig(0.0, 0.0, 0.0, RedrawFrequency.DAILY)
        res = simulate_person(
            person, self.tl(person, short_season, series), zero_spec(spec2012), cfg,
            make_person_streams(42, person.id),
        )
        assert (res.daily_max == 0.0).all()
        assert res.daily_max.size == short_season.n_days

    def test_zero_ozone_two_sd_bounds_capped(self, spec2012, short_season):
        series = OzoneSeries.zeros(short_season)
        cfg = VariabilityConfig(2.0, 2.0, 2.0, RedrawFrequency.HOURLY)
        for person in generate_population(20, DemographicsConfig(), seed=2):
            res = simulate_person(
                person, self.tl(person, short_season, series), zero_spec(spec2012), cfg,
                make_person_streams(42, person.id),
            )
            assert res.daily_max.max() <= 2.0 * spec2012.sigma_nu1

    def test_matches_hand_composed_response(self, spec2012):
        # One day, constant conditions, no noise: recompose the dose
        # recursion and response curve inline and compare at 1e-12.
        season = Season(start=date(2017, 7, 1), end=date(2017, 7, 1))
        template = ActivityTemplate(
            blocks=(ActivityBlock(0, 24, 18.0, "outdoor"),), exertion_log_sd=0.0
        )
        series = OzoneSeries.constant(season, 80.0)
        person = generate_population(1, DemographicsConfig(age_min=10, age_max=10), seed=3)[0]
        cfg = VariabilityConfig(0.0, 0.0, 0.0, RedrawFrequency.DAILY)
        res = simulate_person(
            person, self.tl(person, season, series, template=template), spec2012, cfg,
            make_person_streams(42, person.id),
        )

        s = spec2012
        c, v = 0.080, 18.0
        x = 0.0
        best = -math.inf
        n = s.beta1 + s.beta2 * (person.age - s.age_mean) + s.beta8 * (person.bmi - s.bmi_mean)
        for _ in range(24):
            decay = math.exp(-s.beta5 * 60.0)
            x = x * decay + (c / s.beta5) * v**s.beta6 * (1.0 - decay)
            x_eff = max(0.0, x - s.beta9)
            m = n / (1.0 + s.beta4 * math.exp(-s.beta3 * x_eff)) - n / (1.0 + s.beta4)
            best = max(best, m)  # exp(0) * m + 0
        assert res.daily_max[0] == pytest.approx(best, rel=1e-12)

    def test_rejects_non_tiling_timeline(self, spec2012, short_season):
        person = generate_population(1, DemographicsConfig(), seed=1)[0]
        series = OzoneSeries.zeros(short_season)
        tl = self.tl(person, short_season, series)[1:]
        with pytest.raises(ValueError, match="tile"):
            simulate_person(
                person, tl, spec2012, VariabilityConfig(), make_person_streams(42, person.id)
            )


class TestAggregateRisk:
    def res(self, person_id, days):
        return SeasonResult(person_id=person_id, daily_max=np.asarray(days, dtype=float))

    def test_all_zero(self):
        results = [self.res(i, [0.0, 0.0]) for i in range(10)]
        est = aggregate_risk(results, RiskQuery(threshold=10.0, min_days=1))
        assert est == RiskEstimate(0.0, 0, 10)

    def test_one_in_four(self):
        results = [
            self.res(0, [0.0, 3.0]),
            self.res(1, [9.9, 1.0]),
            self.res(2, [10.1, 0.0]),
            self.res(3, [-2.0, 0.0]),
        ]
        est = aggregate_risk(results, RiskQuery(threshold=10.0, min_days=1))
        assert est.percent_of_population == 25.0
        assert est.n_exceeding == 1

    def test_threshold_inclusive_and_min_days(self):
        results = [self.res(0, [10.0, 10.0, 1.0]), self.res(1, [10.0, 1.0, 1.0])]
        assert aggregate_risk(results, RiskQuery(10.0, 2)).n_exceeding == 1
        assert aggregate_risk(results, RiskQuery(10.0, 1)).n_exceeding == 2

    def test_widening_threshold_never_increases(self):
        rng = np.random.default_rng(5)
        results = [self.res(i, rng.normal(5, 4, size=30)) for i in range(200)]
        r10 = aggregate_risk(results, RiskQuery(10.0, 1))
        r15 = aggregate_risk(results, RiskQuery(15.0, 1))
        assert r15.n_exceeding <= r10.n_exceeding

    def test_empty_rejected(self):
        with pytest.raises(ValueError):
            aggregate_risk([], RiskQuery())

    def test_query_validation(self):
        with pytest.raises(ValueError):
            RiskQuery(threshold=0.0)
        with pytest.raises(ValueError):
            RiskQuery(min_days=0)

    def test_exceedance_days(self):
        assert exceedance_days(self.res(0, [10.0, 9.9, 11.0]), 10.0) == 2


class TestRunSimulation:
    def test_persons_differ(self, spec2012, short_season):
        cfg = make_run_config(zero_spec(spec2012), short_season, n=2, bounds=(2, 2, 2))
        results = run_simulation(cfg)
        assert len(results) == 2
        assert not np.array_equal(results[0].daily_max, results[1].daily_max)

    def test_thread_counts_bit_identical(self, spec2013, short_season, tmp_path):
        series = synthetic_series(short_season, seed=1)
        path = tmp_path / "oz.csv"
        write_ozone_csv(series, path)
        cfg = make_run_config(spec2013, short_season, n=150, redraw=RedrawFrequency.HOURLY,
                              zero_ozone=False, ozone_file=str(path), seed=9)
        outs = {}
        for threads in (1, 4, 8):
            results = run_simulation(cfg, threads=threads)
            rec_path = tmp_path / f"p{threads}.jsonl"
            write_person_records(results, cfg.risk, rec_path)
            outs[threads] = rec_path.read_bytes()
            if threads > 1:
                assert outs[threads] == outs[1]

    def test_results_sorted_by_person_id(self, spec2012, short_season):
        cfg = make_run_config(zero_spec(spec2012), short_season, n=50)
        results = run_simulation(cfg)
        assert [r.person_id for r in results] == list(range(50))

    def test_chunked_equals_scalar_reference(self, spec2013, short_season, tmp_path):
        series = synthetic_series(short_season, seed=21)
        path = tmp_path / "oz.csv"
        write_ozone_csv(series, path)
        loaded = load_ozone_series(path, short_season)
        cfg = make_run_config(spec2013, short_season, n=8, redraw=RedrawFrequency.HOURLY,
                              zero_ozone=False, ozone_file=str(path), seed=77)
        chunked = run_simulation(cfg)
        persons = cfg.population.generate(cfg.seed)
        for p, got in zip(persons, chunked):
            tl = generate_timeline(p, cfg.population.template, short_season, loaded, cfg.seed)
            ref = simulate_person(p, tl, spec2013, cfg.variability, make_person_streams(cfg.seed, p.id))
            np.testing.assert_allclose(got.daily_max, ref.daily_max, rtol=1e-12, atol=1e-12)

    def test_zero_ozone_matches_oracle(self, spec2012, season2017):
        # Monte Carlo vs closed form, 4 binomial SE, daily redraw.
        cfg = make_run_config(
            zero_spec(spec2012), season2017, n=4000,
            bounds=(2.0, math.inf, 2.0), redraw=RedrawFrequency.DAILY, seed=10,
        )
        est = aggregate_risk(run_simulation(cfg), cfg.risk)
        p = zero_ozone_risk(10.0, spec2012.sigma_nu1, math.inf, 275) / 100.0
        se = binomial_se(p, 4000)
        assert abs(est.percent_of_population / 100.0 - p) <= 4 * se

    def test_hourly_at_least_daily_on_synthetic(self, spec2012, short_season, tmp_path):
        series = synthetic_series(short_season, seed=33)
        path = tmp_path / "oz.csv"
        write_ozone_csv(series, path)
        cfg = make_run_config(spec2012, short_season, n=1500, zero_ozone=False,
                              ozone_file=str(path), seed=5)
        prep = prepare(cfg)
        daily, _ = run_prepared(prep, replace(cfg.variability, redraw=RedrawFrequency.DAILY))
        hourly, _ = run_prepared(prep, replace(cfg.variability, redraw=RedrawFrequency.HOURLY))
        rd = aggregate_risk(daily, cfg.risk).percent_of_population
        rh = aggregate_risk(hourly, cfg.risk).percent_of_population
        assert rh >= rd

    def test_negative_scale_diagnostic(self, spec2012, short_season):
        # An age range far above the data's mean age drives the scale negative.
        cfg = make_run_config(zero_spec(spec2012), short_season, n=20)
        cfg = replace(
            cfg,
            population=replace(
                cfg.population, demographics=DemographicsConfig(age_min=80, age_max=90)
            ),
        )
        prep = prepare(cfg)
        _, n_negative = run_prepared(prep, cfg.variability)
        assert n_negative == 20


class TestPersonRecords:
    def test_jsonl_shape(self, spec2012, short_season, tmp_path):
        cfg = make_run_config(zero_spec(spec2012), short_season, n=5, bounds=(2, math.inf, 2))
        results = run_simulation(cfg)
        path = tmp_path / "persons.jsonl"
        write_person_records(results, cfg.risk, path)
        lines = path.read_text().splitlines()
        assert len(lines) == 5
        for i, line in enumerate(lines):
            rec = json.loads(line)
            assert rec["person"] == i
            assert set(rec) == {"person", "exceed_days", "max_dfev1"}
