"""Season simulation and population-level risk aggregation.

One person's season is a fold over their event sequence: advance the
accumulated dose through the event, apply the response threshold, evaluate
the median response, add the event epoch's noise draws, and keep the running
maximum decrement per calendar day.  Population risk is the share of persons
with at least `min_days` days whose maximum decrement reached the threshold.

Two implementations of the same fold exist: `simulate_person` walks one
person's explicit event list (the reference path, used by tests and small
runs), while `run_simulation` vectorizes across chunks of persons on the
shared event grid.  They agree to 1e-12 relative (bitwise equality is not
possible because scalar libm and vectorized kernels may differ in the last
ulp).  Each path on its own is fully deterministic: person-keyed random
streams mean results do not depend on chunking order or worker count.
"""

from __future__ import annotations

import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace
from typing import TYPE_CHECKING

import numpy as np

from .er_model import ERFunctionSpec, ERVariant, dfev1, DoseState, dose_step, effective_dose, median_response, median_scale

if TYPE_CHECKING:  # config imports RiskQuery from here; avoid the cycle
    from .config import RunConfig
from .population import EventGrid, EventRecord, Person, build_event_grid, exertion_multiplier
from .variability import (
    MINUTES_PER_DAY,
    EpochNoiseTable,
    PersonStreams,
    VariabilityConfig,
    epoch_index,
    epoch_of,
    make_person_streams,
    person_u,
)

__all__ = [
    "SeasonResult",
    "RiskQuery",
    "RiskEstimate",
    "PreparedRun",
    "simulate_person",
    "prepare",
    "run_prepared",
    "run_simulation",
    "aggregate_risk",
    "exceedance_days",
    "write_person_records",
    "write_summary",
]


@dataclass
class SeasonResult:
    """Per-person output: the maximum decrement reached on each season day."""

    person_id: int
    daily_max: np.ndarray


@dataclass(frozen=True)
class RiskQuery:
    """Decrement threshold (percent FEV1) and how many distinct days must
    reach it for a person to count."""

    threshold: float = 10.0
    min_days: int = 1

    def __post_init__(self) -> None:
        if self.threshold <= 0:
            raise ValueError(f"threshold must be > 0, got {self.threshold}")
        if self.min_days < 1:
            raise ValueError(f"min_days must be >= 1, got {self.min_days}")


@dataclass(frozen=True)
class RiskEstimate:
    percent_of_population: float
    n_exceeding: int
    n_total: int


def exceedance_days(result: SeasonResult, threshold: float) -> int:
    """Number of season days whose maximum decrement reached the threshold."""
    return int((result.daily_max >= threshold).sum())


def aggregate_risk(results: list[SeasonResult], query: RiskQuery) -> RiskEstimate:
    """Share of persons with >= min_days exceedance days."""
    if not results:
        raise ValueError("cannot aggregate an empty result set")
    n_exceeding = sum(
        1 for r in results if exceedance_days(r, query.threshold) >= query.min_days
    )
    n_total = len(results)
    return RiskEstimate(
        percent_of_population=100.0 * n_exceeding / n_total,
        n_exceeding=n_exceeding,
        n_total=n_total,
    )


def _validate_tiling(timeline: list[EventRecord]) -> int:
    """Check the events are time-ordered, non-overlapping and tile whole
    days; returns the number of days covered."""
    if not timeline:
        raise ValueError("empty timeline")
    cursor = 0
    for ev in timeline:
        if ev.start != cursor:
            raise ValueError(
                f"timeline does not tile the season: expected an event at minute "
                f"{cursor}, got one at {ev.start}"
            )
        cursor += ev.duration
    if cursor % MINUTES_PER_DAY != 0:
        raise ValueError(f"timeline covers {cursor} minutes, not a whole number of days")
    return cursor // MINUTES_PER_DAY


def simulate_person(
    person: Person,
    timeline: list[EventRecord],
    spec: ERFunctionSpec,
    var_config: VariabilityConfig,
    streams: PersonStreams,
) -> SeasonResult:
    """Reference season fold for one person over an explicit event list.

    Evaluates the decrement at each event end and keeps per-day maxima.
    The dose carries across days (it decays through the night's events);
    the season starts from zero dose.
    """
    n_days = _validate_tiling(timeline)
    redraw = var_config.redraw
    epochs = sorted(
        {epoch_index(epoch_of(ev.start, redraw, n_days), redraw) for ev in timeline}
    )
    u = person_u(streams.u, spec, var_config)
    person.u = u
    table = EpochNoiseTable.build(
        streams.nu1, streams.nu2, spec, var_config, np.asarray(epochs, dtype=np.int64)
    )

    state = DoseState(x=0.0, t=0.0)
    daily_max = np.full(n_days, -math.inf)
    for ev in timeline:
        state = dose_step(state, ev.concentration, ev.ventilation, ev.duration, spec)
        x_eff = effective_dose(state.x, spec)
        m = median_response(x_eff, person.age, person.bmi, spec)
        nu1, nu2 = table.epoch_noise(epoch_of(ev.start, redraw, n_days), redraw)
        d = dfev1(m, u, nu1, nu2, spec)
        day = ev.start // MINUTES_PER_DAY
        if d > daily_max[day]:
            daily_max[day] = d
    return SeasonResult(person_id=person.id, daily_max=daily_max)


@dataclass
class PreparedRun:
    """Everything about a run that does not depend on bounds or redraw
    frequency, precomputed once so sweeps can share it across cells."""

    spec: ERFunctionSpec
    grid: EventGrid
    master_seed: int
    person_ids: np.ndarray
    ages: np.ndarray
    bmis: np.ndarray
    exertion: np.ndarray

    @property
    def n_persons(self) -> int:
        return self.person_ids.size


def prepare(config: RunConfig) -> PreparedRun:
    """Resolve the scenario and materialize population and event grid."""
    from .config import resolve_scenario

    scenario = resolve_scenario(config)
    spec = config.er
    if scenario.beta3_zero:
        spec = replace(spec, beta3=0.0)
    persons = config.population.generate(config.seed)
    grid = build_event_grid(config.population.template, config.season, scenario.ozone)
    ids = np.array([p.id for p in persons], dtype=np.int64)
    ages = np.array([p.age for p in persons], dtype=float)
    bmis = np.array([p.bmi for p in persons], dtype=float)
    log_sd = config.population.template.exertion_log_sd
    exertion = np.array(
        [exertion_multiplier(config.seed, p.id, log_sd) for p in persons]
    )
    return PreparedRun(
        spec=spec,
        grid=grid,
        master_seed=config.seed,
        person_ids=ids,
        ages=ages,
        bmis=bmis,
        exertion=exertion,
    )


def _auto_chunk(n_epochs: int) -> int:
    # Keep a chunk's noise matrices around ~50 MB so several worker threads
    # fit comfortably in memory.
    return max(256, min(4096, (6 << 20) // max(n_epochs, 1)))


def _simulate_chunk(
    prep: PreparedRun,
    var_config: VariabilityConfig,
    lo: int,
    hi: int,
    decay: np.ndarray,
    c_over_b5: np.ndarray,
    one_minus: np.ndarray,
    epoch_cols: np.ndarray,
    uniq_epochs: np.ndarray,
) -> tuple[np.ndarray, np.ndarray, int]:
    spec = prep.spec
    grid = prep.grid
    m = hi - lo
    mult = prep.exertion[lo:hi]
    n_scale = median_scale(prep.ages[lo:hi], prep.bmis[lo:hi], spec)
    n_negative = int((n_scale < 0).sum())
    base_term = n_scale / (1.0 + spec.beta4)

    k = uniq_epochs.size
    u = np.empty(m)
    nu1 = np.empty((m, k))
    nu2 = np.empty((m, k))
    for j in range(m):
        streams = make_person_streams(prep.master_seed, int(prep.person_ids[lo + j]))
        u[j] = person_u(streams.u, spec, var_config)
        table = EpochNoiseTable.build(streams.nu1, streams.nu2, spec, var_config, uniq_epochs)
        nu1[j] = table.nu1
        nu2[j] = table.nu2
    exp_u = np.exp(u)

    is_2013 = spec.variant is ERVariant.MSS2013
    x = np.zeros(m)
    daily_max = np.full((m, grid.n_days), -np.inf)
    vent = np.empty(m)
    v_pow = np.empty(m)
    gain = np.empty(m)
    x_eff = np.empty(m)
    resp = np.empty(m)
    em = np.empty(m)
    d = np.empty(m)
    scratch = np.empty(m)

    vent_base = grid.vent_base
    day_of = grid.day
    for e in range(grid.n_events):
        # Same operation order as dose_step so both paths agree to ~ulp.
        np.multiply(vent_base[e], mult, out=vent)
        np.power(vent, spec.beta6, out=v_pow)
        np.multiply(c_over_b5[e], v_pow, out=gain)
        np.multiply(gain, one_minus[e], out=gain)
        np.multiply(x, decay[e], out=x)
        np.add(x, gain, out=x)

        np.subtract(x, spec.beta9, out=x_eff)
        np.maximum(x_eff, 0.0, out=x_eff)

        np.multiply(x_eff, -spec.beta3, out=resp)
        np.exp(resp, out=resp)
        np.multiply(resp, spec.beta4, out=resp)
        np.add(resp, 1.0, out=resp)
        np.divide(n_scale, resp, out=resp)
        np.subtract(resp, base_term, out=resp)

        np.multiply(exp_u, resp, out=em)
        col = epoch_cols[e]
        np.add(em, nu1[:, col], out=d)
        if is_2013:
            np.multiply(nu2[:, col], em, out=scratch)
            np.add(d, scratch, out=d)

        day_col = daily_max[:, day_of[e]]
        np.maximum(day_col, d, out=day_col)

    return u, daily_max, n_negative


def run_prepared(
    prep: PreparedRun,
    var_config: VariabilityConfig,
    threads: int = 1,
    chunk_size: int | None = None,
) -> tuple[list[SeasonResult], int]:
    """Simulate every person in the prepared run under the given bounds and
    redraw schedule.

    Returns the per-person results ordered by person id, plus the count of
    persons whose median-response scale came out negative (diagnostic).
    Output is identical for any `threads` value: the chunk partition depends
    only on the configuration, and all randomness is keyed per person.
    """
    grid = prep.grid
    spec = prep.spec
    epoch_ids = grid.epoch_ids(var_config.redraw)
    uniq_epochs, epoch_cols = np.unique(epoch_ids, return_inverse=True)

    # math.exp per event mirrors dose_step's scalar exponential exactly.
    decay = np.array([math.exp(-spec.beta5 * float(dt)) for dt in grid.duration])
    c_over_b5 = grid.conc_ppm / spec.beta5
    one_minus = 1.0 - decay

    n = prep.n_persons
    chunk = chunk_size if chunk_size else _auto_chunk(uniq_epochs.size)
    bounds = [(lo, min(lo + chunk, n)) for lo in range(0, n, chunk)]

    def work(b):
        lo, hi = b
        return _simulate_chunk(
            prep, var_config, lo, hi, decay, c_over_b5, one_minus, epoch_cols, uniq_epochs
        )

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            outputs = list(pool.map(work, bounds))
    else:
        outputs = [work(b) for b in bounds]

    results: list[SeasonResult] = []
    n_negative = 0
    for (lo, hi), (u, daily_max, neg) in zip(bounds, outputs):
        n_negative += neg
        for j in range(hi - lo):
            results.append(
                SeasonResult(person_id=int(prep.person_ids[lo + j]), daily_max=daily_max[j])
            )
    results.sort(key=lambda r: r.person_id)
    return results, n_negative


def run_simulation(
    config: RunConfig, threads: int = 1, chunk_size: int | None = None
) -> list[SeasonResult]:
    """Run a full configured season: one SeasonResult per person, ordered by
    person id, bit-identical for a fixed seed across any worker count."""
    prep = prepare(config)
    results, _ = run_prepared(prep, config.variability, threads=threads, chunk_size=chunk_size)
    return results


def write_person_records(results: list[SeasonResult], query: RiskQuery, path) -> None:
    """Line-delimited per-person records: id, exceedance-day count against
    the query threshold, and the season-maximum decrement."""
    with open(path, "w") as fh:
        for r in sorted(results, key=lambda r: r.person_id):
            rec = {
                "person": int(r.person_id),
                "exceed_days": exceedance_days(r, query.threshold),
                "max_dfev1": float(np.max(r.daily_max)),
            }
            fh.write(json.dumps(rec, sort_keys=True) + "\n")


def write_summary(estimate: RiskEstimate, config_echo: dict, diagnostics: dict, path) -> None:
    summary = {
        "config": config_echo,
        "diagnostics": diagnostics,
        "risk_estimate": {
            "percent_of_population": estimate.percent_of_population,
            "n_exceeding": estimate.n_exceeding,
            "n_total": estimate.n_total,
        },
    }
    with open(path, "w") as fh:
        json.dump(summary, fh, indent=2, sort_keys=True)
        fh.write("\n")
