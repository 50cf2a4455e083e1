"""Synthetic population, activity timelines and ambient ozone ingestion.

These are deliberately simple stand-ins for the proprietary census,
activity-diary and air-quality inputs a regulatory exposure model consumes:
ages uniform over a configured range, BMI lognormal around an age-dependent
median, one repeating 24-hour activity template per run, and a single indoor
attenuation factor.  Absolute risk numbers produced on top of them are
therefore synthetic-scenario results, not reproductions of any agency run;
only structure and qualitative behavior carry over.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from datetime import date, datetime, timedelta

import numpy as np

from .variability import MINUTES_PER_DAY, RedrawFrequency

__all__ = [
    "Season",
    "Person",
    "EventRecord",
    "ActivityBlock",
    "ActivityTemplate",
    "DemographicsConfig",
    "OzoneSeries",
    "Scenario",
    "EventGrid",
    "generate_population",
    "exertion_multiplier",
    "generate_timeline",
    "build_event_grid",
    "load_ozone_series",
    "write_ozone_csv",
    "synthetic_series",
    "zero_ozone_scenario",
    "DEFAULT_TEMPLATE",
]

# Spawn-key namespaces; must stay disjoint from variability's stream space.
_POPULATION_SPACE = 1
_EXERTION_SPACE = 2
_OZONE_SPACE = 3


@dataclass(frozen=True)
class Season:
    """A simulated ozone season: an inclusive calendar date range."""

    start: date
    end: date

    def __post_init__(self) -> None:
        if self.end < self.start:
            raise ValueError(f"season end {self.end} precedes start {self.start}")

    @property
    def n_days(self) -> int:
        return (self.end - self.start).days + 1

    @property
    def n_hours(self) -> int:
        return self.n_days * 24

    @property
    def n_minutes(self) -> int:
        return self.n_days * MINUTES_PER_DAY


@dataclass
class Person:
    """One simulated individual.  `u` is filled in by the variability layer
    when a season is simulated."""

    id: int
    age: int
    bmi: float
    u: float | None = None


@dataclass(frozen=True)
class EventRecord:
    """A fixed-concentration, fixed-ventilation interval of 1-60 minutes."""

    start: int  # minutes since season start
    duration: int  # minutes
    concentration: float  # ppm
    ventilation: float  # L/min/m^2

    def __post_init__(self) -> None:
        if not 1 <= self.duration <= 60:
            raise ValueError(f"event duration must be in [1, 60] minutes, got {self.duration}")
        if self.concentration < 0:
            raise ValueError(f"event concentration must be >= 0, got {self.concentration}")
        if self.ventilation < 0:
            raise ValueError(f"event ventilation must be >= 0, got {self.ventilation}")


@dataclass(frozen=True)
class ActivityBlock:
    """One block of the 24-hour activity cycle."""

    start_hour: int
    hours: int
    ventilation: float  # L/min/m^2 at nominal exertion
    location: str  # "indoor" | "outdoor"

    def __post_init__(self) -> None:
        if not 0 <= self.start_hour < 24:
            raise ValueError(f"start_hour must be in [0, 24), got {self.start_hour}")
        if self.hours < 1:
            raise ValueError(f"block length must be >= 1 hour, got {self.hours}")
        if self.ventilation < 0:
            raise ValueError(f"ventilation must be >= 0, got {self.ventilation}")
        if self.location not in ("indoor", "outdoor"):
            raise ValueError(f"location must be 'indoor' or 'outdoor', got {self.location!r}")


@dataclass(frozen=True)
class ActivityTemplate:
    """A 24-hour cycle of activity blocks, repeated every season day.

    `indoor_factor` scales ambient ozone for indoor blocks (outdoor blocks
    see factor 1.0).  `exertion_log_sd` is the log-sd of the per-person
    lognormal ventilation multiplier, the minimal stand-in for
    person-to-person activity variation.
    """

    blocks: tuple[ActivityBlock, ...]
    indoor_factor: float = 0.3
    exertion_log_sd: float = 0.15

    def __post_init__(self) -> None:
        if not 0 <= self.indoor_factor <= 1:
            raise ValueError(f"indoor_factor must be in [0, 1], got {self.indoor_factor}")
        if self.exertion_log_sd < 0:
            raise ValueError(f"exertion_log_sd must be >= 0, got {self.exertion_log_sd}")
        blocks = tuple(sorted(self.blocks, key=lambda b: b.start_hour))
        object.__setattr__(self, "blocks", blocks)
        hour = 0
        for b in blocks:
            if b.start_hour != hour:
                raise ValueError(
                    f"activity template must cover 24h contiguously; "
                    f"expected a block starting at hour {hour}, got {b.start_hour}"
                )
            hour += b.hours
        if hour != 24:
            raise ValueError(f"activity template covers {hour}h, must cover exactly 24h")


# Weekday-like cycle for a school-age child: sleep, school indoors, a recess
# and an afternoon outdoor play window that overlaps the usual ozone peak.
DEFAULT_TEMPLATE = ActivityTemplate(
    blocks=(
        ActivityBlock(0, 7, 5.0, "indoor"),  # sleep
        ActivityBlock(7, 1, 8.0, "indoor"),  # morning routine
        ActivityBlock(8, 1, 13.0, "outdoor"),  # walk to school
        ActivityBlock(9, 3, 7.0, "indoor"),  # class
        ActivityBlock(12, 1, 20.0, "outdoor"),  # recess
        ActivityBlock(13, 2, 7.0, "indoor"),  # class
        ActivityBlock(15, 3, 24.0, "outdoor"),  # sports / play
        ActivityBlock(18, 1, 13.0, "outdoor"),  # walk home
        ActivityBlock(19, 2, 7.0, "indoor"),  # homework, dinner
        ActivityBlock(21, 3, 5.0, "indoor"),  # wind down / sleep
    )
)


@dataclass(frozen=True)
class DemographicsConfig:
    """Age range and the age-conditional lognormal BMI model."""

    age_min: int = 5
    age_max: int = 18
    bmi_median_at_min_age: float = 15.5
    bmi_median_per_year: float = 0.45
    bmi_log_sd: float = 0.15

    def __post_init__(self) -> None:
        if self.age_max < self.age_min:
            raise ValueError(f"empty age range [{self.age_min}, {self.age_max}]")
        if self.bmi_median_at_min_age <= 0:
            raise ValueError("bmi_median_at_min_age must be > 0")
        if self.bmi_log_sd < 0:
            raise ValueError("bmi_log_sd must be >= 0")

    def bmi_median(self, age) -> float:
        return self.bmi_median_at_min_age + self.bmi_median_per_year * (age - self.age_min)


def generate_population(n: int, demographics: DemographicsConfig, seed: int) -> list[Person]:
    """Generate `n` persons with uniform integer ages and lognormal BMI.

    Fully determined by (demographics, seed); persons get ids 0..n-1.
    """
    if n <= 0:
        raise ValueError(f"population size must be > 0, got {n}")
    ss = np.random.SeedSequence(seed, spawn_key=(_POPULATION_SPACE,))
    rng = np.random.Generator(np.random.Philox(ss))
    ages = rng.integers(demographics.age_min, demographics.age_max + 1, size=n)
    bmi = demographics.bmi_median(ages) * np.exp(rng.normal(0.0, demographics.bmi_log_sd, size=n))
    return [Person(id=i, age=int(ages[i]), bmi=float(bmi[i])) for i in range(n)]


def exertion_multiplier(seed: int, person_id: int, log_sd: float) -> float:
    """Per-person lognormal ventilation multiplier (median 1), deterministic
    in (seed, person_id)."""
    if log_sd == 0.0:
        return 1.0
    ss = np.random.SeedSequence(seed, spawn_key=(_EXERTION_SPACE, int(person_id)))
    rng = np.random.Generator(np.random.Philox(ss))
    return float(math.exp(log_sd * rng.standard_normal()))


@dataclass(frozen=True)
class OzoneSeries:
    """Hourly ambient ozone concentrations (ppb) for one season."""

    season: Season
    ppb: np.ndarray

    def __post_init__(self) -> None:
        ppb = np.asarray(self.ppb, dtype=float)
        object.__setattr__(self, "ppb", ppb)
        if ppb.shape != (self.season.n_hours,):
            raise ValueError(
                f"ozone series must have one value per season hour "
                f"({self.season.n_hours}), got {ppb.shape}"
            )
        if (ppb < 0).any():
            raise ValueError("ozone series contains negative concentrations")

    @classmethod
    def zeros(cls, season: Season) -> "OzoneSeries":
        return cls(season, np.zeros(season.n_hours))

    @classmethod
    def constant(cls, season: Season, ppb: float) -> "OzoneSeries":
        return cls(season, np.full(season.n_hours, float(ppb)))


@dataclass(frozen=True)
class Scenario:
    """An air-quality scenario: the hourly series, plus the switch that cuts
    the ozone-response link entirely (the zero-ozone baseline mechanism)."""

    ozone: OzoneSeries
    beta3_zero: bool = False


def zero_ozone_scenario(season: Season) -> Scenario:
    """The no-ozone-effect baseline: response coefficient forced to zero, so
    decrements can only come from the noise terms, whatever the series says."""
    return Scenario(ozone=OzoneSeries.zeros(season), beta3_zero=True)


@dataclass(frozen=True)
class EventGrid:
    """Compact array form of the season event sequence shared by everyone on
    the same template: per event, its start/duration, day and hour, ambient
    concentration after the microenvironment factor (ppm), and the template
    ventilation before the per-person multiplier."""

    start: np.ndarray
    duration: np.ndarray
    conc_ppm: np.ndarray
    vent_base: np.ndarray
    day: np.ndarray
    hour: np.ndarray
    n_days: int

    @property
    def n_events(self) -> int:
        return self.start.size

    def epoch_ids(self, redraw: RedrawFrequency) -> np.ndarray:
        if redraw is RedrawFrequency.DAILY:
            return self.day
        return self.day * 24 + self.hour


def build_event_grid(template: ActivityTemplate, season: Season, ozone: OzoneSeries) -> EventGrid:
    """Expand the daily template over the season into hour-long events.

    Every template block becomes one 60-minute event per block hour; ambient
    ppb is scaled by the block's microenvironment factor and converted to
    ppm.  The grid tiles the season exactly.
    """
    if ozone.season != season:
        raise ValueError("ozone series is for a different season")
    hours_per_day = 24
    factors = np.empty(hours_per_day)
    vents = np.empty(hours_per_day)
    for block in template.blocks:
        f = 1.0 if block.location == "outdoor" else template.indoor_factor
        factors[block.start_hour : block.start_hour + block.hours] = f
        vents[block.start_hour : block.start_hour + block.hours] = block.ventilation

    n_days = season.n_days
    day = np.repeat(np.arange(n_days, dtype=np.int64), hours_per_day)
    hour = np.tile(np.arange(hours_per_day, dtype=np.int64), n_days)
    start = (day * MINUTES_PER_DAY + hour * 60).astype(np.int64)
    duration = np.full(start.size, 60, dtype=np.int64)
    conc_ppm = ozone.ppb * np.tile(factors, n_days) / 1000.0
    vent_base = np.tile(vents, n_days)
    return EventGrid(start, duration, conc_ppm, vent_base, day, hour, n_days)


def generate_timeline(
    person: Person,
    template: ActivityTemplate,
    season: Season,
    ozone: OzoneSeries,
    seed: int,
) -> list[EventRecord]:
    """A person's season-covering event sequence.

    Events come from the shared grid; the person's deterministic exertion
    multiplier (drawn from `seed` and the person id) scales every event's
    ventilation.
    """
    grid = build_event_grid(template, season, ozone)
    mult = exertion_multiplier(seed, person.id, template.exertion_log_sd)
    return [
        EventRecord(
            start=int(grid.start[e]),
            duration=int(grid.duration[e]),
            concentration=float(grid.conc_ppm[e]),
            ventilation=float(grid.vent_base[e] * mult),
        )
        for e in range(grid.n_events)
    ]


def _season_timestamps(season: Season):
    t0 = datetime.combine(season.start, datetime.min.time())
    for h in range(season.n_hours):
        yield t0 + timedelta(hours=h)


def write_ozone_csv(series: OzoneSeries, path) -> None:
    """Write the documented hourly CSV: header `timestamp,ppb`, one row per
    season hour, ISO-8601 local timestamps."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["timestamp", "ppb"])
        for ts, v in zip(_season_timestamps(series.season), series.ppb):
            writer.writerow([ts.isoformat(), f"{v:.3f}"])


def load_ozone_series(path, season: Season) -> OzoneSeries:
    """Read and validate an hourly ozone CSV against the season.

    Raises ValueError naming the offending line for malformed rows, negative
    values, misaligned timestamps or a wrong row count.
    """
    values = np.empty(season.n_hours)
    expected = _season_timestamps(season)
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or [h.strip() for h in header] != ["timestamp", "ppb"]:
            raise ValueError(f"{path}: line 1: expected header 'timestamp,ppb', got {header}")
        count = 0
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != 2:
                raise ValueError(f"{path}: line {lineno}: expected 2 fields, got {len(row)}")
            if count >= season.n_hours:
                count += 1
                continue
            try:
                ts = datetime.fromisoformat(row[0].strip())
            except ValueError as exc:
                raise ValueError(f"{path}: line {lineno}: bad timestamp {row[0]!r}: {exc}") from None
            want = next(expected)
            if ts != want:
                raise ValueError(
                    f"{path}: line {lineno}: timestamp {ts.isoformat()} does not match "
                    f"the expected season hour {want.isoformat()}"
                )
            try:
                v = float(row[1])
            except ValueError:
                raise ValueError(f"{path}: line {lineno}: bad concentration {row[1]!r}") from None
            if not math.isfinite(v) or v < 0:
                raise ValueError(f"{path}: line {lineno}: concentration must be finite and >= 0, got {v}")
            values[count] = v
            count += 1
    if count != season.n_hours:
        raise ValueError(
            f"{path}: expected {season.n_hours} hourly rows for the season, found {count}"
        )
    return OzoneSeries(season, values)


def synthetic_series(
    season: Season,
    seed: int,
    peak_ppb: float = 75.0,
    base_frac: float = 0.25,
    episode_rho: float = 0.6,
    episode_sd: float = 0.35,
) -> OzoneSeries:
    """A synthetic season of hourly ozone with realistic structure.

    Seasonal envelope peaking mid-season, a diurnal cycle peaking mid
    afternoon, and an AR(1) day-to-day episode multiplier, scaled so that
    the best afternoon hours of peak-season episodes sit near `peak_ppb`.
    Deterministic in (season, seed).
    """
    if peak_ppb < 0:
        raise ValueError(f"peak_ppb must be >= 0, got {peak_ppb}")
    n_days = season.n_days
    ss = np.random.SeedSequence(seed, spawn_key=(_OZONE_SPACE,))
    rng = np.random.Generator(np.random.Philox(ss))

    days = np.arange(n_days)
    mid = (n_days - 1) / 2.0
    seasonal = base_frac + (1.0 - base_frac) * np.exp(-0.5 * ((days - mid) / (n_days / 4.0)) ** 2)

    hours = np.arange(24)
    # Night floor, morning rise, 15:00 photochemical peak, evening decline.
    diurnal = 0.3 + 0.7 * np.exp(-0.5 * ((hours - 15.0) / 3.5) ** 2)

    eps = rng.normal(0.0, episode_sd, size=n_days)
    ar = np.empty(n_days)
    ar[0] = eps[0]
    for d in range(1, n_days):
        ar[d] = episode_rho * ar[d - 1] + eps[d]
    episode = np.exp(ar - (episode_sd**2) / (2 * (1 - episode_rho**2)))

    daily_scale = peak_ppb * seasonal * episode
    ppb = np.repeat(daily_scale, 24) * np.tile(diurnal, n_days)
    return OzoneSeries(season, np.maximum(ppb, 0.0))
