"""Bounded error-term sampling and redraw scheduling.

The error terms U, nu1 and nu2 are mean-zero normals truncated by
discard-and-redraw at a configurable number of standard deviations.  U is
drawn once per person; nu1/nu2 are redrawn once per simulated day or once
per clock hour.

Reproducibility: every (person, term) pair owns a counter-based Philox
stream derived from the master seed, so the draws a person consumes are
independent of worker scheduling and of how many redraws other persons'
rejection loops needed.  Rebuilding a stream from the same
(master_seed, person_index, term) triple replays the same sequence.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum, IntEnum

import numpy as np

from .er_model import ERFunctionSpec, ERVariant

__all__ = [
    "ErrorTerm",
    "RedrawFrequency",
    "VariabilityConfig",
    "DrawEpoch",
    "RandomStream",
    "PersonStreams",
    "make_person_streams",
    "sample_truncated",
    "epoch_of",
    "epoch_index",
    "person_u",
    "EpochNoiseTable",
]

# Upper bound on total discarded draws inside one sampling call.  Hitting it
# means the configured bound leaves almost no acceptance mass.
REJECTION_CAP = 1_000_000

# First spawn-key element for variability streams, so they can never collide
# with the population/timeline stream namespaces.
_STREAM_SPACE = 0

MINUTES_PER_DAY = 1440
MINUTES_PER_HOUR = 60


class ErrorTerm(IntEnum):
    U = 0
    NU1 = 1
    NU2 = 2


class RedrawFrequency(str, Enum):
    DAILY = "daily"
    HOURLY = "hourly"


@dataclass(frozen=True)
class VariabilityConfig:
    """Truncation bounds (in sd units, may be inf) and redraw schedule.

    A bound of 0 makes that term identically zero; an infinite bound means
    no truncation at all.
    """

    bound_u: float = 2.0
    bound_nu1: float = 2.0
    bound_nu2: float = 2.0
    redraw: RedrawFrequency = RedrawFrequency.DAILY

    def __post_init__(self) -> None:
        if isinstance(self.redraw, str) and not isinstance(self.redraw, RedrawFrequency):
            object.__setattr__(self, "redraw", RedrawFrequency(self.redraw))
        for name in ("bound_u", "bound_nu1", "bound_nu2"):
            b = getattr(self, name)
            if math.isnan(b) or b < 0:
                raise ValueError(f"{name} must be >= 0 (or inf), got {b}")

    def bound_for(self, term: ErrorTerm) -> float:
        return (self.bound_u, self.bound_nu1, self.bound_nu2)[int(term)]


@dataclass(frozen=True)
class DrawEpoch:
    """One redraw slot: a day of the season, plus the clock hour when the
    schedule is hourly (hour is 0 under daily redraw)."""

    day: int
    hour: int = 0


class RandomStream:
    """Counter-based random stream owned by one (person, term) pair.

    The underlying Philox generator is keyed by
    (master_seed, person_index, term); `counter` tracks how many normals
    have been handed out.  Streams are single-owner: never share one
    instance across threads.
    """

    def __init__(self, master_seed: int, person_index: int, term: ErrorTerm):
        self.master_seed = int(master_seed)
        self.person_index = int(person_index)
        self.term = ErrorTerm(term)
        self.counter = 0
        self._gen: np.random.Generator | None = None

    def _generator(self) -> np.random.Generator:
        if self._gen is None:
            ss = np.random.SeedSequence(
                self.master_seed,
                spawn_key=(_STREAM_SPACE, self.person_index, int(self.term)),
            )
            self._gen = np.random.Generator(np.random.Philox(ss))
        return self._gen

    def normals(self, n: int) -> np.ndarray:
        """Next `n` standard normal deviates from this stream."""
        self.counter += int(n)
        return self._generator().standard_normal(n)


@dataclass
class PersonStreams:
    """The three per-person streams used during one season simulation."""

    u: RandomStream
    nu1: RandomStream
    nu2: RandomStream


def make_person_streams(master_seed: int, person_index: int) -> PersonStreams:
    return PersonStreams(
        u=RandomStream(master_seed, person_index, ErrorTerm.U),
        nu1=RandomStream(master_seed, person_index, ErrorTerm.NU1),
        nu2=RandomStream(master_seed, person_index, ErrorTerm.NU2),
    )


def sample_truncated(stream: RandomStream, sigma: float, bound_sd: float, size: int | None = None):
    """Draw from Normal(0, sigma^2) conditioned on |draw| <= bound_sd * sigma.

    Truncation is by rejection: draws outside the bound are discarded and
    redrawn from the same stream.  With `size=None` a single float is
    returned; otherwise a vector of `size` values, where slot k keeps
    redrawing until it holds an accepted value.

    `bound_sd == 0` or `sigma == 0` yields exact zeros and consumes no
    draws.  More than `REJECTION_CAP` total discards in one call raises,
    since that signals a bound so tight the configuration is unusable.
    """
    if sigma < 0:
        raise ValueError(f"sigma must be >= 0, got {sigma}")
    if math.isnan(bound_sd) or bound_sd < 0:
        raise ValueError(f"bound_sd must be >= 0 (or inf), got {bound_sd}")
    n = 1 if size is None else int(size)
    if n < 0:
        raise ValueError(f"size must be >= 0, got {size}")

    if sigma == 0.0 or bound_sd == 0.0:
        out = np.zeros(n)
    else:
        out = stream.normals(n)
        if not math.isinf(bound_sd):
            bad = np.abs(out) > bound_sd
            discarded = 0
            while bad.any():
                k = int(bad.sum())
                discarded += k
                if discarded > REJECTION_CAP:
                    raise RuntimeError(
                        f"rejection sampling discarded more than {REJECTION_CAP} draws "
                        f"(sigma={sigma}, bound_sd={bound_sd}); the bound leaves too "
                        "little acceptance mass - configuration error"
                    )
                out[bad] = stream.normals(k)
                bad = np.abs(out) > bound_sd
        out = sigma * out

    if size is None:
        return float(out[0])
    return out


def epoch_of(event_start: float, redraw: RedrawFrequency, n_days: int) -> DrawEpoch:
    """Map an event start time (minutes since season start) to its redraw epoch.

    Events straddling an hour boundary use their start hour's draw.
    """
    if not 0 <= event_start < n_days * MINUTES_PER_DAY:
        raise ValueError(
            f"event start {event_start} min is outside the {n_days}-day season"
        )
    day = int(event_start // MINUTES_PER_DAY)
    if redraw is RedrawFrequency.DAILY:
        return DrawEpoch(day=day, hour=0)
    hour = int((event_start % MINUTES_PER_DAY) // MINUTES_PER_HOUR)
    return DrawEpoch(day=day, hour=hour)


def epoch_index(epoch: DrawEpoch, redraw: RedrawFrequency) -> int:
    """Flatten an epoch to a season-wide ordinal (day, or day*24 + hour)."""
    if redraw is RedrawFrequency.DAILY:
        return epoch.day
    return epoch.day * 24 + epoch.hour


def person_u(stream: RandomStream, spec: ERFunctionSpec, config: VariabilityConfig) -> float:
    """The one truncated draw of U a person gets for the whole season.

    Determinism comes from stream identity: rebuilding the stream for the
    same (master_seed, person, U) triple reproduces the same value.
    """
    return sample_truncated(stream, spec.sigma_u, config.bound_u)


class EpochNoiseTable:
    """Per-person (nu1, nu2) draws for every epoch the season's events touch.

    Draws are generated once at construction, in ascending epoch order, from
    the person's nu1/nu2 streams; lookups are pure.  Only epochs actually
    touched by events consume draws.  Under MSS2012 the nu2 component is
    identically zero and its stream is never consumed.
    """

    def __init__(self, epoch_indices: np.ndarray, nu1: np.ndarray, nu2: np.ndarray):
        self.epoch_indices = epoch_indices
        self.nu1 = nu1
        self.nu2 = nu2

    @classmethod
    def build(
        cls,
        nu1_stream: RandomStream,
        nu2_stream: RandomStream,
        spec: ERFunctionSpec,
        config: VariabilityConfig,
        epoch_indices: np.ndarray,
    ) -> "EpochNoiseTable":
        epoch_indices = np.asarray(epoch_indices, dtype=np.int64)
        if epoch_indices.size and (np.diff(epoch_indices) <= 0).any():
            raise ValueError("epoch_indices must be strictly increasing")
        k = epoch_indices.size
        nu1 = sample_truncated(nu1_stream, spec.sigma_nu1, config.bound_nu1, size=k)
        if spec.variant is ERVariant.MSS2012:
            nu2 = np.zeros(k)
        else:
            nu2 = sample_truncated(nu2_stream, spec.sigma_nu2, config.bound_nu2, size=k)
        return cls(epoch_indices, nu1, nu2)

    def epoch_noise(self, epoch: DrawEpoch, redraw: RedrawFrequency) -> tuple[float, float]:
        """(nu1, nu2) for the given epoch; the same epoch always returns the
        same pair."""
        idx = epoch_index(epoch, redraw)
        pos = int(np.searchsorted(self.epoch_indices, idx))
        if pos >= self.epoch_indices.size or self.epoch_indices[pos] != idx:
            raise KeyError(f"epoch {epoch} was not touched by any event in this timeline")
        return float(self.nu1[pos]), float(self.nu2[pos])
