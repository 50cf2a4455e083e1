"""Exposure-response math for ozone-driven lung function decrements.

Implements the McDonnell-Stewart-Smith (MSS) family of exposure-response
functions used in regulatory inhalation risk modeling: an exponentially
decaying accumulated dose driven by concentration and ventilation, a dose
threshold below which no median response occurs, a sigmoidal median response
curve, and the assembly of the individual percent FEV1 decrement from the
median response plus inter-/intra-individual error terms.

Two error specifications are supported:

* ``MSS2012`` - decrement = exp(U) * M + nu1
* ``MSS2013`` - decrement = exp(U) * M + nu1 + nu2 * exp(U) * M

where M is the median response, U is a per-person sensitivity effect and
nu1/nu2 are intra-individual noise terms redrawn on a schedule.

All functions are pure and accept either scalars or numpy arrays for the
varying arguments (coefficients always come from an `ERFunctionSpec`).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np

__all__ = [
    "ERVariant",
    "ERFunctionSpec",
    "DoseState",
    "dose_step",
    "effective_dose",
    "median_response",
    "median_scale",
    "dfev1",
]


class ERVariant(str, Enum):
    """Which error-term specification the response function uses."""

    MSS2012 = "MSS2012"
    MSS2013 = "MSS2013"


@dataclass(frozen=True)
class ERFunctionSpec:
    """Coefficients and error-term scales of one exposure-response function.

    The decrement coefficients (`beta1` ... `beta9`) are estimated from
    controlled human exposure data (McDonnell et al. 2012, 2013) and are
    always supplied via configuration, never hard-coded.  There is no
    `beta7`: the published fits skip that slot and nothing here invents a
    role for it.

    Units: `beta5` is a per-minute decay rate, `beta9` is in accumulated
    dose units, `age_mean` in years and `bmi_mean` in kg/m^2.
    """

    variant: ERVariant
    beta1: float
    beta2: float
    beta3: float
    beta4: float
    beta5: float
    beta6: float
    beta8: float
    beta9: float
    sigma_u: float
    sigma_nu1: float
    sigma_nu2: float
    age_mean: float
    bmi_mean: float

    def __post_init__(self) -> None:
        if isinstance(self.variant, str) and not isinstance(self.variant, ERVariant):
            object.__setattr__(self, "variant", ERVariant(self.variant))
        for name in ("sigma_u", "sigma_nu1", "sigma_nu2"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be >= 0, got {getattr(self, name)}")
        if self.beta5 <= 0:
            raise ValueError(f"beta5 must be > 0 for the dose recursion to converge, got {self.beta5}")
        if self.beta9 < 0:
            raise ValueError(f"beta9 must be >= 0, got {self.beta9}")
        if self.variant is ERVariant.MSS2012 and self.sigma_nu2 != 0.0:
            raise ValueError("sigma_nu2 must be 0 under MSS2012 (the nu2 term does not exist there)")
        if self.variant is ERVariant.MSS2013 and self.sigma_nu2 <= 0.0:
            raise ValueError("sigma_nu2 must be > 0 under MSS2013")


@dataclass(frozen=True)
class DoseState:
    """Accumulated ozone dose `x` at `t` minutes since season start."""

    x: float
    t: float

    def __post_init__(self) -> None:
        if self.x < 0:
            raise ValueError(f"accumulated dose must be >= 0, got {self.x}")


def dose_step(state: DoseState, c: float, v: float, dt: float, spec: ERFunctionSpec) -> DoseState:
    """Advance the accumulated dose through one constant-condition event.

    Over an event of `dt` minutes at fixed concentration `c` (ppm) and
    ventilation `v` (L/min per m^2 body surface), the dose decays at rate
    `beta5` while being driven toward the fixed point ``(c / beta5) *
    v**beta6``:

        x(t0 + dt) = x(t0) * exp(-beta5*dt)
                     + (c / beta5) * v**beta6 * (1 - exp(-beta5*dt))

    Args:
        state: dose at the start of the event.
        c: event ozone concentration, ppm, >= 0.
        v: event ventilation rate, L/min/m^2, >= 0.
        dt: event duration in minutes, > 0.

    Returns:
        Dose state at the end of the event.
    """
    for name, val in (("c", c), ("v", v), ("dt", dt)):
        if not math.isfinite(val):
            raise ValueError(f"{name} must be finite, got {val}")
    if dt <= 0:
        raise ValueError(f"dt must be > 0, got {dt}")
    if c < 0:
        raise ValueError(f"concentration must be >= 0, got {c}")
    if v < 0:
        raise ValueError(f"ventilation must be >= 0, got {v}")
    decay = math.exp(-spec.beta5 * dt)
    x = state.x * decay + (c / spec.beta5) * v**spec.beta6 * (1.0 - decay)
    return DoseState(x=x, t=state.t + dt)


def effective_dose(x, spec: ERFunctionSpec):
    """Dose that actually drives the response: max(0, x - beta9).

    `beta9` is the estimated response threshold; the accumulated dose must
    exceed it before the median decrement can leave zero.
    """
    return np.maximum(0.0, x - spec.beta9)


def median_scale(age, bmi, spec: ERFunctionSpec):
    """Person-level scale of the sigmoid: beta1 + beta2*(age - mean) + beta8*(bmi - mean).

    Can come out negative for extreme ages/BMIs; callers that care should
    count those occurrences rather than clamp.
    """
    return spec.beta1 + spec.beta2 * (age - spec.age_mean) + spec.beta8 * (bmi - spec.bmi_mean)


def median_response(x_eff, age, bmi, spec: ERFunctionSpec):
    """Median percent FEV1 decrement at effective dose `x_eff`.

    A sigmoid in the effective dose, anchored so the response is exactly
    zero at zero effective dose:

        M = N / (1 + beta4 * exp(-beta3 * x_eff)) - N / (1 + beta4)

    with N the person-level scale from `median_scale`.  Setting `beta3`
    to zero switches ozone off entirely (M == 0 for any dose), which is
    how zero-ozone baselines are produced.
    """
    n = median_scale(age, bmi, spec)
    return n / (1.0 + spec.beta4 * np.exp(-spec.beta3 * x_eff)) - n / (1.0 + spec.beta4)


def dfev1(m, u, nu1, nu2, spec: ERFunctionSpec):
    """Assemble the individual percent FEV1 decrement from its parts.

    Positive values are decrements (worse lung function); negative values
    (improvements) are passed through unclipped.

    MSS2012: exp(u)*m + nu1; the nu2 argument is ignored there.
    MSS2013: exp(u)*m + nu1 + nu2*exp(u)*m.
    """
    scaled = np.exp(u) * m
    if spec.variant is ERVariant.MSS2012:
        return scaled + nu1
    return scaled + nu1 + nu2 * scaled
