import math
from datetime import date

import pytest

from ozrisk.config import PopulationConfig, RunConfig, ScenarioConfig
from ozrisk.engine import RiskQuery
from ozrisk.er_model import ERFunctionSpec, ERVariant
from ozrisk.population import DemographicsConfig, Season
from ozrisk.variability import RedrawFrequency, VariabilityConfig

# Representative response-curve coefficients for tests.  The sigma values are
# the published MSS estimates; the beta values are the repo's calibrated
# MSS2012 synthetic-scenario set (see configs/epa_default.yaml).
BETAS = dict(
    beta1=9.8, beta2=-0.25, beta3=0.04, beta4=20.0, beta5=0.011, beta6=0.75,
    beta8=0.15, beta9=105.0,
)


@pytest.fixture(scope="session")
def spec2012() -> ERFunctionSpec:
    return ERFunctionSpec(
        variant=ERVariant.MSS2012,
        sigma_u=0.96, sigma_nu1=4.13, sigma_nu2=0.0,
        age_mean=23.8, bmi_mean=23.1,
        **BETAS,
    )


@pytest.fixture(scope="session")
def spec2013() -> ERFunctionSpec:
    return ERFunctionSpec(
        variant=ERVariant.MSS2013,
        sigma_u=1.06, sigma_nu1=3.02, sigma_nu2=1.47,
        age_mean=23.8, bmi_mean=23.1,
        **BETAS,
    )


@pytest.fixture(scope="session")
def season2017() -> Season:
    return Season(start=date(2017, 3, 1), end=date(2017, 11, 30))


@pytest.fixture(scope="session")
def short_season() -> Season:
    return Season(start=date(2017, 6, 1), end=date(2017, 6, 20))


def make_run_config(
    spec: ERFunctionSpec,
    season: Season,
    *,
    n: int = 500,
    bounds: tuple[float, float, float] = (2.0, 2.0, 2.0),
    redraw: RedrawFrequency = RedrawFrequency.DAILY,
    zero_ozone: bool = True,
    ozone_file: str | None = None,
    seed: int = 42,
    threshold: float = 10.0,
    min_days: int = 1,
) -> RunConfig:
    return RunConfig(
        er=spec,
        variability=VariabilityConfig(
            bound_u=bounds[0], bound_nu1=bounds[1], bound_nu2=bounds[2], redraw=redraw
        ),
        population=PopulationConfig(n=n, demographics=DemographicsConfig()),
        season=season,
        scenario=ScenarioConfig(zero_ozone=zero_ozone, ozone_file=ozone_file),
        risk=RiskQuery(threshold=threshold, min_days=min_days),
        seed=seed,
        out_dir="out",
    )


UNBOUNDED = math.inf
