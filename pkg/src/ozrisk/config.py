"""Run configuration: one human-editable YAML document, strictly validated.

Every knob of a run lives here: the exposure-response coefficients and error
scales, truncation bounds and redraw schedule, the synthetic population and
activity template, the season, the air-quality scenario, the risk query and
the master seed.  Unknown keys are errors (the bound names are the central
knobs; typos must not silently fall back to defaults), and all defaults are
materialized at parse time so the echoed configuration is complete.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from datetime import date, datetime
from pathlib import Path

import yaml

from .engine import RiskQuery
from .er_model import ERFunctionSpec, ERVariant
from .population import (
    ActivityBlock,
    ActivityTemplate,
    DEFAULT_TEMPLATE,
    DemographicsConfig,
    OzoneSeries,
    Person,
    Scenario,
    Season,
    generate_population,
    load_ozone_series,
)
from .variability import RedrawFrequency, VariabilityConfig

__all__ = [
    "ConfigError",
    "PopulationConfig",
    "ScenarioConfig",
    "RunConfig",
    "parse_config",
    "resolve_scenario",
    "config_to_dict",
]

# Error-term standard deviations as estimated for each variant
# (McDonnell et al. 2012, 2013); used when the config omits them.
_SIGMA_DEFAULTS = {
    ERVariant.MSS2012: {"sigma_u": 0.96, "sigma_nu1": 4.13, "sigma_nu2": 0.0},
    ERVariant.MSS2013: {"sigma_u": 1.06, "sigma_nu1": 3.02, "sigma_nu2": 1.47},
}
_MEAN_DEFAULTS = {"age_mean": 23.8, "bmi_mean": 23.1}


class ConfigError(Exception):
    """A configuration document failed validation."""


@dataclass(frozen=True)
class PopulationConfig:
    n: int = 60000
    demographics: DemographicsConfig = field(default_factory=DemographicsConfig)
    template: ActivityTemplate = DEFAULT_TEMPLATE

    def __post_init__(self) -> None:
        if self.n <= 0:
            raise ValueError(f"population size must be > 0, got {self.n}")

    def generate(self, seed: int) -> list[Person]:
        return generate_population(self.n, self.demographics, seed)


@dataclass(frozen=True)
class ScenarioConfig:
    """Where the hourly ozone comes from.  `zero_ozone` switches the ozone
    response off entirely (the baseline mechanism) whatever the series is;
    with no file it implies an all-zero series."""

    zero_ozone: bool = False
    ozone_file: str | None = None

    def __post_init__(self) -> None:
        if not self.zero_ozone and self.ozone_file is None:
            raise ValueError("scenario needs either zero_ozone: true or an ozone_file")


@dataclass(frozen=True)
class RunConfig:
    er: ERFunctionSpec
    variability: VariabilityConfig
    population: PopulationConfig
    season: Season
    scenario: ScenarioConfig
    risk: RiskQuery
    seed: int
    out_dir: str


def resolve_scenario(config: RunConfig) -> Scenario:
    season = config.season
    if config.scenario.ozone_file is not None:
        series = load_ozone_series(config.scenario.ozone_file, season)
    else:
        series = OzoneSeries.zeros(season)
    return Scenario(ozone=series, beta3_zero=config.scenario.zero_ozone)


def _require_mapping(node, context: str) -> dict:
    if node is None:
        return {}
    if not isinstance(node, dict):
        raise ConfigError(f"{context}: expected a mapping, got {type(node).__name__}")
    return node


def _check_keys(node: dict, allowed: set[str], context: str) -> None:
    unknown = set(node) - allowed
    if unknown:
        names = ", ".join(sorted(str(k) for k in unknown))
        raise ConfigError(f"{context}: unknown key(s): {names}")


def _number(node: dict, key: str, context: str, default=None, required: bool = False):
    if key not in node:
        if required:
            raise ConfigError(f"{context}: missing required key '{key}'")
        return default
    v = node[key]
    if isinstance(v, str):
        s = v.strip().lower()
        if s in ("inf", "infinity", "unbounded"):
            return math.inf
        try:
            return float(v)
        except ValueError:
            raise ConfigError(f"{context}.{key}: expected a number, got {v!r}") from None
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise ConfigError(f"{context}.{key}: expected a number, got {v!r}")
    return float(v)


def _integer(node: dict, key: str, context: str, default=None, required: bool = False):
    if key not in node:
        if required:
            raise ConfigError(f"{context}: missing required key '{key}'")
        return default
    v = node[key]
    if isinstance(v, bool) or not isinstance(v, int):
        raise ConfigError(f"{context}.{key}: expected an integer, got {v!r}")
    return v


def _date(node: dict, key: str, context: str, default: date) -> date:
    if key not in node:
        return default
    v = node[key]
    if isinstance(v, datetime):
        return v.date()
    if isinstance(v, date):
        return v
    if isinstance(v, str):
        try:
            return date.fromisoformat(v)
        except ValueError:
            raise ConfigError(f"{context}.{key}: expected an ISO date, got {v!r}") from None
    raise ConfigError(f"{context}.{key}: expected an ISO date, got {v!r}")


def _parse_er(node: dict) -> ERFunctionSpec:
    ctx = "er"
    if not node:
        raise ConfigError("missing required section 'er' (response coefficients)")
    _check_keys(
        node,
        {
            "variant",
            "beta1", "beta2", "beta3", "beta4", "beta5", "beta6", "beta8", "beta9",
            "sigma_u", "sigma_nu1", "sigma_nu2",
            "age_mean", "bmi_mean",
        },
        ctx,
    )
    raw_variant = node.get("variant")
    if raw_variant is None:
        raise ConfigError("er: missing required key 'variant' (MSS2012 or MSS2013)")
    try:
        variant = ERVariant(str(raw_variant))
    except ValueError:
        raise ConfigError(
            f"er.variant: must be MSS2012 or MSS2013, got {raw_variant!r}"
        ) from None

    betas = {}
    for key in ("beta1", "beta2", "beta3", "beta4", "beta5", "beta6", "beta8", "beta9"):
        betas[key] = _number(node, key, ctx, required=True)
    sigmas = dict(_SIGMA_DEFAULTS[variant])
    for key in sigmas:
        if key in node:
            sigmas[key] = _number(node, key, ctx)
    means = dict(_MEAN_DEFAULTS)
    for key in means:
        if key in node:
            means[key] = _number(node, key, ctx)
    try:
        return ERFunctionSpec(variant=variant, **betas, **sigmas, **means)
    except ValueError as exc:
        raise ConfigError(f"er: {exc}") from None


def _parse_variability(node: dict) -> VariabilityConfig:
    ctx = "variability"
    _check_keys(node, {"bound_u", "bound_nu1", "bound_nu2", "redraw"}, ctx)
    redraw = node.get("redraw", "daily")
    try:
        redraw = RedrawFrequency(str(redraw).lower())
    except ValueError:
        raise ConfigError(f"variability.redraw: must be 'daily' or 'hourly', got {redraw!r}") from None
    try:
        return VariabilityConfig(
            bound_u=_number(node, "bound_u", ctx, default=2.0),
            bound_nu1=_number(node, "bound_nu1", ctx, default=2.0),
            bound_nu2=_number(node, "bound_nu2", ctx, default=2.0),
            redraw=redraw,
        )
    except ValueError as exc:
        raise ConfigError(f"variability: {exc}") from None


def _parse_template(node, ctx: str) -> ActivityTemplate:
    if node is None:
        return DEFAULT_TEMPLATE
    if not isinstance(node, list) or not node:
        raise ConfigError(f"{ctx}: expected a non-empty list of activity blocks")
    blocks = []
    for i, raw in enumerate(node):
        bctx = f"{ctx}[{i}]"
        raw = _require_mapping(raw, bctx)
        _check_keys(raw, {"start_hour", "hours", "ventilation", "location"}, bctx)
        try:
            blocks.append(
                ActivityBlock(
                    start_hour=_integer(raw, "start_hour", bctx, required=True),
                    hours=_integer(raw, "hours", bctx, required=True),
                    ventilation=_number(raw, "ventilation", bctx, required=True),
                    location=str(raw.get("location", "")),
                )
            )
        except ValueError as exc:
            raise ConfigError(f"{bctx}: {exc}") from None
    return ActivityTemplate(blocks=tuple(blocks))


def _parse_population(node: dict) -> PopulationConfig:
    ctx = "population"
    _check_keys(
        node,
        {
            "n", "age_min", "age_max",
            "bmi_median_at_min_age", "bmi_median_per_year", "bmi_log_sd",
            "indoor_factor", "exertion_log_sd", "template",
        },
        ctx,
    )
    try:
        demo = DemographicsConfig(
            age_min=_integer(node, "age_min", ctx, default=5),
            age_max=_integer(node, "age_max", ctx, default=18),
            bmi_median_at_min_age=_number(node, "bmi_median_at_min_age", ctx, default=15.5),
            bmi_median_per_year=_number(node, "bmi_median_per_year", ctx, default=0.45),
            bmi_log_sd=_number(node, "bmi_log_sd", ctx, default=0.15),
        )
        template = _parse_template(node.get("template"), f"{ctx}.template")
        template = ActivityTemplate(
            blocks=template.blocks,
            indoor_factor=_number(node, "indoor_factor", ctx, default=template.indoor_factor),
            exertion_log_sd=_number(node, "exertion_log_sd", ctx, default=template.exertion_log_sd),
        )
        return PopulationConfig(
            n=_integer(node, "n", ctx, default=60000),
            demographics=demo,
            template=template,
        )
    except ValueError as exc:
        raise ConfigError(f"{ctx}: {exc}") from None


def _parse_scenario(node: dict, config_dir: Path) -> ScenarioConfig:
    ctx = "scenario"
    _check_keys(node, {"zero_ozone", "ozone_file"}, ctx)
    zero = node.get("zero_ozone", False)
    if not isinstance(zero, bool):
        raise ConfigError(f"{ctx}.zero_ozone: expected true/false, got {zero!r}")
    ozone_file = node.get("ozone_file")
    if ozone_file is not None:
        if not isinstance(ozone_file, str):
            raise ConfigError(f"{ctx}.ozone_file: expected a path string, got {ozone_file!r}")
        p = Path(ozone_file)
        if not p.is_absolute():
            p = config_dir / p
        ozone_file = str(p)
    try:
        return ScenarioConfig(zero_ozone=zero, ozone_file=ozone_file)
    except ValueError as exc:
        raise ConfigError(f"{ctx}: {exc}") from None


def parse_config(path) -> RunConfig:
    """Parse and validate a run configuration document.

    Raises ConfigError with the offending section/field named; YAML syntax
    errors surface with their own line/column diagnostics.
    """
    path = Path(path)
    try:
        with open(path) as fh:
            doc = yaml.safe_load(fh)
    except FileNotFoundError:
        raise ConfigError(f"config file not found: {path}") from None
    except yaml.YAMLError as exc:
        raise ConfigError(f"{path}: not valid YAML: {exc}") from None
    doc = _require_mapping(doc, str(path))
    _check_keys(
        doc,
        {"er", "variability", "population", "season", "scenario", "risk", "seed", "output"},
        str(path),
    )

    er = _parse_er(_require_mapping(doc.get("er"), "er"))
    variability = _parse_variability(_require_mapping(doc.get("variability"), "variability"))
    population = _parse_population(_require_mapping(doc.get("population"), "population"))

    season_node = _require_mapping(doc.get("season"), "season")
    _check_keys(season_node, {"start", "end"}, "season")
    try:
        season = Season(
            start=_date(season_node, "start", "season", default=date(2017, 3, 1)),
            end=_date(season_node, "end", "season", default=date(2017, 11, 30)),
        )
    except ValueError as exc:
        raise ConfigError(f"season: {exc}") from None

    if "scenario" not in doc:
        raise ConfigError("missing required section 'scenario'")
    scenario = _parse_scenario(_require_mapping(doc.get("scenario"), "scenario"), path.parent)

    risk_node = _require_mapping(doc.get("risk"), "risk")
    _check_keys(risk_node, {"threshold", "min_days"}, "risk")
    try:
        risk = RiskQuery(
            threshold=_number(risk_node, "threshold", "risk", default=10.0),
            min_days=_integer(risk_node, "min_days", "risk", default=1),
        )
    except ValueError as exc:
        raise ConfigError(f"risk: {exc}") from None

    seed = doc.get("seed", 0)
    if isinstance(seed, bool) or not isinstance(seed, int):
        raise ConfigError(f"seed: expected an integer, got {seed!r}")

    output_node = _require_mapping(doc.get("output"), "output")
    _check_keys(output_node, {"dir"}, "output")
    out_dir = output_node.get("dir", "out")
    if not isinstance(out_dir, str):
        raise ConfigError(f"output.dir: expected a path string, got {out_dir!r}")

    return RunConfig(
        er=er,
        variability=variability,
        population=population,
        season=season,
        scenario=scenario,
        risk=risk,
        seed=seed,
        out_dir=out_dir,
    )


def _num_or_inf(v: float):
    return "inf" if math.isinf(v) else v


def config_to_dict(config: RunConfig) -> dict:
    """Echo form of a config: every field explicit, JSON/YAML-safe values.

    Together with the seed it carries, this is sufficient to reproduce a
    run's outputs byte for byte.
    """
    er = config.er
    pop = config.population
    return {
        "er": {
            "variant": er.variant.value,
            "beta1": er.beta1, "beta2": er.beta2, "beta3": er.beta3, "beta4": er.beta4,
            "beta5": er.beta5, "beta6": er.beta6, "beta8": er.beta8, "beta9": er.beta9,
            "sigma_u": er.sigma_u, "sigma_nu1": er.sigma_nu1, "sigma_nu2": er.sigma_nu2,
            "age_mean": er.age_mean, "bmi_mean": er.bmi_mean,
        },
        "variability": {
            "bound_u": _num_or_inf(config.variability.bound_u),
            "bound_nu1": _num_or_inf(config.variability.bound_nu1),
            "bound_nu2": _num_or_inf(config.variability.bound_nu2),
            "redraw": config.variability.redraw.value,
        },
        "population": {
            "n": pop.n,
            "age_min": pop.demographics.age_min,
            "age_max": pop.demographics.age_max,
            "bmi_median_at_min_age": pop.demographics.bmi_median_at_min_age,
            "bmi_median_per_year": pop.demographics.bmi_median_per_year,
            "bmi_log_sd": pop.demographics.bmi_log_sd,
            "indoor_factor": pop.template.indoor_factor,
            "exertion_log_sd": pop.template.exertion_log_sd,
            "template": [
                {
                    "start_hour": b.start_hour,
                    "hours": b.hours,
                    "ventilation": b.ventilation,
                    "location": b.location,
                }
                for b in pop.template.blocks
            ],
        },
        "season": {
            "start": config.season.start.isoformat(),
            "end": config.season.end.isoformat(),
        },
        "scenario": {
            "zero_ozone": config.scenario.zero_ozone,
            "ozone_file": config.scenario.ozone_file,
        },
        "risk": {
            "threshold": config.risk.threshold,
            "min_days": config.risk.min_days,
        },
        "seed": config.seed,
        "output": {"dir": config.out_dir},
    }
