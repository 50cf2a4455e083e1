"""ozrisk: population-level ozone lung-function risk microsimulation.

A deterministic parallel Monte Carlo engine for percent-FEV1-decrement risk
under the MSS 2012/2013 exposure-response functions with bounded error
terms, an analytic oracle for zero-ozone exceedance probabilities, and a
sensitivity-sweep harness over truncation bounds and redraw frequency.
"""

__version__ = "0.1.0"

from .er_model import (
    DoseState,
    ERFunctionSpec,
    ERVariant,
    dfev1,
    dose_step,
    effective_dose,
    median_response,
)
from .variability import (
    DrawEpoch,
    EpochNoiseTable,
    ErrorTerm,
    RandomStream,
    RedrawFrequency,
    VariabilityConfig,
    epoch_of,
    person_u,
    sample_truncated,
)
from .population import (
    ActivityBlock,
    ActivityTemplate,
    DemographicsConfig,
    EventRecord,
    OzoneSeries,
    Person,
    Scenario,
    Season,
    generate_population,
    generate_timeline,
    load_ozone_series,
    synthetic_series,
    zero_ozone_scenario,
)
from .engine import (
    RiskEstimate,
    RiskQuery,
    SeasonResult,
    aggregate_risk,
    run_simulation,
    simulate_person,
)
from .oracle import (
    ExceedanceQuery,
    normal_cdf,
    p_at_least_one,
    p_no_decrement,
    zero_ozone_risk,
)
from .config import ConfigError, RunConfig, parse_config
from .sweep import SweepResult, SweepSpec, emit_chart, emit_table, run_sweep
