"""lemsim: a deterministic local energy market simulator.

Households with PV and batteries optimize self-consumption against a
time-of-use tariff, then trade their surplus with neighbors through one of
three mechanisms: a continuous double auction run by adaptive-margin (ZIP)
agents, centralized equilibrium-price clearing, or VCG.
"""

from .clearing import (
    ClearingResult,
    LimitOrder,
    LimitOrderSet,
    clear_equilibrium,
    max_welfare_allocation,
    vcg,
)
from .hems import (
    BatterySpec,
    NetLoadProfile,
    SurplusSchedule,
    extract_surplus,
    optimize_self_consumption,
)
from .orderbook import Order, OrderBook, Trade, total_traded
from .profiles import (
    HouseholdProfile,
    ProfileGenParams,
    TariffSchedule,
    TariffSegment,
    default_tariff,
    generate_population,
    tariff_lookup,
)
from .sim import (
    MECHANISMS,
    MetricsReport,
    RunMetrics,
    ScenarioConfig,
    TradeRecord,
    compute_settlement,
    default_battery,
    prepare_day,
    run_day,
    run_period,
    run_scenario,
)
from .traders import (
    MarketEvent,
    ZipAgentState,
    ZipParams,
    make_agents,
    next_activation,
    quote,
    session,
    update_margin,
)

__version__ = "0.1.0"
