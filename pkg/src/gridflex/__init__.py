"""Grid market simulation with cryptocurrency-mining loads and demand-response economics."""

from .analytics import LmpStats, compare, compute_stats, county_table
from .case import Branch, Bus, CaseError, CostCurve, CostSegment, DemandProfile, Generator, GridCase, Renewable, validate_case
from .economics import (
    DrProgram,
    MiningEconomics,
    NoiseSpec,
    annual_profit,
    net_reward,
    price_driven_deployment,
    solve_portfolio,
    threshold_sweep,
    vertex_oracle,
)
from .io import load_case, parse_case, parse_mcase, serialize_case
from .market import PriceRecord, SolverSettings, run_horizon, solve_scuc, solve_sced
from .mining import MiningScenario, capacity_sweep, inject
from .network import NetworkModel, build_network

__version__ = "0.1.0"

__all__ = [
    "Branch", "Bus", "CaseError", "CostCurve", "CostSegment", "DemandProfile", "DrProgram", "Generator",
    "GridCase", "LmpStats", "MiningEconomics", "MiningScenario", "NetworkModel", "NoiseSpec", "PriceRecord",
    "Renewable", "SolverSettings", "annual_profit", "build_network", "capacity_sweep", "compare",
    "compute_stats", "county_table", "inject", "load_case", "net_reward", "parse_case", "parse_mcase",
    "price_driven_deployment", "run_horizon", "serialize_case", "solve_portfolio", "solve_scuc",
    "solve_sced", "threshold_sweep", "validate_case", "vertex_oracle",
]
