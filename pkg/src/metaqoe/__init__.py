"""Attention-aware QoE modeling for wireless immersive services.

Closed-form MIMO link KPIs, attention prediction from sparse records,
water-filling rendering allocation, the Meta-Immersion QoE metric, and a
two-level provider contract search, with a CLI driver for the experiments.
"""

__version__ = "1.0.0"

from .types import (  # noqa: F401
    AttentionMatrix,
    ConfigError,
    ContractTerms,
    KpiBounds,
    LinkParams,
    MarketConstants,
    MODULATIONS,
    ModulationScheme,
    ResourceBundle,
    Scenario,
    UnitPrices,
    load_scenario,
)

__all__ = [
    "AttentionMatrix",
    "ConfigError",
    "ContractTerms",
    "KpiBounds",
    "LinkParams",
    "MarketConstants",
    "MODULATIONS",
    "ModulationScheme",
    "ResourceBundle",
    "Scenario",
    "UnitPrices",
    "load_scenario",
    "__version__",
]
