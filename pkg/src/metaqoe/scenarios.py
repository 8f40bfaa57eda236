"""Built-in three-user scenario and evaluator wiring.

The default scenario mirrors the network table used throughout the
experiments: a shared 6-antenna base station, per-user rendering server
antenna counts, interference powers, channel coefficients, and distances,
plus market constants for the contract study.
"""

from __future__ import annotations

import numpy as np

from . import dataset, mimo
from .contract import ContractScenario, ResourceBox
from .qoe import MiEvaluator
from .types import (
    KpiBounds,
    LinkParams,
    MarketConstants,
    ModulationScheme,
    MODULATIONS,
    ResourceBundle,
    Scenario,
    UnitPrices,
    db_to_linear,
)

__all__ = [
    "table_links",
    "default_scenario",
    "default_box",
    "build_evaluators",
    "build_contract_scenario",
    "RENDER_FLOOR",
    "RENDER_BUDGET_PER_OBJECT",
]

# rendering capacity floor and default per-object budget, in K
RENDER_FLOOR = 15.0
RENDER_BUDGET_PER_OBJECT = 20.0


def table_links(bandwidth_hz: float = 10e6) -> tuple[LinkParams, ...]:
    """The three benchmark users; uplink coefficients mirror the downlink ones."""
    common = dict(
        antennas_cbs=6,
        interference_paths=3,
        path_loss_exp=2.0,
        tx_power_down=10.0,
        tx_power_up=2.0,
        bandwidth_hz=bandwidth_hz,
    )

    def make(m_u, p_intf_dbw, mu_intf_db, mu_db, dist):
        p_intf = db_to_linear(p_intf_dbw)
        mu_intf = db_to_linear(mu_intf_db)
        mu = db_to_linear(mu_db)
        return LinkParams(
            antennas_rs=m_u,
            distance_m=dist,
            interference_power_down=p_intf,
            chan_coeff_data=mu,
            chan_coeff_intf=mu_intf,
            interference_power_up=p_intf,
            chan_coeff_data_up=mu,
            chan_coeff_intf_up=mu_intf,
            **common,
        )

    return (
        make(3, 5.0, -3.0, -1.0, 10.0),
        make(3, 5.0, -1.0, -2.0, 6.0),
        make(7, 1.0, -3.0, -1.0, 10.0),
    )


def default_bounds() -> KpiBounds:
    return KpiBounds(rate_min=10e6, rate_max=42e6, bep_min=1e-8, bep_max=1e-2)


def default_prices() -> UnitPrices:
    # unit prices: rendering 5/K^2, down power 3/kW^2, bandwidth 2/MHz^2, up power 4/kW^2
    return UnitPrices(power_down=3.0, bandwidth=2.0, power_up=4.0, render=5.0)


def default_market(inp_utility_floor: float = 70.0, rra: float = 0.8) -> MarketConstants:
    return MarketConstants(
        base_fee_per_user=(1e6, 1e6, 1e6),
        qoe_fee_per_user=(25e3, 25e3, 25e3),
        rra=rra,
        inp_utility_floor=inp_utility_floor,
    )


def default_scenario(inp_utility_floor: float = 70.0) -> Scenario:
    return Scenario(
        users=table_links(),
        prices=default_prices(),
        market=default_market(inp_utility_floor),
        bounds=default_bounds(),
    )


def default_box(n_objects: int) -> ResourceBox:
    lower = ResourceBundle(
        power_down=10.0,
        bandwidth=1e6,
        power_up=0.2,
        render_total=n_objects * RENDER_FLOOR,
    )
    upper = ResourceBundle(
        power_down=1000.0,
        bandwidth=10e6,
        power_up=10.0,
        render_total=n_objects * RENDER_BUDGET_PER_OBJECT * 1.5,
    )
    return ResourceBox(lower=lower, upper=upper)


def _user_attention(n_objects: int, seed: int) -> tuple[tuple, ...]:
    """Per-user attention vectors drawn from the synthetic corpus ground truth."""
    cfg = dataset.CorpusConfig()
    corpus = dataset.generate_corpus(cfg, seed=seed)
    rng = np.random.default_rng(seed + 1)
    out = []
    for k in range(3):
        objs = rng.choice(cfg.n_objects, size=n_objects, replace=False)
        out.append(tuple(float(v) for v in corpus.ground_truth.values[k, objs]))
    return tuple(out)


def build_evaluators(
    scenario: Scenario,
    attention_vectors=None,
    n_objects: int = 12,
    seed: int = 0,
    mod: ModulationScheme = MODULATIONS["DPSK"],
) -> tuple[MiEvaluator, ...]:
    if attention_vectors is None:
        attention_vectors = _user_attention(n_objects, seed)
    if len(attention_vectors) != len(scenario.users):
        raise ValueError("one attention vector per user required")
    evaluators = []
    for link, attn in zip(scenario.users, attention_vectors):
        zeta_down = mimo.zeta(link.antennas_cbs, link.antennas_rs)
        evaluators.append(
            MiEvaluator(
                link=link,
                bounds=scenario.bounds,
                attention=tuple(attn),
                render_floor=RENDER_FLOOR,
                mod=mod,
                zeta_down=zeta_down,
                zeta_up=zeta_down,
            )
        )
    return tuple(evaluators)


def build_contract_scenario(
    scenario: Scenario, n_objects: int = 12, seed: int = 0
) -> ContractScenario:
    evaluators = build_evaluators(scenario, n_objects=n_objects, seed=seed)
    return ContractScenario(
        evaluators=evaluators,
        prices=scenario.prices,
        market=scenario.market,
        box=default_box(n_objects),
    )
