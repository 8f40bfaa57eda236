"""Shared domain types: link configuration, resource bundles, market constants.

All wireless quantities are stored in linear scale. Config files may supply
dB / dBW values as strings with an explicit unit suffix (e.g. ``"5 dBW"``,
``"-3 dB"``); they are converted at construction time.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

__all__ = [
    "ConfigError",
    "LinkParams",
    "ResourceBundle",
    "UnitPrices",
    "ModulationScheme",
    "MODULATIONS",
    "KpiBounds",
    "AttentionMatrix",
    "ContractTerms",
    "MarketConstants",
    "MiReport",
    "Scenario",
    "db_to_linear",
    "linear_to_db",
    "parse_quantity",
    "validate",
    "load_scenario",
]


class ConfigError(ValueError):
    """Raised for invalid configuration or scenario input."""


def db_to_linear(value_db: float) -> float:
    return 10.0 ** (value_db / 10.0)


def linear_to_db(value: float) -> float:
    if value <= 0:
        raise ConfigError("dB conversion requires a positive linear value")
    return 10.0 * math.log10(value)


def parse_quantity(value) -> float:
    """Parse a config value that is either a linear number or a dB string.

    Accepted string forms: ``"<x> dB"`` and ``"<x> dBW"`` (case-insensitive,
    space optional). Plain numbers are taken as already linear.
    """
    if isinstance(value, (int, float)):
        return float(value)
    if isinstance(value, str):
        text = value.strip().lower()
        for suffix in ("dbw", "dbm", "db"):
            if text.endswith(suffix):
                num = float(text[: -len(suffix)].strip())
                lin = db_to_linear(num)
                if suffix == "dbm":
                    lin *= 1e-3
                return lin
        return float(text)
    raise ConfigError(f"cannot parse quantity: {value!r}")


@dataclass(frozen=True)
class LinkParams:
    """Per-user wireless configuration (stored in linear scale)."""

    antennas_cbs: int
    antennas_rs: int
    interference_paths: int
    distance_m: float
    path_loss_exp: float
    tx_power_down: float
    interference_power_down: float
    chan_coeff_data: float
    chan_coeff_intf: float
    tx_power_up: float
    interference_power_up: float
    chan_coeff_data_up: float
    chan_coeff_intf_up: float
    bandwidth_hz: float = 0.0

    @classmethod
    def from_dict(cls, raw: dict) -> "LinkParams":
        kwargs = {}
        for name in (
            "antennas_cbs",
            "antennas_rs",
            "interference_paths",
        ):
            kwargs[name] = int(raw[name])
        for name in (
            "distance_m",
            "path_loss_exp",
            "tx_power_down",
            "interference_power_down",
            "chan_coeff_data",
            "chan_coeff_intf",
            "tx_power_up",
            "interference_power_up",
            "chan_coeff_data_up",
            "chan_coeff_intf_up",
        ):
            kwargs[name] = parse_quantity(raw[name])
        kwargs["bandwidth_hz"] = parse_quantity(raw.get("bandwidth_hz", 0.0))
        params = cls(**kwargs)
        errors = validate(params)
        if errors:
            raise ConfigError("; ".join(errors))
        return params


def validate(params: LinkParams) -> list[str]:
    """Return the list of violated invariants (empty when valid)."""
    errors = []
    for name in ("antennas_cbs", "antennas_rs", "interference_paths"):
        if getattr(params, name) < 1:
            errors.append(f"{name} must be >=1")
    for name in (
        "distance_m",
        "path_loss_exp",
        "tx_power_down",
        "interference_power_down",
        "chan_coeff_data",
        "chan_coeff_intf",
        "tx_power_up",
        "interference_power_up",
        "chan_coeff_data_up",
        "chan_coeff_intf_up",
    ):
        if not getattr(params, name) > 0:
            errors.append(f"{name} must be >0")
    if params.bandwidth_hz < 0:
        errors.append("bandwidth_hz must be >=0")
    return errors


@dataclass(frozen=True)
class ResourceBundle:
    """Four-dimensional resource vector: down power, bandwidth, up power, rendering."""

    power_down: float
    bandwidth: float
    power_up: float
    render_total: float

    def __post_init__(self):
        for name in ("power_down", "bandwidth", "power_up", "render_total"):
            if getattr(self, name) < 0:
                raise ConfigError(f"{name} must be >=0")

    def as_array(self) -> np.ndarray:
        return np.array(
            [self.power_down, self.bandwidth, self.power_up, self.render_total]
        )

    @classmethod
    def from_array(cls, arr) -> "ResourceBundle":
        return cls(*(float(x) for x in arr))


@dataclass(frozen=True)
class UnitPrices:
    """Per-dimension unit prices; cost is the quadratic form sum(u_i * x_i^2).

    Prices apply to resources expressed in billing units: kW for the two
    transmit powers, MHz for bandwidth, K for rendering capacity.
    """

    power_down: float
    bandwidth: float
    power_up: float
    render: float

    def __post_init__(self):
        for name in ("power_down", "bandwidth", "power_up", "render"):
            if getattr(self, name) < 0:
                raise ConfigError(f"price {name} must be >=0")

    def cost(self, bundle: ResourceBundle) -> float:
        """Quadratic resource cost of a bundle (bundle fields in W/Hz/W/K)."""
        pd_kw = bundle.power_down / 1e3
        b_mhz = bundle.bandwidth / 1e6
        pu_kw = bundle.power_up / 1e3
        return (
            self.power_down * pd_kw**2
            + self.bandwidth * b_mhz**2
            + self.power_up * pu_kw**2
            + self.render * bundle.render_total**2
        )

    @classmethod
    def from_dict(cls, raw: dict) -> "UnitPrices":
        return cls(
            power_down=float(raw["power_down"]),
            bandwidth=float(raw["bandwidth"]),
            power_up=float(raw["power_up"]),
            render=float(raw["render"]),
        )


@dataclass(frozen=True)
class ModulationScheme:
    """Modulation / detection combination with its conditional-BEP parameters."""

    name: str
    tau1: float
    tau2: float

    def __post_init__(self):
        if (self.tau1, self.tau2) not in {(0.5, 0.5), (1.0, 0.5), (0.5, 1.0), (1.0, 1.0)}:
            raise ConfigError(f"unsupported (tau1, tau2) pair: {self.tau1, self.tau2}")


MODULATIONS = {
    "coherent-BFSK": ModulationScheme("coherent-BFSK", 0.5, 0.5),
    "coherent-BPSK": ModulationScheme("coherent-BPSK", 1.0, 0.5),
    "noncoherent-BFSK": ModulationScheme("noncoherent-BFSK", 0.5, 1.0),
    "DPSK": ModulationScheme("DPSK", 1.0, 1.0),
}


@dataclass(frozen=True)
class KpiBounds:
    """Normalization bounds for the rate and the (1 - BEP) factor."""

    rate_min: float
    rate_max: float
    bep_min: float = 1e-8
    bep_max: float = 1e-2

    def __post_init__(self):
        if not self.rate_max > self.rate_min:
            raise ConfigError("rate_max must exceed rate_min")
        if not self.bep_max > self.bep_min:
            raise ConfigError("bep_max must exceed bep_min")

    @classmethod
    def from_dict(cls, raw: dict) -> "KpiBounds":
        return cls(
            rate_min=float(raw["rate_min"]),
            rate_max=float(raw["rate_max"]),
            bep_min=float(raw.get("bep_min", 1e-8)),
            bep_max=float(raw.get("bep_max", 1e-2)),
        )


class AttentionMatrix:
    """User x object attention levels with an observation mask.

    ``values`` holds the levels (or raw scores); entries where ``mask`` is
    False are unobserved and must never be read as ground truth.
    """

    def __init__(self, values, mask=None):
        self.values = np.asarray(values, dtype=float)
        if self.values.ndim != 2:
            raise ConfigError("attention values must be a 2-D matrix")
        if mask is None:
            mask = np.ones(self.values.shape, dtype=bool)
        self.mask = np.asarray(mask, dtype=bool)
        if self.mask.shape != self.values.shape:
            raise ConfigError("mask shape must match values shape")
        self.values.setflags(write=False)
        self.mask.setflags(write=False)

    @property
    def n_users(self) -> int:
        return self.values.shape[0]

    @property
    def n_objects(self) -> int:
        return self.values.shape[1]

    @property
    def observed_fraction(self) -> float:
        return float(self.mask.mean())

    def observed_values(self) -> np.ndarray:
        """Values with unobserved entries zeroed out."""
        return np.where(self.mask, self.values, 0.0)


@dataclass(frozen=True)
class ContractTerms:
    """A contract offer: fixed fee plus per-QoE-unit fee."""

    fixed_fee: float
    per_qoe_fee: float

    def __post_init__(self):
        for name in ("fixed_fee", "per_qoe_fee"):
            v = getattr(self, name)
            if not (math.isfinite(v) and v >= 0):
                raise ConfigError(f"{name} must be finite and >=0")


@dataclass(frozen=True)
class MarketConstants:
    """Market-side constants: per-user fees, risk aversion, provider floor."""

    base_fee_per_user: tuple
    qoe_fee_per_user: tuple
    rra: float
    inp_utility_floor: float

    def __post_init__(self):
        if not (0.0 <= self.rra < 1.0):
            raise ConfigError("rra must lie in [0, 1)")
        if len(self.base_fee_per_user) != len(self.qoe_fee_per_user):
            raise ConfigError("fee sequences must have equal length")

    @property
    def n_users(self) -> int:
        return len(self.base_fee_per_user)

    @classmethod
    def from_dict(cls, raw: dict) -> "MarketConstants":
        return cls(
            base_fee_per_user=tuple(float(x) for x in raw["base_fee_per_user"]),
            qoe_fee_per_user=tuple(float(x) for x in raw["qoe_fee_per_user"]),
            rra=float(raw["rra"]),
            inp_utility_floor=float(raw["inp_utility_floor"]),
        )


@dataclass(frozen=True)
class MiReport:
    """Per-user KPI triple, per-object allocation, and the resulting MI value."""

    rate_bps: float
    bep: float
    per_object_render: tuple
    mi: float
    render_floor: float
    render_total: float
    flags: tuple = ()

    def __post_init__(self):
        if not (0.0 < self.bep <= 0.5):
            raise ConfigError("bep must lie in (0, 0.5]")
        alloc = np.asarray(self.per_object_render)
        if np.any(alloc < self.render_floor - 1e-9):
            raise ConfigError("allocation entries must be >= render floor")
        if alloc.sum() > self.render_total * (1 + 1e-9) + 1e-9:
            raise ConfigError("allocation exceeds render budget")


@dataclass(frozen=True)
class Scenario:
    """A scenario file: per-user links plus shared prices/market/bounds."""

    users: tuple
    prices: UnitPrices
    market: MarketConstants
    bounds: KpiBounds


def load_scenario(path) -> Scenario:
    try:
        with open(path) as fh:
            raw = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read scenario {path}: {exc}") from exc
    try:
        users = tuple(LinkParams.from_dict(u) for u in raw["users"])
        prices = UnitPrices.from_dict(raw["prices"])
        market = MarketConstants.from_dict(raw["market"])
        bounds = KpiBounds.from_dict(raw["bounds"])
    except KeyError as exc:
        raise ConfigError(f"scenario missing field: {exc}") from exc
    if market.n_users != len(users):
        raise ConfigError("market fee sequences must be sized to the user list")
    return Scenario(users=users, prices=prices, market=market, bounds=bounds)
