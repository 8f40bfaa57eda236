import math

import numpy as np
import pytest

from metaqoe.types import (
    AttentionMatrix,
    ConfigError,
    ContractTerms,
    KpiBounds,
    LinkParams,
    MarketConstants,
    MODULATIONS,
    ResourceBundle,
    UnitPrices,
    db_to_linear,
    linear_to_db,
    parse_quantity,
    validate,
)


def make_link(**overrides) -> LinkParams:
    base = dict(
        antennas_cbs=6,
        antennas_rs=3,
        interference_paths=3,
        distance_m=10.0,
        path_loss_exp=2.0,
        tx_power_down=10.0,
        interference_power_down=db_to_linear(5.0),
        chan_coeff_data=db_to_linear(-1.0),
        chan_coeff_intf=db_to_linear(-3.0),
        tx_power_up=2.0,
        interference_power_up=db_to_linear(5.0),
        chan_coeff_data_up=db_to_linear(-1.0),
        chan_coeff_intf_up=db_to_linear(-3.0),
        bandwidth_hz=10e6,
    )
    base.update(overrides)
    return LinkParams(**base)


class TestQuantities:
    def test_db_round_trip(self):
        assert linear_to_db(db_to_linear(7.3)) == pytest.approx(7.3)

    def test_parse_plain_number(self):
        assert parse_quantity(2.5) == 2.5
        assert parse_quantity("2.5") == 2.5

    def test_parse_db_strings(self):
        assert parse_quantity("5 dBW") == pytest.approx(10 ** 0.5)
        assert parse_quantity("-3dB") == pytest.approx(10 ** -0.3)
        assert parse_quantity("0 dBm") == pytest.approx(1e-3)

    def test_parse_rejects_garbage(self):
        with pytest.raises((ConfigError, ValueError)):
            parse_quantity("five watts")
        with pytest.raises(ConfigError):
            parse_quantity([1.0])

    def test_linear_to_db_requires_positive(self):
        with pytest.raises(ConfigError):
            linear_to_db(0.0)


class TestLinkParams:
    def test_validate_clean(self):
        assert validate(make_link()) == []

    def test_validate_reports_each_violation(self):
        bad = make_link(distance_m=-1.0, chan_coeff_data=0.0)
        errors = validate(bad)
        assert len(errors) == 2

    def test_from_dict_parses_db(self):
        raw = dict(
            antennas_cbs=6,
            antennas_rs=3,
            interference_paths=3,
            distance_m=10.0,
            path_loss_exp=2.0,
            tx_power_down=10.0,
            interference_power_down="5 dBW",
            chan_coeff_data="-1 dB",
            chan_coeff_intf="-3 dB",
            tx_power_up=2.0,
            interference_power_up="5 dBW",
            chan_coeff_data_up="-1 dB",
            chan_coeff_intf_up="-3 dB",
            bandwidth_hz=10e6,
        )
        link = LinkParams.from_dict(raw)
        assert link.interference_power_down == pytest.approx(10 ** 0.5)

    def test_from_dict_rejects_invalid(self):
        raw = {"antennas_cbs": 0}
        with pytest.raises((ConfigError, KeyError)):
            LinkParams.from_dict(raw)


class TestResourceBundle:
    def test_array_round_trip(self):
        b = ResourceBundle(1.0, 2.0, 3.0, 4.0)
        assert ResourceBundle.from_array(b.as_array()) == b

    def test_rejects_negative(self):
        with pytest.raises(ConfigError):
            ResourceBundle(-1.0, 2.0, 3.0, 4.0)


class TestUnitPrices:
    def test_cost_is_quadratic_in_billing_units(self):
        prices = UnitPrices(power_down=3.0, bandwidth=2.0, power_up=4.0, render=5.0)
        bundle = ResourceBundle(
            power_down=2000.0, bandwidth=3e6, power_up=1000.0, render_total=10.0
        )
        # 3*(2 kW)^2 + 2*(3 MHz)^2 + 4*(1 kW)^2 + 5*(10 K)^2
        assert prices.cost(bundle) == pytest.approx(3 * 4 + 2 * 9 + 4 * 1 + 5 * 100)

    def test_rejects_negative_price(self):
        with pytest.raises(ConfigError):
            UnitPrices(-1.0, 1.0, 1.0, 1.0)


class TestModulations:
    def test_catalog_pairs(self):
        pairs = {(m.tau1, m.tau2) for m in MODULATIONS.values()}
        assert pairs == {(0.5, 0.5), (1.0, 0.5), (0.5, 1.0), (1.0, 1.0)}

    def test_unknown_pair_rejected(self):
        from metaqoe.types import ModulationScheme

        with pytest.raises(ConfigError):
            ModulationScheme("bad", 2.0, 2.0)


class TestAttentionMatrix:
    def test_values_are_immutable(self):
        m = AttentionMatrix(np.ones((2, 3)))
        with pytest.raises(ValueError):
            m.values[0, 0] = 2.0

    def test_default_mask_fully_observed(self):
        m = AttentionMatrix(np.ones((2, 3)))
        assert m.observed_fraction == 1.0

    def test_shape_mismatch(self):
        with pytest.raises(ConfigError):
            AttentionMatrix(np.ones((2, 3)), np.ones((3, 2), dtype=bool))

    def test_observed_values_zeroes_hidden(self):
        mask = np.array([[True, False]])
        m = AttentionMatrix(np.array([[3.0, 4.0]]), mask)
        assert m.observed_values().tolist() == [[3.0, 0.0]]


class TestMarketAndContract:
    def test_contract_terms_validation(self):
        with pytest.raises(ConfigError):
            ContractTerms(fixed_fee=-1.0, per_qoe_fee=0.0)
        with pytest.raises(ConfigError):
            ContractTerms(fixed_fee=math.nan, per_qoe_fee=0.0)

    def test_market_rra_domain(self):
        with pytest.raises(ConfigError):
            MarketConstants((1.0,), (1.0,), rra=1.0, inp_utility_floor=0.0)

    def test_market_fee_lengths(self):
        with pytest.raises(ConfigError):
            MarketConstants((1.0, 2.0), (1.0,), rra=0.5, inp_utility_floor=0.0)

    def test_kpi_bounds_ordering(self):
        with pytest.raises(ConfigError):
            KpiBounds(rate_min=5.0, rate_max=5.0)


class TestScenarioLoading:
    def test_missing_file(self, tmp_path):
        from metaqoe.types import load_scenario

        with pytest.raises(ConfigError):
            load_scenario(tmp_path / "nope.json")

    def test_missing_field(self, tmp_path):
        from metaqoe.types import load_scenario

        path = tmp_path / "s.json"
        path.write_text("{}")
        with pytest.raises(ConfigError):
            load_scenario(path)
