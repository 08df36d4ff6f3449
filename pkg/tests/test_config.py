import math

import numpy as np
import pytest

from stefan_etc import config as config_mod
from stefan_etc.diagnostics import default_epsilon
from stefan_etc.errors import ConfigError

GOOD = """
# zinc run
material_preset = zinc
s0 = 0.05          # meters
s_r = 0.30
c1 = 3.2e-3
c2 = 5e-3
delta1 = 10
delta2 = 0.3
"""


def test_parse_comments_and_values():
    cfg = config_mod.loads(GOOD)
    assert cfg.params.k == 116.0
    assert cfg.ic.s0 == 0.05
    assert cfg.gains.delta1 == 10.0
    assert cfg.settings.N == 200
    assert cfg.t_final is None
    assert cfg.ic.qc0 == 0.0


def test_unknown_key_is_error():
    with pytest.raises(ConfigError, match="unknown key"):
        config_mod.loads(GOOD + "\nwibble = 3\n")


def test_duplicate_key_is_error():
    with pytest.raises(ConfigError, match="duplicate"):
        config_mod.loads(GOOD + "\ns0 = 0.06\n")


def test_malformed_line_is_error():
    with pytest.raises(ConfigError, match="key = value"):
        config_mod.loads("s0 0.05\n")


def test_unparseable_number_is_error():
    with pytest.raises(ConfigError, match="cannot parse"):
        config_mod.loads(GOOD + "\nqc0 = banana\n")


def test_missing_required_keys_listed():
    with pytest.raises(ConfigError, match="missing required"):
        config_mod.loads("s0 = 0.05\n")


def test_unknown_preset_is_error():
    with pytest.raises(ConfigError, match="material_preset"):
        config_mod.loads(GOOD.replace("zinc", "unobtainium"))


def test_explicit_values_override_preset():
    cfg = config_mod.loads(GOOD + "\nk = 200.0\n")
    assert cfg.params.k == 200.0
    assert cfg.params.alpha == pytest.approx(4.5322e-5)


def test_invalid_assumptions_are_collected():
    bad = GOOD.replace("s_r = 0.30", "s_r = 0.04").replace(
        "delta2 = 0.3", "delta2 = 1.5")
    with pytest.raises(ConfigError) as err:
        config_mod.loads(bad)
    message = str(err.value)
    assert "Assumption 3" in message
    assert "gain positivity" in message


def test_epsilon_defaults_to_interval_midpoint():
    cfg = config_mod.loads(GOOD)
    assert cfg.epsilon == pytest.approx(
        default_epsilon(cfg.params.alpha, cfg.params.beta, cfg.gains.c1))


def test_epsilon_validity_enforced_at_load():
    cfg = config_mod.loads(GOOD)
    hi = 2.0 * math.sqrt(cfg.params.alpha * cfg.gains.c1) / cfg.params.beta
    with pytest.raises(ConfigError, match="epsilon"):
        config_mod.loads(GOOD + f"\nepsilon = {hi * 1.01!r}\n")
    ok = config_mod.loads(GOOD + f"\nepsilon = {hi * 0.5!r}\n")
    assert ok.epsilon == pytest.approx(hi * 0.5)


def test_flat_profile_requires_zero_amplitude():
    base = GOOD + "\nT0_profile = flat\n"
    with pytest.raises(ConfigError, match="flat"):
        config_mod.loads(base)


def test_flat_profile_needs_matching_geometry():
    text = """
material_preset = nondim
s0 = 0.5
s_r = 0.5
T0_profile = flat
T0_amplitude = 0.0
c1 = 1.0
c2 = 1.6
delta1 = 10
delta2 = 0.3
"""
    cfg = config_mod.loads(text)
    assert np.all(cfg.ic.T0 == cfg.params.T_m)


def test_text_roundtrip_preserves_resolved_values():
    cfg = config_mod.loads(GOOD)
    text = config_mod.to_text(cfg, resolved_dt=cfg.resolved_dt(),
                              resolved_t_final=123.5)
    back = config_mod.loads(text)
    assert back.params == cfg.params
    assert back.gains == cfg.gains
    assert back.settings.N == cfg.settings.N
    assert back.settings.dt == pytest.approx(cfg.resolved_dt(), rel=0)
    assert back.t_final == 123.5
    assert back.epsilon == cfg.epsilon


def test_with_overrides_rebuilds_and_revalidates():
    cfg = config_mod.loads(GOOD)
    other = config_mod.with_overrides(cfg, delta2=0.7, N=100)
    assert other.gains.delta2 == 0.7
    assert other.settings.N == 100
    with pytest.raises(ConfigError):
        config_mod.with_overrides(cfg, delta2=2.0)


def test_resolved_dt_uses_stability_limit():
    cfg = config_mod.loads(GOOD)
    dy = 1.0 / (cfg.settings.N - 1)
    expected = 0.9 * cfg.ic.s0 ** 2 * dy * dy / (2.0 * cfg.params.alpha)
    assert cfg.resolved_dt() == pytest.approx(expected, rel=1e-12)
    explicit = config_mod.loads(GOOD + "\ndt = 1e-4\n")
    assert explicit.resolved_dt() == 1e-4


def test_shipped_configs_load(pytestconfig):
    root = pytestconfig.rootpath
    for name in ("zinc_d03.cfg", "zinc_d07.cfg", "nondim.cfg",
                 "equilibrium.cfg"):
        cfg = config_mod.load(root / "configs" / name)
        assert cfg.settings.N >= 8
