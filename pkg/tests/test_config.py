import pytest

from nshs.config import apply_overrides, parse_config, parse_config_text, serialize_config
from nshs.field import ConfigError, RunConfig

TEXT = """
[physics]
nu = 0.01
mu0 = 0.1
T = 0.05
[numerics]
K = 6   # modes
ny = 96
[io]
seed = 7
"""


def test_parse_sections():
    cfg = parse_config_text(TEXT)
    assert (cfg.nu, cfg.K, cfg.ny, cfg.seed, cfg.T) == (0.01, 6, 96, 7, 0.05)
    assert cfg.gamma == RunConfig().gamma


def test_roundtrip():
    cfg = parse_config_text(TEXT)
    assert parse_config_text(serialize_config(cfg)) == cfg
    assert serialize_config(parse_config_text(serialize_config(cfg))) == serialize_config(cfg)


def test_file_and_overrides(tmp_path):
    p = tmp_path / "run.ini"
    p.write_text(TEXT)
    cfg = parse_config(p, ["numerics.K=3", "nu=0.02"])
    assert cfg.K == 3 and cfg.nu == 0.02
    assert parse_config(None, ["T=0.01"]).T == 0.01


def test_mu0_rejected_with_constraint():
    with pytest.raises(ConfigError, match=r"mu0 in \(0, 1/10\]"):
        parse_config_text("[physics]\nmu0 = 0.2\n")


def test_alpha_rejected_with_constraint():
    with pytest.raises(ConfigError, match=r"alpha in \(0, 1/2\)"):
        parse_config_text("[physics]\nalpha = 0.5\n")


def test_horizon_rejected():
    with pytest.raises(ConfigError, match="T < mu0/"):
        parse_config_text("[physics]\nT = 0.3\n")


@pytest.mark.parametrize("bad", [
    "[physics]\nviscosity = 1\n",
    "[solver]\nK = 3\n",
    "[physics]\nK = 3\n",
    "[numerics]\nK = three\n",
    "[numerics]\nK = 2.5\n",
    "not an ini file",
])
def test_rejections(bad):
    with pytest.raises(ConfigError):
        parse_config_text(bad)


@pytest.mark.parametrize("ov", ["bogus=1", "physics.K=3", "K", "nu=abc"])
def test_override_rejections(ov):
    with pytest.raises(ConfigError):
        apply_overrides({}, [ov])


def test_missing_file(tmp_path):
    with pytest.raises(ConfigError):
        parse_config(tmp_path / "nope.ini")
