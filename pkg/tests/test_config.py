import pytest

from wfplab import config as cfgmod
from wfplab.errors import ConfigError


def test_defaults_validate():
    cfg = cfgmod.load()
    assert cfg.scenario == "relax"
    assert cfg.grid().n_x == 128 and cfg.propagator().dt == 1e-3


def test_sections_comments_and_lists(tmp_path):
    p = tmp_path / "run.cfg"
    p.write_text("scenario = steady  # trailing comment\n\n[grid]\nn_x = 64\nn_xi = 64\n"
                 "[potential]\nkind = sinusoidal\nlam = 0.01\nk0 = 1.0\n[relax]\ndirection = 1, 1\n"
                 "steady.backend = semigroup\n")
    cfg = cfgmod.load(str(p))
    assert cfg.scenario == "steady"
    assert cfg["grid.n_x"] == 64
    assert cfg["relax.direction"] == (1.0, 1.0)
    assert cfg["steady.backend"] == "semigroup"
    assert cfg.potential().is_snapped(cfg.grid())


def test_overrides_and_flags_take_precedence(tmp_path):
    p = tmp_path / "run.cfg"
    p.write_text("m = 2\n")
    cfg = cfgmod.load(str(p), ["m=3", "propagator.dt=0.01"], scenario="constants", output_dir="o")
    assert cfg["m"] == 3 and cfg["propagator.dt"] == 0.01
    assert cfg.scenario == "constants" and cfg["output_dir"] == "o"


@pytest.mark.parametrize("text,match", [
    ("bogus = 1\n", r"cfg:1: unknown key 'bogus'"),
    ("m = 1\ngrid.n_x = many\n", r"cfg:2: bad value for 'grid.n_x'"),
    ("m 4\n", r"cfg:1: expected 'key = value'"),
    ("[grid\n", r"cfg:1: malformed section"),
    ("relax.snapshots = maybe\n", r"cfg:1: bad value"),
])
def test_parse_errors_carry_line_numbers(text, match):
    with pytest.raises(ConfigError, match=match):
        cfgmod.parse_text(text, "cfg")


@pytest.mark.parametrize("ov", ["grid.n_x=7", "scenario=fly", "m=-1", "threads=-2", "propagator.dt=0",
                                "grid.x_max=5", "potential.kind=wavy"])
def test_semantic_validation(ov):
    with pytest.raises(ConfigError):
        cfgmod.load(None, [ov])


def test_missing_file():
    with pytest.raises(ConfigError, match="not found"):
        cfgmod.load("/nonexistent/run.cfg")


def test_echo_is_sorted_and_json_friendly():
    echo = cfgmod.RunConfig().echo()
    assert list(echo) == sorted(echo)
    assert echo["relax.direction"] == [1.0, -1.0]
