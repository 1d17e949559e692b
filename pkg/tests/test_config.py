from __future__ import annotations

import math

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from pbe.config import SimConfig, parse_config, parse_config_text
from pbe.errors import ConfigError


def test_minimal_file_fills_defaults(tmp_path):
    p = tmp_path / "a.cfg"
    p.write_text("kernel = sum\nalpha = -0.5\n")
    cfg = parse_config(p)
    assert (cfg.coagulation, cfg.alpha) == ("sum", -0.5)
    assert (cfg.x_min, cfg.R, cfg.T, cfg.theta, cfg.initial) == (1e-3, 100.0, 100.0, 0.5, "exp")


def test_alpha_out_of_range_cites_interval():
    with pytest.raises(ConfigError, match=r"kernel\.alpha.*\(-1, 0\]"):
        parse_config_text("alpha = -1.5")


def test_eoc_sweep_accepted():
    cfg = parse_config_text("mesh.cells = 480\neoc.grids = 30, 60, 120, 240, 480\n")
    assert cfg.n_cells == 480
    assert cfg.eoc_grids == (30, 60, 120, 240, 480)


def test_unknown_key_is_error():
    with pytest.raises(ConfigError, match="unknown configuration key 'mesh.colour'"):
        parse_config_text("mesh.colour = red")


@pytest.mark.parametrize(
    "text, key",
    [
        ("mesh.cells = 1", "mesh.cells"),
        ("mesh.cells = 2.5", "mesh.cells"),
        ("time.theta = 1", "time.theta"),
        ("time.T = -1", "time.T"),
        ("mesh.R = abc", "mesh.R"),
        ("time.dt_mode = fixed", "time.dt"),
        ("time.dt_mode = proportional", "time.dt_per_h"),
        ("initial = table", "initial.table"),
        ("output.times = 200", "output.times"),
        ("kernel.fragmentation = maybe", "kernel.fragmentation"),
    ],
)
def test_domain_violations_name_the_key(text, key):
    with pytest.raises(ConfigError, match=key.replace(".", r"\.")):
        parse_config_text(text)


def test_malformed_line():
    with pytest.raises(ConfigError, match=":2:"):
        parse_config_text("alpha = -0.5\nnot a pair\n")


def test_duplicate_key():
    with pytest.raises(ConfigError, match="duplicate"):
        parse_config_text("alpha = -0.5\nkernel.alpha = -0.2\n")


def test_missing_file(tmp_path):
    with pytest.raises(ConfigError, match="not found"):
        parse_config(tmp_path / "nope.cfg")


def test_comments_and_table_path(tmp_path):
    (tmp_path / "c0.csv").write_text("0,1\n10,0\n")
    p = tmp_path / "a.cfg"
    p.write_text("# initial table\ninitial.kind = table  # relative path\ninitial.table = c0.csv\n")
    cfg = parse_config(p)
    assert cfg.initial_density().integral(0.0, 10.0) == pytest.approx(5.0)


def test_round_trip_default():
    cfg = SimConfig()
    assert parse_config_text(cfg.to_text()) == cfg


configs = st.builds(
    SimConfig,
    x_min=st.sampled_from([0.0, 1e-3]),
    R=st.floats(1.0, 1e3),
    n_cells=st.integers(2, 5000),
    coagulation=st.sampled_from(["none", "constant", "sum", "product"]),
    beta=st.floats(0.0, 10.0),
    alpha=st.floats(-0.999, 0.0),
    selection_exponent=st.one_of(st.none(), st.floats(-2.0, 3.0)),
    fragmentation=st.booleans(),
    T=st.floats(0.0, 1e3),
    theta=st.floats(0.01, 0.99),
    dt_mode=st.just("fixed"),
    dt=st.floats(1e-9, 1.0),
    dt_max=st.one_of(st.just(math.inf), st.floats(1e-6, 1e3)),
    output_times=st.just(()),
    eoc_grids=st.lists(st.integers(2, 1000), max_size=5).map(tuple),
)


@settings(max_examples=150, deadline=None)
@given(configs)
def test_round_trip_property(cfg):
    assert parse_config_text(cfg.to_text()) == cfg
