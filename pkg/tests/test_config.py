from fractions import Fraction

import pytest

from divexp.config import (CONTROL_DEFAULTS, GRIDWORLD_DEFAULT, ExperimentConfig, dump_config, load_config,
                           parse_config, save_config)


def test_grid_defaults():
    cfg = load_config_text("")
    assert (cfg.n, cfg.delta, cfg.alpha, cfg.split) == (40, 0.05, 0.3, Fraction(1, 5))
    assert cfg == GRIDWORLD_DEFAULT


def test_control_defaults():
    assert CONTROL_DEFAULTS["mountaincar"].alpha == 0.9
    assert CONTROL_DEFAULTS["acrobot"].alpha == 0.9


def load_config_text(text):
    return parse_config(text)


def test_round_trip(tmp_path):
    cfg = ExperimentConfig(d=7, n=30, r=3, delta=0.1, alpha=0.25, seed=99, domain="acrobot", gamma=0.9)
    path = tmp_path / "c.cfg"
    save_config(cfg, path)
    assert load_config(path) == cfg


def test_comments_and_split():
    cfg = parse_config("# comment\nn = 20  # trailing\nsplit = 1/4,3/4\n")
    assert cfg.n == 20 and cfg.split == Fraction(1, 4)


@pytest.mark.parametrize("text,key", [
    ("delta = 0.6", "delta"),
    ("delta = 0", "delta"),
    ("r = 0", "r"),
    ("n = 3\nr = 5", "n"),
    ("d = 0", "d"),
    ("alpha = 1.5", "alpha"),
    ("domain = pong", "domain"),
    ("split = 1/5,3/5", "split"),
    ("colour = red", "colour"),
    ("n = forty", "n"),
    ("gamma = 0", "gamma"),
])
def test_invalid_values_name_the_key(text, key):
    with pytest.raises(ValueError, match=key):
        parse_config(text)


def test_missing_equals():
    with pytest.raises(ValueError, match="line 1"):
        parse_config("n 40")


def test_digest_ignores_seed():
    a = ExperimentConfig(seed=1)
    assert a.digest() == a.replace(seed=2).digest()
    assert a.digest() != a.replace(n=41).digest()


def test_dump_lists_every_field():
    text = dump_config(GRIDWORLD_DEFAULT)
    assert "split = 1/5,4/5" in text
    assert len(text.strip().splitlines()) == len(GRIDWORLD_DEFAULT.__dataclass_fields__)
