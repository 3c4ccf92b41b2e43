import json

import pytest

from hdldebug.cli import build_parser, resolve_config
from hdldebug.config import Config, ConfigError, config_from_dict, load_config


def test_defaults():
    c = Config()
    assert (c.lam, c.k, c.stage1_n, c.thoughts_l, c.temperature, c.transport) == (0.5, 5, 50, 5, 0.7, "replay")


def test_file_then_flags(tmp_path):
    p = tmp_path / "c.json"
    p.write_text(json.dumps({"lambda": 0.3, "k": 4, "thoughts_l": 3}))
    args = build_parser().parse_args(["--config", str(p), "search", "--index", "i", "--buggy", "b", "-k", "2"])
    cfg = resolve_config(args)
    assert (cfg.lam, cfg.k, cfg.thoughts_l) == (0.3, 2, 3)


def test_explicit_k_widens_pool():
    args = build_parser().parse_args(["search", "--index", "i", "--buggy", "b", "-k", "80"])
    cfg = resolve_config(args)
    assert cfg.k == 80 and cfg.stage1_n == 80


@pytest.mark.parametrize(
    "data",
    [{"lam": 0.2}, {"unknown": 1}, {"k": "5"}, {"lambda": 2.0}, {"k": 60}, {"transport": "carrier-pigeon"}, []],
)
def test_strict_validation(data):
    with pytest.raises(ConfigError):
        config_from_dict(data)


def test_roundtrip_json(tmp_path):
    cfg = Config(lam=0.25, k=3)
    p = tmp_path / "c.json"
    p.write_text(json.dumps(cfg.to_json_dict()))
    assert load_config(p) == cfg


def test_unreadable(tmp_path):
    with pytest.raises(ConfigError):
        load_config(tmp_path / "missing.json")
