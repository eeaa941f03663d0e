from __future__ import annotations

import pytest

from edgeoffload.config import ConfigError, SimConfig, known_keys, load_config, parse_config_text


def test_empty_text_gives_defaults():
    assert parse_config_text("").snapshot() == SimConfig().snapshot()


def test_comments_and_overrides():
    cfg = parse_config_text("# header\noffload.c_soft = 1.5  # tighter\n\nworkload.name = io\n")
    assert cfg["offload.c_soft"] == 1.5
    assert cfg["workload.name"] == "io"


def test_every_problem_reported_at_once():
    with pytest.raises(ConfigError) as info:
        parse_config_text("nope.key = 1\noffload.c_t = lots\ngateway.mode = sometimes\n")
    problems = info.value.problems
    assert len(problems) == 3
    assert any(p.startswith("nope.key") for p in problems)
    assert any(p.startswith("offload.c_t") for p in problems)
    assert any(p.startswith("gateway.mode") for p in problems)


def test_line_without_equals():
    with pytest.raises(ConfigError, match="line 2"):
        parse_config_text("runner.seed = 1\njust words\n")


def test_cross_field_validation():
    with pytest.raises(ConfigError, match="offload"):
        parse_config_text("offload.c_soft = 5\noffload.c_hard = 2\n")


def test_node_list_parsing():
    cfg = parse_config_text("cluster.edge.nodes = 1.0:2:1, 2.5:3:8\n")
    nodes = cfg.nodes("edge")
    assert [(n.node_id, n.speed_factor, n.max_instances, n.cores) for n in nodes] == [
        ("edge-0", 1.0, 2, 1), ("edge-1", 2.5, 3, 8)]


def test_bad_node_list():
    with pytest.raises(ConfigError, match="cluster.edge.nodes"):
        parse_config_text("cluster.edge.nodes = fast\n")


def test_snapshot_roundtrips_through_text():
    cfg = SimConfig().with_values(**{"runner.deadline_s": 12.5, "sweep.workloads": ("io", "mixed")})
    assert parse_config_text(cfg.to_text()).snapshot() == cfg.snapshot()


def test_split_override():
    cfg = SimConfig().with_split("25")
    assert (cfg["gateway.mode"], cfg["gateway.fixed_pct"]) == ("fixed", 25.0)
    assert SimConfig().with_split("auto")["gateway.mode"] == "auto"


def test_load_config_file_and_overrides(tmp_path):
    path = tmp_path / "sim.conf"
    path.write_text("runner.seed = 7\n")
    cfg = load_config(path, {"runner.drain_s": "5"})
    assert (cfg["runner.seed"], cfg["runner.drain_s"]) == (7, 5.0)


def test_profile_keys_feed_profiles():
    cfg = parse_config_text("profile.io.io_s = 0.25\n")
    assert cfg.profiles()["io"].io_s == 0.25
    assert cfg.profiles()["mixed"].components[2].io_s == 0.25


def test_known_keys_sorted_and_complete():
    keys = known_keys()
    assert keys == sorted(keys)
    assert set(keys) == set(SimConfig().values)
    assert "offload.c_decay" in keys
