# -*- coding: utf-8 -*-
"""实验配置、扫描、结果文件与汇总测试"""
import json
import math
from pathlib import Path
from typing import Any, Dict, List

import pytest

from lib.errors import ConfigError, StructuralError
from lib.experiments import (
    PRESETS,
    RESULT_COLUMNS,
    SCHEMA_LINE,
    ExperimentConfig,
    ResultRow,
    Trial,
    emit_plot_data,
    expand_trials,
    failed_row,
    nearest_rank,
    parse_strategy,
    plan_once,
    plot_path,
    preset,
    read_rows,
    run_sweep,
    run_trial,
    scenario_spec,
    strategy_label,
    summarize,
    summary_path,
    trend,
    validate_config,
    volume_rows,
    write_rows,
)
from lib.planners import KnnStrategy, RadialStrategy
from lib.spaces import se2


def _config(**overrides: Any) -> Dict[str, Any]:
    data: Dict[str, Any] = {
        "name": "small",
        "planner": "sprm",
        "scenario": "freespace",
        "scenario_params": {"d": 2},
        "strategy": {"kind": "knn"},
        "axis": "n",
        "values": [50, 100],
        "seeds": [0, 1],
    }
    data.update(overrides)
    return data


def _row(n: int, seed: int, chi: float, cost: float = 1.5, **extra: Any) -> ResultRow:
    fields = dict(planner="sprm", scenario="hypercube", d=2, mu=0.25, m=0, n_free=n, N_sampled=n,
                  seed=seed, strategy="knn", nn_kind="linear", res_fraction=0.01, t_nn_ns=10 * seed,
                  t_cd_ns=100, chi=chi, cost=cost, success=True)
    fields.update(extra)
    return ResultRow(**fields)


# ============================================================================
# 百分位与策略标签
# ============================================================================

@pytest.mark.parametrize("percent,expected", [(0, 15), (5, 15), (30, 20), (40, 20), (50, 35), (80, 40), (100, 50)])
def test_nearest_rank(percent, expected):
    assert nearest_rank([50, 15, 40, 35, 20], percent) == expected


def test_parse_strategy_and_label():
    assert isinstance(parse_strategy("knn"), KnnStrategy)
    assert parse_strategy("radial+h").use_projection_heuristic
    assert parse_strategy({"kind": "radial", "eta": 2.0}).eta == 2.0
    strategy = RadialStrategy()
    assert parse_strategy(strategy) is strategy
    with pytest.raises(ConfigError):
        parse_strategy("nearest")
    with pytest.raises(ConfigError):
        parse_strategy({"kind": "radial", "eta": 0.5})

    assert strategy_label(KnnStrategy()) == "knn"
    assert strategy_label(KnnStrategy(multiplier=2.0)) == "knn*2"
    assert strategy_label(RadialStrategy(eta=1.0)) == "radial"
    assert strategy_label(RadialStrategy(eta=1.5, use_projection_heuristic=True)) == "radial+h@eta=1.5"


# ============================================================================
# 配置校验
# ============================================================================

@pytest.mark.parametrize("overrides", [
    {"planner": "rrt-star"},
    {"axis": "mu", "values": [0.25]},
    {"axis": "N", "values": [100]},
    {"values": []},
    {"values": [1]},
    {"seeds": []},
    {"color": "red"},
    {"planner": "prm"},
    {"series": {"key": "n", "values": [1]}},
    {"series": {"key": "strategy", "values": ["radial", "nearest"]}},
    {"series": {"key": "nn_kind", "values": ["kdtree"]}},
    {"scenario": "hypercube", "scenario_params": {"d": 2, "mu": 0.25}, "series": {"key": "mu", "values": [1.5]}},
    {"scenario": "strip", "scenario_params": {}, "axis": "d", "values": [2, 3]},
    {"scenario_params": {"d": 2, "step": 0.01}, "axis": "res_fraction", "values": [0.01]},
])
def test_invalid_configs(overrides):
    with pytest.raises(ConfigError):
        validate_config(_config(**overrides))


def test_validate_config_from_text_and_file(tmp_path: Path):
    config = validate_config(json.dumps(_config()))
    assert isinstance(config, ExperimentConfig)
    assert isinstance(config.strategy, KnnStrategy)
    path = tmp_path / "sweep.json"
    path.write_text(json.dumps(_config(seeds=[3])), encoding="utf-8")
    assert validate_config(path).seeds == [3]
    with pytest.raises(ConfigError):
        validate_config("{not json")
    with pytest.raises(ConfigError):
        validate_config(tmp_path / "missing.json")


def test_expand_trials_order():
    config = validate_config(_config(series={"key": "strategy", "values": ["knn", "radial"]}))
    trials = expand_trials(config)
    assert len(trials) == 8
    assert trials[0] == Trial(0, "knn", 50, 0)
    assert trials[1] == Trial(1, "knn", 50, 1)
    assert trials[2] == Trial(2, "knn", 100, 0)
    assert trials[4].series_value == "radial"
    assert [t.index for t in trials] == list(range(8))


# ============================================================================
# 单个试验
# ============================================================================

def test_run_trial_row_columns():
    config = validate_config(_config())
    row = run_trial(config, Trial(0, None, 100, 4))
    assert row.success
    assert (row.planner, row.scenario, row.d, row.n_free, row.seed) == ("sprm", "freespace", 2, 100, 4)
    assert row.strategy == "knn"
    assert row.ap == 1
    assert row.knn == 102
    assert row.chi == pytest.approx(row.t_nn_ns / row.t_cd_ns)
    assert row.cost >= math.sqrt(2.0) * (1 - 2e-6)


def test_run_trial_applies_axis_and_series():
    config = validate_config(_config(
        scenario="hypercube", scenario_params={"d": 2, "mu": 0.25}, axis="d", values=[3], n=60,
        series={"key": "mu", "values": [0.5]}))
    row = run_trial(config, Trial(0, 0.5, 3, 0))
    assert (row.d, row.mu, row.n_free) == (3, 0.5, 60)


def test_run_trial_records_generation_failure():
    config = validate_config(_config(scenario="hypercube", scenario_params={"d": 2, "mu": 0.99, "inflation": 0.1}))
    row = run_trial(config, Trial(0, None, 50, 0))
    assert not row.success
    assert row.cost is None and row.chi is None
    assert row.n_free == 50
    assert row.cd == 0


def test_failed_rows_carry_series_strategy():
    config = validate_config(_config(
        scenario="hypercube", scenario_params={"d": 2, "mu": 0.25}, axis="d", values=[3], n=60,
        series={"key": "strategy", "values": ["radial+h", "knn"]}))
    row = failed_row(config, Trial(0, "radial+h", 3, 0))
    assert (row.strategy, row.d, row.mu, row.n_free) == ("radial+h", 3, 0.25, 60)
    assert not row.success and row.chi is None

    config = validate_config(_config(
        scenario="hypercube", scenario_params={"d": 2, "mu": 0.99, "inflation": 0.1},
        series={"key": "strategy", "values": ["radial", "knn"]}))
    assert run_trial(config, Trial(0, "radial", 50, 0)).strategy == "radial"


def test_run_trial_raises_on_invalid_scenario():
    config = validate_config(_config(scenario="hypercube", scenario_params={"d": 2, "mu": 1.5}))
    with pytest.raises(StructuralError):
        run_trial(config, Trial(0, None, 50, 0))
    with pytest.raises(StructuralError):
        run_sweep(config, workers=1, progress=False)


# ============================================================================
# 扫描
# ============================================================================

def test_sweep_counts_are_deterministic():
    config = validate_config(_config())
    first = run_sweep(config, workers=1, progress=False)
    second = run_sweep(config, workers=1, progress=False)
    assert len(first) == 4
    assert [row.counts() for row in first] == [row.counts() for row in second]
    assert [row.cost for row in first] == [row.cost for row in second]
    assert [(row.n_free, row.seed) for row in first] == [(50, 0), (50, 1), (100, 0), (100, 1)]


def test_parallel_sweep_matches_serial():
    config = validate_config(_config())
    serial = run_sweep(config, workers=1, progress=False)
    parallel = run_sweep(config, workers=2, progress=False)
    assert [row.counts() for row in parallel] == [row.counts() for row in serial]


def test_sweep_writes_results_summary_and_plot(tmp_path: Path):
    out = tmp_path / "results" / "small.csv"
    config = validate_config(_config())
    rows = run_sweep(config, workers=1, output=out, progress=False)

    lines = out.read_text(encoding="utf-8").splitlines()
    assert lines[0] == SCHEMA_LINE
    assert lines[1] == ",".join(RESULT_COLUMNS)
    assert len(lines) == 2 + len(rows)
    assert ",true" in lines[2]
    again = read_rows(out)
    assert [row.counts() for row in again] == [row.counts() for row in rows]

    assert summary_path(out).exists()
    plot = plot_path(out, "chi").read_text(encoding="utf-8").splitlines()
    assert [line.split()[0] for line in plot] == ["50", "100"]


# ============================================================================
# 结果文件与汇总
# ============================================================================

def test_csv_encodes_none_and_bools(tmp_path: Path):
    path = tmp_path / "rows.csv"
    failed = _row(100, 0, chi=2.0, cost=None, success=False, res_fraction=None)
    write_rows([failed], path)
    record = failed.to_csv()
    assert record["cost"] == ""
    assert record["success"] == "false"
    assert record["res_fraction"] == ""
    back = read_rows(path)[0]
    assert back.cost is None and back.success is False and back.res_fraction is None


def test_read_rows_rejects_foreign_header(tmp_path: Path):
    path = tmp_path / "other.csv"
    path.write_text("a,b\n1,2\n", encoding="utf-8")
    with pytest.raises(ConfigError):
        read_rows(path)


def _chi_rows() -> List[ResultRow]:
    rows = []
    for n, base in ((100, 0.0), (200, 10.0)):
        for seed, chi in enumerate((5.0, 1.0, 4.0, 2.0, 3.0)):
            rows.append(_row(n, seed, chi=base + chi))
    return rows


def test_summarize_uses_nearest_rank():
    summary = summarize(_chi_rows(), "n")
    assert [rec["x"] for rec in summary] == [100, 200]
    first = summary[0]
    assert first["trials"] == 5
    assert first["success_rate"] == 1.0
    assert (first["chi_median"], first["chi_p20"], first["chi_p80"]) == (3.0, 1.0, 4.0)
    assert summary[1]["chi_median"] == 13.0
    # t_primitive = t_nn + t_cd，seed 0..4 对应 t_nn 0..40
    assert first["t_primitive_ns_median"] == 120.0


def test_summarize_all_missing_stat_is_none():
    rows = [_row(100, s, chi=1.0, cost=None, success=False) for s in range(3)]
    record = summarize(rows, "n")[0]
    assert record["cost_median"] is None
    assert record["success_rate"] == 0.0


def test_summarize_series_and_errors():
    rows = _chi_rows() + [_row(100, 0, chi=50.0, strategy="radial")]
    summary = summarize(rows, "n", "strategy")
    assert [(rec["series"], rec["x"]) for rec in summary] == [("knn", 100), ("knn", 200), ("radial", 100)]
    with pytest.raises(ConfigError):
        summarize(rows, "width")
    with pytest.raises(ConfigError):
        summarize(rows, "n", "planner")


def test_trend():
    summary = summarize(_chi_rows(), "n")
    assert trend(summary, "chi") == pytest.approx(1.0)
    assert math.isnan(trend(summary[:1], "chi"))


def test_emit_plot_data(tmp_path: Path):
    path = tmp_path / "chi.dat"
    text = emit_plot_data(_chi_rows(), "n", "chi", path)
    assert text == "100 3 1 4\n200 13 11 14\n"
    assert path.read_text(encoding="utf-8") == text

    rows = _chi_rows() + [_row(100, 0, chi=50.0, strategy="radial")]
    blocks = emit_plot_data(rows, "n", "chi", series="strategy").split("\n\n")
    assert blocks[0].startswith("# series=knn\n")
    assert blocks[1] == "# series=radial\n100 50 50 50\n"
    with pytest.raises(ConfigError):
        emit_plot_data([], "n", "chi")
    with pytest.raises(ConfigError):
        emit_plot_data(_chi_rows(), "n", "speed")


# ============================================================================
# 预置、单次规划与体积表
# ============================================================================

@pytest.mark.parametrize("name", sorted(PRESETS))
def test_presets_are_valid(name):
    config = preset(name)
    assert config.name == name
    assert len(expand_trials(config)) >= len(config.values) * len(config.seeds)


def test_unknown_preset():
    with pytest.raises(ConfigError):
        preset("fig99")


def test_scenario_spec():
    assert scenario_spec("strip") == ("strip", {"length": 10.0, "w2": 1e-3})
    assert scenario_spec('{"kind": "hypercube", "params": {"d": 3}}') == ("hypercube", {"d": 3})
    assert scenario_spec(' {"kind": "freespace"} ') == ("freespace", {})
    for bad in ("maze", "{oops", '{"params": {}}', '{"kind": "maze"}'):
        with pytest.raises(ConfigError):
            scenario_spec(bad)


def test_plan_once():
    row = plan_once("lazy-sprm", "hypercube", {"d": 2, "mu": 0.25}, RadialStrategy(eta=2.0), 300, 0)
    assert row.success
    assert row.planner == "lazy-sprm"
    rrt = plan_once("rrt-star", "freespace", {"d": 2}, KnnStrategy(), 80, 1)
    assert rrt.N_sampled == 80
    with pytest.raises(ConfigError):
        plan_once("prm", "freespace", {}, KnnStrategy(), 80, 0)
    with pytest.raises(ConfigError):
        plan_once("sprm", "maze", {}, KnnStrategy(), 80, 0)
    with pytest.raises(ConfigError):
        plan_once("sprm", "freespace", {}, KnnStrategy(), 1, 0)


def test_volume_rows():
    space = se2()
    rows = volume_rows(space, [0.05, 0.1], mc_trials=50_000, seed=1)
    assert [row["r"] for row in rows] == [0.05, 0.1]
    for row in rows:
        assert row["closed"] == pytest.approx(row["numeric"], rel=1e-6)
        assert abs(row["mc"] - row["closed"]) <= 5 * row["mc_stderr"]
    assert volume_rows(space, [0.1])[0]["mc"] is None
