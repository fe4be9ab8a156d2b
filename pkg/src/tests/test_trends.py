# -*- coding: utf-8 -*-
"""趋势实验（耗时较长，设置 MPBENCH_RUN_SLOW=1 时运行）

计数类结论是确定的；χ 的趋势依赖计时，只检查方向。
"""
import math
from typing import Any, Dict, List

import numpy as np
import pytest
from scipy.spatial.distance import pdist

from lib.collision import make_scenario
from lib.experiments import ResultRow, run_sweep, summarize, trend, validate_config
from lib.planners import RadialStrategy, resolve_strategy, rrt_star

pytestmark = pytest.mark.slow


def test_projection_heuristic_rescues_thin_strip():
    config = validate_config({
        "name": "strip",
        "planner": "lazy-sprm",
        "scenario": "strip",
        "scenario_params": {"length": 10.0, "w2": 1e-3},
        "axis": "n",
        "values": [2000],
        "series": {"key": "strategy", "values": ["radial", "radial+h"]},
        "seeds": [0, 1, 2, 3, 4],
    })
    summary = {rec["series"]: rec for rec in summarize(run_sweep(config, workers=1, progress=False), "n", "strategy")}
    assert summary["radial"]["success_rate"] <= 0.2
    assert summary["radial+h"]["success_rate"] >= 0.8


def test_chi_grows_with_roadmap_size():
    config = validate_config({
        "name": "chi-growth",
        "planner": "sprm",
        "scenario": "hypercube",
        "scenario_params": {"d": 4, "mu": 0.25},
        "strategy": {"kind": "radial", "known_free": True},
        "axis": "n",
        "values": [500, 2000, 8000],
        "seeds": [0, 1, 2],
    })
    rows = run_sweep(config, workers=1, progress=False)
    summary = summarize(rows, "n")
    # 每个节点的平均邻居数随 ln n 增长
    degrees = [rec["lp_median"] / rec["x"] for rec in summary]
    assert degrees == sorted(degrees)
    assert trend(summary, "chi") > 0


def test_chi_falls_as_collision_checks_get_costlier():
    config = validate_config({
        "name": "segments",
        "planner": "rrt-star",
        "scenario": "segments",
        "scenario_params": {"m": 10},
        "n": 1500,
        "axis": "m",
        "values": [10, 200, 1600],
        "seeds": [0, 1, 2],
    })
    summary = summarize(run_sweep(config, workers=1, progress=False), "m")
    assert trend(summary, "chi") < 0


# ============================================================================
# 维度扫描
# ============================================================================

DIMENSIONS = [2, 4, 6, 8, 10, 12]


def _dimension_summary(strategy: Dict[str, Any]):
    config = validate_config({
        "name": "dimension",
        "planner": "sprm",
        "scenario": "hypercube",
        "scenario_params": {"d": 2, "mu": 0.0},
        "strategy": strategy,
        "n": 5000,
        "axis": "d",
        "values": DIMENSIONS,
        "seeds": [0, 1, 2],
    })
    return summarize(run_sweep(config, workers=1, progress=False), "d")


def test_radial_chi_rises_then_flattens_with_dimension():
    chi = [rec["chi_median"] for rec in _dimension_summary({"kind": "radial"})]
    peak = max(range(len(chi)), key=lambda i: chi[i])
    rise = chi[peak] - chi[0]
    assert rise > 0
    assert chi[-1] - chi[-2] < 0.25 * rise


def test_knn_chi_grows_with_dimension():
    summary = _dimension_summary({"kind": "knn"})
    assert trend(summary, "chi") > 0.8


def test_radial_degree_fraction_grows_with_dimension():
    n = 5000
    rng = np.random.default_rng(0)
    fractions = []
    for d in DIMENSIONS:
        scenario = make_scenario("freespace", {"d": d})
        radius = resolve_strategy(RadialStrategy(), scenario.space, n).radius
        points = rng.random((n, d))
        # 无障碍时 R-NN 平均度数 / (n - 1) 等于距离不超过 r_n 的点对比例
        fractions.append(float(np.mean(pdist(points) <= radius)))
    assert fractions == sorted(fractions)
    assert fractions[0] < 0.01 < fractions[-1]


# ============================================================================
# 分辨率与 RRT* 失败迭代
# ============================================================================

def test_resolution_halves_checks_in_local_plans():
    config = validate_config({
        "name": "resolution",
        "planner": "rrt-star",
        "scenario": "hypercube",
        "scenario_params": {"d": 3, "mu": 0.25, "inflate_with_resolution": True},
        "n": 2000,
        "axis": "res_fraction",
        "values": [0.01, 0.02, 0.04],
        "seeds": [0, 1, 2, 3, 4],
    })
    summary = summarize(run_sweep(config, workers=1, progress=False), "res_fraction")
    checks = [rec["cd_in_lp_median"] for rec in summary]
    for finer, coarser in zip(checks[:-1], checks[1:]):
        assert finer / coarser == pytest.approx(2.0, rel=0.25)
    assert trend(summary, "chi") > 0


def test_rrt_star_unsuccessful_fraction_grows_with_dimension():
    iterations = 1500
    fractions = []
    for d in (2, 4, 8):
        scenario = make_scenario("hypercube", {"d": d, "mu": 0.5})
        runs = [rrt_star(scenario, iterations, RadialStrategy(), seed=seed) for seed in (0, 1, 2)]
        fractions.append(float(np.median([r.ledger.unsuccessful / iterations for r in runs])))
    assert fractions == sorted(fractions)
    assert fractions[0] < fractions[-1]


@pytest.mark.parametrize("d", [4, 8, 12])
def test_rrt_star_freespace_extends_every_iteration(d: int):
    scenario = make_scenario("freespace", {"d": d})
    result = rrt_star(scenario, 2000, RadialStrategy(), seed=0)
    assert result.ledger.unsuccessful == 0
    assert result.roadmap_stats["n_free"] == 2001


# ============================================================================
# 启发式耗时与规划质量
# ============================================================================

def _time_to_threshold(rows: List[ResultRow], threshold: float) -> Dict[int, float]:
    """每个种子第一次达到代价阈值时的原语耗时，始终未达到记为 inf"""
    reached: Dict[int, float] = {}
    for row in sorted(rows, key=lambda r: r.n_free):
        if row.seed in reached:
            continue
        if row.cost is not None and row.cost <= threshold:
            reached[row.seed] = float(row.t_nn_ns + row.t_cd_ns)
    return {seed: reached.get(seed, math.inf) for seed in {row.seed for row in rows}}


def test_heuristic_reaches_cost_threshold_before_knn():
    seeds = [0, 1, 2, 3, 4]
    config = validate_config({
        "name": "strip-cost-time",
        "planner": "lazy-sprm",
        "scenario": "strip",
        "scenario_params": {"length": 10.0, "w2": 1e-3},
        "axis": "n",
        "values": [250, 500, 1000, 2000],
        "series": {"key": "strategy", "values": ["radial+h", "knn"]},
        "seeds": seeds,
    })
    rows = run_sweep(config, workers=1, progress=False)
    threshold = 1.1 * 10.0
    heuristic = _time_to_threshold([r for r in rows if r.strategy == "radial+h"], threshold)
    knn = _time_to_threshold([r for r in rows if r.strategy == "knn"], threshold)
    assert math.isfinite(float(np.median(list(heuristic.values()))))
    assert np.median(list(heuristic.values())) < np.median(list(knn.values()))


def test_sprm_cost_near_optimum_around_box():
    config = validate_config({
        "name": "optimality",
        "planner": "sprm",
        "scenario": "hypercube",
        "scenario_params": {"d": 2, "mu": 0.25},
        "axis": "n",
        "values": [4000],
        "seeds": list(range(50)),
    })
    rows = run_sweep(config, workers=1, progress=False)
    # 绕过 [0.25, 0.75]² 的最短路经过盒子的一个角点
    optimum = 2.0 * math.hypot(0.25, 0.75)
    near = sum(1 for row in rows if row.cost is not None and row.cost <= 1.05 * optimum)
    assert near >= 45


def test_sprm_cost_near_diagonal_in_freespace():
    config = validate_config({
        "name": "optimality-free",
        "planner": "sprm",
        "scenario": "freespace",
        "scenario_params": {"d": 2},
        "axis": "n",
        "values": [4000],
        "seeds": [0, 1, 2, 3, 4],
    })
    for row in run_sweep(config, workers=1, progress=False):
        assert row.success
        assert row.cost <= 1.1 * math.sqrt(2.0)
