"""规划器：sPRM*、Lazy-sPRM*、RRT*

三个规划器都由连接策略参数化：
    RadialStrategy  半径 r_n（可选投影半径启发式）
    KnnStrategy     k = ⌈multiplier · k_n⌉

每次运行拥有独立的 PrimitiveLedger，运行严格单线程，计数对 (场景, 规划器, 策略, 种子) 确定。
"""
import math
from collections import deque
from dataclasses import dataclass, field
from typing import Annotated, Any, Dict, List, Literal, NamedTuple, Optional, Tuple, Union

import numpy as np
from pydantic import BaseModel, Field

from .collision import CollisionChecker, Scenario, known_free_measure
from .errors import ConfigError, DomainError
from .ledger import PrimitiveLedger, clock
from .logger_config import setup_logger
from .nn import NnIndex, make_index
from .roadmap import EdgeStatus, Roadmap, free_edges, shortest_path, unblocked_edges
from .service_config import SERVICE_CONFIG
from .spaces import Compound, Point, StateSpace
from .volumes import RadiusParams, connection_radius, effective_radius, knn_count

logger = setup_logger(__name__)

START_ID = 0
GOAL_ID = 1


# ----------------------------------------------------------------------------
# 连接策略
# ----------------------------------------------------------------------------

class RadialStrategy(BaseModel):
    """半径连接"""
    kind: Literal["radial"] = "radial"
    eta: float = Field(default_factory=lambda: SERVICE_CONFIG.eta, ge=1.0, description="调节参数 η")
    mu_free: Optional[float] = Field(None, gt=0.0, description="自由空间测度，缺省取空间总测度")
    known_free: bool = Field(False, description="场景障碍测度已知时用真实自由空间测度")
    use_projection_heuristic: bool = Field(False, description="启用投影半径启发式")


class KnnStrategy(BaseModel):
    """k 近邻连接"""
    kind: Literal["knn"] = "knn"
    multiplier: float = Field(1.0, gt=0.0, description="k_n 的倍数")


ConnectionStrategy = Annotated[Union[RadialStrategy, KnnStrategy], Field(discriminator="kind")]


class Resolution(NamedTuple):
    radius: Optional[float]
    k: Optional[int]
    projected: bool = False


def _qualifies_for_projection(space: StateSpace) -> bool:
    return (
        isinstance(space, Compound)
        and len(space.children) == 2
        and space.p == 1.0
        and space.children[0].measure() >= space.children[1].measure()
    )


class StrategyResolver:
    """预先计算 RadiusParams（含 ζ_d），之后按节点数 n 给出半径或 k"""

    def __init__(self, strategy: Union[RadialStrategy, KnnStrategy], space: StateSpace,
                 mu_free: Optional[float] = None):
        self.strategy = strategy
        self.space = space
        self.params: Optional[RadiusParams] = None
        if isinstance(strategy, RadialStrategy):
            self.params = RadiusParams.for_space(space, strategy.eta, strategy.mu_free or mu_free)

    def resolve(self, n: int) -> Resolution:
        if n < 2:
            raise DomainError(f"连接参数要求 n ≥ 2，实际 {n}")
        strategy = self.strategy
        if isinstance(strategy, KnnStrategy):
            return Resolution(None, max(1, math.ceil(strategy.multiplier * knn_count(n, self.space.dimension))))
        if strategy.use_projection_heuristic and _qualifies_for_projection(self.space):
            radius, projected = effective_radius(self.space, n, self.params)
            return Resolution(radius, None, projected)
        return Resolution(connection_radius(n, self.params), None, False)


def resolve_strategy(strategy: Union[RadialStrategy, KnnStrategy], space: StateSpace, n: int,
                     mu_free: Optional[float] = None) -> Resolution:
    """Radial 返回半径（或投影半径），Knn 返回 k"""
    return StrategyResolver(strategy, space, mu_free).resolve(n)


def _run_mu_free(strategy, scenario: Scenario) -> Optional[float]:
    if isinstance(strategy, RadialStrategy) and strategy.known_free and strategy.mu_free is None:
        return known_free_measure(scenario)
    return None


# ----------------------------------------------------------------------------
# 结果
# ----------------------------------------------------------------------------

@dataclass
class PlanResult:
    success: bool
    path: List[Point]
    cost: float
    ledger: PrimitiveLedger
    roadmap_stats: Dict[str, Any] = field(default_factory=dict)
    path_ids: List[int] = field(default_factory=list)

    def summary(self) -> Dict[str, Any]:
        return {
            "success": self.success,
            "cost": self.cost if self.success else None,
            "path": [p.tolist() for p in self.path],
            "ledger": self.ledger.to_dict(),
            "roadmap_stats": self.roadmap_stats,
        }


def _avg_degree(ledger: PrimitiveLedger) -> float:
    queries = ledger.rnn + ledger.knn
    return ledger.reported / queries if queries else 0.0


# ----------------------------------------------------------------------------
# sPRM* / Lazy-sPRM*
# ----------------------------------------------------------------------------

def _build_graph(
    scenario: Scenario,
    n_target: int,
    strategy,
    seed: int,
    nn_kind: Optional[str],
    ledger: PrimitiveLedger,
    checker: CollisionChecker,
) -> Tuple[Roadmap, Resolution, int]:
    space = scenario.space
    rng = np.random.default_rng(seed)
    index: NnIndex = make_index(nn_kind or SERVICE_CONFIG.nn_kind, space, ledger)
    roadmap = Roadmap(space)
    for p in (scenario.start, scenario.goal):
        roadmap.add_node(p)
        index.insert(p)

    attempts = 0
    while len(roadmap) - 2 < n_target:
        x = space.sample_uniform(rng)
        attempts += 1
        if checker.is_valid(x):
            roadmap.add_node(x)
            index.insert(x)

    n = len(roadmap)
    resolution = StrategyResolver(strategy, space, _run_mu_free(strategy, scenario)).resolve(n)
    if resolution.radius is not None:
        pairs = index.all_pairs(resolution.radius)
    else:
        # K-NN 图做对称化：任一端点选中对方即保留该边
        ledger.ap += 1
        chosen = set()
        for i in range(n):
            picked = [j for j in index.k_nearest(index.point(i), resolution.k + 1) if j != i][:resolution.k]
            chosen.update((min(i, j), max(i, j)) for j in picked)
        pairs = sorted(chosen)
    for u, v in pairs:
        roadmap.add_edge(u, v)
    return roadmap, resolution, attempts


def _finish(
    roadmap: Roadmap,
    path_ids: Optional[List[int]],
    ledger: PrimitiveLedger,
    started: int,
    stats: Dict[str, Any],
) -> PlanResult:
    ledger.t_total_ns = clock() - started
    stats.update({
        "nodes": len(roadmap),
        "edges": roadmap.edge_counts(),
        "avg_degree": _avg_degree(ledger),
        "unsuccessful": ledger.unsuccessful,
    })
    if path_ids is None:
        return PlanResult(False, [], math.inf, ledger, stats)
    path = [roadmap.nodes[i] for i in path_ids]
    return PlanResult(True, path, roadmap.path_cost(path_ids), ledger, stats, list(path_ids))


def sprm_star(
    scenario: Scenario,
    n_target: int,
    strategy: Union[RadialStrategy, KnnStrategy],
    seed: int,
    nn_kind: Optional[str] = None,
) -> PlanResult:
    """
    sPRM*：采样 n_target 个无碰撞点，连接所有候选边并逐条做 LP，再在 free 边上求最短路

    Args:
        scenario: 场景
        n_target: 无碰撞采样点个数（不含起终点）
        strategy: 连接策略
        seed: 随机种子
        nn_kind: 最近邻索引类型，缺省取配置

    Returns:
        PlanResult: 无解时 success=False，账本仍完整
    """
    if n_target < 2:
        raise DomainError(f"n_target 必须 ≥ 2，实际 {n_target}")
    ledger = PrimitiveLedger()
    checker = CollisionChecker(scenario, ledger)
    started = clock()
    roadmap, resolution, attempts = _build_graph(scenario, n_target, strategy, seed, nn_kind, ledger, checker)

    for u, v, edge in roadmap.edges():
        free = checker.local_plan(roadmap.nodes[u], roadmap.nodes[v])
        edge.status = EdgeStatus.FREE if free else EdgeStatus.BLOCKED

    path_ids, _ = shortest_path(roadmap, START_ID, GOAL_ID, free_edges)
    stats = {"n_free": n_target, "n_sampled": attempts, "radius": resolution.radius,
             "k": resolution.k, "projected": resolution.projected}
    logger.debug(f"sPRM* 完成: n={n_target} seed={seed} success={path_ids is not None}")
    return _finish(roadmap, path_ids, ledger, started, stats)


def lazy_sprm_star(
    scenario: Scenario,
    n_target: int,
    strategy: Union[RadialStrategy, KnnStrategy],
    seed: int,
    nn_kind: Optional[str] = None,
) -> PlanResult:
    """
    Lazy-sPRM*：与 sPRM* 建同一张图但不做 LP；查询阶段反复

        在非 blocked 边上求最短路 -> 对路径上 unknown 的边做 LP 并标记

    直到找到全部 free 的路径，或起终点不再连通。每轮重新计算完整的 Dijkstra。
    """
    if n_target < 2:
        raise DomainError(f"n_target 必须 ≥ 2，实际 {n_target}")
    ledger = PrimitiveLedger()
    checker = CollisionChecker(scenario, ledger)
    started = clock()
    roadmap, resolution, attempts = _build_graph(scenario, n_target, strategy, seed, nn_kind, ledger, checker)

    rounds = 0
    path_ids: Optional[List[int]] = None
    while True:
        rounds += 1
        candidate, _ = shortest_path(roadmap, START_ID, GOAL_ID, unblocked_edges)
        if candidate is None:
            break
        clean = True
        for u, v in zip(candidate[:-1], candidate[1:]):
            edge = roadmap.edge(u, v)
            if edge.status != EdgeStatus.UNKNOWN:
                continue
            free = checker.local_plan(roadmap.nodes[u], roadmap.nodes[v])
            edge.status = EdgeStatus.FREE if free else EdgeStatus.BLOCKED
            clean = clean and free
        if clean:
            path_ids = candidate
            break

    stats = {"n_free": n_target, "n_sampled": attempts, "radius": resolution.radius,
             "k": resolution.k, "projected": resolution.projected, "repair_rounds": rounds}
    logger.debug(f"Lazy-sPRM* 完成: n={n_target} seed={seed} rounds={rounds} success={path_ids is not None}")
    return _finish(roadmap, path_ids, ledger, started, stats)


# ----------------------------------------------------------------------------
# RRT*
# ----------------------------------------------------------------------------

class _Tree:
    """RRT* 树：节点 id 与最近邻索引 id 一致，0 为起点"""

    def __init__(self, roadmap: Roadmap):
        self.roadmap = roadmap
        self.parent: List[int] = []
        self.cost: List[float] = []
        self.children: List[set] = []

    def add(self, p: Point, parent: int, cost: float) -> int:
        idx = self.roadmap.add_node(p)
        self.parent.append(parent)
        self.cost.append(cost)
        self.children.append(set())
        if parent >= 0:
            self.roadmap.add_edge(parent, idx, EdgeStatus.FREE)
            self.children[parent].add(idx)
        return idx

    def reparent(self, idx: int, new_parent: int, new_cost: float) -> None:
        old_parent = self.parent[idx]
        self.roadmap.remove_edge(old_parent, idx)
        self.children[old_parent].discard(idx)
        self.roadmap.add_edge(new_parent, idx, EdgeStatus.FREE)
        self.children[new_parent].add(idx)
        self.parent[idx] = new_parent
        delta = new_cost - self.cost[idx]
        self.cost[idx] = new_cost
        queue = deque(self.children[idx])
        while queue:
            node = queue.popleft()
            self.cost[node] += delta
            queue.extend(self.children[node])

    def branch(self, idx: int) -> List[int]:
        ids = []
        while idx >= 0:
            ids.append(idx)
            idx = self.parent[idx]
        return ids[::-1]


def rrt_star(
    scenario: Scenario,
    iterations: int,
    strategy: Union[RadialStrategy, KnnStrategy],
    seed: int,
    steer_cap: Optional[float] = None,
    goal_bias: float = 0.0,
    nn_kind: Optional[str] = None,
) -> PlanResult:
    """
    RRT*

    每次迭代：采样（1 次 CD；无效则本次迭代失败）-> NN 找最近节点 -> 按 steer_cap 截断 ->
    LP-A 检查扩展边；扩展成功后在 min(r_n, steer_cap) 内做 R-NN（或 K-NN），
    按代价从小到大做 LP-B 选父节点，再对邻居做 LP-B 重连。
    新节点落在 r_n 内时尝试连接终点，终点候选在结束时按当前代价选最优。

    Args:
        scenario: 场景
        iterations: 迭代次数 N
        strategy: 连接策略
        seed: 随机种子
        steer_cap: 单步最大扩展距离，缺省为 steer_fraction × extent
        goal_bias: 以该概率直接把终点当作采样点
        nn_kind: 最近邻索引类型

    Returns:
        PlanResult: roadmap_stats 中 unsuccessful 为没有扩展树的迭代数
    """
    if iterations < 1:
        raise DomainError(f"迭代次数必须 ≥ 1，实际 {iterations}")
    space = scenario.space
    if steer_cap is None:
        steer_cap = SERVICE_CONFIG.steer_fraction * space.extent()
    ledger = PrimitiveLedger()
    checker = CollisionChecker(scenario, ledger)
    rng = np.random.default_rng(seed)
    resolver = StrategyResolver(strategy, space, _run_mu_free(strategy, scenario))
    started = clock()

    index = make_index(nn_kind or SERVICE_CONFIG.nn_kind, space, ledger)
    roadmap = Roadmap(space)
    tree = _Tree(roadmap)
    tree.add(scenario.start, -1, 0.0)
    index.insert(scenario.start)
    goal = scenario.goal
    goal_links: List[int] = []

    for _ in range(iterations):
        if goal_bias > 0.0 and rng.random() < goal_bias:
            x_rand = goal
        else:
            x_rand = space.sample_uniform(rng)
        if not checker.is_valid(x_rand):
            ledger.unsuccessful += 1
            continue

        nearest = index.nearest(x_rand)
        x_near = index.point(nearest)
        gap = space.distance(x_near, x_rand)
        if gap == 0.0:
            ledger.unsuccessful += 1
            continue
        x_new = x_rand if gap <= steer_cap else space.interpolate(x_near, x_rand, steer_cap / gap)
        if not checker.local_plan(x_near, x_new, "a"):
            ledger.unsuccessful += 1
            continue

        resolution = resolver.resolve(max(2, len(index)))
        if resolution.radius is not None:
            near = index.radius_near(x_new, min(resolution.radius, steer_cap))
        else:
            near = index.k_nearest(x_new, resolution.k)

        # 选父节点：按 (到达代价, id) 升序，第一个通过 LP-B 的即最优
        best = nearest
        best_cost = tree.cost[nearest] + space.distance(x_near, x_new)
        to_new = {c: space.distance(index.point(c), x_new) for c in near}
        for c in sorted(near, key=lambda c: (tree.cost[c] + to_new[c], c)):
            cand = tree.cost[c] + to_new[c]
            if cand >= best_cost - 1e-12:
                break
            if c != nearest and checker.local_plan(index.point(c), x_new, "b"):
                best, best_cost = c, cand
                break

        new_id = tree.add(x_new, best, best_cost)
        index.insert(x_new)

        for c in near:
            if c == best:
                continue
            cand = best_cost + to_new[c]
            if cand < tree.cost[c] - 1e-12 and checker.local_plan(x_new, index.point(c), "b"):
                tree.reparent(c, new_id, cand)

        goal_radius = resolution.radius if resolution.radius is not None else steer_cap
        if space.distance(x_new, goal) <= goal_radius and checker.local_plan(x_new, goal, "b"):
            goal_links.append(new_id)

    path_ids: Optional[List[int]] = None
    if goal_links:
        best_link = min(goal_links, key=lambda u: (tree.cost[u] + space.distance(index.point(u), goal), u))
        goal_id = tree.add(goal, best_link, tree.cost[best_link] + space.distance(index.point(best_link), goal))
        path_ids = tree.branch(goal_id)

    stats = {"n_free": len(index), "n_sampled": iterations, "goal_links": len(goal_links),
             "steer_cap": steer_cap}
    logger.debug(f"RRT* 完成: N={iterations} seed={seed} success={path_ids is not None}")
    return _finish(roadmap, path_ids, ledger, started, stats)


PLANNERS = {
    "sprm": sprm_star,
    "lazy-sprm": lazy_sprm_star,
    "rrt-star": rrt_star,
}


def run_planner(
    planner: str,
    scenario: Scenario,
    n: int,
    strategy: Union[RadialStrategy, KnnStrategy],
    seed: int,
    nn_kind: Optional[str] = None,
    **options: Any,
) -> PlanResult:
    """按名称运行规划器，n 对 PRM 类是采样点数，对 RRT* 是迭代次数"""
    func = PLANNERS.get(planner)
    if func is None:
        raise ConfigError(f"未知的规划器：{planner}，可选 {sorted(PLANNERS)}")
    return func(scenario, n, strategy, seed, nn_kind=nn_kind, **options)
