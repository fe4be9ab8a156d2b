"""场景、碰撞检测（CD）与局部规划（LP）

障碍物只作用在空间第一个欧氏叶子的坐标上，其余分量（圆、四元数等）不参与碰撞判断。
CollisionChecker 把场景与一个 PrimitiveLedger 绑定，planner 通过它调用 CD / LP：
    is_valid     计 1 次 CD
    local_plan   计 1 次 LP，其中每个检查点计 1 次 CD-in-LP；整个调用计入 t_cd
"""
import math
from abc import ABC, abstractmethod
from collections import deque
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Sequence

import numpy as np

from .errors import ConfigError, GenerationError, StructuralError
from .ledger import PrimitiveLedger, clock
from .logger_config import setup_logger
from .service_config import SERVICE_CONFIG
from .spaces import (
    Circle,
    Compound,
    EuclideanL1,
    EuclideanL2,
    Point,
    SO3,
    Sphere2,
    StateSpace,
    euclidean_slice,
    make_point,
    parse_space,
    strip_compound,
)

logger = setup_logger(__name__)

CORNER_EPS = 1e-6
GRID_CELLS = 40
MAX_GENERATION_ROUNDS = 100
SOUP_POLYGONS = 12


# ----------------------------------------------------------------------------
# 障碍物
# ----------------------------------------------------------------------------

class ObstacleSet(ABC):
    """障碍物集合，is_free 只做几何判断，不计数"""

    kind: str = ""

    @abstractmethod
    def is_free(self, x: Point) -> bool:
        pass

    @abstractmethod
    def describe(self) -> Dict[str, Any]:
        pass


class Freespace(ObstacleSet):
    kind = "freespace"

    def is_free(self, x: Point) -> bool:
        return True

    def describe(self) -> Dict[str, Any]:
        return {"kind": self.kind}


class HypercubeBox(ObstacleSet):
    """单位超立方体中心的方形障碍，测度 mu，边长 h = mu^{1/d}（可再向外膨胀 inflation）"""

    kind = "hypercube"

    def __init__(self, d: int, mu: float, coords: slice, inflation: float = 0.0):
        if not 0.0 <= mu < 1.0:
            raise StructuralError(f"障碍物测度 mu 必须在 [0, 1) 内，实际 {mu}")
        self.d = d
        self.mu = mu
        self.coords = coords
        self.inflation = inflation
        self.half = mu ** (1.0 / d) / 2.0 + inflation if mu > 0 else 0.0

    def is_free(self, x: Point) -> bool:
        if self.mu == 0:
            return True
        return bool(np.any(np.abs(x[self.coords] - 0.5) > self.half))

    def covered_fraction(self) -> float:
        """障碍在单位超立方体中所占比例"""
        if self.mu == 0:
            return 0.0
        return min(1.0, 2.0 * self.half) ** self.d

    def describe(self) -> Dict[str, Any]:
        return {"kind": self.kind, "d": self.d, "mu": self.mu, "inflation": self.inflation}


class SegmentSoup2D(ObstacleSet):
    """平面线段障碍，点到任一线段距离 ≤ inflation 即碰撞

    每次检查都扫描全部 m 条线段，检查代价随 m 线性增长。
    """

    kind = "segments"

    def __init__(self, segments: np.ndarray, coords: slice, inflation: float):
        segments = np.asarray(segments, dtype=float).reshape(-1, 4)
        self.segments = segments
        self.coords = coords
        self.inflation = inflation
        self._a = segments[:, :2]
        self._ab = segments[:, 2:] - self._a
        self._ab2 = np.maximum((self._ab * self._ab).sum(axis=1), 1e-300)

    def __len__(self) -> int:
        return len(self.segments)

    def clearance_many(self, P: np.ndarray) -> np.ndarray:
        """一批平面点 (n, 2) 到最近线段的距离"""
        if len(self.segments) == 0:
            return np.full(len(P), np.inf)
        ap = P[:, np.newaxis, :] - self._a[np.newaxis, :, :]
        t = np.clip((ap * self._ab).sum(axis=2) / self._ab2, 0.0, 1.0)
        gap = ap - t[:, :, np.newaxis] * self._ab
        return np.sqrt((gap * gap).sum(axis=2)).min(axis=1)

    def is_free(self, x: Point) -> bool:
        if len(self.segments) == 0:
            return True
        ap = x[self.coords] - self._a
        t = np.clip((ap * self._ab).sum(axis=1) / self._ab2, 0.0, 1.0)
        gap = ap - t[:, np.newaxis] * self._ab
        return bool((gap * gap).sum(axis=1).min() > self.inflation ** 2)

    def describe(self) -> Dict[str, Any]:
        return {"kind": self.kind, "m": len(self.segments), "inflation": self.inflation}


class RectangleStrip(ObstacleSet):
    """细长矩形 [0,L]×[0,height]，矩形外即碰撞"""

    kind = "strip"

    def __init__(self, length: float, coords: slice, height: float = 1.0):
        self.length = length
        self.height = height
        self.coords = coords

    def is_free(self, x: Point) -> bool:
        px, py = x[self.coords][:2]
        return bool(0.0 <= px <= self.length and 0.0 <= py <= self.height)

    def describe(self) -> Dict[str, Any]:
        return {"kind": self.kind, "length": self.length, "height": self.height}


# ----------------------------------------------------------------------------
# 场景
# ----------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class Scenario:
    """构型空间 + 障碍物 + 起终点 + LP 分辨率"""
    space: StateSpace
    obstacles: ObstacleSet
    start: Point
    goal: Point
    step: float
    res_fraction: Optional[float] = None
    params: Dict[str, Any] = field(default_factory=dict)

    @property
    def kind(self) -> str:
        return self.obstacles.kind

    def describe(self) -> Dict[str, Any]:
        return {
            "space": self.space.describe(),
            "obstacles": self.obstacles.describe(),
            "start": self.start.tolist(),
            "goal": self.goal.tolist(),
            "step": self.step,
            "res_fraction": self.res_fraction,
        }


class CollisionChecker:
    """绑定场景与账本的 CD / LP 执行器（单线程使用）"""

    def __init__(self, scenario: Scenario, ledger: Optional[PrimitiveLedger] = None):
        self.scenario = scenario
        self.ledger = ledger if ledger is not None else PrimitiveLedger()

    def is_valid(self, x: Point) -> bool:
        start = clock()
        free = self.scenario.obstacles.is_free(x)
        self.ledger.t_cd_ns += clock() - start
        self.ledger.cd += 1
        return free

    def local_plan(self, x: Point, y: Point, kind: Optional[str] = None) -> bool:
        """
        检查 x 到 y 的测地线段：K = ⌈D/step⌉，检查 i/K (i=1..K) 处的全部 K 个构型

        遇到碰撞也检查完剩余构型，cd_in_lp 每次加 K。

        Args:
            x: 起点（假定已检查过）
            y: 终点
            kind: "a" / "b"，RRT* 区分扩展与重连两类 LP

        Returns:
            bool: 全部检查点无碰撞
        """
        start = clock()
        space = self.scenario.space
        obstacles = self.scenario.obstacles
        steps = math.ceil(space.distance(x, y) / self.scenario.step - 1e-9)
        free = True
        for i in range(1, steps + 1):
            point = y if i == steps else space.interpolate(x, y, i / steps)
            if not obstacles.is_free(point):
                free = False
        ledger = self.ledger
        ledger.t_cd_ns += clock() - start
        ledger.lp += 1
        ledger.cd_in_lp += steps
        if kind == "a":
            ledger.lp_a += 1
        elif kind == "b":
            ledger.lp_b += 1
        return free


def is_valid(scenario: Scenario, x: Point, ledger: Optional[PrimitiveLedger] = None) -> bool:
    scenario.space.check(x)
    return CollisionChecker(scenario, ledger).is_valid(x)


def local_plan(scenario: Scenario, x: Point, y: Point, ledger: Optional[PrimitiveLedger] = None) -> bool:
    scenario.space.check(x)
    scenario.space.check(y)
    return CollisionChecker(scenario, ledger).local_plan(x, y)


def validate_path(scenario: Scenario, path: Sequence[Point], step: Optional[float] = None) -> bool:
    """用更细（或指定）的分辨率重新检查整条路径，不计入任何账本"""
    step = step or scenario.step / 2.0
    space = scenario.space
    obstacles = scenario.obstacles
    if not obstacles.is_free(path[0]):
        return False
    for x, y in zip(path[:-1], path[1:]):
        steps = math.ceil(space.distance(x, y) / step - 1e-9)
        for i in range(1, steps + 1):
            if not obstacles.is_free(y if i == steps else space.interpolate(x, y, i / steps)):
                return False
    return True


def free_fraction(scenario: Scenario, trials: int, rng: np.random.Generator) -> float:
    """均匀采样估计自由空间占比（不计数）"""
    samples = scenario.space.sample_many(rng, trials)
    free = sum(scenario.obstacles.is_free(x) for x in samples)
    return free / trials


def known_free_measure(scenario: Scenario) -> Optional[float]:
    """已知障碍测度的场景返回自由空间测度，否则返回 None"""
    if isinstance(scenario.obstacles, HypercubeBox):
        return scenario.space.measure() * (1.0 - scenario.obstacles.covered_fraction())
    if isinstance(scenario.obstacles, (Freespace, RectangleStrip)):
        return scenario.space.measure()
    return None


# ----------------------------------------------------------------------------
# 场景生成
# ----------------------------------------------------------------------------

def _leaf_anchor(leaf: StateSpace, high: bool) -> List[float]:
    if isinstance(leaf, (EuclideanL2, EuclideanL1)):
        lo, hi = leaf.bounds[:, 0], leaf.bounds[:, 1]
        eps = CORNER_EPS * (hi - lo)
        return (hi - eps if high else lo + eps).tolist()
    if isinstance(leaf, Circle):
        return [math.pi / 2.0 if high else 0.0]
    if isinstance(leaf, Sphere2):
        return [1.0, 0.0, 0.0] if high else [0.0, 0.0, 1.0]
    if isinstance(leaf, SO3):
        half = math.pi / 4.0
        return [math.cos(half), 0.0, 0.0, math.sin(half)] if high else [1.0, 0.0, 0.0, 0.0]
    if isinstance(leaf, Compound):
        return [v for child in leaf.children for v in _leaf_anchor(child, high)]
    raise StructuralError(f"无法为 {leaf!r} 生成起终点")


def corner_points(space: StateSpace):
    """欧氏分量取 ε·1 与 (1−ε)·1 角点，其余分量取固定姿态"""
    return make_point(space, _leaf_anchor(space, False)), make_point(space, _leaf_anchor(space, True))


def _step_for(space: StateSpace, params: Dict[str, Any]):
    if params.get("step") is not None:
        step = float(params["step"])
        if step <= 0:
            raise ConfigError(f"step 必须为正，实际 {step}")
        return step, None
    res_fraction = float(params.get("res_fraction") or SERVICE_CONFIG.res_fraction)
    if res_fraction <= 0:
        raise ConfigError(f"res_fraction 必须为正，实际 {res_fraction}")
    return res_fraction * space.extent(), res_fraction


def _random_soup(m: int, rng: np.random.Generator) -> np.ndarray:
    if m == 0:
        return np.empty((0, 4))
    polygons = max(1, min(SOUP_POLYGONS, m // 3))
    sizes = [m // polygons + (1 if i < m % polygons else 0) for i in range(polygons)]
    segments = []
    for edges in sizes:
        vertices = max(3, edges)
        center = rng.uniform(0.15, 0.85, size=2)
        radius = rng.uniform(0.04, 0.12)
        angles = np.sort(rng.uniform(0.0, 2.0 * math.pi, size=vertices))
        ring = center + radius * np.column_stack([np.cos(angles), np.sin(angles)])
        for i in range(edges):
            segments.append(np.concatenate([ring[i], ring[(i + 1) % vertices]]))
    return np.asarray(segments)


def _grid_connected(obstacles: SegmentSoup2D, start: np.ndarray, goal: np.ndarray) -> bool:
    """GRID_CELLS×GRID_CELLS 网格上做 4 邻接 BFS，判断起终点所在格子是否连通"""
    n = GRID_CELLS
    centers = (np.arange(n) + 0.5) / n
    gx, gy = np.meshgrid(centers, centers, indexing="ij")
    free = (obstacles.clearance_many(np.column_stack([gx.ravel(), gy.ravel()])) > obstacles.inflation).reshape(n, n)

    def cell(p: np.ndarray):
        return tuple(np.clip((p * n).astype(int), 0, n - 1))

    src, dst = cell(start), cell(goal)
    if not free[src] or not free[dst]:
        return False
    seen = {src}
    queue = deque([src])
    while queue:
        i, j = queue.popleft()
        if (i, j) == dst:
            return True
        for a, b in ((i + 1, j), (i - 1, j), (i, j + 1), (i, j - 1)):
            if 0 <= a < n and 0 <= b < n and free[a, b] and (a, b) not in seen:
                seen.add((a, b))
                queue.append((a, b))
    return False


def _make_hypercube(params: Dict[str, Any], seed: int) -> Scenario:
    d = int(params.get("d", 2))
    mu = float(params.get("mu", 0.0))
    space = parse_space(params["space"]) if params.get("space") else EuclideanL2(d)
    found = euclidean_slice(space)
    if found is None:
        raise ConfigError("hypercube 场景要求空间含欧氏分量")
    coords, leaf = found
    step, res_fraction = _step_for(space, params)
    inflation = float(params.get("inflation", 0.0))
    if params.get("inflate_with_resolution"):
        inflation = step / 2.0
    obstacles = HypercubeBox(leaf.d, mu, coords, inflation)
    start, goal = corner_points(space)
    return Scenario(space, obstacles, start, goal, step, res_fraction, dict(params))


def _make_segments(params: Dict[str, Any], seed: int) -> Scenario:
    m = int(params.get("m", 0))
    if m < 0:
        raise ConfigError(f"线段数 m 必须非负，实际 {m}")
    inflation = float(params.get("inflation", SERVICE_CONFIG.segment_inflation))
    space = EuclideanL2(2)
    coords = slice(0, 2)
    step, res_fraction = _step_for(space, params)
    if params.get("inflate_with_resolution"):
        inflation = max(inflation, step / 2.0)
    start, goal = corner_points(space)
    rng = np.random.default_rng(seed)
    for attempt in range(1, MAX_GENERATION_ROUNDS + 1):
        obstacles = SegmentSoup2D(_random_soup(m, rng), coords, inflation)
        if obstacles.is_free(start) and obstacles.is_free(goal) and _grid_connected(obstacles, start, goal):
            logger.debug(f"线段场景 m={m} seed={seed} 第 {attempt} 轮生成成功")
            return Scenario(space, obstacles, start, goal, step, res_fraction, dict(params))
        logger.debug(f"线段场景 m={m} seed={seed} 第 {attempt} 轮不可行，重新生成")
    raise GenerationError(f"线段场景 m={m} seed={seed} 在 {MAX_GENERATION_ROUNDS} 轮内没有生成可行场景")


def _make_strip(params: Dict[str, Any], seed: int) -> Scenario:
    length = float(params.get("length", 10.0))
    w2 = float(params.get("w2", 1e-3))
    space = strip_compound(length, w2)
    step, res_fraction = _step_for(space, params)
    obstacles = RectangleStrip(length, slice(0, 2))
    eps = CORNER_EPS
    start = make_point(space, [eps, 0.5, 0.0])
    goal = make_point(space, [length - eps, 0.5, 0.0])
    return Scenario(space, obstacles, start, goal, step, res_fraction, dict(params))


def _make_freespace(params: Dict[str, Any], seed: int) -> Scenario:
    if params.get("space"):
        space = parse_space(params["space"])
    else:
        space = EuclideanL2(int(params.get("d", 2)))
    step, res_fraction = _step_for(space, params)
    start, goal = corner_points(space)
    return Scenario(space, Freespace(), start, goal, step, res_fraction, dict(params))


SCENARIO_BUILDERS = {
    "hypercube": _make_hypercube,
    "segments": _make_segments,
    "strip": _make_strip,
    "freespace": _make_freespace,
}


def make_scenario(kind: str, params: Optional[Dict[str, Any]] = None, seed: int = 0) -> Scenario:
    """
    按类型构造场景

    Args:
        kind: hypercube / segments / strip / freespace
        params: 场景参数，例如 {"d": 2, "mu": 0.25}；公共参数 res_fraction / step / inflation
        seed: 随机场景（segments）的种子

    Returns:
        Scenario: 起终点均无碰撞的场景
    """
    builder = SCENARIO_BUILDERS.get(kind)
    if builder is None:
        raise ConfigError(f"未知的场景类型：{kind}，可选 {sorted(SCENARIO_BUILDERS)}")
    scenario = builder(dict(params or {}), seed)
    if not (scenario.obstacles.is_free(scenario.start) and scenario.obstacles.is_free(scenario.goal)):
        raise GenerationError(f"{kind} 场景的起点或终点在障碍物内")
    return scenario
