"""球体积解析公式注册表

统一管理 "复合空间结构 -> 解析公式" 的映射关系。
复合空间（p=1）展平成 (叶子, 权重) 列表后按叶子类型计数匹配，匹配与因子顺序无关。
每个公式只在有效半径内使用：圆因子要求 r ≤ w·π，SO(3) 因子要求 r ≤ w·π/2。
"""
import math
import threading
from collections import Counter
from typing import Callable, Dict, List, Optional, Sequence, Tuple

from .spaces import Circle, Compound, EuclideanL1, EuclideanL2, SO3, Sphere2, StateSpace

LeafKey = Tuple[str, int]
WeightedLeaf = Tuple[StateSpace, float]

VolumeFormula = Callable[[Dict[LeafKey, List[float]], float], float]
SurfaceFormula = Callable[[Dict[LeafKey, List[float]], float], float]


def leaf_key(leaf: StateSpace) -> LeafKey:
    if isinstance(leaf, (EuclideanL2, EuclideanL1)):
        return leaf.kind, leaf.d
    return leaf.kind, leaf.dimension


def flatten(space: StateSpace, scale: float = 1.0) -> Optional[List[WeightedLeaf]]:
    """
    把 p=1 的复合空间展平成 (叶子, 累积权重) 列表

    Returns:
        Optional[List[WeightedLeaf]]: 树中出现 p≠1 的复合空间时返回 None
    """
    if not isinstance(space, Compound):
        return [(space, scale)]
    if space.p != 1.0:
        return None
    out: List[WeightedLeaf] = []
    for child, w in zip(space.children, space.weights):
        part = flatten(child, scale * w)
        if part is None:
            return None
        out.extend(part)
    return out


def validity_radius(terms: Sequence[WeightedLeaf]) -> float:
    """解析公式的有效半径：所有饱和型叶子中 w·饱和半径 的最小值"""
    limits = [w * leaf.saturation_radius for leaf, w in terms if leaf.saturation_radius is not None]
    return min(limits) if limits else math.inf


class ClosedFormRoute:
    """一条解析公式路由"""

    def __init__(
        self,
        name: str,
        matcher: Callable[[Counter], bool],
        volume: VolumeFormula,
        surface: Optional[SurfaceFormula] = None,
        homogeneous: bool = True,
    ):
        """
        Args:
            name: 公式名称（唯一标识）
            matcher: 叶子类型计数 -> 是否匹配
            volume: (按叶子类型分组的权重, r) -> 球体积
            surface: 球面测度；缺省时按齐次公式 D·B/r 计算（D 为维数）
            homogeneous: 体积是否为 r 的 D 次齐次函数
        """
        self.name = name
        self.matcher = matcher
        self.volume = volume
        self.surface = surface
        self.homogeneous = homogeneous


class VolumeRegistry:
    """解析公式注册表（单例模式）"""
    _instance = None
    _lock = threading.Lock()

    def __new__(cls):
        if cls._instance is None:
            with cls._lock:
                if cls._instance is None:
                    cls._instance = super().__new__(cls)
                    cls._instance._routes: Dict[str, ClosedFormRoute] = {}
        return cls._instance

    def register(self, route: ClosedFormRoute) -> None:
        # 同名路由直接覆盖
        self._routes[route.name] = route

    def get_route(self, name: str) -> Optional[ClosedFormRoute]:
        return self._routes.get(name)

    def names(self) -> List[str]:
        return list(self._routes)

    def match(self, terms: Sequence[WeightedLeaf]) -> Optional[ClosedFormRoute]:
        """按叶子类型计数查找第一条匹配的路由"""
        counts = Counter(leaf_key(leaf) for leaf, _ in terms)
        for route in self._routes.values():
            if route.matcher(counts):
                return route
        return None


def group_weights(terms: Sequence[WeightedLeaf]) -> Dict[LeafKey, List[float]]:
    groups: Dict[LeafKey, List[float]] = {}
    for leaf, w in terms:
        groups.setdefault(leaf_key(leaf), []).append(w)
    return groups


def _only(counts: Counter, expected: Dict[LeafKey, int]) -> bool:
    return dict(counts) == expected


def _inv_prod(weights: Sequence[float], power: int = 1) -> float:
    return 1.0 / math.prod(w ** power for w in weights)


L2_2: LeafKey = ("l2", 2)
L2_3: LeafKey = ("l2", 3)
CIRCLE: LeafKey = ("circle", 1)
SO3_KEY: LeafKey = ("so3", 3)


def _power_coefficient(m: int, first: float, step: Callable[[int], float]) -> float:
    c = first
    for k in range(2, m + 1):
        c *= step(k)
    return c


def _se2(g: Dict[LeafKey, List[float]], r: float) -> float:
    return 2.0 * math.pi / 3.0 * r ** 3 * _inv_prod(g[L2_2], 2) * _inv_prod(g[CIRCLE])


def _cos_remainder(x: float) -> float:
    """cos x − 1 + x²/2 − x⁴/24，|x| < 1 时按级数求和"""
    if abs(x) >= 1.0:
        return math.cos(x) - 1.0 + x * x / 2.0 - x ** 4 / 24.0
    term = -x ** 6 / 720.0
    total = 0.0
    for k in range(3, 15):
        total += term
        term *= -x * x / ((2 * k + 1) * (2 * k + 2))
    return total


def _sin_remainder(x: float) -> float:
    """sin x − x + x³/6，|x| < 1 时按级数求和"""
    if abs(x) >= 1.0:
        return math.sin(x) - x + x ** 3 / 6.0
    term = x ** 5 / 120.0
    total = 0.0
    for k in range(2, 14):
        total += term
        term *= -x * x / ((2 * k + 2) * (2 * k + 3))
    return total


def _se3(g: Dict[LeafKey, List[float]], r: float) -> float:
    # 2r⁴ − 6w₂²r² + 3w₂⁴ − 3w₂⁴cos(2r/w₂) 按 x = 2r/w₂ 写成 −3w₂⁴·(cos x 的四阶余项)
    w1, w2 = g[L2_3][0], g[SO3_KEY][0]
    x = 2.0 * r / w2
    return (math.pi ** 2 / 3.0) / (w1 ** 3 * w2) * (-3.0 * w2 ** 4 * _cos_remainder(x))


def _se3_surface(g: Dict[LeafKey, List[float]], r: float) -> float:
    w1, w2 = g[L2_3][0], g[SO3_KEY][0]
    x = 2.0 * r / w2
    return (math.pi ** 2 / 3.0) / (w1 ** 3 * w2) * (6.0 * w2 ** 3 * _sin_remainder(x))


def _torus(g: Dict[LeafKey, List[float]], r: float) -> float:
    ws = g[CIRCLE]
    d = len(ws)
    return 2.0 ** d / math.factorial(d) * _inv_prod(ws) * r ** d


def _l2_2_power(g: Dict[LeafKey, List[float]], r: float) -> float:
    ws = g[L2_2]
    m = len(ws)
    c = _power_coefficient(m, 1.0, lambda k: 1.0 / (k * (2 * k - 1)))
    return c * math.pi ** m * _inv_prod(ws, 2) * r ** (2 * m)


def _l2_3_power(g: Dict[LeafKey, List[float]], r: float) -> float:
    ws = g[L2_3]
    m = len(ws)
    c = _power_coefficient(m, 4.0 / 3.0, lambda k: 8.0 / (3 * k * (3 * k - 1) * (3 * k - 2)))
    return c * math.pi ** m * _inv_prod(ws, 3) * r ** (3 * m)


def _se2_power(g: Dict[LeafKey, List[float]], r: float) -> float:
    m = len(g[L2_2])
    c = _power_coefficient(m, 2.0 / 3.0, lambda k: 4.0 / (3 * k * (3 * k - 1) * (3 * k - 2)))
    return c * math.pi ** m * _inv_prod(g[L2_2], 2) * _inv_prod(g[CIRCLE]) * r ** (3 * m)


def _circle_se2(g: Dict[LeafKey, List[float]], r: float) -> float:
    return math.pi / 3.0 * r ** 4 * _inv_prod(g[L2_2], 2) * _inv_prod(g[CIRCLE])


def _register_defaults(registry: VolumeRegistry) -> None:
    registry.register(ClosedFormRoute(
        "se2", lambda c: _only(c, {L2_2: 1, CIRCLE: 1}), _se2))
    registry.register(ClosedFormRoute(
        "se3", lambda c: _only(c, {L2_3: 1, SO3_KEY: 1}), _se3, surface=_se3_surface, homogeneous=False))
    registry.register(ClosedFormRoute(
        "torus", lambda c: set(c) == {CIRCLE} and c[CIRCLE] >= 2, _torus))
    registry.register(ClosedFormRoute(
        "l2_2_power", lambda c: set(c) == {L2_2} and c[L2_2] >= 2, _l2_2_power))
    registry.register(ClosedFormRoute(
        "l2_3_power", lambda c: set(c) == {L2_3} and c[L2_3] >= 2, _l2_3_power))
    registry.register(ClosedFormRoute(
        "se2_power", lambda c: set(c) == {L2_2, CIRCLE} and c[L2_2] == c[CIRCLE] >= 2, _se2_power))
    registry.register(ClosedFormRoute(
        "circle_se2", lambda c: _only(c, {L2_2: 1, CIRCLE: 2}), _circle_se2))


VOLUME_REGISTRY = VolumeRegistry()
_register_defaults(VOLUME_REGISTRY)


# ----------------------------------------------------------------------------
# 叶子空间公式
# ----------------------------------------------------------------------------

def leaf_ball_volume(leaf: StateSpace, r: float) -> float:
    """叶子空间半径 r 的球体积（圆、球面、SO(3) 在饱和半径处封顶）"""
    if isinstance(leaf, EuclideanL2):
        d = leaf.d
        return math.pi ** (d / 2.0) / math.gamma(d / 2.0 + 1.0) * r ** d
    if isinstance(leaf, EuclideanL1):
        return 2.0 ** leaf.d / math.factorial(leaf.d) * r ** leaf.d
    if isinstance(leaf, Circle):
        return 2.0 * min(r, math.pi)
    if isinstance(leaf, Sphere2):
        return 2.0 * math.pi * (1.0 - math.cos(min(r, math.pi)))
    if isinstance(leaf, SO3):
        rho = min(r, math.pi / 2.0)
        return math.pi * (2.0 * rho - math.sin(2.0 * rho))
    raise TypeError(f"不是叶子空间：{leaf!r}")


def leaf_ball_derivative(leaf: StateSpace, r: float) -> float:
    """叶子空间球体积对半径的导数，作为分解积分中的密度"""
    if isinstance(leaf, EuclideanL2):
        d = leaf.d
        return d * math.pi ** (d / 2.0) / math.gamma(d / 2.0 + 1.0) * r ** (d - 1)
    if isinstance(leaf, EuclideanL1):
        return 2.0 ** leaf.d / math.factorial(leaf.d - 1) * r ** (leaf.d - 1)
    if isinstance(leaf, Circle):
        return 2.0 if r < math.pi else 0.0
    if isinstance(leaf, Sphere2):
        return 2.0 * math.pi * math.sin(r) if r < math.pi else 0.0
    if isinstance(leaf, SO3):
        return 4.0 * math.pi * math.sin(r) ** 2 if r < math.pi / 2.0 else 0.0
    raise TypeError(f"不是叶子空间：{leaf!r}")


def _cross_polytope_facet_surface(d: int, r: float) -> float:
    # 2^d 个正则 (d-1) 单形面，边长 r√2
    return 2.0 ** d * math.sqrt(d) / math.factorial(d - 1) * r ** (d - 1)


def leaf_sphere_surface(leaf: StateSpace, r: float) -> float:
    """叶子空间半径 r 的球面测度"""
    if isinstance(leaf, EuclideanL2):
        return leaf.d / r * leaf_ball_volume(leaf, r)
    if isinstance(leaf, EuclideanL1):
        if leaf.d == 1:
            return 2.0
        if leaf.d == 2:
            return 4.0 * math.sqrt(2.0) * r
        if leaf.d == 3:
            # 取 2√3 r²，与 L1(3) 的体积导数 4r² 不同
            return 2.0 * math.sqrt(3.0) * r ** 2
        return _cross_polytope_facet_surface(leaf.d, r)
    return leaf_ball_derivative(leaf, r)
