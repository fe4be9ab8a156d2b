"""球体积与连接半径

ball_volume 的计算顺序：
    1. 解析公式（叶子公式或 VOLUME_REGISTRY 中匹配的复合公式，且 r 在有效半径内）
    2. 分解积分：剥离一个叶子因子 X₁，计算 ∫ dB₁(ϱ) · B_rest(剩余半径)
    3. 蒙特卡洛估计（记 warning）

对不含欧氏分量的空间，结果封顶为空间总测度；欧氏分量的球按无界空间计算，不做截断。
"""
import math
from typing import List, NamedTuple, Optional, Sequence, Tuple

import numpy as np
from pydantic import BaseModel, Field

from .errors import (
    DomainError,
    InfeasibleOracleError,
    PreconditionError,
    StructuralError,
    UnsupportedOperationError,
)
from .logger_config import setup_logger
from .quadrature import integrate
from .spaces import Circle, Compound, EuclideanL1, EuclideanL2, SO3, Sphere2, StateSpace
from .volume_registry import (
    VOLUME_REGISTRY,
    WeightedLeaf,
    flatten,
    group_weights,
    leaf_ball_derivative,
    leaf_ball_volume,
    leaf_sphere_surface,
    validity_radius,
)

logger = setup_logger(__name__)

LEAF_TYPES = (EuclideanL2, EuclideanL1, Circle, Sphere2, SO3)
FALLBACK_MC_TRIALS = 200_000
FALLBACK_MC_SEED = 20240917
FD_RELATIVE_STEP = 1e-5
WELL_BEHAVED_TOL = 1e-4


class VolumeReport(NamedTuple):
    """ball_volume 的计算结果与计算途径"""
    value: float
    method: str  # closed / numeric / monte_carlo
    clamped: bool


# ----------------------------------------------------------------------------
# 解析公式
# ----------------------------------------------------------------------------

def _closed_terms(terms: Sequence[WeightedLeaf], r: float) -> Optional[float]:
    if len(terms) == 1:
        leaf, w = terms[0]
        return leaf_ball_volume(leaf, r / w)
    if r > validity_radius(terms) + 1e-15:
        return None
    route = VOLUME_REGISTRY.match(terms)
    if route is None:
        return None
    return route.volume(group_weights(terms), r)


def closed_form_volume(space: StateSpace, r: float) -> Optional[float]:
    """
    解析公式计算球体积

    Returns:
        Optional[float]: 没有匹配的公式，或 r 超出公式有效半径时返回 None
    """
    if r < 0:
        raise DomainError(f"半径必须非负，实际 {r}")
    if r == 0:
        return 0.0
    terms = flatten(space)
    if terms is None:
        return None
    return _closed_terms(terms, r)


# ----------------------------------------------------------------------------
# 分解积分
# ----------------------------------------------------------------------------

def _saturation_kinks(terms: Sequence[WeightedLeaf]) -> List[float]:
    kinks = [w * leaf.saturation_radius for leaf, w in terms if leaf.saturation_radius is not None]
    if len(kinks) > 1:
        kinks.append(sum(kinks))
    return kinks


def _factor_volume(factor: StateSpace, w: float, p: float, s: float) -> float:
    """权重为 w 的单个因子在复合度量下半径 s 的球体积"""
    return ball_volume(factor, s / w ** (1.0 / p))


def _rest_volume(rest: Sequence[Tuple[StateSpace, float]], p: float, s: float) -> float:
    if s <= 0:
        return 0.0
    if len(rest) == 1:
        factor, w = rest[0]
        return _factor_volume(factor, w, p, s)
    if p == 1.0:
        closed = _closed_terms(rest, s)
        if closed is not None:
            return closed
    value = _peel(rest, p, s)
    if value is None:
        raise UnsupportedOperationError("剩余因子中没有可剥离的叶子")
    return value


def _peel_with(
    density,
    saturation: Optional[float],
    w1: float,
    rest: Sequence[Tuple[StateSpace, float]],
    p: float,
    r: float,
) -> float:
    upper = (r ** p / w1) ** (1.0 / p)
    if saturation is not None:
        upper = min(upper, saturation)

    if p == 1.0:
        def remaining(rho: float) -> float:
            return r - w1 * rho
    else:
        def remaining(rho: float) -> float:
            return max(r ** p - w1 * rho ** p, 0.0) ** (1.0 / p)

    def integrand(rho: float) -> float:
        dens = density(rho)
        if dens == 0.0:
            return 0.0
        return dens * _rest_volume(rest, p, remaining(rho))

    breakpoints = []
    if p == 1.0:
        flat = [t for factor, w in rest for t in (flatten(factor, w) or [])]
        breakpoints = [(r - k) / w1 for k in _saturation_kinks(flat)]
    return integrate(integrand, 0.0, upper, breakpoints)


def _peel(factors: Sequence[Tuple[StateSpace, float]], p: float, r: float) -> Optional[float]:
    """
    选一个叶子因子做分解积分，优先良态叶子

    只剩 S² / SO(3) / L¹ 叶子时以 dB/dϱ 作为密度剥离，等价于先做正则变换。
    """
    order = sorted(
        range(len(factors)),
        key=lambda i: 0 if isinstance(factors[i][0], LEAF_TYPES) and is_well_behaved(factors[i][0]) else 1,
    )
    for i in order:
        leaf, w1 = factors[i]
        if not isinstance(leaf, LEAF_TYPES):
            continue
        rest = [f for j, f in enumerate(factors) if j != i]
        return _peel_with(
            lambda rho, leaf=leaf: leaf_ball_derivative(leaf, rho),
            leaf.saturation_radius, w1, rest, p, r,
        )
    return None


def numeric_volume(space: StateSpace, r: float) -> Optional[float]:
    """
    分解积分计算球体积，不使用整个空间的解析公式（剩余因子仍可用解析公式）

    Returns:
        Optional[float]: 叶子空间、或找不到可剥离的叶子时返回 None
    """
    if r < 0:
        raise DomainError(f"半径必须非负，实际 {r}")
    if not isinstance(space, Compound):
        return None
    if r == 0:
        return 0.0
    terms = flatten(space)
    if terms is not None:
        return _peel(terms, 1.0, r)
    return _peel(list(zip(space.children, space.weights)), space.p, r)


def compound_ball_volume_numeric(
    space1: StateSpace,
    space2: StateSpace,
    w1: float,
    w2: float,
    p: float,
    r: float,
) -> float:
    """
    按分解公式计算 X₁×X₂ 的球体积：B(r) = ∫ S₁(ϱ)·B₂(((rᵖ − w₁ϱᵖ)/w₂)^{1/p}) dϱ

    Args:
        space1: 剥离的因子，必须满足球面测度等于球体积导数
        space2: 剩余因子
        w1: space1 的权重
        w2: space2 的权重
        p: 度量指数
        r: 半径

    Returns:
        float: 球体积
    """
    if r < 0:
        raise DomainError(f"半径必须非负，实际 {r}")
    if not is_well_behaved(space1):
        raise PreconditionError(f"{space1!r} 的球面测度不是球体积的导数，不能作为剥离因子")
    if r == 0:
        return 0.0
    return _peel_with(
        lambda rho: sphere_surface(space1, rho) if rho > 0 else 0.0,
        space1.saturation_radius, w1, [(space2, w2)], p, r,
    )


# ----------------------------------------------------------------------------
# 蒙特卡洛
# ----------------------------------------------------------------------------

def ball_volume_monte_carlo(
    space: StateSpace,
    r: float,
    trials: int,
    rng: np.random.Generator,
    chunk: int = 100_000,
) -> Tuple[float, float]:
    """
    拒绝采样估计球体积

    Args:
        space: 构型空间
        r: 半径
        trials: 采样次数，至少 1000
        rng: 随机数生成器
        chunk: 每批采样点数

    Returns:
        Tuple[float, float]: (估计值, 标准误差)
    """
    if trials < 1000:
        raise DomainError(f"蒙特卡洛采样次数至少为 1000，实际 {trials}")
    if r < 0:
        raise DomainError(f"半径必须非负，实际 {r}")
    if r == 0:
        return 0.0, 0.0
    if not space.fits_centered_ball(r):
        raise InfeasibleOracleError(f"半径 {r} 的球会被欧氏边界截断，无法估计")

    center = space.center()
    hits = 0
    remaining = trials
    while remaining > 0:
        batch = min(chunk, remaining)
        Y = space.sample_many(rng, batch)
        hits += int(np.count_nonzero(space.distance_many(center, Y) <= r))
        remaining -= batch

    total = space.measure()
    fraction = hits / trials
    return fraction * total, total * math.sqrt(fraction * (1.0 - fraction) / trials)


# ----------------------------------------------------------------------------
# 对外接口
# ----------------------------------------------------------------------------

def _boundaryless(space: StateSpace) -> bool:
    return space.saturation_radius is not None


def ball_volume_report(space: StateSpace, r: float) -> VolumeReport:
    if r < 0:
        raise DomainError(f"半径必须非负，实际 {r}")
    if r == 0:
        return VolumeReport(0.0, "closed", False)

    value = closed_form_volume(space, r)
    method = "closed"
    if value is None:
        value = numeric_volume(space, r)
        method = "numeric"
    if value is None:
        logger.warning(f"{space!r} 没有解析公式也无法分解积分，改用蒙特卡洛估计")
        rng = np.random.default_rng(FALLBACK_MC_SEED)
        value, _ = ball_volume_monte_carlo(space, r, FALLBACK_MC_TRIALS, rng)
        method = "monte_carlo"

    clamped = False
    if _boundaryless(space) and value > space.measure():
        value = space.measure()
        clamped = True
    return VolumeReport(float(value), method, clamped)


def ball_volume(space: StateSpace, r: float) -> float:
    """半径 r 的球体积 μ(B(r))"""
    return ball_volume_report(space, r).value


def sphere_surface(space: StateSpace, r: float) -> float:
    """
    半径 r 的球面测度

    叶子空间使用各自公式；复合空间只支持匹配解析公式且 r 在有效半径内的情形。
    """
    if r <= 0:
        raise DomainError(f"球面测度要求 r > 0，实际 {r}")
    if isinstance(space, LEAF_TYPES):
        return leaf_sphere_surface(space, r)

    terms = flatten(space)
    route = VOLUME_REGISTRY.match(terms) if terms is not None and len(terms) > 1 else None
    if route is None or r > validity_radius(terms):
        raise UnsupportedOperationError(f"{space!r} 在 r={r} 处没有球面测度公式")
    groups = group_weights(terms)
    if route.surface is not None:
        return route.surface(groups, r)
    return space.dimension * route.volume(groups, r) / r


def canonical_transform(space: StateSpace, r: float) -> float:
    """s(r) = d·B(r)/S(r)"""
    surface = sphere_surface(space, r)
    if surface == 0:
        raise DomainError(f"r={r} 处球面测度为 0，s(r) 无定义")
    return space.dimension * ball_volume(space, r) / surface


def well_behaved_residual(space: StateSpace, r: float) -> float:
    """中心差分 dB/dr 与 S(r) 的相对误差"""
    h = FD_RELATIVE_STEP * max(r, 1e-3)
    derivative = (ball_volume(space, r + h) - ball_volume(space, r - h)) / (2.0 * h)
    surface = sphere_surface(space, r)
    return abs(derivative - surface) / abs(surface)


def is_well_behaved(space: StateSpace) -> bool:
    """
    正则变换是否为恒等映射 s(r) = r

    S² 与 SO(3) 的球面测度虽是球体积的导数，但 s(r) 分别为 2tan(r/2) 与
    3(2r − sin 2r)/(4sin² r)，不属于良态空间；L¹(d) 只有 d = 1 时良态。
    复合空间要求每个叶子良态且能匹配解析公式。
    """
    if isinstance(space, EuclideanL1):
        return space.d == 1
    if isinstance(space, (Sphere2, SO3)):
        return False
    if isinstance(space, LEAF_TYPES):
        return True
    terms = flatten(space)
    if terms is None or len(terms) < 2:
        return False
    if not all(is_well_behaved(leaf) for leaf, _ in terms):
        return False
    return VOLUME_REGISTRY.match(terms) is not None


# ----------------------------------------------------------------------------
# 连接半径
# ----------------------------------------------------------------------------

def unit_ball_volume(space: StateSpace) -> float:
    """
    连接半径公式中的 ζ_d

    有结构匹配的复合公式时直接取公式在 r=1 的值，不受圆 / SO(3) 因子饱和的限制，
    即假定球不与空间边界相交时的体积；其余情况等于 ball_volume(space, 1)。
    """
    terms = flatten(space)
    if terms is not None and len(terms) > 1:
        route = VOLUME_REGISTRY.match(terms)
        if route is not None:
            return route.volume(group_weights(terms), 1.0)
    return ball_volume(space, 1.0)


class RadiusParams(BaseModel):
    """连接半径参数"""
    eta: float = Field(1.0, ge=1.0, description="调节参数 η")
    mu_free: float = Field(..., gt=0.0, description="自由空间测度 μ(X_free)")
    d: int = Field(..., ge=1, description="空间维数")
    zeta_d: float = Field(..., gt=0.0, description="单位球体积 ζ_d")

    @classmethod
    def for_space(cls, space: StateSpace, eta: float = 1.0, mu_free: Optional[float] = None) -> "RadiusParams":
        """默认 μ_free 取空间总测度，ζ_d 见 unit_ball_volume"""
        total = space.measure()
        if mu_free is None:
            mu_free = total
        if mu_free > total + 1e-9:
            raise DomainError(f"μ_free={mu_free} 超过空间总测度 {total}")
        return cls(eta=eta, mu_free=mu_free, d=space.dimension, zeta_d=unit_ball_volume(space))


def connection_radius(n: int, params: RadiusParams) -> float:
    """r_n = 2η (μ_free/ζ_d)^{1/d} (1/d)^{1/d} (ln n / n)^{1/d}"""
    if n < 2:
        raise DomainError(f"连接半径要求 n ≥ 2，实际 {n}")
    inv_d = 1.0 / params.d
    return (
        2.0 * params.eta
        * (params.mu_free / params.zeta_d) ** inv_d
        * (1.0 / params.d) ** inv_d
        * (math.log(n) / n) ** inv_d
    )


def knn_count(n: int, d: int) -> int:
    """k_n = ⌈e(1 + 1/d) ln n⌉，至少为 1"""
    if n < 2:
        return 1
    return max(1, math.ceil(math.e * (1.0 + 1.0 / d) * math.log(n)))


def effective_radius(space: StateSpace, n: int, params: RadiusParams) -> Tuple[float, bool]:
    """
    X₁×X₂ 上的有效连接半径

    r_n 超过 w₂·extent(X₂) 时，X₂ 方向已被半径完全覆盖，改为只在 X₁ 上按其自身维数、
    单位球体积与测度计算半径（再乘以 w₁ 换算回复合度量）。

    Returns:
        Tuple[float, bool]: (半径, 是否使用了投影半径)
    """
    if not isinstance(space, Compound) or len(space.children) != 2 or space.p != 1.0:
        raise StructuralError("有效半径只适用于 p=1 的两因子复合空间")
    x1, x2 = space.children
    w1, w2 = space.weights
    if x1.measure() < x2.measure():
        raise StructuralError("有效半径要求 μ(X₁) ≥ μ(X₂)")

    r_n = connection_radius(n, params)
    if r_n <= w2 * x2.extent():
        return r_n, False

    free_fraction = params.mu_free / space.measure()
    projected = RadiusParams(
        eta=params.eta,
        mu_free=min(x1.measure() * free_fraction, x1.measure()),
        d=x1.dimension,
        zeta_d=ball_volume(x1, 1.0),
    )
    radius = w1 * connection_radius(n, projected)
    logger.debug(f"r_n={r_n:.6g} 超过 w₂·extent(X₂)={w2 * x2.extent():.6g}，使用投影半径 {radius:.6g}")
    return radius, True
