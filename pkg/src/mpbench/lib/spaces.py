"""构型空间（C-space）

定义基本空间（L² / L¹ 欧氏空间、圆 S¹、球面 S²、旋转群 SO(3)）以及加权复合空间，
提供度量、测地插值、均匀采样、直径（extent）与总测度。

点（Point）统一用只读的一维 float64 numpy 数组表示，分量按空间布局平铺：
欧氏坐标、圆的角度（[0, 2π)）、S² 的单位三维向量、SO(3) 的单位四元数。
"""
import hashlib
import json
import math
from abc import ABC, abstractmethod
from typing import Any, Dict, List, Optional, Sequence, Tuple, Union

import numpy as np
from pydantic import BaseModel, Field, ValidationError, field_validator

from .errors import DomainError, StructuralError

Point = np.ndarray

TWO_PI = 2.0 * math.pi
NORM_TOL = 1e-9


def _freeze(values: np.ndarray) -> Point:
    values.setflags(write=False)
    return values


def _unit_angle_many(x: np.ndarray, Y: np.ndarray) -> np.ndarray:
    """单位向量之间的夹角，用 2·atan2(|y−x|, |y+x|) 计算，避免 arccos 在 ±1 附近丢精度"""
    minus = np.sqrt(((Y - x) ** 2).sum(axis=1))
    plus = np.sqrt(((Y + x) ** 2).sum(axis=1))
    return 2.0 * np.arctan2(minus, plus)


def _slerp(x: np.ndarray, y: np.ndarray, t: float, theta: float) -> np.ndarray:
    if theta < 1e-15:
        return x.copy()
    s = math.sin(theta)
    if s < 1e-12:
        # 对径点：选一个与 x 正交的确定方向
        axis = np.zeros_like(x)
        axis[int(np.argmin(np.abs(x)))] = 1.0
        ortho = axis - np.dot(axis, x) * x
        ortho /= np.linalg.norm(ortho)
        out = math.cos(t * theta) * x + math.sin(t * theta) * ortho
    else:
        out = (math.sin((1.0 - t) * theta) * x + math.sin(t * theta) * y) / s
    return out / np.linalg.norm(out)


class StateSpace(ABC):
    """构型空间基类

    StateSpace 构造后不可变，可在线程间共享。
    """

    kind: str = ""

    @property
    @abstractmethod
    def dimension(self) -> int:
        """流形维数"""

    @property
    @abstractmethod
    def size(self) -> int:
        """点的分量个数（存储布局长度）"""

    @abstractmethod
    def distance_many(self, x: Point, Y: np.ndarray) -> np.ndarray:
        """点 x 到一批点 Y（形状 (n, size)）的距离"""

    @abstractmethod
    def interpolate(self, x: Point, y: Point, t: float) -> Point:
        """测地插值，t=0 返回 x，t=1 返回 y"""

    @abstractmethod
    def sample_many(self, rng: np.random.Generator, n: int) -> np.ndarray:
        """均匀采样 n 个点，返回 (n, size) 数组"""

    @abstractmethod
    def extent(self) -> float:
        """空间内任意两点距离的上确界"""

    @abstractmethod
    def measure(self) -> float:
        """Lebesgue 总测度"""

    @abstractmethod
    def describe(self) -> Dict[str, Any]:
        """JSON 描述符，parse_space 的逆操作"""

    @abstractmethod
    def center(self) -> Point:
        """蒙特卡洛体积估计使用的球心"""

    @abstractmethod
    def fits_centered_ball(self, r: float) -> bool:
        """以 center() 为中心、半径 r 的球是否不被欧氏边界截断"""

    @property
    def saturation_radius(self) -> Optional[float]:
        """球覆盖整个空间的半径；含欧氏分量的空间没有这个半径，返回 None"""
        return None

    def distance(self, x: Point, y: Point) -> float:
        return float(self.distance_many(x, y[np.newaxis, :])[0])

    def sample_uniform(self, rng: np.random.Generator) -> Point:
        return _freeze(self.sample_many(rng, 1)[0].copy())

    def normalize(self, values: np.ndarray) -> np.ndarray:
        """校验并规范化分量（子类按需覆盖）"""
        return values

    def check(self, x: Any) -> None:
        if not isinstance(x, np.ndarray) or x.shape != (self.size,):
            shape = getattr(x, "shape", None)
            raise StructuralError(f"点的布局与空间不匹配：期望 ({self.size},)，实际 {shape}")

    def __eq__(self, other: object) -> bool:
        return isinstance(other, StateSpace) and self.describe() == other.describe()

    def __hash__(self) -> int:
        return hash(json.dumps(self.describe(), sort_keys=True))

    def __repr__(self) -> str:
        return f"{type(self).__name__}({json.dumps(self.describe())})"


class _Euclidean(StateSpace):
    def __init__(self, d: int, bounds: Optional[Sequence[Sequence[float]]] = None):
        if d < 1:
            raise StructuralError(f"欧氏空间维数必须 ≥ 1，实际 {d}")
        if bounds is None:
            bounds = [(0.0, 1.0)] * d
        arr = np.asarray(bounds, dtype=float)
        if arr.shape != (d, 2):
            raise StructuralError(f"边界数量与维数不一致：d={d}，bounds 形状 {arr.shape}")
        if np.any(arr[:, 0] >= arr[:, 1]):
            raise StructuralError("每个坐标轴的边界都必须满足 lower < upper")
        self.d = d
        self.bounds = _freeze(arr)
        self._lengths = arr[:, 1] - arr[:, 0]

    @property
    def dimension(self) -> int:
        return self.d

    @property
    def size(self) -> int:
        return self.d

    def interpolate(self, x: Point, y: Point, t: float) -> Point:
        return _freeze(x + t * (y - x))

    def sample_many(self, rng: np.random.Generator, n: int) -> np.ndarray:
        return rng.uniform(self.bounds[:, 0], self.bounds[:, 1], size=(n, self.d))

    def measure(self) -> float:
        return float(np.prod(self._lengths))

    def center(self) -> Point:
        return _freeze(self.bounds.mean(axis=1))

    def fits_centered_ball(self, r: float) -> bool:
        return r <= float(self._lengths.min()) / 2.0 + 1e-12

    def normalize(self, values: np.ndarray) -> np.ndarray:
        if np.any(values < self.bounds[:, 0] - NORM_TOL) or np.any(values > self.bounds[:, 1] + NORM_TOL):
            raise StructuralError(f"欧氏坐标超出边界：{values.tolist()}")
        return values

    def _describe_params(self) -> Dict[str, Any]:
        return {"d": self.d, "bounds": self.bounds.tolist()}


class EuclideanL2(_Euclidean):
    """L²(d)：欧氏度量"""

    kind = "l2"

    def distance_many(self, x: Point, Y: np.ndarray) -> np.ndarray:
        diff = Y - x
        return np.sqrt((diff * diff).sum(axis=1))

    def extent(self) -> float:
        return float(np.sqrt((self._lengths ** 2).sum()))

    def describe(self) -> Dict[str, Any]:
        return {"l2": self._describe_params()}


class EuclideanL1(_Euclidean):
    """L¹(d)：曼哈顿度量"""

    kind = "l1"

    def distance_many(self, x: Point, Y: np.ndarray) -> np.ndarray:
        return np.abs(Y - x).sum(axis=1)

    def extent(self) -> float:
        return float(self._lengths.sum())

    def describe(self) -> Dict[str, Any]:
        return {"l1": self._describe_params()}


class Circle(StateSpace):
    """S¹：角度存储在 [0, 2π)，测地弧长度量"""

    kind = "circle"

    @property
    def dimension(self) -> int:
        return 1

    @property
    def size(self) -> int:
        return 1

    @property
    def saturation_radius(self) -> Optional[float]:
        return math.pi

    def distance_many(self, x: Point, Y: np.ndarray) -> np.ndarray:
        diff = np.abs(Y[:, 0] - x[0]) % TWO_PI
        return np.minimum(diff, TWO_PI - diff)

    def interpolate(self, x: Point, y: Point, t: float) -> Point:
        if t == 1.0:
            return y
        # 走较短的那段弧
        delta = (y[0] - x[0] + math.pi) % TWO_PI - math.pi
        return _freeze(np.array([(x[0] + t * delta) % TWO_PI]))

    def sample_many(self, rng: np.random.Generator, n: int) -> np.ndarray:
        return rng.uniform(0.0, TWO_PI, size=(n, 1))

    def extent(self) -> float:
        return math.pi

    def measure(self) -> float:
        return TWO_PI

    def center(self) -> Point:
        return _freeze(np.zeros(1))

    def fits_centered_ball(self, r: float) -> bool:
        return True

    def normalize(self, values: np.ndarray) -> np.ndarray:
        return values % TWO_PI

    def describe(self) -> Dict[str, Any]:
        return {"circle": {}}


class _UnitSphereLike(StateSpace):
    ambient: int = 0

    @property
    def size(self) -> int:
        return self.ambient

    def sample_many(self, rng: np.random.Generator, n: int) -> np.ndarray:
        raw = rng.standard_normal((n, self.ambient))
        return raw / np.linalg.norm(raw, axis=1, keepdims=True)

    def fits_centered_ball(self, r: float) -> bool:
        return True

    def normalize(self, values: np.ndarray) -> np.ndarray:
        norm = float(np.linalg.norm(values))
        if abs(norm - 1.0) > NORM_TOL:
            raise StructuralError(f"{self.kind} 分量必须是单位向量，实际范数 {norm}")
        return values


class Sphere2(_UnitSphereLike):
    """S²：嵌入 R³ 的单位球面，测地距离"""

    kind = "sphere2"
    ambient = 3

    @property
    def dimension(self) -> int:
        return 2

    @property
    def saturation_radius(self) -> Optional[float]:
        return math.pi

    def distance_many(self, x: Point, Y: np.ndarray) -> np.ndarray:
        return _unit_angle_many(x, Y)

    def interpolate(self, x: Point, y: Point, t: float) -> Point:
        if t == 1.0:
            return y
        theta = float(_unit_angle_many(x, y[np.newaxis, :])[0])
        return _freeze(_slerp(x, y, t, theta))

    def extent(self) -> float:
        return math.pi

    def measure(self) -> float:
        return 4.0 * math.pi

    def center(self) -> Point:
        return _freeze(np.array([0.0, 0.0, 1.0]))

    def describe(self) -> Dict[str, Any]:
        return {"sphere2": {}}


class SO3(_UnitSphereLike):
    """SO(3)：单位四元数，q 与 −q 等同，度量 arccos|q₁·q₂|"""

    kind = "so3"
    ambient = 4

    @property
    def dimension(self) -> int:
        return 3

    @property
    def saturation_radius(self) -> Optional[float]:
        return math.pi / 2.0

    def distance_many(self, x: Point, Y: np.ndarray) -> np.ndarray:
        theta = _unit_angle_many(x, Y)
        return np.minimum(theta, math.pi - theta)

    def interpolate(self, x: Point, y: Point, t: float) -> Point:
        if t == 1.0:
            return y
        target = y if float(np.dot(x, y)) >= 0.0 else -y
        theta = float(_unit_angle_many(x, target[np.newaxis, :])[0])
        return _freeze(_slerp(x, target, t, theta))

    def extent(self) -> float:
        return math.pi / 2.0

    def measure(self) -> float:
        return math.pi ** 2

    def center(self) -> Point:
        return _freeze(np.array([1.0, 0.0, 0.0, 0.0]))

    def describe(self) -> Dict[str, Any]:
        return {"so3": {}}


class Compound(StateSpace):
    """加权复合空间，度量 (Σ wᵢ ρᵢᵖ)^{1/p}"""

    kind = "compound"

    def __init__(self, children: Sequence[StateSpace], weights: Optional[Sequence[float]] = None, p: float = 1.0):
        if len(children) < 2:
            raise StructuralError(f"复合空间至少需要 2 个子空间，实际 {len(children)}")
        if weights is None:
            weights = [1.0] * len(children)
        if len(weights) != len(children):
            raise StructuralError("权重个数必须与子空间个数一致")
        if any(w <= 0 for w in weights):
            raise StructuralError(f"权重必须为正：{list(weights)}")
        if p < 1:
            raise StructuralError(f"指数 p 必须 ≥ 1，实际 {p}")
        self.children: Tuple[StateSpace, ...] = tuple(children)
        self.weights: Tuple[float, ...] = tuple(float(w) for w in weights)
        self.p = float(p)
        self.slices: List[slice] = []
        offset = 0
        for child in self.children:
            self.slices.append(slice(offset, offset + child.size))
            offset += child.size
        self._size = offset

    @property
    def dimension(self) -> int:
        return sum(child.dimension for child in self.children)

    @property
    def size(self) -> int:
        return self._size

    @property
    def saturation_radius(self) -> Optional[float]:
        if all(child.saturation_radius is not None for child in self.children):
            return self.extent()
        return None

    def distance_many(self, x: Point, Y: np.ndarray) -> np.ndarray:
        total = np.zeros(Y.shape[0])
        for child, w, sl in zip(self.children, self.weights, self.slices):
            part = child.distance_many(x[sl], Y[:, sl])
            total += w * part if self.p == 1.0 else w * part ** self.p
        return total if self.p == 1.0 else total ** (1.0 / self.p)

    def interpolate(self, x: Point, y: Point, t: float) -> Point:
        if t == 1.0:
            return y
        parts = [child.interpolate(x[sl], y[sl], t) for child, sl in zip(self.children, self.slices)]
        return _freeze(np.concatenate(parts))

    def sample_many(self, rng: np.random.Generator, n: int) -> np.ndarray:
        return np.hstack([child.sample_many(rng, n) for child in self.children])

    def extent(self) -> float:
        if self.p == 1.0:
            return sum(w * child.extent() for child, w in zip(self.children, self.weights))
        total = sum(w * child.extent() ** self.p for child, w in zip(self.children, self.weights))
        return total ** (1.0 / self.p)

    def measure(self) -> float:
        # 不乘权重：球体积公式中的 1/wᵢ 系数与截断、蒙特卡洛估计都以未加权的乘积测度为单位
        return float(np.prod([child.measure() for child in self.children]))

    def center(self) -> Point:
        return _freeze(np.concatenate([child.center() for child in self.children]))

    def fits_centered_ball(self, r: float) -> bool:
        return all(
            child.fits_centered_ball(r / w ** (1.0 / self.p))
            for child, w in zip(self.children, self.weights)
        )

    def normalize(self, values: np.ndarray) -> np.ndarray:
        return np.concatenate([
            child.normalize(values[sl]) for child, sl in zip(self.children, self.slices)
        ])

    def describe(self) -> Dict[str, Any]:
        return {"compound": {
            "p": self.p,
            "weights": list(self.weights),
            "children": [child.describe() for child in self.children],
        }}


# ----------------------------------------------------------------------------
# 模块级操作
# ----------------------------------------------------------------------------

def make_point(space: StateSpace, values: Sequence[float]) -> Point:
    """按空间布局构造点：校验长度、规范化圆的角度、校验单位范数"""
    arr = np.asarray(values, dtype=float).reshape(-1).copy()
    if arr.shape != (space.size,):
        raise StructuralError(f"点的布局与空间不匹配：期望 {space.size} 个分量，实际 {arr.shape[0]}")
    return _freeze(space.normalize(arr))


def distance(space: StateSpace, x: Point, y: Point) -> float:
    space.check(x)
    space.check(y)
    return space.distance(x, y)


def distance_many(space: StateSpace, x: Point, Y: np.ndarray) -> np.ndarray:
    space.check(x)
    Y = np.asarray(Y, dtype=float)
    if Y.ndim != 2 or Y.shape[1] != space.size:
        raise StructuralError(f"批量点的布局与空间不匹配：{Y.shape}")
    return space.distance_many(x, Y)


def interpolate(space: StateSpace, x: Point, y: Point, t: float) -> Point:
    space.check(x)
    space.check(y)
    if not 0.0 <= t <= 1.0:
        raise DomainError(f"插值参数 t 必须在 [0, 1] 内，实际 {t}")
    if t == 0.0:
        return x
    return space.interpolate(x, y, t)


def sample_uniform(space: StateSpace, rng: np.random.Generator) -> Point:
    return space.sample_uniform(rng)


def sample_many(space: StateSpace, rng: np.random.Generator, n: int) -> np.ndarray:
    return space.sample_many(rng, n)


def extent(space: StateSpace) -> float:
    return space.extent()


def measure(space: StateSpace) -> float:
    return space.measure()


def weighted_measure(space: StateSpace) -> float:
    """子空间测度之积再乘以 Π wᵢ^{dim(childᵢ)}（非复合空间即总测度）"""
    if not isinstance(space, Compound):
        return space.measure()
    scale = math.prod(w ** child.dimension for child, w in zip(space.children, space.weights))
    return space.measure() * scale


def dimension(space: StateSpace) -> int:
    return space.dimension


# ----------------------------------------------------------------------------
# 常用空间构造器
# ----------------------------------------------------------------------------

def unit_bounds(d: int, high: float = 1.0) -> List[Tuple[float, float]]:
    return [(0.0, high)] * d


def se2(bounds: Optional[Sequence[Sequence[float]]] = None, weights: Sequence[float] = (1.0, 1.0)) -> Compound:
    """SE(2) = L²(2) × S¹"""
    return Compound([EuclideanL2(2, bounds), Circle()], weights, 1.0)


def se3(bounds: Optional[Sequence[Sequence[float]]] = None, weights: Sequence[float] = (1.0, 1.0)) -> Compound:
    """SE(3) = R³ × SO(3)"""
    return Compound([EuclideanL2(3, bounds), SO3()], weights, 1.0)


def torus(d: int, weights: Optional[Sequence[float]] = None) -> Compound:
    """T(d) = (S¹)ᵈ，d ≥ 2"""
    return Compound([Circle() for _ in range(d)], weights, 1.0)


def power(space: StateSpace, m: int, weights: Optional[Sequence[float]] = None) -> Compound:
    """m 个相同空间的乘积（多机器人空间）"""
    return Compound([space] * m, weights, 1.0)


def strip_compound(length: float, w2: float, height: float = 1.0) -> Compound:
    """细长矩形 [0,L]×[0,height] 与圆的复合空间，圆分量权重 w2"""
    return Compound([EuclideanL2(2, [(0.0, length), (0.0, height)]), Circle()], [1.0, w2], 1.0)


# ----------------------------------------------------------------------------
# JSON 描述符
# ----------------------------------------------------------------------------

class EuclideanParams(BaseModel):
    """欧氏空间描述参数"""
    d: int = Field(..., ge=1, description="维数")
    bounds: Optional[List[Tuple[float, float]]] = Field(None, description="每个坐标轴的 [lower, upper]，缺省为单位盒")

    @field_validator("bounds")
    @classmethod
    def _check_bounds(cls, value):
        if value is not None and any(lo >= hi for lo, hi in value):
            raise ValueError("每个坐标轴的边界都必须满足 lower < upper")
        return value


class CompoundParams(BaseModel):
    """复合空间描述参数"""
    p: float = Field(1.0, ge=1.0, description="度量指数 p")
    weights: Optional[List[float]] = Field(None, description="子空间权重，缺省全为 1")
    children: List[Dict[str, Any]] = Field(..., min_length=2, description="子空间描述符")


def parse_space(descriptor: Union[str, Dict[str, Any]]) -> StateSpace:
    """从 JSON 描述符构造空间，例如
    {"compound": {"p": 1, "children": [{"l2": {"d": 2}}, {"circle": {}}], "weights": [1.0, 0.5]}}

    另外支持简写：se2 / se3 / torus / power / strip。
    """
    if isinstance(descriptor, str):
        try:
            descriptor = json.loads(descriptor)
        except json.JSONDecodeError as e:
            raise StructuralError(f"空间描述不是合法 JSON：{e}") from e
    if not isinstance(descriptor, dict) or len(descriptor) != 1:
        raise StructuralError(f"空间描述必须是只有一个键的对象：{descriptor!r}")
    (key, params), = descriptor.items()
    params = params or {}
    try:
        if key in ("l2", "l1"):
            spec = EuclideanParams(**params)
            cls = EuclideanL2 if key == "l2" else EuclideanL1
            return cls(spec.d, spec.bounds)
        if key == "circle":
            return Circle()
        if key == "sphere2":
            return Sphere2()
        if key == "so3":
            return SO3()
        if key == "compound":
            spec = CompoundParams(**params)
            return Compound([parse_space(child) for child in spec.children], spec.weights, spec.p)
        if key == "se2":
            return se2(params.get("bounds"), params.get("weights", (1.0, 1.0)))
        if key == "se3":
            return se3(params.get("bounds"), params.get("weights", (1.0, 1.0)))
        if key == "torus":
            return torus(int(params["d"]), params.get("weights"))
        if key == "power":
            return power(parse_space(params["space"]), int(params["m"]), params.get("weights"))
        if key == "strip":
            return strip_compound(float(params.get("length", 10.0)), float(params.get("w2", 1e-3)))
    except ValidationError as e:
        raise StructuralError(f"空间描述参数非法（{key}）：{e}") from e
    except KeyError as e:
        raise StructuralError(f"空间描述缺少字段（{key}）：{e}") from e
    raise StructuralError(f"未知的空间类型：{key}")


def describe_space(space: StateSpace) -> Dict[str, Any]:
    return space.describe()


def space_hash(space: StateSpace) -> str:
    canonical = json.dumps(space.describe(), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canonical.encode("utf-8")).hexdigest()[:12]


def leaves(space: StateSpace) -> List[StateSpace]:
    if isinstance(space, Compound):
        return [leaf for child in space.children for leaf in leaves(child)]
    return [space]


def euclidean_slice(space: StateSpace) -> Optional[Tuple[slice, _Euclidean]]:
    """第一个欧氏叶子在点布局中的切片（障碍物只作用在这部分坐标上）"""
    if isinstance(space, _Euclidean):
        return slice(0, space.size), space
    if isinstance(space, Compound):
        for child, sl in zip(space.children, space.slices):
            found = euclidean_slice(child)
            if found is not None:
                inner, leaf = found
                return slice(sl.start + inner.start, sl.start + inner.stop), leaf
    return None
