"""最近邻索引

两种精确索引：
    LinearScan  对全部点做向量化距离计算，作为正确性基准
    MetricTree  GNAT 风格的度量树（多枢轴 + 距离范围表剪枝），查询结果与 LinearScan 完全一致

结果约定：
    nearest      距离最小者，距离相同取 id 最小
    k_nearest    按 (距离, id) 升序
    radius_near  距离 ≤ r + 1e-12 的全部 id，按 id 升序

索引可以挂一个 PrimitiveLedger，每次公开查询单独计时并计数。
"""
import heapq
from abc import ABC, abstractmethod
from typing import List, Optional, Sequence, Tuple

import numpy as np

from .errors import DomainError, EmptyIndexError, StructuralError
from .ledger import PrimitiveLedger, clock
from .logger_config import setup_logger
from .spaces import Point, StateSpace

logger = setup_logger(__name__)

RADIUS_EPS = 1e-12
PRUNE_SLACK = 1e-9


class NnIndex(ABC):
    """最近邻索引基类（单写者；两次插入之间允许并发只读查询）"""

    kind: str = ""

    def __init__(self, space: StateSpace, ledger: Optional[PrimitiveLedger] = None):
        self.space = space
        self.ledger = ledger
        self._buf = np.empty((16, space.size))
        self._count = 0

    def __len__(self) -> int:
        return self._count

    @property
    def count(self) -> int:
        return self._count

    @property
    def points(self) -> np.ndarray:
        return self._buf[:self._count]

    def point(self, idx: int) -> Point:
        return self._buf[idx]

    def insert(self, p: Point) -> int:
        """追加一个点，返回其 id（等于插入前的点数）"""
        self.space.check(p)
        if self._count == self._buf.shape[0]:
            grown = np.empty((2 * self._buf.shape[0], self.space.size))
            grown[:self._count] = self._buf[:self._count]
            self._buf = grown
        self._buf[self._count] = p
        idx = self._count
        self._count += 1
        self._on_insert(idx)
        return idx

    def extend(self, points: Sequence[Point]) -> List[int]:
        return [self.insert(p) for p in points]

    def _on_insert(self, idx: int) -> None:
        pass

    def _record(self, kind: str, start: int, reported: int) -> None:
        if self.ledger is None:
            return
        self.ledger.t_nn_ns += clock() - start
        setattr(self.ledger, kind, getattr(self.ledger, kind) + 1)
        if kind != "nn":
            self.ledger.reported += reported

    def nearest(self, q: Point) -> int:
        self.space.check(q)
        if self._count == 0:
            raise EmptyIndexError("索引为空，无法查询最近邻")
        start = clock()
        result = self._nearest(q)
        self._record("nn", start, 1)
        return result

    def k_nearest(self, q: Point, k: int) -> List[int]:
        self.space.check(q)
        if k < 1:
            raise DomainError(f"k 必须 ≥ 1，实际 {k}")
        start = clock()
        result = self._k_nearest(q, k) if self._count else []
        self._record("knn", start, len(result))
        return result

    def radius_near(self, q: Point, r: float) -> List[int]:
        self.space.check(q)
        if r < 0:
            raise DomainError(f"半径必须非负，实际 {r}")
        start = clock()
        result = self._radius_near(q, r) if self._count else []
        self._record("rnn", start, len(result))
        return result

    def all_pairs(self, r: float) -> List[Tuple[int, int]]:
        """所有距离 ≤ r 的无序点对 (i<j)，用 n 次 R-NN 查询实现，计一次 AP"""
        if self.ledger is not None:
            self.ledger.ap += 1
        pairs = []
        for i in range(self._count):
            pairs.extend((i, j) for j in self.radius_near(self._buf[i], r) if j > i)
        return pairs

    @abstractmethod
    def _nearest(self, q: Point) -> int:
        pass

    @abstractmethod
    def _k_nearest(self, q: Point, k: int) -> List[int]:
        pass

    @abstractmethod
    def _radius_near(self, q: Point, r: float) -> List[int]:
        pass


def _sorted_k(ids: np.ndarray, dists: np.ndarray, k: int) -> List[int]:
    if len(ids) > k:
        threshold = np.partition(dists, k - 1)[k - 1]
        keep = dists <= threshold
        ids, dists = ids[keep], dists[keep]
    order = np.lexsort((ids, dists))[:k]
    return ids[order].tolist()


class LinearScan(NnIndex):
    """线性扫描"""

    kind = "linear"

    def _distances(self, q: Point) -> np.ndarray:
        return self.space.distance_many(q, self.points)

    def _nearest(self, q: Point) -> int:
        # argmin 返回第一个最小值，即 id 最小者
        return int(np.argmin(self._distances(q)))

    def _k_nearest(self, q: Point, k: int) -> List[int]:
        return _sorted_k(np.arange(self._count), self._distances(q), k)

    def _radius_near(self, q: Point, r: float) -> List[int]:
        return np.flatnonzero(self._distances(q) <= r + RADIUS_EPS).tolist()


class _GnatNode:
    __slots__ = ("leaf_ids", "pivots", "children", "lo", "hi")

    def __init__(self, leaf_ids=None, pivots=None, children=None, lo=None, hi=None):
        self.leaf_ids = leaf_ids
        self.pivots = pivots
        self.children = children
        self.lo = lo
        self.hi = hi


class MetricTree(NnIndex):
    """GNAT 风格度量树

    每个内部节点最多 BRANCHING 个枢轴，从 POOL_SIZE 个候选中按最大最小距离贪心选取；
    其余点归到最近的枢轴下。range 表 lo[i][j] / hi[i][j] 记录枢轴 i 到子树 j（含枢轴 j）
    的距离范围，查询时据三角不等式剪枝。
    新插入的点先放在 pending 列表中线性扫描，超过 max(64, count/2) 时在下一次查询前重建。
    """

    kind = "tree"
    BRANCHING = 8
    POOL_SIZE = 32
    LEAF_SIZE = 16

    def __init__(self, space: StateSpace, ledger: Optional[PrimitiveLedger] = None):
        super().__init__(space, ledger)
        self._root: Optional[_GnatNode] = None
        self._built = 0
        self._pending: List[int] = []

    def _on_insert(self, idx: int) -> None:
        self._pending.append(idx)

    def _maybe_rebuild(self) -> None:
        if len(self._pending) > max(64, self._count // 2):
            self.rebuild()

    def rebuild(self) -> None:
        ids = np.arange(self._count)
        self._root = self._build(ids) if self._count else None
        self._built = self._count
        self._pending = []
        logger.debug(f"度量树重建完成，共 {self._count} 个点")

    def _dist(self, q: Point, ids: np.ndarray) -> np.ndarray:
        return self.space.distance_many(q, self._buf[ids])

    def _build(self, ids: np.ndarray) -> _GnatNode:
        if len(ids) <= self.LEAF_SIZE:
            return _GnatNode(leaf_ids=ids)

        rng = np.random.default_rng(len(ids))
        pool = ids if len(ids) <= self.POOL_SIZE else np.sort(rng.choice(ids, self.POOL_SIZE, replace=False))
        chosen = [0]
        gap = self._dist(self._buf[pool[0]], pool)
        while len(chosen) < self.BRANCHING:
            j = int(np.argmax(gap))
            if gap[j] <= 0.0:
                break
            chosen.append(j)
            gap = np.minimum(gap, self._dist(self._buf[pool[j]], pool))
        if len(chosen) == 1:
            # 候选点全部重合
            return _GnatNode(leaf_ids=ids)

        pivots = pool[chosen]
        rest = np.setdiff1d(ids, pivots)
        k = len(pivots)
        to_rest = np.vstack([self._dist(self._buf[p], rest) for p in pivots])
        to_pivots = np.vstack([self._dist(self._buf[p], pivots) for p in pivots])
        owner = np.argmin(to_rest, axis=0)

        lo = np.empty((k, k))
        hi = np.empty((k, k))
        children: List[Optional[_GnatNode]] = []
        for j in range(k):
            mask = owner == j
            members = rest[mask]
            for i in range(k):
                values = np.append(to_rest[i, mask], to_pivots[i, j])
                lo[i, j] = values.min()
                hi[i, j] = values.max()
            children.append(self._build(members) if len(members) else None)
        return _GnatNode(pivots=pivots, children=children, lo=lo, hi=hi)

    def _radius_near(self, q: Point, r: float) -> List[int]:
        self._maybe_rebuild()
        found: List[int] = []
        limit = r + RADIUS_EPS
        if self._root is not None:
            self._range(self._root, q, limit, found)
        if self._pending:
            pending = np.asarray(self._pending)
            found.extend(pending[self._dist(q, pending) <= limit].tolist())
        return sorted(found)

    def _range(self, node: _GnatNode, q: Point, limit: float, found: List[int]) -> None:
        if node.leaf_ids is not None:
            found.extend(node.leaf_ids[self._dist(q, node.leaf_ids) <= limit].tolist())
            return
        d = self._dist(q, node.pivots)
        found.extend(node.pivots[d <= limit].tolist())
        for j, child in enumerate(node.children):
            if child is None:
                continue
            if np.any(d - limit > node.hi[:, j] + PRUNE_SLACK) or np.any(d + limit < node.lo[:, j] - PRUNE_SLACK):
                continue
            self._range(child, q, limit, found)

    def _k_nearest(self, q: Point, k: int) -> List[int]:
        self._maybe_rebuild()
        # 大顶堆，元素为 (-距离, -id)，堆顶是当前第 k 个
        heap: List[Tuple[float, int]] = []

        def consider(ids: np.ndarray, dists: np.ndarray) -> None:
            for idx, dist in zip(ids.tolist(), dists.tolist()):
                if len(heap) < k:
                    heapq.heappush(heap, (-dist, -idx))
                elif (dist, idx) < (-heap[0][0], -heap[0][1]):
                    heapq.heapreplace(heap, (-dist, -idx))

        def bound() -> float:
            return np.inf if len(heap) < k else -heap[0][0]

        def visit(node: _GnatNode) -> None:
            if node.leaf_ids is not None:
                consider(node.leaf_ids, self._dist(q, node.leaf_ids))
                return
            d = self._dist(q, node.pivots)
            consider(node.pivots, d)
            lower = np.maximum(
                np.max(node.lo - d[:, np.newaxis], axis=0),
                np.max(d[:, np.newaxis] - node.hi, axis=0),
            )
            for j in np.argsort(lower, kind="stable"):
                child = node.children[j]
                if child is None:
                    continue
                if lower[j] > bound() + PRUNE_SLACK:
                    break
                visit(child)

        if self._pending:
            pending = np.asarray(self._pending)
            consider(pending, self._dist(q, pending))
        if self._root is not None:
            visit(self._root)
        return [-idx for _, idx in sorted(heap, key=lambda item: (-item[0], -item[1]))]

    def _nearest(self, q: Point) -> int:
        return self._k_nearest(q, 1)[0]


INDEX_KINDS = {"linear": LinearScan, "tree": MetricTree}


def make_index(kind: str, space: StateSpace, ledger: Optional[PrimitiveLedger] = None) -> NnIndex:
    try:
        return INDEX_KINDS[kind](space, ledger)
    except KeyError:
        raise StructuralError(f"未知的最近邻索引类型：{kind}，可选 {sorted(INDEX_KINDS)}") from None


def all_pairs_near(
    points: Sequence[Point],
    space: StateSpace,
    r: float,
    kind: str = "linear",
    ledger: Optional[PrimitiveLedger] = None,
) -> List[Tuple[int, int]]:
    """对一组点建索引，返回所有距离 ≤ r 的点对 (i<j)"""
    if r < 0:
        raise DomainError(f"半径必须非负，实际 {r}")
    index = make_index(kind, space, ledger)
    index.extend(points)
    return index.all_pairs(r)
