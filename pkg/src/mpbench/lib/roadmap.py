"""路图与最短路

Roadmap 是无向图：节点为构型点，边权等于两点的度量距离，边带有 unknown / free / blocked 状态。
同一条边在两个端点的邻接表中共享同一个 Edge 对象，状态修改自动对两端生效。
"""
import heapq
import math
from dataclasses import dataclass
from enum import Enum
from typing import Callable, Dict, Iterator, List, Optional, Tuple

from .errors import StructuralError
from .spaces import Point, StateSpace


class EdgeStatus(str, Enum):
    UNKNOWN = "unknown"
    FREE = "free"
    BLOCKED = "blocked"


@dataclass
class Edge:
    weight: float
    status: EdgeStatus = EdgeStatus.UNKNOWN


EdgeFilter = Callable[[int, int, Edge], bool]

COST_TOL = 1e-12


def free_edges(u: int, v: int, edge: Edge) -> bool:
    return edge.status == EdgeStatus.FREE


def unblocked_edges(u: int, v: int, edge: Edge) -> bool:
    return edge.status != EdgeStatus.BLOCKED


class Roadmap:
    def __init__(self, space: StateSpace):
        self.space = space
        self.nodes: List[Point] = []
        self._adj: List[Dict[int, Edge]] = []

    def __len__(self) -> int:
        return len(self.nodes)

    def add_node(self, p: Point) -> int:
        self.nodes.append(p)
        self._adj.append({})
        return len(self.nodes) - 1

    def add_edge(self, u: int, v: int, status: EdgeStatus = EdgeStatus.UNKNOWN,
                 weight: Optional[float] = None) -> Edge:
        if u == v:
            raise StructuralError(f"不允许自环：{u}")
        if weight is None:
            weight = self.space.distance(self.nodes[u], self.nodes[v])
        edge = Edge(weight, status)
        self._adj[u][v] = edge
        self._adj[v][u] = edge
        return edge

    def remove_edge(self, u: int, v: int) -> None:
        del self._adj[u][v]
        del self._adj[v][u]

    def edge(self, u: int, v: int) -> Optional[Edge]:
        return self._adj[u].get(v)

    def neighbors(self, u: int) -> Dict[int, Edge]:
        return self._adj[u]

    def edges(self) -> Iterator[Tuple[int, int, Edge]]:
        """按 (u, v) 升序遍历每条边一次（u < v）"""
        for u, adj in enumerate(self._adj):
            for v in sorted(adj):
                if u < v:
                    yield u, v, adj[v]

    def edge_counts(self) -> Dict[str, int]:
        counts = {status.value: 0 for status in EdgeStatus}
        for _, _, edge in self.edges():
            counts[edge.status.value] += 1
        return counts

    def path_cost(self, path: List[int]) -> float:
        return sum(self._adj[u][v].weight for u, v in zip(path[:-1], path[1:]))


def _dijkstra(roadmap: Roadmap, source: int, edge_filter: EdgeFilter) -> List[float]:
    dist = [math.inf] * len(roadmap)
    dist[source] = 0.0
    heap = [(0.0, source)]
    while heap:
        d, u = heapq.heappop(heap)
        if d > dist[u]:
            continue
        for v, edge in roadmap.neighbors(u).items():
            if not edge_filter(u, v, edge):
                continue
            nd = d + edge.weight
            if nd < dist[v]:
                dist[v] = nd
                heapq.heappush(heap, (nd, v))
    return dist


def shortest_path(
    roadmap: Roadmap,
    src: int,
    dst: int,
    edge_filter: EdgeFilter = free_edges,
) -> Tuple[Optional[List[int]], float]:
    """
    Dijkstra 最短路，代价相同时取 id 序列字典序最小的路径

    先从 dst 反向求出各点到 dst 的距离，再从 src 出发每一步选满足
    dist(u) = w(u,v) + dist(v) 的最小 id 邻居。

    Args:
        roadmap: 路图
        src: 起点 id
        dst: 终点 id
        edge_filter: 边过滤条件，默认只走 free 边

    Returns:
        Tuple[Optional[List[int]], float]: (路径 id 列表, 代价)；src == dst 返回 ([], 0)；不可达返回 (None, inf)
    """
    if not (0 <= src < len(roadmap) and 0 <= dst < len(roadmap)):
        raise StructuralError(f"节点不存在：src={src}, dst={dst}")
    if src == dst:
        return [], 0.0
    to_dst = _dijkstra(roadmap, dst, edge_filter)
    if math.isinf(to_dst[src]):
        return None, math.inf

    path = [src]
    visited = {src}
    u = src
    while u != dst:
        nxt = None
        for v in sorted(roadmap.neighbors(u)):
            edge = roadmap.neighbors(u)[v]
            if v in visited or not edge_filter(u, v, edge):
                continue
            if abs(edge.weight + to_dst[v] - to_dst[u]) <= COST_TOL * max(1.0, to_dst[u]):
                nxt = v
                break
        if nxt is None:
            # 浮点误差导致找不到严格相等的后继时，退回到代价最小的邻居
            candidates = [
                (edge.weight + to_dst[v], v) for v, edge in roadmap.neighbors(u).items()
                if v not in visited and edge_filter(u, v, edge) and not math.isinf(to_dst[v])
            ]
            if not candidates:
                raise StructuralError(f"节点 {u} 没有可用的后继，边过滤条件与最短路距离不一致")
            nxt = min(candidates)[1]
        path.append(nxt)
        visited.add(nxt)
        u = nxt
    return path, roadmap.path_cost(path)
