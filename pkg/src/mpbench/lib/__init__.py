"""运动规划基准公共库

提供构型空间、球体积、最近邻索引、碰撞检测、规划器与实验扫描的统一接口
"""
from .errors import (
    BenchError,
    BenchResultCode,
    ConfigError,
    DomainError,
    EmptyIndexError,
    GenerationError,
    InfeasibleOracleError,
    PreconditionError,
    StructuralError,
    UndefinedRatioError,
    UnsupportedOperationError,
)
from .mcp_helper import BenchMCPHelper, BenchRequest, BenchResponse
from .spaces import StateSpace, Compound, parse_space, describe_space, space_hash
from .volumes import ball_volume, sphere_surface, connection_radius, knn_count, effective_radius, RadiusParams
from .ledger import PrimitiveLedger, chi, time_breakdown
from .nn import LinearScan, MetricTree, make_index
from .collision import Scenario, CollisionChecker, make_scenario
from .planners import (
    KnnStrategy,
    PlanResult,
    RadialStrategy,
    lazy_sprm_star,
    rrt_star,
    run_planner,
    sprm_star,
)
from .experiments import ExperimentConfig, ResultRow, emit_plot_data, preset, run_sweep, summarize

__all__ = [
    "BenchError",
    "BenchResultCode",
    "ConfigError",
    "DomainError",
    "EmptyIndexError",
    "GenerationError",
    "InfeasibleOracleError",
    "PreconditionError",
    "StructuralError",
    "UndefinedRatioError",
    "UnsupportedOperationError",
    "BenchMCPHelper",
    "BenchRequest",
    "BenchResponse",
    "StateSpace",
    "Compound",
    "parse_space",
    "describe_space",
    "space_hash",
    "ball_volume",
    "sphere_surface",
    "connection_radius",
    "knn_count",
    "effective_radius",
    "RadiusParams",
    "PrimitiveLedger",
    "chi",
    "time_breakdown",
    "LinearScan",
    "MetricTree",
    "make_index",
    "Scenario",
    "CollisionChecker",
    "make_scenario",
    "KnnStrategy",
    "PlanResult",
    "RadialStrategy",
    "lazy_sprm_star",
    "rrt_star",
    "run_planner",
    "sprm_star",
    "ExperimentConfig",
    "ResultRow",
    "emit_plot_data",
    "preset",
    "run_sweep",
    "summarize",
]
