from typing import Any, Dict, Literal, Optional

import click
from fastmcp import Context, FastMCP
from pydantic import Field

from lib.collision import make_scenario, validate_path
from lib.errors import BenchResultCode
from lib.experiments import parse_strategy
from lib.ledger import time_breakdown
from lib.logger_config import setup_logger
from lib.mcp_helper import BenchMCPHelper, BenchRequest, BenchResponse
from lib.planners import run_planner

logger = setup_logger(__name__)
mcp = FastMCP("MpBenchPlanSubMCP")

helper = BenchMCPHelper(BenchResultCode.PLAN_FAILED)


class PlanRequest(BenchRequest):
    planner: str
    scenario: str
    scenario_params: Dict[str, Any] = {}
    strategy: str = "radial"
    eta: Optional[float] = None
    n: int = 1000
    seed: int = 0
    nn_kind: Optional[str] = None


def _plan(request: PlanRequest) -> Dict[str, Any]:
    scenario = make_scenario(request.scenario, request.scenario_params, request.seed)
    strategy = parse_strategy(request.strategy)
    if request.eta is not None and strategy.kind == "radial":
        strategy = strategy.model_copy(update={"eta": request.eta})
    result = run_planner(request.planner, scenario, request.n, strategy, request.seed, nn_kind=request.nn_kind)
    data = result.summary()
    ledger = result.ledger
    data["chi"] = ledger.t_nn_ns / ledger.t_cd_ns if ledger.t_cd_ns > 0 else None
    data["time_breakdown"] = time_breakdown(ledger)
    data["path_valid"] = validate_path(scenario, result.path) if result.success else None
    data["scenario"] = scenario.describe()
    logger.info(f"{request.planner} 规划完成: success={result.success} cost={data['cost']}")
    return data


@mcp.tool(
    tags={"mpbench_plan"}
)
async def plan(
    planner: Literal["sprm", "lazy-sprm", "rrt-star"] = Field(..., description="规划器"),
    scenario: Literal["hypercube", "segments", "strip", "freespace"] = Field(..., description="场景类型"),
    scenario_params: Dict[str, Any] = Field(default_factory=dict, description='场景参数，例如 {"d": 2, "mu": 0.25}'),
    strategy: Literal["radial", "radial+h", "knn"] = Field("radial", description="连接策略"),
    eta: Optional[float] = Field(None, ge=1.0, description="调节参数 η"),
    n: int = Field(1000, ge=1, description="PRM 类为无碰撞采样点数，RRT* 为迭代次数"),
    seed: int = Field(0, description="随机种子"),
    nn_kind: Optional[Literal["linear", "tree"]] = Field(None, description="最近邻索引类型，缺省取配置"),
    ctx: Context | None = None,
) -> BenchResponse:
    """
    在指定场景上运行一次规划器，返回路径、代价和原语账本

    功能描述：
        计数（nn / rnn / knn / ap / cd / lp / cd_in_lp）对相同参数和种子完全确定；
        耗时列受机器负载影响。χ = t_nn / t_cd，CD 耗时为 0 时为 null。

    返回值:
        BenchResponse:
            - data.success / data.cost / data.path
            - data.ledger: 原语计数与耗时（纳秒）
            - data.roadmap_stats: 路图统计（节点数、边状态、平均度等）
            - data.chi / data.time_breakdown
            - data.path_valid: 以半步长重新检查路径是否无碰撞
    """
    request = PlanRequest(planner=planner, scenario=scenario, scenario_params=scenario_params,
                          strategy=strategy, eta=eta, n=n, seed=seed, nn_kind=nn_kind)
    return await helper.execute(request, _plan)


@click.command()
@click.option("--stdio", "run_mode", flag_value="stdio", default=True, help="Run in stdio mode")
@click.option("--sse", "run_mode", flag_value="sse", help="Run in SSE mode")
@click.option("--host", default="127.0.0.1", help="Host to bind to (for SSE mode, default: 127.0.0.1)")
@click.option("--port", default=7141, type=int, help="Port to bind to (for SSE mode, default: 7141)")
@click.option("--path", default="/mcp/plan", help="Path for SSE endpoint (default: /mcp/plan)")
def main(run_mode: Literal["stdio", "sse"], host: str, port: int, path: str) -> None:
    """Run MCP server in stdio or SSE mode"""
    if run_mode == "sse":
        logger.info(f"Starting MCP server in SSE mode on {host}:{port}{path}")
        mcp.run(transport="sse", host=host, port=port, path=path)
    else:
        logger.info("Starting MCP server in stdio mode")
        mcp.run(transport="stdio")


if __name__ == "__main__":
    main()
