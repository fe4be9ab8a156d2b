from typing import Any, Dict, Literal, Optional

import click
from fastmcp import Context, FastMCP
from pydantic import Field

from lib.errors import BenchResultCode
from lib.logger_config import setup_logger
from lib.mcp_helper import BenchMCPHelper, BenchRequest, BenchResponse
from lib.experiments import parse_strategy, volume_rows
from lib.planners import resolve_strategy
from lib.spaces import parse_space
from lib.volumes import ball_volume_report

logger = setup_logger(__name__)
mcp = FastMCP("MpBenchVolumeSubMCP")

helper = BenchMCPHelper(BenchResultCode.VOLUME_FAILED)


class BallVolumeRequest(BenchRequest):
    space: Dict[str, Any]
    radius: float
    mc_trials: int = 0
    seed: int = 0


class ConnectionRadiusRequest(BenchRequest):
    space: Dict[str, Any]
    n: int
    strategy: str = "radial"
    eta: Optional[float] = None
    mu_free: Optional[float] = None


def _ball_volume(request: BallVolumeRequest) -> Dict[str, Any]:
    space = parse_space(request.space)
    report = ball_volume_report(space, request.radius)
    row = volume_rows(space, [request.radius], request.mc_trials, request.seed)[0]
    return {**row, "value": report.value, "method": report.method, "clamped": report.clamped}


def _connection_radius(request: ConnectionRadiusRequest) -> Dict[str, Any]:
    space = parse_space(request.space)
    strategy = parse_strategy(request.strategy)
    if request.eta is not None and strategy.kind == "radial":
        strategy = strategy.model_copy(update={"eta": request.eta})
    resolution = resolve_strategy(strategy, space, request.n, request.mu_free)
    return {"radius": resolution.radius, "k": resolution.k, "projected": resolution.projected}


@mcp.tool(
    tags={"mpbench_volume"}
)
async def ball_volume(
    space: Dict[str, Any] = Field(..., description='构型空间描述，例如 {"l2": {"d": 2}} 或 {"se2": {}}'),
    radius: float = Field(..., ge=0.0, description="球半径"),
    mc_trials: int = Field(0, ge=0, description="蒙特卡洛采样次数，0 表示不做蒙特卡洛估计"),
    seed: int = Field(0, description="蒙特卡洛随机种子"),
    ctx: Context | None = None,
) -> BenchResponse:
    """
    计算构型空间中半径为 radius 的球体积

    功能描述：
        按 闭式公式 -> 分解积分 -> 蒙特卡洛 的顺序选择计算方法，同时给出闭式、数值积分
        和蒙特卡洛三列结果，便于交叉核对。

    返回值:
        BenchResponse:
            - data.value: 最终采用的体积
            - data.method: closed / numeric / monte_carlo
            - data.closed / data.numeric / data.mc / data.mc_stderr: 各方法结果，不可用时为 null
            - data.space_hash: 空间描述的哈希
    """
    request = BallVolumeRequest(space=space, radius=radius, mc_trials=mc_trials, seed=seed)
    return await helper.execute(request, _ball_volume)


@mcp.tool(
    tags={"mpbench_volume"}
)
async def connection_radius(
    space: Dict[str, Any] = Field(..., description="构型空间描述"),
    n: int = Field(..., ge=2, description="路图节点数"),
    strategy: Literal["radial", "radial+h", "knn"] = Field("radial", description="连接策略"),
    eta: Optional[float] = Field(None, ge=1.0, description="调节参数 η，缺省取配置"),
    mu_free: Optional[float] = Field(None, gt=0.0, description="自由空间测度，缺省取空间总测度"),
    ctx: Context | None = None,
) -> BenchResponse:
    """
    计算渐近最优所需的连接半径 r_n 或近邻数 k_n

    参数说明：
        strategy: radial 给出半径；radial+h 在满足条件的复合空间上启用投影半径启发式；knn 给出 k

    返回值:
        BenchResponse:
            - data.radius: 半径（knn 时为 null）
            - data.k: 近邻数（radial 时为 null）
            - data.projected: 是否采用了投影半径
    """
    request = ConnectionRadiusRequest(space=space, n=n, strategy=strategy, eta=eta, mu_free=mu_free)
    return await helper.execute(request, _connection_radius)


@click.command()
@click.option("--stdio", "run_mode", flag_value="stdio", default=True, help="Run in stdio mode")
@click.option("--sse", "run_mode", flag_value="sse", help="Run in SSE mode")
@click.option("--host", default="127.0.0.1", help="Host to bind to (for SSE mode, default: 127.0.0.1)")
@click.option("--port", default=7140, type=int, help="Port to bind to (for SSE mode, default: 7140)")
@click.option("--path", default="/mcp/volume", help="Path for SSE endpoint (default: /mcp/volume)")
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
