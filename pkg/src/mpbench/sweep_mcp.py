from typing import Any, Dict, Literal, Optional

import click
from fastmcp import Context, FastMCP
from pydantic import Field

from lib.errors import BenchResultCode
from lib.experiments import PRESETS, preset as load_preset, run_sweep, summarize, trend, validate_config
from lib.logger_config import setup_logger
from lib.mcp_helper import BenchMCPHelper, BenchRequest, BenchResponse

logger = setup_logger(__name__)
mcp = FastMCP("MpBenchSweepSubMCP")

helper = BenchMCPHelper(BenchResultCode.SWEEP_FAILED)


class PresetRequest(BenchRequest):
    name: str


class SweepRequest(BenchRequest):
    config: Dict[str, Any]
    workers: Optional[int] = None
    include_rows: bool = False


def _preset(request: PresetRequest) -> Dict[str, Any]:
    return load_preset(request.name).model_dump(mode="json")


def _sweep(request: SweepRequest) -> Dict[str, Any]:
    config = validate_config(request.config)
    rows = run_sweep(config, workers=request.workers, progress=False)
    series = config.series.key if config.series else None
    summary = summarize(rows, config.axis, series)
    series_values = list(dict.fromkeys(record["series"] for record in summary))
    data = {
        "trials": len(rows),
        "failed": sum(not row.success for row in rows),
        "summary": summary,
        "chi_trend": {str(value): trend(summary, "chi", value) for value in series_values},
        "output": str(config.output) if config.output else None,
    }
    if request.include_rows:
        data["rows"] = [row.model_dump() for row in rows]
    return data


@mcp.tool(
    tags={"mpbench_sweep"}
)
async def preset(
    name: str = Field(..., description=f"预置实验名称，可选 {sorted(PRESETS)}"),
    ctx: Context | None = None,
) -> BenchResponse:
    """
    获取预置实验配置

    返回值:
        BenchResponse: data 为可直接传给 sweep 工具的实验配置
    """
    return await helper.execute(PresetRequest(name=name), _preset)


@mcp.tool(
    tags={"mpbench_sweep"}
)
async def sweep(
    config: Dict[str, Any] = Field(..., description="实验配置（与 preset 工具返回的格式相同）"),
    workers: Optional[int] = Field(None, ge=1, description="并行进程数，缺省取配置"),
    include_rows: bool = Field(False, description="是否在返回值中附带每个试验的结果行"),
    ctx: Context | None = None,
) -> BenchResponse:
    """
    运行参数扫描

    功能描述：
        对每个 (series 值, 扫描值, 种子) 运行一次规划器，单个试验失败只记为 success=false，
        不会中断扫描。配置中给出 output 时同时写结果 CSV、汇总 CSV 和 χ 绘图数据。

    返回值:
        BenchResponse:
            - data.summary: 每组的中位数与 20/80 百分位
            - data.chi_trend: 每条曲线上 χ 中位数对扫描值的 Spearman 系数
            - data.failed: 未找到解的试验数
    """
    request = SweepRequest(config=config, workers=workers, include_rows=include_rows)
    return await helper.execute(request, _sweep)


@click.command()
@click.option("--stdio", "run_mode", flag_value="stdio", default=True, help="Run in stdio mode")
@click.option("--sse", "run_mode", flag_value="sse", help="Run in SSE mode")
@click.option("--host", default="127.0.0.1", help="Host to bind to (for SSE mode, default: 127.0.0.1)")
@click.option("--port", default=7142, type=int, help="Port to bind to (for SSE mode, default: 7142)")
@click.option("--path", default="/mcp/sweep", help="Path for SSE endpoint (default: /mcp/sweep)")
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
