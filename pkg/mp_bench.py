#!/usr/bin/env python3
"""运动规划基准命令行与统一 MCP 服务器

子命令：
    volume   计算球体积（闭式 / 数值积分 / 蒙特卡洛）
    plan     运行一次规划器，输出一行结果
    sweep    按实验配置运行参数扫描
    preset   导出预置实验配置
    serve    聚合所有 MCP 工具，以 stdio / SSE / streamable-http 模式提供服务

配置错误或文件读写错误时退出码为 2；扫描完成即返回 0，即使部分试验失败。
"""
import csv
import json
import sys
from pathlib import Path
from typing import Literal, Optional, Tuple

import click

# 确保 src 和 src/mpbench 目录都在路径中，lib 模块可以被直接导入
PROJECT_ROOT = Path(__file__).resolve().parent
SRC_DIR = PROJECT_ROOT / "src"
PACKAGE_DIR = SRC_DIR / "mpbench"
for path in (SRC_DIR, PACKAGE_DIR):
    if path.exists() and str(path) not in sys.path:
        sys.path.insert(0, str(path))

# 日志输出到 stderr，避免干扰 stdout 上的 CSV 和 MCP 协议通信
import logging
logging.basicConfig(
    level=logging.WARNING,
    stream=sys.stderr,
    format='%(levelname)s:%(name)s:%(message)s'
)

from lib.errors import BenchError, ConfigError
from lib.experiments import (
    RESULT_COLUMNS,
    VOLUME_COLUMNS,
    parse_strategy,
    plan_once,
    preset as load_preset,
    run_sweep,
    scenario_spec,
    validate_config,
    volume_rows,
    write_rows,
)
from lib.service_config import SERVICE_CONFIG
from lib.spaces import parse_space

EXIT_CONFIG_ERROR = 2


def _fail(message: str) -> None:
    click.echo(f"错误：{message}", err=True)
    sys.exit(EXIT_CONFIG_ERROR)


def _read_text(value: str) -> str:
    """以 @ 开头的参数视为文件路径"""
    if value.startswith("@"):
        return Path(value[1:]).read_text(encoding="utf-8")
    return value


@click.group()
def cli() -> None:
    """运动规划原语（NN / CD）耗时基准"""


@cli.command()
@click.option("--space", "space_text", required=True, help='空间描述 JSON，或 @文件路径')
@click.option("--radius", "radii", required=True, multiple=True, type=float, help="球半径，可重复给出")
@click.option("--mc-trials", default=SERVICE_CONFIG.mc_trials, type=int, help="蒙特卡洛采样次数，0 表示不做")
@click.option("--seed", default=0, type=int, help="蒙特卡洛随机种子")
def volume(space_text: str, radii: Tuple[float, ...], mc_trials: int, seed: int) -> None:
    """输出 CSV：space_hash,r,closed,numeric,mc,mc_stderr"""
    try:
        space = parse_space(_read_text(space_text))
        rows = volume_rows(space, radii, mc_trials, seed)
    except (BenchError, OSError) as e:
        _fail(str(e))
    writer = csv.writer(sys.stdout, lineterminator="\n")
    writer.writerow(VOLUME_COLUMNS)
    for row in rows:
        writer.writerow(["" if row[c] is None else row[c] for c in VOLUME_COLUMNS])


@cli.command()
@click.option("--planner", required=True, type=click.Choice(["sprm", "lazy-sprm", "rrt-star"]))
@click.option("--scenario", "scenario_text", required=True, help="场景预置名、场景 JSON 或 @文件路径")
@click.option("--strategy", default="radial", type=click.Choice(["radial", "knn"]))
@click.option("--heuristic", is_flag=True, help="启用投影半径启发式（仅 radial）")
@click.option("--eta", default=None, type=float, help="调节参数 η，缺省取配置")
@click.option("--nn", "nn_kind", default=None, type=click.Choice(["linear", "tree"]))
@click.option("--n", "n", default=1000, type=int, help="PRM 类为无碰撞采样点数，RRT* 为迭代次数")
@click.option("--seed", required=True, type=int)
@click.option("--out", default=None, type=click.Path(dir_okay=False, path_type=Path), help="结果 CSV，缺省输出到 stdout")
def plan(planner: str, scenario_text: str, strategy: str, heuristic: bool, eta: Optional[float],
         nn_kind: Optional[str], n: int, seed: int, out: Optional[Path]) -> None:
    """运行一次规划器"""
    try:
        kind, params = scenario_spec(_read_text(scenario_text))
        label = "radial+h" if strategy == "radial" and heuristic else strategy
        chosen = parse_strategy(label)
        if eta is not None and strategy == "radial":
            chosen = chosen.model_copy(update={"eta": eta})
        row = plan_once(planner, kind, params, chosen, n, seed, nn_kind)
        if out is not None:
            write_rows([row], out)
    except (BenchError, OSError) as e:
        _fail(str(e))
    if out is None:
        writer = csv.DictWriter(sys.stdout, fieldnames=RESULT_COLUMNS, lineterminator="\n")
        writer.writeheader()
        writer.writerow(row.to_csv())


@cli.command()
@click.option("--config", "config_path", required=True, type=click.Path(dir_okay=False, path_type=Path))
@click.option("--workers", default=None, type=int, help="并行进程数，缺省取配置")
@click.option("--out", default=None, type=click.Path(dir_okay=False, path_type=Path), help="覆盖配置中的输出路径")
@click.option("--quiet", is_flag=True, help="不显示进度条")
def sweep(config_path: Path, workers: Optional[int], out: Optional[Path], quiet: bool) -> None:
    """按实验配置运行参数扫描"""
    try:
        config = validate_config(config_path)
        output = out or config.output or SERVICE_CONFIG.output_dir / f"{config.name}.csv"
        rows = run_sweep(config, workers=workers, output=output, progress=not quiet)
    except (BenchError, OSError) as e:
        _fail(str(e))
    failed = sum(not row.success for row in rows)
    click.echo(f"完成 {len(rows)} 个试验（{failed} 个未找到解），结果写入 {output}", err=True)


@cli.command()
@click.option("--name", required=True, help="预置实验名称")
@click.option("--out", default=None, type=click.Path(dir_okay=False, path_type=Path), help="配置文件路径，缺省输出到 stdout")
def preset(name: str, out: Optional[Path]) -> None:
    """导出预置实验配置（JSON）"""
    try:
        text = json.dumps(load_preset(name).model_dump(mode="json"), indent=2, ensure_ascii=False)
        if out is not None:
            out.parent.mkdir(parents=True, exist_ok=True)
            out.write_text(text + "\n", encoding="utf-8")
    except (ConfigError, OSError) as e:
        _fail(str(e))
    if out is None:
        click.echo(text)


def build_server():
    """把各子服务的工具聚合到一个 FastMCP 服务器"""
    from fastmcp import FastMCP

    from mpbench.plan_mcp import mcp as plan_mcp
    from mpbench.sweep_mcp import mcp as sweep_mcp
    from mpbench.volume_mcp import mcp as volume_mcp

    server = FastMCP(name="MpBench Unified MCP Server")
    total_tools = 0
    # FastMCP 使用 _tool_manager._tools 字典存储工具
    for service_mcp in (volume_mcp, plan_mcp, sweep_mcp):
        tools = getattr(getattr(service_mcp, "_tool_manager", None), "_tools", None) or {}
        for tool_name, tool_obj in tools.items():
            server.add_tool(tool_obj)
            total_tools += 1
            print(f"Added tool: {tool_name}", file=sys.stderr)
    print(f"Successfully loaded {total_tools} tools from all MCP services", file=sys.stderr)
    return server


@cli.command()
@click.option("--stdio", "run_mode", flag_value="stdio", default=True, help="Run in stdio mode")
@click.option("--sse", "run_mode", flag_value="sse", help="Run in SSE mode")
@click.option("--streamable-http", "run_mode", flag_value="streamable-http", help="Run in streamable-http mode")
@click.option("--host", default="127.0.0.1", help="Host to bind to (for SSE/streamable-http mode, default: 127.0.0.1)")
@click.option("--port", default=7140, type=int, help="Port to bind to (for SSE/streamable-http mode, default: 7140)")
@click.option("--path", default="/mcp/unified", help="Path for SSE/streamable-http endpoint (default: /mcp/unified)")
def serve(run_mode: Literal["stdio", "sse", "streamable-http"], host: str, port: int, path: str) -> None:
    """Run unified MCP server in stdio, SSE, or streamable-http mode"""
    server = build_server()
    if run_mode == "stdio":
        # stdout 留给 MCP 协议，日志只写 stderr
        server.run(transport="stdio")
    else:
        print(f"Starting MCP server in {run_mode} mode on {host}:{port}{path}", file=sys.stderr)
        server.run(transport=run_mode, host=host, port=port, path=path)


if __name__ == "__main__":
    cli()
