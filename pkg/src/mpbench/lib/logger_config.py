"""日志配置模块

提供统一的日志配置，使用 Python 标准库 logging。
日志统一输出到 stderr，避免干扰 stdout 上的 CSV 输出和 MCP stdio 协议通信。
"""
import inspect
import logging
import sys
from typing import Optional

from .service_config import SERVICE_CONFIG

# 日志级别取自 MPBENCH_LOG_LEVEL（环境变量或 .env），默认为 INFO
LOG_LEVEL = getattr(logging, SERVICE_CONFIG.log_level.upper(), logging.INFO)


def setup_logger(name: Optional[str] = None, level: Optional[int] = None) -> logging.Logger:
    """
    设置并返回一个 logger 实例

    Args:
        name: logger 名称，默认为调用模块的名称
        level: 日志级别，默认为 LOG_LEVEL

    Returns:
        logging.Logger: 配置好的 logger 实例
    """
    if name is None:
        # 自动获取调用模块的名称
        frame = inspect.currentframe().f_back
        name = frame.f_globals.get("__name__", "root")

    logger = logging.getLogger(name)

    # 如果 logger 已经有 handler，直接返回（避免重复配置）
    if logger.handlers:
        return logger

    logger.setLevel(level or LOG_LEVEL)

    console_handler = logging.StreamHandler(sys.stderr)
    console_handler.setLevel(level or LOG_LEVEL)
    formatter = logging.Formatter(
        "%(asctime)s - %(name)s - %(levelname)s - %(message)s",
        datefmt="%Y-%m-%d %H:%M:%S",
    )
    console_handler.setFormatter(formatter)
    logger.addHandler(console_handler)

    # 防止日志向上传播到 root logger
    logger.propagate = False

    return logger
