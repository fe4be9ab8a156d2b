"""MCP Helper基类

每个tool对应一个BenchRequest、一个BenchResponse和一次BenchMCPHelper.execute调用。
引擎代码是同步、CPU 密集的，execute 把它放到工作线程中运行，并把库异常统一转换为结果码。
"""
from typing import Any, Callable, Dict, Optional

import anyio
from pydantic import BaseModel

from .errors import BenchError, BenchResultCode, ConfigError, StructuralError
from .logger_config import setup_logger

logger = setup_logger(__name__)


class BenchRequest(BaseModel):
    """MCP请求参数基类

    每个MCP工具可以继承此类并添加自己的参数字段
    """
    pass


class BenchResponse(BaseModel):
    """MCP响应基类"""
    code: str
    message: str = ""
    data: Any = None


class BenchMCPHelper:
    """MCP Helper

    Args:
        failure_code: 引擎报错时使用的结果码，例如 BenchResultCode.PLAN_FAILED
    """

    def __init__(self, failure_code: str):
        self.failure_code = failure_code

    async def execute(self, request: BenchRequest, func: Callable[[BenchRequest], Dict[str, Any]]) -> BenchResponse:
        """
        在工作线程中执行 func(request)，返回统一格式的响应

        Args:
            request: 已校验的请求参数
            func: 同步执行函数，返回可 JSON 序列化的数据

        Returns:
            BenchResponse: 成功时 data 为 func 的返回值
        """
        try:
            data = await anyio.to_thread.run_sync(func, request)
            return BenchResponse(code=BenchResultCode.SUCCESS, message="", data=data)
        except (ConfigError, StructuralError) as e:
            logger.error(f"请求参数非法: {e}")
            return BenchResponse(code=BenchResultCode.CONFIG_ERROR, message=f"参数错误：{e}")
        except BenchError as e:
            logger.error(f"执行失败: {e}")
            return BenchResponse(code=self.failure_code, message=f"执行失败：{e}")
        except Exception as e:
            logger.error(f"执行异常: {e}")
            return BenchResponse(code=self.failure_code, message=f"执行异常：{str(e)}")

    @staticmethod
    def error_response(code: str, message: str, data: Optional[Any] = None) -> BenchResponse:
        return BenchResponse(code=code, message=message, data=data)
