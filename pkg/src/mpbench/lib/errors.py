"""异常与结果状态码

库代码通过抛出 BenchError 子类报告错误；MCP 工具和命令行在边界处捕获并转换为结果码或退出码。
"""


class BenchResultCode:
    """工具调用结果状态码常量"""
    SUCCESS = "Success"
    CONFIG_ERROR = "ConfigError"
    VOLUME_FAILED = "VolumeFailed"
    PLAN_FAILED = "PlanFailed"
    SWEEP_FAILED = "SweepFailed"


class BenchError(Exception):
    """所有基准测试错误的基类"""


class StructuralError(BenchError):
    """点与空间布局不匹配、空间描述非法等结构性错误"""


class DomainError(BenchError, ValueError):
    """参数超出定义域（如 n < 2、球面测度为 0）"""


class UnsupportedOperationError(BenchError):
    """该空间不支持此操作"""


class PreconditionError(BenchError):
    """调用前置条件不满足"""


class EmptyIndexError(BenchError):
    """对空索引执行最近邻查询"""


class InfeasibleOracleError(BenchError):
    """蒙特卡洛体积估计找不到不被边界截断的球心"""


class UndefinedRatioError(BenchError, ZeroDivisionError):
    """碰撞检测耗时为 0，χ 无定义"""


class GenerationError(BenchError):
    """场景生成在拒绝采样轮数内失败"""


class ConfigError(BenchError, ValueError):
    """实验配置非法"""
