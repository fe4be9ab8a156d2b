"""服务配置模块

从 .env 文件和 MPBENCH_ 前缀的环境变量读取配置，提供 SERVICE_CONFIG 对象供其他模块使用
"""
from pathlib import Path
from typing import Literal

from dotenv import load_dotenv
from pydantic import Field
from pydantic_settings import BaseSettings, SettingsConfigDict

# 获取项目根目录（假设 .env 文件在项目根目录）
BASE_DIR = Path(__file__).resolve().parent.parent.parent.parent
ENV_FILE = BASE_DIR / ".env"

# 加载 .env 文件
if ENV_FILE.exists():
    load_dotenv(ENV_FILE)
else:
    # 如果项目根目录没有，尝试在 src 目录下查找
    SRC_ENV_FILE = BASE_DIR / "src" / ".env"
    if SRC_ENV_FILE.exists():
        load_dotenv(SRC_ENV_FILE)
    else:
        # 如果都没有，尝试加载当前目录的 .env
        load_dotenv()


class BenchConfig(BaseSettings):
    """基准测试配置类

    所有字段都可以通过 MPBENCH_<字段名大写> 环境变量覆盖
    """

    model_config = SettingsConfigDict(env_prefix="MPBENCH_", extra="ignore")

    log_level: str = Field(default="INFO", description="日志级别")
    eta: float = Field(default=1.0, ge=1.0, description="连接半径调节参数 η")
    res_fraction: float = Field(default=0.01, gt=0.0, description="局部规划分辨率（占空间直径的比例）")
    segment_inflation: float = Field(default=0.02, ge=0.0, description="线段障碍物膨胀半径")
    nn_kind: Literal["linear", "tree"] = Field(default="linear", description="最近邻索引类型")
    workers: int = Field(default=1, ge=1, description="并行试验进程数")
    mc_trials: int = Field(default=0, ge=0, description="体积命令默认的蒙特卡洛采样次数（0 表示不做）")
    output_dir: Path = Field(default=Path("results"), description="结果输出目录")
    steer_fraction: float = Field(default=0.2, gt=0.0, description="RRT* 步长上限（占空间直径的比例）")


# 创建全局配置实例
SERVICE_CONFIG = BenchConfig()
