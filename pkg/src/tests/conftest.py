# -*- coding: utf-8 -*-
"""pytest 公共配置

把项目根目录、src 和 src/mpbench 加入 sys.path，使测试与服务代码一样通过 lib.xxx 导入。
标记为 slow 的用例默认跳过，设置 MPBENCH_RUN_SLOW=1 后运行。
"""
import os
import sys
from pathlib import Path

import numpy as np
import pytest

PROJECT_ROOT = Path(__file__).resolve().parent.parent.parent
SRC_DIR = PROJECT_ROOT / "src"
PACKAGE_DIR = SRC_DIR / "mpbench"
for path in (PROJECT_ROOT, SRC_DIR, PACKAGE_DIR):
    if str(path) not in sys.path:
        sys.path.insert(0, str(path))


def pytest_collection_modifyitems(config, items):
    if os.getenv("MPBENCH_RUN_SLOW") == "1":
        return
    skip_slow = pytest.mark.skip(reason="需要设置 MPBENCH_RUN_SLOW=1")
    for item in items:
        if "slow" in item.keywords:
            item.add_marker(skip_slow)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
