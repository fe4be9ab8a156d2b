"""原语计数与计时

PrimitiveLedger 记录一次规划运行中各类原语（NN / R-NN / K-NN / AP / CD / LP）的调用次数
和累计墙钟时间（整数纳秒，time.perf_counter_ns）。χ = t_nn / t_cd。

每次原语调用单独计时，计时本身的开销计入被测原语。
"""
import time
from dataclasses import asdict, dataclass
from typing import Dict

from .errors import UndefinedRatioError

clock = time.perf_counter_ns

COUNT_FIELDS = ("nn", "rnn", "knn", "ap", "cd", "lp", "lp_a", "lp_b", "cd_in_lp", "reported", "unsuccessful")
TIME_FIELDS = ("t_nn_ns", "t_cd_ns", "t_total_ns")


@dataclass
class PrimitiveLedger:
    """单次规划运行的原语账本，只在一个线程内使用"""
    nn: int = 0
    rnn: int = 0
    knn: int = 0
    ap: int = 0
    cd: int = 0
    lp: int = 0
    lp_a: int = 0
    lp_b: int = 0
    cd_in_lp: int = 0
    reported: int = 0
    unsuccessful: int = 0
    t_nn_ns: int = 0
    t_cd_ns: int = 0
    t_total_ns: int = 0

    def counts(self) -> Dict[str, int]:
        return {name: getattr(self, name) for name in COUNT_FIELDS}

    def to_dict(self) -> Dict[str, int]:
        return asdict(self)

    def merge(self, other: "PrimitiveLedger") -> None:
        for name in COUNT_FIELDS + TIME_FIELDS:
            setattr(self, name, getattr(self, name) + getattr(other, name))


def chi(ledger: PrimitiveLedger) -> float:
    """NN 总耗时与 CD 总耗时（含 LP 内的 CD）之比"""
    if ledger.t_cd_ns <= 0:
        raise UndefinedRatioError("CD 耗时为 0，χ 无定义")
    return ledger.t_nn_ns / ledger.t_cd_ns


def time_breakdown(ledger: PrimitiveLedger) -> Dict[str, float]:
    """
    把总耗时拆分为 nn / cd / other 三部分（占比）

    Returns:
        Dict[str, float]: 未记录总耗时时三项均为 0
    """
    total = ledger.t_total_ns
    if total <= 0:
        return {"nn": 0.0, "cd": 0.0, "other": 0.0}
    nn = ledger.t_nn_ns / total
    cd = ledger.t_cd_ns / total
    return {"nn": nn, "cd": cd, "other": max(0.0, 1.0 - nn - cd)}
