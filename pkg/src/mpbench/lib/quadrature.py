"""自适应 Simpson 数值积分

用于按分解公式计算复合空间的球体积：被积函数在 [0, r/w] 上光滑，
仅在某个因子饱和（圆到达 π 等）处出现折点，调用方可以把折点作为 breakpoints 传入。
"""
from typing import Callable, Iterable, Tuple

ABS_TOL = 1e-12
REL_TOL = 1e-8
MAX_DEPTH = 60
MIN_DEPTH = 3


def _simpson(fa: float, fm: float, fb: float, h: float) -> float:
    return h / 3.0 * (fa + 4.0 * fm + fb)


def _adaptive(
    f: Callable[[float], float],
    a: float,
    b: float,
    fa: float,
    fm: float,
    fb: float,
    whole: float,
    tol: float,
    depth: int,
) -> Tuple[float, float]:
    m = (a + b) / 2.0
    h = (b - a) / 2.0
    lm = (a + m) / 2.0
    rm = (m + b) / 2.0
    flm = f(lm)
    frm = f(rm)
    left = _simpson(fa, flm, fm, h / 2.0)
    right = _simpson(fm, frm, fb, h / 2.0)
    error = (left + right - whole) / 15.0

    if depth >= MAX_DEPTH or (depth >= MIN_DEPTH and abs(error) <= tol):
        return left + right + error, abs(error)

    left_value, left_error = _adaptive(f, a, m, fa, flm, fm, left, tol / 2.0, depth + 1)
    right_value, right_error = _adaptive(f, m, b, fm, frm, fb, right, tol / 2.0, depth + 1)
    return left_value + right_value, left_error + right_error


def integrate(
    f: Callable[[float], float],
    a: float,
    b: float,
    breakpoints: Iterable[float] = (),
    abs_tol: float = ABS_TOL,
    rel_tol: float = REL_TOL,
) -> float:
    """
    在 [a, b] 上积分 f，容差取 max(abs_tol, rel_tol·|粗估值|)

    Args:
        f: 被积函数
        a: 下限
        b: 上限（b ≤ a 时返回 0）
        breakpoints: 被积函数的折点，落在 (a, b) 内的会作为子区间端点
        abs_tol: 绝对容差
        rel_tol: 相对容差

    Returns:
        float: 积分值
    """
    if b <= a:
        return 0.0
    cuts = sorted({a, b, *(x for x in breakpoints if a < x < b)})

    pieces = []
    coarse = 0.0
    for lo, hi in zip(cuts[:-1], cuts[1:]):
        flo, fmid, fhi = f(lo), f((lo + hi) / 2.0), f(hi)
        whole = _simpson(flo, fmid, fhi, (hi - lo) / 2.0)
        pieces.append((lo, hi, flo, fmid, fhi, whole))
        coarse += abs(whole)

    tol = max(abs_tol, rel_tol * coarse)
    total = 0.0
    for lo, hi, flo, fmid, fhi, whole in pieces:
        share = tol * (hi - lo) / (b - a)
        value, _ = _adaptive(f, lo, hi, flo, fmid, fhi, whole, share, 0)
        total += value
    return total
