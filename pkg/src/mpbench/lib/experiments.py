"""实验配置、参数扫描与结果汇总

一次扫描 = 一个 ExperimentConfig：固定规划器、场景类型和连接策略，沿唯一的扫描轴
（n / N / d / mu / m / res_fraction）取若干值，对每个取值跑全部种子。可选的 series
再给出一组曲线（例如不同 μ 或不同连接策略），每条曲线各自完成整条扫描轴。

结果 CSV 的列顺序固定为 RESULT_COLUMNS，首行是带版本号的注释行。计数列对相同配置和
种子完全确定；时间列受机器负载影响。
"""
import csv
import json
import math
import sys
from concurrent.futures import ProcessPoolExecutor, as_completed
from contextlib import nullcontext
from pathlib import Path
from typing import Any, Dict, Iterable, List, Literal, NamedTuple, Optional, Sequence, Tuple, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, TypeAdapter, ValidationError, model_validator
from scipy.stats import spearmanr
from tqdm import tqdm

from .collision import SCENARIO_BUILDERS, make_scenario
from .errors import ConfigError, StructuralError
from .ledger import COUNT_FIELDS
from .logger_config import setup_logger
from .planners import PLANNERS, ConnectionStrategy, KnnStrategy, RadialStrategy, run_planner
from .service_config import SERVICE_CONFIG
from .spaces import StateSpace, space_hash
from .volumes import ball_volume_monte_carlo, closed_form_volume, numeric_volume

logger = setup_logger(__name__)

RESULT_SCHEMA_VERSION = 1
SCHEMA_LINE = f"# mp-bench results v{RESULT_SCHEMA_VERSION}"

RESULT_COLUMNS = (
    "planner", "scenario", "d", "mu", "m", "n_free", "N_sampled", "seed", "strategy", "nn_kind",
    "res_fraction", "t_nn_ns", "t_cd_ns", "chi", "nn", "rnn", "knn", "ap", "cd", "lp", "lp_a", "lp_b",
    "cd_in_lp", "cost", "success",
)

SWEEP_AXES = ("n", "N", "d", "mu", "m", "res_fraction")

# 扫描轴 -> 结果行中对应的列
AXIS_COLUMNS = {
    "n": "n_free",
    "N": "N_sampled",
    "d": "d",
    "mu": "mu",
    "m": "m",
    "res_fraction": "res_fraction",
}

SERIES_KEYS = ("mu", "d", "m", "res_fraction", "strategy", "nn_kind")

# t_primitive_ns = t_nn_ns + t_cd_ns，只在汇总时派生
SUMMARY_STATS = ("chi", "cost", "t_nn_ns", "t_cd_ns", "t_primitive_ns",
                 "nn", "rnn", "knn", "ap", "cd", "lp", "lp_a", "lp_b", "cd_in_lp")

PERCENTILES = (50, 20, 80)

ROW_COUNT_FIELDS = tuple(name for name in COUNT_FIELDS if name in RESULT_COLUMNS)

_STRATEGY_ADAPTER = TypeAdapter(ConnectionStrategy)

STRATEGY_LABELS: Dict[str, Union[RadialStrategy, KnnStrategy]] = {
    "radial": RadialStrategy(),
    "radial+h": RadialStrategy(use_projection_heuristic=True),
    "knn": KnnStrategy(),
}


def parse_strategy(value: Any) -> Union[RadialStrategy, KnnStrategy]:
    """策略可以是标签（radial / radial+h / knn）、dict 或已构造的模型"""
    if isinstance(value, (RadialStrategy, KnnStrategy)):
        return value
    if isinstance(value, str):
        if value not in STRATEGY_LABELS:
            raise ConfigError(f"未知的连接策略：{value}，可选 {sorted(STRATEGY_LABELS)}")
        return STRATEGY_LABELS[value].model_copy()
    try:
        return _STRATEGY_ADAPTER.validate_python(value)
    except ValidationError as e:
        raise ConfigError(f"连接策略非法：{e}") from None


def strategy_label(strategy: Union[RadialStrategy, KnnStrategy]) -> str:
    if isinstance(strategy, KnnStrategy):
        return "knn" if strategy.multiplier == 1.0 else f"knn*{strategy.multiplier:g}"
    label = "radial+h" if strategy.use_projection_heuristic else "radial"
    if strategy.eta != 1.0:
        label += f"@eta={strategy.eta:g}"
    return label


# ----------------------------------------------------------------------------
# 配置
# ----------------------------------------------------------------------------

def _check_value(key: str, value: Any, planner: str, scenario: str, params: Dict[str, Any]) -> None:
    if key == "n":
        if planner == "rrt-star":
            raise ValueError("RRT* 的迭代次数请使用 N 轴")
        if int(value) != value or value < 2:
            raise ValueError(f"n 必须是 ≥ 2 的整数，实际 {value}")
    elif key == "N":
        if planner != "rrt-star":
            raise ValueError("N 轴只适用于 rrt-star，PRM 类规划器请使用 n 轴")
        if int(value) != value or value < 1:
            raise ValueError(f"N 必须是 ≥ 1 的整数，实际 {value}")
    elif key == "d":
        if scenario not in ("hypercube", "freespace") or params.get("space"):
            raise ValueError(f"d 轴只适用于未指定 space 的 hypercube / freespace 场景，当前 {scenario}")
        if int(value) != value or value < 1:
            raise ValueError(f"d 必须是 ≥ 1 的整数，实际 {value}")
    elif key == "mu":
        if scenario != "hypercube":
            raise ValueError(f"mu 只适用于 hypercube 场景，当前 {scenario}")
        if not 0.0 <= value < 1.0:
            raise ValueError(f"mu 必须在 [0, 1) 内，实际 {value}")
    elif key == "m":
        if scenario != "segments":
            raise ValueError(f"m 只适用于 segments 场景，当前 {scenario}")
        if int(value) != value or value < 0:
            raise ValueError(f"m 必须是非负整数，实际 {value}")
    elif key == "res_fraction":
        if params.get("step") is not None:
            raise ValueError("场景参数已固定 step，不能再扫描 res_fraction")
        if value <= 0.0:
            raise ValueError(f"res_fraction 必须为正，实际 {value}")


class SeriesSpec(BaseModel):
    """次级分组：每个取值对应一条曲线"""
    model_config = ConfigDict(extra="forbid")

    key: Literal["mu", "d", "m", "res_fraction", "strategy", "nn_kind"]
    values: List[Any] = Field(min_length=1)


class ExperimentConfig(BaseModel):
    """一次参数扫描的完整配置"""
    model_config = ConfigDict(extra="forbid")

    name: str = Field("experiment", description="实验名称，用于日志和进度条")
    planner: Literal["sprm", "lazy-sprm", "rrt-star"]
    scenario: Literal["hypercube", "segments", "strip", "freespace"]
    scenario_params: Dict[str, Any] = Field(default_factory=dict)
    strategy: ConnectionStrategy = Field(default_factory=RadialStrategy)
    n: int = Field(1000, ge=1, description="不扫描 n / N 时的采样点数（PRM）或迭代次数（RRT*）")
    axis: Literal["n", "N", "d", "mu", "m", "res_fraction"]
    values: List[float] = Field(min_length=1)
    series: Optional[SeriesSpec] = None
    seeds: List[int] = Field(min_length=1)
    nn_kind: Literal["linear", "tree"] = Field(default_factory=lambda: SERVICE_CONFIG.nn_kind)
    goal_bias: float = Field(0.0, ge=0.0, le=1.0, description="RRT* 目标偏置概率")
    output: Optional[Path] = None

    @model_validator(mode="after")
    def _check_sweep(self) -> "ExperimentConfig":
        for value in self.values:
            _check_value(self.axis, value, self.planner, self.scenario, self.scenario_params)
        if self.axis not in ("n", "N"):
            _check_value("N" if self.planner == "rrt-star" else "n", self.n, self.planner,
                         self.scenario, self.scenario_params)
        if self.series is not None:
            if self.series.key == self.axis:
                raise ValueError(f"series 与扫描轴不能相同：{self.axis}")
            for value in self.series.values:
                if self.series.key == "strategy":
                    parse_strategy(value)
                elif self.series.key == "nn_kind":
                    if value not in ("linear", "tree"):
                        raise ValueError(f"未知的最近邻索引类型：{value}")
                else:
                    _check_value(self.series.key, value, self.planner, self.scenario, self.scenario_params)
        return self


def validate_config(data: Union[Dict[str, Any], str, Path]) -> ExperimentConfig:
    """
    校验实验配置，任何问题都转换为 ConfigError

    Args:
        data: dict、JSON 字符串或 JSON 文件路径
    """
    if isinstance(data, Path):
        try:
            data = data.read_text(encoding="utf-8")
        except OSError as e:
            raise ConfigError(f"读取配置文件失败：{e}") from None
    if isinstance(data, str):
        try:
            data = json.loads(data)
        except json.JSONDecodeError as e:
            raise ConfigError(f"配置不是合法 JSON：{e}") from None
    try:
        return ExperimentConfig.model_validate(data)
    except ValidationError as e:
        raise ConfigError(f"实验配置非法：{e}") from None


class Trial(NamedTuple):
    index: int
    series_value: Any
    axis_value: float
    seed: int


def expand_trials(config: ExperimentConfig) -> List[Trial]:
    """按 series -> 扫描值 -> 种子 的顺序展开全部试验"""
    series_values = config.series.values if config.series else [None]
    trials = []
    for series_value in series_values:
        for value in config.values:
            for seed in config.seeds:
                trials.append(Trial(len(trials), series_value, value, seed))
    return trials


# ----------------------------------------------------------------------------
# 结果行
# ----------------------------------------------------------------------------

class ResultRow(BaseModel):
    """一次试验的结果，字段顺序即 CSV 列顺序"""
    planner: str
    scenario: str
    d: int
    mu: float
    m: int
    n_free: int
    N_sampled: int
    seed: int
    strategy: str
    nn_kind: str
    res_fraction: Optional[float] = None
    t_nn_ns: int = 0
    t_cd_ns: int = 0
    chi: Optional[float] = None
    nn: int = 0
    rnn: int = 0
    knn: int = 0
    ap: int = 0
    cd: int = 0
    lp: int = 0
    lp_a: int = 0
    lp_b: int = 0
    cd_in_lp: int = 0
    cost: Optional[float] = None
    success: bool = False

    def to_csv(self) -> Dict[str, str]:
        record = {}
        for name in RESULT_COLUMNS:
            value = getattr(self, name)
            if value is None:
                record[name] = ""
            elif isinstance(value, bool):
                record[name] = "true" if value else "false"
            else:
                record[name] = str(value)
        return record

    @classmethod
    def from_csv(cls, record: Dict[str, str]) -> "ResultRow":
        return cls.model_validate({k: (None if v == "" else v) for k, v in record.items()})

    def counts(self) -> Dict[str, int]:
        return {name: getattr(self, name) for name in ROW_COUNT_FIELDS}


class _TrialSetup(NamedTuple):
    params: Dict[str, Any]
    strategy: Union[RadialStrategy, KnnStrategy]
    nn_kind: str
    n: int


def _trial_setup(config: ExperimentConfig, trial: Trial) -> _TrialSetup:
    params = dict(config.scenario_params)
    strategy = config.strategy
    nn_kind = config.nn_kind
    n = config.n
    assignments = [(config.axis, trial.axis_value)]
    if config.series is not None:
        assignments.append((config.series.key, trial.series_value))
    for key, value in assignments:
        if key in ("n", "N"):
            n = int(value)
        elif key == "strategy":
            strategy = parse_strategy(value)
        elif key == "nn_kind":
            nn_kind = value
        elif key in ("d", "m"):
            params[key] = int(value)
        else:
            params[key] = float(value)
    return _TrialSetup(params, strategy, nn_kind, n)


def _scenario_columns(kind: str, params: Dict[str, Any]) -> Dict[str, Any]:
    if kind in ("hypercube", "freespace"):
        d = int(params.get("d", 2))
    else:
        d = 2 if kind == "segments" else 3
    return {
        "d": d,
        "mu": float(params.get("mu", 0.0)) if kind == "hypercube" else 0.0,
        "m": int(params.get("m", 0)) if kind == "segments" else 0,
    }


def _base_columns(config: ExperimentConfig, trial: Trial, setup: _TrialSetup) -> Dict[str, Any]:
    return {
        "planner": config.planner,
        "scenario": config.scenario,
        "seed": trial.seed,
        "strategy": strategy_label(setup.strategy),
        "nn_kind": setup.nn_kind,
        **_scenario_columns(config.scenario, setup.params),
    }


def failed_row(config: ExperimentConfig, trial: Trial) -> ResultRow:
    """未产出结果的试验行：标签取自该试验自身的扫描值与 series 值"""
    setup = _trial_setup(config, trial)
    is_rrt = config.planner == "rrt-star"
    return ResultRow(
        **_base_columns(config, trial, setup),
        n_free=0 if is_rrt else setup.n,
        N_sampled=setup.n if is_rrt else 0,
        res_fraction=setup.params.get("res_fraction", SERVICE_CONFIG.res_fraction),
    )


def run_trial(config: ExperimentConfig, trial: Trial) -> ResultRow:
    """
    运行单个试验；场景参数非法（ConfigError / StructuralError）直接抛出，其余异常记为 success=false 的结果行

    Args:
        config: 已校验的实验配置
        trial: 试验参数（扫描值、series 值、种子）

    Returns:
        ResultRow: 结果行
    """
    setup = _trial_setup(config, trial)
    is_rrt = config.planner == "rrt-star"
    logger.debug(f"试验开始: {config.name} #{trial.index} {config.axis}={trial.axis_value} seed={trial.seed}")
    try:
        scenario = make_scenario(config.scenario, setup.params, trial.seed)
        options = {"goal_bias": config.goal_bias} if is_rrt else {}
        result = run_planner(config.planner, scenario, setup.n, setup.strategy, trial.seed,
                             nn_kind=setup.nn_kind, **options)
    except (ConfigError, StructuralError):
        raise
    except Exception as e:
        logger.error(f"试验失败: {config.name} #{trial.index} {config.axis}={trial.axis_value} "
                     f"seed={trial.seed}: {e}")
        return failed_row(config, trial)

    ledger = result.ledger
    base = _base_columns(config, trial, setup)
    base["d"] = scenario.space.dimension
    return ResultRow(
        **base,
        n_free=result.roadmap_stats["n_free"],
        N_sampled=result.roadmap_stats["n_sampled"],
        res_fraction=scenario.res_fraction,
        t_nn_ns=ledger.t_nn_ns,
        t_cd_ns=ledger.t_cd_ns,
        chi=ledger.t_nn_ns / ledger.t_cd_ns if ledger.t_cd_ns > 0 else None,
        cost=result.cost if result.success else None,
        success=result.success,
        **{name: getattr(ledger, name) for name in ROW_COUNT_FIELDS},
    )


# ----------------------------------------------------------------------------
# CSV 读写
# ----------------------------------------------------------------------------

class ResultWriter:
    """结果 CSV 的唯一写者，每写一行立即 flush"""

    def __init__(self, path: Path):
        self.path = Path(path)
        self.path.parent.mkdir(parents=True, exist_ok=True)
        self._fh = open(self.path, "w", newline="", encoding="utf-8")
        self._fh.write(SCHEMA_LINE + "\n")
        self._writer = csv.DictWriter(self._fh, fieldnames=RESULT_COLUMNS)
        self._writer.writeheader()
        self._fh.flush()

    def write(self, row: ResultRow) -> None:
        self._writer.writerow(row.to_csv())
        self._fh.flush()

    def close(self) -> None:
        self._fh.close()

    def __enter__(self) -> "ResultWriter":
        return self

    def __exit__(self, *exc) -> None:
        self.close()


def write_rows(rows: Iterable[ResultRow], path: Path) -> None:
    with ResultWriter(path) as writer:
        for row in rows:
            writer.write(row)


def read_rows(path: Union[str, Path]) -> List[ResultRow]:
    """读取结果 CSV（跳过 # 开头的注释行），列头必须与 RESULT_COLUMNS 完全一致"""
    with open(path, newline="", encoding="utf-8") as fh:
        lines = [line for line in fh if not line.startswith("#")]
    reader = csv.DictReader(lines)
    if tuple(reader.fieldnames or ()) != RESULT_COLUMNS:
        raise ConfigError(f"结果文件列头不匹配：{path}")
    return [ResultRow.from_csv(record) for record in reader]


def summary_path(out: Path) -> Path:
    return out.with_name(out.name + ".summary.csv")


def plot_path(out: Path, stat: str) -> Path:
    return out.with_name(f"{out.name}.{stat}.dat")


# ----------------------------------------------------------------------------
# 汇总
# ----------------------------------------------------------------------------

def nearest_rank(values: Sequence[float], percent: int) -> float:
    """最近秩百分位：排序后取第 ⌈p·N/100⌉ 个（至少第 1 个）"""
    ordered = np.sort(np.asarray(values, dtype=float))
    rank = max(1, -(-percent * len(ordered) // 100))
    return float(ordered[rank - 1])


def _stat_value(row: ResultRow, stat: str) -> Optional[float]:
    if stat == "t_primitive_ns":
        return float(row.t_nn_ns + row.t_cd_ns)
    value = getattr(row, stat)
    return None if value is None else float(value)


def _axis_column(axis: str) -> str:
    column = AXIS_COLUMNS.get(axis)
    if column is None:
        raise ConfigError(f"未知的扫描轴：{axis}，可选 {list(SWEEP_AXES)}")
    return column


def _group(rows: Sequence[ResultRow], axis: str, series: Optional[str]) -> List[Tuple[Tuple[Any, Any], List[ResultRow]]]:
    column = _axis_column(axis)
    if series is not None and series not in SERIES_KEYS:
        raise ConfigError(f"未知的 series：{series}，可选 {list(SERIES_KEYS)}")
    groups: Dict[Tuple[Any, Any], List[ResultRow]] = {}
    for row in rows:
        key = (getattr(row, series) if series else None, getattr(row, column))
        groups.setdefault(key, []).append(row)
    # series 值保持首次出现的顺序，组内按扫描值升序
    order = {s: i for i, s in enumerate(dict.fromkeys(k[0] for k in groups))}
    return sorted(groups.items(), key=lambda item: (order[item[0][0]], item[0][1]))


def summarize(rows: Sequence[ResultRow], axis: str, series: Optional[str] = None) -> List[Dict[str, Any]]:
    """
    按 (series, 扫描值) 分组，计算各统计量的中位数与 20/80 百分位（最近秩法）

    Args:
        rows: 结果行
        axis: 扫描轴
        series: 次级分组列名，可为空

    Returns:
        List[Dict[str, Any]]: 每组一条汇总记录；某统计量在组内全为空时三个值均为 None
    """
    summary = []
    for (series_value, x), group in _group(rows, axis, series):
        record: Dict[str, Any] = {
            "series": series_value,
            "axis": axis,
            "x": x,
            "trials": len(group),
            "success_rate": sum(row.success for row in group) / len(group),
        }
        for stat in SUMMARY_STATS:
            values = [v for v in (_stat_value(row, stat) for row in group) if v is not None]
            for p, label in zip(PERCENTILES, ("median", "p20", "p80")):
                record[f"{stat}_{label}"] = nearest_rank(values, p) if values else None
        summary.append(record)
    return summary


def write_summary(summary: Sequence[Dict[str, Any]], path: Path) -> None:
    if not summary:
        return
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.DictWriter(fh, fieldnames=list(summary[0]))
        writer.writeheader()
        for record in summary:
            writer.writerow({k: "" if v is None else v for k, v in record.items()})


def trend(summary: Sequence[Dict[str, Any]], stat: str = "chi", series: Any = None) -> float:
    """某条曲线上统计量中位数对扫描值的 Spearman 秩相关系数；有效点少于 2 个时返回 nan"""
    points = [(rec["x"], rec[f"{stat}_median"]) for rec in summary
              if rec["series"] == series and rec[f"{stat}_median"] is not None]
    if len(points) < 2:
        return math.nan
    xs, ys = zip(*points)
    return float(spearmanr(xs, ys)[0])


def _fmt(value: Optional[float]) -> str:
    return "nan" if value is None else f"{value:.10g}"


def emit_plot_data(
    rows: Sequence[ResultRow],
    x_axis: str,
    y_stat: str,
    path: Optional[Union[str, Path]] = None,
    series: Optional[str] = None,
) -> str:
    """
    生成绘图数据：每行 `x median p20 p80`，按 x 升序

    有 series 时每条曲线一段，段首是 `# series=<值>` 注释，段间空一行。

    Args:
        rows: 结果行（非空）
        x_axis: 扫描轴
        y_stat: 统计量，见 SUMMARY_STATS
        path: 输出文件，为空时只返回文本
        series: 次级分组列名

    Returns:
        str: 绘图数据文本
    """
    if not rows:
        raise ConfigError("没有结果行，无法生成绘图数据")
    if y_stat not in SUMMARY_STATS:
        raise ConfigError(f"未知的统计量：{y_stat}，可选 {list(SUMMARY_STATS)}")
    blocks: List[List[str]] = []
    current = object()
    for record in summarize(rows, x_axis, series):
        if not blocks or record["series"] != current:
            current = record["series"]
            blocks.append([f"# series={current}"] if series else [])
        blocks[-1].append(" ".join(_fmt(v) for v in (
            record["x"], record[f"{y_stat}_median"], record[f"{y_stat}_p20"], record[f"{y_stat}_p80"])))
    text = "\n\n".join("\n".join(block) for block in blocks) + "\n"
    if path is not None:
        Path(path).write_text(text, encoding="utf-8")
    return text


# ----------------------------------------------------------------------------
# 扫描
# ----------------------------------------------------------------------------

def run_sweep(
    config: ExperimentConfig,
    workers: Optional[int] = None,
    output: Optional[Union[str, Path]] = None,
    progress: bool = True,
) -> List[ResultRow]:
    """
    运行整个扫描

    workers > 1 时试验分发到进程池，每个进程一次只跑一个试验；结果由主进程按完成顺序
    逐行写入 CSV。返回的列表按试验展开顺序排列。有输出路径时另写 <out>.summary.csv
    和 χ 的绘图数据 <out>.chi.dat。

    Args:
        config: 已校验的实验配置
        workers: 并行进程数，缺省取配置
        output: 结果 CSV 路径，缺省取 config.output；都为空则不写文件
        progress: 是否显示进度条

    Returns:
        List[ResultRow]: 每个试验一行
    """
    trials = expand_trials(config)
    workers = workers or SERVICE_CONFIG.workers
    out = Path(output) if output is not None else config.output
    rows: List[Optional[ResultRow]] = [None] * len(trials)
    logger.info(f"开始扫描 {config.name}: {config.planner} / {config.scenario}, "
                f"{config.axis}={config.values}, {len(trials)} 个试验, {workers} 个进程")

    writer_ctx = ResultWriter(out) if out is not None else nullcontext()
    with writer_ctx as writer, tqdm(total=len(trials), desc=config.name, disable=not progress,
                                    file=sys.stderr) as bar:
        def record(trial: Trial, row: ResultRow) -> None:
            rows[trial.index] = row
            if writer is not None:
                writer.write(row)
            bar.update(1)

        if workers <= 1:
            for trial in trials:
                record(trial, run_trial(config, trial))
        else:
            with ProcessPoolExecutor(max_workers=workers) as pool:
                futures = {pool.submit(run_trial, config, trial): trial for trial in trials}
                for future in as_completed(futures):
                    trial = futures[future]
                    try:
                        row = future.result()
                    except (ConfigError, StructuralError):
                        pool.shutdown(wait=False, cancel_futures=True)
                        raise
                    except Exception as e:
                        # 工作进程本身崩溃
                        logger.error(f"试验 #{trial.index} 所在进程异常: {e}")
                        row = failed_row(config, trial)
                    record(trial, row)

    results = [row for row in rows if row is not None]
    failed = sum(not row.success for row in results)
    if out is not None:
        series = config.series.key if config.series else None
        write_summary(summarize(results, config.axis, series), summary_path(out))
        emit_plot_data(results, config.axis, "chi", plot_path(out, "chi"), series)
        logger.info(f"结果已写入 {out}")
    logger.info(f"扫描 {config.name} 完成: {len(results)} 行, 其中 {failed} 行未找到解")
    return results


# ----------------------------------------------------------------------------
# 预置实验
# ----------------------------------------------------------------------------

def _dimension_sweep(strategy: Union[RadialStrategy, KnnStrategy], name: str) -> ExperimentConfig:
    return ExperimentConfig(
        name=name,
        planner="sprm",
        scenario="hypercube",
        scenario_params={"d": 2, "mu": 0.0},
        strategy=strategy,
        n=5000,
        axis="d",
        values=[2, 4, 6, 8, 10, 12, 14, 16],
        series=SeriesSpec(key="mu", values=[0.0, 0.25, 0.5]),
        seeds=list(range(10)),
    )


def _preset_dimension_rnn() -> ExperimentConfig:
    return _dimension_sweep(RadialStrategy(known_free=True), "fig6-rnn")


def _preset_dimension_knn() -> ExperimentConfig:
    return _dimension_sweep(KnnStrategy(), "fig6-knn")


def _preset_segment_count() -> ExperimentConfig:
    return ExperimentConfig(
        name="fig7",
        planner="rrt-star",
        scenario="segments",
        scenario_params={"m": 100},
        n=2000,
        axis="m",
        values=[100, 400, 1600],
        seeds=list(range(20)),
    )


def _preset_resolution() -> ExperimentConfig:
    return ExperimentConfig(
        name="fig8",
        planner="rrt-star",
        scenario="hypercube",
        scenario_params={"d": 3, "mu": 0.25, "inflate_with_resolution": True},
        n=2000,
        axis="res_fraction",
        values=[0.01, 0.02, 0.04],
        seeds=list(range(20)),
    )


def _preset_strip_cost_time() -> ExperimentConfig:
    # Lazy-sPRM* 没有增量加密，按几何增长的 n 分别重跑，以 (t_primitive, cost) 描出代价-时间曲线
    return ExperimentConfig(
        name="fig9b",
        planner="lazy-sprm",
        scenario="strip",
        scenario_params={"length": 10.0, "w2": 1e-3},
        axis="n",
        values=[250, 500, 1000, 2000, 4000],
        series=SeriesSpec(key="strategy", values=["radial", "radial+h", "knn"]),
        seeds=list(range(20)),
    )


def _preset_chi_growth() -> ExperimentConfig:
    return ExperimentConfig(
        name="chi-growth",
        planner="sprm",
        scenario="hypercube",
        scenario_params={"d": 4, "mu": 0.25},
        strategy=RadialStrategy(known_free=True),
        axis="n",
        values=[1600, 3200, 6400, 12800],
        seeds=list(range(20)),
    )


def _preset_rrt_freespace() -> ExperimentConfig:
    # 网格场景下的 RRT* 维度实验用无障碍 L2(d) 代替
    return ExperimentConfig(
        name="rrt-freespace",
        planner="rrt-star",
        scenario="freespace",
        scenario_params={"d": 2},
        n=2000,
        axis="d",
        values=[2, 4, 6, 8, 10, 12],
        seeds=list(range(10)),
    )


PRESETS = {
    "fig6-rnn": _preset_dimension_rnn,
    "fig6-knn": _preset_dimension_knn,
    "fig7": _preset_segment_count,
    "fig8": _preset_resolution,
    "fig9b": _preset_strip_cost_time,
    "chi-growth": _preset_chi_growth,
    "rrt-freespace": _preset_rrt_freespace,
}


def preset(name: str) -> ExperimentConfig:
    """按名称返回预置实验配置"""
    factory = PRESETS.get(name)
    if factory is None:
        raise ConfigError(f"未知的预置实验：{name}，可选 {sorted(PRESETS)}")
    return factory()


# ----------------------------------------------------------------------------
# 单次规划与体积表
# ----------------------------------------------------------------------------

SCENARIO_PRESETS: Dict[str, Tuple[str, Dict[str, Any]]] = {
    "hypercube-2d": ("hypercube", {"d": 2, "mu": 0.25}),
    "hypercube-4d": ("hypercube", {"d": 4, "mu": 0.25}),
    "segments-100": ("segments", {"m": 100}),
    "strip": ("strip", {"length": 10.0, "w2": 1e-3}),
    "freespace-2d": ("freespace", {"d": 2}),
}


def scenario_spec(text: str) -> Tuple[str, Dict[str, Any]]:
    """
    解析命令行的 --scenario 参数

    Args:
        text: 预置名（见 SCENARIO_PRESETS）或 JSON，例如 {"kind": "hypercube", "params": {"d": 3}}

    Returns:
        Tuple[str, Dict[str, Any]]: (场景类型, 场景参数)
    """
    text = text.strip()
    if not text.startswith("{"):
        if text not in SCENARIO_PRESETS:
            raise ConfigError(f"未知的场景预置：{text}，可选 {sorted(SCENARIO_PRESETS)}")
        kind, params = SCENARIO_PRESETS[text]
        return kind, dict(params)
    try:
        data = json.loads(text)
    except json.JSONDecodeError as e:
        raise ConfigError(f"场景参数不是合法 JSON：{e}") from None
    kind = data.get("kind") if isinstance(data, dict) else None
    if kind not in SCENARIO_BUILDERS:
        raise ConfigError(f"场景 JSON 必须给出 kind，可选 {sorted(SCENARIO_BUILDERS)}")
    return kind, dict(data.get("params") or {})


def plan_once(
    planner: str,
    scenario: str,
    params: Dict[str, Any],
    strategy: Union[RadialStrategy, KnnStrategy],
    n: int,
    seed: int,
    nn_kind: Optional[str] = None,
) -> ResultRow:
    """单次规划，与扫描共用 run_trial，保证结果行的口径一致"""
    if planner not in PLANNERS:
        raise ConfigError(f"未知的规划器：{planner}，可选 {sorted(PLANNERS)}")
    if scenario not in SCENARIO_BUILDERS:
        raise ConfigError(f"未知的场景类型：{scenario}，可选 {sorted(SCENARIO_BUILDERS)}")
    config = validate_config({
        "name": "plan",
        "planner": planner,
        "scenario": scenario,
        "scenario_params": params,
        "strategy": strategy,
        "axis": "N" if planner == "rrt-star" else "n",
        "values": [n],
        "seeds": [seed],
        "nn_kind": nn_kind or SERVICE_CONFIG.nn_kind,
    })
    return run_trial(config, expand_trials(config)[0])


VOLUME_COLUMNS = ("space_hash", "r", "closed", "numeric", "mc", "mc_stderr")


def volume_rows(space: StateSpace, radii: Sequence[float], mc_trials: int = 0, seed: int = 0) -> List[Dict[str, Any]]:
    """
    对每个半径给出闭式、数值积分和（可选）蒙特卡洛三种体积，不可用的列为 None

    Args:
        space: 构型空间
        radii: 半径列表
        mc_trials: 蒙特卡洛采样次数，0 表示不做
        seed: 蒙特卡洛随机种子
    """
    rows = []
    digest = space_hash(space)
    rng = np.random.default_rng(seed)
    for r in radii:
        mc = stderr = None
        if mc_trials:
            mc, stderr = ball_volume_monte_carlo(space, r, mc_trials, rng)
        rows.append({
            "space_hash": digest,
            "r": r,
            "closed": closed_form_volume(space, r),
            "numeric": numeric_volume(space, r),
            "mc": mc,
            "mc_stderr": stderr,
        })
    return rows
