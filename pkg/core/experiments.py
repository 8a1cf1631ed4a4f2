# -*- coding: utf-8 -*-
"""
Monte Carlo 试验模块

- accuracy:  逐迭代记录最低最大距离迭代点到真值中心的平方弦距离与累计耗时
- warmstart: k=2..K 上均匀初始化与热启动的迭代次数对比
- order / snr / nocommon: 四种阶数选择规则的准确率与平均阶数，扫描 n 或 SNR

试验在线程池中执行，每次试验的随机流由 SeedSequence([seed, trial, 轴下标]) 派生，
写出前按 (axis, trial, k, t) 排序，输出与调度顺序无关。
"""

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np

from core import statistics
from core.collection_io import write_csv
from core.config import Config
from core.data_gen import DatasetSpec, generate, no_common_dataset
from core.exceptions import InvalidConfig
from core.grassmann import chordal_distance
from core.order_selection import RULES, build_report
from core.performance import PerformanceMonitor
from core.solver import SolverConfig, solve, warm_start_sweep
from core.validators import ExperimentConfigValidator

logger = logging.getLogger(__name__)

COLUMNS: Dict[str, Tuple[str, ...]] = {
    "accuracy": ("axis", "trial", "seed", "k", "t", "error", "time", "dual", "primal"),
    "warmstart": ("axis", "trial", "seed", "k", "naive_iterations", "warm_iterations",
                  "naive_primal", "warm_primal"),
    "order": ("axis", "trial", "seed", "k") + RULES,
}
COLUMNS["snr"] = COLUMNS["order"]
COLUMNS["nocommon"] = COLUMNS["order"]


@dataclass(frozen=True)
class ExperimentConfig:
    """试验配置

    axis 对 snr 为 SNR(dB) 列表，其余为环境维度 n 列表；
    accuracy/warmstart 缺省 axis 为 [dataset.n]。
    nocommon 不使用 dataset，样本数与维度取 no_common_M / no_common_dims。
    """
    experiment: str
    trials: int
    dataset: Optional[DatasetSpec] = None
    solver: SolverConfig = field(default_factory=SolverConfig)
    axis: Optional[List[float]] = None
    seed: int = 0
    threads: Optional[int] = None
    warm_start: bool = True
    no_common_M: int = 50
    no_common_dims: Tuple[int, ...] = (3, 4, 5)

    def __post_init__(self):
        axis = self.axis
        if axis is None and self.dataset is not None and self.experiment in ("accuracy", "warmstart"):
            axis = [self.dataset.n]
        data = asdict(self)
        data["axis"] = list(axis) if axis is not None else None
        ok, cleaned, errors = ExperimentConfigValidator.validate(data)
        if ok and cleaned["experiment"] != "nocommon" and self.dataset is None:
            ok, errors = False, [f"{cleaned['experiment']} 试验需要数据集规格"]
        if not ok:
            raise InvalidConfig("试验配置无效: " + "; ".join(errors), errors)
        object.__setattr__(self, "experiment", cleaned["experiment"])
        object.__setattr__(self, "trials", cleaned["trials"])
        object.__setattr__(self, "axis", [float(v) for v in data["axis"]])
        object.__setattr__(self, "no_common_dims", tuple(int(p) for p in self.no_common_dims))

    @property
    def columns(self) -> Tuple[str, ...]:
        return COLUMNS[self.experiment]

    def to_dict(self) -> dict:
        return {
            "experiment": self.experiment,
            "trials": self.trials,
            "dataset": self.dataset.to_dict() if self.dataset is not None else None,
            "solver": self.solver.to_dict(),
            "axis": list(self.axis),
            "seed": self.seed,
            "warm_start": self.warm_start,
            "no_common_M": self.no_common_M,
            "no_common_dims": list(self.no_common_dims),
        }


@dataclass
class TrialRecord:
    """一次试验中某个 (axis, k[, t]) 的一行记录"""
    axis: float
    trial: int
    seed: int
    k: int
    t: Optional[int] = None
    error: Optional[float] = None
    time: Optional[float] = None
    dual: Optional[float] = None
    primal: Optional[float] = None
    naive_iterations: Optional[int] = None
    warm_iterations: Optional[int] = None
    naive_primal: Optional[float] = None
    warm_primal: Optional[float] = None
    selections: Dict[str, Optional[int]] = field(default_factory=dict)

    def sort_key(self) -> tuple:
        return self.axis, self.trial, self.k, self.t if self.t is not None else -1

    def row(self, columns: Sequence[str]) -> list:
        values = []
        for name in columns:
            value = self.selections.get(name) if name in RULES else getattr(self, name)
            values.append("" if value is None else value)
        return values


@dataclass
class ExperimentResult:
    """逐试验记录与汇总表"""
    config: ExperimentConfig
    records: List[TrialRecord]
    summary_header: Tuple[str, ...]
    summary_rows: List[list]

    def write(self, out: str) -> Tuple[str, str]:
        """写出 <out> 与 <out>.summary.csv"""
        write_csv(out, self.config.columns, (r.row(self.config.columns) for r in self.records))
        summary_path = summary_path_for(out)
        write_csv(summary_path, self.summary_header, self.summary_rows)
        return out, summary_path


def summary_path_for(out: str) -> str:
    stem = out[:-4] if out.endswith(".csv") else out
    return stem + ".summary.csv"


# ---------------------------------------------------------------- 线程池

def trial_seed(seed: int, trial: int, axis_index: int = 0) -> int:
    """试验的派生种子，可直接交给 gen --seed 复现该次数据"""
    state = np.random.SeedSequence([int(seed), int(trial), int(axis_index)]).generate_state(1)
    return int(state[0])


def _dataset_at(config: ExperimentConfig, value: float, seed: int):
    if config.experiment == "nocommon":
        n = int(value)
        dims = [p for p in config.no_common_dims if p <= n]
        return no_common_dataset(n, config.no_common_M, dims, np.random.default_rng(seed))
    if config.experiment == "snr":
        spec = config.dataset.replace(snr_db=value, seed=seed)
    else:
        spec = config.dataset.replace(n=int(value), seed=seed)
    return generate(spec)


TrialFn = Callable[[ExperimentConfig, float, int, int], List[TrialRecord]]


def _run_trials(config: ExperimentConfig, trial_fn: TrialFn) -> List[TrialRecord]:
    tasks = [(index, value, trial)
             for index, value in enumerate(config.axis)
             for trial in range(config.trials)]
    threads = config.threads or Config().threads()
    monitor = PerformanceMonitor()
    logger.info("开始 %s 试验: %d 个轴点 × %d 次, 线程数 %d",
                config.experiment, len(config.axis), config.trials, threads)

    def run(task):
        index, value, trial = task
        seed = trial_seed(config.seed, trial, index)
        with monitor.measure("trial", {"experiment": config.experiment, "axis": value, "trial": trial}):
            records = trial_fn(config, value, trial, seed)
        logger.debug("试验完成 axis=%g trial=%d", value, trial)
        return records

    records: List[TrialRecord] = []
    with ThreadPoolExecutor(max_workers=max(1, min(threads, len(tasks)))) as pool:
        for batch in pool.map(run, tasks):
            records.extend(batch)
    records.sort(key=TrialRecord.sort_key)
    logger.info("%s 试验结束，共 %d 条记录", config.experiment, len(records))
    return records


def _by_axis(records: Sequence[TrialRecord]) -> Dict[float, List[TrialRecord]]:
    grouped: Dict[float, List[TrialRecord]] = {}
    for record in records:
        grouped.setdefault(record.axis, []).append(record)
    return grouped


# ---------------------------------------------------------------- accuracy

def _accuracy_trial(config: ExperimentConfig, value: float, trial: int, seed: int) -> List[TrialRecord]:
    dataset = _dataset_at(config, value, seed)
    if dataset.truth_center is None:
        raise InvalidConfig("精度试验需要真值中心")
    result = solve(dataset.collection, dataset.truth_k, config.solver, keep_centers=True)
    truth = dataset.truth_center
    return [
        TrialRecord(axis=value, trial=trial, seed=seed, k=dataset.truth_k, t=entry.t,
                    error=max(0.0, chordal_distance(center, truth)), time=entry.time,
                    dual=entry.dual, primal=entry.primal)
        for entry, center in zip(result.trace, result.best_center_trace)
    ]


def run_accuracy(config: ExperimentConfig) -> ExperimentResult:
    """逐迭代到真值的距离，汇总为中位数与极值包络"""
    records = _run_trials(config, _accuracy_trial)
    rows = []
    for axis, group in _by_axis(records).items():
        errors: Dict[int, List[float]] = {}
        times: Dict[int, List[float]] = {}
        for record in group:
            errors.setdefault(record.trial, []).append(record.error)
            times.setdefault(record.trial, []).append(record.time)
        trials = sorted(errors)
        for row in statistics.envelope([errors[i] for i in trials], [times[i] for i in trials]):
            rows.append([axis, row.t, row.median, row.minimum, row.maximum, row.median_time])
    return ExperimentResult(config, records, ("axis", "t", "median", "min", "max", "median_time"), rows)


# ---------------------------------------------------------------- warm start

def _warmstart_trial(config: ExperimentConfig, value: float, trial: int, seed: int) -> List[TrialRecord]:
    dataset = _dataset_at(config, value, seed)
    collection = dataset.collection
    top = min(collection.max_dim, collection.n)
    if top < 2:
        raise InvalidConfig(f"热启动对比需要 K >= 2，当前 max p_i={collection.max_dim}")
    warm = warm_start_sweep(collection, top, config.solver, warm_start=True)
    naive = warm_start_sweep(collection, top, config.solver, warm_start=False, threads=1)
    records = []
    for w, u in zip(warm[1:], naive[1:]):
        records.append(TrialRecord(
            axis=value, trial=trial, seed=seed, k=w.k,
            naive_iterations=None if u.failed else u.iterations,
            warm_iterations=None if w.failed else w.iterations,
            naive_primal=None if u.failed else u.primal_cost,
            warm_primal=None if w.failed else w.primal_cost,
        ))
    return records


def run_warmstart(config: ExperimentConfig) -> ExperimentResult:
    """各 k 的迭代次数分布与热启动胜出比例"""
    records = _run_trials(config, _warmstart_trial)
    header = ("axis", "k", "pairs", "naive_mean", "naive_median", "warm_mean", "warm_median", "win_fraction")
    rows = []
    for axis, group in _by_axis(records).items():
        valid = [r for r in group if r.naive_iterations is not None and r.warm_iterations is not None]
        orders = sorted({r.k for r in valid})
        for k in orders + ["all"]:
            subset = valid if k == "all" else [r for r in valid if r.k == k]
            naive = [r.naive_iterations for r in subset]
            warm = [r.warm_iterations for r in subset]
            naive_stats = statistics.distribution(naive)
            warm_stats = statistics.distribution(warm)
            rows.append([axis, k, len(subset), naive_stats.mean, naive_stats.median,
                         warm_stats.mean, warm_stats.median, statistics.win_fraction(naive, warm)])
        logger.info("axis=%g 热启动胜出比例 %.3f", axis, rows[-1][-1])
    return ExperimentResult(config, records, header, rows)


# ---------------------------------------------------------------- 阶数选择

def _order_trial(config: ExperimentConfig, value: float, trial: int, seed: int) -> List[TrialRecord]:
    dataset = _dataset_at(config, value, seed)
    report = build_report(dataset.collection, config.solver, warm_start=config.warm_start)
    return [TrialRecord(axis=value, trial=trial, seed=seed, k=dataset.truth_k,
                        selections=report.selections())]


def run_order_selection(config: ExperimentConfig) -> ExperimentResult:
    """每个轴点、每条规则的选择准确率与平均阶数"""
    records = _run_trials(config, _order_trial)
    rows = []
    for axis, group in _by_axis(records).items():
        truth = group[0].k
        picks = {rule: [r.selections.get(rule) for r in group] for rule in RULES}
        for rule, summary in statistics.order_summary(picks, truth).items():
            rows.append([axis, rule, truth, len(group), summary["accuracy"], summary["mean_order"]])
    return ExperimentResult(config, records,
                            ("axis", "rule", "truth_k", "trials", "accuracy", "mean_order"), rows)


RUNNERS: Dict[str, Callable[[ExperimentConfig], ExperimentResult]] = {
    "accuracy": run_accuracy,
    "warmstart": run_warmstart,
    "order": run_order_selection,
    "snr": run_order_selection,
    "nocommon": run_order_selection,
}


def run_experiment(config: ExperimentConfig) -> ExperimentResult:
    return RUNNERS[config.experiment](config)


# ---------------------------------------------------------------- 预设

def _nested_accuracy() -> dict:
    return dict(experiment="accuracy",
                dataset=DatasetSpec(model="nested_ball", n=10, k0=3, eps1=1.0, eps2=0.125, M1=70, M2=30))


def _arc_accuracy() -> dict:
    return dict(experiment="accuracy",
                dataset=DatasetSpec(model="arc", n=15, k0=3, eps1=1.0, M1=100, M2=100, M3=100,
                                    dims=[3, 4, 5, 6]))


def _nested_warmstart() -> dict:
    return dict(experiment="warmstart",
                dataset=DatasetSpec(model="nested_ball", n=10, k0=4, eps1=1.0, eps2=0.25, M1=35, M2=15,
                                    dims=[4, 5, 6]))


def _arc_warmstart() -> dict:
    return dict(experiment="warmstart",
                dataset=DatasetSpec(model="arc", n=10, k0=4, eps1=1.0, M1=100, M2=100, M3=100,
                                    dims=[4, 5, 6]))


def _mixed_order() -> dict:
    return dict(experiment="order", axis=[30, 100, 200],
                dataset=DatasetSpec(model="nested_ball", n=30, k0=10, k1=10, k2=15, eps1=1.0, eps2=0.5,
                                    M1=10, M2=10, dims=list(range(10, 21)), snr_db=9.0))


def _arc_snr() -> dict:
    return dict(experiment="snr", axis=[-5, -2.5, 0, 2.5, 5, 7.5, 10],
                dataset=DatasetSpec(model="arc", n=100, k0=3, eps1=0.5, M1=200, M2=25, dims=[3, 4, 5]))


def _no_common() -> dict:
    return dict(experiment="nocommon", axis=[5, 10, 15, 20, 25, 30, 35, 40],
                no_common_M=50, no_common_dims=(3, 4, 5))


PRESETS: Dict[str, Callable[[], dict]] = {
    "nested_accuracy": _nested_accuracy,
    "arc_accuracy": _arc_accuracy,
    "nested_warmstart": _nested_warmstart,
    "arc_warmstart": _arc_warmstart,
    "mixed_order": _mixed_order,
    "arc_snr": _arc_snr,
    "no_common": _no_common,
}


def preset(name: str, trials: Optional[int] = None, seed: Optional[int] = None,
           solver: Optional[SolverConfig] = None, axis: Optional[List[float]] = None) -> ExperimentConfig:
    """按名称构造预设试验配置，trials/seed 缺省取 Config 中的 experiment.trials/seed"""
    if name not in PRESETS:
        raise InvalidConfig(f"未知的预设 {name!r}，可选: {', '.join(PRESETS)}")
    params = PRESETS[name]()
    cfg = Config()
    params["trials"] = trials if trials is not None else int(cfg.get("experiment.trials", 20))
    params["seed"] = seed if seed is not None else int(cfg.get("experiment.seed", 0))
    if solver is not None:
        params["solver"] = solver
    if axis is not None:
        params["axis"] = axis
    return ExperimentConfig(**params)
