# -*- coding: utf-8 -*-
"""
GMEB 命令行入口

子命令:
    solve       在 Gr(k,n) 上求最小包围球中心
    order       选择中心维度 k*
    gen         生成带真值的合成集合
    experiment  运行 Monte Carlo 试验并写出 CSV
    mds         把集合嵌入平面，输出 label,x,y
    config      查看或修改配置文件

退出码: 0 成功，2 参数/解析/配置/文件错误，3 数值失败，1 其他异常。
"""

import os
import sys
import csv
import argparse
import logging

sys.path.insert(0, os.path.dirname(os.path.abspath(__file__)))

logger = logging.getLogger("gmeb")

RULE_CHOICES = ("proposed", "hybrid", "mse", "svd-elbow", "all")


def _add_solver_flags(parser: argparse.ArgumentParser) -> None:
    group = parser.add_argument_group("求解器参数（缺省取配置文件）")
    group.add_argument("--a", type=float, help="初始步长参数")
    group.add_argument("--eta", type=float, help="对偶间隙与停滞阈值")
    group.add_argument("--zeta", type=float, help="回溯步长下限比例")
    group.add_argument("--beta", type=float, help="回溯成功后的步长增长倍数")
    group.add_argument("--max-iter", type=int, dest="max_iter", help="最大迭代次数")
    group.add_argument("--step-mode", choices=("backtracking", "diminishing"), dest="step_mode")
    group.add_argument("--projection", choices=("euclidean", "normalize"),
                       help="单纯形投影方式")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="gmeb", description="Grassmann 流形最小包围球中心与阶数选择")
    parser.add_argument("--log-level", dest="log_level", help="控制台日志级别 (DEBUG/INFO/WARNING/ERROR)")
    parser.add_argument("--profile", action="store_true", help="结束时输出耗时统计")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("solve", help="求最小包围球中心")
    p.add_argument("--input", required=True, help=".gss 集合文件")
    p.add_argument("--k", type=int, required=True, help="中心维度")
    p.add_argument("--warm-start", dest="warm_start", help="初始对偶权重（结果 JSON 或数组 JSON）")
    p.add_argument("--init", choices=("uniform", "support"), default="uniform",
                   help="初始权重: 均匀或外蕴均值的支撑集")
    p.add_argument("--out", help="结果 JSON 路径，缺省输出到 stdout")
    _add_solver_flags(p)

    p = sub.add_parser("order", help="选择中心维度")
    p.add_argument("--input", required=True, help=".gss 集合文件")
    p.add_argument("--rule", choices=RULE_CHOICES, default="all")
    p.add_argument("--no-warm-start", dest="no_warm_start", action="store_true",
                   help="各 k 均从均匀权重出发并行求解")
    p.add_argument("--out", help="报告 JSON 路径，缺省输出到 stdout")
    _add_solver_flags(p)

    p = sub.add_parser("gen", help="生成合成集合")
    p.add_argument("--model", choices=("nested_ball", "arc"), default="nested_ball")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--k0", type=int, required=True)
    p.add_argument("--k1", type=int)
    p.add_argument("--k2", type=int)
    p.add_argument("--eps1", type=float, default=1.0)
    p.add_argument("--eps2", type=float)
    p.add_argument("--M1", type=int, default=0)
    p.add_argument("--M2", type=int, default=0)
    p.add_argument("--M3", type=int, default=0)
    p.add_argument("--dims", type=int, nargs="+", help="补全维度候选")
    p.add_argument("--orthogonal-completion", dest="orthogonal_completion", action="store_true")
    p.add_argument("--snr", type=float, dest="snr_db", help="信噪比 (dB)，缺省不加噪声")
    p.add_argument("--small-ball", dest="small_ball", choices=("boundary", "interior"), default="boundary")
    p.add_argument("--seed", type=int)
    p.add_argument("--out", required=True, help=".gss 输出路径，真值写到 <out>.truth.json")

    p = sub.add_parser("experiment", help="运行 Monte Carlo 试验")
    source = p.add_mutually_exclusive_group(required=True)
    source.add_argument("--preset", help="预设名称: nested_accuracy/arc_accuracy/nested_warmstart/arc_warmstart/mixed_order/arc_snr/no_common")
    source.add_argument("--config", help="试验配置 JSON")
    p.add_argument("--trials", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--axis", type=float, nargs="+", help="扫描轴取值（n 或 SNR）")
    p.add_argument("--threads", type=int, help="线程数，覆盖 GMEB_THREADS")
    p.add_argument("--no-warm-start", dest="no_warm_start", action="store_true")
    p.add_argument("--out", required=True, help="逐试验 CSV 路径，汇总写到 <out>.summary.csv")
    _add_solver_flags(p)

    p = sub.add_parser("mds", help="二维 MDS 嵌入")
    p.add_argument("--input", required=True, help=".gss 集合文件")
    p.add_argument("--center", help="求解结果 JSON，其中心作为标签 center 加入")
    p.add_argument("--mean", type=int, help="加入 k 维均匀外蕴均值（标签 mean）")
    p.add_argument("--out", help="CSV 路径，缺省输出到 stdout")

    p = sub.add_parser("config", help="查看或修改配置")
    actions = p.add_subparsers(dest="action", required=True)
    actions.add_parser("show", help="输出当前配置 JSON")
    q = actions.add_parser("set", help="修改配置项并写回配置文件")
    q.add_argument("key", help="点号路径，例如 solver.max_iter")
    q.add_argument("value", help="JSON 取值，无法解析时按字符串处理")
    return parser


def _solver_config(args):
    from core.config import Config

    return Config().solver_config(a=args.a, eta=args.eta, zeta=args.zeta, beta=args.beta,
                                  max_iter=args.max_iter, step_mode=args.step_mode,
                                  projection=args.projection)


def _emit_json(data, out) -> None:
    from core.collection_io import dumps, write_json

    if out:
        write_json(out, data)
        logger.info("结果已写入 %s", out)
    else:
        print(dumps(data))


def cmd_solve(args) -> int:
    from core.collection_io import read_collection, read_weights
    from core.grassmann import extrinsic_mean
    from core.solver import solve, support_init

    collection = read_collection(args.input)
    config = _solver_config(args)
    init = None
    if args.warm_start:
        init = read_weights(args.warm_start)
    elif args.init == "support":
        init = support_init(collection, extrinsic_mean(collection, args.k))
    result = solve(collection, args.k, config, init_lambda=init)
    _emit_json(result.to_dict(), args.out)
    return 0


def cmd_order(args) -> int:
    from core.collection_io import read_collection
    from core.order_selection import build_report, select_order_mse, select_order_svd_elbow

    collection = read_collection(args.input)
    if args.rule == "mse":
        data = {"rule": "mse", "k": select_order_mse(collection)}
    elif args.rule == "svd-elbow":
        data = {"rule": "svd_elbow", "k": select_order_svd_elbow(collection)}
    else:
        report = build_report(collection, _solver_config(args), warm_start=not args.no_warm_start)
        data = report.to_dict()
        if args.rule != "all":
            data = {"rule": args.rule, "k": report.selections()[args.rule], **data}
    _emit_json(data, args.out)
    return 0


def _truth_path(out: str) -> str:
    stem = out[:-4] if out.endswith(".gss") else out
    return stem + ".truth.json"


def cmd_gen(args) -> int:
    from core.collection_io import write_collection, write_truth
    from core.config import Config
    from core.data_gen import DatasetSpec, generate

    seed = args.seed if args.seed is not None else int(Config().get("experiment.seed", 0))
    spec = DatasetSpec(model=args.model, n=args.n, k0=args.k0, k1=args.k1, k2=args.k2,
                       eps1=args.eps1, eps2=args.eps2, M1=args.M1, M2=args.M2, M3=args.M3,
                       dims=args.dims, orthogonal_completion=args.orthogonal_completion,
                       snr_db=args.snr_db, seed=seed, small_ball=args.small_ball)
    dataset = generate(spec)
    write_collection(args.out, dataset.collection)
    write_truth(_truth_path(args.out), dataset)
    return 0


def _experiment_from_file(path: str, solver):
    from core.collection_io import read_json
    from core.data_gen import DatasetSpec
    from core.exceptions import SchemaError
    from core.experiments import ExperimentConfig

    data = read_json(path)
    if not isinstance(data, dict):
        raise SchemaError(f"{path} 必须是 JSON 对象")
    data = dict(data)
    if data.get("dataset") is not None:
        data["dataset"] = DatasetSpec.from_dict(data["dataset"])
    if "no_common_dims" in data:
        data["no_common_dims"] = tuple(data["no_common_dims"])
    solver_overrides = data.pop("solver", None) or {}
    known = set(ExperimentConfig.__dataclass_fields__)
    unknown = sorted(set(data) - known)
    if unknown:
        raise SchemaError(f"试验配置包含未知键: {', '.join(unknown)}")
    if solver_overrides:
        from core.solver import SolverConfig

        merged = solver.to_dict()
        merged.update(solver_overrides)
        solver = SolverConfig(**merged)
    return ExperimentConfig(solver=solver, **data)


def cmd_experiment(args) -> int:
    from dataclasses import replace

    from core.experiments import preset, run_experiment

    solver = _solver_config(args)
    if args.preset:
        config = preset(args.preset, trials=args.trials, seed=args.seed, solver=solver, axis=args.axis)
    else:
        config = _experiment_from_file(args.config, solver)
        changes = {key: value for key, value in
                   (("trials", args.trials), ("seed", args.seed), ("axis", args.axis)) if value is not None}
        if changes:
            config = replace(config, **changes)
    if args.threads is not None:
        config = replace(config, threads=args.threads)
    if args.no_warm_start:
        config = replace(config, warm_start=False)

    result = run_experiment(config)
    paths = result.write(args.out)
    logger.info("试验输出: %s", ", ".join(paths))
    return 0


def cmd_mds(args) -> int:
    from core.collection_io import center_from_dict, read_collection, read_result, write_csv
    from core.grassmann import extrinsic_mean
    from core.mds import embed_collection

    collection = read_collection(args.input)
    extra = {}
    if args.center:
        center = center_from_dict(read_result(args.center)["center"])
        if center is not None:
            extra["center"] = center
    if args.mean is not None:
        extra["mean"] = extrinsic_mean(collection, args.mean)
    labels, coords = embed_collection(collection, extra)
    rows = [[label, float(x), float(y)] for label, (x, y) in zip(labels, coords)]
    if args.out:
        write_csv(args.out, ("label", "x", "y"), rows)
    else:
        writer = csv.writer(sys.stdout, lineterminator="\n")
        writer.writerow(("label", "x", "y"))
        writer.writerows([label, format(x, ".17g"), format(y, ".17g")] for label, x, y in rows)
    return 0


def cmd_config(args) -> int:
    import json

    from core.config import Config
    from core.exceptions import InvalidConfig

    config = Config()
    if args.action == "show":
        _emit_json(config.get_all(), None)
        return 0

    previous = config.get(args.key, include_env=False)
    if previous is None or isinstance(previous, dict):
        raise InvalidConfig(f"未知配置项: {args.key}")
    try:
        value = json.loads(args.value)
    except json.JSONDecodeError:
        value = args.value
    # 求解器参数先在内存中校验，失败时恢复原值
    config.set(args.key, value, persist=False)
    try:
        config.solver_config()
    except InvalidConfig:
        config.set(args.key, previous, persist=False)
        raise
    config.set(args.key, value)
    logger.info("配置已更新: %s = %r", args.key, value)
    return 0


COMMANDS = {
    "solve": cmd_solve,
    "order": cmd_order,
    "gen": cmd_gen,
    "experiment": cmd_experiment,
    "mds": cmd_mds,
    "config": cmd_config,
}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)

    # 初始化日志系统（必须在业务模块导入前）
    from core.config import Config
    from core.logger import setup_logging

    setup_logging(args.log_level or str(Config().get("log_level", "INFO")))

    from core.exceptions import EXIT_CONFIG, GmebError
    from core.performance import PerformanceMonitor

    try:
        code = COMMANDS[args.command](args)
    except GmebError as e:
        logger.error("%s 失败: %s", args.command, e)
        print(f"错误: {e}", file=sys.stderr)
        code = e.exit_code
    except OSError as e:
        logger.error("%s 失败: %s", args.command, e)
        print(f"错误: 文件无法读写: {e}", file=sys.stderr)
        code = EXIT_CONFIG
    except Exception:
        logger.exception("%s 发生未预期的异常", args.command)
        code = 1
    if args.profile:
        print(PerformanceMonitor().export_report(), file=sys.stderr)
    return code


if __name__ == "__main__":
    sys.exit(main())
