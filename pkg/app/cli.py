#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
命令行模块
simulate / fit / variogram / density / correlation / scatter / ndvi / config 子命令,
所有图表数据以 CSV 输出, 拟合结果以 JSON 输出
"""

import argparse
import json
import logging
import sys
from dataclasses import replace
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence

import numpy as np
import pandas as pd
import yaml

from .config_manager import CONFIG_FILE, get_config_manager
from .copula import correlation_curve, density_grid
from .copula_adapters import SUPPORTED_COPULA_TYPES
from .correlation import FAMILY_EXPONENTIAL, FAMILY_GENERALIZED_WENDLAND, CorrelationModel, SpatialConfig
from .dataset import FLOAT_FORMAT, Dataset
from .diagnostics import empirical_semivariogram, ndvi, neighbor_scatter, theoretical_semivariogram
from .errors import DatasetError, SpatialCopulaError, UndefinedIndexError
from .fields import (MARGINAL_BETA, MARGINAL_BETA_REGRESSION, MARGINAL_UNIFORM, DependenceParams,
                     MarginalSpec, derive_rng, random_sites, simulate_field)
from .fit_config import FitConfig, FitResult, load_fit_config
from .inference import fit_with_uncertainty
from version import PRODUCT_NAME, VERSION

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_NUMERICAL = 1
EXIT_USAGE = 2

MODEL_CHOICES = {"gw": FAMILY_GENERALIZED_WENDLAND, "exp": FAMILY_EXPONENTIAL}
MARGINAL_CHOICES = {"uniform": MARGINAL_UNIFORM, "beta": MARGINAL_BETA, "beta-reg": MARGINAL_BETA_REGRESSION}

# 模拟 beta 回归协变量 u₁(s) 的派生流编号
_COVARIATE_STREAM = 104729


def _float_list(text: str) -> List[float]:
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"无法解析为数值列表: {text}")


def _int_list(text: str) -> List[int]:
    try:
        return [int(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"无法解析为整数列表: {text}")


def _bounds(text: Optional[str]):
    if text is None:
        return None
    values = _float_list(text)
    if len(values) != 2 or not values[1] > values[0]:
        raise argparse.ArgumentTypeError(f"bounds 必须是 a1,a2 且 a2 > a1: {text}")
    return values[0], values[1]


def _add_model_arguments(parser: argparse.ArgumentParser) -> None:
    parser.add_argument('--model', choices=sorted(MODEL_CHOICES), default='gw', help='相关函数族')
    parser.add_argument('--delta', type=float, default=0.0, help='广义 Wendland 光滑参数 δ')
    parser.add_argument('--mu', type=float, default=4.0, help='广义 Wendland 形状参数 μ')
    parser.add_argument('--range', dest='range_', type=float, default=0.2, help='紧支撑半径 / 尺度 b')
    parser.add_argument('--nugget', type=float, default=0.0, help='块金效应 τ²')


def _add_marginal_arguments(parser: argparse.ArgumentParser, default: str = 'uniform') -> None:
    parser.add_argument('--marginal', choices=sorted(MARGINAL_CHOICES), default=default, help='边缘分布')
    parser.add_argument('--xi', type=float, default=2.0, help='Beta(ξ, δ) 的 ξ')
    parser.add_argument('--shape-delta', type=float, default=3.0, help='Beta(ξ, δ) 的 δ')
    parser.add_argument('--beta', type=_float_list, default=[0.2, -0.2], help='beta 回归系数 β₀,β₁,...')
    parser.add_argument('--precision', type=float, default=1.5, help='beta 回归精度参数')


def build_parser() -> argparse.ArgumentParser:
    """构造命令行解析器"""
    parser = argparse.ArgumentParser(prog='spatial-copula', description=f"{PRODUCT_NAME} {VERSION}")
    parser.add_argument('--settings', default=CONFIG_FILE, help='YAML 数值配置文件')
    parser.add_argument('--verbose', action='store_true', help='输出调试日志')
    sub = parser.add_subparsers(dest='command', required=True)

    p = sub.add_parser('simulate', help='模拟随机场并写出 CSV')
    p.add_argument('--n', type=int, required=True, help='站点数')
    _add_model_arguments(p)
    p.add_argument('--nu', type=int, default=2, help='Clayton 随机场 ν (正整数)')
    p.add_argument('--copula', choices=SUPPORTED_COPULA_TYPES, default='clayton')
    _add_marginal_arguments(p)
    p.add_argument('--bounds', type=_bounds, default=None, help='输出值还原到 [a1, a2]')
    p.add_argument('--seed', type=int, default=0)
    p.add_argument('--out', required=True)

    p = sub.add_parser('fit', help='加权成对复合似然拟合')
    p.add_argument('--data', required=True)
    p.add_argument('--config', default=None, help='JSON 拟合配置')
    p.add_argument('--neighbors', type=int, default=None)
    p.add_argument('--nu-grid', type=_int_list, default=None)
    p.add_argument('--nu-strategy', choices=['grid', 'two_step'], default=None)
    p.add_argument('--copula', choices=SUPPORTED_COPULA_TYPES, default=None)
    p.add_argument('--marginal', choices=sorted(MARGINAL_CHOICES), default=None)
    p.add_argument('--bootstrap', type=int, default=None, help='自助法重复次数 (≥ 30)')
    p.add_argument('--select-by', choices=['wpl', 'plic'], default=None)
    p.add_argument('--bounds', type=_bounds, default=None)
    p.add_argument('--seed', type=int, default=None)
    p.add_argument('--out', required=True)

    p = sub.add_parser('variogram', help='经验半变异函数 (可叠加拟合模型)')
    p.add_argument('--data', required=True)
    p.add_argument('--bins', type=int, default=15)
    p.add_argument('--maxdist', type=float, required=True)
    p.add_argument('--fit', default=None, help='fit 输出的 JSON, 给定时增加理论曲线')
    p.add_argument('--bounds', type=_bounds, default=None)
    p.add_argument('--out', required=True)

    p = sub.add_parser('density', help='二元 copula 密度网格')
    p.add_argument('--nu', type=float, default=2.0)
    p.add_argument('--rho', type=float, required=True)
    p.add_argument('--grid', type=int, default=50)
    p.add_argument('--transform', choices=['uniform', 'gaussian-margins'], default='uniform')
    p.add_argument('--copula', choices=SUPPORTED_COPULA_TYPES, default='clayton')
    p.add_argument('--out', required=True)

    p = sub.add_parser('correlation', help='相关随距离变化的曲线')
    p.add_argument('--nu-list', type=_float_list, default=[1.0, 2.0, 5.0])
    _add_model_arguments(p)
    p.add_argument('--copula', choices=SUPPORTED_COPULA_TYPES, default='clayton')
    _add_marginal_arguments(p)
    p.add_argument('--max-dist', type=float, default=None, help='默认取 b')
    p.add_argument('--points', type=int, default=50)
    p.add_argument('--out', required=True)

    p = sub.add_parser('scatter', help='第 k 近邻正态得分散点数据')
    p.add_argument('--data', required=True)
    p.add_argument('--orders', type=_int_list, default=[1, 2, 3])
    p.add_argument('--out', required=True)

    p = sub.add_parser('ndvi', help='由波段 CSV (x,y,nir,red) 计算 NDVI')
    p.add_argument('--bands', required=True)
    p.add_argument('--out', required=True)

    p = sub.add_parser('config', help='查看、修改、导出或导入数值配置')
    p.add_argument('action', choices=['show', 'set', 'export', 'import'])
    p.add_argument('--section', default=None, help='配置节, 如 quadrature')
    p.add_argument('--key', default=None, help='配置项, 如 nodes')
    p.add_argument('--value', default=None, help='新值, 按 YAML 标量解析')
    p.add_argument('--path', default=None, help='导出或导入的 YAML 文件')
    return parser


# ---------------------------------------------------------------------------
# 子命令
# ---------------------------------------------------------------------------

def _correlation_model(args, dim: int = 2) -> CorrelationModel:
    return CorrelationModel(family=MODEL_CHOICES[args.model], delta=args.delta, mu_gw=args.mu,
                            b=args.range_, tau2=args.nugget, dim=dim)


def _marginal_spec(args) -> MarginalSpec:
    family = MARGINAL_CHOICES[args.marginal]
    if family == MARGINAL_BETA:
        return MarginalSpec(MARGINAL_BETA, xi=args.xi, delta=args.shape_delta)
    if family == MARGINAL_BETA_REGRESSION:
        return MarginalSpec(MARGINAL_BETA_REGRESSION, beta_coeffs=tuple(args.beta), precision=args.precision)
    return MarginalSpec(MARGINAL_UNIFORM)


def _quadrature(settings) -> Dict[str, Any]:
    options = settings.get_quadrature_options()
    return {"quad_nodes": int(options["nodes"]), "doubling_tol": float(options["doubling_tol"])}


def _write_frame(frame: pd.DataFrame, path: str) -> None:
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    frame.to_csv(path, index=False, float_format=FLOAT_FORMAT)
    logger.info(f"已写出 {path}: {len(frame)} 行")


def cmd_simulate(args, ctrl) -> Dict[str, Any]:
    marginal = _marginal_spec(args)
    sites = random_sites(args.n, args.seed)
    covariates = None
    if marginal.family == MARGINAL_BETA_REGRESSION:
        k = len(marginal.beta_coeffs)
        extra = derive_rng(args.seed, _COVARIATE_STREAM).uniform(size=(args.n, k - 1))
        covariates = np.hstack([np.ones((args.n, 1)), extra])
    cfg = SpatialConfig(sites.coords, covariates)
    params = DependenceParams(nu=float(args.nu), corr=_correlation_model(args, cfg.dim))
    valid, msg = params.validate(for_simulation=args.copula == 'clayton')
    if not valid:
        raise ValueError(msg)
    realization = simulate_field(cfg, params, marginal, args.seed, copula=args.copula)
    Dataset.from_realization(cfg, realization, bounds=args.bounds).write_csv(args.out)
    return {"out": args.out, "n": cfg.n}


def _fit_config_from_args(args, settings) -> FitConfig:
    fit_cfg = load_fit_config(args.config) if args.config else settings.default_fit_config()
    overrides = {
        "neighbors": args.neighbors,
        "nu_grid": args.nu_grid,
        "nu_strategy": args.nu_strategy,
        "copula": args.copula,
        "marginal": MARGINAL_CHOICES.get(args.marginal) if args.marginal else None,
        "bootstrap": args.bootstrap,
        "select_by": args.select_by,
        "seed": args.seed,
        "bounds": list(args.bounds) if args.bounds else None,
    }
    fit_cfg = replace(fit_cfg, **{k: v for k, v in overrides.items() if v is not None})
    valid, msg = fit_cfg.validate()
    if not valid:
        raise ValueError(msg)
    return fit_cfg


def cmd_fit(args, ctrl, settings) -> Dict[str, Any]:
    fit_cfg = _fit_config_from_args(args, settings)
    dataset = Dataset.read_csv(args.data, bounds=tuple(fit_cfg.bounds) if fit_cfg.bounds else None)
    cfg = dataset.to_spatial_config()
    data = dataset.to_realization(copula=fit_cfg.copula)

    def progress(current: int, total: int, message: str) -> None:
        logger.info(f"[{current}/{total}] {message}")

    result = fit_with_uncertainty(data, cfg, fit_cfg, ctrl, progress_callback=progress)
    result.save(args.out)
    return {"out": args.out, "wpl": result.wpl_max, "nu": result.nu_selected, "plic": result.plic,
            "n_pairs": result.n_pairs, "wall_time": result.wall_time}


def cmd_variogram(args, ctrl, settings) -> Dict[str, Any]:
    dataset = Dataset.read_csv(args.data, bounds=args.bounds)
    cfg = dataset.to_spatial_config()
    frame = empirical_semivariogram(cfg, dataset.values, args.bins, args.maxdist)
    if args.fit:
        with open(args.fit, 'r', encoding='utf-8') as f:
            result = FitResult.from_dict(json.load(f))
        row = cfg.covariates.mean(axis=0) if result.marginal["family"] == MARGINAL_BETA_REGRESSION else None
        theory = theoretical_semivariogram(result.marginal_spec(), result.dependence_params(),
                                           frame["center"].to_numpy(), copula=result.copula,
                                           covariates_row=row,
                                           ctrl=ctrl, **_quadrature(settings))
        frame["fitted"] = theory["semivariance"].to_numpy()
    _write_frame(frame, args.out)
    return {"out": args.out, "bins": len(frame)}


def cmd_density(args, ctrl) -> Dict[str, Any]:
    x, y, dens = density_grid(args.nu, args.rho, args.grid, args.transform, args.copula, ctrl=ctrl)
    frame = pd.DataFrame({"x": x.reshape(-1), "y": y.reshape(-1), "density": dens.reshape(-1)})
    _write_frame(frame, args.out)
    return {"out": args.out, "points": len(frame)}


def cmd_correlation(args, ctrl, settings) -> Dict[str, Any]:
    model = _correlation_model(args)
    max_dist = args.max_dist if args.max_dist is not None else model.b
    dist = np.linspace(0.0, max_dist, args.points)
    marginal = _marginal_spec(args)
    spec = None if marginal.family == MARGINAL_UNIFORM else marginal
    row = None
    if marginal.family == MARGINAL_BETA_REGRESSION:
        # 协变量取 u₁ 的均值
        row = np.array([1.0] + [0.5] * (len(marginal.beta_coeffs) - 1))
    curves = correlation_curve(args.nu_list, model, dist, spec=spec, copula=args.copula,
                               covariates_row=row, ctrl=ctrl, **_quadrature(settings))
    frames = [pd.DataFrame({"nu": nu, "distance": dist, "correlation": values})
              for nu, values in curves.items()]
    _write_frame(pd.concat(frames, ignore_index=True), args.out)
    return {"out": args.out, "curves": len(frames)}


def cmd_scatter(args) -> Dict[str, Any]:
    dataset = Dataset.read_csv(args.data)
    frame = neighbor_scatter(dataset.to_spatial_config(), dataset.values, args.orders)
    _write_frame(frame, args.out)
    return {"out": args.out, "points": len(frame)}


def cmd_ndvi(args) -> Dict[str, Any]:
    try:
        bands = pd.read_csv(args.bands)
    except (OSError, pd.errors.ParserError, pd.errors.EmptyDataError) as e:
        raise DatasetError(f"无法读取波段文件 {args.bands}: {e}") from e
    missing = [c for c in ("x", "y", "nir", "red") if c not in bands.columns]
    if missing:
        raise DatasetError(f"波段文件缺少列: {missing}")
    numeric = bands[["x", "y", "nir", "red"]].apply(pd.to_numeric, errors='coerce')
    if numeric.isna().any().any():
        raise DatasetError(f"波段文件 {args.bands} 存在无法解析的数值")
    values = ndvi(numeric["nir"].to_numpy(), numeric["red"].to_numpy())
    frame = pd.DataFrame({"x": numeric["x"], "y": numeric["y"], "value": np.atleast_1d(values)})
    _write_frame(frame, args.out)
    return {"out": args.out, "n": len(frame)}


def cmd_config(args, settings) -> Dict[str, Any]:
    if args.action == 'show':
        return {"config": settings.get_all_config()}
    if args.action == 'set':
        if args.section is None or args.key is None or args.value is None:
            raise ValueError("config set 需要 --section, --key 与 --value")
        value = yaml.safe_load(args.value)
        if not settings.set_value(args.section, args.key, value):
            raise OSError(f"无法写入配置文件 {settings.config_file}")
        return {"section": args.section, "key": args.key, "value": value}
    if args.path is None:
        raise ValueError(f"config {args.action} 需要 --path")
    if args.action == 'export':
        if not settings.export_config(args.path):
            raise OSError(f"导出配置失败: {args.path}")
    elif not settings.import_config(args.path):
        raise ValueError(f"导入配置失败: {args.path}")
    return {"path": args.path}


def _error_payload(error: BaseException) -> str:
    return json.dumps({"status": "error", "error": type(error).__name__, "message": str(error)},
                      ensure_ascii=False)


def run(argv: Optional[Sequence[str]] = None) -> int:
    """
    执行命令行

    Returns:
        退出码: 0 成功, 1 数值失败, 2 参数或数据错误
    """
    parser = build_parser()
    args = parser.parse_args(argv)

    settings = get_config_manager(args.settings)
    level = "DEBUG" if args.verbose else settings.get_log_level()
    logging.getLogger().setLevel(getattr(logging, level))
    ctrl = settings.get_series_control()

    handlers = {
        'simulate': lambda: cmd_simulate(args, ctrl),
        'fit': lambda: cmd_fit(args, ctrl, settings),
        'variogram': lambda: cmd_variogram(args, ctrl, settings),
        'density': lambda: cmd_density(args, ctrl),
        'correlation': lambda: cmd_correlation(args, ctrl, settings),
        'scatter': lambda: cmd_scatter(args),
        'ndvi': lambda: cmd_ndvi(args),
        'config': lambda: cmd_config(args, settings),
    }
    try:
        summary = handlers[args.command]()
    except (DatasetError, UndefinedIndexError) as e:
        logger.error(f"{args.command} 数据错误: {e}", exc_info=True)
        print(_error_payload(e), file=sys.stderr)
        return EXIT_USAGE
    except SpatialCopulaError as e:
        logger.error(f"{args.command} 数值计算失败: {e}", exc_info=True)
        print(_error_payload(e), file=sys.stderr)
        return EXIT_NUMERICAL
    except (ValueError, KeyError, OSError) as e:
        logger.error(f"{args.command} 参数错误: {e}", exc_info=True)
        print(_error_payload(e), file=sys.stderr)
        return EXIT_USAGE

    print(json.dumps({"status": "ok", "command": args.command, **summary}, ensure_ascii=False, default=str))
    return EXIT_OK
