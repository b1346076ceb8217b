#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
桌面规模的模拟研究
bias: beta 回归随机场的复合似然估计偏差与 MSE
plic:   Clayton 生成数据上 Clayton 与高斯 copula 拟合的 PLIC 比较
"""

import os
import sys
import time
import logging
from dataclasses import replace
from pathlib import Path

import numpy as np
import pandas as pd

# 导入项目包
sys.path.insert(0, str(Path(__file__).parent.parent))
from app.correlation import CorrelationModel, SpatialConfig
from app.errors import SpatialCopulaError
from app.fields import DependenceParams, MarginalSpec, derive_rng, derive_seed, random_sites, simulate_field
from app.fit_config import FitConfig
from app.inference import fit, fit_with_uncertainty

logger = logging.getLogger(__name__)

# 模拟设定: β₀=0.2, β₁=-0.2, 精度 1.5, GW_{0,4,0.2}
TRUE_BETA = (0.2, -0.2)
TRUE_PRECISION = 1.5
TRUE_B = 0.2


def _design(n: int, seed: int, with_covariate: bool = True) -> SpatialConfig:
    sites = random_sites(n, seed)
    columns = [np.ones(n)]
    if with_covariate:
        columns.append(derive_rng(seed, 104729).uniform(size=n))
    return SpatialConfig(sites.coords, np.column_stack(columns))


def run_bias_study(replicates: int, n: int, nu: int, seed: int, out: str) -> pd.DataFrame:
    """偏差与 MSE 表"""
    cfg = _design(n, seed)
    marginal = MarginalSpec("beta_regression", beta_coeffs=TRUE_BETA, precision=TRUE_PRECISION)
    params = DependenceParams(nu=float(nu), corr=CorrelationModel(b=TRUE_B))
    truth = {"beta0": TRUE_BETA[0], "beta1": TRUE_BETA[1], "precision": TRUE_PRECISION, "b": TRUE_B}
    fit_cfg = FitConfig(nu_grid=[nu], marginal="beta_regression", neighbors=2)

    rows = []
    started = time.perf_counter()
    for r in range(replicates):
        data = simulate_field(cfg, params, marginal, derive_seed(seed, r))
        try:
            result = fit(data, cfg, fit_cfg)
        except SpatialCopulaError as e:
            print(f"  ✗ 重复 {r} 拟合失败: {e}")
            continue
        rows.append({name: result.theta_hat[name] for name in truth})
        if (r + 1) % 10 == 0:
            print(f"  已完成 {r + 1}/{replicates} 次重复, 用时 {time.perf_counter() - started:.1f}s")

    estimates = pd.DataFrame(rows)
    table = pd.DataFrame({
        "parameter": list(truth),
        "truth": list(truth.values()),
        "bias": [float(estimates[k].mean() - v) for k, v in truth.items()],
        "mse": [float(((estimates[k] - v) ** 2).mean()) for k, v in truth.items()],
        "replicates": len(estimates),
    })
    table.to_csv(out, index=False, float_format="%.6g")
    return table


def run_plic(replicates: int, n: int, nu: int, bootstrap: int, seed: int, out: str) -> pd.DataFrame:
    """PLIC 模型选择比较"""
    cfg = _design(n, seed, with_covariate=False)
    marginal = MarginalSpec("beta_regression", beta_coeffs=(0.87,), precision=30.0)
    params = DependenceParams(nu=float(nu), corr=CorrelationModel(b=TRUE_B))
    base = FitConfig(marginal="beta_regression", neighbors=2, bootstrap=bootstrap, seed=seed)

    rows = []
    for r in range(replicates):
        data = simulate_field(cfg, params, marginal, derive_seed(seed, r))
        try:
            clayton = fit_with_uncertainty(data, cfg, replace(base, copula="clayton", nu_grid=[nu],
                                                              seed=derive_seed(seed, r, 1)))
            gaussian = fit_with_uncertainty(data, cfg, replace(base, copula="gaussian",
                                                               seed=derive_seed(seed, r, 2)))
        except SpatialCopulaError as e:
            print(f"  ✗ 重复 {r} 失败: {e}")
            continue
        rows.append({"replicate": r, "plic_clayton": clayton.plic, "plic_gaussian": gaussian.plic})
        print(f"  重复 {r}: PLIC Clayton={clayton.plic}, Gaussian={gaussian.plic}")

    frame = pd.DataFrame(rows)
    frame["clayton_selected"] = frame["plic_clayton"] < frame["plic_gaussian"]
    frame.to_csv(out, index=False, float_format="%.10g")
    return frame


def main():
    """主函数"""
    import argparse

    parser = argparse.ArgumentParser(
        description="桌面规模模拟研究",
        formatter_class=argparse.RawDescriptionHelpFormatter,
        epilog="""
示例:
  # 偏差与 MSE (n=400, 200 次重复)
  python scripts/simulation_study.py bias --replicates 200 --n 400 --nu 2

  # PLIC 模型选择 (ν=4, 50 次重复)
  python scripts/simulation_study.py plic --replicates 50 --nu 4 --bootstrap 30
        """
    )
    parser.add_argument("study", choices=["bias", "plic"], help="研究类型")
    parser.add_argument("--replicates", type=int, default=200)
    parser.add_argument("--n", type=int, default=400)
    parser.add_argument("--nu", type=int, default=2)
    parser.add_argument("--bootstrap", type=int, default=30)
    parser.add_argument("--seed", type=int, default=2024)
    parser.add_argument("--out", default=None)
    args = parser.parse_args()

    logging.basicConfig(level=logging.WARNING, format='%(asctime)s - %(levelname)s - %(message)s')

    # 切换到项目根目录
    os.chdir(Path(__file__).parent.parent)
    os.makedirs("output", exist_ok=True)
    out = args.out or f"output/{args.study}_nu{args.nu}_n{args.n}.csv"

    try:
        started = time.perf_counter()
        if args.study == "bias":
            table = run_bias_study(args.replicates, args.n, args.nu, args.seed, out)
            print(table.to_string(index=False))
        else:
            frame = run_plic(args.replicates, args.n, args.nu, args.bootstrap, args.seed, out)
            share = float(frame["clayton_selected"].mean()) if len(frame) else float("nan")
            print(f"Clayton 模型 PLIC 更小的比例: {share:.2%} ({len(frame)} 次重复)")
        print(f"\n✓ 结果已写入 {out}, 用时 {time.perf_counter() - started:.1f}s")
    except KeyboardInterrupt:
        print("\n\n操作已取消")
        sys.exit(1)
    except Exception as e:
        print(f"\n错误: {e}")
        import traceback
        traceback.print_exc()
        sys.exit(1)


if __name__ == "__main__":
    main()
