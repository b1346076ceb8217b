#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
诊断模块
NDVI 计算、正态得分变换、经验与理论半变异函数、近邻散点数据
"""

import logging
from typing import Optional, Sequence

import numpy as np
import pandas as pd
from scipy.spatial.distance import pdist
from scipy.stats import norm, rankdata

from .copula import DEFAULT_QUAD_NODES, DOUBLING_TOL, marginal_corr
from .correlation import SpatialConfig, corr_from_distances
from .errors import UndefinedIndexError
from .fields import DependenceParams, MarginalSpec
from .inference import nn_pairs
from .specfun import SeriesControl

logger = logging.getLogger(__name__)


def ndvi(nir, red):
    """
    归一化植被指数 (NIR - RED)/(NIR + RED)

    Raises:
        ValueError: 波段值为负
        UndefinedIndexError: NIR + RED = 0
    """
    nir = np.asarray(nir, dtype=float)
    red = np.asarray(red, dtype=float)
    if np.any(nir < 0) or np.any(red < 0):
        raise ValueError("波段反射率不能为负")
    total = nir + red
    if np.any(total == 0):
        raise UndefinedIndexError("NIR + RED = 0 时 NDVI 无定义")
    result = (nir - red) / total
    return float(result) if np.ndim(result) == 0 else result


def normal_score(values) -> np.ndarray:
    """
    正态得分变换 Φ⁻¹(r/(n+1)), r 为秩 (并列取平均秩)
    """
    values = np.asarray(values, dtype=float).reshape(-1)
    n = values.size
    if n < 2:
        raise ValueError(f"正态得分变换至少需要 2 个值: n={n}")
    return norm.ppf(rankdata(values, method='average') / (n + 1.0))


def empirical_semivariogram(cfg: SpatialConfig, values, n_bins: int,
                            max_dist: float) -> pd.DataFrame:
    """
    Matheron 经验半变异函数

    每个距离分箱内 ½ 平均 (v_i - v_j)², 空箱不输出。

    Args:
        cfg: 站点配置
        values: 观测值
        n_bins: 分箱数
        max_dist: 最大距离

    Returns:
        DataFrame, 列为 center, semivariance, pairs
    """
    if n_bins < 1:
        raise ValueError(f"分箱数必须为正: {n_bins}")
    if not max_dist > 0:
        raise ValueError(f"最大距离必须为正: {max_dist}")
    values = np.asarray(values, dtype=float).reshape(-1)
    if values.size != cfg.n:
        raise ValueError(f"观测值个数 {values.size} 与站点数 {cfg.n} 不一致")

    dist = pdist(cfg.coords)
    sq = pdist(values[:, None], metric='sqeuclidean')
    keep = dist <= max_dist
    width = max_dist / n_bins
    index = np.minimum((dist[keep] / width).astype(int), n_bins - 1)
    counts = np.bincount(index, minlength=n_bins)
    sums = np.bincount(index, weights=sq[keep], minlength=n_bins)
    centers = (np.arange(n_bins) + 0.5) * width
    filled = counts > 0
    return pd.DataFrame({
        "center": centers[filled],
        "semivariance": 0.5 * sums[filled] / counts[filled],
        "pairs": counts[filled],
    })


def theoretical_semivariogram(spec: MarginalSpec, params: DependenceParams, dist_grid,
                              copula: str = "clayton", covariates_row: Optional[np.ndarray] = None,
                              quad_nodes: int = DEFAULT_QUAD_NODES,
                              ctrl: Optional[SeriesControl] = None,
                              doubling_tol: float = DOUBLING_TOL) -> pd.DataFrame:
    """
    理论半变异函数 σ²{1 - ρ_S(h)}

    零距离处为 0; 有块金效应时 h > 0 使用 ρ(h)(1 - τ²)。

    Returns:
        DataFrame, 列为 distance, semivariance
    """
    dist = np.atleast_1d(np.asarray(dist_grid, dtype=float))
    row = None if covariates_row is None else np.atleast_2d(covariates_row)
    sigma2 = float(np.asarray(spec.variance(row)).reshape(-1)[0])
    if not (np.isfinite(sigma2) and sigma2 > 0):
        raise ValueError(f"边缘方差必须有限且为正: {sigma2}")
    rho = corr_from_distances(dist, params.corr, ctrl) * (1.0 - params.corr.tau2)
    gamma = np.empty(dist.shape)
    for index, (h, r) in enumerate(zip(dist, rho)):
        if h == 0:
            gamma[index] = 0.0
            continue
        rho_s = marginal_corr(spec, params.nu, float(r), quad_nodes, copula, row, ctrl, doubling_tol)
        gamma[index] = sigma2 * (1.0 - rho_s)
    return pd.DataFrame({"distance": dist, "semivariance": gamma})


def neighbor_scatter(cfg: SpatialConfig, values, orders: Sequence[int] = (1, 2, 3)) -> pd.DataFrame:
    """
    第 k 近邻的正态得分散点数据

    Returns:
        DataFrame, 列为 order, site, neighbor, z_site, z_neighbor
    """
    orders = sorted({int(k) for k in orders})
    if not orders or orders[0] < 1:
        raise ValueError(f"近邻阶数必须为正整数: {orders}")
    scores = normal_score(values)
    m = orders[-1]
    pairs = nn_pairs(cfg, m).pairs.reshape(cfg.n, m, 2)
    frames = []
    for k in orders:
        neighbor = pairs[:, k - 1, 0]
        site = pairs[:, k - 1, 1]
        frames.append(pd.DataFrame({
            "order": k,
            "site": site,
            "neighbor": neighbor,
            "z_site": scores[site],
            "z_neighbor": scores[neighbor],
        }))
    return pd.concat(frames, ignore_index=True)
