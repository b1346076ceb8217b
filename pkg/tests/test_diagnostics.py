#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
诊断工具测试: NDVI、正态得分、半变异函数与近邻散点
"""

import numpy as np
import pytest
from scipy import stats

from app.copula import clayton_corr_sym
from app.correlation import CorrelationModel, SpatialConfig
from app.diagnostics import (
    empirical_semivariogram, ndvi, neighbor_scatter, normal_score, theoretical_semivariogram,
)
from app.errors import UndefinedIndexError
from app.fields import DependenceParams, MarginalSpec


def test_ndvi_values():
    """NDVI 示例值"""
    assert ndvi(0.5, 0.1) == pytest.approx(2.0 / 3.0)
    assert ndvi(0.2, 0.2) == 0.0
    assert ndvi(0.0, 0.3) == -1.0
    np.testing.assert_allclose(ndvi([0.6, 0.1], [0.2, 0.3]), [0.5, -0.5])


def test_ndvi_errors():
    """负反射率与零分母"""
    with pytest.raises(ValueError):
        ndvi(-0.1, 0.2)
    with pytest.raises(UndefinedIndexError):
        ndvi(0.0, 0.0)
    with pytest.raises(UndefinedIndexError):
        ndvi([0.3, 0.0], [0.1, 0.0])


def test_normal_score():
    """正态得分 Φ⁻¹(r/(n+1)), 并列取平均秩"""
    scores = normal_score([3.0, 1.0, 2.0])
    np.testing.assert_allclose(scores, stats.norm.ppf([0.75, 0.25, 0.5]))
    tied = normal_score([1.0, 1.0, 5.0])
    assert tied[0] == tied[1]
    assert tied[0] == pytest.approx(stats.norm.ppf(1.5 / 4.0))
    with pytest.raises(ValueError):
        normal_score([0.3])


def test_empirical_semivariogram_small_example():
    """三个站点的分箱结果"""
    cfg = SpatialConfig(np.array([0.0, 1.0, 3.0]))
    frame = empirical_semivariogram(cfg, np.array([0.0, 1.0, 3.0]), n_bins=3, max_dist=3.0)
    # 距离 1 → 第二个箱, 距离 2 → 第三个箱, 距离 3 → 最后一个箱 (闭区间)
    assert list(frame.columns) == ["center", "semivariance", "pairs"]
    np.testing.assert_allclose(frame["center"], [1.5, 2.5])
    np.testing.assert_array_equal(frame["pairs"], [1, 2])
    np.testing.assert_allclose(frame["semivariance"], [0.5, 0.5 * (4.0 + 9.0) / 2.0])


def test_empirical_semivariogram_validation():
    """参数校验"""
    cfg = SpatialConfig(np.array([0.0, 1.0]))
    with pytest.raises(ValueError):
        empirical_semivariogram(cfg, np.array([0.1, 0.2]), n_bins=0, max_dist=1.0)
    with pytest.raises(ValueError):
        empirical_semivariogram(cfg, np.array([0.1, 0.2]), n_bins=2, max_dist=0.0)
    with pytest.raises(ValueError):
        empirical_semivariogram(cfg, np.array([0.1, 0.2, 0.3]), n_bins=2, max_dist=1.0)


def test_theoretical_semivariogram_uniform():
    """均匀边缘: γ(h) = {1 - ρ_C(h)}/12, 零距离为 0, 支撑外为 σ²"""
    params = DependenceParams(nu=2.0, corr=CorrelationModel(b=0.2))
    frame = theoretical_semivariogram(MarginalSpec(), params, [0.0, 0.1, 0.5])
    assert list(frame.columns) == ["distance", "semivariance"]
    gamma = frame["semivariance"].to_numpy()
    assert gamma[0] == 0.0
    assert gamma[1] == pytest.approx((1.0 - clayton_corr_sym(0.5 ** 4)) / 12.0, abs=1e-8)
    assert gamma[2] == pytest.approx(1.0 / 12.0)


def test_neighbor_scatter():
    """每个阶数 n 行, 站点与近邻的正态得分"""
    cfg = SpatialConfig(np.array([0.0, 1.0, 3.0, 7.0]))
    values = np.array([0.1, 0.4, 0.3, 0.9])
    frame = neighbor_scatter(cfg, values, orders=(2, 1))
    assert list(frame.columns) == ["order", "site", "neighbor", "z_site", "z_neighbor"]
    assert len(frame) == 8
    first = frame[frame["order"] == 1]
    np.testing.assert_array_equal(first["neighbor"], [1, 0, 1, 2])
    scores = normal_score(values)
    np.testing.assert_allclose(first["z_neighbor"], scores[[1, 0, 1, 2]])
    with pytest.raises(ValueError):
        neighbor_scatter(cfg, values, orders=(0,))
