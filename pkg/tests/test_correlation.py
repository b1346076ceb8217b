#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
空间相关模型测试
"""

import numpy as np
import pytest

from app.correlation import (
    FAMILY_EXPONENTIAL, CorrelationModel, SpatialConfig, chol_factor, corr_from_distances,
    corr_matrix, corr_with_nugget, exponential_corr, gw_corr, pairwise_distances,
)
from app.errors import FactorizationError


T_GRID = np.array([0.05, 0.2, 0.45, 0.5, 0.7, 0.9, 0.99])


def test_gw_delta_zero_is_askey():
    """δ = 0 时为 (1 - h/b)^μ"""
    model = CorrelationModel(delta=0.0, mu_gw=4.0, b=0.2)
    dist = T_GRID * 0.2
    np.testing.assert_allclose(gw_corr(dist, model), (1 - T_GRID) ** 4, rtol=1e-14)


def test_gw_delta_one_closed_form():
    """δ = 1, μ = 4 时为 (1-t)^5 (1+5t), 同时覆盖级数与积分两个分支"""
    model = CorrelationModel(delta=1.0, mu_gw=4.0, b=1.0)
    expected = (1 - T_GRID) ** 5 * (1 + 5 * T_GRID)
    np.testing.assert_allclose(gw_corr(T_GRID, model), expected, rtol=1e-9)


def test_gw_delta_two_closed_form():
    """δ = 2, μ = 5 时为 (1-t)^7 (1 + 7t + 16t²)"""
    model = CorrelationModel(delta=2.0, mu_gw=5.0, b=2.0)
    expected = (1 - T_GRID) ** 7 * (1 + 7 * T_GRID + 16 * T_GRID ** 2)
    np.testing.assert_allclose(gw_corr(2.0 * T_GRID, model), expected, rtol=1e-9)


def test_gw_compact_support():
    """零距离为 1, 距离 ≥ b 时恰为 0"""
    model = CorrelationModel(delta=1.0, mu_gw=4.0, b=0.3)
    assert gw_corr(0.0, model) == 1.0
    assert gw_corr(0.3, model) == 0.0
    assert gw_corr(1.7, model) == 0.0
    values = gw_corr(np.linspace(0.0, 0.3, 31), model)
    assert np.all(np.diff(values) <= 1e-12)


def test_gw_model_validation():
    """正定条件 μ ≥ (d+1)/2 + δ 与参数范围"""
    with pytest.raises(ValueError):
        CorrelationModel(delta=1.0, mu_gw=2.0)
    with pytest.raises(ValueError):
        CorrelationModel(b=0.0)
    with pytest.raises(ValueError):
        CorrelationModel(tau2=1.5)
    with pytest.raises(ValueError):
        CorrelationModel(family="matern")
    with pytest.raises(ValueError):
        gw_corr(0.1, CorrelationModel(family=FAMILY_EXPONENTIAL))
    with pytest.raises(ValueError):
        corr_from_distances(-0.1, CorrelationModel())


def test_model_dict_roundtrip_and_display():
    """字典转换与显示名称"""
    model = CorrelationModel(delta=1.0, mu_gw=4.0, b=0.25, tau2=0.1)
    assert CorrelationModel.from_dict(model.to_dict()) == model
    assert model.with_params(b=0.5).b == 0.5
    assert "GW" in model.display_name
    assert CorrelationModel(family=FAMILY_EXPONENTIAL, b=0.5).display_name == "Exp(b=0.5)"


def test_exponential_corr():
    """指数模型 exp(-h/b), 无紧支撑"""
    assert exponential_corr(0.2, 0.2) == pytest.approx(np.exp(-1.0), rel=1e-15)
    assert exponential_corr(0.0, 0.2) == 1.0
    assert exponential_corr(2.0, 0.2) > 0.0


def test_nugget_adjustment():
    """ρ*(h) = ρ(h)(1-τ²) + τ²·1{h=0}"""
    assert corr_with_nugget(0.5, 0.2, False) == pytest.approx(0.4)
    assert corr_with_nugget(1.0, 0.2, True) == pytest.approx(1.0)
    np.testing.assert_allclose(corr_with_nugget(np.array([0.5, 0.25]), 0.0, False), [0.5, 0.25])
    model = CorrelationModel(b=1.0, tau2=0.3)
    assert model.correlation(0.5) == pytest.approx(0.5 ** 4 * 0.7)
    assert model.correlation(0.5, nugget=False) == pytest.approx(0.5 ** 4)
    with pytest.raises(ValueError):
        corr_with_nugget(0.5, -0.1, False)


def test_spatial_config():
    """站点配置: 重复坐标报错, 距离矩阵对称"""
    cfg = SpatialConfig(np.array([[0.0, 0.0], [3.0, 4.0], [0.0, 1.0]]))
    assert cfg.n == 3
    assert cfg.dim == 2
    dist = cfg.distance_matrix()
    np.testing.assert_array_equal(dist, dist.T)
    assert dist[0, 1] == pytest.approx(5.0)
    np.testing.assert_allclose(cfg.pair_distances(np.array([0, 2]), np.array([1, 1])),
                               [5.0, np.sqrt(18.0)])
    assert cfg.bounding_diagonal() == pytest.approx(5.0)
    assert cfg.scaled(2.0).distance_matrix()[0, 1] == pytest.approx(10.0)
    assert cfg.permuted(np.array([2, 1, 0])).coords[0, 1] == 1.0
    with pytest.raises(ValueError):
        SpatialConfig(np.array([[0.0, 0.0], [0.0, 0.0]]))
    with pytest.raises(ValueError):
        SpatialConfig(np.array([[0.0], [1.0]]), covariates=np.ones((3, 1)))


def test_pairwise_distances_one_dimensional():
    """一维坐标"""
    dist = pairwise_distances(np.array([0.0, 1.0, 3.0]))
    np.testing.assert_allclose(dist, [[0, 1, 3], [1, 0, 2], [3, 2, 0]])
    np.testing.assert_array_equal(pairwise_distances(np.array([[1.0, 2.0]])), [[0.0]])


def test_corr_matrix_properties():
    """相关矩阵对称且对角为 1, 可分解"""
    rng = np.random.default_rng(3)
    cfg = SpatialConfig(rng.uniform(size=(40, 2)))
    model = CorrelationModel(b=0.3, tau2=0.1)
    matrix = corr_matrix(cfg, model)
    np.testing.assert_array_equal(matrix, matrix.T)
    np.testing.assert_array_equal(np.diag(matrix), np.ones(40))
    assert np.all(matrix[~np.eye(40, dtype=bool)] <= 0.9 + 1e-12)
    factor = chol_factor(matrix)
    np.testing.assert_allclose(factor @ factor.T, matrix, atol=1e-12)
    np.testing.assert_array_equal(corr_matrix(SpatialConfig(np.zeros((1, 2))), model), [[1.0]])


def test_chol_factor_errors_and_jitter():
    """非方阵或不对称报 ValueError, 不定矩阵报 FactorizationError, 半正定矩阵加抖动成功"""
    with pytest.raises(ValueError):
        chol_factor(np.ones((2, 3)))
    with pytest.raises(ValueError):
        chol_factor(np.array([[1.0, 0.5], [0.2, 1.0]]))
    with pytest.raises(FactorizationError) as info:
        chol_factor(np.array([[1.0, 2.0], [2.0, 1.0]]))
    assert info.value.leading_minor == 2

    singular = np.ones((3, 3))
    factor = chol_factor(singular)
    np.testing.assert_allclose(factor @ factor.T, singular, atol=1e-5)
