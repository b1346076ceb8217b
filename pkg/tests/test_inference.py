#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
复合似然、参数估计与 PLIC 测试
"""

from dataclasses import replace

import numpy as np
import pytest

from app.copula import clayton_bipdf
from app.correlation import CorrelationModel, SpatialConfig
from app.errors import FitError, PlicError, WplEvaluationError
from app.fields import (
    MARGINAL_BETA, DependenceParams, FieldRealization, MarginalSpec, random_sites, simulate_field,
)
from app.fit_config import FitConfig, FitResult
from app.inference import (
    PENALTY, PairSet, ParameterLayout, WplObjective, bootstrap_godambe, fit, fit_objective,
    fit_with_uncertainty, nn_pairs, numerical_gradient, numerical_hessian, optimize_nelder_mead,
    plic, select_by_plic, wpl,
)


def _result(wpl_max=-10.0, plic_value=None, names=("b",)):
    """构造最小的拟合结果"""
    return FitResult(theta_hat={name: 0.2 for name in names}, param_names=list(names),
                     transforms=["log"] * len(names), theta_transformed=[np.log(0.2)] * len(names),
                     wpl_max=wpl_max, copula="gaussian", marginal=MarginalSpec().to_dict(),
                     corr=CorrelationModel().to_dict(), plic=plic_value)


@pytest.fixture
def gaussian_data():
    """60 个站点上的高斯 copula 均匀边缘随机场"""
    cfg = random_sites(60, seed=4)
    params = DependenceParams(nu=2.0, corr=CorrelationModel(b=0.2))
    data = simulate_field(cfg, params, MarginalSpec(), seed=12, copula="gaussian")
    fit_cfg = FitConfig(marginal="uniform", copula="gaussian", neighbors=2)
    return cfg, data, fit_cfg


# ---- 最近邻点对 ----

def test_nn_pairs_two_sites():
    """两个站点互为最近邻"""
    pairs = nn_pairs(SpatialConfig(np.array([[0.0, 0.0], [1.0, 1.0]])), 1)
    assert pairs.as_set() == {(1, 0), (0, 1)}
    assert len(pairs) == 2


def test_nn_pairs_collinear():
    """直线上 0, 1, 3 处的站点"""
    cfg = SpatialConfig(np.array([0.0, 1.0, 3.0]))
    assert nn_pairs(cfg, 1).as_set() == {(1, 0), (0, 1), (1, 2)}
    assert nn_pairs(cfg, 2).as_set() == {(1, 0), (2, 0), (0, 1), (2, 1), (1, 2), (0, 2)}


def test_nn_pairs_ties_by_index():
    """距离相同时编号小的站点在前"""
    cfg = SpatialConfig(np.array([0.0, 1.0, 2.0]))
    pairs = nn_pairs(cfg, 1)
    np.testing.assert_array_equal(pairs.pairs, [[1, 0], [0, 1], [1, 2]])


def test_nn_pairs_random_sites():
    """n·m 对, 每个站点作为 j 出现 m 次, 无自配对"""
    cfg = random_sites(100, seed=1)
    pairs = nn_pairs(cfg, 2)
    assert len(pairs) == 200
    assert pairs.m == 2
    np.testing.assert_array_equal(np.bincount(pairs.j, minlength=100), np.full(100, 2))
    assert np.all(pairs.i != pairs.j)
    nearest = np.argsort(cfg.distance_matrix()[0] + np.eye(100)[0] * 10)[0]
    assert (int(nearest), 0) in pairs.as_set()


def test_nn_pairs_invalid_order():
    """m 必须满足 1 ≤ m < n"""
    cfg = SpatialConfig(np.array([0.0, 1.0, 3.0]))
    with pytest.raises(ValueError):
        nn_pairs(cfg, 0)
    with pytest.raises(ValueError):
        nn_pairs(cfg, 3)


# ---- 复合似然 ----

def test_wpl_zero_outside_support():
    """均匀边缘且所有点对距离超过 b 时 wpl = 0"""
    cfg = SpatialConfig(np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0], [1.0, 1.0]]))
    data = FieldRealization(values=np.array([0.1, 0.4, 0.6, 0.9]))
    params = DependenceParams(nu=2.0, corr=CorrelationModel(b=0.2))
    assert wpl(data, cfg, params, nn_pairs(cfg, 2)) == 0.0


def test_wpl_sums_pair_log_densities():
    """wpl 为各点对 Clayton 对数密度之和"""
    cfg = SpatialConfig(np.array([[0.0, 0.0], [0.05, 0.0], [0.0, 0.1]]))
    values = np.array([0.2, 0.35, 0.7])
    data = FieldRealization(values=values)
    corr = CorrelationModel(b=0.3)
    params = DependenceParams(nu=4.0, corr=corr)
    pairs = nn_pairs(cfg, 1)
    expected = 0.0
    for i, j in pairs.pairs:
        rho = float(corr.correlation(cfg.pair_distances(np.array([i]), np.array([j]))[0]))
        expected += np.log(clayton_bipdf(values[i], values[j], 4.0, rho))
    assert wpl(data, cfg, params, pairs) == pytest.approx(expected, rel=1e-12)


def test_wpl_errors():
    """空点对集合与非有限贡献"""
    cfg = SpatialConfig(np.array([[0.0, 0.0], [0.05, 0.0]]))
    params = DependenceParams(nu=2.0, corr=CorrelationModel(b=0.3))
    with pytest.raises(ValueError):
        wpl(FieldRealization(values=np.array([0.2, 0.3])), cfg, params,
            PairSet(pairs=np.zeros((0, 2), dtype=int), m=1))
    with pytest.raises(WplEvaluationError) as info:
        wpl(FieldRealization(values=np.array([0.2, 1.0])), cfg, params, nn_pairs(cfg, 1))
    assert info.value.pair in {(1, 0), (0, 1)}


# ---- 参数布局与目标函数 ----

def test_parameter_layout_transforms():
    """参数名顺序与变换尺度的往返"""
    marginal = MarginalSpec(MARGINAL_BETA, xi=2.0, delta=3.0)
    corr = CorrelationModel(b=0.2, tau2=0.1)
    layout = ParameterLayout(marginal, corr, "clayton", 2.0, estimate_nugget=True, estimate_nu=True)
    assert layout.names == ["xi", "delta", "b", "tau2", "nu"]
    assert layout.transforms == ["log", "log", "log", "logit", "log"]
    natural = layout.natural(marginal, corr, 2.0)
    vec = layout.to_vector(natural)
    np.testing.assert_allclose(vec, [np.log(2.0), np.log(3.0), np.log(0.2), np.log(0.1 / 0.9), np.log(2.0)])
    back = layout.to_natural(vec)
    for name, value in natural.items():
        assert back[name] == pytest.approx(value)
    built_marginal, built_corr, nu = layout.build(vec)
    assert built_marginal.xi == pytest.approx(2.0)
    assert built_corr.tau2 == pytest.approx(0.1)
    assert nu == pytest.approx(2.0)
    assert layout.boundary_flags(vec) == []
    assert layout.boundary_flags([0.0, 0.0, -13.0, 0.0, 0.0]) == ["b"]


def test_wpl_objective_penalty():
    """ρ² 超过上限或参数不可行时返回 PENALTY"""
    cfg = SpatialConfig(np.array([[0.0, 0.0], [0.01, 0.0], [0.5, 0.5]]))
    layout = ParameterLayout(MarginalSpec(), CorrelationModel(b=0.2), "clayton", 2.0)
    objective = WplObjective(np.array([0.2, 0.25, 0.8]), cfg, nn_pairs(cfg, 1), layout)
    assert objective([np.log(100.0)]) == PENALTY
    assert objective([np.nan]) == PENALTY
    value = objective([np.log(0.05)])
    assert value < PENALTY
    assert value == pytest.approx(-objective.wpl([np.log(0.05)]))


def test_optimize_nelder_mead_quadratic():
    """二次函数的最小值"""
    def quadratic(x):
        return (x[0] - 1.0) ** 2 + 2.0 * (x[1] + 2.0) ** 2 + 3.0

    x, fun, trace = optimize_nelder_mead(quadratic, [0.0, 0.0], xatol=1e-8, fatol=1e-10)
    np.testing.assert_allclose(x, [1.0, -2.0], atol=1e-4)
    assert fun == pytest.approx(3.0, abs=1e-8)
    assert len(trace) == 2


def test_optimize_nelder_mead_infeasible():
    """全部不可行时报 FitError"""
    with pytest.raises(FitError) as info:
        optimize_nelder_mead(lambda x: PENALTY, [0.0], restarts=0)
    assert info.value.trace


def test_numerical_derivatives():
    """中心差分梯度与 Hessian"""
    A = np.array([[2.0, 0.5], [0.5, 1.0]])

    def quadratic(x):
        return float(x @ A @ x)

    x = np.array([0.3, -0.4])
    np.testing.assert_allclose(numerical_gradient(quadratic, x), 2.0 * A @ x, atol=1e-8)
    np.testing.assert_allclose(numerical_hessian(quadratic, x), 2.0 * A, atol=1e-4)


# ---- PLIC ----

def test_plic_identity():
    """H·G⁻¹ = I 时 PLIC = -2·wpl + 2p"""
    assert plic(_result(wpl_max=-10.0), np.eye(2), np.eye(2)) == pytest.approx(24.0)
    H = np.array([[2.0, 0.0], [0.0, 4.0]])
    assert plic(_result(wpl_max=5.0), H, np.linalg.inv(H)) == pytest.approx(-6.0)


def test_plic_errors():
    """维数不一致、奇异或非有限矩阵"""
    with pytest.raises(ValueError):
        plic(_result(), np.eye(2), np.eye(3))
    with pytest.raises(PlicError):
        plic(_result(), np.eye(2), np.zeros((2, 2)))
    with pytest.raises(PlicError):
        plic(_result(), np.array([[np.inf, 0.0], [0.0, 1.0]]), np.eye(2))


def test_select_by_plic():
    """选择 PLIC 最小的候选"""
    a = _result(plic_value=12.0)
    b = _result(plic_value=9.5)
    assert select_by_plic([a, b, _result()]) is b
    with pytest.raises(ValueError):
        select_by_plic([_result()])


def test_fit_result_validation_and_serialization(tmp_path):
    """标准误与 G⁻¹ 对角元一致, 结果可写入 JSON"""
    result = replace(_result(), godambe_inv=[[0.04]], std_errors={"b": 0.2})
    assert result.validate()[0]
    assert not replace(result, std_errors={"b": 0.3}).validate()[0]
    path = tmp_path / "fit.json"
    result.save(str(path))
    assert path.exists()
    assert FitResult.from_dict(result.to_dict()).std_errors == {"b": 0.2}


def test_fit_result_display_info():
    """摘要使用 copula 显示名称, Clayton 附带所选 ν"""
    assert _result(plic_value=3.5).get_display_info().startswith("高斯 copula: wpl=-10.0000")
    assert "PLIC=3.5000" in _result(plic_value=3.5).get_display_info()
    clayton = replace(_result(), copula="clayton", nu_selected=4)
    assert clayton.get_display_info().startswith("Clayton 随机场(ν=4): ")


# ---- 拟合 ----

@pytest.mark.slow
def test_fit_gaussian_copula(gaussian_data):
    """高斯 copula 拟合: 估计有限且 wpl 不低于初值处"""
    cfg, data, fit_cfg = gaussian_data
    result = fit(data, cfg, fit_cfg)
    assert result.param_names == ["b"]
    assert result.nu_selected is None
    assert result.n_pairs == 120
    assert result.theta_hat["b"] > 0
    objective = fit_objective(result, data, cfg, fit_cfg)
    start = np.log(0.1 * cfg.bounding_diagonal())
    assert result.wpl_max >= objective.wpl([start]) - 1e-9
    assert result.wpl_max == pytest.approx(objective.wpl(result.theta_transformed))


@pytest.mark.slow
def test_fit_clayton_profile():
    """Clayton ν 剖面: 每个 ν 都有 wpl, 选中 wpl 最大者"""
    cfg = random_sites(40, seed=6)
    params = DependenceParams(nu=2.0, corr=CorrelationModel(b=0.25))
    data = simulate_field(cfg, params, MarginalSpec(), seed=3)
    fit_cfg = FitConfig(marginal="uniform", nu_grid=[1, 2], neighbors=1)
    result = fit(data, cfg, fit_cfg)
    assert set(result.profile) == {"1", "2"}
    assert result.wpl_max == max(result.profile.values())
    assert str(result.nu_selected) == max(result.profile, key=result.profile.get)


def test_fit_rejects_invalid_config(gaussian_data):
    """无效拟合配置"""
    cfg, data, fit_cfg = gaussian_data
    with pytest.raises(ValueError):
        fit(data, cfg, replace(fit_cfg, nu_strategy="annealing"))
    with pytest.raises(ValueError):
        fit(data, cfg, replace(fit_cfg, marginal="beta_regression"))


def test_bootstrap_requires_enough_replicates(gaussian_data):
    """自助法至少 30 次重复"""
    cfg, _, fit_cfg = gaussian_data
    with pytest.raises(ValueError):
        bootstrap_godambe(_result(), cfg, B=10, seed=1, fit_cfg=fit_cfg)


@pytest.mark.slow
def test_bootstrap_identical_seeds_degenerate(gaussian_data):
    """所有重复使用同一种子时协方差为 0"""
    cfg, data, fit_cfg = gaussian_data
    result = fit(data, cfg, fit_cfg)
    estimate = bootstrap_godambe(result, cfg, B=30, seed=5, fit_cfg=fit_cfg, workers=2,
                                 diagnostic_identical=True)
    assert estimate.replicates == 30
    assert estimate.failures == 0
    np.testing.assert_allclose(estimate.cov, [[0.0]], atol=1e-20)
    assert estimate.std_errors["b"] == pytest.approx(0.0, abs=1e-10)


@pytest.mark.slow
def test_fit_with_uncertainty_gaussian(gaussian_data):
    """拟合并计算标准误与 PLIC"""
    cfg, data, fit_cfg = gaussian_data
    result = fit_with_uncertainty(data, cfg, replace(fit_cfg, bootstrap=30, seed=7))
    assert result.bootstrap_replicates + result.bootstrap_failures == 30
    assert result.std_errors["b"] > 0
    assert result.validate()[0]
    assert np.isfinite(result.plic)
    assert result.plic > -2.0 * result.wpl_max
