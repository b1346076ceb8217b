#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
随机场模拟与边缘分布测试
"""

import numpy as np
import pytest
from scipy import stats

from app.copula import clayton_corr
from app.correlation import CorrelationModel, SpatialConfig
from app.fields import (
    MARGINAL_BETA, MARGINAL_BETA_REGRESSION, DependenceParams, FieldRealization, MarginalSpec,
    derive_rng, derive_seed, fit_marginal_independence, random_sites, rescale_bounded,
    sim_aux_beta, sim_clayton, sim_gamma, sim_gaussian, sim_gaussian_copula, simulate_field,
    transform_marginal, unscale_bounded,
)


@pytest.fixture
def line_sites():
    """一条直线上的 3 个站点, 间距 0.05"""
    return SpatialConfig(np.array([[0.0, 0.0], [0.05, 0.0], [0.1, 0.0]]))


def test_seed_derivation_is_deterministic():
    """同一 (种子, 流) 得到相同随机数, 不同流互不相同"""
    a = derive_rng(42, 1).uniform(size=5)
    b = derive_rng(42, 1).uniform(size=5)
    c = derive_rng(42, 2).uniform(size=5)
    np.testing.assert_array_equal(a, b)
    assert not np.allclose(a, c)
    assert derive_seed(42, 3) == derive_seed(42, 3)
    assert derive_seed(42, 3) != derive_seed(42, 4)
    assert 0 <= derive_seed(7) < 2 ** 63
    with pytest.raises(ValueError):
        derive_rng(-1)


def test_random_sites():
    """随机站点可复现且位于单位正方形内"""
    cfg = random_sites(50, seed=11)
    np.testing.assert_array_equal(cfg.coords, random_sites(50, seed=11).coords)
    assert cfg.coords.shape == (50, 2)
    assert np.all((cfg.coords >= 0) & (cfg.coords <= 1))
    with pytest.raises(ValueError):
        random_sites(0, seed=1)


def test_marginal_spec_validation():
    """边缘参数校验"""
    with pytest.raises(ValueError):
        MarginalSpec("gamma")
    with pytest.raises(ValueError):
        MarginalSpec(MARGINAL_BETA, xi=-1.0, delta=2.0)
    with pytest.raises(ValueError):
        MarginalSpec(MARGINAL_BETA_REGRESSION, beta_coeffs=(), precision=2.0)
    spec = MarginalSpec(MARGINAL_BETA_REGRESSION, beta_coeffs=(0.2, -0.2), precision=1.5)
    valid, _ = spec.validate(SpatialConfig(np.zeros((1, 2)), covariates=np.ones((1, 3))))
    assert not valid
    assert spec.param_names() == ["beta0", "beta1", "precision"]
    assert MarginalSpec.from_dict(spec.to_dict()) == spec


def test_beta_regression_shapes():
    """logistic 连接: μ = expit(xᵀβ), 形状 (μφ, (1-μ)φ)"""
    spec = MarginalSpec(MARGINAL_BETA_REGRESSION, beta_coeffs=(0.0, 1.0), precision=4.0)
    X = np.array([[1.0, 0.0], [1.0, np.log(3.0)]])
    a, b = spec.shapes(X)
    np.testing.assert_allclose(a, [2.0, 3.0])
    np.testing.assert_allclose(b, [2.0, 1.0])
    np.testing.assert_allclose(spec.mean(X), [0.5, 0.75])
    with pytest.raises(ValueError):
        spec.mean_link(None)


def test_marginal_distribution_functions():
    """beta 边缘的 cdf/ppf/logpdf 与 scipy.stats.beta 一致"""
    spec = MarginalSpec(MARGINAL_BETA, xi=2.0, delta=5.0)
    s = np.array([0.05, 0.2, 0.5, 0.8])
    np.testing.assert_allclose(spec.cdf(s), stats.beta.cdf(s, 2.0, 5.0), rtol=1e-10)
    np.testing.assert_allclose(spec.logpdf(s), stats.beta.logpdf(s, 2.0, 5.0), rtol=1e-10)
    np.testing.assert_allclose(spec.ppf([0.1, 0.5, 0.9]), stats.beta.ppf([0.1, 0.5, 0.9], 2.0, 5.0),
                               atol=1e-10)
    assert spec.variance() == pytest.approx(stats.beta.var(2.0, 5.0))
    uniform = MarginalSpec()
    assert uniform.variance() == pytest.approx(1.0 / 12.0)
    assert uniform.logpdf(1.5) == -np.inf


def test_dependence_params_validation():
    """模拟要求 ν 为正整数"""
    assert DependenceParams(nu=2.5).validate(for_simulation=False)[0]
    assert not DependenceParams(nu=2.5).validate(for_simulation=True)[0]
    assert not DependenceParams(nu=0.0).validate(for_simulation=False)[0]
    params = DependenceParams(nu=4.0, corr=CorrelationModel(b=0.3))
    assert DependenceParams.from_dict(params.to_dict()) == params


def test_sim_gaussian_shapes(line_sites):
    """独立与相关高斯场的形状"""
    assert sim_gaussian(line_sites, None, seed=1).shape == (3,)
    assert sim_gaussian(line_sites, np.eye(3), seed=1, size=4).shape == (4, 3)
    with pytest.raises(ValueError):
        sim_gaussian(line_sites, np.eye(2), seed=1)


def test_simulators_reject_non_integer_degrees(line_sites):
    """ψ, ν, α 必须是正整数"""
    corr = CorrelationModel(b=0.2)
    with pytest.raises(ValueError):
        sim_gamma(line_sites, 2.5, corr, seed=1)
    with pytest.raises(ValueError):
        sim_aux_beta(line_sites, 2, 0, corr, seed=1)
    with pytest.raises(ValueError):
        sim_clayton(line_sites, 1.5, corr, seed=1)


def test_clayton_field_in_unit_interval(line_sites):
    """Clayton 场取值于 (0, 1), 同一种子可复现"""
    corr = CorrelationModel(b=0.2)
    u = sim_clayton(line_sites, 2, corr, seed=5, size=100)
    assert u.shape == (100, 3)
    assert np.all((u > 0) & (u < 1))
    np.testing.assert_array_equal(u, sim_clayton(line_sites, 2, corr, seed=5, size=100))


@pytest.mark.slow
def test_gamma_field_marginal(line_sites):
    """Gamma 场边缘为 Gamma(ψ/2, 1)"""
    g = sim_gamma(line_sites, 3, CorrelationModel(b=0.2), seed=21, size=4000)
    result = stats.kstest(g[:, 1], stats.gamma(1.5).cdf)
    assert result.pvalue > 1e-3


@pytest.mark.slow
@pytest.mark.parametrize("nu", [1, 2, 4])
def test_clayton_field_uniform_margins(line_sites, nu):
    """Clayton 场边缘为 Uniform(0, 1)"""
    u = sim_clayton(line_sites, nu, CorrelationModel(b=0.2), seed=100 + nu, size=4000)
    assert stats.kstest(u[:, 0], "uniform").pvalue > 1e-3


@pytest.mark.slow
@pytest.mark.parametrize("nu", [1, 2, 4])
def test_clayton_field_correlation(line_sites, nu):
    """两站点的样本相关接近 clayton_corr(ν, ρ)"""
    corr = CorrelationModel(b=0.2)
    u = sim_clayton(line_sites, nu, corr, seed=8 + nu, size=20000)
    rho = float(corr.correlation(0.05))
    empirical = np.corrcoef(u[:, 0], u[:, 1])[0, 1]
    assert empirical == pytest.approx(clayton_corr(float(nu), rho), abs=0.03)


@pytest.mark.slow
def test_gaussian_copula_field_uniform_margins(line_sites):
    """高斯 copula 场边缘为 Uniform(0, 1)"""
    u = sim_gaussian_copula(line_sites, CorrelationModel(b=0.2), seed=3, size=4000)
    assert stats.kstest(u[:, 2], "uniform").pvalue > 1e-3


def test_transform_marginal(line_sites):
    """均匀场经分位数变换得到 beta 边缘"""
    u = FieldRealization(values=np.array([0.1, 0.5, 0.9]))
    spec = MarginalSpec(MARGINAL_BETA, xi=2.0, delta=5.0)
    out = transform_marginal(u, spec, line_sites)
    np.testing.assert_allclose(out.values, stats.beta.ppf([0.1, 0.5, 0.9], 2.0, 5.0), atol=1e-10)
    assert out.marginal == spec
    with pytest.raises(ValueError):
        transform_marginal(out, spec, line_sites)
    regression = MarginalSpec(MARGINAL_BETA_REGRESSION, beta_coeffs=(0.5,), precision=3.0)
    with pytest.raises(ValueError):
        transform_marginal(u, regression, line_sites)


def test_simulate_field_reproducible():
    """simulate_field 给定种子结果确定"""
    cfg = random_sites(30, seed=2)
    params = DependenceParams(nu=2.0, corr=CorrelationModel(b=0.2))
    spec = MarginalSpec(MARGINAL_BETA, xi=2.0, delta=3.0)
    first = simulate_field(cfg, params, spec, seed=9)
    second = simulate_field(cfg, params, spec, seed=9)
    np.testing.assert_array_equal(first.values, second.values)
    assert first.copula == "clayton"
    assert np.all((first.values > 0) & (first.values < 1))
    gaussian = simulate_field(cfg, params, spec, seed=9, copula="gaussian")
    assert gaussian.copula == "gaussian"


def test_bounded_rescaling():
    """(a1, a2) 与 (0, 1) 之间的线性映射"""
    assert rescale_bounded(-0.2, -1.0, 1.0) == pytest.approx(0.4)
    assert unscale_bounded(0.4, -1.0, 1.0) == pytest.approx(-0.2)
    np.testing.assert_allclose(rescale_bounded(np.array([-1.0, 1.0]), -1.0, 1.0), [0.0, 1.0])
    with pytest.raises(ValueError):
        rescale_bounded(0.5, 1.0, 1.0)


def test_fit_marginal_independence_beta():
    """独立假设下的 beta 极大似然估计接近真值"""
    values = derive_rng(17).beta(2.0, 5.0, size=3000)
    estimate = fit_marginal_independence(values, MarginalSpec(MARGINAL_BETA))
    assert estimate.xi == pytest.approx(2.0, rel=0.1)
    assert estimate.delta == pytest.approx(5.0, rel=0.1)
    with pytest.raises(ValueError):
        fit_marginal_independence(np.array([0.2, 1.0]), MarginalSpec(MARGINAL_BETA))
    assert fit_marginal_independence(values, MarginalSpec()).family == "uniform"
