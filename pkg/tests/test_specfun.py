#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
特殊函数测试
对照 scipy.special 的参考值与直接双重求和
"""

import numpy as np
import pytest
from scipy import special

from app.errors import ConvergenceDomainError, NumericalOverflowError, SeriesConvergenceError
from app.specfun import (
    KdFSpec, SeriesControl, appell_f4, bessel_i, beta_quantile, gauss_2f1,
    kampe_de_feriet, log_appell_f4, log_bessel_i, reg_inc_beta,
)


def _f4_brute(a, b, c, c2, w, z, terms=400):
    """直接双重求和 Σ (a)_{k+m}(b)_{k+m} w^k z^m / ((c)_k (c2)_m k! m!), k + m < terms"""
    lg = special.gammaln
    k, m = np.meshgrid(np.arange(terms), np.arange(terms), indexing='ij')
    n = k + m
    log_coef = (lg(a + n) - lg(a) + lg(b + n) - lg(b) - lg(c + k) + lg(c)
                - lg(c2 + m) + lg(c2) - lg(k + 1) - lg(m + 1))
    with np.errstate(divide='ignore', invalid='ignore', over='ignore'):
        log_mag = (log_coef + np.where(k > 0, k * np.log(abs(w)), 0.0)
                   + np.where(m > 0, m * np.log(abs(z)), 0.0))
        values = np.sign(w) ** k * np.sign(z) ** m * np.exp(log_mag)
    return float(np.sum(np.where(n < terms, values, 0.0)))


def test_series_control_validation():
    """截断控制参数校验"""
    ctrl = SeriesControl.from_dict({"rel_tol": 1e-10, "max_terms": 500})
    assert ctrl.rel_tol == 1e-10
    assert ctrl.max_terms == 500
    with pytest.raises(ValueError):
        SeriesControl(rel_tol=0.0)
    with pytest.raises(ValueError):
        SeriesControl(max_terms=0)


@pytest.mark.parametrize("a, b, c, x", [
    (0.5, 1.5, 2.0, 0.3),
    (2.0, 3.0, 4.5, -0.7),
    (1.0, 1.0, 2.0, 0.9),
    (2.5, 2.5, 1.0, 0.5),
])
def test_gauss_2f1_matches_scipy(a, b, c, x):
    """2F1 与 scipy.special.hyp2f1 一致"""
    assert gauss_2f1(a, b, c, x) == pytest.approx(special.hyp2f1(a, b, c, x), rel=1e-10)


def test_gauss_2f1_closed_forms():
    """2F1(1, 1; 2; x) = -ln(1-x)/x, 终止级数为多项式"""
    x = 0.4
    assert gauss_2f1(1.0, 1.0, 2.0, x) == pytest.approx(-np.log1p(-x) / x, rel=1e-12)
    # 2F1(-2, b; c; x) = 1 - 2bx/c + b(b+1)x²/(c(c+1))
    b, c = 1.5, 3.0
    expected = 1.0 - 2.0 * b * x / c + b * (b + 1) * x * x / (c * (c + 1))
    assert gauss_2f1(-2.0, b, c, x) == pytest.approx(expected, rel=1e-12)


def test_gauss_2f1_vectorized_and_scalar():
    """数组输入返回数组, 标量输入返回 float"""
    x = np.linspace(-0.5, 0.5, 7)
    values = gauss_2f1(1.2, 0.7, 2.3, x)
    assert isinstance(values, np.ndarray)
    np.testing.assert_allclose(values, special.hyp2f1(1.2, 0.7, 2.3, x), rtol=1e-10)
    assert isinstance(gauss_2f1(1.2, 0.7, 2.3, 0.1), float)
    assert gauss_2f1(1.2, 0.7, 2.3, 0.0) == 1.0


def test_gauss_2f1_domain_errors():
    """|x| ≥ 1 与非正整数 c 报错"""
    with pytest.raises(ValueError):
        gauss_2f1(1.0, 1.0, 2.0, 1.0)
    with pytest.raises(ValueError):
        gauss_2f1(1.0, 1.0, -2.0, 0.5)


def test_gauss_2f1_term_cap():
    """项数上限不足时报告未收敛"""
    with pytest.raises(SeriesConvergenceError) as info:
        gauss_2f1(1.0, 1.0, 2.0, 0.99, SeriesControl(rel_tol=1e-12, max_terms=10))
    assert info.value.terms >= 10


_ROOT_GRID = np.linspace(0.05, 0.45, 5)


@pytest.mark.parametrize("root_w", _ROOT_GRID)
@pytest.mark.parametrize("root_z", _ROOT_GRID)
def test_appell_f4_matches_double_sum(root_w, root_z):
    """√w + √z ≤ 0.9 的网格上 F4 与直接双重求和一致"""
    a, b, c, c2 = 1.5, 2.0, 1.0, 2.5
    w, z = root_w ** 2, root_z ** 2
    assert appell_f4(a, b, c, c2, w, z) == pytest.approx(_f4_brute(a, b, c, c2, w, z), rel=1e-10)


def test_appell_f4_reduces_to_2f1():
    """z = 0 时 F4 退化为 2F1(a, b; c; w)"""
    assert appell_f4(0.8, 1.3, 1.7, 2.0, 0.35, 0.0) == pytest.approx(
        special.hyp2f1(0.8, 1.3, 1.7, 0.35), rel=1e-10)


def test_appell_f4_domain():
    """√w + √z ≥ 1 超出收敛域"""
    with pytest.raises(ConvergenceDomainError) as info:
        appell_f4(1.0, 1.0, 1.0, 1.0, 0.25, 0.25)
    assert info.value.radius == pytest.approx(1.0)
    assert isinstance(info.value, ValueError)


def test_log_appell_f4_sign():
    """负自变量下返回符号与对数绝对值"""
    log_abs, sign = log_appell_f4(1.0, 1.0, 1.0, 1.0, np.array([0.1]), np.array([-0.1]))
    value = float(sign[0] * np.exp(log_abs[0]))
    assert value == pytest.approx(_f4_brute(1.0, 1.0, 1.0, 1.0, 0.1, -0.1), rel=1e-9)


def test_kampe_de_feriet_origin_and_f4_special_case():
    """原点处为 1; 阶数 2;0;0/0;1;1 时即为 Appell F4"""
    a, b, c, c2 = 1.5, 2.0, 1.0, 2.5
    spec = KdFSpec(a_list=(a, b), g_list=(c,), h_list=(c2,))
    assert spec.arity == "2;0;0/0;1;1"
    assert kampe_de_feriet(spec, 0.0, 0.0) == 1.0
    assert kampe_de_feriet(spec, 0.1, 0.2) == pytest.approx(
        appell_f4(a, b, c, c2, 0.1, 0.2), rel=1e-10)


def test_kampe_de_feriet_separable_case():
    """无联合参数时为两个 1F0 之积: (1-x)^{-b}(1-y)^{-c}"""
    spec = KdFSpec(b_list=(1.5,), c_list=(0.5,))
    expected = (1 - 0.3) ** -1.5 * (1 - 0.2) ** -0.5
    assert kampe_de_feriet(spec, 0.3, 0.2) == pytest.approx(expected, rel=1e-10)


def test_kampe_de_feriet_errors():
    """非法分母参数与网格上限"""
    with pytest.raises(ValueError):
        kampe_de_feriet(KdFSpec(a_list=(1.0,), e_list=(0.0,)), 0.1, 0.1)
    spec = KdFSpec(b_list=(1.0,), c_list=(1.0,))
    with pytest.raises(SeriesConvergenceError):
        kampe_de_feriet(spec, 0.999, 0.999, SeriesControl(rel_tol=1e-12, max_terms=64))


@pytest.mark.parametrize("order, x", [(0.0, 0.5), (1.0, 3.0), (2.5, 10.0), (-3.0, 1.2), (0.5, 40.0)])
def test_bessel_i_matches_scipy(order, x):
    """修正 Bessel 函数与 scipy.special.iv 一致"""
    assert bessel_i(order, x) == pytest.approx(special.iv(order, x), rel=1e-10)


def test_bessel_i_edge_cases():
    """x = 0, 负自变量与溢出"""
    assert bessel_i(0.0, 0.0) == 1.0
    assert bessel_i(2.0, 0.0) == 0.0
    assert log_bessel_i(1.0, 800.0) == pytest.approx(800.0 - 0.5 * np.log(2 * np.pi * 800.0), abs=1e-3)
    with pytest.raises(ValueError):
        bessel_i(1.0, -1.0)
    with pytest.raises(NumericalOverflowError):
        bessel_i(0.0, 800.0)


@pytest.mark.parametrize("xi, delta", [(0.5, 0.5), (2.0, 3.0), (0.75, 8.0), (40.0, 15.0)])
def test_reg_inc_beta_matches_scipy(xi, delta):
    """正则化不完全 beta 函数与 scipy.special.betainc 一致"""
    y = np.array([1e-6, 0.05, 0.3, 0.5, 0.72, 0.95, 1 - 1e-9])
    np.testing.assert_allclose(reg_inc_beta(y, xi, delta), special.betainc(xi, delta, y),
                               rtol=1e-9, atol=1e-14)


def test_reg_inc_beta_boundaries_and_errors():
    """端点与定义域"""
    assert reg_inc_beta(0.0, 2.0, 3.0) == 0.0
    assert reg_inc_beta(1.0, 2.0, 3.0) == 1.0
    # I(y; 1, 1) = y
    assert reg_inc_beta(0.37, 1.0, 1.0) == pytest.approx(0.37, rel=1e-12)
    with pytest.raises(ValueError):
        reg_inc_beta(1.2, 2.0, 3.0)
    with pytest.raises(ValueError):
        reg_inc_beta(0.5, 0.0, 3.0)


def test_beta_quantile_inverts_cdf():
    """分位数与 betaincinv 一致, 且 F(Q(p)) = p"""
    p = np.array([1e-4, 0.1, 0.5, 0.9, 0.9999])
    q = beta_quantile(p, 2.5, 1.5)
    np.testing.assert_allclose(q, special.betaincinv(2.5, 1.5, p), atol=1e-10)
    np.testing.assert_allclose(reg_inc_beta(q, 2.5, 1.5), p, atol=1e-10)
    assert beta_quantile(0.0, 2.5, 1.5) == 0.0
    assert beta_quantile(1.0, 2.5, 1.5) == 1.0
    with pytest.raises(ValueError):
        beta_quantile(-0.1, 2.5, 1.5)


@pytest.mark.parametrize("xi", [0.5, 1.0, 2.5])
@pytest.mark.parametrize("delta", [0.5, 1.0, 2.5])
def test_beta_quantile_round_trip(xi, delta):
    """p ∈ [0.01, 0.99] 网格上 I(Q(p); ξ, δ) = p"""
    p = np.linspace(0.01, 0.99, 99)
    q = beta_quantile(p, xi, delta)
    assert np.all((q > 0) & (q < 1))
    np.testing.assert_allclose(reg_inc_beta(q, xi, delta), p, rtol=0.0, atol=1e-9)
