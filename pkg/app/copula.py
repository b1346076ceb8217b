#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
二元分布模块
Kibble 二元 Gamma 密度、辅助 beta 场二元密度及相关函数、Clayton 随机场的
copula 密度 / 分布函数 / 相关函数、高斯 copula 基准, 以及 Kendall、Blomqvist 等依赖度量

所有相关参数 ρ 只通过 ρ² 进入公式; ρ² 超过 1 - 1e-10 时截断并记录警告。
"""

import logging
from dataclasses import dataclass
from typing import Dict, Optional, Sequence, Tuple

import numpy as np
from numpy.polynomial.legendre import leggauss
from scipy.special import gammaln
from scipy.stats import norm

from .correlation import CorrelationModel, corr_with_nugget, corr_from_distances
from .errors import QuadratureError, SeriesConvergenceError
from .specfun import (DEFAULT_CONTROL, KdFSpec, SeriesControl, kampe_de_feriet,
                      log_appell_f4, log_bessel_i)

logger = logging.getLogger(__name__)

RHO2_MAX = 1.0 - 1e-10
DEFAULT_QUAD_NODES = 64
DOUBLING_TOL = 1e-7

_CDF_START = 64
_CDF_MAX_GRID = 2048


@dataclass(frozen=True)
class BivariateEval:
    """某一距离上的二元计算参数"""

    rho: float  # 底层相关 ρ(h)
    nu: float
    alpha: Optional[float] = None

    def __post_init__(self):
        valid, msg = self.validate()
        if not valid:
            raise ValueError(msg)

    def validate(self) -> tuple[bool, str]:
        if not self.nu > 0:
            return False, f"nu 必须为正: {self.nu}"
        if self.alpha is not None and not self.alpha > 0:
            return False, f"alpha 必须为正: {self.alpha}"
        if np.isnan(self.rho):
            return False, "rho 不能为 NaN"
        return True, ""

    @property
    def c(self) -> float:
        """c = (ν + α)/2"""
        if self.alpha is None:
            raise ValueError("该计算需要 alpha")
        return (self.nu + self.alpha) / 2.0

    @property
    def r(self) -> float:
        return float(squared_correlation(self.rho))


def squared_correlation(rho):
    """ρ² 并截断到 1 - 1e-10"""
    rho = np.asarray(rho, dtype=float)
    if np.any(np.isnan(rho)):
        raise ValueError("rho 不能为 NaN")
    r = rho * rho
    if np.any(r > RHO2_MAX):
        logger.warning(f"ρ² 超过 {RHO2_MAX}, 已截断 (最大 ρ={float(np.max(np.abs(rho))):.12g})")
        r = np.minimum(r, RHO2_MAX)
    return r


def _output(values: np.ndarray, *inputs):
    if all(np.ndim(v) == 0 for v in inputs):
        return float(np.asarray(values).reshape(-1)[0])
    return values


# ---------------------------------------------------------------------------
# Gamma 与辅助 beta 场
# ---------------------------------------------------------------------------

def bigamma_pdf(g_i, g_j, psi: float, rho, ctrl: Optional[SeriesControl] = None):
    """
    Kibble 二元 Gamma 密度, 边缘 Gamma(ψ/2, 1)

    指数项使用 (1-ρ²)^{ψ/2}, 与边缘分布及 ρ=0 时的因子分解一致。

    Args:
        g_i, g_j: 正值
        psi: 自由度 ψ > 0
        rho: 底层相关

    Returns:
        密度值
    """
    g_i, g_j = np.broadcast_arrays(np.asarray(g_i, dtype=float), np.asarray(g_j, dtype=float))
    if np.any(g_i <= 0) or np.any(g_j <= 0):
        raise ValueError("bigamma_pdf 要求 g_i, g_j > 0")
    if not psi > 0:
        raise ValueError(f"psi 必须为正: {psi}")
    a = psi / 2.0
    r = float(squared_correlation(rho))

    log_marg = (a - 1.0) * (np.log(g_i) + np.log(g_j)) - 2.0 * gammaln(a)
    if r == 0.0:
        return _output(np.exp(log_marg - g_i - g_j), g_i, g_j, rho)

    root = np.sqrt(r * g_i * g_j)
    arg = 2.0 * root / (1.0 - r)
    log_f = ((a - 1.0) * (np.log(g_i) + np.log(g_j)) - (g_i + g_j) / (1.0 - r)
             - gammaln(a) - a * np.log1p(-r)
             + (1.0 - a) * (np.log(root) - np.log1p(-r))
             + np.asarray(log_bessel_i(a - 1.0, arg, ctrl)))
    return _output(np.exp(log_f), g_i, g_j, rho)


def log_auxbeta_bipdf(y_i, y_j, params: BivariateEval, ctrl: Optional[SeriesControl] = None):
    """辅助 beta 场二元对数密度"""
    y_i, y_j = np.broadcast_arrays(np.asarray(y_i, dtype=float), np.asarray(y_j, dtype=float))
    if np.any((y_i <= 0) | (y_i >= 1) | (y_j <= 0) | (y_j >= 1)):
        raise ValueError("auxbeta_bipdf 要求 0 < y < 1")
    nu, alpha, c = params.nu, params.alpha, params.c
    r = params.r
    log_front = ((nu / 2.0 - 1.0) * (np.log(y_i) + np.log(y_j))
                 + (alpha / 2.0 - 1.0) * (np.log1p(-y_i) + np.log1p(-y_j))
                 + 2.0 * gammaln(c) - 2.0 * gammaln(nu / 2.0) - 2.0 * gammaln(alpha / 2.0))
    if r == 0.0:
        return log_front
    w = r * y_i * y_j
    z = r * (1.0 - y_i) * (1.0 - y_j)
    log_f4, _ = log_appell_f4(c, c, nu / 2.0, alpha / 2.0, w, z, ctrl)
    return log_front + c * np.log1p(-r) + log_f4


def auxbeta_bipdf(y_i, y_j, params: BivariateEval, ctrl: Optional[SeriesControl] = None):
    """
    辅助 beta 场 Y_{ν,α} 的二元密度 (Appell F4 形式), c = (ν+α)/2

    ρ = 0 时等于两个 Beta(ν/2, α/2) 密度之积。
    """
    return _output(np.exp(log_auxbeta_bipdf(y_i, y_j, params, ctrl)), y_i, y_j)


def auxbeta_corr(params: BivariateEval, ctrl: Optional[SeriesControl] = None) -> float:
    """
    辅助 beta 场的相关函数 ν(c+1)/α · [(1-ρ²)^c A - 1]

    A 为 F^{2;1;2}_{2;0;1}[c, c; α/2; ν/2+1, ν/2+1 | c+1, c+1; -; ν/2](ρ², ρ²)。
    """
    nu, alpha, c = params.nu, params.alpha, params.c
    r = params.r
    if r == 0.0:
        return 0.0
    spec = KdFSpec(a_list=(c, c), b_list=(alpha / 2.0,), c_list=(nu / 2.0 + 1.0, nu / 2.0 + 1.0),
                   e_list=(c + 1.0, c + 1.0), g_list=(), h_list=(nu / 2.0,))
    a_value = kampe_de_feriet(spec, r, r, ctrl)
    return float(nu * (c + 1.0) / alpha * (np.exp(c * np.log1p(-r)) * a_value - 1.0))


def product_moment(a: float, params: BivariateEval, ctrl: Optional[SeriesControl] = None) -> float:
    """
    辅助 beta 场的 (a, a) 阶乘积矩 E{Y^a(s_i) Y^a(s_j)}

    Γ²(c)Γ²(ν/2+a)(1-ρ²)^c / (Γ²(ν/2)Γ²(c+a)) ·
    F^{2;2;1}_{2;1;0}[c, c; ν/2+a, ν/2+a; α/2 | c+a, c+a; ν/2; -](ρ², ρ²)
    """
    if not a > 0:
        raise ValueError(f"阶数 a 必须为正: {a}")
    nu, alpha, c = params.nu, params.alpha, params.c
    r = params.r
    log_front = 2.0 * (gammaln(c) + gammaln(nu / 2.0 + a) - gammaln(nu / 2.0) - gammaln(c + a))
    if r == 0.0:
        return float(np.exp(log_front))
    spec = KdFSpec(a_list=(c, c), b_list=(nu / 2.0 + a, nu / 2.0 + a), c_list=(alpha / 2.0,),
                   e_list=(c + a, c + a), g_list=(nu / 2.0,), h_list=())
    value = kampe_de_feriet(spec, r, r, ctrl)
    return float(np.exp(log_front + c * np.log1p(-r)) * value)


# ---------------------------------------------------------------------------
# Clayton 随机场
# ---------------------------------------------------------------------------

def log_clayton_bipdf(u_i, u_j, nu: float, rho, ctrl: Optional[SeriesControl] = None) -> np.ndarray:
    """
    Clayton 随机场 copula 对数密度

    (ν/2+1) ln(1-ρ²) + ln F4(ν/2+1, ν/2+1; ν/2, 1; w, z),
    w = ρ²(u_i u_j)^{2/ν}, z = ρ²(1-u_i^{2/ν})(1-u_j^{2/ν})。
    rho 可以是与 u 同形状的数组 (每个点对不同的相关)。
    """
    if not nu > 0:
        raise ValueError(f"nu 必须为正: {nu}")
    u_i, u_j, r = np.broadcast_arrays(np.asarray(u_i, dtype=float), np.asarray(u_j, dtype=float),
                                      squared_correlation(rho))
    if np.any((u_i < 0) | (u_i > 1) | (u_j < 0) | (u_j > 1)):
        raise ValueError("clayton_bipdf 要求 u 在 [0, 1] 内")

    out = np.zeros(u_i.shape)
    dependent = r > 0
    if not np.any(dependent):
        return out
    p = 2.0 / nu
    ui, uj, rr = u_i[dependent], u_j[dependent], r[dependent]
    xi_ = ui ** p
    xj_ = uj ** p
    w = rr * xi_ * xj_
    z = rr * (1.0 - xi_) * (1.0 - xj_)
    # √w + √z ≤ √r < 1
    if np.any(np.sqrt(w) + np.sqrt(z) >= 1.0):
        raise ValueError("Clayton 密度参数超出 F4 收敛域")
    a = nu / 2.0 + 1.0
    log_f4, _ = log_appell_f4(a, a, nu / 2.0, 1.0, w, z, ctrl)
    out[dependent] = a * np.log1p(-rr) + log_f4
    return out


def clayton_bipdf(u_i, u_j, nu: float, rho, ctrl: Optional[SeriesControl] = None):
    """
    Clayton 随机场的二元 copula 密度

    Args:
        u_i, u_j: [0, 1] 中的值
        nu: ν > 0
        rho: 底层相关

    Returns:
        密度值, ρ = 0 时恒为 1
    """
    return _output(np.exp(log_clayton_bipdf(u_i, u_j, nu, rho, ctrl)), u_i, u_j, rho)


def _cdf_grid(x_i: np.ndarray, x_j: np.ndarray, nu: float, r: float,
              n: int) -> Tuple[np.ndarray, np.ndarray]:
    """
    在 n×n 指标网格上计算 Clayton 分布函数的双重级数

    Returns:
        (总和, 外半带和), 均为长度 P 的数组
    """
    half_nu = nu / 2.0
    a = half_nu + 1.0
    k = np.arange(n, dtype=float)
    p = k + half_nu
    log_x_i = np.log(x_i)
    log_x_j = np.log(x_j)
    log_1mx_i = np.log1p(-x_i)
    log_1mx_j = np.log1p(-x_j)

    # 系数 (a)²_{k+m} r^{k+m} / (k! m!² (ν/2)_k) 的对数, 不含 m 相关部分
    log_coef_k = -gammaln(k + 1.0) - (gammaln(p) - gammaln(half_nu))
    log_r = np.log(r) if r > 0 else -np.inf

    total = np.zeros(x_i.size)
    band = np.zeros(x_i.size)
    half = n // 2

    # R_m = J_m / X^p, J_m = ∫_0^X x^{p-1}(1-x)^m dx
    with np.errstate(divide='ignore', invalid='ignore', over='ignore', under='ignore'):
        r_i = np.broadcast_to(1.0 / p, (x_i.size, n)).copy()
        r_j = r_i.copy()
        base_i = p[None, :] * log_x_i[:, None]
        base_j = p[None, :] * log_x_j[:, None]
        for m in range(n):
            if m > 0:
                r_i = (np.exp(m * log_1mx_i)[:, None] + m * r_i) / (p[None, :] + m)
                r_j = (np.exp(m * log_1mx_j)[:, None] + m * r_j) / (p[None, :] + m)
            s = k + m
            log_joint = 2.0 * (gammaln(a + s) - gammaln(a)) - 2.0 * gammaln(m + 1.0)
            log_pow = np.where(s == 0, 0.0, s * log_r)
            log_c = log_coef_k + log_joint + log_pow + 2.0 * np.log(half_nu)
            log_terms = (log_c[None, :] + base_i + np.log(r_i) + base_j + np.log(r_j))
            terms = np.exp(np.where(np.isnan(log_terms), -np.inf, log_terms))
            total += terms.sum(axis=1)
            if m >= half:
                band += terms.sum(axis=1)
            else:
                band += terms[:, half:].sum(axis=1)
    return total, band


def clayton_bicdf(t_i, t_j, nu: float, rho, ctrl: Optional[SeriesControl] = None):
    """
    Clayton 随机场的二元分布函数

    F = (1-ρ²)^{ν/2+1} Σ_k Σ_m (ν/2+1)²_{k+m} ρ^{2(k+m)} / (k! m!² (ν/2)_k)
        · I_k,m(t_i) I_k,m(t_j),
    I_k,m(t) = ∫_0^t u^{2k/ν}(1-u^{2/ν})^m du = (ν/2) B_{t^{2/ν}}(k+ν/2, m+1),
    不完全 beta 函数按 m 递推 (全正项, 无相消)。

    Args:
        t_i, t_j: [0, 1] 中的值
        nu: ν > 0
        rho: 底层相关 (标量)

    Returns:
        [0, 1] 中的分布函数值
    """
    ctrl = ctrl or DEFAULT_CONTROL
    if not nu > 0:
        raise ValueError(f"nu 必须为正: {nu}")
    ti, tj = np.broadcast_arrays(np.asarray(t_i, dtype=float), np.asarray(t_j, dtype=float))
    if np.any((ti < 0) | (ti > 1) | (tj < 0) | (tj > 1)):
        raise ValueError("clayton_bicdf 要求 t 在 [0, 1] 内")
    r = float(squared_correlation(rho))
    shape = ti.shape
    flat_i = ti.reshape(-1)
    flat_j = tj.reshape(-1)

    if r == 0.0:
        return _output((flat_i * flat_j).reshape(shape), t_i, t_j)

    result = np.zeros(flat_i.size)
    inside = (flat_i > 0) & (flat_j > 0)
    if np.any(inside):
        x_i = flat_i[inside] ** (2.0 / nu)
        x_j = flat_j[inside] ** (2.0 / nu)
        cap = max(2, min(int(ctrl.max_terms), _CDF_MAX_GRID))
        n = min(_CDF_START, cap)
        while True:
            total, band = _cdf_grid(x_i, x_j, nu, r, n)
            if np.all(band <= ctrl.rel_tol * total):
                break
            if n >= cap:
                raise SeriesConvergenceError("clayton_bicdf", {"nu": nu, "rho": rho}, n)
            n = min(2 * n, cap)
        result[inside] = np.exp((nu / 2.0 + 1.0) * np.log1p(-r)) * total

    result = np.clip(result, 0.0, 1.0)
    return _output(result.reshape(shape), t_i, t_j)


def _clayton_kdf_spec(nu: float) -> KdFSpec:
    a = nu / 2.0 + 1.0
    return KdFSpec(a_list=(a, a), b_list=(nu, nu), c_list=(1.0,),
                   e_list=(nu + 1.0, nu + 1.0), g_list=(nu / 2.0,), h_list=())


def clayton_corr(nu: float, rho, ctrl: Optional[SeriesControl] = None):
    """
    Clayton 随机场的相关函数 (同时也是 Spearman 相关)

    3((1-ρ²)^{ν/2+1} F^{2;2;1}_{2;1;0}[ν/2+1; ν; 1 | ν+1; ν/2; -](ρ², ρ²) - 1)
    """
    if not nu > 0:
        raise ValueError(f"nu 必须为正: {nu}")
    r_values = np.atleast_1d(squared_correlation(rho)).astype(float)
    spec = _clayton_kdf_spec(nu)
    out = np.empty(r_values.shape)
    for index, r in np.ndenumerate(r_values):
        if r == 0.0:
            out[index] = 0.0
            continue
        value = kampe_de_feriet(spec, r, r, ctrl)
        out[index] = 3.0 * (np.exp((nu / 2.0 + 1.0) * np.log1p(-r)) * value - 1.0)
    if np.ndim(rho) == 0:
        return float(out[0])
    return out.reshape(np.shape(rho))


def spearman_rho(nu: float, rho, ctrl: Optional[SeriesControl] = None):
    """Spearman 相关, 均匀边缘下与 clayton_corr 相同"""
    return clayton_corr(nu, rho, ctrl)


def clayton_corr_sym(rho):
    """
    ν = 2 时的闭式相关函数

    2[ρ²(3ρ²-1) - (ρ²-1)² ln(1-ρ²)]/ρ⁴ - 3, ρ² < 1e-4 时用 Taylor 级数
    Σ_{j≥1} 4ρ^{2j} / (j(j+1)(j+2))。
    """
    s = np.atleast_1d(squared_correlation(rho)).astype(float)
    out = np.empty(s.shape)
    small = s < 1e-4
    if np.any(small):
        ss = s[small]
        j = np.arange(1, 8, dtype=float)
        out[small] = np.sum(4.0 * ss[:, None] ** j / (j * (j + 1.0) * (j + 2.0)), axis=1)
    big = ~small
    if np.any(big):
        sb = s[big]
        out[big] = 2.0 * (sb * (3.0 * sb - 1.0) - (sb - 1.0) ** 2 * np.log1p(-sb)) / sb ** 2 - 3.0
    if np.ndim(rho) == 0:
        return float(out[0])
    return out.reshape(np.shape(rho))


# ---------------------------------------------------------------------------
# 高斯 copula
# ---------------------------------------------------------------------------

def log_gauss_copula_bipdf(u_i, u_j, rho) -> np.ndarray:
    """高斯 copula 对数密度"""
    u_i, u_j, rho = np.broadcast_arrays(np.asarray(u_i, dtype=float), np.asarray(u_j, dtype=float),
                                        np.asarray(rho, dtype=float))
    if np.any((u_i <= 0) | (u_i >= 1) | (u_j <= 0) | (u_j >= 1)):
        raise ValueError("gauss_copula_bipdf 要求 0 < u < 1")
    r = squared_correlation(rho)
    signed = np.sign(rho) * np.sqrt(r)
    z_i = norm.ppf(u_i)
    z_j = norm.ppf(u_j)
    return (-0.5 * np.log1p(-r)
            - (r * (z_i * z_i + z_j * z_j) - 2.0 * signed * z_i * z_j) / (2.0 * (1.0 - r)))


def gauss_copula_bipdf(u_i, u_j, rho):
    """
    高斯 copula 密度: 相关为 ρ 的二元标准正态密度在 (Φ⁻¹u_i, Φ⁻¹u_j) 处的值
    除以两个标准正态密度
    """
    return _output(np.exp(log_gauss_copula_bipdf(u_i, u_j, rho)), u_i, u_j, rho)


# ---------------------------------------------------------------------------
# 任意边缘
# ---------------------------------------------------------------------------

def log_marginal_bipdf(s_i, s_j, spec, nu: float, rho, copula: str = "clayton",
                       x_i: Optional[np.ndarray] = None, x_j: Optional[np.ndarray] = None,
                       ctrl: Optional[SeriesControl] = None) -> np.ndarray:
    """变换后随机场的二元对数密度"""
    from .copula_adapters import get_adapter

    adapter = get_adapter(copula, nu=nu, ctrl=ctrl)
    s_i = np.asarray(s_i, dtype=float)
    s_j = np.asarray(s_j, dtype=float)
    u_i = np.clip(spec.cdf(s_i, x_i), 1e-15, 1.0 - 1e-15)
    u_j = np.clip(spec.cdf(s_j, x_j), 1e-15, 1.0 - 1e-15)
    return (adapter.log_pair_density(u_i, u_j, rho)
            + spec.logpdf(s_i, x_i) + spec.logpdf(s_j, x_j))


def marginal_bipdf(s_i, s_j, spec, nu: float, rho, copula: str = "clayton",
                   x_i: Optional[np.ndarray] = None, x_j: Optional[np.ndarray] = None,
                   ctrl: Optional[SeriesControl] = None):
    """
    任意边缘随机场的二元密度 c{F_S(s_i), F_S(s_j)} f_S(s_i) f_S(s_j)

    Args:
        s_i, s_j: 边缘支撑内的值
        spec: MarginalSpec
        nu: ν
        rho: 底层相关
        copula: clayton 或 gaussian
        x_i, x_j: beta 回归时两个站点的协变量行

    Returns:
        密度值
    """
    values = np.exp(log_marginal_bipdf(s_i, s_j, spec, nu, rho, copula, x_i, x_j, ctrl))
    return _output(values, s_i, s_j, rho)


def graded_nodes(n: int) -> Tuple[np.ndarray, np.ndarray]:
    """
    [0, 1] 上的 Gauss-Legendre 节点, 经 u = t²/(t²+(1-t)²) 变量替换,
    使端点附近的幂次奇异性变得光滑

    Returns:
        (节点, 权重)
    """
    x, w = leggauss(int(n))
    t = 0.5 * (x + 1.0)
    weight = 0.5 * w
    denom = t * t + (1.0 - t) ** 2
    u = t * t / denom
    jac = 2.0 * t * (1.0 - t) / denom ** 2
    return u, weight * jac


def _marginal_corr_nodes(spec, nu: float, rho: float, n: int, copula: str,
                         covariates_row, ctrl) -> float:
    from .copula_adapters import get_adapter

    u, w = graded_nodes(n)
    row = None if covariates_row is None else np.atleast_2d(covariates_row)
    q = spec.ppf(u, row) if row is not None else spec.ppf(u)
    q = np.broadcast_to(np.asarray(q, dtype=float), u.shape)
    mean = float(np.sum(w * q))
    second = float(np.sum(w * q * q))
    variance = second - mean * mean
    if not variance > 0:
        raise ValueError("边缘方差必须为正")

    adapter = get_adapter(copula, nu=nu, ctrl=ctrl)
    uu_i, uu_j = np.meshgrid(u, u, indexing='ij')
    dens = np.exp(adapter.log_pair_density(uu_i, uu_j, rho))
    cross = float(np.sum((w * q)[:, None] * (w * q)[None, :] * dens))
    return (cross - mean * mean) / variance


def marginal_corr(spec, nu: float, rho: float, quad_nodes: int = DEFAULT_QUAD_NODES,
                  copula: str = "clayton", covariates_row: Optional[np.ndarray] = None,
                  ctrl: Optional[SeriesControl] = None, doubling_tol: float = DOUBLING_TOL) -> float:
    """
    变换后随机场的相关 ∫∫ F⁻¹(u_i)F⁻¹(u_j) c(u_i, u_j) du 的标准化

    张量积 Gauss-Legendre 求积, 均值与方差用同一组节点计算;
    节点数加倍后结果变化超过 doubling_tol 时报错。

    Args:
        spec: MarginalSpec
        nu: ν
        rho: 底层相关
        quad_nodes: 每个方向的节点数
        copula: clayton 或 gaussian
        covariates_row: beta 回归时使用的协变量行

    Returns:
        相关值

    Raises:
        QuadratureError: 节点加倍检查失败
    """
    if spec.family == "beta_regression" and covariates_row is None:
        raise ValueError("beta 回归的相关需要指定协变量行")
    if float(squared_correlation(rho)) == 0.0:
        return 0.0
    if spec.family == "uniform":
        # 均匀边缘的 Pearson 相关即 Spearman 相关
        from .copula_adapters import get_adapter
        return float(get_adapter(copula, nu=nu, ctrl=ctrl).uniform_correlation(rho))
    coarse = _marginal_corr_nodes(spec, nu, rho, quad_nodes, copula, covariates_row, ctrl)
    fine = _marginal_corr_nodes(spec, nu, rho, 2 * quad_nodes, copula, covariates_row, ctrl)
    if abs(fine - coarse) > doubling_tol:
        raise QuadratureError("marginal_corr", coarse, fine)
    return fine


# ---------------------------------------------------------------------------
# 依赖度量
# ---------------------------------------------------------------------------

def blomqvist_beta(nu: float, rho, ctrl: Optional[SeriesControl] = None) -> float:
    """Blomqvist 中位相关系数 4F(1/2, 1/2) - 1"""
    return float(4.0 * clayton_bicdf(0.5, 0.5, nu, rho, ctrl) - 1.0)


def kendall_tau(nu: float, rho, quad_nodes: int = DEFAULT_QUAD_NODES,
                ctrl: Optional[SeriesControl] = None,
                doubling_tol: float = DOUBLING_TOL) -> float:
    """
    Kendall 秩相关 4∫∫ F dF - 1, 在分级 Gauss-Legendre 网格上求积

    Raises:
        QuadratureError: 节点数加倍后结果变化超过 doubling_tol
    """
    if float(squared_correlation(rho)) == 0.0:
        return 0.0
    coarse = _kendall_tau_nodes(nu, rho, quad_nodes, ctrl)
    fine = _kendall_tau_nodes(nu, rho, 2 * quad_nodes, ctrl)
    if abs(fine - coarse) > doubling_tol:
        raise QuadratureError("kendall_tau", coarse, fine)
    return fine


def _kendall_tau_nodes(nu: float, rho, n: int, ctrl: Optional[SeriesControl]) -> float:
    u, w = graded_nodes(n)
    uu_i, uu_j = np.meshgrid(u, u, indexing='ij')
    cdf = clayton_bicdf(uu_i, uu_j, nu, rho, ctrl)
    dens = clayton_bipdf(uu_i, uu_j, nu, rho, ctrl)
    return float(4.0 * np.sum(w[:, None] * w[None, :] * cdf * dens) - 1.0)


def tail_dependence_probe(nu: float, rho, t_grid: Sequence[float] = (1e-2, 1e-3, 1e-4),
                          ctrl: Optional[SeriesControl] = None) -> Dict[str, np.ndarray]:
    """
    尾部依赖的数值探针 (只给出序列, 不断言极限)

    Returns:
        {"t": t, "lower": F(t,t)/t, "upper": (2t - 1 + F(1-t,1-t))/t}
    """
    t = np.asarray(t_grid, dtype=float)
    lower = clayton_bicdf(t, t, nu, rho, ctrl) / t
    upper = (2.0 * t - 1.0 + clayton_bicdf(1.0 - t, 1.0 - t, nu, rho, ctrl)) / t
    return {"t": t, "lower": np.asarray(lower), "upper": np.asarray(upper)}


# ---------------------------------------------------------------------------
# 作图数据
# ---------------------------------------------------------------------------

def density_grid(nu: float, rho: float, grid: int = 50, transform: str = "uniform",
                 copula: str = "clayton", bound: float = 3.0,
                 ctrl: Optional[SeriesControl] = None) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """
    等高线图数据

    transform="uniform" 时在 (0,1)² 的中点网格上给出 copula 密度;
    transform="gaussian-margins" 时在 [-bound, bound]² 上给出
    c(Φz₁, Φz₂)φ(z₁)φ(z₂)。

    Returns:
        (x, y, density) 三个 grid×grid 数组
    """
    from .copula_adapters import get_adapter

    adapter = get_adapter(copula, nu=nu, ctrl=ctrl)
    if transform == "uniform":
        axis = (np.arange(grid) + 0.5) / grid
        x, y = np.meshgrid(axis, axis, indexing='ij')
        dens = np.exp(adapter.log_pair_density(x, y, rho))
    elif transform == "gaussian-margins":
        axis = np.linspace(-bound, bound, grid)
        x, y = np.meshgrid(axis, axis, indexing='ij')
        log_c = adapter.log_pair_density(norm.cdf(x), norm.cdf(y), rho)
        dens = np.exp(log_c + norm.logpdf(x) + norm.logpdf(y))
    else:
        raise ValueError(f"不支持的变换: {transform}")
    return x, y, dens


def correlation_curve(nu_list: Sequence[float], model: CorrelationModel, dist_grid,
                      spec=None, copula: str = "clayton", quad_nodes: int = DEFAULT_QUAD_NODES,
                      covariates_row: Optional[np.ndarray] = None,
                      ctrl: Optional[SeriesControl] = None,
                      doubling_tol: float = DOUBLING_TOL) -> Dict[float, np.ndarray]:
    """
    相关随距离变化的曲线

    spec 为空时给出均匀边缘 (Clayton 场) 的相关, 否则给出变换后随机场的相关。

    Returns:
        {ν: 与 dist_grid 等长的相关数组}
    """
    from .copula_adapters import get_adapter

    dist = np.asarray(dist_grid, dtype=float)
    rho = corr_with_nugget(corr_from_distances(dist, model, ctrl), model.tau2, dist == 0)
    rho = np.atleast_1d(rho)
    curves = {}
    for nu in nu_list:
        adapter = get_adapter(copula, nu=nu, ctrl=ctrl)
        values = np.empty(rho.shape)
        for index, value in enumerate(rho):
            if spec is None:
                values[index] = adapter.uniform_correlation(value)
            else:
                values[index] = marginal_corr(spec, nu, value, quad_nodes, copula,
                                              covariates_row, ctrl, doubling_tol)
        curves[nu] = values
        logger.info(f"相关曲线 ν={nu} 已计算: {len(values)} 个距离")
    return curves
