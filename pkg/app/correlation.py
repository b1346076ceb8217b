#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
空间相关模型模块
广义 Wendland 与指数相关函数、块金效应、相关矩阵及其 Cholesky 分解
"""

import logging
from dataclasses import asdict, dataclass, replace
from typing import Any, Dict, Optional

import numpy as np
from scipy import integrate
from scipy.linalg import lapack
from scipy.spatial.distance import pdist, squareform
from scipy.special import betaln, gammaln

from .errors import FactorizationError
from .specfun import DEFAULT_CONTROL, SeriesControl, _log_hyp2f1

logger = logging.getLogger(__name__)


# 相关函数族
FAMILY_GENERALIZED_WENDLAND = "generalized_wendland"
FAMILY_EXPONENTIAL = "exponential"

SUPPORTED_CORRELATION_FAMILIES = [FAMILY_GENERALIZED_WENDLAND, FAMILY_EXPONENTIAL]

CORRELATION_FAMILY_NAMES = {
    FAMILY_GENERALIZED_WENDLAND: "广义 Wendland",
    FAMILY_EXPONENTIAL: "指数",
}

# 1-(h/b)^2 超过该值时改用积分表示计算广义 Wendland
_GW_SERIES_LIMIT = 0.75

# Cholesky 对角抖动序列
_JITTER_SCHEDULE = (1e-10, 1e-9, 1e-8, 1e-7, 1e-6)


@dataclass(frozen=True)
class CorrelationModel:
    """底层高斯场的相关模型"""

    family: str = FAMILY_GENERALIZED_WENDLAND
    delta: float = 0.0  # 广义 Wendland 光滑参数 δ
    mu_gw: float = 4.0  # 广义 Wendland 形状参数 μ
    b: float = 0.2  # 紧支撑半径 / 尺度参数
    tau2: float = 0.0  # 块金效应 τ²
    dim: int = 2  # 空间维数

    def __post_init__(self):
        valid, msg = self.validate()
        if not valid:
            raise ValueError(msg)

    def validate(self) -> tuple[bool, str]:
        """验证模型参数"""
        if self.family not in SUPPORTED_CORRELATION_FAMILIES:
            return False, f"不支持的相关函数族: {self.family}"
        if not np.isfinite(self.b) or self.b <= 0:
            return False, f"尺度参数 b 必须为正: {self.b}"
        if not 0.0 <= self.tau2 <= 1.0:
            return False, f"块金效应 tau2 必须在 [0, 1] 内: {self.tau2}"
        if self.family == FAMILY_GENERALIZED_WENDLAND:
            if self.delta < 0:
                return False, f"光滑参数 delta 不能为负: {self.delta}"
            bound = 0.5 * (self.dim + 1) + self.delta
            if self.mu_gw < bound:
                return False, f"广义 Wendland 正定条件不满足: mu={self.mu_gw} < {bound}"
        return True, ""

    def to_dict(self) -> Dict[str, Any]:
        """转换为字典"""
        return asdict(self)

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> 'CorrelationModel':
        """从字典创建实例"""
        return cls(**data)

    def with_params(self, **changes) -> 'CorrelationModel':
        """返回修改了部分参数的新模型"""
        return replace(self, **changes)

    @property
    def display_name(self) -> str:
        if self.family == FAMILY_GENERALIZED_WENDLAND:
            return f"GW(δ={self.delta:g}, μ={self.mu_gw:g}, b={self.b:g})"
        return f"Exp(b={self.b:g})"

    def correlation(self, dist, nugget: bool = True) -> np.ndarray:
        """非零距离处的相关 ρ*(h), nugget=False 时返回底层 ρ(h)"""
        rho = corr_from_distances(dist, self)
        if nugget:
            return corr_with_nugget(rho, self.tau2, False)
        return rho


@dataclass
class SpatialConfig:
    """站点坐标与可选协变量 (设计矩阵, 含截距列)"""

    coords: np.ndarray
    covariates: Optional[np.ndarray] = None

    def __post_init__(self):
        coords = np.asarray(self.coords, dtype=float)
        if coords.ndim == 1:
            coords = coords[:, None]
        self.coords = coords
        if self.covariates is not None:
            covariates = np.asarray(self.covariates, dtype=float)
            if covariates.ndim == 1:
                covariates = covariates[:, None]
            self.covariates = covariates
        valid, msg = self.validate()
        if not valid:
            raise ValueError(msg)

    @property
    def n(self) -> int:
        return self.coords.shape[0]

    @property
    def dim(self) -> int:
        return self.coords.shape[1]

    def validate(self) -> tuple[bool, str]:
        """站点必须互不相同, 协变量行数与站点数一致"""
        if self.n < 1:
            return False, "至少需要一个站点"
        if not np.all(np.isfinite(self.coords)):
            return False, "坐标包含非有限值"
        if np.unique(self.coords, axis=0).shape[0] != self.n:
            return False, "存在重复坐标, 站点必须互不相同"
        if self.covariates is not None:
            if self.covariates.shape[0] != self.n:
                return False, f"协变量行数 {self.covariates.shape[0]} 与站点数 {self.n} 不一致"
            if not np.all(np.isfinite(self.covariates)):
                return False, "协变量包含非有限值"
        return True, ""

    def distance_matrix(self) -> np.ndarray:
        """欧氏距离矩阵"""
        return pairwise_distances(self.coords)

    def pair_distances(self, i: np.ndarray, j: np.ndarray) -> np.ndarray:
        """指定点对之间的欧氏距离"""
        diff = self.coords[np.asarray(i)] - self.coords[np.asarray(j)]
        return np.sqrt(np.sum(diff * diff, axis=1))

    def bounding_diagonal(self) -> float:
        """坐标包围盒对角线长度"""
        span = self.coords.max(axis=0) - self.coords.min(axis=0)
        return float(np.sqrt(np.sum(span * span)))

    def permuted(self, order: np.ndarray) -> 'SpatialConfig':
        """按给定顺序重排站点"""
        order = np.asarray(order)
        covariates = None if self.covariates is None else self.covariates[order]
        return SpatialConfig(self.coords[order], covariates)

    def scaled(self, factor: float) -> 'SpatialConfig':
        """坐标整体缩放"""
        return SpatialConfig(self.coords * factor, self.covariates)


def pairwise_distances(coords: np.ndarray) -> np.ndarray:
    """站点两两之间的欧氏距离矩阵 (严格对称, 对角为0)"""
    coords = np.asarray(coords, dtype=float)
    if coords.ndim == 1:
        coords = coords[:, None]
    if coords.shape[0] == 1:
        return np.zeros((1, 1))
    return squareform(pdist(coords))


def _log_gw_constant(delta: float, mu: float) -> float:
    """广义 Wendland 常数 K 的对数 (δ > 0)"""
    return (gammaln(delta) + gammaln(2 * delta + mu + 1) - gammaln(2 * delta)
            - gammaln(delta + mu + 1) - (mu + 1) * np.log(2.0))


def _gw_integral(t: float, delta: float, mu: float) -> float:
    """积分表示 ∫_t^1 u (u²-t²)^{δ-1} (1-u)^μ du / B(2δ, μ+1)"""
    value, _ = integrate.quad(
        lambda u: u * (u + t) ** (delta - 1.0), t, 1.0,
        weight='alg', wvar=(delta - 1.0, mu), epsabs=1e-14, epsrel=1e-12, limit=200,
    )
    return float(value * np.exp(-betaln(2 * delta, mu + 1)))


def _gw_values(t: np.ndarray, model: CorrelationModel, ctrl: SeriesControl) -> np.ndarray:
    """t = h/b ∈ [0, 1) 上的广义 Wendland 值"""
    if model.delta == 0:
        return (1.0 - t) ** model.mu_gw

    delta, mu = model.delta, model.mu_gw
    out = np.empty_like(t)
    x = 1.0 - t * t
    out[t == 0] = 1.0
    series = (t > 0) & (x <= _GW_SERIES_LIMIT)
    if np.any(series):
        xs = x[series]
        log_f, _ = _log_hyp2f1(mu / 2.0, (mu + 1.0) / 2.0, delta + mu + 1.0, xs, ctrl,
                               name="gw_corr")
        out[series] = np.exp(_log_gw_constant(delta, mu) + (delta + mu) * np.log(xs) + log_f)
    near = (t > 0) & ~series
    for index in np.flatnonzero(near):
        out[index] = _gw_integral(float(t[index]), delta, mu)
    return np.clip(out, 0.0, 1.0)


def corr_from_distances(dist, model: CorrelationModel,
                        ctrl: Optional[SeriesControl] = None) -> np.ndarray:
    """
    底层相关函数 ρ(h) 的向量化计算 (不含块金效应)

    Args:
        dist: 非负距离 (标量或数组)
        model: 相关模型
        ctrl: 2F1 级数截断控制

    Returns:
        与 dist 同形状的相关值
    """
    ctrl = ctrl or DEFAULT_CONTROL
    d = np.asarray(dist, dtype=float)
    if np.any(d < 0) or np.any(np.isnan(d)):
        raise ValueError("距离必须非负")

    if model.family == FAMILY_EXPONENTIAL:
        return np.exp(-d / model.b)

    t = d / model.b
    out = np.zeros_like(t)
    inside = t < 1.0
    if np.any(inside):
        out[inside] = _gw_values(t[inside], model, ctrl)
    return out


def gw_corr(dist, model: CorrelationModel, ctrl: Optional[SeriesControl] = None):
    """
    广义 Wendland 相关函数

    h ≤ b 时为 K{1-(h/b)²}^{δ+μ} 2F1(μ/2, (μ+1)/2; δ+μ+1; 1-(h/b)²), 否则为 0;
    δ = 0 时直接使用 (1-h/b)^μ。

    Args:
        dist: 非负距离
        model: 相关模型, family 必须是 generalized_wendland

    Returns:
        [0, 1] 中的相关值, 标量输入返回 float
    """
    if model.family != FAMILY_GENERALIZED_WENDLAND:
        raise ValueError(f"gw_corr 需要广义 Wendland 模型, 当前: {model.family}")
    values = corr_from_distances(dist, model, ctrl)
    return float(values) if np.ndim(dist) == 0 else values


def exponential_corr(dist, b: float):
    """指数相关函数 exp(-h/b)"""
    values = corr_from_distances(dist, CorrelationModel(family=FAMILY_EXPONENTIAL, b=b))
    return float(values) if np.ndim(dist) == 0 else values


def corr_with_nugget(rho, tau2: float, is_zero_lag):
    """
    块金效应修正 ρ*(h) = ρ(h)(1-τ²) + τ²·1{h=0}

    Args:
        rho: 底层相关
        tau2: 块金效应, [0, 1]
        is_zero_lag: 是否为零距离

    Returns:
        修正后的相关
    """
    if not 0.0 <= tau2 <= 1.0:
        raise ValueError(f"块金效应 tau2 必须在 [0, 1] 内: {tau2}")
    result = np.asarray(rho, dtype=float) * (1.0 - tau2) + tau2 * np.asarray(is_zero_lag, dtype=float)
    if np.ndim(result) == 0:
        return float(result)
    return result


def corr_matrix(cfg: SpatialConfig, model: CorrelationModel,
                ctrl: Optional[SeriesControl] = None) -> np.ndarray:
    """
    站点相关矩阵 (含块金效应), 严格对称且对角为1

    Args:
        cfg: 站点配置
        model: 相关模型

    Returns:
        n×n 相关矩阵
    """
    if cfg.n == 1:
        return np.ones((1, 1))
    condensed = pdist(cfg.coords)
    rho = corr_with_nugget(corr_from_distances(condensed, model, ctrl), model.tau2, False)
    matrix = squareform(np.atleast_1d(rho))
    np.fill_diagonal(matrix, 1.0)
    return matrix


def chol_factor(matrix: np.ndarray) -> np.ndarray:
    """
    Cholesky 分解 L·Lᵀ = matrix

    分解失败时依次在对角线上加 1e-10, 1e-9, ..., 1e-6 的抖动重试。

    Args:
        matrix: 对称 (半) 正定矩阵

    Returns:
        下三角矩阵 L

    Raises:
        ValueError: 矩阵非方阵或不对称
        FactorizationError: 最大抖动后仍失败, 给出失败的顺序主子式阶数
    """
    a = np.asarray(matrix, dtype=float)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError(f"需要方阵, 当前形状: {a.shape}")
    if not np.allclose(a, a.T, rtol=0.0, atol=1e-12):
        raise ValueError("矩阵不对称")

    factor, info = lapack.dpotrf(a, lower=1, clean=1)
    if info == 0:
        return np.tril(factor)
    if info < 0:
        raise ValueError(f"dpotrf 第 {-info} 个参数非法")

    minor = int(info)
    identity = np.eye(a.shape[0])
    for jitter in _JITTER_SCHEDULE:
        logger.warning(f"Cholesky 分解失败 (第 {minor} 阶顺序主子式), 对角线加抖动 {jitter:g} 重试")
        factor, info = lapack.dpotrf(a + jitter * identity, lower=1, clean=1)
        if info == 0:
            return np.tril(factor)
        minor = int(info)

    raise FactorizationError(minor, _JITTER_SCHEDULE[-1])
