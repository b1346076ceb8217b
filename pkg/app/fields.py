#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
随机场模拟模块
高斯场、Gamma 场、辅助 beta 场、Clayton 场与高斯 copula 场的精确 (Cholesky) 模拟,
以及到任意边缘分布的分位数变换
"""

import logging
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np
from scipy.optimize import minimize
from scipy.special import expit, logit
from scipy.stats import norm

from .correlation import CorrelationModel, SpatialConfig, chol_factor, corr_matrix
from .specfun import beta_log_density, beta_quantile, reg_inc_beta

logger = logging.getLogger(__name__)


# 边缘分布族
MARGINAL_UNIFORM = "uniform"
MARGINAL_BETA = "beta"
MARGINAL_BETA_REGRESSION = "beta_regression"

SUPPORTED_MARGINALS = [MARGINAL_UNIFORM, MARGINAL_BETA, MARGINAL_BETA_REGRESSION]

MARGINAL_DISPLAY_NAMES = {
    MARGINAL_UNIFORM: "均匀分布",
    MARGINAL_BETA: "Beta(ξ, δ)",
    MARGINAL_BETA_REGRESSION: "重参数化 beta 回归",
}

# 分位数变换前对均匀值的截断
U_CLAMP = 1e-15


@dataclass
class MarginalSpec:
    """边缘分布: 均匀、beta(ξ, δ) 或 logistic 连接的 beta 回归"""

    family: str = MARGINAL_UNIFORM
    xi: float = 1.0  # beta 形状参数 ξ
    delta: float = 1.0  # beta 形状参数 δ
    beta_coeffs: Tuple[float, ...] = field(default_factory=tuple)  # 回归系数 β
    precision: float = 1.0  # 重参数化 beta 的精度 δ

    def __post_init__(self):
        self.beta_coeffs = tuple(float(v) for v in self.beta_coeffs)
        valid, msg = self.validate()
        if not valid:
            raise ValueError(msg)

    def validate(self, cfg: Optional[SpatialConfig] = None) -> tuple[bool, str]:
        """验证参数, 给定 cfg 时同时检查回归所需协变量"""
        if self.family not in SUPPORTED_MARGINALS:
            return False, f"不支持的边缘分布: {self.family}"
        if self.family == MARGINAL_BETA:
            if not (self.xi > 0 and self.delta > 0 and np.isfinite(self.xi) and np.isfinite(self.delta)):
                return False, f"beta 形状参数必须为正: xi={self.xi}, delta={self.delta}"
        if self.family == MARGINAL_BETA_REGRESSION:
            if not (self.precision > 0 and np.isfinite(self.precision)):
                return False, f"精度参数必须为正: {self.precision}"
            if not self.beta_coeffs:
                return False, "beta 回归需要至少一个回归系数"
            if cfg is not None:
                if cfg.covariates is None:
                    return False, "beta 回归需要站点协变量"
                if cfg.covariates.shape[1] != len(self.beta_coeffs):
                    return False, (f"协变量列数 {cfg.covariates.shape[1]} 与回归系数个数 "
                                   f"{len(self.beta_coeffs)} 不一致")
        return True, ""

    def to_dict(self) -> Dict[str, Any]:
        """转换为字典"""
        return {
            "family": self.family,
            "xi": self.xi,
            "delta": self.delta,
            "beta_coeffs": list(self.beta_coeffs),
            "precision": self.precision,
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> 'MarginalSpec':
        """从字典创建实例"""
        data = dict(data)
        data["beta_coeffs"] = tuple(data.get("beta_coeffs", ()))
        return cls(**data)

    # ---- 参数向量 ----

    def param_names(self) -> List[str]:
        """自然尺度参数名"""
        if self.family == MARGINAL_BETA:
            return ["xi", "delta"]
        if self.family == MARGINAL_BETA_REGRESSION:
            return [f"beta{i}" for i in range(len(self.beta_coeffs))] + ["precision"]
        return []

    def param_vector(self) -> np.ndarray:
        if self.family == MARGINAL_BETA:
            return np.array([self.xi, self.delta])
        if self.family == MARGINAL_BETA_REGRESSION:
            return np.array(list(self.beta_coeffs) + [self.precision])
        return np.zeros(0)

    def with_vector(self, values: Sequence[float]) -> 'MarginalSpec':
        """用自然尺度参数向量构造同族的新实例"""
        values = [float(v) for v in values]
        if self.family == MARGINAL_BETA:
            return MarginalSpec(MARGINAL_BETA, xi=values[0], delta=values[1])
        if self.family == MARGINAL_BETA_REGRESSION:
            return MarginalSpec(MARGINAL_BETA_REGRESSION, beta_coeffs=tuple(values[:-1]),
                                precision=values[-1])
        return MarginalSpec(MARGINAL_UNIFORM)

    # ---- 分布函数 ----

    def mean_link(self, covariates: Optional[np.ndarray]) -> np.ndarray:
        """logistic 连接的站点均值 μ(s)"""
        if covariates is None:
            raise ValueError("beta 回归需要站点协变量")
        X = np.atleast_2d(np.asarray(covariates, dtype=float))
        return expit(X @ np.asarray(self.beta_coeffs))

    def shapes(self, covariates: Optional[np.ndarray] = None) -> Tuple[Any, Any]:
        """beta 形状参数 (均匀分布为 (1, 1)), 回归时逐站点返回数组"""
        if self.family == MARGINAL_BETA:
            return self.xi, self.delta
        if self.family == MARGINAL_BETA_REGRESSION:
            mu = self.mean_link(covariates)
            return mu * self.precision, (1.0 - mu) * self.precision
        return 1.0, 1.0

    def cdf(self, s, covariates: Optional[np.ndarray] = None) -> np.ndarray:
        s = np.asarray(s, dtype=float)
        if self.family == MARGINAL_UNIFORM:
            return np.clip(s, 0.0, 1.0)
        a, b = self.shapes(covariates)
        return reg_inc_beta(np.clip(s, 0.0, 1.0), a, b)

    def logpdf(self, s, covariates: Optional[np.ndarray] = None) -> np.ndarray:
        s = np.asarray(s, dtype=float)
        inside = (s > 0) & (s < 1)
        if self.family == MARGINAL_UNIFORM:
            return np.where(inside, 0.0, -np.inf)
        a, b = self.shapes(covariates)
        safe = np.where(inside, s, 0.5)
        return np.where(inside, beta_log_density(safe, a, b), -np.inf)

    def ppf(self, u, covariates: Optional[np.ndarray] = None) -> np.ndarray:
        u = np.asarray(u, dtype=float)
        if self.family == MARGINAL_UNIFORM:
            return u.copy()
        a, b = self.shapes(covariates)
        return beta_quantile(u, a, b)

    def mean(self, covariates: Optional[np.ndarray] = None):
        if self.family == MARGINAL_UNIFORM:
            return 0.5
        a, b = self.shapes(covariates)
        return a / (a + b)

    def variance(self, covariates: Optional[np.ndarray] = None):
        if self.family == MARGINAL_UNIFORM:
            return 1.0 / 12.0
        a, b = self.shapes(covariates)
        return a * b / ((a + b) ** 2 * (a + b + 1.0))


@dataclass
class DependenceParams:
    """依赖参数 θ = (ν, ϑ)"""

    nu: float = 2.0  # 反射 (非) 对称参数 ν
    corr: CorrelationModel = field(default_factory=CorrelationModel)

    def validate(self, for_simulation: bool = True) -> tuple[bool, str]:
        """模拟要求 ν 为正整数, 密度计算只要求 ν > 0"""
        if not self.nu > 0:
            return False, f"nu 必须为正: {self.nu}"
        if for_simulation and float(self.nu) != int(round(self.nu)):
            return False, f"模拟要求 nu 为正整数: {self.nu}"
        return self.corr.validate()

    def to_dict(self) -> Dict[str, Any]:
        return {"nu": self.nu, "corr": self.corr.to_dict()}

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> 'DependenceParams':
        return cls(nu=data["nu"], corr=CorrelationModel.from_dict(data["corr"]))


@dataclass
class FieldRealization:
    """一次随机场实现"""

    values: np.ndarray
    marginal: MarginalSpec = field(default_factory=MarginalSpec)
    params: Optional[DependenceParams] = None
    seed: Optional[int] = None
    copula: str = "clayton"

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)

    @property
    def n(self) -> int:
        return self.values.shape[-1]


# ---------------------------------------------------------------------------
# 种子派生
# ---------------------------------------------------------------------------

def derive_rng(seed: int, *stream: int) -> np.random.Generator:
    """由 (父种子, 流编号) 确定性派生独立随机数生成器"""
    if seed is None or int(seed) < 0:
        raise ValueError(f"种子必须是非负整数: {seed}")
    sequence = np.random.SeedSequence(int(seed), spawn_key=tuple(int(s) for s in stream))
    return np.random.default_rng(sequence)


def derive_seed(seed: int, *stream: int) -> int:
    """派生一个 63 位整数子种子"""
    sequence = np.random.SeedSequence(int(seed), spawn_key=tuple(int(s) for s in stream))
    return int(sequence.generate_state(1, dtype=np.uint64)[0] >> np.uint64(1))


def random_sites(n: int, seed: int, dim: int = 2) -> SpatialConfig:
    """单位正方形 (立方体) 上的均匀随机站点"""
    if n < 1:
        raise ValueError(f"站点数必须为正: {n}")
    rng = derive_rng(seed, 7919)
    return SpatialConfig(rng.uniform(size=(n, dim)))


def _factor_for(cfg: SpatialConfig, corr: CorrelationModel,
                factor: Optional[np.ndarray]) -> np.ndarray:
    if factor is not None:
        return factor
    return chol_factor(corr_matrix(cfg, corr))


def _check_positive_integer(name: str, value) -> int:
    if float(value) != int(round(float(value))) or int(round(float(value))) < 1:
        raise ValueError(f"{name} 必须是正整数: {value}")
    return int(round(float(value)))


# ---------------------------------------------------------------------------
# 模拟
# ---------------------------------------------------------------------------

def sim_gaussian(cfg: SpatialConfig, L: Optional[np.ndarray], seed: int,
                 size: Optional[int] = None, stream: Sequence[int] = ()) -> np.ndarray:
    """
    标准高斯随机场 L·ε

    Args:
        cfg: 站点配置
        L: 相关矩阵的 Cholesky 因子, None 表示站点独立
        seed: 种子
        size: 重复次数, 给定时返回 (size, n)
        stream: 派生流编号

    Returns:
        长度 n 的向量或 (size, n) 矩阵
    """
    rng = derive_rng(seed, *stream)
    shape = (cfg.n,) if size is None else (int(size), cfg.n)
    eps = rng.standard_normal(shape)
    if L is None:
        return eps
    L = np.asarray(L, dtype=float)
    if L.shape != (cfg.n, cfg.n):
        raise ValueError(f"Cholesky 因子形状 {L.shape} 与站点数 {cfg.n} 不一致")
    return eps @ L.T


def _gamma_field(cfg: SpatialConfig, psi: int, L: Optional[np.ndarray], seed: int,
                 size: Optional[int], prefix: Tuple[int, ...]) -> np.ndarray:
    total = None
    for copy in range(psi):
        z = sim_gaussian(cfg, L, seed, size, stream=prefix + (copy,))
        total = z * z if total is None else total + z * z
    return total / 2.0


def sim_gamma(cfg: SpatialConfig, psi: int, corr: CorrelationModel, seed: int,
              size: Optional[int] = None, factor: Optional[np.ndarray] = None) -> np.ndarray:
    """
    Gamma 随机场 G_ψ(s) = Σ_{i=1}^ψ Z_i(s)²/2, 边缘 Gamma(ψ/2, 1)

    Raises:
        ValueError: ψ 不是正整数
    """
    psi = _check_positive_integer("psi", psi)
    L = _factor_for(cfg, corr, factor)
    return _gamma_field(cfg, psi, L, seed, size, prefix=(0,))


def sim_aux_beta(cfg: SpatialConfig, nu: int, alpha: int, corr: CorrelationModel, seed: int,
                 size: Optional[int] = None, factor: Optional[np.ndarray] = None) -> np.ndarray:
    """
    辅助 beta 随机场 Y = H_ν / (H_ν + N_α), 边缘 Beta(ν/2, α/2)

    两个 Gamma 场使用由 seed 派生的独立流。
    """
    nu = _check_positive_integer("nu", nu)
    alpha = _check_positive_integer("alpha", alpha)
    L = _factor_for(cfg, corr, factor)
    h = _gamma_field(cfg, nu, L, seed, size, prefix=(1,))
    n_field = _gamma_field(cfg, alpha, L, seed, size, prefix=(2,))
    return h / (h + n_field)


def sim_clayton(cfg: SpatialConfig, nu: int, corr: CorrelationModel, seed: int,
                size: Optional[int] = None, factor: Optional[np.ndarray] = None) -> np.ndarray:
    """
    Clayton 随机场 U_ν = Y_{ν,2}^{ν/2}, 边缘 Uniform(0, 1)
    """
    nu = _check_positive_integer("nu", nu)
    y = sim_aux_beta(cfg, nu, 2, corr, seed, size=size, factor=factor)
    return y ** (nu / 2.0)


def sim_gaussian_copula(cfg: SpatialConfig, corr: CorrelationModel, seed: int,
                        size: Optional[int] = None, factor: Optional[np.ndarray] = None) -> np.ndarray:
    """高斯 copula 随机场 Φ{Z(s)}"""
    L = _factor_for(cfg, corr, factor)
    return norm.cdf(sim_gaussian(cfg, L, seed, size, stream=(3,)))


# ---------------------------------------------------------------------------
# 边缘变换
# ---------------------------------------------------------------------------

def transform_marginal(u: FieldRealization, spec: MarginalSpec,
                       cfg: Optional[SpatialConfig] = None) -> FieldRealization:
    """
    分位数变换 S(s) = F_S^{-1}{U(s)}

    Args:
        u: 均匀边缘的随机场实现
        spec: 目标边缘分布
        cfg: 站点配置, beta 回归时提供协变量

    Returns:
        变换后的实现
    """
    if u.marginal.family != MARGINAL_UNIFORM:
        raise ValueError(f"输入必须是均匀边缘的实现, 当前: {u.marginal.family}")
    valid, msg = spec.validate(cfg)
    if not valid:
        raise ValueError(msg)

    if spec.family == MARGINAL_UNIFORM:
        values = u.values.copy()
    else:
        covariates = None if cfg is None else cfg.covariates
        if spec.family == MARGINAL_BETA_REGRESSION and covariates is None:
            raise ValueError("beta 回归需要站点协变量")
        clamped = np.clip(u.values, U_CLAMP, 1.0 - U_CLAMP)
        values = spec.ppf(clamped, covariates)
    return FieldRealization(values=values, marginal=spec, params=u.params, seed=u.seed,
                            copula=u.copula)


def rescale_bounded(y, a1: float, a2: float):
    """把 (a1, a2) 上的数据线性映射到 (0, 1): (y - a1)/(a2 - a1)"""
    if not a2 > a1:
        raise ValueError(f"要求 a2 > a1: a1={a1}, a2={a2}")
    result = (np.asarray(y, dtype=float) - a1) / (a2 - a1)
    return float(result) if np.ndim(result) == 0 else result


def unscale_bounded(u, a1: float, a2: float):
    """rescale_bounded 的逆映射"""
    if not a2 > a1:
        raise ValueError(f"要求 a2 > a1: a1={a1}, a2={a2}")
    result = a1 + np.asarray(u, dtype=float) * (a2 - a1)
    return float(result) if np.ndim(result) == 0 else result


def simulate_field(cfg: SpatialConfig, params: DependenceParams, marginal: MarginalSpec,
                   seed: int, copula: str = "clayton",
                   factor: Optional[np.ndarray] = None) -> FieldRealization:
    """
    一次完成模拟: 按 copula 类型生成均匀场, 再变换到目标边缘分布

    Args:
        cfg: 站点配置
        params: 依赖参数 (ν 与相关模型)
        marginal: 目标边缘分布
        seed: 种子
        copula: clayton 或 gaussian
        factor: 预先计算的 Cholesky 因子

    Returns:
        FieldRealization
    """
    from .copula_adapters import get_adapter

    adapter = get_adapter(copula, nu=params.nu)
    uniform = adapter.simulate_uniform(cfg, params.corr, seed, factor=factor)
    logger.debug(f"已模拟 {adapter.display_name} 均匀场: n={cfg.n}, seed={seed}")
    realization = FieldRealization(values=uniform, marginal=MarginalSpec(MARGINAL_UNIFORM),
                                   params=params, seed=seed, copula=adapter.get_copula_type())
    return transform_marginal(realization, marginal, cfg)


# ---------------------------------------------------------------------------
# 独立假设下的边缘估计
# ---------------------------------------------------------------------------

def _moment_start(values: np.ndarray, spec: MarginalSpec,
                  cfg: Optional[SpatialConfig]) -> MarginalSpec:
    mean = float(np.mean(values))
    var = float(np.var(values))
    common = mean * (1.0 - mean) / var - 1.0 if var > 0 else 10.0
    common = max(common, 0.1)
    if spec.family == MARGINAL_BETA:
        return MarginalSpec(MARGINAL_BETA, xi=mean * common, delta=(1.0 - mean) * common)
    k = cfg.covariates.shape[1]
    coeffs = [float(logit(np.clip(mean, 1e-6, 1.0 - 1e-6)))] + [0.0] * (k - 1)
    return MarginalSpec(MARGINAL_BETA_REGRESSION, beta_coeffs=tuple(coeffs), precision=common)


def fit_marginal_independence(values, spec: MarginalSpec,
                              cfg: Optional[SpatialConfig] = None,
                              maxiter: int = 4000) -> MarginalSpec:
    """
    假设站点独立时边缘参数的极大似然估计

    矩估计作为初值, 在对数 (形状、精度) / 恒等 (回归系数) 尺度上用 Nelder-Mead 求解。
    结果用作复合似然优化的初值。

    Args:
        values: (0, 1) 中的观测值
        spec: 目标边缘族 (参数值被忽略)
        cfg: 站点配置, beta 回归时提供协变量

    Returns:
        估计得到的 MarginalSpec
    """
    values = np.asarray(values, dtype=float)
    if spec.family == MARGINAL_UNIFORM:
        return MarginalSpec(MARGINAL_UNIFORM)
    if np.any((values <= 0) | (values >= 1)):
        raise ValueError("边缘估计要求观测值在 (0, 1) 内")
    if spec.family == MARGINAL_BETA_REGRESSION and (cfg is None or cfg.covariates is None):
        raise ValueError("beta 回归需要站点协变量")

    start = _moment_start(values, spec, cfg)
    covariates = None if cfg is None else cfg.covariates
    n_coeffs = len(start.beta_coeffs)

    def unpack(vec: np.ndarray) -> MarginalSpec:
        if spec.family == MARGINAL_BETA:
            return start.with_vector(np.exp(vec))
        return start.with_vector(list(vec[:n_coeffs]) + [float(np.exp(vec[-1]))])

    def negloglik(vec: np.ndarray) -> float:
        try:
            candidate = unpack(vec)
            total = float(np.sum(candidate.logpdf(values, covariates)))
        except (ValueError, FloatingPointError, OverflowError):
            return 1e10
        return -total if np.isfinite(total) else 1e10

    if spec.family == MARGINAL_BETA:
        x0 = np.log(start.param_vector())
    else:
        x0 = np.array(list(start.beta_coeffs) + [np.log(start.precision)])
    result = minimize(negloglik, x0, method='Nelder-Mead',
                      options={'xatol': 1e-8, 'fatol': 1e-10, 'maxiter': maxiter})
    if not result.success:
        logger.warning(f"独立假设下的边缘估计未完全收敛: {result.message}")
    estimate = unpack(result.x)
    logger.info(f"独立假设下的边缘估计: {estimate.to_dict()}")
    return estimate
