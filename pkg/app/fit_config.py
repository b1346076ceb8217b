#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
拟合配置模块
定义复合似然拟合的配置与结果数据模型
"""

from dataclasses import dataclass, field, asdict, fields as dataclass_fields
from typing import Any, Dict, List, Optional
import json
import logging
from pathlib import Path

import numpy as np

from .copula_adapters import SUPPORTED_COPULA_TYPES, get_copula_type_name
from .correlation import SUPPORTED_CORRELATION_FAMILIES, CorrelationModel
from .fields import SUPPORTED_MARGINALS, DependenceParams, MarginalSpec

logger = logging.getLogger(__name__)


# 参数变换: 形状、精度、尺度取对数, 回归系数不变, 块金效应取 logit
TRANSFORM_LOG = "log"
TRANSFORM_IDENTITY = "identity"
TRANSFORM_LOGIT = "logit"

PARAMETER_TRANSFORMS = {
    "xi": TRANSFORM_LOG,
    "delta": TRANSFORM_LOG,
    "precision": TRANSFORM_LOG,
    "beta": TRANSFORM_IDENTITY,
    "b": TRANSFORM_LOG,
    "tau2": TRANSFORM_LOGIT,
    "nu": TRANSFORM_LOG,
}

NU_STRATEGIES = ["grid", "two_step"]
SELECTION_CRITERIA = ["wpl", "plic"]


def transform_for(name: str) -> str:
    """参数名对应的变换"""
    if name.startswith("beta"):
        return PARAMETER_TRANSFORMS["beta"]
    if name not in PARAMETER_TRANSFORMS:
        raise ValueError(f"未知参数: {name}")
    return PARAMETER_TRANSFORMS[name]


@dataclass
class FitConfig:
    """复合似然拟合配置"""

    nu_grid: List[int] = field(default_factory=lambda: [1, 2, 4, 6])  # 逐一剖面的 ν 值
    marginal: str = "beta_regression"  # 边缘分布族
    copula: str = "clayton"  # clayton 或 gaussian
    neighbors: int = 2  # 最近邻阶数 m
    correlation: str = "generalized_wendland"  # 底层相关函数族
    gw_delta: float = 0.0  # 广义 Wendland δ (固定)
    gw_mu: float = 4.0  # 广义 Wendland μ (固定)
    estimate_nugget: bool = False  # 是否估计块金效应
    nugget: float = 0.0  # 不估计时的固定块金效应
    start: Dict[str, float] = field(default_factory=dict)  # 按参数名给出的初值
    nu_strategy: str = "grid"  # grid: 整数网格剖面; two_step: 连续估计后取整再拟合
    xatol: float = 1e-6  # Nelder-Mead 参数容差
    fatol: float = 1e-6  # Nelder-Mead 目标函数容差
    maxiter: int = 4000  # 单次优化最大迭代数
    initial_step: float = 0.25  # 初始单纯形步长 (变换尺度)
    restarts: int = 1  # 从当前最优点重启次数
    max_pair_rho2: float = 0.95  # 点对 ρ² 超过该值视为不可行
    hessian_step: float = 1e-5  # 数值 Hessian 步长 (变换尺度)
    bootstrap: int = 0  # 自助法重复次数, 0 表示不计算 Godambe 信息
    bootstrap_workers: int = 4  # 自助法并发数
    seed: int = 0  # 自助法种子
    bounds: Optional[List[float]] = None  # 有界支撑的端点 [a1, a2]
    select_by: str = "wpl"  # ν 选择准则: wpl 或 plic

    def to_dict(self) -> dict:
        """转换为字典"""
        return asdict(self)

    @classmethod
    def from_dict(cls, data: dict) -> 'FitConfig':
        """从字典创建实例, 忽略未知字段"""
        known = {f.name for f in dataclass_fields(cls)}
        unknown = sorted(set(data) - known)
        if unknown:
            logger.warning(f"拟合配置中的未知字段已忽略: {unknown}")
        return cls(**{k: v for k, v in data.items() if k in known})

    def validate(self) -> tuple[bool, str]:
        """验证拟合配置是否有效"""
        if self.copula not in SUPPORTED_COPULA_TYPES:
            return False, f"不支持的 copula 类型: {self.copula}"
        if self.marginal not in SUPPORTED_MARGINALS:
            return False, f"不支持的边缘分布: {self.marginal}"
        if self.correlation not in SUPPORTED_CORRELATION_FAMILIES:
            return False, f"不支持的相关函数族: {self.correlation}"
        if self.copula == "clayton":
            if not self.nu_grid:
                return False, "nu_grid 不能为空"
            for nu in self.nu_grid:
                if float(nu) != int(round(float(nu))) or int(round(float(nu))) < 1:
                    return False, f"nu_grid 只能包含正整数: {nu}"
        if self.nu_strategy not in NU_STRATEGIES:
            return False, f"nu_strategy 必须是: {', '.join(NU_STRATEGIES)}"
        if self.select_by not in SELECTION_CRITERIA:
            return False, f"select_by 必须是: {', '.join(SELECTION_CRITERIA)}"
        if self.neighbors < 1:
            return False, f"近邻阶数必须为正: {self.neighbors}"
        if not 0.0 <= self.nugget < 1.0:
            return False, f"块金效应必须在 [0, 1) 内: {self.nugget}"
        if not 0.0 < self.max_pair_rho2 < 1.0:
            return False, f"max_pair_rho2 必须在 (0, 1) 内: {self.max_pair_rho2}"
        if self.xatol <= 0 or self.fatol <= 0 or self.maxiter < 1:
            return False, "优化器容差必须为正, 最大迭代数必须大于0"
        if self.initial_step <= 0 or self.hessian_step <= 0:
            return False, "初始步长与 Hessian 步长必须为正"
        if self.restarts < 0:
            return False, f"重启次数不能为负: {self.restarts}"
        if self.bootstrap != 0 and self.bootstrap < 30:
            return False, f"自助法重复次数至少为 30: {self.bootstrap}"
        if self.bootstrap_workers < 1:
            return False, "自助法并发数必须大于0"
        if self.bounds is not None:
            if len(self.bounds) != 2 or not self.bounds[1] > self.bounds[0]:
                return False, f"bounds 必须是 [a1, a2] 且 a2 > a1: {self.bounds}"
        if self.select_by == "plic" and self.bootstrap == 0:
            return False, "按 PLIC 选择需要自助法 Godambe 估计 (bootstrap ≥ 30)"
        for name, value in self.start.items():
            try:
                kind = transform_for(name)
            except ValueError as e:
                return False, str(e)
            if kind == TRANSFORM_LOG and not value > 0:
                return False, f"初值 {name} 必须为正: {value}"
            if kind == TRANSFORM_LOGIT and not 0.0 < value < 1.0:
                return False, f"初值 {name} 必须在 (0, 1) 内: {value}"
        return True, ""

    def correlation_model(self, dim: int, b: float = 0.2, tau2: Optional[float] = None) -> CorrelationModel:
        """按配置构造相关模型"""
        return CorrelationModel(family=self.correlation, delta=self.gw_delta, mu_gw=self.gw_mu,
                                b=b, tau2=self.nugget if tau2 is None else tau2, dim=dim)


def load_fit_config(path: str) -> FitConfig:
    """
    从 JSON 文件读取拟合配置

    Raises:
        ValueError: 配置无效
    """
    with open(path, 'r', encoding='utf-8') as f:
        data = json.load(f)
    fit_cfg = FitConfig.from_dict(data)
    valid, msg = fit_cfg.validate()
    if not valid:
        raise ValueError(msg)
    return fit_cfg


def _to_builtin(value: Any) -> Any:
    if isinstance(value, np.ndarray):
        return value.tolist()
    if isinstance(value, (np.floating, np.integer)):
        return value.item()
    if isinstance(value, dict):
        return {str(k): _to_builtin(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_to_builtin(v) for v in value]
    return value


@dataclass
class FitResult:
    """复合似然拟合结果"""

    theta_hat: Dict[str, float]  # 自然尺度估计
    param_names: List[str]
    transforms: List[str]
    theta_transformed: List[float]  # 变换尺度估计
    wpl_max: float
    copula: str
    marginal: Dict[str, Any]  # MarginalSpec.to_dict()
    corr: Dict[str, Any]  # CorrelationModel.to_dict()
    nu_selected: Optional[int] = None  # 高斯 copula 时为空
    n_pairs: int = 0
    m: int = 2
    wall_time: float = 0.0
    profile: Dict[str, float] = field(default_factory=dict)  # 各 ν 的 wpl 最大值
    nu_first_stage: Optional[float] = None  # 两步法第一步的连续估计
    boundary_flags: List[str] = field(default_factory=list)  # 贴近边界的参数
    godambe_inv: Optional[List[List[float]]] = None  # 自然尺度 G⁻¹
    godambe_inv_transformed: Optional[List[List[float]]] = None
    std_errors: Optional[Dict[str, float]] = None
    hessian: Optional[List[List[float]]] = None  # 变换尺度 H
    plic: Optional[float] = None
    bootstrap_replicates: int = 0
    bootstrap_failures: int = 0

    def to_dict(self) -> dict:
        """转换为可写入 JSON 的字典"""
        return _to_builtin(asdict(self))

    @classmethod
    def from_dict(cls, data: dict) -> 'FitResult':
        """从字典创建实例"""
        return cls(**data)

    def validate(self) -> tuple[bool, str]:
        """标准误必须是 G⁻¹ 对角元的平方根"""
        if len(self.param_names) != len(self.theta_transformed):
            return False, "参数名与估计向量长度不一致"
        if self.godambe_inv is not None and self.std_errors is not None:
            diag = np.sqrt(np.clip(np.diag(np.asarray(self.godambe_inv)), 0.0, None))
            se = np.array([self.std_errors[name] for name in self.param_names])
            if not np.allclose(diag, se, rtol=1e-12, atol=0.0):
                return False, "标准误与 G⁻¹ 对角元不一致"
        return True, ""

    def marginal_spec(self) -> MarginalSpec:
        return MarginalSpec.from_dict(self.marginal)

    def dependence_params(self) -> DependenceParams:
        # 高斯 copula 不使用 ν, 用 2 占位以便模拟
        nu = float(self.nu_selected) if self.nu_selected is not None else 2.0
        return DependenceParams(nu=nu, corr=CorrelationModel.from_dict(self.corr))

    def get_display_info(self) -> str:
        """获取拟合结果摘要"""
        model = get_copula_type_name(self.copula)
        if self.copula == "clayton":
            model += f"(ν={self.nu_selected})"
        parts = [f"{name}={value:.4g}" for name, value in self.theta_hat.items()]
        text = f"{model}: wpl={self.wpl_max:.4f}, " + ", ".join(parts)
        if self.plic is not None:
            text += f", PLIC={self.plic:.4f}"
        return text

    def save(self, path: str) -> None:
        """写入 JSON 文件"""
        Path(path).parent.mkdir(parents=True, exist_ok=True)
        with open(path, 'w', encoding='utf-8') as f:
            json.dump(self.to_dict(), f, ensure_ascii=False, indent=2)
