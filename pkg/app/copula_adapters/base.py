#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
点对 copula 适配器基类
定义复合似然、模拟与作图所需的统一接口
"""

from abc import ABC, abstractmethod
from typing import Optional
import logging

import numpy as np

from ..correlation import CorrelationModel, SpatialConfig
from ..specfun import DEFAULT_CONTROL, SeriesControl

logger = logging.getLogger(__name__)


class PairCopulaAdapter(ABC):
    """点对 copula 适配器抽象基类"""

    # 是否需要 ν 参数
    requires_nu: bool = False

    def __init__(self, nu: Optional[float] = None, ctrl: Optional[SeriesControl] = None):
        """
        初始化适配器

        Args:
            nu: 反射 (非) 对称参数, 高斯 copula 忽略
            ctrl: 级数截断控制
        """
        self.nu = nu
        self.ctrl = ctrl or DEFAULT_CONTROL
        self.copula_type = self.get_copula_type()

    @abstractmethod
    def get_copula_type(self) -> str:
        """获取 copula 类型标识"""
        pass

    @property
    @abstractmethod
    def display_name(self) -> str:
        """显示名称"""
        pass

    @abstractmethod
    def log_pair_density(self, u_i, u_j, rho) -> np.ndarray:
        """
        点对 copula 对数密度

        Args:
            u_i, u_j: (0, 1) 中的值 (可为数组)
            rho: 底层相关, 可与 u 同形状

        Returns:
            对数密度数组
        """
        pass

    @abstractmethod
    def simulate_uniform(self, cfg: SpatialConfig, corr: CorrelationModel, seed: int,
                         size: Optional[int] = None,
                         factor: Optional[np.ndarray] = None) -> np.ndarray:
        """模拟边缘为 Uniform(0, 1) 的随机场"""
        pass

    @abstractmethod
    def uniform_correlation(self, rho) -> float:
        """均匀边缘下的相关 (即 Spearman 相关)"""
        pass

    def pair_density(self, u_i, u_j, rho) -> np.ndarray:
        """点对 copula 密度"""
        return np.exp(self.log_pair_density(u_i, u_j, rho))

    def __repr__(self) -> str:
        return f"{type(self).__name__}(nu={self.nu})"
