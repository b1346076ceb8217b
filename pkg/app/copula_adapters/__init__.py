#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
点对 copula 适配器模块
复合似然与模拟对 Clayton 随机场和高斯 copula 使用统一接口
"""

from typing import Optional

from .base import PairCopulaAdapter
from .clayton_adapter import ClaytonAdapter
from .gaussian_adapter import GaussianAdapter
from ..specfun import SeriesControl

__all__ = [
    'PairCopulaAdapter',
    'ClaytonAdapter',
    'GaussianAdapter'
]


# copula 类型常量
COPULA_TYPE_CLAYTON = 'clayton'
COPULA_TYPE_GAUSSIAN = 'gaussian'

# copula 类型显示名称
COPULA_TYPE_NAMES = {
    COPULA_TYPE_CLAYTON: 'Clayton 随机场',
    COPULA_TYPE_GAUSSIAN: '高斯 copula'
}

# 支持的 copula 类型列表
SUPPORTED_COPULA_TYPES = [COPULA_TYPE_CLAYTON, COPULA_TYPE_GAUSSIAN]


def get_adapter(copula_type: str, nu: Optional[float] = None,
                ctrl: Optional[SeriesControl] = None) -> PairCopulaAdapter:
    """
    根据 copula 类型获取对应的适配器

    Args:
        copula_type: copula 类型 (clayton, gaussian)
        nu: Clayton 随机场的 ν
        ctrl: 级数截断控制

    Returns:
        copula 适配器实例

    Raises:
        ValueError: 不支持的 copula 类型
    """
    adapters = {
        COPULA_TYPE_CLAYTON: ClaytonAdapter,
        COPULA_TYPE_GAUSSIAN: GaussianAdapter
    }

    if not is_supported_copula_type(copula_type):
        raise ValueError(f"不支持的 copula 类型: {copula_type}")

    return adapters[copula_type.lower()](nu=nu, ctrl=ctrl)


def get_copula_type_name(copula_type: str) -> str:
    """获取 copula 类型的显示名称"""
    return COPULA_TYPE_NAMES.get(copula_type.lower(), copula_type)


def is_supported_copula_type(copula_type: str) -> bool:
    """检查 copula 类型是否支持"""
    return copula_type.lower() in SUPPORTED_COPULA_TYPES
