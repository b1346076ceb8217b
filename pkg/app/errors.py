#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
异常定义模块
所有数值计算、拟合与数据处理相关的异常
"""

from typing import Any, Dict, List, Optional


class SpatialCopulaError(Exception):
    """本项目所有异常的基类"""
    pass


class SeriesConvergenceError(SpatialCopulaError):
    """级数在 max_terms 内未收敛"""

    def __init__(self, function: str, arguments: Dict[str, Any], terms: int):
        self.function = function
        self.arguments = arguments
        self.terms = terms
        args_text = ", ".join(f"{k}={v}" for k, v in arguments.items())
        super().__init__(f"{function} 在 {terms} 项内未收敛 ({args_text})")


class ConvergenceDomainError(ValueError, SpatialCopulaError):
    """参数超出级数收敛域"""

    def __init__(self, function: str, radius: float):
        self.function = function
        self.radius = radius
        super().__init__(f"{function} 参数超出收敛域: |√w|+|√z| = {radius:.6g} ≥ 1")


class NumericalOverflowError(OverflowError, SpatialCopulaError):
    """结果超出浮点表示范围"""

    def __init__(self, function: str, x: float):
        self.function = function
        self.x = x
        super().__init__(f"{function} 结果溢出: x={x}")


class QuadratureError(SpatialCopulaError):
    """数值积分节点加倍检查失败"""

    def __init__(self, quantity: str, coarse: float, fine: float):
        self.quantity = quantity
        self.coarse = coarse
        self.fine = fine
        super().__init__(
            f"{quantity} 数值积分未收敛: 节点加倍后结果从 {coarse:.12g} 变为 {fine:.12g}"
        )


class FactorizationError(SpatialCopulaError):
    """Cholesky 分解失败"""

    def __init__(self, leading_minor: int, jitter: float):
        self.leading_minor = leading_minor
        self.jitter = jitter
        super().__init__(
            f"相关矩阵非正定: 第 {leading_minor} 阶顺序主子式失败 (最大抖动 {jitter:g})"
        )


class WplEvaluationError(SpatialCopulaError):
    """复合似然中出现非有限的点对贡献"""

    def __init__(self, pair: tuple, params: Dict[str, Any]):
        self.pair = pair
        self.params = params
        super().__init__(f"点对 {pair} 的对数密度非有限, 参数: {params}")


class FitError(SpatialCopulaError):
    """优化器在重启后仍未收敛"""

    def __init__(self, message: str, trace: Optional[List[Dict[str, Any]]] = None):
        self.trace = trace or []
        super().__init__(message)


class BootstrapError(SpatialCopulaError):
    """参数自助法失败次数过多"""

    def __init__(self, failed: int, total: int, failure_log: List[str]):
        self.failed = failed
        self.total = total
        self.failure_log = failure_log
        super().__init__(f"自助法重复拟合失败 {failed}/{total} 次, 超过 10% 上限")


class PlicError(SpatialCopulaError):
    """PLIC 计算中矩阵奇异"""
    pass


class DatasetError(SpatialCopulaError):
    """数据文件格式错误"""
    pass


class UndefinedIndexError(ValueError, SpatialCopulaError):
    """NIR + RED = 0 时 NDVI 无定义"""
    pass
