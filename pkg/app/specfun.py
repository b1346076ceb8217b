#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
特殊函数模块
高斯超几何函数 2F1、Appell F4、Kampé de Fériet 双重级数、修正 Bessel 函数、
正则化不完全 beta 函数及其分位数

所有级数在对数空间中按项比递推求和, 以 (对数绝对值, 符号) 的形式维护部分和。
输入可以是标量或 numpy 数组, 标量输入返回 float。
"""

import logging
from dataclasses import dataclass, field
from typing import Any, Callable, Dict, Optional, Sequence, Tuple, Union

import numpy as np
from scipy.special import betaln, gammaln, gammasgn, logsumexp

from .errors import ConvergenceDomainError, NumericalOverflowError, SeriesConvergenceError

logger = logging.getLogger(__name__)

ArrayLike = Union[float, Sequence[float], np.ndarray]

DEFAULT_REL_TOL = 1e-12
DEFAULT_MAX_TERMS = 20000

# 连续多少项满足截断条件才停止
_STOP_RUN = 3
# 每次向量化生成的项数
_BLOCK = 32
# Kampé de Fériet 网格的初始边长与上限
_KDF_START = 64
_KDF_MAX_GRID = 4096
_KDF_ROW_CHUNK = 256
# exp 不溢出的对数上限
_LOG_MAX = 709.0


@dataclass(frozen=True)
class SeriesControl:
    """级数截断控制"""

    rel_tol: float = DEFAULT_REL_TOL  # 相对尾项容差
    max_terms: int = DEFAULT_MAX_TERMS  # 每个求和指标的最大项数

    def __post_init__(self):
        valid, msg = self.validate()
        if not valid:
            raise ValueError(msg)

    def validate(self) -> tuple[bool, str]:
        """验证截断参数"""
        if not self.rel_tol > 0:
            return False, f"rel_tol 必须大于0: {self.rel_tol}"
        if int(self.max_terms) < 1:
            return False, f"max_terms 必须至少为1: {self.max_terms}"
        return True, ""

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> 'SeriesControl':
        """从配置字典创建"""
        return cls(
            rel_tol=float(data.get("rel_tol", DEFAULT_REL_TOL)),
            max_terms=int(data.get("max_terms", DEFAULT_MAX_TERMS)),
        )


DEFAULT_CONTROL = SeriesControl()


def _is_nonpositive_integer(values: np.ndarray) -> np.ndarray:
    values = np.asarray(values, dtype=float)
    return (values <= 0) & (values == np.round(values))


@dataclass(frozen=True)
class KdFSpec:
    """
    Kampé de Fériet 函数的参数表

    分子参数 A (联合指标 k+m)、B (指标 k)、C (指标 m),
    分母参数 E (k+m)、G (k)、H (m)。空表按空积 1 处理。
    """

    a_list: Tuple[float, ...] = field(default_factory=tuple)
    b_list: Tuple[float, ...] = field(default_factory=tuple)
    c_list: Tuple[float, ...] = field(default_factory=tuple)
    e_list: Tuple[float, ...] = field(default_factory=tuple)
    g_list: Tuple[float, ...] = field(default_factory=tuple)
    h_list: Tuple[float, ...] = field(default_factory=tuple)

    def __post_init__(self):
        for name in ("a_list", "b_list", "c_list", "e_list", "g_list", "h_list"):
            object.__setattr__(self, name, tuple(float(v) for v in getattr(self, name)))

    def validate(self) -> tuple[bool, str]:
        """分母参数不能是非正整数"""
        for name in ("e_list", "g_list", "h_list"):
            values = getattr(self, name)
            if values and np.any(_is_nonpositive_integer(np.array(values))):
                return False, f"分母参数 {name} 含非正整数: {values}"
        return True, ""

    @property
    def arity(self) -> str:
        """上下标形式的阶数, 例如 '2;2;1/2;1;0'"""
        top = f"{len(self.a_list)};{len(self.b_list)};{len(self.c_list)}"
        bottom = f"{len(self.e_list)};{len(self.g_list)};{len(self.h_list)}"
        return f"{top}/{bottom}"


# ---------------------------------------------------------------------------
# 对数空间工具
# ---------------------------------------------------------------------------

def _log_add(log_a: np.ndarray, sign_a: np.ndarray,
             log_b: np.ndarray, sign_b: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """两个 (对数绝对值, 符号) 数相加"""
    scale = np.maximum(log_a, log_b)
    scale = np.where(np.isfinite(scale), scale, 0.0)
    with np.errstate(divide='ignore', invalid='ignore', over='ignore'):
        total = sign_a * np.exp(log_a - scale) + sign_b * np.exp(log_b - scale)
        return np.log(np.abs(total)) + scale, np.sign(total)


def _log_sum(log_abs: np.ndarray, sign: np.ndarray, axis=None) -> Tuple[np.ndarray, np.ndarray]:
    """带符号项在对数空间求和"""
    scale = np.max(log_abs, axis=axis, keepdims=True)
    scale = np.where(np.isfinite(scale), scale, 0.0)
    with np.errstate(divide='ignore', invalid='ignore'):
        total = np.sum(sign * np.exp(log_abs - scale), axis=axis, keepdims=True)
        log_total = np.log(np.abs(total)) + scale
    if axis is None:
        return float(log_total.ravel()[0]), float(np.sign(total).ravel()[0])
    return np.squeeze(log_total, axis=axis), np.squeeze(np.sign(total), axis=axis)


def _log_signed(values: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    with np.errstate(divide='ignore'):
        return np.log(np.abs(values)), np.sign(values)


def _to_output(values: np.ndarray, scalar: bool):
    if scalar:
        return float(np.asarray(values).reshape(-1)[0])
    return values


def _exp_signed(log_abs: np.ndarray, sign: np.ndarray, function: str, x: Any) -> np.ndarray:
    if np.any(log_abs > _LOG_MAX):
        raise NumericalOverflowError(function, x)
    return sign * np.exp(log_abs)


# ---------------------------------------------------------------------------
# 通用级数驱动
# ---------------------------------------------------------------------------

BlockFunction = Callable[[np.ndarray, int, int], Tuple[np.ndarray, np.ndarray]]


def _sum_series(block_terms: BlockFunction, size: int, ctrl: SeriesControl,
                name: str, arguments: Dict[str, Any]) -> Tuple[np.ndarray, np.ndarray]:
    """
    逐块对一组级数求和, 已收敛的元素不再参与计算

    Args:
        block_terms: block_terms(idx, k0, width) 返回元素 idx 第 k0..k0+width-1 项的
            (对数绝对值, 符号), 形状 (len(idx), width)
        size: 级数个数
        ctrl: 截断控制
        name: 函数名, 用于错误信息
        arguments: 参数摘要, 用于错误信息

    Returns:
        (对数绝对值, 符号) 两个长度为 size 的数组

    Raises:
        SeriesConvergenceError: 超过 max_terms 仍未满足截断条件
    """
    log_s = np.full(size, -np.inf)
    sign_s = np.zeros(size)
    run = np.zeros(size, dtype=np.int64)
    active = np.ones(size, dtype=bool)
    log_tol = np.log(ctrl.rel_tol)
    k0 = 0

    while True:
        idx = np.flatnonzero(active)
        if idx.size == 0:
            break
        if k0 >= ctrl.max_terms:
            raise SeriesConvergenceError(name, arguments, ctrl.max_terms)

        width = min(_BLOCK, ctrl.max_terms - k0)
        log_t, sign_t = block_terms(idx, k0, width)
        if np.any(np.isnan(log_t)):
            raise SeriesConvergenceError(name, arguments, k0 + width)

        scale = np.maximum(log_s[idx], np.max(log_t, axis=1))
        scale = np.where(np.isfinite(scale), scale, 0.0)
        with np.errstate(divide='ignore', invalid='ignore', over='ignore'):
            base = sign_s[idx] * np.exp(log_s[idx] - scale)
            running = base[:, None] + np.cumsum(sign_t * np.exp(log_t - scale[:, None]), axis=1)
            log_running = np.log(np.abs(running)) + scale[:, None]

        small = log_t < log_tol + log_running
        count = run[idx]
        hit = np.zeros(idx.size, dtype=bool)
        for j in range(width):
            count = np.where(small[:, j], count + 1, 0)
            hit |= count >= _STOP_RUN
        run[idx] = count

        log_s[idx] = log_running[:, -1]
        sign_s[idx] = np.sign(running[:, -1])
        active[idx[hit]] = False
        k0 += width

    return log_s, sign_s


class _RatioRecursion:
    """
    超几何型项比递推 t_{k+1} = t_k (a+k)(b+k) x / ((c+k)(k+1))

    保存每个元素当前块首项的 (对数绝对值, 符号)。
    """

    def __init__(self, a: np.ndarray, b: np.ndarray, c: np.ndarray, x: np.ndarray):
        self.a = a
        self.b = b
        self.c = c
        self.log_x, self.sign_x = _log_signed(x)
        self.state_log = np.zeros(a.size)
        self.state_sign = np.ones(a.size)

    def block(self, idx: np.ndarray, k0: int, width: int) -> Tuple[np.ndarray, np.ndarray]:
        kk = k0 + np.arange(width, dtype=float)
        aa = self.a[idx, None] + kk
        bb = self.b[idx, None] + kk
        cc = self.c[idx, None] + kk
        with np.errstate(divide='ignore'):
            log_ratio = (np.log(np.abs(aa)) + np.log(np.abs(bb)) - np.log(np.abs(cc))
                         - np.log(kk + 1.0) + self.log_x[idx, None])
        sign_ratio = np.sign(aa) * np.sign(bb) * np.sign(cc) * self.sign_x[idx, None]

        log_t = np.empty((idx.size, width))
        sign_t = np.empty((idx.size, width))
        log_t[:, 0] = self.state_log[idx]
        sign_t[:, 0] = self.state_sign[idx]
        if width > 1:
            log_t[:, 1:] = self.state_log[idx, None] + np.cumsum(log_ratio[:, :-1], axis=1)
            sign_t[:, 1:] = self.state_sign[idx, None] * np.cumprod(sign_ratio[:, :-1], axis=1)

        self.state_log[idx] = log_t[:, -1] + log_ratio[:, -1]
        self.state_sign[idx] = sign_t[:, -1] * sign_ratio[:, -1]
        return log_t, sign_t


# ---------------------------------------------------------------------------
# 2F1
# ---------------------------------------------------------------------------

def _log_hyp2f1(a: ArrayLike, b: ArrayLike, c: ArrayLike, x: ArrayLike,
                ctrl: SeriesControl, name: str = "gauss_2f1") -> Tuple[np.ndarray, np.ndarray]:
    """2F1 的 (对数绝对值, 符号), 参数按 numpy 规则广播, 不做定义域检查"""
    arrays = np.broadcast_arrays(*(np.asarray(v, dtype=float) for v in (a, b, c, x)))
    shape = arrays[0].shape
    flat = [np.ascontiguousarray(v).reshape(-1) for v in arrays]
    recursion = _RatioRecursion(*flat)
    arguments = {
        "a": _summary(flat[0]), "b": _summary(flat[1]),
        "c": _summary(flat[2]), "x": _summary(flat[3]),
    }
    log_s, sign_s = _sum_series(recursion.block, flat[0].size, ctrl, name, arguments)
    return log_s.reshape(shape), sign_s.reshape(shape)


def _summary(values: np.ndarray) -> Any:
    values = np.asarray(values)
    if values.size == 1:
        return float(values.reshape(-1)[0])
    return f"[{values.min():.6g}, {values.max():.6g}]"


def gauss_2f1(a: ArrayLike, b: ArrayLike, c: ArrayLike, x: ArrayLike,
              ctrl: Optional[SeriesControl] = None):
    """
    高斯超几何函数 2F1(a, b; c; x)

    Args:
        a, b, c: 参数, c 不能是非正整数
        x: 自变量, |x| < 1
        ctrl: 截断控制, 默认 rel_tol=1e-12, max_terms=20000

    Returns:
        函数值, 标量输入返回 float

    Raises:
        ValueError: |x| ≥ 1 或 c 为非正整数
        SeriesConvergenceError: 未在 max_terms 内收敛
    """
    ctrl = ctrl or DEFAULT_CONTROL
    scalar = all(np.ndim(v) == 0 for v in (a, b, c, x))
    x_arr = np.asarray(x, dtype=float)
    if np.any(np.abs(x_arr) >= 1) or np.any(np.isnan(x_arr)):
        raise ValueError(f"gauss_2f1 要求 |x| < 1: x={_summary(x_arr)}")
    if np.any(_is_nonpositive_integer(c)):
        raise ValueError(f"gauss_2f1 的参数 c 不能是非正整数: c={_summary(np.asarray(c))}")

    log_s, sign_s = _log_hyp2f1(a, b, c, x_arr, ctrl)
    return _to_output(_exp_signed(log_s, sign_s, "gauss_2f1", _summary(x_arr)), scalar)


# ---------------------------------------------------------------------------
# Appell F4
# ---------------------------------------------------------------------------

def log_appell_f4(a: float, b: float, c: float, c2: float, w: ArrayLike, z: ArrayLike,
                  ctrl: Optional[SeriesControl] = None) -> Tuple[np.ndarray, np.ndarray]:
    """
    Appell F4 的 (对数绝对值, 符号)

    按 z 的幂展开为单重级数
    Σ_k (a)_k (b)_k z^k / (k! (c2)_k) · 2F1(a+k, b+k; c; w)。

    Raises:
        ConvergenceDomainError: |√w| + |√z| ≥ 1
    """
    ctrl = ctrl or DEFAULT_CONTROL
    for name, value in (("c", c), ("c2", c2)):
        if _is_nonpositive_integer(value):
            raise ValueError(f"appell_f4 的参数 {name} 不能是非正整数: {value}")

    w_arr, z_arr = np.broadcast_arrays(np.asarray(w, dtype=float), np.asarray(z, dtype=float))
    shape = w_arr.shape
    w_flat = np.ascontiguousarray(w_arr).reshape(-1)
    z_flat = np.ascontiguousarray(z_arr).reshape(-1)

    radius = np.sqrt(np.abs(w_flat)) + np.sqrt(np.abs(z_flat))
    if radius.size and (np.any(radius >= 1) or np.any(np.isnan(radius))):
        raise ConvergenceDomainError("appell_f4", float(np.nanmax(radius)) if np.any(~np.isnan(radius)) else float('nan'))

    size = w_flat.size
    outer = _RatioRecursion(np.full(size, float(a)), np.full(size, float(b)),
                            np.full(size, float(c2)), z_flat)

    def block(idx: np.ndarray, k0: int, width: int) -> Tuple[np.ndarray, np.ndarray]:
        log_coef, sign_coef = outer.block(idx, k0, width)
        kk = k0 + np.arange(width, dtype=float)
        log_inner, sign_inner = _log_hyp2f1(
            float(a) + kk[None, :], float(b) + kk[None, :], float(c), w_flat[idx, None],
            ctrl, name="appell_f4/2f1",
        )
        return log_coef + log_inner, sign_coef * sign_inner

    arguments = {"a": a, "b": b, "c": c, "c2": c2, "w": _summary(w_flat), "z": _summary(z_flat)}
    log_s, sign_s = _sum_series(block, size, ctrl, "appell_f4", arguments)
    return log_s.reshape(shape), sign_s.reshape(shape)


def appell_f4(a: float, b: float, c: float, c2: float, w: ArrayLike, z: ArrayLike,
              ctrl: Optional[SeriesControl] = None):
    """
    Appell 第四类超几何函数 F4(a, b; c, c2; w, z)

    Args:
        a, b: 分子参数
        c, c2: 分母参数, 不能是非正整数
        w, z: 自变量, 要求 |√w| + |√z| < 1
        ctrl: 截断控制

    Returns:
        函数值, 标量输入返回 float
    """
    scalar = np.ndim(w) == 0 and np.ndim(z) == 0
    log_s, sign_s = log_appell_f4(a, b, c, c2, w, z, ctrl)
    return _to_output(_exp_signed(log_s, sign_s, "appell_f4", _summary(np.asarray(w))), scalar)


# ---------------------------------------------------------------------------
# Kampé de Fériet
# ---------------------------------------------------------------------------

def _log_pochhammer_table(params: Sequence[float], length: int) -> Tuple[np.ndarray, np.ndarray]:
    """Π_j (p_j)_n 在 n = 0..length-1 上的 (对数绝对值, 符号)"""
    log_abs = np.zeros(length)
    sign = np.ones(length)
    steps = np.arange(length - 1, dtype=float)
    for p in params:
        factors = p + steps
        with np.errstate(divide='ignore'):
            log_f = np.log(np.abs(factors))
        log_abs[1:] += np.cumsum(log_f)
        sign[1:] *= np.cumprod(np.sign(factors))
    return log_abs, sign


def _power_table(x: float, length: int) -> Tuple[np.ndarray, np.ndarray]:
    """x^n / n! 的 (对数绝对值, 符号)"""
    n = np.arange(length, dtype=float)
    if x == 0:
        log_abs = np.where(n == 0, 0.0, -np.inf)
        sign = np.where(n == 0, 1.0, 0.0)
        return log_abs, sign
    log_abs = n * np.log(abs(x)) - gammaln(n + 1.0)
    sign = np.where((x < 0) & (n % 2 == 1), -1.0, 1.0)
    return log_abs, sign


def _kdf_grid(spec: KdFSpec, x: float, y: float, n: int) -> Tuple[float, float, float]:
    """
    在 n×n 网格上求和

    Returns:
        (部分和对数绝对值, 部分和符号, 外半带绝对值和的对数)
    """
    joint_len = 2 * n - 1
    log_a, sign_a = _log_pochhammer_table(spec.a_list, joint_len)
    log_e, sign_e = _log_pochhammer_table(spec.e_list, joint_len)
    log_joint = log_a - log_e
    sign_joint = sign_a * sign_e

    log_b, sign_b = _log_pochhammer_table(spec.b_list, n)
    log_g, sign_g = _log_pochhammer_table(spec.g_list, n)
    log_px, sign_px = _power_table(x, n)
    log_k = log_b - log_g + log_px
    sign_k = sign_b * sign_g * sign_px

    log_c, sign_c = _log_pochhammer_table(spec.c_list, n)
    log_h, sign_h = _log_pochhammer_table(spec.h_list, n)
    log_py, sign_py = _power_table(y, n)
    log_m = log_c - log_h + log_py
    sign_m = sign_c * sign_h * sign_py

    half = n // 2
    m_idx = np.arange(n)
    total_log, total_sign = -np.inf, 0.0
    band_logs = []

    for start in range(0, n, _KDF_ROW_CHUNK):
        k_idx = np.arange(start, min(start + _KDF_ROW_CHUNK, n))
        joint = k_idx[:, None] + m_idx[None, :]
        log_t = log_joint[joint] + log_k[k_idx, None] + log_m[None, :]
        sign_t = sign_joint[joint] * sign_k[k_idx, None] * sign_m[None, :]

        chunk_log, chunk_sign = _log_sum(log_t, sign_t)
        total_log, total_sign = _log_add(np.float64(total_log), np.float64(total_sign),
                                         np.float64(chunk_log), np.float64(chunk_sign))
        total_log, total_sign = float(total_log), float(total_sign)

        band = (k_idx[:, None] >= half) | (m_idx[None, :] >= half)
        band_terms = np.where(band & (sign_t != 0), log_t, -np.inf)
        band_logs.append(logsumexp(band_terms) if np.any(np.isfinite(band_terms)) else -np.inf)

    band_log = logsumexp(band_logs) if np.any(np.isfinite(band_logs)) else -np.inf
    return total_log, total_sign, float(band_log)


def kampe_de_feriet(spec: KdFSpec, x: float, y: float,
                    ctrl: Optional[SeriesControl] = None) -> float:
    """
    Kampé de Fériet 双重级数

    F[A;B;C / E;G;H](x, y) = Σ_k Σ_m Π(a)_{k+m} Π(b)_k Π(c)_m x^k y^m
                             / (k! m! Π(e)_{k+m} Π(g)_k Π(h)_m)

    从 64×64 网格开始, 外半带 (k 或 m 超过一半) 的绝对值和不超过
    rel_tol × |部分和| 时视为收敛, 否则网格边长加倍。

    Args:
        spec: 参数表
        x, y: 自变量 (需在所给阶数的收敛域内)
        ctrl: 截断控制

    Returns:
        函数值

    Raises:
        ValueError: 分母参数为非正整数
        SeriesConvergenceError: 网格达到上限仍未收敛
    """
    ctrl = ctrl or DEFAULT_CONTROL
    valid, msg = spec.validate()
    if not valid:
        raise ValueError(msg)
    x = float(x)
    y = float(y)
    if x == 0 and y == 0:
        return 1.0

    cap = max(2, min(int(ctrl.max_terms), _KDF_MAX_GRID))
    n = min(_KDF_START, cap)
    log_tol = np.log(ctrl.rel_tol)
    while True:
        total_log, total_sign, band_log = _kdf_grid(spec, x, y, n)
        if np.isnan(total_log):
            break
        if band_log <= log_tol + total_log:
            if total_log > _LOG_MAX:
                raise NumericalOverflowError("kampe_de_feriet", x)
            return float(total_sign * np.exp(total_log))
        if n >= cap:
            break
        n = min(2 * n, cap)

    raise SeriesConvergenceError(
        "kampe_de_feriet", {"arity": spec.arity, "x": x, "y": y}, n
    )


# ---------------------------------------------------------------------------
# 修正 Bessel 函数
# ---------------------------------------------------------------------------

def log_bessel_i(order: float, x: ArrayLike, ctrl: Optional[SeriesControl] = None):
    """
    第一类修正 Bessel 函数 I_order(x) 的对数 (x > 0 且函数值为正时)

    幂级数 Σ_k (x/2)^{2k+order} / (k! Γ(k+order+1)) 在对数空间中求和。
    """
    ctrl = ctrl or DEFAULT_CONTROL
    order = float(order)
    if order < 0 and order == round(order):
        order = -order
    x_arr = np.asarray(x, dtype=float)
    if np.any(x_arr < 0) or np.any(np.isnan(x_arr)):
        raise ValueError(f"bessel_i 要求 x ≥ 0: x={_summary(x_arr)}")

    shape = x_arr.shape
    flat = x_arr.reshape(-1)
    result = np.empty(flat.size)
    zero = flat == 0
    if order == 0:
        result[zero] = 0.0
    elif order > 0:
        result[zero] = -np.inf
    else:
        result[zero] = np.inf

    positive = np.flatnonzero(~zero)
    if positive.size:
        log_half = np.log(flat[positive] / 2.0)

        def block(idx: np.ndarray, k0: int, width: int) -> Tuple[np.ndarray, np.ndarray]:
            k = k0 + np.arange(width, dtype=float)
            log_t = ((2.0 * k[None, :] + order) * log_half[idx, None]
                     - gammaln(k + 1.0)[None, :] - gammaln(k + order + 1.0)[None, :])
            sign_t = np.broadcast_to(gammasgn(k + order + 1.0)[None, :], log_t.shape)
            return log_t, sign_t

        log_s, sign_s = _sum_series(block, positive.size, ctrl, "bessel_i",
                                    {"order": order, "x": _summary(flat[positive])})
        if np.any(sign_s <= 0):
            raise ValueError(f"bessel_i 的对数形式要求函数值为正: order={order}")
        result[positive] = log_s
    return _to_output(result.reshape(shape), np.ndim(x) == 0)


def bessel_i(order: float, x: ArrayLike, ctrl: Optional[SeriesControl] = None):
    """
    第一类修正 Bessel 函数 I_order(x)

    Args:
        order: 阶数
        x: 非负自变量

    Returns:
        函数值

    Raises:
        ValueError: x < 0
        NumericalOverflowError: 结果溢出
    """
    log_values = np.asarray(log_bessel_i(order, x, ctrl), dtype=float)
    if np.any(log_values > _LOG_MAX):
        raise NumericalOverflowError("bessel_i", _summary(np.asarray(x, dtype=float)))
    return _to_output(np.exp(log_values), np.ndim(x) == 0)


# ---------------------------------------------------------------------------
# 不完全 beta 函数与分位数
# ---------------------------------------------------------------------------

def _betacf(a: np.ndarray, b: np.ndarray, x: np.ndarray, tol: float = 1e-15) -> np.ndarray:
    """不完全 beta 函数连分式 (修正 Lentz 法), 在 x < (a+1)/(a+b+2) 时收敛快"""
    tiny = 1e-300
    qab = a + b
    qap = a + 1.0
    qam = a - 1.0
    c = np.ones_like(x)
    d = 1.0 - qab * x / qap
    d = np.where(np.abs(d) < tiny, tiny, d)
    d = 1.0 / d
    h = d.copy()
    done = np.zeros(x.shape, dtype=bool)
    max_iter = int(200 + 10 * np.sqrt(np.max(np.maximum(a, b)))) if x.size else 0

    for m in range(1, max_iter + 1):
        m2 = 2.0 * m
        aa = m * (b - m) * x / ((qam + m2) * (a + m2))
        d = 1.0 + aa * d
        d = np.where(np.abs(d) < tiny, tiny, d)
        c = 1.0 + aa / c
        c = np.where(np.abs(c) < tiny, tiny, c)
        d = 1.0 / d
        h = np.where(done, h, h * d * c)

        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2))
        d = 1.0 + aa * d
        d = np.where(np.abs(d) < tiny, tiny, d)
        c = 1.0 + aa / c
        c = np.where(np.abs(c) < tiny, tiny, c)
        d = 1.0 / d
        delta = d * c
        h = np.where(done, h, h * delta)
        done |= np.abs(delta - 1.0) < tol
        if np.all(done):
            return h

    raise SeriesConvergenceError(
        "reg_inc_beta/continued_fraction", {"a": _summary(a), "b": _summary(b), "x": _summary(x)}, max_iter
    )


def reg_inc_beta(y: ArrayLike, xi: ArrayLike, delta: ArrayLike,
                 ctrl: Optional[SeriesControl] = None):
    """
    正则化不完全 beta 函数 I(y; ξ, δ) = ∫_0^y t^{ξ-1}(1-t)^{δ-1} dt / B(ξ, δ)

    y ≤ (ξ+1)/(ξ+δ+2) 时使用 2F1 形式 y^ξ/ξ · 2F1(ξ, 1-δ; ξ+1; y) / B(ξ, δ)
    (经 Euler 变换为全正项级数), 否则利用对称性 1 - I(1-y; δ, ξ) 与连分式。

    Args:
        y: [0, 1] 中的自变量
        xi, delta: 正的形状参数

    Returns:
        [0, 1] 中的函数值

    Raises:
        ValueError: 参数超出定义域
    """
    ctrl = ctrl or DEFAULT_CONTROL
    scalar = all(np.ndim(v) == 0 for v in (y, xi, delta))
    y_arr, a_arr, b_arr = np.broadcast_arrays(*(np.asarray(v, dtype=float) for v in (y, xi, delta)))
    if np.any((y_arr < 0) | (y_arr > 1)) or np.any(np.isnan(y_arr)):
        raise ValueError(f"reg_inc_beta 要求 0 ≤ y ≤ 1: y={_summary(y_arr)}")
    if np.any(a_arr <= 0) or np.any(b_arr <= 0):
        raise ValueError(f"reg_inc_beta 要求形状参数为正: xi={_summary(a_arr)}, delta={_summary(b_arr)}")

    shape = y_arr.shape
    y_f = y_arr.reshape(-1)
    a_f = a_arr.reshape(-1)
    b_f = b_arr.reshape(-1)
    result = np.empty(y_f.size)
    result[y_f == 0] = 0.0
    result[y_f == 1] = 1.0
    interior = (y_f > 0) & (y_f < 1)
    direct = interior & (y_f <= (a_f + 1.0) / (a_f + b_f + 2.0))
    flipped = interior & ~direct

    if np.any(direct):
        yy, aa, bb = y_f[direct], a_f[direct], b_f[direct]
        log_f, _ = _log_hyp2f1(1.0, aa + bb, aa + 1.0, yy, ctrl, name="reg_inc_beta")
        log_front = aa * np.log(yy) + bb * np.log1p(-yy) - np.log(aa) - betaln(aa, bb)
        result[direct] = np.exp(log_front + log_f)

    if np.any(flipped):
        xx = 1.0 - y_f[flipped]
        aa, bb = b_f[flipped], a_f[flipped]
        log_front = aa * np.log(xx) + bb * np.log1p(-xx) - np.log(aa) - betaln(aa, bb)
        result[flipped] = 1.0 - np.exp(log_front) * _betacf(aa, bb, xx)

    result = np.clip(result, 0.0, 1.0)
    return _to_output(result.reshape(shape), scalar)


def beta_log_density(y: ArrayLike, xi: ArrayLike, delta: ArrayLike) -> np.ndarray:
    """Beta(ξ, δ) 对数密度"""
    y = np.asarray(y, dtype=float)
    with np.errstate(divide='ignore'):
        return (xi - 1.0) * np.log(y) + (delta - 1.0) * np.log1p(-y) - betaln(xi, delta)


def beta_quantile(p: ArrayLike, xi: ArrayLike, delta: ArrayLike,
                  ctrl: Optional[SeriesControl] = None, tol: float = 1e-12):
    """
    reg_inc_beta 的单调反函数

    先二分法把区间缩小到 tol 以下, 再做两步有保护的 Newton 修正
    (新点落在当前区间外时保留二分结果)。

    Args:
        p: [0, 1] 中的概率
        xi, delta: 正的形状参数
        tol: 绝对容差

    Returns:
        分位数, p=0 返回 0, p=1 返回 1
    """
    ctrl = ctrl or DEFAULT_CONTROL
    scalar = all(np.ndim(v) == 0 for v in (p, xi, delta))
    p_arr, a_arr, b_arr = np.broadcast_arrays(*(np.asarray(v, dtype=float) for v in (p, xi, delta)))
    if np.any((p_arr < 0) | (p_arr > 1)) or np.any(np.isnan(p_arr)):
        raise ValueError(f"beta_quantile 要求 0 ≤ p ≤ 1: p={_summary(p_arr)}")
    if np.any(a_arr <= 0) or np.any(b_arr <= 0):
        raise ValueError(f"beta_quantile 要求形状参数为正: xi={_summary(a_arr)}, delta={_summary(b_arr)}")

    shape = p_arr.shape
    p_f = p_arr.reshape(-1).copy()
    a_f = a_arr.reshape(-1)
    b_f = b_arr.reshape(-1)
    result = np.where(p_f >= 1.0, 1.0, 0.0)
    inner = np.flatnonzero((p_f > 0) & (p_f < 1))
    if inner.size == 0:
        return _to_output(result.reshape(shape), scalar)

    pp, aa, bb = p_f[inner], a_f[inner], b_f[inner]
    lo = np.zeros(inner.size)
    hi = np.ones(inner.size)
    iterations = int(np.ceil(np.log2(1.0 / tol))) + 5
    for _ in range(iterations):
        mid = 0.5 * (lo + hi)
        below = reg_inc_beta(mid, aa, bb, ctrl) < pp
        lo = np.where(below, mid, lo)
        hi = np.where(below, hi, mid)

    q = 0.5 * (lo + hi)
    for _ in range(2):
        value = reg_inc_beta(q, aa, bb, ctrl)
        dens = np.exp(beta_log_density(q, aa, bb))
        with np.errstate(divide='ignore', invalid='ignore'):
            step = np.where(dens > 0, (value - pp) / dens, 0.0)
        candidate = q - step
        inside = np.isfinite(candidate) & (candidate >= lo) & (candidate <= hi)
        q = np.where(inside, candidate, q)

    result[inner] = q
    return _to_output(result.reshape(shape), scalar)
