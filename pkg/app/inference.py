#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
推断模块
基于最近邻的加权成对复合似然估计、参数自助法 Godambe 信息、PLIC 模型选择
"""

import logging
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace
from typing import Any, Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np
from scipy.optimize import minimize
from scipy.spatial.distance import cdist
from scipy.special import expit, logit

from .copula_adapters import get_adapter
from .correlation import CorrelationModel, SpatialConfig, chol_factor, corr_from_distances, corr_matrix
from .errors import (BootstrapError, FitError, PlicError, SpatialCopulaError,
                     WplEvaluationError)
from .fields import (U_CLAMP, DependenceParams, FieldRealization, MarginalSpec,
                     derive_seed, fit_marginal_independence, simulate_field)
from .fit_config import (TRANSFORM_IDENTITY, TRANSFORM_LOG, TRANSFORM_LOGIT, FitConfig,
                         FitResult, transform_for)
from .specfun import SeriesControl

logger = logging.getLogger(__name__)

# 不可行参数的目标函数值
PENALTY = 1e10
# 变换尺度上超过该值视为贴近边界
BOUNDARY_LIMIT = 12.0
# 自助法允许的失败比例
MAX_FAILURE_RATE = 0.1
MIN_BOOTSTRAP = 30

_NN_ROW_CHUNK = 512

ProgressCallback = Callable[[int, int, str], None]


@dataclass(frozen=True)
class PairSet:
    """最近邻点对集合, (i, j) 表示 s_i 是 s_j 的 m 个最近邻之一"""

    pairs: np.ndarray  # (P, 2) 整数数组
    m: int

    def __len__(self) -> int:
        return int(self.pairs.shape[0])

    @property
    def i(self) -> np.ndarray:
        return self.pairs[:, 0]

    @property
    def j(self) -> np.ndarray:
        return self.pairs[:, 1]

    def as_set(self) -> set:
        return {(int(a), int(b)) for a, b in self.pairs}


def nn_pairs(cfg: SpatialConfig, m: int) -> PairSet:
    """
    非对称最近邻规则下的点对

    每个站点 s_j 产生 m 对 (i, j), s_i 取 s_j 的 m 个欧氏最近邻;
    距离相同时按站点编号升序。

    Args:
        cfg: 站点配置 (站点互不相同)
        m: 近邻阶数, 1 ≤ m < n

    Returns:
        PairSet, 共 n·m 对

    Raises:
        ValueError: m 越界或存在重复坐标
    """
    n = cfg.n
    if int(m) != m or m < 1 or m >= n:
        raise ValueError(f"近邻阶数必须满足 1 ≤ m < n: m={m}, n={n}")
    valid, msg = cfg.validate()
    if not valid:
        raise ValueError(msg)
    m = int(m)

    blocks = []
    for start in range(0, n, _NN_ROW_CHUNK):
        stop = min(start + _NN_ROW_CHUNK, n)
        dist = cdist(cfg.coords[start:stop], cfg.coords)
        rows = np.arange(stop - start)
        dist[rows, start + rows] = np.inf
        nearest = np.argsort(dist, axis=1, kind='stable')[:, :m]
        sites = np.repeat(np.arange(start, stop), m)
        blocks.append(np.column_stack([nearest.reshape(-1), sites]))
    pairs = np.vstack(blocks).astype(int)
    logger.debug(f"最近邻点对: n={n}, m={m}, 共 {len(pairs)} 对")
    return PairSet(pairs=pairs, m=m)


# ---------------------------------------------------------------------------
# 复合似然
# ---------------------------------------------------------------------------

def _pair_rho(cfg: SpatialConfig, pairs: PairSet, corr: CorrelationModel,
              ctrl: Optional[SeriesControl], dist: Optional[np.ndarray] = None) -> np.ndarray:
    if dist is None:
        dist = cfg.pair_distances(pairs.i, pairs.j)
    # 站点互不相同, 点对距离均为正
    return corr_from_distances(dist, corr, ctrl) * (1.0 - corr.tau2)


def _pair_contributions(values: np.ndarray, cfg: SpatialConfig, marginal: MarginalSpec,
                        nu: Optional[float], rho: np.ndarray, pairs: PairSet, copula: str,
                        ctrl: Optional[SeriesControl]) -> np.ndarray:
    covariates = cfg.covariates
    log_f = np.broadcast_to(marginal.logpdf(values, covariates), values.shape)
    u = np.clip(np.broadcast_to(marginal.cdf(values, covariates), values.shape), U_CLAMP, 1.0 - U_CLAMP)
    i, j = pairs.i, pairs.j
    contrib = log_f[i] + log_f[j]
    dependent = rho != 0.0
    if np.any(dependent):
        adapter = get_adapter(copula, nu=nu, ctrl=ctrl)
        contrib = contrib.copy()
        contrib[dependent] += adapter.log_pair_density(u[i][dependent], u[j][dependent], rho[dependent])
    return contrib


def wpl(data: FieldRealization, cfg: SpatialConfig, params: DependenceParams, pairs: PairSet,
        marginal: Optional[MarginalSpec] = None, copula: Optional[str] = None,
        ctrl: Optional[SeriesControl] = None) -> float:
    """
    加权成对复合对数似然 Σ_(i,j) ln f(s_i, s_j)

    ρ(h_ij) = 0 的点对 (紧支撑之外) 直接取两个边缘对数密度之和。

    Args:
        data: 观测场, 默认使用其 marginal 与 copula
        cfg: 站点配置
        params: 依赖参数
        pairs: 点对集合
        marginal: 覆盖 data.marginal
        copula: 覆盖 data.copula

    Returns:
        复合对数似然值

    Raises:
        WplEvaluationError: 某个点对的贡献非有限
    """
    if len(pairs) == 0:
        raise ValueError("点对集合不能为空")
    marginal = marginal or data.marginal
    copula = copula or data.copula
    values = np.asarray(data.values, dtype=float)
    if values.shape != (cfg.n,):
        raise ValueError(f"观测值长度 {values.shape} 与站点数 {cfg.n} 不一致")
    rho = _pair_rho(cfg, pairs, params.corr, ctrl)
    contrib = _pair_contributions(values, cfg, marginal, params.nu, rho, pairs, copula, ctrl)
    bad = np.flatnonzero(~np.isfinite(contrib))
    if bad.size:
        pair = (int(pairs.i[bad[0]]), int(pairs.j[bad[0]]))
        raise WplEvaluationError(pair, {"nu": params.nu, "corr": params.corr.to_dict(),
                                        "marginal": marginal.to_dict()})
    return float(np.sum(contrib))


# ---------------------------------------------------------------------------
# 参数布局与目标函数
# ---------------------------------------------------------------------------

def _forward(kind: str, value: float) -> float:
    if kind == TRANSFORM_LOG:
        return float(np.log(value))
    if kind == TRANSFORM_LOGIT:
        return float(logit(value))
    return float(value)


def _backward(kind: str, value: float) -> float:
    if kind == TRANSFORM_LOG:
        return float(np.exp(value))
    if kind == TRANSFORM_LOGIT:
        return float(expit(value))
    return float(value)


class ParameterLayout:
    """优化向量与模型对象之间的映射"""

    def __init__(self, marginal: MarginalSpec, corr: CorrelationModel, copula: str,
                 nu: Optional[float], estimate_nugget: bool = False, estimate_nu: bool = False):
        self.marginal = marginal
        self.corr = corr
        self.copula = copula
        self.nu = nu
        self.estimate_nugget = estimate_nugget
        self.estimate_nu = estimate_nu
        self.names = list(marginal.param_names()) + ["b"]
        if estimate_nugget:
            self.names.append("tau2")
        if estimate_nu:
            self.names.append("nu")
        self.transforms = [transform_for(name) for name in self.names]

    @property
    def size(self) -> int:
        return len(self.names)

    def natural(self, marginal: MarginalSpec, corr: CorrelationModel,
                nu: Optional[float]) -> Dict[str, float]:
        values = dict(zip(marginal.param_names(), marginal.param_vector().tolist()))
        values["b"] = corr.b
        if self.estimate_nugget:
            values["tau2"] = corr.tau2
        if self.estimate_nu:
            values["nu"] = nu
        return values

    def to_vector(self, natural: Dict[str, float]) -> np.ndarray:
        return np.array([_forward(kind, natural[name]) for name, kind in zip(self.names, self.transforms)])

    def to_natural(self, vec: Sequence[float]) -> Dict[str, float]:
        return {name: _backward(kind, v) for name, kind, v in zip(self.names, self.transforms, vec)}

    def build(self, vec: Sequence[float]) -> Tuple[MarginalSpec, CorrelationModel, Optional[float]]:
        """
        由变换尺度向量构造模型

        Raises:
            ValueError: 参数超出定义域
        """
        natural = self.to_natural(vec)
        k = len(self.marginal.param_names())
        marginal = self.marginal.with_vector([natural[name] for name in self.names[:k]])
        changes = {"b": natural["b"]}
        if self.estimate_nugget:
            changes["tau2"] = natural["tau2"]
        corr = self.corr.with_params(**changes)
        nu = natural["nu"] if self.estimate_nu else self.nu
        return marginal, corr, nu

    def boundary_flags(self, vec: Sequence[float]) -> List[str]:
        return [name for name, kind, v in zip(self.names, self.transforms, vec)
                if kind != TRANSFORM_IDENTITY and abs(v) > BOUNDARY_LIMIT]


class WplObjective:
    """负复合似然, 不可行参数返回 PENALTY"""

    def __init__(self, values: np.ndarray, cfg: SpatialConfig, pairs: PairSet,
                 layout: ParameterLayout, max_pair_rho2: float = 0.95,
                 ctrl: Optional[SeriesControl] = None):
        self.values = np.asarray(values, dtype=float)
        self.cfg = cfg
        self.pairs = pairs
        self.layout = layout
        self.max_pair_rho2 = max_pair_rho2
        self.ctrl = ctrl
        self.dist = cfg.pair_distances(pairs.i, pairs.j)
        self.evaluations = 0

    def wpl(self, vec: Sequence[float]) -> float:
        """复合似然值 (异常向上抛出)"""
        marginal, corr, nu = self.layout.build(vec)
        rho = _pair_rho(self.cfg, self.pairs, corr, self.ctrl, self.dist)
        contrib = _pair_contributions(self.values, self.cfg, marginal, nu, rho, self.pairs,
                                      self.layout.copula, self.ctrl)
        bad = np.flatnonzero(~np.isfinite(contrib))
        if bad.size:
            pair = (int(self.pairs.i[bad[0]]), int(self.pairs.j[bad[0]]))
            raise WplEvaluationError(pair, self.layout.to_natural(vec))
        return float(np.sum(contrib))

    def __call__(self, vec: Sequence[float]) -> float:
        self.evaluations += 1
        vec = np.asarray(vec, dtype=float)
        if not np.all(np.isfinite(vec)):
            return PENALTY
        try:
            marginal, corr, nu = self.layout.build(vec)
            valid, _ = marginal.validate(self.cfg)
            if not valid or (nu is not None and not nu > 0):
                return PENALTY
            rho = _pair_rho(self.cfg, self.pairs, corr, self.ctrl, self.dist)
            if np.any(rho * rho > self.max_pair_rho2):
                return PENALTY
            return -self.wpl(vec)
        except (SpatialCopulaError, ValueError, FloatingPointError, OverflowError):
            return PENALTY


def _initial_simplex(x0: np.ndarray, step: float) -> np.ndarray:
    simplex = np.tile(x0, (len(x0) + 1, 1))
    for k in range(len(x0)):
        simplex[k + 1, k] += step
    return simplex


def optimize_nelder_mead(objective: Callable[[np.ndarray], float], x0: Sequence[float],
                         xatol: float = 1e-6, fatol: float = 1e-6, maxiter: int = 4000,
                         initial_step: float = 0.25, restarts: int = 1,
                         label: str = "") -> Tuple[np.ndarray, float, List[Dict[str, Any]]]:
    """
    Nelder-Mead 最小化, 收敛后从当前最优点按初始步长重启

    Returns:
        (最优点, 最优值, 每轮优化记录)

    Raises:
        FitError: 重启后仍未收敛或停在不可行区域
    """
    x = np.asarray(x0, dtype=float)
    trace: List[Dict[str, Any]] = []
    result = None
    for attempt in range(restarts + 1):
        result = minimize(objective, x, method='Nelder-Mead',
                          options={'xatol': xatol, 'fatol': fatol, 'maxiter': maxiter,
                                   'initial_simplex': _initial_simplex(x, initial_step)})
        trace.append({"attempt": attempt, "x": result.x.tolist(), "fun": float(result.fun),
                      "nit": int(result.nit), "nfev": int(result.nfev),
                      "success": bool(result.success), "message": str(result.message)})
        if attempt > 0:
            logger.debug(f"{label} 第 {attempt} 次重启: fun={result.fun:.10g}")
        x = result.x
    if not result.success or not result.fun < PENALTY:
        raise FitError(f"{label} 优化未收敛: {result.message}", trace)
    return result.x, float(result.fun), trace


# ---------------------------------------------------------------------------
# 拟合
# ---------------------------------------------------------------------------

def _start_values(values: np.ndarray, cfg: SpatialConfig, fit_cfg: FitConfig) -> Tuple[MarginalSpec, float, float]:
    coeffs: Tuple[float, ...] = ()
    if fit_cfg.marginal == "beta_regression":
        if cfg.covariates is None:
            raise ValueError("beta 回归需要站点协变量")
        coeffs = (0.0,) * cfg.covariates.shape[1]
    marginal0 = fit_marginal_independence(values, MarginalSpec(fit_cfg.marginal, beta_coeffs=coeffs), cfg)
    start = fit_cfg.start
    if start:
        names = marginal0.param_names()
        vector = [start.get(name, value) for name, value in zip(names, marginal0.param_vector())]
        marginal0 = marginal0.with_vector(vector)
    b0 = float(start.get("b", 0.1 * cfg.bounding_diagonal()))
    tau2_0 = float(start.get("tau2", 0.1 if fit_cfg.estimate_nugget else fit_cfg.nugget))
    return marginal0, b0, tau2_0


def _fit_once(values: np.ndarray, cfg: SpatialConfig, pairs: PairSet, fit_cfg: FitConfig,
              layout: ParameterLayout, natural0: Dict[str, float], label: str,
              ctrl: Optional[SeriesControl]) -> Tuple[np.ndarray, float, WplObjective]:
    objective = WplObjective(values, cfg, pairs, layout, fit_cfg.max_pair_rho2, ctrl)
    x0 = layout.to_vector(natural0)
    if objective(x0) >= PENALTY:
        raise FitError(f"{label} 初值不可行: {natural0}")
    x_hat, fun, _ = optimize_nelder_mead(objective, x0, fit_cfg.xatol, fit_cfg.fatol,
                                         fit_cfg.maxiter, fit_cfg.initial_step,
                                         fit_cfg.restarts, label)
    logger.info(f"{label}: wpl={-fun:.6f}, 目标函数调用 {objective.evaluations} 次")
    return x_hat, -fun, objective


def fit(data: FieldRealization, cfg: SpatialConfig, fit_cfg: FitConfig,
        ctrl: Optional[SeriesControl] = None,
        progress_callback: Optional[ProgressCallback] = None) -> FitResult:
    """
    最大化复合似然

    clayton: 对 nu_grid 中每个 ν 分别优化, 选 wpl 最大者 (或两步法: 连续 ν 估计后取整再拟合);
    gaussian: 单次优化。

    Args:
        data: 观测场 (边缘信息取自 fit_cfg)
        cfg: 站点配置
        fit_cfg: 拟合配置
        progress_callback: 进度回调 (当前, 总数, 信息)

    Returns:
        FitResult (不含 Godambe 信息)

    Raises:
        FitError: 优化失败
    """
    valid, msg = fit_cfg.validate()
    if not valid:
        raise ValueError(msg)
    started = time.perf_counter()
    values = np.asarray(data.values, dtype=float)
    pairs = nn_pairs(cfg, fit_cfg.neighbors)
    marginal0, b0, tau2_0 = _start_values(values, cfg, fit_cfg)
    corr0 = fit_cfg.correlation_model(cfg.dim, b=b0, tau2=tau2_0)

    candidates: List[Tuple[Optional[int], ParameterLayout, np.ndarray, float, WplObjective]] = []
    profile: Dict[str, float] = {}
    nu_first_stage = None

    if fit_cfg.copula == "gaussian":
        layout = ParameterLayout(marginal0, corr0, "gaussian", None, fit_cfg.estimate_nugget)
        x_hat, value, objective = _fit_once(values, cfg, pairs, fit_cfg, layout,
                                            layout.natural(marginal0, corr0, None), "Gaussian", ctrl)
        candidates.append((None, layout, x_hat, value, objective))
    else:
        nu_list = [int(round(float(nu))) for nu in fit_cfg.nu_grid]
        if fit_cfg.nu_strategy == "two_step":
            nu0 = float(fit_cfg.start.get("nu", float(np.median(nu_list))))
            layout = ParameterLayout(marginal0, corr0, "clayton", nu0, fit_cfg.estimate_nugget,
                                     estimate_nu=True)
            x_hat, _, _ = _fit_once(values, cfg, pairs, fit_cfg, layout,
                                    layout.natural(marginal0, corr0, nu0), "两步法第一步", ctrl)
            nu_first_stage = layout.to_natural(x_hat)["nu"]
            nu_list = [max(1, int(round(nu_first_stage)))]
            logger.info(f"两步法第一步 ν={nu_first_stage:.4f}, 取整为 {nu_list[0]}")

        for index, nu in enumerate(nu_list, 1):
            if progress_callback:
                progress_callback(index, len(nu_list), f"ν={nu}")
            layout = ParameterLayout(marginal0, corr0, "clayton", float(nu), fit_cfg.estimate_nugget)
            try:
                x_hat, value, objective = _fit_once(values, cfg, pairs, fit_cfg, layout,
                                                    layout.natural(marginal0, corr0, float(nu)),
                                                    f"Clayton ν={nu}", ctrl)
            except FitError as e:
                logger.warning(f"ν={nu} 拟合失败: {e}")
                if len(nu_list) == 1:
                    raise
                continue
            profile[str(nu)] = value
            candidates.append((nu, layout, x_hat, value, objective))
        if not candidates:
            raise FitError("nu_grid 中所有 ν 的拟合均失败")

    nu_best, layout, x_hat, value, _ = max(candidates, key=lambda item: item[3])
    marginal_hat, corr_hat, _ = layout.build(x_hat)
    flags = layout.boundary_flags(x_hat)
    for name in flags:
        logger.warning(f"参数 {name} 贴近参数空间边界 (变换尺度 |值| > {BOUNDARY_LIMIT})")

    result = FitResult(
        theta_hat=layout.to_natural(x_hat),
        param_names=list(layout.names),
        transforms=list(layout.transforms),
        theta_transformed=[float(v) for v in x_hat],
        wpl_max=value,
        copula=fit_cfg.copula,
        marginal=marginal_hat.to_dict(),
        corr=corr_hat.to_dict(),
        nu_selected=nu_best,
        n_pairs=len(pairs),
        m=pairs.m,
        wall_time=time.perf_counter() - started,
        profile=profile,
        nu_first_stage=nu_first_stage,
        boundary_flags=flags,
    )
    logger.info(f"拟合完成: {result.get_display_info()}, 用时 {result.wall_time:.2f}s")
    return result


def fit_objective(result: FitResult, data: FieldRealization, cfg: SpatialConfig,
                  fit_cfg: FitConfig, ctrl: Optional[SeriesControl] = None) -> WplObjective:
    """重建拟合结果对应的目标函数 (ν 固定)"""
    layout = ParameterLayout(result.marginal_spec(), CorrelationModel.from_dict(result.corr),
                             result.copula,
                             None if result.nu_selected is None else float(result.nu_selected),
                             fit_cfg.estimate_nugget)
    if layout.names != result.param_names:
        raise ValueError(f"参数布局不一致: {layout.names} != {result.param_names}")
    pairs = nn_pairs(cfg, result.m)
    return WplObjective(data.values, cfg, pairs, layout, fit_cfg.max_pair_rho2, ctrl)


# ---------------------------------------------------------------------------
# 数值导数
# ---------------------------------------------------------------------------

def numerical_gradient(func: Callable[[np.ndarray], float], x: Sequence[float],
                       step: float = 1e-5) -> np.ndarray:
    """中心差分梯度"""
    x = np.asarray(x, dtype=float)
    grad = np.empty(x.size)
    for k in range(x.size):
        e = np.zeros(x.size)
        e[k] = step
        grad[k] = (func(x + e) - func(x - e)) / (2.0 * step)
    return grad


def numerical_hessian(func: Callable[[np.ndarray], float], x: Sequence[float],
                      step: float = 1e-5) -> np.ndarray:
    """中心差分 Hessian (对称化)"""
    x = np.asarray(x, dtype=float)
    p = x.size
    hess = np.empty((p, p))
    f0 = func(x)
    for k in range(p):
        ek = np.zeros(p)
        ek[k] = step
        hess[k, k] = (func(x + ek) - 2.0 * f0 + func(x - ek)) / step ** 2
        for l in range(k + 1, p):
            el = np.zeros(p)
            el[l] = step
            value = (func(x + ek + el) - func(x + ek - el)
                     - func(x - ek + el) + func(x - ek - el)) / (4.0 * step ** 2)
            hess[k, l] = hess[l, k] = value
    return hess


# ---------------------------------------------------------------------------
# Godambe 信息与 PLIC
# ---------------------------------------------------------------------------

@dataclass
class GodambeEstimate:
    """自助法得到的 G⁻¹ 估计"""

    cov: np.ndarray  # 自然尺度
    cov_transformed: np.ndarray  # 变换尺度
    std_errors: Dict[str, float]
    estimates: np.ndarray  # B × p 自然尺度估计
    replicates: int
    failures: int
    failure_log: List[str]


def _refit_config(fit_cfg: FitConfig, result: FitResult) -> FitConfig:
    nu_grid = [result.nu_selected] if result.nu_selected is not None else fit_cfg.nu_grid
    return replace(fit_cfg, nu_grid=nu_grid, nu_strategy="grid", bootstrap=0,
                   select_by="wpl", start=dict(result.theta_hat))


def bootstrap_godambe(result: FitResult, data_cfg: SpatialConfig, B: int, seed: int,
                      fit_cfg: Optional[FitConfig] = None, workers: int = 4,
                      diagnostic_identical: bool = False,
                      ctrl: Optional[SeriesControl] = None,
                      progress_callback: Optional[ProgressCallback] = None) -> GodambeEstimate:
    """
    参数自助法估计 G⁻¹

    在 θ̂ 处模拟 B 个数据集 (第 b 个使用 derive_seed(seed, b)), ν 固定为选中值重新拟合,
    估计向量的经验协方差即为 G⁻¹ 的估计。

    Args:
        result: 原始拟合结果
        data_cfg: 站点配置
        B: 重复次数, 至少 30
        seed: 父种子
        fit_cfg: 拟合配置 (默认按结果推断)
        workers: 并发线程数
        diagnostic_identical: 所有重复使用同一种子 (诊断用, 协方差退化为 0)

    Returns:
        GodambeEstimate

    Raises:
        BootstrapError: 失败比例超过 10%
    """
    if B < MIN_BOOTSTRAP:
        raise ValueError(f"自助法重复次数至少为 {MIN_BOOTSTRAP}: {B}")
    fit_cfg = fit_cfg or FitConfig(marginal=result.marginal["family"], copula=result.copula,
                                   neighbors=result.m)
    refit_cfg = _refit_config(fit_cfg, result)
    marginal = result.marginal_spec()
    params = result.dependence_params()
    factor = chol_factor(corr_matrix(data_cfg, params.corr, ctrl))
    names = result.param_names

    def replicate(b: int) -> Tuple[int, Optional[np.ndarray], Optional[np.ndarray], str]:
        replicate_seed = seed if diagnostic_identical else derive_seed(seed, b)
        try:
            simulated = simulate_field(data_cfg, params, marginal, replicate_seed,
                                       copula=result.copula, factor=factor)
            refit = fit(simulated, data_cfg, refit_cfg, ctrl)
            natural = np.array([refit.theta_hat[name] for name in names])
            return b, natural, np.asarray(refit.theta_transformed), ""
        except (SpatialCopulaError, ValueError, FloatingPointError) as e:
            return b, None, None, f"重复 {b} (seed={replicate_seed}): {type(e).__name__}: {e}"

    natural_rows: Dict[int, np.ndarray] = {}
    transformed_rows: Dict[int, np.ndarray] = {}
    failure_log: List[str] = []
    with ThreadPoolExecutor(max_workers=max(1, int(workers))) as executor:
        for done, (b, natural, transformed, error) in enumerate(executor.map(replicate, range(B)), 1):
            if natural is None:
                logger.warning(f"自助法重复拟合失败: {error}")
                failure_log.append(error)
            else:
                natural_rows[b] = natural
                transformed_rows[b] = transformed
            if progress_callback:
                progress_callback(done, B, f"自助法重复 {b}")

    if len(failure_log) > MAX_FAILURE_RATE * B:
        raise BootstrapError(len(failure_log), B, failure_log)

    order = sorted(natural_rows)
    estimates = np.vstack([natural_rows[b] for b in order])
    transformed = np.vstack([transformed_rows[b] for b in order])
    cov = np.atleast_2d(np.cov(estimates, rowvar=False, ddof=1))
    cov_t = np.atleast_2d(np.cov(transformed, rowvar=False, ddof=1))
    std_errors = dict(zip(names, np.sqrt(np.clip(np.diag(cov), 0.0, None)).tolist()))
    logger.info(f"自助法完成: 成功 {len(order)}/{B}, 标准误 {std_errors}")
    return GodambeEstimate(cov=cov, cov_transformed=cov_t, std_errors=std_errors,
                           estimates=estimates, replicates=len(order),
                           failures=len(failure_log), failure_log=failure_log)


def plic(result: FitResult, H_hat, Ginv_hat) -> float:
    """
    PLIC = -2·wpl_max + 2·tr(Ĥ Ĝ⁻¹)

    Args:
        result: 拟合结果
        H_hat: 负 Hessian (p×p)
        Ginv_hat: G⁻¹ 估计 (p×p), 与 H_hat 同一尺度

    Raises:
        PlicError: 矩阵奇异或非有限
    """
    H = np.atleast_2d(np.asarray(H_hat, dtype=float))
    G = np.atleast_2d(np.asarray(Ginv_hat, dtype=float))
    p = H.shape[0]
    if H.shape != (p, p) or G.shape != (p, p):
        raise ValueError(f"矩阵维数不一致: H {H.shape}, G⁻¹ {G.shape}")
    if not (np.all(np.isfinite(H)) and np.all(np.isfinite(G))):
        raise PlicError("H 或 G⁻¹ 包含非有限值")
    for name, matrix in (("H", H), ("G⁻¹", G)):
        if np.linalg.matrix_rank(matrix) < p:
            raise PlicError(f"{name} 奇异, 无法计算 PLIC")
    return float(-2.0 * result.wpl_max + 2.0 * np.trace(H @ G))


def select_by_plic(results: Sequence[FitResult]) -> FitResult:
    """在候选拟合中选择 PLIC 最小者"""
    scored = [r for r in results if r.plic is not None]
    if not scored:
        raise ValueError("候选拟合均未计算 PLIC")
    best = min(scored, key=lambda r: r.plic)
    logger.info(f"PLIC 选择: {best.get_display_info()}")
    return best


def attach_uncertainty(result: FitResult, data: FieldRealization, cfg: SpatialConfig,
                       fit_cfg: FitConfig, ctrl: Optional[SeriesControl] = None,
                       progress_callback: Optional[ProgressCallback] = None) -> FitResult:
    """为拟合结果补充自助法 G⁻¹、标准误、变换尺度 Hessian 与 PLIC"""
    estimate = bootstrap_godambe(result, cfg, fit_cfg.bootstrap, fit_cfg.seed, fit_cfg,
                                 fit_cfg.bootstrap_workers, ctrl=ctrl,
                                 progress_callback=progress_callback)
    objective = fit_objective(result, data, cfg, fit_cfg, ctrl)
    H = -numerical_hessian(objective.wpl, result.theta_transformed, fit_cfg.hessian_step)
    result = replace(result,
                     godambe_inv=estimate.cov.tolist(),
                     godambe_inv_transformed=estimate.cov_transformed.tolist(),
                     std_errors=estimate.std_errors,
                     hessian=H.tolist(),
                     bootstrap_replicates=estimate.replicates,
                     bootstrap_failures=estimate.failures)
    try:
        result.plic = plic(result, H, estimate.cov_transformed)
    except PlicError as e:
        logger.warning(f"PLIC 无法计算: {e}")
    return result


def fit_with_uncertainty(data: FieldRealization, cfg: SpatialConfig, fit_cfg: FitConfig,
                         ctrl: Optional[SeriesControl] = None,
                         progress_callback: Optional[ProgressCallback] = None) -> FitResult:
    """
    拟合并 (bootstrap > 0 时) 计算 Godambe 信息

    select_by="plic" 时对每个 ν 分别计算 PLIC 并选择最小者, 否则只对 wpl 最优的 ν 计算。
    """
    started = time.perf_counter()
    if fit_cfg.bootstrap == 0:
        return fit(data, cfg, fit_cfg, ctrl, progress_callback)

    if fit_cfg.select_by == "plic" and fit_cfg.copula == "clayton" and len(fit_cfg.nu_grid) > 1:
        profile: Dict[str, float] = {}
        candidates = []
        for nu in fit_cfg.nu_grid:
            single = replace(fit_cfg, nu_grid=[int(nu)], nu_strategy="grid")
            try:
                candidate = fit(data, cfg, single, ctrl)
            except FitError as e:
                logger.warning(f"ν={nu} 拟合失败: {e}")
                continue
            profile.update(candidate.profile)
            candidates.append(attach_uncertainty(candidate, data, cfg, single, ctrl, progress_callback))
        if not candidates:
            raise FitError("nu_grid 中所有 ν 的拟合均失败")
        best = select_by_plic(candidates)
        best.profile = profile
    else:
        best = attach_uncertainty(fit(data, cfg, fit_cfg, ctrl, progress_callback),
                                  data, cfg, fit_cfg, ctrl, progress_callback)
    best.wall_time = time.perf_counter() - started
    return best
