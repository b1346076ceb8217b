#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
高斯 copula 适配器 (基准模型)
"""

from typing import Optional
import logging

import numpy as np

from .base import PairCopulaAdapter
from ..copula import log_gauss_copula_bipdf
from ..correlation import CorrelationModel, SpatialConfig
from ..fields import sim_gaussian_copula
from ..specfun import SeriesControl

logger = logging.getLogger(__name__)


class GaussianAdapter(PairCopulaAdapter):
    """高斯 copula, 反射对称"""

    def __init__(self, nu: Optional[float] = None, ctrl: Optional[SeriesControl] = None):
        super().__init__(None, ctrl)

    def get_copula_type(self) -> str:
        return 'gaussian'

    @property
    def display_name(self) -> str:
        return "Gaussian"

    def log_pair_density(self, u_i, u_j, rho) -> np.ndarray:
        return log_gauss_copula_bipdf(u_i, u_j, rho)

    def simulate_uniform(self, cfg: SpatialConfig, corr: CorrelationModel, seed: int,
                         size: Optional[int] = None,
                         factor: Optional[np.ndarray] = None) -> np.ndarray:
        return sim_gaussian_copula(cfg, corr, seed, size=size, factor=factor)

    def uniform_correlation(self, rho) -> float:
        """Spearman 相关 (6/π) arcsin(ρ/2)"""
        value = 6.0 / np.pi * np.arcsin(np.asarray(rho, dtype=float) / 2.0)
        return float(value) if np.ndim(value) == 0 else value
