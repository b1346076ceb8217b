#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
PySpatialCopula 应用包
"""

from .config_manager import ConfigManager, create_default_config, get_config_manager
from .copula import (clayton_bicdf, clayton_bipdf, clayton_corr, clayton_corr_sym,
                     gauss_copula_bipdf, marginal_bipdf, marginal_corr)
from .correlation import CorrelationModel, SpatialConfig, chol_factor, corr_matrix, gw_corr
from .fields import DependenceParams, FieldRealization, MarginalSpec, simulate_field
from .fit_config import FitConfig, FitResult, load_fit_config
from .inference import bootstrap_godambe, fit, fit_with_uncertainty, nn_pairs, plic, wpl

__all__ = [
    'ConfigManager',
    'create_default_config',
    'get_config_manager',
    'clayton_bicdf',
    'clayton_bipdf',
    'clayton_corr',
    'clayton_corr_sym',
    'gauss_copula_bipdf',
    'marginal_bipdf',
    'marginal_corr',
    'CorrelationModel',
    'SpatialConfig',
    'chol_factor',
    'corr_matrix',
    'gw_corr',
    'DependenceParams',
    'FieldRealization',
    'MarginalSpec',
    'simulate_field',
    'FitConfig',
    'FitResult',
    'load_fit_config',
    'bootstrap_godambe',
    'fit',
    'fit_with_uncertainty',
    'nn_pairs',
    'plic',
    'wpl',
]
