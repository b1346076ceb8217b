#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
YAML 配置管理器
管理级数截断、数值积分、优化器与推断的默认参数
"""

import copy
import logging
import sys
from dataclasses import replace
from pathlib import Path
from typing import Any, Dict, Optional

try:
    import yaml
except ImportError:
    print("错误: PyYAML库未安装")
    print("安装命令: pip install pyyaml")
    sys.exit(1)

from .fit_config import FitConfig
from .specfun import SeriesControl

logger = logging.getLogger(__name__)

# 默认配置文件路径
CONFIG_FILE = 'resources/config.yaml'

LOG_LEVELS = ["DEBUG", "INFO", "WARNING", "ERROR"]

DEFAULT_CONFIG: Dict[str, Any] = {
    "series": {
        "rel_tol": 1e-12,
        "max_terms": 20000,
    },
    "quadrature": {
        "nodes": 64,
        "doubling_tol": 1e-7,
    },
    "optimizer": {
        "xatol": 1e-6,
        "fatol": 1e-6,
        "maxiter": 4000,
        "initial_step": 0.25,
        "restarts": 1,
    },
    "inference": {
        "neighbors": 2,
        "max_pair_rho2": 0.95,
        "bootstrap_workers": 4,
        "hessian_step": 1e-5,
    },
    "logging": {
        "level": "INFO",
    },
}


def _merge(base: Dict[str, Any], override: Dict[str, Any]) -> Dict[str, Any]:
    merged = copy.deepcopy(base)
    for key, value in (override or {}).items():
        if isinstance(value, dict) and isinstance(merged.get(key), dict):
            merged[key] = _merge(merged[key], value)
        else:
            merged[key] = value
    return merged


def create_default_config(config_file: str = CONFIG_FILE) -> bool:
    """创建默认配置文件"""
    try:
        Path(config_file).parent.mkdir(parents=True, exist_ok=True)
        with open(config_file, 'w', encoding='utf-8') as f:
            yaml.safe_dump(DEFAULT_CONFIG, f, allow_unicode=True, sort_keys=False)
        logger.info(f"默认配置文件已创建: {config_file}")
        return True
    except OSError as e:
        logger.error(f"创建默认配置文件失败: {e}")
        return False


class ConfigManager:
    """YAML 配置管理器, 文件中的值覆盖内置默认值"""

    def __init__(self, config_file: str = CONFIG_FILE):
        """
        初始化配置管理器

        Args:
            config_file: 配置文件路径
        """
        self.config_file = Path(config_file)
        self.config_data: Dict[str, Any] = {}
        self._load_config()

    def _load_config(self) -> None:
        """从文件加载配置"""
        try:
            if self.config_file.exists():
                with open(self.config_file, 'r', encoding='utf-8') as f:
                    loaded = yaml.safe_load(f) or {}
                self.config_data = _merge(self._get_default_config(), loaded)
                logger.info(f"配置已加载: {self.config_file}")
            else:
                self.config_data = self._get_default_config()
                self._save_config()
                logger.info(f"创建默认配置: {self.config_file}")
        except (OSError, yaml.YAMLError) as e:
            logger.error(f"加载配置失败: {e}")
            self.config_data = self._get_default_config()

        valid, msg = self.validate_config(self.config_data)
        if not valid:
            logger.error(f"配置无效, 使用默认值: {msg}")
            self.config_data = self._get_default_config()

    def _save_config(self) -> bool:
        """保存配置到文件"""
        try:
            self.config_file.parent.mkdir(parents=True, exist_ok=True)
            with open(self.config_file, 'w', encoding='utf-8') as f:
                yaml.safe_dump(self.config_data, f, allow_unicode=True, sort_keys=False)
            logger.info(f"配置已保存: {self.config_file}")
            return True
        except OSError as e:
            logger.error(f"保存配置失败: {e}")
            return False

    def _get_default_config(self) -> Dict[str, Any]:
        """获取默认配置"""
        return copy.deepcopy(DEFAULT_CONFIG)

    def get_series_control(self) -> SeriesControl:
        """级数截断控制"""
        return SeriesControl.from_dict(self.config_data["series"])

    def get_quadrature_options(self) -> Dict[str, Any]:
        """数值积分选项"""
        return dict(self.config_data["quadrature"])

    def get_optimizer_options(self) -> Dict[str, Any]:
        """优化器选项"""
        return dict(self.config_data["optimizer"])

    def get_inference_options(self) -> Dict[str, Any]:
        """推断选项"""
        return dict(self.config_data["inference"])

    def get_log_level(self) -> str:
        """日志级别"""
        return str(self.config_data["logging"]["level"]).upper()

    def default_fit_config(self, **overrides) -> FitConfig:
        """
        以配置文件中的优化器与推断选项为默认值构造拟合配置

        Args:
            overrides: 覆盖的 FitConfig 字段
        """
        optimizer = self.get_optimizer_options()
        inference = self.get_inference_options()
        fit_cfg = FitConfig(
            neighbors=int(inference["neighbors"]),
            max_pair_rho2=float(inference["max_pair_rho2"]),
            bootstrap_workers=int(inference["bootstrap_workers"]),
            hessian_step=float(inference["hessian_step"]),
            xatol=float(optimizer["xatol"]),
            fatol=float(optimizer["fatol"]),
            maxiter=int(optimizer["maxiter"]),
            initial_step=float(optimizer["initial_step"]),
            restarts=int(optimizer["restarts"]),
        )
        return replace(fit_cfg, **overrides) if overrides else fit_cfg

    def set_value(self, section: str, key: str, value: Any) -> bool:
        """
        设置单个配置项并保存

        Returns:
            是否保存成功
        """
        if section not in self.config_data:
            raise ValueError(f"未知配置节: {section}")
        candidate = copy.deepcopy(self.config_data)
        candidate[section][key] = value
        valid, msg = self.validate_config(candidate)
        if not valid:
            raise ValueError(msg)
        self.config_data = candidate
        return self._save_config()

    def get_all_config(self) -> Dict[str, Any]:
        """获取所有配置"""
        return copy.deepcopy(self.config_data)

    def validate_config(self, config: Dict[str, Any]) -> tuple[bool, str]:
        """
        验证配置是否有效

        Args:
            config: 配置字典

        Returns:
            (是否有效, 错误信息)
        """
        for section in DEFAULT_CONFIG:
            if section not in config or not isinstance(config[section], dict):
                return False, f"缺少配置节: {section}"
        try:
            SeriesControl.from_dict(config["series"])
            nodes = int(config["quadrature"]["nodes"])
            if nodes < 2:
                return False, "quadrature.nodes 至少为 2"
            if not float(config["quadrature"]["doubling_tol"]) > 0:
                return False, "quadrature.doubling_tol 必须为正"
            optimizer = config["optimizer"]
            if float(optimizer["xatol"]) <= 0 or float(optimizer["fatol"]) <= 0:
                return False, "优化器容差必须为正"
            if int(optimizer["maxiter"]) < 1 or int(optimizer["restarts"]) < 0:
                return False, "optimizer.maxiter 必须大于0, restarts 不能为负"
            inference = config["inference"]
            if int(inference["neighbors"]) < 1:
                return False, "inference.neighbors 必须大于0"
            if not 0.0 < float(inference["max_pair_rho2"]) < 1.0:
                return False, "inference.max_pair_rho2 必须在 (0, 1) 内"
            if int(inference["bootstrap_workers"]) < 1:
                return False, "inference.bootstrap_workers 必须大于0"
        except (KeyError, TypeError, ValueError) as e:
            return False, f"配置项无效: {e}"
        if str(config["logging"].get("level", "")).upper() not in LOG_LEVELS:
            return False, f"日志级别必须是: {', '.join(LOG_LEVELS)}"
        return True, ""

    def export_config(self, export_path: str) -> bool:
        """导出配置到指定路径"""
        try:
            with open(export_path, 'w', encoding='utf-8') as f:
                yaml.safe_dump(self.config_data, f, allow_unicode=True, sort_keys=False)
            logger.info(f"配置已导出: {export_path}")
            return True
        except OSError as e:
            logger.error(f"导出配置失败: {e}")
            return False

    def import_config(self, import_path: str) -> bool:
        """从指定路径导入配置"""
        try:
            with open(import_path, 'r', encoding='utf-8') as f:
                imported = _merge(self._get_default_config(), yaml.safe_load(f) or {})
        except (OSError, yaml.YAMLError) as e:
            logger.error(f"导入配置失败: {e}")
            return False
        valid, msg = self.validate_config(imported)
        if not valid:
            logger.error(f"导入的配置格式不正确: {msg}")
            return False
        self.config_data = imported
        self._save_config()
        logger.info(f"配置已导入: {import_path}")
        return True


# 全局配置管理器实例
_config_manager: Optional[ConfigManager] = None


def get_config_manager(config_file: Optional[str] = None) -> ConfigManager:
    """获取全局配置管理器实例, 指定不同文件时重新加载"""
    global _config_manager
    if _config_manager is None or (config_file is not None
                                   and Path(config_file) != _config_manager.config_file):
        _config_manager = ConfigManager(config_file or CONFIG_FILE)
    return _config_manager
