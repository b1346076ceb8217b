#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
YAML 数值配置与 JSON 拟合配置测试
"""

import json

import pytest
import yaml

from app.config_manager import ConfigManager, DEFAULT_CONFIG, get_config_manager
from app.fit_config import FitConfig, load_fit_config, transform_for


def test_default_config_created(tmp_path):
    """配置文件不存在时写出默认配置"""
    path = tmp_path / "config.yaml"
    manager = ConfigManager(str(path))
    assert path.exists()
    assert manager.get_all_config() == DEFAULT_CONFIG
    ctrl = manager.get_series_control()
    assert ctrl.rel_tol == 1e-12
    assert ctrl.max_terms == 20000
    assert manager.get_quadrature_options()["nodes"] == 64
    assert manager.get_log_level() == "INFO"


def test_partial_file_merges_with_defaults(tmp_path):
    """文件中的值覆盖默认值, 缺失项使用默认值"""
    path = tmp_path / "config.yaml"
    path.write_text(yaml.safe_dump({"series": {"max_terms": 500}, "optimizer": {"restarts": 3}}),
                    encoding="utf-8")
    manager = ConfigManager(str(path))
    assert manager.get_series_control().max_terms == 500
    assert manager.get_series_control().rel_tol == 1e-12
    fit_cfg = manager.default_fit_config(copula="gaussian")
    assert fit_cfg.restarts == 3
    assert fit_cfg.copula == "gaussian"
    assert fit_cfg.neighbors == 2


def test_invalid_file_falls_back_to_defaults(tmp_path):
    """无效配置回退到默认值"""
    path = tmp_path / "config.yaml"
    path.write_text(yaml.safe_dump({"inference": {"max_pair_rho2": 1.5}}), encoding="utf-8")
    manager = ConfigManager(str(path))
    assert manager.get_inference_options()["max_pair_rho2"] == 0.95


def test_set_value_validates_and_saves(tmp_path):
    """设置配置项: 合法值写回文件, 非法值报错"""
    path = tmp_path / "config.yaml"
    manager = ConfigManager(str(path))
    assert manager.set_value("quadrature", "nodes", 32)
    assert yaml.safe_load(path.read_text(encoding="utf-8"))["quadrature"]["nodes"] == 32
    with pytest.raises(ValueError):
        manager.set_value("quadrature", "nodes", 1)
    with pytest.raises(ValueError):
        manager.set_value("plotting", "dpi", 300)
    with pytest.raises(ValueError):
        manager.set_value("logging", "level", "LOUD")


def test_export_import(tmp_path):
    """导出后导入得到相同配置"""
    manager = ConfigManager(str(tmp_path / "a.yaml"))
    manager.set_value("optimizer", "maxiter", 100)
    exported = tmp_path / "export.yaml"
    assert manager.export_config(str(exported))
    other = ConfigManager(str(tmp_path / "b.yaml"))
    assert other.import_config(str(exported))
    assert other.get_optimizer_options()["maxiter"] == 100
    assert not other.import_config(str(tmp_path / "missing.yaml"))


def test_global_manager_reloads_for_new_file(tmp_path):
    """指定不同文件时重新加载全局实例"""
    first = get_config_manager(str(tmp_path / "one.yaml"))
    assert get_config_manager(str(tmp_path / "one.yaml")) is first
    assert get_config_manager(str(tmp_path / "two.yaml")) is not first


def test_fit_config_validation():
    """拟合配置校验"""
    assert FitConfig().validate()[0]
    assert not FitConfig(nu_grid=[1.5]).validate()[0]
    assert not FitConfig(bootstrap=10).validate()[0]
    assert FitConfig(bootstrap=30).validate()[0]
    assert not FitConfig(select_by="plic").validate()[0]
    assert not FitConfig(copula="frank").validate()[0]
    assert not FitConfig(start={"b": -1.0}).validate()[0]
    assert not FitConfig(start={"gamma": 1.0}).validate()[0]
    assert not FitConfig(bounds=[1.0, 0.0]).validate()[0]
    assert FitConfig(copula="gaussian", nu_grid=[]).validate()[0]


def test_transform_for():
    """参数名到变换的映射"""
    assert transform_for("beta3") == "identity"
    assert transform_for("precision") == "log"
    assert transform_for("tau2") == "logit"
    with pytest.raises(ValueError):
        transform_for("sigma")


def test_load_fit_config(tmp_path):
    """JSON 拟合配置: 未知字段忽略, 无效配置报错"""
    path = tmp_path / "fit.json"
    path.write_text(json.dumps({"nu_grid": [2, 4], "neighbors": 3, "colour": "red"}), encoding="utf-8")
    fit_cfg = load_fit_config(str(path))
    assert fit_cfg.nu_grid == [2, 4]
    assert fit_cfg.neighbors == 3
    path.write_text(json.dumps({"neighbors": 0}), encoding="utf-8")
    with pytest.raises(ValueError):
        load_fit_config(str(path))


def test_correlation_model_from_fit_config():
    """由拟合配置构造相关模型"""
    model = FitConfig(gw_delta=1.0, gw_mu=5.0, nugget=0.2).correlation_model(dim=2, b=0.3)
    assert (model.delta, model.mu_gw, model.b, model.tau2) == (1.0, 5.0, 0.3, 0.2)
