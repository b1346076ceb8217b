#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
数据集模块
CSV 数据读写 (表头 x,y,value[,cov1,...]) 与有界支撑的线性缩放
"""

import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import List, Optional, Tuple

import numpy as np
import pandas as pd

from .correlation import SpatialConfig
from .errors import DatasetError
from .fields import FieldRealization, MarginalSpec, rescale_bounded, unscale_bounded

logger = logging.getLogger(__name__)

COORD_COLUMNS = ["x", "y", "z"]
VALUE_COLUMN = "value"
COVARIATE_PREFIX = "cov"
FLOAT_FORMAT = "%.17g"


@dataclass
class Dataset:
    """站点坐标、观测值与可选协变量 (不含截距列)"""

    coords: np.ndarray
    values: np.ndarray
    covariates: Optional[np.ndarray] = None
    source: Optional[str] = None
    bounds: Optional[Tuple[float, float]] = None  # 原始支撑 (a1, a2), 值已缩放到 [0, 1]
    covariate_names: List[str] = field(default_factory=list)

    def __post_init__(self):
        self.coords = np.atleast_2d(np.asarray(self.coords, dtype=float))
        self.values = np.asarray(self.values, dtype=float).reshape(-1)
        if self.covariates is not None:
            self.covariates = np.asarray(self.covariates, dtype=float)
            if self.covariates.ndim == 1:
                self.covariates = self.covariates[:, None]
            if not self.covariate_names:
                self.covariate_names = [f"{COVARIATE_PREFIX}{k + 1}" for k in range(self.covariates.shape[1])]
        valid, msg = self.validate()
        if not valid:
            raise DatasetError(msg)

    @property
    def n(self) -> int:
        return self.values.shape[0]

    def validate(self) -> tuple[bool, str]:
        """验证数据完整性"""
        if self.coords.shape[0] != self.n:
            return False, f"坐标行数 {self.coords.shape[0]} 与观测值个数 {self.n} 不一致"
        if not (np.all(np.isfinite(self.coords)) and np.all(np.isfinite(self.values))):
            return False, "坐标或观测值包含非有限值"
        if self.covariates is not None and self.covariates.shape[0] != self.n:
            return False, f"协变量行数 {self.covariates.shape[0]} 与观测值个数 {self.n} 不一致"
        if self.bounds is not None and np.any((self.values < 0) | (self.values > 1)):
            return False, f"缩放后的观测值超出支撑 [{self.bounds[0]}, {self.bounds[1]}]"
        return True, ""

    @classmethod
    def read_csv(cls, path: str, bounds: Optional[Tuple[float, float]] = None) -> 'Dataset':
        """
        读取 CSV 数据

        Args:
            path: 文件路径
            bounds: 原始支撑 (a1, a2), 给定时观测值缩放为 (y - a1)/(a2 - a1)

        Returns:
            Dataset

        Raises:
            DatasetError: 缺少列或字段无法解析为数值
        """
        try:
            frame = pd.read_csv(path)
        except (OSError, pd.errors.ParserError, pd.errors.EmptyDataError) as e:
            raise DatasetError(f"无法读取数据文件 {path}: {e}") from e

        frame.columns = [str(c).strip() for c in frame.columns]
        coord_cols = [c for c in COORD_COLUMNS if c in frame.columns]
        if "x" not in coord_cols or VALUE_COLUMN not in frame.columns:
            raise DatasetError(f"数据文件缺少必需列 x 或 value: {list(frame.columns)}")
        cov_cols = [c for c in frame.columns if c.startswith(COVARIATE_PREFIX)]

        numeric = frame[coord_cols + [VALUE_COLUMN] + cov_cols].apply(pd.to_numeric, errors='coerce')
        if numeric.isna().any().any():
            bad_rows = numeric.index[numeric.isna().any(axis=1)].tolist()
            raise DatasetError(f"数据文件 {path} 存在无法解析的数值, 行: {bad_rows[:10]}")

        values = numeric[VALUE_COLUMN].to_numpy(dtype=float)
        if bounds is not None:
            a1, a2 = float(bounds[0]), float(bounds[1])
            values = np.asarray(rescale_bounded(values, a1, a2))
            bounds = (a1, a2)
        covariates = numeric[cov_cols].to_numpy(dtype=float) if cov_cols else None
        logger.info(f"已读取数据 {path}: {len(values)} 个站点, 协变量 {cov_cols}")
        return cls(coords=numeric[coord_cols].to_numpy(dtype=float), values=values,
                   covariates=covariates, source=str(path), bounds=bounds,
                   covariate_names=cov_cols)

    def write_csv(self, path: str) -> None:
        """写入 CSV, 有界支撑时先还原到原始尺度"""
        values = self.values
        if self.bounds is not None:
            values = np.asarray(unscale_bounded(values, self.bounds[0], self.bounds[1]))
        columns = {name: self.coords[:, k] for k, name in enumerate(COORD_COLUMNS[:self.coords.shape[1]])}
        columns[VALUE_COLUMN] = values
        if self.covariates is not None:
            for k, name in enumerate(self.covariate_names):
                columns[name] = self.covariates[:, k]
        Path(path).parent.mkdir(parents=True, exist_ok=True)
        pd.DataFrame(columns).to_csv(path, index=False, float_format=FLOAT_FORMAT)
        logger.info(f"已写入数据 {path}: {self.n} 行")

    def to_spatial_config(self) -> SpatialConfig:
        """站点配置, 设计矩阵为截距列加协变量"""
        intercept = np.ones((self.n, 1))
        design = intercept if self.covariates is None else np.hstack([intercept, self.covariates])
        try:
            return SpatialConfig(self.coords, design)
        except ValueError as e:
            raise DatasetError(str(e)) from e

    def to_realization(self, marginal: Optional[MarginalSpec] = None,
                       copula: str = "clayton") -> FieldRealization:
        return FieldRealization(values=self.values, marginal=marginal or MarginalSpec(),
                                copula=copula)

    @classmethod
    def from_realization(cls, cfg: SpatialConfig, realization: FieldRealization,
                         bounds: Optional[Tuple[float, float]] = None) -> 'Dataset':
        """由模拟结果构造数据集, 设计矩阵的截距列不写出"""
        covariates = None
        if cfg.covariates is not None and cfg.covariates.shape[1] > 1:
            covariates = cfg.covariates[:, 1:]
        return cls(coords=cfg.coords, values=realization.values, covariates=covariates,
                   bounds=bounds)
