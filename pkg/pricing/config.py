"""
配置加载
从 YAML 文件读取数值默认值，构建各模块的配置数据类
"""

import logging
import os
from dataclasses import dataclass, field, fields, replace
from pathlib import Path
from typing import Any, Dict, Optional, Union

import yaml

from pricing.mc import MCConfig
from pricing.quadrature import QuadConfig
from pricing.specfun import SpecFunConfig

logger = logging.getLogger(__name__)

DEFAULT_CONFIG_PATH = Path(__file__).resolve().parent.parent / "configs" / "default_config.yaml"
THREADS_ENV = "ASIANJUMP_THREADS"


@dataclass
class SmileConfig:
    """隐含波动率微笑网格"""
    k_min: float = 0.9
    k_max: float = 1.1
    n_points: int = 21

    def __post_init__(self):
        if not 0 < self.k_min < self.k_max:
            raise ValueError(f"微笑网格要求 0 < k_min < k_max: {self.k_min}, {self.k_max}")
        if self.n_points < 2:
            raise ValueError(f"微笑网格点数不能少于 2: {self.n_points}")


@dataclass
class PricingConfig:
    """全局配置"""
    quad: QuadConfig = field(default_factory=QuadConfig)
    specfun: SpecFunConfig = field(default_factory=SpecFunConfig)
    mc: MCConfig = field(default_factory=MCConfig)
    smile: SmileConfig = field(default_factory=SmileConfig)
    output_dir: str = "results"


def _section(cls, data: Optional[Dict[str, Any]]):
    data = data or {}
    known = {f.name for f in fields(cls)}
    unknown = set(data) - known
    if unknown:
        logger.warning("⚠️ 配置项 %s 未知，已忽略: %s", cls.__name__, sorted(unknown))
    return cls(**{k: v for k, v in data.items() if k in known})


def _read_yaml(path: Path) -> Dict[str, Any]:
    if not path.exists():
        raise FileNotFoundError(f"配置文件不存在: {path}")
    with open(path, 'r', encoding='utf-8') as f:
        return yaml.safe_load(f) or {}


def load_config(path: Optional[Union[str, Path]] = None) -> PricingConfig:
    """加载默认配置，再用用户配置文件与环境变量覆盖"""
    data = _read_yaml(DEFAULT_CONFIG_PATH) if DEFAULT_CONFIG_PATH.exists() else {}
    if path is not None:
        for key, value in _read_yaml(Path(path)).items():
            if isinstance(value, dict):
                data.setdefault(key, {}).update(value)
            else:
                data[key] = value

    config = PricingConfig(
        quad=_section(QuadConfig, data.get("quadrature")),
        specfun=_section(SpecFunConfig, data.get("specfun")),
        mc=_section(MCConfig, data.get("monte_carlo")),
        smile=_section(SmileConfig, data.get("smile")),
        output_dir=str(data.get("output_dir", "results")),
    )

    threads = os.environ.get(THREADS_ENV)
    if threads:
        try:
            config.mc = replace(config.mc, threads=int(threads))
        except ValueError:
            logger.warning("⚠️ 环境变量 %s=%s 不是整数，已忽略", THREADS_ENV, threads)
    return config
