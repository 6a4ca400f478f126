"""
特殊函数
闭式渐近系数用到的正态分布函数、对数积分、受限超几何函数与反双曲正切
主路径使用 scipy.special，级数求和版本保留作参照
"""

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy import special

from pricing.exceptions import DomainError


@dataclass
class SpecFunConfig:
    """级数求值配置"""
    tol: float = 1e-15
    max_terms: int = 20000

    def __post_init__(self):
        if not 0 < self.tol <= 1e-6:
            raise ValueError(f"tol 必须位于 (0, 1e-6]: {self.tol}")
        if self.max_terms < 100:
            raise ValueError(f"max_terms 不能小于 100: {self.max_terms}")


def norm_cdf(x):
    """标准正态分布函数 Φ(x)，支持数组"""
    return special.ndtr(x)


def log_integral(z: float) -> float:
    """
    对数积分 li(z) = Ei(ln z)，z ∈ (0, 1)

    li(0⁺) = 0，z → 1⁻ 时发散到 -∞
    """
    if z == 0.0:
        return 0.0
    if not 0.0 < z < 1.0:
        raise DomainError(f"li(z) 仅对 z ∈ (0, 1) 定义: z={z}")
    return float(special.expi(math.log(z)))


def hyp2f1_restricted(b: float, z: float) -> float:
    """₂F₁(1, b; b+3; z)，z ∈ [0, 1]；z=1 处用 Gauss 求和 (b+2)/2"""
    if not 0.0 <= z <= 1.0:
        raise DomainError(f"₂F₁(1,b;b+3;z) 仅在 z ∈ [0, 1] 上使用: z={z}")
    c = float(b) + 3.0
    if c <= 0.0 and c.is_integer():
        raise DomainError(f"c = b+3 不能为非正整数: b={b}")
    if z == 1.0:
        return (b + 2.0) / 2.0
    return float(special.hyp2f1(1.0, b, b + 3.0, z))


def hyp2f1_partial_sum(b: float, z: float, cfg: Optional[SpecFunConfig] = None) -> float:
    """
    ₂F₁(1, b; b+3; z) 的直接级数求和

    项递推 t_{n+1} = t_n · (b+n)/(b+3+n) · z，相邻项小于 tol 或达到 max_terms 时停止
    """
    cfg = cfg or SpecFunConfig()
    if not 0.0 <= z < 1.0:
        raise DomainError(f"级数求和要求 z ∈ [0, 1): z={z}")
    term = 1.0
    total = 1.0
    for n in range(cfg.max_terms):
        term *= (b + n) / (b + 3.0 + n) * z
        total += term
        if abs(term) < cfg.tol * abs(total):
            break
    return total


def arctanh_safe(x):
    """反双曲正切，|x| < 1"""
    x_arr = np.asarray(x, dtype=float)
    if np.any(np.abs(x_arr) >= 1.0):
        raise DomainError(f"arctanh 要求 |x| < 1: x={x}")
    result = np.arctanh(x_arr)
    return float(result) if result.ndim == 0 else result
