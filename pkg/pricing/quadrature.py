"""
数值积分工具
一维自适应 Gauss-Kronrod 积分 (scipy.integrate.quad)、尾部截断以及带 t 相关积分限的二重迭代积分
"""

import logging
import math
from dataclasses import dataclass
from typing import Callable, Optional, Sequence, Tuple

from scipy import integrate

from pricing.exceptions import QuadratureError

logger = logging.getLogger(__name__)

# 警告但结果可接受时允许的误差倍数
_ACCEPT_FACTOR = 100.0


@dataclass
class QuadConfig:
    """积分配置"""
    abs_tol: float = 1e-10
    rel_tol: float = 1e-8
    max_depth: int = 200
    tail_eps: float = 1e-14

    def __post_init__(self):
        for name in ("abs_tol", "rel_tol"):
            value = getattr(self, name)
            if not 0 < value <= 1e-4:
                raise ValueError(f"{name} 必须位于 (0, 1e-4]: {value}")
        if self.max_depth < 30:
            raise ValueError(f"max_depth 不能小于 30: {self.max_depth}")
        if not 0 < self.tail_eps < 1:
            raise ValueError(f"tail_eps 必须位于 (0, 1): {self.tail_eps}")

    def scaled(self, scale: float) -> "QuadConfig":
        """按价格量级放大绝对误差 (例如 S0)"""
        return QuadConfig(
            abs_tol=min(self.abs_tol * max(scale, 1.0), 1e-4),
            rel_tol=self.rel_tol,
            max_depth=self.max_depth,
            tail_eps=self.tail_eps,
        )


@dataclass
class QuadResult:
    """积分结果"""
    value: float
    error: float


def integrate_1d(f: Callable[[float], float], a: float, b: float,
                 cfg: Optional[QuadConfig] = None,
                 points: Optional[Sequence[float]] = None) -> QuadResult:
    """一维自适应积分，a > b 时按定向积分处理"""
    cfg = cfg or QuadConfig()
    if a == b:
        return QuadResult(0.0, 0.0)

    sign = 1.0
    if a > b:
        a, b, sign = b, a, -1.0

    inner_points = None
    if points is not None and math.isfinite(a) and math.isfinite(b):
        inner_points = [p for p in points if a < p < b] or None

    out = integrate.quad(f, a, b, epsabs=cfg.abs_tol, epsrel=cfg.rel_tol,
                         limit=cfg.max_depth, points=inner_points, full_output=1)
    value, error = out[0], out[1]

    # full_output 下 quad 不发警告，ier != 0 时额外返回提示信息
    if len(out) > 3:
        target = max(cfg.abs_tol, cfg.rel_tol * abs(value))
        if not math.isfinite(value) or error > _ACCEPT_FACTOR * target:
            raise QuadratureError(
                f"积分未收敛 [{a:.6g}, {b:.6g}]: {out[3]}",
                best_estimate=sign * value,
                error_estimate=error,
            )
        logger.debug("积分提示 [%.6g, %.6g]: 误差 %.3e 可接受", a, b, error)

    return QuadResult(sign * value, error)


def truncate_upper(decay_rate: float, tail_eps: float) -> float:
    """尾部截断点 y_max，使 ∫_{y_max}^∞ e^{-r y} dy ≤ tail_eps"""
    if decay_rate <= 0:
        raise ValueError(f"衰减率必须为正: {decay_rate}")
    if not 0 < tail_eps < 1:
        raise ValueError(f"tail_eps 必须位于 (0, 1): {tail_eps}")
    return max(0.0, math.log(1.0 / (decay_rate * tail_eps)) / decay_rate)


def integrate_2d_iterated(f: Callable[[float, float], float],
                          t_range: Tuple[float, float],
                          y_range: Callable[[float], Tuple[float, float]],
                          cfg: Optional[QuadConfig] = None,
                          y_points: Optional[Sequence[float]] = None) -> QuadResult:
    """
    外层对 t、内层对 y 的迭代自适应积分

    y_range(t) 给出内层积分限；下限不小于上限或积分限发散时内层积分按 0 处理
    """
    cfg = cfg or QuadConfig()
    t_lo, t_hi = t_range
    if t_hi <= t_lo:
        return QuadResult(0.0, 0.0)

    inner_errors = []

    def inner(t: float) -> float:
        y_lo, y_hi = y_range(t)
        if not (math.isfinite(y_lo) and math.isfinite(y_hi)) or y_hi <= y_lo:
            return 0.0
        res = integrate_1d(lambda y: f(t, y), y_lo, y_hi, cfg, points=y_points)
        inner_errors.append(res.error)
        return res.value

    outer = integrate_1d(inner, t_lo, t_hi, cfg)
    inner_err = max(inner_errors, default=0.0) * (t_hi - t_lo)
    return QuadResult(outer.value, outer.error + inner_err)
