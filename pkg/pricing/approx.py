"""
有限期限解析近似
价格 ≈ 扩散部分的 Black-Scholes 形式价格 (等效对数正态波动率 Σ_LN) + 跳跃系数 × T，
实值一侧通过亚式平价关系换算，另提供隐含波动率反解
"""

import logging
import math
from dataclasses import asdict, dataclass
from typing import Any, Dict, Optional

from scipy import optimize

from pricing.asymptotics import otm_call_coeff, otm_put_coeff
from pricing.exceptions import ModelValidationError, NoSolutionError, UnsupportedRegimeError
from pricing.models import DiffusionSpec, Instrument, MarketSpec, ModelSpec
from pricing.quadrature import QuadConfig
from pricing.specfun import norm_cdf

logger = logging.getLogger(__name__)

IVOL_LOWER = 1e-6
IVOL_UPPER = 5.0

# Σ_LN 级数在 |log k| 超过该值后精度下降
SIGMA_LN_WARN = 0.5


@dataclass
class ApproxPrice:
    """近似价格及其分解，total = diffusive + jump_term 仅在直接计算的一侧成立"""
    total: float
    diffusive: float
    jump_term: float
    side_used: str
    instrument: Instrument

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)


@dataclass
class SmilePoint:
    """隐含波动率微笑上的一点"""
    k: float
    implied_vol: float
    side: str
    source: str


def avg_forward(market: MarketSpec, T: float) -> float:
    """平均价的远期 A(T) = S0 (e^{(r-q)T} - 1) / ((r-q)T)"""
    if T <= 0:
        raise ValueError(f"到期时间必须为正: {T}")
    b = (market.r - market.q) * T
    if b == 0.0:
        return market.s0
    return market.s0 * math.expm1(b) / b


def sigma_ln(diffusion: DiffusionSpec, k: float, s0: Optional[float] = None) -> float:
    """等效对数正态波动率 Σ_LN(k) 的三阶级数，局部波动率取 σ(S0)"""
    if k <= 0:
        raise ValueError(f"k 必须为正: {k}")
    if diffusion.kind == "constant":
        sigma = diffusion.sigma_const
    else:
        if s0 is None:
            raise ModelValidationError("局部波动率模型计算 Σ_LN 需要 S0")
        sigma = diffusion.sigma0(s0)
    x = math.log(k)
    if abs(x) > SIGMA_LN_WARN:
        logger.warning("⚠️ |log k|=%.3f 超出 Σ_LN 级数的可靠范围", abs(x))
    return sigma / math.sqrt(3.0) * (1.0 + x / 10.0 - 23.0 * x * x / 2100.0 + x ** 3 / 3500.0)


def black_price(forward: float, K: float, vol: float, T: float, r: float, putcall: str) -> float:
    """以远期为标的的 Black 公式"""
    disc = math.exp(-r * T)
    width = vol * math.sqrt(T)
    if width <= 0.0:
        intrinsic = forward - K if putcall == "call" else K - forward
        return disc * max(intrinsic, 0.0)
    d1 = (math.log(forward / K) + 0.5 * width * width) / width
    d2 = d1 - width
    if putcall == "call":
        return disc * (forward * norm_cdf(d1) - K * norm_cdf(d2))
    return disc * (K * norm_cdf(-d2) - forward * norm_cdf(-d1))


def bs_asian_diffusive(market: MarketSpec, diffusion: DiffusionSpec, K: float, T: float,
                       putcall: str) -> float:
    """扩散部分: 远期 A(T)、波动率 Σ_LN(K/S0) 的 Black 价格"""
    if K <= 0 or T <= 0:
        raise ValueError(f"K 与 T 必须为正: K={K}, T={T}")
    sigma = sigma_ln(diffusion, K / market.s0, market.s0)
    return float(black_price(avg_forward(market, T), K, sigma, T, market.r, putcall))


def approx_price(model: ModelSpec, inst: Instrument, method: Optional[str] = None,
                 quad_cfg: Optional[QuadConfig] = None) -> ApproxPrice:
    """
    固定行权价亚式期权的近似价格

    K > S0 直接计算看涨，K < S0 直接计算看跌，K = S0 按所请求的一侧使用单侧极限系数；
    另一侧由 C - P = e^{-rT}(A(T) - K) 换算
    """
    if inst.style != "fixed":
        raise UnsupportedRegimeError("解析近似只适用于固定行权价亚式期权",
                                     suggestion="浮动行权价请使用 mc 命令或 asym 系数")
    if inst.maturity is None:
        raise ModelValidationError("近似价格需要到期时间 T")

    market, K, T = model.market, inst.strike, inst.maturity
    S0 = market.s0
    if math.isclose(K, S0, rel_tol=1e-12, abs_tol=0.0):
        side = inst.putcall
    else:
        side = "call" if K > S0 else "put"

    diffusive = bs_asian_diffusive(market, model.diffusion, K, T, side)
    coeff_fn = otm_call_coeff if side == "call" else otm_put_coeff
    coeff = coeff_fn(model, K, method=method, quad_cfg=quad_cfg, allow_boundary=True)
    jump_term = coeff.value * T
    direct = diffusive + jump_term

    if inst.putcall == side:
        return ApproxPrice(direct, diffusive, jump_term, f"{side}_direct", inst)

    parity = math.exp(-market.r * T) * (avg_forward(market, T) - K)
    total = direct + parity if inst.putcall == "call" else direct - parity
    return ApproxPrice(total, diffusive, jump_term, f"{inst.putcall}_via_parity", inst)


def implied_vol(price: float, market: MarketSpec, K: float, T: float, putcall: str) -> float:
    """亚式隐含波动率 Σ_A: Black(A(T), K, Σ_A, T) = price，在 [1e-6, 5] 上用 Brent 法求根"""
    if K <= 0 or T <= 0:
        raise ValueError(f"K 与 T 必须为正: K={K}, T={T}")
    forward = avg_forward(market, T)

    def f(vol: float) -> float:
        return black_price(forward, K, vol, T, market.r, putcall) - price

    f_lo, f_hi = f(IVOL_LOWER), f(IVOL_UPPER)
    if f_lo >= 0.0:
        raise NoSolutionError(f"价格 {price:.10g} 不高于内在价值下界 {price + f_lo:.10g}，隐含波动率无解")
    if f_hi <= 0.0:
        raise NoSolutionError(f"价格 {price:.10g} 超过 Σ={IVOL_UPPER} 对应的价格，隐含波动率无解")
    return float(optimize.brentq(f, IVOL_LOWER, IVOL_UPPER, xtol=1e-14, rtol=1e-13, maxiter=200))
