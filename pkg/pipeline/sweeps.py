"""
参数扫描
隐含波动率微笑 (解析近似或蒙特卡洛) 与期限收敛性研究
"""

import logging
import math
from typing import List, Optional, Sequence

import numpy as np
import pandas as pd

from pipeline.progress_monitor import ProgressMonitor, monitor as default_monitor
from pricing.approx import SmilePoint, approx_price, implied_vol, sigma_ln
from pricing.asymptotics import (
    atm_coeff,
    floating_otm_call_coeff,
    floating_otm_put_coeff,
    otm_call_coeff,
    otm_put_coeff,
)
from pricing.exceptions import NoSolutionError
from pricing.mc import MCConfig, convergence_study, mc_price_strip
from pricing.models import Instrument, ModelSpec
from pricing.quadrature import QuadConfig

logger = logging.getLogger(__name__)

SOURCES = ("approx", "mc")


def smile_grid(k_min: float, k_max: float, n_points: int) -> List[float]:
    """包含 k=1 的等距网格"""
    ks = set(np.round(np.linspace(k_min, k_max, n_points), 12).tolist())
    if k_min <= 1.0 <= k_max:
        ks.add(1.0)
    return sorted(ks)


def _smile_instruments(model: ModelSpec, T: float, ks: Sequence[float]) -> List[Instrument]:
    """k<1 取看跌，k>1 取看涨，k=1 两侧都取"""
    S0 = model.market.s0
    out = []
    for k in ks:
        if k <= 1.0:
            out.append(Instrument("fixed", "put", strike=k * S0, maturity=T))
        if k >= 1.0:
            out.append(Instrument("fixed", "call", strike=k * S0, maturity=T))
    return out


def smile_sweep(model: ModelSpec, T: float, ks: Sequence[float], source: str = "approx",
                mc_cfg: Optional[MCConfig] = None, quad_cfg: Optional[QuadConfig] = None,
                monitor: Optional[ProgressMonitor] = None) -> pd.DataFrame:
    """计算亚式隐含波动率微笑，列: k, side, price, implied_vol, sigma_ln, source"""
    if source not in SOURCES:
        raise ValueError(f"未知的价格来源: {source}")
    monitor = monitor or default_monitor
    instruments = _smile_instruments(model, T, ks)
    monitor.start_stage(f"微笑 {source}", len(instruments), {"T": T})

    if source == "mc":
        prices = [res.price for res in mc_price_strip(model, instruments, mc_cfg)]
    else:
        prices = [approx_price(model, inst, quad_cfg=quad_cfg).total for inst in instruments]

    S0 = model.market.s0
    rows = []
    for inst, price in zip(instruments, prices):
        k = inst.strike / S0
        try:
            vol = implied_vol(price, model.market, inst.strike, T, inst.putcall)
        except NoSolutionError as e:
            monitor.update_stage(error=f"k={k:.4f} {inst.putcall}: {e}")
            vol = math.nan
        point = SmilePoint(k=k, implied_vol=vol, side=inst.putcall, source=source)
        rows.append({
            "k": point.k,
            "side": point.side,
            "price": price,
            "implied_vol": point.implied_vol,
            "sigma_ln": sigma_ln(model.diffusion, k, S0),
            "source": point.source,
        })
        monitor.record_item(f"k={k:.4f} {inst.putcall}", None, f"Σ_A={vol:.6f}")

    monitor.end_stage()
    return pd.DataFrame(rows)


def _theory_coefficient(model: ModelSpec, inst: Instrument, quad_cfg: Optional[QuadConfig]) -> float:
    """与收敛性研究对照的短期限系数，平值取 √T 系数"""
    S0 = model.market.s0
    if inst.style == "fixed":
        if math.isclose(inst.strike, S0, rel_tol=1e-12):
            return atm_coeff(model, inst.putcall).value
        fn = otm_call_coeff if inst.putcall == "call" else otm_put_coeff
        return fn(model, inst.strike, quad_cfg=quad_cfg).value
    fn = floating_otm_call_coeff if inst.putcall == "call" else floating_otm_put_coeff
    return fn(model, inst.kappa, quad_cfg=quad_cfg, allow_boundary=True).value


def maturity_convergence(model: ModelSpec, inst: Instrument, maturities: Sequence[float],
                         mc_cfg: Optional[MCConfig] = None, quad_cfg: Optional[QuadConfig] = None,
                         monitor: Optional[ProgressMonitor] = None) -> pd.DataFrame:
    """期限收敛性: 蒙特卡洛缩放价格与短期限系数的差距"""
    monitor = monitor or default_monitor
    monitor.start_stage("期限收敛性", len(maturities), {"合约": f"{inst.style} {inst.putcall}"})

    df = convergence_study(model, inst, sorted(maturities, reverse=True), mc_cfg)
    theory = _theory_coefficient(model, inst, quad_cfg)
    atm = inst.style == "fixed" and math.isclose(inst.strike, model.market.s0, rel_tol=1e-12)
    scaled = df["price_over_sqrtT"] if atm else df["price_over_T"]
    df["theory"] = theory
    df["abs_diff"] = (scaled - theory).abs()

    for _, row in df.iterrows():
        monitor.record_item(f"T={row['T']:.6g}", None, f"|差| = {row['abs_diff']:.6g}")
    monitor.end_stage()
    return df
