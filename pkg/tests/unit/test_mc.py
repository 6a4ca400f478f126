#!/usr/bin/env python3
"""
测试蒙特卡洛模拟: 可复现性、鞅性质、跳跃计数与错误处理
"""

import sys
import os
import math
from dataclasses import replace
from pathlib import Path
sys.path.append(os.path.dirname(os.path.dirname(os.path.dirname(os.path.abspath(__file__)))))

import numpy as np
import pytest

from pricing.exceptions import GammaSamplerError, ModelValidationError
from pricing.mc import MCConfig, convergence_study, mc_price, mc_price_strip, simulate_paths
from pricing.models import DiffusionSpec, Instrument, MarketSpec, TabulatedLocalVol, load_model_spec

MODELS_DIR = Path(__file__).resolve().parents[2] / "data" / "models"
MJD = load_model_spec(MODELS_DIR / "mjd.json")
KOU = load_model_spec(MODELS_DIR / "kou.json")
VG = load_model_spec(MODELS_DIR / "vg.json")


def small_config(**kwargs) -> MCConfig:
    base = dict(n_paths=20000, n_steps=50, seed=123, batch_size=5000, threads=1, progress=False)
    base.update(kwargs)
    return MCConfig(**base)


def test_deterministic_across_threads():
    """相同种子在不同线程数下结果逐位相同"""
    print("🎲 测试可复现性")
    inst = Instrument("fixed", "call", strike=1020.0, maturity=1.0 / 52.0)
    single = mc_price(MJD, inst, small_config(threads=1))
    multi = mc_price(MJD, inst, small_config(threads=4))
    assert single.price == multi.price
    assert single.std_err == multi.std_err

    other = mc_price(MJD, inst, small_config(seed=124))
    assert other.price != single.price
    print("✅ 结果与线程数无关")


@pytest.mark.parametrize("model", [MJD, KOU, VG])
def test_martingale(model):
    """E[S_T] = S0·e^{(r-q)T}"""
    market = MarketSpec(1000.0, r=0.04, q=0.01)
    model = replace(model, market=market)
    T = 1.0 / 12.0
    terminals = np.concatenate([b.terminals for b in simulate_paths(model, T, small_config())])
    expected = market.s0 * math.exp((market.r - market.q) * T)
    std_err = terminals.std(ddof=1) / math.sqrt(len(terminals))
    assert abs(terminals.mean() - expected) < 4.0 * std_err


def test_jump_counts_are_poisson():
    """每条路径的跳跃次数服从 Poisson(λT)"""
    T = 1.0
    counts = np.concatenate([b.jump_counts for b in simulate_paths(KOU, T, small_config(n_steps=10))])
    lam_t = KOU.jumps.lam * T
    se = math.sqrt(lam_t / len(counts))
    assert abs(counts.mean() - lam_t) < 5.0 * se
    assert counts.var() == pytest.approx(lam_t, rel=0.05)

    vg_batch = next(simulate_paths(VG, 0.1, small_config(n_steps=10)))
    assert vg_batch.jump_counts is None


def test_batches_in_order():
    batches = list(simulate_paths(MJD, 0.1, small_config(n_paths=12000, n_steps=10, threads=3)))
    assert [b.index for b in batches] == [0, 1, 2]
    assert [len(b.averages) for b in batches] == [5000, 5000, 2000]


def test_average_is_trapezoid():
    """无跳跃、零波动率时平均价为确定值"""
    flat = replace(MJD, market=MarketSpec(100.0, r=0.1),
                   diffusion=DiffusionSpec(sigma_const=0.0))
    flat = replace(flat, jumps=replace(MJD.jumps, lam=0.0))
    n_steps, T = 4, 1.0
    batch = next(simulate_paths(flat, T, small_config(n_paths=1000, batch_size=1000, n_steps=n_steps)))
    path = 100.0 * np.exp(0.1 * np.linspace(0.0, T, n_steps + 1))
    expected = (0.5 * (path[0] + path[-1]) + path[1:-1].sum()) / n_steps
    assert np.allclose(batch.averages, expected, rtol=1e-12)
    assert np.allclose(batch.terminals, path[-1], rtol=1e-12)


def test_price_strip_shares_paths():
    """同一组路径定价时看涨看跌满足平价"""
    T = 1.0 / 52.0
    K = 1000.0
    call, put = mc_price_strip(MJD, [Instrument("fixed", "call", strike=K, maturity=T),
                                     Instrument("fixed", "put", strike=K, maturity=T)], small_config())
    averages = np.concatenate([b.averages for b in simulate_paths(MJD, T, small_config())])
    assert call.price - put.price == pytest.approx(averages.mean() - K, abs=1e-9)

    with pytest.raises(ModelValidationError):
        mc_price_strip(MJD, [Instrument("fixed", "call", strike=K, maturity=T),
                             Instrument("fixed", "call", strike=K, maturity=2 * T)], small_config())
    with pytest.raises(ModelValidationError):
        mc_price(MJD, Instrument("fixed", "call", strike=K), small_config())
    assert mc_price_strip(MJD, [], small_config()) == []


def test_floating_and_european_payoffs():
    T = 1.0 / 12.0
    floating = mc_price(MJD, Instrument("floating", "put", kappa=1.06, maturity=T), small_config())
    european = mc_price(MJD, Instrument("european", "put", strike=940.0, maturity=T), small_config())
    assert floating.price > 0 and european.price > 0
    # 浮动看跌 (A - κS_T)^+ 在 κ=1.06 时约为 21.9·T
    assert abs(floating.price / T - 21.88) < 4.0 * floating.std_err / T + 1.0


def test_antithetic():
    """对偶变量不改变价格的期望"""
    inst = Instrument("fixed", "call", strike=1000.0, maturity=1.0 / 52.0)
    plain = mc_price(MJD, inst, small_config())
    anti = mc_price(MJD, inst, small_config(antithetic=True))
    combined = math.sqrt(plain.std_err ** 2 + anti.std_err ** 2)
    assert abs(plain.price - anti.price) < 4.0 * combined
    assert anti.std_err < plain.std_err

    with pytest.raises(ValueError):
        MCConfig(n_paths=20001, batch_size=5000, antithetic=True)


def test_local_vol_matches_constant():
    """常数网格局部波动率与常数波动率的路径相同"""
    T = 1.0 / 12.0
    lv = TabulatedLocalVol((500.0, 2000.0), (0.126, 0.126))
    local = replace(MJD, diffusion=DiffusionSpec(kind="local", local_vol=lv, sigma_lo=0.1, sigma_hi=0.2))
    inst = Instrument("fixed", "call", strike=1020.0, maturity=T)
    cfg = small_config(n_paths=4000, batch_size=2000, n_steps=20)
    assert mc_price(local, inst, cfg).price == pytest.approx(mc_price(MJD, inst, cfg).price, rel=1e-9)


def test_gamma_sampler_error():
    """时间步过细时 Gamma 抽样报错"""
    with pytest.raises(GammaSamplerError):
        mc_price(VG, Instrument("fixed", "call", strike=1000.0, maturity=1e-6), small_config(n_steps=1000))


def test_config_validation():
    with pytest.raises(ValueError):
        MCConfig(n_paths=10)
    with pytest.raises(ValueError):
        MCConfig(n_steps=1)
    with pytest.raises(ValueError):
        MCConfig(threads=-1)
    assert MCConfig(threads=3).workers == 3
    assert MCConfig(threads=0).workers >= 1


def test_convergence_study_columns():
    inst = Instrument("fixed", "call", strike=1000.0)
    df = convergence_study(MJD, inst, [1.0 / 12.0, 1.0 / 52.0], small_config(n_paths=4000, n_steps=20))
    assert list(df.columns) == ["T", "price", "std_err", "price_over_T", "std_err_over_T", "price_over_sqrtT"]
    assert len(df) == 2
    assert (df["price"] > 0).all()
    assert df["price_over_sqrtT"].iloc[1] == pytest.approx(df["price"].iloc[1] * math.sqrt(52.0), rel=1e-12)


if __name__ == "__main__":
    sys.exit(pytest.main([__file__, "-v"]))
