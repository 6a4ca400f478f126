#!/usr/bin/env python3
"""
测试模型定义: 补偿项、Lévy 密度、CGMY 参数换算、假设检查与模型文件读写
"""

import sys
import os
import json
import math
from dataclasses import replace
from pathlib import Path
sys.path.append(os.path.dirname(os.path.dirname(os.path.dirname(os.path.abspath(__file__)))))

import numpy as np
import pytest
from scipy import integrate, stats

from pricing.exceptions import (
    AssumptionViolationError,
    CompensatorUndefinedError,
    DensitySingularityError,
    InfiniteMeanError,
    ModelValidationError,
)
from pricing.models import (
    DiffusionSpec,
    DoubleExpJumps,
    GenericCP,
    Instrument,
    MarketSpec,
    MertonJumps,
    ModelSpec,
    TabulatedDensity,
    TabulatedLocalVol,
    VGJumps,
    check_assumptions,
    compensator,
    levy_density,
    load_model_spec,
    model_from_dict,
    model_to_dict,
    require_assumptions,
)

PROJECT_ROOT = Path(__file__).resolve().parents[2]
MODELS_DIR = PROJECT_ROOT / "data" / "models"


def normal_generic(lam=0.175, a=-0.39, d=0.339) -> GenericCP:
    """用一般复合泊松形式表示的 Merton 跳跃"""
    return GenericCP(lam=lam, density=lambda y: stats.norm.pdf(y, a, d),
                     decay_up=3.0, decay_down=3.0, support=(a - 10 * d, a + d * d + 10 * d))


def test_compensators():
    """三类跳跃的补偿项"""
    print("🧮 测试补偿项")
    merton = MertonJumps(lam=0.175, jump_mean=-0.39, jump_sd=0.339)
    assert compensator(merton) == pytest.approx(-0.049507, abs=1e-6)

    kou = DoubleExpJumps(lam=3.0, p_up=0.6, eta1=25.0, eta2=25.0)
    expected = 3.0 * (0.6 * 25 / 24 + 0.4 * 25 / 26 - 1)
    assert compensator(kou) == pytest.approx(expected, rel=1e-12)

    vg = VGJumps(sigma_vg=0.4344, nu=0.1083, theta=-0.3726)
    assert compensator(vg) == pytest.approx(-0.27413828, abs=1e-7)
    print("✅ 补偿项正确")


def test_vg_cgmy_parameters():
    """VG 的 (C, G, M) 及其反解"""
    vg = VGJumps(sigma_vg=0.4344, nu=0.1083, theta=-0.3726)
    assert vg.C == pytest.approx(9.233610, abs=1e-5)
    assert vg.G == pytest.approx(8.113213, abs=1e-5)
    assert vg.M == pytest.approx(12.062269, abs=1e-5)

    back = VGJumps.from_cgmy(vg.C, vg.G, vg.M)
    assert back.sigma_vg == pytest.approx(vg.sigma_vg, rel=1e-12)
    assert back.nu == pytest.approx(vg.nu, rel=1e-12)
    assert back.theta == pytest.approx(vg.theta, rel=1e-12)

    with pytest.raises(ModelValidationError):
        VGJumps.from_cgmy(1.0, -1.0, 2.0)


def test_vg_density_and_compensator_errors():
    vg = VGJumps(sigma_vg=0.4344, nu=0.1083, theta=-0.3726)
    with pytest.raises(DensitySingularityError):
        levy_density(vg, 0.0)
    with pytest.raises(DensitySingularityError):
        levy_density(vg, np.array([-0.1, 0.0, 0.1]))

    y = np.array([-0.2, 0.3])
    expected = vg.C * np.exp(np.array([-vg.G * 0.2, -vg.M * 0.3])) / np.abs(y)
    assert np.allclose(levy_density(vg, y), expected, rtol=1e-12)

    # (θ+σ²/2)ν ≥ 1
    explosive = VGJumps(sigma_vg=1.0, nu=2.0, theta=0.5)
    with pytest.raises(CompensatorUndefinedError):
        compensator(explosive)


def test_double_exp_infinite_mean():
    kou = DoubleExpJumps(lam=1.0, p_up=0.5, eta1=0.8, eta2=10.0)
    with pytest.raises(InfiniteMeanError):
        compensator(kou)
    # 没有上跳时 η1 不起作用
    down_only = DoubleExpJumps(lam=1.0, p_up=0.0, eta1=0.8, eta2=10.0)
    assert compensator(down_only) == pytest.approx(10.0 / 11.0 - 1.0, rel=1e-12)
    assert down_only.tail_bounds(1e-14)[1] == 0.0


def test_merton_density_integrates_to_intensity():
    merton = MertonJumps(lam=0.175, jump_mean=-0.39, jump_sd=0.339)
    y_lo, y_hi = merton.tail_bounds(1e-14)
    grid = np.linspace(y_lo, y_hi, 20001)
    mass = integrate.trapezoid(levy_density(merton, grid), grid)
    assert mass == pytest.approx(0.175, rel=1e-8)


def test_generic_cp_matches_merton():
    """一般复合泊松用正态密度时与 Merton 一致"""
    print("🧮 测试一般复合泊松跳跃")
    generic = normal_generic()
    assert generic.total_mass() == pytest.approx(1.0, abs=1e-9)
    assert compensator(generic) == pytest.approx(-0.049507, abs=1e-6)

    model = ModelSpec(MarketSpec(1000.0), DiffusionSpec(sigma_const=0.126), generic)
    names = {c.name: c for c in check_assumptions(model)}
    assert names["density_normalized"].passed
    assert names["jump_exp_moment"].passed

    rng = np.random.default_rng(7)
    draws = generic.sample_sizes(rng, 200000)
    assert draws.mean() == pytest.approx(-0.39, abs=0.005)
    assert draws.std() == pytest.approx(0.339, abs=0.005)
    print("✅ 一般复合泊松与 Merton 一致")


def test_tabulated_density():
    dens = TabulatedDensity((-1.0, 0.0, 1.0), (0.0, 1.0, 0.0))
    assert dens(0.0) == pytest.approx(1.0)
    assert dens(0.5) == pytest.approx(0.5)
    assert dens(2.0) == 0.0
    with pytest.raises(ModelValidationError):
        TabulatedDensity((0.0, 1.0, 0.5), (1.0, 1.0, 1.0))
    with pytest.raises(ModelValidationError):
        TabulatedDensity((0.0, 0.5, 1.0), (1.0, -1.0, 1.0))


def test_local_vol():
    lv = TabulatedLocalVol((800.0, 1000.0, 1200.0), (0.3, 0.2, 0.1))
    diff = DiffusionSpec(kind="local", local_vol=lv, sigma_lo=0.1, sigma_hi=0.3)
    assert diff.sigma0(1000.0) == pytest.approx(0.2)
    assert diff.sigma0(1100.0) == pytest.approx(0.15)
    assert np.allclose(diff.sigma_at(np.array([500.0, 5000.0])), [0.3, 0.1])

    with pytest.raises(ModelValidationError):
        DiffusionSpec(kind="local", local_vol=lv, sigma_lo=0.0, sigma_hi=0.3)

    # 声明边界比实际范围窄
    narrow = DiffusionSpec(kind="local", local_vol=lv, sigma_lo=0.15, sigma_hi=0.3)
    model = ModelSpec(MarketSpec(1000.0), narrow, MertonJumps(0.1, 0.0, 0.1))
    with pytest.raises(AssumptionViolationError) as info:
        require_assumptions(model)
    assert info.value.checks[0].name == "diffusion_bounded"


def test_assumption_checks():
    """假设检查: 错误级阻断，警告级放行"""
    print("🔍 测试假设检查")
    market = MarketSpec(1000.0)

    heavy = ModelSpec(market, DiffusionSpec(sigma_const=0.2), DoubleExpJumps(1.0, 0.5, 1.5, 10.0))
    report = {c.name: c for c in check_assumptions(heavy)}
    assert not report["jump_exp_moment"].passed
    with pytest.raises(AssumptionViolationError):
        require_assumptions(heavy)

    # σ=0 与 η2 ≤ 2 只是警告
    pure_jump = ModelSpec(market, DiffusionSpec(sigma_const=0.0), DoubleExpJumps(1.0, 0.5, 25.0, 1.5))
    report = require_assumptions(pure_jump)
    warnings = {c.name for c in report if not c.passed}
    assert warnings == {"diffusion_bounded", "jump_down_decay"}

    vg_light_tail = ModelSpec(market, DiffusionSpec(sigma_const=0.1), VGJumps.from_cgmy(5.0, 5.0, 1.8))
    with pytest.raises(AssumptionViolationError):
        require_assumptions(vg_light_tail)
    print("✅ 假设检查正确")


def test_instrument_validation():
    with pytest.raises(ModelValidationError):
        Instrument("fixed", "call")
    with pytest.raises(ModelValidationError):
        Instrument("floating", "put", kappa=-1.0)
    with pytest.raises(ModelValidationError):
        Instrument("fixed", "straddle", strike=100.0)
    with pytest.raises(ModelValidationError):
        Instrument("fixed", "call", strike=100.0, maturity=0.0)
    inst = Instrument("european", "put", strike=950.0)
    assert inst.maturity is None


def test_market_validation():
    with pytest.raises(ModelValidationError):
        MarketSpec(0.0)
    with pytest.raises(ModelValidationError):
        MarketSpec(100.0, r=math.inf)


def test_load_model_files():
    """读取随附的模型文件"""
    print("📂 测试模型文件读取")
    mjd = load_model_spec(MODELS_DIR / "mjd.json")
    assert isinstance(mjd.jumps, MertonJumps)
    assert mjd.jumps.lam == 0.175
    assert mjd.diffusion.sigma_const == 0.126

    kou = load_model_spec(MODELS_DIR / "kou.json")
    assert isinstance(kou.jumps, DoubleExpJumps)
    assert kou.jumps.eta1 == 25.0

    vg = load_model_spec(MODELS_DIR / "vg.json")
    assert isinstance(vg.jumps, VGJumps)
    assert vg.market.s0 == 1000.0

    with pytest.raises(FileNotFoundError):
        load_model_spec(MODELS_DIR / "missing.json")
    print("✅ 模型文件读取正常")


def test_model_dict_fields(tmp_path):
    """写出的字典可以原样读回"""
    lv = TabulatedLocalVol((900.0, 1100.0), (0.25, 0.15))
    model = ModelSpec(
        MarketSpec(1000.0, r=0.02, q=0.01),
        DiffusionSpec(kind="local", local_vol=lv, sigma_lo=0.15, sigma_hi=0.25),
        GenericCP(lam=0.5, density=TabulatedDensity((-0.5, 0.0, 0.5), (0.0, 2.0, 0.0)),
                  decay_up=5.0, decay_down=5.0, support=(-0.5, 0.5)),
    )
    data = model_to_dict(model)
    assert data["jumps"]["lambda"] == 0.5
    path = tmp_path / "model.json"
    path.write_text(json.dumps(data), encoding="utf-8")
    loaded = load_model_spec(path)
    assert loaded.market == model.market
    assert loaded.diffusion.sigma0(1000.0) == pytest.approx(0.2)
    assert loaded.jumps.total_mass() == pytest.approx(1.0, abs=1e-8)

    with pytest.raises(ModelValidationError):
        model_from_dict({"market": {"s0": 1.0}, "diffusion": {}})
    with pytest.raises(ModelValidationError):
        model_from_dict({"market": {"s0": 1.0}, "diffusion": {}, "jumps": {"kind": "merton", "lambda": 1.0}})
    with pytest.raises(ModelValidationError):
        model_from_dict({"market": {"s0": 1.0}, "diffusion": {}, "jumps": {"kind": "cauchy"}})


def test_replace_keeps_jumps():
    mjd = load_model_spec(MODELS_DIR / "mjd.json")
    pure = replace(mjd, diffusion=DiffusionSpec(sigma_const=0.0))
    assert pure.jumps is mjd.jumps


if __name__ == "__main__":
    sys.exit(pytest.main([__file__, "-v"]))
