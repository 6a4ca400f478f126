"""
短期限渐近系数

虚值亚式期权价格按 T 线性衰减 (系数来自跳跃部分)，平值价格按 √T 衰减 (系数来自扩散部分)。
每个虚值系数都有两条计算路径:
  - closed_form: Merton / Kou / VG 的闭式或一维积分表达式
  - quadrature: 对 Lévy 测度做通用二重迭代积分，适用于任意跳跃模型
"""

import logging
import math
from dataclasses import asdict, dataclass
from typing import Any, Callable, Dict, Optional, Tuple

from pricing.exceptions import ModelValidationError, RegimeError, UnsupportedRegimeError
from pricing.models import (
    DoubleExpJumps,
    Instrument,
    MertonJumps,
    ModelSpec,
    VGJumps,
    require_assumptions,
)
from pricing.quadrature import QuadConfig, integrate_1d, integrate_2d_iterated
from pricing.specfun import arctanh_safe, hyp2f1_restricted, log_integral, norm_cdf

logger = logging.getLogger(__name__)

REGIME_OTM = "OTM"
REGIME_ATM = "ATM"
REGIME_BOUNDARY = "BOUNDARY"  # 虚值公式在 K=S0 (κ=1) 处的单侧极限

CLOSED_FORM = "closed_form"
QUADRATURE = "quadrature"
METHODS = (CLOSED_FORM, QUADRATURE)


@dataclass
class AsymCoeff:
    """渐近系数: OTM/BOUNDARY 为价格/T 的极限，ATM 为价格/√T 的极限"""
    value: float
    regime: str
    method: str
    instrument: Instrument
    degenerate: bool = False
    error_estimate: float = 0.0

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)


def _at_spot(x: float, ref: float) -> bool:
    return math.isclose(x, ref, rel_tol=1e-12, abs_tol=0.0)


def _quad_cfg(model: ModelSpec, cfg: Optional[QuadConfig]) -> QuadConfig:
    return (cfg or QuadConfig()).scaled(model.market.s0)


def _resolve_method(model: ModelSpec, method: Optional[str], closed: Dict[str, Callable]) -> str:
    kind = model.jumps.kind
    if method is None:
        return CLOSED_FORM if kind in closed else QUADRATURE
    if method not in METHODS:
        raise ValueError(f"未知的计算方法: {method}")
    if method == CLOSED_FORM and kind not in closed:
        raise ModelValidationError(f"{kind} 跳跃模型在该区间没有闭式解，请使用 quadrature")
    return method


# ---------------------------------------------------------------- 闭式: 固定行权价

def merton_tail_integrals(level: float, jump_mean: float, jump_sd: float) -> Tuple[float, float, float, float]:
    """正态跳跃密度 φ 在 level 两侧的截断矩

    I1 = ∫_level^∞ φ, I2 = ∫_level^∞ e^y φ, I3 = ∫_{-∞}^level φ, I4 = ∫_{-∞}^level e^y φ
    """
    a, d = jump_mean, jump_sd
    m1 = math.exp(a + 0.5 * d * d)
    i1 = float(norm_cdf((a - level) / d))
    i2 = float(m1 * norm_cdf((a + d * d - level) / d))
    i3 = float(norm_cdf((level - a) / d))
    i4 = float(m1 * norm_cdf((level - a - d * d) / d))
    return i1, i2, i3, i4


def _merton_fixed_call(model: ModelSpec, K: float, cfg: QuadConfig) -> Tuple[float, float]:
    j: MertonJumps = model.jumps
    S0, a, d = model.market.s0, j.jump_mean, j.jump_sd
    if j.lam == 0:
        return 0.0, 0.0

    def g(t: float) -> float:
        if t >= 1.0:
            return 0.0
        ls = math.log((K - S0 * t) / (S0 * (1.0 - t)))
        i1, i2, _, _ = merton_tail_integrals(ls, a, d)
        return (S0 * t - K) * i1 + S0 * (1.0 - t) * i2

    res = integrate_1d(g, 0.0, 1.0, cfg)
    return j.lam * res.value, j.lam * res.error


def _merton_fixed_put(model: ModelSpec, K: float, cfg: QuadConfig) -> Tuple[float, float]:
    j: MertonJumps = model.jumps
    S0, a, d = model.market.s0, j.jump_mean, j.jump_sd
    if j.lam == 0:
        return 0.0, 0.0

    def g(t: float) -> float:
        if K - S0 * t <= 0.0:
            return 0.0
        ls = math.log((K - S0 * t) / (S0 * (1.0 - t)))
        _, _, i3, i4 = merton_tail_integrals(ls, a, d)
        return (K - S0 * t) * i3 - S0 * (1.0 - t) * i4

    res = integrate_1d(g, 0.0, K / S0, cfg)
    return j.lam * res.value, j.lam * res.error


def _kou_fixed_call(model: ModelSpec, K: float, cfg: QuadConfig) -> Tuple[float, float]:
    j: DoubleExpJumps = model.jumps
    S0 = model.market.s0
    if j.lam == 0 or j.p_up == 0:
        return 0.0, 0.0
    e1 = j.eta1
    value = (j.lam * j.p_up * S0 / (e1 * e1 - 1.0) * (K / S0) ** (1.0 - e1)
             * hyp2f1_restricted(e1 - 1.0, S0 / K))
    return value, 0.0


def _kou_fixed_put(model: ModelSpec, K: float, cfg: QuadConfig) -> Tuple[float, float]:
    j: DoubleExpJumps = model.jumps
    S0 = model.market.s0
    if j.lam == 0 or j.p_up == 1:
        return 0.0, 0.0
    e2 = j.eta2
    value = (j.lam * (1.0 - j.p_up) * S0 / ((e2 + 1.0) * (e2 + 2.0)) * (K / S0) ** (e2 + 2.0)
             * hyp2f1_restricted(e2, K / S0))
    return value, 0.0


def _vg_fixed_call(model: ModelSpec, K: float, cfg: QuadConfig) -> Tuple[float, float]:
    j: VGJumps = model.jumps
    S0, C, M = model.market.s0, j.C, j.M
    if _at_spot(K, S0):
        # li(1) 发散，取 Frullani 极限
        return S0 * C * arctanh_safe(1.0 / (2.0 * M - 1.0)), 0.0

    def J(t: float, a: float) -> float:
        z = S0 * (1.0 - t) / (K - S0 * t)
        return -C * log_integral(z ** a)

    def g(t: float) -> float:
        if t >= 1.0:
            return 0.0
        return (S0 * t - K) * J(t, M) + S0 * (1.0 - t) * J(t, M - 1.0)

    res = integrate_1d(g, 0.0, 1.0, cfg)
    return res.value, res.error


def _vg_fixed_put(model: ModelSpec, K: float, cfg: QuadConfig) -> Tuple[float, float]:
    j: VGJumps = model.jumps
    S0, C, G = model.market.s0, j.C, j.G
    if _at_spot(K, S0):
        return S0 * C * arctanh_safe(1.0 / (2.0 * G + 1.0)), 0.0

    def J(t: float, a: float) -> float:
        w = (K - S0 * t) / (S0 * (1.0 - t))
        return -C * log_integral(w ** a)

    def g(t: float) -> float:
        if K - S0 * t <= 0.0:
            return 0.0
        return (K - S0 * t) * J(t, G) - S0 * (1.0 - t) * J(t, G + 1.0)

    res = integrate_1d(g, 0.0, K / S0, cfg)
    return res.value, res.error


_FIXED_CALL_CLOSED = {"merton": _merton_fixed_call, "double_exp": _kou_fixed_call, "vg": _vg_fixed_call}
_FIXED_PUT_CLOSED = {"merton": _merton_fixed_put, "double_exp": _kou_fixed_put, "vg": _vg_fixed_put}


# ---------------------------------------------------------------- 闭式: 浮动行权价 (Merton)

def _log_y0(t: float, kappa: float) -> float:
    """log y0(t)，y0(t) = t / (κ-1+t)；κ=1 时恒为 0"""
    if kappa == 1.0:
        return 0.0
    return math.log(t) - math.log(kappa - 1.0 + t)


def _merton_floating_call(model: ModelSpec, kappa: float, cfg: QuadConfig) -> Tuple[float, float]:
    j: MertonJumps = model.jumps
    S0, a, d = model.market.s0, j.jump_mean, j.jump_sd
    if j.lam == 0:
        return 0.0, 0.0
    t_lo = 1.0 - kappa

    def g(t: float) -> float:
        if t <= t_lo or t <= 0.0:
            return 0.0
        i1, i2, _, _ = merton_tail_integrals(_log_y0(t, kappa), a, d)
        return -t * i1 + (kappa - 1.0 + t) * i2

    res = integrate_1d(g, max(t_lo, 0.0), 1.0, cfg)
    return j.lam * S0 * res.value, j.lam * S0 * res.error


def _merton_floating_put(model: ModelSpec, kappa: float, cfg: QuadConfig) -> Tuple[float, float]:
    j: MertonJumps = model.jumps
    S0, a, d = model.market.s0, j.jump_mean, j.jump_sd
    if j.lam == 0:
        return 0.0, 0.0

    def g(t: float) -> float:
        if t <= 0.0:
            return 0.0
        _, _, i3, i4 = merton_tail_integrals(_log_y0(t, kappa), a, d)
        return t * i3 - (kappa - 1.0 + t) * i4

    res = integrate_1d(g, 0.0, 1.0, cfg)
    return j.lam * S0 * res.value, j.lam * S0 * res.error


_FLOATING_CALL_CLOSED = {"merton": _merton_floating_call}
_FLOATING_PUT_CLOSED = {"merton": _merton_floating_put}


# ---------------------------------------------------------------- 通用 Lévy 测度积分

def _fixed_call_quad(model: ModelSpec, K: float, cfg: QuadConfig) -> Tuple[float, float]:
    jumps, S0 = model.jumps, model.market.s0
    y_lo, y_hi = jumps.tail_bounds(cfg.tail_eps)
    if y_hi <= math.log(K / S0):
        return 0.0, 0.0
    # y*(t) = y_hi 处之后内层积分为空
    t_max = min(1.0, (S0 * math.exp(y_hi) - K) / (S0 * math.expm1(y_hi)))

    def y_star(t: float) -> float:
        return math.log((K - S0 * t) / (S0 * (1.0 - t)))

    def f(t: float, y: float) -> float:
        return (K - S0 * t) * math.expm1(y - y_star(t)) * jumps.levy_density(y)

    res = integrate_2d_iterated(f, (0.0, t_max), lambda t: (max(y_star(t), y_lo), y_hi), cfg)
    return res.value, res.error


def _fixed_put_quad(model: ModelSpec, K: float, cfg: QuadConfig) -> Tuple[float, float]:
    jumps, S0 = model.jumps, model.market.s0
    y_lo, y_hi = jumps.tail_bounds(cfg.tail_eps)
    if y_lo >= math.log(K / S0):
        return 0.0, 0.0
    t_max = min(K / S0, (K - S0 * math.exp(y_lo)) / (-S0 * math.expm1(y_lo)))

    def y_star(t: float) -> float:
        return math.log((K - S0 * t) / (S0 * (1.0 - t)))

    def f(t: float, y: float) -> float:
        return -(K - S0 * t) * math.expm1(y - y_star(t)) * jumps.levy_density(y)

    res = integrate_2d_iterated(f, (0.0, t_max), lambda t: (y_lo, min(y_star(t), y_hi)), cfg)
    return res.value, res.error


def _floating_call_quad(model: ModelSpec, kappa: float, cfg: QuadConfig) -> Tuple[float, float]:
    jumps, S0 = model.jumps, model.market.s0
    y_lo, y_hi = jumps.tail_bounds(cfg.tail_eps)
    if y_hi <= -math.log(kappa):
        return 0.0, 0.0
    t_lo = max(1.0 - kappa, math.exp(y_hi) * (1.0 - kappa) / math.expm1(y_hi))

    def log_y0(t: float) -> float:
        return _log_y0(t, kappa)

    def f(t: float, y: float) -> float:
        return S0 * t * math.expm1(y - log_y0(t)) * jumps.levy_density(y)

    res = integrate_2d_iterated(f, (t_lo, 1.0), lambda t: (max(log_y0(t), y_lo), y_hi), cfg)
    return res.value, res.error


def _floating_put_quad(model: ModelSpec, kappa: float, cfg: QuadConfig) -> Tuple[float, float]:
    jumps, S0 = model.jumps, model.market.s0
    y_lo, y_hi = jumps.tail_bounds(cfg.tail_eps)
    if y_lo >= -math.log(kappa):
        return 0.0, 0.0
    t_lo = (kappa - 1.0) * math.exp(y_lo) / (-math.expm1(y_lo))

    def log_y0(t: float) -> float:
        return _log_y0(t, kappa)

    def f(t: float, y: float) -> float:
        return -S0 * t * math.expm1(y - log_y0(t)) * jumps.levy_density(y)

    res = integrate_2d_iterated(f, (t_lo, 1.0), lambda t: (y_lo, min(log_y0(t), y_hi)), cfg)
    return res.value, res.error


# ---------------------------------------------------------------- 对外接口

def _fixed_coeff(model: ModelSpec, K: float, putcall: str, method: Optional[str],
                 quad_cfg: Optional[QuadConfig], allow_boundary: bool) -> AsymCoeff:
    S0 = model.market.s0
    boundary = _at_spot(K, S0)
    if boundary and not allow_boundary:
        raise RegimeError("K=S0 属于平值区间，虚值公式不适用",
                          suggestion="使用 --regime atm 获取 √T 系数，或 --regime boundary 获取单侧极限")
    if putcall == "call" and K < S0 and not boundary:
        raise RegimeError(f"K={K} < S0={S0} 时看涨期权为实值",
                          suggestion="改用 --putcall put，再通过亚式平价关系换算看涨价格")
    if putcall == "put" and K > S0 and not boundary:
        raise RegimeError(f"K={K} > S0={S0} 时看跌期权为实值",
                          suggestion="改用 --putcall call，再通过亚式平价关系换算看跌价格")

    require_assumptions(model)
    closed = _FIXED_CALL_CLOSED if putcall == "call" else _FIXED_PUT_CLOSED
    method = _resolve_method(model, method, closed)
    cfg = _quad_cfg(model, quad_cfg)
    K = S0 if boundary else K

    if method == CLOSED_FORM:
        value, err = closed[model.jumps.kind](model, K, cfg)
    elif putcall == "call":
        value, err = _fixed_call_quad(model, K, cfg)
    else:
        value, err = _fixed_put_quad(model, K, cfg)

    return AsymCoeff(
        value=float(value),
        regime=REGIME_BOUNDARY if boundary else REGIME_OTM,
        method=method,
        instrument=Instrument("fixed", putcall, strike=K),
        degenerate=bool(value <= 0.0),
        error_estimate=float(err),
    )


def otm_call_coeff(model: ModelSpec, K: float, method: Optional[str] = None,
                   quad_cfg: Optional[QuadConfig] = None, allow_boundary: bool = False) -> AsymCoeff:
    """虚值固定行权价看涨系数 a_C(K) = lim C(T)/T，K > S0"""
    return _fixed_coeff(model, K, "call", method, quad_cfg, allow_boundary)


def otm_put_coeff(model: ModelSpec, K: float, method: Optional[str] = None,
                  quad_cfg: Optional[QuadConfig] = None, allow_boundary: bool = False) -> AsymCoeff:
    """虚值固定行权价看跌系数 a_P(K) = lim P(T)/T，K < S0"""
    return _fixed_coeff(model, K, "put", method, quad_cfg, allow_boundary)


def atm_coeff(model: ModelSpec, putcall: str = "call", style: str = "fixed") -> AsymCoeff:
    """平值系数 lim C(T)/√T = σ(S0)·S0/√(6π)

    看涨与看跌相同；浮动行权价 κ=1 与固定行权价 K=S0 的系数也相同
    """
    if style not in ("fixed", "floating"):
        raise RegimeError(f"平值系数不支持 {style} 类型", suggestion="使用 --style fixed 或 --style floating")
    if not model.jumps.is_compound_poisson:
        raise UnsupportedRegimeError(
            "VG 模型的平值价格不按 √T 衰减，平值展开不可用",
            suggestion="使用 --regime boundary 获取虚值公式在 K=S0 处的单侧极限")
    S0 = model.market.s0
    sigma0 = model.diffusion.sigma0(S0)
    if sigma0 == 0.0:
        logger.warning("⚠️ σ(S0)=0，平值系数退化为 0")
    value = float(sigma0 * S0 / math.sqrt(6.0 * math.pi))
    if style == "floating":
        inst = Instrument("floating", putcall, kappa=1.0)
    else:
        inst = Instrument("fixed", putcall, strike=S0)
    return AsymCoeff(
        value=value,
        regime=REGIME_ATM,
        method=CLOSED_FORM,
        instrument=inst,
        degenerate=bool(value <= 0.0),
    )


def _floating_coeff(model: ModelSpec, kappa: float, putcall: str, method: Optional[str],
                    quad_cfg: Optional[QuadConfig], allow_boundary: bool) -> AsymCoeff:
    boundary = _at_spot(kappa, 1.0)
    if boundary and not allow_boundary:
        raise RegimeError("κ=1 属于平值区间，虚值公式不适用",
                          suggestion="使用 --regime atm 获取 √T 系数，或 --regime boundary 获取单侧极限")
    if putcall == "call" and kappa > 1.0 and not boundary:
        raise RegimeError(f"κ={kappa} > 1 时浮动看涨期权为实值", suggestion="改用 κ < 1 或 --putcall put")
    if putcall == "put" and kappa < 1.0 and not boundary:
        raise RegimeError(f"κ={kappa} < 1 时浮动看跌期权为实值", suggestion="改用 κ > 1 或 --putcall call")

    require_assumptions(model)
    closed = _FLOATING_CALL_CLOSED if putcall == "call" else _FLOATING_PUT_CLOSED
    method = _resolve_method(model, method, closed)
    cfg = _quad_cfg(model, quad_cfg)
    kappa = 1.0 if boundary else kappa

    if method == CLOSED_FORM:
        value, err = closed[model.jumps.kind](model, kappa, cfg)
    elif putcall == "call":
        value, err = _floating_call_quad(model, kappa, cfg)
    else:
        value, err = _floating_put_quad(model, kappa, cfg)

    return AsymCoeff(
        value=float(value),
        regime=REGIME_BOUNDARY if boundary else REGIME_OTM,
        method=method,
        instrument=Instrument("floating", putcall, kappa=kappa),
        degenerate=bool(value <= 0.0),
        error_estimate=float(err),
    )


def floating_otm_call_coeff(model: ModelSpec, kappa: float, method: Optional[str] = None,
                            quad_cfg: Optional[QuadConfig] = None,
                            allow_boundary: bool = False) -> AsymCoeff:
    """浮动行权价看涨 (κS_T - A_T)^+ 的虚值系数，κ < 1"""
    return _floating_coeff(model, kappa, "call", method, quad_cfg, allow_boundary)


def floating_otm_put_coeff(model: ModelSpec, kappa: float, method: Optional[str] = None,
                           quad_cfg: Optional[QuadConfig] = None,
                           allow_boundary: bool = False) -> AsymCoeff:
    """浮动行权价看跌 (A_T - κS_T)^+ 的虚值系数，κ > 1"""
    return _floating_coeff(model, kappa, "put", method, quad_cfg, allow_boundary)


# ---------------------------------------------------------------- 欧式期权对照

def _merton_european(model: ModelSpec, K: float, putcall: str) -> float:
    j: MertonJumps = model.jumps
    S0 = model.market.s0
    i1, i2, i3, i4 = merton_tail_integrals(math.log(K / S0), j.jump_mean, j.jump_sd)
    if putcall == "call":
        return j.lam * (S0 * i2 - K * i1)
    return j.lam * (K * i3 - S0 * i4)


def _kou_european(model: ModelSpec, K: float, putcall: str) -> float:
    j: DoubleExpJumps = model.jumps
    S0 = model.market.s0
    if putcall == "call":
        return j.lam * j.p_up / (j.eta1 - 1.0) * S0 * (S0 / K) ** (j.eta1 - 1.0)
    return j.lam * (1.0 - j.p_up) / (j.eta2 + 1.0) * K * (K / S0) ** j.eta2


def _vg_european(model: ModelSpec, K: float, putcall: str) -> float:
    j: VGJumps = model.jumps
    S0 = model.market.s0
    L = math.log(K / S0)
    if putcall == "call":
        return j.C * (K * log_integral(math.exp(-j.M * L)) - S0 * log_integral(math.exp(-(j.M - 1.0) * L)))
    return j.C * (S0 * log_integral(math.exp((j.G + 1.0) * L)) - K * log_integral(math.exp(j.G * L)))


_EUROPEAN_CLOSED = {"merton": _merton_european, "double_exp": _kou_european, "vg": _vg_european}


def _european_quad(model: ModelSpec, K: float, putcall: str, cfg: QuadConfig) -> Tuple[float, float]:
    jumps, S0 = model.jumps, model.market.s0
    y_lo, y_hi = jumps.tail_bounds(cfg.tail_eps)
    L = math.log(K / S0)
    if putcall == "call":
        lo, hi, sign = max(L, y_lo), y_hi, 1.0
    else:
        lo, hi, sign = y_lo, min(L, y_hi), -1.0
    if hi <= lo:
        return 0.0, 0.0
    res = integrate_1d(lambda y: sign * K * math.expm1(y - L) * jumps.levy_density(y), lo, hi, cfg,
                       points=[0.0])
    return res.value, res.error


def european_otm_coeff(model: ModelSpec, K: float, method: Optional[str] = None,
                       quad_cfg: Optional[QuadConfig] = None) -> AsymCoeff:
    """虚值欧式期权系数 lim C_E(T)/T = ∫(S0 e^y - K)^+ ν(dy)；K>S0 取看涨，K<S0 取看跌"""
    S0 = model.market.s0
    if _at_spot(K, S0):
        raise RegimeError("K=S0 时欧式期权为平值", suggestion="平值欧式与亚式之比为 1/√3，见 asian_european_ratio")
    putcall = "call" if K > S0 else "put"
    require_assumptions(model)
    method = _resolve_method(model, method, _EUROPEAN_CLOSED)
    cfg = _quad_cfg(model, quad_cfg)
    if method == CLOSED_FORM:
        value, err = _EUROPEAN_CLOSED[model.jumps.kind](model, K, putcall), 0.0
    else:
        value, err = _european_quad(model, K, putcall, cfg)
    return AsymCoeff(
        value=float(value),
        regime=REGIME_OTM,
        method=method,
        instrument=Instrument("european", putcall, strike=K),
        degenerate=bool(value <= 0.0),
        error_estimate=float(err),
    )


def asian_european_ratio(model: ModelSpec, K: float, method: Optional[str] = None,
                         quad_cfg: Optional[QuadConfig] = None) -> float:
    """亚式/欧式系数之比；平值时为 1/√3"""
    S0 = model.market.s0
    if _at_spot(K, S0):
        if not model.jumps.is_compound_poisson:
            raise UnsupportedRegimeError("VG 模型没有平值展开", suggestion="使用虚值行权价计算比值")
        return 1.0 / math.sqrt(3.0)
    european = european_otm_coeff(model, K, method, quad_cfg)
    if K > S0:
        asian = otm_call_coeff(model, K, method, quad_cfg)
    else:
        asian = otm_put_coeff(model, K, method, quad_cfg)
    if european.value <= 0.0:
        raise RegimeError(f"K={K} 处欧式系数为 0，比值无定义")
    return asian.value / european.value


def vg_atm_limit_coeffs(model: ModelSpec) -> Tuple[AsymCoeff, AsymCoeff]:
    """VG 虚值系数在 K→S0 处的单侧极限: S0·C·arctanh(1/(2M-1)) 与 S0·C·arctanh(1/(2G+1))"""
    j = model.jumps
    if not isinstance(j, VGJumps):
        raise ModelValidationError("单侧平值极限只对 VG 模型定义")
    S0 = model.market.s0
    call = S0 * j.C * arctanh_safe(1.0 / (2.0 * j.M - 1.0))
    put = S0 * j.C * arctanh_safe(1.0 / (2.0 * j.G + 1.0))
    return (
        AsymCoeff(call, REGIME_BOUNDARY, CLOSED_FORM, Instrument("fixed", "call", strike=S0)),
        AsymCoeff(put, REGIME_BOUNDARY, CLOSED_FORM, Instrument("fixed", "put", strike=S0)),
    )
