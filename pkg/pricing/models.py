"""
模型定义
市场参数、扩散部分 (常数或局部波动率)、跳跃部分 (Merton / Kou 双指数 / 方差伽马 / 一般复合泊松)
以及期权合约描述，模型文件为 JSON 格式
"""

import json
import logging
import math
from abc import ABC, abstractmethod
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Callable, ClassVar, Dict, List, Optional, Tuple, Union

import numpy as np
from scipy import stats
from scipy.integrate import cumulative_trapezoid

from pricing.exceptions import (
    AssumptionViolationError,
    CompensatorUndefinedError,
    DensitySingularityError,
    InfiniteMeanError,
    ModelValidationError,
)
from pricing.quadrature import QuadConfig, integrate_1d, truncate_upper

logger = logging.getLogger(__name__)

STYLES = ("fixed", "floating", "european")
PUTCALLS = ("call", "put")

# 局部波动率边界检查所用的对数价格网格半宽
_LOCAL_VOL_CHECK_WIDTH = 2.0


def _is_scalar(y) -> bool:
    return np.ndim(y) == 0


@dataclass(frozen=True)
class MarketSpec:
    """市场参数"""
    s0: float
    r: float = 0.0
    q: float = 0.0

    def __post_init__(self):
        if not (math.isfinite(self.s0) and self.s0 > 0):
            raise ModelValidationError(f"S0 必须为正的有限数: {self.s0}")
        if not (math.isfinite(self.r) and math.isfinite(self.q)):
            raise ModelValidationError(f"利率与股息率必须有限: r={self.r}, q={self.q}")


@dataclass(frozen=True)
class TabulatedLocalVol:
    """按价格网格线性插值的局部波动率，网格外取端点值"""
    spots: Tuple[float, ...]
    vols: Tuple[float, ...]

    def __post_init__(self):
        if len(self.spots) != len(self.vols) or len(self.spots) < 2:
            raise ModelValidationError("局部波动率网格至少需要两个点且长度一致")
        if any(b <= a for a, b in zip(self.spots, self.spots[1:])):
            raise ModelValidationError("局部波动率网格必须严格递增")

    def __call__(self, s):
        return np.interp(s, self.spots, self.vols)


@dataclass(frozen=True)
class DiffusionSpec:
    """扩散部分"""
    kind: str = "constant"
    sigma_const: float = 0.0
    local_vol: Optional[Callable[[Any], Any]] = None
    sigma_lo: Optional[float] = None
    sigma_hi: Optional[float] = None

    def __post_init__(self):
        if self.kind == "constant":
            if not (math.isfinite(self.sigma_const) and self.sigma_const >= 0):
                raise ModelValidationError(f"常数波动率必须非负: {self.sigma_const}")
        elif self.kind == "local":
            if self.local_vol is None:
                raise ModelValidationError("局部波动率模型缺少 local_vol")
            lo, hi = self.sigma_lo, self.sigma_hi
            if lo is None or hi is None or not (0 < lo <= hi < math.inf):
                raise ModelValidationError(f"局部波动率边界必须满足 0 < lo ≤ hi < ∞: lo={lo}, hi={hi}")
        else:
            raise ModelValidationError(f"未知的扩散类型: {self.kind}")

    def sigma_at(self, s):
        """σ(S)，支持数组"""
        if self.kind == "constant":
            return self.sigma_const if _is_scalar(s) else np.full(np.shape(s), self.sigma_const)
        return self.local_vol(s)

    def sigma0(self, s0: float) -> float:
        return float(self.sigma_at(s0))


class JumpSpec(ABC):
    """跳跃部分基类"""

    kind: ClassVar[str] = ""
    is_compound_poisson: ClassVar[bool] = True

    @property
    def intensity(self) -> Optional[float]:
        return getattr(self, "lam", None)

    @abstractmethod
    def compensator(self) -> float:
        """μ = ∫(e^y - 1) ν(dy)"""

    @abstractmethod
    def levy_density(self, y):
        """ν(y)，支持数组"""

    @abstractmethod
    def tail_bounds(self, tail_eps: float) -> Tuple[float, float]:
        """积分用的有限支撑 [y_lo, y_hi]，尾部质量不超过 tail_eps"""

    @abstractmethod
    def to_dict(self) -> Dict[str, Any]:
        pass

    def sample_sizes(self, rng: np.random.Generator, n: int) -> np.ndarray:
        """抽取 n 个对数跳跃幅度 (仅复合泊松)"""
        raise NotImplementedError(f"{self.kind} 不是复合泊松过程")


@dataclass(frozen=True)
class MertonJumps(JumpSpec):
    """Merton 正态对数跳跃"""
    lam: float
    jump_mean: float
    jump_sd: float

    kind: ClassVar[str] = "merton"

    def __post_init__(self):
        if not self.lam >= 0:
            raise ModelValidationError(f"跳跃强度必须非负: {self.lam}")
        if not self.jump_sd > 0:
            raise ModelValidationError(f"跳跃标准差必须为正: {self.jump_sd}")

    def compensator(self) -> float:
        return self.lam * math.expm1(self.jump_mean + 0.5 * self.jump_sd ** 2)

    def jump_pdf(self, y):
        z = (y - self.jump_mean) / self.jump_sd
        if _is_scalar(y):
            return math.exp(-0.5 * z * z) / (math.sqrt(2 * math.pi) * self.jump_sd)
        return np.exp(-0.5 * z * z) / (math.sqrt(2 * np.pi) * self.jump_sd)

    def levy_density(self, y):
        return self.lam * self.jump_pdf(y)

    def tail_bounds(self, tail_eps: float) -> Tuple[float, float]:
        z = float(stats.norm.isf(tail_eps))
        a, d = self.jump_mean, self.jump_sd
        # e^y 加权后的密度均值右移 δ²
        return a - z * d, a + d * d + z * d

    def sample_sizes(self, rng: np.random.Generator, n: int) -> np.ndarray:
        return rng.normal(self.jump_mean, self.jump_sd, size=n)

    def to_dict(self) -> Dict[str, Any]:
        return {"kind": self.kind, "lambda": self.lam,
                "jump_mean": self.jump_mean, "jump_sd": self.jump_sd}


@dataclass(frozen=True)
class DoubleExpJumps(JumpSpec):
    """Kou 双指数跳跃"""
    lam: float
    p_up: float
    eta1: float
    eta2: float

    kind: ClassVar[str] = "double_exp"

    def __post_init__(self):
        if not self.lam >= 0:
            raise ModelValidationError(f"跳跃强度必须非负: {self.lam}")
        if not 0.0 <= self.p_up <= 1.0:
            raise ModelValidationError(f"上跳概率必须位于 [0, 1]: {self.p_up}")
        if not (self.eta1 > 0 and self.eta2 > 0):
            raise ModelValidationError(f"衰减参数必须为正: eta1={self.eta1}, eta2={self.eta2}")

    def _require_finite_mean(self):
        if self.p_up > 0 and self.eta1 <= 1:
            raise InfiniteMeanError(f"η1={self.eta1} ≤ 1 时 E[e^Y] 无穷")

    def compensator(self) -> float:
        self._require_finite_mean()
        p, e1, e2 = self.p_up, self.eta1, self.eta2
        up = p * e1 / (e1 - 1) if p > 0 else 0.0
        return self.lam * (up + (1 - p) * e2 / (e2 + 1) - 1)

    def jump_pdf(self, y):
        p, e1, e2 = self.p_up, self.eta1, self.eta2
        if _is_scalar(y):
            if y >= 0:
                return p * e1 * math.exp(-e1 * y)
            return (1 - p) * e2 * math.exp(e2 * y)
        y = np.asarray(y, dtype=float)
        return np.where(y >= 0, p * e1 * np.exp(-e1 * np.abs(y)), (1 - p) * e2 * np.exp(-e2 * np.abs(y)))

    def levy_density(self, y):
        return self.lam * self.jump_pdf(y)

    def tail_bounds(self, tail_eps: float) -> Tuple[float, float]:
        self._require_finite_mean()
        y_hi = truncate_upper(self.eta1 - 1, tail_eps) if self.p_up > 0 else 0.0
        y_lo = -truncate_upper(self.eta2, tail_eps) if self.p_up < 1 else 0.0
        return y_lo, y_hi

    def sample_sizes(self, rng: np.random.Generator, n: int) -> np.ndarray:
        up = rng.random(n) < self.p_up
        ups = rng.exponential(1.0 / self.eta1, size=n)
        downs = rng.exponential(1.0 / self.eta2, size=n)
        return np.where(up, ups, -downs)

    def to_dict(self) -> Dict[str, Any]:
        return {"kind": self.kind, "lambda": self.lam, "p_up": self.p_up,
                "eta1": self.eta1, "eta2": self.eta2}


@dataclass(frozen=True)
class VGJumps(JumpSpec):
    """方差伽马过程 X = θΓ + σW(Γ)，Γ 为均值 1/年、方差 ν 的 Gamma 从属过程"""
    sigma_vg: float
    nu: float
    theta: float

    kind: ClassVar[str] = "vg"
    is_compound_poisson: ClassVar[bool] = False

    def __post_init__(self):
        if not (self.sigma_vg > 0 and self.nu > 0):
            raise ModelValidationError(f"VG 参数要求 σ>0, ν>0: σ={self.sigma_vg}, ν={self.nu}")
        if not math.isfinite(self.theta):
            raise ModelValidationError(f"θ 必须有限: {self.theta}")

    @property
    def _root(self) -> float:
        return math.sqrt(0.25 * self.theta ** 2 * self.nu ** 2 + 0.5 * self.sigma_vg ** 2 * self.nu)

    @property
    def eta_p(self) -> float:
        return self._root + 0.5 * self.theta * self.nu

    @property
    def eta_n(self) -> float:
        return self._root - 0.5 * self.theta * self.nu

    @property
    def C(self) -> float:
        return 1.0 / self.nu

    @property
    def G(self) -> float:
        return 1.0 / self.eta_n

    @property
    def M(self) -> float:
        return 1.0 / self.eta_p

    @classmethod
    def from_cgmy(cls, C: float, G: float, M: float) -> "VGJumps":
        """由 (C, G, M) 反解 (σ, ν, θ)"""
        if not (C > 0 and G > 0 and M > 0):
            raise ModelValidationError(f"C, G, M 必须为正: {C}, {G}, {M}")
        return cls(sigma_vg=math.sqrt(2.0 * C / (G * M)), nu=1.0 / C, theta=C * (1.0 / M - 1.0 / G))

    def compensator(self) -> float:
        x = (self.theta + 0.5 * self.sigma_vg ** 2) * self.nu
        if x >= 1:
            raise CompensatorUndefinedError(f"(θ+σ²/2)ν = {x:.6g} ≥ 1，补偿项无定义")
        return -math.log1p(-x) / self.nu

    def levy_density(self, y):
        C, G, M = self.C, self.G, self.M
        if _is_scalar(y):
            if y == 0:
                raise DensitySingularityError("VG 的 Lévy 密度在 y=0 处奇异")
            rate = M if y > 0 else G
            return C * math.exp(-rate * abs(y)) / abs(y)
        y = np.asarray(y, dtype=float)
        if np.any(y == 0):
            raise DensitySingularityError("VG 的 Lévy 密度在 y=0 处奇异")
        ay = np.abs(y)
        return C * np.exp(-np.where(y > 0, M, G) * ay) / ay

    def tail_bounds(self, tail_eps: float) -> Tuple[float, float]:
        if self.M <= 1:
            raise InfiniteMeanError(f"M={self.M:.6g} ≤ 1 时 E[e^X] 无穷")
        return -truncate_upper(self.G, tail_eps), truncate_upper(self.M - 1, tail_eps)

    def to_dict(self) -> Dict[str, Any]:
        return {"kind": self.kind, "sigma_vg": self.sigma_vg, "nu": self.nu, "theta": self.theta}


@dataclass(frozen=True)
class TabulatedDensity:
    """网格上的跳跃密度，网格外为 0"""
    grid: Tuple[float, ...]
    values: Tuple[float, ...]

    def __post_init__(self):
        if len(self.grid) != len(self.values) or len(self.grid) < 3:
            raise ModelValidationError("密度网格至少需要三个点且长度一致")
        if any(b <= a for a, b in zip(self.grid, self.grid[1:])):
            raise ModelValidationError("密度网格必须严格递增")
        if any(v < 0 for v in self.values):
            raise ModelValidationError("密度值不能为负")

    def __call__(self, y):
        out = np.interp(y, self.grid, self.values, left=0.0, right=0.0)
        return float(out) if _is_scalar(y) else out


@dataclass(frozen=True)
class GenericCP(JumpSpec):
    """一般复合泊松跳跃，密度需声明两侧指数衰减率"""
    lam: float
    density: Callable[[Any], Any]
    decay_up: float
    decay_down: float
    support: Optional[Tuple[float, float]] = None
    quad: QuadConfig = field(default_factory=QuadConfig, compare=False, repr=False)

    kind: ClassVar[str] = "generic"

    def __post_init__(self):
        if not self.lam >= 0:
            raise ModelValidationError(f"跳跃强度必须非负: {self.lam}")
        if not (self.decay_up > 0 and self.decay_down > 0):
            raise ModelValidationError("必须声明正的尾部衰减率")

    def tail_bounds(self, tail_eps: float) -> Tuple[float, float]:
        if self.decay_up <= 1:
            raise InfiniteMeanError(f"上尾衰减率 {self.decay_up} ≤ 1 时 E[e^Y] 无穷")
        y_lo = -truncate_upper(self.decay_down, tail_eps)
        y_hi = truncate_upper(self.decay_up - 1, tail_eps)
        if self.support is not None:
            y_lo, y_hi = max(y_lo, self.support[0]), min(y_hi, self.support[1])
        return y_lo, y_hi

    def _integrate(self, g: Callable[[float], float]) -> float:
        y_lo, y_hi = self.tail_bounds(self.quad.tail_eps)
        return integrate_1d(g, y_lo, y_hi, self.quad, points=[0.0]).value

    def total_mass(self) -> float:
        return self._integrate(lambda y: float(self.density(y)))

    def compensator(self) -> float:
        return self.lam * self._integrate(lambda y: math.expm1(y) * float(self.density(y)))

    def jump_pdf(self, y):
        return self.density(y)

    def levy_density(self, y):
        return self.lam * self.density(y)

    def sample_sizes(self, rng: np.random.Generator, n: int) -> np.ndarray:
        # 网格逆分布函数抽样
        y_lo, y_hi = self.tail_bounds(self.quad.tail_eps)
        grid = np.linspace(y_lo, y_hi, 4001)
        cdf = cumulative_trapezoid(self.density(grid), grid, initial=0.0)
        cdf /= cdf[-1]
        return np.interp(rng.random(n), cdf, grid)

    def to_dict(self) -> Dict[str, Any]:
        if not isinstance(self.density, TabulatedDensity):
            raise ValueError("只有网格密度可以写入模型文件")
        return {"kind": self.kind, "lambda": self.lam,
                "grid": list(self.density.grid), "density": list(self.density.values),
                "decay_up": self.decay_up, "decay_down": self.decay_down}


@dataclass(frozen=True)
class ModelSpec:
    """完整模型: 市场 + 扩散 + 跳跃"""
    market: MarketSpec
    diffusion: DiffusionSpec
    jumps: JumpSpec


@dataclass(frozen=True)
class Instrument:
    """亚式期权合约，maturity 为 None 时表示 T→0 的渐近系数"""
    style: str
    putcall: str
    strike: Optional[float] = None
    kappa: Optional[float] = None
    maturity: Optional[float] = None

    def __post_init__(self):
        if self.style not in STYLES:
            raise ModelValidationError(f"未知的期权类型: {self.style}")
        if self.putcall not in PUTCALLS:
            raise ModelValidationError(f"未知的看涨/看跌标记: {self.putcall}")
        if self.style in ("fixed", "european") and not (self.strike is not None and self.strike > 0):
            raise ModelValidationError(f"固定行权价期权需要正的行权价: {self.strike}")
        if self.style == "floating" and not (self.kappa is not None and self.kappa > 0):
            raise ModelValidationError(f"浮动行权价期权需要正的 κ: {self.kappa}")
        if self.maturity is not None and not (math.isfinite(self.maturity) and self.maturity > 0):
            raise ModelValidationError(f"到期时间必须为正: {self.maturity}")


@dataclass
class AssumptionCheck:
    """单项假设检查结果"""
    name: str
    passed: bool
    severity: str  # "error" / "warning"
    detail: str = ""


def compensator(jumps: JumpSpec) -> float:
    """跳跃补偿项 μ"""
    return jumps.compensator()


def levy_density(jumps: JumpSpec, y):
    """Lévy 密度 ν(y)"""
    return jumps.levy_density(y)


def _check_diffusion(model: ModelSpec) -> AssumptionCheck:
    diff = model.diffusion
    if diff.kind == "constant":
        if diff.sigma_const > 0:
            return AssumptionCheck("diffusion_bounded", True, "warning")
        return AssumptionCheck("diffusion_bounded", False, "warning",
                               "σ=0: 纯跳跃模型，超出扩散有界假设，平值展开不可用")
    s0 = model.market.s0
    grid = s0 * np.exp(np.linspace(-_LOCAL_VOL_CHECK_WIDTH, _LOCAL_VOL_CHECK_WIDTH, 81))
    vols = np.asarray(diff.sigma_at(grid), dtype=float)
    ok = bool(np.all(vols >= diff.sigma_lo - 1e-12) and np.all(vols <= diff.sigma_hi + 1e-12))
    return AssumptionCheck("diffusion_bounded", ok, "error",
                           "" if ok else f"局部波动率超出声明边界 [{diff.sigma_lo}, {diff.sigma_hi}]")


def _check_exp_moment(jumps: JumpSpec) -> List[AssumptionCheck]:
    checks = []
    if isinstance(jumps, DoubleExpJumps):
        ok = jumps.p_up == 0 or jumps.eta1 > 2
        checks.append(AssumptionCheck("jump_exp_moment", ok, "error",
                                      "" if ok else f"η1={jumps.eta1} ≤ 2，E[e^(θY)] 对 θ>2 无穷"))
        ok_down = jumps.p_up == 1 or jumps.eta2 > 2
        checks.append(AssumptionCheck("jump_down_decay", ok_down, "warning",
                                      "" if ok_down else f"η2={jumps.eta2} ≤ 2"))
    elif isinstance(jumps, VGJumps):
        ok = jumps.M > 2
        checks.append(AssumptionCheck("jump_exp_moment", ok, "error",
                                      "" if ok else f"M={jumps.M:.6g} ≤ 2"))
    elif isinstance(jumps, GenericCP):
        ok = jumps.decay_up > 2
        checks.append(AssumptionCheck("jump_exp_moment", ok, "error",
                                      "" if ok else f"上尾衰减率 {jumps.decay_up} ≤ 2"))
    else:
        checks.append(AssumptionCheck("jump_exp_moment", True, "error"))
    return checks


def check_assumptions(model: ModelSpec) -> List[AssumptionCheck]:
    """检查渐近结果所需的模型假设，返回逐项报告"""
    report = [_check_diffusion(model)]
    report.extend(_check_exp_moment(model.jumps))

    try:
        mu = model.jumps.compensator()
        report.append(AssumptionCheck("compensator_finite", math.isfinite(mu), "error", f"μ={mu:.8g}"))
    except (CompensatorUndefinedError, InfiniteMeanError) as e:
        report.append(AssumptionCheck("compensator_finite", False, "error", str(e)))

    if isinstance(model.jumps, GenericCP):
        mass = model.jumps.total_mass()
        ok = abs(mass - 1.0) <= 1e-6
        report.append(AssumptionCheck("density_normalized", ok, "error", f"∫p(y)dy={mass:.10g}"))

    return report


def require_assumptions(model: ModelSpec) -> List[AssumptionCheck]:
    """有 error 级检查失败时抛出 AssumptionViolationError，warning 级只记录日志"""
    report = check_assumptions(model)
    failed = [c for c in report if not c.passed and c.severity == "error"]
    if failed:
        names = ", ".join(f"{c.name}({c.detail})" for c in failed)
        raise AssumptionViolationError(f"模型不满足假设: {names}", checks=failed)
    for c in report:
        if not c.passed:
            logger.warning("⚠️ 假设提示 %s: %s", c.name, c.detail)
    return report


def _diffusion_from_dict(data: Dict[str, Any]) -> DiffusionSpec:
    kind = data.get("kind", "constant")
    if kind == "constant":
        return DiffusionSpec(kind="constant", sigma_const=float(data.get("sigma_const", 0.0)))
    table = data.get("local_vol") or {}
    local = TabulatedLocalVol(tuple(map(float, table.get("spots", []))),
                              tuple(map(float, table.get("vols", []))))
    return DiffusionSpec(kind="local", local_vol=local,
                         sigma_lo=data.get("sigma_lo"), sigma_hi=data.get("sigma_hi"))


def _diffusion_to_dict(diff: DiffusionSpec) -> Dict[str, Any]:
    if diff.kind == "constant":
        return {"kind": "constant", "sigma_const": diff.sigma_const}
    if not isinstance(diff.local_vol, TabulatedLocalVol):
        raise ValueError("只有网格局部波动率可以写入模型文件")
    return {"kind": "local", "sigma_lo": diff.sigma_lo, "sigma_hi": diff.sigma_hi,
            "local_vol": {"spots": list(diff.local_vol.spots), "vols": list(diff.local_vol.vols)}}


def _jumps_from_dict(data: Dict[str, Any]) -> JumpSpec:
    kind = data.get("kind")
    try:
        if kind == "merton":
            return MertonJumps(lam=float(data["lambda"]), jump_mean=float(data["jump_mean"]),
                               jump_sd=float(data["jump_sd"]))
        if kind == "double_exp":
            return DoubleExpJumps(lam=float(data["lambda"]), p_up=float(data["p_up"]),
                                  eta1=float(data["eta1"]), eta2=float(data["eta2"]))
        if kind == "vg":
            return VGJumps(sigma_vg=float(data["sigma_vg"]), nu=float(data["nu"]),
                           theta=float(data["theta"]))
        if kind == "generic":
            dens = TabulatedDensity(tuple(map(float, data["grid"])), tuple(map(float, data["density"])))
            return GenericCP(lam=float(data["lambda"]), density=dens,
                             decay_up=float(data["decay_up"]), decay_down=float(data["decay_down"]),
                             support=(dens.grid[0], dens.grid[-1]))
    except KeyError as e:
        raise ModelValidationError(f"跳跃参数缺少字段: {e}") from e
    raise ModelValidationError(f"未知的跳跃类型: {kind}")


def model_from_dict(data: Dict[str, Any]) -> ModelSpec:
    """由字典构建模型"""
    for section in ("market", "diffusion", "jumps"):
        if section not in data:
            raise ModelValidationError(f"模型文件缺少 {section} 部分")
    m = data["market"]
    market = MarketSpec(s0=float(m["s0"]), r=float(m.get("r", 0.0)), q=float(m.get("q", 0.0)))
    return ModelSpec(market=market,
                     diffusion=_diffusion_from_dict(data["diffusion"]),
                     jumps=_jumps_from_dict(data["jumps"]))


def model_to_dict(model: ModelSpec) -> Dict[str, Any]:
    """模型序列化为字典 (字段名与模型文件一致)"""
    return {
        "market": {"s0": model.market.s0, "r": model.market.r, "q": model.market.q},
        "diffusion": _diffusion_to_dict(model.diffusion),
        "jumps": model.jumps.to_dict(),
    }


def load_model_spec(path: Union[str, Path]) -> ModelSpec:
    """从 JSON 文件加载模型"""
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"模型文件不存在: {path}")
    with open(path, 'r', encoding='utf-8') as f:
        data = json.load(f)
    model = model_from_dict(data)
    logger.info("加载模型 %s: %s 跳跃, S0=%s", path.name, model.jumps.kind, model.market.s0)
    return model
