"""
定价库异常定义
所有可预期的错误都继承 AsianPricingError，命令行入口统一捕获并给出提示
"""

from typing import Any, List, Optional


class AsianPricingError(Exception):
    """定价库基础异常"""


class ModelValidationError(AsianPricingError, ValueError):
    """模型参数不合法"""


class CompensatorUndefinedError(ModelValidationError):
    """补偿项无定义 (例如 VG 的 (θ+σ²/2)ν ≥ 1)"""


class InfiniteMeanError(ModelValidationError):
    """跳跃幅度的指数矩无穷 (例如 Kou 模型 η1 ≤ 1)"""


class DensitySingularityError(ModelValidationError):
    """Lévy 密度在 y=0 处奇异"""


class DomainError(AsianPricingError, ValueError):
    """特殊函数参数超出定义域"""


class RegimeError(AsianPricingError, ValueError):
    """行权价与所调用的渐近区间不符"""

    def __init__(self, message: str, suggestion: Optional[str] = None):
        super().__init__(message)
        self.suggestion = suggestion


class UnsupportedRegimeError(RegimeError):
    """该模型不支持所请求的区间 (例如 VG 的平值展开)"""


class AssumptionViolationError(AsianPricingError, ValueError):
    """模型不满足渐近结果的前提假设"""

    def __init__(self, message: str, checks: Optional[List[Any]] = None):
        super().__init__(message)
        self.checks = checks or []


class QuadratureError(AsianPricingError, RuntimeError):
    """自适应积分未收敛，携带当前最佳估计"""

    def __init__(self, message: str, best_estimate: float, error_estimate: float):
        super().__init__(message)
        self.best_estimate = best_estimate
        self.error_estimate = error_estimate


class NoSolutionError(AsianPricingError, ValueError):
    """隐含波动率在搜索区间内无解"""


class GammaSamplerError(AsianPricingError, RuntimeError):
    """Gamma 时间变换抽样失败"""
