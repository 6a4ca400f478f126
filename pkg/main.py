"""
亚式期权短期限渐近定价 - 命令行主程序
渐近系数、解析近似、蒙特卡洛、隐含波动率、表格复现与参数扫描
"""

import argparse
import json
import logging
import math
import sys
from dataclasses import asdict, replace
from fractions import Fraction
from typing import Any, Dict, List, Optional

from pipeline.progress_monitor import monitor
from pipeline.run_recorder import RunManifest, RunRecorder
from pipeline.sweeps import SOURCES, maturity_convergence, smile_grid, smile_sweep
from pipeline.table_builder import TABLE_NAMES, PublishedTableBuilder
from pricing.approx import approx_price, avg_forward, implied_vol
from pricing.asymptotics import (
    asian_european_ratio,
    atm_coeff,
    european_otm_coeff,
    floating_otm_call_coeff,
    floating_otm_put_coeff,
    otm_call_coeff,
    otm_put_coeff,
    vg_atm_limit_coeffs,
)
from pricing.config import PricingConfig, load_config
from pricing.exceptions import AsianPricingError, RegimeError
from pricing.mc import mc_price
from pricing.models import Instrument, ModelSpec, load_model_spec, model_to_dict

logger = logging.getLogger("asianjump")

METHOD_FLAGS = {"closed": "closed_form", "quad": "quadrature"}
DEFAULT_MATURITIES = "1/252,1/52,1/12"


def parse_maturity(text: str) -> float:
    """接受 0.0192 或 1/52 形式"""
    try:
        value = float(Fraction(text.strip()))
    except (ValueError, ZeroDivisionError):
        raise argparse.ArgumentTypeError(f"无法解析的期限: {text}")
    if value <= 0:
        raise argparse.ArgumentTypeError(f"期限必须为正: {text}")
    return value


def parse_maturity_list(text: str) -> List[float]:
    return [parse_maturity(part) for part in text.split(",") if part.strip()]


class AsianPricingApp:
    """命令行各子命令的实现"""

    def __init__(self, config: PricingConfig, argv: List[str]):
        self.config = config
        self.argv = argv
        self.recorder = RunRecorder(config.output_dir)

    def _instrument(self, args, maturity: Optional[float] = None) -> Instrument:
        if args.style == "floating":
            if args.kappa is None:
                raise RegimeError("浮动行权价需要 --kappa")
            return Instrument("floating", args.putcall, kappa=args.kappa, maturity=maturity)
        if args.strike is None:
            raise RegimeError("固定行权价需要 --strike")
        return Instrument(args.style, args.putcall, strike=args.strike, maturity=maturity)

    def _manifest(self, command: str, model_path: Optional[str], model: Optional[ModelSpec],
                  outputs: List[str], seed: Optional[int] = None) -> RunManifest:
        config = asdict(self.config)
        return RunManifest(
            command=command,
            argv=self.argv,
            model_path=model_path,
            model=model_to_dict(model) if model is not None else None,
            config=config,
            seed=seed,
            outputs=outputs,
        )

    def _emit_json(self, command: str, result: Dict[str, Any], args, model: Optional[ModelSpec],
                   seed: Optional[int] = None) -> Dict[str, Any]:
        print(json.dumps(result, ensure_ascii=False, indent=2))
        if args.out:
            path = self.recorder.save_json(result, args.out)
            self.recorder.write_manifest(self._manifest(command, getattr(args, "model", None), model,
                                                        [path], seed), path)
        return result

    def run_asym(self, args) -> Dict[str, Any]:
        """渐近系数"""
        model = load_model_spec(args.model)
        method = METHOD_FLAGS.get(args.method) if args.method else None
        quad = self.config.quad
        inst = self._instrument(args)

        if args.ratio:
            if inst.style != "fixed":
                raise RegimeError("亚式/欧式比值只对固定行权价定义", suggestion="使用 --style fixed")
            ratio = asian_european_ratio(model, inst.strike, method, quad)
            return self._emit_json("asym", {"strike": inst.strike, "asian_european_ratio": ratio}, args, model)

        if inst.style == "european":
            coeff = european_otm_coeff(model, inst.strike, method, quad)
        elif args.regime == "atm":
            if inst.style == "floating" and not math.isclose(inst.kappa, 1.0, rel_tol=1e-12):
                raise RegimeError("浮动行权价的平值系数要求 κ=1", suggestion="使用 --kappa 1")
            if inst.style == "fixed" and not math.isclose(inst.strike, model.market.s0, rel_tol=1e-12):
                raise RegimeError("平值系数要求 K=S0", suggestion=f"使用 --strike {model.market.s0:g}")
            coeff = atm_coeff(model, inst.putcall, style=inst.style)
        elif args.regime == "boundary" and inst.style == "fixed" and model.jumps.kind == "vg":
            call, put = vg_atm_limit_coeffs(model)
            coeff = call if inst.putcall == "call" else put
        else:
            boundary = args.regime == "boundary"
            if inst.style == "fixed":
                fn = otm_call_coeff if inst.putcall == "call" else otm_put_coeff
                coeff = fn(model, inst.strike, method, quad, allow_boundary=boundary)
            else:
                fn = floating_otm_call_coeff if inst.putcall == "call" else floating_otm_put_coeff
                coeff = fn(model, inst.kappa, method, quad, allow_boundary=boundary)

        return self._emit_json("asym", coeff.to_dict(), args, model)

    def run_price(self, args) -> Dict[str, Any]:
        """解析近似价格"""
        model = load_model_spec(args.model)
        method = METHOD_FLAGS.get(args.method) if args.method else None
        inst = Instrument("fixed", args.putcall, strike=args.strike, maturity=args.T)
        result = approx_price(model, inst, method, self.config.quad).to_dict()
        result["forward"] = avg_forward(model.market, args.T)
        return self._emit_json("price", result, args, model)

    def run_mc(self, args) -> Dict[str, Any]:
        """蒙特卡洛价格"""
        model = load_model_spec(args.model)
        inst = self._instrument(args, maturity=args.T)
        result = mc_price(model, inst, self.config.mc)
        return self._emit_json("mc", result.to_dict(), args, model, seed=self.config.mc.seed)

    def run_ivol(self, args) -> Dict[str, Any]:
        """亚式隐含波动率"""
        model = load_model_spec(args.model)
        vol = implied_vol(args.price, model.market, args.strike, args.T, args.putcall)
        result = {"price": args.price, "strike": args.strike, "T": args.T,
                  "putcall": args.putcall, "implied_vol": vol}
        return self._emit_json("ivol", result, args, model)

    def run_table(self, args) -> str:
        """复现数值表格"""
        builder = PublishedTableBuilder(self.config, with_mc=not args.no_mc)
        df = builder.build(args.name)
        path = self.recorder.save_table(df, self.recorder.resolve(args.out, f"tables/{args.name}.csv"))
        model_path = builder.model_path(args.name)
        self.recorder.write_manifest(
            self._manifest("table", model_path, load_model_spec(model_path), [path],
                           None if args.no_mc else self.config.mc.seed), path)
        monitor.print_session_summary()
        return path

    def run_smile(self, args) -> str:
        """隐含波动率微笑"""
        model = load_model_spec(args.model)
        s = self.config.smile
        ks = smile_grid(args.k_min or s.k_min, args.k_max or s.k_max, args.n_points or s.n_points)
        df = smile_sweep(model, args.T, ks, args.source, self.config.mc, self.config.quad)
        path = self.recorder.save_table(df, self.recorder.resolve(args.out, f"smile_{args.source}.csv"))
        seed = self.config.mc.seed if args.source == "mc" else None
        self.recorder.write_manifest(self._manifest("smile", args.model, model, [path], seed), path)
        return path

    def run_convergence(self, args) -> str:
        """期限收敛性"""
        model = load_model_spec(args.model)
        inst = self._instrument(args, maturity=max(args.T_list))
        df = maturity_convergence(model, inst, args.T_list, self.config.mc, self.config.quad)
        path = self.recorder.save_table(df, self.recorder.resolve(args.out, "convergence.csv"))
        self.recorder.write_manifest(
            self._manifest("convergence", args.model, model, [path], self.config.mc.seed), path)
        return path


def _add_contract_args(parser: argparse.ArgumentParser, styles=("fixed", "floating")) -> None:
    parser.add_argument("--model", required=True, help="模型文件 (JSON)")
    parser.add_argument("--style", choices=styles, default="fixed", help="行权价类型")
    parser.add_argument("--putcall", choices=("call", "put"), default="call", help="看涨/看跌")
    parser.add_argument("--strike", type=float, help="固定行权价 K")
    parser.add_argument("--kappa", type=float, help="浮动行权价系数 κ")


def _add_mc_args(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--paths", type=int, help="路径数")
    parser.add_argument("--steps", type=int, help="时间步数")
    parser.add_argument("--seed", type=int, help="随机种子")
    parser.add_argument("--threads", type=int, help="线程数 (0 表示全部 CPU)")
    parser.add_argument("--antithetic", action="store_true", help="使用对偶变量")
    parser.add_argument("--no-progress", action="store_true", help="不显示进度条")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="asianjump", description="亚式期权短期限渐近定价")
    parser.add_argument("--config", help="配置文件路径 (YAML)")
    parser.add_argument("--verbose", action="store_true", help="输出调试日志")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("asym", help="短期限渐近系数")
    _add_contract_args(p, styles=("fixed", "floating", "european"))
    p.add_argument("--regime", choices=("otm", "atm", "boundary"), default="otm",
                   help="otm: 虚值 O(T)；atm: 平值 O(√T)；boundary: 虚值公式在 K=S0 处的单侧极限")
    p.add_argument("--method", choices=tuple(METHOD_FLAGS), help="闭式或数值积分 (默认自动)")
    p.add_argument("--ratio", action="store_true", help="输出亚式/欧式系数之比")
    p.add_argument("--out", help="结果 JSON 路径")

    p = sub.add_parser("price", help="解析近似价格")
    p.add_argument("--model", required=True, help="模型文件 (JSON)")
    p.add_argument("--strike", type=float, required=True, help="行权价 K")
    p.add_argument("--T", type=parse_maturity, required=True, help="到期时间 (年)，可写作 1/52")
    p.add_argument("--putcall", choices=("call", "put"), default="call", help="看涨/看跌")
    p.add_argument("--method", choices=tuple(METHOD_FLAGS), help="闭式或数值积分 (默认自动)")
    p.add_argument("--out", help="结果 JSON 路径")

    p = sub.add_parser("mc", help="蒙特卡洛价格")
    _add_contract_args(p, styles=("fixed", "floating", "european"))
    p.add_argument("--T", type=parse_maturity, required=True, help="到期时间 (年)")
    _add_mc_args(p)
    p.add_argument("--out", help="结果 JSON 路径")

    p = sub.add_parser("ivol", help="亚式隐含波动率")
    p.add_argument("--model", required=True, help="模型文件 (提供 S0, r, q)")
    p.add_argument("--price", type=float, required=True, help="期权价格")
    p.add_argument("--strike", type=float, required=True, help="行权价 K")
    p.add_argument("--T", type=parse_maturity, required=True, help="到期时间 (年)")
    p.add_argument("--putcall", choices=("call", "put"), default="call", help="看涨/看跌")
    p.add_argument("--out", help="结果 JSON 路径")

    p = sub.add_parser("table", help="复现数值表格")
    p.add_argument("name", choices=TABLE_NAMES, help="表格名称")
    p.add_argument("--no-mc", action="store_true", help="只计算理论列")
    _add_mc_args(p)
    p.add_argument("--out", help="CSV 路径")

    p = sub.add_parser("smile", help="隐含波动率微笑")
    p.add_argument("--model", required=True, help="模型文件 (JSON)")
    p.add_argument("--T", type=parse_maturity, required=True, help="到期时间 (年)")
    p.add_argument("--source", choices=SOURCES, default="approx", help="价格来源")
    p.add_argument("--k-min", type=float, help="最小 K/S0")
    p.add_argument("--k-max", type=float, help="最大 K/S0")
    p.add_argument("--n-points", type=int, help="网格点数")
    _add_mc_args(p)
    p.add_argument("--out", help="CSV 路径")

    p = sub.add_parser("convergence", help="期限收敛性")
    _add_contract_args(p)
    p.add_argument("--T-list", dest="T_list", type=parse_maturity_list, default=parse_maturity_list(DEFAULT_MATURITIES),
                   help=f"逗号分隔的期限列表 (默认 {DEFAULT_MATURITIES})")
    _add_mc_args(p)
    p.add_argument("--out", help="CSV 路径")

    return parser


def _apply_overrides(config: PricingConfig, args) -> PricingConfig:
    """命令行参数覆盖配置文件中的蒙特卡洛设置"""
    overrides = {}
    for flag, key in (("paths", "n_paths"), ("steps", "n_steps"), ("seed", "seed"), ("threads", "threads")):
        value = getattr(args, flag, None)
        if value is not None:
            overrides[key] = value
    if getattr(args, "antithetic", False):
        overrides["antithetic"] = True
    if getattr(args, "no_progress", False):
        overrides["progress"] = False
    if overrides:
        config.mc = replace(config.mc, **overrides)
    return config


def main(argv: Optional[List[str]] = None) -> int:
    """主函数"""
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    args = parser.parse_args(argv)

    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.INFO,
                        format="%(levelname)s %(name)s: %(message)s")

    commands = {
        "asym": AsianPricingApp.run_asym,
        "price": AsianPricingApp.run_price,
        "mc": AsianPricingApp.run_mc,
        "ivol": AsianPricingApp.run_ivol,
        "table": AsianPricingApp.run_table,
        "smile": AsianPricingApp.run_smile,
        "convergence": AsianPricingApp.run_convergence,
    }

    try:
        config = _apply_overrides(load_config(args.config), args)
        app = AsianPricingApp(config, argv)
        commands[args.command](app, args)
    except RegimeError as e:
        print(f"❌ {e}", file=sys.stderr)
        if e.suggestion:
            print(f"💡 {e.suggestion}", file=sys.stderr)
        return 2
    except (AsianPricingError, ValueError, FileNotFoundError) as e:
        print(f"❌ {e}", file=sys.stderr)
        return 2
    except Exception as e:
        print(f"❌ 处理失败: {e}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
