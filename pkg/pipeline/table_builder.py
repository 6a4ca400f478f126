"""
数值表格复现
按已发表表格的参数重算渐近/近似价格，可选附带蒙特卡洛列，并逐项对照印刷值
"""

import logging
import math
from dataclasses import replace
from fractions import Fraction
from pathlib import Path
from typing import Any, Dict, List, Optional, Union

import pandas as pd
import yaml

from pipeline.progress_monitor import ProgressMonitor, monitor as default_monitor
from pricing.approx import approx_price
from pricing.asymptotics import floating_otm_put_coeff, otm_call_coeff
from pricing.config import PricingConfig
from pricing.mc import mc_price_strip
from pricing.models import DiffusionSpec, Instrument, ModelSpec, load_model_spec

logger = logging.getLogger(__name__)

PROJECT_ROOT = Path(__file__).resolve().parent.parent
REFERENCE_PATH = PROJECT_ROOT / "data" / "reference" / "published_tables.yaml"
TABLE_NAMES = ("mjd", "kou", "vg", "float")


def printed_decimals(printed: Union[str, float]) -> int:
    text = str(printed)
    return len(text.split(".")[1]) if "." in text else 0


def matches_printed(value: float, printed: Union[str, float]) -> bool:
    """与印刷值在最后一位有效小数的一个单位内一致"""
    return abs(value - float(printed)) <= 10.0 ** (-printed_decimals(printed)) + 1e-12


def maturity_label(T: float) -> str:
    frac = Fraction(T).limit_denominator(1000)
    return f"{frac.numerator}/{frac.denominator}"


def load_reference(path: Optional[Union[str, Path]] = None) -> Dict[str, Any]:
    path = Path(path) if path else REFERENCE_PATH
    if not path.exists():
        raise FileNotFoundError(f"参照表文件不存在: {path}")
    with open(path, 'r', encoding='utf-8') as f:
        return yaml.safe_load(f)


class PublishedTableBuilder:
    """表格复现器"""

    def __init__(self, config: PricingConfig, with_mc: bool = True,
                 reference_path: Optional[Union[str, Path]] = None,
                 monitor: Optional[ProgressMonitor] = None):
        self.config = config
        self.with_mc = with_mc
        self.reference = load_reference(reference_path)
        self.monitor = monitor or default_monitor

    def _model(self, section: Dict[str, Any]) -> ModelSpec:
        return load_model_spec(PROJECT_ROOT / section["model"])

    def model_path(self, name: str) -> str:
        key = "floating" if name == "float" else name
        return str(PROJECT_ROOT / self.reference[key]["model"])

    def build(self, name: str) -> pd.DataFrame:
        builders = {
            "mjd": self.build_mjd,
            "kou": self.build_kou,
            "vg": self.build_vg,
            "float": self.build_floating,
        }
        if name not in builders:
            raise ValueError(f"未知的表格: {name}，可选 {', '.join(TABLE_NAMES)}")
        return builders[name]()

    def build_mjd(self) -> pd.DataFrame:
        """Merton 模型固定行权价: 跳跃项、扩散项、合计与蒙特卡洛"""
        ref = self.reference["mjd"]
        model, T = self._model(ref), float(ref["maturity"])
        self.monitor.start_stage("表格 mjd", len(ref["rows"]), {"T": maturity_label(T)})

        instruments = [Instrument("fixed", r["side"], strike=float(r["strike"]), maturity=T) for r in ref["rows"]]
        mc = self._mc(model, instruments)

        rows = []
        for i, (r, inst) in enumerate(zip(ref["rows"], instruments)):
            ap = approx_price(model, inst, quad_cfg=self.config.quad)
            row = {
                "strike": inst.strike,
                "side": inst.putcall,
                "jump_term": ap.jump_term,
                "diffusive": ap.diffusive,
                "total": ap.total,
                "printed_jump_term": r["jump_term"],
                "printed_diffusive": r["diffusive"],
                "printed_total": r["total"],
            }
            if mc:
                row.update({"mc_price": mc[i].price, "mc_std_err": mc[i].std_err,
                            "printed_mc": r["mc"], "printed_std_err": r["std_err"]})
            ok = all(matches_printed(row[k], r[k]) for k in ("jump_term", "diffusive", "total"))
            self.monitor.record_item(f"{inst.putcall} K={inst.strike:g}", ok,
                                     f"{ap.jump_term:.4f} + {ap.diffusive:.4f} = {ap.total:.4f}")
            rows.append(row)

        self.monitor.end_stage()
        return pd.DataFrame(rows)

    def build_kou(self) -> pd.DataFrame:
        """Kou 模型: 不同扩散波动率下的近似价格，平值处给出看跌/看涨两个单侧值"""
        ref = self.reference["kou"]
        base, T = self._model(ref), float(ref["maturity"])
        S0 = base.market.s0
        misprints = {(m["sigma"], m["k"]) for m in ref.get("known_misprints", [])}
        self.monitor.start_stage("表格 kou", len(ref["rows"]), {"T": maturity_label(T)})

        by_sigma: Dict[float, List[Dict[str, Any]]] = {}
        for r in ref["rows"]:
            by_sigma.setdefault(float(r["sigma"]), []).append(r)

        rows = []
        for sigma, group in by_sigma.items():
            model = replace(base, diffusion=DiffusionSpec(kind="constant", sigma_const=sigma))
            instruments = [Instrument("fixed", "put" if r["k"] < 1 else "call", strike=r["k"] * S0, maturity=T)
                           for r in group]
            mc = self._mc(model, instruments)

            for i, r in enumerate(group):
                k, K = float(r["k"]), float(r["k"]) * S0
                put = approx_price(model, Instrument("fixed", "put", strike=K, maturity=T),
                                   quad_cfg=self.config.quad).total if k <= 1 else math.nan
                call = approx_price(model, Instrument("fixed", "call", strike=K, maturity=T),
                                    quad_cfg=self.config.quad).total if k >= 1 else math.nan
                printed = str(r["theory"])
                if k == 1:
                    decimals = printed_decimals(printed.split("/")[0])
                    theory = f"{put:.{decimals}f}/{call:.{decimals}f}"
                    p_put, p_call = printed.split("/")
                    ok = matches_printed(put, p_put) and matches_printed(call, p_call)
                else:
                    value = put if k < 1 else call
                    theory = f"{value:.3f}"
                    ok = matches_printed(value, printed)

                misprint = (sigma, k) in misprints
                row = {"sigma": sigma, "k": k, "theory_put": put, "theory_call": call, "theory": theory,
                       "printed_theory": printed, "known_misprint": misprint}
                if mc:
                    row.update({"mc_price": mc[i].price, "mc_std_err": mc[i].std_err,
                                "printed_mc": r["mc"], "printed_std_err": r["std_err"]})
                note = " (印刷值有误)" if misprint else ""
                self.monitor.record_item(f"σ={sigma:g} k={k:g}", None if misprint else ok,
                                         f"{theory} vs {printed}{note}")
                rows.append(row)

        self.monitor.end_stage()
        return pd.DataFrame(rows)

    def build_vg(self) -> pd.DataFrame:
        """VG 模型虚值看涨: 短期限系数 (闭式与数值积分) 与不同期限的 (1/T)·价格"""
        ref = self.reference["vg"]
        model = self._model(ref)
        S0 = model.market.s0
        maturities = [float(T) for T in ref["maturities"]]
        self.monitor.start_stage("表格 vg", len(ref["rows"]),
                                 {"期限": ", ".join(maturity_label(T) for T in maturities)})

        mc_cols = self._mc_columns(model, maturities,
                                   lambda T: [Instrument("fixed", "call", strike=r["k"] * S0, maturity=T)
                                              for r in ref["rows"]])
        rows = []
        for i, r in enumerate(ref["rows"]):
            K = float(r["k"]) * S0
            closed = otm_call_coeff(model, K, method="closed_form", quad_cfg=self.config.quad,
                                    allow_boundary=True)
            quad = otm_call_coeff(model, K, method="quadrature", quad_cfg=self.config.quad,
                                  allow_boundary=True)
            row = {"k": float(r["k"]), "short_maturity": closed.value,
                   "short_maturity_quad": quad.value, "printed_short_maturity": r["short_maturity"]}
            row.update(self._mc_row(mc_cols, i, r))
            ok = matches_printed(closed.value, r["short_maturity"])
            self.monitor.record_item(f"k={r['k']:.2f}", ok,
                                     f"{closed.value:.3f} (积分 {quad.value:.3f}) vs {r['short_maturity']}")
            rows.append(row)

        self.monitor.end_stage()
        return pd.DataFrame(rows)

    def build_floating(self) -> pd.DataFrame:
        """Merton 模型浮动行权价看跌: 短期限系数与不同期限的 (1/T)·价格"""
        ref = self.reference["floating"]
        model = self._model(ref)
        maturities = [float(T) for T in ref["maturities"]]
        self.monitor.start_stage("表格 float", len(ref["rows"]),
                                 {"期限": ", ".join(maturity_label(T) for T in maturities)})

        mc_cols = self._mc_columns(model, maturities,
                                   lambda T: [Instrument("floating", "put", kappa=float(r["kappa"]), maturity=T)
                                              for r in ref["rows"]])
        rows = []
        for i, r in enumerate(ref["rows"]):
            coeff = floating_otm_put_coeff(model, float(r["kappa"]), quad_cfg=self.config.quad,
                                           allow_boundary=True)
            row = {"kappa": float(r["kappa"]), "short_maturity": coeff.value,
                   "printed_short_maturity": r["short_maturity"]}
            row.update(self._mc_row(mc_cols, i, r))
            ok = matches_printed(coeff.value, r["short_maturity"])
            self.monitor.record_item(f"κ={r['kappa']:.2f}", ok, f"{coeff.value:.3f} vs {r['short_maturity']}")
            rows.append(row)

        self.monitor.end_stage()
        return pd.DataFrame(rows)

    def _mc(self, model: ModelSpec, instruments: List[Instrument]):
        if not self.with_mc:
            return None
        return mc_price_strip(model, instruments, self.config.mc)

    def _mc_columns(self, model: ModelSpec, maturities: List[float], make_instruments) -> Dict[float, Any]:
        if not self.with_mc:
            return {}
        return {T: mc_price_strip(model, make_instruments(T), self.config.mc) for T in maturities}

    @staticmethod
    def _mc_row(mc_cols: Dict[float, Any], i: int, ref_row: Dict[str, Any]) -> Dict[str, Any]:
        row = {}
        for j, (T, results) in enumerate(mc_cols.items()):
            label = maturity_label(T)
            row[f"mc_T={label}"] = results[i].price / T
            row[f"mc_std_err_T={label}"] = results[i].std_err / T
            row[f"printed_mc_T={label}"] = ref_row["mc"][j]
            row[f"printed_std_err_T={label}"] = ref_row["std_err"][j]
        return row
