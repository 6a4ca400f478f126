#!/usr/bin/env python3
"""
理论列核对工具
不运行蒙特卡洛，只重算四张表格的理论列并与印刷值逐项对照，
同时核对超几何函数的库实现与级数求和
"""

import sys
import os
sys.path.append(os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

import argparse
import logging

from pipeline.progress_monitor import monitor
from pipeline.table_builder import TABLE_NAMES, PublishedTableBuilder
from pricing.config import load_config
from pricing.specfun import hyp2f1_partial_sum, hyp2f1_restricted


def check_hyp2f1(config) -> bool:
    """库实现与级数求和在 Kou 参数附近的一致性"""
    print("🔍 核对 ₂F₁(1, b; b+3; z)")
    ok = True
    for b in (2.5, 24.0, 25.0):
        for z in (0.0, 0.5, 0.9, 1000 / 1050):
            lib = hyp2f1_restricted(b, z)
            ref = hyp2f1_partial_sum(b, z, config.specfun)
            good = abs(lib - ref) <= 1e-12 * abs(ref)
            ok &= good
            print(f"   {'✅' if good else '❌'} b={b:g} z={z:.4f}: {lib:.15g} vs {ref:.15g}")
    return ok


def main():
    parser = argparse.ArgumentParser(description="核对表格理论列")
    parser.add_argument("tables", nargs="*", choices=TABLE_NAMES, default=list(TABLE_NAMES), help="要核对的表格")
    parser.add_argument("--config", help="配置文件路径")
    args = parser.parse_args()

    logging.basicConfig(level=logging.ERROR)
    config = load_config(args.config)

    all_ok = check_hyp2f1(config)
    builder = PublishedTableBuilder(config, with_mc=False)
    for name in args.tables:
        builder.build(name)
        stage = monitor.stages[-1]
        all_ok &= stage.failed_items == 0

    monitor.print_session_summary()
    print("✅ 全部一致" if all_ok else "❌ 存在不一致条目")
    return 0 if all_ok else 1


if __name__ == "__main__":
    sys.exit(main())
