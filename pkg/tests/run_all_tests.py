#!/usr/bin/env python3
"""
测试套件主入口
按 unit / integration / system 分组运行，记录耗时并生成报告
"""

import sys
import os
import argparse
import subprocess
import time
from pathlib import Path
from datetime import datetime

TESTS_DIR = Path(__file__).parent
REPORT_PATH = TESTS_DIR / "test_report.md"

# (分组, 文件, 说明, 是否包含长时间蒙特卡洛)
TEST_SUITES = [
    ("unit", "unit/test_specfun.py", "特殊函数", False),
    ("unit", "unit/test_quadrature.py", "数值积分", False),
    ("unit", "unit/test_models.py", "模型定义", False),
    ("unit", "unit/test_asymptotics.py", "渐近系数", False),
    ("unit", "unit/test_approx.py", "解析近似", False),
    ("unit", "unit/test_mc.py", "蒙特卡洛", False),
    ("integration", "integration/test_published_tables.py", "表格复现与蒙特卡洛对照", True),
    ("system", "system/test_cli.py", "命令行", False),
]


def run_suite(test_path: Path) -> tuple:
    """在子进程中运行单个测试文件，返回 (状态, 摘要, 耗时)"""
    env = os.environ.copy()
    env['PYTHONPATH'] = str(TESTS_DIR.parent)

    start = time.perf_counter()
    result = subprocess.run([sys.executable, "-m", "pytest", str(test_path), "-q"],
                            capture_output=True, text=True, cwd=TESTS_DIR.parent, env=env)
    elapsed = time.perf_counter() - start

    lines = result.stdout.strip().splitlines()
    summary = lines[-1] if lines else result.stderr.strip()[-200:]
    if result.returncode != 0:
        print(result.stdout[-2000:])
        print(result.stderr)
    return ("PASS" if result.returncode == 0 else "FAIL"), summary, elapsed


def run_all_tests(fast: bool = False):
    """运行所有测试"""
    print("🧪 AsianJump 测试套件")
    print("=" * 80)

    results = []
    for group, test_file, description, slow in TEST_SUITES:
        if fast and slow:
            print(f"\n⏭️ 跳过: {description} (--fast)")
            results.append((group, test_file, "SKIP", "--fast", 0.0))
            continue

        test_path = TESTS_DIR / test_file
        if not test_path.exists():
            print(f"⚠️ 测试文件不存在: {test_file}")
            results.append((group, test_file, "MISSING", "文件不存在", 0.0))
            continue

        print(f"\n🔍 [{group}] {description}")
        print("-" * 60)
        try:
            status, summary, elapsed = run_suite(test_path)
        except OSError as e:
            print(f"💥 运行错误: {e}")
            results.append((group, test_file, "ERROR", str(e), 0.0))
            continue
        print(f"{'✅' if status == 'PASS' else '❌'} {summary} ({elapsed:.1f}s)")
        results.append((group, test_file, status, summary, elapsed))

    generate_test_report(results)

    failed = [r for r in results if r[2] not in ("PASS", "SKIP")]
    ran = [r for r in results if r[2] != "SKIP"]
    print(f"\n📊 测试结果: {len(ran) - len(failed)}/{len(ran)} 通过, 总耗时 {sum(r[4] for r in results):.1f}s")

    if not failed:
        print("🎉 所有测试通过!")
        return 0
    print("⚠️ 部分测试失败")
    return 1


def generate_test_report(results):
    """生成测试报告"""
    status_icon = {"PASS": "✅", "FAIL": "❌", "ERROR": "💥", "MISSING": "⚠️", "SKIP": "⏭️"}

    with open(REPORT_PATH, 'w', encoding='utf-8') as f:
        f.write("# 测试报告\n\n")
        f.write(f"生成时间: {datetime.now().isoformat()}\n\n")

        for group in ("unit", "integration", "system"):
            rows = [r for r in results if r[0] == group]
            if not rows:
                continue
            f.write(f"## {group}\n\n")
            f.write("| 测试文件 | 状态 | 耗时 (s) | 摘要 |\n")
            f.write("|----------|------|----------|------|\n")
            for _, test_file, status, summary, elapsed in rows:
                brief = summary[:60] + "..." if len(summary) > 60 else summary
                f.write(f"| {test_file} | {status_icon.get(status, '❓')} {status} | {elapsed:.1f} | {brief} |\n")
            f.write("\n")

    print(f"📄 测试报告已生成: {REPORT_PATH}")


if __name__ == "__main__":
    parser = argparse.ArgumentParser(description="运行全部测试")
    parser.add_argument("--fast", action="store_true", help="跳过包含 10 万路径蒙特卡洛的集成测试")
    args = parser.parse_args()
    sys.exit(run_all_tests(fast=args.fast))
