#!/usr/bin/env python3
"""
AsianJump 快速设置脚本
"""

import subprocess
import sys
from pathlib import Path

DEFAULT_CONFIG = Path("configs/default_config.yaml")
LOCAL_CONFIG = Path("configs/local_config.yaml")


def install_dependencies():
    """安装依赖包"""
    print("📦 安装Python依赖包...")
    try:
        subprocess.check_call([sys.executable, "-m", "pip", "install", "-r", "requirements.txt"])
        print("✅ 依赖包安装完成")
    except subprocess.CalledProcessError as e:
        print(f"❌ 依赖包安装失败: {e}")
        return False
    return True


def setup_config():
    """生成本地配置文件 configs/local_config.yaml"""
    print("\n⚙️  设置配置文件...")

    if LOCAL_CONFIG.exists():
        print(f"✅ {LOCAL_CONFIG} 已存在")
        return True

    if not DEFAULT_CONFIG.exists():
        print(f"❌ {DEFAULT_CONFIG} 不存在")
        return False

    import yaml  # 依赖安装之后才可用

    with open(DEFAULT_CONFIG, 'r', encoding='utf-8') as f:
        defaults = yaml.safe_load(f)
    mc = defaults["monte_carlo"]

    # 交互式配置
    print("\n请输入配置信息（直接回车使用默认值）:")
    local = {"monte_carlo": {}}

    threads = input(f"蒙特卡洛线程数 (0 表示全部 CPU) [{mc['threads']}]: ").strip()
    if threads:
        local["monte_carlo"]["threads"] = int(threads)

    n_paths = input(f"默认路径数 [{mc['n_paths']}]: ").strip()
    if n_paths:
        local["monte_carlo"]["n_paths"] = int(n_paths)

    output_dir = input(f"输出目录 [{defaults['output_dir']}]: ").strip()
    if output_dir:
        local["output_dir"] = output_dir

    with open(LOCAL_CONFIG, 'w', encoding='utf-8') as f:
        yaml.safe_dump(local, f, allow_unicode=True, sort_keys=False)

    print(f"✅ 配置文件创建完成，使用方式: python main.py --config {LOCAL_CONFIG} ...")
    return True


def create_directories():
    """创建必要的目录"""
    print("\n📁 创建目录结构...")

    directories = [
        "results/tables",
    ]

    for dir_path in directories:
        Path(dir_path).mkdir(parents=True, exist_ok=True)
        print(f"✅ 创建目录: {dir_path}")


def test_installation():
    """核对表格理论列"""
    print("\n🧪 测试安装...")

    try:
        result = subprocess.run([sys.executable, "scripts/verify_tables.py"],
                                capture_output=True, text=True, timeout=300)

        if result.returncode == 0:
            print("✅ 表格理论列核对通过")
        else:
            print("⚠️  表格理论列核对失败")
            print(result.stdout[-2000:])
            print(result.stderr)

    except subprocess.TimeoutExpired:
        print("⚠️  核对超时")
    except FileNotFoundError:
        print("⚠️  核对脚本不存在")


def main():
    """主函数"""
    print("🚀 AsianJump 快速设置")
    print("=" * 50)

    # 检查Python版本
    if sys.version_info < (3, 10):
        print("❌ 需要Python 3.10或更高版本")
        sys.exit(1)

    # 安装依赖
    if not install_dependencies():
        sys.exit(1)

    # 设置配置
    if not setup_config():
        sys.exit(1)

    # 创建目录
    create_directories()

    # 测试安装
    test_installation()

    print("\n🎉 设置完成！")
    print("\n📋 下一步:")
    print("1. 运行 python main.py asym --model data/models/mjd.json --strike 1020 计算渐近系数")
    print("2. 运行 python main.py table mjd 复现表格 (含蒙特卡洛)")
    print("3. 运行 python tests/run_all_tests.py 执行测试套件")


if __name__ == "__main__":
    main()
