#!/usr/bin/env python3
"""
系统测试: 命令行各子命令的输出、运行清单与退出码
"""

import sys
import os
import json
from pathlib import Path
sys.path.append(os.path.dirname(os.path.dirname(os.path.dirname(os.path.abspath(__file__)))))

import pandas as pd
import pytest

from main import main, parse_maturity
from pipeline.run_recorder import RunRecorder

PROJECT_ROOT = Path(__file__).resolve().parents[2]
MJD = str(PROJECT_ROOT / "data" / "models" / "mjd.json")
VG = str(PROJECT_ROOT / "data" / "models" / "vg.json")
MC_FLAGS = ["--paths", "2000", "--steps", "10", "--threads", "1", "--no-progress"]


def read_json(path: Path):
    with open(path, 'r', encoding='utf-8') as f:
        return json.load(f)


def test_parse_maturity():
    assert parse_maturity("1/52") == pytest.approx(1.0 / 52.0)
    assert parse_maturity("0.25") == 0.25


def test_asym_command(tmp_path, capsys):
    """asym: JSON 输出与运行清单"""
    print("🖥️ 测试 asym 命令")
    capsys.readouterr()
    out = tmp_path / "asym.json"
    assert main(["asym", "--model", MJD, "--strike", "1020", "--out", str(out)]) == 0

    stdout = json.loads(capsys.readouterr().out)
    assert stdout["value"] == pytest.approx(1.783407, abs=1e-5)
    assert stdout["regime"] == "OTM"
    assert read_json(out) == stdout

    manifest = RunRecorder.load_manifest(f"{out}.manifest.json")
    assert manifest.command == "asym"
    assert manifest.model["jumps"]["lambda"] == 0.175
    assert manifest.outputs == [str(out)]
    assert manifest.config["quad"]["tail_eps"] == 1e-14
    print("✅ asym 命令正常")


def test_asym_variants(capsys):
    assert main(["asym", "--model", MJD, "--strike", "1000", "--regime", "atm"]) == 0
    assert json.loads(capsys.readouterr().out)["regime"] == "ATM"

    assert main(["asym", "--model", MJD, "--style", "floating", "--putcall", "put",
                 "--kappa", "1.02", "--method", "quad"]) == 0
    data = json.loads(capsys.readouterr().out)
    assert data["method"] == "quadrature"
    assert data["value"] == pytest.approx(25.0334, abs=1e-3)

    assert main(["asym", "--model", VG, "--strike", "1000", "--regime", "boundary"]) == 0
    assert json.loads(capsys.readouterr().out)["value"] == pytest.approx(399.548, abs=1e-3)

    assert main(["asym", "--model", MJD, "--strike", "1000", "--ratio"]) == 0
    assert json.loads(capsys.readouterr().out)["asian_european_ratio"] == pytest.approx(3 ** -0.5)

    assert main(["asym", "--model", MJD, "--style", "european", "--putcall", "put", "--strike", "960"]) == 0
    assert json.loads(capsys.readouterr().out)["instrument"]["style"] == "european"


def test_european_and_floating_atm(capsys):
    """欧式系数可以序列化；浮动行权价 κ=1 的平值系数与固定行权价相同"""
    for strike, putcall in (("960", "put"), ("1040", "call")):
        assert main(["asym", "--model", MJD, "--style", "european", "--putcall", putcall, "--strike", strike]) == 0
        data = json.loads(capsys.readouterr().out)
        assert data["degenerate"] is False
        assert data["value"] > 0

    assert main(["asym", "--model", MJD, "--strike", "1000", "--regime", "atm"]) == 0
    fixed = json.loads(capsys.readouterr().out)
    assert main(["asym", "--model", MJD, "--style", "floating", "--putcall", "put", "--kappa", "1.0",
                 "--regime", "atm"]) == 0
    floating = json.loads(capsys.readouterr().out)
    assert floating["regime"] == "ATM"
    assert floating["instrument"]["style"] == "floating"
    assert floating["instrument"]["kappa"] == 1.0
    assert floating["value"] == fixed["value"]

    assert main(["asym", "--model", MJD, "--style", "floating", "--kappa", "1.05", "--regime", "atm"]) == 2
    assert "--kappa 1" in capsys.readouterr().err


def test_regime_errors_exit_code(capsys):
    """区间错误返回 2 并给出建议"""
    assert main(["asym", "--model", MJD, "--strike", "1000"]) == 2
    err = capsys.readouterr().err
    assert "💡" in err and "--regime" in err

    assert main(["asym", "--model", VG, "--strike", "1000", "--regime", "atm"]) == 2
    assert main(["asym", "--model", MJD, "--strike", "980"]) == 2
    assert main(["asym", "--model", MJD]) == 2
    assert main(["asym", "--model", str(PROJECT_ROOT / "missing.json"), "--strike", "1020"]) == 2


def test_price_and_ivol(tmp_path, capsys):
    assert main(["price", "--model", MJD, "--strike", "1000", "--T", "1/52", "--putcall", "call"]) == 0
    data = json.loads(capsys.readouterr().out)
    assert data["total"] == pytest.approx(4.0659, abs=1e-4)
    assert data["forward"] == 1000.0

    out = tmp_path / "ivol.json"
    assert main(["ivol", "--model", MJD, "--price", "4.0659", "--strike", "1000", "--T", "1/52",
                 "--out", str(out)]) == 0
    assert read_json(out)["implied_vol"] == pytest.approx(0.0735, abs=2e-4)

    assert main(["ivol", "--model", MJD, "--price", "0", "--strike", "1050", "--T", "1/52"]) == 2


def test_mc_command(tmp_path, capsys):
    """mc: 相同种子结果相同，清单记录种子"""
    out = tmp_path / "mc.json"
    args = ["mc", "--model", MJD, "--strike", "1020", "--T", "1/52", "--seed", "5"] + MC_FLAGS
    assert main(args + ["--out", str(out)]) == 0
    first = json.loads(capsys.readouterr().out)
    assert main(args) == 0
    second = json.loads(capsys.readouterr().out)
    assert first["price"] == second["price"]
    assert first["n_paths"] == 2000

    manifest = RunRecorder.load_manifest(f"{out}.manifest.json")
    assert manifest.seed == 5
    assert manifest.config["mc"]["n_steps"] == 10


def test_table_command(tmp_path):
    """table: 只算理论列时写出 CSV 与清单"""
    print("🖥️ 测试 table 命令")
    out = tmp_path / "mjd.csv"
    assert main(["table", "mjd", "--no-mc", "--out", str(out)]) == 0
    df = pd.read_csv(out)
    assert len(df) == 6
    assert list(df["total"]) == pytest.approx([0.4112, 0.5448, 4.5419, 4.0659, 0.1309, 0.0290], abs=1e-4)
    manifest = read_json(Path(f"{out}.manifest.json"))
    assert manifest["seed"] is None
    assert manifest["model_path"].endswith("mjd.json")
    print("✅ table 命令正常")


def test_smile_and_convergence(tmp_path):
    smile = tmp_path / "smile.csv"
    assert main(["smile", "--model", MJD, "--T", "1/12", "--k-min", "0.98", "--k-max", "1.02",
                 "--n-points", "3", "--out", str(smile)]) == 0
    df = pd.read_csv(smile)
    assert set(df["source"]) == {"approx"}
    assert len(df) == 4

    conv = tmp_path / "conv.csv"
    assert main(["convergence", "--model", MJD, "--strike", "1040", "--T-list", "1/52,1/12",
                 "--out", str(conv)] + MC_FLAGS) == 0
    df = pd.read_csv(conv)
    assert list(df["T"]) == pytest.approx([1.0 / 12.0, 1.0 / 52.0])
    assert "theory" in df.columns
    assert Path(f"{conv}.manifest.json").exists()


def test_config_file_and_env(tmp_path, capsys, monkeypatch):
    """配置文件与环境变量覆盖默认值"""
    cfg = tmp_path / "config.yaml"
    cfg.write_text("monte_carlo:\n  n_paths: 3000\n  n_steps: 12\n  progress: false\n", encoding="utf-8")
    monkeypatch.setenv("ASIANJUMP_THREADS", "2")
    out = tmp_path / "mc.json"
    assert main(["--config", str(cfg), "mc", "--model", MJD, "--strike", "1020", "--T", "1/52",
                 "--out", str(out)]) == 0
    capsys.readouterr()
    manifest = read_json(Path(f"{out}.manifest.json"))
    assert manifest["config"]["mc"]["n_paths"] == 3000
    assert manifest["config"]["mc"]["threads"] == 2


if __name__ == "__main__":
    sys.exit(pytest.main([__file__, "-v"]))
