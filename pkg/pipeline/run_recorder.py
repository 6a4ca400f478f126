"""
运行记录器
保存表格 (CSV)、标量结果 (JSON)，并为每个输出写入 <out>.manifest.json 运行清单
"""

import json
import platform
import sys
from dataclasses import asdict, dataclass, field
from datetime import datetime
from pathlib import Path
from typing import Any, Dict, List, Optional, Union

import pandas as pd

# CSV 中浮点数保留的有效数字
FLOAT_FORMAT = "%.12g"


@dataclass
class RunManifest:
    """运行清单: 复现一次输出所需的全部输入"""
    command: str
    argv: List[str]
    model_path: Optional[str]
    model: Optional[Dict[str, Any]]
    config: Dict[str, Any]
    seed: Optional[int]
    outputs: List[str] = field(default_factory=list)
    created_at: str = field(default_factory=lambda: datetime.now().isoformat())
    python: str = field(default_factory=lambda: f"{platform.python_implementation()} {sys.version.split()[0]}")


class RunRecorder:
    """运行记录器"""

    def __init__(self, base_path: Union[str, Path] = "results"):
        self.base_path = Path(base_path)

    def resolve(self, out: Optional[Union[str, Path]], default_name: str) -> Path:
        """未指定输出路径时写入 base_path/default_name"""
        path = Path(out) if out else self.base_path / default_name
        path.parent.mkdir(parents=True, exist_ok=True)
        return path

    def save_table(self, df: pd.DataFrame, path: Union[str, Path]) -> str:
        """保存表格为 CSV"""
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        df.to_csv(path, index=False, float_format=FLOAT_FORMAT, encoding='utf-8')
        print(f"💾 保存表格: {path} ({len(df)} 行)")
        return str(path)

    def save_json(self, data: Dict[str, Any], path: Union[str, Path]) -> str:
        """保存标量结果为 JSON"""
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, 'w', encoding='utf-8') as f:
            json.dump(data, f, indent=2, ensure_ascii=False)
        return str(path)

    def write_manifest(self, manifest: RunManifest, out_path: Union[str, Path]) -> str:
        """写入 <out>.manifest.json"""
        manifest_path = Path(f"{out_path}.manifest.json")
        manifest_path.parent.mkdir(parents=True, exist_ok=True)
        with open(manifest_path, 'w', encoding='utf-8') as f:
            json.dump(asdict(manifest), f, indent=2, ensure_ascii=False, default=str)
        return str(manifest_path)

    @staticmethod
    def load_manifest(path: Union[str, Path]) -> RunManifest:
        """读取运行清单"""
        with open(path, 'r', encoding='utf-8') as f:
            data = json.load(f)
        return RunManifest(**data)
