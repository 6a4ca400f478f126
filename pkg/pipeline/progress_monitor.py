"""
进度监控器
监控表格复现、参数扫描等长时间任务的各个阶段
"""

import time
from dataclasses import dataclass, field
from datetime import datetime
from typing import Any, Dict, List, Optional


@dataclass
class StageResult:
    """阶段结果"""
    stage_name: str
    start_time: float
    end_time: float = 0.0
    duration: float = 0.0
    status: str = "running"  # "running", "completed", "failed", "interrupted"
    total_items: int = 0
    passed_items: int = 0
    failed_items: int = 0
    details: Dict[str, Any] = field(default_factory=dict)
    errors: List[str] = field(default_factory=list)

    @property
    def checked_items(self) -> int:
        return self.passed_items + self.failed_items


class ProgressMonitor:
    """进度监控器"""

    def __init__(self, verbose: bool = True):
        self.verbose = verbose
        self.stages: List[StageResult] = []
        self.current_stage: Optional[StageResult] = None
        self.session_start_time = time.time()

    def _print(self, message: str) -> None:
        if self.verbose:
            print(message)

    def start_stage(self, stage_name: str, total_items: int = 0, details: Dict[str, Any] = None) -> None:
        """开始一个新阶段"""
        if self.current_stage and self.current_stage.status == "running":
            self.end_stage("interrupted")

        self._print(f"\n{'='*60}")
        self._print(f"🚀 开始阶段: {stage_name}")
        self._print(f"📊 条目数量: {total_items}")
        for key, value in (details or {}).items():
            self._print(f"   {key}: {value}")
        self._print(f"⏰ 开始时间: {datetime.now().strftime('%H:%M:%S')}")
        self._print(f"{'='*60}")

        self.current_stage = StageResult(
            stage_name=stage_name,
            start_time=time.time(),
            total_items=total_items,
            details=dict(details or {}),
        )

    def record_item(self, label: str, passed: Optional[bool], detail: str = "") -> None:
        """记录单个条目；passed 为 None 表示无对照值"""
        stage = self.current_stage
        if stage is not None and passed is not None:
            if passed:
                stage.passed_items += 1
            else:
                stage.failed_items += 1
        emoji = "📈" if passed is None else "✅" if passed else "❌"
        self._print(f"   {emoji} {label}: {detail}")

    def update_stage(self, details: Dict[str, Any] = None, error: str = None) -> None:
        """更新当前阶段"""
        if not self.current_stage:
            return
        if details:
            self.current_stage.details.update(details)
        if error:
            self.current_stage.errors.append(error)
            self._print(f"❌ 阶段错误: {error}")

    def end_stage(self, status: str = "completed") -> Optional[StageResult]:
        """结束当前阶段"""
        stage = self.current_stage
        if not stage:
            return None

        stage.end_time = time.time()
        stage.duration = stage.end_time - stage.start_time
        stage.status = status

        self._print(f"\n{'='*60}")
        status_emoji = "✅" if status == "completed" else "❌" if status == "failed" else "⚠️"
        self._print(f"{status_emoji} 阶段完成: {stage.stage_name}")
        if stage.checked_items:
            self._print(f"📊 对照结果: {stage.passed_items}/{stage.checked_items} 一致")
        self._print(f"⏱️  耗时: {stage.duration:.2f}秒")

        if stage.errors:
            self._print(f"❌ 错误数量: {len(stage.errors)}")
            for error in stage.errors[-3:]:  # 只显示最后3个错误
                self._print(f"   - {error}")

        self._print(f"{'='*60}\n")

        self.stages.append(stage)
        self.current_stage = None
        return stage

    def print_session_summary(self) -> None:
        """打印会话总结"""
        total_duration = time.time() - self.session_start_time

        self._print(f"\n{'='*80}")
        self._print("🎯 会话总结")
        self._print(f"{'='*80}")
        self._print(f"⏱️  总耗时: {total_duration:.2f}秒")
        self._print(f"📊 总阶段数: {len(self.stages)}")

        for i, stage in enumerate(self.stages, 1):
            status_emoji = "✅" if stage.status == "completed" else "❌" if stage.status == "failed" else "⚠️"
            self._print(f"   {i}. {status_emoji} {stage.stage_name} ({stage.duration:.2f}s)")
            if stage.checked_items:
                self._print(f"      对照: {stage.passed_items}/{stage.checked_items}")
            if stage.errors:
                self._print(f"      错误: {len(stage.errors)}个")

        self._print(f"{'='*80}\n")


# 全局监控器实例
monitor = ProgressMonitor()
