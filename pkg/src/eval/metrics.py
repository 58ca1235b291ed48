from __future__ import annotations
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional
import csv
import io
import threading
import time


@dataclass
class TaskRecord:
    run_id: str
    task: str
    label: str
    start_ts: float
    end_ts: float
    success: bool
    latency_sec: float = 0.0
    error: str = ""
    extra: Dict[str, Any] = field(default_factory=dict)


class MetricsCollector:
    """
    Collects one record per unit of work (sweep row, simulate run, fit start)
    and exports them as CSV / summary dict. Safe to feed from worker threads.
    """
    def __init__(self, run_id: Optional[str] = None):
        self.run_id = run_id or f"run-{int(time.time()*1000)}"
        self._lock = threading.Lock()
        self._open: Dict[str, float] = {}
        self.records: List[TaskRecord] = []

    def on_start(self, task: str, label: str) -> None:
        with self._lock:
            self._open[f"{task}:{label}"] = time.time()

    def on_end(self, task: str, label: str, success: bool, error: str = "",
               **extra: Any) -> TaskRecord:
        et = time.time()
        with self._lock:
            st = self._open.pop(f"{task}:{label}", et)
            rec = TaskRecord(
                run_id=self.run_id,
                task=task,
                label=label,
                start_ts=st,
                end_ts=et,
                success=bool(success),
                latency_sec=et - st,
                error=error,
                extra=dict(extra),
            )
            self.records.append(rec)
        return rec

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf)
        writer.writerow(list(TaskRecord.__dataclass_fields__.keys()))
        for r in sorted(self.records, key=lambda r: (r.task, r.start_ts)):
            writer.writerow([
                r.run_id, r.task, r.label, r.start_ts, r.end_ts, r.success,
                r.latency_sec, r.error, r.extra,
            ])
        return buf.getvalue()

    def summary(self) -> Dict[str, Any]:
        total = len(self.records)
        ok = sum(1 for r in self.records if r.success)
        return {
            "run_id": self.run_id,
            "total_tasks": total,
            "success_rate": (ok/total) if total else 0.0,
            "avg_latency_sec": sum(r.latency_sec for r in self.records)/total if total else 0.0,
        }
