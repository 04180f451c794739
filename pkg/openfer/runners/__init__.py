"""
Protocol runners (OV-FER tasks 1-4 and custom openness cells).
"""
from .protocol import (
    TASKS, CellResult, ProtocolReport, TaskSpec, default_split, fixed_partition,
    load_protocol_report, run_protocol, task_spec,
)

__all__ = [
    "TASKS", "CellResult", "ProtocolReport", "TaskSpec", "default_split", "fixed_partition",
    "load_protocol_report", "run_protocol", "task_spec",
]
