"""
Console reporting for tracker runs: metric blocks, training progress and tables
"""
from typing import Any, Dict, Mapping, Optional, Sequence

import pandas as pd

from .metrics import MetricsReport

# Report fields printed as percentages
RATE_FIELDS = ('occlusion_precision', 'occlusion_recall', 'post_occlusion_success')


def _label(key: str) -> str:
    return key.replace('_', ' ').title()


class CLIFormatter:
    """Line formats shared by every subcommand"""

    @staticmethod
    def success(message: str) -> str:
        return f"✅ {message}"

    @staticmethod
    def info(message: str) -> str:
        return f"ℹ️  {message}"

    @staticmethod
    def stage(index: int, total: int, message: str) -> str:
        """Numbered stage of a long-running command"""
        return f"\n⏳ [{index}/{total}] {message}"

    @staticmethod
    def value(label: str, value: Any, rate: bool = False) -> str:
        """Aligned label/value line; None prints as n/a, floats to four places"""
        if value is None or (isinstance(value, float) and pd.isna(value)):
            text = "n/a"
        elif rate:
            text = f"{100.0 * value:.1f}%"
        elif isinstance(value, float):
            text = f"{value:.4f}"
        else:
            text = str(value)
        return f"   {label:<24} {text}"

    @staticmethod
    def heading(title: str) -> str:
        return f"\n📈 {title}"

    @staticmethod
    def row(cells: Sequence[str]) -> str:
        return "   • " + ", ".join(cells)


class ProgressReporter:
    """Numbered stages and loss readouts for train-predictor"""

    def __init__(self, total_steps: int = 3):
        self.current_step = 0
        self.total_steps = total_steps

    def start_workflow(self, workflow_name: str) -> None:
        print(f"🧠 Starting {workflow_name}")

    def step(self, message: str) -> None:
        self.current_step += 1
        print(CLIFormatter.stage(self.current_step, self.total_steps, message))

    def success(self, message: str) -> None:
        print(CLIFormatter.success(message))

    def result(self, label: str, value: Any) -> None:
        print(CLIFormatter.value(label, value))

    def stats(self, stats_dict: Mapping[str, Any]) -> None:
        """Report statistics, skipping absent values"""
        for key, value in stats_dict.items():
            if value is not None:
                self.result(_label(key), value)


def print_metrics(report: MetricsReport, losses: Optional[Dict[str, float]] = None) -> None:
    print(CLIFormatter.heading(f"Tracking metrics over {report.frames} frames"))
    for key, value in report.to_dict().items():
        if key != 'frames':
            print(CLIFormatter.value(_label(key), value, rate=key in RATE_FIELDS and value is not None))
    if losses:
        print(CLIFormatter.heading("Supervision losses"))
        for key, value in losses.items():
            print(CLIFormatter.value(key, value))


def print_table(title: str, table: pd.DataFrame, columns=None) -> None:
    """One bullet per row, floats to three places"""
    print(CLIFormatter.heading(title))
    if table.empty:
        print(CLIFormatter.info("no rows"))
        return
    columns = list(columns or table.columns)
    for record in table[columns].itertuples(index=False):
        cells = []
        for name, value in zip(columns, record):
            if isinstance(value, float):
                value = "n/a" if pd.isna(value) else f"{value:.3f}"
            cells.append(f"{name}={value}")
        print(CLIFormatter.row(cells))
