import json
import logging
from pathlib import Path

import numpy as np
import pandas as pd

from .exceptions import DomainError
from .trainer import TrainReport

logger = logging.getLogger(__name__)


def load_report(path):
    """Read a TrainReport from its report.json (or the directory holding it)"""
    path = Path(path)
    if path.is_dir():
        path = path / "report.json"
    if not path.exists():
        raise FileNotFoundError(f"Report not found: {path}")
    with open(path, "r", encoding="utf-8") as f:
        return TrainReport.from_dict(json.load(f))


def _labels(reports):
    labels, seen = [], {}
    for report in reports:
        base = f"{report.architecture}@{report.experiment}"
        seen[base] = seen.get(base, 0) + 1
        labels.append(base if seen[base] == 1 else f"{base}#{seen[base]}")
    return labels


def compare_reports(reports, labels=None):
    """Per-iteration mean test accuracy, one column per report, plus final-mean deltas.

    Deltas are taken against the first report.
    """
    if len(reports) < 2:
        raise DomainError(f"Comparison needs at least 2 reports, got {len(reports)}")
    grid = list(reports[0].iterations)
    for report in reports[1:]:
        if list(report.iterations) != grid:
            raise DomainError(
                f"Iteration grids differ: {report.architecture} has {len(report.iterations)} iterations, "
                f"expected {len(grid)}"
            )
    labels = list(labels) if labels is not None else _labels(reports)

    table = pd.DataFrame({"iteration": grid})
    for label, report in zip(labels, reports):
        table[label] = report.test_acc

    reference = reports[0].test_acc[-1]
    summary = pd.DataFrame([
        {
            "report": label,
            "final_test_acc_mean": report.test_acc[-1],
            "final_test_acc_std": report.test_acc_std[-1],
            "delta_vs_first": report.test_acc[-1] - reference,
        }
        for label, report in zip(labels, reports)
    ])
    return table, summary


class ReportAnalyzer:
    """Summary statistics of a finished training report"""

    def __init__(self, config=None):
        self.config = config or {}

    def run_analysis(self, report):
        results = {}
        results['final_metrics'] = self._final_metrics(report)
        results['convergence'] = self._convergence(report)
        results['runs'] = self._run_ranking(report)
        return results

    def _final_metrics(self, report):
        return {
            'final_train_loss': float(report.train_loss[-1]),
            'final_train_acc': float(report.train_acc[-1]),
            'final_test_acc_mean': float(report.test_acc[-1]),
            'final_test_acc_std': float(report.test_acc_std[-1]),
            'best_test_acc': float(np.max(report.test_acc)),
            'best_iteration': int(report.iterations[int(np.argmax(report.test_acc))]),
        }

    def _convergence(self, report):
        """First iteration whose mean test accuracy reaches 90% of the final value"""
        final = report.test_acc[-1]
        target = 0.9 * final
        for iteration, value in zip(report.iterations, report.test_acc):
            if value >= target:
                return {'target': float(target), 'iteration': int(iteration)}
        return {'target': float(target), 'iteration': None}

    def _run_ranking(self, report):
        if not report.runs:
            return []
        frame = pd.DataFrame([
            {'seed': run.seed, 'final_test_acc': run.final_test_acc, 'final_train_loss': run.train_loss[-1]}
            for run in report.runs
        ])
        return frame.sort_values(['final_test_acc', 'seed'], ascending=[False, True]).to_dict('records')
