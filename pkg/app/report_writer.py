import json
import logging
import platform
from datetime import datetime
from pathlib import Path

import networkx as nx
import numpy as np
import pandas as pd

logger = logging.getLogger(__name__)


def environment_versions():
    return {
        'python': platform.python_version(),
        'numpy': np.__version__,
        'pandas': pd.__version__,
        'networkx': nx.__version__,
    }


class ReportWriter:
    """Write training, verification and comparison artifacts"""

    def __init__(self, reports_dir):
        self.reports_dir = Path(reports_dir)
        self.reports_dir.mkdir(parents=True, exist_ok=True)

    def write_train_report(self, report, resolved_config, analysis=None):
        """report.json, report.csv, runs.csv, config_snapshot.json and summary.md"""
        written = {}

        report_path = self.reports_dir / 'report.json'
        with open(report_path, 'w', encoding='utf-8') as f:
            json.dump(report.to_dict(), f, indent=2)
        written['report_json'] = str(report_path)

        csv_path = self.reports_dir / 'report.csv'
        report.to_frame().to_csv(csv_path, index=False)
        written['report_csv'] = str(csv_path)

        runs_path = self.reports_dir / 'runs.csv'
        report.runs_frame().to_csv(runs_path, index=False)
        written['runs_csv'] = str(runs_path)

        snapshot_path = self.reports_dir / 'config_snapshot.json'
        snapshot = {
            'config': resolved_config,
            'train_config': report.config,
            'config_hash': report.config_hash,
            'seeds': report.seeds,
            'versions': environment_versions(),
        }
        with open(snapshot_path, 'w', encoding='utf-8') as f:
            json.dump(snapshot, f, indent=2, sort_keys=True)
        written['config_snapshot'] = str(snapshot_path)

        written['summary'] = self._write_train_summary(report, analysis or {})
        logger.info(f"Training report saved to: {self.reports_dir}")
        return written

    def write_verify_reports(self, reports, name='verify'):
        frame = pd.DataFrame([
            {
                'architecture': r.architecture,
                'group': getattr(r.group, 'value', r.group),
                'check': r.check,
                'samples': r.samples,
                'tolerance': r.tolerance,
                'max_residual': r.max_residual,
                'passed': r.passed,
                'broken_at': ';'.join(f"{k}@{v}" for k, v in r.broken_at.items()),
            }
            for r in reports
        ])
        csv_path = self.reports_dir / f'{name}.csv'
        frame.to_csv(csv_path, index=False)
        json_path = self.reports_dir / f'{name}.json'
        with open(json_path, 'w', encoding='utf-8') as f:
            json.dump([r.to_dict() for r in reports], f, indent=2)
        return frame

    def write_comparison(self, table, summary, name='compare'):
        table_path = self.reports_dir / f'{name}.csv'
        table.to_csv(table_path, index=False)
        summary_path = self.reports_dir / f'{name}_summary.csv'
        summary.to_csv(summary_path, index=False)
        logger.info(f"Comparison saved to: {table_path}")
        return {'table': str(table_path), 'summary': str(summary_path)}

    def _write_train_summary(self, report, analysis):
        config = report.config
        report_content = f"""# Training Report: {report.architecture} on {report.experiment}
Generated on: {datetime.now().strftime('%Y-%m-%d %H:%M:%S')}

## Setup
- **Optimizer**: {config.get('optimizer')} (lr {config.get('lr')})
- **Loss**: {config.get('loss')}
- **Batch Size**: {config.get('batch_size')}
- **Iterations**: {config.get('iterations')}
- **Runs**: {len(report.seeds)} (seeds {report.seeds[0]}..{report.seeds[-1]})
- **Gradient**: {config.get('gradient')}
- **Config Hash**: `{report.config_hash[:16]}`

## Results
- **Final Test Accuracy**: {report.final_test_acc_mean:.3f} ± {report.final_test_acc_std:.3f}
- **Final Train Loss**: {report.train_loss[-1]:.4f}
- **Final Train Accuracy**: {report.train_acc[-1]:.3f}
"""
        final_metrics = analysis.get('final_metrics', {})
        if 'best_test_acc' in final_metrics:
            report_content += (
                f"- **Best Mean Test Accuracy**: {final_metrics['best_test_acc']:.3f} "
                f"(iteration {final_metrics['best_iteration']})\n"
            )
        convergence = analysis.get('convergence', {})
        if convergence.get('iteration') is not None:
            report_content += f"- **Reached 90% of Final Accuracy**: iteration {convergence['iteration']}\n"

        if analysis.get('runs'):
            report_content += "\n## Runs\n| seed | final test acc | final train loss |\n|---|---|---|\n"
            for row in analysis['runs']:
                report_content += f"| {row['seed']} | {row['final_test_acc']:.3f} | {row['final_train_loss']:.4f} |\n"

        report_path = self.reports_dir / 'summary.md'
        with open(report_path, 'w', encoding='utf-8') as f:
            f.write(report_content)
        return str(report_path)
