#!/usr/bin/env python3
"""
Equivariant QCNN Experiment Pipeline
Orchestrates dataset preparation, training, analysis and reporting
File: EquivariantQCNN/app/pipeline/experiment_pipeline.py
"""

import json
import logging
import sys
from datetime import datetime
from pathlib import Path

project_root = Path(__file__).parent.parent.parent
sys.path.insert(0, str(project_root))

from config import Config  # noqa: E402

logging.basicConfig(
    level=logging.INFO,
    format='%(asctime)s - %(name)s - %(levelname)s - %(message)s'
)
logger = logging.getLogger(__name__)

DEFAULT_STEPS = ['prepare', 'train', 'analyze', 'report']


class ExperimentPipeline:
    """Dataset → training → analysis → report for one resolved experiment config"""

    def __init__(self, config=None, output_dir=None, run_name=None):
        """
        Args:
            config (dict | str | None): Resolved config dict, or path to a config file
            output_dir (str, optional): Overrides the configured output directory
            run_name (str, optional): Sub-directory name, defaults to experiment_architecture
        """
        if isinstance(config, dict):
            self.config = Config.resolve(config)
        else:
            self.config = Config.load(config)

        self.project_root = project_root
        self.data_dir = Path(self.config['data_root'])
        base_dir = Path(output_dir or self.config['output_dir'])
        self.run_name = run_name or f"{self.config['experiment']}_{self.config['architecture']}"
        self.reports_dir = base_dir / self.run_name

        self.dataset = None
        self.report = None
        self.analysis = None
        self.written = {}

        self._create_directories()
        self._initialize_components()

    def _create_directories(self):
        self.reports_dir.mkdir(parents=True, exist_ok=True)
        logger.info(f"Reports directory: {self.reports_dir}")

    def _initialize_components(self):
        from app.analyzer import ReportAnalyzer
        from app.data_processor import DataProcessor
        from app.report_writer import ReportWriter

        self.data_processor = DataProcessor(self.config, self.data_dir)
        self.analyzer = ReportAnalyzer(self.config)
        self.writer = ReportWriter(self.reports_dir)

    def train_config(self):
        from app.trainer import TrainConfig

        return TrainConfig.from_dict({**self.config['training'], 'architecture': self.config['architecture']})

    def run_pipeline(self, steps=None):
        """
        Run the selected steps in order

        Args:
            steps (list, optional): Subset of 'prepare', 'train', 'analyze', 'report'

        Returns:
            dict: Step outcomes and written artifact paths
        """
        from app.trainer import train

        steps = list(steps or DEFAULT_STEPS)
        started = datetime.now()
        logger.info(f"🚀 Starting pipeline for {self.run_name}: {', '.join(steps)}")

        if 'prepare' in steps or self.dataset is None:
            logger.info("📥 Step 1: Preparing dataset...")
            self.dataset = self.data_processor.prepare_dataset()
            logger.info(f"✅ {len(self.dataset.train)} training / {len(self.dataset.test)} test samples")

        if 'train' in steps:
            logger.info("🧠 Step 2: Training...")
            self.report = train(self.train_config(), self.dataset, self.config['experiment'])
            logger.info(
                f"✅ Final test accuracy {self.report.final_test_acc_mean:.3f} "
                f"± {self.report.final_test_acc_std:.3f}"
            )

        if 'analyze' in steps and self.report is not None:
            logger.info("🔍 Step 3: Analyzing...")
            self.analysis = self.analyzer.run_analysis(self.report)

        if 'report' in steps and self.report is not None:
            logger.info("📄 Step 4: Writing reports...")
            self.written = self.writer.write_train_report(self.report, self.config, self.analysis)

        summary = self._generate_pipeline_report(steps, started)
        logger.info(f"🎉 Pipeline finished in {summary['duration_seconds']:.1f}s")
        return summary

    def run_verification(self, architecture=None, trials=None, expect_fail=(), n=None, name='verify'):
        """Equivariance certificates for one architecture, written as CSV and JSON"""
        from app.verify import verify_architecture

        verify_cfg = self.config['verify']
        architecture = architecture or self.config['architecture']
        logger.info(f"🔬 Verifying {architecture}...")
        reports, ok = verify_architecture(
            architecture,
            trials=trials or verify_cfg['trials'],
            tol=verify_cfg['tolerance'],
            rng=verify_cfg['seed'],
            expect_fail=expect_fail,
            n=n,
            mixture_trials=verify_cfg.get('mixture_trials', 50),
            mixture_tol=verify_cfg.get('mixture_tolerance', 1e-10),
        )
        frame = self.writer.write_verify_reports(reports, name)
        logger.info(f"{'✅' if ok else '❌'} {architecture}: {int(frame['passed'].sum())}/{len(frame)} checks passed")
        return reports, ok

    def run_comparison(self, report_paths, labels=None, name='compare'):
        """Final-accuracy comparison of finished runs, written next to a pipeline report"""
        from app.analyzer import compare_reports, load_report

        started = datetime.now()
        logger.info(f"📊 Comparing {len(report_paths)} reports...")
        reports = [load_report(path) for path in report_paths]
        table, summary = compare_reports(reports, labels)
        self.written.update(self.writer.write_comparison(table, summary, name))
        self._generate_pipeline_report([name], started)
        return table, summary

    def enumerate_graphs(self, case=None, seed=None, output_path=None):
        output_path = output_path or self.reports_dir / 'graphs.csv'
        if seed is None:
            seed = self.config['training']['seed']
        return self.data_processor.save_graph_table(output_path, case, seed)

    def _generate_pipeline_report(self, steps, started):
        summary = {
            'run_name': self.run_name,
            'generated_at': datetime.now().isoformat(),
            'duration_seconds': (datetime.now() - started).total_seconds(),
            'steps': steps,
            'experiment': self.config['experiment'],
            'architecture': self.config['architecture'],
            'n_train': len(self.dataset.train) if self.dataset else 0,
            'n_test': len(self.dataset.test) if self.dataset else 0,
            'artifacts': dict(self.written),
        }
        if self.report is not None:
            summary['final_test_acc_mean'] = self.report.final_test_acc_mean
            summary['final_test_acc_std'] = self.report.final_test_acc_std
            summary['config_hash'] = self.report.config_hash

        report_path = self.reports_dir / 'pipeline_report.json'
        with open(report_path, 'w', encoding='utf-8') as f:
            json.dump(summary, f, indent=2)
        return summary
