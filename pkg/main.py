import argparse
import logging
import os
import sys
import traceback
from pathlib import Path

# Add project root to path
PROJECT_ROOT = Path(__file__).parent
sys.path.append(str(PROJECT_ROOT))

EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_USAGE = 2


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    """argparse that raises instead of exiting so main_with_args can return the code"""

    def error(self, message):
        raise _UsageError(message)


def build_parser():
    parser = _Parser(description='Equivariant QCNN simulator: verification and training experiments')
    parser.add_argument('--config', '-c', type=str, help='Configuration file path')
    parser.add_argument('--verbose', '-v', action='store_true', help='Debug logging')
    subparsers = parser.add_subparsers(dest='command')

    verify = subparsers.add_parser('verify', help='Certify the symmetries an architecture claims')
    verify.add_argument('architecture', help='Architecture id, e.g. reflection_eqcnn')
    verify.add_argument('--trials', '-t', type=int, help='Random (params, state) draws per check')
    verify.add_argument('--expect-fail', nargs='+', default=[], metavar='GROUP',
                        help='Groups the architecture must NOT commute with (negative control)')
    verify.add_argument('--qubits', '-n', type=int, help='Register width for width-generic architectures')
    verify.add_argument('--output-dir', '-o', type=str, help='Override output directory')

    train = subparsers.add_parser('train', help='Train an architecture on the configured experiment')
    train.add_argument('--experiment', '-e', type=str, help='Override experiment preset')
    train.add_argument('--architecture', '-a', type=str, help='Override architecture')
    train.add_argument('--runs', type=int, help='Override number of runs')
    train.add_argument('--iterations', type=int, help='Override iterations per run')
    train.add_argument('--seed', type=int, help='Override base seed')
    train.add_argument('--workers', type=int, help='Parallel runs')
    train.add_argument('--data-root', '-d', type=str, help='Override dataset root')
    train.add_argument('--output-dir', '-o', type=str, help='Override output directory')

    compare = subparsers.add_parser('compare', help='Compare finished training reports')
    compare.add_argument('reports', nargs='+', help='report.json files or run directories')
    compare.add_argument('--output', type=str, help='Directory for compare.csv')

    graphs = subparsers.add_parser('enumerate-graphs', help='Dump all 64 labeled 4-vertex graphs')
    graphs.add_argument('--case', type=int, choices=[1, 2], help='Mark split membership for this case')
    graphs.add_argument('--seed', type=int, help='Split seed')
    graphs.add_argument('--sample', type=int, metavar='K', help='Also print K Erdős–Rényi samples')
    graphs.add_argument('--output', type=str, help='CSV path')
    return parser


def _train_overrides(args):
    """Flag values as a partial config, merged over the file before the preset resolves"""
    overrides = {"training": {}}
    if args.experiment:
        overrides["experiment"] = args.experiment
        # a preset change brings its own default architecture
        overrides["architecture"] = None
    if args.architecture:
        overrides["architecture"] = args.architecture
    if args.data_root:
        overrides["data_root"] = args.data_root
    for key in ("runs", "iterations", "seed", "workers"):
        value = getattr(args, key)
        if value is not None:
            overrides["training"][key] = value
    return overrides


def cmd_verify(args, config):
    from app.pipeline.experiment_pipeline import ExperimentPipeline

    pipeline = ExperimentPipeline(config, output_dir=args.output_dir, run_name=f"verify_{args.architecture}")
    reports, ok = pipeline.run_verification(
        args.architecture, trials=args.trials, expect_fail=args.expect_fail, n=args.qubits,
    )
    print(f"\n🔬 EQUIVARIANCE REPORT: {args.architecture}")
    print("=" * 70)
    for report in reports:
        if report.expect_failure:
            status = "✅" if not report.passed else "❌"
        else:
            status = "✅" if report.passed else ("⚠️ " if report.meets_expectation else "❌")
        group = getattr(report.group, 'value', report.group)
        broken = ', '.join(f"{k}@{v}" for k, v in report.broken_at.items()) or '-'
        control = " (negative control)" if report.expect_failure else ""
        print(f"{status} {group:<22} {report.check:<16} max residual {report.max_residual:.3e}  broken: {broken}{control}")
    print("=" * 70)
    print("🎉 All expectations met" if ok else "❌ Some checks did not meet expectations")
    return EXIT_OK if ok else EXIT_FAILURE


def cmd_train(args, config):
    from app.pipeline.experiment_pipeline import ExperimentPipeline

    pipeline = ExperimentPipeline(config, output_dir=args.output_dir)
    print(f"🔧 Experiment {pipeline.config['experiment']} with {pipeline.config['architecture']}")
    print("\n" + "=" * 70)
    print("🚀 EQUIVARIANT QCNN TRAINING")
    print("=" * 70)

    results = pipeline.run_pipeline()

    print("\n" + "=" * 70)
    print("🎉 TRAINING COMPLETED SUCCESSFULLY!")
    print("=" * 70)
    print("\n📊 RESULTS SUMMARY:")
    print(f"   • Train / test samples: {results['n_train']} / {results['n_test']}")
    print(f"   • Final test accuracy: {results['final_test_acc_mean']:.3f} ± {results['final_test_acc_std']:.3f}")
    print(f"   • Config hash: {results['config_hash'][:16]}")
    print("\n📁 OUTPUT FILES:")
    for name, path in results['artifacts'].items():
        print(f"   • {name}: {path}")
    return EXIT_OK


def cmd_compare(args, config):
    from app.analyzer import compare_reports, load_report
    from app.pipeline.experiment_pipeline import ExperimentPipeline

    if args.output:
        output = Path(args.output)
        pipeline = ExperimentPipeline(config, output_dir=output.parent, run_name=output.name)
        table, summary = pipeline.run_comparison(args.reports)
    else:
        table, summary = compare_reports([load_report(path) for path in args.reports])
    print("\n📊 FINAL TEST ACCURACY")
    print(summary.to_string(index=False))
    if args.output:
        print(f"\n📁 Comparison table: {pipeline.written['table']}")
    return EXIT_OK


def cmd_enumerate_graphs(args, config):
    from app.data_processor import graph_table, sample_graph

    exclude = tuple(config['dataset'].get('exclude_graphs', [0]))
    seed = args.seed if args.seed is not None else config['training']['seed']
    table = graph_table(args.case, seed, exclude)
    if args.output:
        output = Path(args.output)
        output.parent.mkdir(parents=True, exist_ok=True)
        table.to_csv(output, index=False)
        print(f"✅ {len(table)} graphs written to {output}")
    else:
        print(table.to_string(index=False))
    print(f"   Connected: {int(table['connected'].sum())} / {len(table)}")

    if args.sample:
        edge_prob = config['dataset'].get('edge_prob', 0.45)
        print(f"\n🎲 {args.sample} samples from G(4, {edge_prob}):")
        for k in range(args.sample):
            graph = sample_graph(4, edge_prob, seed + k)
            edges = ' '.join(f"{i}-{j}" for i, j in graph.edges) or '(none)'
            print(f"   graph {graph.graph_id:>2}: {edges:<24} connected={graph.label}")
    return EXIT_OK


COMMANDS = {
    'verify': cmd_verify,
    'train': cmd_train,
    'compare': cmd_compare,
    'enumerate-graphs': cmd_enumerate_graphs,
}


def main_with_args(args_list=None):
    """Run the CLI on ``args_list`` and return the exit code"""
    parser = build_parser()
    try:
        args = parser.parse_args(args_list)
    except _UsageError as e:
        print(f"❌ {e}")
        parser.print_usage()
        return EXIT_USAGE
    if args.command is None:
        parser.print_help()
        return EXIT_USAGE

    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.INFO,
        format="%(asctime)s - %(name)s - %(levelname)s - %(message)s",
    )

    # Import here to avoid issues if modules aren't ready
    try:
        from app.exceptions import ConfigError, DomainError, EQCNNError, ParseError, UnsupportedError
        from config import Config
    except ImportError as e:
        print(f"❌ Import error: {str(e)}")
        print("Make sure you're running from the project root directory and all dependencies are installed.")
        print("\n🔍 Debug info:")
        print(f"   Current directory: {os.getcwd()}")
        print(f"   Project root: {PROJECT_ROOT}")
        return EXIT_FAILURE

    try:
        overrides = _train_overrides(args) if args.command == "train" else None
        config = Config.load(args.config, overrides)
        return COMMANDS[args.command](args, config)
    except ConfigError as e:
        print(f"❌ Configuration error: {e}")
        return EXIT_USAGE
    except (DomainError, UnsupportedError) as e:
        if isinstance(e, ParseError):
            print(f"❌ Dataset file is corrupt: {e}")
            return EXIT_FAILURE
        print(f"❌ {e}")
        return EXIT_USAGE
    except FileNotFoundError as e:
        print(f"❌ File not found: {e}")
        print("\n💡 TROUBLESHOOTING:")
        print("   1. Download the IDX files (train/t10k images and labels, .gz is fine)")
        print("   2. Place them under <data_root>/fashion or <data_root>/mnist")
        print("   3. Point EQCNN_DATA_ROOT or the 'data_root' config key at that folder")
        return EXIT_FAILURE
    except EQCNNError as e:
        print(f"❌ {e}")
        return EXIT_FAILURE
    except Exception as e:
        print(f"❌ Command '{args.command}' failed: {str(e)}")
        traceback.print_exc()
        return EXIT_FAILURE


def main():
    sys.exit(main_with_args())


if __name__ == "__main__":
    main()
