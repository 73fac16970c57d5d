#!/usr/bin/env python3
"""
Configuration module for the equivariant QCNN experiments
File: EquivariantQCNN/config.py
"""

import copy
import json
import os
from dataclasses import fields
from pathlib import Path

from app.exceptions import ConfigError
from app.trainer import TrainConfig

DATA_ROOT_ENV = "EQCNN_DATA_ROOT"

IMAGE_TRAINING = {
    "optimizer": "nesterov",
    "lr": 0.005,
    "momentum": 0.9,
    "loss": "bce",
    "batch_size": 32,
    "iterations": 200,
    "runs": 10,
    "gradient": "adjoint",
    "eval_every": 5,
}

GRAPH_TRAINING = {
    "optimizer": "adam",
    "lr": 0.01,
    "beta1": 0.9,
    "beta2": 0.999,
    "eps": 1e-8,
    "loss": "mse",
    "batch_size": 10,
    "iterations": 100,
    "runs": 10,
    "gradient": "adjoint",
    "eval_every": 1,
}


def _idx_files(folder):
    return {
        "train_images": f"{folder}/train-images-idx3-ubyte.gz",
        "train_labels": f"{folder}/train-labels-idx1-ubyte.gz",
        "test_images": f"{folder}/t10k-images-idx3-ubyte.gz",
        "test_labels": f"{folder}/t10k-labels-idx1-ubyte.gz",
    }


EXPERIMENT_PRESETS = {
    "fashion_0v8": {
        "architecture": "reflection_eqcnn",
        "dataset": {"kind": "image", "classes": [0, 8], "files": _idx_files("fashion"),
                    "max_train": 400, "max_test": 100},
        "training": IMAGE_TRAINING,
    },
    "mnist_0v1": {
        "architecture": "reflrot_eqcnn",
        "dataset": {"kind": "image", "classes": [0, 1], "files": _idx_files("mnist"),
                    "max_train": 400, "max_test": 100},
        "training": IMAGE_TRAINING,
    },
    "graphs_case1": {
        "architecture": "sn_eqcnn_mixture",
        "dataset": {"kind": "graph", "case": 1, "edge_prob": 0.45, "replication": 4,
                    "exclude_graphs": [0], "min_test_per_class": 1},
        "training": GRAPH_TRAINING,
    },
    "graphs_case2": {
        "architecture": "sn_eqcnn_mixture",
        "dataset": {"kind": "graph", "case": 2, "edge_prob": 0.45, "replication": 4,
                    "exclude_graphs": [0], "min_test_per_class": 1},
        "training": GRAPH_TRAINING,
    },
}

# Register width each architecture runs at in an experiment; None adapts to the dataset
ARCHITECTURE_WIDTHS = {
    "reflection_eqcnn": 16,
    "reflrot_eqcnn": 16,
    "rot_eqcnn_variant": 16,
    "sn_eqcnn_mixture": 4,
    "sn_eqcnn_circuit": 4,
    "sn_eqnn": 4,
    "baseline_qcnn": None,
}

EXPERIMENT_WIDTHS = {"image": 16, "graph": 4}

# Keys each nested section accepts; anything else is a typo
SECTION_KEYS = {
    "training": {f.name for f in fields(TrainConfig)} - {"architecture"},
    "dataset": {
        "kind", "classes", "files", "max_train", "max_test",
        "case", "edge_prob", "replication", "exclude_graphs", "min_test_per_class",
    },
    "verify": {"trials", "tolerance", "seed", "mixture_trials", "mixture_tolerance"},
}


def deep_merge(base, override):
    """Recursively merge ``override`` into a copy of ``base``"""
    merged = copy.deepcopy(base)
    for key, value in override.items():
        if isinstance(value, dict) and isinstance(merged.get(key), dict):
            merged[key] = deep_merge(merged[key], value)
        else:
            merged[key] = copy.deepcopy(value)
    return merged


class Config:
    """Configuration manager for experiments, verification runs and output locations"""

    DEFAULT_CONFIG = {
        "experiment": "fashion_0v8",
        "architecture": None,
        "data_root": None,
        "output_dir": "reports",
        "dataset": {},
        "training": {"seed": 1234, "workers": 1},
        "verify": {
            "trials": 100,
            "tolerance": 1e-9,
            "seed": 2024,
            "mixture_trials": 50,
            "mixture_tolerance": 1e-10,
        },
    }

    @classmethod
    def load(cls, config_path=None, overrides=None):
        """
        Load configuration from file, merge it over the defaults and resolve the experiment preset

        Args:
            config_path (str, optional): Path to configuration file
            overrides (dict, optional): Command-line values merged over the file before resolving

        Returns:
            dict: Resolved configuration dictionary

        Raises:
            ConfigError: Invalid JSON, unknown keys or out-of-range values
        """
        config = copy.deepcopy(cls.DEFAULT_CONFIG)

        if config_path is None:
            print("ℹ️  No config file specified, using default configuration")
            return cls.resolve(deep_merge(config, overrides or {}))

        config_file = Path(config_path)
        if not config_file.exists():
            print(f"⚠️  Config file not found: {config_path}. Using defaults.")
            return cls.resolve(deep_merge(config, overrides or {}))

        text = config_file.read_text(encoding="utf-8")
        try:
            user_config = json.loads(text)
        except json.JSONDecodeError as e:
            raise ConfigError(f"Invalid JSON in {config_path}: {e.msg}", line=e.lineno, column=e.colno) from e
        if not isinstance(user_config, dict):
            raise ConfigError(f"Top level of {config_path} must be an object", line=1, column=1)

        for key in user_config:
            if key.startswith("_"):
                continue
            if key not in cls.DEFAULT_CONFIG:
                raise ConfigError(f"Unknown configuration key in {config_path}", line=cls._line_of(text, key), key=key)
        unknown = cls._unknown_section_key(user_config)
        if unknown is not None:
            section, key = unknown
            raise ConfigError(
                f"Unknown configuration key in {config_path}", line=cls._line_of(text, key), key=f"{section}.{key}"
            )

        user_config = {k: v for k, v in user_config.items() if not k.startswith("_")}
        config = deep_merge(config, user_config)
        print(f"✅ Configuration loaded from: {config_path}")
        return cls.resolve(deep_merge(config, overrides or {}))

    @staticmethod
    def _unknown_section_key(config):
        """First (section, key) that a nested section does not accept, or None"""
        for section, allowed in SECTION_KEYS.items():
            values = config.get(section)
            if values is None:
                continue
            if not isinstance(values, dict):
                raise ConfigError(f"'{section}' must be an object", key=section)
            for key in values:
                if not key.startswith("_") and key not in allowed:
                    return section, key
        return None

    @classmethod
    def _check_sections(cls, config):
        unknown = cls._unknown_section_key(config)
        if unknown is not None:
            raise ConfigError("Unknown configuration key", key=".".join(unknown))

    @staticmethod
    def _line_of(text, key):
        for number, line in enumerate(text.splitlines(), start=1):
            if f'"{key}"' in line:
                return number
        return None

    @classmethod
    def resolve(cls, config):
        """Fill preset defaults for the chosen experiment, then validate"""
        experiment = config.get("experiment")
        if experiment not in EXPERIMENT_PRESETS:
            raise ConfigError(
                f"Unknown experiment '{experiment}'; choose from {', '.join(EXPERIMENT_PRESETS)}", key="experiment"
            )
        cls._check_sections(config)
        preset = EXPERIMENT_PRESETS[experiment]
        config = deep_merge(cls.DEFAULT_CONFIG, config)
        resolved = copy.deepcopy(config)
        resolved["dataset"] = deep_merge(preset["dataset"], config.get("dataset", {}))
        resolved["training"] = deep_merge(preset["training"], config.get("training", {}))
        if not resolved.get("architecture"):
            resolved["architecture"] = preset["architecture"]
        if not resolved.get("data_root"):
            resolved["data_root"] = os.environ.get(DATA_ROOT_ENV, "data")
        if ARCHITECTURE_WIDTHS.get(resolved["architecture"], 0) is None:
            resolved["training"].setdefault("n_qubits", EXPERIMENT_WIDTHS[resolved["dataset"]["kind"]])
        cls.validate(resolved)
        return resolved

    @classmethod
    def validate(cls, config):
        """Raise ConfigError on the first invalid value"""
        cls._check_sections(config)
        architecture = config.get("architecture")
        if architecture not in ARCHITECTURE_WIDTHS:
            raise ConfigError(
                f"Unknown architecture '{architecture}'; choose from {', '.join(ARCHITECTURE_WIDTHS)}",
                key="architecture",
            )
        kind = config["dataset"].get("kind")
        if kind not in EXPERIMENT_WIDTHS:
            raise ConfigError(f"Unknown dataset kind '{kind}'", key="dataset.kind")
        width = ARCHITECTURE_WIDTHS[architecture] or config["training"].get("n_qubits")
        if width != EXPERIMENT_WIDTHS[kind]:
            raise ConfigError(
                f"{architecture} on {width} qubits does not fit {config['experiment']} "
                f"({EXPERIMENT_WIDTHS[kind]}-qubit inputs)",
                key="architecture",
            )

        training = config["training"]
        checks = [
            ("lr", lambda v: isinstance(v, (int, float)) and v > 0, "must be > 0"),
            ("batch_size", lambda v: isinstance(v, int) and v >= 1, "must be an integer >= 1"),
            ("runs", lambda v: isinstance(v, int) and v >= 1, "must be an integer >= 1"),
            ("iterations", lambda v: isinstance(v, int) and v >= 1, "must be an integer >= 1"),
            ("eval_every", lambda v: isinstance(v, int) and v >= 1, "must be an integer >= 1"),
            ("optimizer", lambda v: v in ("nesterov", "adam"), "must be 'nesterov' or 'adam'"),
            ("loss", lambda v: v in ("bce", "mse"), "must be 'bce' or 'mse'"),
            ("gradient", lambda v: v in ("adjoint", "parameter_shift"), "must be 'adjoint' or 'parameter_shift'"),
        ]
        for key, ok, message in checks:
            if key in training and not ok(training[key]):
                raise ConfigError(f"training.{key} {message}, got {training[key]!r}", key=f"training.{key}")

        verify = config.get("verify", {})
        if verify.get("trials", 1) < 1:
            raise ConfigError("verify.trials must be >= 1", key="verify.trials")
        return True

    @classmethod
    def save(cls, config, config_path):
        """
        Save configuration to file

        Args:
            config (dict): Configuration to save
            config_path (str): Path where to save the configuration
        """
        config_file = Path(config_path)
        config_file.parent.mkdir(parents=True, exist_ok=True)
        with open(config_file, "w", encoding="utf-8") as f:
            json.dump(config, f, indent=2)
        print(f"✅ Configuration saved to: {config_path}")

    @classmethod
    def create_sample_config(cls, output_path="sample_config.json"):
        """
        Create a sample configuration file

        Args:
            output_path (str): Where to save the sample config
        """
        sample_config = {
            "experiment": "graphs_case2",
            "architecture": "sn_eqcnn_mixture",
            "output_dir": "reports",
            "training": {"runs": 10, "iterations": 100, "seed": 1234},
            "_comments": {
                "experiment": "fashion_0v8 | mnist_0v1 | graphs_case1 | graphs_case2",
                "architecture": "reflection_eqcnn | reflrot_eqcnn | rot_eqcnn_variant | sn_eqcnn_mixture | "
                                "sn_eqcnn_circuit | sn_eqnn | baseline_qcnn (null = experiment default)",
                "data_root": f"Folder holding the IDX files; defaults to ${DATA_ROOT_ENV} or ./data",
                "training": "Overrides of the experiment preset: optimizer, lr, loss, batch_size, "
                            "iterations, runs, seed, gradient, eval_every, workers",
            },
        }
        cls.save(sample_config, output_path)
        return output_path
