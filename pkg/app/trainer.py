"""
Losses, gradients, optimizers and the mini-batch training loop
File: EquivariantQCNN/app/trainer.py
"""

import hashlib
import json
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field, fields
from typing import Optional

import numpy as np
import pandas as pd

from .architectures import build_architecture, classify, expectation_and_gradient, predict
from .data_processor import GraphSample, ImageSample, angle_embed
from .exceptions import DomainError

logger = logging.getLogger(__name__)

BCE_EPSILON = 1e-7
OPTIMIZERS = ("nesterov", "adam")
LOSSES = ("bce", "mse")
GRADIENT_METHODS = ("adjoint", "parameter_shift")


# -- losses -------------------------------------------------------------------

def bce_loss(p, y, eps=BCE_EPSILON):
    p = float(np.clip(p, eps, 1.0 - eps))
    return -(y * np.log(p) + (1 - y) * np.log(1.0 - p))


def bce_loss_grad(p, y, eps=BCE_EPSILON):
    """dL/dp at the clamped probability"""
    p = float(np.clip(p, eps, 1.0 - eps))
    return -y / p + (1 - y) / (1.0 - p)


def mse_loss(m, y):
    """Squared error against a ±1 target"""
    return (m - y) ** 2


def mse_loss_grad(m, y):
    return 2.0 * (m - y)


def readout_loss(loss, m, label):
    """Loss and dL/dm for mean-Z readout ``m`` and a {0, 1} label"""
    if loss == "bce":
        p = 0.5 * (1.0 + m)
        return bce_loss(p, label), 0.5 * bce_loss_grad(p, label)
    if loss == "mse":
        target = 2 * label - 1
        return mse_loss(m, target), mse_loss_grad(m, target)
    raise DomainError(f"Unknown loss '{loss}'; choose from {LOSSES}")


# -- gradients ----------------------------------------------------------------

def _loss_gradient(arch, params, state, label, loss, method):
    m, dm = expectation_and_gradient(arch, params, state, method)
    value, dldm = readout_loss(loss, m, label)
    return value, dldm * dm, m


def parameter_shift_grad(arch, params, state, label, loss="bce"):
    """Loss gradient with ∂⟨M⟩/∂θ from ±π/2 shifts of every parameter occurrence"""
    return _loss_gradient(arch, params, state, label, loss, "parameter_shift")[1]


def adjoint_grad(arch, params, state, label, loss="bce"):
    """Loss gradient by reverse-mode statevector differentiation; agrees with the shift rule"""
    return _loss_gradient(arch, params, state, label, loss, "adjoint")[1]


# -- optimizers ---------------------------------------------------------------

def nesterov_step(params, grads, velocity, lr=0.005, momentum=0.9):
    """Lookahead momentum: v ← μv + g, θ ← θ − lr·(g + μv)"""
    velocity = momentum * np.asarray(velocity, dtype=float) + grads
    params = np.asarray(params, dtype=float) - lr * (grads + momentum * velocity)
    return params, velocity


@dataclass
class AdamMoments:
    first: np.ndarray
    second: np.ndarray
    step: int = 0

    @classmethod
    def zeros(cls, size):
        return cls(np.zeros(size), np.zeros(size), 0)


def adam_step(params, grads, moments, lr=0.01, beta1=0.9, beta2=0.999, eps=1e-8):
    grads = np.asarray(grads, dtype=float)
    step = moments.step + 1
    first = beta1 * moments.first + (1 - beta1) * grads
    second = beta2 * moments.second + (1 - beta2) * grads ** 2
    first_hat = first / (1 - beta1 ** step)
    second_hat = second / (1 - beta2 ** step)
    params = np.asarray(params, dtype=float) - lr * first_hat / (np.sqrt(second_hat) + eps)
    return params, AdamMoments(first, second, step)


class NesterovOptimizer:
    def __init__(self, size, lr=0.005, momentum=0.9):
        self.lr = lr
        self.momentum = momentum
        self.velocity = np.zeros(size)

    def step(self, params, grads):
        params, self.velocity = nesterov_step(params, grads, self.velocity, self.lr, self.momentum)
        return params


class AdamOptimizer:
    def __init__(self, size, lr=0.01, beta1=0.9, beta2=0.999, eps=1e-8):
        self.lr = lr
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.moments = AdamMoments.zeros(size)

    def step(self, params, grads):
        params, self.moments = adam_step(params, grads, self.moments, self.lr, self.beta1, self.beta2, self.eps)
        return params


# -- configuration and report ---------------------------------------------------

@dataclass(frozen=True)
class TrainConfig:
    """Hyperparameters of one training experiment.

    ``lr`` may be 0 to run with frozen parameters; experiment configs loaded
    through ``Config.validate`` require it to be positive.
    """

    architecture: str
    optimizer: str = "nesterov"
    lr: float = 0.005
    momentum: float = 0.9
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    loss: str = "bce"
    batch_size: int = 32
    iterations: int = 100
    runs: int = 10
    seed: int = 1234
    gradient: str = "adjoint"
    eval_every: int = 1
    workers: int = 1
    n_qubits: Optional[int] = None

    def __post_init__(self):
        if self.optimizer not in OPTIMIZERS:
            raise DomainError(f"Unknown optimizer '{self.optimizer}'; choose from {OPTIMIZERS}")
        if self.loss not in LOSSES:
            raise DomainError(f"Unknown loss '{self.loss}'; choose from {LOSSES}")
        if self.gradient not in GRADIENT_METHODS:
            raise DomainError(f"Unknown gradient method '{self.gradient}'; choose from {GRADIENT_METHODS}")
        if self.lr < 0:
            raise DomainError(f"lr must be non-negative, got {self.lr}")
        for name in ("batch_size", "iterations", "runs", "eval_every", "workers"):
            if getattr(self, name) < 1:
                raise DomainError(f"{name} must be >= 1, got {getattr(self, name)}")

    @classmethod
    def from_dict(cls, values):
        known = {f.name for f in fields(cls)}
        return cls(**{k: v for k, v in values.items() if k in known})

    def to_dict(self):
        return asdict(self)

    def config_hash(self):
        payload = json.dumps(self.to_dict(), sort_keys=True)
        return hashlib.sha256(payload.encode("utf-8")).hexdigest()

    def build_optimizer(self, size):
        if self.optimizer == "nesterov":
            return NesterovOptimizer(size, self.lr, self.momentum)
        return AdamOptimizer(size, self.lr, self.beta1, self.beta2, self.eps)


@dataclass
class RunResult:
    seed: int
    train_loss: list
    train_acc: list
    test_acc: list
    final_params: list

    @property
    def final_test_acc(self):
        return self.test_acc[-1]

    def to_dict(self):
        return {**asdict(self), "final_test_acc": self.final_test_acc}


@dataclass
class TrainReport:
    """Per-iteration curves averaged over runs, plus every run and its seed"""

    architecture: str
    experiment: str
    config: dict
    config_hash: str
    seeds: list
    iterations: list
    train_loss: list
    train_acc: list
    test_acc: list
    test_acc_std: list
    runs: list = field(default_factory=list)

    @property
    def final_test_acc_mean(self):
        if not self.runs:
            return float(self.test_acc[-1])
        return float(np.mean([run.final_test_acc for run in self.runs]))

    @property
    def final_test_acc_std(self):
        if not self.runs:
            return float(self.test_acc_std[-1])
        return float(np.std([run.final_test_acc for run in self.runs]))

    def to_dict(self):
        return {
            "architecture": self.architecture,
            "experiment": self.experiment,
            "config": self.config,
            "config_hash": self.config_hash,
            "seeds": list(self.seeds),
            "iterations": list(self.iterations),
            "train_loss": list(self.train_loss),
            "train_acc": list(self.train_acc),
            "test_acc": list(self.test_acc),
            "test_acc_std": list(self.test_acc_std),
            "final_test_acc_mean": self.final_test_acc_mean,
            "final_test_acc_std": self.final_test_acc_std,
            "runs": [run.to_dict() for run in self.runs],
        }

    @classmethod
    def from_dict(cls, payload):
        runs = [
            RunResult(r["seed"], r["train_loss"], r["train_acc"], r["test_acc"], r["final_params"])
            for r in payload.get("runs", [])
        ]
        return cls(
            architecture=payload["architecture"],
            experiment=payload["experiment"],
            config=payload["config"],
            config_hash=payload["config_hash"],
            seeds=payload["seeds"],
            iterations=payload["iterations"],
            train_loss=payload["train_loss"],
            train_acc=payload["train_acc"],
            test_acc=payload["test_acc"],
            test_acc_std=payload.get("test_acc_std", [0.0] * len(payload["iterations"])),
            runs=runs,
        )

    def to_frame(self):
        return pd.DataFrame({
            "iteration": self.iterations,
            "train_loss": self.train_loss,
            "train_acc": self.train_acc,
            "test_acc": self.test_acc,
            "test_acc_std": self.test_acc_std,
        })

    def runs_frame(self):
        rows = []
        for run in self.runs:
            for i, iteration in enumerate(self.iterations):
                rows.append({
                    "seed": run.seed,
                    "iteration": iteration,
                    "train_loss": run.train_loss[i],
                    "train_acc": run.train_acc[i],
                    "test_acc": run.test_acc[i],
                })
        return pd.DataFrame(rows)


# -- training loop ----------------------------------------------------------------

def encode_sample(arch, sample):
    """Input state of a sample for ``arch``"""
    if isinstance(sample, GraphSample):
        return sample.state
    if isinstance(sample, ImageSample):
        if arch.embedding is None:
            raise DomainError(f"{arch.name} has no pixel embedding for image samples")
        return angle_embed(sample.pixels, arch.embedding)
    raise DomainError(f"Unsupported sample type {type(sample).__name__}")


def accuracy(arch, params, samples):
    if not samples:
        return 0.0
    hits = [classify(arch, params, encode_sample(arch, s)) == s.label for s in samples]
    return float(np.mean(hits))


def mean_loss(arch, params, samples, loss="bce"):
    values = [readout_loss(loss, predict(arch, params, encode_sample(arch, s)), s.label)[0] for s in samples]
    return float(np.mean(values))


def _train_run(arch, config, train_samples, test_samples, seed):
    rng = np.random.default_rng(seed)
    params = arch.random_params(rng).values
    optimizer = config.build_optimizer(params.size)
    n_train = len(train_samples)
    train_loss, train_acc, test_acc = [], [], []
    last_test = None

    for iteration in range(1, config.iterations + 1):
        if config.batch_size >= n_train:
            batch = np.arange(n_train)
        else:
            batch = rng.choice(n_train, size=config.batch_size, replace=False)

        grad = np.zeros(params.size)
        losses, hits = [], []
        for i in batch:
            sample = train_samples[i]
            value, sample_grad, m = _loss_gradient(
                arch, params, encode_sample(arch, sample), sample.label, config.loss, config.gradient,
            )
            grad += sample_grad
            losses.append(value)
            hits.append(int(m >= 0.0) == sample.label)
        grad /= len(batch)

        train_loss.append(float(np.mean(losses)))
        train_acc.append(float(np.mean(hits)))
        params = optimizer.step(params, grad)

        if last_test is None or iteration % config.eval_every == 0 or iteration == config.iterations:
            last_test = accuracy(arch, params, test_samples)
        test_acc.append(last_test)

        if iteration % max(1, config.iterations // 10) == 0:
            logger.debug(f"seed {seed} iteration {iteration}: loss {train_loss[-1]:.4f}, test acc {last_test:.3f}")

    return RunResult(seed, train_loss, train_acc, test_acc, [float(v) for v in params])


def train(config, dataset, experiment=None):
    """Independent runs from fresh uniform[-π, π] parameters, aggregated into a TrainReport"""
    if not dataset.train:
        raise DomainError("Training set is empty")
    arch = build_architecture(config.architecture, config.n_qubits)
    arch.circuit  # compiled once, before runs share it across threads
    seeds = [config.seed + r for r in range(config.runs)]
    logger.info(
        f"🚀 Training {arch.name} ({arch.n_params} parameters) on {len(dataset.train)} samples, "
        f"{config.runs} runs x {config.iterations} iterations"
    )

    def run(seed):
        result = _train_run(arch, config, dataset.train, dataset.test, seed)
        logger.info(f"Run with seed {seed}: final test accuracy {result.final_test_acc:.3f}")
        return result

    if config.workers > 1:
        with ThreadPoolExecutor(max_workers=config.workers) as pool:
            runs = list(pool.map(run, seeds))
    else:
        runs = [run(seed) for seed in seeds]

    train_loss = np.mean([r.train_loss for r in runs], axis=0)
    train_acc = np.mean([r.train_acc for r in runs], axis=0)
    test_curves = np.array([r.test_acc for r in runs])
    return TrainReport(
        architecture=arch.name,
        experiment=experiment or dataset.name,
        config=config.to_dict(),
        config_hash=config.config_hash(),
        seeds=seeds,
        iterations=list(range(1, config.iterations + 1)),
        train_loss=[float(v) for v in train_loss],
        train_acc=[float(v) for v in train_acc],
        test_acc=[float(v) for v in test_curves.mean(axis=0)],
        test_acc_std=[float(v) for v in test_curves.std(axis=0)],
        runs=runs,
    )
