"""
Dataset ingestion: IDX images, 4x4 downsampling, angle embedding, graph states and splits
File: EquivariantQCNN/app/data_processor.py
"""

import gzip
import itertools
import logging
import struct
from dataclasses import dataclass, field
from functools import reduce
from math import ceil
from pathlib import Path

import networkx as nx
import numpy as np
import pandas as pd

from .exceptions import DomainError, ParseError
from .simcore import Gate, GateKind, StateVector, apply_gates, init_basis_state

logger = logging.getLogger(__name__)

IMAGE_MAGIC = 0x00000803
LABEL_MAGIC = 0x00000801
GRAPH_SPLIT_SIZES = {1: (45, 18), 2: (52, 11)}
PIXEL_TOLERANCE = 1e-12


@dataclass(frozen=True, eq=False)
class ImageSample:
    pixels: np.ndarray
    label: int


@dataclass(frozen=True, eq=False)
class GraphSample:
    """A labeled graph with its graph state; label 1 means connected"""

    graph_id: int
    n_vertices: int
    adjacency: np.ndarray
    label: int
    state: StateVector

    @property
    def edges(self):
        return [(i, j) for i, j in itertools.combinations(range(self.n_vertices), 2) if self.adjacency[i, j]]


@dataclass
class Dataset:
    name: str
    kind: str
    train: list
    test: list
    metadata: dict = field(default_factory=dict)


# -- IDX images ---------------------------------------------------------------

def _read_bytes(path):
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"Data file not found: {path}")
    opener = gzip.open if path.suffix == ".gz" else open
    with opener(path, "rb") as handle:
        return handle.read()


def _parse_idx(raw, expected_magic):
    if len(raw) < 4:
        raise ParseError("File too short for an IDX magic number", offset=len(raw))
    (magic,) = struct.unpack_from(">I", raw, 0)
    if magic != expected_magic:
        raise ParseError(f"Bad IDX magic 0x{magic:08x}, expected 0x{expected_magic:08x}", offset=0)
    n_dims = magic & 0xFF
    header_end = 4 + 4 * n_dims
    if len(raw) < header_end:
        raise ParseError("Truncated IDX header", offset=len(raw))
    dims = struct.unpack_from(">" + "I" * n_dims, raw, 4)
    size = int(np.prod(dims))
    if len(raw) < header_end + size:
        raise ParseError(f"Truncated IDX payload: expected {size} bytes", offset=len(raw))
    data = np.frombuffer(raw, dtype=np.uint8, count=size, offset=header_end)
    return data.reshape(dims)


def read_idx_images(path):
    """(count, rows, cols) float array scaled to [0, 1]"""
    return _parse_idx(_read_bytes(path), IMAGE_MAGIC).astype(np.float64) / 255.0


def read_idx_labels(path):
    return _parse_idx(_read_bytes(path), LABEL_MAGIC).astype(np.int64)


def load_idx(images_path, labels_path):
    """Raw 28x28 samples with their original class labels"""
    images = read_idx_images(images_path)
    labels = read_idx_labels(labels_path)
    if images.shape[0] != labels.shape[0]:
        raise ParseError(
            f"Image count {images.shape[0]} does not match label count {labels.shape[0]}", offset=4
        )
    logger.info(f"Loaded {images.shape[0]} images of {images.shape[1]}x{images.shape[2]} from {images_path}")
    return [ImageSample(image, int(label)) for image, label in zip(images, labels)]


def select_classes(samples, classes):
    """Keep two classes and relabel them 0 (first) and 1 (second)"""
    first, second = classes
    relabel = {first: 0, second: 1}
    return [ImageSample(s.pixels, relabel[s.label]) for s in samples if s.label in relabel]


def subsample(samples, max_count, rng):
    """Seeded subset of at most ``max_count`` samples, original order preserved"""
    if max_count is None or len(samples) <= max_count:
        return list(samples)
    chosen = np.sort(np.random.default_rng(rng).choice(len(samples), size=max_count, replace=False))
    return [samples[i] for i in chosen]


def downsample(image, size=4):
    """Mean-pool a square image over disjoint blocks down to ``size x size``, flattened row-major"""
    image = np.asarray(image, dtype=float)
    rows, cols = image.shape
    if rows != cols or rows % size:
        raise DomainError(f"Cannot block-average a {rows}x{cols} image to {size}x{size}")
    block = rows // size
    return image.reshape(size, block, size, block).mean(axis=(1, 3)).reshape(-1)


def downsample_4x4(image):
    image = np.asarray(image, dtype=float)
    if image.shape != (28, 28):
        raise DomainError(f"Expected a 28x28 image, got {image.shape}")
    return downsample(image, 4)


def reflect_pixels(pixels, rows, cols):
    """Mirror a row-major pixel vector about the vertical axis"""
    return np.asarray(pixels, dtype=float).reshape(rows, cols)[:, ::-1].reshape(-1)


def angle_embed(pixels, embedding):
    """⊗_q RY(π·p_σ(q))|0⟩ where σ(q) is the pixel the embedding places on qubit q"""
    pixels = np.asarray(pixels, dtype=float).reshape(-1)
    if pixels.size != embedding.n_qubits:
        raise DomainError(f"Expected {embedding.n_qubits} pixels, got {pixels.size}")
    if pixels.min() < -PIXEL_TOLERANCE or pixels.max() > 1 + PIXEL_TOLERANCE:
        raise DomainError(f"Pixel values must lie in [0, 1], got range [{pixels.min()}, {pixels.max()}]")
    ordered = pixels[list(embedding.qubit_to_pixel)]
    factors = [np.array([np.cos(np.pi * p / 2), np.sin(np.pi * p / 2)], dtype=complex) for p in ordered]
    return StateVector(embedding.n_qubits, reduce(np.kron, factors))


# -- graphs -------------------------------------------------------------------

def _check_adjacency(adjacency):
    adjacency = np.asarray(adjacency).astype(bool)
    if adjacency.ndim != 2 or adjacency.shape[0] != adjacency.shape[1]:
        raise DomainError(f"Adjacency must be square, got shape {adjacency.shape}")
    if not np.array_equal(adjacency, adjacency.T) or adjacency.diagonal().any():
        raise DomainError("Adjacency must be symmetric with an empty diagonal")
    return adjacency


def is_connected(adjacency):
    """Every vertex reachable from vertex 0"""
    adjacency = _check_adjacency(adjacency)
    n = adjacency.shape[0]
    if n == 0:
        raise DomainError("A graph needs at least one vertex")
    graph = nx.from_numpy_array(adjacency.astype(int))
    return len(nx.node_connected_component(graph, 0)) == n


def graph_state(adjacency):
    """H on every qubit, then CZ on every edge"""
    adjacency = _check_adjacency(adjacency)
    n = adjacency.shape[0]
    gates = [Gate(GateKind.H, (q,)) for q in range(n)]
    gates += [
        Gate(GateKind.CZ, (i, j))
        for i, j in itertools.combinations(range(n), 2) if adjacency[i, j]
    ]
    return apply_gates(init_basis_state(n, 0), gates)


def graph_id(adjacency):
    """Bit k set iff the k-th vertex pair, in lexicographic order, is an edge"""
    adjacency = _check_adjacency(adjacency)
    pairs = itertools.combinations(range(adjacency.shape[0]), 2)
    return sum(1 << k for k, (i, j) in enumerate(pairs) if adjacency[i, j])


def _graph_sample(adjacency):
    adjacency = _check_adjacency(adjacency)
    return GraphSample(
        graph_id=graph_id(adjacency),
        n_vertices=adjacency.shape[0],
        adjacency=adjacency,
        label=int(is_connected(adjacency)),
        state=graph_state(adjacency),
    )


def sample_graph(n=4, edge_prob=0.45, rng_seed=None):
    """Erdős–Rényi G(n, p) sample with its graph state and connectivity label"""
    if not 0.0 <= edge_prob <= 1.0:
        raise DomainError(f"edge_prob must lie in [0, 1], got {edge_prob}")
    graph = nx.gnp_random_graph(n, edge_prob, seed=rng_seed)
    return _graph_sample(nx.to_numpy_array(graph, nodelist=range(n)))


def enumerate_graphs(n=4):
    """All labeled graphs on n vertices, ordered by graph id"""
    pairs = list(itertools.combinations(range(n), 2))
    samples = []
    for mask in range(2 ** len(pairs)):
        adjacency = np.zeros((n, n), dtype=bool)
        for k, (i, j) in enumerate(pairs):
            if mask >> k & 1:
                adjacency[i, j] = adjacency[j, i] = True
        samples.append(_graph_sample(adjacency))
    return samples


def make_graph_splits(case, rng_seed=None, replication=4, exclude=(0,), min_test_per_class=1):
    """Seeded train/test partition of the distinct 4-vertex graphs, each split replicated.

    Training takes half of its graphs from each class as far as the
    disconnected class allows while leaving ``min_test_per_class`` of each
    class for testing; the rest of the pool is the test set.
    """
    if case not in GRAPH_SPLIT_SIZES:
        raise DomainError(f"Unknown graph case {case}; choose from {sorted(GRAPH_SPLIT_SIZES)}")
    if replication < 1:
        raise DomainError(f"replication must be >= 1, got {replication}")
    n_train, n_test = GRAPH_SPLIT_SIZES[case]
    pool = [g for g in enumerate_graphs(4) if g.graph_id not in set(exclude)]
    if n_train + n_test > len(pool):
        raise DomainError(f"Requested {n_train}+{n_test} graphs from a pool of {len(pool)}")

    rng = np.random.default_rng(rng_seed)
    connected = [pool[i] for i in rng.permutation([k for k, g in enumerate(pool) if g.label == 1])]
    disconnected = [pool[i] for i in rng.permutation([k for k, g in enumerate(pool) if g.label == 0])]

    train_disconnected = min(n_train // 2, len(disconnected) - min_test_per_class)
    train_connected = max(ceil(n_train / 2), n_train - train_disconnected)
    train_disconnected = n_train - train_connected
    if train_connected > len(connected) - min_test_per_class or train_disconnected < 0:
        raise DomainError(f"Cannot draw {n_train} training graphs and keep {min_test_per_class} per class for testing")

    train = connected[:train_connected] + disconnected[:train_disconnected]
    rest_connected = connected[train_connected:]
    rest_disconnected = disconnected[train_disconnected:]
    test = rest_connected[:n_test - min_test_per_class]
    test = test + rest_disconnected[:n_test - len(test)]
    train = [train[i] for i in rng.permutation(len(train))]
    logger.info(
        f"Graph case {case}: train {train_connected} connected + {train_disconnected} disconnected, "
        f"test {sum(g.label for g in test)} connected + {sum(1 - g.label for g in test)} disconnected"
    )
    return train * replication, test * replication


def graph_table(case=None, rng_seed=None, exclude=(0,)):
    """All 64 graphs with edges, label and (optionally) split membership"""
    membership = {}
    if case is not None:
        train, test = make_graph_splits(case, rng_seed, replication=1, exclude=exclude)
        membership.update({g.graph_id: "train" for g in train})
        membership.update({g.graph_id: "test" for g in test})
    rows = []
    for g in enumerate_graphs(4):
        rows.append({
            "graph_id": g.graph_id,
            "edges": " ".join(f"{i}-{j}" for i, j in g.edges),
            "n_edges": len(g.edges),
            "connected": g.label,
            "split": membership.get(g.graph_id, "excluded" if g.graph_id in set(exclude) else ""),
        })
    return pd.DataFrame(rows)


class DataProcessor:
    """Builds the train/test samples of one experiment from its resolved config"""

    def __init__(self, config, data_dir):
        self.config = config
        self.data_dir = Path(data_dir)

    def prepare_dataset(self):
        dataset_cfg = self.config["dataset"]
        if dataset_cfg["kind"] == "image":
            return self.prepare_image_dataset()
        if dataset_cfg["kind"] == "graph":
            return self.prepare_graph_dataset()
        raise DomainError(f"Unknown dataset kind '{dataset_cfg['kind']}'")

    def extract_images(self, split):
        """Raw samples of ``split`` ('train' or 'test') restricted to the class pair"""
        files = self.config["dataset"]["files"]
        images_path = self.data_dir / files[f"{split}_images"]
        labels_path = self.data_dir / files[f"{split}_labels"]
        logger.info(f"Loading {split} images from: {images_path}")
        return select_classes(load_idx(images_path, labels_path), self.config["dataset"]["classes"])

    def prepare_image_dataset(self):
        dataset_cfg = self.config["dataset"]
        seed = self.config["training"]["seed"]
        splits = {}
        for offset, split in enumerate(("train", "test")):
            raw = subsample(self.extract_images(split), dataset_cfg.get(f"max_{split}"), seed + offset)
            splits[split] = [ImageSample(downsample_4x4(s.pixels), s.label) for s in raw]
            logger.info(f"Prepared {len(splits[split])} {split} samples at 4x4")
        return Dataset(
            name=self.config["experiment"],
            kind="image",
            train=splits["train"],
            test=splits["test"],
            metadata={"classes": list(dataset_cfg["classes"])},
        )

    def prepare_graph_dataset(self):
        dataset_cfg = self.config["dataset"]
        train, test = make_graph_splits(
            dataset_cfg["case"],
            rng_seed=self.config["training"]["seed"],
            replication=dataset_cfg.get("replication", 4),
            exclude=tuple(dataset_cfg.get("exclude_graphs", [0])),
            min_test_per_class=dataset_cfg.get("min_test_per_class", 1),
        )
        return Dataset(
            name=self.config["experiment"],
            kind="graph",
            train=train,
            test=test,
            metadata={
                "case": dataset_cfg["case"],
                "train_graph_ids": sorted({g.graph_id for g in train}),
                "test_graph_ids": sorted({g.graph_id for g in test}),
            },
        )

    def save_graph_table(self, output_path, case=None, rng_seed=None):
        table = graph_table(case, rng_seed, tuple(self.config.get("dataset", {}).get("exclude_graphs", [0])))
        output_path = Path(output_path)
        output_path.parent.mkdir(parents=True, exist_ok=True)
        table.to_csv(output_path, index=False)
        logger.info(f"Graph table saved to: {output_path}")
        return table
