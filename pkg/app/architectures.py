"""
Model descriptions for the equivariant QCNNs, the Sn models and the baseline QCNN
File: EquivariantQCNN/app/architectures.py

Every builder returns an ArchitectureSpec. Qubit numbers are 0-based; pooling
pairs are written (measured -> kept). Pooling is realized by deferred
measurement: the measured qubit only controls rotations on the kept qubit and
is ignored afterwards.
"""

import itertools
import logging
from dataclasses import dataclass, field
from functools import cached_property
from math import comb
from typing import Optional

import numpy as np

from .ansatz import (
    CONV2_GENERIC, CONV2_SWAPSYM, POOL2, SWAP_ANSATZ, ParamVector, SharedParamLayer,
    sn_layer_ansatz,
)
from .exceptions import DomainError, UnsupportedError
from .groups import (
    Embedding, GroupName, mirror_symmetric_embedding, reflection_group, rotation_group,
    row_major_embedding, symmetric_group,
)
from .simcore import (
    Gate, StateVector, apply_matrix, gate_derivative, gate_unitary,
    mean_z_tensor, z_diagonal,
)

logger = logging.getLogger(__name__)

SHIFT = np.pi / 2


@dataclass(frozen=True)
class PoolingStage:
    measured: tuple
    kept: tuple
    pairs: tuple


@dataclass(frozen=True)
class Branch:
    """One QCNN of a mixture: layers applied after the shared trunk, then mean Z on ``measurement``"""

    layers: tuple
    measurement: tuple
    weight: float


@dataclass(frozen=True)
class BranchSet:
    branches: tuple

    def __post_init__(self):
        total = sum(branch.weight for branch in self.branches)
        if not self.branches or abs(total - 1.0) > 1e-12:
            raise DomainError(f"Branch weights must sum to 1, got {total}")

    def __len__(self):
        return len(self.branches)

    def __iter__(self):
        return iter(self.branches)


@dataclass(frozen=True, eq=False)
class ArchitectureSpec:
    """Ordered layers, pooling stages, readout and claimed symmetries of one model.

    ``n_inputs`` qubits carry the input state; any further qubits are
    ancillas prepared in ``ancilla_state``. ``expected_breaks`` maps a group
    name to the layer at which the design deliberately gives that symmetry up.
    """

    name: str
    n_qubits: int
    layers: tuple
    pooling_stages: tuple
    measurement: tuple
    symmetries: tuple
    param_groups: tuple
    embedding: Optional[Embedding] = None
    n_inputs: Optional[int] = None
    branches: Optional[BranchSet] = None
    ancilla_state: Optional[np.ndarray] = None
    expected_breaks: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.n_inputs is None:
            object.__setattr__(self, "n_inputs", self.n_qubits)
        if not self.measurement:
            raise DomainError(f"{self.name}: measurement set is empty")
        register = set(range(self.n_inputs))
        for stage in self.pooling_stages:
            measured, kept = set(stage.measured), set(stage.kept)
            if measured & kept or (measured | kept) != register or not kept or len(kept) >= len(register):
                raise DomainError(f"{self.name}: pooling stage {stage} does not shrink register {sorted(register)}")
            register = kept
        groups = dict(self.param_groups)
        for layer in self.all_layers():
            if layer.param_group is None and layer.ansatz.n_params == 0:
                continue
            if layer.param_group not in groups:
                raise DomainError(f"{self.name}: layer {layer.name} reads unknown group {layer.param_group}")
            if groups[layer.param_group] != layer.ansatz.n_params:
                raise DomainError(f"{self.name}: group {layer.param_group} size does not fit {layer.ansatz.name}")

    @property
    def n_params(self):
        return sum(size for _, size in self.param_groups)

    def registers(self):
        """Surviving qubits before any pooling, then after each pooling stage"""
        registers = [tuple(range(self.n_inputs))]
        registers.extend(tuple(sorted(stage.kept)) for stage in self.pooling_stages)
        return registers

    def all_layers(self):
        layers = list(self.layers)
        if self.branches is not None:
            seen = set()
            for branch in self.branches:
                for layer in branch.layers:
                    if layer.name not in seen:
                        seen.add(layer.name)
                        layers.append(layer)
        return layers

    def new_params(self, values=None):
        return ParamVector.from_groups(self.param_groups, values)

    def random_params(self, rng=None):
        rng = np.random.default_rng(rng)
        return self.new_params(rng.uniform(-np.pi, np.pi, self.n_params))

    def prepare(self, state):
        """Input state (plus ancillas) as a (2,)*n_qubits tensor"""
        amplitudes = state.amplitudes if isinstance(state, StateVector) else np.asarray(state, dtype=complex)
        if amplitudes.size != 2 ** self.n_inputs:
            raise DomainError(f"{self.name} expects a {self.n_inputs}-qubit input, got {amplitudes.size} amplitudes")
        if self.ancilla_state is not None:
            amplitudes = np.kron(amplitudes, self.ancilla_state)
        return np.asarray(amplitudes, dtype=complex).reshape((2,) * self.n_qubits)

    @cached_property
    def circuit(self):
        return CompiledCircuit.from_spec(self)

    def describe(self):
        return {
            "name": self.name,
            "n_qubits": self.n_qubits,
            "n_inputs": self.n_inputs,
            "n_params": self.n_params,
            "n_layers": len(self.layers),
            "n_pooling_stages": len(self.pooling_stages),
            "n_branches": len(self.branches) if self.branches is not None else 1,
            "measurement": list(self.measurement),
            "symmetries": [group.name.value for group in self.symmetries],
        }


@dataclass(frozen=True, eq=False)
class CompiledCircuit:
    """Bound-gate form of an architecture: a trunk and weighted branches.

    ``nodes`` maps a branch-layer path to its gates; each gate carries a
    global id so a single occurrence can be shifted for the parameter-shift
    rule. Branches sharing a path prefix reuse its state.
    """

    n_qubits: int
    n_params: int
    trunk: tuple
    nodes: dict
    branches: tuple

    @classmethod
    def from_spec(cls, spec):
        params = spec.new_params()
        next_id = itertools.count()

        def bind(layers):
            ops = []
            for layer in layers:
                for gate in layer.bound_gates(params.offset(layer.param_group)):
                    ops.append((next(next_id), gate))
            return tuple(ops)

        trunk = bind(spec.layers)
        nodes = {}
        branches = []
        if spec.branches is None:
            branches.append((1.0, (), tuple(spec.measurement)))
        else:
            for branch in spec.branches:
                path = []
                for layer in branch.layers:
                    path.append(layer.name)
                    key = tuple(path)
                    if key not in nodes:
                        nodes[key] = bind([layer])
                branches.append((branch.weight, tuple(path), tuple(branch.measurement)))
        return cls(spec.n_qubits, spec.n_params, trunk, nodes, tuple(branches))

    @staticmethod
    def _gate(op_id, op, values, override):
        gate = op.bind(values)
        if override is not None and override[0] == op_id:
            shifted = list(gate.params)
            shifted[override[1]] += override[2]
            gate = Gate(gate.kind, gate.targets, tuple(shifted), gate.controls)
        return gate

    def _run(self, ops, values, tensor, override=None):
        for op_id, op in ops:
            gate = self._gate(op_id, op, values, override)
            tensor = apply_matrix(tensor, gate_unitary(gate), gate.targets, gate.controls)
        return tensor

    def _branch_states(self, values, tensor, override=None):
        trunk_state = self._run(self.trunk, values, tensor, override)
        cache = {(): trunk_state}
        states = []
        for weight, path, measurement in self.branches:
            for depth in range(1, len(path) + 1):
                key = path[:depth]
                if key not in cache:
                    cache[key] = self._run(self.nodes[key], values, cache[path[:depth - 1]], override)
            states.append((weight, path, measurement, cache[path]))
        return trunk_state, states

    def expectation(self, values, tensor, override=None):
        _, states = self._branch_states(values, tensor, override)
        return float(sum(weight * mean_z_tensor(state, measurement) for weight, _, measurement, state in states))

    def occurrences(self):
        """(op id, parameter index, global slot) for every parameter read"""
        found = []
        for op_id, op in self.all_ops():
            for k, slot in enumerate(op.slots):
                found.append((op_id, k, slot))
        return found

    def all_ops(self):
        ops = list(self.trunk)
        for node_ops in self.nodes.values():
            ops.extend(node_ops)
        return ops

    def shift_gradient(self, values, tensor):
        """Value and gradient by the two-point shift rule on every parameter occurrence"""
        values = np.asarray(values, dtype=float)
        value = self.expectation(values, tensor)
        grad = np.zeros(self.n_params)
        for op_id, k, slot in self.occurrences():
            plus = self.expectation(values, tensor, (op_id, k, SHIFT))
            minus = self.expectation(values, tensor, (op_id, k, -SHIFT))
            grad[slot] += 0.5 * (plus - minus)
        return value, grad

    def _backprop(self, ops, values, phi, lam, grad):
        for _, op in reversed(ops):
            gate = op.bind(values)
            adjoint = gate_unitary(gate).conj().T
            phi = apply_matrix(phi, adjoint, gate.targets, gate.controls)
            for k, slot in enumerate(op.slots):
                mu = apply_matrix(phi, gate_derivative(gate, k), gate.targets, gate.controls, zero_outside=True)
                grad[slot] += 2.0 * np.real(np.vdot(lam, mu))
            lam = apply_matrix(lam, adjoint, gate.targets, gate.controls)
        return phi, lam

    def adjoint_gradient(self, values, tensor):
        """Value and gradient by reverse-mode statevector differentiation"""
        values = np.asarray(values, dtype=float)
        trunk_state, states = self._branch_states(values, tensor)
        grad = np.zeros(self.n_params)
        value = 0.0
        total_lam = np.zeros_like(trunk_state)
        for weight, path, measurement, state in states:
            observable = z_diagonal(self.n_qubits, measurement)
            value += weight * mean_z_tensor(state, measurement)
            lam = weight * observable * state
            phi = state
            for depth in range(len(path), 0, -1):
                phi, lam = self._backprop(self.nodes[path[:depth]], values, phi, lam, grad)
            total_lam = total_lam + lam
        self._backprop(self.trunk, values, trunk_state, total_lam, grad)
        return float(value), grad


# -- evaluation --------------------------------------------------------------

def _values(arch, params):
    values = params.values if isinstance(params, ParamVector) else np.asarray(params, dtype=float)
    if values.size != arch.n_params:
        raise DomainError(f"{arch.name} has {arch.n_params} parameters, got {values.size}")
    return values


def predict(arch, params, state):
    """Mean-Z readout, averaged over branches for mixtures; in [-1, 1]"""
    return arch.circuit.expectation(_values(arch, params), arch.prepare(state))


def branch_expectations(arch, params, state):
    """Unweighted mean-Z readout of every branch, in branch order"""
    _, states = arch.circuit._branch_states(_values(arch, params), arch.prepare(state))
    return np.array([mean_z_tensor(tensor, measurement) for _, _, measurement, tensor in states])


def predict_probability(arch, params, state):
    return 0.5 * (1.0 + predict(arch, params, state))


def classify(arch, params, state):
    """Class 1 iff the mean-Z readout is >= 0 (probability >= 0.5)"""
    return int(predict(arch, params, state) >= 0.0)


def expectation_and_gradient(arch, params, state, method="adjoint"):
    values = _values(arch, params)
    tensor = arch.prepare(state)
    if method == "adjoint":
        return arch.circuit.adjoint_gradient(values, tensor)
    if method == "parameter_shift":
        return arch.circuit.shift_gradient(values, tensor)
    raise DomainError(f"Unknown gradient method '{method}'")


# -- layer helpers -----------------------------------------------------------

def ring_brick(register):
    """Even and odd sub-layers of neighbouring pairs, the odd one closing the ring"""
    register = tuple(register)
    m = len(register)
    if m < 2:
        raise DomainError(f"A brick layer needs at least 2 qubits, got {register}")
    if m == 2:
        return [(register,)]
    even = [(register[2 * i], register[2 * i + 1]) for i in range(m // 2)]
    n_odd = m // 2 if m % 2 == 0 else (m - 1) // 2
    odd = [(register[2 * i + 1], register[(2 * i + 2) % m]) for i in range(n_odd)]
    return [tuple(even), tuple(odd)]


def _conv(name, ansatz, sub_layers, stage):
    return [
        SharedParamLayer(f"{name}.{chr(ord('a') + i)}", ansatz, placements, name, "conv", stage)
        for i, placements in enumerate(sub_layers)
    ]


def _pool(name, pairs, register, stage):
    measured = tuple(sorted(m for m, _ in pairs))
    kept = tuple(sorted(set(register) - set(measured)))
    layer = SharedParamLayer(name, POOL2, tuple(pairs), name, "pool", stage)
    return layer, PoolingStage(measured, kept, tuple(pairs))


def _qcnn(name, embedding, conv_ansatz, conv_tables, pool_tables, measurement, symmetries, expected_breaks=None):
    layers, stages, groups = [], [], []
    register = tuple(range(embedding.n_qubits))
    for stage, (conv_table, pool_pairs) in enumerate(zip(conv_tables, pool_tables), start=1):
        conv_name, pool_name = f"conv{stage}", f"pool{stage}"
        layers.extend(_conv(conv_name, conv_ansatz, conv_table, stage - 1))
        pool_layer, pooling = _pool(pool_name, pool_pairs, register, stage - 1)
        layers.append(pool_layer)
        stages.append(pooling)
        groups += [(conv_name, conv_ansatz.n_params), (pool_name, POOL2.n_params)]
        register = pooling.kept
    return ArchitectureSpec(
        name=name,
        n_qubits=embedding.n_qubits,
        layers=tuple(layers),
        pooling_stages=tuple(stages),
        measurement=tuple(measurement),
        symmetries=tuple(symmetries),
        param_groups=tuple(groups),
        embedding=embedding,
        expected_breaks=dict(expected_breaks or {}),
    )


# -- builders ----------------------------------------------------------------

def count_branches(n):
    """Number of equally weighted QCNNs in the Sn mixture: C(n,n/2)·C(n/2,n/4)···C(2,1)"""
    if n < 2 or n & (n - 1):
        raise UnsupportedError(f"Branch count is defined for powers of 2, got {n}")
    total = 1
    while n > 1:
        total *= comb(n, n // 2)
        n //= 2
    return total


def build_reflection_eqcnn():
    """16-qubit reflection-equivariant QCNN on the mirror-symmetric embedding"""
    embedding = mirror_symmetric_embedding(4, 4)
    conv_tables = [
        ring_brick(range(16)),
        ring_brick(range(4, 12)),
        ring_brick((5, 6, 9, 10)),
    ]
    pool_tables = [
        [(3, 4), (2, 5), (1, 6), (0, 7), (12, 11), (13, 10), (14, 9), (15, 8)],
        [(4, 5), (7, 6), (8, 9), (11, 10)],
        [(5, 6), (10, 9)],
    ]
    return _qcnn("reflection_eqcnn", embedding, CONV2_SWAPSYM, conv_tables, pool_tables,
                 (6, 9), [reflection_group(embedding)])


_REFLROT_POOL_1_2 = [
    [(0, 4), (1, 5), (2, 6), (3, 7), (15, 11), (14, 10), (13, 9), (12, 8)],
    [(5, 4), (6, 7), (9, 8), (10, 11)],
]


def build_refl_rot_eqcnn():
    """16-qubit QCNN equivariant under reflection and the printed rotation map.

    The first convolution is four sub-layers of disjoint pairs, each closed
    under both generators; the offset-7 pairs sit in sub-layers c and d. The
    last pooling keeps {4, 7}, which preserves reflection and breaks rotation.
    """
    embedding = row_major_embedding(4, 4)
    conv1 = [
        tuple((i, i + 1) for i in range(0, 16, 2)),
        ((1, 2), (5, 6), (9, 10), (13, 14)),
        ((3, 4), (0, 7), (11, 12), (8, 15)),
        ((7, 8), (4, 11)),
    ]
    conv_tables = [conv1, ring_brick(range(4, 12)), ring_brick((4, 7, 8, 11))]
    pool_tables = _REFLROT_POOL_1_2 + [[(8, 7), (11, 4)]]
    return _qcnn("reflrot_eqcnn", embedding, CONV2_SWAPSYM, conv_tables, pool_tables, (4, 7),
                 [reflection_group(embedding), rotation_group(embedding)],
                 expected_breaks={GroupName.ROTATION: "pool3"})


def rot_eqcnn_variant():
    """Rotation-only variant: plain brick first layer, last pooling keeps {4, 11}"""
    embedding = row_major_embedding(4, 4)
    conv1 = [
        tuple((i, i + 1) for i in range(0, 16, 2)),
        tuple((i, i + 1) for i in range(1, 15, 2)),
    ]
    conv_tables = [conv1, ring_brick(range(4, 12)), ring_brick((4, 7, 8, 11))]
    pool_tables = _REFLROT_POOL_1_2 + [[(7, 4), (8, 11)]]
    return _qcnn("rot_eqcnn_variant", embedding, CONV2_SWAPSYM, conv_tables, pool_tables, (4, 11),
                 [rotation_group(embedding)])


def _square_embedding(n):
    side = int(round(np.sqrt(n)))
    return row_major_embedding(side, side) if side * side == n else row_major_embedding(1, n)


def build_baseline_qcnn(n=16):
    """Non-equivariant QCNN: generic brick convolutions, pooling (left -> right) halves the register"""
    if n < 2 or n & (n - 1):
        raise UnsupportedError(f"Baseline QCNN needs a power-of-2 register, got {n}")
    embedding = _square_embedding(n)
    register = tuple(range(n))
    conv_tables, pool_tables = [], []
    while len(register) > 1:
        conv_tables.append(ring_brick(register))
        pool_tables.append([(register[2 * j], register[2 * j + 1]) for j in range(len(register) // 2)])
        register = register[1::2]
    return _qcnn("baseline_qcnn", embedding, CONV2_GENERIC, conv_tables, pool_tables, register, [])


def _sn_branches(n):
    """Branches of the Sn mixture as (layers, measured qubit) with prefix-sharing layer names"""
    layers_cache = {}

    def conv_layer(stage, subset, path):
        name = f"conv{stage}[" + "|".join(",".join(map(str, s)) for s in path) + "]"
        if name not in layers_cache:
            # the pair layer is the last one before its branch is read out
            ansatz = sn_layer_ansatz(len(subset), entangle_first=len(subset) == 2)
            layers_cache[name] = SharedParamLayer(name, ansatz, (subset,), f"conv{stage}", "branch", stage - 1)
        return layers_cache[name]

    found = []

    def descend(subset, stage, path, layers):
        if len(subset) == 1:
            found.append((tuple(layers), subset))
            return
        for kept in itertools.combinations(subset, len(subset) // 2):
            next_layers = list(layers)
            next_path = path + [kept]
            if len(kept) > 1:
                next_layers.append(conv_layer(stage + 1, kept, next_path))
            descend(kept, stage + 1, next_path, next_layers)

    descend(tuple(range(n)), 1, [], [])
    return found


def _sn_param_groups(n):
    groups = []
    size, stage = n, 1
    while size > 1:
        groups.append((f"conv{stage}", 3))
        size //= 2
        stage += 1
    return tuple(groups)


def build_sn_eqcnn_mixture(n=4):
    """Sn-equivariant QCNN as an equal-weight average over every choice of traced qubits"""
    count = count_branches(n)
    conv1 = sn_layer_ansatz(n, entangle_first=n == 2)
    trunk = (SharedParamLayer("conv1", conv1, (tuple(range(n)),), "conv1", "conv", 0),)
    found = _sn_branches(n)
    weight = 1.0 / count
    branches = BranchSet(tuple(Branch(layers, measured, weight) for layers, measured in found))
    logger.debug("Sn mixture on %d qubits: %d branches", n, len(branches))
    return ArchitectureSpec(
        name="sn_eqcnn_mixture",
        n_qubits=n,
        layers=trunk,
        pooling_stages=(),
        measurement=tuple(range(n)),
        symmetries=(symmetric_group(n),),
        param_groups=_sn_param_groups(n),
        branches=branches,
    )


def ancilla_codes(n=4):
    """(pair, measured qubit) for every ancilla code, pairs in lexicographic order"""
    if n != 4:
        raise UnsupportedError(f"The ancilla circuit is built for 4 target qubits, got {n}")
    return [(pair, q) for pair in itertools.combinations(range(n), 2) for q in pair]


def build_sn_eqcnn_circuit(n=4, codes=None):
    """Ancilla-register realization of the S4 mixture on 4 + 4 + 1 qubits.

    Qubits 4..7 hold the branch code 2·pair + s in uniform superposition over
    ``codes`` (default all 12); qubits 4..6 select the pair, qubit 7 selects
    which qubit of the pair is swapped onto qubit 8, which is measured.
    """
    table = ancilla_codes(n)
    codes = tuple(range(len(table))) if codes is None else tuple(codes)
    if not codes or any(not 0 <= c < len(table) for c in codes):
        raise DomainError(f"Ancilla codes must lie in 0..{len(table) - 1}, got {codes}")

    a1 = (4, 5, 6, 7)
    a2 = 8
    prep = np.zeros(2 ** len(a1), dtype=complex)
    prep[list(codes)] = 1.0 / np.sqrt(len(codes))
    ancilla_state = np.kron(prep, np.array([1.0, 0.0], dtype=complex))

    def code_bits(code, width):
        return [(code >> (width - 1 - i)) & 1 for i in range(width)]

    layers = [SharedParamLayer("conv1", sn_layer_ansatz(n), (tuple(range(n)),), "conv1", "conv", 0)]
    pairs = list(itertools.combinations(range(n), 2))
    for index, pair in enumerate(pairs):
        controls = tuple(zip(a1[:3], code_bits(index, 3)))
        layers.append(SharedParamLayer(
            f"conv2[{pair[0]},{pair[1]}]", sn_layer_ansatz(2, entangle_first=True), (pair,), "conv2", "branch", 0, controls,
        ))
    for index, pair in enumerate(pairs):
        for s, qubit in enumerate(pair):
            controls = tuple(zip(a1, code_bits(index, 3) + [s]))
            layers.append(SharedParamLayer(
                f"cswap[{index}:{s}]", SWAP_ANSATZ, ((qubit, a2),), None, "branch", 0, controls,
            ))

    return ArchitectureSpec(
        name="sn_eqcnn_circuit",
        n_qubits=n + len(a1) + 1,
        n_inputs=n,
        layers=tuple(layers),
        pooling_stages=(),
        measurement=(a2,),
        symmetries=(symmetric_group(n),),
        param_groups=(("conv1", 3), ("conv2", 3)),
        ancilla_state=ancilla_state,
    )


def build_sn_eqnn(n=4):
    """Two Sn layers on all qubits, no pooling, mean Z over every qubit"""
    layers = tuple(
        SharedParamLayer(
            f"layer{k}", sn_layer_ansatz(n, entangle_first=k == 2), (tuple(range(n)),), f"layer{k}", "conv", 0,
        )
        for k in (1, 2)
    )
    return ArchitectureSpec(
        name="sn_eqnn",
        n_qubits=n,
        layers=layers,
        pooling_stages=(),
        measurement=tuple(range(n)),
        symmetries=(symmetric_group(n),),
        param_groups=(("layer1", 3), ("layer2", 3)),
    )


ARCHITECTURES = {
    "reflection_eqcnn": lambda n=16: build_reflection_eqcnn(),
    "reflrot_eqcnn": lambda n=16: build_refl_rot_eqcnn(),
    "rot_eqcnn_variant": lambda n=16: rot_eqcnn_variant(),
    "sn_eqcnn_mixture": lambda n=4: build_sn_eqcnn_mixture(n),
    "sn_eqcnn_circuit": lambda n=4: build_sn_eqcnn_circuit(n),
    "sn_eqnn": lambda n=4: build_sn_eqnn(n),
    "baseline_qcnn": lambda n=16: build_baseline_qcnn(n),
}

FIXED_WIDTH = {"reflection_eqcnn": 16, "reflrot_eqcnn": 16, "rot_eqcnn_variant": 16}


def build_architecture(name, n=None):
    """Build an architecture from its config name; ``n`` applies to width-generic models"""
    if name not in ARCHITECTURES:
        raise DomainError(f"Unknown architecture '{name}'. Choose from: {', '.join(ARCHITECTURES)}")
    if name in FIXED_WIDTH:
        if n not in (None, FIXED_WIDTH[name]):
            raise UnsupportedError(f"{name} is defined on {FIXED_WIDTH[name]} qubits only, got {n}")
        return ARCHITECTURES[name]()
    return ARCHITECTURES[name]() if n is None else ARCHITECTURES[name](n)
