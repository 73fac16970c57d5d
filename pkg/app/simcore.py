"""
Dense statevector simulation of n-qubit registers
File: EquivariantQCNN/app/simcore.py

Qubit 0 is the most significant bit of the basis index. A state of n qubits
is handled internally as a tensor of shape (2,) * n so that axis q is qubit q.
"""

import logging
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .exceptions import DomainError, UnsupportedError

logger = logging.getLogger(__name__)

NORM_TOLERANCE = 1e-9


class GateKind(str, Enum):
    RX = "RX"
    RY = "RY"
    RZ = "RZ"
    ROT = "Rot"
    CNOT = "CNOT"
    CZ = "CZ"
    SWAP = "SWAP"
    ZZ = "ZZ"
    CONTROLLED_ROT = "ControlledRot"
    H = "H"


PARAM_COUNTS = {
    GateKind.RX: 1, GateKind.RY: 1, GateKind.RZ: 1, GateKind.ZZ: 1,
    GateKind.ROT: 3, GateKind.CONTROLLED_ROT: 3,
    GateKind.CNOT: 0, GateKind.CZ: 0, GateKind.SWAP: 0, GateKind.H: 0,
}

TARGET_COUNTS = {
    GateKind.RX: 1, GateKind.RY: 1, GateKind.RZ: 1, GateKind.ROT: 1,
    GateKind.CONTROLLED_ROT: 1, GateKind.H: 1,
    GateKind.CNOT: 2, GateKind.CZ: 2, GateKind.SWAP: 2, GateKind.ZZ: 2,
}

PARAMETRIC_KINDS = frozenset(kind for kind, count in PARAM_COUNTS.items() if count)

_I2 = np.eye(2, dtype=complex)
_X = np.array([[0, 1], [1, 0]], dtype=complex)
_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
_Z = np.array([[1, 0], [0, -1]], dtype=complex)
_H = np.array([[1, 1], [1, -1]], dtype=complex) / np.sqrt(2)
_ZZ = np.diag([1, -1, -1, 1]).astype(complex)
_CNOT = np.array([[1, 0, 0, 0], [0, 1, 0, 0], [0, 0, 0, 1], [0, 0, 1, 0]], dtype=complex)
_CZ = np.diag([1, 1, 1, -1]).astype(complex)
_SWAP = np.array([[1, 0, 0, 0], [0, 0, 1, 0], [0, 1, 0, 0], [0, 0, 0, 1]], dtype=complex)


@dataclass(frozen=True)
class Gate:
    """A gate on ``targets``, active only where every ``(qubit, bit)`` control matches"""

    kind: GateKind
    targets: tuple
    params: tuple = ()
    controls: tuple = ()

    def __post_init__(self):
        kind = GateKind(self.kind)
        targets = tuple(int(t) for t in self.targets)
        params = tuple(float(p) for p in self.params)
        controls = tuple((int(q), int(bit)) for q, bit in self.controls)
        object.__setattr__(self, "kind", kind)
        object.__setattr__(self, "targets", targets)
        object.__setattr__(self, "params", params)
        object.__setattr__(self, "controls", controls)

        if len(targets) != TARGET_COUNTS[kind]:
            raise DomainError(f"{kind.value} acts on {TARGET_COUNTS[kind]} qubit(s), got targets {targets}")
        if len(params) != PARAM_COUNTS[kind]:
            raise DomainError(f"{kind.value} takes {PARAM_COUNTS[kind]} parameter(s), got {len(params)}")
        if kind == GateKind.CONTROLLED_ROT and not controls:
            raise DomainError("ControlledRot needs at least one control")
        if any(bit not in (0, 1) for _, bit in controls):
            raise DomainError(f"Control bits must be 0 or 1: {controls}")
        qubits = list(targets) + [q for q, _ in controls]
        if len(set(qubits)) != len(qubits):
            raise DomainError(f"Targets and controls overlap: targets={targets} controls={controls}")

    @property
    def qubits(self):
        return self.targets + tuple(q for q, _ in self.controls)

    def check_register(self, n_qubits):
        for q in self.qubits:
            if not 0 <= q < n_qubits:
                raise DomainError(f"{self.kind.value} touches qubit {q}, register has {n_qubits}")


@dataclass(frozen=True, eq=False)
class StateVector:
    """Unit-norm amplitude vector of ``n_qubits`` qubits; amplitudes are read-only"""

    n_qubits: int
    amplitudes: np.ndarray

    def __post_init__(self):
        amplitudes = np.array(self.amplitudes, dtype=complex).reshape(-1)
        if self.n_qubits < 1 or amplitudes.size != 2 ** self.n_qubits:
            raise DomainError(
                f"Expected {2 ** max(self.n_qubits, 0)} amplitudes for {self.n_qubits} qubits, got {amplitudes.size}"
            )
        norm = np.linalg.norm(amplitudes)
        if abs(norm - 1.0) > NORM_TOLERANCE:
            raise DomainError(f"State is not normalized (norm {norm:.12f})")
        amplitudes.setflags(write=False)
        object.__setattr__(self, "amplitudes", amplitudes)

    @classmethod
    def from_amplitudes(cls, amplitudes, normalize=False):
        amplitudes = np.asarray(amplitudes, dtype=complex).reshape(-1)
        n_qubits = int(round(np.log2(max(amplitudes.size, 1))))
        if normalize:
            norm = np.linalg.norm(amplitudes)
            if norm == 0:
                raise DomainError("Cannot normalize the zero vector")
            amplitudes = amplitudes / norm
        return cls(n_qubits, amplitudes)

    def tensor(self):
        return self.amplitudes.reshape((2,) * self.n_qubits)

    def probabilities(self):
        return np.abs(self.amplitudes) ** 2

    def norm(self):
        return float(np.linalg.norm(self.amplitudes))

    def distance(self, other):
        """Euclidean distance between amplitude vectors (no global-phase removal)"""
        if other.n_qubits != self.n_qubits:
            raise DomainError(f"Register sizes differ: {self.n_qubits} vs {other.n_qubits}")
        return float(np.linalg.norm(self.amplitudes - other.amplitudes))


def init_basis_state(n_qubits, bitstring):
    if n_qubits < 1:
        raise DomainError(f"Register needs at least one qubit, got {n_qubits}")
    if not 0 <= bitstring < 2 ** n_qubits:
        raise DomainError(f"Bitstring {bitstring} out of range for {n_qubits} qubits")
    amplitudes = np.zeros(2 ** n_qubits, dtype=complex)
    amplitudes[bitstring] = 1.0
    return StateVector(n_qubits, amplitudes)


def random_state(n_qubits, rng=None):
    """Normalized complex Gaussian state"""
    rng = np.random.default_rng(rng)
    dim = 2 ** n_qubits
    amplitudes = rng.normal(size=dim) + 1j * rng.normal(size=dim)
    return StateVector(n_qubits, amplitudes / np.linalg.norm(amplitudes))


def kron_states(*states):
    """Tensor product; the first argument holds the lowest-numbered qubits"""
    if not states:
        raise DomainError("kron_states needs at least one state")
    amplitudes = np.ones(1, dtype=complex)
    for state in states:
        vector = state.amplitudes if isinstance(state, StateVector) else np.asarray(state, dtype=complex)
        amplitudes = np.kron(amplitudes, vector)
    return StateVector.from_amplitudes(amplitudes)


# -- gate matrices -----------------------------------------------------------

def rx_matrix(theta):
    c, s = np.cos(theta / 2), np.sin(theta / 2)
    return np.array([[c, -1j * s], [-1j * s, c]], dtype=complex)


def ry_matrix(theta):
    c, s = np.cos(theta / 2), np.sin(theta / 2)
    return np.array([[c, -s], [s, c]], dtype=complex)


def rz_matrix(theta):
    return np.diag([np.exp(-0.5j * theta), np.exp(0.5j * theta)])


def rot_matrix(theta1, theta2, theta3):
    """Rot(θ1, θ2, θ3) = RZ(θ3)·RY(θ2)·RZ(θ1)"""
    return rz_matrix(theta3) @ ry_matrix(theta2) @ rz_matrix(theta1)


def zz_matrix(theta):
    phase = np.exp(-0.5j * theta)
    return np.diag([phase, phase.conjugate(), phase.conjugate(), phase])


def gate_unitary(gate):
    """Matrix of ``gate`` on its targets only, controls excluded"""
    kind, p = gate.kind, gate.params
    if kind == GateKind.RX:
        return rx_matrix(p[0])
    if kind == GateKind.RY:
        return ry_matrix(p[0])
    if kind == GateKind.RZ:
        return rz_matrix(p[0])
    if kind in (GateKind.ROT, GateKind.CONTROLLED_ROT):
        return rot_matrix(*p)
    if kind == GateKind.ZZ:
        return zz_matrix(p[0])
    if kind == GateKind.H:
        return _H.copy()
    if kind == GateKind.CNOT:
        return _CNOT.copy()
    if kind == GateKind.CZ:
        return _CZ.copy()
    if kind == GateKind.SWAP:
        return _SWAP.copy()
    raise UnsupportedError(f"No matrix for gate kind {kind}")


def gate_derivative(gate, index):
    """∂U/∂θ_index of the target matrix, using d/dθ exp(-iθP/2) = (-i/2)·P·exp(-iθP/2)"""
    kind, p = gate.kind, gate.params
    if kind not in PARAMETRIC_KINDS:
        raise UnsupportedError(f"{kind.value} has no parameters to differentiate")
    if not 0 <= index < len(p):
        raise DomainError(f"Parameter index {index} out of range for {kind.value}")
    if kind == GateKind.RX:
        return -0.5j * _X @ rx_matrix(p[0])
    if kind == GateKind.RY:
        return -0.5j * _Y @ ry_matrix(p[0])
    if kind == GateKind.RZ:
        return -0.5j * _Z @ rz_matrix(p[0])
    if kind == GateKind.ZZ:
        return -0.5j * _ZZ @ zz_matrix(p[0])

    rz1, ry2, rz3 = rz_matrix(p[0]), ry_matrix(p[1]), rz_matrix(p[2])
    if index == 0:
        return rz3 @ ry2 @ (-0.5j * _Z @ rz1)
    if index == 1:
        return rz3 @ (-0.5j * _Y @ ry2) @ rz1
    return (-0.5j * _Z @ rz3) @ ry2 @ rz1


# -- application -------------------------------------------------------------

def apply_matrix(tensor, matrix, targets, controls=(), zero_outside=False):
    """Apply ``matrix`` to the target axes of a (2,)*n tensor inside the control subspace.

    Amplitudes outside the control subspace are copied unchanged, or set to
    zero with ``zero_outside`` (used for derivative operators).
    """
    n = tensor.ndim
    index = [slice(None)] * n
    for q, bit in controls:
        index[q] = bit
    index = tuple(index)

    control_qubits = [q for q, _ in controls]
    axes = [t - sum(1 for c in control_qubits if c < t) for t in targets]
    k = len(targets)

    sub = tensor[index]
    op = np.asarray(matrix).reshape((2,) * (2 * k))
    moved = np.tensordot(op, sub, axes=(list(range(k, 2 * k)), axes))
    moved = np.moveaxis(moved, list(range(k)), axes)

    result = np.zeros_like(tensor) if zero_outside else tensor.copy()
    result[index] = moved
    return result


def apply_gate_tensor(tensor, gate):
    return apply_matrix(tensor, gate_unitary(gate), gate.targets, gate.controls)


def apply_gate(state, gate):
    gate.check_register(state.n_qubits)
    tensor = apply_gate_tensor(state.tensor(), gate)
    return StateVector(state.n_qubits, tensor.reshape(-1))


def apply_gates(state, gates):
    tensor = state.tensor()
    for gate in gates:
        gate.check_register(state.n_qubits)
        tensor = apply_gate_tensor(tensor, gate)
    return StateVector(state.n_qubits, tensor.reshape(-1))


def permute_tensor(tensor, mapping):
    """Move the bit of axis i to axis ``mapping[i]``"""
    return np.transpose(tensor, np.argsort(mapping))


def apply_qubit_permutation(state, perm):
    if perm.n != state.n_qubits:
        raise DomainError(f"Permutation acts on {perm.n} qubits, state has {state.n_qubits}")
    tensor = permute_tensor(state.tensor(), perm.mapping)
    return StateVector(state.n_qubits, tensor.reshape(-1))


def swap_chain(perm):
    """SWAP gates that realize ``perm`` when applied in order"""
    return [Gate(GateKind.SWAP, pair) for pair in perm.to_swaps()]


# -- observables -------------------------------------------------------------

def _check_measured(qubits, n_qubits):
    qubits = sorted(set(int(q) for q in qubits))
    if not qubits:
        raise DomainError("Measured qubit set is empty")
    for q in qubits:
        if not 0 <= q < n_qubits:
            raise DomainError(f"Measured qubit {q} outside register of {n_qubits}")
    return qubits


def mean_z_tensor(tensor, qubits):
    """Mean of ⟨Z_q⟩ over ``qubits`` for an unvalidated (2,)*n amplitude tensor"""
    probabilities = np.abs(tensor) ** 2
    total = 0.0
    for q in qubits:
        marginal = np.moveaxis(probabilities, q, 0).reshape(2, -1).sum(axis=1)
        total += marginal[0] - marginal[1]
    return float(total / len(qubits))


def expectation_z(state, qubits):
    qubits = _check_measured(qubits, state.n_qubits)
    return mean_z_tensor(state.tensor(), qubits)


def z_diagonal(n_qubits, qubits):
    """Diagonal of the mean-Z observable over ``qubits`` as a (2,)*n real tensor"""
    qubits = _check_measured(qubits, n_qubits)
    indices = np.arange(2 ** n_qubits)
    diagonal = np.zeros(2 ** n_qubits)
    for q in qubits:
        bits = (indices >> (n_qubits - 1 - q)) & 1
        diagonal += 1 - 2 * bits
    return (diagonal / len(qubits)).reshape((2,) * n_qubits)


def dense_matrix(gates, n_qubits):
    """Full 2^n x 2^n unitary of a gate sequence; small registers only"""
    if n_qubits > 12:
        raise UnsupportedError(f"Refusing to materialize a dense {n_qubits}-qubit operator")
    dim = 2 ** n_qubits
    columns = []
    for column in np.eye(dim, dtype=complex):
        tensor = column.reshape((2,) * n_qubits)
        for gate in gates:
            gate.check_register(n_qubits)
            tensor = apply_gate_tensor(tensor, gate)
        columns.append(tensor.reshape(-1))
    return np.stack(columns, axis=1)
