"""
Parameterized two-qubit convolution and pooling ansatze, Sn layers, parameter sharing
File: EquivariantQCNN/app/ansatz.py
"""

import itertools
import logging
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .exceptions import DomainError
from .simcore import Gate, GateKind

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class GateTemplate:
    """One gate of an ansatz: wires and controls are local wire numbers, slots index the parameter block"""

    kind: GateKind
    wires: tuple
    slots: tuple = ()
    controls: tuple = ()


@dataclass(frozen=True)
class Ansatz:
    name: str
    n_wires: int
    n_params: int
    templates: tuple

    def instantiate(self, params, wires, extra_controls=()):
        """Concrete gates for one placement on the register qubits ``wires``"""
        params = np.asarray(params, dtype=float)
        if params.size != self.n_params:
            raise DomainError(f"{self.name} takes {self.n_params} parameters, got {params.size}")
        if len(wires) != self.n_wires:
            raise DomainError(f"{self.name} acts on {self.n_wires} wires, got {tuple(wires)}")
        gates = []
        for template in self.templates:
            targets = tuple(wires[w] for w in template.wires)
            controls = tuple((wires[w], bit) for w, bit in template.controls) + tuple(extra_controls)
            gates.append(Gate(template.kind, targets, tuple(params[list(template.slots)]), controls))
        return gates


@dataclass(frozen=True)
class BoundGate:
    """A gate whose angles are read from global parameter positions ``slots``"""

    kind: GateKind
    targets: tuple
    slots: tuple = ()
    controls: tuple = ()

    def bind(self, values):
        return Gate(self.kind, self.targets, tuple(values[s] for s in self.slots), self.controls)


CONV2_GENERIC = Ansatz(
    "conv2_generic", 2, 6,
    (
        GateTemplate(GateKind.ROT, (0,), (0, 1, 2)),
        GateTemplate(GateKind.ROT, (1,), (3, 4, 5)),
        GateTemplate(GateKind.CNOT, (0, 1)),
    ),
)

# Same Rot on both wires followed by ZZ; the product commutes with SWAP
CONV2_SWAPSYM = Ansatz(
    "conv2_swapsym", 2, 4,
    (
        GateTemplate(GateKind.ROT, (0,), (0, 1, 2)),
        GateTemplate(GateKind.ROT, (1,), (0, 1, 2)),
        GateTemplate(GateKind.ZZ, (0, 1), (3,)),
    ),
)

# Wire 0 is the measured qubit, wire 1 the kept one
POOL2 = Ansatz(
    "pool2", 2, 6,
    (
        GateTemplate(GateKind.CONTROLLED_ROT, (1,), (0, 1, 2), ((0, 1),)),
        GateTemplate(GateKind.CONTROLLED_ROT, (1,), (3, 4, 5), ((0, 0),)),
    ),
)


SWAP_ANSATZ = Ansatz("swap", 2, 0, (GateTemplate(GateKind.SWAP, (0, 1)),))


def sn_layer_ansatz(n, entangle_first=False):
    """RX(θ1) on every wire, RY(θ2) on every wire, ZZ(θ3) on every unordered pair.

    With ``entangle_first`` the ZZ block runs before the rotations. A layer
    that feeds a Z readout directly must use this order: a trailing ZZ block
    commutes with every Z_q and would drop out of the prediction.
    """
    if n < 2:
        raise DomainError(f"An Sn layer needs at least 2 qubits, got {n}")
    rotations = [GateTemplate(GateKind.RX, (w,), (0,)) for w in range(n)]
    rotations += [GateTemplate(GateKind.RY, (w,), (1,)) for w in range(n)]
    entanglers = [GateTemplate(GateKind.ZZ, pair, (2,)) for pair in itertools.combinations(range(n), 2)]
    if entangle_first:
        return Ansatz(f"sn_readout_layer{n}", n, 3, tuple(entanglers + rotations))
    return Ansatz(f"sn_layer{n}", n, 3, tuple(rotations + entanglers))


ANSATZE = {
    CONV2_GENERIC.name: CONV2_GENERIC,
    CONV2_SWAPSYM.name: CONV2_SWAPSYM,
    POOL2.name: POOL2,
    SWAP_ANSATZ.name: SWAP_ANSATZ,
}


def conv2_generic(params, a=0, b=1):
    return CONV2_GENERIC.instantiate(params, (a, b))


def conv2_swapsym(params, a=0, b=1):
    return CONV2_SWAPSYM.instantiate(params, (a, b))


def pool2(params, measured=0, kept=1):
    if measured == kept:
        raise DomainError(f"Pooling needs distinct qubits, got {measured} twice")
    return POOL2.instantiate(params, (measured, kept))


def sn_layer(n, params, qubits=None, entangle_first=False):
    qubits = tuple(range(n)) if qubits is None else tuple(qubits)
    return sn_layer_ansatz(n, entangle_first).instantiate(params, qubits)


@dataclass(frozen=True)
class SharedParamLayer:
    """Placements of one ansatz that all read the same parameter group.

    ``role`` is ``conv``, ``pool`` or ``branch``; ``stage`` counts the pooling
    stages that precede the layer. ``controls`` are extra ``(qubit, bit)``
    controls added to every gate of every placement.
    """

    name: str
    ansatz: Ansatz
    placements: tuple
    param_group: Optional[str]
    role: str = "conv"
    stage: int = 0
    controls: tuple = ()

    def __post_init__(self):
        placements = tuple(tuple(int(q) for q in p) for p in self.placements)
        object.__setattr__(self, "placements", placements)
        object.__setattr__(self, "controls", tuple((int(q), int(b)) for q, b in self.controls))
        for placement in placements:
            if len(placement) != self.ansatz.n_wires:
                raise DomainError(f"Layer {self.name}: placement {placement} does not fit {self.ansatz.name}")

    @property
    def qubits(self):
        return sorted({q for placement in self.placements for q in placement})

    def gates(self, block):
        gates = []
        for placement in self.placements:
            gates.extend(self.ansatz.instantiate(block, placement, self.controls))
        return gates

    def bound_gates(self, offset):
        bound = []
        for placement in self.placements:
            for template in self.ansatz.templates:
                targets = tuple(placement[w] for w in template.wires)
                controls = tuple((placement[w], bit) for w, bit in template.controls) + self.controls
                slots = tuple(offset + s for s in template.slots)
                bound.append(BoundGate(template.kind, targets, slots, controls))
        return bound


@dataclass
class ParamVector:
    """Flat parameter vector with a named slice per parameter-sharing group"""

    values: np.ndarray
    group_offsets: dict = field(default_factory=dict)

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float).reshape(-1)
        covered = sorted(i for s in self.group_offsets.values() for i in range(*s.indices(self.values.size)))
        if covered != list(range(self.values.size)):
            raise DomainError("Parameter groups must cover every slot exactly once")

    @classmethod
    def from_groups(cls, param_groups, values=None):
        """``param_groups`` is an ordered sequence of ``(name, size)``"""
        offsets = {}
        start = 0
        for name, size in param_groups:
            offsets[name] = slice(start, start + size)
            start += size
        values = np.zeros(start) if values is None else np.asarray(values, dtype=float)
        if values.size != start:
            raise DomainError(f"Expected {start} parameters, got {values.size}")
        return cls(values, offsets)

    @property
    def size(self):
        return int(self.values.size)

    def block(self, group):
        if group is None:
            return np.zeros(0)
        return self.values[self.group_offsets[group]]

    def offset(self, group):
        if group is None:
            return 0
        return self.group_offsets[group].start

    def with_values(self, values):
        return ParamVector(np.asarray(values, dtype=float).copy(), dict(self.group_offsets))
