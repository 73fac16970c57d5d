"""
Qubit-permutation representations of the reflection, rotation and symmetric groups
File: EquivariantQCNN/app/groups.py

Qubits are 0-based everywhere in this module. Pixel positions are row-major
indices ``r * cols + c`` with 0-based row and column.
"""

import itertools
import json
import logging
from collections import deque
from dataclasses import dataclass
from enum import Enum
from typing import Callable, Iterable, Sequence

from .exceptions import DomainError, NotReducibleError, UnsupportedError

logger = logging.getLogger(__name__)

MAX_ENUMERATED_DEGREE = 8


@dataclass(frozen=True)
class QubitPermutation:
    """Bijection on qubit indices; ``mapping[i]`` is the image of qubit i.

    Acting on a state, the bit carried by qubit i moves to qubit ``mapping[i]``.
    """

    mapping: tuple

    def __post_init__(self):
        mapping = tuple(int(q) for q in self.mapping)
        if sorted(mapping) != list(range(len(mapping))):
            raise DomainError(f"Not a bijection on 0..{len(mapping) - 1}: {mapping}")
        object.__setattr__(self, "mapping", mapping)

    @classmethod
    def identity(cls, n):
        return cls(tuple(range(n)))

    @classmethod
    def from_swaps(cls, n, pairs):
        """Product of disjoint transpositions on n qubits"""
        mapping = list(range(n))
        touched = set()
        for i, j in pairs:
            if i in touched or j in touched or i == j:
                raise DomainError(f"Swap pairs must be disjoint: {pairs}")
            touched.update((i, j))
            mapping[i], mapping[j] = j, i
        return cls(tuple(mapping))

    @property
    def n(self):
        return len(self.mapping)

    def __call__(self, qubit):
        return self.mapping[qubit]

    def compose(self, other):
        """``self ∘ other``: apply ``other`` first, then ``self``"""
        if other.n != self.n:
            raise DomainError(f"Cannot compose permutations of size {self.n} and {other.n}")
        return QubitPermutation(tuple(self.mapping[q] for q in other.mapping))

    __matmul__ = compose

    def inverse(self):
        inverse = [0] * self.n
        for i, image in enumerate(self.mapping):
            inverse[image] = i
        return QubitPermutation(tuple(inverse))

    def is_identity(self):
        return all(i == image for i, image in enumerate(self.mapping))

    def is_involution(self):
        return self.compose(self).is_identity()

    def cycles(self):
        """Non-trivial cycles, each starting at its smallest element"""
        seen = set()
        cycles = []
        for start in range(self.n):
            if start in seen or self.mapping[start] == start:
                continue
            cycle = [start]
            seen.add(start)
            nxt = self.mapping[start]
            while nxt != start:
                cycle.append(nxt)
                seen.add(nxt)
                nxt = self.mapping[nxt]
            cycles.append(tuple(cycle))
        return cycles

    def swap_pairs(self):
        """Transpositions of an involution as sorted (i, j) pairs with i < j"""
        cycles = self.cycles()
        if any(len(cycle) != 2 for cycle in cycles):
            raise DomainError(f"{self.label()} is not a product of disjoint swaps")
        return sorted(tuple(sorted(cycle)) for cycle in cycles)

    def to_swaps(self):
        """SWAP sequence whose in-order application realizes this permutation"""
        inverse = self.inverse().mapping
        content = list(range(self.n))
        swaps = []
        for position in range(self.n):
            source = inverse[position]
            if content[position] != source:
                other = content.index(source)
                swaps.append((position, other))
                content[position], content[other] = content[other], content[position]
        return swaps

    def label(self):
        cycles = self.cycles()
        if not cycles:
            return "e"
        return "".join("(" + " ".join(str(q) for q in cycle) + ")" for cycle in cycles)

    def __repr__(self):
        return f"QubitPermutation({self.label()}, n={self.n})"


@dataclass(frozen=True)
class Embedding:
    """Pixel-to-qubit assignment for a ``grid_rows x grid_cols`` image"""

    grid_rows: int
    grid_cols: int
    pixel_to_qubit: tuple

    def __post_init__(self):
        mapping = tuple(int(q) for q in self.pixel_to_qubit)
        size = self.grid_rows * self.grid_cols
        if len(mapping) != size or sorted(mapping) != list(range(size)):
            raise DomainError(
                f"pixel_to_qubit must be a bijection onto {size} qubits, got {mapping}"
            )
        object.__setattr__(self, "pixel_to_qubit", mapping)

    @property
    def n_qubits(self):
        return len(self.pixel_to_qubit)

    @property
    def qubit_to_pixel(self):
        inverse = [0] * self.n_qubits
        for pixel, qubit in enumerate(self.pixel_to_qubit):
            inverse[qubit] = pixel
        return tuple(inverse)

    def to_json(self):
        return json.dumps({
            "grid_rows": self.grid_rows,
            "grid_cols": self.grid_cols,
            "pixel_to_qubit": list(self.pixel_to_qubit),
        })

    @classmethod
    def from_json(cls, text):
        payload = json.loads(text)
        return cls(payload["grid_rows"], payload["grid_cols"], tuple(payload["pixel_to_qubit"]))


class GroupName(str, Enum):
    REFLECTION = "Reflection"
    ROTATION = "Rotation180AsWritten"
    SYMMETRIC = "Symmetric"
    TRIVIAL = "Trivial"


@dataclass(frozen=True)
class GroupSpec:
    """A permutation group given by generators acting on ``n`` qubits"""

    name: GroupName
    generators: tuple

    @property
    def n(self):
        return self.generators[0].n

    def elements(self, limit=50000):
        """All group elements; Sₙ is enumerated directly, others by closure"""
        if self.name == GroupName.SYMMETRIC:
            return symmetric_group_elements(self.n)
        return group_elements(self.generators, limit=limit)


def row_major_embedding(rows, cols):
    """Natural order: pixel (r, c) is encoded on qubit ``r * cols + c``"""
    return Embedding(rows, cols, tuple(range(rows * cols)))


def mirror_symmetric_embedding(rows, cols):
    """Embedding under which the vertical-axis reflection reverses qubit order.

    Left-half columns are enumerated column by column, top to bottom; the
    mirror image of the pixel on qubit q is placed on qubit ``n - 1 - q``,
    so the right half runs bottom to top.
    """
    if cols % 2:
        raise UnsupportedError(f"Mirror-symmetric embedding needs an even column count, got {cols}")
    n = rows * cols
    pixel_to_qubit = [0] * n
    for c in range(cols // 2):
        for r in range(rows):
            q = c * rows + r
            pixel_to_qubit[r * cols + c] = q
            pixel_to_qubit[r * cols + (cols - 1 - c)] = n - 1 - q
    return Embedding(rows, cols, tuple(pixel_to_qubit))


def pixel_map_perm(embedding, pixel_map: Callable[[int, int], tuple]):
    """Qubit permutation induced by moving pixel (r, c) to ``pixel_map(r, c)``"""
    rows, cols = embedding.grid_rows, embedding.grid_cols
    mapping = [0] * embedding.n_qubits
    for qubit, pixel in enumerate(embedding.qubit_to_pixel):
        r, c = divmod(pixel, cols)
        r2, c2 = pixel_map(r, c)
        if not (0 <= r2 < rows and 0 <= c2 < cols):
            raise DomainError(f"Pixel map sends ({r}, {c}) outside the grid")
        mapping[qubit] = embedding.pixel_to_qubit[r2 * cols + c2]
    return QubitPermutation(tuple(mapping))


def reflection_perm(embedding):
    """Mirror about the vertical axis, column c -> cols - 1 - c"""
    cols = embedding.grid_cols
    return pixel_map_perm(embedding, lambda r, c: (r, cols - 1 - c))


def rotation_perm_as_written(embedding):
    """The rotation representation exactly as printed: (r, c) -> (rows-1-r, cols-1-c)"""
    rows, cols = embedding.grid_rows, embedding.grid_cols
    return pixel_map_perm(embedding, lambda r, c: (rows - 1 - r, cols - 1 - c))


def vertical_flip_perm(embedding):
    rows = embedding.grid_rows
    return pixel_map_perm(embedding, lambda r, c: (rows - 1 - r, c))


def quarter_turn_perm(embedding):
    """Clockwise π/2 rotation; a 4-cycle on most pixel orbits. Not used by the architectures."""
    rows, cols = embedding.grid_rows, embedding.grid_cols
    if rows != cols:
        raise UnsupportedError("A quarter turn needs a square grid")
    return pixel_map_perm(embedding, lambda r, c: (c, rows - 1 - r))


def reduced_representation(perm, kept: Iterable[int]):
    """Restriction of ``perm`` to ``kept``, re-indexed over the sorted kept set"""
    kept = tuple(sorted(set(kept)))
    position = {q: a for a, q in enumerate(kept)}
    mapping = []
    for q in kept:
        if not 0 <= q < perm.n:
            raise DomainError(f"Kept qubit {q} outside 0..{perm.n - 1}")
        image = perm.mapping[q]
        if image not in position:
            raise NotReducibleError(
                f"{perm.label()} sends kept qubit {q} to discarded qubit {image}"
            )
        mapping.append(position[image])
    return QubitPermutation(tuple(mapping))


def lift_representation(reduced, kept: Sequence[int], n):
    """Inverse of re-indexing: act as ``reduced`` on ``kept``, identity elsewhere"""
    kept = tuple(sorted(set(kept)))
    if reduced.n != len(kept):
        raise DomainError(f"Reduced permutation has size {reduced.n}, kept set has {len(kept)}")
    mapping = list(range(n))
    for a, q in enumerate(kept):
        mapping[q] = kept[reduced.mapping[a]]
    return QubitPermutation(tuple(mapping))


def labelled_pairs(perm, labels: Sequence[int]):
    """Swap pairs of an involution expressed in the given qubit labels"""
    return sorted(tuple(sorted((labels[i], labels[j]))) for i, j in perm.swap_pairs())


def symmetric_group_elements(n):
    """All n! permutations of n qubits"""
    if n < 1:
        raise DomainError(f"Symmetric group needs n >= 1, got {n}")
    if n > MAX_ENUMERATED_DEGREE:
        raise UnsupportedError(f"Refusing to enumerate S_{n}; n must be <= {MAX_ENUMERATED_DEGREE}")
    return [QubitPermutation(p) for p in itertools.permutations(range(n))]


def group_elements(generators, limit=50000):
    """Closure of ``generators`` under composition (breadth-first)"""
    generators = list(generators)
    if not generators:
        raise DomainError("A group needs at least one generator")
    identity = QubitPermutation.identity(generators[0].n)
    seen = {identity.mapping: identity}
    queue = deque([identity])
    while queue:
        element = queue.popleft()
        for generator in generators:
            product = generator.compose(element)
            if product.mapping not in seen:
                if len(seen) >= limit:
                    raise UnsupportedError(f"Group closure exceeded {limit} elements")
                seen[product.mapping] = product
                queue.append(product)
    return list(seen.values())


def reflection_group(embedding):
    return GroupSpec(GroupName.REFLECTION, (reflection_perm(embedding),))


def rotation_group(embedding):
    return GroupSpec(GroupName.ROTATION, (rotation_perm_as_written(embedding),))


def symmetric_group(n):
    """Sₙ stored by its adjacent transpositions (i i+1)"""
    if n < 2:
        raise DomainError(f"Symmetric group generators need n >= 2, got {n}")
    generators = tuple(QubitPermutation.from_swaps(n, [(i, i + 1)]) for i in range(n - 1))
    return GroupSpec(GroupName.SYMMETRIC, generators)


def trivial_group(n):
    return GroupSpec(GroupName.TRIVIAL, (QubitPermutation.identity(n),))


def group_by_name(name, embedding=None, n=None):
    """Resolve a group from its name, as used by CLI flags"""
    key = str(name).lower()
    if key in ("reflection", "refl"):
        return reflection_group(embedding)
    if key in ("rotation", "rot", "rotation180aswritten"):
        return rotation_group(embedding)
    if key in ("symmetric", "sn"):
        return symmetric_group(n)
    if key in ("trivial", "identity"):
        return trivial_group(n)
    raise DomainError(f"Unknown group '{name}'")
