import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from app.exceptions import DomainError, NotReducibleError, UnsupportedError
from app.groups import (
    Embedding, GroupName, QubitPermutation, group_by_name, group_elements, labelled_pairs,
    lift_representation, mirror_symmetric_embedding, quarter_turn_perm, reduced_representation,
    reflection_group, reflection_perm, rotation_perm_as_written, row_major_embedding,
    symmetric_group, symmetric_group_elements, trivial_group, vertical_flip_perm,
)

REVERSAL_16 = [(i, 15 - i) for i in range(8)]


@pytest.fixture
def mirror():
    return mirror_symmetric_embedding(4, 4)


@pytest.fixture
def row_major():
    return row_major_embedding(4, 4)


class TestQubitPermutation:
    def test_rejects_non_bijection(self):
        with pytest.raises(DomainError):
            QubitPermutation((0, 0, 1))

    def test_from_swaps_rejects_overlap(self):
        with pytest.raises(DomainError):
            QubitPermutation.from_swaps(4, [(0, 1), (1, 2)])

    def test_labels(self):
        assert QubitPermutation.identity(3).label() == "e"
        assert QubitPermutation((3, 2, 1, 0)).label() == "(0 3)(1 2)"
        assert QubitPermutation((1, 2, 0)).cycles() == [(0, 1, 2)]

    def test_swap_pairs_require_involution(self):
        with pytest.raises(DomainError):
            QubitPermutation((1, 2, 0)).swap_pairs()

    @settings(max_examples=50, deadline=None)
    @given(st.permutations(list(range(6))))
    def test_inverse(self, mapping):
        perm = QubitPermutation(tuple(mapping))
        assert perm.compose(perm.inverse()).is_identity()
        assert (perm.inverse() @ perm).is_identity()

    @settings(max_examples=50, deadline=None)
    @given(st.permutations(list(range(6))))
    def test_to_swaps_replays_to_permutation(self, mapping):
        perm = QubitPermutation(tuple(mapping))
        replay = QubitPermutation.identity(6)
        for pair in perm.to_swaps():
            replay = QubitPermutation.from_swaps(6, [pair]).compose(replay)
        assert replay == perm


class TestEmbeddings:
    def test_mirror_embedding_layout(self, mirror):
        # columns 0 and 1 run top to bottom over qubits 0..7
        assert [mirror.pixel_to_qubit[r * 4] for r in range(4)] == [0, 1, 2, 3]
        assert [mirror.pixel_to_qubit[r * 4 + 1] for r in range(4)] == [4, 5, 6, 7]
        # columns 2 and 3 run bottom to top over qubits 8..15
        assert [mirror.pixel_to_qubit[r * 4 + 2] for r in range(3, -1, -1)] == [8, 9, 10, 11]
        assert [mirror.pixel_to_qubit[r * 4 + 3] for r in range(3, -1, -1)] == [12, 13, 14, 15]

    def test_mirror_embedding_needs_even_columns(self):
        with pytest.raises(UnsupportedError):
            mirror_symmetric_embedding(4, 3)

    def test_embedding_must_be_bijection(self):
        with pytest.raises(DomainError):
            Embedding(2, 2, (0, 1, 1, 3))

    def test_json_round_trip(self, mirror):
        assert Embedding.from_json(mirror.to_json()) == mirror


class TestRepresentations:
    def test_row_major_reflection_pairs(self, row_major):
        assert reflection_perm(row_major).swap_pairs() == [
            (0, 3), (1, 2), (4, 7), (5, 6), (8, 11), (9, 10), (12, 15), (13, 14),
        ]

    def test_mirror_reflection_is_index_reversal(self, mirror):
        assert reflection_perm(mirror).swap_pairs() == REVERSAL_16

    def test_small_grids(self):
        assert reflection_perm(mirror_symmetric_embedding(2, 2)).swap_pairs() == [(0, 3), (1, 2)]
        assert reflection_perm(row_major_embedding(1, 2)).swap_pairs() == [(0, 1)]
        assert rotation_perm_as_written(row_major_embedding(2, 2)).swap_pairs() == [(0, 3), (1, 2)]

    def test_row_major_rotation_is_index_reversal(self, row_major):
        assert rotation_perm_as_written(row_major).swap_pairs() == REVERSAL_16

    def test_mirror_rotation_composes_reflection_and_flip(self, mirror):
        expected = reflection_perm(mirror).compose(vertical_flip_perm(mirror))
        assert rotation_perm_as_written(mirror) == expected

    def test_quarter_turn_squares_to_printed_rotation(self, row_major):
        quarter = quarter_turn_perm(row_major)
        assert not quarter.is_involution()
        assert quarter.compose(quarter) == rotation_perm_as_written(row_major)
        assert len(group_elements([quarter])) == 4

    @pytest.mark.parametrize("builder", [reflection_perm, rotation_perm_as_written])
    def test_spatial_representations_are_faithful_involutions(self, builder, mirror, row_major):
        for embedding in (mirror, row_major):
            perm = builder(embedding)
            assert not perm.is_identity()
            assert perm.is_involution()


class TestReducedRepresentations:
    def test_reflection_after_each_pooling(self, mirror):
        reflection = reflection_perm(mirror)
        tables = [
            (range(4, 12), [(4, 11), (5, 10), (6, 9), (7, 8)]),
            ((5, 6, 9, 10), [(5, 10), (6, 9)]),
            ((6, 9), [(6, 9)]),
        ]
        for kept, expected in tables:
            kept = tuple(kept)
            assert labelled_pairs(reduced_representation(reflection, kept), kept) == expected

    def test_reflection_and_rotation_after_pooling(self, row_major):
        reflection = reflection_perm(row_major)
        rotation = rotation_perm_as_written(row_major)
        kept = tuple(range(4, 12))
        assert labelled_pairs(reduced_representation(reflection, kept), kept) == [(4, 7), (5, 6), (8, 11), (9, 10)]
        assert labelled_pairs(reduced_representation(rotation, kept), kept) == [(4, 11), (5, 10), (6, 9), (7, 8)]
        kept = (4, 7, 8, 11)
        assert labelled_pairs(reduced_representation(reflection, kept), kept) == [(4, 7), (8, 11)]
        assert labelled_pairs(reduced_representation(rotation, kept), kept) == [(4, 11), (7, 8)]

    def test_not_closed_kept_set(self, row_major):
        with pytest.raises(NotReducibleError):
            reduced_representation(rotation_perm_as_written(row_major), (4, 7))

    def test_identity_reduces_to_identity(self):
        assert reduced_representation(QubitPermutation.identity(8), (1, 5, 6)).is_identity()

    def test_lift_inverts_reduction(self, mirror):
        reflection = reflection_perm(mirror)
        kept = tuple(range(4, 12))
        lifted = lift_representation(reduced_representation(reflection, kept), kept, 16)
        assert [lifted(q) for q in kept] == [reflection(q) for q in kept]
        assert all(lifted(q) == q for q in range(16) if q not in kept)


class TestGroups:
    @pytest.mark.parametrize("n,count", [(2, 2), (3, 6), (4, 24)])
    def test_symmetric_group_sizes(self, n, count):
        elements = symmetric_group_elements(n)
        assert len(elements) == count
        assert len({e.mapping for e in elements}) == count

    def test_symmetric_generators_close_to_full_group(self):
        assert len(symmetric_group(4).elements()) == 24
        assert len(group_elements(symmetric_group(4).generators)) == 24

    def test_symmetric_group_enumeration_limit(self):
        with pytest.raises(UnsupportedError):
            symmetric_group_elements(9)

    def test_spatial_group_has_two_elements(self, mirror):
        assert len(reflection_group(mirror).elements()) == 2

    def test_group_by_name(self, row_major):
        assert group_by_name("reflection", row_major).name == GroupName.REFLECTION
        assert group_by_name("Rotation180AsWritten", row_major).name == GroupName.ROTATION
        assert group_by_name("sn", n=4).n == 4
        assert trivial_group(3).elements()[0].is_identity()
        with pytest.raises(DomainError):
            group_by_name("p4m")
