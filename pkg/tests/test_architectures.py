import numpy as np
import pytest

from app.architectures import (
    ARCHITECTURES, ancilla_codes, branch_expectations, build_architecture, build_baseline_qcnn,
    build_refl_rot_eqcnn, build_reflection_eqcnn, build_sn_eqcnn_circuit, build_sn_eqcnn_mixture,
    build_sn_eqnn, classify, count_branches, expectation_and_gradient, predict, predict_probability,
    ring_brick, rot_eqcnn_variant,
)
from app.data_processor import enumerate_graphs
from app.exceptions import DomainError, UnsupportedError
from app.groups import GroupName
from app.simcore import random_state

# gradient checks run at this many random points in the slow sweep
ACCEPTANCE_POINTS = 10

SMALL_BUILDERS = {
    "sn_eqcnn_mixture": lambda: build_sn_eqcnn_mixture(4),
    "sn_eqcnn_circuit": lambda: build_sn_eqcnn_circuit(4),
    "sn_eqnn": lambda: build_sn_eqnn(4),
    "baseline_qcnn_4": lambda: build_baseline_qcnn(4),
}

WIDE_BUILDERS = {
    "reflection_eqcnn": build_reflection_eqcnn,
    "reflrot_eqcnn": build_refl_rot_eqcnn,
    "rot_eqcnn_variant": rot_eqcnn_variant,
    "baseline_qcnn": lambda: build_baseline_qcnn(16),
}


def _finite_difference(arch, values, state, h=1e-4):
    grad = np.zeros(values.size)
    for k in range(values.size):
        plus, minus = values.copy(), values.copy()
        plus[k] += h
        minus[k] -= h
        grad[k] = (predict(arch, plus, state) - predict(arch, minus, state)) / (2 * h)
    return grad


class TestStructure:
    def test_branch_counts(self):
        assert count_branches(2) == 2
        assert count_branches(4) == 12
        assert count_branches(8) == 840
        with pytest.raises(UnsupportedError):
            count_branches(6)

    def test_mixture_has_one_branch_per_code(self):
        arch = build_sn_eqcnn_mixture(4)
        assert len(arch.branches) == 12 == len(ancilla_codes(4))
        assert sum(branch.weight for branch in arch.branches) == pytest.approx(1.0)

    def test_ring_brick(self):
        assert ring_brick((0, 1)) == [((0, 1),)]
        assert ring_brick(range(4)) == [((0, 1), (2, 3)), ((1, 2), (3, 0))]
        assert ring_brick((4, 7, 8, 11)) == [((4, 7), (8, 11)), ((7, 8), (11, 4))]
        with pytest.raises(DomainError):
            ring_brick((3,))

    def test_reflection_eqcnn_registers(self):
        arch = build_reflection_eqcnn()
        assert arch.registers() == [tuple(range(16)), tuple(range(4, 12)), (5, 6, 9, 10), (6, 9)]
        assert arch.measurement == (6, 9)
        assert arch.n_params == 3 * (4 + 6)

    def test_refl_rot_registers_and_expected_break(self):
        arch = build_refl_rot_eqcnn()
        assert arch.registers()[-2:] == [(4, 7, 8, 11), (4, 7)]
        assert arch.measurement == (4, 7)
        assert arch.expected_breaks == {GroupName.ROTATION: "pool3"}
        assert {g.name for g in arch.symmetries} == {GroupName.REFLECTION, GroupName.ROTATION}

    def test_rotation_variant_keeps_rotation_orbit(self):
        arch = rot_eqcnn_variant()
        assert arch.registers()[-1] == (4, 11)
        assert arch.measurement == (4, 11)

    def test_baseline_shrinks_to_one_qubit(self):
        arch = build_baseline_qcnn(4)
        assert arch.registers() == [(0, 1, 2, 3), (1, 3), (3,)]
        assert arch.measurement == (3,)
        assert arch.symmetries == ()

    def test_circuit_layout(self):
        arch = build_sn_eqcnn_circuit(4)
        assert arch.n_qubits == 9
        assert arch.n_inputs == 4
        assert arch.measurement == (8,)
        assert arch.param_groups == build_sn_eqcnn_mixture(4).param_groups

    def test_invalid_ancilla_codes(self):
        with pytest.raises(DomainError):
            build_sn_eqcnn_circuit(4, codes=(12,))

    def test_registry(self):
        assert set(ARCHITECTURES) == {
            "reflection_eqcnn", "reflrot_eqcnn", "rot_eqcnn_variant", "sn_eqcnn_mixture",
            "sn_eqcnn_circuit", "sn_eqnn", "baseline_qcnn",
        }
        assert build_architecture("baseline_qcnn", 8).n_qubits == 8
        with pytest.raises(DomainError):
            build_architecture("p4m_eqcnn")
        with pytest.raises(UnsupportedError):
            build_architecture("reflection_eqcnn", 4)

    def test_describe(self):
        info = build_sn_eqcnn_mixture(4).describe()
        assert info["n_branches"] == 12
        assert info["symmetries"] == ["Symmetric"]


class TestReadout:
    @pytest.mark.parametrize("name", sorted(SMALL_BUILDERS))
    def test_prediction_is_bounded(self, name, rng):
        arch = SMALL_BUILDERS[name]()
        for _ in range(5):
            params = arch.random_params(rng)
            m = predict(arch, params, random_state(arch.n_inputs, rng))
            assert -1.0 - 1e-12 <= m <= 1.0 + 1e-12

    def test_classify_matches_probability(self, rng):
        arch = build_sn_eqnn(4)
        params = arch.random_params(rng)
        for _ in range(10):
            state = random_state(4, rng)
            assert classify(arch, params, state) == int(predict_probability(arch, params, state) >= 0.5)

    def test_mixture_is_branch_average(self, rng):
        arch = build_sn_eqcnn_mixture(4)
        params = arch.random_params(rng)
        state = random_state(4, rng)
        assert predict(arch, params, state) == pytest.approx(branch_expectations(arch, params, state).mean())

    def test_wrong_input_width(self, rng):
        arch = build_sn_eqnn(4)
        with pytest.raises(DomainError):
            predict(arch, arch.random_params(rng), random_state(3, rng))

    def test_wrong_parameter_count(self, rng):
        arch = build_sn_eqnn(4)
        with pytest.raises(DomainError):
            predict(arch, np.zeros(5), random_state(4, rng))

    def test_random_params_in_range(self, rng):
        values = build_reflection_eqcnn().random_params(rng).values
        assert values.min() >= -np.pi and values.max() <= np.pi


class TestGradients:
    @pytest.mark.parametrize("name", sorted(SMALL_BUILDERS))
    def test_shift_rule_matches_finite_differences(self, name, rng):
        arch = SMALL_BUILDERS[name]()
        for _ in range(3):
            values = arch.random_params(rng).values
            state = random_state(arch.n_inputs, rng)
            _, shifted = expectation_and_gradient(arch, values, state, "parameter_shift")
            assert np.allclose(shifted, _finite_difference(arch, values, state), atol=1e-5)

    @pytest.mark.parametrize("name", sorted(SMALL_BUILDERS))
    def test_adjoint_matches_shift_rule(self, name, rng):
        arch = SMALL_BUILDERS[name]()
        values = arch.random_params(rng).values
        state = random_state(arch.n_inputs, rng)
        value_a, adjoint = expectation_and_gradient(arch, values, state, "adjoint")
        value_s, shifted = expectation_and_gradient(arch, values, state, "parameter_shift")
        assert value_a == pytest.approx(value_s)
        assert np.allclose(adjoint, shifted, atol=1e-10)

    def test_unknown_method(self, rng):
        arch = build_sn_eqnn(4)
        with pytest.raises(DomainError):
            expectation_and_gradient(arch, arch.random_params(rng), random_state(4, rng), "backprop")

    @pytest.mark.slow
    @pytest.mark.parametrize("name", sorted({**SMALL_BUILDERS, **WIDE_BUILDERS}))
    def test_gradients_agree_at_acceptance_points(self, name, rng):
        arch = {**SMALL_BUILDERS, **WIDE_BUILDERS}[name]()
        for _ in range(ACCEPTANCE_POINTS):
            values = arch.random_params(rng).values
            state = random_state(arch.n_inputs, rng)
            _, adjoint = expectation_and_gradient(arch, values, state, "adjoint")
            _, shifted = expectation_and_gradient(arch, values, state, "parameter_shift")
            assert np.allclose(adjoint, shifted, atol=1e-9)
            assert np.allclose(shifted, _finite_difference(arch, values, state), atol=1e-5)


class TestSnReadout:
    def test_eqcnn_and_eqnn_compute_different_functions(self, rng):
        mixture, eqnn = build_sn_eqcnn_mixture(4), build_sn_eqnn(4)
        states = [g.state for g in enumerate_graphs(4)]
        gap = 0.0
        for _ in range(3):
            values = rng.uniform(-np.pi, np.pi, 6)
            gap = max(gap, max(abs(predict(mixture, values, s) - predict(eqnn, values, s)) for s in states))
        assert gap > 1e-3

    @pytest.mark.parametrize("name", ["sn_eqcnn_mixture", "sn_eqcnn_circuit", "sn_eqnn"])
    def test_every_parameter_reaches_the_readout(self, name, rng):
        arch = SMALL_BUILDERS[name]()
        largest = np.zeros(arch.n_params)
        for _ in range(5):
            values = arch.random_params(rng).values
            _, grad = expectation_and_gradient(arch, values, random_state(4, rng), "adjoint")
            largest = np.maximum(largest, np.abs(grad))
        assert np.all(largest > 1e-6)
