import json

import numpy as np
import pytest

from app.architectures import (
    build_baseline_qcnn, build_refl_rot_eqcnn, build_reflection_eqcnn, build_sn_eqcnn_mixture, build_sn_eqnn,
    rot_eqcnn_variant,
)
from app.exceptions import DomainError
from app.groups import GroupName, reflection_group, rotation_group, symmetric_group, trivial_group
from app.verify import (
    check_mixture_circuit_equivalence, check_prediction_invariance, check_unitary_equivariance,
    mixture_circuit_residuals, verify_architecture,
)


class TestSnModels:
    @pytest.mark.parametrize("builder", [build_sn_eqnn, build_sn_eqcnn_mixture])
    def test_symmetric_group_certified(self, builder):
        arch = builder(4)
        group = symmetric_group(4)
        unitary = check_unitary_equivariance(arch, group, trials=20, rng=1)
        prediction = check_prediction_invariance(arch, group, trials=20, rng=2)
        assert unitary.passed and unitary.max_residual < 1e-9
        assert prediction.passed
        # small groups are checked element by element
        assert len(prediction.residuals) == 24

    def test_baseline_fails_symmetric_group(self):
        report = check_unitary_equivariance(build_baseline_qcnn(4), symmetric_group(4), trials=5, rng=3)
        assert not report.passed
        assert not report.meets_expectation
        assert report.broken_at

    def test_trivial_group_always_passes(self):
        report = check_unitary_equivariance(build_baseline_qcnn(4), trivial_group(4), trials=3, rng=4)
        assert report.passed

    def test_group_size_mismatch(self):
        with pytest.raises(DomainError):
            check_unitary_equivariance(build_sn_eqnn(4), symmetric_group(3), trials=1)

    def test_trials_must_be_positive(self):
        with pytest.raises(DomainError):
            check_prediction_invariance(build_sn_eqnn(4), symmetric_group(4), trials=0)


class TestMixtureCircuit:
    def test_circuit_reproduces_mixture(self):
        assert check_mixture_circuit_equivalence(trials=10, rng=5)
        assert mixture_circuit_residuals(trials=10, rng=5).max() < 1e-10

    def test_code_subset_reproduces_partial_mixture(self):
        residuals = mixture_circuit_residuals(trials=5, rng=6, codes=(0, 3, 7))
        assert np.all(residuals < 1e-10)


class TestVerifyArchitecture:
    def test_negative_control_meets_expectation(self):
        reports, ok = verify_architecture("baseline_qcnn", trials=3, rng=7, n=4, expect_fail=["symmetric"])
        assert ok
        assert len(reports) == 1
        assert reports[0].expect_failure and not reports[0].passed

    def test_equivariant_model_as_negative_control_fails(self):
        _, ok = verify_architecture("sn_eqnn", trials=3, rng=8, expect_fail=["symmetric"])
        assert not ok

    def test_circuit_includes_mixture_check(self):
        reports, ok = verify_architecture("sn_eqcnn_circuit", trials=3, rng=9, mixture_trials=5)
        assert ok
        assert [r.check for r in reports] == ["unitary", "prediction", "mixture_circuit"]

    def test_report_serializes(self):
        reports, _ = verify_architecture("sn_eqnn", trials=2, rng=10)
        payload = json.loads(json.dumps([r.to_dict() for r in reports]))
        assert payload[0]["group"] == "Symmetric"
        assert payload[0]["meets_expectation"] is True


@pytest.mark.slow
class TestAcceptanceCounts:
    """Certificates at the full draw counts: 100 (θ, ψ) pairs, 50 mixture draws"""

    TRIALS = 100

    @pytest.mark.parametrize("builder", [build_sn_eqnn, build_sn_eqcnn_mixture])
    def test_sn_models(self, builder):
        arch = builder(4)
        group = symmetric_group(4)
        assert check_unitary_equivariance(arch, group, trials=self.TRIALS, rng=11).max_residual < 1e-9
        prediction = check_prediction_invariance(arch, group, trials=self.TRIALS, rng=12)
        assert prediction.passed and len(prediction.residuals) == 24

    def test_mixture_circuit_equivalence(self):
        assert check_mixture_circuit_equivalence(trials=50, tol=1e-10, rng=13)

    def test_reflection_eqcnn(self):
        arch = build_reflection_eqcnn()
        group = reflection_group(arch.embedding)
        assert check_unitary_equivariance(arch, group, trials=self.TRIALS, rng=14).passed
        assert check_prediction_invariance(arch, group, trials=self.TRIALS, rng=15).passed

    def test_refl_rot_breaks_rotation_only_at_last_pooling(self):
        arch = build_refl_rot_eqcnn()
        reflection = check_unitary_equivariance(arch, reflection_group(arch.embedding), trials=self.TRIALS, rng=16)
        rotation = check_unitary_equivariance(arch, rotation_group(arch.embedding), trials=self.TRIALS, rng=17)
        assert reflection.passed
        assert not rotation.passed
        assert set(rotation.broken_at.values()) == {"pool3"}
        assert rotation.meets_expectation
        assert rotation.group == GroupName.ROTATION

    def test_rotation_variant(self):
        arch = rot_eqcnn_variant()
        assert check_unitary_equivariance(arch, rotation_group(arch.embedding), trials=self.TRIALS, rng=18).passed

    def test_baseline_negative_control(self):
        reports, ok = verify_architecture("baseline_qcnn", trials=self.TRIALS, rng=19, expect_fail=["reflection"])
        assert ok
        assert not reports[0].passed

    def test_refl_rot_full_verification(self):
        _, ok = verify_architecture("reflrot_eqcnn", trials=self.TRIALS, rng=20)
        assert ok
