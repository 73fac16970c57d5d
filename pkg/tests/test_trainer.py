import numpy as np
import pytest

from app.architectures import build_baseline_qcnn, build_sn_eqcnn_mixture, build_sn_eqnn, predict
from app.data_processor import Dataset, ImageSample, enumerate_graphs
from app.exceptions import DomainError
from app.simcore import random_state
from app.trainer import (
    AdamMoments, TrainConfig, TrainReport, accuracy, adam_step, adjoint_grad, bce_loss, mean_loss,
    nesterov_step, parameter_shift_grad, readout_loss, train,
)

ACCEPTANCE_POINTS = 10


def _config(**overrides):
    values = dict(
        architecture="sn_eqnn", n_qubits=4, optimizer="adam", lr=0.05, loss="mse",
        batch_size=4, iterations=4, runs=2, seed=7,
    )
    values.update(overrides)
    return TrainConfig(**values)


class TestLosses:
    def test_bce_is_clamped(self):
        assert bce_loss(0.0, 1) == pytest.approx(-np.log(1e-7))
        assert bce_loss(1.0, 1) == pytest.approx(-np.log(1 - 1e-7))
        assert np.isfinite(bce_loss(1.0, 0))

    def test_mse_uses_signed_targets(self):
        assert readout_loss("mse", 1.0, 1)[0] == 0.0
        assert readout_loss("mse", 1.0, 0)[0] == pytest.approx(4.0)

    @pytest.mark.parametrize("loss", ["bce", "mse"])
    @pytest.mark.parametrize("label", [0, 1])
    def test_readout_gradient_matches_finite_differences(self, loss, label):
        h = 1e-6
        for m in (-0.7, -0.1, 0.3, 0.8):
            _, grad = readout_loss(loss, m, label)
            numeric = (readout_loss(loss, m + h, label)[0] - readout_loss(loss, m - h, label)[0]) / (2 * h)
            assert grad == pytest.approx(numeric, rel=1e-5)

    def test_unknown_loss(self):
        with pytest.raises(DomainError):
            readout_loss("hinge", 0.0, 1)

    def test_loss_gradients_agree(self, rng):
        arch = build_sn_eqnn(4)
        params = arch.random_params(rng).values
        state = random_state(4, rng)
        for loss in ("bce", "mse"):
            assert np.allclose(
                adjoint_grad(arch, params, state, 1, loss), parameter_shift_grad(arch, params, state, 1, loss),
                atol=1e-10,
            )


class TestOptimizers:
    def test_nesterov_by_hand(self):
        params, velocity = nesterov_step(np.array([1.0]), np.array([1.0]), np.zeros(1), lr=0.1, momentum=0.9)
        assert params[0] == pytest.approx(0.81)
        assert velocity[0] == pytest.approx(1.0)

    def test_adam_first_step_is_sign_scaled(self):
        params, moments = adam_step(np.zeros(2), np.array([2.0, -3.0]), AdamMoments.zeros(2), lr=0.01)
        assert np.allclose(params, [-0.01, 0.01], atol=1e-8)
        assert moments.step == 1


class TestTrainConfig:
    @pytest.mark.parametrize("overrides", [
        {"optimizer": "sgd"}, {"loss": "hinge"}, {"gradient": "backprop"}, {"lr": -0.1},
        {"batch_size": 0}, {"runs": 0}, {"eval_every": 0},
    ])
    def test_rejects_invalid_values(self, overrides):
        with pytest.raises(DomainError):
            _config(**overrides)

    def test_hash_tracks_content(self):
        assert _config().config_hash() == _config().config_hash()
        assert _config().config_hash() != _config(seed=8).config_hash()

    def test_from_dict_ignores_unknown_keys(self):
        config = TrainConfig.from_dict({"architecture": "sn_eqnn", "lr": 0.2, "comment": "x"})
        assert config.lr == 0.2 and config.optimizer == "nesterov"


class TestTraining:
    def test_report_shapes(self, tiny_graph_dataset):
        report = train(_config(), tiny_graph_dataset)
        assert report.seeds == [7, 8]
        assert report.iterations == [1, 2, 3, 4]
        assert len(report.train_loss) == len(report.test_acc) == 4
        assert len(report.runs) == 2
        assert all(0.0 <= acc <= 1.0 for acc in report.test_acc)
        assert report.to_frame().shape == (4, 5)
        assert len(report.runs_frame()) == 8
        assert report.experiment == "tiny"

    def test_report_round_trip(self, tiny_graph_dataset):
        report = train(_config(runs=1, iterations=2), tiny_graph_dataset)
        restored = TrainReport.from_dict(report.to_dict())
        assert restored.to_dict() == report.to_dict()

    def test_zero_learning_rate_freezes_parameters(self, tiny_graph_dataset):
        config = _config(optimizer="nesterov", lr=0.0, batch_size=100, runs=1)
        report = train(config, tiny_graph_dataset)
        initial = build_sn_eqnn(4).random_params(np.random.default_rng(7)).values
        assert np.array_equal(report.runs[0].final_params, initial)
        assert len(set(report.train_loss)) == 1
        assert report.train_loss[0] == pytest.approx(
            mean_loss(build_sn_eqnn(4), initial, tiny_graph_dataset.train, "mse")
        )

    def test_training_is_deterministic(self, tiny_graph_dataset):
        first = train(_config(), tiny_graph_dataset)
        second = train(_config(), tiny_graph_dataset)
        assert first.to_dict() == second.to_dict()

    def test_worker_threads_do_not_change_results(self, tiny_graph_dataset):
        serial = train(_config(), tiny_graph_dataset)
        threaded = train(_config(workers=2), tiny_graph_dataset)
        assert serial.test_acc == threaded.test_acc
        assert [r.final_params for r in serial.runs] == [r.final_params for r in threaded.runs]

    def test_sparse_evaluation_is_forward_filled(self, tiny_graph_dataset):
        report = train(_config(runs=1, iterations=5, eval_every=3), tiny_graph_dataset)
        curve = report.runs[0].test_acc
        assert curve[1] == curve[0]
        assert curve[3] == curve[2]

    def test_image_samples_need_an_embedding(self):
        dataset = Dataset("img", "image", train=[ImageSample(np.zeros(4), 0)], test=[])
        with pytest.raises(DomainError):
            train(_config(runs=1), dataset)

    def test_empty_training_set(self):
        with pytest.raises(DomainError):
            train(_config(), Dataset("empty", "graph", train=[], test=[]))

    def test_accuracy_of_empty_set(self, rng):
        arch = build_sn_eqnn(4)
        assert accuracy(arch, arch.random_params(rng).values, []) == 0.0

    def test_single_sample_is_fitted(self):
        # label 0: the mean Z readout has to be driven below zero
        sample = enumerate_graphs(4)[0]
        dataset = Dataset("single", "graph", train=[sample], test=[sample])
        report = train(_config(runs=1, batch_size=1, iterations=100, lr=0.1), dataset)
        assert report.train_acc[-1] == 1.0
        assert report.test_acc[-1] == 1.0
        assert report.train_loss[-1] < report.train_loss[0]


@pytest.mark.slow
@pytest.mark.parametrize("builder", [build_sn_eqcnn_mixture, build_sn_eqnn, build_baseline_qcnn])
@pytest.mark.parametrize("loss", ["bce", "mse"])
def test_loss_gradient_matches_finite_differences(builder, loss, rng):
    arch = builder(4)
    h = 1e-4
    for _ in range(ACCEPTANCE_POINTS):
        values = arch.random_params(rng).values
        state = random_state(4, rng)
        label = int(rng.integers(0, 2))
        numeric = np.zeros(values.size)
        for k in range(values.size):
            plus, minus = values.copy(), values.copy()
            plus[k] += h
            minus[k] -= h
            numeric[k] = (
                readout_loss(loss, predict(arch, plus, state), label)[0]
                - readout_loss(loss, predict(arch, minus, state), label)[0]
            ) / (2 * h)
        assert np.allclose(parameter_shift_grad(arch, values, state, label, loss), numeric, atol=1e-5)
