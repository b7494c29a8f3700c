import numpy as np
import pytest

from convkit import engine
from convkit.datastore import Dataset, SplitSpec, split
from convkit.experiment import (
    ExperimentError,
    FeatureSet,
    evaluate,
    extract_features,
    feature_grid,
    predict_linear,
    train_linear,
)
from convkit.experiment import test_model as run_model_test
from convkit.netdef import SolverConfig

from synth import TRAIN_NET, make_blob_dataset
from test_engine import net, solver


@pytest.fixture(scope="module")
def trained():
    dataset = make_blob_dataset(n=96, seed=7)
    spec = net(TRAIN_NET)
    model = engine.train(spec, solver(max_epochs=12), dataset)
    return model, dataset


class TestExtractFeatures:
    def test_input_blob_is_identity(self, trained):
        model, dataset = trained
        (feats,) = extract_features(model, dataset, ["data"])
        np.testing.assert_array_equal(
            feats.vectors, dataset.features().reshape(len(dataset), -1)
        )
        assert feats.blob_shape == (1, 8, 8)

    def test_two_layers_share_labels(self, trained):
        model, dataset = trained
        a, b = extract_features(model, dataset, ["conv1", "ip1"])
        np.testing.assert_array_equal(a.labels, b.labels)
        np.testing.assert_array_equal(a.labels, dataset.labels())

    def test_feature_dim_matches_blob_shape(self, trained):
        model, dataset = trained
        (feats,) = extract_features(model, dataset, ["pool1"])
        c, h, w = feats.blob_shape
        assert feats.feature_dim == c * h * w == 4 * 4 * 4

    def test_unknown_layer(self, trained):
        model, dataset = trained
        with pytest.raises(ExperimentError, match="unknown layer 'nope'"):
            extract_features(model, dataset, ["nope"])

    def test_deterministic(self, trained):
        model, dataset = trained
        (a,) = extract_features(model, dataset, ["ip1"])
        (b,) = extract_features(model, dataset, ["ip1"])
        assert a.vectors.tobytes() == b.vectors.tobytes()


class TestTrainLinear:
    def toy(self):
        vectors = np.array([[-1.0], [1.0]])
        labels = np.array([0, 1])
        return FeatureSet("toy", vectors, labels, (1, 1, 1))

    def test_separable_1d(self):
        model = train_linear(self.toy(), C=1.0, epochs=20, seed=0)
        preds = predict_linear(model, np.array([[-1.0], [1.0]]))
        assert preds.tolist() == [0, 1]

    def test_zero_epochs_predicts_class_zero(self):
        model = train_linear(self.toy(), C=1.0, epochs=0, seed=0)
        assert np.all(model.weights == 0) and np.all(model.bias == 0)
        preds = predict_linear(model, np.array([[5.0], [-3.0]]))
        assert preds.tolist() == [0, 0]

    def test_seed_determinism(self):
        rng = np.random.default_rng(2)
        vectors = rng.standard_normal((40, 5))
        labels = (vectors[:, 0] > 0).astype(int)
        feats = FeatureSet("x", vectors, labels, (5, 1, 1))
        a = train_linear(feats, C=2.0, epochs=7, seed=9)
        b = train_linear(feats, C=2.0, epochs=7, seed=9)
        assert a.weights.tobytes() == b.weights.tobytes()
        assert a.bias.tobytes() == b.bias.tobytes()

    def test_single_class_rejected(self):
        feats = FeatureSet("x", np.zeros((3, 2)), np.zeros(3, dtype=int), (2, 1, 1))
        with pytest.raises(ExperimentError, match="at least 2 classes"):
            train_linear(feats)

    def test_multiclass_separable(self):
        centers = np.array([[0.0, 4.0], [4.0, 0.0], [-4.0, -4.0]])
        rng = np.random.default_rng(1)
        vectors = np.concatenate([centers[k] + rng.normal(0, 0.2, (30, 2)) for k in range(3)])
        labels = np.repeat(np.arange(3), 30)
        feats = FeatureSet("x", vectors, labels, (2, 1, 1))
        model = train_linear(feats, C=1.0, epochs=30, seed=4)
        acc = float(np.mean(predict_linear(model, vectors) == labels))
        assert acc == 1.0


class TestEvaluate:
    def test_perfect_agreement(self):
        report = evaluate([0, 1, 1], [0, 1, 1], 2)
        assert report.global_accuracy == 1.0
        np.testing.assert_array_equal(report.confusion, [[1, 0], [0, 2]])

    def test_hand_counted_case(self):
        report = evaluate([0, 1, 1, 1], [0, 0, 1, 1], 2)
        assert report.global_accuracy == 0.75
        assert report.per_class_accuracy == [0.5, 1.0]
        np.testing.assert_array_equal(report.confusion, [[1, 1], [0, 2]])
        assert report.undefined_classes == []

    def test_empty_vectors(self):
        with pytest.raises(ExperimentError, match="no samples"):
            evaluate([], [], 2)

    def test_length_mismatch(self):
        with pytest.raises(ExperimentError, match="length mismatch"):
            evaluate([0], [0, 1], 2)

    def test_out_of_range(self):
        with pytest.raises(ExperimentError, match="outside"):
            evaluate([2], [0], 2)

    def test_absent_class_flagged(self):
        report = evaluate([0, 0], [0, 0], 2)
        assert report.per_class_accuracy[1] == 0.0
        assert report.undefined_classes == [1]

    def test_invariants_row_sums_and_trace(self):
        rng = np.random.default_rng(3)
        truth = rng.integers(0, 4, 100)
        preds = rng.integers(0, 4, 100)
        report = evaluate(preds, truth, 4)
        assert report.confusion.sum() == 100
        for k in range(4):
            assert report.confusion[k].sum() == int(np.sum(truth == k))
        assert report.global_accuracy == np.trace(report.confusion) / 100


class TestTestModel:
    def test_perfect_on_training_set(self, trained):
        model, dataset = trained
        report = run_model_test(model, dataset)
        assert report.global_accuracy >= 0.95
        assert report.confusion.sum() == len(dataset)

    def test_class_count_mismatch(self, trained):
        model, dataset = trained
        three = Dataset(dataset.samples, ["a", "b", "c"], "p", "c")
        with pytest.raises(ExperimentError, match="classes"):
            run_model_test(model, three)

    def test_constant_output_model_accuracy_is_class_frequency(self):
        spec = net(
            'input: "x" layer { name: "ip" type: "InnerProduct" bottom: "x" top: "ip"'
            ' inner_product_param { num_output: 2 } }'
            ' layer { name: "prob" type: "Softmax" bottom: "ip" top: "prob" }'
        )
        model = engine.TrainedModel(
            spec,
            {"ip": (np.zeros((2, 4)), np.array([0.0, 5.0]))},  # always predicts class 1
            engine.TrainingMeta(SolverConfig(), 0, 0, "completed", ["a", "b"], (4, 1, 1)),
        )
        samples = [(np.zeros((1, 4, 1, 1)), 1)] * 3 + [(np.zeros((1, 4, 1, 1)), 0)] * 1
        ds = Dataset(list(samples), ["a", "b"], "mem", "c")
        report = run_model_test(model, ds)
        assert report.global_accuracy == 0.75  # frequency of class "b"


class TestExperimentPipeline:
    def test_svm_on_penultimate_features(self, trained):
        model, dataset = trained
        train_ds, test_ds = split(dataset, SplitSpec(0.75, seed=5, stratified=True))
        (train_feats,) = extract_features(model, train_ds, ["ip1"])
        (test_feats,) = extract_features(model, test_ds, ["ip1"])
        svm = train_linear(train_feats, C=1.0, epochs=30, seed=0)
        preds = predict_linear(svm, test_feats.vectors)
        report = evaluate(preds, test_feats.labels, 2)
        assert report.global_accuracy >= 0.95


class TestFeatureGrid:
    def test_single_channel_is_normalized_map(self):
        rng = np.random.default_rng(0)
        tile = rng.standard_normal((1, 5, 5))
        grid = feature_grid(tile)
        assert grid.shape == (5, 5)
        assert grid.min() == 0.0 and grid.max() == 1.0

    def test_8_channels_make_3x3_grid_of_38px(self):
        rng = np.random.default_rng(1)
        grid = feature_grid(rng.standard_normal((8, 12, 12)))
        assert grid.shape == (38, 38)
        # the 9th (empty) cell stays zero
        assert np.all(grid[26:38, 26:38] == 0)

    def test_constant_channel_renders_half_gray(self):
        grid = feature_grid(np.full((1, 3, 3), 7.0))
        assert np.all(grid == 0.5)

    def test_separators_are_zero(self):
        grid = feature_grid(np.ones((4, 2, 2)) + np.arange(4).reshape(4, 1, 1))
        assert np.all(grid[2, :] == 0) and np.all(grid[:, 2] == 0)
