import numpy as np
import pytest

from xbardse import qnet
from xbardse.qnet import (
    Dataset,
    NetworkFormatError,
    QuantizedNetwork,
    WeightTensor,
    generate_synthetic_dataset,
    ideal_forward,
    load_dataset,
    load_network,
    out_extent,
    propagate_shapes,
    quantize_weights,
    save_dataset,
    save_network,
    sparsity,
    train_fixture,
)


class TestQuantize:
    def test_worked_example(self):
        wt = quantize_weights(np.array([-1.0, 0.0, 0.5]), 4)
        assert wt.codes.tolist() == [-7, 0, 4]
        assert wt.scale == pytest.approx(1 / 7)

    def test_all_zero(self):
        wt = quantize_weights(np.zeros((3, 3)), 8)
        assert wt.scale == 1.0
        assert not wt.codes.any()

    def test_max_element_hits_top_code(self):
        wt = quantize_weights(np.array([3.0]), 6)
        assert wt.codes.tolist() == [31]
        assert wt.scale == pytest.approx(3 / 31)

    def test_rejects_empty_and_nonfinite(self):
        with pytest.raises(ValueError):
            quantize_weights(np.array([]), 4)
        with pytest.raises(ValueError):
            quantize_weights(np.array([1.0, np.nan]), 4)
        with pytest.raises(ValueError):
            quantize_weights(np.array([1.0]), 5)

    def test_idempotence(self):
        rng = np.random.default_rng(0)
        for b in (4, 6, 8):
            for _ in range(20):
                v = rng.normal(size=rng.integers(1, 40))
                wt = quantize_weights(v, b)
                again = quantize_weights(wt.dequantized(), b)
                assert np.array_equal(wt.codes, again.codes)

    def test_error_bound_half_scale(self):
        rng = np.random.default_rng(1)
        for b in (4, 6, 8):
            for _ in range(20):
                v = rng.normal(size=30)
                wt = quantize_weights(v, b)
                err = np.abs(wt.dequantized() - v)
                assert np.all(err <= wt.scale / 2 * (1 + 1e-9))

    def test_codes_within_range(self):
        rng = np.random.default_rng(2)
        for b in (4, 6, 8):
            wt = quantize_weights(rng.normal(size=100), b)
            assert np.abs(wt.codes).max() <= 2 ** (b - 1) - 1


class TestSparsity:
    def test_direct_count(self):
        wt = WeightTensor(np.array([[0, 0, 3, -2]]), 1.0, 4)
        spec, = propagate_shapes([qnet.linear(1)], (4,))[0]
        net = QuantizedNetwork("t", 4, (4,), [qnet.Layer(spec, wt)])
        assert sparsity(net) == (2, 0.5)

    def test_all_zero_network(self):
        wt = WeightTensor(np.zeros((2, 5), dtype=np.int64), 1.0, 4)
        spec, = propagate_shapes([qnet.linear(2)], (5,))[0]
        net = QuantizedNetwork("t", 4, (5,), [qnet.Layer(spec, wt)])
        assert sparsity(net) == (10, 1.0)

    def test_matches_brute_force(self, fixture_net):
        zeros, frac = sparsity(fixture_net)
        brute = sum(int((layer.weights.codes == 0).sum()) for layer in fixture_net.layers)
        assert zeros == brute
        assert 0.0 <= frac <= 1.0

    def test_l1_increases_sparsity(self, train_data, fixture_arch):
        lo = train_fixture(0, fixture_arch, train_data, l1=0.0)
        hi = train_fixture(0, fixture_arch, train_data, l1=0.05)
        assert sparsity(hi)[0] >= sparsity(lo)[0]
        assert sparsity(hi)[0] > 0


class TestIdealForward:
    def test_identity_linear(self):
        spec, = propagate_shapes([qnet.linear(2)], (2,))[0]
        wt = quantize_weights(np.eye(2), 8)
        net = QuantizedNetwork("id", 8, (2,), [qnet.Layer(spec, wt)])
        out = ideal_forward(net, np.array([[1.0, 2.0]]))
        assert np.allclose(out, [[1.0, 2.0]])

    def test_hand_convolution(self):
        spec, = propagate_shapes([qnet.conv1d(kernels=1, kernel_h=3)], (1, 5))[0]
        wt = WeightTensor(np.ones((1, 1, 3), dtype=np.int64), 1.0, 4)
        net = QuantizedNetwork("c", 4, (1, 5), [qnet.Layer(spec, wt)])
        out = ideal_forward(net, np.array([[[1.0, 2, 3, 4, 5]]]))
        assert np.allclose(out.ravel(), [6, 9, 12])

    def test_zero_input_zero_logits(self, fixture_net):
        out = ideal_forward(fixture_net, np.zeros((3, *fixture_net.input_shape)))
        assert np.allclose(out, 0.0)

    def test_shape_mismatch(self, fixture_net):
        with pytest.raises(ValueError):
            ideal_forward(fixture_net, np.zeros((1, 2, 2)))

    def test_output_extent_matches_sliding_window_count(self):
        # >= 200 randomized geometries against a brute-force position count
        rng = np.random.default_rng(3)
        checked = 0
        while checked < 200:
            x = int(rng.integers(1, 20))
            h = int(rng.integers(1, 6))
            s = int(rng.integers(1, 4))
            p = int(rng.integers(0, 3))
            d = int(rng.integers(1, 3))
            brute = sum(1 for o in range(x + 2 * p)
                        if o * s + d * (h - 1) < x + 2 * p)
            try:
                got = out_extent(x, h, s, p, d)
            except ValueError:
                assert brute == 0
                continue
            assert got == brute
            checked += 1


class TestFixtureTraining:
    def test_deterministic(self, train_data, fixture_arch):
        a = train_fixture(0, fixture_arch, train_data, l1=5e-4)
        b = train_fixture(0, fixture_arch, train_data, l1=5e-4)
        for la, lb in zip(a.layers, b.layers):
            assert np.array_equal(la.weights.codes, lb.weights.codes)
            assert la.weights.scale == lb.weights.scale

    def test_accuracy_gate(self, fixture_net, test_data):
        assert qnet.accuracy(fixture_net, test_data) >= 0.90

    def test_conv_gradients_match_finite_differences(self):
        rng = np.random.default_rng(4)
        data = generate_synthetic_dataset(5, 24, 3, (1, 7))
        arch = [qnet.conv1d(kernels=2, kernel_h=3), qnet.linear(3)]
        specs, _ = propagate_shapes(arch, data.feature_shape)
        weights = [rng.normal(size=s.weight_shape()) for s in specs]
        x, y = data.features, data.labels

        def loss_of(ws):
            logits, _ = qnet._forward_cache(specs, ws, x)
            loss, _ = qnet._softmax_grad(logits, y)
            return loss

        logits, cache = qnet._forward_cache(specs, weights, x)
        _, dlogits = qnet._softmax_grad(logits, y)
        grads = qnet._backward(specs, weights, cache, dlogits)
        eps = 1e-6
        for li in range(len(weights)):
            flat = weights[li].ravel()
            for idx in rng.choice(flat.size, size=5, replace=False):
                saved = flat[idx]
                flat[idx] = saved + eps
                up = loss_of(weights)
                flat[idx] = saved - eps
                down = loss_of(weights)
                flat[idx] = saved
                fd = (up - down) / (2 * eps)
                assert grads[li].ravel()[idx] == pytest.approx(fd, abs=1e-5)

    def test_rejects_noncomposing_arch(self, train_data):
        arch = [qnet.conv1d(kernels=2, kernel_h=3), qnet.linear(3)]  # 3 != 4 classes
        with pytest.raises(ValueError):
            train_fixture(0, arch, train_data, l1=0.0)


class TestSyntheticDataset:
    def test_deterministic(self):
        a = generate_synthetic_dataset(0, 50, 4, (8,))
        b = generate_synthetic_dataset(0, 50, 4, (8,))
        assert np.array_equal(a.features, b.features)
        assert np.array_equal(a.labels, b.labels)

    def test_balanced(self):
        data = generate_synthetic_dataset(0, 100, 4, (8,))
        assert np.bincount(data.labels).tolist() == [25, 25, 25, 25]

    def test_nearest_mean_beats_chance(self):
        data = generate_synthetic_dataset(2, 200, 4, (8,))
        means = qnet.class_means(4, (8,))
        flat = data.features.reshape(len(data), -1)
        dists = ((flat[:, None, :] - means[None, :, :]) ** 2).sum(axis=2)
        acc = np.mean(np.argmin(dists, axis=1) == data.labels)
        assert acc > 0.25

    def test_invalid_counts(self):
        with pytest.raises(ValueError):
            generate_synthetic_dataset(0, 1, 2, (4,))
        with pytest.raises(ValueError):
            generate_synthetic_dataset(0, 10, 1, (4,))


class TestFileFormats:
    def test_network_round_trip(self, fixture_net, tmp_path):
        path = tmp_path / "net.json"
        save_network(fixture_net, path)
        loaded = load_network(path)
        assert loaded.name == fixture_net.name
        assert loaded.bit_width == fixture_net.bit_width
        assert loaded.input_shape == fixture_net.input_shape
        for la, lb in zip(loaded.layers, fixture_net.layers):
            assert np.array_equal(la.weights.codes, lb.weights.codes)
            assert la.weights.scale == lb.weights.scale
            assert la.spec == lb.spec

    def test_out_of_range_code_names_layer(self, fixture_net, tmp_path):
        import json
        path = tmp_path / "net.json"
        save_network(fixture_net, path)
        doc = json.loads(path.read_text())
        doc["layers"][1]["codes"][0] = 1000  # beyond 8-bit symmetric range
        path.write_text(json.dumps(doc))
        with pytest.raises(NetworkFormatError, match=r"layers\[1\]"):
            load_network(path)

    def test_missing_scale_is_parse_error(self, fixture_net, tmp_path):
        import json
        path = tmp_path / "net.json"
        save_network(fixture_net, path)
        doc = json.loads(path.read_text())
        del doc["layers"][0]["scale"]
        path.write_text(json.dumps(doc))
        with pytest.raises(NetworkFormatError, match="scale"):
            load_network(path)

    def test_dataset_round_trip(self, test_data, tmp_path):
        path = tmp_path / "data.csv"
        save_dataset(test_data, path)
        loaded = load_dataset(path)
        assert np.array_equal(loaded.features, test_data.features)
        assert np.array_equal(loaded.labels, test_data.labels)
        assert loaded.class_count == test_data.class_count

    def test_dataset_bad_header(self, tmp_path):
        path = tmp_path / "data.csv"
        path.write_text("label,f0\n0,1.0\n")
        with pytest.raises(NetworkFormatError):
            load_dataset(path)
