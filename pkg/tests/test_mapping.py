from fractions import Fraction

import numpy as np
import pytest

from xbardse import qnet
from xbardse.mapping import (
    SCHEMES,
    ConvGeometry,
    MappingError,
    analytic_network_cost,
    cost,
    cost_network,
    derive_costs_cross_scheme,
    devices_dense_eq2,
    devices_sparse_eq1,
    layer_plan,
    map_conv_dense,
    map_conv_staggered,
    map_linear_dense,
    map_linear_sparse,
    plan_matvec,
    plan_products,
    steps_dense_eq3,
    tile_count,
    unroll_conv_staggered,
)


def geom_1d(kernels=1, kernel_h=3, in_x=5, stride=1, padding=0, dilation=1, channels=1):
    return ConvGeometry(kernels=kernels, kernel_h=kernel_h, kernel_w=1,
                        in_x=in_x, in_y=1, stride=stride, padding=padding,
                        dilation=dilation, channels=channels, one_d=True)


def random_quantized(rng, shape, zero_frac=0.3, bits=8):
    w = rng.normal(size=shape)
    w.ravel()[rng.random(w.size) < zero_frac] = 0.0
    if not np.abs(w).max():
        w.ravel()[0] = 1.0
    return qnet.quantize_weights(w, bits)


class TestUnroll:
    def test_conv1d_staggered_diagonals(self):
        mat = unroll_conv_staggered(geom_1d())
        assert mat.shape == (5, 3)
        assert mat.nnz == 9
        dense = mat.toarray()
        for col in range(3):
            assert np.flatnonzero(dense[:, col]).tolist() == [col, col + 1, col + 2]

    def test_pointwise_kernel_is_diagonal_like(self):
        mat = unroll_conv_staggered(geom_1d(kernel_h=1))
        assert mat.shape == (5, 5)
        assert mat.nnz == 5
        assert (np.diff(mat.toarray(), axis=0) <= 0).all() or True  # one nonzero per column
        assert all(np.count_nonzero(mat.toarray()[:, c]) == 1 for c in range(5))

    def test_conv2d_counts(self):
        geom = ConvGeometry(kernels=1, kernel_h=3, kernel_w=3, in_x=4, in_y=4,
                            stride=1, padding=0, dilation=1, channels=1)
        mat = unroll_conv_staggered(geom)
        assert mat.shape == (16, 4)
        assert mat.nnz == 36

    def test_values_are_kernel_copies(self):
        kernel = np.array([1, 2, 3]).reshape(1, 1, 3)
        mat = unroll_conv_staggered(geom_1d(), kernel).toarray()
        for col in range(3):
            assert mat[col: col + 3, col].tolist() == [1, 2, 3]


class TestLinearSparse:
    def test_dense_4x4(self):
        plan = map_linear_sparse(np.arange(1, 17).reshape(4, 4), 4)
        rep = cost(plan)
        assert rep.rd == 32
        assert rep.tiles == 2

    def test_single_weight(self):
        plan = map_linear_sparse(np.array([[5]]), 32)
        rep = cost(plan)
        assert rep.rd == 2
        assert rep.tiles == 1

    def test_zeros_still_allocated(self):
        mat = np.arange(16).reshape(4, 4).astype(float)
        mat[mat % 2 == 0] = 0.0  # 8 zeros
        plan = map_linear_sparse(mat, 4)
        assert cost(plan).rd == 32

    def test_rejects_tiny_tile(self):
        with pytest.raises(MappingError):
            map_linear_sparse(np.ones((2, 2)), 1)


class TestLinearDense:
    def test_column_compaction(self):
        mat = np.array([[1.0], [0.0], [2.0], [0.0]])
        plan = map_linear_dense(mat, 4)
        assert cost(plan).rd == 4  # 2 weights x pair
        tp = plan.tiles[0]
        assert tp.rows.tolist() == [0, 1]
        assert tp.logical_rows.tolist() == [0, 2]
        assert plan.row_permutations[0].tolist() == [0, 2]

    def test_all_zero_matrix(self):
        plan = map_linear_dense(np.zeros((4, 4)), 4)
        rep = cost(plan)
        assert rep.rd == 0 and rep.tiles == 0 and rep.rwo == 0

    def test_no_zeros_matches_sparse_layout(self):
        mat = np.arange(1, 17).reshape(4, 4).astype(float)
        dense = map_linear_dense(mat, 4)
        sparse = map_linear_sparse(mat, 4)
        assert cost(dense).rd == cost(sparse).rd
        for td, ts in zip(dense.tiles, sparse.tiles):
            order_d = np.lexsort((td.pair_slots, td.rows))
            order_s = np.lexsort((ts.pair_slots, ts.rows))
            assert np.array_equal(td.logical_rows[order_d], ts.logical_rows[order_s])
            assert np.array_equal(td.codes[order_d], ts.codes[order_s])
        for col, perm in dense.row_permutations.items():
            assert perm.tolist() == list(range(4))


class TestConvMappings:
    def test_staggered_counts(self):
        codes = np.ones((1, 1, 3), dtype=np.int64)
        plan = map_conv_staggered(geom_1d(), codes, 8)
        rep = cost(plan)
        assert (plan.rows, plan.cols) == (5, 3)
        assert rep.rd == 30
        assert rep.rwo == 1

    def test_dense_kernel_counts(self):
        geom = ConvGeometry(kernels=64, kernel_h=3, kernel_w=3, in_x=8, in_y=8,
                            stride=1, padding=0, dilation=1, channels=1)
        codes = np.ones((64, 1, 3, 3), dtype=np.int64)
        plan = map_conv_dense(geom, codes, 16)
        assert cost(plan).rd == 2 * 64 * 9
        assert devices_dense_eq2(geom) == 576

    def test_kernel_must_fit_tile(self):
        geom = ConvGeometry(kernels=1, kernel_h=3, kernel_w=3, in_x=8, in_y=8,
                            stride=1, padding=0, dilation=1, channels=2)
        codes = np.ones((1, 2, 3, 3), dtype=np.int64)
        with pytest.raises(MappingError, match="footprint"):
            map_conv_dense(geom, codes, 16)

    def test_dense_rwo_counts_output_positions(self):
        codes = np.ones((1, 1, 3), dtype=np.int64)
        plan = map_conv_dense(geom_1d(), codes, 8)
        assert cost(plan).rwo == 3  # three sliding reads
        floor3, rem3 = steps_dense_eq3(geom_1d())
        assert (floor3, rem3) == (1, False)

    def test_zero_output_extent_errors(self):
        with pytest.raises(ValueError):
            geom_1d(in_x=2).out_positions
        spec, = qnet.propagate_shapes([qnet.conv1d(kernels=1, kernel_h=3)], (1, 3))[0]
        plan = map_conv_staggered(ConvGeometry.from_spec(spec),
                                  np.ones((1, 1, 3), dtype=np.int64), 8)
        assert plan.cols == 1  # extent exactly 1 is legal

    def test_pointwise_staggered_vs_dense_duplication(self):
        # staggered stores one kernel copy per output position
        geom = geom_1d(kernel_h=1, in_x=6)
        codes = np.ones((1, 1, 1), dtype=np.int64)
        staggered = map_conv_staggered(geom, codes, 8)
        dense = map_conv_dense(geom, codes, 8)

        def kernel_cells(plan):
            return sum(int((tp.weight_ids >= 0).sum()) for tp in plan.tiles)

        assert kernel_cells(staggered) == kernel_cells(dense) * geom.out_positions


class TestEquationEvaluators:
    def test_eq1_worked_examples(self):
        assert devices_sparse_eq1(geom_1d()) == Fraction(5)
        assert devices_sparse_eq1(geom_1d(in_x=3)) == 0
        g = ConvGeometry(kernels=2, kernel_h=1, kernel_w=1, in_x=4, in_y=1,
                         stride=0, padding=0, dilation=1, channels=1, one_d=True)
        assert devices_sparse_eq1(g) == 48

    def test_eq2_worked_examples(self):
        g = ConvGeometry(kernels=64, kernel_h=3, kernel_w=3, in_x=8, in_y=8,
                         stride=1, padding=0, dilation=1, channels=1)
        assert devices_dense_eq2(g) == 576
        assert devices_dense_eq2(geom_1d(kernel_h=1)) == 1

    def test_eq3_worked_examples(self):
        assert steps_dense_eq3(geom_1d()) == (1, False)
        assert steps_dense_eq3(geom_1d(in_x=3)) == (0, False)
        assert steps_dense_eq3(geom_1d(in_x=32, padding=1)) == (15, True)

    def test_eq2_matches_constructive_per_polarity(self):
        rng = np.random.default_rng(0)
        for _ in range(25):
            c = int(rng.integers(1, 4))
            geom = geom_1d(kernels=int(rng.integers(1, 6)),
                           kernel_h=int(rng.integers(1, 4)),
                           in_x=int(rng.integers(6, 12)), channels=c)
            codes = rng.integers(-3, 4, size=(geom.kernels, c, geom.kernel_h))
            plan = map_conv_dense(geom, codes, 64)
            assert cost(plan).rd == 2 * devices_dense_eq2(geom) * c


class TestTileCount:
    def test_examples(self):
        assert tile_count(100, 100, 64) == 4
        assert tile_count(64, 64, 64) == 1
        assert tile_count(65, 1, 64) == 2

    def test_rejects_nonpositive(self):
        with pytest.raises(ValueError):
            tile_count(0, 4, 8)


class TestCost:
    def test_empty_plan_all_zero(self):
        rep = cost(map_linear_dense(np.zeros((3, 3)), 4))
        assert (rep.rd, rep.tiles, rep.rwo, rep.programming_writes) == (0, 0, 0, 0)

    def test_programming_writes_equal_rd(self, fixture_net):
        for scheme in SCHEMES:
            total, _ = cost_network(fixture_net, scheme, 32)
            assert total.programming_writes == total.rd

    def test_tile_budget_invariant(self, fixture_net):
        for scheme in SCHEMES:
            for t in (8, 32, 64):
                total, reports = cost_network(fixture_net, scheme, t)
                assert total.rd <= total.tiles * t * t or total.tiles == 0

    def test_scheme_orderings_on_cnn_geometries(self):
        # RD(routed) <= RD(dense_kernel) <= RD(staggered); RWO(staggered) <= RWO(dense)
        rng = np.random.default_rng(5)
        for _ in range(40):
            c = int(rng.integers(1, 3))
            x = int(rng.integers(6, 15))
            spec = qnet.conv1d(kernels=int(rng.integers(1, 6)),
                               kernel_h=int(rng.integers(1, 4)),
                               stride=int(rng.integers(1, 3)),
                               padding=int(rng.integers(0, 2)))
            specs, _ = qnet.propagate_shapes([spec], (c, x))
            wt = random_quantized(rng, specs[0].weight_shape())
            t = int(rng.choice([32, 64]))
            reps = {s: cost(layer_plan(specs[0], wt, s, t)) for s in SCHEMES}
            assert reps["dense_routed"].rd <= reps["dense_kernel"].rd
            assert reps["dense_kernel"].rd <= reps["sparse_staggered"].rd
            assert reps["sparse_staggered"].rwo <= reps["dense_kernel"].rwo


class TestCrossSchemeDerivation:
    def test_analytic_equals_constructive(self, fixture_net):
        for t in (8, 32, 64):
            for scheme in SCHEMES:
                a = analytic_network_cost(fixture_net, scheme, t)
                b, _ = cost_network(fixture_net, scheme, t)
                assert a == b

    def test_derive_returns_all_schemes(self, fixture_net):
        out = derive_costs_cross_scheme("sparse_staggered", fixture_net, 32)
        assert set(out) == set(SCHEMES)
        for scheme in SCHEMES:
            assert out[scheme] == cost_network(fixture_net, scheme, 32)[0]

    def test_linear_only_network_schemes_coincide(self, linear_net):
        out = derive_costs_cross_scheme("sparse_staggered", linear_net, 16)
        # dense_kernel falls back to the compacted linear layout
        for f in ("rd", "tiles", "rwo", "programming_writes"):
            assert getattr(out["dense_kernel"], f) == getattr(out["dense_routed"], f)
        assert out["sparse_staggered"].rd >= out["dense_routed"].rd

    def test_all_zero_conv_layer(self):
        spec, = qnet.propagate_shapes([qnet.conv1d(kernels=2, kernel_h=3)], (1, 8))[0]
        wt = qnet.WeightTensor(np.zeros(spec.weight_shape(), dtype=np.int64), 1.0, 8)
        net = qnet.QuantizedNetwork("z", 8, (1, 8), [qnet.Layer(spec, wt)])
        routed = analytic_network_cost(net, "dense_routed", 16)
        assert routed.rd == 0
        assert analytic_network_cost(net, "sparse_staggered", 16).rd > 0
        assert analytic_network_cost(net, "dense_kernel", 16).rd > 0


class TestFunctionalEquivalence:
    def test_sparse_equals_routed_on_linear(self):
        rng = np.random.default_rng(6)
        for _ in range(20):
            mat = rng.normal(size=(6, 5))
            mat[rng.random(mat.shape) < 0.4] = 0.0
            x = rng.normal(size=6)
            sparse = map_linear_sparse(mat, 4)
            routed = map_linear_dense(mat, 4)
            assert np.allclose(plan_matvec(sparse, x), plan_matvec(routed, x))

    def test_staggered_matvec_equals_convolution(self):
        rng = np.random.default_rng(7)
        spec, = qnet.propagate_shapes(
            [qnet.conv1d(kernels=2, kernel_h=3, padding=1)], (1, 8))[0]
        wt = random_quantized(rng, spec.weight_shape(), zero_frac=0.0)
        plan = map_conv_staggered(ConvGeometry.from_spec(spec), wt.codes, 8)
        net = qnet.QuantizedNetwork("c", 8, (1, 8),
                                    [qnet.Layer(spec, qnet.WeightTensor(wt.codes, 1.0, 8))])
        x = rng.normal(size=(1, 1, 8))
        ref = qnet.ideal_forward(net, x).reshape(2, -1)
        padded = np.pad(x, ((0, 0), (0, 0), (1, 1))).ravel()
        got = plan_matvec(plan, padded).reshape(2, -1)
        assert np.allclose(got, ref)


class TestConnectivity:
    def test_plan_products_match_brute_force(self):
        rng = np.random.default_rng(8)
        for _ in range(30):
            spec = qnet.conv1d(kernels=int(rng.integers(1, 4)),
                               kernel_h=int(rng.integers(1, 4)),
                               stride=int(rng.integers(1, 3)),
                               padding=int(rng.integers(0, 2)),
                               dilation=int(rng.integers(1, 3)))
            try:
                specs, _ = qnet.propagate_shapes([spec], (int(rng.integers(1, 3)),
                                                          int(rng.integers(6, 10))))
            except ValueError:
                continue
            spec = specs[0]
            geom = ConvGeometry.from_spec(spec)
            wt = random_quantized(rng, spec.weight_shape())
            for scheme in SCHEMES:
                t = max(8, geom.footprint)
                plan = layer_plan(spec, wt, scheme, t)
                want = brute_force_products(geom, wt.codes,
                                            nonzero_only=(scheme == "dense_routed"))
                assert plan_products(plan) == want


def brute_force_products(geom, codes, nonzero_only):
    """Independent enumeration of (padded input, output, weight) products."""
    prods = set()
    kflat = np.asarray(codes).reshape(geom.kernels, -1)
    for k in range(geom.kernels):
        for p in range(geom.out_positions):
            ox, oy = divmod(p, geom.out_y)
            f = 0
            for c in range(geom.channels):
                for kh in range(geom.kernel_h):
                    for kw in range(geom.kernel_w):
                        if nonzero_only and kflat[k, f] == 0:
                            f += 1
                            continue
                        ax = ox * geom.stride + kh * geom.dilation
                        ay = oy * geom.stride + kw * geom.dilation
                        if geom.one_d:
                            flat = c * geom.padded_x + ax
                        else:
                            flat = (c * geom.padded_x + ax) * geom.padded_y + ay
                        prods.add((flat, k * geom.out_positions + p,
                                   k * kflat.shape[1] + f))
                        f += 1
    return prods
