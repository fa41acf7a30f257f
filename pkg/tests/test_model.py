"""GCN layers, attention pooling, readout, gradient reversal, full forward."""

from fractions import Fraction

import numpy as np
import pytest

from dagam import Tape, Tensor, backward
from dagam import ops
from dagam.errors import ConfigError, DegenerateInputError, DimensionError
from dagam.graph import renormalized_laplacian
from dagam.model import (
    ModelParams,
    attention_scores,
    forward,
    forward_batch,
    gcn_layer,
    grad_reverse,
    init_params,
    readout,
    retained_count,
    sag_pool,
    top_rank,
)

from _helpers import tiny_model_grad_error, tiny_setup


class TestGcnLayer:
    def test_identity_propagation(self):
        x = Tensor(np.arange(6.0).reshape(3, 2))
        out = gcn_layer(Tensor(np.eye(3)), x, Tensor(np.eye(2)), activation=None)
        np.testing.assert_array_equal(out.data, x.data)

    def test_neighborhood_averaging(self):
        lap = Tensor(np.full((2, 2), 0.5))
        x = Tensor([[2.0], [4.0]])
        out = gcn_layer(lap, x, Tensor([[1.0]]), activation=None)
        np.testing.assert_allclose(out.data, [[3.0], [3.0]])

    def test_gradient_check_on_weights_and_features(self):
        from dagam.gradcheck import grad_check

        rng = np.random.default_rng(11)
        lap = Tensor(renormalized_laplacian(np.abs(rng.standard_normal((4, 4))) * (1 - np.eye(4))))
        x = Tensor(rng.standard_normal((4, 3)), requires_grad=True)
        w = Tensor(rng.standard_normal((3, 2)), requires_grad=True)

        def f(x_, w_):
            return ops.reduce_sum(ops.tanh(gcn_layer(lap, x_, w_, activation=ops.tanh)))

        assert grad_check(f, [x, w]) < 1e-4


class TestAttentionScores:
    def test_zero_weights_give_zero_scores(self):
        lap = Tensor(np.eye(3))
        x = Tensor(np.random.default_rng(0).standard_normal((3, 4)))
        out = attention_scores(lap, x, Tensor(np.zeros((4, 1))))
        np.testing.assert_array_equal(out.data, np.zeros((3, 1)))

    def test_scalar_case(self):
        out = attention_scores(Tensor([[1.0]]), Tensor([[0.7]]), Tensor([[2.0]]))
        assert out.data[0, 0] == pytest.approx(np.tanh(1.4))

    def test_scores_bounded(self):
        rng = np.random.default_rng(1)
        out = attention_scores(
            Tensor(rng.standard_normal((5, 5))),
            Tensor(10.0 * rng.standard_normal((5, 3))),
            Tensor(rng.standard_normal((3, 1))),
        )
        assert (np.abs(out.data) < 1.0).all()

    def test_multi_column_weight_rejected(self):
        with pytest.raises(DimensionError):
            attention_scores(Tensor(np.eye(2)), Tensor(np.ones((2, 3))), Tensor(np.ones((3, 2))))


class TestTopRank:
    def test_basic_selection(self):
        idx = top_rank(np.array([0.9, 0.1, 0.5, 0.7]), 0.5)
        np.testing.assert_array_equal(idx, [0, 3])

    def test_tie_breaks_toward_lower_index(self):
        idx = top_rank(np.array([0.5, 0.5, 0.1]), 1.0 / 3.0)
        np.testing.assert_array_equal(idx, [0])

    def test_k_one_keeps_everything(self):
        idx = top_rank(np.array([3.0, 1.0, 2.0]), 1.0)
        np.testing.assert_array_equal(idx, [0, 1, 2])

    def test_column_vector_scores_accepted(self):
        idx = top_rank(np.array([[0.9], [0.1], [0.5], [0.7]]), 0.5)
        np.testing.assert_array_equal(idx, [0, 3])

    def test_batched_scores(self):
        scores = np.array([[0.9, 0.1, 0.5, 0.7], [0.1, 0.9, 0.7, 0.5]])
        idx = top_rank(scores, 0.5)
        np.testing.assert_array_equal(idx, [[0, 3], [1, 2]])

    def test_retained_count_matches_exact_ceiling_for_grid(self):
        # Oracle: exact rational arithmetic on the decimal grid.
        for tenth in range(1, 11):
            k = tenth / 10.0
            for n in range(1, 63):
                expected = -((-Fraction(tenth, 10) * n) // 1)  # ceil
                assert retained_count(k, n) == int(expected), (k, n)

    def test_bad_ratio_rejected(self):
        with pytest.raises(ConfigError):
            retained_count(0.0, 10)
        with pytest.raises(ConfigError):
            retained_count(1.1, 10)


class TestSagPool:
    def test_identity_when_everything_kept_with_unit_scores(self):
        x = Tensor(np.arange(8.0).reshape(4, 2))
        a = np.eye(4)
        scores = Tensor(np.ones((4, 1)))
        pool = sag_pool(x, a, scores, 1.0)
        np.testing.assert_array_equal(pool.x_out.data, x.data)
        np.testing.assert_array_equal(pool.a_out, a)
        np.testing.assert_array_equal(pool.index, [0, 1, 2, 3])

    def test_selection_scaling_and_submatrix(self):
        rng = np.random.default_rng(0)
        x = Tensor(rng.standard_normal((4, 3)))
        a = rng.uniform(0, 1, (4, 4))
        a = (a + a.T) / 2
        scores = Tensor(np.array([[0.9], [0.1], [0.5], [0.7]]))
        pool = sag_pool(x, a, scores, 0.5)
        np.testing.assert_array_equal(pool.index, [0, 3])
        np.testing.assert_allclose(pool.x_out.data[0], 0.9 * x.data[0])
        np.testing.assert_allclose(pool.x_out.data[1], 0.7 * x.data[3])
        np.testing.assert_array_equal(pool.a_out, a[np.ix_([0, 3], [0, 3])])

    def test_gradient_reaches_attention_weights(self):
        params, x, adjacency, laplacian = tiny_setup(3)
        with Tape() as tape:
            h = x
            for w in params.gcn_weights:
                h = gcn_layer(laplacian, h, w)
            scores = attention_scores(laplacian, h, params.w_att)
            pool = sag_pool(h, adjacency, scores, 0.5)
            loss = ops.reduce_sum(pool.x_out)
        backward(loss, tape)
        assert params.w_att.grad is not None
        assert np.abs(params.w_att.grad).max() > 0

    @pytest.mark.parametrize("k", [i / 10 for i in range(1, 11)])
    def test_node_count_exactly_ceil_k_n(self, k):
        rng = np.random.default_rng(17)
        for n in range(1, 63):
            x = Tensor(rng.standard_normal((n, 2)))
            scores = Tensor(rng.standard_normal((n, 1)))
            pool = sag_pool(x, np.eye(n), scores, k)
            assert pool.x_out.shape[0] == retained_count(k, n)


class TestReadout:
    def test_hand_computed(self):
        out = readout(Tensor([[1.0, 2.0], [3.0, 4.0]]))
        np.testing.assert_array_equal(out.data, [2.0, 3.0, 3.0, 4.0])

    def test_single_node(self):
        out = readout(Tensor([[5.0]]))
        np.testing.assert_array_equal(out.data, [5.0, 5.0])

    def test_row_permutation_invariance(self):
        rng = np.random.default_rng(4)
        x = rng.standard_normal((6, 3))
        perm = rng.permutation(6)
        # identical up to summation order in the mean
        np.testing.assert_allclose(
            readout(Tensor(x)).data, readout(Tensor(x[perm])).data, atol=1e-12
        )

    def test_zero_nodes_rejected(self):
        with pytest.raises(DegenerateInputError):
            readout(Tensor(np.zeros((0, 3))))


class TestGradReverse:
    def test_forward_bit_identical(self):
        x = Tensor(np.random.default_rng(0).standard_normal((3, 3)))
        out = grad_reverse(x, 1.0)
        assert np.array_equal(out.data, x.data)

    def test_backward_negates(self):
        x = Tensor([[1.0, 2.0]], requires_grad=True)
        with Tape() as tape:
            loss = ops.reduce_sum(ops.mul(grad_reverse(x, 1.0), Tensor([[3.0, 4.0]])))
        backward(loss, tape)
        np.testing.assert_array_equal(x.grad, [[-3.0, -4.0]])

    def test_lambda_zero_blocks_gradient(self):
        x = Tensor([[1.0, 2.0]], requires_grad=True)
        with Tape() as tape:
            loss = ops.reduce_sum(grad_reverse(x, 0.0))
        backward(loss, tape)
        np.testing.assert_array_equal(x.grad, [[0.0, 0.0]])

    def test_scaled_lambda(self):
        x = Tensor([2.0, 2.0], requires_grad=True)
        with Tape() as tape:
            row = ops.reshape(x, (1, 2))
            loss = ops.reduce_sum(grad_reverse(row, 2.5))
        backward(loss, tape)
        np.testing.assert_array_equal(x.grad, [-2.5, -2.5])

    def test_negative_lambda_rejected(self):
        with pytest.raises(ConfigError):
            grad_reverse(Tensor([1.0]), -0.1)


class TestForward:
    def test_probabilities_sum_to_one(self):
        params, x, adjacency, laplacian = tiny_setup(0)
        emotion, domain, _ = forward(params, x, laplacian, adjacency, 0.5)
        assert emotion.shape == (2,) and domain.shape == (2,)
        assert abs(emotion.data.sum() - 1.0) < 1e-9
        assert abs(domain.data.sum() - 1.0) < 1e-9

    def test_zeroed_final_emotion_layer_gives_uniform(self):
        params, x, adjacency, laplacian = tiny_setup(1)
        params.emotion[-2].data[:] = 0.0
        params.emotion[-1].data[:] = 0.0
        emotion, _, _ = forward(params, x, laplacian, adjacency, 0.5)
        np.testing.assert_allclose(emotion.data, [0.5, 0.5])

    def test_default_ratio_keeps_31_of_62(self):
        rng = np.random.default_rng(5)
        params = init_params(5, 3, rng, gcn_hidden=(8, 8, 8), emotion_hidden=(8, 4),
                             domain_hidden=(4,))
        x = Tensor(rng.standard_normal((62, 5)))
        raw = rng.uniform(0.1, 1.0, (62, 62))
        adjacency = np.triu(raw, 1)
        adjacency = adjacency + adjacency.T
        laplacian = Tensor(renormalized_laplacian(adjacency))
        _, _, pool = forward(params, x, laplacian, adjacency, 0.5)
        assert len(pool.index) == 31

    def test_deterministic_for_fixed_params(self):
        params, x, adjacency, laplacian = tiny_setup(2)
        first = forward(params, x, laplacian, adjacency, 0.5)[0].data
        second = forward(params, x, laplacian, adjacency, 0.5)[0].data
        np.testing.assert_array_equal(first, second)

    def test_batched_matches_per_sample(self):
        params, _, adjacency, laplacian = tiny_setup(6)
        rng = np.random.default_rng(7)
        batch = rng.standard_normal((5, 4, 3))
        emotion_b, domain_b, _ = forward_batch(params, Tensor(batch), laplacian, adjacency, 0.5)
        for i in range(5):
            emotion_i, domain_i, _ = forward(params, Tensor(batch[i]), laplacian, adjacency, 0.5)
            np.testing.assert_allclose(emotion_b.data[i], emotion_i.data, atol=1e-12)
            np.testing.assert_allclose(domain_b.data[i], domain_i.data, atol=1e-12)

    def test_permutation_consistency_of_probabilities(self):
        params, x, adjacency, laplacian = tiny_setup(8)
        emotion, _, _ = forward(params, x, laplacian, adjacency, 0.5)
        perm = np.random.default_rng(9).permutation(4)
        p = np.eye(4)[perm]
        x_p = Tensor(x.data[perm])
        lap_p = Tensor(p @ laplacian.data @ p.T)
        adj_p = p @ adjacency @ p.T
        emotion_p, _, _ = forward(params, x_p, lap_p, adj_p, 0.5)
        np.testing.assert_allclose(emotion_p.data, emotion.data, atol=1e-12)

    def test_domain_head_optional(self):
        params, x, adjacency, laplacian = tiny_setup(10)
        emotion, domain, _ = forward_batch(
            params, Tensor(x.data[None]), laplacian, adjacency, 0.5, domain_head=False
        )
        assert domain is None
        assert emotion.shape == (1, 2)


class TestEndToEndGradient:
    @pytest.mark.parametrize("seed", range(5))
    def test_tiny_model_matches_branchwise_finite_differences(self, seed):
        assert tiny_model_grad_error(seed) < 1e-4

    def test_reversal_scales_with_lambda(self):
        assert tiny_model_grad_error(100, lam=0.5) < 1e-4


def test_named_parameters_are_exhaustive_and_disjoint():
    params, _, _, _ = tiny_setup(0)
    named = params.named()
    listed = params.all_params()
    assert len(named) == len(listed)
    assert {id(t) for t in named.values()} == {id(t) for t in listed}
    groups = [params.feature_params(), params.emotion_params(), params.domain_params()]
    seen = set()
    for group in groups:
        for t in group:
            assert id(t) not in seen
            seen.add(id(t))
