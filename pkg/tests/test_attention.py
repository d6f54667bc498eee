import math
import types

import numpy as np

from fdcheck import fd_grad, max_rel_err
from ian.attention import AttentionParams, attend, attention_backward
from ian.numerics import Rng


def zero_grads(params):
    return types.SimpleNamespace(
        **{name: np.zeros_like(arr) for name, arr in params.named_arrays()}
    )


def test_param_shapes_and_bias_scalar():
    p = AttentionParams(Rng(0), hidden_dim=4, query_dim=6)
    assert p.W_a.shape == (4, 6)
    assert p.b_a.shape == ()
    assert float(p.b_a) == 0.0


def test_weights_sum_to_one():
    rng = Rng(2)
    p = AttentionParams(rng, 3, 3)
    for _ in range(20):
        h = rng.uniform(-1, 1, (6, 3))
        q = rng.uniform(-1, 1, 3)
        mask = rng.random(6) > 0.3
        if not mask.any():
            mask[0] = True
        _, weights, _ = attend(p, h, q, mask)
        assert abs(weights.sum() - 1.0) < 1e-10


def test_zero_scores_give_uniform_weights():
    p = AttentionParams(Rng(0), 3, 3)
    p.W_a[:] = 0.0
    h = np.ones((4, 3))
    _, weights, _ = attend(p, h, np.ones(3), np.ones(4, dtype=bool))
    assert np.allclose(weights, 0.25, atol=1e-12)


def test_masked_positions_get_exactly_zero_weight():
    rng = Rng(5)
    p = AttentionParams(rng, 3, 3)
    h = rng.uniform(-1, 1, (5, 3))
    q = rng.uniform(-1, 1, 3)
    mask = np.array([True, False, True, False, True])
    pooled, weights, _ = attend(p, h, q, mask)
    assert weights[1] == 0.0 and weights[3] == 0.0
    # pooled must equal pooling only the surviving rows
    keep = attend(p, h[mask], q, np.ones(3, dtype=bool))[0]
    assert np.allclose(pooled, keep, atol=1e-15)


def test_two_position_hand_case():
    p = AttentionParams(Rng(0), 1, 1)
    p.W_a[:] = 2.0
    p.b_a[...] = 0.5
    h = np.array([[1.0], [-0.5]])
    q = np.array([0.25])
    # scores: tanh(1*2*0.25 + 0.5) = tanh(1.0); tanh(-0.5*2*0.25 + 0.5) = tanh(0.25)
    s1, s2 = math.tanh(1.0), math.tanh(0.25)
    e1, e2 = math.exp(s1), math.exp(s2)
    w1 = e1 / (e1 + e2)
    pooled, weights, _ = attend(p, h, q, np.ones(2, dtype=bool))
    assert abs(weights[0] - w1) < 1e-12
    assert abs(pooled[0] - (w1 * 1.0 + (1 - w1) * -0.5)) < 1e-12


def test_backward_matches_finite_differences():
    rng = Rng(17)
    p = AttentionParams(rng, 4, 3)  # rectangular on purpose
    h = rng.uniform(-1, 1, (6, 4))
    q = rng.uniform(-1, 1, 3)
    mask = np.array([True, True, False, True, True, False])
    r = rng.uniform(-1, 1, 4)

    def objective():
        pooled, _, _ = attend(p, h, q, mask)
        return float(pooled @ r)

    _, _, trace = attend(p, h, q, mask)
    grads = zero_grads(p)
    d_hiddens, d_query = attention_backward(p, trace, r.copy(), grads)

    assert max_rel_err(grads.W_a, fd_grad(objective, p.W_a)) < 1e-5
    assert max_rel_err(grads.b_a, fd_grad(objective, p.b_a)) < 1e-5
    assert max_rel_err(d_hiddens, fd_grad(objective, h)) < 1e-5
    assert max_rel_err(d_query, fd_grad(objective, q)) < 1e-5


def test_masked_rows_receive_zero_gradient():
    rng = Rng(19)
    p = AttentionParams(rng, 3, 3)
    h = rng.uniform(-1, 1, (4, 3))
    q = rng.uniform(-1, 1, 3)
    mask = np.array([True, False, True, False])
    _, _, trace = attend(p, h, q, mask)
    d_hiddens, _ = attention_backward(p, trace, rng.uniform(-1, 1, 3), zero_grads(p))
    assert np.array_equal(d_hiddens[1], np.zeros(3))
    assert np.array_equal(d_hiddens[3], np.zeros(3))
