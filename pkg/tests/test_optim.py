import numpy as np
import pytest

from xmodal import tensor as tn
from xmodal.optim import Adam, AdamConfig, adam_step


def reference_adam(p, grads, lr=1e-3, b1=0.9, b2=0.999, eps=1e-8):
    m = v = 0.0
    for t, g in enumerate(grads, start=1):
        m = b1 * m + (1 - b1) * g
        v = b2 * v + (1 - b2) * g * g
        p = p - lr * (m / (1 - b1**t)) / (np.sqrt(v / (1 - b2**t)) + eps)
    return p


def test_adam_matches_scalar_reference():
    grads = [0.5, -1.0, 2.0, 0.0, 0.3]
    p = np.array([1.0])
    state = {}
    for t, g in enumerate(grads, start=1):
        adam_step([p], [np.array([g])], state, AdamConfig(lr=0.01), t)
    assert p[0] == pytest.approx(reference_adam(1.0, grads, lr=0.01), abs=1e-15)


def test_first_step_moves_by_lr():
    # after bias correction the first step is lr * sign(g)
    p = np.array([0.0, 0.0])
    adam_step([p], [np.array([3.0, -0.01])], {}, AdamConfig(lr=0.1), 1)
    np.testing.assert_allclose(p, [-0.1, 0.1], rtol=1e-6)


def test_step_index_starts_at_one():
    with pytest.raises(ValueError):
        adam_step([np.zeros(1)], [np.zeros(1)], {}, AdamConfig(), 0)


def test_adam_minimises_a_quadratic():
    x = tn.Tensor(np.array([3.0, -2.0]), requires_grad=True)
    opt = Adam([x], AdamConfig(lr=0.1))
    for _ in range(500):
        opt.zero_grad()
        tn.backward(tn.sum(tn.mul(x, x)))
        opt.step()
    assert np.abs(x.data).max() < 1e-2
