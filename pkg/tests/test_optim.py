import numpy as np
import pytest

from colorpack.neuralnet import AdamState, adam_step


def test_zero_gradient_leaves_params():
    p = [np.array([1.0, -2.0]), np.ones((2, 3))]
    before = [a.copy() for a in p]
    state = AdamState()
    adam_step(p, [np.zeros(2), np.zeros((2, 3))], state)
    assert all(np.array_equal(a, b) for a, b in zip(p, before))
    assert state.step == 1


@pytest.mark.parametrize("g", [1e-3, 0.5, -7.0, 300.0])
def test_first_step_is_lr_times_sign(g):
    p = [np.array([0.0])]
    adam_step(p, [np.array([g])], AdamState())
    # m_hat = g, v_hat = g^2 at t = 1
    expected = -1e-3 * g / (abs(g) + 1e-8)
    assert p[0][0] == pytest.approx(expected, rel=1e-12)


def scalar_adam_oracle(w, steps, lr=1e-3, b1=0.9, b2=0.999, eps=1e-8):
    m = v = 0.0
    out = []
    for t in range(1, steps + 1):
        g = 2 * w
        m = b1 * m + (1 - b1) * g
        v = b2 * v + (1 - b2) * g * g
        w -= lr * (m / (1 - b1**t)) / ((v / (1 - b2**t)) ** 0.5 + eps)
        out.append(w)
    return out


def test_quadratic_descent():
    w = [np.array([1.0])]
    state = AdamState()
    trace = []
    for _ in range(100):
        adam_step(w, [2 * w[0]], state)
        trace.append(w[0][0])
    assert np.all(np.diff(np.abs(trace)) < 0)
    assert trace == pytest.approx(scalar_adam_oracle(1.0, 100), rel=1e-12)


def test_shape_mismatch():
    with pytest.raises(ValueError):
        adam_step([np.zeros(3)], [np.zeros(4)], AdamState())
    with pytest.raises(ValueError):
        adam_step([np.zeros(3)], [], AdamState())
