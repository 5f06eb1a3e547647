"""Adam updates against a transcription-independent reference."""

import numpy as np

from wordbench.optim import Adam


def reference_adam(p0, grads, lr=1e-3, b1=0.9, b2=0.999, eps=1e-8):
    """Textbook Adam with explicit bias-corrected moments."""
    p = p0.copy()
    m = np.zeros_like(p)
    v = np.zeros_like(p)
    for t, g in enumerate(grads, start=1):
        m = b1 * m + (1 - b1) * g
        v = b2 * v + (1 - b2) * g * g
        mhat = m / (1 - b1**t)
        vhat = v / (1 - b2**t)
        p = p - lr * mhat / (np.sqrt(vhat) + eps)
    return p


def test_adam_matches_reference_over_many_steps():
    rng = np.random.default_rng(7)
    p0 = rng.normal(size=(4, 3))
    grads = [rng.normal(size=(4, 3)) for _ in range(25)]

    params = {"w": p0.copy()}
    adam = Adam()
    for g in grads:
        adam.step(params, {"w": g})

    expected = reference_adam(p0, grads)
    np.testing.assert_allclose(params["w"], expected, rtol=1e-12, atol=1e-15)


def test_adam_first_step_size_is_bounded_by_learning_rate():
    # With bias correction the very first update is lr * g/(|g| + eps').
    params = {"w": np.zeros(3)}
    Adam(learning_rate=0.01).step(params, {"w": np.array([1e3, -1e-4, 5.0])})
    assert np.all(np.abs(params["w"]) <= 0.01 + 1e-9)
    assert params["w"][0] < 0 and params["w"][1] > 0


def test_adam_state_is_per_parameter():
    adam = Adam(learning_rate=0.1)
    params = {"a": np.zeros(2), "b": np.zeros(2)}
    adam.step(params, {"a": np.ones(2), "b": -np.ones(2)})
    np.testing.assert_allclose(params["a"], -params["b"])
