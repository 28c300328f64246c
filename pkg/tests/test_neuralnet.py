import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from mopadgan import neuralnet as nn
from mopadgan.errors import ShapeMismatch


def fd_param_grad(spec, params, x, g_out, h=1e-5):
    """Central differences of sum(g_out * forward(x)) w.r.t. each parameter."""
    out = np.zeros_like(params)
    for i in range(len(params)):
        p = params.copy()
        p[i] += h
        up = np.sum(g_out * nn.forward(spec, p, x)[0])
        p[i] -= 2 * h
        down = np.sum(g_out * nn.forward(spec, p, x)[0])
        out[i] = (up - down) / (2 * h)
    return out


def close(a, b, rel=1e-5, floor=1e-8):
    return np.all(np.abs(a - b) <= rel * np.maximum(np.abs(a), np.abs(b)) + floor)


def test_init_deterministic_and_seeded():
    spec = nn.NetworkSpec((2, 4, 1))
    a = nn.init_params(spec, 3)
    assert np.array_equal(a, nn.init_params(spec, 3))
    assert not np.array_equal(nn.init_params(spec, 0), nn.init_params(spec, 1))
    assert len(a) == 2 * 4 + 4 + 4 * 1 + 1 == 17


def test_init_biases_zero_and_bounded():
    spec = nn.NetworkSpec((3, 5, 2))
    p = nn.init_params(spec, 0)
    (w1, b1), (w2, b2) = nn.layers(spec, p)
    assert not b1.any() and not b2.any()
    assert np.abs(w1).max() <= np.sqrt(3 / 3) and np.abs(w2).max() <= np.sqrt(3 / 5)


def test_spec_validation():
    with pytest.raises(ValueError):
        nn.NetworkSpec((3,))
    with pytest.raises(ValueError):
        nn.NetworkSpec((3, 0, 1))
    with pytest.raises(ValueError):
        nn.NetworkSpec((3, 1), hidden_activation="gelu")


def test_zero_network_outputs_zero():
    spec = nn.NetworkSpec((3, 4, 2))
    out, _ = nn.forward(spec, np.zeros(spec.n_params), np.ones((5, 3)))
    assert np.array_equal(out, np.zeros((5, 2)))


def test_single_linear_layer():
    spec = nn.NetworkSpec((2, 1))
    out, _ = nn.forward(spec, np.array([1.0, 1.0, 0.0]), [3.0, 4.0])
    assert out[0, 0] == 7.0


def test_sigmoid_range():
    spec = nn.NetworkSpec((2, 8, 3), "relu", "sigmoid")
    p = nn.init_params(spec, 0) * 50
    out, _ = nn.forward(spec, p, np.random.default_rng(0).normal(size=(100, 2)) * 10)
    assert np.all(out > 0) and np.all(out < 1)


def test_shape_mismatch():
    spec = nn.NetworkSpec((2, 3, 1))
    p = nn.init_params(spec, 0)
    with pytest.raises(ShapeMismatch):
        nn.forward(spec, p, np.ones((4, 3)))
    _, cache = nn.forward(spec, p, np.ones((4, 2)))
    with pytest.raises(ShapeMismatch):
        nn.backward(spec, p, cache, np.ones((4, 2)))
    with pytest.raises(ShapeMismatch):
        nn.forward(spec, p[:-1], np.ones((4, 2)))


def test_backward_zero_grad():
    spec = nn.NetworkSpec((2, 5, 2))
    p = nn.init_params(spec, 1)
    out, cache = nn.forward(spec, p, np.ones((3, 2)))
    gp, gx = nn.backward(spec, p, cache, np.zeros_like(out))
    assert not gp.any() and not gx.any()


def test_backward_linear_hand_derivative():
    spec = nn.NetworkSpec((2, 1))
    p = np.array([0.3, -0.2, 0.5])
    x = np.array([[3.0, 4.0]])
    _, cache = nn.forward(spec, p, x)
    gp, gx = nn.backward(spec, p, cache, [[1.0]])
    assert np.array_equal(gp, [3.0, 4.0, 1.0])
    assert np.allclose(gx, [[0.3, -0.2]])


def test_backward_fd_2_8_1():
    rng = np.random.default_rng(0)
    spec = nn.NetworkSpec((2, 8, 1), "tanh", "identity")
    p = nn.init_params(spec, 5)
    x = rng.normal(size=(6, 2))
    out, cache = nn.forward(spec, p, x)
    g_out = rng.normal(size=out.shape)
    gp, _ = nn.backward(spec, p, cache, g_out)
    assert close(gp, fd_param_grad(spec, p, x, g_out))


def test_backward_does_not_mutate_params():
    spec = nn.NetworkSpec((2, 4, 2))
    p = nn.init_params(spec, 0)
    keep = p.copy()
    out, cache = nn.forward(spec, p, np.ones((2, 2)))
    nn.backward(spec, p, cache, np.ones_like(out))
    assert np.array_equal(p, keep)


@settings(max_examples=60, deadline=None)
@given(
    widths=st.lists(st.integers(1, 16), min_size=2, max_size=4),
    hidden=st.sampled_from(["tanh", "relu", "leaky_relu"]),
    output=st.sampled_from(["identity", "sigmoid", "tanh"]),
    seed=st.integers(0, 10_000),
)
def test_property_fd_agreement(widths, hidden, output, seed):
    rng = np.random.default_rng(seed)
    spec = nn.NetworkSpec(tuple(widths), hidden, output)
    p = nn.init_params(spec, seed) + 0.1 * rng.normal(size=spec.n_params)
    x = rng.normal(size=(3, widths[0]))
    out, cache = nn.forward(spec, p, x)
    if hidden in ("relu", "leaky_relu") and any(np.any(np.abs(z) < 1e-4) for z in cache.preacts[:-1]):
        return  # kink too close for central differences
    g_out = rng.normal(size=out.shape)
    gp, gx = nn.backward(spec, p, cache, g_out)
    assert close(gp, fd_param_grad(spec, p, x, g_out))
    fdx = np.zeros_like(x)
    for i in np.ndindex(x.shape):
        xp, xm = x.copy(), x.copy()
        xp[i] += 1e-5
        xm[i] -= 1e-5
        fdx[i] = (np.sum(g_out * nn.forward(spec, p, xp)[0]) - np.sum(g_out * nn.forward(spec, p, xm)[0])) / 2e-5
    assert close(gx, fdx)


@given(widths=st.lists(st.integers(1, 64), min_size=2, max_size=6))
def test_property_param_count(widths):
    spec = nn.NetworkSpec(tuple(widths))
    assert spec.n_params == sum(a * b + b for a, b in zip(widths[:-1], widths[1:]))
    assert len(nn.init_params(spec, 0)) == spec.n_params


def test_input_jacobian_matches_fd():
    rng = np.random.default_rng(4)
    spec = nn.NetworkSpec((2, 6, 3), "tanh", "sigmoid")
    p = nn.init_params(spec, 2)
    x = rng.normal(size=(4, 2))
    _, jac = nn.input_jacobian(spec, p, x)
    for d in range(2):
        xp, xm = x.copy(), x.copy()
        xp[:, d] += 1e-6
        xm[:, d] -= 1e-6
        fd = (nn.forward(spec, p, xp)[0] - nn.forward(spec, p, xm)[0]) / 2e-6
        assert close(jac[:, :, d], fd)


def test_adam_zero_gradient():
    p = np.array([1.0, -2.0])
    s = nn.AdamState.fresh(2, lr=0.1)
    p2, s2 = nn.adam_step(p, np.zeros(2), s)
    assert np.array_equal(p2, p)
    assert s2.step == 1 and s.step == 0


def test_adam_first_step_magnitude_is_lr():
    p = np.zeros(3)
    g = np.array([0.5, -3.0, 1e-2])
    s = nn.AdamState.fresh(3, lr=1e-3)
    p2, _ = nn.adam_step(p, g, s)
    assert np.allclose(np.abs(p2 - p), 1e-3, atol=1e-6)
    assert np.all(np.sign(p2) == -np.sign(g))


def test_adam_deterministic():
    p = np.array([0.2, 0.4])
    g = np.array([1.0, -1.0])
    s = nn.AdamState.fresh(2)
    a = nn.adam_step(p, g, s)
    b = nn.adam_step(p, g, s)
    assert np.array_equal(a[0], b[0]) and np.array_equal(a[1].m, b[1].m)


def test_adam_shape_check():
    with pytest.raises(ShapeMismatch):
        nn.adam_step(np.zeros(2), np.zeros(3), nn.AdamState.fresh(2))


def test_checkpoint_roundtrip(tmp_path):
    spec = nn.NetworkSpec((2, 3, 1), "leaky_relu", "sigmoid")
    p = nn.init_params(spec, 9)
    _, s = nn.adam_step(p, np.ones_like(p), nn.AdamState.fresh(spec.n_params))
    path = tmp_path / "c.json"
    nn.save_checkpoint(path, nn.Checkpoint(spec, p, s, {"k": 1}))
    assert nn.CHECKPOINT_MAGIC in path.read_text()
    ck = nn.load_checkpoint(path)
    assert ck.spec == spec
    assert np.array_equal(ck.params, p)
    assert np.array_equal(ck.optimizer.v, s.v) and ck.optimizer.step == 1
    assert ck.extra == {"k": 1}


def test_checkpoint_bad_magic(tmp_path):
    path = tmp_path / "c.json"
    path.write_text('{"magic": "nope"}')
    with pytest.raises(ValueError):
        nn.load_checkpoint(path)
