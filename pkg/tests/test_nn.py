import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from gradcheck import FD_RTOL, gradient_errors, random_net
from mgmarl.nn import (Adam, AugmentableNet, Policy, StageError, action_distribution, augment,
                       load_checkpoint, logprob_grad_logits, save_checkpoint, soft_update, softmax)

SPEC = {"main": [["obs", [{"type": "dense", "units": 8}]], ["goal", []]], "hidden": [16, 12], "out": 5}
SHAPES = {"obs": (4,), "goal": (2,)}
SIDE = {"inputs": [["others", [{"type": "dense", "units": 6}]]], "hidden": [10]}


@pytest.fixture
def net(rng):
    return AugmentableNet(SPEC, SHAPES, rng)


@pytest.mark.parametrize("conv", [False, True])
@pytest.mark.parametrize("augmented", [False, True])
def test_backprop_matches_finite_differences(conv, augmented):
    rng = np.random.default_rng(7 + 2 * conv + augmented)
    net, inputs, aug = random_net(rng, conv, augmented)
    errors = gradient_errors(net, inputs, aug, rng)
    assert max(errors.values()) <= FD_RTOL, errors


def test_parameter_count(net):
    # obs 4->8, trunk (8+2)->16->12, head 12->5
    assert net.num_parameters() == (4 * 8 + 8) + (10 * 16 + 16) + (16 * 12 + 12) + (12 * 5 + 5)


def test_zero_bridge_preserves_outputs(net, rng):
    inputs = {"obs": rng.normal(size=(50, 4)), "goal": rng.normal(size=(50, 2))}
    wide = augment(net, SIDE, {"others": (3,)}, rng)
    out = wide.forward(inputs, {"others": rng.normal(size=(50, 3))})
    assert np.array_equal(out, net.forward(inputs))
    assert wide.stage == 2 and net.stage == 1
    assert np.all(wide.bridge.params["W"] == 0)


def test_augment_twice_and_stage_errors(net, rng):
    wide = augment(net, SIDE, {"others": (3,)}, rng)
    with pytest.raises(StageError):
        augment(wide, SIDE, {"others": (3,)}, rng)
    x = {"obs": np.zeros((1, 4)), "goal": np.zeros((1, 2))}
    with pytest.raises(StageError):
        wide.forward(x)
    with pytest.raises(StageError):
        net.forward(x, {"others": np.zeros((1, 3))})
    with pytest.raises(ValueError):
        augment(net, SIDE, {"others": (3,)}, rng, i_star=2)


def test_bridge_feeds_chosen_layer(net, rng):
    wide = augment(net, SIDE, {"others": (3,)}, rng, i_star=0)
    assert wide.bridge.params["W"].shape == (10, 16)


def test_soft_update(net, rng):
    target = net.copy()
    for arr in net.parameters().values():
        arr += 1.0
    before = {k: v.copy() for k, v in target.parameters().items()}
    soft_update(target, net, 0.25)
    for name, arr in target.parameters().items():
        assert np.allclose(arr, 0.75 * before[name] + 0.25 * net.parameters()[name])
    with pytest.raises(ValueError):
        soft_update(target, net, 0.0)


def test_adam_descends_quadratic(rng):
    net = AugmentableNet({"main": [["x", []]], "hidden": [4], "out": 1}, {"x": (3,)}, rng)
    x = rng.normal(size=(32, 3))
    y = x @ np.array([1.0, -2.0, 0.5])
    opt = Adam(net, 1e-2)
    losses = []
    for _ in range(300):
        err = net.forward({"x": x})[:, 0] - y
        losses.append(float(np.mean(err**2)))
        net.zero_grad()
        net.backward((2 * err / len(err))[:, None])
        opt.step()
    assert losses[-1] < 0.2 * losses[0]


@settings(max_examples=50, deadline=None)
@given(st.lists(st.floats(-30, 30), min_size=2, max_size=8), st.floats(0, 1))
def test_action_distribution_is_floored_simplex(logits, eps):
    p = action_distribution(np.array([logits]), eps)[0]
    assert p.sum() == pytest.approx(1.0, abs=1e-12)
    assert np.all(p >= eps / len(logits) - 1e-15)


def test_action_distribution_rejects_bad_eps():
    with pytest.raises(ValueError):
        action_distribution(np.zeros((1, 3)), 1.5)


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**31 - 1), st.floats(0, 0.9))
def test_logprob_gradient_matches_finite_differences(seed, eps):
    rng = np.random.default_rng(seed)
    logits = rng.normal(size=(4, 5))
    actions = rng.integers(0, 5, 4)
    weights = rng.normal(size=4)

    def f(z):
        return float((weights * np.log(action_distribution(z, eps)[np.arange(4), actions])).sum())

    grad = logprob_grad_logits(logits, actions, weights, eps)
    h = 1e-6
    for i, j in np.ndindex(*logits.shape):
        d = np.zeros_like(logits)
        d[i, j] = h
        assert grad[i, j] == pytest.approx((f(logits + d) - f(logits - d)) / (2 * h), abs=1e-6)


def test_policy_sampling_follows_distribution(net, rng):
    policy = Policy(net, eps=0.3)
    x = {"obs": np.repeat(rng.normal(size=(1, 4)), 20000, axis=0), "goal": np.zeros((20000, 2))}
    counts = np.bincount(policy.sample(x, rng), minlength=5) / 20000
    assert np.allclose(counts, policy.probs(x)[0], atol=0.015)


def test_softmax_is_shift_invariant():
    z = np.array([[1.0, 2.0, 3.0]])
    assert np.allclose(softmax(z), softmax(z + 1000.0))


def test_checkpoint_roundtrip(net, rng, tmp_path):
    wide = augment(net, SIDE, {"others": (3,)}, rng)
    wide.bridge.params["W"][:] = 0.1
    path = tmp_path / "ck.npz"
    save_checkpoint(path, {"policy": wide, "small": net}, extra={"note": "x"})
    ckpt = load_checkpoint(path)
    assert ckpt.extra == {"note": "x"} and set(ckpt.net_names()) == {"policy", "small"}
    rebuilt = ckpt.build("policy")
    inputs = {"obs": rng.normal(size=(3, 4)), "goal": rng.normal(size=(3, 2))}
    aug = {"others": rng.normal(size=(3, 3))}
    assert np.array_equal(rebuilt.forward(inputs, aug), wide.forward(inputs, aug))
    # partial restore of a stage-1 net into a widened one leaves the side branch alone
    fresh = augment(AugmentableNet(SPEC, SHAPES, np.random.default_rng(99)), SIDE, {"others": (3,)}, rng)
    loaded = ckpt.restore_into("small", fresh)
    assert set(loaded) == set(net.parameters())
    assert np.array_equal(fresh.forward(inputs, aug), net.forward(inputs))


def test_checkpoint_rejects_foreign_file(tmp_path):
    path = tmp_path / "x.npz"
    np.savez(path, __meta__=np.array('{"format": "other"}'))
    with pytest.raises(ValueError):
        load_checkpoint(path)


def test_load_parameters_shape_mismatch(net, rng):
    other = AugmentableNet(dict(SPEC, hidden=[8, 12]), SHAPES, rng)
    with pytest.raises(ValueError):
        net.load_parameters(other.parameters())
