import numpy as np
import numpy.testing as npt
import pytest

from amcnet.layers import (
    batchnorm_forward,
    conv1d_forward,
    relu,
)
from amcnet.network import (
    BRANCH_KERNELS,
    build_network,
    network_from_state,
)

from gradcheck import fd_grad, rel_err


def tiny_net(seed=0, dtype=np.float64):
    return build_network(
        np.random.default_rng(seed),
        branch_channels=4,
        feature_dim=8,
        n_classes=4,
        dtype=dtype,
    )


def test_table_shapes():
    net = build_network(np.random.default_rng(0))
    x = np.random.default_rng(1).standard_normal((8, 2, 128)).astype(np.float32)
    feats, logits, cache = net.forward(x, train=True)
    assert cache["shapes"]["ms1"] == (128, 64)
    assert cache["shapes"]["ms2"] == (128, 32)
    assert cache["shapes"]["gap"] == (128,)
    assert feats.shape == (8, 128)
    assert logits.shape == (8, 8)


@pytest.mark.parametrize("length", [64, 128, 256])
def test_gap_length_independence(length):
    net = build_network(np.random.default_rng(2))
    x = np.random.default_rng(3).standard_normal((2, 2, length)).astype(np.float32)
    feats, logits, _ = net.forward(x, train=False)
    assert feats.shape == (2, 128)
    assert logits.shape == (2, 8)


def test_input_too_short():
    net = build_network(np.random.default_rng(0))
    with pytest.raises(ValueError, match="length"):
        net.forward(np.zeros((2, 2, 4), dtype=np.float32), train=False)


def test_input_rank_check():
    net = build_network(np.random.default_rng(0))
    with pytest.raises(ValueError, match="batch"):
        net.forward(np.zeros((2, 128), dtype=np.float32), train=False)


def test_branch_kernels():
    assert BRANCH_KERNELS == (1, 3, 5, 7)
    net = tiny_net()
    for mod in (net.ms1, net.ms2):
        ks = [b.main.conv.weight.shape[2] for b in mod.branches]
        assert ks == [1, 3, 5, 7]
        assert all(b.gather.conv.weight.shape[2] == 1 for b in mod.branches)


def test_zeroed_classifier_gives_zero_logits():
    net = tiny_net(seed=4)
    net.fc2.weight[...] = 0.0
    net.fc2.bias[...] = 0.0
    x = np.random.default_rng(5).standard_normal((3, 2, 16))
    _, logits, _ = net.forward(x, train=False)
    npt.assert_array_equal(logits, 0.0)


def test_module_matches_primitive_composition():
    # the MS module is exactly reduce -> 4 branches -> concat, each block
    # being conv/BN/ReLU, verified against a by-hand composition
    net = tiny_net(seed=6)
    mod = net.ms1
    x = np.random.default_rng(7).standard_normal((3, 2, 16))
    got, _ = mod.forward(x, train=False)

    def block(cb, v):
        z, _ = conv1d_forward(cb.conv, v)
        h, _ = batchnorm_forward(cb.bn, z, False)
        return relu(h)

    r = block(mod.reduce, x)
    outs = []
    for branch in mod.branches:
        outs.append(block(branch.gather, block(branch.main, r)))
    npt.assert_allclose(got, np.concatenate(outs, axis=1), rtol=1e-12)


def test_branches_preserve_length():
    net = tiny_net(seed=8)
    x = np.random.default_rng(9).standard_normal((2, 2, 32))
    out, _ = net.ms1.forward(x, train=False)
    assert out.shape[2] == 16  # only the stride-2 reduce halves the length


def test_param_names_stable():
    net = tiny_net()
    names = set(net.state_dict())
    assert "ms1.reduce.weight" in names
    assert "ms1.b1.gather.bn.gamma" in names
    assert "ms2.b4.bias" in names
    assert "fc1.weight" in names and "fc2.bias" in names
    # 2 modules x 9 conv blocks x 6 arrays + 2 dense x 2
    assert len(names) == 2 * 9 * 6 + 4


def test_trainable_excludes_running_stats():
    net = tiny_net()
    trainable = net.trainable()
    assert not any("running_" in k for k in trainable)
    assert len(trainable) == 2 * 9 * 4 + 4


def test_decay_exempt_is_bn_only():
    net = tiny_net()
    exempt = net.decay_exempt()
    assert all(".bn." in name for name in exempt)
    assert "ms1.reduce.bn.gamma" in exempt and "ms1.reduce.bn.beta" in exempt
    assert "fc1.weight" not in exempt


def test_state_dict_round_trip():
    a = tiny_net(seed=10)
    b = tiny_net(seed=11)
    b.load_state_dict(a.state_dict())
    x = np.random.default_rng(12).standard_normal((2, 2, 16))
    fa, la, _ = a.forward(x, train=False)
    fb, lb, _ = b.forward(x, train=False)
    npt.assert_array_equal(la, lb)
    npt.assert_array_equal(fa, fb)


def test_load_state_dict_rejects_mismatch():
    net = tiny_net()
    state = net.state_dict()
    del state["fc1.bias"]
    with pytest.raises(ValueError, match="missing"):
        net.load_state_dict(state)
    state = net.state_dict()
    state["bogus"] = np.zeros(1)
    with pytest.raises(ValueError, match="unexpected"):
        net.load_state_dict(state)
    state = net.state_dict()
    state["fc1.bias"] = np.zeros(99)
    with pytest.raises(ValueError, match="shape"):
        net.load_state_dict(state)


def test_load_state_dict_ignores_centers():
    net = tiny_net()
    state = net.state_dict()
    state["centers.c"] = np.zeros((4, 8))
    net.load_state_dict(state)


def test_network_from_state_rebuilds_geometry():
    net = tiny_net(seed=13)
    clone = network_from_state(net.state_dict(), dtype=np.float64)
    assert clone.feature_dim == 8 and clone.n_classes == 4
    x = np.random.default_rng(14).standard_normal((2, 2, 16))
    npt.assert_array_equal(
        net.forward(x, train=False)[1], clone.forward(x, train=False)[1]
    )


def test_astype_preserves_values():
    net = build_network(np.random.default_rng(15), branch_channels=4,
                        feature_dim=8, n_classes=4, dtype=np.float32)
    wide = net.astype(np.float64)
    x = np.random.default_rng(16).standard_normal((2, 2, 16))
    f32 = net.forward(x.astype(np.float32), train=False)[1]
    f64 = wide.forward(x, train=False)[1]
    npt.assert_allclose(f32, f64, atol=1e-5)
    assert wide.fc1.weight.dtype == np.float64


def test_forward_deterministic():
    net = tiny_net(seed=17)
    x = np.random.default_rng(18).standard_normal((4, 2, 16))
    a = net.forward(x, train=False)[1]
    b = net.forward(x, train=False)[1]
    npt.assert_array_equal(a, b)


def test_full_net_gradcheck():
    net = tiny_net(seed=19)
    rng = np.random.default_rng(20)
    x = rng.standard_normal((2, 2, 16))
    gl = rng.standard_normal((2, 4))
    gf = rng.standard_normal((2, 8))

    def loss():
        feats, logits, _ = net.forward(x, train=True)
        return float((logits * gl).sum() + (feats * gf).sum())

    feats, logits, cache = net.forward(x, train=True)
    grads, gx = net.backward(cache, gl, gf)
    assert rel_err(gx, fd_grad(loss, x)) < 1e-4
    for name in ("ms1.reduce.weight", "ms2.b3.bn.gamma", "fc1.weight", "fc2.bias"):
        park = net.trainable()[name]
        assert rel_err(grads[name], fd_grad(loss, park)) < 1e-4, name


def test_backward_without_feature_grad():
    net = tiny_net(seed=21)
    x = np.random.default_rng(22).standard_normal((2, 2, 16))
    _, logits, cache = net.forward(x, train=True)
    gl = np.ones_like(logits)
    grads_none, _ = net.backward(cache, gl)
    grads_zero, _ = net.backward(cache, gl, np.zeros((2, 8)))
    for k in grads_none:
        npt.assert_array_equal(grads_none[k], grads_zero[k])
