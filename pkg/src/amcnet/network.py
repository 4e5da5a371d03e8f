"""The multi-scale 1-D convolutional classifier.

Architecture (defaults reproduce the reference hyper-parameters)::

    input (B, 2, N)
      -> multi-scale module 1   (B, 4*branch_ch, N/2)
      -> multi-scale module 2   (B, 4*branch_ch, N/4)
      -> global average pooling (B, 4*branch_ch)
      -> dense + ReLU           (B, feature_dim)   <- "features"
      -> dense                  (B, n_classes)     <- logits

Each multi-scale module reduces the temporal length with a 3-tap
stride-2 convolution, then runs four parallel same-padding branches with
kernel sizes 1/3/5/7, each followed by a 1-tap mixing convolution; the
branch outputs are concatenated channel-wise. Every convolution is
followed by batchnorm and ReLU.

Parameters are stored as plain numpy arrays and addressed by stable
dotted names (e.g. ``ms1.reduce.weight``); the same names appear in
checkpoint files.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .layers import (
    BatchNorm1d,
    Conv1d,
    Dense,
    batchnorm_backward,
    batchnorm_forward,
    conv1d_backward,
    conv1d_forward,
    dense_backward,
    dense_forward,
    gap_backward,
    gap_forward,
    relu,
    relu_backward,
)

__all__ = [
    "ConvBlock",
    "Branch",
    "MultiScaleModule",
    "MultiScaleNet",
    "build_network",
    "network_from_state",
]

BRANCH_KERNELS = (1, 3, 5, 7)
MIN_INPUT_LEN = 8


@dataclass
class ConvBlock:
    """conv -> batchnorm -> ReLU."""

    conv: Conv1d
    bn: BatchNorm1d

    def forward(self, x, train):
        z, conv_cache = conv1d_forward(self.conv, x)
        h, bn_cache = batchnorm_forward(self.bn, z, train)
        return relu(h), (conv_cache, bn_cache, h)

    def backward(self, cache, grad_out, grads, prefix):
        conv_cache, bn_cache, h = cache
        gh = relu_backward(h, grad_out)
        gz, grads[prefix + ".bn.gamma"], grads[prefix + ".bn.beta"] = (
            batchnorm_backward(self.bn, bn_cache, gh)
        )
        gx, grads[prefix + ".weight"], grads[prefix + ".bias"] = conv1d_backward(
            self.conv, conv_cache, gz
        )
        return gx

    def named_arrays(self, prefix):
        yield prefix + ".weight", self.conv.weight
        yield prefix + ".bias", self.conv.bias
        yield prefix + ".bn.gamma", self.bn.gamma
        yield prefix + ".bn.beta", self.bn.beta
        yield prefix + ".bn.running_mean", self.bn.running_mean
        yield prefix + ".bn.running_var", self.bn.running_var


@dataclass
class Branch:
    """A k-tap same-padding block followed by a 1-tap mixing block."""

    main: ConvBlock
    gather: ConvBlock

    def forward(self, x, train):
        h, main_cache = self.main.forward(x, train)
        y, gather_cache = self.gather.forward(h, train)
        return y, (main_cache, gather_cache)

    def backward(self, cache, grad_out, grads, prefix):
        main_cache, gather_cache = cache
        gh = self.gather.backward(gather_cache, grad_out, grads, prefix + ".gather")
        return self.main.backward(main_cache, gh, grads, prefix)

    def named_arrays(self, prefix):
        yield from self.main.named_arrays(prefix)
        yield from self.gather.named_arrays(prefix + ".gather")


@dataclass
class MultiScaleModule:
    reduce: ConvBlock
    branches: list[Branch]

    @property
    def branch_channels(self):
        return self.branches[0].main.conv.weight.shape[0]

    def forward(self, x, train):
        r, reduce_cache = self.reduce.forward(x, train)
        outs, caches = [], []
        for branch in self.branches:
            y, c = branch.forward(r, train)
            outs.append(y)
            caches.append(c)
        return np.concatenate(outs, axis=1), (reduce_cache, caches)

    def backward(self, cache, grad_out, grads, prefix):
        reduce_cache, branch_caches = cache
        ch = self.branch_channels
        gr = None
        for i, branch in enumerate(self.branches):
            g = branch.backward(
                branch_caches[i],
                grad_out[:, i * ch : (i + 1) * ch],
                grads,
                f"{prefix}.b{i + 1}",
            )
            gr = g if gr is None else gr + g
        return self.reduce.backward(reduce_cache, gr, grads, prefix + ".reduce")

    def named_arrays(self, prefix):
        yield from self.reduce.named_arrays(prefix + ".reduce")
        for i, branch in enumerate(self.branches):
            yield from branch.named_arrays(f"{prefix}.b{i + 1}")


class MultiScaleNet:
    """Two multi-scale modules, pooling, and the two dense layers."""

    def __init__(self, ms1, ms2, fc1, fc2):
        self.ms1 = ms1
        self.ms2 = ms2
        self.fc1 = fc1
        self.fc2 = fc2

    @property
    def feature_dim(self):
        return self.fc1.weight.shape[1]

    @property
    def n_classes(self):
        return self.fc2.weight.shape[1]

    @property
    def dtype(self):
        return self.fc1.weight.dtype

    def forward(self, x, train):
        """Run the network; returns (features, logits, cache).

        Features are the post-ReLU outputs of the middle dense layer,
        the vectors the center loss acts on. Logits are pre-softmax.
        """
        if x.ndim != 3:
            raise ValueError(f"expected (batch, channels, length), got {x.shape}")
        if x.shape[2] < MIN_INPUT_LEN:
            raise ValueError(
                f"input length {x.shape[2]} < {MIN_INPUT_LEN}; two stride-2 "
                "reductions need at least that"
            )
        h1, ms1_cache = self.ms1.forward(x, train)
        h2, ms2_cache = self.ms2.forward(h1, train)
        pooled, gap_cache = gap_forward(h2)
        pre, fc1_cache = dense_forward(self.fc1, pooled)
        features = relu(pre)
        logits, fc2_cache = dense_forward(self.fc2, features)
        cache = {
            "ms1": ms1_cache,
            "ms2": ms2_cache,
            "gap": gap_cache,
            "fc1": fc1_cache,
            "fc2": fc2_cache,
            "pre": pre,
            "features": features,
            "shapes": {
                "ms1": h1.shape[1:],
                "ms2": h2.shape[1:],
                "gap": pooled.shape[1:],
                "fc1": features.shape[1:],
                "fc2": logits.shape[1:],
            },
        }
        return features, logits, cache

    def backward(self, cache, grad_logits, grad_features=None):
        """Backpropagate; returns (grads by name, grad wrt the input).

        ``grad_features`` is an optional extra gradient added straight to
        the feature vector, the hook the center term uses.
        """
        grads = {}
        gf, grads["fc2.weight"], grads["fc2.bias"] = dense_backward(
            self.fc2, cache["fc2"], grad_logits
        )
        if grad_features is not None:
            gf = gf + grad_features
        gpre = relu_backward(cache["pre"], gf)
        gpool, grads["fc1.weight"], grads["fc1.bias"] = dense_backward(
            self.fc1, cache["fc1"], gpre
        )
        gh2 = gap_backward(cache["gap"], gpool)
        gh1 = self.ms2.backward(cache["ms2"], gh2, grads, "ms2")
        gx = self.ms1.backward(cache["ms1"], gh1, grads, "ms1")
        return grads, gx

    def named_arrays(self):
        """All stateful arrays (trainable params plus BN running stats)."""
        yield from self.ms1.named_arrays("ms1")
        yield from self.ms2.named_arrays("ms2")
        yield "fc1.weight", self.fc1.weight
        yield "fc1.bias", self.fc1.bias
        yield "fc2.weight", self.fc2.weight
        yield "fc2.bias", self.fc2.bias

    def state_dict(self):
        return dict(self.named_arrays())

    def load_state_dict(self, state):
        own = self.state_dict()
        missing = sorted(set(own) - set(state))
        extra = sorted(k for k in set(state) - set(own) if not k.startswith("centers."))
        if missing or extra:
            raise ValueError(f"state mismatch: missing {missing}, unexpected {extra}")
        for name, arr in own.items():
            src = np.asarray(state[name], dtype=arr.dtype)
            if src.shape != arr.shape:
                raise ValueError(
                    f"{name}: shape {src.shape} does not match {arr.shape}"
                )
            arr[...] = src

    def trainable(self):
        """Name -> array for everything the optimizer updates."""
        return {
            name: arr
            for name, arr in self.named_arrays()
            if "running_" not in name
        }

    def decay_exempt(self):
        """Parameter names excluded from weight decay (BN scale/shift)."""
        return {name for name in self.trainable() if ".bn." in name}

    def astype(self, dtype):
        """A copy of the network with every array converted to ``dtype``."""
        clone = build_network(
            np.random.default_rng(0),
            in_channels=self.ms1.reduce.conv.weight.shape[1],
            branch_channels=self.ms1.branch_channels,
            feature_dim=self.feature_dim,
            n_classes=self.n_classes,
            dtype=dtype,
        )
        clone.load_state_dict(
            {k: v.astype(dtype) for k, v in self.state_dict().items()}
        )
        return clone


def network_from_state(state, dtype=np.float32):
    """Rebuild a network whose geometry is implied by a state dict."""
    for needed in ("ms1.reduce.weight", "fc1.bias", "fc2.bias"):
        if needed not in state:
            raise ValueError(f"state is missing {needed!r}")
    net = build_network(
        np.random.default_rng(0),
        in_channels=state["ms1.reduce.weight"].shape[1],
        branch_channels=state["ms1.reduce.weight"].shape[0],
        feature_dim=state["fc1.bias"].shape[0],
        n_classes=state["fc2.bias"].shape[0],
        dtype=dtype,
    )
    net.load_state_dict(state)
    return net


def _kaiming_uniform(rng, shape, fan_in, dtype):
    bound = np.sqrt(6.0 / fan_in)
    return rng.uniform(-bound, bound, size=shape).astype(dtype)


def _conv_block(rng, in_ch, out_ch, kernel_size, stride, padding, dtype):
    conv = Conv1d(
        weight=_kaiming_uniform(
            rng, (out_ch, in_ch, kernel_size), in_ch * kernel_size, dtype
        ),
        bias=np.zeros(out_ch, dtype=dtype),
        stride=stride,
        padding=padding,
    )
    bn = BatchNorm1d(
        gamma=np.ones(out_ch, dtype=dtype),
        beta=np.zeros(out_ch, dtype=dtype),
        running_mean=np.zeros(out_ch, dtype=dtype),
        running_var=np.ones(out_ch, dtype=dtype),
    )
    return ConvBlock(conv=conv, bn=bn)


def _ms_module(rng, in_ch, branch_ch, dtype):
    reduce = _conv_block(rng, in_ch, branch_ch, 3, stride=2, padding=1, dtype=dtype)
    branches = []
    for k in BRANCH_KERNELS:
        main = _conv_block(
            rng, branch_ch, branch_ch, k, stride=1, padding=(k - 1) // 2, dtype=dtype
        )
        gather = _conv_block(rng, branch_ch, branch_ch, 1, stride=1, padding=0, dtype=dtype)
        branches.append(Branch(main=main, gather=gather))
    return MultiScaleModule(reduce=reduce, branches=branches)


def build_network(
    rng,
    in_channels=2,
    branch_channels=32,
    feature_dim=128,
    n_classes=8,
    dtype=np.float32,
):
    """Randomly initialized network (Kaiming-uniform weights, zero biases)."""
    concat_ch = len(BRANCH_KERNELS) * branch_channels
    ms1 = _ms_module(rng, in_channels, branch_channels, dtype)
    ms2 = _ms_module(rng, concat_ch, branch_channels, dtype)
    fc1 = Dense(
        weight=_kaiming_uniform(rng, (concat_ch, feature_dim), concat_ch, dtype),
        bias=np.zeros(feature_dim, dtype=dtype),
    )
    fc2 = Dense(
        weight=_kaiming_uniform(rng, (feature_dim, n_classes), feature_dim, dtype),
        bias=np.zeros(n_classes, dtype=dtype),
    )
    return MultiScaleNet(ms1=ms1, ms2=ms2, fc1=fc1, fc2=fc2)
