"""Compact conditional adversarial pair: U-Net generator, patch discriminator.

Both networks keep their weights in flat name -> array dicts so checkpoints,
the optimizer, and the finite-difference checker can address every tensor
uniformly. Forward passes return an opaque cache consumed by the matching
backward pass; gradients accumulate into a parallel dict and survive until
zero_grads().
"""

from dataclasses import dataclass

import numpy as np

from ..errors import ShapeError
from . import ops

KERNEL = 4
WEIGHT_STD = 0.02


def _channels(base, level):
    """Feature width at an encoder level, capped at 8x the base."""
    return base * min(2 ** (level - 1), 8)


class _ParamStore:
    """Shared bookkeeping for weights, gradients, and dtype control."""

    def __init__(self, dtype):
        self.dtype = np.dtype(dtype)
        self.weights = {}
        self._grads = {}

    def _add_conv(self, name, cin, cout, rng, transposed=False):
        shape = (cin, cout, KERNEL, KERNEL) if transposed else (cout, cin, KERNEL, KERNEL)
        self.weights[f"{name}.w"] = rng.normal(0.0, WEIGHT_STD, shape).astype(self.dtype)
        self.weights[f"{name}.b"] = np.zeros(cout, dtype=self.dtype)

    def _add_norm(self, name, channels):
        self.weights[f"{name}.g"] = np.ones(channels, dtype=self.dtype)
        self.weights[f"{name}.s"] = np.zeros(channels, dtype=self.dtype)

    def zero_grads(self):
        self._grads = {}

    def grads(self):
        return self._grads

    def _accum(self, name, value):
        if name in self._grads:
            self._grads[name] += value
        else:
            self._grads[name] = value

    def astype(self, dtype):
        """Cast every weight in place; used by the 64-bit gradient checks."""
        self.dtype = np.dtype(dtype)
        for name in self.weights:
            self.weights[name] = self.weights[name].astype(self.dtype)
        return self

    def _conv_fwd(self, name, x, stride):
        y, cache = ops.conv2d_forward(
            x, self.weights[f"{name}.w"], self.weights[f"{name}.b"], stride, 1
        )
        return y, (name, stride, cache)

    def _conv_bwd(self, dy, packed):
        name, stride, cache = packed
        dx, dw, db = ops.conv2d_backward(dy, self.weights[f"{name}.w"], stride, 1, cache)
        self._accum(f"{name}.w", dw)
        self._accum(f"{name}.b", db)
        return dx

    def _convt_fwd(self, name, x):
        y, cache = ops.conv_transpose2d_forward(
            x, self.weights[f"{name}.w"], self.weights[f"{name}.b"], 2, 1
        )
        return y, (name, cache)

    def _convt_bwd(self, dy, packed):
        name, cache = packed
        dx, dw, db = ops.conv_transpose2d_backward(
            dy, self.weights[f"{name}.w"], 2, 1, cache
        )
        self._accum(f"{name}.w", dw)
        self._accum(f"{name}.b", db)
        return dx

    def _norm_fwd(self, name, x):
        y, cache = ops.instance_norm_forward(
            x, self.weights[f"{name}.g"], self.weights[f"{name}.s"]
        )
        return y, (name, cache)

    def _norm_bwd(self, dy, packed):
        name, cache = packed
        dx, dg, ds = ops.instance_norm_backward(dy, self.weights[f"{name}.g"], cache)
        self._accum(f"{name}.g", dg)
        self._accum(f"{name}.s", ds)
        return dx


class UNetGenerator(_ParamStore):
    """Encoder-decoder with skip connections and a tanh output squash.

    Levels 1..depth halve the spatial extent with stride-2 convolutions;
    the decoder mirrors them with stride-2 transposed convolutions and
    concatenates the matching encoder feature ahead of every up level but
    the innermost. The first encoder level and both ends of the net carry
    no normalization.
    """

    def __init__(self, depth=4, base_channels=8, in_channels=1, out_channels=3,
                 dropout_rate=0.0, seed=0, dtype=np.float32):
        super().__init__(dtype)
        if depth < 2:
            raise ValueError("generator needs at least two levels")
        self.depth = depth
        self.base_channels = base_channels
        self.in_channels = in_channels
        self.out_channels = out_channels
        self.dropout_rate = float(dropout_rate)
        rng = np.random.default_rng(seed)
        c = {k: _channels(base_channels, k) for k in range(1, depth + 1)}
        self._add_conv("enc1.conv", in_channels, c[1], rng)
        for k in range(2, depth + 1):
            self._add_conv(f"enc{k}.conv", c[k - 1], c[k], rng)
            if k < depth:
                self._add_norm(f"enc{k}.norm", c[k])
        for k in range(depth, 1, -1):
            cin = c[k] if k == depth else 2 * c[k]
            self._add_conv(f"dec{k}.conv", cin, c[k - 1], rng, transposed=True)
            self._add_norm(f"dec{k}.norm", c[k - 1])
        self._add_conv("dec1.conv", 2 * c[1], out_channels, rng, transposed=True)

    def _dropout_levels(self):
        return {k for k in (self.depth, self.depth - 1, self.depth - 2) if k >= 2}

    def forward(self, x, train=False, rng=None):
        """Run the net; returns (y, cache). Dropout engages only when
        train=True, a stream is given, and the configured rate is nonzero."""
        x = np.ascontiguousarray(x, dtype=self.dtype)
        if x.ndim != 4 or x.shape[1] != self.in_channels:
            raise ShapeError(f"expected (N, {self.in_channels}, H, W), got {x.shape}")
        h, w = x.shape[2], x.shape[3]
        div = 2**self.depth
        if h % div or w % div or h < div or w < div:
            raise ShapeError(f"spatial dims {h}x{w} not divisible by {div}")
        drop_rng = rng if (train and self.dropout_rate > 0.0) else None

        enc_caches = {}
        acts = {}
        feat = x
        for k in range(1, self.depth + 1):
            steps = {}
            if k > 1:
                feat, steps["pre"] = ops.leaky_relu_forward(feat)
            feat, steps["conv"] = self._conv_fwd(f"enc{k}.conv", feat, 2)
            if 1 < k < self.depth:
                feat, steps["norm"] = self._norm_fwd(f"enc{k}.norm", feat)
            enc_caches[k] = steps
            acts[k] = feat

        dec_caches = {}
        up = acts[self.depth]
        for k in range(self.depth, 0, -1):
            steps = {}
            d_in = up if k == self.depth else np.concatenate([acts[k], up], axis=1)
            steps["skip_channels"] = 0 if k == self.depth else acts[k].shape[1]
            pre, steps["relu"] = ops.relu_forward(d_in)
            up, steps["conv"] = self._convt_fwd(f"dec{k}.conv", pre)
            if k > 1:
                up, steps["norm"] = self._norm_fwd(f"dec{k}.norm", up)
                if k in self._dropout_levels():
                    up, steps["drop"] = ops.dropout_forward(up, self.dropout_rate, drop_rng)
            dec_caches[k] = steps
        y, out_cache = ops.tanh_forward(up)
        return y, (enc_caches, dec_caches, out_cache)

    def backward(self, dy, cache):
        """Propagate loss gradient to the input; parameter gradients accumulate."""
        enc_caches, dec_caches, out_cache = cache
        grad = ops.tanh_backward(np.asarray(dy, dtype=self.dtype), out_cache)
        skip_grads = {}
        for k in range(1, self.depth + 1):
            steps = dec_caches[k]
            if "drop" in steps:
                grad = ops.dropout_backward(grad, steps["drop"])
            if "norm" in steps:
                grad = self._norm_bwd(grad, steps["norm"])
            grad = self._convt_bwd(grad, steps["conv"])
            grad = ops.relu_backward(grad, steps["relu"])
            nskip = steps["skip_channels"]
            if nskip:
                skip_grads[k] = grad[:, :nskip]
                grad = grad[:, nskip:]
        for k in range(self.depth, 0, -1):
            if k in skip_grads:
                grad = grad + skip_grads[k]
            steps = enc_caches[k]
            if "norm" in steps:
                grad = self._norm_bwd(grad, steps["norm"])
            grad = self._conv_bwd(grad, steps["conv"])
            if "pre" in steps:
                grad = ops.leaky_relu_backward(grad, steps["pre"])
        return grad


class PatchDiscriminator(_ParamStore):
    """Convolutional stack scoring overlapping patches of (input, candidate).

    `layers` stride-2 convolutions are followed by one stride-1 convolution
    with normalization and a final stride-1 projection to a 1-channel map
    of real/fake logits.
    """

    def __init__(self, layers=3, base_channels=8, in_channels=1, cand_channels=3,
                 seed=0, dtype=np.float32):
        super().__init__(dtype)
        if layers < 1:
            raise ValueError("discriminator needs at least one strided layer")
        self.layers = layers
        self.base_channels = base_channels
        self.in_channels = in_channels
        self.cand_channels = cand_channels
        rng = np.random.default_rng(seed)
        widths = [_channels(base_channels, j) for j in range(1, layers + 1)]
        self._add_conv("d1.conv", in_channels + cand_channels, widths[0], rng)
        for j in range(2, layers + 1):
            self._add_conv(f"d{j}.conv", widths[j - 2], widths[j - 1], rng)
            self._add_norm(f"d{j}.norm", widths[j - 1])
        penult = _channels(base_channels, layers + 1)
        self._add_conv("pen.conv", widths[-1], penult, rng)
        self._add_norm("pen.norm", penult)
        self._add_conv("out.conv", penult, 1, rng)

    def layer_specs(self):
        """(kernel, stride, pad) per convolution, for shape arithmetic."""
        return [(KERNEL, 2, 1)] * self.layers + [(KERNEL, 1, 1), (KERNEL, 1, 1)]

    def forward(self, input_img, candidate):
        """Score candidate conditioned on input; returns (logits, cache)."""
        input_img = np.ascontiguousarray(input_img, dtype=self.dtype)
        candidate = np.ascontiguousarray(candidate, dtype=self.dtype)
        if input_img.shape[0] != candidate.shape[0] or input_img.shape[2:] != candidate.shape[2:]:
            raise ShapeError(
                f"input {input_img.shape} and candidate {candidate.shape} disagree"
            )
        if input_img.shape[1] != self.in_channels or candidate.shape[1] != self.cand_channels:
            raise ShapeError(
                f"expected channels ({self.in_channels}, {self.cand_channels}), "
                f"got ({input_img.shape[1]}, {candidate.shape[1]})"
            )
        feat = np.concatenate([input_img, candidate], axis=1)
        steps = []
        feat, cache = self._conv_fwd("d1.conv", feat, 2)
        feat, mask = ops.leaky_relu_forward(feat)
        steps.append({"conv": cache, "act": mask})
        for j in range(2, self.layers + 1):
            feat, cache = self._conv_fwd(f"d{j}.conv", feat, 2)
            feat, ncache = self._norm_fwd(f"d{j}.norm", feat)
            feat, mask = ops.leaky_relu_forward(feat)
            steps.append({"conv": cache, "norm": ncache, "act": mask})
        feat, cache = self._conv_fwd("pen.conv", feat, 1)
        feat, ncache = self._norm_fwd("pen.norm", feat)
        feat, mask = ops.leaky_relu_forward(feat)
        steps.append({"conv": cache, "norm": ncache, "act": mask})
        logits, cache = self._conv_fwd("out.conv", feat, 1)
        steps.append({"conv": cache})
        return logits, (steps, input_img.shape[1])

    def backward(self, dlogits, cache):
        """Returns (d_input, d_candidate)."""
        steps, in_channels = cache
        grad = np.asarray(dlogits, dtype=self.dtype)
        for step in reversed(steps):
            if "act" in step:
                grad = ops.leaky_relu_backward(grad, step["act"])
            if "norm" in step:
                grad = self._norm_bwd(grad, step["norm"])
            grad = self._conv_bwd(grad, step["conv"])
        return grad[:, :in_channels], grad[:, in_channels:]


def generator_forward(g: UNetGenerator, x):
    """Inference-mode forward pass; output values lie in [-1, 1]."""
    y, _ = g.forward(x, train=False)
    return y


def discriminator_forward(d: PatchDiscriminator, input_img, candidate):
    """Patch map of real/fake logits for a candidate translation."""
    logits, _ = d.forward(input_img, candidate)
    return logits


@dataclass(frozen=True)
class Preset:
    name: str
    depth: int
    base_channels: int
    disc_layers: int
    disc_base_channels: int
    dropout_rate: float
    image_size: int


PRESETS = {
    # paper-scale recipe: 256x256 inputs, 8 down/up levels from 64 features
    "paper": Preset("paper", depth=8, base_channels=64, disc_layers=3,
                    disc_base_channels=64, dropout_rate=0.5, image_size=256),
    # desk-scale recipe used by the acceptance runs
    "toy": Preset("toy", depth=4, base_channels=8, disc_layers=3,
                  disc_base_channels=8, dropout_rate=0.0, image_size=64),
    # minimal recipe for the 64-bit finite-difference checks
    "tiny": Preset("tiny", depth=2, base_channels=4, disc_layers=2,
                   disc_base_channels=4, dropout_rate=0.0, image_size=16),
}


def build_generator(preset, in_channels=1, out_channels=3, seed=0, dtype=np.float32):
    p = PRESETS[preset] if isinstance(preset, str) else preset
    return UNetGenerator(
        depth=p.depth,
        base_channels=p.base_channels,
        in_channels=in_channels,
        out_channels=out_channels,
        dropout_rate=p.dropout_rate,
        seed=seed,
        dtype=dtype,
    )


def build_discriminator(preset, in_channels=1, cand_channels=3, seed=0, dtype=np.float32):
    p = PRESETS[preset] if isinstance(preset, str) else preset
    return PatchDiscriminator(
        layers=p.disc_layers,
        base_channels=p.disc_base_channels,
        in_channels=in_channels,
        cand_channels=cand_channels,
        seed=seed,
        dtype=dtype,
    )
