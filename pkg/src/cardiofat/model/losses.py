"""Adversarial + L1 objective and its gradients.

Discriminator outputs are raw logits; a patch map of zeros therefore means
"0.5 probability everywhere" and scores BCE(0.5, 1) = ln 2 against the
real label.
"""

import numpy as np

from ..errors import ShapeError


def bce_with_logits(logits, target):
    """Mean binary cross-entropy of sigmoid(logits) against a 0/1 target."""
    x = np.asarray(logits, dtype=np.float64)
    return float(np.mean(np.maximum(x, 0.0) - x * target + np.log1p(np.exp(-np.abs(x)))))


def bce_with_logits_grad(logits, target):
    """d(mean BCE)/d(logits) = (sigmoid(logits) - target) / numel."""
    x = np.asarray(logits)
    sig = 1.0 / (1.0 + np.exp(-x))
    return (sig - target) / x.size


def l1_mean(a, b):
    return float(np.mean(np.abs(np.asarray(a, dtype=np.float64) - np.asarray(b, dtype=np.float64))))


def l1_mean_grad(a, b):
    """d(mean |a - b|)/da, with sign 0 at exact ties."""
    diff = np.asarray(a) - np.asarray(b)
    return np.sign(diff) / diff.size


def pix2pix_losses(d_real, d_fake, gen_out, target, l1_weight):
    """Scalar losses of one step: (g_loss, d_loss, l1).

    d_loss = (BCE(d_real, 1) + BCE(d_fake, 0)) / 2
    g_loss = BCE(d_fake, 1) + l1_weight * mean|gen_out - target|
    """
    gen_out = np.asarray(gen_out)
    target = np.asarray(target)
    if gen_out.shape != target.shape:
        raise ShapeError(f"generated {gen_out.shape} vs target {target.shape}")
    d_real = np.asarray(d_real)
    d_fake = np.asarray(d_fake)
    if d_real.shape != d_fake.shape:
        raise ShapeError(f"real scores {d_real.shape} vs fake scores {d_fake.shape}")
    l1 = l1_mean(gen_out, target)
    d_loss = 0.5 * (bce_with_logits(d_real, 1.0) + bce_with_logits(d_fake, 0.0))
    g_loss = bce_with_logits(d_fake, 1.0) + l1_weight * l1
    return g_loss, d_loss, l1
