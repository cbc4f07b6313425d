"""Convolution primitives with explicit backward passes.

All tensors are numpy arrays shaped (N, C, H, W). The im2col/col2im pair
keeps every convolution a single matmul, which is what makes CPU training
of the compact presets practical.
"""

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view


def conv_out_size(n, k, s, p):
    """Spatial extent after a convolution: floor((n + 2p - k) / s) + 1."""
    return (n + 2 * p - k) // s + 1


def conv_transpose_out_size(n, k, s, p):
    """Spatial extent after a transposed convolution: (n - 1)s - 2p + k."""
    return (n - 1) * s - 2 * p + k


def im2col(x, k, stride, pad):
    """Unfold (N, C, H, W) into (N, L, C*k*k) patch rows, L = Ho*Wo."""
    n, c, h, w = x.shape
    xp = np.pad(x, ((0, 0), (0, 0), (pad, pad), (pad, pad)))
    windows = sliding_window_view(xp, (k, k), axis=(2, 3))[:, :, ::stride, ::stride]
    ho, wo = windows.shape[2], windows.shape[3]
    cols = windows.transpose(0, 2, 3, 1, 4, 5).reshape(n, ho * wo, c * k * k)
    return np.ascontiguousarray(cols), (ho, wo)


def col2im(cols, x_shape, k, stride, pad, out_hw):
    """Scatter-add (N, L, C*k*k) patch rows back into (N, C, H, W)."""
    n, c, h, w = x_shape
    ho, wo = out_hw
    dxp = np.zeros((n, c, h + 2 * pad, w + 2 * pad), dtype=cols.dtype)
    blocks = cols.reshape(n, ho, wo, c, k, k).transpose(0, 3, 1, 2, 4, 5)
    for ki in range(k):
        for kj in range(k):
            dxp[:, :, ki : ki + stride * ho : stride, kj : kj + stride * wo : stride] += blocks[
                :, :, :, :, ki, kj
            ]
    if pad == 0:
        return dxp
    return dxp[:, :, pad:-pad, pad:-pad]


def conv2d_forward(x, w, b, stride, pad):
    """y[n,o,:,:] = sum_c x * w[o,c] + b[o]; returns (y, cache)."""
    cout, cin, k, _ = w.shape
    cols, (ho, wo) = im2col(x, k, stride, pad)
    wmat = w.reshape(cout, cin * k * k)
    y = cols @ wmat.T + b
    y = y.transpose(0, 2, 1).reshape(x.shape[0], cout, ho, wo)
    return y, (x.shape, cols, (ho, wo))


def conv2d_backward(dy, w, stride, pad, cache):
    """Returns (dx, dw, db)."""
    x_shape, cols, (ho, wo) = cache
    n = dy.shape[0]
    cout, cin, k, _ = w.shape
    dy2 = dy.reshape(n, cout, ho * wo).transpose(0, 2, 1)
    wmat = w.reshape(cout, cin * k * k)
    dw = np.einsum("nlo,nlc->oc", dy2, cols).reshape(w.shape)
    db = dy.sum(axis=(0, 2, 3))
    dcols = dy2 @ wmat
    dx = col2im(dcols, x_shape, k, stride, pad, (ho, wo))
    return dx, dw, db


def conv_transpose2d_forward(x, w, b, stride, pad):
    """Transposed convolution; w is shaped (Cin, Cout, k, k)."""
    n, cin, h, wdt = x.shape
    _, cout, k, _ = w.shape
    ho = conv_transpose_out_size(h, k, stride, pad)
    wo = conv_transpose_out_size(wdt, k, stride, pad)
    x2 = x.reshape(n, cin, h * wdt).transpose(0, 2, 1)
    wmat = w.reshape(cin, cout * k * k)
    cols = x2 @ wmat
    y = col2im(cols, (n, cout, ho, wo), k, stride, pad, (h, wdt))
    y += b[None, :, None, None]
    return y, (x2, (h, wdt), (ho, wo))


def conv_transpose2d_backward(dy, w, stride, pad, cache):
    """Returns (dx, dw, db)."""
    x2, (h, wdt), (ho, wo) = cache
    n = dy.shape[0]
    cin, cout, k, _ = w.shape
    cols_dy, hw = im2col(dy, k, stride, pad)
    assert hw == (h, wdt)
    wmat = w.reshape(cin, cout * k * k)
    dx = (cols_dy @ wmat.T).transpose(0, 2, 1).reshape(n, cin, h, wdt)
    dw = np.einsum("nlc,nlm->cm", x2, cols_dy).reshape(w.shape)
    db = dy.sum(axis=(0, 2, 3))
    return dx, dw, db


def instance_norm_forward(x, gamma, beta, eps=1e-5):
    """Per-sample, per-channel normalization over the spatial axes."""
    mu = x.mean(axis=(2, 3), keepdims=True)
    var = x.var(axis=(2, 3), keepdims=True)
    inv = 1.0 / np.sqrt(var + eps)
    xhat = (x - mu) * inv
    y = gamma[None, :, None, None] * xhat + beta[None, :, None, None]
    return y, (xhat, inv)


def instance_norm_backward(dy, gamma, cache):
    """Returns (dx, dgamma, dbeta)."""
    xhat, inv = cache
    dgamma = (dy * xhat).sum(axis=(0, 2, 3))
    dbeta = dy.sum(axis=(0, 2, 3))
    dxhat = dy * gamma[None, :, None, None]
    mean_dxhat = dxhat.mean(axis=(2, 3), keepdims=True)
    mean_dxhat_xhat = (dxhat * xhat).mean(axis=(2, 3), keepdims=True)
    dx = inv * (dxhat - mean_dxhat - xhat * mean_dxhat_xhat)
    return dx, dgamma, dbeta


def leaky_relu_forward(x, slope=0.2):
    y = np.where(x > 0, x, slope * x)
    return y, x > 0


def leaky_relu_backward(dy, mask, slope=0.2):
    return np.where(mask, dy, slope * dy)


def relu_forward(x):
    mask = x > 0
    return x * mask, mask


def relu_backward(dy, mask):
    return dy * mask


def tanh_forward(x):
    y = np.tanh(x)
    return y, y


def tanh_backward(dy, y):
    return dy * (1.0 - y * y)


def dropout_forward(x, rate, rng):
    """Inverted dropout; identity when rate is 0 or no stream is given."""
    if rate <= 0.0 or rng is None:
        return x, None
    keep = (rng.random(x.shape) >= rate).astype(x.dtype) / (1.0 - rate)
    return x * keep, keep


def dropout_backward(dy, keep):
    if keep is None:
        return dy
    return dy * keep
