"""Naive scalar ground-truth implementations for every builtin operator.

Each function walks the operator semantics one output element at a time
using np.float32 scalar arithmetic, written directly from the operator
definitions (NHWC activations, OHWI filters). They share no code with the
production kernels, so bit-level agreement between the two is evidence
rather than tautology.

Reduction order is part of the contract: filter taps accumulate in
(kh, kw, ci) order, features in index order, softmax classes in class
order. The production kernels promise the same order.
"""

import numpy as np

f32 = np.float32


def clamp_scalar(v, lo, hi):
    if lo is not None and v < f32(lo):
        v = f32(lo)
    if hi is not None and v > f32(hi):
        v = f32(hi)
    return v


def conv2d(x, w, bias=None, stride=(1, 1), dilation=(1, 1),
           pads=(0, 0, 0, 0), clamp=(None, None)):
    """x: (n, h, w, cin); w: (cout, fh, fw, cin); returns (n, oh, ow, cout)."""
    n, h, wd, cin = x.shape
    cout, fh, fw, _ = w.shape
    sh, sw = stride
    dh, dw = dilation
    pt, pb, pl, pr = pads
    eh = (fh - 1) * dh + 1
    ew = (fw - 1) * dw + 1
    oh = (h + pt + pb - eh) // sh + 1
    ow = (wd + pl + pr - ew) // sw + 1
    out = np.empty((n, oh, ow, cout), dtype=np.float32)
    for b in range(n):
        for oy in range(oh):
            for ox in range(ow):
                for co in range(cout):
                    acc = f32(0.0)
                    for kh in range(fh):
                        for kw in range(fw):
                            for ci in range(cin):
                                iy = oy * sh - pt + kh * dh
                                ix = ox * sw - pl + kw * dw
                                if 0 <= iy < h and 0 <= ix < wd:
                                    acc = f32(acc + f32(x[b, iy, ix, ci]
                                                        * w[co, kh, kw, ci]))
                    if bias is not None:
                        acc = f32(acc + bias[co])
                    out[b, oy, ox, co] = clamp_scalar(acc, *clamp)
    return out


def depthwise_conv2d(x, w, bias=None, stride=(1, 1), dilation=(1, 1),
                     pads=(0, 0, 0, 0), multiplier=1, clamp=(None, None)):
    """x: (n, h, w, cin); w: (1, fh, fw, cin*multiplier)."""
    n, h, wd, cin = x.shape
    _, fh, fw, cout = w.shape
    sh, sw = stride
    dh, dw = dilation
    pt, pb, pl, pr = pads
    eh = (fh - 1) * dh + 1
    ew = (fw - 1) * dw + 1
    oh = (h + pt + pb - eh) // sh + 1
    ow = (wd + pl + pr - ew) // sw + 1
    out = np.empty((n, oh, ow, cout), dtype=np.float32)
    for b in range(n):
        for oy in range(oh):
            for ox in range(ow):
                for co in range(cout):
                    ci = co // multiplier
                    acc = f32(0.0)
                    for kh in range(fh):
                        for kw in range(fw):
                            iy = oy * sh - pt + kh * dh
                            ix = ox * sw - pl + kw * dw
                            if 0 <= iy < h and 0 <= ix < wd:
                                acc = f32(acc + f32(x[b, iy, ix, ci]
                                                    * w[0, kh, kw, co]))
                    if bias is not None:
                        acc = f32(acc + bias[co])
                    out[b, oy, ox, co] = clamp_scalar(acc, *clamp)
    return out


def avg_pool2d(x, kernel, stride, pads=(0, 0, 0, 0), clamp=(None, None)):
    n, h, wd, c = x.shape
    fh, fw = kernel
    sh, sw = stride
    pt, pb, pl, pr = pads
    oh = (h + pt + pb - fh) // sh + 1
    ow = (wd + pl + pr - fw) // sw + 1
    out = np.empty((n, oh, ow, c), dtype=np.float32)
    for b in range(n):
        for oy in range(oh):
            for ox in range(ow):
                for ch in range(c):
                    acc = f32(0.0)
                    cnt = 0
                    for kh in range(fh):
                        for kw in range(fw):
                            iy = oy * sh - pt + kh
                            ix = ox * sw - pl + kw
                            if 0 <= iy < h and 0 <= ix < wd:
                                acc = f32(acc + x[b, iy, ix, ch])
                                cnt += 1
                    out[b, oy, ox, ch] = clamp_scalar(f32(acc / f32(cnt)),
                                                      *clamp)
    return out


def max_pool2d(x, kernel, stride, pads=(0, 0, 0, 0), clamp=(None, None)):
    n, h, wd, c = x.shape
    fh, fw = kernel
    sh, sw = stride
    pt, pb, pl, pr = pads
    oh = (h + pt + pb - fh) // sh + 1
    ow = (wd + pl + pr - fw) // sw + 1
    out = np.empty((n, oh, ow, c), dtype=np.float32)
    for b in range(n):
        for oy in range(oh):
            for ox in range(ow):
                for ch in range(c):
                    acc = f32("-inf")
                    for kh in range(fh):
                        for kw in range(fw):
                            iy = oy * sh - pt + kh
                            ix = ox * sw - pl + kw
                            if 0 <= iy < h and 0 <= ix < wd:
                                if x[b, iy, ix, ch] > acc:
                                    acc = x[b, iy, ix, ch]
                    out[b, oy, ox, ch] = clamp_scalar(acc, *clamp)
    return out


def fully_connected(x, w, bias=None, clamp=(None, None)):
    """x: (batch, in); w: (out, in) row major."""
    batch, nin = x.shape
    nout = w.shape[0]
    out = np.empty((batch, nout), dtype=np.float32)
    for b in range(batch):
        for o in range(nout):
            acc = f32(0.0)
            for i in range(nin):
                acc = f32(acc + f32(x[b, i] * w[o, i]))
            if bias is not None:
                acc = f32(acc + bias[o])
            out[b, o] = clamp_scalar(acc, *clamp)
    return out


def softmax(x, beta=1.0):
    rows, classes = x.shape
    out = np.empty_like(x)
    for r in range(rows):
        m = x[r, 0]
        for c in range(1, classes):
            if x[r, c] > m:
                m = x[r, c]
        e = [f32(np.exp(f32(f32(x[r, c] - m) * f32(beta))))
             for c in range(classes)]
        s = f32(0.0)
        for c in range(classes):
            s = f32(s + e[c])
        for c in range(classes):
            out[r, c] = f32(e[c] / s)
    return out


def relu(x):
    out = np.empty_like(x)
    flat_in = x.reshape(-1)
    flat = out.reshape(-1)
    for i in range(flat.size):
        flat[i] = flat_in[i] if flat_in[i] > f32(0.0) else f32(0.0)
    return out


def add(a, b, clamp=(None, None)):
    out = np.empty_like(a)
    fa, fb, fo = a.reshape(-1), b.reshape(-1), out.reshape(-1)
    for i in range(fo.size):
        fo[i] = clamp_scalar(fa[i] + fb[i], *clamp)
    return out


def concat(parts, axis):
    return np.concatenate(parts, axis=axis)


def pad(x, paddings):
    return np.pad(x, paddings, constant_values=0.0)


def scale_shift(x, scale, shift):
    out = np.empty_like(x)
    fi, fo = x.reshape(-1), out.reshape(-1)
    for i in range(fo.size):
        fo[i] = f32(f32(fi[i] * f32(scale)) + f32(shift))
    return out


def bitwise_equal(a, b):
    """0-ULP comparison: identical bit patterns, except +0.0 == -0.0."""
    a = np.asarray(a)
    b = np.asarray(b)
    if a.shape != b.shape or a.dtype != b.dtype:
        return False
    if a.dtype == np.float32:
        au = a.reshape(-1).view(np.uint32).astype(np.int64)
        bu = b.reshape(-1).view(np.uint32).astype(np.int64)
        zero = np.uint32(0x80000000)
        az = np.where(au == zero, 0, au)
        bz = np.where(bu == zero, 0, bu)
        return bool(np.array_equal(az, bz))
    return bool(np.array_equal(a, b))
