"""Hot numeric kernels: 2D convolution, 2x2 max pooling, and a cyclic Jacobi
eigensolver for real symmetric matrices.

Each kernel has a numba ``@njit`` implementation and a pure-numpy one.  The
active backend is chosen once at import time from the ``ENTDET_BACKEND``
environment variable (``numba`` or ``numpy``; default ``numba``, falling back
to numpy when numba is not importable).  Both implementations of every kernel
are always defined so they can be compared directly, e.g. by
``benchmarks/bench_kernels.py``.

Results agree between backends to floating-point roundoff; within one backend
every kernel is bitwise deterministic (fixed loop order, single thread).
"""

from __future__ import annotations

import os

import numpy as np

from .errors import NumericalError

_requested = os.environ.get("ENTDET_BACKEND", "numba").strip().lower()
if _requested not in ("numba", "numpy"):
    raise ValueError(
        f"ENTDET_BACKEND must be 'numba' or 'numpy', got {_requested!r}"
    )

USING_NUMBA = False
if _requested == "numba":
    try:
        from numba import njit

        USING_NUMBA = True
    except ImportError:
        USING_NUMBA = False

if not USING_NUMBA:
    def njit(*args, **kwargs):
        # passthrough decorator so the "numba" functions still exist
        if args and callable(args[0]):
            return args[0]
        return lambda f: f

BACKEND = "numba" if USING_NUMBA else "numpy"


# ---------------------------------------------------------------------------
# conv2d: valid cross-correlation on [B, C, H, W] with optional zero padding
# ---------------------------------------------------------------------------

def _conv_out_size(size: int, k: int, stride: int, padding: int) -> int:
    return (size + 2 * padding - k) // stride + 1


@njit(cache=True, fastmath=True)
def _conv2d_fwd_numba(xp, w, b, stride):
    B, C, H, W = xp.shape
    F, _, KH, KW = w.shape
    OH = (H - KH) // stride + 1
    OW = (W - KW) // stride + 1
    y = np.empty((B, F, OH, OW))
    for bi in range(B):
        for f in range(F):
            for oh in range(OH):
                for ow in range(OW):
                    y[bi, f, oh, ow] = b[f]
            for c in range(C):
                for kh in range(KH):
                    for kw in range(KW):
                        wv = w[f, c, kh, kw]
                        for oh in range(OH):
                            ih = oh * stride + kh
                            for ow in range(OW):
                                y[bi, f, oh, ow] += wv * xp[bi, c, ih, ow * stride + kw]
    return y


@njit(cache=True, fastmath=True)
def _conv2d_bwd_numba(xp, w, dy, stride):
    B, C, H, W = xp.shape
    F, _, KH, KW = w.shape
    OH = dy.shape[2]
    OW = dy.shape[3]
    dxp = np.zeros((B, C, H, W))
    dw = np.zeros(w.shape)
    db = np.zeros(F)
    for bi in range(B):
        for f in range(F):
            for oh in range(OH):
                for ow in range(OW):
                    db[f] += dy[bi, f, oh, ow]
            for c in range(C):
                for kh in range(KH):
                    for kw in range(KW):
                        wv = w[f, c, kh, kw]
                        acc = 0.0
                        for oh in range(OH):
                            ih = oh * stride + kh
                            for ow in range(OW):
                                g = dy[bi, f, oh, ow]
                                dxp[bi, c, ih, ow * stride + kw] += wv * g
                                acc += g * xp[bi, c, ih, ow * stride + kw]
                        dw[f, c, kh, kw] += acc
    return dxp, dw, db


def _tap_view(xp: np.ndarray, kh: int, kw: int, oh: int, ow: int, stride: int) -> np.ndarray:
    # strided [B, C, OH, OW] view of the input positions hit by kernel tap (kh, kw)
    return xp[:, :, kh : kh + stride * (oh - 1) + 1 : stride,
              kw : kw + stride * (ow - 1) + 1 : stride]


def _conv2d_fwd_numpy(xp, w, b, stride):
    B, C, H, W = xp.shape
    F, _, KH, KW = w.shape
    OH = (H - KH) // stride + 1
    OW = (W - KW) // stride + 1
    y = np.broadcast_to(b.reshape(1, F, 1, 1), (B, F, OH, OW)).copy()
    for kh in range(KH):
        for kw in range(KW):
            tap = _tap_view(xp, kh, kw, OH, OW, stride)
            # [F, C] x [B, C, OH, OW] -> [F, B, OH, OW]
            y += np.moveaxis(np.tensordot(w[:, :, kh, kw], tap, axes=([1], [1])), 0, 1)
    return y


def _conv2d_bwd_numpy(xp, w, dy, stride):
    B, C, H, W = xp.shape
    F, _, KH, KW = w.shape
    OH, OW = dy.shape[2], dy.shape[3]
    dxp = np.zeros((B, C, H, W))
    dw = np.empty_like(w)
    for kh in range(KH):
        for kw in range(KW):
            tap = _tap_view(xp, kh, kw, OH, OW, stride)
            dw[:, :, kh, kw] = np.tensordot(dy, tap, axes=([0, 2, 3], [0, 2, 3]))
            dtap = _tap_view(dxp, kh, kw, OH, OW, stride)
            dtap += np.moveaxis(np.tensordot(w[:, :, kh, kw], dy, axes=([0], [1])), 0, 1)
    db = dy.sum(axis=(0, 2, 3))
    return dxp, dw, db


def conv2d_forward(x: np.ndarray, w: np.ndarray, b: np.ndarray,
                   stride: int = 1, padding: int = 0) -> np.ndarray:
    """Valid cross-correlation of x[B,C,H,W] with kernels w[F,C,KH,KW] plus bias."""
    if stride < 1:
        raise ValueError(f"stride must be >= 1, got {stride}")
    xp = _pad(x, padding)
    B, C, H, W = xp.shape
    F, CW, KH, KW = w.shape
    if CW != C:
        raise ValueError(f"kernel expects {CW} input channels, input has {C}")
    if H < KH or W < KW:
        raise ValueError(f"input {H}x{W} smaller than kernel {KH}x{KW}")
    xp = np.ascontiguousarray(xp)
    w = np.ascontiguousarray(w)
    b = np.ascontiguousarray(b)
    if USING_NUMBA:
        return _conv2d_fwd_numba(xp, w, b, stride)
    return _conv2d_fwd_numpy(xp, w, b, stride)


def conv2d_backward(x: np.ndarray, w: np.ndarray, dy: np.ndarray,
                    stride: int = 1, padding: int = 0):
    """Gradients (dx, dw, db) of conv2d_forward for upstream gradient dy."""
    xp = np.ascontiguousarray(_pad(x, padding))
    w = np.ascontiguousarray(w)
    dy = np.ascontiguousarray(dy)
    if USING_NUMBA:
        dxp, dw, db = _conv2d_bwd_numba(xp, w, dy, stride)
    else:
        dxp, dw, db = _conv2d_bwd_numpy(xp, w, dy, stride)
    if padding:
        dxp = dxp[:, :, padding:-padding, padding:-padding]
    return dxp, dw, db


def _pad(x: np.ndarray, padding: int) -> np.ndarray:
    if padding == 0:
        return x
    if padding < 0:
        raise ValueError(f"padding must be >= 0, got {padding}")
    return np.pad(x, ((0, 0), (0, 0), (padding, padding), (padding, padding)))


# ---------------------------------------------------------------------------
# 2x2 max pooling, stride 2; ties go to the first element in row-major
# window order (0,0), (0,1), (1,0), (1,1)
# ---------------------------------------------------------------------------

@njit(cache=True)
def _maxpool2_fwd_numba(x):
    B, C, H, W = x.shape
    OH, OW = H // 2, W // 2
    y = np.empty((B, C, OH, OW))
    arg = np.empty((B, C, OH, OW), dtype=np.uint8)
    for bi in range(B):
        for c in range(C):
            for oh in range(OH):
                for ow in range(OW):
                    best = x[bi, c, 2 * oh, 2 * ow]
                    bidx = np.uint8(0)
                    k = 0
                    for kh in range(2):
                        for kw in range(2):
                            v = x[bi, c, 2 * oh + kh, 2 * ow + kw]
                            if v > best:
                                best = v
                                bidx = np.uint8(k)
                            k += 1
                    y[bi, c, oh, ow] = best
                    arg[bi, c, oh, ow] = bidx
    return y, arg


@njit(cache=True)
def _maxpool2_bwd_numba(arg, dy):
    B, C, OH, OW = dy.shape
    dx = np.zeros((B, C, OH * 2, OW * 2))
    for bi in range(B):
        for c in range(C):
            for oh in range(OH):
                for ow in range(OW):
                    k = arg[bi, c, oh, ow]
                    dx[bi, c, 2 * oh + k // 2, 2 * ow + k % 2] = dy[bi, c, oh, ow]
    return dx


def _windows(x):
    B, C, H, W = x.shape
    OH, OW = H // 2, W // 2
    return (x.reshape(B, C, OH, 2, OW, 2)
             .transpose(0, 1, 2, 4, 3, 5)
             .reshape(B, C, OH, OW, 4))


def _maxpool2_fwd_numpy(x):
    win = _windows(x)
    arg = win.argmax(axis=-1).astype(np.uint8)  # argmax keeps the first max
    y = np.take_along_axis(win, arg[..., None].astype(np.intp), axis=-1)[..., 0]
    return y, arg


def _maxpool2_bwd_numpy(arg, dy):
    B, C, OH, OW = dy.shape
    dwin = np.zeros((B, C, OH, OW, 4))
    np.put_along_axis(dwin, arg[..., None].astype(np.intp), dy[..., None], axis=-1)
    return (dwin.reshape(B, C, OH, OW, 2, 2)
                .transpose(0, 1, 2, 4, 3, 5)
                .reshape(B, C, OH * 2, OW * 2))


def maxpool2_forward(x: np.ndarray):
    """2x2/stride-2 max pool of x[B,C,H,W]; returns (pooled, argmax indices)."""
    B, C, H, W = x.shape
    if H % 2 or W % 2:
        raise ValueError(f"maxpool2 needs even spatial extents, got {H}x{W}")
    x = np.ascontiguousarray(x)
    if USING_NUMBA:
        return _maxpool2_fwd_numba(x)
    return _maxpool2_fwd_numpy(x)


def maxpool2_backward(arg: np.ndarray, dy: np.ndarray) -> np.ndarray:
    """Route dy back to the argmax positions recorded by maxpool2_forward."""
    dy = np.ascontiguousarray(dy)
    if USING_NUMBA:
        return _maxpool2_bwd_numba(arg, dy)
    return _maxpool2_bwd_numpy(arg, dy)


# ---------------------------------------------------------------------------
# Cyclic Jacobi eigensolver for real symmetric matrices
# ---------------------------------------------------------------------------

_JACOBI_MAX_SWEEPS = 64


@njit(cache=True)
def _jacobi_numba(a, tol):
    n = a.shape[0]
    for sweep in range(_JACOBI_MAX_SWEEPS):
        off = 0.0
        for p in range(n - 1):
            for q in range(p + 1, n):
                off += a[p, q] * a[p, q]
        if np.sqrt(2.0 * off) <= tol:
            return sweep
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[p, q]
                if apq == 0.0:
                    continue
                tau = (a[q, q] - a[p, p]) / (2.0 * apq)
                if tau >= 0.0:
                    t = 1.0 / (tau + np.sqrt(1.0 + tau * tau))
                else:
                    t = -1.0 / (-tau + np.sqrt(1.0 + tau * tau))
                c = 1.0 / np.sqrt(1.0 + t * t)
                s = t * c
                app = a[p, p]
                aqq = a[q, q]
                a[p, p] = app - t * apq
                a[q, q] = aqq + t * apq
                a[p, q] = 0.0
                a[q, p] = 0.0
                for k in range(n):
                    if k != p and k != q:
                        akp = a[k, p]
                        akq = a[k, q]
                        a[k, p] = c * akp - s * akq
                        a[k, q] = s * akp + c * akq
                        a[p, k] = a[k, p]
                        a[q, k] = a[k, q]
    return -1


def _jacobi_numpy(a, tol):
    n = a.shape[0]
    idx = np.arange(n)
    for sweep in range(_JACOBI_MAX_SWEEPS):
        off = np.sqrt(2.0 * (np.triu(a, 1) ** 2).sum())
        if off <= tol:
            return sweep
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[p, q]
                if apq == 0.0:
                    continue
                tau = (a[q, q] - a[p, p]) / (2.0 * apq)
                t = np.sign(tau) if tau else 1.0
                t = t / (abs(tau) + np.sqrt(1.0 + tau * tau))
                c = 1.0 / np.sqrt(1.0 + t * t)
                s = t * c
                app, aqq = a[p, p], a[q, q]
                mask = (idx != p) & (idx != q)
                akp = a[mask, p].copy()
                akq = a[mask, q].copy()
                a[mask, p] = c * akp - s * akq
                a[mask, q] = s * akp + c * akq
                a[p, mask] = a[mask, p]
                a[q, mask] = a[mask, q]
                a[p, p] = app - t * apq
                a[q, q] = aqq + t * apq
                a[p, q] = 0.0
                a[q, p] = 0.0
    return -1


def jacobi_eigvalsh(sym: np.ndarray) -> np.ndarray:
    """Eigenvalues (ascending) of a real symmetric matrix via cyclic Jacobi.

    Accurate to ~1e-12 relative to the matrix norm; raises NumericalError if
    the off-diagonal norm has not vanished after the sweep budget.
    """
    a = np.array(sym, dtype=np.float64, order="C")
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {a.shape}")
    n = a.shape[0]
    if n == 1:
        return a[0, :1].copy()
    scale = np.abs(a).max()
    if scale == 0.0:
        return np.zeros(n)
    tol = 1e-14 * scale * n
    sweeps = _jacobi_numba(a, tol) if USING_NUMBA else _jacobi_numpy(a, tol)
    if sweeps < 0:
        raise NumericalError(
            f"Jacobi eigensolver did not converge in {_JACOBI_MAX_SWEEPS} sweeps (dim {n})"
        )
    vals = np.sort(np.diag(a))
    return vals
