"""Backend selection for the hot kernels.

The compiled extension is used when it imports; ``RMGLAB_PURE=1`` forces
the numpy fallback. ``BACKEND`` names the active one.
"""
import os

import numpy as np

from . import _pykernels

try:
    if os.environ.get("RMGLAB_PURE", "") not in ("", "0"):
        raise ImportError("pure backend requested")
    from . import _ckernels as _impl

    BACKEND = "cython"
except ImportError:
    _impl = _pykernels
    BACKEND = "python"


def get_backend(name=None):
    """Kernel module by name (``"cython"``/``"python"``), default the active one."""
    if name is None:
        return _impl
    if name == "python":
        return _pykernels
    if name == "cython":
        from . import _ckernels

        return _ckernels
    raise ValueError(f"unknown backend {name!r}")


def inverse_cdf_table(rows):
    """Prefix sums of probability rows for inverse-CDF sampling.

    Every entry from the last positive-probability state onwards is set to
    +inf, so the last reachable bucket absorbs floating-point residue.
    """
    rows = np.asarray(rows, dtype=np.float64)
    cdf = np.cumsum(rows, axis=-1)
    positive = rows > 0
    width = rows.shape[-1]
    last = width - 1 - np.argmax(positive[..., ::-1], axis=-1)
    cols = np.arange(width)
    cdf[cols >= last[..., None]] = np.inf
    return np.ascontiguousarray(cdf)


def tv_dual_batch(P, V, sigma, backend=None):
    """TV-ball robust expectation ``inf_{TV(Q,P_r) <= sigma} Q.V`` for every row ``P_r``."""
    impl = get_backend(backend)
    P = np.ascontiguousarray(P, dtype=np.float64)
    V = np.asarray(V, dtype=np.float64)
    lead = P.shape[:-1]
    P2 = P.reshape(-1, P.shape[-1])
    order = np.argsort(V, kind="stable")
    v = np.ascontiguousarray(V[order])
    if v[-1] == v[0] or sigma == 0:
        out = (P2 * V).sum(axis=1)
    else:
        out = np.asarray(impl.tv_dual_sorted(P2, order.astype(np.int_), v, float(sigma)))
    return out.reshape(lead)


def sample_cells(U, pol_cdf, actions, i, ker_cdf, backend=None):
    impl = get_backend(backend)
    return impl.sample_cells(
        np.ascontiguousarray(U, dtype=np.float64),
        np.ascontiguousarray(pol_cdf, dtype=np.float64),
        np.ascontiguousarray(actions, dtype=np.int_),
        int(i),
        np.ascontiguousarray(ker_cdf, dtype=np.float64),
    )


def tv_dual_rows(P, V, sigma):
    """Like :func:`tv_dual_batch` but every row carries its own value vector.

    ``P`` and ``V`` broadcast against each other along the leading axes.
    """
    P, V = np.broadcast_arrays(np.asarray(P, dtype=np.float64), np.asarray(V, dtype=np.float64))
    if sigma == 0:
        return (P * V).sum(axis=-1)
    order = np.argsort(V, axis=-1, kind="stable")
    v = np.take_along_axis(V, order, axis=-1)
    Ps = np.take_along_axis(P, order, axis=-1)
    tail = np.cumsum(Ps[..., ::-1], axis=-1)[..., ::-1]
    tail = np.concatenate([tail[..., 1:], np.zeros(tail.shape[:-1] + (1,))], axis=-1)
    obj = np.cumsum(Ps * v, axis=-1) + v * tail - sigma * (v - v[..., :1])
    return obj.max(axis=-1)
