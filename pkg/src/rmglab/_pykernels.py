"""Pure numpy implementations of the hot kernels.

Same signatures and semantics as the compiled ``_ckernels`` module; used
when the extension is not built or ``RMGLAB_PURE=1`` is set.
"""
import numpy as np


def tv_dual_sorted(P, order, v, sigma):
    """Maximize the TV dual objective over the breakpoints, row by row.

    ``v`` is ``V[order]`` in ascending order; rows of ``P`` are in original
    state order. Returns one value per row.
    """
    Ps = P[:, order]
    # mass strictly above each breakpoint
    tail = np.cumsum(Ps[:, ::-1], axis=1)[:, ::-1]
    tail = np.concatenate([tail[:, 1:], np.zeros((P.shape[0], 1))], axis=1)
    obj = np.cumsum(Ps * v, axis=1) + v * tail - sigma * (v - v[0])
    return obj.max(axis=1)


def sample_cells(U, pol_cdf, actions, i, ker_cdf):
    """Counts of sampled next states and joint actions for every ``(s, a_i)``.

    ``U`` has shape ``(S, A_i, N, n+1)``: column ``j < n`` drives agent j's
    action (column ``i`` is unused since agent i is pinned) and column ``n``
    drives the next state.
    """
    S, A_i, N, _ = U.shape
    n = len(actions)
    J = ker_cdf.shape[1]
    joint = np.zeros((S, A_i, N), dtype=np.int64)
    for j in range(n):
        if j == i:
            aj = np.broadcast_to(np.arange(A_i)[None, :, None], (S, A_i, N))
        else:
            c = pol_cdf[j, :, : actions[j]][:, None, None, :]
            aj = (c <= U[..., j, None]).sum(axis=-1)
        joint = joint * actions[j] + aj
    s_idx = np.broadcast_to(np.arange(S)[:, None, None], (S, A_i, N))
    rows = ker_cdf[s_idx, joint]
    nxt = (rows <= U[..., n, None]).sum(axis=-1)
    cell = (np.arange(S)[:, None] * A_i + np.arange(A_i)[None, :])[:, :, None]
    next_counts = np.bincount((cell * S + nxt).ravel(), minlength=S * A_i * S)
    joint_counts = np.bincount((cell * J + joint).ravel(), minlength=S * A_i * J)
    return (
        next_counts.reshape(S, A_i, S).astype(np.int64),
        joint_counts.reshape(S, A_i, J).astype(np.int64),
    )
