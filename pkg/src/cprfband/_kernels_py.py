"""NumPy fallback implementations of the hot kernels.

The compiled extension (``cprfband._kernels``) implements the same
functions with identical semantics; both consume pre-drawn uniform
variates in the same order, so results are bit-for-bit equal across
backends.  See ``cprfband.backend`` for the selection logic.
"""

import numpy as np

BACKEND_NAME = "python"


def _ehrenfest_step(bstate, scounts, t, p, b, delta, u_pick, u_dest):
    """Advance one particle-model step for a batch of branches in place.

    ``bstate``/``scounts`` are (m, p) integer arrays (particles per
    container, splits per direction so far).  Eligibility of a destination
    container j is evaluated with the pre-step split counts:
    p * S_j < t + p * delta.  Returns (chosen directions, fallback count).
    """
    m = bstate.shape[0]
    rows = np.arange(m)

    cum = np.cumsum(bstate, axis=1)
    i = np.argmax(u_pick[:, None] * (p * b) < cum, axis=1)

    elig = (p * scounts) < (t + p * delta)
    elig[rows, i] = False
    n_el = elig.sum(axis=1)
    ecum = np.cumsum(elig, axis=1)
    r = np.floor(u_dest * n_el).astype(np.int64)
    j = np.argmax(ecum > r[:, None], axis=1)

    fb = n_el == 0
    n_fb = int(fb.sum())
    if n_fb:
        masked = scounts[fb].copy()
        masked[np.arange(n_fb), i[fb]] = np.iinfo(np.int64).max
        j[fb] = np.argmin(masked, axis=1)

    scounts[rows, i] += 1
    bstate[rows, i] -= 1
    bstate[rows, j] += 1
    return i, n_fb


def ehrenfest_branches(k, p, b, delta, u):
    """Sample m independent branch split sequences.

    ``u`` has shape (m, k, 2): one (container pick, destination pick)
    uniform pair per step.  Returns (dirs (m, k) int64, fallback count).
    """
    m = u.shape[0]
    dirs = np.zeros((m, k), dtype=np.int64)
    bstate = np.full((m, p), b, dtype=np.int64)
    scounts = np.zeros((m, p), dtype=np.int64)
    fallbacks = 0
    for t in range(k):
        i, nf = _ehrenfest_step(bstate, scounts, t, p, b, delta, u[:, t, 0], u[:, t, 1])
        dirs[:, t] = i
        fallbacks += nf
    return dirs, fallbacks


def ehrenfest_trees(k, p, b, delta, u):
    """Sample m complete depth-k trees, directions in level order.

    ``u`` has shape (m, 2**k - 1, 2), indexed by heap node position.  Both
    children inherit the parent's post-move particle state.  Returns
    (dirs (m, 2**k - 1) int64, fallback count).
    """
    m = u.shape[0]
    n_nodes = 2**k - 1
    dirs = np.zeros((m, n_nodes), dtype=np.int64)
    bstate = np.full((m, 1, p), b, dtype=np.int64)
    scounts = np.zeros((m, 1, p), dtype=np.int64)
    fallbacks = 0
    base = 0
    for t in range(k):
        width = 2**t
        flat_b = bstate.reshape(m * width, p)
        flat_s = scounts.reshape(m * width, p)
        u_pick = np.ascontiguousarray(u[:, base : base + width, 0]).reshape(m * width)
        u_dest = np.ascontiguousarray(u[:, base : base + width, 1]).reshape(m * width)
        i, nf = _ehrenfest_step(flat_b, flat_s, t, p, b, delta, u_pick, u_dest)
        fallbacks += nf
        dirs[:, base : base + width] = i.reshape(m, width)
        # children at heap positions 2q+1, 2q+2 inherit the post state
        if t < k - 1:
            bstate = np.repeat(flat_b.reshape(m, width, p), 2, axis=1)
            scounts = np.repeat(flat_s.reshape(m, width, p), 2, axis=1)
        base += width
    return dirs, fallbacks


def leaf_indices(dirs, bits, k):
    """Leaf index in [0, 2**k) of each point for one tree.

    ``dirs`` is the (2**k - 1,) level-order split-direction array,
    ``bits`` the (m, p) level-k per-axis dyadic cell indices of the points.
    """
    m, p = bits.shape
    if k == 0:
        return np.zeros(m, dtype=np.int64)
    rows = np.arange(m)
    node = np.zeros(m, dtype=np.int64)
    cnt = np.zeros((m, p), dtype=np.int64)
    for _ in range(k):
        d = dirs[node]
        s = cnt[rows, d]
        bit = (bits[rows, d] >> (k - 1 - s)) & 1
        cnt[rows, d] = s + 1
        node = 2 * node + 1 + bit
    return node - (2**k - 1)


def forest_leaf_indices(dirs2d, bits, k):
    """Leaf indices for every (tree, point) pair; shape (N, m)."""
    n_trees = dirs2d.shape[0]
    out = np.empty((n_trees, bits.shape[0]), dtype=np.int64)
    for j in range(n_trees):
        out[j] = leaf_indices(dirs2d[j], bits, k)
    return out


def accumulate_intersections(mins, vols, omega, out):
    """Add each pair's intersection volume to every compatible table entry.

    ``mins`` (n, p): per-axis min split counts of the pairs; ``vols`` (n,):
    the pairs' intersection volumes 2**(-sum max); ``omega`` (M, p): the
    ordered closeness vectors.  Entry i receives vols[pair] whenever
    mins[pair, l] <= omega[i, l] for all l.  Accumulates into ``out`` (M,).
    """
    n, p = mins.shape
    big_m = omega.shape[0]
    step = max(1, 8_000_000 // max(1, big_m * p))
    for lo in range(0, n, step):
        sl = slice(lo, min(lo + step, n))
        ind = (mins[sl, None, :] <= omega[None, :, :]).all(axis=2)
        out += vols[sl] @ ind
    return out
