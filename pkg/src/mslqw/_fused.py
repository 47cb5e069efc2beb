"""Single-pass compiled evolution loop used by ``run_walk``.

Each step reads the state once and writes the next state once: oracle sign,
coin reflection and shift are folded into one sweep over the vertices.
"""
import numpy as np
from numba import njit


@njit(cache=True)
def _evolve(A, axis, marked, n, ninv, horizon, series):
    # A is vertex-major here: A[x, c]
    N, d = A.shape
    B = np.empty_like(A)
    nmk = marked.shape[0]
    p = 0.0
    for j in range(nmk):
        for c in range(d):
            p += A[marked[j], c] * A[marked[j], c]
    series[0] = p
    for t in range(horizon):
        for j in range(nmk):
            for c in range(ninv):
                A[marked[j], c] = -A[marked[j], c]
        for x in range(N):
            proj = 0.0
            for c in range(d):
                proj += axis[c] * A[x, c]
            proj *= 2.0
            for c in range(n):
                B[x ^ (1 << c), c] = axis[c] * proj - A[x, c]
            for c in range(n, d):
                B[x, c] = axis[c] * proj - A[x, c]
        A, B = B, A
        p = 0.0
        for j in range(nmk):
            for c in range(d):
                p += A[marked[j], c] * A[marked[j], c]
        series[t + 1] = p
    return A



def evolve(blocks, axis, marked, n, ninv, horizon):
    """Evolve ``blocks`` (coin_dim x N) for ``horizon`` steps.

    Returns the success-probability series and the final state in the same
    coin-major layout as the input.
    """
    series = np.empty(horizon + 1)
    A = np.ascontiguousarray(np.asarray(blocks, dtype=np.float64).T)
    final = _evolve(A, np.ascontiguousarray(axis, dtype=np.float64),
                    np.ascontiguousarray(marked, dtype=np.int64), n, ninv, horizon, series)
    return series, np.ascontiguousarray(final.T)
