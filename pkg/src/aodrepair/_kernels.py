"""Compiled inner loops. Kept free of Python objects so numba can lower them."""

import numpy as np
from numba import njit


@njit(cache=True)
def _rescan(M, s, v, c):
    best = M[s]
    used = 0
    for up in range(1, c + 1):
        t = s - up * v
        if t < 0:
            break
        if M[t] >= 0 and M[t] + up > best:
            best = M[t] + up
            used = up
    return best, used


@njit(cache=True)
def sum_pack_kernel(values, counts, total, check):
    """Histogram knapsack over distinct positive ``values`` with multiplicities ``counts``.

    Returns ``(M, D, bad)``: ``M[s]`` is the largest subset size with sum ``s``
    (-1 when unreachable) and ``D[j, s]`` the copies of ``values[j]`` used by
    that subset. Unless every copy of ``values[j]`` is already used at
    ``s - v``, the best choice at ``s`` is either no copy or one more copy
    than at ``s - v``, so each cell costs O(1). With ``check`` set, each such
    cell is compared against a full rescan and ``bad`` counts disagreements.
    """
    m = values.shape[0]
    M = np.full(total + 1, -1, np.int64)
    M[0] = 0
    D = np.zeros((m, total + 1), np.int32)
    reach = 0
    bad = 0
    for j in range(m):
        v = values[j]
        c = counts[j]
        reach += v * c
        Mn = M.copy()
        for s in range(v, reach + 1):
            u = D[j, s - v]
            if u == c:
                best, used = _rescan(M, s, v, c)
                Mn[s] = best
                D[j, s] = used
            else:
                s_prev = s - (u + 1) * v
                if M[s_prev] >= 0 and M[s_prev] + u + 1 > M[s]:
                    Mn[s] = M[s_prev] + u + 1
                    D[j, s] = u + 1
                if check:
                    best, _ = _rescan(M, s, v, c)
                    if best != Mn[s]:
                        bad += 1
        M = Mn
    return M, D, bad
