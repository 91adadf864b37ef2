"""Compiled inner loops of the grid oracle.

All kernels work on compact in-body indices and a symmetric weighted graph:
``adj[i, s]`` is the ``s``-th neighbour of cell ``i`` (or -1 for padding)
and ``aw[i, s]`` the weight of that edge. The cut value of a 0/1 state is the
sum of weights of edges joining an occupied and an unoccupied cell.
"""

from __future__ import annotations

import numpy as np
from numba import njit


@njit(cache=True, nogil=True)
def cut_value(state, nbr, aw):
    """Sum of edge weights across the interface, each edge counted from its occupied end."""
    total = 0.0
    for i in range(nbr.shape[0]):
        if state[i]:
            for k in range(nbr.shape[1]):
                j = nbr[i, k]
                if j >= 0 and state[j] == 0:
                    total += aw[i, k]
    return total


@njit(cache=True, nogil=True)
def _flip_delta(state, i, nbr, aw):
    s = state[i]
    d = 0.0
    for k in range(nbr.shape[1]):
        j = nbr[i, k]
        if j >= 0:
            if state[j] == s:
                d += aw[i, k]
            else:
                d -= aw[i, k]
    return d


@njit(cache=True, nogil=True)
def _on_interface(state, i, nbr):
    s = state[i]
    for k in range(nbr.shape[1]):
        j = nbr[i, k]
        if j >= 0 and state[j] != s:
            return True
    return False


@njit(cache=True, nogil=True)
def _refresh(c, state, diff, lists, sizes, where, slot):
    """Keep cell c in the interface list of its state iff it has a differing neighbour."""
    want = state[c] if diff[c] > 0 else -1
    have = where[c]
    if have == want:
        return
    if have >= 0:
        last = lists[have, sizes[have] - 1]
        lists[have, slot[c]] = last
        slot[last] = slot[c]
        sizes[have] -= 1
    if want >= 0:
        lists[want, sizes[want]] = c
        slot[c] = sizes[want]
        sizes[want] += 1
    where[c] = want


@njit(cache=True, nogil=True)
def _flip(state, diff, i, nbr, lists, sizes, where, slot):
    """Flip cell i, updating differing-neighbour counts and interface lists."""
    s = state[i]
    state[i] = 1 - s
    for k in range(nbr.shape[1]):
        j = nbr[i, k]
        if j >= 0:
            if state[j] == s:
                diff[j] += 1
                diff[i] += 1
            else:
                diff[j] -= 1
                diff[i] -= 1
            _refresh(j, state, diff, lists, sizes, where, slot)
    _refresh(i, state, diff, lists, sizes, where, slot)


@njit(cache=True, nogil=True)
def exhaustive(nbr, aw, m):
    """Minimum weighted cut over all size-m subsets (Gosper's hack).

    Returns (mask, value) of the first minimiser in increasing mask order.
    """
    n = nbr.shape[0]
    state = np.zeros(n, dtype=np.uint8)
    mask = (np.int64(1) << m) - 1
    limit = np.int64(1) << n
    best = np.inf
    best_mask = mask
    while mask < limit:
        for i in range(n):
            state[i] = (mask >> i) & 1
        val = cut_value(state, nbr, aw)
        if val < best:
            best = val
            best_mask = mask
        c = mask & -mask
        r = mask + c
        mask = (((r ^ mask) >> 2) // c) | r
    return best_mask, best


@njit(cache=True, nogil=True)
def anneal(state, nbr, aw, t0, cool, sweeps, seed, p_uniform):
    """Fixed-cardinality simulated annealing with swap moves.

    ``state`` is modified in place and ends as the best state seen at a sweep
    boundary. Returns the best weighted cut.
    """
    np.random.seed(seed)
    n = nbr.shape[0]
    m = 0
    for i in range(n):
        m += state[i]
    occ = np.empty(m, dtype=np.int64)
    unocc = np.empty(n - m, dtype=np.int64)
    pos = np.empty(n, dtype=np.int64)
    a = 0
    b = 0
    for i in range(n):
        if state[i]:
            occ[a] = i
            pos[i] = a
            a += 1
        else:
            unocc[b] = i
            pos[i] = b
            b += 1
    diff = np.zeros(n, dtype=np.int64)
    for i in range(n):
        for k in range(nbr.shape[1]):
            j = nbr[i, k]
            if j >= 0 and state[j] != state[i]:
                diff[i] += 1
    # interface cells, row 0 unoccupied and row 1 occupied
    lists = np.empty((2, n), dtype=np.int64)
    sizes = np.zeros(2, dtype=np.int64)
    where = np.full(n, -1, dtype=np.int64)
    slot = np.zeros(n, dtype=np.int64)
    for i in range(n):
        _refresh(i, state, diff, lists, sizes, where, slot)
    best_state = state.copy()
    energy = cut_value(state, nbr, aw)
    best = energy
    if m == 0 or m == n:
        return best
    temp = t0
    for _ in range(sweeps):
        for _ in range(n):
            # pick an occupied and an unoccupied cell, mostly on the interface
            if sizes[1] > 0 and np.random.random() >= p_uniform:
                i = lists[1, np.random.randint(sizes[1])]
            else:
                i = occ[np.random.randint(m)]
            if sizes[0] > 0 and np.random.random() >= p_uniform:
                j = lists[0, np.random.randint(sizes[0])]
            else:
                j = unocc[np.random.randint(n - m)]
            d1 = _flip_delta(state, i, nbr, aw)
            state[i] = 0
            d2 = _flip_delta(state, j, nbr, aw)
            state[i] = 1
            delta = d1 + d2
            if delta <= 0.0 or np.random.random() < np.exp(-delta / temp):
                _flip(state, diff, i, nbr, lists, sizes, where, slot)
                _flip(state, diff, j, nbr, lists, sizes, where, slot)
                pi = pos[i]
                pj = pos[j]
                occ[pi] = j
                pos[j] = pi
                unocc[pj] = i
                pos[i] = pj
        temp *= cool
        energy = cut_value(state, nbr, aw)
        if energy < best:
            best = energy
            best_state[:] = state
    state[:] = best_state
    return best


@njit(cache=True, nogil=True)
def greedy(state, nbr, aw, tol):
    """Apply best strictly improving swaps among interface cells until none is left."""
    n = nbr.shape[0]
    mark = np.zeros(n)
    steps = 0
    while True:
        b1 = np.empty(n, dtype=np.int64)
        b0 = np.empty(n, dtype=np.int64)
        n1 = 0
        n0 = 0
        for i in range(n):
            if _on_interface(state, i, nbr):
                if state[i]:
                    b1[n1] = i
                    n1 += 1
                else:
                    b0[n0] = i
                    n0 += 1
        if n1 == 0 or n0 == 0:
            break
        d0 = np.empty(n0)
        for q in range(n0):
            d0[q] = _flip_delta(state, b0[q], nbr, aw)
        best = -tol
        bi = -1
        bj = -1
        for p in range(n1):
            i = b1[p]
            di = _flip_delta(state, i, nbr, aw)
            for k in range(nbr.shape[1]):
                j = nbr[i, k]
                if j >= 0:
                    mark[j] += 2.0 * aw[i, k]
            for q in range(n0):
                j = b0[q]
                val = di + d0[q] + mark[j]
                if val < best:
                    best = val
                    bi = i
                    bj = j
            for k in range(nbr.shape[1]):
                j = nbr[i, k]
                if j >= 0:
                    mark[j] = 0.0
        if bi < 0:
            break
        state[bi] = 0
        state[bj] = 1
        steps += 1
    return steps
