"""Compiled inner loops.

Everything here is numba ``nopython`` code operating on plain arrays. Graphs
arrive either as ``uint64`` neighbour bitsets (``adj[v]`` has bit ``u`` set
when ``{u, v}`` is an edge; requires ``n <= 64``) or in CSR form
(``indptr``, ``indices``).

Randomness comes from a SplitMix64 stream held in a one-element ``uint64``
array, so results are identical on every platform and independent of numba's
own generator state.
"""

from __future__ import annotations

import numpy as np
from llvmlite import ir
from numba import njit, types
from numba.extending import intrinsic

# ---------------------------------------------------------------------------
# bit primitives


@intrinsic
def popcount64(typingctx, x):
    sig = types.uint64(types.uint64)

    def codegen(context, builder, signature, args):
        fn = builder.module.declare_intrinsic("llvm.ctpop", [ir.IntType(64)])
        return builder.call(fn, args)

    return sig, codegen


@intrinsic
def cttz64(typingctx, x):
    sig = types.uint64(types.uint64)

    def codegen(context, builder, signature, args):
        fn = builder.module.declare_intrinsic("llvm.cttz", [ir.IntType(64), ir.IntType(1)])
        return builder.call(fn, [args[0], ir.Constant(ir.IntType(1), 0)])

    return sig, codegen


_ONE = np.uint64(1)
_ZERO = np.uint64(0)


# ---------------------------------------------------------------------------
# SplitMix64 stream


@njit(cache=True, inline="always")
def _next_u64(state):
    state[0] += np.uint64(0x9E3779B97F4A7C15)
    z = state[0]
    z = (z ^ (z >> np.uint64(30))) * np.uint64(0xBF58476D1CE4E5B9)
    z = (z ^ (z >> np.uint64(27))) * np.uint64(0x94D049BB133111EB)
    return z ^ (z >> np.uint64(31))


@njit(cache=True, inline="always")
def _uniform(state):
    return np.float64(_next_u64(state) >> np.uint64(11)) * (1.0 / 9007199254740992.0)


@njit(cache=True, inline="always")
def _randint(state, bound):
    # multiply-shift on the top 32 bits; bias is below 2^-32 * bound
    hi = _next_u64(state) >> np.uint64(32)
    return np.int64((hi * np.uint64(bound)) >> np.uint64(32))


@njit(cache=True)
def new_stream(seed):
    st = np.zeros(1, np.uint64)
    st[0] = np.uint64(seed)
    return st


# ---------------------------------------------------------------------------
# 2-cut enumeration over complement-identified configurations


@njit(cache=True, inline="always")
def _gray(i):
    return i ^ (i >> _ONE)


@njit(cache=True)
def cut_of_mask(adj, n, side):
    """Cut value of the bipartition whose side-1 vertices are the bits of ``side``."""
    full = (_ONE << np.uint64(n)) - _ONE if n < 64 else ~_ZERO
    other = ~side & full
    total = 0
    for v in range(n):
        if (side >> np.uint64(v)) & _ONE:
            total += np.int64(popcount64(adj[v] & other))
    return total


@njit(cache=True, nogil=True)
def gray_walk(adj, n, start, stop, counts, check_every):
    """Walk configuration indices ``start .. stop-1`` in Gray-code order.

    Vertex 0 is pinned to side 0; bit ``j`` of the Gray code places vertex
    ``j + 1``. Tallies cut values into ``counts`` and returns
    ``(best_value, best_mask, mismatches)``. ``check_every`` must be a power
    of two; at every multiple the incremental cut is recomputed from scratch
    and disagreements are counted in ``mismatches``.
    """
    s = np.uint64(start)
    state = _gray(s) << _ONE
    cut = cut_of_mask(adj, n, state)
    counts[cut] += 1
    best = cut
    best_state = state
    mismatches = 0
    chk = np.uint64(check_every - 1)
    for i in range(start + 1, stop):
        ui = np.uint64(i)
        v = cttz64(ui) + _ONE
        a = adj[v]
        # neighbours currently on the same side as v
        flip = _ZERO - ((state >> v) & _ONE)
        same = popcount64(a & ~(state ^ flip))
        cut += 2 * np.int64(same) - np.int64(popcount64(a))
        state ^= _ONE << v
        counts[cut] += 1
        if cut > best:
            best = cut
            best_state = state
        if (ui & chk) == _ZERO:
            if cut_of_mask(adj, n, state) != cut:
                mismatches += 1
    return best, best_state, mismatches


# ---------------------------------------------------------------------------
# branch and bound for Max-k-Cut (resumable)


@njit(cache=True, nogil=True)
def bnb_run(adj, order, k, lab, cross, rem, maxused, masks, assigned_arr,
            depth_arr, best_arr, best_labels, node_budget):
    """Advance the depth-first search by at most ``node_budget`` nodes.

    The search state lives entirely in the passed arrays, so the caller can
    stop and resume between calls. ``lab[d]`` is the last label tried at depth
    ``d`` (``-1`` for none); ``assigned_arr[0]`` is the assigned-vertex bitset
    and ``depth_arr[0]`` the current depth (``-1`` once finished).
    Returns ``(nodes_explored_this_call, finished)``.
    """
    n = order.shape[0]
    d = depth_arr[0]
    assigned = assigned_arr[0]
    best = best_arr[0]
    nodes = 0
    while d >= 0:
        if nodes >= node_budget:
            assigned_arr[0] = assigned
            depth_arr[0] = d
            best_arr[0] = best
            return nodes, False
        v = np.uint64(order[d])
        bit = _ONE << v
        if (assigned & bit) != _ZERO:
            masks[lab[d]] &= ~bit
            assigned &= ~bit
        lab[d] += 1
        c = lab[d]
        limit = maxused[d] + 1
        if limit > k - 1:
            limit = k - 1
        if c > limit:
            lab[d] = -1
            d -= 1
            continue
        nodes += 1
        a = adj[v]
        assigned_nb = np.int64(popcount64(a & assigned))
        same = np.int64(popcount64(a & masks[c]))
        new_cross = cross[d] + assigned_nb - same
        new_rem = rem[d] - assigned_nb
        if new_cross + new_rem <= best:
            continue
        if d == n - 1:
            best = new_cross
            for j in range(n - 1):
                best_labels[order[j]] = lab[j]
            best_labels[order[d]] = c
            continue
        masks[c] |= bit
        assigned |= bit
        cross[d + 1] = new_cross
        rem[d + 1] = new_rem
        maxused[d + 1] = maxused[d] if maxused[d] > c else c
        lab[d + 1] = -1
        d += 1
    assigned_arr[0] = assigned
    depth_arr[0] = -1
    best_arr[0] = best
    return nodes, True


# ---------------------------------------------------------------------------
# label-table helpers for the k-way local search


@njit(cache=True)
def label_table(indptr, indices, labels, k):
    """``table[v, c]`` = number of neighbours of ``v`` carrying label ``c``."""
    n = indptr.shape[0] - 1
    table = np.zeros((n, k), np.int64)
    for v in range(n):
        for p in range(indptr[v], indptr[v + 1]):
            table[v, labels[indices[p]]] += 1
    return table


@njit(cache=True)
def kcut_value(indptr, indices, labels):
    n = indptr.shape[0] - 1
    total = 0
    for v in range(n):
        for p in range(indptr[v], indptr[v + 1]):
            u = indices[p]
            if u > v and labels[u] != labels[v]:
                total += 1
    return total


@njit(cache=True, inline="always")
def _move(indptr, indices, table, labels, v, new):
    old = labels[v]
    for p in range(indptr[v], indptr[v + 1]):
        u = indices[p]
        table[u, old] -= 1
        table[u, new] += 1
    labels[v] = new


@njit(cache=True, nogil=True)
def sa_kernel(indptr, indices, k, t_initial, t_final, cooling, moves_per_t, seed, check):
    """Simulated annealing on k-way labels. Returns (best, best_labels, trace, moves, bad, worse)."""
    n = indptr.shape[0] - 1
    rng = new_stream(seed)
    labels = np.empty(n, np.int64)
    for v in range(n):
        labels[v] = _randint(rng, k)
    table = label_table(indptr, indices, labels, k)
    cut = kcut_value(indptr, indices, labels)
    best = cut
    best_labels = labels.copy()
    levels = 1
    t = t_initial
    while t * cooling >= t_final:
        t *= cooling
        levels += 1
    trace = np.empty(levels, np.int64)
    bad = 0
    worse = 0
    moves = 0
    t = t_initial
    for lvl in range(levels):
        for _ in range(moves_per_t):
            moves += 1
            v = _randint(rng, n)
            old = labels[v]
            new = _randint(rng, k - 1)
            if new >= old:
                new += 1
            delta = table[v, old] - table[v, new]
            if delta >= 0 or _uniform(rng) < np.exp(delta / t):
                if delta < 0:
                    worse += 1
                _move(indptr, indices, table, labels, v, new)
                cut += delta
                if check and kcut_value(indptr, indices, labels) != cut:
                    bad += 1
                if cut > best:
                    best = cut
                    best_labels[:] = labels
        trace[lvl] = best
        t *= cooling
    return best, best_labels, trace, moves, bad, worse


@njit(cache=True, nogil=True)
def tabu_kernel(indptr, indices, k, m, tenure, max_iter, seed, check):
    """Best-improvement tabu search with aspiration. Returns (best, best_labels, trace, iters, bad)."""
    n = indptr.shape[0] - 1
    rng = new_stream(seed)
    labels = np.empty(n, np.int64)
    for v in range(n):
        labels[v] = _randint(rng, k)
    table = label_table(indptr, indices, labels, k)
    cut = kcut_value(indptr, indices, labels)
    best = cut
    best_labels = labels.copy()
    tabu_until = np.zeros((n, k), np.int64)
    trace = np.empty(max_iter, np.int64)
    bad = 0
    it = 0
    while it < max_iter and best < m:
        sel_v = -1
        sel_c = -1
        sel_d = np.int64(-(1 << 62))
        for v in range(n):
            old = labels[v]
            for c in range(k):
                if c == old:
                    continue
                delta = table[v, old] - table[v, c]
                if tabu_until[v, c] > it and cut + delta <= best:
                    continue
                if delta > sel_d:
                    sel_d = delta
                    sel_v = v
                    sel_c = c
        if sel_v < 0:
            break
        old = labels[sel_v]
        _move(indptr, indices, table, labels, sel_v, sel_c)
        cut += sel_d
        if check and kcut_value(indptr, indices, labels) != cut:
            bad += 1
        tabu_until[sel_v, old] = it + 1 + tenure
        if cut > best:
            best = cut
            best_labels[:] = labels
        trace[it] = best
        it += 1
    return best, best_labels, trace[:it], it, bad


# ---------------------------------------------------------------------------
# Metropolis chain over 2-cut configurations


@njit(cache=True, nogil=True)
def metropolis_kernel(indptr, indices, beta, n_samples, burn_in, thinning, seed, record_states):
    """Single-spin-flip Metropolis targeting exp(beta * cut).

    Proposals pick one of the n vertices or a null move uniformly.

    Returns ``(cuts, states, accepted)``; ``states`` holds the packed spin
    configuration after every step when ``record_states`` is set (n <= 62),
    otherwise it is empty.
    """
    n = indptr.shape[0] - 1
    rng = new_stream(seed)
    spins = np.empty(n, np.int64)
    for v in range(n):
        spins[v] = _randint(rng, 2)
    cut = 0
    for v in range(n):
        for p in range(indptr[v], indptr[v + 1]):
            u = indices[p]
            if u > v and spins[u] != spins[v]:
                cut += 1
    total_steps = burn_in + n_samples * thinning
    cuts = np.empty(n_samples, np.int64)
    if record_states:
        states = np.empty(total_steps, np.int64)
        packed = np.int64(0)
        for v in range(n):
            packed |= spins[v] << v
    else:
        states = np.empty(0, np.int64)
        packed = np.int64(0)
    accepted = 0
    rec = 0
    for step in range(total_steps):
        # index n is a null move; it keeps the chain aperiodic at beta = 0,
        # where every flip would otherwise be accepted and parity would lock
        v = _randint(rng, n + 1)
        if v == n:
            if record_states:
                states[step] = packed
            if step >= burn_in and (step - burn_in + 1) % thinning == 0:
                cuts[rec] = cut
                rec += 1
            continue
        same = 0
        deg = indptr[v + 1] - indptr[v]
        for p in range(indptr[v], indptr[v + 1]):
            if spins[indices[p]] == spins[v]:
                same += 1
        delta = 2 * same - deg
        if delta >= 0 or _uniform(rng) < np.exp(beta * delta):
            spins[v] ^= 1
            cut += delta
            accepted += 1
            if record_states:
                packed ^= np.int64(1) << v
        if record_states:
            states[step] = packed
        if step >= burn_in and (step - burn_in + 1) % thinning == 0:
            cuts[rec] = cut
            rec += 1
    return cuts, states, accepted


# ---------------------------------------------------------------------------
# uniform Monte-Carlo over ordered k-way labellings


@njit(cache=True, nogil=True)
def mc_tally(adj, n, m, k, samples, seed, counts):
    """Tally cut values of ``samples`` uniform labellings into ``counts``."""
    rng = new_stream(seed)
    masks = np.zeros(k, np.uint64)
    labels = np.empty(n, np.int64)
    for _ in range(samples):
        for c in range(k):
            masks[c] = _ZERO
        for v in range(n):
            c = _randint(rng, k)
            labels[v] = c
            masks[c] |= _ONE << np.uint64(v)
        internal2 = 0
        for v in range(n):
            internal2 += np.int64(popcount64(adj[v] & masks[labels[v]]))
        counts[m - internal2 // 2] += 1
