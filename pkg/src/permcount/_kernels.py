"""Numba-compiled hot loops for the sequential matching sampler.

These mirror the pure-Python state machine in :mod:`permcount.matching`
step for step (same neighbor order, same cumulative-sum edge selection, same
uniform-number consumption), so the two paths produce identical samples from
identical uniform streams.  The tests assert that equivalence; everything
performance-critical runs through here.

Uniform-stream layout per sample: n-1 draws for the visit-order shuffle, then
one draw per committed edge, 2n-1 in total.
"""

from __future__ import annotations

import numpy as np
from numba import njit


@njit(cache=True, nogil=True)
def _tarjan(n, Rp, Ri, match_l, alive_l, alive_r, comp, index, low, onstack, tstack, su, sp):
    """SCC labels of the directed match-graph restricted to live vertices.

    Left vertex i is node i, right vertex j is node n + j.  Arcs: i -> match(i)
    and j -> every live left neighbor of j.  Iterative Tarjan, explicit stack.
    """
    n2 = 2 * n
    for v in range(n2):
        index[v] = -1
        onstack[v] = False
        comp[v] = -1
    counter = 0
    ncomp = 0
    tsp = 0
    for root in range(n2):
        if root < n:
            if not alive_l[root]:
                continue
        else:
            if not alive_r[root - n]:
                continue
        if index[root] != -1:
            continue
        wsp = 0
        su[0] = root
        sp[0] = 0
        while wsp >= 0:
            v = su[wsp]
            pos = sp[wsp]
            if pos == 0:
                index[v] = counter
                low[v] = counter
                counter += 1
                tstack[tsp] = v
                tsp += 1
                onstack[v] = True
            if v < n:
                if pos == 0:
                    sp[wsp] = 1
                    w = n + match_l[v]
                    if index[w] == -1:
                        wsp += 1
                        su[wsp] = w
                        sp[wsp] = 0
                        continue
                    if onstack[w] and index[w] < low[v]:
                        low[v] = index[w]
            else:
                j = v - n
                start = Rp[j]
                end = Rp[j + 1]
                p = start + pos
                advanced = False
                while p < end:
                    w = Ri[p]
                    p += 1
                    if alive_l[w]:
                        if index[w] == -1:
                            sp[wsp] = p - start
                            wsp += 1
                            su[wsp] = w
                            sp[wsp] = 0
                            advanced = True
                            break
                        if onstack[w] and index[w] < low[v]:
                            low[v] = index[w]
                if advanced:
                    continue
            # v is complete: emit its component if it is a root, then pop.
            if low[v] == index[v]:
                while True:
                    w = tstack[tsp - 1]
                    tsp -= 1
                    onstack[w] = False
                    comp[w] = ncomp
                    if w == v:
                        break
                ncomp += 1
            wsp -= 1
            if wsp >= 0 and low[v] < low[su[wsp]]:
                low[su[wsp]] = low[v]
    return ncomp


@njit(cache=True, nogil=True)
def _augment(u0, Lp, Li, alive_r, match_l, match_r, su, sp, sv, vis):
    """One augmenting-path search for Kuhn's algorithm (iterative DFS)."""
    d = 0
    su[0] = u0
    sp[0] = Lp[u0]
    while d >= 0:
        u = su[d]
        p = sp[d]
        advanced = False
        while p < Lp[u + 1]:
            v = Li[p]
            p += 1
            if alive_r[v] and not vis[v]:
                vis[v] = True
                sv[d] = v
                sp[d] = p
                if match_r[v] == -1:
                    for t in range(d, -1, -1):
                        match_l[su[t]] = sv[t]
                        match_r[sv[t]] = su[t]
                    return True
                d += 1
                su[d] = match_r[v]
                sp[d] = Lp[match_r[v]]
                advanced = True
                break
        if not advanced:
            d -= 1
    return False


@njit(cache=True, nogil=True)
def _kuhn(n, Lp, Li, alive_l, alive_r, match_l, match_r, su, sp, sv, vis):
    """Perfect matching on the live subgraph; returns False if none exists."""
    for u in range(n):
        if alive_l[u] and match_l[u] == -1:
            for j in range(n):
                vis[j] = False
            if not _augment(u, Lp, Li, alive_r, match_l, match_r, su, sp, sv, vis):
                return False
    return True


@njit(cache=True, nogil=True)
def _rotate(n, Rp, Ri, match_l, match_r, alive_l, comp, x, sel, su, sp, vis):
    """Rotate the carried matching along a directed cycle so that x pairs with sel."""
    c = comp[x]
    target = match_r[sel]
    for i in range(n):
        vis[i] = False
    vis[x] = True
    d = 0
    su[0] = x
    sp[0] = Rp[match_l[x]]
    found = False
    while d >= 0:
        u = su[d]
        y = match_l[u]
        p = sp[d]
        advanced = False
        while p < Rp[y + 1]:
            w = Ri[p]
            p += 1
            if alive_l[w] and not vis[w] and comp[w] == c:
                vis[w] = True
                sp[d] = p
                d += 1
                su[d] = w
                sp[d] = Rp[match_l[w]]
                if w == target:
                    found = True
                advanced = True
                break
        if found:
            break
        if not advanced:
            d -= 1
    # su[0..d] is the alternating path; shift partners backwards along it.
    for j in range(d, 0, -1):
        ym = match_l[su[j - 1]]
        match_l[su[j]] = ym
        match_r[ym] = su[j]
    match_l[x] = sel
    match_r[sel] = x


@njit(cache=True, nogil=True)
def _sample_one(
    n, Lp, Li, Rp, Ri, Q, match_l0, match_r0, U, out_match,
    match_l, match_r, alive_l, alive_r, comp, index, low, onstack, tstack, su, sp, pi, nb, vis,
):
    """Draw one perfect matching; returns its log sampling probability (nan on failure)."""
    for i in range(n):
        match_l[i] = match_l0[i]
        match_r[i] = match_r0[i]
        alive_l[i] = True
        alive_r[i] = True
        pi[i] = i
    upos = 0
    for i in range(n - 1, 0, -1):
        j = int(U[upos] * (i + 1))
        upos += 1
        if j > i:
            j = i
        t = pi[i]
        pi[i] = pi[j]
        pi[j] = t
    logp = 0.0
    for step in range(n):
        x = pi[step]
        _tarjan(n, Rp, Ri, match_l, alive_l, alive_r, comp, index, low, onstack, tstack, su, sp)
        c = comp[x]
        cnt = 0
        total = 0.0
        for p in range(Lp[x], Lp[x + 1]):
            y = Li[p]
            if alive_r[y] and comp[n + y] == c:
                nb[cnt] = y
                cnt += 1
                total += Q[x, y]
        if cnt == 0:
            return np.nan
        r = U[upos] * total
        upos += 1
        acc = 0.0
        sel = nb[cnt - 1]
        w = Q[x, nb[cnt - 1]]
        for t in range(cnt):
            acc += Q[x, nb[t]]
            if r < acc:
                sel = nb[t]
                w = Q[x, nb[t]]
                break
        logp += np.log(w / total)
        if match_l[x] != sel:
            _rotate(n, Rp, Ri, match_l, match_r, alive_l, comp, x, sel, su, sp, vis)
        alive_l[x] = False
        alive_r[sel] = False
        out_match[x] = sel
    return logp


@njit(cache=True, nogil=True)
def sample_block(n, Lp, Li, Rp, Ri, Q, match_l0, match_r0, U2):
    """Sample one perfect matching per row of U2; returns (log probs, matchings)."""
    m = U2.shape[0]
    logps = np.empty(m, dtype=np.float64)
    matches = np.empty((m, n), dtype=np.int64)
    match_l = np.empty(n, dtype=np.int64)
    match_r = np.empty(n, dtype=np.int64)
    alive_l = np.empty(n, dtype=np.bool_)
    alive_r = np.empty(n, dtype=np.bool_)
    comp = np.empty(2 * n, dtype=np.int64)
    index = np.empty(2 * n, dtype=np.int64)
    low = np.empty(2 * n, dtype=np.int64)
    onstack = np.empty(2 * n, dtype=np.bool_)
    tstack = np.empty(2 * n, dtype=np.int64)
    su = np.empty(2 * n, dtype=np.int64)
    sp = np.empty(2 * n, dtype=np.int64)
    pi = np.empty(n, dtype=np.int64)
    nb = np.empty(n, dtype=np.int64)
    vis = np.empty(n, dtype=np.bool_)
    for s in range(m):
        logps[s] = _sample_one(
            n, Lp, Li, Rp, Ri, Q, match_l0, match_r0, U2[s], matches[s],
            match_l, match_r, alive_l, alive_r, comp, index, low, onstack,
            tstack, su, sp, pi, nb, vis,
        )
    return logps, matches


@njit(cache=True, nogil=True)
def latin_block(n, k, U2):
    """Sample Latin rectangles row by row from K_{n,n}.

    Each row of U2 holds k * (2n - 1) uniforms for one rectangle.  After each
    sampled row the matched edges are removed; the residual stays regular, so
    the doubly stochastic scaling is uniform on its edges and the sampler can
    run directly on the 0/1 residual weights.

    Returns (log weights, odd-permutation row counts, rectangles).
    """
    m = U2.shape[0]
    logws = np.empty(m, dtype=np.float64)
    odds = np.zeros(m, dtype=np.int64)
    rects = np.empty((m, k, n), dtype=np.int64)
    stride = 2 * n - 1
    Q = np.ones((n, n), dtype=np.float64)
    adj = np.empty((n, n), dtype=np.uint8)
    Lp = np.empty(n + 1, dtype=np.int64)
    Li = np.empty(n * n, dtype=np.int64)
    Rp = np.empty(n + 1, dtype=np.int64)
    Ri = np.empty(n * n, dtype=np.int64)
    match_l0 = np.empty(n, dtype=np.int64)
    match_r0 = np.empty(n, dtype=np.int64)
    match_l = np.empty(n, dtype=np.int64)
    match_r = np.empty(n, dtype=np.int64)
    alive_l = np.empty(n, dtype=np.bool_)
    alive_r = np.empty(n, dtype=np.bool_)
    comp = np.empty(2 * n, dtype=np.int64)
    index = np.empty(2 * n, dtype=np.int64)
    low = np.empty(2 * n, dtype=np.int64)
    onstack = np.empty(2 * n, dtype=np.bool_)
    tstack = np.empty(2 * n, dtype=np.int64)
    su = np.empty(2 * n, dtype=np.int64)
    sp = np.empty(2 * n, dtype=np.int64)
    sv = np.empty(n, dtype=np.int64)
    pi = np.empty(n, dtype=np.int64)
    nb = np.empty(n, dtype=np.int64)
    vis = np.empty(n, dtype=np.bool_)
    seen = np.empty(n, dtype=np.bool_)
    for s in range(m):
        for i in range(n):
            for j in range(n):
                adj[i, j] = 1
        logw = 0.0
        for row in range(k):
            # CSR views of the current residual.
            pos = 0
            for i in range(n):
                Lp[i] = pos
                for j in range(n):
                    if adj[i, j]:
                        Li[pos] = j
                        pos += 1
            Lp[n] = pos
            pos = 0
            for j in range(n):
                Rp[j] = pos
                for i in range(n):
                    if adj[i, j]:
                        Ri[pos] = i
                        pos += 1
            Rp[n] = pos
            for i in range(n):
                match_l0[i] = -1
                match_r0[i] = -1
                alive_l[i] = True
                alive_r[i] = True
            _kuhn(n, Lp, Li, alive_l, alive_r, match_l0, match_r0, su, sp, sv, vis)
            logp = _sample_one(
                n, Lp, Li, Rp, Ri, Q, match_l0, match_r0,
                U2[s, row * stride : (row + 1) * stride], rects[s, row],
                match_l, match_r, alive_l, alive_r, comp, index, low, onstack,
                tstack, su, sp, pi, nb, vis,
            )
            logw -= logp
            parity_cycles = 0
            for i in range(n):
                seen[i] = False
            for i in range(n):
                if not seen[i]:
                    parity_cycles += 1
                    j = i
                    while not seen[j]:
                        seen[j] = True
                        j = rects[s, row, j]
            if (n - parity_cycles) % 2 == 1:
                odds[s] += 1
            for i in range(n):
                adj[i, rects[s, row, i]] = 0
        logws[s] = logw
    return logws, odds, rects
