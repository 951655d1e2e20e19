"""Compiled branch-and-bound kernel for weighted suprema on the torus."""

import numpy as np
from numba import njit


@njit(cache=True)
def block_sup(A, N, n, b, wtab):
    """``out[x] = max_z A[z] * wtab[key(x - z)]`` for a flattened grid ``A``.

    ``key`` is the absolute minimal-image offset for ``n = 1`` and its squared
    length for ``n = 2``.  Points are grouped in blocks of side ``b``; a
    source block is visited only while its maximum times the weight at the
    smallest possible distance can still exceed the current value.
    """
    G = N // b
    nblk = G ** n
    bn = b ** n
    # minimal-image absolute offset for differences in (-N, N)
    mi = np.empty(2 * N, dtype=np.int64)
    for d in range(-N, N):
        e = (d + N + N // 2) % N - N // 2
        mi[d + N] = abs(e)
    members = np.empty((nblk, bn), dtype=np.int64)
    c1 = np.empty((nblk, bn), dtype=np.int64)
    c2 = np.zeros((nblk, bn), dtype=np.int64)
    bx = np.empty(nblk, dtype=np.int64)
    by = np.zeros(nblk, dtype=np.int64)
    for B in range(nblk):
        if n == 1:
            bx[B] = B
            for o in range(b):
                members[B, o] = B * b + o
                c1[B, o] = B * b + o
        else:
            bx[B] = B // G
            by[B] = B % G
            for o1 in range(b):
                for o2 in range(b):
                    k = o1 * b + o2
                    members[B, k] = (bx[B] * b + o1) * N + by[B] * b + o2
                    c1[B, k] = bx[B] * b + o1
                    c2[B, k] = by[B] * b + o2
    MB = np.empty(nblk)
    for B in range(nblk):
        m = 0.0
        for k in range(bn):
            v = A[members[B, k]]
            if v > m:
                m = v
        MB[B] = m
    # per-axis distance from a point coordinate to the nearest point of a block
    pdist = np.empty((N, G), dtype=np.int64)
    for x in range(N):
        for g in range(G):
            best = N
            for o in range(b):
                e = mi[x - (g * b + o) + N]
                if e < best:
                    best = e
            pdist[x, g] = best

    out = A.copy()
    U = np.empty(nblk)
    for X in range(nblk):
        for k in range(bn):
            x1 = c1[X, k]
            x2 = c2[X, k]
            v = out[members[X, k]]
            for e1 in range(-1, 2):
                for e2 in range(-1, 2):
                    if n == 1 and e2 != 0:
                        continue
                    if n == 1:
                        B = (bx[X] + e1 + G) % G
                    else:
                        B = ((bx[X] + e1 + G) % G) * G + (by[X] + e2 + G) % G
                    for kk in range(bn):
                        if n == 1:
                            key = mi[x1 - c1[B, kk] + N]
                        else:
                            d1 = mi[x1 - c1[B, kk] + N]
                            d2 = mi[x2 - c2[B, kk] + N]
                            key = d1 * d1 + d2 * d2
                        cv = A[members[B, kk]] * wtab[key]
                        if cv > v:
                            v = cv
            out[members[X, k]] = v
        low = out[members[X, 0]]
        for k in range(bn):
            if out[members[X, k]] < low:
                low = out[members[X, k]]
        cnt = 0
        for B in range(nblk):
            g1 = (bx[B] - bx[X] + G) % G
            g2 = (by[B] - by[X] + G) % G
            near1 = g1 == 0 or g1 == 1 or g1 == G - 1
            near2 = n == 1 or g2 == 0 or g2 == 1 or g2 == G - 1
            if near1 and near2:
                U[B] = 0.0
                continue
            d1 = N
            d2 = N
            for k in (0, bn - 1):
                e = pdist[c1[X, k], bx[B]]
                if e < d1:
                    d1 = e
                if n == 2:
                    e = pdist[c2[X, k], by[B]]
                    if e < d2:
                        d2 = e
            # the block corners bound the per-axis distance from below
            d1 = max(d1 - (b - 1), 0)
            if n == 1:
                key = d1
            else:
                d2 = max(d2 - (b - 1), 0)
                key = d1 * d1 + d2 * d2
            U[B] = MB[B] * wtab[key]
            if U[B] > low:
                cnt += 1
        if cnt == 0:
            continue
        cand = np.empty(cnt, dtype=np.int64)
        c = 0
        for B in range(nblk):
            if U[B] > low:
                cand[c] = B
                c += 1
        order = np.argsort(-U[cand])
        for k in range(bn):
            x1 = c1[X, k]
            x2 = c2[X, k]
            v = out[members[X, k]]
            for i in range(cnt):
                B = cand[order[i]]
                if U[B] <= v:
                    break
                if n == 1:
                    key = pdist[x1, bx[B]]
                else:
                    d1 = pdist[x1, bx[B]]
                    d2 = pdist[x2, by[B]]
                    key = d1 * d1 + d2 * d2
                if MB[B] * wtab[key] <= v:
                    continue
                for kk in range(bn):
                    if n == 1:
                        key = mi[x1 - c1[B, kk] + N]
                    else:
                        d1 = mi[x1 - c1[B, kk] + N]
                        d2 = mi[x2 - c2[B, kk] + N]
                        key = d1 * d1 + d2 * d2
                    cv = A[members[B, kk]] * wtab[key]
                    if cv > v:
                        v = cv
            out[members[X, k]] = v
    return out
