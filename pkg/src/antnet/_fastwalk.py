"""Compiled single-core engine for the ant process.

The kernel mirrors, draw for draw, the pure-Python reference engine in
``antnet.walks``: one uniform per walk step, one uniform per backward level
of the uniform-geodesic selection, nothing else.  Given the same Philox key
and counter the two engines produce bit-identical weight trajectories,
which the test suite checks.

Variant codes: 0 loop-erased, 1 uniform-geodesic, 2 full-trace,
3 full-trace-with-multiplicity, 4 earliest-crossed-geodesic.
Status codes: 0 ok, 1 walk step cap exceeded, 2 geodesic count overflow
(trace has more than 2^53 geodesics through some vertex).
"""

from __future__ import annotations

import numpy as np
from numba import njit, uint64

from .rng import philox_uniform

MAX_EXACT_COUNT = 9007199254740992  # 2^53; float64 threshold comparisons stay exact


@njit(cache=False)
def run_kernel(inc_ptr, inc_edge, inc_other, nest, food, h_min_g,
               weights, alpha, variant, n_steps, step_cap,
               key0, key1, counter,
               record_steps, rec_weights,
               path_len_out, geo_flag_out, mask_out, reinforce_flag):
    V = inc_ptr.shape[0] - 1
    E = weights.shape[0]
    wpow = np.empty(E, np.float64)
    for e in range(E):
        if alpha == 1.0:
            wpow[e] = np.float64(weights[e])
        else:
            wpow[e] = np.float64(weights[e]) ** alpha
    parent_v = np.empty(V, np.int64)
    parent_e = np.empty(V, np.int64)
    vstamp = np.full(V, -1, np.int64)    # first-visit marks, per step
    estamp = np.full(E, -1, np.int64)    # trace membership marks, per step
    bstamp = np.full(V, -1, np.int64)    # BFS-from-nest marks
    fstamp = np.full(V, -1, np.int64)    # BFS-from-food marks
    efirst = np.empty(E, np.int64)       # first crossing index of an edge
    ecnt = np.zeros(E, np.int64)         # crossing multiplicities
    dist_n = np.empty(V, np.int64)
    dist_f = np.empty(V, np.int64)
    cnt = np.empty(V, np.int64)          # geodesic counts from nest
    order = np.empty(V, np.int64)        # BFS discovery order
    tedges = np.empty(E, np.int64)       # distinct trace edges
    path = np.empty(V, np.int64)
    use_mask = E <= 64
    rec_idx = 0
    n_rec = record_steps.shape[0]
    ctr = uint64(counter)

    for s in range(n_steps):
        # ---- sample one killed walk
        v = nest
        k = 0
        nt = 0
        vstamp[nest] = s
        while v != food:
            if k >= step_cap:
                return 1, s, ctr
            base = inc_ptr[v]
            end = inc_ptr[v + 1]
            tot = 0.0
            for idx in range(base, end):
                tot += wpow[inc_edge[idx]]
            u = philox_uniform(ctr, key0, key1)
            ctr = ctr + uint64(1)
            r = u * tot
            acc = 0.0
            ce = inc_edge[end - 1]
            cu = inc_other[end - 1]
            for idx in range(base, end):
                acc += wpow[inc_edge[idx]]
                if r < acc:
                    ce = inc_edge[idx]
                    cu = inc_other[idx]
                    break
            if estamp[ce] != s:
                estamp[ce] = s
                efirst[ce] = k
                ecnt[ce] = 0
                tedges[nt] = ce
                nt += 1
            ecnt[ce] += 1
            k += 1
            if vstamp[cu] != s:
                vstamp[cu] = s
                parent_v[cu] = v
                parent_e[cu] = ce
            v = cu

        # ---- extract the reinforced set
        plen = 0
        if variant == 0:
            # loop-erasure of the reversed walk == first-arrival tree path
            x = food
            while x != nest:
                path[plen] = parent_e[x]
                plen += 1
                x = parent_v[x]
        elif variant == 1 or variant == 4 or variant == 2 or variant == 3:
            # BFS from nest inside the trace
            head = 0
            tail = 0
            order[tail] = nest
            tail += 1
            bstamp[nest] = s
            dist_n[nest] = 0
            while head < tail:
                x = order[head]
                head += 1
                for idx in range(inc_ptr[x], inc_ptr[x + 1]):
                    if estamp[inc_edge[idx]] == s:
                        y = inc_other[idx]
                        if bstamp[y] != s:
                            bstamp[y] = s
                            dist_n[y] = dist_n[x] + 1
                            order[tail] = y
                            tail += 1
            h = dist_n[food]
            if variant == 2 or variant == 3:
                pass  # the trace itself is reinforced
            elif variant == 1:
                # exact geodesic counts, overflow-guarded
                for i in range(tail):
                    x = order[i]
                    if x == nest:
                        cnt[x] = 1
                        continue
                    c = 0
                    for idx in range(inc_ptr[x], inc_ptr[x + 1]):
                        if estamp[inc_edge[idx]] == s:
                            y = inc_other[idx]
                            if bstamp[y] == s and dist_n[y] == dist_n[x] - 1:
                                c += cnt[y]
                    if c > MAX_EXACT_COUNT:
                        return 2, s, ctr
                    cnt[x] = c
                # proportional backward sampling, one uniform per level
                x = food
                while x != nest:
                    tot = 0.0
                    for idx in range(inc_ptr[x], inc_ptr[x + 1]):
                        if estamp[inc_edge[idx]] == s:
                            y = inc_other[idx]
                            if bstamp[y] == s and dist_n[y] == dist_n[x] - 1 and cnt[y] > 0:
                                tot += cnt[y]
                    u = philox_uniform(ctr, key0, key1)
                    ctr = ctr + uint64(1)
                    r = u * tot
                    acc = 0.0
                    ce = -1
                    cy = -1
                    for idx in range(inc_ptr[x], inc_ptr[x + 1]):
                        if estamp[inc_edge[idx]] == s:
                            y = inc_other[idx]
                            if bstamp[y] == s and dist_n[y] == dist_n[x] - 1 and cnt[y] > 0:
                                ce = inc_edge[idx]
                                cy = y
                                acc += cnt[y]
                                if r < acc:
                                    break
                    path[plen] = ce
                    plen += 1
                    x = cy
            else:
                # earliest-crossed geodesic: BFS from food, then walk back
                # choosing, per level, the earliest-crossed geodesic edge
                head = 0
                tail2 = 0
                order[tail2] = food
                tail2 += 1
                fstamp[food] = s
                dist_f[food] = 0
                while head < tail2:
                    x = order[head]
                    head += 1
                    for idx in range(inc_ptr[x], inc_ptr[x + 1]):
                        if estamp[inc_edge[idx]] == s:
                            y = inc_other[idx]
                            if fstamp[y] != s:
                                fstamp[y] = s
                                dist_f[y] = dist_f[x] + 1
                                order[tail2] = y
                                tail2 += 1
                x = food
                while x != nest:
                    ce = -1
                    cy = -1
                    best = step_cap + 1
                    for idx in range(inc_ptr[x], inc_ptr[x + 1]):
                        e = inc_edge[idx]
                        if estamp[e] == s:
                            y = inc_other[idx]
                            if (bstamp[y] == s and dist_n[y] + 1 == dist_n[x]
                                    and dist_n[y] + 1 + dist_f[x] == h
                                    and efirst[e] < best):
                                best = efirst[e]
                                ce = e
                                cy = y
                    path[plen] = ce
                    plen += 1
                    x = cy

        # ---- bookkeeping and reinforcement
        m = uint64(0)
        if variant == 2 or variant == 3:
            path_len_out[s] = nt if variant == 2 else k
            geo_flag_out[s] = 1 if dist_n[food] == h_min_g else 0
            for i in range(nt):
                e = tedges[i]
                if use_mask:
                    m |= uint64(1) << uint64(e)
                if reinforce_flag != 0:
                    inc = 1 if variant == 2 else ecnt[e]
                    weights[e] += inc
                    if alpha == 1.0:
                        wpow[e] = np.float64(weights[e])
                    else:
                        wpow[e] = np.float64(weights[e]) ** alpha
        else:
            path_len_out[s] = plen
            geo_flag_out[s] = 1 if plen == h_min_g else 0
            for i in range(plen):
                e = path[i]
                if use_mask:
                    m |= uint64(1) << uint64(e)
                if reinforce_flag != 0:
                    weights[e] += 1
                    if alpha == 1.0:
                        wpow[e] = np.float64(weights[e])
                    else:
                        wpow[e] = np.float64(weights[e]) ** alpha
        mask_out[s] = m
        if rec_idx < n_rec and record_steps[rec_idx] == s + 1:
            for e in range(E):
                rec_weights[rec_idx, e] = weights[e]
            rec_idx += 1

    return 0, n_steps, ctr
