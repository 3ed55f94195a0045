"""Pure-Python reference kernels.

These mirror the compiled extension (groundtrack._native) operation for
operation; both sides must produce bit-identical results so that backend
selection never changes tracker or metric output. Keep every floating-point
expression in the same shape and evaluation order as the .pyx file.
"""

from __future__ import annotations

import math

import numpy as np

IMPLEMENTATION = "pure"


def iou_matrix(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Pairwise IoU between two (n, 4) arrays of (left, top, width, height) boxes.

    Zero-area boxes yield 0 against everything.
    """
    a = np.ascontiguousarray(a, dtype=np.float64)
    b = np.ascontiguousarray(b, dtype=np.float64)
    n, m = a.shape[0], b.shape[0]
    out = np.zeros((n, m), dtype=np.float64)
    for i in range(n):
        al, at, aw, ah = a[i, 0], a[i, 1], a[i, 2], a[i, 3]
        ar = al + aw
        ab = at + ah
        aa = aw * ah
        for j in range(m):
            bl, bt, bw, bh = b[j, 0], b[j, 1], b[j, 2], b[j, 3]
            iw = min(ar, bl + bw) - max(al, bl)
            if iw <= 0.0:
                continue
            ih = min(ab, bt + bh) - max(at, bt)
            if ih <= 0.0:
                continue
            inter = iw * ih
            if inter <= 0.0:
                continue
            union = aa + bw * bh - inter
            out[i, j] = inter / union
    return out


def lsap_pair(
    prim: np.ndarray, sec: np.ndarray
) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    """Square linear assignment under lexicographic pair costs.

    Minimizes sum(prim) first, then sum(sec), via shortest augmenting paths
    with dual potentials (Jonker-Volgenant style). Entries must be finite.

    Returns (col4row, u_prim, u_sec, v_prim, v_sec) where col4row[i] is the
    column matched to row i and (u, v) are the final dual potentials.
    """
    prim = np.ascontiguousarray(prim, dtype=np.float64)
    sec = np.ascontiguousarray(sec, dtype=np.float64)
    n = prim.shape[0]
    if prim.shape != (n, n) or sec.shape != (n, n):
        raise ValueError("lsap_pair expects two equal square matrices")

    inf = math.inf
    u_p = np.zeros(n)
    u_s = np.zeros(n)
    v_p = np.zeros(n)
    v_s = np.zeros(n)
    col4row = np.full(n, -1, dtype=np.intp)
    row4col = np.full(n, -1, dtype=np.intp)

    sp_p = np.empty(n)
    sp_s = np.empty(n)
    path = np.empty(n, dtype=np.intp)
    scanned_rows = np.empty(n, dtype=np.bool_)
    scanned_cols = np.empty(n, dtype=np.bool_)

    for cur_row in range(n):
        sp_p[:] = inf
        sp_s[:] = inf
        path[:] = -1
        scanned_rows[:] = False
        scanned_cols[:] = False
        min_p = 0.0
        min_s = 0.0
        i = cur_row
        sink = -1
        while sink == -1:
            scanned_rows[i] = True
            low_p = inf
            low_s = inf
            index = -1
            index_free = False
            for j in range(n):
                if scanned_cols[j]:
                    continue
                r_p = min_p + prim[i, j] - u_p[i] - v_p[j]
                r_s = min_s + sec[i, j] - u_s[i] - v_s[j]
                if r_p < sp_p[j] or (r_p == sp_p[j] and r_s < sp_s[j]):
                    sp_p[j] = r_p
                    sp_s[j] = r_s
                    path[j] = i
                better = sp_p[j] < low_p or (sp_p[j] == low_p and sp_s[j] < low_s)
                tie = sp_p[j] == low_p and sp_s[j] == low_s
                j_free = row4col[j] == -1
                if better or (tie and j_free and not index_free):
                    low_p = sp_p[j]
                    low_s = sp_s[j]
                    index = j
                    index_free = j_free
            j = index
            scanned_cols[j] = True
            min_p = low_p
            min_s = low_s
            if row4col[j] == -1:
                sink = j
            else:
                i = row4col[j]

        u_p[cur_row] += min_p
        u_s[cur_row] += min_s
        for ip in range(n):
            if scanned_rows[ip] and ip != cur_row:
                jm = col4row[ip]
                u_p[ip] += min_p - sp_p[jm]
                u_s[ip] += min_s - sp_s[jm]
        for jp in range(n):
            if scanned_cols[jp]:
                v_p[jp] -= min_p - sp_p[jp]
                v_s[jp] -= min_s - sp_s[jp]

        j = sink
        while True:
            ip = path[j]
            row4col[j] = ip
            col4row[ip], j = j, col4row[ip]
            if ip == cur_row:
                break

    return col4row, u_p, u_s, v_p, v_s
