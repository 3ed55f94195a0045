# cython: boundscheck=False, wraparound=False, cdivision=True, language_level=3
"""Compiled kernels for the hot inner loops.

Must stay bit-identical to groundtrack._pure: same expressions, same
evaluation order, no FMA contraction (see setup.py flags). Any change here
needs the mirrored change there, and vice versa.
"""

import numpy as np

cimport numpy as cnp

cnp.import_array()

IMPLEMENTATION = "native"


def iou_matrix(a, b):
    """Pairwise IoU between two (n, 4) arrays of (left, top, width, height) boxes.

    Zero-area boxes yield 0 against everything.
    """
    cdef cnp.ndarray[cnp.float64_t, ndim=2] aa_ = np.ascontiguousarray(a, dtype=np.float64)
    cdef cnp.ndarray[cnp.float64_t, ndim=2] bb_ = np.ascontiguousarray(b, dtype=np.float64)
    cdef Py_ssize_t n = aa_.shape[0]
    cdef Py_ssize_t m = bb_.shape[0]
    cdef cnp.ndarray[cnp.float64_t, ndim=2] out = np.zeros((n, m), dtype=np.float64)
    cdef double[:, ::1] av = aa_
    cdef double[:, ::1] bv = bb_
    cdef double[:, ::1] ov = out
    cdef Py_ssize_t i, j
    cdef double al, at, aw, ah, ar, ab, aa
    cdef double bl, bt, bw, bh
    cdef double iw, ih, inter, union_, lo, hi

    for i in range(n):
        al = av[i, 0]
        at = av[i, 1]
        aw = av[i, 2]
        ah = av[i, 3]
        ar = al + aw
        ab = at + ah
        aa = aw * ah
        for j in range(m):
            bl = bv[j, 0]
            bt = bv[j, 1]
            bw = bv[j, 2]
            bh = bv[j, 3]
            hi = bl + bw
            if ar < hi:
                hi = ar
            lo = al if al > bl else bl
            iw = hi - lo
            if iw <= 0.0:
                continue
            hi = bt + bh
            if ab < hi:
                hi = ab
            lo = at if at > bt else bt
            ih = hi - lo
            if ih <= 0.0:
                continue
            inter = iw * ih
            if inter <= 0.0:
                continue
            union_ = aa + bw * bh - inter
            ov[i, j] = inter / union_
    return out


def lsap_pair(prim, sec):
    """Square linear assignment under lexicographic pair costs.

    Minimizes sum(prim) first, then sum(sec), via shortest augmenting paths
    with dual potentials (Jonker-Volgenant style). Entries must be finite.

    Returns (col4row, u_prim, u_sec, v_prim, v_sec).
    """
    cdef cnp.ndarray[cnp.float64_t, ndim=2] prim_ = np.ascontiguousarray(prim, dtype=np.float64)
    cdef cnp.ndarray[cnp.float64_t, ndim=2] sec_ = np.ascontiguousarray(sec, dtype=np.float64)
    cdef Py_ssize_t n = prim_.shape[0]
    if prim_.shape[1] != n or sec_.shape[0] != n or sec_.shape[1] != n:
        raise ValueError("lsap_pair expects two equal square matrices")

    cdef double inf = float("inf")
    cdef cnp.ndarray[cnp.float64_t, ndim=1] u_p = np.zeros(n)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] u_s = np.zeros(n)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] v_p = np.zeros(n)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] v_s = np.zeros(n)
    cdef cnp.ndarray[cnp.intp_t, ndim=1] col4row = np.full(n, -1, dtype=np.intp)
    cdef cnp.ndarray[cnp.intp_t, ndim=1] row4col = np.full(n, -1, dtype=np.intp)

    cdef cnp.ndarray[cnp.float64_t, ndim=1] sp_p = np.empty(n)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] sp_s = np.empty(n)
    cdef cnp.ndarray[cnp.intp_t, ndim=1] path = np.empty(n, dtype=np.intp)
    cdef cnp.ndarray[cnp.uint8_t, ndim=1] scanned_rows = np.empty(n, dtype=np.uint8)
    cdef cnp.ndarray[cnp.uint8_t, ndim=1] scanned_cols = np.empty(n, dtype=np.uint8)

    cdef double[:, ::1] pm = prim_
    cdef double[:, ::1] sm = sec_
    cdef double[::1] upv = u_p
    cdef double[::1] usv = u_s
    cdef double[::1] vpv = v_p
    cdef double[::1] vsv = v_s
    cdef cnp.intp_t[::1] c4r = col4row
    cdef cnp.intp_t[::1] r4c = row4col
    cdef double[::1] spp = sp_p
    cdef double[::1] sps = sp_s
    cdef cnp.intp_t[::1] pth = path
    cdef cnp.uint8_t[::1] srow = scanned_rows
    cdef cnp.uint8_t[::1] scol = scanned_cols

    cdef Py_ssize_t cur_row, i, j, ip, jp, jm, index, sink, tmp
    cdef double min_p, min_s, low_p, low_s, r_p, r_s
    cdef bint index_free, better, tie, j_free

    for cur_row in range(n):
        for j in range(n):
            spp[j] = inf
            sps[j] = inf
            pth[j] = -1
            srow[j] = 0
            scol[j] = 0
        min_p = 0.0
        min_s = 0.0
        i = cur_row
        sink = -1
        while sink == -1:
            srow[i] = 1
            low_p = inf
            low_s = inf
            index = -1
            index_free = False
            for j in range(n):
                if scol[j]:
                    continue
                r_p = min_p + pm[i, j] - upv[i] - vpv[j]
                r_s = min_s + sm[i, j] - usv[i] - vsv[j]
                if r_p < spp[j] or (r_p == spp[j] and r_s < sps[j]):
                    spp[j] = r_p
                    sps[j] = r_s
                    pth[j] = i
                better = spp[j] < low_p or (spp[j] == low_p and sps[j] < low_s)
                tie = spp[j] == low_p and sps[j] == low_s
                j_free = r4c[j] == -1
                if better or (tie and j_free and not index_free):
                    low_p = spp[j]
                    low_s = sps[j]
                    index = j
                    index_free = j_free
            j = index
            scol[j] = 1
            min_p = low_p
            min_s = low_s
            if r4c[j] == -1:
                sink = j
            else:
                i = r4c[j]

        upv[cur_row] += min_p
        usv[cur_row] += min_s
        for ip in range(n):
            if srow[ip] and ip != cur_row:
                jm = c4r[ip]
                upv[ip] += min_p - spp[jm]
                usv[ip] += min_s - sps[jm]
        for jp in range(n):
            if scol[jp]:
                vpv[jp] -= min_p - spp[jp]
                vsv[jp] -= min_s - sps[jp]

        j = sink
        while True:
            ip = pth[j]
            r4c[j] = ip
            tmp = c4r[ip]
            c4r[ip] = j
            j = tmp
            if ip == cur_row:
                break

    return col4row, u_p, u_s, v_p, v_s
