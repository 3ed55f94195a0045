"""Independent brute-force oracles used to pin expected values.

Everything here is deliberately written without the package's numerical
paths: plain Python floats, dicts and exhaustive enumeration, so a bug in
the implementation cannot hide in its own oracle.
"""

from __future__ import annotations

import itertools
import math


# ---------------------------------------------------------------------------
# Assignment
# ---------------------------------------------------------------------------


def brute_force_assignment(cost, max_cost=math.inf, eps=1e-9):
    """Exhaustive (max cardinality, min total, lex smallest) gated matching.

    cost: nested sequence M x N. Totals within eps are treated as tied and
    resolved lexicographically, mirroring the solver's tolerance; genuinely
    distinct optima in the test data sit far above eps. Returns
    (pairs, cardinality, total).
    """
    m = len(cost)
    n = len(cost[0]) if m else 0
    best_total = None
    best_pairs = None
    for k in range(min(m, n), -1, -1):
        for rows in itertools.combinations(range(m), k):
            for cols in itertools.permutations(range(n), k):
                pairs = sorted(zip(rows, cols))
                if any(cost[r][c] > max_cost for r, c in pairs):
                    continue
                total = 0.0
                for r, c in pairs:
                    total += cost[r][c]
                if best_total is None or total < best_total - eps:
                    best_total, best_pairs = total, pairs
                elif abs(total - best_total) <= eps and pairs < best_pairs:
                    best_total, best_pairs = min(total, best_total), pairs
        if best_pairs is not None:
            return best_pairs, k, best_total
    return [], 0, 0.0


def brute_force_min_total(cost):
    """Minimum total over full-cardinality matchings (ungated)."""
    m = len(cost)
    n = len(cost[0])
    k = min(m, n)
    best = math.inf
    for rows in itertools.combinations(range(m), k):
        for cols in itertools.permutations(range(n), k):
            total = 0.0
            for r, c in sorted(zip(rows, cols)):
                total += cost[r][c]
            best = min(best, total)
    return best


# ---------------------------------------------------------------------------
# Box and temporal IoU (independent arithmetic)
# ---------------------------------------------------------------------------


def box_iou(a, b):
    """IoU of two (left, top, width, height) tuples."""
    ax2, ay2 = a[0] + a[2], a[1] + a[3]
    bx2, by2 = b[0] + b[2], b[1] + b[3]
    iw = min(ax2, bx2) - max(a[0], b[0])
    ih = min(ay2, by2) - max(a[1], b[1])
    if iw <= 0 or ih <= 0:
        return 0.0
    inter = iw * ih
    if inter <= 0:
        return 0.0
    return inter / (a[2] * a[3] + b[2] * b[3] - inter)


def temporal_iou_frames(frames_a, frames_b):
    sa, sb = set(frames_a), set(frames_b)
    return len(sa & sb) / len(sa | sb)


# ---------------------------------------------------------------------------
# Exhaustive HOTA
# ---------------------------------------------------------------------------


def _enumerate_matchings(n_gt, n_pred, admissible):
    """All injective partial matchings as sorted (gt, pred) pair lists."""

    def recurse(gi, used):
        if gi == n_gt:
            yield []
            return
        for rest in recurse(gi + 1, used):
            yield rest
        for pj in range(n_pred):
            if pj in used or not admissible(gi, pj):
                continue
            used.add(pj)
            for rest in recurse(gi + 1, used):
                yield [(gi, pj)] + rest
            used.remove(pj)

    yield from recurse(0, set())


def _best_matching(n_gt, n_pred, admissible, score):
    """Max count, then max total score, then lexicographically smallest."""
    best = None
    best_key = None
    for pairs in _enumerate_matchings(n_gt, n_pred, admissible):
        pairs = sorted(pairs)
        total = 0.0
        for gi, pj in pairs:
            total += score(gi, pj)
        key = (-len(pairs), -total, pairs)
        if best_key is None or key < best_key:
            best_key = key
            best = pairs
    return best or []


def exhaustive_hota(preds, gts, alpha_grid):
    """HOTA family by exhaustive per-frame matching.

    preds/gts: dict query_id -> list of (track_id, {frame: (l, t, w, h)}).
    Returns a dict with keys hota, det_a, ass_a, det_re, det_pr, ass_re,
    ass_pr, loc_a, each the mean over queries of the mean over alphas.
    """
    names = ("hota", "det_a", "ass_a", "det_re", "det_pr", "ass_re", "ass_pr", "loc_a")
    sums = {name: 0.0 for name in names}
    for query_id in sorted(gts):
        per_query = _exhaustive_hota_query(preds.get(query_id, []), gts[query_id], alpha_grid)
        for name in names:
            sums[name] += per_query[name]
    return {name: sums[name] / len(gts) for name in names}


def _exhaustive_hota_query(pred_tracks, gt_tracks, alpha_grid):
    num_gt = sum(len(obs) for _, obs in gt_tracks)
    num_pred = sum(len(obs) for _, obs in pred_tracks)
    n_alpha = len(alpha_grid)

    if num_gt == 0 or num_pred == 0:
        zero = [0.0] * n_alpha
        return _aggregate(zero, zero, zero, zero, zero, zero, zero, [1.0] * n_alpha)

    frames = sorted(
        {f for _, obs in gt_tracks for f in obs} | {f for _, obs in pred_tracks for f in obs}
    )
    gt_count = {tid: len(obs) for tid, obs in gt_tracks}
    pred_count = {tid: len(obs) for tid, obs in pred_tracks}

    # Pass 1: soft alignment between identities.
    potential = {}
    frame_layout = []
    for frame in frames:
        gt_here = [(tid, obs[frame]) for tid, obs in gt_tracks if frame in obs]
        pred_here = [(tid, obs[frame]) for tid, obs in pred_tracks if frame in obs]
        sim = {}
        for gi, (gt_id, gbox) in enumerate(gt_here):
            for pj, (pr_id, pbox) in enumerate(pred_here):
                sim[(gi, pj)] = box_iou(gbox, pbox)
        for gi, (gt_id, _) in enumerate(gt_here):
            for pj, (pr_id, _) in enumerate(pred_here):
                row = sum(sim[(gi, q)] for q in range(len(pred_here)))
                col = sum(sim[(q, pj)] for q in range(len(gt_here)))
                denom = row + col - sim[(gi, pj)]
                if denom > 1e-12:
                    potential[(gt_id, pr_id)] = potential.get((gt_id, pr_id), 0.0) + (
                        sim[(gi, pj)] / denom
                    )
        frame_layout.append((gt_here, pred_here, sim))

    def alignment(gt_id, pr_id):
        p = potential.get((gt_id, pr_id), 0.0)
        return p / (gt_count[gt_id] + pred_count[pr_id] - p)

    # Pass 2: per alpha exhaustive matching per frame.
    tp = [0.0] * n_alpha
    fn = [0.0] * n_alpha
    fp = [0.0] * n_alpha
    loc_sum = [0.0] * n_alpha
    matches = [dict() for _ in alpha_grid]
    for gt_here, pred_here, sim in frame_layout:
        for a, alpha in enumerate(alpha_grid):
            pairs = _best_matching(
                len(gt_here),
                len(pred_here),
                admissible=lambda gi, pj: sim[(gi, pj)] >= alpha,
                score=lambda gi, pj: alignment(gt_here[gi][0], pred_here[pj][0])
                * sim[(gi, pj)],
            )
            tp[a] += len(pairs)
            fn[a] += len(gt_here) - len(pairs)
            fp[a] += len(pred_here) - len(pairs)
            for gi, pj in pairs:
                loc_sum[a] += sim[(gi, pj)]
                key = (gt_here[gi][0], pred_here[pj][0])
                matches[a][key] = matches[a].get(key, 0) + 1

    ass_a = [0.0] * n_alpha
    ass_re = [0.0] * n_alpha
    ass_pr = [0.0] * n_alpha
    det_a = [0.0] * n_alpha
    det_re = [0.0] * n_alpha
    det_pr = [0.0] * n_alpha
    loc_a = [0.0] * n_alpha
    for a in range(n_alpha):
        acc_a = acc_re = acc_pr = 0.0
        for (gt_id, pr_id), count in matches[a].items():
            union = gt_count[gt_id] + pred_count[pr_id] - count
            acc_a += count * (count / union)
            acc_re += count * (count / gt_count[gt_id])
            acc_pr += count * (count / pred_count[pr_id])
        denom = max(1.0, tp[a])
        ass_a[a] = acc_a / denom
        ass_re[a] = acc_re / denom
        ass_pr[a] = acc_pr / denom
        det_a[a] = tp[a] / max(1.0, tp[a] + fn[a] + fp[a])
        det_re[a] = tp[a] / max(1.0, tp[a] + fn[a])
        det_pr[a] = tp[a] / max(1.0, tp[a] + fp[a])
        loc_a[a] = max(1e-10, loc_sum[a]) / max(1e-10, tp[a])

    hota = [math.sqrt(det_a[a] * ass_a[a]) for a in range(n_alpha)]
    return _aggregate(hota, det_a, ass_a, det_re, det_pr, ass_re, ass_pr, loc_a)


def _aggregate(hota, det_a, ass_a, det_re, det_pr, ass_re, ass_pr, loc_a):
    def mean(values):
        return sum(values) / len(values)

    return {
        "hota": mean(hota),
        "det_a": mean(det_a),
        "ass_a": mean(ass_a),
        "det_re": mean(det_re),
        "det_pr": mean(det_pr),
        "ass_re": mean(ass_re),
        "ass_pr": mean(ass_pr),
        "loc_a": mean(loc_a),
    }
