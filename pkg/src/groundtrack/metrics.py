"""Grounding metric suite: HOTA decomposition, temporal mIoU, their mean,
and the recall grid.

HOTA is computed per query between the submitted track set and that query's
annotated instances, then averaged (a corpus-pooled mode exists behind
MetricsConfig.pooled). Per localization threshold alpha, predicted and ground
truth detections are matched bijectively per frame, maximizing match count
and breaking ties by a global track-alignment score, which reuses the gated
assignment solver.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from .assignment import solve_assignment
from .geometry import iou_matrix
from .model import GroundTruthEntry, Track, ValidationError


def default_alpha_grid() -> tuple[float, ...]:
    return tuple(k / 20.0 for k in range(1, 20))


@dataclass(frozen=True)
class MetricsConfig:
    alpha_grid: tuple[float, ...] = field(default_factory=default_alpha_grid)
    recall_k: tuple[int, ...] = (1, 5, 10)
    recall_iou: tuple[float, ...] = (0.1, 0.3, 0.5)
    miou_all_ranks: bool = False
    unranked_set: bool = False
    pooled: bool = False

    def __post_init__(self) -> None:
        if not self.alpha_grid or not self.recall_k or not self.recall_iou:
            raise ValidationError("metric threshold grids must be non-empty")
        for a in tuple(self.alpha_grid) + tuple(self.recall_iou):
            if not (0.0 < a < 1.0):
                raise ValidationError(f"thresholds must lie in (0, 1), got {a}")
        if any(k < 1 for k in self.recall_k):
            raise ValidationError("recall k values must be >= 1")


class HotaComponents(NamedTuple):
    hota: float
    det_a: float
    ass_a: float
    det_re: float
    det_pr: float
    ass_re: float
    ass_pr: float
    loc_a: float


def temporal_iou(pred: Track, gt: Track) -> float:
    """Jaccard overlap of the two tracks' observed frame sets."""
    a = set(pred.observations)
    b = set(gt.observations)
    if not a or not b:
        raise ValidationError("temporal_iou needs non-empty tracks")
    return len(a & b) / len(a | b)


def _frame_dets(tracks: list[Track]) -> dict[int, list[tuple[int, Track]]]:
    grouped: dict[int, list[tuple[int, Track]]] = {}
    for track in tracks:
        for frame in track.observations:
            grouped.setdefault(frame, []).append((track.track_id, track))
    return grouped


def _hota_scene(
    pred_tracks: list[Track], gt_tracks: list[Track], alpha_grid: tuple[float, ...]
) -> dict[str, np.ndarray]:
    """Per-alpha HOTA counts for one scene (one query, or a pooled corpus)."""
    n_alpha = len(alpha_grid)
    tp = np.zeros(n_alpha)
    fn = np.zeros(n_alpha)
    fp = np.zeros(n_alpha)
    loc_sum = np.zeros(n_alpha)
    ass_a = np.zeros(n_alpha)
    ass_re = np.zeros(n_alpha)
    ass_pr = np.zeros(n_alpha)

    num_gt = sum(len(t.observations) for t in gt_tracks)
    num_pred = sum(len(t.observations) for t in pred_tracks)
    loc_a = np.ones(n_alpha)
    if num_pred == 0 or num_gt == 0:
        fn[:] = num_gt
        fp[:] = num_pred
        det_re = tp / np.maximum(1.0, tp + fn)
        det_pr = tp / np.maximum(1.0, tp + fp)
        det_a = tp / np.maximum(1.0, tp + fn + fp)
        return {
            "tp": tp, "fn": fn, "fp": fp, "det_a": det_a, "det_re": det_re,
            "det_pr": det_pr, "ass_a": ass_a, "ass_re": ass_re, "ass_pr": ass_pr,
            "loc_a": loc_a, "hota": np.sqrt(det_a * ass_a),
        }

    gt_ids = sorted({t.track_id for t in gt_tracks})
    pred_ids = sorted({t.track_id for t in pred_tracks})
    gt_index = {tid: i for i, tid in enumerate(gt_ids)}
    pred_index = {tid: i for i, tid in enumerate(pred_ids)}

    gt_by_frame = _frame_dets(gt_tracks)
    pred_by_frame = _frame_dets(pred_tracks)
    frames = sorted(set(gt_by_frame) | set(pred_by_frame))

    # Pass 1: soft alignment between identities, accumulated over frames.
    potential = np.zeros((len(gt_ids), len(pred_ids)))
    gt_count = np.zeros(len(gt_ids))
    pred_count = np.zeros(len(pred_ids))
    frame_cache = []
    for frame in frames:
        gts = gt_by_frame.get(frame, [])
        preds = pred_by_frame.get(frame, [])
        gi = [gt_index[tid] for tid, _ in gts]
        pi = [pred_index[tid] for tid, _ in preds]
        for i in gi:
            gt_count[i] += 1
        for j in pi:
            pred_count[j] += 1
        sim = iou_matrix(
            [t.observations[frame] for _, t in gts],
            [t.observations[frame] for _, t in preds],
        )
        frame_cache.append((gi, pi, sim))
        if not gi or not pi:
            continue
        denom = sim.sum(axis=0, keepdims=True) + sim.sum(axis=1, keepdims=True) - sim
        soft = np.divide(sim, denom, out=np.zeros_like(sim), where=denom > 1e-12)
        potential[np.ix_(gi, pi)] += soft

    alignment = potential / (gt_count[:, None] + pred_count[None, :] - potential)

    # Pass 2: per alpha, match each frame maximizing matches, then alignment.
    match_counts = [np.zeros((len(gt_ids), len(pred_ids))) for _ in alpha_grid]
    for gi, pi, sim in frame_cache:
        if not gi:
            fp += len(pi)
            continue
        if not pi:
            fn += len(gi)
            continue
        score = alignment[np.ix_(gi, pi)] * sim
        for a, alpha in enumerate(alpha_grid):
            admissible = sim >= alpha
            cost = np.where(admissible, -score, 1.0)
            pairs = solve_assignment(cost, 0.0)
            tp[a] += len(pairs)
            fn[a] += len(gi) - len(pairs)
            fp[a] += len(pi) - len(pairs)
            for r, c in pairs:
                loc_sum[a] += sim[r, c]
                match_counts[a][gi[r], pi[c]] += 1

    for a in range(len(alpha_grid)):
        mc = match_counts[a]
        union = np.maximum(1.0, gt_count[:, None] + pred_count[None, :] - mc)
        ass_a[a] = float(np.sum(mc * (mc / union))) / max(1.0, tp[a])
        ass_re[a] = float(np.sum(mc * (mc / np.maximum(1.0, gt_count[:, None])))) / max(
            1.0, tp[a]
        )
        ass_pr[a] = float(np.sum(mc * (mc / np.maximum(1.0, pred_count[None, :])))) / max(
            1.0, tp[a]
        )

    det_re = tp / np.maximum(1.0, tp + fn)
    det_pr = tp / np.maximum(1.0, tp + fp)
    det_a = tp / np.maximum(1.0, tp + fn + fp)
    loc_a = np.maximum(1e-10, loc_sum) / np.maximum(1e-10, tp)
    return {
        "tp": tp, "fn": fn, "fp": fp, "det_a": det_a, "det_re": det_re,
        "det_pr": det_pr, "ass_a": ass_a, "ass_re": ass_re, "ass_pr": ass_pr,
        "loc_a": loc_a, "hota": np.sqrt(det_a * ass_a),
    }


def _pool_scenes(
    preds: dict[str, list[Track]], gts: dict[str, list[Track]]
) -> tuple[list[Track], list[Track]]:
    """Remap queries into disjoint frame/id ranges so one scene holds them all."""
    pooled_preds: list[Track] = []
    pooled_gts: list[Track] = []
    frame_base = 0
    id_base = 0
    for qi, query_id in enumerate(sorted(gts)):
        max_frame = 0
        max_id = 0
        for track in gts[query_id] + preds.get(query_id, []):
            max_frame = max(max_frame, track.last_frame)
            max_id = max(max_id, track.track_id)

        def shift(track: Track, base_f: int, base_i: int) -> Track:
            return Track(
                track_id=track.track_id + base_i,
                video_id=track.video_id,
                observations={f + base_f: b for f, b in track.observations.items()},
            )

        pooled_gts.extend(shift(t, frame_base, id_base) for t in gts[query_id])
        pooled_preds.extend(shift(t, frame_base, id_base) for t in preds.get(query_id, []))
        frame_base += max_frame
        id_base += max_id
    return pooled_preds, pooled_gts


def hota_components(
    preds: dict[str, list[Track]],
    gts: dict[str, list[Track]],
    cfg: MetricsConfig | None = None,
) -> HotaComponents:
    """HOTA family over all queries; all outputs in [0, 1].

    Per query, per alpha: frame-level bijective matching maximizing the match
    count (ties resolved by the global alignment score), then the standard
    detection/association decomposition, averaged over the alpha grid and
    then over queries.
    """
    cfg = cfg or MetricsConfig()
    if cfg.pooled:
        pooled_preds, pooled_gts = _pool_scenes(preds, gts)
        scenes = [_hota_scene(pooled_preds, pooled_gts, cfg.alpha_grid)]
    else:
        scenes = [
            _hota_scene(preds.get(query_id, []), gts[query_id], cfg.alpha_grid)
            for query_id in sorted(gts)
        ]
    if not scenes:
        raise ValidationError("hota_components needs at least one query")

    def mean_of(key: str) -> float:
        return float(np.mean([np.mean(s[key]) for s in scenes]))

    return HotaComponents(
        hota=mean_of("hota"),
        det_a=mean_of("det_a"),
        ass_a=mean_of("ass_a"),
        det_re=mean_of("det_re"),
        det_pr=mean_of("det_pr"),
        ass_re=mean_of("ass_re"),
        ass_pr=mean_of("ass_pr"),
        loc_a=mean_of("loc_a"),
    )


def _best_gt_tiou(track: Track, gt_tracks: list[Track]) -> float:
    return max(temporal_iou(track, gt) for gt in gt_tracks)


def compute_miou(
    submission: dict[str, list[Track]],
    gts: dict[str, list[Track]],
    all_ranks: bool = False,
) -> float:
    """Mean temporal IoU over queries, in [0, 1].

    Default scores the rank-1 prediction against its best-matching instance;
    all_ranks averages the optimal one-to-one pairing over the whole ranked
    list instead. Queries with no predictions contribute 0.
    """
    if not gts:
        raise ValidationError("compute_miou needs at least one query")
    total = 0.0
    for query_id in sorted(gts):
        preds = submission.get(query_id, [])
        if not preds:
            continue
        gt_tracks = gts[query_id]
        if not all_ranks:
            total += _best_gt_tiou(preds[0], gt_tracks)
            continue
        tiou = np.array(
            [[temporal_iou(p, g) for g in gt_tracks] for p in preds], dtype=np.float64
        )
        pairs = solve_assignment(-tiou, 0.0)
        total += sum(tiou[r, c] for r, c in pairs) / len(preds)
    return total / len(gts)


def compute_mhiou(hota: float, miou: float) -> float:
    """Arithmetic mean of HOTA and mIoU on the x100 reporting scale."""
    for name, value in (("hota", hota), ("miou", miou)):
        if not (0.0 <= value <= 100.0):
            raise ValidationError(f"{name} must be in [0, 100], got {value}")
    return (hota + miou) / 2.0


def compute_recall_grid(
    submission: dict[str, list[Track]],
    gts: dict[str, list[Track]],
    cfg: MetricsConfig | None = None,
) -> dict[tuple[int, float], float]:
    """R-k@X: percentage of queries whose top-k contains a prediction with
    temporal IoU >= X against some annotated instance."""
    cfg = cfg or MetricsConfig()
    grid: dict[tuple[int, float], float] = {}
    query_ids = sorted(gts)
    best: dict[str, list[float]] = {}
    for query_id in query_ids:
        preds = submission.get(query_id, [])
        best[query_id] = [_best_gt_tiou(p, gts[query_id]) for p in preds]
    for k in cfg.recall_k:
        for x in cfg.recall_iou:
            hits = 0
            for query_id in query_ids:
                scores = best[query_id] if cfg.unranked_set else best[query_id][:k]
                if any(s >= x for s in scores):
                    hits += 1
            grid[(k, x)] = 100.0 * hits / len(query_ids)
    return grid


@dataclass
class EvalReport:
    """Full metric vector; scalar fields are on the x100 reporting scale."""

    m_hiou: float
    hota: float
    miou: float
    det_a: float
    ass_a: float
    det_re: float
    det_pr: float
    ass_re: float
    ass_pr: float
    loc_a: float
    recall_grid: dict[tuple[int, float], float]

    SCALAR_FIELDS = (
        "m_hiou", "hota", "miou", "det_a", "ass_a",
        "det_re", "det_pr", "ass_re", "ass_pr", "loc_a",
    )
    SCALAR_LABELS = (
        "m-HIoU", "HOTA", "mIoU", "DetA", "AssA",
        "DetRe", "DetPr", "AssRe", "AssPr", "LocA",
    )

    def cells(self) -> list[tuple[str, float]]:
        out = [
            (label, getattr(self, name))
            for name, label in zip(self.SCALAR_FIELDS, self.SCALAR_LABELS)
        ]
        for (k, x) in sorted(self.recall_grid):
            out.append((f"R{k}@{_fmt_thresh(x)}", self.recall_grid[(k, x)]))
        return out

    def to_text_table(self) -> str:
        cells = self.cells()
        headers = [name for name, _ in cells]
        values = [f"{value:.2f}" for _, value in cells]
        widths = [max(len(h), len(v)) for h, v in zip(headers, values)]
        head = "  ".join(h.rjust(w) for h, w in zip(headers, widths))
        body = "  ".join(v.rjust(w) for v, w in zip(values, widths))
        return head + "\n" + body + "\n"

    def to_records(self) -> str:
        lines = [
            json.dumps({"metric": name, "value": getattr(self, name)}, sort_keys=True)
            for name in self.SCALAR_FIELDS
        ]
        for (k, x) in sorted(self.recall_grid):
            lines.append(
                json.dumps(
                    {"metric": "recall", "k": k, "iou": x, "value": self.recall_grid[(k, x)]},
                    sort_keys=True,
                )
            )
        return "\n".join(lines) + "\n"

    @classmethod
    def from_records(cls, text: str) -> "EvalReport":
        scalars: dict[str, float] = {}
        grid: dict[tuple[int, float], float] = {}
        for line in text.splitlines():
            if not line.strip():
                continue
            record = json.loads(line)
            if record["metric"] == "recall":
                grid[(int(record["k"]), float(record["iou"]))] = float(record["value"])
            else:
                scalars[record["metric"]] = float(record["value"])
        return cls(recall_grid=grid, **scalars)


def _fmt_thresh(x: float) -> str:
    text = f"{x:.2f}".rstrip("0").rstrip(".")
    return text


def _as_query_tracks(entries: list[dict]) -> dict[str, list[Track]]:
    return {
        entry["query_id"]: [item["track"] for item in entry["ranked"]]
        for entry in entries
    }


def evaluate(
    submission_entries: list[dict],
    ground_truth: list[GroundTruthEntry],
    cfg: MetricsConfig | None = None,
) -> EvalReport:
    """Score a parsed submission against ground truth, producing the full
    report row. Submission queries must all exist in the ground truth."""
    cfg = cfg or MetricsConfig()
    gts = {entry.query_id: entry.tracks for entry in ground_truth}
    submission = _as_query_tracks(submission_entries)
    unknown = set(submission) - set(gts)
    if unknown:
        raise ValidationError(
            f"submission has queries missing from ground truth: {sorted(unknown)[:5]}"
        )
    comps = hota_components(submission, gts, cfg)
    miou = compute_miou(submission, gts, cfg.miou_all_ranks)
    recall = compute_recall_grid(submission, gts, cfg)
    hota100 = comps.hota * 100.0
    miou100 = miou * 100.0
    return EvalReport(
        m_hiou=compute_mhiou(hota100, miou100),
        hota=hota100,
        miou=miou100,
        det_a=comps.det_a * 100.0,
        ass_a=comps.ass_a * 100.0,
        det_re=comps.det_re * 100.0,
        det_pr=comps.det_pr * 100.0,
        ass_re=comps.ass_re * 100.0,
        ass_pr=comps.ass_pr * 100.0,
        loc_a=comps.loc_a * 100.0,
        recall_grid=recall,
    )
