"""Parsing and serialization of the external file formats.

Text formats: MOT-style comma-separated detections/tracks, line-delimited
JSON for queries, ground truth and submissions. Embeddings travel in a
self-describing binary container (JSON header line, float32 little-endian
body) so round trips are bit-exact.
"""

from __future__ import annotations

import io
import json
from typing import IO, Iterable

import numpy as np

from .model import (
    EMBED_DIM,
    Box,
    Detection,
    GroundTruthEntry,
    Query,
    Track,
    ValidationError,
)

EMBEDDINGS_FORMAT = "embv1"


class ParseError(ValueError):
    """Malformed input; carries the 1-based line number when known."""

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        super().__init__(f"line {line}: {message}" if line is not None else message)


def _as_text_lines(source: str | IO[str]) -> Iterable[tuple[int, str]]:
    text = source if isinstance(source, str) else source.read()
    for lineno, line in enumerate(text.splitlines(), start=1):
        if line.strip():
            yield lineno, line


def format_coord(x: float) -> str:
    """Shortest decimal form that parses back exactly.

    Integers print bare, values exact at two decimals print with up to two,
    anything else falls back to the full repr so round trips stay lossless.
    """
    if x == int(x) and abs(x) < 1e15:
        return str(int(x))
    two = round(x, 2)
    if two == x:
        return f"{x:.2f}".rstrip("0")
    return repr(x)


# ---------------------------------------------------------------------------
# MOT-style detection / track text files
# ---------------------------------------------------------------------------


def parse_mot_detections(source: str | IO[str]) -> dict[int, list[Detection]]:
    """Parse `frame,id,left,top,width,height,conf[,...]` lines.

    Returns detections grouped by frame, frames ascending, input order kept
    within a frame. The id field and any trailing fields are ignored.
    """
    rows: list[tuple[int, Detection]] = []
    for lineno, line in _as_text_lines(source):
        fields = [f.strip() for f in line.split(",")]
        if len(fields) < 7:
            raise ParseError(
                f"expected at least 7 comma-separated fields, got {len(fields)}", lineno
            )
        try:
            frame = int(fields[0])
            left, top, width, height, score = (float(fields[k]) for k in range(2, 7))
        except ValueError as exc:
            raise ParseError(f"bad numeric field ({exc})", lineno) from None
        if width < 0 or height < 0:
            raise ParseError(f"negative box size {width}x{height}", lineno)
        try:
            det = Detection(frame=frame, box=Box(left, top, width, height), score=score)
        except ValidationError as exc:
            raise ParseError(str(exc), lineno) from None
        rows.append((lineno, det))

    rows.sort(key=lambda item: (item[1].frame, item[0]))
    grouped: dict[int, list[Detection]] = {}
    for _, det in rows:
        grouped.setdefault(det.frame, []).append(det)
    return grouped


def write_mot_tracks(tracks: Iterable[Track]) -> str:
    """One `frame,track_id,left,top,width,height,1,-1,-1,-1` line per observation,
    sorted by frame then track id."""
    rows = []
    for track in tracks:
        for frame, box in track.observations.items():
            rows.append((frame, track.track_id, box))
    rows.sort(key=lambda r: (r[0], r[1]))
    lines = []
    for frame, track_id, box in rows:
        coords = ",".join(format_coord(v) for v in box.as_tuple())
        lines.append(f"{frame},{track_id},{coords},1,-1,-1,-1")
    return "\n".join(lines) + ("\n" if lines else "")


def parse_mot_tracks(source: str | IO[str], video_id: str) -> list[Track]:
    """Inverse of write_mot_tracks; also accepts foreign MOT track files."""
    per_id: dict[int, dict[int, Box]] = {}
    first_seen: dict[int, int] = {}
    for lineno, line in _as_text_lines(source):
        fields = [f.strip() for f in line.split(",")]
        if len(fields) < 6:
            raise ParseError(
                f"expected at least 6 comma-separated fields, got {len(fields)}", lineno
            )
        try:
            frame = int(fields[0])
            track_id = int(fields[1])
            left, top, width, height = (float(fields[k]) for k in range(2, 6))
        except ValueError as exc:
            raise ParseError(f"bad numeric field ({exc})", lineno) from None
        if frame < 1:
            raise ParseError(f"frame index must be >= 1, got {frame}", lineno)
        obs = per_id.setdefault(track_id, {})
        if frame in obs:
            raise ParseError(f"track {track_id} has two boxes in frame {frame}", lineno)
        try:
            obs[frame] = Box(left, top, width, height)
        except ValidationError as exc:
            raise ParseError(str(exc), lineno) from None
        first_seen.setdefault(track_id, lineno)

    tracks = []
    for track_id in sorted(per_id, key=lambda t: (min(per_id[t]), t)):
        obs = dict(sorted(per_id[track_id].items()))
        tracks.append(Track(track_id=track_id, video_id=video_id, observations=obs))
    return tracks


# ---------------------------------------------------------------------------
# Queries and ground truth (line-delimited JSON)
# ---------------------------------------------------------------------------


def _json_record(lineno: int, line: str, required: tuple[str, ...]) -> dict:
    try:
        record = json.loads(line)
    except json.JSONDecodeError as exc:
        raise ParseError(f"invalid JSON ({exc.msg})", lineno) from None
    if not isinstance(record, dict):
        raise ParseError("record must be a JSON object", lineno)
    for key in required:
        if key not in record:
            raise ParseError(f"missing key {key!r}", lineno)
    return record


def parse_queries(source: str | IO[str]) -> list[Query]:
    queries: list[Query] = []
    seen: set[str] = set()
    for lineno, line in _as_text_lines(source):
        record = _json_record(lineno, line, ("query_id", "video_id", "text"))
        query_id = str(record["query_id"])
        if query_id in seen:
            raise ParseError(f"duplicate query_id {query_id!r}", lineno)
        seen.add(query_id)
        if not isinstance(record["text"], str):
            raise ParseError(f"text must be a string, got {type(record['text']).__name__}", lineno)
        try:
            queries.append(
                Query(query_id=query_id, video_id=str(record["video_id"]), text=record["text"])
            )
        except ValidationError as exc:
            raise ParseError(str(exc), lineno) from None
    return queries


def write_queries(queries: Iterable[Query]) -> str:
    lines = [
        json.dumps(
            {"query_id": q.query_id, "video_id": q.video_id, "text": q.text},
            sort_keys=True,
        )
        for q in queries
    ]
    return "\n".join(lines) + ("\n" if lines else "")


def _boxes_payload(track: Track) -> list[list[float]]:
    return [[frame, *box.as_tuple()] for frame, box in track.observations.items()]


def _track_from_payload(video_id: str, track_id: int, boxes: list, lineno: int) -> Track:
    obs: dict[int, Box] = {}
    for entry in boxes:
        if not isinstance(entry, (list, tuple)) or len(entry) != 5:
            raise ParseError(f"box entry must be [frame, l, t, w, h], got {entry!r}", lineno)
        frame = int(entry[0])
        if frame in obs:
            raise ParseError(f"track {track_id} repeats frame {frame}", lineno)
        try:
            obs[frame] = Box(*(float(v) for v in entry[1:]))
        except ValidationError as exc:
            raise ParseError(str(exc), lineno) from None
    try:
        return Track(track_id=track_id, video_id=video_id, observations=dict(sorted(obs.items())))
    except ValidationError as exc:
        raise ParseError(str(exc), lineno) from None


def parse_ground_truth(source: str | IO[str]) -> list[GroundTruthEntry]:
    entries: list[GroundTruthEntry] = []
    seen: set[str] = set()
    for lineno, line in _as_text_lines(source):
        record = _json_record(lineno, line, ("query_id", "video_id", "tracks"))
        query_id = str(record["query_id"])
        if query_id in seen:
            raise ParseError(f"duplicate query_id {query_id!r}", lineno)
        seen.add(query_id)
        video_id = str(record["video_id"])
        tracks = [
            _track_from_payload(video_id, int(t["track_id"]), t.get("boxes", []), lineno)
            for t in record["tracks"]
        ]
        try:
            entries.append(GroundTruthEntry(query_id=query_id, video_id=video_id, tracks=tracks))
        except ValidationError as exc:
            raise ParseError(str(exc), lineno) from None
    return entries


def write_ground_truth(entries: Iterable[GroundTruthEntry]) -> str:
    lines = []
    for entry in entries:
        payload = {
            "query_id": entry.query_id,
            "video_id": entry.video_id,
            "tracks": [
                {"track_id": t.track_id, "boxes": _boxes_payload(t)} for t in entry.tracks
            ],
        }
        lines.append(json.dumps(payload, sort_keys=True))
    return "\n".join(lines) + ("\n" if lines else "")


# ---------------------------------------------------------------------------
# Submissions (ranked tracks per query, full spatiotemporal extent)
# ---------------------------------------------------------------------------


def write_submission(entries: Iterable[dict]) -> str:
    """Entries as produced by retrieval.assemble_submission."""
    lines = []
    for entry in entries:
        lines.append(json.dumps(entry, sort_keys=True))
    return "\n".join(lines) + ("\n" if lines else "")


def parse_submission(source: str | IO[str]) -> list[dict]:
    """Returns one dict per query: query_id, video_id, ranked list of
    {"track": Track, "score": float}."""
    out = []
    seen: set[str] = set()
    for lineno, line in _as_text_lines(source):
        record = _json_record(lineno, line, ("query_id", "ranked"))
        query_id = str(record["query_id"])
        if query_id in seen:
            raise ParseError(f"duplicate query_id {query_id!r}", lineno)
        seen.add(query_id)
        ranked = []
        for item in record["ranked"]:
            if "video_id" not in item or "track_id" not in item:
                raise ParseError("ranked entry needs video_id and track_id", lineno)
            track = _track_from_payload(
                str(item["video_id"]), int(item["track_id"]), item.get("boxes", []), lineno
            )
            ranked.append({"track": track, "score": float(item.get("score", 0.0))})
        out.append(
            {
                "query_id": query_id,
                "video_id": str(record.get("video_id", "")),
                "ranked": ranked,
            }
        )
    return out


# ---------------------------------------------------------------------------
# Embedding container (bit-exact binary round trip)
# ---------------------------------------------------------------------------


def write_embeddings(
    mapping: dict[tuple[str, int], np.ndarray], stream: IO[bytes]
) -> None:
    keys = list(mapping.keys())
    dim = EMBED_DIM if not keys else int(np.asarray(mapping[keys[0]]).shape[0])
    rows = np.empty((len(keys), dim), dtype="<f4")
    for i, key in enumerate(keys):
        vec = np.asarray(mapping[key], dtype="<f4").reshape(-1)
        if vec.shape[0] != dim:
            raise ValidationError(
                f"embedding for {key} has dim {vec.shape[0]}, expected {dim}"
            )
        if not np.all(np.isfinite(vec)):
            raise ValidationError(f"embedding for {key} has non-finite values")
        rows[i] = vec
    header = {
        "format": EMBEDDINGS_FORMAT,
        "count": len(keys),
        "dim": dim,
        "keys": [[vid, tid] for vid, tid in keys],
    }
    stream.write(json.dumps(header, sort_keys=True).encode("utf-8") + b"\n")
    stream.write(rows.tobytes(order="C"))


def read_embeddings(
    stream: IO[bytes], expected_dim: int | None = EMBED_DIM
) -> dict[tuple[str, int], np.ndarray]:
    """Read an embedding container; the declared dimension must match
    `expected_dim` unless that is None."""
    header_line = stream.readline()
    try:
        header = json.loads(header_line.decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise ParseError(f"bad embeddings header ({exc})", 1) from None
    if header.get("format") != EMBEDDINGS_FORMAT:
        raise ParseError(f"unknown embeddings format {header.get('format')!r}", 1)
    count, dim = int(header["count"]), int(header["dim"])
    if expected_dim is not None and dim != expected_dim:
        raise ParseError(f"dimension mismatch: file declares {dim}, expected {expected_dim}", 1)
    body = stream.read(count * dim * 4)
    if len(body) != count * dim * 4:
        raise ParseError(
            f"truncated body: expected {count * dim * 4} bytes, got {len(body)}"
        )
    rows = np.frombuffer(body, dtype="<f4").reshape(count, dim)
    if not np.all(np.isfinite(rows)):
        raise ParseError("embeddings contain non-finite values")
    keys = header["keys"]
    if len(keys) != count:
        raise ParseError(f"header declares {count} rows but lists {len(keys)} keys", 1)
    out: dict[tuple[str, int], np.ndarray] = {}
    for i, (vid, tid) in enumerate(keys):
        out[(str(vid), int(tid))] = rows[i].copy()
    return out


def write_embeddings_bytes(mapping: dict[tuple[str, int], np.ndarray]) -> bytes:
    buf = io.BytesIO()
    write_embeddings(mapping, buf)
    return buf.getvalue()


def read_embeddings_bytes(
    data: bytes, expected_dim: int | None = EMBED_DIM
) -> dict[tuple[str, int], np.ndarray]:
    return read_embeddings(io.BytesIO(data), expected_dim)
