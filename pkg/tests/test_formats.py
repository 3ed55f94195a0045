"""File-format parsing, serialization and round-trip properties."""

from __future__ import annotations

import io

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from groundtrack.formats import (
    ParseError,
    format_coord,
    parse_ground_truth,
    parse_mot_detections,
    parse_mot_tracks,
    parse_queries,
    parse_submission,
    read_embeddings_bytes,
    write_embeddings_bytes,
    write_ground_truth,
    write_mot_tracks,
    write_queries,
)
from groundtrack.model import Box, GroundTruthEntry, Query, Track


class TestDetections:
    def test_direct_field_mapping(self):
        dets = parse_mot_detections("1,-1,10,20,30,40,0.9,-1,-1,-1")
        assert list(dets) == [1]
        d = dets[1][0]
        assert d.box.as_tuple() == (10.0, 20.0, 30.0, 40.0)
        assert d.score == 0.9

    def test_empty_stream(self):
        assert parse_mot_detections("") == {}
        assert parse_mot_detections("\n\n") == {}

    def test_frames_sorted_input_order_kept(self):
        text = "2,-1,0,0,10,10,0.5\n1,-1,0,0,5,5,0.8\n1,-1,1,1,5,5,0.7"
        dets = parse_mot_detections(text)
        assert list(dets) == [1, 2]
        assert [d.box.left for d in dets[1]] == [0.0, 1.0]

    def test_malformed_line_carries_number(self):
        with pytest.raises(ParseError) as err:
            parse_mot_detections("1,-1,10,20,30,40,0.9\n1,-1,oops,20,30,40,0.9")
        assert err.value.line == 2

    def test_too_few_fields(self):
        with pytest.raises(ParseError):
            parse_mot_detections("1,-1,10,20,30")

    def test_negative_size_rejected(self):
        with pytest.raises(ParseError):
            parse_mot_detections("1,-1,10,20,-5,40,0.9")

    def test_score_out_of_range_rejected(self):
        with pytest.raises(ParseError) as err:
            parse_mot_detections("1,-1,10,20,30,40,1.5")
        assert err.value.line == 1

    def test_accepts_file_object(self):
        dets = parse_mot_detections(io.StringIO("3,-1,1,2,10,10,0.5,-1,-1,-1"))
        assert list(dets) == [3]


class TestTracks:
    def test_single_observation_line(self):
        track = Track(track_id=1, video_id="v", observations={3: Box(1, 2, 3, 4)})
        assert write_mot_tracks([track]) == "3,1,1,2,3,4,1,-1,-1,-1\n"

    def test_empty(self):
        assert write_mot_tracks([]) == ""

    def test_same_frame_sorted_by_track_id(self):
        t2 = Track(track_id=2, video_id="v", observations={1: Box(5, 5, 2, 2)})
        t1 = Track(track_id=1, video_id="v", observations={1: Box(0, 0, 2, 2)})
        lines = write_mot_tracks([t2, t1]).splitlines()
        assert lines[0].startswith("1,1,") and lines[1].startswith("1,2,")

    def test_round_trip_exact(self, make_track):
        tracks = [
            make_track(1, "v", {1: (0.5, 1.25, 3.0, 4.0), 2: (0.51, 1.0, 3.0, 4.0)}),
            make_track(2, "v", {1: (10.123456789, 0.0, 5.5, 6.25)}),
        ]
        parsed = parse_mot_tracks(write_mot_tracks(tracks), "v")
        assert {(t.track_id, tuple(t.observations.items())) for t in parsed} == {
            (t.track_id, tuple(t.observations.items())) for t in tracks
        }

    def test_duplicate_frame_rejected(self):
        with pytest.raises(ParseError):
            parse_mot_tracks("1,1,0,0,2,2,1\n1,1,5,5,2,2,1", "v")

    @given(
        st.lists(
            st.tuples(
                st.integers(1, 50),
                st.floats(-1e4, 1e4, allow_nan=False, width=32),
                st.floats(-1e4, 1e4, allow_nan=False, width=32),
                st.floats(0, 1e3, allow_nan=False, width=32),
                st.floats(0, 1e3, allow_nan=False, width=32),
            ),
            min_size=1,
            max_size=30,
            unique_by=lambda r: r[0],
        )
    )
    @settings(max_examples=60, deadline=None)
    def test_round_trip_property(self, rows):
        track = Track(
            track_id=7,
            video_id="v",
            observations={f: Box(l, t, w, h) for f, l, t, w, h in sorted(rows)},
        )
        parsed = parse_mot_tracks(write_mot_tracks([track]), "v")
        assert len(parsed) == 1
        assert parsed[0].observations == track.observations


class TestFormatCoord:
    @pytest.mark.parametrize(
        "value,expected",
        [(3.0, "3"), (-2.0, "-2"), (1.5, "1.5"), (1.25, "1.25"), (0.1, "0.1")],
    )
    def test_compact_forms(self, value, expected):
        assert format_coord(value) == expected

    @given(st.floats(-1e6, 1e6, allow_nan=False))
    @settings(max_examples=200, deadline=None)
    def test_always_parses_back_exactly(self, value):
        assert float(format_coord(value)) == value


class TestQueries:
    def test_well_formed(self):
        out = parse_queries('{"query_id": "q1", "video_id": "v", "text": "a dog"}')
        assert out == [Query("q1", "v", "a dog")]

    def test_duplicate_id_rejected(self):
        text = (
            '{"query_id": "q1", "video_id": "v", "text": "a"}\n'
            '{"query_id": "q1", "video_id": "v", "text": "b"}'
        )
        with pytest.raises(ParseError) as err:
            parse_queries(text)
        assert err.value.line == 2

    def test_order_preserved(self):
        queries = [Query(f"q{i}", "v", f"text {i}") for i in range(3)]
        assert parse_queries(write_queries(queries)) == queries

    def test_missing_key(self):
        with pytest.raises(ParseError):
            parse_queries('{"query_id": "q1", "text": "a"}')

    def test_empty_text(self):
        with pytest.raises(ParseError):
            parse_queries('{"query_id": "q1", "video_id": "v", "text": ""}')

    def test_invalid_json_carries_line(self):
        with pytest.raises(ParseError) as err:
            parse_queries('{"query_id": "q1", "video_id": "v", "text": "a"}\n{oops')
        assert err.value.line == 2


class TestGroundTruth:
    def test_round_trip(self, make_track):
        entries = [
            GroundTruthEntry(
                query_id="q1",
                video_id="v",
                tracks=[make_track(1, "v", {1: (0, 0, 5, 5), 2: (1, 0, 5, 5)})],
            )
        ]
        parsed = parse_ground_truth(write_ground_truth(entries))
        assert parsed[0].query_id == "q1"
        assert parsed[0].tracks[0].observations == entries[0].tracks[0].observations

    def test_entry_without_tracks_rejected(self):
        with pytest.raises(ParseError):
            parse_ground_truth('{"query_id": "q", "video_id": "v", "tracks": []}')


class TestSubmission:
    def test_round_trip(self):
        line = (
            '{"query_id": "q1", "video_id": "v", "ranked": '
            '[{"video_id": "v", "track_id": 3, "score": 0.5, '
            '"boxes": [[1, 0, 0, 5, 5], [2, 1, 0, 5, 5]]}]}'
        )
        parsed = parse_submission(line)
        assert parsed[0]["query_id"] == "q1"
        track = parsed[0]["ranked"][0]["track"]
        assert track.track_id == 3 and list(track.observations) == [1, 2]

    def test_dangling_fields_rejected(self):
        with pytest.raises(ParseError):
            parse_submission('{"query_id": "q1", "ranked": [{"track_id": 3}]}')


class TestEmbeddings:
    def test_zero_vector_round_trip(self):
        mapping = {("v", 1): np.zeros(384, dtype=np.float32)}
        out = read_embeddings_bytes(write_embeddings_bytes(mapping))
        assert np.array_equal(out[("v", 1)], mapping[("v", 1)])

    def test_dimension_mismatch(self):
        mapping = {("v", 1): np.zeros(512, dtype=np.float32)}
        data = write_embeddings_bytes(mapping)
        with pytest.raises(ParseError):
            read_embeddings_bytes(data, expected_dim=384)
        # Matching override dimension is accepted.
        out = read_embeddings_bytes(data, expected_dim=512)
        assert out[("v", 1)].shape == (512,)

    def test_bit_exact_round_trip_random(self):
        rng = np.random.default_rng(6)
        mapping = {
            (f"v{i % 3}", i): rng.standard_normal(384).astype(np.float32)
            for i in range(100)
        }
        data = write_embeddings_bytes(mapping)
        out = read_embeddings_bytes(data)
        assert set(out) == set(mapping)
        for key in mapping:
            assert out[key].tobytes() == mapping[key].tobytes()
        # Write of the read-back bytes is byte-identical too.
        assert write_embeddings_bytes(out) == data

    def test_truncated_body_rejected(self):
        data = write_embeddings_bytes({("v", 1): np.ones(384, dtype=np.float32)})
        with pytest.raises(ParseError):
            read_embeddings_bytes(data[:-8])

    def test_non_finite_rejected(self):
        vec = np.ones(384, dtype=np.float32)
        vec[0] = np.nan
        with pytest.raises(Exception):
            write_embeddings_bytes({("v", 1): vec})
