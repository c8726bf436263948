"""Embedding store: formats, round-trips, split validation."""

import json
import struct

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from miaudit import (
    DatasetSplit,
    EmbeddingMatrix,
    ParseError,
    QueryRecord,
    ShapeError,
    ValidationError,
    load_records,
    save_records,
    validate_split,
)


def make_record(rec_id="r0", k=3, d=4, m=2, label=1, seed=0, scenario="custom"):
    rng = np.random.default_rng(seed)
    return QueryRecord(
        id=rec_id,
        query_embedding=EmbeddingMatrix(rng.standard_normal((k, d)).astype(np.float32)),
        generated_embeddings=tuple(
            EmbeddingMatrix(rng.standard_normal((k, d)).astype(np.float32)) for _ in range(m)
        ),
        label=label,
        text_available=True,
        scenario=scenario,
    )


class TestEmbeddingMatrix:
    def test_shape_properties(self):
        m = EmbeddingMatrix(np.zeros((5, 7), dtype=np.float32))
        assert (m.k, m.d) == (5, 7)

    def test_rejects_nan_and_inf(self):
        with pytest.raises(ValidationError):
            EmbeddingMatrix(np.array([[1.0, np.nan]], dtype=np.float32))
        with pytest.raises(ValidationError):
            EmbeddingMatrix(np.array([[np.inf, 0.0]], dtype=np.float32))

    def test_rejects_wrong_rank(self):
        with pytest.raises(ShapeError):
            EmbeddingMatrix(np.zeros(4, dtype=np.float32))

    def test_is_immutable(self):
        m = EmbeddingMatrix(np.ones((2, 2), dtype=np.float32))
        with pytest.raises(ValueError):
            m.values[0, 0] = 5.0


class TestQueryRecord:
    def test_mixed_shapes_rejected(self):
        q = EmbeddingMatrix(np.zeros((3, 4), dtype=np.float32))
        g = EmbeddingMatrix(np.zeros((3, 5), dtype=np.float32))
        with pytest.raises(ShapeError):
            QueryRecord(id="x", query_embedding=q, generated_embeddings=(g,))

    def test_needs_generated(self):
        q = EmbeddingMatrix(np.zeros((3, 4), dtype=np.float32))
        with pytest.raises(ValidationError):
            QueryRecord(id="x", query_embedding=q, generated_embeddings=())

    def test_label_values(self):
        q = EmbeddingMatrix(np.zeros((2, 2), dtype=np.float32))
        with pytest.raises(ValidationError):
            QueryRecord(id="x", query_embedding=q, generated_embeddings=(q,), label=2)


class TestJsonl:
    def test_two_records_identity(self, tmp_path):
        records = [make_record("a", seed=1), make_record("b", seed=2)]
        path = str(tmp_path / "r.jsonl")
        save_records(records, path, "jsonl")
        loaded = load_records(path, "jsonl")
        assert len(loaded) == 2
        assert [r.id for r in loaded] == ["a", "b"]

    def test_round_trip_structural_equality(self, tmp_path):
        records = [make_record(f"r{i}", label=i % 2, seed=i) for i in range(5)]
        path = str(tmp_path / "r.jsonl")
        save_records(records, path, "jsonl")
        loaded = load_records(path, "jsonl")
        assert loaded == records

    def test_one_record_is_one_line_plus_newline(self, tmp_path):
        path = str(tmp_path / "one.jsonl")
        save_records([make_record()], path, "jsonl")
        raw = open(path, "rb").read()
        assert raw.endswith(b"\n")
        assert raw.count(b"\n") == 1

    def test_shape_error_names_record(self, tmp_path):
        # hand-build a file whose generated embedding has d=3 vs query d=4
        obj = {
            "id": "broken-rec",
            "scenario": "custom",
            "text_available": True,
            "label": 0,
            "query": [[0.0, 1.0, 2.0, 3.0]],
            "generated": [[[0.0, 1.0, 2.0]]],
        }
        path = tmp_path / "bad.jsonl"
        path.write_text(json.dumps(obj) + "\n")
        with pytest.raises(ShapeError, match="broken-rec"):
            load_records(str(path), "jsonl")

    def test_parse_error_reports_line(self, tmp_path):
        good = json.dumps(
            {
                "id": "ok",
                "scenario": "custom",
                "text_available": True,
                "label": None,
                "query": [[1.0]],
                "generated": [[[1.0]]],
            }
        )
        path = tmp_path / "bad.jsonl"
        path.write_text(good + "\n{not json\n")
        with pytest.raises(ParseError, match="line 2"):
            load_records(str(path), "jsonl")

    def test_nonfinite_value_rejected(self, tmp_path):
        obj = {
            "id": "x",
            "scenario": "custom",
            "text_available": True,
            "label": None,
            "query": [[float("1e40"), 0.0]],  # overflows float32 to inf
            "generated": [[[0.0, 0.0]]],
        }
        path = tmp_path / "inf.jsonl"
        path.write_text(json.dumps(obj) + "\n")
        with pytest.raises(ValidationError):
            load_records(str(path), "jsonl")

    def test_inconsistent_kd_across_records(self, tmp_path):
        recs = [make_record("a", k=2, d=2), make_record("b", k=2, d=3)]
        path = str(tmp_path / "r.jsonl")
        with pytest.raises(ShapeError):
            save_records(recs, path, "jsonl")

    def test_per_record_m_variation_rejected(self, tmp_path):
        recs = [make_record("a", m=2), make_record("b", m=3)]
        with pytest.raises(ValidationError, match="m"):
            save_records(recs, str(tmp_path / "r.jsonl"), "jsonl")


class TestBinary:
    def test_round_trip_100_random_records(self, tmp_path):
        records = [make_record(f"r{i:03d}", k=4, d=6, m=3, label=i % 2, seed=i) for i in range(100)]
        path = str(tmp_path / "r.bin")
        save_records(records, path, "binary")
        loaded = load_records(path, "binary")
        assert len(loaded) == 100
        for orig, back in zip(records, loaded):
            assert back.id == orig.id
            assert back.label == orig.label
            # exact 32-bit float identity
            assert np.array_equal(back.query_embedding.values, orig.query_embedding.values)
            for g0, g1 in zip(orig.generated_embeddings, back.generated_embeddings):
                assert np.array_equal(g0.values, g1.values)

    def test_header_layout(self, tmp_path):
        rec = make_record("ab", k=2, d=3, m=1, label=None)
        path = str(tmp_path / "r.bin")
        save_records([rec], path, "binary")
        raw = open(path, "rb").read()
        assert raw[:4] == b"MIAE"
        version, k, d, m, count = struct.unpack("<5I", raw[4:24])
        assert (version, k, d, m, count) == (1, 2, 3, 1, 1)
        (id_len,) = struct.unpack("<H", raw[24:26])
        assert id_len == 2
        assert raw[26:28] == b"ab"
        label_byte, text_byte = raw[28], raw[29]
        assert label_byte == 255  # absent
        assert text_byte == 1
        floats = np.frombuffer(raw[30:], dtype="<f4")
        assert floats.shape == ((1 + 1) * 2 * 3,)
        assert np.array_equal(floats[:6].reshape(2, 3), rec.query_embedding.values)

    def test_hand_built_file_loads(self, tmp_path):
        # write the layout by hand with struct, independent of the writer
        buf = b"MIAE" + struct.pack("<5I", 1, 1, 2, 1, 1)
        buf += struct.pack("<H", 3) + b"xyz" + struct.pack("<BB", 1, 0)
        buf += np.array([[1.5, -2.5]], dtype="<f4").tobytes()
        buf += np.array([[0.25, 4.0]], dtype="<f4").tobytes()
        path = tmp_path / "hand.bin"
        path.write_bytes(buf)
        (rec,) = load_records(str(path), "binary")
        assert rec.id == "xyz"
        assert rec.label == 1
        assert rec.text_available is False
        assert rec.scenario == "custom"
        assert np.array_equal(rec.query_embedding.values, np.array([[1.5, -2.5]], dtype=np.float32))
        assert np.array_equal(
            rec.generated_embeddings[0].values, np.array([[0.25, 4.0]], dtype=np.float32)
        )

    def test_truncated_file_rejected(self, tmp_path):
        rec = make_record("ab", k=2, d=3, m=1)
        path = tmp_path / "r.bin"
        save_records([rec], str(path), "binary")
        path.write_bytes(path.read_bytes()[:-7])
        with pytest.raises(ParseError, match="truncated"):
            load_records(str(path), "binary")

    def test_bad_magic_rejected(self, tmp_path):
        path = tmp_path / "junk.bin"
        path.write_bytes(b"JUNKJUNKJUNK")
        with pytest.raises(ParseError, match="magic"):
            load_records(str(path), "binary")


class TestFormatEquivalence:
    @settings(max_examples=20, deadline=None)
    @given(st.integers(0, 2**31 - 1), st.integers(1, 4), st.integers(1, 4), st.integers(1, 3))
    def test_jsonl_and_binary_load_identically(self, tmp_path_factory, seed, k, d, m):
        tmp = tmp_path_factory.mktemp("fmt")
        records = [make_record(f"r{i}", k=k, d=d, m=m, label=i % 2, seed=seed + i) for i in range(3)]
        pj, pb = str(tmp / "r.jsonl"), str(tmp / "r.bin")
        save_records(records, pj, "jsonl")
        save_records(records, pb, "binary")
        assert load_records(pj, "jsonl") == load_records(pb, "binary")

    def test_loading_preserves_order(self, tmp_path):
        records = [make_record(f"z{i}", seed=i) for i in range(7)]
        for fmt, name in (("jsonl", "r.jsonl"), ("binary", "r.bin")):
            path = str(tmp_path / name)
            save_records(records, path, fmt)
            assert [r.id for r in load_records(path, fmt)] == [r.id for r in records]


class TestSaveErrors:
    def test_empty_list_rejected(self, tmp_path):
        with pytest.raises(ValidationError, match="no records"):
            save_records([], str(tmp_path / "x.jsonl"), "jsonl")

    def test_unwritable_path(self, tmp_path):
        with pytest.raises(OSError):
            save_records([make_record()], str(tmp_path / "nope" / "x.jsonl"), "jsonl")


class TestValidateSplit:
    def split(self, n_members=10, n_nonmembers=10):
        return DatasetSplit(
            shadow_members=[make_record(f"sm{i}", seed=i) for i in range(4)],
            shadow_nonmembers=[make_record(f"sn{i}", label=0, seed=i) for i in range(4)],
            target_members=[make_record(f"tm{i}", seed=i) for i in range(n_members)],
            target_nonmembers=[make_record(f"tn{i}", label=0, seed=i) for i in range(n_nonmembers)],
        )

    def test_balanced_pass(self):
        validate_split(self.split(10, 10), balanced=True)

    def test_imbalance_reports_counts(self):
        with pytest.raises(ValidationError, match=r"\(10, 9\)"):
            validate_split(self.split(10, 9), balanced=True)

    def test_imbalance_allowed_when_unbalanced(self):
        validate_split(self.split(10, 9), balanced=False)

    def test_duplicate_across_shadow_lists(self):
        split = self.split()
        split.shadow_nonmembers.append(make_record("sm0", label=0))
        with pytest.raises(ValidationError, match="sm0"):
            validate_split(split, balanced=True)

    def test_shadow_target_overlap_is_legal(self):
        split = self.split()
        split.shadow_members[0] = make_record("tm0")
        validate_split(split, balanced=True)
