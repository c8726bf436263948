"""Data model for audit samples and their on-disk formats.

A query record bundles the patch embedding of one query image with the
embeddings of the m images the generator produced for the same prompt.
Records are stored either as human-auditable JSONL or as a compact binary
format for bulk runs; both round-trip at 32-bit float precision.
"""

from __future__ import annotations

import json
import struct
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .errors import ParseError, ShapeError, ValidationError

BINARY_MAGIC = b"MIAE"
BINARY_VERSION = 1

SCENARIOS = ("I", "II", "III", "IV", "custom")

# label byte in the binary format
_LABEL_ABSENT = 255


@dataclass(frozen=True)
class EmbeddingMatrix:
    """k patches x d feature dims of real-valued image features."""

    values: np.ndarray  # float32, shape (k, d), read-only

    def __post_init__(self):
        values = np.asarray(self.values, dtype=np.float32)
        if values.ndim != 2:
            raise ShapeError(f"embedding must be 2-dimensional, got shape {values.shape}")
        if values.shape[0] < 1 or values.shape[1] < 1:
            raise ShapeError(f"embedding needs k >= 1 and d >= 1, got shape {values.shape}")
        if not np.all(np.isfinite(values)):
            raise ValidationError("embedding contains non-finite values")
        values = values.copy()
        values.flags.writeable = False
        object.__setattr__(self, "values", values)

    @property
    def k(self) -> int:
        return self.values.shape[0]

    @property
    def d(self) -> int:
        return self.values.shape[1]

    @property
    def shape(self) -> tuple[int, int]:
        return self.values.shape

    def __eq__(self, other):
        if not isinstance(other, EmbeddingMatrix):
            return NotImplemented
        return self.values.shape == other.values.shape and np.array_equal(
            self.values, other.values
        )

    def __hash__(self):
        return hash((self.values.shape, self.values.tobytes()))


@dataclass(frozen=True)
class QueryRecord:
    """One audit sample: query embedding, m generated embeddings, optional label."""

    id: str
    query_embedding: EmbeddingMatrix
    generated_embeddings: tuple[EmbeddingMatrix, ...]
    label: int | None = None
    text_available: bool = True
    scenario: str = "custom"

    def __post_init__(self):
        if not self.id:
            raise ValidationError("record id must be a non-empty string")
        gen = tuple(self.generated_embeddings)
        object.__setattr__(self, "generated_embeddings", gen)
        if len(gen) < 1:
            raise ValidationError(f"record {self.id!r}: needs at least one generated embedding")
        shape = self.query_embedding.shape
        for i, g in enumerate(gen):
            if g.shape != shape:
                raise ShapeError(
                    f"record {self.id!r}: generated embedding {i} has shape {g.shape}, "
                    f"query has {shape}"
                )
        if self.label is not None and self.label not in (0, 1):
            raise ValidationError(f"record {self.id!r}: label must be 0, 1 or None")
        if self.scenario not in SCENARIOS:
            raise ValidationError(
                f"record {self.id!r}: scenario must be one of {SCENARIOS}, got {self.scenario!r}"
            )

    @property
    def m(self) -> int:
        return len(self.generated_embeddings)

    @property
    def k(self) -> int:
        return self.query_embedding.k

    @property
    def d(self) -> int:
        return self.query_embedding.d


@dataclass
class DatasetSplit:
    """Shadow and target member/non-member record lists."""

    shadow_members: list[QueryRecord] = field(default_factory=list)
    shadow_nonmembers: list[QueryRecord] = field(default_factory=list)
    target_members: list[QueryRecord] = field(default_factory=list)
    target_nonmembers: list[QueryRecord] = field(default_factory=list)


def validate_split(split: DatasetSplit, balanced: bool = True) -> None:
    """Check id uniqueness per side and (when balanced) equal target class sizes.

    Shadow and target sides may intentionally share ids (auxiliary-data overlap),
    so uniqueness is enforced within each side's member+non-member union.
    """
    for side, lists in (
        ("shadow", (split.shadow_members, split.shadow_nonmembers)),
        ("target", (split.target_members, split.target_nonmembers)),
    ):
        seen: dict[str, int] = {}
        dupes = []
        for records in lists:
            for rec in records:
                seen[rec.id] = seen.get(rec.id, 0) + 1
                if seen[rec.id] == 2:
                    dupes.append(rec.id)
        if dupes:
            raise ValidationError(f"duplicate record ids in {side} split: {sorted(dupes)}")
    if balanced:
        n_m, n_nm = len(split.target_members), len(split.target_nonmembers)
        if n_m != n_nm:
            raise ValidationError(
                f"balanced evaluation requires equal target member/non-member counts, "
                f"got ({n_m}, {n_nm})"
            )


def _check_uniform(records: Sequence[QueryRecord]) -> tuple[int, int, int]:
    """All records in one file must share (k, d, m)."""
    first = records[0]
    k, d, m = first.k, first.d, first.m
    for rec in records[1:]:
        if (rec.k, rec.d) != (k, d):
            raise ShapeError(
                f"record {rec.id!r}: shape ({rec.k}, {rec.d}) differs from file shape ({k}, {d})"
            )
        if rec.m != m:
            raise ValidationError(
                f"record {rec.id!r}: m={rec.m} differs from file m={m}; "
                "per-record m variation is not supported"
            )
    return k, d, m


# ---------------------------------------------------------------------------
# JSONL format
# ---------------------------------------------------------------------------

def _record_to_json_obj(rec: QueryRecord) -> dict:
    return {
        "id": rec.id,
        "scenario": rec.scenario,
        "text_available": rec.text_available,
        "label": rec.label,
        "query": [[float(v) for v in row] for row in rec.query_embedding.values],
        "generated": [
            [[float(v) for v in row] for row in g.values] for g in rec.generated_embeddings
        ],
    }


def _record_from_json_obj(obj: dict, line: int) -> QueryRecord:
    try:
        rec_id = obj["id"]
        scenario = obj["scenario"]
        text_available = obj["text_available"]
        label = obj["label"]
        query = obj["query"]
        generated = obj["generated"]
    except (KeyError, TypeError) as exc:
        raise ParseError(f"missing or malformed field: {exc}", line=line) from exc
    if not isinstance(rec_id, str):
        raise ParseError("field 'id' must be a string", line=line)
    if label is not None and label not in (0, 1):
        raise ParseError(f"field 'label' must be 0, 1 or null, got {label!r}", line=line)
    try:
        with np.errstate(over="ignore"):
            q = EmbeddingMatrix(np.asarray(query, dtype=np.float32))
            gen = tuple(EmbeddingMatrix(np.asarray(g, dtype=np.float32)) for g in generated)
    except ValueError as exc:
        raise ParseError(f"ragged embedding array in record {rec_id!r}", line=line) from exc
    return QueryRecord(
        id=rec_id,
        query_embedding=q,
        generated_embeddings=gen,
        label=label,
        text_available=bool(text_available),
        scenario=scenario,
    )


def _save_jsonl(records: Sequence[QueryRecord], path: str) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for rec in records:
            fh.write(json.dumps(_record_to_json_obj(rec), separators=(",", ":")))
            fh.write("\n")


def _load_jsonl(path: str) -> list[QueryRecord]:
    records = []
    with open(path, "r", encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise ParseError(f"invalid JSON: {exc.msg}", line=line_no) from exc
            records.append(_record_from_json_obj(obj, line_no))
    return records


# ---------------------------------------------------------------------------
# Binary format
# ---------------------------------------------------------------------------
# Layout: magic 'MIAE'; u32 LE version, k, d, m, record_count; per record:
# u16 LE id length, UTF-8 id bytes, u8 label (0/1/255=absent), u8 text_available,
# (1+m)*k*d f32 LE values, query matrix first, generated matrices in order.
# The binary layout carries no scenario tag; records load as scenario='custom'.

def _save_binary(records: Sequence[QueryRecord], path: str) -> None:
    k, d, m = _check_uniform(records)
    with open(path, "wb") as fh:
        fh.write(BINARY_MAGIC)
        fh.write(struct.pack("<5I", BINARY_VERSION, k, d, m, len(records)))
        for rec in records:
            id_bytes = rec.id.encode("utf-8")
            if len(id_bytes) > 0xFFFF:
                raise ValidationError(f"record id too long for binary format: {rec.id[:32]!r}...")
            label_byte = _LABEL_ABSENT if rec.label is None else rec.label
            fh.write(struct.pack("<H", len(id_bytes)))
            fh.write(id_bytes)
            fh.write(struct.pack("<BB", label_byte, 1 if rec.text_available else 0))
            fh.write(rec.query_embedding.values.astype("<f4").tobytes())
            for g in rec.generated_embeddings:
                fh.write(g.values.astype("<f4").tobytes())


def _load_binary(path: str) -> list[QueryRecord]:
    with open(path, "rb") as fh:
        data = fh.read()
    if len(data) < 4 or data[:4] != BINARY_MAGIC:
        raise ParseError(f"bad magic bytes in {path!r}; not an embedding file")
    header_end = 4 + struct.calcsize("<5I")
    if len(data) < header_end:
        raise ParseError("truncated header")
    version, k, d, m, count = struct.unpack("<5I", data[4:header_end])
    if version != BINARY_VERSION:
        raise ParseError(f"unsupported format version {version}")
    if k < 1 or d < 1 or m < 1:
        raise ParseError(f"invalid geometry in header: k={k}, d={d}, m={m}")
    matrix_bytes = (1 + m) * k * d * 4
    records = []
    off = header_end
    for idx in range(count):
        if off + 2 > len(data):
            raise ParseError(f"truncated file at record {idx}")
        (id_len,) = struct.unpack_from("<H", data, off)
        off += 2
        if off + id_len + 2 + matrix_bytes > len(data):
            raise ParseError(f"truncated file at record {idx}")
        rec_id = data[off : off + id_len].decode("utf-8")
        off += id_len
        label_byte, text_byte = struct.unpack_from("<BB", data, off)
        off += 2
        if label_byte not in (0, 1, _LABEL_ABSENT):
            raise ParseError(f"record {rec_id!r}: invalid label byte {label_byte}")
        values = np.frombuffer(data, dtype="<f4", count=(1 + m) * k * d, offset=off)
        off += matrix_bytes
        mats = values.reshape(1 + m, k, d)
        records.append(
            QueryRecord(
                id=rec_id,
                query_embedding=EmbeddingMatrix(mats[0]),
                generated_embeddings=tuple(EmbeddingMatrix(mat) for mat in mats[1:]),
                label=None if label_byte == _LABEL_ABSENT else int(label_byte),
                text_available=bool(text_byte),
                scenario="custom",
            )
        )
    if off != len(data):
        raise ParseError(f"{len(data) - off} trailing bytes after {count} records")
    return records


# ---------------------------------------------------------------------------
# Public API
# ---------------------------------------------------------------------------

def save_records(records: Iterable[QueryRecord], path: str, format: str = "jsonl") -> None:
    records = list(records)
    if not records:
        raise ValidationError("no records to save")
    _check_uniform(records)
    if format == "jsonl":
        _save_jsonl(records, path)
    elif format == "binary":
        _save_binary(records, path)
    else:
        raise ValidationError(f"unknown format {format!r}; expected 'jsonl' or 'binary'")


def load_records(path: str, format: str = "jsonl") -> list[QueryRecord]:
    if format == "jsonl":
        records = _load_jsonl(path)
    elif format == "binary":
        records = _load_binary(path)
    else:
        raise ValidationError(f"unknown format {format!r}; expected 'jsonl' or 'binary'")
    if not records:
        raise ValidationError(f"no records in {path!r}")
    _check_uniform(records)
    return records
