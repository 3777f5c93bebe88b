"""Dataset manifests, corpus statistics, LM corpus assembly, and file I/O.

Manifests are JSON Lines: one object per utterance with required keys
``id``, ``audio_path``, ``duration_seconds``, ``text``, ``language`` and
optional ``region``, ``split``.  Unknown keys are preserved opaquely so a
load/save round trip is lossless.  Audio is never read; durations are
trusted from the manifest.

Emission files use the EMIS binary format shared with the decoder: magic
``EMIS``, little-endian uint32 version (= 1), uint32 T, uint32 V, then
T*V little-endian float32 natural-log probabilities in row-major order.
The sidecar vocabulary file lists one token per line, with the literal
``<blank>`` for the blank and ``|`` for the word delimiter.
"""

from __future__ import annotations

import json
import struct
import sys
from dataclasses import dataclass
from pathlib import Path
from typing import IO, Optional, Sequence, Union

import numpy as np

from .decoder import BLANK_TOKEN, EmissionMatrix, Vocabulary
from .errors import EmissionFormatError, ManifestError, VocabularyError
from .textnorm import NormalizationConfig, TranscriptRecord, normalize_corpus, normalize_transcript

__all__ = [
    "Manifest",
    "DatasetStats",
    "load_manifest",
    "save_manifest",
    "dataset_stats",
    "build_lm_corpus",
    "read_emissions",
    "write_emissions",
    "read_vocabulary",
    "write_vocabulary",
]

_REQUIRED_KEYS = ("id", "audio_path", "duration_seconds", "text", "language")
_OPTIONAL_KEYS = ("region", "split")

EMISSION_MAGIC = b"EMIS"
EMISSION_VERSION = 1
_HEADER = struct.Struct("<4sIII")


@dataclass(frozen=True)
class Manifest:
    """A named sequence of transcript records with unique ids."""

    records: tuple[TranscriptRecord, ...]
    source_name: str = ""

    def __post_init__(self) -> None:
        seen: set[str] = set()
        for record in self.records:
            if record.id in seen:
                raise ManifestError(f"duplicate record id {record.id!r}")
            seen.add(record.id)

    def __len__(self) -> int:
        return len(self.records)

    def by_id(self) -> dict[str, TranscriptRecord]:
        return {record.id: record for record in self.records}


def load_manifest(path: str, source_name: Optional[str] = None) -> Manifest:
    """Read a JSON-Lines manifest; errors cite the offending line number."""
    records: list[TranscriptRecord] = []
    ids: set[str] = set()
    with open(path, encoding="utf-8") as handle:
        for line_no, line in enumerate(handle, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                payload = json.loads(line)
            except json.JSONDecodeError as error:
                raise ManifestError(f"{path}:{line_no}: invalid JSON ({error.msg})") from None
            if not isinstance(payload, dict):
                raise ManifestError(f"{path}:{line_no}: expected a JSON object")
            for key in _REQUIRED_KEYS:
                if key not in payload:
                    raise ManifestError(f"{path}:{line_no}: missing required key {key!r}")
            extras = {
                k: v for k, v in payload.items() if k not in _REQUIRED_KEYS + _OPTIONAL_KEYS
            }
            try:
                record = TranscriptRecord(
                    id=str(payload["id"]),
                    audio_path=str(payload["audio_path"]),
                    duration_seconds=float(payload["duration_seconds"]),
                    raw_text=str(payload["text"]),
                    language=str(payload["language"]),
                    region=None if payload.get("region") is None else str(payload["region"]),
                    split=None if payload.get("split") is None else str(payload["split"]),
                    extras=extras,
                )
            except (TypeError, ValueError) as error:
                raise ManifestError(f"{path}:{line_no}: {error}") from None
            if record.id in ids:
                raise ManifestError(f"{path}:{line_no}: duplicate record id {record.id!r}")
            ids.add(record.id)
            records.append(record)
    return Manifest(tuple(records), source_name or Path(path).stem)


def save_manifest(manifest: Manifest, path: str) -> None:
    """Write a manifest back as JSON Lines (UTF-8, stable key order)."""
    with open(path, "w", encoding="utf-8") as handle:
        for record in manifest.records:
            payload: dict = {
                "id": record.id,
                "audio_path": record.audio_path,
                "duration_seconds": record.duration_seconds,
                "text": record.raw_text,
                "language": record.language,
            }
            if record.region is not None:
                payload["region"] = record.region
            if record.split is not None:
                payload["split"] = record.split
            for key in sorted(record.extras):
                payload[key] = record.extras[key]
            handle.write(json.dumps(payload, ensure_ascii=False) + "\n")


_GROUP_FIELDS = ("split", "language", "region")


def _group_key(record: TranscriptRecord, fields: Sequence[str]) -> tuple[str, ...]:
    key = []
    for name in fields:
        value = getattr(record, name, None)
        key.append(str(value) if value is not None else "unknown")
    return tuple(key)


@dataclass(frozen=True)
class DatasetStats:
    """Hour/sample sums per group, plus totals, in grouping order."""

    group_by: tuple[str, ...]
    rows: dict[tuple[str, ...], tuple[float, int]]
    total_hours: float
    total_samples: int

    def to_tsv(self) -> str:
        """Render with hours to 2 decimals and comma-grouped sample counts."""
        header = "\t".join((*self.group_by, "hours", "samples"))
        lines = [header]
        for key in sorted(self.rows):
            hours, samples = self.rows[key]
            lines.append("\t".join((*key, f"{hours:.2f}", f"{samples:,}")))
        total_label = ("total",) + ("",) * (len(self.group_by) - 1) if self.group_by else ("total",)
        if not self.group_by:
            lines.append(f"total\t{self.total_hours:.2f}\t{self.total_samples:,}")
        else:
            lines.append(
                "\t".join((*total_label, f"{self.total_hours:.2f}", f"{self.total_samples:,}"))
            )
        return "\n".join(lines) + "\n"


def dataset_stats(
    manifest: Manifest, group_by: Sequence[str] = ("split", "language")
) -> DatasetStats:
    """Sum hours and sample counts per group with a totals row.

    ``group_by`` is any subset of split/language/region; records missing a
    field fall into the group "unknown".
    """
    for name in group_by:
        if name not in _GROUP_FIELDS:
            raise ValueError(f"group_by fields must be among {_GROUP_FIELDS}, got {name!r}")
    rows: dict[tuple[str, ...], list] = {}
    for record in manifest.records:
        key = _group_key(record, group_by)
        entry = rows.setdefault(key, [0.0, 0])
        entry[0] += record.duration_seconds / 3600.0
        entry[1] += 1
    total_hours = sum(hours for hours, _ in rows.values())
    total_samples = sum(samples for _, samples in rows.values())
    return DatasetStats(
        tuple(group_by),
        {key: (hours, samples) for key, (hours, samples) in rows.items()},
        total_hours,
        total_samples,
    )


def build_lm_corpus(
    manifests: Sequence[Manifest],
    extra_text_dirs: Sequence[str],
    config: NormalizationConfig,
    target: Union[str, IO[str]],
) -> tuple[int, int]:
    """Assemble a normalized LM corpus, one sentence per line.

    Manifest transcripts go through the full filter + normalize pipeline;
    extra ``.txt`` files (split on line boundaries only) are normalized and
    skipped when empty or, with ``drop_digits``, when they contain digits.
    Unreadable sources are reported to stderr and skipped.  Returns
    (line count, space-separated word count).
    """
    if not manifests and not extra_text_dirs:
        raise ValueError("build_lm_corpus needs at least one source")
    if isinstance(target, str):
        with open(target, "w", encoding="utf-8") as handle:
            return build_lm_corpus(manifests, extra_text_dirs, config, handle)

    lines = 0
    words = 0

    def emit(text: str) -> None:
        nonlocal lines, words
        target.write(text + "\n")
        lines += 1
        words += len(text.split())

    for manifest in manifests:
        kept, _ = normalize_corpus(manifest.records, config)
        for record in kept:
            emit(record.raw_text)
    for directory in extra_text_dirs:
        for path in sorted(Path(directory).glob("*.txt")):
            try:
                raw_lines = path.read_text(encoding="utf-8").splitlines()
            except OSError as error:
                print(f"warning: skipping unreadable {path}: {error}", file=sys.stderr)
                continue
            for raw in raw_lines:
                if config.drop_digits and any(ch.isdigit() for ch in raw):
                    continue
                normalized = normalize_transcript(raw, config)
                if normalized:
                    emit(normalized)
    return lines, words


def write_emissions(matrix: EmissionMatrix, path: str) -> None:
    """Write an emission matrix in the EMIS binary format."""
    payload = np.ascontiguousarray(matrix.log_probs, dtype="<f4")
    with open(path, "wb") as handle:
        handle.write(_HEADER.pack(EMISSION_MAGIC, EMISSION_VERSION, matrix.frames, matrix.vocab_size))
        handle.write(payload.tobytes())


def read_emissions(path: str) -> EmissionMatrix:
    """Read an EMIS file, rejecting bad magic, versions, and size mismatches."""
    with open(path, "rb") as handle:
        header = handle.read(_HEADER.size)
        if len(header) < _HEADER.size:
            raise EmissionFormatError(f"{path}: truncated header ({len(header)} bytes)")
        magic, version, frames, vocab_size = _HEADER.unpack(header)
        if magic != EMISSION_MAGIC:
            raise EmissionFormatError(f"{path}: bad magic {magic!r}, expected {EMISSION_MAGIC!r}")
        if version != EMISSION_VERSION:
            raise EmissionFormatError(f"{path}: unsupported format version {version}")
        payload = handle.read()
    expected = frames * vocab_size * 4
    if len(payload) != expected:
        raise EmissionFormatError(
            f"{path}: payload size mismatch, header implies {expected} bytes, found {len(payload)}"
        )
    values = np.frombuffer(payload, dtype="<f4").reshape(frames, vocab_size)
    try:
        return EmissionMatrix(values)
    except ValueError as error:
        raise EmissionFormatError(f"{path}: {error}") from None


def write_vocabulary(vocab: Vocabulary, path: str) -> None:
    """Write the sidecar token list (one per line, '|' for the delimiter)."""
    with open(path, "w", encoding="utf-8") as handle:
        for i, token in enumerate(vocab.tokens):
            if i == vocab.delimiter_index:
                handle.write("|\n")
            else:
                handle.write(token + "\n")


def read_vocabulary(path: str) -> Vocabulary:
    """Read a sidecar vocabulary file.

    The blank is the line reading ``<blank>``; the word delimiter is the
    line reading ``|`` (stored internally as a space).
    """
    tokens: list[str] = []
    blank_index = None
    delimiter_index = None
    with open(path, encoding="utf-8") as handle:
        for line_no, line in enumerate(handle):
            token = line.rstrip("\n")
            if not token:
                continue
            if token == BLANK_TOKEN:
                if blank_index is not None:
                    raise VocabularyError(f"{path}: multiple <blank> entries")
                blank_index = len(tokens)
            elif token == "|":
                if delimiter_index is not None:
                    raise VocabularyError(f"{path}: multiple delimiter entries")
                delimiter_index = len(tokens)
                token = " "
            tokens.append(token)
    if blank_index is None or delimiter_index is None:
        raise VocabularyError(f"{path}: vocabulary needs one <blank> and one | line")
    try:
        return Vocabulary(tuple(tokens), blank_index, delimiter_index)
    except ValueError as error:
        raise VocabularyError(f"{path}: {error}") from None
