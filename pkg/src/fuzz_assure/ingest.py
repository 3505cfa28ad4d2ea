"""Readers and writers for campaign incidence data.

Supported formats:

jsonl
    One object per line: ``{"id": "t1", "species": ["a", "b"], "order": 0}``
    (``order`` optional). UTF-8, LF line endings. Blank lines are ignored.
csv
    Header ``input_id,species_id``, one (input, species) pair per row. Rows
    for the same input must be contiguous. An empty ``species_id`` declares
    an input that exhibited nothing.
showmap
    A directory with one file per input, as written by ``afl-showmap``:
    lines ``EDGEID:COUNT``. The file name is the input id, the species is
    ``edge:EDGEID``; hit counts are ignored.
"""

from __future__ import annotations

import csv
import hashlib
import io
import json
import os
from dataclasses import dataclass, field
from pathlib import Path
from typing import IO, Iterable, Iterator

from .errors import ParseError
from .incidence import Accumulator, CampaignSnapshot, IncidenceRecord

KINDS = ("jsonl", "csv", "showmap")


@dataclass
class IngestStats:
    """Counters filled in while a parser runs."""

    records: int = 0
    skipped: int = 0
    duplicate_pairs: int = 0
    errors: list[str] = field(default_factory=list)


@dataclass(frozen=True)
class FormatDescriptor:
    kind: str = "jsonl"
    delimiter: str = ","
    id_column: str = "input_id"
    species_column: str = "species_id"
    prefix: str | None = None

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown format {self.kind!r}; choose from {KINDS}")
        if self.kind != "csv" and (
            self.delimiter != "," or self.id_column != "input_id"
            or self.species_column != "species_id"
        ):
            raise ValueError("delimiter and column names apply to csv only")

    @property
    def species_prefix(self) -> str:
        if self.prefix is not None:
            return self.prefix
        return "edge:" if self.kind == "showmap" else ""


def _fail(stats, skip_bad, err):
    if not skip_bad:
        raise err
    if stats is not None:
        stats.skipped += 1
        stats.errors.append(str(err))


def _json_record(obj, prefix):
    if not isinstance(obj, dict):
        raise ValueError("expected a JSON object")
    rid = obj.get("id")
    species = obj.get("species")
    if not isinstance(rid, str):
        raise ValueError("field 'id' must be a string")
    if not isinstance(species, list) or not all(isinstance(s, str) and s for s in species):
        raise ValueError("field 'species' must be an array of non-empty strings")
    order = obj.get("order")
    if order is not None and (isinstance(order, bool) or not isinstance(order, int) or order < 0):
        raise ValueError("field 'order' must be a non-negative integer")
    return IncidenceRecord(rid, frozenset(prefix + s for s in species), order)


def parse_jsonl(
    lines: Iterable[str],
    *,
    skip_bad: bool = False,
    stats: IngestStats | None = None,
    prefix: str = "",
    source: str | None = None,
) -> Iterator[IncidenceRecord]:
    for lineno, line in enumerate(lines, 1):
        if not line.strip():
            continue
        try:
            record = _json_record(json.loads(line), prefix)
        except ValueError as exc:
            _fail(stats, skip_bad, ParseError(str(exc), source=source, line=lineno))
            continue
        if stats is not None:
            stats.records += 1
        yield record


def parse_csv(
    lines: Iterable[str],
    *,
    delimiter: str = ",",
    id_column: str = "input_id",
    species_column: str = "species_id",
    skip_bad: bool = False,
    stats: IngestStats | None = None,
    prefix: str = "",
    source: str | None = None,
) -> Iterator[IncidenceRecord]:
    """Group contiguous rows into one record per input.

    A group that reappears after another input started raises ParseError;
    this needs the set of finished ids, which is the one piece of state that
    grows with the number of inputs.
    """
    reader = csv.reader(lines, delimiter=delimiter)
    header = next(reader, None)
    if header is None:
        return
    header = [h.strip() for h in header]
    try:
        id_col, sp_col = header.index(id_column), header.index(species_column)
    except ValueError:
        raise ParseError(
            f"header must contain {id_column!r} and {species_column!r}", source=source, line=1
        ) from None

    finished: set[str] = set()
    current: str | None = None
    species: set[str] = set()

    def emit():
        if stats is not None:
            stats.records += 1
        return IncidenceRecord(current, frozenset(species))

    for row in reader:
        lineno = reader.line_num
        if not row or all(not c.strip() for c in row):
            continue
        if len(row) <= max(id_col, sp_col):
            _fail(stats, skip_bad, ParseError("too few columns", source=source, line=lineno))
            continue
        rid, sid = row[id_col].strip(), row[sp_col].strip()
        if not rid:
            _fail(stats, skip_bad, ParseError("empty input id", source=source, line=lineno))
            continue
        if rid != current:
            if rid in finished:
                _fail(stats, skip_bad, ParseError(
                    f"non-contiguous group {rid}", source=source, line=lineno))
                continue
            if current is not None:
                yield emit()
                finished.add(current)
            current, species = rid, set()
        if sid:
            key = prefix + sid
            if key in species and stats is not None:
                stats.duplicate_pairs += 1
            species.add(key)
    if current is not None:
        yield emit()


def _showmap_file(path: Path, prefix: str) -> IncidenceRecord:
    species = set()
    try:
        with open(path, encoding="utf-8") as fh:
            for lineno, line in enumerate(fh, 1):
                line = line.strip()
                if not line:
                    continue
                edge, sep, count = line.partition(":")
                if not sep or not edge or not count.strip().isdigit():
                    raise ParseError(f"malformed line {line!r}", source=str(path), line=lineno)
                species.add(prefix + edge)
    except (OSError, UnicodeDecodeError) as exc:
        raise ParseError(f"unreadable file: {exc}", source=str(path)) from exc
    return IncidenceRecord(path.name, frozenset(species))


def parse_showmap_dir(
    directory: str | os.PathLike,
    *,
    skip_bad: bool = False,
    stats: IngestStats | None = None,
    prefix: str = "edge:",
) -> Iterator[IncidenceRecord]:
    """One record per regular file, visited in lexicographic name order."""
    directory = Path(directory)
    if not directory.is_dir():
        raise ParseError("not a directory", source=str(directory))
    for path in sorted((p for p in directory.iterdir() if p.is_file()), key=lambda p: p.name):
        try:
            record = _showmap_file(path, prefix)
        except ParseError as exc:
            _fail(stats, skip_bad, exc)
            continue
        if stats is not None:
            stats.records += 1
        yield record


def detect_format(path: str | os.PathLike) -> str:
    path = Path(path)
    if path.is_dir():
        return "showmap"
    if path.suffix.lower() == ".csv":
        return "csv"
    return "jsonl"


def iter_records(
    path: str | os.PathLike,
    fmt: FormatDescriptor | None = None,
    *,
    skip_bad: bool = False,
    stats: IngestStats | None = None,
) -> Iterator[IncidenceRecord]:
    """Stream records from a file or showmap directory."""
    fmt = fmt or FormatDescriptor(detect_format(path))
    if fmt.kind == "showmap":
        yield from parse_showmap_dir(path, skip_bad=skip_bad, stats=stats, prefix=fmt.species_prefix)
        return
    with open(path, encoding="utf-8", newline="") as fh:
        if fmt.kind == "csv":
            yield from parse_csv(
                fh, delimiter=fmt.delimiter, id_column=fmt.id_column,
                species_column=fmt.species_column, skip_bad=skip_bad, stats=stats,
                prefix=fmt.species_prefix, source=str(path),
            )
        else:
            yield from parse_jsonl(
                fh, skip_bad=skip_bad, stats=stats, prefix=fmt.species_prefix, source=str(path)
            )


def load_snapshot(path, fmt=None, *, skip_bad=False, stats=None) -> CampaignSnapshot:
    return Accumulator().extend(iter_records(path, fmt, skip_bad=skip_bad, stats=stats)).snapshot()


def record_to_json(record: IncidenceRecord) -> str:
    obj = {"id": record.input_id, "species": sorted(record.species)}
    if record.order is not None:
        obj["order"] = record.order
    return json.dumps(obj, separators=(",", ":"), ensure_ascii=False)


def emit_jsonl(records: Iterable[IncidenceRecord], out: IO[str]) -> int:
    """Write canonical JSONL; returns the number of records written."""
    count = 0
    for r in records:
        out.write(record_to_json(r))
        out.write("\n")
        count += 1
    return count


def dumps_jsonl(records: Iterable[IncidenceRecord]) -> str:
    buf = io.StringIO()
    emit_jsonl(records, buf)
    return buf.getvalue()


def input_digest(path: str | os.PathLike) -> str:
    """SHA-256 over a file's bytes, or over (name, bytes) of a directory's files."""
    h = hashlib.sha256()
    path = Path(path)
    if path.is_dir():
        for p in sorted((p for p in path.iterdir() if p.is_file()), key=lambda p: p.name):
            h.update(p.name.encode("utf-8") + b"\0")
            h.update(p.read_bytes())
            h.update(b"\0")
    else:
        with open(path, "rb") as fh:
            for block in iter(lambda: fh.read(1 << 16), b""):
                h.update(block)
    return "sha256:" + h.hexdigest()
