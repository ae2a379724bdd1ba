"""
Shared canvas: an audited key-value dashboard for agents, tools and users.

Every agent works against one ``Canvas``. Values are restricted to a closed
tagged union (str, int, float, bool, list, dict with str keys, Path) so that
snapshots stay portable and diffable. Every mutation attempt, successful or
not, appends a ``ChangeRecord`` to the audit log.

Entry modes:
    - normal: anyone may overwrite with ``overwrite=True``
    - read-only: value fixed at creation
    - protected: only the creating actor may overwrite
    - format-restricted(schema): every value must satisfy a registered schema

Snapshot format (line-delimited UTF-8 text)::

    matscreen-canvas 1
    entry {"created_seq":1,"creator":"user",...}
    log {"actor":"user","key":"a","op":"write",...}
    end <n_entries> <n_records>

JSON payloads are written with sorted keys and fixed separators, so identical
canvas states give byte-identical files.
"""

from __future__ import annotations

import copy
import json
import logging
import re
import threading
from collections.abc import Callable
from dataclasses import dataclass, field
from datetime import datetime, timezone
from enum import Enum
from pathlib import Path
from typing import Any

from .errors import (
    AlreadyExists,
    ConstraintViolation,
    CorruptSnapshot,
    KeyNotFound,
    UnsupportedValue,
)

logger = logging.getLogger(__name__)

SNAPSHOT_HEADER = "matscreen-canvas 1"
SUMMARY_LIMIT = 200

_FILENAME_RE = re.compile(r"^[A-Za-z0-9_.+\-()]+\.[A-Za-z0-9]+$")


class EntryKind(str, Enum):
    """Access mode of a canvas entry."""

    NORMAL = "normal"
    READ_ONLY = "read-only"
    PROTECTED = "protected"
    FORMAT_RESTRICTED = "format-restricted"


def _is_filename_list(value: Any) -> bool:
    return isinstance(value, list) and all(
        isinstance(item, str) and _FILENAME_RE.match(item) is not None for item in value
    )


def _is_positive_number(value: Any) -> bool:
    return isinstance(value, (int, float)) and not isinstance(value, bool) and value > 0


SCHEMAS: dict[str, Callable[[Any], bool]] = {
    "filename-list": _is_filename_list,
    "positive-number": _is_positive_number,
}


@dataclass(frozen=True)
class EntryMode:
    """Access mode plus, for format-restricted entries, the schema id."""

    kind: EntryKind = EntryKind.NORMAL
    schema: str | None = None

    def __post_init__(self) -> None:
        if self.kind is EntryKind.FORMAT_RESTRICTED:
            if self.schema not in SCHEMAS:
                available = sorted(SCHEMAS.keys())
                raise KeyError(f"Unknown schema '{self.schema}'. Available: {available}")
        elif self.schema is not None:
            raise ValueError(f"Mode '{self.kind.value}' does not take a schema")

    @classmethod
    def normal(cls) -> EntryMode:
        return cls()

    @classmethod
    def read_only(cls) -> EntryMode:
        return cls(EntryKind.READ_ONLY)

    @classmethod
    def protected(cls) -> EntryMode:
        return cls(EntryKind.PROTECTED)

    @classmethod
    def format_restricted(cls, schema: str) -> EntryMode:
        return cls(EntryKind.FORMAT_RESTRICTED, schema)

    @property
    def label(self) -> str:
        if self.kind is EntryKind.FORMAT_RESTRICTED:
            return f"{self.kind.value}({self.schema})"
        return self.kind.value

    def accepts(self, value: Any) -> bool:
        if self.kind is not EntryKind.FORMAT_RESTRICTED or self.schema is None:
            return True
        return SCHEMAS[self.schema](value)


# Modes applied to well-known keys when they are first created.
DEFAULT_KEY_MODES: dict[str, EntryMode] = {
    "objective": EntryMode.read_only(),
    "plan": EntryMode.protected(),
    "past_steps": EntryMode.protected(),
    "job_list": EntryMode.format_restricted("filename-list"),
    "failed_jobs": EntryMode.format_restricted("filename-list"),
}


@dataclass
class CanvasEntry:
    """A keyed canvas cell."""

    key: str
    value: Any
    mode: EntryMode
    creator: str
    created_seq: int
    updated_seq: int


@dataclass(frozen=True)
class ChangeRecord:
    """One line of the canvas audit log."""

    seq: int
    timestamp: str
    actor: str
    op: str  # write | overwrite | rejected
    key: str
    summary: str


def _utc_now() -> str:
    return datetime.now(timezone.utc).isoformat(timespec="microseconds")


def check_value(value: Any, where: str = "value") -> None:
    """Raise UnsupportedValue unless ``value`` fits the canvas value model."""
    if value is None:
        raise UnsupportedValue(f"{where}: None is not a canvas value")
    if isinstance(value, (str, bool, int, float, Path)):
        return
    if isinstance(value, list):
        for i, item in enumerate(value):
            check_value(item, f"{where}[{i}]")
        return
    if isinstance(value, dict):
        for k, item in value.items():
            if not isinstance(k, str):
                raise UnsupportedValue(f"{where}: record keys must be strings, got {k!r}")
            check_value(item, f"{where}.{k}")
        return
    raise UnsupportedValue(f"{where}: unsupported type {type(value).__name__}")


def encode_value(value: Any) -> Any:
    """Tag a canvas value for JSON (s/b/i/f/p/l/d)."""
    if isinstance(value, bool):
        return {"b": value}
    if isinstance(value, int):
        return {"i": value}
    if isinstance(value, float):
        return {"f": value}
    if isinstance(value, str):
        return {"s": value}
    if isinstance(value, Path):
        return {"p": str(value)}
    if isinstance(value, list):
        return {"l": [encode_value(v) for v in value]}
    if isinstance(value, dict):
        return {"d": {k: encode_value(v) for k, v in value.items()}}
    raise UnsupportedValue(f"unsupported type {type(value).__name__}")


def decode_value(data: Any) -> Any:
    """Inverse of ``encode_value``."""
    if not isinstance(data, dict) or len(data) != 1:
        raise ValueError(f"malformed tagged value: {data!r}")
    (tag, raw), = data.items()
    if tag == "b" and isinstance(raw, bool):
        return raw
    if tag == "i" and isinstance(raw, int) and not isinstance(raw, bool):
        return raw
    if tag == "f" and isinstance(raw, (int, float)) and not isinstance(raw, bool):
        return float(raw)
    if tag == "s" and isinstance(raw, str):
        return raw
    if tag == "p" and isinstance(raw, str):
        return Path(raw)
    if tag == "l" and isinstance(raw, list):
        return [decode_value(v) for v in raw]
    if tag == "d" and isinstance(raw, dict):
        return {k: decode_value(v) for k, v in raw.items()}
    raise ValueError(f"malformed tagged value: {data!r}")


def _dumps(obj: Any) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"), ensure_ascii=True)


def _preview(value: Any) -> str:
    return _dumps(encode_value(value))


def _bounded(text: str) -> str:
    return text if len(text) <= SUMMARY_LIMIT else text[: SUMMARY_LIMIT - 3] + "..."


class Canvas:
    """
    Audited key-value store shared by all agents of a workflow.

    Mutations are serialized through an internal lock; reads may happen
    between mutations from any thread.

    Example:
        ```python
        canvas = Canvas()
        canvas.write("lattice", "bcc", actor="dft_agent")
        canvas.read("lattice")  # "bcc"
        canvas.inspect()        # ["lattice"]
        ```
    """

    def __init__(
        self,
        key_modes: dict[str, EntryMode] | None = None,
        clock: Callable[[], str] = _utc_now,
    ) -> None:
        self._entries: dict[str, CanvasEntry] = {}
        self._log: list[ChangeRecord] = []
        self._key_modes = dict(DEFAULT_KEY_MODES if key_modes is None else key_modes)
        self._clock = clock
        self._lock = threading.RLock()

    # ------------------------------------------------------------------ reads

    def inspect(self) -> list[str]:
        """Return all keys, sorted."""
        return sorted(self._entries)

    def read(self, key: str) -> Any:
        """Return a copy of the value stored under ``key``."""
        entry = self._entries.get(key)
        if entry is None:
            raise KeyNotFound(
                f"Key '{key}' is not on the canvas. Run inspect first to list available keys."
            )
        return copy.deepcopy(entry.value)

    def get(self, key: str, default: Any = None) -> Any:
        """Like ``read`` but returns ``default`` for missing keys."""
        if key not in self._entries:
            return default
        return self.read(key)

    def entry(self, key: str) -> CanvasEntry:
        """Return a copy of the full entry (value, mode, sequence numbers)."""
        if key not in self._entries:
            raise KeyNotFound(
                f"Key '{key}' is not on the canvas. Run inspect first to list available keys."
            )
        return copy.deepcopy(self._entries[key])

    @property
    def log(self) -> list[ChangeRecord]:
        """The audit log, oldest first."""
        return list(self._log)

    def __contains__(self, key: object) -> bool:
        return key in self._entries

    def __len__(self) -> int:
        return len(self._entries)

    # ----------------------------------------------------------------- writes

    def write(
        self,
        key: str,
        value: Any,
        overwrite: bool = False,
        actor: str = "user",
        mode: EntryMode | None = None,
    ) -> ChangeRecord:
        """
        Create or replace an entry.

        Args:
            key: Non-empty key.
            value: Canvas value (see module docstring).
            overwrite: Replace an existing value. Without it, existing keys are kept.
            actor: Agent or tool name, recorded in the log.
            mode: Mode for a newly created entry. Defaults to the configured
                mode for well-known keys, else normal. Ignored for existing keys.

        Returns:
            The ChangeRecord appended for this write.

        Raises:
            AlreadyExists: Key present and overwrite is False.
            ConstraintViolation: The entry's mode forbids this write.
            UnsupportedValue: Empty key or value outside the value model.
        """
        with self._lock:
            if not isinstance(key, str) or not key:
                raise UnsupportedValue("canvas keys must be non-empty strings")
            try:
                check_value(value)
            except UnsupportedValue as e:
                self._append(actor, "rejected", key, f"rejected {key}: {e}")
                raise

            entry = self._entries.get(key)
            if entry is None:
                new_mode = mode or self._key_modes.get(key, EntryMode())
                if not new_mode.accepts(value):
                    self._reject(actor, key, f"value does not match schema of {new_mode.label}")
                record = self._append(actor, "write", key, f"write {key} = {_preview(value)}")
                self._entries[key] = CanvasEntry(
                    key=key,
                    value=copy.deepcopy(value),
                    mode=new_mode,
                    creator=actor,
                    created_seq=record.seq,
                    updated_seq=record.seq,
                )
                return record

            if not overwrite:
                self._append(actor, "rejected", key, f"rejected {key}: already exists")
                raise AlreadyExists(
                    f"Key '{key}' already exists; pass overwrite=True to replace it."
                )
            kind = entry.mode.kind
            if kind is EntryKind.READ_ONLY:
                self._reject(actor, key, "entry is read-only")
            if kind is EntryKind.PROTECTED and actor != entry.creator:
                self._reject(
                    actor, key, f"entry is protected; only '{entry.creator}' may overwrite it"
                )
            if not entry.mode.accepts(value):
                self._reject(actor, key, f"value does not match schema of {entry.mode.label}")

            record = self._append(actor, "overwrite", key, f"overwrite {key} = {_preview(value)}")
            entry.value = copy.deepcopy(value)
            entry.updated_seq = record.seq
            return record

    def _reject(self, actor: str, key: str, reason: str) -> None:
        self._append(actor, "rejected", key, f"rejected {key}: {reason}")
        raise ConstraintViolation(f"Write to '{key}' rejected: {reason}")

    def _append(self, actor: str, op: str, key: str, summary: str) -> ChangeRecord:
        record = ChangeRecord(
            seq=len(self._log) + 1,
            timestamp=self._clock(),
            actor=actor,
            op=op,
            key=key,
            summary=_bounded(summary),
        )
        self._log.append(record)
        logger.debug("canvas %s %s by %s", op, key, actor)
        return record

    # -------------------------------------------------------------- snapshots

    def snapshot(self, path: Path) -> Path:
        """Write the canvas (entries and log) to ``path``."""
        with self._lock:
            lines = [SNAPSHOT_HEADER]
            for entry in self._entries.values():
                payload = {
                    "key": entry.key,
                    "value": encode_value(entry.value),
                    "mode": entry.mode.kind.value,
                    "schema": entry.mode.schema,
                    "creator": entry.creator,
                    "created_seq": entry.created_seq,
                    "updated_seq": entry.updated_seq,
                }
                lines.append("entry " + _dumps(payload))
            for record in self._log:
                payload = {
                    "seq": record.seq,
                    "timestamp": record.timestamp,
                    "actor": record.actor,
                    "op": record.op,
                    "key": record.key,
                    "summary": record.summary,
                }
                lines.append("log " + _dumps(payload))
            lines.append(f"end {len(self._entries)} {len(self._log)}")
            path = Path(path)
            path.parent.mkdir(parents=True, exist_ok=True)
            path.write_text("\n".join(lines) + "\n", encoding="utf-8")
        return path

    @classmethod
    def restore(
        cls,
        path: Path,
        key_modes: dict[str, EntryMode] | None = None,
        clock: Callable[[], str] = _utc_now,
    ) -> Canvas:
        """
        Rebuild a canvas from a snapshot file.

        Raises:
            FileNotFoundError: The snapshot does not exist.
            CorruptSnapshot: A record is malformed or the file is truncated;
                the error carries the 1-based line number of the first bad record.
        """
        text = Path(path).read_text(encoding="utf-8")
        lines = text.split("\n")
        if lines and lines[-1] == "":
            lines.pop()
        if not lines or lines[0] != SNAPSHOT_HEADER:
            raise CorruptSnapshot("missing or unknown snapshot header", 1)

        canvas = cls(key_modes=key_modes, clock=clock)
        finished = False
        for lineno, line in enumerate(lines[1:], start=2):
            if finished:
                raise CorruptSnapshot("content after end record", lineno)
            tag, _, body = line.partition(" ")
            try:
                if tag == "entry":
                    canvas._restore_entry(json.loads(body))
                elif tag == "log":
                    canvas._restore_record(json.loads(body))
                elif tag == "end":
                    n_entries, n_records = (int(x) for x in body.split())
                    if n_entries != len(canvas._entries) or n_records != len(canvas._log):
                        raise ValueError("record counts do not match end marker")
                    finished = True
                else:
                    raise ValueError(f"unknown record tag '{tag}'")
            except (ValueError, KeyError, TypeError) as e:
                raise CorruptSnapshot(f"invalid record: {e}", lineno) from e
        if not finished:
            raise CorruptSnapshot("snapshot truncated before end record", len(lines) + 1)
        return canvas

    def _restore_entry(self, payload: dict[str, Any]) -> None:
        key = payload["key"]
        if not isinstance(key, str) or not key or key in self._entries:
            raise ValueError(f"bad or duplicate key {key!r}")
        mode = EntryMode(EntryKind(payload["mode"]), payload["schema"])
        self._entries[key] = CanvasEntry(
            key=key,
            value=decode_value(payload["value"]),
            mode=mode,
            creator=str(payload["creator"]),
            created_seq=int(payload["created_seq"]),
            updated_seq=int(payload["updated_seq"]),
        )

    def _restore_record(self, payload: dict[str, Any]) -> None:
        seq = int(payload["seq"])
        if seq != len(self._log) + 1:
            raise ValueError(f"log sequence gap at seq {seq}")
        if payload["op"] not in ("write", "overwrite", "rejected"):
            raise ValueError(f"unknown op {payload['op']!r}")
        self._log.append(
            ChangeRecord(
                seq=seq,
                timestamp=str(payload["timestamp"]),
                actor=str(payload["actor"]),
                op=str(payload["op"]),
                key=str(payload["key"]),
                summary=str(payload["summary"]),
            )
        )

    # -------------------------------------------------------------- rendering

    def dump(self) -> str:
        """Human-readable listing of every entry, sorted by key."""
        lines = []
        for key in self.inspect():
            entry = self._entries[key]
            lines.append(f"{key} [{entry.mode.label}] = {_preview(entry.value)}")
        return "\n".join(lines)

    def format_log(self) -> str:
        """Human-readable audit log, oldest first."""
        return "\n".join(
            f"{r.seq:>5} {r.timestamp} {r.actor:<16} {r.op:<9} {r.key}: {r.summary}"
            for r in self._log
        )


@dataclass
class CanvasStats:
    """Counts surfaced by ``matscreen canvas log``."""

    writes: int = 0
    overwrites: int = 0
    rejected: int = 0
    by_actor: dict[str, int] = field(default_factory=dict)

    @classmethod
    def from_log(cls, log: list[ChangeRecord]) -> CanvasStats:
        stats = cls()
        for record in log:
            if record.op == "write":
                stats.writes += 1
            elif record.op == "overwrite":
                stats.overwrites += 1
            else:
                stats.rejected += 1
            stats.by_actor[record.actor] = stats.by_actor.get(record.actor, 0) + 1
        return stats
