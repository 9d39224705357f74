"""Append-only run trace: the deterministic test surface of the scheduler.

Every scheduler action becomes one record.  Records are serialized as
line-delimited JSON with a fixed field order so two runs of the same
scenario produce byte-identical files.  Payload data appears as short
content digests; the full input bundles live in RunResult.dataflow for
oracle comparison.
"""

from __future__ import annotations

import hashlib
import json
import threading
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Iterable, Optional

ACTION_STEP = "step"
ACTION_GET_DATA = "get_data"
ACTION_SET_EVENT = "set_event"
ACTION_INJECT = "inject"
ACTION_ERROR = "error"

CAUSE_SELF = "self_scheduled"
CAUSE_TRIGGERED = "triggered"
CAUSE_EXTERNAL = "external"


def digest(payload: Any) -> str:
    """16-hex-char content digest over canonical JSON (sorted keys)."""
    canon = json.dumps(payload, sort_keys=True, separators=(",", ":"), ensure_ascii=False)
    return hashlib.sha256(canon.encode("utf-8")).hexdigest()[:16]


EMPTY_DIGEST = digest({})


@dataclass(frozen=True)
class TraceRecord:
    seq: int
    tick: int
    iteration: int
    sid: str
    action: str
    inputs_digest: Optional[str] = None
    outputs_digest: Optional[str] = None
    max_advance: Optional[int] = None
    next_step: Optional[int] = None
    causes: tuple[str, ...] = ()
    detail: Optional[str] = None

    def to_json_line(self) -> str:
        body = {
            "seq": self.seq,
            "tick": self.tick,
            "iteration": self.iteration,
            "sid": self.sid,
            "action": self.action,
            "inputs_digest": self.inputs_digest,
            "outputs_digest": self.outputs_digest,
            "max_advance": self.max_advance,
            "next_step": self.next_step,
            "causes": list(self.causes),
        }
        if self.detail is not None:
            body["detail"] = self.detail
        return json.dumps(body, ensure_ascii=False, separators=(", ", ": "))

    @staticmethod
    def from_json_line(line: str) -> "TraceRecord":
        raw = json.loads(line)
        return TraceRecord(
            seq=raw["seq"],
            tick=raw["tick"],
            iteration=raw["iteration"],
            sid=raw["sid"],
            action=raw["action"],
            inputs_digest=raw.get("inputs_digest"),
            outputs_digest=raw.get("outputs_digest"),
            max_advance=raw.get("max_advance"),
            next_step=raw.get("next_step"),
            causes=tuple(raw.get("causes", [])),
            detail=raw.get("detail"),
        )


class TraceLog:
    """Thread-safe append-only record log with change notification.

    The scheduler is the only writer; HTTP handlers and the SSE stream read
    snapshots by index.  Optionally tees each record to a JSONL file as it
    is appended.
    """

    def __init__(self, path: str | Path | None = None):
        self._records: list[TraceRecord] = []
        self._cond = threading.Condition()
        self._next_seq = 1
        self._file = open(path, "w", encoding="utf-8") if path else None
        self._closed = False

    def append(self, **fields) -> TraceRecord:
        with self._cond:
            record = TraceRecord(seq=self._next_seq, **fields)
            self._next_seq += 1
            self._records.append(record)
            if self._file:
                self._file.write(record.to_json_line() + "\n")
                self._file.flush()
            self._cond.notify_all()
        return record

    def close(self) -> None:
        with self._cond:
            self._closed = True
            if self._file:
                self._file.close()
                self._file = None
            self._cond.notify_all()

    @property
    def closed(self) -> bool:
        with self._cond:
            return self._closed

    def snapshot(self, after_seq: int = 0) -> list[TraceRecord]:
        with self._cond:
            return [r for r in self._records if r.seq > after_seq]

    def wait_for_more(self, after_seq: int, timeout: float) -> list[TraceRecord]:
        """Block up to timeout for records with seq > after_seq; may be empty."""
        with self._cond:
            if not any(r.seq > after_seq for r in self._records) and not self._closed:
                self._cond.wait(timeout)
            return [r for r in self._records if r.seq > after_seq]

    def __len__(self) -> int:
        with self._cond:
            return len(self._records)


def write_jsonl(records: Iterable[TraceRecord], path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for record in records:
            fh.write(record.to_json_line() + "\n")


def read_jsonl(path: str | Path) -> list[TraceRecord]:
    out = []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if line:
                out.append(TraceRecord.from_json_line(line))
    return out


@dataclass
class ReplayIssue:
    seq: int
    message: str


def replay_check(records: list[TraceRecord]) -> list[ReplayIssue]:
    """Offline validation of scheduler trace invariants.

    Checks: strictly increasing seq; records non-decreasing in superdense
    order per their emission; and max_advance safety: after a step of sid
    was granted max_advance m, no later non-external triggered step of sid
    may sit at a tick <= m.
    """
    issues: list[ReplayIssue] = []
    last_seq = 0
    last_when: tuple[int, int] | None = None
    granted: dict[str, list[tuple[int, int]]] = {}  # sid -> [(seq, max_advance)]
    for r in records:
        if r.seq <= last_seq:
            issues.append(ReplayIssue(r.seq, f"seq not strictly increasing at {r.seq}"))
        last_seq = r.seq
        when = (r.tick, r.iteration)
        if last_when is not None and when < last_when:
            issues.append(ReplayIssue(r.seq, f"superdense time regressed to {when} after {last_when}"))
        last_when = when
        if r.action != ACTION_STEP:
            continue
        if CAUSE_TRIGGERED in r.causes and CAUSE_EXTERNAL not in r.causes:
            for seq0, m in granted.get(r.sid, []):
                if r.tick <= m:
                    issues.append(ReplayIssue(
                        r.seq,
                        f"delivery to {r.sid} at tick {r.tick} violates max_advance {m} granted at seq {seq0}",
                    ))
        if r.max_advance is not None:
            granted.setdefault(r.sid, []).append((r.seq, r.max_advance))
    return issues
