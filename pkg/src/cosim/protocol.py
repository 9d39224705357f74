"""Wire codec: newline-delimited UTF-8 JSON, one message per line.

Message grammar:
    {"id": <uint>, "kind": "request"|"response"|"error"|"notify",
     "method": <str, requests/notifies>, "params": <object, requests/notifies>,
     "result": <any, responses>, "message": <str, errors>}

Frames end in a single LF; no line may exceed 16 MiB.  Ids are unique and
monotonically increasing per direction.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Any

from .errors import WireError

MAX_FRAME_BYTES = 16 * 1024 * 1024

REQUEST = "request"
RESPONSE = "response"
ERROR = "error"
NOTIFY = "notify"
KINDS = (REQUEST, RESPONSE, ERROR, NOTIFY)

REQUEST_METHODS = ("init", "create", "step", "get_data", "stop")
NOTIFY_METHODS = ("hello", "set_event")


@dataclass(frozen=True)
class Message:
    id: int
    kind: str
    method: str | None = None
    params: dict | None = None
    result: Any = None
    message: str | None = None

    @staticmethod
    def request(msg_id: int, method: str, params: dict) -> "Message":
        return Message(id=msg_id, kind=REQUEST, method=method, params=params)

    @staticmethod
    def response(msg_id: int, result: Any) -> "Message":
        return Message(id=msg_id, kind=RESPONSE, result=result)

    @staticmethod
    def error(msg_id: int, message: str) -> "Message":
        return Message(id=msg_id, kind=ERROR, message=message)

    @staticmethod
    def notify(msg_id: int, method: str, params: dict) -> "Message":
        return Message(id=msg_id, kind=NOTIFY, method=method, params=params)


def encode_message(msg: Message) -> bytes:
    """One LF-terminated UTF-8 line; key order is fixed for stable frames."""
    _check_shape(msg.kind, msg.method, msg.params, msg.result, msg.message, msg.id)
    body: dict[str, Any] = {"id": msg.id, "kind": msg.kind}
    if msg.kind in (REQUEST, NOTIFY):
        body["method"] = msg.method
        body["params"] = msg.params
    elif msg.kind == RESPONSE:
        body["result"] = msg.result
    else:
        body["message"] = msg.message
    line = json.dumps(body, ensure_ascii=False, separators=(", ", ": ")) + "\n"
    data = line.encode("utf-8")
    if len(data) > MAX_FRAME_BYTES:
        raise WireError(f"frame exceeds {MAX_FRAME_BYTES} bytes")
    return data


def decode_message(data: bytes) -> Message:
    """Parse one frame; raises WireError with the offending byte offset."""
    if len(data) > MAX_FRAME_BYTES:
        raise WireError(f"frame exceeds {MAX_FRAME_BYTES} bytes", offset=MAX_FRAME_BYTES)
    if not data.endswith(b"\n"):
        raise WireError("frame must end in LF", offset=len(data))
    try:
        text = data.decode("utf-8")
    except UnicodeDecodeError as exc:
        raise WireError(f"frame is not valid UTF-8: {exc.reason}", offset=exc.start) from exc
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise WireError(f"malformed JSON: {exc.msg}", offset=exc.pos) from exc
    if not isinstance(raw, dict):
        raise WireError("frame must be a JSON object", offset=0)
    msg_id = raw.get("id")
    if not isinstance(msg_id, int) or isinstance(msg_id, bool) or msg_id < 0:
        raise WireError(f"id must be a non-negative integer, got {msg_id!r}", offset=0)
    kind = raw.get("kind")
    try:
        _check_shape(kind, raw.get("method"), raw.get("params"), raw.get("result"), raw.get("message"), msg_id)
    except WireError:
        raise
    return Message(
        id=msg_id,
        kind=kind,
        method=raw.get("method"),
        params=raw.get("params"),
        result=raw.get("result"),
        message=raw.get("message"),
    )


def _check_shape(kind, method, params, result, message, msg_id) -> None:
    if kind not in KINDS:
        raise WireError(f"kind must be one of {KINDS}, got {kind!r}", offset=0)
    if kind in (REQUEST, NOTIFY):
        if not isinstance(method, str) or not method:
            raise WireError(f"{kind} must carry a method string", offset=0)
        if not isinstance(params, dict):
            raise WireError(f"{kind} must carry a params object", offset=0)
    elif kind == ERROR:
        if not isinstance(message, str):
            raise WireError("error must carry a message string", offset=0)


class FrameSplitter:
    """Incremental splitter turning a byte stream into LF-terminated frames."""

    def __init__(self):
        self._buf = bytearray()

    def feed(self, chunk: bytes) -> list[bytes]:
        self._buf.extend(chunk)
        if len(self._buf) > MAX_FRAME_BYTES and b"\n" not in self._buf:
            raise WireError(f"line exceeds {MAX_FRAME_BYTES} bytes", offset=MAX_FRAME_BYTES)
        frames = []
        while True:
            idx = self._buf.find(b"\n")
            if idx < 0:
                break
            frames.append(bytes(self._buf[: idx + 1]))
            del self._buf[: idx + 1]
        return frames

    @property
    def pending(self) -> bytes:
        return bytes(self._buf)


@dataclass
class IdAllocator:
    """Monotonically increasing per-direction message ids."""

    next_id: int = 1

    def take(self) -> int:
        value = self.next_id
        self.next_id += 1
        return value


def inputs_to_wire(inputs: dict[str, dict[str, list[tuple[str, Any]]]]) -> dict:
    return {
        eid: {attr: [[src, value] for src, value in pairs] for attr, pairs in by_attr.items()}
        for eid, by_attr in inputs.items()
    }


def inputs_from_wire(raw: Any) -> dict[str, dict[str, list[tuple[str, Any]]]]:
    if not isinstance(raw, dict):
        raise WireError("step inputs must be an object")
    out: dict[str, dict[str, list[tuple[str, Any]]]] = {}
    for eid, by_attr in raw.items():
        if not isinstance(by_attr, dict):
            raise WireError(f"inputs[{eid!r}] must be an object")
        attrs: dict[str, list[tuple[str, Any]]] = {}
        for attr, pairs in by_attr.items():
            if not isinstance(pairs, list) or not pairs:
                raise WireError(f"inputs[{eid!r}][{attr!r}] must be a non-empty list")
            entries = []
            for pair in pairs:
                if not isinstance(pair, (list, tuple)) or len(pair) != 2 or not isinstance(pair[0], str):
                    raise WireError(f"inputs[{eid!r}][{attr!r}] entries must be [source_full_id, value] pairs")
                entries.append((pair[0], pair[1]))
            attrs[attr] = entries
        out[eid] = attrs
    return out
