"""TCP transport for remote simulators.

The engine is the listening side: simulator processes connect to its
listen port and introduce themselves with a `hello` notify carrying their
sid.  One reader thread per connection drains frames continually so
`set_event` notifies reach the scheduler inbox even while no request is in
flight; requests themselves stay strictly one-at-a-time per simulator.
"""

from __future__ import annotations

import logging
import queue
import socket
import subprocess
import threading
from typing import Any, Callable

from .channel import SimRequestError
from .errors import WireError
from .protocol import (
    FrameSplitter,
    IdAllocator,
    Message,
    NOTIFY,
    decode_message,
    encode_message,
)

log = logging.getLogger("cosim.remote")

HANDSHAKE_TIMEOUT = 10.0
REQUEST_TIMEOUT = 60.0


class PeerConnection:
    """Engine-side proxy for one connected simulator process."""

    def __init__(self, sock: socket.socket, server: "SimServer"):
        self._sock = sock
        self._server = server
        self._ids = IdAllocator()
        self._responses: queue.Queue[Message] = queue.Queue()
        self._splitter = FrameSplitter()
        self._closed = threading.Event()
        self._send_lock = threading.Lock()
        self.sid: str | None = None
        self._reader = threading.Thread(target=self._read_loop, daemon=True)
        self._reader.start()

    def request(self, method: str, params: dict, timeout: float = REQUEST_TIMEOUT) -> Any:
        msg = Message.request(self._ids.take(), method, params)
        with self._send_lock:
            self._sock.sendall(encode_message(msg))
        try:
            reply = self._responses.get(timeout=timeout)
        except queue.Empty:
            raise WireError(f"timeout waiting for response to {method!r} from {self.sid!r}") from None
        if reply.kind == "error":
            raise SimRequestError(reply.message or "remote error")
        if reply.id != msg.id:
            raise WireError(f"response id {reply.id} does not match request id {msg.id}")
        return reply.result

    def close(self) -> None:
        if not self._closed.is_set():
            self._closed.set()
            try:
                self._sock.shutdown(socket.SHUT_RDWR)
            except OSError:
                pass
            self._sock.close()

    def _read_loop(self) -> None:
        try:
            while not self._closed.is_set():
                chunk = self._sock.recv(65536)
                if not chunk:
                    break
                for frame in self._splitter.feed(chunk):
                    self._handle(decode_message(frame))
        except (OSError, WireError) as exc:
            if not self._closed.is_set():
                log.debug("connection to %r dropped: %s", self.sid, exc)
        finally:
            self._closed.set()
            # unblock a waiting request with a synthetic error
            self._responses.put(Message.error(0, f"connection to {self.sid!r} closed"))

    def _handle(self, msg: Message) -> None:
        if msg.kind in ("response", "error"):
            self._responses.put(msg)
        elif msg.kind == NOTIFY:
            if msg.method == "hello":
                self._server._register(self, str(msg.params.get("sid", "")))
            elif msg.method == "set_event":
                self._server._on_set_event(self.sid, msg.params.get("time"))
            else:
                log.warning("ignoring unknown notify %r from %r", msg.method, self.sid)
        else:
            log.warning("ignoring unexpected %s frame from %r", msg.kind, self.sid)


class SimServer:
    """Listen socket accepting simulator connections, keyed by hello sid."""

    def __init__(self, host: str = "127.0.0.1", port: int = 0):
        self._sock = socket.socket(socket.AF_INET, socket.SOCK_STREAM)
        self._sock.setsockopt(socket.SOL_SOCKET, socket.SO_REUSEADDR, 1)
        self._sock.bind((host, port))
        self._sock.listen(16)
        self.host, self.port = self._sock.getsockname()
        self._peers: dict[str, PeerConnection] = {}
        self._anonymous: list[PeerConnection] = []
        self._cond = threading.Condition()
        self._closed = False
        self.set_event_handler: Callable[[str, Any], None] | None = None
        self._acceptor = threading.Thread(target=self._accept_loop, daemon=True)
        self._acceptor.start()

    def wait_for(self, sid: str, timeout: float = HANDSHAKE_TIMEOUT) -> PeerConnection:
        with self._cond:
            ok = self._cond.wait_for(lambda: sid in self._peers or self._closed, timeout)
            if not ok or sid not in self._peers:
                raise WireError(f"handshake timeout: no hello from {sid!r} within {timeout}s")
            return self._peers[sid]

    def close(self) -> None:
        with self._cond:
            self._closed = True
            peers = list(self._peers.values()) + list(self._anonymous)
            self._cond.notify_all()
        for peer in peers:
            peer.close()
        try:
            self._sock.close()
        except OSError:
            pass

    def _accept_loop(self) -> None:
        while True:
            try:
                conn, _addr = self._sock.accept()
            except OSError:
                return
            conn.setsockopt(socket.IPPROTO_TCP, socket.TCP_NODELAY, 1)
            with self._cond:
                if self._closed:
                    conn.close()
                    return
                self._anonymous.append(PeerConnection(conn, self))

    def _register(self, peer: PeerConnection, sid: str) -> None:
        with self._cond:
            peer.sid = sid
            if peer in self._anonymous:
                self._anonymous.remove(peer)
            if sid in self._peers:
                log.warning("duplicate hello for sid %r, dropping new connection", sid)
                peer.close()
                return
            self._peers[sid] = peer
            self._cond.notify_all()

    def _on_set_event(self, sid: str | None, time: Any) -> None:
        handler = self.set_event_handler
        if handler is None or sid is None:
            log.warning("set_event from %r dropped: no run in progress", sid)
            return
        handler(sid, time)


class SpawnedProcess:
    """A simulator process we started; killed on close."""

    def __init__(self, argv: list[str], sid: str, host: str, port: int):
        full = list(argv) + [sid, host, str(port)]
        try:
            self.proc = subprocess.Popen(full)
        except OSError as exc:
            raise WireError(f"failed to spawn {full!r}: {exc}") from exc

    def close(self) -> None:
        if self.proc.poll() is None:
            self.proc.terminate()
            try:
                self.proc.wait(timeout=5)
            except subprocess.TimeoutExpired:
                self.proc.kill()
                self.proc.wait(timeout=5)
