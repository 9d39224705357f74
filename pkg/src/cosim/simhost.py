"""Host a builtin simulator as a wire-protocol client process.

Usage: python -m cosim.simhost BUILTIN SID HOST PORT

Connects to the engine's listen port, sends the hello handshake, then
serves requests until stop.  This is how the engine's own simulators run
in `spawn` attachment mode, and the reference for writing simulators in
other languages.
"""

from __future__ import annotations

import socket
import sys

from .api import SimContext
from .channel import dispatch_to_simulator
from .errors import WireError
from .protocol import FrameSplitter, IdAllocator, Message, decode_message, encode_message
from .sims import make_builtin


def serve(kind: str, sid: str, host: str, port: int) -> int:
    sim = make_builtin(kind)
    sock = socket.socket(socket.AF_INET, socket.SOCK_STREAM)
    sock.connect((host, port))
    sock.setsockopt(socket.IPPROTO_TCP, socket.TCP_NODELAY, 1)
    ids = IdAllocator()
    sock.sendall(encode_message(Message.notify(ids.take(), "hello", {"sid": sid})))
    sim.bind(SimContext(
        warn=lambda message: print(f"[{sid}] warning: {message}", file=sys.stderr),
        set_event=lambda t: sock.sendall(encode_message(Message.notify(ids.take(), "set_event", {"time": t}))),
    ))

    splitter = FrameSplitter()
    stopping = False
    while not stopping:
        chunk = sock.recv(65536)
        if not chunk:
            break
        for frame in splitter.feed(chunk):
            msg = decode_message(frame)
            if msg.kind != "request":
                continue
            try:
                result = dispatch_to_simulator(sim, msg.method, msg.params or {})
                reply = Message.response(msg.id, result)
            except Exception as exc:
                reply = Message.error(msg.id, f"{type(exc).__name__}: {exc}")
            sock.sendall(encode_message(reply))
            if msg.method == "stop":
                stopping = True
    sock.close()
    return 0


def main(argv: list[str] | None = None) -> int:
    args = sys.argv[1:] if argv is None else argv
    if len(args) != 4:
        print("usage: python -m cosim.simhost BUILTIN SID HOST PORT", file=sys.stderr)
        return 64
    kind, sid, host, port = args
    try:
        return serve(kind, sid, host, int(port))
    except (OSError, WireError, KeyError) as exc:
        print(f"simhost {sid}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
