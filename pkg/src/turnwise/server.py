"""Networked meeting hub: line-delimited JSON over TCP, WebSocket at /ws.

One listening socket serves both framings. A connection whose first bytes
form an HTTP GET is upgraded to a WebSocket (text frames, one JSON object
per frame, RFC 6455 server side implemented here on top of asyncio);
anything else is treated as a raw line-delimited JSON stream. Both paths
share the same frame vocabulary:

client -> server:
    {"type":"open","meeting":m}
    {"type":"join","meeting":m,"participant":p}
    {"type":"vad","meeting":m,"participant":p,"t_ms":t,"speaking":b}
    {"type":"finalize","meeting":m}
server -> client:
    {"type":"ack","op":...}            open/join/vad confirmations
    {"type":"err","code":...,"detail":...}
    {"type":"mm", ...}                 gauge snapshots (latest-wins delivery)
    {"type":"metrics","meeting":m,"data":{...}}

Snapshot delivery is latest-wins per meeting: a slow consumer never sees a
backlog, never stalls the tick loop, and always converges on the current
frame. Control frames (acks, errors, metrics) are delivered reliably in
order.
"""

from __future__ import annotations

import asyncio
import base64
import hashlib
import json
import time
from dataclasses import dataclass

from .errors import TurnwiseError, ValidationError
from .events import VoiceActivityEvent, event_from_obj
from .hub import STATUS_OPEN, MeetingHub
from .mediator import MediatorSnapshot

_WS_GUID = "258EAFA5-E914-47DA-95CA-C5AB0DC85B11"


# ---------------------------------------------------------------------------
# Transports


class NdjsonTransport:
    """Newline-delimited JSON over a plain socket."""

    def __init__(self, reader: asyncio.StreamReader, writer: asyncio.StreamWriter, first_line: bytes):
        self.reader = reader
        self.writer = writer
        self._first = first_line

    async def recv(self) -> str | None:
        if self._first is not None:
            line, self._first = self._first, None
            return line.decode("utf-8", "replace")
        try:
            data = await self.reader.readline()
        except (ConnectionError, asyncio.IncompleteReadError):
            return None
        if not data:
            return None
        return data.decode("utf-8", "replace")

    async def send(self, text: str) -> None:
        self.writer.write(text.encode() + b"\n")
        await self.writer.drain()

    async def close(self) -> None:
        self.writer.close()


class WebSocketTransport:
    """Server side of RFC 6455 text framing (after a completed handshake)."""

    def __init__(self, reader: asyncio.StreamReader, writer: asyncio.StreamWriter):
        self.reader = reader
        self.writer = writer
        self._closed = False

    async def recv(self) -> str | None:
        try:
            return await self._recv_message()
        except (asyncio.IncompleteReadError, ConnectionError):
            return None

    async def _recv_message(self) -> str | None:
        message = bytearray()
        while True:
            head = await self.reader.readexactly(2)
            fin = head[0] & 0x80
            opcode = head[0] & 0x0F
            masked = head[1] & 0x80
            length = head[1] & 0x7F
            if length == 126:
                length = int.from_bytes(await self.reader.readexactly(2), "big")
            elif length == 127:
                length = int.from_bytes(await self.reader.readexactly(8), "big")
            mask = await self.reader.readexactly(4) if masked else b""
            payload = await self.reader.readexactly(length) if length else b""
            if mask:
                payload = bytes(b ^ mask[i % 4] for i, b in enumerate(payload))
            if opcode == 0x8:  # close
                await self._send_raw(0x8, b"")
                return None
            if opcode == 0x9:  # ping
                await self._send_raw(0xA, payload)
                continue
            if opcode == 0xA:  # pong
                continue
            if opcode in (0x1, 0x2, 0x0):
                message.extend(payload)
                if fin:
                    return message.decode("utf-8", "replace")
                continue
            return None  # unknown opcode

    async def _send_raw(self, opcode: int, payload: bytes) -> None:
        if self._closed:
            return
        header = bytearray([0x80 | opcode])
        n = len(payload)
        if n < 126:
            header.append(n)
        elif n < 1 << 16:
            header.append(126)
            header.extend(n.to_bytes(2, "big"))
        else:
            header.append(127)
            header.extend(n.to_bytes(8, "big"))
        self.writer.write(bytes(header) + payload)
        await self.writer.drain()

    async def send(self, text: str) -> None:
        await self._send_raw(0x1, text.encode())

    async def close(self) -> None:
        self._closed = True
        self.writer.close()


async def _websocket_handshake(
    reader: asyncio.StreamReader, writer: asyncio.StreamWriter, request_line: bytes
) -> WebSocketTransport | None:
    """Read the upgrade request and answer 101; None if it is not a valid /ws upgrade."""
    try:
        parts = request_line.decode("latin-1").split()
        path = parts[1] if len(parts) >= 2 else ""
    except IndexError:
        path = ""
    headers: dict[str, str] = {}
    while True:
        line = await reader.readline()
        if not line or line in (b"\r\n", b"\n"):
            break
        if b":" in line:
            k, v = line.split(b":", 1)
            headers[k.decode("latin-1").strip().lower()] = v.decode("latin-1").strip()
    key = headers.get("sec-websocket-key")
    if path.split("?")[0] != "/ws" or not key:
        writer.write(b"HTTP/1.1 400 Bad Request\r\nConnection: close\r\n\r\n")
        await writer.drain()
        writer.close()
        return None
    accept = base64.b64encode(hashlib.sha1((key + _WS_GUID).encode()).digest()).decode()
    writer.write(
        b"HTTP/1.1 101 Switching Protocols\r\n"
        b"Upgrade: websocket\r\n"
        b"Connection: Upgrade\r\n"
        b"Sec-WebSocket-Accept: " + accept.encode() + b"\r\n\r\n"
    )
    await writer.drain()
    return WebSocketTransport(reader, writer)


# ---------------------------------------------------------------------------
# Connection handling


class _Outbox:
    """Reliable control frames plus a latest-wins slot per meeting."""

    def __init__(self):
        self.control: list[str] = []
        self.snapshots: dict[str, str] = {}
        self.wake = asyncio.Event()
        self.closed = False

    def push_control(self, text: str) -> None:
        self.control.append(text)
        self.wake.set()

    def push_snapshot(self, meeting_id: str, text: str) -> None:
        self.snapshots[meeting_id] = text
        self.wake.set()

    def close(self) -> None:
        self.closed = True
        self.wake.set()

    async def drain_to(self, transport) -> None:
        while True:
            await self.wake.wait()
            self.wake.clear()
            if self.closed:
                return
            while self.control or self.snapshots:
                if self.control:
                    text = self.control.pop(0)
                else:
                    meeting_id = next(iter(self.snapshots))
                    text = self.snapshots.pop(meeting_id)
                try:
                    await transport.send(text)
                except (ConnectionError, RuntimeError):
                    return


@dataclass
class ServerConfig:
    host: str = "127.0.0.1"
    port: int = 0
    time_scale: float = 1.0
    wall_ticks: bool = True


class MeetingServer:
    """Binds a MeetingHub to the socket protocol."""

    def __init__(self, hub: MeetingHub, config: ServerConfig | None = None):
        self.hub = hub
        self.config = config or ServerConfig()
        self._server: asyncio.AbstractServer | None = None
        self._tickers: dict[str, asyncio.Task] = {}

    @property
    def address(self) -> tuple[str, int]:
        assert self._server is not None
        sock = self._server.sockets[0]
        return sock.getsockname()[:2]

    async def start(self) -> None:
        self._server = await asyncio.start_server(
            self._handle_connection, self.config.host, self.config.port
        )

    async def stop(self) -> None:
        for task in self._tickers.values():
            task.cancel()
        for task in self._tickers.values():
            try:
                await task
            except asyncio.CancelledError:
                pass
        self._tickers.clear()
        if self._server is not None:
            self._server.close()
            await self._server.wait_closed()

    async def serve_forever(self) -> None:
        assert self._server is not None
        async with self._server:
            await self._server.serve_forever()

    # -- wall-clock tick loop ------------------------------------------------

    def _ensure_ticker(self, meeting_id: str) -> None:
        if not self.config.wall_ticks or meeting_id in self._tickers:
            return
        self._tickers[meeting_id] = asyncio.get_running_loop().create_task(
            self._tick_loop(meeting_id)
        )

    async def _tick_loop(self, meeting_id: str) -> None:
        tick_ms = self.hub.mediator_config.tick_ms
        scale = self.config.time_scale
        loop = asyncio.get_running_loop()
        t0 = loop.time()
        while True:
            session = self.hub.sessions.get(meeting_id)
            if session is None or session.status != STATUS_OPEN:
                return
            meeting_now = int((loop.time() - t0) * 1000.0 * scale)
            self.hub.tick_to(meeting_id, meeting_now)
            next_boundary = session.emitted_through + tick_ms
            await asyncio.sleep(max(0.001, (next_boundary - meeting_now) / 1000.0 / scale))

    # -- per-connection protocol ----------------------------------------------

    async def _handle_connection(self, reader: asyncio.StreamReader, writer: asyncio.StreamWriter) -> None:
        try:
            first = await reader.readline()
        except ConnectionError:
            writer.close()
            return
        if not first:
            writer.close()
            return
        if first.startswith(b"GET "):
            transport = await _websocket_handshake(reader, writer, first)
            if transport is None:
                return
        else:
            transport = NdjsonTransport(reader, writer, first)

        outbox = _Outbox()
        unsubscribes: dict[str, object] = {}
        writer_task = asyncio.get_running_loop().create_task(outbox.drain_to(transport))
        try:
            while True:
                line = await transport.recv()
                if line is None:
                    break
                line = line.strip()
                if not line:
                    continue
                response = self._handle_frame(line, outbox, unsubscribes)
                if response is not None:
                    outbox.push_control(json.dumps(response, separators=(",", ":")))
        finally:
            for unsub in unsubscribes.values():
                unsub()  # type: ignore[operator]
            outbox.close()
            await writer_task
            try:
                await transport.close()
            except (ConnectionError, RuntimeError):
                pass

    def _subscribe(self, meeting_id: str, outbox: _Outbox, unsubscribes: dict) -> None:
        if meeting_id in unsubscribes:
            return

        def deliver(snapshot: MediatorSnapshot) -> None:
            outbox.push_snapshot(meeting_id, snapshot.to_line())

        unsubscribes[meeting_id] = self.hub.subscribe(meeting_id, deliver)

    def _handle_frame(self, line: str, outbox: _Outbox, unsubscribes: dict) -> dict | None:
        try:
            frame = json.loads(line)
        except json.JSONDecodeError:
            return {"type": "err", "code": "malformed_json", "detail": "frame is not valid JSON"}
        if not isinstance(frame, dict):
            return {"type": "err", "code": "malformed_json", "detail": "frame is not a JSON object"}
        kind = frame.get("type")
        try:
            if kind == "open":
                meeting_id = _required_str(frame, "meeting")
                self.hub.open_meeting(meeting_id, started_at=int(time.time() * 1000))
                self._ensure_ticker(meeting_id)
                self._subscribe(meeting_id, outbox, unsubscribes)
                return {"type": "ack", "op": "open", "meeting": meeting_id}
            if kind == "join":
                meeting_id = _required_str(frame, "meeting")
                participant = _required_str(frame, "participant")
                roster = self.hub.join(meeting_id, participant)
                self._subscribe(meeting_id, outbox, unsubscribes)
                return {
                    "type": "ack", "op": "join", "meeting": meeting_id,
                    "participant": participant, "roster": roster,
                }
            if kind == "vad":
                event = _vad_event(frame)
                seq = self.hub.ingest(event.meeting_id, event)
                return {"type": "ack", "op": "vad", "meeting": event.meeting_id, "seq": seq}
            if kind == "finalize":
                meeting_id = _required_str(frame, "meeting")
                metrics = self.hub.finalize(meeting_id)
                return {"type": "metrics", "meeting": meeting_id, "data": metrics.to_dict()}
        except TurnwiseError as exc:
            return {"type": "err", "code": exc.code, "detail": exc.message}
        return {"type": "err", "code": "unknown_type", "detail": f"unsupported frame type {kind!r}"}


def _required_str(frame: dict, key: str) -> str:
    value = frame.get(key)
    if not isinstance(value, str) or not value:
        raise ValidationError("missing_field", f"frame needs a nonempty string {key!r}")
    return value


def _vad_event(frame: dict) -> VoiceActivityEvent:
    return event_from_obj(frame)
