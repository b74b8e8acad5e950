"""Streaming session server.

Wire protocol (version 1): TCP, each message a 4-byte big-endian length
prefix followed by that many bytes of UTF-8 JSON. One client at a time; a
new connection after a drop resumes the same session. The session starts
paused. Inbound message types: hello, gaze, command. Outbound: hello_ack,
tick, gaze_ack, ack, state, error. Frame pixels travel as
zlib-compressed base64 of row-major uint8 (intensity scaled by 255).
"""

from __future__ import annotations

import base64
import json
import queue
import socket
import struct
import threading
import time
import zlib
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .attention import GazeSample
from .errors import GazeScanError
from .runtime import SimulationLoop, canonical_line
from .scenario import Scenario

PROTOCOL_VERSION = 1
_LEN = struct.Struct(">I")
MAX_MESSAGE_BYTES = 8 << 20


class ProtocolError(GazeScanError):
    pass


def send_message(sock: socket.socket, obj: dict) -> None:
    data = canonical_line(obj).encode("utf-8")
    sock.sendall(_LEN.pack(len(data)) + data)


def recv_message(sock: socket.socket) -> Optional[dict]:
    """One length-prefixed JSON message, or None on orderly EOF."""
    head = _recv_exact(sock, 4)
    if head is None:
        return None
    (n,) = _LEN.unpack(head)
    if n > MAX_MESSAGE_BYTES:
        raise ProtocolError(f"message of {n} bytes exceeds limit")
    body = _recv_exact(sock, n)
    if body is None:
        raise ProtocolError("connection closed mid-message")
    try:
        return json.loads(body.decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise ProtocolError(f"bad message payload: {exc}")


def _recv_exact(sock, n):
    buf = b""
    while len(buf) < n:
        try:
            chunk = sock.recv(n - len(buf))
        except (ConnectionResetError, OSError):
            return None
        if not chunk:
            return None
        buf += chunk
    return buf


def encode_frame_u8(values: np.ndarray) -> str:
    u8 = np.clip(np.rint(values * 255.0), 0, 255).astype(np.uint8)
    return base64.b64encode(zlib.compress(u8.tobytes(), 6)).decode("ascii")


def decode_frame_u8(payload: str, depth_px: int, width_px: int) -> np.ndarray:
    raw = zlib.decompress(base64.b64decode(payload))
    return np.frombuffer(raw, dtype=np.uint8).reshape(depth_px, width_px)


def tick_message(out, geom) -> dict:
    """Wire form of one simulation tick (record payload + pixel planes)."""
    return {
        "type": "tick",
        "protocol": PROTOCOL_VERSION,
        "payload": out.record_line,
        "width_px": geom.width_px,
        "depth_px": geom.depth_px,
        "pixel_pitch_mm": geom.pixel_pitch_mm,
        "frame_u8": encode_frame_u8(out.frame.intensity),
        "confidence_u8": encode_frame_u8(out.cmap.values),
        "attention_u8": encode_frame_u8(
            out.stabilized.values / max(float(out.stabilized.values.max()), 1e-12)
        ),
        "selected_mask_rle": _mask_rle(out),
    }


def _mask_rle(out) -> Optional[list[int]]:
    # Flat run-length encoding, starting with a zero run; None when nothing selected.
    if out.seg.selected is None:
        return None
    flat = out.seg.candidates[out.seg.selected].mask.ravel()
    edges = np.flatnonzero(np.diff(flat))
    runs = np.diff(np.concatenate([[0], edges + 1, [flat.size]]))
    rle = runs.tolist()
    if flat[0]:
        rle = [0] + rle
    return rle


@dataclass
class _Client:
    sock: socket.socket
    outbox: "queue.Queue[Optional[dict]]"


class SessionServer:
    """One scenario, one simulation thread, at most one client.

    The simulation thread owns all mutable state; socket readers only
    enqueue. Pacing follows the scenario tick rate in real time. While
    paused, gaze is still accepted (buffered into the current window) so
    an operator can keep looking at the scene before pressing start.
    """

    def __init__(self, scenario: Scenario, host: str = "127.0.0.1", port: int = 0):
        self.scenario = scenario
        self.loop = SimulationLoop(scenario)
        self.host = host
        self.port = port
        self.running = False  # paused until a start command
        self.finished = False
        self._listener: Optional[socket.socket] = None
        self._client: Optional[_Client] = None
        self._client_lock = threading.Lock()
        self._inbox: "queue.Queue[tuple[str, dict]]" = queue.Queue()
        self._gaze_buffer: list[GazeSample] = []
        self.gaze_dropped_late = 0
        self._stop = threading.Event()
        self._threads: list[threading.Thread] = []

    # -- lifecycle ---------------------------------------------------------

    def start(self) -> tuple[str, int]:
        self._listener = socket.create_server((self.host, self.port))
        self._listener.settimeout(0.2)
        self.host, self.port = self._listener.getsockname()[:2]
        for fn in (self._accept_loop, self._sim_loop):
            th = threading.Thread(target=fn, daemon=True, name=fn.__name__)
            th.start()
            self._threads.append(th)
        return self.host, self.port

    def stop(self) -> None:
        self._stop.set()
        with self._client_lock:
            client = self._client
        if client is not None:
            client.outbox.put(None)
        for th in self._threads:
            th.join(timeout=2.0)
        if self._listener is not None:
            self._listener.close()
        self._drop_client()

    def serve_forever(self) -> None:
        try:
            while not self._stop.is_set():
                time.sleep(0.1)
        except KeyboardInterrupt:
            pass
        finally:
            self.stop()

    # -- socket side -------------------------------------------------------

    def _accept_loop(self):
        while not self._stop.is_set():
            try:
                sock, _addr = self._listener.accept()
            except socket.timeout:
                continue
            except OSError:
                return
            with self._client_lock:
                if self._client is not None:
                    # single-client policy: refuse the newcomer politely
                    try:
                        send_message(sock, {
                            "type": "error",
                            "error": "busy",
                            "detail": "session already has a client",
                        })
                        sock.close()
                    except OSError:
                        pass
                    continue
                sock.setsockopt(socket.IPPROTO_TCP, socket.TCP_NODELAY, 1)
                client = _Client(sock=sock, outbox=queue.Queue(maxsize=256))
                self._client = client
            threading.Thread(target=self._reader, args=(client,), daemon=True).start()
            threading.Thread(target=self._sender, args=(client,), daemon=True).start()

    def _reader(self, client: _Client):
        try:
            while not self._stop.is_set():
                try:
                    msg = recv_message(client.sock)
                except ProtocolError as exc:
                    self._send(client, {"type": "error", "error": "protocol", "detail": str(exc)})
                    break
                if msg is None:
                    break
                self._inbox.put(("msg", msg))
        finally:
            self._drop_client(client)

    def _sender(self, client: _Client):
        while not self._stop.is_set():
            item = client.outbox.get()
            if item is None:
                return
            try:
                send_message(client.sock, item)
            except OSError:
                self._drop_client(client)
                return

    def _send(self, client: Optional[_Client], obj: dict) -> None:
        if client is None:
            return
        try:
            client.outbox.put_nowait(obj)
        except queue.Full:
            # slow consumer: drop the connection rather than stall the sim
            self._drop_client(client)

    def _drop_client(self, client: Optional[_Client] = None) -> None:
        with self._client_lock:
            if client is not None and self._client is not client:
                return
            current, self._client = self._client, None
        if current is not None:
            current.outbox.put(None)
            try:
                current.sock.close()
            except OSError:
                pass

    # -- simulation side ---------------------------------------------------

    def _state_message(self) -> dict:
        return {
            "type": "state",
            "running": self.running,
            "finished": self.finished,
            "tick": self.loop.tick_index,
            "duration_ticks": self.scenario.duration_ticks,
            "correction": self.loop.control_params.correction,
            "gaze_dropped_late": self.gaze_dropped_late,
        }

    def _handle_message(self, msg: dict, client: Optional[_Client]) -> None:
        kind = msg.get("type")
        if kind == "hello":
            want = msg.get("protocol")
            if want != PROTOCOL_VERSION:
                self._send(client, {
                    "type": "error", "error": "version",
                    "detail": f"protocol {want} unsupported (server speaks {PROTOCOL_VERSION})",
                })
                return
            self._send(client, {
                "type": "hello_ack",
                "protocol": PROTOCOL_VERSION,
                "scenario": self.scenario.to_dict(),
                "scenario_sha256": self.scenario.sha256(),
                "state": self._state_message(),
            })
        elif kind == "gaze":
            samples = msg.get("samples", [])
            added = 0
            for s in samples:
                try:
                    self._gaze_buffer.append(GazeSample(
                        t=self.loop.tick_index,
                        x=float(s["x"]), y=float(s["y"]),
                        valid=bool(s.get("valid", True)),
                    ))
                    added += 1
                except (KeyError, TypeError, ValueError):
                    pass
            self._send(client, {
                "type": "gaze_ack",
                "received": added,
                "tick": self.loop.tick_index,
                "client_seq": msg.get("seq"),
            })
        elif kind == "command":
            self._handle_command(msg, client)
        else:
            self._send(client, {
                "type": "error", "error": "unknown_type",
                "detail": f"unsupported message type {kind!r}",
            })

    def _handle_command(self, msg: dict, client: Optional[_Client]) -> None:
        name = msg.get("name")
        ok = True
        detail = None
        if name == "start":
            if self.finished:
                ok, detail = False, "session finished"
            else:
                self.running = True
        elif name == "pause":
            self.running = False
        elif name == "reset":
            self.loop = SimulationLoop(self.scenario)
            self.running = False
            self.finished = False
            self._gaze_buffer.clear()
            self.gaze_dropped_late = 0
        elif name == "toggle_correction":
            self.loop.set_correction(not self.loop.control_params.correction)
        elif name == "set_correction":
            self.loop.set_correction(bool(msg.get("value", True)))
        elif name == "set_params":
            import dataclasses

            known = {f.name for f in dataclasses.fields(self.loop.control_params)}
            changes = {k: v for k, v in (msg.get("params") or {}).items() if k in known}
            rejected = sorted(set(msg.get("params") or {}) - known)
            if rejected:
                ok, detail = False, f"unknown params: {', '.join(rejected)}"
            else:
                try:
                    self.loop.control_params = dataclasses.replace(
                        self.loop.control_params, **changes
                    )
                except (TypeError, ValueError) as exc:
                    ok, detail = False, str(exc)
        else:
            ok, detail = False, f"unknown command {name!r}"
        reply = {"type": "ack", "command": name, "ok": ok, "state": self._state_message()}
        if detail:
            reply["detail"] = detail
        self._send(client, reply)

    def _sim_loop(self):
        period = self.scenario.dt
        next_due = time.monotonic()
        while not self._stop.is_set():
            try:
                _tag, msg = self._inbox.get(timeout=0.02)
                with self._client_lock:
                    client = self._client
                self._handle_message(msg, client)
                continue  # drain control traffic before advancing time
            except queue.Empty:
                pass
            if not self.running or self.finished:
                next_due = time.monotonic()
                continue
            now = time.monotonic()
            if now < next_due:
                time.sleep(min(next_due - now, 0.02))
                continue
            gaze, self._gaze_buffer = self._gaze_buffer, []
            # samples are stamped with the tick current at arrival; anything
            # staler than one tick by consumption time is dropped and counted
            now_tick = self.loop.tick_index
            fresh = [s for s in gaze if s.t >= now_tick - 1]
            self.gaze_dropped_late += len(gaze) - len(fresh)
            # scripted sources keep their own feed; client gaze drives "live" only
            inject = fresh if self.scenario.gaze.source == "live" else None
            out = self.loop.tick(injected_gaze=inject)
            with self._client_lock:
                client = self._client
            if client is not None:
                self._send(client, tick_message(out, self.scenario.geometry))
            next_due += period
            if self.loop.tick_index >= self.scenario.duration_ticks:
                self.finished = True
                self.running = False
                if client is not None:
                    self._send(client, self._state_message())
