"""Driving a live session over the wire protocol.

Starts the session server in-process, connects a TCP client, and walks
the message flow a UI would use: hello, start, stream ticks, inject gaze,
flip correction, read state.
"""

import socket

from gazescan.scenario import GazeConfig, preset
from gazescan.server import (
    PROTOCOL_VERSION,
    SessionServer,
    decode_frame_u8,
    recv_message,
    send_message,
)

sc = preset("lateral_offset")
sc.duration_ticks = 90
sc.gaze = GazeConfig(source="live")  # gaze comes from the client, not a script

server = SessionServer(sc)
host, port = server.start()
print(f"server listening on {host}:{port}")

sock = socket.create_connection((host, port), timeout=5.0)
sock.settimeout(5.0)


def rpc(obj, want):
    send_message(sock, obj)
    while True:
        msg = recv_message(sock)
        if msg["type"] == want:
            return msg


ack = rpc({"type": "hello", "protocol": PROTOCOL_VERSION}, "hello_ack")
print(f"hello_ack: scenario {ack['scenario']['name']}, "
      f"{ack['state']['duration_ticks']} ticks, paused={not ack['state']['running']}")

# Gaze sent while paused is buffered into the upcoming tick.
rpc({"type": "gaze", "seq": 1, "samples": [{"x": 168.0, "y": 40.0}] * 3}, "gaze_ack")
rpc({"type": "command", "name": "start"}, "ack")

ticks_seen = 0
selected = 0
while True:
    msg = recv_message(sock)
    if msg["type"] == "tick":
        ticks_seen += 1
        line = msg["payload"]
        if line["selected_id"] is not None:
            selected += 1
        if ticks_seen == 1:
            frame = decode_frame_u8(msg["frame_u8"], msg["depth_px"], msg["width_px"])
            print(f"first tick: frame {frame.shape}, "
                  f"{len(line['gaze'])} gaze samples applied, "
                  f"candidates {[c['id'] for c in line['candidates']]}")
        if ticks_seen == 30:
            # keep staring at the vessel so the selection sticks
            send_message(sock, {"type": "gaze", "seq": 2,
                                "samples": [{"x": 168.0, "y": 40.0}] * 2})
        if ticks_seen == 45:
            send_message(sock, {"type": "command", "name": "toggle_correction"})
    elif msg["type"] == "ack":
        print(f"ack mid-stream: {msg['command']} -> correction={msg['state']['correction']}")
    elif msg["type"] == "state" and msg["finished"]:
        print(f"session finished at tick {msg['tick']}; "
              f"{selected}/{ticks_seen} streamed ticks had a selection")
        break

sock.close()
server.stop()
print("done")
