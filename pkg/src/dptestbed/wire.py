"""Lockstep wire protocol: framed JSON over one TCP connection.

Framing: every message is a 4-byte big-endian length followed by that many
bytes of UTF-8 JSON. The JSON is canonical (sorted keys, no whitespace,
shortest-repr floats, NaN forbidden), so a given session replays
byte-identically.

Message kinds:

    HELLO  {"gamma", "h", "kind", "lambda", "m", "role", "version"}
    STATE  {"eta": [6], "kind", "nu": [6], "t"}          full scale
    CMD    {"alpha": [m], "kind", "t", "u": [m]}         full scale, kN / rad
    PARAM  {"kind", "params": {...}}
    ACK    {"detail", "kind", "ok", "ref"}
    BYE    {"kind", "reason"}

Session rules: both ends open with HELLO (plant first); afterwards STATE and
CMD strictly alternate, and a CMD must answer the pending STATE with the
identical timestamp. Any deviation raises ProtocolViolation and ends the
session. PARAM may be sent while a CMD is pending; it is acknowledged inline
and does not discharge the pending STATE.
"""

from __future__ import annotations

import json
import socket
import struct

import numpy as np

PROTOCOL_VERSION = 1
MAX_FRAME = 1 << 20
KINDS = ("HELLO", "STATE", "CMD", "PARAM", "ACK", "BYE")


class ProtocolViolation(RuntimeError):
    """Peer broke the framing, schema, or lockstep alternation."""


class WireTimeout(RuntimeError):
    """Peer did not answer within the session timeout."""


def _plain(value):
    if isinstance(value, (np.floating, float)):
        v = float(value)
        if not np.isfinite(v):
            raise ProtocolViolation(f"non-finite value on the wire: {value!r}")
        return v
    if isinstance(value, (np.integer, int)):
        return int(value)
    if isinstance(value, (list, tuple, np.ndarray)):
        return [_plain(v) for v in value]
    if isinstance(value, dict):
        return {str(k): _plain(v) for k, v in value.items()}
    if isinstance(value, (str, bool)) or value is None:
        return value
    raise ProtocolViolation(f"unsupported wire value {value!r}")


def encode_message(msg: dict) -> bytes:
    """Canonical frame bytes for one message."""
    body = json.dumps(
        _plain(msg), sort_keys=True, separators=(",", ":"), allow_nan=False
    ).encode("utf-8")
    if len(body) > MAX_FRAME:
        raise ProtocolViolation(f"frame of {len(body)} bytes exceeds cap")
    return struct.pack(">I", len(body)) + body


def decode_body(body: bytes) -> dict:
    try:
        msg = json.loads(body.decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise ProtocolViolation(f"undecodable frame: {exc}") from None
    if not isinstance(msg, dict) or msg.get("kind") not in KINDS:
        raise ProtocolViolation(f"frame without a valid kind: {msg!r}")
    return msg


def make_hello(role: str, lam: float = 1.0, gamma: float = 1.0,
               m: int = 4, h: float = 0.5) -> dict:
    return {
        "kind": "HELLO", "version": PROTOCOL_VERSION, "role": role,
        "lambda": float(lam), "gamma": float(gamma), "m": int(m), "h": float(h),
    }


def make_state(t: float, eta, nu) -> dict:
    return {"kind": "STATE", "t": float(t),
            "eta": [float(v) for v in eta], "nu": [float(v) for v in nu]}


def make_cmd(t: float, u, alpha) -> dict:
    return {"kind": "CMD", "t": float(t),
            "u": [float(v) for v in u], "alpha": [float(v) for v in alpha]}


def make_param(params: dict) -> dict:
    return {"kind": "PARAM", "params": _plain(params)}


def make_ack(ref: str, ok: bool, detail: str = "") -> dict:
    return {"kind": "ACK", "ref": ref, "ok": bool(ok), "detail": detail}


def make_bye(reason: str = "") -> dict:
    return {"kind": "BYE", "reason": reason}


class MessageStream:
    """Framed message transport over a connected socket.

    `tap(direction, frame_bytes)` observes raw traffic ('>' sent, '<'
    received) for conformance capture.
    """

    def __init__(self, sock: socket.socket, timeout: float = 5.0, tap=None):
        self.sock = sock
        self.sock.settimeout(timeout)
        self.tap = tap

    def send(self, msg: dict) -> None:
        frame = encode_message(msg)
        if self.tap:
            self.tap(">", frame)
        self.sock.sendall(frame)

    def _recv_exact(self, n: int) -> bytes:
        chunks = []
        got = 0
        while got < n:
            try:
                chunk = self.sock.recv(n - got)
            except socket.timeout:
                raise WireTimeout(f"no data within timeout ({n - got} bytes pending)")
            if not chunk:
                raise ProtocolViolation("connection closed mid-frame")
            chunks.append(chunk)
            got += len(chunk)
        return b"".join(chunks)

    def recv(self) -> dict:
        header = self._recv_exact(4)
        (length,) = struct.unpack(">I", header)
        if length > MAX_FRAME:
            raise ProtocolViolation(f"announced frame of {length} bytes exceeds cap")
        body = self._recv_exact(length)
        if self.tap:
            self.tap("<", header + body)
        return decode_body(body)

    def close(self) -> None:
        try:
            self.sock.shutdown(socket.SHUT_RDWR)
        except OSError:
            pass
        self.sock.close()


def check_hello(msg: dict, expect_role: str) -> dict:
    if msg.get("kind") != "HELLO":
        raise ProtocolViolation(f"expected HELLO, got {msg.get('kind')!r}")
    if msg.get("version") != PROTOCOL_VERSION:
        raise ProtocolViolation(
            f"protocol version mismatch: {msg.get('version')!r} "
            f"vs {PROTOCOL_VERSION}"
        )
    if msg.get("role") != expect_role:
        raise ProtocolViolation(f"expected role {expect_role!r}, got {msg.get('role')!r}")
    for key in ("lambda", "gamma", "m", "h"):
        if key not in msg:
            raise ProtocolViolation(f"HELLO missing field {key!r}")
    return msg
